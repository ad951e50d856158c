//! Binary beam patterns: which receive beams carry a sub-block's energy.

use ndarray::{Array2, ArrayView1};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Set of active beams, stored as a bitset.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BeamPattern {
    len: usize,
    words: Vec<u64>,
}

impl BeamPattern {
    pub fn empty(len: usize) -> Self {
        Self {
            len,
            words: vec![0; len.div_ceil(64)],
        }
    }

    pub fn full(len: usize) -> Self {
        let mut p = Self::empty(len);
        (0..len).for_each(|b| p.set(b, true));
        p
    }

    pub fn from_bools(bits: &[bool]) -> Self {
        let mut p = Self::empty(bits.len());
        for (b, &on) in bits.iter().enumerate() {
            p.set(b, on);
        }
        p
    }

    pub fn from_beams(len: usize, beams: &[usize]) -> Self {
        let mut p = Self::empty(len);
        beams.iter().for_each(|&b| p.set(b, true));
        p
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    pub fn get(&self, beam: usize) -> bool {
        (self.words[beam / 64] >> (beam % 64)) & 1 == 1
    }

    pub fn set(&mut self, beam: usize, on: bool) {
        let bit = 1u64 << (beam % 64);
        if on {
            self.words[beam / 64] |= bit;
        } else {
            self.words[beam / 64] &= !bit;
        }
    }

    /// Number of active beams, `||f||_1`.
    pub fn count(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    /// `f . g^T != 0`.
    pub fn overlaps(&self, other: &BeamPattern) -> bool {
        self.words.iter().zip(&other.words).any(|(a, b)| a & b != 0)
    }

    pub fn active_beams(&self) -> Vec<usize> {
        (0..self.len).filter(|&b| self.get(b)).collect()
    }

    pub fn to_bools(&self) -> Vec<bool> {
        (0..self.len).map(|b| self.get(b)).collect()
    }
}

/// Gaussian model `N(mean, std^2)` of beam magnitudes in one class.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MagnitudeClass {
    pub mean: f64,
    pub std: f64,
}

impl MagnitudeClass {
    fn log_pdf(&self, x: f64) -> f64 {
        let z = (x - self.mean) / self.std;
        -0.5 * z * z - self.std.ln()
    }
}

/// Active (`high`) and inactive (`low`) magnitude classes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PatternPriors {
    pub high: MagnitudeClass,
    pub low: MagnitudeClass,
}

impl PatternPriors {
    /// Top- and bottom-quartile statistics of the pooled magnitudes.
    pub fn from_quartiles(mags: &[f64]) -> Self {
        let mut sorted = mags.to_vec();
        sorted.sort_by(f64::total_cmp);
        let q = (sorted.len() / 4).max(1).min(sorted.len());
        let low = stats(&sorted[..q]);
        let high = stats(&sorted[sorted.len() - q..]);
        let floor = std_floor(&sorted);
        Self {
            high: MagnitudeClass {
                mean: high.0,
                std: high.1.max(floor),
            },
            low: MagnitudeClass {
                mean: low.0,
                std: low.1.max(floor),
            },
        }
    }

    /// Decision `P_high(x) >= P_low(x)`, restricted to magnitudes above the
    /// inactive mean so that the wider class cannot claim near-zero values.
    pub fn is_active(&self, x: f64) -> bool {
        x > self.low.mean && self.high.log_pdf(x) >= self.low.log_pdf(x)
    }

    /// One refinement round: classify, then refit each non-empty class.
    pub fn refine(&self, mags: &[f64]) -> Self {
        let (hi, lo): (Vec<f64>, Vec<f64>) = mags.iter().partition(|&&x| self.is_active(x));
        let floor = std_floor(mags);
        let fit = |vals: &[f64], prior: MagnitudeClass| {
            if vals.is_empty() {
                prior
            } else {
                let (m, s) = stats(vals);
                MagnitudeClass {
                    mean: m,
                    std: s.max(floor),
                }
            }
        };
        Self {
            high: fit(&hi, self.high),
            low: fit(&lo, self.low),
        }
    }
}

fn stats(vals: &[f64]) -> (f64, f64) {
    if vals.is_empty() {
        return (0.0, 0.0);
    }
    let n = vals.len() as f64;
    let mean = vals.iter().sum::<f64>() / n;
    let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

fn std_floor(mags: &[f64]) -> f64 {
    let max = mags.iter().cloned().fold(0.0, f64::max);
    (1e-6 * max).max(1e-12)
}

/// Beam patterns for the rows of `estimates` (one detected sub-block per row).
///
/// Magnitudes of all rows are pooled to fit the two classes; `priors`
/// overrides the quartile initialisation. A row with energy whose pattern
/// comes out empty keeps its strongest beam.
pub fn estimate_beam_patterns(
    estimates: &Array2<Complex64>,
    priors: Option<PatternPriors>,
) -> (Vec<BeamPattern>, PatternPriors) {
    let mags: Vec<f64> = estimates.iter().map(|z| z.norm()).collect();
    let init = priors.unwrap_or_else(|| PatternPriors::from_quartiles(&mags));
    let fitted = if mags.is_empty() { init } else { init.refine(&mags) };
    let patterns = estimates
        .rows()
        .into_iter()
        .map(|row| pattern_from_row(row, &fitted))
        .collect();
    (patterns, fitted)
}

pub fn pattern_from_row(row: ArrayView1<'_, Complex64>, priors: &PatternPriors) -> BeamPattern {
    let mags: Vec<f64> = row.iter().map(|z| z.norm()).collect();
    let bits: Vec<bool> = mags.iter().map(|&m| priors.is_active(m)).collect();
    let mut p = BeamPattern::from_bools(&bits);
    if p.is_empty() {
        if let Some((arg, &max)) = mags.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)) {
            if max > 0.0 {
                p.set(arg, true);
            }
        }
    }
    p
}
