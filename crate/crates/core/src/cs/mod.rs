//! Inner compressed-sensing layer: codebook, slot synthesis, AMP recovery,
//! activity detection and beam-pattern estimation.

pub mod amp;
pub mod codebook;
pub mod detect;
pub mod patterns;

use std::collections::BTreeMap;

use ndarray::{Array1, Array2, ArrayView1, Axis};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

pub use amp::{amp_gm_decode, AmpConfig, AmpOutput, GmPrior};
pub use codebook::{generate_codebook, synthesize_slot, Codebook};
pub use detect::{detect_active, mrc_statistic, row_norm, EpsilonRule};
pub use patterns::{estimate_beam_patterns, BeamPattern, MagnitudeClass, PatternPriors};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct CsConfig {
    pub amp: AmpConfig,
    pub epsilon: EpsilonRule,
    /// Fixed beam-magnitude classes; `None` fits them per slot.
    pub pattern_priors: Option<PatternPriors>,
}

impl CsConfig {
    pub fn validate(&self) -> Result<()> {
        self.amp.validate()?;
        self.epsilon.validate()
    }
}

/// What the CS layer hands to the outer decoders for one sub-slot.
#[derive(Debug, Clone)]
pub struct CsSlotOutput {
    indices: Vec<u32>,
    estimates: Array2<Complex64>,
    patterns: Vec<BeamPattern>,
    /// Full recovered matrix, when produced by AMP.
    pub x_hat: Option<Array2<Complex64>>,
    pub diverged: bool,
    pub epsilon: Option<f64>,
}

impl CsSlotOutput {
    /// Builds a slot output; entries are reordered by ascending index.
    pub fn from_parts(indices: Vec<u32>, estimates: Array2<Complex64>, patterns: Vec<BeamPattern>) -> Result<Self> {
        let k = indices.len();
        if estimates.nrows() != k || patterns.len() != k {
            return Err(Error::Length {
                what: "slot estimates/patterns",
                expected: k,
                got: estimates.nrows().min(patterns.len()),
            });
        }
        let mut order: Vec<usize> = (0..k).collect();
        order.sort_by_key(|&i| indices[i]);
        if order.windows(2).any(|w| indices[w[0]] == indices[w[1]]) {
            return Err(Error::Domain("duplicate index in slot output".into()));
        }
        let n_rf = estimates.ncols();
        let mut est = Array2::zeros((k, n_rf));
        for (dst, &src) in order.iter().enumerate() {
            est.row_mut(dst).assign(&estimates.row(src));
        }
        Ok(Self {
            indices: order.iter().map(|&i| indices[i]).collect(),
            estimates: est,
            patterns: order.iter().map(|&i| patterns[i].clone()).collect(),
            x_hat: None,
            diverged: false,
            epsilon: None,
        })
    }

    /// Ideal detector: the distinct transmitted indices, each carrying the
    /// sum of the true channels of the users that sent it, with patterns
    /// from the usual decision rule.
    pub fn oracle(sent: &[u32], channels: &Array2<Complex64>, priors: Option<PatternPriors>) -> Result<Self> {
        if channels.nrows() != sent.len() {
            return Err(Error::Length {
                what: "channel rows",
                expected: sent.len(),
                got: channels.nrows(),
            });
        }
        let n_rf = channels.ncols();
        let mut sums: BTreeMap<u32, Array1<Complex64>> = BTreeMap::new();
        for (&idx, h) in sent.iter().zip(channels.axis_iter(Axis(0))) {
            *sums.entry(idx).or_insert_with(|| Array1::zeros(n_rf)) += &h;
        }
        let indices: Vec<u32> = sums.keys().copied().collect();
        let mut est = Array2::zeros((indices.len(), n_rf));
        for (mut row, h) in est.axis_iter_mut(Axis(0)).zip(sums.values()) {
            row.assign(h);
        }
        let (patterns, _) = estimate_beam_patterns(&est, priors);
        Self::from_parts(indices, est, patterns)
    }

    pub fn indices(&self) -> &[u32] {
        &self.indices
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn n_rf(&self) -> usize {
        self.estimates.ncols()
    }

    pub fn estimates(&self) -> &Array2<Complex64> {
        &self.estimates
    }

    pub fn patterns(&self) -> &[BeamPattern] {
        &self.patterns
    }

    pub fn position(&self, index: u32) -> Option<usize> {
        self.indices.binary_search(&index).ok()
    }

    pub fn contains(&self, index: u32) -> bool {
        self.position(index).is_some()
    }

    pub fn estimate(&self, pos: usize) -> ArrayView1<'_, Complex64> {
        self.estimates.row(pos)
    }

    pub fn pattern(&self, pos: usize) -> &BeamPattern {
        &self.patterns[pos]
    }

    /// Drops `index` from the detections (simulated packet loss).
    pub fn remove(&mut self, index: u32) -> bool {
        let Some(pos) = self.position(index) else {
            return false;
        };
        self.indices.remove(pos);
        self.patterns.remove(pos);
        let keep: Vec<usize> = (0..self.estimates.nrows()).filter(|&r| r != pos).collect();
        self.estimates = self.estimates.select(Axis(0), &keep);
        true
    }
}

/// Runs AMP, detection and pattern estimation on one received slot.
pub fn process_slot(y: &Array2<Complex64>, codebook: &Codebook, cfg: &CsConfig) -> Result<CsSlotOutput> {
    cfg.validate()?;
    let prior = cfg.amp.initial_prior(y, codebook.size())?;
    let amp = amp_gm_decode(y, codebook, &prior, &cfg.amp)?;
    let eps = cfg.epsilon.resolve(&amp.x_hat, &amp.tau2);
    let indices = detect_active(&amp.x_hat, eps)?;
    let rows: Vec<usize> = indices.iter().map(|&i| i as usize).collect();
    let est = amp.x_hat.select(Axis(0), &rows);
    let (patterns, _) = estimate_beam_patterns(&est, cfg.pattern_priors);
    let mut out = CsSlotOutput::from_parts(indices, est, patterns)?;
    out.x_hat = Some(amp.x_hat);
    out.diverged = amp.diverged;
    out.epsilon = Some(eps);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use codebook::complex_normal;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn from_parts_sorts_and_rejects_duplicates() {
        let est = Array2::from_shape_fn((2, 2), |(r, _)| Complex64::new(r as f64, 0.0));
        let pats = vec![BeamPattern::full(2), BeamPattern::empty(2)];
        let out = CsSlotOutput::from_parts(vec![9, 3], est.clone(), pats.clone()).unwrap();
        assert_eq!(out.indices(), &[3, 9]);
        assert_eq!(out.estimate(0)[0], Complex64::new(1.0, 0.0));
        assert!(out.pattern(0).is_empty());
        assert!(CsSlotOutput::from_parts(vec![3, 3], est, pats).is_err());
    }

    #[test]
    fn oracle_sums_colliding_users() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let h = Array2::from_shape_simple_fn((3, 4), || complex_normal(&mut rng, 1.0));
        let out = CsSlotOutput::oracle(&[5, 2, 5], &h, None).unwrap();
        assert_eq!(out.indices(), &[2, 5]);
        let expect = &h.row(0) + &h.row(2);
        assert_eq!(out.estimate(1), expect.view());
    }

    #[test]
    fn remove_drops_entry() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let h = Array2::from_shape_simple_fn((3, 4), || complex_normal(&mut rng, 1.0));
        let mut out = CsSlotOutput::oracle(&[1, 2, 3], &h, None).unwrap();
        assert!(out.remove(2));
        assert!(!out.remove(2));
        assert_eq!(out.indices(), &[1, 3]);
        assert_eq!(out.estimate(1), h.row(2));
    }
}
