//! Clustered mmWave uplink channel and the grouped-DFT receive beamformer.
//!
//! A user's antenna-domain channel is the superposition of `clusters x subpaths`
//! plane waves impinging on a half-wavelength ULA. The base station cannot
//! steer toward unknown users, so it combines groups of consecutive DFT beams
//! into `n_rf` wide beams that tile the whole angular range; the beam-domain
//! channel is the projection of the antenna-domain channel on those beams.

use std::f64::consts::{FRAC_PI_2, PI};

use ndarray::{Array1, Array2, Axis};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{config_err, Error, Result};

/// Antenna spacing in wavelengths.
pub const SPACING_WAVELENGTHS: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelConfig {
    /// Number of receive antennas.
    pub n_r: usize,
    /// Number of RF chains (beams after combining).
    pub n_rf: usize,
    /// Scattering clusters per user.
    pub clusters: usize,
    /// Sub-paths per cluster.
    pub subpaths: usize,
    /// Half-width of the intra-cluster angle-of-arrival spread, radians.
    pub angular_spread: f64,
}

impl Default for ChannelConfig {
    fn default() -> Self {
        Self {
            n_r: 256,
            n_rf: 16,
            clusters: 3,
            subpaths: 10,
            angular_spread: 7.5_f64.to_radians(),
        }
    }
}

impl ChannelConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_r == 0 || self.n_rf == 0 {
            return Err(config_err("antenna and RF-chain counts must be positive"));
        }
        if !self.n_r.is_multiple_of(self.n_rf) {
            return Err(config_err(format!(
                "antenna count {} is not a multiple of the RF-chain count {}",
                self.n_r, self.n_rf
            )));
        }
        if self.clusters == 0 || self.subpaths == 0 {
            return Err(config_err("need at least one cluster and one sub-path"));
        }
        if !(self.angular_spread >= 0.0 && self.angular_spread <= PI) {
            return Err(config_err("angular spread must lie in [0, pi]"));
        }
        Ok(())
    }

    /// DFT beams merged into one RF beam.
    pub fn group_size(&self) -> usize {
        self.n_r / self.n_rf
    }
}

/// ULA response toward `theta` (radians, broadside = 0).
///
/// Element `i` uses the symmetric half-integer offset `m = i - (n_r - 1)/2`.
pub fn steering_vector(theta: f64, n_r: usize) -> Result<Array1<Complex64>> {
    if !(-FRAC_PI_2..=FRAC_PI_2).contains(&theta) {
        return Err(Error::Domain(format!("angle of arrival {theta} outside [-pi/2, pi/2]")));
    }
    Ok(steering_unchecked(theta.sin(), n_r))
}

fn steering_unchecked(sin_theta: f64, n_r: usize) -> Array1<Complex64> {
    let center = (n_r as f64 - 1.0) / 2.0;
    Array1::from_shape_fn(n_r, |i| {
        let m = i as f64 - center;
        Complex64::from_polar(1.0, -2.0 * PI * SPACING_WAVELENGTHS * sin_theta * m)
    })
}

/// Receive combiner `W̄` (`n_r x n_rf`) with unit-norm columns.
#[derive(Debug, Clone)]
pub struct BeamformingMatrix {
    matrix: Array2<Complex64>,
    gammas: Vec<f64>,
    /// Sine of the direction each RF beam is centred on.
    centers: Vec<f64>,
}

impl BeamformingMatrix {
    pub fn matrix(&self) -> &Array2<Complex64> {
        &self.matrix
    }

    /// Per-column scaling applied to the summed DFT beams.
    pub fn gammas(&self) -> &[f64] {
        &self.gammas
    }

    pub fn n_r(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn n_rf(&self) -> usize {
        self.matrix.ncols()
    }

    /// `sin(theta)` at the centre of RF beam `beam`.
    pub fn beam_center_sin(&self, beam: usize) -> f64 {
        self.centers[beam]
    }

    /// `W̄^H h`.
    pub fn to_beam_domain(&self, h: &Array1<Complex64>) -> Array1<Complex64> {
        self.matrix.t().mapv(|w| w.conj()).dot(h)
    }
}

/// Builds the grouped DFT combiner: DFT beam `i` (1-based) points at
/// `arcsin((2i - 1)/n_r - 1)` and every `n_r / n_rf` consecutive beams are summed
/// and rescaled to unit norm.
pub fn build_beamforming_matrix(n_r: usize, n_rf: usize) -> Result<BeamformingMatrix> {
    if n_r == 0 || n_rf == 0 || !n_r.is_multiple_of(n_rf) {
        return Err(config_err(format!("cannot group {n_r} DFT beams into {n_rf} RF beams")));
    }
    let group = n_r / n_rf;
    let norm = 1.0 / (n_r as f64).sqrt();
    let mut matrix = Array2::<Complex64>::zeros((n_r, n_rf));
    let mut gammas = Vec::with_capacity(n_rf);
    let mut centers = Vec::with_capacity(n_rf);
    for col in 0..n_rf {
        let mut sum = Array1::<Complex64>::zeros(n_r);
        let mut sin_acc = 0.0;
        for k in 0..group {
            let i = col * group + k + 1;
            let sin_theta = (2.0 * i as f64 - 1.0) / n_r as f64 - 1.0;
            sin_acc += sin_theta;
            sum.scaled_add(Complex64::new(norm, 0.0), &steering_unchecked(sin_theta, n_r));
        }
        let energy: f64 = sum.iter().map(|z| z.norm_sqr()).sum();
        let gamma = 1.0 / energy.sqrt();
        sum.mapv_inplace(|z| z * gamma);
        matrix.column_mut(col).assign(&sum);
        gammas.push(gamma);
        centers.push(sin_acc / group as f64);
    }
    Ok(BeamformingMatrix {
        matrix,
        gammas,
        centers,
    })
}

/// One user's channel, held fixed over all sub-slots of a transmission.
#[derive(Debug, Clone)]
pub struct ChannelRealization {
    pub gains: Vec<Complex64>,
    pub aoas: Vec<f64>,
    /// Cluster centre angles, one per cluster.
    pub cluster_centers: Vec<f64>,
    pub h: Array1<Complex64>,
    pub h_beam: Array1<Complex64>,
}

/// Channel generator bound to one array/combiner geometry.
#[derive(Debug, Clone)]
pub struct ChannelModel {
    cfg: ChannelConfig,
    beamformer: BeamformingMatrix,
}

impl ChannelModel {
    pub fn new(cfg: ChannelConfig) -> Result<Self> {
        cfg.validate()?;
        let beamformer = build_beamforming_matrix(cfg.n_r, cfg.n_rf)?;
        Ok(Self { cfg, beamformer })
    }

    pub fn config(&self) -> &ChannelConfig {
        &self.cfg
    }

    pub fn beamformer(&self) -> &BeamformingMatrix {
        &self.beamformer
    }

    /// Assembles a realization from explicit sub-path gains and angles.
    pub fn realize(&self, gains: Vec<Complex64>, aoas: Vec<f64>) -> Result<ChannelRealization> {
        if gains.len() != aoas.len() {
            return Err(Error::Length {
                what: "sub-path gains",
                expected: aoas.len(),
                got: gains.len(),
            });
        }
        let mut h = Array1::<Complex64>::zeros(self.cfg.n_r);
        for (&beta, &theta) in gains.iter().zip(&aoas) {
            h.scaled_add(beta, &steering_vector(theta, self.cfg.n_r)?);
        }
        let h_beam = self.beamformer.to_beam_domain(&h);
        Ok(ChannelRealization {
            gains,
            aoas,
            cluster_centers: Vec::new(),
            h,
            h_beam,
        })
    }

    /// Draws a clustered channel: uniform cluster centres, uniform sub-path
    /// offsets within the angular spread, `CN(0, 1/(P_c Q_p))` sub-path gains.
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> ChannelRealization {
        let paths = self.cfg.clusters * self.cfg.subpaths;
        let std = (0.5 / paths as f64).sqrt();
        let mut gains = Vec::with_capacity(paths);
        let mut aoas = Vec::with_capacity(paths);
        let mut centers = Vec::with_capacity(self.cfg.clusters);
        for _ in 0..self.cfg.clusters {
            let center = rng.random_range(-FRAC_PI_2..=FRAC_PI_2);
            centers.push(center);
            for _ in 0..self.cfg.subpaths {
                let offset = if self.cfg.angular_spread > 0.0 {
                    rng.random_range(-self.cfg.angular_spread..=self.cfg.angular_spread)
                } else {
                    0.0
                };
                aoas.push((center + offset).clamp(-FRAC_PI_2, FRAC_PI_2));
                let re: f64 = StandardNormal.sample(rng);
                let im: f64 = StandardNormal.sample(rng);
                gains.push(Complex64::new(re * std, im * std));
            }
        }
        let mut real = self
            .realize(gains, aoas)
            .expect("sampled angles are clamped into range");
        real.cluster_centers = centers;
        real
    }
}

/// Convenience wrapper building the model on every call.
pub fn draw_channel<R: Rng + ?Sized>(cfg: &ChannelConfig, rng: &mut R) -> Result<ChannelRealization> {
    Ok(ChannelModel::new(cfg.clone())?.draw(rng))
}

/// Stacks beam-domain channels into a `users x n_rf` matrix.
pub fn stack_beam_channels(channels: &[ChannelRealization], n_rf: usize) -> Array2<Complex64> {
    let mut out = Array2::zeros((channels.len(), n_rf));
    for (mut row, ch) in out.axis_iter_mut(Axis(0)).zip(channels) {
        row.assign(&ch.h_beam);
    }
    out
}
