//! Column-wise complex AMP with a spike-plus-Gaussian-mixture denoiser whose
//! parameters are re-learned by EM after every iteration.

use ndarray::{Array2, Zip};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::codebook::{energy, Codebook};
use crate::error::{config_err, Error, Result};

const RHO_MIN: f64 = 1e-6;
const RHO_MAX: f64 = 0.999;
const WEIGHT_MIN: f64 = 1e-6;

/// Bernoulli-Gaussian-mixture prior on each entry of `X`:
/// `(1 - rho) delta(x) + rho sum_i omega_i CN(x; mu_i, nu_i)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GmPrior {
    pub rho: f64,
    pub weights: Vec<f64>,
    pub means: Vec<Complex64>,
    pub variances: Vec<f64>,
}

impl GmPrior {
    /// Zero-mean components with variances spread geometrically around `scale`.
    pub fn initial(rho: f64, components: usize, scale: f64) -> Result<Self> {
        if components == 0 {
            return Err(config_err("mixture needs at least one component"));
        }
        let scale = scale.max(f64::MIN_POSITIVE);
        let variances = (0..components)
            .map(|i| {
                let exp = i as f64 - (components as f64 - 1.0) / 2.0;
                scale * 10f64.powf(exp)
            })
            .collect();
        let prior = Self {
            rho: rho.clamp(RHO_MIN, RHO_MAX),
            weights: vec![1.0 / components as f64; components],
            means: vec![Complex64::new(0.0, 0.0); components],
            variances,
        };
        prior.validate()?;
        Ok(prior)
    }

    pub fn components(&self) -> usize {
        self.weights.len()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.weights.len();
        if n == 0 || self.means.len() != n || self.variances.len() != n {
            return Err(config_err("mixture parameter lists disagree in length"));
        }
        if !(self.rho > 0.0 && self.rho < 1.0) {
            return Err(config_err(format!("sparsity rate {} outside (0, 1)", self.rho)));
        }
        let sum: f64 = self.weights.iter().sum();
        if (sum - 1.0).abs() > 1e-9 || self.weights.iter().any(|&w| w < 0.0) {
            return Err(config_err("mixture weights must lie on the simplex"));
        }
        if self.variances.iter().any(|&v| !(v > 0.0)) {
            return Err(config_err("mixture variances must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AmpConfig {
    pub max_iters: usize,
    /// Weight given to the new estimate when blending iterates.
    pub damping: f64,
    pub tol: f64,
    pub components: usize,
    /// Guess of the number of nonzero rows used to seed the sparsity rate;
    /// `None` uses `4 * N_RF`.
    pub active_guess: Option<usize>,
    /// Whether to run EM updates of the prior.
    pub learn_prior: bool,
}

impl Default for AmpConfig {
    fn default() -> Self {
        Self {
            max_iters: 30,
            damping: 0.7,
            tol: 1e-6,
            components: 3,
            active_guess: None,
            learn_prior: true,
        }
    }
}

impl AmpConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_iters == 0 {
            return Err(config_err("AMP needs at least one iteration"));
        }
        if !(self.damping > 0.0 && self.damping <= 1.0) {
            return Err(config_err(format!("damping {} outside (0, 1]", self.damping)));
        }
        if !(self.tol >= 0.0) {
            return Err(config_err("tolerance must be nonnegative"));
        }
        if self.components == 0 {
            return Err(config_err("mixture needs at least one component"));
        }
        Ok(())
    }

    /// Data-driven starting prior for measurements `y`.
    pub fn initial_prior(&self, y: &Array2<Complex64>, n: usize) -> Result<GmPrior> {
        let cols = y.ncols().max(1);
        let guess = self.active_guess.unwrap_or(4 * cols).max(1);
        let rho = (guess as f64 / n as f64).clamp(RHO_MIN, 0.5);
        let scale = energy(y.iter()) / (cols as f64 * rho * n as f64);
        GmPrior::initial(rho, self.components, scale)
    }
}

#[derive(Debug, Clone)]
pub struct AmpOutput {
    /// Posterior-mean estimate of `X`, `N x N_RF`.
    pub x_hat: Array2<Complex64>,
    pub prior: GmPrior,
    pub iterations: usize,
    /// Residual energy exceeded ten times its running minimum.
    pub diverged: bool,
    /// Final effective noise variance per column.
    pub tau2: Vec<f64>,
}

/// Posterior of one entry under the prior given `r = x + CN(0, tau2)`.
/// Responsibilities (spike first), per-component posterior means and
/// variances are left in the scratch buffers.
#[derive(Default)]
struct Scratch {
    resp: Vec<f64>,
    comp_means: Vec<Complex64>,
    comp_vars: Vec<f64>,
}

fn denoise(r: Complex64, tau2: f64, prior: &GmPrior, s: &mut Scratch) -> (Complex64, f64) {
    let k = prior.components();
    s.resp.clear();
    s.comp_means.clear();
    s.comp_vars.clear();
    s.resp.push((1.0 - prior.rho).ln() - tau2.ln() - r.norm_sqr() / tau2);
    for i in 0..k {
        let nu = prior.variances[i];
        let total = nu + tau2;
        let d = (r - prior.means[i]).norm_sqr();
        s.resp
            .push((prior.rho * prior.weights[i]).max(f64::MIN_POSITIVE).ln() - total.ln() - d / total);
        s.comp_means.push((r * nu + prior.means[i] * tau2) / total);
        s.comp_vars.push(nu * tau2 / total);
    }
    let max = s.resp.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut norm = 0.0;
    for w in s.resp.iter_mut() {
        *w = (*w - max).exp();
        norm += *w;
    }
    for w in s.resp.iter_mut() {
        *w /= norm;
    }
    let mut mean = Complex64::new(0.0, 0.0);
    let mut second = 0.0;
    for i in 0..k {
        let p = s.resp[i + 1];
        mean += s.comp_means[i] * p;
        second += p * (s.comp_means[i].norm_sqr() + s.comp_vars[i]);
    }
    (mean, (second - mean.norm_sqr()).max(0.0))
}

/// Approximate message passing recovery of `X` from `Y = A X + Z`.
pub fn amp_gm_decode(
    y: &Array2<Complex64>,
    codebook: &Codebook,
    prior_init: &GmPrior,
    cfg: &AmpConfig,
) -> Result<AmpOutput> {
    cfg.validate()?;
    prior_init.validate()?;
    let a = codebook.matrix();
    let a_h = codebook.adjoint();
    let (l, n) = a.dim();
    if y.nrows() != l {
        return Err(Error::Length {
            what: "measurement rows",
            expected: l,
            got: y.nrows(),
        });
    }
    let m = y.ncols();
    let ratio = n as f64 / l as f64;
    let mut prior = prior_init.clone();
    let mut x_hat = Array2::<Complex64>::zeros((n, m));
    let mut v_hat = Array2::<f64>::zeros((n, m));
    let mut z = y.clone();
    let mut tau2: Vec<f64> = (0..m).map(|c| column_tau2(&z, c, l)).collect();
    let floor = tau_floor(y);

    let mut best = (f64::INFINITY, x_hat.clone(), tau2.clone());
    let mut min_resid = f64::INFINITY;
    let mut diverged = false;
    let mut iterations = 0;
    let mut scratch = Scratch::default();

    for _ in 0..cfg.max_iters {
        iterations += 1;
        let r = &x_hat + &a_h.dot(&z);
        let mut x_new = Array2::<Complex64>::zeros((n, m));
        let mut v_new = Array2::<f64>::zeros((n, m));
        let mut em = EmAccumulator::new(prior.components());
        for c in 0..m {
            let t2 = tau2[c].max(floor);
            for row in 0..n {
                let (mean, var) = denoise(r[[row, c]], t2, &prior, &mut scratch);
                x_new[[row, c]] = mean;
                v_new[[row, c]] = var;
                if cfg.learn_prior {
                    em.add(&scratch);
                }
            }
        }
        let d = cfg.damping;
        let change = {
            let num: f64 = x_new.iter().zip(x_hat.iter()).map(|(a, b)| (a - b).norm_sqr()).sum();
            let den = energy(x_new.iter()).max(f64::MIN_POSITIVE);
            num / den
        };
        Zip::from(&mut x_hat)
            .and(&x_new)
            .for_each(|x, &xn| *x = xn * d + *x * (1.0 - d));
        Zip::from(&mut v_hat)
            .and(&v_new)
            .for_each(|v, &vn| *v = vn * d + *v * (1.0 - d));

        let ax = a.dot(&x_hat);
        let mut z_new = y - &ax;
        for c in 0..m {
            let t2 = tau2[c].max(floor);
            let mean_v = v_hat.column(c).sum() / n as f64;
            let onsager = ratio * mean_v / t2;
            for row in 0..l {
                z_new[[row, c]] += z[[row, c]] * onsager;
            }
        }
        z = z_new;
        tau2 = (0..m).map(|c| column_tau2(&z, c, l)).collect();

        let resid = energy((y - &ax).iter());
        if resid < best.0 {
            best = (resid, x_hat.clone(), tau2.clone());
        }
        min_resid = min_resid.min(resid);
        if !resid.is_finite() || resid > 10.0 * min_resid {
            diverged = true;
            break;
        }
        if cfg.learn_prior {
            em.update(&mut prior);
        }
        if change < cfg.tol {
            break;
        }
    }
    let (x_hat, tau2) = if diverged { (best.1, best.2) } else { (x_hat, tau2) };
    Ok(AmpOutput {
        x_hat,
        prior,
        iterations,
        diverged,
        tau2,
    })
}

fn column_tau2(z: &Array2<Complex64>, c: usize, l: usize) -> f64 {
    z.column(c).iter().map(|v| v.norm_sqr()).sum::<f64>() / l as f64
}

fn tau_floor(y: &Array2<Complex64>) -> f64 {
    let per_entry = energy(y.iter()) / y.len().max(1) as f64;
    (per_entry * 1e-12).max(1e-300)
}

/// Sufficient statistics for one EM update of the prior.
struct EmAccumulator {
    active: f64,
    count: f64,
    resp: Vec<f64>,
    first: Vec<Complex64>,
    second: Vec<f64>,
}

impl EmAccumulator {
    fn new(k: usize) -> Self {
        Self {
            active: 0.0,
            count: 0.0,
            resp: vec![0.0; k],
            first: vec![Complex64::new(0.0, 0.0); k],
            second: vec![0.0; k],
        }
    }

    fn add(&mut self, s: &Scratch) {
        self.count += 1.0;
        self.active += 1.0 - s.resp[0];
        for i in 0..self.resp.len() {
            let p = s.resp[i + 1];
            self.resp[i] += p;
            self.first[i] += s.comp_means[i] * p;
            self.second[i] += p * (s.comp_means[i].norm_sqr() + s.comp_vars[i]);
        }
    }

    fn update(&self, prior: &mut GmPrior) {
        if self.count == 0.0 {
            return;
        }
        prior.rho = (self.active / self.count).clamp(RHO_MIN, RHO_MAX);
        let total: f64 = self.resp.iter().sum();
        if total > 0.0 {
            let mut w: Vec<f64> = self.resp.iter().map(|r| (r / total).max(WEIGHT_MIN)).collect();
            let s: f64 = w.iter().sum();
            w.iter_mut().for_each(|x| *x /= s);
            prior.weights = w;
        }
        let var_floor = (prior.variances.iter().cloned().fold(0.0, f64::max) * 1e-10).max(1e-300);
        for i in 0..self.resp.len() {
            let p = self.resp[i];
            if p > 1e-12 {
                let mu = self.first[i] / p;
                // E|x - mu|^2 = E|x|^2 - |mu|^2 under the responsibilities
                let var = self.second[i] / p - mu.norm_sqr();
                prior.means[i] = mu;
                prior.variances[i] = var.max(var_floor);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cs::codebook::{complex_normal, generate_codebook, synthesize_slot};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn initial_prior_is_valid() {
        let p = GmPrior::initial(0.01, 3, 2.0).unwrap();
        assert!((p.variances[1] - 2.0).abs() < 1e-12);
        assert!(p.variances[0] < p.variances[1] && p.variances[1] < p.variances[2]);
        assert!(GmPrior::initial(0.1, 0, 1.0).is_err());
    }

    #[test]
    fn denoiser_shrinks_small_and_keeps_large() {
        let prior = GmPrior::initial(0.05, 3, 1.0).unwrap();
        let mut s = Scratch::default();
        let (small, _) = denoise(Complex64::new(0.01, 0.0), 0.01, &prior, &mut s);
        assert!(small.norm() < 0.01);
        let (big, _) = denoise(Complex64::new(3.0, -1.0), 0.01, &prior, &mut s);
        assert!((big - Complex64::new(3.0, -1.0)).norm() < 0.05);
        let s: f64 = s.resp.iter().sum();
        assert!((s - 1.0).abs() < 1e-12);
    }

    #[test]
    fn noiseless_single_user_support() {
        let cb = generate_codebook(40, 8, 11).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let h = Array2::from_shape_simple_fn((1, 4), || complex_normal(&mut rng, 1.0));
        let idx = 77u32;
        let y = synthesize_slot(&[idx], &h, &cb, 0.0, &mut rng).unwrap();
        let cfg = AmpConfig::default();
        let prior = cfg.initial_prior(&y, 256).unwrap();
        let out = amp_gm_decode(&y, &cb, &prior, &cfg).unwrap();
        let norms: Vec<f64> = out.x_hat.rows().into_iter().map(|r| energy(r.iter())).collect();
        let arg = norms.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).unwrap().0;
        assert_eq!(arg, idx as usize);
        // least-squares oracle on the true support is h itself
        let err: f64 = energy((&out.x_hat.row(arg) - &h.row(0)).iter())
            + norms
                .iter()
                .enumerate()
                .filter(|(i, _)| *i != arg)
                .map(|(_, v)| v)
                .sum::<f64>();
        let nmse = 10.0 * (err / energy(h.iter())).log10();
        assert!(nmse < -40.0, "nmse {nmse} dB");
    }

    #[test]
    fn em_keeps_prior_valid() {
        let cb = generate_codebook(50, 7, 2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..5 {
            let k = rng.random_range(1..6);
            let idx: Vec<u32> = (0..k).map(|_| rng.random_range(0..128)).collect();
            let h = Array2::from_shape_simple_fn((k, 4), || complex_normal(&mut rng, 1.0));
            let y = synthesize_slot(&idx, &h, &cb, 0.01, &mut rng).unwrap();
            let cfg = AmpConfig::default();
            let out = amp_gm_decode(&y, &cb, &cfg.initial_prior(&y, 128).unwrap(), &cfg).unwrap();
            out.prior.validate().unwrap();
            assert!(out.x_hat.iter().all(|z| z.re.is_finite() && z.im.is_finite()));
        }
    }

    #[test]
    fn rejects_bad_config() {
        let cfg = AmpConfig {
            damping: 0.0,
            ..AmpConfig::default()
        };
        assert!(cfg.validate().is_err());
        let cb = generate_codebook(10, 4, 0).unwrap();
        let prior = GmPrior::initial(0.1, 2, 1.0).unwrap();
        assert!(amp_gm_decode(&Array2::zeros((9, 2)), &cb, &prior, &AmpConfig::default()).is_err());
    }
}
