//! Message passing between candidate sub-blocks (variable nodes) and the
//! root's active beams (resource nodes), with Gaussian-approximated
//! interference.

use ndarray::{Array2, ArrayView1};
use num_complex::Complex64;

/// One candidate: its channel estimate on each resource beam and its codeword.
#[derive(Debug, Clone)]
pub struct MpaCandidate<'a> {
    pub h: Vec<Complex64>,
    pub a: ArrayView1<'a, Complex64>,
}

/// `ln(1 + e^{-llr})`, the path-metric increment.
pub fn softplus_neg(llr: f64) -> f64 {
    let x = -llr;
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

pub fn path_metric_update(pm_prev: f64, llr: f64) -> f64 {
    pm_prev + softplus_neg(llr)
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// LLRs `ln p(x_k = 1 | y) / p(x_k = 0 | y)` for each candidate after
/// `i_max` flooding iterations, clamped to `[-l_max, l_max]`.
///
/// `y` is `L_p x T` (one column per resource beam); every candidate's `h`
/// has length `T`. Candidates with an all-zero channel get exactly 0.
pub fn mpa_llr(
    y: &Array2<Complex64>,
    candidates: &[MpaCandidate<'_>],
    noise_var: f64,
    i_max: usize,
    l_max: f64,
) -> Vec<f64> {
    let (l, t_count) = y.dim();
    let k_count = candidates.len();
    let mut llr = vec![0.0; k_count];
    let live: Vec<usize> = (0..k_count)
        .filter(|&k| candidates[k].h.iter().any(|h| h.norm_sqr() > 0.0))
        .collect();
    if live.is_empty() || t_count == 0 || l == 0 {
        return llr;
    }
    let floor = noise_var.max(1e-12);
    // s[k][t][j] = h_{k,t} a_{k,j}
    let s: Vec<Vec<Vec<Complex64>>> = live
        .iter()
        .map(|&k| {
            let c = &candidates[k];
            (0..t_count)
                .map(|t| c.a.iter().map(|&a| c.h[t] * a).collect())
                .collect()
        })
        .collect();
    let n = live.len();
    let mut prob = vec![vec![0.5; t_count]; n];
    let mut msg = vec![vec![0.0; t_count]; n]; // resource t -> candidate k
    let iterations = i_max.max(1);
    let mut mean = vec![Complex64::new(0.0, 0.0); l];
    let mut var = vec![0.0; l];
    for _ in 0..iterations {
        for t in 0..t_count {
            mean.iter_mut().for_each(|m| *m = Complex64::new(0.0, 0.0));
            var.iter_mut().for_each(|v| *v = 0.0);
            for k in 0..n {
                let p = prob[k][t];
                let pq = p * (1.0 - p);
                for j in 0..l {
                    let sk = s[k][t][j];
                    mean[j] += sk * p;
                    var[j] += pq * sk.norm_sqr();
                }
            }
            for k in 0..n {
                let p = prob[k][t];
                let pq = p * (1.0 - p);
                let mut acc = 0.0;
                for j in 0..l {
                    let sk = s[k][t][j];
                    let mu = mean[j] - sk * p;
                    let d2 = (var[j] - pq * sk.norm_sqr() + noise_var).max(floor);
                    let u = y[[j, t]] - mu;
                    // |u|^2 - |u - s|^2
                    acc += (2.0 * (u * sk.conj()).re - sk.norm_sqr()) / d2;
                }
                msg[k][t] = acc.clamp(-l_max, l_max);
            }
        }
        for k in 0..n {
            let total: f64 = msg[k].iter().sum();
            for t in 0..t_count {
                let ext = (total - msg[k][t]).clamp(-l_max, l_max);
                prob[k][t] = sigmoid(ext);
            }
        }
    }
    for (k, &orig) in live.iter().enumerate() {
        llr[orig] = msg[k].iter().sum::<f64>().clamp(-l_max, l_max);
    }
    llr
}
