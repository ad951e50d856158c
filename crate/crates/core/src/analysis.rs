//! Closed-form performance predictions for the tree and beam-space decoders.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::tree_code::TreeCodeProfile;

/// `ln C(n, k)`, or `None` when `k > n`.
pub fn ln_binomial(n: u64, k: u64) -> Option<f64> {
    if k > n {
        return None;
    }
    let k = k.min(n - k);
    // exact accumulation; terms stay moderate because k <= n/2
    Some((0..k).map(|i| ((n - i) as f64).ln() - ((i + 1) as f64).ln()).sum())
}

pub fn binomial(n: u64, k: u64) -> f64 {
    ln_binomial(n, k).map_or(0.0, f64::exp)
}

/// Probability that two independent uniform `n_b`-subsets of `n_rf` beams
/// intersect: `1 - C(n_rf - n_b, n_b) / C(n_rf, n_b)`.
pub fn p_match(n_rf: usize, n_b: usize) -> Result<f64> {
    if n_b == 0 || n_b > n_rf {
        return Err(Error::Domain(format!(
            "need 1 <= N_b <= N_RF, got N_b={n_b}, N_RF={n_rf}"
        )));
    }
    let (n_rf, n_b) = (n_rf as u64, n_b as u64);
    let miss = match (ln_binomial(n_rf - n_b, n_b), ln_binomial(n_rf, n_b)) {
        (Some(a), Some(b)) => (a - b).exp(),
        _ => 0.0,
    };
    Ok((1.0 - miss).clamp(0.0, 1.0))
}

/// Expected number of erroneous surviving paths per root after stage `j`
/// (1-based, `2 <= j <= S`) for `k` active users:
/// `sum_{q=2}^{j} p^{j-q+1} K^{j-q} (K-1) prod_{s=q}^{j} 2^{-l_s}`.
///
/// With `p_match = 1` this is the plain tree-decoder count.
pub fn expected_erroneous_paths(k: usize, profile: &TreeCodeProfile, p_match: f64, j: usize) -> Result<f64> {
    check_stage(profile, j)?;
    let k = k as f64;
    let mut total = 0.0;
    for q in 2..=j {
        let parity: usize = (q..=j).map(|s| profile.parity_bits(s - 1)).sum();
        total += p_match.powi((j - q + 1) as i32) * k.powi((j - q) as i32) * (k - 1.0) * 2f64.powi(-(parity as i32));
    }
    Ok(total)
}

/// The same expectation by forward recursion,
/// `E_j = 2^{-l_j} p (K E_{j-1} + K - 1)`, `E_1 = 0`.
pub fn expected_erroneous_paths_recursive(k: usize, profile: &TreeCodeProfile, p_match: f64, j: usize) -> Result<f64> {
    check_stage(profile, j)?;
    let k = k as f64;
    let mut e = 0.0;
    for s in 2..=j {
        e = 2f64.powi(-(profile.parity_bits(s - 1) as i32)) * p_match * (k * e + k - 1.0);
    }
    Ok(e)
}

fn check_stage(profile: &TreeCodeProfile, j: usize) -> Result<()> {
    if j < 2 || j > profile.stages() {
        return Err(Error::Domain(format!("stage {j} outside 2..={}", profile.stages())));
    }
    Ok(())
}

/// Markov bound on the per-root false-alarm probability, `E[L^(S)]`.
pub fn fa_bound(k: usize, profile: &TreeCodeProfile, p_match: f64) -> Result<f64> {
    if profile.stages() < 2 {
        return Ok(0.0);
    }
    expected_erroneous_paths(k, profile, p_match, profile.stages())
}

/// Expected number of `k`-tuples of users that agree on their first `s`
/// sub-blocks: `C(K_a, k) / (N prod_{i=2}^{s} 2^{b_i})^{k-1}`.
pub fn expected_collisions(k_a: usize, k: usize, s: usize, n: usize, profile: &TreeCodeProfile) -> Result<f64> {
    if k < 2 {
        return Err(Error::Domain("collisions need k >= 2".into()));
    }
    if s == 0 || s > profile.stages() {
        return Err(Error::Domain(format!("stage {s} outside 1..={}", profile.stages())));
    }
    let Some(ln_c) = ln_binomial(k_a as u64, k as u64) else {
        return Ok(0.0);
    };
    let bits: usize = (2..=s).map(|i| profile.data_bits(i - 1)).sum();
    let ln_space = (n as f64).ln() + bits as f64 * std::f64::consts::LN_2;
    Ok((ln_c - (k - 1) as f64 * ln_space).exp())
}

/// Upper bound on the number of supportable active users,
/// `min(c1 L_p / (p_b ln(N / L_p)), 2^{J(1-R)+1} / p_b)`.
///
/// The first term is dropped (treated as unbounded) when `N <= L_p`.
pub fn ka_upper_bound(l_p: usize, n: usize, j: usize, rate: f64, p_b: f64, c1: f64) -> Result<f64> {
    if !(p_b > 0.0 && p_b <= 1.0) {
        return Err(Error::Domain(format!("beam fraction {p_b} outside (0, 1]")));
    }
    let cs_term = {
        let ratio = n as f64 / l_p as f64;
        if ratio > 1.0 {
            c1 * l_p as f64 / (p_b * ratio.ln())
        } else {
            f64::INFINITY
        }
    };
    let code_term = 2f64.powf(j as f64 * (1.0 - rate) + 1.0) / p_b;
    Ok(cs_term.min(code_term))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ComplexityEstimates {
    pub traditional: f64,
    pub hard: f64,
    pub soft: f64,
}

/// Expected parity-check counts of the traditional and hard decoders, and the
/// MPA work of the soft decoder.
pub fn complexity_estimates(
    k: usize,
    profile: &TreeCodeProfile,
    p_match: f64,
    n_b: usize,
    l_save: usize,
    i_max: usize,
) -> Result<ComplexityEstimates> {
    let stages = profile.stages();
    if stages < 2 {
        return Err(Error::Domain("complexity needs at least two stages".into()));
    }
    let kf = k as f64;
    let base = (stages - 1) as f64 * kf;
    let mut trad = base;
    let mut hard = base;
    for j in 2..stages {
        trad += expected_erroneous_paths(k, profile, 1.0, j)? * kf;
        hard += expected_erroneous_paths(k, profile, p_match, j)? * kf;
    }
    let work = |s: usize| n_b as f64 * 2f64.powi(profile.data_bits(s - 1) as i32) * i_max as f64;
    let mut soft = work(2);
    for j in 3..=stages {
        soft += l_save as f64 * work(j);
    }
    Ok(ComplexityEstimates {
        traditional: trad,
        hard,
        soft,
    })
}
