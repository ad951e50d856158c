//! Beam-space soft-decision list decoder.
//!
//! The first `S'` stages are list-decoded: every parity-consistent candidate
//! of a path is scored by message passing on the root's beams, paths are
//! ranked by accumulated `ln(1 + e^{-LLR})`, and only the best survive. The
//! remaining stages extend paths by hard beam-pattern matching. Near-duplicate
//! outputs are finally pruned by block similarity.

use std::cmp::Ordering;

use ndarray::{Array2, Axis};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::mpa::{mpa_llr, softplus_neg, MpaCandidate};
use super::tree::{check_slots, parity_buckets};
use super::{DecodedList, DecodedMessage};
use crate::cs::codebook::add_outer;
use crate::cs::{Codebook, CsSlotOutput};
use crate::error::{config_err, Error, Result};
use crate::tree_code::{Message, ParityMatrices, PendingParity, TreeCodeProfile};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SoftConfig {
    pub l_save: usize,
    pub l_split: usize,
    /// Last list-decoded stage (1-based); `None` means `S - 3`.
    pub s_prime: Option<usize>,
    /// Similarity above which the less reliable of two outputs is dropped.
    pub tau: f64,
    pub i_max: usize,
    /// LLR clamp. Kept large: at high SNR a small clamp saturates every
    /// strong candidate to the same path-metric increment, and pruning then
    /// cannot rank the true path above interferers. `e^{-700}` is still a
    /// normal `f64`.
    pub l_max: f64,
}

impl Default for SoftConfig {
    fn default() -> Self {
        Self {
            l_save: 24,
            l_split: 8,
            s_prime: None,
            tau: 0.5,
            i_max: 5,
            l_max: 700.0,
        }
    }
}

impl SoftConfig {
    pub fn validate(&self, stages: usize) -> Result<()> {
        if self.l_split == 0 || self.l_save < self.l_split {
            return Err(config_err(format!(
                "need L_save >= L_split >= 1, got L_save={} L_split={}",
                self.l_save, self.l_split
            )));
        }
        if let Some(sp) = self.s_prime {
            if stages >= 2 && !(2..=stages).contains(&sp) {
                return Err(config_err(format!("S' = {sp} outside 2..={stages}")));
            }
        }
        if !(0.0..=1.0).contains(&self.tau) {
            return Err(config_err(format!("similarity threshold {} outside [0, 1]", self.tau)));
        }
        if self.i_max == 0 || !(self.l_max > 0.0) {
            return Err(config_err("MPA needs I_max >= 1 and L_max > 0"));
        }
        Ok(())
    }

    /// Resolved `S'` for a code with `stages` sub-blocks.
    pub fn list_stages(&self, stages: usize) -> usize {
        if stages < 2 {
            return stages;
        }
        self.s_prime.unwrap_or(stages.saturating_sub(3)).clamp(2, stages)
    }
}

/// Fraction of stages whose info blocks agree; empty blocks always agree.
pub fn similarity(a: &Message, b: &Message, profile: &TreeCodeProfile) -> f64 {
    let mut pos = 0;
    let mut same = 0;
    for &bits in profile.data() {
        if a.bits()[pos..pos + bits] == b.bits()[pos..pos + bits] {
            same += 1;
        }
        pos += bits;
    }
    same as f64 / profile.stages() as f64
}

fn beams_or_all(beams: &[usize], n_rf: usize) -> Vec<usize> {
    if beams.is_empty() {
        (0..n_rf).collect()
    } else {
        beams.to_vec()
    }
}

/// Slot signal with every detected codeword outside `candidates` cancelled,
/// restricted to `beams` (all beams when empty).
pub fn interference_cancel(
    y: &Array2<Complex64>,
    slot: &CsSlotOutput,
    codebook: &Codebook,
    candidates: &[u32],
    beams: &[usize],
) -> Array2<Complex64> {
    let mut out = y.clone();
    for (pos, &idx) in slot.indices().iter().enumerate() {
        if !candidates.contains(&idx) {
            add_outer(&mut out, codebook.column(idx), slot.estimate(pos), -1.0);
        }
    }
    out.select(Axis(1), &beams_or_all(beams, y.ncols()))
}

/// Residual of a slot after cancelling every detected codeword.
fn full_residual(y: &Array2<Complex64>, slot: &CsSlotOutput, codebook: &Codebook) -> Array2<Complex64> {
    let mut out = y.clone();
    for (pos, &idx) in slot.indices().iter().enumerate() {
        add_outer(&mut out, codebook.column(idx), slot.estimate(pos), -1.0);
    }
    out
}

#[derive(Clone)]
struct SoftPath {
    indices: Vec<u32>,
    pending: PendingParity,
    pm: f64,
}

fn rank(a: &SoftPath, b: &SoftPath) -> Ordering {
    a.pm.total_cmp(&b.pm).then_with(|| a.indices.cmp(&b.indices))
}

/// Soft-decision decoding of all roots detected in slot 1.
///
/// `ys` holds the received signal of every slot and `noise_var` the noise
/// variance per complex entry.
#[allow(clippy::too_many_arguments)]
pub fn beam_tree_decode_soft(
    ys: &[Array2<Complex64>],
    slots: &[CsSlotOutput],
    codebook: &Codebook,
    profile: &TreeCodeProfile,
    matrices: &ParityMatrices,
    cfg: &SoftConfig,
    noise_var: f64,
) -> Result<DecodedList> {
    check_slots(slots, profile)?;
    cfg.validate(profile.stages())?;
    if ys.len() != profile.stages() {
        return Err(Error::Length {
            what: "slot signals",
            expected: profile.stages(),
            got: ys.len(),
        });
    }
    let stages = profile.stages();
    let s_prime = cfg.list_stages(stages);
    let residuals: Vec<Array2<Complex64>> = (1..s_prime)
        .map(|s| full_residual(&ys[s], &slots[s], codebook))
        .collect();
    let buckets: Vec<_> = (0..stages).map(|s| parity_buckets(&slots[s], profile, s)).collect();

    let mut survivors: Vec<DecodedMessage> = Vec::new();
    for (root_pos, &root) in slots[0].indices().iter().enumerate() {
        let root_pattern = slots[0].pattern(root_pos);
        let beams = beams_or_all(&root_pattern.active_beams(), slots[0].n_rf());
        let mut pending = PendingParity::new(stages);
        pending.absorb(0, profile.info_of(0, root), matrices);
        let mut paths = vec![SoftPath {
            indices: vec![root],
            pending,
            pm: 0.0,
        }];

        for s in 1..s_prime {
            let slot = &slots[s];
            let base = residuals[s - 1].select(Axis(1), &beams);
            let mut pool = Vec::new();
            for path in &paths {
                let parity = path.pending.expected(s);
                let cands: Vec<u32> = (0..1u32 << profile.data_bits(s))
                    .map(|info| profile.index_of(s, info, parity))
                    .collect();
                let llrs = candidate_llrs(&base, slot, codebook, &cands, &beams, noise_var, cfg);
                let mut children: Vec<SoftPath> = cands
                    .iter()
                    .zip(&llrs)
                    .map(|(&idx, &l)| {
                        let mut child = path.clone();
                        child.indices.push(idx);
                        child.pending.absorb(s, profile.info_of(s, idx), matrices);
                        child.pm += softplus_neg(l);
                        child
                    })
                    .collect();
                children.sort_by(rank);
                children.truncate(cfg.l_split);
                pool.extend(children);
            }
            pool.sort_by(rank);
            pool.truncate(cfg.l_save);
            paths = pool;
        }

        for s in s_prime..stages {
            let mut next = Vec::new();
            for path in &paths {
                let Some(children) = buckets[s].get(&path.pending.expected(s)) else {
                    continue;
                };
                for &pos in children {
                    if !root_pattern.overlaps(slots[s].pattern(pos)) {
                        continue;
                    }
                    let idx = slots[s].indices()[pos];
                    let mut child = path.clone();
                    child.indices.push(idx);
                    child.pending.absorb(s, profile.info_of(s, idx), matrices);
                    next.push(child);
                }
            }
            paths = next;
            if paths.is_empty() {
                break;
            }
        }
        let outputs = paths
            .into_iter()
            .map(|path| DecodedMessage {
                message: Message::from_indices(profile, &path.indices),
                indices: path.indices,
                pm: Some(path.pm),
            })
            .collect();
        // pairs are compared within one tree only
        survivors.extend(prune_similar(outputs, profile, cfg.tau));
    }

    Ok(DecodedList {
        messages: survivors,
        truncated_roots: 0,
    })
}

/// Greedy pruning in order of increasing path metric: an output is kept only
/// if its similarity to every kept output is at most `tau`.
pub fn prune_similar(mut outputs: Vec<DecodedMessage>, profile: &TreeCodeProfile, tau: f64) -> Vec<DecodedMessage> {
    outputs.sort_by(|a, b| {
        let pa = a.pm.unwrap_or(0.0);
        let pb = b.pm.unwrap_or(0.0);
        pa.total_cmp(&pb).then_with(|| a.indices.cmp(&b.indices))
    });
    let mut kept: Vec<DecodedMessage> = Vec::new();
    for out in outputs {
        if kept
            .iter()
            .all(|k| similarity(&k.message, &out.message, profile) <= tau)
        {
            kept.push(out);
        }
    }
    kept
}

/// LLR of every candidate index; undetected candidates have no channel
/// estimate and score exactly 0.
fn candidate_llrs(
    base: &Array2<Complex64>,
    slot: &CsSlotOutput,
    codebook: &Codebook,
    cands: &[u32],
    beams: &[usize],
    noise_var: f64,
    cfg: &SoftConfig,
) -> Vec<f64> {
    let detected: Vec<(usize, usize)> = cands
        .iter()
        .enumerate()
        .filter_map(|(c, &idx)| slot.position(idx).map(|pos| (c, pos)))
        .collect();
    let mut llrs = vec![0.0; cands.len()];
    if detected.is_empty() {
        return llrs;
    }
    let mut y = base.clone();
    let mut mpa = Vec::with_capacity(detected.len());
    for &(c, pos) in &detected {
        let est = slot.estimate(pos);
        let h: Vec<Complex64> = beams.iter().map(|&b| est[b]).collect();
        let a = codebook.column(cands[c]);
        add_outer(&mut y, a, ndarray::ArrayView1::from(&h[..]), 1.0);
        mpa.push(MpaCandidate { h, a });
    }
    let scores = mpa_llr(&y, &mpa, noise_var, cfg.i_max, cfg.l_max);
    for (&(c, _), l) in detected.iter().zip(scores) {
        llrs[c] = l;
    }
    llrs
}
