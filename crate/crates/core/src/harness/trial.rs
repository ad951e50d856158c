//! One Monte Carlo frame: draw, encode, transmit, detect and decode.

use std::collections::BTreeSet;
use std::time::Instant;

use ndarray::Array2;
use num_complex::Complex64;
use rand::seq::index::sample;

use super::config::SystemConfig;
use super::metrics::{compute_metrics, TrialMetrics};
use crate::channel::{stack_beam_channels, ChannelModel};
use crate::cs::{generate_codebook, process_slot, synthesize_slot, Codebook, CsSlotOutput};
use crate::decoders::{
    beam_tree_decode_hard, beam_tree_decode_soft, tree_decode_traditional, DecodedList, DecoderKind,
};
use crate::error::{Error, Result};
use crate::rng::{derive_seed, stream_rng, Stream};
use crate::tree_code::{draw_parity_matrices, tree_encode, Message, ParityMatrices, TreeCodeProfile};

const COLLISION_FREE_ATTEMPTS: usize = 10_000;

/// Everything fixed across trials: code, parity matrices, codebook and the
/// array geometry.
#[derive(Debug, Clone)]
pub struct SystemSetup {
    pub config: SystemConfig,
    pub profile: TreeCodeProfile,
    pub matrices: ParityMatrices,
    pub codebook: Codebook,
    pub model: ChannelModel,
}

impl SystemSetup {
    pub fn new(config: SystemConfig) -> Result<Self> {
        config.validate()?;
        let profile = config.profile()?;
        let seed = config.sim.seed;
        let matrices = draw_parity_matrices(&profile, derive_seed(seed, Stream::Parity as u64));
        let codebook = generate_codebook(
            config.l_p,
            profile.block_bits(),
            derive_seed(seed, Stream::Codebook as u64),
        )?;
        let model = ChannelModel::new(config.channel.clone())?;
        Ok(Self {
            config,
            profile,
            matrices,
            codebook,
            model,
        })
    }

    pub fn noise_var(&self, db: f64) -> f64 {
        self.config.sim.noise.noise_var(db, &self.profile)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SlotStats {
    /// Distinct codewords transmitted.
    pub sent: usize,
    /// Entries in the list handed to the decoders.
    pub listed: usize,
    pub missed: usize,
    pub false_detections: usize,
    pub diverged: bool,
}

#[derive(Debug, Clone)]
pub struct DecoderOutcome {
    pub kind: DecoderKind,
    pub decoded: DecodedList,
    pub metrics: TrialMetrics,
    pub seconds: f64,
}

#[derive(Debug, Clone)]
pub struct TrialResult {
    pub seed: u64,
    pub noise_var: f64,
    pub messages: Vec<Message>,
    pub slots: Vec<SlotStats>,
    pub outcomes: Vec<DecoderOutcome>,
    /// Time spent on synthesis and detection, shared by all decoders.
    pub front_end_seconds: f64,
}

impl TrialResult {
    pub fn outcome(&self, kind: DecoderKind) -> Option<&DecoderOutcome> {
        self.outcomes.iter().find(|o| o.kind == kind)
    }
}

/// Draws `ka` messages and their slot indices, redrawing users that clash
/// with an earlier user in any slot when `collision_free` is set.
fn draw_users(setup: &SystemSetup, ka: usize, seed: u64) -> Result<(Vec<Message>, Vec<Vec<u32>>)> {
    let mut rng = stream_rng(seed, Stream::Messages);
    let stages = setup.profile.stages();
    let mut used: Vec<BTreeSet<u32>> = vec![BTreeSet::new(); stages];
    let mut messages = Vec::with_capacity(ka);
    let mut coded = Vec::with_capacity(ka);
    for _ in 0..ka {
        let mut attempts = 0;
        loop {
            let m = Message::random(setup.profile.total_bits(), &mut rng);
            let c = tree_encode(&m, &setup.profile, &setup.matrices)?;
            let clash = c.indices.iter().zip(&used).any(|(i, u)| u.contains(i));
            if setup.config.sim.collision_free && clash {
                attempts += 1;
                if attempts >= COLLISION_FREE_ATTEMPTS {
                    return Err(Error::Domain(format!("no collision-free draw for {ka} users")));
                }
                continue;
            }
            for (i, u) in c.indices.iter().zip(used.iter_mut()) {
                u.insert(*i);
            }
            messages.push(m);
            coded.push(c.indices);
            break;
        }
    }
    Ok((messages, coded))
}

pub fn run_trial(setup: &SystemSetup, ka: usize, db: f64, seed: u64) -> Result<TrialResult> {
    let cfg = &setup.config;
    let stages = setup.profile.stages();
    let noise_var = setup.noise_var(db);
    let start = Instant::now();

    let (messages, coded) = draw_users(setup, ka, seed)?;
    let mut ch_rng = stream_rng(seed, Stream::Channels);
    let channels: Vec<_> = (0..ka).map(|_| setup.model.draw(&mut ch_rng)).collect();
    let h = stack_beam_channels(&channels, cfg.channel.n_rf);

    let need_signal = !cfg.sim.oracle_cs || cfg.sim.decoders.contains(&DecoderKind::Soft);
    let mut noise_rng = stream_rng(seed, Stream::Noise);
    let mut ys: Vec<Array2<Complex64>> = Vec::with_capacity(if need_signal { stages } else { 0 });
    let mut slots = Vec::with_capacity(stages);
    let mut stats = Vec::with_capacity(stages);
    for s in 0..stages {
        let sent: Vec<u32> = coded.iter().map(|c| c[s]).collect();
        let y = if need_signal {
            Some(synthesize_slot(&sent, &h, &setup.codebook, noise_var, &mut noise_rng)?)
        } else {
            None
        };
        let slot = match (&y, cfg.sim.oracle_cs) {
            (Some(y), false) => process_slot(y, &setup.codebook, &cfg.cs)?,
            _ => CsSlotOutput::oracle(&sent, &h, cfg.cs.pattern_priors)?,
        };
        let distinct: BTreeSet<u32> = sent.iter().copied().collect();
        let hits = slot.indices().iter().filter(|i| distinct.contains(i)).count();
        stats.push(SlotStats {
            sent: distinct.len(),
            listed: slot.len(),
            missed: distinct.len() - hits,
            false_detections: slot.len() - hits,
            diverged: slot.diverged,
        });
        slots.push(slot);
        if let Some(y) = y {
            ys.push(y);
        }
    }

    if cfg.sim.erase > 0 {
        let s_prime = cfg.decoder.list_stages(stages);
        let mut rng = stream_rng(seed, Stream::Erasure);
        for c in &coded {
            // stages 2..=S' (1-based)
            for off in sample(&mut rng, s_prime - 1, cfg.sim.erase) {
                let s = off + 1;
                slots[s].remove(c[s]);
            }
        }
    }
    let front_end_seconds = start.elapsed().as_secs_f64();

    let truth: BTreeSet<Message> = messages.iter().cloned().collect();
    let mut outcomes = Vec::with_capacity(cfg.sim.decoders.len());
    for &kind in &cfg.sim.decoders {
        let t = Instant::now();
        let decoded = match kind {
            DecoderKind::Traditional => {
                tree_decode_traditional(&slots, &setup.profile, &setup.matrices, cfg.sim.path_cap)?
            }
            DecoderKind::Hard => beam_tree_decode_hard(&slots, &setup.profile, &setup.matrices, cfg.sim.path_cap)?,
            DecoderKind::Soft => beam_tree_decode_soft(
                &ys,
                &slots,
                &setup.codebook,
                &setup.profile,
                &setup.matrices,
                &cfg.decoder,
                noise_var,
            )?,
        };
        let metrics = compute_metrics(&truth, &decoded.message_set());
        outcomes.push(DecoderOutcome {
            kind,
            decoded,
            metrics,
            seconds: t.elapsed().as_secs_f64(),
        });
    }
    Ok(TrialResult {
        seed,
        noise_var,
        messages,
        slots: stats,
        outcomes,
        front_end_seconds,
    })
}
