//! Grid sweeps over (axis value, active users) with parallel trials.

use std::time::Instant;

use rayon::prelude::*;

use super::metrics::RateAccumulator;
use super::results::{MetricsRow, MetricsTable};
use super::trial::{run_trial, SystemSetup};
use crate::error::Error;
use crate::rng::trial_seed;

/// A trial that returned an error; the sweep records it and moves on.
#[derive(Debug)]
pub struct TrialFailure {
    pub ebn0_db: f64,
    pub ka: usize,
    pub trial: usize,
    pub error: Error,
}

/// Runs every grid point, calling `on_point` with each finished point's
/// rows. Points are ordered axis-major, then by `ka`.
pub fn run_sweep(setup: &SystemSetup, mut on_point: impl FnMut(&[MetricsRow])) -> (MetricsTable, Vec<TrialFailure>) {
    let sim = &setup.config.sim;
    let mut table = MetricsTable::default();
    let mut failures = Vec::new();
    let mut point = 0;
    for &db in &sim.ebn0_db {
        for &ka in &sim.ka {
            let start = Instant::now();
            let results: Vec<_> = (0..sim.trials)
                .into_par_iter()
                .map(|t| run_trial(setup, ka, db, trial_seed(sim.seed, point, t)))
                .collect();
            let mut acc = vec![RateAccumulator::default(); sim.decoders.len()];
            let mut failed = 0;
            for (trial, r) in results.into_iter().enumerate() {
                match r {
                    Ok(r) => {
                        for (a, o) in acc.iter_mut().zip(&r.outcomes) {
                            a.push(&o.metrics);
                        }
                    }
                    Err(error) => {
                        failed += 1;
                        failures.push(TrialFailure {
                            ebn0_db: db,
                            ka,
                            trial,
                            error,
                        });
                    }
                }
            }
            let seconds = start.elapsed().as_secs_f64();
            let rows: Vec<MetricsRow> = sim
                .decoders
                .iter()
                .zip(&acc)
                .map(|(&kind, a)| {
                    let mut row = MetricsRow::new(kind, db, ka, a.p_md(), a.p_fa(), a.trials, seconds);
                    row.failed = failed;
                    row
                })
                .collect();
            on_point(&rows);
            table.rows.extend(rows);
            point += 1;
        }
    }
    (table, failures)
}
