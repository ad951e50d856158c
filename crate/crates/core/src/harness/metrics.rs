//! Per-trial miss and false-alarm rates.

use std::collections::BTreeSet;

use crate::tree_code::Message;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrialMetrics {
    pub missed: usize,
    pub false_alarms: usize,
    pub p_md: f64,
    /// Zero when the decoder returned nothing.
    pub p_fa: f64,
}

pub fn compute_metrics(truth: &BTreeSet<Message>, decoded: &BTreeSet<Message>) -> TrialMetrics {
    let missed = truth.difference(decoded).count();
    let false_alarms = decoded.difference(truth).count();
    let ratio = |n: usize, d: usize| if d == 0 { 0.0 } else { n as f64 / d as f64 };
    TrialMetrics {
        missed,
        false_alarms,
        p_md: ratio(missed, truth.len()),
        p_fa: ratio(false_alarms, decoded.len()),
    }
}

/// Running mean of per-trial rates at one grid point.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct RateAccumulator {
    pub trials: usize,
    sum_md: f64,
    sum_fa: f64,
}

impl RateAccumulator {
    pub fn push(&mut self, m: &TrialMetrics) {
        self.trials += 1;
        self.sum_md += m.p_md;
        self.sum_fa += m.p_fa;
    }

    pub fn p_md(&self) -> f64 {
        self.sum_md / self.trials as f64
    }

    pub fn p_fa(&self) -> f64 {
        self.sum_fa / self.trials as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(v: &[u8]) -> BTreeSet<Message> {
        v.iter().map(|&b| Message(vec![b])).collect()
    }

    #[test]
    fn rates() {
        let m = compute_metrics(&set(&[0, 1, 2, 3]), &set(&[1, 2, 7]));
        assert_eq!((m.missed, m.false_alarms), (2, 1));
        assert_eq!(m.p_md, 0.5);
        assert!((m.p_fa - 1.0 / 3.0).abs() < 1e-15);
        let empty = compute_metrics(&set(&[0, 1]), &set(&[]));
        assert_eq!((empty.p_md, empty.p_fa), (1.0, 0.0));
        let perfect = compute_metrics(&set(&[4, 5]), &set(&[5, 4]));
        assert_eq!((perfect.p_md, perfect.p_fa), (0.0, 0.0));
    }

    #[test]
    fn accumulator_averages_trials() {
        let mut acc = RateAccumulator::default();
        acc.push(&compute_metrics(&set(&[0, 1]), &set(&[0])));
        acc.push(&compute_metrics(&set(&[0, 1]), &set(&[0, 1, 9, 8])));
        assert_eq!(acc.trials, 2);
        assert_eq!(acc.p_md(), 0.25);
        assert_eq!(acc.p_fa(), 0.25);
    }
}
