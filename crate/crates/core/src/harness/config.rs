//! Flat `section.key = value` configuration.
//!
//! ```text
//! # comment
//! sim.ka = 10, 20, 40
//! code.data = 8, 3*12, 0*3
//! [channel]
//! n_r = 64
//! ```
//!
//! Lists are comma separated; `v*n` repeats `v` n times. A `[section]` line
//! prefixes the keys that follow it.

use std::fmt::{self, Write as _};
use std::path::Path;
use std::str::FromStr;

use crate::channel::ChannelConfig;
use crate::cs::{AmpConfig, CsConfig, EpsilonRule};
use crate::decoders::{DecoderKind, SoftConfig, DEFAULT_PATH_CAP};
use crate::error::{config_err, Error, Result};
use crate::tree_code::TreeCodeProfile;

/// How the sweep axis value maps to a noise variance.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NoiseMode {
    /// Axis is `E_b/N_0` in dB with `E_b = S / B` per unit-norm codeword.
    EbN0,
    /// Axis is the per-entry SNR in dB, `noise_var = 10^{-SNR/10}`.
    Snr,
}

impl NoiseMode {
    pub fn noise_var(self, db: f64, profile: &TreeCodeProfile) -> f64 {
        let lin = 10f64.powf(db / 10.0);
        match self {
            NoiseMode::EbN0 => profile.stages() as f64 / (profile.total_bits() as f64 * lin),
            NoiseMode::Snr => 1.0 / lin,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub seed: u64,
    pub trials: usize,
    pub ka: Vec<usize>,
    /// Sweep axis values in dB, interpreted according to `noise`.
    pub ebn0_db: Vec<f64>,
    pub noise: NoiseMode,
    pub decoders: Vec<DecoderKind>,
    /// Bypass AMP and hand the decoders the true slot lists.
    pub oracle_cs: bool,
    /// True sub-blocks deleted per user from the slot lists.
    pub erase: usize,
    /// Redraw users until no two share a codeword in any slot.
    pub collision_free: bool,
    pub path_cap: usize,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            seed: 1,
            trials: 100,
            ka: vec![50],
            ebn0_db: vec![10.0],
            noise: NoiseMode::EbN0,
            decoders: DecoderKind::ALL.to_vec(),
            oracle_cs: false,
            erase: 0,
            collision_free: false,
            path_cap: DEFAULT_PATH_CAP,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CodeConfig {
    pub data: Vec<usize>,
    pub parity: Vec<usize>,
}

impl Default for CodeConfig {
    fn default() -> Self {
        let mut data = vec![10];
        data.extend(std::iter::repeat_n(3, 28));
        data.extend([0, 0, 0]);
        let parity = data.iter().map(|b| 10 - b).collect();
        Self { data, parity }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnalysisConfig {
    /// Beams per user assumed by the analytic formulas.
    pub n_b: usize,
    pub c1: f64,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        Self { n_b: 3, c1: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SystemConfig {
    pub sim: SimConfig,
    pub channel: ChannelConfig,
    pub code: CodeConfig,
    pub l_p: usize,
    pub cs: CsConfig,
    pub decoder: SoftConfig,
    pub analysis: AnalysisConfig,
}

impl Default for SystemConfig {
    fn default() -> Self {
        Self {
            sim: SimConfig::default(),
            channel: ChannelConfig::default(),
            code: CodeConfig::default(),
            l_p: 100,
            cs: CsConfig::default(),
            decoder: SoftConfig::default(),
            analysis: AnalysisConfig::default(),
        }
    }
}

impl SystemConfig {
    pub fn profile(&self) -> Result<TreeCodeProfile> {
        TreeCodeProfile::from_lists(&self.code.data, &self.code.parity)
    }

    pub fn validate(&self) -> Result<()> {
        let profile = self.profile()?;
        self.channel.validate()?;
        self.cs.validate()?;
        self.decoder.validate(profile.stages())?;
        if self.l_p == 0 {
            return Err(config_err("codeword length must be positive"));
        }
        let s = &self.sim;
        if s.trials == 0 {
            return Err(config_err("need at least one trial"));
        }
        if s.ka.is_empty() || s.ebn0_db.is_empty() {
            return Err(config_err("sweep grids must be nonempty"));
        }
        if s.ka.contains(&0) {
            return Err(config_err("active user counts must be positive"));
        }
        if s.decoders.is_empty() {
            return Err(config_err("select at least one decoder"));
        }
        if s.erase > 0 {
            let s_prime = self.decoder.list_stages(profile.stages());
            if s.erase + 1 > s_prime {
                return Err(config_err(format!(
                    "cannot erase {} sub-blocks per user within list stages 2..={s_prime}",
                    s.erase
                )));
            }
        }
        if s.path_cap == 0 {
            return Err(config_err("path cap must be positive"));
        }
        if self.analysis.n_b == 0 || self.analysis.n_b > self.channel.n_rf {
            return Err(config_err("analysis beams per user must lie in 1..=N_RF"));
        }
        Ok(())
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        text.parse()
    }

    /// Applies `section.key = value` pairs on top of the current values.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        let mut section = String::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
                section = name.trim().to_string();
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("line {}: expected `key = value`", n + 1)))?;
            let key = key.trim();
            let full = if section.is_empty() || key.contains('.') {
                key.to_string()
            } else {
                format!("{section}.{key}")
            };
            self.set(&full, value.trim())
                .map_err(|e| Error::Parse(format!("line {}: {e}", n + 1)))?;
        }
        Ok(())
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "sim.seed" => self.sim.seed = scalar(value)?,
            "sim.trials" => self.sim.trials = scalar(value)?,
            "sim.ka" => self.sim.ka = list(value)?,
            "sim.ebn0_db" => self.sim.ebn0_db = list(value)?,
            "sim.noise" => {
                self.sim.noise = match value.to_ascii_lowercase().as_str() {
                    "ebn0" => NoiseMode::EbN0,
                    "snr" => NoiseMode::Snr,
                    other => return Err(Error::Parse(format!("unknown noise mode `{other}`"))),
                }
            }
            "sim.decoders" => self.sim.decoders = list(value)?,
            "sim.oracle_cs" => self.sim.oracle_cs = boolean(value)?,
            "sim.erase" => self.sim.erase = scalar(value)?,
            "sim.collision_free" => self.sim.collision_free = boolean(value)?,
            "sim.path_cap" => self.sim.path_cap = scalar(value)?,
            "channel.n_r" => self.channel.n_r = scalar(value)?,
            "channel.n_rf" => self.channel.n_rf = scalar(value)?,
            "channel.clusters" => self.channel.clusters = scalar(value)?,
            "channel.subpaths" => self.channel.subpaths = scalar(value)?,
            "channel.angular_spread_deg" => self.channel.angular_spread = scalar::<f64>(value)?.to_radians(),
            "code.data" => self.code.data = list(value)?,
            "code.parity" => self.code.parity = list(value)?,
            "cs.l_p" => self.l_p = scalar(value)?,
            "cs.max_iters" => self.cs.amp.max_iters = scalar(value)?,
            "cs.damping" => self.cs.amp.damping = scalar(value)?,
            "cs.tol" => self.cs.amp.tol = scalar(value)?,
            "cs.components" => self.cs.amp.components = scalar(value)?,
            "cs.active_guess" => {
                self.cs.amp.active_guess = match value {
                    "auto" => None,
                    v => Some(scalar(v)?),
                }
            }
            "cs.learn_prior" => self.cs.amp.learn_prior = boolean(value)?,
            "cs.epsilon_rule" => {
                let v = epsilon_value(&self.cs.epsilon);
                self.cs.epsilon = match value.to_ascii_lowercase().as_str() {
                    "noise" => EpsilonRule::NoiseScaled(v),
                    "fixed" => EpsilonRule::Fixed(v),
                    "median" => EpsilonRule::MedianInactive(v),
                    other => return Err(Error::Parse(format!("unknown threshold rule `{other}`"))),
                }
            }
            "cs.epsilon" => {
                let v: f64 = scalar(value)?;
                self.cs.epsilon = match self.cs.epsilon {
                    EpsilonRule::NoiseScaled(_) => EpsilonRule::NoiseScaled(v),
                    EpsilonRule::Fixed(_) => EpsilonRule::Fixed(v),
                    EpsilonRule::MedianInactive(_) => EpsilonRule::MedianInactive(v),
                }
            }
            "decoder.l_save" => self.decoder.l_save = scalar(value)?,
            "decoder.l_split" => self.decoder.l_split = scalar(value)?,
            "decoder.s_prime" => {
                self.decoder.s_prime = match value {
                    "auto" => None,
                    v => Some(scalar(v)?),
                }
            }
            "decoder.tau" => self.decoder.tau = scalar(value)?,
            "decoder.i_max" => self.decoder.i_max = scalar(value)?,
            "decoder.l_max" => self.decoder.l_max = scalar(value)?,
            "analysis.n_b" => self.analysis.n_b = scalar(value)?,
            "analysis.c1" => self.analysis.c1 = scalar(value)?,
            other => return Err(config_err(format!("unknown key `{other}`"))),
        }
        Ok(())
    }
}

fn epsilon_value(rule: &EpsilonRule) -> f64 {
    match *rule {
        EpsilonRule::Fixed(v) | EpsilonRule::NoiseScaled(v) | EpsilonRule::MedianInactive(v) => v,
    }
}

fn scalar<T: FromStr>(value: &str) -> Result<T> {
    value
        .trim()
        .parse()
        .map_err(|_| Error::Parse(format!("cannot parse `{value}`")))
}

fn boolean(value: &str) -> Result<bool> {
    match value.trim().to_ascii_lowercase().as_str() {
        "true" | "yes" | "1" | "on" => Ok(true),
        "false" | "no" | "0" | "off" => Ok(false),
        other => Err(Error::Parse(format!("cannot parse `{other}` as a boolean"))),
    }
}

/// Parses `a, b*3, c` into `[a, b, b, b, c]`.
pub fn list<T: FromStr + Clone>(value: &str) -> Result<Vec<T>> {
    let mut out = Vec::new();
    for item in value.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        match item.rsplit_once('*') {
            Some((v, n)) => {
                let v: T = scalar(v)?;
                let n: usize = scalar(n)?;
                out.extend(std::iter::repeat_n(v, n));
            }
            None => out.push(scalar(item)?),
        }
    }
    Ok(out)
}

fn join<T: fmt::Display>(items: &[T]) -> String {
    // run-length encode so long profiles stay readable
    let mut parts = Vec::new();
    let mut i = 0;
    while i < items.len() {
        let s = items[i].to_string();
        let mut j = i + 1;
        while j < items.len() && items[j].to_string() == s {
            j += 1;
        }
        if j - i > 1 {
            parts.push(format!("{s}*{}", j - i));
        } else {
            parts.push(s);
        }
        i = j;
    }
    parts.join(", ")
}

impl FromStr for SystemConfig {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        let mut cfg = SystemConfig::default();
        cfg.apply_text(text)?;
        Ok(cfg)
    }
}

impl fmt::Display for SystemConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut s = String::new();
        let sim = &self.sim;
        let _ = writeln!(s, "sim.seed = {}", sim.seed);
        let _ = writeln!(s, "sim.trials = {}", sim.trials);
        let _ = writeln!(s, "sim.ka = {}", join(&sim.ka));
        let _ = writeln!(s, "sim.ebn0_db = {}", join(&sim.ebn0_db));
        let _ = writeln!(
            s,
            "sim.noise = {}",
            match sim.noise {
                NoiseMode::EbN0 => "ebn0",
                NoiseMode::Snr => "snr",
            }
        );
        let _ = writeln!(s, "sim.decoders = {}", join(&sim.decoders));
        let _ = writeln!(s, "sim.oracle_cs = {}", sim.oracle_cs);
        let _ = writeln!(s, "sim.erase = {}", sim.erase);
        let _ = writeln!(s, "sim.collision_free = {}", sim.collision_free);
        let _ = writeln!(s, "sim.path_cap = {}", sim.path_cap);
        let ch = &self.channel;
        let _ = writeln!(s, "channel.n_r = {}", ch.n_r);
        let _ = writeln!(s, "channel.n_rf = {}", ch.n_rf);
        let _ = writeln!(s, "channel.clusters = {}", ch.clusters);
        let _ = writeln!(s, "channel.subpaths = {}", ch.subpaths);
        let _ = writeln!(s, "channel.angular_spread_deg = {}", ch.angular_spread.to_degrees());
        let _ = writeln!(s, "code.data = {}", join(&self.code.data));
        let _ = writeln!(s, "code.parity = {}", join(&self.code.parity));
        let amp: &AmpConfig = &self.cs.amp;
        let _ = writeln!(s, "cs.l_p = {}", self.l_p);
        let _ = writeln!(s, "cs.max_iters = {}", amp.max_iters);
        let _ = writeln!(s, "cs.damping = {}", amp.damping);
        let _ = writeln!(s, "cs.tol = {}", amp.tol);
        let _ = writeln!(s, "cs.components = {}", amp.components);
        let _ = writeln!(
            s,
            "cs.active_guess = {}",
            amp.active_guess.map_or("auto".to_string(), |v| v.to_string())
        );
        let _ = writeln!(s, "cs.learn_prior = {}", amp.learn_prior);
        let rule = match self.cs.epsilon {
            EpsilonRule::NoiseScaled(_) => "noise",
            EpsilonRule::Fixed(_) => "fixed",
            EpsilonRule::MedianInactive(_) => "median",
        };
        let _ = writeln!(s, "cs.epsilon_rule = {rule}");
        let _ = writeln!(s, "cs.epsilon = {}", epsilon_value(&self.cs.epsilon));
        let d = &self.decoder;
        let _ = writeln!(s, "decoder.l_save = {}", d.l_save);
        let _ = writeln!(s, "decoder.l_split = {}", d.l_split);
        let _ = writeln!(
            s,
            "decoder.s_prime = {}",
            d.s_prime.map_or("auto".to_string(), |v| v.to_string())
        );
        let _ = writeln!(s, "decoder.tau = {}", d.tau);
        let _ = writeln!(s, "decoder.i_max = {}", d.i_max);
        let _ = writeln!(s, "decoder.l_max = {}", d.l_max);
        let _ = writeln!(s, "analysis.n_b = {}", self.analysis.n_b);
        let _ = write!(s, "analysis.c1 = {}", self.analysis.c1);
        f.write_str(&s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        let cfg = SystemConfig::default();
        cfg.validate().unwrap();
        let p = cfg.profile().unwrap();
        assert_eq!((p.total_bits(), p.stages(), p.block_bits()), (94, 32, 10));
    }

    #[test]
    fn list_repetition() {
        let v: Vec<usize> = list("8, 3*3, 0*2").unwrap();
        assert_eq!(v, vec![8, 3, 3, 3, 0, 0]);
        assert!(list::<usize>("x").is_err());
        assert_eq!(join(&v), "8, 3*3, 0*2");
    }

    #[test]
    fn parse_with_sections_and_comments() {
        let text = "# desk run\nsim.ka = 10, 20 # two points\n[channel]\nn_r = 64\nn_rf = 8\n[cs]\nepsilon_rule = fixed\nepsilon = 0.2\n";
        let cfg: SystemConfig = text.parse().unwrap();
        assert_eq!(cfg.sim.ka, vec![10, 20]);
        assert_eq!(cfg.channel.n_r, 64);
        assert_eq!(cfg.cs.epsilon, EpsilonRule::Fixed(0.2));
    }

    #[test]
    fn display_round_trips() {
        let mut cfg = SystemConfig::default();
        cfg.apply_text("sim.noise = snr\ncode.data = 8, 3*12, 0*3\ncode.parity = 0, 5*12, 8*3\ndecoder.s_prime = 12\ncs.active_guess = 40")
            .unwrap();
        let again: SystemConfig = cfg.to_string().parse().unwrap();
        assert_eq!(again, cfg);
    }

    #[test]
    fn bad_inputs_are_rejected() {
        assert!("sim.bogus = 1".parse::<SystemConfig>().is_err());
        assert!("sim.trials".parse::<SystemConfig>().is_err());
        assert!("sim.trials = many".parse::<SystemConfig>().is_err());
        let mut cfg = SystemConfig::default();
        cfg.sim.trials = 0;
        assert!(cfg.validate().is_err());
        let mut cfg = SystemConfig::default();
        cfg.code.parity[3] = 0;
        assert!(cfg.validate().is_err());
        let mut cfg = SystemConfig::default();
        cfg.sim.erase = 40;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn noise_conventions() {
        let p = SystemConfig::default().profile().unwrap();
        let v = NoiseMode::EbN0.noise_var(0.0, &p);
        assert!((v - 32.0 / 94.0).abs() < 1e-15);
        assert!((NoiseMode::Snr.noise_var(20.0, &p) - 0.01).abs() < 1e-15);
    }
}
