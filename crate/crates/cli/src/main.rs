use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use ura_core::analysis::{complexity_estimates, expected_collisions, fa_bound, ka_upper_bound, p_match};
use ura_core::harness::results::round_sig;
use ura_core::harness::{run_sweep, run_trial, write_results, OutputFormat, SystemConfig, SystemSetup};
use ura_core::DecoderKind;

/// Unsourced random access simulator for beam-space tree decoding.
///
/// Any config key can be overridden with a flag of the same name, e.g.
/// `--channel.n_rf=16` or `--sim.ka 50,100`.
#[derive(Parser, Debug)]
#[command(name = "ura", version)]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Common {
    /// Flat `section.key = value` config file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Comma-separated decoders: traditional, hard, soft.
    #[arg(long, global = true, value_delimiter = ',')]
    decoders: Option<Vec<DecoderKind>>,
    /// Hand the decoders the true slot lists instead of running AMP.
    #[arg(long, global = true)]
    oracle_cs: bool,
    /// Delete this many true sub-blocks per user from the slot lists.
    #[arg(long, global = true)]
    erase: Option<usize>,
    /// Output file; standard output when absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// csv or json; guessed from `--out` when absent.
    #[arg(long, global = true)]
    format: Option<OutputFormat>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Monte Carlo sweep over the E_b/N_0 and K_a grids.
    Simulate,
    /// Closed-form predictions for every K_a in the grid.
    Analyze,
    /// One verbose trial at the first grid point.
    Trial,
}

/// Splits `--section.key=value` / `--section.key value` pairs off the
/// argument list.
type Overrides = Vec<(String, String)>;

fn split_overrides(args: Vec<String>) -> Result<(Vec<String>, Overrides)> {
    let mut rest = Vec::new();
    let mut overrides = Vec::new();
    let mut it = args.into_iter();
    while let Some(arg) = it.next() {
        let Some(body) = arg
            .strip_prefix("--")
            .filter(|b| b.split('=').next().is_some_and(|k| k.contains('.')))
        else {
            rest.push(arg);
            continue;
        };
        match body.split_once('=') {
            Some((k, v)) => overrides.push((k.to_string(), v.to_string())),
            None => {
                let Some(v) = it.next() else {
                    bail!("missing value for --{body}");
                };
                overrides.push((body.to_string(), v));
            }
        }
    }
    Ok((rest, overrides))
}

fn load_config(common: &Common, overrides: &[(String, String)]) -> Result<SystemConfig> {
    let mut cfg = match &common.config {
        Some(path) => SystemConfig::from_file(path)?,
        None => SystemConfig::default(),
    };
    for (k, v) in overrides {
        cfg.set(k, v).with_context(|| format!("--{k}"))?;
    }
    if let Some(seed) = common.seed {
        cfg.sim.seed = seed;
    }
    if let Some(d) = &common.decoders {
        cfg.sim.decoders = d.clone();
    }
    if common.oracle_cs {
        cfg.sim.oracle_cs = true;
    }
    if let Some(k) = common.erase {
        cfg.sim.erase = k;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn output_format(common: &Common) -> OutputFormat {
    common
        .format
        .or_else(|| common.out.as_deref().map(OutputFormat::from_path))
        .unwrap_or(OutputFormat::Csv)
}

fn emit(common: &Common, text: &str) -> Result<()> {
    match &common.out {
        Some(path) => std::fs::write(path, text).with_context(|| format!("writing {}", path.display())),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())?;
            if !text.ends_with('\n') {
                out.write_all(b"\n")?;
            }
            Ok(())
        }
    }
}

fn simulate(cfg: SystemConfig, common: &Common) -> Result<()> {
    let setup = SystemSetup::new(cfg)?;
    let points = setup.config.sim.ebn0_db.len() * setup.config.sim.ka.len();
    let mut done = 0;
    let (table, failures) = run_sweep(&setup, |rows| {
        done += 1;
        let summary = rows
            .iter()
            .map(|r| format!("{} p_err={:.4}", r.decoder, r.p_err))
            .collect::<Vec<_>>()
            .join(" ");
        eprintln!(
            "[{done}/{points}] ebn0_db={} ka={} {summary} ({:.1}s)",
            rows[0].ebn0_db, rows[0].ka, rows[0].seconds
        );
    });
    for f in &failures {
        eprintln!(
            "trial {} at ebn0_db={} ka={} failed: {}",
            f.trial, f.ebn0_db, f.ka, f.error
        );
    }
    let format = output_format(common);
    match &common.out {
        Some(path) => write_results(&table, path, format)?,
        None => emit(common, &table.render(format)?)?,
    }
    Ok(())
}

#[derive(Serialize)]
struct AnalysisRow {
    ka: usize,
    p_match: f64,
    fa_traditional: f64,
    fa_hard: f64,
    root_collisions: f64,
    complexity_traditional: f64,
    complexity_hard: f64,
    complexity_soft: f64,
    ka_bound: f64,
}

fn analyze(cfg: SystemConfig, common: &Common) -> Result<()> {
    let profile = cfg.profile()?;
    let n_rf = cfg.channel.n_rf;
    let n_b = cfg.analysis.n_b;
    let pm = p_match(n_rf, n_b)?;
    let n = profile.codebook_size();
    let mut rows = Vec::new();
    for &ka in &cfg.sim.ka {
        let c = complexity_estimates(ka, &profile, pm, n_b, cfg.decoder.l_save, cfg.decoder.i_max)?;
        rows.push(AnalysisRow {
            ka,
            p_match: pm,
            fa_traditional: fa_bound(ka, &profile, 1.0)?,
            fa_hard: fa_bound(ka, &profile, pm)?,
            root_collisions: expected_collisions(ka, 2, 1, n, &profile)?,
            complexity_traditional: c.traditional,
            complexity_hard: c.hard,
            complexity_soft: c.soft,
            ka_bound: ka_upper_bound(
                cfg.l_p,
                n,
                profile.block_bits(),
                profile.rate(),
                n_b as f64 / n_rf as f64,
                cfg.analysis.c1,
            )?,
        });
    }
    let text = match output_format(common) {
        OutputFormat::Json => serde_json::to_string_pretty(&rows)?,
        OutputFormat::Csv => {
            let mut s = String::from(
                "ka,p_match,fa_traditional,fa_hard,root_collisions,complexity_traditional,complexity_hard,complexity_soft,ka_bound\n",
            );
            for r in &rows {
                let vals = [
                    r.p_match,
                    r.fa_traditional,
                    r.fa_hard,
                    r.root_collisions,
                    r.complexity_traditional,
                    r.complexity_hard,
                    r.complexity_soft,
                    r.ka_bound,
                ];
                let vals: Vec<String> = vals.iter().map(|v| round_sig(*v).to_string()).collect();
                s.push_str(&format!("{},{}\n", r.ka, vals.join(",")));
            }
            s
        }
    };
    emit(common, &text)
}

fn trial(cfg: SystemConfig, common: &Common) -> Result<()> {
    let setup = SystemSetup::new(cfg)?;
    let sim = &setup.config.sim;
    let (ka, db) = (sim.ka[0], sim.ebn0_db[0]);
    let r = run_trial(&setup, ka, db, sim.seed)?;
    let mut s = String::new();
    s.push_str(&format!(
        "seed {}  ka {ka}  axis {db} dB  noise_var {:.4e}  front end {:.3}s\n",
        r.seed, r.noise_var, r.front_end_seconds
    ));
    s.push_str("slot  sent  listed  missed  false  diverged\n");
    for (i, st) in r.slots.iter().enumerate() {
        s.push_str(&format!(
            "{:>4}  {:>4}  {:>6}  {:>6}  {:>5}  {}\n",
            i + 1,
            st.sent,
            st.listed,
            st.missed,
            st.false_detections,
            st.diverged
        ));
    }
    for o in &r.outcomes {
        s.push_str(&format!(
            "{:<11}  decoded {:>4}  missed {:>3}  false {:>4}  p_md {:.4}  p_fa {:.4}  truncated roots {}  {:.3}s\n",
            o.kind.name(),
            o.decoded.len(),
            o.metrics.missed,
            o.metrics.false_alarms,
            o.metrics.p_md,
            o.metrics.p_fa,
            o.decoded.truncated_roots,
            o.seconds
        ));
    }
    emit(common, &s)
}

fn run() -> Result<()> {
    let (args, overrides) = split_overrides(std::env::args().collect())?;
    let cli = Cli::parse_from(args);
    let cfg = load_config(&cli.common, &overrides)?;
    match cli.command {
        Command::Simulate => simulate(cfg, &cli.common),
        Command::Analyze => analyze(cfg, &cli.common),
        Command::Trial => trial(cfg, &cli.common),
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
