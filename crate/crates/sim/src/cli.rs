//! Command-line front end.

use std::fs::File;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use otfs_core::coding::CodeSpec;
use otfs_core::state_evolution::{build_g_table, GTableBudget};

use crate::config::{DetectorName, ExperimentConfig};
use crate::harness::{self, noise_precision};
use crate::io::{self as fio, DetectorTraceRow, IterationRow, ResultsWriter, TurboTraceRow};
use crate::SimError;

#[derive(Debug, Parser)]
#[command(name = "otfs", version, about = "OTFS link simulator with AMP/UAMP detectors")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Common {
    /// Experiment config (JSON). Built-in defaults when omitted.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Override a config key; repeatable, later values win.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub set: Vec<String>,
    /// Output file; standard output when omitted.
    #[arg(long, short)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// BER/FER sweep over the configured SNR grid and detectors.
    Simulate {
        #[command(flatten)]
        common: Common,
        /// Also write per-iteration bit errors (BER versus iteration).
        #[arg(long, value_name = "PATH")]
        iterations_out: Option<PathBuf>,
    },
    /// Tabulate the decoder transfer function for state evolution.
    Gtable(Common),
    /// State-evolution BER per outer iteration from a saved g-table.
    SePredict {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        gtable: PathBuf,
        /// Fixed channel JSON; otherwise averages over `trials` random channels.
        #[arg(long)]
        channel: Option<PathBuf>,
        /// Use the raw table instead of its monotone fit.
        #[arg(long)]
        raw: bool,
    },
    /// Write a channel realization as JSON, or re-emit a loaded one.
    ChannelDump {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 0)]
        trial: u64,
        /// Channel JSON to load and re-emit instead of sampling.
        #[arg(long)]
        input: Option<PathBuf>,
    },
    /// Per-iteration trace of one seeded frame.
    Trace {
        #[command(flatten)]
        common: Common,
        /// SNR in dB; the first configured point when omitted.
        #[arg(long)]
        snr: Option<f64>,
        #[arg(long, default_value_t = 0)]
        trial: u64,
        /// The first configured detector when omitted.
        #[arg(long, value_enum)]
        detector: Option<DetectorName>,
    },
}

fn load_config(c: &Common) -> Result<ExperimentConfig, SimError> {
    match &c.config {
        Some(p) => ExperimentConfig::load(p, &c.set),
        None => ExperimentConfig::from_json("{}", &c.set),
    }
}

fn output(path: &Option<PathBuf>) -> Result<Box<dyn Write>, SimError> {
    Ok(match path {
        Some(p) => Box::new(
            File::create(p).map_err(|e| SimError::Runtime(format!("{}: {e}", p.display())))?,
        ),
        None => Box::new(io::stdout().lock()),
    })
}

pub fn run(cli: Cli) -> Result<(), SimError> {
    match cli.command {
        Command::Simulate { common, iterations_out } => simulate(&common, iterations_out.as_deref()),
        Command::Gtable(c) => gtable(&c),
        Command::SePredict {
            common,
            gtable,
            channel,
            raw,
        } => se_predict(&common, &gtable, channel.as_deref(), raw),
        Command::ChannelDump { common, trial, input } => channel_dump(&common, trial, input.as_deref()),
        Command::Trace {
            common,
            snr,
            trial,
            detector,
        } => trace(&common, snr, trial, detector),
    }
}

fn simulate(c: &Common, iterations_out: Option<&Path>) -> Result<(), SimError> {
    let cfg = load_config(c)?;
    let mut w = ResultsWriter::new(output(&c.out)?, &cfg)?;
    let mut err = None;
    let records = harness::run_sweep_with(&cfg, |r| {
        log::info!("{} dB {}: ber {:e} over {} trials", r.snr_db, r.detector.as_str(), r.ber, r.trials);
        if let Err(e) = w.write(r) {
            err.get_or_insert(e);
        }
    })?;
    if let Some(e) = err {
        return Err(e);
    }
    if let Some(p) = iterations_out {
        let rows: Vec<IterationRow> = records
            .iter()
            .flat_map(|r| {
                r.iteration_bit_errors.iter().enumerate().map(|(i, &e)| IterationRow {
                    snr_db: r.snr_db,
                    detector: r.detector.as_str(),
                    iter: i + 1,
                    bit_errors: e,
                    bits: r.bits,
                    ber: e as f64 / r.bits.max(1) as f64,
                })
            })
            .collect();
        let mut f = output(&Some(p.to_path_buf()))?;
        fio::write_results_preamble(&mut f, &cfg)?;
        fio::write_rows(f, &rows)?;
    }
    Ok(())
}

fn gtable(c: &Common) -> Result<(), SimError> {
    let cfg = load_config(c)?;
    let budget = GTableBudget {
        min_trials: cfg.gtable_min_trials,
        max_trials: cfg.gtable_max_trials,
        target_errors: cfg.gtable_target_errors,
    };
    let table = build_g_table(
        &CodeSpec::default(),
        &cfg.constellation(),
        cfg.m * cfg.n,
        &cfg.tau_grid(),
        &budget,
        cfg.master_seed,
    )?;
    fio::write_gtable(output(&c.out)?, &table)
}

fn se_predict(c: &Common, gtable: &Path, channel: Option<&Path>, raw: bool) -> Result<(), SimError> {
    let mut cfg = load_config(c)?;
    let table = fio::load_gtable(gtable)?;
    let table = if raw { table } else { table.regularized() };
    if let Some(p) = channel {
        cfg.channel_file = Some(p.display().to_string());
        cfg.load_channel_file()?;
    }
    let trials = if cfg.fixed_channel.is_some() { 1 } else { cfg.trials };
    let mut w = output(&c.out)?;
    fio::write_results_preamble(&mut w, &cfg)?;
    let mut csv = csv::Writer::from_writer(w);
    csv.write_record(["snr_db", "detector", "iter", "ber"])?;
    for &det in &cfg.detectors {
        let curves = harness::se_curves(&cfg, det, &cfg.snr_db, &table, trials)?;
        for (&snr, (ber, clamped)) in cfg.snr_db.iter().zip(curves) {
            if clamped > 0 {
                log::warn!("{snr} dB ({}): {clamped} lookups fell outside the g-table", det.as_str());
            }
            for (i, b) in ber.iter().enumerate() {
                csv.write_record([snr.to_string(), det.as_str().to_string(), (i + 1).to_string(), format!("{b:e}")])?;
            }
        }
    }
    csv.flush()?;
    Ok(())
}

fn channel_dump(c: &Common, trial: u64, input: Option<&Path>) -> Result<(), SimError> {
    let ch = match input {
        Some(p) => fio::read_channel(p)?,
        None => harness::channel_for_trial(&load_config(c)?, trial)?,
    };
    let text = serde_json::to_string_pretty(&fio::ChannelJson::from_channel(&ch))
        .map_err(|e| SimError::Runtime(e.to_string()))?;
    writeln!(output(&c.out)?, "{text}")?;
    Ok(())
}

fn trace(c: &Common, snr: Option<f64>, trial: u64, detector: Option<DetectorName>) -> Result<(), SimError> {
    let cfg = load_config(c)?;
    let snr = snr
        .or_else(|| cfg.snr_db.first().copied())
        .ok_or_else(|| SimError::Config("snr_db: empty and no --snr given".into()))?;
    let detector = detector.unwrap_or(cfg.detectors[0]);
    let frame = harness::frame_for_trial(&cfg, trial)?;
    let out = harness::run_frame(&cfg, detector, snr, trial, &frame)?;
    log::info!("trace at {snr} dB, eps = {}", noise_precision(snr));
    let w = output(&c.out)?;
    if cfg.coded {
        let k = frame.payload.len() as f64;
        let nc = frame.tx_bits.len() as f64;
        let rows: Vec<TurboTraceRow> = out
            .iteration_stats
            .iter()
            .enumerate()
            .map(|(i, &(eps_hat, _))| TurboTraceRow {
                iter: i + 1,
                ber_info: out.iteration_bit_errors[i] as f64 / k,
                ber_coded: out.iteration_coded_errors[i] as f64 / nc,
                eps_hat,
            })
            .collect();
        fio::write_rows(w, &rows)
    } else {
        let j = frame.x.len() as f64;
        let rows: Vec<DetectorTraceRow> = out
            .iteration_stats
            .iter()
            .enumerate()
            .map(|(i, &(eps_hat, mean_nu_x))| DetectorTraceRow {
                trial,
                iter: i + 1,
                eps_hat,
                mean_nu_x,
                ser_vs_truth: out.iteration_symbol_errors[i] as f64 / j,
            })
            .collect();
        fio::write_rows(w, &rows)
    }
}
