//! On-disk formats: results CSV, channel JSON, g-table CSV and traces.
//!
//! CSV files open with `# key=value` comment lines; readers skip them.

use std::fs::File;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use otfs_core::dd_channel::{ChannelPath, DdChannel, OtfsGrid};
use otfs_core::state_evolution::{GRow, GTable};
use otfs_core::C64;
use serde::{Deserialize, Serialize};

use crate::config::{ExperimentConfig, SCHEMA};
use crate::harness::BerRecord;
use crate::SimError;

pub const RESULTS_HEADER: [&str; 12] = [
    "snr_db",
    "detector",
    "waveform",
    "coded",
    "P",
    "trials",
    "bit_errors",
    "frame_errors",
    "ber",
    "fer",
    "mean_eps_hat_db",
    "wall_s",
];

fn runtime(e: impl std::fmt::Display) -> SimError {
    SimError::Runtime(e.to_string())
}

fn create(path: &Path) -> Result<File, SimError> {
    File::create(path).map_err(|e| runtime(format!("{}: {e}", path.display())))
}

fn open(path: &Path) -> Result<File, SimError> {
    File::open(path).map_err(|e| runtime(format!("{}: {e}", path.display())))
}

/// Writes the schema and config comment lines of a results file.
pub fn write_results_preamble<W: Write>(w: &mut W, cfg: &ExperimentConfig) -> Result<(), SimError> {
    writeln!(w, "# schema={SCHEMA}")?;
    let compact = serde_json::to_string(cfg).map_err(runtime)?;
    writeln!(w, "# config={compact}")?;
    Ok(())
}

/// Streaming results writer; each row is flushed as it is written.
pub struct ResultsWriter<W: Write> {
    inner: csv::Writer<W>,
}

impl<W: Write> ResultsWriter<W> {
    pub fn new(mut w: W, cfg: &ExperimentConfig) -> Result<Self, SimError> {
        write_results_preamble(&mut w, cfg)?;
        let mut inner = csv::Writer::from_writer(w);
        inner.write_record(RESULTS_HEADER)?;
        inner.flush()?;
        Ok(Self { inner })
    }

    pub fn write(&mut self, r: &BerRecord) -> Result<(), SimError> {
        self.inner.write_record([
            r.snr_db.to_string(),
            r.detector.as_str().to_string(),
            r.waveform.as_str().to_string(),
            r.coded.to_string(),
            r.paths.to_string(),
            r.trials.to_string(),
            r.bit_errors.to_string(),
            r.frame_errors.to_string(),
            format!("{:e}", r.ber),
            format!("{:e}", r.fer),
            format!("{:.4}", r.mean_eps_hat_db),
            format!("{:.3}", r.wall_s),
        ])?;
        self.inner.flush()?;
        Ok(())
    }
}

pub fn write_results(path: &Path, cfg: &ExperimentConfig, records: &[BerRecord]) -> Result<(), SimError> {
    let mut w = ResultsWriter::new(create(path)?, cfg)?;
    records.iter().try_for_each(|r| w.write(r))
}

/// Results rows as string maps keyed by column name. Used by tests and
/// downstream tooling that only needs to read values back.
pub fn read_results<R: Read>(r: R) -> Result<Vec<Vec<(String, String)>>, SimError> {
    let mut rdr = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(r);
    let header = rdr.headers()?.clone();
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        out.push(
            header
                .iter()
                .zip(rec.iter())
                .map(|(h, v)| (h.to_string(), v.to_string()))
                .collect(),
        );
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridJson {
    #[serde(rename = "M")]
    pub m: usize,
    #[serde(rename = "N")]
    pub n: usize,
    pub subcarrier_spacing_hz: f64,
    pub carrier_freq_hz: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PathJson {
    pub gain_re: f64,
    pub gain_im: f64,
    pub l: usize,
    pub k: i64,
    pub kappa: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelJson {
    pub schema: u32,
    pub grid: GridJson,
    pub paths: Vec<PathJson>,
}

impl ChannelJson {
    pub fn from_channel(ch: &DdChannel) -> Self {
        let g = ch.grid();
        Self {
            schema: SCHEMA,
            grid: GridJson {
                m: g.m,
                n: g.n,
                subcarrier_spacing_hz: g.subcarrier_spacing,
                carrier_freq_hz: g.carrier_freq,
            },
            paths: ch
                .paths()
                .iter()
                .map(|p| PathJson {
                    gain_re: p.gain.re,
                    gain_im: p.gain.im,
                    l: p.delay_idx,
                    k: p.doppler_idx,
                    kappa: p.frac_doppler,
                })
                .collect(),
        }
    }

    pub fn to_channel(&self) -> Result<DdChannel, SimError> {
        if self.schema != SCHEMA {
            return Err(runtime(format!("unsupported channel schema {}", self.schema)));
        }
        let g = &self.grid;
        let grid = OtfsGrid::new(g.m, g.n, g.subcarrier_spacing_hz, g.carrier_freq_hz)?;
        let paths = self
            .paths
            .iter()
            .map(|p| ChannelPath::new(C64::new(p.gain_re, p.gain_im), p.l, p.k, p.kappa))
            .collect();
        Ok(DdChannel::new(grid, paths)?)
    }
}

pub fn write_channel(path: &Path, ch: &DdChannel) -> Result<(), SimError> {
    let text = serde_json::to_string_pretty(&ChannelJson::from_channel(ch)).map_err(runtime)?;
    let mut f = create(path)?;
    writeln!(f, "{text}")?;
    Ok(())
}

pub fn read_channel(path: &Path) -> Result<DdChannel, SimError> {
    let json: ChannelJson = serde_json::from_reader(BufReader::new(open(path)?))
        .map_err(|e| runtime(format!("{}: {e}", path.display())))?;
    json.to_channel()
}

pub fn write_gtable<W: Write>(mut w: W, table: &GTable) -> Result<(), SimError> {
    writeln!(w, "# schema={SCHEMA}")?;
    writeln!(w, "# info_bits={}", table.info_bits)?;
    let mut csv = csv::Writer::from_writer(w);
    csv.write_record(["tau", "ber", "v_x", "trials", "errors"])?;
    for r in table.rows() {
        csv.write_record([
            format!("{:e}", r.tau),
            format!("{:e}", r.ber),
            format!("{:e}", r.v_x),
            r.trials.to_string(),
            r.errors.to_string(),
        ])?;
    }
    csv.flush()?;
    Ok(())
}

pub fn save_gtable(path: &Path, table: &GTable) -> Result<(), SimError> {
    write_gtable(create(path)?, table)
}

#[derive(Deserialize)]
struct GRowCsv {
    tau: f64,
    ber: f64,
    v_x: f64,
    trials: u64,
    errors: u64,
}

pub fn read_gtable<R: Read>(r: R) -> Result<GTable, SimError> {
    let mut text = String::new();
    BufReader::new(r).read_to_string(&mut text)?;
    let mut info_bits = None;
    for line in text.lines().take_while(|l| l.starts_with('#')) {
        if let Some(v) = line.trim_start_matches('#').trim().strip_prefix("info_bits=") {
            info_bits = Some(v.trim().parse::<usize>().map_err(runtime)?);
        }
    }
    let info_bits = info_bits.ok_or_else(|| runtime("g-table is missing `# info_bits=`"))?;
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let rows = rdr
        .deserialize::<GRowCsv>()
        .map(|r| {
            r.map(|r| GRow {
                tau: r.tau,
                ber: r.ber,
                v_x: r.v_x,
                trials: r.trials,
                errors: r.errors,
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(GTable::from_rows(rows, info_bits)?)
}

pub fn load_gtable(path: &Path) -> Result<GTable, SimError> {
    read_gtable(open(path)?)
}

/// Bit errors after each detector or outer iteration, summed over trials.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IterationRow {
    pub snr_db: f64,
    pub detector: &'static str,
    pub iter: usize,
    pub bit_errors: u64,
    pub bits: u64,
    pub ber: f64,
}

/// Per-iteration row of an uncoded detector trace.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DetectorTraceRow {
    pub trial: u64,
    pub iter: usize,
    pub eps_hat: f64,
    pub mean_nu_x: f64,
    pub ser_vs_truth: f64,
}

/// Per-outer-iteration row of a turbo trace.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TurboTraceRow {
    pub iter: usize,
    pub ber_info: f64,
    pub ber_coded: f64,
    pub eps_hat: f64,
}

pub fn write_rows<W: Write, T: Serialize>(w: W, rows: &[T]) -> Result<(), SimError> {
    let mut csv = csv::Writer::from_writer(w);
    for r in rows {
        csv.serialize(r)?;
    }
    csv.flush()?;
    Ok(())
}

/// Column names of the first non-comment line of a CSV file.
pub fn csv_header(path: &Path) -> Result<Vec<String>, SimError> {
    let f = BufReader::new(open(path)?);
    for line in f.lines() {
        let line = line?;
        if !line.starts_with('#') {
            return Ok(line.split(',').map(str::to_string).collect());
        }
    }
    Ok(Vec::new())
}
