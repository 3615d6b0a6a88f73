//! Experiment configuration: a flat JSON document plus `key=value`
//! overrides.

use std::path::Path;

use otfs_core::coding::CodeSpec;
use otfs_core::dd_channel::{ChannelSampler, DdChannel, OtfsGrid, Waveform};
use otfs_core::detectors::DetectorKind;
use otfs_core::modem::{Constellation, Modulation};
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::SimError;

pub const SCHEMA: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WaveformName {
    Biorthogonal,
    Rectangular,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModulationName {
    Qpsk,
    #[serde(rename = "16qam")]
    Qam16,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum DetectorName {
    Amp,
    Uamp,
}

impl DetectorName {
    pub fn as_str(self) -> &'static str {
        match self {
            DetectorName::Amp => "amp",
            DetectorName::Uamp => "uamp",
        }
    }
}

impl WaveformName {
    pub fn as_str(self) -> &'static str {
        match self {
            WaveformName::Biorthogonal => "biorthogonal",
            WaveformName::Rectangular => "rectangular",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub schema: u32,
    #[serde(rename = "M")]
    pub m: usize,
    #[serde(rename = "N")]
    pub n: usize,
    pub subcarrier_spacing_hz: f64,
    pub carrier_freq_hz: f64,
    pub waveform: WaveformName,
    pub modulation: ModulationName,
    #[serde(rename = "P")]
    pub paths: usize,
    pub pdp_alpha: f64,
    pub k_max: usize,
    pub l_max: usize,
    pub fractional: bool,
    pub distinct_delays: bool,
    /// Replace the random channel with the identity (single unit path).
    pub identity_channel: bool,
    /// Channel JSON used for every trial instead of random draws.
    pub channel_file: Option<String>,
    /// Contents of `channel_file`, loaded when the config is parsed.
    #[serde(skip)]
    pub fixed_channel: Option<DdChannel>,
    /// One-sided fractional-Doppler spread; `null` means `N/2`.
    pub trunc: Option<usize>,
    pub detectors: Vec<DetectorName>,
    pub coded: bool,
    pub max_iter: usize,
    pub outer_iterations: usize,
    pub snr_db: Vec<f64>,
    pub trials: u64,
    /// Stop a point early once this many bit errors are counted.
    pub min_bit_errors: Option<u64>,
    /// Trials evaluated between early-stop checks.
    pub batch: u64,
    pub master_seed: u64,
    pub tau_min: f64,
    pub tau_max: f64,
    pub tau_points: usize,
    pub gtable_min_trials: u64,
    pub gtable_max_trials: u64,
    pub gtable_target_errors: u64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            schema: SCHEMA,
            m: 64,
            n: 16,
            subcarrier_spacing_hz: 2e3,
            carrier_freq_hz: 3e9,
            waveform: WaveformName::Biorthogonal,
            modulation: ModulationName::Qpsk,
            paths: 10,
            pdp_alpha: 0.0,
            k_max: 6,
            l_max: 14,
            fractional: true,
            distinct_delays: true,
            identity_channel: false,
            channel_file: None,
            fixed_channel: None,
            trunc: None,
            detectors: vec![DetectorName::Uamp],
            coded: false,
            max_iter: 15,
            outer_iterations: 15,
            snr_db: vec![10.0],
            trials: 100,
            min_bit_errors: None,
            batch: 32,
            master_seed: 1,
            tau_min: 1e-3,
            tau_max: 10.0,
            tau_points: 25,
            gtable_min_trials: 20,
            gtable_max_trials: 2000,
            gtable_target_errors: 100,
        }
    }
}

fn config_err(msg: impl Into<String>) -> SimError {
    SimError::Config(msg.into())
}

impl ExperimentConfig {
    /// Parses a JSON document and applies overrides in order.
    pub fn from_json(text: &str, overrides: &[String]) -> Result<Self, SimError> {
        let value: Value = serde_json::from_str(text).map_err(|e| config_err(format!("invalid JSON: {e}")))?;
        let Value::Object(mut map) = value else {
            return Err(config_err("config must be a JSON object"));
        };
        apply_overrides(&mut map, overrides)?;
        let mut cfg: Self = serde_json::from_value(Value::Object(map)).map_err(|e| config_err(e.to_string()))?;
        cfg.validate()?;
        cfg.load_channel_file()?;
        Ok(cfg)
    }

    pub fn load(path: &Path, overrides: &[String]) -> Result<Self, SimError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| config_err(format!("cannot read config {}: {e}", path.display())))?;
        Self::from_json(&text, overrides)
    }

    /// Loads `channel_file` into `fixed_channel`; the grid must match.
    pub fn load_channel_file(&mut self) -> Result<(), SimError> {
        let Some(path) = &self.channel_file else {
            self.fixed_channel = None;
            return Ok(());
        };
        let ch = crate::io::read_channel(Path::new(path))
            .map_err(|e| config_err(format!("channel_file: {e}")))?;
        let g = ch.grid();
        if (g.m, g.n) != (self.m, self.n) {
            return Err(config_err(format!(
                "channel_file: grid {}x{} does not match M={} N={}",
                g.m, g.n, self.m, self.n
            )));
        }
        self.fixed_channel = Some(ch);
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<(), SimError> {
        if self.schema != SCHEMA {
            return Err(config_err(format!("schema: unsupported version {}", self.schema)));
        }
        if self.trials == 0 {
            return Err(config_err("trials: must be at least 1"));
        }
        if self.batch == 0 {
            return Err(config_err("batch: must be at least 1"));
        }
        if self.max_iter == 0 || self.outer_iterations == 0 {
            return Err(config_err("max_iter/outer_iterations: must be at least 1"));
        }
        if self.snr_db.windows(2).any(|w| !(w[1] > w[0])) || self.snr_db.iter().any(|s| !s.is_finite()) {
            return Err(config_err("snr_db: must be finite and strictly ascending"));
        }
        if self.detectors.is_empty() {
            return Err(config_err("detectors: at least one detector is required"));
        }
        if !(self.tau_min > 0.0 && self.tau_max > self.tau_min) || self.tau_points < 2 {
            return Err(config_err("tau_min/tau_max/tau_points: need 0 < tau_min < tau_max and >= 2 points"));
        }
        if self.gtable_max_trials == 0 || self.gtable_min_trials > self.gtable_max_trials {
            return Err(config_err("gtable_min_trials/gtable_max_trials: need 0 < min <= max"));
        }
        let grid = self.grid()?;
        if let Some(t) = self.trunc {
            if t >= self.n {
                return Err(config_err(format!("trunc: must be below N = {}", self.n)));
            }
        }
        self.sampler().validate(&grid).map_err(|e| config_err(e.to_string()))?;
        if self.coded {
            CodeSpec::default()
                .info_len(grid.len() * self.constellation().bits_per_symbol())
                .map_err(|e| config_err(e.to_string()))?;
        }
        Ok(())
    }

    pub fn grid(&self) -> Result<OtfsGrid, SimError> {
        OtfsGrid::new(self.m, self.n, self.subcarrier_spacing_hz, self.carrier_freq_hz)
            .map_err(|e| config_err(e.to_string()))
    }

    pub fn sampler(&self) -> ChannelSampler {
        ChannelSampler {
            paths: self.paths,
            pdp_alpha: self.pdp_alpha,
            k_max: self.k_max as i64,
            l_max: self.l_max,
            fractional: self.fractional,
            distinct_delays: self.distinct_delays,
        }
    }

    pub fn waveform(&self) -> Waveform {
        match self.waveform {
            WaveformName::Biorthogonal => Waveform::Biorthogonal,
            WaveformName::Rectangular => Waveform::Rectangular,
        }
    }

    pub fn constellation(&self) -> Constellation {
        Constellation::new(match self.modulation {
            ModulationName::Qpsk => Modulation::Qpsk,
            ModulationName::Qam16 => Modulation::Qam16,
        })
    }

    pub fn trunc(&self) -> usize {
        self.trunc.unwrap_or(self.n / 2)
    }

    pub fn detector_kind(&self, d: DetectorName) -> DetectorKind {
        match (d, self.waveform) {
            (DetectorName::Amp, _) => DetectorKind::Amp,
            (DetectorName::Uamp, WaveformName::Biorthogonal) => DetectorKind::Uamp,
            (DetectorName::Uamp, WaveformName::Rectangular) => DetectorKind::UampRect,
        }
    }

    pub fn tau_grid(&self) -> Vec<f64> {
        otfs_core::state_evolution::geometric_grid(self.tau_min, self.tau_max, self.tau_points)
    }
}

/// Applies `key=value` pairs. Values parse as JSON and fall back to plain
/// strings; keys must name an existing field.
pub fn apply_overrides(map: &mut Map<String, Value>, overrides: &[String]) -> Result<(), SimError> {
    let Value::Object(known) = serde_json::to_value(ExperimentConfig::default()).expect("serializes") else {
        unreachable!()
    };
    for o in overrides {
        let (k, v) = o
            .split_once('=')
            .ok_or_else(|| config_err(format!("override `{o}` is not key=value")))?;
        let k = k.trim();
        if !known.contains_key(k) {
            return Err(config_err(format!("unknown config key `{k}`")));
        }
        let v = serde_json::from_str(v.trim()).unwrap_or_else(|_| Value::String(v.trim().to_string()));
        map.insert(k.to_string(), v);
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip() {
        let cfg = ExperimentConfig::default();
        let back = ExperimentConfig::from_json(&cfg.to_json(), &[]).unwrap();
        assert_eq!(cfg, back);
    }

    #[test]
    fn overrides_apply_and_unknown_keys_are_named() {
        let cfg = ExperimentConfig::from_json(
            "{}",
            &["M=32".into(), "snr_db=[1, 2]".into(), "modulation=16qam".into()],
        )
        .unwrap();
        assert_eq!(cfg.m, 32);
        assert_eq!(cfg.snr_db, vec![1.0, 2.0]);
        assert_eq!(cfg.modulation, ModulationName::Qam16);
        let err = ExperimentConfig::from_json("{}", &["Q=1".into()]).unwrap_err();
        assert!(err.to_string().contains("`Q`"));
        let err = ExperimentConfig::from_json(r#"{"bogus": 1}"#, &[]).unwrap_err();
        assert!(err.to_string().contains("bogus"));
    }

    #[test]
    fn invalid_values_rejected() {
        for o in ["trials=0", "snr_db=[3, 1]", "k_max=8", "P=20", "schema=2", "detectors=[]"] {
            assert!(ExperimentConfig::from_json("{}", &[o.into()]).is_err(), "{o}");
        }
    }
}
