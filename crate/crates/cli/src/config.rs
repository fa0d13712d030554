//! Run configuration: defaults, flat key=value files, and CLI overrides.
//!
//! Every key can come from a config file (`key = value`, `#` comments) or
//! from the same-named command-line flag; flags win. All values funnel
//! through [`RunConfig::apply`] so both sources share one parser.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};

use gfa_core::attack::AttackMode;
use gfa_core::reliability::SystemConfig;

/// Where detect-sim gets its occupancy counts from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DetectSource {
    /// Exact counts (coverage plus attack increments).
    Counts,
    /// Full signal synthesis and eigenvalue-ratio counting.
    Signals,
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub seed: u64,
    pub trials: usize,
    pub out: Option<PathBuf>,

    // System numerology.
    pub antennas: usize,
    pub total_users: usize,
    pub active_users: usize,
    pub code_dimension: u32,
    /// Code order t; defaults to total_users + 1 when absent.
    pub code_order: Option<u32>,
    pub field_size: Option<u64>,
    pub n_coding: usize,
    pub n_estimation: usize,
    pub n_data: usize,
    pub subcarrier_spacing: f64,
    pub slot_time: f64,
    pub extra_time: f64,
    pub data_slots: f64,
    pub payload_bits: f64,
    /// Data-phase mean SNR in dB.
    pub snr_db: f64,
    /// Pilot-phase SNR in dB (signal-level detection).
    pub pilot_snr_db: f64,
    pub error_weight: f64,
    pub interferers: Option<usize>,
    pub taps: usize,
    pub reliability_cap: f64,

    // Detector.
    pub window: usize,
    pub noise_power: f64,
    pub target_pf: f64,
    /// Fixed ratio threshold; calibrated from target_pf when absent.
    pub threshold: Option<f64>,
    pub calibration_trials: usize,
    pub detect_source: DetectSource,

    // Attacker (detect-sim can pin a mode instead of sampling).
    pub attack_mode: Option<AttackMode>,
    pub attack_power: f64,
    pub attack_phase: Option<f64>,

    // Sweep grids.
    pub grid: Option<Vec<f64>>,
    pub antennas_grid: Vec<usize>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            trials: 1000,
            out: None,
            antennas: 100,
            total_users: 4,
            active_users: 4,
            code_dimension: 3,
            code_order: None,
            field_size: None,
            n_coding: 512,
            n_estimation: 512,
            n_data: 4,
            subcarrier_spacing: 60e3,
            slot_time: 17.86e-6,
            extra_time: 0.0,
            data_slots: 18.0,
            payload_bits: 256.0,
            snr_db: 10.0,
            pilot_snr_db: 20.0,
            error_weight: 0.0,
            interferers: None,
            taps: 6,
            reliability_cap: 1e-5,
            window: 4,
            noise_power: 1.0,
            target_pf: 1e-3,
            threshold: None,
            calibration_trials: 20_000,
            detect_source: DetectSource::Counts,
            attack_mode: None,
            attack_power: 100.0,
            attack_phase: None,
            grid: None,
            antennas_grid: vec![25, 50, 100, 200, 400],
        }
    }
}

impl RunConfig {
    /// Apply a config file: one `key = value` per line, `#` comments.
    pub fn apply_file(&mut self, path: &Path) -> Result<()> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| anyhow!("{}:{}: expected key = value", path.display(), lineno + 1))?;
            self.apply(key.trim(), value.trim())
                .with_context(|| format!("{}:{}", path.display(), lineno + 1))?;
        }
        Ok(())
    }

    /// Apply one key/value assignment (shared by files and flags).
    pub fn apply(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "seed" => self.seed = parse(key, value)?,
            "trials" => self.trials = parse(key, value)?,
            "out" => self.out = Some(PathBuf::from(value)),
            "antennas" => self.antennas = parse(key, value)?,
            "total_users" => self.total_users = parse(key, value)?,
            "active_users" => self.active_users = parse(key, value)?,
            "code_dimension" => self.code_dimension = parse(key, value)?,
            "code_order" => self.code_order = Some(parse(key, value)?),
            "field_size" => self.field_size = Some(parse(key, value)?),
            "n_coding" => self.n_coding = parse(key, value)?,
            "n_estimation" => self.n_estimation = parse(key, value)?,
            "n_data" => self.n_data = parse(key, value)?,
            "subcarrier_spacing" => self.subcarrier_spacing = parse(key, value)?,
            "slot_time" => self.slot_time = parse(key, value)?,
            "extra_time" => self.extra_time = parse(key, value)?,
            "data_slots" => self.data_slots = parse(key, value)?,
            "payload_bits" => self.payload_bits = parse(key, value)?,
            "snr_db" => self.snr_db = parse(key, value)?,
            "pilot_snr_db" => self.pilot_snr_db = parse(key, value)?,
            "error_weight" => self.error_weight = parse(key, value)?,
            "interferers" => self.interferers = Some(parse(key, value)?),
            "taps" => self.taps = parse(key, value)?,
            "reliability_cap" => self.reliability_cap = parse(key, value)?,
            "window" => self.window = parse(key, value)?,
            "noise_power" => self.noise_power = parse(key, value)?,
            "target_pf" => self.target_pf = parse(key, value)?,
            "threshold" => self.threshold = Some(parse(key, value)?),
            "calibration_trials" => self.calibration_trials = parse(key, value)?,
            "detect_source" => {
                self.detect_source = match value {
                    "counts" => DetectSource::Counts,
                    "signals" => DetectSource::Signals,
                    other => bail!("detect_source must be counts|signals, got {other}"),
                }
            }
            "attack_mode" => {
                self.attack_mode = match value {
                    "random" => None,
                    "none" => Some(AttackMode::NoAttacker),
                    "sc" => Some(AttackMode::SilenceCheating),
                    "wb-pj" => Some(AttackMode::WideBand),
                    "pb-pj" => Some(AttackMode::PartialBand { jammed: BTreeSet::new() }),
                    other => bail!("attack_mode must be random|none|sc|wb-pj|pb-pj, got {other}"),
                }
            }
            "attack_jammed" => {
                let jammed: BTreeSet<usize> = value
                    .split([',', ';'])
                    .filter(|s| !s.trim().is_empty())
                    .map(|s| parse::<usize>("attack_jammed", s.trim()))
                    .collect::<Result<_>>()?;
                match &mut self.attack_mode {
                    Some(AttackMode::PartialBand { jammed: j }) => *j = jammed,
                    _ => self.attack_mode = Some(AttackMode::PartialBand { jammed }),
                }
            }
            "attack_power" => self.attack_power = parse(key, value)?,
            "attack_phase" => self.attack_phase = Some(parse(key, value)?),
            "grid" => self.grid = Some(parse_grid(value)?),
            "antennas_grid" => {
                self.antennas_grid = value
                    .split(',')
                    .map(|s| parse::<usize>("antennas_grid", s.trim()))
                    .collect::<Result<_>>()?;
            }
            other => bail!("unknown configuration key `{other}`"),
        }
        Ok(())
    }

    /// Effective code order: configured, or total_users + 1.
    pub fn effective_order(&self) -> u32 {
        self.code_order.unwrap_or(self.total_users as u32 + 1)
    }

    /// Linear data-phase SNR.
    pub fn snr_linear(&self) -> f64 {
        10f64.powf(self.snr_db / 10.0)
    }

    /// Linear pilot-phase SNR.
    pub fn pilot_snr_linear(&self) -> f64 {
        10f64.powf(self.pilot_snr_db / 10.0)
    }

    /// The analysis-side system configuration.
    pub fn system(&self) -> SystemConfig {
        SystemConfig {
            antennas: self.antennas,
            total_users: self.total_users,
            active_users: self.active_users,
            code_dimension: self.code_dimension,
            field_size: self.field_size,
            n_coding: self.n_coding,
            n_estimation: self.n_estimation,
            n_data: self.n_data,
            subcarrier_spacing: self.subcarrier_spacing,
            slot_time: self.slot_time,
            extra_time: self.extra_time,
            data_slots: self.data_slots,
            payload_bits: self.payload_bits,
            mean_snr: self.snr_linear(),
            error_weight: self.error_weight,
            interferers: self.interferers,
            taps: self.taps,
            reliability_cap: self.reliability_cap,
        }
    }

    /// Resolve the output path: relative paths land under the directory
    /// named by `GFA_OUT_DIR` when that variable is set.
    pub fn resolved_out(&self) -> Option<PathBuf> {
        let out = self.out.as_ref()?;
        if out.is_absolute() {
            return Some(out.clone());
        }
        match std::env::var_os("GFA_OUT_DIR") {
            Some(dir) => Some(PathBuf::from(dir).join(out)),
            None => Some(out.clone()),
        }
    }
}

fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    value
        .parse()
        .map_err(|e| anyhow!("invalid value `{value}` for {key}: {e}"))
}

/// A grid is either `start:stop:count` (inclusive linspace) or an
/// explicit comma-separated list.
pub fn parse_grid(value: &str) -> Result<Vec<f64>> {
    if value.contains(':') {
        let parts: Vec<&str> = value.split(':').collect();
        if parts.len() != 3 {
            bail!("grid range must be start:stop:count, got {value}");
        }
        let start: f64 = parse("grid start", parts[0])?;
        let stop: f64 = parse("grid stop", parts[1])?;
        let count: usize = parse("grid count", parts[2])?;
        if count < 2 {
            bail!("grid count must be at least 2");
        }
        Ok((0..count)
            .map(|i| start + (stop - start) * i as f64 / (count - 1) as f64)
            .collect())
    } else {
        value
            .split(',')
            .filter(|s| !s.trim().is_empty())
            .map(|s| parse("grid value", s.trim()))
            .collect()
    }
}
