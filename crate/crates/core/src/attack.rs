//! Hybrid pilot-aware attacker model.
//!
//! The attacker either stays silent (silence cheating), jams every coding
//! subcarrier (wide-band pilot jamming), or jams a strict subset of them
//! (partial-band pilot jamming). At count level an attack adds at most one
//! detectable signal per subcarrier per coherence window; at signal level
//! the attacker transmits unit-magnitude phasors scaled by its power, with
//! no constraint on the phases.

use std::collections::BTreeSet;

use num_complex::Complex64;
use rand::Rng;
use thiserror::Error;

use crate::detection::OccupancyVector;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AttackError {
    #[error("jammed subcarrier {index} outside range {len}")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("partial-band jammed set must be a non-empty strict subset ({got} of {len} subcarriers)")]
    InvalidJammedSet { got: usize, len: usize },
    #[error("subcarrier {0} is not jammed under the configured mode")]
    NotJammed(usize),
}

/// Attack mode, with the jammed footprint attached where it applies.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AttackMode {
    NoAttacker,
    SilenceCheating,
    WideBand,
    PartialBand { jammed: BTreeSet<usize> },
}

impl AttackMode {
    /// Stable keyword used in config files and CSV output.
    pub fn keyword(&self) -> &'static str {
        match self {
            AttackMode::NoAttacker => "none",
            AttackMode::SilenceCheating => "sc",
            AttackMode::WideBand => "wb-pj",
            AttackMode::PartialBand { .. } => "pb-pj",
        }
    }

    /// Same attack class, ignoring the jammed footprint.
    pub fn same_kind(&self, other: &AttackMode) -> bool {
        self.keyword() == other.keyword()
    }

    /// Whether this mode jams `subcarrier`.
    pub fn jams(&self, subcarrier: usize) -> bool {
        match self {
            AttackMode::NoAttacker | AttackMode::SilenceCheating => false,
            AttackMode::WideBand => true,
            AttackMode::PartialBand { jammed } => jammed.contains(&subcarrier),
        }
    }

    /// Validate the footprint against the number of coding subcarriers:
    /// partial band must be a non-empty strict subset.
    pub fn validate(&self, n_r: usize) -> Result<(), AttackError> {
        if let AttackMode::PartialBand { jammed } = self {
            if jammed.is_empty() || jammed.len() >= n_r {
                return Err(AttackError::InvalidJammedSet {
                    got: jammed.len(),
                    len: n_r,
                });
            }
            if let Some(&max) = jammed.iter().next_back() {
                if max >= n_r {
                    return Err(AttackError::IndexOutOfRange { index: max, len: n_r });
                }
            }
        }
        Ok(())
    }
}

/// Attacker configuration: mode, linear transmit power, and optionally a
/// fixed phase (per-subcarrier/per-symbol phases default to i.i.d.
/// uniform on [0, 2pi)).
#[derive(Debug, Clone, PartialEq)]
pub struct AttackerConfig {
    pub mode: AttackMode,
    /// Linear power rho_A >= 0.
    pub power: f64,
    pub phase: Option<f64>,
}

impl AttackerConfig {
    pub fn new(mode: AttackMode, power: f64) -> Self {
        assert!(power >= 0.0, "attacker power must be non-negative");
        Self {
            mode,
            power,
            phase: None,
        }
    }

    pub fn with_phase(mut self, phase: f64) -> Self {
        self.phase = Some(phase);
        self
    }
}

/// Apply the attack at occupancy-count level: wide band increments every
/// count, partial band increments the jammed entries, silence and absence
/// change nothing.
pub fn apply_attack_counts(
    occ: &OccupancyVector,
    cfg: &AttackerConfig,
) -> Result<OccupancyVector, AttackError> {
    let mut counts = occ.counts().to_vec();
    match &cfg.mode {
        AttackMode::NoAttacker | AttackMode::SilenceCheating => {}
        AttackMode::WideBand => {
            for c in counts.iter_mut() {
                *c += 1;
            }
        }
        AttackMode::PartialBand { jammed } => {
            for &j in jammed {
                if j >= counts.len() {
                    return Err(AttackError::IndexOutOfRange {
                        index: j,
                        len: counts.len(),
                    });
                }
                counts[j] += 1;
            }
        }
    }
    Ok(OccupancyVector::new(counts))
}

/// The attacker's pilot sample on a jammed subcarrier at one symbol time:
/// sqrt(rho_A) * exp(j*phi) with phi from the config or uniform random.
pub fn attacker_pilot_signal<R: Rng + ?Sized>(
    cfg: &AttackerConfig,
    subcarrier: usize,
    _symbol: usize,
    rng: &mut R,
) -> Result<Complex64, AttackError> {
    if !cfg.mode.jams(subcarrier) {
        return Err(AttackError::NotJammed(subcarrier));
    }
    let phi = cfg
        .phase
        .unwrap_or_else(|| rng.gen_range(0.0..2.0 * std::f64::consts::PI));
    Ok(Complex64::from_polar(cfg.power.sqrt(), phi))
}
