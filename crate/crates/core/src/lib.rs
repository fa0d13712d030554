//! Simulation and analysis toolkit for uplink grant-free multiple access
//! with protected pilots.
//!
//! The library is organized around the access pipeline:
//!
//! - [`code`] — superimposed (t-disjunct) pilot codes built from MDS codes
//!   over prime fields, mapping randomized pilot phases to subcarrier
//!   activation patterns and decomposing observed Boolean sums.
//! - [`attack`] — the hybrid pilot-aware attacker (silence cheating,
//!   wide-band and partial-band pilot jamming) at count and signal level.
//! - [`detection`] — per-subcarrier signal counting via eigenvalue-ratio
//!   tests and joint attack-mode / user-activity detection.
//! - [`channel`] — frequency-selective Rayleigh SIMO-OFDM Monte-Carlo link
//!   with matched filtering and empirical post-filter SINR measurement.
//! - [`reliability`] — closed-form reliability, latency and accessibility
//!   analysis with the three tradeoff sweeps.
//! - [`scenario`] — end-to-end detection scenarios gluing code, attack and
//!   channel together for simulation runs.
//!
//! All randomized operations take an explicit RNG; [`rng`] derives
//! independent per-trial streams from one master seed so results are
//! reproducible bit-exact and independent of trial counts.

pub mod attack;
pub mod bits;
pub mod channel;
pub mod code;
pub mod detection;
pub mod numerics;
pub mod reliability;
pub mod rng;
pub mod scenario;

pub use attack::{AttackMode, AttackerConfig};
pub use bits::BitVector;
pub use code::{FieldParams, PilotPhase, Sap, SuperimposedCode};
pub use detection::{ActivityReport, DetectionConfig, OccupancyVector, SignalCount};
pub use reliability::{ReliabilityReport, SweepVariable, SystemConfig, TradeoffPoint};
