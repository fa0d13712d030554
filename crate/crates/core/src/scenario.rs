//! Randomized end-to-end detection scenarios.
//!
//! A trial draws an active-user subset with random phases and an attack
//! mode, then produces occupancy counts either exactly (count level) or
//! through the full signal chain: SAP-gated pilot phasors over Rayleigh
//! SIMO channels, eigenvalue-ratio counting per subcarrier.
//!
//! Partial-band footprints are sampled uniformly over the subcarriers
//! left idle by the active SAPs (every jammed entry carries exactly one
//! signal), rejecting footprints that absorb a full unused codeword:
//! such observations admit several exact explanations, so no detector
//! can recover them uniquely.

use std::collections::BTreeSet;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::seq::SliceRandom;
use rand::Rng;

use crate::attack::{apply_attack_counts, attacker_pilot_signal, AttackMode, AttackerConfig};
use crate::channel::{draw_cir, to_subcarrier, uniform_profile, ChannelError};
use crate::code::{Sap, SuperimposedCode};
use crate::detection::{
    count_signals, noise_matrix, ActivityReport, DetectionConfig, DetectionError, OccupancyVector,
    SignalCount,
};

/// Ground truth of one randomized trial.
#[derive(Debug, Clone)]
pub struct TrialTruth {
    pub mode: AttackMode,
    pub saps: Vec<Sap>,
    /// Global codeword column per active user.
    pub codewords: BTreeSet<usize>,
    pub identities: BTreeSet<usize>,
}

/// Draw an activity pattern: 1..=G active users, uniform phase each.
pub fn sample_activity<R: Rng + ?Sized>(code: &SuperimposedCode, rng: &mut R) -> Vec<Sap> {
    let clusters = code.clusters().expect("clustered code");
    let g = clusters.num_users;
    let k = rng.gen_range(1..=g);
    let mut users: Vec<usize> = (0..g).collect();
    users.shuffle(rng);
    users.truncate(k);
    users.sort_unstable();
    users
        .into_iter()
        .map(|u| {
            let phase = rng.gen_range(0..clusters.cluster_size);
            code.encode_pilot(u, phase).expect("valid phase")
        })
        .collect()
}

/// Sample an identifiable partial-band footprint for this activity
/// pattern: uniform over the idle subcarriers, rejecting footprints that
/// absorb a full unused codeword (those observations admit several exact
/// explanations and no detector can recover them uniquely).
pub fn sample_partial_band<R: Rng + ?Sized>(
    code: &SuperimposedCode,
    saps: &[Sap],
    rng: &mut R,
) -> AttackMode {
    let union = crate::code::boolean_sum(
        code.length(),
        &saps.iter().map(|s| s.bits.clone()).collect::<Vec<_>>(),
    )
    .expect("equal lengths");
    let active: BTreeSet<usize> = saps
        .iter()
        .map(|s| code.column_of(s.owner, s.phase_index).expect("valid column"))
        .collect();
    let idle: Vec<usize> = (0..code.length()).filter(|&j| !union.get(j)).collect();
    loop {
        let jammed: BTreeSet<usize> = idle.iter().copied().filter(|_| rng.gen_bool(0.5)).collect();
        if jammed.is_empty() {
            continue;
        }
        let mut support = union.clone();
        for &j in &jammed {
            support.set(j, true);
        }
        let absorbs_codeword = (0..code.size()).any(|c| {
            code.phase_of(c).is_ok()
                && !active.contains(&c)
                && code.column_covered_by(c, &support)
        });
        if !absorbs_codeword {
            return AttackMode::PartialBand { jammed };
        }
    }
}

/// Bundle an activity pattern and attack mode into a trial truth.
pub fn truth_with_mode(code: &SuperimposedCode, saps: Vec<Sap>, mode: AttackMode) -> TrialTruth {
    let mut codewords = BTreeSet::new();
    let mut identities = BTreeSet::new();
    for sap in &saps {
        codewords.insert(code.column_of(sap.owner, sap.phase_index).expect("valid column"));
        identities.insert(sap.owner);
    }
    TrialTruth {
        mode,
        saps,
        codewords,
        identities,
    }
}

/// Draw one trial: 1..=G active users with uniform phases, one of the
/// four attack modes uniformly, partial-band footprints uniform over the
/// idle subcarriers (identifiable ones, see [`sample_partial_band`]).
pub fn sample_trial<R: Rng + ?Sized>(code: &SuperimposedCode, rng: &mut R) -> TrialTruth {
    let saps = sample_activity(code, rng);
    let mode = match rng.gen_range(0..4) {
        0 => AttackMode::NoAttacker,
        1 => AttackMode::SilenceCheating,
        2 => AttackMode::WideBand,
        _ => sample_partial_band(code, &saps, rng),
    };
    truth_with_mode(code, saps, mode)
}

/// Exact occupancy counts of a trial: SAP coverage plus the attack's
/// count-level contribution.
pub fn ideal_counts(code: &SuperimposedCode, truth: &TrialTruth) -> OccupancyVector {
    let mut counts = vec![0u32; code.length()];
    for sap in &truth.saps {
        for bit in sap.bits.ones() {
            counts[bit] += 1;
        }
    }
    let base = OccupancyVector::new(counts);
    apply_attack_counts(&base, &AttackerConfig::new(truth.mode.clone(), 1.0))
        .expect("footprint validated at sampling")
}

/// The report a correct detector must produce for this trial. Silence
/// cheating and an absent attacker are observationally identical, so the
/// expected mode for both is silence when users are active and absence
/// otherwise.
pub fn expected_report(truth: &TrialTruth) -> ActivityReport {
    let mode = match &truth.mode {
        AttackMode::NoAttacker | AttackMode::SilenceCheating => {
            if truth.saps.is_empty() {
                AttackMode::NoAttacker
            } else {
                AttackMode::SilenceCheating
            }
        }
        m => m.clone(),
    };
    ActivityReport {
        mode,
        num_alus: truth.saps.len(),
        alu_codewords: truth.codewords.clone(),
        alu_identities: truth.identities.clone(),
    }
}

/// Signal-level synthesis parameters.
#[derive(Debug, Clone, Copy)]
pub struct SignalSynthConfig {
    pub antennas: usize,
    /// Pilot power rho_L (per-subcarrier pilot SNR with unit noise).
    pub pilot_power: f64,
    /// Attacker power rho_A.
    pub attacker_power: f64,
    /// Fixed attacker phase; per-subcarrier/per-symbol uniform when None.
    pub attacker_phase: Option<f64>,
    pub taps: usize,
    pub fft_size: usize,
}

/// Synthesize per-subcarrier receive matrices for one coherence window
/// and count signals on each coding subcarrier. Returns the measured
/// occupancy and how many subcarriers hit the degenerate-eigenvalue
/// fallback.
pub fn synthesize_occupancy<R: Rng + ?Sized>(
    code: &SuperimposedCode,
    truth: &TrialTruth,
    syn: &SignalSynthConfig,
    det: &DetectionConfig,
    rng: &mut R,
) -> Result<(OccupancyVector, usize), DetectionError> {
    let b = code.length();
    assert!(
        b <= syn.fft_size,
        "coding subcarriers {b} exceed FFT size {}",
        syn.fft_size
    );
    let rows = det.window + 2;
    let profile = uniform_profile(syn.taps);
    let map_err = |e: ChannelError| DetectionError::UndecodableObservation {
        reason: format!("channel synthesis failed: {e}"),
    };

    // One CIR per active user and one for the attacker, constant over the
    // coherence window.
    let user_cirs: Vec<_> = truth
        .saps
        .iter()
        .map(|_| draw_cir(syn.taps, syn.antennas, &profile, rng))
        .collect::<Result<_, _>>()
        .map_err(map_err)?;
    let attacker_cir = draw_cir(syn.taps, syn.antennas, &profile, rng).map_err(map_err)?;
    let mut attacker = AttackerConfig::new(truth.mode.clone(), syn.attacker_power);
    if let Some(phase) = syn.attacker_phase {
        attacker = attacker.with_phase(phase);
    }

    let alphabet = code.size();
    let mut counts = vec![0u32; b];
    let mut degenerate = 0usize;
    for (j, count) in counts.iter_mut().enumerate() {
        let mut y = noise_matrix(rows, syn.antennas, det.noise_power, rng);
        for (sap, cir) in truth.saps.iter().zip(&user_cirs) {
            if !sap.bits.get(j) {
                continue;
            }
            let g = to_subcarrier(cir, j, syn.fft_size).map_err(map_err)?;
            for k in 0..rows {
                // Per-symbol randomized pilot phase from the C-ary alphabet.
                let phase =
                    2.0 * std::f64::consts::PI * rng.gen_range(0..alphabet) as f64 / alphabet as f64;
                let s = Complex64::from_polar(syn.pilot_power.sqrt(), phase);
                add_outer(&mut y, k, s, &g.g);
            }
        }
        if truth.mode.jams(j) {
            let g = to_subcarrier(&attacker_cir, j, syn.fft_size).map_err(map_err)?;
            for k in 0..rows {
                let s = attacker_pilot_signal(&attacker, j, k, rng).expect("jammed subcarrier");
                add_outer(&mut y, k, s, &g.g);
            }
        }
        let SignalCount { count: n, degenerate: flag } = count_signals(&y, det)?;
        *count = n as u32;
        degenerate += usize::from(flag);
    }
    Ok((OccupancyVector::new(counts), degenerate))
}

fn add_outer(y: &mut DMatrix<Complex64>, row: usize, symbol: Complex64, channel: &[Complex64]) {
    for (a, &g) in channel.iter().enumerate() {
        y[(row, a)] += symbol * g;
    }
}
