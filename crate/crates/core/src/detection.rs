//! User activity detection under the hybrid attack.
//!
//! Two layers: [`count_signals`] estimates how many signals coexist on one
//! pilot subcarrier from the eigenvalue ratios of the sample covariance
//! across antennas, and [`detect_activity`] turns the per-subcarrier
//! occupancy counts into the attack mode, the number of active users and
//! their codewords.
//!
//! Activity detection branches on the occupancy indicator. An all-ones
//! indicator is read as wide-band jamming: every count is decremented and
//! the remainder must decompose to a codeword set that reproduces the
//! decremented counts exactly. Otherwise candidate codeword subsets of the
//! observed support are enumerated in decreasing size (equivalently:
//! increasing jammed-set size, since a candidate of size s implies
//! sum(N) - L*s jammed entries) and the first whose residual
//! `counts - coverage` is {0,1}-valued with pairwise-distinct owners wins;
//! an all-zero residual is silence, a non-empty one is partial-band
//! jamming with the residual as the recovered footprint. Observations
//! explained by no candidate are surfaced as undecodable rather than
//! guessed.

use std::collections::BTreeSet;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

use crate::attack::AttackMode;
use crate::bits::BitVector;
use crate::code::SuperimposedCode;

/// Eigenvalues below RANK_TOLERANCE * lambda_max are treated as zero.
const RANK_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DetectionError {
    #[error("noise power must be positive, got {0}")]
    NonPositiveNoisePower(f64),
    #[error("eigenvalue-ratio threshold must be >= 1, got {0}")]
    InvalidThreshold(f64),
    #[error("target false-alarm probability must lie in (0,1), got {0}")]
    InvalidTargetPf(f64),
    #[error("{trials} trials resolve no {target_pf} quantile (need trials >= 1000 and trials*target_pf >= 10)")]
    InsufficientTrials { trials: usize, target_pf: f64 },
    #[error("occupancy length {got}, code length {expected}")]
    LengthMismatch { got: usize, expected: usize },
    #[error("code has no cluster assignment")]
    NoClusters,
    #[error("code order {order} must equal number of users + 1 = {required}")]
    InvalidCodeOrder { order: u32, required: u32 },
    #[error("observation cannot be decoded: {reason}")]
    UndecodableObservation { reason: String },
}

/// Per-subcarrier signal counts over the coding subcarriers.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OccupancyVector {
    counts: Vec<u32>,
}

impl OccupancyVector {
    pub fn new(counts: Vec<u32>) -> Self {
        Self { counts }
    }

    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    pub fn counts(&self) -> &[u32] {
        &self.counts
    }

    pub fn is_zero(&self) -> bool {
        self.counts.iter().all(|&c| c == 0)
    }

    /// Indicator of occupied subcarriers.
    pub fn indicator(&self) -> BitVector {
        let mut v = BitVector::zeros(self.counts.len());
        for (i, &c) in self.counts.iter().enumerate() {
            if c > 0 {
                v.set(i, true);
            }
        }
        v
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().map(|&c| c as u64).sum()
    }
}

/// Detector configuration for one coherence window.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectionConfig {
    /// Observation window parameter X; the detector stacks X+2 symbols,
    /// which must fit inside the channel coherence time.
    pub window: usize,
    /// Receiver noise power sigma^2 (linear).
    pub noise_power: f64,
    /// Eigenvalue-ratio decision threshold (>= 1).
    pub threshold: f64,
    /// False-alarm target the threshold was calibrated for.
    pub target_pf: f64,
}

/// Output of the per-subcarrier counter.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SignalCount {
    /// Estimated number of coexisting signals.
    pub count: usize,
    /// Smallest eigenvalue was zero to numerical precision; the ratio test
    /// fell back to eigenvalues floored at RANK_TOLERANCE * lambda_max.
    pub degenerate: bool,
}

/// Count coexisting signals on one subcarrier from the (X+2) x N_T
/// received matrix: eigenvalues of Y*Y^H / sigma^2 are sorted ascending
/// and the count is how many ratios lambda_i / lambda_1 exceed the
/// threshold.
pub fn count_signals(
    rx: &DMatrix<Complex64>,
    cfg: &DetectionConfig,
) -> Result<SignalCount, DetectionError> {
    if cfg.noise_power <= 0.0 {
        return Err(DetectionError::NonPositiveNoisePower(cfg.noise_power));
    }
    if cfg.threshold < 1.0 {
        return Err(DetectionError::InvalidThreshold(cfg.threshold));
    }
    let r_hat = rx * rx.adjoint() / Complex64::new(cfg.noise_power, 0.0);
    let mut eig: Vec<f64> = r_hat.symmetric_eigenvalues().iter().copied().collect();
    eig.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let lambda_max = *eig.last().expect("non-empty matrix");
    if lambda_max <= 0.0 {
        return Ok(SignalCount {
            count: 0,
            degenerate: true,
        });
    }
    let floor = RANK_TOLERANCE * lambda_max;
    let degenerate = eig[0] < floor;
    let lambda_min = eig[0].max(floor);
    let count = eig.iter().filter(|&&l| l / lambda_min > cfg.threshold).count();
    Ok(SignalCount { count, degenerate })
}

/// Calibrate the ratio threshold as the empirical (1 - target_pf)
/// quantile of lambda_max / lambda_min over noise-only draws.
pub fn calibrate_threshold<R: Rng + ?Sized>(
    n_antennas: usize,
    window_x: usize,
    target_pf: f64,
    trials: usize,
    rng: &mut R,
) -> Result<f64, DetectionError> {
    if !(target_pf > 0.0 && target_pf < 1.0) {
        return Err(DetectionError::InvalidTargetPf(target_pf));
    }
    if trials < 1000 || (trials as f64) * target_pf < 10.0 {
        return Err(DetectionError::InsufficientTrials { trials, target_pf });
    }
    let rows = window_x + 2;
    let mut ratios = Vec::with_capacity(trials);
    for _ in 0..trials {
        let y = noise_matrix(rows, n_antennas, 1.0, rng);
        ratios.push(noise_ratio(&y));
    }
    ratios.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let rank = ((1.0 - target_pf) * trials as f64).ceil() as usize;
    Ok(ratios[rank.clamp(1, trials) - 1])
}

fn noise_ratio(y: &DMatrix<Complex64>) -> f64 {
    let r = y * y.adjoint();
    let mut eig: Vec<f64> = r.symmetric_eigenvalues().iter().copied().collect();
    eig.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let max = *eig.last().unwrap();
    let min = eig[0].max(RANK_TOLERANCE * max);
    max / min
}

/// i.i.d. circular complex Gaussian matrix with per-entry variance
/// `power`.
pub fn noise_matrix<R: Rng + ?Sized>(
    rows: usize,
    cols: usize,
    power: f64,
    rng: &mut R,
) -> DMatrix<Complex64> {
    let s = (power / 2.0).sqrt();
    DMatrix::from_fn(rows, cols, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        Complex64::new(re * s, im * s)
    })
}

/// Joint attack-mode and activity report for one coherence window.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ActivityReport {
    pub mode: AttackMode,
    pub num_alus: usize,
    /// Recovered codeword column indices, one per active user.
    pub alu_codewords: BTreeSet<usize>,
    /// Owning user of each recovered codeword.
    pub alu_identities: BTreeSet<usize>,
}

impl ActivityReport {
    /// One CSV row: mode keyword, count, semicolon-joined codewords.
    pub fn csv_row(&self) -> String {
        let cw: Vec<String> = self.alu_codewords.iter().map(|c| c.to_string()).collect();
        format!("{},{},{}", self.mode.keyword(), self.num_alus, cw.join(";"))
    }
}

/// Run the activity-detection algorithm on exact occupancy counts.
pub fn detect_activity(
    occ: &OccupancyVector,
    code: &SuperimposedCode,
) -> Result<ActivityReport, DetectionError> {
    let clusters = code.clusters().ok_or(DetectionError::NoClusters)?;
    let users = clusters.num_users as u32;
    if code.order() != users + 1 {
        return Err(DetectionError::InvalidCodeOrder {
            order: code.order(),
            required: users + 1,
        });
    }
    if occ.len() != code.length() {
        return Err(DetectionError::LengthMismatch {
            got: occ.len(),
            expected: code.length(),
        });
    }
    if let Some((j, &c)) = occ.counts().iter().enumerate().find(|(_, &c)| c > users + 1) {
        return Err(DetectionError::UndecodableObservation {
            reason: format!("count {c} at subcarrier {j} exceeds {} users + attacker", users),
        });
    }

    if occ.is_zero() {
        return Ok(ActivityReport {
            mode: AttackMode::NoAttacker,
            num_alus: 0,
            alu_codewords: BTreeSet::new(),
            alu_identities: BTreeSet::new(),
        });
    }

    // All subcarriers occupied: wide-band reading first.
    if occ.counts().iter().all(|&c| c > 0) {
        if let Some(report) = try_wideband(occ, code) {
            return Ok(report);
        }
        // Rare corner (e.g. partial-band jam covering the whole idle
        // band): fall through to the candidate search on raw counts.
    }

    search_candidates(occ, code).ok_or_else(|| DetectionError::UndecodableObservation {
        reason: "no codeword subset reproduces the observed counts".into(),
    })
}

fn try_wideband(occ: &OccupancyVector, code: &SuperimposedCode) -> Option<ActivityReport> {
    let decremented: Vec<u32> = occ.counts().iter().map(|&c| c - 1).collect();
    let residual = OccupancyVector::new(decremented);
    let indicator = residual.indicator();
    let users = code.clusters().expect("validated").num_users;
    let cols = code.decompose(&indicator, users).ok()?;
    // Exact count reproduction and one codeword per user.
    let mut coverage = vec![0u32; code.length()];
    let mut owners = BTreeSet::new();
    for &c in &cols {
        let (user, _) = code.phase_of(c).ok()?;
        if !owners.insert(user) {
            return None;
        }
        for bit in code.column_bits(c).ones() {
            coverage[bit] += 1;
        }
    }
    if coverage != residual.counts() {
        return None;
    }
    Some(ActivityReport {
        mode: AttackMode::WideBand,
        num_alus: cols.len(),
        alu_codewords: cols,
        alu_identities: owners,
    })
}

/// Enumerate candidate codeword subsets of the observed support in
/// decreasing size, lexicographic within a size; accept the first whose
/// residual is {0,1}-valued with distinct owners.
fn search_candidates(occ: &OccupancyVector, code: &SuperimposedCode) -> Option<ActivityReport> {
    let support = occ.indicator();
    let users = code.clusters().expect("validated").num_users;
    // Only cluster-assigned columns can belong to an active user.
    let candidates: Vec<usize> = (0..code.size())
        .filter(|&c| code.phase_of(c).is_ok() && code.column_covered_by(c, &support))
        .collect();
    let max_size = users
        .min(candidates.len())
        .min((occ.total() / code.num_blocks() as u64) as usize);

    let mut coverage = vec![0u32; code.length()];
    let mut chosen = Vec::new();
    let mut owners = BTreeSet::new();
    for size in (0..=max_size).rev() {
        if let Some(report) = dfs(
            occ,
            code,
            &candidates,
            size,
            0,
            &mut coverage,
            &mut chosen,
            &mut owners,
        ) {
            return Some(report);
        }
        debug_assert!(chosen.is_empty() && owners.is_empty());
        debug_assert!(coverage.iter().all(|&c| c == 0));
    }
    None
}

#[allow(clippy::too_many_arguments)]
fn dfs(
    occ: &OccupancyVector,
    code: &SuperimposedCode,
    candidates: &[usize],
    size: usize,
    from: usize,
    coverage: &mut Vec<u32>,
    chosen: &mut Vec<usize>,
    owners: &mut BTreeSet<usize>,
) -> Option<ActivityReport> {
    if chosen.len() == size {
        return finish_candidate(occ, coverage, chosen, owners);
    }
    let remaining = size - chosen.len();
    if candidates.len() - from < remaining {
        return None;
    }
    for (offset, &col) in candidates[from..].iter().enumerate() {
        let owner = code.phase_of(col).expect("candidate is assigned").0;
        if owners.contains(&owner) {
            continue;
        }
        // Coverage may never exceed the observed count on any subcarrier.
        let bits: Vec<usize> = code.column_bits(col).ones().collect();
        if bits.iter().any(|&b| coverage[b] + 1 > occ.counts()[b]) {
            continue;
        }
        for &b in &bits {
            coverage[b] += 1;
        }
        chosen.push(col);
        owners.insert(owner);
        if let Some(r) = dfs(
            occ,
            code,
            candidates,
            size,
            from + offset + 1,
            coverage,
            chosen,
            owners,
        ) {
            return Some(r);
        }
        owners.remove(&owner);
        chosen.pop();
        for &b in &bits {
            coverage[b] -= 1;
        }
    }
    None
}

fn finish_candidate(
    occ: &OccupancyVector,
    coverage: &[u32],
    chosen: &[usize],
    owners: &BTreeSet<usize>,
) -> Option<ActivityReport> {
    // Residual counts must be 0/1: leftover ones are the jammed entries.
    let mut jammed = BTreeSet::new();
    for (j, (&n, &cov)) in occ.counts().iter().zip(coverage).enumerate() {
        match n - cov {
            0 => {}
            1 => {
                jammed.insert(j);
            }
            _ => return None,
        }
    }
    let alu_codewords: BTreeSet<usize> = chosen.iter().copied().collect();
    let report = |mode| ActivityReport {
        mode,
        num_alus: chosen.len(),
        alu_codewords: alu_codewords.clone(),
        alu_identities: owners.clone(),
    };
    if jammed.is_empty() {
        // Attacker contributed nothing: silence (or truly absent when no
        // user is active, which the all-zero branch already covered).
        Some(report(AttackMode::SilenceCheating))
    } else if jammed.len() < occ.len() {
        Some(report(AttackMode::PartialBand { jammed }))
    } else {
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::attack::{apply_attack_counts, AttackerConfig};
    use crate::rng::{stream_rng, trial_rng, StreamId};
    use crate::scenario;

    fn det_cfg(threshold: f64) -> DetectionConfig {
        DetectionConfig {
            window: 4,
            noise_power: 1.0,
            threshold,
            target_pf: 1e-3,
        }
    }

    fn planted_matrix(
        n_antennas: usize,
        rows: usize,
        powers: &[f64],
        orthogonal: bool,
        rng: &mut impl Rng,
    ) -> DMatrix<Complex64> {
        let mut y = noise_matrix(rows, n_antennas, 1.0, rng);
        for (s, &p) in powers.iter().enumerate() {
            // Per-symbol phasor sequence; orthogonal mode uses DFT rows.
            let symbols: Vec<Complex64> = (0..rows)
                .map(|k| {
                    let phi = if orthogonal {
                        2.0 * std::f64::consts::PI * (s * k) as f64 / rows as f64
                    } else {
                        rng.gen_range(0.0..2.0 * std::f64::consts::PI)
                    };
                    Complex64::from_polar(p.sqrt(), phi)
                })
                .collect();
            let chan = noise_matrix(1, n_antennas, 1.0, rng);
            for k in 0..rows {
                for a in 0..n_antennas {
                    y[(k, a)] += symbols[k] * chan[(0, a)];
                }
            }
        }
        y
    }

    #[test]
    fn count_is_scale_and_permutation_invariant() {
        let mut rng = stream_rng(3, 1);
        let y = planted_matrix(32, 6, &[50.0], false, &mut rng);
        let base = count_signals(&y, &det_cfg(3.0)).unwrap();

        // Scaling Y by c and sigma^2 by c^2 leaves the count unchanged.
        let scaled = y.map(|z| z * 3.0);
        let mut cfg = det_cfg(3.0);
        cfg.noise_power = 9.0;
        assert_eq!(count_signals(&scaled, &cfg).unwrap().count, base.count);

        // Permuting antennas and symbols leaves the eigenvalues unchanged.
        let mut perm = y.clone();
        perm.swap_columns(0, 17);
        perm.swap_rows(1, 4);
        assert_eq!(count_signals(&perm, &det_cfg(3.0)).unwrap().count, base.count);
    }

    #[test]
    fn calibration_quantile_definition_and_errors() {
        assert!(matches!(
            calibrate_threshold(16, 2, 1e-3, 1000, &mut stream_rng(0, 0)),
            Err(DetectionError::InsufficientTrials { .. })
        ));
        assert!(matches!(
            calibrate_threshold(16, 2, 0.0, 1000, &mut stream_rng(0, 0)),
            Err(DetectionError::InvalidTargetPf(_))
        ));

        // target_pf = 0.5 returns the median of the sampled ratio stream.
        let gamma = calibrate_threshold(16, 2, 0.5, 2000, &mut stream_rng(7, 2)).unwrap();
        let mut rng = stream_rng(7, 2);
        let mut ratios: Vec<f64> = (0..2000)
            .map(|_| noise_ratio(&noise_matrix(4, 16, 1.0, &mut rng)))
            .collect();
        ratios.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert_eq!(gamma, ratios[999]);
        assert!(gamma > 1.0);
    }

    #[test]
    fn noise_only_false_alarms_match_target() {
        // Calibrate at 1e-2 and re-measure the false-alarm rate.
        let n_t = 100;
        let x = 4;
        let gamma =
            calibrate_threshold(n_t, x, 1e-2, 20_000, &mut stream_rng(21, 0)).unwrap();
        let cfg = DetectionConfig {
            window: x,
            noise_power: 1.0,
            threshold: gamma,
            target_pf: 1e-2,
        };
        let mut rng = stream_rng(21, 1);
        let trials = 20_000;
        let mut alarms = 0;
        for _ in 0..trials {
            let y = noise_matrix(x + 2, n_t, 1.0, &mut rng);
            if count_signals(&y, &cfg).unwrap().count > 0 {
                alarms += 1;
            }
        }
        let rate = alarms as f64 / trials as f64;
        assert!(
            (rate - 1e-2).abs() <= 0.3e-2,
            "re-measured false alarm {rate} outside 1e-2 +/- 30%"
        );
    }

    #[test]
    fn planted_signals_are_counted() {
        let n_t = 100;
        let gamma =
            calibrate_threshold(n_t, 4, 1e-3, 20_000, &mut stream_rng(22, 0)).unwrap();
        let cfg = DetectionConfig {
            window: 4,
            noise_power: 1.0,
            threshold: gamma,
            target_pf: 1e-3,
        };
        let mut rng = stream_rng(22, 1);
        let trials = 2000;
        let snr = 100.0; // 20 dB

        let mut one_ok = 0;
        let mut two_ok = 0;
        for _ in 0..trials {
            let y1 = planted_matrix(n_t, 6, &[snr], false, &mut rng);
            if count_signals(&y1, &cfg).unwrap().count == 1 {
                one_ok += 1;
            }
            let y2 = planted_matrix(n_t, 6, &[snr, snr], true, &mut rng);
            if count_signals(&y2, &cfg).unwrap().count == 2 {
                two_ok += 1;
            }
        }
        assert!(one_ok as f64 >= 0.99 * trials as f64, "one-signal: {one_ok}/{trials}");
        assert!(two_ok as f64 >= 0.99 * trials as f64, "two-signal: {two_ok}/{trials}");

        // Pure noise under the same calibrated threshold: zero signals in
        // at least 99.8% of windows.
        let noise_trials = 10_000;
        let mut zero_ok = 0;
        for _ in 0..noise_trials {
            let y = noise_matrix(6, n_t, 1.0, &mut rng);
            if count_signals(&y, &cfg).unwrap().count == 0 {
                zero_ok += 1;
            }
        }
        assert!(
            zero_ok as f64 >= 0.998 * noise_trials as f64,
            "noise-only zero counts: {zero_ok}/{noise_trials}"
        );
    }

    #[test]
    fn degenerate_matrix_is_flagged() {
        let y = DMatrix::from_element(6, 8, Complex64::new(1.0, 0.0));
        let out = count_signals(&y, &det_cfg(2.0)).unwrap();
        assert!(out.degenerate);
        let zero = DMatrix::from_element(6, 8, Complex64::new(0.0, 0.0));
        let out = count_signals(&zero, &det_cfg(2.0)).unwrap();
        assert!(out.degenerate);
        assert_eq!(out.count, 0);
    }

    fn test_code() -> SuperimposedCode {
        SuperimposedCode::build(5, 2, 5).unwrap().assign_clusters(4).unwrap()
    }

    fn exact_counts(code: &SuperimposedCode, saps: &[crate::code::Sap]) -> OccupancyVector {
        let mut counts = vec![0u32; code.length()];
        for sap in saps {
            for bit in sap.bits.ones() {
                counts[bit] += 1;
            }
        }
        OccupancyVector::new(counts)
    }

    #[test]
    fn detect_quiet_wideband_and_partial_band() {
        let code = test_code();
        let saps = [
            code.encode_pilot(0, 2).unwrap(),
            code.encode_pilot(2, 1).unwrap(),
        ];
        let base = exact_counts(&code, &saps);
        let codewords: BTreeSet<usize> = saps
            .iter()
            .map(|s| code.cluster_range(s.owner).unwrap().start + s.phase_index)
            .collect();

        // Quiet branch: silence cheating with 2 users.
        let r = detect_activity(&base, &code).unwrap();
        assert_eq!(r.mode, AttackMode::SilenceCheating);
        assert_eq!(r.num_alus, 2);
        assert_eq!(r.alu_codewords, codewords);
        assert_eq!(r.alu_identities, BTreeSet::from([0, 2]));

        // Wide-band: +1 everywhere.
        let wb = apply_attack_counts(&base, &AttackerConfig::new(AttackMode::WideBand, 1.0))
            .unwrap();
        let r = detect_activity(&wb, &code).unwrap();
        assert_eq!(r.mode, AttackMode::WideBand);
        assert_eq!(r.alu_codewords, codewords);

        // Partial band on a footprint disjoint from both SAPs.
        let union = crate::code::boolean_sum(
            code.length(),
            &saps.iter().map(|s| s.bits.clone()).collect::<Vec<_>>(),
        )
        .unwrap();
        let jammed: BTreeSet<usize> =
            (0..code.length()).filter(|&j| !union.get(j)).take(5).collect();
        let pb = apply_attack_counts(
            &base,
            &AttackerConfig::new(AttackMode::PartialBand { jammed: jammed.clone() }, 1.0),
        )
        .unwrap();
        let r = detect_activity(&pb, &code).unwrap();
        assert_eq!(r.mode, AttackMode::PartialBand { jammed });
        assert_eq!(r.alu_codewords, codewords);
        assert_eq!(r.num_alus, 2);
    }

    #[test]
    fn detect_zero_user_edges() {
        let code = test_code();
        let b = code.length();

        // Nothing received at all.
        let r = detect_activity(&OccupancyVector::new(vec![0; b]), &code).unwrap();
        assert_eq!(r.mode, AttackMode::NoAttacker);
        assert_eq!(r.num_alus, 0);

        // Wide-band jamming with no active user: all counts are one.
        let r = detect_activity(&OccupancyVector::new(vec![1; b]), &code).unwrap();
        assert_eq!(r.mode, AttackMode::WideBand);
        assert_eq!(r.num_alus, 0);

        // Partial-band jamming with no active user, footprint too sparse
        // to cover any codeword.
        let mut counts = vec![0u32; b];
        counts[0] = 1;
        counts[9] = 1;
        let r = detect_activity(&OccupancyVector::new(counts), &code).unwrap();
        assert_eq!(r.mode, AttackMode::PartialBand { jammed: BTreeSet::from([0, 9]) });
        assert_eq!(r.num_alus, 0);
    }

    #[test]
    fn detect_rejects_miscounts() {
        let code = test_code();
        let b = code.length();
        // An isolated double count is not explainable by SAPs plus at most
        // one attacker signal.
        let mut counts = vec![0u32; b];
        counts[3] = 2;
        assert!(matches!(
            detect_activity(&OccupancyVector::new(counts), &code),
            Err(DetectionError::UndecodableObservation { .. })
        ));
        // Counts above G+1 are flagged before decoding.
        let mut counts = vec![0u32; b];
        counts[0] = 6;
        assert!(matches!(
            detect_activity(&OccupancyVector::new(counts), &code),
            Err(DetectionError::UndecodableObservation { .. })
        ));
    }

    #[test]
    fn detect_is_deterministic() {
        let code = test_code();
        let saps = [code.encode_pilot(1, 0).unwrap(), code.encode_pilot(3, 4).unwrap()];
        let occ = exact_counts(&code, &saps);
        let a = detect_activity(&occ, &code).unwrap();
        let b = detect_activity(&occ, &code).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn perfect_recovery_randomized() {
        // Smaller randomized sweep of the acceptance property: exact
        // counts, all modes, random users/phases/footprints.
        let code = test_code();
        let mut ok = 0;
        let trials = 400;
        for t in 0..trials {
            let mut rng = trial_rng(1234, StreamId::DetectionTrials, t);
            let truth = scenario::sample_trial(&code, &mut rng);
            let occ = scenario::ideal_counts(&code, &truth);
            let got = detect_activity(&occ, &code).unwrap();
            assert_eq!(got, scenario::expected_report(&truth), "trial {t}");
            ok += 1;
        }
        assert_eq!(ok, trials);
    }
}
