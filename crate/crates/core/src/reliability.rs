//! Closed-form reliability, latency and accessibility analysis.
//!
//! The analysis chain: pilot-identification error probability from the
//! code parameters, finite-blocklength decoding error probability
//! (conditional on the SINR, integrated over its matched-filter
//! distribution, or at the deterministic large-antenna limit), the
//! two-shot failure probability, and the latency/accessibility figures,
//! plus the tradeoff sweeps over estimation error, latency and user
//! count.

use thiserror::Error;

use crate::code::largest_prime_at_most;
use crate::numerics::{
    integrate_half_line, ln_binomial, ln_gamma_fn, log_sum_exp, q_function, QuadratureError,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ReliabilityError {
    #[error("constraint violated: {0}")]
    ConstraintViolated(String),
    #[error("latency {latency}s leaves no data time (needs > {minimum}s)")]
    LatencyInfeasible { latency: f64, minimum: f64 },
    #[error("no prime q satisfies q*(1 + K(k-1)) <= {n_coding} for K={active}, k={k}")]
    NoFeasiblePrime { n_coding: usize, active: usize, k: u32 },
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
}

/// All scalar system parameters of one operating point.
#[derive(Debug, Clone)]
pub struct SystemConfig {
    /// Receive antennas N_T.
    pub antennas: usize,
    /// Total legitimate users G.
    pub total_users: usize,
    /// Active users K.
    pub active_users: usize,
    /// Outer code dimension k.
    pub code_dimension: u32,
    /// Field size q; derived from `n_coding` when absent.
    pub field_size: Option<u64>,
    /// Coding subcarriers N_R.
    pub n_coding: usize,
    /// Estimation subcarriers N_E.
    pub n_estimation: usize,
    /// Shared data subcarriers N_D.
    pub n_data: usize,
    /// Subcarrier spacing in Hz.
    pub subcarrier_spacing: f64,
    /// Mini-slot duration T_s in seconds.
    pub slot_time: f64,
    /// Fixed processing overhead T_extra in seconds.
    pub extra_time: f64,
    /// Data mini-slots m_d (real-valued; no integer rounding).
    pub data_slots: f64,
    /// Packet size in bits.
    pub payload_bits: f64,
    /// Mean per-branch SNR gamma_0 (linear).
    pub mean_snr: f64,
    /// Channel-estimation error weight lambda in [0,1).
    pub error_weight: f64,
    /// Interferers per data subcarrier K_c; defaults to K-1.
    pub interferers: Option<usize>,
    /// Channel taps L.
    pub taps: usize,
    /// Failure-probability cap xi for accessibility.
    pub reliability_cap: f64,
}

impl Default for SystemConfig {
    fn default() -> Self {
        Self {
            antennas: 100,
            total_users: 10,
            active_users: 4,
            code_dimension: 3,
            field_size: None,
            n_coding: 512,
            n_estimation: 512,
            n_data: 4,
            subcarrier_spacing: 60e3,
            slot_time: 17.86e-6,
            extra_time: 0.0,
            data_slots: 18.0,
            payload_bits: 256.0,
            mean_snr: 10.0,
            error_weight: 0.0,
            interferers: None,
            taps: 6,
            reliability_cap: 1e-5,
        }
    }
}

impl SystemConfig {
    /// Pilot mini-slots consumed by the coding scheme: K + 1.
    pub fn pilot_slots(&self) -> usize {
        self.active_users + 1
    }

    /// Interferers per data subcarrier (K - 1 unless pinned).
    pub fn effective_interferers(&self) -> usize {
        self.interferers
            .unwrap_or_else(|| self.active_users.saturating_sub(1))
    }

    /// Field size: configured, or the largest prime q with
    /// q * (1 + K(k-1)) <= N_R.
    pub fn effective_field_size(&self) -> Result<u64, ReliabilityError> {
        if let Some(q) = self.field_size {
            return Ok(q);
        }
        let inner = 1 + self.active_users as u64 * (self.code_dimension as u64 - 1);
        largest_prime_at_most(self.n_coding as u64 / inner).ok_or(
            ReliabilityError::NoFeasiblePrime {
                n_coding: self.n_coding,
                active: self.active_users,
                k: self.code_dimension,
            },
        )
    }

    /// Total latency T = (m_e + m_d) T_s + T_extra.
    pub fn latency(&self) -> f64 {
        (self.pilot_slots() as f64 + self.data_slots) * self.slot_time + self.extra_time
    }
}

/// Pilot-identification error probability from the code parameters:
/// sqrt([1 + K(k-1)]^k / (2 N_R^k K)).
pub fn p_c(n_coding: usize, active_users: usize, k: u32) -> Result<f64, ReliabilityError> {
    let kk = active_users as f64 * (k as f64 - 1.0);
    if kk < 3.0 {
        return Err(ReliabilityError::ConstraintViolated(format!(
            "K(k-1) = {kk} < 3"
        )));
    }
    let floor = kk * (1.0 + kk);
    if (n_coding as f64) < floor {
        return Err(ReliabilityError::ConstraintViolated(format!(
            "N_R = {n_coding} < K(k-1)[1 + K(k-1)] = {floor}"
        )));
    }
    let num = (1.0 + kk).powi(k as i32);
    let den = 2.0 * (n_coding as f64).powi(k as i32) * active_users as f64;
    Ok((num / den).sqrt())
}

/// Transmission rate in bits/s/Hz: B / (N_D * delta_f * m_d * T_s).
pub fn rate(payload_bits: f64, n_data: usize, spacing: f64, data_slots: f64, slot_time: f64) -> f64 {
    payload_bits / (n_data as f64 * spacing * data_slots * slot_time)
}

/// Finite-blocklength decoding error probability conditional on the SINR:
/// Q((C(g) - R) / sqrt(V(g) / (N_d * n))) with C = log2(1+g) and
/// V = 1 - (1+g)^-2. The g -> 0 limit returns 1 for positive rates and
/// 1/2 at rate zero.
pub fn p_d_conditional(gamma: f64, rate: f64, n_data: usize, slots: f64) -> f64 {
    debug_assert!(gamma >= 0.0 && rate >= 0.0);
    let dispersion = 1.0 - 1.0 / ((1.0 + gamma) * (1.0 + gamma));
    if dispersion <= 0.0 {
        return if rate > 0.0 { 1.0 } else { 0.5 };
    }
    let capacity = (1.0 + gamma).log2();
    let blocklength = n_data as f64 * slots;
    q_function((capacity - rate) / (dispersion / blocklength).sqrt())
}

/// Log of the matched-filter SINR density, evaluated verbatim in log
/// space: the leading Gamma-shape factor times the binomial sum. The
/// expression does not integrate to unit mass as written; integrations
/// divide by the numerical mass and report it.
pub fn sinr_pdf_log(
    gamma: f64,
    interferers: usize,
    mean_snr: f64,
    antennas: usize,
) -> Result<f64, ReliabilityError> {
    if interferers < 1 {
        return Err(ReliabilityError::ConstraintViolated(
            "SINR density needs K_c >= 1".into(),
        ));
    }
    if mean_snr <= 0.0 {
        return Err(ReliabilityError::ConstraintViolated(format!(
            "mean SNR must be positive, got {mean_snr}"
        )));
    }
    if gamma < 0.0 {
        return Err(ReliabilityError::ConstraintViolated(format!(
            "SINR must be non-negative, got {gamma}"
        )));
    }
    if gamma == 0.0 {
        return Ok(f64::NEG_INFINITY);
    }
    let n_t = antennas as u64;
    let kc = interferers as f64;
    let lead = (antennas as f64 - 1.0) * gamma.ln() - gamma / mean_snr
        - ln_gamma_fn(antennas as f64)
        - (kc + 1.0) * mean_snr.ln();
    let terms: Vec<f64> = (0..=n_t)
        .map(|i| {
            let kci = kc + i as f64;
            ln_binomial(n_t, i) + kci * mean_snr.ln() + ln_gamma_fn(kci) - ln_gamma_fn(kc)
                - kci * (gamma + 1.0).ln()
        })
        .collect();
    Ok(lead + log_sum_exp(&terms))
}

/// The SINR density value itself (may overflow for large antenna counts;
/// prefer [`sinr_pdf_log`] in integrals).
pub fn sinr_pdf(
    gamma: f64,
    interferers: usize,
    mean_snr: f64,
    antennas: usize,
) -> Result<f64, ReliabilityError> {
    sinr_pdf_log(gamma, interferers, mean_snr, antennas).map(f64::exp)
}

/// Result of the SINR-integrated decoding error probability.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegratedPd {
    /// Self-normalized error probability.
    pub p_d: f64,
    /// log10 of the raw mass of the density; 0 would mean the
    /// expression is correctly normalized as written.
    pub log10_mass: f64,
}

/// Decoding error probability integrated over the matched-filter SINR
/// distribution, self-normalized by the density's numerical mass.
pub fn p_d_integrated(
    mean_snr: f64,
    interferers: usize,
    antennas: usize,
    rate: f64,
    n_data: usize,
    slots: f64,
) -> Result<IntegratedPd, ReliabilityError> {
    // Locate the density's log-peak on a log-spaced probe grid; the
    // offset keeps both integrands within f64 range for any N_T.
    let lo = 1e-3 * mean_snr;
    let hi = 10.0 * mean_snr * antennas as f64;
    let probes = 400;
    let mut peak_x = mean_snr;
    let mut peak_log = f64::NEG_INFINITY;
    for p in 0..=probes {
        let x = lo * (hi / lo).powf(p as f64 / probes as f64);
        let v = sinr_pdf_log(x, interferers, mean_snr, antennas)?;
        if v > peak_log {
            peak_log = v;
            peak_x = x;
        }
    }
    let density = |g: f64| match sinr_pdf_log(g, interferers, mean_snr, antennas) {
        Ok(v) => (v - peak_log).exp(),
        Err(_) => 0.0,
    };
    let scale = 2.0 * peak_x;
    let rel_tol = 1e-8;
    let max_doublings = 12;
    let mass = integrate_half_line(density, scale, rel_tol, max_doublings)?;
    let weighted = integrate_half_line(
        |g| density(g) * p_d_conditional(g, rate, n_data, slots),
        scale,
        rel_tol,
        max_doublings,
    )?;
    Ok(IntegratedPd {
        p_d: weighted / mass,
        log10_mass: (mass.ln() + peak_log) / std::f64::consts::LN_10,
    })
}

/// Deterministic large-antenna post-matched-filter SINR limit, including
/// its unit offset: 1 + N_T g (1-l) / (g K_c + l g + 1).
pub fn gamma_asy(gamma: f64, antennas: usize, interferers: usize, lambda: f64) -> f64 {
    assert!(gamma > 0.0, "symbol SNR must be positive");
    assert!((0.0..1.0).contains(&lambda), "lambda must lie in [0,1)");
    let g = gamma;
    let kc = interferers as f64;
    1.0 + antennas as f64 * g * (1.0 - lambda) / (g * kc + lambda * g + 1.0)
}

/// Asymptotic decoding error probability at the operating point: the
/// limit SINR enters the conditional expression as 1 + gamma, i.e.
/// capacity log2(gamma_asy) and dispersion 1 - gamma_asy^-2.
pub fn p_d_asymptotic(cfg: &SystemConfig) -> Result<f64, ReliabilityError> {
    if !(0.0..1.0).contains(&cfg.error_weight) {
        return Err(ReliabilityError::ConstraintViolated(format!(
            "error weight {} outside [0,1)",
            cfg.error_weight
        )));
    }
    let r = rate(
        cfg.payload_bits,
        cfg.n_data,
        cfg.subcarrier_spacing,
        cfg.data_slots,
        cfg.slot_time,
    );
    let asy = gamma_asy(
        cfg.mean_snr,
        cfg.antennas,
        cfg.effective_interferers(),
        cfg.error_weight,
    );
    Ok(p_d_conditional(asy - 1.0, r, cfg.n_data, cfg.data_slots))
}

/// Two-shot failure probability: [1 - (1 - P_c)(1 - P_d)]^2.
pub fn p_e(p_c: f64, p_d: f64) -> f64 {
    debug_assert!((0.0..=1.0).contains(&p_c) && (0.0..=1.0).contains(&p_d));
    let single = 1.0 - (1.0 - p_c) * (1.0 - p_d);
    single * single
}

/// Pilot-identification error in its field-size form sqrt(1/(2 q^k K)),
/// the reduction of the coding-subcarrier expression under
/// N_R = q [1 + K(k-1)]. Validity carries over: K(k-1) >= 3 and
/// q >= K(k-1).
pub fn p_c_field_form(cfg: &SystemConfig) -> Result<f64, ReliabilityError> {
    let kk = cfg.active_users as f64 * (cfg.code_dimension as f64 - 1.0);
    if kk < 3.0 {
        return Err(ReliabilityError::ConstraintViolated(format!(
            "K(k-1) = {kk} < 3"
        )));
    }
    let q = cfg.effective_field_size()?;
    if (q as f64) < kk {
        return Err(ReliabilityError::ConstraintViolated(format!(
            "field size {q} < K(k-1) = {kk} (coding subcarriers too few for this load)"
        )));
    }
    Ok((1.0 / (2.0 * (q as f64).powi(cfg.code_dimension as i32) * cfg.active_users as f64)).sqrt())
}

/// Failure probability at total latency `latency`, fully closed form:
/// P_c reduces to sqrt(1 / (2 q^k K)), the pilot phase consumes K+1
/// mini-slots, and the remaining time carries the data at the asymptotic
/// SINR.
pub fn p_e_closed(cfg: &SystemConfig, latency: f64) -> Result<f64, ReliabilityError> {
    let pilot_time = cfg.pilot_slots() as f64 * cfg.slot_time + cfg.extra_time;
    let data_time = latency - pilot_time;
    if data_time <= 0.0 {
        return Err(ReliabilityError::LatencyInfeasible {
            latency,
            minimum: pilot_time,
        });
    }
    let pc = p_c_field_form(cfg)?;
    let slots = data_time / cfg.slot_time;
    let r = cfg.payload_bits / (cfg.n_data as f64 * cfg.subcarrier_spacing * data_time);
    let asy = gamma_asy(
        cfg.mean_snr,
        cfg.antennas,
        cfg.effective_interferers(),
        cfg.error_weight,
    );
    let pd = p_d_conditional(asy - 1.0, r, cfg.n_data, slots);
    Ok(p_e(pc, pd))
}

/// Accessibility gate: either the sustained user rate or an infeasibility
/// marker.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Accessibility {
    Feasible(f64),
    Infeasible,
}

impl Accessibility {
    pub fn value(&self) -> Option<f64> {
        match self {
            Accessibility::Feasible(s) => Some(*s),
            Accessibility::Infeasible => None,
        }
    }
}

/// Users per second of occupied symbol time: K / ((K + 1 + m_d) T_s),
/// gated on the failure probability staying within `cap`.
pub fn accessibility(
    active_users: usize,
    data_slots: f64,
    slot_time: f64,
    p_e_value: f64,
    cap: f64,
) -> Accessibility {
    assert!((0.0..1.0).contains(&cap) && cap > 0.0, "cap must lie in (0,1)");
    if p_e_value <= cap {
        Accessibility::Feasible(users_per_second(active_users, data_slots, slot_time))
    } else {
        Accessibility::Infeasible
    }
}

/// The raw user rate K / ((K + 1 + m_d) T_s), without the gate.
pub fn users_per_second(active_users: usize, data_slots: f64, slot_time: f64) -> f64 {
    active_users as f64 / ((active_users as f64 + 1.0 + data_slots) * slot_time)
}

/// One operating point of the analysis chain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReliabilityReport {
    pub p_c: f64,
    pub p_d: f64,
    pub p_e: f64,
    /// Bits/s/Hz.
    pub rate: f64,
    /// Total latency in seconds.
    pub latency: f64,
    /// Users per second of occupied symbols (ungated value).
    pub users_per_second: f64,
    /// Whether P_e stays within the reliability cap.
    pub feasible: bool,
}

/// Evaluate the closed-form chain at the configured operating point.
pub fn evaluate(cfg: &SystemConfig) -> Result<ReliabilityReport, ReliabilityError> {
    let pc = p_c_field_form(cfg)?;
    let pd = p_d_asymptotic(cfg)?;
    let pe = p_e(pc, pd);
    let s = users_per_second(cfg.active_users, cfg.data_slots, cfg.slot_time);
    Ok(ReliabilityReport {
        p_c: pc,
        p_d: pd,
        p_e: pe,
        rate: rate(
            cfg.payload_bits,
            cfg.n_data,
            cfg.subcarrier_spacing,
            cfg.data_slots,
            cfg.slot_time,
        ),
        latency: cfg.latency(),
        users_per_second: s,
        feasible: pe <= cfg.reliability_cap,
    })
}

/// Which parameter a tradeoff sweep varies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepVariable {
    /// Estimation error weight lambda.
    ErrorWeight,
    /// Total latency T in seconds (data slots follow).
    Latency,
    /// Number of active users K.
    ActiveUsers,
}

/// One sweep row: the swept value and the report or its per-point error.
#[derive(Debug, Clone)]
pub struct TradeoffPoint {
    pub var: f64,
    pub outcome: Result<ReliabilityReport, ReliabilityError>,
}

/// Evaluate the chain over a grid; per-point errors become flagged rows,
/// the sweep itself never aborts.
pub fn sweep(cfg: &SystemConfig, variable: SweepVariable, grid: &[f64]) -> Vec<TradeoffPoint> {
    grid.iter()
        .map(|&v| {
            let mut point = cfg.clone();
            let outcome = match variable {
                SweepVariable::ErrorWeight => {
                    point.error_weight = v;
                    evaluate(&point)
                }
                SweepVariable::Latency => {
                    let pilot_time = point.pilot_slots() as f64 * point.slot_time
                        + point.extra_time;
                    let data_time = v - pilot_time;
                    if data_time <= 0.0 {
                        Err(ReliabilityError::LatencyInfeasible {
                            latency: v,
                            minimum: pilot_time,
                        })
                    } else {
                        point.data_slots = data_time / point.slot_time;
                        evaluate(&point)
                    }
                }
                SweepVariable::ActiveUsers => {
                    point.active_users = v.round() as usize;
                    evaluate(&point)
                }
            };
            TradeoffPoint { var: v, outcome }
        })
        .collect()
}

/// CSV serialization of a sweep: full-precision floats, one row per grid
/// point, errors flagged in the final column.
pub fn sweep_csv(points: &[TradeoffPoint]) -> String {
    let mut out = String::from("var,P_c,P_d,P_e,R_bps_hz,T_s_total,S_users_per_s,feasible\n");
    for p in points {
        match &p.outcome {
            Ok(r) => {
                out.push_str(&format!(
                    "{:e},{:e},{:e},{:e},{:e},{:e},{:e},{}\n",
                    p.var, r.p_c, r.p_d, r.p_e, r.rate, r.latency, r.users_per_second, r.feasible
                ));
            }
            Err(_) => {
                out.push_str(&format!("{:e},NaN,NaN,NaN,NaN,NaN,NaN,error\n", p.var));
            }
        }
    }
    out
}
