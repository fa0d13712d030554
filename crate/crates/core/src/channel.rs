//! Frequency-selective Rayleigh SIMO-OFDM link simulation.
//!
//! Channels are drawn as tap-domain impulse responses per antenna and
//! mapped to per-subcarrier frequency-domain vectors (the runtime path
//! evaluates the DFT sum directly; the circulant time-domain model serves
//! as a validation oracle in the tests). Matched-filter reception is
//! measured as a per-trial power ratio of the decomposed receive terms,
//! which converges to the deterministic large-antenna SINR limits.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

use crate::rng::{trial_rng, StreamId};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ChannelError {
    #[error("tap power profile must be non-negative and sum to 1 (sum = {sum})")]
    BadProfile { sum: f64 },
    #[error("profile length {profile} does not match tap count {taps}")]
    ProfileLengthMismatch { profile: usize, taps: usize },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("estimation error weight must lie in [0,1), got {0}")]
    LambdaOutOfRange(f64),
    #[error("need at least 1000 trials, got {0}")]
    InsufficientTrials(usize),
    #[error("subcarrier {subcarrier} outside FFT size {fft_size}")]
    SubcarrierOutOfRange { subcarrier: usize, fft_size: usize },
}

/// Tap-domain channel impulse responses for one user: `taps[i][l]` is tap
/// `l` at antenna `i`.
#[derive(Debug, Clone)]
pub struct Cir {
    pub taps: Vec<Vec<Complex64>>,
    pub tap_power_profile: Vec<f64>,
}

/// The frequency-domain channel vector of one (subcarrier, user) pair.
#[derive(Debug, Clone, PartialEq)]
pub struct SubcarrierChannel {
    pub g: Vec<Complex64>,
}

/// A channel estimate with its error weight.
#[derive(Debug, Clone)]
pub struct EstimatedChannel {
    pub g_hat: Vec<Complex64>,
    pub error_weight: f64,
}

/// Received vector on one (subcarrier, symbol).
#[derive(Debug, Clone)]
pub struct RxSymbols {
    pub y: Vec<Complex64>,
    pub noise_power: f64,
}

fn complex_gaussian<R: Rng + ?Sized>(variance: f64, rng: &mut R) -> Complex64 {
    let s = (variance / 2.0).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re * s, im * s)
}

fn validate_profile(profile: &[f64]) -> Result<(), ChannelError> {
    let sum: f64 = profile.iter().sum();
    if profile.iter().any(|&p| p < 0.0) || (sum - 1.0).abs() > 1e-9 {
        return Err(ChannelError::BadProfile { sum });
    }
    Ok(())
}

/// Draw a Rayleigh-fading CIR: tap `l` is circular complex Gaussian with
/// variance `profile[l]`, independent across taps and antennas.
pub fn draw_cir<R: Rng + ?Sized>(
    taps: usize,
    antennas: usize,
    profile: &[f64],
    rng: &mut R,
) -> Result<Cir, ChannelError> {
    if profile.len() != taps {
        return Err(ChannelError::ProfileLengthMismatch {
            profile: profile.len(),
            taps,
        });
    }
    validate_profile(profile)?;
    let taps = (0..antennas)
        .map(|_| profile.iter().map(|&p| complex_gaussian(p, rng)).collect())
        .collect();
    Ok(Cir {
        taps,
        tap_power_profile: profile.to_vec(),
    })
}

/// Uniform power profile over `taps` taps.
pub fn uniform_profile(taps: usize) -> Vec<f64> {
    vec![1.0 / taps as f64; taps]
}

/// Frequency-domain channel at subcarrier `j` for an `fft_size`-point
/// grid: per antenna, the sum of taps rotated by exp(-2*pi*i*j*l/fft_size).
/// The DFT rows carry unit-magnitude entries, so a normalized tap profile
/// gives unit average power per antenna.
pub fn to_subcarrier(cir: &Cir, j: usize, fft_size: usize) -> Result<SubcarrierChannel, ChannelError> {
    if j >= fft_size {
        return Err(ChannelError::SubcarrierOutOfRange {
            subcarrier: j,
            fft_size,
        });
    }
    let g = cir
        .taps
        .iter()
        .map(|h| {
            h.iter()
                .enumerate()
                .map(|(l, &tap)| {
                    let angle = -2.0 * std::f64::consts::PI * (j * l) as f64 / fft_size as f64;
                    tap * Complex64::from_polar(1.0, angle)
                })
                .sum()
        })
        .collect();
    Ok(SubcarrierChannel { g })
}

/// One data-phase receive snapshot: y = sum_m g_m d_m + w with
/// w ~ CN(0, noise_power * I).
pub fn rx_data_with_noise<R: Rng + ?Sized>(
    channels: &[SubcarrierChannel],
    symbols: &[Complex64],
    noise_power: f64,
    rng: &mut R,
) -> Result<RxSymbols, ChannelError> {
    if channels.len() != symbols.len() {
        return Err(ChannelError::DimensionMismatch(format!(
            "{} channels vs {} symbols",
            channels.len(),
            symbols.len()
        )));
    }
    let antennas = channels.first().map(|c| c.g.len()).unwrap_or(0);
    if channels.iter().any(|c| c.g.len() != antennas) {
        return Err(ChannelError::DimensionMismatch(
            "unequal antenna counts across users".into(),
        ));
    }
    let mut y = vec![Complex64::new(0.0, 0.0); antennas];
    for (chan, &d) in channels.iter().zip(symbols) {
        for (acc, &g) in y.iter_mut().zip(&chan.g) {
            *acc += g * d;
        }
    }
    if noise_power > 0.0 {
        for acc in y.iter_mut() {
            *acc += complex_gaussian(noise_power, rng);
        }
    }
    Ok(RxSymbols { y, noise_power })
}

/// Data-phase receive model with the standard unit noise variance.
pub fn rx_data<R: Rng + ?Sized>(
    channels: &[SubcarrierChannel],
    symbols: &[Complex64],
    rng: &mut R,
) -> Result<RxSymbols, ChannelError> {
    rx_data_with_noise(channels, symbols, 1.0, rng)
}

/// Imperfect estimate g_hat = (1-lambda) g - lambda g_tilde with
/// g_tilde ~ CN(0, I) independent of g; lambda = 0 reproduces g exactly.
pub fn estimate_with_error<R: Rng + ?Sized>(
    channel: &SubcarrierChannel,
    lambda: f64,
    rng: &mut R,
) -> Result<EstimatedChannel, ChannelError> {
    if !(0.0..1.0).contains(&lambda) {
        return Err(ChannelError::LambdaOutOfRange(lambda));
    }
    let g_hat = channel
        .g
        .iter()
        .map(|&g| (1.0 - lambda) * g - lambda * complex_gaussian(1.0, rng))
        .collect();
    Ok(EstimatedChannel {
        g_hat,
        error_weight: lambda,
    })
}

/// Configuration of the matched-filter SINR measurement.
#[derive(Debug, Clone)]
pub struct MfSinrConfig {
    /// Active users on the subcarrier (user 0 is the one of interest, the
    /// other users - 1 act as interferers).
    pub users: usize,
    pub antennas: usize,
    /// Symbol SNR (E|d|^2 with unit noise variance).
    pub symbol_snr: f64,
    /// Channel-estimation error weight lambda in [0, 1).
    pub error_weight: f64,
    pub taps: usize,
    pub fft_size: usize,
    pub subcarrier: usize,
    pub trials: usize,
}

impl MfSinrConfig {
    pub fn new(users: usize, antennas: usize, symbol_snr: f64, error_weight: f64, trials: usize) -> Self {
        Self {
            users,
            antennas,
            symbol_snr,
            error_weight,
            taps: 6,
            fft_size: 512,
            subcarrier: 0,
            trials,
        }
    }
}

/// Per-trial decomposition of the matched-filter output into signal and
/// disturbance powers, conditioned on the drawn channels.
struct TrialPowers {
    signal: f64,
    disturbance: f64,
}

fn mf_trial(cfg: &MfSinrConfig, rng: &mut impl Rng) -> Result<TrialPowers, ChannelError> {
    if !(0.0..1.0).contains(&cfg.error_weight) {
        return Err(ChannelError::LambdaOutOfRange(cfg.error_weight));
    }
    let profile = uniform_profile(cfg.taps);
    let mut channels = Vec::with_capacity(cfg.users);
    for _ in 0..cfg.users {
        let cir = draw_cir(cfg.taps, cfg.antennas, &profile, rng)?;
        channels.push(to_subcarrier(&cir, cfg.subcarrier, cfg.fft_size)?);
    }
    let n_t = cfg.antennas as f64;
    let gamma = cfg.symbol_snr;
    let lambda = cfg.error_weight;
    let g0 = &channels[0].g;

    // Estimation error enters with power-preserving weights so the filter
    // keeps unit average gain and the measured ratio converges to the
    // large-antenna SINR limit.
    let (w_sig, w_err) = ((1.0 - lambda).sqrt(), lambda.sqrt());
    let g_err: Vec<Complex64> = if lambda > 0.0 {
        (0..cfg.antennas).map(|_| complex_gaussian(1.0, rng)).collect()
    } else {
        vec![Complex64::new(0.0, 0.0); cfg.antennas]
    };
    let g_hat: Vec<Complex64> = g0
        .iter()
        .zip(&g_err)
        .map(|(&g, &e)| w_sig * g - w_err * e)
        .collect();

    let norm_g0: f64 = g0.iter().map(|z| z.norm_sqr()).sum();
    let norm_hat: f64 = g_hat.iter().map(|z| z.norm_sqr()).sum();

    // Matched component of the desired user's own term.
    let signal = gamma * (1.0 - lambda) * (norm_g0 / n_t) * (norm_g0 / n_t);
    // Estimation-error leakage of the desired user's term.
    let err_leak: Complex64 = g_err.iter().zip(g0).map(|(e, g)| e.conj() * g).sum();
    let mut disturbance = gamma * lambda * err_leak.norm_sqr() / (n_t * n_t);
    // Inter-user interference through the filter.
    for chan in &channels[1..] {
        let cross: Complex64 = g_hat.iter().zip(&chan.g).map(|(f, g)| f.conj() * g).sum();
        disturbance += gamma * cross.norm_sqr() / (n_t * n_t);
    }
    // Filtered unit-variance noise.
    disturbance += norm_hat / (n_t * n_t);
    Ok(TrialPowers { signal, disturbance })
}

/// Empirical mean post-matched-filter SINR: accumulated signal power over
/// accumulated disturbance power across trials, plus one to match the
/// offset convention of the asymptotic limits.
pub fn matched_filter_sinr(cfg: &MfSinrConfig, master_seed: u64) -> Result<f64, ChannelError> {
    if cfg.trials < 1000 {
        return Err(ChannelError::InsufficientTrials(cfg.trials));
    }
    let mut signal = 0.0;
    let mut disturbance = 0.0;
    for t in 0..cfg.trials {
        let mut rng = trial_rng(master_seed, StreamId::ChannelTrials, t as u64);
        let p = mf_trial(cfg, &mut rng)?;
        signal += p.signal;
        disturbance += p.disturbance;
    }
    Ok(1.0 + signal / disturbance)
}

/// Per-trial conditional SINR samples (no offset), for use as an
/// empirical distribution of the post-matched-filter SINR.
pub fn conditional_sinr_samples(
    cfg: &MfSinrConfig,
    master_seed: u64,
) -> Result<Vec<f64>, ChannelError> {
    if cfg.trials < 1000 {
        return Err(ChannelError::InsufficientTrials(cfg.trials));
    }
    (0..cfg.trials)
        .map(|t| {
            let mut rng = trial_rng(master_seed, StreamId::ChannelTrials, t as u64);
            mf_trial(cfg, &mut rng).map(|p| p.signal / p.disturbance)
        })
        .collect()
}
