//! Subcommand implementations. Each returns the process exit code:
//! 0 all checks passed, 1 a requested check failed; parameter and I/O
//! problems bubble up as errors (exit 2).

use std::collections::{BTreeMap, HashMap};
use std::io::Write;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};

use gfa_core::attack::AttackMode;
use gfa_core::channel::{matched_filter_sinr, MfSinrConfig};
use gfa_core::code::{boolean_sum, SuperimposedCode};
use gfa_core::detection::{calibrate_threshold, detect_activity, DetectionConfig};
use gfa_core::reliability::{gamma_asy, sweep, sweep_csv, SweepVariable};
use gfa_core::rng::{stream_rng, trial_rng, StreamId};
use gfa_core::scenario::{
    expected_report, ideal_counts, sample_activity, sample_partial_band, sample_trial,
    synthesize_occupancy, truth_with_mode, SignalSynthConfig, TrialTruth,
};
use gfa_core::BitVector;

use crate::config::{parse_grid, DetectSource, RunConfig};

/// Write CSV bytes to the resolved output path, or stdout when none.
fn emit(cfg: &RunConfig, csv: &str) -> Result<()> {
    match cfg.resolved_out() {
        Some(path) => {
            if let Some(parent) = path.parent() {
                if !parent.as_os_str().is_empty() {
                    std::fs::create_dir_all(parent)
                        .with_context(|| format!("creating {}", parent.display()))?;
                }
            }
            std::fs::write(&path, csv).with_context(|| format!("writing {}", path.display()))?;
            eprintln!("wrote {}", path.display());
        }
        None => {
            std::io::stdout().write_all(csv.as_bytes())?;
        }
    }
    Ok(())
}

/// Code parameters for the detection-side commands: configured values,
/// or the compact four-user default (q=5, k=2) when no field size is
/// given (the analysis default k=3 would need a far larger field).
fn code_params(cfg: &RunConfig) -> (u64, u32, u32) {
    match cfg.field_size {
        Some(q) => (q, cfg.code_dimension, cfg.effective_order()),
        None => (5, 2, cfg.effective_order()),
    }
}

pub fn code_check(cfg: &RunConfig, exhaustive: bool, export: Option<PathBuf>) -> Result<i32> {
    let (q, k, t) = code_params(cfg);
    let code = SuperimposedCode::build(q, k, t)
        .with_context(|| format!("building code q={q} k={k} t={t}"))?;
    println!(
        "code q={q} k={k} t={t}: length B={}, size C={}, weight L={}",
        code.length(),
        code.size(),
        code.num_blocks()
    );
    if let Some(path) = export {
        let file = std::fs::File::create(&path)
            .with_context(|| format!("creating {}", path.display()))?;
        code.write_text(std::io::BufWriter::new(file))?;
        eprintln!("exported matrix to {}", path.display());
    }

    let mut all_ok = true;
    let mut check = |name: &str, ok: bool, detail: String| {
        println!("check {name}: {} ({detail})", if ok { "pass" } else { "FAIL" });
        all_ok &= ok;
    };

    // Constant column weight, one set bit per block.
    let weight_ok = (0..code.size()).all(|c| {
        let bits = code.column_bits(c);
        bits.count_ones() == code.num_blocks()
            && (0..code.num_blocks()).all(|b| {
                (0..q as usize).filter(|&r| bits.get(b * q as usize + r)).count() == 1
            })
    });
    check(
        "column-weight",
        weight_ok,
        format!("every column has weight {} (one-hot per block)", code.num_blocks()),
    );

    // Pairwise block agreement at most k-1.
    let c_total = code.size();
    let pairs_exhaustive = exhaustive || c_total <= 4096;
    let mut worst = 0usize;
    let agree = |a: usize, b: usize| {
        code.column_symbols(a)
            .iter()
            .zip(code.column_symbols(b))
            .filter(|(x, y)| x == y)
            .count()
    };
    if pairs_exhaustive {
        for a in 0..c_total {
            for b in a + 1..c_total {
                worst = worst.max(agree(a, b));
            }
        }
    } else {
        let mut rng = stream_rng(cfg.seed, 91);
        for _ in 0..cfg.trials.max(1) {
            let a = rand::Rng::gen_range(&mut rng, 0..c_total);
            let b = rand::Rng::gen_range(&mut rng, 0..c_total - 1);
            let b = if b >= a { b + 1 } else { b };
            worst = worst.max(agree(a, b));
        }
    }
    check(
        "pairwise-agreement",
        worst < k as usize,
        format!(
            "max shared blocks {worst} <= {} ({})",
            k - 1,
            if pairs_exhaustive { "exhaustive" } else { "sampled" }
        ),
    );

    // Unique decomposition and pairwise-distinct sums over subsets of
    // size at most t.
    let t_us = t as usize;
    let exhaustive_subsets = count_subsets(c_total, t_us);
    let run_exhaustive = exhaustive || exhaustive_subsets <= 200_000;
    let mut decompose_ok = true;
    let mut distinct_ok = true;
    let mut tested = 0usize;
    let mut seen: HashMap<BitVector, Vec<usize>> = HashMap::new();
    let mut visit = |code: &SuperimposedCode, subset: &[usize]| {
        let vectors: Vec<BitVector> = subset.iter().map(|&c| code.column_bits(c)).collect();
        let sum = boolean_sum(code.length(), &vectors).expect("widths agree");
        match code.decompose(&sum, t_us) {
            Ok(set) => {
                if set.iter().copied().collect::<Vec<_>>() != subset {
                    decompose_ok = false;
                }
            }
            Err(_) => decompose_ok = false,
        }
        if let Some(prev) = seen.insert(sum, subset.to_vec()) {
            if prev != subset {
                distinct_ok = false;
            }
        }
        tested += 1;
    };
    if run_exhaustive {
        let mut subset = Vec::new();
        enumerate_subsets(c_total, t_us, 0, &mut subset, &mut |s| visit(&code, s));
    } else {
        let mut rng = stream_rng(cfg.seed, 92);
        for _ in 0..cfg.trials.max(1) {
            let size = rand::Rng::gen_range(&mut rng, 1..=t_us);
            let mut cols: Vec<usize> = (0..c_total).collect();
            rand::seq::SliceRandom::shuffle(&mut cols[..], &mut rng);
            cols.truncate(size);
            cols.sort_unstable();
            visit(&code, &cols);
        }
    }
    check(
        "unique-decomposition",
        decompose_ok,
        format!(
            "{tested} subsets of size <= {t_us} ({})",
            if run_exhaustive { "exhaustive" } else { "randomized" }
        ),
    );
    check(
        "distinct-sums",
        distinct_ok,
        format!("{} distinct boolean sums", seen.len()),
    );

    Ok(if all_ok { 0 } else { 1 })
}

fn count_subsets(n: usize, t: usize) -> usize {
    let mut total = 0usize;
    let mut c = 1usize;
    for s in 1..=t.min(n) {
        c = match c.checked_mul(n - s + 1) {
            Some(v) => v / s,
            None => return usize::MAX,
        };
        total = total.saturating_add(c);
    }
    total
}

fn enumerate_subsets(
    n: usize,
    max_size: usize,
    from: usize,
    current: &mut Vec<usize>,
    visit: &mut impl FnMut(&[usize]),
) {
    if !current.is_empty() {
        visit(current);
    }
    if current.len() == max_size {
        return;
    }
    for next in from..n {
        current.push(next);
        enumerate_subsets(n, max_size, next + 1, current, visit);
        current.pop();
    }
}

pub fn detect_sim(cfg: &RunConfig) -> Result<i32> {
    let (q, k, order) = code_params(cfg);
    let code = SuperimposedCode::build(q, k, order)?
        .assign_clusters(cfg.total_users)
        .context("assigning user clusters")?;
    if let Some(AttackMode::PartialBand { jammed }) = &cfg.attack_mode {
        if jammed.is_empty() {
            bail!("pinned pb-pj mode needs attack_jammed indices");
        }
        AttackMode::PartialBand { jammed: jammed.clone() }.validate(code.length())?;
    }

    // Signal-level runs need a calibrated ratio threshold.
    let detection = if cfg.detect_source == DetectSource::Signals {
        let threshold = match cfg.threshold {
            Some(g) => g,
            None => {
                let mut rng = stream_rng(cfg.seed, StreamId::Calibration as u64);
                calibrate_threshold(
                    cfg.antennas,
                    cfg.window,
                    cfg.target_pf,
                    cfg.calibration_trials,
                    &mut rng,
                )?
            }
        };
        eprintln!("eigenvalue-ratio threshold: {threshold}");
        Some(DetectionConfig {
            window: cfg.window,
            noise_power: cfg.noise_power,
            threshold,
            target_pf: cfg.target_pf,
        })
    } else {
        None
    };
    let synth = SignalSynthConfig {
        antennas: cfg.antennas,
        pilot_power: cfg.pilot_snr_linear() * cfg.noise_power,
        attacker_power: cfg.attack_power,
        attacker_phase: cfg.attack_phase,
        taps: cfg.taps,
        fft_size: cfg.n_estimation.max(code.length()),
    };

    let mut csv = String::from("trial,truth_mode,truth_alus,mode,num_alus,codewords,exact\n");
    let mut per_mode: BTreeMap<&'static str, (u32, u32)> = BTreeMap::new();
    for t in 0..cfg.trials as u64 {
        let mut rng = trial_rng(cfg.seed, StreamId::ScenarioTrials, t);
        let truth: TrialTruth = match &cfg.attack_mode {
            None => sample_trial(&code, &mut rng),
            Some(mode) => {
                let saps = sample_activity(&code, &mut rng);
                let mode = match mode {
                    AttackMode::PartialBand { jammed } => {
                        if jammed.is_empty() {
                            sample_partial_band(&code, &saps, &mut rng)
                        } else {
                            AttackMode::PartialBand { jammed: jammed.clone() }
                        }
                    }
                    other => other.clone(),
                };
                truth_with_mode(&code, saps, mode)
            }
        };
        let occ = match &detection {
            None => ideal_counts(&code, &truth),
            Some(det) => synthesize_occupancy(&code, &truth, &synth, det, &mut rng)?.0,
        };
        let expected = expected_report(&truth);
        let entry = per_mode.entry(truth.mode.keyword()).or_insert((0, 0));
        entry.0 += 1;
        match detect_activity(&occ, &code) {
            Ok(report) => {
                let exact = report == expected;
                entry.1 += u32::from(exact);
                csv.push_str(&format!(
                    "{t},{},{},{},{exact}\n",
                    truth.mode.keyword(),
                    truth.saps.len(),
                    report.csv_row()
                ));
            }
            Err(_) => {
                csv.push_str(&format!(
                    "{t},{},{},undecodable,0,,false\n",
                    truth.mode.keyword(),
                    truth.saps.len()
                ));
            }
        }
    }
    emit(cfg, &csv)?;

    let mut total = (0u32, 0u32);
    for (mode, (n, ok)) in &per_mode {
        eprintln!(
            "mode {mode}: {ok}/{n} exact ({:.1}%)",
            100.0 * *ok as f64 / (*n).max(1) as f64
        );
        total.0 += n;
        total.1 += ok;
    }
    eprintln!(
        "overall: {}/{} exact ({:.1}%)",
        total.1,
        total.0,
        100.0 * total.1 as f64 / total.0.max(1) as f64
    );
    Ok(0)
}

pub fn sinr_validate(cfg: &RunConfig) -> Result<i32> {
    if cfg.trials < 1000 {
        bail!("sinr-validate needs at least 1000 trials");
    }
    let users = cfg.active_users.max(1);
    let interferers = cfg.interferers.unwrap_or(users - 1);
    let snr = cfg.snr_linear();
    let mut lambdas = vec![0.0];
    if cfg.error_weight > 0.0 {
        lambdas.push(cfg.error_weight);
    }

    let mut csv = String::from("n_t,lambda,empirical,asymptotic,rel_err\n");
    let mut last_err: Option<f64> = None;
    let mut monotone = true;
    for &n_t in &cfg.antennas_grid {
        for &lambda in &lambdas {
            let mf = MfSinrConfig {
                users,
                antennas: n_t,
                symbol_snr: snr,
                error_weight: lambda,
                taps: cfg.taps,
                fft_size: cfg.n_estimation,
                subcarrier: 0,
                trials: cfg.trials,
            };
            let empirical = matched_filter_sinr(&mf, cfg.seed)?;
            let asymptotic = gamma_asy(snr, n_t, interferers, lambda);
            let rel = ((empirical - asymptotic) / asymptotic).abs();
            csv.push_str(&format!("{n_t},{lambda:e},{empirical:e},{asymptotic:e},{rel:e}\n"));
            if lambda == 0.0 {
                if let Some(prev) = last_err {
                    monotone &= rel <= prev;
                }
                last_err = Some(rel);
            }
        }
    }
    emit(cfg, &csv)?;
    eprintln!(
        "relative error {} in antenna count",
        if monotone { "monotonically improves" } else { "is not monotone (Monte-Carlo noise)" }
    );
    Ok(0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum TradeoffKind {
    /// Failure probability versus channel-estimation error weight.
    Error,
    /// Failure probability versus total latency.
    Latency,
    /// Failure probability versus number of active users.
    Access,
}

pub fn tradeoff(cfg: &RunConfig, which: TradeoffKind) -> Result<i32> {
    let system = cfg.system();
    let (variable, grid) = match which {
        TradeoffKind::Error => (
            SweepVariable::ErrorWeight,
            cfg.grid.clone().unwrap_or_else(|| parse_grid("0:0.9:37").expect("static grid")),
        ),
        TradeoffKind::Latency => (
            SweepVariable::Latency,
            cfg.grid.clone().unwrap_or_else(|| {
                (4..=60)
                    .map(|m| (system.pilot_slots() as f64 + m as f64) * system.slot_time)
                    .collect()
            }),
        ),
        TradeoffKind::Access => (
            SweepVariable::ActiveUsers,
            cfg.grid.clone().unwrap_or_else(|| (2..=12).map(|k| k as f64).collect()),
        ),
    };
    if !grid.windows(2).all(|w| w[0] <= w[1]) {
        bail!("sweep grid must be monotone non-decreasing");
    }
    // An empty grid produces the header-only CSV.
    let points = sweep(&system, variable, &grid);
    emit(cfg, &sweep_csv(&points))?;
    let feasible = points
        .iter()
        .filter(|p| p.outcome.as_ref().map(|r| r.feasible).unwrap_or(false))
        .count();
    let flagged = points.iter().filter(|p| p.outcome.is_err()).count();
    eprintln!(
        "{} points: {feasible} within the reliability cap, {flagged} flagged",
        points.len()
    );
    Ok(0)
}
