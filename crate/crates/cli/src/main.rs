//! `gfa` — batch front-end for the grant-free access toolkit.
//!
//! Subcommands: `code-check` (superimposed-code property checks),
//! `detect-sim` (activity-detection recovery simulation), `sinr-validate`
//! (matched-filter SINR against the large-antenna limits) and `tradeoff`
//! (reliability sweeps). Parameters come from built-in defaults, then an
//! optional `--config` file of `key = value` lines, then same-named
//! command-line flags; CSV goes to `--out` (relative paths honor the
//! `GFA_OUT_DIR` environment variable) or stdout.
//!
//! Exit status: 0 when all requested checks pass, 1 when a check fails,
//! 2 for parameter or configuration errors.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::TradeoffKind;
use config::RunConfig;

#[derive(Parser, Debug)]
#[command(name = "gfa", version, about = "Grant-free access simulation and analysis toolkit")]
struct Cli {
    /// Flat key = value configuration file (# comments allowed).
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Master seed; all randomized runs derive per-trial streams from it.
    #[arg(long, global = true)]
    seed: Option<String>,

    /// Output CSV path (stdout when omitted; GFA_OUT_DIR prefixes
    /// relative paths).
    #[arg(long, global = true)]
    out: Option<String>,

    /// Monte-Carlo trials.
    #[arg(long, global = true)]
    trials: Option<String>,

    /// Override any configuration key, repeatable: --set key=value.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    set: Vec<String>,

    // Per-parameter overrides, named after their configuration keys.
    #[arg(long, global = true, hide_short_help = true)]
    antennas: Option<String>,
    #[arg(long, global = true, hide_short_help = true)]
    total_users: Option<String>,
    #[arg(long, global = true, hide_short_help = true)]
    active_users: Option<String>,
    #[arg(long, global = true, hide_short_help = true)]
    code_dimension: Option<String>,
    #[arg(long, global = true, hide_short_help = true)]
    code_order: Option<String>,
    #[arg(long, global = true, hide_short_help = true)]
    field_size: Option<String>,
    #[arg(long, global = true, hide_short_help = true)]
    n_coding: Option<String>,
    #[arg(long, global = true, hide_short_help = true)]
    n_estimation: Option<String>,
    #[arg(long, global = true, hide_short_help = true)]
    n_data: Option<String>,
    #[arg(long, global = true, hide_short_help = true)]
    subcarrier_spacing: Option<String>,
    #[arg(long, global = true, hide_short_help = true)]
    slot_time: Option<String>,
    #[arg(long, global = true, hide_short_help = true)]
    extra_time: Option<String>,
    #[arg(long, global = true, hide_short_help = true)]
    data_slots: Option<String>,
    #[arg(long, global = true, hide_short_help = true)]
    payload_bits: Option<String>,
    #[arg(long, global = true, hide_short_help = true)]
    snr_db: Option<String>,
    #[arg(long, global = true, hide_short_help = true)]
    pilot_snr_db: Option<String>,
    #[arg(long, global = true, hide_short_help = true)]
    error_weight: Option<String>,
    #[arg(long, global = true, hide_short_help = true)]
    interferers: Option<String>,
    #[arg(long, global = true, hide_short_help = true)]
    taps: Option<String>,
    #[arg(long, global = true, hide_short_help = true)]
    reliability_cap: Option<String>,
    #[arg(long, global = true, hide_short_help = true)]
    window: Option<String>,
    #[arg(long, global = true, hide_short_help = true)]
    noise_power: Option<String>,
    #[arg(long, global = true, hide_short_help = true)]
    target_pf: Option<String>,
    #[arg(long, global = true, hide_short_help = true)]
    threshold: Option<String>,
    #[arg(long, global = true, hide_short_help = true)]
    calibration_trials: Option<String>,
    #[arg(long, global = true, hide_short_help = true)]
    detect_source: Option<String>,
    #[arg(long, global = true, hide_short_help = true)]
    attack_mode: Option<String>,
    #[arg(long, global = true, hide_short_help = true)]
    attack_jammed: Option<String>,
    #[arg(long, global = true, hide_short_help = true)]
    attack_power: Option<String>,
    #[arg(long, global = true, hide_short_help = true)]
    attack_phase: Option<String>,
    #[arg(long, global = true, hide_short_help = true)]
    grid: Option<String>,
    #[arg(long, global = true, hide_short_help = true)]
    antennas_grid: Option<String>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Build a superimposed code and verify its defining properties.
    CodeCheck {
        /// Force exhaustive subset enumeration regardless of size.
        #[arg(long)]
        exhaustive: bool,
        /// Export the code matrix as plain text to this path.
        #[arg(long, value_name = "PATH")]
        export: Option<PathBuf>,
    },
    /// Simulate activity detection under randomized or pinned attacks.
    DetectSim,
    /// Compare empirical matched-filter SINR against the asymptotic laws.
    SinrValidate,
    /// Run a reliability tradeoff sweep and emit its CSV.
    Tradeoff {
        /// Which tradeoff to sweep.
        #[arg(value_enum)]
        which: TradeoffKind,
    },
}

fn build_config(cli: &Cli) -> anyhow::Result<RunConfig> {
    let mut cfg = RunConfig::default();
    if let Some(path) = &cli.config {
        cfg.apply_file(path)?;
    }
    let overrides: [(&str, &Option<String>); 34] = [
        ("seed", &cli.seed),
        ("out", &cli.out),
        ("trials", &cli.trials),
        ("antennas", &cli.antennas),
        ("total_users", &cli.total_users),
        ("active_users", &cli.active_users),
        ("code_dimension", &cli.code_dimension),
        ("code_order", &cli.code_order),
        ("field_size", &cli.field_size),
        ("n_coding", &cli.n_coding),
        ("n_estimation", &cli.n_estimation),
        ("n_data", &cli.n_data),
        ("subcarrier_spacing", &cli.subcarrier_spacing),
        ("slot_time", &cli.slot_time),
        ("extra_time", &cli.extra_time),
        ("data_slots", &cli.data_slots),
        ("payload_bits", &cli.payload_bits),
        ("snr_db", &cli.snr_db),
        ("pilot_snr_db", &cli.pilot_snr_db),
        ("error_weight", &cli.error_weight),
        ("interferers", &cli.interferers),
        ("taps", &cli.taps),
        ("reliability_cap", &cli.reliability_cap),
        ("window", &cli.window),
        ("noise_power", &cli.noise_power),
        ("target_pf", &cli.target_pf),
        ("threshold", &cli.threshold),
        ("calibration_trials", &cli.calibration_trials),
        ("detect_source", &cli.detect_source),
        ("attack_mode", &cli.attack_mode),
        ("attack_jammed", &cli.attack_jammed),
        ("attack_power", &cli.attack_power),
        ("attack_phase", &cli.attack_phase),
        ("antennas_grid", &cli.antennas_grid),
    ];
    for (key, value) in overrides {
        if let Some(v) = value {
            cfg.apply(key, v)?;
        }
    }
    if let Some(v) = &cli.grid {
        cfg.apply("grid", v)?;
    }
    for assignment in &cli.set {
        let (key, value) = assignment
            .split_once('=')
            .ok_or_else(|| anyhow::anyhow!("--set expects key=value, got `{assignment}`"))?;
        cfg.apply(key.trim(), value.trim())?;
    }
    Ok(cfg)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let cfg = match build_config(&cli) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("configuration error: {e:#}");
            return ExitCode::from(2);
        }
    };
    let result = match &cli.command {
        Command::CodeCheck { exhaustive, export } => {
            commands::code_check(&cfg, *exhaustive, export.clone())
        }
        Command::DetectSim => commands::detect_sim(&cfg),
        Command::SinrValidate => commands::sinr_validate(&cfg),
        Command::Tradeoff { which } => commands::tradeoff(&cfg, *which),
    };
    match result {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
