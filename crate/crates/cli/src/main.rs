//! `cvasym`: run Monte Carlo experiments on series-estimator cross-validation,
//! sweep single experiments from the command line, and export the
//! deterministic curves (f_n, g_n, window ends) for plotting.

use clap::{Args, Parser, Subcommand};
use cvasym_core::density::Family;
use cvasym_core::harness::experiments::{curves_csv, demo_curves_csv, run_experiment};
use cvasym_core::harness::{
    emit, parse_config, EmitFormat, ExperimentConfig, ExperimentKind, NtRule,
};
use cvasym_core::limit::CorrectionMode;
use serde::Deserialize;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "cvasym", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment described by a TOML config file.
    Run(RunArgs),
    /// Run a named experiment with its defaults, overridden from flags.
    Sweep(SweepArgs),
    /// Emit f_n, g_n and window knots as CSV for plotting.
    Curves(CurvesArgs),
}

#[derive(Args)]
struct RunArgs {
    /// TOML experiment configuration.
    #[arg(long)]
    config: PathBuf,
    /// Override the output path from the config.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    /// unbiasedness | variance_ratio | cov_match | excess_risk_shape |
    /// argmin_law | lemma_sweep | coupling_check
    #[arg(long)]
    experiment: String,
    /// Sample-size ladder.
    #[arg(long, num_args = 1.., value_delimiter = ',')]
    n: Option<Vec<u64>>,
    /// Training sizes (one per n, or a single broadcast value).
    #[arg(long, num_args = 1.., value_delimiter = ',')]
    n_t: Option<Vec<u64>>,
    /// Fold counts.
    #[arg(long, num_args = 1.., value_delimiter = ',')]
    v: Option<Vec<u64>>,
    /// Window level x.
    #[arg(long)]
    x: Option<f64>,
    #[arg(long)]
    replicates: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Family spec: uniform | geometric:R | polynomial:BETA,KAPPA | plateau:H,WIDTH
    #[arg(long)]
    family: Option<String>,
    #[arg(long)]
    k_max: Option<u64>,
    #[arg(long, default_value = "csv")]
    format: String,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CurvesArgs {
    /// Family spec (see `sweep --family`); omit with --demo or --config.
    #[arg(long)]
    family: Option<String>,
    #[arg(long)]
    n: Option<u64>,
    #[arg(long)]
    n_t: Option<u64>,
    /// Window level x.
    #[arg(long)]
    x: Option<f64>,
    /// Emit the fixed illustration curves instead of a family's.
    #[arg(long)]
    demo: bool,
    /// Sample count for the demo curves.
    #[arg(long, default_value_t = 400)]
    points: usize,
    /// Correction mode for g_n: lemma | isotonic.
    #[arg(long, default_value = "lemma")]
    correction: String,
    /// Curves config file (alternative to flags).
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Deserialize)]
struct CurvesFileConfig {
    demo: Option<bool>,
    family: Option<Family>,
    n: Option<u64>,
    n_t: Option<u64>,
    x: Option<f64>,
    points: Option<usize>,
    output: Option<String>,
}

fn parse_family_spec(spec: &str) -> Result<Family, String> {
    let (kind, rest) = match spec.split_once(':') {
        Some((k, r)) => (k, r),
        None => (spec, ""),
    };
    let nums: Vec<f64> = if rest.is_empty() {
        vec![]
    } else {
        rest.split(',')
            .map(|s| s.trim().parse::<f64>().map_err(|e| format!("{spec}: {e}")))
            .collect::<Result<_, _>>()?
    };
    match (kind, nums.as_slice()) {
        ("uniform", []) => Ok(Family::Uniform),
        ("geometric", [r]) => Ok(Family::Geometric { ratio: *r }),
        ("polynomial", [b, k]) => Ok(Family::Polynomial {
            exponent: *b,
            scale: *k,
        }),
        ("plateau", [h, w]) => Ok(Family::Plateau {
            height: *h,
            width: *w as u64,
        }),
        _ => Err(format!(
            "bad family spec `{spec}` (uniform | geometric:R | polynomial:BETA,KAPPA | plateau:H,WIDTH)"
        )),
    }
}

fn parse_correction(s: &str) -> Result<CorrectionMode, String> {
    match s {
        "lemma" => Ok(CorrectionMode::Lemma),
        "isotonic" => Ok(CorrectionMode::Isotonic),
        other => Err(format!("unknown correction mode `{other}`")),
    }
}

fn cmd_run(args: RunArgs) -> Result<(), String> {
    let text = std::fs::read_to_string(&args.config)
        .map_err(|e| format!("{}: {e}", args.config.display()))?;
    let mut cfg = parse_config(&text).map_err(|e| e.to_string())?;
    if let Some(out) = args.out {
        cfg.output = out;
    }
    run_and_emit(&cfg)
}

fn cmd_sweep(args: SweepArgs) -> Result<(), String> {
    let kind = ExperimentKind::parse(&args.experiment).map_err(|e| e.to_string())?;
    let mut cfg = ExperimentConfig::default_for(kind);
    if let Some(n) = args.n {
        cfg.n = n;
    }
    if let Some(n_t) = args.n_t {
        cfg.nt_rule = NtRule::Explicit(n_t);
    }
    if let Some(v) = args.v {
        cfg.v = v;
    }
    if let Some(x) = args.x {
        cfg.x = x;
    }
    if let Some(r) = args.replicates {
        cfg.replicates = r;
    }
    if let Some(s) = args.seed {
        cfg.base_seed = s;
    }
    if let Some(f) = args.family {
        cfg.family = parse_family_spec(&f)?;
    }
    if args.k_max.is_some() {
        cfg.k_max = args.k_max;
    }
    cfg.format = match args.format.as_str() {
        "csv" => EmitFormat::Csv,
        "json" => EmitFormat::Json,
        other => return Err(format!("unknown format `{other}`")),
    };
    if let Some(out) = args.out {
        cfg.output = out;
    }
    run_and_emit(&cfg)
}

fn run_and_emit(cfg: &ExperimentConfig) -> Result<(), String> {
    let records = run_experiment(cfg).map_err(|e| e.to_string())?;
    emit(&records, cfg.format, &cfg.output).map_err(|e| e.to_string())?;
    println!(
        "{}: {} records -> {}",
        cfg.label,
        records.len(),
        cfg.output.display()
    );
    Ok(())
}

fn cmd_curves(args: CurvesArgs) -> Result<(), String> {
    let mut demo = args.demo;
    let mut family = None;
    let mut n = args.n;
    let mut n_t = args.n_t;
    let mut x = args.x;
    let mut points = args.points;
    let mut out = args.out.clone();
    if let Some(path) = &args.config {
        let text =
            std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
        let file: CurvesFileConfig = toml::from_str(&text).map_err(|e| e.to_string())?;
        demo = demo || file.demo.unwrap_or(false);
        family = file.family;
        n = n.or(file.n);
        n_t = n_t.or(file.n_t);
        x = x.or(file.x);
        if let Some(p) = file.points {
            points = p;
        }
        if out.is_none() {
            out = file.output.map(PathBuf::from);
        }
    }
    if let Some(spec) = &args.family {
        family = Some(parse_family_spec(spec)?);
    }
    let text = if demo {
        demo_curves_csv(x.unwrap_or(25.0), points).map_err(|e| e.to_string())?
    } else {
        let family = family.ok_or("curves needs --family, --demo, or a config file")?;
        let n = n.ok_or("curves needs --n")?;
        let n_t = n_t.ok_or("curves needs --n_t")?;
        let mode = parse_correction(&args.correction)?;
        curves_csv(&family, n, n_t, x.unwrap_or(1.0), mode).map_err(|e| e.to_string())?
    };
    match out {
        Some(path) => {
            std::fs::write(&path, text).map_err(|e| format!("{}: {e}", path.display()))?;
            println!("curves -> {}", path.display());
        }
        None => print!("{text}"),
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(a) => cmd_run(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Curves(a) => cmd_curves(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
