//! `oilbench`: run experiments, tune step sizes and verify properties.
//!
//! Exit codes: 0 success, 1 verification failure, 2 configuration error,
//! 3 incomplete run.

mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{anyhow, bail};
use clap::{Args, Parser, Subcommand};
use oilbench::harness::{self, ScheduleSpec};
use oilbench::verify::{self, Fault, Suite};
use oilbench::{Algo, Behavior, ExperimentConfig, LossKind, ScheduleKind};
use serde::Serialize;

const EXIT_VERIFY: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_INCOMPLETE: u8 = 3;

#[derive(Parser)]
#[command(name = "oilbench", version, about = "Online imitation learning benchmarks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment for every seed and write a CSV/JSON bundle.
    Run(RunArgs),
    /// Grid-search the step size, then pick the best of the top three.
    Tune(TuneArgs),
    /// Run the property suites.
    Verify(VerifyArgs),
}

#[derive(Args)]
struct Source {
    /// Named preset.
    #[arg(long, conflicts_with = "config", required_unless_present = "config")]
    preset: Option<String>,
    /// Flat TOML experiment file.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    algo: Option<String>,
    /// Comma-separated seeds.
    #[arg(long, value_delimiter = ',')]
    seeds: Option<Vec<u64>>,
    #[arg(long)]
    rounds: Option<usize>,
    /// Constant step size.
    #[arg(long, conflicts_with = "alpha")]
    eta: Option<f64>,
    /// Scale of the algorithm's default schedule.
    #[arg(long)]
    alpha: Option<f64>,
    /// Loss kind: l2, l1, logistic or huber.
    #[arg(long)]
    loss: Option<String>,
    /// agent or expert.
    #[arg(long)]
    behavior: Option<String>,
    /// Concurrent runs; 1 is fully serial, 0 uses every core.
    #[arg(long, default_value_t = 0)]
    jobs: usize,
    /// Output directory (default: $OILBENCH_OUT, else ./oilbench-out).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    source: Source,
    /// Add wall-clock timings to the JSON metadata.
    #[arg(long)]
    record_timings: bool,
}

#[derive(Args)]
struct TuneArgs {
    #[command(flatten)]
    source: Source,
    #[arg(long, default_value_t = 2000)]
    pilot_interactions: usize,
    /// Interactions per round during the pilots.
    #[arg(long, default_value_t = 100)]
    pilot_batch: usize,
}

#[derive(Args)]
struct VerifyArgs {
    /// reformulation, ogd_recovery, bounds, interpolation, lemmas or all.
    #[arg(long, default_value = "all")]
    suite: String,
    #[arg(long, value_delimiter = ',', default_values_t = [1u64, 2, 3])]
    seeds: Vec<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Inject a deliberate fault (wrong_sigma) to exercise the failure path.
    #[arg(long)]
    fault: Option<String>,
}

/// Errors carrying their exit code.
struct Failure {
    code: u8,
    error: anyhow::Error,
}

fn config_error(e: impl Into<anyhow::Error>) -> Failure {
    Failure { code: EXIT_CONFIG, error: e.into() }
}

fn out_dir(flag: Option<PathBuf>) -> PathBuf {
    flag.or_else(|| std::env::var_os("OILBENCH_OUT").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("oilbench-out"))
}

fn load(src: &Source) -> anyhow::Result<ExperimentConfig> {
    let mut cfg = match (&src.preset, &src.config) {
        (Some(p), _) => harness::preset(p)?,
        (None, Some(path)) => config::load(path)?,
        (None, None) => bail!("give --preset or --config"),
    };
    if let Some(a) = &src.algo {
        cfg.algo = a.parse::<Algo>()?;
    }
    if let Some(s) = &src.seeds {
        cfg.seeds = s.clone();
    }
    if let Some(r) = src.rounds {
        cfg = cfg.with_rounds(r);
    }
    if let Some(eta) = src.eta {
        cfg.schedule = ScheduleSpec::Fixed { schedule: ScheduleKind::Constant { eta } };
    }
    if let Some(alpha) = src.alpha {
        cfg.schedule = ScheduleSpec::Fixed { schedule: cfg.algo.default_schedule(alpha) };
    }
    if let ScheduleSpec::Fixed { schedule } = cfg.schedule {
        schedule.validate()?;
    }
    if let Some(l) = &src.loss {
        cfg.loss_kind = l.parse::<LossKind>()?;
    }
    if let Some(b) = &src.behavior {
        cfg.behavior = b.parse::<Behavior>()?;
    }
    cfg.validate()?;
    // surface schedule/algorithm mismatches before any run starts
    oilbench::OptimizerState::new(cfg.algo, oilbench::ParamVector::zeros(1), cfg.resolve_schedule(cfg.seeds[0])?)?;
    Ok(cfg)
}

fn cmd_run(args: RunArgs) -> Result<(), Failure> {
    let cfg = load(&args.source).map_err(config_error)?;
    let records = harness::run_batch(&cfg, args.source.jobs).map_err(config_error)?;
    let dir = out_dir(args.source.out);
    let manifest = output::write_bundle(&dir, &cfg, &records, args.record_timings)
        .map_err(|e| Failure { code: EXIT_INCOMPLETE, error: e })?;
    let incomplete: Vec<String> = records
        .iter()
        .filter(|r| !r.complete)
        .map(|r| format!("seed {}: {}", r.seed, r.error.as_deref().unwrap_or("incomplete")))
        .collect();
    for r in &records {
        eprintln!(
            "{} {} seed {}: {} rounds, avg loss {:.6}, regret {}",
            cfg.name,
            cfg.algo,
            r.seed,
            r.rows.len(),
            r.final_avg_cumulative_loss(),
            r.final_regret().map_or("-".into(), |v| format!("{v:.6}"))
        );
    }
    eprintln!("wrote {}", manifest.display());
    if !incomplete.is_empty() {
        return Err(Failure { code: EXIT_INCOMPLETE, error: anyhow!("incomplete runs: {}", incomplete.join("; ")) });
    }
    Ok(())
}

#[derive(Serialize)]
struct TuneOutput<'a> {
    config: &'a ExperimentConfig,
    pilot_interactions: usize,
    pilot_batch: usize,
    grid: Vec<f64>,
    ranking: &'a [harness::GridEntry],
    finalists: &'a [harness::GridEntry],
    selected_eta: f64,
    selected_schedule: ScheduleKind,
}

fn cmd_tune(args: TuneArgs) -> Result<(), Failure> {
    let cfg = load(&args.source).map_err(config_error)?;
    let grid = harness::decade_grid();
    let result = harness::tune(&cfg, &grid, args.pilot_interactions, args.pilot_batch, args.source.jobs).map_err(
        |e| match e {
            oilbench::Error::AllPilotsFailed(_) => Failure { code: EXIT_INCOMPLETE, error: e.into() },
            other => config_error(other),
        },
    )?;
    let selected = harness::with_eta(&cfg, result.selected_eta).map_err(config_error)?;
    let ScheduleSpec::Fixed { schedule } = selected.schedule else {
        return Err(config_error(anyhow!("tuned schedule is not fixed")));
    };
    let out = TuneOutput {
        config: &cfg,
        pilot_interactions: args.pilot_interactions,
        pilot_batch: args.pilot_batch,
        grid,
        ranking: &result.ranking,
        finalists: &result.finalists,
        selected_eta: result.selected_eta,
        selected_schedule: schedule,
    };
    let dir = out_dir(args.source.out);
    std::fs::create_dir_all(&dir).map_err(config_error)?;
    let path = dir.join(format!("{}_{}_tune.json", cfg.name, cfg.algo.name()));
    output::write_json(&path, &out).map_err(|e| Failure { code: EXIT_INCOMPLETE, error: e })?;
    eprintln!("selected eta {} ({})", result.selected_eta, path.display());
    Ok(())
}

fn cmd_verify(args: VerifyArgs) -> Result<(), Failure> {
    let suite: Suite = args.suite.parse().map_err(config_error)?;
    let fault = match args.fault.as_deref() {
        None => None,
        Some("wrong_sigma") => Some(Fault::WrongSigma),
        Some(other) => return Err(config_error(anyhow!("unknown fault `{other}`"))),
    };
    let reports = verify::run_suite(suite, &args.seeds, fault).map_err(config_error)?;
    let dir = out_dir(args.out);
    std::fs::create_dir_all(&dir).map_err(config_error)?;
    let path = dir.join("verify.json");
    output::write_json(&path, &reports).map_err(|e| Failure { code: EXIT_INCOMPLETE, error: e })?;
    let mut failed = Vec::new();
    for r in &reports {
        let n = r.cases.len();
        let bad = r.failures().count();
        println!("{:<14} {}  ({}/{} cases)", r.suite.name(), if r.passed { "PASS" } else { "FAIL" }, n - bad, n);
        failed.extend(r.failures());
    }
    if failed.is_empty() {
        return Ok(());
    }
    let replay = dir.join("verify_failures.json");
    output::write_json(&replay, &failed).map_err(|e| Failure { code: EXIT_INCOMPLETE, error: e })?;
    for case in &failed {
        eprintln!("{}", serde_json::to_string(case).unwrap_or_default());
    }
    Err(Failure {
        code: EXIT_VERIFY,
        error: anyhow!("{} failing case(s), reproducers in {}", failed.len(), replay.display()),
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(a) => cmd_run(a),
        Command::Tune(a) => cmd_tune(a),
        Command::Verify(a) => cmd_verify(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            ExitCode::from(f.code)
        }
    }
}
