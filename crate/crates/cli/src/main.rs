//! `chebcent`: restricted Chebyshev centers from the command line.
//!
//! Every run writes `<task>.json` (plus CSV curves for some tasks) into
//! `--out`. Exit codes: 0 ok, 2 instance error, 3 capability error,
//! 4 verification failure, 1 anything unexpected.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};

use chebcent::io::SchemaError;

#[derive(Parser, Debug)]
#[command(name = "chebcent", version, about = "Restricted Chebyshev centers and their stability probes")]
struct Cli {
    #[command(subcommand)]
    task: Task,
    #[command(flatten)]
    opts: Opts,
}

#[derive(Subcommand, Debug, Clone, Copy, PartialEq, Eq)]
enum Task {
    /// Radius and center set; with --eps0 runs the truncated-step construction.
    Solve,
    /// Block decomposition of a two-block direct sum (M-summand solve when params.z is set).
    Decompose,
    /// S(F, δ) curve and a certified δ for --eps.
    VerifyP1,
    /// Perturbation trials measuring center-set deviation.
    ProbeContinuity,
    /// Ball-intersection stability with the explicit δ(α, ε).
    Lemma34,
    /// λ-scaling correspondence and saturation on a subspace ball.
    ScaleCheck,
    /// Grid-scan radius (and S at --deltas) against the solvers.
    Oracle,
    /// Rescans the built-in corpus and writes the pinned oracle values.
    PinDerived,
}

impl Task {
    fn name(self) -> &'static str {
        match self {
            Task::Solve => "solve",
            Task::Decompose => "decompose",
            Task::VerifyP1 => "verify-p1",
            Task::ProbeContinuity => "probe-continuity",
            Task::Lemma34 => "lemma34",
            Task::ScaleCheck => "scale-check",
            Task::Oracle => "oracle",
            Task::PinDerived => "pin-derived",
        }
    }
}

/// Flags override the instance's `params`.
#[derive(clap::Args, Debug, Clone)]
pub struct Opts {
    #[arg(long, global = true)]
    pub instance: Option<PathBuf>,
    #[arg(long, global = true, default_value = ".")]
    pub out: PathBuf,
    /// Comparison tolerance [default: 1e-9].
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads; 1 runs everything sequentially.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    #[arg(long, global = true)]
    pub eps: Option<f64>,
    /// Comma list or `geometric:K`.
    #[arg(long, global = true)]
    pub deltas: Option<String>,
    #[arg(long, global = true)]
    pub alpha: Option<f64>,
    #[arg(long, global = true)]
    pub lambda: Option<f64>,
    #[arg(long = "grid-h", global = true)]
    pub grid_h: Option<f64>,
    #[arg(long, global = true)]
    pub trials: Option<usize>,
    #[arg(long, global = true)]
    pub eps0: Option<f64>,
}

#[derive(Debug)]
pub enum Failure {
    Schema(Vec<SchemaError>),
    Core(chebcent::Error),
    Usage(String),
    Io(String),
}

impl From<chebcent::Error> for Failure {
    fn from(e: chebcent::Error) -> Self {
        Failure::Core(e)
    }
}

impl Failure {
    fn exit_code(&self) -> u8 {
        use chebcent::Error as E;
        match self {
            Failure::Schema(_) | Failure::Usage(_) => 2,
            Failure::Core(E::Instance(_) | E::Domain(_) | E::Precondition(_)) => 2,
            Failure::Core(E::Capability(_)) => 3,
            Failure::Core(E::Internal(_)) | Failure::Io(_) => 1,
        }
    }

    fn to_json(&self) -> serde_json::Value {
        use chebcent::Error as E;
        use serde_json::json;
        match self {
            Failure::Schema(errs) => json!({"error": "schema", "errors": errs}),
            Failure::Usage(m) => json!({"error": "usage", "message": m}),
            Failure::Io(m) => json!({"error": "io", "message": m}),
            Failure::Core(e) => {
                let kind = match e {
                    E::Instance(_) => "instance",
                    E::Domain(_) => "domain",
                    E::Precondition(_) => "precondition",
                    E::Capability(_) => "capability",
                    E::Internal(_) => "internal",
                };
                json!({"error": kind, "message": e.to_string()})
            }
        }
    }
}

fn configure_jobs(jobs: Option<usize>) -> Result<(), Failure> {
    match jobs {
        Some(0) => Err(Failure::Usage("--jobs must be at least 1".into())),
        #[cfg(feature = "parallel")]
        Some(j) => rayon::ThreadPoolBuilder::new()
            .num_threads(j)
            .build_global()
            .map_err(|e| Failure::Io(format!("thread pool: {e}"))),
        _ => Ok(()),
    }
}

fn run(cli: &Cli) -> Result<bool, Failure> {
    configure_jobs(cli.opts.jobs)?;
    let started = Instant::now();
    let outcome = match cli.task {
        Task::PinDerived => commands::pin_derived(&cli.opts)?,
        task => {
            let ctx = commands::Ctx::load(&cli.opts)?;
            match task {
                Task::Solve => commands::solve(&ctx, &cli.opts)?,
                Task::Decompose => commands::decompose(&ctx, &cli.opts)?,
                Task::VerifyP1 => commands::verify_p1(&ctx, &cli.opts)?,
                Task::ProbeContinuity => commands::probe_continuity(&ctx, &cli.opts)?,
                Task::Lemma34 => commands::lemma34(&ctx, &cli.opts)?,
                Task::ScaleCheck => commands::scale_check(&ctx, &cli.opts)?,
                Task::Oracle => commands::oracle(&ctx, &cli.opts)?,
                Task::PinDerived => unreachable!(),
            }
        }
    };
    let name = cli.task.name();
    let report_path = output::emit(&cli.opts.out, name, &outcome, started.elapsed())?;
    println!(
        "{name}: {} ({})",
        if outcome.verified { "ok" } else { "VERIFICATION FAILED" },
        report_path.display()
    );
    Ok(outcome.verified)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(4),
        Err(f) => {
            eprintln!("{}", chebcent::io::to_json_compact(&f.to_json()));
            ExitCode::from(f.exit_code())
        }
    }
}
