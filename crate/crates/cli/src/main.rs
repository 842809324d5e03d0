use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rno_cli::{emit_report, parse_problem_file, render, run_audited, CliError, Format, RunOptions};

#[derive(Parser)]
#[command(name = "rno", version, about = "Resource-nongenerating operations workbench")]
struct Cli {
    #[command(subcommand)]
    op: Op,
}

#[derive(Subcommand)]
enum Op {
    /// Generalized robustness of a state.
    Robustness(Common),
    /// Standard robustness of a state.
    StdRobustness(Common),
    /// Geometric measure of a pure state.
    Geometric(Common),
    /// Transformation condition and channel for ψ → σ.
    Transform(Common),
    /// Channel robustness against MIO.
    ChannelRobustness(Common),
    /// Smoothed channel robustness over a grid of radii.
    SmoothChannelRobustness(Common),
    /// Diamond distance between two channels.
    Diamond(Common),
    /// Max-relative divergence from a channel to MIO.
    Divergence(Common),
    /// Mixing-deviation bounds over a (p, n) grid.
    ErasureSweep(Common),
    /// Lower and upper resource-cost bounds over copy numbers.
    CostBounds(Common),
    /// Bounds on the cost of destroying a channel's resource.
    DestructionBounds(Common),
    /// One-shot message bound and optional see-saw experiment.
    CapacityBound(Common),
    /// See-saw success probability for a fixed number of messages.
    Seesaw(Common),
    /// Quantifier axiom suite.
    Axioms(Common),
}

impl Op {
    fn parts(&self) -> (&'static str, &Common) {
        match self {
            Op::Robustness(c) => ("robustness", c),
            Op::StdRobustness(c) => ("std-robustness", c),
            Op::Geometric(c) => ("geometric", c),
            Op::Transform(c) => ("transform", c),
            Op::ChannelRobustness(c) => ("channel-robustness", c),
            Op::SmoothChannelRobustness(c) => ("smooth-channel-robustness", c),
            Op::Diamond(c) => ("diamond", c),
            Op::Divergence(c) => ("divergence", c),
            Op::ErasureSweep(c) => ("erasure-sweep", c),
            Op::CostBounds(c) => ("cost-bounds", c),
            Op::DestructionBounds(c) => ("destruction-bounds", c),
            Op::CapacityBound(c) => ("capacity-bound", c),
            Op::Seesaw(c) => ("seesaw", c),
            Op::Axioms(c) => ("axioms", c),
        }
    }
}

#[derive(Args)]
struct Common {
    /// Problem file (JSON).
    #[arg(long)]
    input: PathBuf,
    /// Report path; stdout when absent.
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
    /// Overrides the file's seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Solver tolerance; overrides the file and RNO_TOL.
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    max_iter: Option<usize>,
    /// Restarts for smoothing searches and the see-saw.
    #[arg(long)]
    restarts: Option<usize>,
    /// Use the overlap form of the transformation condition.
    #[arg(long)]
    tight_mode: bool,
    /// Refuse to overwrite an existing output file.
    #[arg(long)]
    no_clobber: bool,
    /// Record wall time in the report (reports are then not reproducible byte for byte).
    #[arg(long)]
    timing: bool,
}

fn env_tolerance() -> Result<Option<f64>, CliError> {
    match std::env::var("RNO_TOL") {
        Ok(s) => s
            .trim()
            .parse::<f64>()
            .map(Some)
            .map_err(|e| CliError::validation("RNO_TOL", format!("{s:?}: {e}"))),
        Err(_) => Ok(None),
    }
}

fn run(op: &str, c: &Common) -> Result<(), CliError> {
    let pf = parse_problem_file(&c.input)?;
    let named = pf.command().name();
    if named != op {
        return Err(CliError::Validation {
            object: "command".into(),
            message: format!("file requests {named}, invoked as {op}"),
        });
    }
    let opts = RunOptions {
        seed: c.seed,
        tol: c.tol,
        env_tol: env_tolerance()?,
        max_iter: c.max_iter,
        restarts: c.restarts,
        tight_mode: c.tight_mode,
        timing: c.timing,
    };
    let report = run_audited(&pf, &opts)?;
    match &c.output {
        Some(path) => emit_report(&report, c.format, path, c.no_clobber),
        None => {
            let text = render(&report, c.format)?;
            std::io::stdout().write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (op, common) = cli.op.parts();
    match run(op, common) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("rno: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
