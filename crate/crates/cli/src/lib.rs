//! Batch front end for `rno-core`: validated JSON problem files in,
//! deterministic JSON or CSV reports out.

pub mod error;
pub mod problem;
pub mod report;
pub mod run;

pub use error::CliError;
pub use problem::{
    parse_problem_bytes, parse_problem_file, ChoiSpec, Command, KrausSpec, ObjectSpec, ProblemFile, RawProblemFile, StateSpec,
};
pub use report::{emit_report, render, Format};
pub use run::{run_audited, run_command, Report, RunOptions};
