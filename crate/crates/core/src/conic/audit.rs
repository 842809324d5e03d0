//! Checked solving: every solve is re-certified by [`check_kkt`] and, when a
//! recorder is active, logged for later inspection.

use std::sync::Mutex;

use super::kkt::check_kkt;
use super::problem::SdpProblem;
use super::solver::{solve_sdp, Residuals, SdpSolution, SdpStatus, SolverConfig};
use crate::error::{Error, Result};

/// One logged solve.
#[derive(Debug, Clone, PartialEq)]
pub struct SolveRecord {
    pub label: String,
    pub status: SdpStatus,
    pub reported: Residuals,
    pub recomputed: Residuals,
    pub iterations: usize,
}

static RECORDER: Mutex<Option<Vec<SolveRecord>>> = Mutex::new(None);

/// Starts collecting [`SolveRecord`]s from every checked solve in the process.
pub fn start_recording() {
    *RECORDER.lock().unwrap_or_else(|e| e.into_inner()) = Some(Vec::new());
}

/// Stops collecting and returns what was recorded since [`start_recording`].
pub fn take_records() -> Vec<SolveRecord> {
    RECORDER.lock().unwrap_or_else(|e| e.into_inner()).take().unwrap_or_default()
}

/// Largest disagreement tolerated between solver-reported and recomputed residuals.
pub const RESIDUAL_AGREEMENT: f64 = 1e-10;

/// Solves `p`, recomputes its residuals independently and fails if the two
/// disagree or the solver ran out of iterations.
pub fn solve_checked(label: &str, p: &SdpProblem, cfg: &SolverConfig) -> Result<SdpSolution> {
    let s = solve_sdp(p, cfg)?;
    let r = check_kkt(p, &s)?;
    if let Some(log) = RECORDER.lock().unwrap_or_else(|e| e.into_inner()).as_mut() {
        log.push(SolveRecord {
            label: label.to_string(),
            status: s.status,
            reported: s.residuals(),
            recomputed: r,
            iterations: s.iterations,
        });
    }
    let disagreement = (r.primal_res - s.primal_res)
        .abs()
        .max((r.dual_res - s.dual_res).abs())
        .max((r.gap - s.gap).abs());
    if disagreement > RESIDUAL_AGREEMENT {
        return Err(Error::SolverError {
            message: format!("{label}: recomputed residuals differ from reported ones by {disagreement:.3e}"),
            primal_res: r.primal_res,
            dual_res: r.dual_res,
            gap: r.gap,
        });
    }
    match s.status {
        SdpStatus::MaxIter | SdpStatus::Unbounded => Err(Error::SolverError {
            message: format!("{label}: solver finished with status {:?} after {} iterations", s.status, s.iterations),
            primal_res: s.primal_res,
            dual_res: s.dual_res,
            gap: s.gap,
        }),
        _ => Ok(s),
    }
}
