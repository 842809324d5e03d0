//! Dispatch of a validated problem to the library.

use std::collections::BTreeMap;
use std::time::Instant;

use rno_core::asymptotic::cost_bounds;
use rno_core::comms::{capacity_bound, capacity_experiment, seesaw_success_probability, SeesawConfig};
use rno_core::conic::{start_recording, take_records, Residuals, SolverConfig};
use rno_core::dynamic_measures::{
    channel_divergence_to_free, channel_rno_robustness, diamond_distance, smoothed_channel_robustness_sweep, SmoothingConfig,
};
use rno_core::erasure::{destruction_cost_bounds, mixing_deviation_bound, sample_mixing_pair, DIAMOND_MAX_N};
use rno_core::qmath::{max_abs, rng_from_seed};
use rno_core::static_measures::{
    geometric_measure_pure, quantifier_axiom_suite, robustness, RobustnessKind, RobustnessResult,
};
use rno_core::transform::{build_transform_channel, check_condition, verify_transform, ConditionMode};
use rno_core::ChoiNormalization;
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use crate::error::CliError;
use crate::problem::{from_matrix, Command, ProblemFile};

/// Built-in solver tolerance when neither a flag, the file nor `RNO_TOL` sets one.
pub const DEFAULT_TOLERANCE: f64 = 1e-7;

/// Command-line overrides. Precedence for the tolerance is flag, then file,
/// then the environment, then [`DEFAULT_TOLERANCE`].
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunOptions {
    pub seed: Option<u64>,
    pub tol: Option<f64>,
    pub env_tol: Option<f64>,
    pub max_iter: Option<usize>,
    pub restarts: Option<usize>,
    pub tight_mode: bool,
    /// Records wall time, which makes reports differ between runs.
    pub timing: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub command: String,
    pub format_version: u32,
    pub input_sha256: String,
    pub object_sha256: BTreeMap<String, String>,
    pub seed: u64,
    pub tolerance: f64,
    pub max_iter: usize,
    /// Largest solver residual behind any number in the report.
    pub max_residual: f64,
    pub result: Value,
    /// Grid cells for sweep commands; one CSV row each.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub rows: Vec<Map<String, Value>>,
    /// Number of solves re-certified by the audit in [`run_audited`].
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub audited_solves: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wall_time_seconds: Option<f64>,
}

/// Finite numbers as JSON numbers, anything else as `null`.
fn num(x: f64) -> Value {
    serde_json::Number::from_f64(x).map(Value::Number).unwrap_or(Value::Null)
}

fn to_value<T: Serialize>(x: &T) -> Value {
    serde_json::to_value(x).expect("report types serialize")
}

fn to_row(v: Value) -> Map<String, Value> {
    match v {
        Value::Object(m) => m,
        other => {
            let mut m = Map::new();
            m.insert("value".into(), other);
            m
        }
    }
}

fn residuals(r: &Residuals) -> Value {
    json!({ "primal": num(r.primal_res), "dual": num(r.dual_res), "gap": num(r.gap) })
}

fn robustness_value(r: &RobustnessResult) -> Value {
    json!({
        "value": num(r.value),
        "dual_bound": num(r.dual_bound),
        "status": to_value(&r.status),
        "iterations": r.iterations,
        "residuals": residuals(&r.residuals),
        "mixer": r.mixer.as_ref().map(|m| to_value(&from_matrix(m.matrix()))),
    })
}

struct Outcome {
    result: Value,
    rows: Vec<Map<String, Value>>,
    max_residual: f64,
}

impl Outcome {
    fn single(result: Value, max_residual: f64) -> Self {
        Outcome {
            result,
            rows: Vec::new(),
            max_residual,
        }
    }
}

pub fn resolve_tolerance(pf: &ProblemFile, opts: &RunOptions) -> Result<f64, CliError> {
    let tol = opts.tol.or(pf.raw.tolerances.solver).or(opts.env_tol).unwrap_or(DEFAULT_TOLERANCE);
    if !(tol.is_finite() && tol > 0.0) {
        return Err(CliError::validation("tolerance", format!("{tol} must be positive")));
    }
    Ok(tol)
}

/// Runs the file's command. Identical inputs and options give identical reports
/// unless `timing` is set.
pub fn run_command(pf: &ProblemFile, opts: &RunOptions) -> Result<Report, CliError> {
    let start = Instant::now();
    let tolerance = resolve_tolerance(pf, opts)?;
    let mut cfg = SolverConfig::default().with_tolerance(tolerance);
    if let Some(n) = opts.max_iter.or(pf.raw.tolerances.max_iter) {
        cfg = cfg.with_max_iter(n);
    }
    let seed = opts.seed.unwrap_or(pf.raw.seed);
    cfg.seed = seed;
    let mut smoothing = SmoothingConfig {
        seed,
        ..SmoothingConfig::default()
    };
    let mut seesaw = SeesawConfig {
        seed,
        ..SeesawConfig::default()
    };
    if let Some(r) = opts.restarts {
        if r == 0 {
            return Err(CliError::validation("restarts", "must be positive"));
        }
        smoothing.restarts = r;
        seesaw.restarts = r;
    }
    let out = dispatch(pf, opts, &cfg, &smoothing, &mut seesaw, seed)?;
    Ok(Report {
        command: pf.command().name().to_string(),
        format_version: crate::problem::FORMAT_VERSION,
        input_sha256: pf.file_sha256.clone(),
        object_sha256: pf.object_sha256.clone(),
        seed,
        tolerance,
        max_iter: cfg.max_iter,
        max_residual: out.max_residual,
        result: out.result,
        rows: out.rows,
        audited_solves: None,
        wall_time_seconds: opts.timing.then(|| start.elapsed().as_secs_f64()),
    })
}

/// [`run_command`] under the process-wide solve recorder: `max_residual` also
/// covers the independently recomputed residuals of every solve. Meant for one
/// command per process, since the recorder is global.
pub fn run_audited(pf: &ProblemFile, opts: &RunOptions) -> Result<Report, CliError> {
    start_recording();
    let report = run_command(pf, opts);
    let records = take_records();
    let mut report = report?;
    let worst = records.iter().map(|r| r.recomputed.max().max(r.reported.max())).fold(0.0, f64::max);
    report.max_residual = report.max_residual.max(worst);
    report.audited_solves = Some(records.len());
    Ok(report)
}

fn dispatch(
    pf: &ProblemFile,
    opts: &RunOptions,
    cfg: &SolverConfig,
    smoothing: &SmoothingConfig,
    seesaw: &mut SeesawConfig,
    seed: u64,
) -> Result<Outcome, CliError> {
    let model = || pf.model().expect("validated");
    Ok(match pf.command() {
        Command::Robustness { state } | Command::StdRobustness { state } => {
            let kind = if matches!(pf.command(), Command::Robustness { .. }) {
                RobustnessKind::Generalized
            } else {
                RobustnessKind::Standard
            };
            let r = robustness(model(), pf.state(state), kind, cfg)?;
            Outcome::single(robustness_value(&r), r.residuals.max())
        }
        Command::Geometric { state } => {
            let g = geometric_measure_pure(model(), pf.state(state))?;
            Outcome::single(json!({ "value": num(g) }), 0.0)
        }
        Command::Transform { psi, sigma, tight, samples } => {
            let mode = if *tight || opts.tight_mode {
                ConditionMode::Tight
            } else {
                ConditionMode::Stated
            };
            let (psi, sigma) = (pf.state(psi), pf.state(sigma));
            let plan = check_condition(model(), psi, sigma, mode, cfg)?;
            let ch = build_transform_channel(&plan)?;
            let reproduction = max_abs(&(ch.apply(psi.matrix()) - sigma.matrix()));
            let (tp, cp) = ch.cptp_residuals();
            let v = verify_transform(model(), &ch, *samples, seed)?;
            let result = json!({
                "mode": to_value(&plan.mode),
                "robustness_sigma": num(plan.robustness_sigma),
                "geometric_psi": num(plan.geometric_psi),
                "condition_lhs": num(plan.condition_lhs),
                "max_free_overlap": num(plan.max_free_overlap),
                "feasible": plan.feasible,
                "residuals": residuals(&plan.residuals),
                "reproduction_error": num(reproduction),
                "trace_preservation_residual": num(tp),
                "positivity_residual": num(cp),
                "verification": to_value(&v),
                "choi": to_value(&from_matrix(&ch.choi(ChoiNormalization::TraceDin))),
            });
            Outcome::single(result, plan.residuals.max())
        }
        Command::ChannelRobustness { channel } => {
            let r = channel_rno_robustness(pf.channel(channel), cfg)?;
            let result = json!({
                "value": num(r.p_star),
                "sdp_value": num(r.sdp_value),
                "dual_bound": num(r.dual_bound),
                "residuals": residuals(&r.residuals),
                "companion_choi": r.companion.as_ref().map(|c| to_value(&from_matrix(&c.choi(ChoiNormalization::TraceDin)))),
            });
            Outcome::single(result, r.residuals.max())
        }
        Command::SmoothChannelRobustness { channel, epsilons } => {
            let sweep = smoothed_channel_robustness_sweep(pf.channel(channel), epsilons, smoothing, cfg)?;
            let rows: Vec<_> = sweep
                .iter()
                .map(|s| {
                    to_row(json!({
                        "epsilon": num(s.epsilon),
                        "upper_estimate": num(s.upper_estimate),
                        "witness_distance": num(s.witness_distance),
                        "is_upper_estimate": s.is_upper_estimate,
                        "max_residual": num(s.max_residual),
                    }))
                })
                .collect();
            let worst = sweep.iter().map(|s| s.max_residual).fold(0.0, f64::max);
            Outcome {
                result: json!({ "points": rows.len(), "restarts": smoothing.restarts, "refinements": smoothing.refinements }),
                rows,
                max_residual: worst,
            }
        }
        Command::Diamond { first, second } => {
            let r = diamond_distance(pf.channel(first), pf.channel(second), cfg)?;
            Outcome::single(to_value(&r), r.residuals.max())
        }
        Command::Divergence { channel } => {
            let r = channel_divergence_to_free(pf.channel(channel), cfg)?;
            Outcome::single(to_value(&r), r.residuals.max())
        }
        Command::ErasureSweep {
            ps,
            ns,
            pairs,
            d,
            epsilon,
            diamond_max_n,
        } => {
            let mut rng = rng_from_seed(seed);
            let mut rows = Vec::new();
            let mut chain_holds = true;
            for &p in ps {
                for &n in ns {
                    for pair in 0..*pairs {
                        let (psi, phi) = sample_mixing_pair(&mut rng, *d, p)?;
                        let diamond = n <= (*diamond_max_n).min(DIAMOND_MAX_N);
                        let r = mixing_deviation_bound(&psi, &phi, p, n, *epsilon, diamond, cfg)?;
                        chain_holds &= r.chain_holds;
                        let mut row = to_row(to_value(&r));
                        row.insert("pair".into(), json!(pair));
                        rows.push(row);
                    }
                }
            }
            Outcome {
                result: json!({ "cells": rows.len(), "chain_holds": chain_holds, "d": d }),
                rows,
                max_residual: 0.0,
            }
        }
        Command::CostBounds { state, ns, epsilon } => {
            let reports = cost_bounds(model(), pf.state(state), ns, *epsilon, cfg)?;
            let rows: Vec<_> = reports.iter().map(|r| to_row(to_value(r))).collect();
            Outcome {
                result: json!({ "points": rows.len(), "epsilon": num(*epsilon) }),
                rows,
                max_residual: 0.0,
            }
        }
        Command::DestructionBounds { channel, epsilon, eta } => {
            let r = destruction_cost_bounds(pf.channel(channel), *epsilon, *eta, smoothing, cfg)?;
            Outcome::single(to_value(&r), 0.0)
        }
        Command::CapacityBound {
            channel,
            theta,
            delta,
            max_messages,
        } => {
            let ch = pf.channel(channel);
            let r = match max_messages {
                Some(m) => capacity_experiment(ch, *theta, *delta, *m, seesaw, smoothing, cfg)?,
                None => capacity_bound(ch, *theta, *delta, smoothing, cfg)?,
            };
            let rows = r
                .achieved_f
                .iter()
                .map(|&(m, f)| to_row(json!({ "messages": m, "f_hat": num(f) })))
                .collect();
            Outcome {
                result: to_value(&r),
                rows,
                max_residual: 0.0,
            }
        }
        Command::Seesaw {
            channel,
            messages,
            ancilla_dim,
            rounds,
        } => {
            if let Some(r) = rounds {
                seesaw.rounds = *r;
            }
            let r = seesaw_success_probability(pf.channel(channel), *messages, *ancilla_dim, seesaw, cfg)?;
            let rows = r
                .trajectories
                .iter()
                .enumerate()
                .flat_map(|(restart, t)| {
                    t.iter()
                        .enumerate()
                        .map(move |(step, &f)| to_row(json!({ "restart": restart, "step": step, "objective": num(f) })))
                })
                .collect();
            let result = json!({
                "f_hat": num(r.f_hat),
                "messages": messages,
                "ancilla_dim": ancilla_dim,
                "max_decrease": num(r.max_decrease),
                "rejected_steps": r.rejected_steps,
                "restarts": seesaw.restarts,
                "rounds": seesaw.rounds,
            });
            Outcome {
                result,
                rows,
                max_residual: 0.0,
            }
        }
        Command::Axioms { kind, trials } => {
            let r = quantifier_axiom_suite(model(), *kind, *trials, seed, cfg)?;
            let mut v = to_value(&r);
            if let Value::Object(m) = &mut v {
                m.insert("max_violation".into(), num(r.max_violation()));
            }
            Outcome::single(v, r.max_residual)
        }
    })
}
