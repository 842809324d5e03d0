//! Robustness quantifiers of states, their smoothed and logarithmic variants,
//! the geometric measure of pure states, and an empirical axiom harness.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::conic::{solve_checked, Equality, Expr, Residuals, SdpProblem, SdpStatus, Sense, SolverConfig};
use crate::error::{Error, Result};
use crate::freesets::{FreeSetModel, Membership};
use crate::qmath::{
    c64, hermitian_part, identity, min_eigenvalue, partial_trace_matrix, partial_transpose_matrix, random_pure_state,
    random_state, rng_from_seed, trace, CMatrix, Channel, DensityMatrix,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RobustnessKind {
    /// Arbitrary mixer states.
    Generalized,
    /// Mixers restricted to free states.
    Standard,
}

/// Optimal value of a robustness program together with its witnesses.
#[derive(Debug, Clone)]
pub struct RobustnessResult {
    /// `+∞` when no admissible mixer exists.
    pub value: f64,
    /// Dual objective; a lower bound on the true value up to the dual residual.
    pub dual_bound: f64,
    /// Optimal mixer `σ`; `None` when the value is infinite.
    pub mixer: Option<DensityMatrix>,
    /// `(ρ + value·σ)/(1 + value)`.
    pub free_witness: Option<DensityMatrix>,
    pub status: SdpStatus,
    pub residuals: Residuals,
    pub iterations: usize,
}

impl RobustnessResult {
    pub fn is_finite(&self) -> bool {
        self.value.is_finite()
    }
}

fn robustness_problem(m: &FreeSetModel, rho: &DensityMatrix, kind: RobustnessKind) -> Result<SdpProblem> {
    m.check_state(rho)?;
    let d = m.dim();
    let mut p = SdpProblem::new();
    let t = p.add_block("T", d, true);
    let te = p.var(t);
    m.free_cone_constraints(&te)?.add_to(&mut p);
    let diff = te.clone().minus(&Expr::constant(rho.matrix().clone()));
    match kind {
        RobustnessKind::Generalized => p.add_psd(diff),
        RobustnessKind::Standard => m.free_cone_constraints(&diff)?.add_to(&mut p),
    }
    p.set_objective(Sense::Minimize, te.trace().plus_const(&(-identity(1))));
    Ok(p)
}

/// Projects `t` onto the structural part of the free cone (Hermitian, and
/// diagonal for incoherence).
fn clean(m: &FreeSetModel, t: &CMatrix) -> CMatrix {
    let mut t = hermitian_part(t);
    if let FreeSetModel::Incoherent { .. } = m {
        let d = t.nrows();
        for i in 0..d {
            for j in 0..d {
                if i != j {
                    t[(i, j)] = c64(0.0, 0.0);
                }
            }
        }
    }
    t
}

/// Smallest eigenvalue over the cone conditions of `x ∈ cone(𝓕)`.
fn cone_margin(m: &FreeSetModel, x: &CMatrix) -> f64 {
    let mut worst = min_eigenvalue(&hermitian_part(x));
    if let FreeSetModel::SeparablePpt { d_a, d_b } = *m {
        let pt = partial_transpose_matrix(x, &[d_a, d_b], 1).expect("model dims");
        worst = worst.min(min_eigenvalue(&hermitian_part(&pt)));
    }
    worst
}

/// Shifts `T` by a multiple of the identity so that every constraint of the
/// robustness program holds exactly; the identity lies in the interior of each cone.
fn polish(m: &FreeSetModel, rho: &DensityMatrix, t: &CMatrix, kind: RobustnessKind) -> CMatrix {
    let t = clean(m, t);
    let diff = &t - rho.matrix();
    let diff_margin = match kind {
        RobustnessKind::Generalized => min_eigenvalue(&hermitian_part(&diff)),
        RobustnessKind::Standard => cone_margin(m, &clean(m, &diff)),
    };
    let margin = cone_margin(m, &t).min(diff_margin);
    let shift = if margin < 0.0 { -margin * (1.0 + 1e-9) + 1e-15 } else { 0.0 };
    t + identity(m.dim()) * c64(shift, 0.0)
}

fn witnesses(rho: &DensityMatrix, t: &CMatrix) -> Result<(f64, DensityMatrix, DensityMatrix)> {
    let dims = rho.dims().to_vec();
    let s = (trace(t).re - 1.0).max(0.0);
    let mixer = if s > 1e-9 {
        DensityMatrix::normalized(hermitian_part(&(t - rho.matrix())), dims.clone())?
    } else {
        DensityMatrix::maximally_mixed(dims.clone())
    };
    let witness = DensityMatrix::normalized(t.clone(), dims)?;
    Ok((s, mixer, witness))
}

/// Robustness `R(ρ) = min{ s : (ρ + sσ)/(1+s) free }` over arbitrary (generalized)
/// or free (standard) mixers `σ`, as the cone program `min tr T − 1` over
/// `T ∈ cone(𝓕)`, `T ⪰ ρ` (resp. `T − ρ ∈ cone(𝓕)`).
///
/// The returned value comes from a feasible point shifted into the cones, so it
/// never undercuts the true optimum by more than rounding.
pub fn robustness(m: &FreeSetModel, rho: &DensityMatrix, kind: RobustnessKind, cfg: &SolverConfig) -> Result<RobustnessResult> {
    let p = robustness_problem(m, rho, kind)?;
    let label = match kind {
        RobustnessKind::Generalized => "generalized robustness",
        RobustnessKind::Standard => "standard robustness",
    };
    let sol = solve_checked(label, &p, cfg)?;
    if sol.status == SdpStatus::Infeasible {
        return Ok(RobustnessResult {
            value: f64::INFINITY,
            dual_bound: f64::INFINITY,
            mixer: None,
            free_witness: None,
            status: sol.status,
            residuals: sol.residuals(),
            iterations: sol.iterations,
        });
    }
    let t = polish(m, rho, &sol.blocks[0], kind);
    let (value, mixer, witness) = witnesses(rho, &t)?;
    Ok(RobustnessResult {
        value,
        dual_bound: sol.dual_objective,
        mixer: Some(mixer),
        free_witness: Some(witness),
        status: sol.status,
        residuals: sol.residuals(),
        iterations: sol.iterations,
    })
}

pub fn generalized_robustness(m: &FreeSetModel, rho: &DensityMatrix, cfg: &SolverConfig) -> Result<RobustnessResult> {
    robustness(m, rho, RobustnessKind::Generalized, cfg)
}

pub fn standard_robustness(m: &FreeSetModel, rho: &DensityMatrix, cfg: &SolverConfig) -> Result<RobustnessResult> {
    robustness(m, rho, RobustnessKind::Standard, cfg)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SmoothingVariant {
    /// `R_G^ε`.
    R,
    /// `log₂(1 + R_G^ε)`.
    Lr,
}

#[derive(Debug, Clone)]
pub struct SmoothedRobustness {
    pub epsilon: f64,
    pub value: f64,
    /// The state in the ε-ball attaining the value.
    pub smoothed_state: DensityMatrix,
    pub residuals: Residuals,
}

/// Smoothed generalized robustness `min R_G(ρ̃)` over states with `½‖ρ − ρ̃‖₁ ≤ ε`,
/// solved jointly in `(ρ̃, T)` with the trace ball written as `ρ − ρ̃ = P − N`,
/// `P, N ⪰ 0`, `tr(P + N) ≤ 2ε`.
pub fn smoothed_log_robustness(
    m: &FreeSetModel,
    rho: &DensityMatrix,
    epsilon: f64,
    variant: SmoothingVariant,
    cfg: &SolverConfig,
) -> Result<SmoothedRobustness> {
    if !(0.0..1.0).contains(&epsilon) {
        return Err(Error::InvalidRequest(format!("smoothing radius {epsilon} outside [0, 1)")));
    }
    m.check_state(rho)?;
    let d = m.dim();
    let mut p = SdpProblem::new();
    let r = p.add_block("rho_tilde", d, true);
    let t = p.add_block("T", d, true);
    let pp = p.add_block("P", d, true);
    let nn = p.add_block("N", d, true);
    let (re, te, pe, ne) = (p.var(r), p.var(t), p.var(pp), p.var(nn));
    p.add_psd(re.clone());
    p.add_equality(Equality::scalar(re.trace(), 1.0));
    m.free_cone_constraints(&te)?.add_to(&mut p);
    p.add_psd(te.clone().minus(&re));
    p.add_equality(Equality::all(re.clone().plus(&pe).minus(&ne), rho.matrix().clone()));
    p.add_psd(pe.clone());
    p.add_psd(ne.clone());
    let budget = CMatrix::from_element(1, 1, c64(2.0 * epsilon, 0.0));
    p.add_nonneg(pe.trace().plus(&ne.trace()).scaled(-1.0).plus_const(&budget));
    p.set_objective(Sense::Minimize, te.trace().plus_const(&(-identity(1))));
    let sol = solve_checked("smoothed robustness", &p, cfg)?.require_optimal()?;
    let value = sol.objective.max(0.0);
    let smoothed_state = DensityMatrix::normalized(psd_part(&sol.blocks[0]), rho.dims().to_vec())?;
    Ok(SmoothedRobustness {
        epsilon,
        value: match variant {
            SmoothingVariant::R => value,
            SmoothingVariant::Lr => (1.0 + value).log2(),
        },
        smoothed_state,
        residuals: sol.residuals(),
    })
}

fn psd_part(m: &CMatrix) -> CMatrix {
    crate::qmath::psd_projection(&hermitian_part(m))
}

/// Smoothed robustness over an increasing ε grid. Each entry is the best value
/// found at that radius or any smaller one (balls are nested, so a smaller
/// radius's optimizer stays admissible).
pub fn smoothed_robustness_sweep(
    m: &FreeSetModel,
    rho: &DensityMatrix,
    epsilons: &[f64],
    variant: SmoothingVariant,
    cfg: &SolverConfig,
) -> Result<Vec<SmoothedRobustness>> {
    if epsilons.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::InvalidRequest("smoothing grid must be nondecreasing".into()));
    }
    let mut out: Vec<SmoothedRobustness> = Vec::with_capacity(epsilons.len());
    for &eps in epsilons {
        let mut cur = smoothed_log_robustness(m, rho, eps, variant, cfg)?;
        if let Some(prev) = out.last() {
            if prev.value < cur.value {
                let residuals = cur.residuals;
                cur = SmoothedRobustness {
                    epsilon: eps,
                    residuals,
                    ..prev.clone()
                };
            }
        }
        out.push(cur);
    }
    Ok(out)
}

/// `1 − max F(ψ, σ)` over free pure `σ`: the largest basis amplitude
/// (incoherent) or the largest Schmidt coefficient (bipartite).
pub fn geometric_measure_pure(m: &FreeSetModel, psi: &DensityMatrix) -> Result<f64> {
    m.check_state(psi)?;
    if !psi.is_pure(1e-9) {
        return Err(Error::InvalidState("geometric measure needs a pure state".into()));
    }
    let overlap_sq = match *m {
        FreeSetModel::Incoherent { d } => (0..d).map(|i| psi.matrix()[(i, i)].re).fold(0.0, f64::max),
        FreeSetModel::SeparablePpt { d_a, d_b } => {
            let reduced = partial_trace_matrix(psi.matrix(), &[d_a, d_b], &[0])?;
            crate::qmath::max_eigenvalue(&hermitian_part(&reduced))
        }
    };
    Ok(1.0 - overlap_sq.clamp(0.0, 1.0).sqrt())
}

/// Maximal violations of the quantifier axioms found by [`quantifier_axiom_suite`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AxiomReport {
    pub model: FreeSetModel,
    pub kind: RobustnessKind,
    pub trials: usize,
    pub seed: u64,
    /// Value on free states.
    pub o1_max_violation: f64,
    /// Increase under a free channel.
    pub o2_max_violation: f64,
    /// Nonfreeness (largest coherence or negative partial-transpose eigenvalue)
    /// of states assigned value zero.
    pub o3_max_violation: f64,
    /// Excess over the convex combination of values.
    pub o4_max_violation: f64,
    pub o3_cases: usize,
    /// Largest residual over every program solved by the suite.
    pub max_residual: f64,
}

impl AxiomReport {
    pub fn max_violation(&self) -> f64 {
        self.o1_max_violation
            .max(self.o2_max_violation)
            .max(self.o3_max_violation)
            .max(self.o4_max_violation)
    }
}

fn nonfreeness(m: &FreeSetModel, rho: &DensityMatrix) -> f64 {
    match *m {
        FreeSetModel::Incoherent { d } => {
            let r = rho.matrix();
            (0..d)
                .flat_map(|i| (0..d).filter(move |&j| j != i).map(move |j| (i, j)))
                .map(|(i, j)| r[(i, j)].norm())
                .fold(0.0, f64::max)
        }
        FreeSetModel::SeparablePpt { d_a, d_b } => {
            let pt = partial_transpose_matrix(rho.matrix(), &[d_a, d_b], 1).expect("model dims");
            (-min_eigenvalue(&hermitian_part(&pt))).max(0.0)
        }
    }
}

/// `max(0, a − b)` with `∞ − ∞ = 0`.
fn excess(a: f64, b: f64) -> f64 {
    if a.is_infinite() && b.is_infinite() {
        0.0
    } else if b.is_infinite() {
        0.0
    } else {
        (a - b).max(0.0)
    }
}

fn sample_test_state<R: Rng + ?Sized>(rng: &mut R, m: &FreeSetModel) -> DensityMatrix {
    let dims = m.dims();
    match rng.random_range(0..3) {
        0 => random_pure_state(rng, &dims),
        1 => random_state(rng, &dims),
        _ => {
            let q: f64 = rng.random();
            let free = m.sample_free_state(rng);
            random_pure_state(rng, &dims).mix(&free, q).expect("same dims")
        }
    }
}

/// A channel known to be free: sampled from the model's free-channel family,
/// or, for the bipartite model, a transformation channel whose freeness follows
/// from the transformation condition.
fn sample_certified_free_channel<R: Rng + ?Sized>(rng: &mut R, m: &FreeSetModel, cfg: &SolverConfig) -> Result<Channel> {
    if let FreeSetModel::SeparablePpt { .. } = m {
        if rng.random_bool(0.3) {
            if let Some(ch) = crate::transform::sample_feasible_channel(rng, m, cfg)? {
                return Ok(ch);
            }
        }
    }
    Ok(m.sample_free_channel(rng))
}

/// Empirical check of the quantifier axioms: zero on free states (O1),
/// monotonicity under free channels (O2), faithfulness (O3) and convexity (O4).
pub fn quantifier_axiom_suite(
    m: &FreeSetModel,
    kind: RobustnessKind,
    trials: usize,
    seed: u64,
    cfg: &SolverConfig,
) -> Result<AxiomReport> {
    let mut rng = rng_from_seed(seed);
    let mut rep = AxiomReport {
        model: *m,
        kind,
        trials,
        seed,
        o1_max_violation: 0.0,
        o2_max_violation: 0.0,
        o3_max_violation: 0.0,
        o4_max_violation: 0.0,
        o3_cases: 0,
        max_residual: 0.0,
    };
    let weights = [0.25, 0.5, 0.75];
    let eval = |rho: &DensityMatrix, rep: &mut AxiomReport| -> Result<f64> {
        let r = robustness(m, rho, kind, cfg)?;
        rep.max_residual = rep.max_residual.max(r.residuals.max());
        Ok(r.value)
    };
    for trial in 0..trials {
        let tau = m.sample_free_state(&mut rng);
        let v = eval(&tau, &mut rep)?;
        rep.o1_max_violation = rep.o1_max_violation.max(v.abs());

        let rho = sample_test_state(&mut rng, m);
        let r_rho = eval(&rho, &mut rep)?;
        if m.is_free_state(&rho, 1e-9)? == Membership::NotFree {
            rep.o3_cases += 1;
            if r_rho <= 1e-8 {
                rep.o3_max_violation = rep.o3_max_violation.max(nonfreeness(m, &rho));
            }
        }

        let ch = sample_certified_free_channel(&mut rng, m, cfg)?;
        let out = DensityMatrix::new(ch.apply(rho.matrix()), rho.dims().to_vec())?;
        let r_out = eval(&out, &mut rep)?;
        rep.o2_max_violation = rep.o2_max_violation.max(excess(r_out, r_rho));

        let rho2 = sample_test_state(&mut rng, m);
        let r_rho2 = eval(&rho2, &mut rep)?;
        let w = weights[trial % weights.len()];
        let mix = rho.mix(&rho2, w)?;
        let r_mix = eval(&mix, &mut rep)?;
        let bound = if r_rho.is_infinite() || r_rho2.is_infinite() {
            f64::INFINITY
        } else {
            w * r_rho + (1.0 - w) * r_rho2
        };
        rep.o4_max_violation = rep.o4_max_violation.max(excess(r_mix, bound));
    }
    Ok(rep)
}
