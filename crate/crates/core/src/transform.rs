//! Pure-to-mixed state transformations by a free measure-and-prepare channel
//! `Λ(ρ) = tr(ψρ)·σ + (1 − tr(ψρ))·δ`, where `δ` is the free mixer attaining the
//! standard robustness of `σ`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::conic::{Residuals, SolverConfig};
use crate::error::{Error, Result};
use crate::freesets::FreeSetModel;
use crate::qmath::{
    haar_unitary, hermitian_part, identity, kron, min_eigenvalue, partial_transpose_matrix, random_pure_state,
    random_state, rng_from_seed, CMatrix, CVector, Channel, ChoiNormalization, DensityMatrix,
};
use crate::static_measures::{geometric_measure_pure, standard_robustness};

/// Which inequality decides feasibility.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConditionMode {
    /// `1/(1+𝓡_G(σ)) + G(ψ) ≥ 1`.
    #[default]
    Stated,
    /// `max_{free τ} tr(ψτ) = (1 − G(ψ))² ≤ 1/(1+𝓡_G(σ))`, the overlap inequality
    /// the construction actually needs; implied by the stated form.
    Tight,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Infeasibility {
    /// The condition evaluates below one.
    ConditionFails,
    /// `σ` has infinite standard robustness, so no free mixer exists.
    Vacuous,
}

#[derive(Debug, Clone)]
pub struct TransformPlan {
    pub model: FreeSetModel,
    pub psi: DensityMatrix,
    pub sigma: DensityMatrix,
    pub mode: ConditionMode,
    /// Standard robustness of `σ` (may be `+∞`).
    pub robustness_sigma: f64,
    pub geometric_psi: f64,
    /// `1/(1+𝓡_G(σ)) + G(ψ)`.
    pub condition_lhs: f64,
    /// `(1 − G(ψ))²`, the largest overlap of `ψ` with a free state.
    pub max_free_overlap: f64,
    /// Free mixer `δ` from the robustness program.
    pub mixer: Option<DensityMatrix>,
    pub feasible: bool,
    pub reason: Option<Infeasibility>,
    pub residuals: Residuals,
}

pub const CONDITION_TOL: f64 = 1e-9;

/// Evaluates the transformation condition for `ψ → σ`.
pub fn check_condition(
    m: &FreeSetModel,
    psi: &DensityMatrix,
    sigma: &DensityMatrix,
    mode: ConditionMode,
    cfg: &SolverConfig,
) -> Result<TransformPlan> {
    if psi.dim() != sigma.dim() {
        return Err(Error::InvalidShape("ψ and σ live on different spaces".into()));
    }
    let g = geometric_measure_pure(m, psi)?;
    let rob = standard_robustness(m, sigma, cfg)?;
    let inv = if rob.value.is_finite() { 1.0 / (1.0 + rob.value) } else { 0.0 };
    let lhs = inv + g;
    let overlap = (1.0 - g).powi(2);
    let (feasible, reason) = if !rob.value.is_finite() {
        (false, Some(Infeasibility::Vacuous))
    } else {
        let ok = match mode {
            ConditionMode::Stated => lhs >= 1.0 - CONDITION_TOL,
            ConditionMode::Tight => overlap <= inv + CONDITION_TOL,
        };
        (ok, (!ok).then_some(Infeasibility::ConditionFails))
    };
    Ok(TransformPlan {
        model: *m,
        psi: psi.clone(),
        sigma: sigma.clone(),
        mode,
        robustness_sigma: rob.value,
        geometric_psi: g,
        condition_lhs: lhs,
        max_free_overlap: overlap,
        mixer: rob.mixer,
        feasible,
        reason,
        residuals: rob.residuals,
    })
}

/// Choi matrix (trace-d convention) of `ρ ↦ tr(Pρ)·a + tr((I−P)ρ)·b`.
pub(crate) fn two_outcome_choi(proj: &CMatrix, a: &CMatrix, b: &CMatrix) -> CMatrix {
    let d = proj.nrows();
    let comp = identity(d) - proj;
    kron(&proj.transpose(), a) + kron(&comp.transpose(), b)
}

/// The channel `Λ(ρ) = tr(ψρ)σ + (1 − tr(ψρ))δ` of a feasible plan.
pub fn build_transform_channel(plan: &TransformPlan) -> Result<Channel> {
    if !plan.feasible {
        return Err(Error::ConditionNotMet(match plan.reason {
            Some(Infeasibility::Vacuous) => "σ admits no free mixer".into(),
            _ => format!("condition value {:.6} is below one", plan.condition_lhs),
        }));
    }
    let delta = plan
        .mixer
        .as_ref()
        .ok_or_else(|| Error::ConditionNotMet("plan carries no mixer".into()))?;
    let psi = plan.psi.dominant_vector();
    let proj = &psi * psi.adjoint();
    let choi = two_outcome_choi(&proj, plan.sigma.matrix(), delta.matrix());
    Channel::from_choi(
        plan.psi.dims().to_vec(),
        plan.sigma.dims().to_vec(),
        hermitian_part(&choi),
        ChoiNormalization::TraceDin,
    )
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransformVerification {
    pub samples: usize,
    /// Largest nonfreeness among outputs (off-diagonal modulus or negative
    /// partial-transpose eigenvalue, as a positive number).
    pub max_violation: f64,
    /// Smallest eigenvalue of the partial transpose over all outputs (bipartite model).
    pub min_pt_eigenvalue: Option<f64>,
    pub all_free: bool,
    /// Whether the check covers every free input (true for incoherence, where
    /// basis states span the free set).
    pub exhaustive: bool,
}

fn output_violation(m: &FreeSetModel, out: &CMatrix) -> f64 {
    match *m {
        FreeSetModel::Incoherent { d } => {
            let mut w = 0.0f64;
            for i in 0..d {
                for j in 0..d {
                    if i != j {
                        w = w.max(out[(i, j)].norm());
                    }
                }
            }
            w
        }
        FreeSetModel::SeparablePpt { d_a, d_b } => {
            let pt = partial_transpose_matrix(out, &[d_a, d_b], 1).expect("model dims");
            -min_eigenvalue(&hermitian_part(&pt))
        }
    }
}

fn product_pure(a: &CVector, b: &CVector) -> CMatrix {
    let v = a.kronecker(b);
    let n = v.norm();
    let v = v / crate::qmath::c64(n, 0.0);
    &v * v.adjoint()
}

/// Applies `ch` to `samples` random free inputs and checks that every output is free.
///
/// For incoherence the basis states are also tested, which covers the whole
/// free set by linearity. For the bipartite model, a local search over
/// product pure inputs hunts for the worst output in addition to the samples.
pub fn verify_transform(m: &FreeSetModel, ch: &Channel, samples: usize, seed: u64) -> Result<TransformVerification> {
    if ch.in_dim() != m.dim() || ch.out_dim() != m.dim() {
        return Err(Error::InvalidShape(format!(
            "channel {}→{} for a model of dimension {}",
            ch.in_dim(),
            ch.out_dim(),
            m.dim()
        )));
    }
    let mut rng = rng_from_seed(seed);
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..samples {
        let rho = m.sample_free_state(&mut rng);
        worst = worst.max(output_violation(m, &ch.apply(rho.matrix())));
    }
    let exhaustive = match *m {
        FreeSetModel::Incoherent { d } => {
            for i in 0..d {
                let e = DensityMatrix::basis_state(d, i);
                worst = worst.max(output_violation(m, &ch.apply(e.matrix())));
            }
            true
        }
        FreeSetModel::SeparablePpt { d_a, d_b } => {
            let mut a = random_pure_state(&mut rng, &[d_a]).dominant_vector();
            let mut b = random_pure_state(&mut rng, &[d_b]).dominant_vector();
            let mut best = output_violation(m, &ch.apply(&product_pure(&a, &b)));
            let mut step = 0.5;
            for _ in 0..300 {
                let pa = perturb(&mut rng, &a, step);
                let pb = perturb(&mut rng, &b, step);
                let v = output_violation(m, &ch.apply(&product_pure(&pa, &pb)));
                if v > best {
                    best = v;
                    a = pa;
                    b = pb;
                } else {
                    step = (step * 0.97).max(1e-4);
                }
            }
            worst = worst.max(best);
            false
        }
    };
    let min_pt = match *m {
        FreeSetModel::SeparablePpt { .. } => Some(-worst),
        FreeSetModel::Incoherent { .. } => None,
    };
    let max_violation = worst.max(0.0);
    Ok(TransformVerification {
        samples,
        max_violation,
        min_pt_eigenvalue: min_pt,
        all_free: max_violation <= 1e-9,
        exhaustive,
    })
}

fn perturb<R: Rng + ?Sized>(rng: &mut R, v: &CVector, step: f64) -> CVector {
    let d = v.len();
    let g = random_pure_state(rng, &[d]).dominant_vector();
    let w = v + g * crate::qmath::c64(step, 0.0);
    let n = w.norm();
    w / crate::qmath::c64(n, 0.0)
}

/// A random `(ψ, σ)` pair with a feasible plan, or `None` after `attempts` misses.
///
/// `σ` mixes a free state with a small amount of a random state so that its
/// robustness stays below the coherence or entanglement of a random pure `ψ`.
pub fn sample_feasible_plan<R: Rng + ?Sized>(
    rng: &mut R,
    m: &FreeSetModel,
    attempts: usize,
    cfg: &SolverConfig,
) -> Result<Option<TransformPlan>> {
    let dims = m.dims();
    for _ in 0..attempts {
        let psi = random_pure_state(rng, &dims);
        let q = rng.random::<f64>() * 0.3;
        let free = m.sample_free_state(rng);
        let noise = if rng.random_bool(0.5) {
            random_state(rng, &dims)
        } else {
            // a local-unitary rotated maximal resource state
            let base = m.max_resource_state(1)?;
            let u = match *m {
                FreeSetModel::Incoherent { d } => crate::freesets::incoherent_unitary(rng, d),
                FreeSetModel::SeparablePpt { d_a, d_b } => kron(&haar_unitary(rng, d_a), &haar_unitary(rng, d_b)),
            };
            DensityMatrix::new(&u * base.matrix() * u.adjoint(), dims.clone())?
        };
        let sigma = noise.mix(&free, q)?;
        let plan = check_condition(m, &psi, &sigma, ConditionMode::Stated, cfg)?;
        if plan.feasible {
            return Ok(Some(plan));
        }
    }
    Ok(None)
}

/// A transformation channel built from a random feasible plan.
pub fn sample_feasible_channel<R: Rng + ?Sized>(rng: &mut R, m: &FreeSetModel, cfg: &SolverConfig) -> Result<Option<Channel>> {
    match sample_feasible_plan(rng, m, 10, cfg)? {
        Some(plan) => Ok(Some(build_transform_channel(&plan)?)),
        None => Ok(None),
    }
}

/// Largest overlap `tr(ψτ)` found over sampled free states `τ`.
pub fn sampled_free_overlap<R: Rng + ?Sized>(rng: &mut R, m: &FreeSetModel, psi: &DensityMatrix, samples: usize) -> f64 {
    (0..samples)
        .map(|_| m.sample_free_state(rng).expectation(psi.matrix()))
        .fold(0.0, f64::max)
}
