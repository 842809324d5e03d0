//! Finite-copy proxies for the asymptotic resource cost: a smoothed
//! log-robustness lower bound, a standard-robustness upper bound, and the
//! measure-and-prepare channel that realizes the upper bound.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::conic::SolverConfig;
use crate::error::{Error, Result};
use crate::freesets::{FreeSetModel, Membership};
use crate::qmath::{min_eigenvalue, partial_transpose_matrix, permute_subsystems, rng_from_seed, Channel, ChoiNormalization, DensityMatrix};
use crate::static_measures::{smoothed_log_robustness, standard_robustness, SmoothingVariant};
use crate::transform::two_outcome_choi;

/// Largest total dimension of `ρ^{⊗n}` handled here.
pub const MAX_TOTAL_DIM: usize = 16;
/// Largest smoothing radius accepted by the lower bound.
pub const MAX_EPSILON: f64 = 0.2;
/// Slack added before flooring `c⁻¹`, so exact integers are not lost to rounding.
const FLOOR_SLACK: f64 = 1e-9;

/// `ρ^{⊗n}` with the model on `n` copies. Bipartite copies are regrouped from
/// `A₁B₁A₂B₂…` to `(A₁A₂…)(B₁B₂…)`.
pub fn grouped_power(m: &FreeSetModel, rho: &DensityMatrix, n: usize) -> Result<(FreeSetModel, DensityMatrix)> {
    m.check_state(rho)?;
    let mn = m.tensor_power(n)?;
    if mn.dim() > MAX_TOTAL_DIM {
        return Err(Error::TooLarge(format!(
            "{n} copies give dimension {} above {MAX_TOTAL_DIM}",
            mn.dim()
        )));
    }
    let power = rho.tensor_power(n);
    let state = match *m {
        FreeSetModel::Incoherent { .. } => power.with_dims(mn.dims())?,
        FreeSetModel::SeparablePpt { d_a, d_b } => {
            let dims: Vec<usize> = (0..n).flat_map(|_| [d_a, d_b]).collect();
            let perm: Vec<usize> = (0..n).map(|k| 2 * k).chain((0..n).map(|k| 2 * k + 1)).collect();
            let m2 = permute_subsystems(power.matrix(), &dims, &perm)?;
            DensityMatrix::new(m2, mn.dims())?
        }
    };
    Ok((mn, state))
}

fn check_epsilon(epsilon: f64) -> Result<()> {
    if (0.0..=MAX_EPSILON).contains(&epsilon) {
        Ok(())
    } else {
        Err(Error::InvalidRequest(format!("ε = {epsilon} outside [0, {MAX_EPSILON}]")))
    }
}

/// `(1/n)·log₂(1 + R_G^ε(ρ^{⊗n}))`.
pub fn cost_lower_bound(m: &FreeSetModel, rho: &DensityMatrix, n: usize, epsilon: f64, cfg: &SolverConfig) -> Result<f64> {
    check_epsilon(epsilon)?;
    let (mn, state) = grouped_power(m, rho, n)?;
    let lr = smoothed_log_robustness(&mn, &state, epsilon, SmoothingVariant::Lr, cfg)?;
    Ok(lr.value / n as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UpperBound {
    /// `⌊c⁻¹(1/(1+𝓡_G(ρ^{⊗n})))⌋ / n`, or `+∞`.
    pub value: f64,
    pub standard_robustness: f64,
    /// `k_n`, absent when vacuous.
    pub k: Option<usize>,
    /// `1/(1+𝓡_G) − c(k_n)`; negative values mean the floored `k_n` overshoots the overlap budget.
    pub overlap_margin: Option<f64>,
    pub vacuous: bool,
}

/// Upper bound from the standard robustness of `ρ^{⊗n}`.
pub fn cost_upper_bound(m: &FreeSetModel, rho: &DensityMatrix, n: usize, cfg: &SolverConfig) -> Result<UpperBound> {
    let (mn, state) = grouped_power(m, rho, n)?;
    let r = standard_robustness(&mn, &state, cfg)?;
    if !r.value.is_finite() {
        return Ok(UpperBound {
            value: f64::INFINITY,
            standard_robustness: f64::INFINITY,
            k: None,
            overlap_margin: None,
            vacuous: true,
        });
    }
    let y = 1.0 / (1.0 + r.value);
    let k = (m.overlap_bound_inverse(y) + FLOOR_SLACK).floor().max(0.0) as usize;
    let ck = (m.local_dim() as f64).powi(-(k as i32));
    Ok(UpperBound {
        value: k as f64 / n as f64,
        standard_robustness: r.value,
        k: Some(k),
        overlap_margin: Some(y - ck),
        vacuous: false,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostBoundReport {
    pub n: usize,
    pub epsilon: f64,
    pub lower_bound: f64,
    pub upper_bound: f64,
    pub k: Option<usize>,
    pub vacuous: bool,
}

/// Both bounds at every copy number in `ns`.
pub fn cost_bounds(m: &FreeSetModel, rho: &DensityMatrix, ns: &[usize], epsilon: f64, cfg: &SolverConfig) -> Result<Vec<CostBoundReport>> {
    ns.par_iter()
        .map(|&n| {
            let lower = cost_lower_bound(m, rho, n, epsilon, cfg)?;
            let upper = cost_upper_bound(m, rho, n, cfg)?;
            Ok(CostBoundReport {
                n,
                epsilon,
                lower_bound: lower,
                upper_bound: upper.value,
                k: upper.k,
                vacuous: upper.vacuous,
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FreenessCheck {
    /// Membership of outputs is decided exactly.
    Exact,
    /// Only the partial transpose across the `A|B` cut is checked.
    NecessaryOnly,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelVerification {
    /// `max |Λ(ψ₊^{⊗k}) − ρ^{⊗n}|`.
    pub reproduction_error: f64,
    pub samples: usize,
    /// Largest `tr(η ψ₊^{⊗k}) − c(k)` over sampled free `η`.
    pub max_overlap_excess: f64,
    /// Smallest output partial-transpose eigenvalue, or the largest off-diagonal
    /// modulus negated for the incoherent model.
    pub worst_output_margin: f64,
    pub all_outputs_pass: bool,
    pub check: FreenessCheck,
}

#[derive(Debug, Clone)]
pub struct CostChannel {
    pub channel: Channel,
    pub k: usize,
    pub verification: ChannelVerification,
}

/// `Λ_n(X) = tr[X ψ₊^{⊗k}] ρ^{⊗n} + tr[X (I − ψ₊^{⊗k})] π_n`, where `π_n`
/// is the standard-robustness mixer of `ρ^{⊗n}` and `k = k_n`. With `k = 0`
/// the input is one-dimensional and the channel prepares `ρ^{⊗n}`.
pub fn cost_channel(m: &FreeSetModel, rho: &DensityMatrix, n: usize, samples: usize, seed: u64, cfg: &SolverConfig) -> Result<CostChannel> {
    let (mn, state) = grouped_power(m, rho, n)?;
    let r = standard_robustness(&mn, &state, cfg)?;
    if !r.value.is_finite() {
        return Err(Error::Vacuous("the state admits no free mixer".into()));
    }
    let y = 1.0 / (1.0 + r.value);
    let k = (m.overlap_bound_inverse(y) + FLOOR_SLACK).floor().max(0.0) as usize;
    let mixer = r.mixer.clone().unwrap_or_else(|| mn.maximally_mixed());
    let (channel, input) = if k == 0 {
        let ch = Channel::replacement(&state, vec![1]);
        (ch, None)
    } else {
        let mk = m.tensor_power(k)?;
        let (_, target) = grouped_power(m, &m.max_resource_state(1)?, k)?;
        let choi = two_outcome_choi(target.matrix(), state.matrix(), mixer.matrix());
        let ch = Channel::from_choi(mk.dims(), mn.dims(), choi, ChoiNormalization::TraceDin)?;
        (ch, Some((mk, target)))
    };
    let reproduction_error = match &input {
        Some((_, target)) => crate::qmath::max_abs(&(channel.apply(target.matrix()) - state.matrix())),
        None => crate::qmath::max_abs(&(channel.apply(&crate::qmath::identity(1)) - state.matrix())),
    };
    let check = if mn.is_exact() { FreenessCheck::Exact } else { FreenessCheck::NecessaryOnly };
    let mut rng = rng_from_seed(seed);
    let mut max_overlap_excess = f64::NEG_INFINITY;
    let mut worst = f64::INFINITY;
    let mut all_pass = true;
    let runs = if input.is_some() { samples } else { 1 };
    for _ in 0..runs {
        let (eta, overlap_excess) = match &input {
            Some((mk, target)) => {
                let eta = mk.sample_free_state(&mut rng);
                let ov = eta.expectation(target.matrix());
                (eta.into_matrix(), ov - m.overlap_bound_c(k)?)
            }
            None => (crate::qmath::identity(1), f64::NEG_INFINITY),
        };
        max_overlap_excess = max_overlap_excess.max(overlap_excess);
        let out = DensityMatrix::new(crate::qmath::hermitian_part(&channel.apply(&eta)), mn.dims())?;
        let margin = output_margin(&mn, &out)?;
        worst = worst.min(margin);
        if mn.is_free_state(&out, 1e-9)? == Membership::NotFree {
            all_pass = false;
        }
    }
    Ok(CostChannel {
        channel,
        k,
        verification: ChannelVerification {
            reproduction_error,
            samples: runs,
            max_overlap_excess,
            worst_output_margin: worst,
            all_outputs_pass: all_pass,
            check,
        },
    })
}

fn output_margin(m: &FreeSetModel, out: &DensityMatrix) -> Result<f64> {
    Ok(match *m {
        FreeSetModel::Incoherent { d } => {
            let mat = out.matrix();
            -(0..d)
                .flat_map(|i| (0..d).filter(move |&j| j != i).map(move |j| (i, j)))
                .map(|(i, j)| mat[(i, j)].norm())
                .fold(0.0, f64::max)
        }
        FreeSetModel::SeparablePpt { d_a, d_b } => min_eigenvalue(&partial_transpose_matrix(out.matrix(), &[d_a, d_b], 1)?),
    })
}
