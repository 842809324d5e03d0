//! Channel quantifiers for maximally incoherent operations (MIO): diamond
//! distance, the RNO robustness `𝕃`, its ε-smoothing, and the max-relative
//! divergence to the MIO set.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::conic::{solve_checked, Equality, Expr, LinMap, Residuals, SdpProblem, Sense, SolverConfig};
use crate::error::{Error, Result};
use crate::freesets::{incoherent_unitary, mio_violation};
use crate::qmath::{
    c64, haar_unitary, hermitian_fn, hermitian_part, identity, kron, partial_trace_matrix, psd_projection,
    random_channel, random_pure_state, rng_from_seed, trace_norm, zeros, CMatrix, Channel, ChoiNormalization,
    DensityMatrix,
};

/// Largest MIO violation accepted as "free" when judging channel outputs.
pub const MIO_TOL: f64 = 1e-6;

/// MIO violation treated as exact zero.
pub const EXACT_MIO_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiamondResult {
    /// `½‖E₁ − E₂‖◇` (primal value of the program).
    pub value: f64,
    /// Dual objective, an upper bound up to the residuals.
    pub upper: f64,
    pub residuals: Residuals,
}

fn check_same_shape(a: &Channel, b: &Channel) -> Result<()> {
    if a.in_dim() != b.in_dim() || a.out_dim() != b.out_dim() {
        return Err(Error::InvalidShape(format!(
            "channels {}→{} and {}→{}",
            a.in_dim(),
            a.out_dim(),
            b.in_dim(),
            b.out_dim()
        )));
    }
    Ok(())
}

/// Half the diamond norm of a Hermiticity-preserving map given by its Choi
/// matrix `J` (input factor first, trace-d convention):
/// `max ⟨J, W⟩` s.t. `0 ⪯ W ⪯ ρ ⊗ I`, `ρ` a state.
pub fn half_diamond_norm_of_choi(j: &CMatrix, din: usize, dout: usize, cfg: &SolverConfig) -> Result<DiamondResult> {
    let n = din * dout;
    if j.nrows() != n || j.ncols() != n {
        return Err(Error::InvalidShape(format!("Choi of size {} for {din}→{dout}", j.nrows())));
    }
    let mut p = SdpProblem::new();
    let w = p.add_block("W", n, true);
    let rho = p.add_block("rho", din, true);
    let (we, re) = (p.var(w), p.var(rho));
    p.add_psd(we.clone());
    p.add_psd(re.clone());
    p.add_equality(Equality::scalar(re.trace(), 1.0));
    // ρ ⊗ I − W ⪰ 0
    let lift = LinMap {
        in_dim: din,
        out_dim: n,
        terms: (0..dout)
            .map(|k| {
                let l = kron(&identity(din), &col_unit(dout, k));
                let r = l.adjoint();
                (c64(1.0, 0.0), l, r)
            })
            .collect(),
    };
    p.add_psd(Expr::term(rho, lift).minus(&we));
    p.set_objective(Sense::Maximize, we.trace_with(&hermitian_part(j)));
    let sol = solve_checked("diamond norm", &p, cfg)?.require_optimal()?;
    Ok(DiamondResult {
        value: sol.objective.max(0.0),
        upper: sol.dual_objective.max(0.0),
        residuals: sol.residuals(),
    })
}

/// `|k⟩` as a `d×1` matrix.
fn col_unit(d: usize, k: usize) -> CMatrix {
    let mut m = zeros(d, 1);
    m[(k, 0)] = c64(1.0, 0.0);
    m
}

/// `½‖E₁ − E₂‖◇` by semidefinite programming.
pub fn diamond_distance(e1: &Channel, e2: &Channel, cfg: &SolverConfig) -> Result<DiamondResult> {
    check_same_shape(e1, e2)?;
    let j = e1.choi_ref() - e2.choi_ref();
    half_diamond_norm_of_choi(&j, e1.in_dim(), e1.out_dim(), cfg)
}

/// Largest `½‖(A⊗I)(J₁−J₂)(A†⊗I)‖₁` over `samples` random `A` with unit
/// Frobenius norm plus `A = I/√d`. Each term is the output distance for the
/// pure input `(A⊗I)|Ω⟩`, hence a lower bound on the diamond distance.
pub fn diamond_lower_bound(e1: &Channel, e2: &Channel, samples: usize, seed: u64) -> Result<f64> {
    check_same_shape(e1, e2)?;
    let (din, dout) = (e1.in_dim(), e1.out_dim());
    let j = e1.choi_ref() - e2.choi_ref();
    let eval = |a: &CMatrix| -> Result<f64> {
        let l = kron(a, &identity(dout));
        Ok(0.5 * trace_norm(&(&l * &j * l.adjoint()))?)
    };
    let mut best = eval(&(identity(din) * c64(1.0 / (din as f64).sqrt(), 0.0)))?;
    let mut rng = rng_from_seed(seed);
    for _ in 0..samples {
        let psi = random_pure_state(&mut rng, &[din * din]).dominant_vector();
        let a = CMatrix::from_fn(din, din, |r, c| psi[r * din + c]);
        best = best.max(eval(&a)?);
    }
    Ok(best)
}

/// Adds `(i·dout+a, i·dout+b) = 0` for `a ≠ b`: every `E(|i⟩⟨i|)` diagonal.
pub(crate) fn mio_equality(expr: &Expr, din: usize, dout: usize) -> Option<Equality> {
    let entries: Vec<(usize, usize)> = (0..din)
        .flat_map(|i| {
            (0..dout).flat_map(move |a| (0..dout).filter(move |&b| b != a).map(move |b| (i * dout + a, i * dout + b)))
        })
        .collect();
    if entries.is_empty() {
        return None;
    }
    let n = din * dout;
    Some(Equality::entries(expr.clone(), zeros(n, n), entries))
}

/// `tr_out` as a linear map on Choi matrices.
pub(crate) fn trace_out(din: usize, dout: usize) -> LinMap {
    LinMap::partial_trace(&[din, dout], &[0]).expect("valid dims")
}

#[derive(Debug, Clone)]
pub struct ChannelRobustnessResult {
    /// `𝕃(E) = max{ p : pE + (1−p)G ∈ MIO }`.
    pub p_star: f64,
    /// Optimal value reported by the solver, before snapping to 1.
    pub sdp_value: f64,
    /// Dual bound on `p*`.
    pub dual_bound: f64,
    /// The companion channel `G`; absent when `p* = 1`.
    pub companion: Option<Channel>,
    /// `p*E + (1−p*)G`.
    pub resulting_free: Channel,
    pub residuals: Residuals,
}

/// Projects a Choi matrix onto CPTP maps approximately: PSD part, then
/// `(Ω^{-1/2} ⊗ I) J (Ω^{-1/2} ⊗ I)` with `Ω = tr_out J`.
fn normalize_choi(j: &CMatrix, din: usize, dout: usize) -> CMatrix {
    let j = psd_projection(&hermitian_part(j));
    let omega = partial_trace_matrix(&j, &[din, dout], &[0]).expect("dims");
    let inv = hermitian_fn(&hermitian_part(&omega), |x| if x > 1e-14 { 1.0 / x.sqrt() } else { 0.0 });
    let l = kron(&inv, &identity(dout));
    hermitian_part(&(&l * j * &l))
}

/// RNO robustness with `Y = (1−p)·J_G`: maximize `p` over `Y ⪰ 0`,
/// `tr_out Y = (1−p)I`, `pJ_E + Y` satisfying the MIO conditions.
pub fn channel_rno_robustness(e: &Channel, cfg: &SolverConfig) -> Result<ChannelRobustnessResult> {
    let (din, dout) = (e.in_dim(), e.out_dim());
    let n = din * dout;
    let je = e.choi_ref().clone();
    let mut p = SdpProblem::new();
    let pv = p.add_scalar("p");
    let y = p.add_block("Y", n, true);
    let ye = p.var(y);
    p.add_psd(ye.clone());
    let tp = ye.map(&trace_out(din, dout)).plus(&Expr::scalar_times(pv, &identity(din)));
    p.add_equality(Equality::all(tp, identity(din)));
    let mixed = ye.clone().plus(&Expr::scalar_times(pv, &je));
    if let Some(eq) = mio_equality(&mixed, din, dout) {
        p.add_equality(eq);
    }
    p.set_objective(Sense::Maximize, p.var(pv));
    let sol = solve_checked("channel robustness", &p, cfg)?.require_optimal()?;
    // A channel that is MIO to rounding admits p = 1 exactly.
    let certified_free = mio_violation(e) <= EXACT_MIO_TOL;
    let p_star = if certified_free { 1.0 } else { sol.objective.clamp(0.0, 1.0) };
    let (companion, resulting_free) = if p_star >= 1.0 - 1e-9 {
        (None, e.clone())
    } else {
        let g = normalize_choi(&sol.blocks[1], din, dout);
        let g = Channel::from_choi(e.in_dims().to_vec(), e.out_dims().to_vec(), g, ChoiNormalization::TraceDin)?;
        let mix = e.mix(&g, p_star)?;
        (Some(g), mix)
    };
    Ok(ChannelRobustnessResult {
        p_star,
        sdp_value: sol.objective,
        dual_bound: sol.dual_objective,
        companion,
        resulting_free,
        residuals: sol.residuals(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DivergenceResult {
    /// `log₂ λ*`.
    pub value: f64,
    pub lambda: f64,
    pub residuals: Residuals,
}

/// Max-relative divergence from `E` to the MIO set (trivial ancilla):
/// `log₂ min λ` s.t. `K ⪰ J_E`, `K` MIO-structured, `tr_out K = λI`.
pub fn channel_divergence_to_free(e: &Channel, cfg: &SolverConfig) -> Result<DivergenceResult> {
    let (din, dout) = (e.in_dim(), e.out_dim());
    let n = din * dout;
    let mut p = SdpProblem::new();
    let k = p.add_block("K", n, true);
    let lam = p.add_scalar("lambda");
    let ke = p.var(k);
    p.add_psd(ke.clone().minus(&Expr::constant(e.choi_ref().clone())));
    if let Some(eq) = mio_equality(&ke, din, dout) {
        p.add_equality(eq);
    }
    let tp = ke.map(&trace_out(din, dout)).minus(&Expr::scalar_times(lam, &identity(din)));
    p.add_equality(Equality::all(tp, zeros(din, din)));
    p.set_objective(Sense::Minimize, p.var(lam));
    let sol = solve_checked("channel divergence", &p, cfg)?.require_optimal()?;
    let lambda = sol.objective.max(1.0);
    Ok(DivergenceResult {
        value: lambda.log2(),
        lambda,
        residuals: sol.residuals(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SmoothingConfig {
    pub restarts: usize,
    /// Local refinement steps per restart.
    pub refinements: usize,
    pub seed: u64,
}

impl Default for SmoothingConfig {
    fn default() -> Self {
        Self {
            restarts: 16,
            refinements: 4,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SmoothedChannelRobustness {
    pub epsilon: f64,
    /// Smallest `𝕃` found in the ball; an upper estimate of the infimum.
    pub upper_estimate: f64,
    pub witness: Channel,
    /// Certified `½‖witness − E‖◇` upper bound.
    pub witness_distance: f64,
    pub is_upper_estimate: bool,
    pub max_residual: f64,
}

/// Candidate directions `N`: the ball is explored along `E + t(N − E)`.
fn direction<R: Rng + ?Sized>(rng: &mut R, e: &Channel, kind: usize) -> Result<Channel> {
    let dout = e.out_dim();
    let in_dims = e.in_dims().to_vec();
    let out_dims = e.out_dims().to_vec();
    Ok(match kind % 4 {
        // a Haar unitary after E
        0 => e.then(&Channel::unitary(haar_unitary(rng, dout), out_dims)?)?,
        // a random channel
        1 => random_channel(rng, &in_dims, &out_dims, None),
        // replacement by a random pure state
        2 => Channel::replacement(&random_pure_state(rng, &out_dims), in_dims),
        // a coherence-generating unitary (Fourier-like up to incoherent unitaries) after E
        _ => {
            let f = fourier(dout);
            let u = incoherent_unitary(rng, dout) * f * incoherent_unitary(rng, dout);
            e.then(&Channel::unitary(u, out_dims)?)?
        }
    })
}

fn fourier(d: usize) -> CMatrix {
    let s = 1.0 / (d as f64).sqrt();
    CMatrix::from_fn(d, d, |j, k| {
        let t = std::f64::consts::TAU * (j * k) as f64 / d as f64;
        c64(s * t.cos(), s * t.sin())
    })
}

struct Candidate {
    l: f64,
    channel: Channel,
    distance: f64,
    residual: f64,
}

/// Moves from `e` toward `n` as far as the ball allows and evaluates `𝕃` there.
///
/// Since `½‖E + t(N−E) − E‖◇ = t·½‖N − E‖◇`, the step is `ε/D` with `D` the
/// certified upper bound on the distance. `1/𝕃 − 1` is convex along the
/// segment, so its far endpoint is where `𝕃` is smallest among points other than `E`.
fn probe(e: &Channel, n: &Channel, eps: f64, cfg: &SolverConfig) -> Result<Option<Candidate>> {
    let d = diamond_distance(n, e, cfg)?;
    let dist = d.value.max(d.upper) + 1e-7;
    if dist <= 1e-9 {
        return Ok(None);
    }
    let t = (eps / dist * (1.0 - 1e-6)).min(1.0);
    let cand = n.mix(e, t)?;
    let r = channel_rno_robustness(&cand, cfg)?;
    Ok(Some(Candidate {
        l: r.p_star,
        channel: cand,
        distance: t * dist,
        residual: d.residuals.max().max(r.residuals.max()),
    }))
}

/// Upper estimate of `𝕃^ε(E) = inf{ 𝕃(E′) : ½‖E′ − E‖◇ ≤ ε }` by multi-start
/// search over line segments leaving `E`.
pub fn smoothed_channel_robustness(
    e: &Channel,
    eps: f64,
    sc: &SmoothingConfig,
    cfg: &SolverConfig,
) -> Result<SmoothedChannelRobustness> {
    if !(0.0..1.0).contains(&eps) {
        return Err(Error::InvalidRequest(format!("smoothing radius {eps} outside [0, 1)")));
    }
    let base = channel_rno_robustness(e, cfg)?;
    let mut best = Candidate {
        l: base.p_star,
        channel: e.clone(),
        distance: 0.0,
        residual: base.residuals.max(),
    };
    if eps > 0.0 {
        let runs: Vec<Result<Option<Candidate>>> = (0..sc.restarts)
            .into_par_iter()
            .map(|r| -> Result<Option<Candidate>> {
                let mut rng = rng_from_seed(sc.seed.wrapping_add(r as u64));
                let mut dir = direction(&mut rng, e, r)?;
                let mut local = probe(e, &dir, eps, cfg)?;
                for _ in 0..sc.refinements {
                    let kind = rng.random_range(0..4);
                    let other = direction(&mut rng, e, kind)?;
                    let w: f64 = rng.random::<f64>() * 0.5;
                    let trial_dir = other.mix(&dir, w)?;
                    let trial = probe(e, &trial_dir, eps, cfg)?;
                    let better = match (&trial, &local) {
                        (Some(a), Some(b)) => a.l < b.l,
                        (Some(_), None) => true,
                        _ => false,
                    };
                    if better {
                        dir = trial_dir;
                        local = trial;
                    }
                }
                Ok(local)
            })
            .collect();
        let mut max_residual = best.residual;
        for run in runs {
            if let Some(c) = run? {
                max_residual = max_residual.max(c.residual);
                if c.l < best.l {
                    best = c;
                }
            }
        }
        best.residual = max_residual;
    }
    Ok(SmoothedChannelRobustness {
        epsilon: eps,
        upper_estimate: best.l,
        witness: best.channel,
        witness_distance: best.distance,
        is_upper_estimate: true,
        max_residual: best.residual,
    })
}

/// [`smoothed_channel_robustness`] over a nondecreasing grid, each entry the
/// best estimate at that radius or any smaller one (the balls are nested).
pub fn smoothed_channel_robustness_sweep(
    e: &Channel,
    grid: &[f64],
    sc: &SmoothingConfig,
    cfg: &SolverConfig,
) -> Result<Vec<SmoothedChannelRobustness>> {
    if grid.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::InvalidRequest("smoothing grid must be nondecreasing".into()));
    }
    let mut out: Vec<SmoothedChannelRobustness> = Vec::with_capacity(grid.len());
    for &eps in grid {
        let mut cur = smoothed_channel_robustness(e, eps, sc, cfg)?;
        if let Some(prev) = out.last() {
            if prev.upper_estimate < cur.upper_estimate {
                cur = SmoothedChannelRobustness {
                    epsilon: eps,
                    max_residual: cur.max_residual.max(prev.max_residual),
                    ..prev.clone()
                };
            }
        }
        out.push(cur);
    }
    Ok(out)
}

/// Whether `E` maps every incoherent basis state to an incoherent state.
pub fn is_mio(e: &Channel, tol: f64) -> bool {
    mio_violation(e) <= tol
}

/// Random MIO channel on `d` levels (see [`crate::freesets::FreeSetModel::sample_free_channel`]).
pub fn random_mio_channel<R: Rng + ?Sized>(rng: &mut R, d: usize) -> Channel {
    crate::freesets::FreeSetModel::Incoherent { d }.sample_free_channel(rng)
}

pub fn hadamard_channel() -> Channel {
    Channel::unitary(fourier(2), vec![2]).expect("unitary")
}

/// `ρ ↦ tr(ρ)·|+⟩⟨+|` on `d` levels.
pub fn plus_replacement_channel(d: usize) -> Channel {
    let s = crate::freesets::FreeSetModel::Incoherent { d }
        .max_resource_state(1)
        .expect("one copy");
    Channel::replacement(&s, vec![d])
}

pub fn maximally_mixed(d: usize) -> DensityMatrix {
    DensityMatrix::maximally_mixed(vec![d])
}
