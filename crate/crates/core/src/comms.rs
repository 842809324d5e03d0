//! Classical communication with MIO encoders and decoders: protocol
//! evaluation, see-saw optimization of the success probability, and the
//! one-shot capacity bound in terms of the smoothed channel robustness.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::conic::{solve_checked, Equality, SdpProblem, Sense, SolverConfig};
use crate::dynamic_measures::{mio_equality, smoothed_channel_robustness, trace_out, SmoothingConfig};
use crate::error::{Error, Result};
use crate::freesets::{dirichlet, measure_prepare, mio_violation};
use crate::qmath::{
    c64, hermitian_part, identity, kron, matrix_unit, min_eigenvalue, partial_trace_matrix, rng_from_seed,
    zeros, CMatrix, Channel, DensityMatrix,
};

/// MIO violation tolerated for protocol components.
pub const COMPONENT_TOL: f64 = 1e-9;
/// Largest register dimension handled by the see-saw.
pub const MAX_REGISTER_DIM: usize = 16;

#[derive(Debug, Clone)]
pub struct ProtocolSpec {
    pub channel: Channel,
    pub messages: usize,
    pub ancilla_dim: usize,
    /// `m → A ⊗ ac`.
    pub encoder: Channel,
    /// `B ⊗ ac → m`.
    pub decoder: Channel,
    /// Ancilla channel `ac → ac`.
    pub ancilla: Channel,
}

impl ProtocolSpec {
    /// Classical relay: `|k⟩ ↦ |k mod d_A⟩`, identity ancilla, and a decoder reading `B` in the basis.
    pub fn classical_relay(channel: Channel, messages: usize) -> Result<Self> {
        let (da, db) = (channel.in_dim(), channel.out_dim());
        let encoder = classical_map(messages, da, |k| k % da);
        let decoder = classical_map(db, messages, |b| b % messages);
        Ok(Self {
            channel,
            messages,
            ancilla_dim: 1,
            encoder,
            decoder,
            ancilla: Channel::identity(vec![1]),
        })
    }

    fn validate(&self) -> Result<()> {
        let (da, db, a, m) = (self.channel.in_dim(), self.channel.out_dim(), self.ancilla_dim, self.messages);
        let shape_ok = self.encoder.in_dim() == m
            && self.encoder.out_dim() == da * a
            && self.decoder.in_dim() == db * a
            && self.decoder.out_dim() == m
            && self.ancilla.in_dim() == a
            && self.ancilla.out_dim() == a;
        if !shape_ok {
            return Err(Error::InvalidShape("protocol components do not fit together".into()));
        }
        for (name, ch) in [("encoder", &self.encoder), ("decoder", &self.decoder), ("ancilla channel", &self.ancilla)] {
            let v = mio_violation(ch);
            if v > COMPONENT_TOL {
                return Err(Error::NotFreeComponent(format!("{name} has MIO violation {v:.3e}")));
            }
        }
        Ok(())
    }

    fn middle(&self) -> Channel {
        self.channel.tensor(&self.ancilla)
    }
}

/// The deterministic classical map `|i⟩ ↦ |f(i)⟩` as a channel `din → dout`.
fn classical_map(din: usize, dout: usize, f: impl Fn(usize) -> usize) -> Channel {
    let mut choi = zeros(din * dout, din * dout);
    for i in 0..din {
        choi += kron(&matrix_unit(din, i, i), &matrix_unit(dout, f(i), f(i)));
    }
    Channel::from_choi_trusted(vec![din], vec![dout], choi)
}

/// `(1/m) Σ_k ⟨k| E_d((N ⊗ W)(E_e(|k⟩⟨k|))) |k⟩` for a fixed protocol.
pub fn protocol_simulate(spec: &ProtocolSpec) -> Result<f64> {
    spec.validate()?;
    Ok(success(&spec.encoder, &spec.middle(), &spec.decoder, spec.messages))
}

fn success(enc: &Channel, mid: &Channel, dec: &Channel, m: usize) -> f64 {
    let mut total = 0.0;
    for k in 0..m {
        let out = dec.apply(&mid.apply(&enc.apply(&matrix_unit(m, k, k))));
        total += out[(k, k)].re;
    }
    (total / m as f64).clamp(0.0, 1.0)
}

/// Rounds an approximately optimal Choi matrix to an exact MIO channel: zero
/// the forbidden entries, shift by the most negative eigenvalue, rescale so
/// `tr_out J ⪯ I`, and send the missing trace to `|0⟩⟨0|`.
fn repair_mio_choi(j: &CMatrix, din: usize, dout: usize) -> CMatrix {
    let mut h = hermitian_part(j);
    for i in 0..din {
        for a in 0..dout {
            for b in 0..dout {
                if a != b {
                    h[(i * dout + a, i * dout + b)] = c64(0.0, 0.0);
                }
            }
        }
    }
    let lam = min_eigenvalue(&h);
    if lam < 0.0 {
        h += identity(din * dout) * c64(-lam, 0.0);
    }
    let omega = hermitian_part(&partial_trace_matrix(&h, &[din, dout], &[0]).expect("dims"));
    let s = crate::qmath::max_eigenvalue(&omega).max(1e-300);
    let deficit = identity(din) - &omega / c64(s, 0.0);
    let deficit = crate::qmath::psd_projection(&hermitian_part(&deficit));
    h / c64(s, 0.0) + kron(&deficit.transpose(), &matrix_unit(dout, 0, 0))
}

/// Maximizes `tr(J C)` over MIO Choi matrices `din → dout` and returns the rounded channel.
fn best_mio_channel(c: &CMatrix, din: usize, dout: usize, label: &str, cfg: &SolverConfig) -> Result<Channel> {
    let mut p = SdpProblem::new();
    let jb = p.add_block("J", din * dout, true);
    let je = p.var(jb);
    p.add_psd(je.clone());
    p.add_equality(Equality::all(je.map(&trace_out(din, dout)), identity(din)));
    if let Some(eq) = mio_equality(&je, din, dout) {
        p.add_equality(eq);
    }
    p.set_objective(Sense::Maximize, je.trace_with(&hermitian_part(c)));
    let sol = solve_checked(label, &p, cfg)?.require_optimal()?;
    let j = repair_mio_choi(&sol.blocks[0], din, dout);
    Ok(Channel::from_choi_trusted(vec![din], vec![dout], j))
}

/// `Σ_k σ_kᵀ ⊗ |k⟩⟨k|` with `σ_k` the state reaching the decoder for message `k`.
fn decoder_objective(enc: &Channel, mid: &Channel, m: usize) -> CMatrix {
    let d = mid.out_dim();
    let mut c = zeros(d * m, d * m);
    for k in 0..m {
        let sigma = mid.apply(&enc.apply(&matrix_unit(m, k, k)));
        c += kron(&sigma.transpose(), &matrix_unit(m, k, k));
    }
    c
}

/// `Σ_k |k⟩⟨k| ⊗ (N⊗W)†(E_d†(|k⟩⟨k|))`.
fn encoder_objective(mid: &Channel, dec: &Channel, m: usize) -> CMatrix {
    let d = mid.in_dim();
    let mut c = zeros(m * d, m * d);
    for k in 0..m {
        let effect = mid.apply_adjoint(&dec.apply_adjoint(&matrix_unit(m, k, k)));
        c += kron(&matrix_unit(m, k, k), &effect);
    }
    c
}

/// Exact maximizer of `tr(J C)` over MIO Choi matrices when `C` is block
/// diagonal in the input basis, as the encoder objective is. MIO makes each
/// diagonal block of `J` diagonal, so only the probabilities `⟨a|E(|k⟩⟨k|)|a⟩`
/// enter and the optimum is the deterministic map `k ↦ argmax_a C_{ka,ka}`.
fn best_mio_encoder(c: &CMatrix, din: usize, dout: usize) -> Channel {
    let best: Vec<usize> = (0..din)
        .map(|k| {
            (0..dout).fold(0, |arg, a| {
                if c[(k * dout + a, k * dout + a)].re > c[(k * dout + arg, k * dout + arg)].re {
                    a
                } else {
                    arg
                }
            })
        })
        .collect();
    classical_map(din, dout, |k| best[k])
}

/// Random MIO channel `din → dout`: a measure-and-prepare map into diagonal
/// states blended with a classical relabeling.
pub fn random_mio_map<R: Rng + ?Sized>(rng: &mut R, din: usize, dout: usize) -> Channel {
    let outputs: Vec<DensityMatrix> = (0..din)
        .map(|_| {
            let w = dirichlet(rng, dout);
            let m = CMatrix::from_fn(dout, dout, |i, j| if i == j { c64(w[i], 0.0) } else { c64(0.0, 0.0) });
            DensityMatrix::new(m, vec![dout]).expect("diagonal state")
        })
        .collect();
    let mp = measure_prepare(rng, vec![din], &outputs);
    let offset = rng.random_range(0..dout);
    let relabel = classical_map(din, dout, |i| (i + offset) % dout);
    relabel.mix(&mp, rng.random()).expect("same shape")
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeesawConfig {
    pub rounds: usize,
    pub restarts: usize,
    pub seed: u64,
    /// Stop once a full round gains less than this.
    pub min_gain: f64,
}

impl Default for SeesawConfig {
    fn default() -> Self {
        Self {
            rounds: 30,
            restarts: 8,
            seed: 0,
            min_gain: 1e-8,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SeesawResult {
    /// Success probability of the best protocol found; achievable, so a lower bound on the supremum.
    pub f_hat: f64,
    pub spec: ProtocolSpec,
    /// Accepted objective after every half step, per restart.
    pub trajectories: Vec<Vec<f64>>,
    /// Largest decrease between consecutive accepted values (zero when monotone).
    pub max_decrease: f64,
    /// Half steps whose SDP proposal was rejected for not improving the objective.
    pub rejected_steps: usize,
}

/// Alternating maximization over decoder (by SDP) and encoder (in closed
/// form) with the identity ancilla channel. A proposal replaces the current
/// component only if the exactly evaluated success probability does not drop.
pub fn seesaw_success_probability(
    n: &Channel,
    m: usize,
    ancilla_dim: usize,
    sc: &SeesawConfig,
    cfg: &SolverConfig,
) -> Result<SeesawResult> {
    if m < 2 {
        return Err(Error::InvalidRequest("at least two messages are needed".into()));
    }
    if ancilla_dim == 0 {
        return Err(Error::InvalidRequest("ancilla dimension must be positive".into()));
    }
    let (da, db) = (n.in_dim() * ancilla_dim, n.out_dim() * ancilla_dim);
    if m > MAX_REGISTER_DIM || da * m > 4 * MAX_REGISTER_DIM || db * m > 4 * MAX_REGISTER_DIM {
        return Err(Error::TooLarge(format!("{m} messages over registers {da}, {db}")));
    }
    let ancilla = Channel::identity(vec![ancilla_dim]);
    let mid = n.tensor(&ancilla);
    struct Run {
        best: f64,
        enc: Channel,
        dec: Channel,
        trajectory: Vec<f64>,
        rejected: usize,
    }
    let runs: Vec<Result<Run>> = (0..sc.restarts.max(1))
        .into_par_iter()
        .map(|r| -> Result<Run> {
            let mut rng = rng_from_seed(sc.seed.wrapping_add(r as u64));
            let mut enc = if r == 0 {
                classical_map(m, da, |k| k % da)
            } else {
                random_mio_map(&mut rng, m, da)
            };
            let mut dec = classical_map(db, m, |b| b % m);
            let mut cur = success(&enc, &mid, &dec, m);
            let mut trajectory = vec![cur];
            let mut rejected = 0;
            for _ in 0..sc.rounds {
                let start = cur;
                let prop = best_mio_channel(&decoder_objective(&enc, &mid, m), db, m, "see-saw decoder", cfg)?;
                let v = success(&enc, &mid, &prop, m);
                if v >= cur {
                    dec = prop;
                    cur = v;
                } else {
                    rejected += 1;
                }
                trajectory.push(cur);
                let prop = best_mio_encoder(&encoder_objective(&mid, &dec, m), m, da);
                let v = success(&prop, &mid, &dec, m);
                if v >= cur {
                    enc = prop;
                    cur = v;
                } else {
                    rejected += 1;
                }
                trajectory.push(cur);
                if cur - start < sc.min_gain {
                    break;
                }
            }
            Ok(Run {
                best: cur,
                enc,
                dec,
                trajectory,
                rejected,
            })
        })
        .collect();
    let mut runs: Vec<Run> = runs.into_iter().collect::<Result<_>>()?;
    let best = (0..runs.len())
        .max_by(|&a, &b| runs[a].best.total_cmp(&runs[b].best).then(b.cmp(&a)))
        .expect("at least one restart");
    let max_decrease = runs
        .iter()
        .flat_map(|r| r.trajectory.windows(2).map(|w| w[0] - w[1]))
        .fold(0.0, f64::max);
    let rejected_steps = runs.iter().map(|r| r.rejected).sum();
    let trajectories = runs.iter().map(|r| r.trajectory.clone()).collect();
    let win = runs.swap_remove(best);
    Ok(SeesawResult {
        f_hat: win.best,
        spec: ProtocolSpec {
            channel: n.clone(),
            messages: m,
            ancilla_dim,
            encoder: win.enc,
            decoder: win.dec,
            ancilla,
        },
        trajectories,
        max_decrease,
        rejected_steps,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundVerdict {
    /// `achieved_m ≤ bound_on_m`.
    Consistent,
    /// The see-saw reached more messages than the bound allows.
    Violated,
    /// No achievability data was supplied.
    NotEvaluated,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CapacityReport {
    pub theta: f64,
    pub delta: f64,
    /// Smoothed channel robustness at radius `δ`; an upper estimate of the infimum.
    pub l_delta_estimate: f64,
    /// `1/(L·(1−θ−δ))`. With `L` overestimated this underestimates the bound.
    pub bound_on_m: f64,
    /// `log₂ bound_on_m`.
    pub c_theta_bound: f64,
    /// `f̂(m)` for `m = 2, 3, …` as run.
    pub achieved_f: Vec<(usize, f64)>,
    /// Largest `m` with `1 − f̂(m) ≤ θ` (1 when none qualifies).
    pub achieved_m: usize,
    pub verdict: BoundVerdict,
    pub bound_is_lower_estimate: bool,
}

/// `1/(L(1−θ−δ))` and its logarithm.
pub fn capacity_bound_value(l: f64, theta: f64, delta: f64) -> Result<(f64, f64)> {
    check_theta_delta(theta, delta)?;
    if !(l > 0.0 && l <= 1.0) {
        return Err(Error::InvalidRequest(format!("robustness {l} outside (0, 1]")));
    }
    let b = 1.0 / (l * (1.0 - theta - delta));
    Ok((b, b.log2()))
}

fn check_theta_delta(theta: f64, delta: f64) -> Result<()> {
    if !(0.0..1.0).contains(&theta) || !(0.0..1.0).contains(&delta) {
        return Err(Error::InvalidRequest(format!("θ = {theta}, δ = {delta} must lie in [0, 1)")));
    }
    if theta + delta >= 1.0 {
        return Err(Error::InvalidRequest(format!("θ + δ = {} must be below 1", theta + delta)));
    }
    Ok(())
}

/// Evaluates the capacity bound for `N` without achievability data.
pub fn capacity_bound(n: &Channel, theta: f64, delta: f64, smoothing: &SmoothingConfig, cfg: &SolverConfig) -> Result<CapacityReport> {
    check_theta_delta(theta, delta)?;
    let l = smoothed_channel_robustness(n, delta, smoothing, cfg)?.upper_estimate;
    let (bound_on_m, c_theta_bound) = capacity_bound_value(l, theta, delta)?;
    Ok(CapacityReport {
        theta,
        delta,
        l_delta_estimate: l,
        bound_on_m,
        c_theta_bound,
        achieved_f: Vec::new(),
        achieved_m: 1,
        verdict: BoundVerdict::NotEvaluated,
        bound_is_lower_estimate: true,
    })
}

/// Capacity bound plus see-saw achievability for `m = 2..=max_messages`.
pub fn capacity_experiment(
    n: &Channel,
    theta: f64,
    delta: f64,
    max_messages: usize,
    seesaw: &SeesawConfig,
    smoothing: &SmoothingConfig,
    cfg: &SolverConfig,
) -> Result<CapacityReport> {
    let mut report = capacity_bound(n, theta, delta, smoothing, cfg)?;
    let mut achieved_m = 1;
    for m in 2..=max_messages.max(2) {
        let r = seesaw_success_probability(n, m, 1, seesaw, cfg)?;
        report.achieved_f.push((m, r.f_hat));
        if 1.0 - r.f_hat <= theta {
            achieved_m = m;
        }
    }
    report.achieved_m = achieved_m;
    report.verdict = if achieved_m as f64 <= report.bound_on_m {
        BoundVerdict::Consistent
    } else {
        BoundVerdict::Violated
    };
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qmath::random_channel;

    #[test]
    fn closed_form_encoder_matches_the_sdp() {
        let mut rng = rng_from_seed(3);
        let cfg = SolverConfig::default();
        for (m, d) in [(2, 2), (3, 2), (2, 3)] {
            for _ in 0..4 {
                let mid = random_channel(&mut rng, &[d], &[d], None);
                let dec = random_mio_map(&mut rng, d, m);
                let c = encoder_objective(&mid, &dec, m);
                let exact = success(&best_mio_encoder(&c, m, d), &mid, &dec, m);
                let sdp = best_mio_channel(&c, m, d, "encoder cross-check", &cfg).unwrap();
                let via_sdp = success(&sdp, &mid, &dec, m);
                assert!(via_sdp <= exact + 1e-6, "{via_sdp} > {exact}");
                assert!(exact - via_sdp <= 1e-5, "{exact} vs {via_sdp}");
            }
        }
    }
}
