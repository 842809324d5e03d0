//! Free-set models: incoherent states (diagonal in a fixed basis) and
//! PPT-relaxed separable states of a bipartite system.

use rand::Rng;
use rand_distr::Exp1;
use serde::{Deserialize, Serialize};

use crate::conic::{Equality, Expr};
use crate::error::{Error, Result};
use crate::qmath::{
    c64, haar_unitary, kron, min_eigenvalue, partial_transpose_matrix, random_pure_state, rng_from_seed,
    zeros, CMatrix, CVector, Channel, DensityMatrix,
};

/// Largest `d_A·d_B` for which PPT coincides with separability.
pub const PPT_EXACT_MAX_DIM: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FreeSetModel {
    Incoherent { d: usize },
    SeparablePpt { d_a: usize, d_b: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Membership {
    Free,
    NotFree,
    UnknownRelaxation,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChannelMembership {
    Free,
    NotFree,
    NotFalsified,
}

/// Conditions equivalent to "expression ∈ cone(free states)".
#[derive(Debug, Clone)]
pub struct FreeCone {
    pub equalities: Vec<Equality>,
    pub psd: Vec<Expr>,
}

impl FreeCone {
    pub fn add_to(self, p: &mut crate::conic::SdpProblem) {
        for e in self.equalities {
            p.add_equality(e);
        }
        for c in self.psd {
            p.add_psd(c);
        }
    }
}

/// `d^k = n` for some `k ≥ 0`.
fn is_power_of(n: usize, d: usize) -> bool {
    if d == 1 {
        return n == 1;
    }
    let mut m = n;
    while m > 1 && m % d == 0 {
        m /= d;
    }
    m == 1
}

impl FreeSetModel {
    pub fn incoherent(d: usize) -> Result<Self> {
        if d == 0 {
            return Err(Error::InvalidRequest("dimension must be positive".into()));
        }
        Ok(Self::Incoherent { d })
    }

    pub fn separable_ppt(d_a: usize, d_b: usize) -> Result<Self> {
        if d_a == 0 || d_b == 0 {
            return Err(Error::InvalidRequest("dimensions must be positive".into()));
        }
        Ok(Self::SeparablePpt { d_a, d_b })
    }

    /// Local dimensions of the modelled system.
    pub fn dims(&self) -> Vec<usize> {
        match *self {
            Self::Incoherent { d } => vec![d],
            Self::SeparablePpt { d_a, d_b } => vec![d_a, d_b],
        }
    }

    pub fn dim(&self) -> usize {
        self.dims().iter().product()
    }

    /// Whether `Free` verdicts are exact (always for incoherence; PPT only up to 2×3).
    pub fn is_exact(&self) -> bool {
        match *self {
            Self::Incoherent { .. } => true,
            Self::SeparablePpt { d_a, d_b } => d_a * d_b <= PPT_EXACT_MAX_DIM,
        }
    }

    /// The base `d` of the overlap function `c(n) = d⁻ⁿ`.
    pub fn local_dim(&self) -> usize {
        match *self {
            Self::Incoherent { d } => d,
            Self::SeparablePpt { d_a, d_b } => d_a.min(d_b),
        }
    }

    /// The same model on `n` copies (`Incoherent(dⁿ)` or `SeparablePpt(d_Aⁿ, d_Bⁿ)`).
    pub fn tensor_power(&self, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidRequest("copies must be at least 1".into()));
        }
        let pow = |d: usize| -> Result<usize> {
            d.checked_pow(n as u32)
                .ok_or_else(|| Error::TooLarge(format!("{d}^{n} overflows")))
        };
        Ok(match *self {
            Self::Incoherent { d } => Self::Incoherent { d: pow(d)? },
            Self::SeparablePpt { d_a, d_b } => Self::SeparablePpt {
                d_a: pow(d_a)?,
                d_b: pow(d_b)?,
            },
        })
    }

    pub(crate) fn check_state(&self, rho: &DensityMatrix) -> Result<()> {
        if rho.dim() != self.dim() {
            return Err(Error::InvalidShape(format!(
                "state of dimension {} for a model of dimension {}",
                rho.dim(),
                self.dim()
            )));
        }
        Ok(())
    }

    pub fn is_free_state(&self, rho: &DensityMatrix, tol: f64) -> Result<Membership> {
        self.check_state(rho)?;
        let m = rho.matrix();
        Ok(match *self {
            Self::Incoherent { d } => {
                let off = (0..d)
                    .flat_map(|i| (0..d).filter(move |&j| j != i).map(move |j| (i, j)))
                    .map(|(i, j)| m[(i, j)].norm())
                    .fold(0.0, f64::max);
                if off <= tol {
                    Membership::Free
                } else {
                    Membership::NotFree
                }
            }
            Self::SeparablePpt { d_a, d_b } => {
                let pt = partial_transpose_matrix(m, &[d_a, d_b], 1)?;
                if min_eigenvalue(&pt) < -tol {
                    Membership::NotFree
                } else if self.is_exact() {
                    Membership::Free
                } else {
                    Membership::UnknownRelaxation
                }
            }
        })
    }

    /// Conditions for `expr ∈ cone(𝓕)`: PSD plus zero off-diagonals (incoherent),
    /// or PSD with PSD partial transpose (PPT).
    pub fn free_cone_constraints(&self, expr: &Expr) -> Result<FreeCone> {
        if expr.dim != self.dim() {
            return Err(Error::InvalidShape(format!(
                "expression of size {} for a model of dimension {}",
                expr.dim,
                self.dim()
            )));
        }
        Ok(match *self {
            Self::Incoherent { d } => {
                let equalities = (0..d)
                    .flat_map(|i| (0..d).filter(move |&j| j != i).map(move |j| (i, j)))
                    .map(|(i, j)| Equality::entries(expr.clone(), zeros(d, d), vec![(i, j)]))
                    .collect();
                FreeCone {
                    equalities,
                    psd: vec![expr.clone()],
                }
            }
            Self::SeparablePpt { d_a, d_b } => FreeCone {
                equalities: Vec::new(),
                psd: vec![expr.clone(), expr.partial_transpose(&[d_a, d_b], 1)?],
            },
        })
    }

    /// `ψ₊^{⊗n}`: uniform superposition per copy, or the maximally entangled state per copy.
    pub fn max_resource_state(&self, n: usize) -> Result<DensityMatrix> {
        if n == 0 {
            return Err(Error::InvalidRequest("copies must be at least 1".into()));
        }
        let one = match *self {
            Self::Incoherent { d } => {
                let v = CVector::from_element(d, c64(1.0, 0.0));
                DensityMatrix::from_pure(&v, vec![d])?
            }
            Self::SeparablePpt { d_a, d_b } => {
                let mut v = CVector::zeros(d_a * d_b);
                for i in 0..d_a.min(d_b) {
                    v[i * d_b + i] = c64(1.0, 0.0);
                }
                DensityMatrix::from_pure(&v, vec![d_a, d_b])?
            }
        };
        Ok(one.tensor_power(n))
    }

    /// `c(n) = d⁻ⁿ`, the largest overlap of a free state with `ψ₊^{⊗n}`.
    pub fn overlap_bound_c(&self, n: usize) -> Result<f64> {
        if n == 0 {
            return Err(Error::InvalidRequest("copies must be at least 1".into()));
        }
        Ok((self.local_dim() as f64).powi(-(n as i32)))
    }

    /// `c⁻¹(y) = log_d(1/y)`.
    pub fn overlap_bound_inverse(&self, y: f64) -> f64 {
        (1.0 / y).ln() / (self.local_dim() as f64).ln()
    }

    /// Freeness of a channel: exact for incoherence (every `𝓔(|i⟩⟨i|)` diagonal),
    /// falsification by 500 sampled free inputs for PPT.
    pub fn is_rno_channel(&self, ch: &Channel, tol: f64) -> Result<ChannelMembership> {
        self.is_rno_channel_sampled(ch, tol, 500, 0)
    }

    pub fn is_rno_channel_sampled(&self, ch: &Channel, tol: f64, samples: usize, seed: u64) -> Result<ChannelMembership> {
        match *self {
            Self::Incoherent { d } => {
                if !is_power_of(ch.in_dim(), d) || !is_power_of(ch.out_dim(), d) {
                    return Err(Error::InvalidShape(format!(
                        "channel {}→{} is not over powers of {d}",
                        ch.in_dim(),
                        ch.out_dim()
                    )));
                }
                Ok(if mio_violation(ch) <= tol {
                    ChannelMembership::Free
                } else {
                    ChannelMembership::NotFree
                })
            }
            Self::SeparablePpt { .. } => {
                if ch.in_dim() != self.dim() || ch.out_dim() != self.dim() {
                    return Err(Error::InvalidShape(format!(
                        "channel {}→{} for a model of dimension {}",
                        ch.in_dim(),
                        ch.out_dim(),
                        self.dim()
                    )));
                }
                let mut rng = rng_from_seed(seed);
                for _ in 0..samples {
                    let rho = self.sample_free_state(&mut rng);
                    let out = DensityMatrix::new(ch.apply(rho.matrix()), self.dims())?;
                    if self.is_free_state(&out, tol)? == Membership::NotFree {
                        return Ok(ChannelMembership::NotFree);
                    }
                }
                Ok(ChannelMembership::NotFalsified)
            }
        }
    }

    /// A random free state: random diagonal (incoherent) or a random mixture of
    /// one to four product pure states (PPT).
    pub fn sample_free_state<R: Rng + ?Sized>(&self, rng: &mut R) -> DensityMatrix {
        match *self {
            Self::Incoherent { d } => {
                let w = dirichlet(rng, d);
                let m = CMatrix::from_fn(d, d, |i, j| if i == j { c64(w[i], 0.0) } else { c64(0.0, 0.0) });
                DensityMatrix::new(m, vec![d]).expect("probability vector")
            }
            Self::SeparablePpt { d_a, d_b } => {
                let k = rng.random_range(1..=4);
                let w = dirichlet(rng, k);
                let mut m = zeros(d_a * d_b, d_a * d_b);
                for wi in w {
                    let a = random_pure_state(rng, &[d_a]);
                    let b = random_pure_state(rng, &[d_b]);
                    m += kron(a.matrix(), b.matrix()) * c64(wi, 0.0);
                }
                DensityMatrix::normalized(m, vec![d_a, d_b]).expect("mixture of product states")
            }
        }
    }

    /// A random channel that is free by construction.
    ///
    /// Incoherent: a mixture of an incoherent unitary (permutation with phases)
    /// and a measure-and-prepare channel with diagonal outputs. PPT: a mixture of
    /// a local unitary (composed with the swap when `d_A = d_B`) and a
    /// measure-and-prepare channel with product outputs.
    pub fn sample_free_channel<R: Rng + ?Sized>(&self, rng: &mut R) -> Channel {
        let p: f64 = rng.random();
        match *self {
            Self::Incoherent { d } => {
                let u = incoherent_unitary(rng, d);
                let uc = Channel::unitary(u, vec![d]).expect("unitary");
                let outputs: Vec<DensityMatrix> = (0..d).map(|_| self.sample_free_state(rng)).collect();
                let mp = measure_prepare(rng, vec![d], &outputs);
                uc.mix(&mp, p).expect("same shape")
            }
            Self::SeparablePpt { d_a, d_b } => {
                let mut u = kron(&haar_unitary(rng, d_a), &haar_unitary(rng, d_b));
                if d_a == d_b && rng.random_bool(0.5) {
                    u = swap_unitary(d_a) * u;
                }
                let uc = Channel::unitary(u, vec![d_a, d_b]).expect("unitary");
                let n = d_a * d_b;
                let outputs: Vec<DensityMatrix> = (0..n).map(|_| self.sample_free_state(rng)).collect();
                let mp = measure_prepare(rng, vec![d_a, d_b], &outputs);
                uc.mix(&mp, p).expect("same shape")
            }
        }
    }

    pub fn maximally_mixed(&self) -> DensityMatrix {
        DensityMatrix::maximally_mixed(self.dims())
    }
}

/// Largest off-diagonal modulus over the blocks `𝓔(|i⟩⟨i|)` of the Choi matrix.
pub fn mio_violation(ch: &Channel) -> f64 {
    let din = ch.in_dim();
    let dout = ch.out_dim();
    let j = ch.choi_ref();
    let mut worst = 0.0f64;
    for i in 0..din {
        for a in 0..dout {
            for b in 0..dout {
                if a != b {
                    worst = worst.max(j[(i * dout + a, i * dout + b)].norm());
                }
            }
        }
    }
    worst
}

pub(crate) fn dirichlet<R: Rng + ?Sized>(rng: &mut R, k: usize) -> Vec<f64> {
    let e: Vec<f64> = (0..k).map(|_| rng.sample::<f64, _>(Exp1)).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|x| x / s).collect()
}

/// Random permutation matrix times random diagonal phases.
pub fn incoherent_unitary<R: Rng + ?Sized>(rng: &mut R, d: usize) -> CMatrix {
    let mut perm: Vec<usize> = (0..d).collect();
    for i in (1..d).rev() {
        let j = rng.random_range(0..=i);
        perm.swap(i, j);
    }
    let mut u = zeros(d, d);
    for (col, &row) in perm.iter().enumerate() {
        let t: f64 = rng.random::<f64>() * std::f64::consts::TAU;
        u[(row, col)] = c64(t.cos(), t.sin());
    }
    u
}

pub fn swap_unitary(d: usize) -> CMatrix {
    let mut s = zeros(d * d, d * d);
    for i in 0..d {
        for j in 0..d {
            s[(j * d + i, i * d + j)] = c64(1.0, 0.0);
        }
    }
    s
}

/// `ρ ↦ Σ_k ⟨u_k|ρ|u_k⟩ σ_k` for a Haar-random orthonormal basis `{u_k}`.
pub(crate) fn measure_prepare<R: Rng + ?Sized>(rng: &mut R, in_dims: Vec<usize>, outputs: &[DensityMatrix]) -> Channel {
    let din: usize = in_dims.iter().product();
    assert_eq!(outputs.len(), din);
    let u = haar_unitary(rng, din);
    let out_dims = outputs[0].dims().to_vec();
    let dout = outputs[0].dim();
    let mut choi = zeros(din * dout, din * dout);
    for (k, sigma) in outputs.iter().enumerate() {
        // J = Σ M_kᵀ ⊗ σ_k
        let col = u.column(k);
        let mk = col * col.adjoint();
        choi += kron(&mk.transpose(), sigma.matrix());
    }
    Channel::from_choi_trusted(in_dims, out_dims, choi)
}
