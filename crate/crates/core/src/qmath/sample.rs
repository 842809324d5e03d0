use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::{c64, total_dim, zeros, CMatrix, CVector, Channel, DensityMatrix};
use crate::error::{Error, Result};
use crate::freesets::FreeSetModel;

/// Deterministic generator for a seed; the same seed yields identical draws on every platform.
pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn gaussian<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.sample(StandardNormal)
}

fn ginibre<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| c64(gaussian(rng), gaussian(rng)))
}

/// Haar-random unitary via QR of a Ginibre matrix with phase correction.
pub fn haar_unitary<R: Rng + ?Sized>(rng: &mut R, n: usize) -> CMatrix {
    let z = ginibre(rng, n, n);
    let qr = z.qr();
    let (q, r) = (qr.q(), qr.r());
    let mut u = q;
    for j in 0..n {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { c64(1.0, 0.0) };
        for i in 0..n {
            u[(i, j)] *= phase;
        }
    }
    u
}

/// Hilbert–Schmidt random mixed state.
pub fn random_state<R: Rng + ?Sized>(rng: &mut R, dims: &[usize]) -> DensityMatrix {
    let n = total_dim(dims);
    let g = ginibre(rng, n, n);
    let m = &g * g.adjoint();
    DensityMatrix::normalized(m, dims.to_vec()).expect("Ginibre states are valid")
}

pub fn random_pure_state<R: Rng + ?Sized>(rng: &mut R, dims: &[usize]) -> DensityMatrix {
    let n = total_dim(dims);
    let v = CVector::from_fn(n, |_, _| c64(gaussian(rng), gaussian(rng)));
    DensityMatrix::from_pure(&v, dims.to_vec()).expect("nonzero vector")
}

/// Random channel through an isometric dilation: the first `d_in` columns of a
/// Haar unitary on output ⊗ environment, with the environment traced out.
/// `env_dim = None` uses full Kraus rank `d_in·d_out`.
pub fn random_channel<R: Rng + ?Sized>(
    rng: &mut R,
    in_dims: &[usize],
    out_dims: &[usize],
    env_dim: Option<usize>,
) -> Channel {
    let din = total_dim(in_dims);
    let dout = total_dim(out_dims);
    let mut r = env_dim.unwrap_or(din * dout).max(1);
    while dout * r < din {
        r += 1;
    }
    let u = haar_unitary(rng, dout * r);
    let kraus = (0..r)
        .map(|k| {
            let mut kr = zeros(dout, din);
            for a in 0..dout {
                for b in 0..din {
                    kr[(a, b)] = u[(a * r + k, b)];
                }
            }
            kr
        })
        .collect();
    Channel::from_kraus(in_dims.to_vec(), out_dims.to_vec(), kraus).expect("isometry dilation")
}

/// What to draw in [`sample`].
#[derive(Debug, Clone, PartialEq)]
pub enum SampleKind {
    State,
    PureState,
    Unitary,
    Channel,
    FreeState(FreeSetModel),
}

#[derive(Debug, Clone)]
pub enum Sampled {
    State(DensityMatrix),
    Unitary(CMatrix),
    Channel(Channel),
}

impl Sampled {
    pub fn into_state(self) -> Option<DensityMatrix> {
        match self {
            Sampled::State(s) => Some(s),
            _ => None,
        }
    }

    pub fn into_channel(self) -> Option<Channel> {
        match self {
            Sampled::Channel(c) => Some(c),
            _ => None,
        }
    }
}

/// Seeded sampler front end.
pub fn sample(kind: &SampleKind, dims: &[usize], seed: u64) -> Result<Sampled> {
    if dims.is_empty() || dims.iter().any(|&d| d == 0) {
        return Err(Error::InvalidRequest(format!("dims {dims:?} must be positive")));
    }
    let mut rng = rng_from_seed(seed);
    Ok(match kind {
        SampleKind::State => Sampled::State(random_state(&mut rng, dims)),
        SampleKind::PureState => Sampled::State(random_pure_state(&mut rng, dims)),
        SampleKind::Unitary => Sampled::Unitary(haar_unitary(&mut rng, total_dim(dims))),
        SampleKind::Channel => Sampled::Channel(random_channel(&mut rng, dims, dims, None)),
        SampleKind::FreeState(model) => {
            if model.dims() != dims {
                return Err(Error::InvalidRequest(format!(
                    "free-state sampling for {model:?} with dims {dims:?}"
                )));
            }
            Sampled::State(model.sample_free_state(&mut rng))
        }
    })
}
