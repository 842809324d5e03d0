//! Dense complex linear algebra and quantum-channel calculus.
//!
//! Matrices are `nalgebra` dense matrices over `Complex<f64>`. States and
//! channels carry the local-dimension lists of their tensor factors so that
//! partial operations can address individual subsystems.

mod channel;
mod ops;
mod sample;
mod state;

pub use channel::{apply_channel, choi_to_kraus, kraus_to_choi, Channel, ChoiNormalization};
pub use ops::{
    dmax, partial_trace, partial_trace_matrix, partial_transpose, partial_transpose_matrix,
    permute_subsystems, sqrt_fidelity, subsystem_permutation, trace_norm,
};
pub use sample::{
    haar_unitary, random_channel, random_pure_state, random_state, rng_from_seed, sample,
    SampleKind, Sampled,
};
pub use state::DensityMatrix;
pub(crate) use ops::{digits, from_digits};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex;

pub type C64 = Complex<f64>;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

/// Minimum-eigenvalue tolerance for positivity checks.
pub const PSD_TOL: f64 = 1e-9;
/// Tolerance on trace and trace-preservation conditions.
pub const TRACE_TOL: f64 = 1e-9;
/// Eigenvalues of `σ` below this are treated as outside its support.
pub const SUPPORT_TOL: f64 = 1e-10;

#[inline]
pub fn c64(re: f64, im: f64) -> C64 {
    Complex::new(re, im)
}

pub fn zeros(rows: usize, cols: usize) -> CMatrix {
    CMatrix::zeros(rows, cols)
}

pub fn identity(n: usize) -> CMatrix {
    CMatrix::identity(n, n)
}

/// Computational basis vector `|i⟩` in dimension `d`.
pub fn ket(d: usize, i: usize) -> CVector {
    let mut v = CVector::zeros(d);
    v[i] = c64(1.0, 0.0);
    v
}

/// `|i⟩⟨j|` in dimension `d`.
pub fn matrix_unit(d: usize, i: usize, j: usize) -> CMatrix {
    let mut m = zeros(d, d);
    m[(i, j)] = c64(1.0, 0.0);
    m
}

pub fn projector(v: &CVector) -> CMatrix {
    v * v.adjoint()
}

pub fn trace(m: &CMatrix) -> C64 {
    m.diagonal().iter().sum()
}

pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

/// Kronecker product of a list, left to right. Empty list gives the 1x1 identity.
pub fn kron_all<'a, I: IntoIterator<Item = &'a CMatrix>>(factors: I) -> CMatrix {
    factors
        .into_iter()
        .fold(identity(1), |acc, f| acc.kronecker(f))
}

pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// `max |M - M†|` entrywise.
pub fn hermiticity_error(m: &CMatrix) -> f64 {
    if !m.is_square() {
        return f64::INFINITY;
    }
    let n = m.nrows();
    let mut err: f64 = 0.0;
    for i in 0..n {
        for j in i..n {
            err = err.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    err
}

pub fn is_hermitian(m: &CMatrix, tol: f64) -> bool {
    hermiticity_error(m) <= tol
}

/// `(M + M†) / 2`.
pub fn hermitian_part(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()) * c64(0.5, 0.0)
}

/// Eigen-decomposition of a Hermitian matrix with eigenvalues sorted ascending.
/// Only the Hermitian part of `m` is used.
pub fn eigh(m: &CMatrix) -> (Vec<f64>, CMatrix) {
    let n = m.nrows();
    if n == 0 {
        return (Vec::new(), zeros(0, 0));
    }
    if n == 1 {
        return (vec![m[(0, 0)].re], identity(1));
    }
    let eig = hermitian_part(m).symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let mut vectors = zeros(n, n);
    for (col, &k) in order.iter().enumerate() {
        vectors.set_column(col, &eig.eigenvectors.column(k));
    }
    (values, vectors)
}

pub fn eigvalsh(m: &CMatrix) -> Vec<f64> {
    let n = m.nrows();
    if n == 1 {
        return vec![m[(0, 0)].re];
    }
    let mut v: Vec<f64> = hermitian_part(m).symmetric_eigenvalues().iter().copied().collect();
    v.sort_by(f64::total_cmp);
    v
}

pub fn min_eigenvalue(m: &CMatrix) -> f64 {
    eigvalsh(m).first().copied().unwrap_or(0.0)
}

pub fn max_eigenvalue(m: &CMatrix) -> f64 {
    eigvalsh(m).last().copied().unwrap_or(0.0)
}

/// Applies `f` to the eigenvalues of a Hermitian matrix.
pub fn hermitian_fn(m: &CMatrix, f: impl Fn(f64) -> f64) -> CMatrix {
    let (vals, vecs) = eigh(m);
    let n = vals.len();
    let mut scaled = vecs.clone();
    for k in 0..n {
        let fk = f(vals[k]);
        for i in 0..n {
            scaled[(i, k)] *= fk;
        }
    }
    scaled * vecs.adjoint()
}

/// Square root of the positive part of a Hermitian matrix.
pub fn psd_sqrt(m: &CMatrix) -> CMatrix {
    hermitian_fn(m, |x| x.max(0.0).sqrt())
}

/// Nearest PSD matrix in Frobenius norm.
pub fn psd_projection(m: &CMatrix) -> CMatrix {
    hermitian_fn(m, |x| x.max(0.0))
}

/// Product of the entries of a dimension list.
pub fn total_dim(dims: &[usize]) -> usize {
    dims.iter().product()
}
