use super::{
    c64, eigh, hermiticity_error, identity, kron, min_eigenvalue, projector, total_dim, trace,
    CMatrix, CVector, PSD_TOL, TRACE_TOL,
};
use crate::error::{Error, Result};

/// A finite-dimensional quantum state together with the local dimensions of
/// its tensor factors.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    matrix: CMatrix,
    dims: Vec<usize>,
}

impl DensityMatrix {
    /// Validates Hermiticity, positivity (min eigenvalue ≥ −1e-9) and unit trace.
    /// The stored matrix is the exact Hermitian part of the input.
    pub fn new(matrix: CMatrix, dims: Vec<usize>) -> Result<Self> {
        let n = total_dim(&dims);
        if dims.is_empty() || dims.iter().any(|&d| d == 0) {
            return Err(Error::InvalidShape(format!("bad local dimensions {dims:?}")));
        }
        if !matrix.is_square() || matrix.nrows() != n {
            return Err(Error::InvalidShape(format!(
                "{}x{} matrix for dims {:?}",
                matrix.nrows(),
                matrix.ncols(),
                dims
            )));
        }
        if matrix.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidState("non-finite entries".into()));
        }
        let herr = hermiticity_error(&matrix);
        if herr > 1e-10 {
            return Err(Error::InvalidState(format!("not Hermitian (error {herr:.2e})")));
        }
        let matrix = super::hermitian_part(&matrix);
        let tr = trace(&matrix).re;
        if (tr - 1.0).abs() > TRACE_TOL {
            return Err(Error::InvalidState(format!("trace {tr} is not 1")));
        }
        let lmin = min_eigenvalue(&matrix);
        if lmin < -PSD_TOL {
            return Err(Error::InvalidState(format!(
                "negative eigenvalue {lmin:.3e}"
            )));
        }
        Ok(Self { matrix, dims })
    }

    /// Builds a state from a PSD matrix after normalizing its trace; used for
    /// solver outputs whose trace is only approximately one.
    pub fn normalized(matrix: CMatrix, dims: Vec<usize>) -> Result<Self> {
        let m = super::hermitian_part(&matrix);
        let tr = trace(&m).re;
        if !(tr > 0.0) {
            return Err(Error::InvalidState(format!("trace {tr} is not positive")));
        }
        Self::new(m / c64(tr, 0.0), dims)
    }

    pub fn from_pure(psi: &CVector, dims: Vec<usize>) -> Result<Self> {
        let norm = psi.norm();
        if norm == 0.0 {
            return Err(Error::InvalidState("zero vector".into()));
        }
        let v = psi / c64(norm, 0.0);
        Self::new(projector(&v), dims)
    }

    pub fn basis_state(d: usize, i: usize) -> Self {
        let mut m = CMatrix::zeros(d, d);
        m[(i, i)] = c64(1.0, 0.0);
        Self { matrix: m, dims: vec![d] }
    }

    pub fn maximally_mixed(dims: Vec<usize>) -> Self {
        let n = total_dim(&dims);
        Self {
            matrix: identity(n) / c64(n as f64, 0.0),
            dims,
        }
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// Same matrix with a different factorization of the dimension.
    pub fn with_dims(&self, dims: Vec<usize>) -> Result<Self> {
        if total_dim(&dims) != self.dim() {
            return Err(Error::InvalidShape(format!(
                "dims {dims:?} do not factor dimension {}",
                self.dim()
            )));
        }
        Ok(Self {
            matrix: self.matrix.clone(),
            dims,
        })
    }

    pub fn tensor(&self, other: &Self) -> Self {
        let mut dims = self.dims.clone();
        dims.extend_from_slice(&other.dims);
        Self {
            matrix: kron(&self.matrix, &other.matrix),
            dims,
        }
    }

    /// `ρ^{⊗n}` with factors concatenated in copy order.
    pub fn tensor_power(&self, n: usize) -> Self {
        let mut out = self.clone();
        for _ in 1..n {
            out = out.tensor(self);
        }
        out
    }

    /// `p·self + (1−p)·other`.
    pub fn mix(&self, other: &Self, p: f64) -> Result<Self> {
        if self.dim() != other.dim() {
            return Err(Error::InvalidShape("mixing states of different dimension".into()));
        }
        let m = &self.matrix * c64(p, 0.0) + &other.matrix * c64(1.0 - p, 0.0);
        Ok(Self {
            matrix: m,
            dims: self.dims.clone(),
        })
    }

    pub fn purity(&self) -> f64 {
        trace(&(&self.matrix * &self.matrix)).re
    }

    pub fn largest_eigenvalue(&self) -> f64 {
        super::max_eigenvalue(&self.matrix)
    }

    /// Dominant eigenvector; meaningful as "the" vector when the state is pure.
    pub fn dominant_vector(&self) -> CVector {
        let (_, vecs) = eigh(&self.matrix);
        vecs.column(self.dim() - 1).into_owned()
    }

    pub fn is_pure(&self, tol: f64) -> bool {
        self.largest_eigenvalue() >= 1.0 - tol
    }

    pub fn expectation(&self, op: &CMatrix) -> f64 {
        trace(&(&self.matrix * op)).re
    }
}
