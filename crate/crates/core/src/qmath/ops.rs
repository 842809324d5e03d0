use super::{
    c64, eigh, hermitian_part, is_hermitian, psd_sqrt, total_dim, zeros, CMatrix, DensityMatrix,
    SUPPORT_TOL,
};
use crate::error::{Error, Result};

/// Mixed-radix digits of `index` for the given local dimensions (most significant first).
pub(crate) fn digits(mut index: usize, dims: &[usize]) -> Vec<usize> {
    let mut out = vec![0; dims.len()];
    for k in (0..dims.len()).rev() {
        out[k] = index % dims[k];
        index /= dims[k];
    }
    out
}

pub(crate) fn from_digits(digits: &[usize], dims: &[usize]) -> usize {
    digits
        .iter()
        .zip(dims)
        .fold(0, |acc, (&d, &n)| acc * n + d)
}

fn check_square(m: &CMatrix, dims: &[usize]) -> Result<usize> {
    let n = total_dim(dims);
    if !m.is_square() || m.nrows() != n {
        return Err(Error::InvalidShape(format!(
            "matrix is {}x{} but dims {:?} give {}",
            m.nrows(),
            m.ncols(),
            dims,
            n
        )));
    }
    Ok(n)
}

/// Index map for reordering tensor factors: new factor `k` is old factor `perm[k]`.
/// Returns `(map, new_dims)` with `map[new_index] = old_index`.
pub fn subsystem_permutation(dims: &[usize], perm: &[usize]) -> Result<(Vec<usize>, Vec<usize>)> {
    let mut seen = vec![false; dims.len()];
    if perm.len() != dims.len() {
        return Err(Error::InvalidSubsystem(format!(
            "permutation {perm:?} does not match {} subsystems",
            dims.len()
        )));
    }
    for &p in perm {
        if p >= dims.len() || seen[p] {
            return Err(Error::InvalidSubsystem(format!("{perm:?} is not a permutation")));
        }
        seen[p] = true;
    }
    let new_dims: Vec<usize> = perm.iter().map(|&p| dims[p]).collect();
    let n = total_dim(dims);
    let mut map = vec![0; n];
    let mut old_digits = vec![0; dims.len()];
    for (new_index, slot) in map.iter_mut().enumerate() {
        let nd = digits(new_index, &new_dims);
        for (k, &p) in perm.iter().enumerate() {
            old_digits[p] = nd[k];
        }
        *slot = from_digits(&old_digits, dims);
    }
    Ok((map, new_dims))
}

/// Reorders the tensor factors of an operator; new factor `k` is old factor `perm[k]`.
pub fn permute_subsystems(m: &CMatrix, dims: &[usize], perm: &[usize]) -> Result<CMatrix> {
    let n = check_square(m, dims)?;
    let (map, _) = subsystem_permutation(dims, perm)?;
    Ok(CMatrix::from_fn(n, n, |i, j| m[(map[i], map[j])]))
}

/// Partial trace of an operator keeping the listed subsystems (in ascending order).
pub fn partial_trace_matrix(m: &CMatrix, dims: &[usize], keep: &[usize]) -> Result<CMatrix> {
    let n = check_square(m, dims)?;
    for &k in keep {
        if k >= dims.len() {
            return Err(Error::InvalidSubsystem(format!(
                "subsystem {k} out of range for {} subsystems",
                dims.len()
            )));
        }
    }
    let mut keep_sorted = keep.to_vec();
    keep_sorted.sort_unstable();
    keep_sorted.dedup();
    let traced: Vec<usize> = (0..dims.len()).filter(|k| !keep_sorted.contains(k)).collect();
    let keep_dims: Vec<usize> = keep_sorted.iter().map(|&k| dims[k]).collect();
    let traced_dims: Vec<usize> = traced.iter().map(|&k| dims[k]).collect();
    let nk = total_dim(&keep_dims);
    let mut kept_idx = vec![0; n];
    let mut traced_idx = vec![0; n];
    for i in 0..n {
        let d = digits(i, dims);
        let kd: Vec<usize> = keep_sorted.iter().map(|&k| d[k]).collect();
        let td: Vec<usize> = traced.iter().map(|&k| d[k]).collect();
        kept_idx[i] = from_digits(&kd, &keep_dims);
        traced_idx[i] = from_digits(&td, &traced_dims);
    }
    let mut out = zeros(nk, nk);
    for i in 0..n {
        for j in 0..n {
            if traced_idx[i] == traced_idx[j] {
                out[(kept_idx[i], kept_idx[j])] += m[(i, j)];
            }
        }
    }
    Ok(out)
}

/// Reduced state on `keep`. An empty `keep` is only allowed for a scalar state.
pub fn partial_trace(rho: &DensityMatrix, keep: &[usize]) -> Result<DensityMatrix> {
    if keep.is_empty() && rho.dim() != 1 {
        return Err(Error::InvalidSubsystem(
            "empty keep list on a nonscalar state".into(),
        ));
    }
    let reduced = partial_trace_matrix(rho.matrix(), rho.dims(), keep)?;
    let mut keep_sorted = keep.to_vec();
    keep_sorted.sort_unstable();
    keep_sorted.dedup();
    let dims = if keep_sorted.is_empty() {
        vec![1]
    } else {
        keep_sorted.iter().map(|&k| rho.dims()[k]).collect()
    };
    DensityMatrix::new(reduced, dims)
}

/// Transpose of one tensor factor.
pub fn partial_transpose_matrix(m: &CMatrix, dims: &[usize], subsystem: usize) -> Result<CMatrix> {
    let n = check_square(m, dims)?;
    if subsystem >= dims.len() {
        return Err(Error::InvalidSubsystem(format!(
            "subsystem {subsystem} out of range for {} subsystems",
            dims.len()
        )));
    }
    let stride: usize = dims[subsystem + 1..].iter().product();
    let d = dims[subsystem];
    let digit = |i: usize| (i / stride) % d;
    Ok(CMatrix::from_fn(n, n, |i, j| {
        let (a, b) = (digit(i), digit(j));
        let ii = i - a * stride + b * stride;
        let jj = j - b * stride + a * stride;
        m[(ii, jj)]
    }))
}

pub fn partial_transpose(rho: &DensityMatrix, subsystem: usize) -> Result<CMatrix> {
    partial_transpose_matrix(rho.matrix(), rho.dims(), subsystem)
}

/// Schatten 1-norm.
pub fn trace_norm(m: &CMatrix) -> Result<f64> {
    if !m.is_square() {
        return Err(Error::InvalidShape(format!(
            "trace norm of a {}x{} matrix",
            m.nrows(),
            m.ncols()
        )));
    }
    if m.nrows() == 0 {
        return Ok(0.0);
    }
    if is_hermitian(m, 1e-13 * (1.0 + super::max_abs(m))) {
        let (vals, _) = eigh(m);
        return Ok(vals.iter().map(|v| v.abs()).sum());
    }
    Ok(m.clone().singular_values().iter().sum())
}

/// `‖√ρ √σ‖₁`, clamped to `[0, 1]`.
pub fn sqrt_fidelity(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    if rho.dim() != sigma.dim() {
        return Err(Error::InvalidShape(format!(
            "fidelity between dimensions {} and {}",
            rho.dim(),
            sigma.dim()
        )));
    }
    let prod = psd_sqrt(rho.matrix()) * psd_sqrt(sigma.matrix());
    let f: f64 = prod.singular_values().iter().sum();
    Ok(f.clamp(0.0, 1.0))
}

/// Max-relative entropy `log₂ inf{λ : ρ ≤ λσ}`; `+∞` when `supp ρ ⊄ supp σ`.
pub fn dmax(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    if rho.dim() != sigma.dim() {
        return Err(Error::InvalidShape(format!(
            "D_max between dimensions {} and {}",
            rho.dim(),
            sigma.dim()
        )));
    }
    let (vals, vecs) = eigh(sigma.matrix());
    let support: Vec<usize> = (0..vals.len()).filter(|&k| vals[k] > SUPPORT_TOL).collect();
    let kernel: Vec<usize> = (0..vals.len()).filter(|&k| vals[k] <= SUPPORT_TOL).collect();
    // weight of ρ outside supp σ
    let outside: f64 = kernel
        .iter()
        .map(|&k| {
            let v = vecs.column(k);
            (v.adjoint() * rho.matrix() * v)[(0, 0)].re
        })
        .sum();
    if outside > SUPPORT_TOL {
        return Ok(f64::INFINITY);
    }
    let r = support.len();
    // σ^{-1/2} ρ σ^{-1/2} restricted to the support
    let mut w = zeros(vals.len(), r);
    for (col, &k) in support.iter().enumerate() {
        let s = 1.0 / vals[k].sqrt();
        for i in 0..vals.len() {
            w[(i, col)] = vecs[(i, k)] * c64(s, 0.0);
        }
    }
    let m = hermitian_part(&(w.adjoint() * rho.matrix() * &w));
    let lambda = super::max_eigenvalue(&m);
    Ok(lambda.max(0.0).log2())
}
