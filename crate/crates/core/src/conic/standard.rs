//! Compilation of an [`SdpProblem`] into the real standard form
//! `min cᵀx  s.t.  Ax + s = b,  s ∈ {0}ᶻ × ℝ₊ˡ × PSD…`.
//!
//! Hermitian blocks and PSD outputs are coordinatized by the orthonormal basis
//! `E_ii`, `(E_ij+E_ji)/√2`, `i(E_ij−E_ji)/√2` (i < j), an isometry between
//! Hermitian matrices with `Re tr(A†B)` and ℝ^{n²}.

use nalgebra::{DMatrix, DVector};

use super::problem::{Expr, Sense, SdpProblem};
use crate::error::{Error, Result};
use crate::qmath::{c64, max_abs, zeros, CMatrix, C64};

const SQRT2: f64 = std::f64::consts::SQRT_2;

/// Sparse description of the k-th basis matrix: list of `(row, col, value)`.
pub(crate) fn basis_entries(dim: usize, hermitian: bool, k: usize) -> Vec<(usize, usize, C64)> {
    if k < dim {
        return vec![(k, k, c64(1.0, 0.0))];
    }
    let mut idx = dim;
    let s = 1.0 / SQRT2;
    for i in 0..dim {
        for j in (i + 1)..dim {
            if idx == k {
                return vec![(i, j, c64(s, 0.0)), (j, i, c64(s, 0.0))];
            }
            idx += 1;
            if hermitian {
                if idx == k {
                    return vec![(i, j, c64(0.0, s)), (j, i, c64(0.0, -s))];
                }
                idx += 1;
            }
        }
    }
    panic!("basis index {k} out of range for dim {dim}");
}

pub(crate) fn real_dim(dim: usize, hermitian: bool) -> usize {
    if hermitian {
        dim * dim
    } else {
        dim * (dim + 1) / 2
    }
}

/// Coordinates of a Hermitian matrix.
pub(crate) fn to_coords(m: &CMatrix, hermitian: bool, out: &mut [f64]) {
    let n = m.nrows();
    for i in 0..n {
        out[i] = m[(i, i)].re;
    }
    let mut idx = n;
    for i in 0..n {
        for j in (i + 1)..n {
            // symmetrized so that non-Hermitian round-off does not leak in
            let z = (m[(i, j)] + m[(j, i)].conj()) * 0.5;
            out[idx] = SQRT2 * z.re;
            idx += 1;
            if hermitian {
                out[idx] = SQRT2 * z.im;
                idx += 1;
            }
        }
    }
}

pub(crate) fn from_coords(x: &[f64], dim: usize, hermitian: bool) -> CMatrix {
    let mut m = zeros(dim, dim);
    for i in 0..dim {
        m[(i, i)] = c64(x[i], 0.0);
    }
    let mut idx = dim;
    let s = 1.0 / SQRT2;
    for i in 0..dim {
        for j in (i + 1)..dim {
            let re = x[idx] * s;
            idx += 1;
            let im = if hermitian {
                let v = x[idx] * s;
                idx += 1;
                v
            } else {
                0.0
            };
            m[(i, j)] = c64(re, im);
            m[(j, i)] = c64(re, -im);
        }
    }
    m
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Part {
    Re,
    Im,
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct EqRow {
    pub eq: usize,
    pub i: usize,
    pub j: usize,
    pub part: Part,
    /// True when the row stands for both (i,j) and (j,i) of a Hermitian-valued equality.
    pub mirrored: bool,
}

#[derive(Debug, Clone)]
pub(crate) struct PsdCone {
    pub constraint: usize,
    pub offset: usize,
    pub dim: usize,
}

#[derive(Debug, Clone)]
pub(crate) struct StandardForm {
    pub a: DMatrix<f64>,
    pub b: DVector<f64>,
    pub c: DVector<f64>,
    /// Objective constant in the user's sense.
    pub obj_const: f64,
    /// +1 for minimize, −1 for maximize (internal objective is `sign·user`).
    pub sign: f64,
    pub block_offsets: Vec<usize>,
    /// `(side length, hermitian)` per block.
    pub block_shapes: Vec<(usize, bool)>,
    pub eq_rows: Vec<EqRow>,
    /// `(constraint index, row)` for scalar inequality constraints.
    pub nonneg: Vec<(usize, usize)>,
    pub psd: Vec<PsdCone>,
    pub zero_end: usize,
    pub nonneg_end: usize,
}

/// Images of the basis vectors of every variable under an expression.
fn images(expr: &Expr, p: &SdpProblem, offsets: &[usize], n: usize) -> Vec<Option<CMatrix>> {
    let mut img: Vec<Option<CMatrix>> = vec![None; n];
    for (b, map) in &expr.terms {
        let spec = &p.blocks[b.0];
        let rd = real_dim(spec.dim, spec.hermitian);
        for k in 0..rd {
            let entries = basis_entries(spec.dim, spec.hermitian, k);
            let mut out = zeros(map.out_dim, map.out_dim);
            for (coef, l, r) in &map.terms {
                for &(pi, qj, v) in &entries {
                    let w = *coef * v;
                    // L[:, pi] R[qj, :]
                    for row in 0..map.out_dim {
                        let lv = l[(row, pi)];
                        if lv == c64(0.0, 0.0) {
                            continue;
                        }
                        let lw = lv * w;
                        for col in 0..map.out_dim {
                            out[(row, col)] += lw * r[(qj, col)];
                        }
                    }
                }
            }
            let slot = &mut img[offsets[b.0] + k];
            match slot {
                Some(m) => *m += out,
                None => *slot = Some(out),
            }
        }
    }
    img
}

fn is_hermitian_valued(img: &[Option<CMatrix>], extra: &CMatrix) -> bool {
    let tol = |m: &CMatrix| 1e-12 * (1.0 + max_abs(m));
    img.iter()
        .flatten()
        .all(|m| crate::qmath::hermiticity_error(m) <= tol(m))
        && crate::qmath::hermiticity_error(extra) <= tol(extra)
}

pub(crate) fn compile(p: &SdpProblem) -> Result<StandardForm> {
    p.validate()?;
    let mut offsets = Vec::with_capacity(p.blocks.len());
    let mut n = 0;
    for b in &p.blocks {
        offsets.push(n);
        n += real_dim(b.dim, b.hermitian);
    }
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut rhs: Vec<f64> = Vec::new();
    let mut eq_rows = Vec::new();

    for (e, eq) in p.equalities.iter().enumerate() {
        let img = images(&eq.expr, p, &offsets, n);
        let target = &eq.target - &eq.expr.constant;
        let herm = is_hermitian_valued(&img, &target);
        let list = eq.entry_list();
        for &(i, j) in &list {
            if herm && i > j && list.contains(&(j, i)) {
                continue;
            }
            let mirrored = herm && i != j && list.contains(&(j, i));
            let parts: &[Part] = if herm && i == j { &[Part::Re] } else { &[Part::Re, Part::Im] };
            for &part in parts {
                let pick = |z: C64| if part == Part::Re { z.re } else { z.im };
                let mut row = vec![0.0; n];
                let mut any = false;
                for (k, m) in img.iter().enumerate() {
                    if let Some(m) = m {
                        let v = pick(m[(i, j)]);
                        if v != 0.0 {
                            row[k] = v;
                            any = true;
                        }
                    }
                }
                let t = pick(target[(i, j)]);
                if !any && t.abs() < 1e-15 {
                    continue;
                }
                rows.push(row);
                rhs.push(t);
                eq_rows.push(EqRow {
                    eq: e,
                    i,
                    j,
                    part,
                    mirrored,
                });
            }
        }
    }
    let zero_end = rows.len();

    let mut nonneg = Vec::new();
    let mut psd_specs = Vec::new();
    for (ci, con) in p.psd.iter().enumerate() {
        if con.expr.dim == 1 {
            let img = images(&con.expr, p, &offsets, n);
            if !is_hermitian_valued(&img, &con.expr.constant) {
                return Err(Error::InvalidProblem(format!("inequality {ci} is not real-valued")));
            }
            let mut row = vec![0.0; n];
            for (k, m) in img.iter().enumerate() {
                if let Some(m) = m {
                    row[k] = -m[(0, 0)].re;
                }
            }
            nonneg.push((ci, rows.len()));
            rows.push(row);
            rhs.push(con.expr.constant[(0, 0)].re);
        } else {
            psd_specs.push(ci);
        }
    }
    let nonneg_end = rows.len();

    let mut psd = Vec::new();
    for ci in psd_specs {
        let con = &p.psd[ci];
        let img = images(&con.expr, p, &offsets, n);
        if !is_hermitian_valued(&img, &con.expr.constant) {
            return Err(Error::InvalidProblem(format!(
                "PSD constraint {ci} is not Hermitian-valued"
            )));
        }
        let d = con.expr.dim;
        let rd = d * d;
        let offset = rows.len();
        let mut block_rows = vec![vec![0.0; n]; rd];
        let mut buf = vec![0.0; rd];
        for (k, m) in img.iter().enumerate() {
            if let Some(m) = m {
                to_coords(m, true, &mut buf);
                for r in 0..rd {
                    block_rows[r][k] = -buf[r];
                }
            }
        }
        to_coords(&con.expr.constant, true, &mut buf);
        rows.extend(block_rows);
        rhs.extend_from_slice(&buf);
        psd.push(PsdCone {
            constraint: ci,
            offset,
            dim: d,
        });
    }

    let m = rows.len();
    let a = DMatrix::from_fn(m, n, |i, j| rows[i][j]);
    let b = DVector::from_vec(rhs);
    let sign = match p.sense {
        Sense::Minimize => 1.0,
        Sense::Maximize => -1.0,
    };
    let obj_img = images(&p.objective, p, &offsets, n);
    let c = DVector::from_fn(n, |k, _| obj_img[k].as_ref().map_or(0.0, |m| sign * m[(0, 0)].re));
    Ok(StandardForm {
        a,
        b,
        c,
        obj_const: p.objective.constant[(0, 0)].re,
        sign,
        block_offsets: offsets,
        block_shapes: p.blocks.iter().map(|b| (b.dim, b.hermitian)).collect(),
        eq_rows,
        nonneg,
        psd,
        zero_end,
        nonneg_end,
    })
}
