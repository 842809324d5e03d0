//! Homogeneous self-dual embedding solved by over-relaxed ADMM
//! (affine projection via one cached Cholesky factor, cone projections by
//! eigendecomposition).

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use super::problem::SdpProblem;
use super::standard::{compile, from_coords, to_coords, Part, StandardForm};
use crate::error::{Error, Result};
use crate::qmath::{c64, max_abs, zeros, CMatrix};

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub tolerance: f64,
    pub max_iter: usize,
    /// Recorded in reports. The iteration itself is deterministic and draws no randomness.
    pub seed: u64,
    /// Over-relaxation factor in (0, 2).
    pub relaxation: f64,
    pub check_every: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            tolerance: 1e-7,
            max_iter: 200_000,
            seed: 0,
            relaxation: 1.6,
            check_every: 10,
        }
    }
}

impl SolverConfig {
    pub fn with_tolerance(mut self, tol: f64) -> Self {
        self.tolerance = tol;
        self
    }

    pub fn with_max_iter(mut self, n: usize) -> Self {
        self.max_iter = n;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum SdpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    MaxIter,
}

/// Residual triple shared by the solver report and [`check_kkt`](super::check_kkt).
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Residuals {
    pub primal_res: f64,
    pub dual_res: f64,
    pub gap: f64,
}

impl Residuals {
    pub fn max(&self) -> f64 {
        self.primal_res.max(self.dual_res).max(self.gap)
    }
}

/// Solution of an [`SdpProblem`].
///
/// For `Infeasible` the dual fields hold a certificate normalized so that the
/// dual objective of the constraint data equals one; for `Unbounded` the
/// blocks hold an improving primal ray.
#[derive(Debug, Clone, PartialEq)]
pub struct SdpSolution {
    pub status: SdpStatus,
    pub objective: f64,
    pub dual_objective: f64,
    pub blocks: Vec<CMatrix>,
    /// One matrix per equality, supported on the constrained entries.
    pub eq_duals: Vec<CMatrix>,
    /// One matrix per PSD constraint (1×1 for scalar inequalities).
    pub psd_duals: Vec<CMatrix>,
    pub primal_res: f64,
    pub dual_res: f64,
    pub gap: f64,
    pub iterations: usize,
}

impl SdpSolution {
    pub fn residuals(&self) -> Residuals {
        Residuals {
            primal_res: self.primal_res,
            dual_res: self.dual_res,
            gap: self.gap,
        }
    }

    pub fn is_optimal(&self) -> bool {
        self.status == SdpStatus::Optimal
    }

    /// Turns anything but `Optimal` into a [`Error::SolverError`].
    pub fn require_optimal(self) -> Result<Self> {
        if self.is_optimal() {
            Ok(self)
        } else {
            Err(Error::SolverError {
                message: format!("solver finished with status {:?}", self.status),
                primal_res: self.primal_res,
                dual_res: self.dual_res,
                gap: self.gap,
            })
        }
    }
}

struct Scaled {
    a: DMatrix<f64>,
    b: DVector<f64>,
    c: DVector<f64>,
    d: DVector<f64>,
    e: DVector<f64>,
    sigma_b: f64,
    sigma_c: f64,
}

fn equilibrate(sf: &StandardForm) -> Scaled {
    let (m, n) = sf.a.shape();
    let mut a = sf.a.clone();
    let mut d = DVector::from_element(m, 1.0);
    let mut e = DVector::from_element(n, 1.0);
    for _ in 0..25 {
        let mut rn = vec![0.0f64; m];
        let mut cn = vec![0.0f64; n];
        for j in 0..n {
            for i in 0..m {
                let v = a[(i, j)].abs();
                rn[i] = rn[i].max(v);
                cn[j] = cn[j].max(v);
            }
        }
        for cone in &sf.psd {
            let r = cone.offset..cone.offset + cone.dim * cone.dim;
            let mx = rn[r.clone()].iter().cloned().fold(0.0, f64::max);
            rn[r].iter_mut().for_each(|x| *x = mx);
        }
        let mut done = true;
        let ds: Vec<f64> = rn
            .iter()
            .enumerate()
            .map(|(i, &r)| {
                let s = if r > 1e-12 { 1.0 / r.sqrt() } else { 1.0 };
                let s = (d[i] * s).clamp(1e-4, 1e4) / d[i];
                if (s - 1.0).abs() > 1e-3 {
                    done = false;
                }
                s
            })
            .collect();
        let es: Vec<f64> = cn
            .iter()
            .enumerate()
            .map(|(j, &c)| {
                let s = if c > 1e-12 { 1.0 / c.sqrt() } else { 1.0 };
                let s = (e[j] * s).clamp(1e-4, 1e4) / e[j];
                if (s - 1.0).abs() > 1e-3 {
                    done = false;
                }
                s
            })
            .collect();
        for j in 0..n {
            for i in 0..m {
                a[(i, j)] *= ds[i] * es[j];
            }
        }
        for i in 0..m {
            d[i] *= ds[i];
        }
        for j in 0..n {
            e[j] *= es[j];
        }
        if done {
            break;
        }
    }
    let db = sf.b.component_mul(&d);
    let ec = sf.c.component_mul(&e);
    let sigma_b = 1.0 / db.amax().max(1e-4);
    let sigma_c = 1.0 / ec.amax().max(1e-4);
    Scaled {
        a,
        b: db * sigma_b,
        c: ec * sigma_c,
        d,
        e,
        sigma_b,
        sigma_c,
    }
}

/// Projection of the `y` part onto the dual cone `{free}ᶻ × ℝ₊ˡ × PSD`.
fn project_dual_cone(sf: &StandardForm, y: &mut DVector<f64>) {
    for i in sf.zero_end..sf.nonneg_end {
        y[i] = y[i].max(0.0);
    }
    for cone in &sf.psd {
        let r = cone.offset..cone.offset + cone.dim * cone.dim;
        project_psd_coords(&mut y.as_mut_slice()[r], cone.dim);
    }
}

fn project_psd_coords(v: &mut [f64], dim: usize) {
    let m = from_coords(v, dim, true);
    let eig = m.symmetric_eigen();
    if eig.eigenvalues.iter().all(|&l| l >= 0.0) {
        return;
    }
    let mut out = zeros(dim, dim);
    for (k, &l) in eig.eigenvalues.iter().enumerate() {
        if l > 0.0 {
            let col = eig.eigenvectors.column(k);
            out += (col * col.adjoint()) * c64(l, 0.0);
        }
    }
    to_coords(&out, true, v);
}

/// Matrix-level residuals computed from the standard form. `x`, `y`, `s` are unscaled.
fn certify_optimal(sf: &StandardForm, x: &DVector<f64>, y: &DVector<f64>) -> (Residuals, f64, f64) {
    let ax = &sf.a * x;
    let r = &ax - &sf.b;
    let mut eq_viol = 0.0f64;
    let mut bnorm = 0.0f64;
    let mut k = 0;
    while k < sf.zero_end {
        let row = sf.eq_rows[k];
        if row.part == Part::Re && k + 1 < sf.zero_end && {
            let nx = sf.eq_rows[k + 1];
            nx.part == Part::Im && nx.eq == row.eq && nx.i == row.i && nx.j == row.j
        } {
            eq_viol = eq_viol.max(r[k].hypot(r[k + 1]));
            bnorm = bnorm.max(sf.b[k].hypot(sf.b[k + 1]));
            k += 2;
        } else {
            eq_viol = eq_viol.max(r[k].abs());
            bnorm = bnorm.max(sf.b[k].abs());
            k += 1;
        }
    }
    let mut cone_viol = 0.0f64;
    for &(_, row) in &sf.nonneg {
        // H(X) = b − Ax
        cone_viol = cone_viol.max(r[row]);
        bnorm = bnorm.max(sf.b[row].abs());
    }
    let mut dual_cone_viol = 0.0f64;
    for &(_, row) in &sf.nonneg {
        dual_cone_viol = dual_cone_viol.max(-y[row]);
    }
    for cone in &sf.psd {
        let rg = cone.offset..cone.offset + cone.dim * cone.dim;
        let h: Vec<f64> = rg.clone().map(|i| -r[i]).collect();
        let hm = from_coords(&h, cone.dim, true);
        cone_viol = cone_viol.max(-crate::qmath::min_eigenvalue(&hm));
        let b0 = from_coords(&sf.b.as_slice()[rg.clone()], cone.dim, true);
        bnorm = bnorm.max(max_abs(&b0));
        let z = from_coords(&y.as_slice()[rg], cone.dim, true);
        dual_cone_viol = dual_cone_viol.max(-crate::qmath::min_eigenvalue(&z));
    }
    let primal_res = eq_viol.max(cone_viol).max(0.0) / (1.0 + bnorm);

    let grad = &sf.c + sf.a.tr_mul(y);
    let (gmax, cnorm) = block_max(sf, &grad, &sf.c);
    let dual_res = gmax.max(dual_cone_viol).max(0.0) / (1.0 + cnorm);

    let f = sf.c.dot(x);
    let dval = -sf.b.dot(y);
    let gap = (f - dval).abs() / (1.0 + f.abs() + dval.abs());
    (
        Residuals {
            primal_res,
            dual_res,
            gap,
        },
        f,
        dval,
    )
}

/// Max entry of the block matrices of `g`, and of `c`.
fn block_max(sf: &StandardForm, g: &DVector<f64>, c: &DVector<f64>) -> (f64, f64) {
    let mut gm = 0.0f64;
    let mut cm = 0.0f64;
    for (bi, &off) in sf.block_offsets.iter().enumerate() {
        let (dim, herm) = sf.block_shapes[bi];
        let rd = super::standard::real_dim(dim, herm);
        gm = gm.max(max_abs(&from_coords(&g.as_slice()[off..off + rd], dim, herm)));
        cm = cm.max(max_abs(&from_coords(&c.as_slice()[off..off + rd], dim, herm)));
    }
    (gm, cm)
}

fn certify_infeasible(sf: &StandardForm, y: &DVector<f64>) -> Residuals {
    let mut cone_viol = 0.0f64;
    for &(_, row) in &sf.nonneg {
        cone_viol = cone_viol.max(-y[row]);
    }
    for cone in &sf.psd {
        let rg = cone.offset..cone.offset + cone.dim * cone.dim;
        let z = from_coords(&y.as_slice()[rg], cone.dim, true);
        cone_viol = cone_viol.max(-crate::qmath::min_eigenvalue(&z));
    }
    let aty = sf.a.tr_mul(y);
    let (gm, _) = block_max(sf, &aty, &aty);
    Residuals {
        primal_res: cone_viol.max(0.0),
        dual_res: gm,
        gap: (1.0 + sf.b.dot(y)).abs(),
    }
}

fn certify_unbounded(sf: &StandardForm, x: &DVector<f64>) -> Residuals {
    let ax = &sf.a * x;
    let mut viol = 0.0f64;
    for k in 0..sf.zero_end {
        viol = viol.max(ax[k].abs());
    }
    for &(_, row) in &sf.nonneg {
        viol = viol.max(ax[row]);
    }
    for cone in &sf.psd {
        let rg = cone.offset..cone.offset + cone.dim * cone.dim;
        let h: Vec<f64> = rg.map(|i| -ax[i]).collect();
        viol = viol.max(-crate::qmath::min_eigenvalue(&from_coords(&h, cone.dim, true)));
    }
    Residuals {
        primal_res: viol.max(0.0),
        dual_res: 0.0,
        gap: (1.0 + sf.c.dot(x)).abs(),
    }
}

/// Solves `p`; see [`SdpSolution`] for the meaning of each status.
pub fn solve_sdp(p: &SdpProblem, cfg: &SolverConfig) -> Result<SdpSolution> {
    if !(cfg.tolerance > 0.0) || !(cfg.relaxation > 0.0 && cfg.relaxation < 2.0) {
        return Err(Error::InvalidProblem("tolerance must be positive and relaxation in (0, 2)".into()));
    }
    let sf = compile(p)?;
    let (m, n) = sf.a.shape();
    let sc = equilibrate(&sf);
    let tol = cfg.tolerance;

    // K = I + ÃᵀÃ
    let mut k = sc.a.tr_mul(&sc.a);
    for i in 0..n {
        k[(i, i)] += 1.0;
    }
    let chol: Cholesky<f64, Dyn> = Cholesky::new(k)
        .ok_or_else(|| Error::InvalidProblem("normal matrix is not positive definite".into()))?;
    let msolve = |ax: &DVector<f64>, ay: &DVector<f64>| -> (DVector<f64>, DVector<f64>) {
        let rhs = ax - sc.a.tr_mul(ay);
        let x = chol.solve(&rhs);
        let y = ay + &sc.a * &x;
        (x, y)
    };
    let (gx, gy) = msolve(&sc.c, &sc.b);
    let hg = sc.c.dot(&gx) + sc.b.dot(&gy);

    let mut ux = DVector::zeros(n);
    let mut uy = DVector::zeros(m);
    let mut ut = 1.0f64;
    let mut vx = DVector::zeros(n);
    let mut vy = DVector::zeros(m);
    let mut vt = 1.0f64;
    let alpha = cfg.relaxation;

    let a0 = &sf.a;
    let bnorm = sf.b.amax();
    let cnorm = sf.c.amax();

    let mut best: Option<(f64, DVector<f64>, DVector<f64>)> = None;
    let mut iterations = cfg.max_iter;
    let mut outcome: Option<SdpStatus> = None;
    let mut cert_y = DVector::zeros(m);
    let mut cert_x = DVector::zeros(n);
    let mut sol_x = DVector::zeros(n);
    let mut sol_y = DVector::zeros(m);

    for it in 0..cfg.max_iter {
        let wx = &ux + &vx;
        let wy = &uy + &vy;
        let wt = ut + vt;
        let (zx, zy) = msolve(&wx, &wy);
        let tt = (wt + sc.c.dot(&zx) + sc.b.dot(&zy)) / (1.0 + hg);
        let tx = &zx - &gx * tt;
        let ty = &zy - &gy * tt;

        let rx = &tx * alpha + &ux * (1.0 - alpha);
        let ry = &ty * alpha + &uy * (1.0 - alpha);
        let rt = alpha * tt + (1.0 - alpha) * ut;

        let nx = &rx - &vx;
        let mut ny = &ry - &vy;
        project_dual_cone(&sf, &mut ny);
        let nt = (rt - vt).max(0.0);

        vx += &nx - &rx;
        vy += &ny - &ry;
        vt += nt - rt;
        ux = nx;
        uy = ny;
        ut = nt;

        if (it + 1) % cfg.check_every != 0 && it + 1 != cfg.max_iter {
            continue;
        }
        // unscale: x = E x̃/σ_b, y = D ỹ/σ_c, s = D⁻¹ s̃/σ_b
        if ut > 1e-12 {
            let x = ux.component_mul(&sc.e) / (ut * sc.sigma_b);
            let y = uy.component_mul(&sc.d) / (ut * sc.sigma_c);
            let s = vy.component_div(&sc.d) / (ut * sc.sigma_b);
            let pr = (a0 * &x + &s - &sf.b).amax() / (1.0 + bnorm);
            let dr = (&sf.c + a0.tr_mul(&y)).amax() / (1.0 + cnorm);
            let f = sf.c.dot(&x);
            let dv = -sf.b.dot(&y);
            let gp = (f - dv).abs() / (1.0 + f.abs() + dv.abs());
            let score = pr.max(dr).max(gp);
            if best.as_ref().map_or(true, |b| score < b.0) {
                best = Some((score, x.clone(), y.clone()));
            }
            if score <= tol {
                let (res, _, _) = certify_optimal(&sf, &x, &y);
                if res.max() <= tol {
                    sol_x = x;
                    sol_y = y;
                    outcome = Some(SdpStatus::Optimal);
                    iterations = it + 1;
                    break;
                }
            }
        }
        // infeasibility: direction y with bᵀy < 0, Aᵀy ≈ 0
        let ydir = uy.component_mul(&sc.d);
        let by = sf.b.dot(&ydir);
        if by < 0.0 {
            let ratio = a0.tr_mul(&ydir).amax() / (-by);
            if ratio <= tol {
                let y = ydir / (-by);
                if certify_infeasible(&sf, &y).max() <= tol {
                    cert_y = y;
                    outcome = Some(SdpStatus::Infeasible);
                    iterations = it + 1;
                    break;
                }
            }
        }
        let xdir = ux.component_mul(&sc.e);
        let cx = sf.c.dot(&xdir);
        if cx < 0.0 {
            let sdir = vy.component_div(&sc.d);
            let ratio = (a0 * &xdir + &sdir).amax() / (-cx);
            if ratio <= tol {
                let x = xdir / (-cx);
                if certify_unbounded(&sf, &x).max() <= tol {
                    cert_x = x;
                    outcome = Some(SdpStatus::Unbounded);
                    iterations = it + 1;
                    break;
                }
            }
        }
    }

    let status = outcome.unwrap_or(SdpStatus::MaxIter);
    if status == SdpStatus::MaxIter {
        if let Some((_, x, y)) = best {
            sol_x = x;
            sol_y = y;
        }
    }
    Ok(match status {
        SdpStatus::Optimal | SdpStatus::MaxIter => {
            let (res, f, dv) = certify_optimal(&sf, &sol_x, &sol_y);
            assemble(p, &sf, status, &sol_x, &sol_y, res, sf.sign * f + sf.obj_const, sf.sign * dv + sf.obj_const, iterations)
        }
        SdpStatus::Infeasible => {
            let res = certify_infeasible(&sf, &cert_y);
            let x = DVector::zeros(n);
            assemble(p, &sf, status, &x, &cert_y, res, f64::INFINITY * sf.sign, f64::INFINITY * sf.sign, iterations)
        }
        SdpStatus::Unbounded => {
            let res = certify_unbounded(&sf, &cert_x);
            let y = DVector::zeros(m);
            assemble(p, &sf, status, &cert_x, &y, res, -f64::INFINITY * sf.sign, -f64::INFINITY * sf.sign, iterations)
        }
    })
}

#[allow(clippy::too_many_arguments)]
fn assemble(
    p: &SdpProblem,
    sf: &StandardForm,
    status: SdpStatus,
    x: &DVector<f64>,
    y: &DVector<f64>,
    res: Residuals,
    objective: f64,
    dual_objective: f64,
    iterations: usize,
) -> SdpSolution {
    let blocks = sf
        .block_offsets
        .iter()
        .zip(&sf.block_shapes)
        .map(|(&off, &(dim, herm))| {
            let rd = super::standard::real_dim(dim, herm);
            from_coords(&x.as_slice()[off..off + rd], dim, herm)
        })
        .collect();
    let mut eq_duals: Vec<CMatrix> = p
        .equalities
        .iter()
        .map(|e| zeros(e.expr.dim, e.expr.dim))
        .collect();
    let mut k = 0;
    while k < sf.zero_end {
        let row = sf.eq_rows[k];
        let (re, im, step) = if row.part == Part::Re
            && k + 1 < sf.zero_end
            && sf.eq_rows[k + 1].part == Part::Im
            && sf.eq_rows[k + 1].eq == row.eq
            && sf.eq_rows[k + 1].i == row.i
            && sf.eq_rows[k + 1].j == row.j
        {
            (y[k], y[k + 1], 2)
        } else if row.part == Part::Re {
            (y[k], 0.0, 1)
        } else {
            (0.0, y[k], 1)
        };
        let mu = &mut eq_duals[row.eq];
        if row.mirrored {
            let v = c64(-re / 2.0, -im / 2.0);
            mu[(row.i, row.j)] = v;
            mu[(row.j, row.i)] = v.conj();
        } else {
            mu[(row.i, row.j)] = c64(-re, -im);
        }
        k += step;
    }
    let mut psd_duals: Vec<CMatrix> = p.psd.iter().map(|c| zeros(c.expr.dim, c.expr.dim)).collect();
    for &(ci, row) in &sf.nonneg {
        psd_duals[ci][(0, 0)] = c64(y[row], 0.0);
    }
    for cone in &sf.psd {
        let rg = cone.offset..cone.offset + cone.dim * cone.dim;
        psd_duals[cone.constraint] = from_coords(&y.as_slice()[rg], cone.dim, true);
    }
    SdpSolution {
        status,
        objective,
        dual_objective,
        blocks,
        eq_duals,
        psd_duals,
        primal_res: res.primal_res,
        dual_res: res.dual_res,
        gap: res.gap,
        iterations,
    }
}
