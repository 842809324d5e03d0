//! Residual recomputation from the problem data and a returned solution,
//! using only expression evaluation and adjoints (no standard-form data).

use super::problem::{Expr, Sense, SdpProblem};
use super::solver::{Residuals, SdpSolution, SdpStatus};
use crate::error::{Error, Result};
use crate::qmath::{hermitian_part, max_abs, min_eigenvalue, zeros, CMatrix};

fn adjoint_into(expr: &Expr, y: &CMatrix, grads: &mut [CMatrix], scale: f64) {
    for (b, map) in &expr.terms {
        grads[b.0] += map.adjoint_apply(y) * crate::qmath::c64(scale, 0.0);
    }
}

fn masked(m: &CMatrix, entries: &[(usize, usize)]) -> CMatrix {
    let mut out = zeros(m.nrows(), m.ncols());
    for &(i, j) in entries {
        out[(i, j)] = m[(i, j)];
    }
    out
}

fn re_inner(a: &CMatrix, b: &CMatrix) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x.conj() * y).re).sum()
}

/// Recomputes `(primal_res, dual_res, gap)` for `s` as a solution of `p`.
///
/// For `Optimal`/`MaxIter` these are the relative KKT residuals; for
/// `Infeasible` they measure the certificate (dual-cone violation, size of
/// its adjoint, and distance of its normalized value from one); for
/// `Unbounded` they measure the primal ray.
pub fn check_kkt(p: &SdpProblem, s: &SdpSolution) -> Result<Residuals> {
    if s.blocks.len() != p.blocks.len()
        || s.eq_duals.len() != p.equalities.len()
        || s.psd_duals.len() != p.psd.len()
    {
        return Err(Error::InvalidSolution("solution does not match the problem's blocks and constraints".into()));
    }
    for (x, spec) in s.blocks.iter().zip(&p.blocks) {
        if x.nrows() != spec.dim || x.ncols() != spec.dim {
            return Err(Error::InvalidSolution(format!("block '{}' has the wrong size", spec.name)));
        }
    }
    for (mu, e) in s.eq_duals.iter().zip(&p.equalities) {
        if mu.nrows() != e.expr.dim || mu.ncols() != e.expr.dim {
            return Err(Error::InvalidSolution("equality multiplier has the wrong size".into()));
        }
    }
    for (z, c) in s.psd_duals.iter().zip(&p.psd) {
        if z.nrows() != c.expr.dim || z.ncols() != c.expr.dim {
            return Err(Error::InvalidSolution("cone multiplier has the wrong size".into()));
        }
    }
    let sign = match p.sense {
        Sense::Minimize => 1.0,
        Sense::Maximize => -1.0,
    };
    let x = &s.blocks;
    let with_objective = !matches!(s.status, SdpStatus::Infeasible);
    let homogeneous = matches!(s.status, SdpStatus::Unbounded);

    // primal feasibility
    let mut primal = 0.0f64;
    let mut bnorm = 0.0f64;
    for e in &p.equalities {
        let val = e.expr.eval(x);
        let lin = &val - &e.expr.constant;
        let target = &e.target - &e.expr.constant;
        for (i, j) in e.entry_list() {
            let v = if homogeneous { lin[(i, j)] } else { val[(i, j)] - e.target[(i, j)] };
            primal = primal.max(v.norm());
            bnorm = bnorm.max(target[(i, j)].norm());
        }
    }
    for c in &p.psd {
        let val = c.expr.eval(x);
        let h = if homogeneous { &val - &c.expr.constant } else { val };
        primal = primal.max(-min_eigenvalue(&hermitian_part(&h)));
        bnorm = bnorm.max(max_abs(&c.expr.constant));
    }

    // stationarity and dual cone
    let mut grads: Vec<CMatrix> = p.blocks.iter().map(|b| zeros(b.dim, b.dim)).collect();
    let mut obj_grads: Vec<CMatrix> = grads.clone();
    let one = CMatrix::from_element(1, 1, crate::qmath::c64(1.0, 0.0));
    adjoint_into(&p.objective, &one, &mut obj_grads, sign);
    if with_objective {
        for (g, o) in grads.iter_mut().zip(&obj_grads) {
            *g += o;
        }
    }
    let mut dual_value = 0.0;
    for (e, mu) in p.equalities.iter().zip(&s.eq_duals) {
        let list = e.entry_list();
        let mu = masked(mu, &list);
        adjoint_into(&e.expr, &mu, &mut grads, -1.0);
        let t = masked(&(&e.target - &e.expr.constant), &list);
        dual_value += re_inner(&mu, &t);
    }
    let mut dual_cone = 0.0f64;
    for (c, z) in p.psd.iter().zip(&s.psd_duals) {
        adjoint_into(&c.expr, z, &mut grads, -1.0);
        dual_cone = dual_cone.max(-min_eigenvalue(&hermitian_part(z)));
        dual_value -= re_inner(z, &c.expr.constant);
    }
    let real_part = |g: &CMatrix, herm: bool| -> f64 {
        if herm {
            max_abs(g)
        } else {
            g.iter().map(|z| z.re.abs()).fold(0.0, f64::max)
        }
    };
    let mut gmax = 0.0f64;
    let mut cnorm = 0.0f64;
    for ((g, o), spec) in grads.iter().zip(&obj_grads).zip(&p.blocks) {
        gmax = gmax.max(real_part(g, spec.hermitian));
        cnorm = cnorm.max(real_part(o, spec.hermitian));
    }
    let lin_obj = |x: &[CMatrix]| sign * (p.objective.eval(x)[(0, 0)].re - p.objective.constant[(0, 0)].re);

    Ok(match s.status {
        SdpStatus::Optimal | SdpStatus::MaxIter => {
            let f = lin_obj(x);
            Residuals {
                primal_res: primal.max(0.0) / (1.0 + bnorm),
                dual_res: gmax.max(dual_cone).max(0.0) / (1.0 + cnorm),
                gap: (f - dual_value).abs() / (1.0 + f.abs() + dual_value.abs()),
            }
        }
        SdpStatus::Infeasible => Residuals {
            primal_res: dual_cone.max(0.0),
            dual_res: gmax,
            gap: (dual_value - 1.0).abs(),
        },
        SdpStatus::Unbounded => Residuals {
            primal_res: primal.max(0.0),
            dual_res: 0.0,
            gap: (lin_obj(x) + 1.0).abs(),
        },
    })
}
