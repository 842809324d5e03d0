use proptest::prelude::*;
use rno_core::conic::{check_kkt, solve_sdp, Equality, Expr, SdpProblem, SdpStatus, Sense, SolverConfig};
use rno_core::qmath::{c64, eigvalsh, hermitian_part, identity, projector, rng_from_seed, zeros, CMatrix, CVector};
use rand::Rng;

fn plus() -> CMatrix {
    let v = CVector::from_element(2, c64(std::f64::consts::FRAC_1_SQRT_2, 0.0));
    projector(&v)
}

fn herm(a: [[(f64, f64); 2]; 2]) -> CMatrix {
    CMatrix::from_fn(2, 2, |i, j| c64(a[i][j].0, a[i][j].1))
}

/// min tr X s.t. X ⪰ A.
fn trivial(a: &CMatrix) -> SdpProblem {
    let mut p = SdpProblem::new();
    let x = p.add_block("X", a.nrows(), true);
    let xe = p.var(x);
    p.add_psd(xe.clone().minus(&Expr::constant(a.clone())));
    p.set_objective(Sense::Minimize, xe.trace());
    p
}

/// min tr T − 1 s.t. T diagonal, T ⪰ ρ (optionally tr T fixed).
fn diag_robustness(rho: &CMatrix, fixed_trace: Option<f64>) -> SdpProblem {
    let mut p = SdpProblem::new();
    let t = p.add_block("T", 2, true);
    let te = p.var(t);
    p.add_equality(Equality::entries(te.clone(), zeros(2, 2), vec![(0, 1), (1, 0)]));
    p.add_psd(te.clone());
    p.add_psd(te.clone().minus(&Expr::constant(rho.clone())));
    if let Some(v) = fixed_trace {
        p.add_equality(Equality::scalar(te.trace(), v));
    }
    p.set_objective(Sense::Minimize, te.trace().plus_const(&(-identity(1))));
    p
}

/// min tr(C X) over density matrices; the optimum is λ_min(C).
fn ground_energy(c: &CMatrix) -> SdpProblem {
    let mut p = SdpProblem::new();
    let x = p.add_block("X", c.nrows(), true);
    let xe = p.var(x);
    p.add_psd(xe.clone());
    p.add_equality(Equality::scalar(xe.trace(), 1.0));
    p.set_objective(Sense::Minimize, xe.trace_with(c));
    p
}

fn random_hermitian(seed: u64, n: usize) -> CMatrix {
    let mut rng = rng_from_seed(seed);
    let g = CMatrix::from_fn(n, n, |_, _| c64(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
    hermitian_part(&g)
}

fn assert_kkt_agrees(p: &SdpProblem, s: &rno_core::conic::SdpSolution) {
    let r = check_kkt(p, s).unwrap();
    assert!((r.primal_res - s.primal_res).abs() <= 1e-10);
    assert!((r.dual_res - s.dual_res).abs() <= 1e-10);
    assert!((r.gap - s.gap).abs() <= 1e-10);
}

#[test]
fn trivial_sdp_reaches_trace_of_constant() {
    let a = herm([[(0.7, 0.0), (0.2, -0.3)], [(0.2, 0.3), (-0.4, 0.0)]]);
    let p = trivial(&a);
    let s = solve_sdp(&p, &SolverConfig::default()).unwrap();
    assert_eq!(s.status, SdpStatus::Optimal);
    assert!((s.objective - 0.3).abs() < 1e-6, "{}", s.objective);
    assert_kkt_agrees(&p, &s);
}

#[test]
fn diagonal_cover_of_plus_costs_one() {
    let p = diag_robustness(&plus(), None);
    let s = solve_sdp(&p, &SolverConfig::default()).unwrap();
    assert_eq!(s.status, SdpStatus::Optimal);
    assert!((s.objective - 1.0).abs() <= 1e-6);
    assert_kkt_agrees(&p, &s);
}

#[test]
fn trace_below_one_is_infeasible() {
    let p = diag_robustness(&plus(), Some(0.5));
    let s = solve_sdp(&p, &SolverConfig::default()).unwrap();
    assert_eq!(s.status, SdpStatus::Infeasible);
    assert_kkt_agrees(&p, &s);
}

#[test]
fn exact_solution_has_negligible_residuals() {
    let a = herm([[(0.5, 0.0), (0.1, 0.2)], [(0.1, -0.2), (0.3, 0.0)]]);
    let p = trivial(&a);
    let mut s = solve_sdp(&p, &SolverConfig::default()).unwrap();
    s.blocks[0] = a.clone();
    let r = check_kkt(&p, &s).unwrap();
    assert!(r.primal_res <= 1e-10, "{r:?}");
}

#[test]
fn perturbed_block_raises_primal_residual() {
    let a = herm([[(0.7, 0.0), (0.2, -0.3)], [(0.2, 0.3), (-0.4, 0.0)]]);
    let p = trivial(&a);
    let mut s = solve_sdp(&p, &SolverConfig::default()).unwrap();
    s.blocks[0] -= identity(2) * c64(1e-3, 0.0);
    let r = check_kkt(&p, &s).unwrap();
    assert!(r.primal_res >= 1e-4, "{r:?}");
}

#[test]
fn iteration_cap_reports_finite_residuals() {
    let p = diag_robustness(&plus(), None);
    let s = solve_sdp(&p, &SolverConfig::default().with_max_iter(3)).unwrap();
    assert_eq!(s.status, SdpStatus::MaxIter);
    let r = check_kkt(&p, &s).unwrap();
    assert!(r.primal_res.is_finite() && r.dual_res.is_finite() && r.gap.is_finite());
    assert!(r.max() > 1e-7);
}

#[test]
fn mismatched_blocks_are_rejected() {
    let p = diag_robustness(&plus(), None);
    let mut s = solve_sdp(&p, &SolverConfig::default()).unwrap();
    s.blocks.push(identity(3));
    assert!(check_kkt(&p, &s).is_err());
}

#[test]
fn malformed_problem_is_rejected() {
    let mut p = SdpProblem::new();
    let x = p.add_block("X", 2, true);
    let xe = p.var(x);
    p.add_psd(xe.clone());
    p.set_objective(Sense::Minimize, xe);
    assert!(solve_sdp(&p, &SolverConfig::default()).is_err());
}

#[test]
fn solves_are_deterministic() {
    let c = random_hermitian(9, 3);
    let p = ground_energy(&c);
    let a = solve_sdp(&p, &SolverConfig::default()).unwrap();
    let b = solve_sdp(&p, &SolverConfig::default()).unwrap();
    assert_eq!(a.objective.to_bits(), b.objective.to_bits());
    assert_eq!(a.iterations, b.iterations);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn ground_energy_matches_eigensolver(seed in 0u64..10_000, n in 2usize..5) {
        let c = random_hermitian(seed, n);
        let oracle = eigvalsh(&c).into_iter().fold(f64::INFINITY, f64::min);
        let p = ground_energy(&c);
        let s = solve_sdp(&p, &SolverConfig::default()).unwrap();
        prop_assert_eq!(s.status, SdpStatus::Optimal);
        prop_assert!((s.objective - oracle).abs() <= 1e-6, "{} vs {}", s.objective, oracle);
        // weak duality within the gap tolerance
        prop_assert!((s.objective - s.dual_objective).abs() <= 1e-7 * (1.0 + s.objective.abs() + s.dual_objective.abs()));
    }

    #[test]
    fn optimum_scales_with_objective(seed in 0u64..10_000, scale in 0.1f64..10.0) {
        let c = random_hermitian(seed, 3);
        let cfg = SolverConfig::default().with_tolerance(1e-9);
        let base = solve_sdp(&ground_energy(&c), &cfg).unwrap();
        let scaled = solve_sdp(&ground_energy(&(&c * c64(scale, 0.0))), &cfg).unwrap();
        prop_assert!((scaled.objective - scale * base.objective).abs() <= 1e-7 * (1.0 + scale), "{} vs {}", scaled.objective, scale * base.objective);
    }
}
