use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::ToPrimitive;
use rno_core::conic::SolverConfig;
use rno_core::dynamic_measures::SmoothingConfig;
use rno_core::erasure::*;
use rno_core::qmath::{max_abs, permute_subsystems, rng_from_seed, Channel};

fn tenth(m: i64) -> BigRational {
    BigRational::new(BigInt::from(m), BigInt::from(10))
}

#[test]
fn pmf_goldens() {
    let r = binomial_pmf_bound_exact(10, &tenth(5), 5).unwrap();
    assert!((r.pmf - 252.0 / 1024.0).abs() < 1e-15);
    assert!((r.bound - 0.3540).abs() < 1e-4, "{}", r.bound);
    assert!(r.certified);
    let r = binomial_pmf_bound_exact(20, &tenth(3), 6).unwrap();
    assert!((r.pmf - 0.19164).abs() < 1e-5, "{}", r.pmf);
    assert!((r.bound - 0.2424).abs() < 1e-4, "{}", r.bound);
    assert!(r.certified);
}

#[test]
fn pmf_rejects_violated_preconditions() {
    assert!(binomial_pmf_bound_exact(4, &tenth(5), 2).is_err());
    assert!(binomial_pmf_bound_exact(10, &tenth(5), 6).is_err());
    assert!(binomial_pmf_bound(10, 1.0, 0).is_err());
}

#[test]
fn exact_pmf_matches_float_recurrence() {
    let p = tenth(3);
    for n in [5u64, 17, 40] {
        let mut direct = 0.7f64.powi(n as i32);
        for k in 0..=n {
            if k > 0 {
                direct *= (n - k + 1) as f64 / k as f64 * 0.3 / 0.7;
            }
            let exact = binomial_pmf_exact(n, k, &p).to_f64().unwrap();
            assert!((exact - direct).abs() <= 1e-12 * (1.0 + direct), "n={n} k={k}");
        }
    }
}

#[test]
fn threshold_golden() {
    assert_eq!(threshold_n(0.1, 0.5).unwrap(), 81);
    let s = exact_sum_bound(81, 0.5).unwrap();
    assert!((s - 0.0886).abs() < 5e-4, "{s}");
    assert!(s <= 0.1);
}

#[test]
fn threshold_is_monotone_in_epsilon() {
    let mut last = u64::MAX;
    for k in 1..40 {
        let n = threshold_n(0.01 * k as f64, 0.4).unwrap();
        assert!(n <= last);
        last = n;
    }
}

#[test]
fn exact_sum_goldens() {
    assert!((exact_sum_bound(2, 0.5).unwrap() - 0.5).abs() < 1e-15);
    assert!((exact_sum_bound(1, 0.3).unwrap() - 1.4).abs() < 1e-14);
}

#[test]
fn exact_sum_below_closed_form() {
    for p in [0.1, 0.3, 0.5, 0.7, 0.9] {
        for n in 2..400u64 {
            if let Some(c) = closed_form_bound(n, p) {
                let e = exact_sum_bound(n, p).unwrap();
                assert!(e <= c + 1e-9, "p={p} n={n}: {e} > {c}");
            }
        }
    }
}

#[test]
fn cost_upper_golden() {
    let v = cost_upper_expression(0.5, 0.1).unwrap();
    assert!((v - 80.21f64.log2()).abs() < 1e-3, "{v}");
    assert!(cost_upper_expression(1.0, 0.1).is_none());
}

#[test]
fn hook_formulas() {
    assert_eq!(hook_length_dimension(&[3, 2, 1]), 16);
    assert_eq!(hook_length_dimension(&[4]), 1);
    assert_eq!(hook_content_dimension(&[2], 2), 3);
    assert_eq!(hook_content_dimension(&[1, 1], 2), 1);
    assert_eq!(hook_content_dimension(&[1, 1, 1], 2), 0);
}

#[test]
fn gamma_one_and_gamma_of_equal_channels() {
    let mut rng = rng_from_seed(3);
    let (psi, phi) = sample_mixing_pair(&mut rng, 2, 0.5).unwrap();
    let theta = psi.mix(&phi, 0.5).unwrap();
    let g1 = build_gamma_n(&psi, &theta, 1).unwrap();
    assert!(max_abs(&(g1.choi_ref() - psi.choi_ref())) < 1e-14);
    let g = build_gamma_n(&theta, &theta, 3).unwrap();
    let pow = theta.tensor(&theta).tensor(&theta);
    assert!(max_abs(&(g.choi_ref() - pow.choi_ref())) < 1e-12);
}

#[test]
fn gamma_two_is_average_of_placements() {
    let mut rng = rng_from_seed(4);
    let (psi, phi) = sample_mixing_pair(&mut rng, 2, 0.3).unwrap();
    let theta = psi.mix(&phi, 0.3).unwrap();
    let g = build_gamma_n(&psi, &theta, 2).unwrap();
    let avg = psi.tensor(&theta).mix(&theta.tensor(&psi), 0.5).unwrap();
    assert!(max_abs(&(g.choi_ref() - avg.choi_ref())) < 1e-12);
    let (tp, cp) = g.cptp_residuals();
    assert!(tp < 1e-12 && cp < 1e-12);
}

#[test]
fn gamma_is_symmetric_under_site_permutations() {
    let mut rng = rng_from_seed(5);
    let (psi, phi) = sample_mixing_pair(&mut rng, 2, 0.5).unwrap();
    let theta = psi.mix(&phi, 0.5).unwrap();
    let g = build_gamma_n(&psi, &theta, 3).unwrap();
    // cycle the three (input, output) pairs
    let permuted = permute_subsystems(g.choi_ref(), &[2; 6], &[1, 2, 0, 4, 5, 3]).unwrap();
    assert!(max_abs(&(permuted - g.choi_ref())) < 1e-10);
}

#[test]
fn gamma_guard() {
    let id = Channel::identity(vec![2]);
    assert!(matches!(build_gamma_n(&id, &id, 7), Err(rno_core::Error::TooLarge(_))));
}

#[test]
fn sampled_pairs_satisfy_the_hypothesis() {
    let mut rng = rng_from_seed(6);
    for p in [0.3, 0.5, 0.7] {
        for _ in 0..5 {
            let (psi, phi) = sample_mixing_pair(&mut rng, 2, p).unwrap();
            let theta = psi.mix(&phi, p).unwrap();
            assert!(rno_core::freesets::mio_violation(&theta) < 1e-9);
            let (tp, cp) = phi.cptp_residuals();
            assert!(tp < 1e-9 && cp < 1e-9);
        }
    }
}

#[test]
fn symmetric_and_dense_routes_agree() {
    let mut rng = rng_from_seed(8);
    for n in 1..=4 {
        let (psi, phi) = sample_mixing_pair(&mut rng, 2, 0.5).unwrap();
        let theta = psi.mix(&phi, 0.5).unwrap();
        let dense = choi_distance_dense(&psi, &theta, n).unwrap();
        let sym = choi_distance_symmetric(&psi, &theta, n, 1).unwrap();
        assert!((dense - sym).abs() < 1e-9, "n={n}: {dense} vs {sym}");
    }
}

#[test]
fn bound_chain_on_small_grid() {
    let mut rng = rng_from_seed(9);
    let cfg = SolverConfig::default();
    for p in [0.3, 0.5, 0.7] {
        for n in [1usize, 2, 5] {
            let (psi, phi) = sample_mixing_pair(&mut rng, 2, p).unwrap();
            let r = mixing_deviation_bound(&psi, &phi, p, n, 0.1, n <= 2, &cfg).unwrap();
            assert!(r.measured_choi_trace_distance <= r.exact_sum_bound + 1e-6, "{r:?}");
            if let Some(c) = r.closed_form_bound {
                assert!(r.exact_sum_bound <= c + 1e-6);
            }
            if let Some(dia) = r.measured_diamond_distance {
                assert!(dia <= r.exact_sum_bound + 1e-6, "{r:?}");
            }
        }
    }
}

#[test]
fn mixing_bound_rejects_non_free_theta() {
    let h = rno_core::dynamic_measures::hadamard_channel();
    let id = Channel::identity(vec![2]);
    let r = mixing_deviation_bound(&h, &id, 0.5, 2, 0.1, false, &SolverConfig::default());
    assert!(matches!(r, Err(rno_core::Error::HypothesisViolated(_))));
}

#[test]
fn cost_bounds_for_free_and_resourceful_channels() {
    let cfg = SolverConfig::default();
    let sc = SmoothingConfig { restarts: 4, ..Default::default() };
    let free = destruction_cost_bounds(&Channel::dephasing(2), 0.2, 0.1, &sc, &cfg).unwrap();
    assert!((free.lower_radius - 0.6).abs() < 1e-12);
    let h = destruction_cost_bounds(&rno_core::dynamic_measures::hadamard_channel(), 0.2, 0.1, &sc, &cfg).unwrap();
    assert!(h.upper.is_finite() && h.upper > 0.0);
    assert!(destruction_cost_bounds(&Channel::dephasing(2), 0.1, 0.1, &sc, &cfg).is_err());
    assert!(free.l_prime > 0.0 && free.l_prime <= 1.0 + 1e-9, "{free:?}");
    assert!(free.upper.is_finite() && free.upper >= 0.0);
}
