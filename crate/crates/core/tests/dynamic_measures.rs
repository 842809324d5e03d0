use rno_core::conic::SolverConfig;
use rno_core::dynamic_measures::*;
use rno_core::freesets::{mio_violation, FreeSetModel};
use rno_core::qmath::{c64, kron, ket, random_channel, rng_from_seed, trace_norm, Channel, CMatrix};
use rno_core::ChannelMembership;

fn cfg() -> SolverConfig {
    SolverConfig::default()
}

fn pauli_z() -> CMatrix {
    CMatrix::from_fn(2, 2, |i, j| if i != j { c64(0.0, 0.0) } else if i == 0 { c64(1.0, 0.0) } else { c64(-1.0, 0.0) })
}

/// Output distance for the maximally entangled input, computed straight from Kraus actions.
fn bell_input_distance(e1: &Channel, e2: &Channel) -> f64 {
    let d = e1.in_dim();
    let mut omega = rno_core::qmath::zeros(d * d, 1);
    for i in 0..d {
        omega[(i * d + i, 0)] = c64(1.0 / (d as f64).sqrt(), 0.0);
    }
    let rho = &omega * omega.adjoint();
    let lift = |e: &Channel| {
        let mut out = rno_core::qmath::zeros(d * e.out_dim(), d * e.out_dim());
        for k in e.kraus() {
            let l = kron(&rno_core::qmath::identity(d), k);
            out += &l * &rho * l.adjoint();
        }
        out
    };
    0.5 * trace_norm(&(lift(e1) - lift(e2))).unwrap()
}

#[test]
fn diamond_distance_of_equal_channels_is_zero() {
    let e = Channel::depolarizing(2, 0.3).unwrap();
    let r = diamond_distance(&e, &e, &cfg()).unwrap();
    assert!(r.value.abs() < 1e-6, "{}", r.value);
}

#[test]
fn identity_versus_pauli_z_is_perfectly_distinguishable() {
    let z = Channel::unitary(pauli_z(), vec![2]).unwrap();
    let r = diamond_distance(&Channel::identity(vec![2]), &z, &cfg()).unwrap();
    assert!((r.value - 1.0).abs() < 1e-6, "{}", r.value);
}

#[test]
fn identity_versus_dephasing_matches_entangled_input() {
    let id = Channel::identity(vec![2]);
    let deph = Channel::dephasing(2);
    let witness = bell_input_distance(&id, &deph);
    assert!((witness - 0.5).abs() < 1e-12);
    let r = diamond_distance(&id, &deph, &cfg()).unwrap();
    assert!(r.value >= witness - 1e-6);
    // A convex combination argument caps it at ½ as well: dephasing = ½ id + ½ Z.
    assert!((r.value - 0.5).abs() < 1e-6, "{}", r.value);
}

#[test]
fn diamond_distance_dominates_sampled_lower_bound() {
    let mut rng = rng_from_seed(7);
    for _ in 0..5 {
        let a = random_channel(&mut rng, &[2], &[2], None);
        let b = random_channel(&mut rng, &[2], &[2], None);
        let sdp = diamond_distance(&a, &b, &cfg()).unwrap();
        let lower = diamond_lower_bound(&a, &b, 64, 3).unwrap();
        assert!(sdp.value >= lower - 1e-6, "{} < {}", sdp.value, lower);
        assert!(bell_input_distance(&a, &b) <= sdp.value + 1e-6);
    }
}

#[test]
fn diamond_distance_rejects_mismatched_shapes() {
    let a = Channel::identity(vec![2]);
    let b = Channel::identity(vec![3]);
    assert!(diamond_distance(&a, &b, &cfg()).is_err());
}

#[test]
fn stabilizing_with_a_channel_does_not_increase_distance() {
    let mut rng = rng_from_seed(11);
    for _ in 0..3 {
        let q = random_channel(&mut rng, &[2], &[2], None);
        let n1 = random_channel(&mut rng, &[2], &[2], None);
        let n2 = random_channel(&mut rng, &[2], &[2], None);
        let single = diamond_distance(&n1, &n2, &cfg()).unwrap().value;
        let joint = diamond_distance(&q.tensor(&n1), &q.tensor(&n2), &cfg()).unwrap().value;
        assert!(joint <= single + 1e-5, "{joint} > {single}");
    }
}

#[test]
fn hadamard_and_plus_replacement_have_half_robustness() {
    for e in [hadamard_channel(), plus_replacement_channel(2)] {
        let r = channel_rno_robustness(&e, &cfg()).unwrap();
        assert!((r.p_star - 0.5).abs() < 1e-4, "{}", r.p_star);
        assert!(r.companion.is_some());
        assert!(mio_violation(&r.resulting_free) < 1e-6);
    }
}

#[test]
fn explicit_minus_replacement_companion_makes_plus_replacement_free() {
    let minus = {
        let v = (ket(2, 0) - ket(2, 1)) * c64(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        rno_core::DensityMatrix::from_pure(&v, vec![2]).unwrap()
    };
    let g = Channel::replacement(&minus, vec![2]);
    let mixed = plus_replacement_channel(2).mix(&g, 0.5).unwrap();
    assert!(mio_violation(&mixed) < 1e-12);
}

#[test]
fn free_channels_have_unit_robustness() {
    let mut rng = rng_from_seed(5);
    let m = FreeSetModel::incoherent(2).unwrap();
    for d in [2usize, 3] {
        for _ in 0..3 {
            let e = random_mio_channel(&mut rng, d);
            assert!(is_mio(&e, 1e-9));
            let r = channel_rno_robustness(&e, &cfg()).unwrap();
            assert_eq!(r.p_star, 1.0);
            assert!((r.sdp_value - 1.0).abs() < 1e-6, "{}", r.sdp_value);
            assert!(r.companion.is_none());
        }
    }
    assert_eq!(
        m.is_rno_channel(&Channel::dephasing(2), 1e-9).unwrap(),
        ChannelMembership::Free
    );
}

#[test]
fn robustness_does_not_drop_under_free_pre_and_post_processing() {
    let mut rng = rng_from_seed(21);
    let e = random_channel(&mut rng, &[2], &[2], None);
    let base = channel_rno_robustness(&e, &cfg()).unwrap().p_star;
    let base_f = channel_divergence_to_free(&e, &cfg()).unwrap().value;
    for _ in 0..3 {
        let m1 = random_mio_channel(&mut rng, 2);
        let m2 = random_mio_channel(&mut rng, 2);
        let composed = m1.then(&e).unwrap().then(&m2).unwrap();
        let l = channel_rno_robustness(&composed, &cfg()).unwrap().p_star;
        let f = channel_divergence_to_free(&composed, &cfg()).unwrap().value;
        assert!(l >= base - 1e-5, "{l} < {base}");
        assert!(f <= base_f + 1e-5, "{f} > {base_f}");
    }
}

#[test]
fn divergence_vanishes_on_free_channels_only() {
    let deph = channel_divergence_to_free(&Channel::dephasing(2), &cfg()).unwrap();
    assert!(deph.value.abs() < 1e-6, "{}", deph.value);
    let h = channel_divergence_to_free(&hadamard_channel(), &cfg()).unwrap();
    assert!(h.value > 0.1, "{}", h.value);
}

#[test]
fn divergence_is_stable_under_tensoring_with_a_free_channel() {
    let mut rng = rng_from_seed(2);
    let e = hadamard_channel();
    let f = channel_divergence_to_free(&e, &cfg()).unwrap().value;
    let m = random_mio_channel(&mut rng, 2);
    let joint = channel_divergence_to_free(&e.tensor(&m), &cfg()).unwrap().value;
    assert!((joint - f).abs() < 1e-5, "{joint} vs {f}");
}

#[test]
fn smoothing_at_zero_radius_reproduces_robustness() {
    let e = hadamard_channel();
    let sc = SmoothingConfig::default();
    let s = smoothed_channel_robustness(&e, 0.0, &sc, &cfg()).unwrap();
    let l = channel_rno_robustness(&e, &cfg()).unwrap().p_star;
    assert!((s.upper_estimate - l).abs() < 1e-6);
    assert!(s.is_upper_estimate);
}

#[test]
fn smoothing_sweep_is_nonincreasing() {
    let e = hadamard_channel();
    let sc = SmoothingConfig::default();
    let sweep = smoothed_channel_robustness_sweep(&e, &[0.0, 0.05, 0.1, 0.2], &sc, &cfg()).unwrap();
    for w in sweep.windows(2) {
        assert!(w[1].upper_estimate <= w[0].upper_estimate + 1e-12);
    }
    for s in &sweep {
        assert!(s.witness_distance <= s.epsilon + 1e-9);
    }
}

#[test]
fn smoothing_leaves_the_free_set_when_the_ball_allows_it() {
    let e = Channel::dephasing(2);
    let sc = SmoothingConfig::default();
    let s = smoothed_channel_robustness(&e, 0.1, &sc, &cfg()).unwrap();
    assert!(s.upper_estimate < 1.0 - 1e-3, "{}", s.upper_estimate);
}

#[test]
fn smoothing_rejects_bad_radius() {
    let e = Channel::dephasing(2);
    let sc = SmoothingConfig::default();
    assert!(smoothed_channel_robustness(&e, 1.0, &sc, &cfg()).is_err());
    assert!(smoothed_channel_robustness(&e, -0.1, &sc, &cfg()).is_err());
}
