use rno_core::comms::*;
use rno_core::conic::SolverConfig;
use rno_core::dynamic_measures::SmoothingConfig;
use rno_core::qmath::{rng_from_seed, Channel};

fn cfg() -> SolverConfig {
    SolverConfig::default()
}

fn quick() -> SeesawConfig {
    SeesawConfig { restarts: 3, rounds: 10, ..Default::default() }
}

#[test]
fn classical_relay_goldens() {
    let id = ProtocolSpec::classical_relay(Channel::identity(vec![2]), 2).unwrap();
    assert!((protocol_simulate(&id).unwrap() - 1.0).abs() < 1e-12);
    let dep = ProtocolSpec::classical_relay(Channel::depolarizing(2, 1.0).unwrap(), 2).unwrap();
    assert!((protocol_simulate(&dep).unwrap() - 0.5).abs() < 1e-12);
    let deph = ProtocolSpec::classical_relay(Channel::dephasing(3), 3).unwrap();
    assert!((protocol_simulate(&deph).unwrap() - 1.0).abs() < 1e-12);
}

#[test]
fn coherent_encoder_is_rejected() {
    let mut spec = ProtocolSpec::classical_relay(Channel::identity(vec![2]), 2).unwrap();
    spec.encoder = rno_core::dynamic_measures::hadamard_channel();
    assert!(matches!(protocol_simulate(&spec), Err(rno_core::Error::NotFreeComponent(_))));
}

#[test]
fn seesaw_goldens() {
    let id = seesaw_success_probability(&Channel::identity(vec![2]), 2, 1, &quick(), &cfg()).unwrap();
    assert!((id.f_hat - 1.0).abs() < 1e-6, "{}", id.f_hat);
    let dep = seesaw_success_probability(&Channel::depolarizing(2, 1.0).unwrap(), 2, 1, &quick(), &cfg()).unwrap();
    assert!((dep.f_hat - 0.5).abs() < 1e-6, "{}", dep.f_hat);
    for r in [&id, &dep] {
        assert_eq!(r.max_decrease, 0.0);
        assert!((protocol_simulate(&r.spec).unwrap() - r.f_hat).abs() < 1e-12);
    }
}

#[test]
fn seesaw_success_decreases_with_message_count() {
    let n = Channel::depolarizing(2, 0.3).unwrap();
    let f: Vec<f64> = (2..=4)
        .map(|m| seesaw_success_probability(&n, m, 1, &quick(), &cfg()).unwrap().f_hat)
        .collect();
    assert!(f[0] >= f[1] - 1e-6 && f[1] >= f[2] - 1e-6, "{f:?}");
}

#[test]
fn seesaw_is_monotone_on_random_channels() {
    let mut rng = rng_from_seed(3);
    for _ in 0..3 {
        let n = rno_core::qmath::random_channel(&mut rng, &[2], &[2], None);
        let r = seesaw_success_probability(&n, 2, 2, &quick(), &cfg()).unwrap();
        for t in &r.trajectories {
            for w in t.windows(2) {
                assert!(w[1] >= w[0] - 1e-9);
            }
        }
        assert!(r.f_hat >= 0.5 - 1e-9);
    }
}

#[test]
fn optimized_decoder_beats_random_feasible_decoders() {
    let mut rng = rng_from_seed(4);
    let n = rno_core::qmath::random_channel(&mut rng, &[2], &[2], None);
    let r = seesaw_success_probability(&n, 2, 1, &quick(), &cfg()).unwrap();
    let best = r.f_hat;
    for _ in 0..20 {
        let mut spec = r.spec.clone();
        let other = random_mio_map(&mut rng, 2, 2);
        let t: f64 = rand::Rng::random(&mut rng);
        spec.decoder = spec.decoder.mix(&other, 1.0 - t).unwrap();
        assert!(protocol_simulate(&spec).unwrap() <= best + 1e-7);
    }
}

#[test]
fn seesaw_guards() {
    let id = Channel::identity(vec![2]);
    assert!(seesaw_success_probability(&id, 1, 1, &quick(), &cfg()).is_err());
    assert!(matches!(
        seesaw_success_probability(&id, 17, 1, &quick(), &cfg()),
        Err(rno_core::Error::TooLarge(_))
    ));
}

#[test]
fn capacity_bound_arithmetic() {
    let (b, c) = capacity_bound_value(0.5, 0.3, 0.1).unwrap();
    assert!((b - 1.0 / 0.3).abs() < 1e-12);
    assert!((c - 1.737).abs() < 1e-3, "{c}");
    assert!(capacity_bound_value(0.5, 0.6, 0.4).is_err());
    let sc = SmoothingConfig::default();
    let r = capacity_bound(&Channel::dephasing(2), 0.2, 0.0, &sc, &cfg()).unwrap();
    assert_eq!(r.l_delta_estimate, 1.0);
    assert!((r.bound_on_m - 1.0 / 0.8).abs() < 1e-12);
    assert!(r.bound_is_lower_estimate);
}

#[test]
fn capacity_experiment_reports_a_verdict() {
    let sc = SmoothingConfig { restarts: 4, ..Default::default() };
    let r = capacity_experiment(&Channel::identity(vec![2]), 0.1, 0.05, 3, &quick(), &sc, &cfg()).unwrap();
    assert_eq!(r.achieved_m, 2);
    assert_ne!(r.verdict, BoundVerdict::NotEvaluated);
    assert_eq!(r.achieved_f.len(), 2);
}
