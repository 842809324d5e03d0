use rno_core::asymptotic::*;
use rno_core::conic::SolverConfig;
use rno_core::qmath::{c64, CVector};
use rno_core::{DensityMatrix, FreeSetModel};

fn bell() -> DensityMatrix {
    let mut v = CVector::zeros(4);
    v[0] = c64(1.0, 0.0);
    v[3] = c64(1.0, 0.0);
    DensityMatrix::from_pure(&v, vec![2, 2]).unwrap()
}

fn plus() -> DensityMatrix {
    DensityMatrix::from_pure(&CVector::from_element(2, c64(1.0, 0.0)), vec![2]).unwrap()
}

fn cfg() -> SolverConfig {
    SolverConfig::default()
}

#[test]
fn bell_sandwich_closes_at_one_and_two_copies() {
    let m = FreeSetModel::separable_ppt(2, 2).unwrap();
    for n in [1, 2] {
        let lower = cost_lower_bound(&m, &bell(), n, 0.0, &cfg()).unwrap();
        let upper = cost_upper_bound(&m, &bell(), n, &cfg()).unwrap();
        assert!((lower - 1.0).abs() < 1e-4, "n={n} lower {lower}");
        assert!((upper.value - 1.0).abs() < 1e-4, "n={n} upper {upper:?}");
        assert!(!upper.vacuous);
    }
}

#[test]
fn two_bell_pairs_have_standard_robustness_three() {
    let m = FreeSetModel::separable_ppt(2, 2).unwrap();
    let u = cost_upper_bound(&m, &bell(), 2, &cfg()).unwrap();
    assert!((u.standard_robustness - 3.0).abs() < 1e-5, "{}", u.standard_robustness);
    assert_eq!(u.k, Some(2));
}

#[test]
fn coherent_state_is_vacuous_for_upper_bound() {
    let m = FreeSetModel::incoherent(2).unwrap();
    let u = cost_upper_bound(&m, &plus(), 1, &cfg()).unwrap();
    assert!(u.vacuous && u.value.is_infinite());
    let lower = cost_lower_bound(&m, &plus(), 1, 0.0, &cfg()).unwrap();
    assert!((lower - 1.0).abs() < 1e-4, "{lower}");
    assert!(matches!(
        cost_channel(&m, &plus(), 1, 10, 0, &cfg()),
        Err(rno_core::Error::Vacuous(_))
    ));
}

#[test]
fn free_state_costs_nothing() {
    let m = FreeSetModel::separable_ppt(2, 2).unwrap();
    let rho = DensityMatrix::maximally_mixed(vec![2, 2]);
    for n in [1, 2] {
        assert!(cost_lower_bound(&m, &rho, n, 0.0, &cfg()).unwrap().abs() < 1e-5);
        let u = cost_upper_bound(&m, &rho, n, &cfg()).unwrap();
        assert_eq!(u.k, Some(0));
    }
    let c = cost_channel(&m, &rho, 1, 10, 0, &cfg()).unwrap();
    assert_eq!(c.k, 0);
    assert_eq!(c.channel.in_dim(), 1);
    assert!(c.verification.reproduction_error < 1e-12);
}

#[test]
fn smoothing_lowers_the_lower_bound() {
    let m = FreeSetModel::separable_ppt(2, 2).unwrap();
    let a = cost_lower_bound(&m, &bell(), 1, 0.0, &cfg()).unwrap();
    let b = cost_lower_bound(&m, &bell(), 1, 0.1, &cfg()).unwrap();
    assert!(b <= a + 1e-6);
}

#[test]
fn guards() {
    let m = FreeSetModel::separable_ppt(2, 2).unwrap();
    assert!(matches!(cost_lower_bound(&m, &bell(), 3, 0.0, &cfg()), Err(rno_core::Error::TooLarge(_))));
    assert!(cost_lower_bound(&m, &bell(), 1, 0.3, &cfg()).is_err());
}

#[test]
fn bell_channel_reproduces_target_and_stays_free() {
    let m = FreeSetModel::separable_ppt(2, 2).unwrap();
    let c = cost_channel(&m, &bell(), 1, 200, 1, &cfg()).unwrap();
    assert_eq!(c.k, 1);
    let v = &c.verification;
    assert!(v.reproduction_error < 1e-9, "{v:?}");
    assert!(v.max_overlap_excess <= 1e-9, "{v:?}");
    assert!(v.all_outputs_pass && v.worst_output_margin >= -1e-9, "{v:?}");
    assert_eq!(v.check, FreenessCheck::Exact);
}

#[test]
fn two_copy_channel_passes_necessary_checks() {
    let m = FreeSetModel::separable_ppt(2, 2).unwrap();
    let c = cost_channel(&m, &bell(), 2, 100, 2, &cfg()).unwrap();
    assert_eq!(c.k, 2);
    let v = &c.verification;
    assert!(v.reproduction_error < 1e-9);
    assert!(v.max_overlap_excess <= 1e-9);
    assert!(v.all_outputs_pass, "{v:?}");
    assert_eq!(v.check, FreenessCheck::NecessaryOnly);
}

#[test]
fn target_log_robustness_does_not_exceed_k() {
    let m = FreeSetModel::separable_ppt(2, 2).unwrap();
    let c = cost_channel(&m, &bell(), 1, 1, 0, &cfg()).unwrap();
    let lr = cost_lower_bound(&m, &bell(), 1, 0.0, &cfg()).unwrap();
    assert!(lr <= c.k as f64 + 1e-5);
}

#[test]
fn grouped_power_orders_parties() {
    let m = FreeSetModel::separable_ppt(2, 2).unwrap();
    let (mn, s) = grouped_power(&m, &bell(), 2).unwrap();
    assert_eq!(mn.dims(), vec![4, 4]);
    // (A1A2)(B1B2) max entangled: amplitude on |00,00>, |01,01>, |10,10>, |11,11>
    let mat = s.matrix();
    assert!((mat[(0, 0)].re - 0.25).abs() < 1e-12);
    assert!((mat[(0, 5)].re - 0.25).abs() < 1e-12);
    assert!(mat[(0, 1)].norm() < 1e-12);
}
