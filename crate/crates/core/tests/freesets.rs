use proptest::prelude::*;
use rno_core::conic::{solve_sdp, Equality, SdpProblem, SdpStatus, Sense, SolverConfig};
use rno_core::dynamic_measures::hadamard_channel;
use rno_core::freesets::{incoherent_unitary, mio_violation, swap_unitary};
use rno_core::qmath::{c64, haar_unitary, identity, kron, max_abs, rng_from_seed, Channel, CVector, DensityMatrix};
use rno_core::{ChannelMembership, Error, FreeSetModel, Membership};

fn plus() -> DensityMatrix {
    DensityMatrix::from_pure(&CVector::from_element(2, c64(1.0, 0.0)), vec![2]).unwrap()
}

fn models() -> Vec<FreeSetModel> {
    vec![
        FreeSetModel::incoherent(2).unwrap(),
        FreeSetModel::incoherent(3).unwrap(),
        FreeSetModel::separable_ppt(2, 2).unwrap(),
        FreeSetModel::separable_ppt(2, 3).unwrap(),
    ]
}

/// `max tr(ψX)` over states `X` in the free cone.
fn max_free_overlap_sdp(m: &FreeSetModel, psi: &DensityMatrix) -> f64 {
    let mut p = SdpProblem::new();
    let x = p.add_block("X", m.dim(), true);
    let xe = p.var(x);
    m.free_cone_constraints(&xe).unwrap().add_to(&mut p);
    p.add_equality(Equality::scalar(xe.trace(), 1.0));
    p.set_objective(Sense::Maximize, xe.trace_with(psi.matrix()));
    let s = solve_sdp(&p, &SolverConfig::default()).unwrap();
    assert_eq!(s.status, SdpStatus::Optimal);
    s.objective
}

#[test]
fn membership_goldens() {
    let inc = FreeSetModel::incoherent(2).unwrap();
    let ppt = FreeSetModel::separable_ppt(2, 2).unwrap();
    assert_eq!(inc.is_free_state(&DensityMatrix::basis_state(2, 1), 1e-9).unwrap(), Membership::Free);
    assert_eq!(inc.is_free_state(&plus(), 1e-9).unwrap(), Membership::NotFree);
    let bell = ppt.max_resource_state(1).unwrap();
    assert_eq!(ppt.is_free_state(&bell, 1e-9).unwrap(), Membership::NotFree);
    assert_eq!(ppt.is_free_state(&plus().tensor(&plus()), 1e-9).unwrap(), Membership::Free);
    // isotropic states turn separable at w = 1/3
    let mixed = DensityMatrix::maximally_mixed(vec![2, 2]);
    assert_eq!(ppt.is_free_state(&bell.mix(&mixed, 0.3).unwrap(), 1e-9).unwrap(), Membership::Free);
    assert_eq!(ppt.is_free_state(&bell.mix(&mixed, 0.4).unwrap(), 1e-9).unwrap(), Membership::NotFree);
    assert!(inc.is_free_state(&bell, 1e-9).is_err());
}

#[test]
fn ppt_is_only_exact_in_small_dimensions() {
    let big = FreeSetModel::separable_ppt(3, 3).unwrap();
    assert!(!big.is_exact());
    assert_eq!(big.is_free_state(&big.maximally_mixed(), 1e-9).unwrap(), Membership::UnknownRelaxation);
    assert!(FreeSetModel::separable_ppt(2, 3).unwrap().is_exact());
    assert!(FreeSetModel::incoherent(7).unwrap().is_exact());
}

#[test]
fn constructors_reject_zero_dimensions() {
    assert!(FreeSetModel::incoherent(0).is_err());
    assert!(FreeSetModel::separable_ppt(2, 0).is_err());
}

#[test]
fn tensor_powers() {
    let ppt = FreeSetModel::separable_ppt(2, 3).unwrap();
    assert_eq!(ppt.tensor_power(2).unwrap(), FreeSetModel::separable_ppt(4, 9).unwrap());
    assert_eq!(FreeSetModel::incoherent(3).unwrap().tensor_power(3).unwrap().dim(), 27);
    assert!(matches!(FreeSetModel::incoherent(2).unwrap().tensor_power(200), Err(Error::TooLarge(_))));
    assert!(ppt.tensor_power(0).is_err());
}

#[test]
fn resource_state_overlap_matches_overlap_bound() {
    for m in models() {
        let psi = m.max_resource_state(1).unwrap();
        assert!(psi.is_pure(1e-12));
        let c = m.overlap_bound_c(1).unwrap();
        let sdp = max_free_overlap_sdp(&m, &psi);
        assert!((sdp - c).abs() < 1e-6, "{m:?}: {sdp} vs {c}");
    }
    let inc = FreeSetModel::incoherent(2).unwrap();
    let psi2 = inc.max_resource_state(2).unwrap();
    assert_eq!(psi2.dim(), 4);
    let c2 = inc.overlap_bound_c(2).unwrap();
    assert!((max_free_overlap_sdp(&inc.tensor_power(2).unwrap(), &psi2) - c2).abs() < 1e-6);
    assert!((inc.overlap_bound_inverse(c2) - 2.0).abs() < 1e-12);
}

#[test]
fn channel_membership() {
    let inc = FreeSetModel::incoherent(2).unwrap();
    assert_eq!(inc.is_rno_channel(&Channel::dephasing(2), 1e-9).unwrap(), ChannelMembership::Free);
    assert_eq!(inc.is_rno_channel(&hadamard_channel(), 1e-9).unwrap(), ChannelMembership::NotFree);
    assert!((mio_violation(&hadamard_channel()) - 0.5).abs() < 1e-12);
    let ppt = FreeSetModel::separable_ppt(2, 2).unwrap();
    let swap = Channel::unitary(swap_unitary(2), vec![2, 2]).unwrap();
    assert_eq!(ppt.is_rno_channel(&swap, 1e-9).unwrap(), ChannelMembership::NotFalsified);
    // a CNOT creates entanglement from |+0⟩
    let mut cnot = identity(4);
    cnot[(2, 2)] = c64(0.0, 0.0);
    cnot[(3, 3)] = c64(0.0, 0.0);
    cnot[(2, 3)] = c64(1.0, 0.0);
    cnot[(3, 2)] = c64(1.0, 0.0);
    let cnot = Channel::unitary(cnot, vec![2, 2]).unwrap();
    assert_eq!(ppt.is_rno_channel(&cnot, 1e-9).unwrap(), ChannelMembership::NotFree);
}

#[test]
fn swap_exchanges_factors() {
    let mut rng = rng_from_seed(2);
    let a = haar_unitary(&mut rng, 3);
    let b = haar_unitary(&mut rng, 3);
    let s = swap_unitary(3);
    assert!(max_abs(&(&s * kron(&a, &b) * &s - kron(&b, &a))) < 1e-12);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn sampled_free_states_are_free(seed in any::<u64>(), k in 0usize..4) {
        let m = models()[k];
        let mut rng = rng_from_seed(seed);
        let rho = m.sample_free_state(&mut rng);
        prop_assert_ne!(m.is_free_state(&rho, 1e-9).unwrap(), Membership::NotFree);
    }

    #[test]
    fn sampled_free_channels_keep_states_free(seed in any::<u64>(), k in 0usize..4) {
        let m = models()[k];
        let mut rng = rng_from_seed(seed);
        let ch = m.sample_free_channel(&mut rng);
        let (tp, cp) = ch.cptp_residuals();
        prop_assert!(tp < 1e-9 && cp < 1e-9);
        prop_assert_ne!(m.is_rno_channel_sampled(&ch, 1e-8, 50, seed).unwrap(), ChannelMembership::NotFree);
    }

    #[test]
    fn incoherent_unitaries_preserve_diagonal_states(seed in any::<u64>(), d in 1usize..6) {
        let mut rng = rng_from_seed(seed);
        let u = incoherent_unitary(&mut rng, d);
        prop_assert!(max_abs(&(u.adjoint() * &u - identity(d))) < 1e-12);
        let ch = Channel::unitary(u, vec![d]).unwrap();
        prop_assert!(mio_violation(&ch) < 1e-12);
    }
}
