use glt_core::lsm::lsm_experiment;
use glt_core::models::{heisenberg_chain, majumdar_ghosh, twisted_hamiltonian, TwistSpec};
use glt_core::spectral::{full_spectrum, ground_state, indexer_for, SolverOptions};
use proptest::prelude::*;

#[test]
fn mg_dimer_energy_at_the_exact_point() {
    let (h, q) = majumdar_ghosh(8, 1.0, 0.5).unwrap();
    let r = ground_state(&h, Some((&q, 4)), 3, &SolverOptions::default()).unwrap();
    assert!((r.energies[0] + 0.375 * 8.0).abs() < 1e-10, "{:?}", r.energies);
    assert!((r.energies[1] - r.energies[0]).abs() < 1e-10);
}

#[test]
fn heisenberg_lsm_pipeline() {
    let (h, q) = heisenberg_chain(8, 0.5, 1.0).unwrap();
    let idx = indexer_for(&h, Some((&q, 4))).unwrap();
    let r = ground_state(&h, Some((&q, 4)), 4, &SolverOptions::default()).unwrap();
    let rep = lsm_experiment(&h, &q, &idx, &r).unwrap();
    assert!(rep.overlap < 1e-8);
    assert!(rep.bound_holds);
    assert!(rep.phase_identity_error < 1e-8);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    // `H_{θ,-θ}` is a gauge transform of `H`.
    #[test]
    fn opposite_twist_is_isospectral(theta in -3.0f64..3.0) {
        let (h, q) = majumdar_ghosh(8, 1.0, 0.45).unwrap();
        let idx = indexer_for(&h, Some((&q, 4))).unwrap();
        let e0 = full_spectrum(&h.to_csr(&idx)).unwrap().values;
        let ht = twisted_hamiltonian(&h, &q, &TwistSpec::chain(theta, -theta)).unwrap();
        let et = full_spectrum(&ht.to_csr(&idx)).unwrap().values;
        for (a, b) in e0.iter().zip(&et) {
            prop_assert!((a - b).abs() < 1e-10);
        }
    }
}
