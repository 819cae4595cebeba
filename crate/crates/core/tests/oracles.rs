//! Fast implementations against brute-force oracles.

mod common;

use common::{dense_ground_density, explicit_global_distiller};
use proptest::prelude::*;
use zer::distiller::{global_distiller, local_distill, region_modes};
use zer::linalg;
use zer::model::ground_state_correlation;
use zer::rg::{reconstruct, run_zer, RGConfig, TerminationReason};
use zer::ModelSpec;

fn hopping() -> impl Strategy<Value = f64> {
    prop_oneof![-2.0..-0.1f64, 0.1..2.0f64]
}

fn model() -> impl Strategy<Value = ModelSpec> {
    prop_oneof![
        (3usize..33, hopping(), hopping()).prop_map(|(l, t1, t2)| ModelSpec::ssh(l, t1, t2).unwrap()),
        (5usize..65, hopping(), -1.5..1.5f64, 0.1..0.9f64)
            .prop_filter_map("filling leaves a level empty", |(l, t1, t2, nu)| ModelSpec::chain(l, t1, t2, nu).ok()),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn ground_state_matches_dense_diagonalization(spec in model()) {
        let (dense, gap) = dense_ground_density(&spec);
        prop_assume!(gap > 1e-6);
        let c = ground_state_correlation(&spec).unwrap().correlation;
        prop_assert!(linalg::max_abs_diff(c.density().as_ref(), dense.as_ref()) < 1e-9);
    }

    #[test]
    fn circulant_distiller_is_the_sum_of_translates(
        spec in model(),
        width in 1usize..4,
        epsilon in 1e-3..0.3f64,
    ) {
        let c = ground_state_correlation(&spec).unwrap().correlation;
        let lattice = c.lattice().unwrap();
        prop_assume!(2 * (width - 1) < lattice.cells);
        let local = local_distill(&c, &region_modes(lattice, 0, width), epsilon).unwrap();
        let fast = global_distiller(&c, &local).unwrap().real_space();
        let slow = explicit_global_distiller(lattice, &local);
        prop_assert!(linalg::max_abs_diff(fast.as_ref(), slow.as_ref()) < 1e-12);
    }

    #[test]
    fn dimerized_chain_factorizes_exactly(cells in 3usize..33, t2 in -2.0..-0.2f64) {
        let spec = ModelSpec::ssh(cells, 0.0, t2).unwrap();
        let config = RGConfig { core_size_threshold: 0, ..RGConfig::with_epsilon(1e-5) };
        let trace = run_zer(&spec, &config).unwrap();
        prop_assert_eq!(trace.termination, TerminationReason::FullyDistilled);
        let step = &trace.steps[0];
        let z = step.zipper.as_ref().unwrap();
        prop_assert!(z.unitarity_residual < 1e-9);
        prop_assert!(z.spectrum_residual < 1e-9);
        prop_assert!(z.residual.offblock < 1e-9 && z.residual.frozen < 1e-9);
        let approx = reconstruct(&trace);
        prop_assert!(linalg::max_abs_diff(approx.data().as_ref(), trace.initial.data().as_ref()) < 1e-9);
    }
}
