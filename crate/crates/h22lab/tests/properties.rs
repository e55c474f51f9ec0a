//! Property tests over seeded random instances.

use nalgebra::DVector;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use h22lab::fields::{
    assemble_laplacian, beta_field, reconstruct_u, scale_transform, FieldConfig, ScalingParams,
};
use h22lab::identities::enumerate_pairings;
use h22lab::measure::theta_restriction;
use h22lab::suites::{random_exhaustion, random_field, random_pinned_graph};

fn double_factorial(m: usize) -> usize {
    if m <= 1 {
        1
    } else {
        m * double_factorial(m - 2)
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn laplacian_rows_sum_to_zero(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let graph = random_pinned_graph(&mut rng, 8);
        let u = random_field(&mut rng, &graph, 1.5);
        let a = assemble_laplacian(&graph, &u);
        let n = graph.n_total();
        for i in 0..n {
            let row: f64 = (0..n).map(|j| a[(i, j)]).sum();
            prop_assert!(row.abs() < 1e-12 * a[(i, i)].max(1.0));
        }
    }

    #[test]
    fn beta_round_trip_recovers_u(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let graph = random_pinned_graph(&mut rng, 8);
        let u = random_field(&mut rng, &graph, 1.5);
        let beta = beta_field(&graph, &u);
        let back = reconstruct_u(&graph, &beta).unwrap();
        prop_assert!((back - &u).amax() < 1e-10 * u.amax().max(1.0));
    }

    #[test]
    fn scaling_shift_inverts(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let graph = random_pinned_graph(&mut rng, 8);
        let nv = graph.n_interior();
        let lam_raw = DVector::from_fn(nv, |_, _| rng.random_range(-0.7..3.0));
        let lambda = ScalingParams::from_interior(&graph, &lam_raw).unwrap();
        let inverse_raw = lam_raw.map(|l| -l / (1.0 + l));
        let inverse = ScalingParams::from_interior(&graph, &inverse_raw).unwrap();
        let cfg = FieldConfig::new(&graph, random_field(&mut rng, &graph, 1.0),
            DVector::zeros(graph.n_total())).unwrap();
        let back = scale_transform(&scale_transform(&cfg, &lambda), &inverse);
        prop_assert!((back.u() - cfg.u()).amax() < 1e-12);
    }

    #[test]
    fn pairing_count_is_double_factorial(m in 0usize..=8) {
        let items: Vec<usize> = (0..m).collect();
        let pairings = enumerate_pairings(&items);
        if m % 2 == 0 {
            prop_assert_eq!(pairings.len(), double_factorial(m.saturating_sub(1)));
            for p in &pairings {
                let mut seen: Vec<usize> = p.pairs.iter().flat_map(|&(a, b)| [a, b]).collect();
                seen.sort_unstable();
                prop_assert_eq!(seen, items.clone());
            }
        } else {
            prop_assert!(pairings.is_empty());
        }
    }

    #[test]
    fn theta_restriction_conserves_mass(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let exh = random_exhaustion(&mut rng);
        let host_len = exh.host().len();
        let theta = DVector::from_fn(host_len, |_, _| -rng.random_range(0.0..2.0));
        let total: f64 = theta.sum();
        for n in 1..=exh.num_levels() {
            let restricted = theta_restriction(&theta, &exh, n).unwrap();
            prop_assert!((restricted.sum() - total).abs() < 1e-12);
        }
    }
}
