use bewc_core::exact::{chi2_exact, equivocation_loss_exact, per_observation_equivocation, tvd_exact, ErasurePattern};
use bewc_core::GeneratorMatrix;
use proptest::prelude::*;

fn code_strategy() -> impl Strategy<Value = GeneratorMatrix> {
    (1usize..=4)
        .prop_flat_map(|kappa| (Just(kappa), prop::collection::vec(1u32..(1u32 << kappa), kappa..=12)))
        .prop_map(|(kappa, words)| GeneratorMatrix::from_words(kappa, &words).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn tvd_bounds_other_metrics(g in code_strategy()) {
        for eps in [0.1, 0.5, 0.9] {
            let v = tvd_exact(&g, eps).unwrap();
            prop_assert!(2.0 * v <= equivocation_loss_exact(&g, eps).unwrap() + 1e-12);
            prop_assert!(2.0 * v <= chi2_exact(&g, eps).unwrap() + 1e-12);
        }
    }

    #[test]
    fn loss_invariant_under_column_permutation(g in code_strategy(), rot in 0usize..12) {
        let n = g.n();
        let perm: Vec<usize> = (0..n).map(|j| (j + rot) % n).rev().collect();
        let h = g.permuted(&perm).unwrap();
        for eps in [0.2, 0.7] {
            let a = equivocation_loss_exact(&g, eps).unwrap();
            let b = equivocation_loss_exact(&h, eps).unwrap();
            prop_assert!((a - b).abs() <= 1e-12);
        }
    }

    #[test]
    fn fully_revealed_loss(g in code_strategy()) {
        prop_assume!(g.rank() == g.kappa());
        let full = ErasurePattern::new(g.n(), 0..g.n()).unwrap();
        let h = per_observation_equivocation(&g, &full).unwrap();
        let direct = g.k() as f64 - h;
        let loss = equivocation_loss_exact(&g, 0.0).unwrap();
        prop_assert!((loss - direct).abs() <= 1e-12);
        prop_assert!((loss - (g.n() - g.rank()) as f64).abs() <= 1e-12);
    }

    #[test]
    fn loss_non_increasing_in_epsilon(g in code_strategy()) {
        let grid: Vec<f64> = (0..=10).map(|i| i as f64 / 10.0).collect();
        let losses: Vec<f64> = grid.iter().map(|&e| equivocation_loss_exact(&g, e).unwrap()).collect();
        for w in losses.windows(2) {
            prop_assert!(w[1] <= w[0] + 1e-12, "{:?}", losses);
        }
    }
}
