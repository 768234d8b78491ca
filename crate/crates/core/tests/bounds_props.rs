use bewc_core::bounds::{chi2_bounds, chi2_converse_direct, eq_loss_bounds, BoundReport};
use bewc_core::constructions::{ldpc_dual_code, random_code, subspace_exclusion_code};
use bewc_core::continuous::chi2_lambda;
use bewc_core::descent::restore_sum;
use bewc_core::exact::{chi2_exact, equivocation_loss_exact};
use bewc_core::rng::stream;
use bewc_core::{CodeDefVector, GeneratorMatrix};
use rand::Rng;

fn check_code(g: &GeneratorMatrix) {
    let (n, kappa) = (g.n(), g.kappa());
    if n <= kappa {
        return;
    }
    let eps = (n - kappa) as f64 / n as f64;
    let (eq_lo, _) = eq_loss_bounds(n, n - kappa, eps).unwrap();
    let (chi_lo, _) = chi2_bounds(n, n - kappa, eps).unwrap();
    let loss = equivocation_loss_exact(g, eps).unwrap();
    let chi2 = chi2_exact(g, eps).unwrap();
    assert!(eq_lo <= loss + 1e-6, "{n} {kappa}: {eq_lo} > {loss}");
    assert!(chi_lo <= chi2 + 1e-6, "{n} {kappa}: {chi_lo} > {chi2}");
}

#[test]
fn measured_codes_respect_converse() {
    for kappa in 2..=10usize {
        let len = (1usize << kappa) - 1;
        for n in [kappa + 1, (kappa + 20) / 2, 20usize.min(len)] {
            if n <= kappa || n > len || n > 20 {
                continue;
            }
            for i in 0..3 {
                check_code(&random_code(kappa, n, &mut stream(kappa as u64, i + 10 * n as u64)).unwrap());
            }
            if n <= len - kappa {
                check_code(&ldpc_dual_code(kappa, n, &mut stream(1, n as u64)).unwrap());
            }
        }
    }
    for (kappa, u) in [(3, 1), (4, 1), (4, 3), (5, 4)] {
        check_code(&subspace_exclusion_code(kappa, u).unwrap());
    }
}

#[test]
fn direct_converse_below_any_vector() {
    let mut rng = stream(5, 0);
    for &(kappa, n) in &[(3usize, 5usize), (4, 8), (5, 16), (6, 20)] {
        let eps = (n - kappa) as f64 / n as f64;
        let floor = chi2_converse_direct(n, kappa, eps).unwrap();
        let len = (1usize << kappa) - 1;
        for _ in 0..100 {
            let q: Vec<f64> = (0..len).map(|_| rng.random_range(0.0..1.0) / n as f64).collect();
            let q = restore_sum(&CodeDefVector::new(kappa, n, q).unwrap());
            assert!(floor <= chi2_lambda(n, eps, &q).unwrap() + 1e-12);
        }
    }
}

#[test]
fn bound_pairs_ordered() {
    for n in 2..=64usize {
        for kappa in 1..n.min(12) {
            let eps = (n - kappa) as f64 / n as f64;
            let r = BoundReport::compute(n, kappa, eps).unwrap();
            assert!(r.eq_loss_lower <= r.eq_loss_upper, "{n} {kappa}");
            assert!(r.chi2_lower <= r.chi2_upper, "{n} {kappa}");
        }
    }
}
