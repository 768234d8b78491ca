//! Finite-blocklength limits on total variation distance, equivocation loss
//! and χ² divergence over the binary erasure wiretap channel.
//!
//! The TVD achievability and converse bounds are converted to the other two
//! metrics through the f-divergence kernel ratios: for `b` lost bits the
//! per-observation sums are `1 - 2^-b` (TVD), `b` (KL) and `2^b - 1` (χ²),
//! which gives `2V <= D <= k/(1 - 2^-k) V` and `2V <= χ² <= 2^k V`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Gaussian upper tail `Q(x) = P(N(0,1) > x)`.
pub fn gaussian_q(x: f64) -> f64 {
    0.5 * libm::erfc(x / std::f64::consts::SQRT_2)
}

fn ln_binomial(n: usize, i: usize) -> f64 {
    libm::lgamma(n as f64 + 1.0) - libm::lgamma(i as f64 + 1.0) - libm::lgamma((n - i) as f64 + 1.0)
}

fn check_k(n: usize, k: usize) -> Result<()> {
    if k > n {
        return Err(Error::OutOfRange {
            what: "k",
            value: k as i64,
            expected: format!("<= n = {n}"),
        });
    }
    Ok(())
}

/// TVD achievability: `Q((eps - k/n) sqrt(n / (eps - eps^2)))`.
pub fn tvd_achievability(n: usize, k: usize, epsilon: f64) -> Result<f64> {
    check_k(n, k)?;
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::OutOfRangeReal {
            what: "epsilon",
            value: epsilon,
            expected: "(0, 1)",
        });
    }
    let nf = n as f64;
    let arg = (epsilon - k as f64 / nf) * (nf / (epsilon - epsilon * epsilon)).sqrt();
    Ok(gaussian_q(arg))
}

/// TVD converse: `Σ_{i=0}^{k} C(n,i) eps^i (1-eps)^{n-i} (1 - 2^{i-k})`.
pub fn tvd_converse(n: usize, k: usize, epsilon: f64) -> Result<f64> {
    check_k(n, k)?;
    if !(0.0..=1.0).contains(&epsilon) {
        return Err(Error::OutOfRangeReal {
            what: "epsilon",
            value: epsilon,
            expected: "[0, 1]",
        });
    }
    let ln_e = epsilon.ln();
    let ln_1me = (1.0 - epsilon).ln();
    let mut total = 0.0;
    for i in 0..=k {
        let weight = 1.0 - (2f64).powi(i as i32 - k as i32);
        if weight == 0.0 {
            continue;
        }
        // 0 * ln(0) is taken as 0 at the endpoints
        let e_part = if i == 0 { 0.0 } else { i as f64 * ln_e };
        let c_part = if i == n { 0.0 } else { (n - i) as f64 * ln_1me };
        let ln_term = ln_binomial(n, i) + e_part + c_part;
        total += ln_term.exp() * weight;
    }
    Ok(total)
}

/// `(lower, upper)` on the equivocation loss.
pub fn eq_loss_bounds(n: usize, k: usize, epsilon: f64) -> Result<(f64, f64)> {
    let lower = 2.0 * tvd_converse(n, k, epsilon)?;
    let ach = tvd_achievability(n, k, epsilon)?;
    let upper = if k == 0 {
        0.0
    } else {
        k as f64 / (1.0 - (0.5f64).powi(k as i32)) * ach
    };
    Ok((lower, upper))
}

/// `(lower, upper)` on the χ² divergence from the TVD bounds.
pub fn chi2_bounds(n: usize, k: usize, epsilon: f64) -> Result<(f64, f64)> {
    let lower = 2.0 * tvd_converse(n, k, epsilon)?;
    let ach = tvd_achievability(n, k, epsilon)?;
    let upper = if k == 0 { 0.0 } else { (2f64).powi(k as i32) * ach };
    Ok((lower, upper))
}

/// χ² converse obtained from the uniform fraction code:
/// `(2-eps)^n 2^-kappa (1 + (2^kappa - 1) (eps/(2-eps))^{n 2^{kappa-1}/(2^kappa-1)}) - 1`,
/// evaluated in the log domain.
pub fn chi2_converse_direct(n: usize, kappa: usize, epsilon: f64) -> Result<f64> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::OutOfRangeReal {
            what: "epsilon",
            value: epsilon,
            expected: "(0, 1)",
        });
    }
    if kappa == 0 || kappa > 62 {
        return Err(Error::OutOfRange {
            what: "kappa",
            value: kappa as i64,
            expected: "1..=62".into(),
        });
    }
    let nf = n as f64;
    let hyper = (2f64).powi(kappa as i32) - 1.0;
    let ln_pref = nf * (2.0 - epsilon).ln() - kappa as f64 * std::f64::consts::LN_2;
    let exponent = nf * (2f64).powi(kappa as i32 - 1) / hyper;
    let ln_hyper_term = hyper.ln() + exponent * (epsilon / (2.0 - epsilon)).ln();
    Ok(ln_pref.exp() + (ln_pref + ln_hyper_term).exp() - 1.0)
}

/// Every bound for one operating point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub n: usize,
    pub k: usize,
    pub kappa: usize,
    pub epsilon: f64,
    pub tvd_achievability: f64,
    pub tvd_converse: f64,
    pub eq_loss_lower: f64,
    pub eq_loss_upper: f64,
    pub chi2_lower: f64,
    pub chi2_upper: f64,
    pub chi2_converse_direct: f64,
}

impl BoundReport {
    /// `kappa = n - k`.
    pub fn compute(n: usize, kappa: usize, epsilon: f64) -> Result<Self> {
        if kappa > n {
            return Err(Error::OutOfRange {
                what: "kappa",
                value: kappa as i64,
                expected: format!("<= n = {n}"),
            });
        }
        let k = n - kappa;
        let (eq_loss_lower, eq_loss_upper) = eq_loss_bounds(n, k, epsilon)?;
        let (chi2_lower, chi2_upper) = chi2_bounds(n, k, epsilon)?;
        Ok(Self {
            n,
            k,
            kappa,
            epsilon,
            tvd_achievability: tvd_achievability(n, k, epsilon)?,
            tvd_converse: tvd_converse(n, k, epsilon)?,
            eq_loss_lower,
            eq_loss_upper,
            chi2_lower,
            chi2_upper,
            chi2_converse_direct: chi2_converse_direct(n, kappa, epsilon)?,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn achievability_examples() {
        assert!((tvd_achievability(16, 8, 0.5).unwrap() - 0.5).abs() < 1e-15);
        // Q(0.25 * sqrt(16 / 0.1875)) = Q(2.309401...)
        let v = tvd_achievability(16, 8, 0.75).unwrap();
        assert!((v - 0.010460667668897).abs() < 1e-12, "{v}");
        assert!(tvd_achievability(16, 8, 0.999).unwrap() < 1e-10);
        assert!(tvd_achievability(16, 8, 0.0).is_err());
        assert!(tvd_achievability(16, 8, 1.0).is_err());
    }

    #[test]
    fn gaussian_q_reference_values() {
        // values from the standard normal table
        assert!((gaussian_q(0.0) - 0.5).abs() < 1e-16);
        assert!((gaussian_q(1.0) - 0.15865525393145705).abs() < 1e-14);
        assert!((gaussian_q(-2.0) - 0.9772498680518208).abs() < 1e-14);
        assert!((gaussian_q(5.0) - 2.866515718791939e-7).abs() < 1e-19);
    }

    #[test]
    fn converse_examples() {
        assert_eq!(tvd_converse(10, 0, 0.3).unwrap(), 0.0);
        for k in [1usize, 4, 8] {
            let v = tvd_converse(16, k, 0.0).unwrap();
            assert!((v - (1.0 - 0.5f64.powi(k as i32))).abs() < 1e-15);
        }
        let v = tvd_converse(16, 8, 0.5).unwrap();
        assert!((v - 0.2736).abs() < 1e-4, "{v}");
    }

    #[test]
    fn converse_matches_direct_binomial_sum() {
        fn direct(n: u32, k: u32, e: f64) -> f64 {
            let mut c = 1.0f64;
            let mut total = 0.0;
            for i in 0..=k {
                if i > 0 {
                    c = c * (n - i + 1) as f64 / i as f64;
                }
                total += c * e.powi(i as i32) * (1.0 - e).powi((n - i) as i32) * (1.0 - 2f64.powi(i as i32 - k as i32));
            }
            total
        }
        for &(n, k, e) in &[(16u32, 8u32, 0.5), (32, 24, 0.75), (40, 13, 0.2), (60, 59, 0.99)] {
            let a = tvd_converse(n as usize, k as usize, e).unwrap();
            let b = direct(n, k, e);
            assert!((a - b).abs() < 1e-12 * b.max(1.0), "{n} {k} {e}: {a} vs {b}");
        }
        // large n stays finite
        let v = tvd_converse(4096, 2048, 0.5).unwrap();
        assert!(v.is_finite() && v > 0.0);
    }

    #[test]
    fn converted_bounds() {
        let (lo, hi) = eq_loss_bounds(16, 8, 0.5).unwrap();
        assert!((lo - 0.5472).abs() < 5e-4);
        assert!((hi - 4.016).abs() < 1e-3);
        assert_eq!(eq_loss_bounds(5, 0, 0.5).unwrap(), (0.0, 0.0));
        let (lo, _) = eq_loss_bounds(32, 24, 0.75).unwrap();
        assert!((lo - 0.5896).abs() < 5e-4);

        let (lo, hi) = chi2_bounds(16, 8, 0.5).unwrap();
        assert_eq!(hi, 128.0);
        assert!((lo - 0.5472).abs() < 5e-4);
        assert_eq!(chi2_bounds(5, 0, 0.5).unwrap(), (0.0, 0.0));
    }

    #[test]
    fn direct_chi2_converse() {
        let v = chi2_converse_direct(16, 8, 0.5).unwrap();
        assert!((v - 1.662).abs() < 1e-3, "{v}");
        for eps in [0.1, 0.5, 0.9] {
            assert!(chi2_converse_direct(1, 1, eps).unwrap().abs() < 1e-15);
        }
        // (kappa = 9, n = 32) at its operating point eps = k/n = 23/32
        let v = chi2_converse_direct(32, 9, 23.0 / 32.0).unwrap();
        assert!((v - 4.695).abs() < 1e-3, "{v}");
        // huge n does not overflow
        assert!(chi2_converse_direct(4000, 12, 0.997).unwrap().is_finite());
    }

    #[test]
    fn bound_pairs_ordered() {
        for n in [16usize, 32, 48, 64] {
            for kappa in [2usize, 4, 8] {
                let k = n - kappa;
                let eps = k as f64 / n as f64;
                let r = BoundReport::compute(n, kappa, eps).unwrap();
                assert!(r.eq_loss_lower <= r.eq_loss_upper);
                assert!(r.chi2_lower <= r.chi2_upper);
            }
        }
    }
}
