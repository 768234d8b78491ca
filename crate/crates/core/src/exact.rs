//! Exhaustive metrics over every erasure pattern.
//!
//! For a uniformly distributed message, an eavesdropper who sees the positions
//! `r` in the clear loses `b(r) = |r| - rank(G_r)` bits of equivocation. Every
//! metric here is an expectation of a function of `b(r)` under the erasure
//! distribution `Pr(r) = (1 - eps)^|r| eps^(n - |r|)`. The sweep is done once
//! per generator matrix and stored as a histogram of `(|r|, b)` counts, so
//! any number of metrics and erasure probabilities can be read off it.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gf2::{extend_basis, insert_reduced, rank_words, BitRow, GeneratorMatrix};

/// Largest blocklength accepted by the exhaustive sweep.
pub const MAX_EXACT_N: usize = 24;

/// The set of positions revealed to the eavesdropper (0-based).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ErasurePattern {
    n: usize,
    revealed: Vec<usize>,
}

impl ErasurePattern {
    pub fn new(n: usize, revealed: impl IntoIterator<Item = usize>) -> Result<Self> {
        let mut revealed: Vec<usize> = revealed.into_iter().collect();
        revealed.sort_unstable();
        revealed.dedup();
        if let Some(&bad) = revealed.iter().find(|&&p| p >= n) {
            return Err(Error::OutOfRange {
                what: "revealed position",
                value: bad as i64,
                expected: format!("< {n}"),
            });
        }
        Ok(Self { n, revealed })
    }

    /// Pattern from a bitmask; bit `j` set means position `j` is revealed.
    pub fn from_mask(n: usize, mask: u64) -> Result<Self> {
        Self::new(n, (0..64).filter(|&j| (mask >> j) & 1 == 1))
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn revealed(&self) -> &[usize] {
        &self.revealed
    }
}

/// `H(M | Z = z)` for a pattern `r`: `k - |r| + rank(G_r)`.
pub fn per_observation_equivocation(g: &GeneratorMatrix, r: &ErasurePattern) -> Result<f64> {
    if r.n() != g.n() {
        return Err(Error::DimensionMismatch {
            expected: g.n(),
            found: r.n(),
        });
    }
    let cols: Vec<u32> = g.words().collect();
    let rk = rank_words(r.revealed().iter().map(|&p| cols[p]));
    Ok(g.k() as f64 - r.revealed().len() as f64 + rk as f64)
}

fn check_epsilon_closed(epsilon: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&epsilon) {
        return Err(Error::OutOfRangeReal {
            what: "epsilon",
            value: epsilon,
            expected: "[0, 1]",
        });
    }
    Ok(())
}

/// Counts of erasure patterns by `(|r|, b(r))`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PatternHistogram {
    n: usize,
    kappa: usize,
    k: usize,
    /// `counts[size][b]`
    counts: Vec<Vec<u64>>,
}

impl PatternHistogram {
    /// Sweeps all `2^n` patterns with a depth-first traversal that reuses the
    /// partial XOR basis of each prefix.
    pub fn sweep(g: &GeneratorMatrix) -> Result<Self> {
        let n = g.n();
        if n > MAX_EXACT_N {
            return Err(Error::TooLarge { n, limit: MAX_EXACT_N });
        }
        let cols: Vec<u32> = g.words().collect();
        let mut counts = vec![vec![0u64; n + 1]; n + 1];
        fn visit(cols: &[u32], pos: usize, basis: [u32; 32], size: usize, rank: usize, counts: &mut [Vec<u64>]) {
            if pos == cols.len() {
                counts[size][size - rank] += 1;
                return;
            }
            // erased
            visit(cols, pos + 1, basis, size, rank, counts);
            // revealed
            let mut with = basis;
            let grew = insert_reduced(&mut with, cols[pos]);
            visit(cols, pos + 1, with, size + 1, rank + grew as usize, counts);
        }
        visit(&cols, 0, [0; 32], 0, 0, &mut counts);
        Ok(Self {
            n,
            kappa: g.kappa(),
            k: g.k(),
            counts,
        })
    }

    /// The same histogram computed by recomputing the rank of every pattern
    /// from scratch. Slow; kept as a cross-check.
    pub fn sweep_per_pattern(g: &GeneratorMatrix) -> Result<Self> {
        let n = g.n();
        if n > MAX_EXACT_N {
            return Err(Error::TooLarge { n, limit: MAX_EXACT_N });
        }
        let cols: Vec<u32> = g.words().collect();
        let mut counts = vec![vec![0u64; n + 1]; n + 1];
        for mask in 0u64..(1u64 << n) {
            let size = mask.count_ones() as usize;
            let rk = rank_words((0..n).filter(|&j| (mask >> j) & 1 == 1).map(|j| cols[j]));
            counts[size][size - rk] += 1;
        }
        Ok(Self {
            n,
            kappa: g.kappa(),
            k: g.k(),
            counts,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn kappa(&self) -> usize {
        self.kappa
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// Number of patterns with `size` revealed positions and `b` lost bits.
    pub fn count(&self, size: usize, b: usize) -> u64 {
        self.counts[size][b]
    }

    /// `Σ_r Pr(r) f(b(r))` at erasure probability `epsilon`.
    pub fn expectation(&self, epsilon: f64, f: impl Fn(usize) -> f64) -> Result<f64> {
        check_epsilon_closed(epsilon)?;
        let mut total = 0.0;
        for (size, row) in self.counts.iter().enumerate() {
            let prob = (1.0 - epsilon).powi(size as i32) * epsilon.powi((self.n - size) as i32);
            if prob == 0.0 {
                continue;
            }
            for (b, &c) in row.iter().enumerate() {
                if c != 0 {
                    total += c as f64 * prob * f(b);
                }
            }
        }
        Ok(total)
    }

    pub fn equivocation_loss(&self, epsilon: f64) -> Result<f64> {
        self.expectation(epsilon, |b| b as f64)
    }

    pub fn chi2(&self, epsilon: f64) -> Result<f64> {
        self.expectation(epsilon, |b| (2f64).powi(b as i32) - 1.0)
    }

    pub fn tvd(&self, epsilon: f64) -> Result<f64> {
        self.expectation(epsilon, |b| 1.0 - (0.5f64).powi(b as i32))
    }

    /// Per-symbol equivocation loss at `eps = k/n`.
    pub fn achievability_gap(&self) -> Result<f64> {
        if self.n == 0 {
            return Ok(0.0);
        }
        let eps = self.k as f64 / self.n as f64;
        Ok(self.equivocation_loss(eps)? / self.n as f64)
    }

    pub fn report(&self, epsilon: f64) -> Result<MetricReport> {
        Ok(MetricReport {
            eq_loss: self.equivocation_loss(epsilon)?,
            chi2: self.chi2(epsilon)?,
            tvd: self.tvd(epsilon)?,
            achievability_gap: self.achievability_gap()?,
            epsilon,
        })
    }
}

/// Metrics of a code at one erasure probability.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    /// `I(M;Z)` in bits.
    pub eq_loss: f64,
    pub chi2: f64,
    pub tvd: f64,
    /// Per-symbol loss at `eps = k/n`, independent of `epsilon`.
    pub achievability_gap: f64,
    pub epsilon: f64,
}

/// `k - H(M|Z)`, in bits.
pub fn equivocation_loss_exact(g: &GeneratorMatrix, epsilon: f64) -> Result<f64> {
    check_epsilon_closed(epsilon)?;
    PatternHistogram::sweep(g)?.equivocation_loss(epsilon)
}

pub fn chi2_exact(g: &GeneratorMatrix, epsilon: f64) -> Result<f64> {
    check_epsilon_closed(epsilon)?;
    PatternHistogram::sweep(g)?.chi2(epsilon)
}

pub fn tvd_exact(g: &GeneratorMatrix, epsilon: f64) -> Result<f64> {
    check_epsilon_closed(epsilon)?;
    PatternHistogram::sweep(g)?.tvd(epsilon)
}

pub fn achievability_gap(g: &GeneratorMatrix) -> Result<f64> {
    PatternHistogram::sweep(g)?.achievability_gap()
}

/// All three metrics in one sweep.
pub fn evaluate_exact(g: &GeneratorMatrix, epsilon: f64) -> Result<MetricReport> {
    check_epsilon_closed(epsilon)?;
    PatternHistogram::sweep(g)?.report(epsilon)
}

/// The `n x n` coset generator `[G'; G]`, where `G'` is the canonical
/// completion of the rows of `G`.
#[derive(Debug, Clone)]
pub struct CosetEncoder {
    aux: Vec<BitRow>,
    base: Vec<BitRow>,
    n: usize,
}

impl CosetEncoder {
    pub fn new(g: &GeneratorMatrix) -> Result<Self> {
        let rk = g.rank();
        if rk < g.kappa() {
            return Err(Error::RankDeficient {
                rank: rk,
                kappa: g.kappa(),
            });
        }
        let base = g.rows();
        let aux = extend_basis(&base, g.n())?;
        Ok(Self { aux, base, n: g.n() })
    }

    /// Rows of `G'`.
    pub fn auxiliary_rows(&self) -> &[BitRow] {
        &self.aux
    }

    /// `x = [m | m_aux] [G'; G]`.
    pub fn encode(&self, m: &BitRow, m_aux: &BitRow) -> Result<BitRow> {
        if m.len() != self.aux.len() {
            return Err(Error::DimensionMismatch {
                expected: self.aux.len(),
                found: m.len(),
            });
        }
        if m_aux.len() != self.base.len() {
            return Err(Error::DimensionMismatch {
                expected: self.base.len(),
                found: m_aux.len(),
            });
        }
        let mut x = BitRow::zeros(self.n);
        for (i, row) in self.aux.iter().enumerate() {
            if m.get(i) {
                x.xor_assign(row);
            }
        }
        for (i, row) in self.base.iter().enumerate() {
            if m_aux.get(i) {
                x.xor_assign(row);
            }
        }
        Ok(x)
    }
}

/// One-shot coset encoding.
pub fn coset_encode(m: &BitRow, m_aux: &BitRow, g: &GeneratorMatrix) -> Result<BitRow> {
    CosetEncoder::new(g)?.encode(m, m_aux)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn g(kappa: usize, words: &[u32]) -> GeneratorMatrix {
        GeneratorMatrix::from_words(kappa, words).unwrap()
    }

    #[test]
    fn per_observation_examples() {
        let rep = g(1, &[1, 1]);
        let none = ErasurePattern::new(2, []).unwrap();
        assert_eq!(per_observation_equivocation(&rep, &none).unwrap(), 1.0);
        let all = ErasurePattern::new(2, [0, 1]).unwrap();
        assert_eq!(per_observation_equivocation(&rep, &all).unwrap(), 0.0);
        let id = GeneratorMatrix::identity(3).unwrap();
        for mask in 0..8 {
            let r = ErasurePattern::from_mask(3, mask).unwrap();
            assert_eq!(per_observation_equivocation(&id, &r).unwrap(), 0.0);
        }
        assert!(ErasurePattern::new(2, [2]).is_err());
    }

    #[test]
    fn repetition_code_metrics() {
        let rep = g(1, &[1, 1]);
        assert!((equivocation_loss_exact(&rep, 0.5).unwrap() - 0.25).abs() < 1e-15);
        assert!((chi2_exact(&rep, 0.5).unwrap() - 0.25).abs() < 1e-15);
        assert!((tvd_exact(&rep, 0.5).unwrap() - 0.125).abs() < 1e-15);
        assert!((achievability_gap(&rep).unwrap() - 0.125).abs() < 1e-15);
        // loss = n(1-eps) - 1 + eps^n for the repetition code
        for eps in [0.1, 0.3, 0.7] {
            let analytic = 2.0 * (1.0 - eps) - 1.0 + eps * eps;
            assert!((equivocation_loss_exact(&rep, eps).unwrap() - analytic).abs() < 1e-14);
        }
    }

    #[test]
    fn kappa2_n3_by_hand() {
        // columns 01,10,11: every pair of columns has rank 2, all three rank 2.
        // b = 0 except the full pattern (b = 1): loss = (1-eps)^3.
        let code = g(2, &[1, 2, 3]);
        let loss = equivocation_loss_exact(&code, 0.5).unwrap();
        assert!((loss - 0.125).abs() < 1e-15);
    }

    #[test]
    fn endpoints() {
        let code = g(2, &[1, 2, 3, 1]);
        assert_eq!(equivocation_loss_exact(&code, 1.0).unwrap(), 0.0);
        assert_eq!(chi2_exact(&code, 1.0).unwrap(), 0.0);
        let k = code.k() as i32;
        assert!((tvd_exact(&code, 0.0).unwrap() - (1.0 - 0.5f64.powi(k))).abs() < 1e-15);
        assert!(equivocation_loss_exact(&code, 1.5).is_err());
        let single = g(1, &[1]);
        assert_eq!(chi2_exact(&single, 0.3).unwrap(), 0.0);
        let id = GeneratorMatrix::identity(4).unwrap();
        assert_eq!(tvd_exact(&id, 0.4).unwrap(), 0.0);
        assert_eq!(achievability_gap(&id).unwrap(), 0.0);
    }

    #[test]
    fn loss_at_zero_erasure_is_n_minus_rank() {
        for words in [&[1u32, 2, 3, 5, 6][..], &[1, 1, 2, 2], &[3, 5, 6, 7, 9]] {
            let code = g(4, words);
            let expected = (code.n() - code.rank()) as f64;
            assert_eq!(equivocation_loss_exact(&code, 0.0).unwrap(), expected);
        }
    }

    #[test]
    fn incremental_sweep_matches_recomputation() {
        let code = g(4, &[1, 3, 5, 7, 9, 12, 15, 2, 2, 6]);
        assert_eq!(
            PatternHistogram::sweep(&code).unwrap(),
            PatternHistogram::sweep_per_pattern(&code).unwrap()
        );
    }

    #[test]
    fn too_large_is_refused() {
        let words: Vec<u32> = (1..=25).map(|i| (i % 15) + 1).collect();
        let code = g(4, &words);
        assert!(matches!(
            equivocation_loss_exact(&code, 0.5),
            Err(Error::TooLarge { .. })
        ));
    }

    #[test]
    fn coset_encoding() {
        let rep = g(1, &[1, 1]);
        let x = coset_encode(&BitRow::parse("1").unwrap(), &BitRow::parse("0").unwrap(), &rep).unwrap();
        assert_eq!(x.to_string(), "01");

        let code = g(3, &[1, 2, 4, 3, 5, 6]);
        let enc = CosetEncoder::new(&code).unwrap();
        let zero = enc.encode(&BitRow::zeros(3), &BitRow::zeros(3)).unwrap();
        assert!(zero.is_zero());
        // fixing m and varying m_aux stays inside m's coset of the row space
        let m = BitRow::parse("101").unwrap();
        let base = enc.encode(&m, &BitRow::zeros(3)).unwrap();
        let rows = code.rows();
        for aux in 0..8u32 {
            let aux_row = BitRow::from_bools(&[(aux & 1) == 1, (aux & 2) == 2, (aux & 4) == 4]);
            let mut diff = enc.encode(&m, &aux_row).unwrap();
            diff.xor_assign(&base);
            let mut expect = BitRow::zeros(6);
            for (i, r) in rows.iter().enumerate() {
                if (aux >> i) & 1 == 1 {
                    expect.xor_assign(r);
                }
            }
            assert_eq!(diff, expect);
        }
        let deficient = g(2, &[1, 1, 1]);
        assert!(matches!(
            CosetEncoder::new(&deficient),
            Err(Error::RankDeficient { .. })
        ));
    }
}
