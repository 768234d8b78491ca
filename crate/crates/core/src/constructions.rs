//! Reference codes used as comparison points.
//!
//! * random codes: `n` distinct nonzero columns drawn uniformly
//! * LDPC-dual codes: columns of weight 2, then 3, and so on
//! * subspace exclusion codes: every nonzero column outside a `u`-dimensional subspace
//! * BKLC-incremental codes: a seed generator matrix grown one column at a
//!   time by a greedy rule on the syndrome distribution over a binary
//!   symmetric channel with matched crossover

use rand::seq::index;
use rand::Rng;

use crate::error::{Error, Result};
use crate::gf2::{GeneratorMatrix, MAX_KAPPA};

fn check_kappa(kappa: usize) -> Result<usize> {
    if kappa == 0 || kappa > MAX_KAPPA {
        return Err(Error::OutOfRange {
            what: "kappa",
            value: kappa as i64,
            expected: format!("1..={MAX_KAPPA}"),
        });
    }
    Ok((1usize << kappa) - 1)
}

/// `n` distinct nonzero columns, uniformly without replacement, in draw order.
pub fn random_code<R: Rng + ?Sized>(kappa: usize, n: usize, rng: &mut R) -> Result<GeneratorMatrix> {
    let len = check_kappa(kappa)?;
    if n == 0 || n > len {
        return Err(Error::OutOfRange {
            what: "n",
            value: n as i64,
            expected: format!("1..={len}"),
        });
    }
    let words: Vec<u32> = index::sample(rng, len, n).into_iter().map(|i| i as u32 + 1).collect();
    GeneratorMatrix::from_words(kappa, &words)
}

/// Largest blocklength [`ldpc_dual_code`] supports: `2^kappa - 1 - kappa`.
pub fn ldpc_capacity(kappa: usize) -> usize {
    (1usize << kappa) - 1 - kappa
}

/// All weight-2 columns, then all weight-3 columns, and so on; the last,
/// partial weight class is a seeded uniform selection. Within a class the
/// columns are in ascending `ν` index.
pub fn ldpc_dual_code<R: Rng + ?Sized>(kappa: usize, n: usize, rng: &mut R) -> Result<GeneratorMatrix> {
    check_kappa(kappa)?;
    let cap = ldpc_capacity(kappa);
    if n == 0 || n > cap {
        return Err(Error::OutOfRange {
            what: "n",
            value: n as i64,
            expected: format!("1..={cap}"),
        });
    }
    let mut words = Vec::with_capacity(n);
    for weight in 2..=kappa as u32 {
        let class: Vec<u32> = (1u32..1 << kappa).filter(|w| w.count_ones() == weight).collect();
        let room = n - words.len();
        if class.len() <= room {
            words.extend(class);
        } else {
            let mut pick: Vec<u32> = index::sample(rng, class.len(), room)
                .into_iter()
                .map(|i| class[i])
                .collect();
            pick.sort_unstable();
            words.extend(pick);
        }
        if words.len() == n {
            break;
        }
    }
    GeneratorMatrix::from_words(kappa, &words)
}

/// Every nonzero column outside `span{e_0, ..., e_{u-1}}`, in ascending
/// `ν` index; `n = 2^kappa - 2^u`.
pub fn subspace_exclusion_code(kappa: usize, u: usize) -> Result<GeneratorMatrix> {
    check_kappa(kappa)?;
    if u >= kappa {
        return Err(Error::OutOfRange {
            what: "u",
            value: u as i64,
            expected: format!("0..{kappa}"),
        });
    }
    let words: Vec<u32> = (1u32..1 << kappa).filter(|w| w >> u != 0).collect();
    GeneratorMatrix::from_words(kappa, &words)
}

/// Binary entropy in bits.
pub fn binary_entropy(p: f64) -> f64 {
    let term = |x: f64| if x <= 0.0 { 0.0 } else { -x * x.log2() };
    term(p) + term(1.0 - p)
}

/// The crossover `p ∈ [0, 1/2]` of the binary symmetric channel whose
/// capacity gap `h(p)` equals the erasure rate `epsilon`.
pub fn bsc_p_from_epsilon(epsilon: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&epsilon) {
        return Err(Error::OutOfRangeReal {
            what: "epsilon",
            value: epsilon,
            expected: "[0, 1]",
        });
    }
    if epsilon == 0.0 {
        return Ok(0.0);
    }
    if epsilon == 1.0 {
        return Ok(0.5);
    }
    let (mut lo, mut hi) = (0.0f64, 0.5f64);
    for _ in 0..2000 {
        let mid = 0.5 * (lo + hi);
        let h = binary_entropy(mid);
        if (h - epsilon).abs() <= 1e-13 || mid == lo || mid == hi {
            return Ok(mid);
        }
        if h < epsilon {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Distribution of the syndrome `Σ e_j c_j` of a code over a binary
/// symmetric channel, indexed by the `ν` word of the syndrome.
#[derive(Debug, Clone, PartialEq)]
pub struct SyndromeDistribution {
    kappa: usize,
    p: Vec<f64>,
}

impl SyndromeDistribution {
    /// The empty code: syndrome 0 with certainty.
    pub fn point_mass(kappa: usize) -> Result<Self> {
        let len = check_kappa(kappa)? + 1;
        let mut p = vec![0.0; len];
        p[0] = 1.0;
        Ok(Self { kappa, p })
    }

    /// Syndrome distribution of `g`'s columns at crossover `crossover`.
    pub fn of_code(g: &GeneratorMatrix, crossover: f64) -> Result<Self> {
        let mut s = Self::point_mass(g.kappa())?;
        for w in g.words() {
            s = s.appended(w, crossover);
        }
        Ok(s)
    }

    pub fn kappa(&self) -> usize {
        self.kappa
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.p
    }

    /// `(1 - p) s + p shift(s, c)`.
    pub fn appended(&self, column: u32, crossover: f64) -> Self {
        let c = column as usize;
        let p = self
            .p
            .iter()
            .enumerate()
            .map(|(x, &v)| (1.0 - crossover) * v + crossover * self.p[x ^ c])
            .collect();
        Self { kappa: self.kappa, p }
    }

    pub fn entropy(&self) -> f64 {
        self.p.iter().filter(|&&v| v > 0.0).map(|&v| -v * v.log2()).sum()
    }

    pub fn total(&self) -> f64 {
        self.p.iter().sum()
    }
}

/// Scores a candidate column; the highest score is appended.
pub trait ColumnStrategy {
    fn score(&self, current: &SyndromeDistribution, candidate: u32, crossover: f64) -> f64;
}

/// Prefers the column that leaves the syndrome closest to uniform, measured
/// by its entropy after the append.
#[derive(Debug, Clone, Copy, Default)]
pub struct MaxSyndromeEntropy;

impl ColumnStrategy for MaxSyndromeEntropy {
    fn score(&self, current: &SyndromeDistribution, candidate: u32, crossover: f64) -> f64 {
        current.appended(candidate, crossover).entropy()
    }
}

/// Scores closer than this are treated as ties.
const SCORE_TIE: f64 = 1e-12;

/// Grows `seed` to blocklength `n` with [`MaxSyndromeEntropy`].
pub fn bklc_incremental(seed: &GeneratorMatrix, n: usize, crossover: f64) -> Result<GeneratorMatrix> {
    bklc_incremental_with(seed, n, crossover, &MaxSyndromeEntropy)
}

/// Grows `seed` one column at a time, appending the highest-scoring nonzero
/// column; ties go to the lowest `ν` index. Returns the matrix and keeps the
/// seed columns as a prefix.
pub fn bklc_incremental_with<S: ColumnStrategy + ?Sized>(
    seed: &GeneratorMatrix,
    n: usize,
    crossover: f64,
    strategy: &S,
) -> Result<GeneratorMatrix> {
    let kappa = seed.kappa();
    if seed.rank() < kappa {
        return Err(Error::RankDeficient {
            rank: seed.rank(),
            kappa,
        });
    }
    if n < seed.n() {
        return Err(Error::OutOfRange {
            what: "n",
            value: n as i64,
            expected: format!(">= seed blocklength {}", seed.n()),
        });
    }
    if !(0.0..=1.0).contains(&crossover) {
        return Err(Error::OutOfRangeReal {
            what: "p",
            value: crossover,
            expected: "[0, 1]",
        });
    }
    let mut words: Vec<u32> = seed.words().collect();
    let mut synd = SyndromeDistribution::of_code(seed, crossover)?;
    while words.len() < n {
        let mut best = (1u32, f64::NEG_INFINITY);
        for c in 1u32..1 << kappa {
            let score = strategy.score(&synd, c, crossover);
            if score > best.1 + SCORE_TIE {
                best = (c, score);
            }
        }
        words.push(best.0);
        synd = synd.appended(best.0, crossover);
    }
    GeneratorMatrix::from_words(kappa, &words)
}
