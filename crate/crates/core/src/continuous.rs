//! Closed-form metrics on the continuous code-definition vector.
//!
//! A generator matrix is summarized by `q`, where `q_i` is the fraction of
//! its columns equal to `ν(i)`. Both the equivocation loss `l(n, eps, q)` and
//! the χ² divergence `λ(n, eps, q)` are sums of exponentials over subspaces
//! of `F_2^kappa`, weighted by `ζ(S, q)`, the total mass that `q` places on
//! the nonzero members of `S`. They agree with the exhaustive sweep whenever
//! `q` comes from an actual matrix and are smooth in `q`, so they can be
//! differentiated.
//!
//! `l` needs every subspace of every dimension. `λ` needs only the
//! `2^kappa - 1` hyperplanes; for those, `ζ` of the hyperplane with normal `a`
//! is `(Σ q + Ŵ(a)) / 2` with `Ŵ` the Walsh–Hadamard transform of `q`, which
//! is the default evaluation path. The direct hyperplane sum is kept as an
//! independent route.

use crate::error::{Error, Result};
use crate::gf2::{for_each_nonzero_member, for_each_subspace, GeneratorMatrix, Subspace, MAX_KAPPA};

/// Largest dimension accepted by the equivocation-loss path.
pub const MAX_KAPPA_EQ_LOSS: usize = 10;
/// Largest dimension accepted by the χ² path.
pub const MAX_KAPPA_CHI2: usize = 12;

const FLUSH: f64 = 1e-300;

/// Column fractions of a (possibly non-realizable) code.
///
/// Entry `i - 1` of [`as_slice`](Self::as_slice) holds `q_i`, the fraction
/// attached to `ν(i)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CodeDefVector {
    kappa: usize,
    n: usize,
    q: Vec<f64>,
}

/// Which of the domain constraints a vector satisfies.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Realizability {
    pub nonnegative: bool,
    pub unit_sum: bool,
    /// Every `q_i <= 1/n`, i.e. no column is used twice.
    pub single_use: bool,
    /// Largest distance of `n q_i` from an integer.
    pub max_integrality_gap: f64,
}

impl Realizability {
    pub fn is_realizable(&self) -> bool {
        self.nonnegative && self.unit_sum && self.max_integrality_gap <= REALIZE_TOL
    }
}

/// Rounding tolerance on `n q_i` when realizing a generator matrix.
pub const REALIZE_TOL: f64 = 1e-6;

impl CodeDefVector {
    pub fn new(kappa: usize, n: usize, q: Vec<f64>) -> Result<Self> {
        if kappa == 0 || kappa > MAX_KAPPA {
            return Err(Error::OutOfRange {
                what: "kappa",
                value: kappa as i64,
                expected: format!("1..={MAX_KAPPA}"),
            });
        }
        if n == 0 {
            return Err(Error::OutOfRange {
                what: "n",
                value: 0,
                expected: ">= 1".into(),
            });
        }
        let len = (1usize << kappa) - 1;
        if q.len() != len {
            return Err(Error::DimensionMismatch {
                expected: len,
                found: q.len(),
            });
        }
        if q.iter().any(|x| !x.is_finite()) {
            return Err(Error::Invalid("code definition vector has non-finite entries".into()));
        }
        Ok(Self { kappa, n, q })
    }

    /// The uniform fraction code `q̄`, all entries `1 / (2^kappa - 1)`.
    pub fn uniform(kappa: usize, n: usize) -> Result<Self> {
        let len = (1usize << kappa.min(MAX_KAPPA)) - 1;
        Self::new(kappa, n, vec![1.0 / len as f64; len])
    }

    #[inline]
    pub fn kappa(&self) -> usize {
        self.kappa
    }

    /// Target blocklength.
    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.q.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.q.is_empty()
    }

    /// `q_i` for `i` in `1..=2^kappa - 1`.
    #[inline]
    pub fn get(&self, i: usize) -> f64 {
        self.q[i - 1]
    }

    #[inline]
    pub fn as_slice(&self) -> &[f64] {
        &self.q
    }

    #[inline]
    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.q
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.q
    }

    pub fn sum(&self) -> f64 {
        self.q.iter().sum()
    }

    pub fn norm_sq(&self) -> f64 {
        self.q.iter().map(|x| x * x).sum()
    }

    /// `|q - q̄|`.
    pub fn dist_from_uniform(&self) -> f64 {
        let u = 1.0 / self.q.len() as f64;
        self.q.iter().map(|x| (x - u) * (x - u)).sum::<f64>().sqrt()
    }

    /// `q` indexed by packed word, with the zero word carrying no mass.
    pub(crate) fn by_word(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.q.len() + 1);
        out.push(0.0);
        out.extend_from_slice(&self.q);
        out
    }

    pub fn realizability(&self) -> Realizability {
        let nf = self.n as f64;
        let nonnegative = self.q.iter().all(|&x| x >= -1e-12);
        let unit_sum = (self.sum() - 1.0).abs() <= 1e-9;
        let single_use = self.q.iter().all(|&x| x <= 1.0 / nf + 1e-12);
        let max_integrality_gap = self
            .q
            .iter()
            .map(|&x| (nf * x - (nf * x).round()).abs())
            .fold(0.0, f64::max);
        Realizability {
            nonnegative,
            unit_sum,
            single_use,
            max_integrality_gap,
        }
    }
}

fn check_open_epsilon(epsilon: f64) -> Result<()> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::OutOfRangeReal {
            what: "epsilon",
            value: epsilon,
            expected: "(0, 1)",
        });
    }
    Ok(())
}

fn check_kappa_limit(kappa: usize, limit: usize) -> Result<()> {
    if kappa > limit {
        return Err(Error::OutOfRange {
            what: "kappa",
            value: kappa as i64,
            expected: format!("<= {limit} on this metric path"),
        });
    }
    Ok(())
}

/// `ζ(S, q)`: the mass of `q` on the nonzero members of `S`.
pub fn zeta(s: &Subspace, q: &CodeDefVector) -> Result<f64> {
    if s.kappa() != q.kappa() {
        return Err(Error::DimensionMismatch {
            expected: q.kappa(),
            found: s.kappa(),
        });
    }
    let mut acc = 0.0;
    for_each_nonzero_member(s.basis_words(), |w| acc += q.get(w as usize));
    Ok(acc)
}

/// `K_δ = ∏_{i=1}^{δ-1} (1 - 2^i)`.
pub fn k_delta(delta: usize) -> f64 {
    (1..delta).map(|i| 1.0 - (2f64).powi(i as i32)).product()
}

/// Neumaier compensated accumulator.
#[derive(Default, Clone, Copy)]
struct Compensated {
    sum: f64,
    c: f64,
}

impl Compensated {
    #[inline]
    fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.c += (self.sum - t) + x;
        } else {
            self.c += (x - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    fn value(&self) -> f64 {
        self.sum + self.c
    }
}

#[inline]
fn flushed_exp(x: f64) -> f64 {
    let v = x.exp();
    if v < FLUSH {
        0.0
    } else {
        v
    }
}

/// Equivocation loss together with its gradient (if requested), sharing the
/// per-subspace `ζ` values.
fn eq_loss_core(n: usize, epsilon: f64, q: &CodeDefVector, want_grad: bool) -> Result<(f64, Option<Vec<f64>>)> {
    check_open_epsilon(epsilon)?;
    let kappa = q.kappa();
    check_kappa_limit(kappa, MAX_KAPPA_EQ_LOSS)?;
    let nf = n as f64;
    let rate = nf * epsilon.ln();
    let qw = q.by_word();
    let mut grad_acc = if want_grad { vec![0.0; qw.len()] } else { Vec::new() };
    let mut total = Compensated::default();
    for delta in 1..=kappa {
        let kd = k_delta(delta);
        let mut acc = Compensated::default();
        for_each_subspace(kappa, kappa - delta, |basis| {
            let mut z = 0.0;
            for_each_nonzero_member(basis, |w| z += qw[w as usize]);
            let t = flushed_exp(rate * (1.0 - z));
            acc.add(t);
            if want_grad && t != 0.0 {
                let kt = kd * t;
                for_each_nonzero_member(basis, |w| grad_acc[w as usize] += kt);
            }
        })?;
        total.add(kd * acc.value());
    }
    let value = nf * (1.0 - epsilon) - kappa as f64 + total.value();
    let grad = want_grad.then(|| grad_acc[1..].iter().map(|g| -rate * g).collect());
    Ok((value, grad))
}

/// `l(n, eps, q)`, the equivocation loss in bits.
pub fn eq_loss_l(n: usize, epsilon: f64, q: &CodeDefVector) -> Result<f64> {
    Ok(eq_loss_core(n, epsilon, q, false)?.0)
}

/// `∇l(n, eps, q)`, one entry per `q_i`.
pub fn grad_eq_loss(n: usize, epsilon: f64, q: &CodeDefVector) -> Result<Vec<f64>> {
    Ok(eq_loss_core(n, epsilon, q, true)?.1.unwrap())
}

pub fn eq_loss_with_grad(n: usize, epsilon: f64, q: &CodeDefVector) -> Result<(f64, Vec<f64>)> {
    let (v, g) = eq_loss_core(n, epsilon, q, true)?;
    Ok((v, g.unwrap()))
}

/// In-place unnormalized Walsh–Hadamard transform; `data.len()` must be a
/// power of two.
pub fn walsh_hadamard(data: &mut [f64]) {
    let len = data.len();
    debug_assert!(len.is_power_of_two());
    let mut h = 1;
    while h < len {
        for block in (0..len).step_by(2 * h) {
            for j in block..block + h {
                let a = data[j];
                let b = data[j + h];
                data[j] = a + b;
                data[j + h] = a - b;
            }
        }
        h *= 2;
    }
}

/// `ζ` of every hyperplane, indexed by its normal vector (entry 0 unused).
fn hyperplane_zetas(q: &CodeDefVector) -> Vec<f64> {
    let mut w = q.by_word();
    let total: f64 = q.sum();
    walsh_hadamard(&mut w);
    w.iter_mut().for_each(|x| *x = 0.5 * (total + *x));
    w
}

struct Chi2Terms {
    ln_prefactor: f64,
    ln_ratio: f64,
    nf: f64,
}

impl Chi2Terms {
    fn new(n: usize, epsilon: f64, kappa: usize) -> Self {
        let nf = n as f64;
        Self {
            ln_prefactor: nf * (2.0 - epsilon).ln() - kappa as f64 * std::f64::consts::LN_2,
            ln_ratio: (epsilon / (2.0 - epsilon)).ln(),
            nf,
        }
    }

    /// `(2 - eps)^n 2^-kappa (eps/(2 - eps))^{n(1 - ζ)}`
    #[inline]
    fn term(&self, z: f64) -> f64 {
        flushed_exp(self.ln_prefactor + self.nf * (1.0 - z) * self.ln_ratio)
    }
}

fn chi2_checks(epsilon: f64, q: &CodeDefVector) -> Result<()> {
    check_open_epsilon(epsilon)?;
    check_kappa_limit(q.kappa(), MAX_KAPPA_CHI2)
}

/// `λ(n, eps, q)`, the χ² divergence, via the Walsh–Hadamard transform.
pub fn chi2_lambda(n: usize, epsilon: f64, q: &CodeDefVector) -> Result<f64> {
    chi2_checks(epsilon, q)?;
    let terms = Chi2Terms::new(n, epsilon, q.kappa());
    let zetas = hyperplane_zetas(q);
    let mut acc = Compensated::default();
    acc.add(terms.ln_prefactor.exp());
    for &z in &zetas[1..] {
        acc.add(terms.term(z));
    }
    Ok(acc.value() - 1.0)
}

/// `∇λ(n, eps, q)` via two Walsh–Hadamard transforms.
pub fn grad_chi2(n: usize, epsilon: f64, q: &CodeDefVector) -> Result<Vec<f64>> {
    Ok(chi2_with_grad(n, epsilon, q)?.1)
}

pub fn chi2_with_grad(n: usize, epsilon: f64, q: &CodeDefVector) -> Result<(f64, Vec<f64>)> {
    chi2_checks(epsilon, q)?;
    let terms = Chi2Terms::new(n, epsilon, q.kappa());
    let zetas = hyperplane_zetas(q);
    let mut t: Vec<f64> = zetas.iter().map(|&z| terms.term(z)).collect();
    t[0] = 0.0;
    let mut acc = Compensated::default();
    acc.add(terms.ln_prefactor.exp());
    for &x in &t[1..] {
        acc.add(x);
    }
    let t_sum: f64 = t.iter().sum();
    walsh_hadamard(&mut t);
    let scale = -terms.nf * terms.ln_ratio;
    let grad = t[1..].iter().map(|&x| scale * 0.5 * (t_sum + x)).collect();
    Ok((acc.value() - 1.0, grad))
}

/// `λ` by explicit enumeration of the hyperplanes.
pub fn chi2_lambda_direct(n: usize, epsilon: f64, q: &CodeDefVector) -> Result<f64> {
    chi2_checks(epsilon, q)?;
    let kappa = q.kappa();
    let terms = Chi2Terms::new(n, epsilon, kappa);
    let qw = q.by_word();
    let mut acc = Compensated::default();
    acc.add(terms.ln_prefactor.exp());
    for_each_subspace(kappa, kappa - 1, |basis| {
        let mut z = 0.0;
        for_each_nonzero_member(basis, |w| z += qw[w as usize]);
        acc.add(terms.term(z));
    })?;
    Ok(acc.value() - 1.0)
}

/// `∇λ` by explicit enumeration of the hyperplanes.
pub fn grad_chi2_direct(n: usize, epsilon: f64, q: &CodeDefVector) -> Result<Vec<f64>> {
    chi2_checks(epsilon, q)?;
    let kappa = q.kappa();
    let terms = Chi2Terms::new(n, epsilon, kappa);
    let qw = q.by_word();
    let mut grad = vec![0.0; qw.len()];
    for_each_subspace(kappa, kappa - 1, |basis| {
        let mut z = 0.0;
        for_each_nonzero_member(basis, |w| z += qw[w as usize]);
        let t = terms.term(z);
        for_each_nonzero_member(basis, |w| grad[w as usize] += t);
    })?;
    let scale = -terms.nf * terms.ln_ratio;
    Ok(grad[1..].iter().map(|g| scale * g).collect())
}

/// Column fractions of an actual generator matrix.
pub fn q_from_generator(g: &GeneratorMatrix) -> CodeDefVector {
    let len = (1usize << g.kappa()) - 1;
    let mut q = vec![0.0; len];
    let step = 1.0 / g.n() as f64;
    for w in g.words() {
        q[w as usize - 1] += step;
    }
    CodeDefVector {
        kappa: g.kappa(),
        n: g.n(),
        q,
    }
}

/// Generator matrix with `round(n q_i)` copies of `ν(i)`, columns in
/// ascending `i`.
pub fn realize_generator(q: &CodeDefVector, n: usize) -> Result<GeneratorMatrix> {
    let nf = n as f64;
    let mut counts = Vec::with_capacity(q.len());
    let mut remainders = Vec::with_capacity(q.len());
    for (idx, &x) in q.as_slice().iter().enumerate() {
        let scaled = nf * x;
        let rounded = scaled.round();
        if (scaled - rounded).abs() > REALIZE_TOL || rounded < 0.0 {
            return Err(Error::NotRealizable {
                n,
                index: idx + 1,
                value: scaled,
            });
        }
        counts.push(rounded as usize);
        remainders.push(scaled - rounded);
    }
    let total: usize = counts.iter().sum();
    if (nf * q.sum() - nf).abs() > 0.5 {
        return Err(Error::InconsistentCounts { total, n });
    }
    if total == n + 1 {
        // drop the column whose rounding went up the most
        let (idx, _) = remainders
            .iter()
            .enumerate()
            .filter(|(i, _)| counts[*i] > 0)
            .min_by(|a, b| a.1.total_cmp(b.1))
            .ok_or(Error::InconsistentCounts { total, n })?;
        counts[idx] -= 1;
    } else if total + 1 == n {
        let (idx, _) = remainders
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .ok_or(Error::InconsistentCounts { total, n })?;
        counts[idx] += 1;
    } else if total != n {
        return Err(Error::InconsistentCounts { total, n });
    }
    let mut words = Vec::with_capacity(n);
    for (idx, &c) in counts.iter().enumerate() {
        words.extend(std::iter::repeat_n(idx as u32 + 1, c));
    }
    GeneratorMatrix::from_words(q.kappa(), &words)
}
