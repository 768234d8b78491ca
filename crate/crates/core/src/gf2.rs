//! Linear algebra over GF(2).
//!
//! Vectors of the code space `W = F_2^kappa` are packed into a single `u16`
//! word: coordinate `j` of a vector is bit `j` of the word, so the `i`-th
//! nonzero vector is simply the binary expansion of `i`. Rows over `F_2^n`
//! (used when building the auxiliary coset generator) may be much wider and
//! are stored as [`BitRow`] limbs.
//!
//! Subspaces are kept in a canonical reduced echelon form: every basis vector
//! has a distinct leading (highest set) bit, no other basis vector has that
//! bit set, and the basis is ordered by ascending leading bit. Enumerating
//! pivot patterns and free coefficients therefore yields every subspace
//! exactly once.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest supported dimension of the code space.
pub const MAX_KAPPA: usize = 16;

fn check_kappa(kappa: usize) -> Result<()> {
    if kappa == 0 || kappa > MAX_KAPPA {
        return Err(Error::OutOfRange {
            what: "kappa",
            value: kappa as i64,
            expected: format!("1..={MAX_KAPPA}"),
        });
    }
    Ok(())
}

/// An element of `F_2^kappa`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BitVector {
    bits: u16,
    kappa: u8,
}

impl BitVector {
    pub fn new(bits: u32, kappa: usize) -> Result<Self> {
        check_kappa(kappa)?;
        if (bits as u64) >> kappa != 0 {
            return Err(Error::OutOfRange {
                what: "bits",
                value: bits as i64,
                expected: format!("< 2^{kappa}"),
            });
        }
        Ok(Self {
            bits: bits as u16,
            kappa: kappa as u8,
        })
    }

    pub fn zero(kappa: usize) -> Result<Self> {
        Self::new(0, kappa)
    }

    /// Unit vector `e_j`.
    pub fn unit(j: usize, kappa: usize) -> Result<Self> {
        if j >= kappa {
            return Err(Error::OutOfRange {
                what: "coordinate",
                value: j as i64,
                expected: format!("< {kappa}"),
            });
        }
        Self::new(1 << j, kappa)
    }

    #[inline]
    pub fn bits(&self) -> u32 {
        self.bits as u32
    }

    #[inline]
    pub fn kappa(&self) -> usize {
        self.kappa as usize
    }

    #[inline]
    pub fn is_zero(&self) -> bool {
        self.bits == 0
    }

    #[inline]
    pub fn weight(&self) -> u32 {
        self.bits.count_ones()
    }

    /// Coordinate `j` of the vector.
    #[inline]
    pub fn get(&self, j: usize) -> bool {
        (self.bits >> j) & 1 == 1
    }

    pub fn xor(&self, other: &BitVector) -> Result<BitVector> {
        if self.kappa != other.kappa {
            return Err(Error::DimensionMismatch {
                expected: self.kappa(),
                found: other.kappa(),
            });
        }
        Ok(BitVector {
            bits: self.bits ^ other.bits,
            kappa: self.kappa,
        })
    }

    /// Inner product over GF(2).
    #[inline]
    pub fn dot(&self, other: &BitVector) -> bool {
        (self.bits & other.bits).count_ones() & 1 == 1
    }
}

impl fmt::Display for BitVector {
    /// Most significant coordinate first, e.g. `nu(5, 3)` prints as `101`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for j in (0..self.kappa()).rev() {
            f.write_str(if self.get(j) { "1" } else { "0" })?;
        }
        Ok(())
    }
}

/// `ν(i)`: the `i`-th nonzero vector of `F_2^kappa`.
pub fn nu(i: usize, kappa: usize) -> Result<BitVector> {
    check_kappa(kappa)?;
    let top = (1usize << kappa) - 1;
    if i == 0 || i > top {
        return Err(Error::OutOfRange {
            what: "i",
            value: i as i64,
            expected: format!("1..={top}"),
        });
    }
    BitVector::new(i as u32, kappa)
}

/// Inserts `v` into an XOR basis indexed by leading bit. Returns `true` if the
/// basis grew.
#[inline]
pub(crate) fn insert_reduced(basis: &mut [u32; 32], mut v: u32) -> bool {
    while v != 0 {
        let lead = 31 - v.leading_zeros() as usize;
        if basis[lead] == 0 {
            basis[lead] = v;
            return true;
        }
        v ^= basis[lead];
    }
    false
}

/// Rank of a list of packed words.
pub(crate) fn rank_words(words: impl IntoIterator<Item = u32>) -> usize {
    let mut basis = [0u32; 32];
    words.into_iter().filter(|&w| insert_reduced(&mut basis, w)).count()
}

/// GF(2) rank of the matrix whose columns are `columns`.
pub fn rank(columns: &[BitVector]) -> Result<usize> {
    if let Some(first) = columns.first() {
        if let Some(bad) = columns.iter().find(|c| c.kappa != first.kappa) {
            return Err(Error::DimensionMismatch {
                expected: first.kappa(),
                found: bad.kappa(),
            });
        }
    }
    Ok(rank_words(columns.iter().map(|c| c.bits())))
}

/// A `kappa x n` binary generator matrix stored column by column.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GeneratorMatrix {
    kappa: usize,
    columns: Vec<u16>,
}

impl GeneratorMatrix {
    /// Builds a generator matrix from packed column words.
    pub fn from_words(kappa: usize, words: &[u32]) -> Result<Self> {
        check_kappa(kappa)?;
        let mut columns = Vec::with_capacity(words.len());
        for (index, &w) in words.iter().enumerate() {
            if w == 0 {
                return Err(Error::ZeroColumn { index });
            }
            if (w as u64) >> kappa != 0 {
                return Err(Error::OutOfRange {
                    what: "column",
                    value: w as i64,
                    expected: format!("< 2^{kappa}"),
                });
            }
            columns.push(w as u16);
        }
        Ok(Self { kappa, columns })
    }

    pub fn from_columns(kappa: usize, columns: &[BitVector]) -> Result<Self> {
        if let Some(bad) = columns.iter().find(|c| c.kappa() != kappa) {
            return Err(Error::DimensionMismatch {
                expected: kappa,
                found: bad.kappa(),
            });
        }
        let words: Vec<u32> = columns.iter().map(|c| c.bits()).collect();
        Self::from_words(kappa, &words)
    }

    /// The `kappa x kappa` identity.
    pub fn identity(kappa: usize) -> Result<Self> {
        let words: Vec<u32> = (0..kappa).map(|j| 1u32 << j).collect();
        Self::from_words(kappa, &words)
    }

    #[inline]
    pub fn kappa(&self) -> usize {
        self.kappa
    }

    /// Blocklength.
    #[inline]
    pub fn n(&self) -> usize {
        self.columns.len()
    }

    /// Message length `k = n - kappa` (zero if the matrix is narrower than tall).
    #[inline]
    pub fn k(&self) -> usize {
        self.n().saturating_sub(self.kappa)
    }

    pub fn column(&self, j: usize) -> BitVector {
        BitVector {
            bits: self.columns[j],
            kappa: self.kappa as u8,
        }
    }

    pub fn columns(&self) -> impl Iterator<Item = BitVector> + '_ {
        (0..self.n()).map(|j| self.column(j))
    }

    /// Packed column words.
    pub fn words(&self) -> impl Iterator<Item = u32> + '_ {
        self.columns.iter().map(|&c| c as u32)
    }

    pub fn rank(&self) -> usize {
        rank_words(self.words())
    }

    /// Smallest weight of a nonzero codeword `mG`, by trying every message;
    /// `None` when the rows are dependent.
    pub fn min_distance(&self) -> Option<usize> {
        if self.rank() < self.kappa {
            return None;
        }
        (1u32..1 << self.kappa)
            .map(|m| {
                self.columns
                    .iter()
                    .filter(|&&c| (m & c as u32).count_ones() & 1 == 1)
                    .count()
            })
            .min()
    }

    /// Row `r` of the matrix as a vector of `F_2^n`.
    pub fn row(&self, r: usize) -> BitRow {
        let mut row = BitRow::zeros(self.n());
        for (j, &c) in self.columns.iter().enumerate() {
            if (c >> r) & 1 == 1 {
                row.set(j, true);
            }
        }
        row
    }

    pub fn rows(&self) -> Vec<BitRow> {
        (0..self.kappa).map(|r| self.row(r)).collect()
    }

    /// Copy with columns reordered by `perm` (`new[j] = old[perm[j]]`).
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        if perm.len() != self.n() {
            return Err(Error::DimensionMismatch {
                expected: self.n(),
                found: perm.len(),
            });
        }
        let words: Vec<u32> = perm.iter().map(|&p| self.columns[p] as u32).collect();
        Self::from_words(self.kappa, &words)
    }
}

/// A vector of `F_2^n` for arbitrary `n`, used for the rows of the coset
/// generator `[G'; G]`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BitRow {
    len: usize,
    limbs: Vec<u64>,
}

impl BitRow {
    pub fn zeros(len: usize) -> Self {
        Self {
            len,
            limbs: vec![0; len.div_ceil(64)],
        }
    }

    pub fn unit(j: usize, len: usize) -> Self {
        let mut row = Self::zeros(len);
        row.set(j, true);
        row
    }

    /// Parses a string of `0`/`1` characters, most significant coordinate first
    /// (the same orientation as [`BitVector`]'s `Display`).
    pub fn parse(s: &str) -> Result<Self> {
        let len = s.len();
        let mut row = Self::zeros(len);
        for (pos, ch) in s.chars().enumerate() {
            match ch {
                '0' => {}
                '1' => row.set(len - 1 - pos, true),
                _ => return Err(Error::Invalid(format!("bad bit character {ch:?}"))),
            }
        }
        Ok(row)
    }

    pub fn from_bools(bits: &[bool]) -> Self {
        let mut row = Self::zeros(bits.len());
        for (j, &b) in bits.iter().enumerate() {
            row.set(j, b);
        }
        row
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.len
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    pub fn get(&self, j: usize) -> bool {
        (self.limbs[j / 64] >> (j % 64)) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, j: usize, value: bool) {
        let mask = 1u64 << (j % 64);
        if value {
            self.limbs[j / 64] |= mask;
        } else {
            self.limbs[j / 64] &= !mask;
        }
    }

    pub fn is_zero(&self) -> bool {
        self.limbs.iter().all(|&l| l == 0)
    }

    pub fn xor_assign(&mut self, other: &BitRow) {
        for (a, b) in self.limbs.iter_mut().zip(&other.limbs) {
            *a ^= b;
        }
    }

    /// Highest set coordinate.
    pub fn leading(&self) -> Option<usize> {
        self.limbs
            .iter()
            .enumerate()
            .rev()
            .find(|(_, &l)| l != 0)
            .map(|(i, &l)| i * 64 + 63 - l.leading_zeros() as usize)
    }

    pub fn to_bools(&self) -> Vec<bool> {
        (0..self.len).map(|j| self.get(j)).collect()
    }
}

impl fmt::Display for BitRow {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for j in (0..self.len).rev() {
            f.write_str(if self.get(j) { "1" } else { "0" })?;
        }
        Ok(())
    }
}

/// Echelon basis of a span of [`BitRow`]s, keyed by leading coordinate.
struct RowEchelon {
    rows: Vec<BitRow>,
}

impl RowEchelon {
    fn new() -> Self {
        Self { rows: Vec::new() }
    }

    /// Reduces `v` against the basis; returns the residue.
    fn reduce(&self, mut v: BitRow) -> BitRow {
        // rows are sorted by descending leading coordinate
        for r in &self.rows {
            let lead = r.leading().expect("basis rows are nonzero");
            if v.get(lead) {
                v.xor_assign(r);
            }
        }
        v
    }

    fn insert(&mut self, v: BitRow) -> bool {
        let residue = self.reduce(v);
        match residue.leading() {
            None => false,
            Some(lead) => {
                let pos = self
                    .rows
                    .iter()
                    .position(|r| r.leading().unwrap() < lead)
                    .unwrap_or(self.rows.len());
                self.rows.insert(pos, residue);
                true
            }
        }
    }
}

/// Completes linearly independent rows of `F_2^n` to a basis of `F_2^n`.
///
/// The completion is canonical: unit vectors `e_0, e_1, ...` are appended in
/// order whenever they are not yet in the span.
pub fn extend_basis(rows: &[BitRow], n: usize) -> Result<Vec<BitRow>> {
    if let Some(bad) = rows.iter().find(|r| r.len() != n) {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: bad.len(),
        });
    }
    let mut echelon = RowEchelon::new();
    for r in rows {
        if !echelon.insert(r.clone()) {
            return Err(Error::LinearlyDependent);
        }
    }
    let mut extra = Vec::with_capacity(n - rows.len());
    for j in 0..n {
        if echelon.rows.len() == n {
            break;
        }
        let e = BitRow::unit(j, n);
        if echelon.insert(e.clone()) {
            extra.push(e);
        }
    }
    Ok(extra)
}

/// A linear subspace of `F_2^kappa` in canonical reduced echelon form.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Subspace {
    kappa: usize,
    basis: Vec<u16>,
}

impl Subspace {
    /// The span of `vectors`, reduced to canonical form.
    pub fn span(kappa: usize, vectors: &[BitVector]) -> Result<Self> {
        check_kappa(kappa)?;
        if let Some(bad) = vectors.iter().find(|v| v.kappa() != kappa) {
            return Err(Error::DimensionMismatch {
                expected: kappa,
                found: bad.kappa(),
            });
        }
        let mut table = [0u32; 32];
        for v in vectors {
            insert_reduced(&mut table, v.bits());
        }
        // back-substitute so that pivots are cleared from every other vector
        for lead in 0..kappa {
            if table[lead] == 0 {
                continue;
            }
            for upper in lead + 1..kappa {
                if (table[upper] >> lead) & 1 == 1 {
                    table[upper] ^= table[lead];
                }
            }
        }
        let basis = (0..kappa).filter(|&l| table[l] != 0).map(|l| table[l] as u16).collect();
        Ok(Self { kappa, basis })
    }

    pub fn zero(kappa: usize) -> Result<Self> {
        Self::span(kappa, &[])
    }

    pub fn full(kappa: usize) -> Result<Self> {
        let units: Vec<BitVector> = (0..kappa).map(|j| BitVector::unit(j, kappa)).collect::<Result<_>>()?;
        Self::span(kappa, &units)
    }

    #[inline]
    pub fn kappa(&self) -> usize {
        self.kappa
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn basis(&self) -> Vec<BitVector> {
        self.basis
            .iter()
            .map(|&b| BitVector {
                bits: b,
                kappa: self.kappa as u8,
            })
            .collect()
    }

    pub(crate) fn basis_words(&self) -> &[u16] {
        &self.basis
    }

    /// Membership test by reduction against the echelon basis.
    pub fn contains(&self, v: &BitVector) -> Result<bool> {
        if v.kappa() != self.kappa {
            return Err(Error::DimensionMismatch {
                expected: self.kappa,
                found: v.kappa(),
            });
        }
        Ok(contains_word(&self.basis, v.bits()))
    }

    /// All `2^dim` members of the subspace (including zero), in Gray-code order.
    pub fn members(&self) -> Vec<BitVector> {
        let mut out = Vec::with_capacity(1 << self.dim());
        for_each_member(&self.basis, |w| {
            out.push(BitVector {
                bits: w as u16,
                kappa: self.kappa as u8,
            })
        });
        out
    }
}

#[inline]
fn contains_word(basis: &[u16], mut v: u32) -> bool {
    for &b in basis.iter().rev() {
        let lead = 15 - (b.leading_zeros() as usize);
        if (v >> lead) & 1 == 1 {
            v ^= b as u32;
        }
    }
    v == 0
}

/// `subspace_contains` as a free function.
pub fn subspace_contains(s: &Subspace, v: &BitVector) -> Result<bool> {
    s.contains(v)
}

/// Visits every member of the span of `basis` (starting with zero) in Gray-code
/// order.
#[inline]
pub(crate) fn for_each_member(basis: &[u16], mut f: impl FnMut(u32)) {
    let mut v = 0u32;
    f(v);
    let count = 1u64 << basis.len();
    for i in 1..count {
        v ^= basis[i.trailing_zeros() as usize] as u32;
        f(v);
    }
}

/// Visits every nonzero member of the span of `basis`.
#[inline]
pub(crate) fn for_each_nonzero_member(basis: &[u16], mut f: impl FnMut(u32)) {
    let mut v = 0u32;
    let count = 1u64 << basis.len();
    for i in 1..count {
        v ^= basis[i.trailing_zeros() as usize] as u32;
        f(v);
    }
}

fn check_subspace_dim(kappa: usize, d: usize) -> Result<()> {
    check_kappa(kappa)?;
    if d > kappa {
        return Err(Error::OutOfRange {
            what: "d",
            value: d as i64,
            expected: format!("0..={kappa}"),
        });
    }
    Ok(())
}

/// Streams the canonical basis of every `d`-dimensional subspace of
/// `F_2^kappa` to `f`. The slice passed to `f` is ordered by ascending leading
/// bit.
pub fn for_each_subspace(kappa: usize, d: usize, mut f: impl FnMut(&[u16])) -> Result<()> {
    check_subspace_dim(kappa, d)?;
    let mut basis = vec![0u16; d];
    if d == 0 {
        f(&basis);
        return Ok(());
    }
    let mut free: Vec<Vec<usize>> = vec![Vec::new(); d];
    for pivots in 0u32..(1u32 << kappa) {
        if pivots.count_ones() as usize != d {
            continue;
        }
        let pivot_pos: Vec<usize> = (0..kappa).filter(|&p| (pivots >> p) & 1 == 1).collect();
        let mut total_free = 0usize;
        for (row, &p) in pivot_pos.iter().enumerate() {
            free[row].clear();
            free[row].extend((0..p).filter(|&j| (pivots >> j) & 1 == 0));
            total_free += free[row].len();
        }
        for assignment in 0u64..(1u64 << total_free) {
            let mut bit = 0;
            for (row, &p) in pivot_pos.iter().enumerate() {
                let mut w = 1u16 << p;
                for &j in &free[row] {
                    if (assignment >> bit) & 1 == 1 {
                        w |= 1 << j;
                    }
                    bit += 1;
                }
                basis[row] = w;
            }
            f(&basis);
        }
    }
    Ok(())
}

/// Every `d`-dimensional subspace of `F_2^kappa`, each exactly once.
pub fn enumerate_subspaces(kappa: usize, d: usize) -> Result<Vec<Subspace>> {
    let mut out = Vec::new();
    for_each_subspace(kappa, d, |b| {
        out.push(Subspace {
            kappa,
            basis: b.to_vec(),
        })
    })?;
    Ok(out)
}

/// Gaussian binomial coefficient `[kappa choose d]_2`.
pub fn gaussian_binomial(kappa: usize, d: usize) -> u128 {
    if d > kappa {
        return 0;
    }
    let mut num: u128 = 1;
    let mut den: u128 = 1;
    for i in 0..d {
        num *= (1u128 << (kappa - i)) - 1;
        den *= (1u128 << (d - i)) - 1;
    }
    num / den
}
