//! Finite-set algebra over the rationals: sum/product sets, iterated and
//! shifted variants, doubling constants, ratio sets, and multiplicative
//! dimension.
//!
//! Iterated products are computed by repeated pairwise products with
//! deduplication after each stage, never by enumerating k-tuples. Stages are
//! guarded by a configurable element budget so a set that explodes fails
//! loudly instead of exhausting memory.

use std::collections::BTreeSet;
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rational::{valuation_embedding, PrimeTable, Rational, ValuationVector};

/// Finite deduplicated set of rationals. Iteration follows the canonical
/// numeric order, which keeps every downstream computation deterministic.
#[derive(Clone, PartialEq, Eq, Default)]
pub struct RationalSet {
    elems: Vec<Rational>,
}

impl RationalSet {
    pub fn new() -> Self {
        RationalSet { elems: Vec::new() }
    }

    /// Build from arbitrary elements; duplicates collapse silently.
    pub fn from_elements(mut elems: Vec<Rational>) -> Self {
        elems.sort();
        elems.dedup();
        RationalSet { elems }
    }

    /// Build from elements, rejecting duplicates (the set file contract).
    pub fn from_unique(elems: Vec<Rational>) -> Result<Self> {
        let set = Self::from_elements(elems.clone());
        if set.len() != elems.len() {
            return Err(Error::invalid("duplicate elements"));
        }
        Ok(set)
    }

    pub fn len(&self) -> usize {
        self.elems.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elems.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Rational> {
        self.elems.iter()
    }

    pub fn as_slice(&self) -> &[Rational] {
        &self.elems
    }

    pub fn contains(&self, x: &Rational) -> bool {
        self.elems.binary_search(x).is_ok()
    }

    pub fn contains_zero(&self) -> bool {
        self.contains(&Rational::zero())
    }

    pub fn index_of(&self, x: &Rational) -> Option<usize> {
        self.elems.binary_search(x).ok()
    }

    /// Translate every element by `u`.
    pub fn translate(&self, u: &Rational) -> RationalSet {
        RationalSet::from_elements(self.iter().map(|a| a + u).collect())
    }

    /// Dilate every element by a nonzero `lambda`.
    pub fn dilate(&self, lambda: &Rational) -> Result<RationalSet> {
        if lambda.is_zero() {
            return Err(Error::ZeroOperand("dilation"));
        }
        Ok(RationalSet::from_elements(
            self.iter().map(|a| a * lambda).collect(),
        ))
    }

    pub fn is_subset_of(&self, other: &RationalSet) -> bool {
        self.iter().all(|x| other.contains(x))
    }
}

impl fmt::Debug for RationalSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter()).finish()
    }
}

impl FromIterator<Rational> for RationalSet {
    fn from_iter<I: IntoIterator<Item = Rational>>(iter: I) -> Self {
        RationalSet::from_elements(iter.into_iter().collect())
    }
}

impl Serialize for RationalSet {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.elems.serialize(s)
    }
}

impl<'de> Deserialize<'de> for RationalSet {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        Ok(RationalSet::from_elements(Vec::deserialize(d)?))
    }
}

/// Enumeration limits. `max_set_len` caps any materialized set stage;
/// `max_tuples` caps k-tuple enumeration in the energy module.
#[derive(Clone, Copy, Debug)]
pub struct Budget {
    pub max_set_len: usize,
    pub max_tuples: u128,
}

impl Default for Budget {
    fn default() -> Self {
        Budget {
            max_set_len: 10_000_000,
            max_tuples: 100_000_000,
        }
    }
}

impl Budget {
    pub fn with_limit(limit: u128) -> Self {
        Budget {
            max_set_len: usize::try_from(limit).unwrap_or(usize::MAX),
            max_tuples: limit,
        }
    }

    pub(crate) fn check_pairs(&self, left: usize, right: usize) -> Result<()> {
        let required = left as u128 * right as u128;
        if required > self.max_set_len as u128 {
            return Err(Error::BudgetExceeded {
                required,
                budget: self.max_set_len as u128,
            });
        }
        Ok(())
    }

    pub(crate) fn check_tuples(&self, base: usize, k: u32) -> Result<()> {
        let mut required: u128 = 1;
        for _ in 0..k {
            required = match required.checked_mul(base as u128) {
                Some(v) => v,
                None => {
                    return Err(Error::BudgetExceeded {
                        required: u128::MAX,
                        budget: self.max_tuples,
                    })
                }
            };
        }
        if required > self.max_tuples {
            return Err(Error::BudgetExceeded {
                required,
                budget: self.max_tuples,
            });
        }
        Ok(())
    }
}

const PARALLEL_PAIR_THRESHOLD: usize = 1 << 14;

fn pairwise<F>(a: &RationalSet, b: &RationalSet, op: F) -> RationalSet
where
    F: Fn(&Rational, &Rational) -> Rational + Sync,
{
    if a.len() * b.len() >= PARALLEL_PAIR_THRESHOLD {
        let partials: Vec<BTreeSet<Rational>> = a
            .as_slice()
            .par_chunks(64.max(a.len() / (4 * rayon::current_num_threads().max(1))))
            .map(|chunk| {
                let mut out = BTreeSet::new();
                for x in chunk {
                    for y in b.iter() {
                        out.insert(op(x, y));
                    }
                }
                out
            })
            .collect();
        let mut merged = BTreeSet::new();
        for p in partials {
            merged.extend(p);
        }
        RationalSet {
            elems: merged.into_iter().collect(),
        }
    } else {
        let mut out = Vec::with_capacity(a.len() * b.len());
        for x in a.iter() {
            for y in b.iter() {
                out.push(op(x, y));
            }
        }
        RationalSet::from_elements(out)
    }
}

/// `{ab : a in A, b in B}`, deduplicated.
pub fn product_set(a: &RationalSet, b: &RationalSet) -> RationalSet {
    pairwise(a, b, |x, y| x * y)
}

/// `{a+b : a in A, b in B}`.
pub fn sum_set(a: &RationalSet, b: &RationalSet) -> RationalSet {
    pairwise(a, b, |x, y| x + y)
}

/// `{a-b : a in A, b in B}`.
pub fn difference_set(a: &RationalSet, b: &RationalSet) -> RationalSet {
    pairwise(a, b, |x, y| x - y)
}

/// `{a/b : a in A, b in B}`; rejects 0 in B.
pub fn ratio_set(a: &RationalSet, b: &RationalSet) -> Result<RationalSet> {
    if b.contains_zero() {
        return Err(Error::ZeroInSet("ratio_set"));
    }
    Ok(pairwise(a, b, |x, y| x / y))
}

/// The k-fold product set `A^(k)`, by iterated pairwise products.
pub fn k_fold_product(a: &RationalSet, k: u32, budget: &Budget) -> Result<RationalSet> {
    if k < 1 {
        return Err(Error::invalid("k must be >= 1"));
    }
    let mut cur = a.clone();
    for _ in 1..k {
        budget.check_pairs(cur.len(), a.len())?;
        cur = product_set(&cur, a);
    }
    Ok(cur)
}

/// The k-fold sum set `kA`.
pub fn k_fold_sum(a: &RationalSet, k: u32, budget: &Budget) -> Result<RationalSet> {
    if k < 1 {
        return Err(Error::invalid("k must be >= 1"));
    }
    let mut cur = a.clone();
    for _ in 1..k {
        budget.check_pairs(cur.len(), a.len())?;
        cur = sum_set(&cur, a);
    }
    Ok(cur)
}

/// The shifted k-fold product `(A+u)^(k)`; rejects `u = 0`.
pub fn shifted_k_fold_product(
    a: &RationalSet,
    u: &Rational,
    k: u32,
    budget: &Budget,
) -> Result<RationalSet> {
    if u.is_zero() {
        return Err(Error::ZeroOperand("shift"));
    }
    k_fold_product(&a.translate(u), k, budget)
}

/// The exact doubling constant `K = |AA| / |A|`; rejects empty sets and 0 in A.
pub fn doubling_constant(a: &RationalSet) -> Result<Rational> {
    if a.is_empty() {
        return Err(Error::EmptySet("doubling_constant"));
    }
    if a.contains_zero() {
        return Err(Error::ZeroInSet("doubling_constant"));
    }
    let aa = product_set(a, a);
    Rational::new(aa.len() as i64, a.len() as i64)
}

// ---------------------------------------------------------------------------
// Multiplicative dimension
// ---------------------------------------------------------------------------

/// Exact affine rank of a family of integer vectors, computed over Q.
fn affine_rank(vectors: &[ValuationVector]) -> usize {
    if vectors.len() <= 1 {
        return 0;
    }
    let dim = vectors[0].len();
    let base = &vectors[0];
    let mut rows: Vec<Vec<BigRational>> = vectors[1..]
        .iter()
        .map(|v| {
            (0..dim)
                .map(|i| BigRational::from_integer(BigInt::from(v.0[i] - base.0[i])))
                .collect()
        })
        .collect();
    let mut rank = 0;
    for col in 0..dim {
        let pivot = (rank..rows.len()).find(|&r| !rows[r][col].is_zero());
        let Some(pivot) = pivot else { continue };
        rows.swap(rank, pivot);
        let head = rows[rank][col].clone();
        let pivot_row = rows[rank].clone();
        for row in rows.iter_mut().skip(rank + 1) {
            if row[col].is_zero() {
                continue;
            }
            let factor = &row[col] / &head;
            for (c, pivot_entry) in pivot_row.iter().enumerate().skip(col) {
                let sub = &factor * pivot_entry;
                row[c] = &row[c] - &sub;
            }
        }
        rank += 1;
        if rank == rows.len() {
            break;
        }
    }
    rank
}

/// Columns (prime indices) forming a full-rank minor of the direction matrix;
/// the projection of the embedding onto these primes is injective on the set.
pub(crate) fn pivot_prime_columns(vectors: &[ValuationVector]) -> Vec<usize> {
    if vectors.len() <= 1 {
        return Vec::new();
    }
    let dim = vectors[0].len();
    let base = &vectors[0];
    let mut rows: Vec<Vec<BigRational>> = vectors[1..]
        .iter()
        .map(|v| {
            (0..dim)
                .map(|i| BigRational::from_integer(BigInt::from(v.0[i] - base.0[i])))
                .collect()
        })
        .collect();
    let mut pivots = Vec::new();
    let mut rank = 0;
    for col in 0..dim {
        let pivot = (rank..rows.len()).find(|&r| !rows[r][col].is_zero());
        let Some(pivot) = pivot else { continue };
        rows.swap(rank, pivot);
        let head = rows[rank][col].clone();
        let pivot_row = rows[rank].clone();
        for row in rows.iter_mut().skip(rank + 1) {
            if row[col].is_zero() {
                continue;
            }
            let factor = &row[col] / &head;
            for (c, pivot_entry) in pivot_row.iter().enumerate().skip(col) {
                let sub = &factor * pivot_entry;
                row[c] = &row[c] - &sub;
            }
        }
        pivots.push(col);
        rank += 1;
        if rank == rows.len() {
            break;
        }
    }
    pivots
}

/// Least dimension of an affine space containing the valuation embedding.
/// Requires a set of positive rationals.
pub fn multiplicative_dimension(a: &RationalSet, table: &PrimeTable) -> Result<usize> {
    if a.is_empty() {
        return Err(Error::EmptySet("multiplicative_dimension"));
    }
    if a.iter().any(|x| !x.is_positive()) {
        return Err(Error::NonPositiveElement("multiplicative_dimension"));
    }
    let emb = valuation_embedding(a, table)?;
    Ok(affine_rank(&emb.vectors))
}

/// Dimension computed on absolute values, plus whether the sign pattern is
/// expressible as a multiplicative character of the prime valuations.
pub fn multiplicative_dimension_signed(
    a: &RationalSet,
    table: &PrimeTable,
) -> Result<(usize, bool)> {
    if a.is_empty() {
        return Err(Error::EmptySet("multiplicative_dimension"));
    }
    if a.contains_zero() {
        return Err(Error::ZeroInSet("multiplicative_dimension"));
    }
    let abs: RationalSet = a.iter().map(|x| x.abs()).collect();
    let emb = valuation_embedding(&abs, table)?;
    let dim = affine_rank(&emb.vectors);

    // Signs per original element, matched to abs vectors: solve
    // s_i = <v_i mod 2, t> over GF(2) for some t.
    let t_len = emb.primes.len();
    let words = t_len.div_ceil(64).max(1);
    let mut rows: Vec<(Vec<u64>, bool)> = Vec::with_capacity(a.len());
    for x in a.iter() {
        let idx = abs.index_of(&x.abs()).expect("abs element present");
        let mut bits = vec![0u64; words];
        for (i, &c) in emb.vectors[idx].0.iter().enumerate() {
            if c.rem_euclid(2) == 1 {
                bits[i / 64] |= 1 << (i % 64);
            }
        }
        rows.push((bits, x.is_negative()));
    }
    let consistent = gf2_solvable(&mut rows, words);
    Ok((dim, consistent))
}

fn gf2_solvable(rows: &mut [(Vec<u64>, bool)], words: usize) -> bool {
    let mut pivot_rows: Vec<(Vec<u64>, bool)> = Vec::new();
    for (bits, mut rhs) in rows.iter().cloned() {
        let mut bits = bits;
        for (p_bits, p_rhs) in &pivot_rows {
            let lead = leading_bit(p_bits);
            if let Some(l) = lead {
                if bits[l / 64] >> (l % 64) & 1 == 1 {
                    for w in 0..words {
                        bits[w] ^= p_bits[w];
                    }
                    rhs ^= p_rhs;
                }
            }
        }
        if bits.iter().all(|&w| w == 0) {
            if rhs {
                return false;
            }
        } else {
            pivot_rows.push((bits, rhs));
            pivot_rows.sort_by_key(|(b, _)| std::cmp::Reverse(leading_bit(b)));
        }
    }
    true
}

fn leading_bit(bits: &[u64]) -> Option<usize> {
    for (w, &word) in bits.iter().enumerate().rev() {
        if word != 0 {
            return Some(w * 64 + 63 - word.leading_zeros() as usize);
        }
    }
    None
}

// ---------------------------------------------------------------------------
// Theorem checks
// ---------------------------------------------------------------------------

/// Exact instance of the multiplicative Pluennecke-Ruzsa bound
/// `|A^(h)| <= K^h |A|` with `K = |AA|/|A|`.
#[derive(Clone, Debug, Serialize)]
pub struct PlunneckeReport {
    pub h: u32,
    pub lhs: u64,
    pub rhs: Rational,
    pub doubling: Rational,
    pub holds: bool,
}

pub fn plunnecke_check(a: &RationalSet, h: u32, budget: &Budget) -> Result<PlunneckeReport> {
    if h < 1 {
        return Err(Error::invalid("h must be >= 1"));
    }
    let doubling = doubling_constant(a)?;
    let lhs = k_fold_product(a, h, budget)?.len() as u64;
    let rhs = doubling.pow(h as i64)? * Rational::from(a.len() as u64);
    let holds = Rational::from(lhs) <= rhs;
    Ok(PlunneckeReport {
        h,
        lhs,
        rhs,
        doubling,
        holds,
    })
}

/// Exact instance of the Ruzsa triangle inequality `|A/A| <= |AA|^2 / |A|`.
#[derive(Clone, Debug, Serialize)]
pub struct RuzsaReport {
    pub lhs: u64,
    pub rhs: Rational,
    pub holds: bool,
}

pub fn ruzsa_triangle_check(a: &RationalSet) -> Result<RuzsaReport> {
    if a.is_empty() {
        return Err(Error::EmptySet("ruzsa_triangle_check"));
    }
    if a.contains_zero() {
        return Err(Error::ZeroInSet("ruzsa_triangle_check"));
    }
    let lhs = ratio_set(a, a)?.len() as u64;
    let aa = product_set(a, a).len() as u64;
    let rhs = Rational::new(
        BigInt::from(aa) * BigInt::from(aa),
        BigInt::from(a.len() as u64),
    )?;
    let holds = Rational::from(lhs) <= rhs;
    Ok(RuzsaReport { lhs, rhs, holds })
}

/// Sizes of iterated plain and shifted product sets, with the doubling
/// constant of the base set.
#[derive(Clone, Debug, Serialize)]
pub struct GrowthReport {
    pub k_max: u32,
    pub sizes_product: Vec<u64>,
    pub sizes_shifted: Vec<u64>,
    /// `log max{|A^(j)|, |(A+u)^(j)|} / log |A|` per j; None when |A| = 1.
    pub exponents: Vec<Option<f64>>,
    pub doubling: Rational,
    /// Set when the budget stopped the experiment before `k_max`.
    pub truncated_at: Option<u32>,
}
