//! Exact energies built on representation tables.
//!
//! The central object is the table counting, for each pair `(x, y)`, the
//! k-tuples of `A` whose product is `x` and whose shifted product is `y`.
//! The mixed energy is the second moment of that table. Tables are built by
//! convolving one coordinate at a time, which produces the same counts as
//! enumerating k-tuples lexicographically at a fraction of the cost; the
//! test suite keeps a direct tuple enumerator as an independent oracle.
//!
//! Everything integer-valued stays exact (u128). Only the splitting-lemma
//! verifiers take k-th roots; those comparisons use f64 with a documented
//! relative tolerance of 1e-9.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::rational::{is_prime_u64, valuation, Rational};
use crate::setops::{Budget, RationalSet};

/// Relative tolerance for the floating-point root comparisons in the
/// splitting verifiers.
pub const ROOT_REL_TOL: f64 = 1e-9;

/// Tolerance on `sum w^2 = 1` for normalized weight vectors.
pub const WEIGHT_NORM_TOL: f64 = 1e-12;

/// A set with nonnegative real weights, aligned to the canonical order of
/// the base set.
#[derive(Clone, Debug)]
pub struct WeightedSet {
    base: RationalSet,
    weights: Vec<f64>,
}

impl WeightedSet {
    pub fn new(base: RationalSet, weights: Vec<f64>) -> Result<Self> {
        if weights.len() != base.len() {
            return Err(Error::invalid(format!(
                "{} weights for {} elements",
                weights.len(),
                base.len()
            )));
        }
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::invalid("weights must be finite and nonnegative"));
        }
        Ok(WeightedSet { base, weights })
    }

    /// Uniform weights `1/sqrt(|A|)`, satisfying the unit norm exactly up to
    /// rounding.
    pub fn uniform(base: RationalSet) -> Result<Self> {
        if base.is_empty() {
            return Err(Error::EmptySet("WeightedSet::uniform"));
        }
        let w = 1.0 / (base.len() as f64).sqrt();
        let n = base.len();
        WeightedSet::new(base, vec![w; n])
    }

    pub fn base(&self) -> &RationalSet {
        &self.base
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn weight_of(&self, x: &Rational) -> Option<f64> {
        self.base.index_of(x).map(|i| self.weights[i])
    }

    pub fn norm_sq(&self) -> f64 {
        self.weights.iter().map(|w| w * w).sum()
    }

    pub fn is_normalized(&self) -> bool {
        (self.norm_sq() - 1.0).abs() <= WEIGHT_NORM_TOL
    }

    /// The sub-weighted-set supported on `subset`, weights inherited.
    pub fn restrict(&self, subset: &RationalSet) -> Result<WeightedSet> {
        let weights = subset
            .iter()
            .map(|x| {
                self.weight_of(x)
                    .ok_or_else(|| Error::invalid(format!("{x} not in weighted base")))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(WeightedSet {
            base: subset.clone(),
            weights,
        })
    }
}

/// Exact counts of `(x, y) = (prod a_i, prod (a_i + u))` over k-tuples.
#[derive(Clone, Debug)]
pub struct RepTable {
    pub k: u32,
    pub u: Rational,
    counts: BTreeMap<(Rational, Rational), u64>,
}

impl RepTable {
    pub fn key_count(&self) -> usize {
        self.counts.len()
    }

    pub fn total_mass(&self) -> u128 {
        self.counts.values().map(|&c| c as u128).sum()
    }

    pub fn get(&self, x: &Rational, y: &Rational) -> u64 {
        self.counts
            .get(&(x.clone(), y.clone()))
            .copied()
            .unwrap_or(0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&(Rational, Rational), &u64)> {
        self.counts.iter()
    }

    /// Second moment of the table: the mixed energy.
    pub fn second_moment(&self) -> u128 {
        self.counts
            .values()
            .map(|&c| (c as u128) * (c as u128))
            .sum()
    }
}

fn check_mixed_pre(u: &Rational, k: u32) -> Result<()> {
    if u.is_zero() {
        return Err(Error::ZeroOperand("shift"));
    }
    if k < 2 {
        return Err(Error::invalid("k must be >= 2"));
    }
    Ok(())
}

/// Build the representation table for `r_k(x, y)` over `A`.
///
/// Splits on the first coordinate across workers; partial tables merge by
/// key-wise addition in canonical element order, so the result is
/// independent of the worker count.
pub fn rep_table(a: &RationalSet, u: &Rational, k: u32, budget: &Budget) -> Result<RepTable> {
    check_mixed_pre(u, k)?;
    budget.check_tuples(a.len(), k)?;
    let shifted: Vec<Rational> = a.iter().map(|x| x + u).collect();
    let partials: Vec<BTreeMap<(Rational, Rational), u64>> = a
        .as_slice()
        .par_iter()
        .enumerate()
        .map(|(i, first)| {
            let mut table = BTreeMap::new();
            table.insert((first.clone(), shifted[i].clone()), 1u64);
            for _ in 1..k {
                table = convolve_counts(&table, a, &shifted);
            }
            table
        })
        .collect();
    let mut counts = BTreeMap::new();
    for part in partials {
        for (key, c) in part {
            *counts.entry(key).or_insert(0) += c;
        }
    }
    Ok(RepTable {
        k,
        u: u.clone(),
        counts,
    })
}

fn convolve_counts(
    table: &BTreeMap<(Rational, Rational), u64>,
    a: &RationalSet,
    shifted: &[Rational],
) -> BTreeMap<(Rational, Rational), u64> {
    let mut next = BTreeMap::new();
    for ((x, y), c) in table {
        for (i, elem) in a.iter().enumerate() {
            let key = (x * elem, y * &shifted[i]);
            *next.entry(key).or_insert(0) += c;
        }
    }
    next
}

/// The mixed energy: simultaneous product and shifted-product coincidences
/// over 2k-tuples. Exact.
pub fn mixed_energy(a: &RationalSet, u: &Rational, k: u32, budget: &Budget) -> Result<u128> {
    Ok(rep_table(a, u, k, budget)?.second_moment())
}

/// Weight-mass table: same keys as [`rep_table`], masses are sums of weight
/// products over the tuples mapping to each key.
pub fn rep_table_weighted(
    ws: &WeightedSet,
    u: &Rational,
    k: u32,
    budget: &Budget,
) -> Result<BTreeMap<(Rational, Rational), f64>> {
    check_mixed_pre(u, k)?;
    let a = ws.base();
    budget.check_tuples(a.len(), k)?;
    let shifted: Vec<Rational> = a.iter().map(|x| x + u).collect();
    let partials: Vec<BTreeMap<(Rational, Rational), f64>> = a
        .as_slice()
        .par_iter()
        .enumerate()
        .map(|(i, first)| {
            let mut table = BTreeMap::new();
            table.insert((first.clone(), shifted[i].clone()), ws.weights()[i]);
            for _ in 1..k {
                let mut next: BTreeMap<(Rational, Rational), f64> = BTreeMap::new();
                for ((x, y), m) in &table {
                    for (j, elem) in a.iter().enumerate() {
                        let key = (x * elem, y * &shifted[j]);
                        *next.entry(key).or_insert(0.0) += m * ws.weights()[j];
                    }
                }
                table = next;
            }
            table
        })
        .collect();
    // Merge in first-coordinate order: the float sums are reproducible.
    let mut masses = BTreeMap::new();
    for part in partials {
        for (key, m) in part {
            *masses.entry(key).or_insert(0.0) += m;
        }
    }
    Ok(masses)
}

/// The weighted mixed energy: sum over keys of squared weight-mass.
pub fn weighted_mixed_energy(
    ws: &WeightedSet,
    u: &Rational,
    k: u32,
    budget: &Budget,
) -> Result<f64> {
    Ok(rep_table_weighted(ws, u, k, budget)?
        .values()
        .map(|m| m * m)
        .sum())
}

fn fold_energy<F>(items: &[Rational], k: u32, budget: &Budget, combine: F) -> Result<u128>
where
    F: Fn(&Rational, &Rational) -> Rational + Sync,
{
    if k < 2 {
        return Err(Error::invalid("k must be >= 2"));
    }
    budget.check_tuples(items.len(), k)?;
    let mut table: BTreeMap<Rational, u64> = BTreeMap::new();
    for x in items {
        *table.entry(x.clone()).or_insert(0) += 1;
    }
    for _ in 1..k {
        let mut next: BTreeMap<Rational, u64> = BTreeMap::new();
        for (v, c) in &table {
            for x in items {
                *next.entry(combine(v, x)).or_insert(0) += c;
            }
        }
        table = next;
    }
    Ok(table.values().map(|&c| (c as u128) * (c as u128)).sum())
}

/// Number of solutions to `a_1 + ... + a_k = a_{k+1} + ... + a_{2k}`.
pub fn additive_energy_kfold(a: &RationalSet, k: u32, budget: &Budget) -> Result<u128> {
    fold_energy(a.as_slice(), k, budget, |v, x| v + x)
}

/// Number of solutions to `a_1 ... a_k = a_{k+1} ... a_{2k}`.
pub fn multiplicative_energy_kfold(a: &RationalSet, k: u32, budget: &Budget) -> Result<u128> {
    fold_energy(a.as_slice(), k, budget, |v, x| v * x)
}

/// Number of solutions to the single shifted-product equation
/// `(a_1+u)...(a_k+u) = (a_{k+1}+u)...(a_{2k}+u)`. Translation is a
/// bijection, so this is the plain k-fold multiplicative energy of `A + u`.
pub fn multiplicative_energy_shifted(
    a: &RationalSet,
    u: &Rational,
    k: u32,
    budget: &Budget,
) -> Result<u128> {
    if u.is_zero() {
        return Err(Error::ZeroOperand("shift"));
    }
    let translated: Vec<Rational> = a.iter().map(|x| x + u).collect();
    fold_energy(&translated, k, budget, |v, x| v * x)
}

/// Partition of `A` by the p-adic valuation: `A_t = {a : v_p(a) = t}`.
pub fn padic_split(a: &RationalSet, p: u64) -> Result<BTreeMap<i64, RationalSet>> {
    if a.contains_zero() {
        return Err(Error::ZeroInSet("padic_split"));
    }
    if !is_prime_u64(p) {
        return Err(Error::invalid(format!("{p} is not prime")));
    }
    let mut cells: BTreeMap<i64, Vec<Rational>> = BTreeMap::new();
    for x in a.iter() {
        cells.entry(valuation(x, p)?).or_default().push(x.clone());
    }
    Ok(cells
        .into_iter()
        .map(|(d, elems)| (d, RationalSet::from_elements(elems)))
        .collect())
}

/// Partition by the joint valuation vector over several primes.
pub fn padic_split_multi(
    a: &RationalSet,
    primes: &[u64],
) -> Result<BTreeMap<Vec<i64>, RationalSet>> {
    if a.contains_zero() {
        return Err(Error::ZeroInSet("padic_split"));
    }
    for &p in primes {
        if !is_prime_u64(p) {
            return Err(Error::invalid(format!("{p} is not prime")));
        }
    }
    let mut cells: BTreeMap<Vec<i64>, Vec<Rational>> = BTreeMap::new();
    for x in a.iter() {
        let key = primes
            .iter()
            .map(|&p| valuation(x, p))
            .collect::<Result<Vec<_>>>()?;
        cells.entry(key).or_default().push(x.clone());
    }
    Ok(cells
        .into_iter()
        .map(|(d, elems)| (d, RationalSet::from_elements(elems)))
        .collect())
}

// ---------------------------------------------------------------------------
// Verifiers
// ---------------------------------------------------------------------------

/// Exact Cauchy-Schwarz chain `|A|^{2k} <= |A^(k)| |(A+u)^(k)| E_k(A;u)`.
#[derive(Clone, Debug, Serialize)]
pub struct CsChainReport {
    pub k: u32,
    pub lhs: u128,
    pub product_set_size: u64,
    pub shifted_set_size: u64,
    pub mixed_energy: u128,
    /// `rhs / lhs` as an exact rational.
    pub slack: Rational,
    pub holds: bool,
}

pub fn verify_cs_chain(
    a: &RationalSet,
    u: &Rational,
    k: u32,
    budget: &Budget,
) -> Result<CsChainReport> {
    check_mixed_pre(u, k)?;
    if a.contains_zero() {
        return Err(Error::ZeroInSet("verify_cs_chain"));
    }
    if a.is_empty() {
        return Err(Error::EmptySet("verify_cs_chain"));
    }
    let prod = crate::setops::k_fold_product(a, k, budget)?.len() as u64;
    let shifted = crate::setops::shifted_k_fold_product(a, u, k, budget)?.len() as u64;
    let energy = mixed_energy(a, u, k, budget)?;
    let lhs: u128 = (a.len() as u128).pow(2 * k);
    let rhs: u128 = prod as u128 * shifted as u128 * energy;
    let slack = Rational::new(num_bigint::BigInt::from(rhs), num_bigint::BigInt::from(lhs))?;
    Ok(CsChainReport {
        k,
        lhs,
        product_set_size: prod,
        shifted_set_size: shifted,
        mixed_energy: energy,
        slack,
        holds: lhs <= rhs,
    })
}

/// One-prime splitting: `E^{1/k} <= 2 C(2k,2) sum_d E(A_d)^{1/k}`.
#[derive(Clone, Debug, Serialize)]
pub struct SplitReport {
    pub k: u32,
    pub p: u64,
    pub coefficient: u64,
    pub lhs_root: f64,
    pub rhs_sum_roots: f64,
    pub cells: Vec<(i64, f64)>,
    pub holds: bool,
}

/// `2 * C(2k, 2) = 2k(2k-1)`.
pub fn split_coefficient(k: u32) -> u64 {
    2 * (2 * k as u64) * (2 * k as u64 - 1) / 2
}

pub fn verify_basecase_split(
    ws: &WeightedSet,
    u: &Rational,
    p: u64,
    k: u32,
    budget: &Budget,
) -> Result<SplitReport> {
    check_mixed_pre(u, k)?;
    if ws.base().contains_zero() {
        return Err(Error::ZeroInSet("verify_basecase_split"));
    }
    let lhs_root = weighted_mixed_energy(ws, u, k, budget)?.powf(1.0 / k as f64);
    let cells_split = padic_split(ws.base(), p)?;
    let mut cells = Vec::with_capacity(cells_split.len());
    let mut rhs_sum_roots = 0.0;
    for (d, cell) in &cells_split {
        let sub = ws.restrict(cell)?;
        let root = weighted_mixed_energy(&sub, u, k, budget)?.powf(1.0 / k as f64);
        rhs_sum_roots += root;
        cells.push((*d, root));
    }
    let coefficient = split_coefficient(k);
    let holds =
        lhs_root <= coefficient as f64 * rhs_sum_roots * (1.0 + ROOT_REL_TOL) + f64::MIN_POSITIVE;
    Ok(SplitReport {
        k,
        p,
        coefficient,
        lhs_root,
        rhs_sum_roots,
        cells,
        holds,
    })
}

/// Multi-prime splitting with coefficient `(2 C(2k,2))^|primes|` and cells
/// keyed by joint valuation vectors.
#[derive(Clone, Debug, Serialize)]
pub struct MultiSplitReport {
    pub k: u32,
    pub primes: Vec<u64>,
    pub coefficient: u128,
    pub lhs_root: f64,
    pub rhs_sum_roots: f64,
    pub cells: Vec<(Vec<i64>, f64)>,
    pub holds: bool,
}

pub fn verify_multiprime_split(
    ws: &WeightedSet,
    u: &Rational,
    primes: &[u64],
    k: u32,
    budget: &Budget,
) -> Result<MultiSplitReport> {
    check_mixed_pre(u, k)?;
    if ws.base().contains_zero() {
        return Err(Error::ZeroInSet("verify_multiprime_split"));
    }
    let lhs_root = weighted_mixed_energy(ws, u, k, budget)?.powf(1.0 / k as f64);
    let cells_split = padic_split_multi(ws.base(), primes)?;
    let mut cells = Vec::with_capacity(cells_split.len());
    let mut rhs_sum_roots = 0.0;
    for (d, cell) in &cells_split {
        let sub = ws.restrict(cell)?;
        let root = weighted_mixed_energy(&sub, u, k, budget)?.powf(1.0 / k as f64);
        rhs_sum_roots += root;
        cells.push((d.clone(), root));
    }
    let coefficient = (split_coefficient(k) as u128).pow(primes.len() as u32);
    let holds =
        lhs_root <= coefficient as f64 * rhs_sum_roots * (1.0 + ROOT_REL_TOL) + f64::MIN_POSITIVE;
    Ok(MultiSplitReport {
        k,
        primes: primes.to_vec(),
        coefficient,
        lhs_root,
        rhs_sum_roots,
        cells,
        holds,
    })
}

/// Tagged energy value for reports.
#[derive(Clone, Debug, Serialize)]
#[serde(tag = "mode", content = "value")]
pub enum EnergyValue {
    #[serde(rename = "exact")]
    Exact(String),
    #[serde(rename = "weighted")]
    Weighted(f64),
}

impl EnergyValue {
    pub fn exact(v: u128) -> Self {
        EnergyValue::Exact(v.to_string())
    }
}
