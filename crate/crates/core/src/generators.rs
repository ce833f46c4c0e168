//! Deterministic families with controlled multiplicative structure and
//! seeded random instances for property tests. All generators are pure
//! functions of their arguments; the random ones use ChaCha8 streams, so
//! reruns are byte-identical across platforms.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::fibering::{LatticeGraph, LatticeSet};
use crate::rational::{is_prime_u64, Rational};
use crate::setops::RationalSet;

/// `{r^i : 0 <= i < n}`; the canonical small-doubling family (|AA| = 2n-1).
pub fn geometric_progression(r: &Rational, n: u32) -> Result<RationalSet> {
    if n < 1 {
        return Err(Error::invalid("n must be >= 1"));
    }
    if r.is_zero() || r.is_one() || *r == Rational::from(-1i64) {
        return Err(Error::invalid("ratio must avoid {0, 1, -1}"));
    }
    let mut elems = Vec::with_capacity(n as usize);
    let mut cur = Rational::one();
    for _ in 0..n {
        elems.push(cur.clone());
        cur = &cur * r;
    }
    Ok(RationalSet::from_elements(elems))
}

/// Multiplicative box `{prod p_i^{e_i} : 0 <= e_i < dims_i}`; multiplicative
/// dimension equals the number of primes by construction, and the doubling
/// constant is `prod (2 - 1/dims_i)`.
pub fn multidim_gp(primes: &[u64], dims: &[u32]) -> Result<RationalSet> {
    if primes.len() != dims.len() {
        return Err(Error::invalid("primes and dims must have equal length"));
    }
    if dims.iter().any(|&d| d < 1) {
        return Err(Error::invalid("dims must be positive"));
    }
    for (i, &p) in primes.iter().enumerate() {
        if !is_prime_u64(p) {
            return Err(Error::invalid(format!("{p} is not prime")));
        }
        if primes[..i].contains(&p) {
            return Err(Error::invalid(format!("repeated prime {p}")));
        }
    }
    let mut elems = vec![Rational::one()];
    for (i, &p) in primes.iter().enumerate() {
        let mut next = Vec::with_capacity(elems.len() * dims[i] as usize);
        for e in &elems {
            let mut cur = e.clone();
            for _ in 0..dims[i] {
                next.push(cur.clone());
                cur = &cur * &Rational::from(p);
            }
        }
        elems = next;
    }
    Ok(RationalSet::from_elements(elems))
}

/// `{p^h : h in H}`; may be empty when `H` is.
pub fn prime_power_set(p: u64, exponents: &[i64]) -> Result<RationalSet> {
    if !is_prime_u64(p) {
        return Err(Error::invalid(format!("{p} is not prime")));
    }
    let base = Rational::from(p);
    let elems = exponents
        .iter()
        .map(|&h| base.pow(h))
        .collect::<Result<Vec<_>>>()?;
    Ok(RationalSet::from_elements(elems))
}

/// Seeded distinct nonzero rationals with `|numerator| <= numerator_bound`
/// and `1 <= denominator <= denominator_bound`.
pub fn random_rational_set(
    count: u32,
    numerator_bound: i64,
    denominator_bound: i64,
    seed: u64,
) -> Result<RationalSet> {
    if count < 1 || numerator_bound < 1 || denominator_bound < 1 {
        return Err(Error::invalid("count and bounds must be >= 1"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut seen = std::collections::BTreeSet::new();
    let max_attempts = 64u64 * count as u64 + 4096;
    let mut attempts = 0;
    while (seen.len() as u32) < count {
        attempts += 1;
        if attempts > max_attempts {
            return Err(Error::NotEnoughDistinct);
        }
        let n = rng.gen_range(-numerator_bound..=numerator_bound);
        if n == 0 {
            continue;
        }
        let d = rng.gen_range(1..=denominator_bound);
        seen.insert(Rational::new(n, d)?);
    }
    Ok(RationalSet::from_elements(seen.into_iter().collect()))
}

/// The box `[0, side-1]^n` as a lattice set.
pub fn lattice_box(n: usize, side: i64) -> Result<LatticeSet> {
    if n < 1 || side < 1 {
        return Err(Error::invalid("dimension and side must be >= 1"));
    }
    let total = (side as u128).checked_pow(n as u32);
    match total {
        Some(t) if t <= 10_000_000 => {}
        _ => {
            return Err(Error::BudgetExceeded {
                required: total.unwrap_or(u128::MAX),
                budget: 10_000_000,
            })
        }
    }
    let mut points = Vec::new();
    let mut cur = vec![0i64; n];
    loop {
        points.push(cur.clone());
        let mut pos = n;
        loop {
            if pos == 0 {
                return LatticeSet::new(n, points);
            }
            pos -= 1;
            cur[pos] += 1;
            if cur[pos] < side {
                break;
            }
            cur[pos] = 0;
        }
    }
}

/// Seeded random subset of the box `[0, side-1]^n` with `count` points.
pub fn random_lattice_set(n: usize, side: i64, count: u32, seed: u64) -> Result<LatticeSet> {
    if n < 1 || side < 1 || count < 1 {
        return Err(Error::invalid("dimension, side, and count must be >= 1"));
    }
    if (count as u128) > (side as u128).saturating_pow(n as u32) {
        return Err(Error::NotEnoughDistinct);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut seen = std::collections::BTreeSet::new();
    while (seen.len() as u32) < count {
        let p: Vec<i64> = (0..n).map(|_| rng.gen_range(0..side)).collect();
        seen.insert(p);
    }
    LatticeSet::new(n, seen.into_iter().collect())
}

/// Seeded Bernoulli edge set of expected density over `A x B`; pairs are
/// visited lexicographically so the same seed gives the same graph.
pub fn random_lattice_graph(
    a: &LatticeSet,
    b: &LatticeSet,
    density: f64,
    seed: u64,
) -> Result<LatticeGraph> {
    if !(density > 0.0 && density <= 1.0) {
        return Err(Error::invalid("density must lie in (0, 1]"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut edges = Vec::new();
    for i in 0..a.len() as u32 {
        for j in 0..b.len() as u32 {
            if density >= 1.0 || rng.gen::<f64>() < density {
                edges.push((i, j));
            }
        }
    }
    LatticeGraph::new(a.clone(), b.clone(), edges)
}
