//! Separating-constant ratios for explicit coprime decompositions and
//! lambda-constant estimation by weight optimization.
//!
//! A decomposition is a base set `X` with fibers `Y_x` such that every
//! `x` in `X` is coprime to every fiber element, and the cells `x Y_x` are
//! pairwise disjoint. The separation ratio compares the k-th root of the
//! weighted mixed energy of the union against the sum of per-cell roots;
//! each valid instance is a certified lower bound on any separating constant
//! for `X`.
//!
//! Lambda constants are maxima of `E_{k,w}^{1/k}` over nonnegative weights
//! on the unit sphere. Three estimators are provided: the uniform-weight
//! value (exact integer energy under a root), a projected multiplicative
//! ascent, and an exhaustive grid oracle for sets of at most four elements.
//! At `k = 2` the exact value is `sqrt(2 - 1/|A|)` for every set and shift,
//! which pins all three estimators in the test suites.

use std::collections::BTreeMap;
use std::f64::consts::FRAC_PI_2;

use num_bigint::BigUint;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::energy::{mixed_energy, split_coefficient, weighted_mixed_energy, WeightedSet};
use crate::error::{Error, Result};
use crate::rational::{
    coprime, default_prime_table, next_primes_after, prime_support, valuation_embedding, Rational,
};
use crate::setops::{doubling_constant, multiplicative_dimension, Budget, RationalSet};

/// Grid step used by the fixed-step verifiers built on the grid oracle.
pub const GRID_STEP: f64 = 0.02;
/// Tolerance granted to grid-oracle comparisons at [`GRID_STEP`].
pub const GRID_TOL: f64 = 2e-3;

// ---------------------------------------------------------------------------
// Decompositions
// ---------------------------------------------------------------------------

/// A coprime fibered decomposition `Z = union of x Y_x` over a base set `X`.
#[derive(Clone, Debug)]
pub struct Decomposition {
    x_set: RationalSet,
    fibers: BTreeMap<Rational, RationalSet>,
}

impl Decomposition {
    /// Build and validate: fiber keys must match `X` exactly, every pair
    /// `(x, y)` with `y` in any fiber must be coprime, and the cells
    /// `x Y_x` must be pairwise disjoint.
    pub fn new(x_set: RationalSet, fibers: BTreeMap<Rational, RationalSet>) -> Result<Self> {
        if x_set.contains_zero() {
            return Err(Error::ZeroInSet("decomposition base"));
        }
        if fibers.len() != x_set.len() || !x_set.iter().all(|x| fibers.contains_key(x)) {
            return Err(Error::invalid("fibers must be keyed exactly by X"));
        }
        let d = Decomposition { x_set, fibers };
        d.validate()?;
        Ok(d)
    }

    pub fn x_set(&self) -> &RationalSet {
        &self.x_set
    }

    pub fn fiber(&self, x: &Rational) -> Option<&RationalSet> {
        self.fibers.get(x)
    }

    pub fn fibers(&self) -> &BTreeMap<Rational, RationalSet> {
        &self.fibers
    }

    /// The cell `x Y_x`.
    pub fn cell(&self, x: &Rational) -> Result<RationalSet> {
        let fiber = self
            .fibers
            .get(x)
            .ok_or_else(|| Error::invalid(format!("{x} not in X")))?;
        Ok(fiber.iter().map(|y| x * y).collect())
    }

    /// The union `Z`, already known disjoint after validation.
    pub fn z_set(&self) -> RationalSet {
        let mut elems = Vec::new();
        for x in self.x_set.iter() {
            for y in self.fibers[x].iter() {
                elems.push(x * y);
            }
        }
        RationalSet::from_elements(elems)
    }

    fn validate(&self) -> Result<()> {
        let table = default_prime_table();
        for (x_prime, fiber) in &self.fibers {
            for y in fiber.iter() {
                if y.is_zero() {
                    return Err(Error::ZeroInSet("decomposition fiber"));
                }
                for x in self.x_set.iter() {
                    if !coprime(x, y, table)? {
                        return Err(Error::CoprimalityViolation {
                            x: x.to_string(),
                            x_prime: x_prime.to_string(),
                            y: y.to_string(),
                        });
                    }
                }
            }
        }
        let mut seen = std::collections::BTreeSet::new();
        for x in self.x_set.iter() {
            for y in self.fibers[x].iter() {
                let v = x * y;
                if !seen.insert(v.clone()) {
                    return Err(Error::DisjointnessViolation {
                        value: v.to_string(),
                    });
                }
            }
        }
        Ok(())
    }
}

/// Both sides of the separating inequality on one instance.
#[derive(Clone, Debug, Serialize)]
pub struct SeparationReport {
    pub k: u32,
    pub u: Rational,
    /// Weights on `Z` in canonical order.
    pub weights: Vec<f64>,
    pub lhs_root: f64,
    pub rhs_sum_roots: f64,
    /// `lhs / rhs`; None when the weight vector vanishes on every cell.
    pub ratio: Option<f64>,
}

/// Compute the separation ratio of a valid decomposition under the given
/// weights on `Z` (canonical order of `z_set`).
pub fn separation_ratio(
    decomp: &Decomposition,
    u: &Rational,
    k: u32,
    weights: &[f64],
    budget: &Budget,
) -> Result<SeparationReport> {
    if u.is_zero() {
        return Err(Error::ZeroOperand("shift"));
    }
    let z = decomp.z_set();
    let ws = WeightedSet::new(z, weights.to_vec())?;
    let lhs_root = weighted_mixed_energy(&ws, u, k, budget)?.powf(1.0 / k as f64);
    let mut rhs_sum_roots = 0.0;
    for x in decomp.x_set().iter() {
        let cell = decomp.cell(x)?;
        let sub = ws.restrict(&cell)?;
        rhs_sum_roots += weighted_mixed_energy(&sub, u, k, budget)?.powf(1.0 / k as f64);
    }
    let ratio = (rhs_sum_roots > 0.0).then(|| lhs_root / rhs_sum_roots);
    Ok(SeparationReport {
        k,
        u: u.clone(),
        weights: weights.to_vec(),
        lhs_root,
        rhs_sum_roots,
        ratio,
    })
}

/// Outcome of randomized separating-constant probing.
#[derive(Clone, Debug, Serialize)]
pub struct ProbeReport {
    pub probes: u32,
    pub ratios: Vec<f64>,
    pub max_ratio: f64,
    /// `|X|`, the unconditional separating bound.
    pub trivial_bound: f64,
    /// `2k(2k-1)` when X is a set of powers of a single prime.
    pub prime_power_bound: Option<f64>,
}

/// Maximum separation ratio over seeded random coprime decompositions of
/// `X`. Fibers draw from fresh primes outside the prime support of `X`, so
/// the coprimality certificate holds by construction.
pub fn probe_separating_constant(
    x_set: &RationalSet,
    u: &Rational,
    k: u32,
    probes: u32,
    seed: u64,
    budget: &Budget,
) -> Result<ProbeReport> {
    if x_set.contains_zero() {
        return Err(Error::ZeroInSet("probe_separating_constant"));
    }
    if x_set.is_empty() {
        return Err(Error::EmptySet("probe_separating_constant"));
    }
    if u.is_zero() {
        return Err(Error::ZeroOperand("shift"));
    }
    let table = default_prime_table();
    let support = prime_support(x_set, table)?;
    let start = support.iter().copied().max().unwrap_or(1);

    let ratios: Vec<f64> = (0..probes)
        .into_par_iter()
        .map(|i| -> Result<f64> {
            let mut rng = ChaCha8Rng::seed_from_u64(
                seed.wrapping_add(0x9e3779b97f4a7c15u64.wrapping_mul(i as u64 + 1)),
            );
            let decomp = random_decomposition(x_set, start, &mut rng)
                .unwrap_or_else(|_| trivial_decomposition(x_set));
            let z = decomp.z_set();
            let mut w: Vec<f64> = (0..z.len()).map(|_| rng.gen_range(0.01..1.0)).collect();
            let norm = w.iter().map(|v| v * v).sum::<f64>().sqrt();
            w.iter_mut().for_each(|v| *v /= norm);
            let rep = separation_ratio(&decomp, u, k, &w, budget)?;
            Ok(rep.ratio.unwrap_or(0.0))
        })
        .collect::<Result<Vec<_>>>()?;

    let max_ratio = ratios.iter().copied().fold(0.0, f64::max);
    let prime_power_bound = is_single_prime_power_set(x_set)?.then(|| split_coefficient(k) as f64);
    Ok(ProbeReport {
        probes,
        ratios,
        max_ratio,
        trivial_bound: x_set.len() as f64,
        prime_power_bound,
    })
}

/// Fallback decomposition with `Y_x = {1}` for every x.
fn trivial_decomposition(x_set: &RationalSet) -> Decomposition {
    let fibers = x_set
        .iter()
        .map(|x| (x.clone(), RationalSet::from_elements(vec![Rational::one()])))
        .collect();
    Decomposition::new(x_set.clone(), fibers).expect("trivial decomposition is valid")
}

/// Random decomposition: each fiber gets its own pool of fresh primes, so
/// coprimality and disjointness hold by construction (still validated).
fn random_decomposition(
    x_set: &RationalSet,
    prime_start: u64,
    rng: &mut ChaCha8Rng,
) -> Result<Decomposition> {
    let fresh = next_primes_after(prime_start, 2 * x_set.len());
    let mut fibers = BTreeMap::new();
    for (i, x) in x_set.iter().enumerate() {
        let q1 = Rational::from(fresh[2 * i]);
        let q2 = Rational::from(fresh[2 * i + 1]);
        let candidates = [
            Rational::one(),
            q1.clone(),
            q2.clone(),
            &q1 * &q2,
            q1.pow(2)?,
        ];
        let size = rng.gen_range(1..=3usize);
        let mut chosen = Vec::new();
        let mut available: Vec<usize> = (0..candidates.len()).collect();
        for _ in 0..size {
            let pick = rng.gen_range(0..available.len());
            chosen.push(candidates[available.remove(pick)].clone());
        }
        fibers.insert(x.clone(), RationalSet::from_elements(chosen));
    }
    Decomposition::new(x_set.clone(), fibers)
}

/// True when every element is `p^h` for one fixed prime `p` (the empty
/// support set `{1}` counts).
pub fn is_single_prime_power_set(a: &RationalSet) -> Result<bool> {
    if a.contains_zero() || a.iter().any(|x| !x.is_positive()) {
        return Ok(false);
    }
    let support = prime_support(a, default_prime_table())?;
    Ok(support.len() <= 1)
}

// ---------------------------------------------------------------------------
// Weighted energy as a function of the weight vector
// ---------------------------------------------------------------------------

/// Precomputed key/transition structure of the degree-2k energy form, so
/// repeated evaluations (grid cells, ascent iterations) are pure float work.
pub(crate) struct EnergyForm {
    n: usize,
    k: u32,
    /// `level_sizes[j]` = number of keys at level j+1 (j = 0 is level 1 = elements).
    level_sizes: Vec<usize>,
    /// `trans[j][key * n + elem]` = key index at level j+2.
    trans: Vec<Vec<u32>>,
}

impl EnergyForm {
    pub fn build(a: &RationalSet, u: &Rational, k: u32) -> Result<Self> {
        if u.is_zero() {
            return Err(Error::ZeroOperand("shift"));
        }
        if k < 2 {
            return Err(Error::invalid("k must be >= 2"));
        }
        let n = a.len();
        let shifted: Vec<Rational> = a.iter().map(|x| x + u).collect();
        let mut keys: Vec<(Rational, Rational)> = a
            .iter()
            .enumerate()
            .map(|(i, x)| (x.clone(), shifted[i].clone()))
            .collect();
        let mut level_sizes = vec![n];
        let mut trans = Vec::new();
        for _ in 1..k {
            let mut next_index: BTreeMap<(Rational, Rational), u32> = BTreeMap::new();
            let mut level_trans = vec![0u32; keys.len() * n];
            // Two passes keep key indices sorted and deterministic.
            for (x, y) in &keys {
                for (i, elem) in a.iter().enumerate() {
                    let key = (x * elem, y * &shifted[i]);
                    let next_id = next_index.len() as u32;
                    next_index.entry(key).or_insert(next_id);
                }
            }
            let mut sorted: Vec<(Rational, Rational)> = next_index.keys().cloned().collect();
            sorted.sort();
            let final_index: BTreeMap<(Rational, Rational), u32> = sorted
                .iter()
                .enumerate()
                .map(|(i, key)| (key.clone(), i as u32))
                .collect();
            for (kidx, (x, y)) in keys.iter().enumerate() {
                for (i, elem) in a.iter().enumerate() {
                    let key = (x * elem, y * &shifted[i]);
                    level_trans[kidx * n + i] = final_index[&key];
                }
            }
            level_sizes.push(sorted.len());
            trans.push(level_trans);
            keys = sorted;
        }
        Ok(EnergyForm {
            n,
            k,
            level_sizes,
            trans,
        })
    }

    /// Forward DP returning the mass vectors of every level.
    fn masses(&self, w: &[f64]) -> Vec<Vec<f64>> {
        let mut levels = Vec::with_capacity(self.k as usize);
        levels.push(w.to_vec());
        for j in 0..(self.k as usize - 1) {
            let mut next = vec![0.0; self.level_sizes[j + 1]];
            let cur = &levels[j];
            let tr = &self.trans[j];
            for (kidx, &m) in cur.iter().enumerate() {
                if m == 0.0 {
                    continue;
                }
                for i in 0..self.n {
                    next[tr[kidx * self.n + i] as usize] += m * w[i];
                }
            }
            levels.push(next);
        }
        levels
    }

    /// The weighted mixed energy `E_{k,w}`.
    pub fn eval(&self, w: &[f64]) -> f64 {
        let levels = self.masses(w);
        levels[self.k as usize - 1].iter().map(|m| m * m).sum()
    }

    /// Energy and its gradient with respect to the weights.
    pub fn eval_with_grad(&self, w: &[f64]) -> (f64, Vec<f64>) {
        let levels = self.masses(w);
        let top = &levels[self.k as usize - 1];
        let value: f64 = top.iter().map(|m| m * m).sum();
        let below = &levels[self.k as usize - 2];
        let tr = &self.trans[self.k as usize - 2];
        let mut grad = vec![0.0; self.n];
        for (kidx, &m) in below.iter().enumerate() {
            if m == 0.0 {
                continue;
            }
            for i in 0..self.n {
                grad[i] += m * top[tr[kidx * self.n + i] as usize];
            }
        }
        let scale = 2.0 * self.k as f64;
        grad.iter_mut().for_each(|g| *g *= scale);
        (value, grad)
    }
}

// ---------------------------------------------------------------------------
// Lambda estimation
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum LambdaMethod {
    Uniform,
    Ascent,
    Grid,
}

/// A certified lower bound on `Lambda_k(A;u)` with its witness weights.
#[derive(Clone, Debug, Serialize)]
pub struct LambdaEstimate {
    pub value: f64,
    pub weights: Vec<f64>,
    pub method: LambdaMethod,
}

/// `(E_k(A;u) / |A|^k)^{1/k}` with the uniform witness; the integer energy
/// is exact, only the final root is floating point.
pub fn lambda_uniform(
    a: &RationalSet,
    u: &Rational,
    k: u32,
    budget: &Budget,
) -> Result<LambdaEstimate> {
    if a.is_empty() {
        return Err(Error::EmptySet("lambda_uniform"));
    }
    let e = mixed_energy(a, u, k, budget)? as f64;
    let n = a.len() as f64;
    let value = (e / n.powi(k as i32)).powf(1.0 / k as f64);
    Ok(LambdaEstimate {
        value,
        weights: vec![1.0 / n.sqrt(); a.len()],
        method: LambdaMethod::Uniform,
    })
}

/// Projected multiplicative-update ascent on the nonnegative unit sphere.
/// Starts from uniform weights (so the result never falls below the uniform
/// value) plus seeded random restarts; the objective is nondecreasing within
/// every run because non-improving candidates are damped and then rejected.
pub fn lambda_ascent(
    a: &RationalSet,
    u: &Rational,
    k: u32,
    iters: u32,
    seed: u64,
) -> Result<LambdaEstimate> {
    Ok(lambda_ascent_with_trace(a, u, k, iters, seed)?.0)
}

/// Ascent plus the per-run objective histories (for monotonicity checks).
pub fn lambda_ascent_with_trace(
    a: &RationalSet,
    u: &Rational,
    k: u32,
    iters: u32,
    seed: u64,
) -> Result<(LambdaEstimate, Vec<Vec<f64>>)> {
    if a.is_empty() {
        return Err(Error::EmptySet("lambda_ascent"));
    }
    let n = a.len();
    if n == 1 {
        return Ok((
            LambdaEstimate {
                value: 1.0,
                weights: vec![1.0],
                method: LambdaMethod::Ascent,
            },
            vec![vec![1.0]],
        ));
    }
    let form = EnergyForm::build(a, u, k)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let restarts = 3usize;
    let mut starts = vec![vec![1.0 / (n as f64).sqrt(); n]];
    for _ in 0..restarts {
        let mut w: Vec<f64> = (0..n).map(|_| rng.gen_range(0.05..1.0)).collect();
        let norm = w.iter().map(|v| v * v).sum::<f64>().sqrt();
        w.iter_mut().for_each(|v| *v /= norm);
        starts.push(w);
    }

    let mut best_value = f64::NEG_INFINITY;
    let mut best_w = starts[0].clone();
    let mut traces = Vec::with_capacity(starts.len());
    for start in starts {
        let (w, trace) = ascend(&form, start, iters);
        let value = *trace.last().expect("trace is nonempty");
        traces.push(trace);
        if value > best_value {
            best_value = value;
            best_w = w;
        }
    }
    Ok((
        LambdaEstimate {
            value: best_value.powf(1.0 / k as f64),
            weights: best_w,
            method: LambdaMethod::Ascent,
        },
        traces,
    ))
}

fn ascend(form: &EnergyForm, mut w: Vec<f64>, iters: u32) -> (Vec<f64>, Vec<f64>) {
    let mut trace = Vec::with_capacity(iters as usize + 1);
    let (mut value, mut grad) = form.eval_with_grad(&w);
    trace.push(value);
    for _ in 0..iters {
        let mut cand: Vec<f64> = w.iter().zip(&grad).map(|(wi, gi)| wi * gi).collect();
        if !normalize(&mut cand) {
            break;
        }
        let mut accepted = false;
        let mut step = 1.0;
        for _ in 0..6 {
            let blended: Vec<f64> = if step >= 1.0 {
                cand.clone()
            } else {
                let mut b: Vec<f64> = w
                    .iter()
                    .zip(&cand)
                    .map(|(wi, ci)| wi + step * (ci - wi))
                    .collect();
                if !normalize(&mut b) {
                    break;
                }
                b
            };
            let cand_value = form.eval(&blended);
            if cand_value >= value {
                let improved = cand_value > value;
                w = blended;
                value = cand_value;
                let refreshed = form.eval_with_grad(&w);
                grad = refreshed.1;
                accepted = true;
                if !improved {
                    accepted = false; // converged: objective stalled exactly
                }
                break;
            }
            step *= 0.5;
        }
        trace.push(value);
        if !accepted {
            break;
        }
    }
    (w, trace)
}

fn normalize(w: &mut [f64]) -> bool {
    let norm = w.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm == 0.0 || !norm.is_finite() {
        return false;
    }
    w.iter_mut().for_each(|v| *v /= norm);
    true
}

/// Exhaustive search over the nonnegative unit sphere in spherical
/// coordinates with the given angular resolution. Restricted to `|A| <= 4`.
pub fn lambda_grid_oracle(
    a: &RationalSet,
    u: &Rational,
    k: u32,
    step: f64,
) -> Result<LambdaEstimate> {
    if a.is_empty() {
        return Err(Error::EmptySet("lambda_grid_oracle"));
    }
    if a.len() > 4 {
        return Err(Error::invalid("grid oracle is limited to |A| <= 4"));
    }
    if !(step > 0.0 && step <= 0.2) {
        return Err(Error::invalid("step must lie in (0, 0.2]"));
    }
    let n = a.len();
    if n == 1 {
        return Ok(LambdaEstimate {
            value: 1.0,
            weights: vec![1.0],
            method: LambdaMethod::Grid,
        });
    }
    let form = EnergyForm::build(a, u, k)?;
    let m = (FRAC_PI_2 / step).ceil() as usize;
    let angle = |i: usize| (i as f64 * step).min(FRAC_PI_2);

    // Ties between equal-value cells break toward the smaller outer index,
    // so the witness does not depend on the worker count.
    let best = (0..=m)
        .into_par_iter()
        .map(|i0| {
            let mut local_best = (f64::NEG_INFINITY, i0, Vec::new());
            let mut angles = vec![0.0; n - 1];
            angles[0] = angle(i0);
            let mut idx = vec![0usize; n.saturating_sub(2)];
            loop {
                for (pos, &ival) in idx.iter().enumerate() {
                    angles[pos + 1] = angle(ival);
                }
                let w = spherical_weights(&angles);
                let value = form.eval(&w);
                if value > local_best.0 {
                    local_best = (value, i0, w);
                }
                // advance the inner odometer
                let mut pos = idx.len();
                loop {
                    if pos == 0 {
                        return local_best;
                    }
                    pos -= 1;
                    idx[pos] += 1;
                    if idx[pos] <= m {
                        break;
                    }
                    idx[pos] = 0;
                }
            }
        })
        .reduce(
            || (f64::NEG_INFINITY, usize::MAX, Vec::new()),
            |a, b| {
                if b.0 > a.0 || (b.0 == a.0 && b.1 < a.1) {
                    b
                } else {
                    a
                }
            },
        );

    Ok(LambdaEstimate {
        value: best.0.powf(1.0 / k as f64),
        weights: best.2,
        method: LambdaMethod::Grid,
    })
}

fn spherical_weights(angles: &[f64]) -> Vec<f64> {
    let n = angles.len() + 1;
    let mut w = Vec::with_capacity(n);
    let mut sin_prod = 1.0;
    for &theta in angles {
        w.push(sin_prod * theta.cos());
        sin_prod *= theta.sin();
    }
    w.push(sin_prod);
    w
}

/// Closed form `sqrt(2 - 1/n)` for `Lambda_2`, forced by the k = 2
/// multiset-rigidity identity.
pub fn lambda_k2_closed_form(n: usize) -> f64 {
    (2.0 - 1.0 / n as f64).sqrt()
}

// ---------------------------------------------------------------------------
// Verifiers
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, Serialize)]
pub struct StabilityReport {
    pub trials: u32,
    pub checks: u32,
    pub violations: u32,
    pub lambda_full: f64,
}

/// Random-subset stability: `Lambda_k(A') <= Lambda_k(A)` within grid
/// tolerance, both sides from the exhaustive oracle. Requires `|A| <= 4`.
pub fn verify_stability(
    a: &RationalSet,
    u: &Rational,
    k: u32,
    trials: u32,
    seed: u64,
) -> Result<StabilityReport> {
    let full = lambda_grid_oracle(a, u, k, GRID_STEP)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut checks = 0;
    let mut violations = 0;
    for _ in 0..trials {
        let mut subset: Vec<Rational> = a.iter().filter(|_| rng.gen_bool(0.5)).cloned().collect();
        if subset.is_empty() {
            subset.push(a.as_slice()[rng.gen_range(0..a.len())].clone());
        }
        let sub = RationalSet::from_elements(subset);
        let part = lambda_grid_oracle(&sub, u, k, GRID_STEP)?;
        checks += 1;
        if part.value > full.value + GRID_TOL {
            violations += 1;
        }
    }
    Ok(StabilityReport {
        trials,
        checks,
        violations,
        lambda_full: full.value,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct SubsetLemmaReport {
    pub lhs: f64,
    pub rhs: f64,
    pub psi: f64,
    pub doubling: Rational,
    pub holds: bool,
}

/// Instance of the subset lemma: with `A' subset of A` and the
/// theorem-backed `psi = min(|A'|, 2k(2k-1) for prime-power A')`, asserts
/// `Lambda_k(A;u) <= K^4 (|A|/(|A'|-1))^2 psi` on exact-oracle instances.
pub fn verify_subset_lemma_instance(
    a: &RationalSet,
    a_prime: &RationalSet,
    u: &Rational,
    k: u32,
) -> Result<SubsetLemmaReport> {
    if !a_prime.is_subset_of(a) {
        return Err(Error::invalid("A' must be a subset of A"));
    }
    if a_prime.len() < 2 {
        return Err(Error::invalid("|A'| must be at least 2"));
    }
    let lhs = lambda_grid_oracle(a, u, k, GRID_STEP)?.value;
    let doubling = doubling_constant(a)?;
    let mut psi = a_prime.len() as f64;
    if is_single_prime_power_set(a_prime)? {
        psi = psi.min(split_coefficient(k) as f64);
    }
    let ratio = a.len() as f64 / (a_prime.len() as f64 - 1.0);
    let rhs = doubling.to_f64().powi(4) * ratio * ratio * psi;
    Ok(SubsetLemmaReport {
        lhs,
        rhs,
        psi,
        doubling,
        holds: lhs <= rhs + GRID_TOL,
    })
}

/// Instance of the dimension-based separating bound: using the exact
/// multiplicative dimension `m` of a positive set, asserts
/// `E_k(A;u) <= ((2 C(2k,2))^m |A|)^k` in exact integer arithmetic, and
/// reports (without asserting) the doubling-based variant.
#[derive(Clone, Debug, Serialize)]
pub struct DimensionBoundReport {
    pub dimension: usize,
    pub mixed_energy: String,
    pub asserted_holds: bool,
    pub doubling: Rational,
    /// Log-space check of the K-exponent form; diagnostic only.
    pub doubling_variant_holds: bool,
}

pub fn verify_dimension_bound(
    a: &RationalSet,
    u: &Rational,
    k: u32,
    budget: &Budget,
) -> Result<DimensionBoundReport> {
    let table = default_prime_table();
    let m = multiplicative_dimension(a, table)?;
    // Sanity: the pivot projection is injective on positive sets, which is
    // what makes the cells of the m-prime split singletons.
    let emb = valuation_embedding(a, table)?;
    let _pivots = crate::setops::pivot_prime_columns(&emb.vectors);
    let energy = mixed_energy(a, u, k, budget)?;
    let coeff = BigUint::from(split_coefficient(k));
    let bound = (coeff.pow(m as u32) * BigUint::from(a.len() as u64)).pow(k);
    let asserted_holds = BigUint::from(energy) <= bound;

    let doubling = doubling_constant(a)?;
    let kf = doubling.to_f64();
    let log_rhs = k as f64 * (kf * (split_coefficient(k) as f64).ln() + (a.len() as f64).ln());
    let doubling_variant_holds = (energy as f64).ln() <= log_rhs + 1e-9;
    Ok(DimensionBoundReport {
        dimension: m,
        mixed_energy: energy.to_string(),
        asserted_holds,
        doubling,
        doubling_variant_holds,
    })
}

/// Composite shifted-growth bound for positive sets, combining the
/// dimension-based energy bound, the Pluennecke bound on `|A^(k)|`, and the
/// Cauchy-Schwarz chain:
/// `|(A+u)^(k)| >= |A|^{k-1} / (K^k (2 C(2k,2))^{mk})` with
/// `K = |AA|/|A|` and `m` the multiplicative dimension. The comparison is
/// carried out entirely in big integers:
/// `lhs * |AA|^k * (2 C(2k,2))^{mk} >= |A|^{2k-1}`.
#[derive(Clone, Debug, Serialize)]
pub struct ShiftedGrowthChainReport {
    pub k: u32,
    pub dimension: usize,
    pub lhs: u64,
    pub doubling: Rational,
    pub holds: bool,
}

pub fn verify_shifted_growth_bound(
    a: &RationalSet,
    u: &Rational,
    k: u32,
    budget: &Budget,
) -> Result<ShiftedGrowthChainReport> {
    let table = default_prime_table();
    let m = multiplicative_dimension(a, table)?;
    let doubling = doubling_constant(a)?;
    let lhs = crate::setops::shifted_k_fold_product(a, u, k, budget)?.len() as u64;
    let aa = crate::setops::product_set(a, a).len() as u64;
    let coeff = BigUint::from(split_coefficient(k));
    let scaled = BigUint::from(lhs) * BigUint::from(aa).pow(k) * coeff.pow(m as u32 * k);
    let floor = BigUint::from(a.len() as u64).pow(2 * k - 1);
    Ok(ShiftedGrowthChainReport {
        k,
        dimension: m,
        lhs,
        doubling,
        holds: scaled >= floor,
    })
}

/// Two-level composed decomposition experiment for the chaining property:
/// builds `A = union b C_b`, then `Z = union a Y_a`, and reports the
/// realized ratio against the `psi_1 psi_2` candidate. Only the
/// unconditional `<= |A|` bound is asserted.
#[derive(Clone, Debug, Serialize)]
pub struct ChainReport {
    pub ratio: Option<f64>,
    pub psi_product_candidate: f64,
    pub trivial_bound: f64,
    pub within_trivial: bool,
}

pub fn chain_experiment(
    b_set: &RationalSet,
    u: &Rational,
    k: u32,
    seed: u64,
    budget: &Budget,
) -> Result<ChainReport> {
    if b_set.contains_zero() {
        return Err(Error::ZeroInSet("chain_experiment"));
    }
    let table = default_prime_table();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let b_max = prime_support(b_set, table)?
        .iter()
        .copied()
        .max()
        .unwrap_or(1);

    // Inner fibers C_b from fresh primes.
    let inner = random_decomposition(b_set, b_max, &mut rng)
        .unwrap_or_else(|_| trivial_decomposition(b_set));
    let a_set = inner.z_set();
    let max_fiber = b_set
        .iter()
        .map(|b| inner.fiber(b).map_or(1, |f| f.len()))
        .max()
        .unwrap_or(1);

    // Outer fibers Y_a from primes fresh over A.
    let a_max = prime_support(&a_set, table)?
        .iter()
        .copied()
        .max()
        .unwrap_or(1);
    let outer = random_decomposition(&a_set, a_max, &mut rng)
        .unwrap_or_else(|_| trivial_decomposition(&a_set));
    let z = outer.z_set();
    let mut w: Vec<f64> = (0..z.len()).map(|_| rng.gen_range(0.01..1.0)).collect();
    let norm = w.iter().map(|v| v * v).sum::<f64>().sqrt();
    w.iter_mut().for_each(|v| *v /= norm);

    let rep = separation_ratio(&outer, u, k, &w, budget)?;
    let psi_product_candidate = (b_set.len() * max_fiber) as f64;
    let trivial_bound = a_set.len() as f64;
    let within_trivial = rep.ratio.map(|r| r <= trivial_bound + 1e-9).unwrap_or(true);
    Ok(ChainReport {
        ratio: rep.ratio,
        psi_product_candidate,
        trivial_bound,
        within_trivial,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(s: &str) -> Rational {
        s.parse().unwrap()
    }

    fn set(elems: &[&str]) -> RationalSet {
        elems.iter().map(|s| r(s)).collect()
    }

    fn singleton_fibers(x: &RationalSet) -> BTreeMap<Rational, RationalSet> {
        x.iter().map(|v| (v.clone(), set(&["1"]))).collect()
    }

    #[test]
    fn decomposition_validation() {
        let x = set(&["2", "4"]);
        assert!(Decomposition::new(x.clone(), singleton_fibers(&x)).is_ok());

        // Fiber sharing a prime with X violates the certificate.
        let mut bad = singleton_fibers(&x);
        bad.insert(r("2"), set(&["6"]));
        let err = Decomposition::new(x.clone(), bad).unwrap_err();
        assert!(matches!(err, Error::CoprimalityViolation { .. }));

        // Coprimality alone does not force disjoint cells across signs:
        // 2 * (-1) = (-2) * 1.
        let signed = set(&["2", "-2"]);
        let mut overlap = BTreeMap::new();
        overlap.insert(r("2"), set(&["-1"]));
        overlap.insert(r("-2"), set(&["1"]));
        let err = Decomposition::new(signed, overlap).unwrap_err();
        assert!(matches!(err, Error::DisjointnessViolation { .. }));
    }

    #[test]
    fn separation_ratio_example() {
        let b = Budget::default();
        let x = set(&["2", "4"]);
        let d = Decomposition::new(x, singleton_fibers(&set(&["2", "4"]))).unwrap();
        let w = vec![1.0 / 2f64.sqrt(); 2];
        let rep = separation_ratio(&d, &r("1"), 2, &w, &b).unwrap();
        assert!((rep.lhs_root - (1.5f64).sqrt()).abs() < 1e-12);
        assert!((rep.rhs_sum_roots - 1.0).abs() < 1e-12);
        assert!((rep.ratio.unwrap() - 1.5f64.sqrt()).abs() < 1e-12);
        // Trivial and prime-power bounds hold on the instance.
        assert!(rep.ratio.unwrap() <= 2.0);
        assert!(rep.ratio.unwrap() <= 12.0);
    }

    #[test]
    fn single_cell_ratio_at_most_one() {
        let b = Budget::default();
        let x = set(&["3"]);
        let mut fibers = BTreeMap::new();
        fibers.insert(r("3"), set(&["1", "5", "35"]));
        let d = Decomposition::new(x, fibers).unwrap();
        let w = vec![0.3, 0.5, (1.0f64 - 0.09 - 0.25).sqrt()];
        let rep = separation_ratio(&d, &r("2"), 2, &w, &b).unwrap();
        assert!(rep.ratio.unwrap() <= 1.0 + 1e-12);
    }

    #[test]
    fn probes_respect_trivial_and_prime_power_bounds() {
        let b = Budget::default();
        let x = set(&["2", "4", "8"]);
        for k in [2u32, 3] {
            let rep = probe_separating_constant(&x, &r("1"), k, 24, 7, &b).unwrap();
            assert_eq!(rep.ratios.len(), 24);
            let pp = rep.prime_power_bound.unwrap();
            assert_eq!(pp, split_coefficient(k) as f64);
            for ratio in &rep.ratios {
                assert!(*ratio <= rep.trivial_bound + 1e-9);
                assert!(*ratio <= pp + 1e-9);
            }
        }
        let singleton = set(&["5"]);
        let rep = probe_separating_constant(&singleton, &r("1"), 2, 8, 3, &b).unwrap();
        assert!(rep.max_ratio <= 1.0 + 1e-9);
    }

    #[test]
    fn lambda_uniform_examples() {
        let b = Budget::default();
        let est = lambda_uniform(&set(&["1", "2", "4"]), &r("1"), 2, &b).unwrap();
        assert!((est.value - (15.0f64 / 9.0).sqrt()).abs() < 1e-12);
        let est = lambda_uniform(&set(&["9"]), &r("1"), 2, &b).unwrap();
        assert!((est.value - 1.0).abs() < 1e-12);
        let est = lambda_uniform(&set(&["1", "2"]), &r("1"), 2, &b).unwrap();
        assert!((est.value - (1.5f64).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn energy_form_matches_weighted_energy() {
        let b = Budget::default();
        let a = set(&["1", "2", "4", "7"]);
        let u = r("1");
        for k in [2u32, 3] {
            let form = EnergyForm::build(&a, &u, k).unwrap();
            let w = vec![0.1, 0.5, 0.2, (1.0f64 - 0.01 - 0.25 - 0.04).sqrt()];
            let ws = WeightedSet::new(a.clone(), w.clone()).unwrap();
            let expect = weighted_mixed_energy(&ws, &u, k, &b).unwrap();
            assert!((form.eval(&w) - expect).abs() < 1e-12 * expect.max(1.0));
        }
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let a = set(&["1", "2", "4"]);
        let form = EnergyForm::build(&a, &r("1"), 3).unwrap();
        let w = vec![0.3, 0.5, 0.7];
        let (_, grad) = form.eval_with_grad(&w);
        let h = 1e-6;
        for i in 0..w.len() {
            let mut wp = w.clone();
            wp[i] += h;
            let mut wm = w.clone();
            wm[i] -= h;
            let fd = (form.eval(&wp) - form.eval(&wm)) / (2.0 * h);
            assert!(
                (grad[i] - fd).abs() < 1e-5 * fd.abs().max(1.0),
                "grad[{i}] = {} vs fd {fd}",
                grad[i]
            );
        }
    }

    #[test]
    fn ascent_reaches_k2_closed_form() {
        for elems in [
            vec!["1", "2"],
            vec!["1", "2", "4"],
            vec!["2", "3", "5", "7"],
        ] {
            let a: RationalSet = elems.iter().map(|s| r(s)).collect();
            let (est, traces) = lambda_ascent_with_trace(&a, &r("1"), 2, 60, 11).unwrap();
            let expect = lambda_k2_closed_form(a.len());
            assert!(
                (est.value - expect).abs() < 1e-6,
                "{} vs {expect}",
                est.value
            );
            for trace in traces {
                for pair in trace.windows(2) {
                    assert!(pair[1] >= pair[0] - 1e-12, "objective decreased");
                }
            }
        }
    }

    #[test]
    fn ascent_dominates_uniform() {
        let b = Budget::default();
        let a = set(&["1", "2", "4"]);
        let uniform = lambda_uniform(&a, &r("1"), 3, &b).unwrap();
        let ascent = lambda_ascent(&a, &r("1"), 3, 80, 5).unwrap();
        assert!(ascent.value >= uniform.value - 1e-9);
    }

    #[test]
    fn grid_oracle_examples() {
        let est = lambda_grid_oracle(&set(&["1", "2"]), &r("1"), 2, 0.01).unwrap();
        assert!((est.value - (1.5f64).sqrt()).abs() < 1e-3);
        let est = lambda_grid_oracle(&set(&["6"]), &r("1"), 2, 0.01).unwrap();
        assert!((est.value - 1.0).abs() < 1e-9);
        let est = lambda_grid_oracle(&set(&["1", "2", "4"]), &r("1"), 2, 0.01).unwrap();
        assert!((est.value - (5.0f64 / 3.0).sqrt()).abs() < 1e-3);
        assert!(lambda_grid_oracle(&set(&["1", "2", "3", "4", "5"]), &r("1"), 2, 0.1).is_err());
        assert!(lambda_grid_oracle(&set(&["1", "2"]), &r("1"), 2, 0.5).is_err());
    }

    #[test]
    fn estimates_are_consistent_with_their_witnesses() {
        // value = E_{k,w}^{1/k} at the reported witness, within 1e-9.
        let b = Budget::default();
        let a = set(&["1", "2", "4"]);
        let u = r("1");
        for k in [2u32, 3] {
            let candidates = vec![
                lambda_uniform(&a, &u, k, &b).unwrap(),
                lambda_ascent(&a, &u, k, 60, 3).unwrap(),
                lambda_grid_oracle(&a, &u, k, 0.02).unwrap(),
            ];
            for est in candidates {
                let ws = WeightedSet::new(a.clone(), est.weights.clone()).unwrap();
                assert!(
                    ws.is_normalized(),
                    "{:?} witness not on the sphere",
                    est.method
                );
                let value = weighted_mixed_energy(&ws, &u, k, &b)
                    .unwrap()
                    .powf(1.0 / k as f64);
                assert!(
                    (value - est.value).abs() <= 1e-9 * value.max(1.0),
                    "{:?}: {} vs {}",
                    est.method,
                    est.value,
                    value
                );
            }
        }
    }

    #[test]
    fn lambda_dilation_invariance() {
        let b = Budget::default();
        let a = set(&["1", "2", "4"]);
        let lam = r("3/7");
        let scaled = a.dilate(&lam).unwrap();
        let u = r("1");
        let su = &lam * &u;
        let e1 = lambda_uniform(&a, &u, 2, &b).unwrap().value;
        let e2 = lambda_uniform(&scaled, &su, 2, &b).unwrap().value;
        assert!((e1 - e2).abs() < 1e-12);
        let g1 = lambda_grid_oracle(&a, &u, 2, 0.02).unwrap().value;
        let g2 = lambda_grid_oracle(&scaled, &su, 2, 0.02).unwrap().value;
        assert!((g1 - g2).abs() < 1e-9);
    }

    #[test]
    fn stability_examples() {
        // Closed forms at k = 2: sqrt(3/2) <= sqrt(5/3).
        let a = set(&["1", "2", "4"]);
        let sub = set(&["1", "2"]);
        let la = lambda_grid_oracle(&a, &r("1"), 2, GRID_STEP).unwrap().value;
        let ls = lambda_grid_oracle(&sub, &r("1"), 2, GRID_STEP)
            .unwrap()
            .value;
        assert!(ls <= la + GRID_TOL);
        let rep = verify_stability(&a, &r("1"), 2, 12, 42).unwrap();
        assert_eq!(rep.violations, 0);
    }

    #[test]
    fn subset_lemma_example() {
        let a = set(&["2", "4", "8"]);
        let a_prime = set(&["2", "4"]);
        let rep = verify_subset_lemma_instance(&a, &a_prime, &r("1"), 2).unwrap();
        assert!((rep.lhs - (5.0f64 / 3.0).sqrt()).abs() < GRID_TOL);
        assert_eq!(rep.psi, 2.0);
        assert_eq!(rep.doubling, r("5/3"));
        assert!(rep.holds);

        // A' = A: dominated bound.
        let rep = verify_subset_lemma_instance(&a, &a, &r("1"), 2).unwrap();
        assert!(rep.holds);

        let a = set(&["2", "3", "6"]);
        let rep = verify_subset_lemma_instance(&a, &set(&["2", "3"]), &r("1"), 2).unwrap();
        assert_eq!(rep.psi, 2.0);
        assert!(rep.holds);
    }

    #[test]
    fn dimension_bound_instances() {
        let b = Budget::default();
        for elems in [
            vec!["1", "2", "4", "8"],
            vec!["2", "3", "6"],
            vec!["2", "3", "5", "7"],
        ] {
            let a: RationalSet = elems.iter().map(|s| r(s)).collect();
            let rep = verify_dimension_bound(&a, &r("1"), 2, &b).unwrap();
            assert!(rep.asserted_holds, "failed on {a:?}");
        }
    }

    #[test]
    fn shifted_growth_bound_holds_on_structured_sets() {
        let b = Budget::default();
        for elems in [
            vec!["1", "2", "4", "8"],
            vec!["1", "2", "3", "6"],
            vec!["2", "3", "5"],
        ] {
            let a: RationalSet = elems.iter().map(|s| r(s)).collect();
            for k in [2u32, 3] {
                let rep = verify_shifted_growth_bound(&a, &r("1"), k, &b).unwrap();
                assert!(rep.holds, "failed on {a:?} k={k}");
            }
        }
    }

    #[test]
    fn chain_experiment_stays_trivially_bounded() {
        let b = Budget::default();
        let base = set(&["2", "3"]);
        let rep = chain_experiment(&base, &r("1"), 2, 9, &b).unwrap();
        assert!(rep.within_trivial);
    }
}
