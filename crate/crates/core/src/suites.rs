//! Theorem-backed verification suites. Every suite runs seeded, bounded
//! instances of one family of checks and reports the number of violations
//! (always zero unless an implementation bug is present: the inequalities
//! verified here are theorems). The `verify` CLI subcommand aggregates all
//! of them; the acceptance test target drives the same functions at the
//! pinned sizes and tolerances.

use std::time::Instant;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::applications::{
    additive_basis_count, count_incidences, count_incidences_bruteforce, count_line_solutions,
    growth_experiment, verify_usold_bound, Line,
};
use crate::energy::{
    mixed_energy, verify_basecase_split, verify_cs_chain, verify_multiprime_split, WeightedSet,
};
use crate::error::{Error, Result};
use crate::fibering::{
    choose_split_coordinate, degree_prune, regularize, verify_fiber_graph_sum, RegularizeParams,
};
use crate::generators::{
    geometric_progression, multidim_gp, prime_power_set, random_lattice_graph, random_lattice_set,
    random_rational_set,
};
use crate::rational::Rational;
use crate::separation::{
    lambda_ascent, lambda_grid_oracle, lambda_k2_closed_form, lambda_uniform,
    probe_separating_constant, GRID_TOL,
};
use crate::setops::{plunnecke_check, ruzsa_triangle_check, Budget, RationalSet};

pub const SUITE_NAMES: &[&str] = &[
    "k2-closed-form",
    "cs-chain",
    "splitting",
    "separating",
    "lambda",
    "step0",
    "fiber-graph-sum",
    "regularize",
    "growth-bounds",
    "counters",
];

#[derive(Clone, Copy, Debug)]
pub struct SuiteOptions {
    pub seed: u64,
    /// Cap on random set sizes where a suite scales (k2 closed form).
    pub n_max: u32,
    pub budget: Budget,
    pub timings: bool,
}

impl Default for SuiteOptions {
    fn default() -> Self {
        SuiteOptions {
            seed: 0,
            n_max: 30,
            budget: Budget::default(),
            timings: true,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct CheckFailure {
    pub case: String,
    pub detail: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct SuiteReport {
    pub name: String,
    pub checks: u64,
    pub violations: u64,
    pub failures: Vec<CheckFailure>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub elapsed_ms: Option<u64>,
}

impl SuiteReport {
    pub fn ok(&self) -> bool {
        self.violations == 0
    }
}

/// One row of achieved regularization constants, for the ratios CSV.
#[derive(Clone, Debug, Serialize)]
pub struct RegularizeRatioRow {
    pub instance: u32,
    pub dim: usize,
    pub t: usize,
    pub delta: f64,
    pub doubling_k: f64,
    pub c_set_sizes_a: Option<f64>,
    pub c_set_sizes_b: Option<f64>,
    pub c_delta_sizes: Option<f64>,
    pub c_doubling: Option<f64>,
    pub m_a: u64,
    pub m_b: u64,
    pub delta1: f64,
    pub delta2: f64,
    pub k1: f64,
    pub k2: f64,
    pub uniformity_factor: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct VerifyReport {
    pub schema: u32,
    pub seed: u64,
    pub ok: bool,
    pub suites: Vec<SuiteReport>,
    pub regularize_ratios: Vec<RegularizeRatioRow>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub elapsed_ms: Option<u64>,
}

struct Checker {
    checks: u64,
    failures: Vec<CheckFailure>,
}

impl Checker {
    fn new() -> Self {
        Checker {
            checks: 0,
            failures: Vec::new(),
        }
    }

    fn check(&mut self, ok: bool, case: impl Fn() -> String, detail: impl Fn() -> String) {
        self.checks += 1;
        if !ok {
            self.failures.push(CheckFailure {
                case: case(),
                detail: detail(),
            });
        }
    }

    fn finish(self, name: &str, started: Instant, timings: bool) -> SuiteReport {
        SuiteReport {
            name: name.to_string(),
            checks: self.checks,
            violations: self.failures.len() as u64,
            failures: self.failures,
            elapsed_ms: timings.then(|| started.elapsed().as_millis() as u64),
        }
    }
}

fn rng_for(seed: u64, salt: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed ^ salt.wrapping_mul(0x9e3779b97f4a7c15))
}

fn random_nonzero_rational(rng: &mut ChaCha8Rng, bound: i64, den_bound: i64) -> Rational {
    loop {
        let n = rng.gen_range(-bound..=bound);
        if n == 0 {
            continue;
        }
        let d = rng.gen_range(1..=den_bound);
        return Rational::new(n, d).expect("nonzero denominator");
    }
}

/// Criterion family: k = 2 rigidity, `E_2(A;u) = 2|A|^2 - |A|` exactly.
pub fn suite_k2_closed_form(opts: &SuiteOptions, instances: u32) -> Result<SuiteReport> {
    let started = Instant::now();
    let mut c = Checker::new();
    let mut rng = rng_for(opts.seed, 1);
    for i in 0..instances {
        let n = rng.gen_range(1..=opts.n_max.max(1));
        let a = random_rational_set(n, 60, 8, opts.seed.wrapping_add(i as u64 * 17 + 1))?;
        let u = random_nonzero_rational(&mut rng, 12, 5);
        let expect = 2 * (a.len() as u128) * (a.len() as u128) - a.len() as u128;
        let got = mixed_energy(&a, &u, 2, &opts.budget)?;
        c.check(
            got == expect,
            || format!("instance {i} n={} u={u}", a.len()),
            || format!("E_2 = {got}, expected {expect}"),
        );
    }
    Ok(c.finish("k2-closed-form", started, opts.timings))
}

/// Criterion family: the Cauchy-Schwarz chain holds exactly.
pub fn suite_cs_chain(opts: &SuiteOptions, instances: u32) -> Result<SuiteReport> {
    let started = Instant::now();
    let mut c = Checker::new();
    let mut rng = rng_for(opts.seed, 2);
    for i in 0..instances {
        let k = if i % 2 == 0 { 2 } else { 3 };
        let n = rng.gen_range(1..=20u32);
        let mut a = random_rational_set(n, 40, 6, opts.seed.wrapping_add(i as u64 * 31 + 2))?;
        while a.contains_zero() {
            a = random_rational_set(n, 40, 6, opts.seed.wrapping_add(i as u64 * 31 + 100_003))?;
        }
        let u = random_nonzero_rational(&mut rng, 9, 4);
        let rep = verify_cs_chain(&a, &u, k, &opts.budget)?;
        c.check(
            rep.holds,
            || format!("instance {i} k={k} n={}", a.len()),
            || format!("lhs {} > rhs slack {}", rep.lhs, rep.slack),
        );
    }
    Ok(c.finish("cs-chain", started, opts.timings))
}

/// Criterion family: one-prime and multi-prime splitting inequalities plus
/// the one-prime consistency identity.
pub fn suite_splitting(
    opts: &SuiteOptions,
    base_instances: u32,
    multi_instances: u32,
) -> Result<SuiteReport> {
    let started = Instant::now();
    let mut c = Checker::new();
    let mut rng = rng_for(opts.seed, 3);
    let primes = [2u64, 3, 5];
    for i in 0..base_instances {
        let k = if i % 2 == 0 { 2 } else { 3 };
        let p = primes[i as usize % primes.len()];
        let n = rng.gen_range(2..=10u32);
        let a = random_rational_set(n, 30, 4, opts.seed.wrapping_add(i as u64 * 43 + 3))?;
        let mut w: Vec<f64> = (0..a.len()).map(|_| rng.gen_range(0.01..1.0)).collect();
        let norm = w.iter().map(|x| x * x).sum::<f64>().sqrt();
        w.iter_mut().for_each(|x| *x /= norm);
        let ws = WeightedSet::new(a, w)?;
        let u = random_nonzero_rational(&mut rng, 7, 3);
        let rep = verify_basecase_split(&ws, &u, p, k, &opts.budget)?;
        c.check(
            rep.holds,
            || format!("basecase {i} p={p} k={k}"),
            || {
                format!(
                    "lhs {} > {} * {}",
                    rep.lhs_root, rep.coefficient, rep.rhs_sum_roots
                )
            },
        );
    }
    for i in 0..multi_instances {
        let k = if i % 2 == 0 { 2 } else { 3 };
        let pair = match i % 3 {
            0 => [2u64, 3],
            1 => [2, 5],
            _ => [3, 5],
        };
        let n = rng.gen_range(2..=8u32);
        let a = random_rational_set(n, 30, 4, opts.seed.wrapping_add(i as u64 * 57 + 5))?;
        let mut w: Vec<f64> = (0..a.len()).map(|_| rng.gen_range(0.01..1.0)).collect();
        let norm = w.iter().map(|x| x * x).sum::<f64>().sqrt();
        w.iter_mut().for_each(|x| *x /= norm);
        let ws = WeightedSet::new(a, w)?;
        let u = random_nonzero_rational(&mut rng, 7, 3);
        let rep = verify_multiprime_split(&ws, &u, &pair, k, &opts.budget)?;
        c.check(
            rep.holds,
            || format!("multiprime {i} primes={pair:?} k={k}"),
            || {
                format!(
                    "lhs {} > {} * {}",
                    rep.lhs_root, rep.coefficient, rep.rhs_sum_roots
                )
            },
        );
        // One-prime consistency: both verifiers computed on the same data
        // must agree bit for bit.
        let single = verify_multiprime_split(&ws, &u, &pair[..1], k, &opts.budget)?;
        let base = verify_basecase_split(&ws, &u, pair[0], k, &opts.budget)?;
        c.check(
            single.lhs_root.to_bits() == base.lhs_root.to_bits()
                && single.rhs_sum_roots.to_bits() == base.rhs_sum_roots.to_bits()
                && single.coefficient == base.coefficient as u128,
            || format!("one-prime consistency {i}"),
            || {
                format!(
                    "multi ({}, {}) vs base ({}, {})",
                    single.lhs_root, single.rhs_sum_roots, base.lhs_root, base.rhs_sum_roots
                )
            },
        );
    }
    Ok(c.finish("splitting", started, opts.timings))
}

/// Criterion family: probe ratios respect the trivial and prime-power
/// separating bounds.
pub fn suite_separating(opts: &SuiteOptions, probes_per_kind: u32) -> Result<SuiteReport> {
    let started = Instant::now();
    let mut c = Checker::new();
    let mut rng = rng_for(opts.seed, 4);
    let per_instance = 10u32.min(probes_per_kind.max(1));
    let instances = probes_per_kind.div_ceil(per_instance);

    for i in 0..instances {
        let k = if i % 2 == 0 { 2 } else { 3 };
        let n = rng.gen_range(2..=5u32);
        let x = random_rational_set(n, 20, 3, opts.seed.wrapping_add(i as u64 * 71 + 7))?;
        let u = random_nonzero_rational(&mut rng, 5, 2);
        let rep =
            probe_separating_constant(&x, &u, k, per_instance, opts.seed + i as u64, &opts.budget)?;
        for (pi, ratio) in rep.ratios.iter().enumerate() {
            c.check(
                *ratio <= rep.trivial_bound + 1e-9,
                || format!("random X instance {i} probe {pi} k={k}"),
                || format!("ratio {ratio} > |X| = {}", rep.trivial_bound),
            );
        }
    }

    for i in 0..instances {
        let k = if i % 2 == 0 { 2 } else { 3 };
        let p = [2u64, 3, 5][i as usize % 3];
        let count = rng.gen_range(2..=5usize);
        let mut exps = std::collections::BTreeSet::new();
        while exps.len() < count {
            exps.insert(rng.gen_range(-3i64..=6));
        }
        let exps: Vec<i64> = exps.into_iter().collect();
        let x = prime_power_set(p, &exps)?;
        let u = random_nonzero_rational(&mut rng, 5, 2);
        let rep = probe_separating_constant(
            &x,
            &u,
            k,
            per_instance,
            opts.seed + 1000 + i as u64,
            &opts.budget,
        )?;
        let bound = rep
            .prime_power_bound
            .ok_or_else(|| Error::invalid("prime power bound missing"))?;
        for (pi, ratio) in rep.ratios.iter().enumerate() {
            c.check(
                *ratio <= bound + 1e-9 && *ratio <= rep.trivial_bound + 1e-9,
                || format!("prime-power X instance {i} probe {pi} k={k} p={p}"),
                || format!("ratio {ratio} > bound {bound}"),
            );
        }
    }
    Ok(c.finish("separating", started, opts.timings))
}

/// Criterion family: grid, ascent, and the closed form agree at k = 2, and
/// lambda is monotone under subsets (checked exhaustively on n <= 4).
pub fn suite_lambda(opts: &SuiteOptions) -> Result<SuiteReport> {
    let started = Instant::now();
    let mut c = Checker::new();
    let full: RationalSet = [1i64, 2, 4, 8].map(Rational::from).into_iter().collect();
    let u = Rational::one();

    for n in 1..=4usize {
        let a: RationalSet = full.iter().take(n).cloned().collect();
        let closed = lambda_k2_closed_form(n);
        let step = if n == 4 { 0.02 } else { 0.01 };
        let grid = lambda_grid_oracle(&a, &u, 2, step)?;
        c.check(
            (grid.value - closed).abs() <= 1e-3,
            || format!("grid n={n}"),
            || format!("grid {} vs closed {closed}", grid.value),
        );
        let ascent = lambda_ascent(&a, &u, 2, 100, opts.seed + n as u64)?;
        c.check(
            (ascent.value - closed).abs() <= 1e-6,
            || format!("ascent n={n}"),
            || format!("ascent {} vs closed {closed}", ascent.value),
        );
        let uniform = lambda_uniform(&a, &u, 2, &opts.budget)?;
        c.check(
            ascent.value >= uniform.value - 1e-9,
            || format!("ascent dominates uniform n={n}"),
            || format!("ascent {} < uniform {}", ascent.value, uniform.value),
        );
    }

    // Exhaustive stability over all nonempty subsets of the 4-element set.
    let elems: Vec<Rational> = full.iter().cloned().collect();
    let mut oracle = [0.0f64; 16];
    for mask in 1u32..16 {
        let subset: RationalSet = (0..4)
            .filter(|b| mask >> b & 1 == 1)
            .map(|b| elems[b].clone())
            .collect();
        oracle[mask as usize] = lambda_grid_oracle(&subset, &u, 2, 0.02)?.value;
    }
    for sub in 1u32..16 {
        for sup in 1u32..16 {
            if sub & sup == sub && sub != sup {
                c.check(
                    oracle[sub as usize] <= oracle[sup as usize] + GRID_TOL,
                    || format!("stability {sub:04b} subset of {sup:04b}"),
                    || {
                        format!(
                            "lambda {} > {} + tol",
                            oracle[sub as usize], oracle[sup as usize]
                        )
                    },
                );
            }
        }
    }
    Ok(c.finish("lambda", started, opts.timings))
}

/// Criterion family: degree pruning postconditions hold exactly.
pub fn suite_step0(opts: &SuiteOptions, instances: u32) -> Result<SuiteReport> {
    let started = Instant::now();
    let mut c = Checker::new();
    let mut rng = rng_for(opts.seed, 6);
    for i in 0..instances {
        let dim = rng.gen_range(1..=2usize);
        let side = rng.gen_range(4..=10i64);
        let na = rng.gen_range(2..=50u32).min((side as u32).pow(dim as u32));
        let nb = rng.gen_range(2..=50u32).min((side as u32).pow(dim as u32));
        let a = random_lattice_set(dim, side, na, opts.seed.wrapping_add(i as u64 * 3 + 11))?;
        let b = random_lattice_set(dim, side, nb, opts.seed.wrapping_add(i as u64 * 3 + 12))?;
        let density = rng.gen_range(0.05..=1.0f64);
        let mut g = random_lattice_graph(&a, &b, density, opts.seed.wrapping_add(i as u64))?;
        let mut bump = 0;
        while g.edge_count() == 0 {
            bump += 1;
            g = random_lattice_graph(&a, &b, density, opts.seed.wrapping_add(i as u64 + bump))?;
        }
        let (_, rep) = degree_prune(&g)?;
        c.check(
            rep.postconditions_hold,
            || format!("instance {i} |A|={na} |B|={nb} density={density:.2}"),
            || format!("{rep:?}"),
        );
    }
    Ok(c.finish("step0", started, opts.timings))
}

/// Criterion family: the fiber graph sum inequality at every split position.
pub fn suite_fiber_graph_sum(opts: &SuiteOptions, instances: u32) -> Result<SuiteReport> {
    let started = Instant::now();
    let mut c = Checker::new();
    let mut rng = rng_for(opts.seed, 7);
    for i in 0..instances {
        let dim = rng.gen_range(1..=4usize);
        let count = rng.gen_range(2..=200u32);
        let side = ((count as f64).powf(1.0 / dim as f64).ceil() as i64 + 1).max(2);
        let na = count.min((side as u32).pow(dim as u32));
        let nb = rng.gen_range(2..=200u32).min((side as u32).pow(dim as u32));
        let a = random_lattice_set(dim, side, na, opts.seed.wrapping_add(i as u64 * 7 + 21))?;
        let b = random_lattice_set(dim, side, nb, opts.seed.wrapping_add(i as u64 * 7 + 22))?;
        let density = rng.gen_range(0.1..=1.0f64);
        let mut g = random_lattice_graph(&a, &b, density, opts.seed.wrapping_add(i as u64 * 5))?;
        let mut bump = 0;
        while g.edge_count() == 0 {
            bump += 1;
            g = random_lattice_graph(&a, &b, density, opts.seed.wrapping_add(i as u64 * 5 + bump))?;
        }
        for t in 0..=dim {
            let rep = verify_fiber_graph_sum(&g, t)?;
            c.check(
                rep.holds_stated && rep.holds_strong,
                || format!("instance {i} dim={dim} t={t}"),
                || format!("{rep:?}"),
            );
        }
    }
    Ok(c.finish("fiber-graph-sum", started, opts.timings))
}

/// Criterion family: regularization certificates verify; achieved constant
/// ratios are collected for the CSV report.
pub fn suite_regularize(
    opts: &SuiteOptions,
    instances: u32,
) -> Result<(SuiteReport, Vec<RegularizeRatioRow>)> {
    let started = Instant::now();
    let mut c = Checker::new();
    let mut rows = Vec::new();
    let mut rng = rng_for(opts.seed, 8);
    let params = RegularizeParams::default();
    for i in 0..instances {
        let dim = rng.gen_range(2..=4usize);
        let count = rng.gen_range(20..=120u32);
        let side = ((count as f64).powf(1.0 / dim as f64).ceil() as i64 + 1).max(2);
        let na = count.min((side as u32).pow(dim as u32));
        let nb = rng
            .gen_range(20..=120u32)
            .min((side as u32).pow(dim as u32));
        let a = random_lattice_set(dim, side, na, opts.seed.wrapping_add(i as u64 * 13 + 31))?;
        let b = random_lattice_set(dim, side, nb, opts.seed.wrapping_add(i as u64 * 13 + 32))?;
        let density = rng.gen_range(0.3..=1.0f64);
        let mut g = random_lattice_graph(&a, &b, density, opts.seed.wrapping_add(i as u64 * 9))?;
        let mut bump = 0;
        while g.edge_count() == 0 {
            bump += 1;
            g = random_lattice_graph(&a, &b, density, opts.seed.wrapping_add(i as u64 * 9 + bump))?;
        }
        let t = choose_split_coordinate(&g.a, &g.b)?;
        match regularize(&g, t, &params) {
            Ok(cert) => {
                let verified = cert.verify();
                c.check(
                    verified.is_ok(),
                    || format!("instance {i} dim={dim} t={t}"),
                    || format!("{verified:?}"),
                );
                rows.push(RegularizeRatioRow {
                    instance: i,
                    dim,
                    t,
                    delta: cert.achieved.delta,
                    doubling_k: cert.achieved.doubling_k,
                    c_set_sizes_a: cert.achieved.c_set_sizes_a,
                    c_set_sizes_b: cert.achieved.c_set_sizes_b,
                    c_delta_sizes: cert.achieved.c_delta_sizes,
                    c_doubling: cert.achieved.c_doubling,
                    m_a: cert.m_a,
                    m_b: cert.m_b,
                    delta1: cert.delta1.to_f64(),
                    delta2: cert.delta2.to_f64(),
                    k1: cert.k1,
                    k2: cert.k2,
                    uniformity_factor: cert.uniformity_factor,
                });
            }
            Err(e) => {
                c.check(
                    false,
                    || format!("instance {i} dim={dim} t={t}"),
                    || format!("regularize failed: {e}"),
                );
            }
        }
    }
    Ok((c.finish("regularize", started, opts.timings), rows))
}

/// Criterion family: shifted-growth, Pluennecke, and Ruzsa bounds on the
/// structured families, plus the strict-growth smoke check.
pub fn suite_growth_bounds(opts: &SuiteOptions) -> Result<SuiteReport> {
    let started = Instant::now();
    let mut c = Checker::new();
    let mut families: Vec<(String, RationalSet)> = Vec::new();
    for (ratio, ns) in [
        ("2", vec![4u32, 8, 12]),
        ("3/2", vec![4, 8]),
        ("5", vec![6]),
    ] {
        for n in ns {
            let r: Rational = ratio.parse()?;
            families.push((format!("gp({ratio},{n})"), geometric_progression(&r, n)?));
        }
    }
    for (primes, dims) in [
        (vec![2u64, 3], vec![2u32, 2]),
        (vec![2, 3], vec![4, 3]),
        (vec![2, 5], vec![3, 4]),
        (vec![3, 5], vec![2, 3]),
        (vec![2, 3, 5], vec![2, 2, 2]),
    ] {
        families.push((
            format!("multidim({primes:?},{dims:?})"),
            multidim_gp(&primes, &dims)?,
        ));
    }
    let u = Rational::one();
    let u2 = Rational::from(2i64);
    for (name, a) in &families {
        for k in [2u32, 3] {
            for shift in [&u, &u2] {
                let rep = verify_usold_bound(a, shift, k, &opts.budget)?;
                c.check(
                    rep.holds,
                    || format!("usold {name} k={k} u={shift}"),
                    || format!("log lhs {} < log rhs {}", rep.log_lhs, rep.log_rhs),
                );
                let rep =
                    crate::separation::verify_shifted_growth_bound(a, shift, k, &opts.budget)?;
                c.check(
                    rep.holds,
                    || format!("dimension growth chain {name} k={k} u={shift}"),
                    || format!("lhs {} dimension {}", rep.lhs, rep.dimension),
                );
            }
            let rep = plunnecke_check(a, k, &opts.budget)?;
            c.check(
                rep.holds,
                || format!("plunnecke {name} h={k}"),
                || format!("lhs {} > rhs {}", rep.lhs, rep.rhs),
            );
        }
        let rep = ruzsa_triangle_check(a)?;
        c.check(
            rep.holds,
            || format!("ruzsa {name}"),
            || format!("lhs {} > rhs {}", rep.lhs, rep.rhs),
        );
    }

    // Strict-growth smoke check on the 16-element multiplicative box.
    let a = multidim_gp(&[2, 3], &[4, 4])?;
    let rep = growth_experiment(&a, &u, 3, &opts.budget)?;
    let e1 = rep.exponents[0].unwrap_or(0.0);
    let e3 = rep.exponents[2].unwrap_or(0.0);
    c.check(
        rep.truncated_at.is_none() && e3 > e1,
        || "growth smoke multidim([2,3],[4,4])".to_string(),
        || format!("exponent k=3 {e3} vs k=1 {e1}"),
    );
    Ok(c.finish("growth-bounds", started, opts.timings))
}

/// Criterion family: counters match independent brute-force loops exactly.
pub fn suite_counters(opts: &SuiteOptions, instances: u32) -> Result<SuiteReport> {
    let started = Instant::now();
    let mut c = Checker::new();
    let mut rng = rng_for(opts.seed, 10);

    for i in 0..instances {
        let n = rng.gen_range(1..=15u32);
        let a = random_rational_set(n, 20, 4, opts.seed.wrapping_add(i as u64 * 91 + 41))?;
        let c1 = random_nonzero_rational(&mut rng, 5, 3);
        let c2 = random_nonzero_rational(&mut rng, 5, 3);
        let fast = count_line_solutions(&a, &c1, &c2)?;
        let mut brute = 0u64;
        let one = Rational::one();
        for x in a.iter() {
            for y in a.iter() {
                if &(&c1 * x) + &(&c2 * y) == one {
                    brute += 1;
                }
            }
        }
        c.check(
            fast.count == brute,
            || format!("solve-count {i}"),
            || format!("fast {} vs brute {brute}", fast.count),
        );
    }

    for i in 0..instances {
        let n = rng.gen_range(1..=12u32);
        let a = random_rational_set(n, 10, 3, opts.seed.wrapping_add(i as u64 * 97 + 43))?;
        let line_count = rng.gen_range(1..=8usize);
        let mut lines = Vec::new();
        while lines.len() < line_count {
            let (la, lb) = match rng.gen_range(0..4u32) {
                0 => (Rational::zero(), random_nonzero_rational(&mut rng, 3, 2)),
                1 => (random_nonzero_rational(&mut rng, 3, 2), Rational::zero()),
                _ => (
                    random_nonzero_rational(&mut rng, 3, 2),
                    random_nonzero_rational(&mut rng, 3, 2),
                ),
            };
            let lc = if rng.gen_bool(0.25) {
                Rational::zero()
            } else {
                random_nonzero_rational(&mut rng, 4, 2)
            };
            if let Ok(line) = Line::new(la, lb, lc) {
                lines.push(line);
            }
        }
        let rep = count_incidences(&a, &lines)?;
        let brute = count_incidences_bruteforce(&a, &lines);
        let class_sum =
            rep.horizontal + rep.vertical + rep.through_origin + rep.generic + rep.irrational_slope;
        c.check(
            rep.total == brute && class_sum == rep.total && rep.irrational_slope == 0,
            || format!("incidence {i}"),
            || format!("fast {} vs brute {brute}, classes {class_sum}", rep.total),
        );
    }

    for i in 0..instances {
        let nb = rng.gen_range(1..=10u32);
        let nb2 = rng.gen_range(1..=10u32);
        let na = rng.gen_range(1..=12u32);
        let a = random_rational_set(na, 15, 2, opts.seed.wrapping_add(i as u64 * 101 + 47))?;
        let b = random_rational_set(nb, 15, 2, opts.seed.wrapping_add(i as u64 * 101 + 48))?;
        let b2 = random_rational_set(nb2, 15, 2, opts.seed.wrapping_add(i as u64 * 101 + 49))?;
        let rep = additive_basis_count(&a, &b, &b2);
        let mut brute = 0u64;
        for x in b.iter() {
            for y in b2.iter() {
                if a.contains(&(x + y)) {
                    brute += 1;
                }
            }
        }
        let slice_sum: u64 = rep.slice_sizes.iter().map(|(_, s)| s).sum();
        c.check(
            rep.s == brute && slice_sum == rep.s,
            || format!("basis {i}"),
            || format!("fast {} vs brute {brute}", rep.s),
        );
    }
    Ok(c.finish("counters", started, opts.timings))
}

/// Run one suite by name at the default (acceptance) sizes.
pub fn run_suite(
    name: &str,
    opts: &SuiteOptions,
) -> Result<(SuiteReport, Vec<RegularizeRatioRow>)> {
    let no_rows = Vec::new();
    match name {
        "k2-closed-form" => Ok((suite_k2_closed_form(opts, 200)?, no_rows)),
        "cs-chain" => Ok((suite_cs_chain(opts, 100)?, no_rows)),
        "splitting" => Ok((suite_splitting(opts, 100, 50)?, no_rows)),
        "separating" => Ok((suite_separating(opts, 200)?, no_rows)),
        "lambda" => Ok((suite_lambda(opts)?, no_rows)),
        "step0" => Ok((suite_step0(opts, 500)?, no_rows)),
        "fiber-graph-sum" => Ok((suite_fiber_graph_sum(opts, 200)?, no_rows)),
        "regularize" => suite_regularize(opts, 100),
        "growth-bounds" => Ok((suite_growth_bounds(opts)?, no_rows)),
        "counters" => Ok((suite_counters(opts, 100)?, no_rows)),
        other => Err(Error::invalid(format!("unknown suite {other:?}"))),
    }
}

/// Run every suite (or a single named one) and aggregate.
pub fn run_all(filter: Option<&str>, opts: &SuiteOptions) -> Result<VerifyReport> {
    let started = Instant::now();
    if let Some(name) = filter {
        if !SUITE_NAMES.contains(&name) {
            return Err(Error::invalid(format!(
                "unknown suite {name:?}; available: {}",
                SUITE_NAMES.join(", ")
            )));
        }
    }
    let mut suites = Vec::new();
    let mut ratios = Vec::new();
    for &name in SUITE_NAMES {
        if let Some(f) = filter {
            if f != name {
                continue;
            }
        }
        let (report, rows) = run_suite(name, opts)?;
        suites.push(report);
        ratios.extend(rows);
    }
    let ok = suites.iter().all(|s| s.ok());
    Ok(VerifyReport {
        schema: 1,
        seed: opts.seed,
        ok,
        suites,
        regularize_ratios: ratios,
        elapsed_ms: opts.timings.then(|| started.elapsed().as_millis() as u64),
    })
}
