//! Property tests for the structural invariants: factorization round trips,
//! the embedding homomorphism, energy identities, partition laws, and the
//! fiber decomposition round trip.

use proptest::collection::vec;
use proptest::prelude::*;

use sumprodlab::energy::{
    mixed_energy, multiplicative_energy_kfold, multiplicative_energy_shifted, padic_split,
    rep_table,
};
use sumprodlab::fibering::{
    dyadic_pigeonhole, fiber_view, restricted_sumset, LatticeGraph, LatticeSet,
};
use sumprodlab::rational::{
    coprime, default_prime_table, factor, valuation, valuation_embedding, Rational,
};
use sumprodlab::setops::{k_fold_product, product_set};
use sumprodlab::{Budget, RationalSet};

fn rational() -> impl Strategy<Value = Rational> {
    (-200i64..=200, 1i64..=24).prop_map(|(n, d)| Rational::new(n, d).unwrap())
}

fn nonzero_rational() -> impl Strategy<Value = Rational> {
    rational().prop_filter("nonzero", |q| !q.is_zero())
}

fn small_set(max_len: usize) -> impl Strategy<Value = RationalSet> {
    vec(rational(), 1..=max_len).prop_map(RationalSet::from_elements)
}

fn nonzero_set(max_len: usize) -> impl Strategy<Value = RationalSet> {
    vec(nonzero_rational(), 1..=max_len).prop_map(RationalSet::from_elements)
}

proptest! {
    #[test]
    fn factor_reconstruct_round_trip(q in rational()) {
        let f = factor(&q, default_prime_table()).unwrap();
        prop_assert!(f.exponents.values().all(|&e| e != 0));
        prop_assert_eq!(f.reconstruct(), q);
    }

    #[test]
    fn embedding_is_multiplicative(a in nonzero_rational(), b in nonzero_rational()) {
        // v_p(ab) = v_p(a) + v_p(b) on the union of supports.
        let t = default_prime_table();
        let prod = &a * &b;
        let fa = factor(&a, t).unwrap();
        let fb = factor(&b, t).unwrap();
        for p in fa.exponents.keys().chain(fb.exponents.keys()) {
            prop_assert_eq!(
                valuation(&prod, *p).unwrap(),
                valuation(&a, *p).unwrap() + valuation(&b, *p).unwrap()
            );
        }
    }

    #[test]
    fn embedding_of_product_set_adds(a in 1i64..=40, b in 1i64..=40) {
        // P(ab) = P(a) + P(b) coordinate-wise for positive rationals,
        // checked through the set embedding of {a, b, ab}.
        let (qa, qb) = (Rational::from(a), Rational::from(b));
        let prod = &qa * &qb;
        let set: RationalSet = [qa.clone(), qb.clone(), prod.clone()].into_iter().collect();
        let emb = valuation_embedding(&set, default_prime_table()).unwrap();
        let idx = |q: &Rational| set.index_of(q).unwrap();
        let sum = &emb.vectors[idx(&qa)] + &emb.vectors[idx(&qb)];
        prop_assert_eq!(sum, emb.vectors[idx(&prod)].clone());
    }

    #[test]
    fn embedding_injective_on_positive_sets(
        nums in vec((1i64..=120, 1i64..=12), 2..=8),
    ) {
        let set: RationalSet = nums
            .iter()
            .map(|&(n, d)| Rational::new(n, d).unwrap())
            .collect();
        let emb = valuation_embedding(&set, default_prime_table()).unwrap();
        for i in 0..emb.vectors.len() {
            for j in i + 1..emb.vectors.len() {
                prop_assert_ne!(&emb.vectors[i], &emb.vectors[j]);
            }
        }
    }

    #[test]
    fn coprime_is_symmetric_and_one_is_universal(
        a in nonzero_rational(),
        b in nonzero_rational(),
    ) {
        let t = default_prime_table();
        prop_assert_eq!(coprime(&a, &b, t).unwrap(), coprime(&b, &a, t).unwrap());
        prop_assert!(coprime(&a, &Rational::one(), t).unwrap());
    }

    #[test]
    fn product_set_size_bounds(a in nonzero_set(8), k in 1u32..=3) {
        let budget = Budget::default();
        let power = k_fold_product(&a, k, &budget).unwrap();
        prop_assert!(power.len() >= a.len());
        // Multiset upper bound C(n + k - 1, k).
        let n = a.len() as u128;
        let mut bound = 1u128;
        for i in 0..k as u128 {
            bound = bound * (n + k as u128 - 1 - i) / (i + 1);
        }
        prop_assert!(power.len() as u128 <= bound);
    }

    #[test]
    fn plunnecke_holds_on_random_sets(a in nonzero_set(8), h in 1u32..=3) {
        let budget = Budget::default();
        let rep = sumprodlab::setops::plunnecke_check(&a, h, &budget).unwrap();
        prop_assert!(rep.holds, "lhs {} rhs {}", rep.lhs, rep.rhs);
    }

    #[test]
    fn ruzsa_triangle_holds_on_random_sets(a in nonzero_set(8)) {
        let rep = sumprodlab::setops::ruzsa_triangle_check(&a).unwrap();
        prop_assert!(rep.holds, "lhs {} rhs {}", rep.lhs, rep.rhs);
    }

    #[test]
    fn dilation_preserves_product_set_size(a in nonzero_set(8), lam in nonzero_rational()) {
        let scaled = a.dilate(&lam).unwrap();
        prop_assert_eq!(product_set(&a, &a).len(), product_set(&scaled, &scaled).len());
    }

    #[test]
    fn k2_rigidity(a in small_set(12), u in nonzero_rational()) {
        let n = a.len() as u128;
        let budget = Budget::default();
        prop_assert_eq!(mixed_energy(&a, &u, 2, &budget).unwrap(), 2 * n * n - n);
    }

    #[test]
    fn mixed_energy_sandwich(a in small_set(7), u in nonzero_rational(), k in 2u32..=3) {
        let budget = Budget::default();
        let n = a.len() as u128;
        let mixed = mixed_energy(&a, &u, k, &budget).unwrap();
        let shifted = multiplicative_energy_shifted(&a, &u, k, &budget).unwrap();
        let unshifted = multiplicative_energy_kfold(&a, k, &budget).unwrap();
        prop_assert!(n.pow(k) <= mixed);
        prop_assert!(mixed <= shifted);
        prop_assert!(mixed <= unshifted);
        prop_assert!(mixed <= n.pow(2 * k));
    }

    #[test]
    fn rep_table_mass_is_nk(a in small_set(8), u in nonzero_rational(), k in 2u32..=3) {
        let budget = Budget::default();
        let table = rep_table(&a, &u, k, &budget).unwrap();
        prop_assert_eq!(table.total_mass(), (a.len() as u128).pow(k));
        // Support lies inside A^(k) x (A+u)^(k).
        let prod = k_fold_product(&a, k, &budget).unwrap();
        let shifted = k_fold_product(&a.translate(&u), k, &budget).unwrap();
        for ((x, y), _) in table.iter() {
            prop_assert!(prod.contains(x));
            prop_assert!(shifted.contains(y));
        }
    }

    #[test]
    fn mixed_energy_dilation_invariance(
        a in small_set(8),
        u in nonzero_rational(),
        lam in nonzero_rational(),
    ) {
        let budget = Budget::default();
        let scaled = a.dilate(&lam).unwrap();
        prop_assert_eq!(
            mixed_energy(&a, &u, 2, &budget).unwrap(),
            mixed_energy(&scaled, &(&lam * &u), 2, &budget).unwrap()
        );
    }

    #[test]
    fn padic_split_partitions(a in nonzero_set(10), p_idx in 0usize..3) {
        let p = [2u64, 3, 5][p_idx];
        let cells = padic_split(&a, p).unwrap();
        let mut total = 0;
        for (d, cell) in &cells {
            for x in cell.iter() {
                prop_assert_eq!(valuation(x, p).unwrap(), *d);
            }
            total += cell.len();
        }
        prop_assert_eq!(total, a.len());
    }

    #[test]
    fn dyadic_class_mass_bound(values in vec(1u64..=1000, 1..=30)) {
        let items: Vec<(Rational, Rational)> = values
            .iter()
            .map(|&v| (Rational::from(v), Rational::one()))
            .collect();
        let lo = Rational::from(*values.iter().min().unwrap());
        let hi = Rational::from(*values.iter().max().unwrap());
        let class = dyadic_pigeonhole(&items, &lo, &hi).unwrap();
        let ratio = hi.to_f64() / lo.to_f64();
        let bound = values.len() as f64 / (1.0 + ratio.log2()).max(1.0);
        prop_assert!(class.mass.to_f64() + 1e-9 >= bound.floor().max(1.0));
    }
}

fn lattice_instance() -> impl Strategy<Value = LatticeGraph> {
    (1usize..=3, 2i64..=4, 1u64..=500).prop_map(|(dim, side, seed)| {
        let count = 3u32.min((side as u32).pow(dim as u32));
        let a = sumprodlab::generators::random_lattice_set(dim, side, count, seed).unwrap();
        let b = sumprodlab::generators::random_lattice_set(dim, side, count, seed + 1).unwrap();
        sumprodlab::generators::random_lattice_graph(&a, &b, 0.6, seed).unwrap()
    })
}

proptest! {
    #[test]
    fn fiber_view_round_trips(g in lattice_instance(), t_frac in 0.0f64..1.0) {
        let t = (t_frac * (g.a.dim() as f64 + 1.0)) as usize;
        let t = t.min(g.a.dim());
        let view = fiber_view(&g, t).unwrap();
        prop_assert_eq!(view.reconstruct_edges(), g.edges().to_vec());
    }

    #[test]
    fn restricted_sumset_monotone(g in lattice_instance(), keep in 0.0f64..1.0) {
        // Removing edges can only shrink the sumset; complete graph attains it.
        let sub_edges: Vec<(u32, u32)> = g
            .edges()
            .iter()
            .enumerate()
            .filter(|(i, _)| (*i as f64) < keep * g.edges().len() as f64)
            .map(|(_, e)| *e)
            .collect();
        let sub = LatticeGraph::new(g.a.clone(), g.b.clone(), sub_edges).unwrap();
        let full = restricted_sumset(&g);
        let partial = restricted_sumset(&sub);
        for p in partial.iter() {
            prop_assert!(full.points().binary_search(p).is_ok());
        }
        let complete = LatticeGraph::complete(g.a.clone(), g.b.clone()).unwrap();
        let complete_sum = restricted_sumset(&complete);
        for p in full.iter() {
            prop_assert!(complete_sum.points().binary_search(p).is_ok());
        }
    }
}

proptest! {
    #[test]
    fn set_file_format_round_trips(a in small_set(12)) {
        let text = sumprodlab::io::format_set(&a);
        let parsed = sumprodlab::io::parse_set(&text).unwrap();
        prop_assert_eq!(parsed, a);
    }

    #[test]
    fn lattice_file_format_round_trips(g in lattice_instance()) {
        let text = sumprodlab::io::format_lattice_set(&g.a);
        let parsed = sumprodlab::io::parse_lattice_set(&text).unwrap();
        prop_assert_eq!(parsed, g.a);
    }
}

#[test]
fn lattice_set_rejects_mixed_dims() {
    assert!(LatticeSet::new(2, vec![vec![0, 0], vec![1]]).is_err());
}
