use std::cmp::Ordering;
use std::sync::Arc;

use num_complex::Complex64;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use qpn_core::builtin;
use qpn_core::compose::{kron, product, randomize_rates, sum, unit};
use qpn_core::gspn::{eliminate_vanishing, gspn_enabled};
use qpn_core::io::{format_complex, format_complex_exact, parse_amplitude};
use qpn_core::multiset::{Multiset, MultisetOrdering, Universe};
use qpn_core::net::{explore, semiflows, SemiflowKind};
use qpn_core::quantum::{max_abs_diff, random_reversible_qpn, Norm, RatedGraph, Superposition};

fn universe() -> Arc<Universe> {
    Universe::new(["a", "b", "c", "d"]).unwrap()
}

fn multiset() -> impl Strategy<Value = Multiset> {
    prop::collection::vec(0u64..6, 4).prop_map(|e| Multiset::from_exponents(&universe(), e).unwrap())
}

fn complex() -> impl Strategy<Value = Complex64> {
    (-1e3f64..1e3, -1e3f64..1e3).prop_map(|(re, im)| Complex64::new(re, im))
}

fn random_graph(seed: u64) -> RatedGraph {
    let base = builtin::two_qubit_qpn().unwrap().rated_graph(16).unwrap();
    randomize_rates(&base, &mut ChaCha8Rng::seed_from_u64(seed))
}

proptest! {
    #[test]
    fn multiset_product_is_a_commutative_monoid(a in multiset(), b in multiset(), c in multiset()) {
        let one = Multiset::unit(&universe());
        prop_assert_eq!(a.mul(&b).unwrap(), b.mul(&a).unwrap());
        prop_assert_eq!(a.mul(&b).unwrap().mul(&c).unwrap(), a.mul(&b.mul(&c).unwrap()).unwrap());
        prop_assert_eq!(a.mul(&one).unwrap(), a.clone());
        prop_assert_eq!(a.mul(&b).unwrap().diff(&b).unwrap(), a.clone());
        prop_assert_eq!(a.pow(3).unwrap(), a.mul(&a).unwrap().mul(&a).unwrap());
    }

    #[test]
    fn meet_and_join_bound_both_operands(a in multiset(), b in multiset()) {
        let (meet, join) = a.meet_join(&b).unwrap();
        prop_assert!(meet.le(&a) && meet.le(&b) && a.le(&join) && b.le(&join));
        prop_assert_eq!(meet.mul(&join).unwrap(), a.mul(&b).unwrap());
    }

    #[test]
    fn partial_order_agrees_with_divisibility(a in multiset(), b in multiset()) {
        let ord = a.compare(&b).unwrap();
        prop_assert_eq!(matches!(ord, MultisetOrdering::Less | MultisetOrdering::Equal), a.le(&b));
        prop_assert_eq!(ord == MultisetOrdering::Equal, a == b);
        prop_assert_eq!(a.canonical_cmp(&b), b.canonical_cmp(&a).reverse());
        prop_assert_eq!(a.canonical_cmp(&b) == Ordering::Equal, a == b);
        prop_assert_eq!(a.cardinality(), a.exponents().iter().sum::<u64>());
    }

    #[test]
    fn monomial_text_round_trips(a in multiset()) {
        prop_assert_eq!(Multiset::parse(&universe(), &a.to_string()).unwrap(), a);
    }

    #[test]
    fn formatted_amplitudes_parse_back(z in complex()) {
        prop_assert_eq!(parse_amplitude(&format_complex_exact(z)).unwrap(), z);
        let approx = parse_amplitude(&format_complex(z)).unwrap();
        prop_assert!((approx - z).norm() <= 1e-11 * z.norm().max(1.0));
    }

    #[test]
    fn reverse_transitions_undo_every_step(seed in 0u64..500) {
        let q = random_reversible_qpn(seed).unwrap();
        let rg = explore(&q.sys, 10_000).unwrap();
        for e in rg.edges() {
            let back = q.sys.net.reverse_of(e.transition).unwrap();
            let m = q.sys.net.fire_single(rg.space().marking(e.dst), back).unwrap();
            prop_assert_eq!(&m, rg.space().marking(e.src));
        }
    }

    #[test]
    fn place_semiflows_are_conserved(seed in 0u64..500) {
        let q = random_reversible_qpn(seed).unwrap();
        let rg = explore(&q.sys, 10_000).unwrap();
        let weigh = |y: &[u64], m: &Multiset| y.iter().zip(m.exponents()).map(|(a, b)| a * b).sum::<u64>();
        for y in semiflows(&q.sys.net, SemiflowKind::Place) {
            let w0 = weigh(&y, &q.sys.m0);
            for m in rg.space().markings() {
                prop_assert_eq!(weigh(&y, m), w0);
            }
        }
        let effect = q.sys.net.incidence().effect;
        for x in semiflows(&q.sys.net, SemiflowKind::Transition) {
            for row in &effect {
                prop_assert_eq!(row.iter().zip(&x).map(|(c, k)| c * *k as i64).sum::<i64>(), 0);
            }
        }
    }

    #[test]
    fn rate_matrix_collects_edge_rates(seed in any::<u64>()) {
        let g = random_graph(seed);
        let r = g.rate_matrix();
        let mut oracle = nalgebra::DMatrix::<Complex64>::zeros(g.dim(), g.dim());
        for e in g.edges() {
            oracle[(e.dst, e.src)] += e.rate;
        }
        prop_assert_eq!(r.matrix(), &oracle);
        for n in r.normalize_rows().row_norms() {
            prop_assert!((n - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn composition_matches_matrix_algebra(s1 in any::<u64>(), s2 in any::<u64>()) {
        let (a, b) = (random_graph(s1), random_graph(s2));
        let (ra, rb) = (a.rate_matrix().into_matrix(), b.rate_matrix().into_matrix());
        prop_assert!(max_abs_diff(product(&a, &b, true).unwrap().rate_matrix().matrix(), &(&rb * &ra)) < 1e-12);
        prop_assert!(max_abs_diff(product(&a, &unit(&a), true).unwrap().rate_matrix().matrix(), &ra) < 1e-12);
        prop_assert!(max_abs_diff(sum(&a, &b).unwrap().rate_matrix().matrix(), &(&ra + &rb)) < 1e-12);
        let k = kron(&a, &b).unwrap();
        prop_assert_eq!(k.dim(), a.dim() * b.dim());
        prop_assert!(max_abs_diff(k.rate_matrix().matrix(), &ra.kronecker(&rb)) < 1e-12);
    }

    #[test]
    fn edge_step_equals_matrix_step(seed in any::<u64>(), amps in prop::collection::vec(complex(), 4)) {
        let g = random_graph(seed);
        let a = Superposition::new(g.space().clone(), amps).unwrap();
        let edge = g.step(&a).unwrap();
        let matrix = g.rate_matrix().apply(&a).unwrap();
        for (x, y) in edge.amplitudes().iter().zip(matrix.amplitudes()) {
            prop_assert!((x - y).norm() <= 1e-9 * (1.0 + y.norm()));
        }
        if a.norm(Norm::L2) > 0.0 {
            prop_assert!(a.normalize(Norm::L2).unwrap().is_normal(1e-12));
        }
    }

    #[test]
    fn vanishing_elimination_conserves_probability(k in 1u64..5, r in 0.1f64..10.0) {
        let g = builtin::phase_gspn_with(k, r).unwrap();
        let rg = g.explore(10_000).unwrap();
        let reduced = eliminate_vanishing(&g, &rg).unwrap();
        let p = reduced.transition_matrix();
        for v in 0..reduced.space.len() {
            prop_assert!((p.row(v).sum() - 1.0).abs() <= 1e-12);
            let timed: f64 = gspn_enabled(&g, reduced.space.marking(v)).iter().map(|&t| g.weight_of(t)).sum();
            prop_assert!((reduced.out_weight(v) - timed).abs() <= 1e-12 * timed.max(1.0));
        }
        let start: f64 = reduced.initial.iter().map(|(_, p)| p).sum();
        prop_assert!((start - 1.0).abs() <= 1e-12);
    }
}
