//! Concurrences (multisets of transitions) and the rate graph they span.

use std::cmp::Ordering;
use std::sync::Arc;

use crate::error::{QpnError, Result};
use crate::multiset::{Multiset, Universe};
use crate::net::{NetStructure, ReachabilityGraph, StateSpace, SystemNet};

/// Order used for concurrence listings: by size, then canonical order.
pub fn concurrence_cmp(a: &Multiset, b: &Multiset) -> Ordering {
    a.cardinality().cmp(&b.cardinality()).then_with(|| a.canonical_cmp(b))
}

/// `lift(F⁻, t) <= m` and `wf(m, t)`.
pub fn is_enabled(net: &NetStructure, m: &Multiset, t: &Multiset) -> Result<bool> {
    let pre = net.lifted_input(t)?;
    Ok(pre.le(m) && net.wf().may_enable(net, m, t))
}

/// All enabled concurrences of size at most `max_card`, including the unit.
///
/// `max_card` defaults to the number of tokens in `m`. It must be supplied
/// when some transition has an empty preset.
pub fn enabled_concurrences(net: &NetStructure, m: &Multiset, max_card: Option<u64>) -> Result<Vec<Multiset>> {
    let nt = net.transitions().len();
    let cap = match max_card {
        Some(c) => c,
        None => {
            if let Some(t) = (0..nt).find(|&t| net.input(t).is_unit()) {
                return Err(QpnError::UnboundedConcurrence(format!(
                    "transition `{}` has an empty preset; pass an explicit cardinality cap",
                    net.transitions().name(t)
                )));
            }
            m.cardinality()
        }
    };

    let mut found = Vec::new();
    let mut exps = vec![0u64; nt];
    dfs(net, 0, cap, m.exponents().to_vec(), &mut exps, &mut found)?;
    let mut out = Vec::with_capacity(found.len());
    for exps in found {
        let t = Multiset::from_exponents(net.transitions(), exps)?;
        if net.wf().may_enable(net, m, &t) {
            out.push(t);
        }
    }
    out.sort_by(concurrence_cmp);
    Ok(out)
}

/// Chooses a multiplicity for transition `i` against the remaining tokens.
fn dfs(
    net: &NetStructure,
    i: usize,
    budget: u64,
    remaining: Vec<u64>,
    exps: &mut Vec<u64>,
    found: &mut Vec<Vec<u64>>,
) -> Result<()> {
    if i == exps.len() {
        found.push(exps.clone());
        return Ok(());
    }
    let pre = net.input(i).exponents();
    let mut rem = remaining;
    let mut k = 0u64;
    loop {
        exps[i] = k;
        dfs(net, i + 1, budget - k, rem.clone(), exps, found)?;
        if k == budget {
            break;
        }
        let fits = pre.iter().zip(&rem).all(|(need, have)| need <= have);
        if !fits {
            break;
        }
        for (r, need) in rem.iter_mut().zip(pre) {
            *r -= need;
        }
        k += 1;
    }
    exps[i] = 0;
    Ok(())
}

/// Result of firing a concurrence: the new marking and the effect pair
/// `(m \ m', m' \ m)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Firing {
    pub marking: Multiset,
    pub consumed: Multiset,
    pub produced: Multiset,
}

/// `ev(m') = ev(m) - ev(lift(F⁻, t)) + ev(lift(F⁺, t))`.
pub fn fire_concurrence(net: &NetStructure, m: &Multiset, t: &Multiset) -> Result<Firing> {
    if **t.universe() != **net.transitions() {
        return Err(QpnError::UniverseMismatch);
    }
    let pre = net.lifted_input(t)?;
    if !pre.le(m) {
        let p = (0..m.universe().len())
            .find(|&p| pre.get(p) > m.get(p))
            .expect("some place is short");
        return Err(QpnError::NotEnabled {
            transition: t.to_string(),
            reason: format!(
                "place `{}` holds {} token(s), {} required",
                net.places().name(p),
                m.get(p),
                pre.get(p)
            ),
        });
    }
    if !net.wf().may_enable(net, m, t) {
        return Err(QpnError::NotEnabled {
            transition: t.to_string(),
            reason: "well-formedness predicate is false".to_string(),
        });
    }
    let next = m.diff(&pre)?.mul(&net.lifted_output(t)?)?;
    Ok(Firing {
        consumed: m.diff(&next)?,
        produced: next.diff(m)?,
        marking: next,
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RateEdge {
    pub src: usize,
    pub concurrence: Multiset,
    pub dst: usize,
}

/// Reachability set with one edge per enabled concurrence whose target lies
/// in the set, plus a unit self-loop on every vertex.
#[derive(Debug, Clone)]
pub struct RateGraph {
    space: Arc<StateSpace>,
    transitions: Arc<Universe>,
    edges: Vec<RateEdge>,
    initial: usize,
}

impl RateGraph {
    pub fn space(&self) -> &Arc<StateSpace> {
        &self.space
    }

    pub fn transitions(&self) -> &Arc<Universe> {
        &self.transitions
    }

    /// Edges sorted by source, destination, then concurrence order.
    pub fn edges(&self) -> &[RateEdge] {
        &self.edges
    }

    pub fn initial(&self) -> usize {
        self.initial
    }

    pub fn non_unit_edges(&self) -> impl Iterator<Item = &RateEdge> {
        self.edges.iter().filter(|e| !e.concurrence.is_unit())
    }
}

pub fn build_rate_graph(sys: &SystemNet, rg: &ReachabilityGraph, max_card: Option<u64>) -> Result<RateGraph> {
    let space = Arc::clone(rg.space());
    let net = &sys.net;
    let mut edges = Vec::new();
    for (src, m) in space.markings().iter().enumerate() {
        edges.push(RateEdge {
            src,
            concurrence: Multiset::unit(net.transitions()),
            dst: src,
        });
        for t in enabled_concurrences(net, m, max_card)? {
            if t.is_unit() {
                continue;
            }
            let next = m.diff(&net.lifted_input(&t)?)?.mul(&net.lifted_output(&t)?)?;
            if let Some(dst) = space.index_of(&next) {
                edges.push(RateEdge {
                    src,
                    concurrence: t,
                    dst,
                });
            }
        }
    }
    edges.sort_by(|a, b| {
        (a.src, a.dst)
            .cmp(&(b.src, b.dst))
            .then_with(|| concurrence_cmp(&a.concurrence, &b.concurrence))
    });
    Ok(RateGraph {
        space,
        transitions: Arc::clone(net.transitions()),
        edges,
        initial: rg.initial(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::net::explore;
    use crate::net::fixtures::*;

    fn example_net() -> NetStructure {
        NetStructure::from_monomials(
            &["A", "B", "C", "D", "E"],
            &[("a", "A B", "D E"), ("b", "A B^2", "D^2"), ("c", "C", "E^2")],
        )
        .unwrap()
    }

    fn names(v: &[Multiset]) -> Vec<String> {
        v.iter().map(|m| m.to_string()).collect()
    }

    #[test]
    fn two_qubit_concurrences_from_00() {
        let sys = two_bits();
        let m = sys.marking("P0 Q0").unwrap();
        let cs = enabled_concurrences(&sys.net, &m, None).unwrap();
        assert_eq!(names(&cs), ["1", "Pu", "Qu", "Pu Qu"]);
    }

    #[test]
    fn example_concurrence_fires() {
        let net = example_net();
        let m = Multiset::parse(net.places(), "A^4 B^6 C^3 E^2").unwrap();
        let t = Multiset::parse(net.transitions(), "a b^2 c").unwrap();
        let cs = enabled_concurrences(&net, &m, None).unwrap();
        assert!(cs.contains(&t));
        let f = fire_concurrence(&net, &m, &t).unwrap();
        assert_eq!(f.marking, Multiset::parse(net.places(), "A B C^2 D^5 E^5").unwrap());
        assert_eq!(f.consumed, Multiset::parse(net.places(), "A^3 B^5 C").unwrap());
        assert_eq!(f.produced, Multiset::parse(net.places(), "D^5 E^3").unwrap());
    }

    #[test]
    fn unit_fires_to_itself_and_dead_marking_has_only_unit() {
        let net = example_net();
        let m = Multiset::parse(net.places(), "D E").unwrap();
        assert_eq!(names(&enabled_concurrences(&net, &m, None).unwrap()), ["1"]);
        let f = fire_concurrence(&net, &m, &Multiset::unit(net.transitions())).unwrap();
        assert_eq!(f.marking, m);
        assert!(f.consumed.is_unit() && f.produced.is_unit());
    }

    #[test]
    fn not_enabled_is_reported() {
        let net = example_net();
        let m = Multiset::parse(net.places(), "A B").unwrap();
        let t = Multiset::parse(net.transitions(), "b").unwrap();
        assert!(matches!(
            fire_concurrence(&net, &m, &t),
            Err(QpnError::NotEnabled { .. })
        ));
    }

    #[test]
    fn empty_preset_needs_cap() {
        let net = NetStructure::from_monomials(&["p"], &[("gen", "1", "p")]).unwrap();
        let m = Multiset::unit(net.places());
        assert!(matches!(
            enabled_concurrences(&net, &m, None),
            Err(QpnError::UnboundedConcurrence(_))
        ));
        let cs = enabled_concurrences(&net, &m, Some(3)).unwrap();
        assert_eq!(names(&cs), ["1", "gen", "gen^2", "gen^3"]);
    }

    /// Brute-force oracle: every exponent vector up to the cap, filtered by
    /// the lifted-flow condition.
    fn brute_force(net: &NetStructure, m: &Multiset, cap: u64) -> Vec<Multiset> {
        let nt = net.transitions().len();
        let mut out = Vec::new();
        let total = (cap + 1).pow(nt as u32);
        for code in 0..total {
            let mut c = code;
            let exps: Vec<u64> = (0..nt)
                .map(|_| {
                    let e = c % (cap + 1);
                    c /= cap + 1;
                    e
                })
                .collect();
            if exps.iter().sum::<u64>() > cap {
                continue;
            }
            let t = Multiset::from_exponents(net.transitions(), exps).unwrap();
            if is_enabled(net, m, &t).unwrap() {
                out.push(t);
            }
        }
        out.sort_by(concurrence_cmp);
        out
    }

    #[test]
    fn dfs_matches_brute_force() {
        let net = example_net();
        for text in ["A^4 B^6 C^3 E^2", "A B^2 C", "A^2 B^3", "C^2"] {
            let m = Multiset::parse(net.places(), text).unwrap();
            let cap = m.cardinality();
            assert_eq!(
                enabled_concurrences(&net, &m, None).unwrap(),
                brute_force(&net, &m, cap),
                "{text}"
            );
        }
    }

    #[test]
    fn two_qubit_rate_graph() {
        let sys = two_bits();
        let rg = explore(&sys, 100).unwrap();
        let g = build_rate_graph(&sys, &rg, None).unwrap();
        assert_eq!(g.space().len(), 4);
        assert_eq!(g.non_unit_edges().count(), 12);
        assert_eq!(g.edges().len(), 16);
    }

    #[test]
    fn bit_rate_graph() {
        let sys = bit();
        let rg = explore(&sys, 100).unwrap();
        let g = build_rate_graph(&sys, &rg, None).unwrap();
        let listed: Vec<(usize, String, usize)> = g
            .edges()
            .iter()
            .map(|e| (e.src, e.concurrence.to_string(), e.dst))
            .collect();
        assert_eq!(
            listed,
            [
                (0, "1".into(), 0),
                (0, "u".into(), 1),
                (1, "d".into(), 0),
                (1, "1".into(), 1)
            ]
        );
    }

    #[test]
    fn double_slit_has_no_multi_transition_concurrence() {
        let sys = double_slit();
        let rg = explore(&sys, 100).unwrap();
        let g = build_rate_graph(&sys, &rg, None).unwrap();
        assert!(g.edges().iter().all(|e| e.concurrence.cardinality() <= 1));
    }

    #[test]
    fn single_transition_edges_reproduce_rg() {
        for sys in [bit(), two_bits(), double_slit()] {
            let rg = explore(&sys, 100).unwrap();
            let g = build_rate_graph(&sys, &rg, None).unwrap();
            let mut singles: Vec<(usize, usize, usize)> = g
                .edges()
                .iter()
                .filter(|e| e.concurrence.cardinality() == 1)
                .map(|e| (e.src, e.concurrence.support().next().unwrap(), e.dst))
                .collect();
            singles.sort();
            let expected: Vec<_> = rg.edges().iter().map(|e| (e.src, e.transition, e.dst)).collect();
            assert_eq!(singles, expected);
        }
    }
}
