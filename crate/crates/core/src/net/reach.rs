use std::collections::{HashMap, VecDeque};
use std::sync::Arc;

use super::SystemNet;
use crate::error::{QpnError, Result};
use crate::multiset::{Multiset, Universe};

pub const DEFAULT_STATE_CAP: usize = 1_000_000;

/// Reachable markings in canonical order with a lookup index.
#[derive(Debug, Clone)]
pub struct StateSpace {
    places: Arc<Universe>,
    markings: Vec<Multiset>,
    index: HashMap<Multiset, usize>,
}

impl StateSpace {
    /// Sorts `markings` into canonical order and drops duplicates.
    pub fn new(places: Arc<Universe>, mut markings: Vec<Multiset>) -> Result<Self> {
        if markings.iter().any(|m| **m.universe() != *places) {
            return Err(QpnError::UniverseMismatch);
        }
        markings.sort_by(|a, b| a.canonical_cmp(b));
        markings.dedup();
        let index = markings.iter().enumerate().map(|(i, m)| (m.clone(), i)).collect();
        Ok(StateSpace {
            places,
            markings,
            index,
        })
    }

    pub fn places(&self) -> &Arc<Universe> {
        &self.places
    }

    pub fn markings(&self) -> &[Multiset] {
        &self.markings
    }

    pub fn marking(&self, i: usize) -> &Multiset {
        &self.markings[i]
    }

    pub fn index_of(&self, m: &Multiset) -> Option<usize> {
        self.index.get(m).copied()
    }

    pub fn len(&self) -> usize {
        self.markings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.markings.is_empty()
    }

    /// Same places (by name and order) and the same reachable markings.
    pub fn same_shape(&self, other: &StateSpace) -> bool {
        *self.places == *other.places
            && self.markings.len() == other.markings.len()
            && self
                .markings
                .iter()
                .zip(&other.markings)
                .all(|(a, b)| a.exponents() == b.exponents())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RgEdge {
    pub src: usize,
    pub transition: usize,
    pub dst: usize,
}

/// Single-transition reachability multigraph over the reachability set.
#[derive(Debug, Clone)]
pub struct ReachabilityGraph {
    space: Arc<StateSpace>,
    transitions: Arc<Universe>,
    edges: Vec<RgEdge>,
    initial: usize,
}

impl ReachabilityGraph {
    pub fn space(&self) -> &Arc<StateSpace> {
        &self.space
    }

    pub fn transitions(&self) -> &Arc<Universe> {
        &self.transitions
    }

    /// Edges sorted by `(src, transition, dst)`.
    pub fn edges(&self) -> &[RgEdge] {
        &self.edges
    }

    /// Index of the initial marking.
    pub fn initial(&self) -> usize {
        self.initial
    }
}

/// Breadth-first closure of single-transition reachability from `m0`.
/// Fails rather than truncating when more than `max_states` markings appear.
pub fn explore(sys: &SystemNet, max_states: usize) -> Result<ReachabilityGraph> {
    let net = &sys.net;
    let nt = net.transitions().len();
    let mut seen: HashMap<Multiset, usize> = HashMap::new();
    let mut order: Vec<Multiset> = Vec::new();
    let mut raw_edges: Vec<(usize, usize, usize)> = Vec::new();
    let mut queue = VecDeque::new();

    seen.insert(sys.m0.clone(), 0);
    order.push(sys.m0.clone());
    queue.push_back(0usize);
    if max_states == 0 {
        return Err(QpnError::StateCapExceeded { cap: max_states });
    }

    while let Some(i) = queue.pop_front() {
        let m = order[i].clone();
        for t in 0..nt {
            if !net.is_enabled(&m, t) {
                continue;
            }
            let next = net.fire_single(&m, t)?;
            let j = match seen.get(&next) {
                Some(&j) => j,
                None => {
                    if order.len() >= max_states {
                        return Err(QpnError::StateCapExceeded { cap: max_states });
                    }
                    let j = order.len();
                    seen.insert(next.clone(), j);
                    order.push(next);
                    queue.push_back(j);
                    j
                }
            };
            raw_edges.push((i, t, j));
        }
    }

    let space = StateSpace::new(Arc::clone(net.places()), order.clone())?;
    let remap: Vec<usize> = order
        .iter()
        .map(|m| space.index_of(m).expect("marking present"))
        .collect();
    let mut edges: Vec<RgEdge> = raw_edges
        .into_iter()
        .map(|(s, t, d)| RgEdge {
            src: remap[s],
            transition: t,
            dst: remap[d],
        })
        .collect();
    edges.sort();
    Ok(ReachabilityGraph {
        initial: remap[0],
        space: Arc::new(space),
        transitions: Arc::clone(net.transitions()),
        edges,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::net::fixtures::*;
    use crate::net::NetStructure;

    #[test]
    fn two_bits_reachability() {
        let sys = two_bits();
        let rg = explore(&sys, 100).unwrap();
        let labels: Vec<String> = rg.space().markings().iter().map(|m| m.to_string()).collect();
        assert_eq!(labels, ["P0 Q0", "P0 Q1", "P1 Q0", "P1 Q1"]);
        assert_eq!(rg.edges().len(), 8);
        assert_eq!(rg.initial(), 0);
    }

    #[test]
    fn double_slit_reachability() {
        let sys = double_slit();
        let rg = explore(&sys, 100).unwrap();
        let labels: Vec<String> = rg.space().markings().iter().map(|m| m.to_string()).collect();
        assert_eq!(labels, ["G", "L", "R", "A", "B", "C", "D", "E"]);
        // l, r, three scatterings per slit, five detector loops
        assert_eq!(rg.edges().len(), 2 + 6 + 5);
    }

    #[test]
    fn unbounded_net_hits_cap() {
        let p = Universe::new(["p"]).unwrap();
        let t = Universe::new(["gen"]).unwrap();
        let net = NetStructure::new(
            Arc::clone(&p),
            t,
            vec![Multiset::unit(&p)],
            vec![Multiset::parse(&p, "p").unwrap()],
        )
        .unwrap();
        let sys = SystemNet::new(net, Multiset::unit(&p)).unwrap();
        assert!(matches!(explore(&sys, 5), Err(QpnError::StateCapExceeded { cap: 5 })));
    }

    #[test]
    fn every_edge_is_a_firing() {
        for sys in [two_bits(), double_slit(), bit()] {
            let rg = explore(&sys, 100).unwrap();
            for e in rg.edges() {
                let m = rg.space().marking(e.src);
                assert_eq!(
                    &sys.net.fire_single(m, e.transition).unwrap(),
                    rg.space().marking(e.dst)
                );
            }
        }
    }
}
