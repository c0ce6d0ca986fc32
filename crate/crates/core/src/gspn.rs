//! Generalized stochastic Petri nets: inhibitor arcs, prioritised immediate
//! transitions, vanishing-marking elimination, absorption probabilities and
//! seeded token-game simulation.

use std::collections::{BTreeMap, HashMap};
use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use petgraph::algo::tarjan_scc;
use petgraph::graph::DiGraph;
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{QpnError, Result};
use crate::multiset::Multiset;
use crate::net::{explore, NetStructure, ReachabilityGraph, StateSpace, SystemNet, WellFormedness};
use crate::quantum::{MarkingPattern, Qpn, RateFunction, RateRule};

/// Inhibition and priority gating as a well-formedness predicate.
#[derive(Debug, Clone)]
pub struct GspnPolicy {
    /// `H(t)`; the unit multiset means no inhibitor arc.
    inhibit: Vec<Multiset>,
    priority: Vec<u32>,
}

impl GspnPolicy {
    pub fn inhibitor(&self, t: usize) -> &Multiset {
        &self.inhibit[t]
    }

    pub fn priority(&self, t: usize) -> u32 {
        self.priority[t]
    }

    /// `H(t) <= m` for a transition with at least one inhibitor arc.
    pub fn inhibited(&self, m: &Multiset, t: usize) -> bool {
        let h = &self.inhibit[t];
        !h.is_unit() && h.le(m)
    }

    /// Highest priority among flow-enabled, uninhibited transitions; 0 if none.
    pub fn live_priority(&self, net: &NetStructure, m: &Multiset) -> u32 {
        (0..self.priority.len())
            .filter(|&t| net.flow_enabled(m, t) && !self.inhibited(m, t))
            .map(|t| self.priority[t])
            .max()
            .unwrap_or(0)
    }
}

impl WellFormedness for GspnPolicy {
    fn may_enable(&self, net: &NetStructure, marking: &Multiset, concurrence: &Multiset) -> bool {
        if concurrence.is_unit() {
            return true;
        }
        let top = self.live_priority(net, marking);
        concurrence
            .support()
            .all(|t| !self.inhibited(marking, t) && self.priority[t] == top)
    }

    fn name(&self) -> &'static str {
        "gspn"
    }

    fn as_any(&self) -> &dyn std::any::Any {
        self
    }
}

/// System net with inhibitors, priorities (0 = timed) and positive weights.
#[derive(Debug, Clone)]
pub struct GspnNet {
    /// Carries a `GspnPolicy` as its well-formedness predicate.
    pub sys: SystemNet,
    policy: GspnPolicy,
    weight: Vec<f64>,
    pub constants: BTreeMap<String, f64>,
}

impl GspnNet {
    /// All transitions timed with weight 1 and no inhibitors.
    pub fn new(sys: SystemNet) -> Result<Self> {
        let nt = sys.transitions().len();
        let policy = GspnPolicy {
            inhibit: vec![Multiset::unit(sys.places()); nt],
            priority: vec![0; nt],
        };
        GspnNet {
            sys,
            policy,
            weight: vec![1.0; nt],
            constants: BTreeMap::new(),
        }
        .install()
    }

    fn install(mut self) -> Result<Self> {
        let net = self.sys.net.clone().with_wf(Arc::new(self.policy.clone()));
        self.sys = SystemNet::new(net, self.sys.m0.clone())?;
        Ok(self)
    }

    pub fn inhibit(mut self, t: &str, h: Multiset) -> Result<Self> {
        let i = self.sys.net.transition_index(t)?;
        if **h.universe() != **self.sys.places() {
            return Err(QpnError::UniverseMismatch);
        }
        self.policy.inhibit[i] = h;
        self.install()
    }

    pub fn priority(mut self, t: &str, pi: u32) -> Result<Self> {
        let i = self.sys.net.transition_index(t)?;
        self.policy.priority[i] = pi;
        self.install()
    }

    pub fn weight(mut self, t: &str, w: f64) -> Result<Self> {
        let i = self.sys.net.transition_index(t)?;
        if !(w.is_finite() && w > 0.0) {
            return Err(QpnError::InvalidRate(format!(
                "weight of `{t}` must be positive and finite, got {w}"
            )));
        }
        self.weight[i] = w;
        Ok(self)
    }

    pub fn inhibitor_of(&self, t: usize) -> &Multiset {
        &self.policy.inhibit[t]
    }

    pub fn priority_of(&self, t: usize) -> u32 {
        self.policy.priority[t]
    }

    pub fn weight_of(&self, t: usize) -> f64 {
        self.weight[t]
    }

    pub fn is_immediate(&self, t: usize) -> bool {
        self.policy.priority[t] > 0
    }

    pub fn policy(&self) -> &GspnPolicy {
        &self.policy
    }

    /// A marking enabling an immediate transition.
    pub fn is_vanishing(&self, m: &Multiset) -> bool {
        gspn_enabled(self, m).iter().any(|&t| self.is_immediate(t))
    }

    /// Reachability graph including vanishing markings.
    pub fn explore(&self, cap: usize) -> Result<ReachabilityGraph> {
        explore(&self.sys, cap)
    }
}

/// Flow-enabled transitions, minus inhibited ones, gated to the highest
/// live priority.
pub fn gspn_enabled(g: &GspnNet, m: &Multiset) -> Vec<usize> {
    let net = &g.sys.net;
    let top = g.policy.live_priority(net, m);
    (0..g.weight.len())
        .filter(|&t| net.flow_enabled(m, t) && !g.policy.inhibited(m, t) && g.policy.priority[t] == top)
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightedEdge {
    pub src: usize,
    pub dst: usize,
    pub weight: f64,
}

/// Tangible reachability graph with vanishing paths folded into the weights.
#[derive(Debug, Clone)]
pub struct ReducedGraph {
    pub space: Arc<StateSpace>,
    /// Distribution over tangible markings reached from `m0`.
    pub initial: Vec<(usize, f64)>,
    /// Sorted by `(src, dst)`, one edge per pair.
    pub edges: Vec<WeightedEdge>,
}

impl ReducedGraph {
    pub fn out_weight(&self, v: usize) -> f64 {
        self.edges.iter().filter(|e| e.src == v).map(|e| e.weight).sum()
    }

    /// Embedded chain `P[src, dst]` with L1-normalised rows; a marking
    /// without successors absorbs.
    pub fn transition_matrix(&self) -> DMatrix<f64> {
        let n = self.space.len();
        let mut p = DMatrix::zeros(n, n);
        for e in &self.edges {
            p[(e.src, e.dst)] += e.weight;
        }
        for v in 0..n {
            let total: f64 = p.row(v).sum();
            if total == 0.0 {
                p[(v, v)] = 1.0;
            } else {
                p.row_mut(v).scale_mut(1.0 / total);
            }
        }
        p
    }
}

/// Contracts every path through vanishing markings. Branches out of a
/// vanishing marking are L1-normalised over its enabled immediates; timed
/// edges keep their weights, distributed over the tangible end points.
pub fn eliminate_vanishing(g: &GspnNet, rg: &ReachabilityGraph) -> Result<ReducedGraph> {
    let space = rg.space();
    let n = space.len();
    let vanishing: Vec<bool> = space.markings().iter().map(|m| g.is_vanishing(m)).collect();
    let mut out: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    for e in rg.edges() {
        out[e.src].push((e.dst, g.weight[e.transition]));
    }

    // Kahn order over the vanishing subgraph; leftovers lie on a cycle.
    let mut indeg = vec![0usize; n];
    for v in (0..n).filter(|&v| vanishing[v]) {
        for &(x, _) in &out[v] {
            if vanishing[x] {
                indeg[x] += 1;
            }
        }
    }
    let mut order: Vec<usize> = (0..n).filter(|&v| vanishing[v] && indeg[v] == 0).collect();
    let mut head = 0;
    while head < order.len() {
        let v = order[head];
        head += 1;
        for &(x, _) in &out[v] {
            if vanishing[x] {
                indeg[x] -= 1;
                if indeg[x] == 0 {
                    order.push(x);
                }
            }
        }
    }
    let total_vanishing = vanishing.iter().filter(|&&v| v).count();
    if order.len() < total_vanishing {
        let stuck = (0..n).find(|&v| vanishing[v] && indeg[v] > 0).expect("cycle member");
        return Err(QpnError::VanishingCycle(space.marking(stuck).to_string()));
    }

    // tangible distribution of every vanishing marking, successors first
    let mut reach: HashMap<usize, BTreeMap<usize, f64>> = HashMap::new();
    for &v in order.iter().rev() {
        let total: f64 = out[v].iter().map(|&(_, w)| w).sum();
        let mut dist = BTreeMap::new();
        for &(x, w) in &out[v] {
            let p = w / total;
            if vanishing[x] {
                for (&y, &q) in &reach[&x] {
                    *dist.entry(y).or_insert(0.0) += p * q;
                }
            } else {
                *dist.entry(x).or_insert(0.0) += p;
            }
        }
        reach.insert(v, dist);
    }

    let tangible: Vec<usize> = (0..n).filter(|&v| !vanishing[v]).collect();
    let index: HashMap<usize, usize> = tangible.iter().enumerate().map(|(i, &v)| (v, i)).collect();
    let mut merged: BTreeMap<(usize, usize), f64> = BTreeMap::new();
    for &v in &tangible {
        for &(x, w) in &out[v] {
            if vanishing[x] {
                for (&y, &q) in &reach[&x] {
                    *merged.entry((index[&v], index[&y])).or_insert(0.0) += w * q;
                }
            } else {
                *merged.entry((index[&v], index[&x])).or_insert(0.0) += w;
            }
        }
    }
    let m0 = rg.initial();
    let initial = if vanishing[m0] {
        reach[&m0].iter().map(|(&y, &q)| (index[&y], q)).collect()
    } else {
        vec![(index[&m0], 1.0)]
    };
    let reduced_space = StateSpace::new(
        Arc::clone(space.places()),
        tangible.iter().map(|&v| space.marking(v).clone()).collect(),
    )?;
    Ok(ReducedGraph {
        space: Arc::new(reduced_space),
        initial,
        edges: merged
            .into_iter()
            .map(|((src, dst), weight)| WeightedEdge { src, dst, weight })
            .collect(),
    })
}

#[derive(Debug, Clone)]
pub struct AbsorbingClass {
    /// Closed communicating class, in canonical order.
    pub markings: Vec<Multiset>,
    pub probability: f64,
}

/// Absorption probabilities into each closed class of the embedded chain,
/// starting from the reduced initial distribution. Classes are ordered by
/// their first marking.
pub fn solve_absorption(reduced: &ReducedGraph) -> Result<Vec<AbsorbingClass>> {
    let n = reduced.space.len();
    let mut graph = DiGraph::<(), ()>::with_capacity(n, reduced.edges.len());
    let nodes: Vec<_> = (0..n).map(|_| graph.add_node(())).collect();
    for e in reduced.edges.iter().filter(|e| e.weight > 0.0) {
        graph.add_edge(nodes[e.src], nodes[e.dst], ());
    }
    let mut class_of = vec![usize::MAX; n];
    let mut classes: Vec<Vec<usize>> = Vec::new();
    for scc in tarjan_scc(&graph) {
        let members: Vec<usize> = scc.iter().map(|x| x.index()).collect();
        let closed = reduced
            .edges
            .iter()
            .filter(|e| e.weight > 0.0 && members.contains(&e.src))
            .all(|e| members.contains(&e.dst));
        if closed {
            let mut members = members;
            members.sort_unstable();
            classes.push(members);
        }
    }
    classes.sort();
    for (k, members) in classes.iter().enumerate() {
        for &v in members {
            class_of[v] = k;
        }
    }

    let p = reduced.transition_matrix();
    let transient: Vec<usize> = (0..n).filter(|&v| class_of[v] == usize::MAX).collect();
    let pos: HashMap<usize, usize> = transient.iter().enumerate().map(|(i, &v)| (v, i)).collect();
    let nt = transient.len();
    let k = classes.len();
    let mut a = DMatrix::<f64>::identity(nt, nt);
    let mut b = DMatrix::<f64>::zeros(nt, k);
    for (i, &v) in transient.iter().enumerate() {
        for w in 0..n {
            let pvw = p[(v, w)];
            if pvw == 0.0 {
                continue;
            }
            match pos.get(&w) {
                Some(&j) => a[(i, j)] -= pvw,
                None => b[(i, class_of[w])] += pvw,
            }
        }
    }
    let h = if nt == 0 {
        b
    } else {
        a.lu()
            .solve(&b)
            .ok_or_else(|| QpnError::Singular(format!("absorption system over {nt} transient markings")))?
    };

    let mut prob = vec![0.0; k];
    for &(v, q) in &reduced.initial {
        match pos.get(&v) {
            Some(&i) => {
                for c in 0..k {
                    prob[c] += q * h[(i, c)];
                }
            }
            None => prob[class_of[v]] += q,
        }
    }
    Ok(classes
        .into_iter()
        .zip(prob)
        .map(|(members, probability)| AbsorbingClass {
            markings: members.iter().map(|&v| reduced.space.marking(v).clone()).collect(),
            probability,
        })
        .collect())
}

#[derive(Debug, Clone)]
pub struct SimulationReport {
    pub seed: u64,
    pub replications: u64,
    pub steps: u64,
    /// Final markings with their counts, in canonical order.
    pub counts: Vec<(Multiset, u64)>,
}

impl SimulationReport {
    pub fn frequency(&self, m: &Multiset) -> f64 {
        let hits = self.counts.iter().find(|(x, _)| x == m).map_or(0, |&(_, c)| c);
        hits as f64 / self.replications as f64
    }
}

/// Successor markings of the enabled transitions and their weight distribution.
type Choice = (Vec<Multiset>, WeightedIndex<f64>);

/// Token game: each replication starts at `m0` on ChaCha stream `rep` of
/// `seed` and fires up to `steps` transitions chosen with probability
/// proportional to weight among `gspn_enabled`. A run stops early once
/// only self-loops remain enabled.
pub fn simulate(g: &GspnNet, steps: u64, seed: u64, replications: u64) -> Result<SimulationReport> {
    let net = &g.sys.net;
    let mut counts: HashMap<Multiset, u64> = HashMap::new();
    // `None` marks a state where only self-loops are enabled
    let mut choices: HashMap<Multiset, Option<Choice>> = HashMap::new();
    for rep in 0..replications {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(rep);
        let mut m = g.sys.m0.clone();
        for _ in 0..steps {
            if !choices.contains_key(&m) {
                let enabled = gspn_enabled(g, &m);
                let choice = if enabled.iter().all(|&t| net.input(t) == net.output(t)) {
                    None
                } else {
                    let next = enabled
                        .iter()
                        .map(|&t| net.fire_single(&m, t))
                        .collect::<Result<Vec<_>>>()?;
                    let weights: Vec<f64> = enabled.iter().map(|&t| g.weight[t]).collect();
                    Some((next, WeightedIndex::new(&weights).expect("positive weights")))
                };
                choices.insert(m.clone(), choice);
            }
            let Some((next, pick)) = &choices[&m] else { break };
            m = next[pick.sample(&mut rng)].clone();
        }
        *counts.entry(m).or_insert(0) += 1;
    }
    let mut counts: Vec<(Multiset, u64)> = counts.into_iter().collect();
    counts.sort_by(|a, b| a.0.canonical_cmp(&b.0));
    Ok(SimulationReport {
        seed,
        replications,
        steps,
        counts,
    })
}

/// QPN with `r_m(t) = weight(t)` on single transitions and 0 on resting
/// and on multi-transition concurrences. The GSPN predicate carries over.
pub fn to_qpn(g: &GspnNet) -> Result<Qpn> {
    let ts = g.sys.transitions();
    let mut rate = RateFunction::constant(Complex64::new(0.0, 0.0));
    for (t, &w) in g.weight.iter().enumerate() {
        rate.rules.push(RateRule::new(
            MarkingPattern::any(),
            Multiset::element(ts, t),
            Complex64::new(w, 0.0),
        ));
    }
    let mut q = Qpn::new(g.sys.clone(), rate)?;
    q.max_card = Some(1);
    Ok(q)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::builtin;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    fn probability_of(classes: &[AbsorbingClass], name: &str) -> f64 {
        classes
            .iter()
            .find(|c| c.markings.len() == 1 && c.markings[0].to_string() == name)
            .map_or(0.0, |c| c.probability)
    }

    #[test]
    fn double_slit_absorption() {
        let g = builtin::double_slit_spn().unwrap();
        let rg = g.explore(1000).unwrap();
        let reduced = eliminate_vanishing(&g, &rg).unwrap();
        let classes = solve_absorption(&reduced).unwrap();
        assert_eq!(classes.len(), 5);
        for (name, p) in [
            ("A", 1.0 / 6.0),
            ("B", 1.0 / 6.0),
            ("C", 1.0 / 3.0),
            ("D", 1.0 / 6.0),
            ("E", 1.0 / 6.0),
        ] {
            assert!(close(probability_of(&classes, name), p, 1e-12), "{name}");
        }
        let total: f64 = classes.iter().map(|c| c.probability).sum();
        assert!(close(total, 1.0, 1e-12));
    }

    #[test]
    fn double_slit_simulation_within_three_sigma() {
        let g = builtin::double_slit_spn().unwrap();
        let n = 100_000;
        let report = simulate(&g, 100, 7, n).unwrap();
        let c = Multiset::parse(g.sys.places(), "C").unwrap();
        let sigma = (1.0 / 3.0 * 2.0 / 3.0 / n as f64).sqrt();
        assert!((report.frequency(&c) - 1.0 / 3.0).abs() < 3.0 * sigma);
        let again = simulate(&g, 100, 7, n).unwrap();
        assert_eq!(report.counts, again.counts);
    }

    #[test]
    fn inhibitor_blocks_when_covered() {
        let net = NetStructure::from_monomials(&["A", "E"], &[("e", "A", "E")]).unwrap();
        let m0 = Multiset::parse(net.places(), "A^2").unwrap();
        let sys = SystemNet::new(net, m0).unwrap();
        let h = Multiset::parse(sys.places(), "E").unwrap();
        let g = GspnNet::new(sys).unwrap().inhibit("e", h).unwrap();
        let m = |s: &str| Multiset::parse(g.sys.places(), s).unwrap();
        assert_eq!(gspn_enabled(&g, &m("A^2")), [0]);
        assert!(gspn_enabled(&g, &m("A E")).is_empty());
        // the inhibitor caps E at one token
        let rg = g.explore(10).unwrap();
        assert_eq!(rg.space().len(), 2);
    }

    #[test]
    fn priority_gating() {
        let net = NetStructure::from_monomials(
            &["A", "B", "C", "D"],
            &[("t", "A", "B"), ("i1", "A", "C"), ("i2", "A", "D")],
        )
        .unwrap();
        let m0 = Multiset::parse(net.places(), "A").unwrap();
        let sys = SystemNet::new(net, m0).unwrap();
        let timed_only = GspnNet::new(sys.clone()).unwrap();
        assert_eq!(gspn_enabled(&timed_only, &sys.m0), [0, 1, 2]);
        let g = GspnNet::new(sys)
            .unwrap()
            .priority("i1", 1)
            .unwrap()
            .priority("i2", 2)
            .unwrap();
        assert_eq!(gspn_enabled(&g, &g.sys.m0), [2]);
        assert!(g.is_vanishing(&g.sys.m0));
        // the predicate also gates the classical and quantum layers
        assert!(!g.sys.net.is_enabled(&g.sys.m0, 0));
        assert!(!g.sys.net.is_enabled(&g.sys.m0, 1));
    }

    #[test]
    fn vanishing_branch_folds_weights() {
        let g = builtin::branching_gspn().unwrap();
        let rg = g.explore(100).unwrap();
        let reduced = eliminate_vanishing(&g, &rg).unwrap();
        assert_eq!(reduced.space.len(), 3);
        let src = reduced.space.index_of(&g.sys.m0).unwrap();
        let p = reduced.transition_matrix();
        let m = |s: &str| {
            reduced
                .space
                .index_of(&Multiset::parse(g.sys.places(), s).unwrap())
                .unwrap()
        };
        assert!(close(p[(src, m("C"))], 0.25, 1e-15));
        assert!(close(p[(src, m("D"))], 0.75, 1e-15));
        assert!(close(reduced.out_weight(src), 2.0, 1e-15));
        for v in 0..reduced.space.len() {
            assert!(close(p.row(v).sum(), 1.0, 1e-12));
        }
    }

    #[test]
    fn immediate_chain_contracts() {
        let net = NetStructure::from_monomials(&["A", "B", "C"], &[("a", "A", "B"), ("b", "B", "C")]).unwrap();
        let m0 = Multiset::parse(net.places(), "A").unwrap();
        let g = GspnNet::new(SystemNet::new(net, m0).unwrap())
            .unwrap()
            .weight("a", 3.0)
            .unwrap()
            .priority("b", 1)
            .unwrap();
        let reduced = eliminate_vanishing(&g, &g.explore(10).unwrap()).unwrap();
        assert_eq!(reduced.space.len(), 2);
        assert_eq!(reduced.edges.len(), 1);
        assert!(close(reduced.edges[0].weight, 3.0, 0.0));
        let classes = solve_absorption(&reduced).unwrap();
        assert_eq!(classes.len(), 1);
        assert!(close(classes[0].probability, 1.0, 1e-15));
    }

    #[test]
    fn vanishing_initial_marking_is_distributed() {
        let net = NetStructure::from_monomials(&["A", "B", "C"], &[("b", "A", "B"), ("c", "A", "C")]).unwrap();
        let m0 = Multiset::parse(net.places(), "A").unwrap();
        let g = GspnNet::new(SystemNet::new(net, m0).unwrap())
            .unwrap()
            .priority("b", 1)
            .unwrap()
            .priority("c", 1)
            .unwrap();
        let reduced = eliminate_vanishing(&g, &g.explore(10).unwrap()).unwrap();
        let classes = solve_absorption(&reduced).unwrap();
        assert_eq!(classes.len(), 2);
        for c in &classes {
            assert!(close(c.probability, 0.5, 1e-15));
        }
    }

    #[test]
    fn vanishing_cycle_is_rejected() {
        let net = NetStructure::from_monomials(&["A", "B"], &[("x", "A", "B"), ("y", "B", "A")]).unwrap();
        let m0 = Multiset::parse(net.places(), "A").unwrap();
        let g = GspnNet::new(SystemNet::new(net, m0).unwrap())
            .unwrap()
            .priority("x", 1)
            .unwrap()
            .priority("y", 1)
            .unwrap();
        let err = eliminate_vanishing(&g, &g.explore(10).unwrap()).unwrap_err();
        assert!(matches!(err, QpnError::VanishingCycle(_)));
    }

    #[test]
    fn deterministic_chain_trajectory() {
        let net = NetStructure::from_monomials(&["A", "B", "C"], &[("a", "A", "B"), ("b", "B", "C")]).unwrap();
        let m0 = Multiset::parse(net.places(), "A").unwrap();
        let g = GspnNet::new(SystemNet::new(net, m0).unwrap()).unwrap();
        let r = simulate(&g, 1, 0, 5).unwrap();
        assert_eq!(r.counts.len(), 1);
        assert_eq!(r.counts[0].0.to_string(), "B");
        let r = simulate(&g, 10, 0, 5).unwrap();
        assert_eq!(r.counts[0], (Multiset::parse(g.sys.places(), "C").unwrap(), 5));
    }

    #[test]
    fn phase_example_is_bounded_with_two_invariants_each() {
        use crate::net::{semiflows, SemiflowKind};
        let g = builtin::phase_gspn().unwrap();
        let rg = g.explore(100_000).unwrap();
        let reduced = eliminate_vanishing(&g, &rg).unwrap();
        assert!(reduced.space.len() < rg.space().len());
        assert_eq!(semiflows(&g.sys.net, SemiflowKind::Place).len(), 2);
        assert_eq!(semiflows(&g.sys.net, SemiflowKind::Transition).len(), 2);
        let p = reduced.transition_matrix();
        for v in 0..reduced.space.len() {
            assert!(close(p.row(v).sum(), 1.0, 1e-12));
        }
        let classes = solve_absorption(&reduced).unwrap();
        let total: f64 = classes.iter().map(|c| c.probability).sum();
        assert!(close(total, 1.0, 1e-9));
    }

    #[test]
    fn timed_gspn_is_a_real_qpn() {
        let g = builtin::double_slit_spn().unwrap();
        let q = to_qpn(&g).unwrap();
        let r = q.rate_matrix(1000).unwrap().into_matrix();
        let reduced = eliminate_vanishing(&g, &g.explore(1000).unwrap()).unwrap();
        let p = reduced.transition_matrix();
        // column-normalised R is the transpose of the embedded chain
        for src in 0..r.ncols() {
            let total: f64 = r.column(src).iter().map(|z| z.norm()).sum();
            for dst in 0..r.nrows() {
                assert!(r[(dst, src)].im == 0.0 && r[(dst, src)].re >= 0.0);
                assert!(close(r[(dst, src)].re / total, p[(src, dst)], 1e-15));
            }
        }
    }

    #[test]
    fn quantum_rates_run_under_the_gspn_predicate() {
        let g = builtin::branching_gspn().unwrap();
        let rate = RateFunction::constant(Complex64::new(0.0, 1.0));
        let q = Qpn::new(g.sys.clone(), rate).unwrap();
        let rated = q.rated_graph(100).unwrap();
        let vanishing = rated.space().markings().iter().position(|m| g.is_vanishing(m)).unwrap();
        // only the immediate branches and resting leave the vanishing marking
        let labels: Vec<&str> = rated
            .edges()
            .iter()
            .filter(|e| e.src == vanishing)
            .map(|e| e.label.as_str())
            .collect();
        assert_eq!(labels, ["1", "c", "d"]);
    }
}
