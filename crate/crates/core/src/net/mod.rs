//! Classical Petri net structures: flows, enabling and firing, structural
//! properties, reachability exploration, semiflows and equivalence checks.

mod equivalence;
mod reach;
mod semiflow;

pub use equivalence::{check_equivalence, graph_isomorphic, Equivalence, PlaceBijection};
pub use reach::{explore, ReachabilityGraph, RgEdge, StateSpace, DEFAULT_STATE_CAP};
pub use semiflow::{semiflows, SemiflowKind};

use std::any::Any;
use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use crate::error::{QpnError, Result};
use crate::multiset::{Multiset, Universe};

/// Well-formedness predicate deciding whether a marking may enable a
/// concurrence. Guards, inhibitors and priorities plug in here.
pub trait WellFormedness: fmt::Debug + Send + Sync {
    fn may_enable(&self, net: &NetStructure, marking: &Multiset, concurrence: &Multiset) -> bool;

    /// Short name used in diagnostics and serialization.
    fn name(&self) -> &'static str;

    /// Downcasting hook for serializers of concrete predicates.
    fn as_any(&self) -> &dyn Any;
}

#[derive(Debug, Clone, Copy, Default)]
pub struct AlwaysWellFormed;

impl WellFormedness for AlwaysWellFormed {
    fn may_enable(&self, _: &NetStructure, _: &Multiset, _: &Multiset) -> bool {
        true
    }

    fn name(&self) -> &'static str {
        "true"
    }

    fn as_any(&self) -> &dyn Any {
        self
    }
}

/// Unmarked net structure `(P, T, F)` with a well-formedness predicate.
#[derive(Clone)]
pub struct NetStructure {
    places: Arc<Universe>,
    transitions: Arc<Universe>,
    pre: Vec<Multiset>,
    post: Vec<Multiset>,
    wf: Arc<dyn WellFormedness>,
}

impl fmt::Debug for NetStructure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("NetStructure")
            .field("places", &self.places.names())
            .field("transitions", &self.transitions.names())
            .field("wf", &self.wf.name())
            .finish()
    }
}

impl NetStructure {
    /// Builds a net from `(transition, input, output)` flows given in
    /// monomial or programmatic form. Places and transitions must be
    /// disjoint and every transition must touch at least one place.
    pub fn new(
        places: Arc<Universe>,
        transitions: Arc<Universe>,
        pre: Vec<Multiset>,
        post: Vec<Multiset>,
    ) -> Result<Self> {
        if pre.len() != transitions.len() || post.len() != transitions.len() {
            return Err(QpnError::InvalidNet(
                "one input and one output per transition required".into(),
            ));
        }
        for t in transitions.names() {
            if places.contains(t) {
                return Err(QpnError::InvalidNet(format!("`{t}` is both a place and a transition")));
            }
        }
        for (i, (a, b)) in pre.iter().zip(&post).enumerate() {
            if **a.universe() != *places || **b.universe() != *places {
                return Err(QpnError::UniverseMismatch);
            }
            if a.is_unit() && b.is_unit() {
                return Err(QpnError::InvalidNet(format!(
                    "transition `{}` has empty preset and postset",
                    transitions.name(i)
                )));
            }
        }
        Ok(NetStructure {
            places,
            transitions,
            pre,
            post,
            wf: Arc::new(AlwaysWellFormed),
        })
    }

    /// Convenience constructor from monomial strings.
    pub fn from_monomials(places: &[&str], flows: &[(&str, &str, &str)]) -> Result<Self> {
        let p = Universe::new(places.iter().copied())?;
        let t = Universe::new(flows.iter().map(|f| f.0))?;
        let mut pre = Vec::with_capacity(flows.len());
        let mut post = Vec::with_capacity(flows.len());
        for (_, i, o) in flows {
            pre.push(Multiset::parse(&p, i)?);
            post.push(Multiset::parse(&p, o)?);
        }
        NetStructure::new(p, t, pre, post)
    }

    pub fn with_wf(mut self, wf: Arc<dyn WellFormedness>) -> Self {
        self.wf = wf;
        self
    }

    pub fn wf(&self) -> &Arc<dyn WellFormedness> {
        &self.wf
    }

    pub fn places(&self) -> &Arc<Universe> {
        &self.places
    }

    pub fn transitions(&self) -> &Arc<Universe> {
        &self.transitions
    }

    pub fn input(&self, t: usize) -> &Multiset {
        &self.pre[t]
    }

    pub fn output(&self, t: usize) -> &Multiset {
        &self.post[t]
    }

    pub fn transition_index(&self, name: &str) -> Result<usize> {
        self.transitions
            .position(name)
            .ok_or_else(|| QpnError::UnknownElement(name.to_string()))
    }

    /// Lifted input `F⁻(t)` of a concurrence.
    pub fn lifted_input(&self, concurrence: &Multiset) -> Result<Multiset> {
        concurrence.lift(&self.places, |i| self.pre.get(i))
    }

    /// Lifted output `F⁺(t)` of a concurrence.
    pub fn lifted_output(&self, concurrence: &Multiset) -> Result<Multiset> {
        concurrence.lift(&self.places, |i| self.post.get(i))
    }

    /// Resource sufficiency only, ignoring well-formedness.
    pub fn flow_enabled(&self, marking: &Multiset, t: usize) -> bool {
        self.pre[t].le(marking)
    }

    /// `F⁻(t) <= m` and `wf(m, {t})`.
    pub fn is_enabled(&self, marking: &Multiset, t: usize) -> bool {
        self.flow_enabled(marking, t)
            && self
                .wf
                .may_enable(self, marking, &Multiset::element(&self.transitions, t))
    }

    /// Fire a single transition: `ev(m') = ev(m) - ev(F⁻(t)) + ev(F⁺(t))`.
    pub fn fire_single(&self, marking: &Multiset, t: usize) -> Result<Multiset> {
        let name = self.transitions.name(t);
        for p in self.pre[t].support() {
            if marking.get(p) < self.pre[t].get(p) {
                return Err(QpnError::NotEnabled {
                    transition: name.to_string(),
                    reason: format!(
                        "place `{}` holds {} token(s), {} required",
                        self.places.name(p),
                        marking.get(p),
                        self.pre[t].get(p)
                    ),
                });
            }
        }
        if !self
            .wf
            .may_enable(self, marking, &Multiset::element(&self.transitions, t))
        {
            return Err(QpnError::NotEnabled {
                transition: name.to_string(),
                reason: "well-formedness predicate is false".to_string(),
            });
        }
        marking.diff(&self.pre[t])?.mul(&self.post[t])
    }

    pub fn fire_named(&self, marking: &Multiset, t: &str) -> Result<Multiset> {
        self.fire_single(marking, self.transition_index(t)?)
    }

    /// Input, output and incidence matrices, indexed `[place][transition]`.
    pub fn incidence(&self) -> Incidence {
        let np = self.places.len();
        let nt = self.transitions.len();
        let mut input = vec![vec![0i64; nt]; np];
        let mut output = vec![vec![0i64; nt]; np];
        let mut effect = vec![vec![0i64; nt]; np];
        for t in 0..nt {
            for p in 0..np {
                let a = self.pre[t].get(p) as i64;
                let b = self.post[t].get(p) as i64;
                input[p][t] = a;
                output[p][t] = b;
                effect[p][t] = b - a;
            }
        }
        Incidence { input, output, effect }
    }

    pub fn is_loop(&self, t: usize) -> bool {
        self.pre[t] == self.post[t]
    }

    pub fn loop_free(&self) -> bool {
        (0..self.transitions.len()).all(|t| !self.is_loop(t))
    }

    /// Index of some transition reversing `t`, if one exists.
    pub fn reverse_of(&self, t: usize) -> Option<usize> {
        (0..self.transitions.len()).find(|&u| self.pre[t] == self.post[u] && self.post[t] == self.pre[u])
    }

    pub fn reversible(&self) -> bool {
        (0..self.transitions.len()).all(|t| self.reverse_of(t).is_some())
    }

    pub fn pure(&self) -> bool {
        (0..self.transitions.len()).all(|t| self.pre[t].support().all(|p| self.post[t].get(p) == 0))
    }

    pub fn simple(&self) -> bool {
        let mut seen = HashMap::new();
        (0..self.transitions.len()).all(|t| seen.insert((&self.pre[t], &self.post[t]), t).is_none())
    }

    /// Elementary net restriction: every input and output has degree one.
    pub fn check_elementary(&self) -> Result<()> {
        for t in 0..self.transitions.len() {
            if self.pre[t].degree() != 1 || self.post[t].degree() != 1 {
                return Err(QpnError::InvalidNet(format!(
                    "transition `{}` violates the elementary restriction",
                    self.transitions.name(t)
                )));
            }
        }
        Ok(())
    }

    /// Quotient by equal flow pairs (`Simplify`), or drop loops and
    /// quotient by effect pairs (`Purify`). Returned classes list the
    /// original transitions merged into each new transition, which is
    /// named after its first member.
    pub fn simplify_purify(&self, mode: Reduction) -> Result<(NetStructure, Vec<Vec<String>>)> {
        let mut classes: Vec<(Multiset, Multiset, Vec<String>)> = Vec::new();
        for t in 0..self.transitions.len() {
            let (i, o) = match mode {
                Reduction::Simplify => (self.pre[t].clone(), self.post[t].clone()),
                Reduction::Purify => {
                    if self.is_loop(t) {
                        continue;
                    }
                    (self.pre[t].diff(&self.post[t])?, self.post[t].diff(&self.pre[t])?)
                }
            };
            let name = self.transitions.name(t).to_string();
            match classes.iter_mut().find(|c| c.0 == i && c.1 == o) {
                Some(c) => c.2.push(name),
                None => classes.push((i, o, vec![name])),
            }
        }
        let transitions = Universe::new(classes.iter().map(|c| c.2[0].clone()))?;
        let mut pre = Vec::with_capacity(classes.len());
        let mut post = Vec::with_capacity(classes.len());
        let mut members = Vec::with_capacity(classes.len());
        for (i, o, m) in classes {
            pre.push(i);
            post.push(o);
            members.push(m);
        }
        let net = NetStructure::new(Arc::clone(&self.places), transitions, pre, post)?.with_wf(Arc::clone(&self.wf));
        Ok((net, members))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Reduction {
    Simplify,
    Purify,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Incidence {
    pub input: Vec<Vec<i64>>,
    pub output: Vec<Vec<i64>>,
    /// `C[p][t] = F⁺(t)_p - F⁻(t)_p`
    pub effect: Vec<Vec<i64>>,
}

/// A net structure with an initial marking.
#[derive(Debug, Clone)]
pub struct SystemNet {
    pub net: NetStructure,
    pub m0: Multiset,
}

impl SystemNet {
    pub fn new(net: NetStructure, m0: Multiset) -> Result<Self> {
        if **m0.universe() != **net.places() {
            return Err(QpnError::UniverseMismatch);
        }
        if !net.wf.may_enable(&net, &m0, &Multiset::unit(net.transitions())) {
            return Err(QpnError::InvalidNet("initial marking is not well-formed".into()));
        }
        Ok(SystemNet { net, m0 })
    }

    pub fn places(&self) -> &Arc<Universe> {
        self.net.places()
    }

    pub fn transitions(&self) -> &Arc<Universe> {
        self.net.transitions()
    }

    pub fn marking(&self, text: &str) -> Result<Multiset> {
        Multiset::parse(self.net.places(), text)
    }
}

/// Structural and behavioural property report.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PropertyReport {
    pub loop_free: bool,
    pub reversible: bool,
    pub pure: bool,
    pub simple: bool,
    pub safe: bool,
    pub reduced: bool,
}

pub fn check_properties(sys: &SystemNet, rg: &ReachabilityGraph) -> PropertyReport {
    let net = &sys.net;
    let safe = rg.space().markings().iter().all(|m| m.degree() <= 1);
    let mut fired = vec![false; net.transitions().len()];
    for e in rg.edges() {
        fired[e.transition] = true;
    }
    PropertyReport {
        loop_free: net.loop_free(),
        reversible: net.reversible(),
        pure: net.pure(),
        simple: net.simple(),
        safe,
        reduced: fired.iter().all(|&f| f),
    }
}

#[cfg(test)]
pub(crate) mod fixtures {
    use super::*;

    /// One bit: places P0, P1; `u` flips up, `d` flips down.
    pub fn bit() -> SystemNet {
        let net = NetStructure::from_monomials(&["P0", "P1"], &[("u", "P0", "P1"), ("d", "P1", "P0")]).unwrap();
        let m0 = Multiset::parse(net.places(), "P0").unwrap();
        SystemNet::new(net, m0).unwrap()
    }

    /// Two juxtaposed bits P and Q.
    pub fn two_bits() -> SystemNet {
        let net = NetStructure::from_monomials(
            &["P0", "P1", "Q0", "Q1"],
            &[
                ("Pu", "P0", "P1"),
                ("Pd", "P1", "P0"),
                ("Qu", "Q0", "Q1"),
                ("Qd", "Q1", "Q0"),
            ],
        )
        .unwrap();
        let m0 = Multiset::parse(net.places(), "P0 Q0").unwrap();
        SystemNet::new(net, m0).unwrap()
    }

    /// The double-slit net with detector loops.
    pub fn double_slit() -> SystemNet {
        let net = NetStructure::from_monomials(
            &["G", "L", "R", "A", "B", "C", "D", "E"],
            &[
                ("l", "G", "L"),
                ("r", "G", "R"),
                ("a_l", "L", "A"),
                ("b_l", "L", "B"),
                ("c_l", "L", "C"),
                ("a_r", "R", "C"),
                ("b_r", "R", "D"),
                ("c_r", "R", "E"),
                ("a", "A", "A"),
                ("b", "B", "B"),
                ("c", "C", "C"),
                ("d", "D", "D"),
                ("e", "E", "E"),
            ],
        )
        .unwrap();
        let m0 = Multiset::parse(net.places(), "G").unwrap();
        SystemNet::new(net, m0).unwrap()
    }
}

#[cfg(test)]
mod tests {
    use super::fixtures::*;
    use super::*;

    #[test]
    fn fire_examples() {
        let ds = double_slit();
        let g = ds.marking("G").unwrap();
        assert_eq!(ds.net.fire_named(&g, "l").unwrap(), ds.marking("L").unwrap());
        let a = ds.marking("A").unwrap();
        assert_eq!(ds.net.fire_named(&a, "a").unwrap(), a);

        let bit = bit();
        let p0 = bit.marking("P0").unwrap();
        assert_eq!(bit.net.fire_named(&p0, "u").unwrap(), bit.marking("P1").unwrap());
    }

    #[test]
    fn fire_reports_deficient_place() {
        let bit = bit();
        let p0 = bit.marking("P0").unwrap();
        match bit.net.fire_named(&p0, "d") {
            Err(QpnError::NotEnabled { transition, reason }) => {
                assert_eq!(transition, "d");
                assert!(reason.contains("P1"));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn fire_then_reverse_restores() {
        let sys = two_bits();
        let m = sys.m0.clone();
        for t in 0..sys.transitions().len() {
            if sys.net.is_enabled(&m, t) {
                let m1 = sys.net.fire_single(&m, t).unwrap();
                let back = sys.net.reverse_of(t).unwrap();
                assert_eq!(sys.net.fire_single(&m1, back).unwrap(), m);
            }
        }
    }

    #[test]
    fn net_invariants_enforced() {
        assert!(NetStructure::from_monomials(&["p", "t"], &[("t", "p", "p")]).is_err());
        let p = Universe::new(["p"]).unwrap();
        let t = Universe::new(["t"]).unwrap();
        let unit = Multiset::unit(&p);
        assert!(NetStructure::new(p, t, vec![unit.clone()], vec![unit]).is_err());
    }

    #[test]
    fn incidence_matrices() {
        let c = bit().net.incidence().effect;
        assert_eq!(c, vec![vec![-1, 1], vec![1, -1]]);
        let ds = double_slit();
        let inc = ds.net.incidence();
        let l = ds.net.transition_index("l").unwrap();
        let a = ds.net.transition_index("a").unwrap();
        for p in 0..ds.places().len() {
            assert_eq!(inc.effect[p][a], 0);
        }
        assert_eq!(inc.effect[0][l], -1);
        assert_eq!(inc.effect[1][l], 1);
    }

    #[test]
    fn structural_properties() {
        let sys = two_bits();
        let rg = explore(&sys, 100).unwrap();
        let r = check_properties(&sys, &rg);
        assert!(r.loop_free && r.reversible && r.pure && r.simple && r.safe && r.reduced);

        let ds = double_slit();
        let rg = explore(&ds, 100).unwrap();
        let r = check_properties(&ds, &rg);
        assert!(r.simple && !r.loop_free && !r.pure);

        let one = NetStructure::from_monomials(&["p", "q"], &[("t", "p", "q")]).unwrap();
        let m0 = Multiset::parse(one.places(), "p").unwrap();
        let sys = SystemNet::new(one, m0).unwrap();
        let rg = explore(&sys, 10).unwrap();
        let r = check_properties(&sys, &rg);
        assert!(r.loop_free && !r.reversible);
    }

    #[test]
    fn simplify_merges_equal_flows() {
        let net = NetStructure::from_monomials(&["A", "B"], &[("t1", "A", "B"), ("t2", "A", "B")]).unwrap();
        assert!(!net.simple());
        let (s, classes) = net.simplify_purify(Reduction::Simplify).unwrap();
        assert_eq!(classes, vec![vec!["t1".to_string(), "t2".to_string()]]);
        assert!(s.simple());
        let (again, _) = s.simplify_purify(Reduction::Simplify).unwrap();
        assert_eq!(again.transitions().names(), s.transitions().names());
    }

    #[test]
    fn purify_double_slit_drops_loops() {
        let ds = double_slit();
        let (pure, classes) = ds.net.simplify_purify(Reduction::Purify).unwrap();
        assert_eq!(classes.len(), 8);
        assert!(pure.pure() && pure.loop_free());
        let sys = SystemNet::new(pure, ds.m0.clone()).unwrap();
        let rg = explore(&sys, 100).unwrap();
        assert!(rg.edges().iter().all(|e| e.src != e.dst));
        assert_eq!(rg.space().len(), 8);
    }

    #[test]
    fn purify_keeps_effect_only() {
        let net = NetStructure::from_monomials(&["A", "B"], &[("t", "A^2 B", "A B^2")]).unwrap();
        let (p, _) = net.simplify_purify(Reduction::Purify).unwrap();
        assert_eq!(p.input(0).to_string(), "A");
        assert_eq!(p.output(0).to_string(), "B");
    }

    #[test]
    fn elementary_restriction() {
        assert!(bit().net.check_elementary().is_ok());
        let net = NetStructure::from_monomials(&["A", "B"], &[("t", "A^2", "B")]).unwrap();
        assert!(net.check_elementary().is_err());
    }
}
