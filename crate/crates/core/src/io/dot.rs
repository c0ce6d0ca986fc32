//! Graphviz export of reachability and rated graphs. Output depends only
//! on the graph, so it is byte-stable.

use std::fmt::Write;

use super::format_complex;
use crate::net::{ReachabilityGraph, StateSpace};
use crate::quantum::RatedGraph;

fn escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

fn nodes(out: &mut String, space: &StateSpace, initial: usize) {
    for (i, m) in space.markings().iter().enumerate() {
        let extra = if i == initial { ", peripheries=2" } else { "" };
        writeln!(out, "  n{i} [label=\"{}\"{extra}];", escape(&m.to_string())).expect("string write");
    }
}

/// Markings as monomial labels, edges labelled by transition.
pub fn rg_to_dot(rg: &ReachabilityGraph) -> String {
    let mut out = String::from("digraph rg {\n  rankdir=LR;\n  node [shape=ellipse];\n");
    nodes(&mut out, rg.space(), rg.initial());
    for e in rg.edges() {
        writeln!(
            out,
            "  n{} -> n{} [label=\"{}\"];",
            e.src,
            e.dst,
            escape(rg.transitions().name(e.transition))
        )
        .expect("string write");
    }
    out.push_str("}\n");
    out
}

/// Edges labelled `t, rate`; with `rates` off only the step is shown.
pub fn rated_to_dot(g: &RatedGraph, rates: bool) -> String {
    let mut out = String::from("digraph rate {\n  rankdir=LR;\n  node [shape=ellipse];\n");
    nodes(&mut out, g.space(), g.initial());
    for e in g.edges() {
        let label = if rates {
            format!("{}, {}", e.label, format_complex(e.rate))
        } else {
            e.label.clone()
        };
        writeln!(out, "  n{} -> n{} [label=\"{}\"];", e.src, e.dst, escape(&label)).expect("string write");
    }
    out.push_str("}\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::builtin;
    use crate::net::explore;

    #[test]
    fn two_qubit_rate_graph() {
        let q = builtin::two_qubit_qpn().unwrap();
        let dot = rated_to_dot(&q.rated_graph(100).unwrap(), true);
        assert_eq!(dot.matches(" [label=").count(), 4 + 16);
        assert_eq!(dot.matches("-> ").count(), 16);
        assert!(dot.contains("n0 [label=\"P0 Q0\", peripheries=2];"));
        assert!(dot.contains("n0 -> n3 [label=\"Pu Qu, 1+0i\"];"));
    }

    #[test]
    fn double_slit_topology() {
        let sys = builtin::double_slit_net().unwrap();
        let rg = explore(&sys, 100).unwrap();
        let dot = rg_to_dot(&rg);
        assert_eq!(dot.matches("-> ").count(), 13);
        assert!(dot.contains("[label=\"c_l\"]"));
        assert_eq!(dot, rg_to_dot(&explore(&sys, 100).unwrap()));
    }

    #[test]
    fn edgeless_graph_has_nodes_only() {
        let net = crate::net::NetStructure::from_monomials(&["A", "B"], &[("t", "B", "A")]).unwrap();
        let m0 = crate::multiset::Multiset::parse(net.places(), "A").unwrap();
        let rg = explore(&crate::net::SystemNet::new(net, m0).unwrap(), 10).unwrap();
        let dot = rg_to_dot(&rg);
        assert!(dot.contains("n0 [label=\"A\", peripheries=2];"));
        assert!(!dot.contains("->"));
    }
}
