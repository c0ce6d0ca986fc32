//! Quantum Petri nets: rate functions, rate matrices, superpositions,
//! evolution, measurement and entanglement.

mod cor1;
mod graph;
mod rate;
mod state;

pub use cor1::{check_cor1, cor1_harness, random_reversible_qpn, Cor1Instance, Cor1Report};
pub use graph::{max_abs_diff, RateMatrix, RatedEdge, RatedGraph};
pub use rate::{MarkingPattern, RateFunction, RateRule};
pub use state::{Measurement, Norm, Outcome, Superposition};

use std::collections::BTreeMap;

pub use num_complex::Complex64;

use crate::concurrence::{build_rate_graph, RateGraph};
use crate::error::Result;
use crate::net::{explore, SystemNet};

/// Tolerance for boolean checks (unitarity, entanglement rank).
pub const CHECK_TOL: f64 = 1e-9;
/// Tolerance for equality assertions between two computations.
pub const EQ_TOL: f64 = 1e-12;

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// System net with a rate function on its rate graph.
#[derive(Debug, Clone)]
pub struct Qpn {
    pub sys: SystemNet,
    pub rate: RateFunction,
    /// Concurrence cardinality cap; `None` uses the marking size.
    pub max_card: Option<u64>,
}

impl Qpn {
    pub fn new(sys: SystemNet, rate: RateFunction) -> Result<Self> {
        rate.validate(sys.places(), sys.transitions())?;
        Ok(Qpn {
            sys,
            rate,
            max_card: None,
        })
    }

    pub fn rate_graph(&self, state_cap: usize) -> Result<RateGraph> {
        let rg = explore(&self.sys, state_cap)?;
        build_rate_graph(&self.sys, &rg, self.max_card)
    }

    /// Rate graph with `r_m(t)` on each edge, labelled by concurrence.
    pub fn rated_graph(&self, state_cap: usize) -> Result<RatedGraph> {
        let g = self.rate_graph(state_cap)?;
        let net = &self.sys.net;
        let mut flows = BTreeMap::new();
        let mut edges = Vec::with_capacity(g.edges().len());
        for e in g.edges() {
            let label = e.concurrence.to_string();
            if !flows.contains_key(&label) {
                let io = (net.lifted_input(&e.concurrence)?, net.lifted_output(&e.concurrence)?);
                flows.insert(label.clone(), io);
            }
            edges.push(RatedEdge {
                src: e.src,
                rate: self.rate.rate(g.space().marking(e.src), &e.concurrence),
                label,
                dst: e.dst,
            });
        }
        RatedGraph::new(std::sync::Arc::clone(g.space()), g.initial(), flows, edges)
    }

    pub fn rate_matrix(&self, state_cap: usize) -> Result<RateMatrix> {
        Ok(self.rated_graph(state_cap)?.rate_matrix())
    }
}
