use std::collections::BTreeMap;
use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::state::Superposition;
use crate::error::{QpnError, Result};
use crate::multiset::Multiset;
use crate::net::StateSpace;

#[derive(Debug, Clone, PartialEq)]
pub struct RatedEdge {
    pub src: usize,
    pub label: String,
    pub dst: usize,
    pub rate: Complex64,
}

/// Rate graph with an amplitude on every edge. Labels name the
/// concurrence (or composite step) taken; `flows` records its lifted
/// input and output.
#[derive(Debug, Clone)]
pub struct RatedGraph {
    space: Arc<StateSpace>,
    initial: usize,
    flows: BTreeMap<String, (Multiset, Multiset)>,
    edges: Vec<RatedEdge>,
}

impl RatedGraph {
    /// Sorts edges by `(src, dst, label)`; every edge must stay in the space.
    pub fn new(
        space: Arc<StateSpace>,
        initial: usize,
        flows: BTreeMap<String, (Multiset, Multiset)>,
        mut edges: Vec<RatedEdge>,
    ) -> Result<Self> {
        let n = space.len();
        if initial >= n {
            return Err(QpnError::Dimension {
                expected: n,
                found: initial,
            });
        }
        for e in &edges {
            if e.src >= n || e.dst >= n {
                return Err(QpnError::Dimension {
                    expected: n,
                    found: e.src.max(e.dst),
                });
            }
            if !super::rate::finite(e.rate) {
                return Err(QpnError::NonFinite);
            }
        }
        edges.sort_by(|a, b| (a.src, a.dst, &a.label).cmp(&(b.src, b.dst, &b.label)));
        Ok(RatedGraph {
            space,
            initial,
            flows,
            edges,
        })
    }

    pub fn space(&self) -> &Arc<StateSpace> {
        &self.space
    }

    pub fn initial(&self) -> usize {
        self.initial
    }

    pub fn initial_marking(&self) -> &Multiset {
        self.space.marking(self.initial)
    }

    pub fn flows(&self) -> &BTreeMap<String, (Multiset, Multiset)> {
        &self.flows
    }

    pub fn edges(&self) -> &[RatedEdge] {
        &self.edges
    }

    pub fn dim(&self) -> usize {
        self.space.len()
    }

    /// `R[m', m] = sum of rates over edges m -> m'`.
    pub fn rate_matrix(&self) -> RateMatrix {
        let n = self.dim();
        let mut r = DMatrix::zeros(n, n);
        for e in &self.edges {
            r[(e.dst, e.src)] += e.rate;
        }
        RateMatrix::new(r)
    }

    /// Divides every edge rate by the L2 norm of its row in the rate matrix,
    /// leaving zero rows unchanged. The result's matrix is the normal rate matrix.
    pub fn normalized(&self) -> RatedGraph {
        let norms = self.rate_matrix().row_norms();
        let edges = self
            .edges
            .iter()
            .map(|e| RatedEdge {
                rate: if norms[e.dst] > 0.0 {
                    e.rate / norms[e.dst]
                } else {
                    e.rate
                },
                ..e.clone()
            })
            .collect();
        RatedGraph { edges, ..self.clone() }
    }

    pub fn map_rates(&self, f: impl Fn(Complex64) -> Complex64) -> RatedGraph {
        let edges = self
            .edges
            .iter()
            .map(|e| RatedEdge {
                rate: f(e.rate),
                ..e.clone()
            })
            .collect();
        RatedGraph { edges, ..self.clone() }
    }

    pub fn with_edges(&self, edges: Vec<RatedEdge>) -> Result<RatedGraph> {
        RatedGraph::new(Arc::clone(&self.space), self.initial, self.flows.clone(), edges)
    }

    /// One evolution step summed edge by edge:
    /// `a'_{m'} = sum over edges m -t-> m' of r_m(t) a_m`.
    pub fn step(&self, a: &Superposition) -> Result<Superposition> {
        check_dim(self.dim(), a.len())?;
        let mut out = vec![Complex64::new(0.0, 0.0); self.dim()];
        for e in &self.edges {
            out[e.dst] += e.rate * a.amplitudes()[e.src];
        }
        Superposition::new(Arc::clone(a.space()), out)
    }

    pub fn evolve(&self, a: &Superposition, steps: usize) -> Result<Superposition> {
        let mut cur = a.clone();
        for _ in 0..steps {
            cur = self.step(&cur)?;
        }
        Ok(cur)
    }
}

fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(QpnError::Dimension { expected, found });
    }
    Ok(())
}

/// Dense rate matrix, indexed `[destination, source]`.
#[derive(Debug, Clone, PartialEq)]
pub struct RateMatrix {
    matrix: DMatrix<Complex64>,
    normal: bool,
}

impl RateMatrix {
    pub fn new(matrix: DMatrix<Complex64>) -> Self {
        assert!(matrix.is_square(), "rate matrix must be square");
        RateMatrix { matrix, normal: false }
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    pub fn into_matrix(self) -> DMatrix<Complex64> {
        self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn is_normal(&self) -> bool {
        self.normal
    }

    pub fn row_norms(&self) -> Vec<f64> {
        (0..self.dim())
            .map(|i| self.matrix.row(i).iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt())
            .collect()
    }

    /// Divides each non-zero row by its L2 norm.
    pub fn normalize_rows(&self) -> RateMatrix {
        let mut m = self.matrix.clone();
        for (i, n) in self.row_norms().into_iter().enumerate() {
            if n > 0.0 {
                m.row_mut(i).iter_mut().for_each(|z| *z /= n);
            }
        }
        RateMatrix {
            matrix: m,
            normal: true,
        }
    }

    pub fn apply(&self, a: &Superposition) -> Result<Superposition> {
        check_dim(self.dim(), a.len())?;
        let v = nalgebra::DVector::from_column_slice(a.amplitudes());
        let out = &self.matrix * v;
        Superposition::new(Arc::clone(a.space()), out.as_slice().to_vec())
    }

    pub fn evolve(&self, a: &Superposition, steps: usize) -> Result<Superposition> {
        let mut cur = a.clone();
        for _ in 0..steps {
            cur = self.apply(&cur)?;
        }
        Ok(cur)
    }

    /// `max |(R†R - I)_ij|`.
    pub fn unitarity_defect(&self) -> f64 {
        let n = self.dim();
        let g = self.matrix.adjoint() * &self.matrix;
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((g[(i, j)] - Complex64::new(target, 0.0)).norm());
            }
        }
        worst
    }

    pub fn is_unitary(&self, tol: f64) -> bool {
        self.unitarity_defect() < tol
    }
}

/// Largest entrywise modulus of `a - b`; infinite on shape mismatch.
pub fn max_abs_diff(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>) -> f64 {
    if a.shape() != b.shape() {
        return f64::INFINITY;
    }
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}
