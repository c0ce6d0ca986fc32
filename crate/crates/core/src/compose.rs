//! Algebra of rated graphs: zero, unit, scaling, monoidal product, sum,
//! Kronecker product and Kronecker sum, each built edge by edge.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{QpnError, Result};
use crate::multiset::{Multiset, Universe};
use crate::net::StateSpace;
use crate::quantum::{max_abs_diff, RatedEdge, RatedGraph};

pub const UNIT_LABEL: &str = "1";

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Op {
    Zero,
    Unit,
    Scale(Complex64),
    Product,
    Sum,
    Kron,
    KronSum,
}

impl fmt::Display for Op {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Op::Zero => "zero",
            Op::Unit => "unit",
            Op::Scale(_) => "scale",
            Op::Product => "product",
            Op::Sum => "sum",
            Op::Kron => "kron",
            Op::KronSum => "kronsum",
        };
        f.write_str(s)
    }
}

/// A composition result with its provenance.
#[derive(Debug, Clone)]
pub struct Composed {
    pub op: Op,
    pub operands: Vec<String>,
    pub graph: RatedGraph,
}

/// Same place names, initial marking and reachable markings.
pub fn shape_equivalent(a: &RatedGraph, b: &RatedGraph) -> bool {
    a.space().same_shape(b.space()) && a.initial() == b.initial()
}

fn require_shape(a: &RatedGraph, b: &RatedGraph, op: &str) -> Result<()> {
    if !shape_equivalent(a, b) {
        return Err(QpnError::Composition(format!(
            "{op} needs shape-equivalent operands (same places, initial marking and reachable markings)"
        )));
    }
    Ok(())
}

/// Every rate set to zero.
pub fn zero(g: &RatedGraph) -> RatedGraph {
    g.map_rates(|_| Complex64::new(0.0, 0.0))
}

/// Rate 1 on unit self-loops and 0 elsewhere; the rate matrix is the identity.
pub fn unit(g: &RatedGraph) -> RatedGraph {
    let mut edges: Vec<RatedEdge> = g
        .edges()
        .iter()
        .filter(|e| !(e.label == UNIT_LABEL && e.src == e.dst))
        .map(|e| RatedEdge {
            rate: Complex64::new(0.0, 0.0),
            ..e.clone()
        })
        .collect();
    for v in 0..g.dim() {
        edges.push(RatedEdge {
            src: v,
            label: UNIT_LABEL.to_string(),
            dst: v,
            rate: Complex64::new(1.0, 0.0),
        });
    }
    let mut flows = g.flows().clone();
    let empty = Multiset::unit(g.space().places());
    flows.entry(UNIT_LABEL.to_string()).or_insert((empty.clone(), empty));
    RatedGraph::new(Arc::clone(g.space()), g.initial(), flows, edges).expect("same vertices")
}

pub fn scale(c: Complex64, g: &RatedGraph) -> RatedGraph {
    g.map_rates(|r| c * r)
}

/// Monoidal product: every path `m -t-> m' -t'-> m''` contracted to one
/// edge `m -(t ; t')-> m''` with rate `r_m(t) r'_{m'}(t')`. With `prune`,
/// contractions of rate zero are dropped. `R_{QQ'} = R_{Q'} R_Q`.
pub fn product(a: &RatedGraph, b: &RatedGraph, prune: bool) -> Result<RatedGraph> {
    require_shape(a, b, "product")?;
    let mut by_src: HashMap<usize, Vec<&RatedEdge>> = HashMap::new();
    for e in b.edges() {
        by_src.entry(e.src).or_default().push(e);
    }
    let mut edges = Vec::new();
    let mut flows = BTreeMap::new();
    for e1 in a.edges() {
        let Some(next) = by_src.get(&e1.dst) else { continue };
        for e2 in next {
            let rate = e1.rate * e2.rate;
            if prune && rate == Complex64::new(0.0, 0.0) {
                continue;
            }
            let label = format!("({} ; {})", e1.label, e2.label);
            if !flows.contains_key(&label) {
                let (pre1, post1) = &a.flows()[&e1.label];
                let (pre2, post2) = &b.flows()[&e2.label];
                let pre = pre1.mul(&pre2.diff(post1)?)?;
                let post = post2.mul(&post1.diff(pre2)?)?;
                flows.insert(label.clone(), (pre, post));
            }
            edges.push(RatedEdge {
                src: e1.src,
                label,
                dst: e2.dst,
                rate,
            });
        }
    }
    RatedGraph::new(Arc::clone(a.space()), a.initial(), flows, edges)
}

/// Edge union; rates of edges present in both operands add up.
pub fn sum(a: &RatedGraph, b: &RatedGraph) -> Result<RatedGraph> {
    require_shape(a, b, "sum")?;
    for (label, fa) in a.flows() {
        if let Some(fb) = b.flows().get(label) {
            if fa != fb {
                return Err(QpnError::Composition(format!(
                    "sum operands disagree on the flows of `{label}`"
                )));
            }
        }
    }
    let mut merged: BTreeMap<(usize, String, usize), Complex64> = BTreeMap::new();
    for e in a.edges().iter().chain(b.edges()) {
        *merged
            .entry((e.src, e.label.clone(), e.dst))
            .or_insert(Complex64::new(0.0, 0.0)) += e.rate;
    }
    let mut flows = a.flows().clone();
    for (k, v) in b.flows() {
        flows.entry(k.clone()).or_insert_with(|| v.clone());
    }
    let edges = merged
        .into_iter()
        .map(|((src, label, dst), rate)| RatedEdge { src, label, dst, rate })
        .collect();
    RatedGraph::new(Arc::clone(a.space()), a.initial(), flows, edges)
}

fn is_monomial(label: &str) -> bool {
    !label.contains(['(', ')', '[', ']', '|', ';'])
}

fn prefixed(label: &str, prefix: &str) -> Vec<String> {
    label
        .split_whitespace()
        .filter(|t| *t != UNIT_LABEL)
        .map(|t| format!("{prefix}{t}"))
        .collect()
}

/// Joint label of a pair of steps in the juxtaposed net.
fn kron_label(x: &str, y: &str) -> String {
    if is_monomial(x) && is_monomial(y) {
        let mut parts = prefixed(x, "L.");
        parts.extend(prefixed(y, "R."));
        if parts.is_empty() {
            UNIT_LABEL.to_string()
        } else {
            parts.join(" ")
        }
    } else {
        format!("[{x} | {y}]")
    }
}

/// Kronecker product on the disjoint juxtaposition. Places are prefixed
/// `L.` and `R.`; markings are the products `m m'` and every pair of edges
/// yields a joint edge with the product rate. `R_{Q⊗Q'} = R_Q ⊗ R_Q'`.
pub fn kron(a: &RatedGraph, b: &RatedGraph) -> Result<RatedGraph> {
    let pa = a.space().places();
    let pb = b.space().places();
    let places = Universe::new(
        pa.names()
            .iter()
            .map(|p| format!("L.{p}"))
            .chain(pb.names().iter().map(|p| format!("R.{p}"))),
    )?;
    let nb = b.dim();
    let mut markings = Vec::with_capacity(a.dim() * nb);
    for m in a.space().markings() {
        for m2 in b.space().markings() {
            markings.push(m.juxtapose(m2, &places)?);
        }
    }
    let space = StateSpace::new(Arc::clone(&places), markings.clone())?;
    // juxtaposition preserves canonical order, so index i * nb + j is stable
    debug_assert!(markings.iter().enumerate().all(|(k, m)| space.index_of(m) == Some(k)));

    let mut flows = BTreeMap::new();
    let mut edges = Vec::with_capacity(a.edges().len() * b.edges().len());
    for e1 in a.edges() {
        for e2 in b.edges() {
            let label = kron_label(&e1.label, &e2.label);
            if !flows.contains_key(&label) {
                let (pre1, post1) = &a.flows()[&e1.label];
                let (pre2, post2) = &b.flows()[&e2.label];
                flows.insert(
                    label.clone(),
                    (pre1.juxtapose(pre2, &places)?, post1.juxtapose(post2, &places)?),
                );
            }
            edges.push(RatedEdge {
                src: e1.src * nb + e2.src,
                label,
                dst: e1.dst * nb + e2.dst,
                rate: e1.rate * e2.rate,
            });
        }
    }
    RatedGraph::new(Arc::new(space), a.initial() * nb + b.initial(), flows, edges)
}

/// `Q ⊗ 1_{Q'} + 1_Q ⊗ Q'`.
pub fn kron_sum(a: &RatedGraph, b: &RatedGraph) -> Result<RatedGraph> {
    sum(&kron(a, &unit(b))?, &kron(&unit(a), b)?)
}

/// Monoidal power; `Q^0` is the unit.
pub fn power(g: &RatedGraph, k: u32, prune: bool) -> Result<RatedGraph> {
    let mut acc = unit(g);
    for _ in 0..k {
        acc = product(&acc, g, prune)?;
    }
    Ok(acc)
}

/// Matrix-algebra Kronecker sum `A ⊗ I + I ⊗ B`.
pub fn matrix_kron_sum(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    let ia = DMatrix::identity(a.nrows(), a.ncols());
    let ib = DMatrix::identity(b.nrows(), b.ncols());
    a.kronecker(&ib) + ia.kronecker(b)
}

/// Same graph with an independent random rate on every edge.
pub fn randomize_rates(g: &RatedGraph, rng: &mut ChaCha8Rng) -> RatedGraph {
    let edges = g
        .edges()
        .iter()
        .map(|e| RatedEdge {
            rate: Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)),
            ..e.clone()
        })
        .collect();
    g.with_edges(edges).expect("same vertices")
}

#[derive(Debug, Clone)]
pub struct LawCheck {
    pub name: &'static str,
    pub trials: u64,
    /// Largest entrywise deviation seen across trials.
    pub max_error: f64,
    pub passed: bool,
}

#[derive(Debug, Clone)]
pub struct LawReport {
    pub seed: u64,
    pub tol: f64,
    pub checks: Vec<LawCheck>,
}

impl LawReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

/// Checks the composition identities (edge-level construction against
/// matrix algebra) and the algebraic laws on `trials` random rate
/// functions over `base`.
pub fn verify_laws(base: &RatedGraph, seed: u64, trials: u64, tol: f64) -> Result<LawReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    type Check = fn(&[RatedGraph; 3], Complex64) -> Result<f64>;
    let checks: Vec<(&'static str, Check)> = vec![
        ("zero: R_0 = 0", |[a, ..], _| {
            let z = zero(a).rate_matrix();
            Ok(z.matrix().iter().map(|x| x.norm()).fold(0.0, f64::max))
        }),
        ("unit: R_1 = I", |[a, ..], _| {
            let n = a.dim();
            Ok(max_abs_diff(unit(a).rate_matrix().matrix(), &DMatrix::identity(n, n)))
        }),
        ("scale: R_cQ = c R_Q", |[a, ..], c| {
            Ok(max_abs_diff(
                scale(c, a).rate_matrix().matrix(),
                &(a.rate_matrix().matrix() * c),
            ))
        }),
        ("product: R_QQ' = R_Q' R_Q", |[a, b, _], _| {
            let lhs = product(a, b, false)?.rate_matrix();
            Ok(max_abs_diff(
                lhs.matrix(),
                &(b.rate_matrix().matrix() * a.rate_matrix().matrix()),
            ))
        }),
        ("sum: R_Q+Q' = R_Q + R_Q'", |[a, b, _], _| {
            let lhs = sum(a, b)?.rate_matrix();
            Ok(max_abs_diff(
                lhs.matrix(),
                &(a.rate_matrix().matrix() + b.rate_matrix().matrix()),
            ))
        }),
        ("kron: R_Q⊗Q' = R_Q ⊗ R_Q'", |[a, b, _], _| {
            let lhs = kron(a, b)?.rate_matrix();
            Ok(max_abs_diff(
                lhs.matrix(),
                &a.rate_matrix().matrix().kronecker(b.rate_matrix().matrix()),
            ))
        }),
        ("kronsum: R_Q⊕Q' = R_Q ⊕ R_Q'", |[a, b, _], _| {
            let lhs = kron_sum(a, b)?.rate_matrix();
            Ok(max_abs_diff(
                lhs.matrix(),
                &matrix_kron_sum(a.rate_matrix().matrix(), b.rate_matrix().matrix()),
            ))
        }),
        ("sum associative", |[a, b, c], _| {
            let l = sum(&sum(a, b)?, c)?.rate_matrix();
            let r = sum(a, &sum(b, c)?)?.rate_matrix();
            Ok(max_abs_diff(l.matrix(), r.matrix()))
        }),
        ("sum commutative", |[a, b, _], _| {
            Ok(max_abs_diff(
                sum(a, b)?.rate_matrix().matrix(),
                sum(b, a)?.rate_matrix().matrix(),
            ))
        }),
        ("zero is the sum identity", |[a, ..], _| {
            Ok(max_abs_diff(
                sum(a, &zero(a))?.rate_matrix().matrix(),
                a.rate_matrix().matrix(),
            ))
        }),
        ("product associative", |[a, b, c], _| {
            let l = product(&product(a, b, false)?, c, false)?.rate_matrix();
            let r = product(a, &product(b, c, false)?, false)?.rate_matrix();
            Ok(max_abs_diff(l.matrix(), r.matrix()))
        }),
        ("unit is the product identity", |[a, ..], _| {
            let r = a.rate_matrix();
            let left = product(&unit(a), a, false)?.rate_matrix();
            let right = product(a, &unit(a), false)?.rate_matrix();
            Ok(max_abs_diff(left.matrix(), r.matrix()).max(max_abs_diff(right.matrix(), r.matrix())))
        }),
        ("product distributes over sum", |[a, b, c], _| {
            let l = product(a, &sum(b, c)?, false)?.rate_matrix();
            let r = sum(&product(a, b, false)?, &product(a, c, false)?)?.rate_matrix();
            let l2 = product(&sum(b, c)?, a, false)?.rate_matrix();
            let r2 = sum(&product(b, a, false)?, &product(c, a, false)?)?.rate_matrix();
            Ok(max_abs_diff(l.matrix(), r.matrix()).max(max_abs_diff(l2.matrix(), r2.matrix())))
        }),
        ("kron associative", |[a, b, c], _| {
            let l = kron(&kron(a, b)?, c)?.rate_matrix();
            let r = kron(a, &kron(b, c)?)?.rate_matrix();
            Ok(max_abs_diff(l.matrix(), r.matrix()))
        }),
        ("scale distributes over sum", |[a, b, _], c| {
            let l = scale(c, &sum(a, b)?).rate_matrix();
            let r = sum(&scale(c, a), &scale(c, b))?.rate_matrix();
            Ok(max_abs_diff(l.matrix(), r.matrix()))
        }),
    ];

    let mut errors = vec![0.0f64; checks.len()];
    for _ in 0..trials {
        let ops = [
            randomize_rates(base, &mut rng),
            randomize_rates(base, &mut rng),
            randomize_rates(base, &mut rng),
        ];
        let c = Complex64::new(rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0));
        for (k, (_, check)) in checks.iter().enumerate() {
            errors[k] = errors[k].max(check(&ops, c)?);
        }
    }
    Ok(LawReport {
        seed,
        tol,
        checks: checks
            .iter()
            .zip(errors)
            .map(|((name, _), e)| LawCheck {
                name,
                trials,
                max_error: e,
                passed: e <= tol,
            })
            .collect(),
    })
}
