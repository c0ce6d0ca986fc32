//! Empirical check of the claim that conjugate-symmetric rates on a
//! reversible net give a unitary normal rate matrix.

use std::collections::HashMap;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{MarkingPattern, Qpn, RateFunction, RateRule};
use crate::error::{QpnError, Result};
use crate::multiset::{Multiset, Universe};
use crate::net::{NetStructure, SystemNet};

#[derive(Debug, Clone)]
pub struct Cor1Report {
    /// `r_{m'}(t⁻¹) = conj(r_m(t))` on every rate-graph edge.
    pub conjugate_symmetric: bool,
    pub violations: Vec<String>,
    pub unitary: bool,
    /// `max |(R†R - I)_ij|` of the normal rate matrix.
    pub defect: f64,
    pub normal_matrix: DMatrix<Complex64>,
}

/// Inverse concurrence: every transition replaced by its reverse.
fn inverse(net: &NetStructure, reverse: &[Multiset], t: &Multiset) -> Result<Multiset> {
    t.lift(net.transitions(), |i| reverse.get(i))
}

pub fn check_cor1(q: &Qpn, state_cap: usize, tol: f64) -> Result<Cor1Report> {
    let net = &q.sys.net;
    let mut reverse = Vec::with_capacity(net.transitions().len());
    for t in 0..net.transitions().len() {
        let r = net.reverse_of(t).ok_or_else(|| {
            QpnError::NotReversible(format!("transition `{}` has no reverse", net.transitions().name(t)))
        })?;
        reverse.push(Multiset::element(net.transitions(), r));
    }

    let g = q.rate_graph(state_cap)?;
    let space = g.space();
    let mut violations = Vec::new();
    for e in g.edges() {
        let m = space.marking(e.src);
        let m2 = space.marking(e.dst);
        let inv = inverse(net, &reverse, &e.concurrence)?;
        let forward = q.rate.rate(m, &e.concurrence);
        let back = q.rate.rate(m2, &inv);
        if (back - forward.conj()).norm() >= tol {
            violations.push(format!(
                "r[{m}]({}) = {forward}, r[{m2}]({inv}) = {back}",
                e.concurrence
            ));
        }
    }

    let normal = q.rated_graph(state_cap)?.rate_matrix().normalize_rows();
    let defect = normal.unitarity_defect();
    Ok(Cor1Report {
        conjugate_symmetric: violations.is_empty(),
        violations,
        unitary: defect < tol,
        defect,
        normal_matrix: normal.into_matrix(),
    })
}

/// Small random reversible net with conjugate-symmetric rates on its rate
/// graph. Transitions conserve token count, so the state space is finite.
pub fn random_reversible_qpn(seed: u64) -> Result<Qpn> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let np = rng.random_range(2..=4usize);
    let places = Universe::new((0..np).map(|i| format!("p{i}")))?;
    let pairs = rng.random_range(1..=3usize);

    let mut names = Vec::new();
    let mut pre = Vec::new();
    let mut post = Vec::new();
    for k in 0..pairs {
        // distinct flows keep `reverse_of` an involution
        let mut found = None;
        for _ in 0..64 {
            let size = rng.random_range(1..=2u64);
            let a = random_marking(&places, size, &mut rng)?;
            let b = random_marking(&places, size, &mut rng)?;
            let taken = pre.iter().zip(&post).any(|(p, q)| p == &a && q == &b);
            if a != b && !taken {
                found = Some((a, b));
                break;
            }
        }
        let Some((a, b)) = found else { break };
        names.push(format!("t{k}"));
        names.push(format!("t{k}r"));
        pre.push(a.clone());
        post.push(b.clone());
        pre.push(b);
        post.push(a);
    }
    let transitions = Universe::new(names)?;
    let net = NetStructure::new(places.clone(), transitions, pre, post)?;
    let tokens = rng.random_range(1..=3u64);
    let m0 = random_marking(&places, tokens, &mut rng)?;
    let sys = SystemNet::new(net, m0)?;

    let bare = Qpn::new(sys.clone(), RateFunction::constant(Complex64::new(0.0, 0.0)))?;
    let g = bare.rate_graph(10_000)?;
    let reverse: Vec<Multiset> = (0..sys.transitions().len())
        .map(|t| Multiset::element(sys.transitions(), sys.net.reverse_of(t).expect("paired")))
        .collect();

    let mut assigned: HashMap<(usize, Multiset), Complex64> = HashMap::new();
    let mut rules = Vec::new();
    for e in g.edges() {
        if assigned.contains_key(&(e.src, e.concurrence.clone())) {
            continue;
        }
        let inv = inverse(&sys.net, &reverse, &e.concurrence)?;
        let self_inverse = e.src == e.dst && inv == e.concurrence;
        let z = if self_inverse {
            Complex64::new(rng.random_range(-1.0..1.0), 0.0)
        } else {
            Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
        };
        assigned.insert((e.src, e.concurrence.clone()), z);
        assigned.insert((e.dst, inv.clone()), z.conj());
        let space = g.space();
        rules.push(RateRule::new(
            MarkingPattern::Exact(space.marking(e.src).clone()),
            e.concurrence.clone(),
            z,
        ));
        if !self_inverse {
            rules.push(RateRule::new(
                MarkingPattern::Exact(space.marking(e.dst).clone()),
                inv,
                z.conj(),
            ));
        }
    }
    let mut rate = RateFunction::constant(Complex64::new(0.0, 0.0));
    rate.rules = rules;
    Qpn::new(sys, rate)
}

fn random_marking(places: &std::sync::Arc<Universe>, tokens: u64, rng: &mut ChaCha8Rng) -> Result<Multiset> {
    let mut exps = vec![0u64; places.len()];
    for _ in 0..tokens {
        exps[rng.random_range(0..places.len())] += 1;
    }
    Multiset::from_exponents(places, exps)
}

#[derive(Debug, Clone)]
pub struct Cor1Instance {
    pub seed: u64,
    pub qpn: Qpn,
    pub report: Cor1Report,
}

/// Runs `check_cor1` on `instances` generated nets, seeds `seed..seed+instances`.
pub fn cor1_harness(seed: u64, instances: u64, tol: f64) -> Result<Vec<Cor1Instance>> {
    (seed..seed + instances)
        .map(|s| {
            let qpn = random_reversible_qpn(s)?;
            let report = check_cor1(&qpn, 10_000, tol)?;
            Ok(Cor1Instance { seed: s, qpn, report })
        })
        .collect()
}
