//! Qubit nets, gate QPNs, flattened circuits, circuit compilation and the
//! teleportation protocol.

use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::compose::{product, unit};
use crate::error::{QpnError, Result};
use crate::multiset::{Multiset, Universe};
use crate::net::{NetStructure, SystemNet};
use crate::quantum::{MarkingPattern, Norm, Outcome, Qpn, RateFunction, RateRule, RatedGraph, Superposition};

/// Largest register the dense constructions accept.
pub const MAX_QUBITS: usize = 10;

#[derive(Debug, Clone, PartialEq)]
pub enum Gate {
    H,
    S,
    T,
    X,
    Z,
    Cnot,
    /// Arbitrary `2^k x 2^k` operator on `k` target qubits, first target most significant.
    Custom(DMatrix<Complex64>),
}

impl Gate {
    pub fn arity(&self) -> usize {
        match self {
            Gate::Cnot => 2,
            Gate::Custom(m) => m.nrows().trailing_zeros() as usize,
            _ => 1,
        }
    }

    pub fn matrix(&self) -> DMatrix<Complex64> {
        let z = Complex64::new(0.0, 0.0);
        let one = Complex64::new(1.0, 0.0);
        let h = Complex64::new(1.0 / 2f64.sqrt(), 0.0);
        match self {
            Gate::H => DMatrix::from_row_slice(2, 2, &[h, h, h, -h]),
            Gate::S => DMatrix::from_row_slice(2, 2, &[one, z, z, Complex64::new(0.0, 1.0)]),
            Gate::T => DMatrix::from_row_slice(
                2,
                2,
                &[one, z, z, Complex64::from_polar(1.0, std::f64::consts::FRAC_PI_4)],
            ),
            Gate::X => DMatrix::from_row_slice(2, 2, &[z, one, one, z]),
            Gate::Z => DMatrix::from_row_slice(2, 2, &[one, z, z, -one]),
            Gate::Cnot => DMatrix::from_row_slice(4, 4, &[one, z, z, z, z, one, z, z, z, z, z, one, z, z, one, z]),
            Gate::Custom(m) => m.clone(),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Gate::H => "H",
            Gate::S => "S",
            Gate::T => "T",
            Gate::X => "X",
            Gate::Z => "Z",
            Gate::Cnot => "CNOT",
            Gate::Custom(_) => "U",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GateApp {
    pub gate: Gate,
    pub targets: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Circuit {
    qubits: usize,
    gates: Vec<GateApp>,
}

impl Circuit {
    pub fn new(qubits: usize) -> Result<Self> {
        if qubits == 0 || qubits > MAX_QUBITS {
            return Err(QpnError::InvalidCircuit(format!(
                "qubit count must be between 1 and {MAX_QUBITS}, got {qubits}"
            )));
        }
        Ok(Circuit {
            qubits,
            gates: Vec::new(),
        })
    }

    pub fn qubits(&self) -> usize {
        self.qubits
    }

    pub fn gates(&self) -> &[GateApp] {
        &self.gates
    }

    pub fn push(&mut self, gate: Gate, targets: &[usize]) -> Result<()> {
        if let Gate::Custom(m) = &gate {
            if m.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
                return Err(QpnError::NonFinite);
            }
            let n = m.nrows();
            if !m.is_square() || n < 2 || !n.is_power_of_two() {
                return Err(QpnError::InvalidCircuit(format!(
                    "custom gate must be 2^k x 2^k, got {}x{}",
                    m.nrows(),
                    m.ncols()
                )));
            }
        }
        if targets.len() != gate.arity() {
            return Err(QpnError::InvalidCircuit(format!(
                "{} takes {} qubit(s), got {}",
                gate.name(),
                gate.arity(),
                targets.len()
            )));
        }
        for (i, &q) in targets.iter().enumerate() {
            if q >= self.qubits {
                return Err(QpnError::InvalidCircuit(format!(
                    "qubit {q} out of range for a {}-qubit circuit",
                    self.qubits
                )));
            }
            if targets[..i].contains(&q) {
                return Err(QpnError::InvalidCircuit(format!("{} repeats qubit {q}", gate.name())));
            }
        }
        self.gates.push(GateApp {
            gate,
            targets: targets.to_vec(),
        });
        Ok(())
    }

    pub fn with(mut self, gate: Gate, targets: &[usize]) -> Result<Self> {
        self.push(gate, targets)?;
        Ok(self)
    }
}

impl fmt::Display for Circuit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "qubits {}", self.qubits)?;
        for g in &self.gates {
            let targets: Vec<String> = g.targets.iter().map(|t| t.to_string()).collect();
            write!(f, "{} {}", g.gate.name(), targets.join(" "))?;
            if let Gate::Custom(m) = &g.gate {
                let rows: Vec<String> = m
                    .row_iter()
                    .map(|r| {
                        r.iter()
                            .map(|z| crate::io::format_complex_exact(*z))
                            .collect::<Vec<_>>()
                            .join(", ")
                    })
                    .collect();
                write!(f, " : {}", rows.join("; "))?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

pub fn qubit_place(q: usize, bit: u8) -> String {
    format!("q{q}.{bit}")
}

/// `n` juxtaposed bits with places `q{i}.0`, `q{i}.1` and transitions
/// `q{i}.u`, `q{i}.d`; initially all zero. Qubit 0 is the most significant
/// bit of the canonical marking index.
pub fn n_qubit_net(n: usize) -> Result<SystemNet> {
    if n == 0 || n > MAX_QUBITS {
        return Err(QpnError::InvalidCircuit(format!(
            "qubit count must be between 1 and {MAX_QUBITS}, got {n}"
        )));
    }
    let places = Universe::new((0..n).flat_map(|q| [qubit_place(q, 0), qubit_place(q, 1)]))?;
    let transitions = Universe::new((0..n).flat_map(|q| [format!("q{q}.u"), format!("q{q}.d")]))?;
    let mut pre = Vec::with_capacity(2 * n);
    let mut post = Vec::with_capacity(2 * n);
    for q in 0..n {
        let zero = Multiset::element(&places, 2 * q);
        let one = Multiset::element(&places, 2 * q + 1);
        pre.push(zero.clone());
        post.push(one.clone());
        pre.push(one);
        post.push(zero);
    }
    let net = NetStructure::new(Arc::clone(&places), transitions, pre, post)?;
    let m0 = Multiset::from_exponents(&places, (0..2 * n).map(|i| u64::from(i % 2 == 0)).collect())?;
    SystemNet::new(net, m0)
}

/// Bit of qubit `q` in basis index `x` of an `n`-qubit register.
fn bit(x: usize, q: usize, n: usize) -> usize {
    (x >> (n - 1 - q)) & 1
}

/// Concurrence flipping exactly the qubits whose bits differ.
fn flip_step(sys: &SystemNet, qubits: &[usize], from: &[usize], to: &[usize]) -> Multiset {
    let mut exps = vec![0u64; sys.transitions().len()];
    for ((&q, &a), &b) in qubits.iter().zip(from).zip(to) {
        if a != b {
            exps[2 * q + a] = 1;
        }
    }
    Multiset::from_exponents(sys.transitions(), exps).expect("sized to transitions")
}

/// Gate QPN on the `n`-qubit net. Rules match only the target qubits'
/// places, so the operator acts as the identity on every other qubit:
/// for local input bits `b` and output bits `b'` the concurrence flipping
/// the differing targets has rate `U[b', b]`; everything else rates 0.
pub fn gate_qpn(app: &GateApp, n: usize) -> Result<Qpn> {
    let mut c = Circuit::new(n)?;
    c.push(app.gate.clone(), &app.targets)?;
    let sys = n_qubit_net(n)?;
    let u = app.gate.matrix();
    let k = app.targets.len();
    let mut rate = RateFunction::constant(Complex64::new(0.0, 0.0));
    for b in 0..1usize << k {
        let from: Vec<usize> = (0..k).map(|j| bit(b, j, k)).collect();
        let pattern: Vec<(usize, u64)> = app.targets.iter().zip(&from).map(|(&q, &v)| (2 * q + v, 1)).collect();
        for b2 in 0..1usize << k {
            let z = u[(b2, b)];
            if z == Complex64::new(0.0, 0.0) {
                continue;
            }
            let to: Vec<usize> = (0..k).map(|j| bit(b2, j, k)).collect();
            rate.rules.push(RateRule::new(
                MarkingPattern::Partial(pattern.clone()),
                flip_step(&sys, &app.targets, &from, &to),
                z,
            ));
        }
    }
    Qpn::new(sys, rate)
}

/// QPN on `n_qubit_net(n)` reading `r_m(t) = A[m', m]` off the matrix for
/// the unique concurrence `t` taking `m` to `m'`.
pub fn flatten(a: &DMatrix<Complex64>) -> Result<Qpn> {
    let dim = a.nrows();
    if !a.is_square() || dim < 2 || !dim.is_power_of_two() {
        return Err(QpnError::InvalidCircuit(format!(
            "flatten needs a 2^n x 2^n matrix, got {}x{}",
            a.nrows(),
            a.ncols()
        )));
    }
    let n = dim.trailing_zeros() as usize;
    let sys = n_qubit_net(n)?;
    let all: Vec<usize> = (0..n).collect();
    let marking = |x: usize| -> Result<Multiset> {
        let exps = (0..2 * n).map(|i| u64::from(i % 2 == bit(x, i / 2, n))).collect();
        Multiset::from_exponents(sys.places(), exps)
    };
    let mut rate = RateFunction::constant(Complex64::new(0.0, 0.0));
    for x in 0..dim {
        let from: Vec<usize> = all.iter().map(|&q| bit(x, q, n)).collect();
        for y in 0..dim {
            let z = a[(y, x)];
            if z == Complex64::new(0.0, 0.0) {
                continue;
            }
            let to: Vec<usize> = all.iter().map(|&q| bit(y, q, n)).collect();
            rate.rules.push(RateRule::new(
                MarkingPattern::Exact(marking(x)?),
                flip_step(&sys, &all, &from, &to),
                z,
            ));
        }
    }
    Qpn::new(sys, rate)
}

/// Monomial product of the gate QPNs in circuit order, dropping
/// contractions of rate zero. The empty circuit compiles to the unit.
pub fn compile(c: &Circuit) -> Result<RatedGraph> {
    let cap = 1usize << c.qubits();
    let mut acc: Option<RatedGraph> = None;
    for app in c.gates() {
        let g = gate_qpn(app, c.qubits())?.rated_graph(cap)?;
        let g = g.with_edges(
            g.edges()
                .iter()
                .filter(|e| e.rate != Complex64::new(0.0, 0.0))
                .cloned()
                .collect(),
        )?;
        acc = Some(match acc {
            None => g,
            Some(prev) => product(&prev, &g, true)?,
        });
    }
    match acc {
        Some(g) => Ok(g),
        None => {
            let sys = n_qubit_net(c.qubits())?;
            let q = Qpn::new(sys, RateFunction::default())?;
            Ok(unit(&q.rated_graph(cap)?))
        }
    }
}

/// Full register operator of one gate, built from its action on basis states.
pub fn embed(app: &GateApp, n: usize) -> DMatrix<Complex64> {
    let dim = 1usize << n;
    let k = app.targets.len();
    let u = app.gate.matrix();
    let mut m = DMatrix::zeros(dim, dim);
    for x in 0..dim {
        let b = app.targets.iter().fold(0usize, |acc, &q| (acc << 1) | bit(x, q, n));
        for b2 in 0..1usize << k {
            let mut y = x;
            for (j, &q) in app.targets.iter().enumerate() {
                let shift = n - 1 - q;
                y = (y & !(1 << shift)) | (bit(b2, j, k) << shift);
            }
            m[(y, x)] += u[(b2, b)];
        }
    }
    m
}

/// Reference operator: `G_k ... G_2 G_1`.
pub fn circuit_matrix(c: &Circuit) -> DMatrix<Complex64> {
    let dim = 1usize << c.qubits();
    c.gates()
        .iter()
        .fold(DMatrix::identity(dim, dim), |acc, g| embed(g, c.qubits()) * acc)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TeleportOutcome {
    /// Run every measurement branch.
    All,
    /// Bits measured on the message qubit and Alice's qubit.
    Fixed(u8, u8),
    Sampled(u64),
}

#[derive(Debug, Clone)]
pub struct TeleportBranch {
    pub outcome: (u8, u8),
    pub probability: f64,
    /// Bob's qubit after correction, over `|0>`, `|1>`.
    pub bob: [Complex64; 2],
    /// `|<psi|bob>|` against the message state.
    pub fidelity: f64,
}

#[derive(Debug, Clone)]
pub struct TeleportReport {
    pub c: Complex64,
    pub d: Complex64,
    pub branches: Vec<TeleportBranch>,
}

impl TeleportReport {
    pub fn passed(&self, tol: f64) -> bool {
        self.branches.iter().all(|b| b.fidelity >= 1.0 - tol)
    }
}

/// Qubit roles in the teleportation register.
const MSG: usize = 0;
const ALICE: usize = 1;
const BOB: usize = 2;

/// Bob's correction for measured bits `(message, alice)`: X if Alice's bit
/// is set, then Z if the message bit is set. Z is built as `S S`.
fn correction(outcome: (u8, u8)) -> Result<Circuit> {
    let mut c = Circuit::new(3)?;
    if outcome.1 == 1 {
        c.push(Gate::X, &[BOB])?;
    }
    if outcome.0 == 1 {
        c.push(Gate::S, &[BOB])?;
        c.push(Gate::S, &[BOB])?;
    }
    Ok(c)
}

/// Teleports `c|0> + d|1>` from the message qubit to Bob's qubit through a
/// Bell pair prepared as H then CNOT.
pub fn teleport(c: Complex64, d: Complex64, outcome: TeleportOutcome, tol: f64) -> Result<TeleportReport> {
    let norm = (c.norm_sqr() + d.norm_sqr()).sqrt();
    if (norm - 1.0).abs() > tol {
        return Err(QpnError::InvalidCircuit(format!(
            "message state must be normalised, |c|^2 + |d|^2 = {}",
            norm * norm
        )));
    }
    let protocol = Circuit::new(3)?
        .with(Gate::H, &[ALICE])?
        .with(Gate::Cnot, &[ALICE, BOB])?
        .with(Gate::Cnot, &[MSG, ALICE])?
        .with(Gate::H, &[MSG])?;
    let g = compile(&protocol)?;
    let space = Arc::clone(g.space());
    let mut amps = vec![Complex64::new(0.0, 0.0); 8];
    amps[0b000] = c;
    amps[0b100] = d;
    let psi = Superposition::new(Arc::clone(&space), amps)?;
    let before = g.evolve(&psi, 1)?;

    let places = space.places();
    let measured: Vec<usize> = [MSG, ALICE].iter().flat_map(|&q| [2 * q, 2 * q + 1]).collect();
    let outcomes: Vec<Outcome> = match outcome {
        TeleportOutcome::All => (0..4u8)
            .map(|k| branch_marking(places, (k >> 1, k & 1)).map(Outcome::Marking))
            .collect::<Result<_>>()?,
        TeleportOutcome::Fixed(a, b) => {
            if a > 1 || b > 1 {
                return Err(QpnError::InvalidCircuit("measurement bits must be 0 or 1".into()));
            }
            vec![Outcome::Marking(branch_marking(places, (a, b))?)]
        }
        TeleportOutcome::Sampled(seed) => vec![Outcome::Sampled(seed)],
    };

    let mut branches = Vec::with_capacity(outcomes.len());
    for o in outcomes {
        let m = before.measure(&measured, o)?;
        let bits = (m.outcome.get(2 * MSG + 1) as u8, m.outcome.get(2 * ALICE + 1) as u8);
        let fixed = compile(&correction(bits)?)?.evolve(&m.collapsed, 1)?;
        let (_, bob) = fixed.normalize(Norm::L2)?.factor_state(&[2 * BOB, 2 * BOB + 1])?;
        let fidelity = (c.conj() * bob[0] + d.conj() * bob[1]).norm();
        branches.push(TeleportBranch {
            outcome: bits,
            probability: m.probability,
            bob: [bob[0], bob[1]],
            fidelity,
        });
    }
    Ok(TeleportReport { c, d, branches })
}

fn branch_marking(places: &Arc<Universe>, bits: (u8, u8)) -> Result<Multiset> {
    let mut exps = vec![0u64; places.len()];
    exps[2 * MSG + bits.0 as usize] = 1;
    exps[2 * ALICE + bits.1 as usize] = 1;
    Multiset::from_exponents(places, exps)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::net::{check_properties, explore};
    use crate::quantum::max_abs_diff;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn gate_matrix(gate: Gate, targets: &[usize], n: usize) -> DMatrix<Complex64> {
        gate_qpn(
            &GateApp {
                gate,
                targets: targets.to_vec(),
            },
            n,
        )
        .unwrap()
        .rate_matrix(1 << n)
        .unwrap()
        .into_matrix()
    }

    #[test]
    fn qubit_net_shapes() {
        let two = n_qubit_net(2).unwrap();
        let rg = explore(&two, 100).unwrap();
        let names: Vec<String> = rg.space().markings().iter().map(|m| m.to_string()).collect();
        assert_eq!(names, ["q0.0 q1.0", "q0.0 q1.1", "q0.1 q1.0", "q0.1 q1.1"]);
        let r = check_properties(&two, &rg);
        assert!(r.loop_free && r.reversible && r.pure && r.simple && r.safe && r.reduced);

        let three = explore(&n_qubit_net(3).unwrap(), 100).unwrap();
        assert_eq!(three.space().len(), 8);
        for v in 0..8 {
            assert_eq!(three.edges().iter().filter(|e| e.src == v).count(), 3);
        }
        assert_eq!(explore(&n_qubit_net(1).unwrap(), 10).unwrap().space().len(), 2);
        assert!(n_qubit_net(0).is_err());
    }

    #[test]
    fn printed_gate_matrices() {
        let h = 1.0 / 2f64.sqrt();
        let hm = gate_matrix(Gate::H, &[0], 1);
        assert!(
            max_abs_diff(
                &hm,
                &DMatrix::from_row_slice(2, 2, &[c(h, 0.0), c(h, 0.0), c(h, 0.0), c(-h, 0.0)])
            ) == 0.0
        );
        let tm = gate_matrix(Gate::T, &[0], 1);
        assert!((tm[(1, 1)] - c(h, h)).norm() < 1e-15);
        let cx = gate_matrix(Gate::Cnot, &[0, 1], 2);
        assert_eq!(cx, Gate::Cnot.matrix());
    }

    #[test]
    fn cnot_rules_match_the_rate_function_style() {
        let q = gate_qpn(
            &GateApp {
                gate: Gate::Cnot,
                targets: vec![0, 1],
            },
            2,
        )
        .unwrap();
        let sys = &q.sys;
        let m = |s: &str| Multiset::parse(sys.places(), s).unwrap();
        let t = |s: &str| Multiset::parse(sys.transitions(), s).unwrap();
        let one = c(1.0, 0.0);
        assert_eq!(q.rate.rate(&m("q0.0 q1.0"), &t("1")), one);
        assert_eq!(q.rate.rate(&m("q0.0 q1.1"), &t("1")), one);
        assert_eq!(q.rate.rate(&m("q0.1 q1.0"), &t("q1.u")), one);
        assert_eq!(q.rate.rate(&m("q0.1 q1.1"), &t("q1.d")), one);
        assert_eq!(q.rate.rate(&m("q0.1 q1.1"), &t("1")), c(0.0, 0.0));
    }

    #[test]
    fn placement_matches_kronecker_oracle() {
        let id = DMatrix::<Complex64>::identity(2, 2);
        let h = Gate::H.matrix();
        assert_eq!(gate_matrix(Gate::H, &[0], 2), h.kronecker(&id));
        assert_eq!(gate_matrix(Gate::H, &[1], 2), id.kronecker(&h));
        assert_eq!(gate_matrix(Gate::Cnot, &[0, 1], 3), Gate::Cnot.matrix().kronecker(&id));
        // reversed and non-adjacent placements agree with the basis-action embedding
        for targets in [[1usize, 0], [0, 2], [2, 0]] {
            let app = GateApp {
                gate: Gate::Cnot,
                targets: targets.to_vec(),
            };
            assert_eq!(gate_matrix(Gate::Cnot, &targets, 3), embed(&app, 3));
        }
    }

    #[test]
    fn flatten_round_trips() {
        let cx = Gate::Cnot.matrix();
        assert_eq!(flatten(&cx).unwrap().rate_matrix(4).unwrap().into_matrix(), cx);
        let id = DMatrix::<Complex64>::identity(4, 4);
        let q = flatten(&id).unwrap();
        assert_eq!(q.rate_matrix(4).unwrap().into_matrix(), id);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let a = DMatrix::from_fn(4, 4, |_, _| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
        let back = flatten(&a).unwrap().rate_matrix(4).unwrap().into_matrix();
        assert!(max_abs_diff(&a, &back) <= 1e-15);
        assert!(flatten(&DMatrix::identity(3, 3)).is_err());
    }

    #[test]
    fn gate_qpns_are_unitary() {
        for (gate, targets, n) in [
            (Gate::H, vec![1], 2),
            (Gate::S, vec![0], 1),
            (Gate::T, vec![2], 3),
            (Gate::X, vec![0], 2),
            (Gate::Z, vec![1], 2),
            (Gate::Cnot, vec![2, 0], 3),
        ] {
            let q = gate_qpn(&GateApp { gate, targets }, n).unwrap();
            assert!(q.rate_matrix(1 << n).unwrap().normalize_rows().is_unitary(1e-12));
        }
    }

    #[test]
    fn bell_preparation() {
        let circuit = Circuit::new(2)
            .unwrap()
            .with(Gate::H, &[0])
            .unwrap()
            .with(Gate::Cnot, &[0, 1])
            .unwrap();
        let g = compile(&circuit).unwrap();
        let out = g.evolve(&Superposition::basis(g.space(), 0), 1).unwrap();
        let h = 1.0 / 2f64.sqrt();
        let expected = [c(h, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(h, 0.0)];
        for (z, e) in out.amplitudes().iter().zip(expected) {
            assert!((z - e).norm() < 1e-15);
        }
    }

    #[test]
    fn empty_circuit_is_identity() {
        let g = compile(&Circuit::new(2).unwrap()).unwrap();
        assert_eq!(g.rate_matrix().into_matrix(), DMatrix::identity(4, 4));
    }

    #[test]
    fn compile_matches_circuit_matrix() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..30 {
            let n = rng.random_range(1..=3usize);
            let mut circuit = Circuit::new(n).unwrap();
            for _ in 0..rng.random_range(0..=5) {
                let pick = rng.random_range(0..6);
                if pick == 5 && n >= 2 {
                    let a = rng.random_range(0..n);
                    let b = (a + rng.random_range(1..n)) % n;
                    circuit.push(Gate::Cnot, &[a, b]).unwrap();
                } else {
                    let gate = [Gate::H, Gate::S, Gate::T, Gate::X, Gate::Z][pick % 5].clone();
                    circuit.push(gate, &[rng.random_range(0..n)]).unwrap();
                }
            }
            let compiled = compile(&circuit).unwrap().rate_matrix().into_matrix();
            assert!(max_abs_diff(&compiled, &circuit_matrix(&circuit)) <= 1e-12);
        }
    }

    #[test]
    fn z_is_s_squared_and_sh_differs_from_hs() {
        let ss = Circuit::new(1)
            .unwrap()
            .with(Gate::S, &[0])
            .unwrap()
            .with(Gate::S, &[0])
            .unwrap();
        assert!(max_abs_diff(&circuit_matrix(&ss), &Gate::Z.matrix()) < 1e-15);
        let sh = Circuit::new(1)
            .unwrap()
            .with(Gate::S, &[0])
            .unwrap()
            .with(Gate::H, &[0])
            .unwrap();
        let hs = Circuit::new(1)
            .unwrap()
            .with(Gate::H, &[0])
            .unwrap()
            .with(Gate::S, &[0])
            .unwrap();
        assert!(
            max_abs_diff(
                &compile(&sh).unwrap().rate_matrix().into_matrix(),
                &compile(&hs).unwrap().rate_matrix().into_matrix()
            ) > 0.1
        );
    }

    #[test]
    fn invalid_circuits() {
        let mut circuit = Circuit::new(2).unwrap();
        assert!(circuit.push(Gate::Cnot, &[0, 0]).is_err());
        assert!(circuit.push(Gate::H, &[2]).is_err());
        assert!(circuit.push(Gate::H, &[0, 1]).is_err());
        assert!(circuit.push(Gate::Custom(DMatrix::identity(3, 3)), &[0]).is_err());
    }

    #[test]
    fn teleport_basis_state() {
        let r = teleport(c(1.0, 0.0), c(0.0, 0.0), TeleportOutcome::Fixed(0, 0), 1e-9).unwrap();
        let b = &r.branches[0];
        assert!((b.probability - 0.25).abs() < 1e-12);
        assert!((b.bob[0].norm() - 1.0).abs() < 1e-12);
        assert!(r.passed(1e-9));
    }

    #[test]
    fn teleport_all_branches() {
        let h = 1.0 / 2f64.sqrt();
        let r = teleport(c(h, 0.0), c(h, 0.0), TeleportOutcome::All, 1e-9).unwrap();
        assert_eq!(r.branches.len(), 4);
        let seen: Vec<(u8, u8)> = r.branches.iter().map(|b| b.outcome).collect();
        assert_eq!(seen, [(0, 0), (0, 1), (1, 0), (1, 1)]);
        for b in &r.branches {
            assert!((b.probability - 0.25).abs() < 1e-12);
            assert!(b.fidelity > 1.0 - 1e-12);
        }
    }

    #[test]
    fn teleport_without_correction_fails_on_flipped_branches() {
        // the correction table is load-bearing: skipping it loses fidelity
        let (cc, dd) = (c(0.6, 0.0), c(0.0, 0.8));
        let r = teleport(cc, dd, TeleportOutcome::All, 1e-9).unwrap();
        assert!(r.passed(1e-9));
        let identity = compile(&Circuit::new(3).unwrap()).unwrap();
        assert_eq!(identity.rate_matrix().into_matrix(), DMatrix::identity(8, 8));
        let x_branch = &r.branches[1];
        let raw_overlap = (cc.conj() * x_branch.bob[1] + dd.conj() * x_branch.bob[0]).norm();
        assert!(raw_overlap < 0.99);
    }

    #[test]
    fn teleport_rejects_unnormalised_input() {
        assert!(teleport(c(1.0, 0.0), c(1.0, 0.0), TeleportOutcome::All, 1e-9).is_err());
    }
}
