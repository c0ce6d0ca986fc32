use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use nalgebra::DMatrix;
use num_complex::Complex64;

use qpn_core::circuits::{circuit_matrix, compile, teleport, TeleportOutcome};
use qpn_core::compose::{self, Composed, Op};
use qpn_core::error::{QpnError, Result};
use qpn_core::gspn::{eliminate_vanishing, simulate, solve_absorption};
use qpn_core::io::{self, format_complex, format_real, Model};
use qpn_core::multiset::Multiset;
use qpn_core::net::{check_properties, explore, semiflows, SemiflowKind, StateSpace, DEFAULT_STATE_CAP};
use qpn_core::quantum::{
    check_cor1, cor1_harness, max_abs_diff, Norm, Outcome, Qpn, RateFunction, RatedGraph, Superposition,
};
use qpn_core::{builtin, ErrorKind};

fn schema_err(path: impl Into<String>, message: impl Into<String>) -> QpnError {
    QpnError::Schema {
        path: path.into(),
        message: message.into(),
    }
}

const DEFAULT_TOL: f64 = 1e-9;

#[derive(Parser)]
#[command(name = "qpn", version, about = "Quantum Petri net engine")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Reachability graph and structural properties of a net.
    Reach {
        net: PathBuf,
        #[arg(long, default_value_t = DEFAULT_STATE_CAP)]
        max_states: usize,
        /// Write the graph in DOT form to this file.
        #[arg(long)]
        dot: Option<PathBuf>,
    },
    /// Rate matrix `R[m', m]` of a QPN or composed graph.
    Ratematrix {
        model: PathBuf,
        /// Divide each row by its L2 norm.
        #[arg(long)]
        normal: bool,
        #[arg(long, default_value_t = DEFAULT_STATE_CAP)]
        max_states: usize,
        #[arg(long)]
        dot: Option<PathBuf>,
    },
    /// Evolve a superposition by repeated edge-sum steps.
    Evolve {
        model: PathBuf,
        /// Marking monomial or superposition JSON file; defaults to `m0`.
        #[arg(long)]
        state: Option<String>,
        #[arg(long, default_value_t = 1)]
        steps: usize,
        #[arg(long, value_enum, default_value_t = NormArg::L2)]
        norm: NormArg,
        #[arg(long, default_value_t = DEFAULT_STATE_CAP)]
        max_states: usize,
    },
    /// Measure a superposition, whole or on a subset of places.
    Measure {
        model: PathBuf,
        #[arg(long)]
        state: Option<String>,
        /// Evolution steps before measuring.
        #[arg(long, default_value_t = 0)]
        steps: usize,
        /// Comma-separated places of the measured subsystem.
        #[arg(long, value_delimiter = ',')]
        places: Vec<String>,
        #[arg(long)]
        shots: Option<u64>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value_t = DEFAULT_STATE_CAP)]
        max_states: usize,
    },
    /// Compose rated graphs built from QPN or composed files.
    Compose {
        #[arg(long, value_enum)]
        op: OpArg,
        a: PathBuf,
        b: Option<PathBuf>,
        /// Scalar for `scale`, as an amplitude expression.
        #[arg(long, allow_hyphen_values = true)]
        factor: Option<String>,
        /// Keep zero-rate contractions in products.
        #[arg(long)]
        keep_zero: bool,
        #[arg(short, long)]
        output: Option<PathBuf>,
        #[arg(long, default_value_t = DEFAULT_STATE_CAP)]
        max_states: usize,
    },
    /// Compile a circuit file to the product of its gate QPNs.
    Compile {
        circuit: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
        /// Compare against the reference operator product.
        #[arg(long)]
        verify: bool,
    },
    /// Unitarity, structural properties and the conjugate-symmetry criterion.
    Check {
        model: PathBuf,
        #[arg(long)]
        unitary: bool,
        #[arg(long)]
        properties: bool,
        #[arg(long)]
        cor1: bool,
        #[arg(long, default_value_t = DEFAULT_STATE_CAP)]
        max_states: usize,
    },
    /// Place and transition semiflows.
    Invariants { net: PathBuf },
    /// Stochastic analysis of GSPN files.
    Gspn {
        #[command(subcommand)]
        action: GspnAction,
    },
    /// Composition identities and algebraic laws on random rate functions.
    Laws {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 100)]
        trials: u64,
        /// Base QPN; defaults to the two-qubit net.
        #[arg(long)]
        model: Option<PathBuf>,
    },
    /// Teleport `c|0> + d|1>` and check Bob's qubit.
    Teleport {
        #[arg(long, allow_hyphen_values = true, default_value = "1/sqrt(2)")]
        c: String,
        #[arg(long, allow_hyphen_values = true, default_value = "1/sqrt(2)")]
        d: String,
        /// Measured bits on (message, Alice) such as `01`; all four if absent.
        #[arg(long, conflicts_with = "seed")]
        outcome: Option<String>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Conjugate-symmetry criterion on generated reversible nets.
    Cor1Harness {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 50)]
        instances: u64,
        /// Write failures with their witness matrices to this file.
        #[arg(long)]
        deviations: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum GspnAction {
    /// Absorption probabilities after vanishing elimination.
    Solve {
        gspn: PathBuf,
        #[arg(long, default_value_t = DEFAULT_STATE_CAP)]
        max_states: usize,
    },
    /// Seeded token-game replications.
    Simulate {
        gspn: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 10_000)]
        reps: u64,
        #[arg(long, default_value_t = 10_000)]
        steps: u64,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum NormArg {
    L2,
    Moduli,
}

#[derive(Clone, Copy, ValueEnum)]
enum OpArg {
    Zero,
    Unit,
    Scale,
    Product,
    Sum,
    Kron,
    Kronsum,
}

/// Outcome of a command: text for stdout and whether its checks held.
struct Report {
    text: String,
    passed: bool,
}

impl Report {
    fn ok(text: String) -> Self {
        Report { text, passed: true }
    }
}

fn tolerance() -> Result<f64> {
    match std::env::var("QPN_TOL") {
        Ok(v) => v
            .parse::<f64>()
            .ok()
            .filter(|t| t.is_finite() && *t > 0.0)
            .ok_or_else(|| schema_err("QPN_TOL", format!("expected a positive number, got `{v}`"))),
        Err(_) => Ok(DEFAULT_TOL),
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| schema_err(path.display().to_string(), e.to_string()))
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(QpnError::from)
}

fn load(path: &Path) -> Result<Model> {
    io::parse_model(&read(path)?).map_err(|e| match e {
        QpnError::Schema { path: p, message } => schema_err(format!("{}: {p}", path.display()), message),
        other => other,
    })
}

fn file_name(path: &Path) -> String {
    path.file_name()
        .map_or_else(|| path.display().to_string(), |n| n.to_string_lossy().into_owned())
}

fn as_qpn(model: Model) -> Result<Qpn> {
    match model {
        Model::Qpn(q) => Ok(q),
        Model::Net(sys) => Qpn::new(sys, RateFunction::default()),
        Model::Gspn(g) => qpn_core::gspn::to_qpn(&g),
        Model::Composed(_) => Err(schema_err("$.kind", "expected a net, QPN or GSPN document")),
    }
}

fn rated(model: Model, cap: usize) -> Result<RatedGraph> {
    match model {
        Model::Composed(c) => Ok(c.graph),
        m => as_qpn(m)?.rated_graph(cap),
    }
}

fn marking_label(m: &Multiset) -> String {
    m.to_string()
}

fn state_arg(state: Option<&str>, g: &RatedGraph) -> Result<Superposition> {
    let space = g.space();
    match state {
        None => Ok(Superposition::basis(space, g.initial())),
        Some(s) if Path::new(s).is_file() => io::parse_superposition(&read(Path::new(s))?, space),
        Some(s) => Superposition::ket(space, &Multiset::parse(space.places(), s)?),
    }
}

fn place_indices(space: &StateSpace, names: &[String]) -> Result<Vec<usize>> {
    names
        .iter()
        .map(|n| {
            space
                .places()
                .position(n)
                .ok_or_else(|| QpnError::UnknownElement(n.clone()))
        })
        .collect()
}

fn matrix_text(out: &mut String, space: &StateSpace, m: &DMatrix<Complex64>) {
    let names: Vec<String> = space.markings().iter().map(marking_label).collect();
    writeln!(out, "# order: {}", names.join(" | ")).unwrap();
    for i in 0..m.nrows() {
        let row: Vec<String> = (0..m.ncols()).map(|j| format_complex(m[(i, j)])).collect();
        writeln!(out, "{}", row.join("  ")).unwrap();
    }
}

fn cmd_reach(net: &Path, cap: usize, dot: Option<&Path>) -> Result<Report> {
    let model = load(net)?;
    let sys = model
        .system()
        .ok_or_else(|| schema_err("$.kind", "composed graphs carry no net"))?;
    let rg = explore(sys, cap)?;
    let mut out = String::new();
    writeln!(out, "markings: {}", rg.space().len()).unwrap();
    for (i, m) in rg.space().markings().iter().enumerate() {
        let tag = if i == rg.initial() { "  (initial)" } else { "" };
        writeln!(out, "  {i}: {}{tag}", marking_label(m)).unwrap();
    }
    writeln!(out, "edges: {}", rg.edges().len()).unwrap();
    for e in rg.edges() {
        writeln!(out, "  {} -{}-> {}", e.src, rg.transitions().name(e.transition), e.dst).unwrap();
    }
    let p = check_properties(sys, &rg);
    writeln!(
        out,
        "properties: loop-free={} reversible={} pure={} simple={} safe={} reduced={}",
        p.loop_free, p.reversible, p.pure, p.simple, p.safe, p.reduced
    )
    .unwrap();
    if let Some(path) = dot {
        write(path, &io::rg_to_dot(&rg))?;
    }
    Ok(Report::ok(out))
}

fn cmd_ratematrix(model: &Path, normal: bool, cap: usize, dot: Option<&Path>) -> Result<Report> {
    let g = rated(load(model)?, cap)?;
    let r = g.rate_matrix();
    let r = if normal { r.normalize_rows() } else { r };
    let mut out = String::new();
    matrix_text(&mut out, g.space(), r.matrix());
    if let Some(path) = dot {
        write(path, &io::rated_to_dot(&g, true))?;
    }
    Ok(Report::ok(out))
}

fn superposition_text(out: &mut String, s: &Superposition, norm: Norm) {
    let total = s.norm(norm);
    for (m, z) in s.space().markings().iter().zip(s.amplitudes()) {
        let p = match norm {
            Norm::L2 if total > 0.0 => z.norm_sqr() / (total * total),
            Norm::SumOfModuli if total > 0.0 => z.norm() / total,
            _ => 0.0,
        };
        writeln!(out, "{}  {}  {}", marking_label(m), format_complex(*z), format_real(p)).unwrap();
    }
}

fn cmd_evolve(model: &Path, state: Option<&str>, steps: usize, norm: NormArg, cap: usize) -> Result<Report> {
    let g = rated(load(model)?, cap)?;
    let s = g.evolve(&state_arg(state, &g)?, steps)?;
    let norm = match norm {
        NormArg::L2 => Norm::L2,
        NormArg::Moduli => Norm::SumOfModuli,
    };
    let mut out = String::new();
    writeln!(
        out,
        "# steps: {steps}, norm: {}",
        if norm == Norm::L2 { "l2" } else { "moduli" }
    )
    .unwrap();
    writeln!(out, "# marking  amplitude  probability").unwrap();
    superposition_text(&mut out, &s, norm);
    Ok(Report::ok(out))
}

#[allow(clippy::too_many_arguments)]
fn cmd_measure(
    model: &Path,
    state: Option<&str>,
    steps: usize,
    places: &[String],
    shots: Option<u64>,
    seed: Option<u64>,
    cap: usize,
) -> Result<Report> {
    let g = rated(load(model)?, cap)?;
    let s = g.evolve(&state_arg(state, &g)?, steps)?;
    let space = g.space();
    let mut out = String::new();
    let subsystem = if places.is_empty() {
        (0..space.places().len()).collect()
    } else {
        place_indices(space, places)?
    };
    match (shots, seed) {
        (Some(n), seed) => {
            let seed = seed.unwrap_or(0);
            let counts = s.sample(n, seed)?;
            let mut by_outcome: Vec<(Multiset, u64)> = Vec::new();
            for (i, c) in counts {
                let key = space.marking(i).restrict(&subsystem);
                match by_outcome.iter_mut().find(|(m, _)| *m == key) {
                    Some(e) => e.1 += c,
                    None => by_outcome.push((key, c)),
                }
            }
            by_outcome.sort_by(|a, b| a.0.canonical_cmp(&b.0));
            writeln!(out, "# shots: {n}, seed: {seed}").unwrap();
            for (m, c) in by_outcome {
                writeln!(out, "{}  {c}  {}", marking_label(&m), format_real(c as f64 / n as f64)).unwrap();
            }
        }
        (None, Some(seed)) => {
            let m = s.measure(&subsystem, Outcome::Sampled(seed))?;
            writeln!(out, "outcome: {}", marking_label(&m.outcome)).unwrap();
            writeln!(out, "probability: {}", format_real(m.probability)).unwrap();
            writeln!(out, "# collapsed state").unwrap();
            superposition_text(&mut out, &m.collapsed, Norm::L2);
        }
        (None, None) => {
            writeln!(out, "# outcome  probability").unwrap();
            for (m, p) in s.outcome_distribution(&subsystem)? {
                writeln!(out, "{}  {}", marking_label(&m), format_real(p)).unwrap();
            }
        }
    }
    Ok(Report::ok(out))
}

#[allow(clippy::too_many_arguments)]
fn cmd_compose(
    op: OpArg,
    a: &Path,
    b: Option<&Path>,
    factor: Option<&str>,
    keep_zero: bool,
    output: Option<&Path>,
    cap: usize,
) -> Result<Report> {
    let ga = rated(load(a)?, cap)?;
    let mut operands = vec![file_name(a)];
    let second = |operands: &mut Vec<String>| -> Result<RatedGraph> {
        let b = b.ok_or_else(|| QpnError::Composition("this operation needs two operands".into()))?;
        operands.push(file_name(b));
        rated(load(b)?, cap)
    };
    let (op, graph) = match op {
        OpArg::Zero => (Op::Zero, compose::zero(&ga)),
        OpArg::Unit => (Op::Unit, compose::unit(&ga)),
        OpArg::Scale => {
            let text = factor.ok_or_else(|| QpnError::Composition("scale needs --factor".into()))?;
            let c = io::parse_amplitude(text)?;
            (Op::Scale(c), compose::scale(c, &ga))
        }
        OpArg::Product => (Op::Product, compose::product(&ga, &second(&mut operands)?, !keep_zero)?),
        OpArg::Sum => (Op::Sum, compose::sum(&ga, &second(&mut operands)?)?),
        OpArg::Kron => (Op::Kron, compose::kron(&ga, &second(&mut operands)?)?),
        OpArg::Kronsum => (Op::KronSum, compose::kron_sum(&ga, &second(&mut operands)?)?),
    };
    let composed = Composed { op, operands, graph };
    let text = io::to_pretty(&io::composed_to_value(&composed));
    match output {
        Some(path) => {
            write(path, &text)?;
            Ok(Report::ok(format!(
                "{} of {}: {} markings, {} edges\n",
                composed.op,
                composed.operands.join(", "),
                composed.graph.dim(),
                composed.graph.edges().len()
            )))
        }
        None => Ok(Report::ok(text)),
    }
}

fn cmd_compile(circuit: &Path, output: Option<&Path>, verify: bool, tol: f64) -> Result<Report> {
    let c = io::parse_circuit(&read(circuit)?)?;
    let g = compile(&c)?;
    let operands: Vec<String> = c
        .gates()
        .iter()
        .map(|a| {
            let t: Vec<String> = a.targets.iter().map(|q| q.to_string()).collect();
            format!("{} {}", a.gate.name(), t.join(" "))
        })
        .collect();
    let composed = Composed {
        op: Op::Product,
        operands,
        graph: g,
    };
    let text = io::to_pretty(&io::composed_to_value(&composed));
    let mut out = String::new();
    match output {
        Some(path) => {
            write(path, &text)?;
            writeln!(
                out,
                "compiled {} gate(s) on {} qubit(s): {} edges",
                c.gates().len(),
                c.qubits(),
                composed.graph.edges().len()
            )
            .unwrap();
        }
        None => out.push_str(&text),
    }
    let mut passed = true;
    if verify {
        let err = max_abs_diff(composed.graph.rate_matrix().matrix(), &circuit_matrix(&c));
        passed = err <= tol;
        writeln!(
            out,
            "verify: max |compiled - reference| = {} (tol {}) {}",
            format_real(err),
            format_real(tol),
            if passed { "PASS" } else { "FAIL" }
        )
        .unwrap();
    }
    Ok(Report { text: out, passed })
}

fn cmd_check(model: &Path, unitary: bool, properties: bool, cor1: bool, cap: usize, tol: f64) -> Result<Report> {
    let q = as_qpn(load(model)?)?;
    let (unitary, properties, cor1) = if !(unitary || properties || cor1) {
        (true, true, false)
    } else {
        (unitary, properties, cor1)
    };
    let mut out = String::new();
    let mut passed = true;
    if properties {
        let rg = explore(&q.sys, cap)?;
        let p = check_properties(&q.sys, &rg);
        writeln!(
            out,
            "properties: loop-free={} reversible={} pure={} simple={} safe={} reduced={}",
            p.loop_free, p.reversible, p.pure, p.simple, p.safe, p.reduced
        )
        .unwrap();
    }
    if unitary {
        let normal = q.rate_matrix(cap)?.normalize_rows();
        let defect = normal.unitarity_defect();
        let ok = defect <= tol;
        passed &= ok;
        writeln!(
            out,
            "unitary: {} (defect {}, tol {})",
            if ok { "PASS" } else { "FAIL" },
            format_real(defect),
            format_real(tol)
        )
        .unwrap();
    }
    if cor1 {
        let r = check_cor1(&q, cap, tol)?;
        writeln!(
            out,
            "cor1: conjugate-symmetric={} unitary={} defect={}",
            r.conjugate_symmetric,
            r.unitary,
            format_real(r.defect)
        )
        .unwrap();
        for v in &r.violations {
            writeln!(out, "  violation: {v}").unwrap();
        }
        // a counterexample is a symmetric instance that is not unitary
        passed &= !(r.conjugate_symmetric && !r.unitary);
    }
    Ok(Report { text: out, passed })
}

fn semiflow_text(names: &[String], y: &[u64]) -> String {
    y.iter()
        .zip(names)
        .filter(|(k, _)| **k > 0)
        .map(|(k, n)| if *k == 1 { n.clone() } else { format!("{k}*{n}") })
        .collect::<Vec<_>>()
        .join(" + ")
}

fn cmd_invariants(net: &Path) -> Result<Report> {
    let model = load(net)?;
    let sys = model
        .system()
        .ok_or_else(|| schema_err("$.kind", "composed graphs carry no net"))?;
    let mut out = String::new();
    for (kind, label, names) in [
        (SemiflowKind::Place, "place", sys.places().names()),
        (SemiflowKind::Transition, "transition", sys.transitions().names()),
    ] {
        let flows = semiflows(&sys.net, kind);
        writeln!(out, "{label} semiflows: {}", flows.len()).unwrap();
        for y in flows {
            writeln!(out, "  {}", semiflow_text(names, &y)).unwrap();
        }
    }
    Ok(Report::ok(out))
}

fn cmd_gspn(action: &GspnAction) -> Result<Report> {
    let mut out = String::new();
    match action {
        GspnAction::Solve { gspn, max_states } => {
            let g = io::parse_gspn(&read(gspn)?)?;
            let rg = g.explore(*max_states)?;
            let reduced = eliminate_vanishing(&g, &rg)?;
            writeln!(out, "markings: {} ({} tangible)", rg.space().len(), reduced.space.len()).unwrap();
            writeln!(out, "# absorbing class  probability").unwrap();
            for c in solve_absorption(&reduced)? {
                let names: Vec<String> = c.markings.iter().map(marking_label).collect();
                writeln!(out, "{{{}}}  {}", names.join(", "), format_real(c.probability)).unwrap();
            }
        }
        GspnAction::Simulate {
            gspn,
            seed,
            reps,
            steps,
        } => {
            let g = io::parse_gspn(&read(gspn)?)?;
            let r = simulate(&g, *steps, *seed, *reps)?;
            writeln!(out, "# seed: {seed}, replications: {reps}, steps: {steps}").unwrap();
            writeln!(out, "# final marking  count  frequency").unwrap();
            for (m, c) in &r.counts {
                writeln!(
                    out,
                    "{}  {c}  {}",
                    marking_label(m),
                    format_real(*c as f64 / *reps as f64)
                )
                .unwrap();
            }
        }
    }
    Ok(Report::ok(out))
}

fn cmd_laws(seed: u64, trials: u64, model: Option<&Path>) -> Result<Report> {
    let base = match model {
        Some(p) => rated(load(p)?, DEFAULT_STATE_CAP)?,
        None => builtin::two_qubit_qpn()?.rated_graph(DEFAULT_STATE_CAP)?,
    };
    // identities are checked at machine precision unless QPN_TOL is set
    let tol = std::env::var("QPN_TOL").map_or(Ok(1e-12), |_| tolerance())?;
    let report = compose::verify_laws(&base, seed, trials, tol)?;
    let mut out = String::new();
    writeln!(out, "# seed: {seed}, trials: {trials}, tol: {}", format_real(tol)).unwrap();
    for c in &report.checks {
        writeln!(
            out,
            "{}  {}  max error {}",
            if c.passed { "PASS" } else { "FAIL" },
            c.name,
            format_real(c.max_error)
        )
        .unwrap();
    }
    Ok(Report {
        text: out,
        passed: report.all_passed(),
    })
}

fn cmd_teleport(c: &str, d: &str, outcome: Option<&str>, seed: Option<u64>, tol: f64) -> Result<Report> {
    let c = io::parse_amplitude(c)?;
    let d = io::parse_amplitude(d)?;
    let outcome = match (outcome, seed) {
        (Some(bits), _) => {
            let b = bits.as_bytes();
            if b.len() != 2 || !b.iter().all(|x| matches!(x, b'0' | b'1')) {
                return Err(QpnError::InvalidCircuit(format!(
                    "outcome must be two bits such as `01`, got `{bits}`"
                )));
            }
            TeleportOutcome::Fixed(b[0] - b'0', b[1] - b'0')
        }
        (None, Some(s)) => TeleportOutcome::Sampled(s),
        (None, None) => TeleportOutcome::All,
    };
    let r = teleport(c, d, outcome, tol)?;
    let mut out = String::new();
    writeln!(out, "message: c = {}, d = {}", format_complex(r.c), format_complex(r.d)).unwrap();
    writeln!(out, "# outcome  probability  bob0  bob1  fidelity").unwrap();
    for b in &r.branches {
        writeln!(
            out,
            "{}{}  {}  {}  {}  {}",
            b.outcome.0,
            b.outcome.1,
            format_real(b.probability),
            format_complex(b.bob[0]),
            format_complex(b.bob[1]),
            format_real(b.fidelity)
        )
        .unwrap();
    }
    let passed = r.passed(tol);
    writeln!(out, "{}", if passed { "PASS" } else { "FAIL" }).unwrap();
    Ok(Report { text: out, passed })
}

fn cmd_cor1_harness(seed: u64, instances: u64, deviations: Option<&Path>, tol: f64) -> Result<Report> {
    let results = cor1_harness(seed, instances, tol)?;
    let mut out = String::new();
    let mut failures = String::new();
    writeln!(out, "# seed  places  transitions  markings  symmetric  unitary  defect").unwrap();
    for inst in &results {
        let r = &inst.report;
        writeln!(
            out,
            "{}  {}  {}  {}  {}  {}  {}",
            inst.seed,
            inst.qpn.sys.places().len(),
            inst.qpn.sys.transitions().len(),
            r.normal_matrix.nrows(),
            r.conjugate_symmetric,
            if r.unitary { "PASS" } else { "FAIL" },
            format_real(r.defect)
        )
        .unwrap();
        if !r.unitary {
            writeln!(failures, "## seed {}\n", inst.seed).unwrap();
            writeln!(
                failures,
                "model:\n\n```json\n{}```\n",
                io::to_pretty(&io::qpn_to_value(&inst.qpn))
            )
            .unwrap();
            writeln!(
                failures,
                "unitarity defect {} with conjugate-symmetric rates: {}\n",
                format_real(r.defect),
                r.conjugate_symmetric
            )
            .unwrap();
            let space = inst.qpn.rated_graph(DEFAULT_STATE_CAP)?;
            let mut m = String::new();
            matrix_text(&mut m, space.space(), &r.normal_matrix);
            writeln!(failures, "normal rate matrix:\n\n```\n{m}```\n").unwrap();
        }
    }
    let failed = results.iter().filter(|i| !i.report.unitary).count();
    writeln!(
        out,
        "unitary: {} of {} instances",
        results.len() - failed,
        results.len()
    )
    .unwrap();
    if let Some(path) = deviations {
        let mut doc = String::from("# Known deviations\n\n");
        writeln!(
            doc,
            "Generated by `qpn cor1-harness --seed {seed} --instances {instances}` at tolerance {}.\n",
            format_real(tol)
        )
        .unwrap();
        if failed == 0 {
            doc.push_str("Every generated instance with conjugate-symmetric rates had a unitary normal rate matrix.\n");
        } else {
            writeln!(doc, "{failed} instance(s) had a non-unitary normal rate matrix.\n").unwrap();
            doc.push_str(
                "Conjugate symmetry `r_{m'}(t^-1) = conj(r_m(t))` pairs every entry `R[m', m]` with \
                 `R[m, m'] = conj(R[m', m])`, so it makes the rate matrix Hermitian. A Hermitian matrix \
                 is unitary only when its eigenvalues are ±1, and row normalisation does not restore \
                 unitarity in general. The property therefore fails on generic instances; the witnesses \
                 below are the normal rate matrices of the failing instances.\n\n",
            );
            doc.push_str(&failures);
        }
        write(path, &doc)?;
    }
    Ok(Report::ok(out))
}

fn run(cli: Cli) -> Result<Report> {
    let tol = tolerance()?;
    match cli.command {
        Command::Reach { net, max_states, dot } => cmd_reach(&net, max_states, dot.as_deref()),
        Command::Ratematrix {
            model,
            normal,
            max_states,
            dot,
        } => cmd_ratematrix(&model, normal, max_states, dot.as_deref()),
        Command::Evolve {
            model,
            state,
            steps,
            norm,
            max_states,
        } => cmd_evolve(&model, state.as_deref(), steps, norm, max_states),
        Command::Measure {
            model,
            state,
            steps,
            places,
            shots,
            seed,
            max_states,
        } => cmd_measure(&model, state.as_deref(), steps, &places, shots, seed, max_states),
        Command::Compose {
            op,
            a,
            b,
            factor,
            keep_zero,
            output,
            max_states,
        } => cmd_compose(
            op,
            &a,
            b.as_deref(),
            factor.as_deref(),
            keep_zero,
            output.as_deref(),
            max_states,
        ),
        Command::Compile {
            circuit,
            output,
            verify,
        } => cmd_compile(&circuit, output.as_deref(), verify, tol),
        Command::Check {
            model,
            unitary,
            properties,
            cor1,
            max_states,
        } => cmd_check(&model, unitary, properties, cor1, max_states, tol),
        Command::Invariants { net } => cmd_invariants(&net),
        Command::Gspn { action } => cmd_gspn(&action),
        Command::Laws { seed, trials, model } => cmd_laws(seed, trials, model.as_deref()),
        Command::Teleport { c, d, outcome, seed } => cmd_teleport(&c, &d, outcome.as_deref(), seed, tol),
        Command::Cor1Harness {
            seed,
            instances,
            deviations,
        } => cmd_cor1_harness(seed, instances, deviations.as_deref(), tol),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(r) => {
            print!("{}", r.text);
            if r.passed {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(ErrorKind::Verification.exit_code() as u8)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.kind().exit_code() as u8)
        }
    }
}
