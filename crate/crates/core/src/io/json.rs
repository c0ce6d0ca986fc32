//! JSON documents for nets, QPNs, GSPNs, composed rated graphs and
//! superpositions. Complex values are `[re, im]` pairs, plain numbers or
//! amplitude-expression strings; expressions are kept for round trips.

use std::collections::BTreeMap;
use std::sync::Arc;

use num_complex::Complex64;
use serde::de::DeserializeOwned;
use serde::Deserialize;
use serde_json::{json, Map, Value};

use super::amplitude::parse_amplitude_with;
use crate::compose::{Composed, Op};
use crate::error::{QpnError, Result};
use crate::gspn::{GspnNet, GspnPolicy};
use crate::multiset::{Multiset, Universe};
use crate::net::{NetStructure, StateSpace, SystemNet};
use crate::quantum::{MarkingPattern, Qpn, RateFunction, RateRule, RatedEdge, RatedGraph, Superposition};

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
enum MonoDoc {
    Map(BTreeMap<String, u64>),
    Text(String),
}

impl Default for MonoDoc {
    fn default() -> Self {
        MonoDoc::Map(BTreeMap::new())
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
enum CountDoc {
    N(u64),
    Name(String),
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
enum AmpDoc {
    Pair([f64; 2]),
    Real(f64),
    Expr(String),
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct FlowDoc {
    #[serde(rename = "in", default)]
    input: MonoDoc,
    #[serde(default)]
    out: MonoDoc,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RuleDoc {
    /// Exact marking.
    marking: Option<MonoDoc>,
    /// Required counts on some places.
    when: Option<BTreeMap<String, u64>>,
    #[serde(default)]
    step: MonoDoc,
    rate: AmpDoc,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RatesDoc {
    default: Option<AmpDoc>,
    #[serde(default)]
    rules: Vec<RuleDoc>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelDoc {
    #[serde(rename = "$schema")]
    _schema: Option<String>,
    kind: Option<String>,
    #[serde(rename = "description")]
    _description: Option<String>,
    places: Vec<String>,
    transitions: Vec<String>,
    flow: BTreeMap<String, FlowDoc>,
    #[serde(default)]
    m0: BTreeMap<String, CountDoc>,
    rates: Option<RatesDoc>,
    max_card: Option<u64>,
    #[serde(default)]
    constants: BTreeMap<String, f64>,
    #[serde(default)]
    inhibit: BTreeMap<String, MonoDoc>,
    #[serde(default)]
    priority: BTreeMap<String, u32>,
    #[serde(default)]
    weight: BTreeMap<String, AmpDoc>,
}

impl ModelDoc {
    fn has_gspn_fields(&self) -> bool {
        !(self.inhibit.is_empty() && self.priority.is_empty() && self.weight.is_empty())
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct EdgeDoc {
    src: usize,
    dst: usize,
    label: String,
    rate: AmpDoc,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct ComposedDoc {
    #[serde(rename = "$schema")]
    _schema: Option<String>,
    #[serde(rename = "kind")]
    _kind: String,
    op: String,
    factor: Option<AmpDoc>,
    #[serde(default)]
    operands: Vec<String>,
    places: Vec<String>,
    markings: Vec<BTreeMap<String, u64>>,
    initial: usize,
    flows: BTreeMap<String, FlowDoc>,
    edges: Vec<EdgeDoc>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct AmplitudeEntry {
    marking: MonoDoc,
    amp: AmpDoc,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct SuperpositionDoc {
    #[serde(rename = "$schema")]
    _schema: Option<String>,
    #[serde(rename = "kind")]
    _kind: Option<String>,
    places: Vec<String>,
    amplitudes: Vec<AmplitudeEntry>,
}

/// Any model file.
#[derive(Debug, Clone)]
pub enum Model {
    Net(SystemNet),
    Qpn(Qpn),
    Gspn(GspnNet),
    Composed(Composed),
}

impl Model {
    pub fn kind(&self) -> &'static str {
        match self {
            Model::Net(_) => "net",
            Model::Qpn(_) => "qpn",
            Model::Gspn(_) => "gspn",
            Model::Composed(_) => "composed",
        }
    }

    /// Underlying system net; composed graphs have none.
    pub fn system(&self) -> Option<&SystemNet> {
        match self {
            Model::Net(s) => Some(s),
            Model::Qpn(q) => Some(&q.sys),
            Model::Gspn(g) => Some(&g.sys),
            Model::Composed(_) => None,
        }
    }
}

fn typed<T: DeserializeOwned>(v: Value) -> Result<T> {
    serde_path_to_error::deserialize(v).map_err(|e| {
        let path = e.path().to_string();
        QpnError::schema(
            if path == "." { "$".into() } else { format!("$.{path}") },
            e.into_inner().to_string(),
        )
    })
}

fn mono(universe: &Arc<Universe>, doc: &MonoDoc, path: &str) -> Result<Multiset> {
    match doc {
        MonoDoc::Map(map) => {
            let mut exps = vec![0u64; universe.len()];
            for (name, &k) in map {
                let i = universe
                    .position(name)
                    .ok_or_else(|| QpnError::schema(format!("{path}.{name}"), format!("unknown id `{name}`")))?;
                exps[i] = k;
            }
            Multiset::from_exponents(universe, exps)
        }
        MonoDoc::Text(text) => Multiset::parse(universe, text).map_err(|e| QpnError::schema(path, e.to_string())),
    }
}

fn amp(doc: &AmpDoc, consts: &BTreeMap<String, f64>, path: &str) -> Result<(Complex64, Option<String>)> {
    let (z, expr) = match doc {
        AmpDoc::Pair([re, im]) => (Complex64::new(*re, *im), None),
        AmpDoc::Real(x) => (Complex64::new(*x, 0.0), None),
        AmpDoc::Expr(text) => {
            let z = parse_amplitude_with(text, consts).map_err(|e| QpnError::schema(path, e.to_string()))?;
            (z, Some(text.clone()))
        }
    };
    if !(z.re.is_finite() && z.im.is_finite()) {
        return Err(QpnError::schema(path, "non-finite value"));
    }
    Ok((z, expr))
}

fn build_system(doc: &ModelDoc) -> Result<SystemNet> {
    let places = Universe::new(doc.places.iter().cloned()).map_err(|e| QpnError::schema("$.places", e.to_string()))?;
    let transitions =
        Universe::new(doc.transitions.iter().cloned()).map_err(|e| QpnError::schema("$.transitions", e.to_string()))?;
    for name in doc.flow.keys() {
        if !transitions.contains(name) {
            return Err(QpnError::schema(
                format!("$.flow.{name}"),
                format!("unknown transition `{name}`"),
            ));
        }
    }
    let mut pre = Vec::with_capacity(transitions.len());
    let mut post = Vec::with_capacity(transitions.len());
    for t in transitions.names() {
        let f = doc
            .flow
            .get(t)
            .ok_or_else(|| QpnError::schema("$.flow", format!("missing flow for transition `{t}`")))?;
        pre.push(mono(&places, &f.input, &format!("$.flow.{t}.in"))?);
        post.push(mono(&places, &f.out, &format!("$.flow.{t}.out"))?);
    }
    let net = NetStructure::new(places.clone(), transitions, pre, post)?;
    let mut exps = vec![0u64; places.len()];
    for (name, count) in &doc.m0 {
        let path = format!("$.m0.{name}");
        let i = places
            .position(name)
            .ok_or_else(|| QpnError::schema(&path, format!("unknown place `{name}`")))?;
        exps[i] = match count {
            CountDoc::N(k) => *k,
            CountDoc::Name(c) => {
                let x = *doc
                    .constants
                    .get(c)
                    .ok_or_else(|| QpnError::schema(&path, format!("unknown constant `{c}`")))?;
                if x < 0.0 || x.fract() != 0.0 {
                    return Err(QpnError::schema(
                        &path,
                        format!("constant `{c}` = {x} is not a token count"),
                    ));
                }
                x as u64
            }
        };
    }
    SystemNet::new(net, Multiset::from_exponents(&places, exps)?)
}

fn build_gspn(doc: &ModelDoc, sys: SystemNet) -> Result<GspnNet> {
    let mut g = GspnNet::new(sys)?;
    g.constants = doc.constants.clone();
    let transitions = Arc::clone(g.sys.transitions());
    let known = |t: &str, field: &str| -> Result<()> {
        if transitions.contains(t) {
            Ok(())
        } else {
            Err(QpnError::schema(
                format!("$.{field}.{t}"),
                format!("unknown transition `{t}`"),
            ))
        }
    };
    for (t, h) in &doc.inhibit {
        known(t, "inhibit")?;
        let h = mono(g.sys.places(), h, &format!("$.inhibit.{t}"))?;
        g = g.inhibit(t, h)?;
    }
    for (t, &pi) in &doc.priority {
        known(t, "priority")?;
        g = g.priority(t, pi)?;
    }
    for (t, w) in &doc.weight {
        known(t, "weight")?;
        let path = format!("$.weight.{t}");
        let (z, _) = amp(w, &doc.constants, &path)?;
        if z.im != 0.0 || z.re <= 0.0 {
            return Err(QpnError::schema(
                path,
                format!("weight must be a positive real, got {z}"),
            ));
        }
        g = g.weight(t, z.re)?;
    }
    Ok(g)
}

fn build_rates(doc: &RatesDoc, sys: &SystemNet, consts: &BTreeMap<String, f64>) -> Result<RateFunction> {
    let mut rate = RateFunction::default();
    if let Some(d) = &doc.default {
        let (z, expr) = amp(d, consts, "$.rates.default")?;
        rate.default = z;
        rate.default_expr = expr;
    }
    for (k, r) in doc.rules.iter().enumerate() {
        let path = format!("$.rates.rules[{k}]");
        let marking = match (&r.marking, &r.when) {
            (Some(_), Some(_)) => {
                return Err(QpnError::schema(&path, "`marking` and `when` are mutually exclusive"));
            }
            (Some(m), None) => MarkingPattern::Exact(mono(sys.places(), m, &format!("{path}.marking"))?),
            (None, Some(w)) => {
                let mut req = Vec::with_capacity(w.len());
                for (name, &count) in w {
                    let p = sys.places().position(name).ok_or_else(|| {
                        QpnError::schema(format!("{path}.when.{name}"), format!("unknown place `{name}`"))
                    })?;
                    req.push((p, count));
                }
                MarkingPattern::Partial(req)
            }
            (None, None) => MarkingPattern::any(),
        };
        let step = mono(sys.transitions(), &r.step, &format!("{path}.step"))?;
        let (amplitude, expr) = amp(&r.rate, consts, &format!("{path}.rate"))?;
        rate.rules.push(RateRule {
            marking,
            step,
            amplitude,
            expr,
        });
    }
    Ok(rate)
}

/// Parses any model document; `kind` is read or inferred from the fields.
pub fn model_from_value(v: Value) -> Result<Model> {
    let kind = v.get("kind").and_then(Value::as_str).map(str::to_string);
    if kind.as_deref() == Some("composed") {
        return composed_from_value(v).map(Model::Composed);
    }
    let doc: ModelDoc = typed(v)?;
    let kind = match doc.kind.as_deref() {
        Some(k @ ("net" | "qpn" | "gspn")) => k,
        Some(other) => return Err(QpnError::schema("$.kind", format!("unknown model kind `{other}`"))),
        None if doc.rates.is_some() => "qpn",
        None if doc.has_gspn_fields() || !doc.constants.is_empty() => "gspn",
        None => "net",
    };
    let sys = build_system(&doc)?;
    match kind {
        "net" => Ok(Model::Net(sys)),
        "gspn" => Ok(Model::Gspn(build_gspn(&doc, sys)?)),
        _ => {
            // inhibitors and priorities carry over to complex rates
            let sys = if doc.has_gspn_fields() {
                build_gspn(&doc, sys)?.sys
            } else {
                sys
            };
            let rates = doc.rates.clone().unwrap_or(RatesDoc {
                default: None,
                rules: Vec::new(),
            });
            let rate = build_rates(&rates, &sys, &doc.constants)?;
            let mut q = Qpn::new(sys, rate)?;
            q.max_card = doc.max_card;
            Ok(Model::Qpn(q))
        }
    }
}

pub fn parse_model(text: &str) -> Result<Model> {
    model_from_value(serde_json::from_str(text)?)
}

fn wrong_kind(want: &str, found: &Model) -> QpnError {
    QpnError::schema("$.kind", format!("expected a {want} document, found {}", found.kind()))
}

/// Net document. QPN and GSPN documents load as their underlying system
/// net, keeping any inhibitor and priority predicate.
pub fn parse_net(text: &str) -> Result<SystemNet> {
    match parse_model(text)? {
        Model::Composed(_) => Err(QpnError::schema("$.kind", "composed graphs carry no net")),
        m => Ok(m.system().expect("net-bearing model").clone()),
    }
}

/// QPN document; a plain net loads with every rate at 1.
pub fn parse_qpn(text: &str) -> Result<Qpn> {
    match parse_model(text)? {
        Model::Qpn(q) => Ok(q),
        Model::Net(sys) => Qpn::new(sys, RateFunction::default()),
        m => Err(wrong_kind("qpn", &m)),
    }
}

pub fn parse_gspn(text: &str) -> Result<GspnNet> {
    match parse_model(text)? {
        Model::Gspn(g) => Ok(g),
        Model::Net(sys) => GspnNet::new(sys),
        m => Err(wrong_kind("gspn", &m)),
    }
}

pub fn parse_composed(text: &str) -> Result<Composed> {
    composed_from_value(serde_json::from_str(text)?)
}

fn mono_value(m: &Multiset) -> Value {
    let mut map = Map::new();
    for (name, k) in m.entries() {
        map.insert(name.to_string(), json!(k));
    }
    Value::Object(map)
}

pub fn complex_value(z: Complex64) -> Value {
    json!([z.re, z.im])
}

fn amp_value(z: Complex64, expr: &Option<String>) -> Value {
    match expr {
        Some(e) => json!(e),
        None => complex_value(z),
    }
}

fn net_fields(kind: &str, sys: &SystemNet) -> Map<String, Value> {
    let net = &sys.net;
    let mut flow = Map::new();
    for (t, name) in net.transitions().names().iter().enumerate() {
        flow.insert(
            name.clone(),
            json!({"in": mono_value(net.input(t)), "out": mono_value(net.output(t))}),
        );
    }
    let mut doc = Map::new();
    doc.insert("kind".into(), json!(kind));
    doc.insert("places".into(), json!(net.places().names()));
    doc.insert("transitions".into(), json!(net.transitions().names()));
    doc.insert("flow".into(), Value::Object(flow));
    doc.insert("m0".into(), mono_value(&sys.m0));
    doc
}

fn gspn_fields(doc: &mut Map<String, Value>, sys: &SystemNet, policy: &GspnPolicy, weight: Option<&GspnNet>) {
    let ts = sys.transitions();
    let mut inhibit = Map::new();
    let mut priority = Map::new();
    for (t, name) in ts.names().iter().enumerate() {
        if !policy.inhibitor(t).is_unit() {
            inhibit.insert(name.clone(), mono_value(policy.inhibitor(t)));
        }
        if policy.priority(t) > 0 {
            priority.insert(name.clone(), json!(policy.priority(t)));
        }
    }
    if !inhibit.is_empty() {
        doc.insert("inhibit".into(), Value::Object(inhibit));
    }
    if !priority.is_empty() {
        doc.insert("priority".into(), Value::Object(priority));
    }
    if let Some(g) = weight {
        let w: Map<String, Value> = ts
            .names()
            .iter()
            .enumerate()
            .map(|(t, name)| (name.clone(), json!(g.weight_of(t))))
            .collect();
        doc.insert("weight".into(), Value::Object(w));
        if !g.constants.is_empty() {
            doc.insert("constants".into(), json!(g.constants));
        }
    }
}

pub fn net_to_value(sys: &SystemNet) -> Value {
    Value::Object(net_fields("net", sys))
}

pub fn gspn_to_value(g: &GspnNet) -> Value {
    let mut doc = net_fields("gspn", &g.sys);
    gspn_fields(&mut doc, &g.sys, g.policy(), Some(g));
    Value::Object(doc)
}

pub fn qpn_to_value(q: &Qpn) -> Value {
    let mut doc = net_fields("qpn", &q.sys);
    if let Some(policy) = q.sys.net.wf().as_any().downcast_ref::<GspnPolicy>() {
        gspn_fields(&mut doc, &q.sys, policy, None);
    }
    let places = q.sys.places();
    let rules: Vec<Value> = q
        .rate
        .rules
        .iter()
        .map(|r| {
            let mut rule = Map::new();
            match &r.marking {
                MarkingPattern::Exact(m) => {
                    rule.insert("marking".into(), mono_value(m));
                }
                MarkingPattern::Partial(req) if !req.is_empty() => {
                    let when: Map<String, Value> = req
                        .iter()
                        .map(|&(p, k)| (places.name(p).to_string(), json!(k)))
                        .collect();
                    rule.insert("when".into(), Value::Object(when));
                }
                MarkingPattern::Partial(_) => {}
            }
            rule.insert("step".into(), json!(r.step.to_string()));
            rule.insert("rate".into(), amp_value(r.amplitude, &r.expr));
            Value::Object(rule)
        })
        .collect();
    doc.insert(
        "rates".into(),
        json!({"default": amp_value(q.rate.default, &q.rate.default_expr), "rules": rules}),
    );
    if let Some(k) = q.max_card {
        doc.insert("max_card".into(), json!(k));
    }
    Value::Object(doc)
}

pub fn rated_graph_to_value(g: &RatedGraph, op: &str, factor: Option<Complex64>, operands: &[String]) -> Value {
    let space = g.space();
    let mut doc = Map::new();
    doc.insert("kind".into(), json!("composed"));
    doc.insert("op".into(), json!(op));
    if let Some(c) = factor {
        doc.insert("factor".into(), complex_value(c));
    }
    doc.insert("operands".into(), json!(operands));
    doc.insert("places".into(), json!(space.places().names()));
    doc.insert(
        "markings".into(),
        Value::Array(space.markings().iter().map(mono_value).collect()),
    );
    doc.insert("initial".into(), json!(g.initial()));
    let flows: Map<String, Value> = g
        .flows()
        .iter()
        .map(|(label, (i, o))| (label.clone(), json!({"in": mono_value(i), "out": mono_value(o)})))
        .collect();
    doc.insert("flows".into(), Value::Object(flows));
    doc.insert(
        "edges".into(),
        Value::Array(
            g.edges()
                .iter()
                .map(|e| json!({"src": e.src, "dst": e.dst, "label": e.label, "rate": complex_value(e.rate)}))
                .collect(),
        ),
    );
    Value::Object(doc)
}

pub fn composed_to_value(c: &Composed) -> Value {
    let factor = match c.op {
        Op::Scale(z) => Some(z),
        _ => None,
    };
    rated_graph_to_value(&c.graph, &c.op.to_string(), factor, &c.operands)
}

fn composed_from_value(v: Value) -> Result<Composed> {
    let doc: ComposedDoc = typed(v)?;
    let none = BTreeMap::new();
    let op = match doc.op.as_str() {
        "zero" => Op::Zero,
        "unit" => Op::Unit,
        "scale" => {
            let f = doc
                .factor
                .as_ref()
                .ok_or_else(|| QpnError::schema("$.factor", "scale needs a factor"))?;
            Op::Scale(amp(f, &none, "$.factor")?.0)
        }
        "product" => Op::Product,
        "sum" => Op::Sum,
        "kron" => Op::Kron,
        "kronsum" => Op::KronSum,
        other => return Err(QpnError::schema("$.op", format!("unknown operation `{other}`"))),
    };
    let places = Universe::new(doc.places.iter().cloned()).map_err(|e| QpnError::schema("$.places", e.to_string()))?;
    let mut markings = Vec::with_capacity(doc.markings.len());
    for (i, m) in doc.markings.iter().enumerate() {
        markings.push(mono(&places, &MonoDoc::Map(m.clone()), &format!("$.markings[{i}]"))?);
    }
    let space = Arc::new(StateSpace::new(Arc::clone(&places), markings.clone())?);
    if space.len() != markings.len() {
        return Err(QpnError::schema("$.markings", "duplicate markings"));
    }
    let remap: Vec<usize> = markings.iter().map(|m| space.index_of(m).expect("present")).collect();
    let at = |i: usize, path: String| -> Result<usize> {
        remap
            .get(i)
            .copied()
            .ok_or_else(|| QpnError::schema(path, format!("marking index {i} out of range")))
    };
    let mut flows = BTreeMap::new();
    for (label, f) in &doc.flows {
        let path = format!("$.flows.{label}");
        flows.insert(
            label.clone(),
            (
                mono(&places, &f.input, &format!("{path}.in"))?,
                mono(&places, &f.out, &format!("{path}.out"))?,
            ),
        );
    }
    let mut edges = Vec::with_capacity(doc.edges.len());
    for (k, e) in doc.edges.iter().enumerate() {
        let path = format!("$.edges[{k}]");
        if !flows.contains_key(&e.label) {
            return Err(QpnError::schema(
                format!("{path}.label"),
                format!("label `{}` has no flow", e.label),
            ));
        }
        edges.push(RatedEdge {
            src: at(e.src, format!("{path}.src"))?,
            dst: at(e.dst, format!("{path}.dst"))?,
            label: e.label.clone(),
            rate: amp(&e.rate, &none, &format!("{path}.rate"))?.0,
        });
    }
    let initial = at(doc.initial, "$.initial".into())?;
    Ok(Composed {
        op,
        operands: doc.operands,
        graph: RatedGraph::new(space, initial, flows, edges)?,
    })
}

/// Every marking of the space with its amplitude, in canonical order.
pub fn superposition_to_value(s: &Superposition) -> Value {
    let entries: Vec<Value> = s
        .space()
        .markings()
        .iter()
        .zip(s.amplitudes())
        .map(|(m, z)| json!({"marking": mono_value(m), "amp": complex_value(*z)}))
        .collect();
    json!({"kind": "superposition", "places": s.space().places().names(), "amplitudes": entries})
}

/// Superposition over `space`; markings outside it are rejected.
pub fn superposition_from_value(v: Value, space: &Arc<StateSpace>) -> Result<Superposition> {
    let doc: SuperpositionDoc = typed(v)?;
    if doc.places != space.places().names() {
        return Err(QpnError::schema("$.places", "places differ from the model's"));
    }
    let none = BTreeMap::new();
    let mut pairs = Vec::with_capacity(doc.amplitudes.len());
    for (k, e) in doc.amplitudes.iter().enumerate() {
        let path = format!("$.amplitudes[{k}]");
        let m = mono(space.places(), &e.marking, &format!("{path}.marking"))?;
        if space.index_of(&m).is_none() {
            return Err(QpnError::schema(
                format!("{path}.marking"),
                format!("`{m}` is not reachable"),
            ));
        }
        pairs.push((m, amp(&e.amp, &none, &format!("{path}.amp"))?.0));
    }
    Superposition::from_pairs(space, &pairs)
}

pub fn parse_superposition(text: &str, space: &Arc<StateSpace>) -> Result<Superposition> {
    superposition_from_value(serde_json::from_str(text)?, space)
}

/// Two-space indented JSON with a trailing newline.
pub fn to_pretty(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("values serialize");
    s.push('\n');
    s
}
