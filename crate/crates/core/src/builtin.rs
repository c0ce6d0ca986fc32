//! Reference models used by the bundled files, the CLI and the test suites.

use num_complex::Complex64;

use crate::error::Result;
use crate::gspn::GspnNet;
use crate::multiset::Multiset;
use crate::net::{NetStructure, SystemNet};
use crate::quantum::{MarkingPattern, Qpn, RateFunction, RateRule};

/// One bit: places `P0`, `P1`, transitions `u: P0 -> P1`, `d: P1 -> P0`.
pub fn bit() -> Result<SystemNet> {
    let net = NetStructure::from_monomials(&["P0", "P1"], &[("u", "P0", "P1"), ("d", "P1", "P0")])?;
    let m0 = Multiset::parse(net.places(), "P0")?;
    SystemNet::new(net, m0)
}

/// Two juxtaposed bits `P` and `Q`, initially `P0 Q0`.
pub fn two_bits() -> Result<SystemNet> {
    let net = NetStructure::from_monomials(
        &["P0", "P1", "Q0", "Q1"],
        &[
            ("Pu", "P0", "P1"),
            ("Pd", "P1", "P0"),
            ("Qu", "Q0", "Q1"),
            ("Qd", "Q1", "Q0"),
        ],
    )?;
    let m0 = Multiset::parse(net.places(), "P0 Q0")?;
    SystemNet::new(net, m0)
}

/// Gun `G`, slits `L`, `R`, detectors `A`..`E` with their detection loops.
pub fn double_slit_net() -> Result<SystemNet> {
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
    )?;
    let m0 = Multiset::parse(net.places(), "G")?;
    SystemNet::new(net, m0)
}

/// Slit and scattering rates `(s, u, v, w)` with complex amplitudes.
pub fn double_slit_quantum_rates() -> [Complex64; 4] {
    let r6 = 6f64.sqrt();
    [
        Complex64::new(1.0 / 2f64.sqrt(), 0.0),
        Complex64::new(-1.0, 1.0) / r6,
        Complex64::new(-1.0, -1.0) / r6,
        Complex64::new(1.0, -1.0) / r6,
    ]
}

/// Double slit with per-transition rates `s` on `l`, `r`; `u`, `v`, `w` on
/// the scatterings; `1` on detector loops and `0` for resting.
pub fn double_slit_with(s: Complex64, u: Complex64, v: Complex64, w: Complex64) -> Result<Qpn> {
    let sys = double_slit_net()?;
    let step = |t: &str| Multiset::parse(sys.transitions(), t);
    let mut rate = RateFunction::constant(Complex64::new(1.0, 0.0));
    for (t, z) in [
        ("l", s),
        ("r", s),
        ("a_l", u),
        ("b_l", v),
        ("c_l", w),
        ("a_r", u),
        ("b_r", v),
        ("c_r", w),
    ] {
        rate.rules.push(RateRule::new(MarkingPattern::any(), step(t)?, z));
    }
    rate.rules.push(RateRule::new(
        MarkingPattern::any(),
        Multiset::unit(sys.transitions()),
        Complex64::new(0.0, 0.0),
    ));
    Qpn::new(sys, rate)
}

pub fn double_slit_qpn() -> Result<Qpn> {
    let [s, u, v, w] = double_slit_quantum_rates();
    double_slit_with(s, u, v, w)
}

/// Two-qubit net with every rate at its default of 1.
pub fn two_qubit_qpn() -> Result<Qpn> {
    Qpn::new(two_bits()?, RateFunction::default())
}

/// CNOT on `(P, Q)` with `P` as control: rest when `P0`, flip `Q` when `P1`.
pub fn cnot_qpn() -> Result<Qpn> {
    let sys = two_bits()?;
    let m = |s: &str| Multiset::parse(sys.places(), s);
    let t = |s: &str| Multiset::parse(sys.transitions(), s);
    let one = Complex64::new(1.0, 0.0);
    let mut rate = RateFunction::constant(Complex64::new(0.0, 0.0));
    for (mk, step) in [("P0 Q0", "1"), ("P0 Q1", "1"), ("P1 Q0", "Qu"), ("P1 Q1", "Qd")] {
        rate.rules
            .push(RateRule::new(MarkingPattern::Exact(m(mk)?), t(step)?, one));
    }
    Qpn::new(sys, rate)
}

/// Hadamard on `P` with `Q` resting.
pub fn hadamard_p_qpn() -> Result<Qpn> {
    let sys = two_bits()?;
    let t = |s: &str| Multiset::parse(sys.transitions(), s);
    let p0 = sys.places().position("P0").expect("P0");
    let p1 = sys.places().position("P1").expect("P1");
    let h = Complex64::new(1.0 / 2f64.sqrt(), 0.0);
    let mut rate = RateFunction::constant(Complex64::new(0.0, 0.0));
    rate.rules
        .push(RateRule::new(MarkingPattern::Partial(vec![(p0, 1)]), t("1")?, h));
    rate.rules
        .push(RateRule::new(MarkingPattern::Partial(vec![(p0, 1)]), t("Pu")?, h));
    rate.rules
        .push(RateRule::new(MarkingPattern::Partial(vec![(p1, 1)]), t("Pd")?, h));
    rate.rules
        .push(RateRule::new(MarkingPattern::Partial(vec![(p1, 1)]), t("1")?, -h));
    Qpn::new(sys, rate)
}

/// Double slit as a stochastic net: slits at ½, each scattering at ⅓,
/// detector loops at 1.
pub fn double_slit_spn() -> Result<GspnNet> {
    let mut g = GspnNet::new(double_slit_net()?)?;
    for t in ["l", "r"] {
        g = g.weight(t, 0.5)?;
    }
    for t in ["a_l", "b_l", "c_l", "a_r", "b_r", "c_r"] {
        g = g.weight(t, 1.0 / 3.0)?;
    }
    Ok(g)
}

/// Timed `a: A -> B` at weight 2 into a vanishing `B` that branches to `C`
/// and `D` through immediates of weight 1 and 3.
pub fn branching_gspn() -> Result<GspnNet> {
    let net = NetStructure::from_monomials(
        &["A", "B", "C", "D"],
        &[("a", "A", "B"), ("c", "B", "C"), ("d", "B", "D")],
    )?;
    let m0 = Multiset::parse(net.places(), "A")?;
    GspnNet::new(SystemNet::new(net, m0)?)?
        .weight("a", 2.0)?
        .priority("c", 1)?
        .weight("c", 1.0)?
        .priority("d", 1)?
        .weight("d", 3.0)
}

/// Token population `A^K` cycling through a vanishing branch point, with a
/// one-token lock `F`/`E` and an inhibitor from `E` on `e`. Two place and
/// two transition semiflows; rates scale with `R`.
pub fn phase_gspn_with(k: u64, r: f64) -> Result<GspnNet> {
    let net = NetStructure::from_monomials(
        &["A", "B", "C", "D", "E", "F"],
        &[
            ("a", "A", "B"),
            ("b", "B", "C"),
            ("c", "B", "D"),
            ("d", "C", "A"),
            ("e", "D F", "A E"),
            ("f", "E", "F"),
        ],
    )?;
    let m0 = Multiset::parse(net.places(), &format!("A^{k} F"))?;
    let h = Multiset::parse(net.places(), "E")?;
    let mut g = GspnNet::new(SystemNet::new(net, m0)?)?
        .weight("a", r)?
        .priority("b", 1)?
        .priority("c", 1)?
        .weight("c", 3.0)?
        .weight("d", 2.0 * r)?
        .weight("e", r)?
        .inhibit("e", h)?
        .weight("f", r)?;
    g.constants.insert("K".into(), k as f64);
    g.constants.insert("R".into(), r);
    Ok(g)
}

pub fn phase_gspn() -> Result<GspnNet> {
    phase_gspn_with(6, 1.0)
}

/// Concurrence example: `a: A B -> D E`, `b: A B^2 -> D^2`, `c: C -> E^2`
/// from `A^4 B^6 C^3 E^2`.
pub fn concurrence_net() -> Result<SystemNet> {
    let net = NetStructure::from_monomials(
        &["A", "B", "C", "D", "E"],
        &[("a", "A B", "D E"), ("b", "A B^2", "D^2"), ("c", "C", "E^2")],
    )?;
    let m0 = Multiset::parse(net.places(), "A^4 B^6 C^3 E^2")?;
    SystemNet::new(net, m0)
}
