//! File formats, parsers, DOT export and fixed-width number formatting.

mod amplitude;
mod circuit;
mod dot;
mod json;

pub use amplitude::{parse_amplitude, parse_amplitude_with, parse_expr, parse_expr_with, Expr};
pub use circuit::parse_circuit;
pub use dot::{rated_to_dot, rg_to_dot};
pub use json::{
    complex_value, composed_to_value, gspn_to_value, model_from_value, net_to_value, parse_composed, parse_gspn,
    parse_model, parse_net, parse_qpn, parse_superposition, qpn_to_value, rated_graph_to_value,
    superposition_from_value, superposition_to_value, to_pretty, Model,
};

use num_complex::Complex64;

/// Significant digits of every number printed by the CLI.
pub const SIG_DIGITS: usize = 12;

/// Real number with 12 significant digits, trailing zeros trimmed, `-0`
/// printed as `0`. Magnitudes outside `[1e-5, 1e12)` use exponent form.
pub fn format_real(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let sci = format!("{:.*e}", SIG_DIGITS - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-5..12).contains(&exp) {
        return format!("{}e{exp}", trim_zeros(mantissa));
    }
    let decimals = (SIG_DIGITS as i32 - 1 - exp).max(0) as usize;
    let rounded: f64 = sci.parse().expect("round trip");
    let fixed = format!("{rounded:.decimals$}");
    let out = trim_zeros(&fixed);
    if out == "-0" {
        "0".into()
    } else {
        out.into()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// `a+bi` with both parts in `format_real` form.
pub fn format_complex(z: Complex64) -> String {
    let re = format_real(z.re);
    let im = format_real(z.im);
    match im.strip_prefix('-') {
        Some(mag) => format!("{re}-{mag}i"),
        None => format!("{re}+{im}i"),
    }
}

/// `a+bi` with every bit of both parts, for files that must round-trip.
pub fn format_complex_exact(z: Complex64) -> String {
    if z.im.is_sign_negative() {
        format!("{:?}-{:?}i", z.re, -z.im)
    } else {
        format!("{:?}+{:?}i", z.re, z.im)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixed_formatting() {
        assert_eq!(format_real(0.5), "0.5");
        assert_eq!(format_real(-0.0), "0");
        assert_eq!(format_real(1.0 / 3.0), "0.333333333333");
        assert_eq!(format_real(std::f64::consts::FRAC_1_SQRT_2), "0.707106781187");
        assert_eq!(format_real(123456.0), "123456");
        assert_eq!(format_real(1e-7), "1e-7");
        assert_eq!(format_real(-2.5e13), "-2.5e13");
        assert_eq!(format_real(-1e-17), "-1e-17");
        assert_eq!(format_complex(Complex64::new(0.25, -0.5)), "0.25-0.5i");
        assert_eq!(format_complex(Complex64::new(-0.0, -0.0)), "0+0i");
        assert_eq!(format_complex(Complex64::new(1.0, 2.0)), "1+2i");
    }
}
