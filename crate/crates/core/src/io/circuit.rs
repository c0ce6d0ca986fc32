//! Circuit DSL: a `qubits n` header, then one gate per line (`H 0`,
//! `CNOT 0 1`, `U 0 1 : a, b, c, d; ...`). `#` starts a comment.

use nalgebra::DMatrix;

use super::amplitude::parse_amplitude;
use crate::circuits::{Circuit, Gate};
use crate::error::{QpnError, Result};

fn err(line: usize, column: usize, message: impl Into<String>) -> QpnError {
    QpnError::Parse {
        line,
        column,
        message: message.into(),
    }
}

/// Whitespace-separated words with their 1-based columns.
fn words(text: &str) -> Vec<(usize, &str)> {
    let mut out = Vec::new();
    let mut start = None;
    for (i, c) in text.char_indices() {
        match (c.is_whitespace(), start) {
            (true, Some(s)) => {
                out.push((s + 1, &text[s..i]));
                start = None;
            }
            (false, None) => start = Some(i),
            _ => {}
        }
    }
    if let Some(s) = start {
        out.push((s + 1, &text[s..]));
    }
    out
}

fn matrix(text: &str, line: usize, offset: usize) -> Result<DMatrix<num_complex::Complex64>> {
    let rows: Vec<&str> = text.split(';').collect();
    let n = rows.len();
    let mut entries = Vec::with_capacity(n * n);
    let mut col = offset;
    for row in &rows {
        let cells: Vec<&str> = row.split(',').collect();
        if cells.len() != n {
            return Err(err(
                line,
                col,
                format!("matrix row has {} entries, expected {n}", cells.len()),
            ));
        }
        for cell in cells {
            let z = parse_amplitude(cell).map_err(|e| match e {
                QpnError::Parse { column, message, .. } => err(line, col + column, message),
                other => err(line, col, other.to_string()),
            })?;
            entries.push(z);
            col += cell.len() + 1;
        }
    }
    Ok(DMatrix::from_row_slice(n, n, &entries))
}

pub fn parse_circuit(text: &str) -> Result<Circuit> {
    let mut circuit: Option<Circuit> = None;
    for (k, raw) in text.lines().enumerate() {
        let line = k + 1;
        let body = raw.split('#').next().unwrap_or("");
        let (gate_part, matrix_part) = match body.split_once(':') {
            Some((g, m)) => (g, Some(m)),
            None => (body, None),
        };
        let w = words(gate_part);
        let Some(&(col, head)) = w.first() else {
            if matrix_part.is_some() {
                return Err(err(line, 1, "matrix without a gate"));
            }
            continue;
        };
        let Some(c) = circuit.as_mut() else {
            if !head.eq_ignore_ascii_case("qubits") || w.len() != 2 {
                return Err(err(line, col, "expected header `qubits n`"));
            }
            let n = w[1]
                .1
                .parse::<usize>()
                .map_err(|e| err(line, w[1].0, format!("bad qubit count: {e}")))?;
            circuit = Some(Circuit::new(n).map_err(|e| err(line, w[1].0, e.to_string()))?);
            continue;
        };
        let gate = match head.to_ascii_uppercase().as_str() {
            "H" => Gate::H,
            "S" => Gate::S,
            "T" => Gate::T,
            "X" => Gate::X,
            "Z" => Gate::Z,
            "CNOT" | "CX" => Gate::Cnot,
            "U" => {
                let m = matrix_part.ok_or_else(|| err(line, col, "custom gate needs `: matrix`"))?;
                Gate::Custom(matrix(m, line, gate_part.len() + 2)?)
            }
            "QUBITS" => return Err(err(line, col, "duplicate `qubits` header")),
            other => return Err(err(line, col, format!("unknown gate `{other}`"))),
        };
        if matrix_part.is_some() && !matches!(gate, Gate::Custom(_)) {
            return Err(err(line, col, format!("{} takes no matrix", gate.name())));
        }
        let mut targets = Vec::with_capacity(w.len() - 1);
        for &(c2, word) in &w[1..] {
            targets.push(
                word.parse::<usize>()
                    .map_err(|e| err(line, c2, format!("bad qubit index: {e}")))?,
            );
        }
        c.push(gate, &targets).map_err(|e| err(line, col, e.to_string()))?;
    }
    circuit.ok_or_else(|| err(1, 1, "missing `qubits n` header"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    #[test]
    fn parses_bell_circuit() {
        let c = parse_circuit("qubits 2\n# Bell pair\nH 0\nCNOT 0 1  # entangle\n").unwrap();
        assert_eq!(c.qubits(), 2);
        assert_eq!(c.gates().len(), 2);
        assert_eq!(c.gates()[1].targets, [0, 1]);
    }

    #[test]
    fn custom_matrix_and_round_trip() {
        let text = "qubits 1\nU 0 : 0, exp(i*pi/4); 1/sqrt(2), -1\nT 0\n";
        let c = parse_circuit(text).unwrap();
        let Gate::Custom(m) = &c.gates()[0].gate else { panic!() };
        assert_eq!(m[(1, 1)], Complex64::new(-1.0, 0.0));
        assert_eq!(parse_circuit(&c.to_string()).unwrap(), c);
    }

    #[test]
    fn errors_point_at_the_token() {
        let e = parse_circuit("qubits 2\nH 0\nFOO 1\n").unwrap_err();
        assert!(matches!(e, QpnError::Parse { line: 3, column: 1, .. }), "{e}");
        let e = parse_circuit("qubits 2\nCNOT 0 x\n").unwrap_err();
        assert!(matches!(e, QpnError::Parse { line: 2, column: 8, .. }), "{e}");
        let e = parse_circuit("H 0\n").unwrap_err();
        assert!(matches!(e, QpnError::Parse { line: 1, .. }));
        assert!(parse_circuit("qubits 2\nCNOT 1 1\n").is_err());
        assert!(parse_circuit("qubits 1\nU 0 : 1, 0; 0\n").is_err());
        assert!(parse_circuit("").is_err());
    }
}
