//! Minimal-support non-negative integer semiflows by Farkas elimination.

use super::NetStructure;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SemiflowKind {
    /// `yᵀC = 0`, indexed by places.
    Place,
    /// `Cx = 0`, indexed by transitions.
    Transition,
}

/// Returns the minimal-support semiflow basis, each vector divided by the gcd
/// of its entries and the list sorted for determinism.
pub fn semiflows(net: &NetStructure, kind: SemiflowKind) -> Vec<Vec<u64>> {
    let c = net.incidence().effect;
    let np = net.places().len();
    let nt = net.transitions().len();
    // rows: the vectors being combined; columns: the constraints to zero out
    let matrix: Vec<Vec<i128>> = match kind {
        SemiflowKind::Place => (0..np).map(|p| (0..nt).map(|t| c[p][t] as i128).collect()).collect(),
        SemiflowKind::Transition => (0..nt).map(|t| (0..np).map(|p| c[p][t] as i128).collect()).collect(),
    };
    farkas(&matrix)
}

fn farkas(matrix: &[Vec<i128>]) -> Vec<Vec<u64>> {
    let n = matrix.len();
    let cols = matrix.first().map_or(0, Vec::len);
    // each row is (constraint part, identity part)
    let mut rows: Vec<(Vec<i128>, Vec<i128>)> = (0..n)
        .map(|i| {
            let mut id = vec![0; n];
            id[i] = 1;
            (matrix[i].clone(), id)
        })
        .collect();

    for j in 0..cols {
        let mut next: Vec<(Vec<i128>, Vec<i128>)> = Vec::new();
        let (zero, nonzero): (Vec<_>, Vec<_>) = rows.into_iter().partition(|r| r.0[j] == 0);
        next.extend(zero);
        let pos: Vec<_> = nonzero.iter().filter(|r| r.0[j] > 0).collect();
        let neg: Vec<_> = nonzero.iter().filter(|r| r.0[j] < 0).collect();
        for a in &pos {
            for b in &neg {
                let ka = -b.0[j];
                let kb = a.0[j];
                let combine =
                    |x: &[i128], y: &[i128]| -> Vec<i128> { x.iter().zip(y).map(|(u, v)| ka * u + kb * v).collect() };
                let mut row = (combine(&a.0, &b.0), combine(&a.1, &b.1));
                normalize(&mut row);
                next.push(row);
            }
        }
        rows = minimal_support(next);
    }

    let mut out: Vec<Vec<u64>> = minimal_support(rows)
        .into_iter()
        .map(|(_, y)| y.into_iter().map(|v| v as u64).collect())
        .collect();
    out.sort();
    out.dedup();
    out
}

fn normalize(row: &mut (Vec<i128>, Vec<i128>)) {
    let g = row.0.iter().chain(row.1.iter()).fold(0i128, |g, &v| gcd(g, v.abs()));
    if g > 1 {
        row.0.iter_mut().chain(row.1.iter_mut()).for_each(|v| *v /= g);
    }
}

fn gcd(a: i128, b: i128) -> i128 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Drops rows whose identity-part support strictly contains another row's
/// support, and duplicates.
fn minimal_support(rows: Vec<(Vec<i128>, Vec<i128>)>) -> Vec<(Vec<i128>, Vec<i128>)> {
    let support = |r: &(Vec<i128>, Vec<i128>)| -> Vec<bool> { r.1.iter().map(|&v| v != 0).collect() };
    let sups: Vec<Vec<bool>> = rows.iter().map(support).collect();
    let mut keep = Vec::new();
    'outer: for (i, r) in rows.iter().enumerate() {
        for (k, s) in sups.iter().enumerate() {
            if k == i {
                continue;
            }
            let subset = s.iter().zip(&sups[i]).all(|(a, b)| !a || *b);
            if subset && (s != &sups[i] || k < i) {
                continue 'outer;
            }
        }
        keep.push(r.clone());
    }
    keep
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::net::fixtures::*;
    use crate::net::{explore, NetStructure};

    /// Rational null-space oracle: checks `v` solves the system and is non-negative.
    fn in_null_space(net: &NetStructure, kind: SemiflowKind, v: &[u64]) -> bool {
        let c = net.incidence().effect;
        let np = net.places().len();
        let nt = net.transitions().len();
        match kind {
            SemiflowKind::Place => (0..nt).all(|t| (0..np).map(|p| v[p] as i64 * c[p][t]).sum::<i64>() == 0),
            SemiflowKind::Transition => (0..np).all(|p| (0..nt).map(|t| v[t] as i64 * c[p][t]).sum::<i64>() == 0),
        }
    }

    #[test]
    fn bit_semiflows() {
        let net = bit().net;
        assert_eq!(semiflows(&net, SemiflowKind::Place), vec![vec![1, 1]]);
        assert_eq!(semiflows(&net, SemiflowKind::Transition), vec![vec![1, 1]]);
    }

    #[test]
    fn double_slit_loops_are_transition_semiflows() {
        let ds = double_slit();
        let flows = semiflows(&ds.net, SemiflowKind::Transition);
        for name in ["a", "b", "c", "d", "e"] {
            let t = ds.net.transition_index(name).unwrap();
            let mut unit = vec![0; ds.transitions().len()];
            unit[t] = 1;
            assert!(flows.contains(&unit), "missing unit semiflow for {name}");
        }
        for f in &flows {
            assert!(in_null_space(&ds.net, SemiflowKind::Transition, f));
        }
        // the token is conserved: all-ones is the only place semiflow
        assert_eq!(semiflows(&ds.net, SemiflowKind::Place), vec![vec![1; 8]]);
    }

    #[test]
    fn place_semiflows_are_conserved_on_rg() {
        for sys in [two_bits(), double_slit()] {
            let rg = explore(&sys, 100).unwrap();
            for y in semiflows(&sys.net, SemiflowKind::Place) {
                let weight =
                    |m: &crate::multiset::Multiset| -> u64 { m.exponents().iter().zip(&y).map(|(a, b)| a * b).sum() };
                for e in rg.edges() {
                    assert_eq!(weight(rg.space().marking(e.src)), weight(rg.space().marking(e.dst)));
                }
            }
        }
    }

    #[test]
    fn two_bits_has_two_of_each() {
        let sys = two_bits();
        let p = semiflows(&sys.net, SemiflowKind::Place);
        assert_eq!(p, vec![vec![0, 0, 1, 1], vec![1, 1, 0, 0]]);
        let t = semiflows(&sys.net, SemiflowKind::Transition);
        assert_eq!(t.len(), 2);
    }

    #[test]
    fn no_semiflow_for_a_sink() {
        let net = NetStructure::from_monomials(&["p", "q"], &[("t", "p", "q^2")]).unwrap();
        assert_eq!(semiflows(&net, SemiflowKind::Place), vec![vec![2, 1]]);
        assert!(semiflows(&net, SemiflowKind::Transition).is_empty());
    }
}
