use std::collections::{BTreeMap, HashMap, HashSet};

use super::{explore, ReachabilityGraph, SystemNet};
use crate::error::{QpnError, Result};
use crate::multiset::Multiset;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Equivalence {
    Behaviour,
    Shape,
    Neither,
}

/// Place bijection plus an optional transition bijection, both by id.
#[derive(Debug, Clone, Default)]
pub struct PlaceBijection {
    pub places: BTreeMap<String, String>,
    pub transitions: Option<BTreeMap<String, String>>,
}

impl PlaceBijection {
    pub fn identity(sys: &SystemNet) -> Self {
        PlaceBijection {
            places: sys.places().names().iter().map(|p| (p.clone(), p.clone())).collect(),
            transitions: Some(
                sys.transitions()
                    .names()
                    .iter()
                    .map(|t| (t.clone(), t.clone()))
                    .collect(),
            ),
        }
    }
}

fn index_map(
    map: &BTreeMap<String, String>,
    from: &crate::multiset::Universe,
    to: &crate::multiset::Universe,
    what: &str,
) -> Result<Vec<usize>> {
    if map.len() != from.len() {
        return Err(QpnError::Bijection(format!("{what} bijection must cover every {what}")));
    }
    let mut image = vec![usize::MAX; from.len()];
    let mut used = HashSet::new();
    for (a, b) in map {
        let i = from
            .position(a)
            .ok_or_else(|| QpnError::Bijection(format!("unknown {what} `{a}` in domain")))?;
        let j = to
            .position(b)
            .ok_or_else(|| QpnError::Bijection(format!("unknown {what} `{b}` in codomain")))?;
        if !used.insert(j) {
            return Err(QpnError::Bijection(format!("{what} `{b}` is hit twice")));
        }
        image[i] = j;
    }
    Ok(image)
}

fn map_marking(m: &Multiset, image: &[usize], target: &std::sync::Arc<crate::multiset::Universe>) -> Multiset {
    let mut exps = vec![0; target.len()];
    for (i, &e) in m.exponents().iter().enumerate() {
        exps[image[i]] = e;
    }
    Multiset::from_exponents(target, exps).expect("bijection preserves size")
}

/// Shape equivalence: the place bijection maps `m0` and the reachability
/// set onto the other net's. Behaviour equivalence additionally maps every
/// reachability edge under the transition bijection.
pub fn check_equivalence(a: &SystemNet, b: &SystemNet, f: &PlaceBijection, cap: usize) -> Result<Equivalence> {
    if a.places().len() != b.places().len() {
        return Ok(Equivalence::Neither);
    }
    let place_image = index_map(&f.places, a.places(), b.places(), "place")?;
    let rga = explore(a, cap)?;
    let rgb = explore(b, cap)?;

    if map_marking(&a.m0, &place_image, b.places()) != b.m0 {
        return Ok(Equivalence::Neither);
    }
    let sa = rga.space();
    let sb = rgb.space();
    if sa.len() != sb.len() {
        return Ok(Equivalence::Neither);
    }
    let mut state_image = Vec::with_capacity(sa.len());
    for m in sa.markings() {
        match sb.index_of(&map_marking(m, &place_image, b.places())) {
            Some(j) => state_image.push(j),
            None => return Ok(Equivalence::Neither),
        }
    }

    let Some(tmap) = &f.transitions else {
        return Ok(Equivalence::Shape);
    };
    if a.transitions().len() != b.transitions().len() {
        return Ok(Equivalence::Shape);
    }
    let t_image = index_map(tmap, a.transitions(), b.transitions(), "transition")?;
    let mut mapped: Vec<(usize, usize, usize)> = rga
        .edges()
        .iter()
        .map(|e| (state_image[e.src], t_image[e.transition], state_image[e.dst]))
        .collect();
    let mut target: Vec<(usize, usize, usize)> = rgb.edges().iter().map(|e| (e.src, e.transition, e.dst)).collect();
    mapped.sort();
    target.sort();
    Ok(if mapped == target {
        Equivalence::Behaviour
    } else {
        Equivalence::Shape
    })
}

/// Plain directed multigraph isomorphism of two reachability graphs,
/// ignoring markings and transition labels. Exhaustive search with degree
/// pruning; intended for small graphs.
pub fn graph_isomorphic(a: &ReachabilityGraph, b: &ReachabilityGraph) -> bool {
    let n = a.space().len();
    if n != b.space().len() || a.edges().len() != b.edges().len() {
        return false;
    }
    let counts = |g: &ReachabilityGraph| -> HashMap<(usize, usize), usize> {
        let mut c = HashMap::new();
        for e in g.edges() {
            *c.entry((e.src, e.dst)).or_insert(0) += 1;
        }
        c
    };
    let ca = counts(a);
    let cb = counts(b);
    let degree = |c: &HashMap<(usize, usize), usize>, v: usize| -> (usize, usize, usize) {
        let out: usize = c.iter().filter(|((s, _), _)| *s == v).map(|(_, k)| k).sum();
        let inn: usize = c.iter().filter(|((_, d), _)| *d == v).map(|(_, k)| k).sum();
        (out, inn, c.get(&(v, v)).copied().unwrap_or(0))
    };
    let da: Vec<_> = (0..n).map(|v| degree(&ca, v)).collect();
    let db: Vec<_> = (0..n).map(|v| degree(&cb, v)).collect();

    #[allow(clippy::too_many_arguments)]
    fn search(
        v: usize,
        n: usize,
        map: &mut Vec<usize>,
        used: &mut Vec<bool>,
        da: &[(usize, usize, usize)],
        db: &[(usize, usize, usize)],
        ca: &HashMap<(usize, usize), usize>,
        cb: &HashMap<(usize, usize), usize>,
    ) -> bool {
        if v == n {
            return true;
        }
        for w in 0..n {
            if used[w] || da[v] != db[w] {
                continue;
            }
            // check edges between v and already-mapped vertices
            let consistent = (0..v).chain(std::iter::once(v)).all(|u| {
                let mu = if u == v { w } else { map[u] };
                ca.get(&(u, v)).copied().unwrap_or(0) == cb.get(&(mu, w)).copied().unwrap_or(0)
                    && ca.get(&(v, u)).copied().unwrap_or(0) == cb.get(&(w, mu)).copied().unwrap_or(0)
            });
            if !consistent {
                continue;
            }
            map[v] = w;
            used[w] = true;
            if search(v + 1, n, map, used, da, db, ca, cb) {
                return true;
            }
            used[w] = false;
        }
        false
    }

    let mut map = vec![0; n];
    let mut used = vec![false; n];
    search(0, n, &mut map, &mut used, &da, &db, &ca, &cb)
}
