//! Exact multiset algebra in monomial form.
//!
//! A [`Multiset`] stores one exponent per element of an ordered [`Universe`].
//! Multiplication adds exponents, the partial order compares them
//! element-wise, and a function from elements to multisets lifts linearly to
//! multisets. Markings, concurrences and flows are all multisets.

use std::cmp::Ordering;
use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::hash::{Hash, Hasher};
use std::sync::Arc;

use crate::error::{QpnError, Result};

/// An ordered, finite set of element ids.
#[derive(Debug, Clone)]
pub struct Universe {
    names: Vec<String>,
    index: HashMap<String, usize>,
}

impl Universe {
    pub fn new<I, S>(names: I) -> Result<Arc<Self>>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let names: Vec<String> = names.into_iter().map(Into::into).collect();
        let mut index = HashMap::with_capacity(names.len());
        for (i, name) in names.iter().enumerate() {
            validate_id(name)?;
            if index.insert(name.clone(), i).is_some() {
                return Err(QpnError::InvalidNet(format!("duplicate element id `{name}`")));
            }
        }
        Ok(Arc::new(Universe { names, index }))
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn name(&self, i: usize) -> &str {
        &self.names[i]
    }

    pub fn position(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    pub fn contains(&self, name: &str) -> bool {
        self.index.contains_key(name)
    }
}

impl PartialEq for Universe {
    fn eq(&self, other: &Self) -> bool {
        self.names == other.names
    }
}

impl Eq for Universe {}

/// Ids must survive the monomial text syntax unchanged.
fn validate_id(name: &str) -> Result<()> {
    let bad = name.is_empty()
        || name == "1"
        || name
            .chars()
            .any(|c| c.is_whitespace() || matches!(c, '^' | '(' | ')' | '[' | ']' | '|' | ';' | ','));
    if bad {
        return Err(QpnError::InvalidNet(format!("invalid element id `{name}`")));
    }
    Ok(())
}

/// Result of comparing two multisets in the element-wise partial order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MultisetOrdering {
    /// Proper sub-multiset: every exponent `<=`, and not equal.
    Less,
    Equal,
    Greater,
    Incomparable,
}

#[derive(Clone)]
pub struct Multiset {
    universe: Arc<Universe>,
    exps: Vec<u64>,
}

impl Multiset {
    /// The unit multiset `1` (all exponents zero).
    pub fn unit(universe: &Arc<Universe>) -> Self {
        Multiset {
            universe: Arc::clone(universe),
            exps: vec![0; universe.len()],
        }
    }

    pub fn from_exponents(universe: &Arc<Universe>, exps: Vec<u64>) -> Result<Self> {
        if exps.len() != universe.len() {
            return Err(QpnError::UniverseMismatch);
        }
        Ok(Multiset {
            universe: Arc::clone(universe),
            exps,
        })
    }

    pub fn from_pairs<'a, I>(universe: &Arc<Universe>, pairs: I) -> Result<Self>
    where
        I: IntoIterator<Item = (&'a str, u64)>,
    {
        let mut m = Multiset::unit(universe);
        for (name, k) in pairs {
            let i = universe
                .position(name)
                .ok_or_else(|| QpnError::UnknownElement(name.to_string()))?;
            m.exps[i] = m.exps[i]
                .checked_add(k)
                .ok_or_else(|| QpnError::Overflow(name.to_string()))?;
        }
        Ok(m)
    }

    /// A single element with multiplicity one.
    pub fn element(universe: &Arc<Universe>, index: usize) -> Self {
        let mut m = Multiset::unit(universe);
        m.exps[index] = 1;
        m
    }

    pub fn universe(&self) -> &Arc<Universe> {
        &self.universe
    }

    pub fn exponents(&self) -> &[u64] {
        &self.exps
    }

    pub fn get(&self, i: usize) -> u64 {
        self.exps[i]
    }

    pub fn count(&self, name: &str) -> u64 {
        self.universe.position(name).map_or(0, |i| self.exps[i])
    }

    pub fn is_unit(&self) -> bool {
        self.exps.iter().all(|&e| e == 0)
    }

    /// Largest exponent.
    pub fn degree(&self) -> u64 {
        self.exps.iter().copied().max().unwrap_or(0)
    }

    /// Sum of exponents (total degree).
    pub fn cardinality(&self) -> u64 {
        self.exps.iter().sum()
    }

    /// Indices of elements with positive multiplicity.
    pub fn support(&self) -> impl Iterator<Item = usize> + '_ {
        self.exps.iter().enumerate().filter(|(_, &e)| e > 0).map(|(i, _)| i)
    }

    /// Non-zero `(id, multiplicity)` entries in universe order.
    pub fn entries(&self) -> impl Iterator<Item = (&str, u64)> + '_ {
        self.support().map(move |i| (self.universe.name(i), self.exps[i]))
    }

    fn check_universe(&self, other: &Multiset) -> Result<()> {
        if Arc::ptr_eq(&self.universe, &other.universe) || self.universe == other.universe {
            Ok(())
        } else {
            Err(QpnError::UniverseMismatch)
        }
    }

    /// Exponent-wise sum.
    pub fn mul(&self, other: &Multiset) -> Result<Multiset> {
        self.check_universe(other)?;
        let exps = self
            .exps
            .iter()
            .zip(&other.exps)
            .enumerate()
            .map(|(i, (a, b))| {
                a.checked_add(*b)
                    .ok_or_else(|| QpnError::Overflow(self.universe.name(i).to_string()))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Multiset {
            universe: Arc::clone(&self.universe),
            exps,
        })
    }

    /// Exponent-wise `k`-fold power.
    pub fn pow(&self, k: u64) -> Result<Multiset> {
        let exps = self
            .exps
            .iter()
            .enumerate()
            .map(|(i, a)| {
                a.checked_mul(k)
                    .ok_or_else(|| QpnError::Overflow(self.universe.name(i).to_string()))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Multiset {
            universe: Arc::clone(&self.universe),
            exps,
        })
    }

    pub fn compare(&self, other: &Multiset) -> Result<MultisetOrdering> {
        self.check_universe(other)?;
        let (mut le, mut ge) = (true, true);
        for (a, b) in self.exps.iter().zip(&other.exps) {
            le &= a <= b;
            ge &= a >= b;
        }
        Ok(match (le, ge) {
            (true, true) => MultisetOrdering::Equal,
            (true, false) => MultisetOrdering::Less,
            (false, true) => MultisetOrdering::Greater,
            (false, false) => MultisetOrdering::Incomparable,
        })
    }

    /// `self <= other` element-wise (sub-multiset, i.e. `self` divides `other`).
    pub fn le(&self, other: &Multiset) -> bool {
        self.exps.len() == other.exps.len() && self.exps.iter().zip(&other.exps).all(|(a, b)| a <= b)
    }

    /// Truncated difference `max(self - other, 0)`.
    pub fn diff(&self, other: &Multiset) -> Result<Multiset> {
        self.check_universe(other)?;
        let exps = self
            .exps
            .iter()
            .zip(&other.exps)
            .map(|(a, b)| a.saturating_sub(*b))
            .collect();
        Ok(Multiset {
            universe: Arc::clone(&self.universe),
            exps,
        })
    }

    /// Element-wise minimum and maximum (gcd and lcm of the monomials).
    pub fn meet_join(&self, other: &Multiset) -> Result<(Multiset, Multiset)> {
        self.check_universe(other)?;
        let (meet, join) = self
            .exps
            .iter()
            .zip(&other.exps)
            .map(|(a, b)| (*a.min(b), *a.max(b)))
            .unzip();
        Ok((
            Multiset {
                universe: Arc::clone(&self.universe),
                exps: meet,
            },
            Multiset {
                universe: Arc::clone(&self.universe),
                exps: join,
            },
        ))
    }

    /// Lift `f: element -> multiset over target` linearly:
    /// `f(s)_b = sum_a s_a * f(a)_b`.
    pub fn lift<'f, F>(&self, target: &Arc<Universe>, f: F) -> Result<Multiset>
    where
        F: Fn(usize) -> Option<&'f Multiset>,
    {
        let mut out = vec![0u64; target.len()];
        for a in self.support() {
            let image = f(a).ok_or_else(|| QpnError::MissingImage(self.universe.name(a).to_string()))?;
            if image.universe.len() != target.len() {
                return Err(QpnError::UniverseMismatch);
            }
            let k = self.exps[a];
            for (b, &e) in image.exps.iter().enumerate() {
                if e == 0 {
                    continue;
                }
                out[b] = e
                    .checked_mul(k)
                    .and_then(|x| out[b].checked_add(x))
                    .ok_or_else(|| QpnError::Overflow(target.name(b).to_string()))?;
            }
        }
        Ok(Multiset {
            universe: Arc::clone(target),
            exps: out,
        })
    }

    /// Canonical state order: reverse lexicographic on exponent vectors, so
    /// markings with tokens on earlier-declared elements come first.
    pub fn canonical_cmp(&self, other: &Multiset) -> Ordering {
        other.exps.cmp(&self.exps)
    }

    /// Projection onto a subset of element indices (same universe, other entries zeroed).
    pub fn restrict(&self, keep: &[usize]) -> Multiset {
        let mut exps = vec![0; self.exps.len()];
        for &i in keep {
            exps[i] = self.exps[i];
        }
        Multiset {
            universe: Arc::clone(&self.universe),
            exps,
        }
    }

    /// Concatenation onto the juxtaposed universe `self.universe ++ other.universe`.
    pub fn juxtapose(&self, other: &Multiset, target: &Arc<Universe>) -> Result<Multiset> {
        if self.exps.len() + other.exps.len() != target.len() {
            return Err(QpnError::UniverseMismatch);
        }
        let mut exps = self.exps.clone();
        exps.extend_from_slice(&other.exps);
        Ok(Multiset {
            universe: Arc::clone(target),
            exps,
        })
    }

    /// Monomial text form: `a b^2 c`, or `1` for the unit.
    pub fn parse(universe: &Arc<Universe>, text: &str) -> Result<Multiset> {
        let err = |reason: &str| QpnError::Monomial {
            text: text.to_string(),
            reason: reason.to_string(),
        };
        let mut m = Multiset::unit(universe);
        let add = |m: &mut Multiset, i: usize, k: u64| -> Result<()> {
            m.exps[i] = m.exps[i]
                .checked_add(k)
                .ok_or_else(|| QpnError::Overflow(universe.name(i).to_string()))?;
            Ok(())
        };
        let tokens: Vec<&str> = text.split_whitespace().collect();
        if tokens.is_empty() {
            return Err(err("empty monomial"));
        }
        for token in tokens {
            if token == "1" {
                continue;
            }
            let (base, exp) = match token.rsplit_once('^') {
                Some((b, e)) if !e.is_empty() && e.bytes().all(|c| c.is_ascii_digit()) => {
                    (b, Some(e.parse::<u64>().map_err(|_| err("exponent out of range"))?))
                }
                _ => (token, None),
            };
            if let Some(i) = universe.position(base) {
                add(&mut m, i, exp.unwrap_or(1))?;
                continue;
            }
            // compact form over single-character ids, e.g. `ab^2c`
            let chars: Vec<char> = token.chars().collect();
            let mut pos = 0;
            while pos < chars.len() {
                let id = chars[pos].to_string();
                let i = universe
                    .position(&id)
                    .ok_or_else(|| QpnError::UnknownElement(token.to_string()))?;
                pos += 1;
                let mut k = 1u64;
                if pos < chars.len() && chars[pos] == '^' {
                    let start = pos + 1;
                    let mut end = start;
                    while end < chars.len() && chars[end].is_ascii_digit() {
                        end += 1;
                    }
                    if end == start {
                        return Err(err("`^` must be followed by digits"));
                    }
                    let digits: String = chars[start..end].iter().collect();
                    k = digits.parse().map_err(|_| err("exponent out of range"))?;
                    pos = end;
                }
                add(&mut m, i, k)?;
            }
        }
        Ok(m)
    }

    /// JSON object form `{"a":1,"b":2}`; zero entries are omitted.
    pub fn to_json_map(&self) -> BTreeMap<String, u64> {
        self.entries().map(|(k, v)| (k.to_string(), v)).collect()
    }

    pub fn to_json_value(&self) -> serde_json::Value {
        let mut map = serde_json::Map::new();
        for (k, v) in self.entries() {
            map.insert(k.to_string(), serde_json::Value::from(v));
        }
        serde_json::Value::Object(map)
    }
}

impl PartialEq for Multiset {
    fn eq(&self, other: &Self) -> bool {
        self.exps == other.exps && (Arc::ptr_eq(&self.universe, &other.universe) || self.universe == other.universe)
    }
}

impl Eq for Multiset {}

impl Hash for Multiset {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.exps.hash(state);
    }
}

impl fmt::Display for Multiset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_unit() {
            return f.write_str("1");
        }
        let mut first = true;
        for (name, k) in self.entries() {
            if !first {
                f.write_str(" ")?;
            }
            first = false;
            if k == 1 {
                write!(f, "{name}")?;
            } else {
                write!(f, "{name}^{k}")?;
            }
        }
        Ok(())
    }
}

impl fmt::Debug for Multiset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Multiset({self})")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn abc() -> Arc<Universe> {
        Universe::new(["a", "b", "c"]).unwrap()
    }

    fn ms(u: &Arc<Universe>, s: &str) -> Multiset {
        Multiset::parse(u, s).unwrap()
    }

    #[test]
    fn mul_adds_exponents() {
        let u = abc();
        assert_eq!(ms(&u, "ab^2c").mul(&ms(&u, "bc")).unwrap(), ms(&u, "a b^3 c^2"));
        assert_eq!(ms(&u, "ab^2c").mul(&Multiset::unit(&u)).unwrap(), ms(&u, "ab^2c"));
        assert_eq!(ms(&u, "a^2").mul(&ms(&u, "a^3")).unwrap(), ms(&u, "a^5"));
    }

    #[test]
    fn mul_overflow_is_an_error() {
        let u = abc();
        let big = Multiset::from_exponents(&u, vec![u64::MAX, 0, 0]).unwrap();
        assert!(matches!(big.mul(&ms(&u, "a")), Err(QpnError::Overflow(_))));
    }

    #[test]
    fn universe_mismatch() {
        let u = abc();
        let v = Universe::new(["x"]).unwrap();
        assert!(matches!(
            ms(&u, "a").mul(&Multiset::unit(&v)),
            Err(QpnError::UniverseMismatch)
        ));
        assert!(ms(&u, "a").compare(&Multiset::unit(&v)).is_err());
    }

    #[test]
    fn compare_partial_order() {
        let u = abc();
        assert_eq!(ms(&u, "ab").compare(&ms(&u, "ab^2c")).unwrap(), MultisetOrdering::Less);
        assert_eq!(
            ms(&u, "ab^2c").compare(&ms(&u, "ab^2c")).unwrap(),
            MultisetOrdering::Equal
        );
        assert_eq!(
            ms(&u, "a^2").compare(&ms(&u, "b^2")).unwrap(),
            MultisetOrdering::Incomparable
        );
        assert_eq!(
            ms(&u, "a^2 b").compare(&ms(&u, "a")).unwrap(),
            MultisetOrdering::Greater
        );
    }

    #[test]
    fn truncated_difference() {
        let u = abc();
        assert_eq!(ms(&u, "ab^2c").diff(&ms(&u, "b^3")).unwrap(), ms(&u, "ac"));
        assert_eq!(ms(&u, "ab").diff(&Multiset::unit(&u)).unwrap(), ms(&u, "ab"));
        assert!(ms(&u, "ab").diff(&ms(&u, "ab")).unwrap().is_unit());
    }

    #[test]
    fn meet_and_join() {
        let u = abc();
        let (m, j) = ms(&u, "ab^2").meet_join(&ms(&u, "a^2b")).unwrap();
        assert_eq!((m, j), (ms(&u, "ab"), ms(&u, "a^2b^2")));
        let (m, j) = ms(&u, "ab").meet_join(&Multiset::unit(&u)).unwrap();
        assert!(m.is_unit());
        assert_eq!(j, ms(&u, "ab"));
        let (m, j) = ms(&u, "a").meet_join(&ms(&u, "b")).unwrap();
        assert!(m.is_unit());
        assert_eq!(j, ms(&u, "ab"));
    }

    #[test]
    fn lift_fixture_flows() {
        // per-transition input flows chosen so the lifted totals give A^3 B^5 C
        let t = abc();
        let p = Universe::new(["A", "B", "C", "D", "E"]).unwrap();
        let images = [ms(&p, "AB"), ms(&p, "AB^2"), ms(&p, "C")];
        let lifted = ms(&t, "ab^2c").lift(&p, |i| images.get(i)).unwrap();
        // hand sum: A = 1+2*1+0, B = 1+2*2+0, C = 0+0+1
        assert_eq!(lifted, ms(&p, "A^3 B^5 C"));
        assert!(Multiset::unit(&t).lift(&p, |i| images.get(i)).unwrap().is_unit());
        let sq = ms(&t, "a^2").lift(&p, |i| images.get(i)).unwrap();
        assert_eq!(sq, images[0].mul(&images[0]).unwrap());
    }

    #[test]
    fn lift_missing_image() {
        let t = abc();
        let p = Universe::new(["A"]).unwrap();
        let images = [ms(&p, "A")];
        assert!(matches!(
            ms(&t, "ab").lift(&p, |i| images.get(i)),
            Err(QpnError::MissingImage(_))
        ));
    }

    #[test]
    fn monomial_syntax() {
        let u = abc();
        assert_eq!(ms(&u, "a b^2 c"), ms(&u, "ab^2c"));
        assert_eq!(ms(&u, "a b^2 c").to_string(), "a b^2 c");
        assert_eq!(Multiset::unit(&u).to_string(), "1");
        assert!(ms(&u, "1").is_unit());
        assert!(Multiset::parse(&u, "x").is_err());
        assert!(Multiset::parse(&u, "").is_err());
        let long = Universe::new(["P.0", "P.1"]).unwrap();
        assert_eq!(ms(&long, "P.1^3").count("P.1"), 3);
    }

    #[test]
    fn degree_and_cardinality() {
        let u = abc();
        let s = ms(&u, "ab^2c");
        assert_eq!(s.degree(), 2);
        assert_eq!(s.cardinality(), 4);
        assert_eq!(Multiset::unit(&u).degree(), 0);
    }

    #[test]
    fn invalid_ids_rejected() {
        assert!(Universe::new(["a b"]).is_err());
        assert!(Universe::new(["1"]).is_err());
        assert!(Universe::new(["a", "a"]).is_err());
        assert!(Universe::new(["x^2"]).is_err());
    }
}
