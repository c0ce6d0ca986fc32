use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{QpnError, Result};
use crate::multiset::{Multiset, Universe};

/// Which markings a rule applies to.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MarkingPattern {
    Exact(Multiset),
    /// Required token counts on a subset of places; other places are free.
    /// The empty list matches every marking.
    Partial(Vec<(usize, u64)>),
}

impl MarkingPattern {
    pub fn any() -> Self {
        MarkingPattern::Partial(Vec::new())
    }

    pub fn matches(&self, m: &Multiset) -> bool {
        match self {
            MarkingPattern::Exact(e) => e == m,
            MarkingPattern::Partial(req) => req.iter().all(|&(p, k)| m.get(p) == k),
        }
    }

    pub fn is_exact(&self) -> bool {
        matches!(self, MarkingPattern::Exact(_))
    }
}

/// One override `r_m(t) = amplitude` for markings matching `marking` and
/// the concurrence `step` (the unit concurrence is the resting rate).
#[derive(Debug, Clone, PartialEq)]
pub struct RateRule {
    pub marking: MarkingPattern,
    pub step: Multiset,
    pub amplitude: Complex64,
    /// Source expression the amplitude was evaluated from, kept for round trips.
    pub expr: Option<String>,
}

impl RateRule {
    pub fn new(marking: MarkingPattern, step: Multiset, amplitude: Complex64) -> Self {
        RateRule {
            marking,
            step,
            amplitude,
            expr: None,
        }
    }
}

/// Marking-dependent rate function: a default amplitude with ordered
/// overrides. Exact-marking rules take precedence over partial ones;
/// within each class the earliest rule wins.
#[derive(Debug, Clone, PartialEq)]
pub struct RateFunction {
    pub default: Complex64,
    pub default_expr: Option<String>,
    pub rules: Vec<RateRule>,
}

impl Default for RateFunction {
    fn default() -> Self {
        RateFunction::constant(Complex64::new(1.0, 0.0))
    }
}

impl RateFunction {
    pub fn constant(default: Complex64) -> Self {
        RateFunction {
            default,
            default_expr: None,
            rules: Vec::new(),
        }
    }

    pub fn with_rule(mut self, rule: RateRule) -> Self {
        self.rules.push(rule);
        self
    }

    /// `r_m(t)`.
    pub fn rate(&self, m: &Multiset, t: &Multiset) -> Complex64 {
        let candidates = || self.rules.iter().filter(|r| &r.step == t && r.marking.matches(m));
        candidates()
            .find(|r| r.marking.is_exact())
            .or_else(|| candidates().next())
            .map_or(self.default, |r| r.amplitude)
    }

    /// Checks every rule is expressed over the given places and transitions
    /// and every amplitude is finite.
    pub fn validate(&self, places: &Arc<Universe>, transitions: &Arc<Universe>) -> Result<()> {
        if !finite(self.default) {
            return Err(QpnError::NonFinite);
        }
        for r in &self.rules {
            if **r.step.universe() != **transitions {
                return Err(QpnError::UniverseMismatch);
            }
            match &r.marking {
                MarkingPattern::Exact(m) if **m.universe() != **places => return Err(QpnError::UniverseMismatch),
                MarkingPattern::Partial(req) if req.iter().any(|&(p, _)| p >= places.len()) => {
                    return Err(QpnError::UniverseMismatch)
                }
                _ => {}
            }
            if !finite(r.amplitude) {
                return Err(QpnError::NonFinite);
            }
        }
        Ok(())
    }
}

pub(crate) fn finite(z: Complex64) -> bool {
    z.re.is_finite() && z.im.is_finite()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::net::fixtures::two_bits;

    #[test]
    fn exact_beats_partial_then_file_order() {
        let sys = two_bits();
        let t = |s: &str| Multiset::parse(sys.transitions(), s).unwrap();
        let m = sys.marking("P1 Q0").unwrap();
        let p1 = sys.places().position("P1").unwrap();
        let rf = RateFunction::constant(Complex64::new(0.0, 0.0))
            .with_rule(RateRule::new(
                MarkingPattern::Partial(vec![(p1, 1)]),
                t("Qu"),
                Complex64::new(2.0, 0.0),
            ))
            .with_rule(RateRule::new(MarkingPattern::any(), t("Qu"), Complex64::new(3.0, 0.0)))
            .with_rule(RateRule::new(
                MarkingPattern::Exact(m.clone()),
                t("Qu"),
                Complex64::new(4.0, 0.0),
            ))
            .with_rule(RateRule::new(
                MarkingPattern::Exact(m.clone()),
                t("Qu"),
                Complex64::new(5.0, 0.0),
            ));
        assert_eq!(rf.rate(&m, &t("Qu")).re, 4.0);
        let other = sys.marking("P1 Q1").unwrap();
        assert_eq!(rf.rate(&other, &t("Qu")).re, 2.0);
        let p0 = sys.marking("P0 Q0").unwrap();
        assert_eq!(rf.rate(&p0, &t("Qu")).re, 3.0);
        assert_eq!(rf.rate(&p0, &t("Pu")).re, 0.0);
    }
}
