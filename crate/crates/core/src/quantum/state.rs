use std::collections::{BTreeMap, HashMap};
use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{QpnError, Result};
use crate::multiset::Multiset;
use crate::net::StateSpace;

/// Normalisation convention for a superposition.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Norm {
    /// `sqrt(sum |a_m|^2)`.
    L2,
    /// `sum |a_m|`.
    SumOfModuli,
}

/// Complex amplitudes over a reachability set, in canonical marking order.
#[derive(Debug, Clone)]
pub struct Superposition {
    space: Arc<StateSpace>,
    amps: Vec<Complex64>,
}

/// Measurement outcome request.
#[derive(Debug, Clone)]
pub enum Outcome {
    /// Sub-marking over the measured places (entries elsewhere are ignored).
    Marking(Multiset),
    /// Draw the outcome from the Born distribution with this seed.
    Sampled(u64),
}

#[derive(Debug, Clone)]
pub struct Measurement {
    /// Observed sub-marking, zero outside the measured places.
    pub outcome: Multiset,
    pub probability: f64,
    pub collapsed: Superposition,
}

/// Markings arranged as a grid `(left restriction, right restriction)`.
struct Factoring {
    left: Vec<Multiset>,
    right: Vec<Multiset>,
    cell: Vec<Vec<usize>>,
}

impl Superposition {
    pub fn new(space: Arc<StateSpace>, amps: Vec<Complex64>) -> Result<Self> {
        if amps.len() != space.len() {
            return Err(QpnError::Dimension {
                expected: space.len(),
                found: amps.len(),
            });
        }
        if amps.iter().any(|z| !super::rate::finite(*z)) {
            return Err(QpnError::NonFinite);
        }
        Ok(Superposition { space, amps })
    }

    pub fn zero(space: &Arc<StateSpace>) -> Self {
        Superposition {
            space: Arc::clone(space),
            amps: vec![Complex64::new(0.0, 0.0); space.len()],
        }
    }

    pub fn basis(space: &Arc<StateSpace>, index: usize) -> Self {
        let mut s = Superposition::zero(space);
        s.amps[index] = Complex64::new(1.0, 0.0);
        s
    }

    /// `|m>` for a reachable marking.
    pub fn ket(space: &Arc<StateSpace>, m: &Multiset) -> Result<Self> {
        let i = space
            .index_of(m)
            .ok_or_else(|| QpnError::UnknownElement(format!("marking `{m}` is not reachable")))?;
        Ok(Superposition::basis(space, i))
    }

    /// Builds from `(marking, amplitude)` pairs; repeated markings add up.
    pub fn from_pairs(space: &Arc<StateSpace>, pairs: &[(Multiset, Complex64)]) -> Result<Self> {
        let mut s = Superposition::zero(space);
        for (m, z) in pairs {
            let i = space
                .index_of(m)
                .ok_or_else(|| QpnError::UnknownElement(format!("marking `{m}` is not reachable")))?;
            s.amps[i] += z;
        }
        Superposition::new(Arc::clone(space), s.amps)
    }

    pub fn space(&self) -> &Arc<StateSpace> {
        &self.space
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn len(&self) -> usize {
        self.amps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.amps.is_empty()
    }

    pub fn amplitude(&self, m: &Multiset) -> Option<Complex64> {
        self.space.index_of(m).map(|i| self.amps[i])
    }

    /// Non-zero entries as `(marking, amplitude)` in canonical order.
    pub fn support(&self) -> Vec<(&Multiset, Complex64)> {
        self.amps
            .iter()
            .enumerate()
            .filter(|(_, z)| z.norm_sqr() > 0.0)
            .map(|(i, z)| (self.space.marking(i), *z))
            .collect()
    }

    pub fn norm(&self, kind: Norm) -> f64 {
        match kind {
            Norm::L2 => self.amps.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt(),
            Norm::SumOfModuli => self.amps.iter().map(|z| z.norm()).sum(),
        }
    }

    pub fn normalize(&self, kind: Norm) -> Result<Self> {
        let n = self.norm(kind);
        if n == 0.0 {
            return Err(QpnError::ZeroVector);
        }
        Ok(self.scale(Complex64::new(1.0 / n, 0.0)))
    }

    pub fn scale(&self, c: Complex64) -> Self {
        Superposition {
            space: Arc::clone(&self.space),
            amps: self.amps.iter().map(|z| z * c).collect(),
        }
    }

    pub fn is_normal(&self, tol: f64) -> bool {
        (self.norm(Norm::L2) - 1.0).abs() < tol
    }

    /// `<self|other>`, conjugate-linear in `self`.
    pub fn inner(&self, other: &Superposition) -> Result<Complex64> {
        if self.len() != other.len() {
            return Err(QpnError::Dimension {
                expected: self.len(),
                found: other.len(),
            });
        }
        Ok(self.amps.iter().zip(&other.amps).map(|(a, b)| a.conj() * b).sum())
    }

    /// `|<u|v>|` of the L2-normalised states; 1 iff equal up to global phase.
    pub fn fidelity(&self, other: &Superposition) -> Result<f64> {
        let u = self.normalize(Norm::L2)?;
        let v = other.normalize(Norm::L2)?;
        Ok(u.inner(&v)?.norm())
    }

    /// `|a_m|^2` of the L2-normalised state.
    pub fn born_probabilities(&self) -> Result<Vec<f64>> {
        let n = self.norm(Norm::L2);
        if n == 0.0 {
            return Err(QpnError::ZeroVector);
        }
        let n2 = n * n;
        Ok(self.amps.iter().map(|z| z.norm_sqr() / n2).collect())
    }

    /// Multinomial draw of `shots` outcomes. Counts are keyed by marking index.
    pub fn sample(&self, shots: u64, seed: u64) -> Result<BTreeMap<usize, u64>> {
        let p = self.born_probabilities()?;
        let dist = WeightedIndex::new(&p).map_err(|_| QpnError::ZeroVector)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut counts = BTreeMap::new();
        for _ in 0..shots {
            *counts.entry(dist.sample(&mut rng)).or_insert(0) += 1;
        }
        Ok(counts)
    }

    fn factor(&self, places: &[usize]) -> Result<Factoring> {
        let np = self.space.places().len();
        if let Some(&p) = places.iter().find(|&&p| p >= np) {
            return Err(QpnError::UnknownElement(format!("place index {p}")));
        }
        let rest: Vec<usize> = (0..np).filter(|p| !places.contains(p)).collect();
        let mut left: Vec<Multiset> = Vec::new();
        let mut right: Vec<Multiset> = Vec::new();
        let mut li: HashMap<Multiset, usize> = HashMap::new();
        let mut ri: HashMap<Multiset, usize> = HashMap::new();
        let mut pairs = Vec::with_capacity(self.len());
        for m in self.space.markings() {
            let l = m.restrict(places);
            let r = m.restrict(&rest);
            let a = *li.entry(l.clone()).or_insert_with(|| {
                left.push(l);
                left.len() - 1
            });
            let b = *ri.entry(r.clone()).or_insert_with(|| {
                right.push(r);
                right.len() - 1
            });
            pairs.push((a, b));
        }
        if left.len() * right.len() != self.len() {
            return Err(QpnError::NotFactoring);
        }
        let mut cell = vec![vec![usize::MAX; right.len()]; left.len()];
        for (i, (a, b)) in pairs.into_iter().enumerate() {
            cell[a][b] = i;
        }
        Ok(Factoring { left, right, cell })
    }

    /// Measures the places in `places`. The probability of an outcome is
    /// the Born weight of all markings agreeing with it on those places;
    /// the collapsed state keeps only those markings, renormalised.
    pub fn measure(&self, places: &[usize], outcome: Outcome) -> Result<Measurement> {
        let f = self.factor(places)?;
        let p = self.born_probabilities()?;
        let weights: Vec<f64> = f.cell.iter().map(|row| row.iter().map(|&i| p[i]).sum()).collect();
        let k = match outcome {
            Outcome::Marking(m) => {
                let key = m.restrict(places);
                f.left
                    .iter()
                    .position(|l| l.exponents() == key.exponents())
                    .ok_or_else(|| QpnError::ZeroProbability(format!("outcome `{key}` is not reachable")))?
            }
            Outcome::Sampled(seed) => WeightedIndex::new(&weights)
                .map_err(|_| QpnError::ZeroVector)?
                .sample(&mut ChaCha8Rng::seed_from_u64(seed)),
        };
        let probability = weights[k];
        if probability == 0.0 {
            return Err(QpnError::ZeroProbability(format!(
                "outcome `{}` has probability 0",
                f.left[k]
            )));
        }
        let mut amps = vec![Complex64::new(0.0, 0.0); self.len()];
        for &i in &f.cell[k] {
            amps[i] = self.amps[i];
        }
        let collapsed = Superposition::new(Arc::clone(&self.space), amps)?.normalize(Norm::L2)?;
        Ok(Measurement {
            outcome: f.left[k].clone(),
            probability,
            collapsed,
        })
    }

    /// Probabilities of every outcome on `places`, keyed by the sub-marking.
    pub fn outcome_distribution(&self, places: &[usize]) -> Result<Vec<(Multiset, f64)>> {
        let f = self.factor(places)?;
        let p = self.born_probabilities()?;
        Ok(f.left
            .iter()
            .zip(&f.cell)
            .map(|(l, row)| (l.clone(), row.iter().map(|&i| p[i]).sum()))
            .collect())
    }

    /// Amplitudes reshaped to a `left x right` matrix over the bipartition
    /// `(places, rest)`.
    pub fn bipartite_matrix(&self, places: &[usize]) -> Result<DMatrix<Complex64>> {
        let f = self.factor(places)?;
        Ok(DMatrix::from_fn(f.left.len(), f.right.len(), |i, j| {
            self.amps[f.cell[i][j]]
        }))
    }

    /// Entangled iff the bipartite amplitude matrix has numerical rank above
    /// one, dropping singular values below `tol * sigma_max`.
    pub fn is_entangled(&self, places: &[usize], tol: f64) -> Result<bool> {
        let m = self.bipartite_matrix(places)?;
        let sv = m.svd(false, false).singular_values;
        let max = sv.iter().copied().fold(0.0, f64::max);
        if max == 0.0 {
            return Err(QpnError::ZeroVector);
        }
        Ok(sv.iter().filter(|&&s| s > tol * max).count() > 1)
    }

    /// Restriction of a product state onto `places`: the factor state over
    /// the left sub-markings, read from the heaviest column of the bipartite matrix.
    pub fn factor_state(&self, places: &[usize]) -> Result<(Vec<Multiset>, Vec<Complex64>)> {
        let f = self.factor(places)?;
        let m = self.bipartite_matrix(places)?;
        let (mut best, mut col) = (0.0, 0);
        for j in 0..m.ncols() {
            let w: f64 = m.column(j).iter().map(|z| z.norm_sqr()).sum();
            if w > best {
                best = w;
                col = j;
            }
        }
        if best == 0.0 {
            return Err(QpnError::ZeroVector);
        }
        let n = best.sqrt();
        Ok((f.left, m.column(col).iter().map(|z| z / n).collect()))
    }
}
