//! Finite-support probability measures, input laws and stationary input processes.

use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;

use rand::Rng as _;
use rand_distr::{Distribution, Exp, Normal, StandardNormal};

use crate::error::{bail, Error, Result};
use crate::rng::{self, Rng};

/// Atoms lighter than this are dropped (and the rest renormalized).
pub const WEIGHT_FLOOR: f64 = 1e-15;
/// Default cap on the support size of product measures.
pub const DEFAULT_PRODUCT_CAP: usize = 1_000_000;

const SUM_TOL: f64 = 1e-9;

/// Probability measure with finitely many weighted atoms in `R^dim`.
///
/// Coordinates are stored flat, atom `i` occupying `coords[i*dim..(i+1)*dim]`.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalMeasure {
    dim: usize,
    coords: Vec<f64>,
    weights: Vec<f64>,
}

impl EmpiricalMeasure {
    /// Builds a measure whose weights already sum to one (within `1e-9`).
    /// Weights are renormalized exactly and atoms below [`WEIGHT_FLOOR`] dropped.
    pub fn new(dim: usize, coords: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        let total = Self::check_parts(dim, &coords, &weights)?;
        if (total - 1.0).abs() > SUM_TOL {
            bail!(Domain, "weights sum to {total}, expected 1");
        }
        Self::finish(dim, coords, weights, total)
    }

    /// Builds a measure from any nonnegative weights with positive total mass.
    pub fn from_unnormalized(dim: usize, coords: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        let total = Self::check_parts(dim, &coords, &weights)?;
        if !(total > 0.0) {
            bail!(Domain, "total mass must be positive");
        }
        Self::finish(dim, coords, weights, total)
    }

    /// Equal weights on the given flat coordinates.
    pub fn uniform(dim: usize, coords: Vec<f64>) -> Result<Self> {
        if dim == 0 || coords.is_empty() || coords.len() % dim != 0 {
            bail!(Shape, "cannot split {} coordinates into points of dimension {dim}", coords.len());
        }
        let n = coords.len() / dim;
        Self::from_unnormalized(dim, coords, vec![1.0; n])
    }

    pub fn from_points(points: &[Vec<f64>]) -> Result<Self> {
        let Some(first) = points.first() else {
            bail!(Shape, "support must be nonempty");
        };
        let dim = first.len();
        if points.iter().any(|p| p.len() != dim) {
            bail!(Shape, "support points have differing dimensions");
        }
        Self::uniform(dim, points.concat())
    }

    pub fn dirac(point: &[f64]) -> Self {
        assert!(!point.is_empty(), "dirac needs a point of positive dimension");
        Self { dim: point.len(), coords: point.to_vec(), weights: vec![1.0] }
    }

    fn check_parts(dim: usize, coords: &[f64], weights: &[f64]) -> Result<f64> {
        if dim == 0 {
            bail!(Shape, "points must have positive dimension");
        }
        if weights.is_empty() {
            bail!(Shape, "support must be nonempty");
        }
        if coords.len() != dim * weights.len() {
            bail!(Shape, "{} coordinates do not match {} atoms of dimension {dim}", coords.len(), weights.len());
        }
        if coords.iter().any(|c| !c.is_finite()) {
            bail!(Domain, "support coordinates must be finite");
        }
        if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            bail!(Domain, "weights must be finite and nonnegative");
        }
        Ok(weights.iter().sum())
    }

    fn finish(dim: usize, mut coords: Vec<f64>, mut weights: Vec<f64>, total: f64) -> Result<Self> {
        for w in weights.iter_mut() {
            *w /= total;
        }
        if weights.iter().any(|&w| w < WEIGHT_FLOOR) {
            let mut kc = Vec::with_capacity(coords.len());
            let mut kw = Vec::with_capacity(weights.len());
            for (i, &w) in weights.iter().enumerate() {
                if w >= WEIGHT_FLOOR {
                    kc.extend_from_slice(&coords[i * dim..(i + 1) * dim]);
                    kw.push(w);
                }
            }
            if kw.is_empty() {
                bail!(Degenerate, "every atom fell below the weight floor");
            }
            let t: f64 = kw.iter().sum();
            for w in kw.iter_mut() {
                *w /= t;
            }
            coords = kc;
            weights = kw;
        }
        Ok(Self { dim, coords, weights })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn weight(&self, i: usize) -> f64 {
        self.weights[i]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn iter(&self) -> impl Iterator<Item = (&[f64], f64)> + '_ {
        self.coords.chunks_exact(self.dim).zip(self.weights.iter().copied())
    }

    /// Divides weights by their sum. Idempotent up to rounding.
    pub fn normalized(&self) -> Self {
        let total: f64 = self.weights.iter().sum();
        Self { dim: self.dim, coords: self.coords.clone(), weights: self.weights.iter().map(|w| w / total).collect() }
    }

    /// Canonical form: atoms sorted lexicographically, exactly coincident
    /// atoms merged with summed weights.
    pub fn merged(&self) -> Self {
        let d = self.dim;
        let mut order: Vec<usize> = (0..self.len()).collect();
        order.sort_by(|&a, &b| lex_cmp(self.point(a), self.point(b)));
        let mut coords: Vec<f64> = Vec::with_capacity(self.coords.len());
        let mut weights: Vec<f64> = Vec::with_capacity(self.len());
        for i in order {
            let p = self.point(i);
            let n = weights.len();
            if n > 0 && coords[(n - 1) * d..n * d] == *p {
                weights[n - 1] += self.weights[i];
            } else {
                coords.extend_from_slice(p);
                weights.push(self.weights[i]);
            }
        }
        Self { dim: d, coords, weights }
    }

    pub fn mean(&self) -> Vec<f64> {
        let mut m = vec![0.0; self.dim];
        for (p, w) in self.iter() {
            for (mi, pi) in m.iter_mut().zip(p) {
                *mi += w * pi;
            }
        }
        m
    }

    /// Marginal on the coordinate block `start..start+len` (atoms are not merged).
    pub fn project(&self, start: usize, len: usize) -> Result<Self> {
        if len == 0 || start + len > self.dim {
            bail!(Shape, "block {start}..{} outside dimension {}", start + len, self.dim);
        }
        let mut coords = Vec::with_capacity(self.len() * len);
        for p in self.coords.chunks_exact(self.dim) {
            coords.extend_from_slice(&p[start..start + len]);
        }
        Ok(Self { dim: len, coords, weights: self.weights.clone() })
    }

    /// Applies `f` to every atom without merging images. `f` writes `out_dim` values.
    pub fn map_points(&self, out_dim: usize, mut f: impl FnMut(&[f64], &mut [f64])) -> Self {
        let mut coords = vec![0.0; self.len() * out_dim];
        for (p, out) in self.coords.chunks_exact(self.dim).zip(coords.chunks_exact_mut(out_dim)) {
            f(p, out);
        }
        Self { dim: out_dim, coords, weights: self.weights.clone() }
    }

    /// Inverse-CDF sampler over atom indices.
    pub fn index_sampler(&self) -> IndexSampler {
        let mut cum = Vec::with_capacity(self.len());
        let mut acc = 0.0;
        for w in &self.weights {
            acc += w;
            cum.push(acc);
        }
        IndexSampler { cum }
    }
}

pub(crate) fn lex_cmp(a: &[f64], b: &[f64]) -> Ordering {
    for (x, y) in a.iter().zip(b) {
        match x.total_cmp(y) {
            Ordering::Equal => continue,
            o => return o,
        }
    }
    Ordering::Equal
}

/// Picks atom indices from a uniform variate.
#[derive(Debug, Clone)]
pub struct IndexSampler {
    cum: Vec<f64>,
}

impl IndexSampler {
    /// Smallest index whose cumulative weight exceeds `u · total`.
    pub fn index_for(&self, u: f64) -> usize {
        let total = self.cum[self.cum.len() - 1];
        let target = u * total;
        let i = self.cum.partition_point(|&c| c <= target);
        i.min(self.cum.len() - 1)
    }

    pub fn sample(&self, rng: &mut Rng) -> usize {
        self.index_for(rng.random::<f64>())
    }
}

/// Parametric families of input laws. Continuous families act coordinate-wise
/// (independent coordinates) when the dimension exceeds one.
#[derive(Debug, Clone, PartialEq)]
pub enum Family {
    Dirac(Vec<f64>),
    FiniteAtoms(EmpiricalMeasure),
    Uniform { lo: f64, hi: f64 },
    Exponential { rate: f64 },
    Gaussian { mean: f64, std: f64 },
    /// Mean 0, variance 1.
    StandardizedGaussian,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DistributionSpec {
    family: Family,
    dim: usize,
}

impl DistributionSpec {
    pub fn new(family: Family, dim: usize) -> Result<Self> {
        if dim == 0 {
            bail!(Domain, "distribution dimension must be positive");
        }
        match &family {
            Family::Dirac(p) if p.len() != dim => bail!(Shape, "dirac point has dimension {}, expected {dim}", p.len()),
            Family::Dirac(p) if p.iter().any(|v| !v.is_finite()) => bail!(Domain, "dirac point must be finite"),
            Family::FiniteAtoms(m) if m.dim() != dim => {
                bail!(Shape, "atoms have dimension {}, expected {dim}", m.dim())
            }
            Family::Uniform { lo, hi } if !(lo < hi) || !lo.is_finite() || !hi.is_finite() => {
                bail!(Domain, "uniform needs finite lo < hi, got [{lo}, {hi}]")
            }
            Family::Exponential { rate } if !(*rate > 0.0) || !rate.is_finite() => {
                bail!(Domain, "exponential rate must be positive, got {rate}")
            }
            Family::Gaussian { mean, std } if !(*std > 0.0) || !mean.is_finite() || !std.is_finite() => {
                bail!(Domain, "gaussian needs a positive std, got {std}")
            }
            _ => {}
        }
        Ok(Self { family, dim })
    }

    pub fn dirac(point: &[f64]) -> Result<Self> {
        Self::new(Family::Dirac(point.to_vec()), point.len())
    }

    pub fn atoms(measure: EmpiricalMeasure) -> Self {
        let dim = measure.dim();
        Self { family: Family::FiniteAtoms(measure), dim }
    }

    pub fn uniform(lo: f64, hi: f64, dim: usize) -> Result<Self> {
        Self::new(Family::Uniform { lo, hi }, dim)
    }

    pub fn exponential(rate: f64) -> Result<Self> {
        Self::new(Family::Exponential { rate }, 1)
    }

    pub fn gaussian(mean: f64, std: f64, dim: usize) -> Result<Self> {
        Self::new(Family::Gaussian { mean, std }, dim)
    }

    pub fn standardized_gaussian(dim: usize) -> Result<Self> {
        Self::new(Family::StandardizedGaussian, dim)
    }

    pub fn family(&self) -> &Family {
        &self.family
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// The law as an exact measure when it has finite support.
    pub fn finite_support(&self) -> Option<EmpiricalMeasure> {
        match &self.family {
            Family::Dirac(p) => Some(EmpiricalMeasure::dirac(p)),
            Family::FiniteAtoms(m) => Some(m.clone()),
            _ => None,
        }
    }

    pub fn sampler(&self) -> Sampler<'_> {
        let atoms = match &self.family {
            Family::FiniteAtoms(m) => Some(m.index_sampler()),
            _ => None,
        };
        Sampler { spec: self, atoms }
    }
}

/// Draws from a [`DistributionSpec`], with any per-law setup done once.
pub struct Sampler<'a> {
    spec: &'a DistributionSpec,
    atoms: Option<IndexSampler>,
}

impl Sampler<'_> {
    pub fn sample_into(&self, rng: &mut Rng, out: &mut [f64]) {
        match &self.spec.family {
            Family::Dirac(p) => out.copy_from_slice(p),
            Family::FiniteAtoms(m) => {
                let i = self.atoms.as_ref().expect("atom sampler").sample(rng);
                out.copy_from_slice(m.point(i));
            }
            Family::Uniform { lo, hi } => {
                for o in out.iter_mut() {
                    *o = lo + (hi - lo) * rng.random::<f64>();
                }
            }
            Family::Exponential { rate } => {
                let e = Exp::new(*rate).expect("validated rate");
                for o in out.iter_mut() {
                    *o = e.sample(rng);
                }
            }
            Family::Gaussian { mean, std } => {
                let n = Normal::new(*mean, *std).expect("validated std");
                for o in out.iter_mut() {
                    *o = n.sample(rng);
                }
            }
            Family::StandardizedGaussian => {
                for o in out.iter_mut() {
                    *o = StandardNormal.sample(rng);
                }
            }
        }
    }

    pub fn sample(&self, rng: &mut Rng) -> Vec<f64> {
        let mut v = vec![0.0; self.spec.dim];
        self.sample_into(rng, &mut v);
        v
    }
}

/// Equal-weight measure on `n_atoms` i.i.d. draws. Deterministic per seed;
/// specs sharing a seed share their underlying random stream.
pub fn discretize(spec: &DistributionSpec, n_atoms: usize, rng_seed: u64) -> Result<EmpiricalMeasure> {
    if n_atoms == 0 {
        bail!(Domain, "n_atoms must be at least 1");
    }
    let mut rng = rng::stream(rng_seed, "discretize");
    let sampler = spec.sampler();
    let mut coords = vec![0.0; n_atoms * spec.dim];
    for chunk in coords.chunks_exact_mut(spec.dim) {
        sampler.sample_into(&mut rng, chunk);
    }
    EmpiricalMeasure::uniform(spec.dim, coords)
}

/// Finite-state Markov chain started in its stationary law.
#[derive(Debug, Clone, PartialEq)]
pub struct MarkovChain {
    states: EmpiricalMeasure,
    transition: Vec<f64>,
    stationary: Vec<f64>,
}

impl MarkovChain {
    /// `states` are the chain's atoms (one row per state, weights ignored),
    /// `transition` is row-major `k×k` and `stationary` a left fixed vector.
    pub fn new(states: Vec<Vec<f64>>, transition: Vec<f64>, stationary: Vec<f64>) -> Result<Self> {
        let k = states.len();
        if k == 0 || transition.len() != k * k || stationary.len() != k {
            bail!(Shape, "markov chain with {k} states needs a {k}x{k} matrix and {k} stationary weights");
        }
        for (r, row) in transition.chunks_exact(k).enumerate() {
            let s: f64 = row.iter().sum();
            if row.iter().any(|p| !(*p >= 0.0)) || (s - 1.0).abs() > 1e-10 {
                bail!(Contract, "transition row {r} is not a probability vector");
            }
        }
        let s: f64 = stationary.iter().sum();
        if stationary.iter().any(|p| !(*p >= 0.0)) || (s - 1.0).abs() > 1e-10 {
            bail!(Contract, "stationary weights are not a probability vector");
        }
        for j in 0..k {
            let v: f64 = (0..k).map(|i| stationary[i] * transition[i * k + j]).sum();
            if (v - stationary[j]).abs() > 1e-10 {
                bail!(Contract, "stationary weights are not a left fixed vector of the transition matrix (state {j})");
            }
        }
        let dim = states[0].len();
        if dim == 0 || states.iter().any(|p| p.len() != dim) {
            bail!(Shape, "markov states must share a positive dimension");
        }
        let atoms = EmpiricalMeasure { dim, coords: states.concat(), weights: vec![1.0 / k as f64; k] };
        Ok(Self { states: atoms, transition, stationary })
    }

    pub fn n_states(&self) -> usize {
        self.stationary.len()
    }

    pub fn dim(&self) -> usize {
        self.states.dim()
    }

    pub fn state(&self, i: usize) -> &[f64] {
        self.states.point(i)
    }

    fn draw(probs: &[f64], u: f64) -> usize {
        let mut acc = 0.0;
        for (i, p) in probs.iter().enumerate() {
            acc += p;
            if u < acc {
                return i;
            }
        }
        // rounding left u above the final partial sum: take the last state with mass
        probs.iter().rposition(|p| *p > 0.0).unwrap_or(0)
    }
}

/// A stationary input process.
#[derive(Debug, Clone, PartialEq)]
pub enum ProcessSpec {
    Iid(DistributionSpec),
    FiniteMarkov(MarkovChain),
}

impl ProcessSpec {
    pub fn dim(&self) -> usize {
        match self {
            ProcessSpec::Iid(s) => s.dim(),
            ProcessSpec::FiniteMarkov(c) => c.dim(),
        }
    }

    /// The time-independent one-dimensional marginal law.
    pub fn marginal(&self) -> Result<DistributionSpec> {
        match self {
            ProcessSpec::Iid(s) => Ok(s.clone()),
            ProcessSpec::FiniteMarkov(c) => {
                let m = EmpiricalMeasure::new(c.dim(), c.states.coords.clone(), c.stationary.clone())?;
                Ok(DistributionSpec::atoms(m))
            }
        }
    }

    /// Streams a path of the given length into `push`, using `rng`.
    pub(crate) fn generate(&self, rng: &mut Rng, length: usize, mut push: impl FnMut(&[f64])) {
        match self {
            ProcessSpec::Iid(spec) => {
                let sampler = spec.sampler();
                let mut buf = vec![0.0; spec.dim()];
                for _ in 0..length {
                    sampler.sample_into(rng, &mut buf);
                    push(&buf);
                }
            }
            ProcessSpec::FiniteMarkov(c) => {
                let k = c.n_states();
                let mut s = MarkovChain::draw(&c.stationary, rng.random::<f64>());
                for step in 0..length {
                    if step > 0 {
                        s = MarkovChain::draw(&c.transition[s * k..(s + 1) * k], rng.random::<f64>());
                    }
                    push(c.state(s));
                }
            }
        }
    }
}

/// One realization of the stationary process.
pub fn sample_path(spec: &ProcessSpec, length: usize, rng_seed: u64) -> Result<Vec<Vec<f64>>> {
    if length == 0 {
        bail!(Domain, "path length must be at least 1");
    }
    let mut rng = rng::stream(rng_seed, "sample_path");
    let mut out = Vec::with_capacity(length);
    spec.generate(&mut rng, length, |p| out.push(p.to_vec()));
    Ok(out)
}

/// `θ ⊗ μ` on concatenated points `(u, x)`; atom `(i, j)` has index `i·|μ| + j`.
pub fn product_measure(theta: &EmpiricalMeasure, mu: &EmpiricalMeasure, cap: usize) -> Result<EmpiricalMeasure> {
    let size = theta.len().checked_mul(mu.len()).unwrap_or(usize::MAX);
    if size > cap {
        return Err(Error::Resource(alloc::format!(
            "product support {} x {} = {size} exceeds the cap of {cap}",
            theta.len(),
            mu.len()
        )));
    }
    let dim = theta.dim() + mu.dim();
    let mut coords = Vec::with_capacity(size * dim);
    let mut weights = Vec::with_capacity(size);
    for (u, wu) in theta.iter() {
        for (x, wx) in mu.iter() {
            coords.extend_from_slice(u);
            coords.extend_from_slice(x);
            weights.push(wu * wx);
        }
    }
    EmpiricalMeasure::from_unnormalized(dim, coords, weights)
}

/// Left-continuous generalized inverse CDF `inf{x : F(x) ≥ p}` of a 1-D measure.
pub fn quantile(mu: &EmpiricalMeasure, p: f64) -> Result<f64> {
    if mu.dim() != 1 {
        bail!(Shape, "quantile needs a one-dimensional measure, got dimension {}", mu.dim());
    }
    if !(0.0..=1.0).contains(&p) {
        bail!(Domain, "probability level {p} outside [0, 1]");
    }
    let sorted = mu.merged();
    let mut acc = 0.0;
    for (x, w) in sorted.iter() {
        acc += w;
        if acc >= p - 4.0 * f64::EPSILON {
            return Ok(x[0]);
        }
    }
    Ok(sorted.point(sorted.len() - 1)[0])
}

impl core::fmt::Display for Family {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            Family::Dirac(p) => write!(f, "dirac{p:?}"),
            Family::FiniteAtoms(m) => write!(f, "atoms({})", m.len()),
            Family::Uniform { lo, hi } => write!(f, "uniform({lo}, {hi})"),
            Family::Exponential { rate } => write!(f, "exponential({rate})"),
            Family::Gaussian { mean, std } => write!(f, "gaussian({mean}, {std})"),
            Family::StandardizedGaussian => f.write_str("standardized_gaussian"),
        }
    }
}
