//! Ground metrics on points, product spaces and truncated sequence windows.
//!
//! Points are flat `&[f64]` slices. A window of horizon `T` over elements of
//! dimension `k` is stored oldest first: slice `[0..k]` is coordinate `-T`
//! and the last `k` values are coordinate `-1`. Weight `w_i` multiplies the
//! distance at coordinate `-i`.

use alloc::boxed::Box;
use alloc::vec::Vec;

use crate::error::{bail, Error, Result};

/// Default absolute tolerance for metric equality checks.
pub const METRIC_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub enum Metric {
    Euclidean,
    /// `min(|x - y|, cap)`.
    CappedEuclidean { cap: f64 },
    /// Max over consecutive blocks of coordinates, one metric per block.
    ProductMax(Vec<Component>),
    WeightedSupWindow(WindowMetric),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Component {
    pub metric: Metric,
    pub dim: usize,
}

/// Weighted sup metric `sup_i w_i d(x_{-i}, y_{-i})` truncated at a finite horizon.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowMetric {
    base: Box<Metric>,
    weights: Vec<f64>,
    tail_weight: f64,
}

impl WindowMetric {
    /// Arbitrary weighting sequence. `tail_weight` must bound every discarded
    /// weight `w_{T+1}, w_{T+2}, ...`; for a decreasing sequence that is `w_{T+1}`.
    pub fn new(base: Metric, weights: Vec<f64>, tail_weight: f64) -> Result<Self> {
        if weights.is_empty() {
            bail!(Domain, "window horizon must be positive");
        }
        if weights[0] != 1.0 {
            bail!(Domain, "first window weight must be exactly 1, got {}", weights[0]);
        }
        for pair in weights.windows(2) {
            if !(pair[1] < pair[0]) || !(pair[1] > 0.0) {
                bail!(Domain, "window weights must be positive and strictly decreasing");
            }
        }
        let last = weights[weights.len() - 1];
        if !(tail_weight > 0.0 && tail_weight < last) {
            bail!(Domain, "tail weight {tail_weight} must lie in (0, {last})");
        }
        if matches!(base, Metric::WeightedSupWindow(_)) {
            bail!(Domain, "window metrics cannot be nested");
        }
        Ok(Self { base: Box::new(base), weights, tail_weight })
    }

    pub fn geometric(base: Metric, ratio: f64, horizon: usize) -> Result<Self> {
        let weights = geometric_weights(ratio, horizon)?;
        let tail = weights[horizon - 1] * ratio;
        Self::new(base, weights, tail)
    }

    pub fn horizon(&self) -> usize {
        self.weights.len()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn base(&self) -> &Metric {
        &self.base
    }

    pub fn tail_weight(&self) -> f64 {
        self.tail_weight
    }

    /// The same weighting restricted to the newest `horizon` coordinates.
    pub fn truncated(&self, horizon: usize) -> Result<Self> {
        if horizon == 0 || horizon > self.horizon() {
            bail!(Shape, "cannot truncate horizon {} to {horizon}", self.horizon());
        }
        let tail = if horizon == self.horizon() { self.tail_weight } else { self.weights[horizon] };
        Self::new((*self.base).clone(), self.weights[..horizon].to_vec(), tail)
    }

    fn eval(&self, x: &[f64], y: &[f64]) -> f64 {
        let t = self.horizon();
        let k = x.len() / t;
        let mut sup = 0.0_f64;
        for (i, w) in self.weights.iter().enumerate() {
            // coordinate -(i+1) lives at storage block t-1-i
            let s = (t - 1 - i) * k;
            let d = w * self.base.eval(&x[s..s + k], &y[s..s + k]);
            if d > sup {
                sup = d;
            }
        }
        sup
    }
}

impl Metric {
    pub fn capped(cap: f64) -> Result<Self> {
        if !(cap > 0.0) || !cap.is_finite() {
            bail!(Domain, "cap must be a positive finite real, got {cap}");
        }
        Ok(Metric::CappedEuclidean { cap })
    }

    pub fn product_max(components: Vec<Component>) -> Result<Self> {
        if components.is_empty() || components.iter().any(|c| c.dim == 0) {
            bail!(Domain, "product metric needs nonempty components of positive dimension");
        }
        Ok(Metric::ProductMax(components))
    }

    /// Geometric weights with ratio 1/2 over a base capped at 1.
    pub fn default_window(horizon: usize) -> Result<Self> {
        Ok(Metric::WeightedSupWindow(WindowMetric::geometric(
            Metric::CappedEuclidean { cap: 1.0 },
            0.5,
            horizon,
        )?))
    }

    /// Upper bound on the metric, if it is bounded.
    pub fn bound(&self) -> Option<f64> {
        match self {
            Metric::Euclidean => None,
            Metric::CappedEuclidean { cap } => Some(*cap),
            Metric::ProductMax(cs) => cs.iter().try_fold(0.0_f64, |acc, c| c.metric.bound().map(|b| acc.max(b))),
            Metric::WeightedSupWindow(w) => w.base.bound(),
        }
    }

    fn check_shape(&self, x: &[f64], y: &[f64]) -> Result<()> {
        if x.len() != y.len() {
            bail!(Shape, "points have dimensions {} and {}", x.len(), y.len());
        }
        if x.is_empty() {
            bail!(Shape, "points must have positive dimension");
        }
        match self {
            Metric::Euclidean | Metric::CappedEuclidean { .. } => Ok(()),
            Metric::ProductMax(cs) => {
                let total: usize = cs.iter().map(|c| c.dim).sum();
                if total != x.len() {
                    bail!(Shape, "product metric expects dimension {total}, got {}", x.len());
                }
                let mut off = 0;
                for c in cs {
                    c.metric.check_shape(&x[off..off + c.dim], &y[off..off + c.dim])?;
                    off += c.dim;
                }
                Ok(())
            }
            Metric::WeightedSupWindow(w) => {
                if x.len() % w.horizon() != 0 {
                    bail!(
                        Shape,
                        "window of flat length {} is not a multiple of horizon {}",
                        x.len(),
                        w.horizon()
                    );
                }
                let k = x.len() / w.horizon();
                w.base.check_shape(&x[..k], &y[..k])
            }
        }
    }

    /// Checked distance between two points.
    pub fn distance(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        self.check_shape(x, y)?;
        Ok(self.eval(x, y))
    }

    /// Distance without shape validation, for inner loops over points that
    /// were validated once up front. Mis-shaped input panics or gives garbage.
    pub fn distance_unchecked(&self, x: &[f64], y: &[f64]) -> f64 {
        self.eval(x, y)
    }

    /// Validates that points of dimension `dim` are admissible.
    pub fn validate_dim(&self, dim: usize) -> Result<()> {
        let z = alloc::vec![0.0; dim];
        self.check_shape(&z, &z)
    }

    fn eval(&self, x: &[f64], y: &[f64]) -> f64 {
        match self {
            Metric::Euclidean => euclidean(x, y),
            Metric::CappedEuclidean { cap } => euclidean(x, y).min(*cap),
            Metric::ProductMax(cs) => {
                let mut off = 0;
                let mut best = 0.0_f64;
                for c in cs {
                    let d = c.metric.eval(&x[off..off + c.dim], &y[off..off + c.dim]);
                    best = best.max(d);
                    off += c.dim;
                }
                best
            }
            Metric::WeightedSupWindow(w) => w.eval(x, y),
        }
    }
}

pub(crate) fn euclidean(x: &[f64], y: &[f64]) -> f64 {
    if x.len() == 1 {
        return libm::fabs(x[0] - y[0]);
    }
    let s: f64 = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
    libm::sqrt(s)
}

/// `(1, r, r², …)` of the given length.
pub fn geometric_weights(ratio: f64, horizon: usize) -> Result<Vec<f64>> {
    if !(ratio > 0.0 && ratio < 1.0) {
        bail!(Domain, "weight ratio must lie in (0, 1), got {ratio}");
    }
    if horizon == 0 {
        bail!(Domain, "horizon must be positive");
    }
    let mut w = Vec::with_capacity(horizon);
    let mut cur = 1.0;
    for _ in 0..horizon {
        w.push(cur);
        cur *= ratio;
    }
    Ok(w)
}

/// Bound on everything a truncated window metric ignores: `w_{T+1} · cap`.
pub fn window_truncation_bound(metric: &Metric) -> Result<f64> {
    let Metric::WeightedSupWindow(w) = metric else {
        return Err(Error::Contract("truncation bound needs a window metric".into()));
    };
    match w.base.bound() {
        Some(cap) => Ok(w.tail_weight * cap),
        None => Err(Error::Contract("window base metric is not capped; the truncation error is unbounded".into())),
    }
}
