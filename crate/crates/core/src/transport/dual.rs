use alloc::vec::Vec;

use super::check_pair;
use crate::error::{bail, Result};
use crate::measures::EmpiricalMeasure;
use crate::metrics::Metric;

const LIP_SLACK: f64 = 1e-12;

/// Kantorovich-Rubinstein lower bound `∫f dμ - ∫f dν ≤ W₁(μ, ν)`.
///
/// `f` must be 1-Lipschitz under `metric`. This is checked on every pair of
/// support points of `μ ∪ ν`, which is all the bound needs.
pub fn dual_lower_bound(
    mu: &EmpiricalMeasure,
    nu: &EmpiricalMeasure,
    f: impl Fn(&[f64]) -> f64,
    metric: &Metric,
) -> Result<f64> {
    check_pair(mu, nu, metric)?;
    let pts: Vec<&[f64]> = mu.iter().chain(nu.iter()).map(|(p, _)| p).collect();
    let vals: Vec<f64> = pts.iter().map(|p| f(p)).collect();
    for i in 0..pts.len() {
        for j in i + 1..pts.len() {
            let d = metric.distance_unchecked(pts[i], pts[j]);
            let df = (vals[i] - vals[j]).abs();
            if df > d + LIP_SLACK * (1.0 + d) {
                bail!(
                    Contract,
                    "test function is not 1-Lipschitz on support pair {:?} / {:?}: |f(x)-f(y)| = {df} > d(x,y) = {d}",
                    pts[i],
                    pts[j]
                );
            }
        }
    }
    let (a, b) = vals.split_at(mu.len());
    let ia: f64 = a.iter().zip(mu.weights()).map(|(v, w)| v * w).sum();
    let ib: f64 = b.iter().zip(nu.weights()).map(|(v, w)| v * w).sum();
    Ok(ia - ib)
}

/// Continuous piecewise-linear function on the line, constant beyond its
/// outer knots.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseLinear {
    knots: Vec<f64>,
    values: Vec<f64>,
}

impl PiecewiseLinear {
    /// `knots` strictly increasing, one value per knot.
    pub fn new(knots: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if knots.is_empty() || knots.len() != values.len() {
            bail!(Shape, "need matching nonempty knots and values, got {} and {}", knots.len(), values.len());
        }
        if knots.windows(2).any(|w| !(w[0] < w[1])) {
            bail!(Domain, "knots must be strictly increasing");
        }
        if values.iter().chain(&knots).any(|v| !v.is_finite()) {
            bail!(Domain, "knots and values must be finite");
        }
        Ok(Self { knots, values })
    }

    /// Largest absolute slope.
    pub fn lipschitz(&self) -> f64 {
        self.knots
            .windows(2)
            .zip(self.values.windows(2))
            .map(|(k, v)| (v[1] - v[0]).abs() / (k[1] - k[0]))
            .fold(0.0, f64::max)
    }

    pub fn eval(&self, x: f64) -> f64 {
        let k = &self.knots;
        if x <= k[0] {
            return self.values[0];
        }
        if x >= k[k.len() - 1] {
            return self.values[k.len() - 1];
        }
        let i = k.partition_point(|t| *t <= x) - 1;
        let s = (x - k[i]) / (k[i + 1] - k[i]);
        self.values[i] + s * (self.values[i + 1] - self.values[i])
    }
}
