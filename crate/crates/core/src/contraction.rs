//! Estimates and certificates of the stochastic contraction constant
//! `c = sup_{x≠y} ∫ d(g_u x, g_u y) dθ(u) / d(x, y)`.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{bail, Result};
use crate::linalg::sigma_max;
use crate::measures::{DistributionSpec, EmpiricalMeasure};
use crate::metrics::Metric;
use crate::rng;
use crate::systems::{DrivenSystem, GarchParams, StateBox, VarmaParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    /// Inputs averaged by sampling.
    MonteCarlo,
    /// Inputs averaged exactly over a finite-support law.
    ExactFiniteTheta,
    /// Closed-form upper bound.
    AnalyticCertificate,
}

impl Method {
    pub fn as_str(&self) -> &'static str {
        match self {
            Method::MonteCarlo => "monte_carlo",
            Method::ExactFiniteTheta => "exact_finite_theta",
            Method::AnalyticCertificate => "analytic_certificate",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContractionReport {
    pub c_hat: f64,
    pub ci_halfwidth: f64,
    pub n_pairs: usize,
    pub n_inputs: usize,
    /// The pair attaining `c_hat`; empty for analytic certificates.
    pub worst_pair: (Vec<f64>, Vec<f64>),
    pub method: Method,
}

impl ContractionReport {
    pub fn is_contractive(&self) -> bool {
        self.c_hat < 1.0
    }

    /// How `c_hat` relates to the true constant.
    pub fn caveat(&self) -> &'static str {
        match self.method {
            Method::AnalyticCertificate => "upper bound on the contraction constant",
            _ => "lower estimate: maximum over sampled pairs, the true supremum may be larger",
        }
    }
}

/// The input law seen by [`estimate_contraction`].
#[derive(Debug, Clone, PartialEq)]
pub enum InputLaw<'a> {
    Finite(&'a EmpiricalMeasure),
    Spec(&'a DistributionSpec),
}

impl<'a> From<&'a DistributionSpec> for InputLaw<'a> {
    fn from(s: &'a DistributionSpec) -> Self {
        match s.family() {
            crate::measures::Family::FiniteAtoms(m) => InputLaw::Finite(m),
            _ => InputLaw::Spec(s),
        }
    }
}

const MIN_SEPARATION: f64 = 1e-8;
const MAX_CORNER_PAIRS: usize = 512;
const RESAMPLE_ATTEMPTS: usize = 100;

/// Samples pairs in `pair_box` (antipodal box corners first, then uniform
/// pairs) and returns the largest input-averaged distance ratio.
///
/// A finite-support law (including a Dirac) is averaged exactly; otherwise
/// `n_inputs` draws shared by all pairs are used and `ci_halfwidth` is three
/// standard errors of the input average at the worst pair.
pub fn estimate_contraction<'a>(
    g: &dyn DrivenSystem,
    theta: impl Into<InputLaw<'a>>,
    pair_box: &StateBox,
    metric: &Metric,
    n_pairs: usize,
    n_inputs: usize,
    rng_seed: u64,
) -> Result<ContractionReport> {
    let theta = theta.into();
    if n_pairs == 0 || n_inputs == 0 {
        bail!(Domain, "n_pairs and n_inputs must be at least 1");
    }
    if pair_box.dim() != g.state_dim() {
        bail!(Shape, "pair box has dimension {}, system state has {}", pair_box.dim(), g.state_dim());
    }
    metric.validate_dim(g.state_dim())?;
    let diam = pair_box.diameter();
    if !(diam > 0.0) {
        bail!(Degenerate, "pair box has zero diameter");
    }
    let min_sep = MIN_SEPARATION * diam;

    let (inputs, weights, method) = match theta {
        InputLaw::Finite(m) => {
            let pts: Vec<Vec<f64>> = m.iter().map(|(p, _)| p.to_vec()).collect();
            (pts, m.weights().to_vec(), Method::ExactFiniteTheta)
        }
        InputLaw::Spec(s) => match s.finite_support() {
            Some(m) => {
                let pts: Vec<Vec<f64>> = m.iter().map(|(p, _)| p.to_vec()).collect();
                (pts, m.weights().to_vec(), Method::ExactFiniteTheta)
            }
            None => {
                let mut r = rng::stream(rng_seed, "contraction/inputs");
                let sampler = s.sampler();
                let pts: Vec<Vec<f64>> = (0..n_inputs).map(|_| sampler.sample(&mut r)).collect();
                (pts, vec![1.0 / n_inputs as f64; n_inputs], Method::MonteCarlo)
            }
        },
    };
    if inputs.first().map(|u| u.len()) != Some(g.input_dim()) {
        bail!(Shape, "input law dimension does not match system input dimension {}", g.input_dim());
    }

    let dim = pair_box.dim();
    let mut pairs: Vec<(Vec<f64>, Vec<f64>)> = Vec::new();
    let n_corners = if dim >= 10 { MAX_CORNER_PAIRS } else { (1usize << dim) / 2 }.max(1);
    let full = if dim >= usize::BITS as usize { usize::MAX } else { (1usize << dim) - 1 };
    for k in 0..n_corners {
        let (a, b) = (pair_box.corner(k), pair_box.corner(full ^ k));
        if metric.distance_unchecked(&a, &b) >= min_sep {
            pairs.push((a, b));
        }
    }
    let mut r = rng::stream(rng_seed, "contraction/pairs");
    for _ in 0..n_pairs {
        for _ in 0..RESAMPLE_ATTEMPTS {
            let a = pair_box.sample(&mut r);
            let b = pair_box.sample(&mut r);
            if metric.distance_unchecked(&a, &b) >= min_sep {
                pairs.push((a, b));
                break;
            }
        }
    }
    if pairs.is_empty() {
        bail!(Degenerate, "every sampled pair was closer than {min_sep}");
    }

    let n = g.state_dim();
    let (mut gx, mut gy) = (vec![0.0; n], vec![0.0; n]);
    let mut ratios = vec![0.0; inputs.len()];
    let mut best = (f64::NEG_INFINITY, 0usize, 0.0);
    for (k, (x, y)) in pairs.iter().enumerate() {
        let d = metric.distance_unchecked(x, y);
        let mut mean = 0.0;
        for ((u, w), rt) in inputs.iter().zip(&weights).zip(ratios.iter_mut()) {
            g.apply(u, x, &mut gx);
            g.apply(u, y, &mut gy);
            *rt = metric.distance_unchecked(&gx, &gy) / d;
            mean += w * *rt;
        }
        if mean > best.0 {
            let hw = if method == Method::MonteCarlo && inputs.len() > 1 {
                let m = inputs.len() as f64;
                let var = ratios.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (m - 1.0);
                3.0 * libm::sqrt(var / m)
            } else {
                0.0
            };
            best = (mean, k, hw);
        }
    }
    Ok(ContractionReport {
        c_hat: best.0,
        ci_halfwidth: best.2,
        n_pairs: pairs.len(),
        n_inputs: inputs.len(),
        worst_pair: pairs.swap_remove(best.1),
        method,
    })
}

/// `E σ_max(A(u))`, a contraction certificate for `X' = A(u)X + f(u)` under
/// the Euclidean metric. Exact for finite-support `θ`, Monte Carlo otherwise.
pub fn varma_certificate(params: &VarmaParams, theta: &DistributionSpec, n_samples: usize, rng_seed: u64) -> Result<ContractionReport> {
    if theta.dim() != params.input_dim() {
        bail!(Shape, "input law has dimension {}, VARMA input has {}", theta.dim(), params.input_dim());
    }
    if n_samples == 0 {
        bail!(Domain, "n_samples must be at least 1");
    }
    let (c_hat, hw, count) = match theta.finite_support() {
        Some(m) => (m.iter().map(|(u, w)| w * sigma_max(&params.coefficient(u))).sum(), 0.0, m.len()),
        None => {
            let mut r = rng::stream(rng_seed, "varma_certificate");
            let sampler = theta.sampler();
            let vals: Vec<f64> = (0..n_samples).map(|_| sigma_max(&params.coefficient(&sampler.sample(&mut r)))).collect();
            let m = n_samples as f64;
            let mean = compensated_sum(&vals) / m;
            let hw = if n_samples > 1 {
                3.0 * libm::sqrt(vals.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (m - 1.0) / m)
            } else {
                0.0
            };
            (mean, hw, n_samples)
        }
    };
    Ok(ContractionReport {
        c_hat,
        ci_halfwidth: hw,
        n_pairs: 0,
        n_inputs: count,
        worst_pair: (Vec::new(), Vec::new()),
        method: Method::AnalyticCertificate,
    })
}

/// Neumaier summation, so averages of identical values come out exact.
fn compensated_sum(vals: &[f64]) -> f64 {
    let mut sum = 0.0;
    let mut comp = 0.0;
    for &v in vals {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// `E[α u² + β] = α + β` for unit-variance innovations.
pub fn garch_certificate(params: &GarchParams) -> Result<ContractionReport> {
    let c = params.alpha + params.beta;
    if !(c < 1.0) {
        bail!(Domain, "GARCH needs alpha + beta < 1, got {c}");
    }
    Ok(ContractionReport {
        c_hat: c,
        ci_halfwidth: 0.0,
        n_pairs: 0,
        n_inputs: 0,
        worst_pair: (Vec::new(), Vec::new()),
        method: Method::AnalyticCertificate,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Matrix;
    use crate::systems::{make_garch_vol, make_linear_scalar, make_product_system, make_varma};
    use rand::Rng as _;

    fn unit() -> StateBox {
        StateBox::cube(1, 0.0, 1.0).unwrap()
    }

    #[test]
    fn product_system_examples() {
        let p = make_product_system();
        let d0 = DistributionSpec::dirac(&[0.0]).unwrap();
        let d1 = DistributionSpec::dirac(&[1.0]).unwrap();
        let r0 = estimate_contraction(&p, &d0, &unit(), &Metric::Euclidean, 50, 10, 1).unwrap();
        assert_eq!(r0.c_hat, 0.0);
        assert_eq!(r0.method, Method::ExactFiniteTheta);
        let r1 = estimate_contraction(&p, &d1, &unit(), &Metric::Euclidean, 50, 10, 1).unwrap();
        assert_eq!(r1.c_hat, 1.0);
        assert!(!r1.is_contractive());
    }

    #[test]
    fn linear_ratio_is_constant() {
        let l = make_linear_scalar(0.5).unwrap();
        let mut r = rng::stream(3, "configs");
        for k in 0..10 {
            let lo = -10.0 * r.random::<f64>();
            let bx = StateBox::cube(1, lo, lo + 0.1 + 10.0 * r.random::<f64>()).unwrap();
            let theta = DistributionSpec::uniform(-5.0 * r.random::<f64>(), 1.0 + 5.0 * r.random::<f64>(), 1).unwrap();
            let rep = estimate_contraction(&l, &theta, &bx, &Metric::Euclidean, 40, 64, k).unwrap();
            assert!((rep.c_hat - 0.5).abs() <= 1e-12, "{}", rep.c_hat);
            assert!(rep.ci_halfwidth <= 1e-12);
        }
    }

    #[test]
    fn estimate_is_deterministic_and_attained() {
        let l = make_linear_scalar(-0.3).unwrap();
        let theta = DistributionSpec::gaussian(0.0, 1.0, 1).unwrap();
        let a = estimate_contraction(&l, &theta, &unit(), &Metric::Euclidean, 30, 20, 9).unwrap();
        assert_eq!(a, estimate_contraction(&l, &theta, &unit(), &Metric::Euclidean, 30, 20, 9).unwrap());
        let (x, y) = &a.worst_pair;
        let ratio = (l.step(&[0.0], x)[0] - l.step(&[0.0], y)[0]).abs() / (x[0] - y[0]).abs();
        assert!((ratio - a.c_hat).abs() < 1e-12);
    }

    #[test]
    fn degenerate_box() {
        let l = make_linear_scalar(0.5).unwrap();
        let theta = DistributionSpec::dirac(&[0.0]).unwrap();
        let flat = StateBox::cube(1, 2.0, 2.0).unwrap();
        assert!(matches!(estimate_contraction(&l, &theta, &flat, &Metric::Euclidean, 5, 5, 0), Err(crate::Error::Degenerate(_))));
    }

    #[test]
    fn varma_examples() {
        let constant = VarmaParams::constant(Matrix::identity(2).scaled(0.6), Matrix::identity(2)).unwrap();
        let theta2 = DistributionSpec::uniform(0.0, 1.0, 2).unwrap();
        assert_eq!(varma_certificate(&constant, &theta2, 100, 1).unwrap().c_hat, 0.6);

        // A(u) = diag(u, u)
        let p = VarmaParams::new(
            Matrix::zeros(2, 2),
            vec![Matrix::identity(2)],
            vec![0.0, 0.0],
            Matrix::zeros(2, 1),
        )
        .unwrap();
        let theta = DistributionSpec::uniform(0.0, 1.0, 1).unwrap();
        let cert = varma_certificate(&p, &theta, 20_000, 2).unwrap();
        assert!((cert.c_hat - 0.5).abs() <= 0.02);

        let sys = make_varma(p.clone());
        let bx = StateBox::cube(2, -1.0, 1.0).unwrap();
        let est = estimate_contraction(&sys, &theta, &bx, &Metric::Euclidean, 200, 400, 3).unwrap();
        assert!(cert.c_hat + cert.ci_halfwidth >= est.c_hat - est.ci_halfwidth);
    }

    #[test]
    fn garch_examples() {
        // α + β evaluated in floating point: 0.05 + 0.9 is one ulp above the literal 0.95
        let c = garch_certificate(&GarchParams::new(0.1, 0.05, 0.9).unwrap()).unwrap().c_hat;
        assert_eq!(c, 0.05 + 0.9);
        assert!((c - 0.95).abs() <= f64::EPSILON);
        assert_eq!(garch_certificate(&GarchParams::new(0.1, 0.0, 0.0).unwrap()).unwrap().c_hat, 0.0);
        let bad = GarchParams { omega: 0.1, alpha: 0.5, beta: 0.6 };
        assert!(garch_certificate(&bad).is_err());

        let params = GarchParams::new(0.1, 0.05, 0.9).unwrap();
        let g = make_garch_vol(params);
        let theta = DistributionSpec::standardized_gaussian(1).unwrap();
        let bx = StateBox::cube(1, 0.0, 5.0).unwrap();
        let est = estimate_contraction(&g, &theta, &bx, &Metric::Euclidean, 50, 20_000, 4).unwrap();
        assert!((est.c_hat - 0.95).abs() <= 0.02, "{}", est.c_hat);
        assert!(0.95 >= est.c_hat - est.ci_halfwidth);
    }
}
