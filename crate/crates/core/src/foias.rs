//! Push-forwards of measures: the Frobenius-Perron operator of a map and the
//! Foias operator `P_g(θ, μ) = ∫ g_{u*} μ dθ(u)` of a driven system.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng as _;

use crate::error::{bail, Result};
use crate::measures::{DistributionSpec, EmpiricalMeasure, DEFAULT_PRODUCT_CAP};
use crate::metrics::Metric;
use crate::rng;
use crate::systems::DrivenSystem;

/// `f_* μ`: atoms mapped through `f` (which writes `out_dim` values), coincident
/// images merged.
pub fn frobenius_perron(mu: &EmpiricalMeasure, out_dim: usize, f: impl FnMut(&[f64], &mut [f64])) -> EmpiricalMeasure {
    mu.map_points(out_dim, f).merged()
}

fn check_system(g: &dyn DrivenSystem, input_dim: usize, state_dim: usize) -> Result<()> {
    if input_dim != g.input_dim() || state_dim != g.state_dim() {
        bail!(
            Shape,
            "{} expects input/state dimensions {}/{}, got measures of dimension {input_dim}/{state_dim}",
            g.name(),
            g.input_dim(),
            g.state_dim()
        );
    }
    Ok(())
}

/// Exact Foias operator for finite supports: atoms `g(u_i, x_j)` with weight
/// `θ_i μ_j`, merged.
pub fn foias_exact(g: &dyn DrivenSystem, theta: &EmpiricalMeasure, mu: &EmpiricalMeasure) -> Result<EmpiricalMeasure> {
    foias_exact_capped(g, theta, mu, DEFAULT_PRODUCT_CAP)
}

pub fn foias_exact_capped(
    g: &dyn DrivenSystem,
    theta: &EmpiricalMeasure,
    mu: &EmpiricalMeasure,
    cap: usize,
) -> Result<EmpiricalMeasure> {
    Ok(foias_exact_unmerged(g, theta, mu, cap)?.merged())
}

/// Atoms in product order `(i, j) -> i·|μ| + j`, not merged.
fn foias_exact_unmerged(
    g: &dyn DrivenSystem,
    theta: &EmpiricalMeasure,
    mu: &EmpiricalMeasure,
    cap: usize,
) -> Result<EmpiricalMeasure> {
    check_system(g, theta.dim(), mu.dim())?;
    let size = theta.len().checked_mul(mu.len()).unwrap_or(usize::MAX);
    if size > cap {
        bail!(
            Resource,
            "exact Foias support {} x {} = {size} exceeds the cap of {cap}; use the Monte Carlo mode",
            theta.len(),
            mu.len()
        );
    }
    let n = g.state_dim();
    let mut coords = vec![0.0; size * n];
    let mut weights = Vec::with_capacity(size);
    let mut k = 0;
    for (u, wu) in theta.iter() {
        for (x, wx) in mu.iter() {
            g.apply(u, x, &mut coords[k * n..(k + 1) * n]);
            weights.push(wu * wx);
            k += 1;
        }
    }
    EmpiricalMeasure::from_unnormalized(n, coords, weights)
}

/// Monte Carlo Foias operator: `n_particles` equal-weight atoms `g(u_k, x_k)`
/// with `u_k ~ θ` and `x_k ~ μ` independent. Atoms keep their draw order.
///
/// Inputs and states come from separate streams, so two calls with the same
/// seed and equally sized inputs reuse the same uniforms (common random numbers).
pub fn foias_mc(
    g: &dyn DrivenSystem,
    theta: &DistributionSpec,
    mu: &EmpiricalMeasure,
    n_particles: usize,
    rng_seed: u64,
) -> Result<EmpiricalMeasure> {
    if n_particles == 0 {
        bail!(Domain, "n_particles must be at least 1");
    }
    check_system(g, theta.dim(), mu.dim())?;
    let mut ru = rng::stream(rng_seed, "foias_mc/input");
    let mut rx = rng::stream(rng_seed, "foias_mc/state");
    let sampler = theta.sampler();
    let states = mu.index_sampler();
    let n = g.state_dim();
    let mut u = vec![0.0; theta.dim()];
    let mut coords = vec![0.0; n_particles * n];
    for out in coords.chunks_exact_mut(n) {
        sampler.sample_into(&mut ru, &mut u);
        let x = mu.point(states.sample(&mut rx));
        g.apply(&u, x, out);
    }
    EmpiricalMeasure::uniform(n, coords)
}

/// Particle form of the Foias operator: every atom of `μ` is pushed once with
/// its own input draw and keeps its weight. Unbiased for `P_g(θ, μ)` with less
/// variance than [`foias_mc`] when `μ` is itself a particle cloud.
pub fn foias_particles(
    g: &dyn DrivenSystem,
    theta: &DistributionSpec,
    mu: &EmpiricalMeasure,
    rng_seed: u64,
) -> Result<EmpiricalMeasure> {
    check_system(g, theta.dim(), mu.dim())?;
    let mut ru = rng::stream(rng_seed, "foias_particles/input");
    let sampler = theta.sampler();
    let mut u = vec![0.0; theta.dim()];
    Ok(mu.map_points(g.state_dim(), |x, out| {
        sampler.sample_into(&mut ru, &mut u);
        g.apply(&u, x, out);
    }))
}

/// Systematic resampling to at most `n` equal-mass atoms.
///
/// Atoms are merged and sorted first; one uniform offset places the grid
/// `(k + U)/n`, `k = 0..n`, on the cumulative weights. A measure that already
/// has at most `n` distinct atoms is returned merged and otherwise unchanged.
/// Output atoms carry weight `count/n`.
pub fn compress(mu: &EmpiricalMeasure, n: usize, rng_seed: u64) -> Result<EmpiricalMeasure> {
    if n == 0 {
        bail!(Domain, "compress target must be at least 1");
    }
    let m = mu.merged();
    if m.len() <= n {
        return Ok(m);
    }
    let offset: f64 = rng::stream(rng_seed, "compress").random();
    let step = 1.0 / n as f64;
    let mut counts = vec![0usize; m.len()];
    let mut cum = 0.0;
    let mut k = 0usize;
    for (i, w) in m.weights().iter().enumerate() {
        cum += w;
        let last = i + 1 == m.len();
        while k < n && (last || (k as f64 + offset) * step < cum) {
            counts[i] += 1;
            k += 1;
        }
    }
    let d = m.dim();
    let mut coords = Vec::new();
    let mut weights = Vec::new();
    for (i, c) in counts.iter().enumerate() {
        if *c > 0 {
            coords.extend_from_slice(m.point(i));
            weights.push(*c as f64 * step);
        }
    }
    EmpiricalMeasure::from_unnormalized(d, coords, weights)
}

/// How the Foias operator is evaluated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FoiasMode {
    ExactProduct,
    MonteCarlo { n_particles: usize, rng_seed: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FoiasConfig {
    pub mode: FoiasMode,
    pub compress_to: Option<usize>,
}

impl FoiasConfig {
    pub fn validate(&self) -> Result<()> {
        if let FoiasMode::MonteCarlo { n_particles: 0, .. } = self.mode {
            bail!(Domain, "n_particles must be at least 1");
        }
        if self.compress_to == Some(0) {
            bail!(Domain, "compress_to must be at least 1");
        }
        Ok(())
    }

    /// One application of `P_g(θ, ·)` followed by optional compression.
    /// Exact mode needs a finite-support `θ`.
    pub fn apply(&self, g: &dyn DrivenSystem, theta: &DistributionSpec, mu: &EmpiricalMeasure, seed: u64) -> Result<EmpiricalMeasure> {
        self.validate()?;
        let pushed = match self.mode {
            FoiasMode::ExactProduct => {
                let Some(t) = theta.finite_support() else {
                    bail!(Contract, "exact Foias mode needs a finite-support input law, got {}", theta.family());
                };
                foias_exact(g, &t, mu)?
            }
            FoiasMode::MonteCarlo { n_particles, rng_seed } => foias_mc(g, theta, mu, n_particles, rng_seed ^ seed)?,
        };
        match self.compress_to {
            Some(n) => compress(&pushed, n, seed),
            None => Ok(pushed),
        }
    }
}

/// Checks the pragmatic well-definedness conditions for `P_g`: a bounded
/// metric, a compact state box, or a Lipschitz bound asserted by the caller.
/// Returns a warning when none holds.
pub fn well_definedness_warning(g: &dyn DrivenSystem, metric: &Metric, asserted_lipschitz: Option<f64>) -> Option<String> {
    if metric.bound().is_some() || g.state_bounds().is_some() || asserted_lipschitz.is_some() {
        return None;
    }
    Some(alloc::format!(
        "{}: unbounded metric, no state bounds and no asserted Lipschitz constant; P_g(θ, ·) may leave P₁",
        g.name()
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::product_measure;
    use crate::systems::{make_linear_scalar, make_product_system, FnSystem};
    use crate::transport::w1_exact_1d;
    use proptest::prelude::*;

    fn unif(points: &[f64]) -> EmpiricalMeasure {
        EmpiricalMeasure::uniform(1, points.to_vec()).unwrap()
    }

    #[test]
    fn frobenius_perron_examples() {
        let mu = unif(&[0.0, 2.0, 5.0]);
        assert_eq!(frobenius_perron(&mu, 1, |x, o| o[0] = x[0]), mu.merged());
        let k = frobenius_perron(&mu, 1, |_, o| o[0] = 7.0);
        assert_eq!(k, EmpiricalMeasure::dirac(&[7.0]));
        let half = frobenius_perron(&unif(&[0.0, 2.0]), 1, |x, o| o[0] = x[0] / 2.0);
        assert_eq!(half, unif(&[0.0, 1.0]));
        assert_eq!(w1_exact_1d(&half, &unif(&[0.0, 2.0])).unwrap(), 0.5);
    }

    #[test]
    fn foias_exact_examples() {
        let ident = FnSystem::new("ident", 1, 1, None, |_u: &[f64], x: &[f64], o: &mut [f64]| o[0] = x[0]);
        let mu = unif(&[0.5, 1.5, 3.0]);
        let out = foias_exact(&ident, &unif(&[1.0, 9.0]), &mu).unwrap();
        assert_eq!(out.coords(), mu.coords());
        assert!(out.weights().iter().zip(mu.weights()).all(|(a, b)| (a - b).abs() < 1e-15));

        let p = make_product_system();
        let d0 = EmpiricalMeasure::dirac(&[0.0]);
        assert_eq!(foias_exact(&p, &d0, &mu).unwrap(), d0);
        let out = foias_exact(&p, &unif(&[0.0, 1.0]), &EmpiricalMeasure::dirac(&[1.0])).unwrap();
        assert_eq!(out, unif(&[0.0, 1.0]));

        let big = unif(&(0..100).map(f64::from).collect::<Vec<_>>());
        assert!(foias_exact_capped(&p, &big, &big, 1000).is_err());
    }

    #[test]
    fn foias_exact_is_pushforward_of_product() {
        let l = make_linear_scalar(0.5).unwrap();
        let theta = unif(&[0.0, 0.3, 1.0]);
        let mu = EmpiricalMeasure::new(1, vec![-1.0, 0.25, 4.0], vec![0.2, 0.3, 0.5]).unwrap();
        let prod = product_measure(&theta, &mu, 100).unwrap();
        let via_pair = frobenius_perron(&prod, 1, |p, o| l.apply(&p[..1], &p[1..], o));
        assert_eq!(foias_exact(&l, &theta, &mu).unwrap(), via_pair);
    }

    #[test]
    fn foias_mc_examples() {
        let l = make_linear_scalar(0.5).unwrap();
        let dirac = DistributionSpec::dirac(&[1.0]).unwrap();
        let out = foias_mc(&l, &dirac, &EmpiricalMeasure::dirac(&[3.0]), 64, 1).unwrap();
        assert!(out.iter().all(|(p, _)| p[0] == 2.5));

        let theta = DistributionSpec::uniform(0.0, 1.0, 1).unwrap();
        let mu = unif(&[0.0, 1.0, 2.0]);
        let a = foias_mc(&l, &theta, &mu, 4096, 7).unwrap();
        assert_eq!(a, foias_mc(&l, &theta, &mu, 4096, 7).unwrap());
        let disc = crate::measures::discretize(&theta, 512, 3).unwrap();
        let exact = foias_exact(&l, &disc, &mu).unwrap();
        assert!(w1_exact_1d(&a, &exact).unwrap() <= 0.05);
    }

    #[test]
    fn foias_mc_error_shrinks() {
        let l = make_linear_scalar(0.5).unwrap();
        let theta = DistributionSpec::uniform(0.0, 1.0, 1).unwrap();
        let mu = unif(&[0.0, 1.0, 2.0]);
        let exact = foias_exact(&l, &crate::measures::discretize(&theta, 2048, 99).unwrap(), &mu).unwrap();
        let mut medians = Vec::new();
        for p in 8..=12 {
            let mut errs: Vec<f64> =
                (0..15).map(|s| w1_exact_1d(&foias_mc(&l, &theta, &mu, 1 << p, s).unwrap(), &exact).unwrap()).collect();
            errs.sort_by(f64::total_cmp);
            medians.push(errs[7]);
        }
        assert!(medians.windows(2).all(|w| w[1] <= w[0]), "{medians:?}");
    }

    #[test]
    fn compress_examples() {
        let mu = unif(&[3.0, 1.0, 2.0]);
        let c = compress(&mu, 5, 1).unwrap();
        assert_eq!(w1_exact_1d(&c, &mu).unwrap(), 0.0);
        assert_eq!(compress(&EmpiricalMeasure::dirac(&[4.0]), 3, 1).unwrap(), EmpiricalMeasure::dirac(&[4.0]));
        let big = unif(&(0..100).map(f64::from).collect::<Vec<_>>());
        let c = compress(&big, 10, 2).unwrap();
        assert!(c.len() <= 10);
        assert!((c.weights().iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert_eq!(c, compress(&big, 10, 2).unwrap());
    }

    #[test]
    fn compress_perturbation_is_small() {
        let theta = DistributionSpec::uniform(0.0, 1.0, 1).unwrap();
        let mu = crate::measures::discretize(&theta, 4096, 5).unwrap();
        let errs: Vec<f64> = (0..50).map(|s| w1_exact_1d(&compress(&mu, 1024, s).unwrap(), &mu).unwrap()).collect();
        let mean = errs.iter().sum::<f64>() / 50.0;
        let sd = libm::sqrt(errs.iter().map(|e| (e - mean) * (e - mean)).sum::<f64>() / 49.0);
        // systematic resampling distorts by at most one grid cell in quantile
        assert!(errs.iter().all(|e| *e <= 1.0 / 1024.0));
        assert!(errs.iter().all(|e| (e - mean).abs() <= 3.0 * sd + 1e-12));
    }

    #[test]
    fn warning_gate() {
        let l = make_linear_scalar(0.5).unwrap();
        assert!(well_definedness_warning(&l, &Metric::Euclidean, None).is_some());
        assert!(well_definedness_warning(&l, &Metric::Euclidean, Some(0.5)).is_none());
        assert!(well_definedness_warning(&l, &Metric::capped(1.0).unwrap(), None).is_none());
        assert!(well_definedness_warning(&make_product_system(), &Metric::Euclidean, None).is_none());
    }

    fn measure_1d() -> impl Strategy<Value = EmpiricalMeasure> {
        (1usize..12).prop_flat_map(|n| {
            (prop::collection::vec(-5.0f64..5.0, n), prop::collection::vec(0.01f64..1.0, n))
                .prop_map(|(c, w)| EmpiricalMeasure::from_unnormalized(1, c, w).unwrap())
        })
    }

    proptest! {
        #[test]
        fn lipschitz_pushforward(a in measure_1d(), b in measure_1d(), c in -0.9f64..0.9, s in -3.0f64..3.0) {
            let pa = frobenius_perron(&a, 1, |x, o| o[0] = c * libm::sin(x[0]) + s);
            let pb = frobenius_perron(&b, 1, |x, o| o[0] = c * libm::sin(x[0]) + s);
            let lhs = w1_exact_1d(&pa, &pb).unwrap();
            prop_assert!(lhs <= c.abs() * w1_exact_1d(&a, &b).unwrap() + 1e-9);
        }

        #[test]
        fn foias_exact_conserves_mass(theta in measure_1d(), mu in measure_1d()) {
            let l = make_linear_scalar(0.5).unwrap();
            let out = foias_exact(&l, &theta, &mu).unwrap();
            prop_assert!((out.weights().iter().sum::<f64>() - 1.0).abs() <= 1e-12);
        }
    }
}
