//! Invariant measures of `P_g(θ, ·)` by Banach iteration, and continuity
//! sweeps of `θ ↦ μ_θ`.

use alloc::vec::Vec;

use crate::contraction::ContractionReport;
use crate::error::{bail, Error, Result};
use crate::foias::{compress, foias_exact, foias_mc};
use crate::measures::{discretize, DistributionSpec, EmpiricalMeasure};
use crate::metrics::Metric;
use crate::rng;
use crate::systems::DrivenSystem;
use crate::transport::{w1, w1_exact_1d, W1Options};

/// How each application of the Foias operator was evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveMode {
    /// Exact push of the finite input law, then systematic resampling.
    Exact,
    /// `n_particles` Monte Carlo draws per step.
    MonteCarlo,
}

impl SolveMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            SolveMode::Exact => "exact",
            SolveMode::MonteCarlo => "monte_carlo",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModeChoice {
    /// Exact when the input law has finite support and `|θ|·n_particles <= exact_cap`.
    Auto,
    Force(SolveMode),
}

#[derive(Debug, Clone, PartialEq)]
pub enum InitMeasure {
    /// 256 uniform atoms in the state bounds, or a Dirac at the origin.
    Default,
    Dirac(Vec<f64>),
    Measure(EmpiricalMeasure),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveConfig {
    pub n_particles: usize,
    pub tol: f64,
    pub max_iter: usize,
    /// Iterations run before the stopping rule is consulted.
    pub min_iter: usize,
    pub rng_seed: u64,
    pub mode: ModeChoice,
    pub exact_cap: usize,
    pub init: InitMeasure,
    /// Metric for the iteration gaps.
    pub metric: Metric,
    pub w1: W1Options,
}

impl Default for SolveConfig {
    fn default() -> Self {
        Self {
            n_particles: 4096,
            tol: 1e-6,
            max_iter: 200,
            min_iter: 0,
            rng_seed: 0,
            mode: ModeChoice::Auto,
            exact_cap: 1_000_000,
            init: InitMeasure::Default,
            metric: Metric::Euclidean,
            w1: W1Options::default(),
        }
    }
}

pub const DEFAULT_INIT_ATOMS: usize = 256;

#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    pub fixed_point: EmpiricalMeasure,
    pub iterations: usize,
    /// `W₁(μ_{k+1}, μ_k)` for every iteration.
    pub gaps: Vec<f64>,
    /// Contraction constant the stopping rule used; `None` for uncertified runs.
    pub c_used: Option<f64>,
    /// `gaps.last / (1 - c_used)`; infinite for uncertified runs.
    pub posterior_bound: f64,
    pub converged: bool,
    /// `W₁` between two applications of the step to the same measure with
    /// different seeds, at the last iteration.
    pub noise_floor: f64,
    pub mode: SolveMode,
}

impl SolveReport {
    /// Ratios `gaps[k+1] / gaps[k]` over positive gaps.
    pub fn gap_ratios(&self) -> Vec<f64> {
        self.gaps.windows(2).filter(|w| w[0] > 0.0).map(|w| w[1] / w[0]).collect()
    }
}

fn initial_measure(g: &dyn DrivenSystem, init: &InitMeasure, seed: u64) -> Result<EmpiricalMeasure> {
    let mu = match init {
        InitMeasure::Default => match g.state_bounds() {
            Some(b) => EmpiricalMeasure::from_points(&b.grid(DEFAULT_INIT_ATOMS, seed))?,
            None => EmpiricalMeasure::dirac(&alloc::vec![0.0; g.state_dim()]),
        },
        InitMeasure::Dirac(p) => EmpiricalMeasure::dirac(p),
        InitMeasure::Measure(m) => m.clone(),
    };
    if mu.dim() != g.state_dim() {
        bail!(Shape, "initial measure has dimension {}, state has {}", mu.dim(), g.state_dim());
    }
    Ok(mu)
}

/// One application of the Foias operator in the chosen mode.
pub struct Stepper<'a> {
    g: &'a dyn DrivenSystem,
    theta: &'a DistributionSpec,
    finite: Option<EmpiricalMeasure>,
    n: usize,
    mode: SolveMode,
}

impl<'a> Stepper<'a> {
    pub fn new(g: &'a dyn DrivenSystem, theta: &'a DistributionSpec, config: &SolveConfig) -> Result<Self> {
        if config.n_particles == 0 {
            bail!(Domain, "n_particles must be at least 1");
        }
        if theta.dim() != g.input_dim() {
            bail!(Shape, "input law has dimension {}, system input has {}", theta.dim(), g.input_dim());
        }
        let finite = theta.finite_support().map(|m| m.merged());
        let mode = match config.mode {
            ModeChoice::Force(m) => m,
            ModeChoice::Auto => match &finite {
                Some(t) if t.len().saturating_mul(config.n_particles) <= config.exact_cap => SolveMode::Exact,
                _ => SolveMode::MonteCarlo,
            },
        };
        if mode == SolveMode::Exact && finite.is_none() {
            bail!(Contract, "exact mode needs a finite-support input law, got {}", theta.family());
        }
        Ok(Self { g, theta, finite, n: config.n_particles, mode })
    }

    pub fn mode(&self) -> SolveMode {
        self.mode
    }

    pub fn apply(&self, mu: &EmpiricalMeasure, seed: u64) -> Result<EmpiricalMeasure> {
        match self.mode {
            SolveMode::Exact => {
                let pushed = foias_exact(self.g, self.finite.as_ref().expect("finite input law"), mu)?;
                compress(&pushed, self.n, seed)
            }
            SolveMode::MonteCarlo => foias_mc(self.g, self.theta, mu, self.n, seed),
        }
    }

    /// Two applications with different seeds; returns the first and their distance.
    fn apply_with_noise(&self, mu: &EmpiricalMeasure, seed: u64, alt: u64, metric: &Metric, opts: &W1Options) -> Result<(EmpiricalMeasure, f64)> {
        match self.mode {
            SolveMode::Exact => {
                let pushed = foias_exact(self.g, self.finite.as_ref().expect("finite input law"), mu)?;
                let a = compress(&pushed, self.n, seed)?;
                let b = compress(&pushed, self.n, alt)?;
                let noise = if a == b { 0.0 } else { w1(&a, &b, metric, opts)?.value };
                Ok((a, noise))
            }
            SolveMode::MonteCarlo => {
                let a = foias_mc(self.g, self.theta, mu, self.n, seed)?;
                let b = foias_mc(self.g, self.theta, mu, self.n, alt)?;
                let noise = w1(&a, &b, metric, opts)?.value;
                Ok((a, noise))
            }
        }
    }
}

/// Finds the invariant measure `μ_θ = P_g(θ, μ_θ)`.
///
/// Refuses with [`Error::NonContraction`] unless `contraction.c_hat < 1`.
/// Stops once `W₁(μ_{k+1}, μ_k) <= max(tol·(1 - c), 3·noise_floor)` and the
/// a-priori bound `c^(k+1)·W₁(μ_1, μ_0)/(1 - c)` on the distance left by the
/// initial measure is at most `tol`. Without the second condition a noise
/// floor that is large (high-dimensional states) would stop the iteration
/// before `μ_0` is forgotten. Hitting `max_iter` returns the partial report
/// with `converged = false`.
pub fn solve_invariant(
    g: &dyn DrivenSystem,
    theta: &DistributionSpec,
    contraction: &ContractionReport,
    config: &SolveConfig,
) -> Result<SolveReport> {
    if !contraction.is_contractive() || contraction.c_hat.is_nan() {
        return Err(Error::NonContraction { c_hat: contraction.c_hat });
    }
    iterate(g, theta, Some(contraction.c_hat), config)
}

/// Runs the same iteration without a contraction premise (stopping at
/// `max(tol, 3·noise_floor)`); `posterior_bound` is infinite.
pub fn iterate_uncertified(g: &dyn DrivenSystem, theta: &DistributionSpec, config: &SolveConfig) -> Result<SolveReport> {
    iterate(g, theta, None, config)
}

fn iterate(g: &dyn DrivenSystem, theta: &DistributionSpec, c: Option<f64>, config: &SolveConfig) -> Result<SolveReport> {
    if !(config.tol > 0.0) {
        bail!(Domain, "tol must be positive, got {}", config.tol);
    }
    if config.max_iter == 0 {
        bail!(Domain, "max_iter must be at least 1");
    }
    config.metric.validate_dim(g.state_dim())?;
    let stepper = Stepper::new(g, theta, config)?;
    let mut mu = initial_measure(g, &config.init, rng::derive_seed(config.rng_seed, "solve/init"))?;
    let threshold_tol = config.tol * c.map_or(1.0, |c| 1.0 - c);
    let mut gaps = Vec::new();
    let mut noise = 0.0;
    let mut converged = false;
    for k in 0..config.max_iter {
        let seed = rng::derive_indexed(config.rng_seed, "solve/step", k as u64);
        let alt = rng::derive_indexed(config.rng_seed, "solve/noise", k as u64);
        let (next, nz) = stepper.apply_with_noise(&mu, seed, alt, &config.metric, &config.w1)?;
        let gap = w1(&next, &mu, &config.metric, &config.w1)?.value;
        if !gap.is_finite() {
            bail!(Numeric, "iteration {k} produced a non-finite gap");
        }
        noise = nz;
        gaps.push(gap);
        mu = next;
        let forgotten = c.is_none_or(|c| libm::pow(c, (k + 1) as f64) * gaps[0] / (1.0 - c) <= config.tol);
        if k + 1 >= config.min_iter && forgotten && gap <= threshold_tol.max(3.0 * noise) {
            converged = true;
            break;
        }
    }
    let last = *gaps.last().expect("at least one iteration");
    let posterior_bound = match c {
        Some(c) => last / (1.0 - c),
        None => f64::INFINITY,
    };
    Ok(SolveReport {
        fixed_point: mu,
        iterations: gaps.len(),
        gaps,
        c_used: c,
        posterior_bound,
        converged,
        noise_floor: noise,
        mode: stepper.mode(),
    })
}

/// One-parameter families of input laws.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ParamFamily {
    /// `Exponential(p)`.
    ExponentialRate,
    /// `Uniform(p, p + width)`.
    UniformShift { width: f64 },
    /// `δ_p`.
    DiracAt,
    /// `Gaussian(p, std)`.
    GaussianMean { std: f64 },
}

impl ParamFamily {
    pub fn at(&self, p: f64) -> Result<DistributionSpec> {
        match *self {
            ParamFamily::ExponentialRate => DistributionSpec::exponential(p),
            ParamFamily::UniformShift { width } => DistributionSpec::uniform(p, p + width, 1),
            ParamFamily::DiracAt => DistributionSpec::dirac(&[p]),
            ParamFamily::GaussianMean { std } => DistributionSpec::gaussian(p, std, 1),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            ParamFamily::ExponentialRate => "exponential_rate",
            ParamFamily::UniformShift { .. } => "uniform_shift",
            ParamFamily::DiracAt => "dirac",
            ParamFamily::GaussianMean { .. } => "gaussian_mean",
        }
    }
}

/// Scalar summary compared between fixed points in a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Observable {
    /// 1-D marginal of one state coordinate.
    Coordinate(usize),
    /// Full state under the solver metric.
    FullState,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub eps: f64,
    /// Atoms per discretized input law.
    pub n_atoms: usize,
    pub observable: Observable,
    pub solve: SolveConfig,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self { eps: 0.01, n_atoms: 3500, observable: Observable::Coordinate(0), solve: SolveConfig::default() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRow {
    pub param: f64,
    pub input_gap: f64,
    pub state_gap: f64,
    /// `state_gap / input_gap`, NaN when `input_gap = 0`.
    pub ratio: f64,
    pub converged: bool,
}

/// For each grid point `p`, solves for `μ_p` and `μ_{p+ε}` with common
/// random numbers and records `W₁(θ_p, θ_{p+ε})`, `W₁(μ_p, μ_{p+ε})` and
/// their ratio.
///
/// With `contraction = Some(report)` the solves require `c_hat < 1`; with
/// `None` they run uncertified. A failed solve flags its row and the sweep
/// continues, except that a non-contraction refusal is returned at once.
pub fn continuity_sweep(
    g: &dyn DrivenSystem,
    family: ParamFamily,
    grid: &[f64],
    contraction: Option<&ContractionReport>,
    config: &SweepConfig,
) -> Result<Vec<SweepRow>> {
    if grid.is_empty() {
        bail!(Domain, "parameter grid must be nonempty");
    }
    if !(config.eps > 0.0) {
        bail!(Domain, "eps must be positive, got {}", config.eps);
    }
    if let Observable::Coordinate(i) = config.observable {
        if i >= g.state_dim() {
            bail!(Shape, "observable coordinate {i} outside state dimension {}", g.state_dim());
        }
    }
    if let Some(c) = contraction {
        if !c.is_contractive() {
            return Err(Error::NonContraction { c_hat: c.c_hat });
        }
    }
    let laws = grid
        .iter()
        .map(|&p| Ok((family.at(p)?, family.at(p + config.eps)?)))
        .collect::<Result<Vec<_>>>()?;
    let mut rows = Vec::with_capacity(grid.len());
    for (k, (&p, (lo, hi))) in grid.iter().zip(&laws).enumerate() {
        let row_seed = rng::derive_indexed(config.solve.rng_seed, "sweep/row", k as u64);
        let ta = discretize(lo, config.n_atoms, row_seed)?;
        let tb = discretize(hi, config.n_atoms, row_seed)?;
        let input_gap = w1_exact_1d(&ta, &tb)?;
        let ta = DistributionSpec::atoms(ta.merged());
        let tb = DistributionSpec::atoms(tb.merged());
        let solve = SolveConfig { rng_seed: row_seed, ..config.solve.clone() };
        let run = |t: &DistributionSpec, cfg: &SolveConfig| match contraction {
            Some(c) => solve_invariant(g, t, c, cfg),
            None => iterate_uncertified(g, t, cfg),
        };
        // the step seeds only line up when both sides stop at the same
        // iteration, so the side that stopped first is rerun to match
        let synced = |n: usize| SolveConfig { min_iter: n, ..solve.clone() };
        let pair = match (run(&ta, &solve), run(&tb, &solve)) {
            (Ok(a), Ok(b)) if a.iterations < b.iterations => run(&ta, &synced(b.iterations)).map(|a| (a, b)),
            (Ok(a), Ok(b)) if b.iterations < a.iterations => run(&tb, &synced(a.iterations)).map(|b| (a, b)),
            (Ok(a), Ok(b)) => Ok((a, b)),
            (Err(e), _) | (_, Err(e)) => Err(e),
        };
        let (ra, rb) = match pair {
            Ok(pair) => pair,
            Err(e @ Error::NonContraction { .. }) => return Err(e),
            Err(_) => {
                rows.push(SweepRow { param: p, input_gap, state_gap: f64::NAN, ratio: f64::NAN, converged: false });
                continue;
            }
        };
        let state_gap = match config.observable {
            Observable::Coordinate(i) => w1_exact_1d(&ra.fixed_point.project(i, 1)?, &rb.fixed_point.project(i, 1)?)?,
            Observable::FullState => w1(&ra.fixed_point, &rb.fixed_point, &solve.metric, &solve.w1)?.value,
        };
        let ratio = if input_gap > 0.0 { state_gap / input_gap } else { f64::NAN };
        rows.push(SweepRow { param: p, input_gap, state_gap, ratio, converged: ra.converged && rb.converged });
    }
    Ok(rows)
}

/// Largest ratio over rows with a positive input gap.
pub fn lipschitz_of_s_g(rows: &[SweepRow]) -> Result<f64> {
    let best = rows.iter().filter(|r| r.input_gap > 0.0 && r.ratio.is_finite()).map(|r| r.ratio).fold(f64::NEG_INFINITY, f64::max);
    if best == f64::NEG_INFINITY {
        bail!(Degenerate, "no sweep row has a positive input gap");
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::contraction::{estimate_contraction, Method};
    use crate::systems::{make_linear_scalar, make_product_system};
    use alloc::vec;
    use proptest::prelude::*;

    fn certificate(c: f64) -> ContractionReport {
        ContractionReport {
            c_hat: c,
            ci_halfwidth: 0.0,
            n_pairs: 0,
            n_inputs: 0,
            worst_pair: (vec![], vec![]),
            method: Method::AnalyticCertificate,
        }
    }

    /// `W₁(μ, Uniform[lo, hi])` by integrating the quantile difference exactly.
    pub(crate) fn w1_to_uniform(mu: &EmpiricalMeasure, lo: f64, hi: f64) -> f64 {
        let m = mu.merged();
        let q = |p: f64| lo + (hi - lo) * p;
        let mut total = 0.0;
        let mut c0 = 0.0;
        for (x, w) in m.iter() {
            let c1 = (c0 + w).min(1.0);
            // ∫_{c0}^{c1} |x - q(p)| dp with q linear
            let cross = ((x[0] - lo) / (hi - lo)).clamp(c0, c1);
            let part = |a: f64, b: f64| {
                let mid = 0.5 * (q(a) + q(b));
                (b - a) * (x[0] - mid).abs()
            };
            total += part(c0, cross) + part(cross, c1);
            c0 = c1;
        }
        total
    }

    #[test]
    fn linear_dirac_input() {
        let l = make_linear_scalar(0.5).unwrap();
        let theta = DistributionSpec::dirac(&[1.0]).unwrap();
        let rep = solve_invariant(&l, &theta, &certificate(0.5), &SolveConfig::default()).unwrap();
        assert!(rep.converged);
        assert!(rep.iterations <= 60);
        assert_eq!(rep.mode, SolveMode::Exact);
        let d = w1_exact_1d(&rep.fixed_point, &EmpiricalMeasure::dirac(&[2.0])).unwrap();
        assert!(d <= 1e-6, "{d}");
        assert!(d <= rep.posterior_bound + 1e-15);
    }

    #[test]
    fn product_system_absorbs() {
        let p = make_product_system();
        let theta = DistributionSpec::dirac(&[0.0]).unwrap();
        let rep = solve_invariant(&p, &theta, &certificate(0.0), &SolveConfig::default()).unwrap();
        assert_eq!(rep.fixed_point, EmpiricalMeasure::dirac(&[0.0]));
        assert_eq!(rep.gaps[1], 0.0);
    }

    #[test]
    fn refuses_non_contraction() {
        let p = make_product_system();
        let theta = DistributionSpec::dirac(&[1.0]).unwrap();
        let rep = estimate_contraction(&p, &theta, p.state_bounds().unwrap(), &Metric::Euclidean, 20, 1, 0).unwrap();
        let err = solve_invariant(&p, &theta, &rep, &SolveConfig::default()).unwrap_err();
        assert!(matches!(err, Error::NonContraction { .. }));
    }

    #[test]
    fn bernoulli_inputs_give_uniform() {
        let l = make_linear_scalar(0.5).unwrap();
        let theta = DistributionSpec::atoms(EmpiricalMeasure::uniform(1, vec![0.0, 1.0]).unwrap());
        let rep = solve_invariant(&l, &theta, &certificate(0.5), &SolveConfig { rng_seed: 3, ..Default::default() }).unwrap();
        assert!(rep.converged);
        assert!(w1_to_uniform(&rep.fixed_point, 0.0, 2.0) <= 0.02);
        // 16 exact pushes of δ₀ give the uniform law on {k/2^15 : k < 2^16}
        let mut mu = EmpiricalMeasure::dirac(&[0.0]);
        let t = theta.finite_support().unwrap();
        for _ in 0..16 {
            mu = foias_exact(&l, &t, &mu).unwrap();
        }
        assert_eq!(mu.len(), 1 << 16);
        assert!(w1_exact_1d(&mu, &rep.fixed_point).unwrap() <= 0.02);
    }

    #[test]
    fn max_iter_gives_partial_report() {
        let l = make_linear_scalar(0.5).unwrap();
        let theta = DistributionSpec::dirac(&[1.0]).unwrap();
        let rep = solve_invariant(&l, &theta, &certificate(0.5), &SolveConfig { max_iter: 1, ..Default::default() }).unwrap();
        assert!(!rep.converged);
        assert_eq!(rep.iterations, 1);
    }

    #[test]
    fn uniqueness_and_residual() {
        let l = make_linear_scalar(0.5).unwrap();
        let theta = DistributionSpec::uniform(0.0, 1.0, 1).unwrap();
        let base = SolveConfig { n_particles: 2048, rng_seed: 5, ..Default::default() };
        let a = solve_invariant(&l, &theta, &certificate(0.5), &SolveConfig { init: InitMeasure::Dirac(vec![-10.0]), ..base.clone() }).unwrap();
        let b = solve_invariant(&l, &theta, &certificate(0.5), &SolveConfig { init: InitMeasure::Dirac(vec![10.0]), ..base.clone() }).unwrap();
        assert_eq!(a.mode, SolveMode::MonteCarlo);
        let d = w1_exact_1d(&a.fixed_point, &b.fixed_point).unwrap();
        assert!(d <= 2.0 * (a.posterior_bound + b.posterior_bound + a.noise_floor + b.noise_floor), "{d}");
        let stepper = Stepper::new(&l, &theta, &base).unwrap();
        let pushed = stepper.apply(&a.fixed_point, 77).unwrap();
        let resid = w1_exact_1d(&pushed, &a.fixed_point).unwrap();
        assert!(resid <= a.posterior_bound + a.noise_floor, "{resid}");
    }

    #[test]
    fn large_noise_floor_does_not_stop_before_init_is_forgotten() {
        let l = make_linear_scalar(0.5).unwrap();
        let theta = DistributionSpec::uniform(0.0, 1.0, 1).unwrap();
        let cfg = SolveConfig { n_particles: 2, init: InitMeasure::Dirac(vec![50.0]), rng_seed: 9, ..Default::default() };
        let rep = solve_invariant(&l, &theta, &certificate(0.5), &cfg).unwrap();
        // 0.5^k * W(mu_1, mu_0) / 0.5 <= 1e-6 needs k >= 25 with W(mu_1, mu_0) ~ 25
        assert!(rep.converged && rep.iterations >= 25, "{}", rep.iterations);
        assert!((rep.fixed_point.mean()[0] - 1.0).abs() < 1.0);
    }

    #[test]
    fn dirac_family_sweep() {
        let l = make_linear_scalar(0.5).unwrap();
        let cfg = SweepConfig { n_atoms: 10, ..Default::default() };
        let rows = continuity_sweep(&l, ParamFamily::DiracAt, &[0.0, 1.0, 2.5], Some(&certificate(0.5)), &cfg).unwrap();
        for r in &rows {
            assert!(r.converged);
            assert!((r.input_gap - 0.01).abs() < 1e-12);
            assert!((r.state_gap - 2.0 * r.input_gap).abs() <= 1e-6);
        }
    }

    #[test]
    fn uniform_shift_sweep_bounded_by_coupling() {
        let l = make_linear_scalar(0.5).unwrap();
        let cfg = SweepConfig { n_atoms: 500, solve: SolveConfig { n_particles: 256, ..Default::default() }, ..Default::default() };
        let grid = [0.0, 0.5, 1.0];
        let rows = continuity_sweep(&l, ParamFamily::UniformShift { width: 1.0 }, &grid, Some(&certificate(0.5)), &cfg).unwrap();
        for r in &rows {
            assert!(r.ratio <= 2.1, "{r:?}");
        }
        assert!(lipschitz_of_s_g(&rows).unwrap() <= 2.1);
    }

    #[test]
    fn lipschitz_summary() {
        let row = |ratio: f64| SweepRow { param: 0.0, input_gap: 1.0, state_gap: ratio, ratio, converged: true };
        assert_eq!(lipschitz_of_s_g(&[row(2.0), row(2.0)]).unwrap(), 2.0);
        assert_eq!(lipschitz_of_s_g(&[row(1.5)]).unwrap(), 1.5);
        let zero = SweepRow { param: 0.0, input_gap: 0.0, state_gap: 0.0, ratio: f64::NAN, converged: true };
        assert!(matches!(lipschitz_of_s_g(&[zero]), Err(Error::Degenerate(_))));
    }

    fn measure_1d(n: usize) -> impl Strategy<Value = EmpiricalMeasure> {
        (prop::collection::vec(-5.0f64..5.0, n), prop::collection::vec(0.01f64..1.0, n))
            .prop_map(|(c, w)| EmpiricalMeasure::from_unnormalized(1, c, w).unwrap())
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]
        #[test]
        fn foias_contracts_in_exact_mode(theta in measure_1d(16), a in measure_1d(32), b in measure_1d(32)) {
            let l = make_linear_scalar(0.5).unwrap();
            let lhs = w1_exact_1d(&foias_exact(&l, &theta, &a).unwrap(), &foias_exact(&l, &theta, &b).unwrap()).unwrap();
            prop_assert!(lhs <= 0.5 * w1_exact_1d(&a, &b).unwrap() + 1e-9);
        }

        #[test]
        fn adding_rows_never_lowers_lipschitz(ratios in prop::collection::vec(0.0f64..5.0, 1..10), extra in 0.0f64..5.0) {
            let rows: Vec<SweepRow> = ratios.iter().map(|&r| SweepRow { param: 0.0, input_gap: 1.0, state_gap: r, ratio: r, converged: true }).collect();
            let before = lipschitz_of_s_g(&rows).unwrap();
            let mut more = rows.clone();
            more.push(SweepRow { param: 1.0, input_gap: 1.0, state_gap: extra, ratio: extra, converged: true });
            prop_assert!(lipschitz_of_s_g(&more).unwrap() >= before);
        }
    }

    #[test]
    fn uniform_oracle_sanity() {
        let grid = EmpiricalMeasure::uniform(1, (0..1000).map(|k| (2 * k + 1) as f64 / 1000.0).collect()).unwrap();
        assert!(w1_to_uniform(&grid, 0.0, 2.0) < 1e-3);
        assert!((w1_to_uniform(&EmpiricalMeasure::dirac(&[1.0]), 0.0, 2.0) - 0.5).abs() < 1e-12);
    }
}
