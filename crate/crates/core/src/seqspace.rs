//! Truncated left-infinite sequences: the component-wise extension `G` of a
//! driven system, time folding, and window measures.
//!
//! A window of horizon `T` stores its points oldest first, so coordinate
//! `-T` is block 0 and the newest coordinate `-1` is block `T - 1`. This is
//! the layout [`Metric::WeightedSupWindow`] expects.

use alloc::vec;
use alloc::vec::Vec;

use crate::contraction::ContractionReport;
use crate::error::{bail, Error, Result};
use crate::measures::{EmpiricalMeasure, ProcessSpec};
use crate::metrics::{Metric, WindowMetric};
use crate::rng;
use crate::systems::DrivenSystem;
use crate::transport::{w1, W1Options};

pub const DEFAULT_HORIZON: usize = 8;

/// Tolerance of the pointwise comparisons in [`solution_equivalence_check`].
pub const SOLUTION_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct WindowSeq {
    horizon: usize,
    elem_dim: usize,
    values: Vec<f64>,
}

impl WindowSeq {
    pub fn new(horizon: usize, elem_dim: usize, values: Vec<f64>) -> Result<Self> {
        if horizon == 0 || elem_dim == 0 {
            bail!(Shape, "window needs positive horizon and element dimension");
        }
        if values.len() != horizon * elem_dim {
            bail!(Shape, "{} values do not fill a window of {horizon} points of dimension {elem_dim}", values.len());
        }
        Ok(Self { horizon, elem_dim, values })
    }

    /// Window from points listed oldest first.
    pub fn from_points(points: &[Vec<f64>]) -> Result<Self> {
        let Some(first) = points.first() else {
            bail!(Shape, "window needs at least one point");
        };
        let k = first.len();
        if points.iter().any(|p| p.len() != k) {
            bail!(Shape, "window points must share one dimension");
        }
        Self::new(points.len(), k, points.concat())
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn elem_dim(&self) -> usize {
        self.elem_dim
    }

    /// Flat values, oldest point first.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Coordinate `-i`, for `1 <= i <= horizon`.
    pub fn coord(&self, i: usize) -> &[f64] {
        assert!(i >= 1 && i <= self.horizon, "coordinate -{i} outside horizon {}", self.horizon);
        let s = (self.horizon - i) * self.elem_dim;
        &self.values[s..s + self.elem_dim]
    }

    /// Coordinates `-T … -2` as a window of horizon `T - 1`.
    pub fn drop_newest(&self) -> Result<Self> {
        if self.horizon < 2 {
            bail!(Degenerate, "cannot drop a coordinate from a horizon-1 window");
        }
        Self::new(self.horizon - 1, self.elem_dim, self.values[..self.values.len() - self.elem_dim].to_vec())
    }

    /// Coordinates `-T+1 … -1` as a window of horizon `T - 1`.
    pub fn drop_oldest(&self) -> Result<Self> {
        if self.horizon < 2 {
            bail!(Degenerate, "cannot drop a coordinate from a horizon-1 window");
        }
        Self::new(self.horizon - 1, self.elem_dim, self.values[self.elem_dim..].to_vec())
    }
}

fn extend_into(g: &dyn DrivenSystem, horizon: usize, u: &[f64], x: &[f64], out: &mut [f64]) {
    let (d, k) = (g.input_dim(), g.state_dim());
    for t in 0..horizon {
        g.apply(&u[t * d..(t + 1) * d], &x[t * k..(t + 1) * k], &mut out[t * k..(t + 1) * k]);
    }
}

/// `G(u, x)`: coordinate `-i` of the output is `g(u_{-i}, x_{-i})`.
pub fn extend_apply(g: &dyn DrivenSystem, u: &WindowSeq, x: &WindowSeq) -> Result<WindowSeq> {
    if u.horizon != x.horizon {
        bail!(Shape, "input window has horizon {}, state window {}", u.horizon, x.horizon);
    }
    if u.elem_dim != g.input_dim() || x.elem_dim != g.state_dim() {
        bail!(
            Shape,
            "{} expects input/state dimensions {}/{}, got {}/{}",
            g.name(),
            g.input_dim(),
            g.state_dim(),
            u.elem_dim,
            x.elem_dim
        );
    }
    let mut out = vec![0.0; x.values.len()];
    extend_into(g, x.horizon, &u.values, &x.values, &mut out);
    WindowSeq::new(x.horizon, x.elem_dim, out)
}

/// The extension `G` as a driven system on flat windows, so that window
/// pairs can go through the generic contraction and push-forward code.
pub struct SequenceExtension<'a> {
    g: &'a dyn DrivenSystem,
    horizon: usize,
}

impl<'a> SequenceExtension<'a> {
    pub fn new(g: &'a dyn DrivenSystem, horizon: usize) -> Result<Self> {
        if horizon == 0 {
            bail!(Domain, "horizon must be positive");
        }
        Ok(Self { g, horizon })
    }
}

impl DrivenSystem for SequenceExtension<'_> {
    fn input_dim(&self) -> usize {
        self.horizon * self.g.input_dim()
    }
    fn state_dim(&self) -> usize {
        self.horizon * self.g.state_dim()
    }
    fn apply(&self, u: &[f64], x: &[f64], out: &mut [f64]) {
        extend_into(self.g, self.horizon, u, x, out)
    }
    fn name(&self) -> &str {
        "sequence_extension"
    }
}

/// Sliding windows `path[k-T+1 ..= k]` for `k = T-1 … L-1`.
pub fn time_fold(path: &[Vec<f64>], horizon: usize) -> Result<Vec<WindowSeq>> {
    if horizon == 0 {
        bail!(Domain, "horizon must be positive");
    }
    if path.len() < horizon {
        bail!(Shape, "path of length {} is shorter than the horizon {horizon}", path.len());
    }
    path.windows(horizon).map(WindowSeq::from_points).collect()
}

fn close(a: &[f64], b: &[f64]) -> bool {
    a.iter().zip(b).all(|(x, y)| (x - y).abs() <= SOLUTION_TOL * (1.0 + x.abs().max(y.abs())))
}

/// Whether `x_{k+1} = g(u_k, x_k)` holds along the aligned paths.
pub fn is_pointwise_solution(g: &dyn DrivenSystem, u_path: &[Vec<f64>], x_path: &[Vec<f64>]) -> Result<bool> {
    check_paths(g, u_path, x_path, 1)?;
    let mut next = vec![0.0; g.state_dim()];
    for k in 0..x_path.len() - 1 {
        g.apply(&u_path[k], &x_path[k], &mut next);
        if !close(&next, &x_path[k + 1]) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Whether the folded windows satisfy `G(u-window_n, x-window_n) = x-window_{n+1}`.
pub fn is_folded_solution(g: &dyn DrivenSystem, u_path: &[Vec<f64>], x_path: &[Vec<f64>], horizon: usize) -> Result<bool> {
    check_paths(g, u_path, x_path, horizon)?;
    let uw = time_fold(u_path, horizon)?;
    let xw = time_fold(x_path, horizon)?;
    for n in 0..xw.len() - 1 {
        if !close(extend_apply(g, &uw[n], &xw[n])?.values(), xw[n + 1].values()) {
            return Ok(false);
        }
    }
    Ok(true)
}

fn check_paths(g: &dyn DrivenSystem, u_path: &[Vec<f64>], x_path: &[Vec<f64>], horizon: usize) -> Result<()> {
    if u_path.len() != x_path.len() {
        bail!(Shape, "input path has length {}, state path {}", u_path.len(), x_path.len());
    }
    if x_path.len() < horizon + 1 {
        bail!(Shape, "paths need length at least {}, got {}", horizon + 1, x_path.len());
    }
    if u_path.iter().any(|u| u.len() != g.input_dim()) || x_path.iter().any(|x| x.len() != g.state_dim()) {
        bail!(Shape, "path points do not match the dimensions of {}", g.name());
    }
    Ok(())
}

/// Checks that `x_path` solves `g` on `u_path` both pointwise and through
/// the folded windows, and that the two answers agree.
pub fn solution_equivalence_check(g: &dyn DrivenSystem, u_path: &[Vec<f64>], x_path: &[Vec<f64>], horizon: usize) -> Result<bool> {
    let a = is_pointwise_solution(g, u_path, x_path)?;
    let b = is_folded_solution(g, u_path, x_path, horizon)?;
    if a != b {
        bail!(Numeric, "pointwise check says {a} but folded check says {b}");
    }
    Ok(a)
}

/// A probability measure on windows of a fixed horizon.
///
/// Measures built from one simulated path may also carry, for every atom,
/// the input window that drove it (coordinate `-i` of the input window is
/// the input applied to coordinate `-i` of the state window).
#[derive(Debug, Clone, PartialEq)]
pub struct WindowMeasure {
    measure: EmpiricalMeasure,
    horizon: usize,
    stride: usize,
    inputs: Option<Vec<f64>>,
}

impl WindowMeasure {
    pub fn new(measure: EmpiricalMeasure, horizon: usize) -> Result<Self> {
        if horizon == 0 || measure.dim() % horizon != 0 {
            bail!(Shape, "measure of dimension {} is not made of horizon-{horizon} windows", measure.dim());
        }
        Ok(Self { measure, horizon, stride: 1, inputs: None })
    }

    /// Equal-weight measure over the given windows.
    pub fn from_windows(windows: &[WindowSeq]) -> Result<Self> {
        let Some(first) = windows.first() else {
            bail!(Shape, "need at least one window");
        };
        if windows.iter().any(|w| w.horizon != first.horizon || w.elem_dim != first.elem_dim) {
            bail!(Shape, "windows must share horizon and element dimension");
        }
        let coords = windows.iter().flat_map(|w| w.values.iter().copied()).collect();
        Self::new(EmpiricalMeasure::uniform(first.values.len(), coords)?, first.horizon)
    }

    pub fn measure(&self) -> &EmpiricalMeasure {
        &self.measure
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn elem_dim(&self) -> usize {
        self.measure.dim() / self.horizon
    }

    /// Spacing in time steps between consecutive windows of a simulated path.
    pub fn stride(&self) -> usize {
        self.stride
    }

    /// Input window of atom `i`, when recorded.
    pub fn input_window(&self, i: usize) -> Option<&[f64]> {
        let inputs = self.inputs.as_ref()?;
        let w = inputs.len() / self.measure.len();
        Some(&inputs[i * w..(i + 1) * w])
    }

    pub fn window(&self, i: usize) -> WindowSeq {
        WindowSeq { horizon: self.horizon, elem_dim: self.elem_dim(), values: self.measure.point(i).to_vec() }
    }

    /// Law of coordinate `-i`.
    pub fn marginal(&self, i: usize) -> Result<EmpiricalMeasure> {
        if i == 0 || i > self.horizon {
            bail!(Shape, "coordinate -{i} outside horizon {}", self.horizon);
        }
        let k = self.elem_dim();
        self.measure.project((self.horizon - i) * k, k)
    }

    /// Law of coordinates `-T … -2`.
    pub fn drop_newest(&self) -> Result<EmpiricalMeasure> {
        if self.horizon < 2 {
            bail!(Degenerate, "horizon-1 window measures have no shift");
        }
        self.measure.project(0, (self.horizon - 1) * self.elem_dim())
    }

    /// Law of coordinates `-T+1 … -1`.
    pub fn drop_oldest(&self) -> Result<EmpiricalMeasure> {
        if self.horizon < 2 {
            bail!(Degenerate, "horizon-1 window measures have no shift");
        }
        let k = self.elem_dim();
        self.measure.project(k, (self.horizon - 1) * k)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WindowConfig {
    pub horizon: usize,
    pub n_windows: usize,
    /// Time steps between retained windows; `None` means one horizon
    /// (non-overlapping windows).
    pub stride: Option<usize>,
    /// Discarded transient; `None` derives it from the contraction constant.
    pub washout: Option<usize>,
    pub rng_seed: u64,
}

impl Default for WindowConfig {
    fn default() -> Self {
        Self { horizon: DEFAULT_HORIZON, n_windows: 5000, stride: None, washout: None, rng_seed: 0 }
    }
}

/// Transient length after which a `c`-contraction has forgotten its initial
/// state to within `1e-9`: `ceil(ln 1e-9 / ln c)`, at least 1.
pub fn default_washout(c: f64) -> usize {
    if !(c > 0.0) {
        return 1;
    }
    let n = libm::ceil(libm::log(1e-9) / libm::log(c));
    (n as usize).max(1)
}

/// Simulates one long stationary input path, rolls the state from the
/// origin, discards the washout, and returns the equal-weight measure on
/// `n_windows` time-folded state windows spaced `stride` steps apart, each
/// with its aligned input window.
///
/// Refuses with [`Error::NonContraction`] unless `contraction.c_hat < 1`.
pub fn stationary_window_measure(
    g: &dyn DrivenSystem,
    process: &ProcessSpec,
    contraction: &ContractionReport,
    config: &WindowConfig,
) -> Result<WindowMeasure> {
    if !contraction.is_contractive() || contraction.c_hat.is_nan() {
        return Err(Error::NonContraction { c_hat: contraction.c_hat });
    }
    if process.dim() != g.input_dim() {
        bail!(Shape, "process has dimension {}, system input has {}", process.dim(), g.input_dim());
    }
    let t = config.horizon;
    if t == 0 || config.n_windows == 0 {
        bail!(Domain, "horizon and n_windows must be positive");
    }
    let stride = config.stride.unwrap_or(t);
    if stride == 0 {
        bail!(Domain, "stride must be positive");
    }
    let washout = config.washout.unwrap_or_else(|| default_washout(contraction.c_hat));
    let (d, k) = (g.input_dim(), g.state_dim());
    // window j ends at state index m_j = washout + t + j·stride and is
    // paired with inputs u_{m_j-t+1} ..= u_{m_j}
    let last = washout + t + (config.n_windows - 1) * stride;
    let len = last + 1;
    let mut inputs = Vec::with_capacity(len * d);
    let mut r = rng::stream(config.rng_seed, "seq/path");
    process.generate(&mut r, len, |u| inputs.extend_from_slice(u));
    let mut states = vec![0.0; len * k];
    for m in 0..last {
        let (done, rest) = states.split_at_mut((m + 1) * k);
        g.apply(&inputs[m * d..(m + 1) * d], &done[m * k..], &mut rest[..k]);
    }
    if states.iter().any(|v| !v.is_finite()) {
        bail!(Numeric, "state trajectory left the finite reals");
    }
    let mut coords = Vec::with_capacity(config.n_windows * t * k);
    let mut aligned = Vec::with_capacity(config.n_windows * t * d);
    for j in 0..config.n_windows {
        let start = washout + 1 + j * stride;
        coords.extend_from_slice(&states[start * k..(start + t) * k]);
        aligned.extend_from_slice(&inputs[start * d..(start + t) * d]);
    }
    let measure = EmpiricalMeasure::uniform(t * k, coords)?;
    Ok(WindowMeasure { measure, horizon: t, stride, inputs: Some(aligned) })
}

/// Monte Carlo `P_G(Θ, M)`: each particle pairs a state window drawn from
/// `M` with an independent input window of the stationary process and
/// pushes the pair through `G`.
pub fn foias_seq_apply(
    g: &dyn DrivenSystem,
    process: &ProcessSpec,
    m: &WindowMeasure,
    n_particles: usize,
    rng_seed: u64,
) -> Result<WindowMeasure> {
    if n_particles == 0 {
        bail!(Domain, "n_particles must be at least 1");
    }
    if process.dim() != g.input_dim() || m.elem_dim() != g.state_dim() {
        bail!(Shape, "window measure and process do not match the dimensions of {}", g.name());
    }
    let t = m.horizon;
    let (d, k) = (g.input_dim(), g.state_dim());
    let sampler = m.measure.index_sampler();
    let mut rs = rng::stream(rng_seed, "seq_apply/state");
    let mut ru = rng::stream(rng_seed, "seq_apply/input");
    let mut u = Vec::with_capacity(t * d);
    let mut coords = vec![0.0; n_particles * t * k];
    for out in coords.chunks_exact_mut(t * k) {
        u.clear();
        process.generate(&mut ru, t, |p| u.extend_from_slice(p));
        let x = m.measure.point(sampler.sample(&mut rs));
        extend_into(g, t, &u, x, out);
    }
    let measure = EmpiricalMeasure::uniform(t * k, coords)?;
    Ok(WindowMeasure { measure, horizon: t, stride: m.stride, inputs: None })
}

/// `G` applied to every atom together with its own recorded input window.
/// For a measure of folded solution windows this advances each window by
/// one time step.
pub fn foias_seq_apply_folded(g: &dyn DrivenSystem, m: &WindowMeasure) -> Result<WindowMeasure> {
    let Some(inputs) = m.inputs.as_ref() else {
        bail!(Contract, "window measure carries no aligned input windows");
    };
    let t = m.horizon;
    if m.elem_dim() != g.state_dim() || inputs.len() != m.measure.len() * t * g.input_dim() {
        bail!(Shape, "window measure does not match the dimensions of {}", g.name());
    }
    let (w, dim) = (t * g.input_dim(), m.measure.dim());
    let mut coords = vec![0.0; m.measure.coords().len()];
    for (i, out) in coords.chunks_exact_mut(dim).enumerate() {
        extend_into(g, t, &inputs[i * w..(i + 1) * w], m.measure.point(i), out);
    }
    let measure = EmpiricalMeasure::new(dim, coords, m.measure.weights().to_vec())?;
    Ok(WindowMeasure { measure, horizon: t, stride: m.stride, inputs: None })
}

/// The default window metric of the given horizon: geometric weights with
/// ratio 1/2 over a Euclidean base capped at 1.
pub fn default_window_metric(horizon: usize) -> Result<Metric> {
    Metric::default_window(horizon)
}

fn shifted_metric(metric: &Metric, horizon: usize) -> Result<Metric> {
    let Metric::WeightedSupWindow(w) = metric else {
        bail!(Contract, "stationarity gap needs a window metric");
    };
    if w.horizon() != horizon {
        bail!(Shape, "metric horizon {} does not match window horizon {horizon}", w.horizon());
    }
    Ok(Metric::WeightedSupWindow(WindowMetric::truncated(w, horizon - 1)?))
}

/// Shift-invariance defect of a window measure: W₁ under the
/// `(T-1)`-truncated window metric between the laws of coordinates
/// `-T … -2` and `-T+1 … -1`.
pub fn stationarity_gap(m: &WindowMeasure, metric: &Metric, opts: &W1Options) -> Result<f64> {
    if m.horizon < 2 {
        bail!(Degenerate, "stationarity gap needs horizon at least 2");
    }
    let shifted = shifted_metric(metric, m.horizon)?;
    Ok(w1(&m.drop_newest()?, &m.drop_oldest()?, &shifted, opts)?.value)
}

/// W₁ between the newest-coordinate marginal of `m` and `mu` under `base`.
pub fn filter_consistency_gap(m: &WindowMeasure, mu: &EmpiricalMeasure, base: &Metric, opts: &W1Options) -> Result<f64> {
    Ok(w1(&m.marginal(1)?, mu, base, opts)?.value)
}
