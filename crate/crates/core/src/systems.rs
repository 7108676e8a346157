//! Driven systems `x' = g(u, x)`, the model zoo and trajectory utilities.

use alloc::boxed::Box;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng as _;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{bail, Result};
use crate::linalg::{self, Matrix};
use crate::metrics::euclidean;
use crate::rng;

/// Axis-aligned box of states.
#[derive(Debug, Clone, PartialEq)]
pub struct StateBox {
    lo: Vec<f64>,
    hi: Vec<f64>,
}

impl StateBox {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        if lo.is_empty() || lo.len() != hi.len() {
            bail!(Shape, "box corners must be nonempty and of equal length");
        }
        if lo.iter().zip(&hi).any(|(a, b)| !(a <= b) || !a.is_finite() || !b.is_finite()) {
            bail!(Domain, "box needs finite lo <= hi in every coordinate");
        }
        Ok(Self { lo, hi })
    }

    pub fn cube(dim: usize, lo: f64, hi: f64) -> Result<Self> {
        Self::new(vec![lo; dim], vec![hi; dim])
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn lo(&self) -> &[f64] {
        &self.lo
    }

    pub fn hi(&self) -> &[f64] {
        &self.hi
    }

    /// Euclidean length of the main diagonal.
    pub fn diameter(&self) -> f64 {
        euclidean(&self.lo, &self.hi)
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim() && x.iter().zip(&self.lo).zip(&self.hi).all(|((v, a), b)| a <= v && v <= b)
    }

    pub fn sample(&self, rng: &mut rng::Rng) -> Vec<f64> {
        self.lo.iter().zip(&self.hi).map(|(a, b)| a + (b - a) * rng.random::<f64>()).collect()
    }

    /// Vertex `k` of the box: bit `i` of `k` picks `hi` in coordinate `i`.
    pub fn corner(&self, k: usize) -> Vec<f64> {
        (0..self.dim()).map(|i| if i < usize::BITS as usize && (k >> i) & 1 == 1 { self.hi[i] } else { self.lo[i] }).collect()
    }

    /// `count` uniform random states, deterministic per seed.
    pub fn grid(&self, count: usize, seed: u64) -> Vec<Vec<f64>> {
        let mut r = rng::stream(seed, "init_grid");
        (0..count).map(|_| self.sample(&mut r)).collect()
    }
}

/// A map `g: U × X → X` between real vector spaces.
pub trait DrivenSystem {
    fn input_dim(&self) -> usize;
    fn state_dim(&self) -> usize;
    /// Writes `g(u, x)` into `out` (length `state_dim`).
    fn apply(&self, u: &[f64], x: &[f64], out: &mut [f64]);
    /// A box the system maps into itself, when the state space is compact.
    fn state_bounds(&self) -> Option<&StateBox> {
        None
    }
    fn name(&self) -> &str;

    fn step(&self, u: &[f64], x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.state_dim()];
        self.apply(u, x, &mut out);
        out
    }
}

impl<T: DrivenSystem + ?Sized> DrivenSystem for Box<T> {
    fn input_dim(&self) -> usize {
        (**self).input_dim()
    }
    fn state_dim(&self) -> usize {
        (**self).state_dim()
    }
    fn apply(&self, u: &[f64], x: &[f64], out: &mut [f64]) {
        (**self).apply(u, x, out)
    }
    fn state_bounds(&self) -> Option<&StateBox> {
        (**self).state_bounds()
    }
    fn name(&self) -> &str {
        (**self).name()
    }
}

fn check_dims(g: &dyn DrivenSystem, u: &[f64], x: &[f64]) -> Result<()> {
    if u.len() != g.input_dim() || x.len() != g.state_dim() {
        bail!(
            Shape,
            "{} expects input/state dimensions {}/{}, got {}/{}",
            g.name(),
            g.input_dim(),
            g.state_dim(),
            u.len(),
            x.len()
        );
    }
    Ok(())
}

/// Echo state network `g(u, x) = tanh(Cu + Ax)`; the leak scale is folded into `A`.
#[derive(Debug, Clone, PartialEq)]
pub struct Esn {
    a: Matrix,
    c: Matrix,
    bounds: StateBox,
}

impl Esn {
    pub fn new(a: Matrix, c: Matrix) -> Result<Self> {
        if a.rows() != a.cols() || c.rows() != a.rows() {
            bail!(Shape, "reservoir must be NxN and input matrix Nxd, got {}x{} and {}x{}", a.rows(), a.cols(), c.rows(), c.cols());
        }
        let bounds = StateBox::cube(a.rows(), -1.0, 1.0)?;
        Ok(Self { a, c, bounds })
    }

    pub fn reservoir(&self) -> &Matrix {
        &self.a
    }

    pub fn input_matrix(&self) -> &Matrix {
        &self.c
    }
}

impl DrivenSystem for Esn {
    fn input_dim(&self) -> usize {
        self.c.cols()
    }
    fn state_dim(&self) -> usize {
        self.a.rows()
    }
    fn apply(&self, u: &[f64], x: &[f64], out: &mut [f64]) {
        for (i, o) in out.iter_mut().enumerate() {
            *o = libm::tanh(linalg::dot(self.c.row(i), u) + linalg::dot(self.a.row(i), x));
        }
    }
    fn state_bounds(&self) -> Option<&StateBox> {
        Some(&self.bounds)
    }
    fn name(&self) -> &str {
        "esn"
    }
}

/// Random ESN: `A` i.i.d. standard normal rescaled to the requested spectral
/// radius, `C` i.i.d. normal times `input_scale`.
pub fn make_esn(n: usize, d: usize, seed: u64, spectral_radius: f64, input_scale: f64) -> Result<Esn> {
    if n == 0 || d == 0 {
        bail!(Domain, "ESN needs N, d >= 1, got N={n}, d={d}");
    }
    if !(spectral_radius > 0.0) || !spectral_radius.is_finite() {
        bail!(Domain, "spectral radius must be positive, got {spectral_radius}");
    }
    if !input_scale.is_finite() {
        bail!(Domain, "input scale must be finite");
    }
    let mut r = rng::stream(seed, "esn");
    let raw = Matrix::from_fn(n, n, |_, _| StandardNormal.sample(&mut r));
    let c = Matrix::from_fn(n, d, |_, _| input_scale * Distribution::<f64>::sample(&StandardNormal, &mut r));
    let rho = linalg::spectral_radius(&raw)?;
    if rho == 0.0 {
        bail!(Numeric, "sampled reservoir has zero spectral radius");
    }
    Esn::new(raw.scaled(spectral_radius / rho), c)
}

/// `g(u, x) = u·x` on `[0, 1] × [0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProductSystem {
    bounds: StateBox,
}

pub fn make_product_system() -> ProductSystem {
    ProductSystem { bounds: StateBox::cube(1, 0.0, 1.0).expect("unit interval") }
}

impl DrivenSystem for ProductSystem {
    fn input_dim(&self) -> usize {
        1
    }
    fn state_dim(&self) -> usize {
        1
    }
    fn apply(&self, u: &[f64], x: &[f64], out: &mut [f64]) {
        out[0] = u[0] * x[0];
    }
    fn state_bounds(&self) -> Option<&StateBox> {
        Some(&self.bounds)
    }
    fn name(&self) -> &str {
        "product"
    }
}

/// `g(u, x) = a·x + u` with `|a| < 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearScalar {
    a: f64,
}

pub fn make_linear_scalar(a: f64) -> Result<LinearScalar> {
    if !(a.abs() < 1.0) {
        bail!(Domain, "linear system needs |a| < 1, got {a}");
    }
    Ok(LinearScalar { a })
}

impl LinearScalar {
    pub fn coefficient(&self) -> f64 {
        self.a
    }
}

impl DrivenSystem for LinearScalar {
    fn input_dim(&self) -> usize {
        1
    }
    fn state_dim(&self) -> usize {
        1
    }
    fn apply(&self, u: &[f64], x: &[f64], out: &mut [f64]) {
        out[0] = self.a * x[0] + u[0];
    }
    fn name(&self) -> &str {
        "linear"
    }
}

/// `X' = A(u) X + f(u)` with affine maps `A(u) = A₀ + Σ_k u_k A_k` and
/// `f(u) = f₀ + F u`.
#[derive(Debug, Clone, PartialEq)]
pub struct VarmaParams {
    a0: Matrix,
    a_terms: Vec<Matrix>,
    f0: Vec<f64>,
    f_lin: Matrix,
}

impl VarmaParams {
    pub fn new(a0: Matrix, a_terms: Vec<Matrix>, f0: Vec<f64>, f_lin: Matrix) -> Result<Self> {
        let n = a0.rows();
        if a0.cols() != n {
            bail!(Shape, "A0 must be square, got {}x{}", a0.rows(), a0.cols());
        }
        if a_terms.iter().any(|m| m.rows() != n || m.cols() != n) {
            bail!(Shape, "every A_k must be {n}x{n}");
        }
        if f0.len() != n || f_lin.rows() != n {
            bail!(Shape, "offset map must produce {n}-vectors");
        }
        if !a_terms.is_empty() && f_lin.cols() != a_terms.len() {
            bail!(Shape, "A(u) uses {} input coordinates but F has {} columns", a_terms.len(), f_lin.cols());
        }
        if f0.iter().any(|v| !v.is_finite()) {
            bail!(Domain, "f0 must be finite");
        }
        Ok(Self { a0, a_terms, f0, f_lin })
    }

    /// Constant coefficient matrix and `f(u) = F u`.
    pub fn constant(a: Matrix, f_lin: Matrix) -> Result<Self> {
        let n = a.rows();
        Self::new(a, Vec::new(), vec![0.0; n], f_lin)
    }

    pub fn state_dim(&self) -> usize {
        self.a0.rows()
    }

    pub fn input_dim(&self) -> usize {
        self.f_lin.cols()
    }

    pub fn coefficient(&self, u: &[f64]) -> Matrix {
        let mut m = self.a0.clone();
        for (uk, ak) in u.iter().zip(&self.a_terms) {
            m = m.add_scaled(ak, *uk).expect("validated shapes");
        }
        m
    }

    pub fn offset(&self, u: &[f64]) -> Vec<f64> {
        let mut f = self.f_lin.mul_vec(u);
        for (fi, bi) in f.iter_mut().zip(&self.f0) {
            *fi += bi;
        }
        f
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Varma {
    params: VarmaParams,
}

pub fn make_varma(params: VarmaParams) -> Varma {
    Varma { params }
}

impl Varma {
    pub fn params(&self) -> &VarmaParams {
        &self.params
    }
}

impl DrivenSystem for Varma {
    fn input_dim(&self) -> usize {
        self.params.input_dim()
    }
    fn state_dim(&self) -> usize {
        self.params.state_dim()
    }
    fn apply(&self, u: &[f64], x: &[f64], out: &mut [f64]) {
        let p = &self.params;
        let n = p.state_dim();
        for i in 0..n {
            let mut acc = p.f0[i] + linalg::dot(p.f_lin.row(i), u);
            for j in 0..n {
                let mut aij = p.a0.get(i, j);
                for (uk, ak) in u.iter().zip(&p.a_terms) {
                    aij += uk * ak.get(i, j);
                }
                acc += aij * x[j];
            }
            out[i] = acc;
        }
    }
    fn name(&self) -> &str {
        "varma"
    }
}

/// GARCH(1,1) coefficients; `α + β < 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GarchParams {
    pub omega: f64,
    pub alpha: f64,
    pub beta: f64,
}

impl GarchParams {
    pub fn new(omega: f64, alpha: f64, beta: f64) -> Result<Self> {
        if !(omega >= 0.0 && alpha >= 0.0 && beta >= 0.0) || !(omega + alpha + beta).is_finite() {
            bail!(Domain, "GARCH needs finite omega, alpha, beta >= 0, got {omega}, {alpha}, {beta}");
        }
        if !(alpha + beta < 1.0) {
            bail!(Domain, "GARCH needs alpha + beta < 1, got {}", alpha + beta);
        }
        Ok(Self { omega, alpha, beta })
    }
}

/// Volatility recursion `h' = ω + (α u² + β) h` driven by the innovation `u`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GarchVol {
    params: GarchParams,
}

pub fn make_garch_vol(params: GarchParams) -> GarchVol {
    GarchVol { params }
}

impl GarchVol {
    pub fn params(&self) -> GarchParams {
        self.params
    }
}

impl DrivenSystem for GarchVol {
    fn input_dim(&self) -> usize {
        1
    }
    fn state_dim(&self) -> usize {
        1
    }
    fn apply(&self, u: &[f64], x: &[f64], out: &mut [f64]) {
        let p = self.params;
        out[0] = p.omega + (p.alpha * u[0] * u[0] + p.beta) * x[0];
    }
    fn name(&self) -> &str {
        "garch"
    }
}

/// A system given by a closure, for experiments and tests.
pub struct FnSystem<F> {
    input_dim: usize,
    state_dim: usize,
    bounds: Option<StateBox>,
    name: String,
    f: F,
}

impl<F: Fn(&[f64], &[f64], &mut [f64])> FnSystem<F> {
    pub fn new(name: &str, input_dim: usize, state_dim: usize, bounds: Option<StateBox>, f: F) -> Self {
        Self { input_dim, state_dim, bounds, name: name.into(), f }
    }
}

impl<F: Fn(&[f64], &[f64], &mut [f64])> DrivenSystem for FnSystem<F> {
    fn input_dim(&self) -> usize {
        self.input_dim
    }
    fn state_dim(&self) -> usize {
        self.state_dim
    }
    fn apply(&self, u: &[f64], x: &[f64], out: &mut [f64]) {
        (self.f)(u, x, out)
    }
    fn state_bounds(&self) -> Option<&StateBox> {
        self.bounds.as_ref()
    }
    fn name(&self) -> &str {
        &self.name
    }
}

/// A finite stretch of an input sequence: `values[k]` is `u_{origin + k}`.
#[derive(Debug, Clone, PartialEq)]
pub struct InputPath {
    pub origin: i64,
    pub values: Vec<Vec<f64>>,
}

impl InputPath {
    pub fn new(origin: i64, values: Vec<Vec<f64>>) -> Self {
        Self { origin, values }
    }

    pub fn get(&self, index: i64) -> Option<&[f64]> {
        let k = usize::try_from(index.checked_sub(self.origin)?).ok()?;
        self.values.get(k).map(|v| v.as_slice())
    }

    /// One past the last covered index.
    pub fn end(&self) -> i64 {
        self.origin + self.values.len() as i64
    }
}

/// `φ_u(n, m, x) = g_{u_{n-1}} ∘ … ∘ g_{u_m}(x)`; `n = m` returns `x`.
pub fn semigroup_apply(g: &dyn DrivenSystem, path: &InputPath, x: &[f64], from: i64, to: i64) -> Result<Vec<f64>> {
    if to < from {
        bail!(Domain, "semigroup needs from <= to, got {from} > {to}");
    }
    if x.len() != g.state_dim() {
        bail!(Shape, "state has dimension {}, expected {}", x.len(), g.state_dim());
    }
    let mut cur = x.to_vec();
    let mut next = vec![0.0; cur.len()];
    for k in from..to {
        let Some(u) = path.get(k) else {
            bail!(Shape, "input path covers [{}, {}) but index {k} is needed", path.origin, path.end());
        };
        check_dims(g, u, &cur)?;
        g.apply(u, &cur, &mut next);
        core::mem::swap(&mut cur, &mut next);
    }
    Ok(cur)
}

/// Image of a set of initial states under `φ_u(n, n - j, ·)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Cloud {
    pub states: Vec<Vec<f64>>,
    /// Largest Euclidean distance between two states.
    pub diameter: f64,
}

pub fn point_diameter(points: &[Vec<f64>]) -> f64 {
    let mut d = 0.0_f64;
    for i in 0..points.len() {
        for j in i + 1..points.len() {
            d = d.max(euclidean(&points[i], &points[j]));
        }
    }
    d
}

/// Pullback approximation of the reachable set at time `n` from `lookback`
/// steps back.
pub fn reachable_cloud(
    g: &dyn DrivenSystem,
    path: &InputPath,
    n: i64,
    lookback: usize,
    init_grid: &[Vec<f64>],
) -> Result<Cloud> {
    if init_grid.is_empty() {
        bail!(Shape, "initial grid must be nonempty");
    }
    let from = n - lookback as i64;
    let states = init_grid.iter().map(|x| semigroup_apply(g, path, x, from, n)).collect::<Result<Vec<_>>>()?;
    let diameter = point_diameter(&states);
    Ok(Cloud { states, diameter })
}

/// Runs `x_{k+1} = g(u_k, x_k)` over the whole path and drops the first
/// `washout` states; `retained[i]` is the state after input `washout + i`.
pub fn washout_trajectory(g: &dyn DrivenSystem, u_path: &[Vec<f64>], x0: &[f64], washout: usize) -> Result<Vec<Vec<f64>>> {
    if washout >= u_path.len() {
        bail!(Domain, "washout {washout} must be shorter than the path length {}", u_path.len());
    }
    let mut out = Vec::with_capacity(u_path.len() - washout);
    let mut cur = x0.to_vec();
    let mut next = vec![0.0; cur.len()];
    for (k, u) in u_path.iter().enumerate() {
        check_dims(g, u, &cur)?;
        g.apply(u, &cur, &mut next);
        core::mem::swap(&mut cur, &mut next);
        if k >= washout {
            out.push(cur.clone());
        }
    }
    Ok(out)
}
