//! Wasserstein-1 distances between empirical measures.
//!
//! - [`w1_exact_1d`]: area between CDFs on the real line, `O(n log n)`.
//! - [`w1_exact`]: network simplex on the full cost matrix, any metric.
//! - [`w1_entropic`]: log-domain Sinkhorn, rounded onto the exact marginals.
//! - [`dual_lower_bound`]: Kantorovich-Rubinstein certificate from a
//!   1-Lipschitz test function.
//! - [`w1`]: dispatcher used by the solvers; cancels common mass, then picks
//!   the exact route when it fits and a blocked upper bound otherwise.

mod dual;
mod entropic;
mod one_d;
mod simplex;

use alloc::vec;
use alloc::vec::Vec;

pub use dual::{dual_lower_bound, PiecewiseLinear};
pub use entropic::{diameter, w1_entropic};
pub use one_d::{monotone_plan_1d, w1_exact_1d};

use crate::error::{bail, Error, Result};
use crate::measures::{lex_cmp, EmpiricalMeasure};
use crate::metrics::Metric;

/// Default cap on `|μ|·|ν|` for the exact solver.
pub const DEFAULT_EXACT_CAP: usize = 512 * 512;

/// A coupling of two empirical measures, row-major `rows × cols`.
#[derive(Debug, Clone, PartialEq)]
pub struct TransportPlan {
    pub rows: usize,
    pub cols: usize,
    pub plan: Vec<f64>,
    pub cost: f64,
    /// `true` for plans from an exact solver.
    pub exact: bool,
    /// `false` when an iterative solver stopped at its iteration budget.
    pub converged: bool,
}

impl TransportPlan {
    pub fn mass(&self, i: usize, j: usize) -> f64 {
        self.plan[i * self.cols + j]
    }

    pub fn row_sums(&self) -> Vec<f64> {
        self.plan.chunks_exact(self.cols).map(|r| r.iter().sum()).collect()
    }

    pub fn col_sums(&self) -> Vec<f64> {
        let mut s = vec![0.0; self.cols];
        for row in self.plan.chunks_exact(self.cols) {
            for (acc, v) in s.iter_mut().zip(row) {
                *acc += v;
            }
        }
        s
    }

    /// Nonzero cells as `(row, col, mass)`, row-major order.
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.plan.iter().enumerate().filter(|(_, v)| **v != 0.0).map(move |(k, v)| (k / self.cols, k % self.cols, *v))
    }

    /// Recomputes `Σ plan_ij d(x_i, y_j)`.
    pub fn transport_cost(&self, mu: &EmpiricalMeasure, nu: &EmpiricalMeasure, metric: &Metric) -> f64 {
        self.entries().map(|(i, j, v)| v * metric.distance_unchecked(mu.point(i), nu.point(j))).sum()
    }
}

pub(crate) fn check_pair(mu: &EmpiricalMeasure, nu: &EmpiricalMeasure, metric: &Metric) -> Result<()> {
    if mu.dim() != nu.dim() {
        bail!(Shape, "measures live in dimensions {} and {}", mu.dim(), nu.dim());
    }
    metric.validate_dim(mu.dim())
}

pub(crate) fn cost_matrix(mu: &EmpiricalMeasure, nu: &EmpiricalMeasure, metric: &Metric) -> Vec<f64> {
    let mut c = Vec::with_capacity(mu.len() * nu.len());
    for (x, _) in mu.iter() {
        for (y, _) in nu.iter() {
            c.push(metric.distance_unchecked(x, y));
        }
    }
    c
}

/// Exact W₁ with an optimal plan, by network simplex on the dense cost matrix.
/// Zero-weight atoms are ignored (their plan rows/columns stay zero).
pub fn w1_exact(mu: &EmpiricalMeasure, nu: &EmpiricalMeasure, metric: &Metric) -> Result<(f64, TransportPlan)> {
    w1_exact_capped(mu, nu, metric, DEFAULT_EXACT_CAP)
}

pub fn w1_exact_capped(
    mu: &EmpiricalMeasure,
    nu: &EmpiricalMeasure,
    metric: &Metric,
    cap: usize,
) -> Result<(f64, TransportPlan)> {
    check_pair(mu, nu, metric)?;
    let size = mu.len().saturating_mul(nu.len());
    if size > cap {
        return Err(Error::Resource(alloc::format!(
            "exact solver limited to {cap} cells, got {} x {}; use w1_entropic for large supports",
            mu.len(),
            nu.len()
        )));
    }
    let rows: Vec<usize> = (0..mu.len()).filter(|&i| mu.weight(i) > 0.0).collect();
    let cols: Vec<usize> = (0..nu.len()).filter(|&j| nu.weight(j) > 0.0).collect();
    let a: Vec<f64> = rows.iter().map(|&i| mu.weight(i)).collect();
    let b: Vec<f64> = cols.iter().map(|&j| nu.weight(j)).collect();
    let mut c = Vec::with_capacity(a.len() * b.len());
    for &i in &rows {
        for &j in &cols {
            c.push(metric.distance_unchecked(mu.point(i), nu.point(j)));
        }
    }
    let dir = principal_direction(mu, nu);
    let order = |m: &EmpiricalMeasure, idx: &[usize]| {
        let mut o: Vec<(f64, usize)> =
            idx.iter().enumerate().map(|(k, &i)| (m.point(i).iter().zip(&dir).map(|(x, v)| x * v).sum(), k)).collect();
        o.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)));
        o.into_iter().map(|(_, k)| k).collect::<Vec<_>>()
    };
    let flows = simplex::solve_ordered(&a, &b, &c, &order(mu, &rows), &order(nu, &cols))?;
    let mut plan = vec![0.0; mu.len() * nu.len()];
    let mut cost = 0.0;
    for (i, j, x) in flows {
        plan[rows[i] * nu.len() + cols[j]] = x;
        cost += x * c[i * b.len() + j];
    }
    let tp = TransportPlan { rows: mu.len(), cols: nu.len(), plan, cost, exact: true, converged: true };
    Ok((cost, tp))
}

/// A W₁ value together with whether it is exact or an upper bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct W1Estimate {
    pub value: f64,
    pub exact: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct W1Options {
    /// Largest `|μ|·|ν|` handed to the exact solver.
    pub exact_cap: usize,
    /// Target atoms per block when the problem is too large for one exact solve.
    pub block_atoms: usize,
}

impl Default for W1Options {
    fn default() -> Self {
        Self { exact_cap: DEFAULT_EXACT_CAP, block_atoms: 384 }
    }
}

/// W₁ by the cheapest route that stays exact where possible.
///
/// Euclidean 1-D input uses the CDF formula. Otherwise mass shared by
/// identical atoms is cancelled first (W₁ only depends on `μ - ν`), and the
/// remainder goes to the exact solver if it fits `exact_cap`, else to
/// [`w1_blocked_upper`].
pub fn w1(mu: &EmpiricalMeasure, nu: &EmpiricalMeasure, metric: &Metric, opts: &W1Options) -> Result<W1Estimate> {
    check_pair(mu, nu, metric)?;
    if mu.dim() == 1 && *metric == Metric::Euclidean {
        return Ok(W1Estimate { value: w1_exact_1d(mu, nu)?, exact: true });
    }
    let Some((mass, rm, rn)) = cancel_common(mu, nu)? else {
        return Ok(W1Estimate { value: 0.0, exact: true });
    };
    if rm.len().saturating_mul(rn.len()) <= opts.exact_cap {
        let (c, _) = w1_exact_capped(&rm, &rn, metric, opts.exact_cap)?;
        return Ok(W1Estimate { value: mass * c, exact: true });
    }
    let c = w1_blocked_upper(&rm, &rn, metric, opts)?;
    Ok(W1Estimate { value: mass * c, exact: false })
}

/// Removes `μ ∧ ν` on exactly coincident atoms. Returns the remaining mass and
/// the two normalized remainders, or `None` if the measures are equal.
fn cancel_common(mu: &EmpiricalMeasure, nu: &EmpiricalMeasure) -> Result<Option<(f64, EmpiricalMeasure, EmpiricalMeasure)>> {
    let a = mu.merged();
    let b = nu.merged();
    let d = a.dim();
    let (mut ca, mut wa, mut cb, mut wb) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
    let (mut i, mut j) = (0, 0);
    while i < a.len() || j < b.len() {
        let ord = if i == a.len() {
            core::cmp::Ordering::Greater
        } else if j == b.len() {
            core::cmp::Ordering::Less
        } else {
            lex_cmp(a.point(i), b.point(j))
        };
        match ord {
            core::cmp::Ordering::Less => {
                ca.extend_from_slice(a.point(i));
                wa.push(a.weight(i));
                i += 1;
            }
            core::cmp::Ordering::Greater => {
                cb.extend_from_slice(b.point(j));
                wb.push(b.weight(j));
                j += 1;
            }
            core::cmp::Ordering::Equal => {
                let (x, y) = (a.weight(i), b.weight(j));
                if x > y {
                    ca.extend_from_slice(a.point(i));
                    wa.push(x - y);
                } else if y > x {
                    cb.extend_from_slice(b.point(j));
                    wb.push(y - x);
                }
                i += 1;
                j += 1;
            }
        }
    }
    let ma: f64 = wa.iter().sum();
    let mb: f64 = wb.iter().sum();
    let mass = 0.5 * (ma + mb);
    if wa.is_empty() || wb.is_empty() || mass < 1e-14 {
        return Ok(None);
    }
    let ra = EmpiricalMeasure::from_unnormalized(d, ca, wa)?;
    let rb = EmpiricalMeasure::from_unnormalized(d, cb, wb)?;
    Ok(Some((mass, ra, rb)))
}

/// Upper bound on W₁ for supports too large for one exact solve.
///
/// Both measures are ordered along their leading principal direction and cut
/// into `k` consecutive slabs of mass `1/k` (atoms straddling a cut are split).
/// Slab `s` of `μ` is transported exactly onto slab `s` of `ν`; the union of
/// these plans is a feasible coupling, so its cost bounds W₁ from above.
pub fn w1_blocked_upper(mu: &EmpiricalMeasure, nu: &EmpiricalMeasure, metric: &Metric, opts: &W1Options) -> Result<f64> {
    check_pair(mu, nu, metric)?;
    let target = opts.block_atoms.max(1);
    let k = mu.len().max(nu.len()).div_ceil(target).max(1);
    let dir = principal_direction(mu, nu);
    let slabs_a = slabs(mu, &dir, k);
    let slabs_b = slabs(nu, &dir, k);
    let mut total = 0.0;
    for (sa, sb) in slabs_a.into_iter().zip(slabs_b) {
        let (Some(sa), Some(sb)) = (sa, sb) else { continue };
        let (c, _) = w1_exact_capped(&sa, &sb, metric, usize::MAX)?;
        total += c / k as f64;
    }
    Ok(total)
}

fn principal_direction(mu: &EmpiricalMeasure, nu: &EmpiricalMeasure) -> Vec<f64> {
    let d = mu.dim();
    let mut mean = vec![0.0; d];
    for m in [mu, nu] {
        for (p, w) in m.iter() {
            for (acc, x) in mean.iter_mut().zip(p) {
                *acc += 0.5 * w * x;
            }
        }
    }
    let mut v: Vec<f64> = (0..d).map(|i| 1.0 + i as f64 * 1e-3).collect();
    for _ in 0..50 {
        let mut next = vec![0.0; d];
        for m in [mu, nu] {
            for (p, w) in m.iter() {
                let proj: f64 = p.iter().zip(&mean).zip(&v).map(|((x, c), vi)| (x - c) * vi).sum();
                for ((acc, x), c) in next.iter_mut().zip(p).zip(&mean) {
                    *acc += 0.5 * w * proj * (x - c);
                }
            }
        }
        let norm = libm::sqrt(next.iter().map(|x| x * x).sum::<f64>());
        if !(norm > 0.0) {
            break;
        }
        v = next.into_iter().map(|x| x / norm).collect();
    }
    v
}

/// Splits a measure into `k` consecutive slabs of mass `1/k` along `dir`,
/// each returned normalized (or `None` when a slab is numerically empty).
fn slabs(m: &EmpiricalMeasure, dir: &[f64], k: usize) -> Vec<Option<EmpiricalMeasure>> {
    let d = m.dim();
    let mut order: Vec<(f64, usize)> =
        m.iter().enumerate().map(|(i, (p, _))| (p.iter().zip(dir).map(|(x, v)| x * v).sum(), i)).collect();
    order.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let quota = 1.0 / k as f64;
    let mut out = Vec::with_capacity(k);
    let mut coords = Vec::new();
    let mut weights = Vec::new();
    let mut filled = 0.0;
    let mut iter = order.into_iter().map(|(_, i)| (i, m.weight(i)));
    let mut current = iter.next();
    while let Some((i, mut w)) = current {
        let room = quota - filled;
        if w <= room + 1e-15 || out.len() == k - 1 {
            coords.extend_from_slice(m.point(i));
            weights.push(w);
            filled += w;
            current = iter.next();
        } else {
            if room > 0.0 {
                coords.extend_from_slice(m.point(i));
                weights.push(room);
                w -= room;
            }
            filled = quota;
            current = Some((i, w));
        }
        if filled >= quota - 1e-15 && out.len() < k - 1 {
            out.push(EmpiricalMeasure::from_unnormalized(d, core::mem::take(&mut coords), core::mem::take(&mut weights)).ok());
            filled = 0.0;
        }
    }
    if !weights.is_empty() {
        out.push(EmpiricalMeasure::from_unnormalized(d, coords, weights).ok());
    }
    out.resize(k, None);
    out
}
