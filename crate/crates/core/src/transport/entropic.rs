use alloc::vec;
use alloc::vec::Vec;

use super::{check_pair, cost_matrix, TransportPlan};
use crate::error::{bail, Result};
use crate::measures::EmpiricalMeasure;
use crate::metrics::Metric;

/// Row-marginal L1 error accepted before rounding, final and intermediate stages.
/// Rounding repairs the residual at a cost of at most `err · max cost`.
const MARGINAL_TOL: f64 = 1e-6;
const STAGE_TOL: f64 = 1e-3;

/// Largest distance between any two atoms of `μ ∪ ν`.
pub fn diameter(mu: &EmpiricalMeasure, nu: &EmpiricalMeasure, metric: &Metric) -> f64 {
    let pts: Vec<&[f64]> = mu.iter().chain(nu.iter()).map(|(p, _)| p).collect();
    let mut best = 0.0_f64;
    for i in 0..pts.len() {
        for j in i + 1..pts.len() {
            best = best.max(metric.distance_unchecked(pts[i], pts[j]));
        }
    }
    best
}

fn log_sum_exp(vals: impl Iterator<Item = f64> + Clone) -> f64 {
    let mx = vals.clone().fold(f64::NEG_INFINITY, f64::max);
    if mx == f64::NEG_INFINITY {
        return mx;
    }
    mx + libm::log(vals.map(|v| libm::exp(v - mx)).sum::<f64>())
}

/// Entropic W₁ approximation.
///
/// Runs log-domain Sinkhorn with ε-scaling (halving from the largest cost
/// down to `epsilon`), rounds the scaled plan onto the exact marginals, and
/// returns the transport cost of that feasible plan, which is an upper bound
/// on W₁. Hitting `max_iters` sets `converged = false`; the rounded plan is
/// still feasible.
pub fn w1_entropic(
    mu: &EmpiricalMeasure,
    nu: &EmpiricalMeasure,
    metric: &Metric,
    epsilon: f64,
    max_iters: usize,
) -> Result<(f64, TransportPlan)> {
    check_pair(mu, nu, metric)?;
    if !(epsilon > 0.0) || !epsilon.is_finite() {
        bail!(Domain, "epsilon must be positive, got {epsilon}");
    }
    let (m, n) = (mu.len(), nu.len());
    let c = cost_matrix(mu, nu, metric);
    let la: Vec<f64> = mu.weights().iter().map(|w| libm::log(*w)).collect();
    let lb: Vec<f64> = nu.weights().iter().map(|w| libm::log(*w)).collect();
    let cmax = c.iter().fold(0.0_f64, |acc, v| acc.max(*v));

    let mut f = vec![0.0; m];
    let mut g = vec![0.0; n];
    let mut eps = cmax.max(epsilon);
    let mut iters = 0;
    let mut converged = false;
    loop {
        let last_stage = eps <= epsilon;
        let stage_budget = if last_stage { max_iters.saturating_sub(iters) } else { 200 };
        let mut stage_done = false;
        for _ in 0..stage_budget {
            if iters >= max_iters {
                break;
            }
            iters += 1;
            for i in 0..m {
                let row = &c[i * n..(i + 1) * n];
                f[i] = eps * (la[i] - log_sum_exp(g.iter().zip(row).map(|(gj, cij)| (gj - cij) / eps)));
            }
            for j in 0..n {
                g[j] = eps * (lb[j] - log_sum_exp((0..m).map(|i| (f[i] - c[i * n + j]) / eps)));
            }
            if iters % 8 != 0 && iters < max_iters {
                continue;
            }
            // columns are exact after the g-update; check rows
            let mut err = 0.0;
            for i in 0..m {
                let r: f64 = (0..n).map(|j| libm::exp((f[i] + g[j] - c[i * n + j]) / eps)).sum();
                err += (r - mu.weight(i)).abs();
            }
            if err <= if last_stage { MARGINAL_TOL } else { STAGE_TOL } {
                stage_done = true;
                break;
            }
        }
        if last_stage {
            converged = stage_done;
            break;
        }
        if iters >= max_iters {
            break;
        }
        eps = (eps * 0.5).max(epsilon);
    }

    let mut plan: Vec<f64> = (0..m * n).map(|k| libm::exp((f[k / n] + g[k % n] - c[k]) / eps)).collect();
    round_to_marginals(&mut plan, mu.weights(), nu.weights());
    let cost = plan.iter().zip(&c).map(|(p, ci)| p * ci).sum();
    let tp = TransportPlan { rows: m, cols: n, plan, cost, exact: false, converged };
    Ok((cost, tp))
}

/// Projects a nonnegative matrix onto the transport polytope `Π(a, b)`:
/// shrink rows, shrink columns, then redistribute the deficit as a rank-one term.
fn round_to_marginals(plan: &mut [f64], a: &[f64], b: &[f64]) {
    let (m, n) = (a.len(), b.len());
    for i in 0..m {
        let r: f64 = plan[i * n..(i + 1) * n].iter().sum();
        if r > a[i] {
            let s = a[i] / r;
            plan[i * n..(i + 1) * n].iter_mut().for_each(|v| *v *= s);
        }
    }
    for j in 0..n {
        let cs: f64 = (0..m).map(|i| plan[i * n + j]).sum();
        if cs > b[j] {
            let s = b[j] / cs;
            (0..m).for_each(|i| plan[i * n + j] *= s);
        }
    }
    let er: Vec<f64> = (0..m).map(|i| (a[i] - plan[i * n..(i + 1) * n].iter().sum::<f64>()).max(0.0)).collect();
    let ec: Vec<f64> = (0..n).map(|j| (b[j] - (0..m).map(|i| plan[i * n + j]).sum::<f64>()).max(0.0)).collect();
    let total: f64 = er.iter().sum();
    if total > 0.0 {
        for i in 0..m {
            for j in 0..n {
                plan[i * n + j] += er[i] * ec[j] / total;
            }
        }
    }
}
