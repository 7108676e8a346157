use alloc::vec;
use alloc::vec::Vec;

use super::TransportPlan;
use crate::error::{bail, Result};
use crate::measures::EmpiricalMeasure;

fn check_1d(mu: &EmpiricalMeasure, nu: &EmpiricalMeasure) -> Result<()> {
    if mu.dim() != 1 || nu.dim() != 1 {
        bail!(Shape, "1-D solver needs one-dimensional measures, got dimensions {} and {}", mu.dim(), nu.dim());
    }
    Ok(())
}

/// Atom indices sorted by coordinate, ties by index.
fn sorted_indices(m: &EmpiricalMeasure) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..m.len()).collect();
    idx.sort_by(|&a, &b| m.point(a)[0].total_cmp(&m.point(b)[0]).then(a.cmp(&b)));
    idx
}

/// Exact W₁ on the real line: `∫ |F_μ(t) - F_ν(t)| dt` over the merged support.
pub fn w1_exact_1d(mu: &EmpiricalMeasure, nu: &EmpiricalMeasure) -> Result<f64> {
    check_1d(mu, nu)?;
    let mut events: Vec<(f64, f64)> = Vec::with_capacity(mu.len() + nu.len());
    events.extend(mu.iter().map(|(p, w)| (p[0], w)));
    events.extend(nu.iter().map(|(p, w)| (p[0], -w)));
    events.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut diff = 0.0;
    let mut area = 0.0;
    for k in 0..events.len() - 1 {
        diff += events[k].1;
        let width = events[k + 1].0 - events[k].0;
        if width > 0.0 {
            area += diff.abs() * width;
        }
    }
    Ok(area)
}

/// The monotone (quantile) coupling, optimal for every convex cost on the line.
/// Ties are broken by coordinate then atom index, so the plan is canonical.
pub fn monotone_plan_1d(mu: &EmpiricalMeasure, nu: &EmpiricalMeasure) -> Result<TransportPlan> {
    check_1d(mu, nu)?;
    let ia = sorted_indices(mu);
    let ib = sorted_indices(nu);
    let mut plan = vec![0.0; mu.len() * nu.len()];
    let (mut p, mut q) = (0, 0);
    let mut ra = mu.weight(ia[0]);
    let mut rb = nu.weight(ib[0]);
    let mut cost = 0.0;
    loop {
        let x = ra.min(rb);
        let (i, j) = (ia[p], ib[q]);
        plan[i * nu.len() + j] += x;
        cost += x * (mu.point(i)[0] - nu.point(j)[0]).abs();
        ra -= x;
        rb -= x;
        let last_a = p + 1 == ia.len();
        let last_b = q + 1 == ib.len();
        if last_a && last_b {
            break;
        }
        if (ra <= rb && !last_a) || last_b {
            p += 1;
            ra += mu.weight(ia[p]);
        } else {
            q += 1;
            rb += nu.weight(ib[q]);
        }
    }
    Ok(TransportPlan { rows: mu.len(), cols: nu.len(), plan, cost, exact: true, converged: true })
}
