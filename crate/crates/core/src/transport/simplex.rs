//! Primal network simplex for the dense transportation problem.
//!
//! Nodes `0..m` are sources, `m..m+n` sinks. The basis is a spanning tree
//! of `m + n - 1` arcs; potentials satisfy `u_i + v_j = c_ij` on tree arcs.
//! Entering arcs are chosen by block search over reduced costs, leaving arcs
//! by the last-blocking-arc rule walking the cycle from its apex.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy)]
struct TreeArc {
    row: usize,
    col: usize,
    flow: f64,
}

struct Basis<'a> {
    m: usize,
    n: usize,
    cost: &'a [f64],
    arcs: Vec<TreeArc>,
    adj: Vec<Vec<usize>>,
    parent_arc: Vec<usize>,
    parent: Vec<usize>,
    depth: Vec<usize>,
    pot: Vec<f64>,
    queue: Vec<usize>,
}

const NONE: usize = usize::MAX;

impl<'a> Basis<'a> {
    /// North-west corner start over rows and columns visited in the given
    /// orders; always yields a spanning tree (degenerate arcs kept).
    fn north_west(a: &[f64], b: &[f64], cost: &'a [f64], row_order: &[usize], col_order: &[usize]) -> Self {
        let (m, n) = (a.len(), b.len());
        let mut r = a.to_vec();
        let mut c = b.to_vec();
        let mut arcs = Vec::with_capacity(m + n - 1);
        let (mut ii, mut jj) = (0, 0);
        loop {
            let (i, j) = (row_order[ii], col_order[jj]);
            let x = r[i].min(c[j]).max(0.0);
            arcs.push(TreeArc { row: i, col: j, flow: x });
            r[i] -= x;
            c[j] -= x;
            if ii == m - 1 && jj == n - 1 {
                break;
            }
            if jj == n - 1 || (ii < m - 1 && r[i] <= c[j]) {
                ii += 1;
            } else {
                jj += 1;
            }
        }
        let mut adj = vec![Vec::new(); m + n];
        for (k, arc) in arcs.iter().enumerate() {
            adj[arc.row].push(k);
            adj[m + arc.col].push(k);
        }
        let nodes = m + n;
        let mut basis = Self {
            m,
            n,
            cost,
            arcs,
            adj,
            parent_arc: vec![NONE; nodes],
            parent: vec![NONE; nodes],
            depth: vec![0; nodes],
            pot: vec![0.0; nodes],
            queue: Vec::with_capacity(nodes),
        };
        basis.rebuild();
        basis
    }

    fn other_end(&self, arc: usize, node: usize) -> usize {
        let a = self.arcs[arc];
        if node == a.row {
            self.m + a.col
        } else {
            a.row
        }
    }

    /// Recomputes parents, depths and potentials by BFS from source node 0.
    fn rebuild(&mut self) {
        self.parent[0] = NONE;
        self.parent_arc[0] = NONE;
        self.depth[0] = 0;
        self.pot[0] = 0.0;
        self.queue.clear();
        self.queue.push(0);
        let mut head = 0;
        while head < self.queue.len() {
            let v = self.queue[head];
            head += 1;
            for idx in 0..self.adj[v].len() {
                let k = self.adj[v][idx];
                if k == self.parent_arc[v] {
                    continue;
                }
                let w = self.other_end(k, v);
                let a = self.arcs[k];
                let c = self.cost[a.row * self.n + a.col];
                self.parent[w] = v;
                self.parent_arc[w] = k;
                self.depth[w] = self.depth[v] + 1;
                // u_row + v_col = c on tree arcs
                self.pot[w] = c - self.pot[v];
                self.queue.push(w);
            }
        }
        debug_assert_eq!(self.queue.len(), self.m + self.n, "basis is not a spanning tree");
    }

    /// Re-hangs the subtree containing `root` below `parent` through tree arc
    /// `arc`, refreshing parents, depths and potentials inside it only.
    fn rehang(&mut self, root: usize, parent: usize, arc: usize) {
        let a = self.arcs[arc];
        self.parent[root] = parent;
        self.parent_arc[root] = arc;
        self.depth[root] = self.depth[parent] + 1;
        self.pot[root] = self.cost[a.row * self.n + a.col] - self.pot[parent];
        self.queue.clear();
        self.queue.push(root);
        let mut head = 0;
        while head < self.queue.len() {
            let v = self.queue[head];
            head += 1;
            for idx in 0..self.adj[v].len() {
                let k = self.adj[v][idx];
                if k == self.parent_arc[v] {
                    continue;
                }
                let w = self.other_end(k, v);
                let a = self.arcs[k];
                self.parent[w] = v;
                self.parent_arc[w] = k;
                self.depth[w] = self.depth[v] + 1;
                self.pot[w] = self.cost[a.row * self.n + a.col] - self.pot[v];
                self.queue.push(w);
            }
        }
    }

    fn reduced(&self, i: usize, j: usize) -> f64 {
        self.cost[i * self.n + j] - self.pot[i] - self.pot[self.m + j]
    }
}

/// Solves `min Σ c_ij x_ij` subject to row sums `a`, column sums `b`, `x ≥ 0`.
/// `cost` is row-major `a.len() × b.len()`; supplies must have equal totals
/// up to rounding. Returns the positive flows `(i, j, x_ij)`.
///
/// The starting basis is the north-west corner rule over `row_order` and
/// `col_order`; orders that roughly follow a good coupling (for example
/// both sides sorted along a common direction) save most of the pivots.
pub(crate) fn solve_ordered(
    a: &[f64],
    b: &[f64],
    cost: &[f64],
    row_order: &[usize],
    col_order: &[usize],
) -> Result<Vec<(usize, usize, f64)>> {
    let (m, n) = (a.len(), b.len());
    debug_assert_eq!(cost.len(), m * n);
    if m == 0 || n == 0 {
        return Err(Error::Shape("transport problem with an empty side".into()));
    }
    let cmax = cost.iter().fold(0.0_f64, |acc, c| acc.max(c.abs()));
    let eps = 1e-12 * (1.0 + cmax);
    debug_assert!(row_order.len() == m && col_order.len() == n);
    let mut basis = Basis::north_west(a, b, cost, row_order, col_order);

    let total = m * n;
    let block = (libm::sqrt(total as f64) as usize).max(16).min(total);
    let max_pivots = 100 * (m + n) * (m + n) + 10_000;
    let mut next = 0usize;
    let mut path_p: Vec<usize> = Vec::new();
    let mut path_q: Vec<usize> = Vec::new();

    for _pivot in 0..max_pivots {
        // block search for an entering arc
        let mut best = -eps;
        let mut entering = NONE;
        let mut scanned = 0;
        let mut in_block = 0;
        while scanned < total {
            let k = next;
            next += 1;
            if next == total {
                next = 0;
            }
            scanned += 1;
            in_block += 1;
            let (i, j) = (k / n, k % n);
            let r = basis.reduced(i, j);
            if r < best {
                best = r;
                entering = k;
            }
            if in_block == block {
                if entering != NONE {
                    break;
                }
                in_block = 0;
            }
        }
        if entering == NONE {
            let flows = basis.arcs.iter().filter(|a| a.flow > 0.0).map(|a| (a.row, a.col, a.flow)).collect();
            return Ok(flows);
        }

        let (ei, ej) = (entering / n, entering % n);
        // cycle: row ei --entering--> col ej, then tree path col ej -> apex -> row ei
        let (mut p, mut q) = (ei, m + ej);
        path_p.clear();
        path_q.clear();
        while basis.depth[p] > basis.depth[q] {
            path_p.push(basis.parent_arc[p]);
            p = basis.parent[p];
        }
        while basis.depth[q] > basis.depth[p] {
            path_q.push(basis.parent_arc[q]);
            q = basis.parent[q];
        }
        while p != q {
            path_p.push(basis.parent_arc[p]);
            p = basis.parent[p];
            path_q.push(basis.parent_arc[q]);
            q = basis.parent[q];
        }
        // positions along the path from the sink side: odd positions lose flow
        let lq = path_q.len();
        let lp = path_p.len();
        let sign_q = |t: usize| (t + 1) % 2 == 1; // true = decreasing
        let sign_p = |t: usize| (lq + lp - t) % 2 == 1;

        let mut theta = f64::INFINITY;
        for (t, &k) in path_q.iter().enumerate() {
            if sign_q(t) {
                theta = theta.min(basis.arcs[k].flow);
            }
        }
        for (t, &k) in path_p.iter().enumerate() {
            if sign_p(t) {
                theta = theta.min(basis.arcs[k].flow);
            }
        }
        let theta = theta.max(0.0);
        // leaving arc: last blocking arc met when walking apex -> row side -> entering -> col side -> apex
        let mut leaving = NONE;
        for t in (0..lq).rev() {
            let k = path_q[t];
            if sign_q(t) && basis.arcs[k].flow <= theta {
                leaving = k;
                break;
            }
        }
        if leaving == NONE {
            for t in 0..lp {
                let k = path_p[t];
                if sign_p(t) && basis.arcs[k].flow <= theta {
                    leaving = k;
                    break;
                }
            }
        }
        if leaving == NONE {
            return Err(Error::Numeric("network simplex found no leaving arc".into()));
        }

        for (t, &k) in path_q.iter().enumerate() {
            let f = &mut basis.arcs[k].flow;
            *f = if sign_q(t) { (*f - theta).max(0.0) } else { *f + theta };
        }
        for (t, &k) in path_p.iter().enumerate() {
            let f = &mut basis.arcs[k].flow;
            *f = if sign_p(t) { (*f - theta).max(0.0) } else { *f + theta };
        }

        // the subtree cut off by the leaving arc holds the sink end of the
        // entering arc when the leaving arc is on the sink side of the cycle
        let (root, anchor) = if path_q.contains(&leaving) { (m + ej, ei) } else { (ei, m + ej) };
        let old = basis.arcs[leaving];
        basis.adj[old.row].retain(|&x| x != leaving);
        basis.adj[m + old.col].retain(|&x| x != leaving);
        basis.arcs[leaving] = TreeArc { row: ei, col: ej, flow: theta };
        basis.adj[ei].push(leaving);
        basis.adj[m + ej].push(leaving);
        basis.rehang(root, anchor, leaving);
    }
    Err(Error::Numeric("network simplex exceeded its pivot budget".into()))
}
