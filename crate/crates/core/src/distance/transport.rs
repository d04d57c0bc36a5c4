//! Exact transportation-problem solver (transportation simplex with MODI pricing).
//!
//! Minimizes `Σ fᵢⱼ·cᵢⱼ` subject to `fᵢⱼ ≥ 0`, row sums `supply` and column
//! sums `demand`. The basis is kept as a spanning tree of the bipartite
//! row/column graph with exactly `m + n − 1` cells, degenerate zeros included.

use crate::{Error, Result};

/// Largest support size (on either side) solved exactly.
pub const DEFAULT_SUPPORT_CAP: usize = 2_000;

/// Optimal flow and its cost.
#[derive(Debug, Clone, PartialEq)]
pub struct TransportPlan {
    pub cost: f64,
    /// Nonzero flows as `(row, column, amount)` in the caller's indexing.
    pub flows: Vec<(usize, usize, f64)>,
}

/// Solves the balanced transportation problem exactly.
///
/// `cost` is row-major, `supply.len() × demand.len()`. Totals must agree to
/// within `1e-9` relative; the demand side is rescaled to match exactly.
pub fn solve(supply: &[f64], demand: &[f64], cost: &[f64], cap: usize) -> Result<TransportPlan> {
    let (m0, n0) = (supply.len(), demand.len());
    if m0 == 0 || n0 == 0 {
        return Err(Error::arg("transport supports must be non-empty"));
    }
    if m0 > cap || n0 > cap {
        return Err(Error::TooLarge(format!(
            "support sizes {m0}×{n0} exceed the exact-solver cap of {cap}"
        )));
    }
    if cost.len() != m0 * n0 {
        return Err(Error::arg("cost matrix shape does not match supports"));
    }
    if let Some(c) = cost.iter().find(|c| !c.is_finite() || **c < 0.0) {
        return Err(Error::arg(format!("ground cost {c} is negative or non-finite")));
    }
    for (side, masses) in [("supply", supply), ("demand", demand)] {
        if masses.iter().any(|m| !m.is_finite() || *m < 0.0) {
            return Err(Error::arg(format!("{side} masses must be finite and non-negative")));
        }
    }
    let total_s: f64 = supply.iter().sum();
    let total_d: f64 = demand.iter().sum();
    if total_s <= 0.0 {
        return Err(Error::arg("transport masses must have positive total"));
    }
    if (total_s - total_d).abs() > 1e-9 * total_s.max(total_d) {
        return Err(Error::arg(format!(
            "unbalanced transport problem: supply {total_s} vs demand {total_d}"
        )));
    }

    // drop zero-mass rows and columns; they carry no flow
    let rows: Vec<usize> = (0..m0).filter(|&i| supply[i] > 0.0).collect();
    let cols: Vec<usize> = (0..n0).filter(|&j| demand[j] > 0.0).collect();
    let scale = total_s / total_d;
    let a: Vec<f64> = rows.iter().map(|&i| supply[i]).collect();
    let b: Vec<f64> = cols.iter().map(|&j| demand[j] * scale).collect();
    let n = b.len();
    let c: Vec<f64> = rows
        .iter()
        .flat_map(|&i| cols.iter().map(move |&j| cost[i * n0 + j]))
        .collect();

    let mut s = Simplex::new(a, b, c);
    s.run()?;

    let mut flows = Vec::new();
    let mut total = 0.0;
    for &(i, j) in &s.basis {
        let f = s.flow[i * n + j];
        if f > 0.0 {
            total += f * s.cost[i * n + j];
            flows.push((rows[i], cols[j], f));
        }
    }
    flows.sort_by_key(|f| (f.0, f.1));
    Ok(TransportPlan { cost: total, flows })
}

struct Simplex {
    m: usize,
    n: usize,
    cost: Vec<f64>,
    flow: Vec<f64>,
    is_basic: Vec<bool>,
    basis: Vec<(usize, usize)>,
    cost_eps: f64,
}

// node ids: rows are 0..m, columns are m..m+n
struct Tree {
    parent: Vec<usize>,
    // basis index of the edge to the parent
    parent_edge: Vec<usize>,
    depth: Vec<usize>,
    u: Vec<f64>,
    v: Vec<f64>,
}

const NONE: usize = usize::MAX;
const DEGENERATE_RUN_BEFORE_BLAND: usize = 50;

impl Simplex {
    fn new(a: Vec<f64>, b: Vec<f64>, cost: Vec<f64>) -> Self {
        let (m, n) = (a.len(), b.len());
        let cmax = cost.iter().copied().fold(0.0, f64::max);
        let mut s = Simplex {
            m,
            n,
            cost,
            flow: vec![0.0; m * n],
            is_basic: vec![false; m * n],
            basis: Vec::with_capacity(m + n - 1),
            cost_eps: 1e-12 * cmax.max(1.0),
        };
        s.northwest_corner(a, b);
        s
    }

    fn northwest_corner(&mut self, mut a: Vec<f64>, mut b: Vec<f64>) {
        let (m, n) = (self.m, self.n);
        let (mut i, mut j) = (0, 0);
        loop {
            let x = a[i].min(b[j]);
            self.set_basic(i, j, x);
            a[i] -= x;
            b[j] -= x;
            if i == m - 1 && j == n - 1 {
                break;
            }
            if i == m - 1 {
                j += 1;
            } else if j == n - 1 || a[i] <= b[j] {
                i += 1;
            } else {
                j += 1;
            }
        }
        debug_assert_eq!(self.basis.len(), m + n - 1);
    }

    fn set_basic(&mut self, i: usize, j: usize, x: f64) {
        let k = i * self.n + j;
        self.flow[k] = x.max(0.0);
        self.is_basic[k] = true;
        self.basis.push((i, j));
    }

    fn build_tree(&self) -> Tree {
        let (m, n) = (self.m, self.n);
        let nodes = m + n;
        let mut adj: Vec<Vec<(usize, usize)>> = vec![Vec::new(); nodes];
        for (e, &(i, j)) in self.basis.iter().enumerate() {
            adj[i].push((m + j, e));
            adj[m + j].push((i, e));
        }
        let mut t = Tree {
            parent: vec![NONE; nodes],
            parent_edge: vec![NONE; nodes],
            depth: vec![0; nodes],
            u: vec![0.0; m],
            v: vec![0.0; n],
        };
        let mut visited = vec![false; nodes];
        let mut stack = vec![0usize];
        visited[0] = true;
        while let Some(node) = stack.pop() {
            for &(next, e) in &adj[node] {
                if visited[next] {
                    continue;
                }
                visited[next] = true;
                t.parent[next] = node;
                t.parent_edge[next] = e;
                t.depth[next] = t.depth[node] + 1;
                let (i, j) = self.basis[e];
                let c = self.cost[i * n + j];
                if next >= m {
                    t.v[next - m] = c - t.u[i];
                } else {
                    t.u[next] = c - t.v[j];
                }
                stack.push(next);
            }
        }
        debug_assert!(visited.iter().all(|&v| v), "basis is not a spanning tree");
        t
    }

    /// Entering cell: most negative reduced cost, or first negative under Bland's rule.
    fn price(&self, t: &Tree, bland: bool) -> Option<(usize, usize)> {
        let n = self.n;
        let mut best: Option<(usize, usize)> = None;
        let mut best_rc = -self.cost_eps;
        for i in 0..self.m {
            let ui = t.u[i];
            let row = &self.cost[i * n..(i + 1) * n];
            for j in 0..n {
                if self.is_basic[i * n + j] {
                    continue;
                }
                let rc = row[j] - ui - t.v[j];
                if rc < best_rc {
                    if bland {
                        return Some((i, j));
                    }
                    best_rc = rc;
                    best = Some((i, j));
                }
            }
        }
        best
    }

    /// Basis edges on the tree path from column `j` to row `i`, in path order.
    fn cycle_path(&self, t: &Tree, i: usize, j: usize) -> Vec<usize> {
        let mut from_col = Vec::new();
        let mut from_row = Vec::new();
        let (mut a, mut b) = (self.m + j, i);
        while a != b {
            if t.depth[a] >= t.depth[b] {
                from_col.push(t.parent_edge[a]);
                a = t.parent[a];
            } else {
                from_row.push(t.parent_edge[b]);
                b = t.parent[b];
            }
        }
        from_col.extend(from_row.into_iter().rev());
        from_col
    }

    fn run(&mut self) -> Result<()> {
        let max_iter = 100 * (self.m + self.n) * (self.m + self.n).max(10);
        let mut degenerate_run = 0;
        for _ in 0..max_iter {
            let tree = self.build_tree();
            let bland = degenerate_run >= DEGENERATE_RUN_BEFORE_BLAND;
            let Some((ei, ej)) = self.price(&tree, bland) else {
                return Ok(());
            };
            let path = self.cycle_path(&tree, ei, ej);
            debug_assert!(path.len() % 2 == 1);
            // path edges alternate −, +, −, … starting from the column end
            let mut theta = f64::INFINITY;
            let mut leave = NONE;
            let mut leave_cell = usize::MAX;
            for (pos, &e) in path.iter().enumerate().step_by(2) {
                let (i, j) = self.basis[e];
                let k = i * self.n + j;
                let f = self.flow[k];
                if f < theta || (bland && f == theta && k < leave_cell) {
                    theta = f;
                    leave = pos;
                    leave_cell = k;
                }
            }
            let theta = theta.max(0.0);
            degenerate_run = if theta == 0.0 { degenerate_run + 1 } else { 0 };
            let n = self.n;
            for (pos, &e) in path.iter().enumerate() {
                let (i, j) = self.basis[e];
                let k = i * n + j;
                if pos % 2 == 0 {
                    self.flow[k] = (self.flow[k] - theta).max(0.0);
                } else {
                    self.flow[k] += theta;
                }
            }
            let leave_edge = path[leave];
            let (li, lj) = self.basis[leave_edge];
            self.flow[li * n + lj] = 0.0;
            self.is_basic[li * n + lj] = false;
            self.basis[leave_edge] = (ei, ej);
            self.is_basic[ei * n + ej] = true;
            self.flow[ei * n + ej] = theta;
        }
        Err(Error::undefined(
            "transportation simplex did not converge within its iteration limit",
        ))
    }
}
