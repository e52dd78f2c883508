//! Revised simplex for the restricted master problem
//!
//! ```text
//! min  Σ_j c_j y_j
//! s.t. Σ_j a_j y_j + s = cap          (one row per edge, s ≥ 0)
//!      Σ_{j ∈ S_k} y_j = d_k          (one convexity set per commodity)
//!      y ≥ 0
//! ```
//!
//! The convexity rows are handled implicitly (generalized upper bounding):
//! every set keeps one basic "key" column, and the explicit working basis W
//! holds the remaining m basic columns with the key subtracted out. Only
//! W⁻¹ (m × m, column-major) is stored.

use crate::error::{Error, Result};
use crate::network::EdgeId;

const PIVOT_TOL: f64 = 1e-11;
const REFACTOR_EVERY: usize = 64;
const DEGENERATE_LIMIT: usize = 30;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum ColKind {
    Slack(usize),
    Path,
    Outside,
    Artificial,
}

#[derive(Debug, Clone)]
pub(crate) struct Column {
    pub kind: ColKind,
    pub set: usize,
    pub edges: Vec<EdgeId>,
    pub cost: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Status {
    Nonbasic,
    Key,
    Pos(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Outcome {
    Optimal,
    IterationLimit,
}

#[derive(Debug, Clone)]
pub(crate) struct Master {
    m: usize,
    rhs: Vec<f64>,
    demand: Vec<f64>,
    pub cols: Vec<Column>,
    status: Vec<Status>,
    key: Vec<usize>,
    pos: Vec<usize>,
    winv: Vec<f64>,
    x: Vec<f64>,
    key_val: Vec<f64>,
    pi: Vec<f64>,
    mu: Vec<f64>,
    since_refactor: usize,
    pub iterations: usize,
    rates: Vec<f64>,
    marked: Vec<bool>,
    /// Where the next partial-pricing pass starts.
    price_from: usize,
    /// cap minus the load of every key column at its full demand.
    base: Vec<f64>,
    /// Sets whose key value differs from their demand.
    split_sets: Vec<usize>,
}

const NO_SET: usize = usize::MAX;

impl Master {
    pub fn new(capacities: Vec<f64>) -> Self {
        let m = capacities.len();
        let mut winv = vec![0.0; m * m];
        for i in 0..m {
            winv[i * m + i] = 1.0;
        }
        let cols = (0..m)
            .map(|e| Column { kind: ColKind::Slack(e), set: NO_SET, edges: vec![e], cost: 0.0 })
            .collect();
        Master {
            m,
            rhs: capacities.clone(),
            demand: Vec::new(),
            cols,
            status: (0..m).map(Status::Pos).collect(),
            key: Vec::new(),
            pos: (0..m).collect(),
            winv,
            x: vec![0.0; m],
            key_val: Vec::new(),
            pi: vec![0.0; m],
            mu: Vec::new(),
            since_refactor: 0,
            iterations: 0,
            rates: Vec::new(),
            marked: Vec::new(),
            price_from: 0,
            base: capacities,
            split_sets: Vec::new(),
        }
    }

    /// Adds a convexity set whose key column starts basic. The caller keeps
    /// the starting basis feasible (slacks stay nonnegative).
    pub fn add_set(&mut self, demand: f64, mut key: Column) -> usize {
        let k = self.demand.len();
        key.set = k;
        self.demand.push(demand);
        for &e in &key.edges {
            self.base[e] -= demand;
        }
        self.key.push(self.cols.len());
        self.status.push(Status::Key);
        self.cols.push(key);
        self.key_val.push(demand);
        self.mu.push(0.0);
        self.rates.push(0.0);
        self.marked.push(false);
        k
    }

    pub fn add_column(&mut self, col: Column) -> usize {
        debug_assert!(col.set < self.demand.len());
        self.cols.push(col);
        self.status.push(Status::Nonbasic);
        self.cols.len() - 1
    }

    pub fn set_cost(&mut self, j: usize, cost: f64) {
        self.cols[j].cost = cost;
    }

    pub fn pi(&self) -> &[f64] {
        &self.pi
    }

    pub fn mu(&self) -> &[f64] {
        &self.mu
    }

    pub fn value(&self, j: usize) -> f64 {
        match self.status[j] {
            Status::Nonbasic => 0.0,
            Status::Key => self.key_val[self.cols[j].set],
            Status::Pos(p) => self.x[p],
        }
    }

    pub fn objective(&self) -> f64 {
        let mut z = 0.0;
        for p in 0..self.m {
            z += self.cols[self.pos[p]].cost * self.x[p];
        }
        for (k, &j) in self.key.iter().enumerate() {
            z += self.cols[j].cost * self.key_val[k];
        }
        z
    }

    fn set_of(&self, j: usize) -> Option<usize> {
        let s = self.cols[j].set;
        (s != NO_SET).then_some(s)
    }

    /// Column j with its set's key subtracted, as a dense m-vector.
    fn transformed(&self, j: usize, out: &mut [f64]) {
        out.iter_mut().for_each(|v| *v = 0.0);
        let col = &self.cols[j];
        if let ColKind::Slack(e) = col.kind {
            out[e] = 1.0;
            return;
        }
        for &e in &col.edges {
            out[e] += 1.0;
        }
        let key = self.key[col.set];
        if key != j {
            for &e in &self.cols[key].edges {
                out[e] -= 1.0;
            }
        }
    }

    /// out = W⁻¹ v.
    fn solve_w(&self, v: &[f64], out: &mut [f64]) {
        let m = self.m;
        out.iter_mut().for_each(|o| *o = 0.0);
        for (r, &vr) in v.iter().enumerate() {
            if vr != 0.0 {
                let col = &self.winv[r * m..(r + 1) * m];
                for (o, &c) in out.iter_mut().zip(col) {
                    *o += vr * c;
                }
            }
        }
    }

    /// Recomputes primal values and duals from the current factorization.
    pub fn refresh(&mut self) {
        self.base.copy_from_slice(&self.rhs);
        for (k, &j) in self.key.iter().enumerate() {
            let d = self.demand[k];
            for &e in &self.cols[j].edges {
                self.base[e] -= d;
            }
        }
        self.key_val.copy_from_slice(&self.demand);
        self.split_sets.clear();
        self.update();
        self.refresh_mu();
    }

    fn refresh_mu(&mut self) {
        for k in 0..self.key.len() {
            self.mu[k] = self.key_mu(k);
        }
    }

    /// Primal values and π after a pivot; work proportional to the basis
    /// size rather than the number of sets. μ is left stale.
    fn update(&mut self) {
        let m = self.m;
        let mut x = std::mem::take(&mut self.x);
        self.solve_w(&self.base, &mut x);
        self.x = x;
        for k in self.split_sets.drain(..) {
            self.key_val[k] = self.demand[k];
        }
        for p in 0..m {
            if let Some(k) = self.set_of(self.pos[p]) {
                if self.key_val[k] == self.demand[k] {
                    self.split_sets.push(k);
                }
                self.key_val[k] -= self.x[p];
            }
        }
        let cbar: Vec<f64> = (0..m)
            .map(|p| {
                let j = self.pos[p];
                match self.set_of(j) {
                    Some(k) => self.cols[j].cost - self.cols[self.key[k]].cost,
                    None => 0.0,
                }
            })
            .collect();
        for r in 0..m {
            let col = &self.winv[r * m..(r + 1) * m];
            self.pi[r] = cbar.iter().zip(col).map(|(a, b)| a * b).sum();
        }
    }

    fn key_mu(&self, k: usize) -> f64 {
        let col = &self.cols[self.key[k]];
        col.cost - col.edges.iter().map(|&e| self.pi[e]).sum::<f64>()
    }

    /// Replaces the key of set `k`, keeping `base` in step.
    fn set_key(&mut self, k: usize, j: usize) {
        let d = self.demand[k];
        for &e in &self.cols[self.key[k]].edges {
            self.base[e] += d;
        }
        for &e in &self.cols[j].edges {
            self.base[e] -= d;
        }
        self.key[k] = j;
    }

    /// Reduced cost, with μ taken from the current π, and the magnitude of the terms it was summed from. An
    /// artificial in the basis puts big-M sized values into π and μ, so
    /// "negative" has to be judged relative to that magnitude.
    fn priced(&self, j: usize) -> (f64, f64) {
        let col = &self.cols[j];
        match col.kind {
            ColKind::Slack(e) => (-self.pi[e], 1.0 + self.pi[e].abs()),
            _ => {
                let key = &self.cols[self.key[col.set]];
                let (mut d, mut scale) = (col.cost - key.cost, 1.0 + col.cost.abs() + key.cost.abs());
                for &e in &col.edges {
                    d -= self.pi[e];
                    scale += self.pi[e].abs();
                }
                for &e in &key.edges {
                    d += self.pi[e];
                    scale += self.pi[e].abs();
                }
                (d, scale)
            }
        }
    }

    fn improving(&self, j: usize, rc_tol: f64) -> Option<f64> {
        let (d, scale) = self.priced(j);
        (d < -rc_tol * scale).then_some(d)
    }

    /// Rebuilds W⁻¹ from scratch by Gauss-Jordan elimination.
    pub fn refactor(&mut self) -> Result<()> {
        let m = self.m;
        // Row-major augmented [W | I].
        let mut a = vec![0.0; m * 2 * m];
        let mut col = vec![0.0; m];
        for p in 0..m {
            self.transformed(self.pos[p], &mut col);
            for i in 0..m {
                a[i * 2 * m + p] = col[i];
            }
            a[p * 2 * m + m + p] = 1.0;
        }
        let w = 2 * m;
        for c in 0..m {
            let piv = (c..m)
                .max_by(|&i, &j| a[i * w + c].abs().total_cmp(&a[j * w + c].abs()))
                .unwrap();
            if a[piv * w + c].abs() < 1e-12 {
                return Err(Error::Infeasible("singular working basis".into()));
            }
            if piv != c {
                for k in 0..w {
                    a.swap(piv * w + k, c * w + k);
                }
            }
            let d = a[c * w + c];
            for k in 0..w {
                a[c * w + k] /= d;
            }
            for i in 0..m {
                if i != c {
                    let f = a[i * w + c];
                    if f != 0.0 {
                        for k in 0..w {
                            a[i * w + k] -= f * a[c * w + k];
                        }
                    }
                }
            }
        }
        for i in 0..m {
            for r in 0..m {
                self.winv[r * m + i] = a[i * w + m + r];
            }
        }
        self.since_refactor = 0;
        Ok(())
    }

    /// Row operation W⁻¹ ← E W⁻¹ replacing position p by a column whose
    /// representation is `w`.
    fn eta(&mut self, p: usize, w: &[f64]) {
        let m = self.m;
        let wp = w[p];
        for r in 0..m {
            let col = &mut self.winv[r * m..(r + 1) * m];
            let v = col[p] / wp;
            if v != 0.0 {
                for (i, c) in col.iter_mut().enumerate() {
                    *c -= w[i] * v;
                }
            }
            col[p] = v;
        }
    }

    /// Makes the column at position `p` the key of its set; the old key
    /// takes position `p`.
    fn swap_key(&mut self, p: usize) {
        let m = self.m;
        let j = self.pos[p];
        let k = self.cols[j].set;
        let old = self.key[k];
        let others: Vec<usize> = (0..m).filter(|&i| i != p && self.set_of(self.pos[i]) == Some(k)).collect();
        for r in 0..m {
            let col = &mut self.winv[r * m..(r + 1) * m];
            let mut v = -col[p];
            for &i in &others {
                v -= col[i];
            }
            col[p] = v;
        }
        self.set_key(k, j);
        self.status[j] = Status::Key;
        self.pos[p] = old;
        self.status[old] = Status::Pos(p);
    }

    /// Primal simplex from the current (feasible) basis.
    pub fn optimize(&mut self, max_iterations: usize, rc_tol: f64) -> Result<Outcome> {
        let m = self.m;
        let mut abar = vec![0.0; m];
        let mut w = vec![0.0; m];
        let mut degenerate = 0usize;
        let mut bland = false;
        loop {
            let entering = if bland { self.price_first(rc_tol) } else { self.price_partial(rc_tol) };
            let Some((q, _)) = entering else {
                self.refresh_mu();
                return Ok(Outcome::Optimal);
            };
            if self.iterations >= max_iterations {
                self.refresh_mu();
                return Ok(Outcome::IterationLimit);
            }
            self.transformed(q, &mut abar);
            self.solve_w(&abar, &mut w);
            let kq = self.set_of(q);
            let mut touched: Vec<usize> = Vec::new();
            for p in 0..m {
                if let Some(k) = self.set_of(self.pos[p]) {
                    if !self.marked[k] {
                        self.marked[k] = true;
                        touched.push(k);
                    }
                    self.rates[k] += w[p];
                }
            }
            if let Some(k) = kq {
                if !self.marked[k] {
                    self.marked[k] = true;
                    touched.push(k);
                }
                self.rates[k] -= 1.0;
            }

            // (ratio, column index, pivot magnitude, leaving)
            let mut best: Option<(f64, usize, f64, Leave)> = None;
            let mut consider = |ratio: f64, col: usize, mag: f64, leave: Leave| {
                let better = match &best {
                    None => true,
                    Some((r, c, g, _)) => {
                        if ratio < *r - 1e-12 {
                            true
                        } else if ratio <= *r + 1e-12 {
                            if bland { col < *c } else { mag > *g }
                        } else {
                            false
                        }
                    }
                };
                if better {
                    best = Some((ratio, col, mag, leave));
                }
            };
            for p in 0..m {
                if w[p] > PIVOT_TOL {
                    consider(self.x[p].max(0.0) / w[p], self.pos[p], w[p], Leave::Pos(p));
                }
            }
            for &k in &touched {
                let r = self.rates[k];
                if r < -PIVOT_TOL {
                    consider(self.key_val[k].max(0.0) / -r, self.key[k], -r, Leave::Key(k));
                }
            }
            for &k in &touched {
                self.rates[k] = 0.0;
                self.marked[k] = false;
            }
            let Some((theta, _, _, leave)) = best else {
                return Err(Error::Infeasible("unbounded restricted master".into()));
            };

            if theta <= 1e-12 {
                degenerate += 1;
                if degenerate > DEGENERATE_LIMIT {
                    bland = true;
                }
            } else {
                degenerate = 0;
                bland = false;
            }

            match leave {
                Leave::Pos(p) => self.pivot(p, q, &w),
                Leave::Key(k) => {
                    let member = (0..m).find(|&p| self.set_of(self.pos[p]) == Some(k));
                    match member {
                        None => {
                            let old = self.key[k];
                            self.status[old] = Status::Nonbasic;
                            self.set_key(k, q);
                            self.status[q] = Status::Key;
                        }
                        Some(p) => {
                            self.swap_key(p);
                            self.transformed(q, &mut abar);
                            self.solve_w(&abar, &mut w);
                            self.pivot(p, q, &w);
                        }
                    }
                }
            }
            self.iterations += 1;
            self.since_refactor += 1;
            if self.since_refactor >= REFACTOR_EVERY {
                self.refactor()?;
            }
            self.update();
            if self.x.iter().chain(&self.key_val).any(|&v| v < -1e-7) {
                self.refactor()?;
                self.refresh();
            }
        }
    }

    /// Lowest-index improving column (Bland's rule).
    fn price_first(&self, rc_tol: f64) -> Option<(usize, f64)> {
        (0..self.cols.len())
            .filter(|&j| self.status[j] == Status::Nonbasic)
            .find_map(|j| self.improving(j, rc_tol).map(|d| (j, d)))
    }

    /// Most negative reduced cost within the first block, scanning
    /// cyclically, that has an improving column.
    fn price_partial(&mut self, rc_tol: f64) -> Option<(usize, f64)> {
        let n = self.cols.len();
        let block = (n / 8).max(256);
        let mut scanned = 0;
        let mut j = self.price_from % n.max(1);
        while scanned < n {
            let mut best: Option<(usize, f64)> = None;
            for _ in 0..block.min(n - scanned) {
                if self.status[j] == Status::Nonbasic {
                    if let Some(d) = self.improving(j, rc_tol) {
                        if best.is_none_or(|(_, b)| d < b) {
                            best = Some((j, d));
                        }
                    }
                }
                j = (j + 1) % n;
                scanned += 1;
            }
            if best.is_some() {
                self.price_from = j;
                return best;
            }
        }
        None
    }

    fn pivot(&mut self, p: usize, q: usize, w: &[f64]) {
        let old = self.pos[p];
        self.eta(p, w);
        self.pos[p] = q;
        self.status[q] = Status::Pos(p);
        self.status[old] = Status::Nonbasic;
    }
}

#[derive(Debug, Clone, Copy)]
enum Leave {
    Pos(usize),
    Key(usize),
}

#[cfg(test)]
mod tests {
    use super::*;

    fn path(edges: Vec<usize>, cost: f64) -> Column {
        Column { kind: ColKind::Path, set: 0, edges, cost }
    }

    fn outside(cost: f64) -> Column {
        Column { kind: ColKind::Outside, set: 0, edges: vec![], cost }
    }

    #[test]
    fn one_edge_two_users() {
        // Two identical users, one unit of capacity: one routes at cost 1,
        // one takes the outside option at 2.
        let mut mp = Master::new(vec![1.0]);
        let k = mp.add_set(2.0, outside(2.0));
        let mut p = path(vec![0], 1.0);
        p.set = k;
        let j = mp.add_column(p);
        mp.refresh();
        assert_eq!(mp.optimize(100, 1e-9).unwrap(), Outcome::Optimal);
        assert!((mp.objective() - 3.0).abs() < 1e-12);
        assert!((mp.value(j) - 1.0).abs() < 1e-12);
        // τ = 1, μ = 2: dual Σ d μ − τ c = 4 − 1 = 3.
        assert!((-mp.pi()[0] - 1.0).abs() < 1e-12);
        assert!((mp.mu()[0] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn key_swap_path() {
        // Two parallel edges with capacity 1 each, two sets sharing them.
        let mut mp = Master::new(vec![1.0, 1.0]);
        let a = mp.add_set(1.0, outside(10.0));
        let b = mp.add_set(1.0, Column { kind: ColKind::Outside, set: 0, edges: vec![], cost: 10.0 });
        for (set, e, c) in [(a, 0, 1.0), (a, 1, 2.0), (b, 0, 5.0), (b, 1, 9.0)] {
            mp.add_column(Column { kind: ColKind::Path, set, edges: vec![e], cost: c });
        }
        mp.refresh();
        assert_eq!(mp.optimize(100, 1e-9).unwrap(), Outcome::Optimal);
        // Optimum: a on edge 1 (2), b on edge 0 (5) = 7 beats 1 + 9 = 10.
        assert!((mp.objective() - 7.0).abs() < 1e-12);
    }
}
