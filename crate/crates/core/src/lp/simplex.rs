//! Dense bounded-variable revised simplex.
//!
//! Sized for restricted master problems: few rows (one per customer plus the
//! fleet row) and many columns. The basis inverse is kept explicitly and
//! refreshed by Gauss-Jordan refactorization every [`REFACTOR_EVERY`] pivots.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

const REFACTOR_EVERY: usize = 64;
const PIVOT_TOL: f64 = 1e-11;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum RowKind {
    Eq,
    Le,
}

/// A column of the constraint matrix with its cost and upper bound (lower bound is 0).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Column {
    pub cost: f64,
    pub upper: f64,
    pub entries: Vec<(usize, f64)>,
}

impl Column {
    pub fn new(cost: f64, upper: f64, entries: Vec<(usize, f64)>) -> Self {
        Self { cost, upper, entries }
    }
}

/// `min c'z` subject to equality and `<=` rows and `0 <= z <= u`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct LpProblem {
    pub rows: Vec<RowKind>,
    pub rhs: Vec<f64>,
    pub columns: Vec<Column>,
}

impl LpProblem {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_row(&mut self, kind: RowKind, rhs: f64) -> usize {
        self.rows.push(kind);
        self.rhs.push(rhs);
        self.rows.len() - 1
    }

    pub fn add_column(&mut self, column: Column) -> usize {
        self.columns.push(column);
        self.columns.len() - 1
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn n_cols(&self) -> usize {
        self.columns.len()
    }

    fn check(&self) -> Result<(), String> {
        if self.rows.len() != self.rhs.len() {
            return Err("row kinds and right-hand sides differ in length".into());
        }
        if self.rhs.iter().any(|b| !b.is_finite()) {
            return Err("non-finite right-hand side".into());
        }
        for (j, c) in self.columns.iter().enumerate() {
            if !c.cost.is_finite() || c.upper.is_nan() || c.upper < 0.0 {
                return Err(format!("column {j} has invalid cost or bound"));
            }
            if c.entries.iter().any(|&(r, v)| r >= self.rows.len() || !v.is_finite()) {
                return Err(format!("column {j} references a missing row or non-finite coefficient"));
            }
        }
        Ok(())
    }

    /// Renders the problem in CPLEX LP format with fixed-point numbers
    /// carrying 12 significant digits.
    pub fn to_lp_format(&self) -> String {
        let mut out = String::from("Minimize\n obj:");
        for (j, c) in self.columns.iter().enumerate() {
            let _ = write!(out, " {} z{j}", signed(c.cost));
        }
        out.push_str("\nSubject To\n");
        for (r, kind) in self.rows.iter().enumerate() {
            let _ = write!(out, " r{r}:");
            for (j, c) in self.columns.iter().enumerate() {
                for &(row, v) in &c.entries {
                    if row == r {
                        let _ = write!(out, " {} z{j}", signed(v));
                    }
                }
            }
            let op = match kind {
                RowKind::Eq => "=",
                RowKind::Le => "<=",
            };
            let _ = writeln!(out, " {op} {}", fixed12(self.rhs[r]));
        }
        out.push_str("Bounds\n");
        for (j, c) in self.columns.iter().enumerate() {
            if c.upper.is_finite() {
                let _ = writeln!(out, " 0 <= z{j} <= {}", fixed12(c.upper));
            } else {
                let _ = writeln!(out, " z{j} >= 0");
            }
        }
        out.push_str("End\n");
        out
    }
}

fn signed(v: f64) -> String {
    if v < 0.0 {
        format!("- {}", fixed12(-v))
    } else {
        format!("+ {}", fixed12(v))
    }
}

/// Fixed-point decimal with 12 significant digits.
pub fn fixed12(v: f64) -> String {
    if v == 0.0 || !v.is_finite() {
        return format!("{v}");
    }
    let magnitude = v.abs().log10().floor() as i32;
    let decimals = (11 - magnitude).max(0) as usize;
    format!("{v:.decimals$}")
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LpSolution {
    pub status: LpStatus,
    pub primal: Vec<f64>,
    /// Row duals `y = c_B B^-1`; reduced cost of column `j` is `c_j - y'A_j`.
    pub duals: Vec<f64>,
    pub objective: f64,
    pub iterations: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    pub feasibility: f64,
    pub optimality: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            feasibility: 1e-7,
            optimality: 1e-9,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum VarState {
    Basic,
    Lower,
    Upper,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Phase {
    One,
    Two,
}

/// Solves a single problem from scratch.
pub fn solve_lp(prob: &LpProblem) -> LpSolution {
    let mut s = Simplex::new(prob.clone(), Tolerances::default());
    s.solve()
}

/// Simplex state that can be re-solved after columns are appended.
///
/// Internal variables are laid out as `[structural | slacks | artificials]`;
/// appended structural columns are kept in a separate tail so existing indices
/// stay stable.
#[derive(Clone, Debug)]
pub struct Simplex {
    prob: LpProblem,
    tol: Tolerances,
    m: usize,
    /// Internal variable descriptors.
    vars: Vec<Var>,
    state: Vec<VarState>,
    x: Vec<f64>,
    basis: Vec<usize>,
    binv: Vec<f64>,
    /// Maps structural column index to internal variable.
    structural: Vec<usize>,
    artificial_fixed: bool,
    started: bool,
    iterations: usize,
    since_refactor: usize,
}

#[derive(Clone, Debug)]
struct Var {
    cost: f64,
    upper: f64,
    entries: Vec<(usize, f64)>,
    artificial: bool,
}

impl Simplex {
    pub fn new(prob: LpProblem, tol: Tolerances) -> Self {
        let m = prob.n_rows();
        let mut s = Self {
            prob: LpProblem {
                rows: prob.rows.clone(),
                rhs: prob.rhs.clone(),
                columns: Vec::new(),
            },
            tol,
            m,
            vars: Vec::new(),
            state: Vec::new(),
            x: Vec::new(),
            basis: Vec::new(),
            binv: Vec::new(),
            structural: Vec::new(),
            artificial_fixed: false,
            started: false,
            iterations: 0,
            since_refactor: 0,
        };
        for c in prob.columns {
            s.add_column(c);
        }
        s
    }

    pub fn problem(&self) -> &LpProblem {
        &self.prob
    }

    /// Appends a structural column, nonbasic at its lower bound.
    pub fn add_column(&mut self, column: Column) -> usize {
        self.vars.push(Var {
            cost: column.cost,
            upper: column.upper,
            entries: column.entries.clone(),
            artificial: false,
        });
        self.state.push(VarState::Lower);
        self.x.push(0.0);
        self.structural.push(self.vars.len() - 1);
        self.prob.columns.push(column);
        self.prob.columns.len() - 1
    }

    fn start(&mut self) {
        let m = self.m;
        // Slacks for <= rows, artificials for every row.
        let mut basis = vec![usize::MAX; m];
        for r in 0..m {
            if self.prob.rows[r] == RowKind::Le {
                self.vars.push(Var {
                    cost: 0.0,
                    upper: f64::INFINITY,
                    entries: vec![(r, 1.0)],
                    artificial: false,
                });
                self.state.push(VarState::Lower);
                self.x.push(0.0);
                if self.prob.rhs[r] >= 0.0 {
                    basis[r] = self.vars.len() - 1;
                }
            }
        }
        for r in 0..m {
            let b = self.prob.rhs[r];
            let sign = if b < 0.0 { -1.0 } else { 1.0 };
            self.vars.push(Var {
                cost: 0.0,
                upper: f64::INFINITY,
                entries: vec![(r, sign)],
                artificial: true,
            });
            self.state.push(VarState::Lower);
            self.x.push(0.0);
            if basis[r] == usize::MAX {
                basis[r] = self.vars.len() - 1;
            }
        }
        for &v in &basis {
            self.state[v] = VarState::Basic;
        }
        self.basis = basis;
        self.refactor();
        self.started = true;
    }

    fn phase_cost(&self, v: usize, phase: Phase) -> f64 {
        match phase {
            Phase::One => {
                if self.vars[v].artificial {
                    1.0
                } else {
                    0.0
                }
            }
            Phase::Two => self.vars[v].cost,
        }
    }

    fn upper(&self, v: usize) -> f64 {
        if self.vars[v].artificial && self.artificial_fixed {
            0.0
        } else {
            self.vars[v].upper
        }
    }

    /// Recomputes the basis inverse and basic values from scratch.
    fn refactor(&mut self) {
        let m = self.m;
        let mut a = vec![0.0; m * m];
        for (k, &v) in self.basis.iter().enumerate() {
            for &(r, val) in &self.vars[v].entries {
                a[r * m + k] += val;
            }
        }
        let mut inv = vec![0.0; m * m];
        for i in 0..m {
            inv[i * m + i] = 1.0;
        }
        for col in 0..m {
            let piv = (col..m)
                .max_by(|&i, &j| a[i * m + col].abs().total_cmp(&a[j * m + col].abs()))
                .unwrap();
            if a[piv * m + col].abs() < 1e-14 {
                // Singular basis: fall back to a slack/artificial basis.
                self.reset_basis();
                return;
            }
            if piv != col {
                for k in 0..m {
                    a.swap(piv * m + k, col * m + k);
                    inv.swap(piv * m + k, col * m + k);
                }
            }
            let p = a[col * m + col];
            for k in 0..m {
                a[col * m + k] /= p;
                inv[col * m + k] /= p;
            }
            for i in 0..m {
                if i != col {
                    let f = a[i * m + col];
                    if f != 0.0 {
                        for k in 0..m {
                            a[i * m + k] -= f * a[col * m + k];
                            inv[i * m + k] -= f * inv[col * m + k];
                        }
                    }
                }
            }
        }
        self.binv = inv;
        self.recompute_basic_values();
        self.since_refactor = 0;
    }

    fn reset_basis(&mut self) {
        let m = self.m;
        let arts: Vec<usize> = (0..self.vars.len()).filter(|&v| self.vars[v].artificial).collect();
        for v in 0..self.vars.len() {
            if self.state[v] == VarState::Basic {
                self.state[v] = VarState::Lower;
                self.x[v] = 0.0;
            }
        }
        for (r, &v) in arts.iter().enumerate().take(m) {
            self.basis[r] = v;
            self.state[v] = VarState::Basic;
        }
        self.artificial_fixed = false;
        self.refactor();
    }

    fn recompute_basic_values(&mut self) {
        let m = self.m;
        let mut resid = self.prob.rhs.clone();
        for v in 0..self.vars.len() {
            if self.state[v] != VarState::Basic && self.x[v] != 0.0 {
                for &(r, val) in &self.vars[v].entries {
                    resid[r] -= val * self.x[v];
                }
            }
        }
        for k in 0..m {
            let mut s = 0.0;
            for r in 0..m {
                s += self.binv[k * m + r] * resid[r];
            }
            self.x[self.basis[k]] = s;
        }
        // Artificial basics whose sign flipped are re-signed so they stay >= 0.
        for k in 0..m {
            let v = self.basis[k];
            if self.vars[v].artificial && self.x[v] < -self.tol.feasibility && !self.artificial_fixed {
                for e in &mut self.vars[v].entries {
                    e.1 = -e.1;
                }
                self.refactor();
                return;
            }
        }
    }

    fn duals(&self, phase: Phase) -> Vec<f64> {
        let m = self.m;
        let mut y = vec![0.0; m];
        for k in 0..m {
            let c = self.phase_cost(self.basis[k], phase);
            if c != 0.0 {
                for r in 0..m {
                    y[r] += c * self.binv[k * m + r];
                }
            }
        }
        y
    }

    fn reduced_cost(&self, v: usize, y: &[f64], phase: Phase) -> f64 {
        let mut d = self.phase_cost(v, phase);
        for &(r, val) in &self.vars[v].entries {
            d -= y[r] * val;
        }
        d
    }

    fn column_ftran(&self, v: usize) -> Vec<f64> {
        let m = self.m;
        let mut w = vec![0.0; m];
        for &(r, val) in &self.vars[v].entries {
            for k in 0..m {
                w[k] += self.binv[k * m + r] * val;
            }
        }
        w
    }

    fn run(&mut self, phase: Phase) -> LpStatus {
        let m = self.m;
        let n = self.vars.len();
        let degenerate_limit = 10 * (m + n);
        let mut degenerate_run = 0usize;
        loop {
            if self.since_refactor >= REFACTOR_EVERY {
                self.refactor();
            }
            let y = self.duals(phase);
            let bland = degenerate_run >= degenerate_limit;

            // Entering variable.
            let mut entering: Option<(usize, f64)> = None;
            let mut best = 0.0;
            for v in 0..self.vars.len() {
                let st = self.state[v];
                if st == VarState::Basic {
                    continue;
                }
                if phase == Phase::Two && self.vars[v].artificial {
                    continue;
                }
                let upper = self.upper(v);
                if upper <= 0.0 && st == VarState::Lower {
                    continue;
                }
                let d = self.reduced_cost(v, &y, phase);
                let tol = self.tol.optimality * (1.0 + self.phase_cost(v, phase).abs());
                let dir = match st {
                    VarState::Lower if d < -tol => 1.0,
                    VarState::Upper if d > tol => -1.0,
                    _ => continue,
                };
                if bland {
                    entering = Some((v, dir));
                    break;
                }
                if d.abs() > best {
                    best = d.abs();
                    entering = Some((v, dir));
                }
            }
            let Some((q, dir)) = entering else {
                return LpStatus::Optimal;
            };

            let w = self.column_ftran(q);
            // Basic variable k changes by -dir * theta * w[k].
            let mut theta = self.upper(q);
            let mut leave: Option<(usize, VarState)> = None;
            let mut leave_pivot = 0.0;
            for k in 0..m {
                let rate = -dir * w[k];
                if rate.abs() <= PIVOT_TOL {
                    continue;
                }
                let v = self.basis[k];
                let (limit, bound) = if rate < 0.0 {
                    ((self.x[v].max(0.0)) / -rate, VarState::Lower)
                } else {
                    let u = self.upper(v);
                    if !u.is_finite() {
                        continue;
                    }
                    (((u - self.x[v]).max(0.0)) / rate, VarState::Upper)
                };
                let better = limit < theta - 1e-12
                    || (limit <= theta + 1e-12
                        && leave.is_some()
                        && if bland {
                            v < self.basis[leave.unwrap().0]
                        } else {
                            w[k].abs() > leave_pivot
                        });
                if better || (leave.is_none() && limit <= theta) {
                    theta = limit;
                    leave = Some((k, bound));
                    leave_pivot = w[k].abs();
                }
            }
            if !theta.is_finite() {
                return LpStatus::Unbounded;
            }
            self.iterations += 1;
            if theta <= 1e-12 {
                degenerate_run += 1;
            } else {
                degenerate_run = 0;
            }

            for k in 0..m {
                let v = self.basis[k];
                self.x[v] -= dir * theta * w[k];
            }
            self.x[q] += dir * theta;

            match leave {
                None => {
                    // Bound flip.
                    self.state[q] = if dir > 0.0 { VarState::Upper } else { VarState::Lower };
                    self.x[q] = if dir > 0.0 { self.upper(q) } else { 0.0 };
                }
                Some((k, bound)) => {
                    let out = self.basis[k];
                    self.state[out] = bound;
                    self.x[out] = if bound == VarState::Lower { 0.0 } else { self.upper(out) };
                    self.state[q] = VarState::Basic;
                    self.basis[k] = q;
                    // Eta update of the explicit inverse.
                    let p = w[k];
                    for c in 0..m {
                        self.binv[k * m + c] /= p;
                    }
                    for i in 0..m {
                        if i != k && w[i] != 0.0 {
                            let f = w[i];
                            for c in 0..m {
                                self.binv[i * m + c] -= f * self.binv[k * m + c];
                            }
                        }
                    }
                    self.since_refactor += 1;
                }
            }
        }
    }

    /// Solves (or re-solves after appended columns) and returns the solution.
    pub fn solve(&mut self) -> LpSolution {
        if let Err(msg) = self.prob.check() {
            log::warn!("malformed LP: {msg}");
            return self.result(LpStatus::Infeasible, Phase::Two);
        }
        if !self.started {
            self.start();
        }
        if !self.artificial_fixed {
            let status = self.run(Phase::One);
            debug_assert_ne!(status, LpStatus::Unbounded);
            self.refactor();
            let infeas: f64 = (0..self.vars.len())
                .filter(|&v| self.vars[v].artificial)
                .map(|v| self.x[v].max(0.0))
                .sum();
            let scale = 1.0 + self.prob.rhs.iter().map(|b| b.abs()).fold(0.0, f64::max);
            if infeas > self.tol.feasibility * scale {
                return self.result(LpStatus::Infeasible, Phase::One);
            }
            self.artificial_fixed = true;
            for v in 0..self.vars.len() {
                if self.vars[v].artificial && self.state[v] != VarState::Basic {
                    self.x[v] = 0.0;
                    self.state[v] = VarState::Lower;
                }
            }
        }
        let status = self.run(Phase::Two);
        self.refactor();
        self.result(status, Phase::Two)
    }

    fn result(&self, status: LpStatus, phase: Phase) -> LpSolution {
        let primal: Vec<f64> = self.structural.iter().map(|&v| self.x.get(v).copied().unwrap_or(0.0)).collect();
        let objective = self
            .prob
            .columns
            .iter()
            .zip(&primal)
            .map(|(c, z)| c.cost * z)
            .sum();
        let duals = if self.basis.len() == self.m && status == LpStatus::Optimal {
            self.duals(phase)
        } else {
            vec![0.0; self.m]
        };
        LpSolution {
            status,
            primal,
            duals,
            objective,
            iterations: self.iterations,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_equality() {
        // min z s.t. z = 1, 0 <= z <= 1
        let mut p = LpProblem::new();
        p.add_row(RowKind::Eq, 1.0);
        p.add_column(Column::new(1.0, 1.0, vec![(0, 1.0)]));
        let s = solve_lp(&p);
        assert_eq!(s.status, LpStatus::Optimal);
        assert!((s.primal[0] - 1.0).abs() < 1e-12);
        assert!((s.duals[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn two_variable_hand_solution() {
        // min -x - 2y s.t. x + y <= 4, x + 3y <= 6, x <= 3
        // vertices: (3,1) -> -5, (0,2) -> -4, (3,0) -> -3; optimum (3,1)
        // duals of the two rows: y1 = -1/2, y2 = -1/2 (x at its upper bound, y basic)
        let mut p = LpProblem::new();
        p.add_row(RowKind::Le, 4.0);
        p.add_row(RowKind::Le, 6.0);
        p.add_column(Column::new(-1.0, 3.0, vec![(0, 1.0), (1, 1.0)]));
        p.add_column(Column::new(-2.0, f64::INFINITY, vec![(0, 1.0), (1, 3.0)]));
        let s = solve_lp(&p);
        assert_eq!(s.status, LpStatus::Optimal);
        assert!((s.objective + 5.0).abs() < 1e-9);
        assert!((s.primal[0] - 3.0).abs() < 1e-9);
        assert!((s.primal[1] - 1.0).abs() < 1e-9);
        // Column y is basic: its reduced cost must be zero.
        let d_y = -2.0 - (s.duals[0] + 3.0 * s.duals[1]);
        assert!(d_y.abs() < 1e-9);
        assert!(s.duals.iter().all(|&y| y <= 1e-12));
    }

    #[test]
    fn contradictory_equalities_are_infeasible() {
        let mut p = LpProblem::new();
        p.add_row(RowKind::Eq, 1.0);
        p.add_row(RowKind::Eq, 2.0);
        p.add_column(Column::new(1.0, f64::INFINITY, vec![(0, 1.0), (1, 1.0)]));
        assert_eq!(solve_lp(&p).status, LpStatus::Infeasible);
    }

    #[test]
    fn unbounded_is_reported() {
        let mut p = LpProblem::new();
        p.add_row(RowKind::Le, 1.0);
        p.add_column(Column::new(-1.0, f64::INFINITY, vec![(0, 1.0)]));
        p.add_column(Column::new(-1.0, f64::INFINITY, vec![(0, -1.0)]));
        assert_eq!(solve_lp(&p).status, LpStatus::Unbounded);
    }

    #[test]
    fn negative_rhs_rows() {
        // min x s.t. -x <= -2 (x >= 2)
        let mut p = LpProblem::new();
        p.add_row(RowKind::Le, -2.0);
        p.add_column(Column::new(1.0, f64::INFINITY, vec![(0, -1.0)]));
        let s = solve_lp(&p);
        assert_eq!(s.status, LpStatus::Optimal);
        assert!((s.primal[0] - 2.0).abs() < 1e-9);
        assert!((s.duals[0] + 1.0).abs() < 1e-9);
    }

    #[test]
    fn warm_start_after_adding_columns() {
        let mut p = LpProblem::new();
        p.add_row(RowKind::Eq, 1.0);
        p.add_row(RowKind::Eq, 1.0);
        p.add_row(RowKind::Le, 2.0);
        p.add_column(Column::new(10.0, 1.0, vec![(0, 1.0), (2, 1.0)]));
        p.add_column(Column::new(10.0, 1.0, vec![(1, 1.0), (2, 1.0)]));
        let mut s = Simplex::new(p, Tolerances::default());
        let first = s.solve();
        assert!((first.objective - 20.0).abs() < 1e-9);
        // Reduced cost of a combined column under the current duals.
        let d = 12.0 - (first.duals[0] + first.duals[1] + first.duals[2]);
        assert!(d < 0.0);
        s.add_column(Column::new(12.0, 1.0, vec![(0, 1.0), (1, 1.0), (2, 1.0)]));
        let second = s.solve();
        assert_eq!(second.status, LpStatus::Optimal);
        assert!((second.objective - 12.0).abs() < 1e-9);
        assert_eq!(second.primal.len(), 3);
    }

    #[test]
    fn lp_dump_uses_fixed_point() {
        let mut p = LpProblem::new();
        p.add_row(RowKind::Eq, 1.0);
        p.add_column(Column::new(1234.5678901234567, 1.0, vec![(0, 1.0)]));
        let text = p.to_lp_format();
        assert!(text.contains("+ 1234.56789012 z0"), "{text}");
        assert!(text.contains("r0: + 1.00000000000 z0 = 1.00000000000"), "{text}");
        assert_eq!(fixed12(0.000123456789012345), "0.000123456789012");
    }
}
