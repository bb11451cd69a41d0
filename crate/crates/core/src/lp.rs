//! Dense linear programming kernel.
//!
//! Solves small dense problems of the form
//!
//! ```text
//!     maximize   objective · y
//!     subject to rows · y = rhs
//!                lower <= y <= upper   (infinite bounds allowed)
//! ```
//!
//! with a two-phase revised simplex over bounded variables. The limit-analysis
//! subproblems this kernel hosts have a handful of equality rows and a few
//! dozen variables, so everything is kept dense with an explicit basis
//! inverse. Degeneracy is common in these problems; the pricing rule switches
//! to Bland's rule after a stall so cycling cannot occur.

use thiserror::Error;

/// Linear program in computational form. All entries must be finite except
/// the bounds, which may be `-inf`/`+inf`.
#[derive(Debug, Clone)]
pub struct LpProblem {
    /// Objective coefficients; the solver maximizes.
    pub objective: Vec<f64>,
    /// Dense equality rows.
    pub rows: Vec<Vec<f64>>,
    /// Right-hand side of the equality rows.
    pub rhs: Vec<f64>,
    /// Per-variable lower bounds.
    pub lower: Vec<f64>,
    /// Per-variable upper bounds.
    pub upper: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

/// Result of an LP solve. `primal`, `duals` and `reduced_costs` are only
/// meaningful when `status == Optimal`; the objective is `NaN` for an
/// infeasible problem and `+inf` for an unbounded one.
#[derive(Debug, Clone)]
pub struct LpSolution {
    pub status: LpStatus,
    pub primal: Vec<f64>,
    pub objective: f64,
    /// Dual multipliers of the equality rows.
    pub duals: Vec<f64>,
    /// Reduced costs `objective - rowsᵀ · duals`, zero on basic variables.
    pub reduced_costs: Vec<f64>,
}

#[derive(Debug, Error)]
pub enum LpError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("non-finite problem data: {0}")]
    NotFinite(String),
    #[error("numerical breakdown: {0}")]
    Numerical(String),
}

impl LpProblem {
    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    fn validate(&self) -> Result<(), LpError> {
        let n = self.num_vars();
        let m = self.num_rows();
        if self.rhs.len() != m {
            return Err(LpError::Dimension(format!(
                "{} rows but {} rhs entries",
                m,
                self.rhs.len()
            )));
        }
        if self.lower.len() != n || self.upper.len() != n {
            return Err(LpError::Dimension(format!(
                "{} variables but bounds of length {}/{}",
                n,
                self.lower.len(),
                self.upper.len()
            )));
        }
        for (i, row) in self.rows.iter().enumerate() {
            if row.len() != n {
                return Err(LpError::Dimension(format!(
                    "row {} has {} entries, expected {}",
                    i,
                    row.len(),
                    n
                )));
            }
            if row.iter().any(|v| !v.is_finite()) {
                return Err(LpError::NotFinite(format!("row {i}")));
            }
        }
        if self.objective.iter().any(|v| !v.is_finite()) {
            return Err(LpError::NotFinite("objective".into()));
        }
        if self.rhs.iter().any(|v| !v.is_finite()) {
            return Err(LpError::NotFinite("rhs".into()));
        }
        for j in 0..n {
            if self.lower[j].is_nan() || self.upper[j].is_nan() {
                return Err(LpError::NotFinite(format!("bounds of variable {j}")));
            }
            if self.lower[j] > self.upper[j] {
                return Err(LpError::Dimension(format!(
                    "variable {j} has lower bound above upper bound"
                )));
            }
        }
        Ok(())
    }

    /// Plain-text dump for offline inspection. One line per objective,
    /// constraint row (`a_0 a_1 ... = rhs`) and bound pair (`lower upper`).
    pub fn dump(&self) -> String {
        use std::fmt::Write;
        let mut out = String::new();
        writeln!(out, "maximize {:?}", self.objective).unwrap();
        for (row, b) in self.rows.iter().zip(&self.rhs) {
            writeln!(out, "row {row:?} = {b}").unwrap();
        }
        for (l, u) in self.lower.iter().zip(&self.upper) {
            writeln!(out, "bound {l} {u}").unwrap();
        }
        out
    }
}

/// Solve `p` to optimality or a definite infeasible/unbounded verdict.
///
/// Deterministic: identical input produces the identical pivot sequence and
/// hence identical output. A solve whose fast path cannot certify its answer
/// is retried once under Bland's rule (slower, drift-free pivoting); if that
/// also fails to certify, the error is reported rather than a wrong
/// `Optimal`.
pub fn solve_lp(p: &LpProblem) -> Result<LpSolution, LpError> {
    p.validate()?;
    match Simplex::new(p, false).run() {
        Err(LpError::Numerical(_)) => Simplex::new(p, true).run(),
        other => other,
    }
}

/// [`solve_lp`] under Bland's rule from the first pivot. Slower but walks a
/// different, still deterministic, path to an optimal vertex; used where the
/// returned vertex itself matters.
pub fn solve_lp_bland(p: &LpProblem) -> Result<LpSolution, LpError> {
    p.validate()?;
    Simplex::new(p, true).run()
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum VarState {
    Basic(usize),
    AtLower,
    AtUpper,
    /// Nonbasic free variable parked at zero.
    Free,
}

struct Simplex {
    /// Structural variable count.
    n: usize,
    /// Total variable count including artificials.
    total: usize,
    /// Equality row count.
    m: usize,
    /// Column-major constraint matrix, `total` columns of length `m`.
    cols: Vec<Vec<f64>>,
    rhs: Vec<f64>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    objective: Vec<f64>,
    /// Phase-1 objective: -1 on artificials.
    phase1_objective: Vec<f64>,
    /// Row-major basis inverse.
    binv: Vec<Vec<f64>>,
    basis: Vec<usize>,
    state: Vec<VarState>,
    values: Vec<f64>,
    feas_tol: f64,
    opt_tol: f64,
    pivots_since_refactor: usize,
    degenerate_streak: usize,
    bland: bool,
    force_bland: bool,
}

const STALL_LIMIT: usize = 300;
const REFACTOR_EVERY: usize = 100;
const PIVOT_TOL: f64 = 1e-10;

impl Simplex {
    fn new(p: &LpProblem, bland: bool) -> Self {
        let n = p.num_vars();
        let m = p.num_rows();
        let total = n + m;

        let mut cols = vec![vec![0.0; m]; total];
        for (i, row) in p.rows.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                cols[j][i] = v;
            }
        }

        let mut lower = p.lower.clone();
        let mut upper = p.upper.clone();
        lower.extend(std::iter::repeat(0.0).take(m));
        upper.extend(std::iter::repeat(f64::INFINITY).take(m));

        let mut objective = p.objective.clone();
        objective.extend(std::iter::repeat(0.0).take(m));
        let mut phase1_objective = vec![0.0; total];
        for j in n..total {
            phase1_objective[j] = -1.0;
        }

        let b_scale = p.rhs.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        let c_scale = p.objective.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        let feas_tol = 1e-9 * (1.0 + b_scale);
        let opt_tol = 1e-9 * (1.0 + c_scale);

        // Park structural variables at a finite bound, free variables at zero.
        let mut state = Vec::with_capacity(total);
        let mut values = vec![0.0; total];
        for j in 0..n {
            if lower[j].is_finite() {
                state.push(VarState::AtLower);
                values[j] = lower[j];
            } else if upper[j].is_finite() {
                state.push(VarState::AtUpper);
                values[j] = upper[j];
            } else {
                state.push(VarState::Free);
                values[j] = 0.0;
            }
        }

        // One artificial per row, signed so it starts nonnegative.
        let mut residual = p.rhs.clone();
        for j in 0..n {
            if values[j] != 0.0 {
                for i in 0..m {
                    residual[i] -= cols[j][i] * values[j];
                }
            }
        }
        let mut basis = Vec::with_capacity(m);
        for i in 0..m {
            let sign = if residual[i] < 0.0 { -1.0 } else { 1.0 };
            cols[n + i][i] = sign;
            values[n + i] = residual[i].abs();
            state.push(VarState::Basic(i));
            basis.push(n + i);
        }

        let mut binv = vec![vec![0.0; m]; m];
        for (i, row) in binv.iter_mut().enumerate() {
            // Basis columns are signed unit vectors, so the inverse is too.
            row[i] = if residual[i] < 0.0 { -1.0 } else { 1.0 };
        }

        Simplex {
            n,
            total,
            m,
            cols,
            rhs: p.rhs.clone(),
            lower,
            upper,
            objective,
            phase1_objective,
            binv,
            basis,
            state,
            values,
            feas_tol,
            opt_tol,
            pivots_since_refactor: 0,
            degenerate_streak: 0,
            bland,
            force_bland: bland,
        }
    }

    fn run(&mut self) -> Result<LpSolution, LpError> {
        // Phase 1: drive the artificial sum to zero.
        self.iterate(true)?;
        let infeasibility: f64 = (self.n..self.total).map(|j| self.values[j]).sum();
        if infeasibility > self.feas_tol.max(1e-7 * (1.0 + infeasibility.abs())) {
            return Ok(LpSolution {
                status: LpStatus::Infeasible,
                primal: Vec::new(),
                objective: f64::NAN,
                duals: Vec::new(),
                reduced_costs: Vec::new(),
            });
        }
        self.expel_artificials()?;
        for j in self.n..self.total {
            // Pin every artificial at zero so it can never re-enter.
            self.lower[j] = 0.0;
            self.upper[j] = 0.0;
        }

        // Phase 2: optimize the true objective.
        self.bland = self.force_bland;
        self.degenerate_streak = 0;
        let unbounded = !self.iterate(false)?;
        if unbounded {
            return Ok(LpSolution {
                status: LpStatus::Unbounded,
                primal: self.values[..self.n].to_vec(),
                objective: f64::INFINITY,
                duals: Vec::new(),
                reduced_costs: Vec::new(),
            });
        }

        self.certify()
    }

    /// Runs simplex iterations for one phase. Returns `Ok(false)` when the
    /// phase detected an unbounded ray (possible in phase 2 only).
    fn iterate(&mut self, phase1: bool) -> Result<bool, LpError> {
        let max_iters = 2000 * (self.total + self.m) + 10_000;
        for _ in 0..max_iters {
            let duals = self.basis_duals(phase1);
            let Some((entering, direction)) = self.choose_entering(&duals, phase1) else {
                return Ok(true);
            };
            let w = self.ftran(entering);
            match self.ratio_test(entering, direction, &w) {
                RatioOutcome::Unbounded => {
                    if phase1 {
                        return Err(LpError::Numerical(
                            "phase-1 objective reported unbounded".into(),
                        ));
                    }
                    return Ok(false);
                }
                RatioOutcome::BoundFlip(t) => self.apply_bound_flip(entering, direction, t, &w),
                RatioOutcome::Pivot { row, step } => {
                    self.apply_pivot(entering, direction, row, step, &w)?;
                }
            }
        }
        Err(LpError::Numerical("iteration limit exceeded".into()))
    }

    /// Dual vector of the current basis under the phase objective.
    fn basis_duals(&self, phase1: bool) -> Vec<f64> {
        let costs = if phase1 {
            &self.phase1_objective
        } else {
            &self.objective
        };
        let mut y = vec![0.0; self.m];
        for (i, &bj) in self.basis.iter().enumerate() {
            let cb = costs[bj];
            if cb != 0.0 {
                for k in 0..self.m {
                    y[k] += cb * self.binv[i][k];
                }
            }
        }
        y
    }

    fn reduced_cost(&self, j: usize, duals: &[f64], phase1: bool) -> f64 {
        let costs = if phase1 {
            &self.phase1_objective
        } else {
            &self.objective
        };
        let mut d = costs[j];
        for i in 0..self.m {
            let a = self.cols[j][i];
            if a != 0.0 {
                d -= duals[i] * a;
            }
        }
        d
    }

    /// Picks the entering variable and its movement direction (+1 / -1).
    /// Dantzig pricing normally, Bland's rule once a stall is detected.
    fn choose_entering(&self, duals: &[f64], phase1: bool) -> Option<(usize, f64)> {
        let mut best: Option<(usize, f64, f64)> = None;
        for j in 0..self.total {
            if matches!(self.state[j], VarState::Basic(_)) || self.lower[j] == self.upper[j] {
                continue;
            }
            let d = self.reduced_cost(j, duals, phase1);
            let dir = match self.state[j] {
                VarState::AtLower if d > self.opt_tol => 1.0,
                VarState::AtUpper if d < -self.opt_tol => -1.0,
                VarState::Free if d.abs() > self.opt_tol => d.signum(),
                _ => continue,
            };
            if self.bland {
                return Some((j, dir));
            }
            let score = d.abs();
            match best {
                Some((_, _, s)) if s >= score => {}
                _ => best = Some((j, dir, score)),
            }
        }
        best.map(|(j, dir, _)| (j, dir))
    }

    /// `B^{-1} A_j` for the entering column.
    fn ftran(&self, j: usize) -> Vec<f64> {
        let col = &self.cols[j];
        let mut w = vec![0.0; self.m];
        for (i, wi) in w.iter_mut().enumerate() {
            let mut acc = 0.0;
            for k in 0..self.m {
                let a = col[k];
                if a != 0.0 {
                    acc += self.binv[i][k] * a;
                }
            }
            *wi = acc;
        }
        w
    }

    fn ratio_test(&self, entering: usize, direction: f64, w: &[f64]) -> RatioOutcome {
        // Step limit from the entering variable's own range.
        let range = self.upper[entering] - self.lower[entering];
        let flip_limit = if range.is_finite() { range } else { f64::INFINITY };

        // First pass: the tightest step limit over the basic variables.
        let mut min_limit = flip_limit;
        for (i, &wi) in w.iter().enumerate() {
            let delta = direction * wi;
            if delta.abs() <= PIVOT_TOL {
                continue;
            }
            let bj = self.basis[i];
            let xb = self.values[bj];
            // The basic variable moves by -t * delta.
            let limit = if delta > 0.0 {
                if self.lower[bj].is_finite() {
                    (xb - self.lower[bj]) / delta
                } else {
                    continue;
                }
            } else if self.upper[bj].is_finite() {
                (xb - self.upper[bj]) / delta
            } else {
                continue;
            };
            min_limit = min_limit.min(limit.max(0.0));
        }
        if min_limit.is_infinite() {
            return RatioOutcome::Unbounded;
        }

        // Second pass: among rows whose limit ties the minimum (within a
        // small slack), pick the largest pivot magnitude for stability.
        // Bland mode picks the lowest basic variable index instead.
        let slack = if self.force_bland {
            1e-12
        } else {
            1e-9 + 1e-7 * min_limit.abs()
        };
        let mut best: Option<(usize, f64, f64)> = None; // (row, |pivot|, limit)
        for (i, &wi) in w.iter().enumerate() {
            let delta = direction * wi;
            if delta.abs() <= PIVOT_TOL {
                continue;
            }
            let bj = self.basis[i];
            let xb = self.values[bj];
            let limit = if delta > 0.0 {
                if self.lower[bj].is_finite() {
                    (xb - self.lower[bj]) / delta
                } else {
                    continue;
                }
            } else if self.upper[bj].is_finite() {
                (xb - self.upper[bj]) / delta
            } else {
                continue;
            };
            let limit = limit.max(0.0);
            if limit > min_limit + slack {
                continue;
            }
            let replace = match best {
                None => true,
                Some((bi, bp, _)) => {
                    if self.bland {
                        self.basis[i] < self.basis[bi]
                    } else {
                        delta.abs() > bp
                    }
                }
            };
            if replace {
                best = Some((i, delta.abs(), limit));
            }
        }

        match best {
            // Step to the blocking row's own limit; a tied row with a larger
            // pivot may carry a slightly larger limit, which stays admissible
            // within the slack.
            Some((row, _, limit)) => RatioOutcome::Pivot {
                row,
                step: limit.min(min_limit.max(0.0)).max(0.0),
            },
            None => RatioOutcome::BoundFlip(flip_limit),
        }
    }

    fn apply_bound_flip(&mut self, entering: usize, direction: f64, t: f64, w: &[f64]) {
        self.shift_basics(direction, t, w);
        self.values[entering] += direction * t;
        self.state[entering] = if direction > 0.0 {
            VarState::AtUpper
        } else {
            VarState::AtLower
        };
        self.note_progress(t);
    }

    fn apply_pivot(
        &mut self,
        entering: usize,
        direction: f64,
        row: usize,
        step: f64,
        w: &[f64],
    ) -> Result<(), LpError> {
        self.shift_basics(direction, step, w);
        self.values[entering] += direction * step;

        let leaving = self.basis[row];
        let delta = direction * w[row];
        // The leaving variable lands on the bound that blocked the step.
        self.state[leaving] = if delta > 0.0 {
            self.values[leaving] = self.lower[leaving];
            VarState::AtLower
        } else {
            self.values[leaving] = self.upper[leaving];
            VarState::AtUpper
        };

        self.basis[row] = entering;
        self.state[entering] = VarState::Basic(row);

        // Elementary row update of the basis inverse.
        let pivot = w[row];
        if pivot.abs() < PIVOT_TOL {
            return Err(LpError::Numerical("vanishing pivot element".into()));
        }
        for k in 0..self.m {
            self.binv[row][k] /= pivot;
        }
        for i in 0..self.m {
            if i == row {
                continue;
            }
            let f = w[i];
            if f != 0.0 {
                for k in 0..self.m {
                    self.binv[i][k] -= f * self.binv[row][k];
                }
            }
        }

        self.note_progress(step);
        self.pivots_since_refactor += 1;
        if self.pivots_since_refactor >= REFACTOR_EVERY {
            self.refactor()?;
        }
        Ok(())
    }

    fn shift_basics(&mut self, direction: f64, t: f64, w: &[f64]) {
        if t == 0.0 {
            return;
        }
        for (i, &wi) in w.iter().enumerate() {
            let bj = self.basis[i];
            self.values[bj] -= t * direction * wi;
        }
    }

    fn note_progress(&mut self, step: f64) {
        if step <= 1e-12 {
            self.degenerate_streak += 1;
            if self.degenerate_streak >= STALL_LIMIT {
                self.bland = true;
            }
        } else {
            self.degenerate_streak = 0;
        }
    }

    /// Recomputes the basis inverse and basic values from scratch.
    fn refactor(&mut self) -> Result<(), LpError> {
        self.pivots_since_refactor = 0;
        let m = self.m;
        let mut aug = vec![vec![0.0; 2 * m]; m];
        for (i, row) in aug.iter_mut().enumerate() {
            for (p, &bj) in self.basis.iter().enumerate() {
                row[p] = self.cols[bj][i];
            }
            row[m + i] = 1.0;
        }
        // Gauss-Jordan with partial pivoting.
        for col in 0..m {
            let mut piv = col;
            for r in col + 1..m {
                if aug[r][col].abs() > aug[piv][col].abs() {
                    piv = r;
                }
            }
            if aug[piv][col].abs() < 1e-12 {
                return Err(LpError::Numerical("singular basis during refactor".into()));
            }
            aug.swap(col, piv);
            let p = aug[col][col];
            for v in aug[col].iter_mut() {
                *v /= p;
            }
            for r in 0..m {
                if r != col {
                    let f = aug[r][col];
                    if f != 0.0 {
                        for k in 0..2 * m {
                            aug[r][k] -= f * aug[col][k];
                        }
                    }
                }
            }
        }
        for i in 0..m {
            for k in 0..m {
                self.binv[i][k] = aug[i][m + k];
            }
        }
        self.recompute_basic_values();
        Ok(())
    }

    fn recompute_basic_values(&mut self) {
        let mut resid = self.rhs.clone();
        for j in 0..self.total {
            match self.state[j] {
                VarState::Basic(_) => {}
                _ => {
                    let v = self.values[j];
                    if v != 0.0 {
                        for i in 0..self.m {
                            let a = self.cols[j][i];
                            if a != 0.0 {
                                resid[i] -= a * v;
                            }
                        }
                    }
                }
            }
        }
        for i in 0..self.m {
            let mut acc = 0.0;
            for k in 0..self.m {
                acc += self.binv[i][k] * resid[k];
            }
            self.values[self.basis[i]] = acc;
        }
    }

    /// After phase 1, pivot remaining artificials out of the basis where a
    /// structural column is available; dependent rows keep their artificial
    /// pinned at zero.
    fn expel_artificials(&mut self) -> Result<(), LpError> {
        for row in 0..self.m {
            if self.basis[row] < self.n {
                continue;
            }
            let mut found = None;
            for j in 0..self.n {
                if matches!(self.state[j], VarState::Basic(_)) {
                    continue;
                }
                if self.lower[j] == self.upper[j] {
                    continue;
                }
                let mut wr = 0.0;
                for k in 0..self.m {
                    let a = self.cols[j][k];
                    if a != 0.0 {
                        wr += self.binv[row][k] * a;
                    }
                }
                if wr.abs() > 1e-7 {
                    found = Some(j);
                    break;
                }
            }
            if let Some(j) = found {
                let w = self.ftran(j);
                // Degenerate exchange: the artificial sits at zero.
                let old_state = self.state[j];
                let leaving = self.basis[row];
                self.basis[row] = j;
                self.state[j] = VarState::Basic(row);
                self.state[leaving] = VarState::AtLower;
                self.values[leaving] = 0.0;
                let _ = old_state;
                let pivot = w[row];
                if pivot.abs() < PIVOT_TOL {
                    return Err(LpError::Numerical("vanishing pivot on cleanup".into()));
                }
                for k in 0..self.m {
                    self.binv[row][k] /= pivot;
                }
                for i in 0..self.m {
                    if i != row {
                        let f = w[i];
                        if f != 0.0 {
                            for k in 0..self.m {
                                self.binv[i][k] -= f * self.binv[row][k];
                            }
                        }
                    }
                }
                self.recompute_basic_values();
            }
        }
        Ok(())
    }

    /// Verifies the final basis before declaring optimality.
    fn certify(&mut self) -> Result<LpSolution, LpError> {
        self.refactor()?;
        let primal: Vec<f64> = self.values[..self.n].to_vec();

        // Row residuals.
        for i in 0..self.m {
            let mut acc = 0.0;
            for j in 0..self.n {
                acc += self.cols[j][i] * primal[j];
            }
            // Artificials pinned at zero may carry a dependent-row residual.
            for j in self.n..self.total {
                acc += self.cols[j][i] * self.values[j];
            }
            if (acc - self.rhs[i]).abs() > 1e3 * self.feas_tol {
                return Err(LpError::Numerical(format!(
                    "equality residual {} on row {i}",
                    acc - self.rhs[i]
                )));
            }
        }
        // Bound violations.
        for j in 0..self.n {
            let v = primal[j];
            let slack = 1e3 * self.feas_tol
                + 1e-9 * (1.0 + self.lower[j].abs().min(self.upper[j].abs()));
            if v < self.lower[j] - slack || v > self.upper[j] + slack {
                return Err(LpError::Numerical(format!("bound violation on variable {j}")));
            }
        }

        let duals = self.basis_duals(false);
        let mut reduced = vec![0.0; self.n];
        for (j, r) in reduced.iter_mut().enumerate() {
            if matches!(self.state[j], VarState::Basic(_)) {
                *r = 0.0;
            } else {
                *r = self.reduced_cost(j, &duals, false);
            }
        }

        let objective = self
            .objective
            .iter()
            .take(self.n)
            .zip(&primal)
            .map(|(c, x)| c * x)
            .sum();

        Ok(LpSolution {
            status: LpStatus::Optimal,
            primal,
            objective,
            duals,
            reduced_costs: reduced,
        })
    }
}

enum RatioOutcome {
    Pivot { row: usize, step: f64 },
    BoundFlip(f64),
    Unbounded,
}
