//! Dense linear programming backend.
//!
//! Solves  maximize c·x  subject to  A_ub·x <= b_ub,  A_eq·x = b_eq  and
//! optional per-variable bounds, with unbounded variables as the default.
//! The solver is a two-phase primal simplex on the full tableau. Entering
//! columns follow Dantzig's rule until a stall threshold, then switch to
//! Bland's rule, which guarantees termination; ties in the ratio test always
//! break toward the smallest basis index. All choices are index-based, so
//! repeated solves of the same problem return bitwise-identical results.

use crate::error::{Error, Result};

/// A dense LP in "maximize" orientation.
#[derive(Debug, Clone)]
pub struct LpProblem {
    pub num_vars: usize,
    pub objective: Vec<f64>,
    /// Rows `coeffs · x <= rhs`.
    pub ineq: Vec<(Vec<f64>, f64)>,
    /// Rows `coeffs · x = rhs`.
    pub eq: Vec<(Vec<f64>, f64)>,
    /// Lower bounds; `None` means unbounded below.
    pub lower: Vec<Option<f64>>,
    /// Upper bounds; `None` means unbounded above.
    pub upper: Vec<Option<f64>>,
}

impl LpProblem {
    pub fn new(num_vars: usize) -> Self {
        LpProblem {
            num_vars,
            objective: vec![0.0; num_vars],
            ineq: Vec::new(),
            eq: Vec::new(),
            lower: vec![None; num_vars],
            upper: vec![None; num_vars],
        }
    }

    pub fn push_ineq(&mut self, coeffs: Vec<f64>, rhs: f64) {
        self.ineq.push((coeffs, rhs));
    }

    pub fn push_eq(&mut self, coeffs: Vec<f64>, rhs: f64) {
        self.eq.push((coeffs, rhs));
    }

    fn validate(&self) -> Result<()> {
        if self.objective.len() != self.num_vars {
            return Err(Error::Dimension {
                expected: self.num_vars,
                got: self.objective.len(),
            });
        }
        for (row, _) in self.ineq.iter().chain(self.eq.iter()) {
            if row.len() != self.num_vars {
                return Err(Error::Dimension {
                    expected: self.num_vars,
                    got: row.len(),
                });
            }
        }
        if self.lower.len() != self.num_vars || self.upper.len() != self.num_vars {
            return Err(Error::Dimension {
                expected: self.num_vars,
                got: self.lower.len().min(self.upper.len()),
            });
        }
        for v in self
            .objective
            .iter()
            .chain(self.ineq.iter().flat_map(|(r, _)| r.iter()))
            .chain(self.eq.iter().flat_map(|(r, _)| r.iter()))
        {
            if !v.is_finite() {
                return Err(Error::Domain("non-finite coefficient in LP".into()));
            }
        }
        for (_, rhs) in self.ineq.iter().chain(self.eq.iter()) {
            if !rhs.is_finite() {
                return Err(Error::Domain("non-finite right-hand side in LP".into()));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone)]
pub struct LpSolution {
    pub status: LpStatus,
    /// Present exactly when `status == Optimal`.
    pub primal: Option<Vec<f64>>,
    /// Present exactly when `status == Optimal`; equals `objective · primal`.
    pub objective: Option<f64>,
}

impl LpSolution {
    pub fn optimal(&self) -> Option<(&[f64], f64)> {
        match self.status {
            LpStatus::Optimal => Some((
                self.primal.as_deref().expect("optimal solution has primal"),
                self.objective.expect("optimal solution has objective"),
            )),
            _ => None,
        }
    }

    fn infeasible() -> Self {
        LpSolution {
            status: LpStatus::Infeasible,
            primal: None,
            objective: None,
        }
    }

    fn unbounded() -> Self {
        LpSolution {
            status: LpStatus::Unbounded,
            primal: None,
            objective: None,
        }
    }
}

/// Checks `point` against every constraint of `problem`.
///
/// Returns `(feasible, worst)` where `worst` is the largest signed residual:
/// positive values measure violation, negative values measure slack. A
/// problem with no constraints reports `f64::NEG_INFINITY`.
pub fn check_feasible(problem: &LpProblem, point: &[f64], tol: f64) -> (bool, f64) {
    let mut worst = f64::NEG_INFINITY;
    for (row, rhs) in &problem.ineq {
        let lhs: f64 = row.iter().zip(point).map(|(a, x)| a * x).sum();
        worst = worst.max(lhs - rhs);
    }
    for (row, rhs) in &problem.eq {
        let lhs: f64 = row.iter().zip(point).map(|(a, x)| a * x).sum();
        worst = worst.max((lhs - rhs).abs());
    }
    for j in 0..problem.num_vars.min(point.len()) {
        if let Some(lo) = problem.lower[j] {
            worst = worst.max(lo - point[j]);
        }
        if let Some(hi) = problem.upper[j] {
            worst = worst.max(point[j] - hi);
        }
    }
    (worst <= tol, worst)
}

/// How an original variable maps into the nonnegative standard form.
#[derive(Debug, Clone, Copy)]
enum VarMap {
    /// x = lo + y[col]
    Shift { col: usize, lo: f64 },
    /// x = hi - y[col]
    NegShift { col: usize, hi: f64 },
    /// x = y[pos] - y[neg]
    Split { pos: usize, neg: usize },
}

struct Tableau {
    rows: usize,
    cols: usize, // structural + slack + artificial, excluding rhs
    /// (rows + 1) x (cols + 1); last row is the objective, last column rhs.
    t: Vec<Vec<f64>>,
    basis: Vec<usize>,
    artificial_start: usize,
    /// Constraint rows exactly as constructed, for periodic reinversion.
    orig: Vec<Vec<f64>>,
}

enum LoopEnd {
    Optimal,
    Unbounded,
}

const PIVOT_EPS: f64 = 1e-9;
const COST_EPS: f64 = 1e-9;
/// Pivots between reinversions. Rebuilding the tableau from the original
/// rows at this cadence keeps accumulated elimination error near machine
/// precision, so long degenerate runs cannot drift into garbage bases.
const REINVERT_PERIOD: usize = 150;

impl Tableau {
    fn pivot(&mut self, row: usize, col: usize) {
        let inv = 1.0 / self.t[row][col];
        for v in self.t[row].iter_mut() {
            *v *= inv;
        }
        self.t[row][col] = 1.0;
        let pivot_row = std::mem::take(&mut self.t[row]);
        for (r, target) in self.t.iter_mut().enumerate() {
            if r == row {
                continue;
            }
            let factor = target[col];
            if factor == 0.0 {
                continue;
            }
            for (v, p) in target.iter_mut().zip(&pivot_row) {
                *v -= factor * p;
            }
            target[col] = 0.0;
        }
        self.t[row] = pivot_row;
        self.basis[row] = col;
    }

    /// Runs the simplex loop on the current objective row until optimality
    /// or an unbounded ray. `allow_artificial` permits artificial columns to
    /// enter (used only in phase 1, where they carry cost); `costs` is the
    /// phase cost vector, needed to rebuild the objective row after a
    /// reinversion.
    fn run(&mut self, allow_artificial: bool, costs: &[f64]) -> Result<LoopEnd> {
        let switch_to_bland = 2 * (self.rows + self.cols) + 200;
        let max_iter = 60 * (self.rows + self.cols) + 20_000;
        let mut iter = 0usize;
        let mut since_reinvert = 0usize;
        loop {
            iter += 1;
            if iter > max_iter {
                return Err(Error::Numerical(format!(
                    "simplex exceeded {max_iter} iterations"
                )));
            }
            if since_reinvert >= REINVERT_PERIOD {
                self.reinvert(costs)?;
                since_reinvert = 0;
            }
            let limit = if allow_artificial {
                self.cols
            } else {
                self.artificial_start
            };
            // Entering column: objective-row entry < -eps means improvement.
            let mut entering = None;
            if iter <= switch_to_bland {
                let mut best = -COST_EPS;
                for j in 0..limit {
                    let v = self.t[self.rows][j];
                    if v < best {
                        best = v;
                        entering = Some(j);
                    }
                }
            } else {
                for j in 0..limit {
                    if self.t[self.rows][j] < -COST_EPS {
                        entering = Some(j);
                        break;
                    }
                }
            }
            let Some(col) = entering else {
                return Ok(LoopEnd::Optimal);
            };
            let Some(row) = self.select_leaving(col, iter > switch_to_bland) else {
                return Ok(LoopEnd::Unbounded);
            };
            self.pivot(row, col);
            since_reinvert += 1;
        }
    }

    /// Two-pass ratio test. Pivot eligibility is relative to the column's
    /// magnitude so that elimination noise never becomes a pivot, and among
    /// rows within a hair of the minimum ratio the largest pivot element
    /// wins for stability. Under Bland's rule the tie instead goes to the
    /// smallest basis index, preserving the anti-cycling argument.
    fn select_leaving(&self, col: usize, bland: bool) -> Option<usize> {
        let mut col_max = 0.0f64;
        for i in 0..self.rows {
            col_max = col_max.max(self.t[i][col].abs());
        }
        let eps_piv = PIVOT_EPS * (1.0 + col_max);
        let mut min_ratio = f64::INFINITY;
        for i in 0..self.rows {
            let a = self.t[i][col];
            if a > eps_piv {
                min_ratio = min_ratio.min(self.t[i][self.cols] / a);
            }
        }
        if min_ratio.is_infinite() {
            return None;
        }
        let window = min_ratio + 1e-9 * (1.0 + min_ratio.abs());
        let mut best: Option<(usize, f64)> = None;
        for i in 0..self.rows {
            let a = self.t[i][col];
            if a <= eps_piv || self.t[i][self.cols] / a > window {
                continue;
            }
            match best {
                None => best = Some((i, a)),
                Some((bi, ba)) => {
                    let better = if bland {
                        self.basis[i] < self.basis[bi]
                    } else if (a - ba).abs() > 1e-12 * ba.max(a) {
                        a > ba
                    } else {
                        self.basis[i] < self.basis[bi]
                    };
                    if better {
                        best = Some((i, a));
                    }
                }
            }
        }
        best.map(|(i, _)| i)
    }

    /// Rebuilds the tableau body exactly from the original constraint rows
    /// for the current basis, then re-prices the objective row. Gauss-Jordan
    /// elimination with partial pivoting keeps the rebuild stable.
    fn reinvert(&mut self, costs: &[f64]) -> Result<()> {
        let mut m = self.orig.clone();
        for i in 0..self.rows {
            let c = self.basis[i];
            let mut best = i;
            let mut best_mag = m[i][c].abs();
            for (r, row) in m.iter().enumerate().take(self.rows).skip(i + 1) {
                if row[c].abs() > best_mag {
                    best = r;
                    best_mag = row[c].abs();
                }
            }
            if best_mag <= 1e-12 {
                return Err(Error::Numerical(
                    "basis matrix became singular during reinversion".into(),
                ));
            }
            m.swap(i, best);
            let inv = 1.0 / m[i][c];
            for v in m[i].iter_mut() {
                *v *= inv;
            }
            m[i][c] = 1.0;
            let pivot_row = std::mem::take(&mut m[i]);
            for (r, target) in m.iter_mut().enumerate() {
                if r == i {
                    continue;
                }
                let factor = target[c];
                if factor == 0.0 {
                    continue;
                }
                for (v, p) in target.iter_mut().zip(&pivot_row) {
                    *v -= factor * p;
                }
                target[c] = 0.0;
            }
            m[i] = pivot_row;
        }
        for (dst, src) in self.t.iter_mut().zip(m) {
            *dst = src;
        }
        self.price_out(costs);
        Ok(())
    }

    /// Rebuilds the objective row as `z_j - c_j` for the given column costs.
    fn price_out(&mut self, costs: &[f64]) {
        for j in 0..=self.cols {
            self.t[self.rows][j] = 0.0;
        }
        for j in 0..self.cols {
            self.t[self.rows][j] = -costs[j];
        }
        let mut obj = std::mem::take(&mut self.t[self.rows]);
        for i in 0..self.rows {
            let cb = costs[self.basis[i]];
            if cb == 0.0 {
                continue;
            }
            for (v, r) in obj.iter_mut().zip(&self.t[i]) {
                *v += cb * r;
            }
        }
        self.t[self.rows] = obj;
    }
}

/// Solves the LP. `tol` controls feasibility classification (default callers
/// pass 1e-7). Returns an error only for malformed input or a numerical
/// breakdown, never for an infeasible or unbounded model.
pub fn solve_lp(problem: &LpProblem, tol: f64) -> Result<LpSolution> {
    problem.validate()?;
    let n = problem.num_vars;

    // Bound sanity; contradictory bounds decide feasibility immediately.
    for j in 0..n {
        if let (Some(lo), Some(hi)) = (problem.lower[j], problem.upper[j]) {
            if lo > hi + tol {
                return Ok(LpSolution::infeasible());
            }
        }
    }

    // Standard-form variable mapping.
    let mut maps = Vec::with_capacity(n);
    let mut n_std = 0usize;
    for j in 0..n {
        let m = match (problem.lower[j], problem.upper[j]) {
            (Some(lo), _) => {
                let col = n_std;
                n_std += 1;
                VarMap::Shift { col, lo }
            }
            (None, Some(hi)) => {
                let col = n_std;
                n_std += 1;
                VarMap::NegShift { col, hi }
            }
            (None, None) => {
                let pos = n_std;
                let neg = n_std + 1;
                n_std += 2;
                VarMap::Split { pos, neg }
            }
        };
        maps.push(m);
    }

    // Assemble rows over standard variables: (coeffs, rhs, is_eq).
    let mut rows: Vec<(Vec<f64>, f64, bool)> = Vec::new();
    let convert_row = |coeffs: &[f64], rhs: f64, is_eq: bool| {
        let mut out = vec![0.0; n_std];
        let mut adj = rhs;
        for (j, &c) in coeffs.iter().enumerate() {
            if c == 0.0 {
                continue;
            }
            match maps[j] {
                VarMap::Shift { col, lo } => {
                    out[col] += c;
                    adj -= c * lo;
                }
                VarMap::NegShift { col, hi } => {
                    out[col] -= c;
                    adj -= c * hi;
                }
                VarMap::Split { pos, neg } => {
                    out[pos] += c;
                    out[neg] -= c;
                }
            }
        }
        (out, adj, is_eq)
    };
    for (coeffs, rhs) in &problem.ineq {
        rows.push(convert_row(coeffs, *rhs, false));
    }
    for (coeffs, rhs) in &problem.eq {
        rows.push(convert_row(coeffs, *rhs, true));
    }
    // Finite upper bounds on shifted variables become explicit rows.
    for j in 0..n {
        if let (VarMap::Shift { col, lo }, Some(hi)) = (maps[j], problem.upper[j]) {
            let mut r = vec![0.0; n_std];
            r[col] = 1.0;
            rows.push((r, hi - lo, false));
        }
    }

    // Drop identically-zero rows, deciding feasibility where forced.
    let scale = 1.0
        + rows
            .iter()
            .map(|(_, b, _)| b.abs())
            .fold(0.0f64, f64::max);
    let mut kept: Vec<(Vec<f64>, f64, bool)> = Vec::new();
    for (r, b, is_eq) in rows {
        let znorm = r.iter().map(|v| v.abs()).fold(0.0f64, f64::max);
        if znorm <= 1e-12 {
            let violated = if is_eq { b.abs() > tol } else { b < -tol };
            if violated {
                return Ok(LpSolution::infeasible());
            }
            continue;
        }
        kept.push((r, b, is_eq));
    }

    let m = kept.len();
    // Slack per inequality row; sign-normalize rhs afterwards.
    let n_slack = kept.iter().filter(|(_, _, is_eq)| !is_eq).count();
    let mut body: Vec<Vec<f64>> = Vec::with_capacity(m);
    let mut rhs_col = Vec::with_capacity(m);
    let mut slack_idx = 0usize;
    // Candidate basic column per row (slack with +1 coefficient), else None.
    let mut basic_candidate: Vec<Option<usize>> = vec![None; m];
    for (i, (r, b, is_eq)) in kept.iter().enumerate() {
        let mut full = vec![0.0; n_std + n_slack];
        full[..n_std].copy_from_slice(r);
        let mut b = *b;
        let mut slack_col = None;
        if !is_eq {
            let col = n_std + slack_idx;
            slack_idx += 1;
            full[col] = 1.0;
            slack_col = Some(col);
        }
        if b < 0.0 {
            for v in full.iter_mut() {
                *v = -*v;
            }
            b = -b;
            // Slack coefficient is now -1: not a valid basis column.
            slack_col = None;
        }
        if let Some(c) = slack_col {
            basic_candidate[i] = Some(c);
        }
        body.push(full);
        rhs_col.push(b);
    }

    // Artificial columns for rows lacking a basic candidate.
    let n_art = basic_candidate.iter().filter(|c| c.is_none()).count();
    let cols = n_std + n_slack + n_art;
    let mut t: Vec<Vec<f64>> = Vec::with_capacity(m + 1);
    let mut basis = vec![0usize; m];
    let mut art_idx = 0usize;
    for i in 0..m {
        let mut row = vec![0.0; cols + 1];
        row[..n_std + n_slack].copy_from_slice(&body[i]);
        row[cols] = rhs_col[i];
        match basic_candidate[i] {
            Some(c) => basis[i] = c,
            None => {
                let c = n_std + n_slack + art_idx;
                art_idx += 1;
                row[c] = 1.0;
                basis[i] = c;
            }
        }
        t.push(row);
    }
    let orig = t.clone();
    t.push(vec![0.0; cols + 1]);
    let mut tab = Tableau {
        rows: m,
        cols,
        t,
        basis,
        artificial_start: n_std + n_slack,
        orig,
    };

    // Phase 1: maximize -(sum of artificials).
    if n_art > 0 {
        let mut costs = vec![0.0; cols];
        for c in tab.artificial_start..cols {
            costs[c] = -1.0;
        }
        tab.price_out(&costs);
        match tab.run(true, &costs)? {
            LoopEnd::Unbounded => {
                return Err(Error::Numerical("phase 1 reported an unbounded ray".into()))
            }
            LoopEnd::Optimal => {}
        }
        let infeas = -tab.t[tab.rows][cols];
        if infeas > tol * scale {
            return Ok(LpSolution::infeasible());
        }
        // Pivot artificials out of the basis where a structural column is
        // available. A row whose artificial cannot leave is linearly
        // dependent: its structural entries are eliminated to noise, so the
        // row stays inert with its artificial basic at zero.
        for i in 0..tab.rows {
            if tab.basis[i] >= tab.artificial_start {
                for j in 0..tab.artificial_start {
                    if tab.t[i][j].abs() > 1e-7 {
                        tab.pivot(i, j);
                        break;
                    }
                }
            }
        }
    }

    // Phase 2 on the real objective (over standard variables).
    let mut costs = vec![0.0; cols];
    for j in 0..n {
        let c = problem.objective[j];
        if c == 0.0 {
            continue;
        }
        match maps[j] {
            VarMap::Shift { col, .. } => costs[col] += c,
            VarMap::NegShift { col, .. } => costs[col] -= c,
            VarMap::Split { pos, neg } => {
                costs[pos] += c;
                costs[neg] -= c;
            }
        }
    }
    tab.price_out(&costs);
    match tab.run(false, &costs)? {
        LoopEnd::Unbounded => return Ok(LpSolution::unbounded()),
        LoopEnd::Optimal => {}
    }

    // Recover the standard-form point, then the original variables.
    let mut y = vec![0.0; cols];
    for i in 0..tab.rows {
        y[tab.basis[i]] = tab.t[i][tab.cols];
    }
    let mut x = vec![0.0; n];
    for j in 0..n {
        x[j] = match maps[j] {
            VarMap::Shift { col, lo } => lo + y[col],
            VarMap::NegShift { col, hi } => hi - y[col],
            VarMap::Split { pos, neg } => y[pos] - y[neg],
        };
    }
    let objective: f64 = problem
        .objective
        .iter()
        .zip(&x)
        .map(|(c, v)| c * v)
        .sum();

    let (ok, worst) = check_feasible(problem, &x, tol * scale.max(1.0) * 10.0);
    if !ok {
        return Err(Error::Numerical(format!(
            "simplex solution violates constraints by {worst:.3e}"
        )));
    }

    Ok(LpSolution {
        status: LpStatus::Optimal,
        primal: Some(x),
        objective: Some(objective),
    })
}
