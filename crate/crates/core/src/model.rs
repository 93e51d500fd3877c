//! Core data model: utilities, polyhedral strategy spaces, instances,
//! succinct mechanisms, and the incentive-compatibility checker.
//!
//! An instance has finitely many agent types and recommendable actions. The
//! principal commits to a per-type lottery over (action, strategy) entries;
//! the agent observes only its own recommendation. Agent utility is affine
//! in the strategy, principal utility is concave piecewise-linear, and the
//! strategy space is a polyhedron.

use crate::error::{Error, Result};
use crate::lp::{solve_lp, LpProblem, LpStatus};

/// `coeffs · x + offset`.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineForm {
    pub coeffs: Vec<f64>,
    pub offset: f64,
}

impl AffineForm {
    pub fn new(coeffs: Vec<f64>, offset: f64) -> Self {
        AffineForm { coeffs, offset }
    }

    pub fn constant(dim: usize, value: f64) -> Self {
        AffineForm {
            coeffs: vec![0.0; dim],
            offset: value,
        }
    }

    pub fn dim(&self) -> usize {
        self.coeffs.len()
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.coeffs.len());
        self.coeffs.iter().zip(x).map(|(c, v)| c * v).sum::<f64>() + self.offset
    }

    pub fn is_finite(&self) -> bool {
        self.offset.is_finite() && self.coeffs.iter().all(|c| c.is_finite())
    }
}

/// Concave piecewise-linear function: the pointwise minimum of affine pieces.
#[derive(Debug, Clone, PartialEq)]
pub struct ConcavePwl {
    pieces: Vec<AffineForm>,
}

impl ConcavePwl {
    pub fn affine(piece: AffineForm) -> Self {
        ConcavePwl {
            pieces: vec![piece],
        }
    }

    pub fn min_of(pieces: Vec<AffineForm>) -> Result<Self> {
        if pieces.is_empty() {
            return Err(Error::Domain(
                "piecewise-linear function needs at least one piece".into(),
            ));
        }
        let dim = pieces[0].dim();
        for p in &pieces[1..] {
            if p.dim() != dim {
                return Err(Error::Dimension {
                    expected: dim,
                    got: p.dim(),
                });
            }
        }
        Ok(ConcavePwl { pieces })
    }

    pub fn pieces(&self) -> &[AffineForm] {
        &self.pieces
    }

    pub fn dim(&self) -> usize {
        self.pieces[0].dim()
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.pieces
            .iter()
            .map(|p| p.eval(x))
            .fold(f64::INFINITY, f64::min)
    }
}

/// `{ x : ineq-rows · x <= rhs, eq-rows · x = rhs }` in `R^dim`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Polyhedron {
    pub dim: usize,
    pub ineq: Vec<(Vec<f64>, f64)>,
    pub eq: Vec<(Vec<f64>, f64)>,
}

impl Polyhedron {
    pub fn new(dim: usize) -> Self {
        Polyhedron {
            dim,
            ineq: Vec::new(),
            eq: Vec::new(),
        }
    }

    pub fn push_ineq(&mut self, coeffs: Vec<f64>, rhs: f64) {
        debug_assert_eq!(coeffs.len(), self.dim);
        self.ineq.push((coeffs, rhs));
    }

    pub fn push_eq(&mut self, coeffs: Vec<f64>, rhs: f64) {
        debug_assert_eq!(coeffs.len(), self.dim);
        self.eq.push((coeffs, rhs));
    }

    /// The nonnegative orthant `x >= 0`.
    pub fn nonneg_orthant(dim: usize) -> Self {
        let mut p = Polyhedron::new(dim);
        for i in 0..dim {
            let mut row = vec![0.0; dim];
            row[i] = -1.0;
            p.push_ineq(row, 0.0);
        }
        p
    }

    /// The probability simplex `{ x >= 0, sum x = 1 }`.
    pub fn simplex(dim: usize) -> Self {
        let mut p = Polyhedron::nonneg_orthant(dim);
        p.push_eq(vec![1.0; dim], 1.0);
        p
    }

    /// An axis-aligned box given per-dimension bounds.
    pub fn bounded_box(bounds: &[(f64, f64)]) -> Self {
        let dim = bounds.len();
        let mut p = Polyhedron::new(dim);
        for (i, &(lo, hi)) in bounds.iter().enumerate() {
            let mut row = vec![0.0; dim];
            row[i] = -1.0;
            p.push_ineq(row, -lo);
            let mut row = vec![0.0; dim];
            row[i] = 1.0;
            p.push_ineq(row, hi);
        }
        p
    }

    /// The single point `{ point }`.
    pub fn singleton(point: &[f64]) -> Self {
        let mut p = Polyhedron::new(point.len());
        for (i, &v) in point.iter().enumerate() {
            let mut row = vec![0.0; point.len()];
            row[i] = 1.0;
            p.push_eq(row, v);
        }
        p
    }

    /// Largest signed constraint residual at `x` (positive means violated).
    pub fn worst_residual(&self, x: &[f64]) -> f64 {
        let mut worst = f64::NEG_INFINITY;
        for (row, rhs) in &self.ineq {
            let lhs: f64 = row.iter().zip(x).map(|(a, v)| a * v).sum();
            worst = worst.max(lhs - rhs);
        }
        for (row, rhs) in &self.eq {
            let lhs: f64 = row.iter().zip(x).map(|(a, v)| a * v).sum();
            worst = worst.max((lhs - rhs).abs());
        }
        worst
    }

    pub fn contains(&self, x: &[f64], tol: f64) -> bool {
        x.len() == self.dim && self.worst_residual(x) <= tol
    }

    /// Decides emptiness with a feasibility LP.
    pub fn is_empty(&self, tol: f64) -> Result<bool> {
        let mut lp = LpProblem::new(self.dim);
        lp.ineq = self.ineq.clone();
        lp.eq = self.eq.clone();
        let sol = solve_lp(&lp, tol)?;
        Ok(sol.status == LpStatus::Infeasible)
    }
}

/// A generalized principal-agent instance.
#[derive(Debug, Clone)]
pub struct PaInstance {
    /// Prior over agent types; entries nonnegative, summing to one.
    pub prior: Vec<f64>,
    /// Strategy-space dimension `d`.
    pub dim: usize,
    pub num_actions: usize,
    pub strategy_space: Polyhedron,
    /// `principal_utility[ty][action]`, concave piecewise-linear over the strategy.
    pub principal_utility: Vec<Vec<ConcavePwl>>,
    /// `agent_utility[ty][action]`, affine over the strategy.
    pub agent_utility: Vec<Vec<AffineForm>>,
    /// Optional per-type constraint on the probability-weighted aggregate strategy.
    pub supplemental: Option<Vec<Polyhedron>>,
    pub type_labels: Vec<String>,
    pub action_labels: Vec<String>,
}

pub fn default_labels(prefix: &str, n: usize) -> Vec<String> {
    (0..n).map(|i| format!("{prefix}{i}")).collect()
}

/// Findings from instance validation. `ok` is true iff no issue was found.
#[derive(Debug, Clone)]
pub struct ValidationReport {
    pub ok: bool,
    pub issues: Vec<String>,
}

/// One recommendation lottery per type: `probs[ty][action]` with the
/// strategy handed over for that entry. Zero-probability entries carry the
/// zero vector and are never required to lie in the strategy space.
#[derive(Debug, Clone)]
pub struct SuccinctMechanism {
    pub probs: Vec<Vec<f64>>,
    pub strategies: Vec<Vec<Vec<f64>>>,
}

/// Incentive-compatibility audit. `margins[ty][reported]` is the advantage
/// of reporting `reported` over the truth for an agent of type `ty`
/// (positive means the constraint is violated); diagonal entries measure
/// disobedience under truthful reporting.
#[derive(Debug, Clone)]
pub struct IcReport {
    pub feasible: bool,
    pub worst_violation: f64,
    pub margins: Vec<Vec<f64>>,
}

impl PaInstance {
    pub fn num_types(&self) -> usize {
        self.prior.len()
    }

    /// Checks structural and numerical coherence. LP failures while probing
    /// polyhedra are reported as issues rather than errors.
    pub fn validate(&self) -> ValidationReport {
        let mut issues = Vec::new();
        let t = self.num_types();
        let a = self.num_actions;
        if t == 0 {
            issues.push("instance has no types".into());
        }
        if a == 0 {
            issues.push("instance has no actions".into());
        }
        let sum: f64 = self.prior.iter().sum();
        if self.prior.iter().any(|p| !p.is_finite() || *p < 0.0) {
            issues.push("prior has a negative or non-finite entry".into());
        } else if (sum - 1.0).abs() > 1e-12 {
            issues.push(format!("prior sums to {sum:.17}, expected 1"));
        }
        if self.strategy_space.dim != self.dim {
            issues.push(format!(
                "strategy space dimension {} does not match instance dimension {}",
                self.strategy_space.dim, self.dim
            ));
        }
        if self.principal_utility.len() != t || self.agent_utility.len() != t {
            issues.push("utility tables do not cover every type".into());
        }
        for (ty, row) in self.principal_utility.iter().enumerate() {
            if row.len() != a {
                issues.push(format!("principal utilities for type {ty} do not cover every action"));
                continue;
            }
            for (ac, u) in row.iter().enumerate() {
                if u.dim() != self.dim {
                    issues.push(format!(
                        "principal utility ({ty},{ac}) has dimension {}, expected {}",
                        u.dim(),
                        self.dim
                    ));
                }
                if u.pieces().iter().any(|p| !p.is_finite()) {
                    issues.push(format!("principal utility ({ty},{ac}) has non-finite data"));
                }
            }
        }
        for (ty, row) in self.agent_utility.iter().enumerate() {
            if row.len() != a {
                issues.push(format!("agent utilities for type {ty} do not cover every action"));
                continue;
            }
            for (ac, v) in row.iter().enumerate() {
                if v.dim() != self.dim {
                    issues.push(format!(
                        "agent utility ({ty},{ac}) has dimension {}, expected {}",
                        v.dim(),
                        self.dim
                    ));
                }
                if !v.is_finite() {
                    issues.push(format!("agent utility ({ty},{ac}) has non-finite data"));
                }
            }
        }
        for (row, rhs) in self
            .strategy_space
            .ineq
            .iter()
            .chain(self.strategy_space.eq.iter())
        {
            if !rhs.is_finite() || row.iter().any(|v| !v.is_finite()) {
                issues.push("strategy space has non-finite data".into());
            }
        }
        match self.strategy_space.is_empty(1e-7) {
            Ok(true) => issues.push("strategy space is empty".into()),
            Ok(false) => {}
            Err(e) => issues.push(format!("strategy space emptiness probe failed: {e}")),
        }
        if let Some(supp) = &self.supplemental {
            if supp.len() != t {
                issues.push("supplemental constraints do not cover every type".into());
            }
            for (ty, c) in supp.iter().enumerate() {
                if c.dim != self.dim {
                    issues.push(format!(
                        "supplemental constraint for type {ty} has dimension {}, expected {}",
                        c.dim, self.dim
                    ));
                }
                match c.is_empty(1e-7) {
                    Ok(true) => {
                        issues.push(format!("supplemental constraint for type {ty} is empty"))
                    }
                    Ok(false) => {}
                    Err(e) => issues.push(format!(
                        "supplemental emptiness probe failed for type {ty}: {e}"
                    )),
                }
            }
        }
        if self.type_labels.len() != t {
            issues.push("type labels do not cover every type".into());
        }
        if self.action_labels.len() != a {
            issues.push("action labels do not cover every action".into());
        }
        ValidationReport {
            ok: issues.is_empty(),
            issues,
        }
    }

    /// The agent's optimal action at strategy `x`, breaking ties toward the
    /// smallest action index. `x` must lie in the strategy space.
    pub fn best_response(&self, x: &[f64], ty: usize) -> Result<usize> {
        if ty >= self.num_types() {
            return Err(Error::Domain(format!("type index {ty} out of range")));
        }
        if !self.strategy_space.contains(x, 1e-7) {
            return Err(Error::Domain(
                "strategy lies outside the strategy space".into(),
            ));
        }
        let mut best = 0usize;
        let mut best_val = f64::NEG_INFINITY;
        for (ac, v) in self.agent_utility[ty].iter().enumerate() {
            let val = v.eval(x);
            if val > best_val {
                best_val = val;
                best = ac;
            }
        }
        Ok(best)
    }

    fn check_mechanism_shape(&self, mech: &SuccinctMechanism) -> Result<()> {
        let t = self.num_types();
        let a = self.num_actions;
        if mech.probs.len() != t || mech.strategies.len() != t {
            return Err(Error::Dimension {
                expected: t,
                got: mech.probs.len().min(mech.strategies.len()),
            });
        }
        for ty in 0..t {
            if mech.probs[ty].len() != a || mech.strategies[ty].len() != a {
                return Err(Error::Dimension {
                    expected: a,
                    got: mech.probs[ty].len().min(mech.strategies[ty].len()),
                });
            }
            for x in &mech.strategies[ty] {
                if x.len() != self.dim {
                    return Err(Error::Dimension {
                        expected: self.dim,
                        got: x.len(),
                    });
                }
            }
            let sum: f64 = mech.probs[ty].iter().sum();
            if (sum - 1.0).abs() > 1e-7 || mech.probs[ty].iter().any(|p| *p < -1e-9) {
                return Err(Error::Precondition(format!(
                    "recommendation probabilities for type {ty} are not a distribution"
                )));
            }
        }
        Ok(())
    }

    /// Audits every ordered (type, reported-type) pair, diagonal included.
    /// The reporting side best-responds entry-wise to the strategies it
    /// would receive.
    pub fn check_ic(&self, mech: &SuccinctMechanism, tol: f64) -> Result<IcReport> {
        self.check_mechanism_shape(mech)?;
        let t = self.num_types();
        let a = self.num_actions;
        let mut margins = vec![vec![0.0; t]; t];
        let mut worst: f64 = 0.0;
        for ty in 0..t {
            let truthful: f64 = (0..a)
                .map(|ac| {
                    mech.probs[ty][ac] * self.agent_utility[ty][ac].eval(&mech.strategies[ty][ac])
                })
                .sum();
            for rep in 0..t {
                let deviating: f64 = (0..a)
                    .map(|ac| {
                        let x = &mech.strategies[rep][ac];
                        let best = self.agent_utility[ty]
                            .iter()
                            .map(|v| v.eval(x))
                            .fold(f64::NEG_INFINITY, f64::max);
                        mech.probs[rep][ac] * best
                    })
                    .sum();
                let margin = deviating - truthful;
                margins[ty][rep] = margin;
                worst = worst.max(margin);
            }
        }
        Ok(IcReport {
            feasible: worst <= tol,
            worst_violation: worst,
            margins,
        })
    }

    /// Expected principal utility of a mechanism under the prior.
    pub fn eval_principal(&self, mech: &SuccinctMechanism) -> Result<f64> {
        self.check_mechanism_shape(mech)?;
        let mut total = 0.0;
        for ty in 0..self.num_types() {
            for ac in 0..self.num_actions {
                let p = mech.probs[ty][ac];
                if p != 0.0 {
                    total += self.prior[ty]
                        * p
                        * self.principal_utility[ty][ac].eval(&mech.strategies[ty][ac]);
                }
            }
        }
        Ok(total)
    }
}
