//! Independent cross-checks for the transform-based solvers.
//!
//! Everything here works from explicit enumeration: mechanisms restricted
//! to a finite strategy grid, concavification as a direct mixture LP,
//! exhaustive independent-set search, and matrix-game values. None of it
//! shares machinery with the perspective-transform solver, so agreement
//! between the two is meaningful evidence.

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::lp::{solve_lp, LpProblem, LpStatus};
use crate::model::PaInstance;

const MAX_GRID_POINTS: u64 = 1_000_000;
const MAX_GRID_LP_VARS: u64 = 2_000_000;

/// Region a strategy grid is laid over.
#[derive(Debug, Clone)]
pub enum GridRegion {
    /// Axis-aligned box given by per-coordinate (lower, upper) bounds.
    Box(Vec<(f64, f64)>),
    /// The probability simplex in the ambient dimension.
    Simplex,
}

/// A uniform grid of strategy points.
///
/// `step` should divide the box edge lengths (or 1 for the simplex); the
/// point counts are derived by rounding, so a slightly off step silently
/// shifts the last point rather than erroring.
#[derive(Debug, Clone)]
pub struct GridSpec {
    pub step: f64,
    pub region: GridRegion,
}

impl GridSpec {
    pub fn unit_box(dim: usize, step: f64) -> Self {
        GridSpec {
            step,
            region: GridRegion::Box(vec![(0.0, 1.0); dim]),
        }
    }

    pub fn boxed(bounds: Vec<(f64, f64)>, step: f64) -> Self {
        GridSpec {
            step,
            region: GridRegion::Box(bounds),
        }
    }

    pub fn simplex(step: f64) -> Self {
        GridSpec {
            step,
            region: GridRegion::Simplex,
        }
    }

    /// Enumerates the grid points for ambient dimension `dim`.
    pub fn points(&self, dim: usize) -> Result<Vec<Vec<f64>>> {
        if !(self.step > 0.0) {
            return Err(Error::Domain(format!(
                "grid step must be positive, got {}",
                self.step
            )));
        }
        match &self.region {
            GridRegion::Box(bounds) => {
                if bounds.len() != dim {
                    return Err(Error::Dimension {
                        expected: dim,
                        got: bounds.len(),
                    });
                }
                let mut counts = Vec::with_capacity(dim);
                let mut total: u64 = 1;
                for &(lo, hi) in bounds {
                    if !(hi >= lo) {
                        return Err(Error::Domain(format!(
                            "box bounds ({lo}, {hi}) are inverted"
                        )));
                    }
                    let n = ((hi - lo) / self.step).round() as u64;
                    total = total.saturating_mul(n + 1);
                    if total > MAX_GRID_POINTS {
                        return Err(Error::SizeLimit {
                            detail: "box grid point count".into(),
                            limit: MAX_GRID_POINTS,
                            requested: total,
                        });
                    }
                    counts.push(n);
                }
                let mut points = Vec::with_capacity(total as usize);
                let mut idx = vec![0u64; dim];
                loop {
                    let point: Vec<f64> = idx
                        .iter()
                        .zip(bounds)
                        .map(|(&k, &(lo, _))| lo + k as f64 * self.step)
                        .collect();
                    points.push(point);
                    let mut carry = dim;
                    while carry > 0 {
                        let i = carry - 1;
                        if idx[i] < counts[i] {
                            idx[i] += 1;
                            break;
                        }
                        idx[i] = 0;
                        carry -= 1;
                    }
                    if carry == 0 {
                        break;
                    }
                }
                Ok(points)
            }
            GridRegion::Simplex => {
                if dim == 0 {
                    return Err(Error::Domain("simplex grid needs dimension >= 1".into()));
                }
                let m = (1.0 / self.step).round().max(1.0) as u64;
                let total = compositions(m, dim as u64);
                if total > MAX_GRID_POINTS {
                    return Err(Error::SizeLimit {
                        detail: "simplex grid point count".into(),
                        limit: MAX_GRID_POINTS,
                        requested: total,
                    });
                }
                let mut points = Vec::with_capacity(total as usize);
                let mut current = vec![0u64; dim];
                compose(m, 0, &mut current, &mut points, m as f64);
                Ok(points)
            }
        }
    }
}

/// Number of ways to write `m` as an ordered sum of `parts` nonnegative
/// integers, saturating at u64::MAX.
fn compositions(m: u64, parts: u64) -> u64 {
    // C(m + parts - 1, parts - 1) by multiplicative accumulation.
    let k = parts - 1;
    let mut result: u64 = 1;
    for i in 1..=k {
        let num = m + i;
        result = match result.checked_mul(num) {
            Some(v) => v / i,
            None => return u64::MAX,
        };
    }
    result
}

fn compose(left: u64, coord: usize, current: &mut Vec<u64>, out: &mut Vec<Vec<f64>>, denom: f64) {
    if coord + 1 == current.len() {
        current[coord] = left;
        out.push(current.iter().map(|&k| k as f64 / denom).collect());
        return;
    }
    for k in 0..=left {
        current[coord] = k;
        compose(left - k, coord + 1, current, out, denom);
    }
}

/// Optimal coordination value over mechanisms whose strategies live on a
/// finite grid.
///
/// Joint variables give the probability of recommending an action together
/// with a specific grid strategy to each reported type; the agent observes
/// the recommendation only, so deviation payoffs average over the grid
/// before the deviator picks a best action. The value is a lower bound on
/// the unrestricted optimum, and comes within (steepest principal piece)
/// times (cell diameter) of it when the grid is aligned with the strategy
/// space.
pub fn myerson_grid_lp(inst: &PaInstance, points: &[Vec<f64>], tol: f64) -> Result<f64> {
    let report = inst.validate();
    if !report.ok {
        return Err(Error::Domain(format!(
            "instance failed validation: {}",
            report.issues.join("; ")
        )));
    }
    let inside: Vec<&Vec<f64>> = points
        .iter()
        .filter(|p| p.len() == inst.dim && inst.strategy_space.contains(p, tol))
        .collect();
    if inside.is_empty() {
        return Err(Error::Domain(
            "no grid point lies in the strategy space".into(),
        ));
    }
    let t = inst.num_types();
    let a = inst.num_actions;
    let g = inside.len();
    let qvars = t * a * g;
    let wvars = t * (t - 1) * a;
    let total = qvars + wvars;
    if total as u64 > MAX_GRID_LP_VARS {
        return Err(Error::SizeLimit {
            detail: "grid mechanism LP variable count".into(),
            limit: MAX_GRID_LP_VARS,
            requested: total as u64,
        });
    }
    let q_index = |ty: usize, ac: usize, gi: usize| (ty * a + ac) * g + gi;
    let w_index = |ty: usize, rep: usize, ac: usize| {
        let pair = ty * (t - 1) + if rep < ty { rep } else { rep - 1 };
        qvars + pair * a + ac
    };

    let mut lp = LpProblem::new(total);
    for ty in 0..t {
        for ac in 0..a {
            for (gi, point) in inside.iter().enumerate() {
                let col = q_index(ty, ac, gi);
                lp.lower[col] = Some(0.0);
                lp.objective[col] = inst.prior[ty] * inst.principal_utility[ty][ac].eval(point);
            }
        }
        let mut row = vec![0.0; total];
        for ac in 0..a {
            for gi in 0..g {
                row[q_index(ty, ac, gi)] = 1.0;
            }
        }
        lp.push_eq(row, 1.0);
    }
    // Obedience per recommendation, averaged over the grid mixture.
    for ty in 0..t {
        for ac in 0..a {
            for alt in 0..a {
                if alt == ac {
                    continue;
                }
                let mut row = vec![0.0; total];
                for (gi, point) in inside.iter().enumerate() {
                    let gain = inst.agent_utility[ty][alt].eval(point)
                        - inst.agent_utility[ty][ac].eval(point);
                    row[q_index(ty, ac, gi)] = gain;
                }
                lp.push_ineq(row, 0.0);
            }
        }
    }
    // Misreports: per reported-menu recommendation, a bound variable
    // dominates each action's averaged payoff; the truthful payoff must
    // cover the bounds' total.
    for ty in 0..t {
        for rep in 0..t {
            if rep == ty {
                continue;
            }
            for ac in 0..a {
                for alt in 0..a {
                    let mut row = vec![0.0; total];
                    row[w_index(ty, rep, ac)] = -1.0;
                    for (gi, point) in inside.iter().enumerate() {
                        row[q_index(rep, ac, gi)] = inst.agent_utility[ty][alt].eval(point);
                    }
                    lp.push_ineq(row, 0.0);
                }
            }
            let mut row = vec![0.0; total];
            for ac in 0..a {
                row[w_index(ty, rep, ac)] = 1.0;
                for (gi, point) in inside.iter().enumerate() {
                    row[q_index(ty, ac, gi)] -= inst.agent_utility[ty][ac].eval(point);
                }
            }
            lp.push_ineq(row, 0.0);
        }
    }
    // Supplemental rows act on each type's mean strategy.
    if let Some(supp) = &inst.supplemental {
        for (ty, cset) in supp.iter().enumerate() {
            for (crow, rhs) in &cset.ineq {
                let mut row = vec![0.0; total];
                for ac in 0..a {
                    for (gi, point) in inside.iter().enumerate() {
                        let dot: f64 = crow.iter().zip(point.iter()).map(|(c, x)| c * x).sum();
                        row[q_index(ty, ac, gi)] = dot;
                    }
                }
                lp.push_ineq(row, *rhs);
            }
            for (crow, rhs) in &cset.eq {
                let mut row = vec![0.0; total];
                for ac in 0..a {
                    for (gi, point) in inside.iter().enumerate() {
                        let dot: f64 = crow.iter().zip(point.iter()).map(|(c, x)| c * x).sum();
                        row[q_index(ty, ac, gi)] = dot;
                    }
                }
                lp.push_eq(row, *rhs);
            }
        }
    }

    let sol = solve_lp(&lp, tol)?;
    match sol.status {
        LpStatus::Optimal => Ok(sol.objective.expect("optimal LP has objective")),
        LpStatus::Infeasible => Err(Error::Infeasible(
            "grid mechanism program infeasible; supplemental constraints may be unreachable on this grid"
                .into(),
        )),
        LpStatus::Unbounded => Err(Error::UnboundedUtility),
    }
}

/// Best mixture value over sampled points whose barycenter hits `target`:
/// the concavification of the sampled function at `target`.
pub fn grid_concavify(points: &[Vec<f64>], values: &[f64], target: &[f64], tol: f64) -> Result<f64> {
    if points.len() != values.len() {
        return Err(Error::Dimension {
            expected: points.len(),
            got: values.len(),
        });
    }
    if points.is_empty() {
        return Err(Error::Domain("concavification needs sample points".into()));
    }
    let dim = target.len();
    if points.iter().any(|p| p.len() != dim) {
        return Err(Error::Domain(
            "sample points and target disagree on dimension".into(),
        ));
    }
    let n = points.len();
    let mut lp = LpProblem::new(n);
    lp.objective = values.to_vec();
    for col in 0..n {
        lp.lower[col] = Some(0.0);
    }
    lp.push_eq(vec![1.0; n], 1.0);
    for i in 0..dim {
        let row: Vec<f64> = points.iter().map(|p| p[i]).collect();
        lp.push_eq(row, target[i]);
    }
    let sol = solve_lp(&lp, tol)?;
    match sol.status {
        LpStatus::Optimal => Ok(sol.objective.expect("optimal LP has objective")),
        LpStatus::Infeasible => Err(Error::Infeasible(
            "target lies outside the convex hull of the sampled points".into(),
        )),
        LpStatus::Unbounded => Err(Error::Numerical(
            "bounded mixture LP reported unbounded".into(),
        )),
    }
}

/// Maximum independent set size by exhaustive branch and bound.
pub fn brute_force_mis(graph: &Graph) -> usize {
    fn recurse(graph: &Graph, remaining: u64, current: usize, best: &mut usize) {
        if current + remaining.count_ones() as usize <= *best {
            return;
        }
        if remaining == 0 {
            *best = (*best).max(current);
            return;
        }
        let v = remaining.trailing_zeros() as usize;
        let bit = 1u64 << v;
        recurse(
            graph,
            remaining & !bit & !graph.neighbors_mask(v),
            current + 1,
            best,
        );
        recurse(graph, remaining & !bit, current, best);
    }
    let n = graph.nodes();
    if n == 0 {
        return 0;
    }
    let all = if n == 64 { u64::MAX } else { (1u64 << n) - 1 };
    let mut best = 0;
    recurse(graph, all, 0, &mut best);
    best
}

/// Value and a maximin strategy for the row player of a zero-sum matrix
/// game (row maximizes `payoff[row][col]`).
pub fn minimax_lp(payoff: &[Vec<f64>], tol: f64) -> Result<(f64, Vec<f64>)> {
    let rows = payoff.len();
    if rows == 0 {
        return Err(Error::Domain("payoff matrix has no rows".into()));
    }
    let cols = payoff[0].len();
    if cols == 0 || payoff.iter().any(|r| r.len() != cols) {
        return Err(Error::Domain(
            "payoff matrix must be rectangular and nonempty".into(),
        ));
    }
    // Variables: mixed strategy then the game value.
    let mut lp = LpProblem::new(rows + 1);
    lp.objective[rows] = 1.0;
    for r in 0..rows {
        lp.lower[r] = Some(0.0);
    }
    for c in 0..cols {
        let mut row = vec![0.0; rows + 1];
        for r in 0..rows {
            row[r] = -payoff[r][c];
        }
        row[rows] = 1.0;
        lp.push_ineq(row, 0.0);
    }
    let mut norm = vec![1.0; rows + 1];
    norm[rows] = 0.0;
    lp.push_eq(norm, 1.0);
    let sol = solve_lp(&lp, tol)?;
    let Some((primal, value)) = sol.optimal() else {
        return Err(Error::Numerical(
            "matrix game LP failed to reach an optimum".into(),
        ));
    };
    Ok((value, primal[..rows].to_vec()))
}
