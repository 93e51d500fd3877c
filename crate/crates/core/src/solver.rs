//! Optimal coordination mechanisms via a perspective transform.
//!
//! The succinct mechanism search is a concave program over recommendation
//! probabilities and strategies. Substituting each strategy by its
//! probability-weighted version turns every constraint linear: membership
//! rows become homogenized rows over (probability, weighted strategy), the
//! concave principal utility gets an epigraph variable per entry, and the
//! misreport side of incentive compatibility gets one auxiliary variable
//! per (true type, reported type, recommendation) bounding the deviator's
//! best action value.
//!
//! Solving over the closed feasible set can park weighted strategy mass on
//! entries with zero recommendation probability. Such irregular pairs
//! cannot be divided back into a strategy, so the solver blends the optimum
//! with margin solutions that force each offending probability positive,
//! trading an epsilon of objective for strict feasibility.

use crate::error::{Error, Result};
use crate::lp::{check_feasible, solve_lp, LpProblem, LpStatus};
use crate::model::{PaInstance, Polyhedron, SuccinctMechanism};

/// Numerical thresholds used across the solver.
#[derive(Debug, Clone, Copy)]
pub struct Tolerances {
    /// LP feasibility classification.
    pub lp: f64,
    /// Polyhedron membership checks.
    pub membership: f64,
    /// A recommendation probability at or below this counts as zero.
    pub irregular_prob: f64,
    /// A weighted strategy with sup-norm at or above this counts as nonzero.
    pub irregular_z: f64,
    /// Incentive-compatibility audit slack.
    pub ic: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            lp: 1e-7,
            membership: 1e-7,
            irregular_prob: 1e-9,
            irregular_z: 1e-6,
            ic: 1e-6,
        }
    }
}

impl Tolerances {
    /// Overrides the LP tolerance, keeping the rest at their defaults.
    pub fn with_lp(lp: f64) -> Self {
        Tolerances {
            lp,
            ..Tolerances::default()
        }
    }
}

/// A point of the transformed program: per-entry recommendation
/// probabilities and probability-weighted strategies.
#[derive(Debug, Clone)]
pub struct TransformedSolution {
    /// `probs[ty][action]`.
    pub probs: Vec<Vec<f64>>,
    /// `weighted[ty][action]` is probability times strategy.
    pub weighted: Vec<Vec<Vec<f64>>>,
    /// Expected principal utility of this point.
    pub objective: f64,
}

/// Output of the mechanism solver.
#[derive(Debug, Clone)]
pub struct MechanismResult {
    pub mechanism: SuccinctMechanism,
    pub objective: f64,
    /// True when the raw optimum was already strictly representable.
    pub regular: bool,
    /// Zero for regular instances, else the blend weight spent on repair.
    pub epsilon_used: f64,
    /// Repaired (action, type) pairs in repair order.
    pub repaired_pairs: Vec<(usize, usize)>,
}

/// Lifts a polyhedron `X` to the closure of `{(t, t*x) : x in X, t in [0,1]}`.
///
/// Coordinate 0 is the scale `t`; each row `r·x <= b` becomes
/// `r·y - b*t <= 0`, equalities alike, plus `0 <= t <= 1`. The slice at
/// `t = 0` is the recession cone of `X`. Errors if `X` is empty.
pub fn homogenize(space: &Polyhedron) -> Result<Polyhedron> {
    if space.is_empty(1e-7)? {
        return Err(Error::Domain("cannot homogenize an empty polyhedron".into()));
    }
    Ok(homogenize_rows(space))
}

fn homogenize_rows(space: &Polyhedron) -> Polyhedron {
    let dim = space.dim + 1;
    let mut out = Polyhedron::new(dim);
    for (row, rhs) in &space.ineq {
        let mut r = Vec::with_capacity(dim);
        r.push(-rhs);
        r.extend_from_slice(row);
        out.push_ineq(r, 0.0);
    }
    for (row, rhs) in &space.eq {
        let mut r = Vec::with_capacity(dim);
        r.push(-rhs);
        r.extend_from_slice(row);
        out.push_eq(r, 0.0);
    }
    let mut lo = vec![0.0; dim];
    lo[0] = -1.0;
    out.push_ineq(lo, 0.0);
    let mut hi = vec![0.0; dim];
    hi[0] = 1.0;
    out.push_ineq(hi, 1.0);
    out
}

/// Column layout of the transformed program.
#[derive(Debug, Clone, Copy)]
struct Layout {
    types: usize,
    actions: usize,
    dim: usize,
}

impl Layout {
    fn of(inst: &PaInstance) -> Self {
        Layout {
            types: inst.num_types(),
            actions: inst.num_actions,
            dim: inst.dim,
        }
    }

    fn pairs(&self) -> usize {
        self.types * self.actions
    }

    fn prob(&self, ty: usize, ac: usize) -> usize {
        ty * self.actions + ac
    }

    fn weighted(&self, ty: usize, ac: usize, i: usize) -> usize {
        self.pairs() + (ty * self.actions + ac) * self.dim + i
    }

    fn epigraph(&self, ty: usize, ac: usize) -> usize {
        self.pairs() * (1 + self.dim) + ty * self.actions + ac
    }

    /// Deviation auxiliary for (true type, reported type, recommendation);
    /// reported != true.
    fn deviation(&self, ty: usize, rep: usize, ac: usize) -> usize {
        debug_assert_ne!(ty, rep);
        let pair = ty * (self.types - 1) + if rep < ty { rep } else { rep - 1 };
        self.pairs() * (2 + self.dim) + pair * self.actions + ac
    }

    fn num_vars(&self) -> usize {
        self.pairs() * (2 + self.dim) + self.types * (self.types - 1) * self.actions
    }
}

/// Builds the closed transformed program for `inst`.
///
/// Variables: per (type, action) entry a probability, `dim` weighted
/// strategy coordinates and one principal-utility epigraph variable, plus
/// one deviation auxiliary per ordered type pair and recommendation. The
/// objective maximizes prior-weighted epigraph totals. Truthful obedience
/// is enforced entry-wise: for the recommending entry, every alternative
/// action is weakly worse (summed per type this matches the diagonal
/// misreport constraint).
pub fn build_cp_closure(inst: &PaInstance) -> Result<LpProblem> {
    let layout = Layout::of(inst);
    let mut lp = LpProblem::new(layout.num_vars());

    for ty in 0..layout.types {
        for ac in 0..layout.actions {
            lp.objective[layout.epigraph(ty, ac)] = inst.prior[ty];
            lp.lower[layout.prob(ty, ac)] = Some(0.0);
            lp.upper[layout.prob(ty, ac)] = Some(1.0);
        }
    }

    let hom = homogenize_rows(&inst.strategy_space);
    for ty in 0..layout.types {
        for ac in 0..layout.actions {
            // Membership of (prob, weighted) in the homogenized space.
            for (row, rhs) in &hom.ineq {
                let mut r = vec![0.0; layout.num_vars()];
                r[layout.prob(ty, ac)] = row[0];
                for i in 0..layout.dim {
                    r[layout.weighted(ty, ac, i)] = row[i + 1];
                }
                lp.push_ineq(r, *rhs);
            }
            for (row, rhs) in &hom.eq {
                let mut r = vec![0.0; layout.num_vars()];
                r[layout.prob(ty, ac)] = row[0];
                for i in 0..layout.dim {
                    r[layout.weighted(ty, ac, i)] = row[i + 1];
                }
                lp.push_eq(r, *rhs);
            }
            // Epigraph rows for the perspective of the principal utility.
            for piece in inst.principal_utility[ty][ac].pieces() {
                let mut r = vec![0.0; layout.num_vars()];
                r[layout.epigraph(ty, ac)] = 1.0;
                r[layout.prob(ty, ac)] = -piece.offset;
                for i in 0..layout.dim {
                    r[layout.weighted(ty, ac, i)] = -piece.coeffs[i];
                }
                lp.push_ineq(r, 0.0);
            }
            // Obedience: the recommended action beats each alternative.
            for alt in 0..layout.actions {
                if alt == ac {
                    continue;
                }
                let rec = &inst.agent_utility[ty][ac];
                let dev = &inst.agent_utility[ty][alt];
                let mut r = vec![0.0; layout.num_vars()];
                r[layout.prob(ty, ac)] = dev.offset - rec.offset;
                for i in 0..layout.dim {
                    r[layout.weighted(ty, ac, i)] = dev.coeffs[i] - rec.coeffs[i];
                }
                lp.push_ineq(r, 0.0);
            }
        }
        // One recommendation distribution per type.
        let mut r = vec![0.0; layout.num_vars()];
        for ac in 0..layout.actions {
            r[layout.prob(ty, ac)] = 1.0;
        }
        lp.push_eq(r, 1.0);
    }

    // Misreports: auxiliaries dominate the deviator's best action value on
    // each entry of the reported menu, and the truthful payoff dominates
    // their total.
    for ty in 0..layout.types {
        for rep in 0..layout.types {
            if rep == ty {
                continue;
            }
            for ac in 0..layout.actions {
                for alt in 0..layout.actions {
                    let dev = &inst.agent_utility[ty][alt];
                    let mut r = vec![0.0; layout.num_vars()];
                    r[layout.deviation(ty, rep, ac)] = -1.0;
                    r[layout.prob(rep, ac)] += dev.offset;
                    for i in 0..layout.dim {
                        r[layout.weighted(rep, ac, i)] += dev.coeffs[i];
                    }
                    lp.push_ineq(r, 0.0);
                }
            }
            let mut r = vec![0.0; layout.num_vars()];
            for ac in 0..layout.actions {
                r[layout.deviation(ty, rep, ac)] = 1.0;
                let truthful = &inst.agent_utility[ty][ac];
                r[layout.prob(ty, ac)] -= truthful.offset;
                for i in 0..layout.dim {
                    r[layout.weighted(ty, ac, i)] -= truthful.coeffs[i];
                }
            }
            lp.push_ineq(r, 0.0);
        }
    }

    // Supplemental constraints on the per-type aggregate weighted strategy.
    if let Some(supp) = &inst.supplemental {
        for (ty, cset) in supp.iter().enumerate() {
            for (row, rhs) in &cset.ineq {
                let mut r = vec![0.0; layout.num_vars()];
                for ac in 0..layout.actions {
                    for i in 0..layout.dim {
                        r[layout.weighted(ty, ac, i)] += row[i];
                    }
                }
                lp.push_ineq(r, *rhs);
            }
            for (row, rhs) in &cset.eq {
                let mut r = vec![0.0; layout.num_vars()];
                for ac in 0..layout.actions {
                    for i in 0..layout.dim {
                        r[layout.weighted(ty, ac, i)] += row[i];
                    }
                }
                lp.push_eq(r, *rhs);
            }
        }
    }

    Ok(lp)
}

/// Same constraints as [`build_cp_closure`], but the objective maximizes
/// the recommendation probability of one (action, type) entry.
pub fn build_margin_cp(inst: &PaInstance, action: usize, ty: usize) -> Result<LpProblem> {
    let layout = Layout::of(inst);
    if ty >= layout.types || action >= layout.actions {
        return Err(Error::Domain(format!(
            "entry (action {action}, type {ty}) out of range"
        )));
    }
    let mut lp = build_cp_closure(inst)?;
    lp.objective = vec![0.0; layout.num_vars()];
    lp.objective[layout.prob(ty, action)] = 1.0;
    Ok(lp)
}

/// Packs a transformed point into the column order of the closure program.
/// Epigraph and deviation variables are filled with their tight values, so
/// a feasible mechanism packs to a feasible LP point.
pub fn pack_solution(inst: &PaInstance, sol: &TransformedSolution) -> Vec<f64> {
    let layout = Layout::of(inst);
    let mut v = vec![0.0; layout.num_vars()];
    for ty in 0..layout.types {
        for ac in 0..layout.actions {
            v[layout.prob(ty, ac)] = sol.probs[ty][ac];
            for i in 0..layout.dim {
                v[layout.weighted(ty, ac, i)] = sol.weighted[ty][ac][i];
            }
            v[layout.epigraph(ty, ac)] = perspective_value(
                &inst.principal_utility[ty][ac],
                sol.probs[ty][ac],
                &sol.weighted[ty][ac],
            );
        }
    }
    for ty in 0..layout.types {
        for rep in 0..layout.types {
            if rep == ty {
                continue;
            }
            for ac in 0..layout.actions {
                let best = inst.agent_utility[ty]
                    .iter()
                    .map(|dev| {
                        let mut val = dev.offset * sol.probs[rep][ac];
                        for i in 0..layout.dim {
                            val += dev.coeffs[i] * sol.weighted[rep][ac][i];
                        }
                        val
                    })
                    .fold(f64::NEG_INFINITY, f64::max);
                v[layout.deviation(ty, rep, ac)] = best;
            }
        }
    }
    v
}

/// Reads a closure-program primal vector back into a transformed point.
pub fn unpack_solution(inst: &PaInstance, primal: &[f64]) -> TransformedSolution {
    let layout = Layout::of(inst);
    let mut probs = vec![vec![0.0; layout.actions]; layout.types];
    let mut weighted = vec![vec![vec![0.0; layout.dim]; layout.actions]; layout.types];
    for ty in 0..layout.types {
        for ac in 0..layout.actions {
            probs[ty][ac] = primal[layout.prob(ty, ac)];
            for i in 0..layout.dim {
                weighted[ty][ac][i] = primal[layout.weighted(ty, ac, i)];
            }
        }
    }
    let mut sol = TransformedSolution {
        probs,
        weighted,
        objective: 0.0,
    };
    sol.objective = perspective_objective(inst, &sol);
    sol
}

/// Perspective of a concave piecewise-linear function:
/// `min_k (piece_k.coeffs · weighted + piece_k.offset * prob)`.
fn perspective_value(u: &crate::model::ConcavePwl, prob: f64, weighted: &[f64]) -> f64 {
    u.pieces()
        .iter()
        .map(|p| {
            let mut v = p.offset * prob;
            for (c, w) in p.coeffs.iter().zip(weighted) {
                v += c * w;
            }
            v
        })
        .fold(f64::INFINITY, f64::min)
}

/// Expected principal utility of a transformed point, evaluated directly
/// from probabilities and weighted strategies.
pub fn perspective_objective(inst: &PaInstance, sol: &TransformedSolution) -> f64 {
    let mut total = 0.0;
    for ty in 0..inst.num_types() {
        for ac in 0..inst.num_actions {
            total += inst.prior[ty]
                * perspective_value(
                    &inst.principal_utility[ty][ac],
                    sol.probs[ty][ac],
                    &sol.weighted[ty][ac],
                );
        }
    }
    total
}

/// Entries whose probability vanishes while weighted strategy mass does
/// not. Returned as (action, type), ordered by type then action.
pub fn find_irregular_pairs(sol: &TransformedSolution, tols: &Tolerances) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for (ty, probs) in sol.probs.iter().enumerate() {
        for (ac, &p) in probs.iter().enumerate() {
            if p <= tols.irregular_prob {
                let znorm = sol.weighted[ty][ac]
                    .iter()
                    .map(|v| v.abs())
                    .fold(0.0f64, f64::max);
                if znorm >= tols.irregular_z {
                    out.push((ac, ty));
                }
            }
        }
    }
    out
}

/// Divides weighted strategies by their probabilities. Entries with
/// vanishing probability become unused zero-strategy entries. Errors if any
/// irregular pair remains.
pub fn recover_succinct(
    inst: &PaInstance,
    sol: &TransformedSolution,
    tols: &Tolerances,
) -> Result<SuccinctMechanism> {
    let irregular = find_irregular_pairs(sol, tols);
    if !irregular.is_empty() {
        return Err(Error::Precondition(format!(
            "cannot recover strategies at irregular pairs {irregular:?}"
        )));
    }
    let mut probs = vec![vec![0.0; inst.num_actions]; inst.num_types()];
    let mut strategies = vec![vec![vec![0.0; inst.dim]; inst.num_actions]; inst.num_types()];
    for ty in 0..inst.num_types() {
        for ac in 0..inst.num_actions {
            let p = sol.probs[ty][ac];
            if p > tols.irregular_prob {
                probs[ty][ac] = p;
                for i in 0..inst.dim {
                    strategies[ty][ac][i] = sol.weighted[ty][ac][i] / p;
                }
            }
        }
    }
    Ok(SuccinctMechanism { probs, strategies })
}

/// Lifts a succinct mechanism into the transformed space (`weighted` equals
/// probability times strategy).
pub fn lift_mechanism(inst: &PaInstance, mech: &SuccinctMechanism) -> TransformedSolution {
    let mut weighted = vec![vec![vec![0.0; inst.dim]; inst.num_actions]; inst.num_types()];
    for ty in 0..inst.num_types() {
        for ac in 0..inst.num_actions {
            for i in 0..inst.dim {
                weighted[ty][ac][i] = mech.probs[ty][ac] * mech.strategies[ty][ac][i];
            }
        }
    }
    let mut sol = TransformedSolution {
        probs: mech.probs.clone(),
        weighted,
        objective: 0.0,
    };
    sol.objective = perspective_objective(inst, &sol);
    sol
}

fn combine(
    inst: &PaInstance,
    base: &TransformedSolution,
    repairs: &[(usize, usize, TransformedSolution)],
    epsilon: f64,
) -> TransformedSolution {
    let share = epsilon / repairs.len() as f64;
    let mut probs = base.probs.clone();
    let mut weighted = base.weighted.clone();
    for row in probs.iter_mut().flatten() {
        *row *= 1.0 - epsilon;
    }
    for v in weighted.iter_mut().flatten().flatten() {
        *v *= 1.0 - epsilon;
    }
    for (_, _, m) in repairs {
        for ty in 0..inst.num_types() {
            for ac in 0..inst.num_actions {
                probs[ty][ac] += share * m.probs[ty][ac];
                for i in 0..inst.dim {
                    weighted[ty][ac][i] += share * m.weighted[ty][ac][i];
                }
            }
        }
    }
    let mut sol = TransformedSolution {
        probs,
        weighted,
        objective: 0.0,
    };
    sol.objective = perspective_objective(inst, &sol);
    sol
}

/// Blends `base` with margin solutions until no irregular pair remains.
///
/// Picks the first irregular pair in (type, action) order, maximizes that
/// pair's probability subject to the closure constraints, and re-blends:
/// `(1 - epsilon) * base + epsilon/|S| * sum of margin solutions`. Each
/// pair is repaired at most once, so the loop runs at most one iteration
/// per (type, action) entry. The blended objective sits within
/// `epsilon * (base objective - worst margin objective)` of the base
/// objective by concavity.
pub fn repair_solution(
    inst: &PaInstance,
    base: &TransformedSolution,
    epsilon: f64,
    tols: &Tolerances,
) -> Result<(TransformedSolution, Vec<(usize, usize)>)> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::Domain(format!(
            "repair epsilon must lie strictly between 0 and 1, got {epsilon}"
        )));
    }
    let max_rounds = inst.num_types() * inst.num_actions;
    let mut repairs: Vec<(usize, usize, TransformedSolution)> = Vec::new();
    let mut current = base.clone();
    for _ in 0..=max_rounds {
        let irregular = find_irregular_pairs(&current, tols);
        let Some(&(ac, ty)) = irregular.first() else {
            return Ok((current, repairs.iter().map(|&(a, t, _)| (a, t)).collect()));
        };
        if repairs.iter().any(|&(a, t, _)| (a, t) == (ac, ty)) {
            return Err(Error::Numerical(format!(
                "repair revisited entry (action {ac}, type {ty}); margin program is degenerate"
            )));
        }
        let margin_lp = build_margin_cp(inst, ac, ty)?;
        let margin = solve_lp(&margin_lp, tols.lp)?;
        let Some((primal, value)) = margin.optimal() else {
            return Err(Error::Numerical(format!(
                "margin program for entry (action {ac}, type {ty}) did not solve"
            )));
        };
        if value <= tols.irregular_prob {
            return Err(Error::Numerical(format!(
                "margin program keeps entry (action {ac}, type {ty}) at zero probability"
            )));
        }
        repairs.push((ac, ty, unpack_solution(inst, primal)));
        current = combine(inst, base, &repairs, epsilon);
    }
    Err(Error::Numerical(
        "repair loop exceeded the entry count".into(),
    ))
}

/// Computes an (approximately) optimal coordination mechanism.
///
/// Solves the closed transformed program; if the optimum is regular it is
/// returned exactly, otherwise the epsilon-repair loop runs and the result
/// carries `regular = false` together with the repaired pairs.
pub fn solve_optimal_mechanism(
    inst: &PaInstance,
    epsilon: f64,
    tols: &Tolerances,
) -> Result<MechanismResult> {
    let report = inst.validate();
    if !report.ok {
        return Err(Error::Domain(format!(
            "instance failed validation: {}",
            report.issues.join("; ")
        )));
    }
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::Domain(format!(
            "epsilon must lie strictly between 0 and 1, got {epsilon}"
        )));
    }
    let lp = build_cp_closure(inst)?;
    let sol = solve_lp(&lp, tols.lp)?;
    match sol.status {
        LpStatus::Unbounded => return Err(Error::UnboundedUtility),
        LpStatus::Infeasible => {
            // The transformed program is feasible whenever the strategy
            // space is nonempty and the supplemental sets admit an
            // incentive-compatible aggregate; report what failed.
            let mut diag = String::from("transformed program infeasible");
            if let Some(supp) = &inst.supplemental {
                for (ty, c) in supp.iter().enumerate() {
                    if c.is_empty(tols.lp).unwrap_or(false) {
                        diag.push_str(&format!("; supplemental set for type {ty} is empty"));
                    }
                }
                diag.push_str(
                    "; supplemental constraints may be unreachable by aggregate strategies",
                );
            }
            return Err(Error::Infeasible(diag));
        }
        LpStatus::Optimal => {}
    }
    let (primal, _) = sol.optimal().expect("optimal LP has primal");
    let star = unpack_solution(inst, primal);

    let irregular = find_irregular_pairs(&star, tols);
    if irregular.is_empty() {
        let mechanism = recover_succinct(inst, &star, tols)?;
        return Ok(MechanismResult {
            objective: star.objective,
            mechanism,
            regular: true,
            epsilon_used: 0.0,
            repaired_pairs: Vec::new(),
        });
    }
    let (blended, repaired) = repair_solution(inst, &star, epsilon, tols)?;
    let mechanism = recover_succinct(inst, &blended, tols)?;
    Ok(MechanismResult {
        objective: blended.objective,
        mechanism,
        regular: false,
        epsilon_used: epsilon,
        repaired_pairs: repaired,
    })
}

/// Verifies that a transformed point satisfies the closure program's
/// constraints, returning the worst residual.
pub fn closure_residual(inst: &PaInstance, sol: &TransformedSolution) -> Result<f64> {
    let lp = build_cp_closure(inst)?;
    let packed = pack_solution(inst, sol);
    let (_, worst) = check_feasible(&lp, &packed, 0.0);
    Ok(worst)
}
