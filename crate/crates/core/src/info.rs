//! Optimal costly information acquisition over partition oracles.
//!
//! A decision maker chooses how much to learn about a hidden state. Her
//! gross value of holding posterior `σ` is a function `u*` that is
//! concave on each cell of a known polyhedral partition of the belief
//! simplex, and learning is priced by a convex posterior-separable cost.
//! The optimal experiment solves a single LP in perspective variables
//! `g_i = p_i σ_i`, one block per cell, tied by Bayes plausibility
//! `Σ g_i = f`.

use crate::error::{Error, Result};
use crate::lp::{solve_lp, LpProblem, LpStatus};
use crate::model::{AffineForm, ConcavePwl, Polyhedron};
use crate::oracles::GridSpec;

/// Largest tangent-cut count an entropy approximation may request.
const MAX_ENTROPY_PIECES: u64 = 100_000;
/// Subset-enumeration guard for the hardness evaluators.
const MAX_EXACT_NODES: usize = 16;
/// Signals lighter than this are dropped from the returned experiment.
const SIGNAL_DROP_TOL: f64 = 1e-10;

/// One cell of a belief-simplex partition: a region and the concave
/// restriction of the gross value to it.
#[derive(Debug, Clone)]
pub struct PartitionCell {
    pub region: Polyhedron,
    pub utility: ConcavePwl,
}

/// Polyhedral partition of the belief simplex. Cells are closed, so
/// neighbors overlap on their shared boundary; both restrictions are
/// valid there and the solver is free to use either.
#[derive(Debug, Clone)]
pub struct Partition {
    pub cells: Vec<PartitionCell>,
}

impl Partition {
    pub fn dim(&self) -> Option<usize> {
        self.cells.first().map(|c| c.region.dim)
    }

    pub fn validate(&self) -> Result<()> {
        let Some(d) = self.dim() else {
            return Err(Error::Domain("partition has no cells".into()));
        };
        for (i, cell) in self.cells.iter().enumerate() {
            if cell.region.dim != d {
                return Err(Error::Dimension {
                    expected: d,
                    got: cell.region.dim,
                });
            }
            if cell.utility.dim() != d {
                return Err(Error::Dimension {
                    expected: d,
                    got: cell.utility.dim(),
                });
            }
            let finite = cell
                .region
                .ineq
                .iter()
                .chain(cell.region.eq.iter())
                .all(|(row, rhs)| rhs.is_finite() && row.iter().all(|v| v.is_finite()));
            if !finite {
                return Err(Error::Domain(format!("cell {i} has a non-finite row")));
            }
        }
        Ok(())
    }

    /// Check on a grid sample that every belief lies in some cell.
    pub fn covers_grid(&self, step: f64, tol: f64) -> Result<bool> {
        self.validate()?;
        let d = self.dim().expect("validated partition has cells");
        let points = GridSpec::simplex(step).points(d)?;
        Ok(points
            .iter()
            .all(|p| self.cells.iter().any(|c| c.region.contains(p, tol))))
    }

    /// Gross value at a belief: best cell restriction among the cells
    /// containing it.
    pub fn eval_utility(&self, sigma: &[f64], tol: f64) -> Option<f64> {
        self.cells
            .iter()
            .filter(|c| c.region.contains(sigma, tol))
            .map(|c| c.utility.eval(sigma))
            .fold(None, |acc, v| Some(acc.map_or(v, |a: f64| a.max(v))))
    }
}

/// One signal of an experiment: its probability and the posterior it
/// induces.
#[derive(Debug, Clone)]
pub struct Signal {
    pub weight: f64,
    pub posterior: Vec<f64>,
}

/// A solved information-acquisition problem. `value` is the net payoff
/// `Σ p_i [u*(σ_i) − h(σ_i)]`; the constant baseline `h(f)` is left out
/// of the objective, so `cost` reports `Σ p_i h(σ_i) − h(f)` separately
/// (nonnegative for convex costs).
#[derive(Debug, Clone)]
pub struct Experiment {
    pub signals: Vec<Signal>,
    pub value: f64,
    pub cost: f64,
}

/// Posterior-separable cost catalog. The solver works with a max of
/// affine pieces; the smooth entropy cost enters through an inner
/// piecewise-linear approximation.
#[derive(Debug, Clone)]
pub enum CostSpec {
    /// Learning is free.
    Zero,
    /// Convex piecewise-linear potential, the max of the given pieces.
    PiecewiseConvex(Vec<AffineForm>),
    /// Negative entropy `h(σ) = Σ σ(θ) ln σ(θ)` approximated from below
    /// by tangent cuts at a shifted uniform simplex grid with this many
    /// points per axis.
    EntropyApprox(usize),
}

impl CostSpec {
    /// Affine pieces whose max is the potential (exactly, or the inner
    /// approximation for the entropy kind).
    pub fn pieces(&self, dim: usize) -> Result<Vec<AffineForm>> {
        if dim == 0 {
            return Err(Error::Domain("cost potential needs a positive dimension".into()));
        }
        match self {
            CostSpec::Zero => Ok(vec![AffineForm::constant(dim, 0.0)]),
            CostSpec::PiecewiseConvex(pieces) => {
                if pieces.is_empty() {
                    return Err(Error::Domain("piecewise cost needs at least one piece".into()));
                }
                for p in pieces {
                    if p.dim() != dim {
                        return Err(Error::Dimension {
                            expected: dim,
                            got: p.dim(),
                        });
                    }
                    if !p.is_finite() {
                        return Err(Error::Domain("cost piece has a non-finite entry".into()));
                    }
                }
                Ok(pieces.clone())
            }
            CostSpec::EntropyApprox(per_axis) => entropy_pieces(dim, *per_axis),
        }
    }

    /// Potential value at a belief (max over pieces).
    pub fn eval(&self, sigma: &[f64]) -> Result<f64> {
        let pieces = self.pieces(sigma.len())?;
        Ok(pieces
            .iter()
            .map(|p| p.eval(sigma))
            .fold(f64::NEG_INFINITY, f64::max))
    }
}

/// Negative entropy `Σ σ_i ln σ_i` with the `0 ln 0 = 0` convention.
pub fn neg_entropy(sigma: &[f64]) -> f64 {
    sigma
        .iter()
        .map(|&s| if s > 0.0 { s * s.ln() } else { 0.0 })
        .sum()
}

/// Tangent cuts of negative entropy at the interior-shifted uniform grid
/// with `per_axis` points per axis. Each cut touches `h` at its grid
/// point and lies below everywhere else, so the max of the cuts is an
/// inner approximation.
pub fn entropy_pieces(dim: usize, per_axis: usize) -> Result<Vec<AffineForm>> {
    if dim == 0 {
        return Err(Error::Domain("entropy needs a positive dimension".into()));
    }
    if per_axis == 0 {
        return Err(Error::Domain("entropy grid needs at least one point per axis".into()));
    }
    let levels = per_axis - 1;
    let mut count: u64 = 1;
    // Compositions of `levels` into `dim` parts: C(levels + dim - 1, dim - 1).
    for i in 0..dim - 1 {
        count = count.saturating_mul((levels + dim - 1 - i) as u64) / (i as u64 + 1);
        if count > MAX_ENTROPY_PIECES {
            return Err(Error::SizeLimit {
                detail: "entropy tangent-cut count".into(),
                limit: MAX_ENTROPY_PIECES,
                requested: count,
            });
        }
    }
    let denom = (levels + dim) as f64;
    let mut pieces = Vec::new();
    let mut comp = vec![0usize; dim];
    emit_compositions(levels, 0, &mut comp, &mut |comp| {
        let coeffs: Vec<f64> = comp
            .iter()
            .map(|&k| ((k as f64 + 1.0) / denom).ln() + 1.0)
            .collect();
        pieces.push(AffineForm::new(coeffs, -1.0));
    });
    Ok(pieces)
}

/// Visit every way of writing `remaining` as an ordered sum over the
/// slots from `pos` on.
fn emit_compositions(
    remaining: usize,
    pos: usize,
    comp: &mut Vec<usize>,
    visit: &mut impl FnMut(&[usize]),
) {
    if pos + 1 == comp.len() {
        comp[pos] = remaining;
        visit(comp);
        return;
    }
    for v in 0..=remaining {
        comp[pos] = v;
        emit_compositions(remaining - v, pos + 1, comp, visit);
    }
}

/// Worst shortfall of the tangent-cut approximation below the true
/// negative entropy, sampled on a simplex grid of the given step.
pub fn entropy_gap(pieces: &[AffineForm], dim: usize, step: f64) -> Result<f64> {
    let points = GridSpec::simplex(step).points(dim)?;
    let mut gap = 0.0f64;
    for p in &points {
        let approx = pieces
            .iter()
            .map(|a| a.eval(p))
            .fold(f64::NEG_INFINITY, f64::max);
        gap = gap.max(neg_entropy(p) - approx);
    }
    Ok(gap)
}

/// Perspective of a max-of-affines potential: `t h(g/t)` with `t = Σ g`,
/// and `0` at `g = 0`. Computed without division as the max of the
/// homogenized pieces.
pub fn perspective_on_simplex(pieces: &[AffineForm], g: &[f64]) -> Result<f64> {
    if pieces.is_empty() {
        return Err(Error::Domain("perspective needs at least one piece".into()));
    }
    if g.iter().any(|&v| v < 0.0 || !v.is_finite()) {
        return Err(Error::Domain("perspective argument must be nonnegative".into()));
    }
    let t: f64 = g.iter().sum();
    if t == 0.0 {
        return Ok(0.0);
    }
    let mut best = f64::NEG_INFINITY;
    for p in pieces {
        if p.dim() != g.len() {
            return Err(Error::Dimension {
                expected: g.len(),
                got: p.dim(),
            });
        }
        let v: f64 = p.coeffs.iter().zip(g).map(|(c, x)| c * x).sum::<f64>() + p.offset * t;
        best = best.max(v);
    }
    Ok(best)
}

/// Perspective of a cell's concave utility (min of affines): `t u(g/t)`
/// with the zero branch at `g = 0`.
fn perspective_concave(pwl: &ConcavePwl, g: &[f64]) -> f64 {
    let t: f64 = g.iter().sum();
    if t == 0.0 {
        return 0.0;
    }
    pwl.pieces()
        .iter()
        .map(|p| p.coeffs.iter().zip(g).map(|(c, x)| c * x).sum::<f64>() + p.offset * t)
        .fold(f64::INFINITY, f64::min)
}

/// Best-response partition of a finite decision problem. One cell per
/// action: the beliefs where that action maximizes expected utility,
/// carrying its affine expected-utility restriction.
pub fn partition_decision_problem(utility: &[Vec<f64>]) -> Result<Partition> {
    let actions = utility.len();
    if actions == 0 {
        return Err(Error::Domain("decision problem needs at least one action".into()));
    }
    let states = utility[0].len();
    if states == 0 {
        return Err(Error::Domain("decision problem needs at least one state".into()));
    }
    for row in utility {
        if row.len() != states {
            return Err(Error::Dimension {
                expected: states,
                got: row.len(),
            });
        }
        if !row.iter().all(|v| v.is_finite()) {
            return Err(Error::Domain("utilities must be finite".into()));
        }
    }
    let mut cells = Vec::with_capacity(actions);
    for best in 0..actions {
        let mut region = Polyhedron::simplex(states);
        for other in 0..actions {
            if other == best {
                continue;
            }
            let row: Vec<f64> = (0..states)
                .map(|w| utility[other][w] - utility[best][w])
                .collect();
            region.push_ineq(row, 0.0);
        }
        cells.push(PartitionCell {
            region,
            utility: ConcavePwl::affine(AffineForm::new(utility[best].clone(), 0.0)),
        });
    }
    Ok(Partition { cells })
}

/// Persuasion partition: the receiver's best-response cells, each
/// carrying the sender's expected utility for that action. On tie
/// boundaries both cells apply, which resolves toward the sender.
pub fn partition_costly_persuasion(
    sender: &[Vec<f64>],
    receiver: &[Vec<f64>],
) -> Result<Partition> {
    let base = partition_decision_problem(receiver)?;
    if sender.len() != receiver.len() {
        return Err(Error::Dimension {
            expected: receiver.len(),
            got: sender.len(),
        });
    }
    let states = receiver[0].len();
    let mut cells = Vec::with_capacity(base.cells.len());
    for (ac, cell) in base.cells.into_iter().enumerate() {
        if sender[ac].len() != states {
            return Err(Error::Dimension {
                expected: states,
                got: sender[ac].len(),
            });
        }
        if !sender[ac].iter().all(|v| v.is_finite()) {
            return Err(Error::Domain("utilities must be finite".into()));
        }
        cells.push(PartitionCell {
            region: cell.region,
            utility: ConcavePwl::affine(AffineForm::new(sender[ac].clone(), 0.0)),
        });
    }
    Ok(Partition { cells })
}

/// Solve for the optimal experiment over a partitioned gross value with
/// a posterior-separable cost.
///
/// Variables are one perspective block `g_i ≥ 0` per cell with epigraph
/// value `u_i` and cost cap `m_i`; signal probabilities `p_i = Σ_θ g_i`
/// are substituted rather than kept as variables. Cell membership
/// homogenizes to `(row − rhs·1)·g_i ≤ 0` and Bayes plausibility ties
/// the blocks by `Σ_i g_i = f`.
pub fn solve_info_acquisition(
    part: &Partition,
    cost: &CostSpec,
    prior: &[f64],
    tol: f64,
) -> Result<Experiment> {
    part.validate()?;
    let d = part.dim().expect("validated partition has cells");
    if prior.len() != d {
        return Err(Error::Dimension {
            expected: d,
            got: prior.len(),
        });
    }
    if prior.iter().any(|&v| v < -1e-12 || !v.is_finite())
        || (prior.iter().sum::<f64>() - 1.0).abs() > 1e-9
    {
        return Err(Error::Domain("prior is not a distribution".into()));
    }
    let cost_pieces = cost.pieces(d)?;
    let n = part.cells.len();

    // Block layout per cell: d mass coordinates, then u_i, then m_i.
    let width = d + 2;
    let total = n * width;
    let gcol = |i: usize, j: usize| i * width + j;
    let ucol = |i: usize| i * width + d;
    let mcol = |i: usize| i * width + d + 1;

    let mut lp = LpProblem::new(total);
    for i in 0..n {
        for j in 0..d {
            lp.lower[gcol(i, j)] = Some(0.0);
        }
        lp.objective[ucol(i)] = 1.0;
        lp.objective[mcol(i)] = -1.0;
        let cell = &part.cells[i];
        for piece in cell.utility.pieces() {
            // u_i ≤ Σ_j (c_j + off) g_ij, the perspective with p substituted.
            let mut r = vec![0.0; total];
            r[ucol(i)] = 1.0;
            for j in 0..d {
                r[gcol(i, j)] = -(piece.coeffs[j] + piece.offset);
            }
            lp.push_ineq(r, 0.0);
        }
        for piece in &cost_pieces {
            let mut r = vec![0.0; total];
            r[mcol(i)] = -1.0;
            for j in 0..d {
                r[gcol(i, j)] = piece.coeffs[j] + piece.offset;
            }
            lp.push_ineq(r, 0.0);
        }
        for (row, rhs) in &cell.region.ineq {
            let homog: Vec<f64> = row.iter().map(|v| v - rhs).collect();
            if homog.iter().all(|&v| v == 0.0) {
                continue;
            }
            let mut r = vec![0.0; total];
            for j in 0..d {
                r[gcol(i, j)] = homog[j];
            }
            lp.push_ineq(r, 0.0);
        }
        for (row, rhs) in &cell.region.eq {
            let homog: Vec<f64> = row.iter().map(|v| v - rhs).collect();
            if homog.iter().all(|&v| v == 0.0) {
                continue;
            }
            let mut r = vec![0.0; total];
            for j in 0..d {
                r[gcol(i, j)] = homog[j];
            }
            lp.push_eq(r, 0.0);
        }
    }
    for j in 0..d {
        let mut r = vec![0.0; total];
        for i in 0..n {
            r[gcol(i, j)] = 1.0;
        }
        lp.push_eq(r, prior[j]);
    }

    let sol = solve_lp(&lp, tol)?;
    let primal = match sol.status {
        LpStatus::Optimal => sol.optimal().expect("optimal LP has primal").0,
        LpStatus::Infeasible => {
            return Err(Error::Domain(
                "partition does not cover the prior's beliefs".into(),
            ))
        }
        LpStatus::Unbounded => {
            return Err(Error::Numerical(
                "perspective LP reported unbounded on a compact feasible set".into(),
            ))
        }
    };

    let mut signals = Vec::new();
    let mut value = 0.0;
    let mut gross_cost = 0.0;
    for i in 0..n {
        let g: Vec<f64> = (0..d).map(|j| primal[gcol(i, j)].max(0.0)).collect();
        let p: f64 = g.iter().sum();
        let util = perspective_concave(&part.cells[i].utility, &g);
        let price = perspective_on_simplex(&cost_pieces, &g)?;
        value += util - price;
        gross_cost += price;
        if p > SIGNAL_DROP_TOL {
            signals.push(Signal {
                weight: p,
                posterior: g.iter().map(|v| v / p).collect(),
            });
        }
    }
    let baseline = cost_pieces
        .iter()
        .map(|p| p.eval(prior))
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(Experiment {
        signals,
        value,
        cost: gross_cost - baseline,
    })
}

/// Family of gross values and costs whose exact concavification encodes
/// maximum independent set.
///
/// Over a graph on `k` nodes the gross value is
/// `u*(σ) = Σ_i max{σ_i − Σ_{j ~ i} σ_j, 0}` and the cost potential is
/// `h(σ) = max{‖σ‖_∞ − 1/k, 0}`. The box maximum of `u*` equals the
/// independence number.
#[derive(Debug, Clone)]
pub struct HardnessFixture {
    pub graph: crate::graph::Graph,
    /// Explicit max-of-affines expansion of the gross value, emitted only
    /// for small node counts (one piece per node subset).
    pub utility_pieces: Option<Vec<AffineForm>>,
    pub cost: CostSpec,
}

/// Node-count ceiling for the explicit piece expansion.
const MAX_EXPANSION_NODES: usize = 12;

pub fn gen_concavification_hardness(graph: &crate::graph::Graph) -> Result<HardnessFixture> {
    let k = graph.nodes();
    if k == 0 {
        return Err(Error::Domain("hardness fixture needs a nonempty graph".into()));
    }
    let mut cost_pieces = Vec::with_capacity(k + 1);
    for i in 0..k {
        let mut coeffs = vec![0.0; k];
        coeffs[i] = 1.0;
        cost_pieces.push(AffineForm::new(coeffs, -1.0 / k as f64));
    }
    cost_pieces.push(AffineForm::constant(k, 0.0));
    let utility_pieces = if k <= MAX_EXPANSION_NODES {
        let mut pieces = Vec::with_capacity(1usize << k);
        for subset in 0u64..(1u64 << k) {
            pieces.push(subset_piece(graph, subset));
        }
        Some(pieces)
    } else {
        None
    };
    Ok(HardnessFixture {
        graph: graph.clone(),
        utility_pieces,
        cost: CostSpec::PiecewiseConvex(cost_pieces),
    })
}

/// Affine term `Σ_{i ∈ subset} (σ_i − Σ_{j ~ i} σ_j)`.
fn subset_piece(graph: &crate::graph::Graph, subset: u64) -> AffineForm {
    let k = graph.nodes();
    let mut coeffs = vec![0.0; k];
    for i in 0..k {
        if subset >> i & 1 == 1 {
            coeffs[i] += 1.0;
            let mask = graph.neighbors_mask(i);
            for j in 0..k {
                if mask >> j & 1 == 1 {
                    coeffs[j] -= 1.0;
                }
            }
        }
    }
    AffineForm::new(coeffs, 0.0)
}

impl HardnessFixture {
    pub fn dim(&self) -> usize {
        self.graph.nodes()
    }

    /// Pointwise gross value `Σ_i max{σ_i − Σ_{j ~ i} σ_j, 0}`.
    pub fn eval_utility(&self, sigma: &[f64]) -> f64 {
        let k = self.graph.nodes();
        let mut total = 0.0;
        for i in 0..k {
            let mut term = sigma[i];
            let mask = self.graph.neighbors_mask(i);
            for j in 0..k {
                if mask >> j & 1 == 1 {
                    term -= sigma[j];
                }
            }
            total += term.max(0.0);
        }
        total
    }

    /// Pointwise cost potential `max{‖σ‖_∞ − 1/k, 0}`.
    pub fn eval_cost(&self, sigma: &[f64]) -> Result<f64> {
        self.cost.eval(sigma)
    }

    /// Exact simplex maximum of `u* − h`.
    ///
    /// On each selection of positive-part terms the objective is affine
    /// minus a convex max, so concave; one small LP per node subset is
    /// exact and the outer max over subsets recovers `u*`.
    pub fn simplex_max_exact(&self, tol: f64) -> Result<f64> {
        let k = self.graph.nodes();
        if k > MAX_EXACT_NODES {
            return Err(Error::SizeLimit {
                detail: "exact simplex maximization node count".into(),
                limit: MAX_EXACT_NODES as u64,
                requested: k as u64,
            });
        }
        let mut best = f64::NEG_INFINITY;
        for subset in 0u64..(1u64 << k) {
            let piece = subset_piece(&self.graph, subset);
            // Variables: σ then the epigraph value of −h.
            let mut lp = LpProblem::new(k + 1);
            for j in 0..k {
                lp.objective[j] = piece.coeffs[j];
                lp.lower[j] = Some(0.0);
            }
            lp.objective[k] = 1.0;
            let mut sum_row = vec![1.0; k + 1];
            sum_row[k] = 0.0;
            lp.push_eq(sum_row, 1.0);
            for i in 0..k {
                let mut r = vec![0.0; k + 1];
                r[i] = 1.0;
                r[k] = 1.0;
                lp.push_ineq(r, 1.0 / k as f64);
            }
            let mut r = vec![0.0; k + 1];
            r[k] = 1.0;
            lp.push_ineq(r, 0.0);
            let sol = solve_lp(&lp, tol)?;
            if let Some((_, v)) = sol.optimal() {
                best = best.max(v);
            }
        }
        Ok(best)
    }

    /// Exact maximum of the gross value over the unit box. The value is
    /// convex, so vertex enumeration suffices.
    pub fn cube_max(&self) -> Result<f64> {
        let k = self.graph.nodes();
        if k > MAX_EXACT_NODES {
            return Err(Error::SizeLimit {
                detail: "cube vertex enumeration node count".into(),
                limit: MAX_EXACT_NODES as u64,
                requested: k as u64,
            });
        }
        let mut best = f64::NEG_INFINITY;
        let mut vertex = vec![0.0; k];
        for subset in 0u64..(1u64 << k) {
            for (i, v) in vertex.iter_mut().enumerate() {
                *v = (subset >> i & 1) as f64;
            }
            best = best.max(self.eval_utility(&vertex));
        }
        Ok(best)
    }
}
