//! Reductions of familiar design problems into the coordination form,
//! plus restricted-mechanism baselines and a hardness instance generator.
//!
//! Each reduction type carries the natural data of its problem and
//! converts into a [`PaInstance`] via `to_pa`. The restricted solvers
//! compute the best mechanism in two classical subclasses by assignment
//! enumeration: type-independent mechanisms (one public strategy, or one
//! public strategy distribution under supplemental constraints) and
//! action-independent mechanisms (one strategy per reported type, no
//! recommendation).

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::lp::{solve_lp, LpProblem, LpStatus};
use crate::model::{default_labels, AffineForm, ConcavePwl, PaInstance, Polyhedron};
use crate::solver::Tolerances;

/// Assignment-enumeration guard shared by the restricted solvers.
const MAX_ASSIGNMENTS: u64 = 1_000_000;
/// Column guard for the public-signal distribution LP.
const MAX_DISTRIBUTION_COLS: u64 = 200_000;

fn is_distribution(p: &[f64], tol: f64) -> bool {
    p.iter().all(|&v| v >= -tol && v.is_finite()) && (p.iter().sum::<f64>() - 1.0).abs() <= tol
}

/// Moral-hazard contract design with hidden action and typed agents.
///
/// The principal commits to an outcome-contingent payment vector, the
/// agent picks a costly action that draws an outcome, and limited
/// liability keeps payments nonnegative.
#[derive(Debug, Clone)]
pub struct ContractInstance {
    /// Principal's value per outcome.
    pub reward: Vec<f64>,
    /// Distribution over agent types.
    pub prior: Vec<f64>,
    /// `outcome_dist[ty][action][outcome]`.
    pub outcome_dist: Vec<Vec<Vec<f64>>>,
    /// `cost[ty][action]`.
    pub cost: Vec<Vec<f64>>,
}

impl ContractInstance {
    pub fn num_outcomes(&self) -> usize {
        self.reward.len()
    }

    pub fn validate(&self) -> Result<()> {
        let d = self.reward.len();
        if d == 0 {
            return Err(Error::Domain("contract needs at least one outcome".into()));
        }
        if !self.reward.iter().all(|r| r.is_finite()) {
            return Err(Error::Domain("rewards must be finite".into()));
        }
        if !is_distribution(&self.prior, 1e-9) {
            return Err(Error::Domain("type prior is not a distribution".into()));
        }
        let types = self.prior.len();
        if self.outcome_dist.len() != types || self.cost.len() != types {
            return Err(Error::Dimension {
                expected: types,
                got: self.outcome_dist.len().min(self.cost.len()),
            });
        }
        let actions = self.cost.first().map_or(0, Vec::len);
        if actions == 0 {
            return Err(Error::Domain("contract needs at least one action".into()));
        }
        for ty in 0..types {
            if self.outcome_dist[ty].len() != actions || self.cost[ty].len() != actions {
                return Err(Error::Domain(format!(
                    "type {ty} disagrees on the action count"
                )));
            }
            if !self.cost[ty].iter().all(|c| c.is_finite()) {
                return Err(Error::Domain("action costs must be finite".into()));
            }
            for (ac, dist) in self.outcome_dist[ty].iter().enumerate() {
                if dist.len() != d {
                    return Err(Error::Dimension {
                        expected: d,
                        got: dist.len(),
                    });
                }
                if !is_distribution(dist, 1e-12) {
                    return Err(Error::Domain(format!(
                        "outcome distribution for type {ty}, action {ac} is not a distribution"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Strategy space: payments x >= 0 per outcome. Principal gets the
    /// expected reward net of payments, the agent the expected payment
    /// net of the action cost.
    pub fn to_pa(&self) -> Result<PaInstance> {
        self.validate()?;
        let d = self.num_outcomes();
        let types = self.prior.len();
        let actions = self.cost[0].len();
        let mut principal = Vec::with_capacity(types);
        let mut agent = Vec::with_capacity(types);
        for ty in 0..types {
            let mut urow = Vec::with_capacity(actions);
            let mut vrow = Vec::with_capacity(actions);
            for ac in 0..actions {
                let dist = &self.outcome_dist[ty][ac];
                let expected_reward: f64 =
                    dist.iter().zip(&self.reward).map(|(p, r)| p * r).sum();
                let neg = dist.iter().map(|p| -p).collect();
                urow.push(ConcavePwl::affine(AffineForm::new(neg, expected_reward)));
                vrow.push(AffineForm::new(dist.clone(), -self.cost[ty][ac]));
            }
            principal.push(urow);
            agent.push(vrow);
        }
        Ok(PaInstance {
            prior: self.prior.clone(),
            dim: d,
            num_actions: actions,
            strategy_space: Polyhedron::nonneg_orthant(d),
            principal_utility: principal,
            agent_utility: agent,
            supplemental: None,
            type_labels: default_labels("type", types),
            action_labels: default_labels("action", actions),
        })
    }
}

/// Bayesian persuasion with typed receivers.
///
/// Strategies are posteriors over the state space; each type's menu must
/// average back to that type's prior belief (Bayes plausibility), which
/// enters as a supplemental constraint.
#[derive(Debug, Clone)]
pub struct PersuasionInstance {
    pub num_states: usize,
    /// Distribution over receiver types.
    pub prior: Vec<f64>,
    /// `beliefs[ty]` is the type's prior over states.
    pub beliefs: Vec<Vec<f64>>,
    /// `sender_utility[ty][state][action]`.
    pub sender_utility: Vec<Vec<Vec<f64>>>,
    /// `receiver_utility[ty][state][action]`.
    pub receiver_utility: Vec<Vec<Vec<f64>>>,
}

impl PersuasionInstance {
    pub fn num_actions(&self) -> usize {
        self.sender_utility
            .first()
            .and_then(|m| m.first())
            .map_or(0, Vec::len)
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_states == 0 {
            return Err(Error::Domain("persuasion needs at least one state".into()));
        }
        if !is_distribution(&self.prior, 1e-9) {
            return Err(Error::Domain("type prior is not a distribution".into()));
        }
        let types = self.prior.len();
        let actions = self.num_actions();
        if actions == 0 {
            return Err(Error::Domain("persuasion needs at least one action".into()));
        }
        if self.beliefs.len() != types
            || self.sender_utility.len() != types
            || self.receiver_utility.len() != types
        {
            return Err(Error::Domain(
                "beliefs and utilities must cover every type".into(),
            ));
        }
        for ty in 0..types {
            if self.beliefs[ty].len() != self.num_states
                || !is_distribution(&self.beliefs[ty], 1e-12)
            {
                return Err(Error::Domain(format!(
                    "belief of type {ty} is not a state distribution"
                )));
            }
            for mat in [&self.sender_utility[ty], &self.receiver_utility[ty]] {
                if mat.len() != self.num_states
                    || mat.iter().any(|row| row.len() != actions)
                    || mat.iter().flatten().any(|v| !v.is_finite())
                {
                    return Err(Error::Domain(format!(
                        "utility matrix of type {ty} is not a finite {} x {actions} matrix",
                        self.num_states
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn to_pa(&self) -> Result<PaInstance> {
        self.validate()?;
        let types = self.prior.len();
        let actions = self.num_actions();
        let mut principal = Vec::with_capacity(types);
        let mut agent = Vec::with_capacity(types);
        let mut supplemental = Vec::with_capacity(types);
        for ty in 0..types {
            let mut urow = Vec::with_capacity(actions);
            let mut vrow = Vec::with_capacity(actions);
            for ac in 0..actions {
                let ucol: Vec<f64> = (0..self.num_states)
                    .map(|w| self.sender_utility[ty][w][ac])
                    .collect();
                let vcol: Vec<f64> = (0..self.num_states)
                    .map(|w| self.receiver_utility[ty][w][ac])
                    .collect();
                urow.push(ConcavePwl::affine(AffineForm::new(ucol, 0.0)));
                vrow.push(AffineForm::new(vcol, 0.0));
            }
            principal.push(urow);
            agent.push(vrow);
            supplemental.push(Polyhedron::singleton(&self.beliefs[ty]));
        }
        Ok(PaInstance {
            prior: self.prior.clone(),
            dim: self.num_states,
            num_actions: actions,
            strategy_space: Polyhedron::simplex(self.num_states),
            principal_utility: principal,
            agent_utility: agent,
            supplemental: Some(supplemental),
            type_labels: default_labels("type", types),
            action_labels: default_labels("action", actions),
        })
    }

    /// Sender value when no information is revealed: each type keeps its
    /// prior belief, best-responds to it, and ties break toward the
    /// sender.
    pub fn no_information_value(&self, tol: f64) -> Result<f64> {
        self.validate()?;
        let actions = self.num_actions();
        let mut total = 0.0;
        for ty in 0..self.prior.len() {
            let recv = |ac: usize| -> f64 {
                (0..self.num_states)
                    .map(|w| self.beliefs[ty][w] * self.receiver_utility[ty][w][ac])
                    .sum()
            };
            let send = |ac: usize| -> f64 {
                (0..self.num_states)
                    .map(|w| self.beliefs[ty][w] * self.sender_utility[ty][w][ac])
                    .sum()
            };
            let best = (0..actions).map(recv).fold(f64::NEG_INFINITY, f64::max);
            let value = (0..actions)
                .filter(|&ac| recv(ac) >= best - tol)
                .map(send)
                .fold(f64::NEG_INFINITY, f64::max);
            total += self.prior[ty] * value;
        }
        Ok(total)
    }
}

/// Bayesian Stackelberg game: the leader commits to a mixed strategy, a
/// privately typed follower responds.
#[derive(Debug, Clone)]
pub struct StackelbergInstance {
    pub num_leader_actions: usize,
    pub prior: Vec<f64>,
    /// `leader_utility[ty][leader_action][follower_action]`.
    pub leader_utility: Vec<Vec<Vec<f64>>>,
    /// `follower_utility[ty][leader_action][follower_action]`.
    pub follower_utility: Vec<Vec<Vec<f64>>>,
}

impl StackelbergInstance {
    pub fn num_follower_actions(&self) -> usize {
        self.leader_utility
            .first()
            .and_then(|m| m.first())
            .map_or(0, Vec::len)
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_leader_actions == 0 {
            return Err(Error::Domain("leader needs at least one action".into()));
        }
        if !is_distribution(&self.prior, 1e-9) {
            return Err(Error::Domain("type prior is not a distribution".into()));
        }
        let types = self.prior.len();
        let fa = self.num_follower_actions();
        if fa == 0 {
            return Err(Error::Domain("follower needs at least one action".into()));
        }
        if self.leader_utility.len() != types || self.follower_utility.len() != types {
            return Err(Error::Domain("utilities must cover every type".into()));
        }
        for ty in 0..types {
            for mat in [&self.leader_utility[ty], &self.follower_utility[ty]] {
                if mat.len() != self.num_leader_actions
                    || mat.iter().any(|row| row.len() != fa)
                    || mat.iter().flatten().any(|v| !v.is_finite())
                {
                    return Err(Error::Domain(format!(
                        "payoff matrix of type {ty} is not finite {} x {fa}",
                        self.num_leader_actions
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn to_pa(&self) -> Result<PaInstance> {
        self.validate()?;
        let types = self.prior.len();
        let fa = self.num_follower_actions();
        let d = self.num_leader_actions;
        let mut principal = Vec::with_capacity(types);
        let mut agent = Vec::with_capacity(types);
        for ty in 0..types {
            let mut urow = Vec::with_capacity(fa);
            let mut vrow = Vec::with_capacity(fa);
            for ac in 0..fa {
                let ucol: Vec<f64> = (0..d).map(|i| self.leader_utility[ty][i][ac]).collect();
                let vcol: Vec<f64> = (0..d).map(|i| self.follower_utility[ty][i][ac]).collect();
                urow.push(ConcavePwl::affine(AffineForm::new(ucol, 0.0)));
                vrow.push(AffineForm::new(vcol, 0.0));
            }
            principal.push(urow);
            agent.push(vrow);
        }
        Ok(PaInstance {
            prior: self.prior.clone(),
            dim: d,
            num_actions: fa,
            strategy_space: Polyhedron::simplex(d),
            principal_utility: principal,
            agent_utility: agent,
            supplemental: None,
            type_labels: default_labels("type", types),
            action_labels: default_labels("action", fa),
        })
    }
}

/// Selling information to a privately typed buyer.
///
/// The seller observes the state and offers a menu of experiments with
/// prices; a strategy is a posterior bundled with a payment coordinate.
/// Without any participation anchor the revenue is unbounded (all prices
/// shift together), so `null_anchor` appends a zero-prior type with
/// worthless information whose menu is forced free; misreporting to it
/// caps every real type's price at their value of information.
#[derive(Debug, Clone)]
pub struct SellingInfoInstance {
    pub num_states: usize,
    /// Common prior over states.
    pub state_prior: Vec<f64>,
    /// Distribution over buyer types.
    pub prior: Vec<f64>,
    /// `buyer_utility[ty][state][action]`.
    pub buyer_utility: Vec<Vec<Vec<f64>>>,
    /// Append the free-menu anchor type enforcing participation.
    pub null_anchor: bool,
}

impl SellingInfoInstance {
    pub fn num_actions(&self) -> usize {
        self.buyer_utility
            .first()
            .and_then(|m| m.first())
            .map_or(0, Vec::len)
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_states == 0 {
            return Err(Error::Domain("selling info needs at least one state".into()));
        }
        if self.state_prior.len() != self.num_states || !is_distribution(&self.state_prior, 1e-12)
        {
            return Err(Error::Domain("state prior is not a distribution".into()));
        }
        if !is_distribution(&self.prior, 1e-9) {
            return Err(Error::Domain("type prior is not a distribution".into()));
        }
        let actions = self.num_actions();
        if actions == 0 {
            return Err(Error::Domain("buyer needs at least one action".into()));
        }
        if self.buyer_utility.len() != self.prior.len() {
            return Err(Error::Domain("utilities must cover every type".into()));
        }
        for (ty, mat) in self.buyer_utility.iter().enumerate() {
            if mat.len() != self.num_states
                || mat.iter().any(|row| row.len() != actions)
                || mat.iter().flatten().any(|v| !v.is_finite())
            {
                return Err(Error::Domain(format!(
                    "utility matrix of type {ty} is not finite {} x {actions}",
                    self.num_states
                )));
            }
        }
        Ok(())
    }

    /// Strategy layout: coordinates `0..num_states` hold the posterior,
    /// the last coordinate the payment.
    pub fn to_pa(&self) -> Result<PaInstance> {
        self.validate()?;
        let n = self.num_states;
        let d = n + 1;
        let actions = self.num_actions();
        let real_types = self.prior.len();
        let types = real_types + usize::from(self.null_anchor);

        let mut space = Polyhedron::new(d);
        let mut simplex_row = vec![1.0; d];
        simplex_row[n] = 0.0;
        space.push_eq(simplex_row, 1.0);
        for i in 0..d {
            let mut row = vec![0.0; d];
            row[i] = -1.0;
            space.push_ineq(row, 0.0);
        }

        let mut prior = self.prior.clone();
        let mut principal = Vec::with_capacity(types);
        let mut agent = Vec::with_capacity(types);
        let mut supplemental = Vec::with_capacity(types);
        let mut price_coeff = vec![0.0; d];
        price_coeff[n] = 1.0;
        for ty in 0..types {
            let mut urow = Vec::with_capacity(actions);
            let mut vrow = Vec::with_capacity(actions);
            for ac in 0..actions {
                urow.push(ConcavePwl::affine(AffineForm::new(
                    price_coeff.clone(),
                    0.0,
                )));
                let mut vcol = vec![0.0; d];
                if ty < real_types {
                    for w in 0..n {
                        vcol[w] = self.buyer_utility[ty][w][ac];
                    }
                }
                vcol[n] = -1.0;
                vrow.push(AffineForm::new(vcol, 0.0));
            }
            principal.push(urow);
            agent.push(vrow);
            let mut cset = Polyhedron::new(d);
            for w in 0..n {
                let mut row = vec![0.0; d];
                row[w] = 1.0;
                cset.push_eq(row, self.state_prior[w]);
            }
            if ty >= real_types {
                // The anchor's menu carries no payments at all.
                let mut row = vec![0.0; d];
                row[n] = 1.0;
                cset.push_eq(row, 0.0);
            }
            supplemental.push(cset);
        }
        if self.null_anchor {
            prior.push(0.0);
        }
        let mut type_labels = default_labels("type", real_types);
        if self.null_anchor {
            type_labels.push("null".to_string());
        }
        Ok(PaInstance {
            prior,
            dim: d,
            num_actions: actions,
            strategy_space: space,
            principal_utility: principal,
            agent_utility: agent,
            supplemental: Some(supplemental),
            type_labels,
            action_labels: default_labels("action", actions),
        })
    }
}

/// One atom of a public-signal mechanism: a strategy drawn with some
/// probability and the action each type takes in response.
#[derive(Debug, Clone)]
pub struct PublicSignal {
    pub weight: f64,
    pub strategy: Vec<f64>,
    pub responses: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct TypeIndependentResult {
    pub value: f64,
    pub support: Vec<PublicSignal>,
}

#[derive(Debug, Clone)]
pub struct ActionIndependentResult {
    pub value: f64,
    /// `strategies[ty]` is the strategy handed to a type reporting `ty`.
    pub strategies: Vec<Vec<f64>>,
    /// `responses[ty]` is the action type `ty` takes.
    pub responses: Vec<usize>,
}

fn assignment_count(actions: usize, types: usize) -> Result<u64> {
    let mut count: u64 = 1;
    for _ in 0..types {
        count = count.saturating_mul(actions as u64);
        if count > MAX_ASSIGNMENTS {
            return Err(Error::SizeLimit {
                detail: "best-response assignment count".into(),
                limit: MAX_ASSIGNMENTS,
                requested: count,
            });
        }
    }
    Ok(count)
}

fn next_assignment(assignment: &mut [usize], actions: usize) -> bool {
    for slot in assignment.iter_mut().rev() {
        *slot += 1;
        if *slot < actions {
            return true;
        }
        *slot = 0;
    }
    false
}

/// Best type-independent coordination mechanism.
///
/// Without supplemental constraints a single public strategy is optimal:
/// enumerate the possible best-response assignments and solve one small
/// LP each, keeping the most profitable feasible one. With supplemental
/// constraints the mechanism is a public distribution over strategies;
/// the LP then optimizes one perspective block (weight, weighted
/// strategy) per assignment, tied together by the per-type aggregate
/// rows.
pub fn solve_type_independent(
    inst: &PaInstance,
    tols: &Tolerances,
) -> Result<TypeIndependentResult> {
    let report = inst.validate();
    if !report.ok {
        return Err(Error::Domain(format!(
            "instance failed validation: {}",
            report.issues.join("; ")
        )));
    }
    let types = inst.num_types();
    let actions = inst.num_actions;
    assignment_count(actions, types)?;
    if inst.supplemental.is_none() {
        solve_type_independent_point(inst, tols)
    } else {
        solve_type_independent_distribution(inst, tols)
    }
}

fn solve_type_independent_point(
    inst: &PaInstance,
    tols: &Tolerances,
) -> Result<TypeIndependentResult> {
    let types = inst.num_types();
    let actions = inst.num_actions;
    let d = inst.dim;
    let mut best: Option<(f64, Vec<f64>, Vec<usize>)> = None;
    let mut assignment = vec![0usize; types];
    let mut unbounded_somewhere = false;
    loop {
        // Variables: strategy coordinates then one epigraph value per type.
        let mut lp = LpProblem::new(d + types);
        for ty in 0..types {
            lp.objective[d + ty] = inst.prior[ty];
        }
        for (row, rhs) in &inst.strategy_space.ineq {
            let mut r = row.clone();
            r.resize(d + types, 0.0);
            lp.push_ineq(r, *rhs);
        }
        for (row, rhs) in &inst.strategy_space.eq {
            let mut r = row.clone();
            r.resize(d + types, 0.0);
            lp.push_eq(r, *rhs);
        }
        for ty in 0..types {
            let chosen = assignment[ty];
            for piece in inst.principal_utility[ty][chosen].pieces() {
                let mut r = vec![0.0; d + types];
                r[d + ty] = 1.0;
                for i in 0..d {
                    r[i] = -piece.coeffs[i];
                }
                lp.push_ineq(r, piece.offset);
            }
            for alt in 0..actions {
                if alt == chosen {
                    continue;
                }
                let mut r = vec![0.0; d + types];
                for i in 0..d {
                    r[i] = inst.agent_utility[ty][alt].coeffs[i]
                        - inst.agent_utility[ty][chosen].coeffs[i];
                }
                lp.push_ineq(
                    r,
                    inst.agent_utility[ty][chosen].offset - inst.agent_utility[ty][alt].offset,
                );
            }
        }
        let sol = solve_lp(&lp, tols.lp)?;
        match sol.status {
            LpStatus::Optimal => {
                let (primal, value) = sol.optimal().expect("optimal LP has primal");
                if best.as_ref().map_or(true, |(v, _, _)| value > *v) {
                    best = Some((value, primal[..d].to_vec(), assignment.clone()));
                }
            }
            LpStatus::Infeasible => {}
            LpStatus::Unbounded => unbounded_somewhere = true,
        }
        if !next_assignment(&mut assignment, actions) {
            break;
        }
    }
    if unbounded_somewhere {
        return Err(Error::UnboundedUtility);
    }
    let Some((value, strategy, responses)) = best else {
        return Err(Error::Infeasible(
            "no best-response assignment is consistent; the strategy space is likely empty".into(),
        ));
    };
    Ok(TypeIndependentResult {
        value,
        support: vec![PublicSignal {
            weight: 1.0,
            strategy,
            responses,
        }],
    })
}

fn solve_type_independent_distribution(
    inst: &PaInstance,
    tols: &Tolerances,
) -> Result<TypeIndependentResult> {
    let types = inst.num_types();
    let actions = inst.num_actions;
    let d = inst.dim;
    let blocks = assignment_count(actions, types)? as usize;
    let block_width = 1 + d + types;
    let total = blocks * block_width;
    if total as u64 > MAX_DISTRIBUTION_COLS {
        return Err(Error::SizeLimit {
            detail: "public-signal LP column count".into(),
            limit: MAX_DISTRIBUTION_COLS,
            requested: total as u64,
        });
    }
    let weight_col = |b: usize| b * block_width;
    let strat_col = |b: usize, i: usize| b * block_width + 1 + i;
    let epi_col = |b: usize, ty: usize| b * block_width + 1 + d + ty;

    let mut assignments = Vec::with_capacity(blocks);
    let mut assignment = vec![0usize; types];
    loop {
        assignments.push(assignment.clone());
        if !next_assignment(&mut assignment, actions) {
            break;
        }
    }

    let mut lp = LpProblem::new(total);
    for (b, sigma) in assignments.iter().enumerate() {
        lp.lower[weight_col(b)] = Some(0.0);
        lp.upper[weight_col(b)] = Some(1.0);
        for ty in 0..types {
            lp.objective[epi_col(b, ty)] = inst.prior[ty];
        }
        for (row, rhs) in &inst.strategy_space.ineq {
            let mut r = vec![0.0; total];
            r[weight_col(b)] = -rhs;
            for i in 0..d {
                r[strat_col(b, i)] = row[i];
            }
            lp.push_ineq(r, 0.0);
        }
        for (row, rhs) in &inst.strategy_space.eq {
            let mut r = vec![0.0; total];
            r[weight_col(b)] = -rhs;
            for i in 0..d {
                r[strat_col(b, i)] = row[i];
            }
            lp.push_eq(r, 0.0);
        }
        for ty in 0..types {
            let chosen = sigma[ty];
            for piece in inst.principal_utility[ty][chosen].pieces() {
                let mut r = vec![0.0; total];
                r[epi_col(b, ty)] = 1.0;
                r[weight_col(b)] = -piece.offset;
                for i in 0..d {
                    r[strat_col(b, i)] = -piece.coeffs[i];
                }
                lp.push_ineq(r, 0.0);
            }
            for alt in 0..actions {
                if alt == chosen {
                    continue;
                }
                let mut r = vec![0.0; total];
                r[weight_col(b)] = inst.agent_utility[ty][alt].offset
                    - inst.agent_utility[ty][chosen].offset;
                for i in 0..d {
                    r[strat_col(b, i)] = inst.agent_utility[ty][alt].coeffs[i]
                        - inst.agent_utility[ty][chosen].coeffs[i];
                }
                lp.push_ineq(r, 0.0);
            }
        }
    }
    let mut norm = vec![0.0; total];
    for b in 0..blocks {
        norm[weight_col(b)] = 1.0;
    }
    lp.push_eq(norm, 1.0);
    if let Some(supp) = &inst.supplemental {
        for cset in supp {
            for (row, rhs) in &cset.ineq {
                let mut r = vec![0.0; total];
                for b in 0..blocks {
                    for i in 0..d {
                        r[strat_col(b, i)] += row[i];
                    }
                }
                lp.push_ineq(r, *rhs);
            }
            for (row, rhs) in &cset.eq {
                let mut r = vec![0.0; total];
                for b in 0..blocks {
                    for i in 0..d {
                        r[strat_col(b, i)] += row[i];
                    }
                }
                lp.push_eq(r, *rhs);
            }
        }
    }
    let sol = solve_lp(&lp, tols.lp)?;
    match sol.status {
        LpStatus::Optimal => {}
        LpStatus::Infeasible => {
            return Err(Error::Infeasible(
                "no public distribution satisfies every type's supplemental constraints".into(),
            ))
        }
        LpStatus::Unbounded => return Err(Error::UnboundedUtility),
    }
    let (primal, value) = sol.optimal().expect("optimal LP has primal");
    let mut support = Vec::new();
    for (b, sigma) in assignments.iter().enumerate() {
        let weight = primal[weight_col(b)];
        if weight > tols.irregular_prob {
            let strategy: Vec<f64> = (0..d).map(|i| primal[strat_col(b, i)] / weight).collect();
            support.push(PublicSignal {
                weight,
                strategy,
                responses: sigma.clone(),
            });
        }
    }
    Ok(TypeIndependentResult { value, support })
}

/// Best action-independent mechanism: one strategy per reported type, the
/// agent free to best-respond.
///
/// Searches best-response assignments with branch and bound. Partial
/// assignments are bounded by per-(type, action) relaxation LPs and
/// filtered through cached pairwise-feasibility probes (a necessary
/// condition for the joint LP); surviving full assignments get the exact
/// joint LP over all per-type strategies. The result matches exhaustive
/// enumeration.
pub fn solve_action_independent(
    inst: &PaInstance,
    tols: &Tolerances,
) -> Result<ActionIndependentResult> {
    let report = inst.validate();
    if !report.ok {
        return Err(Error::Domain(format!(
            "instance failed validation: {}",
            report.issues.join("; ")
        )));
    }
    let types = inst.num_types();
    let actions = inst.num_actions;
    assignment_count(actions, types)?;

    // Relaxed per-entry bound: the best value a type alone can contribute
    // when told to take this action. None marks an unboundable entry.
    let mut entry_bound = vec![vec![Some(f64::NEG_INFINITY); actions]; types];
    for ty in 0..types {
        for ac in 0..actions {
            let lp = single_type_lp(inst, ty, ac);
            let sol = solve_lp(&lp, tols.lp)?;
            entry_bound[ty][ac] = match sol.status {
                LpStatus::Optimal => Some(sol.objective.expect("optimal LP has objective")),
                LpStatus::Infeasible => Some(f64::NEG_INFINITY),
                LpStatus::Unbounded => None,
            };
        }
    }
    let weighted_bound = |ty: usize, ac: usize| -> f64 {
        match entry_bound[ty][ac] {
            Some(v) if v == f64::NEG_INFINITY => f64::NEG_INFINITY,
            Some(v) => {
                if inst.prior[ty] == 0.0 {
                    0.0
                } else {
                    inst.prior[ty] * v
                }
            }
            None => f64::INFINITY,
        }
    };

    let mut search = AssignmentSearch {
        inst,
        tols,
        pair_cache: HashMap::new(),
        best: None,
        unbounded: false,
    };
    let mut assignment = vec![usize::MAX; types];
    search.descend(0, 0.0, &mut assignment, &weighted_bound)?;
    if search.unbounded {
        return Err(Error::UnboundedUtility);
    }
    let Some((value, strategies, responses)) = search.best else {
        return Err(Error::Infeasible(
            "no action-independent mechanism satisfies the cross-type constraints".into(),
        ));
    };
    Ok(ActionIndependentResult {
        value,
        strategies,
        responses,
    })
}

/// LP bounding one type's contribution: its strategy alone, membership
/// and supplemental rows, obedience for the chosen action.
fn single_type_lp(inst: &PaInstance, ty: usize, ac: usize) -> LpProblem {
    let d = inst.dim;
    let mut lp = LpProblem::new(d + 1);
    lp.objective[d] = 1.0;
    for (row, rhs) in &inst.strategy_space.ineq {
        let mut r = row.clone();
        r.push(0.0);
        lp.push_ineq(r, *rhs);
    }
    for (row, rhs) in &inst.strategy_space.eq {
        let mut r = row.clone();
        r.push(0.0);
        lp.push_eq(r, *rhs);
    }
    if let Some(supp) = &inst.supplemental {
        for (row, rhs) in &supp[ty].ineq {
            let mut r = row.clone();
            r.push(0.0);
            lp.push_ineq(r, *rhs);
        }
        for (row, rhs) in &supp[ty].eq {
            let mut r = row.clone();
            r.push(0.0);
            lp.push_eq(r, *rhs);
        }
    }
    for piece in inst.principal_utility[ty][ac].pieces() {
        let mut r: Vec<f64> = piece.coeffs.iter().map(|c| -c).collect();
        r.push(1.0);
        lp.push_ineq(r, piece.offset);
    }
    for alt in 0..inst.num_actions {
        if alt == ac {
            continue;
        }
        let mut r: Vec<f64> = (0..d)
            .map(|i| inst.agent_utility[ty][alt].coeffs[i] - inst.agent_utility[ty][ac].coeffs[i])
            .collect();
        r.push(0.0);
        lp.push_ineq(
            r,
            inst.agent_utility[ty][ac].offset - inst.agent_utility[ty][alt].offset,
        );
    }
    lp
}

struct AssignmentSearch<'a> {
    inst: &'a PaInstance,
    tols: &'a Tolerances,
    pair_cache: HashMap<(usize, usize, usize, usize), bool>,
    best: Option<(f64, Vec<Vec<f64>>, Vec<usize>)>,
    unbounded: bool,
}

impl<'a> AssignmentSearch<'a> {
    fn descend(
        &mut self,
        ty: usize,
        committed: f64,
        assignment: &mut Vec<usize>,
        weighted_bound: &dyn Fn(usize, usize) -> f64,
    ) -> Result<()> {
        let types = self.inst.num_types();
        let actions = self.inst.num_actions;
        if ty == types {
            let full: Vec<usize> = assignment.clone();
            return self.evaluate_leaf(&full);
        }
        // Optimistic completion: each remaining type takes its best entry
        // among those pairwise-compatible with everything committed.
        let mut optimistic = committed;
        for rest in ty..types {
            let mut best_entry = f64::NEG_INFINITY;
            for ac in 0..actions {
                let b = weighted_bound(rest, ac);
                if b == f64::NEG_INFINITY {
                    continue;
                }
                if !self.compatible_with_committed(rest, ac, &assignment[..ty])? {
                    continue;
                }
                best_entry = best_entry.max(b);
            }
            optimistic += best_entry;
            if optimistic == f64::NEG_INFINITY {
                return Ok(());
            }
        }
        if let Some((incumbent, _, _)) = &self.best {
            if optimistic <= *incumbent + 1e-12 {
                return Ok(());
            }
        }
        // Try actions in bound order so good incumbents appear early.
        let mut order: Vec<usize> = (0..actions).collect();
        order.sort_by(|&x, &y| {
            weighted_bound(ty, y)
                .partial_cmp(&weighted_bound(ty, x))
                .unwrap_or(std::cmp::Ordering::Equal)
                .then(x.cmp(&y))
        });
        for ac in order {
            if weighted_bound(ty, ac) == f64::NEG_INFINITY {
                continue;
            }
            if !self.compatible_with_committed(ty, ac, &assignment[..ty])? {
                continue;
            }
            assignment[ty] = ac;
            // Entries bounded below by -inf were skipped above, so this sum
            // is never NaN; a +inf entry keeps the whole branch alive.
            let next = committed + weighted_bound(ty, ac);
            self.descend(ty + 1, next, assignment, weighted_bound)?;
            assignment[ty] = usize::MAX;
        }
        Ok(())
    }

    fn compatible_with_committed(
        &mut self,
        ty: usize,
        ac: usize,
        committed: &[usize],
    ) -> Result<bool> {
        for (other, &oac) in committed.iter().enumerate() {
            if !self.pair_feasible(other, oac, ty, ac)? {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// Necessary condition: the two-type subproblem with both cross-IC
    /// directions admits a solution.
    fn pair_feasible(&mut self, t1: usize, a1: usize, t2: usize, a2: usize) -> Result<bool> {
        let key = if t1 < t2 {
            (t1, a1, t2, a2)
        } else {
            (t2, a2, t1, a1)
        };
        if let Some(&cached) = self.pair_cache.get(&key) {
            return Ok(cached);
        }
        let (t1, a1, t2, a2) = key;
        let inst = self.inst;
        let d = inst.dim;
        let mut lp = LpProblem::new(2 * d);
        for (slot, &(ty, ac)) in [(t1, a1), (t2, a2)].iter().enumerate() {
            let off = slot * d;
            for (row, rhs) in &inst.strategy_space.ineq {
                let mut r = vec![0.0; 2 * d];
                r[off..off + d].copy_from_slice(row);
                lp.push_ineq(r, *rhs);
            }
            for (row, rhs) in &inst.strategy_space.eq {
                let mut r = vec![0.0; 2 * d];
                r[off..off + d].copy_from_slice(row);
                lp.push_eq(r, *rhs);
            }
            if let Some(supp) = &inst.supplemental {
                for (row, rhs) in &supp[ty].ineq {
                    let mut r = vec![0.0; 2 * d];
                    r[off..off + d].copy_from_slice(row);
                    lp.push_ineq(r, *rhs);
                }
                for (row, rhs) in &supp[ty].eq {
                    let mut r = vec![0.0; 2 * d];
                    r[off..off + d].copy_from_slice(row);
                    lp.push_eq(r, *rhs);
                }
            }
            for alt in 0..inst.num_actions {
                if alt == ac {
                    continue;
                }
                let mut r = vec![0.0; 2 * d];
                for i in 0..d {
                    r[off + i] =
                        inst.agent_utility[ty][alt].coeffs[i] - inst.agent_utility[ty][ac].coeffs[i];
                }
                lp.push_ineq(
                    r,
                    inst.agent_utility[ty][ac].offset - inst.agent_utility[ty][alt].offset,
                );
            }
        }
        // Cross misreports, both directions.
        for (me, my_ac, their_off) in [(t1, a1, d), (t2, a2, 0usize)] {
            let my_off = if their_off == 0 { d } else { 0 };
            for alt in 0..inst.num_actions {
                let mut r = vec![0.0; 2 * d];
                for i in 0..d {
                    r[their_off + i] += inst.agent_utility[me][alt].coeffs[i];
                    r[my_off + i] -= inst.agent_utility[me][my_ac].coeffs[i];
                }
                lp.push_ineq(
                    r,
                    inst.agent_utility[me][my_ac].offset - inst.agent_utility[me][alt].offset,
                );
            }
        }
        let sol = solve_lp(&lp, self.tols.lp)?;
        let feasible = !matches!(sol.status, LpStatus::Infeasible);
        self.pair_cache.insert(key, feasible);
        Ok(feasible)
    }

    fn evaluate_leaf(&mut self, assignment: &[usize]) -> Result<()> {
        let inst = self.inst;
        let types = inst.num_types();
        let actions = inst.num_actions;
        let d = inst.dim;
        // Variables: per-type strategies then per-type epigraph values.
        let total = types * d + types;
        let strat = |ty: usize, i: usize| ty * d + i;
        let epi = |ty: usize| types * d + ty;
        let mut lp = LpProblem::new(total);
        for ty in 0..types {
            lp.objective[epi(ty)] = inst.prior[ty];
            for (row, rhs) in &inst.strategy_space.ineq {
                let mut r = vec![0.0; total];
                r[strat(ty, 0)..strat(ty, 0) + d].copy_from_slice(row);
                lp.push_ineq(r, *rhs);
            }
            for (row, rhs) in &inst.strategy_space.eq {
                let mut r = vec![0.0; total];
                r[strat(ty, 0)..strat(ty, 0) + d].copy_from_slice(row);
                lp.push_eq(r, *rhs);
            }
            if let Some(supp) = &inst.supplemental {
                for (row, rhs) in &supp[ty].ineq {
                    let mut r = vec![0.0; total];
                    r[strat(ty, 0)..strat(ty, 0) + d].copy_from_slice(row);
                    lp.push_ineq(r, *rhs);
                }
                for (row, rhs) in &supp[ty].eq {
                    let mut r = vec![0.0; total];
                    r[strat(ty, 0)..strat(ty, 0) + d].copy_from_slice(row);
                    lp.push_eq(r, *rhs);
                }
            }
            let chosen = assignment[ty];
            for piece in inst.principal_utility[ty][chosen].pieces() {
                let mut r = vec![0.0; total];
                r[epi(ty)] = 1.0;
                for i in 0..d {
                    r[strat(ty, i)] = -piece.coeffs[i];
                }
                lp.push_ineq(r, piece.offset);
            }
            for alt in 0..actions {
                if alt == chosen {
                    continue;
                }
                let mut r = vec![0.0; total];
                for i in 0..d {
                    r[strat(ty, i)] = inst.agent_utility[ty][alt].coeffs[i]
                        - inst.agent_utility[ty][chosen].coeffs[i];
                }
                lp.push_ineq(
                    r,
                    inst.agent_utility[ty][chosen].offset - inst.agent_utility[ty][alt].offset,
                );
            }
        }
        // Truth-telling across types: deviating to another report and then
        // best-responding cannot beat the assigned utility.
        for ty in 0..types {
            let mine = assignment[ty];
            for rep in 0..types {
                if rep == ty {
                    continue;
                }
                for alt in 0..actions {
                    let mut r = vec![0.0; total];
                    for i in 0..d {
                        r[strat(rep, i)] += inst.agent_utility[ty][alt].coeffs[i];
                        r[strat(ty, i)] -= inst.agent_utility[ty][mine].coeffs[i];
                    }
                    lp.push_ineq(
                        r,
                        inst.agent_utility[ty][mine].offset - inst.agent_utility[ty][alt].offset,
                    );
                }
            }
        }
        let sol = solve_lp(&lp, self.tols.lp)?;
        match sol.status {
            LpStatus::Infeasible => Ok(()),
            LpStatus::Unbounded => {
                self.unbounded = true;
                Ok(())
            }
            LpStatus::Optimal => {
                let (primal, value) = sol.optimal().expect("optimal LP has primal");
                if self.best.as_ref().map_or(true, |(v, _, _)| value > *v) {
                    let strategies: Vec<Vec<f64>> = (0..types)
                        .map(|ty| primal[strat(ty, 0)..strat(ty, 0) + d].to_vec())
                        .collect();
                    self.best = Some((value, strategies, assignment.to_vec()));
                }
                Ok(())
            }
        }
    }
}

/// Bayesian Stackelberg family whose action-independent optimum encodes
/// maximum independent set.
///
/// One follower type per vertex, leader actions a_v and b_v per vertex.
/// The follower can be steered to the leader-preferred first action only
/// by the pure strategy on the own-vertex action a_v, and two adjacent
/// vertices' pure strategies tempt each other's types into misreporting,
/// so the profitable report set must be independent.
pub fn gen_stackelberg_hardness(graph: &Graph) -> Result<StackelbergInstance> {
    let k = graph.nodes();
    if k == 0 {
        return Err(Error::Domain("hardness generator needs a nonempty graph".into()));
    }
    let d = 2 * k;
    let mut leader = Vec::with_capacity(k);
    let mut follower = Vec::with_capacity(k);
    for v in 0..k {
        let mut lmat = Vec::with_capacity(d);
        let mut fmat = Vec::with_capacity(d);
        for i in 0..d {
            lmat.push(vec![1.0, 0.0, 0.0]);
            let row = if i == v {
                [0.1, 0.1, 0.1]
            } else if i == k + v {
                [0.0, 1.0, 1.0]
            } else if i < k && graph.are_adjacent(v, i) {
                [0.5, 0.0, 1.0]
            } else {
                [0.0, 0.0, 0.1]
            };
            fmat.push(row.to_vec());
        }
        leader.push(lmat);
        follower.push(fmat);
    }
    Ok(StackelbergInstance {
        num_leader_actions: d,
        prior: vec![1.0 / k as f64; k],
        leader_utility: leader,
        follower_utility: follower,
    })
}
