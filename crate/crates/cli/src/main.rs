//! Batch front end for the coordination-mechanism solvers.
//!
//! Instances travel as JSON files with a `schema_version`, a `kind` tag and
//! a kind-specific `payload`. Three subcommands cover the suite: `solve`
//! computes an optimal mechanism for a chosen mechanism class, `acquire`
//! solves costly information acquisition over a best-response partition,
//! and `verify` replays a solution against an independent reference.
//!
//! Exit codes: 0 success, 1 malformed input or validation failure, 2 no
//! feasible mechanism, 3 unbounded utility, 4 instance over the size
//! limits, 5 verification mismatch.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use pa_coord::apps::{
    gen_stackelberg_hardness, solve_action_independent, solve_type_independent, ContractInstance,
    PersuasionInstance, SellingInfoInstance, StackelbergInstance,
};
use pa_coord::graph::Graph;
use pa_coord::info::{
    entropy_gap, partition_costly_persuasion, partition_decision_problem, solve_info_acquisition,
    CostSpec,
};
use pa_coord::model::{AffineForm, ConcavePwl, PaInstance, Polyhedron};
use pa_coord::oracles::{brute_force_mis, myerson_grid_lp, GridSpec};
use pa_coord::solver::{solve_optimal_mechanism, Tolerances};
use pa_coord::Error as CoreError;

const SCHEMA_VERSION: u32 = 1;

#[derive(Parser)]
#[command(name = "pa-coord", version, about = "Coordination mechanism solver suite")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Solve an instance for an optimal mechanism.
    Solve {
        /// Instance file (JSON).
        file: PathBuf,
        /// Repair blend weight used when the optimum sits on the boundary.
        #[arg(long, default_value_t = 0.01)]
        epsilon: f64,
        /// Mechanism class to optimize over.
        #[arg(long, value_enum, default_value_t = ClassArg::General)]
        class: ClassArg,
        /// Print the result as JSON on stdout.
        #[arg(long)]
        json: bool,
        /// Also write the result JSON to this file.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Solve optimal costly information acquisition.
    Acquire {
        /// Instance file: a decision problem or single-type persuasion.
        file: PathBuf,
        /// Cost of information: `zero`, `pwl:<file>` or `entropy:<n>`.
        #[arg(long, default_value = "zero")]
        cost: String,
        /// Print the result as JSON on stdout.
        #[arg(long)]
        json: bool,
        /// Also write the result JSON to this file.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Re-solve an instance and compare against an independent reference.
    Verify {
        /// Instance file (JSON).
        file: PathBuf,
        /// Reference: `grid:<step>` or `mis` (graph instances).
        #[arg(long)]
        against: String,
        /// Repair blend weight for the underlying solve.
        #[arg(long, default_value_t = 0.01)]
        epsilon: f64,
        /// Box cap per coordinate for grid checks on unbounded spaces;
        /// makes the check one-sided (lower bound only).
        #[arg(long)]
        bound: Option<f64>,
        /// Print the result as JSON on stdout.
        #[arg(long)]
        json: bool,
        /// Also write the result JSON to this file.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum ClassArg {
    General,
    TypeIndependent,
    ActionIndependent,
}

// ---------------------------------------------------------------------------
// Wire formats
// ---------------------------------------------------------------------------

#[derive(Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct InstanceFile {
    schema_version: u32,
    kind: String,
    payload: serde_json::Value,
}

#[derive(Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct AffineDto {
    coeffs: Vec<f64>,
    offset: f64,
}

#[derive(Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct PwlDto {
    pieces: Vec<AffineDto>,
}

#[derive(Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct RowDto {
    coeffs: Vec<f64>,
    rhs: f64,
}

#[derive(Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct PolyDto {
    dim: usize,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    ineq: Vec<RowDto>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    eq: Vec<RowDto>,
}

#[derive(Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct PaDto {
    prior: Vec<f64>,
    dim: usize,
    num_actions: usize,
    strategy_space: PolyDto,
    principal_utility: Vec<Vec<PwlDto>>,
    agent_utility: Vec<Vec<AffineDto>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    supplemental: Option<Vec<PolyDto>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    type_labels: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    action_labels: Option<Vec<String>>,
}

#[derive(Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct ContractDto {
    reward: Vec<f64>,
    prior: Vec<f64>,
    outcome_dist: Vec<Vec<Vec<f64>>>,
    cost: Vec<Vec<f64>>,
}

#[derive(Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct PersuasionDto {
    num_states: usize,
    prior: Vec<f64>,
    beliefs: Vec<Vec<f64>>,
    sender_utility: Vec<Vec<Vec<f64>>>,
    receiver_utility: Vec<Vec<Vec<f64>>>,
}

#[derive(Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct StackelbergDto {
    num_leader_actions: usize,
    prior: Vec<f64>,
    leader_utility: Vec<Vec<Vec<f64>>>,
    follower_utility: Vec<Vec<Vec<f64>>>,
}

#[derive(Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct SellingInfoDto {
    num_states: usize,
    state_prior: Vec<f64>,
    prior: Vec<f64>,
    buyer_utility: Vec<Vec<Vec<f64>>>,
    null_anchor: bool,
}

#[derive(Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct DecisionDto {
    /// `utility[action][state]`.
    utility: Vec<Vec<f64>>,
    prior: Vec<f64>,
}

#[derive(Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct GraphDto {
    nodes: usize,
    edges: Vec<(usize, usize)>,
}

#[derive(Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct CostFileDto {
    pieces: Vec<AffineDto>,
}

impl AffineDto {
    fn into_core(self) -> AffineForm {
        AffineForm::new(self.coeffs, self.offset)
    }
}

impl PolyDto {
    fn into_core(self) -> Polyhedron {
        let mut p = Polyhedron::new(self.dim);
        for r in self.ineq {
            p.push_ineq(r.coeffs, r.rhs);
        }
        for r in self.eq {
            p.push_eq(r.coeffs, r.rhs);
        }
        p
    }
}

// ---------------------------------------------------------------------------
// Errors and exit codes
// ---------------------------------------------------------------------------

enum CliError {
    /// Malformed input, I/O trouble or a validation failure.
    Input(String),
    Core(CoreError),
    /// Verification ran and the values disagree.
    VerifyFailed,
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Input(_) => 1,
            CliError::Core(e) => match e {
                CoreError::Infeasible(_) => 2,
                CoreError::UnboundedUtility => 3,
                CoreError::SizeLimit { .. } => 4,
                _ => 1,
            },
            CliError::VerifyFailed => 5,
        }
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        CliError::Core(e)
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Input(msg) => write!(f, "{msg}"),
            CliError::Core(e) => write!(f, "{e}"),
            CliError::VerifyFailed => write!(f, "verification failed"),
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

fn input_err(msg: impl Into<String>) -> CliError {
    CliError::Input(msg.into())
}

// ---------------------------------------------------------------------------
// Instance loading
// ---------------------------------------------------------------------------

enum Loaded {
    Pa(PaInstance),
    Persuasion(PersuasionInstance),
    Decision(DecisionDto),
    Graph(Graph),
}

fn parse_payload<T: serde::de::DeserializeOwned>(
    kind: &str,
    payload: serde_json::Value,
) -> CliResult<T> {
    serde_json::from_value(payload)
        .map_err(|e| input_err(format!("invalid payload for kind {kind}: {e}")))
}

fn read_instance(path: &Path) -> CliResult<Loaded> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| input_err(format!("cannot read {}: {e}", path.display())))?;
    let file: InstanceFile = serde_json::from_str(&text)
        .map_err(|e| input_err(format!("cannot parse {}: {e}", path.display())))?;
    if file.schema_version != SCHEMA_VERSION {
        return Err(input_err(format!(
            "unsupported schema_version {} (expected {SCHEMA_VERSION})",
            file.schema_version
        )));
    }
    let kind = file.kind.as_str();
    let loaded = match kind {
        "pa" => {
            let dto: PaDto = parse_payload(kind, file.payload)?;
            let types = dto.prior.len();
            let mut principal = Vec::with_capacity(types);
            for row in dto.principal_utility {
                let mut out = Vec::with_capacity(row.len());
                for pwl in row {
                    let pieces: Vec<AffineForm> =
                        pwl.pieces.into_iter().map(AffineDto::into_core).collect();
                    out.push(ConcavePwl::min_of(pieces)?);
                }
                principal.push(out);
            }
            let agent = dto
                .agent_utility
                .into_iter()
                .map(|row| row.into_iter().map(AffineDto::into_core).collect())
                .collect();
            let inst = PaInstance {
                prior: dto.prior,
                dim: dto.dim,
                num_actions: dto.num_actions,
                strategy_space: dto.strategy_space.into_core(),
                principal_utility: principal,
                agent_utility: agent,
                supplemental: dto
                    .supplemental
                    .map(|sets| sets.into_iter().map(PolyDto::into_core).collect()),
                type_labels: dto
                    .type_labels
                    .unwrap_or_else(|| pa_coord::model::default_labels("type", types)),
                action_labels: dto
                    .action_labels
                    .unwrap_or_else(|| pa_coord::model::default_labels("action", dto.num_actions)),
            };
            Loaded::Pa(inst)
        }
        "contract" => {
            let dto: ContractDto = parse_payload(kind, file.payload)?;
            let inst = ContractInstance {
                reward: dto.reward,
                prior: dto.prior,
                outcome_dist: dto.outcome_dist,
                cost: dto.cost,
            };
            Loaded::Pa(inst.to_pa()?)
        }
        "persuasion" => {
            let dto: PersuasionDto = parse_payload(kind, file.payload)?;
            Loaded::Persuasion(PersuasionInstance {
                num_states: dto.num_states,
                prior: dto.prior,
                beliefs: dto.beliefs,
                sender_utility: dto.sender_utility,
                receiver_utility: dto.receiver_utility,
            })
        }
        "stackelberg" => {
            let dto: StackelbergDto = parse_payload(kind, file.payload)?;
            let inst = StackelbergInstance {
                num_leader_actions: dto.num_leader_actions,
                prior: dto.prior,
                leader_utility: dto.leader_utility,
                follower_utility: dto.follower_utility,
            };
            Loaded::Pa(inst.to_pa()?)
        }
        "selling_info" => {
            let dto: SellingInfoDto = parse_payload(kind, file.payload)?;
            let inst = SellingInfoInstance {
                num_states: dto.num_states,
                state_prior: dto.state_prior,
                prior: dto.prior,
                buyer_utility: dto.buyer_utility,
                null_anchor: dto.null_anchor,
            };
            Loaded::Pa(inst.to_pa()?)
        }
        "decision" => Loaded::Decision(parse_payload(kind, file.payload)?),
        "graph" => {
            let dto: GraphDto = parse_payload(kind, file.payload)?;
            Loaded::Graph(Graph::new(dto.nodes, &dto.edges)?)
        }
        other => {
            return Err(input_err(format!(
                "unknown instance kind {other:?}; expected one of pa, contract, persuasion, \
                 stackelberg, selling_info, decision, graph"
            )))
        }
    };
    Ok(loaded)
}

fn tolerances() -> CliResult<Tolerances> {
    match std::env::var("PA_COORD_LP_TOL") {
        Ok(raw) => {
            let v: f64 = raw
                .parse()
                .map_err(|_| input_err(format!("PA_COORD_LP_TOL is not a number: {raw:?}")))?;
            if !(v > 0.0 && v.is_finite()) {
                return Err(input_err(format!(
                    "PA_COORD_LP_TOL must be a positive finite number, got {raw:?}"
                )));
            }
            Ok(Tolerances::with_lp(v))
        }
        Err(_) => Ok(Tolerances::default()),
    }
}

// ---------------------------------------------------------------------------
// Output
// ---------------------------------------------------------------------------

fn emit(
    json: bool,
    out: Option<&Path>,
    value: &serde_json::Value,
    human: &str,
) -> CliResult<()> {
    if let Some(path) = out {
        let mut text = serde_json::to_string_pretty(value)
            .map_err(|e| input_err(format!("cannot serialize result: {e}")))?;
        text.push('\n');
        std::fs::write(path, text)
            .map_err(|e| input_err(format!("cannot write {}: {e}", path.display())))?;
    }
    if json {
        println!(
            "{}",
            serde_json::to_string_pretty(value)
                .map_err(|e| input_err(format!("cannot serialize result: {e}")))?
        );
    } else {
        println!("{human}");
    }
    Ok(())
}

fn round_trip(v: f64) -> serde_json::Value {
    serde_json::json!(v)
}

// ---------------------------------------------------------------------------
// Subcommands
// ---------------------------------------------------------------------------

fn to_pa(loaded: Loaded) -> CliResult<PaInstance> {
    match loaded {
        Loaded::Pa(inst) => Ok(inst),
        Loaded::Persuasion(bp) => Ok(bp.to_pa()?),
        Loaded::Graph(g) => Ok(gen_stackelberg_hardness(&g)?.to_pa()?),
        Loaded::Decision(_) => Err(input_err(
            "decision problems are solved with the acquire subcommand",
        )),
    }
}

fn cmd_solve(
    file: &Path,
    epsilon: f64,
    class: ClassArg,
    json: bool,
    out: Option<&Path>,
) -> CliResult<()> {
    let inst = to_pa(read_instance(file)?)?;
    let tols = tolerances()?;
    let (value, detail, human) = match class {
        ClassArg::General => {
            let r = solve_optimal_mechanism(&inst, epsilon, &tols)?;
            let human = format!(
                "objective {:.9} ({}; epsilon used {})",
                r.objective,
                if r.regular {
                    "regular".to_string()
                } else {
                    format!("repaired {} pair(s)", r.repaired_pairs.len())
                },
                r.epsilon_used
            );
            let detail = serde_json::json!({
                "regular": r.regular,
                "epsilon_used": round_trip(r.epsilon_used),
                "repaired_pairs": r.repaired_pairs
                    .iter()
                    .map(|&(action, ty)| serde_json::json!({"action": action, "type": ty}))
                    .collect::<Vec<_>>(),
                "mechanism": {
                    "probs": r.mechanism.probs,
                    "strategies": r.mechanism.strategies,
                },
            });
            (r.objective, detail, human)
        }
        ClassArg::TypeIndependent => {
            let r = solve_type_independent(&inst, &tols)?;
            let human = format!(
                "objective {:.9} (type-independent; {} support point(s))",
                r.value,
                r.support.len()
            );
            let detail = serde_json::json!({
                "support": r.support
                    .iter()
                    .map(|s| serde_json::json!({
                        "weight": round_trip(s.weight),
                        "strategy": s.strategy,
                        "responses": s.responses,
                    }))
                    .collect::<Vec<_>>(),
            });
            (r.value, detail, human)
        }
        ClassArg::ActionIndependent => {
            let r = solve_action_independent(&inst, &tols)?;
            let human = format!("objective {:.9} (action-independent)", r.value);
            let detail = serde_json::json!({
                "strategies": r.strategies,
                "responses": r.responses,
            });
            (r.value, detail, human)
        }
    };
    let mut result = serde_json::json!({
        "objective": round_trip(value),
        "class": match class {
            ClassArg::General => "general",
            ClassArg::TypeIndependent => "type-independent",
            ClassArg::ActionIndependent => "action-independent",
        },
    });
    for (k, v) in detail.as_object().unwrap() {
        result[k] = v.clone();
    }
    emit(json, out, &result, &human)
}

fn parse_cost(spec: &str, dim: usize) -> CliResult<(CostSpec, Option<f64>)> {
    if spec == "zero" {
        return Ok((CostSpec::Zero, None));
    }
    if let Some(path) = spec.strip_prefix("pwl:") {
        let text = std::fs::read_to_string(path)
            .map_err(|e| input_err(format!("cannot read cost file {path}: {e}")))?;
        let dto: CostFileDto = serde_json::from_str(&text)
            .map_err(|e| input_err(format!("cannot parse cost file {path}: {e}")))?;
        let pieces: Vec<AffineForm> = dto.pieces.into_iter().map(AffineDto::into_core).collect();
        if pieces.is_empty() {
            return Err(input_err("cost file contains no pieces"));
        }
        return Ok((CostSpec::PiecewiseConvex(pieces), None));
    }
    if let Some(raw) = spec.strip_prefix("entropy:") {
        let n: usize = raw
            .parse()
            .map_err(|_| input_err(format!("entropy resolution is not an integer: {raw:?}")))?;
        let cost = CostSpec::EntropyApprox(n);
        let step = if dim == 2 { 1.0 / 200.0 } else { 1.0 / 50.0 };
        let gap = entropy_gap(&cost.pieces(dim)?, dim, step)?;
        return Ok((cost, Some(gap)));
    }
    Err(input_err(format!(
        "unknown cost spec {spec:?}; expected zero, pwl:<file> or entropy:<n>"
    )))
}

fn cmd_acquire(file: &Path, cost_spec: &str, json: bool, out: Option<&Path>) -> CliResult<()> {
    let loaded = read_instance(file)?;
    let (partition, prior) = match loaded {
        Loaded::Decision(dto) => (partition_decision_problem(&dto.utility)?, dto.prior),
        Loaded::Persuasion(bp) => {
            if bp.prior.len() != 1 {
                return Err(input_err(
                    "acquire supports persuasion instances with exactly one receiver type",
                ));
            }
            // Stored as [state][action]; the partition wants [action][state].
            let transpose = |m: &[Vec<f64>]| -> Vec<Vec<f64>> {
                let actions = m[0].len();
                (0..actions)
                    .map(|a| m.iter().map(|row| row[a]).collect())
                    .collect()
            };
            let sender = transpose(&bp.sender_utility[0]);
            let receiver = transpose(&bp.receiver_utility[0]);
            (
                partition_costly_persuasion(&sender, &receiver)?,
                bp.beliefs[0].clone(),
            )
        }
        _ => {
            return Err(input_err(
                "acquire expects a decision or persuasion instance",
            ))
        }
    };
    let (cost, gap) = parse_cost(cost_spec, prior.len())?;
    let tols = tolerances()?;
    let exp = solve_info_acquisition(&partition, &cost, &prior, tols.lp)?;
    let bayes_residual = {
        let mut worst = 0.0f64;
        for w in 0..prior.len() {
            let agg: f64 = exp.signals.iter().map(|s| s.weight * s.posterior[w]).sum();
            worst = worst.max((agg - prior[w]).abs());
        }
        worst
    };
    let mut result = serde_json::json!({
        "value": round_trip(exp.value),
        "cost": round_trip(exp.cost),
        "bayes_residual": round_trip(bayes_residual),
        "signals": exp.signals
            .iter()
            .map(|s| serde_json::json!({
                "weight": round_trip(s.weight),
                "posterior": s.posterior,
            }))
            .collect::<Vec<_>>(),
    });
    let mut human = format!(
        "value {:.9}, information cost {:.9}, {} signal(s), Bayes residual {:.2e}",
        exp.value,
        exp.cost,
        exp.signals.len(),
        bayes_residual
    );
    if let Some(g) = gap {
        result["entropy_gap"] = round_trip(g);
        human.push_str(&format!(", entropy approximation gap {g:.2e}"));
    }
    emit(json, out, &result, &human)
}

fn lipschitz_bound(inst: &PaInstance) -> f64 {
    inst.principal_utility
        .iter()
        .flatten()
        .flat_map(|pwl| pwl.pieces())
        .map(|p| p.coeffs.iter().map(|c| c.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

fn cmd_verify(
    file: &Path,
    against: &str,
    epsilon: f64,
    bound: Option<f64>,
    json: bool,
    out: Option<&Path>,
) -> CliResult<()> {
    let loaded = read_instance(file)?;
    let tols = tolerances()?;
    let (pass, result, human) = if against == "mis" {
        let Loaded::Graph(graph) = loaded else {
            return Err(input_err("--against mis requires a graph instance"));
        };
        let mis = brute_force_mis(&graph) as f64;
        let k = graph.nodes() as f64;
        let pa = gen_stackelberg_hardness(&graph)?.to_pa()?;
        let solved = solve_action_independent(&pa, &tols)?;
        let scaled = k * solved.value;
        let dev = (scaled - mis).abs();
        let pass = dev <= 1e-6;
        let result = serde_json::json!({
            "reference": "mis",
            "independence_number": mis,
            "scaled_value": round_trip(scaled),
            "deviation": round_trip(dev),
            "tolerance": 1e-6,
            "pass": pass,
        });
        let human = format!(
            "{}: nodes x value = {scaled:.9} vs independence number {mis} (deviation {dev:.2e}, tol 1e-6)",
            if pass { "PASS" } else { "FAIL" }
        );
        (pass, result, human)
    } else if let Some(raw) = against.strip_prefix("grid:") {
        let step: f64 = raw
            .parse()
            .map_err(|_| input_err(format!("grid step is not a number: {raw:?}")))?;
        if !(step > 0.0 && step.is_finite()) {
            return Err(input_err("grid step must be positive"));
        }
        let inst = to_pa(loaded)?;
        let solved = solve_optimal_mechanism(&inst, epsilon, &tols)?;
        let (mut points, capped) = match bound {
            Some(b) => {
                if !(b > 0.0 && b.is_finite()) {
                    return Err(input_err("--bound must be positive"));
                }
                let bounds = vec![(0.0, b); inst.dim];
                (GridSpec::boxed(bounds, step).points(inst.dim)?, true)
            }
            None => (GridSpec::unit_box(inst.dim, step).points(inst.dim)?, false),
        };
        // The reference only admits strategies the instance itself allows.
        points.retain(|x| inst.strategy_space.contains(x, 1e-9));
        if points.is_empty() {
            return Err(input_err(
                "no grid point lies in the strategy space; refine the step or raise --bound",
            ));
        }
        let grid = myerson_grid_lp(&inst, &points, tols.lp)?;
        let allowance = lipschitz_bound(&inst) * step;
        let lower_ok = grid <= solved.objective + 1e-6;
        // A capped grid on an unbounded space only certifies the lower
        // bound; the rounding allowance argument needs the full space.
        let upper_ok = capped || solved.objective <= grid + allowance + 1e-6;
        let pass = lower_ok && upper_ok;
        let result = serde_json::json!({
            "reference": "grid",
            "step": round_trip(step),
            "capped": capped,
            "grid_value": round_trip(grid),
            "objective": round_trip(solved.objective),
            "allowance": round_trip(allowance),
            "tolerance": 1e-6,
            "pass": pass,
        });
        let human = format!(
            "{}: objective {:.9} vs grid {grid:.9} (allowance {allowance:.3}, step {step}{})",
            if pass { "PASS" } else { "FAIL" },
            solved.objective,
            if capped { ", capped lower-bound check" } else { "" }
        );
        (pass, result, human)
    } else {
        return Err(input_err(format!(
            "unknown reference {against:?}; expected grid:<step> or mis"
        )));
    };
    emit(json, out, &result, &human)?;
    if pass {
        Ok(())
    } else {
        Err(CliError::VerifyFailed)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.cmd {
        Cmd::Solve {
            file,
            epsilon,
            class,
            json,
            out,
        } => cmd_solve(file, *epsilon, *class, *json, out.as_deref()),
        Cmd::Acquire {
            file,
            cost,
            json,
            out,
        } => cmd_acquire(file, cost, *json, out.as_deref()),
        Cmd::Verify {
            file,
            against,
            epsilon,
            bound,
            json,
            out,
        } => cmd_verify(file, against, *epsilon, *bound, *json, out.as_deref()),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            if !matches!(e, CliError::VerifyFailed) {
                eprintln!("error: {e}");
            }
            ExitCode::from(e.code())
        }
    }
}
