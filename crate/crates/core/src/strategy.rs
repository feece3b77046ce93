//! The four ways of combining perception with planning.
//!
//! * `none` plans without any external checks.
//! * `pre` asks perception for every shape up front and compiles all
//!   stability and reach checks into extra action preconditions.
//! * `filt` plans without checks, verifies each plan afterwards and asks
//!   for another one when verification fails.
//! * `repl` verifies like `filt`, but turns every known shape into
//!   conditional prohibitions and restarts the planner with them.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;
use std::time::{Duration, Instant};

use thiserror::Error;

use crate::geometry::{
    collect_checks_resolved, reach_blocked, unstackable, CheckQuery, GeometryError, OcclusionRelation, ShapeCatalog,
};
use crate::perception::{
    bottom_up, occlusion_of, GroundTruth, PerceptView, PerceptionError, SceneTruth, ShapeSource, TaskSpec,
};
use crate::search::{
    ActionFilter, ConditionalProhibition, DestPattern, Horizon, ObjPattern, Plan, PlanCursor, SearchError,
    SearchProblem,
};
use crate::world::{
    apply_resolved, check_admissible, Cell, DomainConfig, DomainError, Entity, FluentLiteral, MoveAction, ObjectId,
    Orientation, State,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StrategyError {
    #[error(transparent)]
    Perception(#[from] PerceptionError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Domain(#[from] DomainError),
    #[error(transparent)]
    Search(#[from] SearchError),
    #[error("invalid strategy `{0}`")]
    UnknownStrategy(String),
    #[error("invalid task `{0}` (expected `first` or `count:<N>` with N >= 1)")]
    InvalidTask(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Strategy {
    None,
    Filt,
    Pre,
    Repl,
}

impl Strategy {
    /// Report column order.
    pub const ALL: [Strategy; 4] = [Strategy::None, Strategy::Filt, Strategy::Pre, Strategy::Repl];

    pub fn name(self) -> &'static str {
        match self {
            Strategy::None => "none",
            Strategy::Filt => "filt",
            Strategy::Pre => "pre",
            Strategy::Repl => "repl",
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Strategy {
    type Err = StrategyError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Strategy::ALL
            .into_iter()
            .find(|st| st.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| StrategyError::UnknownStrategy(s.to_string()))
    }
}

/// How many feasible plans a run is after.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Task {
    First,
    Count(usize),
}

impl Task {
    pub fn required(self) -> usize {
        match self {
            Task::First => 1,
            Task::Count(n) => n,
        }
    }
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Task::First => f.write_str("first"),
            Task::Count(n) => write!(f, "count:{n}"),
        }
    }
}

impl FromStr for Task {
    type Err = StrategyError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || StrategyError::InvalidTask(s.to_string());
        if s == "first" {
            return Ok(Task::First);
        }
        let n = s
            .strip_prefix("count:")
            .or_else(|| s.strip_prefix("count(").and_then(|r| r.strip_suffix(')')))
            .ok_or_else(bad)?;
        match n.parse::<usize>() {
            Ok(n) if n >= 1 => Ok(Task::Count(n)),
            _ => Err(bad()),
        }
    }
}

/// Why a plan step failed verification.
#[derive(Debug, Clone, PartialEq)]
pub enum FailedCheck {
    Check {
        step: usize,
        query: CheckQuery,
    },
    /// The plan could not even be simulated from this step on.
    Inadmissible {
        step: usize,
        error: DomainError,
    },
}

impl FailedCheck {
    pub fn step(&self) -> usize {
        match self {
            FailedCheck::Check { step, .. } | FailedCheck::Inadmissible { step, .. } => *step,
        }
    }
}

impl fmt::Display for FailedCheck {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FailedCheck::Check { step, query } => write!(f, "step {step}: {query}"),
            FailedCheck::Inadmissible { step, error } => write!(f, "step {step}: {error}"),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct FeasibilityVerdict {
    pub reasons: Vec<FailedCheck>,
}

impl FeasibilityVerdict {
    pub fn feasible(&self) -> bool {
        self.reasons.is_empty()
    }
}

fn evaluate_check(
    query: &CheckQuery,
    shapes: &mut dyn ShapeSource,
    catalog: &ShapeCatalog,
    occl: &OcclusionRelation,
) -> Result<bool, StrategyError> {
    Ok(match query {
        CheckQuery::Stack { top, top_orient, bottom, bottom_orient } => {
            let top_shape = shapes.shape_of(top)?;
            let bottom_shape = shapes.shape_of(bottom)?;
            unstackable(catalog, &top_shape, *top_orient, &bottom_shape, *bottom_orient)?
        }
        CheckQuery::Reach { blocker, blocker_cell, blocker_orient, target_cell, .. } => {
            let shape = shapes.shape_of(blocker)?;
            reach_blocked(catalog, occl, &shape, *blocker_cell, *blocker_orient, *target_cell)?
        }
    })
}

/// Simulates `plan` and evaluates every check each step needs, fetching
/// only the shapes those checks depend on. All failures are collected.
pub fn verify_plan(
    plan: &Plan,
    init: &State,
    shapes: &mut dyn ShapeSource,
    catalog: &ShapeCatalog,
    occl: &OcclusionRelation,
    config: &DomainConfig,
) -> Result<FeasibilityVerdict, StrategyError> {
    let mut state = init.clone();
    let mut reasons = Vec::new();
    for (step, action) in plan.steps().iter().enumerate() {
        let dest = match check_admissible(&state, action, config) {
            Ok(d) => d,
            Err(error) => {
                reasons.push(FailedCheck::Inadmissible { step, error });
                break;
            }
        };
        for query in collect_checks_resolved(&state, action, &dest, occl) {
            if evaluate_check(&query, shapes, catalog, occl)? {
                reasons.push(FailedCheck::Check { step, query });
            }
        }
        state = apply_resolved(&state, &action.obj, dest, action.orient);
    }
    Ok(FeasibilityVerdict { reasons })
}

/// Stability and reach tables over every named object, used as extra
/// action preconditions.
#[derive(Debug, Clone)]
pub struct CompiledPreconditions {
    unstable: HashMap<(ObjectId, ObjectId), [[bool; 3]; 3]>,
    blocked: HashSet<(ObjectId, Cell, Orientation, Cell)>,
    occl: OcclusionRelation,
}

impl CompiledPreconditions {
    pub fn is_unstable(&self, top: &ObjectId, top_o: Orientation, bottom: &ObjectId, bottom_o: Orientation) -> bool {
        self.unstable.get(&(top.clone(), bottom.clone())).is_some_and(|m| m[top_o.index()][bottom_o.index()])
    }

    pub fn blocks(&self, blocker: &ObjectId, cell: Cell, orient: Orientation, target: Cell) -> bool {
        self.blocked.contains(&(blocker.clone(), cell, orient, target))
    }

    pub fn unstable_entries(&self) -> usize {
        self.unstable.values().flatten().flatten().filter(|&&b| b).count()
    }

    pub fn blocking_entries(&self) -> usize {
        self.blocked.len()
    }
}

impl ActionFilter for CompiledPreconditions {
    fn permits(&self, state: &State, action: &MoveAction, dest: &Entity) -> bool {
        collect_checks_resolved(state, action, dest, &self.occl).iter().all(|q| match q {
            CheckQuery::Stack { top, top_orient, bottom, bottom_orient } => {
                !self.is_unstable(top, *top_orient, bottom, *bottom_orient)
            }
            CheckQuery::Reach { blocker, blocker_cell, blocker_orient, target_cell, .. } => {
                !self.blocks(blocker, *blocker_cell, *blocker_orient, *target_cell)
            }
        })
    }
}

/// Queries the shape of every named object and tabulates both external
/// predicates over all argument combinations.
pub fn precompile_checks(
    view: &mut PerceptView,
    catalog: &ShapeCatalog,
    occl: &OcclusionRelation,
) -> Result<CompiledPreconditions, StrategyError> {
    let objects: Vec<ObjectId> = view.objects().cloned().collect();
    let mut shapes = Vec::with_capacity(objects.len());
    for o in &objects {
        shapes.push(view.shape_of(o)?);
    }
    let mut unstable = HashMap::new();
    for (i, top) in objects.iter().enumerate() {
        for (j, bottom) in objects.iter().enumerate() {
            if i == j {
                continue;
            }
            let mut m = [[false; 3]; 3];
            for t in Orientation::ALL {
                for b in Orientation::ALL {
                    m[t.index()][b.index()] = unstackable(catalog, &shapes[i], t, &shapes[j], b)?;
                }
            }
            unstable.insert((top.clone(), bottom.clone()), m);
        }
    }
    let grid = occl.grid();
    let mut blocked = HashSet::new();
    for (i, obj) in objects.iter().enumerate() {
        for cell in grid.cells() {
            for orient in Orientation::ALL {
                for target in grid.cells() {
                    if reach_blocked(catalog, occl, &shapes[i], cell, orient, target)? {
                        blocked.insert((obj.clone(), cell, orient, target));
                    }
                }
            }
        }
    }
    Ok(CompiledPreconditions { unstable, blocked, occl: occl.clone() })
}

/// Turns every currently cached shape into prohibitions. The result is
/// exactly as strict as the external checks on those objects and grows
/// monotonically with the cache.
pub fn derive_constraints(
    view: &PerceptView,
    catalog: &ShapeCatalog,
    occl: &OcclusionRelation,
) -> Result<BTreeSet<ConditionalProhibition>, StrategyError> {
    let known: Vec<_> = view.known_shapes().map(|(o, s)| (o.clone(), s.clone())).collect();
    let mut out = BTreeSet::new();

    for (top, top_shape) in &known {
        for (bottom, bottom_shape) in &known {
            if top == bottom {
                continue;
            }
            let mut m = [[false; 3]; 3];
            for t in Orientation::ALL {
                for b in Orientation::ALL {
                    m[t.index()][b.index()] = unstackable(catalog, top_shape, t, bottom_shape, b)?;
                }
            }
            let stack = |orient: Option<Orientation>, condition: Vec<FluentLiteral>| {
                ConditionalProhibition::new(
                    ObjPattern::Is(top.clone()),
                    DestPattern::Is(Entity::Object(bottom.clone())),
                    orient,
                    condition,
                )
            };
            let top_always = |t: usize| m[t].iter().all(|&x| x);
            let bottom_always = |b: usize| m.iter().all(|row| row[b]);
            if (0..3).all(top_always) {
                out.insert(stack(None, vec![]));
                continue;
            }
            for t in Orientation::ALL {
                if top_always(t.index()) {
                    out.insert(stack(Some(t), vec![]));
                }
            }
            for b in Orientation::ALL {
                if bottom_always(b.index()) {
                    out.insert(stack(None, vec![FluentLiteral::Ori(bottom.clone(), b)]));
                }
            }
            for t in Orientation::ALL {
                for b in Orientation::ALL {
                    if m[t.index()][b.index()] && !top_always(t.index()) && !bottom_always(b.index()) {
                        out.insert(stack(Some(t), vec![FluentLiteral::Ori(bottom.clone(), b)]));
                    }
                }
            }
        }
    }

    for (obj, shape) in &known {
        for orient in Orientation::ALL {
            if !catalog.is_blocker(shape, orient)? {
                continue;
            }
            for (front, behind) in occl.pairs() {
                let condition = vec![
                    FluentLiteral::Below(Entity::Cell(front), obj.clone()),
                    FluentLiteral::Ori(obj.clone(), orient),
                ];
                // nothing may be placed over the occluded cell
                out.insert(ConditionalProhibition::new(
                    ObjPattern::Except(obj.clone()),
                    DestPattern::OnBase(behind),
                    None,
                    condition.clone(),
                ));
                // nothing over the occluded cell may be picked up
                out.insert(ConditionalProhibition::new(ObjPattern::Above(behind), DestPattern::Any, None, condition));
            }
        }
    }
    Ok(out)
}

/// Everything a strategy run needs.
#[derive(Debug, Clone)]
pub struct LoadedInstance {
    pub scene: SceneTruth,
    pub task: TaskSpec,
    pub horizon: Horizon,
    pub catalog: ShapeCatalog,
    pub occlusion: OcclusionRelation,
    pub config: DomainConfig,
}

impl LoadedInstance {
    /// Checks that every scene shape is in the catalog and that the goal
    /// only mentions perceivable objects.
    pub fn new(
        scene: SceneTruth,
        task: TaskSpec,
        horizon: Horizon,
        catalog: ShapeCatalog,
    ) -> Result<Self, StrategyError> {
        for o in scene.objects() {
            catalog.check(&o.shape)?;
        }
        let occlusion = occlusion_of(&scene)?;
        let view = bottom_up(&scene, &task)?;
        task.goal.check_references(view.initial_state())?;
        let config = DomainConfig::new(scene.grid());
        Ok(LoadedInstance { scene, task, horizon, catalog, occlusion, config })
    }

    pub fn with_horizon(mut self, horizon: Horizon) -> Self {
        self.horizon = horizon;
        self
    }

    /// A fresh bottom-up view with an empty ledger.
    pub fn perceive(&self) -> Result<PerceptView, StrategyError> {
        Ok(bottom_up(&self.scene, &self.task)?)
    }

    /// Grades a plan against the true shapes without touching any ledger.
    pub fn oracle_verdict(&self, plan: &Plan) -> Result<FeasibilityVerdict, StrategyError> {
        let view = self.perceive()?;
        let mut truth = GroundTruth::new(&view);
        verify_plan(plan, view.initial_state(), &mut truth, &self.catalog, &self.occlusion, &self.config)
    }
}

/// One planner invocation of a `repl` run.
#[derive(Debug, Clone)]
pub struct ReplRound {
    /// Prohibitions in force during the round.
    pub constraints: Arc<Vec<ConditionalProhibition>>,
    /// Feasible plans found before the round ended.
    pub feasible: Vec<Plan>,
    /// The plan whose failure ended the round, if any.
    pub infeasible: Option<Plan>,
}

#[derive(Debug, Clone, Default)]
pub struct RunOutcome {
    pub feasible_plans: Vec<Plan>,
    pub infeasible_count: usize,
    pub query_count: usize,
    pub timed_out: bool,
    /// Equal to the budget for timed-out runs.
    pub wall_time: Duration,
    /// Empty except for `repl`.
    pub rounds: Vec<ReplRound>,
}

enum Next {
    Plan(Plan),
    Exhausted,
    TimedOut,
}

fn next_plan(cursor: &mut PlanCursor, deadline: Option<Instant>) -> Result<Next, StrategyError> {
    if deadline.is_some_and(|d| Instant::now() >= d) {
        return Ok(Next::TimedOut);
    }
    match cursor.next_plan() {
        Ok(p) => Ok(Next::Plan(p)),
        Err(SearchError::HorizonExhausted) => Ok(Next::Exhausted),
        Err(SearchError::DeadlineExceeded) => Ok(Next::TimedOut),
        Err(e) => Err(e.into()),
    }
}

/// Runs one strategy on a fresh view. Running out of budget is reported
/// through `timed_out`, keeping whatever was found so far.
pub fn run_strategy(
    strategy: Strategy,
    instance: &LoadedInstance,
    task: Task,
    budget: Duration,
) -> Result<RunOutcome, StrategyError> {
    let start = Instant::now();
    let deadline = start.checked_add(budget);
    let mut view = instance.perceive()?;
    let init = view.initial_state().clone();
    let mut problem =
        SearchProblem::new(init.clone(), instance.task.goal.clone(), instance.horizon, instance.config.clone());
    problem.deadline = deadline;
    let need = task.required();
    let (catalog, occl, config) = (&instance.catalog, &instance.occlusion, &instance.config);
    let mut out = RunOutcome::default();

    match strategy {
        Strategy::None => {
            let mut truth = GroundTruth::new(&view);
            let mut cursor = PlanCursor::new(problem);
            let mut emitted = 0;
            while emitted < need {
                match next_plan(&mut cursor, deadline)? {
                    Next::Plan(plan) => {
                        emitted += 1;
                        if verify_plan(&plan, &init, &mut truth, catalog, occl, config)?.feasible() {
                            out.feasible_plans.push(plan);
                        } else {
                            out.infeasible_count += 1;
                        }
                    }
                    Next::Exhausted => break,
                    Next::TimedOut => {
                        out.timed_out = true;
                        break;
                    }
                }
            }
        }
        Strategy::Pre => {
            let compiled = precompile_checks(&mut view, catalog, occl)?;
            log::debug!(
                "pre: {} unstable stack entries, {} blocking entries",
                compiled.unstable_entries(),
                compiled.blocking_entries()
            );
            problem.filter = Some(Arc::new(compiled));
            let mut cursor = PlanCursor::new(problem);
            while out.feasible_plans.len() < need {
                match next_plan(&mut cursor, deadline)? {
                    Next::Plan(plan) => out.feasible_plans.push(plan),
                    Next::Exhausted => break,
                    Next::TimedOut => {
                        out.timed_out = true;
                        break;
                    }
                }
            }
        }
        Strategy::Filt => {
            let mut cursor = PlanCursor::new(problem);
            while out.feasible_plans.len() < need {
                match next_plan(&mut cursor, deadline)? {
                    Next::Plan(plan) => {
                        let verdict = verify_plan(&plan, &init, &mut view, catalog, occl, config)?;
                        if verdict.feasible() {
                            out.feasible_plans.push(plan);
                        } else {
                            out.infeasible_count += 1;
                        }
                    }
                    Next::Exhausted => break,
                    Next::TimedOut => {
                        out.timed_out = true;
                        break;
                    }
                }
            }
        }
        Strategy::Repl => run_replanning(&mut view, instance, problem, need, deadline, &mut out)?,
    }

    out.query_count = view.query_count();
    out.wall_time = if out.timed_out { budget } else { start.elapsed() };
    log::info!(
        "{strategy} {task}: {} feasible, {} infeasible, {} queries{}",
        out.feasible_plans.len(),
        out.infeasible_count,
        out.query_count,
        if out.timed_out { " (timed out)" } else { "" }
    );
    Ok(out)
}

fn run_replanning(
    view: &mut PerceptView,
    instance: &LoadedInstance,
    base: SearchProblem,
    need: usize,
    deadline: Option<Instant>,
    out: &mut RunOutcome,
) -> Result<(), StrategyError> {
    let (catalog, occl, config) = (&instance.catalog, &instance.occlusion, &instance.config);
    let init = base.init.clone();
    let mut constraints: BTreeSet<ConditionalProhibition> = BTreeSet::new();
    let mut blocked = base.blocked.clone();

    'restart: loop {
        let snapshot = Arc::new(constraints.iter().cloned().collect::<Vec<_>>());
        let mut problem = base.clone();
        problem.constraints = snapshot.as_ref().clone();
        problem.blocked = blocked.clone();
        let mut cursor = PlanCursor::new(problem);
        out.rounds.push(ReplRound { constraints: snapshot, feasible: Vec::new(), infeasible: None });
        let round = out.rounds.len() - 1;

        while out.feasible_plans.len() < need {
            match next_plan(&mut cursor, deadline)? {
                Next::Plan(plan) => {
                    let verdict = verify_plan(&plan, &init, view, catalog, occl, config)?;
                    blocked.insert(plan.clone());
                    if verdict.feasible() {
                        out.rounds[round].feasible.push(plan.clone());
                        out.feasible_plans.push(plan);
                        continue;
                    }
                    out.infeasible_count += 1;
                    out.rounds[round].infeasible = Some(plan);
                    let before = constraints.len();
                    constraints.extend(derive_constraints(view, catalog, occl)?);
                    log::debug!(
                        "repl: restart {} with {} constraints (+{})",
                        round + 1,
                        constraints.len(),
                        constraints.len() - before
                    );
                    continue 'restart;
                }
                Next::Exhausted => break 'restart,
                Next::TimedOut => {
                    out.timed_out = true;
                    break 'restart;
                }
            }
        }
        break;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn task_syntax() {
        assert_eq!("first".parse::<Task>().unwrap(), Task::First);
        assert_eq!("count:100".parse::<Task>().unwrap(), Task::Count(100));
        assert_eq!("count(5)".parse::<Task>().unwrap(), Task::Count(5));
        assert!("count:0".parse::<Task>().is_err());
        assert!("all".parse::<Task>().is_err());
        assert_eq!(Task::Count(100).to_string(), "count:100");
    }

    #[test]
    fn strategy_syntax() {
        for s in Strategy::ALL {
            assert_eq!(s.name().parse::<Strategy>().unwrap(), s);
        }
        assert!("both".parse::<Strategy>().is_err());
    }
}
