//! Bounded-horizon plan enumeration.
//!
//! Plans are produced shortest first and, within a length, in lexicographic
//! order of their action sequences. Distinct action sequences are distinct
//! plans even when they reach the same state, so no state deduplication is
//! done. The only pruning is an admissible bound: every object named in an
//! unsatisfied goal literal has to be moved at least once.

use std::collections::HashSet;
use std::fmt;
use std::sync::Arc;
use std::time::Instant;

use thiserror::Error;

use crate::world::{
    admissible_moves, apply_resolved, Cell, DomainConfig, Entity, FluentLiteral, GoalFormula, MoveAction, ObjectId,
    Orientation, State,
};

/// Longest horizon a search may be configured with.
pub const MAX_HORIZON: usize = 12;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SearchError {
    #[error("no plan within the horizon")]
    HorizonExhausted,
    #[error("deadline exceeded")]
    DeadlineExceeded,
    #[error("horizon {0} exceeds the cap of {MAX_HORIZON}")]
    HorizonTooLarge(usize),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct Plan {
    steps: Vec<MoveAction>,
}

impl Plan {
    pub fn new(steps: Vec<MoveAction>) -> Self {
        Plan { steps }
    }

    pub fn empty() -> Self {
        Plan::default()
    }

    pub fn steps(&self) -> &[MoveAction] {
        &self.steps
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    /// Length first, then action sequence lexicographically.
    pub fn canonical_cmp(&self, other: &Plan) -> std::cmp::Ordering {
        self.len().cmp(&other.len()).then_with(|| {
            self.steps
                .iter()
                .zip(&other.steps)
                .map(|(a, b)| a.canonical_cmp(b))
                .find(|o| o.is_ne())
                .unwrap_or(std::cmp::Ordering::Equal)
        })
    }
}

impl fmt::Display for Plan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (t, a) in self.steps.iter().enumerate() {
            writeln!(f, "{t}: {a}.")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Horizon {
    maxstep: usize,
}

impl Horizon {
    pub fn new(maxstep: usize) -> Result<Self, SearchError> {
        if maxstep > MAX_HORIZON {
            return Err(SearchError::HorizonTooLarge(maxstep));
        }
        Ok(Horizon { maxstep })
    }

    pub fn maxstep(&self) -> usize {
        self.maxstep
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ObjPattern {
    Any,
    Is(ObjectId),
    /// Any object whose stack stands on this cell.
    Above(Cell),
    /// Any object but this one.
    Except(ObjectId),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum DestPattern {
    Any,
    /// The normalized destination is exactly this entity.
    Is(Entity),
    /// The normalized destination is this cell or an object standing on it.
    OnBase(Cell),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ActionPattern {
    pub obj: ObjPattern,
    pub dest: DestPattern,
    pub orient: Option<Orientation>,
}

/// Forbids actions matching `pattern` in any state where every literal of
/// `condition` holds. An empty condition always holds.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ConditionalProhibition {
    pub pattern: ActionPattern,
    pub condition: Vec<FluentLiteral>,
}

impl ConditionalProhibition {
    pub fn new(obj: ObjPattern, dest: DestPattern, orient: Option<Orientation>, condition: Vec<FluentLiteral>) -> Self {
        ConditionalProhibition { pattern: ActionPattern { obj, dest, orient }, condition }
    }

    pub(crate) fn blocks_resolved(&self, state: &State, action: &MoveAction, dest: &Entity) -> bool {
        let p = &self.pattern;
        if p.orient.is_some_and(|o| o != action.orient) {
            return false;
        }
        let obj_ok = match &p.obj {
            ObjPattern::Any => true,
            ObjPattern::Is(o) => *o == action.obj,
            ObjPattern::Except(o) => *o != action.obj,
            ObjPattern::Above(c) => state.base_cell(&action.obj) == Some(*c),
        };
        if !obj_ok {
            return false;
        }
        let dest_ok = match &p.dest {
            DestPattern::Any => true,
            DestPattern::Is(e) => e == dest,
            DestPattern::OnBase(c) => state.base_of(dest) == Some(*c),
        };
        dest_ok && self.condition.iter().all(|l| l.holds(state))
    }
}

impl fmt::Display for ConditionalProhibition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let obj = match &self.pattern.obj {
            ObjPattern::Any => "*".to_string(),
            ObjPattern::Is(o) => o.to_string(),
            ObjPattern::Above(c) => format!("above({c})"),
            ObjPattern::Except(o) => format!("!{o}"),
        };
        let dest = match &self.pattern.dest {
            DestPattern::Any => "*".to_string(),
            DestPattern::Is(e) => e.to_string(),
            DestPattern::OnBase(c) => format!("above({c})"),
        };
        let orient = self.pattern.orient.map_or("*".to_string(), |o| o.to_string());
        write!(f, "-move({obj},{dest},{orient})")?;
        if !self.condition.is_empty() {
            f.write_str(" if ")?;
            for (i, l) in self.condition.iter().enumerate() {
                if i > 0 {
                    f.write_str(", ")?;
                }
                write!(f, "{l}")?;
            }
        }
        Ok(())
    }
}

/// True iff `p` forbids `action` in `state`. Actions whose destination does
/// not resolve are never matched.
pub fn prohibition_blocks(p: &ConditionalProhibition, state: &State, action: &MoveAction) -> bool {
    match state.resolve_destination(&action.obj, &action.dest) {
        Ok(dest) => p.blocks_resolved(state, action, &dest),
        Err(_) => false,
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct BlockedPlanSet {
    plans: HashSet<Plan>,
}

impl BlockedPlanSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, plan: Plan) -> bool {
        self.plans.insert(plan)
    }

    pub fn contains(&self, plan: &Plan) -> bool {
        self.plans.contains(plan)
    }

    pub fn len(&self) -> usize {
        self.plans.len()
    }

    pub fn is_empty(&self) -> bool {
        self.plans.is_empty()
    }
}

impl FromIterator<Plan> for BlockedPlanSet {
    fn from_iter<I: IntoIterator<Item = Plan>>(iter: I) -> Self {
        BlockedPlanSet { plans: iter.into_iter().collect() }
    }
}

/// Extra per-action admissibility, consulted during enumeration.
pub trait ActionFilter: Send + Sync {
    fn permits(&self, state: &State, action: &MoveAction, dest: &Entity) -> bool;
}

#[derive(Clone)]
pub struct SearchProblem {
    pub init: State,
    pub goal: GoalFormula,
    pub horizon: Horizon,
    pub config: DomainConfig,
    pub constraints: Vec<ConditionalProhibition>,
    pub blocked: BlockedPlanSet,
    pub filter: Option<Arc<dyn ActionFilter>>,
    pub deadline: Option<Instant>,
}

impl SearchProblem {
    pub fn new(init: State, goal: GoalFormula, horizon: Horizon, config: DomainConfig) -> Self {
        SearchProblem {
            init,
            goal,
            horizon,
            config,
            constraints: Vec::new(),
            blocked: BlockedPlanSet::new(),
            filter: None,
            deadline: None,
        }
    }
}

struct Frame {
    moves: Vec<(MoveAction, State)>,
    next: usize,
}

/// Resumable depth-first enumerator. Each call to [`PlanCursor::next_plan`]
/// continues where the previous one stopped.
pub struct PlanCursor {
    problem: SearchProblem,
    /// Length currently being searched.
    length: usize,
    stack: Vec<Frame>,
    prefix: Vec<MoveAction>,
    started: bool,
    expansions: u64,
}

impl PlanCursor {
    pub fn new(problem: SearchProblem) -> Self {
        PlanCursor { problem, length: 0, stack: Vec::new(), prefix: Vec::new(), started: false, expansions: 0 }
    }

    pub fn problem(&self) -> &SearchProblem {
        &self.problem
    }

    /// Number of states expanded so far.
    pub fn expansions(&self) -> u64 {
        self.expansions
    }

    /// Next plan in canonical order. `HorizonExhausted` once every length up
    /// to the horizon has been searched.
    pub fn next_plan(&mut self) -> Result<Plan, SearchError> {
        loop {
            if self.stack.is_empty() {
                if self.started {
                    self.length += 1;
                }
                self.started = true;
                if self.length > self.problem.horizon.maxstep {
                    self.length = self.problem.horizon.maxstep + 1;
                    return Err(SearchError::HorizonExhausted);
                }
                self.check_deadline()?;
                if self.length == 0 {
                    if self.problem.goal.holds(&self.problem.init) && !self.problem.blocked.contains(&Plan::empty()) {
                        return Ok(Plan::empty());
                    }
                    continue;
                }
                if self.lower_bound(&self.problem.init) > self.length {
                    continue;
                }
                let root = self.expand(self.problem.init.clone());
                self.stack.push(root);
                continue;
            }

            let depth = self.stack.len() - 1;
            let frame = self.stack.last_mut().expect("non-empty");
            if frame.next >= frame.moves.len() {
                self.stack.pop();
                continue;
            }
            let (action, next_state) = frame.moves[frame.next].clone();
            frame.next += 1;
            self.prefix.truncate(depth);
            self.prefix.push(action);

            if depth + 1 == self.length {
                if self.problem.goal.holds(&next_state) {
                    let plan = Plan::new(self.prefix.clone());
                    if !self.problem.blocked.contains(&plan) {
                        return Ok(plan);
                    }
                }
            } else if self.lower_bound(&next_state) < self.length - depth {
                if self.expansions.is_multiple_of(1024) {
                    self.check_deadline()?;
                }
                let child = self.expand(next_state);
                self.stack.push(child);
            }
        }
    }

    fn check_deadline(&self) -> Result<(), SearchError> {
        match self.problem.deadline {
            Some(d) if Instant::now() >= d => Err(SearchError::DeadlineExceeded),
            _ => Ok(()),
        }
    }

    fn expand(&mut self, state: State) -> Frame {
        self.expansions += 1;
        let p = &self.problem;
        let moves = admissible_moves(&state, &p.config)
            .into_iter()
            .filter(|(a, dest)| {
                !p.constraints.iter().any(|c| c.blocks_resolved(&state, a, dest))
                    && p.filter.as_ref().is_none_or(|f| f.permits(&state, a, dest))
            })
            .map(|(a, dest)| {
                let next = apply_resolved(&state, &a.obj, dest, a.orient);
                (a, next)
            })
            .collect();
        Frame { moves, next: 0 }
    }

    /// Minimum number of further moves needed to reach the goal.
    fn lower_bound(&self, state: &State) -> usize {
        goal_lower_bound(&self.problem.goal, state, &self.problem.config)
    }
}

/// Counts distinct objects appearing in unsatisfied goal literals. `at` and
/// `ori` change only when their object moves; with the clear-object
/// precondition the same holds for `below`, since nothing under a stacked
/// object can move while it is there.
pub(crate) fn goal_lower_bound(goal: &GoalFormula, state: &State, config: &DomainConfig) -> usize {
    let mut must_move: Vec<&ObjectId> = Vec::new();
    for lit in &goal.literals {
        if matches!(lit, FluentLiteral::Below(..)) && !config.require_clear {
            continue;
        }
        if !lit.holds(state) && !must_move.contains(&lit.subject()) {
            must_move.push(lit.subject());
        }
    }
    must_move.len()
}

/// Collects up to `limit` plans. Fails with `HorizonExhausted` only when no
/// plan exists at all; fewer than `limit` plans means the horizon ran out.
pub fn enumerate_plans(
    init: &State,
    goal: &GoalFormula,
    horizon: Horizon,
    constraints: &[ConditionalProhibition],
    blocked: &BlockedPlanSet,
    limit: usize,
    config: &DomainConfig,
) -> Result<Vec<Plan>, SearchError> {
    let mut problem = SearchProblem::new(init.clone(), goal.clone(), horizon, config.clone());
    problem.constraints = constraints.to_vec();
    problem.blocked = blocked.clone();
    let mut cursor = PlanCursor::new(problem);
    let mut plans = Vec::new();
    while plans.len() < limit {
        match cursor.next_plan() {
            Ok(p) => plans.push(p),
            Err(SearchError::HorizonExhausted) => break,
            Err(e) => return Err(e),
        }
    }
    if plans.is_empty() && limit > 0 {
        return Err(SearchError::HorizonExhausted);
    }
    Ok(plans)
}
