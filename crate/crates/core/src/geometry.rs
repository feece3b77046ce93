//! Stack stability and reach blocking as rule-table lookups, plus the
//! procedure that lists which checks an action needs.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use thiserror::Error;

use crate::world::{Cell, DomainError, Entity, Grid, MoveAction, ObjectId, Orientation, State};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GeometryError {
    #[error("unknown shape `{0}`")]
    UnknownShape(ShapeId),
    #[error(transparent)]
    Domain(#[from] DomainError),
    #[error("a stack rule needs at least one non-wildcard field")]
    AllWildcardRule,
    #[error("{0} cannot occlude itself")]
    ReflexiveOcclusion(Cell),
}

/// Identifier into the shape database.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ShapeId(Arc<str>);

impl ShapeId {
    pub fn new(name: &str) -> Self {
        ShapeId(Arc::from(name))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl FromStr for ShapeId {
    type Err = DomainError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let ok = s.bytes().next().is_some_and(|b| b.is_ascii_alphabetic())
            && s.bytes().all(|b| b.is_ascii_alphanumeric() || b == b'_');
        if ok {
            Ok(ShapeId::new(s))
        } else {
            Err(DomainError::InvalidName(s.to_string()))
        }
    }
}

impl fmt::Display for ShapeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Debug for ShapeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", &*self.0)
    }
}

/// An unstable (top, bottom) combination; `None` fields are wildcards.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StackRule {
    pub top_shape: Option<ShapeId>,
    pub top_orient: Option<Orientation>,
    pub bottom_shape: Option<ShapeId>,
    pub bottom_orient: Option<Orientation>,
}

impl StackRule {
    pub fn new(
        top_shape: Option<ShapeId>,
        top_orient: Option<Orientation>,
        bottom_shape: Option<ShapeId>,
        bottom_orient: Option<Orientation>,
    ) -> Result<Self, GeometryError> {
        if top_shape.is_none() && top_orient.is_none() && bottom_shape.is_none() && bottom_orient.is_none() {
            return Err(GeometryError::AllWildcardRule);
        }
        Ok(StackRule { top_shape, top_orient, bottom_shape, bottom_orient })
    }

    pub fn matches(&self, top: &ShapeId, top_o: Orientation, bottom: &ShapeId, bottom_o: Orientation) -> bool {
        self.top_shape.as_ref().is_none_or(|s| s == top)
            && self.top_orient.is_none_or(|o| o == top_o)
            && self.bottom_shape.as_ref().is_none_or(|s| s == bottom)
            && self.bottom_orient.is_none_or(|o| o == bottom_o)
    }
}

/// A shape that, in the given orientation, blocks reaches into cells it
/// occludes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockerRule {
    pub shape: ShapeId,
    pub orient: Orientation,
}

#[derive(Debug, Clone, Default)]
pub struct ShapeCatalog {
    shapes: BTreeSet<ShapeId>,
    unstable_rules: Vec<StackRule>,
    blocker_rules: Vec<BlockerRule>,
}

impl ShapeCatalog {
    pub fn new(
        shapes: impl IntoIterator<Item = ShapeId>,
        unstable_rules: Vec<StackRule>,
        blocker_rules: Vec<BlockerRule>,
    ) -> Result<Self, GeometryError> {
        let catalog = ShapeCatalog { shapes: shapes.into_iter().collect(), unstable_rules, blocker_rules };
        for rule in &catalog.unstable_rules {
            for s in rule.top_shape.iter().chain(rule.bottom_shape.iter()) {
                catalog.check(s)?;
            }
        }
        for rule in &catalog.blocker_rules {
            catalog.check(&rule.shape)?;
        }
        Ok(catalog)
    }

    pub fn contains(&self, shape: &ShapeId) -> bool {
        self.shapes.contains(shape)
    }

    pub fn check(&self, shape: &ShapeId) -> Result<(), GeometryError> {
        if self.contains(shape) {
            Ok(())
        } else {
            Err(GeometryError::UnknownShape(shape.clone()))
        }
    }

    pub fn shapes(&self) -> impl Iterator<Item = &ShapeId> + '_ {
        self.shapes.iter()
    }

    pub fn unstable_rules(&self) -> &[StackRule] {
        &self.unstable_rules
    }

    pub fn blocker_rules(&self) -> &[BlockerRule] {
        &self.blocker_rules
    }

    pub fn is_blocker(&self, shape: &ShapeId, orient: Orientation) -> Result<bool, GeometryError> {
        self.check(shape)?;
        Ok(self.blocker_rules.iter().any(|r| &r.shape == shape && r.orient == orient))
    }
}

/// True iff putting `top` (at `top_o`) on `bottom` (at `bottom_o`) makes an
/// unstable stack. Combinations no rule mentions are stable.
pub fn unstackable(
    catalog: &ShapeCatalog,
    top: &ShapeId,
    top_o: Orientation,
    bottom: &ShapeId,
    bottom_o: Orientation,
) -> Result<bool, GeometryError> {
    catalog.check(top)?;
    catalog.check(bottom)?;
    Ok(catalog.unstable_rules.iter().any(|r| r.matches(top, top_o, bottom, bottom_o)))
}

/// Ordered (front, behind) cell pairs: an object in the front cell may
/// block reaching into the behind cell.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OcclusionRelation {
    grid: Grid,
    pairs: BTreeSet<(Cell, Cell)>,
}

impl OcclusionRelation {
    pub fn new(grid: Grid, pairs: impl IntoIterator<Item = (Cell, Cell)>) -> Result<Self, GeometryError> {
        let mut rel = OcclusionRelation::empty(grid);
        for (front, behind) in pairs {
            rel.insert(front, behind)?;
        }
        Ok(rel)
    }

    pub fn empty(grid: Grid) -> Self {
        OcclusionRelation { grid, pairs: BTreeSet::new() }
    }

    /// `(x, y)` occludes `(x, y')` for every `y' > y`.
    pub fn depth_preset(grid: Grid) -> Self {
        let mut pairs = BTreeSet::new();
        for front in grid.cells() {
            for y in front.y + 1..grid.depth {
                pairs.insert((front, Cell::new(front.x, y)));
            }
        }
        OcclusionRelation { grid, pairs }
    }

    pub fn insert(&mut self, front: Cell, behind: Cell) -> Result<(), GeometryError> {
        self.grid.check(front)?;
        self.grid.check(behind)?;
        if front == behind {
            return Err(GeometryError::ReflexiveOcclusion(front));
        }
        self.pairs.insert((front, behind));
        Ok(())
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn contains(&self, front: Cell, behind: Cell) -> bool {
        self.pairs.contains(&(front, behind))
    }

    pub fn pairs(&self) -> impl Iterator<Item = (Cell, Cell)> + '_ {
        self.pairs.iter().copied()
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }
}

/// Whether an object of `blocker_shape` at `blocker_cell` in orientation
/// `blocker_o` blocks a reach into `target_cell`. What sits at the target
/// does not matter.
pub fn reach_blocked(
    catalog: &ShapeCatalog,
    occl: &OcclusionRelation,
    blocker_shape: &ShapeId,
    blocker_cell: Cell,
    blocker_o: Orientation,
    target_cell: Cell,
) -> Result<bool, GeometryError> {
    occl.grid.check(blocker_cell)?;
    occl.grid.check(target_cell)?;
    let blocker = catalog.is_blocker(blocker_shape, blocker_o)?;
    Ok(blocker && occl.contains(blocker_cell, target_cell))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ReachPhase {
    /// Picking the moved object up from where it is.
    Pick,
    /// Placing the moved object at its destination.
    Place,
}

/// One external check an action depends on.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CheckQuery {
    Stack {
        top: ObjectId,
        top_orient: Orientation,
        bottom: ObjectId,
        bottom_orient: Orientation,
    },
    Reach {
        blocker: ObjectId,
        blocker_cell: Cell,
        blocker_orient: Orientation,
        phase: ReachPhase,
        target: ObjectId,
        target_cell: Cell,
        target_orient: Orientation,
    },
}

impl CheckQuery {
    /// Objects whose shapes are needed to answer the query.
    pub fn shape_dependencies(&self) -> Vec<&ObjectId> {
        match self {
            CheckQuery::Stack { top, bottom, .. } => vec![top, bottom],
            CheckQuery::Reach { blocker, .. } => vec![blocker],
        }
    }
}

impl fmt::Display for CheckQuery {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CheckQuery::Stack { top, top_orient, bottom, bottom_orient } => {
                write!(f, "unstackable_ext({top},{top_orient},{bottom},{bottom_orient})")
            }
            CheckQuery::Reach { blocker, blocker_cell, blocker_orient, target, target_cell, target_orient, .. } => {
                write!(
                    f,
                    "reach_blocked_ext({blocker},{blocker_cell},{blocker_orient},{target},{target_cell},{target_orient})"
                )
            }
        }
    }
}

/// Lists the checks an admissible action requires in `state`: a stack check
/// when the normalized destination is an object, then a reach check for
/// every object standing in front of the pick cell, then one for every
/// object (other than the mover) in front of the placement cell.
///
/// Returns nothing for actions whose destination cannot be resolved.
pub fn collect_checks(state: &State, action: &MoveAction, occl: &OcclusionRelation) -> Vec<CheckQuery> {
    match state.resolve_destination(&action.obj, &action.dest) {
        Ok(dest) => collect_checks_resolved(state, action, &dest, occl),
        Err(_) => Vec::new(),
    }
}

pub(crate) fn collect_checks_resolved(
    state: &State,
    action: &MoveAction,
    dest: &Entity,
    occl: &OcclusionRelation,
) -> Vec<CheckQuery> {
    let mut out = Vec::new();
    let mover = &action.obj;
    let (Some(mover_ori), Some(pick_cell), Some(place_cell)) =
        (state.ori(mover), state.base_cell(mover), state.base_of(dest))
    else {
        return out;
    };
    if let Entity::Object(bottom) = dest {
        out.push(CheckQuery::Stack {
            top: mover.clone(),
            top_orient: action.orient,
            bottom: bottom.clone(),
            bottom_orient: state.ori(bottom).expect("destination in state"),
        });
    }
    let reach = |phase, target_cell, target_orient, out: &mut Vec<CheckQuery>| {
        for (other, p) in state.placements() {
            if other == mover {
                continue;
            }
            let Some(cell) = state.base_cell(other) else { continue };
            if occl.contains(cell, target_cell) {
                out.push(CheckQuery::Reach {
                    blocker: other.clone(),
                    blocker_cell: cell,
                    blocker_orient: p.ori,
                    phase,
                    target: mover.clone(),
                    target_cell,
                    target_orient,
                });
            }
        }
    };
    reach(ReachPhase::Pick, pick_cell, mover_ori, &mut out);
    reach(ReachPhase::Place, place_cell, action.orient, &mut out);
    out
}
