//! The manipulation state space: grid cells, objects, orientations, the
//! `move` action and its built-in preconditions, and the derived
//! `is_below` relation.
//!
//! A state records for every object its immediate supporter (a cell or
//! another object) and its orientation. Stacks are chains of `at` links
//! that always bottom out at a cell.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DomainError {
    #[error("unknown object `{0}`")]
    UnknownObject(ObjectId),
    #[error("unknown entity `{0}`")]
    UnknownEntity(Entity),
    #[error("cell {cell} is outside the {width}x{depth} grid")]
    CellOutOfRange { cell: Cell, width: u32, depth: u32 },
    #[error("object `{0}` declared twice")]
    DuplicateObject(ObjectId),
    #[error("objects `{0}` and `{1}` share the supporter {2}")]
    SharedSupporter(ObjectId, ObjectId, Entity),
    #[error("object `{0}` is part of its own support chain")]
    SupportCycle(ObjectId),
    #[error("`{action}` is not executable: {reason}")]
    InadmissibleAction { action: MoveAction, reason: Inadmissible },
    #[error("invalid name `{0}`")]
    InvalidName(String),
    #[error("invalid orientation `{0}`")]
    InvalidOrientation(String),
    #[error("invalid literal `{0}`")]
    InvalidLiteral(String),
}

/// Why a built-in precondition of `move` rejected an action.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Inadmissible {
    SelfDestination,
    NotClear,
    AlreadyThere,
    OntoOwnStack,
}

impl fmt::Display for Inadmissible {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Inadmissible::SelfDestination => "an object cannot be placed on itself",
            Inadmissible::NotClear => "the object has another object on top of it",
            Inadmissible::AlreadyThere => "the object is already at that location",
            Inadmissible::OntoOwnStack => "the destination rests on the moved object",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Orientation {
    Vert,
    HorizX,
    HorizY,
}

impl Orientation {
    /// Enumeration order used everywhere a canonical order is needed.
    pub const ALL: [Orientation; 3] = [Orientation::Vert, Orientation::HorizX, Orientation::HorizY];

    pub fn name(self) -> &'static str {
        match self {
            Orientation::Vert => "vert",
            Orientation::HorizX => "horiz_x",
            Orientation::HorizY => "horiz_y",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for Orientation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Orientation {
    type Err = DomainError;

    /// Accepts the short aliases `hox` and `hoy` as well.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "vert" => Ok(Orientation::Vert),
            "horiz_x" | "hox" => Ok(Orientation::HorizX),
            "horiz_y" | "hoy" => Ok(Orientation::HorizY),
            other => Err(DomainError::InvalidOrientation(other.to_string())),
        }
    }
}

/// A grid cell; `x` runs laterally, `y` runs away from the robot.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Cell {
    pub x: u32,
    pub y: u32,
}

impl Cell {
    pub const fn new(x: u32, y: u32) -> Self {
        Cell { x, y }
    }
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "loc_{}x{}", self.x, self.y)
    }
}

impl FromStr for Cell {
    type Err = DomainError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || DomainError::InvalidName(s.to_string());
        let rest = s.strip_prefix("loc_").ok_or_else(bad)?;
        let (x, y) = rest.split_once('x').ok_or_else(bad)?;
        let digits = |t: &str| !t.is_empty() && t.bytes().all(|b| b.is_ascii_digit());
        if !digits(x) || !digits(y) {
            return Err(bad());
        }
        Ok(Cell::new(x.parse().map_err(|_| bad())?, y.parse().map_err(|_| bad())?))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Grid {
    pub width: u32,
    pub depth: u32,
}

impl Default for Grid {
    fn default() -> Self {
        Grid { width: 5, depth: 3 }
    }
}

impl Grid {
    pub fn new(width: u32, depth: u32) -> Self {
        Grid { width, depth }
    }

    pub fn contains(&self, cell: Cell) -> bool {
        cell.x < self.width && cell.y < self.depth
    }

    pub fn check(&self, cell: Cell) -> Result<(), DomainError> {
        if self.contains(cell) {
            Ok(())
        } else {
            Err(DomainError::CellOutOfRange { cell, width: self.width, depth: self.depth })
        }
    }

    /// All cells in row-major order (`y` then `x`).
    pub fn cells(&self) -> impl Iterator<Item = Cell> + '_ {
        (0..self.depth).flat_map(move |y| (0..self.width).map(move |x| Cell::new(x, y)))
    }

    pub fn cell_count(&self) -> usize {
        (self.width * self.depth) as usize
    }
}

fn valid_identifier(s: &str) -> bool {
    let mut bytes = s.bytes();
    matches!(bytes.next(), Some(b) if b.is_ascii_alphabetic()) && bytes.all(|b| b.is_ascii_alphanumeric() || b == b'_')
}

/// Object name. Cheap to clone.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ObjectId(Arc<str>);

impl ObjectId {
    /// Panics on names that are not identifiers or that look like cells;
    /// use `parse` for untrusted input.
    pub fn new(name: &str) -> Self {
        name.parse().unwrap_or_else(|e| panic!("{e}"))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl FromStr for ObjectId {
    type Err = DomainError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if valid_identifier(s) && !s.starts_with("loc_") {
            Ok(ObjectId(Arc::from(s)))
        } else {
            Err(DomainError::InvalidName(s.to_string()))
        }
    }
}

impl fmt::Display for ObjectId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Debug for ObjectId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", &*self.0)
    }
}

/// Something an object can rest on.
///
/// The derived `Ord` is structural; name order (used for action ordering)
/// is given by [`Entity::name_cmp`].
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Entity {
    Cell(Cell),
    Object(ObjectId),
}

impl Entity {
    pub fn as_cell(&self) -> Option<Cell> {
        match self {
            Entity::Cell(c) => Some(*c),
            Entity::Object(_) => None,
        }
    }

    pub fn as_object(&self) -> Option<&ObjectId> {
        match self {
            Entity::Object(o) => Some(o),
            Entity::Cell(_) => None,
        }
    }

    pub fn name_cmp(&self, other: &Entity) -> Ordering {
        self.to_string().cmp(&other.to_string())
    }
}

impl From<Cell> for Entity {
    fn from(c: Cell) -> Self {
        Entity::Cell(c)
    }
}

impl From<ObjectId> for Entity {
    fn from(o: ObjectId) -> Self {
        Entity::Object(o)
    }
}

impl fmt::Display for Entity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Entity::Cell(c) => c.fmt(f),
            Entity::Object(o) => o.fmt(f),
        }
    }
}

impl FromStr for Entity {
    type Err = DomainError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s.starts_with("loc_") {
            s.parse().map(Entity::Cell)
        } else {
            s.parse().map(Entity::Object)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct MoveAction {
    pub obj: ObjectId,
    pub dest: Entity,
    pub orient: Orientation,
}

impl MoveAction {
    pub fn new(obj: ObjectId, dest: impl Into<Entity>, orient: Orientation) -> Self {
        MoveAction { obj, dest: dest.into(), orient }
    }

    /// Object name, then destination name, then orientation.
    pub fn canonical_cmp(&self, other: &MoveAction) -> Ordering {
        self.obj
            .cmp(&other.obj)
            .then_with(|| self.dest.name_cmp(&other.dest))
            .then_with(|| self.orient.cmp(&other.orient))
    }
}

impl fmt::Display for MoveAction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "move({},{},{})", self.obj, self.dest, self.orient)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Placement {
    pub at: Entity,
    pub ori: Orientation,
}

/// An immutable world snapshot. Objects are kept sorted by name.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct State {
    grid: Grid,
    objects: Vec<(ObjectId, Placement)>,
}

impl State {
    /// Builds a state and checks the static constraints: supporters exist,
    /// no two objects share a supporter, and no object supports itself
    /// transitively.
    pub fn new(
        grid: Grid,
        objects: impl IntoIterator<Item = (ObjectId, Entity, Orientation)>,
    ) -> Result<Self, DomainError> {
        let mut objects: Vec<(ObjectId, Placement)> =
            objects.into_iter().map(|(id, at, ori)| (id, Placement { at, ori })).collect();
        objects.sort_by(|a, b| a.0.cmp(&b.0));
        for pair in objects.windows(2) {
            if pair[0].0 == pair[1].0 {
                return Err(DomainError::DuplicateObject(pair[0].0.clone()));
            }
        }
        let state = State { grid, objects };
        state.validate()?;
        Ok(state)
    }

    fn validate(&self) -> Result<(), DomainError> {
        for (id, p) in &self.objects {
            match &p.at {
                Entity::Cell(c) => self.grid.check(*c)?,
                Entity::Object(o) if o == id => return Err(DomainError::SupportCycle(id.clone())),
                Entity::Object(o) if self.index(o).is_none() => return Err(DomainError::UnknownEntity(p.at.clone())),
                Entity::Object(_) => {}
            }
        }
        for (i, (a, pa)) in self.objects.iter().enumerate() {
            for (b, pb) in &self.objects[i + 1..] {
                if pa.at == pb.at {
                    return Err(DomainError::SharedSupporter(a.clone(), b.clone(), pa.at.clone()));
                }
            }
        }
        for (id, _) in &self.objects {
            if self.base_cell(id).is_none() {
                return Err(DomainError::SupportCycle(id.clone()));
            }
        }
        Ok(())
    }

    fn index(&self, obj: &ObjectId) -> Option<usize> {
        self.objects.binary_search_by(|(id, _)| id.cmp(obj)).ok()
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn len(&self) -> usize {
        self.objects.len()
    }

    pub fn is_empty(&self) -> bool {
        self.objects.is_empty()
    }

    /// Object names in ascending order.
    pub fn objects(&self) -> impl Iterator<Item = &ObjectId> + '_ {
        self.objects.iter().map(|(id, _)| id)
    }

    pub fn placements(&self) -> impl Iterator<Item = (&ObjectId, &Placement)> + '_ {
        self.objects.iter().map(|(id, p)| (id, p))
    }

    pub fn contains(&self, obj: &ObjectId) -> bool {
        self.index(obj).is_some()
    }

    pub fn placement(&self, obj: &ObjectId) -> Option<&Placement> {
        self.index(obj).map(|i| &self.objects[i].1)
    }

    pub fn at(&self, obj: &ObjectId) -> Option<&Entity> {
        self.placement(obj).map(|p| &p.at)
    }

    pub fn ori(&self, obj: &ObjectId) -> Option<Orientation> {
        self.placement(obj).map(|p| p.ori)
    }

    fn has_entity(&self, e: &Entity) -> bool {
        match e {
            Entity::Cell(c) => self.grid.contains(*c),
            Entity::Object(o) => self.contains(o),
        }
    }

    /// The object resting directly on `support`, if any.
    pub fn supported_by(&self, support: &Entity) -> Option<&ObjectId> {
        self.objects.iter().find(|(_, p)| &p.at == support).map(|(id, _)| id)
    }

    pub fn is_clear(&self, obj: &ObjectId) -> bool {
        self.supported_by(&Entity::Object(obj.clone())).is_none()
    }

    /// The table cell at the bottom of the stack holding `obj`. `None` for
    /// unknown objects (and for cyclic chains, which valid states exclude).
    pub fn base_cell(&self, obj: &ObjectId) -> Option<Cell> {
        let mut cur = self.at(obj)?;
        for _ in 0..=self.objects.len() {
            match cur {
                Entity::Cell(c) => return Some(*c),
                Entity::Object(o) => cur = self.at(o)?,
            }
        }
        None
    }

    /// Base cell of an entity; a cell is its own base.
    pub fn base_of(&self, e: &Entity) -> Option<Cell> {
        match e {
            Entity::Cell(c) => Some(*c),
            Entity::Object(o) => self.base_cell(o),
        }
    }

    /// True iff following `at` links down from `obj` reaches `base`.
    pub fn is_below(&self, base: &Entity, obj: &ObjectId) -> Result<bool, DomainError> {
        if !self.has_entity(base) {
            return Err(DomainError::UnknownEntity(base.clone()));
        }
        let mut cur = self.at(obj).ok_or_else(|| DomainError::UnknownObject(obj.clone()))?;
        loop {
            if cur == base {
                return Ok(true);
            }
            match cur {
                Entity::Cell(_) => return Ok(false),
                Entity::Object(o) => cur = self.at(o).expect("validated support chain"),
            }
        }
    }

    fn below_unchecked(&self, base: &Entity, obj: &ObjectId) -> bool {
        self.is_below(base, obj).unwrap_or(false)
    }

    /// Resolves where `obj` would actually land when sent to `dest`: the
    /// topmost entity of the stack that `dest` belongs to.
    pub fn resolve_destination(&self, obj: &ObjectId, dest: &Entity) -> Result<Entity, Inadmissible> {
        if dest.as_object() == Some(obj) {
            return Err(Inadmissible::SelfDestination);
        }
        let mut top = dest.clone();
        while let Some(above) = self.supported_by(&top) {
            if above == obj {
                return Err(Inadmissible::AlreadyThere);
            }
            top = Entity::Object(above.clone());
        }
        if let Entity::Object(t) = &top {
            // Only reachable when the mover is not clear.
            if self.below_unchecked(&Entity::Object(obj.clone()), t) {
                return Err(Inadmissible::OntoOwnStack);
            }
        }
        Ok(top)
    }

    fn with_placement(&self, obj: &ObjectId, placement: Placement) -> State {
        let mut next = self.clone();
        let i = next.index(obj).expect("known object");
        next.objects[i].1 = placement;
        next
    }
}

impl fmt::Display for State {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, (id, p)) in self.objects.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{}@{} {}", id, p.at, p.ori)?;
        }
        f.write_str("}")
    }
}

/// Domain-wide switches plus the precomputed destination order.
#[derive(Debug, Clone)]
pub struct DomainConfig {
    grid: Grid,
    /// Only objects with nothing on top may be moved.
    pub require_clear: bool,
    cell_order: Vec<Cell>,
}

impl DomainConfig {
    pub fn new(grid: Grid) -> Self {
        let mut cell_order: Vec<Cell> = grid.cells().collect();
        cell_order.sort_by_cached_key(|c| c.to_string());
        DomainConfig { grid, require_clear: true, cell_order }
    }

    pub fn with_require_clear(mut self, require_clear: bool) -> Self {
        self.require_clear = require_clear;
        self
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    /// Cells sorted by name.
    pub fn cell_order(&self) -> &[Cell] {
        &self.cell_order
    }
}

impl Default for DomainConfig {
    fn default() -> Self {
        DomainConfig::new(Grid::default())
    }
}

/// Checks the built-in preconditions and returns the normalized destination.
pub fn check_admissible(state: &State, action: &MoveAction, config: &DomainConfig) -> Result<Entity, DomainError> {
    if !state.contains(&action.obj) {
        return Err(DomainError::UnknownObject(action.obj.clone()));
    }
    if let Entity::Cell(c) = &action.dest {
        state.grid.check(*c)?;
    } else if !state.has_entity(&action.dest) {
        return Err(DomainError::UnknownEntity(action.dest.clone()));
    }
    let inadmissible = |reason| DomainError::InadmissibleAction { action: action.clone(), reason };
    if action.dest.as_object() == Some(&action.obj) {
        return Err(inadmissible(Inadmissible::SelfDestination));
    }
    if config.require_clear && !state.is_clear(&action.obj) {
        return Err(inadmissible(Inadmissible::NotClear));
    }
    state.resolve_destination(&action.obj, &action.dest).map_err(inadmissible)
}

pub fn apply(state: &State, action: &MoveAction, config: &DomainConfig) -> Result<State, DomainError> {
    let dest = check_admissible(state, action, config)?;
    Ok(apply_resolved(state, &action.obj, dest, action.orient))
}

pub(crate) fn apply_resolved(state: &State, obj: &ObjectId, dest: Entity, orient: Orientation) -> State {
    state.with_placement(obj, Placement { at: dest, ori: orient })
}

/// Admissible actions paired with their normalized destinations, in
/// canonical order. Only cell destinations are generated.
pub(crate) fn admissible_moves(state: &State, config: &DomainConfig) -> Vec<(MoveAction, Entity)> {
    let mut out = Vec::new();
    for obj in state.objects() {
        if config.require_clear && !state.is_clear(obj) {
            continue;
        }
        for &cell in config.cell_order() {
            let dest = Entity::Cell(cell);
            if let Ok(resolved) = state.resolve_destination(obj, &dest) {
                for orient in Orientation::ALL {
                    out.push((MoveAction::new(obj.clone(), dest.clone(), orient), resolved.clone()));
                }
            }
        }
    }
    out
}

/// Every admissible action in `state`, ordered by object name, destination
/// name, then orientation.
pub fn enumerate_actions(state: &State, config: &DomainConfig) -> Vec<MoveAction> {
    admissible_moves(state, config).into_iter().map(|(a, _)| a).collect()
}

/// A fluent literal, used both in goals and in learned constraint conditions.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum FluentLiteral {
    /// Immediate supporter.
    At(ObjectId, Entity),
    Ori(ObjectId, Orientation),
    /// `base` lies somewhere beneath the object.
    Below(Entity, ObjectId),
}

impl FluentLiteral {
    pub fn holds(&self, state: &State) -> bool {
        match self {
            FluentLiteral::At(o, e) => state.at(o) == Some(e),
            FluentLiteral::Ori(o, r) => state.ori(o) == Some(*r),
            FluentLiteral::Below(base, o) => state.below_unchecked(base, o),
        }
    }

    /// The object whose fluents this literal constrains.
    pub fn subject(&self) -> &ObjectId {
        match self {
            FluentLiteral::At(o, _) | FluentLiteral::Ori(o, _) | FluentLiteral::Below(_, o) => o,
        }
    }

    pub fn entities(&self) -> Vec<Entity> {
        match self {
            FluentLiteral::At(o, e) | FluentLiteral::Below(e, o) => {
                vec![Entity::Object(o.clone()), e.clone()]
            }
            FluentLiteral::Ori(o, _) => vec![Entity::Object(o.clone())],
        }
    }
}

impl fmt::Display for FluentLiteral {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FluentLiteral::At(o, e) => write!(f, "at({o})={e}"),
            FluentLiteral::Ori(o, r) => write!(f, "ori({o})={r}"),
            FluentLiteral::Below(b, o) => write!(f, "below({b},{o})"),
        }
    }
}

impl FromStr for FluentLiteral {
    type Err = DomainError;

    /// `at(o)=e`, `ori(o)=r` or `below(e,o)`; whitespace is ignored.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let compact: String = s.chars().filter(|c| !c.is_whitespace()).collect();
        let bad = || DomainError::InvalidLiteral(s.to_string());
        let call = |prefix: &str| -> Option<(String, String)> {
            let rest = compact.strip_prefix(prefix)?.strip_prefix('(')?;
            let (args, tail) = rest.split_once(')')?;
            Some((args.to_string(), tail.to_string()))
        };
        if let Some((arg, tail)) = call("at") {
            let value = tail.strip_prefix('=').ok_or_else(bad)?;
            return Ok(FluentLiteral::At(arg.parse()?, value.parse()?));
        }
        if let Some((arg, tail)) = call("ori") {
            let value = tail.strip_prefix('=').ok_or_else(bad)?;
            return Ok(FluentLiteral::Ori(arg.parse()?, value.parse()?));
        }
        if let Some((args, tail)) = call("below") {
            if !tail.is_empty() {
                return Err(bad());
            }
            let (base, obj) = args.split_once(',').ok_or_else(bad)?;
            return Ok(FluentLiteral::Below(base.parse()?, obj.parse()?));
        }
        Err(bad())
    }
}

/// A conjunction of fluent literals.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct GoalFormula {
    pub literals: Vec<FluentLiteral>,
}

impl GoalFormula {
    pub fn new(literals: Vec<FluentLiteral>) -> Self {
        GoalFormula { literals }
    }

    pub fn holds(&self, state: &State) -> bool {
        self.literals.iter().all(|l| l.holds(state))
    }

    /// Checks that every object and cell named in the goal exists in `state`.
    pub fn check_references(&self, state: &State) -> Result<(), DomainError> {
        for lit in &self.literals {
            for e in lit.entities() {
                match &e {
                    Entity::Cell(c) => state.grid().check(*c)?,
                    Entity::Object(o) if !state.contains(o) => return Err(DomainError::UnknownObject(o.clone())),
                    Entity::Object(_) => {}
                }
            }
        }
        Ok(())
    }
}

impl fmt::Display for GoalFormula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.literals.is_empty() {
            return f.write_str("true");
        }
        for (i, l) in self.literals.iter().enumerate() {
            if i > 0 {
                f.write_str(" & ")?;
            }
            write!(f, "{l}")?;
        }
        Ok(())
    }
}

pub fn goal_holds(state: &State, goal: &GoalFormula) -> bool {
    goal.holds(state)
}
