//! Simulated perception over a ground-truth scene.
//!
//! `bottom_up` names and localizes objects without revealing shapes. Shapes
//! are only available through [`PerceptView::shape_of`], which caches its
//! answers and counts one query per distinct object.

use std::collections::{BTreeMap, BTreeSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::geometry::{GeometryError, OcclusionRelation, ShapeId};
use crate::world::{Cell, DomainError, Entity, GoalFormula, Grid, ObjectId, Orientation, State};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PerceptionError {
    #[error("scene has {objects} objects but the task names {targets} targets")]
    AssociationFailure { objects: usize, targets: usize },
    #[error("unknown object `{0}`")]
    UnknownObject(ObjectId),
    #[error("unknown camera preset `{0}`")]
    UnknownPreset(String),
    #[error("duplicate label `{0}`")]
    DuplicateLabel(String),
    #[error("position ({0}, {1}) lies outside the workspace")]
    OutOfBounds(f64, f64),
    #[error("task targets must be named obj1..objN in order, found `{0}`")]
    TargetName(ObjectId),
    #[error(transparent)]
    Domain(#[from] DomainError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// A physical object as the simulator knows it.
#[derive(Debug, Clone, PartialEq)]
pub struct PhysicalObject {
    pub label: String,
    pub cell: Cell,
    pub orient: Orientation,
    pub shape: ShapeId,
    /// Nominal planar position in cell units, used for data association.
    pub position: (f64, f64),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CameraSpec {
    /// `depth` or `none`.
    pub preset: String,
    pub infront: Vec<(Cell, Cell)>,
}

impl Default for CameraSpec {
    fn default() -> Self {
        CameraSpec { preset: "depth".to_string(), infront: Vec::new() }
    }
}

/// Ground truth. Objects sharing a cell are stacked in declaration order,
/// first one at the bottom.
#[derive(Debug, Clone, PartialEq)]
pub struct SceneTruth {
    grid: Grid,
    objects: Vec<PhysicalObject>,
    camera: CameraSpec,
}

fn in_workspace(grid: Grid, (x, y): (f64, f64)) -> bool {
    x.is_finite() && y.is_finite() && (0.0..=grid.width as f64).contains(&x) && (0.0..=grid.depth as f64).contains(&y)
}

impl SceneTruth {
    pub fn new(grid: Grid, objects: Vec<PhysicalObject>, camera: CameraSpec) -> Result<Self, PerceptionError> {
        let mut labels = BTreeSet::new();
        for o in &objects {
            grid.check(o.cell)?;
            if !in_workspace(grid, o.position) {
                return Err(PerceptionError::OutOfBounds(o.position.0, o.position.1));
            }
            if !labels.insert(o.label.as_str()) {
                return Err(PerceptionError::DuplicateLabel(o.label.clone()));
            }
        }
        for &(a, b) in &camera.infront {
            grid.check(a)?;
            grid.check(b)?;
        }
        Ok(SceneTruth { grid, objects, camera })
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn objects(&self) -> &[PhysicalObject] {
        &self.objects
    }

    pub fn camera(&self) -> &CameraSpec {
        &self.camera
    }

    /// Physical object indices in row-major cell order (`y`, then `x`, then
    /// stack position).
    fn row_major(&self) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..self.objects.len()).collect();
        idx.sort_by_key(|&i| (self.objects[i].cell.y, self.objects[i].cell.x, i));
        idx
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Target {
    pub name: ObjectId,
    pub near: (f64, f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct TaskSpec {
    pub targets: Vec<Target>,
    pub goal: GoalFormula,
}

impl TaskSpec {
    pub fn new(targets: Vec<Target>, goal: GoalFormula) -> Result<Self, PerceptionError> {
        for (i, t) in targets.iter().enumerate() {
            if t.name.as_str() != format!("obj{}", i + 1) {
                return Err(PerceptionError::TargetName(t.name.clone()));
            }
        }
        Ok(TaskSpec { targets, goal })
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct QueryLedger {
    queried: BTreeSet<ObjectId>,
}

impl QueryLedger {
    pub fn count(&self) -> usize {
        self.queried.len()
    }

    pub fn queried(&self) -> impl Iterator<Item = &ObjectId> + '_ {
        self.queried.iter()
    }
}

/// Anything that can answer "what shape is this object".
pub trait ShapeSource {
    fn shape_of(&mut self, obj: &ObjectId) -> Result<ShapeId, PerceptionError>;
}

/// What perception has revealed so far.
#[derive(Debug, Clone)]
pub struct PerceptView {
    naming: BTreeMap<ObjectId, usize>,
    initial: State,
    truth: Vec<ShapeId>,
    cache: BTreeMap<ObjectId, ShapeId>,
    ledger: QueryLedger,
}

impl PerceptView {
    pub fn initial_state(&self) -> &State {
        &self.initial
    }

    /// Named objects in ascending order.
    pub fn objects(&self) -> impl Iterator<Item = &ObjectId> + '_ {
        self.naming.keys()
    }

    /// Label of the physical object a name was associated with.
    pub fn physical_index(&self, obj: &ObjectId) -> Option<usize> {
        self.naming.get(obj).copied()
    }

    /// Cached shape, without issuing a query.
    pub fn cached_shape(&self, obj: &ObjectId) -> Option<&ShapeId> {
        self.cache.get(obj)
    }

    pub fn known_shapes(&self) -> impl Iterator<Item = (&ObjectId, &ShapeId)> + '_ {
        self.cache.iter()
    }

    pub fn ledger(&self) -> &QueryLedger {
        &self.ledger
    }

    pub fn query_count(&self) -> usize {
        self.ledger.count()
    }

    /// Top-down recognition. The first request for an object costs one query;
    /// later requests hit the cache.
    pub fn shape_of(&mut self, obj: &ObjectId) -> Result<ShapeId, PerceptionError> {
        if let Some(s) = self.cache.get(obj) {
            return Ok(s.clone());
        }
        let idx = *self.naming.get(obj).ok_or_else(|| PerceptionError::UnknownObject(obj.clone()))?;
        let shape = self.truth[idx].clone();
        log::debug!("perception query: shape_of({obj}) = {shape}");
        self.cache.insert(obj.clone(), shape.clone());
        self.ledger.queried.insert(obj.clone());
        Ok(shape)
    }
}

impl ShapeSource for PerceptView {
    fn shape_of(&mut self, obj: &ObjectId) -> Result<ShapeId, PerceptionError> {
        PerceptView::shape_of(self, obj)
    }
}

/// Orientation noise for robustness experiments: each object's perceived
/// orientation is replaced by a different one with probability
/// `flip_probability`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseModel {
    pub flip_probability: f64,
    pub seed: u64,
}

/// Names and localizes objects. Targets are associated greedily, in
/// declaration order, with the nearest unassociated object (ties go to the
/// earlier one in row-major cell order). Leftover objects become `sco1`,
/// `sco2`, ... in row-major order. No shapes are revealed.
pub fn bottom_up(scene: &SceneTruth, task: &TaskSpec) -> Result<PerceptView, PerceptionError> {
    build_view(scene, task, None)
}

pub fn bottom_up_noisy(scene: &SceneTruth, task: &TaskSpec, noise: NoiseModel) -> Result<PerceptView, PerceptionError> {
    build_view(scene, task, Some(noise))
}

fn build_view(scene: &SceneTruth, task: &TaskSpec, noise: Option<NoiseModel>) -> Result<PerceptView, PerceptionError> {
    if scene.objects.len() < task.targets.len() {
        return Err(PerceptionError::AssociationFailure { objects: scene.objects.len(), targets: task.targets.len() });
    }
    let order = scene.row_major();
    let mut names: Vec<Option<ObjectId>> = vec![None; scene.objects.len()];
    for target in &task.targets {
        let (tx, ty) = target.near;
        let mut best: Option<(f64, usize)> = None;
        for &i in &order {
            if names[i].is_some() {
                continue;
            }
            let (px, py) = scene.objects[i].position;
            let d = (px - tx).hypot(py - ty);
            // strict comparison keeps the earliest in row-major order on ties
            if best.is_none_or(|(bd, _)| d < bd) {
                best = Some((d, i));
            }
        }
        let (_, i) = best.expect("enough objects for every target");
        names[i] = Some(target.name.clone());
    }
    let mut next_sco = 1;
    for &i in &order {
        if names[i].is_none() {
            names[i] = Some(ObjectId::new(&format!("sco{next_sco}")));
            next_sco += 1;
        }
    }
    let names: Vec<ObjectId> = names.into_iter().map(|n| n.expect("all named")).collect();

    let mut rng = noise.map(|n| ChaCha8Rng::seed_from_u64(n.seed));
    let mut tops: BTreeMap<Cell, ObjectId> = BTreeMap::new();
    let mut placements = Vec::with_capacity(names.len());
    for (i, obj) in scene.objects.iter().enumerate() {
        let at = match tops.insert(obj.cell, names[i].clone()) {
            Some(below) => Entity::Object(below),
            None => Entity::Cell(obj.cell),
        };
        let mut ori = obj.orient;
        if let (Some(rng), Some(n)) = (rng.as_mut(), noise) {
            if rng.gen_bool(n.flip_probability.clamp(0.0, 1.0)) {
                let others: Vec<Orientation> = Orientation::ALL.into_iter().filter(|&o| o != ori).collect();
                ori = others[rng.gen_range(0..others.len())];
            }
        }
        placements.push((names[i].clone(), at, ori));
    }
    let initial = State::new(scene.grid, placements)?;

    Ok(PerceptView {
        naming: names.iter().cloned().enumerate().map(|(i, n)| (n, i)).collect(),
        initial,
        truth: scene.objects.iter().map(|o| o.shape.clone()).collect(),
        cache: BTreeMap::new(),
        ledger: QueryLedger::default(),
    })
}

/// Materializes the in-front relation from the camera spec.
pub fn occlusion_of(scene: &SceneTruth) -> Result<OcclusionRelation, PerceptionError> {
    let mut rel = match scene.camera.preset.as_str() {
        "depth" => OcclusionRelation::depth_preset(scene.grid),
        "none" => OcclusionRelation::empty(scene.grid),
        other => return Err(PerceptionError::UnknownPreset(other.to_string())),
    };
    for &(front, behind) in &scene.camera.infront {
        rel.insert(front, behind)?;
    }
    Ok(rel)
}

/// Direct access to true shapes, outside the query ledger. Used to grade
/// plans that were produced without perception, and by tests.
#[derive(Debug, Clone)]
pub struct GroundTruth {
    shapes: BTreeMap<ObjectId, ShapeId>,
}

impl GroundTruth {
    pub fn new(view: &PerceptView) -> Self {
        let shapes = view.naming.iter().map(|(n, &i)| (n.clone(), view.truth[i].clone())).collect();
        GroundTruth { shapes }
    }

    pub fn shape(&self, obj: &ObjectId) -> Option<&ShapeId> {
        self.shapes.get(obj)
    }
}

impl ShapeSource for GroundTruth {
    fn shape_of(&mut self, obj: &ObjectId) -> Result<ShapeId, PerceptionError> {
        self.shapes.get(obj).cloned().ok_or_else(|| PerceptionError::UnknownObject(obj.clone()))
    }
}
