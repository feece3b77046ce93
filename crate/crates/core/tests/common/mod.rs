//! Random small instances and brute-force oracles that share no code with
//! the planner or the check collection.
#![allow(dead_code)]

use std::collections::BTreeSet;

use perceplan::geometry::{reach_blocked, unstackable, BlockerRule, ShapeCatalog, ShapeId, StackRule};
use perceplan::perception::{CameraSpec, GroundTruth, PhysicalObject, SceneTruth, Target, TaskSpec};
use perceplan::world::{Cell, FluentLiteral, Grid, Orientation};
use perceplan::{apply, DomainConfig, Entity, GoalFormula, Horizon, LoadedInstance, MoveAction, ObjectId, Plan, State};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const SHAPES: [&str; 3] = ["disc", "peg", "plate"];

fn pick_orient(rng: &mut (impl Rng + ?Sized)) -> Orientation {
    Orientation::ALL[rng.gen_range(0..3)]
}

fn random_cell(rng: &mut impl Rng, grid: Grid) -> Cell {
    Cell::new(rng.gen_range(0..grid.width), rng.gen_range(0..grid.depth))
}

pub fn random_catalog(rng: &mut ChaCha8Rng) -> ShapeCatalog {
    let shapes: Vec<ShapeId> = SHAPES.iter().map(|s| ShapeId::new(s)).collect();
    let rule_count = rng.gen_range(0..=3);
    let mut unstable = Vec::new();
    let maybe_shape = |rng: &mut ChaCha8Rng| rng.gen_bool(0.6).then(|| shapes[rng.gen_range(0..3)].clone());
    while unstable.len() < rule_count {
        let top_shape = maybe_shape(rng);
        let top_orient = rng.gen_bool(0.5).then(|| pick_orient(rng));
        let bottom_shape = maybe_shape(rng);
        let bottom_orient = rng.gen_bool(0.5).then(|| pick_orient(rng));
        if let Ok(rule) = StackRule::new(top_shape, top_orient, bottom_shape, bottom_orient) {
            unstable.push(rule);
        }
    }
    let blockers = (0..rng.gen_range(0..=2))
        .map(|_| BlockerRule { shape: shapes[rng.gen_range(0..3)].clone(), orient: pick_orient(rng) })
        .collect();
    ShapeCatalog::new(shapes, unstable, blockers).unwrap()
}

/// At most 3 objects on a grid of at most 3x2 cells, horizon at most 3.
pub fn random_instance(seed: u64) -> LoadedInstance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let grid = Grid::new(rng.gen_range(1..=3), rng.gen_range(1..=2));
    let n = rng.gen_range(1..=3);
    let jitter = |rng: &mut ChaCha8Rng| rng.gen_range(-0.3..0.3);
    let objects: Vec<PhysicalObject> = (0..n)
        .map(|i| {
            let cell = random_cell(&mut rng, grid);
            PhysicalObject {
                label: format!("part{i}"),
                cell,
                orient: pick_orient(&mut rng),
                shape: ShapeId::new(SHAPES[rng.gen_range(0..3)]),
                position: (cell.x as f64 + 0.5 + jitter(&mut rng), cell.y as f64 + 0.5 + jitter(&mut rng)),
            }
        })
        .collect();

    let mut infront = Vec::new();
    let preset = if rng.gen_bool(0.5) { "depth" } else { "none" };
    if grid.cell_count() > 1 {
        for _ in 0..rng.gen_range(0..=2) {
            let (a, b) = (random_cell(&mut rng, grid), random_cell(&mut rng, grid));
            if a != b {
                infront.push((a, b));
            }
        }
    }
    let scene = SceneTruth::new(grid, objects, CameraSpec { preset: preset.to_string(), infront }).unwrap();

    let k = rng.gen_range(1..=n.min(2));
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);
    let targets: Vec<Target> = (0..k)
        .map(|i| {
            let (x, y) = scene.objects()[order[i]].position;
            Target { name: ObjectId::new(&format!("obj{}", i + 1)), near: (x + jitter(&mut rng) / 3.0, y) }
        })
        .collect();
    let names: Vec<ObjectId> = targets.iter().map(|t| t.name.clone()).collect();
    let literals = (0..rng.gen_range(1..=2))
        .map(|_| {
            let o = names[rng.gen_range(0..k)].clone();
            match rng.gen_range(0..4) {
                0 => FluentLiteral::At(o, Entity::Cell(random_cell(&mut rng, grid))),
                1 => FluentLiteral::Ori(o, pick_orient(&mut rng)),
                2 if k > 1 => {
                    let other = names.iter().find(|m| **m != o).unwrap().clone();
                    FluentLiteral::Below(Entity::Object(other), o)
                }
                _ => FluentLiteral::Below(Entity::Cell(random_cell(&mut rng, grid)), o),
            }
        })
        .collect();
    let task = TaskSpec::new(targets, GoalFormula::new(literals)).unwrap();
    let horizon = Horizon::new(rng.gen_range(1..=3)).unwrap();
    LoadedInstance::new(scene, task, horizon, random_catalog(&mut rng)).unwrap()
}

/// Every action `apply` accepts, generated over all objects, cells and
/// orientations and sorted canonically.
pub fn brute_force_actions(state: &State, config: &DomainConfig) -> Vec<(MoveAction, State)> {
    let mut out = Vec::new();
    let objects: Vec<ObjectId> = state.objects().cloned().collect();
    for obj in &objects {
        for cell in state.grid().cells() {
            for orient in Orientation::ALL {
                let action = MoveAction::new(obj.clone(), cell, orient);
                if let Ok(next) = apply(state, &action, config) {
                    out.push((action, next));
                }
            }
        }
    }
    out.sort_by(|a, b| a.0.canonical_cmp(&b.0));
    out
}

/// All plans of exactly `len` steps whose final state satisfies the goal.
pub fn brute_force_plans_of_length(init: &State, goal: &GoalFormula, len: usize, config: &DomainConfig) -> Vec<Plan> {
    let mut layer: Vec<(Vec<MoveAction>, State)> = vec![(Vec::new(), init.clone())];
    for _ in 0..len {
        let mut next = Vec::new();
        for (prefix, state) in &layer {
            for (a, s) in brute_force_actions(state, config) {
                let mut p = prefix.clone();
                p.push(a);
                next.push((p, s));
            }
        }
        layer = next;
    }
    let mut plans: Vec<Plan> = layer.into_iter().filter(|(_, s)| goal.holds(s)).map(|(p, _)| Plan::new(p)).collect();
    plans.sort_by(|a, b| a.canonical_cmp(b));
    plans
}

/// Every goal-reaching plan up to the horizon, shortest first.
pub fn brute_force_plans(init: &State, goal: &GoalFormula, maxstep: usize, config: &DomainConfig) -> Vec<Plan> {
    (0..=maxstep).flat_map(|l| brute_force_plans_of_length(init, goal, l, config)).collect()
}

fn base_cell(state: &State, obj: &ObjectId) -> Cell {
    let mut e = state.at(obj).unwrap().clone();
    loop {
        match e {
            Entity::Cell(c) => return c,
            Entity::Object(o) => e = state.at(&o).unwrap().clone(),
        }
    }
}

/// Feasibility of one step, recomputed from the catalog rules and true
/// shapes: where the mover lands is read off the successor state.
pub fn step_feasible(
    instance: &LoadedInstance,
    truth: &GroundTruth,
    state: &State,
    action: &MoveAction,
    next: &State,
) -> bool {
    let shape = |o: &ObjectId| truth.shape(o).unwrap().clone();
    let catalog = &instance.catalog;
    if let Some(Entity::Object(bottom)) = next.at(&action.obj) {
        let b_ori = state.ori(bottom).unwrap();
        if unstackable(catalog, &shape(&action.obj), action.orient, &shape(bottom), b_ori).unwrap() {
            return false;
        }
    }
    let pick = base_cell(state, &action.obj);
    let place = base_cell(next, &action.obj);
    for (other, p) in state.placements() {
        if *other == action.obj {
            continue;
        }
        let c = base_cell(state, other);
        for target in [pick, place] {
            if reach_blocked(catalog, &instance.occlusion, &shape(other), c, p.ori, target).unwrap() {
                return false;
            }
        }
    }
    true
}

pub fn plan_feasible(instance: &LoadedInstance, truth: &GroundTruth, init: &State, plan: &Plan) -> bool {
    let mut state = init.clone();
    for action in plan.steps() {
        let next = apply(&state, action, &instance.config).unwrap();
        if !step_feasible(instance, truth, &state, action, &next) {
            return false;
        }
        state = next;
    }
    true
}

/// The feasible plans within the horizon, by exhaustive generation.
pub fn brute_force_feasible(instance: &LoadedInstance) -> BTreeSet<String> {
    let view = instance.perceive().unwrap();
    let truth = GroundTruth::new(&view);
    let init = view.initial_state();
    brute_force_plans(init, &instance.task.goal, instance.horizon.maxstep(), &instance.config)
        .into_iter()
        .filter(|p| plan_feasible(instance, &truth, init, p))
        .map(|p| p.to_string())
        .collect()
}

pub fn plan_keys<'a>(plans: impl IntoIterator<Item = &'a Plan>) -> BTreeSet<String> {
    plans.into_iter().map(|p| p.to_string()).collect()
}
