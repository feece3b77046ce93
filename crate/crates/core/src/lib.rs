//! Task planning for a tabletop manipulator whose geometric knowledge
//! comes from perception.
//!
//! The symbolic world ([`world`]) is a grid of cells holding stacks of
//! objects. Whether a move is physically possible depends on object shapes
//! ([`geometry`]), which are only known after asking perception
//! ([`perception`]). [`search`] enumerates plans, and [`strategy`] combines
//! the two in four different ways while counting perception queries.

pub mod bundled;
pub mod format;
pub mod geometry;
pub mod perception;
pub mod search;
pub mod strategy;
pub mod world;

pub use format::{load_instance, parse_catalog, parse_instance, parse_plan, render_plan, LoadError, ParseError};
pub use geometry::{collect_checks, CheckQuery, OcclusionRelation, ShapeCatalog, ShapeId};
pub use perception::{bottom_up, PerceptView, SceneTruth, ShapeSource, TaskSpec};
pub use search::{enumerate_plans, Horizon, Plan, PlanCursor, SearchError, SearchProblem};
pub use strategy::{
    derive_constraints, precompile_checks, run_strategy, verify_plan, LoadedInstance, RunOutcome, Strategy,
    StrategyError, Task,
};
pub use world::{
    apply, enumerate_actions, DomainConfig, Entity, GoalFormula, MoveAction, ObjectId, Orientation, State,
};
