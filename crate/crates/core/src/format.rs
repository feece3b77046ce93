//! Text formats: instance files, shape catalogs and plan listings.
//!
//! All formats are line oriented; `#` starts a comment that runs to the end
//! of the line and blank lines are ignored.
//!
//! Instance files:
//!
//! ```text
//! grid 5 3
//! camera depth
//! infront loc_0x0 loc_1x0
//! object nut cell 0 1 orient vert shape nut_m20 at 0.5 1.5
//! target obj1 near 0.5 1.5
//! goal below(loc_2x1,obj1)
//! maxstep 3
//! ```
//!
//! Catalogs:
//!
//! ```text
//! shape bolt_m20_100
//! unstable bolt_m20_100 horiz_x aluprofil_f20_100_gray *
//! blocker bolt_m20_100 vert
//! ```

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::geometry::{BlockerRule, ShapeCatalog, ShapeId, StackRule};
use crate::perception::{CameraSpec, PhysicalObject, SceneTruth, Target, TaskSpec};
use crate::search::{Horizon, Plan};
use crate::strategy::{LoadedInstance, StrategyError};
use crate::world::{Cell, Entity, FluentLiteral, GoalFormula, Grid, MoveAction, ObjectId, Orientation};

/// Default horizon when an instance file has no `maxstep` line.
pub const DEFAULT_MAXSTEP: usize = 3;

#[derive(Debug, Clone, PartialEq, Error)]
#[error("line {line}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub message: String,
}

impl ParseError {
    fn new(line: usize, message: impl fmt::Display) -> Self {
        ParseError { line, message: message.to_string() }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LoadError {
    #[error("instance: {0}")]
    Instance(ParseError),
    #[error("catalog: {0}")]
    Catalog(ParseError),
    #[error(transparent)]
    Invalid(#[from] StrategyError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParsedInstance {
    pub scene: SceneTruth,
    pub task: TaskSpec,
    pub horizon: Horizon,
}

impl ParsedInstance {
    pub fn goal(&self) -> &GoalFormula {
        &self.task.goal
    }
}

/// Non-empty lines with comments stripped, numbered from 1.
fn lines(text: &str) -> impl Iterator<Item = (usize, Vec<&str>)> {
    text.lines().enumerate().filter_map(|(i, raw)| {
        let content = raw.split('#').next().unwrap_or("");
        let tokens: Vec<&str> = content.split_whitespace().collect();
        (!tokens.is_empty()).then_some((i + 1, tokens))
    })
}

fn parse_tok<T: FromStr>(line: usize, tok: &str, what: &str) -> Result<T, ParseError>
where
    T::Err: fmt::Display,
{
    tok.parse().map_err(|e| ParseError::new(line, format!("invalid {what} `{tok}`: {e}")))
}

fn expect_len(line: usize, tokens: &[&str], n: usize, usage: &str) -> Result<(), ParseError> {
    if tokens.len() == n {
        Ok(())
    } else {
        Err(ParseError::new(line, format!("expected `{usage}`")))
    }
}

fn keyword(line: usize, tokens: &[&str], at: usize, kw: &str) -> Result<(), ParseError> {
    if tokens.get(at) == Some(&kw) {
        Ok(())
    } else {
        Err(ParseError::new(line, format!("expected `{kw}` at position {}", at + 1)))
    }
}

fn coord(line: usize, tok: &str) -> Result<f64, ParseError> {
    let v: f64 = parse_tok(line, tok, "coordinate")?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(ParseError::new(line, format!("invalid coordinate `{tok}`")))
    }
}

fn in_bounds(grid: Grid, (x, y): (f64, f64)) -> bool {
    (0.0..=grid.width as f64).contains(&x) && (0.0..=grid.depth as f64).contains(&y)
}

pub fn parse_instance(text: &str) -> Result<ParsedInstance, ParseError> {
    let mut grid: Option<Grid> = None;
    let mut preset = "depth".to_string();
    let mut infront = Vec::new();
    let mut objects: Vec<PhysicalObject> = Vec::new();
    let mut targets: Vec<Target> = Vec::new();
    let mut goal = Vec::new();
    let mut maxstep: Option<usize> = None;

    for (ln, t) in lines(text) {
        let need_grid = |grid: Option<Grid>| grid.ok_or_else(|| ParseError::new(ln, "`grid` must come first"));
        let cell = |grid: Grid, x: &str, y: &str| -> Result<Cell, ParseError> {
            let c = Cell::new(parse_tok(ln, x, "column")?, parse_tok(ln, y, "row")?);
            grid.check(c).map_err(|e| ParseError::new(ln, e))?;
            Ok(c)
        };
        let named_cell = |grid: Grid, tok: &str| -> Result<Cell, ParseError> {
            let c: Cell = parse_tok(ln, tok, "cell")?;
            grid.check(c).map_err(|e| ParseError::new(ln, e))?;
            Ok(c)
        };
        match t[0] {
            "grid" => {
                expect_len(ln, &t, 3, "grid <width> <depth>")?;
                if grid.is_some() {
                    return Err(ParseError::new(ln, "duplicate `grid`"));
                }
                let g = Grid::new(parse_tok(ln, t[1], "width")?, parse_tok(ln, t[2], "depth")?);
                if g.width == 0 || g.depth == 0 {
                    return Err(ParseError::new(ln, "grid dimensions must be positive"));
                }
                grid = Some(g);
            }
            "camera" => {
                expect_len(ln, &t, 2, "camera <preset>")?;
                if !matches!(t[1], "depth" | "none") {
                    return Err(ParseError::new(ln, format!("unknown camera preset `{}`", t[1])));
                }
                preset = t[1].to_string();
            }
            "infront" => {
                expect_len(ln, &t, 3, "infront <cellA> <cellB>")?;
                let g = need_grid(grid)?;
                let (a, b) = (named_cell(g, t[1])?, named_cell(g, t[2])?);
                if a == b {
                    return Err(ParseError::new(ln, "a cell cannot be in front of itself"));
                }
                infront.push((a, b));
            }
            "object" => {
                let usage = "object <name> cell <x> <y> orient <orient> shape <shape> at <fx> <fy>";
                expect_len(ln, &t, 12, usage)?;
                for (i, kw) in [(2, "cell"), (5, "orient"), (7, "shape"), (9, "at")] {
                    keyword(ln, &t, i, kw)?;
                }
                let g = need_grid(grid)?;
                let label = t[1].to_string();
                if objects.iter().any(|o| o.label == label) {
                    return Err(ParseError::new(ln, format!("duplicate object `{label}`")));
                }
                let position = (coord(ln, t[10])?, coord(ln, t[11])?);
                if !in_bounds(g, position) {
                    return Err(ParseError::new(ln, "position outside the workspace"));
                }
                objects.push(PhysicalObject {
                    label,
                    cell: cell(g, t[3], t[4])?,
                    orient: parse_tok(ln, t[6], "orientation")?,
                    shape: parse_tok(ln, t[8], "shape")?,
                    position,
                });
            }
            "target" => {
                expect_len(ln, &t, 5, "target <objName> near <fx> <fy>")?;
                keyword(ln, &t, 2, "near")?;
                let g = need_grid(grid)?;
                let name: ObjectId = parse_tok(ln, t[1], "object name")?;
                if targets.iter().any(|x| x.name == name) {
                    return Err(ParseError::new(ln, format!("duplicate target `{name}`")));
                }
                if name.as_str() != format!("obj{}", targets.len() + 1) {
                    return Err(ParseError::new(ln, format!("expected target `obj{}`", targets.len() + 1)));
                }
                let near = (coord(ln, t[3])?, coord(ln, t[4])?);
                if !in_bounds(g, near) {
                    return Err(ParseError::new(ln, "position outside the workspace"));
                }
                targets.push(Target { name, near });
            }
            "goal" => {
                if t.len() < 2 {
                    return Err(ParseError::new(ln, "expected `goal <literal>`"));
                }
                let g = need_grid(grid)?;
                let lit: FluentLiteral = parse_tok(ln, &t[1..].concat(), "goal")?;
                for e in lit.entities() {
                    if let Entity::Cell(c) = e {
                        g.check(c).map_err(|err| ParseError::new(ln, err))?;
                    }
                }
                goal.push(lit);
            }
            "maxstep" => {
                expect_len(ln, &t, 2, "maxstep <n>")?;
                if maxstep.is_some() {
                    return Err(ParseError::new(ln, "duplicate `maxstep`"));
                }
                maxstep = Some(parse_tok(ln, t[1], "maxstep")?);
            }
            other => return Err(ParseError::new(ln, format!("unknown directive `{other}`"))),
        }
    }

    let grid = grid.ok_or_else(|| ParseError::new(1, "missing `grid` declaration"))?;
    let last = text.lines().count().max(1);
    let horizon = Horizon::new(maxstep.unwrap_or(DEFAULT_MAXSTEP)).map_err(|e| ParseError::new(last, e))?;
    let scene = SceneTruth::new(grid, objects, CameraSpec { preset, infront }).map_err(|e| ParseError::new(last, e))?;
    if scene.objects().len() < targets.len() {
        return Err(ParseError::new(last, "more targets than scene objects"));
    }
    let task = TaskSpec::new(targets, GoalFormula::new(goal)).map_err(|e| ParseError::new(last, e))?;
    Ok(ParsedInstance { scene, task, horizon })
}

pub fn parse_catalog(text: &str) -> Result<ShapeCatalog, ParseError> {
    let mut shapes = BTreeSet::new();
    let mut unstable = Vec::new();
    let mut blockers = Vec::new();
    for (ln, t) in lines(text) {
        let known = |tok: &str| -> Result<ShapeId, ParseError> {
            let s: ShapeId = parse_tok(ln, tok, "shape")?;
            if shapes.contains(&s) {
                Ok(s)
            } else {
                Err(ParseError::new(ln, format!("undeclared shape `{tok}`")))
            }
        };
        let wild_shape = |tok: &str| if tok == "*" { Ok(None) } else { known(tok).map(Some) };
        let wild_orient = |tok: &str| -> Result<Option<Orientation>, ParseError> {
            if tok == "*" {
                Ok(None)
            } else {
                parse_tok(ln, tok, "orientation").map(Some)
            }
        };
        match t[0] {
            "shape" => {
                expect_len(ln, &t, 2, "shape <name>")?;
                let s: ShapeId = parse_tok(ln, t[1], "shape")?;
                if !shapes.insert(s) {
                    return Err(ParseError::new(ln, format!("duplicate shape `{}`", t[1])));
                }
            }
            "unstable" => {
                expect_len(ln, &t, 5, "unstable <top_shape|*> <top_orient|*> <bottom_shape|*> <bottom_orient|*>")?;
                let rule = StackRule::new(wild_shape(t[1])?, wild_orient(t[2])?, wild_shape(t[3])?, wild_orient(t[4])?)
                    .map_err(|e| ParseError::new(ln, e))?;
                unstable.push(rule);
            }
            "blocker" => {
                expect_len(ln, &t, 3, "blocker <shape> <orient>")?;
                blockers.push(BlockerRule { shape: known(t[1])?, orient: parse_tok(ln, t[2], "orientation")? });
            }
            other => return Err(ParseError::new(ln, format!("unknown directive `{other}`"))),
        }
    }
    Ok(ShapeCatalog::new(shapes, unstable, blockers).expect("rules reference declared shapes"))
}

/// One line per step: `<T>: move(<obj>,<dest>,<orient>).`
pub fn render_plan(plan: &Plan) -> String {
    plan.to_string()
}

pub fn parse_plan(text: &str) -> Result<Plan, ParseError> {
    let mut steps = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let ln = i + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        let bad = || ParseError::new(ln, format!("malformed step `{line}`"));
        let (index, rest) = line.split_once(':').ok_or_else(bad)?;
        let index: usize = index.trim().parse().map_err(|_| bad())?;
        if index != steps.len() {
            return Err(ParseError::new(ln, format!("expected step {}, found {index}", steps.len())));
        }
        let compact: String = rest.chars().filter(|c| !c.is_whitespace()).collect();
        let args = compact.strip_prefix("move(").and_then(|r| r.strip_suffix(").")).ok_or_else(bad)?;
        let parts: Vec<&str> = args.split(',').collect();
        if parts.len() != 3 {
            return Err(bad());
        }
        let obj: ObjectId = parse_tok(ln, parts[0], "object")?;
        let dest: Entity = parse_tok(ln, parts[1], "destination")?;
        let orient: Orientation = parse_tok(ln, parts[2], "orientation")?;
        steps.push(MoveAction::new(obj, dest, orient));
    }
    Ok(Plan::new(steps))
}

pub fn load_instance(instance_text: &str, catalog_text: &str) -> Result<LoadedInstance, LoadError> {
    let parsed = parse_instance(instance_text).map_err(LoadError::Instance)?;
    let catalog = parse_catalog(catalog_text).map_err(LoadError::Catalog)?;
    Ok(LoadedInstance::new(parsed.scene, parsed.task, parsed.horizon, catalog)?)
}
