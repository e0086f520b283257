//! Scene files, a loader for gSCAN dataset records, and a seeded scene generator.
//!
//! Scene JSON:
//!
//! ```json
//! {"size": 6, "agent": {"row": 0, "col": 0, "heading": "E"},
//!  "objects": [{"id": 0, "shape": "square", "color": "red", "size": 4, "row": 2, "col": 2}],
//!  "target": {"row": 2, "col": 2}, "gold_actions": ["WALK", "WALK"]}
//! ```
//!
//! gSCAN records are accepted in this subset: `situation.grid_size`,
//! `situation.agent_position.{row,column}`, `situation.agent_direction`
//! (0 east, 1 south, 2 west, 3 north), `situation.placed_objects` with
//! `object.{shape,color,size}` and `position`, `situation.target_object.position`,
//! and `target_commands` as comma-separated command words. Numbers may be strings.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use super::{oracle_plan, Agent, Cell, GridError, GridObject, GridWorld, Heading, LowAction, Shape};
use crate::seed::derive_seed;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "SceneRecord", into = "SceneRecord")]
pub struct Scene {
    pub world: GridWorld,
    pub target: Cell,
    pub gold_actions: Vec<LowAction>,
    pub command: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct SceneRecord {
    size: usize,
    agent: Agent,
    objects: Vec<GridObject>,
    target: Cell,
    #[serde(default)]
    gold_actions: Vec<LowAction>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    command: Option<String>,
}

impl TryFrom<SceneRecord> for Scene {
    type Error = SceneError;

    fn try_from(r: SceneRecord) -> Result<Self, SceneError> {
        let scene = Scene {
            world: GridWorld {
                size: r.size,
                agent: r.agent,
                objects: r.objects,
            },
            target: r.target,
            gold_actions: r.gold_actions,
            command: r.command,
        };
        scene.validate()?;
        Ok(scene)
    }
}

impl From<Scene> for SceneRecord {
    fn from(s: Scene) -> Self {
        SceneRecord {
            size: s.world.size,
            agent: s.world.agent,
            objects: s.world.objects,
            target: s.target,
            gold_actions: s.gold_actions,
            command: s.command,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SceneError {
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error("target {0} is outside the grid")]
    TargetOutOfBounds(Cell),
    #[error("scene {index}: {reason}")]
    Record { index: usize, reason: String },
    #[error("invalid scene file: {0}")]
    Json(String),
}

impl Scene {
    pub fn validate(&self) -> Result<(), SceneError> {
        self.world.validate()?;
        if !self.world.in_bounds(self.target) {
            return Err(SceneError::TargetOutOfBounds(self.target));
        }
        Ok(())
    }
}

/// Parse a scene file: a JSON array of scenes, a JSON array of gSCAN records,
/// or a gSCAN dataset object whose `examples` map split names to record arrays.
pub fn load_scenes(text: &str) -> Result<Vec<Scene>, SceneError> {
    let value: Value = serde_json::from_str(text).map_err(|e| SceneError::Json(e.to_string()))?;
    let records: Vec<Value> = match value {
        Value::Array(items) => items,
        Value::Object(map) if map.contains_key("examples") => {
            let Some(Value::Object(splits)) = map.get("examples") else {
                return Err(SceneError::Json("`examples` must map split names to arrays".into()));
            };
            let mut all = Vec::new();
            for (_, split) in splits {
                match split {
                    Value::Array(items) => all.extend(items.iter().cloned()),
                    _ => return Err(SceneError::Json("split is not an array".into())),
                }
            }
            all
        }
        _ => return Err(SceneError::Json("expected an array of scenes".into())),
    };
    records
        .into_iter()
        .enumerate()
        .map(|(index, v)| {
            let rec_err = |reason: String| SceneError::Record { index, reason };
            if v.get("situation").is_some() {
                gscan_record(&v).map_err(rec_err)
            } else {
                serde_json::from_value::<Scene>(v).map_err(|e| rec_err(e.to_string()))
            }
        })
        .collect()
}

/// Convert gSCAN dataset records (see the module docs for the accepted fields).
pub fn load_gscan_records(records: &[Value]) -> Result<Vec<Scene>, SceneError> {
    records
        .iter()
        .enumerate()
        .map(|(index, v)| gscan_record(v).map_err(|reason| SceneError::Record { index, reason }))
        .collect()
}

fn number(v: &Value, what: &str) -> Result<usize, String> {
    match v {
        Value::Number(n) => n.as_u64().map(|n| n as usize),
        Value::String(s) => s.trim().parse().ok(),
        _ => None,
    }
    .ok_or_else(|| format!("{what} is not a non-negative integer: {v}"))
}

fn field<'a>(v: &'a Value, path: &[&str]) -> Result<&'a Value, String> {
    let mut cur = v;
    for key in path {
        cur = cur.get(*key).ok_or_else(|| format!("missing field {}", path.join(".")))?;
    }
    Ok(cur)
}

fn position(v: &Value, what: &str) -> Result<Cell, String> {
    Ok(Cell::new(
        number(field(v, &["row"])?, &format!("{what}.row"))?,
        number(field(v, &["column"])?, &format!("{what}.column"))?,
    ))
}

fn gscan_record(v: &Value) -> Result<Scene, String> {
    let situation = field(v, &["situation"])?;
    let size = number(field(situation, &["grid_size"])?, "grid_size")?;
    let agent_cell = position(field(situation, &["agent_position"])?, "agent_position")?;
    let heading = match number(field(situation, &["agent_direction"])?, "agent_direction")? {
        0 => Heading::E,
        1 => Heading::S,
        2 => Heading::W,
        3 => Heading::N,
        d => return Err(format!("agent_direction {d} is not 0..=3")),
    };
    let target = position(field(situation, &["target_object", "position"])?, "target_object.position")?;

    let mut objects = Vec::new();
    if let Some(placed) = situation.get("placed_objects").and_then(Value::as_object) {
        let mut keyed: Vec<(&String, &Value)> = placed.iter().collect();
        keyed.sort_by_key(|(k, _)| k.parse::<usize>().unwrap_or(usize::MAX));
        for (id, (_, o)) in keyed.into_iter().enumerate() {
            let obj = field(o, &["object"])?;
            let shape: Shape = serde_json::from_value(field(obj, &["shape"])?.clone())
                .map_err(|e| format!("object shape: {e}"))?;
            let color = field(obj, &["color"])?
                .as_str()
                .ok_or("object color is not a string")?
                .to_string();
            let size = number(field(obj, &["size"])?, "object size")?;
            let cell = position(field(o, &["position"])?, "object position")?;
            objects.push(GridObject {
                id,
                shape,
                color,
                size: u8::try_from(size).map_err(|_| format!("object size {size}"))?,
                row: cell.row,
                col: cell.col,
            });
        }
    }

    let gold_actions = match v.get("target_commands").and_then(Value::as_str) {
        None | Some("") => Vec::new(),
        Some(cmds) => cmds
            .split(',')
            .map(|w| LowAction::from_command(w).ok_or_else(|| format!("unknown command {w:?}")))
            .collect::<Result<_, _>>()?,
    };
    let command = v
        .get("command")
        .and_then(Value::as_str)
        .map(|c| c.replace(',', " "));

    let scene = Scene {
        world: GridWorld {
            size,
            agent: Agent {
                row: agent_cell.row,
                col: agent_cell.col,
                heading,
            },
            objects,
        },
        target,
        gold_actions,
        command,
    };
    scene.validate().map_err(|e| e.to_string())?;
    Ok(scene)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SceneGenConfig {
    pub count: usize,
    pub size: usize,
    pub min_objects: usize,
    pub max_objects: usize,
    pub seed: u64,
}

impl Default for SceneGenConfig {
    fn default() -> Self {
        Self {
            count: 500,
            size: super::DEFAULT_GRID_SIZE,
            min_objects: 2,
            max_objects: 6,
            seed: 0,
        }
    }
}

const COLORS: [&str; 4] = ["red", "green", "blue", "yellow"];
const SHAPES: [Shape; 3] = [Shape::Circle, Shape::Square, Shape::Cylinder];

/// Random "walk to the ..." scenes whose gold actions are the planner's path
/// to a randomly chosen object. Scene `i` uses its own seed derived from the master seed.
pub fn generate_scenes(config: &SceneGenConfig) -> Vec<Scene> {
    (0..config.count)
        .map(|i| generate_one(config, derive_seed(config.seed, i as u64)))
        .collect()
}

fn generate_one(config: &SceneGenConfig, seed: u64) -> Scene {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let size = config.size.max(2);
    let mut cells: Vec<Cell> = (0..size)
        .flat_map(|r| (0..size).map(move |c| Cell::new(r, c)))
        .collect();
    cells.shuffle(&mut rng);
    let agent_cell = cells[0];
    let heading = *Heading::ALL.choose(&mut rng).expect("four headings");
    let max = config.max_objects.clamp(1, cells.len() - 1);
    let n = rng.gen_range(config.min_objects.clamp(1, max)..=max);
    let objects: Vec<GridObject> = cells[1..=n]
        .iter()
        .enumerate()
        .map(|(id, cell)| GridObject {
            id,
            shape: *SHAPES.choose(&mut rng).expect("shapes"),
            color: COLORS.choose(&mut rng).expect("colors").to_string(),
            size: rng.gen_range(1..=4),
            row: cell.row,
            col: cell.col,
        })
        .collect();
    let target_obj = objects.choose(&mut rng).expect("at least one object").clone();
    let world = GridWorld {
        size,
        agent: Agent {
            row: agent_cell.row,
            col: agent_cell.col,
            heading,
        },
        objects,
    };
    let target = target_obj.cell();
    let gold_actions = oracle_plan(&world, target).expect("in-bounds targets are reachable");
    let adjective = if target_obj.is_heavy() { "big" } else { "small" };
    let shape = serde_json::to_value(target_obj.shape).expect("shape serializes");
    Scene {
        world,
        target,
        gold_actions,
        command: Some(format!(
            "walk to the {adjective} {} {}",
            target_obj.color,
            shape.as_str().unwrap_or_default()
        )),
    }
}
