//! gSCAN-style gridworld: a deterministic executor for low-level action
//! sequences, the pass-through consistency check, and a shortest-path planner.
//!
//! Rows grow southward and columns eastward; `(0, 0)` is the north-west corner.

pub mod filter;
pub mod scene;

pub use filter::{
    filter_search, ActionProposalSource, FilterError, FilterOutcome, NoisyProposer,
    OracleProposer, OracleTarget, NoisyTarget, ProposerFailure, ScriptedActionProposer,
    TargetPredictor,
};
pub use scene::{generate_scenes, load_gscan_records, load_scenes, Scene, SceneError, SceneGenConfig};

use std::collections::{HashMap, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Cell {
    pub row: usize,
    pub col: usize,
}

impl Cell {
    pub fn new(row: usize, col: usize) -> Self {
        Self { row, col }
    }

    /// The neighbouring cell one step along `heading`, if it lies on a `size`×`size` grid.
    pub fn step(self, heading: Heading, size: usize) -> Option<Cell> {
        let (dr, dc) = heading.delta();
        let row = self.row as i64 + dr;
        let col = self.col as i64 + dc;
        let inside = |v: i64| v >= 0 && v < size as i64;
        (inside(row) && inside(col)).then(|| Cell::new(row as usize, col as usize))
    }
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.row, self.col)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Heading {
    N,
    E,
    S,
    W,
}

impl Heading {
    pub const ALL: [Heading; 4] = [Heading::N, Heading::E, Heading::S, Heading::W];

    fn delta(self) -> (i64, i64) {
        match self {
            Heading::N => (-1, 0),
            Heading::E => (0, 1),
            Heading::S => (1, 0),
            Heading::W => (0, -1),
        }
    }

    pub fn left(self) -> Heading {
        match self {
            Heading::N => Heading::W,
            Heading::W => Heading::S,
            Heading::S => Heading::E,
            Heading::E => Heading::N,
        }
    }

    pub fn right(self) -> Heading {
        match self {
            Heading::N => Heading::E,
            Heading::E => Heading::S,
            Heading::S => Heading::W,
            Heading::W => Heading::N,
        }
    }

    pub fn opposite(self) -> Heading {
        self.left().left()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Shape {
    Circle,
    Square,
    Cylinder,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridObject {
    pub id: usize,
    pub shape: Shape,
    pub color: String,
    /// 1 to 4; sizes 3 and 4 are heavy.
    pub size: u8,
    pub row: usize,
    pub col: usize,
}

impl GridObject {
    pub fn cell(&self) -> Cell {
        Cell::new(self.row, self.col)
    }

    pub fn is_heavy(&self) -> bool {
        self.size >= 3
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Agent {
    pub row: usize,
    pub col: usize,
    pub heading: Heading,
}

impl Agent {
    pub fn cell(&self) -> Cell {
        Cell::new(self.row, self.col)
    }

    fn place(&mut self, cell: Cell) {
        self.row = cell.row;
        self.col = cell.col;
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridWorld {
    pub size: usize,
    pub agent: Agent,
    pub objects: Vec<GridObject>,
}

pub const DEFAULT_GRID_SIZE: usize = 6;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GridError {
    #[error("grid size must be positive")]
    EmptyGrid,
    #[error("{what} at {cell} is outside a {size}x{size} grid")]
    OutOfBounds {
        what: String,
        cell: Cell,
        size: usize,
    },
    #[error("objects {0} and {1} share a cell")]
    SharedCell(usize, usize),
    #[error("object {id} has size {size}; sizes run from 1 to 4")]
    BadSize { id: usize, size: u8 },
}

impl GridWorld {
    pub fn validate(&self) -> Result<(), GridError> {
        if self.size == 0 {
            return Err(GridError::EmptyGrid);
        }
        let inside = |c: Cell| c.row < self.size && c.col < self.size;
        if !inside(self.agent.cell()) {
            return Err(GridError::OutOfBounds {
                what: "agent".into(),
                cell: self.agent.cell(),
                size: self.size,
            });
        }
        let mut seen: HashMap<Cell, usize> = HashMap::new();
        for o in &self.objects {
            if !inside(o.cell()) {
                return Err(GridError::OutOfBounds {
                    what: format!("object {}", o.id),
                    cell: o.cell(),
                    size: self.size,
                });
            }
            if !(1..=4).contains(&o.size) {
                return Err(GridError::BadSize {
                    id: o.id,
                    size: o.size,
                });
            }
            if let Some(other) = seen.insert(o.cell(), o.id) {
                return Err(GridError::SharedCell(other, o.id));
            }
        }
        Ok(())
    }

    pub fn in_bounds(&self, cell: Cell) -> bool {
        cell.row < self.size && cell.col < self.size
    }

    fn object_at(&self, cell: Cell) -> Option<usize> {
        self.objects.iter().position(|o| o.cell() == cell)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum LowAction {
    Walk,
    TurnLeft,
    TurnRight,
    Push,
    Pull,
    Stay,
}

impl LowAction {
    pub const ALL: [LowAction; 6] = [
        LowAction::Walk,
        LowAction::TurnLeft,
        LowAction::TurnRight,
        LowAction::Push,
        LowAction::Pull,
        LowAction::Stay,
    ];

    /// gSCAN's command words, e.g. `"turn left"`.
    pub fn from_command(word: &str) -> Option<LowAction> {
        match word.trim() {
            "walk" => Some(LowAction::Walk),
            "turn left" => Some(LowAction::TurnLeft),
            "turn right" => Some(LowAction::TurnRight),
            "push" => Some(LowAction::Push),
            "pull" => Some(LowAction::Pull),
            "stay" => Some(LowAction::Stay),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExecStatus {
    Ok,
    OutOfBounds,
    Blocked,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExecutionResult {
    pub final_state: GridWorld,
    /// Agent position at the start and after every executed action.
    pub visited: Vec<Cell>,
    pub status: ExecStatus,
}

/// Which way a heavy-object move goes, and the object it applies to.
#[derive(Clone, Copy, PartialEq, Eq)]
enum Pending {
    Push(usize),
    Pull(usize),
}

/// Run `actions` from `state`. Never fails: leaving the grid or colliding
/// halts execution and is reported through the status.
pub fn execute(state: &GridWorld, actions: &[LowAction]) -> ExecutionResult {
    let mut world = state.clone();
    let mut visited = vec![world.agent.cell()];
    let mut pending: Option<Pending> = None;
    let size = world.size;

    for &action in actions {
        let here = world.agent.cell();
        let heading = world.agent.heading;
        let mut next_pending = None;
        match action {
            LowAction::Walk => match here.step(heading, size) {
                Some(cell) => world.agent.place(cell),
                None => return halt(world, visited, ExecStatus::OutOfBounds),
            },
            LowAction::TurnLeft => world.agent.heading = heading.left(),
            LowAction::TurnRight => world.agent.heading = heading.right(),
            LowAction::Stay => {}
            LowAction::Push | LowAction::Pull => {
                let ahead = here.step(heading, size);
                let Some(idx) = ahead.and_then(|c| world.object_at(c)) else {
                    visited.push(here);
                    continue;
                };
                let pushing = action == LowAction::Push;
                let tag = if pushing {
                    Pending::Push(idx)
                } else {
                    Pending::Pull(idx)
                };
                if world.objects[idx].is_heavy() && pending != Some(tag) {
                    // heavy objects move on the second consecutive push/pull
                    next_pending = Some(tag);
                } else if pushing {
                    let from = world.objects[idx].cell();
                    let Some(to) = from.step(heading, size) else {
                        return halt(world, visited, ExecStatus::Blocked);
                    };
                    if world.object_at(to).is_some() {
                        return halt(world, visited, ExecStatus::Blocked);
                    }
                    world.objects[idx].row = to.row;
                    world.objects[idx].col = to.col;
                    world.agent.place(from);
                } else {
                    let Some(back) = here.step(heading.opposite(), size) else {
                        return halt(world, visited, ExecStatus::OutOfBounds);
                    };
                    if world.object_at(back).is_some() {
                        return halt(world, visited, ExecStatus::Blocked);
                    }
                    world.agent.place(back);
                    world.objects[idx].row = here.row;
                    world.objects[idx].col = here.col;
                }
            }
        }
        pending = next_pending;
        visited.push(world.agent.cell());
    }
    ExecutionResult {
        final_state: world,
        visited,
        status: ExecStatus::Ok,
    }
}

fn halt(world: GridWorld, visited: Vec<Cell>, status: ExecStatus) -> ExecutionResult {
    ExecutionResult {
        final_state: world,
        visited,
        status,
    }
}

/// Pass-through check: the agent's path visits `target` and never leaves the
/// grid. A blocked push inside the grid does not fail the check.
pub fn consistent(state: &GridWorld, actions: &[LowAction], target: Cell) -> bool {
    let result = execute(state, actions);
    result.status != ExecStatus::OutOfBounds && result.visited.contains(&target)
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("target {target} is unreachable on a {size}x{size} grid")]
pub struct Unreachable {
    pub target: Cell,
    pub size: usize,
}

/// Shortest WALK/TURN sequence taking the agent onto `target`.
pub fn oracle_plan(state: &GridWorld, target: Cell) -> Result<Vec<LowAction>, Unreachable> {
    let unreachable = Unreachable {
        target,
        size: state.size,
    };
    if !state.in_bounds(target) || !state.in_bounds(state.agent.cell()) {
        return Err(unreachable);
    }
    let start = (state.agent.cell(), state.agent.heading);
    let mut parent: HashMap<(Cell, Heading), ((Cell, Heading), LowAction)> = HashMap::new();
    let mut queue = VecDeque::from([start]);
    let mut seen = std::collections::HashSet::from([start]);
    while let Some(node) = queue.pop_front() {
        if node.0 == target {
            let mut plan = Vec::new();
            let mut cur = node;
            while let Some(&(prev, action)) = parent.get(&cur) {
                plan.push(action);
                cur = prev;
            }
            plan.reverse();
            return Ok(plan);
        }
        let (cell, heading) = node;
        let moves = [
            (LowAction::Walk, cell.step(heading, state.size).map(|c| (c, heading))),
            (LowAction::TurnLeft, Some((cell, heading.left()))),
            (LowAction::TurnRight, Some((cell, heading.right()))),
        ];
        for (action, next) in moves {
            if let Some(next) = next {
                if seen.insert(next) {
                    parent.insert(next, (node, action));
                    queue.push_back(next);
                }
            }
        }
    }
    Err(unreachable)
}

#[cfg(test)]
mod tests {
    use super::*;
    use LowAction::*;

    fn world(row: usize, col: usize, heading: Heading, objects: Vec<GridObject>) -> GridWorld {
        GridWorld {
            size: DEFAULT_GRID_SIZE,
            agent: Agent { row, col, heading },
            objects,
        }
    }

    fn obj(id: usize, size: u8, row: usize, col: usize) -> GridObject {
        GridObject {
            id,
            shape: Shape::Square,
            color: "red".into(),
            size,
            row,
            col,
        }
    }

    #[test]
    fn empty_actions() {
        let w = world(2, 3, Heading::N, vec![]);
        let r = execute(&w, &[]);
        assert_eq!(r.final_state, w);
        assert_eq!(r.visited, vec![Cell::new(2, 3)]);
        assert_eq!(r.status, ExecStatus::Ok);
    }

    #[test]
    fn walking_off_the_west_edge() {
        let r = execute(&world(0, 0, Heading::W, vec![]), &[Walk]);
        assert_eq!(r.status, ExecStatus::OutOfBounds);
        assert_eq!(r.visited, vec![Cell::new(0, 0)]);
    }

    #[test]
    fn left_turns_cycle() {
        assert_eq!(Heading::N.left(), Heading::W);
        assert_eq!(Heading::W.left(), Heading::S);
        assert_eq!(Heading::S.left(), Heading::E);
        assert_eq!(Heading::E.left(), Heading::N);
        for h in Heading::ALL {
            assert_eq!(h.left().right(), h);
        }
    }

    #[test]
    fn walk_to_the_big_square() {
        let w = world(3, 3, Heading::E, vec![obj(0, 4, 2, 2)]);
        let r = execute(&w, &[TurnLeft, Walk, TurnLeft, Walk]);
        assert_eq!(r.status, ExecStatus::Ok);
        assert_eq!(r.final_state.agent.cell(), Cell::new(2, 2));
        assert_eq!(oracle_plan(&w, Cell::new(2, 2)).unwrap(), vec![TurnLeft, Walk, TurnLeft, Walk]);
    }

    #[test]
    fn light_push_moves_object_and_agent() {
        let w = world(0, 0, Heading::E, vec![obj(0, 1, 0, 1)]);
        let r = execute(&w, &[Push]);
        assert_eq!(r.final_state.objects[0].cell(), Cell::new(0, 2));
        assert_eq!(r.final_state.agent.cell(), Cell::new(0, 1));
    }

    #[test]
    fn heavy_push_needs_two_consecutive() {
        let w = world(0, 0, Heading::E, vec![obj(0, 3, 0, 1)]);
        let once = execute(&w, &[Push]);
        assert_eq!(once.final_state.objects[0].cell(), Cell::new(0, 1));
        let twice = execute(&w, &[Push, Push]);
        assert_eq!(twice.final_state.objects[0].cell(), Cell::new(0, 2));
        let interrupted = execute(&w, &[Push, Stay, Push]);
        assert_eq!(interrupted.final_state.objects[0].cell(), Cell::new(0, 1));
    }

    #[test]
    fn push_into_object_blocks() {
        let w = world(0, 0, Heading::E, vec![obj(0, 1, 0, 1), obj(1, 1, 0, 2)]);
        let r = execute(&w, &[Push, Walk]);
        assert_eq!(r.status, ExecStatus::Blocked);
        assert_eq!(r.visited.len(), 1);
    }

    #[test]
    fn pull_moves_backward() {
        let w = world(0, 2, Heading::E, vec![obj(0, 2, 0, 3)]);
        let r = execute(&w, &[Pull]);
        assert_eq!(r.final_state.agent.cell(), Cell::new(0, 1));
        assert_eq!(r.final_state.objects[0].cell(), Cell::new(0, 2));
        let edge = execute(&world(0, 0, Heading::E, vec![obj(0, 1, 0, 1)]), &[Pull]);
        assert_eq!(edge.status, ExecStatus::OutOfBounds);
    }

    #[test]
    fn pass_through_after_push() {
        // the push moves the object off the target, but the agent crossed it
        let w = world(0, 0, Heading::E, vec![obj(0, 1, 0, 2)]);
        let target = Cell::new(0, 2);
        assert!(consistent(&w, &[Walk, Push], target));
        assert!(!consistent(&w, &[TurnRight, Walk], target));
    }

    #[test]
    fn plans() {
        let w = world(0, 0, Heading::E, vec![]);
        assert_eq!(oracle_plan(&w, Cell::new(0, 0)).unwrap(), vec![]);
        assert_eq!(oracle_plan(&w, Cell::new(0, 2)).unwrap(), vec![Walk, Walk]);
        assert!(oracle_plan(&w, Cell::new(9, 9)).is_err());
    }

    #[test]
    fn validation() {
        assert!(world(0, 0, Heading::E, vec![obj(0, 1, 1, 1), obj(1, 1, 1, 1)]).validate().is_err());
        assert!(world(0, 0, Heading::E, vec![obj(0, 5, 1, 1)]).validate().is_err());
        assert!(world(6, 0, Heading::E, vec![]).validate().is_err());
        assert!(world(0, 0, Heading::E, vec![obj(0, 2, 1, 1)]).validate().is_ok());
    }
}
