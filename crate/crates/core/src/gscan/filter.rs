//! Budgeted guess-and-check over action sequences.

use rand::seq::SliceRandom;
use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{consistent, oracle_plan, Cell, GridWorld, LowAction};
use crate::gscan::scene::Scene;

pub const DEFAULT_FILTER_BUDGET: usize = 50;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("action proposer failed: {0}")]
pub struct ProposerFailure(pub String);

/// System 1 for gSCAN: proposes low-level action sequences for a scene.
pub trait ActionProposalSource {
    /// The single most likely sequence.
    fn greedy(&mut self, scene: &Scene, rng: &mut dyn RngCore) -> Result<Vec<LowAction>, ProposerFailure>;
    /// A fresh sample.
    fn sample(&mut self, scene: &Scene, rng: &mut dyn RngCore) -> Result<Vec<LowAction>, ProposerFailure>;
}

/// Returns the planner's shortest path every time.
#[derive(Debug, Clone, Copy, Default)]
pub struct OracleProposer;

impl ActionProposalSource for OracleProposer {
    fn greedy(&mut self, scene: &Scene, _rng: &mut dyn RngCore) -> Result<Vec<LowAction>, ProposerFailure> {
        oracle_plan(&scene.world, scene.target).map_err(|e| ProposerFailure(e.to_string()))
    }

    fn sample(&mut self, scene: &Scene, rng: &mut dyn RngCore) -> Result<Vec<LowAction>, ProposerFailure> {
        self.greedy(scene, rng)
    }
}

/// The planner's path with each action independently replaced, with
/// probability `epsilon`, by an action drawn uniformly from all six.
/// Greedy and sampled candidates are both noisy draws.
#[derive(Debug, Clone, Copy)]
pub struct NoisyProposer {
    pub epsilon: f64,
}

impl NoisyProposer {
    fn draw(&self, scene: &Scene, rng: &mut dyn RngCore) -> Result<Vec<LowAction>, ProposerFailure> {
        let plan = oracle_plan(&scene.world, scene.target).map_err(|e| ProposerFailure(e.to_string()))?;
        Ok(plan
            .into_iter()
            .map(|a| {
                if rng.gen_bool(self.epsilon) {
                    *LowAction::ALL.choose(rng).expect("non-empty")
                } else {
                    a
                }
            })
            .collect())
    }
}

impl ActionProposalSource for NoisyProposer {
    fn greedy(&mut self, scene: &Scene, rng: &mut dyn RngCore) -> Result<Vec<LowAction>, ProposerFailure> {
        self.draw(scene, rng)
    }

    fn sample(&mut self, scene: &Scene, rng: &mut dyn RngCore) -> Result<Vec<LowAction>, ProposerFailure> {
        self.draw(scene, rng)
    }
}

/// Replays a fixed list: the first entry is the greedy candidate and the rest
/// are samples, in order. Fails once the list is used up.
#[derive(Debug, Clone)]
pub struct ScriptedActionProposer {
    candidates: Vec<Vec<LowAction>>,
    next: usize,
}

impl ScriptedActionProposer {
    pub fn new(candidates: Vec<Vec<LowAction>>) -> Self {
        Self {
            candidates,
            next: 1,
        }
    }
}

impl ActionProposalSource for ScriptedActionProposer {
    fn greedy(&mut self, _scene: &Scene, _rng: &mut dyn RngCore) -> Result<Vec<LowAction>, ProposerFailure> {
        self.candidates
            .first()
            .cloned()
            .ok_or_else(|| ProposerFailure("empty script".into()))
    }

    fn sample(&mut self, _scene: &Scene, _rng: &mut dyn RngCore) -> Result<Vec<LowAction>, ProposerFailure> {
        let c = self
            .candidates
            .get(self.next)
            .cloned()
            .ok_or_else(|| ProposerFailure(format!("script has no candidate {}", self.next)))?;
        self.next += 1;
        Ok(c)
    }
}

/// Predicts the target cell for a scene (the argmax of a location model).
pub trait TargetPredictor {
    fn predict(&mut self, scene: &Scene, rng: &mut dyn RngCore) -> Cell;
}

/// Reads the annotated target.
#[derive(Debug, Clone, Copy, Default)]
pub struct OracleTarget;

impl TargetPredictor for OracleTarget {
    fn predict(&mut self, scene: &Scene, _rng: &mut dyn RngCore) -> Cell {
        scene.target
    }
}

/// Annotated target, except with probability `p` a uniformly chosen other cell.
#[derive(Debug, Clone, Copy)]
pub struct NoisyTarget {
    pub p: f64,
}

impl TargetPredictor for NoisyTarget {
    fn predict(&mut self, scene: &Scene, rng: &mut dyn RngCore) -> Cell {
        let size = scene.world.size;
        if size * size < 2 || !rng.gen_bool(self.p) {
            return scene.target;
        }
        let others: Vec<Cell> = (0..size)
            .flat_map(|r| (0..size).map(move |c| Cell::new(r, c)))
            .filter(|&c| c != scene.target)
            .collect();
        *others.choose(rng).expect("grid has another cell")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FilterOutcome {
    pub actions: Vec<LowAction>,
    /// The first candidate drawn, i.e. what the proposer alone would output.
    pub first: Vec<LowAction>,
    /// Candidates checked against the world (at most the budget).
    pub evaluations: usize,
    /// True when no candidate passed and the first candidate is returned unfiltered.
    pub fallback: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FilterError {
    #[error("filter budget must be at least 1")]
    ZeroBudget,
    #[error(transparent)]
    Proposer(#[from] ProposerFailure),
}

/// Draw up to `budget` candidates and return the first that passes through
/// `target` without leaving the grid. With `greedy_first` the greedy
/// candidate is evaluated first. If all fail, the first candidate is returned
/// and marked as a fallback.
pub fn filter_search<P: ActionProposalSource + ?Sized>(
    proposer: &mut P,
    scene: &Scene,
    world: &GridWorld,
    target: Cell,
    budget: usize,
    greedy_first: bool,
    rng: &mut dyn RngCore,
) -> Result<FilterOutcome, FilterError> {
    if budget == 0 {
        return Err(FilterError::ZeroBudget);
    }
    let mut first: Option<Vec<LowAction>> = None;
    for i in 0..budget {
        let candidate = if i == 0 && greedy_first {
            proposer.greedy(scene, rng)?
        } else {
            proposer.sample(scene, rng)?
        };
        let first = first.get_or_insert_with(|| candidate.clone());
        if consistent(world, &candidate, target) {
            return Ok(FilterOutcome {
                actions: candidate,
                first: first.clone(),
                evaluations: i + 1,
                fallback: false,
            });
        }
    }
    let first = first.expect("budget is positive");
    Ok(FilterOutcome {
        actions: first.clone(),
        first,
        evaluations: budget,
        fallback: true,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gscan::{Agent, Heading, DEFAULT_GRID_SIZE};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use LowAction::*;

    fn scene() -> Scene {
        Scene {
            world: GridWorld {
                size: DEFAULT_GRID_SIZE,
                agent: Agent {
                    row: 0,
                    col: 0,
                    heading: Heading::E,
                },
                objects: vec![],
            },
            target: Cell::new(0, 2),
            gold_actions: vec![Walk, Walk],
            command: None,
        }
    }

    fn run(candidates: Vec<Vec<LowAction>>, budget: usize) -> FilterOutcome {
        let s = scene();
        let mut p = ScriptedActionProposer::new(candidates);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        filter_search(&mut p, &s, &s.world, s.target, budget, true, &mut rng).unwrap()
    }

    #[test]
    fn consistent_greedy_is_kept() {
        let out = run(vec![vec![Walk, Walk, Stay], vec![Walk, Walk]], 50);
        assert_eq!(out.actions, vec![Walk, Walk, Stay]);
        assert_eq!(out.evaluations, 1);
        assert!(!out.fallback);
    }

    #[test]
    fn third_draw_accepted() {
        let out = run(vec![vec![Walk], vec![TurnLeft, Walk], vec![Walk, Walk]], 50);
        assert_eq!(out.actions, vec![Walk, Walk]);
        assert_eq!(out.evaluations, 3);
    }

    #[test]
    fn fallback_after_budget() {
        let out = run(vec![vec![Stay]; 60], 50);
        assert!(out.fallback);
        assert_eq!(out.evaluations, 50);
        assert_eq!(out.actions, vec![Stay]);
    }

    #[test]
    fn zero_budget_rejected() {
        let s = scene();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let err = filter_search(&mut OracleProposer, &s, &s.world, s.target, 0, true, &mut rng);
        assert_eq!(err, Err(FilterError::ZeroBudget));
    }

    #[test]
    fn script_exhaustion_is_a_failure() {
        let s = scene();
        let mut p = ScriptedActionProposer::new(vec![vec![Stay]]);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let err = filter_search(&mut p, &s, &s.world, s.target, 5, true, &mut rng);
        assert!(matches!(err, Err(FilterError::Proposer(_))));
    }

    #[test]
    fn noisy_target_moves_sometimes() {
        let s = scene();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut t = NoisyTarget { p: 1.0 };
        assert_ne!(t.predict(&s, &mut rng), s.target);
        let mut t = NoisyTarget { p: 0.0 };
        assert_eq!(t.predict(&s, &mut rng), s.target);
    }
}
