//! bAbI proposers: the state-blind template sampler and the ground-truth simulator.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{weighted_index, TemplateConfigError, TemplateProposerConfig};
use crate::babi::parser::{phrases_for, render_question, render_with, Command};
use crate::babi::{parse_statement, BabiAction, BabiLine, BabiStory, ObjLocQuery, WorldState};
use crate::engine::{ProposalError, ProposalRequest, ProposalSource};
use crate::seed::derive_seed;

const COMMANDS: [(Command, &str); 3] = [
    (Command::Go, "go"),
    (Command::Pickup, "pickup"),
    (Command::Drop, "drop"),
];

fn render<R: Rng + ?Sized>(rng: &mut R, action: &BabiAction) -> String {
    let command = crate::babi::parser::command_of(action);
    let phrases: Vec<&str> = phrases_for(command).collect();
    let phrase = phrases.choose(rng).expect("every command has a phrase");
    render_with(action, phrase, rng.gen_bool(0.5))
}

/// Samples bAbI lines from templates. With probability `fault_rate` a line is
/// drawn uniformly over the vocabulary, ignoring the story; otherwise it is
/// drawn from the actions valid after replaying the context.
#[derive(Debug, Clone)]
pub struct BabiTemplateProposer {
    config: TemplateProposerConfig,
    rng: ChaCha8Rng,
}

impl BabiTemplateProposer {
    pub fn new(config: TemplateProposerConfig) -> Result<Self, TemplateConfigError> {
        config.validate()?;
        for (name, list, min) in [
            ("persons", &config.persons, 1),
            ("objects", &config.objects, 1),
            ("locations", &config.locations, 2),
        ] {
            if list.len() < min {
                return Err(TemplateConfigError::SmallVocabulary(name, min));
            }
        }
        Ok(Self {
            rng: ChaCha8Rng::seed_from_u64(config.seed),
            config,
        })
    }

    pub fn config(&self) -> &TemplateProposerConfig {
        &self.config
    }

    fn command_weights(&self) -> Vec<f64> {
        COMMANDS.iter().map(|(_, k)| self.config.weight(k)).collect()
    }

    /// Next candidate line given the accepted lines so far.
    pub fn template_next(&mut self, context: &[String]) -> String {
        if self.rng.gen_bool(self.config.fault_rate) {
            self.blind()
        } else {
            self.informed(context)
        }
    }

    fn blind(&mut self) -> String {
        let c = &self.config;
        let rng = &mut self.rng;
        if rng.gen_bool(c.question_prob) {
            let object = c.objects.choose(rng).expect("validated");
            return render_question(&ObjLocQuery {
                object: object.clone(),
            });
        }
        let weights: Vec<f64> = COMMANDS.iter().map(|(_, k)| c.weight(k)).collect();
        let person = c.persons.choose(rng).expect("validated");
        let action = match COMMANDS[weighted_index(rng, &weights)].0 {
            Command::Go => BabiAction::go(person, c.locations.choose(rng).expect("validated")),
            Command::Pickup => BabiAction::pickup(person, c.objects.choose(rng).expect("validated")),
            Command::Drop => BabiAction::drop(person, c.objects.choose(rng).expect("validated")),
        };
        render(rng, &action)
    }

    fn informed(&mut self, context: &[String]) -> String {
        let mut state = WorldState::new();
        for line in context {
            if let Ok(action) = parse_statement(line) {
                let _ = state.check_and_apply(&action);
            }
        }
        let c = &self.config;
        let answerable: Vec<&String> = c
            .objects
            .iter()
            .filter(|o| matches!(state.query_obj_loc(o), Ok(Some(_))))
            .collect();
        if !answerable.is_empty() && self.rng.gen_bool(c.question_prob) {
            let object = answerable.choose(&mut self.rng).expect("non-empty");
            return render_question(&ObjLocQuery {
                object: (*object).clone(),
            });
        }
        let mut by_command: Vec<Vec<BabiAction>> = vec![Vec::new(); COMMANDS.len()];
        for p in &c.persons {
            for l in &c.locations {
                by_command[0].push(BabiAction::go(p, l));
            }
            for o in &c.objects {
                by_command[1].push(BabiAction::pickup(p, o));
                by_command[2].push(BabiAction::drop(p, o));
            }
        }
        for actions in &mut by_command {
            actions.retain(|a| state.check(a).is_ok());
        }
        let weights: Vec<f64> = self
            .command_weights()
            .into_iter()
            .zip(&by_command)
            .map(|(w, actions)| if actions.is_empty() { 0.0 } else { w })
            .collect();
        if weights.iter().all(|w| *w == 0.0) {
            return self.blind();
        }
        let actions = &by_command[weighted_index(&mut self.rng, &weights)];
        let action = actions.choose(&mut self.rng).expect("non-empty").clone();
        render(&mut self.rng, &action)
    }
}

impl ProposalSource for BabiTemplateProposer {
    fn next_candidate(
        &mut self,
        request: &ProposalRequest<'_>,
        _rng: &mut dyn RngCore,
    ) -> Result<Option<String>, ProposalError> {
        Ok(Some(self.template_next(request.context)))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulatorConfig {
    pub persons: Vec<String>,
    pub objects: Vec<String>,
    pub locations: Vec<String>,
    /// Statements between consecutive questions, inclusive range.
    pub min_statements: usize,
    pub max_statements: usize,
    pub questions_per_story: usize,
    pub seed: u64,
}

impl Default for SimulatorConfig {
    fn default() -> Self {
        let base = TemplateProposerConfig::babi(0);
        Self {
            persons: base.persons,
            objects: base.objects,
            locations: base.locations,
            min_statements: 1,
            max_statements: 4,
            questions_per_story: 5,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Default)]
struct SimPerson {
    location: Option<String>,
    last_go: Option<usize>,
}

#[derive(Debug, Clone, Default)]
struct SimObject {
    holder: Option<String>,
    location: Option<String>,
    /// Line ids that justify the object's current placement.
    support: Vec<usize>,
}

/// Generates task-#2 shaped stories by simulating its own world, so every
/// statement is valid and every question carries the true answer and the
/// supporting line ids.
#[derive(Debug, Clone)]
pub struct GroundTruthSimulator {
    config: SimulatorConfig,
    rng: ChaCha8Rng,
}

impl GroundTruthSimulator {
    pub fn new(config: SimulatorConfig) -> Self {
        Self {
            rng: ChaCha8Rng::seed_from_u64(config.seed),
            config,
        }
    }

    pub fn story(&mut self) -> BabiStory {
        let mut persons: BTreeMap<String, SimPerson> = BTreeMap::new();
        let mut objects: BTreeMap<String, SimObject> = BTreeMap::new();
        let mut lines = Vec::new();
        let lo = self.config.min_statements.max(1);
        let hi = self.config.max_statements.max(lo);
        for _ in 0..self.config.questions_per_story {
            let n = self.rng.gen_range(lo..=hi);
            let mut emitted = 0;
            loop {
                let answerable: Vec<String> = objects
                    .iter()
                    .filter(|(_, o)| Self::where_is(&persons, o).is_some())
                    .map(|(k, _)| k.clone())
                    .collect();
                if emitted >= n && !answerable.is_empty() {
                    let name = answerable.choose(&mut self.rng).expect("non-empty").clone();
                    let obj = &objects[&name];
                    let (answer, supporting) = Self::where_is(&persons, obj).expect("answerable");
                    lines.push(BabiLine::Question {
                        id: lines.len() + 1,
                        text: render_question(&ObjLocQuery { object: name }),
                        answer,
                        supporting,
                    });
                    break;
                }
                let id = lines.len() + 1;
                let action = self.step(&mut persons, &mut objects, id);
                let text = render(&mut self.rng, &action);
                lines.push(BabiLine::Statement { id, text });
                emitted += 1;
            }
        }
        BabiStory { lines }
    }

    fn where_is(persons: &BTreeMap<String, SimPerson>, obj: &SimObject) -> Option<(String, Vec<usize>)> {
        match &obj.holder {
            Some(h) => {
                let p = &persons[h];
                let loc = p.location.clone()?;
                let mut support: Vec<usize> = obj.support.iter().copied().chain(p.last_go).collect();
                support.sort_unstable_by(|a, b| b.cmp(a));
                support.dedup();
                Some((loc, support))
            }
            None => obj.location.clone().map(|l| (l, obj.support.clone())),
        }
    }

    /// Pick and apply one valid action.
    fn step(
        &mut self,
        persons: &mut BTreeMap<String, SimPerson>,
        objects: &mut BTreeMap<String, SimObject>,
        id: usize,
    ) -> BabiAction {
        let c = &self.config;
        let mut options = Vec::new();
        for p in &c.persons {
            let here = persons.get(p).and_then(|s| s.location.clone());
            for l in &c.locations {
                if here.as_deref() != Some(l) {
                    options.push(BabiAction::go(p, l));
                }
            }
            let Some(here) = here else { continue };
            for o in &c.objects {
                let state = objects.get(o);
                let holder = state.and_then(|s| s.holder.as_deref());
                let at = state.and_then(|s| s.location.as_deref());
                if holder == Some(p.as_str()) {
                    options.push(BabiAction::drop(p, o));
                } else if holder.is_none() && at.is_none_or(|l| l == here) {
                    options.push(BabiAction::pickup(p, o));
                }
            }
        }
        // favour object interactions so questions have something to ask about
        let weights: Vec<f64> = options
            .iter()
            .map(|a| if matches!(a, BabiAction::Go { .. }) { 1.0 } else { 4.0 })
            .collect();
        let action = options[weighted_index(&mut self.rng, &weights)].clone();
        match &action {
            BabiAction::Go { person, location } => {
                let p = persons.entry(person.clone()).or_default();
                p.location = Some(location.clone());
                p.last_go = Some(id);
            }
            BabiAction::Pickup { person, object } => {
                let o = objects.entry(object.clone()).or_default();
                o.holder = Some(person.clone());
                o.location = None;
                o.support = vec![id];
            }
            BabiAction::Drop { person, object } => {
                let p = &persons[person];
                let o = objects.get_mut(object).expect("dropped objects are held");
                o.holder = None;
                o.location = p.location.clone();
                let mut support: Vec<usize> = vec![id];
                support.extend(p.last_go);
                o.support = support;
            }
        }
        action
    }
}

/// `count` simulator stories; story `i` uses a seed derived from `config.seed`.
pub fn simulate_stories(config: &SimulatorConfig, count: usize) -> Vec<BabiStory> {
    (0..count)
        .map(|i| {
            let mut c = config.clone();
            c.seed = derive_seed(config.seed, i as u64);
            GroundTruthSimulator::new(c).story()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::babi::{answer_stories, parse_question};

    #[test]
    fn same_seed_same_sentence() {
        let a = BabiTemplateProposer::new(TemplateProposerConfig::babi(5)).unwrap().template_next(&[]);
        let b = BabiTemplateProposer::new(TemplateProposerConfig::babi(5)).unwrap().template_next(&[]);
        assert_eq!(a, b);
    }

    #[test]
    fn every_sample_parses() {
        let mut p = BabiTemplateProposer::new(TemplateProposerConfig::babi(1)).unwrap();
        for _ in 0..10_000 {
            let line = p.template_next(&[]);
            let ok = if line.contains('?') {
                parse_question(&line).is_ok()
            } else {
                parse_statement(&line).is_ok()
            };
            assert!(ok, "{line}");
        }
    }

    #[test]
    fn blind_output_ignores_context() {
        let ctx_a = vec!["Mary went to the garden.".to_string()];
        let ctx_b = vec!["John picked up the milk.".to_string()];
        let mut a = BabiTemplateProposer::new(TemplateProposerConfig::babi(3)).unwrap();
        let mut b = BabiTemplateProposer::new(TemplateProposerConfig::babi(3)).unwrap();
        for _ in 0..200 {
            assert_eq!(a.template_next(&ctx_a), b.template_next(&ctx_b));
        }
    }

    #[test]
    fn rejects_bad_config() {
        let mut c = TemplateProposerConfig::babi(0);
        c.question_prob = 1.5;
        assert!(BabiTemplateProposer::new(c).is_err());
        let mut c = TemplateProposerConfig::babi(0);
        c.weights.insert("go".into(), 0.0);
        assert!(BabiTemplateProposer::new(c).is_err());
    }

    #[test]
    fn simulator_stories_answer_perfectly() {
        let stories = simulate_stories(&SimulatorConfig::default(), 50);
        let report = answer_stories(&stories);
        assert_eq!(report.total, 250);
        assert_eq!(report.correct, report.total);
        assert_eq!(report.skipped_statements, 0);
    }

    #[test]
    fn supporting_lines_precede_question() {
        for story in simulate_stories(&SimulatorConfig::default(), 20) {
            for line in &story.lines {
                if let BabiLine::Question { id, supporting, .. } = line {
                    assert!(!supporting.is_empty());
                    assert!(supporting.iter().all(|s| s < id));
                }
            }
        }
    }
}
