//! Proposal sources: seeded template generators, a ground-truth bAbI story
//! simulator, a scripted source for tests and an HTTP client for external models.

pub mod babi;
pub mod clutrr;
pub mod http;
pub mod scripted;

pub use babi::{simulate_stories, BabiTemplateProposer, GroundTruthSimulator, SimulatorConfig};
pub use clutrr::ClutrrTemplateProposer;
pub use http::{HttpProposalSource, ProposeRequest, ProposeResponse, PROPOSER_URL_ENV};
pub use scripted::ScriptedSource;

use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Settings shared by the template proposers. The bAbI proposer reads
/// `persons`, `objects`, `locations` and weights keyed `go`/`pickup`/`drop`;
/// the CLUTRR proposer reads `persons`, `relation_terms` and weights keyed by
/// term. A missing weight counts as 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TemplateProposerConfig {
    pub persons: Vec<String>,
    #[serde(default)]
    pub objects: Vec<String>,
    #[serde(default)]
    pub locations: Vec<String>,
    #[serde(default)]
    pub relation_terms: Vec<String>,
    #[serde(default)]
    pub weights: BTreeMap<String, f64>,
    /// Probability that a bAbI line is a question.
    #[serde(default)]
    pub question_prob: f64,
    /// Probability of sampling without looking at the story so far.
    pub fault_rate: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TemplateConfigError {
    #[error("weight for {key:?} must be positive and finite, got {value}")]
    BadWeight { key: String, value: f64 },
    #[error("{name} must be in [0, 1], got {value}")]
    BadProbability { name: &'static str, value: f64 },
    #[error("vocabulary list {0} needs at least {1} entries")]
    SmallVocabulary(&'static str, usize),
    #[error("unknown relation term {0:?}")]
    UnknownTerm(String),
}

fn words(list: &[&str]) -> Vec<String> {
    list.iter().map(|s| s.to_string()).collect()
}

impl TemplateProposerConfig {
    pub fn babi(seed: u64) -> Self {
        Self {
            persons: words(&["Mary", "John", "Sandra", "Daniel"]),
            objects: words(&["apple", "football", "milk"]),
            locations: words(&["bathroom", "hallway", "garden", "office", "bedroom", "kitchen"]),
            relation_terms: Vec::new(),
            weights: BTreeMap::new(),
            question_prob: 0.25,
            fault_rate: 1.0,
            seed,
        }
    }

    pub fn clutrr(seed: u64) -> Self {
        Self {
            persons: words(&["Robert", "Tracy", "Allan", "Marie", "Elsie", "Antonio"]),
            objects: Vec::new(),
            locations: Vec::new(),
            relation_terms: words(&[
                "husband", "wife", "father", "mother", "son", "daughter", "grandfather",
                "grandmother", "grandson", "granddaughter", "brother", "sister", "uncle", "aunt",
                "nephew", "niece", "son-in-law", "daughter-in-law", "father-in-law",
                "mother-in-law",
            ]),
            weights: BTreeMap::new(),
            question_prob: 0.0,
            fault_rate: 1.0,
            seed,
        }
    }

    pub fn weight(&self, key: &str) -> f64 {
        self.weights.get(key).copied().unwrap_or(1.0)
    }

    pub fn validate(&self) -> Result<(), TemplateConfigError> {
        for (key, &value) in &self.weights {
            if !(value.is_finite() && value > 0.0) {
                return Err(TemplateConfigError::BadWeight {
                    key: key.clone(),
                    value,
                });
            }
        }
        for (name, value) in [("question_prob", self.question_prob), ("fault_rate", self.fault_rate)] {
            if !(0.0..=1.0).contains(&value) {
                return Err(TemplateConfigError::BadProbability { name, value });
            }
        }
        Ok(())
    }
}

/// Index drawn with probability proportional to `weights`.
pub(crate) fn weighted_index<R: Rng + ?Sized>(rng: &mut R, weights: &[f64]) -> usize {
    let total: f64 = weights.iter().sum();
    let mut x = rng.gen::<f64>() * total;
    for (i, w) in weights.iter().enumerate() {
        if x < *w {
            return i;
        }
        x -= w;
    }
    weights.len() - 1
}
