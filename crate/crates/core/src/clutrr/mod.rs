//! CLUTRR-style kinship: knowledge base, bounded oracle, sentence parser and
//! the world-model adapter for the generation engine.

pub mod kb;
pub mod oracle;
pub mod parser;

pub use kb::{
    AssertOutcome, Constraint, Contradiction, KbDocument, KbError, KnowledgeBase, Relation,
    RelationAtom, RuleSet, SkolemBudget,
};
pub use oracle::{model_find, DomainTooLarge, OracleVerdict};
pub use parser::{normalize, parse_sentence, parse_text, ClutrrExtractor, Clause, NaturalParse};

use crate::engine::{
    CauseKind, InvalidHandle, Rejection, SnapshotHandle, SnapshotStack, Verdict, WorldModel,
};

/// Separator between alternative candidates on one line of a story file.
pub const ALTERNATIVE_SEPARATOR: &str = " ||| ";

#[derive(Debug, Clone, Default)]
pub struct ClutrrWorld {
    pub kb: KnowledgeBase,
    snapshots: SnapshotStack<KnowledgeBase>,
}

impl ClutrrWorld {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_kb(kb: KnowledgeBase) -> Self {
        Self {
            kb,
            snapshots: SnapshotStack::default(),
        }
    }

    fn reject(c: &Contradiction) -> Verdict {
        Verdict::Reject(Rejection::new(CauseKind::LogicalContradiction, c.to_string()))
    }
}

impl WorldModel for ClutrrWorld {
    type Fact = RelationAtom;

    fn check(&self, facts: &[RelationAtom]) -> Verdict {
        match self.kb.assert_facts(facts) {
            AssertOutcome::Consistent(_) => Verdict::Accept,
            AssertOutcome::Contradiction(c) => Self::reject(&c),
        }
    }

    fn apply(&mut self, facts: &[RelationAtom]) -> Verdict {
        match self.kb.assert_facts(facts) {
            AssertOutcome::Consistent(next) => {
                self.kb = next;
                Verdict::Accept
            }
            AssertOutcome::Contradiction(c) => Self::reject(&c),
        }
    }

    fn snapshot(&mut self) -> SnapshotHandle {
        self.snapshots.push(self.kb.clone())
    }

    fn restore(&mut self, handle: SnapshotHandle) -> Result<(), InvalidHandle> {
        self.kb = self.snapshots.restore(handle)?;
        Ok(())
    }

    fn release(&mut self, handle: SnapshotHandle) -> Result<(), InvalidHandle> {
        self.snapshots.release(handle)
    }

    fn serialize_state(&self) -> String {
        self.kb.to_json()
    }
}

/// Split a story file into stories (blank-line separated) of lines, each line
/// holding one or more alternative candidates.
pub fn parse_story_file(input: &str) -> Vec<Vec<Vec<String>>> {
    let mut stories = Vec::new();
    let mut current: Vec<Vec<String>> = Vec::new();
    for raw in input.lines() {
        let line = raw.trim();
        if line.is_empty() {
            if !current.is_empty() {
                stories.push(std::mem::take(&mut current));
            }
            continue;
        }
        current.push(
            line.split(ALTERNATIVE_SEPARATOR.trim())
                .map(|s| s.trim().to_string())
                .filter(|s| !s.is_empty())
                .collect(),
        );
    }
    if !current.is_empty() {
        stories.push(current);
    }
    stories
}
