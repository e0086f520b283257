//! CLUTRR template proposer.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{weighted_index, TemplateConfigError, TemplateProposerConfig};
use crate::clutrr::parser::lookup_term;
use crate::clutrr::{normalize, parse_sentence, AssertOutcome, Clause, KnowledgeBase, NaturalParse};
use crate::engine::{ProposalError, ProposalRequest, ProposalSource};

/// Names handed out by the informed sampler once `persons` is used up.
const FRESH_NAMES: &[&str] = &[
    "Harold", "Shantel", "Lizzie", "Beverly", "Aaron", "Dennis", "Bobby", "James", "Mary",
    "Kristen", "Gabrielle", "Michael", "Dorothy", "Jason", "Sharon", "Gregory", "Myrna",
    "Wesley", "Dolores", "Kevin", "Valerie", "Frank", "Paula", "Lorraine", "Vernon", "Ruth",
];

/// Takes (subject, term, possessor, pronoun).
type Template = fn(&str, &str, &str, &str) -> String;

const TEMPLATES: &[Template] = &[
    |b, t, a, _| format!("{b} is {a}'s {t}."),
    |b, t, a, _| format!("{a}'s {t}, {b}, came over for dinner."),
    |b, t, a, p| format!("{a} and {p} {t} {b} went shopping."),
    |b, t, a, p| format!("{a} called {p} {t}, {b}, on the phone."),
];

/// Samples kinship sentences. With probability `fault_rate` both people are
/// drawn from `persons` regardless of the story; otherwise the sentence
/// introduces a new person through a relation the story so far allows.
#[derive(Debug, Clone)]
pub struct ClutrrTemplateProposer {
    config: TemplateProposerConfig,
    rng: ChaCha8Rng,
}

impl ClutrrTemplateProposer {
    pub fn new(config: TemplateProposerConfig) -> Result<Self, TemplateConfigError> {
        config.validate()?;
        if config.persons.len() < 2 {
            return Err(TemplateConfigError::SmallVocabulary("persons", 2));
        }
        if config.relation_terms.is_empty() {
            return Err(TemplateConfigError::SmallVocabulary("relation_terms", 1));
        }
        if let Some(bad) = config.relation_terms.iter().find(|t| lookup_term(t).is_none()) {
            return Err(TemplateConfigError::UnknownTerm(bad.clone()));
        }
        Ok(Self {
            rng: ChaCha8Rng::seed_from_u64(config.seed),
            config,
        })
    }

    pub fn template_next(&mut self, context: &[String]) -> String {
        if self.rng.gen_bool(self.config.fault_rate) {
            let term = self.pick_term();
            let pair: Vec<&String> = self.config.persons.choose_multiple(&mut self.rng, 2).collect();
            let (subject, possessor) = (pair[0].clone(), pair[1].clone());
            self.render(&subject, &term, &possessor)
        } else {
            self.informed(context)
        }
    }

    fn pick_term(&mut self) -> String {
        let weights: Vec<f64> = self
            .config
            .relation_terms
            .iter()
            .map(|t| self.config.weight(t))
            .collect();
        self.config.relation_terms[weighted_index(&mut self.rng, &weights)].clone()
    }

    fn render(&mut self, subject: &str, term: &str, possessor: &str) -> String {
        let pronoun = *["his", "her"].choose(&mut self.rng).expect("two pronouns");
        let template = TEMPLATES.choose(&mut self.rng).expect("templates");
        template(subject, term, possessor, pronoun)
    }

    /// Relate a person new to the story to someone already in it, choosing
    /// among the (possessor, term) pairs the knowledge base accepts.
    fn informed(&mut self, context: &[String]) -> String {
        let mut kb = KnowledgeBase::new();
        let mut known = BTreeSet::new();
        for line in context {
            let parse = parse_sentence(line);
            for clause in &parse.clauses {
                known.insert(clause.person_a.clone());
                known.insert(clause.person_b.clone());
            }
            if let AssertOutcome::Consistent(next) = kb.assert_facts(&normalize(&parse)) {
                kb = next;
            }
        }
        let mut fresh = self
            .config
            .persons
            .iter()
            .map(String::as_str)
            .chain(FRESH_NAMES.iter().copied())
            .filter(|n| !known.contains(*n) && !context.iter().any(|l| mentions(l, n)));
        let subject = fresh.next().expect("fresh name pool exhausted").to_string();
        if known.is_empty() {
            let possessor = fresh.next().expect("fresh name pool exhausted").to_string();
            let term = self.pick_term();
            return self.render(&subject, &term, &possessor);
        }
        let mut options: Vec<(String, String)> = known
            .iter()
            .flat_map(|k| self.config.relation_terms.iter().map(move |t| (k.clone(), t.clone())))
            .collect();
        options.shuffle(&mut self.rng);
        for (possessor, term) in options {
            let clause = Clause::new(&subject, &term, &possessor);
            let facts = normalize(&NaturalParse {
                clauses: vec![clause],
            });
            if kb.assert_facts(&facts).is_consistent() {
                return self.render(&subject, &term, &possessor);
            }
        }
        format!("{subject} went to the park.")
    }
}

fn mentions(line: &str, name: &str) -> bool {
    line.split(|c: char| !c.is_ascii_alphabetic() && c != '\'')
        .any(|w| w.trim_end_matches("'s").trim_matches('\'') == name)
}

impl ProposalSource for ClutrrTemplateProposer {
    fn next_candidate(
        &mut self,
        request: &ProposalRequest<'_>,
        _rng: &mut dyn RngCore,
    ) -> Result<Option<String>, ProposalError> {
        Ok(Some(self.template_next(request.context)))
    }
}
