//! Pattern parser for kinship sentences.
//!
//! A sentence becomes a list of clauses `(A, term, B)` read as "A is B's
//! term", or the empty parse (`None`). Clauses are then normalized into
//! gender-neutral relation atoms.
//!
//! Recognized shapes:
//!
//! * `A is B's [adj] T` (also `was`, and the typo `id`)
//! * `A's [adj] T[,] B`
//! * `A ... his/her [adj] T[,] B`, the pronoun bound to the nearest preceding name
//! * `A is married to B`
//! * `... the couple welcomed C`, where C becomes the child of the first spouse

use std::fmt;

use serde::{Deserialize, Serialize};

use super::kb::{Relation, RelationAtom};
use crate::engine::{Extraction, FactExtractor, ParseFailure};

/// Which argument order a term maps to when read as "X is Y's term".
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    /// `rel(X, Y)`
    Forward,
    /// `rel(Y, X)`
    Reverse,
}

/// Accepted surface terms. Multi-word terms appear with spaces and with
/// hyphens. `child` and `sibling` are the ungendered forms used in gold parses.
pub const SURFACE_TERMS: &[(&str, Relation, Direction)] = &[
    ("spouse", Relation::So, Direction::Forward),
    ("husband", Relation::So, Direction::Forward),
    ("wife", Relation::So, Direction::Forward),
    ("parent", Relation::Child, Direction::Forward),
    ("father", Relation::Child, Direction::Forward),
    ("mother", Relation::Child, Direction::Forward),
    ("child", Relation::Child, Direction::Reverse),
    ("son", Relation::Child, Direction::Reverse),
    ("daughter", Relation::Child, Direction::Reverse),
    ("grandparent", Relation::Grand, Direction::Forward),
    ("grandmother", Relation::Grand, Direction::Forward),
    ("grandfather", Relation::Grand, Direction::Forward),
    ("grandchild", Relation::Grand, Direction::Reverse),
    ("granddaughter", Relation::Grand, Direction::Reverse),
    ("grandson", Relation::Grand, Direction::Reverse),
    ("sibling", Relation::Sibling, Direction::Forward),
    ("sister", Relation::Sibling, Direction::Forward),
    ("brother", Relation::Sibling, Direction::Forward),
    ("uncle", Relation::Un, Direction::Reverse),
    ("aunt", Relation::Un, Direction::Reverse),
    ("nephew", Relation::Un, Direction::Forward),
    ("niece", Relation::Un, Direction::Forward),
    ("daughter in law", Relation::InLaw, Direction::Reverse),
    ("son in law", Relation::InLaw, Direction::Reverse),
    ("daughter-in-law", Relation::InLaw, Direction::Reverse),
    ("son-in-law", Relation::InLaw, Direction::Reverse),
    ("mother in law", Relation::InvInLaw, Direction::Reverse),
    ("father in law", Relation::InvInLaw, Direction::Reverse),
    ("mother-in-law", Relation::InvInLaw, Direction::Reverse),
    ("father-in-law", Relation::InvInLaw, Direction::Reverse),
];

pub fn lookup_term(term: &str) -> Option<(Relation, Direction)> {
    let term = term.to_ascii_lowercase();
    SURFACE_TERMS
        .iter()
        .find(|(t, _, _)| *t == term)
        .map(|(_, r, d)| (*r, *d))
}

/// One "A is B's term" clause.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Clause {
    pub person_a: String,
    pub term: String,
    pub person_b: String,
}

impl Clause {
    pub fn new(a: &str, term: &str, b: &str) -> Self {
        Self {
            person_a: a.to_string(),
            term: term.to_string(),
            person_b: b.to_string(),
        }
    }
}

impl fmt::Display for Clause {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} is {}'s {}.", self.person_a, self.person_b, self.term)
    }
}

/// Parse result; no clauses is the `None` parse.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct NaturalParse {
    pub clauses: Vec<Clause>,
}

impl NaturalParse {
    pub fn is_none(&self) -> bool {
        self.clauses.is_empty()
    }
}

impl fmt::Display for NaturalParse {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_none() {
            return f.write_str("None");
        }
        let parts: Vec<String> = self.clauses.iter().map(|c| c.to_string()).collect();
        f.write_str(&parts.join(" "))
    }
}

/// Capitalized words that are never person names.
const STOPWORDS: &[&str] = &[
    "A", "After", "An", "And", "As", "At", "Because", "Before", "But", "During", "Every",
    "For", "He", "Her", "Hers", "Him", "His", "How", "I", "If", "In", "It", "Later", "My",
    "Next", "No", "Not", "On", "Once", "One", "She", "Since", "So", "Some", "That", "The",
    "Their", "Them", "Then", "There", "These", "They", "This", "Those", "Today", "Tomorrow",
    "We", "What", "When", "Where", "While", "Who", "Why", "With", "Yesterday", "You",
];

#[derive(Debug, Clone, PartialEq, Eq)]
struct Token {
    word: String,
    possessive: bool,
    comma_after: bool,
}

fn tokenize(text: &str) -> Vec<Token> {
    let mut out = Vec::new();
    for raw in text.split_whitespace() {
        let comma_after = raw.ends_with(',') || raw.ends_with(';');
        let mut word = raw.trim_matches(|c: char| !c.is_alphanumeric() && c != '\'' && c != '-');
        word = word.trim_end_matches('\'');
        let mut possessive = false;
        for suffix in ["'s", "’s"] {
            if let Some(stem) = word.strip_suffix(suffix) {
                word = stem;
                possessive = true;
            }
        }
        if word.is_empty() {
            continue;
        }
        out.push(Token {
            word: word.to_string(),
            possessive,
            comma_after,
        });
    }
    out
}

fn is_name(tok: &Token) -> bool {
    let mut chars = tok.word.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_uppercase())
        && chars.all(|c| c.is_ascii_alphabetic())
        && !STOPWORDS.contains(&tok.word.as_str())
}

fn is_pronoun(tok: &Token) -> bool {
    matches!(tok.word.to_ascii_lowercase().as_str(), "his" | "her")
}

/// Term starting at `i`: the canonical term text and the number of tokens consumed.
fn term_at(toks: &[Token], i: usize) -> Option<(String, usize)> {
    let mut best = None;
    for len in 1..=3 {
        if i + len > toks.len() {
            break;
        }
        // a comma or possessive may only close the last word of the term
        if toks[i..i + len - 1].iter().any(|t| t.comma_after || t.possessive) {
            break;
        }
        let phrase: Vec<String> = toks[i..i + len]
            .iter()
            .map(|t| t.word.to_ascii_lowercase())
            .collect();
        let phrase = phrase.join(" ");
        if lookup_term(&phrase).is_some() {
            best = Some((phrase, len));
        }
    }
    best
}

const MAX_ADJECTIVES: usize = 2;

/// After a possessor at `i`, skip up to two modifiers and read a term.
/// Returns the term and the index just past it.
fn modified_term(toks: &[Token], start: usize) -> Option<(String, usize)> {
    for skip in 0..=MAX_ADJECTIVES {
        let at = start + skip;
        if at >= toks.len() {
            return None;
        }
        if let Some((term, len)) = term_at(toks, at) {
            return Some((term, at + len));
        }
        let t = &toks[at];
        let modifier = t.word.chars().all(|c| c.is_ascii_lowercase()) && !t.comma_after && !t.possessive;
        if !modifier {
            return None;
        }
    }
    None
}

fn is_copula(tok: &Token) -> bool {
    matches!(tok.word.as_str(), "is" | "was" | "id")
}

/// Parse one sentence into kinship clauses.
pub fn parse_sentence(text: &str) -> NaturalParse {
    let toks = tokenize(text);
    let mut clauses: Vec<Clause> = Vec::new();
    let mut first_spouse: Option<String> = None;
    let mut i = 0;
    while i < toks.len() {
        let tok = &toks[i];

        // A is married to B
        if is_name(tok)
            && !tok.possessive
            && toks.len() > i + 3
            && is_copula(&toks[i + 1])
            && toks[i + 2].word == "married"
            && toks[i + 3].word == "to"
            && toks.get(i + 4).is_some_and(is_name)
        {
            let b = &toks[i + 4].word;
            clauses.push(Clause::new(b, "spouse", &tok.word));
            first_spouse.get_or_insert_with(|| tok.word.clone());
            i += 5;
            continue;
        }

        // the couple welcomed C
        if tok.word.eq_ignore_ascii_case("couple")
            && toks.get(i + 1).is_some_and(|t| t.word == "welcomed")
            && toks.get(i + 2).is_some_and(is_name)
        {
            if let Some(parent) = &first_spouse {
                clauses.push(Clause::new(&toks[i + 2].word, "child", parent));
            }
            i += 3;
            continue;
        }

        let possessor = if is_name(tok) && tok.possessive {
            Some(tok.word.clone())
        } else if is_pronoun(tok) {
            toks[..i].iter().rev().find(|t| is_name(t)).map(|t| t.word.clone())
        } else {
            None
        };
        let Some(possessor) = possessor else {
            i += 1;
            continue;
        };
        let Some((term, next)) = modified_term(&toks, i + 1) else {
            i += 1;
            continue;
        };

        // A is B's T
        let subject = (i >= 2 && is_name(&toks[i - 2]) && is_copula(&toks[i - 1]) && is_name(tok))
            .then(|| toks[i - 2].word.clone());
        if let Some(a) = subject {
            clauses.push(Clause::new(&a, &term, &possessor));
            i = next;
            continue;
        }

        // A's T[,] B and his/her T[,] B
        if let Some(b) = toks.get(next).filter(|t| is_name(t)) {
            if b.word != possessor {
                clauses.push(Clause::new(&b.word, &term, &possessor));
            }
            i = next + 1;
            continue;
        }
        i = next;
    }
    NaturalParse { clauses }
}

/// Parse a multi-sentence text such as a gold parse ("A is B's T. C is D's U.").
pub fn parse_text(text: &str) -> NaturalParse {
    let mut clauses = Vec::new();
    for sentence in split_sentences(text) {
        clauses.extend(parse_sentence(sentence).clauses);
    }
    NaturalParse { clauses }
}

pub fn split_sentences(text: &str) -> Vec<&str> {
    let mut out = Vec::new();
    let mut start = 0;
    let bytes = text.as_bytes();
    for (idx, &b) in bytes.iter().enumerate() {
        let boundary = matches!(b, b'.' | b'!' | b'?')
            && bytes.get(idx + 1).is_none_or(|n| n.is_ascii_whitespace());
        if boundary {
            let s = text[start..=idx].trim();
            if !s.is_empty() {
                out.push(s);
            }
            start = idx + 1;
        }
    }
    let tail = text[start..].trim();
    if !tail.is_empty() {
        out.push(tail);
    }
    out
}

/// Map clauses to relation atoms; unknown terms are dropped.
pub fn normalize(parse: &NaturalParse) -> Vec<RelationAtom> {
    parse
        .clauses
        .iter()
        .filter_map(|c| {
            let (rel, dir) = lookup_term(&c.term)?;
            Some(match dir {
                Direction::Forward => RelationAtom::new(rel, &c.person_a, &c.person_b),
                Direction::Reverse => RelationAtom::new(rel, &c.person_b, &c.person_a),
            })
        })
        .collect()
}

/// Fact extractor for the generation engine. Never fails: a sentence with no
/// kinship pattern is the empty parse.
#[derive(Debug, Clone, Copy, Default)]
pub struct ClutrrExtractor;

impl FactExtractor for ClutrrExtractor {
    type Fact = RelationAtom;

    fn extract(&self, text: &str, _context: &[String]) -> Result<Extraction<RelationAtom>, ParseFailure> {
        Ok(Extraction::statement(normalize(&parse_sentence(text))))
    }
}
