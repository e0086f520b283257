//! Template parser for bAbI statements and questions.
//!
//! `"Max journeyed to the bathroom."` becomes `go(Max, bathroom)` and
//! `"Where is the football?"` becomes `queryObjLoc(football)`. Names are a
//! single capitalized token and arguments a single lowercase noun.

use crate::engine::{Extraction, FactExtractor, ParseFailure};

use super::world::{BabiAction, BabiFact, ObjLocQuery};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Command {
    Go,
    Pickup,
    Drop,
}

/// Surface verb phrases and the command each one denotes.
pub const VERB_TABLE: &[(&str, Command)] = &[
    ("journeyed to", Command::Go),
    ("went to", Command::Go),
    ("went back to", Command::Go),
    ("travelled to", Command::Go),
    ("traveled to", Command::Go),
    ("moved to", Command::Go),
    ("grabbed", Command::Pickup),
    ("picked up", Command::Pickup),
    ("got", Command::Pickup),
    ("took", Command::Pickup),
    ("dropped", Command::Drop),
    ("left", Command::Drop),
    ("put down", Command::Drop),
    ("discarded", Command::Drop),
];

pub fn phrases_for(command: Command) -> impl Iterator<Item = &'static str> {
    VERB_TABLE
        .iter()
        .filter(move |(_, c)| *c == command)
        .map(|(p, _)| *p)
}

pub fn is_question(text: &str) -> bool {
    text.contains('?')
}

fn words(text: &str) -> Vec<&str> {
    text.split_whitespace()
        .map(|w| w.trim_end_matches(['.', ',', '!']))
        .filter(|w| !w.is_empty())
        .collect()
}

fn is_name(word: &str) -> bool {
    let mut chars = word.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_uppercase()) && chars.all(|c| c.is_ascii_alphabetic())
}

fn is_noun(word: &str) -> bool {
    !word.is_empty() && word.chars().all(|c| c.is_ascii_lowercase())
}

/// Longest verb phrase that prefixes `rest`.
fn match_verb(rest: &[&str]) -> Option<(Command, usize)> {
    VERB_TABLE
        .iter()
        .filter_map(|(phrase, cmd)| {
            let parts: Vec<&str> = phrase.split(' ').collect();
            (rest.len() >= parts.len() && rest[..parts.len()] == parts[..])
                .then_some((*cmd, parts.len()))
        })
        .max_by_key(|(_, n)| *n)
}

pub fn parse_statement(text: &str) -> Result<BabiAction, ParseFailure> {
    if is_question(text) {
        return Err(ParseFailure(format!("question is not a statement: {text:?}")));
    }
    let words = words(text);
    let (subject, rest) = words
        .split_first()
        .ok_or_else(|| ParseFailure("empty statement".into()))?;
    if !is_name(subject) {
        return Err(ParseFailure(format!("subject {subject:?} is not a name")));
    }
    let (command, used) =
        match_verb(rest).ok_or_else(|| ParseFailure(format!("no known verb in {text:?}")))?;
    let mut args = &rest[used..];
    if args.first() == Some(&"the") {
        args = &args[1..];
    }
    if args.last() == Some(&"there") {
        args = &args[..args.len() - 1];
    }
    let [noun] = args else {
        return Err(ParseFailure(format!("expected a single argument in {text:?}")));
    };
    if !is_noun(noun) {
        return Err(ParseFailure(format!("argument {noun:?} is not a lowercase noun")));
    }
    Ok(match command {
        Command::Go => BabiAction::go(subject, noun),
        Command::Pickup => BabiAction::pickup(subject, noun),
        Command::Drop => BabiAction::drop(subject, noun),
    })
}

/// Only `Where is the X?` is supported.
pub fn parse_question(text: &str) -> Result<ObjLocQuery, ParseFailure> {
    let body = text
        .trim()
        .strip_suffix('?')
        .ok_or_else(|| ParseFailure(format!("not a question: {text:?}")))?;
    match body.split_whitespace().collect::<Vec<_>>()[..] {
        ["Where", "is", "the", object] if is_noun(object) => Ok(ObjLocQuery {
            object: object.to_string(),
        }),
        _ => Err(ParseFailure(format!("unsupported question form: {text:?}"))),
    }
}

pub fn command_of(action: &BabiAction) -> Command {
    match action {
        BabiAction::Go { .. } => Command::Go,
        BabiAction::Pickup { .. } => Command::Pickup,
        BabiAction::Drop { .. } => Command::Drop,
    }
}

/// Render `action` with a specific verb phrase (which must belong to its command).
pub fn render_with(action: &BabiAction, phrase: &str, there: bool) -> String {
    let (person, arg) = match action {
        BabiAction::Go { person, location } => (person, location),
        BabiAction::Pickup { person, object } | BabiAction::Drop { person, object } => {
            (person, object)
        }
    };
    let there = if there && command_of(action) != Command::Go {
        " there"
    } else {
        ""
    };
    format!("{person} {phrase} the {arg}{there}.")
}

pub fn render_question(query: &ObjLocQuery) -> String {
    format!("Where is the {}?", query.object)
}

/// Fact extractor for the generation engine.
#[derive(Debug, Clone, Copy, Default)]
pub struct BabiExtractor;

impl FactExtractor for BabiExtractor {
    type Fact = BabiFact;

    fn extract(&self, text: &str, _context: &[String]) -> Result<Extraction<BabiFact>, ParseFailure> {
        if is_question(text) {
            let query = parse_question(text)?;
            Ok(Extraction {
                facts: vec![BabiFact::Query(query)],
                question: true,
            })
        } else {
            Ok(Extraction::statement(vec![BabiFact::Action(parse_statement(text)?)]))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn statement_prompt_examples() {
        let cases = [
            ("Max journeyed to the bathroom.", "go(Max, bathroom)"),
            ("Mary grabbed the football there.", "pickup(Mary, football)"),
            ("Bob picked up the apple.", "pickup(Bob, apple)"),
            ("Susan dropped the milk. ", "drop(Susan, milk)"),
            ("Bob got the football there.", "pickup(Bob, football)"),
            ("Max left the cup.", "drop(Max, cup)"),
            ("Kevin put down the pie there.", "drop(Kevin, pie)"),
            ("John took the football there.", "pickup(John, football)"),
        ];
        for (text, gold) in cases {
            assert_eq!(parse_statement(text).unwrap().to_string(), gold, "{text}");
        }
    }

    #[test]
    fn question_prompt_examples() {
        for obj in ["toothbrush", "milk", "apple", "football"] {
            let q = parse_question(&format!("Where is the {obj}?")).unwrap();
            assert_eq!(q.to_string(), format!("queryObjLoc({obj})"));
        }
    }

    #[test]
    fn unsupported_forms_fail() {
        assert!(parse_statement("Max pondered the meaning of life.").is_err());
        assert!(parse_statement("max went to the garden.").is_err());
        assert!(parse_statement("Max went to the big garden.").is_err());
        assert!(parse_statement("").is_err());
        assert!(parse_question("Who has the apple?").is_err());
        assert!(parse_question("Where is Mary?").is_err());
        assert!(parse_question("Where is the apple").is_err());
    }

    #[test]
    fn longest_phrase_wins() {
        assert_eq!(
            parse_statement("Mary went back to the office.").unwrap(),
            BabiAction::go("Mary", "office")
        );
    }

    #[test]
    fn extractor_flags_questions() {
        let e = BabiExtractor.extract("Where is the apple?", &[]).unwrap();
        assert!(e.question);
        let e = BabiExtractor.extract("Daniel went to the patio.", &[]).unwrap();
        assert!(!e.question);
        assert!(BabiExtractor.extract("Who is there?", &[]).is_err());
    }
}
