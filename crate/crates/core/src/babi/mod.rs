//! bAbI task #2: world model, template parser, text format and question answering.

pub mod format;
pub mod parser;
pub mod world;

pub use format::{parse_babi, write_babi, BabiLine, BabiStory, FormatError};
pub use parser::{parse_question, parse_statement, BabiExtractor};
pub use world::{BabiAction, BabiError, BabiFact, BabiWorld, EntityKind, ObjLocQuery, WorldState};

use serde::{Deserialize, Serialize};

/// Answer printed when the world model cannot locate an object.
pub const UNKNOWN_ANSWER: &str = "unknown";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QaRecord {
    pub story: usize,
    pub line: usize,
    pub question: String,
    pub predicted: String,
    pub gold: String,
    pub correct: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QaReport {
    pub records: Vec<QaRecord>,
    /// Statements that failed to parse or were rejected by the world model.
    pub skipped_statements: usize,
    pub correct: usize,
    pub total: usize,
    pub accuracy: f64,
}

/// Answer every question by parsing the story into a fresh world model and
/// querying it.
pub fn answer_stories(stories: &[BabiStory]) -> QaReport {
    let mut records = Vec::new();
    let mut skipped = 0;
    for (story_idx, story) in stories.iter().enumerate() {
        let mut state = WorldState::new();
        for line in &story.lines {
            match line {
                BabiLine::Statement { text, .. } => {
                    let applied = parse_statement(text)
                        .ok()
                        .map(|action| state.check_and_apply(&action).is_ok());
                    if applied != Some(true) {
                        skipped += 1;
                    }
                }
                BabiLine::Question {
                    id, text, answer, ..
                } => {
                    let predicted = parse_question(text)
                        .ok()
                        .and_then(|q| state.query_obj_loc(&q.object).ok().flatten())
                        .unwrap_or_else(|| UNKNOWN_ANSWER.to_string());
                    records.push(QaRecord {
                        story: story_idx,
                        line: *id,
                        question: text.clone(),
                        correct: &predicted == answer,
                        predicted,
                        gold: answer.clone(),
                    });
                }
            }
        }
    }
    let correct = records.iter().filter(|r| r.correct).count();
    let total = records.len();
    QaReport {
        records,
        skipped_statements: skipped,
        correct,
        total,
        accuracy: if total == 0 {
            0.0
        } else {
            correct as f64 / total as f64
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn answers_fig2_story() {
        let text = "1 John went to the bedroom.\n2 John picked up the apple there.\n\
3 Mary travelled to the office.\n4 Daniel went back to the garden.\n\
5 Mary went to the bedroom.\n6 Sandra went to the bedroom.\n\
7 Sandra travelled to the office.\n8 Mary went back to the office.\n\
9 Where is the apple?\tbedroom\t2 1\n";
        let report = answer_stories(&parse_babi(text).unwrap());
        assert_eq!(report.total, 1);
        assert_eq!(report.accuracy, 1.0);
    }

    #[test]
    fn tampered_gold_scores_zero() {
        let text = "1 John went to the bedroom.\n2 John took the apple there.\n\
3 Where is the apple?\tkitchen\t2\n";
        let report = answer_stories(&parse_babi(text).unwrap());
        assert_eq!(report.accuracy, 0.0);
        assert_eq!(report.records[0].predicted, "bedroom");
    }
}
