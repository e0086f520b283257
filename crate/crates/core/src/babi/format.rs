//! Reader and writer for the bAbI text format.
//!
//! ```text
//! 1 Mary went to the garden.
//! 2 Mary picked up the apple there.
//! 3 Where is the apple?     garden    2 1
//! ```
//!
//! Question lines carry the gold answer and the supporting line numbers,
//! separated by tabs. A line numbered `1` starts a new story.

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BabiLine {
    Statement {
        id: usize,
        text: String,
    },
    Question {
        id: usize,
        text: String,
        answer: String,
        supporting: Vec<usize>,
    },
}

impl BabiLine {
    pub fn id(&self) -> usize {
        match self {
            BabiLine::Statement { id, .. } | BabiLine::Question { id, .. } => *id,
        }
    }

    pub fn text(&self) -> &str {
        match self {
            BabiLine::Statement { text, .. } | BabiLine::Question { text, .. } => text,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct BabiStory {
    pub lines: Vec<BabiLine>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}: {reason}")]
pub struct FormatError {
    pub line: usize,
    pub reason: String,
}

pub fn parse_babi(input: &str) -> Result<Vec<BabiStory>, FormatError> {
    let mut stories: Vec<BabiStory> = Vec::new();
    for (idx, raw) in input.lines().enumerate() {
        let line_no = idx + 1;
        let err = |reason: String| FormatError {
            line: line_no,
            reason,
        };
        if raw.trim().is_empty() {
            continue;
        }
        let (num, rest) = raw
            .trim_start()
            .split_once(' ')
            .ok_or_else(|| err("expected '<number> <text>'".into()))?;
        let id: usize = num
            .parse()
            .map_err(|_| err(format!("bad line number {num:?}")))?;
        if id == 1 {
            stories.push(BabiStory::default());
        }
        let story = stories
            .last_mut()
            .ok_or_else(|| err("first story must start at line 1".into()))?;
        let expected = story.lines.last().map_or(1, |l| l.id() + 1);
        if id != expected {
            return Err(err(format!("expected line number {expected}, found {id}")));
        }

        let mut fields = rest.split('\t');
        let text = fields.next().unwrap_or_default().trim().to_string();
        let line = match fields.next() {
            None => BabiLine::Statement { id, text },
            Some(answer) => {
                let supporting = fields
                    .next()
                    .unwrap_or_default()
                    .split_whitespace()
                    .map(|s| {
                        s.parse::<usize>()
                            .map_err(|_| err(format!("bad supporting fact {s:?}")))
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                BabiLine::Question {
                    id,
                    text,
                    answer: answer.trim().to_string(),
                    supporting,
                }
            }
        };
        story.lines.push(line);
    }
    Ok(stories)
}

pub fn write_babi(stories: &[BabiStory]) -> String {
    let mut out = String::new();
    for story in stories {
        for line in &story.lines {
            match line {
                BabiLine::Statement { id, text } => out.push_str(&format!("{id} {text}\n")),
                BabiLine::Question {
                    id,
                    text,
                    answer,
                    supporting,
                } => {
                    let sup: Vec<String> = supporting.iter().map(|s| s.to_string()).collect();
                    out.push_str(&format!("{id} {text} \t{answer}\t{}\n", sup.join(" ")));
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = "1 Mary moved to the bathroom.\n\
2 Sandra journeyed to the bedroom.\n\
3 Mary got the football there.\n\
4 Where is the football? \tbathroom\t3 1\n\
1 John went to the hallway.\n\
2 Where is the milk?\thallway\t1\n";

    #[test]
    fn reads_two_stories() {
        let stories = parse_babi(SAMPLE).unwrap();
        assert_eq!(stories.len(), 2);
        assert_eq!(stories[0].lines.len(), 4);
        assert_eq!(
            stories[0].lines[3],
            BabiLine::Question {
                id: 4,
                text: "Where is the football?".into(),
                answer: "bathroom".into(),
                supporting: vec![3, 1],
            }
        );
    }

    #[test]
    fn write_then_read_is_identity() {
        let stories = parse_babi(SAMPLE).unwrap();
        assert_eq!(parse_babi(&write_babi(&stories)).unwrap(), stories);
    }

    #[test]
    fn rejects_bad_numbering() {
        assert_eq!(parse_babi("2 Mary went to the garden.\n").unwrap_err().line, 1);
        assert!(parse_babi("1 A went to the b.\n3 A went to the c.\n").is_err());
        assert!(parse_babi("x Mary went to the garden.\n").is_err());
        assert!(parse_babi("1 Where is the x?\tgarden\tone\n").is_err());
    }
}
