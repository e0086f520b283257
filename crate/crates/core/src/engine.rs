//! The domain-agnostic generation loop.
//!
//! A [`ProposalSource`] produces candidate lines, a [`FactExtractor`] turns a
//! candidate into domain facts, and a [`WorldModel`] accepts or rejects those
//! facts against the current state. Rejected candidates are resampled until
//! one is accepted or the per-line sample budget runs out.

use rand::RngCore;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Machine-readable reason attached to a rejected candidate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CauseKind {
    PreconditionViolation,
    LogicalContradiction,
    ParseFailure,
    BoundsViolation,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rejection {
    pub cause: CauseKind,
    pub detail: String,
}

impl Rejection {
    pub fn new(cause: CauseKind, detail: impl Into<String>) -> Self {
        Self {
            cause,
            detail: detail.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Verdict {
    Accept,
    Reject(Rejection),
}

impl Verdict {
    pub fn is_accept(&self) -> bool {
        matches!(self, Verdict::Accept)
    }

    pub fn rejection(&self) -> Option<&Rejection> {
        match self {
            Verdict::Accept => None,
            Verdict::Reject(r) => Some(r),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProposalError {
    #[error("transport error: {0}")]
    Transport(String),
    #[error("decode error: {0}")]
    Decode(String),
    #[error("proposal source exhausted: {0}")]
    Exhausted(String),
}

/// What the engine tells a source about the line it is asking for.
#[derive(Debug, Clone, Copy)]
pub struct ProposalRequest<'a> {
    /// Accepted lines so far, in order.
    pub context: &'a [String],
    /// Index of the line being generated (error lines count).
    pub line_index: usize,
    /// Zero-based attempt number within the line.
    pub attempt: usize,
}

/// System 1: anything that can propose the next line of a story.
///
/// Sources must be deterministic given the request sequence and the RNG
/// stream handed to them by the engine. Returning `Ok(None)` means the source
/// has nothing more to offer for the current line.
pub trait ProposalSource {
    fn next_candidate(
        &mut self,
        request: &ProposalRequest<'_>,
        rng: &mut dyn RngCore,
    ) -> Result<Option<String>, ProposalError>;
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("parse failure: {0}")]
pub struct ParseFailure(pub String);

#[derive(Debug, Clone, PartialEq)]
pub struct Extraction<F> {
    pub facts: Vec<F>,
    /// The line is a question; an accepted question ends the story.
    pub question: bool,
}

impl<F> Extraction<F> {
    pub fn statement(facts: Vec<F>) -> Self {
        Self {
            facts,
            question: false,
        }
    }
}

/// Maps candidate text to domain facts. Must not hold mutable state.
pub trait FactExtractor {
    type Fact;

    fn extract(&self, text: &str, context: &[String])
        -> Result<Extraction<Self::Fact>, ParseFailure>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SnapshotHandle(pub u64);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("invalid snapshot handle {0:?}")]
pub struct InvalidHandle(pub SnapshotHandle);

/// System 2 state. `check` is pure; `apply` is transactional (a rejected
/// apply leaves the state untouched).
pub trait WorldModel {
    type Fact;

    fn check(&self, facts: &[Self::Fact]) -> Verdict;
    fn apply(&mut self, facts: &[Self::Fact]) -> Verdict;
    fn snapshot(&mut self) -> SnapshotHandle;
    /// Roll back to `handle`, discarding it and every later snapshot.
    fn restore(&mut self, handle: SnapshotHandle) -> Result<(), InvalidHandle>;
    /// Drop `handle` (and every later snapshot) without touching the state.
    fn release(&mut self, handle: SnapshotHandle) -> Result<(), InvalidHandle>;
    /// Canonical serialization of the observable state.
    fn serialize_state(&self) -> String;

    /// Answer carried by an accepted question, if the domain has one.
    fn answer(&self, _facts: &[Self::Fact]) -> Option<String> {
        None
    }
}

/// LIFO snapshot storage shared by the world model implementations.
#[derive(Debug, Clone)]
pub struct SnapshotStack<S> {
    frames: Vec<(SnapshotHandle, S)>,
    next: u64,
}

impl<S> Default for SnapshotStack<S> {
    fn default() -> Self {
        Self {
            frames: Vec::new(),
            next: 0,
        }
    }
}

impl<S> SnapshotStack<S> {
    pub fn push(&mut self, state: S) -> SnapshotHandle {
        let handle = SnapshotHandle(self.next);
        self.next += 1;
        self.frames.push((handle, state));
        handle
    }

    fn position(&self, handle: SnapshotHandle) -> Result<usize, InvalidHandle> {
        self.frames
            .iter()
            .position(|(h, _)| *h == handle)
            .ok_or(InvalidHandle(handle))
    }

    /// Pops `handle` and everything above it, returning the state saved at `handle`.
    pub fn restore(&mut self, handle: SnapshotHandle) -> Result<S, InvalidHandle> {
        let idx = self.position(handle)?;
        let mut tail = self.frames.split_off(idx);
        Ok(tail.swap_remove(0).1)
    }

    pub fn release(&mut self, handle: SnapshotHandle) -> Result<(), InvalidHandle> {
        let idx = self.position(handle)?;
        self.frames.truncate(idx);
        Ok(())
    }

    pub fn depth(&self) -> usize {
        self.frames.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BudgetPolicy {
    MarkErrorAndStop,
    /// The exhausted line is omitted from the story and generation moves on.
    #[default]
    MarkErrorAndContinue,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenerationConfig {
    pub sample_budget: usize,
    pub max_lines: usize,
    pub seed: u64,
    pub on_budget_exhausted: BudgetPolicy,
}

impl Default for GenerationConfig {
    fn default() -> Self {
        Self {
            sample_budget: 10,
            max_lines: 12,
            seed: 0,
            on_budget_exhausted: BudgetPolicy::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConfigError {
    #[error("sample_budget must be at least 1")]
    ZeroBudget,
    #[error("max_lines must be at least 1")]
    ZeroMaxLines,
}

impl GenerationConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.sample_budget == 0 {
            return Err(ConfigError::ZeroBudget);
        }
        if self.max_lines == 0 {
            return Err(ConfigError::ZeroMaxLines);
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RejectedCandidate {
    pub text: String,
    pub cause: CauseKind,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LineRecord<F> {
    /// `None` when the line exhausted its budget and was left out of the story.
    pub accepted_text: Option<String>,
    pub facts: Vec<F>,
    pub attempts: usize,
    pub rejected: Vec<RejectedCandidate>,
    pub error: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub answer: Option<String>,
}

impl<F> LineRecord<F> {
    pub fn first_try(&self) -> bool {
        self.attempts == 1 && !self.error
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Termination {
    QuestionEmitted,
    MaxLines,
    BudgetExhausted,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationTrace<F> {
    pub lines: Vec<LineRecord<F>>,
    pub terminated_by: Termination,
}

impl<F> GenerationTrace<F> {
    /// Accepted lines in story order.
    pub fn story(&self) -> Vec<&str> {
        self.lines
            .iter()
            .filter_map(|l| l.accepted_text.as_deref())
            .collect()
    }
}

#[derive(Debug, Error)]
pub enum GenerationError<F: std::fmt::Debug> {
    #[error("invalid generation config: {0}")]
    Config(#[from] ConfigError),
    #[error("proposal source failed on line {line}: {cause}")]
    Source {
        cause: ProposalError,
        line: usize,
        partial: Box<GenerationTrace<F>>,
    },
}

fn extract_and_check<X, W>(
    extractor: &X,
    world: &W,
    context: &[String],
    text: &str,
) -> Result<Extraction<X::Fact>, Rejection>
where
    X: FactExtractor,
    W: WorldModel<Fact = X::Fact>,
{
    let extraction = extractor
        .extract(text, context)
        .map_err(|e| Rejection::new(CauseKind::ParseFailure, e.0))?;
    match world.check(&extraction.facts) {
        Verdict::Accept => Ok(extraction),
        Verdict::Reject(r) => Err(r),
    }
}

/// Accept iff extraction succeeds and every extracted fact passes `world.check`.
pub fn check_candidate<X, W>(extractor: &X, world: &W, context: &[String], text: &str) -> Verdict
where
    X: FactExtractor,
    W: WorldModel<Fact = X::Fact>,
{
    match extract_and_check(extractor, world, context, text) {
        Ok(_) => Verdict::Accept,
        Err(r) => Verdict::Reject(r),
    }
}

/// Run the guess-and-check loop until a question is accepted, `max_lines`
/// lines have been recorded, or (under `MarkErrorAndStop`) a line exhausts
/// its budget.
pub fn generate_story<S, X, W>(
    source: &mut S,
    extractor: &X,
    world: &mut W,
    config: &GenerationConfig,
) -> Result<GenerationTrace<X::Fact>, GenerationError<X::Fact>>
where
    S: ProposalSource + ?Sized,
    X: FactExtractor,
    X::Fact: Clone + std::fmt::Debug,
    W: WorldModel<Fact = X::Fact>,
{
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut context: Vec<String> = Vec::new();
    let mut lines: Vec<LineRecord<X::Fact>> = Vec::new();

    let abort = |cause: ProposalError, lines: Vec<LineRecord<X::Fact>>, terminated_by| {
        let line = lines.len();
        GenerationError::Source {
            cause,
            line,
            partial: Box::new(GenerationTrace {
                lines,
                terminated_by,
            }),
        }
    };

    loop {
        if lines.len() >= config.max_lines {
            return Ok(GenerationTrace {
                lines,
                terminated_by: Termination::MaxLines,
            });
        }
        let line_index = lines.len();
        let mut rejected = Vec::new();
        let mut accepted = None;

        for attempt in 0..config.sample_budget {
            let request = ProposalRequest {
                context: &context,
                line_index,
                attempt,
            };
            let candidate = match source.next_candidate(&request, &mut rng) {
                Ok(Some(text)) => text,
                Ok(None) if attempt > 0 => break,
                Ok(None) => {
                    let cause = ProposalError::Exhausted(format!("no candidate for line {line_index}"));
                    return Err(abort(cause, lines, Termination::MaxLines));
                }
                Err(cause) => return Err(abort(cause, lines, Termination::MaxLines)),
            };

            let extraction = match extract_and_check(extractor, world, &context, &candidate) {
                Ok(extraction) => extraction,
                Err(rejection) => {
                    rejected.push(RejectedCandidate {
                        text: candidate,
                        cause: rejection.cause,
                        detail: rejection.detail,
                    });
                    continue;
                }
            };

            let answer = world.answer(&extraction.facts);
            let handle = world.snapshot();
            match world.apply(&extraction.facts) {
                Verdict::Accept => {
                    world.release(handle).expect("snapshot taken above");
                    accepted = Some((candidate, extraction, answer));
                    break;
                }
                Verdict::Reject(rejection) => {
                    world.restore(handle).expect("snapshot taken above");
                    rejected.push(RejectedCandidate {
                        text: candidate,
                        cause: rejection.cause,
                        detail: rejection.detail,
                    });
                }
            }
        }

        match accepted {
            Some((text, extraction, answer)) => {
                let question = extraction.question;
                context.push(text.clone());
                lines.push(LineRecord {
                    accepted_text: Some(text),
                    facts: extraction.facts,
                    attempts: rejected.len() + 1,
                    rejected,
                    error: false,
                    answer,
                });
                if question {
                    return Ok(GenerationTrace {
                        lines,
                        terminated_by: Termination::QuestionEmitted,
                    });
                }
            }
            None => {
                lines.push(LineRecord {
                    accepted_text: None,
                    facts: Vec::new(),
                    attempts: rejected.len(),
                    rejected,
                    error: true,
                    answer: None,
                });
                if config.on_budget_exhausted == BudgetPolicy::MarkErrorAndStop {
                    return Ok(GenerationTrace {
                        lines,
                        terminated_by: Termination::BudgetExhausted,
                    });
                }
            }
        }
    }
}

/// Per-line and per-story error statistics over a batch of traces.
///
/// "First try" columns count lines accepted without any resampling (what the
/// proposer alone would have produced); "resolved" columns count lines that
/// ended up consistent within the budget.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StoryStats {
    pub stories: usize,
    pub lines: usize,
    pub pct_lines_error_free: f64,
    pub pct_stories_error_free: f64,
    pub pct_lines_resolved: f64,
    pub pct_stories_resolved: f64,
    pub total_rejections: usize,
    pub total_candidates: usize,
    /// Fraction of all proposed candidates that were rejected.
    pub rejection_rate: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("no traces to summarize")]
pub struct EmptyInput;

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        1.0
    } else {
        num as f64 / den as f64
    }
}

pub fn compute_stats<F>(traces: &[GenerationTrace<F>]) -> Result<StoryStats, EmptyInput> {
    if traces.is_empty() {
        return Err(EmptyInput);
    }
    let lines = traces.iter().map(|t| t.lines.len()).sum();
    let first_try = traces
        .iter()
        .flat_map(|t| &t.lines)
        .filter(|l| l.first_try())
        .count();
    let resolved = traces
        .iter()
        .flat_map(|t| &t.lines)
        .filter(|l| !l.error)
        .count();
    let clean_stories = traces
        .iter()
        .filter(|t| t.lines.iter().all(|l| l.first_try()))
        .count();
    let resolved_stories = traces
        .iter()
        .filter(|t| t.lines.iter().all(|l| !l.error))
        .count();
    let total_rejections = traces
        .iter()
        .flat_map(|t| &t.lines)
        .map(|l| l.rejected.len())
        .sum();
    let total_candidates = traces
        .iter()
        .flat_map(|t| &t.lines)
        .map(|l| l.attempts)
        .sum();
    Ok(StoryStats {
        stories: traces.len(),
        lines,
        pct_lines_error_free: ratio(first_try, lines),
        pct_stories_error_free: ratio(clean_stories, traces.len()),
        pct_lines_resolved: ratio(resolved, lines),
        pct_stories_resolved: ratio(resolved_stories, traces.len()),
        total_rejections,
        total_candidates,
        rejection_rate: if total_candidates == 0 {
            0.0
        } else {
            total_rejections as f64 / total_candidates as f64
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(attempts: usize, error: bool) -> LineRecord<()> {
        let rejected_count = if error { attempts } else { attempts - 1 };
        LineRecord {
            accepted_text: (!error).then(|| "x".to_string()),
            facts: vec![],
            attempts,
            rejected: (0..rejected_count)
                .map(|_| RejectedCandidate {
                    text: "bad".into(),
                    cause: CauseKind::PreconditionViolation,
                    detail: String::new(),
                })
                .collect(),
            error,
            answer: None,
        }
    }

    fn trace(lines: Vec<LineRecord<()>>) -> GenerationTrace<()> {
        GenerationTrace {
            lines,
            terminated_by: Termination::MaxLines,
        }
    }

    #[test]
    fn stats_single_clean_story() {
        let stats = compute_stats(&[trace(vec![line(1, false); 4])]).unwrap();
        assert_eq!(stats.pct_lines_error_free, 1.0);
        assert_eq!(stats.pct_stories_error_free, 1.0);
        assert_eq!(stats.total_rejections, 0);
    }

    #[test]
    fn stats_one_resampled_line() {
        let clean = trace(vec![line(1, false); 3]);
        let resampled = trace(vec![line(1, false), line(2, false), line(1, false)]);
        let stats = compute_stats(&[clean, resampled]).unwrap();
        assert!((stats.pct_lines_error_free - 5.0 / 6.0).abs() < 1e-12);
        assert_eq!(stats.pct_stories_error_free, 0.5);
        assert_eq!(stats.total_rejections, 1);
        assert_eq!(stats.pct_lines_resolved, 1.0);
        assert!((stats.rejection_rate - 1.0 / 7.0).abs() < 1e-12);
    }

    #[test]
    fn stats_every_story_resampled() {
        let traces: Vec<_> = (0..50)
            .map(|_| trace(vec![line(1, false), line(3, false)]))
            .collect();
        let stats = compute_stats(&traces).unwrap();
        assert_eq!(stats.pct_stories_error_free, 0.0);
        assert_eq!(stats.pct_stories_resolved, 1.0);
    }

    #[test]
    fn stats_counts_exhausted_lines() {
        let stats = compute_stats(&[trace(vec![line(1, false), line(10, true)])]).unwrap();
        assert_eq!(stats.pct_lines_error_free, 0.5);
        assert_eq!(stats.pct_lines_resolved, 0.5);
        assert_eq!(stats.pct_stories_resolved, 0.0);
        assert_eq!(stats.total_rejections, 10);
    }

    #[test]
    fn stats_empty_input() {
        assert_eq!(compute_stats::<()>(&[]), Err(EmptyInput));
    }

    #[test]
    fn config_validation() {
        let mut cfg = GenerationConfig::default();
        assert_eq!(cfg.sample_budget, 10);
        assert!(cfg.validate().is_ok());
        cfg.sample_budget = 0;
        assert_eq!(cfg.validate(), Err(ConfigError::ZeroBudget));
        cfg.sample_budget = 1;
        cfg.max_lines = 0;
        assert_eq!(cfg.validate(), Err(ConfigError::ZeroMaxLines));
    }

    #[test]
    fn snapshot_stack_is_lifo() {
        let mut stack = SnapshotStack::default();
        let a = stack.push(1);
        let b = stack.push(2);
        let c = stack.push(3);
        assert_eq!(stack.restore(b), Ok(2));
        // c was above b and is gone with it
        assert_eq!(stack.restore(c), Err(InvalidHandle(c)));
        assert_eq!(stack.depth(), 1);
        stack.release(a).unwrap();
        assert_eq!(stack.restore(a), Err(InvalidHandle(a)));
    }
}
