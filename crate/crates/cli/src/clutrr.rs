use std::fmt::Debug;

use dualsys_core::clutrr::{parse_story_file, ClutrrExtractor, ClutrrWorld, RelationAtom};
use dualsys_core::engine::{
    compute_stats, generate_story, BudgetPolicy, CauseKind, FactExtractor, GenerationConfig, GenerationError,
    GenerationTrace, LineRecord, ProposalSource, RejectedCandidate, StoryStats, Termination, Verdict, WorldModel,
};
use dualsys_core::proposers::{ClutrrTemplateProposer, HttpProposalSource, TemplateProposerConfig};
use dualsys_core::seed::derive_seed;
use serde::Serialize;

use crate::{
    read_input, sidecar, timeout, to_json_line, to_json_pretty, write_output, CheckArgs, CliError, CliResult,
    GenerateArgs, Io, ProposerKind,
};

#[derive(Serialize)]
struct TraceRecord<'a, F> {
    story: usize,
    seed: u64,
    #[serde(flatten)]
    trace: &'a GenerationTrace<F>,
}

#[derive(Serialize)]
struct StatsFile<'a> {
    subcommand: &'a str,
    stats: &'a StoryStats,
}

fn print_stats(stats: &StoryStats) {
    println!("stories {}  lines {}", stats.stories, stats.lines);
    println!(
        "% w/out error detected per line: single-system {:.1}  dual-system {:.1}",
        100.0 * stats.pct_lines_error_free,
        100.0 * stats.pct_lines_resolved
    );
    println!(
        "% w/out error detected per story: single-system {:.1}  dual-system {:.1}",
        100.0 * stats.pct_stories_error_free,
        100.0 * stats.pct_stories_resolved
    );
    println!(
        "rejection rate {:.4} ({} of {} candidates)",
        stats.rejection_rate, stats.total_rejections, stats.total_candidates
    );
}

fn check_generate_args(args: &GenerateArgs) -> CliResult<()> {
    if args.stories == 0 {
        return Err(CliError::Config("--stories must be at least 1".into()));
    }
    let config = GenerationConfig {
        sample_budget: args.budget,
        max_lines: args.max_lines,
        ..Default::default()
    };
    config.validate().map_err(|e| CliError::Config(e.to_string()))
}

/// Shared driver for the generate subcommands. Story `i` uses the seed
/// `derive_seed(args.seed, i)` for both the engine and the template proposer.
pub fn run_generation<X, W, P>(
    args: &GenerateArgs,
    extractor: &X,
    world: impl Fn() -> W,
    template: impl Fn(u64) -> CliResult<P>,
) -> CliResult<Io>
where
    X: FactExtractor,
    X::Fact: Clone + Debug + Serialize,
    W: WorldModel<Fact = X::Fact>,
    P: ProposalSource,
{
    check_generate_args(args)?;
    let mut http = match args.proposer {
        ProposerKind::Template => None,
        ProposerKind::Http => Some(match &args.endpoint {
            Some(url) => HttpProposalSource::new(url, args.budget, timeout(args.timeout_secs)),
            None => HttpProposalSource::from_env(args.budget, timeout(args.timeout_secs))
                .map_err(|e| CliError::Config(e.to_string()))?,
        }),
    };
    let mut traces = Vec::with_capacity(args.stories);
    let mut jsonl = String::new();
    for i in 0..args.stories {
        let seed = derive_seed(args.seed, i as u64);
        let config = GenerationConfig {
            sample_budget: args.budget,
            max_lines: args.max_lines,
            seed,
            on_budget_exhausted: if args.stop_on_error {
                BudgetPolicy::MarkErrorAndStop
            } else {
                BudgetPolicy::MarkErrorAndContinue
            },
        };
        let result = match &mut http {
            Some(source) => generate_story(source, extractor, &mut world(), &config),
            None => generate_story(&mut template(seed)?, extractor, &mut world(), &config),
        };
        let trace = result.map_err(|e| match e {
            GenerationError::Config(c) => CliError::Config(c.to_string()),
            e @ GenerationError::Source { .. } => CliError::Proposal(format!("story {i}: {e}")),
        })?;
        jsonl.push_str(&to_json_line(&TraceRecord {
            story: i,
            seed,
            trace: &trace,
        }));
        traces.push(trace);
    }
    let stats = compute_stats(&traces).expect("at least one story");
    let stats_path = sidecar(&args.out, ".stats.json");
    write_output(&args.out, jsonl.as_bytes())?;
    write_output(
        &stats_path,
        to_json_pretty(&StatsFile {
            subcommand: "generate",
            stats: &stats,
        })
        .as_bytes(),
    )?;
    print_stats(&stats);
    Ok(Io {
        inputs: Vec::new(),
        outputs: vec![args.out.clone(), stats_path],
    })
}

pub fn generate(args: &GenerateArgs) -> CliResult<Io> {
    run_generation(args, &ClutrrExtractor, ClutrrWorld::new, |seed| {
        let mut c = TemplateProposerConfig::clutrr(seed);
        c.fault_rate = args.fault_rate;
        ClutrrTemplateProposer::new(c).map_err(|e| CliError::Config(e.to_string()))
    })
}

#[derive(Debug, Serialize)]
pub struct AlternativeVerdict {
    pub text: String,
    pub accepted: bool,
    pub facts: Vec<RelationAtom>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cause: Option<CauseKind>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

#[derive(Debug, Serialize)]
pub struct LineVerdict {
    pub line: usize,
    pub alternatives: Vec<AlternativeVerdict>,
    /// Alternative that continues the story (the first accepted one).
    pub continued_with: Option<usize>,
}

#[derive(Debug, Serialize)]
pub struct CheckReport {
    pub stories: Vec<Vec<LineVerdict>>,
    /// Single-system columns count lines whose first alternative is accepted;
    /// dual-system columns count lines with any accepted alternative.
    pub stats: StoryStats,
}

/// Check every alternative of every line against the story so far.
pub fn check_stories(input: &str) -> Option<CheckReport> {
    let mut stories = Vec::new();
    let mut traces = Vec::new();
    for story in parse_story_file(input) {
        let mut world = ClutrrWorld::new();
        let mut context: Vec<String> = Vec::new();
        let mut verdicts = Vec::new();
        let mut records: Vec<LineRecord<RelationAtom>> = Vec::new();
        for (line, alternatives) in story.iter().enumerate() {
            let mut out = Vec::new();
            for text in alternatives {
                let facts = ClutrrExtractor
                    .extract(text, &context)
                    .map(|x| x.facts)
                    .unwrap_or_default();
                let verdict = world.check(&facts);
                let rejection = match &verdict {
                    Verdict::Accept => None,
                    Verdict::Reject(r) => Some(r.clone()),
                };
                out.push(AlternativeVerdict {
                    text: text.clone(),
                    accepted: verdict.is_accept(),
                    facts,
                    cause: rejection.as_ref().map(|r| r.cause),
                    detail: rejection.map(|r| r.detail),
                });
            }
            let chosen = out.iter().position(|a| a.accepted);
            let rejected: Vec<RejectedCandidate> = out
                .iter()
                .take(chosen.unwrap_or(out.len()))
                .map(|a| RejectedCandidate {
                    text: a.text.clone(),
                    cause: a.cause.expect("rejected alternatives carry a cause"),
                    detail: a.detail.clone().unwrap_or_default(),
                })
                .collect();
            let record = match chosen {
                Some(k) => {
                    let alt = &out[k];
                    world.apply(&alt.facts);
                    context.push(alt.text.clone());
                    LineRecord {
                        accepted_text: Some(alt.text.clone()),
                        facts: alt.facts.clone(),
                        attempts: k + 1,
                        rejected,
                        error: false,
                        answer: None,
                    }
                }
                None => LineRecord {
                    accepted_text: None,
                    facts: Vec::new(),
                    attempts: rejected.len(),
                    rejected,
                    error: true,
                    answer: None,
                },
            };
            records.push(record);
            verdicts.push(LineVerdict {
                line: line + 1,
                alternatives: out,
                continued_with: chosen,
            });
        }
        stories.push(verdicts);
        traces.push(GenerationTrace {
            lines: records,
            terminated_by: Termination::MaxLines,
        });
    }
    let stats = compute_stats(&traces).ok()?;
    Some(CheckReport { stories, stats })
}

pub fn check(args: &CheckArgs) -> CliResult<Io> {
    let text = read_input(&args.input)?;
    let report = check_stories(&text)
        .ok_or_else(|| CliError::Config(format!("{}: no stories", args.input.display())))?;
    for (s, story) in report.stories.iter().enumerate() {
        for line in story {
            for alt in &line.alternatives {
                let verdict = if alt.accepted { "accept" } else { "reject" };
                let why = alt.detail.as_deref().map(|d| format!("  [{d}]")).unwrap_or_default();
                println!("story {} line {}: {verdict}  {}{why}", s + 1, line.line, alt.text);
            }
        }
    }
    print_stats(&report.stats);
    let mut io = Io {
        inputs: vec![args.input.clone()],
        outputs: Vec::new(),
    };
    if let Some(out) = &args.out {
        write_output(out, to_json_pretty(&report).as_bytes())?;
        io.outputs.push(out.clone());
    }
    Ok(io)
}
