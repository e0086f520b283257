use dualsys_core::babi::{answer_stories, parse_babi, write_babi, BabiExtractor, BabiWorld};
use dualsys_core::proposers::{simulate_stories, BabiTemplateProposer, SimulatorConfig, TemplateProposerConfig};

use crate::clutrr::run_generation;
use crate::{read_input, to_json_pretty, write_output, CliError, CliResult, GenerateArgs, Io, QaArgs, SimulateArgs};

pub fn generate(args: &GenerateArgs) -> CliResult<Io> {
    run_generation(args, &BabiExtractor, BabiWorld::new, |seed| {
        let mut c = TemplateProposerConfig::babi(seed);
        c.fault_rate = args.fault_rate;
        c.question_prob = args.question_prob;
        BabiTemplateProposer::new(c).map_err(|e| CliError::Config(e.to_string()))
    })
}

pub fn qa(args: &QaArgs) -> CliResult<Io> {
    let text = read_input(&args.input)?;
    let stories = parse_babi(&text).map_err(|e| CliError::Config(format!("{}: {e}", args.input.display())))?;
    let report = answer_stories(&stories);
    for r in &report.records {
        println!(
            "story {} line {}: {} -> {} (gold {}) {}",
            r.story + 1,
            r.line,
            r.question,
            r.predicted,
            r.gold,
            if r.correct { "ok" } else { "WRONG" }
        );
    }
    println!("accuracy {:.4} ({}/{})", report.accuracy, report.correct, report.total);
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

pub fn simulate(args: &SimulateArgs) -> CliResult<Io> {
    let config = SimulatorConfig {
        questions_per_story: args.questions,
        seed: args.seed,
        ..Default::default()
    };
    let stories = simulate_stories(&config, args.stories);
    write_output(&args.out, write_babi(&stories).as_bytes())?;
    println!("wrote {} stories to {}", stories.len(), args.out.display());
    Ok(Io {
        inputs: Vec::new(),
        outputs: vec![args.out.clone()],
    })
}
