use dualsys_core::gscan::{
    filter_search, generate_scenes, load_scenes, ActionProposalSource, LowAction, NoisyProposer, NoisyTarget,
    OracleProposer, OracleTarget, ScriptedActionProposer, SceneGenConfig, TargetPredictor,
};
use dualsys_core::seed::derive_seed;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::{read_input, sidecar, to_json_line, to_json_pretty, write_output, CliError, CliResult, FilterArgs, Io, SceneArgs};

pub fn scenes(args: &SceneArgs) -> CliResult<Io> {
    if args.grid_size < 2 {
        return Err(CliError::Config("--grid-size must be at least 2".into()));
    }
    let scenes = generate_scenes(&SceneGenConfig {
        count: args.count,
        size: args.grid_size,
        seed: args.seed,
        ..Default::default()
    });
    write_output(&args.out, to_json_pretty(&scenes).as_bytes())?;
    println!("wrote {} scenes to {}", scenes.len(), args.out.display());
    Ok(Io {
        inputs: Vec::new(),
        outputs: vec![args.out.clone()],
    })
}

enum ProposerSpec {
    Oracle,
    Noisy(f64),
    Scripted(Vec<Vec<Vec<LowAction>>>),
}

fn probability(text: &str, flag: &str) -> CliResult<f64> {
    text.parse::<f64>()
        .ok()
        .filter(|p| (0.0..=1.0).contains(p))
        .ok_or_else(|| CliError::Config(format!("{flag}: {text:?} is not a probability")))
}

fn proposer_spec(text: &str, io: &mut Io) -> CliResult<ProposerSpec> {
    match text.split_once(':') {
        None if text == "oracle" => Ok(ProposerSpec::Oracle),
        Some(("noisy", eps)) => Ok(ProposerSpec::Noisy(probability(eps, "--proposer")?)),
        Some(("scripted", path)) => {
            let path = std::path::PathBuf::from(path);
            let json = read_input(&path)?;
            io.inputs.push(path);
            serde_json::from_str(&json)
                .map(ProposerSpec::Scripted)
                .map_err(|e| CliError::Config(format!("scripted candidates: {e}")))
        }
        _ => Err(CliError::Config(format!(
            "--proposer must be oracle, noisy:EPS or scripted:PATH, got {text:?}"
        ))),
    }
}

fn target_spec(text: &str) -> CliResult<Option<f64>> {
    match text.split_once(':') {
        None if text == "oracle" => Ok(None),
        Some(("noisy", p)) => Ok(Some(probability(p, "--target")?)),
        _ => Err(CliError::Config(format!("--target must be oracle or noisy:P, got {text:?}"))),
    }
}

#[derive(Serialize)]
struct Episode {
    scene: usize,
    target: dualsys_core::gscan::Cell,
    unfiltered: Vec<LowAction>,
    filtered: Vec<LowAction>,
    unfiltered_exact: bool,
    filtered_exact: bool,
    evaluations: usize,
    fallback: bool,
}

#[derive(Serialize)]
struct Table {
    episodes: usize,
    budget: usize,
    greedy_first: bool,
    /// Exact match of the proposer's first candidate (single-system).
    unfiltered_exact_match: f64,
    /// Exact match after filtering (dual-system).
    filtered_exact_match: f64,
    max_evaluations: usize,
    fallbacks: usize,
}

pub fn filter(args: &FilterArgs) -> CliResult<Io> {
    let mut io = Io {
        inputs: vec![args.scenes.clone()],
        outputs: Vec::new(),
    };
    if args.budget == 0 {
        return Err(CliError::Config("--budget must be at least 1".into()));
    }
    let spec = proposer_spec(&args.proposer, &mut io)?;
    let target_noise = target_spec(&args.target)?;
    let scenes = load_scenes(&read_input(&args.scenes)?)
        .map_err(|e| CliError::Config(format!("{}: {e}", args.scenes.display())))?;
    if let ProposerSpec::Scripted(lists) = &spec {
        if lists.len() != scenes.len() {
            return Err(CliError::Config(format!(
                "scripted candidates cover {} scenes, the scene file has {}",
                lists.len(),
                scenes.len()
            )));
        }
    }

    let mut jsonl = String::new();
    let (mut raw, mut filtered, mut max_eval, mut fallbacks) = (0usize, 0usize, 0usize, 0usize);
    for (i, scene) in scenes.iter().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(args.seed, i as u64));
        let target = match target_noise {
            None => OracleTarget.predict(scene, &mut rng),
            Some(p) => NoisyTarget { p }.predict(scene, &mut rng),
        };
        let mut proposer: Box<dyn ActionProposalSource> = match &spec {
            ProposerSpec::Oracle => Box::new(OracleProposer),
            ProposerSpec::Noisy(epsilon) => Box::new(NoisyProposer { epsilon: *epsilon }),
            ProposerSpec::Scripted(lists) => Box::new(ScriptedActionProposer::new(lists[i].clone())),
        };
        let out = filter_search(
            proposer.as_mut(),
            scene,
            &scene.world,
            target,
            args.budget,
            !args.no_greedy_first,
            &mut rng,
        )
        .map_err(|e| CliError::Proposal(format!("scene {i}: {e}")))?;
        let episode = Episode {
            scene: i,
            target,
            unfiltered_exact: out.first == scene.gold_actions,
            filtered_exact: out.actions == scene.gold_actions,
            unfiltered: out.first,
            filtered: out.actions,
            evaluations: out.evaluations,
            fallback: out.fallback,
        };
        raw += usize::from(episode.unfiltered_exact);
        filtered += usize::from(episode.filtered_exact);
        max_eval = max_eval.max(episode.evaluations);
        fallbacks += usize::from(episode.fallback);
        jsonl.push_str(&to_json_line(&episode));
    }
    let n = scenes.len();
    let rate = |k: usize| if n == 0 { 0.0 } else { k as f64 / n as f64 };
    let table = Table {
        episodes: n,
        budget: args.budget,
        greedy_first: !args.no_greedy_first,
        unfiltered_exact_match: rate(raw),
        filtered_exact_match: rate(filtered),
        max_evaluations: max_eval,
        fallbacks,
    };
    let table_path = sidecar(&args.out, ".table.json");
    write_output(&args.out, jsonl.as_bytes())?;
    write_output(&table_path, to_json_pretty(&table).as_bytes())?;
    println!("episodes {n}  budget {}", args.budget);
    println!("exact match: single-system {:.4}  dual-system {:.4}", table.unfiltered_exact_match, table.filtered_exact_match);
    println!("max evaluations {max_eval}  fallbacks {fallbacks}");
    io.outputs = vec![args.out.clone(), table_path];
    Ok(io)
}
