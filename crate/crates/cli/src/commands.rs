use std::path::{Path, PathBuf};

use ndnf_core::env::{reference_encoder, DoorCorridor, EnvSpec};
use ndnf_core::evaluation::{
    blackjack_grid_observations, blackjack_policy_grid, evaluate, grid_csv, oracle_targets, policy_divergence,
    reference_blackjack_policy, vocabulary, ActionSelection, AspPolicy, EvalReport, Policy, ProblogPolicy,
    QTablePolicy, REPORT_CSV_HEADER,
};
use ndnf_core::logic::{
    equivalence_suite, logic_to_neural, parse_asp, parse_problog, print_asp, verify_equivalence, AspProgram,
    ProblogProgram,
};
use ndnf_core::neural::{Actor, Checkpoint, DcEncoder, NdnfMtActor};
use ndnf_core::post_training::{
    context_observations, definition_observations, run_pipeline, PolicyKind,
};
use ndnf_core::training::{distil, metrics_csv, q_learning, train_ppo, PpoAgent, QTable};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::artifact::{read, read_json, Artifact, CONFIG_FILE};
use crate::config::RunConfig;
use crate::error::CliError;

pub const ACTOR_FILE: &str = "actor.json";
pub const QTABLE_FILE: &str = "qtable.json";
pub const EVAL_FILE: &str = "eval.json";

/// What a run directory can be evaluated as.
pub enum RunPolicy {
    Actor(Actor),
    QTable(QTablePolicy),
    Asp(AspPolicy),
    Problog(ProblogPolicy),
}

impl RunPolicy {
    pub fn as_policy(&self) -> &dyn Policy {
        match self {
            RunPolicy::Actor(a) => a,
            RunPolicy::QTable(q) => q,
            RunPolicy::Asp(p) => p,
            RunPolicy::Problog(p) => p,
        }
    }

    /// Selections reported by default: argmax, plus sampling for stochastic
    /// policies.
    fn default_selections(&self) -> Vec<ActionSelection> {
        match self {
            RunPolicy::Actor(_) => vec![ActionSelection::Argmax, ActionSelection::Sample],
            RunPolicy::Problog(_) => vec![ActionSelection::Argmax, ActionSelection::Sample],
            _ => vec![ActionSelection::Argmax],
        }
    }
}

fn load_actor(path: &Path) -> Result<Actor, CliError> {
    Ok(Checkpoint::load(path)?.to_actor()?)
}

fn ndnf_actor(path: &Path) -> Result<NdnfMtActor, CliError> {
    match load_actor(path)? {
        Actor::NdnfMt(a) => Ok(a),
        Actor::Mlp(_) => Err(CliError::Config(format!("{} holds an MLP actor, not a neural DNF-MT one", path.display()))),
    }
}

fn encoder_of(path: &Path) -> Result<Option<DcEncoder>, CliError> {
    if !path.exists() {
        return Ok(None);
    }
    Ok(match load_actor(path)? {
        Actor::NdnfMt(a) => a.encoder,
        Actor::Mlp(_) => None,
    })
}

/// Loads the policy stored in a run directory: an extracted program if
/// there is one, otherwise the actor, otherwise the Q-table.
pub fn load_run_policy(dir: &Path) -> Result<(RunConfig, RunPolicy), CliError> {
    let cfg: RunConfig = read_json(&dir.join(CONFIG_FILE))?;
    let vocab = vocabulary(cfg.env);
    let actor_path = dir.join(ACTOR_FILE);
    let policy = if dir.join("program.lp").exists() {
        let program = parse_asp(&read(&dir.join("program.lp"))?)?;
        RunPolicy::Asp(AspPolicy { program, vocab, encoder: encoder_of(&actor_path)? })
    } else if dir.join("program.pl").exists() {
        let program = parse_problog(&read(&dir.join("program.pl"))?)?;
        RunPolicy::Problog(ProblogPolicy { program, vocab, encoder: encoder_of(&actor_path)? })
    } else if actor_path.exists() {
        RunPolicy::Actor(load_actor(&actor_path)?)
    } else if dir.join(QTABLE_FILE).exists() {
        let table: QTable = read_json(&dir.join(QTABLE_FILE))?;
        RunPolicy::QTable(QTablePolicy::new(table, 0.0))
    } else {
        return Err(CliError::Config(format!("{} holds no actor, program or Q-table", dir.display())));
    };
    Ok((cfg, policy))
}

/// Evaluates `policy`, attaching the divergence from the reference policy
/// on Blackjack.
pub fn evaluate_policy(
    policy: &RunPolicy,
    env: EnvSpec,
    selection: ActionSelection,
    episodes: usize,
    seed: u64,
) -> Result<EvalReport, CliError> {
    let p = policy.as_policy();
    let mut report = evaluate(p, env, episodes, selection, seed)?;
    if env == EnvSpec::Blackjack {
        let reference = reference_blackjack_policy();
        report.policy_divergence = Some(policy_divergence(p, &reference, &blackjack_grid_observations())?);
    }
    Ok(report)
}

pub fn reports_csv(reports: &[EvalReport]) -> String {
    let mut out = format!("{REPORT_CSV_HEADER}\n");
    for r in reports {
        out.push_str(&r.csv_row());
        out.push('\n');
    }
    out
}

/// Default evaluation of a finished run, written as `eval.json` / `eval.csv`
/// (plus a policy grid on Blackjack).
fn record_eval(art: &Artifact, cfg: &RunConfig, policy: &RunPolicy) -> Result<Vec<EvalReport>, CliError> {
    let reports = policy
        .default_selections()
        .into_iter()
        .map(|s| evaluate_policy(policy, cfg.env, s, cfg.eval_episodes, cfg.eval_seed))
        .collect::<Result<Vec<_>, _>>()?;
    art.write_json(EVAL_FILE, &reports)?;
    art.write("eval.csv", reports_csv(&reports))?;
    if cfg.env == EnvSpec::Blackjack {
        art.write("policy_grid.csv", grid_csv(&blackjack_policy_grid(policy.as_policy())?))?;
    }
    Ok(reports)
}

fn summarise(art: &Artifact, reports: &[EvalReport]) {
    for r in reports {
        eprintln!("{} {}: {:.3} ± {:.3}", r.env, r.selection, r.mean_return, r.std_error);
    }
    println!("{}", art.dir.display());
}

fn load_config(path: &Path) -> Result<(String, RunConfig), CliError> {
    let text = read(path)?;
    let cfg = RunConfig::from_toml(&text)?;
    Ok((text, cfg))
}

fn config_json(cfg: &RunConfig) -> String {
    serde_json::to_string(cfg).expect("configs serialise")
}

fn new_run(command: &str, cfg: &RunConfig, extra: &[&[u8]], force: bool) -> Result<Artifact, CliError> {
    let json = config_json(cfg);
    let mut identity: Vec<&[u8]> = vec![command.as_bytes(), json.as_bytes()];
    identity.extend_from_slice(extra);
    let art = Artifact::create(command, &cfg.env.to_string(), cfg.seed, &identity, force)?;
    art.write_json(CONFIG_FILE, cfg)?;
    Ok(art)
}

pub fn train(config: &Path, force: bool) -> Result<PathBuf, CliError> {
    let (text, cfg) = load_config(config)?;
    let art = new_run("train", &cfg, &[], force)?;
    art.write("config.toml", &text)?;
    let out = train_ppo(cfg.env, &cfg.ppo, &cfg.model, cfg.seed)?;
    Checkpoint::from_actor(&out.agent.actor, cfg.seed).save(&art.path(ACTOR_FILE))?;
    Checkpoint::from_critic(&out.agent.critic, cfg.seed).save(&art.path("critic.json"))?;
    art.write("metrics.csv", metrics_csv(&out.metrics))?;
    let reports = record_eval(&art, &cfg, &RunPolicy::Actor(out.agent.actor))?;
    summarise(&art, &reports);
    Ok(art.dir)
}

pub fn qlearn(config: &Path, force: bool) -> Result<PathBuf, CliError> {
    let (text, cfg) = load_config(config)?;
    let art = new_run("qlearn", &cfg, &[], force)?;
    art.write("config.toml", &text)?;
    let table = q_learning(cfg.env, &cfg.qlearning, cfg.seed)?;
    art.write_json(QTABLE_FILE, &table)?;
    let reports = record_eval(&art, &cfg, &RunPolicy::QTable(QTablePolicy::new(table, 0.0)))?;
    summarise(&art, &reports);
    Ok(art.dir)
}

/// Observations a distilled student is fitted on.
fn distillation_set(env: EnvSpec) -> Result<Vec<Vec<f64>>, CliError> {
    match env {
        EnvSpec::DoorCorridor(v) => Ok(DoorCorridor::reachable_observations(v)),
        _ => Ok(context_observations(env, None)?),
    }
}

pub fn distil_cmd(oracle: &Path, config: &Path, force: bool) -> Result<PathBuf, CliError> {
    let (text, cfg) = load_config(config)?;
    let (oracle_cfg, mut oracle_policy) = load_run_policy(oracle)?;
    if oracle_cfg.env != cfg.env {
        return Err(CliError::Config(format!("oracle was trained on {}, the config asks for {}", oracle_cfg.env, cfg.env)));
    }
    let oracle_bytes = match &oracle_policy {
        RunPolicy::QTable(_) => read(&oracle.join(QTABLE_FILE))?,
        _ => read(&oracle.join(ACTOR_FILE))?,
    };
    let art = new_run("distil", &cfg, &[oracle_bytes.as_bytes()], force)?;
    art.write("config.toml", &text)?;
    art.write("oracle.txt", format!("{}\n", oracle.display()))?;

    let obs = distillation_set(cfg.env)?;
    if let RunPolicy::QTable(q) = &mut oracle_policy {
        q.epsilon = cfg.oracle_epsilon;
    }
    let targets = oracle_targets(oracle_policy.as_policy(), &obs)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut model = cfg.model.clone();
    model.actor = ndnf_core::training::ActorKind::NdnfMt;
    let Actor::NdnfMt(student) = PpoAgent::new(cfg.env, &model, cfg.distillation.delta.initial_delta, &mut rng).actor
    else {
        unreachable!("a neural DNF-MT actor was requested");
    };
    let out = distil(student, &obs, &targets, &cfg.distillation, cfg.seed)?;
    let actor = Actor::NdnfMt(out.student);
    Checkpoint::from_actor(&actor, cfg.seed).save(&art.path(ACTOR_FILE))?;
    let mut losses = String::from("epoch,loss\n");
    for (i, l) in out.epoch_losses.iter().enumerate() {
        losses.push_str(&format!("{i},{l:?}\n"));
    }
    art.write("losses.csv", losses)?;
    let reports = record_eval(&art, &cfg, &RunPolicy::Actor(actor))?;
    summarise(&art, &reports);
    Ok(art.dir)
}

/// Runs the post-training pipeline on a run's actor. `context` replaces the
/// environment's default observation set with a JSON list of observations.
pub fn extract(run: &Path, kind: Option<PolicyKind>, context: Option<&Path>, force: bool) -> Result<PathBuf, CliError> {
    let mut cfg: RunConfig = read_json(&run.join(CONFIG_FILE))?;
    if let Some(k) = kind {
        cfg.post_training.policy_kind = k;
    }
    let actor_text = read(&run.join(ACTOR_FILE))?;
    let actor = ndnf_actor(&run.join(ACTOR_FILE))?;
    let (ctx, ctx_text) = match context {
        Some(path) => (read_json::<Vec<Vec<f64>>>(path)?, read(path)?),
        None => (context_observations(cfg.env, Some(&actor))?, String::new()),
    };
    let art = new_run("extract", &cfg, &[actor_text.as_bytes(), ctx_text.as_bytes()], force)?;
    art.write("source.txt", format!("{}\n", run.display()))?;

    let defs = definition_observations(cfg.env);
    let vocab = vocabulary(cfg.env);
    let out = run_pipeline(&actor, &ctx, &vocab, &cfg.post_training, defs.as_deref())?;
    art.write_json("report.json", &out.report)?;
    art.write("stages.csv", out.report.stages_csv())?;
    Checkpoint::from_actor(&Actor::NdnfMt(out.model_after_step3.clone()), cfg.seed).save(&art.path(ACTOR_FILE))?;

    let Some(program) = &out.program else {
        let diagnostic = out.report.failure.as_ref().map_or("no program was produced".to_string(), |f| f.diagnostic.clone());
        return Err(CliError::Extraction(format!("{diagnostic} (report in {})", art.dir.display())));
    };
    art.write(&format!("program.{}", program.extension()), program.text(None))?;
    let rules: Vec<_> = out.report.definitions.iter().filter_map(|d| d.rule()).collect();
    if !rules.is_empty() {
        art.write("definitions.lp", print_asp(&AspProgram::new(rules)))?;
    }
    if out.report.tolerance_exceeded {
        eprintln!("warning: thresholding moved action probabilities by more than tau_prune = {}", cfg.post_training.tau_prune);
    }
    let (_, policy) = load_run_policy(&art.dir)?;
    let reports = record_eval(&art, &cfg, &policy)?;
    summarise(&art, &reports);
    if let Some(n) = out.report.equivalence_counterexamples.filter(|&n| n > 0) {
        return Err(CliError::Counterexample(format!("{n} counterexamples between the model and its program")));
    }
    Ok(art.dir)
}

/// Where an intervened model takes its predicate encoder from.
pub enum EncoderSource<'a> {
    None,
    Reference,
    Run(&'a Path),
}

#[derive(Serialize)]
struct InterventionRecord {
    env: String,
    inputs_checked: usize,
    counterexamples: usize,
    remark_violations: usize,
}

pub fn intervene(
    program_path: &Path,
    env: EnvSpec,
    encoder: EncoderSource<'_>,
    episodes: usize,
    seed: u64,
    force: bool,
) -> Result<PathBuf, CliError> {
    let text = read(program_path)?;
    let program = parse_asp(&text)?;
    let vocab = vocabulary(env);
    let encoder = match (encoder, env) {
        (EncoderSource::Reference, EnvSpec::DoorCorridor(_)) => Some(reference_encoder()),
        (EncoderSource::Run(dir), EnvSpec::DoorCorridor(_)) => Some(
            encoder_of(&dir.join(ACTOR_FILE))?
                .ok_or_else(|| CliError::Config(format!("{} has no predicate encoder", dir.display())))?,
        ),
        (EncoderSource::None, EnvSpec::DoorCorridor(_)) => {
            return Err(CliError::Config("Door Corridor programs need --base or --reference-encoder".into()))
        }
        _ => None,
    }
    .map(|mut e| {
        e.discretise();
        e
    });
    let t = logic_to_neural(&program, &vocab)?;
    let actor = NdnfMtActor { encoder, model: t.model };

    let inputs: Vec<Vec<f64>> = match (env, &actor.encoder) {
        (EnvSpec::DoorCorridor(v), Some(_)) => {
            let mut xs = DoorCorridor::reachable_observations(v)
                .iter()
                .map(|o| actor.predicates(o))
                .collect::<Result<Vec<_>, _>>()?;
            xs.sort_by(|a, b| a.partial_cmp(b).expect("predicates are finite"));
            xs.dedup();
            xs
        }
        _ => context_observations(env, None)?,
    };
    let eq = verify_equivalence(&actor.model, &program, &vocab, &t.conj_atoms, &inputs)?;

    let mut cfg = RunConfig::preset(env);
    cfg.seed = seed;
    cfg.eval_seed = seed;
    cfg.eval_episodes = episodes;
    let enc_json = serde_json::to_string(&actor.encoder).expect("encoders serialise");
    let art = new_run("intervene", &cfg, &[text.as_bytes(), enc_json.as_bytes()], force)?;
    art.write("program.lp", print_asp(&program))?;
    let actor = Actor::NdnfMt(actor);
    Checkpoint::from_actor(&actor, seed).save(&art.path(ACTOR_FILE))?;
    art.write_json(
        "equivalence.json",
        &InterventionRecord {
            env: env.to_string(),
            inputs_checked: eq.inputs_checked,
            counterexamples: eq.counterexamples.len(),
            remark_violations: eq.remark_violations.len(),
        },
    )?;
    if !eq.passed() {
        return Err(CliError::Counterexample(format!(
            "{} counterexamples and {} remark violations over {} inputs",
            eq.counterexamples.len(),
            eq.remark_violations.len(),
            eq.inputs_checked
        )));
    }
    let reports = vec![evaluate_policy(&RunPolicy::Actor(actor), env, ActionSelection::Argmax, episodes, seed)?];
    art.write_json(EVAL_FILE, &reports)?;
    art.write("eval.csv", reports_csv(&reports))?;
    summarise(&art, &reports);
    Ok(art.dir)
}

/// What `eval` reads its policy from.
pub enum EvalTarget<'a> {
    Run(&'a Path),
    Program { path: &'a Path, env: EnvSpec, encoder_from: Option<&'a Path> },
}

pub fn eval(target: EvalTarget<'_>, selection: ActionSelection, episodes: usize, seed: u64) -> Result<EvalReport, CliError> {
    let (env, policy) = match target {
        EvalTarget::Run(dir) => {
            let (cfg, p) = load_run_policy(dir)?;
            (cfg.env, p)
        }
        EvalTarget::Program { path, env, encoder_from } => {
            let encoder = match encoder_from {
                Some(dir) => encoder_of(&dir.join(ACTOR_FILE))?,
                None if matches!(env, EnvSpec::DoorCorridor(_)) => Some(reference_encoder()),
                None => None,
            };
            let text = read(path)?;
            let vocab = vocabulary(env);
            let p = if path.extension().is_some_and(|e| e == "pl") {
                let program: ProblogProgram = parse_problog(&text)?;
                RunPolicy::Problog(ProblogPolicy { program, vocab, encoder })
            } else {
                RunPolicy::Asp(AspPolicy { program: parse_asp(&text)?, vocab, encoder })
            };
            (env, p)
        }
    };
    evaluate_policy(&policy, env, selection, episodes, seed)
}

/// One row per (run, selection) from each run's recorded evaluation.
pub fn compare(runs: &[PathBuf]) -> Result<String, CliError> {
    let mut out = String::from("run,env,selection,episodes,return,win_rate,truncations,policy_divergence\n");
    for dir in runs {
        let reports: Vec<EvalReport> = read_json(&dir.join(EVAL_FILE))?;
        let name = dir.file_name().map_or_else(|| dir.display().to_string(), |n| n.to_string_lossy().into_owned());
        for r in reports {
            out.push_str(&format!(
                "{name},{},{},{},{:.3} ± {:.3},{:.4},{},{}\n",
                r.env,
                r.selection,
                r.episodes,
                r.mean_return,
                r.std_error,
                r.win_rate,
                r.truncations,
                r.policy_divergence.map(|d| format!("{d:.4}")).unwrap_or_default()
            ));
        }
    }
    Ok(out)
}

pub fn verify(models: usize, max_inputs: usize, seed: u64) -> Result<String, CliError> {
    let report = equivalence_suite(models, max_inputs, seed)?;
    let summary = serde_json::json!({
        "models": report.models,
        "inputs_checked": report.inputs_checked,
        "counterexamples": report.counterexamples.len(),
        "remark_violations": report.remark_violations.len(),
        "first_counterexample": report.counterexamples.first(),
    });
    let text = serde_json::to_string_pretty(&summary).expect("summaries serialise");
    if !report.passed() {
        println!("{text}");
        return Err(CliError::Counterexample(format!(
            "{} counterexamples and {} remark violations",
            report.counterexamples.len(),
            report.remark_violations.len()
        )));
    }
    Ok(text)
}
