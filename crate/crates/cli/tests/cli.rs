use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use ndnf_core::autodiff::Tensor;
use ndnf_core::env::EnvSpec;
use ndnf_core::evaluation::EvalReport;
use ndnf_core::logic::all_sign_vectors;
use ndnf_core::neural::{Actor, BiasMode, Checkpoint, NdnfMtActor, NeuralDnfMt, NodeKind, SemiSymbolicLayer};
use tempfile::TempDir;

struct Sandbox {
    dir: TempDir,
}

impl Sandbox {
    fn new() -> Self {
        Self { dir: tempfile::tempdir().unwrap() }
    }

    fn file(&self, name: &str, text: &str) -> PathBuf {
        let p = self.dir.path().join(name);
        fs::write(&p, text).unwrap();
        p
    }

    fn run(&self, args: &[&str]) -> Output {
        Command::new(env!("CARGO_BIN_EXE_ndnf"))
            .args(args)
            .env("NDNF_ARTIFACT_DIR", self.dir.path().join("artifacts"))
            .output()
            .unwrap()
    }
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn stdout_path(o: &Output) -> PathBuf {
    PathBuf::from(String::from_utf8_lossy(&o.stdout).trim())
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn eval_reports(dir: &Path) -> Vec<EvalReport> {
    serde_json::from_str(&fs::read_to_string(dir.join("eval.json")).unwrap()).unwrap()
}

const SC_CONFIG: &str = "env = \"sc-mdp\"\nseed = 0\neval_episodes = 200\n";

#[test]
fn train_is_reproducible_and_refuses_overwrite() {
    let sb = Sandbox::new();
    let cfg = sb.file("sc.toml", SC_CONFIG);
    let cfg = cfg.to_str().unwrap();
    let first = sb.run(&["train", "--config", cfg]);
    assert_eq!(code(&first), 0, "{}", stderr(&first));
    let dir = stdout_path(&first);
    let metrics = fs::read_to_string(dir.join("metrics.csv")).unwrap();
    assert_eq!(eval_reports(&dir)[0].mean_return, -3.0);

    let again = sb.run(&["train", "--config", cfg]);
    assert_eq!(code(&again), 2);
    assert!(stderr(&again).contains("--force"));

    let forced = sb.run(&["train", "--config", cfg, "--force"]);
    assert_eq!(code(&forced), 0);
    assert_eq!(stdout_path(&forced), dir);
    assert_eq!(fs::read_to_string(dir.join("metrics.csv")).unwrap(), metrics);

    let ex = sb.run(&["extract", "--run", dir.to_str().unwrap()]);
    assert_eq!(code(&ex), 0, "{}", stderr(&ex));
    let ex_dir = stdout_path(&ex);
    let program = fs::read_to_string(ex_dir.join("program.lp")).unwrap();
    assert!(program.contains("action(left)") && program.contains("action(right)"), "{program}");
    assert_eq!(eval_reports(&ex_dir)[0].mean_return, -3.0);

    let cmp = sb.run(&["compare", dir.to_str().unwrap(), ex_dir.to_str().unwrap()]);
    assert_eq!(code(&cmp), 0);
    assert_eq!(String::from_utf8_lossy(&cmp.stdout).lines().count(), 4);
}

#[test]
fn config_errors_exit_with_two() {
    let sb = Sandbox::new();
    let bad = sb.file("bad.toml", "env = \"sc-mdp\"\nnum_envs = 3\nnum_steps = 5\nnum_minibatches = 4\n");
    let o = sb.run(&["train", "--config", bad.to_str().unwrap()]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("divisible"));

    let unknown = sb.file("unknown.toml", "env = \"sc-mdp\"\nclip_coeff = 0.2\n");
    let o = sb.run(&["qlearn", "--config", unknown.to_str().unwrap()]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("clip_coeff"));
}

fn failure_case_run(sb: &Sandbox) -> PathBuf {
    let mut wc = Tensor::zeros(&[12, 16]);
    wc.set2(0, 7, 3.03);
    wc.set2(7, 13, 0.56);
    wc.set2(9, 2, -1.56);
    wc.set2(11, 9, -1.05);
    let mut wd = Tensor::zeros(&[4, 12]);
    wd.set2(1, 0, 4.58);
    wd.set2(2, 9, -3.48);
    wd.set2(3, 7, 1.29);
    wd.set2(3, 9, 0.76);
    wd.set2(3, 11, 4.33);
    let model = NeuralDnfMt::from_layers(
        SemiSymbolicLayer::from_weights(NodeKind::Conjunction, wc, 1.0, BiasMode::MaxBias).unwrap(),
        SemiSymbolicLayer::from_weights(NodeKind::Disjunction, wd, 1.0, BiasMode::MaxBias).unwrap(),
    )
    .unwrap();
    let dir = sb.dir.path().join("failure-run");
    fs::create_dir_all(&dir).unwrap();
    Checkpoint::from_actor(&Actor::NdnfMt(NdnfMtActor { encoder: None, model }), 0).save(&dir.join("actor.json")).unwrap();
    let o = sb.run(&["qlearn", "--config", sb.file("base.toml", "env = \"sc-mdp\"\nepisodes = 1\neval_episodes = 1\n").to_str().unwrap()]);
    let mut cfg: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(stdout_path(&o).join("config.json")).unwrap()).unwrap();
    cfg["env"] = serde_json::Value::String(EnvSpec::DoorCorridor(ndnf_core::env::DcVariant::Dc).to_string());
    fs::write(dir.join("config.json"), cfg.to_string()).unwrap();
    dir
}

#[test]
fn thresholding_failure_exits_with_three() {
    let sb = Sandbox::new();
    let run = failure_case_run(&sb);
    let ctx: Vec<Vec<f64>> = all_sign_vectors(4)
        .into_iter()
        .map(|v| {
            let mut x = vec![-1.0; 16];
            for (k, i) in [2, 7, 9, 13].into_iter().enumerate() {
                x[i] = v[k];
            }
            x
        })
        .collect();
    let ctx_path = sb.file("ctx.json", &serde_json::to_string(&ctx).unwrap());
    let o = sb.run(&["extract", "--run", run.to_str().unwrap(), "--context", ctx_path.to_str().unwrap()]);
    assert_eq!(code(&o), 3, "{}", stderr(&o));
    assert!(stderr(&o).contains("logical mutual exclusivity"), "{}", stderr(&o));
}

#[test]
fn edited_programs_port_back_to_door_corridor_variants() {
    let sb = Sandbox::new();
    let dct = sb.file(
        "dct.lp",
        "action(turn_right) :- a_5, a_8.\naction(forward) :- not a_1, a_2.\naction(toggle) :- a_3.\naction(toggle) :- a_1, not a_3, a_12.\n",
    );
    let o = sb.run(&["intervene", "--program", dct.to_str().unwrap(), "--env", "dc-t", "--reference-encoder", "--episodes", "3"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert_eq!(eval_reports(&stdout_path(&o))[0].mean_return, -8.0);

    let dcot = sb.file(
        "dcot.lp",
        "action(turn_right) :- a_5, a_8, a_11.\naction(forward) :- a_2.\naction(toggle) :- a_3.\naction(toggle) :- not a_2, not a_3, not a_11.\n",
    );
    let o = sb.run(&["intervene", "--program", dcot.to_str().unwrap(), "--env", "dc-ot", "--reference-encoder", "--episodes", "3"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert_eq!(eval_reports(&stdout_path(&o))[0].mean_return, -9.0);

    let bad = sb.file("bad.lp", "action(toggle) :- .\n");
    let o = sb.run(&["intervene", "--program", bad.to_str().unwrap(), "--env", "dc-t", "--reference-encoder"]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("1:"), "{}", stderr(&o));
}

#[test]
fn eval_program_file_and_verify() {
    let sb = Sandbox::new();
    let p = sb.file("l1.lp", "action(left) :- in_s_1.\naction(right) :- not in_s_1.\n");
    let out = sb.dir.path().join("r.csv");
    let o = sb.run(&["eval", "--program", p.to_str().unwrap(), "--env", "sc-mdp", "--episodes", "50", "--output", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let r: EvalReport = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(r.mean_return, -3.0);
    assert!(fs::read_to_string(out).unwrap().starts_with("env,selection"));

    let o = sb.run(&["verify", "--models", "20", "--max-inputs", "6"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["counterexamples"], 0);
}

#[test]
fn distil_checks_the_oracle_environment() {
    let sb = Sandbox::new();
    let q = sb.run(&["qlearn", "--config", sb.file("q.toml", "env = \"sc-mdp\"\neval_episodes = 10\n").to_str().unwrap()]);
    assert_eq!(code(&q), 0, "{}", stderr(&q));
    let oracle = stdout_path(&q);
    let other = sb.file("lc.toml", "env = \"lc5-mdp\"\n");
    let o = sb.run(&["distil", "--oracle", oracle.to_str().unwrap(), "--config", other.to_str().unwrap()]);
    assert_eq!(code(&o), 2);

    let cfg = sb.file("d.toml", "env = \"sc-mdp\"\nepochs = 300\nlearning_rate = 0.01\neval_episodes = 10\n");
    let o = sb.run(&["distil", "--oracle", oracle.to_str().unwrap(), "--config", cfg.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert_eq!(eval_reports(&stdout_path(&o))[0].mean_return, -3.0);
}
