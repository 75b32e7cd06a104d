//! End-to-end acceptance checks. Each criterion prints one PASS/FAIL line.
//! Failures are reported but only fail the process when
//! `ACCEPTANCE_STRICT` is set.
//!
//! Pass criterion numbers as arguments to run a subset, e.g.
//! `cargo test --test acceptance -- 3 8`.

use std::process::ExitCode;
use std::time::Instant;

use ndnf_core::autodiff::{Tape, Tensor};
use ndnf_core::env::{
    reference_encoder, taxi_decode, taxi_encode, DcVariant, EnvSpec, ObsMode, SwitcherooLayout, TAXI_DEPOTS, TAXI_STATES,
};
use ndnf_core::evaluation::{
    blackjack_grid_observations, evaluate, oracle_targets, policy_divergence, reference_blackjack_policy, vocabulary,
    ActionSelection, AspPolicy, Policy, ProblogPolicy, QTablePolicy,
};
use ndnf_core::logic::{all_sign_vectors, equivalence_suite, logic_to_neural, parse_asp};
use ndnf_core::neural::{
    Activation, Actor, BiasMode, DeltaScheduler, NdnfMtActor, NeuralDnfMt, NodeKind, SemiSymbolicLayer,
};
use ndnf_core::post_training::{
    context_observations, definition_observations, prune, run_pipeline, ExtractedProgram, PolicyKind, PostTrainConfig,
    StageReport,
};
use ndnf_core::training::{
    distil, q_learning, train_ppo, ActorKind, DistillationConfig, ModelConfig, PpoAgent, PpoConfig, QLearningConfig,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    passed: bool,
    detail: String,
}

/// Prune and re-prune stage reports gathered by the training criteria and
/// checked by the numerical suite.
#[derive(Default)]
struct Shared {
    prune_stages: Vec<(String, PostTrainConfig, StageReport)>,
}

fn switcheroo(layout: SwitcherooLayout, obs: ObsMode) -> EnvSpec {
    EnvSpec::Switcheroo { layout, obs }
}

fn ndnf(actor: &Actor) -> &NdnfMtActor {
    match actor {
        Actor::NdnfMt(a) => a,
        _ => panic!("presets train neural DNF-MT actors"),
    }
}

fn keep_prune_stages(shared: &mut Shared, label: String, cfg: &PostTrainConfig, stages: &[StageReport]) {
    for s in stages.iter().filter(|s| s.stage == "prune" || s.stage == "re-prune") {
        shared.prune_stages.push((format!("{label} {}", s.stage), cfg.clone(), s.clone()));
    }
}

/// Stochastic stages must keep every action probability within `tau_prune`;
/// deterministic ones must keep every greedy action.
fn stage_within_bounds(cfg: &PostTrainConfig, s: &StageReport) -> bool {
    match cfg.policy_kind {
        PolicyKind::Stochastic => s.max_drift <= cfg.tau_prune,
        PolicyKind::Deterministic => s.greedy_changes == 0,
    }
}

fn criterion_1(shared: &mut Shared) -> Outcome {
    let targets = [
        (switcheroo(SwitcherooLayout::Sc, ObsMode::StateOneHot), -3.0),
        (switcheroo(SwitcherooLayout::Lc5, ObsMode::StateOneHot), -4.0),
        (switcheroo(SwitcherooLayout::Lc11, ObsMode::StateOneHot), -4.0),
    ];
    let mut passed = true;
    let mut detail = Vec::new();
    for (spec, target) in targets {
        let mut good = 0;
        for seed in 0..5 {
            let out = train_ppo(spec, &PpoConfig::preset(spec), &ModelConfig::preset(spec), seed).unwrap();
            let actor = ndnf(&out.agent.actor);
            let model_ret = evaluate(&out.agent.actor, spec, 10_000, ActionSelection::Argmax, seed).unwrap().mean_return;
            let cfg = PostTrainConfig::new(PolicyKind::Deterministic);
            let ctx = context_observations(spec, Some(actor)).unwrap();
            let vocab = vocabulary(spec);
            let res = run_pipeline(actor, &ctx, &vocab, &cfg, definition_observations(spec).as_deref()).unwrap();
            keep_prune_stages(shared, format!("{spec} s{seed}"), &cfg, &res.report.stages);
            let asp_ret = match &res.program {
                Some(ExtractedProgram::Asp(p)) => {
                    let pol = AspPolicy { program: p.clone(), vocab, encoder: None };
                    evaluate(&pol, spec, 10_000, ActionSelection::Argmax, seed).ok().map(|r| r.mean_return)
                }
                _ => None,
            };
            if model_ret == target && asp_ret == Some(target) {
                good += 1;
            }
        }
        passed &= good >= 3;
        detail.push(format!("{spec} {good}/5"));
    }
    Outcome { passed, detail: detail.join(", ") }
}

fn criterion_2(shared: &mut Shared) -> Outcome {
    let targets = [
        (switcheroo(SwitcherooLayout::Sc, ObsMode::WallStatus), -9.34),
        (switcheroo(SwitcherooLayout::Lc5, ObsMode::WallStatus), -14.2),
        (switcheroo(SwitcherooLayout::Lc11, ObsMode::WallStatus), -17.4),
    ];
    let mut passed = true;
    let mut detail = Vec::new();
    for (spec, target) in targets {
        let mut returns = Vec::new();
        for seed in 0..5 {
            let out = train_ppo(spec, &PpoConfig::preset(spec), &ModelConfig::preset(spec), seed).unwrap();
            let r = evaluate(&out.agent.actor, spec, 100_000, ActionSelection::Sample, seed).unwrap();
            returns.push(r.mean_return);
            let actor = ndnf(&out.agent.actor);
            let cfg = PostTrainConfig::new(PolicyKind::Stochastic);
            let ctx = context_observations(spec, Some(actor)).unwrap();
            let res = run_pipeline(actor, &ctx, &vocabulary(spec), &cfg, None).unwrap();
            keep_prune_stages(shared, format!("{spec} s{seed}"), &cfg, &res.report.stages);
        }
        let good = returns.iter().filter(|r| (**r - target).abs() <= 1.5).count();
        passed &= good >= 3;
        let shown: Vec<String> = returns.iter().map(|r| format!("{r:.2}")).collect();
        detail.push(format!("{spec} {good}/5 [{}]", shown.join(" ")));
    }
    Outcome { passed, detail: detail.join(", ") }
}

fn criterion_3(shared: &mut Shared) -> Outcome {
    let spec = EnvSpec::Blackjack;
    let out = train_ppo(spec, &PpoConfig::preset(spec), &ModelConfig::preset(spec), 0).unwrap();
    let raw = &out.agent.actor;
    let r = evaluate(raw, spec, 100_000, ActionSelection::Argmax, 0).unwrap();
    let returns_ok = (r.mean_return + 0.050).abs() <= 0.02 && (r.win_rate - 0.428).abs() <= 0.015;

    let cfg = PostTrainConfig::new(PolicyKind::Stochastic);
    let grid = blackjack_grid_observations();
    let vocab = vocabulary(spec);
    let res = run_pipeline(ndnf(raw), &grid, &vocab, &cfg, None).unwrap();
    keep_prune_stages(shared, "blackjack s0".into(), &cfg, &res.report.stages);
    let Some(ExtractedProgram::Problog(program)) = res.program else {
        return Outcome { passed: false, detail: "no ProbLog program extracted".into() };
    };
    let problog = ProblogPolicy { program, vocab, encoder: None };
    let step3 = Actor::NdnfMt(res.model_after_step3);
    let mut worst: f64 = 0.0;
    for x in &grid {
        let a = problog.distribution(x).unwrap();
        let b = step3.distribution(x).unwrap();
        worst = a.iter().zip(&b).map(|(p, q)| (p - q).abs()).fold(worst, f64::max);
    }
    let reference = reference_blackjack_policy();
    let d_problog = policy_divergence(&problog, &reference, &grid).unwrap();
    let d_raw = policy_divergence(raw, &reference, &grid).unwrap();
    Outcome {
        passed: returns_ok && worst < 5e-4 && d_problog > d_raw,
        detail: format!(
            "argmax {:.4} win {:.4}; ProbLog vs step-3 max diff {worst:.1e}; divergence ProbLog {d_problog:.4} raw {d_raw:.4}",
            r.mean_return, r.win_rate
        ),
    }
}

fn criterion_4() -> Outcome {
    let spec = EnvSpec::Taxi;
    let q = q_learning(spec, &QLearningConfig::preset(spec), 0).unwrap();
    let greedy = evaluate(&QTablePolicy::new(q.clone(), 0.0), spec, 100_000, ActionSelection::Argmax, 0).unwrap();

    let obs = context_observations(spec, None).unwrap();
    let targets = oracle_targets(&QTablePolicy::new(q, 0.01), &obs).unwrap();
    let cfg = DistillationConfig::default();
    let model = ModelConfig { actor: ActorKind::NdnfMt, ..ModelConfig::preset(spec) };
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let Actor::NdnfMt(student) = PpoAgent::new(spec, &model, cfg.delta.initial_delta, &mut rng).actor else {
        unreachable!("a neural DNF-MT actor was requested");
    };
    let out = distil(student, &obs, &targets, &cfg, 0).unwrap();
    let student = evaluate(&Actor::NdnfMt(out.student), spec, 100_000, ActionSelection::Argmax, 0).unwrap();
    Outcome {
        passed: (greedy.mean_return - 7.91).abs() <= 0.15 && student.mean_return >= 7.7,
        detail: format!("Q greedy {:.3}, distilled argmax {:.3}", greedy.mean_return, student.mean_return),
    }
}

fn criterion_5(shared: &mut Shared) -> Outcome {
    let spec = EnvSpec::DoorCorridor(DcVariant::Dc);
    let seeds = 16;
    let mut finishing = 0;
    let mut extracted = 0;
    for seed in 0..seeds {
        let out = train_ppo(spec, &PpoConfig::preset(spec), &ModelConfig::preset(spec), seed).unwrap();
        let r = evaluate(&out.agent.actor, spec, 10, ActionSelection::Argmax, seed).unwrap();
        if r.mean_return != -8.0 {
            continue;
        }
        finishing += 1;
        let actor = ndnf(&out.agent.actor);
        let cfg = PostTrainConfig::new(PolicyKind::Deterministic);
        let ctx = context_observations(spec, Some(actor)).unwrap();
        let vocab = vocabulary(spec);
        let res = run_pipeline(actor, &ctx, &vocab, &cfg, definition_observations(spec).as_deref()).unwrap();
        keep_prune_stages(shared, format!("{spec} s{seed}"), &cfg, &res.report.stages);
        if let Some(ExtractedProgram::Asp(p)) = res.program {
            // AspPolicy rejects any step without exactly one true action.
            let pol = AspPolicy { program: p, vocab, encoder: res.model_after_step3.encoder };
            if let Ok(e) = evaluate(&pol, spec, 10, ActionSelection::Argmax, seed) {
                if e.mean_return == -8.0 && e.mean_length == 8.0 {
                    extracted += 1;
                }
            }
        }
    }
    let passed = finishing * 10 >= seeds * 6 && extracted * 10 >= finishing * 9;
    Outcome { passed, detail: format!("{finishing}/{seeds} seeds finish; {extracted}/{finishing} extract a finishing ASP program") }
}

const DC_T_PROGRAM: &str = "\
action(turn_right) :- a_5, a_8.
action(forward) :- not a_1, a_2.
action(toggle) :- a_3.
action(toggle) :- a_1, not a_3, a_12.
";

const DC_OT_PROGRAM: &str = "\
action(turn_right) :- a_5, a_8, a_11.
action(forward) :- a_2.
action(toggle) :- a_3.
action(toggle) :- not a_2, not a_3, not a_11.
";

fn criterion_6() -> Outcome {
    let mut passed = true;
    let mut detail = Vec::new();
    for (variant, text, target) in [(DcVariant::DcT, DC_T_PROGRAM, -8.0), (DcVariant::DcOt, DC_OT_PROGRAM, -9.0)] {
        let spec = EnvSpec::DoorCorridor(variant);
        let program = parse_asp(text).unwrap();
        let t = logic_to_neural(&program, &vocabulary(spec)).unwrap();
        let mut encoder = reference_encoder();
        encoder.discretise();
        let actor = Actor::NdnfMt(NdnfMtActor { encoder: Some(encoder), model: t.model });
        let r = evaluate(&actor, spec, 10, ActionSelection::Argmax, 0).unwrap().mean_return;
        passed &= r == target;
        detail.push(format!("{spec} {r}"));
    }
    Outcome { passed, detail: detail.join(", ") }
}

fn criterion_7() -> Outcome {
    let r = equivalence_suite(200, 10, 0).unwrap();
    Outcome {
        passed: r.passed(),
        detail: format!(
            "{} models, {} inputs, {} counterexamples, {} remark violations",
            r.models, r.inputs_checked, r.counterexamples.len(), r.remark_violations.len()
        ),
    }
}

fn failure_case_model() -> NeuralDnfMt {
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
    NeuralDnfMt::from_layers(
        SemiSymbolicLayer::from_weights(NodeKind::Conjunction, wc, 1.0, BiasMode::MaxBias).unwrap(),
        SemiSymbolicLayer::from_weights(NodeKind::Disjunction, wd, 1.0, BiasMode::MaxBias).unwrap(),
    )
    .unwrap()
}

/// Weights above `tau` snap to ±6, the rest to 0; both layers use step
/// activations.
fn snapped(model: &NeuralDnfMt, tau: f64) -> NeuralDnfMt {
    let snap = |t: &Tensor| t.map(|w| if w.abs() > tau { 6.0 * w.signum() } else { 0.0 });
    let mut m = NeuralDnfMt::from_layers(
        SemiSymbolicLayer::from_weights(NodeKind::Conjunction, snap(&model.conj.weights), 1.0, BiasMode::MaxBias).unwrap(),
        SemiSymbolicLayer::from_weights(NodeKind::Disjunction, snap(&model.disj.weights), 1.0, BiasMode::MaxBias).unwrap(),
    )
    .unwrap();
    m.conj_activation = Activation::Step;
    m.disj_activation = Activation::Step;
    m
}

fn criterion_8() -> Outcome {
    let model = failure_case_model();
    let placed = |v: &[f64]| {
        let mut x = vec![-1.0; 16];
        for (k, i) in [2, 7, 9, 13].into_iter().enumerate() {
            x[i] = v[k];
        }
        x
    };
    let x = placed(&[-1.0, 1.0, 1.0, -1.0]);
    let before = model.forward_one(&x).unwrap().disj_tanh.into_data();
    let after = snapped(&model, 0.0).forward_one(&x).unwrap().disj_tanh.into_data();
    let before_ok = [1.00, -1.00, -0.86].iter().zip(&before[1..]).all(|(e, y)| (e - y).abs() <= 0.01);
    let after_ok = after[1..] == [1.0, -1.0, 1.0];

    let ctx: Vec<Vec<f64>> = all_sign_vectors(4).iter().map(|v| placed(v)).collect();
    let vocab = ndnf_core::logic::Vocabulary::new(
        (0..16).map(|i| ndnf_core::logic::Atom::new(format!("a_{i}"))).collect(),
        (0..4).map(|i| ndnf_core::logic::Atom::new(format!("action_{i}"))).collect(),
    );
    let actor = NdnfMtActor { encoder: None, model };
    let res = run_pipeline(&actor, &ctx, &vocab, &PostTrainConfig::new(PolicyKind::Deterministic), None).unwrap();
    let diagnostic = res.report.failure.map(|f| f.diagnostic).unwrap_or_default();
    let violation = diagnostic.contains("logical mutual exclusivity") && res.program.is_none();
    let fmt = |v: &[f64]| v[1..].iter().map(|y| format!("{y:.2}")).collect::<Vec<_>>().join(", ");
    Outcome {
        passed: before_ok && after_ok && violation,
        detail: format!("pre ({}), post ({}), pipeline: {diagnostic}", fmt(&before), fmt(&after)),
    }
}

fn gradcheck(rng: &mut ChaCha8Rng) -> f64 {
    let mut model = NeuralDnfMt::new(5, 4, 3, 0.7, rng);
    for p in model.params_mut() {
        for w in p.data_mut() {
            *w = rng.gen_range(-2.0..2.0);
        }
    }
    let x = Tensor::matrix(3, 5, (0..15).map(|_| rng.gen_range(-1.0..1.0)).collect());
    let mix_lp: Vec<f64> = (0..9).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let mix_y: Vec<f64> = (0..9).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let loss = |m: &NeuralDnfMt, grads: bool| {
        let mut t = Tape::new();
        let vars = t.params(&m.params());
        let xv = t.constant(x.clone());
        let out = m.forward_tape(&mut t, &vars, xv).unwrap();
        let a = t.constant(Tensor::matrix(3, 3, mix_lp.clone()));
        let b = t.constant(Tensor::matrix(3, 3, mix_y.clone()));
        let la = t.mul(out.log_probs, a).unwrap();
        let lb = t.mul(out.disj_tanh, b).unwrap();
        let s = t.add(la, lb).unwrap();
        let l = t.sum(s).unwrap();
        let g = if grads { t.backward(l).unwrap().get_many(&vars) } else { Vec::new() };
        (t.value(l).item(), g)
    };
    let (_, analytic) = loss(&model, true);
    let h = 1e-6;
    let mut worst: f64 = 0.0;
    for (p, g) in analytic.iter().enumerate() {
        for i in 0..g.len() {
            let mut up = model.clone();
            up.params_mut()[p].data_mut()[i] += h;
            let mut down = model.clone();
            down.params_mut()[p].data_mut()[i] -= h;
            let numeric = (loss(&up, false).0 - loss(&down, false).0) / (2.0 * h);
            let a = g.data()[i];
            worst = worst.max((a - numeric).abs() / a.abs().max(numeric.abs()).max(1e-3));
        }
    }
    worst
}

/// δ after `iteration` updates, by stepping the schedule one iteration at a
/// time.
fn delta_by_iteration(s: &DeltaScheduler, iteration: u64) -> f64 {
    let mut v = s.initial;
    for i in 0..=iteration {
        if i >= s.delay && (i - s.delay) % s.step.max(1) == 0 {
            v *= s.rate;
        }
    }
    v.min(1.0)
}

fn criterion_9(shared: &Shared) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let grad_err = (0..20).map(|_| gradcheck(&mut rng)).fold(0.0, f64::max);

    let mut me_err: f64 = 0.0;
    for _ in 0..500 {
        let scale = [0.1, 1.0, 10.0, 100.0][rng.gen_range(0..4)];
        let mut model = NeuralDnfMt::new(8, 6, 5, 1.0, &mut rng);
        for p in model.params_mut() {
            for w in p.data_mut() {
                *w = scale * rng.gen_range(-1.0..1.0);
            }
        }
        let x: Vec<f64> = (0..8).map(|_| rng.gen_range(-1.0..1.0)).collect();
        me_err = me_err.max((model.probs(&x).unwrap().iter().sum::<f64>() - 1.0).abs());
    }

    let mut drift_bad: Vec<String> = shared
        .prune_stages
        .iter()
        .filter(|(_, cfg, s)| !stage_within_bounds(cfg, s))
        .map(|(l, _, _)| l.clone())
        .collect();
    let cfg = PostTrainConfig::new(PolicyKind::Stochastic);
    for k in 0..100 {
        let mut model = NeuralDnfMt::new(5, 4, 3, 1.0, &mut rng);
        for p in model.params_mut() {
            for w in p.data_mut() {
                *w = if rng.gen_bool(0.5) { rng.gen_range(-0.05..0.05) } else { rng.gen_range(-4.0..4.0) };
            }
        }
        let ctx = all_sign_vectors(5);
        let pruned = prune(&model, &ctx, &cfg).unwrap();
        let drift = ctx
            .iter()
            .flat_map(|x| {
                let (a, b) = (model.probs(x).unwrap(), pruned.probs(x).unwrap());
                a.into_iter().zip(b).map(|(p, q)| (p - q).abs()).collect::<Vec<_>>()
            })
            .fold(0.0, f64::max);
        if drift > cfg.tau_prune {
            drift_bad.push(format!("random model {k}"));
        }
    }

    let mut schedule_ok = true;
    for _ in 0..200 {
        let s = DeltaScheduler {
            initial: rng.gen_range(0.01..1.2),
            delay: rng.gen_range(0..50),
            step: rng.gen_range(1..20),
            rate: rng.gen_range(0.9..1.5),
        };
        let mut first_cap = None;
        for i in 0..2000 {
            let want = delta_by_iteration(&s, i);
            schedule_ok &= (s.value(i) - want).abs() <= 1e-12 * want.max(1.0);
            if want >= 1.0 && first_cap.is_none() {
                first_cap = Some(i);
            }
        }
        if first_cap.is_some() {
            schedule_ok &= s.iterations_to_cap() == first_cap;
        }
    }

    let mut seen = vec![false; TAXI_STATES];
    let mut taxi_ok = true;
    for row in 0..5 {
        for col in 0..5 {
            for passenger in 0..=TAXI_DEPOTS.len() {
                for destination in 0..TAXI_DEPOTS.len() {
                    let i = taxi_encode(row, col, passenger, destination);
                    let s = taxi_decode(i);
                    taxi_ok &= i < TAXI_STATES && !seen[i];
                    taxi_ok &= (s.row, s.col, s.passenger, s.destination) == (row, col, passenger, destination);
                    seen[i] = true;
                }
            }
        }
    }
    taxi_ok &= seen.iter().all(|s| *s);

    let checked = shared.prune_stages.len() + 100;
    Outcome {
        passed: grad_err < 1e-4 && me_err < 1e-9 && drift_bad.is_empty() && schedule_ok && taxi_ok,
        detail: format!(
            "gradcheck {grad_err:.1e}; |Σp-1| {me_err:.1e}; pruning out of bounds in {}/{checked} checks{}; scheduler {}; taxi bijection {}",
            drift_bad.len(),
            if drift_bad.is_empty() { String::new() } else { format!(" ({})", drift_bad.join(", ")) },
            if schedule_ok { "ok" } else { "mismatch" },
            if taxi_ok { "ok" } else { "broken" },
        ),
    }
}

fn main() -> ExitCode {
    let only: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let wanted = |n: usize| only.is_empty() || only.contains(&n);
    let mut shared = Shared::default();
    let mut failures = 0;
    let mut report = |n: usize, name: &str, run: &mut dyn FnMut() -> Outcome| {
        if !wanted(n) {
            return;
        }
        let t = Instant::now();
        let o = run();
        let verdict = if o.passed { "PASS" } else { "FAIL" };
        println!("criterion {n} {verdict} [{name}] {} ({:.0}s)", o.detail, t.elapsed().as_secs_f64());
        if !o.passed {
            failures += 1;
        }
    };
    report(1, "switcheroo mdp", &mut || criterion_1(&mut shared));
    report(2, "switcheroo pomdp", &mut || criterion_2(&mut shared));
    report(3, "blackjack", &mut || criterion_3(&mut shared));
    report(4, "taxi", &mut criterion_4);
    report(5, "door corridor", &mut || criterion_5(&mut shared));
    report(6, "intervention", &mut criterion_6);
    report(7, "translation equivalence", &mut criterion_7);
    report(8, "thresholding failure", &mut criterion_8);
    report(9, "numerical suite", &mut || criterion_9(&shared));
    if failures == 0 {
        println!("all selected criteria passed");
        return ExitCode::SUCCESS;
    }
    println!("{failures} criteria failed");
    if std::env::var_os("ACCEPTANCE_STRICT").is_some() {
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
