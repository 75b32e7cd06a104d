use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::context::dedup;
use super::extract::{extract_asp, extract_problog};
use super::predicates::{define_invented_predicates, PredicateDefinition};
use super::prune::{edge_counts, live_conjunctions, prune, PruneReference};
use super::threshold::{threshold, ThresholdFailure, ThresholdOutcome};
use super::{PolicyKind, PostTrainConfig, PostTrainError};
use crate::logic::{
    asp_evaluate, asp_select_action, conj_atom, obs_to_facts, print_asp, print_problog_with, problog_infer,
    verify_equivalence, AspProgram, Atom, ProblogProgram, Vocabulary,
};
use crate::neural::{argmax, NdnfMtActor, NeuralDnfMt};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "program", rename_all = "snake_case")]
pub enum ExtractedProgram {
    Asp(AspProgram),
    Problog(ProblogProgram),
}

impl ExtractedProgram {
    /// Program text; `decimals` fixes the printed precision of ProbLog
    /// probabilities.
    pub fn text(&self, decimals: Option<usize>) -> String {
        match self {
            ExtractedProgram::Asp(p) => print_asp(p),
            ExtractedProgram::Problog(p) => print_problog_with(p, decimals),
        }
    }

    pub fn extension(&self) -> &'static str {
        match self {
            ExtractedProgram::Asp(_) => "lp",
            ExtractedProgram::Problog(_) => "pl",
        }
    }
}

/// Outcome of one pipeline stage, measured against that stage's input.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageReport {
    pub stage: String,
    pub passed: bool,
    /// Largest change of any action probability over the context.
    pub max_drift: f64,
    /// Context inputs whose greedy action changed.
    pub greedy_changes: usize,
    pub tau: Option<f64>,
    pub conj_edges: usize,
    pub disj_edges: usize,
    pub live_conjunctions: usize,
}

pub const STAGES_CSV_HEADER: &str =
    "stage,passed,max_drift,greedy_changes,tau,conj_edges,disj_edges,live_conjunctions";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineReport {
    pub policy_kind: PolicyKind,
    pub tau_prune: f64,
    /// Distinct model inputs the checks ran on.
    pub context_size: usize,
    pub stages: Vec<StageReport>,
    pub failure: Option<ThresholdFailure>,
    /// Stochastic thresholding could not stay within `tau_prune` and took
    /// the least-drifting threshold instead.
    pub tolerance_exceeded: bool,
    /// Fraction of context inputs on which the ASP program picks the
    /// model's greedy action.
    pub asp_agreement: Option<f64>,
    pub equivalence_counterexamples: Option<usize>,
    pub remark_violations: Option<usize>,
    /// Largest gap between ProbLog and model probabilities over the context.
    pub problog_max_error: Option<f64>,
    pub annotated_disjunctions: Option<usize>,
    pub definitions: Vec<PredicateDefinition>,
}

impl PipelineReport {
    pub fn stages_csv(&self) -> String {
        let mut out = format!("{STAGES_CSV_HEADER}\n");
        for s in &self.stages {
            let tau = s.tau.map(|t| t.to_string()).unwrap_or_default();
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{}\n",
                s.stage, s.passed, s.max_drift, s.greedy_changes, tau, s.conj_edges, s.disj_edges, s.live_conjunctions
            ));
        }
        out
    }

    pub fn succeeded(&self) -> bool {
        self.failure.is_none()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineOutput {
    /// Actor after thresholding and re-pruning (after pruning alone when
    /// thresholding failed), with a discretised encoder.
    pub model_after_step3: NdnfMtActor,
    pub program: Option<ExtractedProgram>,
    pub report: PipelineReport,
}

fn stage(
    name: &str,
    model: &NeuralDnfMt,
    reference: &PruneReference,
    inputs: &[Vec<f64>],
    cfg: &PostTrainConfig,
    tau: Option<f64>,
) -> Result<StageReport, PostTrainError> {
    let (max_drift, greedy_changes) = reference.drift(model, inputs)?;
    let passed = match cfg.policy_kind {
        PolicyKind::Deterministic => greedy_changes == 0,
        PolicyKind::Stochastic => max_drift <= cfg.tau_prune,
    };
    let (conj_edges, disj_edges) = edge_counts(model);
    Ok(StageReport {
        stage: name.to_string(),
        passed,
        max_drift,
        greedy_changes,
        tau,
        conj_edges,
        disj_edges,
        live_conjunctions: live_conjunctions(model).len(),
    })
}

fn used_inputs(atoms: impl IntoIterator<Item = Atom>, vocab: &Vocabulary) -> Vec<usize> {
    let set: BTreeSet<Atom> = atoms.into_iter().collect();
    (0..vocab.inputs.len()).filter(|&i| set.contains(&vocab.inputs[i])).collect()
}

/// Runs discretisation (when the actor has an encoder), pruning,
/// thresholding, re-pruning and extraction on the raw observations `ctx`.
///
/// A thresholding failure is not an error: the report carries it and no
/// program is returned. Invented predicates used by the program are defined
/// over `definition_ctx` (or `ctx` when absent).
pub fn run_pipeline(
    actor: &NdnfMtActor,
    ctx: &[Vec<f64>],
    vocab: &Vocabulary,
    cfg: &PostTrainConfig,
    definition_ctx: Option<&[Vec<f64>]>,
) -> Result<PipelineOutput, PostTrainError> {
    cfg.validate()?;
    if ctx.is_empty() {
        return Err(PostTrainError::EmptyContext);
    }
    let mut stages = Vec::new();
    let mut current = actor.clone();
    let inputs = match current.encoder.as_mut() {
        Some(enc) => {
            enc.discretise();
            let soft: Vec<Vec<f64>> = ctx.iter().map(|o| actor.probs(o)).collect::<Result<_, _>>()?;
            let hard: Vec<Vec<f64>> = ctx.iter().map(|o| current.probs(o)).collect::<Result<_, _>>()?;
            let max_drift = soft.iter().zip(&hard).flat_map(|(a, b)| a.iter().zip(b).map(|(x, y)| (x - y).abs())).fold(0.0, f64::max);
            let greedy_changes = soft.iter().zip(&hard).filter(|(a, b)| argmax(a) != argmax(b)).count();
            let (conj_edges, disj_edges) = edge_counts(&current.model);
            stages.push(StageReport {
                stage: "discretise".into(),
                passed: match cfg.policy_kind {
                    PolicyKind::Deterministic => greedy_changes == 0,
                    PolicyKind::Stochastic => max_drift <= cfg.tau_prune,
                },
                max_drift,
                greedy_changes,
                tau: None,
                conj_edges,
                disj_edges,
                live_conjunctions: live_conjunctions(&current.model).len(),
            });
            dedup(ctx.iter().map(|o| current.predicates(o)).collect::<Result<Vec<_>, _>>()?)
        }
        None => dedup(ctx.iter().cloned()),
    };

    let measure = |model: &NeuralDnfMt| PruneReference::new(model, &inputs, cfg, false);

    let before = measure(&current.model)?;
    let pruned = prune(&current.model, &inputs, cfg)?;
    stages.push(stage("prune", &pruned, &before, &inputs, cfg, None)?);

    let mut report = PipelineReport {
        policy_kind: cfg.policy_kind,
        tau_prune: cfg.tau_prune,
        context_size: inputs.len(),
        stages,
        failure: None,
        tolerance_exceeded: false,
        asp_agreement: None,
        equivalence_counterexamples: None,
        remark_violations: None,
        problog_max_error: None,
        annotated_disjunctions: None,
        definitions: Vec::new(),
    };

    let before = measure(&pruned)?;
    let (thresholded, tau, within_tolerance) = match threshold(&pruned, &inputs, cfg)? {
        ThresholdOutcome::Accepted { model, tau, within_tolerance, .. } => (model, tau, within_tolerance),
        ThresholdOutcome::Failed(f) => {
            let (conj_edges, disj_edges) = edge_counts(&pruned);
            report.stages.push(StageReport {
                stage: "threshold".into(),
                passed: false,
                max_drift: f64::NAN,
                greedy_changes: 0,
                tau: None,
                conj_edges,
                disj_edges,
                live_conjunctions: live_conjunctions(&pruned).len(),
            });
            report.failure = Some(f);
            current.model = pruned;
            return Ok(PipelineOutput { model_after_step3: current, program: None, report });
        }
    };
    report.stages.push(stage("threshold", &thresholded, &before, &inputs, cfg, Some(tau))?);
    report.tolerance_exceeded = !within_tolerance;

    let before = measure(&thresholded)?;
    let final_model = prune(&thresholded, &inputs, cfg)?;
    report.stages.push(stage("re-prune", &final_model, &before, &inputs, cfg, None)?);

    let program = match cfg.policy_kind {
        PolicyKind::Deterministic => {
            let program = extract_asp(&final_model, vocab)?;
            let mut agree = 0;
            for x in &inputs {
                let v = asp_evaluate(&program, &obs_to_facts(x, &vocab.inputs)?)?;
                let chosen = asp_select_action(&v, &vocab.actions).ok();
                if chosen == Some(argmax(final_model.forward_one(x)?.disj_raw.row(0))) {
                    agree += 1;
                }
            }
            report.asp_agreement = Some(agree as f64 / inputs.len() as f64);
            let heads: BTreeSet<Atom> = program.rules.iter().map(|r| r.head.clone()).collect();
            let names: Vec<Option<Atom>> =
                (0..final_model.conjunctions()).map(|j| Some(conj_atom(j)).filter(|a| heads.contains(a))).collect();
            let eq = verify_equivalence(&final_model, &program, vocab, &names, &inputs)?;
            report.equivalence_counterexamples = Some(eq.counterexamples.len());
            report.remark_violations = Some(eq.remark_violations.len());
            ExtractedProgram::Asp(program)
        }
        PolicyKind::Stochastic => {
            let program = extract_problog(&final_model, &inputs, vocab)?;
            let mut worst = 0.0f64;
            for x in &inputs {
                let d = problog_infer(&program, &obs_to_facts(x, &vocab.inputs)?, &vocab.actions)?;
                let p = final_model.probs(x)?;
                worst = d.iter().zip(&p).fold(worst, |m, (a, b)| m.max((a - b).abs()));
            }
            report.problog_max_error = Some(worst);
            report.annotated_disjunctions = Some(program.disjunctions.len());
            ExtractedProgram::Problog(program)
        }
    };

    if let Some(enc) = current.encoder.as_ref() {
        let atoms: Vec<Atom> = match &program {
            ExtractedProgram::Asp(p) => p.atoms(),
            ExtractedProgram::Problog(p) => p
                .rules
                .iter()
                .flat_map(|r| r.body.iter().map(|l| l.atom.clone()))
                .chain(p.disjunctions.iter().flat_map(|d| d.body.iter().map(|l| l.atom.clone())))
                .collect(),
        };
        let used = used_inputs(atoms, vocab);
        let defs_ctx = definition_ctx.unwrap_or(ctx);
        report.definitions = define_invented_predicates(enc, &used, defs_ctx, cfg.max_definition_literals)?;
    }
    current.model = final_model;
    Ok(PipelineOutput { model_after_step3: current, program: Some(program), report })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::autodiff::Tensor;
    use crate::logic::numbered_atoms;
    use crate::neural::{BiasMode, NodeKind, SemiSymbolicLayer};

    /// The thresholding failure case: 16 inputs, 12 conjunctions, 4 actions.
    fn failure_case() -> NdnfMtActor {
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
        NdnfMtActor { encoder: None, model }
    }

    #[test]
    fn failure_case_reports_mutual_exclusivity_violation() {
        let vocab = crate::logic::Vocabulary::new(numbered_atoms("a_", 16, 0), numbered_atoms("action_", 4, 0));
        let cfg = PostTrainConfig::new(PolicyKind::Deterministic);
        let ctx: Vec<Vec<f64>> = crate::logic::all_sign_vectors(4)
            .into_iter()
            .map(|v| {
                let mut x = vec![-1.0; 16];
                for (k, i) in [2, 7, 9, 13].into_iter().enumerate() {
                    x[i] = v[k];
                }
                x
            })
            .collect();
        let out = run_pipeline(&failure_case(), &ctx, &vocab, &cfg, None).unwrap();
        let f = out.report.failure.expect("thresholding should fail");
        assert!(f.diagnostic.contains("logical mutual exclusivity"), "{}", f.diagnostic);
        assert!(out.program.is_none());
    }

    #[test]
    fn listing_one_shape_from_a_soft_model() {
        // in_s_1 on → left; otherwise right.
        let mut wc = Tensor::zeros(&[2, 4]);
        wc.set2(0, 1, 4.2);
        wc.set2(0, 3, 0.05);
        wc.set2(1, 2, 0.02);
        let wd = Tensor::matrix(2, 2, vec![3.9, 0.01, -4.1, 0.0]);
        let model = NeuralDnfMt::from_layers(
            SemiSymbolicLayer::from_weights(NodeKind::Conjunction, wc, 1.0, BiasMode::MaxBias).unwrap(),
            SemiSymbolicLayer::from_weights(NodeKind::Disjunction, wd, 1.0, BiasMode::MaxBias).unwrap(),
        )
        .unwrap();
        let actor = NdnfMtActor { encoder: None, model };
        let ctx: Vec<Vec<f64>> = (0..4).map(|i| (0..4).map(|j| if i == j { 1.0 } else { -1.0 }).collect()).collect();
        let vocab = crate::logic::Vocabulary::with_action_names(numbered_atoms("in_s_", 4, 0), &["left".into(), "right".into()]);
        let cfg = PostTrainConfig::new(PolicyKind::Deterministic);
        let out = run_pipeline(&actor, &ctx, &vocab, &cfg, None).unwrap();
        let program = out.program.unwrap();
        assert_eq!(program.text(None), "action(left) :- in_s_1.\naction(right) :- not in_s_1.\n");
        assert_eq!(out.report.asp_agreement, Some(1.0));
        assert_eq!(out.report.equivalence_counterexamples, Some(0));
    }
}
