use serde::{Deserialize, Serialize};

use super::prune::{input_tensor, PruneReference};
use super::{PolicyKind, PostTrainConfig, PostTrainError};
use crate::autodiff::Tensor;
use crate::neural::{argmax, Activation, NeuralDnfMt};

/// Example input on which the loosest threshold candidate broke the model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FailureExample {
    pub input_index: usize,
    /// Disjunctive outputs after thresholding, one per action.
    pub outputs: Vec<f64>,
    pub true_actions: Vec<usize>,
    pub expected_action: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdFailure {
    pub candidates_tried: usize,
    pub diagnostic: String,
    pub example: Option<FailureExample>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ThresholdOutcome {
    /// `within_tolerance` is false when no stochastic candidate kept every
    /// probability within `tau_prune` and the least-drifting one was taken.
    Accepted { model: NeuralDnfMt, tau: f64, candidates_tried: usize, within_tolerance: bool },
    Failed(ThresholdFailure),
}

/// Sorted distinct nonzero weight magnitudes of `layers`, with 0 in front,
/// subsampled at evenly spaced quantiles when there are more than `max`.
pub fn threshold_candidates(layers: &[&Tensor], max: usize) -> Vec<f64> {
    let mut mags: Vec<f64> =
        layers.iter().flat_map(|t| t.data().iter().map(|w| w.abs())).filter(|a| *a > 0.0).collect();
    mags.sort_by(f64::total_cmp);
    mags.dedup();
    let mut out = vec![0.0];
    if mags.len() + 1 <= max {
        out.extend(mags);
    } else {
        let keep = max - 1;
        let last = mags.len() - 1;
        let mut picked: Vec<f64> = (0..keep).map(|q| mags[(q * last + (keep - 1) / 2) / (keep - 1).max(1)]).collect();
        picked.dedup();
        out.extend(picked);
    }
    out
}

fn apply(t: &Tensor, tau: f64) -> Tensor {
    t.map(|w| if w != 0.0 && w.abs() >= tau { 6.0 * w.signum() } else { 0.0 })
}

/// Candidate model for threshold `tau`.
pub(crate) fn thresholded(model: &NeuralDnfMt, tau: f64, kind: PolicyKind) -> NeuralDnfMt {
    let mut m = model.clone();
    m.conj.weights = apply(&model.conj.weights, tau);
    m.conj_activation = Activation::Step;
    if kind == PolicyKind::Deterministic {
        m.disj.weights = apply(&model.disj.weights, tau);
        m.disj_activation = Activation::Step;
    }
    m
}

/// Snaps weights to {−6, 0, 6} with the smallest candidate τ that keeps the
/// model's behaviour on `inputs`: the conjunctive layer only for stochastic
/// policies, both layers with one shared τ for deterministic ones (which
/// must then also have exactly one true action on every input).
///
/// When no stochastic candidate stays within `tau_prune`, the candidate
/// with the smallest largest probability shift is accepted and flagged.
/// Deterministic thresholding has no such fallback.
pub fn threshold(model: &NeuralDnfMt, inputs: &[Vec<f64>], cfg: &PostTrainConfig) -> Result<ThresholdOutcome, PostTrainError> {
    cfg.validate()?;
    let deterministic = cfg.policy_kind == PolicyKind::Deterministic;
    let reference = PruneReference::new(model, inputs, cfg, deterministic)?;
    let layers: Vec<&Tensor> =
        if deterministic { vec![&model.conj.weights, &model.disj.weights] } else { vec![&model.conj.weights] };
    let candidates = threshold_candidates(&layers, cfg.max_threshold_candidates);
    let x = input_tensor(model, inputs)?;
    let mut scratch = vec![0.0; model.actions()];
    let mut example = None;
    let mut least_drift: Option<(f64, f64, NeuralDnfMt)> = None;
    for (tried, &tau) in candidates.iter().enumerate() {
        let m = thresholded(model, tau, cfg.policy_kind);
        let out = m.forward(&x)?;
        let failing = (0..inputs.len()).find(|&s| !reference.accepts(s, out.disj_raw.row(s), &mut scratch));
        if failing.is_some() && !deterministic {
            let (drift, _) = reference.drift(&m, inputs)?;
            if least_drift.as_ref().is_none_or(|(d, _, _)| drift < *d) {
                least_drift = Some((drift, tau, m.clone()));
            }
        }
        match failing {
            None => {
                return Ok(ThresholdOutcome::Accepted { model: m, tau, candidates_tried: tried + 1, within_tolerance: true })
            }
            Some(s) if example.is_none() => {
                let raw = out.disj_raw.row(s);
                let orig = model.forward(&Tensor::matrix(1, model.inputs(), inputs[s].clone()))?;
                example = Some(FailureExample {
                    input_index: s,
                    outputs: out.disj_tanh.row(s).to_vec(),
                    true_actions: (0..raw.len()).filter(|&k| raw[k] > 0.0).collect(),
                    expected_action: argmax(orig.disj_raw.row(0)),
                });
            }
            Some(_) => {}
        }
    }
    if let Some((_, tau, model)) = least_drift {
        return Ok(ThresholdOutcome::Accepted { model, tau, candidates_tried: candidates.len(), within_tolerance: false });
    }
    let diagnostic = match (&example, deterministic) {
        (Some(e), true) if e.true_actions.len() != 1 => format!(
            "no threshold keeps logical mutual exclusivity: at τ = 0, input {} has {} true actions {:?}",
            e.input_index,
            e.true_actions.len(),
            e.true_actions
        ),
        (Some(e), true) => format!(
            "no threshold keeps the greedy action: at τ = 0, input {} selects {:?} instead of {}",
            e.input_index, e.true_actions, e.expected_action
        ),
        _ => format!("no threshold keeps every action probability within {}", cfg.tau_prune),
    };
    Ok(ThresholdOutcome::Failed(ThresholdFailure { candidates_tried: candidates.len(), diagnostic, example }))
}
