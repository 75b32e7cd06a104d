use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::config::DistillationConfig;
use super::ppo::forward_on_tape;
use super::TrainingError;
use crate::autodiff::{AdamState, Tape, Tensor};
use crate::neural::{Actor, NdnfMtActor};

/// Result of distillation: the student and the mean loss of every epoch.
#[derive(Debug, Clone)]
pub struct DistilOutcome {
    pub student: NdnfMtActor,
    pub epoch_losses: Vec<f64>,
}

/// `Σ p·(ln p − ln q)` per row, averaged; terms with `p = 0` vanish.
pub fn kl_divergence(p: &[Vec<f64>], q: &[Vec<f64>]) -> f64 {
    let total: f64 = p
        .iter()
        .zip(q)
        .map(|(p, q)| p.iter().zip(q).filter(|(p, _)| **p > 0.0).map(|(p, q)| p * (p.ln() - q.ln())).sum::<f64>())
        .sum();
    total / p.len().max(1) as f64
}

/// Fits the student's mutex-tanh distribution to `targets` by minimising
/// KL(target ‖ student) plus the weighted auxiliary losses, with δ advanced
/// once per epoch.
pub fn distil(
    mut student: NdnfMtActor,
    observations: &[Vec<f64>],
    targets: &[Vec<f64>],
    cfg: &DistillationConfig,
    seed: u64,
) -> Result<DistilOutcome, TrainingError> {
    cfg.validate()?;
    if observations.is_empty() || observations.len() != targets.len() {
        return Err(TrainingError::Mismatch(format!(
            "{} observations for {} target distributions",
            observations.len(),
            targets.len()
        )));
    }
    let width = observations[0].len();
    let expected = match &student.encoder {
        Some(_) => crate::neural::RAW_WIDTH,
        None => student.model.inputs(),
    };
    if width != expected || targets.iter().any(|t| t.len() != student.model.actions()) {
        return Err(TrainingError::Mismatch(format!(
            "student expects {expected} inputs and {} actions",
            student.model.actions()
        )));
    }
    let scheduler = cfg.delta.scheduler();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut actor = Actor::NdnfMt(student.clone());
    let mut opt = AdamState::new(&actor.params(), cfg.learning_rate);
    let mut idx: Vec<usize> = (0..observations.len()).collect();
    let mut epoch_losses = Vec::with_capacity(cfg.epochs);
    let mut best = f64::INFINITY;
    let mut since_best = 0;
    for epoch in 0..cfg.epochs {
        if let Actor::NdnfMt(a) = &mut actor {
            a.model.set_delta(scheduler.value(epoch as u64));
        }
        idx.shuffle(&mut rng);
        let mut sum = 0.0;
        for chunk in idx.chunks(cfg.batch_size) {
            let obs = Tensor::from_rows(&chunk.iter().map(|&i| observations[i].clone()).collect::<Vec<_>>());
            let mut tape = Tape::new();
            let fwd = forward_on_tape(&mut tape, &actor, None, &obs, &cfg.aux)?;
            let target: Vec<f64> = chunk.iter().flat_map(|&i| targets[i].iter().copied()).collect();
            let entropy: f64 =
                target.iter().filter(|&&p| p > 0.0).map(|p| p * p.ln()).sum::<f64>() / chunk.len() as f64;
            let t = tape.constant(Tensor::matrix(chunk.len(), targets[0].len(), target));
            let cross = tape.mul(t, fwd.log_probs)?;
            let cross = tape.sum(cross)?;
            let kl = tape.scale(cross, -1.0 / chunk.len() as f64)?;
            let kl = tape.add_scalar(kl, entropy)?;
            let total = match fwd.aux {
                Some((aux, _)) => tape.add(kl, aux)?,
                None => kl,
            };
            let loss = tape.value(total).item();
            if !loss.is_finite() {
                return Err(TrainingError::NonFinite { iteration: epoch as u64, detail: format!("loss = {loss}") });
            }
            sum += loss * chunk.len() as f64;
            let grads = tape.backward(total).map_err(|e| TrainingError::from_autodiff(e, epoch as u64))?;
            opt.step(&mut actor.params_mut(), &grads.get_many(&fwd.actor_vars))?;
        }
        let mean = sum / observations.len() as f64;
        epoch_losses.push(mean);
        if mean < best {
            best = mean;
            since_best = 0;
        } else {
            since_best += 1;
            if cfg.patience > 0 && since_best >= cfg.patience {
                return Err(TrainingError::Diverged { epoch: epoch as u64, best, current: mean });
            }
        }
    }
    if let Actor::NdnfMt(a) = actor {
        student = a;
    }
    student.model.set_delta(scheduler.value(cfg.epochs as u64));
    Ok(DistilOutcome { student, epoch_losses })
}
