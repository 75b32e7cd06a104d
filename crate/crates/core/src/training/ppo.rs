use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::config::{ActorKind, AuxWeights, ModelConfig, PpoConfig};
use super::gae::gae;
use super::losses::{mt_loss, polar_loss, weight_snap_loss};
use super::TrainingError;
use crate::autodiff::{clip_grad_norm, AdamState, AutodiffError, Tape, Tensor, Var};
use crate::env::{derive_seed, EnvSpec, VecEnv};
use crate::neural::{Actor, DcEncoder, MlpActor, MlpCritic, NdnfMtActor, NeuralDnfMt};

const ENV_STREAM: u64 = 1;
const ACTION_STREAM: u64 = 2;

/// Actor and critic trained together. The critic reads [`Actor::features`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PpoAgent {
    pub actor: Actor,
    pub critic: MlpCritic,
}

impl PpoAgent {
    pub fn new(spec: EnvSpec, model: &ModelConfig, initial_delta: f64, rng: &mut impl Rng) -> Self {
        let env = spec.build();
        let (obs, actions) = (env.obs_width(), env.num_actions());
        let actor = match (model.actor, spec) {
            (ActorKind::NdnfMt, EnvSpec::DoorCorridor(_)) => {
                let encoder = DcEncoder::new(model.num_predicates, rng);
                let m = NeuralDnfMt::new(model.num_predicates, model.num_conjunctions, actions, initial_delta, rng);
                Actor::NdnfMt(NdnfMtActor { encoder: Some(encoder), model: m })
            }
            (ActorKind::NdnfMt, _) => Actor::NdnfMt(NdnfMtActor {
                encoder: None,
                model: NeuralDnfMt::new(obs, model.num_conjunctions, actions, initial_delta, rng),
            }),
            (ActorKind::Mlp, _) => Actor::Mlp(MlpActor::new(&[obs, model.actor_hidden, actions], rng)),
        };
        let critic = MlpCritic::new(&[actor.feature_width(), model.critic_hidden, 1], rng);
        Self { actor, critic }
    }
}

/// One row of the training log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationMetrics {
    pub iteration: u64,
    pub global_step: u64,
    pub episodes: usize,
    /// Mean return of the episodes finished during this iteration's rollout.
    pub episodic_return_mean: Option<f64>,
    pub loss: f64,
    pub policy_loss: f64,
    pub value_loss: f64,
    pub entropy: f64,
    pub aux_embedding: f64,
    pub aux_dis_weight: f64,
    pub aux_conj_tanh: f64,
    pub aux_mt: f64,
    pub approx_kl: f64,
    pub delta: f64,
    pub learning_rate: f64,
}

pub const METRICS_HEADER: &str = "iteration,global_step,episodes,episodic_return_mean,loss,policy_loss,value_loss,\
entropy,aux_embedding,aux_dis_weight,aux_conj_tanh,aux_mt,approx_kl,delta,learning_rate";

pub fn metrics_csv(rows: &[IterationMetrics]) -> String {
    let mut out = String::from(METRICS_HEADER);
    out.push('\n');
    for m in rows {
        let ret = m.episodic_return_mean.map(|v| format!("{v:?}")).unwrap_or_default();
        out.push_str(&format!(
            "{},{},{},{},{:?},{:?},{:?},{:?},{:?},{:?},{:?},{:?},{:?},{:?},{:?}\n",
            m.iteration,
            m.global_step,
            m.episodes,
            ret,
            m.loss,
            m.policy_loss,
            m.value_loss,
            m.entropy,
            m.aux_embedding,
            m.aux_dis_weight,
            m.aux_conj_tanh,
            m.aux_mt,
            m.approx_kl,
            m.delta,
            m.learning_rate
        ));
    }
    out
}

/// Per-sample constants of a minibatch.
#[derive(Debug, Clone)]
pub struct LossBatch {
    pub actions: Vec<usize>,
    pub old_log_probs: Vec<f64>,
    pub advantages: Vec<f64>,
    pub returns: Vec<f64>,
    pub old_values: Vec<f64>,
}

/// Scalar handles of the clipped PPO objective.
#[derive(Debug, Clone, Copy)]
pub struct PpoTerms {
    /// `−L_CLIP + c₁·L_value − c₂·S`.
    pub total: Var,
    pub policy: Var,
    pub value: Var,
    pub entropy: Var,
}

/// Builds the PPO loss from per-sample log-probabilities (`batch × actions`),
/// probabilities and values (`batch`). Advantages are normalised here when
/// `norm_adv` is set.
pub fn ppo_loss(
    tape: &mut Tape,
    log_probs: Var,
    probs: Var,
    values: Var,
    batch: &LossBatch,
    cfg: &PpoConfig,
) -> Result<PpoTerms, AutodiffError> {
    let mut adv = batch.advantages.clone();
    if cfg.norm_adv && adv.len() > 1 {
        let n = adv.len() as f64;
        let mean = adv.iter().sum::<f64>() / n;
        let std = (adv.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
        adv.iter_mut().for_each(|a| *a = (*a - mean) / (std + 1e-8));
    }
    let new_logp = tape.gather(log_probs, &batch.actions)?;
    let old_logp = tape.constant(Tensor::vector(batch.old_log_probs.clone()));
    let log_ratio = tape.sub(new_logp, old_logp)?;
    let ratio = tape.exp(log_ratio)?;
    let neg_adv = tape.constant(Tensor::vector(adv.iter().map(|a| -a).collect()));
    let pg1 = tape.mul(ratio, neg_adv)?;
    let clipped = tape.clamp(ratio, 1.0 - cfg.clip_coef, 1.0 + cfg.clip_coef)?;
    let pg2 = tape.mul(clipped, neg_adv)?;
    let pg = tape.maximum(pg1, pg2)?;
    let policy = tape.mean(pg)?;

    let plogp = tape.mul(probs, log_probs)?;
    let plogp = tape.row_sum(plogp)?;
    let neg_entropy = tape.mean(plogp)?;
    let entropy = tape.neg(neg_entropy)?;

    let returns = tape.constant(Tensor::vector(batch.returns.clone()));
    let diff = tape.sub(values, returns)?;
    let sq = tape.mul(diff, diff)?;
    let value = if cfg.clip_vloss {
        let old_v = tape.constant(Tensor::vector(batch.old_values.clone()));
        let dv = tape.sub(values, old_v)?;
        let dv = tape.clamp(dv, -cfg.clip_coef, cfg.clip_coef)?;
        let vc = tape.add(old_v, dv)?;
        let dc = tape.sub(vc, returns)?;
        let sqc = tape.mul(dc, dc)?;
        let m = tape.maximum(sq, sqc)?;
        tape.mean(m)?
    } else {
        tape.mean(sq)?
    };

    let v_term = tape.scale(value, cfg.vf_coef)?;
    let e_term = tape.scale(entropy, -cfg.ent_coef)?;
    let total = tape.add(policy, v_term)?;
    let total = tape.add(total, e_term)?;
    Ok(PpoTerms { total, policy, value, entropy })
}

/// Differentiable view of an actor and its critic on one minibatch.
pub(crate) struct TapeForward {
    pub actor_vars: Vec<Var>,
    pub critic_vars: Vec<Var>,
    pub log_probs: Var,
    pub probs: Var,
    pub values: Var,
    /// Weighted auxiliary loss (absent for MLP actors) and its parts.
    pub aux: Option<(Var, [f64; 4])>,
}

/// Records the actor's outputs on `obs` and, when `critic` is given, the
/// value head on the actor's features.
pub(crate) fn forward_on_tape(
    tape: &mut Tape,
    actor: &Actor,
    critic: Option<&MlpCritic>,
    obs: &Tensor,
    aux_w: &AuxWeights,
) -> Result<TapeForward, TrainingError> {
    let actor_vars = tape.params(&actor.params());
    let (log_probs, probs, features, aux) = match actor {
        Actor::NdnfMt(a) => {
            let (features, embedding, model_vars) = match &a.encoder {
                Some(enc) => {
                    let f = enc.forward_tape(tape, &actor_vars[..4], obs)?;
                    (f, Some(f), &actor_vars[4..])
                }
                None => (tape.constant(obs.clone()), None, &actor_vars[..]),
            };
            let out = a.model.forward_tape(tape, model_vars, features)?;
            let mut parts = [0.0; 4];
            let mut terms = Vec::new();
            if let Some(f) = embedding {
                let l = polar_loss(tape, f)?;
                parts[0] = tape.value(l).item();
                terms.push(tape.scale(l, aux_w.embedding_reg_lambda)?);
            }
            let l2 = weight_snap_loss(tape, model_vars[1])?;
            let l3 = polar_loss(tape, out.conj)?;
            let l4 = mt_loss(tape, out.disj_tanh, out.probs)?;
            parts[1] = tape.value(l2).item();
            parts[2] = tape.value(l3).item();
            parts[3] = tape.value(l4).item();
            terms.push(tape.scale(l2, aux_w.dis_weight_reg_lambda)?);
            terms.push(tape.scale(l3, aux_w.conj_tanh_out_reg_lambda)?);
            terms.push(tape.scale(l4, aux_w.mt_lambda)?);
            let mut total = terms[0];
            for &t in &terms[1..] {
                total = tape.add(total, t)?;
            }
            (out.log_probs, out.probs, features, Some((total, parts)))
        }
        Actor::Mlp(m) => {
            let x = tape.constant(obs.clone());
            let logits = m.net.forward_tape(tape, &actor_vars, x)?;
            let lp = tape.row_log_softmax(logits)?;
            let p = tape.row_softmax(logits)?;
            (lp, p, x, None)
        }
    };
    let (critic_vars, values) = match critic {
        Some(c) => {
            let vars = tape.params(&c.net.params());
            let v = c.net.forward_tape(tape, &vars, features)?;
            let v = tape.reshape(v, vec![obs.rows()])?;
            (vars, v)
        }
        None => (Vec::new(), tape.constant(Tensor::zeros(&[obs.rows()]))),
    };
    Ok(TapeForward { actor_vars, critic_vars, log_probs, probs, values, aux })
}

/// Draws an index from a categorical distribution.
pub fn sample_categorical(probs: &[f64], rng: &mut impl Rng) -> usize {
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    for (i, p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    probs.len() - 1
}

/// Result of a PPO run.
#[derive(Debug, Clone)]
pub struct PpoOutcome {
    pub agent: PpoAgent,
    pub metrics: Vec<IterationMetrics>,
}

/// Trains a fresh agent for `spec` with PPO.
pub fn train_ppo(spec: EnvSpec, cfg: &PpoConfig, model: &ModelConfig, seed: u64) -> Result<PpoOutcome, TrainingError> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let agent = PpoAgent::new(spec, model, cfg.delta.initial_delta, &mut rng);
    train_ppo_from(spec, cfg, agent, seed)
}

/// Continues PPO training from an existing agent.
pub fn train_ppo_from(spec: EnvSpec, cfg: &PpoConfig, mut agent: PpoAgent, seed: u64) -> Result<PpoOutcome, TrainingError> {
    cfg.validate()?;
    let mut envs = VecEnv::new(spec, cfg.num_envs, derive_seed(seed, ENV_STREAM))?;
    if envs.obs_width() != agent.actor.obs_width() {
        return Err(TrainingError::Mismatch(format!(
            "actor expects {} observation values, {spec} provides {}",
            agent.actor.obs_width(),
            envs.obs_width()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, ACTION_STREAM));
    let scheduler = cfg.delta.scheduler();
    let iterations = cfg.iterations();
    let mut actor_opt = AdamState::new(&agent.actor.params(), cfg.actor_lr());
    let mut critic_opt = AdamState::new(&agent.critic.net.params(), cfg.critic_lr());
    let (n_envs, n_steps) = (cfg.num_envs, cfg.num_steps);
    let width = envs.obs_width();
    let mut metrics = Vec::with_capacity(iterations as usize);
    let mut global_step = 0u64;

    for it in 0..iterations {
        let delta = scheduler.value(it);
        if let Actor::NdnfMt(a) = &mut agent.actor {
            a.model.set_delta(delta);
        }
        let frac = if cfg.anneal_lr { 1.0 - it as f64 / iterations as f64 } else { 1.0 };
        actor_opt.learning_rate = frac * cfg.actor_lr();
        critic_opt.learning_rate = frac * cfg.critic_lr();

        // Rollout.
        let mut obs_buf = Vec::with_capacity(n_steps * n_envs * width);
        let mut actions = vec![vec![0usize; n_envs]; n_steps];
        let mut logps = vec![vec![0.0; n_envs]; n_steps];
        let mut values = vec![vec![0.0; n_envs]; n_steps];
        let mut rewards = vec![vec![0.0; n_envs]; n_steps];
        let mut dones = vec![vec![false; n_envs]; n_steps];
        let mut finished = Vec::new();
        for t in 0..n_steps {
            let obs = Tensor::from_rows(envs.observations());
            obs_buf.extend_from_slice(obs.data());
            let probs = agent.actor.probs_batch(&obs)?;
            let v = agent.critic.values(&agent.actor.features(&obs)?)?;
            for e in 0..n_envs {
                let p = probs.row(e);
                let a = sample_categorical(p, &mut rng);
                actions[t][e] = a;
                logps[t][e] = p[a].ln();
            }
            values[t] = v;
            let step = envs.step(&actions[t])?;
            global_step += n_envs as u64;
            for e in 0..n_envs {
                rewards[t][e] = step.rewards[e];
                dones[t][e] = step.terminated[e] || step.truncated[e];
                if step.truncated[e] && !step.terminated[e] {
                    if let Some(last) = &step.final_obs[e] {
                        let f = agent.actor.features(&Tensor::matrix(1, width, last.clone()))?;
                        rewards[t][e] += cfg.gamma * agent.critic.values(&f)?[0];
                    }
                }
            }
            finished.extend(step.completed.iter().map(|c| c.1));
        }
        let last_obs = Tensor::from_rows(envs.observations());
        let next_values = agent.critic.values(&agent.actor.features(&last_obs)?)?;
        let (adv, ret) = gae(&rewards, &values, &dones, &next_values, cfg.gamma, cfg.gae_lambda);

        // Flatten time-major.
        let flat = |x: &[Vec<f64>]| x.iter().flatten().copied().collect::<Vec<f64>>();
        let b_actions: Vec<usize> = actions.iter().flatten().copied().collect();
        let (b_logp, b_adv, b_ret, b_val) = (flat(&logps), flat(&adv), flat(&ret), flat(&values));

        // Update.
        let batch = cfg.batch_size();
        let mb = cfg.minibatch_size();
        let mut idx: Vec<usize> = (0..batch).collect();
        let mut acc = [0.0; 9];
        let mut count = 0.0;
        for _ in 0..cfg.update_epochs {
            idx.shuffle(&mut rng);
            for chunk in idx.chunks(mb) {
                let mut obs = Vec::with_capacity(chunk.len() * width);
                for &i in chunk {
                    obs.extend_from_slice(&obs_buf[i * width..(i + 1) * width]);
                }
                let obs = Tensor::matrix(chunk.len(), width, obs);
                let lb = LossBatch {
                    actions: chunk.iter().map(|&i| b_actions[i]).collect(),
                    old_log_probs: chunk.iter().map(|&i| b_logp[i]).collect(),
                    advantages: chunk.iter().map(|&i| b_adv[i]).collect(),
                    returns: chunk.iter().map(|&i| b_ret[i]).collect(),
                    old_values: chunk.iter().map(|&i| b_val[i]).collect(),
                };
                let mut tape = Tape::new();
                let fwd = forward_on_tape(&mut tape, &agent.actor, Some(&agent.critic), &obs, &cfg.aux)?;
                let terms = ppo_loss(&mut tape, fwd.log_probs, fwd.probs, fwd.values, &lb, cfg)?;
                let mut total = terms.total;
                let mut parts = [0.0; 4];
                if let Some((aux, p)) = fwd.aux {
                    total = tape.add(total, aux)?;
                    parts = p;
                }
                let loss = tape.value(total).item();
                if !loss.is_finite() {
                    return Err(TrainingError::NonFinite { iteration: it, detail: format!("loss = {loss}") });
                }
                let new_logp = tape.value(fwd.log_probs);
                let kl: f64 = lb
                    .actions
                    .iter()
                    .enumerate()
                    .map(|(r, &a)| {
                        let lr = new_logp.get2(r, a) - lb.old_log_probs[r];
                        lr.exp() - 1.0 - lr
                    })
                    .sum::<f64>()
                    / chunk.len() as f64;
                let grads = tape.backward(total).map_err(|e| TrainingError::from_autodiff(e, it))?;
                let mut all = grads.get_many(&fwd.actor_vars);
                let n_actor = all.len();
                all.extend(grads.get_many(&fwd.critic_vars));
                clip_grad_norm(&mut all, cfg.max_grad_norm);
                let critic_grads = all.split_off(n_actor);
                actor_opt.step(&mut agent.actor.params_mut(), &all)?;
                critic_opt.step(&mut agent.critic.net.params_mut(), &critic_grads)?;
                let vals = [
                    loss,
                    tape.value(terms.policy).item(),
                    tape.value(terms.value).item(),
                    tape.value(terms.entropy).item(),
                    parts[0],
                    parts[1],
                    parts[2],
                    parts[3],
                    kl,
                ];
                acc.iter_mut().zip(vals).for_each(|(a, v)| *a += v);
                count += 1.0;
            }
        }
        let m = |i: usize| acc[i] / count;
        metrics.push(IterationMetrics {
            iteration: it,
            global_step,
            episodes: finished.len(),
            episodic_return_mean: (!finished.is_empty()).then(|| finished.iter().sum::<f64>() / finished.len() as f64),
            loss: m(0),
            policy_loss: m(1),
            value_loss: m(2),
            entropy: m(3),
            aux_embedding: m(4),
            aux_dis_weight: m(5),
            aux_conj_tanh: m(6),
            aux_mt: m(7),
            approx_kl: m(8),
            delta,
            learning_rate: actor_opt.learning_rate,
        });
    }
    if let Actor::NdnfMt(a) = &mut agent.actor {
        a.model.set_delta(scheduler.value(iterations));
    }
    Ok(PpoOutcome { agent, metrics })
}
