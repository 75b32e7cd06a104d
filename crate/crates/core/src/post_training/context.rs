use std::collections::HashSet;

use super::PostTrainError;
use crate::env::{DoorCorridor, EnvSpec, Switcheroo, SwitcherooConfig, Taxi};
use crate::evaluation::blackjack_grid_observations;
use crate::neural::{argmax, NdnfMtActor};

/// `observations` without repeats, in first-seen order.
pub(crate) fn dedup(observations: impl IntoIterator<Item = Vec<f64>>) -> Vec<Vec<f64>> {
    let mut seen = HashSet::new();
    observations
        .into_iter()
        .filter(|o| seen.insert(o.iter().map(|v| v.to_bits()).collect::<Vec<_>>()))
        .collect()
}

/// Distinct observations met while following the actor's greedy action from
/// the reset state, and whether the episode terminated.
pub fn greedy_trajectory(actor: &NdnfMtActor, spec: EnvSpec) -> Result<(Vec<Vec<f64>>, bool), PostTrainError> {
    let mut env = spec.build();
    env.seed(0);
    let mut obs = env.reset();
    let mut visited = vec![obs.clone()];
    loop {
        let a = argmax(&actor.probs(&obs)?);
        let step = env.step(a)?;
        if step.terminated || step.truncated {
            return Ok((dedup(visited), step.terminated));
        }
        obs = step.obs;
        visited.push(obs.clone());
    }
}

/// Observations the post-training checks run on: every reachable
/// observation for Switcheroo and Taxi, the policy-grid states for
/// Blackjack, and the discretised actor's greedy trajectory for Door
/// Corridor (which needs `actor`).
pub fn context_observations(spec: EnvSpec, actor: Option<&NdnfMtActor>) -> Result<Vec<Vec<f64>>, PostTrainError> {
    Ok(match spec {
        EnvSpec::Switcheroo { layout, obs } => Switcheroo::new(SwitcherooConfig::preset(layout, obs)).all_observations(),
        EnvSpec::Blackjack => blackjack_grid_observations(),
        EnvSpec::Taxi => Taxi::reachable_states().into_iter().map(Taxi::obs_of).collect(),
        EnvSpec::DoorCorridor(_) => {
            let actor = actor.ok_or_else(|| PostTrainError::Config("Door Corridor context needs the actor".into()))?;
            let mut a = actor.clone();
            if let Some(e) = a.encoder.as_mut() {
                e.discretise();
            }
            greedy_trajectory(&a, spec)?.0
        }
    })
}

/// Raw observations used to define invented predicates: every observation
/// reachable in Door Corridor, nothing elsewhere.
pub fn definition_observations(spec: EnvSpec) -> Option<Vec<Vec<f64>>> {
    match spec {
        EnvSpec::DoorCorridor(v) => Some(DoorCorridor::reachable_observations(v)),
        _ => None,
    }
}
