/// Generalised advantage estimates for a `steps × envs` rollout stored
/// time-major. `dones[t][e]` marks that the episode ended at step `t`, so no
/// value is bootstrapped across it; truncated episodes are expected to have
/// their bootstrap value already folded into the reward.
pub fn gae(
    rewards: &[Vec<f64>],
    values: &[Vec<f64>],
    dones: &[Vec<bool>],
    next_values: &[f64],
    gamma: f64,
    lambda: f64,
) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let steps = rewards.len();
    let envs = next_values.len();
    let mut adv = vec![vec![0.0; envs]; steps];
    let mut last = vec![0.0; envs];
    for t in (0..steps).rev() {
        for e in 0..envs {
            let nonterminal = if dones[t][e] { 0.0 } else { 1.0 };
            let next_v = if t + 1 < steps { values[t + 1][e] } else { next_values[e] };
            let delta = rewards[t][e] + gamma * next_v * nonterminal - values[t][e];
            last[e] = delta + gamma * lambda * nonterminal * last[e];
            adv[t][e] = last[e];
        }
    }
    let returns = adv.iter().zip(values).map(|(a, v)| a.iter().zip(v).map(|(a, v)| a + v).collect()).collect();
    (adv, returns)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Direct double sum `Σₖ (γλ)^k δₜ₊ₖ`, stopping at the first done.
    fn brute(r: &[f64], v: &[f64], d: &[bool], next: f64, g: f64, l: f64) -> Vec<f64> {
        let n = r.len();
        let vn = |t: usize| if t + 1 < n { v[t + 1] } else { next };
        (0..n)
            .map(|t| {
                let mut total = 0.0;
                let mut w = 1.0;
                for k in t..n {
                    let nt = if d[k] { 0.0 } else { 1.0 };
                    total += w * (r[k] + g * vn(k) * nt - v[k]);
                    if d[k] {
                        break;
                    }
                    w *= g * l;
                }
                total
            })
            .collect()
    }

    fn col(x: &[f64]) -> Vec<Vec<f64>> {
        x.iter().map(|&v| vec![v]).collect()
    }

    #[test]
    fn lambda_zero_is_one_step_td() {
        let r = [1.0, -1.0, 0.5];
        let v = [0.2, 0.4, -0.3];
        let (a, ret) = gae(&col(&r), &col(&v), &vec![vec![false]; 3], &[0.7], 0.9, 0.0);
        let next = [0.4, -0.3, 0.7];
        for t in 0..3 {
            assert!((a[t][0] - (r[t] + 0.9 * next[t] - v[t])).abs() < 1e-12);
            assert!((ret[t][0] - a[t][0] - v[t]).abs() < 1e-12);
        }
    }

    #[test]
    fn gamma_zero_is_reward_minus_value() {
        let (a, _) = gae(&col(&[2.0, 3.0]), &col(&[0.5, 1.0]), &vec![vec![false]; 2], &[9.0], 0.0, 0.95);
        assert_eq!(a[0][0], 1.5);
        assert_eq!(a[1][0], 2.0);
    }

    proptest! {
        #[test]
        fn matches_brute_force(
            r in prop::collection::vec(-2.0..2.0f64, 5),
            v in prop::collection::vec(-2.0..2.0f64, 5),
            d in prop::collection::vec(any::<bool>(), 5),
            next in -2.0..2.0f64,
            g in 0.0..1.0f64,
            l in 0.0..1.0f64,
        ) {
            let dones: Vec<Vec<bool>> = d.iter().map(|&x| vec![x]).collect();
            let (a, _) = gae(&col(&r), &col(&v), &dones, &[next], g, l);
            let want = brute(&r, &v, &d, next, g, l);
            for t in 0..5 {
                prop_assert!((a[t][0] - want[t]).abs() < 1e-10);
            }
        }
    }
}
