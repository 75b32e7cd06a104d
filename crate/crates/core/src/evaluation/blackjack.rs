use std::collections::BTreeMap;

use super::policy::Policy;
use super::EvalError;
use crate::env::BlackjackState;

/// Probability of each card value 1–10 in an infinite deck.
fn card_prob(c: usize) -> f64 {
    if c == 10 {
        4.0 / 13.0
    } else {
        1.0 / 13.0
    }
}

/// Distribution of the dealer's final total (index 0 = bust, otherwise
/// 17–21 at index `total − 16`) given the showing card.
fn dealer_outcomes(showing: usize) -> [f64; 6] {
    fn go(hard: usize, ace: bool, p: f64, out: &mut [f64; 6]) {
        let value = if ace && hard + 10 <= 21 { hard + 10 } else { hard };
        if value > 21 {
            out[0] += p;
        } else if value >= 17 {
            out[value - 16] += p;
        } else {
            for c in 1..=10 {
                go(hard + c, ace || c == 1, p * card_prob(c), out);
            }
        }
    }
    let mut out = [0.0; 6];
    for c in 1..=10 {
        go(showing + c, showing == 1 || c == 1, card_prob(c), &mut out);
    }
    out
}

fn stick_value(sum: usize, dealer: &[f64; 6]) -> f64 {
    let mut v = dealer[0];
    for (i, p) in dealer.iter().enumerate().skip(1) {
        let d = i + 16;
        v += p * match sum.cmp(&d) {
            std::cmp::Ordering::Greater => 1.0,
            std::cmp::Ordering::Less => -1.0,
            std::cmp::Ordering::Equal => 0.0,
        };
    }
    v
}

/// Optimal stick (0) / hit (1) decision for every grid state under exact
/// infinite-deck dynamics, with the action values behind it.
#[derive(Debug, Clone, PartialEq)]
pub struct BlackjackReference {
    pub actions: BTreeMap<BlackjackState, usize>,
    pub values: BTreeMap<BlackjackState, (f64, f64)>,
}

/// Solves Blackjack by dynamic programming over (sum, usable ace) per dealer
/// card. Ties go to sticking.
pub fn reference_blackjack_policy() -> BlackjackReference {
    let mut actions = BTreeMap::new();
    let mut values = BTreeMap::new();
    for dealer_card in 1..=10 {
        let dealer = dealer_outcomes(dealer_card);
        // v[usable][sum] for sums 4..=21, filled from high sums down; usable
        // states can fall back to non-usable ones of the same or lower sum, so
        // non-usable states are solved first.
        let mut v = [[0.0f64; 22]; 2];
        let mut q = [[(0.0f64, 0.0f64); 22]; 2];
        for usable in [false, true] {
            for sum in (4..=21).rev() {
                let stick = stick_value(sum, &dealer);
                let mut hit = 0.0;
                for c in 1..=10 {
                    let p = card_prob(c);
                    let (s2, u2) = if usable {
                        if sum + c > 21 {
                            (sum + c - 10, false)
                        } else {
                            (sum + c, true)
                        }
                    } else if c == 1 && sum + 11 <= 21 {
                        (sum + 11, true)
                    } else {
                        (sum + c, false)
                    };
                    hit += p * if s2 > 21 { -1.0 } else { v[usize::from(u2)][s2] };
                }
                q[usize::from(usable)][sum] = (stick, hit);
                v[usize::from(usable)][sum] = stick.max(hit);
            }
        }
        for usable_ace in [false, true] {
            for player_sum in 4..=21 {
                if usable_ace && player_sum < 12 {
                    continue;
                }
                let s = BlackjackState { player_sum, dealer_card, usable_ace };
                let (stick, hit) = q[usize::from(usable_ace)][player_sum];
                actions.insert(s, usize::from(hit > stick));
                values.insert(s, (stick, hit));
            }
        }
    }
    BlackjackReference { actions, values }
}

impl Policy for BlackjackReference {
    fn distribution(&self, obs: &[f64]) -> Result<Vec<f64>, EvalError> {
        let s = BlackjackState::decode(obs).ok_or_else(|| EvalError::Mismatch("not a Blackjack observation".into()))?;
        // Sums outside the grid (below 4) never occur; anything above 21 is over.
        let a = self.actions.get(&s).copied().unwrap_or(usize::from(s.player_sum < 12));
        let mut p = vec![0.0; 2];
        p[a] = 1.0;
        Ok(p)
    }
}

/// One cell of a Blackjack policy grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridCell {
    pub state: BlackjackState,
    pub p_hit: f64,
}

/// P(hit) on every grid state.
pub fn blackjack_policy_grid(policy: &dyn Policy) -> Result<Vec<GridCell>, EvalError> {
    BlackjackState::grid_states()
        .into_iter()
        .map(|s| Ok(GridCell { state: s, p_hit: policy.distribution(&s.encode())?[1] }))
        .collect()
}

pub fn grid_csv(cells: &[GridCell]) -> String {
    let mut out = String::from("player_sum,dealer_card,usable_ace,p_hit\n");
    for c in cells {
        out.push_str(&format!(
            "{},{},{},{:?}\n",
            c.state.player_sum,
            c.state.dealer_card,
            u8::from(c.state.usable_ace),
            c.p_hit
        ));
    }
    out
}

/// Encoded observations of the policy grid, the divergence state set.
pub fn blackjack_grid_observations() -> Vec<Vec<f64>> {
    BlackjackState::grid_states().iter().map(BlackjackState::encode).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dealer_distribution_sums_to_one() {
        for c in 1..=10 {
            let d = dealer_outcomes(c);
            assert!((d.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
        // Dealer showing 6 busts about 42% of the time.
        assert!((dealer_outcomes(6)[0] - 0.4228).abs() < 1e-3);
    }

    /// The textbook optimal policy (infinite deck, dealer stands on soft 17):
    /// hard totals stick from 17, from 13 against 2–6, from 12 against 4–6;
    /// soft totals stick from 19, and on 18 against 2–8.
    fn textbook(s: &BlackjackState) -> usize {
        let d = s.dealer_card;
        let sticks = if s.usable_ace {
            s.player_sum >= 19 || (s.player_sum == 18 && (2..=8).contains(&d))
        } else {
            s.player_sum >= 17 || (s.player_sum >= 13 && (2..=6).contains(&d)) || (s.player_sum == 12 && (4..=6).contains(&d))
        };
        usize::from(!sticks)
    }

    #[test]
    fn matches_textbook_stick_region() {
        let r = reference_blackjack_policy();
        let states: Vec<_> = r.actions.keys().filter(|s| s.player_sum >= 12).collect();
        let agree = states.iter().filter(|s| r.actions[**s] == textbook(s)).count();
        assert!(agree as f64 >= 0.95 * states.len() as f64, "{agree}/{}", states.len());
        assert!(r.actions.iter().filter(|(s, _)| s.player_sum == 21).all(|(_, &a)| a == 0));
        assert_eq!(r.actions.len(), 280);
    }

    #[test]
    fn always_hit_grid_is_ones() {
        struct Hit;
        impl Policy for Hit {
            fn distribution(&self, _: &[f64]) -> Result<Vec<f64>, EvalError> {
                Ok(vec![0.0, 1.0])
            }
        }
        let g = blackjack_policy_grid(&Hit).unwrap();
        assert_eq!(g.len(), 280);
        assert!(g.iter().all(|c| c.p_hit == 1.0));
        assert!(grid_csv(&g).lines().count() == 281);
    }
}
