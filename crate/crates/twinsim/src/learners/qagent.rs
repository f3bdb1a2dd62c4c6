//! Tabular double Q-learning.
//!
//! Two tables A and B over a discrete state/action grid. Action selection is
//! epsilon-greedy over (A + B) / 2 with ties broken toward the lowest action
//! index. Updates follow the double-estimator rule: with probability 1/2,
//! table A moves toward `r + gamma * B[s', argmax_a A[s', a]]`, else the
//! symmetric update on B.

use crate::rng::RandomStream;
use rand::Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct QAgent {
    pub n_states: usize,
    pub n_actions: usize,
    pub epsilon: f64,
    pub alpha: f64,
    pub gamma: f64,
    q_a: Vec<Vec<f64>>,
    q_b: Vec<Vec<f64>>,
}

fn argmax_lowest(row: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in row.iter().enumerate() {
        if *v > row[best] {
            best = i;
        }
    }
    best
}

impl QAgent {
    pub fn new(n_states: usize, n_actions: usize, epsilon: f64, alpha: f64, gamma: f64) -> Self {
        Self {
            n_states,
            n_actions,
            epsilon,
            alpha,
            gamma,
            q_a: vec![vec![0.0; n_actions]; n_states],
            q_b: vec![vec![0.0; n_actions]; n_states],
        }
    }

    /// Mean of the two tables at (s, a).
    pub fn q_mean(&self, s: usize, a: usize) -> f64 {
        (self.q_a[s][a] + self.q_b[s][a]) / 2.0
    }

    /// Epsilon-greedy action at state `s`; ties resolve to the lowest index.
    pub fn select_action(&self, s: usize, rng: &mut RandomStream) -> usize {
        if self.epsilon > 0.0 && rng.gen::<f64>() < self.epsilon {
            return rng.gen_range(0..self.n_actions);
        }
        let means: Vec<f64> = (0..self.n_actions).map(|a| self.q_mean(s, a)).collect();
        argmax_lowest(&means)
    }

    /// Greedy action without exploration.
    pub fn greedy_action(&self, s: usize) -> usize {
        let means: Vec<f64> = (0..self.n_actions).map(|a| self.q_mean(s, a)).collect();
        argmax_lowest(&means)
    }

    /// Double-Q update for transition (s, a, reward, s').
    pub fn update(&mut self, s: usize, a: usize, reward: f64, s_next: usize, rng: &mut RandomStream) {
        let update_a: bool = rng.gen::<f64>() < 0.5;
        let (self_t, other_t) = if update_a {
            (&mut self.q_a, &self.q_b)
        } else {
            (&mut self.q_b, &self.q_a)
        };
        let a_star = argmax_lowest(&self_t[s_next]);
        let target = reward + self.gamma * other_t[s_next][a_star];
        self_t[s][a] += self.alpha * (target - self_t[s][a]);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_stream;

    #[test]
    fn alpha_one_gamma_zero_sets_entry_to_reward() {
        let mut agent = QAgent::new(2, 2, 0.0, 1.0, 0.0);
        let mut rng = rng_stream(1, "agent-explore");
        agent.update(0, 1, 1.0, 1, &mut rng);
        // Exactly one of the tables took the update.
        assert_eq!(agent.q_a[0][1] + agent.q_b[0][1], 1.0);
        assert!(agent.q_a[0][1] == 1.0 || agent.q_b[0][1] == 1.0);
    }

    #[test]
    fn zero_rewards_keep_tables_zero() {
        let mut agent = QAgent::new(3, 2, 0.0, 0.5, 0.9);
        let mut rng = rng_stream(2, "agent-explore");
        for i in 0..1000 {
            agent.update(i % 3, i % 2, 0.0, (i + 1) % 3, &mut rng);
        }
        assert!(agent.q_a.iter().flatten().all(|v| *v == 0.0));
        assert!(agent.q_b.iter().flatten().all(|v| *v == 0.0));
    }

    #[test]
    fn greedy_picks_dominant_entry() {
        let mut agent = QAgent::new(1, 3, 0.0, 1.0, 0.0);
        agent.q_a[0][2] = 5.0;
        agent.q_b[0][2] = 5.0;
        let mut rng = rng_stream(3, "agent-explore");
        for _ in 0..100 {
            assert_eq!(agent.select_action(0, &mut rng), 2);
        }
    }

    #[test]
    fn ties_break_to_lowest_action() {
        let agent = QAgent::new(1, 4, 0.0, 1.0, 0.0);
        assert_eq!(agent.greedy_action(0), 0);
    }

    #[test]
    fn full_exploration_is_uniform() {
        let agent = QAgent::new(1, 4, 1.0, 0.5, 0.9);
        let mut rng = rng_stream(4, "agent-explore");
        let n = 10_000;
        let mut counts = [0usize; 4];
        for _ in 0..n {
            counts[agent.select_action(0, &mut rng)] += 1;
        }
        // Multinomial 3-sigma band around n/4.
        let p = 0.25;
        let sigma = (n as f64 * p * (1.0 - p)).sqrt();
        for c in counts {
            assert!(
                (c as f64 - n as f64 * p).abs() < 3.0 * sigma,
                "counts={counts:?}"
            );
        }
    }

    #[test]
    fn boundedness_with_rewards_in_range() {
        let r_max = 1.0;
        let gamma = 0.9;
        let mut agent = QAgent::new(4, 3, 0.3, 0.5, gamma);
        let mut rng = rng_stream(5, "agent-explore");
        let mut explore = rng_stream(6, "agent-explore");
        let mut s = 0;
        for _ in 0..20_000 {
            let a = agent.select_action(s, &mut explore);
            let s_next = (s + a + 1) % 4;
            let reward = rng.gen::<f64>() * r_max;
            agent.update(s, a, reward, s_next, &mut rng);
            s = s_next;
        }
        let bound = r_max / (1.0 - gamma) + 1e-9;
        for row in agent.q_a.iter().chain(agent.q_b.iter()) {
            for v in row {
                assert!(*v >= 0.0 && *v <= bound, "v={v}");
            }
        }
    }

    /// 2-state, 2-action MDP with a known optimum, checked against a value
    /// iteration oracle.
    #[test]
    fn matches_value_iteration_on_small_mdp() {
        // Deterministic MDP: action 0 stays, action 1 switches state.
        // Rewards: r(s=0,a=1)=1.0, r(s=1,a=1)=0.2, r(_,0)=0.1.
        let reward = |s: usize, a: usize| -> f64 {
            match (s, a) {
                (0, 1) => 1.0,
                (1, 1) => 0.2,
                _ => 0.1,
            }
        };
        let next = |s: usize, a: usize| -> usize { if a == 1 { 1 - s } else { s } };
        let gamma = 0.9;

        // Value-iteration oracle.
        let mut v = [0.0f64; 2];
        for _ in 0..10_000 {
            let mut nv = [0.0f64; 2];
            for s in 0..2 {
                nv[s] = (0..2)
                    .map(|a| reward(s, a) + gamma * v[next(s, a)])
                    .fold(f64::NEG_INFINITY, f64::max);
            }
            v = nv;
        }
        let oracle_policy: Vec<usize> = (0..2)
            .map(|s| {
                let q0 = reward(s, 0) + gamma * v[next(s, 0)];
                let q1 = reward(s, 1) + gamma * v[next(s, 1)];
                usize::from(q1 > q0)
            })
            .collect();

        let mut wins = 0;
        for seed in 0..10 {
            let mut agent = QAgent::new(2, 2, 0.2, 0.1, gamma);
            let mut rng = rng_stream(seed, "agent-explore");
            let mut s = 0;
            for _ in 0..10_000 {
                let a = agent.select_action(s, &mut rng);
                let s_next = next(s, a);
                agent.update(s, a, reward(s, a), s_next, &mut rng);
                s = s_next;
            }
            let learned: Vec<usize> = (0..2).map(|s| agent.greedy_action(s)).collect();
            if learned == oracle_policy {
                wins += 1;
            }
        }
        assert!(wins >= 9, "wins={wins}/10");
    }
}
