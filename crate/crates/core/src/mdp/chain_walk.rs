use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{ActionId, Domain, GenerativeModel, StateVector};
use crate::error::{Error, Result};

/// Chain of `states` cells. Action 0 moves right, action 1 moves left; both
/// saturate at the ends. Reward 1 whenever the move lands on the last cell.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(from = "ChainWalkParams", into = "ChainWalkParams")]
pub struct ChainWalk {
    pub states: usize,
    pub discount: f64,
    normalizer: [f64; 1],
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChainWalkParams {
    pub states: usize,
    pub discount: f64,
}

impl Default for ChainWalkParams {
    fn default() -> Self {
        ChainWalkParams { states: 5, discount: 0.9 }
    }
}

impl From<ChainWalkParams> for ChainWalk {
    fn from(p: ChainWalkParams) -> Self {
        ChainWalk::new(p.states, p.discount)
    }
}

impl From<ChainWalk> for ChainWalkParams {
    fn from(m: ChainWalk) -> Self {
        ChainWalkParams { states: m.states, discount: m.discount }
    }
}

impl Default for ChainWalk {
    fn default() -> Self {
        ChainWalkParams::default().into()
    }
}

impl ChainWalk {
    pub const RIGHT: ActionId = ActionId(0);
    pub const LEFT: ActionId = ActionId(1);

    pub fn new(states: usize, discount: f64) -> Self {
        let scale = states.saturating_sub(1).max(1) as f64;
        ChainWalk { states, discount, normalizer: [scale] }
    }

    pub(crate) fn validate(&self) -> Result<()> {
        if self.states < 2 {
            return Err(Error::Config("chain_walk: need at least 2 states".into()));
        }
        Ok(())
    }

    fn next_cell(&self, cell: usize, action: ActionId) -> usize {
        if action == Self::RIGHT {
            (cell + 1).min(self.states - 1)
        } else {
            cell.saturating_sub(1)
        }
    }

    fn reward_for(&self, next: usize) -> f64 {
        if next == self.states - 1 {
            1.0
        } else {
            0.0
        }
    }
}

impl GenerativeModel for ChainWalk {
    fn name(&self) -> &str {
        "chain_walk"
    }

    fn state_dimension(&self) -> usize {
        1
    }

    fn action_count(&self) -> usize {
        2
    }

    fn discount(&self) -> f64 {
        self.discount
    }

    fn reward_upper_bound(&self) -> f64 {
        1.0
    }

    fn state_normalizer(&self) -> &[f64] {
        &self.normalizer
    }

    fn check_state(&self, state: &[f64]) -> Result<()> {
        let c = state[0];
        if c.fract() != 0.0 || c < 0.0 || c >= self.states as f64 {
            return Err(Error::contract(format!(
                "chain_walk: {c} is not a cell index in [0, {})",
                self.states
            )));
        }
        Ok(())
    }

    fn transition(&self, state: &[f64], action: ActionId) -> (StateVector, f64) {
        let next = self.next_cell(state[0] as usize, action);
        (StateVector(vec![next as f64]), self.reward_for(next))
    }

    fn sample_initial_state(&self, _rng: &mut ChaCha8Rng) -> StateVector {
        StateVector(vec![0.0])
    }

    fn has_single_initial_state(&self) -> bool {
        true
    }
}

/// Exact finite-horizon solution of a chain walk by backward induction.
#[derive(Clone, Debug)]
pub struct FiniteHorizonPolicy {
    pub horizon: usize,
    /// `values[k][s]`: optimal return from cell `s` with `k` steps remaining.
    pub values: Vec<Vec<f64>>,
    /// `q[k - 1][s][a]` for `k` in `1..=horizon`.
    pub q: Vec<Vec<Vec<f64>>>,
    chain: ChainWalk,
}

impl FiniteHorizonPolicy {
    /// Optimal action with `remaining` steps to go; ties go to the lowest index.
    /// `None` once no steps remain.
    pub fn action(&self, cell: usize, remaining: usize) -> Option<ActionId> {
        self.optimal_actions(cell, remaining).first().copied()
    }

    /// Every action attaining the optimal Q-value.
    pub fn optimal_actions(&self, cell: usize, remaining: usize) -> Vec<ActionId> {
        if remaining == 0 || remaining > self.horizon {
            return Vec::new();
        }
        let q = &self.q[remaining - 1][cell];
        let best = q.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        (0..q.len()).filter(|&a| q[a] == best).map(ActionId).collect()
    }

    pub fn value(&self, cell: usize, remaining: usize) -> f64 {
        self.values[remaining][cell]
    }

    /// `(cell, remaining)` pairs reachable from `start` under some action sequence.
    pub fn reachable_pairs(&self, start: usize) -> Vec<(usize, usize)> {
        let mut frontier = vec![start];
        let mut pairs = Vec::new();
        for remaining in (1..=self.horizon).rev() {
            frontier.sort_unstable();
            frontier.dedup();
            let mut next = Vec::new();
            for &cell in &frontier {
                pairs.push((cell, remaining));
                for a in 0..2 {
                    next.push(self.chain.next_cell(cell, ActionId(a)));
                }
            }
            frontier = next;
        }
        pairs
    }

    /// Max absolute change of one more Bellman sweep over the stored values.
    pub fn bellman_residual(&self) -> f64 {
        let gamma = self.chain.discount;
        let mut worst: f64 = 0.0;
        for k in 1..=self.horizon {
            for s in 0..self.chain.states {
                let backup = (0..2)
                    .map(|a| {
                        let next = self.chain.next_cell(s, ActionId(a));
                        self.chain.reward_for(next) + gamma * self.values[k - 1][next]
                    })
                    .fold(f64::NEG_INFINITY, f64::max);
                worst = worst.max((backup - self.values[k][s]).abs());
            }
        }
        worst
    }
}

/// Backward induction over `(cell, remaining steps)` for a chain walk domain.
pub fn value_iteration_oracle(domain: &Domain, horizon: usize) -> Result<FiniteHorizonPolicy> {
    let chain = match domain {
        Domain::ChainWalk(c) => c.clone(),
        other => {
            return Err(Error::UnsupportedDomain {
                domain: other.key().to_string(),
                reason: "value iteration needs a finite state space".into(),
            })
        }
    };
    chain.validate()?;
    let n = chain.states;
    let gamma = chain.discount;
    let mut values = vec![vec![0.0; n]];
    let mut q = Vec::with_capacity(horizon);
    for k in 1..=horizon {
        let prev = &values[k - 1];
        let qk: Vec<Vec<f64>> = (0..n)
            .map(|s| {
                (0..2)
                    .map(|a| {
                        let next = chain.next_cell(s, ActionId(a));
                        chain.reward_for(next) + gamma * prev[next]
                    })
                    .collect()
            })
            .collect();
        let vk = qk.iter().map(|row| row.iter().cloned().fold(f64::NEG_INFINITY, f64::max)).collect();
        q.push(qk);
        values.push(vk);
    }
    Ok(FiniteHorizonPolicy { horizon, values, q, chain })
}
