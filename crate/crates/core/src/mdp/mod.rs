//! Deterministic generative models.
//!
//! A model exposes a pure `(state, action) -> (next state, reward)` map over a
//! finite action set. Everything downstream (tree expansion, rollouts,
//! objectives) only talks to models through [`GenerativeModel`].

mod chain_walk;
mod double_integrator;
mod pendulum;

use std::fmt;
use std::ops::Deref;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use chain_walk::{value_iteration_oracle, ChainWalk, FiniteHorizonPolicy};
pub use double_integrator::DoubleIntegrator;
pub use pendulum::PendulumSwingup;

/// A point in a model's state space.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct StateVector(pub Vec<f64>);

impl StateVector {
    pub fn new(values: Vec<f64>) -> Self {
        StateVector(values)
    }

    pub fn dimension(&self) -> usize {
        self.0.len()
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }
}

impl Deref for StateVector {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl From<Vec<f64>> for StateVector {
    fn from(values: Vec<f64>) -> Self {
        StateVector(values)
    }
}

/// Index into a model's discrete action set.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ActionId(pub usize);

impl ActionId {
    pub fn index(self) -> usize {
        self.0
    }
}

impl fmt::Display for ActionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Deterministic simulator contract.
///
/// Implementors provide [`transition`](Self::transition), which may assume its
/// inputs are valid; callers go through [`step`](Self::step), which checks them.
pub trait GenerativeModel: Send + Sync {
    fn name(&self) -> &str;

    fn state_dimension(&self) -> usize;

    fn action_count(&self) -> usize;

    /// Discount factor, strictly inside (0, 1).
    fn discount(&self) -> f64;

    /// Upper bound on any single reward.
    fn reward_upper_bound(&self) -> f64;

    /// Per-component scale used when states are turned into node features.
    fn state_normalizer(&self) -> &[f64];

    /// Unchecked dynamics. `state` has the right dimension and `action` is in range.
    fn transition(&self, state: &[f64], action: ActionId) -> (StateVector, f64);

    /// Draws one state from the declared initial region.
    fn sample_initial_state(&self, rng: &mut ChaCha8Rng) -> StateVector;

    /// Extra domain-specific validity check on incoming states.
    fn check_state(&self, _state: &[f64]) -> Result<()> {
        Ok(())
    }

    /// True when the initial region is a single point.
    fn has_single_initial_state(&self) -> bool {
        false
    }

    fn step(&self, state: &[f64], action: ActionId) -> Result<(StateVector, f64)> {
        if state.len() != self.state_dimension() {
            return Err(Error::contract(format!(
                "{}: state has dimension {}, expected {}",
                self.name(),
                state.len(),
                self.state_dimension()
            )));
        }
        if action.0 >= self.action_count() {
            return Err(Error::contract(format!(
                "{}: action {} out of range [0, {})",
                self.name(),
                action.0,
                self.action_count()
            )));
        }
        self.check_state(state)?;
        Ok(self.transition(state, action))
    }

    /// `count` states from the initial region, reproducible from `seed`.
    fn initial_states(&self, count: usize, seed: u64) -> Result<Vec<StateVector>> {
        if count == 0 {
            return Err(Error::contract("initial_states: count must be at least 1"));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Ok((0..count).map(|_| self.sample_initial_state(&mut rng)).collect())
    }

    /// Length of the node feature vector used by linear scorers.
    fn feature_dimension(&self) -> usize {
        4 + self.state_dimension()
    }
}

/// Registry of the built-in domains, selectable by string key.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "key", rename_all = "snake_case", deny_unknown_fields)]
pub enum Domain {
    DoubleIntegrator(DoubleIntegrator),
    PendulumSwingup(PendulumSwingup),
    ChainWalk(ChainWalk),
}

impl Domain {
    pub const KEYS: [&'static str; 3] = ["double_integrator", "pendulum_swingup", "chain_walk"];

    /// Default-parameter domain for `key`.
    pub fn from_key(key: &str) -> Result<Domain> {
        match key {
            "double_integrator" => Ok(Domain::DoubleIntegrator(DoubleIntegrator::default())),
            "pendulum_swingup" => Ok(Domain::PendulumSwingup(PendulumSwingup::default())),
            "chain_walk" => Ok(Domain::ChainWalk(ChainWalk::default())),
            other => Err(Error::UnsupportedDomain {
                domain: other.to_string(),
                reason: format!("known keys are {}", Domain::KEYS.join(", ")),
            }),
        }
    }

    pub fn key(&self) -> &'static str {
        match self {
            Domain::DoubleIntegrator(_) => "double_integrator",
            Domain::PendulumSwingup(_) => "pendulum_swingup",
            Domain::ChainWalk(_) => "chain_walk",
        }
    }

    /// Checks construction parameters.
    pub fn validate(&self) -> Result<()> {
        let discount = self.discount();
        if !(discount > 0.0 && discount < 1.0) {
            return Err(Error::Config(format!(
                "{}: discount must lie in (0, 1), got {discount}",
                self.key()
            )));
        }
        match self {
            Domain::DoubleIntegrator(m) => m.validate(),
            Domain::PendulumSwingup(m) => m.validate(),
            Domain::ChainWalk(m) => m.validate(),
        }
    }

    fn inner(&self) -> &dyn GenerativeModel {
        match self {
            Domain::DoubleIntegrator(m) => m,
            Domain::PendulumSwingup(m) => m,
            Domain::ChainWalk(m) => m,
        }
    }
}

impl GenerativeModel for Domain {
    fn name(&self) -> &str {
        self.key()
    }

    fn state_dimension(&self) -> usize {
        self.inner().state_dimension()
    }

    fn action_count(&self) -> usize {
        self.inner().action_count()
    }

    fn discount(&self) -> f64 {
        self.inner().discount()
    }

    fn reward_upper_bound(&self) -> f64 {
        self.inner().reward_upper_bound()
    }

    fn state_normalizer(&self) -> &[f64] {
        self.inner().state_normalizer()
    }

    fn transition(&self, state: &[f64], action: ActionId) -> (StateVector, f64) {
        self.inner().transition(state, action)
    }

    fn sample_initial_state(&self, rng: &mut ChaCha8Rng) -> StateVector {
        self.inner().sample_initial_state(rng)
    }

    fn check_state(&self, state: &[f64]) -> Result<()> {
        self.inner().check_state(state)
    }

    fn has_single_initial_state(&self) -> bool {
        self.inner().has_single_initial_state()
    }
}
