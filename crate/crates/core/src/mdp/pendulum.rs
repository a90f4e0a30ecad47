use std::f64::consts::PI;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{ActionId, GenerativeModel, StateVector};
use crate::error::{Error, Result};

const TORQUES: [f64; 3] = [-2.0, 0.0, 2.0];
const GRAVITY: f64 = 9.81;
const MASS: f64 = 1.0;
const LENGTH: f64 = 1.0;
const MAX_SPEED: f64 = 8.0;

/// Wraps an angle into `[-π, π)`.
pub fn wrap_angle(theta: f64) -> f64 {
    (theta + PI).rem_euclid(2.0 * PI) - PI
}

/// Torque-limited pendulum; angle 0 is upright.
///
/// `θ̈ = (g/l)·sin θ + u/(m·l²)`, explicit Euler with step `dt`, angle kept
/// wrapped, angular velocity clamped to ±8. Reward
/// `-(θ² + 0.1·θ̇² + 0.001·u²)` on the pre-transition state.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(from = "PendulumParams", into = "PendulumParams")]
pub struct PendulumSwingup {
    pub dt: f64,
    pub discount: f64,
    normalizer: [f64; 2],
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PendulumParams {
    pub dt: f64,
    pub discount: f64,
}

impl Default for PendulumParams {
    fn default() -> Self {
        PendulumParams { dt: 0.05, discount: 0.95 }
    }
}

impl From<PendulumParams> for PendulumSwingup {
    fn from(p: PendulumParams) -> Self {
        PendulumSwingup { dt: p.dt, discount: p.discount, normalizer: [PI, MAX_SPEED] }
    }
}

impl From<PendulumSwingup> for PendulumParams {
    fn from(m: PendulumSwingup) -> Self {
        PendulumParams { dt: m.dt, discount: m.discount }
    }
}

impl Default for PendulumSwingup {
    fn default() -> Self {
        PendulumParams::default().into()
    }
}

impl PendulumSwingup {
    pub fn torque(action: ActionId) -> f64 {
        TORQUES[action.0]
    }

    pub(crate) fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::Config("pendulum_swingup: dt must be positive".into()));
        }
        Ok(())
    }
}

impl GenerativeModel for PendulumSwingup {
    fn name(&self) -> &str {
        "pendulum_swingup"
    }

    fn state_dimension(&self) -> usize {
        2
    }

    fn action_count(&self) -> usize {
        TORQUES.len()
    }

    fn discount(&self) -> f64 {
        self.discount
    }

    fn reward_upper_bound(&self) -> f64 {
        0.0
    }

    fn state_normalizer(&self) -> &[f64] {
        &self.normalizer
    }

    fn transition(&self, state: &[f64], action: ActionId) -> (StateVector, f64) {
        let theta = wrap_angle(state[0]);
        let omega = state[1];
        let u = Self::torque(action);
        let accel = (GRAVITY / LENGTH) * theta.sin() + u / (MASS * LENGTH * LENGTH);
        let theta_next = wrap_angle(theta + self.dt * omega);
        let omega_next = (omega + self.dt * accel).clamp(-MAX_SPEED, MAX_SPEED);
        let reward = -(theta * theta + 0.1 * omega * omega + 0.001 * u * u);
        (StateVector(vec![theta_next, omega_next]), reward)
    }

    fn sample_initial_state(&self, rng: &mut ChaCha8Rng) -> StateVector {
        StateVector(vec![rng.random_range(-PI..=PI), 0.0])
    }
}
