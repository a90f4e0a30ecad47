use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{ActionId, GenerativeModel, StateVector};
use crate::error::{Error, Result};

const CONTROLS: [f64; 3] = [-1.0, 0.0, 1.0];

/// Unit mass on a line, pushed by u ∈ {-1, 0, +1}.
///
/// State `(p, v)`, explicit Euler with step `dt`:
/// `p' = p + dt·v`, `v' = v + dt·u`, both clamped to `[-limit, limit]`.
/// Reward `-(p² + 0.1·u²)` is charged on the pre-transition position.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(from = "DoubleIntegratorParams", into = "DoubleIntegratorParams")]
pub struct DoubleIntegrator {
    pub dt: f64,
    pub limit: f64,
    pub discount: f64,
    normalizer: [f64; 2],
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DoubleIntegratorParams {
    pub dt: f64,
    pub limit: f64,
    pub discount: f64,
}

impl Default for DoubleIntegratorParams {
    fn default() -> Self {
        DoubleIntegratorParams { dt: 0.1, limit: 10.0, discount: 0.95 }
    }
}

impl From<DoubleIntegratorParams> for DoubleIntegrator {
    fn from(p: DoubleIntegratorParams) -> Self {
        DoubleIntegrator { dt: p.dt, limit: p.limit, discount: p.discount, normalizer: [p.limit; 2] }
    }
}

impl From<DoubleIntegrator> for DoubleIntegratorParams {
    fn from(m: DoubleIntegrator) -> Self {
        DoubleIntegratorParams { dt: m.dt, limit: m.limit, discount: m.discount }
    }
}

impl Default for DoubleIntegrator {
    fn default() -> Self {
        DoubleIntegratorParams::default().into()
    }
}

impl DoubleIntegrator {
    pub fn control(action: ActionId) -> f64 {
        CONTROLS[action.0]
    }

    pub(crate) fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) || !(self.limit > 0.0 && self.limit.is_finite()) {
            return Err(Error::Config("double_integrator: dt and limit must be positive".into()));
        }
        Ok(())
    }
}

impl GenerativeModel for DoubleIntegrator {
    fn name(&self) -> &str {
        "double_integrator"
    }

    fn state_dimension(&self) -> usize {
        2
    }

    fn action_count(&self) -> usize {
        CONTROLS.len()
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
        let (p, v) = (state[0], state[1]);
        let u = Self::control(action);
        let p_next = (p + self.dt * v).clamp(-self.limit, self.limit);
        let v_next = (v + self.dt * u).clamp(-self.limit, self.limit);
        let reward = -(p * p + 0.1 * u * u);
        (StateVector(vec![p_next, v_next]), reward)
    }

    fn sample_initial_state(&self, rng: &mut ChaCha8Rng) -> StateVector {
        let p = rng.random_range(-1.0..=1.0);
        let v = rng.random_range(-1.0..=1.0);
        StateVector(vec![p, v])
    }
}
