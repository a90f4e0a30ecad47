use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::{prepared_initial_points, BatchEvaluator, Objective, OptimizerRun, RunOptions, RunState, SearchSpace};
use crate::error::{Error, Result};

/// (1+1)-ES with isotropic Gaussian mutation and the 1/5th success rule.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OnePlusOneConfig {
    /// Defaults to the mean box width divided by 4.
    pub initial_stddev: Option<f64>,
    pub expand: f64,
    pub shrink: f64,
    pub stddev_floor: f64,
    pub max_evaluations: usize,
    /// Starting parent; defaults to the box center when nothing is injected.
    pub start: Option<Vec<f64>>,
}

impl Default for OnePlusOneConfig {
    fn default() -> Self {
        OnePlusOneConfig {
            initial_stddev: None,
            expand: 1.5,
            shrink: 0.82,
            stddev_floor: 1e-12,
            max_evaluations: 2000,
            start: None,
        }
    }
}

impl OnePlusOneConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.expand > 1.0 && self.shrink > 0.0 && self.shrink < 1.0) {
            return Err(Error::Config("one_plus_one: need expand > 1 and 0 < shrink < 1".into()));
        }
        if let Some(s) = self.initial_stddev {
            if !(s > 0.0 && s.is_finite()) {
                return Err(Error::Config("one_plus_one: initial_stddev must be positive".into()));
            }
        }
        if !(self.stddev_floor > 0.0) {
            return Err(Error::Config("one_plus_one: stddev_floor must be positive".into()));
        }
        if self.max_evaluations == 0 {
            return Err(Error::Config("one_plus_one: max_evaluations must be positive".into()));
        }
        Ok(())
    }

    /// Step-size after one mutation.
    pub fn adapt(&self, stddev: f64, success: bool) -> f64 {
        let next = if success { stddev * self.expand } else { stddev * self.shrink };
        next.max(self.stddev_floor)
    }
}

/// Maximizes `objective` with a (1+1) evolution strategy.
///
/// The first batch holds the injected points followed by the configured
/// start; the best of them becomes the first parent. A child replaces its
/// parent only when strictly better.
pub fn one_plus_one_maximize<O: Objective + ?Sized>(
    objective: &O,
    space: &SearchSpace,
    config: &OnePlusOneConfig,
    seed: u64,
    options: &RunOptions,
) -> Result<OptimizerRun> {
    config.validate()?;
    let evaluator = BatchEvaluator::new(options.workers)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut first_batch = prepared_initial_points(space, options)?;
    if let Some(start) = &config.start {
        let mut start = start.clone();
        if start.len() != space.dimension() {
            return Err(Error::Config("one_plus_one: start has the wrong dimension".into()));
        }
        space.clamp(&mut start);
        first_batch.push(start);
    }
    if first_batch.is_empty() {
        first_batch.push(space.center());
    }
    if first_batch.len() > config.max_evaluations {
        return Err(Error::Config(format!(
            "one_plus_one: {} starting points exceed max_evaluations = {}",
            first_batch.len(),
            config.max_evaluations
        )));
    }

    let mut state = RunState::new("one_plus_one", seed);
    let values = evaluator.evaluate(objective, &first_batch);
    state.record(&first_batch, &values);
    state.close_iteration(0, &values);
    if !state.has_finite_best() {
        return Err(state.abort("one_plus_one: every starting point scored non-finite"));
    }
    let parent_index = (0..values.len()).fold(0, |best, i| if values[i] > values[best] { i } else { best });
    let mut parent = first_batch.swap_remove(parent_index);
    let mut parent_value = values[parent_index];

    let widths = space.widths();
    let mut stddev = config
        .initial_stddev
        .unwrap_or_else(|| widths.iter().sum::<f64>() / widths.len() as f64 / 4.0);

    let mut iteration = 0;
    while state.evaluations() < config.max_evaluations {
        iteration += 1;
        let mut child: Vec<f64> = parent
            .iter()
            .map(|&x| {
                let z: f64 = StandardNormal.sample(&mut rng);
                x + stddev * z
            })
            .collect();
        space.clamp(&mut child);
        let value = evaluator.evaluate(objective, std::slice::from_ref(&child))[0];
        state.record(std::slice::from_ref(&child), &[value]);
        state.close_iteration(iteration, &[value]);
        let success = value > parent_value;
        if success {
            parent = child;
            parent_value = value;
        }
        stddev = config.adapt(stddev, success);
    }
    Ok(state.finish())
}
