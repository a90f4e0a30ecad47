use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::gp::{expected_improvement, GaussianProcess, Kernel};
use super::{prepared_initial_points, BatchEvaluator, Objective, OptimizerRun, RunOptions, RunState, SearchSpace};
use crate::error::{Error, Result};

/// Gaussian-process optimization with expected improvement.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GpoConfig {
    pub signal_stddev: f64,
    /// Defaults to 0.2 times the box diagonal.
    pub length_scale: Option<f64>,
    pub noise_stddev: f64,
    /// Size of the uniform initial design; defaults to `2n + 2`.
    pub initial_design: Option<usize>,
    pub xi: f64,
    pub candidates: usize,
    /// Total evaluations including the initial design.
    pub budget: usize,
}

impl Default for GpoConfig {
    fn default() -> Self {
        GpoConfig {
            signal_stddev: 1.0,
            length_scale: None,
            noise_stddev: 1e-4,
            initial_design: None,
            xi: 0.01,
            candidates: 2048,
            budget: 50,
        }
    }
}

impl GpoConfig {
    pub fn initial_design_size(&self, space: &SearchSpace) -> usize {
        self.initial_design.unwrap_or(2 * space.dimension() + 2)
    }

    pub fn kernel(&self, space: &SearchSpace) -> Kernel {
        Kernel {
            signal_stddev: self.signal_stddev,
            length_scale: self.length_scale.unwrap_or(0.2 * space.diagonal()),
            noise_stddev: self.noise_stddev,
        }
    }

    pub fn validate(&self, space: &SearchSpace) -> Result<()> {
        let n0 = self.initial_design_size(space);
        if n0 == 0 {
            return Err(Error::Config("gpo: initial design must hold at least one point".into()));
        }
        if self.budget < n0 {
            return Err(Error::Config(format!("gpo: budget {} is smaller than the initial design ({n0})", self.budget)));
        }
        if self.candidates == 0 {
            return Err(Error::Config("gpo: candidates must be positive".into()));
        }
        if matches!(self.length_scale, Some(l) if !(l > 0.0)) || !(self.signal_stddev > 0.0) || self.noise_stddev < 0.0 {
            return Err(Error::Config("gpo: kernel parameters out of range".into()));
        }
        Ok(())
    }
}

fn uniform_point(space: &SearchSpace, rng: &mut ChaCha8Rng) -> Vec<f64> {
    space.lower().iter().zip(space.upper()).map(|(&l, &u)| rng.random_range(l..=u)).collect()
}

/// Maximizes `objective` with GP-based Bayesian optimization.
///
/// Injected points take the first slots of the initial design. After the
/// design, each iteration fits a GP to every finite observation and evaluates
/// the candidate with the highest expected improvement (first one on ties).
pub fn gpo_maximize<O: Objective + ?Sized>(
    objective: &O,
    space: &SearchSpace,
    config: &GpoConfig,
    seed: u64,
    options: &RunOptions,
) -> Result<OptimizerRun> {
    config.validate(space)?;
    let evaluator = BatchEvaluator::new(options.workers)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let kernel = config.kernel(space);
    let n0 = config.initial_design_size(space);

    let mut design: Vec<Vec<f64>> = (0..n0).map(|_| uniform_point(space, &mut rng)).collect();
    for (slot, p) in design.iter_mut().zip(prepared_initial_points(space, options)?) {
        *slot = p;
    }

    let mut state = RunState::new("gpo", seed);
    let values = evaluator.evaluate(objective, &design);
    state.record(&design, &values);
    state.close_iteration(0, &values);
    if !state.has_finite_best() {
        return Err(state.abort("gpo: every point of the initial design scored non-finite"));
    }

    let mut observed_x = design;
    let mut observed_y = values;
    let mut iteration = 0;
    while state.evaluations() < config.budget {
        iteration += 1;
        let (xs, ys): (Vec<Vec<f64>>, Vec<f64>) = observed_x
            .iter()
            .zip(&observed_y)
            .filter(|(_, y)| y.is_finite())
            .map(|(x, y)| (x.clone(), *y))
            .unzip();
        let gp = match GaussianProcess::fit(&xs, &ys, kernel) {
            Ok(gp) => gp,
            Err(Error::IllConditioned { message, .. }) => {
                return Err(Error::IllConditioned { message, partial: Some(Box::new(state.snapshot())) })
            }
            Err(e) => return Err(e),
        };
        let best = state.best_value();

        let mut chosen: Option<(Vec<f64>, f64)> = None;
        for _ in 0..config.candidates {
            let candidate = uniform_point(space, &mut rng);
            let post = match gp.predict(&candidate) {
                Ok(p) => p,
                Err(Error::IllConditioned { message, .. }) => {
                    return Err(Error::IllConditioned { message, partial: Some(Box::new(state.snapshot())) })
                }
                Err(e) => return Err(e),
            };
            let ei = expected_improvement(post.mean, post.stddev, best, config.xi);
            if chosen.as_ref().is_none_or(|(_, top)| ei > *top) {
                chosen = Some((candidate, ei));
            }
        }
        let (next, _) = chosen.expect("at least one candidate");
        let value = evaluator.evaluate(objective, std::slice::from_ref(&next))[0];
        state.record(std::slice::from_ref(&next), &[value]);
        state.close_iteration(iteration, &[value]);
        observed_x.push(next);
        observed_y.push(value);
    }
    Ok(state.finish())
}
