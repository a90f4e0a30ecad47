use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::{prepared_initial_points, BatchEvaluator, Objective, OptimizerRun, RunOptions, RunState, SearchSpace};
use crate::error::{Error, Result};

/// Cross-entropy method with a diagonal Gaussian sampling distribution.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CemConfig {
    pub population: usize,
    pub elite: usize,
    /// Weight of the new elite statistics in the mean/stddev update.
    pub smoothing: f64,
    pub iterations: usize,
    pub stddev_floor: f64,
}

impl Default for CemConfig {
    fn default() -> Self {
        CemConfig { population: 32, elite: 8, smoothing: 0.7, iterations: 50, stddev_floor: 1e-6 }
    }
}

impl CemConfig {
    pub fn validate(&self) -> Result<()> {
        if self.elite == 0 || self.elite > self.population {
            return Err(Error::Config(format!(
                "cem: elite count {} must lie in [1, population = {}]",
                self.elite, self.population
            )));
        }
        if !(self.smoothing > 0.0 && self.smoothing <= 1.0) {
            return Err(Error::Config(format!("cem: smoothing {} must lie in (0, 1]", self.smoothing)));
        }
        if !(self.stddev_floor > 0.0) {
            return Err(Error::Config("cem: stddev_floor must be positive".into()));
        }
        Ok(())
    }
}

/// Refits `mean`/`stddev` to the top-`elite` finite samples. Returns false
/// when no sample is finite.
pub(crate) fn update_distribution(
    mean: &mut [f64],
    stddev: &mut [f64],
    population: &[Vec<f64>],
    values: &[f64],
    config: &CemConfig,
) -> bool {
    let mut order: Vec<usize> = (0..population.len()).filter(|&i| values[i].is_finite()).collect();
    if order.is_empty() {
        return false;
    }
    // stable: equal values keep sampling order
    order.sort_by(|&a, &b| values[b].total_cmp(&values[a]));
    order.truncate(config.elite);

    let k = order.len() as f64;
    let alpha = config.smoothing;
    for i in 0..mean.len() {
        let elite_mean = order.iter().map(|&j| population[j][i]).sum::<f64>() / k;
        let elite_var = order.iter().map(|&j| (population[j][i] - elite_mean).powi(2)).sum::<f64>() / k;
        mean[i] = alpha * elite_mean + (1.0 - alpha) * mean[i];
        stddev[i] = (alpha * elite_var.sqrt() + (1.0 - alpha) * stddev[i]).max(config.stddev_floor);
    }
    true
}

/// Maximizes `objective` with the cross-entropy method.
///
/// Injected initial points replace the first samples of the first population.
pub fn cem_maximize<O: Objective + ?Sized>(
    objective: &O,
    space: &SearchSpace,
    config: &CemConfig,
    seed: u64,
    options: &RunOptions,
) -> Result<OptimizerRun> {
    config.validate()?;
    let injected = prepared_initial_points(space, options)?;
    let evaluator = BatchEvaluator::new(options.workers)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dim = space.dimension();

    let mut mean = space.center();
    let mut stddev: Vec<f64> = space.widths().iter().map(|w| w / 4.0).collect();
    let mut state = RunState::new("cem", seed);

    for iteration in 1..=config.iterations {
        let mut population: Vec<Vec<f64>> = (0..config.population)
            .map(|_| {
                let mut x: Vec<f64> = (0..dim)
                    .map(|i| {
                        let z: f64 = StandardNormal.sample(&mut rng);
                        mean[i] + stddev[i] * z
                    })
                    .collect();
                space.clamp(&mut x);
                x
            })
            .collect();
        if iteration == 1 {
            for (slot, p) in population.iter_mut().zip(&injected) {
                slot.clone_from(p);
            }
        }

        let values = evaluator.evaluate(objective, &population);
        state.record(&population, &values);
        state.close_iteration(iteration, &values);

        if !update_distribution(&mut mean, &mut stddev, &population, &values, config) {
            return Err(state.abort(format!("cem: every sample of iteration {iteration} scored non-finite")));
        }
    }
    Ok(state.finish())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finds_shifted_quadratic_optimum() {
        let target = [0.5, -0.3];
        let f = |x: &[f64]| -((x[0] - target[0]).powi(2) + (x[1] - target[1]).powi(2));
        let space = SearchSpace::cube(2, -1.0, 1.0).unwrap();
        let run = cem_maximize(&f, &space, &CemConfig::default(), 0, &RunOptions::default()).unwrap();
        let dist = ((run.best_point[0] - target[0]).powi(2) + (run.best_point[1] - target[1]).powi(2)).sqrt();
        assert!(dist < 1e-2, "distance {dist}");
        assert_eq!(run.evaluations, 32 * 50);
        assert_eq!(run.trace.len(), 50);
    }

    #[test]
    fn constant_objective_has_no_pull() {
        let f = |_: &[f64]| 4.25;
        let space = SearchSpace::cube(2, -1.0, 1.0).unwrap();
        let config = CemConfig { iterations: 10, ..CemConfig::default() };
        let run = cem_maximize(&f, &space, &config, 0, &RunOptions::default()).unwrap();
        assert_eq!(run.best_value, 4.25);
        // the first sample wins every tie
        assert_eq!(run.best_point, run.history[0].point);
    }

    #[test]
    fn full_elite_uses_population_statistics() {
        let population = vec![vec![1.0, 0.0], vec![3.0, 2.0], vec![-1.0, 4.0], vec![1.0, 2.0]];
        let values = vec![0.3, -2.0, 7.0, 1.0];
        let config = CemConfig { population: 4, elite: 4, smoothing: 1.0, ..CemConfig::default() };
        let (mut mean, mut stddev) = (vec![9.0, 9.0], vec![9.0, 9.0]);
        assert!(update_distribution(&mut mean, &mut stddev, &population, &values, &config));
        assert_eq!(mean, vec![1.0, 2.0]);
        assert!((stddev[0] - 2.0f64.sqrt()).abs() < 1e-15);
        assert!((stddev[1] - 2.0f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn elite_excludes_non_finite_samples() {
        let population = vec![vec![1.0], vec![5.0], vec![3.0]];
        let values = vec![1.0, f64::NEG_INFINITY, 2.0];
        let config = CemConfig { population: 3, elite: 3, smoothing: 1.0, ..CemConfig::default() };
        let (mut mean, mut stddev) = (vec![0.0], vec![1.0]);
        assert!(update_distribution(&mut mean, &mut stddev, &population, &values, &config));
        assert_eq!(mean, vec![2.0]);
        let all_bad = vec![f64::NEG_INFINITY; 3];
        assert!(!update_distribution(&mut mean, &mut stddev, &population, &all_bad, &config));
    }

    #[test]
    fn constant_objective_update_stays_within_one_stddev() {
        // without selection pressure the mean is a random walk, so the bound is
        // checked per update rather than over a whole run
        let space = SearchSpace::cube(2, -1.0, 1.0).unwrap();
        let config = CemConfig::default();
        for seed in 0..50 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let start = space.center();
            let (mut mean, mut stddev) = (start.clone(), vec![0.5, 0.5]);
            let population: Vec<Vec<f64>> = (0..config.population)
                .map(|_| {
                    let mut x: Vec<f64> = (0..2)
                        .map(|i| mean[i] + stddev[i] * <StandardNormal as Distribution<f64>>::sample(&StandardNormal, &mut rng))
                        .collect();
                    space.clamp(&mut x);
                    x
                })
                .collect();
            let values = vec![1.0; population.len()];
            update_distribution(&mut mean, &mut stddev, &population, &values, &config);
            for i in 0..2 {
                assert!((mean[i] - start[i]).abs() <= 0.5, "seed {seed}: mean moved to {mean:?}");
            }
        }
    }

    #[test]
    fn rejects_bad_elite() {
        let config = CemConfig { elite: 40, ..CemConfig::default() };
        assert!(config.validate().is_err());
        let config = CemConfig { elite: 0, ..CemConfig::default() };
        assert!(config.validate().is_err());
    }

    #[test]
    fn injected_points_are_evaluated_first() {
        let f = |x: &[f64]| -x[0].abs();
        let space = SearchSpace::cube(1, -1.0, 1.0).unwrap();
        let options = RunOptions::default().with_initial_points(vec![vec![0.0], vec![5.0]]);
        let config = CemConfig { iterations: 2, ..CemConfig::default() };
        let run = cem_maximize(&f, &space, &config, 1, &options).unwrap();
        assert_eq!(run.history[0].point, vec![0.0]);
        assert_eq!(run.history[1].point, vec![1.0]);
        assert_eq!(run.best_point, vec![0.0]);
    }
}
