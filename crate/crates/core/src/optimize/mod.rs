//! Derivative-free maximizers over box-bounded parameter spaces.
//!
//! All three optimizers share the same contract: points are clamped into the
//! [`SearchSpace`], non-finite objective values count as `-inf`, the run is
//! fully determined by `(config, seed)`, and batches of independent
//! evaluations may be spread over worker threads without changing the result.

mod cem;
mod gp;
mod gpo;
mod one_plus_one;

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use cem::{cem_maximize, CemConfig};
pub use gp::{expected_improvement, gp_posterior, GaussianProcess, Kernel, Posterior};
pub use gpo::{gpo_maximize, GpoConfig};
pub use one_plus_one::{one_plus_one_maximize, OnePlusOneConfig};

/// Axis-aligned parameter box.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchSpace {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl SearchSpace {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.len() != upper.len() || lower.is_empty() {
            return Err(Error::contract("search space bounds must be non-empty and of equal length"));
        }
        if lower.iter().zip(&upper).any(|(l, u)| !(l < u) || !l.is_finite() || !u.is_finite()) {
            return Err(Error::contract("search space needs finite lower < upper in every dimension"));
        }
        Ok(SearchSpace { lower, upper })
    }

    /// `[lower, upper]^dimension`.
    pub fn cube(dimension: usize, lower: f64, upper: f64) -> Result<Self> {
        SearchSpace::new(vec![lower; dimension], vec![upper; dimension])
    }

    pub fn dimension(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn center(&self) -> Vec<f64> {
        self.lower.iter().zip(&self.upper).map(|(l, u)| 0.5 * (l + u)).collect()
    }

    pub fn widths(&self) -> Vec<f64> {
        self.lower.iter().zip(&self.upper).map(|(l, u)| u - l).collect()
    }

    pub fn diagonal(&self) -> f64 {
        self.widths().iter().map(|w| w * w).sum::<f64>().sqrt()
    }

    pub fn clamp(&self, x: &mut [f64]) {
        for ((v, l), u) in x.iter_mut().zip(&self.lower).zip(&self.upper) {
            *v = v.clamp(*l, *u);
        }
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dimension() && x.iter().zip(&self.lower).zip(&self.upper).all(|((v, l), u)| l <= v && v <= u)
    }

    fn check_point(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dimension() {
            return Err(Error::contract(format!(
                "point has dimension {}, search space has {}",
                x.len(),
                self.dimension()
            )));
        }
        Ok(())
    }
}

/// A function to maximize.
pub trait Objective: Sync {
    fn evaluate(&self, x: &[f64]) -> f64;
}

impl<F> Objective for F
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    fn evaluate(&self, x: &[f64]) -> f64 {
        self(x)
    }
}

/// Settings shared by every optimizer that do not change the result.
#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    /// Upper bound on concurrent objective evaluations; 0 or 1 means sequential.
    pub workers: usize,
    /// Points evaluated first (clamped), ahead of any sampled ones.
    pub initial_points: Vec<Vec<f64>>,
}

impl RunOptions {
    pub fn with_workers(mut self, workers: usize) -> Self {
        self.workers = workers;
        self
    }

    pub fn with_initial_points(mut self, points: Vec<Vec<f64>>) -> Self {
        self.initial_points = points;
        self
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    pub best_value: f64,
    pub mean_value: f64,
    pub evaluations: usize,
    pub wallclock_ms: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub point: Vec<f64>,
    /// `None` when the objective returned a non-finite value.
    pub value: Option<f64>,
}

/// Outcome of one optimizer run, including every evaluated point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptimizerRun {
    pub optimizer: String,
    pub seed: u64,
    pub best_point: Vec<f64>,
    pub best_value: f64,
    pub evaluations: usize,
    pub trace: Vec<IterationRecord>,
    pub history: Vec<Evaluation>,
}

/// Mutable bookkeeping used while an optimizer runs.
pub(crate) struct RunState {
    run: OptimizerRun,
    started: Instant,
}

impl RunState {
    pub(crate) fn new(optimizer: &str, seed: u64) -> Self {
        RunState {
            run: OptimizerRun {
                optimizer: optimizer.to_string(),
                seed,
                best_point: Vec::new(),
                best_value: f64::NEG_INFINITY,
                evaluations: 0,
                trace: Vec::new(),
                history: Vec::new(),
            },
            started: Instant::now(),
        }
    }

    /// Records evaluated points in order; the best only moves on strict improvement.
    pub(crate) fn record(&mut self, points: &[Vec<f64>], values: &[f64]) {
        for (p, &v) in points.iter().zip(values) {
            self.run.evaluations += 1;
            self.run.history.push(Evaluation { point: p.clone(), value: v.is_finite().then_some(v) });
            if v > self.run.best_value {
                self.run.best_value = v;
                self.run.best_point = p.clone();
            }
        }
    }

    pub(crate) fn close_iteration(&mut self, iteration: usize, values: &[f64]) {
        let finite: Vec<f64> = values.iter().copied().filter(|v| v.is_finite()).collect();
        let mean_value = if finite.is_empty() {
            f64::NEG_INFINITY
        } else {
            finite.iter().sum::<f64>() / finite.len() as f64
        };
        self.run.trace.push(IterationRecord {
            iteration,
            best_value: self.run.best_value,
            mean_value,
            evaluations: self.run.evaluations,
            wallclock_ms: self.started.elapsed().as_secs_f64() * 1e3,
        });
    }

    pub(crate) fn has_finite_best(&self) -> bool {
        self.run.best_value.is_finite()
    }

    pub(crate) fn best_value(&self) -> f64 {
        self.run.best_value
    }

    pub(crate) fn evaluations(&self) -> usize {
        self.run.evaluations
    }

    pub(crate) fn abort(self, message: impl Into<String>) -> Error {
        Error::OptimizerAborted { message: message.into(), partial: Box::new(self.run) }
    }

    pub(crate) fn snapshot(&self) -> OptimizerRun {
        self.run.clone()
    }

    pub(crate) fn finish(self) -> OptimizerRun {
        self.run
    }
}

/// Evaluates batches in input order, optionally on a dedicated thread pool.
pub(crate) struct BatchEvaluator {
    pool: Option<rayon::ThreadPool>,
}

impl BatchEvaluator {
    pub(crate) fn new(workers: usize) -> Result<Self> {
        let pool = if workers > 1 {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(workers)
                .build()
                .map_err(|e| Error::Config(format!("cannot start {workers} workers: {e}")))?;
            Some(pool)
        } else {
            None
        };
        Ok(BatchEvaluator { pool })
    }

    /// Objective values with every non-finite result mapped to `-inf`.
    pub(crate) fn evaluate<O: Objective + ?Sized>(&self, objective: &O, points: &[Vec<f64>]) -> Vec<f64> {
        let sanitize = |v: f64| if v.is_finite() { v } else { f64::NEG_INFINITY };
        match &self.pool {
            Some(pool) => pool.install(|| points.par_iter().map(|p| sanitize(objective.evaluate(p))).collect()),
            None => points.iter().map(|p| sanitize(objective.evaluate(p))).collect(),
        }
    }
}

/// Clamped copies of the injected points, checked against the space.
pub(crate) fn prepared_initial_points(space: &SearchSpace, options: &RunOptions) -> Result<Vec<Vec<f64>>> {
    options
        .initial_points
        .iter()
        .map(|p| {
            space.check_point(p)?;
            let mut p = p.clone();
            space.clamp(&mut p);
            Ok(p)
        })
        .collect()
}

/// Optimizer choice plus its settings, as found in experiment configs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum OptimizerConfig {
    Cem(CemConfig),
    OnePlusOne(OnePlusOneConfig),
    Gpo(GpoConfig),
}

impl OptimizerConfig {
    pub fn name(&self) -> &'static str {
        match self {
            OptimizerConfig::Cem(_) => "cem",
            OptimizerConfig::OnePlusOne(_) => "one_plus_one",
            OptimizerConfig::Gpo(_) => "gpo",
        }
    }

    pub fn validate(&self, space: &SearchSpace) -> Result<()> {
        match self {
            OptimizerConfig::Cem(c) => c.validate(),
            OptimizerConfig::OnePlusOne(c) => c.validate(),
            OptimizerConfig::Gpo(c) => c.validate(space),
        }
    }

    /// Evaluations the run will spend.
    pub fn evaluation_budget(&self, space: &SearchSpace) -> usize {
        match self {
            OptimizerConfig::Cem(c) => c.population * c.iterations,
            OptimizerConfig::OnePlusOne(c) => c.max_evaluations,
            OptimizerConfig::Gpo(c) => c.budget.max(c.initial_design_size(space)),
        }
    }

    pub fn maximize<O: Objective + ?Sized>(
        &self,
        objective: &O,
        space: &SearchSpace,
        seed: u64,
        options: &RunOptions,
    ) -> Result<OptimizerRun> {
        match self {
            OptimizerConfig::Cem(c) => cem_maximize(objective, space, c, seed, options),
            OptimizerConfig::OnePlusOne(c) => one_plus_one_maximize(objective, space, c, seed, options),
            OptimizerConfig::Gpo(c) => gpo_maximize(objective, space, c, seed, options),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn space_validation() {
        assert!(SearchSpace::new(vec![0.0], vec![0.0]).is_err());
        assert!(SearchSpace::new(vec![0.0, 1.0], vec![1.0]).is_err());
        assert!(SearchSpace::new(vec![], vec![]).is_err());
        let s = SearchSpace::cube(2, -1.0, 3.0).unwrap();
        assert_eq!(s.center(), vec![1.0, 1.0]);
        let mut p = vec![-5.0, 5.0];
        s.clamp(&mut p);
        assert_eq!(p, vec![-1.0, 3.0]);
        assert!(s.contains(&p));
    }

    #[test]
    fn batch_order_does_not_depend_on_workers() {
        let f = |x: &[f64]| if x[0] > 0.5 { f64::NAN } else { x[0] * 2.0 };
        let points: Vec<Vec<f64>> = (0..100).map(|i| vec![i as f64 / 100.0]).collect();
        let serial = BatchEvaluator::new(1).unwrap().evaluate(&f, &points);
        let parallel = BatchEvaluator::new(8).unwrap().evaluate(&f, &points);
        assert_eq!(serial, parallel);
        assert_eq!(serial[99], f64::NEG_INFINITY);
    }

    #[test]
    fn optimizer_config_is_tagged_by_kind() {
        let c: OptimizerConfig = serde_json::from_str(r#"{"kind":"cem","iterations":3}"#).unwrap();
        match c {
            OptimizerConfig::Cem(cfg) => {
                assert_eq!(cfg.iterations, 3);
                assert_eq!(cfg.population, 32);
            }
            other => panic!("{other:?}"),
        }
        assert!(serde_json::from_str::<OptimizerConfig>(r#"{"kind":"cem","iteratons":3}"#).is_err());
        assert!(serde_json::from_str::<OptimizerConfig>(r#"{"kind":"cmaes"}"#).is_err());
    }
}
