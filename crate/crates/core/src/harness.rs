//! Receding-horizon evaluation of scorers and full policy-search campaigns.

use std::time::Instant;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::mdp::{ActionId, Domain, GenerativeModel, StateVector};
use crate::optimize::{Objective, OptimizerConfig, OptimizerRun, RunOptions, SearchSpace};
use crate::tree::{act, baseline_scorer, BaselineKind, Scorer, ScoringParameters};

/// Everything that defines the objective `J(θ)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvaluationSpec {
    pub domain: Domain,
    /// Number of initial states `m` the return is averaged over.
    pub initial_states: usize,
    pub train_seed: u64,
    pub holdout_seed: u64,
    /// Simulation steps per rollout.
    pub horizon: usize,
    /// Node expansions per decision.
    pub budget: usize,
}

impl EvaluationSpec {
    pub fn validate(&self) -> Result<()> {
        self.domain.validate()?;
        if self.initial_states == 0 {
            return Err(Error::Config("evaluation: initial_states must be at least 1".into()));
        }
        if self.budget == 0 {
            return Err(Error::Config("evaluation: budget must be at least 1".into()));
        }
        if self.train_seed == self.holdout_seed {
            return Err(Error::Config("evaluation: holdout_seed must differ from train_seed".into()));
        }
        Ok(())
    }

    pub fn with_budget(&self, budget: usize) -> Self {
        EvaluationSpec { budget, ..self.clone() }
    }

    pub fn training_states(&self) -> Result<Vec<StateVector>> {
        self.domain.initial_states(self.initial_states, self.train_seed)
    }

    pub fn holdout_states(&self) -> Result<Vec<StateVector>> {
        self.domain.initial_states(self.initial_states, self.holdout_seed)
    }

    /// Upper bound on any truncated return: `r_max (1 - γ^T) / (1 - γ)`.
    pub fn return_upper_bound(&self) -> f64 {
        let gamma = self.domain.discount();
        self.domain.reward_upper_bound() * (1.0 - gamma.powi(self.horizon as i32)) / (1.0 - gamma)
    }

    /// Largest return the truncation at `T` can hide: `r_max γ^T / (1 - γ)`.
    pub fn truncation_bound(&self) -> f64 {
        let gamma = self.domain.discount();
        self.domain.reward_upper_bound().abs() * gamma.powi(self.horizon as i32) / (1.0 - gamma)
    }

    /// Hex SHA-256 of the canonical JSON encoding.
    pub fn hash(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("spec serializes");
        hex::encode(Sha256::digest(&bytes))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RolloutStep {
    pub state: StateVector,
    pub action: ActionId,
    pub reward: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RolloutRecord {
    pub initial_state: StateVector,
    pub steps: Vec<RolloutStep>,
    /// `Σ_{t<T} γᵗ r_t`.
    pub discounted_return: f64,
}

/// Runs the tree policy in closed loop for `horizon` steps.
pub fn rollout<M: GenerativeModel + ?Sized>(
    model: &M,
    initial_state: &StateVector,
    scorer: &Scorer,
    budget: usize,
    horizon: usize,
) -> Result<RolloutRecord> {
    let gamma = model.discount();
    let mut state = initial_state.clone();
    let mut steps = Vec::with_capacity(horizon);
    let mut discounted_return = 0.0;
    let mut weight = 1.0;
    for _ in 0..horizon {
        let action = act(model, &state, scorer, budget)?;
        let (next, reward) = model.step(&state, action)?;
        discounted_return += weight * reward;
        weight *= gamma;
        steps.push(RolloutStep { state, action, reward });
        state = next;
    }
    Ok(RolloutRecord { initial_state: initial_state.clone(), steps, discounted_return })
}

/// Mean discounted return of `scorer` over `states`.
pub fn mean_return(spec: &EvaluationSpec, states: &[StateVector], scorer: &Scorer) -> Result<f64> {
    let mut total = 0.0;
    for s in states {
        total += rollout(&spec.domain, s, scorer, spec.budget, spec.horizon)?.discounted_return;
    }
    Ok(total / states.len() as f64)
}

/// `J(θ)` on the training initial states.
pub fn objective(spec: &EvaluationSpec, theta: &ScoringParameters) -> Result<f64> {
    mean_return(spec, &spec.training_states()?, &Scorer::Linear(theta.clone()))
}

/// `J` as an optimizer objective, with the training states drawn once.
pub struct SpecObjective<'a> {
    spec: &'a EvaluationSpec,
    states: Vec<StateVector>,
}

impl<'a> SpecObjective<'a> {
    pub fn new(spec: &'a EvaluationSpec) -> Result<Self> {
        Ok(SpecObjective { spec, states: spec.training_states()? })
    }

    pub fn try_evaluate(&self, theta: &[f64]) -> Result<f64> {
        let scorer = Scorer::linear(theta.to_vec())?;
        mean_return(self.spec, &self.states, &scorer)
    }
}

impl Objective for SpecObjective<'_> {
    fn evaluate(&self, x: &[f64]) -> f64 {
        // invalid points surface as -inf and are never selected
        self.try_evaluate(x).unwrap_or(f64::NEG_INFINITY)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BaselineReturns {
    pub uniform: f64,
    pub greedy: f64,
    pub optimistic: f64,
}

impl BaselineReturns {
    pub fn evaluate(spec: &EvaluationSpec, states: &[StateVector]) -> Result<Self> {
        let j = |kind| mean_return(spec, states, &baseline_scorer(kind, &spec.domain));
        Ok(BaselineReturns {
            uniform: j(BaselineKind::Uniform)?,
            greedy: j(BaselineKind::Greedy)?,
            optimistic: j(BaselineKind::Optimistic)?,
        })
    }
}

/// The tuned weights, as persisted in `best_theta.json`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThetaArtifact {
    pub domain: String,
    pub feature_dimension: usize,
    pub weights: Vec<f64>,
    pub spec_hash: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HoldoutReport {
    pub seed: u64,
    pub states: usize,
    pub best_theta: f64,
    pub baselines: BaselineReturns,
    /// False only for domains whose initial region is a single state.
    pub disjoint_from_training: bool,
    pub truncation_bound: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Campaign {
    pub spec: EvaluationSpec,
    pub run: OptimizerRun,
    pub best_theta: ThetaArtifact,
    pub training_baselines: BaselineReturns,
    pub holdout: HoldoutReport,
}

/// Default θ box: `[-10, 10]` in every feature.
pub fn default_theta_space(domain: &Domain) -> SearchSpace {
    SearchSpace::cube(domain.feature_dimension(), -10.0, 10.0).expect("valid cube")
}

/// Uniform and greedy presets, in the order they are injected.
pub fn preset_points(domain: &Domain) -> Vec<Vec<f64>> {
    let dim = domain.feature_dimension();
    vec![ScoringParameters::uniform(dim).weights().to_vec(), ScoringParameters::greedy(dim).weights().to_vec()]
}

fn check_disjoint(spec: &EvaluationSpec, train: &[StateVector], holdout: &[StateVector]) -> Result<bool> {
    let overlap = holdout.iter().any(|h| train.contains(h));
    if !overlap {
        return Ok(true);
    }
    if spec.domain.has_single_initial_state() {
        return Ok(false);
    }
    Err(Error::contract("held-out initial states overlap the training states"))
}

/// Tunes θ for `spec` with `optimizer` and evaluates the result on held-out states.
///
/// The uniform and greedy presets are always injected ahead of the
/// optimizer's own samples.
pub fn run_campaign(
    spec: &EvaluationSpec,
    optimizer: &OptimizerConfig,
    space: &SearchSpace,
    seed: u64,
    workers: usize,
) -> Result<Campaign> {
    spec.validate()?;
    if space.dimension() != spec.domain.feature_dimension() {
        return Err(Error::contract(format!(
            "θ box has dimension {}, {} has {} features",
            space.dimension(),
            spec.domain.key(),
            spec.domain.feature_dimension()
        )));
    }
    optimizer.validate(space)?;

    let objective = SpecObjective::new(spec)?;
    let options = RunOptions::default()
        .with_workers(workers)
        .with_initial_points(preset_points(&spec.domain));
    let run = optimizer.maximize(&objective, space, seed, &options)?;

    let theta = ScoringParameters::new(run.best_point.clone())?;
    let train = spec.training_states()?;
    let holdout_states = spec.holdout_states()?;
    let disjoint = check_disjoint(spec, &train, &holdout_states)?;
    let training_baselines = BaselineReturns::evaluate(spec, &train)?;
    let holdout = HoldoutReport {
        seed: spec.holdout_seed,
        states: holdout_states.len(),
        best_theta: mean_return(spec, &holdout_states, &Scorer::Linear(theta.clone()))?,
        baselines: BaselineReturns::evaluate(spec, &holdout_states)?,
        disjoint_from_training: disjoint,
        truncation_bound: spec.truncation_bound(),
    };
    let best_theta = ThetaArtifact {
        domain: spec.domain.key().to_string(),
        feature_dimension: spec.domain.feature_dimension(),
        weights: theta.weights().to_vec(),
        spec_hash: spec.hash(),
    };
    Ok(Campaign { spec: spec.clone(), run, best_theta, training_baselines, holdout })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub budget: usize,
    /// Best training return found by the optimizer.
    pub j_optimized: f64,
    pub j_uniform: f64,
    pub j_greedy: f64,
    pub j_optimistic: f64,
    pub j_optimized_holdout: f64,
    pub evaluations: usize,
    pub wallclock_ms: f64,
}

/// One campaign per budget, with baselines on the same training states.
pub fn budget_sweep(
    spec: &EvaluationSpec,
    budgets: &[usize],
    optimizer: &OptimizerConfig,
    space: &SearchSpace,
    seed: u64,
    workers: usize,
) -> Result<Vec<SweepRow>> {
    if budgets.is_empty() {
        return Err(Error::Config("sweep: budget list is empty".into()));
    }
    if budgets.windows(2).any(|w| w[0] >= w[1]) || budgets[0] == 0 {
        return Err(Error::Config("sweep: budgets must be positive and strictly ascending".into()));
    }
    let mut rows = Vec::with_capacity(budgets.len());
    for &budget in budgets {
        let started = Instant::now();
        let campaign = run_campaign(&spec.with_budget(budget), optimizer, space, seed, workers)?;
        rows.push(SweepRow {
            budget,
            j_optimized: campaign.run.best_value,
            j_uniform: campaign.training_baselines.uniform,
            j_greedy: campaign.training_baselines.greedy,
            j_optimistic: campaign.training_baselines.optimistic,
            j_optimized_holdout: campaign.holdout.best_theta,
            evaluations: campaign.run.evaluations,
            wallclock_ms: started.elapsed().as_secs_f64() * 1e3,
        });
    }
    Ok(rows)
}
