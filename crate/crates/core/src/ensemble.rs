//! Ensemble optimizer with Boltzmann shot allocation and virtual annealing.
//!
//! A pool of trial states is optimized side by side. After every step the
//! total shot budget is re-split in proportion to `exp(-eps_k / T)`, trials
//! whose share drops below the pruning threshold leave the pool for good, and
//! the virtual temperature `T` decays geometrically. Once a single trial is
//! left and `T` is below the floor, the survivor is refined with the whole
//! budget for a fixed number of extra steps.
//!
//! Within a step the trials are independent: estimation, gradient and
//! parameter update can run concurrently (see [`Execution`]). Reweighting,
//! allocation, pruning and annealing run afterwards on the collected results.

use crate::alloc::largest_remainder;
use crate::ansatz::{build_ansatz, initial_trials, AnsatzSpec, TrialInit};
use crate::error::{invalid, Error, Result};
use crate::estimator::{estimate_gradient, Budget, EnergyEstimate, PenalizedObjective, PenaltySign};
use crate::exec::Execution;
use crate::hubbard::{build_hubbard_hamiltonian, particle_number_operator, HubbardParams, TrialLabel};
use crate::qsim::{exact_expectation, Circuit};
use crate::rng::{Purpose, RngStreams};

/// Normalized Boltzmann weights `exp(-(eps_k - min eps) / T) / Z`.
///
/// Shifting by the minimum keeps every exponent non-positive and leaves the
/// normalized weights unchanged. `T = +inf` gives the uniform mixture.
pub fn boltzmann_weights(energies: &[f64], temperature: f64) -> Result<Vec<f64>> {
    if energies.is_empty() {
        return invalid("no energies to weight");
    }
    if temperature.is_nan() || temperature <= 0.0 {
        return invalid(format!("temperature must be positive, got {temperature}"));
    }
    if energies.iter().any(|e| !e.is_finite()) {
        return invalid("energies must be finite");
    }
    if temperature == f64::INFINITY {
        return Ok(vec![1.0 / energies.len() as f64; energies.len()]);
    }
    let min = energies.iter().copied().fold(f64::INFINITY, f64::min);
    let raw: Vec<f64> = energies.iter().map(|e| (-(e - min) / temperature).exp()).collect();
    let z: f64 = raw.iter().sum();
    Ok(raw.into_iter().map(|w| w / z).collect())
}

/// Integer shot split of `total_shots` by largest remainder, ties to the lower index.
pub fn allocate_shots(weights: &[f64], total_shots: u64) -> Vec<u64> {
    largest_remainder(weights, total_shots)
}

/// One geometric cooling step, `T (1 - decay)`.
pub fn anneal_step(temperature: f64, decay: f64) -> Result<f64> {
    if temperature.is_nan() || temperature <= 0.0 {
        return invalid(format!("temperature must be positive, got {temperature}"));
    }
    if !(decay > 0.0 && decay < 1.0) {
        return invalid(format!("decay must lie in (0, 1), got {decay}"));
    }
    Ok(temperature * (1.0 - decay))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Mode {
    #[default]
    Shots,
    /// Infinite-shot limit: estimates are exact expectation values.
    Exact,
}

/// Quantity fed into the Boltzmann weights.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum WeightSource {
    #[default]
    Penalized,
    Energy,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScheduleConfig {
    pub total_shots: u64,
    pub t0: f64,
    /// Fraction of the temperature removed per step.
    pub decay: f64,
    pub prune_threshold: u64,
    pub learning_rate: f64,
    /// Cap on annealing steps; refinement steps come on top.
    pub max_steps: usize,
    pub lambda: f64,
    /// Share of a trial's shots spent on the gradient; the rest estimates its energy.
    pub gradient_shot_fraction: f64,
    pub temperature_floor: f64,
    pub refinement_steps: usize,
    pub mode: Mode,
    pub weight_source: WeightSource,
    pub penalty_sign: PenaltySign,
}

impl Default for ScheduleConfig {
    fn default() -> Self {
        Self {
            total_shots: 10_000,
            t0: 25.0,
            decay: 0.05,
            prune_threshold: 100,
            learning_rate: 0.01,
            max_steps: 300,
            lambda: 1.0,
            gradient_shot_fraction: 0.5,
            temperature_floor: 0.05,
            refinement_steps: 50,
            mode: Mode::Shots,
            weight_source: WeightSource::Penalized,
            penalty_sign: PenaltySign::Added,
        }
    }
}

impl ScheduleConfig {
    /// Checks every field; the error names the offending one.
    pub fn validate(&self) -> Result<()> {
        let bad = |field: &str, why: String| Err(Error::InvalidInput(format!("{field}: {why}")));
        if self.total_shots == 0 {
            return bad("n_shots", "must be positive".into());
        }
        if self.t0.is_nan() || self.t0 <= 0.0 {
            return bad("t0", format!("must be positive, got {}", self.t0));
        }
        if !(self.decay > 0.0 && self.decay < 1.0) {
            return bad("decay", format!("must lie in (0, 1), got {}", self.decay));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad("eta", format!("must be positive, got {}", self.learning_rate));
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return bad("lambda", format!("must be non-negative, got {}", self.lambda));
        }
        if !(self.gradient_shot_fraction > 0.0 && self.gradient_shot_fraction < 1.0) {
            return bad("gradient_shot_fraction", format!("must lie in (0, 1), got {}", self.gradient_shot_fraction));
        }
        if !(self.temperature_floor > 0.0 && self.temperature_floor.is_finite()) {
            return bad("temperature_floor", format!("must be positive, got {}", self.temperature_floor));
        }
        Ok(())
    }
}

/// Hamiltonian, trial circuit and starting points for one run.
#[derive(Clone, Debug)]
pub struct Problem {
    pub state_prep: Circuit,
    pub objective: PenalizedObjective,
    pub trials: Vec<TrialInit>,
}

impl Problem {
    /// Half-filled two-site Hubbard model with the six labelled starting states.
    pub fn hubbard(params: HubbardParams, ansatz: &AnsatzSpec, config: &ScheduleConfig) -> Result<Self> {
        let objective =
            PenalizedObjective::new(build_hubbard_hamiltonian(params), particle_number_operator(), config.lambda, 2.0)?
                .with_sign(config.penalty_sign);
        Ok(Self { state_prep: build_ansatz(ansatz)?, objective, trials: initial_trials(ansatz)? })
    }

    /// Keeps only the listed trials, in the given order.
    pub fn with_trials(mut self, labels: &[TrialLabel]) -> Self {
        self.trials = labels
            .iter()
            .filter_map(|l| self.trials.iter().find(|t| t.label == *l).cloned())
            .collect();
        self
    }

    /// Exact `<H>` (no penalty) at `params`.
    pub fn exact_energy(&self, params: &[f64]) -> Result<f64> {
        let state = crate::estimator::prepare(&self.state_prep, params)?;
        exact_expectation(&state, self.objective.hamiltonian().observable())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrialState {
    pub label: TrialLabel,
    pub params: Vec<f64>,
    /// Latest penalized objective estimate.
    pub energy: EnergyEstimate,
    /// Latest raw Hamiltonian estimate.
    pub raw_energy: EnergyEstimate,
    pub shots_assigned: u64,
    pub active: bool,
}

impl TrialState {
    fn weight_energy(&self, source: WeightSource) -> f64 {
        match source {
            WeightSource::Penalized => self.energy.value,
            WeightSource::Energy => self.raw_energy.value,
        }
    }
}

/// One `(step, trial)` line of the trajectory table.
#[derive(Clone, Debug, PartialEq)]
pub struct Row {
    pub step: usize,
    pub trial: TrialLabel,
    pub epsilon: f64,
    pub stderr: f64,
    /// Shots assigned to the trial for the next step (0 once pruned).
    pub shots: u64,
    /// Temperature used for this step's weights.
    pub temperature: f64,
    pub active: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct StepSummary {
    pub step: usize,
    pub temperature: f64,
    pub mixed_energy: f64,
    pub active_trials: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunSummary {
    /// First step at which a single trial remained.
    pub condensation_step: Option<usize>,
    pub annealing_steps: usize,
    pub total_steps: usize,
    /// Lowest-objective active trial at the end of the run.
    pub survivor: TrialLabel,
    pub final_energy: f64,
    pub final_stderr: f64,
    /// Exact `<H>` of the best trial when annealing stopped, before refinement.
    pub annealed_exact_energy: f64,
    /// Exact `<H>` at the survivor's final parameters.
    pub final_exact_energy: f64,
    pub final_params: Vec<f64>,
    /// Step at which each trial was pruned, in trial order.
    pub pruned_at: Vec<(TrialLabel, Option<usize>)>,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct RunRecord {
    pub rows: Vec<Row>,
    pub steps: Vec<StepSummary>,
    pub summary: Option<RunSummary>,
}

#[derive(Clone, Debug)]
pub struct Ensemble {
    pub trials: Vec<TrialState>,
    /// Temperature for the next reweighting.
    pub temperature: f64,
    /// Number of completed optimization steps.
    pub step: usize,
    pub config: ScheduleConfig,
    pub seed: u64,
    pub record: RunRecord,
    pub execution: Execution,
}

struct TrialUpdate {
    energy: EnergyEstimate,
    raw_energy: EnergyEstimate,
    params: Vec<f64>,
}

impl Ensemble {
    /// Uniform allocation over the starting trials and one round of energy
    /// estimates (step 0, no parameter update).
    pub fn new(problem: &Problem, config: ScheduleConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        if problem.trials.is_empty() {
            return invalid("problem has no trials");
        }
        let k = problem.trials.len();
        let shots = allocate_shots(&boltzmann_weights(&vec![0.0; k], f64::INFINITY)?, config.total_shots);
        let trials = problem
            .trials
            .iter()
            .zip(&shots)
            .map(|(t, &s)| TrialState {
                label: t.label,
                params: t.params0.clone(),
                energy: EnergyEstimate::exact(0.0),
                raw_energy: EnergyEstimate::exact(0.0),
                shots_assigned: s,
                active: true,
            })
            .collect();
        let mut ens = Self {
            trials,
            temperature: config.t0,
            step: 0,
            config,
            seed,
            record: RunRecord::default(),
            execution: Execution::default(),
        };

        let streams = RngStreams::new(seed);
        for (i, t) in ens.trials.iter_mut().enumerate() {
            let budget = ens.config.budget(t.shots_assigned, problem.objective.min_shots())?;
            let est = problem.objective.evaluate(&problem.state_prep, &t.params, budget, &mut streams.stream(i, 0, Purpose::Estimate, 0))?;
            t.energy = est.value;
            t.raw_energy = est.energy;
        }
        let weights = ens.active_weights(f64::INFINITY)?;
        ens.record_step(f64::INFINITY, &weights);
        for t in &ens.trials {
            ens.record.rows.push(Row {
                step: 0,
                trial: t.label,
                epsilon: t.energy.value,
                stderr: t.energy.std_error,
                shots: t.shots_assigned,
                temperature: f64::INFINITY,
                active: true,
            });
        }
        Ok(ens)
    }

    pub fn with_execution(mut self, execution: Execution) -> Self {
        self.execution = execution;
        self
    }

    pub fn active_count(&self) -> usize {
        self.trials.iter().filter(|t| t.active).count()
    }

    fn active_indices(&self) -> Vec<usize> {
        (0..self.trials.len()).filter(|&i| self.trials[i].active).collect()
    }

    /// Boltzmann weights over active trials (same order as `active_indices`).
    fn active_weights(&self, temperature: f64) -> Result<Vec<f64>> {
        let energies: Vec<f64> = self
            .active_indices()
            .into_iter()
            .map(|i| self.trials[i].weight_energy(self.config.weight_source))
            .collect();
        boltzmann_weights(&energies, temperature)
    }

    fn reallocate(&mut self, temperature: f64) -> Result<()> {
        let idx = self.active_indices();
        let shots = allocate_shots(&self.active_weights(temperature)?, self.config.total_shots);
        for t in self.trials.iter_mut() {
            t.shots_assigned = 0;
        }
        for (i, s) in idx.into_iter().zip(shots) {
            self.trials[i].shots_assigned = s;
        }
        Ok(())
    }

    /// Weighted objective `sum_k w_k eps_k` over active trials at the current temperature.
    pub fn mixed_state_energy(&self) -> Result<f64> {
        self.mixed_state_energy_at(self.temperature)
    }

    pub fn mixed_state_energy_at(&self, temperature: f64) -> Result<f64> {
        let w = self.active_weights(temperature)?;
        Ok(self.active_indices().into_iter().zip(w).map(|(i, w)| w * self.trials[i].energy.value).sum())
    }

    /// Deactivates trials assigned fewer shots than the threshold and re-splits
    /// the budget over the survivors at the current temperature, repeating
    /// until stable. If every active trial falls below the threshold, the one
    /// with the lowest weighting energy (lowest index on ties) is kept.
    pub fn prune(mut self) -> Result<Self> {
        self.prune_at(self.temperature)?;
        Ok(self)
    }

    fn prune_at(&mut self, temperature: f64) -> Result<()> {
        let threshold = self.config.prune_threshold;
        loop {
            let idx = self.active_indices();
            if idx.is_empty() {
                return invalid("ensemble has no active trial");
            }
            let below: Vec<usize> = idx.iter().copied().filter(|&i| self.trials[i].shots_assigned < threshold).collect();
            if below.is_empty() {
                return Ok(());
            }
            if below.len() == idx.len() {
                let source = self.config.weight_source;
                let keep = idx
                    .iter()
                    .copied()
                    .min_by(|&a, &b| {
                        self.trials[a].weight_energy(source).total_cmp(&self.trials[b].weight_energy(source)).then(a.cmp(&b))
                    })
                    .expect("non-empty");
                for &i in &idx {
                    if i != keep {
                        self.trials[i].active = false;
                    }
                }
                self.reallocate(temperature)?;
                return Ok(());
            }
            for i in below {
                self.trials[i].active = false;
            }
            self.reallocate(temperature)?;
        }
    }

    fn record_step(&mut self, temperature: f64, weights: &[f64]) {
        let step = self.step;
        let idx = self.active_indices();
        let mixed = idx.iter().zip(weights).map(|(&i, w)| w * self.trials[i].energy.value).sum();
        self.record.steps.push(StepSummary { step, temperature, mixed_energy: mixed, active_trials: idx.len() });
    }

    /// One optimization step: per-trial estimate, gradient and update, then
    /// reweighting from the new estimates, reallocation, pruning and cooling.
    pub fn step(mut self, problem: &Problem) -> Result<Self> {
        if problem.trials.len() != self.trials.len() {
            return invalid("problem and ensemble disagree on the number of trials");
        }
        let step = self.step + 1;
        let streams = RngStreams::new(self.seed);
        let config = &self.config;
        let active: Vec<(usize, &TrialState)> = self.trials.iter().enumerate().filter(|(_, t)| t.active).collect();
        let updates: Vec<Result<(usize, TrialUpdate)>> = self.execution.map(&active, |&(i, t)| {
            update_trial(problem, config, &streams, i, step, t).map(|u| (i, u))
        });
        for u in updates {
            let (i, u) = u?;
            let t = &mut self.trials[i];
            t.energy = u.energy;
            t.raw_energy = u.raw_energy;
            t.params = u.params;
        }

        let temperature = self.temperature;
        let evaluated: Vec<usize> = self.active_indices();
        self.reallocate(temperature)?;
        self.prune_at(temperature)?;
        self.step = step;
        let weights = self.active_weights(temperature)?;
        // Mixed energy over the trials that survive this step.
        self.record_step(temperature, &weights);
        for i in evaluated {
            let t = &self.trials[i];
            self.record.rows.push(Row {
                step,
                trial: t.label,
                epsilon: t.energy.value,
                stderr: t.energy.std_error,
                shots: t.shots_assigned,
                temperature,
                active: t.active,
            });
        }
        self.temperature = anneal_step(temperature, self.config.decay)?;
        Ok(self)
    }

    /// Lowest weighting-energy active trial.
    pub fn best_active(&self) -> &TrialState {
        let source = self.config.weight_source;
        self.trials
            .iter()
            .filter(|t| t.active)
            .min_by(|a, b| a.weight_energy(source).total_cmp(&b.weight_energy(source)))
            .expect("pool never empties")
    }
}

impl ScheduleConfig {
    /// Budget for one evaluation given the shots available for it.
    fn budget(&self, shots: u64, min_shots: u64) -> Result<Budget> {
        match self.mode {
            Mode::Exact => Ok(Budget::Exact),
            Mode::Shots if shots < min_shots => Err(Error::InsufficientShots { required: min_shots, available: shots }),
            Mode::Shots => Ok(Budget::Shots(shots)),
        }
    }

    /// `(estimation, per-shifted-evaluation)` budgets for a trial holding `shots`.
    ///
    /// Shifted evaluations never drop below one shot per measurement group,
    /// so trials near the pruning threshold may spend slightly more than
    /// their gradient share.
    fn split_trial_budget(&self, shots: u64, n_params: usize, min_shots: u64) -> Result<(Budget, Budget)> {
        if self.mode == Mode::Exact {
            return Ok((Budget::Exact, Budget::Exact));
        }
        let gradient_total = (shots as f64 * self.gradient_shot_fraction).round() as u64;
        let estimate = self.budget(shots - gradient_total, min_shots)?;
        let evals = (2 * n_params).max(1) as u64;
        let per_eval = (gradient_total / evals).max(min_shots);
        Ok((estimate, Budget::Shots(per_eval)))
    }
}

fn update_trial(
    problem: &Problem,
    config: &ScheduleConfig,
    streams: &RngStreams,
    index: usize,
    step: usize,
    trial: &TrialState,
) -> Result<TrialUpdate> {
    let objective = &problem.objective;
    let circuit = &problem.state_prep;
    let (est_budget, grad_budget) =
        config.split_trial_budget(trial.shots_assigned, circuit.n_params(), objective.min_shots())?;
    let est = objective.evaluate(circuit, &trial.params, est_budget, &mut streams.stream(index, step, Purpose::Estimate, 0))?;
    let grad = estimate_gradient(
        circuit,
        &trial.params,
        objective,
        grad_budget,
        Some(est.number.value - objective.target),
        |k| streams.stream(index, step, Purpose::Gradient, k),
    )?;
    let params = trial.params.iter().zip(&grad.values).map(|(p, g)| p - config.learning_rate * g).collect();
    Ok(TrialUpdate { energy: est.value, raw_energy: est.energy, params })
}

/// Runs the full schedule: annealing until condensation (one active trial and
/// temperature below the floor) or `max_steps`, then refinement of the
/// survivor when condensed.
pub fn run(config: &ScheduleConfig, problem: &Problem, seed: u64) -> Result<RunRecord> {
    run_with(config, problem, seed, Execution::default())
}

pub fn run_with(config: &ScheduleConfig, problem: &Problem, seed: u64, execution: Execution) -> Result<RunRecord> {
    let mut ens = Ensemble::new(problem, config.clone(), seed)?.with_execution(execution);

    let mut condensation_step = (ens.active_count() == 1).then_some(0);
    let mut condensed = false;
    while ens.step < config.max_steps {
        ens = ens.step(problem)?;
        if condensation_step.is_none() && ens.active_count() == 1 {
            condensation_step = Some(ens.step);
        }
        if ens.active_count() == 1 && ens.temperature < config.temperature_floor {
            condensed = true;
            break;
        }
    }
    let annealing_steps = ens.step;
    let annealed_exact_energy = problem.exact_energy(&ens.best_active().params)?;
    if condensed {
        for _ in 0..config.refinement_steps {
            ens = ens.step(problem)?;
        }
    }

    let best = ens.best_active().clone();
    let pruned_at = ens
        .trials
        .iter()
        .map(|t| {
            let at = ens.record.rows.iter().find(|r| r.trial == t.label && !r.active).map(|r| r.step);
            (t.label, at)
        })
        .collect();
    let summary = RunSummary {
        condensation_step,
        annealing_steps,
        total_steps: ens.step,
        survivor: best.label,
        final_energy: best.energy.value,
        final_stderr: best.energy.std_error,
        annealed_exact_energy,
        final_exact_energy: problem.exact_energy(&best.params)?,
        final_params: best.params.clone(),
        pruned_at,
    };
    let mut record = ens.record;
    record.summary = Some(summary);
    Ok(record)
}

/// Plain gradient-descent loop on one trial with the whole budget, drawing
/// from the same named streams the ensemble would use for trial 0. Returns the
/// parameter vector after each step (index 0 is the start).
pub fn single_trial_descent(problem: &Problem, config: &ScheduleConfig, seed: u64, steps: usize) -> Result<Vec<Vec<f64>>> {
    config.validate()?;
    let trial = problem.trials.first().ok_or_else(|| Error::InvalidInput("problem has no trials".into()))?;
    let streams = RngStreams::new(seed);
    let objective = &problem.objective;
    let circuit = &problem.state_prep;
    let mut params = trial.params0.clone();
    let mut path = vec![params.clone()];
    for step in 1..=steps {
        let (est_budget, grad_budget) =
            config.split_trial_budget(config.total_shots, circuit.n_params(), objective.min_shots())?;
        let est = objective.evaluate(circuit, &params, est_budget, &mut streams.stream(0, step, Purpose::Estimate, 0))?;
        let grad = estimate_gradient(
            circuit,
            &params,
            objective,
            grad_budget,
            Some(est.number.value - objective.target),
            |k| streams.stream(0, step, Purpose::Gradient, k),
        )?;
        for (p, g) in params.iter_mut().zip(&grad.values) {
            *p -= config.learning_rate * g;
        }
        path.push(params.clone());
    }
    Ok(path)
}
