//! Shot-based estimation of Pauli-sum expectations, the number-penalized
//! objective and its parameter-shift gradient.
//!
//! Observables are measured in qubit-wise commuting groups. Each group is
//! rotated into the Z basis, sampled, and every member is read off the same
//! bitstrings. The identity coefficient is added without measurement.

use std::f64::consts::FRAC_PI_2;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::alloc::largest_remainder;
use crate::error::{invalid, Error, Result};
use crate::pauli::{Pauli, PauliString, PauliSum};
use crate::qsim::{apply_circuit, exact_expectation, sample_bitstrings, Circuit, Gate, Histogram, Statevector};

/// Shots available to one evaluation, or the infinite-shot limit.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Budget {
    Exact,
    Shots(u64),
}

#[derive(Clone, Debug, PartialEq)]
pub struct GroupMember {
    pub coeff: f64,
    pub string: PauliString,
    /// Basis-index mask whose parity gives the member's eigenvalue after rotation.
    pub z_mask: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MeasurementGroup {
    pub basis_rotation: Circuit,
    pub members: Vec<GroupMember>,
}

impl MeasurementGroup {
    /// Sum of member coefficient magnitudes; drives the shot split.
    pub fn weight(&self) -> f64 {
        self.members.iter().map(|m| m.coeff.abs()).sum()
    }

    /// Per-shot value of the group observable for outcome `index`.
    fn outcome_value(&self, index: usize) -> f64 {
        self.members
            .iter()
            .map(|m| if (index & m.z_mask).count_ones().is_multiple_of(2) { m.coeff } else { -m.coeff })
            .sum()
    }

    /// Sample mean and squared standard error from a histogram.
    fn estimate(&self, hist: &Histogram) -> (f64, f64) {
        let n = hist.total();
        if n == 0 {
            return (0.0, 0.0);
        }
        let values: Vec<(f64, u64)> = hist
            .counts()
            .iter()
            .enumerate()
            .filter(|(_, &c)| c > 0)
            .map(|(i, &c)| (self.outcome_value(i), c))
            .collect();
        let nf = n as f64;
        let mean = values.iter().map(|(v, c)| v * *c as f64).sum::<f64>() / nf;
        if n == 1 {
            // One sample carries no spread information; fall back to the range bound.
            return (mean, self.weight().powi(2));
        }
        if let [(v, _)] = values[..] {
            return (v, 0.0);
        }
        let ss: f64 = values.iter().map(|(v, c)| (v - mean).powi(2) * *c as f64).sum();
        (mean, ss / (nf - 1.0) / nf)
    }
}

/// Partitions the non-identity terms into qubit-wise commuting groups by
/// greedy first fit, visiting terms in descending `|coefficient|` (stable).
pub fn group_commuting(observable: &PauliSum) -> Vec<MeasurementGroup> {
    let mut terms: Vec<&(f64, PauliString)> = observable.non_identity_terms().collect();
    terms.sort_by(|a, b| b.0.abs().total_cmp(&a.0.abs()));

    let mut buckets: Vec<Vec<&(f64, PauliString)>> = Vec::new();
    for t in terms {
        match buckets.iter_mut().find(|b| b.iter().all(|m| m.1.qubit_wise_commutes(&t.1))) {
            Some(b) => b.push(t),
            None => buckets.push(vec![t]),
        }
    }

    let n = observable.n_qubits();
    buckets
        .into_iter()
        .map(|members| {
            let mut basis = Circuit::new(n);
            for q in 0..n {
                let letter = members.iter().map(|m| m.1.get(q)).find(|&p| p != Pauli::I);
                match letter {
                    Some(Pauli::X) => {
                        basis.push(Gate::H(q)).expect("qubit in range");
                    }
                    Some(Pauli::Y) => {
                        basis.push(Gate::Phase { qubit: q, phi: -FRAC_PI_2 }).expect("qubit in range");
                        basis.push(Gate::H(q)).expect("qubit in range");
                    }
                    _ => {}
                }
            }
            MeasurementGroup {
                basis_rotation: basis,
                members: members
                    .into_iter()
                    .map(|(c, s)| GroupMember { coeff: *c, string: s.clone(), z_mask: s.support_mask() })
                    .collect(),
            }
        })
        .collect()
}

/// An observable together with its measurement grouping.
#[derive(Clone, Debug, PartialEq)]
pub struct GroupedObservable {
    observable: PauliSum,
    groups: Vec<MeasurementGroup>,
}

impl GroupedObservable {
    pub fn new(observable: PauliSum) -> Self {
        let groups = group_commuting(&observable);
        Self { observable, groups }
    }

    pub fn observable(&self) -> &PauliSum {
        &self.observable
    }

    pub fn groups(&self) -> &[MeasurementGroup] {
        &self.groups
    }

    pub fn constant(&self) -> f64 {
        self.observable.identity_coefficient()
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EnergyEstimate {
    pub value: f64,
    pub std_error: f64,
    pub shots_used: u64,
}

impl EnergyEstimate {
    pub fn exact(value: f64) -> Self {
        Self { value, std_error: 0.0, shots_used: 0 }
    }
}

/// Splits `shots` over groups: one shot each, the rest by group weight.
fn split_over_groups(weights: &[f64], shots: u64) -> Result<Vec<u64>> {
    let required = weights.len() as u64;
    if shots < required {
        return Err(Error::InsufficientShots { required, available: shots });
    }
    let rest = largest_remainder(weights, shots - required);
    Ok(rest.into_iter().map(|r| r + 1).collect())
}

/// Estimates several grouped observables on one state from a shared budget.
fn estimate_many<R: Rng + ?Sized>(
    state: &Statevector,
    observables: &[&GroupedObservable],
    budget: Budget,
    rng: &mut R,
) -> Result<Vec<EnergyEstimate>> {
    let shots = match budget {
        Budget::Exact => {
            return observables
                .iter()
                .map(|o| Ok(EnergyEstimate::exact(exact_expectation(state, o.observable())?)))
                .collect();
        }
        Budget::Shots(n) => n,
    };
    for o in observables {
        if o.observable().n_qubits() != state.n_qubits() {
            return invalid(format!(
                "state has {} qubits, observable has {}",
                state.n_qubits(),
                o.observable().n_qubits()
            ));
        }
    }
    let weights: Vec<f64> = observables.iter().flat_map(|o| o.groups.iter().map(|g| g.weight())).collect();
    let split = split_over_groups(&weights, shots)?;

    let mut split = split.into_iter();
    let mut out = Vec::with_capacity(observables.len());
    for o in observables {
        let mut value = o.constant();
        let mut var = 0.0;
        let mut used = 0;
        for g in &o.groups {
            let n = split.next().expect("one allocation per group");
            let rotated = apply_circuit(state, &g.basis_rotation, &[])?;
            let hist = sample_bitstrings(&rotated, n, rng);
            let (mean, se2) = g.estimate(&hist);
            value += mean;
            var += se2;
            used += n;
        }
        out.push(EnergyEstimate { value, std_error: var.sqrt(), shots_used: used });
    }
    Ok(out)
}

/// `U(params)|0...0>`.
pub fn prepare(state_prep: &Circuit, params: &[f64]) -> Result<Statevector> {
    apply_circuit(&Statevector::zero(state_prep.n_qubits())?, state_prep, params)
}

/// Estimates `<O>` on `U(params)|0...0>`.
///
/// Shots are split across the commuting groups in proportion to their summed
/// coefficient magnitudes after every group receives one shot; fewer shots
/// than groups is an error.
pub fn estimate_energy<R: Rng + ?Sized>(
    state_prep: &Circuit,
    params: &[f64],
    observable: &GroupedObservable,
    budget: Budget,
    rng: &mut R,
) -> Result<EnergyEstimate> {
    let state = prepare(state_prep, params)?;
    Ok(estimate_many(&state, &[observable], budget, rng)?.remove(0))
}

/// Sign convention for the particle-number penalty.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum PenaltySign {
    /// `E + lambda |<n> - target|`: leaving the target sector costs energy.
    #[default]
    Added,
    /// `E - lambda |<n> - target|`, the formula with the opposite sign.
    Subtracted,
}

impl PenaltySign {
    fn factor(self) -> f64 {
        match self {
            Self::Added => 1.0,
            Self::Subtracted => -1.0,
        }
    }
}

/// One evaluation of the penalized objective with its components.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ObjectiveEstimate {
    pub value: EnergyEstimate,
    pub energy: EnergyEstimate,
    pub number: EnergyEstimate,
}

/// `<H> +/- lambda |<n> - target|` with pre-grouped observables.
#[derive(Clone, Debug, PartialEq)]
pub struct PenalizedObjective {
    hamiltonian: GroupedObservable,
    number: GroupedObservable,
    pub lambda: f64,
    pub target: f64,
    pub sign: PenaltySign,
}

impl PenalizedObjective {
    pub fn new(hamiltonian: PauliSum, number: PauliSum, lambda: f64, target: f64) -> Result<Self> {
        if !(lambda >= 0.0 && lambda.is_finite()) {
            return invalid(format!("lambda must be finite and non-negative, got {lambda}"));
        }
        if hamiltonian.n_qubits() != number.n_qubits() {
            return invalid("Hamiltonian and number operator act on different registers");
        }
        Ok(Self {
            hamiltonian: GroupedObservable::new(hamiltonian),
            number: GroupedObservable::new(number),
            lambda,
            target,
            sign: PenaltySign::Added,
        })
    }

    pub fn with_sign(mut self, sign: PenaltySign) -> Self {
        self.sign = sign;
        self
    }

    pub fn hamiltonian(&self) -> &GroupedObservable {
        &self.hamiltonian
    }

    pub fn number(&self) -> &GroupedObservable {
        &self.number
    }

    fn measures_number(&self) -> bool {
        self.lambda > 0.0
    }

    /// Groups measured per evaluation; the smallest usable shot budget.
    pub fn min_shots(&self) -> u64 {
        let n = self.hamiltonian.groups.len() + if self.measures_number() { self.number.groups.len() } else { 0 };
        n as u64
    }

    fn combine(&self, energy: EnergyEstimate, number: EnergyEstimate) -> ObjectiveEstimate {
        let s = self.sign.factor();
        let value = EnergyEstimate {
            value: energy.value + s * self.lambda * (number.value - self.target).abs(),
            std_error: (energy.std_error.powi(2) + (self.lambda * number.std_error).powi(2)).sqrt(),
            shots_used: energy.shots_used + number.shots_used,
        };
        ObjectiveEstimate { value, energy, number }
    }

    pub fn evaluate_state<R: Rng + ?Sized>(
        &self,
        state: &Statevector,
        budget: Budget,
        rng: &mut R,
    ) -> Result<ObjectiveEstimate> {
        if self.measures_number() {
            let est = estimate_many(state, &[&self.hamiltonian, &self.number], budget, rng)?;
            Ok(self.combine(est[0], est[1]))
        } else {
            let energy = estimate_many(state, &[&self.hamiltonian], budget, rng)?[0];
            Ok(self.combine(energy, EnergyEstimate::exact(self.target)))
        }
    }

    pub fn evaluate<R: Rng + ?Sized>(
        &self,
        state_prep: &Circuit,
        params: &[f64],
        budget: Budget,
        rng: &mut R,
    ) -> Result<ObjectiveEstimate> {
        self.evaluate_state(&prepare(state_prep, params)?, budget, rng)
    }

    /// Exact objective value at `params`.
    pub fn exact_value(&self, state_prep: &Circuit, params: &[f64]) -> Result<f64> {
        // Exact evaluation never draws from the stream.
        let mut never = ChaCha8Rng::seed_from_u64(0);
        Ok(self.evaluate(state_prep, params, Budget::Exact, &mut never)?.value.value)
    }
}

/// Penalized objective estimate on `U(params)|0...0>`.
pub fn penalized_objective<R: Rng + ?Sized>(
    state_prep: &Circuit,
    params: &[f64],
    objective: &PenalizedObjective,
    budget: Budget,
    rng: &mut R,
) -> Result<EnergyEstimate> {
    Ok(objective.evaluate(state_prep, params, budget, rng)?.value)
}

#[derive(Clone, Debug, PartialEq)]
pub struct GradientEstimate {
    pub values: Vec<f64>,
    pub std_errors: Vec<f64>,
    pub shots_used: u64,
}

fn subgradient_sign(deviation: f64) -> f64 {
    if deviation > 0.0 {
        1.0
    } else if deviation < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Parameter-shift gradient of the penalized objective.
///
/// Component `i` is `[f(theta_i + pi/2) - f(theta_i - pi/2)] / 2`, exact for
/// parameters entering through single rotations `exp(-i theta P / 2)`. The
/// penalty contributes `sign(<n> - target)` times the shifted number
/// difference; `deviation` supplies `<n> - target` at `params` when already
/// known, otherwise it is estimated with one extra evaluation. Evaluation `k`
/// draws from `rng_for(k)`: shifts use `2i` and `2i + 1`, the deviation
/// estimate uses `2 * n_params`.
pub fn estimate_gradient<R, F>(
    state_prep: &Circuit,
    params: &[f64],
    objective: &PenalizedObjective,
    budget_per_eval: Budget,
    deviation: Option<f64>,
    mut rng_for: F,
) -> Result<GradientEstimate>
where
    R: Rng,
    F: FnMut(usize) -> R,
{
    let n = state_prep.n_params();
    if params.len() != n {
        return invalid(format!("circuit has {n} free parameters, got {}", params.len()));
    }
    let mut shots_used = 0;
    let deviation = match deviation {
        Some(d) => d,
        None if objective.measures_number() => {
            let est = objective.evaluate(state_prep, params, budget_per_eval, &mut rng_for(2 * n))?;
            shots_used += est.value.shots_used;
            est.number.value - objective.target
        }
        None => 0.0,
    };
    let penalty_scale = objective.sign.factor() * objective.lambda * subgradient_sign(deviation);

    let mut values = Vec::with_capacity(n);
    let mut std_errors = Vec::with_capacity(n);
    let mut shifted = params.to_vec();
    for i in 0..n {
        shifted[i] = params[i] + FRAC_PI_2;
        let plus = objective.evaluate(state_prep, &shifted, budget_per_eval, &mut rng_for(2 * i))?;
        shifted[i] = params[i] - FRAC_PI_2;
        let minus = objective.evaluate(state_prep, &shifted, budget_per_eval, &mut rng_for(2 * i + 1))?;
        shifted[i] = params[i];

        let d_energy = (plus.energy.value - minus.energy.value) / 2.0;
        let d_number = (plus.number.value - minus.number.value) / 2.0;
        values.push(d_energy + penalty_scale * d_number);
        let var_e = plus.energy.std_error.powi(2) + minus.energy.std_error.powi(2);
        let var_n = plus.number.std_error.powi(2) + minus.number.std_error.powi(2);
        std_errors.push((var_e + penalty_scale.powi(2) * var_n).sqrt() / 2.0);
        shots_used += plus.value.shots_used + minus.value.shots_used;
    }
    Ok(GradientEstimate { values, std_errors, shots_used })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ansatz::{build_ansatz, initial_trials, AnsatzSpec};
    use crate::hubbard::{build_hubbard_hamiltonian, particle_number_operator, HubbardParams, TrialLabel};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn ps(s: &str) -> PauliString {
        s.parse().unwrap()
    }

    fn hub() -> PauliSum {
        build_hubbard_hamiltonian(HubbardParams::default())
    }

    fn objective(lambda: f64) -> PenalizedObjective {
        PenalizedObjective::new(hub(), particle_number_operator(), lambda, 2.0).unwrap()
    }

    fn params_for(spec: &AnsatzSpec, label: TrialLabel) -> Vec<f64> {
        initial_trials(spec).unwrap().into_iter().find(|t| t.label == label).unwrap().params0
    }

    #[test]
    fn hubbard_grouping() {
        let groups = group_commuting(&hub());
        assert_eq!(groups.len(), 3);
        let z_group = groups.iter().find(|g| g.members.iter().all(|m| m.string.is_diagonal())).unwrap();
        assert_eq!(z_group.members.len(), 6);
        let total: usize = groups.iter().map(|g| g.members.len()).sum();
        assert_eq!(total, 10);
    }

    #[test]
    fn trivial_groupings() {
        let all_z = PauliSum::from_terms(3, [(1.0, ps("ZII")), (0.5, ps("ZZI")), (-2.0, ps("IIZ"))]).unwrap();
        assert_eq!(group_commuting(&all_z).len(), 1);
        let single = PauliSum::from_terms(2, [(0.3, ps("XY"))]).unwrap();
        let g = group_commuting(&single);
        assert_eq!(g.len(), 1);
        assert_eq!(g[0].members.len(), 1);
    }

    #[test]
    fn basis_rotation_measures_x_and_y() {
        // |+> has <X> = 1; S|+> has <Y> = 1.
        let x = GroupedObservable::new(PauliSum::from_terms(1, [(1.0, ps("X"))]).unwrap());
        let y = GroupedObservable::new(PauliSum::from_terms(1, [(1.0, ps("Y"))]).unwrap());
        let mut prep = Circuit::new(1);
        prep.push(Gate::H(0)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let e = estimate_energy(&prep, &[], &x, Budget::Shots(50), &mut rng).unwrap();
        assert_eq!((e.value, e.std_error), (1.0, 0.0));
        prep.push(Gate::Phase { qubit: 0, phi: FRAC_PI_2 }).unwrap();
        let e = estimate_energy(&prep, &[], &y, Budget::Shots(50), &mut rng).unwrap();
        assert_eq!((e.value, e.std_error), (1.0, 0.0));
    }

    #[test]
    fn eigenstate_of_diagonal_observable() {
        let obs = GroupedObservable::new(
            PauliSum::from_terms(2, [(0.7, ps("ZI")), (0.2, ps("ZZ")), (1.5, ps("II"))]).unwrap(),
        );
        let mut prep = Circuit::new(2);
        prep.push(Gate::X(1)).unwrap();
        let e = estimate_energy(&prep, &[], &obs, Budget::Shots(37), &mut ChaCha8Rng::seed_from_u64(5)).unwrap();
        assert_eq!(e.value, 0.7 - 0.2 + 1.5);
        assert_eq!(e.std_error, 0.0);
        assert_eq!(e.shots_used, 37);
    }

    #[test]
    fn insufficient_shots() {
        let obs = GroupedObservable::new(hub());
        let prep = Circuit::new(4);
        let err = estimate_energy(&prep, &[], &obs, Budget::Shots(2), &mut ChaCha8Rng::seed_from_u64(0));
        assert_eq!(err, Err(Error::InsufficientShots { required: 3, available: 2 }));
        assert_eq!(objective(1.0).min_shots(), 4);
        assert_eq!(objective(0.0).min_shots(), 3);
    }

    #[test]
    fn best_trial_million_shots() {
        let spec = AnsatzSpec::default();
        let c = build_ansatz(&spec).unwrap();
        let obs = GroupedObservable::new(hub());
        let params = params_for(&spec, TrialLabel::VI);
        let e = estimate_energy(&c, &params, &obs, Budget::Shots(1_000_000), &mut ChaCha8Rng::seed_from_u64(8))
            .unwrap();
        assert!((e.value + 1.5).abs() < 4.0 * e.std_error, "{e:?}");
        assert!(e.std_error > 0.0);
    }

    #[test]
    fn penalty_values() {
        let spec = AnsatzSpec::default();
        let c = build_ansatz(&spec).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        // Half-filled trial, shots: the number estimate is exact so the penalty vanishes.
        let obj = objective(10.0);
        let est = obj.evaluate(&c, &params_for(&spec, TrialLabel::II), Budget::Shots(4000), &mut rng).unwrap();
        assert_eq!(est.number.value, 2.0);
        assert_eq!(est.value.value, est.energy.value);

        // Vacuum, exact: H value plus |0 - 2|.
        let obj = objective(1.0);
        let zero = vec![0.0; c.n_params()];
        let est = obj.evaluate(&c, &zero, Budget::Exact, &mut rng).unwrap();
        assert!((est.value.value - (est.energy.value + 2.0)).abs() < 1e-12);

        // The opposite sign subtracts.
        let lit = objective(1.0).with_sign(PenaltySign::Subtracted);
        let est = lit.evaluate(&c, &zero, Budget::Exact, &mut rng).unwrap();
        assert!((est.value.value - (est.energy.value - 2.0)).abs() < 1e-12);

        // Both fermions on site 1 without the Fourier block: energy u.
        let bare = build_ansatz(&spec.clone().without_fourier()).unwrap();
        let v = obj.exact_value(&bare, &params_for(&spec, TrialLabel::I)).unwrap();
        assert!((v - 1.0).abs() < 1e-12);
    }

    #[test]
    fn negative_lambda_rejected() {
        assert!(PenalizedObjective::new(hub(), particle_number_operator(), -1.0, 2.0).is_err());
    }

    #[test]
    fn gradient_vanishes_at_ground_eigenstates() {
        // Y-rotation on one qubit with a Z observable: |0> and |1> are eigenstates.
        let z = PauliSum::from_terms(1, [(1.0, ps("Z"))]).unwrap();
        let n = PauliSum::from_terms(1, [(0.5, ps("I")), (-0.5, ps("Z"))]).unwrap();
        let obj = PenalizedObjective::new(z, n, 0.0, 1.0).unwrap();
        let mut c = Circuit::new(1);
        c.push_parameterized(Gate::ry(0, 0.0)).unwrap();
        for theta in [0.0, std::f64::consts::PI] {
            let g = estimate_gradient(&c, &[theta], &obj, Budget::Exact, None, |_| ChaCha8Rng::seed_from_u64(0))
                .unwrap();
            assert!(g.values[0].abs() < 1e-12);
        }
        // d/dtheta cos(theta) = -sin(theta)
        let g = estimate_gradient(&c, &[0.3], &obj, Budget::Exact, None, |_| ChaCha8Rng::seed_from_u64(0))
            .unwrap();
        assert!((g.values[0] + 0.3f64.sin()).abs() < 1e-12);
    }
}
