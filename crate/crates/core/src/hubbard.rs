//! Two-site Fermi-Hubbard model under the Jordan-Wigner encoding.
//!
//! Fermionic modes map to qubits as
//!
//! | qubit | mode              |
//! |-------|-------------------|
//! | 0     | site 1, spin up   |
//! | 1     | site 2, spin up   |
//! | 2     | site 1, spin down |
//! | 3     | site 2, spin down |
//!
//! so each hopping term couples adjacent modes and carries no Z string.
//! Occupied modes are `|1>`.

use std::fmt;

use nalgebra::SymmetricEigen;
use num_complex::Complex64 as C64;

use crate::error::{invalid, Error, Result};
pub use crate::pauli::{Pauli, PauliString, PauliSum};
use crate::qsim::Statevector;

pub const N_QUBITS: usize = 4;

/// Dense diagonalization refuses registers wider than this.
pub const MAX_DENSE_QUBITS: usize = 8;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HubbardParams {
    /// Hopping amplitude.
    pub t: f64,
    /// On-site interaction.
    pub u: f64,
}

impl Default for HubbardParams {
    fn default() -> Self {
        Self { t: 1.0, u: 1.0 }
    }
}

impl HubbardParams {
    pub fn new(t: f64, u: f64) -> Result<Self> {
        if !t.is_finite() || !u.is_finite() {
            return invalid(format!("Hubbard parameters must be finite, got t={t}, u={u}"));
        }
        Ok(Self { t, u })
    }

    /// Closed-form ground energy of the half-filled dimer, `(u - sqrt(u^2 + 16 t^2)) / 2`.
    pub fn half_filling_ground_energy(&self) -> f64 {
        (self.u - (self.u * self.u + 16.0 * self.t * self.t).sqrt()) / 2.0
    }
}

fn term(ops: &[(usize, Pauli)]) -> PauliString {
    PauliString::from_sparse(N_QUBITS, ops).expect("qubits in range")
}

/// Hopping part only, `-(t/2)(XX + YY)` in each spin sector.
pub fn hopping_hamiltonian(t: f64) -> PauliSum {
    let mut h = PauliSum::new(N_QUBITS);
    for (a, b) in [(0, 1), (2, 3)] {
        for p in [Pauli::X, Pauli::Y] {
            h.add_term(-t / 2.0, term(&[(a, p), (b, p)])).expect("4-qubit term");
        }
    }
    h
}

/// Jordan-Wigner qubit Hamiltonian of the two-site Hubbard model.
pub fn build_hubbard_hamiltonian(params: HubbardParams) -> PauliSum {
    let HubbardParams { t, u } = params;
    let mut h = hopping_hamiltonian(t);
    // u n_a n_b = (u/4)(I - Z_a - Z_b + Z_a Z_b) for each site's (up, down) pair.
    h.add_term(u / 2.0, PauliString::identity(N_QUBITS)).expect("4-qubit term");
    for q in 0..N_QUBITS {
        h.add_term(-u / 4.0, term(&[(q, Pauli::Z)])).expect("4-qubit term");
    }
    for (up, down) in [(0, 2), (1, 3)] {
        h.add_term(u / 4.0, term(&[(up, Pauli::Z), (down, Pauli::Z)])).expect("4-qubit term");
    }
    h
}

/// `sum_j (I - Z_j) / 2` over the four modes.
pub fn particle_number_operator() -> PauliSum {
    let mut n = PauliSum::new(N_QUBITS);
    n.add_term(N_QUBITS as f64 / 2.0, PauliString::identity(N_QUBITS)).expect("4-qubit term");
    for q in 0..N_QUBITS {
        n.add_term(-0.5, term(&[(q, Pauli::Z)])).expect("4-qubit term");
    }
    n
}

/// Ascending eigenvalues of the dense matrix of `observable`.
pub fn spectrum(observable: &PauliSum) -> Result<Vec<f64>> {
    let eig = dense_eigen(observable)?;
    let mut values: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    values.sort_by(f64::total_cmp);
    Ok(values)
}

fn dense_eigen(observable: &PauliSum) -> Result<SymmetricEigen<C64, nalgebra::Dyn>> {
    let n = observable.n_qubits();
    if n > MAX_DENSE_QUBITS {
        return Err(Error::UnsupportedSize { n_qubits: n, max: MAX_DENSE_QUBITS });
    }
    Ok(SymmetricEigen::new(observable.to_dense()))
}

/// Lowest eigenvalue and a unit-norm eigenvector of `observable`.
pub fn exact_ground(observable: &PauliSum) -> Result<(f64, Statevector)> {
    let eig = dense_eigen(observable)?;
    let (idx, &energy) = eig
        .eigenvalues
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .ok_or_else(|| Error::InvalidInput("empty observable".into()))?;
    let col = eig.eigenvectors.column(idx);
    let norm = col.norm();
    let state = Statevector::from_amplitudes(col.iter().map(|a| a / norm).collect())?;
    Ok((energy, state))
}

/// Labels of the six half-filling initial configurations.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TrialLabel {
    I,
    II,
    III,
    IV,
    V,
    VI,
}

impl TrialLabel {
    pub const ALL: [TrialLabel; 6] = [Self::I, Self::II, Self::III, Self::IV, Self::V, Self::VI];

    pub fn roman(self) -> &'static str {
        match self {
            Self::I => "I",
            Self::II => "II",
            Self::III => "III",
            Self::IV => "IV",
            Self::V => "V",
            Self::VI => "VI",
        }
    }

    /// Occupation bitstring (qubit 0 first) before the Fourier block.
    ///
    /// * `I`   `1010` both fermions on site 1
    /// * `II`  `1001` up on site 1, down on site 2
    /// * `III` `0110` up on site 2, down on site 1
    /// * `IV`  `1100` both spin up
    /// * `V`   `0011` both spin down
    /// * `VI`  `0101` both fermions on site 2
    pub fn bitstring(self) -> &'static str {
        match self {
            Self::I => "1010",
            Self::II => "1001",
            Self::III => "0110",
            Self::IV => "1100",
            Self::V => "0011",
            Self::VI => "0101",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        let s = s.strip_prefix("psi_").unwrap_or(s);
        Self::ALL.into_iter().find(|l| l.roman() == s)
    }
}

impl fmt::Display for TrialLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "psi_{}", self.roman())
    }
}

/// The six weight-2 bitstrings of four modes, labelled.
pub fn half_filling_basis_states() -> Vec<(TrialLabel, &'static str)> {
    TrialLabel::ALL.iter().map(|&l| (l, l.bitstring())).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qsim::exact_expectation;

    fn ps(s: &str) -> PauliString {
        s.parse().unwrap()
    }

    #[test]
    fn hopping_only_terms() {
        let h = build_hubbard_hamiltonian(HubbardParams::new(1.0, 0.0).unwrap());
        assert_eq!(h.len(), 4);
        for s in ["XXII", "YYII", "IIXX", "IIYY"] {
            assert_eq!(h.coefficient_of(&ps(s)), -0.5);
        }
    }

    #[test]
    fn generic_term_count() {
        let h = build_hubbard_hamiltonian(HubbardParams::new(0.7, 1.3).unwrap());
        assert_eq!(h.len(), 11);
        assert_eq!(h.identity_coefficient(), 1.3 / 2.0);
        assert_eq!(h.coefficient_of(&ps("ZIZI")), 1.3 / 4.0);
        assert_eq!(h.coefficient_of(&ps("IZIZ")), 1.3 / 4.0);
        assert_eq!(h.coefficient_of(&ps("IIIZ")), -1.3 / 4.0);
    }

    #[test]
    fn atomic_limit_spectrum() {
        let h = build_hubbard_hamiltonian(HubbardParams::new(0.0, 1.0).unwrap());
        for e in spectrum(&h).unwrap() {
            let nearest = e.round();
            assert!((e - nearest).abs() < 1e-12 && (0.0..=2.0).contains(&nearest), "eigenvalue {e}");
        }
    }

    #[test]
    fn ground_energies() {
        let (e, state) = exact_ground(&build_hubbard_hamiltonian(HubbardParams::default())).unwrap();
        assert!((e - (1.0 - 17f64.sqrt()) / 2.0).abs() < 1e-10);
        assert!((state.norm() - 1.0).abs() < 1e-12);
        let (e, _) = exact_ground(&build_hubbard_hamiltonian(HubbardParams::new(1.0, 0.0).unwrap())).unwrap();
        assert!((e + 2.0).abs() < 1e-10);
    }

    #[test]
    fn ground_of_single_z() {
        let z = PauliSum::from_terms(1, [(1.0, ps("Z"))]).unwrap();
        let (e, state) = exact_ground(&z).unwrap();
        assert!((e + 1.0).abs() < 1e-12);
        assert!(state.fidelity(&Statevector::new_basis_state(1, "1").unwrap()) > 1.0 - 1e-12);
    }

    #[test]
    fn dense_cap() {
        let wide = PauliSum::from_terms(9, [(1.0, PauliString::identity(9))]).unwrap();
        assert!(matches!(exact_ground(&wide), Err(Error::UnsupportedSize { .. })));
    }

    #[test]
    fn number_operator_values() {
        let n = particle_number_operator();
        for (bits, want) in [("0000", 0.0), ("1111", 4.0), ("1010", 2.0)] {
            let s = Statevector::new_basis_state(4, bits).unwrap();
            assert_eq!(exact_expectation(&s, &n).unwrap(), want);
        }
    }

    #[test]
    fn half_filling_labels() {
        let states = half_filling_basis_states();
        assert_eq!(states.len(), 6);
        assert_eq!(states[0], (TrialLabel::I, "1010"));
        let n = particle_number_operator();
        let mut seen = std::collections::BTreeSet::new();
        for (_, bits) in &states {
            assert!(seen.insert(*bits));
            let s = Statevector::new_basis_state(4, bits).unwrap();
            assert_eq!(exact_expectation(&s, &n).unwrap(), 2.0);
        }
        assert_eq!(TrialLabel::parse("psi_VI"), Some(TrialLabel::VI));
        assert_eq!(TrialLabel::VI.to_string(), "psi_VI");
    }

    #[test]
    fn double_occupancy_energy_before_fourier() {
        // Both fermions on site 1: only the interaction contributes.
        let h = build_hubbard_hamiltonian(HubbardParams::default());
        let s = Statevector::new_basis_state(4, "1010").unwrap();
        assert!((exact_expectation(&s, &h).unwrap() - 1.0).abs() < 1e-12);
    }
}
