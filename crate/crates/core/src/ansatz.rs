//! Hardware-efficient trial circuit, fermionic Fourier block and the six
//! half-filling starting points.
//!
//! The trial circuit alternates a layer of single-qubit rotations with the
//! entangling CNOT pattern. No entangler follows the final rotation layer, so
//! angle `pi` on chosen qubits of that layer writes a bitstring directly.

use std::f64::consts::{FRAC_PI_2, PI};

use crate::error::{invalid, Result};
use crate::hubbard::{TrialLabel, N_QUBITS};
use crate::qsim::{bitstring_to_index, Circuit, Gate};
use crate::pauli::qubit_bit;

/// Single-qubit rotation used in every rotation slot.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum RotationKind {
    /// One `Ry(theta)` per qubit per layer.
    #[default]
    Y,
    /// `Rz Ry Rz` per qubit per layer (three angles).
    Euler,
}

impl RotationKind {
    pub fn angles_per_qubit(self) -> usize {
        match self {
            Self::Y => 1,
            Self::Euler => 3,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AnsatzSpec {
    pub n_layers: usize,
    pub entangler: Vec<(usize, usize)>,
    pub rotation: RotationKind,
    pub include_fourier_tail: bool,
}

impl Default for AnsatzSpec {
    fn default() -> Self {
        Self {
            n_layers: 2,
            entangler: vec![(0, 1), (1, 2), (2, 3)],
            rotation: RotationKind::Y,
            include_fourier_tail: true,
        }
    }
}

impl AnsatzSpec {
    pub fn with_layers(n_layers: usize) -> Self {
        Self { n_layers, ..Self::default() }
    }

    pub fn without_fourier(mut self) -> Self {
        self.include_fourier_tail = false;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_layers == 0 {
            return invalid("n_layers must be at least 1");
        }
        for &(c, t) in &self.entangler {
            if c >= N_QUBITS || t >= N_QUBITS || c == t {
                return invalid(format!("entangler pair ({c}, {t}) is not a valid CNOT on {N_QUBITS} qubits"));
            }
        }
        Ok(())
    }

    pub fn n_params(&self) -> usize {
        self.n_layers * N_QUBITS * self.rotation.angles_per_qubit()
    }

    /// Parameter index of the `Ry` angle on `qubit` in `layer`.
    pub fn ry_slot(&self, layer: usize, qubit: usize) -> usize {
        let per = self.rotation.angles_per_qubit();
        layer * N_QUBITS * per + qubit * per + per / 2
    }
}

/// Trial circuit, followed by the Fourier block when enabled.
pub fn build_ansatz(spec: &AnsatzSpec) -> Result<Circuit> {
    spec.validate()?;
    let mut c = Circuit::new(N_QUBITS);
    for layer in 0..spec.n_layers {
        for q in 0..N_QUBITS {
            match spec.rotation {
                RotationKind::Y => {
                    c.push_parameterized(Gate::ry(q, 0.0))?;
                }
                RotationKind::Euler => {
                    c.push_parameterized(Gate::rz(q, 0.0))?;
                    c.push_parameterized(Gate::ry(q, 0.0))?;
                    c.push_parameterized(Gate::rz(q, 0.0))?;
                }
            }
        }
        if layer + 1 < spec.n_layers {
            for &(ctrl, tgt) in &spec.entangler {
                c.push(Gate::cnot(ctrl, tgt))?;
            }
        }
    }
    if spec.include_fourier_tail {
        c.extend(&fourier_transform_circuit())?;
    }
    Ok(c)
}

/// Real rotation by `angle / 2` inside the `{|01>, |10>}` subspace of qubits
/// `(a, b)`; `|00>` and `|11>` are left untouched.
fn givens(c: &mut Circuit, a: usize, b: usize, angle: f64) -> Result<()> {
    c.push(Gate::cnot(b, a))?;
    // controlled-Ry(angle) from a onto b
    c.push(Gate::ry(b, angle / 2.0))?;
    c.push(Gate::cnot(a, b))?;
    c.push(Gate::ry(b, -angle / 2.0))?;
    c.push(Gate::cnot(a, b))?;
    c.push(Gate::cnot(b, a))?;
    Ok(())
}

/// Two-mode fermionic Fourier transform on each spin sector.
///
/// Site-1 occupation `|10>` maps to the antibonding orbital
/// `(|10> - |01>)/sqrt(2)` and site-2 occupation `|01>` to the bonding orbital
/// `(|10> + |01>)/sqrt(2)`. Conjugating the hopping Hamiltonian by this block
/// makes it diagonal in the computational basis.
pub fn fourier_transform_circuit() -> Circuit {
    let mut c = Circuit::new(N_QUBITS);
    for (a, b) in [(0, 1), (2, 3)] {
        givens(&mut c, a, b, -FRAC_PI_2).expect("valid qubits");
    }
    c
}

/// Starting parameters that prepare one labelled basis state.
#[derive(Clone, Debug, PartialEq)]
pub struct TrialInit {
    pub label: TrialLabel,
    pub params0: Vec<f64>,
}

/// Parameters that write `bits` with the final rotation layer (angle `pi` on
/// each occupied qubit) and leave every other angle at zero.
pub fn basis_params(spec: &AnsatzSpec, bits: &str) -> Result<Vec<f64>> {
    spec.validate()?;
    let index = bitstring_to_index(N_QUBITS, bits)?;
    let mut params = vec![0.0; spec.n_params()];
    let last = spec.n_layers - 1;
    for q in 0..N_QUBITS {
        if index & qubit_bit(N_QUBITS, q) != 0 {
            params[spec.ry_slot(last, q)] = PI;
        }
    }
    Ok(params)
}

pub fn initial_trials(spec: &AnsatzSpec) -> Result<Vec<TrialInit>> {
    TrialLabel::ALL
        .iter()
        .map(|&label| Ok(TrialInit { label, params0: basis_params(spec, label.bitstring())? }))
        .collect()
}
