//! Dense statevector simulation of few-qubit circuits.
//!
//! Basis index convention: qubit 0 is the most significant bit, so the
//! bitstring `"10"` is index 2. Bitstrings are written qubit 0 first.

use std::f64::consts::FRAC_1_SQRT_2;

use num_complex::Complex64 as C64;
use rand::Rng;
use rand_distr::{Binomial, Distribution};

use crate::error::{invalid, Error, Result};
use crate::pauli::{qubit_bit, PauliSum};

/// Largest register the dense simulator accepts.
pub const MAX_QUBITS: usize = 16;

const NORM_TOLERANCE: f64 = 1e-10;

/// Normalized complex amplitude vector over `2^n_qubits` basis states.
#[derive(Clone, Debug, PartialEq)]
pub struct Statevector {
    n_qubits: usize,
    amps: Vec<C64>,
}

impl Statevector {
    /// `|0...0>`.
    pub fn zero(n_qubits: usize) -> Result<Self> {
        check_width(n_qubits)?;
        let mut amps = vec![C64::new(0.0, 0.0); 1 << n_qubits];
        amps[0] = C64::new(1.0, 0.0);
        Ok(Self { n_qubits, amps })
    }

    /// Computational basis state from a bitstring written qubit 0 first.
    pub fn new_basis_state(n_qubits: usize, bits: &str) -> Result<Self> {
        let index = bitstring_to_index(n_qubits, bits)?;
        let mut s = Self::zero(n_qubits)?;
        s.amps[0] = C64::new(0.0, 0.0);
        s.amps[index] = C64::new(1.0, 0.0);
        Ok(s)
    }

    /// Wraps raw amplitudes; they must already be unit norm.
    pub fn from_amplitudes(amps: Vec<C64>) -> Result<Self> {
        let n_qubits = amps.len().trailing_zeros() as usize;
        if amps.is_empty() || 1usize << n_qubits != amps.len() {
            return invalid(format!("amplitude vector length {} is not a power of two", amps.len()));
        }
        check_width(n_qubits)?;
        let s = Self { n_qubits, amps };
        if (s.norm() - 1.0).abs() > NORM_TOLERANCE {
            return invalid(format!("amplitudes have norm {}", s.norm()));
        }
        Ok(s)
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amps
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.amps.iter().map(|a| a.norm_sqr()).collect()
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &Self) -> C64 {
        self.amps.iter().zip(&other.amps).map(|(a, b)| a.conj() * b).sum()
    }

    pub fn fidelity(&self, other: &Self) -> f64 {
        self.inner(other).norm_sqr()
    }

    pub fn apply_gate(&mut self, gate: &Gate) {
        let n = self.n_qubits;
        match *gate {
            Gate::I(_) => {}
            Gate::X(q) => {
                let bit = qubit_bit(n, q);
                for i in 0..self.amps.len() {
                    if i & bit == 0 {
                        self.amps.swap(i, i | bit);
                    }
                }
            }
            Gate::Cnot { control, target } => {
                let cb = qubit_bit(n, control);
                let tb = qubit_bit(n, target);
                for i in 0..self.amps.len() {
                    if i & cb != 0 && i & tb == 0 {
                        self.amps.swap(i, i | tb);
                    }
                }
            }
            _ => {
                let m = gate.single_qubit_matrix().expect("single-qubit gate");
                let bit = qubit_bit(n, gate.qubits()[0]);
                for i in 0..self.amps.len() {
                    if i & bit == 0 {
                        let j = i | bit;
                        let (a, b) = (self.amps[i], self.amps[j]);
                        self.amps[i] = m[0][0] * a + m[0][1] * b;
                        self.amps[j] = m[1][0] * a + m[1][1] * b;
                    }
                }
            }
        }
    }
}

fn check_width(n_qubits: usize) -> Result<()> {
    if n_qubits == 0 {
        return invalid("register needs at least one qubit");
    }
    if n_qubits > MAX_QUBITS {
        return Err(Error::UnsupportedSize { n_qubits, max: MAX_QUBITS });
    }
    Ok(())
}

pub fn bitstring_to_index(n_qubits: usize, bits: &str) -> Result<usize> {
    if bits.len() != n_qubits {
        return invalid(format!("bitstring {bits:?} has length {}, expected {n_qubits}", bits.len()));
    }
    bits.chars().enumerate().try_fold(0usize, |acc, (q, c)| match c {
        '0' => Ok(acc),
        '1' => Ok(acc | qubit_bit(n_qubits, q)),
        _ => invalid(format!("bitstring {bits:?} contains {c:?}")),
    })
}

pub fn index_to_bitstring(n_qubits: usize, index: usize) -> String {
    (0..n_qubits).map(|q| if index & qubit_bit(n_qubits, q) != 0 { '1' } else { '0' }).collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Axis {
    X,
    Y,
    Z,
}

/// Gates of the simulator. Rotations are `exp(-i angle P / 2)` for the axis
/// Pauli `P`; `Phase` is `diag(1, e^{i phi})`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Gate {
    I(usize),
    X(usize),
    H(usize),
    Phase { qubit: usize, phi: f64 },
    Rotation { axis: Axis, qubit: usize, angle: f64 },
    Cnot { control: usize, target: usize },
}

impl Gate {
    pub fn ry(qubit: usize, angle: f64) -> Self {
        Self::Rotation { axis: Axis::Y, qubit, angle }
    }

    pub fn rz(qubit: usize, angle: f64) -> Self {
        Self::Rotation { axis: Axis::Z, qubit, angle }
    }

    pub fn cnot(control: usize, target: usize) -> Self {
        Self::Cnot { control, target }
    }

    pub fn qubits(&self) -> Vec<usize> {
        match *self {
            Self::I(q) | Self::X(q) | Self::H(q) => vec![q],
            Self::Phase { qubit, .. } | Self::Rotation { qubit, .. } => vec![qubit],
            Self::Cnot { control, target } => vec![control, target],
        }
    }

    /// Number of angles the gate carries.
    pub fn n_angles(&self) -> usize {
        matches!(self, Self::Phase { .. } | Self::Rotation { .. }) as usize
    }

    fn angle_mut(&mut self, slot: usize) -> Option<&mut f64> {
        match (self, slot) {
            (Self::Phase { phi, .. }, 0) => Some(phi),
            (Self::Rotation { angle, .. }, 0) => Some(angle),
            _ => None,
        }
    }

    pub fn single_qubit_matrix(&self) -> Option<[[C64; 2]; 2]> {
        let z = C64::new(0.0, 0.0);
        let one = C64::new(1.0, 0.0);
        let r = |x: f64| C64::new(x, 0.0);
        Some(match *self {
            Self::I(_) => [[one, z], [z, one]],
            Self::X(_) => [[z, one], [one, z]],
            Self::H(_) => [[r(FRAC_1_SQRT_2), r(FRAC_1_SQRT_2)], [r(FRAC_1_SQRT_2), r(-FRAC_1_SQRT_2)]],
            Self::Phase { phi, .. } => [[one, z], [z, C64::from_polar(1.0, phi)]],
            Self::Rotation { axis, angle, .. } => {
                let (c, s) = ((angle / 2.0).cos(), (angle / 2.0).sin());
                match axis {
                    Axis::X => [[r(c), C64::new(0.0, -s)], [C64::new(0.0, -s), r(c)]],
                    Axis::Y => [[r(c), r(-s)], [r(s), r(c)]],
                    Axis::Z => [[C64::from_polar(1.0, -angle / 2.0), z], [z, C64::from_polar(1.0, angle / 2.0)]],
                }
            }
            Self::Cnot { .. } => return None,
        })
    }

    /// Full matrix on the gate's own qubits (2x2, or 4x4 for CNOT with the
    /// control as the high bit), row-major.
    pub fn local_matrix(&self) -> Vec<Vec<C64>> {
        if let Some(m) = self.single_qubit_matrix() {
            return m.iter().map(|row| row.to_vec()).collect();
        }
        let z = C64::new(0.0, 0.0);
        let one = C64::new(1.0, 0.0);
        vec![
            vec![one, z, z, z],
            vec![z, one, z, z],
            vec![z, z, z, one],
            vec![z, z, one, z],
        ]
    }
}

/// Position of a free parameter inside a circuit.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ParamSlot {
    pub gate: usize,
    pub angle: usize,
}

/// Ordered gate list with a table of free-parameter slots. Angles of gates
/// that are not referenced by a slot are fixed.
#[derive(Clone, Debug, PartialEq)]
pub struct Circuit {
    n_qubits: usize,
    gates: Vec<Gate>,
    param_slots: Vec<ParamSlot>,
}

impl Circuit {
    pub fn new(n_qubits: usize) -> Self {
        Self { n_qubits, gates: Vec::new(), param_slots: Vec::new() }
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn param_slots(&self) -> &[ParamSlot] {
        &self.param_slots
    }

    pub fn n_params(&self) -> usize {
        self.param_slots.len()
    }

    /// Appends a fixed gate.
    pub fn push(&mut self, gate: Gate) -> Result<&mut Self> {
        let qubits = gate.qubits();
        if let Some(&q) = qubits.iter().find(|&&q| q >= self.n_qubits) {
            return invalid(format!("gate {gate:?} references qubit {q} of a {}-qubit circuit", self.n_qubits));
        }
        if qubits.len() == 2 && qubits[0] == qubits[1] {
            return invalid(format!("gate {gate:?} repeats a qubit"));
        }
        self.gates.push(gate);
        Ok(self)
    }

    /// Appends a gate whose angles all become free parameters, in order.
    pub fn push_parameterized(&mut self, gate: Gate) -> Result<&mut Self> {
        if gate.n_angles() == 0 {
            return invalid(format!("gate {gate:?} has no angle to parameterize"));
        }
        self.push(gate)?;
        let g = self.gates.len() - 1;
        for angle in 0..gate.n_angles() {
            self.param_slots.push(ParamSlot { gate: g, angle });
        }
        Ok(self)
    }

    /// Appends all gates of `other`; its free parameters follow ours.
    pub fn extend(&mut self, other: &Circuit) -> Result<&mut Self> {
        if other.n_qubits != self.n_qubits {
            return invalid(format!("cannot append a {}-qubit circuit to a {}-qubit one", other.n_qubits, self.n_qubits));
        }
        let offset = self.gates.len();
        self.gates.extend_from_slice(&other.gates);
        self.param_slots
            .extend(other.param_slots.iter().map(|s| ParamSlot { gate: s.gate + offset, angle: s.angle }));
        Ok(self)
    }

    /// Gate list with the free angles replaced by `params`.
    pub fn bind(&self, params: &[f64]) -> Result<Vec<Gate>> {
        if params.len() != self.param_slots.len() {
            return invalid(format!("circuit has {} free parameters, got {}", self.param_slots.len(), params.len()));
        }
        let mut gates = self.gates.clone();
        for (slot, &value) in self.param_slots.iter().zip(params) {
            *gates[slot.gate].angle_mut(slot.angle).expect("slot points at an angle") = value;
        }
        Ok(gates)
    }
}

/// `U(params)|state>` as a fresh state.
pub fn apply_circuit(state: &Statevector, circuit: &Circuit, params: &[f64]) -> Result<Statevector> {
    if state.n_qubits != circuit.n_qubits {
        return invalid(format!("state has {} qubits, circuit has {}", state.n_qubits, circuit.n_qubits));
    }
    let gates = circuit.bind(params)?;
    let mut out = state.clone();
    for g in &gates {
        out.apply_gate(g);
    }
    Ok(out)
}

/// `<psi|O|psi>` for a real-weighted Pauli sum.
pub fn exact_expectation(state: &Statevector, observable: &PauliSum) -> Result<f64> {
    if state.n_qubits != observable.n_qubits() {
        return invalid(format!(
            "state has {} qubits, observable has {}",
            state.n_qubits,
            observable.n_qubits()
        ));
    }
    let amps = &state.amps;
    let mut total = 0.0;
    for (c, p) in observable.terms() {
        let v: C64 = (0..amps.len())
            .map(|b| {
                let (to, phase) = p.apply_to_basis(b);
                amps[to].conj() * phase * amps[b]
            })
            .sum();
        total += c * v.re;
    }
    Ok(total)
}

/// Measurement counts indexed by basis state.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Histogram {
    n_qubits: usize,
    counts: Vec<u64>,
}

impl Histogram {
    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn is_empty(&self) -> bool {
        self.total() == 0
    }

    pub fn count(&self, bits: &str) -> Result<u64> {
        Ok(self.counts[bitstring_to_index(self.n_qubits, bits)?])
    }

    /// Non-zero entries as `(bitstring, count)` in index order.
    pub fn entries(&self) -> Vec<(String, u64)> {
        self.counts
            .iter()
            .enumerate()
            .filter(|(_, &c)| c > 0)
            .map(|(i, &c)| (index_to_bitstring(self.n_qubits, i), c))
            .collect()
    }
}

/// Draws `n_shots` computational-basis outcomes from `|amplitude|^2`.
///
/// Counts are generated by the conditional-binomial construction of the
/// multinomial, one binomial draw per basis state.
pub fn sample_bitstrings<R: Rng + ?Sized>(state: &Statevector, n_shots: u64, rng: &mut R) -> Histogram {
    let probs = state.probabilities();
    let mut counts = vec![0u64; probs.len()];
    let mut remaining_shots = n_shots;
    let mut remaining_mass: f64 = probs.iter().sum();
    for (i, &p) in probs.iter().enumerate() {
        if remaining_shots == 0 {
            break;
        }
        if i == probs.len() - 1 {
            counts[i] = remaining_shots;
            break;
        }
        let frac = if remaining_mass > 0.0 { (p / remaining_mass).clamp(0.0, 1.0) } else { 0.0 };
        let k = if frac >= 1.0 {
            remaining_shots
        } else if frac <= 0.0 {
            0
        } else {
            Binomial::new(remaining_shots, frac).expect("valid binomial").sample(rng)
        };
        counts[i] = k;
        remaining_shots -= k;
        remaining_mass -= p;
    }
    Histogram { n_qubits: state.n_qubits, counts }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pauli::PauliString;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn z0() -> PauliSum {
        PauliSum::from_terms(1, [(1.0, "Z".parse::<PauliString>().unwrap())]).unwrap()
    }

    #[test]
    fn basis_states() {
        let s = Statevector::new_basis_state(1, "0").unwrap();
        assert_eq!(s.amplitudes(), &[C64::new(1.0, 0.0), C64::new(0.0, 0.0)]);
        let s = Statevector::new_basis_state(2, "10").unwrap();
        assert_eq!(s.amplitudes()[2], C64::new(1.0, 0.0));
        assert!(Statevector::new_basis_state(3, "10").is_err());
        assert!(Statevector::new_basis_state(2, "1x").is_err());
    }

    #[test]
    fn identity_x_and_cnot() {
        let s = Statevector::new_basis_state(2, "01").unwrap();
        let mut c = Circuit::new(2);
        c.push(Gate::I(0)).unwrap().push(Gate::I(1)).unwrap();
        assert_eq!(apply_circuit(&s, &c, &[]).unwrap(), s);

        let mut c = Circuit::new(2);
        c.push(Gate::X(0)).unwrap();
        let out = apply_circuit(&Statevector::zero(2).unwrap(), &c, &[]).unwrap();
        assert_eq!(out, Statevector::new_basis_state(2, "10").unwrap());

        let mut c = Circuit::new(2);
        c.push(Gate::cnot(0, 1)).unwrap();
        let out = apply_circuit(&Statevector::new_basis_state(2, "10").unwrap(), &c, &[]).unwrap();
        assert_eq!(out, Statevector::new_basis_state(2, "11").unwrap());
    }

    #[test]
    fn param_count_mismatch() {
        let mut c = Circuit::new(1);
        c.push_parameterized(Gate::ry(0, 0.0)).unwrap();
        assert!(apply_circuit(&Statevector::zero(1).unwrap(), &c, &[]).is_err());
        assert!(apply_circuit(&Statevector::zero(1).unwrap(), &c, &[0.1, 0.2]).is_err());
    }

    #[test]
    fn invalid_gates_rejected() {
        let mut c = Circuit::new(2);
        assert!(c.push(Gate::X(2)).is_err());
        assert!(c.push(Gate::cnot(1, 1)).is_err());
        assert!(c.push_parameterized(Gate::H(0)).is_err());
    }

    #[test]
    fn z_expectation() {
        let s = Statevector::zero(1).unwrap();
        assert_eq!(exact_expectation(&s, &z0()).unwrap(), 1.0);
        let s = Statevector::new_basis_state(1, "1").unwrap();
        assert_eq!(exact_expectation(&s, &z0()).unwrap(), -1.0);
        assert!(exact_expectation(&Statevector::zero(2).unwrap(), &z0()).is_err());
    }

    #[test]
    fn ry_pi_is_x_up_to_sign() {
        let mut c = Circuit::new(1);
        c.push_parameterized(Gate::ry(0, 0.0)).unwrap();
        let out = apply_circuit(&Statevector::zero(1).unwrap(), &c, &[std::f64::consts::PI]).unwrap();
        assert!(out.fidelity(&Statevector::new_basis_state(1, "1").unwrap()) > 1.0 - 1e-15);
    }

    #[test]
    fn sampling_edge_cases() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let s = Statevector::zero(1).unwrap();
        let h = sample_bitstrings(&s, 100, &mut rng);
        assert_eq!(h.entries(), vec![("0".to_string(), 100)]);
        let h = sample_bitstrings(&s, 0, &mut rng);
        assert!(h.is_empty());
    }

    #[test]
    fn plus_state_frequency() {
        let mut c = Circuit::new(1);
        c.push(Gate::H(0)).unwrap();
        let plus = apply_circuit(&Statevector::zero(1).unwrap(), &c, &[]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 1_000_000;
        let h = sample_bitstrings(&plus, n, &mut rng);
        assert_eq!(h.total(), n);
        let frac = h.count("1").unwrap() as f64 / n as f64;
        // 4 sigma of the binomial standard error sqrt(0.25 / n) = 5e-4.
        assert!((frac - 0.5).abs() < 0.002, "fraction {frac}");
    }

    #[test]
    fn sampling_is_deterministic_for_a_seed() {
        let amps: Vec<C64> = (0..16).map(|i| C64::new(((i + 1) as f64).sqrt(), 0.0)).collect();
        let norm: f64 = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        let s = Statevector::from_amplitudes(amps.into_iter().map(|a| a / norm).collect()).unwrap();
        let a = sample_bitstrings(&s, 5000, &mut ChaCha8Rng::seed_from_u64(3));
        let b = sample_bitstrings(&s, 5000, &mut ChaCha8Rng::seed_from_u64(3));
        assert_eq!(a, b);
    }
}
