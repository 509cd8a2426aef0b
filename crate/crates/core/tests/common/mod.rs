//! Test oracles built without the crate's Pauli machinery.
#![allow(dead_code)]

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use rand::Rng;

use kdvqe::qsim::{apply_circuit, Circuit, Statevector};

pub const MODES: usize = 4;
/// Mode order: site 1 up, site 2 up, site 1 down, site 2 down.
pub const UP: [usize; 2] = [0, 1];
pub const DOWN: [usize; 2] = [2, 3];

fn mode_bit(mode: usize) -> usize {
    1 << (MODES - 1 - mode)
}

/// Annihilation operator on `mode` in the occupation basis, with the
/// fermionic sign `(-1)^(number of occupied modes before it)`.
pub fn annihilation(mode: usize) -> DMatrix<f64> {
    let dim = 1 << MODES;
    let mut a = DMatrix::zeros(dim, dim);
    for state in 0..dim {
        if state & mode_bit(mode) == 0 {
            continue;
        }
        let before = (0..mode).filter(|&m| state & mode_bit(m) != 0).count();
        let sign = if before % 2 == 0 { 1.0 } else { -1.0 };
        a[(state ^ mode_bit(mode), state)] = sign;
    }
    a
}

pub fn creation(mode: usize) -> DMatrix<f64> {
    annihilation(mode).transpose()
}

pub fn number(mode: usize) -> DMatrix<f64> {
    creation(mode) * annihilation(mode)
}

pub fn total_number() -> DMatrix<f64> {
    (0..MODES).map(number).fold(DMatrix::zeros(16, 16), |acc, n| acc + n)
}

/// `-t sum_s (c+_1s c_2s + h.c.) + u sum_i n_i,up n_i,down`.
pub fn fermionic_hubbard(t: f64, u: f64) -> DMatrix<f64> {
    let mut h = DMatrix::zeros(16, 16);
    for spin in [UP, DOWN] {
        let hop = creation(spin[0]) * annihilation(spin[1]);
        h -= (&hop + hop.transpose()) * t;
    }
    for site in 0..2 {
        h += number(UP[site]) * number(DOWN[site]) * u;
    }
    h
}

pub fn sorted_eigenvalues(m: &DMatrix<f64>) -> Vec<f64> {
    let mut e: Vec<f64> = SymmetricEigen::new(m.clone()).eigenvalues.iter().copied().collect();
    e.sort_by(f64::total_cmp);
    e
}

/// Eigenvalues of a complex Hermitian matrix through its real embedding
/// `[[Re, -Im], [Im, Re]]`, whose spectrum is each eigenvalue twice.
pub fn hermitian_eigenvalues(m: &DMatrix<Complex64>) -> Vec<f64> {
    let n = m.nrows();
    let mut real = DMatrix::zeros(2 * n, 2 * n);
    for i in 0..n {
        for j in 0..n {
            let z = m[(i, j)];
            real[(i, j)] = z.re;
            real[(i + n, j + n)] = z.re;
            real[(i, j + n)] = -z.im;
            real[(i + n, j)] = z.im;
        }
    }
    sorted_eigenvalues(&real).into_iter().step_by(2).collect()
}

/// Dense unitary of `circuit` at `params`, one column per basis input.
pub fn circuit_unitary(circuit: &Circuit, params: &[f64]) -> DMatrix<Complex64> {
    let n = circuit.n_qubits();
    let dim = 1 << n;
    let mut u = DMatrix::zeros(dim, dim);
    for col in 0..dim {
        let mut amps = vec![Complex64::new(0.0, 0.0); dim];
        amps[col] = Complex64::new(1.0, 0.0);
        let out = apply_circuit(&Statevector::from_amplitudes(amps).unwrap(), circuit, params).unwrap();
        for (row, a) in out.amplitudes().iter().enumerate() {
            u[(row, col)] = *a;
        }
    }
    u
}

pub fn to_complex(m: &DMatrix<f64>) -> DMatrix<Complex64> {
    m.map(|x| Complex64::new(x, 0.0))
}

pub fn max_abs(m: &DMatrix<Complex64>) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn random_params<R: Rng>(rng: &mut R, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-std::f64::consts::PI..std::f64::consts::PI)).collect()
}
