mod common;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use kdvqe::ansatz::{fourier_transform_circuit, AnsatzSpec};
use kdvqe::ensemble::{Problem, ScheduleConfig};
use kdvqe::hubbard::{
    build_hubbard_hamiltonian, exact_ground, hopping_hamiltonian, particle_number_operator, spectrum, HubbardParams,
    PauliSum, TrialLabel,
};
use kdvqe::qsim::exact_expectation;

use common::*;

fn dense(h: &PauliSum) -> DMatrix<Complex64> {
    h.to_dense()
}

fn random_pairs(n: usize) -> Vec<(f64, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    (0..n).map(|_| (rng.random_range(-3.0..3.0), rng.random_range(-4.0..8.0))).collect()
}

#[test]
fn qubit_hamiltonian_equals_fermionic_matrix() {
    for (t, u) in random_pairs(20) {
        let h = dense(&build_hubbard_hamiltonian(HubbardParams::new(t, u).unwrap()));
        let oracle = to_complex(&fermionic_hubbard(t, u));
        assert!(max_abs(&(h - oracle)) < 1e-12, "t={t} u={u}");
    }
}

#[test]
fn spectra_match_fermionic_oracle() {
    for (t, u) in random_pairs(20) {
        let ours = spectrum(&build_hubbard_hamiltonian(HubbardParams::new(t, u).unwrap())).unwrap();
        let oracle = sorted_eigenvalues(&fermionic_hubbard(t, u));
        for (a, b) in ours.iter().zip(&oracle) {
            assert!((a - b).abs() < 1e-10, "t={t} u={u}: {a} vs {b}");
        }
    }
}

#[test]
fn number_operator_matches_mode_counting() {
    let n = dense(&particle_number_operator());
    assert!(max_abs(&(n - to_complex(&total_number()))) < 1e-14);
}

#[test]
fn hamiltonian_is_hermitian_and_conserves_number() {
    let n = dense(&particle_number_operator());
    for (t, u) in random_pairs(10) {
        let h = dense(&build_hubbard_hamiltonian(HubbardParams::new(t, u).unwrap()));
        assert!(max_abs(&(&h - h.adjoint())) < 1e-14);
        assert!(max_abs(&(&h * &n - &n * &h)) < 1e-12);
    }
}

#[test]
fn spin_swap_is_a_symmetry() {
    // Exchanging up and down modes: qubits (0,1) <-> (2,3), with the
    // fermionic sign picked up when reordering two pairs of modes.
    let mut swap = DMatrix::<f64>::zeros(16, 16);
    for s in 0..16usize {
        let up = s >> 2;
        let down = s & 3;
        let sign = if up.count_ones() % 2 == 1 && down.count_ones() % 2 == 1 { -1.0 } else { 1.0 };
        swap[((down << 2) | up, s)] = sign;
    }
    let swap = to_complex(&swap);
    for (t, u) in random_pairs(5) {
        let h = dense(&build_hubbard_hamiltonian(HubbardParams::new(t, u).unwrap()));
        assert!(max_abs(&(&swap * &h * swap.adjoint() - &h)) < 1e-12);
    }
}

#[test]
fn fourier_block_diagonalizes_hopping() {
    let f = circuit_unitary(&fourier_transform_circuit(), &[]);
    for t in [0.5, 1.0, 2.0, -0.7, 3.3] {
        let d = f.adjoint() * dense(&hopping_hamiltonian(t)) * &f;
        let mut off = d.clone();
        off.fill_diagonal(Complex64::new(0.0, 0.0));
        assert!(max_abs(&off) < 1e-10, "t={t}");
        // Orbital energies -t (bonding) and +t (antibonding) per spin.
        let mut diag: Vec<f64> = d.diagonal().iter().map(|z| z.re).collect();
        diag.sort_by(f64::total_cmp);
        assert!((diag[0] + 2.0 * t.abs()).abs() < 1e-12);
        assert!((diag[15] - 2.0 * t.abs()).abs() < 1e-12);
    }
}

#[test]
fn fourier_block_conserves_number() {
    let f = circuit_unitary(&fourier_transform_circuit(), &[]);
    let n = dense(&particle_number_operator());
    assert!(max_abs(&(f.adjoint() * &n * &f - &n)) < 1e-12);
}

#[test]
fn half_filling_ground_energy_closed_form() {
    let n = total_number();
    let shift = (&n - DMatrix::identity(16, 16) * 2.0).map(|x| x * 100.0);
    for (t, u) in [(1.0, 1.0), (1.0, 0.0), (0.5, 4.0), (2.0, 1.5), (1.0, 8.0)] {
        let params = HubbardParams::new(t, u).unwrap();
        let closed = (u - (u * u + 16.0 * t * t).sqrt()) / 2.0;
        let confined = fermionic_hubbard(t, u) + &shift * &shift;
        assert!((sorted_eigenvalues(&confined)[0] - closed).abs() < 1e-10, "t={t} u={u}");
        assert!((params.half_filling_ground_energy() - closed).abs() < 1e-14);
    }
}

#[test]
fn global_ground_state_at_unit_couplings() {
    let (e0, ground) = exact_ground(&build_hubbard_hamiltonian(HubbardParams::default())).unwrap();
    assert!((e0 - (1.0 - 17f64.sqrt()) / 2.0).abs() < 1e-12);
    assert!((e0 + 1.561552813).abs() < 1e-6);
    let n = exact_expectation(&ground, &particle_number_operator()).unwrap();
    assert!((n - 2.0).abs() < 1e-10);
}

#[test]
fn starting_states_have_expected_energies() {
    let config = ScheduleConfig::default();
    let problem = Problem::hubbard(HubbardParams::default(), &AnsatzSpec::default(), &config).unwrap();
    let expected = [2.5, 0.5, 0.5, 0.0, 0.0, -1.5];
    for (trial, e) in problem.trials.iter().zip(expected) {
        let got = problem.exact_energy(&trial.params0).unwrap();
        assert!((got - e).abs() < 1e-12, "{}: {got}", trial.label);
    }
    assert_eq!(problem.trials.iter().map(|t| t.label).collect::<Vec<_>>(), TrialLabel::ALL);
}
