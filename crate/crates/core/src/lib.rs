//! Ensemble variational quantum eigensolver with Boltzmann shot allocation
//! and virtual annealing, applied to the half-filled two-site Hubbard model.
//!
//! * [`qsim`]: dense statevector simulation and shot sampling
//! * [`hubbard`]: Jordan-Wigner Hamiltonian, number operator, exact ground state
//! * [`ansatz`]: hardware-efficient trial circuit and fermionic Fourier block
//! * [`estimator`]: grouped shot estimation, penalized objective, parameter-shift gradients
//! * [`ensemble`]: Boltzmann weights, shot allocation, pruning, annealing and the run loop
//! * [`cli`]: configuration, experiment execution and table export

pub mod alloc;
pub mod ansatz;
pub mod cli;
pub mod ensemble;
pub mod error;
pub mod estimator;
pub mod exec;
pub mod hubbard;
pub mod pauli;
pub mod qsim;
pub mod rng;

pub use error::{Error, Result};
