//! Qubit-ADAPT variational eigensolver with variational quantum deflation for
//! explicitly correlated two-electron Hamiltonians of H2.
//!
//! The classical half ([`ecbasis`]) builds Hamiltonian and overlap matrices in
//! a Kolos-Wolniewicz basis and orthonormalizes them. [`encode`] maps the
//! resulting matrix onto qubits, [`sim`] simulates the adaptive ansatz,
//! [`pool`] supplies operator pools and the selection rule, and [`adapt`]
//! runs the ADAPT loop, excited-state deflation and the exact-diagonalization
//! oracle. [`pipeline`] drives everything over a grid of bond lengths.

pub mod adapt;
pub mod ecbasis;
pub mod encode;
pub mod error;
pub mod io;
pub mod linalg;
pub mod pauli;
pub mod pipeline;
pub mod pool;
pub mod sim;

pub use error::{Error, Result};
