//! Portable benchmarking toolkit for variational quantum algorithms.
//!
//! Problems enter as a flat numeric Hamiltonian IR ([`pauli_ir`]) and
//! parameterized circuits as an OpenQASM 2.0 subset ([`qasm`]). Both run on
//! an exact statevector engine ([`statevector`]) inside a BFGS driver
//! ([`driver`]); [`harness`] runs seeded multi-trajectory campaigns and
//! [`analysis`] checks their consistency.

pub mod analysis;
pub mod ansatz;
pub mod driver;
pub mod harness;
pub mod pauli_ir;
pub mod problems;
pub mod qasm;
pub mod statevector;
