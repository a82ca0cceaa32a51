//! Quantum rotor CSS codes built from integer chain complexes.
//!
//! A rotor code is defined by two integer matrices `H_X` (r_x x n) and `H_Z`
//! (r_z x n) with `H_X * H_Z^T = 0`. The first homology group of the induced
//! length-3 complex determines the logical content: free summands are logical
//! rotors, torsion summands `Z_d` are logical qudits. This crate computes that
//! structure exactly, estimates X and Z distances (including continuous phase
//! spreading of logical Z operators), builds the code families used in our
//! test suite, and validates code Hamiltonians in a truncated charge basis.
//!
//! The `parallel` feature (default on) uses rayon for distance-shell
//! enumeration, optimizer restarts, and eigensolver matvecs; without it every
//! code path falls back to sequential loops with identical results.

pub mod code;
pub mod constructions;
pub mod distance;
pub mod exact;
pub mod homology;
pub mod simulator;

pub use code::RotorCode;
pub use exact::IntMatrix;
