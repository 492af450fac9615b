//! Symbolic mechanics for second-order Lagrangians written over a formal
//! derivative chain `D0[q] -> D1[q] -> D2[q] -> D3[q]`.
//!
//! The pipeline runs singularity analysis and the passage to phase space
//! ([`legendre`]), separable Hamilton-Jacobi solution and closed-form
//! trajectories ([`hjsolve`]), numeric integration of the canonical equations
//! ([`dynamics`]) and WKB wave-function checks graded in powers of `hbar`
//! ([`wkb`]).

pub mod dynamics;
pub mod hjsolve;
pub mod legendre;
pub mod model;
pub mod symexpr;
pub mod wkb;

#[cfg(test)]
pub(crate) mod testgen;
