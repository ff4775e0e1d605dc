//! Lie splitting with spectral cutoffs for the nonlinear Schrödinger /
//! Gross–Pitaevskii equation `i ∂ₜu = (-Δ + V + W)u + ε|u|^{2σ}u` on a
//! periodic box, with a fine Strang reference and convergence studies.

pub mod cutoff;
pub mod diagnostics;
pub mod error;
pub mod flows;
pub mod grid;
pub mod hamiltonian;
pub mod harness;
pub mod potential;
pub mod spectral;
