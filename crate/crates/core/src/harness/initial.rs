//! Initial data generators for the two regularity classes under study.

use std::f64::consts::TAU;

use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::config::InitialData;
use crate::error::{Error, Result};
use crate::hamiltonian::{DiscretizedHamiltonian, SobolevNorm, State};

/// Builds `u₀`. Gaussian and rough data are normalized in L², eigen
/// mixtures are taken as given.
pub fn make_initial_data<'h>(kind: &InitialData, ham: &'h DiscretizedHamiltonian, seed: u64) -> Result<State<'h>> {
    match kind {
        InitialData::Gaussian { center, width } => {
            if !(*width > 0.0) {
                return Err(Error::InvalidInput(format!("gaussian width must be positive, got {width}")));
            }
            let values = ham
                .grid()
                .nodes()
                .iter()
                .map(|x| C64::from((-((x - center) / width).powi(2) / 2.0).exp()))
                .collect();
            normalized(State::from_grid(ham, values)?)
        }
        InitialData::EigenMix(coeffs) => {
            State::from_coeffs(ham, coeffs.iter().map(|&c| C64::from(c)).collect())
        }
        InitialData::Rough { alpha } => normalized(rough_state(ham, *alpha, seed, ham.n())),
    }
}

/// `c_j = (1 + μ_j)^{-α} e^{iθ_j}` on the first `modes` modes, with
/// uniform phases drawn from a seeded stream (unnormalized).
pub fn rough_state(ham: &DiscretizedHamiltonian, alpha: f64, seed: u64, modes: usize) -> State<'_> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let coeffs = ham
        .eigenvalues()
        .iter()
        .take(modes)
        .map(|mu| C64::from_polar((1.0 + mu).powf(-alpha), rng.random_range(0.0..TAU)))
        .collect();
    State::from_coeffs(ham, coeffs).expect("mode count bounded by the basis size")
}

fn normalized(u: State<'_>) -> Result<State<'_>> {
    let norm = u.norm(SobolevNorm::L2);
    if !(norm > 0.0 && norm.is_finite()) {
        return Err(Error::numerical(None, "initial data has zero or non-finite norm"));
    }
    Ok(u.map_coeffs(|_, c| c / norm))
}
