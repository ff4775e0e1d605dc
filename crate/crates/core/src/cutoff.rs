//! Smooth spectral cutoff `Π_λ = χ²(H/λ)` and the propagators `S(t)`,
//! `S_λ(t) = Π_λ S(t)`, all acting diagonally on eigen-coefficients.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hamiltonian::{DiscretizedHamiltonian, State};

pub mod probes;

/// Shape of the transition of `χ` on `1 < |z| < 2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CutoffProfile {
    /// `g(2-|z|) / (g(2-|z|) + g(|z|-1))` with `g(t) = exp(-1/t)`; C^∞.
    #[default]
    ExpBump,
    /// Polynomial smoothstep with `k - 1` continuous derivatives (`k >= 3`).
    Smoothstep { k: u32 },
}

impl CutoffProfile {
    pub fn smoothstep(k: u32) -> Result<Self> {
        if k < 3 {
            return Err(Error::InvalidInput(format!("smoothstep order must be at least 3, got {k}")));
        }
        Ok(CutoffProfile::Smoothstep { k })
    }

    pub fn chi(&self, z: f64) -> f64 {
        let a = z.abs();
        if a <= 1.0 {
            return 1.0;
        }
        if a >= 2.0 {
            return 0.0;
        }
        match *self {
            CutoffProfile::ExpBump => {
                let up = bump(2.0 - a);
                let down = bump(a - 1.0);
                up / (up + down)
            }
            CutoffProfile::Smoothstep { k } => 1.0 - smoothstep(k - 1, a - 1.0),
        }
    }

    /// `χ²(μ/λ)`, the weight of an eigenvalue `μ` in `Π_λ`.
    pub fn weight(&self, mu: f64, lambda: f64) -> f64 {
        let c = self.chi(mu / lambda);
        c * c
    }
}

pub fn chi(profile: &CutoffProfile, z: f64) -> f64 {
    profile.chi(z)
}

fn bump(t: f64) -> f64 {
    if t > 0.0 {
        (-1.0 / t).exp()
    } else {
        0.0
    }
}

/// Smoothstep `S_N` on `[0, 1]` with `N` vanishing derivatives at both ends.
fn smoothstep(order: u32, t: f64) -> f64 {
    let n = order as i64;
    let mut sum = 0.0;
    for j in 0..=n {
        sum += binomial(n + j, j) * binomial(2 * n + 1, n - j) * (-t).powi(j as i32);
    }
    t.powi(order as i32 + 1) * sum
}

fn binomial(n: i64, k: i64) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

fn check_lambda(lambda: f64) -> Result<()> {
    if lambda > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!("cutoff level must be positive, got {lambda}")))
    }
}

/// `w_j = χ²(μ_j/λ)` for every eigenvalue. `λ = ∞` gives all ones.
pub fn projector_weights(ham: &DiscretizedHamiltonian, lambda: f64, profile: &CutoffProfile) -> Result<Vec<f64>> {
    check_lambda(lambda)?;
    Ok(ham.eigenvalues().iter().map(|&mu| profile.weight(mu, lambda)).collect())
}

pub fn apply_cutoff<'h>(u: &State<'h>, lambda: f64, profile: &CutoffProfile) -> Result<State<'h>> {
    let w = projector_weights(u.hamiltonian(), lambda, profile)?;
    Ok(u.map_coeffs(|j, c| c * w[j]))
}

/// Phases `exp(-i t μ_j)`.
pub fn propagator_phases(ham: &DiscretizedHamiltonian, t: f64) -> Vec<C64> {
    ham.eigenvalues().iter().map(|&mu| C64::from_polar(1.0, -t * mu)).collect()
}

/// `S(t) = exp(-itH)`.
pub fn propagate<'h>(u: &State<'h>, t: f64) -> State<'h> {
    let p = propagator_phases(u.hamiltonian(), t);
    u.map_coeffs(|j, c| c * p[j])
}

/// Combined per-mode multipliers `χ²(μ_j/λ) exp(-i t μ_j)`.
pub fn truncated_phases(
    ham: &DiscretizedHamiltonian,
    t: f64,
    lambda: f64,
    profile: &CutoffProfile,
) -> Result<Vec<C64>> {
    let w = projector_weights(ham, lambda, profile)?;
    Ok(propagator_phases(ham, t).into_iter().zip(w).map(|(p, w)| p * w).collect())
}

/// `S_λ(t) = Π_λ S(t) = S(t) Π_λ`.
pub fn propagate_cutoff<'h>(u: &State<'h>, t: f64, lambda: f64, profile: &CutoffProfile) -> Result<State<'h>> {
    let m = truncated_phases(u.hamiltonian(), t, lambda, profile)?;
    Ok(u.map_coeffs(|j, c| c * m[j]))
}
