//! Periodic Fourier differentiation on a [`Grid1D`].
//!
//! Wavenumbers follow the usual FFT ordering, with the Nyquist mode kept at
//! `-n/2`. Keeping it makes `‖∂u‖² = ⟨-∂²u, u⟩` hold exactly for the matrix
//! returned by [`second_derivative_matrix`].

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use ndarray::Array2;
use num_complex::Complex64 as C64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::grid::Grid1D;

#[derive(Clone)]
pub struct FourierOps {
    wavenumbers: Vec<f64>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for FourierOps {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FourierOps").field("n", &self.wavenumbers.len()).finish()
    }
}

impl FourierOps {
    pub fn new(grid: &Grid1D) -> Result<Self> {
        let n = grid.n_points();
        if n % 2 != 0 {
            return Err(Error::Config(format!("spectral differentiation needs an even point count, got {n}")));
        }
        let dk = PI / grid.half_width();
        let wavenumbers = (0..n)
            .map(|m| if m < n / 2 { m as f64 * dk } else { (m as f64 - n as f64) * dk })
            .collect();
        let mut planner = FftPlanner::new();
        Ok(Self {
            wavenumbers,
            forward: planner.plan_fft_forward(n),
            inverse: planner.plan_fft_inverse(n),
        })
    }

    pub fn wavenumbers(&self) -> &[f64] {
        &self.wavenumbers
    }

    /// Multiplies the discrete Fourier transform of `u` by `symbol(k)` in place.
    pub fn apply_multiplier<F: Fn(f64) -> C64>(&self, u: &mut [C64], symbol: F) {
        let n = u.len();
        self.forward.process(u);
        let scale = 1.0 / n as f64;
        for (ui, &k) in u.iter_mut().zip(&self.wavenumbers) {
            *ui *= symbol(k) * scale;
        }
        self.inverse.process(u);
    }

    pub fn gradient(&self, u: &[C64]) -> Vec<C64> {
        let mut out = u.to_vec();
        self.apply_multiplier(&mut out, |k| C64::new(0.0, k));
        out
    }

    pub fn laplacian(&self, u: &[C64]) -> Vec<C64> {
        let mut out = u.to_vec();
        self.apply_multiplier(&mut out, |k| C64::new(-k * k, 0.0));
        out
    }

    /// Exact free flight `exp(i t Δ)`.
    pub fn free_flight(&self, u: &mut [C64], t: f64) {
        self.apply_multiplier(u, |k| C64::from_polar(1.0, -t * k * k));
    }
}

/// Dense periodic spectral second-derivative matrix on `[-L, L)` (even `n`).
pub fn second_derivative_matrix(grid: &Grid1D) -> Result<Array2<f64>> {
    let n = grid.n_points();
    if n % 2 != 0 {
        return Err(Error::Config(format!("spectral differentiation needs an even point count, got {n}")));
    }
    let scale = (PI / grid.half_width()).powi(2);
    let step = 2.0 * PI / n as f64;
    let column: Vec<f64> = (0..n)
        .map(|k| {
            if k == 0 {
                -((n * n) as f64) / 12.0 - 1.0 / 6.0
            } else {
                let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
                let s = (0.5 * step * k as f64).sin();
                -0.5 * sign / (s * s)
            }
        })
        .map(|v| v * scale)
        .collect();
    Ok(Array2::from_shape_fn((n, n), |(i, j)| column[i.abs_diff(j)]))
}
