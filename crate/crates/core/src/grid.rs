//! Uniform periodic grid on the box `[-L, L)`.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MIN_POINTS: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid1D {
    n_points: usize,
    half_width: f64,
}

impl Grid1D {
    pub fn new(n_points: usize, half_width: f64) -> Result<Self> {
        if n_points < MIN_POINTS {
            return Err(Error::InvalidInput(format!(
                "grid needs at least {MIN_POINTS} points, got {n_points}"
            )));
        }
        if !(half_width.is_finite() && half_width > 0.0) {
            return Err(Error::InvalidInput(format!("half width must be positive, got {half_width}")));
        }
        Ok(Self { n_points, half_width })
    }

    pub fn n_points(&self) -> usize {
        self.n_points
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.half_width / self.n_points as f64
    }

    pub fn node(&self, i: usize) -> f64 {
        -self.half_width + i as f64 * self.spacing()
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.n_points).map(|i| self.node(i)).collect()
    }

    /// Discrete L² inner product `h Σ f_i conj(g_i)`.
    pub fn inner(&self, f: &[C64], g: &[C64]) -> C64 {
        let s: C64 = f.iter().zip(g).map(|(a, b)| a * b.conj()).sum();
        s * self.spacing()
    }

    pub fn sample<F: Fn(f64) -> f64>(&self, f: F) -> Vec<f64> {
        (0..self.n_points).map(|i| f(self.node(i))).collect()
    }
}
