//! Confining potential `V` and bounded perturbation `W`.
//!
//! Sampling normalizes the confining part so that `V >= 1` on every node by
//! adding a constant, recorded as the gauge shift. A constant shift `c` only
//! multiplies solutions by `exp(-i c t)`, so moduli are unaffected.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Grid1D;

/// Node-matching tolerance for tabulation files, relative to the box size.
const NODE_MATCH_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Confining {
    /// `V(x) = omega^2 x^2 + shift`.
    Harmonic { omega: f64, shift: f64 },
    /// Values at the grid nodes.
    Tabulated { values: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Perturbation {
    None,
    /// `W(x) = amplitude * exp(-x^2 / width^2)`.
    Gaussian { amplitude: f64, width: f64 },
    Tabulated { values: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PotentialSpec {
    pub confining: Confining,
    pub perturbation: Perturbation,
}

/// Potentials evaluated on a grid, with `V` already gauge-normalized.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledPotential {
    pub v: Vec<f64>,
    pub w: Vec<f64>,
    pub gauge_shift: f64,
}

impl PotentialSpec {
    pub fn harmonic(omega: f64, shift: f64) -> Self {
        Self {
            confining: Confining::Harmonic { omega, shift },
            perturbation: Perturbation::None,
        }
    }

    pub fn with_perturbation(mut self, perturbation: Perturbation) -> Self {
        self.perturbation = perturbation;
        self
    }

    pub fn sample(&self, grid: &Grid1D) -> Result<SampledPotential> {
        let raw_v = match &self.confining {
            Confining::Harmonic { omega, shift } => {
                if !(omega.is_finite() && *omega > 0.0) {
                    return Err(Error::InvalidInput(format!("harmonic frequency must be positive, got {omega}")));
                }
                if !(shift.is_finite() && *shift >= 0.0) {
                    return Err(Error::InvalidInput(format!("harmonic shift must be non-negative, got {shift}")));
                }
                grid.sample(|x| omega * omega * x * x + shift)
            }
            Confining::Tabulated { values } => {
                check_len(grid, values)?;
                values.clone()
            }
        };
        let w = match &self.perturbation {
            Perturbation::None => vec![0.0; grid.n_points()],
            Perturbation::Gaussian { amplitude, width } => {
                if !(width.is_finite() && *width > 0.0) {
                    return Err(Error::InvalidInput(format!("perturbation width must be positive, got {width}")));
                }
                grid.sample(|x| amplitude * (-(x * x) / (width * width)).exp())
            }
            Perturbation::Tabulated { values } => {
                check_len(grid, values)?;
                values.clone()
            }
        };
        if let Some(i) = raw_v.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!("confining potential is not finite at node {i}")));
        }
        if let Some(i) = w.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!("perturbation is not finite at node {i}")));
        }
        let min_v = raw_v.iter().copied().fold(f64::INFINITY, f64::min);
        let gauge_shift = if min_v < 1.0 { 1.0 - min_v } else { 0.0 };
        let v = raw_v.iter().map(|v| v + gauge_shift).collect();
        Ok(SampledPotential { v, w, gauge_shift })
    }
}

fn check_len(grid: &Grid1D, values: &[f64]) -> Result<()> {
    if values.len() != grid.n_points() {
        return Err(Error::Shape { expected: grid.n_points(), found: values.len() });
    }
    Ok(())
}

/// Reads a two-column `x value` table whose abscissae must coincide with the
/// grid nodes. Blank lines and `#` comments are skipped.
pub fn read_tabulation(path: &Path, grid: &Grid1D) -> Result<Vec<f64>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_tabulation(&text, grid)
}

pub fn parse_tabulation(text: &str, grid: &Grid1D) -> Result<Vec<f64>> {
    let tol = NODE_MATCH_TOL * grid.half_width().max(1.0);
    let mut values = Vec::with_capacity(grid.n_points());
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut cols = line.split_whitespace();
        let (Some(xs), Some(vs), None) = (cols.next(), cols.next(), cols.next()) else {
            return Err(Error::InvalidInput(format!("line {}: expected two columns", lineno + 1)));
        };
        let parse = |s: &str| {
            s.parse::<f64>()
                .map_err(|e| Error::InvalidInput(format!("line {}: {e}", lineno + 1)))
        };
        let (x, v) = (parse(xs)?, parse(vs)?);
        let i = values.len();
        if i >= grid.n_points() {
            return Err(Error::Shape { expected: grid.n_points(), found: i + 1 });
        }
        if (x - grid.node(i)).abs() > tol {
            return Err(Error::InvalidInput(format!(
                "line {}: abscissa {x} does not match grid node {} = {}",
                lineno + 1,
                i,
                grid.node(i)
            )));
        }
        values.push(v);
    }
    check_len(grid, &values)?;
    Ok(values)
}

pub fn format_tabulation(grid: &Grid1D, values: &[f64]) -> String {
    let mut out = String::new();
    for (i, v) in values.iter().enumerate() {
        let _ = writeln!(out, "{:?} {:?}", grid.node(i), v);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn harmonic_is_gauged_to_unit_minimum() {
        let grid = Grid1D::new(16, 4.0).unwrap();
        let s = PotentialSpec::harmonic(1.0, 0.0).sample(&grid).unwrap();
        assert_eq!(s.gauge_shift, 1.0);
        let min = s.v.iter().copied().fold(f64::INFINITY, f64::min);
        assert_eq!(min, 1.0);

        let s = PotentialSpec::harmonic(1.0, 3.0).sample(&grid).unwrap();
        assert_eq!(s.gauge_shift, 0.0);
    }

    #[test]
    fn rejects_non_finite_samples() {
        let grid = Grid1D::new(8, 1.0).unwrap();
        let mut values = vec![1.0; 8];
        values[3] = f64::NAN;
        let spec = PotentialSpec {
            confining: Confining::Tabulated { values },
            perturbation: Perturbation::None,
        };
        assert!(matches!(spec.sample(&grid), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn tabulation_round_trips_and_rejects_mismatch() {
        let grid = Grid1D::new(8, 1.0).unwrap();
        let v = grid.sample(|x| 2.0 + x.sin());
        let text = format_tabulation(&grid, &v);
        assert_eq!(parse_tabulation(&text, &grid).unwrap(), v);

        let shifted: String = text
            .lines()
            .enumerate()
            .map(|(i, l)| if i == 2 { "0.123 4.0\n".to_string() } else { format!("{l}\n") })
            .collect();
        assert!(parse_tabulation(&shifted, &grid).is_err());

        let short: String = text.lines().take(5).map(|l| format!("{l}\n")).collect();
        assert!(matches!(parse_tabulation(&short, &grid), Err(Error::Shape { .. })));
    }
}
