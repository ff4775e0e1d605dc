//! Empirical probes of the dispersive and Bernstein-type bounds for the
//! truncated group. The constants in those bounds are not explicit, so the
//! probes report ratios whose boundedness under `λ ↦ 4λ` is the testable part.

use std::fmt::Write as _;

use num_complex::Complex64 as C64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{projector_weights, truncated_phases, CutoffProfile};
use crate::diagnostics::lp_norm;
use crate::error::{Error, Result};
use crate::hamiltonian::DiscretizedHamiltonian;

/// Adversarial states appended after the random ones.
pub const ADVERSARIAL_STATES: usize = 3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeRow {
    pub lambda: f64,
    /// Time for the dispersive probe, `p:q` for the Bernstein probe.
    pub t_or_pq: String,
    pub trial: usize,
    pub ratio: f64,
}

/// `trials` white-noise grid states (one seed per trial), then a spike at the
/// node nearest `x = 0`, the ground state and a Gaussian of width `2h`.
pub fn probe_states(ham: &DiscretizedHamiltonian, trials: usize, seed: u64) -> Vec<Vec<C64>> {
    let grid = ham.grid();
    let n = grid.n_points();
    let mut states: Vec<Vec<C64>> = (0..trials)
        .map(|trial| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(trial as u64));
            (0..n)
                .map(|_| {
                    let re: f64 = StandardNormal.sample(&mut rng);
                    let im: f64 = StandardNormal.sample(&mut rng);
                    C64::new(re, im)
                })
                .collect()
        })
        .collect();

    let mut spike = vec![C64::new(0.0, 0.0); n];
    spike[n / 2] = C64::new(1.0, 0.0);
    states.push(spike);
    states.push(ham.eigenfunction(0));
    let width = 2.0 * grid.spacing();
    states.push(grid.nodes().iter().map(|x| C64::from((-(x / width).powi(2) / 2.0).exp())).collect());
    states
}

/// Ratios `‖S_λ(t)φ‖_∞ (λ^{-1/2} + t^{1/2}) / ‖φ‖₁` for every `(t, state)`.
pub fn dispersive_probe(
    ham: &DiscretizedHamiltonian,
    lambda: f64,
    profile: &CutoffProfile,
    times: &[f64],
    trials: usize,
    seed: u64,
) -> Result<Vec<ProbeRow>> {
    if let Some(t) = times.iter().find(|t| !(**t > 0.0 && **t <= 1.0)) {
        return Err(Error::InvalidInput(format!("probe time {t} outside (0, 1]")));
    }
    let h = ham.grid().spacing();
    let states = probe_states(ham, trials, seed);
    let coeffs: Vec<(f64, Vec<C64>)> = states
        .iter()
        .map(|phi| Ok((lp_norm(phi, h, 1.0)?, ham.analyze(phi))))
        .collect::<Result<_>>()?;
    let rows = times
        .par_iter()
        .map(|&t| -> Result<Vec<ProbeRow>> {
            let m = truncated_phases(ham, t, lambda, profile)?;
            let envelope = lambda.powf(-0.5) + t.sqrt();
            coeffs
                .iter()
                .enumerate()
                .map(|(trial, (l1, c))| {
                    let evolved: Vec<C64> = c.iter().zip(&m).map(|(c, m)| c * m).collect();
                    let sup = lp_norm(&ham.synthesize(&evolved), h, f64::INFINITY)?;
                    Ok(ProbeRow { lambda, t_or_pq: format!("{t:?}"), trial, ratio: sup * envelope / l1 })
                })
                .collect()
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(rows.into_iter().flatten().collect())
}

/// Ratios `‖Π_λφ‖_q / (λ^{(1/p - 1/q)/2} ‖φ‖_p)` for every probe state.
pub fn bernstein_probe(
    ham: &DiscretizedHamiltonian,
    lambda: f64,
    profile: &CutoffProfile,
    p: f64,
    q: f64,
    trials: usize,
    seed: u64,
) -> Result<Vec<ProbeRow>> {
    if p.is_nan() || q.is_nan() || p < 1.0 || p > q {
        return Err(Error::InvalidInput(format!("need 1 <= p <= q, got p = {p}, q = {q}")));
    }
    let h = ham.grid().spacing();
    let w = projector_weights(ham, lambda, profile)?;
    let inv = |e: f64| if e.is_infinite() { 0.0 } else { 1.0 / e };
    let scale = lambda.powf(0.5 * (inv(p) - inv(q)));
    let label = format!("{p:?}:{q:?}");
    probe_states(ham, trials, seed)
        .par_iter()
        .enumerate()
        .map(|(trial, phi)| {
            let c: Vec<C64> = ham.analyze(phi).iter().zip(&w).map(|(c, w)| c * w).collect();
            let num = lp_norm(&ham.synthesize(&c), h, q)?;
            let den = scale * lp_norm(phi, h, p)?;
            Ok(ProbeRow { lambda, t_or_pq: label.clone(), trial, ratio: num / den })
        })
        .collect()
}

pub fn max_ratio(rows: &[ProbeRow]) -> f64 {
    rows.iter().map(|r| r.ratio).fold(0.0, f64::max)
}

pub fn probe_csv(rows: &[ProbeRow]) -> String {
    let mut out = String::from("lambda,t_or_pq,trial,ratio\n");
    for r in rows {
        let _ = writeln!(out, "{:?},{},{},{:?}", r.lambda, r.t_or_pq, r.trial, r.ratio);
    }
    out
}
