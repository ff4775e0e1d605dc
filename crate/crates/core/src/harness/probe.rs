//! Sweeps of the dispersive, Bernstein and Strichartz probes over cutoff
//! levels with `λτ = 1`.

use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use crate::cutoff::probes::{bernstein_probe, dispersive_probe, max_ratio, ProbeRow};
use crate::diagnostics::{canonical_pairs, strichartz_constant_probe, AdmissiblePair};
use crate::error::Result;
use crate::hamiltonian::DiscretizedHamiltonian;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrichartzRow {
    pub lambda: f64,
    pub tau: f64,
    pub q: f64,
    pub r: f64,
    pub max_ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeSummary {
    pub probe: String,
    pub lambdas: Vec<f64>,
    pub max_ratios: Vec<f64>,
    /// Largest over smallest maximal ratio across the sweep.
    pub spread: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeReport {
    pub seed: u64,
    pub trials: usize,
    pub dispersive: Vec<ProbeRow>,
    pub bernstein: Vec<ProbeRow>,
    pub strichartz: Vec<StrichartzRow>,
    pub summary: Vec<ProbeSummary>,
}

impl ProbeReport {
    pub fn summary_for(&self, probe: &str) -> Option<&ProbeSummary> {
        self.summary.iter().find(|s| s.probe == probe)
    }
}

fn summarize(probe: &str, lambdas: &[f64], max_ratios: Vec<f64>) -> ProbeSummary {
    let hi = max_ratios.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lo = max_ratios.iter().copied().fold(f64::INFINITY, f64::min);
    ProbeSummary { probe: probe.into(), lambdas: lambdas.to_vec(), max_ratios, spread: hi / lo }
}

/// Runs every probe at each `λ` of the config with `τ = 1/λ`. The Strichartz
/// probe uses the canonical pair `(q₀, r₀)` of the configured `σ`.
pub fn run_probes(ham: &DiscretizedHamiltonian, cfg: &ExperimentConfig) -> Result<ProbeReport> {
    let profile = cfg.profile()?;
    let canonical = canonical_pairs(cfg.sigma, 1)?;
    let pair = AdmissiblePair::new(canonical.q0, canonical.r0, 1)?;
    let trials = cfg.probe_trials;
    let mut report =
        ProbeReport { seed: cfg.seed, trials, dispersive: vec![], bernstein: vec![], strichartz: vec![], summary: vec![] };
    let (mut disp_max, mut bern_max, mut stri_max) = (vec![], vec![], vec![]);
    for &lambda in &cfg.probe_lambdas {
        let tau = 1.0 / lambda;
        let d = dispersive_probe(ham, lambda, &profile, &cfg.probe_times, trials, cfg.seed)?;
        let b = bernstein_probe(ham, lambda, &profile, cfg.probe_p, cfg.probe_q, trials, cfg.seed)?;
        let s = strichartz_constant_probe(ham, lambda, tau, &pair, trials, cfg.probe_final_time, &profile, cfg.seed)?;
        disp_max.push(max_ratio(&d));
        bern_max.push(max_ratio(&b));
        stri_max.push(s);
        report.dispersive.extend(d);
        report.bernstein.extend(b);
        report.strichartz.push(StrichartzRow { lambda, tau, q: pair.q(), r: pair.r(), max_ratio: s });
    }
    report.summary = vec![
        summarize("dispersive", &cfg.probe_lambdas, disp_max),
        summarize("bernstein", &cfg.probe_lambdas, bern_max),
        summarize("strichartz", &cfg.probe_lambdas, stri_max),
    ];
    Ok(report)
}
