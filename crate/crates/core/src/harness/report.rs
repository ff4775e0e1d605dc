//! Deterministic CSV / JSON emission for studies, probes, spectra and
//! trajectory dumps.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use super::probe::ProbeReport;
use super::study::ConvergenceReport;
use crate::cutoff::probes::probe_csv;
use crate::error::{Error, Result};
use crate::flows::{Problem, Trajectory};
use crate::diagnostics::mass;
use crate::hamiltonian::DiscretizedHamiltonian;

pub const CONVERGENCE_COLUMNS: [&str; 9] = [
    "stepper",
    "tau",
    "lambda",
    "err_L2_final",
    "err_L2_sup",
    "err_H1_final",
    "err_H1_sup",
    "mass_drift",
    "energy_drift",
];

fn cell(v: Option<f64>) -> String {
    v.map(|x| format!("{x:?}")).unwrap_or_default()
}

/// One row per run. Steppers without a cutoff show `lambda = inf`; blown-up
/// runs leave the error and drift cells empty.
pub fn convergence_csv(report: &ConvergenceReport) -> String {
    let mut out = CONVERGENCE_COLUMNS.join(",");
    out.push('\n');
    for r in &report.runs {
        let name = if r.lambda_rule == "none" || r.lambda_rule == "inverse" {
            r.stepper.name().to_string()
        } else {
            format!("{}[{}]", r.stepper.name(), r.lambda_rule)
        };
        let _ = writeln!(
            out,
            "{},{:?},{},{},{},{},{},{},{}",
            name,
            r.tau,
            r.lambda.map(|l| format!("{l:?}")).unwrap_or_else(|| "inf".into()),
            cell(r.err_l2_final),
            cell(r.err_l2_sup),
            cell(r.err_h1_final),
            cell(r.err_h1_sup),
            cell(r.mass_drift),
            cell(r.energy_drift),
        );
    }
    out
}

pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Error::numerical(None, e.to_string()))?;
    text.push('\n');
    Ok(text)
}

pub fn report_from_json(text: &str) -> Result<ConvergenceReport> {
    serde_json::from_str(text).map_err(|e| Error::Config(format!("malformed report: {e}")))
}

fn write(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

/// Writes `convergence.csv` and `convergence.json` under `dir`.
pub fn emit_report(report: &ConvergenceReport, dir: &Path) -> Result<(PathBuf, PathBuf)> {
    ensure_dir(dir)?;
    let csv = dir.join("convergence.csv");
    let json = dir.join("convergence.json");
    write(&csv, &convergence_csv(report))?;
    write(&json, &to_json(report)?)?;
    Ok((csv, json))
}

/// `j,mu,mu_unshifted` for every mode.
pub fn spectrum_csv(ham: &DiscretizedHamiltonian) -> String {
    let mut out = String::from("j,mu,mu_unshifted\n");
    for (j, mu) in ham.eigenvalues().iter().enumerate() {
        let _ = writeln!(out, "{j},{mu:?},{:?}", mu - ham.gauge_shift());
    }
    out
}

pub fn emit_spectrum(ham: &DiscretizedHamiltonian, dir: &Path) -> Result<PathBuf> {
    ensure_dir(dir)?;
    let path = dir.join("spectrum.csv");
    write(&path, &spectrum_csv(ham))?;
    Ok(path)
}

pub fn emit_probes(report: &ProbeReport, dir: &Path) -> Result<Vec<PathBuf>> {
    ensure_dir(dir)?;
    let mut strichartz = String::from("lambda,tau,q,r,max_ratio\n");
    for s in &report.strichartz {
        let _ = writeln!(strichartz, "{:?},{:?},{:?},{:?},{:?}", s.lambda, s.tau, s.q, s.r, s.max_ratio);
    }
    let files = [
        ("probe_dispersive.csv", probe_csv(&report.dispersive)),
        ("probe_bernstein.csv", probe_csv(&report.bernstein)),
        ("probe_strichartz.csv", strichartz),
        ("probe_summary.json", to_json(report)?),
    ];
    files
        .into_iter()
        .map(|(name, text)| {
            let path = dir.join(name);
            write(&path, &text)?;
            Ok(path)
        })
        .collect()
}

/// Sidecar describing a trajectory dump.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectorySidecar {
    pub config: ExperimentConfig,
    pub stepper: String,
    pub tau: f64,
    pub lambda: Option<f64>,
    pub snapshot_steps: Vec<usize>,
    pub snapshot_times: Vec<f64>,
    pub snapshot_masses: Vec<f64>,
    pub snapshot_energies: Vec<f64>,
    /// Mass after every step.
    pub step_masses: Vec<f64>,
}

/// One line per snapshot: step, time, then interleaved `re im` values.
pub fn trajectory_text(traj: &Trajectory) -> String {
    let mut out = String::new();
    for s in &traj.snapshots {
        let _ = write!(out, "{} {:?}", s.step, s.time);
        for z in &s.values {
            let _ = write!(out, " {:?} {:?}", z.re, z.im);
        }
        out.push('\n');
    }
    out
}

pub fn trajectory_sidecar(traj: &Trajectory, problem: &Problem<'_>, cfg: &ExperimentConfig, stepper: &str) -> TrajectorySidecar {
    let h = problem.ham.grid().spacing();
    TrajectorySidecar {
        config: cfg.clone(),
        stepper: stepper.to_string(),
        tau: traj.tau,
        lambda: traj.lambda,
        snapshot_steps: traj.snapshots.iter().map(|s| s.step).collect(),
        snapshot_times: traj.snapshots.iter().map(|s| s.time).collect(),
        snapshot_masses: traj.snapshots.iter().map(|s| mass(&s.values, h)).collect(),
        snapshot_energies: traj.snapshots.iter().map(|s| problem.energy(&s.values)).collect(),
        step_masses: traj.masses.clone(),
    }
}

/// Writes `trajectory.txt` and `trajectory.json` under `dir`.
pub fn emit_trajectory(traj: &Trajectory, sidecar: &TrajectorySidecar, dir: &Path) -> Result<(PathBuf, PathBuf)> {
    ensure_dir(dir)?;
    let text = dir.join("trajectory.txt");
    let json = dir.join("trajectory.json");
    write(&text, &trajectory_text(traj))?;
    write(&json, &to_json(sidecar)?)?;
    Ok((text, json))
}
