//! Convergence studies over a τ-ladder against a fine Strang reference.

use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{ErrorNorm, ExperimentConfig};
use super::fit::{asymptotic_tau, fit_order, ratio_spread, OrderFit};
use super::initial::make_initial_data;
use crate::cutoff::CutoffProfile;
use crate::diagnostics::mass;
use crate::error::{Error, Result};
use crate::flows::{
    relative_drift, run_scheme, strang_reference, LambdaRule, NonlinearitySpec, Problem, ReferenceSolution,
    SchemeConfig, Stepper,
};
use crate::hamiltonian::{DiscretizedHamiltonian, SobolevNorm, State};
use crate::potential::PotentialSpec;

/// Local slopes within this distance of the fitted order count as asymptotic.
pub const ASYMPTOTIC_WINDOW: f64 = 0.15;

/// Discretized problem shared by every run of a study.
#[derive(Debug)]
pub struct Setup {
    pub spec: PotentialSpec,
    pub ham: DiscretizedHamiltonian,
    pub w: Vec<f64>,
    pub nonlinearity: Option<NonlinearitySpec>,
}

impl Setup {
    pub fn new(cfg: &ExperimentConfig) -> Result<Self> {
        let grid = cfg.grid()?;
        let spec = cfg.potential_spec()?;
        let sampled = spec.sample(&grid)?;
        let ham = DiscretizedHamiltonian::new(&grid, &spec)?;
        Ok(Self { spec, ham, w: sampled.w, nonlinearity: cfg.nonlinearity()? })
    }

    pub fn problem(&self) -> Problem<'_> {
        Problem { ham: &self.ham, w: self.w.clone(), nonlinearity: self.nonlinearity }
    }

    pub fn initial_state(&self, cfg: &ExperimentConfig) -> Result<State<'_>> {
        make_initial_data(&cfg.initial_data()?, &self.ham, cfg.seed)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum RunStatus {
    Ok,
    Blowup { step: usize, message: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub stepper: Stepper,
    /// `none` for steppers without a cutoff.
    pub lambda_rule: String,
    pub tau: f64,
    pub lambda: Option<f64>,
    #[serde(flatten)]
    pub status: RunStatus,
    pub err_l2_final: Option<f64>,
    pub err_l2_sup: Option<f64>,
    pub err_h1_final: Option<f64>,
    pub err_h1_sup: Option<f64>,
    pub mass_drift: Option<f64>,
    pub energy_drift: Option<f64>,
}

impl RunRecord {
    pub fn error(&self, norm: ErrorNorm, measure: Measure) -> Option<f64> {
        match (norm, measure) {
            (ErrorNorm::L2, Measure::Final) => self.err_l2_final,
            (ErrorNorm::L2, Measure::Sup) => self.err_l2_sup,
            (ErrorNorm::CalH1, Measure::Final) => self.err_h1_final,
            (ErrorNorm::CalH1, Measure::Sup) => self.err_h1_sup,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Measure {
    /// Error at the final time.
    Final,
    /// Supremum over the common snapshot times.
    Sup,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesFit {
    pub stepper: Stepper,
    pub lambda_rule: String,
    pub norm: ErrorNorm,
    pub measure: Measure,
    pub fit: Option<OrderFit>,
    pub fit_error: Option<String>,
    /// `max / median` of `err / τ^{1/2}` over the ladder.
    pub half_order_spread: Option<f64>,
    /// `max / median` of `err / τ` over the ladder.
    pub first_order_spread: Option<f64>,
    /// Largest `τ` from which local slopes stay near the fitted order.
    pub asymptotic_tau: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceSummary {
    pub tau_ref: f64,
    pub self_check: f64,
    pub mass_drift: f64,
    pub energy_drift: f64,
}

impl From<&ReferenceSolution> for ReferenceSummary {
    fn from(r: &ReferenceSolution) -> Self {
        Self { tau_ref: r.tau_ref, self_check: r.self_check, mass_drift: r.mass_drift, energy_drift: r.energy_drift }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub config: ExperimentConfig,
    pub seed: u64,
    pub ladder: Vec<f64>,
    pub gauge_shift: f64,
    pub reference: ReferenceSummary,
    pub runs: Vec<RunRecord>,
    pub fits: Vec<SeriesFit>,
}

impl ConvergenceReport {
    pub fn runs_for(&self, stepper: Stepper, lambda_rule: &str) -> Vec<&RunRecord> {
        self.runs.iter().filter(|r| r.stepper == stepper && r.lambda_rule == lambda_rule).collect()
    }

    pub fn fit_for(&self, stepper: Stepper, lambda_rule: &str, norm: ErrorNorm, measure: Measure) -> Option<&SeriesFit> {
        self.fits
            .iter()
            .find(|f| f.stepper == stepper && f.lambda_rule == lambda_rule && f.norm == norm && f.measure == measure)
    }
}

struct Job {
    stepper: Stepper,
    rule: Option<LambdaRule>,
    rule_label: String,
    tau: f64,
}

pub fn run_convergence_study(cfg: &ExperimentConfig) -> Result<ConvergenceReport> {
    cfg.validate()?;
    let setup = Setup::new(cfg)?;
    run_convergence_study_with(&setup, cfg)
}

/// Study on a prebuilt [`Setup`]; `cfg` must describe the same problem.
pub fn run_convergence_study_with(setup: &Setup, cfg: &ExperimentConfig) -> Result<ConvergenceReport> {
    let problem = setup.problem();
    let u0 = setup.initial_state(cfg)?;
    let profile = cfg.profile()?;
    let ladder = cfg.ladder();
    let reference = strang_reference(&u0, &problem, cfg.final_time, cfg.tau_ref, Some(cfg.tau0))?;

    let mut jobs = Vec::new();
    for stepper in cfg.steppers()? {
        let rules: Vec<(Option<LambdaRule>, String)> = if stepper.uses_cutoff() {
            cfg.lambda_rules()?.into_iter().zip(&cfg.lambda_rules).map(|(r, s)| (Some(r), s.clone())).collect()
        } else {
            vec![(None, "none".to_string())]
        };
        for (rule, rule_label) in rules {
            for &tau in &ladder {
                jobs.push(Job { stepper, rule, rule_label: rule_label.clone(), tau });
            }
        }
    }

    let runs: Vec<RunRecord> = jobs
        .par_iter()
        .map(|job| run_job(job, &u0, &problem, &reference, cfg, &profile))
        .collect::<Result<_>>()?;

    let norms = cfg.error_norms()?;
    let mut fits = Vec::new();
    let mut seen: Vec<(Stepper, String)> = Vec::new();
    for job in &jobs {
        let key = (job.stepper, job.rule_label.clone());
        if seen.contains(&key) {
            continue;
        }
        seen.push(key);
        let series: Vec<&RunRecord> =
            runs.iter().filter(|r| r.stepper == job.stepper && r.lambda_rule == job.rule_label).collect();
        for &norm in &norms {
            for measure in [Measure::Final, Measure::Sup] {
                fits.push(fit_series(job.stepper, &job.rule_label, norm, measure, &series));
            }
        }
    }

    Ok(ConvergenceReport {
        config: cfg.clone(),
        seed: cfg.seed,
        ladder,
        gauge_shift: setup.ham.gauge_shift(),
        reference: ReferenceSummary::from(&reference),
        runs,
        fits,
    })
}

fn run_job(
    job: &Job,
    u0: &State<'_>,
    problem: &Problem<'_>,
    reference: &ReferenceSolution,
    cfg: &ExperimentConfig,
    profile: &CutoffProfile,
) -> Result<RunRecord> {
    let scheme = SchemeConfig {
        tau: job.tau,
        lambda_rule: job.rule.unwrap_or(LambdaRule::Inverse),
        stepper: job.stepper,
        profile: *profile,
        final_time: cfg.final_time,
    };
    let mut record = RunRecord {
        stepper: job.stepper,
        lambda_rule: job.rule_label.clone(),
        tau: job.tau,
        lambda: scheme.lambda(),
        status: RunStatus::Ok,
        err_l2_final: None,
        err_l2_sup: None,
        err_h1_final: None,
        err_h1_sup: None,
        mass_drift: None,
        energy_drift: None,
    };
    let stride = (cfg.tau0 / job.tau).round() as usize;
    let traj = match run_scheme(u0, problem, &scheme, stride) {
        Ok(t) => t,
        Err(Error::BlowUp { step, reason }) => {
            record.status = RunStatus::Blowup { step, message: reason };
            return Ok(record);
        }
        Err(e) => return Err(e),
    };

    let ham = problem.ham;
    let h = ham.grid().spacing();
    let (mut l2_sup, mut h1_sup) = (0.0_f64, 0.0_f64);
    let (mut l2_final, mut h1_final) = (0.0, 0.0);
    for snap in &traj.snapshots {
        let Some(target) = reference.at_time(snap.time) else { continue };
        let diff: Vec<C64> = snap.values.iter().zip(&target.values).map(|(a, b)| a - b).collect();
        let l2 = mass(&diff, h).sqrt();
        let h1 = State::from_grid(ham, diff)?.norm(SobolevNorm::CalH1);
        l2_sup = l2_sup.max(l2);
        h1_sup = h1_sup.max(h1);
        (l2_final, h1_final) = (l2, h1);
    }
    let first = &traj.snapshots[0].values;
    let last = &traj.last().values;
    record.err_l2_final = Some(l2_final);
    record.err_l2_sup = Some(l2_sup);
    record.err_h1_final = Some(h1_final);
    record.err_h1_sup = Some(h1_sup);
    record.mass_drift = Some(relative_drift(mass(first, h), mass(last, h)));
    record.energy_drift = Some(relative_drift(problem.energy(first), problem.energy(last)));
    Ok(record)
}

fn fit_series(stepper: Stepper, rule: &str, norm: ErrorNorm, measure: Measure, series: &[&RunRecord]) -> SeriesFit {
    let (taus, errors): (Vec<f64>, Vec<f64>) =
        series.iter().filter_map(|r| r.error(norm, measure).map(|e| (r.tau, e))).unzip();
    let (fit, fit_error) = match fit_order(&taus, &errors) {
        Ok(f) => (Some(f), None),
        Err(e) => (None, Some(e.to_string())),
    };
    SeriesFit {
        stepper,
        lambda_rule: rule.to_string(),
        norm,
        measure,
        asymptotic_tau: fit.and_then(|f| asymptotic_tau(&taus, &errors, f.slope, ASYMPTOTIC_WINDOW)),
        fit,
        fit_error,
        half_order_spread: ratio_spread(&taus, &errors, 0.5),
        first_order_spread: ratio_spread(&taus, &errors, 1.0),
    }
}
