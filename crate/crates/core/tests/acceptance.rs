//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any
//! criterion fails.

use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use gpe_splitting::cutoff::{apply_cutoff, propagate, CutoffProfile};
use gpe_splitting::flows::{nonlinear_flow, run_scheme, NonlinearitySpec, Problem, SchemeConfig, Stepper};
use gpe_splitting::grid::Grid1D;
use gpe_splitting::harness::study::{run_convergence_study_with, SeriesFit};
use gpe_splitting::harness::{run_probes, ConvergenceReport, ErrorNorm, ExperimentConfig, Measure, Setup};
use gpe_splitting::hamiltonian::{DiscretizedHamiltonian, SobolevNorm, State};
use gpe_splitting::potential::PotentialSpec;

const SPECTRUM_TOL: f64 = 1e-6;
const SPECTRUM_MODES: usize = 64;
const SPECTRUM_BUDGET: Duration = Duration::from_secs(5);
const SLOPE_RANGE: (f64, f64) = (0.85, 1.15);
const MIN_R_SQUARED: f64 = 0.98;
const STUDY_BUDGET: Duration = Duration::from_secs(120);
const RATIO_SPREAD_MAX: f64 = 2.5;
const ORDER_SEPARATION: f64 = 0.25;
const PROPERTY_STATES: usize = 100;
const PROPERTY_SEED: u64 = 20_240_917;
const UNITARITY_TOL: f64 = 1e-12;
const GROUP_TOL: f64 = 1e-12;
const COMMUTATOR_TOL: f64 = 1e-14;
const IDEMPOTENCE_TOL: f64 = 1e-14;
const MODULUS_TOL: f64 = 1e-14;
const REF_MASS_DRIFT: f64 = 1e-10;
const REF_ENERGY_DRIFT: f64 = 1e-6;
const PROBE_SPREAD_MAX: f64 = 3.0;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn study_config(initial: &str) -> ExperimentConfig {
    // cubic defocusing, V = x², W = e^{-x²}, n = 512, L = 12, τ ∈ {2⁻⁴..2⁻¹⁰}, T = 1, λ = 1/τ
    let text = format!("initial_data = \"{initial}\"\nrough_alpha = 1.25\nseed = 11\n");
    ExperimentConfig::from_toml_str(&text, None).expect("study config")
}

fn final_fit(report: &ConvergenceReport, norm: ErrorNorm) -> &SeriesFit {
    report.fit_for(Stepper::CutoffLie, "inverse", norm, Measure::Final).expect("fit present")
}

fn errors(report: &ConvergenceReport, norm: ErrorNorm) -> Vec<f64> {
    report.runs.iter().filter_map(|r| r.error(norm, Measure::Final)).collect()
}

fn fmt_list(v: &[f64]) -> String {
    v.iter().map(|x| format!("{x:.3e}")).collect::<Vec<_>>().join(" ")
}

fn criterion_spectrum() -> Outcome {
    let start = Instant::now();
    let grid = Grid1D::new(512, 12.0).unwrap();
    let ham = DiscretizedHamiltonian::new(&grid, &PotentialSpec::harmonic(1.0, 0.0)).unwrap();
    let elapsed = start.elapsed();
    let mu = ham.unshifted_eigenvalues();
    let errs: Vec<f64> = (0..SPECTRUM_MODES).map(|j| (mu[j] - (2 * j + 1) as f64).abs()).collect();
    let (worst, max_err) = errs.iter().enumerate().fold((0, 0.0), |acc, (j, &e)| if e > acc.1 { (j, e) } else { acc });
    let first_bad = errs.iter().position(|&e| e > SPECTRUM_TOL);
    outcome(
        max_err <= SPECTRUM_TOL && elapsed < SPECTRUM_BUDGET,
        format!(
            "max |μ_j - (2j+1)| over j < {SPECTRUM_MODES} = {max_err:.3e} at j = {worst} (tol {SPECTRUM_TOL:e}); first j above tol: {}; {:.2}s",
            first_bad.map_or("none".into(), |j| j.to_string()),
            elapsed.as_secs_f64()
        ),
    )
}

fn criterion_first_order(report: &ConvergenceReport, elapsed: Duration) -> Outcome {
    let fit = final_fit(report, ErrorNorm::L2).fit.expect("L2 fit");
    outcome(
        fit.slope >= SLOPE_RANGE.0 && fit.slope <= SLOPE_RANGE.1 && fit.r_squared >= MIN_R_SQUARED && elapsed < STUDY_BUDGET,
        format!(
            "L2 slope {:.4} in [{}, {}], R² {:.5} (min {MIN_R_SQUARED}); errors {}; study {:.1}s",
            fit.slope,
            SLOPE_RANGE.0,
            SLOPE_RANGE.1,
            fit.r_squared,
            fmt_list(&errors(report, ErrorNorm::L2)),
            elapsed.as_secs_f64()
        ),
    )
}

fn criterion_half_order(smooth: &ConvergenceReport, rough: &ConvergenceReport) -> Outcome {
    let rough_fit = final_fit(rough, ErrorNorm::L2);
    let spread = rough_fit.half_order_spread.expect("ratio spread");
    let smooth_slope = final_fit(smooth, ErrorNorm::L2).fit.expect("smooth fit").slope;
    let rough_slope = rough_fit.fit.expect("rough fit").slope;
    let separation = smooth_slope - rough_slope;
    outcome(
        spread <= RATIO_SPREAD_MAX && separation >= ORDER_SEPARATION,
        format!(
            "rough err_L2/τ^(1/2) max/median {spread:.3} (max {RATIO_SPREAD_MAX}) [{}]; slope separation {smooth_slope:.4} - {rough_slope:.4} = {separation:.4} (min {ORDER_SEPARATION}) [{}]; rough errors {}",
            if spread <= RATIO_SPREAD_MAX { "ok" } else { "over" },
            if separation >= ORDER_SEPARATION { "ok" } else { "under" },
            fmt_list(&errors(rough, ErrorNorm::L2))
        ),
    )
}

fn criterion_h1(report: &ConvergenceReport) -> Outcome {
    let fit = final_fit(report, ErrorNorm::CalH1);
    let spread = fit.half_order_spread.expect("ratio spread");
    let sup_spread = report
        .fit_for(Stepper::CutoffLie, "inverse", ErrorNorm::CalH1, Measure::Sup)
        .and_then(|f| f.half_order_spread)
        .unwrap_or(f64::NAN);
    outcome(
        spread <= RATIO_SPREAD_MAX,
        format!(
            "err_H1/τ^(1/2) max/median {spread:.3} (max {RATIO_SPREAD_MAX}); sup-in-time variant {sup_spread:.3}; fitted 𝓗¹ slope {:.4}; errors {}",
            fit.fit.map_or(f64::NAN, |f| f.slope),
            fmt_list(&errors(report, ErrorNorm::CalH1))
        ),
    )
}

fn random_state<'h>(ham: &'h DiscretizedHamiltonian, rng: &mut ChaCha8Rng) -> State<'h> {
    let decay: f64 = rng.random_range(0.5..2.0);
    let coeffs: Vec<C64> = ham
        .eigenvalues()
        .iter()
        .map(|mu| {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            C64::new(re, im) * (1.0 + mu).powf(-decay)
        })
        .collect();
    let u = State::from_coeffs(ham, coeffs).unwrap();
    let norm = u.norm(SobolevNorm::L2);
    u.map_coeffs(|_, c| c / norm)
}

fn max_diff(a: &[C64], b: &[C64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

fn criterion_structure() -> Outcome {
    let grid = Grid1D::new(128, 8.0).unwrap();
    let ham = DiscretizedHamiltonian::new(&grid, &PotentialSpec::harmonic(1.0, 0.0)).unwrap();
    let problem = Problem::new(&ham, grid.sample(|x| (-x * x).exp()), Some(NonlinearitySpec::cubic_defocusing())).unwrap();
    let profile = CutoffProfile::ExpBump;
    let mut rng = ChaCha8Rng::seed_from_u64(PROPERTY_SEED);
    let mut worst = [0.0_f64; 6];
    let mut bound_ok = true;
    let mut mass_ok = true;
    for _ in 0..PROPERTY_STATES {
        let u = random_state(&ham, &mut rng);
        let t: f64 = rng.random_range(-2.0..2.0);
        let s: f64 = rng.random_range(-2.0..2.0);
        let norm = u.norm(SobolevNorm::L2);

        let st = propagate(&u, t);
        worst[0] = worst[0].max((st.norm(SobolevNorm::L2) - norm).abs());
        worst[1] = worst[1].max(max_diff(&propagate(&st, s).coeffs(), &propagate(&u, t + s).coeffs()));

        for lambda in [4.0, 16.0, 64.0] {
            let pu = apply_cutoff(&u, lambda, &profile).unwrap();
            let a = propagate(&pu, t);
            let b = apply_cutoff(&st, lambda, &profile).unwrap();
            worst[2] = worst[2].max(max_diff(&a.coeffs(), &b.coeffs()));
            let twice = apply_cutoff(&pu, 4.0 * lambda, &profile).unwrap();
            worst[3] = worst[3].max(max_diff(&twice.coeffs(), &pu.coeffs()));
            let tail = u.sub(&pu).norm(SobolevNorm::L2);
            let h1 = u.norm(SobolevNorm::CalH1);
            let h2: f64 =
                u.coeffs().iter().zip(ham.eigenvalues()).map(|(c, mu)| mu * mu * c.norm_sqr()).sum::<f64>().sqrt();
            bound_ok &= tail <= lambda.powf(-0.5) * h1 * (1.0 + 1e-12);
            bound_ok &= tail <= lambda.powf(-1.0) * h2 * (1.0 + 1e-12);
        }

        let tau: f64 = rng.random_range(0.0..1.0);
        let grid_u = u.to_grid();
        let n = nonlinear_flow(&grid_u, tau, &problem);
        let modulus = n
            .grid_values()
            .iter()
            .zip(grid_u.grid_values().iter())
            .map(|(a, b)| (a.norm() - b.norm()).abs())
            .fold(0.0, f64::max);
        worst[4] = worst[4].max(modulus);

        let cfg = SchemeConfig::new(0.0625, 0.5, Stepper::CutoffLie);
        let traj = run_scheme(&u, &problem, &cfg, usize::MAX).unwrap();
        for w in traj.masses.windows(2) {
            mass_ok &= w[1] <= w[0] * (1.0 + 1e-13);
            worst[5] = worst[5].max(w[1] - w[0]);
        }
    }
    let pass = worst[0] <= UNITARITY_TOL
        && worst[1] <= GROUP_TOL
        && worst[2] <= COMMUTATOR_TOL
        && worst[3] <= IDEMPOTENCE_TOL
        && bound_ok
        && worst[4] <= MODULUS_TOL
        && mass_ok;
    outcome(
        pass,
        format!(
            "{PROPERTY_STATES} states, seed {PROPERTY_SEED}: unitarity {:.1e}, group law {:.1e}, [Π,S] {:.1e}, Π_4λΠ_λ-Π_λ {:.1e}, cutoff bound {}, |N u|-|u| {:.1e}, mass non-increasing {} (max step increase {:.1e})",
            worst[0],
            worst[1],
            worst[2],
            worst[3],
            if bound_ok { "holds" } else { "violated" },
            worst[4],
            mass_ok,
            worst[5]
        ),
    )
}

fn criterion_conservation(report: &ConvergenceReport) -> Outcome {
    let r = &report.reference;
    outcome(
        r.mass_drift <= REF_MASS_DRIFT && r.energy_drift <= REF_ENERGY_DRIFT && r.tau_ref == 2f64.powi(-15),
        format!(
            "τ_ref = 2^{}: mass drift {:.3e} (max {REF_MASS_DRIFT:e}), energy drift {:.3e} (max {REF_ENERGY_DRIFT:e}), Richardson self-check {:.3e}",
            r.tau_ref.log2(),
            r.mass_drift,
            r.energy_drift,
            r.self_check
        ),
    )
}

fn criterion_probes() -> Outcome {
    let cfg = ExperimentConfig::from_toml_str("probe_lambdas = [8.0, 32.0, 128.0]\nprobe_trials = 16\nseed = 5\n", None).unwrap();
    let setup = Setup::new(&cfg).unwrap();
    let report = run_probes(&setup.ham, &cfg).unwrap();
    let pass = report.summary.iter().all(|s| s.spread <= PROBE_SPREAD_MAX);
    let detail = report
        .summary
        .iter()
        .map(|s| format!("{} spread {:.3} (max ratios {})", s.probe, s.spread, fmt_list(&s.max_ratios)))
        .collect::<Vec<_>>()
        .join("; ");
    outcome(pass, format!("λ ∈ {{8, 32, 128}}, λτ = 1, max spread {PROBE_SPREAD_MAX}: {detail}"))
}

fn criterion_determinism() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("study.toml");
    std::fs::write(
        &config,
        "n_points = 64\nhalf_width = 8.0\ntau0 = 0.125\nladder_levels = 3\nfinal_time = 0.5\n\
         tau_ref = 0.0001220703125\ninitial_data = \"rough\"\n\
         steppers = [\"cutoff_lie\", \"fourier_lie\", \"plain_lie\"]\nlambda_rules = [\"inverse\", \"scaled:2:0.5\"]\n",
    )
    .unwrap();
    let run = |out: &Path| {
        Command::new(env!("CARGO_BIN_EXE_gpe-split"))
            .args(["convergence", "--seed", "42", "--config"])
            .arg(&config)
            .arg("--out")
            .arg(out)
            .output()
            .expect("spawn CLI")
    };
    // same output directory both times: the JSON echoes it with the config
    let out = dir.path().join("out");
    let read = |name: &str| std::fs::read(out.join(name)).unwrap();
    let first = run(&out);
    if !first.status.success() {
        return outcome(false, format!("CLI failed: {}", String::from_utf8_lossy(&first.stderr)));
    }
    let (csv_a, json_a) = (read("convergence.csv"), read("convergence.json"));
    let second = run(&out);
    if !second.status.success() {
        return outcome(false, format!("CLI failed: {}", String::from_utf8_lossy(&second.stderr)));
    }
    let (csv, json) = (csv_a == read("convergence.csv"), json_a == read("convergence.json"));
    outcome(csv && json, format!("two `convergence` runs, seed 42: CSV identical {csv}, JSON identical {json}"))
}

fn main() {
    let mut results: Vec<(u32, &str, Outcome)> = Vec::new();
    results.push((1, "harmonic spectrum", criterion_spectrum()));

    let smooth_cfg = study_config("gaussian");
    let rough_cfg = study_config("rough");
    let setup = Setup::new(&smooth_cfg).unwrap();
    let start = Instant::now();
    let smooth = run_convergence_study_with(&setup, &smooth_cfg).expect("gaussian study");
    let smooth_time = start.elapsed();
    let rough = run_convergence_study_with(&setup, &rough_cfg).expect("rough study");

    results.push((2, "first-order L2 convergence", criterion_first_order(&smooth, smooth_time)));
    results.push((3, "half-order regime for rough data", criterion_half_order(&smooth, &rough)));
    results.push((4, "calH1 half-order ratio", criterion_h1(&smooth)));
    results.push((5, "exact-structure properties", criterion_structure()));
    results.push((6, "reference conservation", criterion_conservation(&smooth)));
    results.push((7, "estimate probes bounded", criterion_probes()));
    results.push((8, "determinism", criterion_determinism()));

    let mut failed = 0;
    for (id, name, o) in &results {
        println!("{} [{id}] {name}: {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
        failed += usize::from(!o.pass);
    }
    println!("acceptance: {} passed, {failed} failed", results.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
