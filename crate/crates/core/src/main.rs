use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use gpe_splitting::error::Result;
use gpe_splitting::flows::{run_scheme, strang_evolve, SchemeConfig, Stepper};
use gpe_splitting::harness::report::{emit_probes, emit_spectrum, emit_trajectory, trajectory_sidecar};
use gpe_splitting::harness::{emit_report, run_convergence_study, run_probes, ExperimentConfig, Measure, Setup};

/// Cutoff Lie splitting for the Gross-Pitaevskii equation.
#[derive(Debug, Parser)]
#[command(name = "gpe-split", version)]
struct Cli {
    /// TOML experiment file; defaults apply to missing keys.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (overrides `out_dir`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Snapshot stride in steps (overrides `stride`).
    #[arg(long, global = true)]
    stride: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Evolve one trajectory with the first configured stepper and λ-rule at `tau0`.
    Run,
    /// Full convergence study over the τ-ladder.
    Convergence,
    /// Eigenvalue table of the discretized Hamiltonian.
    Spectrum,
    /// Dispersive, Bernstein and Strichartz probes.
    Probe,
}

fn load(cli: &Cli) -> Result<ExperimentConfig> {
    let mut cfg = match &cli.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(out) = &cli.out {
        cfg.out_dir = out.clone();
    }
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(stride) = cli.stride {
        cfg.stride = stride;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: &Cli) -> Result<()> {
    let cfg = load(cli)?;
    match cli.command {
        Command::Run => {
            let setup = Setup::new(&cfg)?;
            let problem = setup.problem();
            let u0 = setup.initial_state(&cfg)?;
            let stepper = cfg.steppers()?[0];
            let traj = if stepper == Stepper::StrangReference {
                strang_evolve(&u0, &problem, cfg.final_time, cfg.tau0, cfg.stride)?
            } else {
                let scheme = SchemeConfig {
                    tau: cfg.tau0,
                    lambda_rule: cfg.lambda_rules()?[0],
                    stepper,
                    profile: cfg.profile()?,
                    final_time: cfg.final_time,
                };
                run_scheme(&u0, &problem, &scheme, cfg.stride)?
            };
            let sidecar = trajectory_sidecar(&traj, &problem, &cfg, stepper.name());
            let (text, json) = emit_trajectory(&traj, &sidecar, &cfg.out_dir)?;
            let m0 = sidecar.snapshot_masses[0];
            let m1 = *sidecar.snapshot_masses.last().expect("at least one snapshot");
            println!("{} snapshots, mass {m0:.12} -> {m1:.12}", traj.snapshots.len());
            println!("wrote {} and {}", text.display(), json.display());
        }
        Command::Convergence => {
            let report = run_convergence_study(&cfg)?;
            let (csv, json) = emit_report(&report, &cfg.out_dir)?;
            println!(
                "reference: tau_ref {:e}, self-check {:.3e}, mass drift {:.3e}, energy drift {:.3e}",
                report.reference.tau_ref,
                report.reference.self_check,
                report.reference.mass_drift,
                report.reference.energy_drift
            );
            for f in report.fits.iter().filter(|f| f.measure == Measure::Final) {
                match &f.fit {
                    Some(fit) => println!(
                        "{} [{}] {}: slope {:.4}, R² {:.4}",
                        f.stepper.name(),
                        f.lambda_rule,
                        f.norm.name(),
                        fit.slope,
                        fit.r_squared
                    ),
                    None => println!(
                        "{} [{}] {}: no fit ({})",
                        f.stepper.name(),
                        f.lambda_rule,
                        f.norm.name(),
                        f.fit_error.as_deref().unwrap_or("")
                    ),
                }
            }
            println!("wrote {} and {}", csv.display(), json.display());
        }
        Command::Spectrum => {
            let setup = Setup::new(&cfg)?;
            let path = emit_spectrum(&setup.ham, &cfg.out_dir)?;
            println!("gauge shift {}", setup.ham.gauge_shift());
            println!("wrote {}", path.display());
        }
        Command::Probe => {
            let setup = Setup::new(&cfg)?;
            let report = run_probes(&setup.ham, &cfg)?;
            for s in &report.summary {
                println!("{}: max ratios {:?}, spread {:.3}", s.probe, s.max_ratios, s.spread);
            }
            for path in emit_probes(&report, &cfg.out_dir)? {
                println!("wrote {}", path.display());
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
