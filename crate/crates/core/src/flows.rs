//! Nonlinear flow and splitting time steppers.
//!
//! The cutoff Lie scheme is `u^n = (S_λ(τ) N(τ))^n Π_λ u₀` where `N(τ)` is the
//! exact pointwise flow of `i ∂ₜu = W u + ε |u|^{2σ} u`. The linear part is
//! applied in the eigenbasis, the nonlinear part on the grid, so each step
//! costs one synthesis and one analysis.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::cutoff::{projector_weights, propagator_phases, truncated_phases, CutoffProfile};
use crate::diagnostics;
use crate::error::{Error, Result};
use crate::hamiltonian::{DiscretizedHamiltonian, State};

/// Blow-up guard: abort when `‖u‖_{𝓗¹}` exceeds this multiple of its initial value.
pub const H1_GROWTH_LIMIT: f64 = 1e6;
/// Self-check tolerance for the Strang reference (L² difference between
/// `τ_ref` and `τ_ref / 2`).
pub const REFERENCE_TOL: f64 = 1e-8;
const STEP_COUNT_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NonlinearitySpec {
    pub sigma: f64,
    /// `+1` defocusing, `-1` focusing.
    pub epsilon: f64,
}

impl NonlinearitySpec {
    pub fn new(sigma: f64, epsilon: f64) -> Result<Self> {
        if !(sigma.is_finite() && sigma > 0.0) {
            return Err(Error::InvalidInput(format!("σ must be positive, got {sigma}")));
        }
        if epsilon != 1.0 && epsilon != -1.0 {
            return Err(Error::InvalidInput(format!("ε must be ±1, got {epsilon}")));
        }
        Ok(Self { sigma, epsilon })
    }

    pub fn cubic_defocusing() -> Self {
        Self { sigma: 1.0, epsilon: 1.0 }
    }

    /// `σ < 2/d` with `d = 1`: mass-subcritical, solutions are global.
    pub fn mass_subcritical(&self) -> bool {
        self.sigma < 2.0
    }

    /// `|u|^{2σ}` from the modulus, with `0 ↦ 0`.
    pub fn power(&self, modulus: f64) -> f64 {
        if modulus == 0.0 {
            return 0.0;
        }
        if self.sigma == 1.0 {
            modulus * modulus
        } else if self.sigma == 2.0 {
            let m2 = modulus * modulus;
            m2 * m2
        } else {
            (2.0 * self.sigma * modulus.ln()).exp()
        }
    }
}

/// Everything the time steppers need besides the step size.
#[derive(Debug, Clone)]
pub struct Problem<'h> {
    pub ham: &'h DiscretizedHamiltonian,
    /// Perturbation `W` on the grid.
    pub w: Vec<f64>,
    /// `None` switches the nonlinearity off.
    pub nonlinearity: Option<NonlinearitySpec>,
}

impl<'h> Problem<'h> {
    pub fn new(ham: &'h DiscretizedHamiltonian, w: Vec<f64>, nonlinearity: Option<NonlinearitySpec>) -> Result<Self> {
        if w.len() != ham.n() {
            return Err(Error::Shape { expected: ham.n(), found: w.len() });
        }
        Ok(Self { ham, w, nonlinearity })
    }

    pub fn linear(ham: &'h DiscretizedHamiltonian) -> Self {
        Self { ham, w: vec![0.0; ham.n()], nonlinearity: None }
    }

    pub fn energy(&self, values: &[C64]) -> f64 {
        diagnostics::energy(values, self)
    }

    /// In-place `u ↦ u exp(-iτ(extra + W + ε|u|^{2σ}))`.
    fn apply_phase(&self, u: &mut [C64], tau: f64, extra: Option<&[f64]>) {
        for (i, z) in u.iter_mut().enumerate() {
            let mut potential = self.w[i];
            if let Some(v) = extra {
                potential += v[i];
            }
            if let Some(nl) = &self.nonlinearity {
                potential += nl.epsilon * nl.power(z.norm());
            }
            if potential != 0.0 {
                *z *= C64::from_polar(1.0, -tau * potential);
            }
        }
    }
}

/// `N(τ)u = u exp(-iτW - iτε|u|^{2σ})`, pointwise; preserves `|u|`.
pub fn nonlinear_flow<'h>(u: &State<'h>, tau: f64, problem: &Problem<'_>) -> State<'h> {
    let mut values = u.grid_values().into_owned();
    problem.apply_phase(&mut values, tau, None);
    State::from_grid(u.hamiltonian(), values).expect("length preserved")
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LambdaRule {
    /// `λ = 1/τ`
    Inverse,
    /// `λ = c τ^{-γ}`
    Scaled { c: f64, gamma: f64 },
}

impl LambdaRule {
    pub fn lambda(&self, tau: f64) -> f64 {
        match *self {
            LambdaRule::Inverse => 1.0 / tau,
            LambdaRule::Scaled { c, gamma } => c * tau.powf(-gamma),
        }
    }

    pub fn label(&self) -> String {
        match self {
            LambdaRule::Inverse => "inverse".into(),
            LambdaRule::Scaled { c, gamma } => format!("scaled:{c:?}:{gamma:?}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stepper {
    CutoffLie,
    PlainLie,
    FourierLie,
    StrangReference,
}

impl Stepper {
    pub fn name(&self) -> &'static str {
        match self {
            Stepper::CutoffLie => "cutoff_lie",
            Stepper::PlainLie => "plain_lie",
            Stepper::FourierLie => "fourier_lie",
            Stepper::StrangReference => "strang_reference",
        }
    }

    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "cutoff_lie" => Ok(Stepper::CutoffLie),
            "plain_lie" => Ok(Stepper::PlainLie),
            "fourier_lie" => Ok(Stepper::FourierLie),
            "strang_reference" => Ok(Stepper::StrangReference),
            other => Err(Error::Config(format!("unknown stepper {other:?}"))),
        }
    }

    pub fn uses_cutoff(&self) -> bool {
        matches!(self, Stepper::CutoffLie)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SchemeConfig {
    pub tau: f64,
    pub lambda_rule: LambdaRule,
    pub stepper: Stepper,
    pub profile: CutoffProfile,
    pub final_time: f64,
}

impl SchemeConfig {
    pub fn new(tau: f64, final_time: f64, stepper: Stepper) -> Self {
        Self { tau, lambda_rule: LambdaRule::Inverse, stepper, profile: CutoffProfile::ExpBump, final_time }
    }

    /// Cutoff level, or `None` for steppers without one.
    pub fn lambda(&self) -> Option<f64> {
        self.stepper.uses_cutoff().then(|| self.lambda_rule.lambda(self.tau))
    }

    pub fn steps(&self) -> Result<usize> {
        step_count(self.final_time, self.tau)
    }

    fn validate(&self) -> Result<usize> {
        if !(self.tau > 0.0 && self.tau < 1.0) {
            return Err(Error::InvalidInput(format!("time step must lie in (0, 1), got {}", self.tau)));
        }
        if let Some(lambda) = self.lambda() {
            if !(lambda.is_finite() && lambda > 0.0) {
                return Err(Error::InvalidInput(format!("cutoff level must be positive, got {lambda}")));
            }
            if self.lambda_rule == LambdaRule::Inverse && lambda * self.tau < 1.0 - 1e-12 {
                return Err(Error::Precondition(format!("λτ = {} < 1", lambda * self.tau)));
            }
        }
        self.steps()
    }
}

/// `T/τ`, required to be a non-negative integer.
pub fn step_count(final_time: f64, tau: f64) -> Result<usize> {
    if !(final_time >= 0.0 && final_time.is_finite()) {
        return Err(Error::InvalidInput(format!("final time must be non-negative, got {final_time}")));
    }
    let ratio = final_time / tau.abs();
    let steps = ratio.round();
    if (ratio - steps).abs() > STEP_COUNT_TOL * ratio.max(1.0) {
        return Err(Error::InvalidInput(format!("T/τ = {ratio} is not an integer")));
    }
    Ok(steps as usize)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub step: usize,
    pub time: f64,
    pub values: Vec<C64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub tau: f64,
    pub lambda: Option<f64>,
    pub snapshots: Vec<Snapshot>,
    /// Mass after every step, starting with step 0.
    pub masses: Vec<f64>,
}

impl Trajectory {
    pub fn last(&self) -> &Snapshot {
        self.snapshots.last().expect("trajectory has at least one snapshot")
    }
}

/// One step of the cutoff scheme: `S_λ(τ) N(τ) u`.
pub fn lie_step_cutoff<'h>(u: &State<'h>, problem: &Problem<'_>, cfg: &SchemeConfig) -> Result<State<'h>> {
    let lambda = cfg.lambda_rule.lambda(cfg.tau);
    let m = truncated_phases(u.hamiltonian(), cfg.tau, lambda, &cfg.profile)?;
    let after = nonlinear_flow(u, cfg.tau, problem);
    Ok(after.map_coeffs(|j, c| c * m[j]))
}

/// One step of the Fourier splitting: pointwise phase with the full
/// potential `V + W + ε|u|^{2σ}`, then exact free flight `exp(iτΔ)`.
pub fn fourier_splitting_step<'h>(u: &State<'h>, problem: &Problem<'_>, tau: f64) -> State<'h> {
    let ham = u.hamiltonian();
    let mut values = u.grid_values().into_owned();
    problem.apply_phase(&mut values, tau, Some(ham.v_values()));
    ham.fourier().free_flight(&mut values, tau);
    State::from_grid(ham, values).expect("length preserved")
}

/// Evolution kernel shared by the steppers. Eigen-space steppers carry
/// coefficients between steps, the Fourier stepper carries grid values.
enum Kernel {
    /// `c ↦ post ⊙ analyze(N(synthesize(pre ⊙ c)))`
    Spectral { pre: Option<Vec<C64>>, post: Vec<C64> },
    Fourier,
}

struct Evolution<'a, 'h> {
    problem: &'a Problem<'h>,
    kernel: Kernel,
    tau: f64,
}

impl Evolution<'_, '_> {
    fn for_config<'a, 'h>(problem: &'a Problem<'h>, cfg: &SchemeConfig) -> Result<Evolution<'a, 'h>> {
        let ham = problem.ham;
        let tau = cfg.tau;
        let kernel = match cfg.stepper {
            Stepper::CutoffLie => Kernel::Spectral {
                pre: None,
                post: truncated_phases(ham, tau, cfg.lambda_rule.lambda(tau), &cfg.profile)?,
            },
            Stepper::PlainLie => Kernel::Spectral { pre: None, post: propagator_phases(ham, tau) },
            Stepper::StrangReference => {
                let half = propagator_phases(ham, 0.5 * tau);
                Kernel::Spectral { pre: Some(half.clone()), post: half }
            }
            Stepper::FourierLie => Kernel::Fourier,
        };
        Ok(Evolution { problem, kernel, tau })
    }

    fn strang<'a, 'h>(problem: &'a Problem<'h>, tau: f64) -> Evolution<'a, 'h> {
        let half = propagator_phases(problem.ham, 0.5 * tau);
        Evolution { problem, kernel: Kernel::Spectral { pre: Some(half.clone()), post: half }, tau }
    }

    /// Representation carried between steps.
    fn prepare(&self, u: &State<'_>) -> Vec<C64> {
        match self.kernel {
            Kernel::Spectral { .. } => u.coeffs().into_owned(),
            Kernel::Fourier => u.grid_values().into_owned(),
        }
    }

    fn step(&self, data: &mut Vec<C64>) {
        let ham = self.problem.ham;
        match &self.kernel {
            Kernel::Spectral { pre, post } => {
                if let Some(pre) = pre {
                    data.iter_mut().zip(pre).for_each(|(c, p)| *c *= p);
                }
                let mut u = ham.synthesize(data);
                self.problem.apply_phase(&mut u, self.tau, None);
                *data = ham.analyze(&u);
                data.iter_mut().zip(post).for_each(|(c, p)| *c *= p);
            }
            Kernel::Fourier => {
                self.problem.apply_phase(data, self.tau, Some(ham.v_values()));
                ham.fourier().free_flight(data, self.tau);
            }
        }
    }

    fn grid_values(&self, data: &[C64]) -> Vec<C64> {
        match self.kernel {
            Kernel::Spectral { .. } => self.problem.ham.synthesize(data),
            Kernel::Fourier => data.to_vec(),
        }
    }

    fn mass(&self, data: &[C64]) -> f64 {
        match self.kernel {
            Kernel::Spectral { .. } => data.iter().map(|z| z.norm_sqr()).sum(),
            Kernel::Fourier => diagnostics::mass(data, self.problem.ham.grid().spacing()),
        }
    }

    fn h1_squared(&self, data: &[C64]) -> f64 {
        let ham = self.problem.ham;
        match self.kernel {
            Kernel::Spectral { .. } => data.iter().zip(ham.eigenvalues()).map(|(c, mu)| mu * c.norm_sqr()).sum(),
            Kernel::Fourier => {
                let h = ham.grid().spacing();
                let grad = ham.fourier().gradient(data);
                let kinetic = diagnostics::mass(&grad, h);
                let potential: f64 = data.iter().zip(ham.v_values()).map(|(z, v)| v * z.norm_sqr()).sum();
                kinetic + h * potential
            }
        }
    }

    /// Runs `steps` steps, snapshotting every `stride` steps and at the end.
    fn run(&self, mut data: Vec<C64>, steps: usize, stride: usize, time_sign: f64) -> Result<Trajectory> {
        let stride = stride.max(1);
        let h1_limit = H1_GROWTH_LIMIT * H1_GROWTH_LIMIT * self.h1_squared(&data).max(f64::MIN_POSITIVE);
        let mut snapshots = vec![Snapshot { step: 0, time: 0.0, values: self.grid_values(&data) }];
        let mut masses = Vec::with_capacity(steps + 1);
        masses.push(self.mass(&data));
        for n in 1..=steps {
            self.step(&mut data);
            if let Some(i) = data.iter().position(|z| !z.is_finite()) {
                return Err(Error::BlowUp { step: n, reason: format!("non-finite value at component {i}") });
            }
            let h1 = self.h1_squared(&data);
            if h1 > h1_limit {
                return Err(Error::BlowUp {
                    step: n,
                    reason: format!("𝓗¹ norm grew past {H1_GROWTH_LIMIT:e} times its initial value"),
                });
            }
            masses.push(self.mass(&data));
            if n % stride == 0 || n == steps {
                snapshots.push(Snapshot {
                    step: n,
                    time: time_sign * n as f64 * self.tau.abs(),
                    values: self.grid_values(&data),
                });
            }
        }
        Ok(Trajectory { tau: self.tau.abs(), lambda: None, snapshots, masses })
    }
}

/// Evolves `u₀` with the configured stepper for `T/τ` steps. The cutoff
/// scheme starts from `Π_λ u₀`.
pub fn run_scheme(u0: &State<'_>, problem: &Problem<'_>, cfg: &SchemeConfig, stride: usize) -> Result<Trajectory> {
    let steps = cfg.validate()?;
    let evolution = Evolution::for_config(problem, cfg)?;
    let mut data = evolution.prepare(u0);
    if let Some(lambda) = cfg.lambda() {
        let w = projector_weights(problem.ham, lambda, &cfg.profile)?;
        data.iter_mut().zip(&w).for_each(|(c, w)| *c *= w);
    }
    let mut traj = evolution.run(data, steps, stride, 1.0)?;
    traj.lambda = cfg.lambda();
    Ok(traj)
}

/// Fine Strang solution without cutoff standing in for the exact flow.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceSolution {
    pub tau_ref: f64,
    pub final_time: f64,
    /// Snapshots at multiples of the requested interval, plus the final time.
    pub snapshots: Vec<Snapshot>,
    /// L² distance between the runs at `τ_ref` and `τ_ref / 2`.
    pub self_check: f64,
    pub mass_drift: f64,
    pub energy_drift: f64,
}

impl ReferenceSolution {
    pub fn final_values(&self) -> &[C64] {
        &self.snapshots.last().expect("reference has a final snapshot").values
    }

    pub fn at_time(&self, t: f64) -> Option<&Snapshot> {
        self.snapshots.iter().find(|s| (s.time - t).abs() <= 1e-9 * self.tau_ref)
    }
}

/// Strang evolution `(S(τ/2) N(τ) S(τ/2))^{T/τ}` with signed `τ`.
pub fn strang_evolve(u0: &State<'_>, problem: &Problem<'_>, final_time: f64, tau: f64, stride: usize) -> Result<Trajectory> {
    let steps = step_count(final_time, tau)?;
    let evolution = Evolution::strang(problem, tau);
    evolution.run(evolution.prepare(u0), steps, stride, tau.signum())
}

/// Reference solution at step `τ_ref`, validated against a run at `τ_ref/2`.
/// `snapshot_every` (a multiple of `τ_ref`) selects the recorded times.
pub fn strang_reference(
    u0: &State<'_>,
    problem: &Problem<'_>,
    final_time: f64,
    tau_ref: f64,
    snapshot_every: Option<f64>,
) -> Result<ReferenceSolution> {
    if !(tau_ref > 0.0) {
        return Err(Error::InvalidInput(format!("reference step must be positive, got {tau_ref}")));
    }
    let stride = match snapshot_every {
        Some(dt) => step_count(dt, tau_ref)?,
        None => usize::MAX,
    };
    let coarse = strang_evolve(u0, problem, final_time, tau_ref, stride)?;
    let fine = strang_evolve(u0, problem, final_time, 0.5 * tau_ref, usize::MAX)?;
    let h = problem.ham.grid().spacing();
    let diff: Vec<C64> = coarse.last().values.iter().zip(&fine.last().values).map(|(a, b)| a - b).collect();
    let self_check = diagnostics::mass(&diff, h).sqrt();
    if !(self_check <= REFERENCE_TOL) {
        return Err(Error::ReferenceUnreliable { difference: self_check, tolerance: REFERENCE_TOL });
    }
    let first = &coarse.snapshots[0].values;
    let last = &coarse.last().values;
    let m0 = diagnostics::mass(first, h);
    let e0 = problem.energy(first);
    Ok(ReferenceSolution {
        tau_ref,
        final_time,
        mass_drift: relative_drift(m0, diagnostics::mass(last, h)),
        energy_drift: relative_drift(e0, problem.energy(last)),
        snapshots: coarse.snapshots,
        self_check,
    })
}

pub fn relative_drift(initial: f64, current: f64) -> f64 {
    if initial == 0.0 {
        current.abs()
    } else {
        ((current - initial) / initial).abs()
    }
}
