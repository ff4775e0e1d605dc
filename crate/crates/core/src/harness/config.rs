//! Flat TOML experiment description. Every key is optional and unknown keys
//! are rejected.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::cutoff::CutoffProfile;
use crate::error::{Error, Result};
use crate::flows::{step_count, LambdaRule, NonlinearitySpec, Stepper};
use crate::grid::Grid1D;
use crate::potential::{read_tabulation, Confining, Perturbation, PotentialSpec};

/// Minimum ratio between the smallest ladder step and the reference step.
pub const REFERENCE_REFINEMENT: f64 = 32.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub n_points: usize,
    pub half_width: f64,

    /// `harmonic` or `tabulated`.
    pub potential: String,
    pub omega: f64,
    pub potential_shift: f64,
    pub potential_file: Option<PathBuf>,
    /// `none`, `gaussian` or `tabulated`.
    pub perturbation: String,
    pub perturbation_amplitude: f64,
    pub perturbation_width: f64,
    pub perturbation_file: Option<PathBuf>,

    pub sigma: f64,
    /// `+1` defocusing, `-1` focusing, `0` linear.
    pub epsilon: f64,

    /// `gaussian`, `eigen_mix` or `rough`.
    pub initial_data: String,
    pub gaussian_center: f64,
    pub gaussian_width: f64,
    /// Real eigen-coefficients `c_0, c_1, ...`.
    pub eigen_mix: Vec<f64>,
    pub rough_alpha: f64,

    pub steppers: Vec<String>,
    /// `inverse` or `scaled:c:gamma`.
    pub lambda_rules: Vec<String>,
    /// `exp_bump` or `smoothstep`.
    pub profile: String,
    pub smoothstep_order: u32,

    pub tau0: f64,
    /// Ladder is `tau0 * 2^-k` for `k = 0..=ladder_levels`.
    pub ladder_levels: u32,
    pub final_time: f64,
    /// Subset of `L2`, `calH1`; the norms that get an order fit.
    pub error_norms: Vec<String>,
    pub tau_ref: f64,

    pub out_dir: PathBuf,
    pub seed: u64,
    /// Snapshot stride, in steps, for the `run` subcommand.
    pub stride: usize,

    pub probe_lambdas: Vec<f64>,
    pub probe_times: Vec<f64>,
    pub probe_trials: usize,
    pub probe_p: f64,
    /// May be `inf`.
    #[serde(with = "extended_f64")]
    pub probe_q: f64,
    pub probe_final_time: f64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            n_points: 512,
            half_width: 12.0,
            potential: "harmonic".into(),
            omega: 1.0,
            potential_shift: 0.0,
            potential_file: None,
            perturbation: "gaussian".into(),
            perturbation_amplitude: 1.0,
            perturbation_width: 1.0,
            perturbation_file: None,
            sigma: 1.0,
            epsilon: 1.0,
            initial_data: "gaussian".into(),
            gaussian_center: 0.0,
            gaussian_width: 1.0,
            eigen_mix: vec![1.0],
            rough_alpha: 1.25,
            steppers: vec!["cutoff_lie".into()],
            lambda_rules: vec!["inverse".into()],
            profile: "exp_bump".into(),
            smoothstep_order: 4,
            tau0: 0.0625,
            ladder_levels: 6,
            final_time: 1.0,
            error_norms: vec!["L2".into(), "calH1".into()],
            tau_ref: 2f64.powi(-15),
            out_dir: PathBuf::from("out"),
            seed: 0,
            stride: 1,
            probe_lambdas: vec![8.0, 32.0, 128.0],
            probe_times: (0..=10).map(|k| 2f64.powi(-k)).collect(),
            probe_trials: 16,
            probe_p: 1.0,
            probe_q: f64::INFINITY,
            probe_final_time: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ErrorNorm {
    L2,
    #[serde(rename = "calH1")]
    CalH1,
}

impl ErrorNorm {
    pub fn name(&self) -> &'static str {
        match self {
            ErrorNorm::L2 => "L2",
            ErrorNorm::CalH1 => "calH1",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum InitialData {
    Gaussian { center: f64, width: f64 },
    EigenMix(Vec<f64>),
    Rough { alpha: f64 },
}

impl ExperimentConfig {
    /// Parses TOML text; relative file paths resolve against `base_dir`.
    pub fn from_toml_str(text: &str, base_dir: Option<&Path>) -> Result<Self> {
        let mut cfg: ExperimentConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        if let Some(dir) = base_dir {
            for path in [&mut cfg.potential_file, &mut cfg.perturbation_file].into_iter().flatten() {
                if path.is_relative() {
                    *path = dir.join(&*path);
                }
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text, path.parent())
    }

    pub fn grid(&self) -> Result<Grid1D> {
        Grid1D::new(self.n_points, self.half_width).map_err(config_error)
    }

    pub fn potential_spec(&self) -> Result<PotentialSpec> {
        let grid = self.grid()?;
        let confining = match self.potential.as_str() {
            "harmonic" => Confining::Harmonic { omega: self.omega, shift: self.potential_shift },
            "tabulated" => Confining::Tabulated { values: read_tabulation(self.file("potential_file", &self.potential_file)?, &grid)? },
            other => return Err(Error::Config(format!("unknown potential {other:?}"))),
        };
        let perturbation = match self.perturbation.as_str() {
            "none" => Perturbation::None,
            "gaussian" => Perturbation::Gaussian { amplitude: self.perturbation_amplitude, width: self.perturbation_width },
            "tabulated" => {
                Perturbation::Tabulated { values: read_tabulation(self.file("perturbation_file", &self.perturbation_file)?, &grid)? }
            }
            other => return Err(Error::Config(format!("unknown perturbation {other:?}"))),
        };
        Ok(PotentialSpec { confining, perturbation })
    }

    fn file<'a>(&self, key: &str, path: &'a Option<PathBuf>) -> Result<&'a Path> {
        path.as_deref().ok_or_else(|| Error::Config(format!("{key} is required for a tabulated input")))
    }

    pub fn nonlinearity(&self) -> Result<Option<NonlinearitySpec>> {
        if self.epsilon == 0.0 {
            return Ok(None);
        }
        NonlinearitySpec::new(self.sigma, self.epsilon).map(Some).map_err(config_error)
    }

    pub fn initial_data(&self) -> Result<InitialData> {
        match self.initial_data.as_str() {
            "gaussian" => Ok(InitialData::Gaussian { center: self.gaussian_center, width: self.gaussian_width }),
            "eigen_mix" => Ok(InitialData::EigenMix(self.eigen_mix.clone())),
            "rough" => Ok(InitialData::Rough { alpha: self.rough_alpha }),
            other => Err(Error::Config(format!("unknown initial_data {other:?}"))),
        }
    }

    pub fn steppers(&self) -> Result<Vec<Stepper>> {
        self.steppers.iter().map(|s| Stepper::parse(s)).collect()
    }

    pub fn lambda_rules(&self) -> Result<Vec<LambdaRule>> {
        self.lambda_rules.iter().map(|s| parse_lambda_rule(s)).collect()
    }

    pub fn profile(&self) -> Result<CutoffProfile> {
        match self.profile.as_str() {
            "exp_bump" => Ok(CutoffProfile::ExpBump),
            "smoothstep" => CutoffProfile::smoothstep(self.smoothstep_order).map_err(config_error),
            other => Err(Error::Config(format!("unknown profile {other:?}"))),
        }
    }

    pub fn error_norms(&self) -> Result<Vec<ErrorNorm>> {
        self.error_norms
            .iter()
            .map(|s| match s.as_str() {
                "L2" => Ok(ErrorNorm::L2),
                "calH1" => Ok(ErrorNorm::CalH1),
                other => Err(Error::Config(format!("unknown error norm {other:?}"))),
            })
            .collect()
    }

    /// `tau0 * 2^-k`, strictly decreasing.
    pub fn ladder(&self) -> Vec<f64> {
        (0..=self.ladder_levels).map(|k| self.tau0 * 2f64.powi(-(k as i32))).collect()
    }

    pub fn validate(&self) -> Result<()> {
        self.grid()?;
        if self.n_points % 2 != 0 {
            return Err(Error::Config(format!("n_points must be even, got {}", self.n_points)));
        }
        match self.potential.as_str() {
            "harmonic" => {}
            "tabulated" => {
                self.file("potential_file", &self.potential_file)?;
            }
            other => return Err(Error::Config(format!("unknown potential {other:?}"))),
        }
        match self.perturbation.as_str() {
            "none" | "gaussian" => {}
            "tabulated" => {
                self.file("perturbation_file", &self.perturbation_file)?;
            }
            other => return Err(Error::Config(format!("unknown perturbation {other:?}"))),
        }
        self.nonlinearity()?;
        self.initial_data()?;
        if self.initial_data == "rough" && !(self.rough_alpha > 0.0) {
            return Err(Error::Config(format!("rough_alpha must be positive, got {}", self.rough_alpha)));
        }
        if self.initial_data == "eigen_mix" && (self.eigen_mix.is_empty() || self.eigen_mix.len() > self.n_points) {
            return Err(Error::Config(format!("eigen_mix needs 1..={} coefficients", self.n_points)));
        }
        if self.steppers()?.is_empty() {
            return Err(Error::Config("steppers is empty".into()));
        }
        if self.lambda_rules()?.is_empty() {
            return Err(Error::Config("lambda_rules is empty".into()));
        }
        self.profile()?;
        self.error_norms()?;
        if !(self.tau0 > 0.0 && self.tau0 < 1.0) {
            return Err(Error::Config(format!("tau0 must lie in (0, 1), got {}", self.tau0)));
        }
        if !(self.final_time > 0.0 && self.final_time.is_finite()) {
            return Err(Error::Config(format!("final_time must be positive, got {}", self.final_time)));
        }
        for tau in self.ladder() {
            step_count(self.final_time, tau).map_err(|_| Error::Config(format!("final_time / {tau} is not an integer")))?;
        }
        let min_tau = self.tau0 * 2f64.powi(-(self.ladder_levels as i32));
        if !(self.tau_ref > 0.0 && self.tau_ref <= min_tau / REFERENCE_REFINEMENT) {
            return Err(Error::Config(format!(
                "tau_ref must be positive and at most {} (smallest step / {REFERENCE_REFINEMENT})",
                min_tau / REFERENCE_REFINEMENT
            )));
        }
        step_count(self.tau0, self.tau_ref).map_err(|_| Error::Config("tau0 / tau_ref is not an integer".into()))?;
        if self.stride == 0 {
            return Err(Error::Config("stride must be at least 1".into()));
        }
        if self.probe_lambdas.iter().any(|l| !(*l >= 1.0 && l.is_finite())) {
            return Err(Error::Config("probe_lambdas must be finite and at least 1".into()));
        }
        if self.probe_times.iter().any(|t| !(*t > 0.0 && *t <= 1.0)) {
            return Err(Error::Config("probe_times must lie in (0, 1]".into()));
        }
        if !(self.probe_p >= 1.0 && self.probe_p <= self.probe_q) {
            return Err(Error::Config("probe exponents need 1 <= probe_p <= probe_q".into()));
        }
        if !(self.probe_final_time > 0.0 && self.probe_final_time <= 1.0) {
            return Err(Error::Config("probe_final_time must lie in (0, 1]".into()));
        }
        Ok(())
    }
}

pub fn parse_lambda_rule(text: &str) -> Result<LambdaRule> {
    if text == "inverse" {
        return Ok(LambdaRule::Inverse);
    }
    let parts: Vec<&str> = text.split(':').collect();
    match parts.as_slice() {
        ["scaled", c, gamma] => {
            let c: f64 = c.parse().map_err(|_| Error::Config(format!("bad constant in lambda rule {text:?}")))?;
            let gamma: f64 = gamma.parse().map_err(|_| Error::Config(format!("bad exponent in lambda rule {text:?}")))?;
            if !(c > 0.0 && c.is_finite() && gamma.is_finite()) {
                return Err(Error::Config(format!("lambda rule {text:?} needs c > 0 and finite gamma")));
            }
            Ok(LambdaRule::Scaled { c, gamma })
        }
        _ => Err(Error::Config(format!("unknown lambda rule {text:?}"))),
    }
}

/// Floats that may be infinite: plain numbers when finite, `"inf"` /
/// `"-inf"` strings otherwise, so JSON echoes survive a round trip.
mod extended_f64 {
    use serde::{de, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else if v.is_nan() {
            s.serialize_str("nan")
        } else if *v > 0.0 {
            s.serialize_str("inf")
        } else {
            s.serialize_str("-inf")
        }
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Text(String),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Num(v) => Ok(v),
            Repr::Text(t) => match t.as_str() {
                "inf" | "+inf" => Ok(f64::INFINITY),
                "-inf" => Ok(f64::NEG_INFINITY),
                "nan" => Ok(f64::NAN),
                other => Err(de::Error::custom(format!("expected a number or inf, got {other:?}"))),
            },
        }
    }
}

fn config_error(e: Error) -> Error {
    match e {
        Error::InvalidInput(msg) => Error::Config(msg),
        other => other,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        let cfg = ExperimentConfig::from_toml_str("", None).unwrap();
        assert_eq!(cfg, ExperimentConfig::default());
        assert_eq!(cfg.ladder().len(), 7);
        assert_eq!(cfg.ladder()[6], 2f64.powi(-10));
        let json = serde_json::to_string(&cfg).unwrap();
        assert!(json.contains("\"probe_q\":\"inf\""));
        assert_eq!(serde_json::from_str::<ExperimentConfig>(&json).unwrap(), cfg);
        let finite = ExperimentConfig::from_toml_str("probe_q = 4.0\nprobe_p = 2.0", None).unwrap();
        assert_eq!(finite.probe_q, 4.0);
        assert!(ExperimentConfig::from_toml_str("probe_q = inf", None).unwrap().probe_q.is_infinite());
    }

    #[test]
    fn unknown_key_is_rejected() {
        let err = ExperimentConfig::from_toml_str("n_points = 64\nbogus = 1\n", None).unwrap_err();
        assert!(matches!(err, Error::Config(ref m) if m.contains("bogus")), "{err}");
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn invariants_are_checked() {
        for text in [
            "n_points = 63",
            "tau_ref = 0.001",
            "final_time = 0.3",
            "epsilon = 0.5",
            "steppers = [\"rk4\"]",
            "lambda_rules = [\"scaled:x:1\"]",
            "profile = \"smoothstep\"\nsmoothstep_order = 2",
            "error_norms = [\"H2\"]",
            "initial_data = \"rough\"\nrough_alpha = -1.0",
            "potential = \"tabulated\"",
        ] {
            assert!(matches!(ExperimentConfig::from_toml_str(text, None), Err(Error::Config(_))), "{text}");
        }
    }

    #[test]
    fn lambda_rules_parse() {
        assert_eq!(parse_lambda_rule("inverse").unwrap(), LambdaRule::Inverse);
        assert_eq!(parse_lambda_rule("scaled:2:0.5").unwrap(), LambdaRule::Scaled { c: 2.0, gamma: 0.5 });
        assert!(parse_lambda_rule("scaled:2").is_err());
        assert!(parse_lambda_rule("scaled:-1:1").is_err());
    }

    #[test]
    fn relative_files_resolve_against_config_dir() {
        let cfg = ExperimentConfig::from_toml_str(
            "n_points = 16\nhalf_width = 2.0\ntau0 = 0.25\nladder_levels = 0\ntau_ref = 0.0078125\npotential_file = \"v.txt\"\n",
            Some(Path::new("/data")),
        )
        .unwrap();
        assert_eq!(cfg.potential_file.as_deref(), Some(Path::new("/data/v.txt")));
    }
}
