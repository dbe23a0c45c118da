//! Experiment configuration documents.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use jumplaw::fokker_planck::EvolutionConfig;
use jumplaw::grid::UniformGrid;
use jumplaw::model::{Assumption, CoefficientSet};
use jumplaw::presets;
use jumplaw::simulator::{InitialLaw, OdeOptions};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: ModelStanza,
    #[serde(default)]
    pub grids: GridsStanza,
    #[serde(default)]
    pub check: Option<CheckStanza>,
    #[serde(default)]
    pub simulation: Option<SimulationStanza>,
    #[serde(default)]
    pub evolution: Option<EvolutionStanza>,
    #[serde(default)]
    pub kernels: Option<KernelStanza>,
    #[serde(default)]
    pub diagnostics: Option<DiagnosticsStanza>,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Preset {
    ExpJump,
    Counterexample,
    RegularizedCounterexample,
    PowerLaw,
    UniformJump,
    SmoothOscillating,
    SmoothLorentzian,
    Custom,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelStanza {
    pub preset: Preset,
    #[serde(default)]
    pub horizon: Option<f64>,
    #[serde(default)]
    pub exponent: Option<f64>,
    #[serde(default)]
    pub eps: Option<f64>,
    /// Overrides of the smoothness and moment orders.
    #[serde(default)]
    pub k: Option<usize>,
    #[serde(default)]
    pub p: Option<f64>,
    /// Full model for `preset = "custom"`.
    #[serde(default)]
    pub coefficients: Option<CoefficientSet>,
}

impl ModelStanza {
    pub fn build(&self) -> anyhow::Result<CoefficientSet> {
        let need = |v: Option<f64>, name: &str| {
            v.with_context(|| format!("model.{name} is required for preset {:?}", self.preset))
        };
        let horizon = self.horizon.unwrap_or(100.0);
        let mut m = match self.preset {
            Preset::ExpJump => presets::exp_jump(horizon),
            Preset::Counterexample => presets::counterexample(horizon),
            Preset::RegularizedCounterexample => presets::regularized_counterexample(horizon, need(self.eps, "eps")?),
            Preset::PowerLaw => presets::power_law(need(self.exponent, "exponent")?, horizon),
            Preset::UniformJump => presets::uniform_jump(),
            Preset::SmoothOscillating => presets::smooth_oscillating(),
            Preset::SmoothLorentzian => presets::smooth_lorentzian(),
            Preset::Custom => {
                self.coefficients.clone().context("model.coefficients is required for preset \"custom\"")?
            }
        };
        if self.preset != Preset::Custom && self.coefficients.is_some() {
            bail!("model.coefficients is only read for preset \"custom\"");
        }
        if let Some(k) = self.k {
            m.k = k;
        }
        if let Some(p) = self.p {
            m.p = p;
        }
        m.validate()?;
        Ok(m)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridsStanza {
    #[serde(default = "default_y_grid")]
    pub y: UniformGrid,
    #[serde(default = "default_z_grid")]
    pub z: UniformGrid,
}

fn default_y_grid() -> UniformGrid {
    UniformGrid { lo: -5.0, hi: 5.0, points: 101 }
}
fn default_z_grid() -> UniformGrid {
    UniformGrid { lo: 0.0, hi: 10.0, points: 201 }
}

impl Default for GridsStanza {
    fn default() -> Self {
        GridsStanza { y: default_y_grid(), z: default_z_grid() }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckStanza {
    #[serde(default = "default_assumptions")]
    pub assumptions: Vec<Assumption>,
    #[serde(default = "default_s_tolerance")]
    pub s_tolerance: f64,
    #[serde(default = "default_theta")]
    pub theta: f64,
    #[serde(default = "default_n_max")]
    pub n_max: usize,
}

fn default_assumptions() -> Vec<Assumption> {
    vec![Assumption::A, Assumption::S, Assumption::B]
}
fn default_s_tolerance() -> f64 {
    1e-8
}
fn default_theta() -> f64 {
    1.0
}
fn default_n_max() -> usize {
    20
}

impl Default for CheckStanza {
    fn default() -> Self {
        CheckStanza {
            assumptions: default_assumptions(),
            s_tolerance: default_s_tolerance(),
            theta: default_theta(),
            n_max: default_n_max(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationStanza {
    #[serde(default)]
    pub x0: Option<f64>,
    #[serde(default)]
    pub law: Option<InitialLaw>,
    pub times: Vec<f64>,
    pub runs: usize,
    #[serde(default)]
    pub seed: Option<u64>,
    /// Defaults to the largest declared truncation.
    #[serde(default)]
    pub trunc_i: Option<usize>,
    /// Poissonize the drift with this index instead of integrating it.
    #[serde(default)]
    pub poisson_i: Option<usize>,
    #[serde(default)]
    pub ode: Option<OdeOptions>,
}

impl SimulationStanza {
    pub fn initial_law(&self) -> anyhow::Result<InitialLaw> {
        match (self.x0, self.law) {
            (Some(x), None) => Ok(InitialLaw::Point { x }),
            (None, Some(l)) => Ok(l),
            (None, None) => bail!("simulation needs either x0 or law"),
            (Some(_), Some(_)) => bail!("simulation.x0 and simulation.law are mutually exclusive"),
        }
    }

    pub fn validate(&self) -> anyhow::Result<()> {
        if self.times.is_empty() {
            bail!("simulation.times must not be empty");
        }
        if self.times.iter().any(|t| !(t.is_finite() && *t >= 0.0)) {
            bail!("simulation.times must be finite and nonnegative");
        }
        if self.times.windows(2).any(|w| w[1] < w[0]) {
            bail!("simulation.times must be sorted");
        }
        self.initial_law().map(|_| ())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvolutionStanza {
    pub i: usize,
    /// Defaults to the largest stable step.
    #[serde(default)]
    pub dt: Option<f64>,
    /// Defaults to a window covering the initial law and the expected drift
    /// and jump displacement.
    #[serde(default)]
    pub window: Option<[f64; 2]>,
    #[serde(default = "default_points")]
    pub points: usize,
    pub t_end: f64,
    pub initial: InitialLaw,
    #[serde(default = "default_order")]
    pub k: usize,
    #[serde(default = "default_checkpoints")]
    pub checkpoints: usize,
    #[serde(default)]
    pub trunc: Option<usize>,
    #[serde(default = "default_quad_nodes")]
    pub quad_nodes: usize,
    #[serde(default = "default_true")]
    pub growth_audit: bool,
    /// Simulated paths for the cross-engine comparison at `t_end`; needs a seed.
    #[serde(default)]
    pub compare_runs: Option<usize>,
}

fn default_points() -> usize {
    2048
}
fn default_order() -> usize {
    2
}
fn default_checkpoints() -> usize {
    10
}
fn default_quad_nodes() -> usize {
    256
}
fn default_true() -> bool {
    true
}

impl EvolutionStanza {
    pub fn solver_config(&self, coeffs: &CoefficientSet) -> anyhow::Result<EvolutionConfig> {
        let mut cfg = EvolutionConfig::new(self.i, 0.0);
        cfg.trunc = self.trunc;
        cfg.quad_nodes = self.quad_nodes;
        cfg.dt = match self.dt {
            Some(dt) => dt,
            None => cfg.max_stable_dt(coeffs)?,
        };
        Ok(cfg)
    }

    pub fn grid(&self, coeffs: &CoefficientSet) -> anyhow::Result<UniformGrid> {
        let [lo, hi] = match self.window {
            Some(w) => w,
            None => {
                let (mean, std) = match self.initial {
                    InitialLaw::Gaussian { mean, std } => (mean, std),
                    InitialLaw::Point { .. } => bail!("evolution.initial must be a law with a density"),
                };
                let (lo, hi) = jumplaw::fokker_planck::suggest_window(coeffs, mean, std, self.t_end)?;
                [lo, hi]
            }
        };
        Ok(UniformGrid::new(lo, hi, self.points)?)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelStanza {
    pub n: Vec<usize>,
    #[serde(default)]
    pub k: Option<usize>,
    #[serde(default)]
    pub p: Option<f64>,
    #[serde(default = "default_theta")]
    pub theta: f64,
    /// Audit grid; defaults to `grids.y`.
    #[serde(default)]
    pub y: Option<UniformGrid>,
    /// State at which kernel profiles are tabulated.
    #[serde(default)]
    pub profile_y: f64,
    #[serde(default = "default_profile_points")]
    pub profile_points: usize,
    /// Poissonization index of the dumped transfer-coefficient table.
    #[serde(default = "default_transfer_i")]
    pub transfer_i: usize,
    #[serde(default = "default_true")]
    pub transfer: bool,
}

fn default_profile_points() -> usize {
    401
}
fn default_transfer_i() -> usize {
    50
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CertificateKind {
    Decay,
    Envelope,
    Survival,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiagnosticsStanza {
    pub t: f64,
    #[serde(default)]
    pub x0: f64,
    pub runs: usize,
    /// Kernel indices; defaults to `kernels.n`, else `[1, 2, 3, 5, 8]`.
    #[serde(default)]
    pub n: Option<Vec<usize>>,
    #[serde(default)]
    pub band: Option<[f64; 2]>,
    #[serde(default = "default_xi_points")]
    pub xi_points: usize,
    #[serde(default = "default_calibration")]
    pub calibration_fraction: f64,
    #[serde(default = "default_survival_runs")]
    pub survival_runs: usize,
    #[serde(default = "default_certificates")]
    pub certificates: Vec<CertificateKind>,
    #[serde(default)]
    pub trunc_i: Option<usize>,
}

fn default_xi_points() -> usize {
    200
}
fn default_calibration() -> f64 {
    0.25
}
fn default_survival_runs() -> usize {
    20_000
}
fn default_certificates() -> Vec<CertificateKind> {
    vec![CertificateKind::Decay, CertificateKind::Envelope, CertificateKind::Survival]
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> anyhow::Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(text)?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> anyhow::Result<(Self, String)> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let cfg = Self::parse(&text).with_context(|| format!("parsing {}", path.display()))?;
        Ok((cfg, text))
    }

    pub fn stanza<'a, T>(value: &'a Option<T>, name: &str) -> anyhow::Result<&'a T> {
        value.as_ref().with_context(|| format!("config has no [{name}] stanza"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_parses_with_defaults() {
        let cfg = ExperimentConfig::parse("[model]\npreset = \"exp_jump\"\n").unwrap();
        assert_eq!(cfg.output_dir, PathBuf::from("out"));
        assert_eq!(cfg.grids.y.points, 101);
        assert!(cfg.simulation.is_none());
        let m = cfg.model.build().unwrap();
        assert_eq!(m.k, 2);
    }

    #[test]
    fn unknown_field_is_rejected_with_location() {
        let err = ExperimentConfig::parse("[model]\npreset = \"exp_jump\"\nhorizn = 3.0\n").unwrap_err();
        let msg = format!("{err:#}");
        assert!(msg.contains("horizn"), "{msg}");
        assert!(msg.contains("line 3"), "{msg}");
    }

    #[test]
    fn preset_parameters_are_required() {
        let cfg = ExperimentConfig::parse("[model]\npreset = \"power_law\"\n").unwrap();
        assert!(cfg.model.build().unwrap_err().to_string().contains("exponent"));
    }

    #[test]
    fn initial_law_is_exclusive() {
        let s = SimulationStanza {
            x0: Some(0.0),
            law: Some(InitialLaw::Gaussian { mean: 0.0, std: 1.0 }),
            times: vec![1.0],
            runs: 1,
            seed: Some(1),
            trunc_i: None,
            poisson_i: None,
            ode: None,
        };
        assert!(s.validate().is_err());
    }
}
