//! Run configuration: built-in defaults, overridden by a TOML file, overridden by flags.

use std::fs;
use std::path::Path;

use clap::{Args, ValueEnum};
use serde::{Deserialize, Serialize};
use vpidm::sampler::{Discretization, SamplerGrid};
use vpidm::schedule::steps_for_epsilon;
use vpidm::signal::{ScalingConfig, Stft, StftConfig, WindowKind};
use vpidm::{IdmSchedule, LinearBeta, ScheduleKind, VeSchedule, VpSchedule};

use crate::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum ScheduleName {
    Vp,
    Ve,
    /// General solution evaluated by quadrature, parameterised like `vp`.
    Idm,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum DiscretizationName {
    Paper,
    Standard,
}

impl From<DiscretizationName> for Discretization {
    fn from(d: DiscretizationName) -> Self {
        match d {
            DiscretizationName::Paper => Discretization::Paper,
            DiscretizationName::Standard => Discretization::Standard,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum WindowName {
    SqrtHann,
    Hann,
    Rectangular,
}

impl From<WindowName> for WindowKind {
    fn from(w: WindowName) -> Self {
        match w {
            WindowName::SqrtHann => WindowKind::SqrtHann,
            WindowName::Hann => WindowKind::Hann,
            WindowName::Rectangular => WindowKind::Rectangular,
        }
    }
}

/// Every tunable, all optional. Shared by the flag parser and the config file.
#[derive(Clone, Debug, Default, Args, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct Overrides {
    #[arg(long, global = true, value_enum)]
    pub schedule: Option<ScheduleName>,
    #[arg(long, global = true)]
    pub beta_min: Option<f64>,
    #[arg(long, global = true)]
    pub beta_max: Option<f64>,
    #[arg(long, global = true)]
    pub lambda: Option<f64>,
    #[arg(long, global = true)]
    pub sigma_min: Option<f64>,
    #[arg(long, global = true)]
    pub sigma_max: Option<f64>,
    #[arg(long, global = true)]
    pub epsilon: Option<f64>,
    /// Reverse steps K; derived from epsilon when omitted.
    #[arg(long, global = true)]
    pub steps: Option<usize>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true)]
    pub a: Option<f64>,
    #[arg(long, global = true)]
    pub c: Option<f64>,
    #[arg(long, global = true)]
    pub frame: Option<usize>,
    #[arg(long, global = true)]
    pub hop: Option<usize>,
    #[arg(long, global = true, value_enum)]
    pub window: Option<WindowName>,
    #[arg(long, global = true, value_enum)]
    pub discretization: Option<DiscretizationName>,
    /// Worker threads for per-file parallelism.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
}

impl Overrides {
    /// Fields set here win over `base`.
    fn over(self, base: Overrides) -> Overrides {
        Overrides {
            schedule: self.schedule.or(base.schedule),
            beta_min: self.beta_min.or(base.beta_min),
            beta_max: self.beta_max.or(base.beta_max),
            lambda: self.lambda.or(base.lambda),
            sigma_min: self.sigma_min.or(base.sigma_min),
            sigma_max: self.sigma_max.or(base.sigma_max),
            epsilon: self.epsilon.or(base.epsilon),
            steps: self.steps.or(base.steps),
            seed: self.seed.or(base.seed),
            a: self.a.or(base.a),
            c: self.c.or(base.c),
            frame: self.frame.or(base.frame),
            hop: self.hop.or(base.hop),
            window: self.window.or(base.window),
            discretization: self.discretization.or(base.discretization),
            jobs: self.jobs.or(base.jobs),
        }
    }
}

/// Fully resolved configuration.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunConfig {
    pub schedule: ScheduleName,
    pub beta_min: f64,
    pub beta_max: f64,
    pub lambda: f64,
    pub sigma_min: f64,
    pub sigma_max: f64,
    pub epsilon: f64,
    pub steps: usize,
    pub seed: u64,
    pub a: f64,
    pub c: f64,
    pub frame: usize,
    pub hop: usize,
    pub window: WindowName,
    pub discretization: DiscretizationName,
    pub jobs: usize,
}

impl RunConfig {
    pub fn resolve(flags: Overrides, file: Option<&Path>) -> Result<Self, CliError> {
        let from_file = match file {
            Some(p) => parse_file(p)?,
            None => Overrides::default(),
        };
        let o = flags.over(from_file);
        let epsilon = o.epsilon.unwrap_or(0.04);
        let steps = match o.steps {
            Some(k) => k,
            None => steps_for_epsilon(epsilon).map_err(CliError::config)?,
        };
        Ok(Self {
            schedule: o.schedule.unwrap_or(ScheduleName::Vp),
            beta_min: o.beta_min.unwrap_or(0.1),
            beta_max: o.beta_max.unwrap_or(2.0),
            lambda: o.lambda.unwrap_or(1.5),
            sigma_min: o.sigma_min.unwrap_or(0.05),
            sigma_max: o.sigma_max.unwrap_or(0.5),
            epsilon,
            steps,
            seed: o.seed.unwrap_or(0),
            a: o.a.unwrap_or(0.15),
            c: o.c.unwrap_or(0.5),
            frame: o.frame.unwrap_or(510),
            hop: o.hop.unwrap_or(128),
            window: o.window.unwrap_or(WindowName::SqrtHann),
            discretization: o.discretization.unwrap_or(DiscretizationName::Standard),
            jobs: o.jobs.unwrap_or(1),
        })
    }

    pub fn vp(&self) -> Result<VpSchedule, CliError> {
        let beta = LinearBeta::new(self.beta_min, self.beta_max).map_err(CliError::config)?;
        VpSchedule::new(beta, self.lambda).map_err(CliError::config)
    }

    pub fn ve(&self) -> Result<VeSchedule, CliError> {
        VeSchedule::new(self.sigma_min, self.sigma_max, self.lambda).map_err(CliError::config)
    }

    pub fn schedule(&self) -> Result<ScheduleKind, CliError> {
        Ok(match self.schedule {
            ScheduleName::Vp => ScheduleKind::Vp(self.vp()?),
            ScheduleName::Ve => ScheduleKind::Ve(self.ve()?),
            ScheduleName::Idm => ScheduleKind::Idm(IdmSchedule::from_vp(self.vp()?)),
        })
    }

    pub fn grid(&self) -> Result<SamplerGrid, CliError> {
        SamplerGrid::new(self.epsilon, self.steps).map_err(CliError::config)
    }

    pub fn scaling(&self) -> Result<ScalingConfig, CliError> {
        ScalingConfig::new(self.a, self.c).map_err(CliError::config)
    }

    pub fn stft(&self) -> Result<Stft, CliError> {
        Stft::new(StftConfig {
            frame: self.frame,
            hop: self.hop,
            window: self.window.into(),
            center: true,
        })
        .map_err(CliError::config)
    }

    pub fn thread_pool(&self) -> Result<rayon::ThreadPool, CliError> {
        rayon::ThreadPoolBuilder::new()
            .num_threads(self.jobs)
            .build()
            .map_err(|e| CliError::Config(e.to_string()))
    }
}

fn parse_file(path: &Path) -> Result<Overrides, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

/// `stem` of a path as an owned string, for utterance ids.
pub fn stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}
