use std::f64::consts::PI;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::learning::LearningConfig;
use crate::scenarios::{AllocationParams, DriftSchedule, OscillatorParams};
use crate::solver::StepRule;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScenarioKind {
    #[default]
    Oscillator,
    Allocation,
}

impl FromStr for ScenarioKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "oscillator" => Ok(ScenarioKind::Oscillator),
            "allocation" => Ok(ScenarioKind::Allocation),
            other => Err(Error::Config {
                field: "scenario".into(),
                reason: format!("expected `oscillator` or `allocation`, got `{other}`"),
            }),
        }
    }
}

impl fmt::Display for ScenarioKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ScenarioKind::Oscillator => "oscillator",
            ScenarioKind::Allocation => "allocation",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

impl FromStr for OutputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            other => Err(Error::Config {
                field: "format".into(),
                reason: format!("expected `csv` or `json`, got `{other}`"),
            }),
        }
    }
}

impl OutputFormat {
    pub fn extension(self) -> &'static str {
        match self {
            OutputFormat::Csv => "csv",
            OutputFormat::Json => "json",
        }
    }
}

/// Flat run configuration. Every key is optional in the file; scenario
/// dependent keys left unset take the scenario's default.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub scenario: ScenarioKind,
    pub horizon: u64,
    pub seed: u64,

    pub beta: f64,
    pub theta: f64,
    pub d: f64,
    pub a0_const: f64,
    pub t0: usize,
    /// Sub-Gaussian scale used for learning. Defaults to `h * sigma`, the
    /// scale of the additive disturbance `h w`.
    pub learning_sigma: Option<f64>,
    /// Used when the Gram matrix vanishes; unset makes that an error.
    pub fallback_c: Option<f64>,

    pub mu: Option<f64>,
    pub step_rule: StepRule,
    pub inner_steps: usize,

    /// Noise scale of `w`.
    pub sigma: Option<f64>,
    pub h: f64,

    pub a0_osc: f64,
    pub b0_osc: f64,
    pub u_max: f64,

    pub r0: f64,
    pub switch_interval: u64,
    pub level_lo: f64,
    pub level_hi: f64,
    /// Initial returns of the two risky assets.
    pub x0_returns: [f64; 2],

    pub out: Option<String>,
    pub format: OutputFormat,
    pub regret: bool,
    pub regret_samples: usize,
    pub replications: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            scenario: ScenarioKind::Oscillator,
            horizon: 50_000,
            seed: 0,
            beta: 0.05,
            theta: 1.0,
            d: 1.0,
            a0_const: 1.0,
            t0: 500,
            learning_sigma: None,
            fallback_c: None,
            mu: None,
            step_rule: StepRule::InverseLipschitz,
            inner_steps: 1,
            sigma: None,
            h: 1e-3,
            a0_osc: 0.1,
            b0_osc: 0.5 * PI,
            u_max: 0.6,
            r0: 1.3,
            switch_interval: 5_000,
            level_lo: 0.6,
            level_hi: 1.8,
            x0_returns: [1.0, 1.0],
            out: None,
            format: OutputFormat::Csv,
            regret: false,
            regret_samples: 200,
            replications: 1,
        }
    }
}

impl RunConfig {
    pub fn for_scenario(scenario: ScenarioKind) -> Self {
        Self {
            scenario,
            ..Self::default()
        }
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config {
            field: "file".into(),
            reason: e.message().to_string(),
        })
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn noise_sigma(&self) -> f64 {
        self.sigma.unwrap_or(match self.scenario {
            ScenarioKind::Oscillator => 1.0,
            ScenarioKind::Allocation => 0.1,
        })
    }

    pub fn smoothing_mu(&self) -> f64 {
        self.mu.unwrap_or(match self.scenario {
            ScenarioKind::Oscillator => 0.1,
            ScenarioKind::Allocation => 0.01,
        })
    }

    pub fn learning(&self) -> LearningConfig {
        LearningConfig {
            beta: self.beta,
            theta: self.theta,
            sigma: self.learning_sigma.unwrap_or(self.h * self.noise_sigma()),
            d: self.d,
            a0: self.a0_const,
            horizon: self.t0,
        }
    }

    pub fn oscillator(&self) -> OscillatorParams {
        OscillatorParams {
            a0: self.a0_osc,
            b0: self.b0_osc,
            h: self.h,
            sigma: self.noise_sigma(),
            u_max: self.u_max,
            ..OscillatorParams::default()
        }
    }

    /// Allocation parameters for one replication seed.
    pub fn allocation(&self, seed: u64) -> Result<AllocationParams> {
        let schedule = DriftSchedule::random_levels(
            seed ^ SCHEDULE_SALT,
            self.switch_interval,
            self.level_lo,
            self.level_hi,
            self.x0_returns,
            self.h,
            self.horizon + 1,
        )?;
        Ok(AllocationParams {
            h: self.h,
            sigma: self.noise_sigma(),
            r0: self.r0,
            x0: [self.x0_returns[0], self.x0_returns[1], 1.0],
            schedule,
        })
    }

    /// Every violated invariant as `(field, reason)`; empty when valid.
    pub fn violations(&self) -> Vec<(String, String)> {
        let mut out: Vec<(String, String)> = self
            .learning()
            .violations()
            .into_iter()
            .map(|(f, r)| {
                let f = match f {
                    "horizon" => "t0",
                    "a0" => "a0_const",
                    "sigma" if self.learning_sigma.is_none() => "sigma",
                    "sigma" => "learning_sigma",
                    other => other,
                };
                (f.to_string(), r)
            })
            .collect();
        let mut check = |ok: bool, field: &str, reason: String| {
            if !ok {
                out.push((field.to_string(), reason));
            }
        };
        check(self.horizon >= 1, "horizon", "must be at least 1".into());
        let mu = self.smoothing_mu();
        check(mu > 0.0 && mu.is_finite(), "mu", format!("must be > 0, got {mu}"));
        check(self.inner_steps >= 1, "inner_steps", "must be at least 1".into());
        check(self.replications >= 1, "replications", "must be at least 1".into());
        check(
            !self.regret || self.regret_samples >= 100,
            "regret_samples",
            format!("must be at least 100, got {}", self.regret_samples),
        );
        check(self.h > 0.0 && self.h.is_finite(), "h", format!("must be > 0, got {}", self.h));
        let s = self.noise_sigma();
        check(s >= 0.0 && s.is_finite(), "sigma", format!("must be >= 0, got {s}"));
        if let Some(c) = self.fallback_c {
            check(c >= 0.0 && c.is_finite(), "fallback_c", format!("must be >= 0, got {c}"));
        }
        match self.scenario {
            ScenarioKind::Oscillator => {
                check(self.a0_osc > 0.0, "a0_osc", format!("must be > 0, got {}", self.a0_osc));
                check(self.b0_osc > 0.0, "b0_osc", format!("must be > 0, got {}", self.b0_osc));
                check(self.u_max >= 0.0, "u_max", format!("must be >= 0, got {}", self.u_max));
            }
            ScenarioKind::Allocation => {
                check(self.r0 > 0.0, "r0", format!("must be > 0, got {}", self.r0));
                check(self.switch_interval >= 1, "switch_interval", "must be at least 1".into());
                check(
                    self.level_lo <= self.level_hi,
                    "level_lo",
                    format!("must not exceed level_hi ({} > {})", self.level_lo, self.level_hi),
                );
            }
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        match self.violations().into_iter().next() {
            None => Ok(()),
            Some((field, reason)) => Err(Error::Config { field, reason }),
        }
    }
}

const SCHEDULE_SALT: u64 = 0x5eed_a110_ca71_0000;
