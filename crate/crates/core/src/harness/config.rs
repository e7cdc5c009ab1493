use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::bayes::{ArmPrior, BeliefVector, ModelFamily};
use crate::error::{IrsError, Result};
use crate::inner::{PenaltyKind, DEFAULT_VEMAX_BUDGET};
use crate::policies::PolicyKind;

/// A scalar shared by all arms or one value per arm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ArmParam {
    Scalar(f64),
    PerArm(Vec<f64>),
}

impl ArmParam {
    pub fn expand(&self, arms: usize, name: &str) -> Result<Vec<f64>> {
        match self {
            ArmParam::Scalar(v) => Ok(vec![*v; arms]),
            ArmParam::PerArm(v) if v.len() == arms => Ok(v.clone()),
            ArmParam::PerArm(v) => Err(IrsError::Config(format!(
                "'{name}' lists {} values for {arms} arms",
                v.len()
            ))),
        }
    }
}

/// Prior family and hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelSpec {
    Beta {
        arms: usize,
        alpha: ArmParam,
        beta: ArmParam,
    },
    Gaussian {
        arms: usize,
        mean: ArmParam,
        variance: ArmParam,
        noise_variance: ArmParam,
    },
}

impl ModelSpec {
    pub fn family(&self) -> ModelFamily {
        match self {
            ModelSpec::Beta { .. } => ModelFamily::BetaBernoulli,
            ModelSpec::Gaussian { .. } => ModelFamily::Gaussian,
        }
    }

    pub fn belief(&self) -> Result<BeliefVector> {
        let arms = match *self {
            ModelSpec::Beta { arms, .. } | ModelSpec::Gaussian { arms, .. } => arms,
        };
        if arms == 0 {
            return Err(IrsError::Config("model needs at least one arm".into()));
        }
        let priors = match self {
            ModelSpec::Beta { alpha, beta, .. } => alpha
                .expand(arms, "alpha")?
                .into_iter()
                .zip(beta.expand(arms, "beta")?)
                .map(|(a, b)| ArmPrior::beta(a, b))
                .collect::<Result<Vec<_>>>(),
            ModelSpec::Gaussian {
                mean,
                variance,
                noise_variance,
                ..
            } => {
                let m = mean.expand(arms, "mean")?;
                let v = variance.expand(arms, "variance")?;
                let n = noise_variance.expand(arms, "noise_variance")?;
                (0..arms)
                    .map(|a| ArmPrior::gaussian(m[a], v[a], n[a]))
                    .collect::<Result<Vec<_>>>()
            }
        }
        .map_err(|e| IrsError::Config(e.to_string()))?;
        BeliefVector::new(priors)
    }
}

/// Horizons to evaluate, as a list or an arithmetic range.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum HorizonGrid {
    List(Vec<usize>),
    Range { start: usize, step: usize, max: usize },
}

impl HorizonGrid {
    pub fn values(&self) -> Result<Vec<usize>> {
        let v: Vec<usize> = match *self {
            HorizonGrid::List(ref v) => v.clone(),
            HorizonGrid::Range { start, step, max } => {
                if step == 0 {
                    return Err(IrsError::Config("horizon step must be positive".into()));
                }
                (start..=max).step_by(step).collect()
            }
        };
        if v.first() == Some(&0) {
            return Err(IrsError::Config("horizons must be at least 1".into()));
        }
        if v.windows(2).any(|w| w[0] >= w[1]) {
            return Err(IrsError::Config("horizons must be strictly increasing".into()));
        }
        Ok(v)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

/// Declarative description of one experiment grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub samples: usize,
    pub horizons: HorizonGrid,
    #[serde(default)]
    pub policies: Vec<PolicyKind>,
    #[serde(default)]
    pub penalties: Vec<PenaltyKind>,
    /// Worker threads; results never depend on it.
    #[serde(default)]
    pub jobs: Option<usize>,
    /// Fill the `runtime_ms` column (makes output machine-dependent).
    #[serde(default)]
    pub record_runtime: bool,
    #[serde(default = "default_vemax_budget")]
    pub vemax_budget: u64,
    #[serde(default)]
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub format: OutputFormat,
    pub model: ModelSpec,
}

fn default_vemax_budget() -> u64 {
    DEFAULT_VEMAX_BUDGET as u64
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| IrsError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            IrsError::Config(format!("cannot read config {}: {e}", path.display()))
        })?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| IrsError::Serialization(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        if self.samples < 2 {
            return Err(IrsError::Config("samples must be at least 2".into()));
        }
        if self.jobs == Some(0) {
            return Err(IrsError::Config("jobs must be at least 1".into()));
        }
        self.horizons.values()?;
        let belief = self.model.belief()?;
        if self.policies.contains(&PolicyKind::OptDp)
            && belief.family() != ModelFamily::BetaBernoulli
        {
            return Err(IrsError::Config(
                "the exact DP policy needs a Beta-Bernoulli model".into(),
            ));
        }
        let mut seen = std::collections::HashSet::new();
        if !self.policies.iter().all(|p| seen.insert(p.name())) {
            return Err(IrsError::Config("duplicate policy".into()));
        }
        let mut seen = std::collections::HashSet::new();
        if !self.penalties.iter().all(|p| seen.insert(p.name())) {
            return Err(IrsError::Config("duplicate penalty".into()));
        }
        Ok(())
    }
}
