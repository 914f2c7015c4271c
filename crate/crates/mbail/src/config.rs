//! Experiment configuration, shared by the harness and the command-line
//! front end. Configs are plain JSON.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which experiment to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    GridworldRewardSweep,
    GridworldStochasticitySweep,
    MbailRun,
    HardInstanceVerify,
    UnitOracles,
}

/// Environment family for learner runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LearnerEnv {
    /// Small random MDP with perturbed-kernel model class.
    Small,
    /// GridWorld with per-p kernels as the model class.
    Gridworld,
}

/// Full experiment description. Unset optional fields fall back to the
/// declared defaults at run time.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    /// Reward-granularity values for the reward sweep and learner reward
    /// classes.
    #[serde(default = "default_n_values")]
    pub n_values: Vec<usize>,
    /// Success probabilities for the stochasticity sweep and model classes.
    #[serde(default = "default_p_values")]
    pub p_values: Vec<f64>,
    /// Success probability where a single value is needed.
    #[serde(default = "default_p")]
    pub p: f64,
    /// Learner interaction rounds.
    #[serde(default = "default_rounds")]
    pub rounds: usize,
    /// Expert trajectories for learner runs.
    #[serde(default = "default_expert_episodes")]
    pub expert_episodes: usize,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    /// Version-space radius; `None` selects `4 ln(K |P| / 0.1)`.
    #[serde(default)]
    pub beta: Option<f64>,
    /// Reward-learner rate; `None` selects `sqrt(8 ln|R| / K)`.
    #[serde(default)]
    pub learning_rate: Option<f64>,
    #[serde(default = "default_eval_episodes")]
    pub eval_episodes: usize,
    /// Q-learning episode budget for the online-IL baseline.
    #[serde(default = "default_ql_episodes")]
    pub ql_episodes: usize,
    #[serde(default = "default_env")]
    pub env: LearnerEnv,
    /// Hard-instance sign dimensions and draw count.
    #[serde(default = "default_dim")]
    pub d_r: usize,
    #[serde(default = "default_dim")]
    pub d_p: usize,
    #[serde(default = "default_draws")]
    pub draws: usize,
    #[serde(default = "default_out")]
    pub out_dir: PathBuf,
    /// Worker threads; 0 keeps the library default.
    #[serde(default)]
    pub threads: usize,
}

fn default_n_values() -> Vec<usize> {
    vec![1, 2, 3, 4]
}
fn default_p_values() -> Vec<f64> {
    vec![0.45, 0.55, 0.65, 0.75]
}
fn default_p() -> f64 {
    0.65
}
fn default_rounds() -> usize {
    2000
}
fn default_expert_episodes() -> usize {
    20
}
fn default_seeds() -> Vec<u64> {
    vec![0, 1, 2, 3, 4]
}
fn default_eval_episodes() -> usize {
    10
}
fn default_ql_episodes() -> usize {
    100_000
}
fn default_env() -> LearnerEnv {
    LearnerEnv::Small
}
fn default_dim() -> usize {
    3
}
fn default_draws() -> usize {
    100
}
fn default_out() -> PathBuf {
    PathBuf::from("results")
}

impl ExperimentConfig {
    pub fn standard(kind: ExperimentKind) -> Self {
        Self {
            kind,
            n_values: default_n_values(),
            p_values: default_p_values(),
            p: default_p(),
            rounds: default_rounds(),
            expert_episodes: default_expert_episodes(),
            seeds: default_seeds(),
            beta: None,
            learning_rate: None,
            eval_episodes: default_eval_episodes(),
            ql_episodes: default_ql_episodes(),
            env: default_env(),
            d_r: default_dim(),
            d_p: default_dim(),
            draws: default_draws(),
            out_dir: default_out(),
            threads: 0,
        }
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let config: Self = serde_json::from_str(&text)?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if self.seeds.is_empty() {
            return Err(Error::Config("seed list must be nonempty".into()));
        }
        if self.rounds == 0 || self.eval_episodes == 0 || self.expert_episodes == 0 {
            return Err(Error::Config("episode and round counts must be positive".into()));
        }
        if self.n_values.iter().any(|&n| n == 0 || n > 9) {
            return Err(Error::Config("n values must lie in 1..=9".into()));
        }
        if self.p_values.iter().chain(std::iter::once(&self.p)).any(|&p| !(p > 0.0 && p <= 1.0)) {
            return Err(Error::Config("success probabilities must lie in (0, 1]".into()));
        }
        if let Some(b) = self.beta {
            if b < 0.0 {
                return Err(Error::Config("beta must be nonnegative".into()));
            }
        }
        if self.draws == 0 {
            return Err(Error::Config("draw count must be positive".into()));
        }
        Ok(())
    }
}
