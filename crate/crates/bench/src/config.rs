//! Campaign files.
//!
//! A campaign file is TOML with one `[[campaign]]` table per experiment:
//!
//! ```toml
//! cache_dir = "fdref-cache"    # optional, for 2D Helmholtz references
//!
//! [[campaign]]
//! name = "poisson-small"
//! problem = "poisson1d"        # see `list-problems`
//! nu = 5.0
//! hidden = 64
//! activation = "tanh"          # sigmoid | tanh | logistic | softplus
//! seeds = [1, 2, 3]
//! solvers = ["lm", "mlm"]
//!
//! # Optional overrides (defaults shown)
//! penalty_factor = 0.1         # boundary penalty = factor * training points
//! epsilon = 1e-4               # 1e-3 for 2D problems
//! max_iter = 2000              # 200 for 2D Helmholtz
//! kappa_h = 0.1
//! epsilon_h = 1e-4             # defaults to epsilon
//! strength = 0.9               # strong-coupling threshold
//! max_coarse_iter = 10
//! test_points = 100            # per axis
//! fd_resolution = 201
//! # grid_points = 11           # training points per axis, default 2 nu + 1
//! ```

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use mlm_core::ann::Activation;
use mlm_core::lm::LmConfig;
use mlm_core::mlm::MlmConfig;
use serde::{Deserialize, Serialize};

use crate::problems::ProblemId;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Solver {
    Lm,
    Mlm,
}

impl Solver {
    pub fn name(self) -> &'static str {
        match self {
            Solver::Lm => "lm",
            Solver::Mlm => "mlm",
        }
    }
}

impl std::str::FromStr for Solver {
    type Err = anyhow::Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lm" => Ok(Solver::Lm),
            "mlm" => Ok(Solver::Mlm),
            _ => bail!("unknown solver '{s}', expected lm or mlm"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Campaign {
    pub name: String,
    pub problem: String,
    pub nu: f64,
    pub hidden: usize,
    #[serde(default = "default_activation")]
    pub activation: String,
    pub seeds: Vec<u64>,
    #[serde(default = "default_solvers")]
    pub solvers: Vec<Solver>,
    #[serde(default = "default_penalty_factor")]
    pub penalty_factor: f64,
    pub epsilon: Option<f64>,
    pub max_iter: Option<usize>,
    #[serde(default = "default_kappa_h")]
    pub kappa_h: f64,
    pub epsilon_h: Option<f64>,
    #[serde(default = "default_strength")]
    pub strength: f64,
    #[serde(default = "default_max_coarse_iter")]
    pub max_coarse_iter: usize,
    #[serde(default = "default_test_points")]
    pub test_points: usize,
    #[serde(default = "default_fd_resolution")]
    pub fd_resolution: usize,
    pub grid_points: Option<usize>,
}

fn default_activation() -> String {
    "tanh".into()
}
fn default_solvers() -> Vec<Solver> {
    vec![Solver::Lm, Solver::Mlm]
}
fn default_penalty_factor() -> f64 {
    0.1
}
fn default_kappa_h() -> f64 {
    0.1
}
fn default_strength() -> f64 {
    0.9
}
fn default_max_coarse_iter() -> usize {
    10
}
fn default_test_points() -> usize {
    100
}
fn default_fd_resolution() -> usize {
    201
}

impl Campaign {
    /// A campaign with every optional field at its default.
    pub fn new(name: &str, problem: ProblemId, nu: f64, hidden: usize, seeds: Vec<u64>) -> Self {
        Self {
            name: name.into(),
            problem: problem.to_string(),
            nu,
            hidden,
            activation: default_activation(),
            seeds,
            solvers: default_solvers(),
            penalty_factor: default_penalty_factor(),
            epsilon: None,
            max_iter: None,
            kappa_h: default_kappa_h(),
            epsilon_h: None,
            strength: default_strength(),
            max_coarse_iter: default_max_coarse_iter(),
            test_points: default_test_points(),
            fd_resolution: default_fd_resolution(),
            grid_points: None,
        }
    }

    pub fn problem_id(&self) -> Result<ProblemId> {
        self.problem.parse()
    }

    pub fn activation(&self) -> Result<Activation> {
        Ok(self.activation.parse()?)
    }

    pub fn validate(&self) -> Result<()> {
        let id = self.problem_id()?;
        self.activation()?;
        if self.seeds.is_empty() {
            bail!("campaign '{}': seeds must not be empty", self.name);
        }
        if self.solvers.is_empty() {
            bail!("campaign '{}': no solver selected", self.name);
        }
        if self.hidden == 0 {
            bail!("campaign '{}': hidden must be positive", self.name);
        }
        if self.solvers.contains(&Solver::Mlm) && self.hidden < 2 {
            bail!("campaign '{}': the two-level solver needs at least two hidden nodes", self.name);
        }
        if !(0.0..=1.0).contains(&self.strength) {
            bail!("campaign '{}': strength must lie in [0, 1]", self.name);
        }
        if self.test_points == 0 {
            bail!("campaign '{}': test_points must be positive", self.name);
        }
        self.mlm_config(id).validate()?;
        Ok(())
    }

    pub fn lm_config(&self, id: ProblemId) -> LmConfig {
        LmConfig {
            epsilon: self.epsilon.unwrap_or(id.default_epsilon()),
            max_outer_iter: self.max_iter.unwrap_or(id.default_max_iter()),
            ..LmConfig::default()
        }
    }

    pub fn mlm_config(&self, id: ProblemId) -> MlmConfig {
        MlmConfig {
            lm: self.lm_config(id),
            kappa_h: self.kappa_h,
            epsilon_h: self.epsilon_h,
            max_coarse_iter: self.max_coarse_iter,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CampaignFile {
    pub cache_dir: Option<PathBuf>,
    #[serde(rename = "campaign")]
    pub campaigns: Vec<Campaign>,
}

impl CampaignFile {
    pub fn parse(text: &str) -> Result<Self> {
        let file: CampaignFile = toml::from_str(text)?;
        if file.campaigns.is_empty() {
            bail!("no [[campaign]] entries");
        }
        for c in &file.campaigns {
            c.validate()?;
        }
        Ok(file)
    }

    /// Reads a campaign file; a relative `cache_dir` is taken relative to it.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let mut file = Self::parse(&text).with_context(|| format!("parsing {}", path.display()))?;
        if let (Some(dir), Some(parent)) = (&file.cache_dir, path.parent()) {
            if dir.is_relative() {
                file.cache_dir = Some(parent.join(dir));
            }
        }
        Ok(file)
    }
}
