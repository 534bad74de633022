use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, ValueEnum};
use pareto_forge::{Bounds, GaConfig, MultistartConfig, Tolerances};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DataSource {
    #[default]
    Builtin,
    Csv(PathBuf),
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum ModelSource {
    /// Least-squares fit of the quadratic-triple basis to the data.
    #[default]
    Refit,
    /// Published quadratic-triple coefficients.
    Eq23,
    /// Published linear-interaction coefficients.
    Eq21,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum Method {
    GlobalCriterion,
    Lexicographic,
    WeightedSum,
    EpsilonConstraint,
    GeneticAlgorithm,
    #[default]
    All,
}

impl Method {
    pub const ROUTINES: [Method; 5] = [
        Method::GlobalCriterion,
        Method::Lexicographic,
        Method::WeightedSum,
        Method::EpsilonConstraint,
        Method::GeneticAlgorithm,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::GlobalCriterion => "global_criterion",
            Method::Lexicographic => "lexicographic",
            Method::WeightedSum => "weighted_sum",
            Method::EpsilonConstraint => "epsilon_constraint",
            Method::GeneticAlgorithm => "genetic_algorithm",
            Method::All => "all",
        }
    }

    pub fn selected(self) -> Vec<Method> {
        match self {
            Method::All => Self::ROUTINES.to_vec(),
            m => vec![m],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MethodBlock {
    pub method: Method,
    pub p_values: Vec<u32>,
    pub weight_steps: usize,
    pub epsilon_points: usize,
    /// Objective optimized by the ε-constraint sweep.
    pub primary: String,
    pub order: Vec<String>,
    /// Relative tolerance used when merging fronts.
    pub merge_eps: f64,
}

impl Default for MethodBlock {
    fn default() -> Self {
        Self {
            method: Method::All,
            p_values: std::iter::once(1).chain((1..=10).map(|k| 2 * k)).collect(),
            weight_steps: 11,
            epsilon_points: 11,
            primary: "mrr".into(),
            order: vec!["mrr".into(), "ra".into()],
            merge_eps: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverBlock {
    pub starts: usize,
    pub seed: u64,
    pub kkt_tol: f64,
    pub feas_tol: f64,
    pub max_outer: usize,
    pub max_inner: usize,
}

impl Default for SolverBlock {
    fn default() -> Self {
        let ms = MultistartConfig::default();
        Self {
            starts: ms.starts,
            seed: ms.seed,
            kkt_tol: ms.tolerances.kkt_tol,
            feas_tol: ms.tolerances.feas_tol,
            max_outer: ms.tolerances.max_outer,
            max_inner: ms.tolerances.max_inner,
        }
    }
}

impl SolverBlock {
    pub fn multistart(&self) -> MultistartConfig {
        MultistartConfig {
            starts: self.starts,
            seed: self.seed,
            tolerances: Tolerances {
                kkt_tol: self.kkt_tol,
                feas_tol: self.feas_tol,
                max_outer: self.max_outer,
                max_inner: self.max_inner,
            },
        }
    }
}

fn default_bounds() -> Bounds {
    Bounds::case_study()
}

fn default_out() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub data: DataSource,
    #[serde(default)]
    pub models: ModelSource,
    #[serde(default = "default_bounds")]
    pub bounds: Bounds,
    #[serde(default)]
    pub method: MethodBlock,
    #[serde(default)]
    pub solver: SolverBlock,
    #[serde(default)]
    pub ga: GaConfig,
    #[serde(default = "default_out")]
    pub out: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            data: DataSource::Builtin,
            models: ModelSource::Refit,
            bounds: default_bounds(),
            method: MethodBlock::default(),
            solver: SolverBlock::default(),
            ga: GaConfig::default(),
            out: default_out(),
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
    }

    pub fn validate(&self) -> Result<()> {
        let m = &self.method;
        if m.p_values.is_empty() || m.p_values.contains(&0) {
            bail!("p values must be positive integers");
        }
        if m.weight_steps < 2 {
            bail!("weight steps must be at least 2");
        }
        if m.epsilon_points < 2 {
            bail!("epsilon points must be at least 2");
        }
        if self.solver.starts == 0 {
            bail!("at least one solver start is required");
        }
        if !(m.merge_eps >= 0.0) {
            bail!("merge tolerance must be non-negative");
        }
        self.ga.validate()?;
        Ok(())
    }
}

/// Options shared by every subcommand. Flags override the config file.
#[derive(Debug, Clone, Default, Args)]
pub struct Overrides {
    /// JSON run configuration.
    #[arg(long, value_name = "JSON")]
    pub config: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub method: Option<Method>,
    /// Global-criterion exponents, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub p: Option<Vec<u32>>,
    /// Number of weights in the weighted-sum sweep.
    #[arg(long)]
    pub steps: Option<usize>,
    #[arg(long)]
    pub epsilon_points: Option<usize>,
    /// Lexicographic preference order, e.g. `mrr,ra`.
    #[arg(long, value_delimiter = ',')]
    pub order: Option<Vec<String>>,
    /// Seed for both the multistart sampler and the genetic algorithm.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub starts: Option<usize>,
    /// Output directory, created if missing.
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Experiment CSV with header `vc,fz,t,ra,mrr`.
    #[arg(long, value_name = "CSV")]
    pub data: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub models: Option<ModelSource>,
}

impl Overrides {
    pub fn resolve(&self) -> Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        if let Some(m) = self.method {
            cfg.method.method = m;
        }
        if let Some(p) = &self.p {
            cfg.method.p_values = p.clone();
        }
        if let Some(s) = self.steps {
            cfg.method.weight_steps = s;
        }
        if let Some(n) = self.epsilon_points {
            cfg.method.epsilon_points = n;
        }
        if let Some(o) = &self.order {
            cfg.method.order = o.clone();
        }
        if let Some(s) = self.seed {
            cfg.solver.seed = s;
            cfg.ga.seed = s;
        }
        if let Some(n) = self.starts {
            cfg.solver.starts = n;
        }
        if let Some(o) = &self.out {
            cfg.out = o.clone();
        }
        if let Some(d) = &self.data {
            cfg.data = DataSource::Csv(d.clone());
        }
        if let Some(m) = self.models {
            cfg.models = m;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}
