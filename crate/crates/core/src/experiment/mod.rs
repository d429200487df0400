//! Batch experiments over random graph ensembles: FLP-cost correlation
//! sweeps and head-to-head method comparisons, with CSV, JSON, and SVG
//! output.

pub mod correlation;
pub mod headtohead;
pub mod plot;
pub mod stats;

use std::fs;
use std::path::Path;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::generators::{gen_graph, Family};
use crate::gramian::Horizon;
use crate::graph::{Graph, NodeSet};
use crate::selectors::{Method, MethodParams};

pub use correlation::{cost_grid, run_correlation, CorrelationRow, CorrelationSummary, CorrelationTable};
pub use headtohead::{run_headtohead, Comparison, ComparisonRecord, HeadToHeadTable, Metric};

/// Version of the record and manifest layout.
pub const SCHEMA_VERSION: u32 = 1;

/// RNG stream used for target sampling, distinct from graph generation.
const TARGET_STREAM: u64 = 1;

/// Output formats written by the emitters. The JSON manifest is always
/// written.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
    Svg,
}

impl std::str::FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            "svg" => Ok(Format::Svg),
            other => Err(Error::InvalidParameter(format!("unknown format `{other}`"))),
        }
    }
}

/// Low end of the correlation sweep.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GridFloor {
    /// FLP cost with every candidate open. Usually below anything an
    /// `m`-set reaches, so the low grid points end as not-found.
    #[default]
    AllCandidates,
    /// FLP cost of the local-search `m`-set.
    LocalSearch,
}

/// Hill-climbing grid of desired FLP costs for correlation runs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridConfig {
    /// Grid size when sweeping from the floor to the median random set.
    pub points: usize,
    #[serde(default)]
    pub floor: GridFloor,
    /// Random `m`-sets sampled for the median.
    pub random_sets: usize,
    /// Tolerance as a fraction of the grid spacing.
    pub epsilon_fraction: f64,
    /// Explicit desired costs; replaces the sweep when set. The tolerance
    /// is then the hill-climbing epsilon.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub values: Option<Vec<f64>>,
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig {
            points: 20,
            floor: GridFloor::AllCandidates,
            random_sets: 101,
            epsilon_fraction: 0.25,
            values: None,
        }
    }
}

/// Full description of an experiment; reproduces every output when rerun.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub family: Family,
    pub n: usize,
    pub p: usize,
    pub m: usize,
    pub directed: bool,
    pub horizon: Horizon,
    pub gamma: f64,
    /// Loop weight; `None` uses `gamma · (k_max + 1)` per graph.
    pub nu: Option<f64>,
    pub realizations: usize,
    pub seed: u64,
    pub methods: Vec<Method>,
    pub grid: GridConfig,
    pub params: MethodParams,
    pub histogram_bins: usize,
    /// Head-to-head pairs; empty means FLP against every other listed
    /// method.
    #[serde(default)]
    pub comparisons: Vec<Comparison>,
}

impl ExperimentConfig {
    /// Defaults: directed graphs, `t_f = 1`, `γ = 1`, Gershgorin `ν`, 200
    /// realizations, FLP against greedy.
    pub fn new(family: Family, n: usize, p: usize, m: usize) -> Self {
        ExperimentConfig {
            family,
            n,
            p,
            m,
            directed: true,
            horizon: Horizon::Finite(1.0),
            gamma: 1.0,
            nu: None,
            realizations: 200,
            seed: 0,
            methods: vec![Method::Flp, Method::Greedy],
            grid: GridConfig::default(),
            params: MethodParams::default(),
            histogram_bins: 30,
            comparisons: Vec::new(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.realizations == 0 {
            return Err(Error::InvalidParameter("need at least one realization".into()));
        }
        if self.p == 0 || self.p > self.n {
            return Err(Error::InvalidParameter(format!(
                "need 1 <= p <= n, got p={} n={}",
                self.p, self.n
            )));
        }
        if self.m == 0 || self.m > self.n {
            return Err(Error::InvalidParameter(format!(
                "need 1 <= m <= n, got m={} n={}",
                self.m, self.n
            )));
        }
        if !(self.gamma > 0.0) || self.nu.is_some_and(|nu| !(nu > 0.0)) {
            return Err(Error::InvalidParameter("gamma and nu must be positive".into()));
        }
        if self.histogram_bins == 0 {
            return Err(Error::InvalidParameter("need at least one histogram bin".into()));
        }
        Ok(())
    }

    /// Seed of realization `r`.
    pub fn realization_seed(&self, r: usize) -> u64 {
        self.seed.wrapping_add(r as u64)
    }

    /// Graph and target set of realization `r`.
    pub fn realization(&self, r: usize) -> Result<Realization> {
        let seed = self.realization_seed(r);
        let graph = gen_graph(&self.family, self.n, self.directed, seed, self.gamma, self.nu)?;
        let targets = random_targets(self.n, self.p, seed)?;
        Ok(Realization {
            index: r,
            seed,
            graph,
            targets,
        })
    }
}

/// Uniform random `p`-subset of `0..n` drawn from the target stream of
/// `seed`.
pub fn random_targets(n: usize, p: usize, seed: u64) -> Result<NodeSet> {
    if p > n {
        return Err(Error::InvalidParameter(format!("need p <= n, got p={p} n={n}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(TARGET_STREAM);
    NodeSet::new(sample(&mut rng, n, p).into_vec(), n)
}

/// One sampled instance of an experiment.
#[derive(Clone, Debug)]
pub struct Realization {
    pub index: usize,
    pub seed: u64,
    pub graph: Graph,
    pub targets: NodeSet,
}

/// Weights and horizon actually used by one realization.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunInfo {
    pub realization: usize,
    pub seed: u64,
    pub gamma: f64,
    pub nu: f64,
    pub t_f: Horizon,
}

impl RunInfo {
    pub fn of(real: &Realization, horizon: Horizon) -> Self {
        RunInfo {
            realization: real.index,
            seed: real.seed,
            gamma: real.graph.gamma(),
            nu: real.graph.nu(),
            t_f: horizon,
        }
    }
}

/// A realization excluded from the statistics.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Failure {
    pub realization: usize,
    pub seed: u64,
    pub reason: String,
}

/// JSON run manifest.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub schema_version: u32,
    pub kind: String,
    pub library_version: String,
    pub config: ExperimentConfig,
    /// Defaults applied where the config leaves a choice open.
    pub defaults: serde_json::Value,
    pub runs: Vec<RunInfo>,
    pub files: Vec<String>,
}

impl Manifest {
    pub fn new(kind: &str, config: &ExperimentConfig, runs: Vec<RunInfo>) -> Self {
        let lpgm = config.params.lpgm.resolved(config.n, config.m);
        let defaults = serde_json::json!({
            "nu_rule": "gamma * (max_degree + 1) when nu is unset",
            "lpgm": lpgm,
            "flp": config.params.flp,
            "hill": config.params.hill,
            "greedy": config.params.greedy,
            "target_sampling": "uniform p-subset from stream 1 of the realization seed",
            "realization_seed": "base seed + realization index",
        });
        Manifest {
            schema_version: SCHEMA_VERSION,
            kind: kind.to_string(),
            library_version: env!("CARGO_PKG_VERSION").to_string(),
            config: config.clone(),
            defaults,
            runs,
            files: Vec::new(),
        }
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        fs::write(dir.join("manifest.json"), serde_json::to_string_pretty(self)? + "\n")?;
        Ok(())
    }
}

pub(crate) fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    Ok(())
}

/// Formats a cost for CSV cells: shortest round-trip decimal, `inf`, or
/// empty for `None`.
pub(crate) fn cell(x: Option<f64>) -> String {
    match x {
        Some(v) => crate::ser::ext_real::format_ext(v),
        None => String::new(),
    }
}

pub(crate) fn join_nodes(nodes: &[usize]) -> String {
    nodes.iter().map(|j| j.to_string()).collect::<Vec<_>>().join(" ")
}
