use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use driver_select::experiment::{
    random_targets, run_correlation, run_headtohead, ExperimentConfig, Format, GridFloor, Manifest,
};
use driver_select::generators::{gen_graph, Family};
use driver_select::gramian::Horizon;
use driver_select::graph::{read_edge_list, write_edge_list};
use driver_select::selectors::flp::check_ilp_size;
use driver_select::selectors::{select, FlpEngine, Method, SelectionProblem};
use driver_select::{Error, Graph, NodeSet, Result};

#[derive(Parser)]
#[command(name = "driver-select", version, about = "Driver node selection for linear network dynamics")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate a random graph as an edge list.
    Generate {
        #[command(flatten)]
        graph: GraphArgs,
        /// Output file; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Select drivers for one problem and print the result as JSON.
    Select(SelectArgs),
    /// Correlate FLP cost with Gramian costs over hill-climbed sets.
    Correlate(ExperimentArgs),
    /// Compare methods head to head over many realizations.
    Compare(ExperimentArgs),
    /// Count nonzeros of the facility-location constraint matrix.
    CheckIlpSize {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        p: usize,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum FamilyArg {
    #[value(alias = "er")]
    ErdosRenyi,
    #[value(alias = "regular")]
    KRegular,
    #[value(alias = "ws")]
    WattsStrogatz,
    #[value(alias = "powerlaw")]
    PowerLaw,
}

#[derive(Args, Clone)]
struct GraphArgs {
    #[arg(long, value_enum, default_value = "erdos-renyi")]
    family: FamilyArg,
    #[arg(long)]
    n: usize,
    /// Average degree; the exact degree for k-regular and Watts-Strogatz.
    #[arg(long, default_value_t = 6.0)]
    kav: f64,
    /// Watts-Strogatz rewiring probability.
    #[arg(long, default_value_t = 0.1)]
    rewire: f64,
    /// Power-law degree exponent.
    #[arg(long, default_value_t = 2.5)]
    exponent: f64,
    #[arg(long)]
    undirected: bool,
    #[arg(long, default_value_t = 1.0)]
    gamma: f64,
    /// Loop weight; defaults to gamma * (max degree + 1).
    #[arg(long)]
    nu: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

impl GraphArgs {
    fn family(&self) -> Result<Family> {
        let whole = |what: &str| -> Result<usize> {
            if self.kav >= 0.0 && self.kav.fract() == 0.0 {
                Ok(self.kav as usize)
            } else {
                Err(Error::InvalidParameter(format!("{what} needs an integer --kav, got {}", self.kav)))
            }
        };
        Ok(match self.family {
            FamilyArg::ErdosRenyi => Family::ErdosRenyi { k_av: self.kav },
            FamilyArg::KRegular => Family::KRegular { k: whole("k-regular")? },
            FamilyArg::WattsStrogatz => Family::WattsStrogatz {
                k_av: whole("watts-strogatz")?,
                rewire: self.rewire,
            },
            FamilyArg::PowerLaw => Family::PowerLaw {
                exponent: self.exponent,
                k_av: self.kav,
            },
        })
    }

    fn graph(&self) -> Result<Graph> {
        gen_graph(&self.family()?, self.n, !self.undirected, self.seed, self.gamma, self.nu)
    }
}

#[derive(Args)]
struct SelectArgs {
    /// Edge-list file; a generated graph when omitted.
    #[arg(long, conflicts_with_all = ["family", "kav", "rewire", "exponent", "undirected"])]
    graph: Option<PathBuf>,
    #[arg(long, value_enum)]
    family: Option<FamilyArg>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    kav: Option<f64>,
    #[arg(long)]
    rewire: Option<f64>,
    #[arg(long)]
    exponent: Option<f64>,
    #[arg(long)]
    undirected: bool,
    /// Overrides the graph's weights.
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    nu: Option<f64>,
    /// Comma-separated target nodes; `--p` random targets when omitted.
    #[arg(long, value_delimiter = ',')]
    targets: Option<Vec<usize>>,
    #[arg(long)]
    p: Option<usize>,
    #[arg(long)]
    m: usize,
    #[arg(long, default_value = "1")]
    tf: String,
    #[arg(long, default_value = "greedy")]
    method: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Hill climbing: desired FLP cost.
    #[arg(long)]
    target_cost: Option<f64>,
    /// Hill climbing: tolerance around the desired cost.
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    flp_engine: Option<String>,
    /// Writes `result.json` here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ExperimentArgs {
    /// Rerun a previous experiment from its manifest; other experiment
    /// flags are ignored.
    #[arg(long)]
    manifest: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "erdos-renyi")]
    family: FamilyArg,
    #[arg(long, default_value_t = 50)]
    n: usize,
    #[arg(long, default_value_t = 20)]
    p: usize,
    #[arg(long, default_value_t = 10)]
    m: usize,
    #[arg(long, default_value_t = 6.0)]
    kav: f64,
    #[arg(long, default_value_t = 0.1)]
    rewire: f64,
    #[arg(long, default_value_t = 2.5)]
    exponent: f64,
    #[arg(long)]
    undirected: bool,
    #[arg(long, default_value_t = 1.0)]
    gamma: f64,
    #[arg(long)]
    nu: Option<f64>,
    #[arg(long, default_value = "1")]
    tf: String,
    /// Methods to run; repeat or comma-separate.
    #[arg(long, value_delimiter = ',', default_value = "flp,greedy")]
    method: Vec<String>,
    #[arg(long, default_value_t = 200)]
    realizations: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Correlation grid size.
    #[arg(long, default_value_t = 20)]
    grid_points: usize,
    /// Start the correlation grid at the local-search optimum instead of
    /// the all-candidates bound.
    #[arg(long)]
    grid_from_optimum: bool,
    #[arg(long, default_value_t = 30)]
    bins: usize,
    #[arg(long, default_value = "results")]
    out: PathBuf,
    /// Output formats; repeat or comma-separate. The manifest is always
    /// written.
    #[arg(long, value_delimiter = ',', default_value = "csv,json,svg")]
    format: Vec<String>,
}

impl ExperimentArgs {
    fn config(&self) -> Result<ExperimentConfig> {
        if let Some(path) = &self.manifest {
            return Ok(Manifest::read(path)?.config);
        }
        let graph = GraphArgs {
            family: self.family,
            n: self.n,
            kav: self.kav,
            rewire: self.rewire,
            exponent: self.exponent,
            undirected: self.undirected,
            gamma: self.gamma,
            nu: self.nu,
            seed: self.seed,
        };
        let mut c = ExperimentConfig::new(graph.family()?, self.n, self.p, self.m);
        c.directed = !self.undirected;
        c.horizon = self.tf.parse()?;
        c.gamma = self.gamma;
        c.nu = self.nu;
        c.realizations = self.realizations;
        c.seed = self.seed;
        c.methods = self.method.iter().map(|s| s.parse()).collect::<Result<_>>()?;
        c.grid.points = self.grid_points;
        if self.grid_from_optimum {
            c.grid.floor = GridFloor::LocalSearch;
        }
        c.histogram_bins = self.bins;
        c.validate()?;
        Ok(c)
    }

    fn formats(&self) -> Result<BTreeSet<Format>> {
        self.format.iter().map(|s| s.parse()).collect()
    }
}

fn run_select(a: &SelectArgs) -> Result<()> {
    let mut graph = match &a.graph {
        Some(path) => read_edge_list(path)?,
        None => GraphArgs {
            family: a.family.unwrap_or(FamilyArg::ErdosRenyi),
            n: a.n.ok_or_else(|| Error::InvalidParameter("need --graph or --n".into()))?,
            kav: a.kav.unwrap_or(6.0),
            rewire: a.rewire.unwrap_or(0.1),
            exponent: a.exponent.unwrap_or(2.5),
            undirected: a.undirected,
            gamma: a.gamma.unwrap_or(1.0),
            nu: a.nu,
            seed: a.seed,
        }
        .graph()?,
    };
    if a.graph.is_some() && (a.gamma.is_some() || a.nu.is_some()) {
        graph = graph.with_weights(a.gamma.unwrap_or(graph.gamma()), a.nu.unwrap_or(graph.nu()))?;
    }
    let n = graph.n();
    let targets = match (&a.targets, a.p) {
        (Some(t), _) => NodeSet::new(t.clone(), n)?,
        (None, Some(p)) => random_targets(n, p, a.seed)?,
        (None, None) => return Err(Error::InvalidParameter("need --targets or --p".into())),
    };
    let method: Method = a.method.parse()?;
    let horizon: Horizon = a.tf.parse()?;
    let mut problem = SelectionProblem::new(graph, targets, a.m, horizon, a.seed)?;
    problem.params.hill.target_cost = a.target_cost;
    if let Some(eps) = a.epsilon {
        problem.params.hill.epsilon = eps;
    }
    if let Some(engine) = &a.flp_engine {
        problem.params.flp.engine = match engine.as_str() {
            "auto" => FlpEngine::Auto,
            "exact" => FlpEngine::Exact,
            "local" | "local-search" => FlpEngine::LocalSearch,
            other => return Err(Error::InvalidParameter(format!("unknown FLP engine `{other}`"))),
        };
    }
    let result = select(&problem, method)?;
    let doc = serde_json::json!({
        "targets": problem.targets,
        "m": problem.m,
        "t_f": horizon,
        "gamma": problem.graph.gamma(),
        "nu": problem.graph.nu(),
        "seed": a.seed,
        "result": result,
    });
    let text = serde_json::to_string_pretty(&doc)? + "\n";
    match &a.out {
        Some(dir) => {
            fs::create_dir_all(dir)?;
            fs::write(dir.join("result.json"), text)?;
        }
        None => print!("{text}"),
    }
    Ok(())
}

fn report(dir: &Path, files: &[String]) {
    for f in files {
        println!("{}", dir.join(f).display());
    }
    println!("{}", dir.join("manifest.json").display());
}

fn run(cli: Cli) -> Result<()> {
    match cli.cmd {
        Cmd::Generate { graph, out } => {
            let g = graph.graph()?;
            match out {
                Some(path) => write_edge_list(&g, path)?,
                None => print!("{}", g.to_edge_list()),
            }
        }
        Cmd::Select(a) => run_select(&a)?,
        Cmd::Correlate(a) => {
            let formats = a.formats()?;
            let table = run_correlation(&a.config()?)?;
            let s = &table.summary;
            let show = |x: Option<f64>| x.map_or("n/a".into(), |v| format!("{v:.6}"));
            eprintln!(
                "{} rows, {} found, {} excluded realizations; pearson vol {} energy {}",
                table.rows.len(),
                s.found,
                s.failures.len(),
                show(s.pooled.vol.pearson),
                show(s.pooled.energy.pearson)
            );
            let manifest = table.emit(&a.out, &formats)?;
            report(&a.out, &manifest.files);
        }
        Cmd::Compare(a) => {
            let formats = a.formats()?;
            let table = run_headtohead(&a.config()?)?;
            for s in &table.summaries {
                let c = s.comparison;
                eprintln!(
                    "{}: {} {:.3}, {} {:.3}, ties {:.3} over {} ({} excluded)",
                    c.label(),
                    c.a,
                    s.a_win_fraction,
                    c.b,
                    s.b_win_fraction,
                    s.tie_fraction,
                    s.included,
                    s.excluded + table.failures.len()
                );
            }
            let manifest = table.emit(&a.out, &formats)?;
            report(&a.out, &manifest.files);
        }
        Cmd::CheckIlpSize { n, p } => {
            if p > n {
                return Err(Error::InvalidParameter(format!("need p <= n, got p={p} n={n}")));
            }
            let count = check_ilp_size(n, p);
            let formula = n + 3 * n * p;
            println!("{count}");
            if count != formula {
                return Err(Error::Numerical(format!("counted {count} nonzeros, n + 3np = {formula}")));
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
