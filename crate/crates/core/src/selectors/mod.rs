//! Driver selection: greedy Gramian volume, facility location (p-median),
//! projected gradient on expected energy, and hill climbing to a target
//! facility-location cost.

pub mod flp;
pub mod greedy;
pub mod hill;
pub mod lpgm;

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gramian::{energy_trace, log_det_output, Horizon, LinearNetwork};
use crate::graph::{Graph, NodeSet};
use crate::structure::{flp_set_cost, structure_matrices, StructureMatrices};

pub use flp::{FlpEngine, FlpInstance, FlpParams, FlpSolution};
pub use greedy::{GreedyOutcome, GreedyParams};
pub use hill::{HillOutcome, HillParams};
pub use lpgm::{EnergyModel, LpgmOutcome, LpgmParams};

/// Selection method tag.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Greedy,
    Flp,
    Lpgm,
    Hill,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::Greedy, Method::Flp, Method::Lpgm, Method::Hill];

    pub fn name(self) -> &'static str {
        match self {
            Method::Greedy => "greedy",
            Method::Flp => "flp",
            Method::Lpgm => "lpgm",
            Method::Hill => "hill",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::InvalidParameter(format!("unknown method `{s}`")))
    }
}

/// Per-method tuning knobs.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MethodParams {
    pub greedy: GreedyParams,
    pub flp: FlpParams,
    pub lpgm: LpgmParams,
    pub hill: HillParams,
}

/// One driver-selection instance.
#[derive(Clone, Debug)]
pub struct SelectionProblem {
    pub graph: Graph,
    pub targets: NodeSet,
    /// Driver budget.
    pub m: usize,
    pub horizon: Horizon,
    pub seed: u64,
    pub params: MethodParams,
}

impl SelectionProblem {
    pub fn new(graph: Graph, targets: NodeSet, m: usize, horizon: Horizon, seed: u64) -> Result<Self> {
        let p = SelectionProblem {
            graph,
            targets,
            m,
            horizon,
            seed,
            params: MethodParams::default(),
        };
        p.validate()?;
        Ok(p)
    }

    pub fn with_params(mut self, params: MethodParams) -> Self {
        self.params = params;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.graph.n();
        if self.m == 0 || self.m > n {
            return Err(Error::InvalidParameter(format!(
                "driver budget must satisfy 1 <= m <= {n}, got {}",
                self.m
            )));
        }
        if self.targets.is_empty() {
            return Err(Error::InvalidNodeSet("target set is empty".into()));
        }
        if self.targets.indices().last().is_some_and(|&k| k >= n) {
            return Err(Error::InvalidNodeSet("target out of range".into()));
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.graph.n()
    }
}

/// Factored dynamics and structural matrices shared by every method on one
/// problem.
#[derive(Clone, Debug)]
pub struct SelectionContext {
    pub net: LinearNetwork,
    pub structure: StructureMatrices,
    /// `C X_f Cᵀ`.
    pub terminal: DMatrix<f64>,
}

impl SelectionContext {
    pub fn new(problem: &SelectionProblem) -> Result<Self> {
        problem.validate()?;
        let net = LinearNetwork::from_graph(&problem.graph, problem.horizon)?;
        let structure = structure_matrices(&problem.graph, &problem.targets)?;
        let terminal = net.terminal_weight(&problem.targets);
        Ok(SelectionContext {
            net,
            structure,
            terminal,
        })
    }

    pub fn targets(&self) -> &NodeSet {
        &self.structure.targets
    }

    /// Output Gramian `C W_D Cᵀ` from one solve with `B` the driver
    /// selector.
    pub fn output_gramian(&self, drivers: &NodeSet) -> Result<DMatrix<f64>> {
        let n = self.net.n();
        let w = self.net.gramian_factor(&drivers.column_selector(n))?;
        let idx = self.targets().indices();
        Ok(w.select_rows(idx).select_columns(idx))
    }

    /// All three costs of a driver set.
    pub fn costs(&self, drivers: &NodeSet) -> Result<Costs> {
        let wbar = self.output_gramian(drivers)?;
        let ld = log_det_output(&wbar, None);
        let expected_energy = match self.net.horizon() {
            Horizon::Finite(_) => Some(energy_trace(&wbar, &self.terminal)),
            Horizon::Infinite => None,
        };
        Ok(Costs {
            vol_cost: -ld.value,
            expected_energy,
            flp_cost: flp_set_cost(&self.structure, drivers)?,
            output_rank: ld.rank,
        })
    }
}

/// Costs of a driver set under the three surrogates.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Costs {
    /// `-log det W̄`; `+inf` when `W̄` has no positive eigenvalue.
    #[serde(with = "crate::ser::ext_real")]
    pub vol_cost: f64,
    /// `Tr(W̄⁻¹ C X_f Cᵀ)`; `None` at the infinite horizon, `+inf` when
    /// `W̄` is singular.
    #[serde(with = "crate::ser::opt_ext_real")]
    pub expected_energy: Option<f64>,
    #[serde(with = "crate::ser::ext_real")]
    pub flp_cost: f64,
    /// Numerical rank of `W̄`.
    pub output_rank: usize,
}

/// Method-specific run information.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub iterations: usize,
    pub wall_time_s: f64,
    /// Greedy: iterations scored by rank before full output rank.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rank_phase_len: Option<usize>,
    /// Greedy: whether the selected set reached full output rank.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output_controllable: Option<bool>,
    /// LPGM: iteration that produced the returned support.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub best_iterate: Option<usize>,
    /// FLP: whether the exact engine proved optimality.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub optimal: Option<bool>,
    /// Hill climbing: whether a set within tolerance was found.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub found: Option<bool>,
}

/// Outcome of one selection run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SelectionResult {
    pub method: Method,
    pub drivers: NodeSet,
    pub costs: Costs,
    pub diagnostics: Diagnostics,
    /// Parameters actually used, defaults included.
    pub params: serde_json::Value,
}

/// Generator for randomized methods: stream 2 of `seed`, so a shared seed
/// does not replay the graph or target streams.
pub fn method_rng(seed: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(2);
    rng
}

/// Runs `method` on `problem`, building a fresh context.
pub fn select(problem: &SelectionProblem, method: Method) -> Result<SelectionResult> {
    let ctx = SelectionContext::new(problem)?;
    select_with(problem, &ctx, method)
}

/// Runs `method` on `problem` with a prebuilt context.
pub fn select_with(problem: &SelectionProblem, ctx: &SelectionContext, method: Method) -> Result<SelectionResult> {
    problem.validate()?;
    let start = Instant::now();
    let (drivers, mut diagnostics, params) = match method {
        Method::Greedy => {
            let gs = ctx
                .net
                .driver_contributions(&problem.targets, &NodeSet::all(problem.n()))?;
            let out = greedy::greedy_picks(&gs, problem.m, &problem.params.greedy)?;
            let diag = Diagnostics {
                iterations: out.picks.len(),
                rank_phase_len: Some(out.rank_phase_len()),
                output_controllable: Some(out.flag_cleared.is_some()),
                ..Default::default()
            };
            (out.drivers(problem.n())?, diag, serde_json::to_value(&problem.params.greedy)?)
        }
        Method::Flp => {
            let sol = flp::flp_solve(&ctx.structure, problem.m, &problem.params.flp)?;
            let diag = Diagnostics {
                iterations: sol.nodes,
                optimal: Some(sol.optimal),
                ..Default::default()
            };
            (
                NodeSet::new(sol.open.clone(), problem.n())?,
                diag,
                serde_json::to_value(&problem.params.flp)?,
            )
        }
        Method::Lpgm => {
            let model = EnergyModel::new(ctx.net.clone(), problem.targets.clone())?;
            let mut rng = method_rng(problem.seed);
            let params = problem.params.lpgm.resolved(problem.n(), problem.m);
            let out = lpgm::lpgm(&model, problem.m, &params, &mut rng)?;
            let diag = Diagnostics {
                iterations: out.energies.len(),
                best_iterate: out.best_iterate,
                ..Default::default()
            };
            (out.support, diag, serde_json::to_value(&params)?)
        }
        Method::Hill => {
            let hp = &problem.params.hill;
            let target = hp.target_cost.ok_or_else(|| {
                Error::InvalidParameter("hill climbing needs a target cost".into())
            })?;
            let mut rng = method_rng(problem.seed);
            let out = hill::hill_climb(&ctx.structure.cost, problem.m, target, hp.epsilon, hp.max_iter, &mut rng)?;
            let diag = Diagnostics {
                iterations: out.iterations,
                found: Some(out.found),
                ..Default::default()
            };
            (NodeSet::new(out.set, problem.n())?, diag, serde_json::to_value(hp)?)
        }
    };
    let costs = ctx.costs(&drivers)?;
    diagnostics.wall_time_s = start.elapsed().as_secs_f64();
    Ok(SelectionResult {
        method,
        drivers,
        costs,
        diagnostics,
        params,
    })
}
