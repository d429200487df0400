//! Correlation of the FLP cost with the Gramian-based costs over sets found
//! by hill climbing to a grid of desired FLP values.

use std::collections::BTreeSet;
use std::fs;
use std::path::Path;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::plot;
use super::stats::Fit;
use super::{cell, GridFloor, ensure_dir, join_nodes, ExperimentConfig, Failure, Format, Manifest, RunInfo};
use crate::error::{Error, Result};
use crate::selectors::flp::{local_search, FlpInstance};
use crate::selectors::hill::hill_climb;
use crate::selectors::{SelectionContext, SelectionProblem};
use crate::ser::ext_real::parse_ext;
use crate::structure::CostMatrix;
use crate::NodeSet;

/// RNG stream for the random-set median and hill climbing.
const HILL_STREAM: u64 = 3;

/// CSV header of [`CorrelationRow`].
pub const CSV_HEADER: [&str; 11] = [
    "realization",
    "seed",
    "grid_index",
    "target_flp",
    "epsilon",
    "found",
    "iterations",
    "flp_cost",
    "vol_cost",
    "expected_energy",
    "drivers",
];

/// One hill-climbing outcome and the costs of the set it returned.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorrelationRow {
    pub realization: usize,
    pub seed: u64,
    pub grid_index: usize,
    pub target_flp: f64,
    pub epsilon: f64,
    pub found: bool,
    pub iterations: usize,
    #[serde(with = "crate::ser::ext_real")]
    pub flp_cost: f64,
    #[serde(with = "crate::ser::ext_real")]
    pub vol_cost: f64,
    #[serde(with = "crate::ser::opt_ext_real")]
    pub expected_energy: Option<f64>,
    pub drivers: Vec<usize>,
}

impl CorrelationRow {
    fn record(&self) -> Vec<String> {
        vec![
            self.realization.to_string(),
            self.seed.to_string(),
            self.grid_index.to_string(),
            cell(Some(self.target_flp)),
            cell(Some(self.epsilon)),
            self.found.to_string(),
            self.iterations.to_string(),
            cell(Some(self.flp_cost)),
            cell(Some(self.vol_cost)),
            cell(self.expected_energy),
            join_nodes(&self.drivers),
        ]
    }

    fn parse(rec: &csv::StringRecord) -> Result<Self> {
        let bad = |what: &str| Error::InvalidParameter(format!("bad {what} in correlation CSV"));
        let f = |i: usize, what: &str| parse_ext(&rec[i]).ok_or_else(|| bad(what));
        let u = |i: usize, what: &str| rec[i].parse::<u64>().map_err(|_| bad(what));
        Ok(CorrelationRow {
            realization: u(0, "realization")? as usize,
            seed: u(1, "seed")?,
            grid_index: u(2, "grid_index")? as usize,
            target_flp: f(3, "target_flp")?,
            epsilon: f(4, "epsilon")?,
            found: rec[5].parse().map_err(|_| bad("found"))?,
            iterations: u(6, "iterations")? as usize,
            flp_cost: f(7, "flp_cost")?,
            vol_cost: f(8, "vol_cost")?,
            expected_energy: if rec[9].is_empty() {
                None
            } else {
                Some(f(9, "expected_energy")?)
            },
            drivers: rec[10]
                .split_whitespace()
                .map(|s| s.parse().map_err(|_| bad("drivers")))
                .collect::<Result<_>>()?,
        })
    }
}

/// Fits of one realization or of the pooled table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitPair {
    /// FLP cost against volume cost.
    pub vol: Fit,
    /// FLP cost against expected energy.
    pub energy: Fit,
}

impl FitPair {
    fn of<'a>(rows: impl Iterator<Item = &'a CorrelationRow> + Clone) -> Self {
        let pairs = |g: &dyn Fn(&CorrelationRow) -> Option<f64>| -> (Vec<f64>, Vec<f64>) {
            rows.clone()
                .filter(|r| r.found && r.flp_cost.is_finite())
                .filter_map(|r| g(r).filter(|v| v.is_finite()).map(|v| (r.flp_cost, v)))
                .unzip()
        };
        let (xv, yv) = pairs(&|r| Some(r.vol_cost));
        let (xe, ye) = pairs(&|r| r.expected_energy);
        FitPair {
            vol: Fit::of(&xv, &yv),
            energy: Fit::of(&xe, &ye),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorrelationSummary {
    pub pooled: FitPair,
    pub per_realization: Vec<(usize, FitPair)>,
    pub found: usize,
    pub not_found: usize,
    pub failures: Vec<Failure>,
}

/// Output of [`run_correlation`].
#[derive(Clone, Debug, PartialEq)]
pub struct CorrelationTable {
    pub config: ExperimentConfig,
    pub runs: Vec<RunInfo>,
    pub rows: Vec<CorrelationRow>,
    pub summary: CorrelationSummary,
}

/// Desired-cost grid and tolerance for one cost matrix.
pub fn cost_grid(cost: &CostMatrix, config: &ExperimentConfig, rng: &mut ChaCha8Rng) -> Result<(Vec<f64>, f64)> {
    if let Some(values) = &config.grid.values {
        if values.is_empty() {
            return Err(Error::InvalidParameter("cost grid is empty".into()));
        }
        return Ok((values.clone(), config.params.hill.epsilon));
    }
    let points = config.grid.points;
    if points == 0 {
        return Err(Error::InvalidParameter("cost grid is empty".into()));
    }
    let lower = match config.grid.floor {
        GridFloor::AllCandidates => cost.lower_bound(),
        GridFloor::LocalSearch => local_search(&FlpInstance::new(cost.clone(), config.m)?).objective,
    };
    let mut samples: Vec<f64> = (0..config.grid.random_sets.max(1))
        .map(|_| cost.set_cost(&sample(rng, config.n, config.m).into_vec()))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .filter(|c| c.is_finite())
        .collect();
    if samples.is_empty() || !lower.is_finite() {
        return Err(Error::InvalidParameter(
            "no random driver set serves every target".into(),
        ));
    }
    samples.sort_by(f64::total_cmp);
    let upper = samples[samples.len() / 2];
    if points == 1 {
        return Ok((vec![lower], config.params.hill.epsilon));
    }
    let spacing = (upper - lower) / (points - 1) as f64;
    let grid = (0..points).map(|i| lower + spacing * i as f64).collect();
    let eps = if spacing > 0.0 {
        spacing * config.grid.epsilon_fraction
    } else {
        config.params.hill.epsilon
    };
    Ok((grid, eps))
}

fn run_one(config: &ExperimentConfig, r: usize) -> Result<(RunInfo, Vec<CorrelationRow>)> {
    let real = config.realization(r)?;
    let info = RunInfo::of(&real, config.horizon);
    let problem = SelectionProblem::new(real.graph, real.targets, config.m, config.horizon, real.seed)?;
    let ctx = SelectionContext::new(&problem)?;
    let mut rng = ChaCha8Rng::seed_from_u64(real.seed);
    rng.set_stream(HILL_STREAM);
    let cost = &ctx.structure.cost;
    let (grid, eps) = cost_grid(cost, config, &mut rng)?;
    let hp = &config.params.hill;
    let mut rows = Vec::with_capacity(grid.len());
    for (i, &f) in grid.iter().enumerate() {
        let out = hill_climb(cost, config.m, f, eps, hp.max_iter, &mut rng)?;
        let costs = ctx.costs(&NodeSet::new(out.set.clone(), config.n)?)?;
        rows.push(CorrelationRow {
            realization: r,
            seed: real.seed,
            grid_index: i,
            target_flp: f,
            epsilon: eps,
            found: out.found,
            iterations: out.iterations,
            flp_cost: costs.flp_cost,
            vol_cost: costs.vol_cost,
            expected_energy: costs.expected_energy,
            drivers: out.set,
        });
    }
    Ok((info, rows))
}

/// Hill-climbs every realization to each grid value and correlates the
/// FLP cost of the sets found with their volume cost and expected energy.
/// Realizations that fail are excluded and listed.
pub fn run_correlation(config: &ExperimentConfig) -> Result<CorrelationTable> {
    config.validate()?;
    let results: Vec<_> = (0..config.realizations)
        .into_par_iter()
        .map(|r| (r, run_one(config, r)))
        .collect();
    let mut runs = Vec::new();
    let mut rows = Vec::new();
    let mut failures = Vec::new();
    let mut per_realization = Vec::new();
    for (r, res) in results {
        match res {
            Ok((info, mut rs)) => {
                per_realization.push((r, FitPair::of(rs.iter())));
                runs.push(info);
                rows.append(&mut rs);
            }
            Err(e) => {
                log::warn!("realization {r} excluded: {e}");
                failures.push(Failure {
                    realization: r,
                    seed: config.realization_seed(r),
                    reason: e.to_string(),
                });
            }
        }
    }
    let found = rows.iter().filter(|r| r.found).count();
    let summary = CorrelationSummary {
        pooled: FitPair::of(rows.iter()),
        per_realization,
        found,
        not_found: rows.len() - found,
        failures,
    };
    Ok(CorrelationTable {
        config: config.clone(),
        runs,
        rows,
        summary,
    })
}

impl CorrelationTable {
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(CSV_HEADER)?;
        for row in &self.rows {
            w.write_record(row.record())?;
        }
        w.flush()?;
        Ok(())
    }

    /// Rows of a CSV written by [`CorrelationTable::write_csv`].
    pub fn read_csv(path: &Path) -> Result<Vec<CorrelationRow>> {
        let mut r = csv::Reader::from_path(path)?;
        let header = r.headers()?.clone();
        if header.iter().ne(CSV_HEADER) {
            return Err(Error::InvalidParameter("unexpected correlation CSV header".into()));
        }
        r.records().map(|rec| CorrelationRow::parse(&rec?)).collect()
    }

    /// Writes the manifest and the requested formats into `dir`.
    pub fn emit(&self, dir: &Path, formats: &BTreeSet<Format>) -> Result<Manifest> {
        ensure_dir(dir)?;
        let mut manifest = Manifest::new("correlation", &self.config, self.runs.clone());
        if formats.contains(&Format::Csv) {
            self.write_csv(&dir.join("correlation.csv"))?;
            manifest.files.push("correlation.csv".into());
        }
        if formats.contains(&Format::Json) {
            let doc = serde_json::json!({
                "schema_version": super::SCHEMA_VERSION,
                "rows": self.rows,
                "summary": self.summary,
            });
            fs::write(dir.join("correlation.json"), serde_json::to_string_pretty(&doc)? + "\n")?;
            manifest.files.push("correlation.json".into());
        }
        if formats.contains(&Format::Svg) {
            let found: Vec<&CorrelationRow> = self.rows.iter().filter(|r| r.found).collect();
            let line = |f: &Fit| f.slope.zip(f.intercept);
            let vol: Vec<(f64, f64)> = found.iter().map(|r| (r.flp_cost, r.vol_cost)).collect();
            let svg = plot::scatter(&vol, line(&self.summary.pooled.vol), "FLP cost vs volume cost", "FLP(D)", "-log det W");
            fs::write(dir.join("correlation_vol.svg"), svg)?;
            let energy: Vec<(f64, f64)> = found
                .iter()
                .filter_map(|r| r.expected_energy.map(|e| (r.flp_cost, e)))
                .collect();
            let svg = plot::scatter(&energy, line(&self.summary.pooled.energy), "FLP cost vs expected energy", "FLP(D)", "E(D)");
            fs::write(dir.join("correlation_energy.svg"), svg)?;
            manifest.files.extend(["correlation_vol.svg".into(), "correlation_energy.svg".into()]);
        }
        manifest.write(dir)?;
        Ok(manifest)
    }
}
