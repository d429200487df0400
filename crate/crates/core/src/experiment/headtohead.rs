//! Head-to-head comparison of selection methods over many realizations.
//!
//! For a comparison `(a, b, metric)` the statistic is
//! `D = metric(a's set) - metric(b's set)`; `D < 0` means `a` found the
//! cheaper set.

use std::collections::BTreeSet;
use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::plot;
use super::stats::Histogram;
use super::{cell, ensure_dir, join_nodes, ExperimentConfig, Failure, Format, Manifest, RunInfo};
use crate::error::{Error, Result};
use crate::selectors::{select_with, Costs, Method, SelectionContext, SelectionProblem, SelectionResult};

/// Cost used to compare two driver sets.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    Vol,
    Energy,
    Flp,
}

impl Metric {
    pub fn name(self) -> &'static str {
        match self {
            Metric::Vol => "vol",
            Metric::Energy => "energy",
            Metric::Flp => "flp",
        }
    }

    /// The cost a method optimizes.
    pub fn natural(method: Method) -> Metric {
        match method {
            Method::Greedy => Metric::Vol,
            Method::Lpgm => Metric::Energy,
            Method::Flp | Method::Hill => Metric::Flp,
        }
    }

    pub fn of(self, c: &Costs) -> Option<f64> {
        match self {
            Metric::Vol => Some(c.vol_cost),
            Metric::Energy => c.expected_energy,
            Metric::Flp => Some(c.flp_cost),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Comparison {
    pub a: Method,
    pub b: Method,
    pub metric: Metric,
}

impl Comparison {
    /// Column label, e.g. `d_flp_greedy_vol`.
    pub fn label(&self) -> String {
        format!("d_{}_{}_{}", self.a, self.b, self.metric.name())
    }
}

/// FLP against every other listed method on that method's own cost; FLP
/// against itself when it is the only method.
pub fn default_comparisons(methods: &[Method]) -> Vec<Comparison> {
    let mut out: Vec<Comparison> = methods
        .iter()
        .filter(|&&m| m != Method::Flp)
        .map(|&b| Comparison {
            a: Method::Flp,
            b,
            metric: Metric::natural(b),
        })
        .collect();
    out.dedup();
    if out.is_empty() {
        out.push(Comparison {
            a: Method::Flp,
            b: Method::Flp,
            metric: Metric::Vol,
        });
    }
    out
}

/// Per-method summary inside a record.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MethodSummary {
    pub method: Method,
    pub drivers: Vec<usize>,
    pub costs: Costs,
    pub iterations: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub optimal: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output_controllable: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub best_iterate: Option<usize>,
}

impl From<&SelectionResult> for MethodSummary {
    fn from(r: &SelectionResult) -> Self {
        MethodSummary {
            method: r.method,
            drivers: r.drivers.indices().to_vec(),
            costs: r.costs,
            iterations: r.diagnostics.iterations,
            optimal: r.diagnostics.optimal,
            output_controllable: r.diagnostics.output_controllable,
            best_iterate: r.diagnostics.best_iterate,
        }
    }
}

/// One realization's results and difference statistics.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRecord {
    pub realization: usize,
    pub seed: u64,
    pub nu: f64,
    pub results: Vec<MethodSummary>,
    /// `D` per comparison, aligned with the table's comparisons; `None`
    /// when the metric is unavailable or not finite.
    pub diffs: Vec<Option<f64>>,
}

impl ComparisonRecord {
    pub fn result(&self, m: Method) -> Option<&MethodSummary> {
        self.results.iter().find(|r| r.method == m)
    }
}

/// Sign counts and histogram of one comparison.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComparisonSummary {
    pub comparison: Comparison,
    /// Realizations with a finite `D`.
    pub included: usize,
    /// Realizations whose `D` was unavailable or not finite.
    pub excluded: usize,
    /// `D < 0`: method `a` cheaper.
    pub a_wins: usize,
    /// `D > 0`: method `b` cheaper.
    pub b_wins: usize,
    /// `|D|` within `1e-9` relative of the costs.
    pub ties: usize,
    pub a_win_fraction: f64,
    pub b_win_fraction: f64,
    pub tie_fraction: f64,
    pub histogram: Histogram,
}

/// Output of [`run_headtohead`].
#[derive(Clone, Debug, PartialEq)]
pub struct HeadToHeadTable {
    pub config: ExperimentConfig,
    pub comparisons: Vec<Comparison>,
    pub methods: Vec<Method>,
    pub runs: Vec<RunInfo>,
    pub records: Vec<ComparisonRecord>,
    pub failures: Vec<Failure>,
    pub summaries: Vec<ComparisonSummary>,
}

const TIE_REL: f64 = 1e-9;

fn run_one(config: &ExperimentConfig, methods: &[Method], comps: &[Comparison], r: usize) -> Result<(RunInfo, ComparisonRecord)> {
    let real = config.realization(r)?;
    let info = RunInfo::of(&real, config.horizon);
    let nu = info.nu;
    let problem = SelectionProblem::new(real.graph, real.targets, config.m, config.horizon, real.seed)?
        .with_params(config.params.clone());
    let ctx = SelectionContext::new(&problem)?;
    let results = methods
        .iter()
        .map(|&m| select_with(&problem, &ctx, m).map(|res| MethodSummary::from(&res)))
        .collect::<Result<Vec<_>>>()?;
    let cost = |m: Method, metric: Metric| {
        results
            .iter()
            .find(|s| s.method == m)
            .and_then(|s| metric.of(&s.costs))
    };
    let diffs = comps
        .iter()
        .map(|c| match (cost(c.a, c.metric), cost(c.b, c.metric)) {
            (Some(x), Some(y)) if x.is_finite() && y.is_finite() => Some(x - y),
            _ => None,
        })
        .collect();
    Ok((
        info,
        ComparisonRecord {
            realization: r,
            seed: real.seed,
            nu,
            results,
            diffs,
        },
    ))
}

fn summarize(comp: Comparison, idx: usize, records: &[ComparisonRecord], bins: usize) -> ComparisonSummary {
    let mut values = Vec::new();
    let (mut a_wins, mut b_wins, mut ties) = (0, 0, 0);
    for rec in records {
        let Some(d) = rec.diffs[idx] else { continue };
        values.push(d);
        let scale = [comp.a, comp.b]
            .iter()
            .filter_map(|&m| rec.result(m).and_then(|s| comp.metric.of(&s.costs)))
            .fold(1.0f64, |acc, c| acc.max(c.abs()));
        if d.abs() <= TIE_REL * scale {
            ties += 1;
        } else if d < 0.0 {
            a_wins += 1;
        } else {
            b_wins += 1;
        }
    }
    let included = values.len();
    let frac = |k: usize| if included == 0 { 0.0 } else { k as f64 / included as f64 };
    ComparisonSummary {
        comparison: comp,
        included,
        excluded: records.len() - included,
        a_wins,
        b_wins,
        ties,
        a_win_fraction: frac(a_wins),
        b_win_fraction: frac(b_wins),
        tie_fraction: frac(ties),
        histogram: Histogram::new(&values, bins),
    }
}

/// Runs every method needed by the comparisons on each realization and
/// tabulates the `D` statistics. Realizations where a method fails are
/// excluded and listed.
pub fn run_headtohead(config: &ExperimentConfig) -> Result<HeadToHeadTable> {
    config.validate()?;
    let comps = if config.comparisons.is_empty() {
        default_comparisons(&config.methods)
    } else {
        config.comparisons.clone()
    };
    let mut methods: Vec<Method> = config.methods.clone();
    for c in &comps {
        methods.extend([c.a, c.b]);
    }
    let mut seen = BTreeSet::new();
    methods.retain(|m| seen.insert(m.name()));
    if methods.contains(&Method::Hill) {
        return Err(Error::InvalidParameter(
            "hill climbing needs a target cost and cannot be compared head to head".into(),
        ));
    }
    let results: Vec<_> = (0..config.realizations)
        .into_par_iter()
        .map(|r| (r, run_one(config, &methods, &comps, r)))
        .collect();
    let mut runs = Vec::new();
    let mut records = Vec::new();
    let mut failures = Vec::new();
    for (r, res) in results {
        match res {
            Ok((info, rec)) => {
                runs.push(info);
                records.push(rec);
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
    let summaries = comps
        .iter()
        .enumerate()
        .map(|(i, &c)| summarize(c, i, &records, config.histogram_bins))
        .collect();
    Ok(HeadToHeadTable {
        config: config.clone(),
        comparisons: comps,
        methods,
        runs,
        records,
        failures,
        summaries,
    })
}

impl HeadToHeadTable {
    /// `realization, seed, nu`, then `<method>_{drivers,vol,energy,flp}`
    /// per method, then one `d_<a>_<b>_<metric>` column per comparison.
    pub fn csv_header(&self) -> Vec<String> {
        let mut h: Vec<String> = ["realization", "seed", "nu"].map(String::from).to_vec();
        for m in &self.methods {
            for f in ["drivers", "vol", "energy", "flp"] {
                h.push(format!("{m}_{f}"));
            }
        }
        h.extend(self.comparisons.iter().map(Comparison::label));
        h
    }

    fn csv_row(&self, rec: &ComparisonRecord) -> Vec<String> {
        let mut row = vec![rec.realization.to_string(), rec.seed.to_string(), cell(Some(rec.nu))];
        for &m in &self.methods {
            match rec.result(m) {
                Some(s) => row.extend([
                    join_nodes(&s.drivers),
                    cell(Some(s.costs.vol_cost)),
                    cell(s.costs.expected_energy),
                    cell(Some(s.costs.flp_cost)),
                ]),
                None => row.extend(std::iter::repeat_n(String::new(), 4)),
            }
        }
        row.extend(rec.diffs.iter().map(|&d| cell(d)));
        row
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(self.csv_header())?;
        for rec in &self.records {
            w.write_record(self.csv_row(rec))?;
        }
        w.flush()?;
        Ok(())
    }

    /// Writes the manifest and the requested formats into `dir`.
    pub fn emit(&self, dir: &Path, formats: &BTreeSet<Format>) -> Result<Manifest> {
        ensure_dir(dir)?;
        let mut manifest = Manifest::new("headtohead", &self.config, self.runs.clone());
        if formats.contains(&Format::Csv) {
            self.write_csv(&dir.join("headtohead.csv"))?;
            manifest.files.push("headtohead.csv".into());
            for s in &self.summaries {
                let name = format!("histogram_{}.csv", s.comparison.label());
                let mut w = csv::Writer::from_path(dir.join(&name))?;
                w.write_record(["bin_lo", "bin_hi", "count"])?;
                for (i, c) in s.histogram.counts.iter().enumerate() {
                    w.write_record([
                        cell(Some(s.histogram.edges[i])),
                        cell(Some(s.histogram.edges[i + 1])),
                        c.to_string(),
                    ])?;
                }
                w.flush()?;
                manifest.files.push(name);
            }
        }
        if formats.contains(&Format::Json) {
            let doc = serde_json::json!({
                "schema_version": super::SCHEMA_VERSION,
                "comparisons": self.comparisons,
                "records": self.records,
                "failures": self.failures,
                "summaries": self.summaries,
            });
            fs::write(dir.join("headtohead.json"), serde_json::to_string_pretty(&doc)? + "\n")?;
            manifest.files.push("headtohead.json".into());
        }
        if formats.contains(&Format::Svg) {
            for s in &self.summaries {
                let c = s.comparison;
                let name = format!("histogram_{}.svg", c.label());
                let title = format!(
                    "D = {}({}) - {}({}): {} wins {}, {} wins {}, ties {}",
                    c.metric.name(),
                    c.a,
                    c.metric.name(),
                    c.b,
                    c.a,
                    s.a_wins,
                    c.b,
                    s.b_wins,
                    s.ties
                );
                fs::write(dir.join(&name), plot::histogram(&s.histogram, &title, "D"))?;
                manifest.files.push(name);
            }
        }
        manifest.write(dir)?;
        Ok(manifest)
    }
}
