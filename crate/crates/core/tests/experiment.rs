use std::collections::BTreeSet;
use std::fs;

use driver_select::experiment::headtohead::default_comparisons;
use driver_select::experiment::{
    run_correlation, run_headtohead, Comparison, CorrelationTable, ExperimentConfig, Format, Manifest, Metric,
};
use driver_select::generators::Family;
use driver_select::gramian::Horizon;
use driver_select::selectors::Method;

fn small(realizations: usize) -> ExperimentConfig {
    let mut c = ExperimentConfig::new(Family::ErdosRenyi { k_av: 3.0 }, 12, 4, 2);
    c.realizations = realizations;
    c.seed = 7;
    c.histogram_bins = 5;
    c.grid.points = 4;
    c.grid.random_sets = 15;
    c
}

fn csv_only() -> BTreeSet<Format> {
    BTreeSet::from([Format::Csv])
}

#[test]
fn fractions_and_histograms_cover_included_runs() {
    let mut c = small(6);
    c.methods = vec![Method::Flp, Method::Greedy, Method::Lpgm];
    let t = run_headtohead(&c).unwrap();
    assert_eq!(t.summaries.len(), default_comparisons(&c.methods).len());
    for s in &t.summaries {
        assert_eq!(s.a_wins + s.b_wins + s.ties, s.included);
        assert_eq!(s.histogram.total(), s.included);
        assert_eq!(s.included + s.excluded + t.failures.len(), c.realizations);
        if s.included > 0 {
            let sum = s.a_win_fraction + s.b_win_fraction + s.tie_fraction;
            assert!((sum - 1.0).abs() < 1e-12, "{sum}");
        }
    }
}

#[test]
fn self_comparison_ties_everywhere() {
    let mut c = small(5);
    c.methods = vec![Method::Flp];
    c.comparisons = vec![Comparison {
        a: Method::Flp,
        b: Method::Flp,
        metric: Metric::Vol,
    }];
    let t = run_headtohead(&c).unwrap();
    let s = &t.summaries[0];
    assert_eq!(s.ties, s.included);
    assert!(s.included > 0);
    for rec in &t.records {
        assert!(rec.diffs[0].is_none_or(|d| d == 0.0));
    }
}

#[test]
fn manifest_records_weights_and_horizon() {
    let dir = tempfile::tempdir().unwrap();
    let c = small(4);
    let t = run_headtohead(&c).unwrap();
    t.emit(dir.path(), &csv_only()).unwrap();
    let m = Manifest::read(dir.path().join("manifest.json")).unwrap();
    assert_eq!(m.config, c);
    assert_eq!(m.runs.len() + t.failures.len(), c.realizations);
    for run in &m.runs {
        assert!(run.gamma > 0.0 && run.nu > 0.0);
        assert_eq!(run.t_f, Horizon::Finite(1.0));
    }
    assert!(m.files.iter().any(|f| f == "headtohead.csv"));
}

#[test]
fn rerun_from_manifest_is_byte_identical() {
    let first = tempfile::tempdir().unwrap();
    let second = tempfile::tempdir().unwrap();
    run_headtohead(&small(4)).unwrap().emit(first.path(), &csv_only()).unwrap();
    let m = Manifest::read(first.path().join("manifest.json")).unwrap();
    run_headtohead(&m.config).unwrap().emit(second.path(), &csv_only()).unwrap();
    let a = fs::read(first.path().join("headtohead.csv")).unwrap();
    let b = fs::read(second.path().join("headtohead.csv")).unwrap();
    assert_eq!(a, b);

    let c = small(2);
    run_correlation(&c).unwrap().emit(first.path(), &csv_only()).unwrap();
    let m = Manifest::read(first.path().join("manifest.json")).unwrap();
    run_correlation(&m.config).unwrap().emit(second.path(), &csv_only()).unwrap();
    let a = fs::read(first.path().join("correlation.csv")).unwrap();
    let b = fs::read(second.path().join("correlation.csv")).unwrap();
    assert_eq!(a, b);
}

#[test]
fn correlation_csv_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let t = run_correlation(&small(2)).unwrap();
    assert_eq!(t.rows.len(), t.runs.len() * 4);
    assert_eq!(t.summary.found + t.summary.not_found, t.rows.len());
    let path = dir.path().join("c.csv");
    t.write_csv(&path).unwrap();
    assert_eq!(CorrelationTable::read_csv(&path).unwrap(), t.rows);
}

#[test]
fn infinite_horizon_reports_no_energy() {
    let mut c = small(2);
    c.horizon = Horizon::Infinite;
    let t = run_correlation(&c).unwrap();
    assert!(t.rows.iter().all(|r| r.expected_energy.is_none()));
    assert_eq!(t.summary.pooled.energy.points, 0);
    assert_eq!(t.summary.pooled.energy.pearson, None);
}

#[test]
fn single_grid_value_has_no_correlation() {
    let mut c = small(1);
    c.grid.values = Some(vec![1.0]);
    let t = run_correlation(&c).unwrap();
    assert_eq!(t.rows.len(), 1);
    assert_eq!(t.summary.pooled.vol.pearson, None);
}

#[test]
fn invalid_configs_are_rejected() {
    let mut c = small(0);
    assert!(run_headtohead(&c).is_err());
    c.realizations = 1;
    c.p = 13;
    assert!(run_correlation(&c).is_err());
}
