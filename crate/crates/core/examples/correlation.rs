//! Hill-climbs Erdős–Rényi graphs (n = 300, p = 100, m = 33, average degree
//! 10) to a grid of FLP costs and correlates the sets found with their
//! volume cost and expected energy.
//!
//! cargo run --release --example correlation -- [realizations] [out_dir]

use std::collections::BTreeSet;
use std::path::PathBuf;
use std::time::Instant;

use driver_select::experiment::{run_correlation, ExperimentConfig, Format};
use driver_select::generators::Family;

fn main() -> driver_select::Result<()> {
    let mut args = std::env::args().skip(1);
    let realizations = args.next().map_or(5, |s| s.parse().expect("realization count"));
    let out = args
        .next()
        .map_or_else(|| std::env::temp_dir().join("driver-select-corr"), PathBuf::from);

    let mut config = ExperimentConfig::new(Family::ErdosRenyi { k_av: 10.0 }, 300, 100, 33);
    config.realizations = realizations;

    let start = Instant::now();
    let table = run_correlation(&config)?;
    let s = &table.summary;
    println!("{} rows in {:.1}s ({} found, {} not found)", table.rows.len(), start.elapsed().as_secs_f64(), s.found, s.not_found);
    let show = |x: Option<f64>| x.map_or("n/a".to_string(), |v| format!("{v:.4}"));
    println!("FLP vs vol:    pearson {} slope {}", show(s.pooled.vol.pearson), show(s.pooled.vol.slope));
    println!("FLP vs energy: pearson {} slope {}", show(s.pooled.energy.pearson), show(s.pooled.energy.slope));
    for (r, fit) in &s.per_realization {
        println!("  realization {r}: pearson vol {} energy {}", show(fit.vol.pearson), show(fit.energy.pearson));
    }
    let formats = BTreeSet::from([Format::Csv, Format::Json, Format::Svg]);
    table.emit(&out, &formats)?;
    println!("wrote {}", out.display());
    Ok(())
}
