//! FLP against greedy on Erdős–Rényi graphs: n = 50, p = 20, m = 10,
//! average degree 6. Prints win fractions and writes CSV, JSON, and SVG
//! histograms.
//!
//! cargo run --release --example head_to_head -- [realizations] [out_dir]

use std::collections::BTreeSet;
use std::path::PathBuf;
use std::time::Instant;

use driver_select::experiment::{run_headtohead, ExperimentConfig, Format};
use driver_select::generators::Family;

fn main() -> driver_select::Result<()> {
    let mut args = std::env::args().skip(1);
    let realizations = args.next().map_or(200, |s| s.parse().expect("realization count"));
    let out = args
        .next()
        .map_or_else(|| std::env::temp_dir().join("driver-select-h2h"), PathBuf::from);

    let mut config = ExperimentConfig::new(Family::ErdosRenyi { k_av: 6.0 }, 50, 20, 10);
    config.realizations = realizations;
    config.seed = 1;

    let start = Instant::now();
    let table = run_headtohead(&config)?;
    println!("{} realizations in {:.1}s", table.records.len(), start.elapsed().as_secs_f64());
    for f in &table.failures {
        println!("excluded realization {} (seed {}): {}", f.realization, f.seed, f.reason);
    }
    for s in &table.summaries {
        let c = s.comparison;
        println!(
            "{}: {} cheaper {:.3}, {} cheaper {:.3}, ties {:.3} over {} realizations",
            c.label(),
            c.a,
            s.a_win_fraction,
            c.b,
            s.b_win_fraction,
            s.tie_fraction,
            s.included
        );
    }
    let formats = BTreeSet::from([Format::Csv, Format::Json, Format::Svg]);
    let manifest = table.emit(&out, &formats)?;
    println!("wrote {} files to {}", manifest.files.len() + 1, out.display());
    Ok(())
}
