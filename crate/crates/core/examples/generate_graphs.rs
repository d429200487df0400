//! Samples each random graph family and reports degree statistics and the
//! Gershgorin loop weight.
//!
//! cargo run --release --example generate_graphs

use driver_select::generators::{gen_graph, Family};

fn main() -> driver_select::Result<()> {
    let n = 200;
    let families = [
        Family::ErdosRenyi { k_av: 6.0 },
        Family::KRegular { k: 4 },
        Family::WattsStrogatz { k_av: 6, rewire: 0.1 },
        Family::PowerLaw { exponent: 2.5, k_av: 6.0 },
    ];
    for family in &families {
        for directed in [true, false] {
            let g = gen_graph(family, n, directed, 7, 1.0, None)?;
            let mean_out = g.edge_count() as f64 / n as f64;
            println!(
                "{:<17} directed={:<5} edges {:>5}  mean out-degree {:>5.2}  max degree {:>3}  nu {:>4}  hurwitz {}",
                family.name(),
                directed,
                g.edge_count(),
                mean_out,
                g.max_degree(),
                g.nu(),
                g.is_hurwitz(1e-12)?
            );
        }
    }
    print!("\nedge list of a small sample:\n{}", gen_graph(&Family::ErdosRenyi { k_av: 2.0 }, 6, true, 3, 1.0, None)?.to_edge_list());
    Ok(())
}
