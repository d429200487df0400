//! Hill climbing to sets with a prescribed FLP cost.
//!
//! cargo run --release --example hill_climb

use driver_select::experiment::random_targets;
use driver_select::generators::{gen_graph, Family};
use driver_select::selectors::hill::hill_climb;
use driver_select::selectors::method_rng;
use driver_select::structure::structure_matrices;

fn main() -> driver_select::Result<()> {
    let (n, p, m, seed) = (60, 20, 6, 2);
    let g = gen_graph(&Family::ErdosRenyi { k_av: 5.0 }, n, true, seed, 1.0, None)?;
    let sm = structure_matrices(&g, &random_targets(n, p, seed)?)?;
    let known = sm.cost.set_cost(&[0, 10, 20, 30, 40, 50])?;
    let mut rng = method_rng(seed);
    for target in [known, known * 0.9, known * 1.2, sm.cost.lower_bound()] {
        let out = hill_climb(&sm.cost, m, target, 0.5, 10_000, &mut rng)?;
        println!(
            "target {target:>9.3}: found {:<5} after {:>5} iterations, cost {:>9.3}, set {:?}",
            out.found, out.iterations, out.cost, out.set
        );
    }
    Ok(())
}
