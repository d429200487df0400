//! Facility-location selection: exact branch and bound against swap local
//! search on the same random instance.
//!
//! cargo run --release --example flp

use driver_select::experiment::random_targets;
use driver_select::generators::{gen_graph, Family};
use driver_select::selectors::flp::{flp_solve, greedy_seed, local_search, solve_exact, FlpInstance};
use driver_select::selectors::{FlpEngine, FlpParams};
use driver_select::structure::structure_matrices;

fn main() -> driver_select::Result<()> {
    let (n, p, m, seed) = (50, 20, 10, 5);
    let g = gen_graph(&Family::ErdosRenyi { k_av: 6.0 }, n, true, seed, 1.0, None)?;
    let targets = random_targets(n, p, seed)?;
    let sm = structure_matrices(&g, &targets)?;
    let inst = FlpInstance::new(sm.cost.clone(), m)?;

    let seed_set = greedy_seed(&inst);
    println!("greedy seed    {:?}  cost {:.6}", seed_set, inst.objective(&seed_set));
    let ls = local_search(&inst);
    println!("local search   {:?}  cost {:.6}", ls.open, ls.objective);
    let exact = solve_exact(&inst, 2_000_000);
    println!("branch & bound {:?}  cost {:.6}  optimal {}  nodes {}", exact.open, exact.objective, exact.optimal, exact.nodes);
    println!("all-candidates bound {:.6}", sm.cost.lower_bound());

    let params = FlpParams {
        engine: FlpEngine::Auto,
        ..Default::default()
    };
    let auto = flp_solve(&sm, m, &params)?;
    println!("auto engine picks exact for n <= {}: optimal {}", params.exact_max_n, auto.optimal);
    Ok(())
}
