//! Hop distances, redundancies, and the pairwise FLP cost matrix of a
//! small graph with two parallel routes.
//!
//! cargo run --release --example structure_costs

use driver_select::structure::{flp_set_cost, structure_matrices};
use driver_select::{Graph, NodeSet};

fn main() -> driver_select::Result<()> {
    // 0 -> {1, 2} -> 3 -> 4, plus a shortcut 0 -> 5 -> 4.
    let edges = [(0, 1), (0, 2), (1, 3), (2, 3), (3, 4), (0, 5), (5, 4)];
    let g = Graph::directed(6, edges, 1.0, 3.0)?;
    let targets = NodeSet::new(vec![3, 4], 6)?;
    let sm = structure_matrices(&g, &targets)?;

    println!("candidate  target  hops  redundancy  cost");
    for j in 0..g.n() {
        for (i, k) in targets.iter().enumerate() {
            let hops = sm.dist[j][i].map_or("-".into(), |d| d.to_string());
            let red = sm.redundancy[j][i].map_or("-".into(), |r| r.to_string());
            println!("{j:>9} {k:>7} {hops:>5} {red:>11} {:>8.4}", sm.cost.get(j, i));
        }
    }
    for set in [vec![0], vec![1], vec![3], vec![0, 3]] {
        let d = NodeSet::new(set, g.n())?;
        println!("FLP({:?}) = {}", d.indices(), flp_set_cost(&sm, &d)?);
    }
    println!("all-candidates lower bound {}", sm.cost.lower_bound());
    Ok(())
}
