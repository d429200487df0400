//! Greedy Gramian-volume selection on a random graph, showing the rank
//! phase and the log-det phase of each pick.
//!
//! cargo run --release --example greedy

use driver_select::experiment::random_targets;
use driver_select::generators::{gen_graph, Family};
use driver_select::gramian::{Horizon, LinearNetwork};
use driver_select::selectors::greedy::greedy_picks;
use driver_select::selectors::{select, GreedyParams, Method, SelectionProblem};
use driver_select::NodeSet;

fn main() -> driver_select::Result<()> {
    let (n, p, m, seed) = (40, 8, 5, 11);
    let g = gen_graph(&Family::ErdosRenyi { k_av: 4.0 }, n, true, seed, 1.0, None)?;
    let targets = random_targets(n, p, seed)?;
    let horizon = Horizon::Finite(1.0);

    let gs = LinearNetwork::from_graph(&g, horizon)?.driver_contributions(&targets, &NodeSet::all(n))?;
    let out = greedy_picks(&gs, m, &GreedyParams::default())?;
    for (i, (&pick, &score)) in out.picks.iter().zip(&out.scores).enumerate() {
        let phase = if out.rank_scored[i] { "rank" } else { "-log det" };
        println!("pick {i}: node {pick:>2}  {phase:>8} score {score:.4}");
    }
    match out.flag_cleared {
        Some(i) => println!("full output rank after pick {i}"),
        None => println!("output rank never reached {p}"),
    }

    let problem = SelectionProblem::new(g, targets, m, horizon, seed)?;
    let res = select(&problem, Method::Greedy)?;
    println!("{}", serde_json::to_string_pretty(&res)?);
    Ok(())
}
