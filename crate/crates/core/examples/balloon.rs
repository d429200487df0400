//! Terminal Gramian element of balloon graphs: closed form, full numeric
//! Gramian, and the quotient path, side by side.
//!
//! cargo run --release --example balloon

use driver_select::balloon::{balloon_jstar, balloon_orbits, balloon_wdd, build_balloon, quotient_adjacency, BalloonSpec};
use driver_select::gramian::{Horizon, LinearNetwork};
use driver_select::NodeSet;
use nalgebra::DMatrix;

fn main() -> driver_select::Result<()> {
    println!("{:>2} {:>2} {:>5} {:>14} {:>14} {:>14} {:>10}", "d", "b", "t_f", "closed form", "full graph", "quotient", "J*(beta=1)");
    for (d, b) in [(2, 1), (2, 3), (3, 2), (4, 4), (6, 5)] {
        let spec = BalloonSpec::new(d, b, 1.0, 1.0)?;
        let g = build_balloon(&spec)?;
        let q = quotient_adjacency(&g, &balloon_orbits(&spec)?)?;
        let qn = q.nrows();
        for t in [Horizon::Finite(1.0), Horizon::Finite(5.0), Horizon::Infinite] {
            let closed = balloon_wdd(&spec, t)?;

            let net = LinearNetwork::from_graph(&g, t)?;
            let b_full = NodeSet::new(vec![spec.origin()], g.n())?.column_selector(g.n());
            let full = net.gramian_factor(&b_full)?[(spec.terminal(), spec.terminal())];

            let mut e0 = DMatrix::zeros(qn, 1);
            e0[(0, 0)] = 1.0;
            let quot = LinearNetwork::new(q.clone(), t)?.gramian_factor(&e0)?[(qn - 1, qn - 1)];

            println!(
                "{d:>2} {b:>2} {:>5} {closed:>14.6e} {full:>14.6e} {quot:>14.6e} {:>10.3e}",
                t.to_string(),
                balloon_jstar(&spec, 1.0, t)?
            );
        }
    }
    Ok(())
}
