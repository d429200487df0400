//! Finite- and infinite-horizon output Gramians of a small directed ring,
//! and the minimum energy of a maneuver as the horizon grows.
//!
//! cargo run --release --example gramian

use driver_select::gramian::{gramian_quadrature, log_det_output, optimal_energy, Horizon, LinearNetwork, Maneuver};
use driver_select::{Graph, NodeSet};
use nalgebra::{DMatrix, DVector};

fn main() -> driver_select::Result<()> {
    let n = 6;
    let ring = (0..n).map(|j| (j, (j + 1) % n));
    let g = Graph::directed(n, ring, 1.0, 2.0)?;
    let targets = NodeSet::new(vec![2, 4], n)?;
    let drivers = NodeSet::new(vec![0], n)?;

    let a = g.state_matrix();
    let q = drivers.column_selector(n) * drivers.row_selector(n);
    let net = LinearNetwork::from_graph(&g, Horizon::Finite(1.0))?;
    let w = net.gramian(&q)?;
    let w_quad = gramian_quadrature(&a, &q, 1.0)?;
    println!("W(1) vs adaptive quadrature: relative Frobenius gap {:.2e}", (&w - &w_quad).norm() / w.norm());

    let maneuver = Maneuver::new(DVector::zeros(n), DVector::from_vec(vec![1.0, 1.0]));
    for t in [Horizon::Finite(0.5), Horizon::Finite(1.0), Horizon::Finite(4.0), Horizon::Infinite] {
        let net = LinearNetwork::from_graph(&g, t)?;
        let gs = net.driver_contributions(&targets, &NodeSet::all(n))?;
        let wbar: DMatrix<f64> = gs.output_gramian(&drivers)?;
        let ld = log_det_output(&wbar, None);
        println!(
            "t_f = {:>4}: rank {}  -log det {:>8.4}  energy to (1, 1) {:.4e}",
            t.to_string(),
            ld.rank,
            -ld.value,
            optimal_energy(&gs, &drivers, &maneuver, &net)?
        );
    }
    Ok(())
}
