//! Projected gradient descent on expected control energy with the
//! probabilistic sparsity projection.
//!
//! cargo run --release --example lpgm

use driver_select::experiment::random_targets;
use driver_select::generators::{gen_graph, Family};
use driver_select::gramian::{Horizon, LinearNetwork};
use driver_select::selectors::lpgm::{lpgm, probabilistic_projection};
use driver_select::selectors::{method_rng, EnergyModel, LpgmParams};
use nalgebra::DMatrix;

fn main() -> driver_select::Result<()> {
    let (n, p, m, seed) = (30, 8, 4, 3);
    let g = gen_graph(&Family::ErdosRenyi { k_av: 4.0 }, n, true, seed, 1.0, None)?;
    let targets = random_targets(n, p, seed)?;
    let net = LinearNetwork::from_graph(&g, Horizon::Finite(1.0))?;
    let model = EnergyModel::new(net, targets)?;

    let b = DMatrix::from_fn(6, 2, |j, k| ((j + 2 * k) % 5) as f64);
    let (support, b_l0) = probabilistic_projection(&b, 2, 2, 9)?;
    println!("projection of a 6x2 matrix: support {:?}\n{b_l0:.3}", support.indices());

    let params = LpgmParams::default().resolved(n, m);
    let out = lpgm(&model, m, &params, &mut method_rng(seed))?;
    let finite: Vec<f64> = out.energies.iter().copied().filter(|e| e.is_finite()).collect();
    println!(
        "{} iterates ({} with nonsingular output Gramian), first energy {:.4e}",
        out.energies.len(),
        finite.len(),
        finite.first().copied().unwrap_or(f64::INFINITY)
    );
    println!(
        "best support {:?} at iterate {:?}, energy {:.4e}",
        out.support.indices(),
        out.best_iterate,
        out.best_energy
    );
    Ok(())
}
