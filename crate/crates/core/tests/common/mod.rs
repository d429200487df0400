//! Independent oracles and generators shared by the integration tests.
#![allow(dead_code)]

use driver_select::structure::CostMatrix;
use driver_select::{Graph, NodeSet};
use nalgebra::{DMatrix, SymmetricEigen};
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Directed graph from an adjacency bit pattern, Gershgorin loop weight.
pub fn graph_from_bits(n: usize, bits: &[bool], gamma: f64) -> Graph {
    let edges: Vec<(usize, usize)> = (0..n)
        .flat_map(|j| (0..n).map(move |k| (j, k)))
        .filter(|&(j, k)| j != k)
        .zip(bits.iter().cycle())
        .filter_map(|(e, &on)| on.then_some(e))
        .collect();
    let g = Graph::directed(n, edges, gamma, 1.0).expect("simple graph");
    let nu = g.gershgorin_nu();
    g.with_weights(gamma, nu).expect("weights")
}

/// Random directed graph with edge probability `q`.
pub fn random_graph(n: usize, q: f64, rng: &mut ChaCha8Rng) -> Graph {
    let bits: Vec<bool> = (0..n * (n - 1)).map(|_| rng.random_bool(q)).collect();
    graph_from_bits(n, &bits, 1.0)
}

pub fn random_subset(n: usize, k: usize, rng: &mut ChaCha8Rng) -> NodeSet {
    NodeSet::new(sample(rng, n, k).into_vec(), n).expect("subset")
}

/// All `m`-subsets of `0..n` in lexicographic order.
pub fn combinations(n: usize, m: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, n: usize, m: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == m {
            out.push(cur.clone());
            return;
        }
        for j in start..n {
            if n - j < m - cur.len() {
                break;
            }
            cur.push(j);
            rec(j + 1, n, m, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, n, m, &mut Vec::new(), &mut out);
    out
}

/// Sum over targets of the cheapest open candidate.
pub fn assignment_cost(cost: &CostMatrix, open: &[usize]) -> f64 {
    (0..cost.p())
        .map(|k| open.iter().map(|&j| cost.get(j, k)).fold(f64::INFINITY, f64::min))
        .sum()
}

/// Optimal p-median objective by enumerating every `m`-subset.
pub fn exhaustive_flp(cost: &CostMatrix, m: usize) -> f64 {
    combinations(cost.n(), m)
        .iter()
        .map(|s| assignment_cost(cost, s))
        .fold(f64::INFINITY, f64::min)
}

pub fn eigenvalues(w: &DMatrix<f64>) -> Vec<f64> {
    let s = (w + w.transpose()) * 0.5;
    SymmetricEigen::new(s).eigenvalues.iter().copied().collect()
}

/// Eigenvalues above `p · ε · λ_max`.
pub fn rank(w: &DMatrix<f64>) -> usize {
    let ev = eigenvalues(w);
    let lmax = ev.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !(lmax > 0.0) {
        return 0;
    }
    let tol = w.nrows() as f64 * f64::EPSILON * lmax;
    ev.iter().filter(|&&l| l > tol).count()
}

pub fn log_det(w: &DMatrix<f64>) -> f64 {
    eigenvalues(w).iter().map(|l| l.ln()).sum()
}

pub fn rel_frobenius(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (a - b).norm() / b.norm().max(f64::MIN_POSITIVE)
}
