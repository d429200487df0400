//! Seeded random graph families.
//!
//! Directed variants: Erdős–Rényi draws each ordered pair independently and
//! k-regular pairs out-stubs with in-stubs. Watts–Strogatz and power-law
//! graphs are built undirected and, when a directed graph is requested, each
//! undirected edge is kept as two directed edges.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Graph;

/// Resampling budget for configuration-model style constructions.
pub const RESAMPLE_ATTEMPTS: usize = 100;

/// Random graph family and its parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum Family {
    /// Each pair present independently with probability `k_av / (n - 1)`.
    ErdosRenyi { k_av: f64 },
    /// Every node has degree exactly `k` (out-degree and in-degree `k` when
    /// directed).
    KRegular { k: usize },
    /// Ring lattice of even degree `k_av` with rewiring probability `rewire`.
    WattsStrogatz { k_av: usize, rewire: f64 },
    /// Configuration model over a power-law degree sequence.
    PowerLaw { exponent: f64, k_av: f64 },
}

impl Family {
    pub fn name(&self) -> &'static str {
        match self {
            Family::ErdosRenyi { .. } => "erdos_renyi",
            Family::KRegular { .. } => "k_regular",
            Family::WattsStrogatz { .. } => "watts_strogatz",
            Family::PowerLaw { .. } => "power_law_config",
        }
    }
}

/// Generates a graph of the given family. `nu = None` selects the
/// Gershgorin-safe loop weight `gamma * (k_max + 1)`.
pub fn gen_graph(
    family: &Family,
    n: usize,
    directed: bool,
    seed: u64,
    gamma: f64,
    nu: Option<f64>,
) -> Result<Graph> {
    let edges = gen_edges(family, n, directed, seed)?;
    let g = Graph::from_set(n, edges, gamma, 1.0, directed)?;
    let nu = nu.unwrap_or_else(|| g.gershgorin_nu());
    g.with_weights(gamma, nu)
}

/// Directed edge set of a generated graph (undirected edges appear twice).
pub fn gen_edges(
    family: &Family,
    n: usize,
    directed: bool,
    seed: u64,
) -> Result<BTreeSet<(usize, usize)>> {
    if n < 2 {
        return Err(Error::InvalidParameter(format!("need n >= 2, got {n}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    match *family {
        Family::ErdosRenyi { k_av } => erdos_renyi(n, k_av, directed, &mut rng),
        Family::KRegular { k } => {
            if directed {
                k_regular_directed(n, k, &mut rng)
            } else {
                k_regular_undirected(n, k, &mut rng)
            }
        }
        Family::WattsStrogatz { k_av, rewire } => watts_strogatz(n, k_av, rewire, &mut rng),
        Family::PowerLaw { exponent, k_av } => power_law(n, exponent, k_av, &mut rng),
    }
}

fn erdos_renyi(
    n: usize,
    k_av: f64,
    directed: bool,
    rng: &mut ChaCha8Rng,
) -> Result<BTreeSet<(usize, usize)>> {
    let p = k_av / (n - 1) as f64;
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::Infeasible(format!(
            "average degree {k_av} needs edge probability {p} outside [0, 1]"
        )));
    }
    let mut edges = BTreeSet::new();
    for j in 0..n {
        for k in 0..n {
            if j == k || (!directed && k < j) {
                continue;
            }
            if rng.random::<f64>() < p {
                edges.insert((j, k));
                if !directed {
                    edges.insert((k, j));
                }
            }
        }
    }
    Ok(edges)
}

/// Matches stubs one at a time, choosing partners that keep the graph simple.
/// Returns `None` when the remaining stubs cannot be matched.
fn match_stubs(
    out_stubs: &mut Vec<usize>,
    in_stubs: &mut Vec<usize>,
    undirected: bool,
    rng: &mut ChaCha8Rng,
) -> Option<BTreeSet<(usize, usize)>> {
    let mut edges = BTreeSet::new();
    out_stubs.shuffle(rng);
    while let Some(u) = out_stubs.pop() {
        let pool: &mut Vec<usize> = if undirected { out_stubs } else { in_stubs };
        let ok = |v: usize, edges: &BTreeSet<(usize, usize)>| v != u && !edges.contains(&(u, v));
        let mut pick = None;
        for _ in 0..32 {
            if pool.is_empty() {
                break;
            }
            let i = rng.random_range(0..pool.len());
            if ok(pool[i], &edges) {
                pick = Some(i);
                break;
            }
        }
        if pick.is_none() {
            let valid: Vec<usize> = (0..pool.len()).filter(|&i| ok(pool[i], &edges)).collect();
            if valid.is_empty() {
                return None;
            }
            pick = Some(valid[rng.random_range(0..valid.len())]);
        }
        let v = pool.swap_remove(pick?);
        edges.insert((u, v));
        if undirected {
            edges.insert((v, u));
        }
    }
    Some(edges)
}

fn k_regular_undirected(n: usize, k: usize, rng: &mut ChaCha8Rng) -> Result<BTreeSet<(usize, usize)>> {
    if k >= n || (n * k) % 2 == 1 {
        return Err(Error::Infeasible(format!(
            "no simple {k}-regular graph on {n} nodes"
        )));
    }
    for _ in 0..RESAMPLE_ATTEMPTS {
        let mut stubs: Vec<usize> = (0..n).flat_map(|j| std::iter::repeat_n(j, k)).collect();
        if let Some(e) = match_stubs(&mut stubs, &mut Vec::new(), true, rng) {
            return Ok(e);
        }
    }
    Err(Error::Infeasible(format!(
        "{k}-regular pairing failed after {RESAMPLE_ATTEMPTS} attempts"
    )))
}

fn k_regular_directed(n: usize, k: usize, rng: &mut ChaCha8Rng) -> Result<BTreeSet<(usize, usize)>> {
    if k >= n {
        return Err(Error::Infeasible(format!(
            "no simple directed {k}-regular graph on {n} nodes"
        )));
    }
    for _ in 0..RESAMPLE_ATTEMPTS {
        let mut outs: Vec<usize> = (0..n).flat_map(|j| std::iter::repeat_n(j, k)).collect();
        let mut ins = outs.clone();
        if let Some(e) = match_stubs(&mut outs, &mut ins, false, rng) {
            return Ok(e);
        }
    }
    Err(Error::Infeasible(format!(
        "directed {k}-regular pairing failed after {RESAMPLE_ATTEMPTS} attempts"
    )))
}

fn watts_strogatz(
    n: usize,
    k_av: usize,
    rewire: f64,
    rng: &mut ChaCha8Rng,
) -> Result<BTreeSet<(usize, usize)>> {
    if k_av % 2 == 1 || k_av == 0 || k_av >= n {
        return Err(Error::Infeasible(format!(
            "Watts-Strogatz needs an even degree 0 < k_av < n, got {k_av}"
        )));
    }
    if !(0.0..=1.0).contains(&rewire) {
        return Err(Error::Infeasible(format!("rewiring probability {rewire} outside [0, 1]")));
    }
    let half = k_av / 2;
    let mut und: BTreeSet<(usize, usize)> = BTreeSet::new();
    let key = |a: usize, b: usize| (a.min(b), a.max(b));
    for j in 0..n {
        for s in 1..=half {
            und.insert(key(j, (j + s) % n));
        }
    }
    for s in 1..=half {
        for j in 0..n {
            if rng.random::<f64>() >= rewire {
                continue;
            }
            let old = key(j, (j + s) % n);
            if !und.contains(&old) {
                continue;
            }
            // Node j already adjacent to everything: keep the edge.
            let degree_j = und.iter().filter(|&&(a, b)| a == j || b == j).count();
            if degree_j >= n - 1 {
                continue;
            }
            loop {
                let t = rng.random_range(0..n);
                if t != j && !und.contains(&key(j, t)) {
                    und.remove(&old);
                    und.insert(key(j, t));
                    break;
                }
            }
        }
    }
    Ok(und.into_iter().flat_map(|(a, b)| [(a, b), (b, a)]).collect())
}

/// Power-law degree sequence with `P(k) ∝ k^-exponent`, `k >= k_min`, drawn by
/// inverse-CDF sampling of the continuous law and rounded; `k_min` is chosen
/// so the continuous mean equals `k_av`.
pub fn power_law_sequence(
    n: usize,
    exponent: f64,
    k_av: f64,
    rng: &mut impl Rng,
) -> Result<Vec<usize>> {
    if exponent <= 2.0 {
        return Err(Error::Infeasible(format!(
            "power-law exponent must exceed 2 for a finite mean, got {exponent}"
        )));
    }
    let k_min = (k_av * (exponent - 2.0) / (exponent - 1.0)).round().max(1.0);
    if k_min as usize >= n {
        return Err(Error::Infeasible(format!("average degree {k_av} too large for {n} nodes")));
    }
    for _ in 0..RESAMPLE_ATTEMPTS {
        let seq: Vec<usize> = (0..n)
            .map(|_| {
                let u: f64 = 1.0 - rng.random::<f64>();
                let k = k_min * u.powf(-1.0 / (exponent - 1.0));
                (k.round() as usize).clamp(k_min as usize, n - 1)
            })
            .collect();
        if seq.iter().sum::<usize>() % 2 == 0 {
            return Ok(seq);
        }
    }
    Err(Error::Infeasible(format!(
        "odd total degree in every one of {RESAMPLE_ATTEMPTS} sampled sequences"
    )))
}

fn power_law(
    n: usize,
    exponent: f64,
    k_av: f64,
    rng: &mut ChaCha8Rng,
) -> Result<BTreeSet<(usize, usize)>> {
    let seq = power_law_sequence(n, exponent, k_av, rng)?;
    let stubs: Vec<usize> = seq
        .iter()
        .enumerate()
        .flat_map(|(j, &d)| std::iter::repeat_n(j, d))
        .collect();
    for _ in 0..RESAMPLE_ATTEMPTS {
        let mut s = stubs.clone();
        if let Some(e) = match_stubs(&mut s, &mut Vec::new(), true, rng) {
            return Ok(e);
        }
    }
    // Erased configuration model: pair uniformly, drop loops and multi-edges.
    let mut s = stubs;
    s.shuffle(rng);
    let mut edges = BTreeSet::new();
    for pair in s.chunks_exact(2) {
        let (u, v) = (pair[0], pair[1]);
        if u != v {
            edges.insert((u, v));
            edges.insert((v, u));
        }
    }
    Ok(edges)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn erdos_renyi_edge_count() {
        let g = gen_graph(&Family::ErdosRenyi { k_av: 6.0 }, 50, false, 1, 1.0, Some(1.0)).unwrap();
        let und = g.edge_count() as f64 / 2.0;
        // Binomial(1225, 6/49): mean 150, sigma ~ 11.5.
        let p: f64 = 6.0 / 49.0;
        let sigma = (1225.0 * p * (1.0 - p)).sqrt();
        assert!((und - 150.0).abs() < 4.0 * sigma, "{und}");
    }

    #[test]
    fn directed_erdos_renyi_is_not_symmetric() {
        let g = gen_graph(&Family::ErdosRenyi { k_av: 4.0 }, 40, true, 3, 1.0, None).unwrap();
        assert!(g.edges().iter().any(|&(j, k)| !g.has_edge(k, j)));
    }

    #[test]
    fn k_regular_degrees() {
        let g = gen_graph(&Family::KRegular { k: 3 }, 10, false, 7, 1.0, None).unwrap();
        for j in 0..10 {
            assert_eq!(g.in_degree(j), 3);
            assert_eq!(g.out_degree(j), 3);
        }
        let g = gen_graph(&Family::KRegular { k: 5 }, 50, true, 7, 1.0, None).unwrap();
        for j in 0..50 {
            assert_eq!(g.in_degree(j), 5);
            assert_eq!(g.out_degree(j), 5);
        }
        assert!(gen_graph(&Family::KRegular { k: 3 }, 9, false, 1, 1.0, None).is_err());
        assert!(gen_graph(&Family::KRegular { k: 10 }, 10, false, 1, 1.0, None).is_err());
    }

    #[test]
    fn watts_strogatz_average_degree() {
        let f = Family::WattsStrogatz {
            k_av: 8,
            rewire: 0.05,
        };
        let g = gen_graph(&f, 50, false, 11, 1.0, None).unwrap();
        let avg = g.edge_count() as f64 / 50.0;
        assert_eq!(avg, 8.0);
    }

    #[test]
    fn power_law_mean_degree_is_close() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let seq = power_law_sequence(20_000, 3.0, 10.0, &mut rng).unwrap();
        let mean = seq.iter().sum::<usize>() as f64 / seq.len() as f64;
        assert!((mean - 10.0).abs() < 1.0, "{mean}");
        assert!(seq.iter().all(|&k| k >= 5));
        let f = Family::PowerLaw {
            exponent: 3.0,
            k_av: 6.0,
        };
        let g = gen_graph(&f, 50, true, 2, 1.0, None).unwrap();
        assert!(g.edges().iter().all(|&(j, k)| g.has_edge(k, j)));
    }

    #[test]
    fn seeds_are_reproducible() {
        let f = Family::ErdosRenyi { k_av: 5.0 };
        let a = gen_graph(&f, 60, true, 42, 1.0, None).unwrap();
        let b = gen_graph(&f, 60, true, 42, 1.0, None).unwrap();
        let c = gen_graph(&f, 60, true, 43, 1.0, None).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn default_nu_is_hurwitz() {
        for (i, f) in [
            Family::ErdosRenyi { k_av: 6.0 },
            Family::KRegular { k: 5 },
            Family::WattsStrogatz { k_av: 8, rewire: 0.05 },
            Family::PowerLaw { exponent: 3.0, k_av: 6.0 },
        ]
        .iter()
        .enumerate()
        {
            let g = gen_graph(f, 50, i % 2 == 0, 9, 1.0, None).unwrap();
            assert!(g.is_hurwitz(1e-9).unwrap(), "{}", f.name());
        }
    }
}
