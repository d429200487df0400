mod common;

use std::collections::BTreeSet;
use std::path::Path;

use driver_select::balloon::{balloon_wdd, BalloonSpec};
use driver_select::generators::{gen_graph, Family};
use driver_select::gramian::{gramian_finite, Horizon, LinearNetwork};
use driver_select::selectors::flp::{greedy_seed, is_swap_optimal, local_search, solve_exact, FlpInstance};
use driver_select::selectors::greedy::greedy_picks;
use driver_select::selectors::hill::hill_climb;
use driver_select::selectors::lpgm::{lpgm, EnergyModel, LpgmParams};
use driver_select::selectors::GreedyParams;
use driver_select::structure::{bfs_from, bfs_to, pairwise_cost, redundancy, structure_matrices, CostMatrix, Redundancy};
use driver_select::{Graph, NodeSet};
use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::Rng;

use common::*;

fn small_graph() -> impl Strategy<Value = (usize, Vec<bool>)> {
    (2usize..=9).prop_flat_map(|n| (Just(n), prop::collection::vec(prop::bool::weighted(0.3), n * (n - 1))))
}

fn cost_matrix() -> impl Strategy<Value = (CostMatrix, usize)> {
    (2usize..=10, 1usize..=6).prop_flat_map(|(n, p)| {
        (prop::collection::vec(0.0..10.0f64, n * p), 1..=n.min(4)).prop_map(move |(data, m)| (CostMatrix::new(n, p, data).unwrap(), m))
    })
}

/// Nodes lying on some walk of exactly `d` hops from `j` to `k`; for
/// `d` the distance these are the shortest paths.
fn nodes_on_shortest_paths(g: &Graph, j: usize, k: usize, d: u32) -> BTreeSet<usize> {
    fn walk(g: &Graph, v: usize, k: usize, left: u32, path: &mut Vec<usize>, out: &mut BTreeSet<usize>) {
        if left == 0 {
            if v == k {
                out.extend(path.iter().copied());
            }
            return;
        }
        for &w in g.out_neighbors(v) {
            path.push(w);
            walk(g, w, k, left - 1, path, out);
            path.pop();
        }
    }
    let mut out = BTreeSet::new();
    walk(g, j, k, d, &mut vec![j], &mut out);
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn state_matrix_rows_sum_to_weighted_in_degree((n, bits) in small_graph(), gamma in 0.1..3.0f64) {
        let g = graph_from_bits(n, &bits, gamma);
        let a = g.state_matrix();
        for k in 0..n {
            let off: f64 = (0..n).filter(|&j| j != k).map(|j| a[(k, j)]).sum();
            prop_assert!((off - gamma * g.in_degree(k) as f64).abs() <= 1e-12 * off.abs().max(1.0));
            prop_assert_eq!(a[(k, k)], -g.nu());
        }
    }

    #[test]
    fn generation_is_seed_deterministic(seed in any::<u64>(), k_av in 1.0..5.0f64, directed in any::<bool>()) {
        let fam = Family::ErdosRenyi { k_av };
        let g = gen_graph(&fam, 30, directed, seed, 1.0, None).unwrap();
        prop_assert_eq!(&g, &gen_graph(&fam, 30, directed, seed, 1.0, None).unwrap());
        prop_assert_eq!(g.to_edge_list(), gen_graph(&fam, 30, directed, seed, 1.0, None).unwrap().to_edge_list());
        let other = gen_graph(&fam, 30, directed, seed.wrapping_add(1), 1.0, None).unwrap();
        prop_assert_ne!(g.edges(), other.edges());
    }

    #[test]
    fn undirected_families_are_symmetric(seed in any::<u64>(), which in 0usize..3) {
        let fam = [
            Family::ErdosRenyi { k_av: 3.0 },
            Family::WattsStrogatz { k_av: 4, rewire: 0.2 },
            Family::PowerLaw { exponent: 3.0, k_av: 4.0 },
        ][which].clone();
        let a = gen_graph(&fam, 40, false, seed, 0.7, None).unwrap().state_matrix();
        prop_assert_eq!(&a, &a.transpose());
    }

    #[test]
    fn regular_graphs_are_hurwitz_above_degree(seed in any::<u64>(), k in 1usize..5, excess in 1e-3..1.0f64, directed in any::<bool>()) {
        let gamma = 0.8;
        let k = if directed { k } else { 2 * k };
        let g = gen_graph(&Family::KRegular { k }, 20, directed, seed, gamma, Some(gamma * k as f64 * (1.0 + excess))).unwrap();
        prop_assert!(g.is_hurwitz(0.0).unwrap());
    }

    #[test]
    fn edge_list_round_trips((n, bits) in small_graph(), gamma in 0.1..3.0f64) {
        let g = graph_from_bits(n, &bits, gamma);
        let back = Graph::parse_edge_list(&g.to_edge_list(), Path::new("mem")).unwrap();
        prop_assert_eq!(back, g);
    }

    #[test]
    fn pairwise_cost_increases_with_distance(d in 2u32..30, num in 1u64..20, den in 1u64..20, gamma in 0.1..2.0f64, ratio in 1.0..4.0f64) {
        let nu = gamma * ratio;
        let r = Some(Redundancy::new(num, den));
        let c0 = pairwise_cost(Some(d), r, gamma, nu).unwrap();
        let c1 = pairwise_cost(Some(d + 1), r, gamma, nu).unwrap();
        prop_assert!(c1 > c0, "{c0} -> {c1}");
        let richer = Some(Redundancy::new(num + 1, den));
        prop_assert!(pairwise_cost(Some(d), richer, gamma, nu).unwrap() < c0);
    }

    #[test]
    fn redundancy_ignores_labels((n, bits) in small_graph(), seed in any::<u64>()) {
        let g = graph_from_bits(n, &bits, 1.0);
        let mut perm: Vec<usize> = (0..n).collect();
        perm.shuffle(&mut rng(seed));
        let h = Graph::directed(n, g.edges().iter().map(|&(a, b)| (perm[a], perm[b])), 1.0, g.nu()).unwrap();
        for j in 0..n {
            let (fg, fh) = (bfs_from(&g, j), bfs_from(&h, perm[j]));
            for k in (0..n).filter(|&k| fg[k].is_some_and(|d| d >= 2)) {
                let rg = redundancy(j, k, &fg, &bfs_to(&g, k)).unwrap();
                let rh = redundancy(perm[j], perm[k], &fh, &bfs_to(&h, perm[k])).unwrap();
                prop_assert_eq!(rg, rh);
            }
        }
    }

    #[test]
    fn redundancy_counts_shortest_path_nodes(n in 4usize..=12, q in 0.1..0.5f64, seed in any::<u64>()) {
        let g = random_graph(n, q, &mut rng(seed));
        for j in 0..n {
            let from = bfs_from(&g, j);
            for k in 0..n {
                let Some(d) = from[k].filter(|d| (2..=4).contains(d)) else { continue };
                let nodes = nodes_on_shortest_paths(&g, j, k, d);
                let r = redundancy(j, k, &from, &bfs_to(&g, k)).unwrap();
                prop_assert_eq!(r, Redundancy::new(nodes.len() as u64 - 2, u64::from(d) - 1));
            }
        }
    }

    #[test]
    fn output_gramian_is_additive((n, bits) in small_graph(), seed in any::<u64>()) {
        let mut rng = rng(seed);
        let g = graph_from_bits(n, &bits, 1.0);
        let targets = random_subset(n, rng.random_range(1..=n), &mut rng);
        let net = LinearNetwork::from_graph(&g, Horizon::Finite(1.0)).unwrap();
        let gs = net.driver_contributions(&targets, &NodeSet::all(n)).unwrap();
        let split = rng.random_range(1..n);
        let (d1, d2) = (NodeSet::new((0..split).collect(), n).unwrap(), NodeSet::new((split..n).collect(), n).unwrap());
        let sum = gs.output_gramian(&d1).unwrap() + gs.output_gramian(&d2).unwrap();
        let whole = gs.output_gramian(&NodeSet::all(n)).unwrap();
        prop_assert!(rel_frobenius(&whole, &sum) <= 1e-13);
        // Contributions agree with a direct solve on the selector.
        let direct = gramian_finite(&g.state_matrix(), &(d1.column_selector(n) * d1.column_selector(n).transpose()), 1.0).unwrap();
        let idx = targets.indices();
        prop_assert!(rel_frobenius(&direct.select_rows(idx).select_columns(idx), &gs.output_gramian(&d1).unwrap()) <= 1e-8);
    }

    #[test]
    fn greedy_incumbent_improves((n, bits) in small_graph(), seed in any::<u64>()) {
        let mut rng = rng(seed);
        let g = graph_from_bits(n, &bits, 1.0);
        let targets = random_subset(n, rng.random_range(1..=n.min(4)), &mut rng);
        let gs = LinearNetwork::from_graph(&g, Horizon::Finite(1.0)).unwrap()
            .driver_contributions(&targets, &NodeSet::all(n)).unwrap();
        let out = greedy_picks(&gs, rng.random_range(1..=n), &GreedyParams::default()).unwrap();
        for i in 1..out.scores.len() {
            if out.rank_scored[i] == out.rank_scored[i - 1] {
                let slack = 1e-9 * out.scores[i - 1].abs().max(1.0);
                prop_assert!(out.scores[i] <= out.scores[i - 1] + slack, "{:?}", out.scores);
            }
        }
        let distinct: BTreeSet<usize> = out.picks.iter().copied().collect();
        prop_assert_eq!(distinct.len(), out.picks.len());
    }

    #[test]
    fn flp_exact_matches_enumeration((cost, m) in cost_matrix()) {
        let inst = FlpInstance::new(cost.clone(), m).unwrap();
        let sol = solve_exact(&inst, usize::MAX);
        prop_assert!(sol.optimal);
        prop_assert_eq!(sol.objective, exhaustive_flp(&cost, m));
        prop_assert_eq!(sol.objective, assignment_cost(&cost, &sol.open));
    }

    #[test]
    fn local_search_beats_its_seed((cost, m) in cost_matrix()) {
        let inst = FlpInstance::new(cost.clone(), m).unwrap();
        let seed = greedy_seed(&inst);
        let ls = local_search(&inst);
        prop_assert!(ls.objective <= assignment_cost(&cost, &seed));
        prop_assert!(is_swap_optimal(&inst, &ls.open));
        prop_assert_eq!(ls.open.len(), m);
    }

    #[test]
    fn hill_climb_reports_honestly((cost, m) in cost_matrix(), target in 0.0..30.0f64, eps in 0.05..2.0f64, seed in any::<u64>()) {
        let out = hill_climb(&cost, m, target, eps, 500, &mut rng(seed)).unwrap();
        prop_assert_eq!(out.cost, assignment_cost(&cost, &out.set));
        prop_assert_eq!(out.found, (out.cost - target).abs() <= eps);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn lpgm_keeps_the_best_iterate(n in 3usize..=8, seed in any::<u64>()) {
        let mut rng = rng(seed);
        let g = random_graph(n, 0.35, &mut rng);
        let targets = random_subset(n, rng.random_range(1..=n.min(3)), &mut rng);
        let model = EnergyModel::new(LinearNetwork::from_graph(&g, Horizon::Finite(1.0)).unwrap(), targets).unwrap();
        let params = LpgmParams { iterations: 15, ..LpgmParams::default() };
        let out = lpgm(&model, rng.random_range(1..=n.min(3)), &params, &mut rng).unwrap();
        let min = out.energies.iter().copied().fold(f64::INFINITY, f64::min);
        prop_assert_eq!(out.best_energy, min);
        if let Some(i) = out.best_iterate {
            prop_assert_eq!(out.energies[i], min);
        }
    }
}

#[test]
fn balloon_energy_is_monotone() {
    let wdd = |d, b, t| balloon_wdd(&BalloonSpec::new(d, b, 1.0, 1.0).unwrap(), t).unwrap();
    for d in 2..=6 {
        for b in 1..=5 {
            let ts = [1.0, 2.0, 4.0].map(|t| wdd(d, b, Horizon::Finite(t)));
            assert!(ts[0] < ts[1] && ts[1] < ts[2] && ts[2] < wdd(d, b, Horizon::Infinite), "d={d} b={b} {ts:?}");
            if b < 5 {
                assert!(wdd(d, b + 1, Horizon::Finite(1.0)) > ts[0]);
            }
            if d < 6 {
                assert!(wdd(d + 1, b, Horizon::Finite(1.0)) < ts[0]);
            }
        }
    }
}

#[test]
fn structural_costs_match_formula() {
    // 0 -> 1 -> 3, 0 -> 2 -> 3: distance 2, four nodes on shortest paths.
    let g = Graph::directed(4, [(0, 1), (1, 3), (0, 2), (2, 3)], 1.0, 3.0).unwrap();
    let sm = structure_matrices(&g, &NodeSet::new(vec![3], 4).unwrap()).unwrap();
    assert_eq!(sm.redundancy[0][0], Some(Redundancy::new(2, 1)));
    let expect = (6.0f64).ln() - 2.0 * 2.0f64.ln() + 4.0 * 3.0f64.ln() + 0.5 * (2.0 * std::f64::consts::PI).ln();
    assert!((sm.cost.get(0, 0) - expect).abs() < 1e-12);
    assert_eq!(sm.cost.get(3, 0), 6.0f64.ln());
}

#[test]
fn gramian_matches_scalar_closed_form() {
    // a = -2: W(t) = (1 - e^{-4t}) / 4.
    let a = DMatrix::from_element(1, 1, -2.0);
    let q = DMatrix::from_element(1, 1, 1.0);
    for t in [0.1, 1.0, 3.0] {
        let w = gramian_finite(&a, &q, t).unwrap()[(0, 0)];
        assert!((w - (1.0 - (-4.0 * t).exp()) / 4.0).abs() < 1e-14);
    }
}
