//! Facility location (p-median) over the pairwise cost matrix.
//!
//! Two engines: depth-first branch and bound with column-minimum and
//! Lagrangian lower bounds, and a greedy-seeded best-improvement swap local
//! search.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::structure::{CostMatrix, StructureMatrices};

/// Which p-median engine to run.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FlpEngine {
    /// Exact up to `exact_max_n` candidates, local search above.
    #[default]
    Auto,
    Exact,
    LocalSearch,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlpParams {
    pub engine: FlpEngine,
    pub exact_max_n: usize,
    /// Branch-and-bound node budget; exceeding it clears the optimality
    /// flag.
    pub node_limit: usize,
}

impl Default for FlpParams {
    fn default() -> Self {
        FlpParams {
            engine: FlpEngine::Auto,
            exact_max_n: 60,
            node_limit: 2_000_000,
        }
    }
}

/// A p-median instance: open exactly `m` of `n` candidates and assign each
/// of `p` targets to its cheapest open candidate.
#[derive(Clone, Debug, PartialEq)]
pub struct FlpInstance {
    cost: CostMatrix,
    m: usize,
}

/// Solution of an [`FlpInstance`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlpSolution {
    /// Open candidates, ascending.
    pub open: Vec<usize>,
    #[serde(with = "crate::ser::ext_real")]
    pub objective: f64,
    /// Proven optimal (exact engine within its node budget).
    pub optimal: bool,
    /// Search nodes (exact) or improving swaps (local search).
    pub nodes: usize,
}

impl FlpInstance {
    /// Fails with [`Error::UnreachableTarget`] (carrying the column index)
    /// if some target has no finite-cost candidate.
    pub fn new(cost: CostMatrix, m: usize) -> Result<Self> {
        if m == 0 || m > cost.n() {
            return Err(Error::InvalidParameter(format!(
                "must open 1..={} candidates, got {m}",
                cost.n()
            )));
        }
        for k in 0..cost.p() {
            if (0..cost.n()).all(|j| cost.get(j, k) == f64::INFINITY) {
                return Err(Error::UnreachableTarget { target: k });
            }
        }
        Ok(FlpInstance { cost, m })
    }

    pub fn cost(&self) -> &CostMatrix {
        &self.cost
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n(&self) -> usize {
        self.cost.n()
    }

    pub fn p(&self) -> usize {
        self.cost.p()
    }

    /// Summed cheapest-assignment cost of `open`.
    pub fn objective(&self, open: &[usize]) -> f64 {
        self.cost.set_cost(open).unwrap_or(f64::INFINITY)
    }
}

/// Objective with infinite terms counted separately, so that partial
/// coverage still ranks.
#[derive(Clone, Copy, Debug, PartialEq)]
struct Key {
    inf: usize,
    sum: f64,
}

impl Key {
    fn of(values: impl Iterator<Item = f64>) -> Key {
        let mut key = Key { inf: 0, sum: 0.0 };
        for v in values {
            if v == f64::INFINITY {
                key.inf += 1;
            } else {
                key.sum += v;
            }
        }
        key
    }

    fn cmp(&self, other: &Key) -> Ordering {
        self.inf.cmp(&other.inf).then(self.sum.total_cmp(&other.sum))
    }

    /// Strictly better beyond a relative tolerance, to avoid cycling on
    /// rounding noise.
    fn improves_on(&self, cur: &Key) -> bool {
        self.inf < cur.inf
            || (self.inf == cur.inf && self.sum < cur.sum - 1e-12 * cur.sum.abs().max(1.0))
    }
}

/// Greedy construction: repeatedly open the candidate that most reduces
/// the objective, lowest index on ties.
pub fn greedy_seed(inst: &FlpInstance) -> Vec<usize> {
    let (n, p) = (inst.n(), inst.p());
    let mut cur = vec![f64::INFINITY; p];
    let mut open = Vec::with_capacity(inst.m);
    let mut is_open = vec![false; n];
    for _ in 0..inst.m {
        let mut best: Option<(Key, usize)> = None;
        for j in (0..n).filter(|&j| !is_open[j]) {
            let row = inst.cost.row(j);
            let key = Key::of((0..p).map(|k| cur[k].min(row[k])));
            if best.is_none_or(|(b, _)| key.cmp(&b) == Ordering::Less) {
                best = Some((key, j));
            }
        }
        let (_, j) = best.expect("a closed candidate remains while fewer than n are open");
        is_open[j] = true;
        open.push(j);
        for (c, &r) in cur.iter_mut().zip(inst.cost.row(j)) {
            *c = c.min(r);
        }
    }
    open.sort_unstable();
    open
}

/// Best and second-best open assignment cost of every target.
struct Assignment {
    best: Vec<f64>,
    best_at: Vec<usize>,
    second: Vec<f64>,
}

impl Assignment {
    fn new(inst: &FlpInstance, open: &[usize]) -> Self {
        let p = inst.p();
        let mut a = Assignment {
            best: vec![f64::INFINITY; p],
            best_at: vec![usize::MAX; p],
            second: vec![f64::INFINITY; p],
        };
        for &j in open {
            for (k, &c) in inst.cost.row(j).iter().enumerate() {
                if c < a.best[k] || a.best_at[k] == usize::MAX {
                    a.second[k] = a.best[k];
                    a.best[k] = c;
                    a.best_at[k] = j;
                } else if c < a.second[k] {
                    a.second[k] = c;
                }
            }
        }
        a
    }

    fn key(&self) -> Key {
        Key::of(self.best.iter().copied())
    }

    /// Objective after closing `out` and opening `inc`.
    fn swap_key(&self, inst: &FlpInstance, out: usize, inc: usize) -> Key {
        let row = inst.cost.row(inc);
        Key::of((0..row.len()).map(|k| {
            let base = if self.best_at[k] == out {
                self.second[k]
            } else {
                self.best[k]
            };
            base.min(row[k])
        }))
    }
}

/// Best-improvement single-swap local search from `start` until no swap
/// improves the objective.
pub fn local_search_from(inst: &FlpInstance, start: Vec<usize>) -> FlpSolution {
    let n = inst.n();
    let mut open = start;
    open.sort_unstable();
    let mut swaps = 0;
    loop {
        let asg = Assignment::new(inst, &open);
        let cur = asg.key();
        let mut is_open = vec![false; n];
        for &j in &open {
            is_open[j] = true;
        }
        let mut best: Option<(Key, usize, usize)> = None;
        for (oi, &out) in open.iter().enumerate() {
            for inc in (0..n).filter(|&j| !is_open[j]) {
                let key = asg.swap_key(inst, out, inc);
                if best.is_none_or(|(b, _, _)| key.cmp(&b) == Ordering::Less) {
                    best = Some((key, oi, inc));
                }
            }
        }
        match best {
            Some((key, oi, inc)) if key.improves_on(&cur) => {
                open[oi] = inc;
                open.sort_unstable();
                swaps += 1;
            }
            _ => break,
        }
    }
    let objective = inst.objective(&open);
    FlpSolution {
        open,
        objective,
        optimal: false,
        nodes: swaps,
    }
}

/// Greedy seed followed by swap local search.
pub fn local_search(inst: &FlpInstance) -> FlpSolution {
    local_search_from(inst, greedy_seed(inst))
}

/// Whether no single swap of `open` improves the objective beyond the
/// local-search tolerance.
pub fn is_swap_optimal(inst: &FlpInstance, open: &[usize]) -> bool {
    let asg = Assignment::new(inst, open);
    let cur = asg.key();
    (0..inst.n())
        .filter(|j| !open.contains(j))
        .all(|inc| open.iter().all(|&out| !asg.swap_key(inst, out, inc).improves_on(&cur)))
}

const ROOT_SUBGRADIENT_ITERS: usize = 100;
const NODE_SUBGRADIENT_ITERS: usize = 25;
/// Nodes whose bound ties the incumbent within rounding that are still
/// explored, so that a completion cheaper by a few ulps is not lost.
const TIE_NODE_BUDGET: usize = 2_000;

#[derive(Clone, Copy, PartialEq, Eq)]
enum Status {
    Free,
    In,
    Out,
}

struct BranchAndBound<'a> {
    inst: &'a FlpInstance,
    best_open: Vec<usize>,
    ub: f64,
    nodes: usize,
    limit: usize,
    hit_limit: bool,
    tie_nodes: usize,
}

fn tie_margin(bound: f64) -> f64 {
    1e-12 * bound.abs().max(1.0)
}

impl BranchAndBound<'_> {
    /// Prunes on a bound carrying rounding error, so a node is cut only
    /// when its bound clears the incumbent by a margin.
    fn prunes(&self, bound: f64) -> bool {
        self.ub.is_finite() && bound - tie_margin(bound) >= self.ub
    }

    /// Whether `bound` equals the incumbent up to rounding.
    fn ties(&self, bound: f64) -> bool {
        self.ub.is_finite() && bound + tie_margin(bound) >= self.ub
    }

    fn offer(&mut self, open: Vec<usize>) {
        let obj = self.inst.objective(&open);
        if obj < self.ub || (self.ub == f64::INFINITY && self.best_open.is_empty()) {
            self.ub = obj;
            self.best_open = open;
        }
    }

    /// Lagrangian bound for the subproblem, improving `lambda` in place.
    /// Returns the bound and the reduced costs of the best multipliers.
    fn lagrangian(&self, status: &[Status], need: usize, lambda: &mut [f64], iters: usize) -> (f64, Vec<f64>) {
        let (n, p) = (self.inst.n(), self.inst.p());
        let cost = &self.inst.cost;
        let mut best_bound = f64::NEG_INFINITY;
        let mut best_rho = vec![0.0; n];
        let mut best_lambda = lambda.to_vec();
        let mut mu = 2.0;
        let mut stall = 0;
        let mut rho = vec![0.0; n];
        let mut order: Vec<usize> = Vec::with_capacity(n);
        for _ in 0..iters {
            for j in 0..n {
                rho[j] = if status[j] == Status::Out {
                    0.0
                } else {
                    cost.row(j)
                        .iter()
                        .zip(lambda.iter())
                        .map(|(&c, &l)| (c - l).min(0.0))
                        .sum()
                };
            }
            order.clear();
            order.extend((0..n).filter(|&j| status[j] == Status::Free));
            order.sort_by(|&a, &b| rho[a].total_cmp(&rho[b]).then(a.cmp(&b)));
            let opened: Vec<usize> = (0..n)
                .filter(|&j| status[j] == Status::In)
                .chain(order.iter().copied().take(need))
                .collect();
            let bound = lambda.iter().sum::<f64>() + opened.iter().map(|&j| rho[j]).sum::<f64>();
            if bound > best_bound {
                best_bound = bound;
                best_rho.copy_from_slice(&rho);
                best_lambda.copy_from_slice(lambda);
                stall = 0;
            } else {
                stall += 1;
                if stall >= 5 {
                    mu *= 0.5;
                    stall = 0;
                }
            }
            if self.prunes(best_bound) || mu < 1e-4 {
                break;
            }
            let mut g = vec![1.0; p];
            for &j in &opened {
                for (k, (&c, &l)) in cost.row(j).iter().zip(lambda.iter()).enumerate() {
                    if c < l {
                        g[k] -= 1.0;
                    }
                }
            }
            let norm2: f64 = g.iter().map(|x| x * x).sum();
            if norm2 == 0.0 {
                break;
            }
            let target = if self.ub.is_finite() {
                self.ub
            } else {
                bound + 0.1 * bound.abs() + 1.0
            };
            let step = mu * (target - bound).max(1e-12) / norm2;
            for (l, gk) in lambda.iter_mut().zip(&g) {
                *l += step * gk;
            }
        }
        lambda.copy_from_slice(&best_lambda);
        (best_bound, best_rho)
    }

    fn column_min_bound(&self, status: &[Status]) -> f64 {
        let cost = &self.inst.cost;
        (0..self.inst.p())
            .map(|k| {
                (0..self.inst.n())
                    .filter(|&j| status[j] != Status::Out)
                    .map(|j| cost.get(j, k))
                    .fold(f64::INFINITY, f64::min)
            })
            .sum()
    }

    fn search(&mut self, status: &mut [Status], n_in: usize, n_free: usize, mut lambda: Vec<f64>, root: bool) {
        if self.nodes >= self.limit {
            self.hit_limit = true;
            return;
        }
        self.nodes += 1;
        let need = self.inst.m - n_in;
        let collect = |status: &[Status], with_free: bool| -> Vec<usize> {
            (0..status.len())
                .filter(|&j| status[j] == Status::In || (with_free && status[j] == Status::Free))
                .collect()
        };
        if need == 0 {
            self.offer(collect(status, false));
            return;
        }
        if need == n_free {
            self.offer(collect(status, true));
            return;
        }
        // Sums of column minima in target order never exceed the objective
        // of any completion, rounding included.
        let cm = self.column_min_bound(status);
        if cm >= self.ub {
            return;
        }
        let iters = if root {
            ROOT_SUBGRADIENT_ITERS
        } else {
            NODE_SUBGRADIENT_ITERS
        };
        let (lb, rho) = self.lagrangian(status, need, &mut lambda, iters);
        if self.prunes(lb) {
            return;
        }
        if self.ties(lb) {
            // Cost matrices with few distinct values tie on many subtrees;
            // past the budget these are cut like any dominated node.
            if self.tie_nodes >= TIE_NODE_BUDGET {
                return;
            }
            self.tie_nodes += 1;
        }
        let j = (0..status.len())
            .filter(|&j| status[j] == Status::Free)
            .min_by(|&a, &b| rho[a].total_cmp(&rho[b]).then(a.cmp(&b)))
            .expect("free candidates remain");
        status[j] = Status::In;
        self.search(status, n_in + 1, n_free - 1, lambda.clone(), false);
        status[j] = Status::Out;
        self.search(status, n_in, n_free - 1, lambda, false);
        status[j] = Status::Free;
    }
}

/// Branch and bound seeded with the local-search incumbent. Exact unless
/// the node budget runs out; once many subtrees tie the incumbent, exact
/// up to a relative `1e-12`.
pub fn solve_exact(inst: &FlpInstance, node_limit: usize) -> FlpSolution {
    let seed = local_search(inst);
    let (n, p) = (inst.n(), inst.p());
    let mut bb = BranchAndBound {
        inst,
        ub: seed.objective,
        best_open: seed.open,
        nodes: 0,
        limit: node_limit.max(1),
        hit_limit: false,
        tie_nodes: 0,
    };
    let lambda: Vec<f64> = (0..p)
        .map(|k| {
            let mut col: Vec<f64> = (0..n)
                .map(|j| inst.cost.get(j, k))
                .filter(|c| c.is_finite())
                .collect();
            col.sort_by(f64::total_cmp);
            col.get(1).or(col.first()).copied().unwrap_or(0.0)
        })
        .collect();
    let mut status = vec![Status::Free; n];
    bb.search(&mut status, 0, n, lambda, true);
    FlpSolution {
        objective: inst.objective(&bb.best_open),
        open: bb.best_open,
        optimal: !bb.hit_limit,
        nodes: bb.nodes,
    }
}

/// Solves the p-median instance of `sm` with `m` drivers using the engine
/// selected in `params`. Unreachable targets are reported by node index.
pub fn flp_solve(sm: &StructureMatrices, m: usize, params: &FlpParams) -> Result<FlpSolution> {
    let inst = FlpInstance::new(sm.cost.clone(), m).map_err(|e| match e {
        Error::UnreachableTarget { target } => Error::UnreachableTarget {
            target: sm.targets.indices()[target],
        },
        other => other,
    })?;
    let exact = match params.engine {
        FlpEngine::Auto => inst.n() <= params.exact_max_n,
        FlpEngine::Exact => true,
        FlpEngine::LocalSearch => false,
    };
    Ok(if exact {
        solve_exact(&inst, params.node_limit)
    } else {
        local_search(&inst)
    })
}

/// Nonzero entries `(row, column, coefficient)` of the integer program's
/// constraint matrix. Columns are the open variables `Y_j` followed by the
/// assignment variables `Z_{j,k}` at `n + j p + k`. Rows: the cardinality
/// row `Σ_j Y_j = m`, one assignment row `Σ_j Z_{j,k} = 1` per target, and
/// one linking row `Z_{j,k} - Y_j <= 0` per pair.
pub fn constraint_entries(n: usize, p: usize) -> impl Iterator<Item = (usize, usize, i8)> {
    let z = move |j: usize, k: usize| n + j * p + k;
    let cardinality = (0..n).map(|j| (0, j, 1));
    let assignment = (0..p).flat_map(move |k| (0..n).map(move |j| (1 + k, z(j, k), 1)));
    let linking = (0..n).flat_map(move |j| {
        (0..p).flat_map(move |k| {
            let row = 1 + p + j * p + k;
            [(row, z(j, k), 1), (row, j, -1)]
        })
    });
    cardinality.chain(assignment).chain(linking)
}

/// Nonzero count of the constraint matrix, by enumeration.
pub fn check_ilp_size(n: usize, p: usize) -> usize {
    constraint_entries(n, p).count()
}
