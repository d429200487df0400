//! Structural surrogates: hop distances, shortest-path redundancy, and the
//! pairwise cost `c[j][k]` that drives facility-location selection.

use std::collections::VecDeque;
use std::fs;
use std::path::Path;

use num_rational::Ratio;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Graph, NodeSet};

/// Hop count; `None` means unreachable.
pub type Hops = Option<u32>;

/// Exact redundancy value `(|V| - 2) / (d - 1)`.
pub type Redundancy = Ratio<u64>;

/// Hop distances from `src` along edge direction.
pub fn bfs_from(g: &Graph, src: usize) -> Vec<Hops> {
    bfs(g.n(), src, |v| g.out_neighbors(v))
}

/// Hop distances to `dst`, i.e. BFS over reversed edges.
pub fn bfs_to(g: &Graph, dst: usize) -> Vec<Hops> {
    bfs(g.n(), dst, |v| g.in_neighbors(v))
}

fn bfs<'a, F>(n: usize, root: usize, next: F) -> Vec<Hops>
where
    F: Fn(usize) -> &'a [usize],
{
    let mut dist = vec![None; n];
    dist[root] = Some(0);
    let mut queue = VecDeque::from([root]);
    while let Some(v) = queue.pop_front() {
        let dv = dist[v].unwrap_or(0);
        for &w in next(v) {
            if dist[w].is_none() {
                dist[w] = Some(dv + 1);
                queue.push_back(w);
            }
        }
    }
    dist
}

/// `dist[j][i]`: hops from candidate `j` to the `i`-th target.
pub fn all_pairs_distance(g: &Graph, targets: &NodeSet) -> Vec<Vec<Hops>> {
    let cols: Vec<Vec<Hops>> = targets.indices().par_iter().map(|&k| bfs_to(g, k)).collect();
    (0..g.n())
        .map(|j| cols.iter().map(|col| col[j]).collect())
        .collect()
}

/// Redundancy between `j` and `k` from a forward BFS row of `j` and a reverse
/// BFS row of `k`. Requires a finite distance of at least 2.
pub fn redundancy(j: usize, k: usize, dist_from_j: &[Hops], dist_to_k: &[Hops]) -> Result<Redundancy> {
    let d = match dist_from_j[k] {
        Some(d) if d >= 2 => d,
        other => {
            return Err(Error::InvalidParameter(format!(
                "redundancy needs distance >= 2 between {j} and {k}, got {other:?}"
            )))
        }
    };
    let on_path = dist_from_j
        .iter()
        .zip(dist_to_k)
        .filter(|(a, b)| matches!((a, b), (Some(x), Some(y)) if x + y == d))
        .count() as u64;
    Ok(Ratio::new(on_path - 2, u64::from(d) - 1))
}

/// Pairwise cost `log( (2 nu / r^2) (nu / gamma)^(2d) sqrt(pi d) )`.
///
/// `d = 1` uses `r = 1`, `d = 0` prices the node itself as `log(2 nu)`, and
/// unreachable pairs cost `+inf`. `r` is ignored unless `d >= 2`.
pub fn pairwise_cost(d: Hops, r: Option<Redundancy>, gamma: f64, nu: f64) -> Result<f64> {
    if !(gamma > 0.0) || !(nu > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "gamma and nu must be positive, got {gamma} and {nu}"
        )));
    }
    let Some(d) = d else {
        return Ok(f64::INFINITY);
    };
    if d == 0 {
        return Ok((2.0 * nu).ln());
    }
    let r = if d == 1 {
        1.0
    } else {
        let r = r.ok_or_else(|| {
            Error::InvalidParameter(format!("redundancy required at distance {d}"))
        })?;
        *r.numer() as f64 / *r.denom() as f64
    };
    let d = f64::from(d);
    Ok((2.0 * nu).ln() - 2.0 * r.ln() + 2.0 * d * (nu / gamma).ln()
        + 0.5 * (std::f64::consts::PI * d).ln())
}

/// Row-major `n x p` matrix of extended-real assignment costs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CostMatrix {
    n: usize,
    p: usize,
    data: Vec<f64>,
}

impl CostMatrix {
    pub fn new(n: usize, p: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != n * p {
            return Err(Error::InvalidParameter(format!(
                "cost data has {} entries, expected {n}x{p}",
                data.len()
            )));
        }
        if data.iter().any(|c| c.is_nan() || *c == f64::NEG_INFINITY) {
            return Err(Error::InvalidParameter("costs must be finite or +inf".into()));
        }
        Ok(CostMatrix { n, p, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let p = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != p) {
            return Err(Error::InvalidParameter("ragged cost rows".into()));
        }
        Self::new(rows.len(), p, rows.concat())
    }

    /// Number of candidates.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of targets.
    pub fn p(&self) -> usize {
        self.p
    }

    #[inline]
    pub fn get(&self, j: usize, k: usize) -> f64 {
        self.data[j * self.p + k]
    }

    pub fn row(&self, j: usize) -> &[f64] {
        &self.data[j * self.p..(j + 1) * self.p]
    }

    /// Sum over targets of the cheapest driver; `+inf` if some target has no
    /// finite-cost driver. `drivers` must be nonempty.
    pub fn set_cost(&self, drivers: &[usize]) -> Result<f64> {
        if drivers.is_empty() {
            return Err(Error::InvalidNodeSet("driver set is empty".into()));
        }
        if let Some(&j) = drivers.iter().find(|&&j| j >= self.n) {
            return Err(Error::InvalidNodeSet(format!("driver {j} out of range")));
        }
        Ok((0..self.p)
            .map(|k| {
                drivers
                    .iter()
                    .map(|&j| self.get(j, k))
                    .fold(f64::INFINITY, f64::min)
            })
            .sum())
    }

    /// Sum of column minima: the cost of opening every candidate.
    pub fn lower_bound(&self) -> f64 {
        (0..self.p)
            .map(|k| (0..self.n).map(|j| self.get(j, k)).fold(f64::INFINITY, f64::min))
            .sum()
    }
}

/// Distances, redundancies, and pairwise costs for every candidate (all
/// nodes) against each target.
#[derive(Clone, Debug, PartialEq)]
pub struct StructureMatrices {
    pub targets: NodeSet,
    /// `n x p` hop distances.
    pub dist: Vec<Vec<Hops>>,
    /// `n x p` redundancies, defined where the distance is finite and >= 2.
    pub redundancy: Vec<Vec<Option<Redundancy>>>,
    pub cost: CostMatrix,
}

/// Assembles [`StructureMatrices`] with one reverse BFS per target and one
/// forward BFS per candidate.
pub fn structure_matrices(g: &Graph, targets: &NodeSet) -> Result<StructureMatrices> {
    let n = g.n();
    if targets.indices().last().is_some_and(|&k| k >= n) {
        return Err(Error::InvalidNodeSet("target out of range".into()));
    }
    let to_target: Vec<Vec<Hops>> = targets.indices().par_iter().map(|&k| bfs_to(g, k)).collect();

    let rows: Vec<(Vec<Hops>, Vec<Option<Redundancy>>, Vec<f64>)> = (0..n)
        .into_par_iter()
        .map(|j| {
            let from_j = bfs_from(g, j);
            let mut dist = Vec::with_capacity(targets.len());
            let mut red = Vec::with_capacity(targets.len());
            let mut cost = Vec::with_capacity(targets.len());
            for (i, &k) in targets.indices().iter().enumerate() {
                let d = from_j[k];
                let r = match d {
                    Some(x) if x >= 2 => Some(redundancy(j, k, &from_j, &to_target[i])?),
                    _ => None,
                };
                cost.push(pairwise_cost(d, r, g.gamma(), g.nu())?);
                dist.push(d);
                red.push(r);
            }
            Ok((dist, red, cost))
        })
        .collect::<Result<_>>()?;

    let mut dist = Vec::with_capacity(n);
    let mut redundancy = Vec::with_capacity(n);
    let mut data = Vec::with_capacity(n * targets.len());
    for (d, r, c) in rows {
        dist.push(d);
        redundancy.push(r);
        data.extend(c);
    }
    Ok(StructureMatrices {
        targets: targets.clone(),
        dist,
        redundancy,
        cost: CostMatrix::new(n, targets.len(), data)?,
    })
}

/// Facility-location cost of a driver set.
pub fn flp_set_cost(sm: &StructureMatrices, drivers: &NodeSet) -> Result<f64> {
    sm.cost.set_cost(drivers.indices())
}

impl StructureMatrices {
    /// Writes `dist.csv`, `redundancy.csv`, and `cost.csv` into `dir`; rows
    /// are candidates, columns targets.
    pub fn write_csv(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        fs::create_dir_all(dir)?;
        let header: Vec<String> = self.targets.iter().map(|k| format!("t{k}")).collect();
        let write = |name: &str, cell: &dyn Fn(usize, usize) -> String| -> Result<()> {
            let mut w = csv::Writer::from_path(dir.join(name))?;
            let mut h = vec!["candidate".to_string()];
            h.extend(header.iter().cloned());
            w.write_record(&h)?;
            for j in 0..self.dist.len() {
                let mut rec = vec![j.to_string()];
                rec.extend((0..self.targets.len()).map(|i| cell(j, i)));
                w.write_record(&rec)?;
            }
            w.flush()?;
            Ok(())
        };
        write("dist.csv", &|j, i| {
            self.dist[j][i].map_or_else(|| "inf".to_string(), |d| d.to_string())
        })?;
        write("redundancy.csv", &|j, i| {
            self.redundancy[j][i].map_or_else(String::new, |r| r.to_string())
        })?;
        write("cost.csv", &|j, i| format!("{}", self.cost.get(j, i)))?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn path3() -> Graph {
        Graph::directed(3, [(0, 1), (1, 2)], 1.0, 1.0).unwrap()
    }

    #[test]
    fn path_distances() {
        let g = path3();
        let t = NodeSet::new(vec![2], 3).unwrap();
        let d = all_pairs_distance(&g, &t);
        assert_eq!(d, vec![vec![Some(2)], vec![Some(1)], vec![Some(0)]]);
        let t = NodeSet::new(vec![0], 3).unwrap();
        assert_eq!(all_pairs_distance(&g, &t)[2][0], None);
    }

    #[test]
    fn path_redundancy_is_one() {
        let g = Graph::directed(5, [(0, 1), (1, 2), (2, 3), (3, 4)], 1.0, 1.0).unwrap();
        for (j, k) in [(0, 2), (0, 4), (1, 4)] {
            let r = redundancy(j, k, &bfs_from(&g, j), &bfs_to(&g, k)).unwrap();
            assert_eq!(r, Ratio::from_integer(1));
        }
        assert!(redundancy(0, 1, &bfs_from(&g, 0), &bfs_to(&g, 1)).is_err());
        assert!(redundancy(4, 0, &bfs_from(&g, 4), &bfs_to(&g, 0)).is_err());
    }

    #[test]
    fn two_disjoint_routes() {
        // 0 -> {1, 2} -> 3, plus a longer detour that is not shortest.
        let g = Graph::directed(6, [(0, 1), (0, 2), (1, 3), (2, 3), (0, 4), (4, 5), (5, 3)], 1.0, 1.0)
            .unwrap();
        let from = bfs_from(&g, 0);
        let to = bfs_to(&g, 3);
        // Brute force: nodes with d(0, l) + d(l, 3) == d(0, 3).
        let on: Vec<usize> = (0..6)
            .filter(|&l| matches!((from[l], to[l]), (Some(a), Some(b)) if a + b == 2))
            .collect();
        assert_eq!(on, vec![0, 1, 2, 3]);
        assert_eq!(redundancy(0, 3, &from, &to).unwrap(), Ratio::from_integer(2));
    }

    #[test]
    fn cost_values() {
        let c = pairwise_cost(Some(2), Some(Ratio::from_integer(3)), 1.0, 1.0).unwrap();
        assert_relative_eq!(c, ((2.0 / 9.0) * (2.0 * std::f64::consts::PI).sqrt()).ln(), max_relative = 1e-14);
        assert_relative_eq!(c, -0.5852, epsilon = 1e-4);
        assert_relative_eq!(pairwise_cost(Some(0), None, 1.0, 1.0).unwrap(), 2f64.ln());
        let c1 = pairwise_cost(Some(1), None, 1.0, 1.0).unwrap();
        assert_relative_eq!(c1, (2.0 * std::f64::consts::PI.sqrt()).ln(), max_relative = 1e-14);
        assert_relative_eq!(c1, 1.2655, epsilon = 1e-4);
        assert_eq!(pairwise_cost(None, None, 1.0, 1.0).unwrap(), f64::INFINITY);
        assert!(pairwise_cost(Some(1), None, 0.0, 1.0).is_err());
        assert!(pairwise_cost(Some(3), None, 1.0, 1.0).is_err());
    }

    #[test]
    fn set_cost_by_hand() {
        let c = CostMatrix::from_rows(&[vec![1.0, 5.0], vec![4.0, 2.0]]).unwrap();
        assert_eq!(c.set_cost(&[0]).unwrap(), 6.0);
        assert_eq!(c.set_cost(&[0, 1]).unwrap(), 3.0);
        assert_eq!(c.set_cost(&[0, 1]).unwrap(), c.lower_bound());
        assert!(c.set_cost(&[]).is_err());
    }

    #[test]
    fn edgeless_graph_costs_only_on_diagonal() {
        let g = Graph::directed(3, [], 1.0, 1.0).unwrap();
        let sm = structure_matrices(&g, &NodeSet::all(3)).unwrap();
        for j in 0..3 {
            for k in 0..3 {
                assert_eq!(sm.cost.get(j, k).is_finite(), j == k);
            }
        }
    }

    #[test]
    fn path_matrices_match_per_pair_ops() {
        let g = path3();
        let sm = structure_matrices(&g, &NodeSet::all(3)).unwrap();
        for j in 0..3 {
            let from = bfs_from(&g, j);
            for k in 0..3 {
                assert_eq!(sm.dist[j][k], from[k]);
                let r = match from[k] {
                    Some(d) if d >= 2 => Some(redundancy(j, k, &from, &bfs_to(&g, k)).unwrap()),
                    _ => None,
                };
                assert_eq!(sm.redundancy[j][k], r);
                let c = pairwise_cost(from[k], r, 1.0, 1.0).unwrap();
                assert_eq!(sm.cost.get(j, k), c);
            }
        }
    }

    #[test]
    fn csv_dump_writes_three_files() {
        let dir = tempfile::tempdir().unwrap();
        let sm = structure_matrices(&path3(), &NodeSet::new(vec![2], 3).unwrap()).unwrap();
        sm.write_csv(dir.path()).unwrap();
        let dist = std::fs::read_to_string(dir.path().join("dist.csv")).unwrap();
        assert_eq!(dist, "candidate,t2\n0,2\n1,1\n2,0\n");
        let red = std::fs::read_to_string(dir.path().join("redundancy.csv")).unwrap();
        assert_eq!(red, "candidate,t2\n0,1\n1,\n2,\n");
    }
}
