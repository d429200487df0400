//! Directed graphs with uniform edge and loop weights, and the state matrix
//! they induce.
//!
//! An edge `(j, k)` reads "from `v_j` to `v_k`" and contributes the entry
//! `A[k][j] = gamma` of the state matrix; every diagonal entry is `-nu`.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;

/// A simple directed graph with uniform edge weight `gamma` and uniform loop
/// weight `-nu`.
///
/// Undirected graphs are stored as symmetric pairs of directed edges; the
/// `directed` flag only controls how the graph is written to disk.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Graph {
    n: usize,
    edges: Vec<(usize, usize)>,
    gamma: f64,
    nu: f64,
    directed: bool,
    #[serde(skip)]
    out_adj: Vec<Vec<usize>>,
    #[serde(skip)]
    in_adj: Vec<Vec<usize>>,
}

impl Graph {
    /// Builds a directed graph. Rejects self loops, duplicate edges,
    /// out-of-range endpoints, and non-positive weights.
    pub fn directed<I>(n: usize, edges: I, gamma: f64, nu: f64) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        let mut set = BTreeSet::new();
        for (j, k) in edges {
            check_edge(n, j, k)?;
            if !set.insert((j, k)) {
                return Err(Error::InvalidGraph(format!("duplicate edge ({j}, {k})")));
            }
        }
        Self::from_set(n, set, gamma, nu, true)
    }

    /// Builds an undirected graph; each pair becomes two directed edges.
    /// A pair listed twice (in either orientation) is a duplicate.
    pub fn undirected<I>(n: usize, pairs: I, gamma: f64, nu: f64) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        let mut set = BTreeSet::new();
        for (j, k) in pairs {
            check_edge(n, j, k)?;
            if !set.insert((j, k)) || !set.insert((k, j)) {
                return Err(Error::InvalidGraph(format!("duplicate edge ({j}, {k})")));
            }
        }
        Self::from_set(n, set, gamma, nu, false)
    }

    pub(crate) fn from_set(
        n: usize,
        set: BTreeSet<(usize, usize)>,
        gamma: f64,
        nu: f64,
        directed: bool,
    ) -> Result<Self> {
        if !(gamma > 0.0 && gamma.is_finite()) {
            return Err(Error::InvalidGraph(format!("gamma must be positive, got {gamma}")));
        }
        if !(nu > 0.0 && nu.is_finite()) {
            return Err(Error::InvalidGraph(format!("nu must be positive, got {nu}")));
        }
        let edges: Vec<_> = set.into_iter().collect();
        let mut out_adj = vec![Vec::new(); n];
        let mut in_adj = vec![Vec::new(); n];
        for &(j, k) in &edges {
            out_adj[j].push(k);
            in_adj[k].push(j);
        }
        Ok(Graph {
            n,
            edges,
            gamma,
            nu,
            directed,
            out_adj,
            in_adj,
        })
    }

    /// Same topology with different weights.
    pub fn with_weights(&self, gamma: f64, nu: f64) -> Result<Self> {
        Self::from_set(
            self.n,
            self.edges.iter().copied().collect(),
            gamma,
            nu,
            self.directed,
        )
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }

    pub fn is_directed(&self) -> bool {
        self.directed
    }

    /// Directed edges in lexicographic order.
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn has_edge(&self, j: usize, k: usize) -> bool {
        self.edges.binary_search(&(j, k)).is_ok()
    }

    /// Nodes `k` with an edge `j -> k`.
    pub fn out_neighbors(&self, j: usize) -> &[usize] {
        &self.out_adj[j]
    }

    /// Nodes `k` with an edge `k -> j`.
    pub fn in_neighbors(&self, j: usize) -> &[usize] {
        &self.in_adj[j]
    }

    pub fn in_degree(&self, j: usize) -> usize {
        self.in_adj[j].len()
    }

    pub fn out_degree(&self, j: usize) -> usize {
        self.out_adj[j].len()
    }

    /// Largest in- or out-degree over all nodes.
    pub fn max_degree(&self) -> usize {
        (0..self.n)
            .map(|j| self.in_degree(j).max(self.out_degree(j)))
            .max()
            .unwrap_or(0)
    }

    /// Loop weight for which every Gershgorin disc of the state matrix lies in
    /// the open left half plane: `gamma * (k_max + 1)`.
    pub fn gershgorin_nu(&self) -> f64 {
        self.gamma * (self.max_degree() as f64 + 1.0)
    }

    /// Dense state matrix: `-nu` on the diagonal, `gamma` at `(k, j)` for each
    /// edge `j -> k`.
    pub fn state_matrix(&self) -> DMatrix<f64> {
        let mut a = DMatrix::from_diagonal_element(self.n, self.n, -self.nu);
        for &(j, k) in &self.edges {
            a[(k, j)] = self.gamma;
        }
        a
    }

    /// True iff the spectral abscissa of the state matrix is below `-tol`.
    pub fn is_hurwitz(&self, tol: f64) -> Result<bool> {
        let abscissa = linalg::spectral_abscissa(&self.state_matrix())?;
        Ok(abscissa < -tol)
    }

    /// Serializes to the edge-list text format.
    ///
    /// Undirected graphs list each pair once with `j < k`.
    pub fn to_edge_list(&self) -> String {
        let mut out = format!(
            "n {} gamma {} nu {} directed {}\n",
            self.n,
            self.gamma,
            self.nu,
            u8::from(self.directed)
        );
        for &(j, k) in &self.edges {
            if self.directed || j < k {
                let _ = writeln!(out, "{j} {k}");
            }
        }
        out
    }

    /// Parses the edge-list text format. `origin` labels parse errors.
    pub fn parse_edge_list(text: &str, origin: &Path) -> Result<Self> {
        let err = |line: usize, msg: String| Error::Parse {
            path: origin.to_path_buf(),
            line,
            msg,
        };
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));

        let (hline, header) = lines
            .next()
            .ok_or_else(|| err(1, "missing header line".into()))?;
        let toks: Vec<&str> = header.split_whitespace().collect();
        if toks.len() != 8
            || toks[0] != "n"
            || toks[2] != "gamma"
            || toks[4] != "nu"
            || toks[6] != "directed"
        {
            return Err(err(
                hline,
                "expected `n <count> gamma <real> nu <real> directed <0|1>`".into(),
            ));
        }
        let n: usize = toks[1]
            .parse()
            .map_err(|e| err(hline, format!("bad node count: {e}")))?;
        let gamma: f64 = toks[3]
            .parse()
            .map_err(|e| err(hline, format!("bad gamma: {e}")))?;
        let nu: f64 = toks[5]
            .parse()
            .map_err(|e| err(hline, format!("bad nu: {e}")))?;
        let directed = match toks[7] {
            "0" => false,
            "1" => true,
            other => return Err(err(hline, format!("bad directed flag `{other}`"))),
        };

        let mut set = BTreeSet::new();
        for (lno, line) in lines {
            let mut it = line.split_whitespace();
            let (Some(a), Some(b), None) = (it.next(), it.next(), it.next()) else {
                return Err(err(lno, format!("expected `j k`, got `{line}`")));
            };
            let j: usize = a.parse().map_err(|e| err(lno, format!("bad node `{a}`: {e}")))?;
            let k: usize = b.parse().map_err(|e| err(lno, format!("bad node `{b}`: {e}")))?;
            check_edge(n, j, k).map_err(|e| err(lno, e.to_string()))?;
            let fresh = if directed {
                set.insert((j, k))
            } else {
                set.insert((j, k)) && set.insert((k, j))
            };
            if !fresh {
                return Err(err(lno, format!("duplicate edge ({j}, {k})")));
            }
        }
        Self::from_set(n, set, gamma, nu, directed).map_err(|e| err(hline, e.to_string()))
    }
}

fn check_edge(n: usize, j: usize, k: usize) -> Result<()> {
    if j >= n || k >= n {
        return Err(Error::InvalidGraph(format!(
            "edge ({j}, {k}) out of range for {n} nodes"
        )));
    }
    if j == k {
        return Err(Error::InvalidGraph(format!("self loop at node {j}")));
    }
    Ok(())
}

/// Reads a graph from an edge-list file.
pub fn read_edge_list(path: impl AsRef<Path>) -> Result<Graph> {
    let path = path.as_ref();
    let text = fs::read_to_string(path)?;
    Graph::parse_edge_list(&text, path)
}

/// Writes a graph as an edge-list file.
pub fn write_edge_list(g: &Graph, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, g.to_edge_list())?;
    Ok(())
}

/// Strictly increasing list of distinct node indices below `n`.
///
/// Used for driver sets, target sets, and candidate pools.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(into = "Vec<usize>", try_from = "Vec<usize>")]
pub struct NodeSet {
    indices: Vec<usize>,
}

impl NodeSet {
    /// Sorts `indices`; fails on duplicates or indices `>= n`.
    pub fn new(mut indices: Vec<usize>, n: usize) -> Result<Self> {
        indices.sort_unstable();
        if let Some(w) = indices.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::InvalidNodeSet(format!("duplicate node {}", w[0])));
        }
        if let Some(&last) = indices.last() {
            if last >= n {
                return Err(Error::InvalidNodeSet(format!(
                    "node {last} out of range for {n} nodes"
                )));
            }
        }
        Ok(NodeSet { indices })
    }

    /// All nodes `0..n`.
    pub fn all(n: usize) -> Self {
        NodeSet {
            indices: (0..n).collect(),
        }
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn contains(&self, j: usize) -> bool {
        self.indices.binary_search(&j).is_ok()
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.indices.iter().copied()
    }

    /// Selector matrix with one row per member: `C[i][indices[i]] = 1`.
    pub fn row_selector(&self, n: usize) -> DMatrix<f64> {
        let mut c = DMatrix::zeros(self.len(), n);
        for (i, &j) in self.indices.iter().enumerate() {
            c[(i, j)] = 1.0;
        }
        c
    }

    /// Input matrix with one versor column per member.
    pub fn column_selector(&self, n: usize) -> DMatrix<f64> {
        self.row_selector(n).transpose()
    }
}

impl From<NodeSet> for Vec<usize> {
    fn from(s: NodeSet) -> Self {
        s.indices
    }
}

impl TryFrom<Vec<usize>> for NodeSet {
    type Error = Error;

    fn try_from(indices: Vec<usize>) -> Result<Self> {
        NodeSet::new(indices, usize::MAX)
    }
}

impl<'a> IntoIterator for &'a NodeSet {
    type Item = usize;
    type IntoIter = std::iter::Copied<std::slice::Iter<'a, usize>>;

    fn into_iter(self) -> Self::IntoIter {
        self.indices.iter().copied()
    }
}
