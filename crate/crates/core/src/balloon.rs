//! Directed balloon graphs: a driver `v0`, `b` disjoint directed paths of
//! length `d`, and a shared terminal `v_d`.
//!
//! The terminal's Gramian element has the closed form
//!
//! ```text
//! W_dd(t) = (b² / 2ν) (γ / 2ν)^{2d} C(2d, d) · P(2d + 1, 2νt)
//! ```
//!
//! where `P(a, x) = 1 - e^{-x} Σ_{k<a} x^k / k!` is the regularized lower
//! incomplete gamma function of integer order. This module is the reference
//! oracle the numeric Gramian code is checked against.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gramian::Horizon;
use crate::graph::Graph;

/// Balloon shape and weights.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BalloonSpec {
    pub d: u32,
    pub b: u32,
    pub gamma: f64,
    pub nu: f64,
}

impl BalloonSpec {
    pub fn new(d: u32, b: u32, gamma: f64, nu: f64) -> Result<Self> {
        let s = BalloonSpec { d, b, gamma, nu };
        s.validate()?;
        Ok(s)
    }

    fn validate(&self) -> Result<()> {
        if self.d < 1 || self.b < 1 {
            return Err(Error::InvalidParameter(format!(
                "balloon needs d >= 1 and b >= 1, got d={} b={}",
                self.d, self.b
            )));
        }
        if !(self.gamma > 0.0) || !(self.nu > 0.0) {
            return Err(Error::InvalidParameter("balloon weights must be positive".into()));
        }
        Ok(())
    }

    /// `2 + b (d - 1)`.
    pub fn node_count(&self) -> usize {
        2 + self.b as usize * (self.d as usize - 1)
    }

    /// Index of the driver `v0`.
    pub fn origin(&self) -> usize {
        0
    }

    /// Index of the terminal `v_d`.
    pub fn terminal(&self) -> usize {
        self.node_count() - 1
    }

    /// Index of the interior node at depth `depth` (1..d) on chain `chain`.
    pub fn interior(&self, chain: u32, depth: u32) -> usize {
        1 + chain as usize * (self.d as usize - 1) + (depth as usize - 1)
    }
}

/// Builds the balloon graph. Nodes: `v0 = 0`, chain `c` depth `l` at
/// `1 + c(d-1) + (l-1)`, terminal last. `d = 1` with `b > 1` would need
/// parallel edges and is rejected.
pub fn build_balloon(spec: &BalloonSpec) -> Result<Graph> {
    spec.validate()?;
    if spec.d == 1 && spec.b > 1 {
        return Err(Error::InvalidParameter(
            "d = 1 with b > 1 needs parallel edges".into(),
        ));
    }
    let n = spec.node_count();
    let term = spec.terminal();
    let mut edges = Vec::new();
    if spec.d == 1 {
        edges.push((0, term));
    } else {
        for c in 0..spec.b {
            edges.push((0, spec.interior(c, 1)));
            for l in 1..spec.d - 1 {
                edges.push((spec.interior(c, l), spec.interior(c, l + 1)));
            }
            edges.push((spec.interior(c, spec.d - 1), term));
        }
    }
    Graph::directed(n, edges, spec.gamma, spec.nu)
}

/// True iff relabeling every node `v` as `perm[v]` maps the edge set onto
/// itself.
pub fn is_symmetry(g: &Graph, perm: &[usize]) -> Result<bool> {
    let n = g.n();
    if perm.len() != n {
        return Err(Error::InvalidParameter(format!(
            "permutation has length {}, graph has {n} nodes",
            perm.len()
        )));
    }
    let mut seen = vec![false; n];
    for &v in perm {
        if v >= n || std::mem::replace(&mut seen[v], true) {
            return Err(Error::InvalidParameter("not a bijection".into()));
        }
    }
    Ok(g.edges().iter().all(|&(j, k)| g.has_edge(perm[j], perm[k])))
}

/// Node partition into orbits with its indicator matrix `E`.
#[derive(Clone, Debug, PartialEq)]
pub struct OrbitPartition {
    orbits: Vec<Vec<usize>>,
    orbit_of: Vec<usize>,
}

impl OrbitPartition {
    /// Validates that `orbits` are disjoint, nonempty, and cover `0..n`.
    pub fn new(orbits: Vec<Vec<usize>>, n: usize) -> Result<Self> {
        let mut orbit_of = vec![usize::MAX; n];
        for (i, orbit) in orbits.iter().enumerate() {
            if orbit.is_empty() {
                return Err(Error::InvalidParameter(format!("orbit {i} is empty")));
            }
            for &v in orbit {
                if v >= n {
                    return Err(Error::InvalidParameter(format!("node {v} out of range")));
                }
                if orbit_of[v] != usize::MAX {
                    return Err(Error::InvalidParameter(format!("node {v} in two orbits")));
                }
                orbit_of[v] = i;
            }
        }
        if let Some(v) = orbit_of.iter().position(|&o| o == usize::MAX) {
            return Err(Error::InvalidParameter(format!("node {v} in no orbit")));
        }
        Ok(OrbitPartition { orbits, orbit_of })
    }

    /// Every node in its own orbit.
    pub fn trivial(n: usize) -> Self {
        OrbitPartition {
            orbits: (0..n).map(|v| vec![v]).collect(),
            orbit_of: (0..n).collect(),
        }
    }

    pub fn orbits(&self) -> &[Vec<usize>] {
        &self.orbits
    }

    pub fn orbit_of(&self, v: usize) -> usize {
        self.orbit_of[v]
    }

    pub fn q(&self) -> usize {
        self.orbits.len()
    }

    /// `n x q` 0/1 orbit indicator.
    pub fn indicator(&self) -> DMatrix<f64> {
        let mut e = DMatrix::zeros(self.orbit_of.len(), self.q());
        for (v, &o) in self.orbit_of.iter().enumerate() {
            e[(v, o)] = 1.0;
        }
        e
    }
}

/// Orbits of the balloon under symmetries fixing the driver `v0`: `{v0}`,
/// one orbit per interior depth, `{v_d}`. Orbit `l` holds depth `l`.
pub fn balloon_orbits(spec: &BalloonSpec) -> Result<OrbitPartition> {
    spec.validate()?;
    let mut orbits = vec![vec![spec.origin()]];
    for l in 1..spec.d {
        orbits.push((0..spec.b).map(|c| spec.interior(c, l)).collect());
    }
    orbits.push(vec![spec.terminal()]);
    if spec.d == 1 && spec.b > 1 {
        return Err(Error::InvalidParameter(
            "d = 1 with b > 1 needs parallel edges".into(),
        ));
    }
    OrbitPartition::new(orbits, spec.node_count())
}

/// Quotient state matrix `E⁺ A E`. Fails unless every node of an orbit has
/// the same number of in-neighbors in each orbit.
pub fn quotient_adjacency(g: &Graph, part: &OrbitPartition) -> Result<DMatrix<f64>> {
    if part.orbit_of.len() != g.n() {
        return Err(Error::InvalidParameter("partition size does not match graph".into()));
    }
    let q = part.q();
    let counts = |v: usize| {
        let mut row = vec![0usize; q];
        for &u in g.in_neighbors(v) {
            row[part.orbit_of(u)] += 1;
        }
        row
    };
    let mut aq = DMatrix::zeros(q, q);
    for (i, orbit) in part.orbits().iter().enumerate() {
        let first = counts(orbit[0]);
        if let Some(&v) = orbit.iter().skip(1).find(|&&v| counts(v) != first) {
            return Err(Error::NotEquitable(format!(
                "nodes {} and {v} of orbit {i} see different in-neighbor counts",
                orbit[0]
            )));
        }
        for (k, &c) in first.iter().enumerate() {
            aq[(i, k)] = c as f64 * g.gamma();
        }
        aq[(i, i)] -= g.nu();
    }
    Ok(aq)
}

/// Exact central binomial coefficient `C(2d, d)` as `f64`.
fn central_binomial(d: u32) -> f64 {
    if d <= 60 {
        let n = 2 * u128::from(d);
        let mut c: u128 = 1;
        for k in 1..=u128::from(d) {
            c = c * (n - k + 1) / k;
        }
        c as f64
    } else {
        (1..=d).fold(1.0, |acc, k| acc * f64::from(d + k) / f64::from(k))
    }
}

/// `P(a, x) = 1 - e^{-x} Σ_{k<a} x^k / k!` for integer `a >= 1`, without
/// cancellation.
///
/// For `x < a` the tail `e^{-x} Σ_{k>=a} x^k / k!` is summed directly (all
/// terms positive, computed in log space); otherwise the head is summed and
/// subtracted from one.
pub fn regularized_gamma_p(a: u32, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x.is_infinite() {
        return 1.0;
    }
    let a_f = f64::from(a);
    let ln_fact = |k: u32| (1..=k).map(|i| f64::from(i).ln()).sum::<f64>();
    if x < a_f + 1.0 {
        // x^a e^{-x} / a! · Σ_{j>=0} x^j / ((a+1)...(a+j))
        let lead = (a_f * x.ln() - x - ln_fact(a)).exp();
        let mut term = 1.0;
        let mut sum = 1.0;
        let mut comp = 0.0;
        for j in 1..10_000 {
            term *= x / (a_f + f64::from(j));
            // Kahan summation.
            let y = term - comp;
            let t = sum + y;
            comp = (t - sum) - y;
            sum = t;
            if term < sum * 1e-18 {
                break;
            }
        }
        lead * sum
    } else {
        let mut term = (-x).exp();
        let mut head = term;
        for k in 1..a {
            term *= x / f64::from(k);
            head += term;
        }
        1.0 - head
    }
}

/// Closed-form terminal Gramian element `W_dd(t)` of the balloon with a
/// single input at `v0`.
pub fn balloon_wdd(spec: &BalloonSpec, t: Horizon) -> Result<f64> {
    spec.validate()?;
    let (d, b, g, nu) = (spec.d, f64::from(spec.b), spec.gamma, spec.nu);
    let steady = (b * b / (2.0 * nu))
        * (2.0 * f64::from(d) * (g / (2.0 * nu)).ln()).exp()
        * central_binomial(d);
    match t {
        Horizon::Infinite => Ok(steady),
        Horizon::Finite(t) if t >= 0.0 => Ok(steady * regularized_gamma_p(2 * d + 1, 2.0 * nu * t)),
        Horizon::Finite(t) => Err(Error::InvalidParameter(format!("negative time {t}"))),
    }
}

/// Minimum energy `β² / (2 W_dd(t))` to move the terminal by `β`.
pub fn balloon_jstar(spec: &BalloonSpec, beta: f64, t: Horizon) -> Result<f64> {
    if let Horizon::Finite(t) = t {
        if !(t > 0.0) {
            return Err(Error::InvalidParameter(format!("time must be positive, got {t}")));
        }
    }
    if beta == 0.0 {
        return Ok(0.0);
    }
    Ok(beta * beta / (2.0 * balloon_wdd(spec, t)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::structure::{bfs_from, bfs_to, redundancy};
    use approx::assert_relative_eq;
    use num_rational::Ratio;

    fn spec(d: u32, b: u32) -> BalloonSpec {
        BalloonSpec::new(d, b, 1.0, 1.0).unwrap()
    }

    #[test]
    fn sizes() {
        let g = build_balloon(&spec(2, 3)).unwrap();
        assert_eq!((g.n(), g.edge_count()), (5, 6));
        let g = build_balloon(&spec(1, 1)).unwrap();
        assert_eq!((g.n(), g.edge_count()), (2, 1));
        assert!(build_balloon(&spec(1, 2)).is_err());
        assert!(BalloonSpec::new(0, 1, 1.0, 1.0).is_err());
        assert!(BalloonSpec::new(2, 0, 1.0, 1.0).is_err());
    }

    #[test]
    fn distance_and_redundancy() {
        let s = spec(3, 2);
        let g = build_balloon(&s).unwrap();
        assert_eq!(g.n(), 6);
        let from = bfs_from(&g, 0);
        assert_eq!(from[s.terminal()], Some(3));
        let r = redundancy(0, s.terminal(), &from, &bfs_to(&g, s.terminal())).unwrap();
        assert_eq!(r, Ratio::from_integer(2));
    }

    #[test]
    fn symmetries() {
        let s = spec(2, 2);
        let g = build_balloon(&s).unwrap();
        let id: Vec<usize> = (0..g.n()).collect();
        assert!(is_symmetry(&g, &id).unwrap());
        let swap = vec![0, 2, 1, 3];
        assert!(is_symmetry(&g, &swap).unwrap());
        let bad = vec![1, 0, 2, 3];
        assert!(!is_symmetry(&g, &bad).unwrap());
        assert!(is_symmetry(&g, &[0, 0, 1, 2]).is_err());
    }

    #[test]
    fn quotient_of_balloon_is_weighted_path() {
        let s = BalloonSpec::new(4, 3, 0.5, 2.0).unwrap();
        let g = build_balloon(&s).unwrap();
        let aq = quotient_adjacency(&g, &balloon_orbits(&s).unwrap()).unwrap();
        let mut expect = DMatrix::from_diagonal_element(5, 5, -2.0);
        for l in 1..4 {
            expect[(l, l - 1)] = 0.5;
        }
        expect[(4, 3)] = 1.5;
        assert_eq!(aq, expect);
    }

    #[test]
    fn trivial_partition_gives_state_matrix() {
        let g = build_balloon(&spec(3, 2)).unwrap();
        let aq = quotient_adjacency(&g, &OrbitPartition::trivial(g.n())).unwrap();
        assert_eq!(aq, g.state_matrix());
        let e = OrbitPartition::trivial(3).indicator();
        assert_eq!(e, DMatrix::identity(3, 3));
    }

    #[test]
    fn star_with_mixed_orbit_is_not_equitable() {
        // Hub 0 points to 1, 2, 3; grouping the hub with a leaf is not equitable.
        let g = Graph::directed(4, [(0, 1), (0, 2), (0, 3)], 1.0, 1.0).unwrap();
        let part = OrbitPartition::new(vec![vec![0, 1], vec![2, 3]], 4).unwrap();
        assert!(matches!(quotient_adjacency(&g, &part), Err(Error::NotEquitable(_))));
        let ok = OrbitPartition::new(vec![vec![0], vec![1, 2, 3]], 4).unwrap();
        assert!(quotient_adjacency(&g, &ok).is_ok());
    }

    #[test]
    fn closed_form_values() {
        assert_relative_eq!(balloon_wdd(&spec(1, 1), Horizon::Infinite).unwrap(), 0.25);
        assert_relative_eq!(balloon_wdd(&spec(2, 3), Horizon::Infinite).unwrap(), 27.0 / 16.0, max_relative = 1e-15);
        assert_eq!(balloon_wdd(&spec(3, 2), Horizon::Finite(0.0)).unwrap(), 0.0);
        assert_relative_eq!(balloon_jstar(&spec(1, 1), 1.0, Horizon::Infinite).unwrap(), 2.0);
        assert_eq!(balloon_jstar(&spec(1, 1), 0.0, Horizon::Infinite).unwrap(), 0.0);
        assert!(balloon_jstar(&spec(1, 1), 1.0, Horizon::Finite(0.0)).is_err());
    }

    #[test]
    fn central_binomials() {
        assert_eq!(central_binomial(1), 2.0);
        assert_eq!(central_binomial(3), 20.0);
        assert_eq!(central_binomial(30), 118_264_581_564_861_424.0);
        assert_relative_eq!(central_binomial(61), central_binomial(60) * 122.0 * 121.0 / 61.0 / 61.0, max_relative = 1e-14);
    }

    #[test]
    fn incomplete_gamma_against_direct_sum() {
        for &(a, x) in &[(3u32, 0.5f64), (5, 4.0), (5, 6.0), (13, 2.0), (13, 30.0), (1, 1.0)] {
            let mut term = (-x).exp();
            let mut head = term;
            for k in 1..a {
                term *= x / f64::from(k);
                head += term;
            }
            assert_relative_eq!(regularized_gamma_p(a, x), 1.0 - head, max_relative = 1e-10);
        }
        // Small-x asymptote x^a / a!.
        let x: f64 = 1e-3;
        assert_relative_eq!(regularized_gamma_p(3, x), x.powi(3) / 6.0, max_relative = 1e-3);
    }

    #[test]
    fn monotone_in_time_and_branches() {
        let s = spec(3, 2);
        let vals: Vec<f64> = [1.0, 2.0, 4.0]
            .iter()
            .map(|&t| balloon_wdd(&s, Horizon::Finite(t)).unwrap())
            .collect();
        assert!(vals[0] < vals[1] && vals[1] < vals[2]);
        let j: Vec<f64> = [1.0, 2.0, 4.0]
            .iter()
            .map(|&t| balloon_jstar(&s, 1.0, Horizon::Finite(t)).unwrap())
            .collect();
        assert!(j[0] > j[1] && j[1] > j[2]);
        let w2 = balloon_wdd(&spec(3, 3), Horizon::Finite(2.0)).unwrap();
        assert!(w2 > vals[1]);
        let w4 = balloon_wdd(&spec(4, 2), Horizon::Finite(2.0)).unwrap();
        assert!(w4 < vals[1]);
    }
}
