//! Controllability Gramians and the Gramian-based driver-set costs.
//!
//! Finite horizons use [`DoublingIntegrator`], which works for any `A`.
//! The infinite horizon solves the algebraic Lyapunov equation. The identity
//! `W(t) = W(∞) - e^{At} W(∞) e^{Aᵀt}` and adaptive quadrature are kept as
//! independent routes ([`gramian_identity`], [`gramian_quadrature`]).

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rayon::prelude::*;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::graph::{Graph, NodeSet};
use crate::linalg::{self, DoublingIntegrator, LyapunovSolver};

/// Relative tolerance for the quadrature route.
pub const QUADRATURE_REL_TOL: f64 = 1e-9;
/// Panel budget for the quadrature route.
pub const QUADRATURE_MAX_PANELS: usize = 4000;

/// Final time `t_f`, possibly infinite.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Horizon {
    Finite(f64),
    Infinite,
}

impl Horizon {
    pub fn finite(self) -> Option<f64> {
        match self {
            Horizon::Finite(t) => Some(t),
            Horizon::Infinite => None,
        }
    }

    pub fn is_infinite(self) -> bool {
        matches!(self, Horizon::Infinite)
    }
}

impl fmt::Display for Horizon {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Horizon::Finite(t) => write!(f, "{t}"),
            Horizon::Infinite => f.write_str("inf"),
        }
    }
}

impl FromStr for Horizon {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("inf") || s.eq_ignore_ascii_case("infinity") {
            return Ok(Horizon::Infinite);
        }
        let t: f64 = s
            .parse()
            .map_err(|_| Error::InvalidParameter(format!("bad horizon `{s}`")))?;
        if t.is_infinite() && t > 0.0 {
            Ok(Horizon::Infinite)
        } else if t >= 0.0 {
            Ok(Horizon::Finite(t))
        } else {
            Err(Error::InvalidParameter(format!("horizon must be nonnegative, got {t}")))
        }
    }
}

impl Serialize for Horizon {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Horizon::Finite(t) => s.serialize_f64(*t),
            Horizon::Infinite => s.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for Horizon {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Str(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(t) => Ok(Horizon::Finite(t)),
            Raw::Str(s) => s.parse().map_err(serde::de::Error::custom),
        }
    }
}

/// Solves `A W + W Aᵀ + Q = 0` for Hurwitz `A`.
pub fn lyapunov_infinite(a: &DMatrix<f64>, q: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let solver = LyapunovSolver::new(a)?;
    if solver.abscissa() >= 0.0 {
        return Err(Error::NotHurwitz {
            abscissa: solver.abscissa(),
        });
    }
    solver.solve(q)
}

/// `∫_0^t e^{Aτ} Q e^{Aᵀτ} dτ` by adaptive Gauss–Kronrod quadrature.
pub fn gramian_quadrature(a: &DMatrix<f64>, q: &DMatrix<f64>, t: f64) -> Result<DMatrix<f64>> {
    if t == 0.0 {
        return Ok(DMatrix::zeros(a.nrows(), a.nrows()));
    }
    let w = linalg::integrate_matrix(
        |tau| {
            let e = linalg::expm(&(a * tau));
            &e * q * e.transpose()
        },
        0.0,
        t,
        QUADRATURE_REL_TOL,
        QUADRATURE_MAX_PANELS,
    )?;
    Ok(linalg::symmetrize(&w))
}

/// `W(∞) - e^{At} W(∞) e^{Aᵀt}` for Hurwitz `A`.
pub fn gramian_identity(a: &DMatrix<f64>, q: &DMatrix<f64>, t: f64) -> Result<DMatrix<f64>> {
    let w_inf = lyapunov_infinite(a, q)?;
    let e = linalg::expm(&(a * t));
    Ok(linalg::symmetrize(&(&w_inf - &e * &w_inf * e.transpose())))
}

/// Finite-horizon Gramian `W(t)` with `Ẇ = AW + WAᵀ + Q`, `W(0) = 0`.
pub fn gramian_finite(a: &DMatrix<f64>, q: &DMatrix<f64>, t: f64) -> Result<DMatrix<f64>> {
    Ok(DoublingIntegrator::new(a, t)?.integrate(q))
}

/// A state matrix factored once for repeated Gramian solves at a fixed
/// horizon.
#[derive(Clone, Debug)]
pub struct LinearNetwork {
    a: DMatrix<f64>,
    solver: LyapunovSolver,
    horizon: Horizon,
    /// `e^{A t_f}` for finite horizons.
    exp_a: Option<DMatrix<f64>>,
    integrator: Option<DoublingIntegrator>,
}

impl LinearNetwork {
    pub fn new(a: DMatrix<f64>, horizon: Horizon) -> Result<Self> {
        let solver = LyapunovSolver::new(&a)?;
        let (exp_a, integrator) = match horizon {
            Horizon::Finite(t) => (
                Some(linalg::expm(&(&a * t))),
                Some(DoublingIntegrator::new(&a, t)?),
            ),
            Horizon::Infinite if solver.abscissa() >= 0.0 => {
                return Err(Error::NotHurwitz {
                    abscissa: solver.abscissa(),
                })
            }
            Horizon::Infinite => (None, None),
        };
        Ok(LinearNetwork {
            a,
            solver,
            horizon,
            exp_a,
            integrator,
        })
    }

    pub fn from_graph(g: &Graph, horizon: Horizon) -> Result<Self> {
        Self::new(g.state_matrix(), horizon)
    }

    pub fn n(&self) -> usize {
        self.a.nrows()
    }

    pub fn state_matrix(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn horizon(&self) -> Horizon {
        self.horizon
    }

    pub fn is_hurwitz(&self) -> bool {
        self.solver.abscissa() < 0.0
    }

    pub fn spectral_abscissa(&self) -> f64 {
        self.solver.abscissa()
    }

    /// `e^{A t_f}`; zero for the infinite horizon of a Hurwitz system.
    pub fn exp_horizon(&self) -> DMatrix<f64> {
        self.exp_a
            .clone()
            .unwrap_or_else(|| DMatrix::zeros(self.n(), self.n()))
    }

    /// Full `n x n` Gramian for input weight `Q`.
    pub fn gramian(&self, q: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        match &self.integrator {
            Some(int) => Ok(int.integrate(q)),
            None => self.solver.solve(q),
        }
    }

    /// Full `n x n` Gramian for the input matrix `B` (`Q = B Bᵀ`).
    pub fn gramian_factor(&self, b: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        match &self.integrator {
            Some(int) => Ok(int.integrate_factor(b)),
            None => self.solver.solve(&(b * b.transpose())),
        }
    }

    /// `C W_k Cᵀ` for the single-node input `Q = e_k e_kᵀ`.
    fn output_contribution(&self, k: usize, targets: &NodeSet, cu: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        if let Some(int) = &self.integrator {
            let w = int.integrate_node(k);
            let idx = targets.indices();
            return Ok(w.select_rows(idx).select_columns(idx));
        }
        let uk = self.solver.basis().row(k).transpose();
        let y = self.solver.solve_schur(&(&uk * uk.transpose()))?;
        Ok(linalg::symmetrize(&(cu * &y * cu.transpose())))
    }

/// Per-candidate output Gramian contributions.
    pub fn driver_contributions(&self, targets: &NodeSet, candidates: &NodeSet) -> Result<GramianSet> {
        if candidates.is_empty() {
            return Err(Error::InvalidNodeSet("candidate set is empty".into()));
        }
        let n = self.n();
        if targets.indices().last().is_some_and(|&k| k >= n)
            || candidates.indices().last().is_some_and(|&k| k >= n)
        {
            return Err(Error::InvalidNodeSet("node out of range".into()));
        }
        let cu = targets.row_selector(n) * self.solver.basis();
        let contributions = candidates
            .indices()
            .par_iter()
            .map(|&k| self.output_contribution(k, targets, &cu))
            .collect::<Result<Vec<_>>>()?;
        let mut slot = vec![usize::MAX; n];
        for (i, k) in candidates.iter().enumerate() {
            slot[k] = i;
        }
        Ok(GramianSet {
            horizon: self.horizon,
            targets: targets.clone(),
            candidates: candidates.clone(),
            slot,
            contributions,
        })
    }

    /// `C X_f Cᵀ` with `X_f = e^{A t_f} e^{Aᵀ t_f}`; zero at the infinite
    /// horizon.
    pub fn terminal_weight(&self, targets: &NodeSet) -> DMatrix<f64> {
        let p = targets.len();
        match &self.exp_a {
            Some(e) => {
                let ce = targets.row_selector(self.n()) * e;
                linalg::symmetrize(&(&ce * ce.transpose()))
            }
            None => DMatrix::zeros(p, p),
        }
    }
}

/// Convenience wrapper: factor the graph's state matrix and compute all
/// candidate contributions.
pub fn driver_contributions(
    g: &Graph,
    targets: &NodeSet,
    candidates: &NodeSet,
    horizon: Horizon,
) -> Result<GramianSet> {
    LinearNetwork::from_graph(g, horizon)?.driver_contributions(targets, candidates)
}

/// Output-resolution (`p x p`) Gramian contributions `C W_k Cᵀ` of each
/// candidate driver at a fixed horizon.
#[derive(Clone, Debug)]
pub struct GramianSet {
    pub horizon: Horizon,
    pub targets: NodeSet,
    pub candidates: NodeSet,
    slot: Vec<usize>,
    contributions: Vec<DMatrix<f64>>,
}

impl GramianSet {
    pub fn p(&self) -> usize {
        self.targets.len()
    }

    /// Contribution of node `k`, if it is a candidate.
    pub fn contribution(&self, k: usize) -> Option<&DMatrix<f64>> {
        self.slot
            .get(k)
            .and_then(|&i| self.contributions.get(i))
    }

    /// `W̄_D = Σ_{k∈D} C W_k Cᵀ`.
    pub fn output_gramian(&self, drivers: &NodeSet) -> Result<DMatrix<f64>> {
        let p = self.p();
        let mut w = DMatrix::zeros(p, p);
        for k in drivers {
            let c = self.contribution(k).ok_or_else(|| {
                Error::InvalidNodeSet(format!("node {k} is not a candidate"))
            })?;
            w += c;
        }
        Ok(w)
    }
}

/// Log-determinant report for a symmetric output Gramian.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LogDet {
    /// `log det W̄`, floored eigenvalues on the fallback path, `-inf` when
    /// `λ_max <= 0`.
    pub value: f64,
    /// Numerical rank; equals `p` whenever the Cholesky factorization
    /// succeeded.
    pub rank: usize,
    /// Whether the Cholesky factorization succeeded.
    pub spd: bool,
}

/// Default numerical-rank tolerance `p · ε`.
pub fn default_rank_tol(p: usize) -> f64 {
    p.max(1) as f64 * f64::EPSILON
}

fn sym_eigenvalues(w: &DMatrix<f64>) -> DVector<f64> {
    SymmetricEigen::new(linalg::symmetrize(w)).eigenvalues
}

/// Number of eigenvalues above `rel_tol · λ_max`; zero when `λ_max <= 0`.
pub fn numerical_rank(w: &DMatrix<f64>, rel_tol: f64) -> usize {
    if w.is_empty() {
        return 0;
    }
    let ev = sym_eigenvalues(w);
    let lmax = ev.max();
    if !(lmax > 0.0) {
        return 0;
    }
    ev.iter().filter(|&&l| l > rel_tol * lmax).count()
}

/// `log det W̄` via Cholesky, falling back to eigenvalues floored at
/// `rel_tol · λ_max` when the factorization fails.
pub fn log_det_output(w: &DMatrix<f64>, rel_tol: Option<f64>) -> LogDet {
    let p = w.nrows();
    let tol = rel_tol.unwrap_or_else(|| default_rank_tol(p));
    if let Some(ch) = w.clone().cholesky() {
        let value = 2.0 * ch.l_dirty().diagonal().iter().map(|x| x.ln()).sum::<f64>();
        if value.is_finite() {
            return LogDet {
                value,
                rank: p,
                spd: true,
            };
        }
    }
    let ev = sym_eigenvalues(w);
    let lmax = ev.max();
    if !(lmax > 0.0) {
        return LogDet {
            value: f64::NEG_INFINITY,
            rank: 0,
            spd: false,
        };
    }
    let floor = tol * lmax;
    LogDet {
        value: ev.iter().map(|&l| l.max(floor).ln()).sum(),
        rank: ev.iter().filter(|&&l| l > floor).count(),
        spd: false,
    }
}

/// Volume cost `-log det W̄_D`; `+inf` when `W̄_D` has no positive
/// eigenvalue.
pub fn vol_cost(gs: &GramianSet, drivers: &NodeSet) -> Result<f64> {
    Ok(-log_det_output(&gs.output_gramian(drivers)?, None).value)
}

/// `Tr(W̄⁻¹ · C X_f Cᵀ)` by a Cholesky solve; `+inf` when `W̄` is not
/// positive definite or is numerically rank deficient.
pub fn energy_trace(wbar: &DMatrix<f64>, cxc: &DMatrix<f64>) -> f64 {
    let p = wbar.nrows();
    if numerical_rank(wbar, default_rank_tol(p)) < p {
        return f64::INFINITY;
    }
    match wbar.clone().cholesky() {
        Some(ch) => {
            let z = ch.solve(cxc);
            let tr = z.trace();
            if tr.is_finite() {
                tr
            } else {
                f64::INFINITY
            }
        }
        None => f64::INFINITY,
    }
}

/// Expected control energy `Tr(Cᵀ W̄_D⁻¹ C X_f)` at the set's horizon.
/// The terminal weight vanishes at the infinite horizon.
pub fn expected_energy(gs: &GramianSet, drivers: &NodeSet, net: &LinearNetwork) -> Result<f64> {
    if net.horizon() != gs.horizon {
        return Err(Error::InvalidParameter(format!(
            "network horizon {} differs from Gramian horizon {}",
            net.horizon(),
            gs.horizon
        )));
    }
    let wbar = gs.output_gramian(drivers)?;
    Ok(energy_trace(&wbar, &net.terminal_weight(&gs.targets)))
}

/// A control maneuver from `x0` to output `y_f`.
#[derive(Clone, Debug, PartialEq)]
pub struct Maneuver {
    pub x0: DVector<f64>,
    pub yf: DVector<f64>,
}

impl Maneuver {
    pub fn new(x0: DVector<f64>, yf: DVector<f64>) -> Self {
        Maneuver { x0, yf }
    }

    /// `β = y_f - C e^{A t_f} x0`, recomputed on every call.
    pub fn beta(&self, net: &LinearNetwork, targets: &NodeSet) -> Result<DVector<f64>> {
        if self.x0.len() != net.n() || self.yf.len() != targets.len() {
            return Err(Error::InvalidParameter("maneuver dimensions do not match".into()));
        }
        let drift = targets.row_selector(net.n()) * net.exp_horizon() * &self.x0;
        Ok(&self.yf - drift)
    }
}

/// Minimum control energy `½ βᵀ W̄⁻¹ β`; `+inf` when `W̄` is not positive
/// definite.
pub fn quadratic_energy(wbar: &DMatrix<f64>, beta: &DVector<f64>) -> f64 {
    if beta.iter().all(|&b| b == 0.0) {
        return 0.0;
    }
    match wbar.clone().cholesky() {
        Some(ch) => 0.5 * beta.dot(&ch.solve(beta)),
        None => f64::INFINITY,
    }
}

/// Minimum energy of `maneuver` with driver set `drivers`.
pub fn optimal_energy(
    gs: &GramianSet,
    drivers: &NodeSet,
    maneuver: &Maneuver,
    net: &LinearNetwork,
) -> Result<f64> {
    let beta = maneuver.beta(net, &gs.targets)?;
    Ok(quadratic_energy(&gs.output_gramian(drivers)?, &beta))
}
