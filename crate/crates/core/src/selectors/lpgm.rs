//! Projected gradient descent on the expected control energy with a
//! probabilistic L0 projection.

use nalgebra::DMatrix;
use rand::distr::{Distribution, Uniform};
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gramian::{energy_trace, Horizon, LinearNetwork};
use crate::graph::NodeSet;
use crate::linalg::{symmetrize, DoublingIntegrator};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LpgmParams {
    /// Initial step size of each backtracking search.
    pub eta: f64,
    /// Maximum step halvings per iteration.
    pub max_halvings: usize,
    /// Gradient iterations `K`; `K + 1` projected iterates are scored.
    pub iterations: usize,
    /// Candidate slack `m0`; `None` means `m`, capped at `n - m`.
    pub slack: Option<usize>,
    /// Half-width of the uniform noise added to the initial versors.
    pub init_noise: f64,
}

impl Default for LpgmParams {
    fn default() -> Self {
        LpgmParams {
            eta: 1e-2,
            max_halvings: 30,
            iterations: 200,
            slack: None,
            init_noise: 1e-3,
        }
    }
}

impl LpgmParams {
    /// Copy with the slack filled in for an `n`-node problem with budget `m`.
    pub fn resolved(&self, n: usize, m: usize) -> Self {
        let mut p = self.clone();
        p.slack = Some(self.slack.unwrap_or(m).min(n.saturating_sub(m)));
        p
    }
}

/// Samples `m` rows of `b` and builds the sparse input matrix.
///
/// Row scores are `r_j = Σ_k |B_{j,k}|`. Rows are drawn without replacement
/// from the `m + m0` highest scores with probability proportional to the
/// score. The `i`-th drawn row gets the entry `m r_j / Σ_{selected} r` in
/// column `i`. With fewer than `m` positive scores the rows are taken in
/// score order instead.
pub fn project_with_rng<R: Rng + ?Sized>(
    b: &DMatrix<f64>,
    m: usize,
    m0: usize,
    rng: &mut R,
) -> Result<(NodeSet, DMatrix<f64>)> {
    let n = b.nrows();
    if m == 0 || m + m0 > n || b.ncols() != m {
        return Err(Error::InvalidParameter(format!(
            "projection needs an n x m matrix with 1 <= m and m + m0 <= n (n={n}, m={m}, m0={m0}, cols={})",
            b.ncols()
        )));
    }
    let r: Vec<f64> = b.row_iter().map(|row| row.iter().map(|x| x.abs()).sum()).collect();
    if r.iter().any(|x| !x.is_finite()) {
        return Err(Error::Numerical("non-finite row score in projection".into()));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &c| r[c].total_cmp(&r[a]).then(a.cmp(&c)));
    let positive = r.iter().filter(|&&x| x > 0.0).count();
    let selected: Vec<usize> = if positive < m {
        log::warn!("only {positive} positive row scores for {m} drivers; filling by score order");
        order[..m].to_vec()
    } else {
        let mut pool: Vec<usize> = order[..m + m0].to_vec();
        let mut picked = Vec::with_capacity(m);
        while picked.len() < m {
            let total: f64 = pool.iter().map(|&j| r[j]).sum();
            let mut u = rng.random::<f64>() * total;
            let mut at = pool.len() - 1;
            for (i, &j) in pool.iter().enumerate() {
                if r[j] > 0.0 && u < r[j] {
                    at = i;
                    break;
                }
                u -= r[j];
            }
            // Rounding can leave `at` on a zero-score row; step back to the
            // last positive one.
            while r[pool[at]] == 0.0 {
                at -= 1;
            }
            picked.push(pool.remove(at));
        }
        picked
    };
    let norm: f64 = selected.iter().map(|&j| r[j]).sum();
    let mut out = DMatrix::zeros(n, m);
    for (k, &j) in selected.iter().enumerate() {
        out[(j, k)] = if norm > 0.0 { m as f64 * r[j] / norm } else { 1.0 };
    }
    Ok((NodeSet::new(selected, n)?, out))
}

/// [`project_with_rng`] with a fresh generator seeded by `seed`.
pub fn probabilistic_projection(b: &DMatrix<f64>, m: usize, m0: usize, seed: u64) -> Result<(NodeSet, DMatrix<f64>)> {
    project_with_rng(b, m, m0, &mut ChaCha8Rng::seed_from_u64(seed))
}

/// Expected energy `E(B) = Tr(Cᵀ W̄_B⁻¹ C X_f)` as a function of a dense
/// input matrix, with its gradient.
#[derive(Clone, Debug)]
pub struct EnergyModel {
    net: LinearNetwork,
    adjoint: DoublingIntegrator,
    targets: NodeSet,
    /// `C X_f Cᵀ`.
    terminal: DMatrix<f64>,
}

impl EnergyModel {
    /// Requires a finite horizon.
    pub fn new(net: LinearNetwork, targets: NodeSet) -> Result<Self> {
        let Horizon::Finite(t) = net.horizon() else {
            return Err(Error::InvalidParameter(
                "projected gradient needs a finite horizon".into(),
            ));
        };
        let adjoint = DoublingIntegrator::new(&net.state_matrix().transpose(), t)?;
        let terminal = net.terminal_weight(&targets);
        Ok(EnergyModel {
            net,
            adjoint,
            targets,
            terminal,
        })
    }

    pub fn n(&self) -> usize {
        self.net.n()
    }

    pub fn targets(&self) -> &NodeSet {
        &self.targets
    }

    /// `C W_B Cᵀ`.
    pub fn output_gramian(&self, b: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        let w = self.net.gramian_factor(b)?;
        let idx = self.targets.indices();
        Ok(w.select_rows(idx).select_columns(idx))
    }

    /// `E(B)`; `+inf` when `W̄_B` is singular.
    pub fn energy(&self, b: &DMatrix<f64>) -> Result<f64> {
        Ok(energy_trace(&self.output_gramian(b)?, &self.terminal))
    }

    /// `∂E/∂B = -2 Y B` with `Y = ∫_0^t e^{Aᵀτ} R e^{Aτ} dτ` and
    /// `R = Cᵀ W̄⁻¹ C X_f Cᵀ W̄⁻¹ C`. `None` when `W̄_B` is singular.
    pub fn gradient(&self, b: &DMatrix<f64>) -> Result<Option<DMatrix<f64>>> {
        let wbar = self.output_gramian(b)?;
        Ok(self.gradient_from(&wbar, b))
    }

    fn gradient_from(&self, wbar: &DMatrix<f64>, b: &DMatrix<f64>) -> Option<DMatrix<f64>> {
        let ch = wbar.clone().cholesky()?;
        // W̄⁻¹ S W̄⁻¹ via two solves.
        let left = ch.solve(&self.terminal);
        let inner = symmetrize(&ch.solve(&left.transpose()));
        if inner.iter().any(|x| !x.is_finite()) {
            return None;
        }
        let n = self.n();
        let idx = self.targets.indices();
        let mut r = DMatrix::zeros(n, n);
        for (a, &i) in idx.iter().enumerate() {
            for (c, &j) in idx.iter().enumerate() {
                r[(i, j)] = inner[(a, c)];
            }
        }
        let y = self.adjoint.integrate(&r);
        Some(y * b * -2.0)
    }
}

/// Trace of a projected-gradient run.
#[derive(Clone, Debug, PartialEq)]
pub struct LpgmOutcome {
    /// Best projected support.
    pub support: NodeSet,
    /// Energy of the best support (`+inf` if every iterate was singular).
    pub best_energy: f64,
    /// Index of the iterate that produced `support`.
    pub best_iterate: Option<usize>,
    /// Energy of every projected iterate.
    pub energies: Vec<f64>,
}

/// Initial input matrix: `m` distinct random versors plus uniform noise in
/// `[-noise, noise]`.
pub fn initial_input<R: Rng + ?Sized>(n: usize, m: usize, noise: f64, rng: &mut R) -> DMatrix<f64> {
    let mut b = DMatrix::zeros(n, m);
    for (k, j) in sample(rng, n, m).into_iter().enumerate() {
        b[(j, k)] = 1.0;
    }
    if noise > 0.0 {
        let u = Uniform::new_inclusive(-noise, noise).expect("noise is finite");
        for x in b.iter_mut() {
            *x += u.sample(rng);
        }
    }
    b
}

/// Runs projected gradient descent with backtracking step control.
///
/// Each iterate is projected, scored, and differentiated at its projection.
/// When the projection improves on the best energy so far, the step starts
/// from the projection, otherwise from the dense iterate. The step size
/// starts at `eta` and halves while the dense energy increases.
pub fn lpgm<R: Rng + ?Sized>(model: &EnergyModel, m: usize, params: &LpgmParams, rng: &mut R) -> Result<LpgmOutcome> {
    let n = model.n();
    if m == 0 || m > n {
        return Err(Error::InvalidParameter(format!("budget {m} outside 1..={n}")));
    }
    let params = params.resolved(n, m);
    let m0 = params.slack.unwrap_or(0);
    let mut b = initial_input(n, m, params.init_noise, rng);
    let mut b_energy: Option<f64> = None;
    let mut best: Option<(f64, NodeSet, usize)> = None;
    let mut energies = Vec::with_capacity(params.iterations + 1);
    for k in 0..=params.iterations {
        let (support, bl0) = project_with_rng(&b, m, m0, rng)?;
        let wbar = model.output_gramian(&bl0)?;
        let e = energy_trace(&wbar, &model.terminal);
        energies.push(e);
        let grad = if e.is_finite() {
            model.gradient_from(&wbar, &bl0)
        } else {
            None
        };
        let Some(grad) = grad else {
            continue;
        };
        let improved = best.as_ref().is_none_or(|(eb, _, _)| e < *eb);
        let (base, base_energy) = if improved {
            best = Some((e, support, k));
            (bl0, e)
        } else {
            let be = match b_energy {
                Some(x) => x,
                None => model.energy(&b)?,
            };
            (b.clone(), be)
        };
        if k == params.iterations {
            break;
        }
        let mut eta = params.eta;
        let mut halvings = 0;
        loop {
            let cand = &base - &grad * eta;
            let ce = model.energy(&cand)?;
            if ce <= base_energy || halvings >= params.max_halvings {
                b = cand;
                b_energy = Some(ce);
                break;
            }
            eta *= 0.5;
            halvings += 1;
        }
    }
    let (best_energy, support, best_iterate) = match best {
        Some((e, s, k)) => (e, s, Some(k)),
        None => {
            // Every projected iterate was singular; report the last one.
            let (s, _) = project_with_rng(&b, m, m0, rng)?;
            (f64::INFINITY, s, None)
        }
    };
    Ok(LpgmOutcome {
        support,
        best_energy,
        best_iterate,
        energies,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Graph;

    #[test]
    fn exact_support_survives_projection() {
        let mut b = DMatrix::zeros(6, 2);
        b[(1, 0)] = 0.3;
        b[(4, 1)] = -2.0;
        for seed in 0..20 {
            let (s, out) = probabilistic_projection(&b, 2, 3, seed).unwrap();
            assert_eq!(s.indices(), &[1, 4]);
            assert_eq!(out.iter().filter(|&&x| x != 0.0).count(), 2);
        }
    }

    #[test]
    fn zero_slack_takes_top_rows() {
        let b = DMatrix::from_row_slice(5, 2, &[0.1, 0.0, 3.0, 1.0, 0.5, 0.5, 0.0, -2.5, 0.2, 0.2]);
        let (s, out) = probabilistic_projection(&b, 2, 0, 9).unwrap();
        assert_eq!(s.indices(), &[1, 3]);
        let total: f64 = out.iter().sum();
        approx::assert_relative_eq!(total, 2.0, max_relative = 1e-15);
    }

    #[test]
    fn scalar_energy_closed_form() {
        let g = Graph::directed(1, [], 1.0, 0.5).unwrap();
        let net = LinearNetwork::from_graph(&g, Horizon::Finite(1.0)).unwrap();
        let model = EnergyModel::new(net, NodeSet::all(1)).unwrap();
        let e = model.energy(&DMatrix::from_element(1, 1, 1.0)).unwrap();
        let x = (-1.0f64).exp();
        approx::assert_relative_eq!(e, x / (1.0 - x), max_relative = 1e-12);
        // E(b) = E(1) / b² so dE/db = -2 E(1) / b³.
        let grad = model.gradient(&DMatrix::from_element(1, 1, 2.0)).unwrap().unwrap();
        approx::assert_relative_eq!(grad[(0, 0)], -2.0 * x / (1.0 - x) / 8.0, max_relative = 1e-12);
    }

    #[test]
    fn infinite_horizon_is_rejected() {
        let g = Graph::directed(2, [(0, 1)], 1.0, 2.0).unwrap();
        let net = LinearNetwork::from_graph(&g, Horizon::Infinite).unwrap();
        assert!(EnergyModel::new(net, NodeSet::all(2)).is_err());
    }
}
