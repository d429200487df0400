//! Greedy minimization of the volume cost.
//!
//! Picks are scored by `-rank(W̄ + C W_j Cᵀ)` until the incumbent output
//! Gramian reaches full numerical rank, then by `-log det(W̄ + C W_j Cᵀ)`.
//! Ties go to the lowest node index.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gramian::{default_rank_tol, log_det_output, numerical_rank, GramianSet};
use crate::graph::NodeSet;

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct GreedyParams {
    /// Relative rank tolerance; `None` uses `p · ε`.
    pub rank_tol: Option<f64>,
}

/// Trace of a greedy run.
#[derive(Clone, Debug, PartialEq)]
pub struct GreedyOutcome {
    /// Nodes in pick order.
    pub picks: Vec<usize>,
    /// Winning score of each iteration.
    pub scores: Vec<f64>,
    /// Whether each iteration was scored by rank.
    pub rank_scored: Vec<bool>,
    /// Iteration (0-based) after which the flag cleared.
    pub flag_cleared: Option<usize>,
    /// Final incumbent output Gramian.
    pub wbar: DMatrix<f64>,
}

impl GreedyOutcome {
    /// Number of iterations scored by rank.
    pub fn rank_phase_len(&self) -> usize {
        self.rank_scored.iter().filter(|&&r| r).count()
    }

    pub fn drivers(&self, n: usize) -> Result<NodeSet> {
        NodeSet::new(self.picks.clone(), n)
    }
}

/// Runs `m` greedy iterations over the candidates of `gs`.
pub fn greedy_picks(gs: &GramianSet, m: usize, params: &GreedyParams) -> Result<GreedyOutcome> {
    let cands = gs.candidates.indices();
    if m == 0 || m > cands.len() {
        return Err(Error::InvalidParameter(format!(
            "greedy budget {m} outside 1..={}",
            cands.len()
        )));
    }
    let p = gs.p();
    let tol = params.rank_tol.unwrap_or_else(|| default_rank_tol(p));
    let mut wbar = DMatrix::zeros(p, p);
    let mut chosen = vec![false; cands.len()];
    let mut flag = true;
    let mut out = GreedyOutcome {
        picks: Vec::with_capacity(m),
        scores: Vec::with_capacity(m),
        rank_scored: Vec::with_capacity(m),
        flag_cleared: None,
        wbar: DMatrix::zeros(0, 0),
    };
    for iter in 0..m {
        let scores: Vec<(usize, f64)> = (0..cands.len())
            .into_par_iter()
            .filter(|&i| !chosen[i])
            .map(|i| {
                let w = &wbar + contribution(gs, cands[i]);
                let f = if flag {
                    -(numerical_rank(&w, tol) as f64)
                } else {
                    -log_det_output(&w, Some(tol)).value
                };
                (i, f)
            })
            .collect();
        let mut best = None;
        let mut f_best = f64::INFINITY;
        for &(i, f) in &scores {
            if f < f_best {
                f_best = f;
                best = Some(i);
            }
        }
        // Every score is +inf only if W̄ stays singular; fall back to the
        // lowest remaining index.
        let i = best.unwrap_or(scores[0].0);
        chosen[i] = true;
        wbar += contribution(gs, cands[i]);
        out.picks.push(cands[i]);
        out.scores.push(f_best);
        out.rank_scored.push(flag);
        if flag && numerical_rank(&wbar, tol) == p {
            flag = false;
            out.flag_cleared = Some(iter);
        }
    }
    out.wbar = wbar;
    Ok(out)
}

fn contribution(gs: &GramianSet, k: usize) -> &DMatrix<f64> {
    gs.contribution(k).expect("candidate contribution present")
}
