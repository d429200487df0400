//! Random-swap hill climbing toward a prescribed facility-location cost.

use rand::seq::index::sample;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::structure::CostMatrix;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HillParams {
    /// Desired cost; required when hill climbing is run as a selector.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub target_cost: Option<f64>,
    #[serde(with = "crate::ser::ext_real")]
    pub epsilon: f64,
    /// Iteration budget `N`.
    pub max_iter: usize,
}

impl Default for HillParams {
    fn default() -> Self {
        HillParams {
            target_cost: None,
            epsilon: 0.5,
            max_iter: 10_000,
        }
    }
}

/// Result of a hill-climbing run.
#[derive(Clone, Debug, PartialEq)]
pub struct HillOutcome {
    /// Whether `set` lies within tolerance of the target.
    pub found: bool,
    /// Accepted set on return (ascending).
    pub set: Vec<usize>,
    pub cost: f64,
    /// Proposals evaluated.
    pub iterations: usize,
}

/// Starts from a random `m`-set and proposes uniform (inside, outside)
/// swaps, accepting a swap iff it moves the cost strictly closer to
/// `target`. Stops at the first set with cost in `[target - eps, target +
/// eps]` or after `max_iter` iterations. The initial set is checked too.
pub fn hill_climb<R: Rng + ?Sized>(
    cost: &CostMatrix,
    m: usize,
    target: f64,
    epsilon: f64,
    max_iter: usize,
    rng: &mut R,
) -> Result<HillOutcome> {
    let n = cost.n();
    if m == 0 || m > n {
        return Err(Error::InvalidParameter(format!("budget {m} outside 1..={n}")));
    }
    if !(epsilon > 0.0) || max_iter == 0 || target.is_nan() {
        return Err(Error::InvalidParameter(format!(
            "hill climbing needs epsilon > 0 and N >= 1 (epsilon={epsilon}, N={max_iter})"
        )));
    }
    let within = |c: f64| target - epsilon <= c && c <= target + epsilon;
    let mut set: Vec<usize> = sample(rng, n, m).into_vec();
    set.sort_unstable();
    let mut cur = cost.set_cost(&set)?;
    let mut inside = vec![false; n];
    for &j in &set {
        inside[j] = true;
    }
    let done = |set: &mut Vec<usize>, cost: f64, found: bool, iterations: usize| {
        set.sort_unstable();
        Ok(HillOutcome {
            found,
            set: std::mem::take(set),
            cost,
            iterations,
        })
    };
    if within(cur) {
        return done(&mut set, cur, true, 0);
    }
    let mut k = 1;
    while k < max_iter && m < n {
        let ia = rng.random_range(0..m);
        let mut vb = rng.random_range(0..n - m);
        // vb-th node outside the set.
        vb = (0..n).filter(|&j| !inside[j]).nth(vb).expect("n - m outside nodes");
        let va = set[ia];
        set[ia] = vb;
        let c = cost.set_cost(&set)?;
        if within(c) {
            return done(&mut set, c, true, k);
        }
        if (target - c).abs() < (target - cur).abs() {
            inside[va] = false;
            inside[vb] = true;
            cur = c;
        } else {
            set[ia] = va;
        }
        k += 1;
    }
    done(&mut set, cur, false, k)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn costs() -> CostMatrix {
        CostMatrix::from_rows(&[
            vec![1.0, 4.0, 9.0],
            vec![2.0, 2.0, 7.0],
            vec![6.0, 1.0, 3.0],
            vec![8.0, 5.0, 1.0],
            vec![3.0, 3.0, 3.0],
        ])
        .unwrap()
    }

    #[test]
    fn infinite_tolerance_returns_initial_set() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let out = hill_climb(&costs(), 2, 0.0, f64::INFINITY, 10, &mut rng).unwrap();
        assert!(out.found);
        assert_eq!(out.iterations, 0);
    }

    #[test]
    fn reaches_an_attainable_target() {
        let c = costs();
        let target = c.set_cost(&[0, 3]).unwrap();
        for seed in 0..10 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let out = hill_climb(&c, 2, target, 0.25, 10_000, &mut rng).unwrap();
            assert!(out.found, "seed {seed}");
            assert!((out.cost - target).abs() <= 0.25);
            assert_eq!(c.set_cost(&out.set).unwrap(), out.cost);
        }
    }

    #[test]
    fn unattainable_target_reports_not_found() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let out = hill_climb(&costs(), 2, -100.0, 0.1, 50, &mut rng).unwrap();
        assert!(!out.found);
        assert_eq!(out.iterations, 50);
    }
}
