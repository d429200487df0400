//! Summary statistics for experiment tables.

use serde::{Deserialize, Serialize};

/// Pearson correlation; `None` with fewer than two points or zero
/// variance.
pub fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    let (sxx, syy, sxy) = moments(x, y)?;
    if sxx == 0.0 || syy == 0.0 {
        return None;
    }
    Some((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

/// Least-squares line `y ≈ slope · x + intercept`.
pub fn least_squares(x: &[f64], y: &[f64]) -> Option<(f64, f64)> {
    let (sxx, _, sxy) = moments(x, y)?;
    if sxx == 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    let n = x.len() as f64;
    let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
    Some((slope, my - slope * mx))
}

fn moments(x: &[f64], y: &[f64]) -> Option<(f64, f64, f64)> {
    if x.len() != y.len() || x.len() < 2 {
        return None;
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let mut m = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        m.0 += dx * dx;
        m.1 += dy * dy;
        m.2 += dx * dy;
    }
    Some(m)
}

/// Linear fit and correlation of one pair of columns.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Fit {
    pub points: usize,
    pub pearson: Option<f64>,
    pub slope: Option<f64>,
    pub intercept: Option<f64>,
}

impl Fit {
    pub fn of(x: &[f64], y: &[f64]) -> Self {
        let line = least_squares(x, y);
        Fit {
            points: x.len(),
            pearson: pearson(x, y),
            slope: line.map(|l| l.0),
            intercept: line.map(|l| l.1),
        }
    }
}

/// Equal-width histogram.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    /// `bins + 1` ascending edges.
    pub edges: Vec<f64>,
    pub counts: Vec<usize>,
}

impl Histogram {
    /// Bins `values` over their range; a degenerate range becomes a unit
    /// interval centred on the value.
    pub fn new(values: &[f64], bins: usize) -> Self {
        let bins = bins.max(1);
        let (lo, hi) = values
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
        let (lo, hi) = if values.is_empty() {
            (0.0, 1.0)
        } else if lo == hi {
            (lo - 0.5, hi + 0.5)
        } else {
            (lo, hi)
        };
        let width = (hi - lo) / bins as f64;
        let edges: Vec<f64> = (0..=bins)
            .map(|i| if i == bins { hi } else { lo + width * i as f64 })
            .collect();
        let mut counts = vec![0; bins];
        for &v in values {
            let i = (((v - lo) / width) as usize).min(bins - 1);
            counts[i] += 1;
        }
        Histogram { edges, counts }
    }

    pub fn total(&self) -> usize {
        self.counts.iter().sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn perfect_line() {
        let x = [1.0, 2.0, 3.0, 4.0];
        let y = [3.0, 5.0, 7.0, 9.0];
        assert_relative_eq!(pearson(&x, &y).unwrap(), 1.0);
        let (s, i) = least_squares(&x, &y).unwrap();
        assert_relative_eq!(s, 2.0);
        assert_relative_eq!(i, 1.0, epsilon = 1e-14);
    }

    #[test]
    fn undefined_cases() {
        assert_eq!(pearson(&[1.0], &[2.0]), None);
        assert_eq!(pearson(&[1.0, 1.0], &[2.0, 3.0]), None);
    }

    #[test]
    fn histogram_counts_everything() {
        let v = [0.0, 0.1, 0.5, 0.99, 1.0, -2.0];
        let h = Histogram::new(&v, 30);
        assert_eq!(h.total(), v.len());
        assert_eq!(h.edges.len(), 31);
        let same = Histogram::new(&[0.0; 5], 30);
        assert_eq!(same.total(), 5);
    }
}
