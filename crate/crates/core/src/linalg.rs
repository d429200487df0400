//! Dense linear algebra kernels: a Schur-based (Bartels–Stewart) Lyapunov
//! solver, spectral abscissa, the matrix exponential, and adaptive
//! Gauss–Kronrod quadrature for matrix-valued integrands.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

const SCHUR_MAX_SWEEPS: usize = 200;
const SCHUR_DEFLATION_TOLS: [f64; 3] = [f64::EPSILON, 4.0 * f64::EPSILON, 16.0 * f64::EPSILON];

/// `(M + Mᵀ) / 2`.
pub fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

/// Matrix exponential (Padé approximant with scaling and squaring).
pub fn expm(a: &DMatrix<f64>) -> DMatrix<f64> {
    a.clone().exp()
}

/// Diagonal blocks of a real quasi-upper-triangular matrix as
/// `(start, size)`. A block spans every run of nonzero subdiagonal entries.
fn diagonal_blocks(t: &DMatrix<f64>) -> Vec<(usize, usize)> {
    let n = t.nrows();
    let mut blocks = Vec::new();
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && t[(end, end - 1)] != 0.0 {
            end += 1;
        }
        blocks.push((start, end - start));
        start = end;
    }
    blocks
}

fn real_schur(a: &DMatrix<f64>) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    if a.nrows() != a.ncols() {
        return Err(Error::Numerical(format!(
            "expected a square matrix, got {}x{}",
            a.nrows(),
            a.ncols()
        )));
    }
    if a.iter().any(|x| !x.is_finite()) {
        return Err(Error::Numerical("matrix has non-finite entries".into()));
    }
    let n = a.nrows().max(1);
    // Deflating at exactly machine epsilon can stall on normal matrices with
    // repeated eigenvalues on a circle, such as shifted permutations.
    for eps in SCHUR_DEFLATION_TOLS {
        if let Some(s) = a.clone().try_schur(eps, SCHUR_MAX_SWEEPS * n) {
            return Ok(s.unpack());
        }
    }
    // Last resort: a non-orthogonal similarity `S⁻¹ A S` breaks normality;
    // with `S V = U R` the form `R T R⁻¹` stays quasi upper triangular.
    let (s, s_inv) = skew_basis(a.nrows());
    let b = &s_inv * a * &s;
    let (v, t) = SCHUR_DEFLATION_TOLS
        .iter()
        .find_map(|&eps| b.clone().try_schur(eps, SCHUR_MAX_SWEEPS * n))
        .ok_or_else(|| Error::Numerical("real Schur decomposition did not converge".into()))?
        .unpack();
    let (u, r) = (s * v).qr().unpack();
    let r_inv = r
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::Numerical("singular change of basis".into()))?;
    let mut t = r * t * r_inv;
    // Clear rounding below the quasi-triangular pattern.
    for j in 0..t.ncols() {
        for i in j + 1..t.nrows() {
            if i > j + 1 || t[(i, j)].abs() <= f64::EPSILON * (t[(i, i)].abs() + t[(j, j)].abs()) {
                t[(i, j)] = 0.0;
            }
        }
    }
    Ok((u, t))
}

/// Unit upper triangular `S` with bounded entries, and its inverse.
fn skew_basis(n: usize) -> (DMatrix<f64>, DMatrix<f64>) {
    let s = DMatrix::from_fn(n, n, |i, j| match i.cmp(&j) {
        std::cmp::Ordering::Equal => 1.0,
        std::cmp::Ordering::Less => 0.5 * ((i * n + j + 1) as f64).sin() / (n as f64).sqrt(),
        std::cmp::Ordering::Greater => 0.0,
    });
    let inv = s
        .clone()
        .solve_upper_triangular(&DMatrix::identity(n, n))
        .expect("unit triangular");
    (s, inv)
}

/// Largest real part among the eigenvalues of a quasi-triangular matrix.
fn quasi_triangular_abscissa(t: &DMatrix<f64>, blocks: &[(usize, usize)]) -> f64 {
    let mut best = f64::NEG_INFINITY;
    for &(s, k) in blocks {
        let re = match k {
            1 => t[(s, s)],
            2 => {
                let (a, b, c, d) = (t[(s, s)], t[(s, s + 1)], t[(s + 1, s)], t[(s + 1, s + 1)]);
                let half_tr = 0.5 * (a + d);
                let disc = 0.25 * (a - d) * (a - d) + b * c;
                if disc >= 0.0 {
                    half_tr + disc.sqrt()
                } else {
                    half_tr
                }
            }
            _ => t
                .view((s, s), (k, k))
                .clone_owned()
                .complex_eigenvalues()
                .iter()
                .map(|z| z.re)
                .fold(f64::NEG_INFINITY, f64::max),
        };
        best = best.max(re);
    }
    best
}

/// Largest real part of the eigenvalues of `a`.
pub fn spectral_abscissa(a: &DMatrix<f64>) -> Result<f64> {
    if a.is_empty() {
        return Ok(f64::NEG_INFINITY);
    }
    let (_, t) = real_schur(a)?;
    Ok(quasi_triangular_abscissa(&t, &diagonal_blocks(&t)))
}

/// Solver for `A W + W Aᵀ + Q = 0` that factors `A = U T Uᵀ` once and reuses
/// the real Schur form for every right-hand side.
#[derive(Clone, Debug)]
pub struct LyapunovSolver {
    u: DMatrix<f64>,
    t: DMatrix<f64>,
    blocks: Vec<(usize, usize)>,
    abscissa: f64,
}

impl LyapunovSolver {
    /// Factors `a`. Does not require `a` to be Hurwitz; see
    /// [`LyapunovSolver::abscissa`].
    pub fn new(a: &DMatrix<f64>) -> Result<Self> {
        let (u, t) = real_schur(a)?;
        let blocks = diagonal_blocks(&t);
        let abscissa = if a.is_empty() {
            f64::NEG_INFINITY
        } else {
            quasi_triangular_abscissa(&t, &blocks)
        };
        Ok(LyapunovSolver {
            u,
            t,
            blocks,
            abscissa,
        })
    }

    pub fn dim(&self) -> usize {
        self.t.nrows()
    }

    /// Spectral abscissa of the factored matrix.
    pub fn abscissa(&self) -> f64 {
        self.abscissa
    }

    /// Orthogonal Schur basis `U`.
    pub fn basis(&self) -> &DMatrix<f64> {
        &self.u
    }

    /// Solves `A W + W Aᵀ + Q = 0`. The result is symmetrized.
    pub fn solve(&self, q: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        let f = self.u.transpose() * q * &self.u;
        let y = self.solve_schur(&f)?;
        Ok(symmetrize(&(&self.u * y * self.u.transpose())))
    }

    /// Solves `T Y + Y Tᵀ + F = 0` in the Schur basis, where
    /// `F = Uᵀ Q U`; the physical solution is `U Y Uᵀ`.
    pub fn solve_schur(&self, f: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        let n = self.dim();
        if f.nrows() != n || f.ncols() != n {
            return Err(Error::Numerical(format!(
                "right-hand side is {}x{}, expected {n}x{n}",
                f.nrows(),
                f.ncols()
            )));
        }
        let t = &self.t;
        let mut y = DMatrix::<f64>::zeros(n, n);

        // Column blocks from the right: T Z + Z Sᵀ = R with Z = Y[:, J].
        for &(js, jk) in self.blocks.iter().rev() {
            let mut r = DMatrix::<f64>::zeros(n, jk);
            for c in 0..jk {
                let col = js + c;
                for i in 0..n {
                    r[(i, c)] = -f[(i, col)];
                }
                // - Σ_{l beyond J} Y[:, l] T[col, l]
                for l in (js + jk)..n {
                    let tjl = t[(col, l)];
                    if tjl != 0.0 {
                        for i in 0..n {
                            r[(i, c)] -= y[(i, l)] * tjl;
                        }
                    }
                }
            }
            let s = t.view((js, js), (jk, jk)).clone_owned();

            // Row blocks from the bottom.
            for &(is, ik) in self.blocks.iter().rev() {
                let mut rhs = r.view((is, 0), (ik, jk)).clone_owned();
                for k in (is + ik)..n {
                    for c in 0..jk {
                        let zkc = y[(k, js + c)];
                        if zkc != 0.0 {
                            for i in 0..ik {
                                rhs[(i, c)] -= t[(is + i, k)] * zkc;
                            }
                        }
                    }
                }
                let z = if ik == 1 && jk == 1 {
                    let denom = t[(is, is)] + s[(0, 0)];
                    if denom == 0.0 {
                        return Err(Error::Numerical(
                            "Lyapunov operator is singular (eigenvalues sum to zero)".into(),
                        ));
                    }
                    DMatrix::from_element(1, 1, rhs[(0, 0)] / denom)
                } else {
                    let tii = t.view((is, is), (ik, ik)).clone_owned();
                    small_sylvester(&tii, &s, &rhs)?
                };
                y.view_mut((is, js), (ik, jk)).copy_from(&z);
            }
        }
        Ok(y)
    }
}

/// Solves `T Z + Z Sᵀ = R` for small dense blocks via the Kronecker form.
fn small_sylvester(t: &DMatrix<f64>, s: &DMatrix<f64>, r: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let (p, q) = (t.nrows(), s.nrows());
    let dim = p * q;
    let mut k = DMatrix::<f64>::zeros(dim, dim);
    // vec(T Z) = (I ⊗ T) vec Z ; vec(Z Sᵀ) = (S ⊗ I) vec Z
    for c in 0..q {
        for i in 0..p {
            for j in 0..p {
                k[(c * p + i, c * p + j)] += t[(i, j)];
            }
        }
        for c2 in 0..q {
            for i in 0..p {
                k[(c * p + i, c2 * p + i)] += s[(c, c2)];
            }
        }
    }
    let rhs = DVector::from_iterator(dim, r.iter().copied());
    let sol = k
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::Numerical("Lyapunov operator is singular on a block".into()))?;
    Ok(DMatrix::from_column_slice(p, q, sol.as_slice()))
}

// 7-point Gauss / 15-point Kronrod nodes and weights on [-1, 1].
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

struct Panel {
    a: f64,
    b: f64,
    value: DMatrix<f64>,
    error: f64,
}

fn gk15<F>(f: &F, a: f64, b: f64) -> Panel
where
    F: Fn(f64) -> DMatrix<f64>,
{
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kron = &fc * WGK[7];
    let mut gauss = &fc * WG[3];
    for (i, (&x, &wk)) in XGK.iter().zip(WGK.iter()).take(7).enumerate() {
        let f1 = f(c - h * x);
        let f2 = f(c + h * x);
        let sum = f1 + f2;
        kron += &sum * wk;
        if i % 2 == 1 {
            gauss += &sum * WG[i / 2];
        }
    }
    let value = kron * h;
    let error = (&value - gauss * h).norm();
    Panel { a, b, value, error }
}

/// Adaptive Gauss–Kronrod (G7/K15) integration of a matrix-valued function.
///
/// Bisects the panel with the largest error estimate until the summed
/// Frobenius error is below `rel_tol · ‖∫f‖_F` (or an absolute floor), or
/// fails after `max_panels` panels.
pub fn integrate_matrix<F>(f: F, a: f64, b: f64, rel_tol: f64, max_panels: usize) -> Result<DMatrix<f64>>
where
    F: Fn(f64) -> DMatrix<f64>,
{
    let mut panels = vec![gk15(&f, a, b)];
    loop {
        let total = panels
            .iter()
            .skip(1)
            .fold(panels[0].value.clone(), |acc, p| acc + &p.value);
        let err: f64 = panels.iter().map(|p| p.error).sum();
        let scale = total.norm();
        if err <= rel_tol * scale || err <= f64::MIN_POSITIVE {
            return Ok(total);
        }
        if !err.is_finite() {
            return Err(Error::Numerical("quadrature produced non-finite values".into()));
        }
        if panels.len() >= max_panels {
            return Err(Error::Numerical(format!(
                "quadrature budget of {max_panels} panels exceeded (error {err:.3e}, scale {scale:.3e})"
            )));
        }
        let worst = panels
            .iter()
            .enumerate()
            .max_by(|x, y| x.1.error.total_cmp(&y.1.error))
            .map(|(i, _)| i)
            .unwrap_or(0);
        let p = panels.swap_remove(worst);
        let mid = 0.5 * (p.a + p.b);
        if mid <= p.a || mid >= p.b {
            // Panel can no longer be split in floating point.
            return Ok(total);
        }
        panels.push(gk15(&f, p.a, mid));
        panels.push(gk15(&f, mid, p.b));
    }
}

/// Finite-horizon integrator for `W(t) = ∫_0^t e^{Aτ} Q e^{Aᵀτ} dτ` by
/// scaling and doubling.
///
/// The horizon is split as `t = 2^s h` with `‖A‖₁ h ≤ 1`. The base panel
/// `W(h)` is a 15-point Kronrod rule, and `W(2τ) = W(τ) + e^{Aτ} W(τ) e^{Aᵀτ}`
/// doubles it `s` times. For nonnegative `e^{Aτ}` and `Q` every step adds
/// nonnegative terms, so small entries keep their relative accuracy, which
/// the subtraction `W(∞) - e^{At} W(∞) e^{Aᵀt}` does not.
#[derive(Clone, Debug)]
pub struct DoublingIntegrator {
    n: usize,
    /// `(weight · h/2, e^{Aτ_i})` for the base panel nodes.
    nodes: Vec<(f64, DMatrix<f64>)>,
    /// `e^{A h 2^i}` for `i = 0..s`.
    powers: Vec<DMatrix<f64>>,
}

impl DoublingIntegrator {
    pub fn new(a: &DMatrix<f64>, t: f64) -> Result<Self> {
        if !(t >= 0.0 && t.is_finite()) {
            return Err(Error::InvalidParameter(format!("bad horizon {t}")));
        }
        if a.iter().any(|x| !x.is_finite()) {
            return Err(Error::Numerical("matrix has non-finite entries".into()));
        }
        let n = a.nrows();
        let norm = a.column_iter().map(|c| c.lp_norm(1)).fold(0.0, f64::max);
        let steps = if norm * t > 1.0 {
            (norm * t).log2().ceil() as i32
        } else {
            0
        };
        let h = t / 2f64.powi(steps);
        let c = 0.5 * h;
        let mut nodes = vec![(c * WGK[7], expm(&(a * c)))];
        for (&x, &w) in XGK.iter().zip(WGK.iter()).take(7) {
            nodes.push((c * w, expm(&(a * (c - c * x)))));
            nodes.push((c * w, expm(&(a * (c + c * x)))));
        }
        let mut powers = Vec::with_capacity(steps as usize);
        let mut e = expm(&(a * h));
        for _ in 0..steps {
            let next = &e * &e;
            powers.push(e);
            e = next;
        }
        Ok(DoublingIntegrator { n, nodes, powers })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    fn double(&self, mut w: DMatrix<f64>) -> DMatrix<f64> {
        for e in &self.powers {
            w += e * &w * e.transpose();
            w = symmetrize(&w);
        }
        w
    }

    /// `W(t)` for a general symmetric `Q`.
    pub fn integrate(&self, q: &DMatrix<f64>) -> DMatrix<f64> {
        let mut w = DMatrix::zeros(self.n, self.n);
        for (wt, g) in &self.nodes {
            w += g * q * g.transpose() * *wt;
        }
        self.double(symmetrize(&w))
    }

    /// `W(t)` for `Q = B Bᵀ`.
    pub fn integrate_factor(&self, b: &DMatrix<f64>) -> DMatrix<f64> {
        let mut w = DMatrix::zeros(self.n, self.n);
        for (wt, g) in &self.nodes {
            let gb = g * b;
            w += &gb * gb.transpose() * *wt;
        }
        self.double(symmetrize(&w))
    }

    /// `W(t)` for the single-node input `Q = e_k e_kᵀ`.
    pub fn integrate_node(&self, k: usize) -> DMatrix<f64> {
        let mut w = DMatrix::zeros(self.n, self.n);
        for (wt, g) in &self.nodes {
            let col = g.column(k);
            w.ger(*wt, &col, &col, 1.0);
        }
        self.double(w)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn residual(a: &DMatrix<f64>, w: &DMatrix<f64>, q: &DMatrix<f64>) -> f64 {
        (a * w + w * a.transpose() + q).norm()
    }

    #[test]
    fn decoupled_scalar() {
        let a = -DMatrix::<f64>::identity(2, 2);
        let w = LyapunovSolver::new(&a).unwrap().solve(&DMatrix::identity(2, 2)).unwrap();
        assert_relative_eq!(w, DMatrix::identity(2, 2) * 0.5, epsilon = 1e-15);
    }

    #[test]
    fn path_hand_solution() {
        let a = DMatrix::from_row_slice(2, 2, &[-1.0, 0.0, 1.0, -1.0]);
        let mut q = DMatrix::zeros(2, 2);
        q[(0, 0)] = 1.0;
        let w = LyapunovSolver::new(&a).unwrap().solve(&q).unwrap();
        let expect = DMatrix::from_row_slice(2, 2, &[0.5, 0.25, 0.25, 0.25]);
        assert_relative_eq!(w, expect, epsilon = 1e-14);
    }

    #[test]
    fn complex_pair_blocks() {
        // Rotation-dominated stable matrix forces 2x2 Schur blocks.
        let a = DMatrix::from_row_slice(
            4,
            4,
            &[
                -0.5, 3.0, 0.1, 0.0, //
                -3.0, -0.5, 0.0, 0.2, //
                0.0, 0.3, -1.0, 2.0, //
                0.1, 0.0, -2.0, -1.0,
            ],
        );
        let b = DMatrix::from_row_slice(4, 2, &[1.0, 0.0, 0.5, 1.0, 0.0, 0.0, 0.0, 2.0]);
        let q = &b * b.transpose();
        let s = LyapunovSolver::new(&a).unwrap();
        assert!(s.abscissa() < 0.0);
        let w = s.solve(&q).unwrap();
        assert!(residual(&a, &w, &q) <= 1e-12 * q.norm());
    }

    #[test]
    fn abscissa_of_rotation() {
        let a = DMatrix::from_row_slice(2, 2, &[0.3, -2.0, 2.0, 0.3]);
        assert_relative_eq!(spectral_abscissa(&a).unwrap(), 0.3, epsilon = 1e-12);
    }

    #[test]
    fn quadrature_of_scalar_exponential() {
        let v = integrate_matrix(|t| DMatrix::from_element(1, 1, (-2.0 * t).exp()), 0.0, 3.0, 1e-12, 500)
            .unwrap();
        assert_relative_eq!(v[(0, 0)], (1.0 - (-6.0f64).exp()) / 2.0, max_relative = 1e-12);
    }

    #[test]
    fn quadrature_budget() {
        let r = integrate_matrix(
            |t| DMatrix::from_element(1, 1, 1.0 / (t - 0.5).abs().max(1e-300).sqrt()),
            0.0,
            1.0,
            1e-14,
            4,
        );
        assert!(r.is_err());
    }

    #[test]
    fn doubling_scalar_closed_forms() {
        for (a, t) in [(-0.5, 1.0), (-3.0, 5.0), (2.0, 1.5), (0.0, 2.0)] {
            let m = DMatrix::from_element(1, 1, a);
            let w = DoublingIntegrator::new(&m, t).unwrap().integrate(&DMatrix::identity(1, 1));
            let expect = if a == 0.0 { t } else { ((2.0 * a * t).exp() - 1.0) / (2.0 * a) };
            assert_relative_eq!(w[(0, 0)], expect, max_relative = 1e-13);
        }
    }

    #[test]
    fn doubling_zero_horizon_and_input_forms_agree() {
        let a = DMatrix::from_row_slice(3, 3, &[-2.0, 0.0, 1.0, 1.0, -2.0, 0.0, 0.5, 1.0, -2.0]);
        let zero = DoublingIntegrator::new(&a, 0.0).unwrap();
        assert_eq!(zero.integrate_node(1), DMatrix::zeros(3, 3));
        let int = DoublingIntegrator::new(&a, 3.0).unwrap();
        let b = DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 0.0, 0.0, 0.0, 2.0]);
        let from_q = int.integrate(&(&b * b.transpose()));
        let from_b = int.integrate_factor(&b);
        let from_nodes = int.integrate_node(0) + int.integrate_node(2) * 4.0;
        assert_relative_eq!(from_q, from_b, max_relative = 1e-13);
        assert_relative_eq!(from_q, from_nodes, max_relative = 1e-13);
    }

    #[test]
    fn doubling_matches_lyapunov_limit() {
        let a = DMatrix::from_row_slice(2, 2, &[-1.0, 0.0, 1.0, -1.0]);
        let mut q = DMatrix::zeros(2, 2);
        q[(0, 0)] = 1.0;
        let w = DoublingIntegrator::new(&a, 60.0).unwrap().integrate(&q);
        let expect = DMatrix::from_row_slice(2, 2, &[0.5, 0.25, 0.25, 0.25]);
        assert_relative_eq!(w, expect, epsilon = 1e-12);
    }
}
