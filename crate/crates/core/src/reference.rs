//! Reference trajectory parametrization.
//!
//! A reference is described at time step `k` by an `n×p` coefficient
//! matrix `P` over a fixed basis `ρ(i)`, so that the reference `i` steps
//! ahead is `r(P, i) = P ρ(i)`. Advancing the local time by `i` steps is
//! a right-multiplication with a shift matrix `T(i)` satisfying
//! `ρ(i + j) = T(i) ρ(j)`, which gives `P⁽ⁱ⁾ = P T(i)`.
//!
//! For piecewise references, knot parameter matrices spaced `d` steps
//! apart are fitted by cubic-spline interpolation of sampled reference
//! points; in between knots the parameters are obtained by shifting.

use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{Complex, DMatrix, DVector};

use crate::error::{Error, Result};

/// Built-in basis families for `ρ(i)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BasisKind {
    /// `ρ(i) = [(iT)³, (iT)², iT, 1]ᵀ`
    CubicPoly,
    /// `ρ(i) = [iT, 1]ᵀ`
    Linear,
    /// `ρ(i) = [1]`
    ZeroOrderHold,
}

impl BasisKind {
    /// Basis dimension `p`.
    pub fn dim(self) -> usize {
        match self {
            BasisKind::CubicPoly => 4,
            BasisKind::Linear => 2,
            BasisKind::ZeroOrderHold => 1,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            BasisKind::CubicPoly => "cubic",
            BasisKind::Linear => "linear",
            BasisKind::ZeroOrderHold => "zoh",
        }
    }
}

/// A basis family together with the sample time `T` that converts step
/// offsets into local polynomial time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BasisFamily {
    pub kind: BasisKind,
    pub sample_time: f64,
}

impl BasisFamily {
    pub fn new(kind: BasisKind, sample_time: f64) -> Result<Self> {
        if !sample_time.is_finite() || sample_time <= 0.0 {
            return Err(Error::InvalidParameter {
                what: "sample_time must be positive and finite",
            });
        }
        Ok(BasisFamily { kind, sample_time })
    }

    pub fn cubic(sample_time: f64) -> Result<Self> {
        Self::new(BasisKind::CubicPoly, sample_time)
    }

    pub fn linear(sample_time: f64) -> Result<Self> {
        Self::new(BasisKind::Linear, sample_time)
    }

    pub fn zero_order_hold(sample_time: f64) -> Result<Self> {
        Self::new(BasisKind::ZeroOrderHold, sample_time)
    }

    /// Basis dimension `p`.
    pub fn dim(&self) -> usize {
        self.kind.dim()
    }

    /// Evaluate `ρ(i)`.
    pub fn eval(&self, i: usize) -> DVector<f64> {
        let t = i as f64 * self.sample_time;
        match self.kind {
            BasisKind::CubicPoly => DVector::from_column_slice(&[t * t * t, t * t, t, 1.0]),
            BasisKind::Linear => DVector::from_column_slice(&[t, 1.0]),
            BasisKind::ZeroOrderHold => DVector::from_element(1, 1.0),
        }
    }

    /// The shift matrix `T(i)` with `ρ(i + j) = T(i) ρ(j)` for all `j`.
    ///
    /// For polynomial bases this is the unique upper unitriangular
    /// translation matrix; the family satisfies the semigroup identity
    /// `T(i) T(j) = T(i + j)`.
    pub fn shift(&self, i: usize) -> DMatrix<f64> {
        let a = i as f64 * self.sample_time;
        match self.kind {
            BasisKind::CubicPoly => DMatrix::from_row_slice(
                4,
                4,
                &[
                    1.0,
                    3.0 * a,
                    3.0 * a * a,
                    a * a * a,
                    0.0,
                    1.0,
                    2.0 * a,
                    a * a,
                    0.0,
                    0.0,
                    1.0,
                    a,
                    0.0,
                    0.0,
                    0.0,
                    1.0,
                ],
            ),
            BasisKind::Linear => DMatrix::from_row_slice(2, 2, &[1.0, a, 0.0, 1.0]),
            BasisKind::ZeroOrderHold => DMatrix::identity(1, 1),
        }
    }
}

/// Result of the reference-shift stability check: eigenvalues of
/// `√γ·T(1)` and whether all of them lie strictly inside the unit circle.
#[derive(Debug, Clone)]
pub struct ShiftStabilityReport {
    pub eigenvalues: Vec<Complex<f64>>,
    pub pass: bool,
}

/// Check that all eigenvalues of `√γ·T(1)` have modulus below one.
///
/// For the built-in polynomial bases `T(1)` is unitriangular, so every
/// eigenvalue equals `√γ` and the check passes for any `γ < 1`.
pub fn check_shift_stability(family: &BasisFamily, gamma: f64) -> Result<ShiftStabilityReport> {
    if !(0.0..1.0).contains(&gamma) {
        return Err(Error::InvalidParameter {
            what: "gamma must lie in [0, 1)",
        });
    }
    let scaled = family.shift(1) * libm::sqrt(gamma);
    let eigenvalues: Vec<Complex<f64>> = scaled.complex_eigenvalues().iter().copied().collect();
    let pass = eigenvalues.iter().all(|&l| crate::complex_modulus(l) < 1.0);
    Ok(ShiftStabilityReport { eigenvalues, pass })
}

/// Reference coefficient matrix `P ∈ R^{n×p}` over an attached basis.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamMatrix {
    pub values: DMatrix<f64>,
    pub family: BasisFamily,
}

impl ParamMatrix {
    pub fn new(values: DMatrix<f64>, family: BasisFamily) -> Result<Self> {
        if values.ncols() != family.dim() {
            return Err(Error::DimensionMismatch {
                what: "parameter matrix columns",
                expected: family.dim(),
                got: values.ncols(),
            });
        }
        Ok(ParamMatrix { values, family })
    }

    pub fn zeros(n: usize, family: BasisFamily) -> Self {
        ParamMatrix {
            values: DMatrix::zeros(n, family.dim()),
            family,
        }
    }

    /// State dimension `n`.
    pub fn n(&self) -> usize {
        self.values.nrows()
    }

    /// Basis dimension `p`.
    pub fn p(&self) -> usize {
        self.values.ncols()
    }

    /// The reference point `r(P, i) = P ρ(i)`.
    pub fn point(&self, i: usize) -> DVector<f64> {
        &self.values * self.family.eval(i)
    }

    /// The shifted parameters `P⁽ⁱ⁾ = P T(i)`, satisfying
    /// `r(P⁽ⁱ⁾, j) = r(P, i + j)`.
    pub fn shift(&self, i: usize) -> ParamMatrix {
        if i == 0 {
            return self.clone();
        }
        ParamMatrix {
            values: &self.values * self.family.shift(i),
            family: self.family,
        }
    }

    /// Rows of `P` stacked into one `n·p` vector, `(p_1, …, p_n)`.
    pub fn rows_stacked(&self) -> DVector<f64> {
        let (n, p) = (self.n(), self.p());
        let mut out = DVector::zeros(n * p);
        for row in 0..n {
            for col in 0..p {
                out[row * p + col] = self.values[(row, col)];
            }
        }
        out
    }

    /// Inverse of [`rows_stacked`](Self::rows_stacked).
    pub fn from_stacked_rows(stacked: &DVector<f64>, n: usize, family: BasisFamily) -> Result<Self> {
        let p = family.dim();
        if stacked.len() != n * p {
            return Err(Error::DimensionMismatch {
                what: "stacked parameter rows",
                expected: n * p,
                got: stacked.len(),
            });
        }
        let values = DMatrix::from_fn(n, p, |r, c| stacked[r * p + c]);
        Ok(ParamMatrix { values, family })
    }
}

/// Knot parameter matrices spaced `spacing` steps apart, covering steps
/// `0..=horizon`.
#[derive(Debug, Clone)]
pub struct KnotSeries {
    knots: Vec<ParamMatrix>,
    pub spacing: usize,
    pub horizon: usize,
    pub family: BasisFamily,
}

impl KnotSeries {
    /// Fit one not-a-knot cubic spline per state dimension through
    /// `samples` given at steps `0, d, 2d, …` and return the per-knot
    /// coefficient matrices, re-expressed in local time so that
    /// `knot_j.point(0)` reproduces sample `j` exactly and
    /// `knot_j.point(d)` the following one.
    ///
    /// The final knot extrapolates the last spline piece so that
    /// [`params_at`](Self::params_at) is defined up to the last sample
    /// step inclusive.
    pub fn fit_cubic_spline(
        samples: &[(usize, DVector<f64>)],
        spacing: usize,
        family: BasisFamily,
    ) -> Result<Self> {
        if family.kind != BasisKind::CubicPoly {
            return Err(Error::UnsupportedBasis { op: "spline fit" });
        }
        if spacing == 0 {
            return Err(Error::InvalidParameter {
                what: "knot spacing must be at least 1",
            });
        }
        if samples.len() < 4 {
            return Err(Error::InsufficientSamples {
                got: samples.len(),
                needed: 4,
            });
        }
        let n = samples[0].1.len();
        for (j, (step, value)) in samples.iter().enumerate() {
            if *step != j * spacing {
                return Err(Error::BadKnotSpacing {
                    at: j,
                    expected: j * spacing,
                    got: *step,
                });
            }
            if value.len() != n {
                return Err(Error::DimensionMismatch {
                    what: "reference sample",
                    expected: n,
                    got: value.len(),
                });
            }
        }

        let pieces = samples.len() - 1;
        let h = spacing as f64 * family.sample_time;
        let mut knots = vec![ParamMatrix::zeros(n, family); pieces];
        for dim in 0..n {
            let ys: Vec<f64> = samples.iter().map(|(_, v)| v[dim]).collect();
            let moments = not_a_knot_moments(&ys, h);
            for j in 0..pieces {
                // Power-form coefficients of piece j in local time τ ∈ [0, h]:
                // s(τ) = c0 + c1 τ + c2 τ² + c3 τ³.
                let c0 = ys[j];
                let c1 = (ys[j + 1] - ys[j]) / h - h * (2.0 * moments[j] + moments[j + 1]) / 6.0;
                let c2 = moments[j] / 2.0;
                let c3 = (moments[j + 1] - moments[j]) / (6.0 * h);
                knots[j].values[(dim, 0)] = c3;
                knots[j].values[(dim, 1)] = c2;
                knots[j].values[(dim, 2)] = c1;
                knots[j].values[(dim, 3)] = c0;
            }
        }
        // Continue the last cubic piece past the final sample.
        let last = knots[pieces - 1].shift(spacing);
        knots.push(last);

        Ok(KnotSeries {
            knots,
            spacing,
            horizon: pieces * spacing,
            family,
        })
    }

    /// Exact knot at index `j` (step `j·spacing`).
    pub fn knot(&self, j: usize) -> &ParamMatrix {
        &self.knots[j]
    }

    pub fn num_knots(&self) -> usize {
        self.knots.len()
    }

    /// State dimension of the reference.
    pub fn n(&self) -> usize {
        self.knots[0].n()
    }

    /// The parameter matrix at step `k`: the enclosing knot shifted by
    /// the offset into its segment, `P_k = P_{dj} T(k − dj)`.
    pub fn params_at(&self, k: usize) -> Result<ParamMatrix> {
        if k > self.horizon {
            return Err(Error::OutOfHorizon {
                step: k,
                horizon: self.horizon,
            });
        }
        let j = k / self.spacing;
        Ok(self.knots[j].shift(k - j * self.spacing))
    }
}

/// Second derivatives of the not-a-knot cubic spline at uniformly spaced
/// knots. `ys.len() >= 4` is required.
fn not_a_knot_moments(ys: &[f64], h: f64) -> Vec<f64> {
    let k = ys.len() - 1;
    debug_assert!(k >= 3);
    let rhs: Vec<f64> = (1..k)
        .map(|j| 6.0 * (ys[j - 1] - 2.0 * ys[j] + ys[j + 1]) / (h * h))
        .collect();

    let mut m = vec![0.0; k + 1];
    // With uniform spacing, the not-a-knot conditions M0 − 2M1 + M2 = 0 and
    // M_{K-2} − 2M_{K-1} + M_K = 0 pin the first and last interior moments
    // directly; the rest is a tridiagonal system with diagonal 4.
    m[1] = rhs[0] / 6.0;
    m[k - 1] = rhs[k - 2] / 6.0;
    let interior = k as isize - 3;
    if interior > 0 {
        let interior = interior as usize;
        let mut b: Vec<f64> = rhs[1..k - 1].to_vec();
        b[0] -= m[1];
        b[interior - 1] -= m[k - 1];
        // Thomas algorithm, sub/super-diagonals are all ones.
        let mut cp = vec![0.0; interior];
        let mut dp = vec![0.0; interior];
        cp[0] = 1.0 / 4.0;
        dp[0] = b[0] / 4.0;
        for i in 1..interior {
            let denom = 4.0 - cp[i - 1];
            cp[i] = 1.0 / denom;
            dp[i] = (b[i] - dp[i - 1]) / denom;
        }
        m[interior + 1] = dp[interior - 1];
        for i in (0..interior - 1).rev() {
            m[i + 2] = dp[i] - cp[i] * m[i + 3];
        }
    }
    m[0] = 2.0 * m[1] - m[2];
    m[k] = 2.0 * m[k - 1] - m[k - 2];
    m
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn cubic() -> BasisFamily {
        BasisFamily::cubic(0.1).unwrap()
    }

    #[test]
    fn basis_eval_at_zero_keeps_only_constant_term() {
        let rho = cubic().eval(0);
        assert_eq!(rho.as_slice(), &[0.0, 0.0, 0.0, 1.0]);
    }

    #[test]
    fn basis_eval_cubic_two_steps() {
        let rho = cubic().eval(2);
        assert_abs_diff_eq!(rho[0], 0.008, epsilon = 1e-15);
        assert_abs_diff_eq!(rho[1], 0.04, epsilon = 1e-15);
        assert_abs_diff_eq!(rho[2], 0.2, epsilon = 1e-15);
        assert_abs_diff_eq!(rho[3], 1.0, epsilon = 1e-15);
    }

    #[test]
    fn basis_eval_zero_order_hold_is_constant() {
        let family = BasisFamily::zero_order_hold(0.1).unwrap();
        assert_eq!(family.eval(7).as_slice(), &[1.0]);
    }

    #[test]
    fn shift_matrix_cubic_one_step() {
        let t = cubic().shift(1);
        let expected = DMatrix::from_row_slice(
            4,
            4,
            &[
                1.0, 0.3, 0.03, 0.001, //
                0.0, 1.0, 0.2, 0.01, //
                0.0, 0.0, 1.0, 0.1, //
                0.0, 0.0, 0.0, 1.0,
            ],
        );
        assert_abs_diff_eq!((t - expected).norm(), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn shift_matrix_zero_steps_is_identity() {
        for family in [
            cubic(),
            BasisFamily::linear(0.1).unwrap(),
            BasisFamily::zero_order_hold(0.1).unwrap(),
        ] {
            let p = family.dim();
            assert_eq!(family.shift(0), DMatrix::identity(p, p));
        }
    }

    #[test]
    fn shift_matrix_linear_translates_rho() {
        let family = BasisFamily::linear(0.1).unwrap();
        let t3 = family.shift(3);
        for j in 0..=5 {
            let lhs = family.eval(3 + j);
            let rhs = &t3 * family.eval(j);
            assert_abs_diff_eq!((lhs - rhs).norm(), 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn shift_params_zero_matrix_stays_zero() {
        let p = ParamMatrix::zeros(2, cubic());
        assert_eq!(p.shift(5).values, p.values);
    }

    #[test]
    fn shift_params_zero_offset_is_identity() {
        let values = DMatrix::from_row_slice(2, 4, &[0.3, -1.2, 0.7, 2.0, 1.0, 0.0, -0.5, 0.25]);
        let p = ParamMatrix::new(values.clone(), cubic()).unwrap();
        assert_eq!(p.shift(0).values, values);
    }

    #[test]
    fn shift_params_matches_reference_identity() {
        let values = DMatrix::from_row_slice(2, 4, &[0.4, -0.9, 1.3, -2.1, 0.05, 0.4, -0.7, 1.1]);
        let p = ParamMatrix::new(values, cubic()).unwrap();
        let lhs = p.shift(3).point(2);
        let rhs = p.point(5);
        assert_abs_diff_eq!((lhs - rhs).norm(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn reference_point_constant_row() {
        let mut p = ParamMatrix::zeros(2, cubic());
        p.values[(0, 3)] = 1.0;
        let r = p.point(10);
        assert_eq!(r[0], 1.0);
        assert_eq!(r[1], 0.0);
    }

    #[test]
    fn spline_fit_of_sine_interpolates_and_stays_close() {
        // Samples of sin(0.05 kT) every 25 steps; the fitted spline must
        // reproduce the samples exactly and stay within interpolation
        // error of the analytic sine in between.
        let family = cubic();
        let omega = 0.05;
        let samples: Vec<(usize, DVector<f64>)> = (0..=20)
            .map(|j| {
                let k = 25 * j;
                let t = k as f64 * family.sample_time;
                (k, DVector::from_column_slice(&[(omega * t).sin(), 0.0]))
            })
            .collect();
        let knots = KnotSeries::fit_cubic_spline(&samples, 25, family).unwrap();
        for (j, (_, value)) in samples.iter().enumerate() {
            let fitted = knots.knot(j).point(0);
            assert_abs_diff_eq!((fitted - value).norm(), 0.0, epsilon = 1e-9);
        }
        for k in 0..=500usize {
            let r = knots.params_at(k).unwrap().point(0);
            let t = k as f64 * family.sample_time;
            assert!(
                (r[0] - (omega * t).sin()).abs() <= 1e-3,
                "step {k}: spline {} vs sine {}",
                r[0],
                (omega * t).sin()
            );
        }
    }

    #[test]
    fn spline_fit_zero_samples_gives_zero_knots() {
        let samples: Vec<(usize, DVector<f64>)> =
            (0..6).map(|j| (10 * j, DVector::zeros(2))).collect();
        let knots = KnotSeries::fit_cubic_spline(&samples, 10, cubic()).unwrap();
        for j in 0..knots.num_knots() {
            assert_eq!(knots.knot(j).values.norm(), 0.0);
        }
    }

    #[test]
    fn spline_fit_reproduces_cubic_data_exactly() {
        // Not-a-knot interpolation of samples from one global cubic must
        // return that cubic on every piece.
        let family = cubic();
        let poly = |t: f64| 0.5 * t * t * t - 1.25 * t * t + 2.0 * t - 0.75;
        let samples: Vec<(usize, DVector<f64>)> = (0..=6)
            .map(|j| {
                let k = 25 * j;
                (k, DVector::from_column_slice(&[poly(k as f64 * 0.1)]))
            })
            .collect();
        let knots = KnotSeries::fit_cubic_spline(&samples, 25, family).unwrap();
        for k in 0..=150usize {
            let r = knots.params_at(k).unwrap().point(0);
            assert_abs_diff_eq!(r[0], poly(k as f64 * 0.1), epsilon = 1e-9);
        }
    }

    #[test]
    fn spline_fit_rejects_three_samples() {
        let samples: Vec<(usize, DVector<f64>)> =
            (0..3).map(|j| (25 * j, DVector::zeros(1))).collect();
        let err = KnotSeries::fit_cubic_spline(&samples, 25, cubic()).unwrap_err();
        assert_eq!(err, Error::InsufficientSamples { got: 3, needed: 4 });
    }

    #[test]
    fn spline_fit_rejects_non_uniform_spacing() {
        let mut samples: Vec<(usize, DVector<f64>)> =
            (0..5).map(|j| (25 * j, DVector::zeros(1))).collect();
        samples[3].0 = 80;
        let err = KnotSeries::fit_cubic_spline(&samples, 25, cubic()).unwrap_err();
        assert!(matches!(err, Error::BadKnotSpacing { at: 3, .. }));
    }

    #[test]
    fn spline_fit_rejects_non_cubic_basis() {
        let samples: Vec<(usize, DVector<f64>)> =
            (0..5).map(|j| (25 * j, DVector::zeros(1))).collect();
        let family = BasisFamily::linear(0.1).unwrap();
        let err = KnotSeries::fit_cubic_spline(&samples, 25, family).unwrap_err();
        assert!(matches!(err, Error::UnsupportedBasis { .. }));
    }

    #[test]
    fn params_at_knot_is_exact() {
        let samples: Vec<(usize, DVector<f64>)> = (0..=5)
            .map(|j| (25 * j, DVector::from_column_slice(&[(j as f64).sin()])))
            .collect();
        let knots = KnotSeries::fit_cubic_spline(&samples, 25, cubic()).unwrap();
        assert_eq!(knots.params_at(50).unwrap().values, knots.knot(2).values);
    }

    #[test]
    fn params_at_is_continuous_across_knots() {
        let samples: Vec<(usize, DVector<f64>)> = (0..=5)
            .map(|j| (25 * j, DVector::from_column_slice(&[(0.7 * j as f64).cos()])))
            .collect();
        let knots = KnotSeries::fit_cubic_spline(&samples, 25, cubic()).unwrap();
        let left = knots.params_at(24).unwrap().point(1);
        let right = knots.params_at(25).unwrap().point(0);
        assert_abs_diff_eq!((left - right).norm(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn params_at_rejects_past_horizon() {
        let samples: Vec<(usize, DVector<f64>)> =
            (0..=4).map(|j| (25 * j, DVector::zeros(1))).collect();
        let knots = KnotSeries::fit_cubic_spline(&samples, 25, cubic()).unwrap();
        assert_eq!(knots.horizon, 100);
        assert!(knots.params_at(100).is_ok());
        assert_eq!(
            knots.params_at(101).unwrap_err(),
            Error::OutOfHorizon {
                step: 101,
                horizon: 100
            }
        );
    }

    #[test]
    fn shift_stability_cubic() {
        let report = check_shift_stability(&cubic(), 0.9).unwrap();
        assert!(report.pass);
        assert_eq!(report.eigenvalues.len(), 4);
        for l in &report.eigenvalues {
            assert_abs_diff_eq!(crate::complex_modulus(*l), 0.9f64.sqrt(), epsilon = 1e-9);
        }
    }

    #[test]
    fn shift_stability_gamma_zero_passes() {
        for family in [
            cubic(),
            BasisFamily::linear(0.1).unwrap(),
            BasisFamily::zero_order_hold(0.1).unwrap(),
        ] {
            assert!(check_shift_stability(&family, 0.0).unwrap().pass);
        }
    }

    #[test]
    fn shift_stability_zero_order_hold() {
        let family = BasisFamily::zero_order_hold(0.1).unwrap();
        let report = check_shift_stability(&family, 0.99).unwrap();
        assert!(report.pass);
        assert_abs_diff_eq!(
            crate::complex_modulus(report.eigenvalues[0]),
            0.99f64.sqrt(),
            epsilon = 1e-12
        );
    }

    #[test]
    fn shift_stability_rejects_gamma_one() {
        assert!(check_shift_stability(&cubic(), 1.0).is_err());
    }
}
