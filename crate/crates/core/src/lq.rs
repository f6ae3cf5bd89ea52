//! Model-based ground truth for the tracking problem.
//!
//! Lifting the plant state with the stacked reference parameter rows
//! turns discounted LQ tracking into a regulation problem for an
//! extended system `(Ã, B̃, Q̃, R)`. Its discounted Riccati solution
//! yields the optimal tracking gain `L` with `u = −L·(x, p_1, …, p_n)`,
//! which serves as the reference answer for everything the learner
//! estimates from data.

use alloc::vec::Vec;

use nalgebra::{Cholesky, Complex, DMatrix, DVector};

use crate::error::{Error, Result};
use crate::qtracker::{HMatrix, ZDims};
use crate::reference::BasisFamily;

/// Relative singular-value cutoff used for all rank decisions.
pub const RANK_REL_CUTOFF: f64 = 1e-8;

pub const DEFAULT_DARE_TOL: f64 = 1e-12;
pub const DEFAULT_DARE_MAX_ITER: usize = 100_000;

/// Numerical rank of a matrix: singular values at or above
/// `RANK_REL_CUTOFF` times the largest one.
pub fn matrix_rank(m: &DMatrix<f64>) -> usize {
    let sv = m.clone().singular_values();
    let largest = sv.max();
    if largest == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s >= RANK_REL_CUTOFF * largest).count()
}

/// Discrete-time linear plant `x⁺ = A x + B u`.
#[derive(Debug, Clone, PartialEq)]
pub struct PlantModel {
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
}

impl PlantModel {
    /// Build a plant, verifying shape consistency and controllability of
    /// `(A, B)` via the rank of the controllability matrix.
    pub fn new(a: DMatrix<f64>, b: DMatrix<f64>) -> Result<Self> {
        if !a.is_square() {
            return Err(Error::DimensionMismatch {
                what: "plant A columns",
                expected: a.nrows(),
                got: a.ncols(),
            });
        }
        if b.nrows() != a.nrows() {
            return Err(Error::DimensionMismatch {
                what: "plant B rows",
                expected: a.nrows(),
                got: b.nrows(),
            });
        }
        let rank = controllability_rank(&a, &b);
        if rank < a.nrows() {
            return Err(Error::Uncontrollable { rank, n: a.nrows() });
        }
        Ok(PlantModel { a, b })
    }

    pub fn n(&self) -> usize {
        self.a.nrows()
    }

    pub fn m(&self) -> usize {
        self.b.ncols()
    }

    /// One plant step `A x + B u`.
    pub fn step(&self, x: &DVector<f64>, u: &DVector<f64>) -> DVector<f64> {
        &self.a * x + &self.b * u
    }
}

/// Rank of `[B, AB, …, A^{n−1}B]`.
pub fn controllability_rank(a: &DMatrix<f64>, b: &DMatrix<f64>) -> usize {
    let n = a.nrows();
    let m = b.ncols();
    let mut ctrb = DMatrix::zeros(n, n * m);
    let mut block = b.clone();
    for i in 0..n {
        ctrb.view_mut((0, i * m), (n, m)).copy_from(&block);
        block = a * block;
    }
    matrix_rank(&ctrb)
}

/// Bilinear (Tustin) discretization of the mass-spring-damper
/// `m ẍ = −c x − d ẋ + u` with state (position, velocity):
/// `A = (I − T/2·A_c)⁻¹ (I + T/2·A_c)`, `B = (I − T/2·A_c)⁻¹ T·B_c`.
pub fn tustin_discretize(
    mass: f64,
    spring: f64,
    damper: f64,
    sample_time: f64,
) -> Result<PlantModel> {
    if !mass.is_finite() || mass <= 0.0 {
        return Err(Error::InvalidParameter {
            what: "mass must be positive and finite",
        });
    }
    if !sample_time.is_finite() || sample_time <= 0.0 {
        return Err(Error::InvalidParameter {
            what: "sample_time must be positive and finite",
        });
    }
    let a_c = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -spring / mass, -damper / mass]);
    let b_c = DMatrix::from_row_slice(2, 1, &[0.0, 1.0 / mass]);
    let half = &a_c * (sample_time / 2.0);
    let minus = DMatrix::identity(2, 2) - &half;
    let inv = minus.try_inverse().ok_or(Error::DiscretizationSingular)?;
    let a = &inv * (DMatrix::identity(2, 2) + &half);
    let b = &inv * (b_c * sample_time);
    PlantModel::new(a, b)
}

/// Quadratic stage-cost weights and the discount factor.
#[derive(Debug, Clone, PartialEq)]
pub struct CostSpec {
    pub q: DMatrix<f64>,
    pub r: DMatrix<f64>,
    pub gamma: f64,
}

impl CostSpec {
    /// Validates symmetry, `Q ⪰ 0`, `R ≻ 0` and `γ ∈ [0, 1)`.
    pub fn new(q: DMatrix<f64>, r: DMatrix<f64>, gamma: f64) -> Result<Self> {
        if !q.is_square() {
            return Err(Error::DimensionMismatch {
                what: "Q columns",
                expected: q.nrows(),
                got: q.ncols(),
            });
        }
        if !r.is_square() {
            return Err(Error::DimensionMismatch {
                what: "R columns",
                expected: r.nrows(),
                got: r.ncols(),
            });
        }
        if !(0.0..1.0).contains(&gamma) {
            return Err(Error::InvalidParameter {
                what: "gamma must lie in [0, 1)",
            });
        }
        if !is_symmetric(&q) || !is_psd(&q) {
            return Err(Error::InvalidParameter {
                what: "Q must be symmetric positive semidefinite",
            });
        }
        if !is_symmetric(&r) || Cholesky::new(r.clone()).is_none() {
            return Err(Error::InvalidParameter {
                what: "R must be symmetric positive definite",
            });
        }
        Ok(CostSpec { q, r, gamma })
    }

    pub fn n(&self) -> usize {
        self.q.nrows()
    }

    pub fn m(&self) -> usize {
        self.r.nrows()
    }
}

fn is_symmetric(m: &DMatrix<f64>) -> bool {
    let scale = 1.0 + m.amax();
    (m - m.transpose()).amax() <= 1e-12 * scale
}

fn is_psd(m: &DMatrix<f64>) -> bool {
    let sym = (m + m.transpose()) * 0.5;
    let scale = 1.0 + sym.amax();
    sym.symmetric_eigen()
        .eigenvalues
        .iter()
        .all(|&l| l >= -1e-10 * scale)
}

/// Standard LQ well-posedness checks plus the reference-shift stability
/// condition; all four flags must hold for the tracking Riccati equation
/// to admit a unique stabilizing solution.
#[derive(Debug, Clone)]
pub struct LqAssumptionReport {
    pub q_psd: bool,
    pub r_pd: bool,
    pub controllable: bool,
    pub detectable: bool,
    pub controllability_rank: usize,
    pub observability_rank: usize,
}

impl LqAssumptionReport {
    pub fn pass(&self) -> bool {
        self.q_psd && self.r_pd && self.controllable && self.detectable
    }
}

/// Check `Q ⪰ 0`, `R ≻ 0`, controllability of `(A, B)` and detectability
/// of `(C, A)` with `CᵀC = Q`.
///
/// Detectability is decided from the observability matrix built with `Q`
/// in place of `C` (same null space); if it is rank deficient, `A` is
/// restricted to the unobservable subspace and its spectral radius must
/// be below one.
pub fn check_lq_assumptions(plant: &PlantModel, cost: &CostSpec) -> LqAssumptionReport {
    let n = plant.n();
    let q_psd = is_symmetric(&cost.q) && is_psd(&cost.q);
    let r_pd = is_symmetric(&cost.r) && Cholesky::new(cost.r.clone()).is_some();
    let controllability = controllability_rank(&plant.a, &plant.b);

    let mut obs = DMatrix::zeros(n * n, n);
    let mut block = cost.q.clone();
    for i in 0..n {
        obs.view_mut((i * n, 0), (n, n)).copy_from(&block);
        block = &block * &plant.a;
    }
    let svd = obs.svd(false, true);
    let largest = svd.singular_values.max();
    let obs_rank = if largest == 0.0 {
        0
    } else {
        svd.singular_values
            .iter()
            .filter(|&&s| s >= RANK_REL_CUTOFF * largest)
            .count()
    };
    let detectable = if obs_rank == n {
        true
    } else {
        // Basis of the unobservable subspace: trailing right singular
        // vectors. The subspace is A-invariant, so the restriction
        // Nᵀ A N carries its eigenvalues.
        let v_t = svd.v_t.expect("svd with v requested");
        let null_dim = n - obs_rank;
        let mut basis = DMatrix::zeros(n, null_dim);
        for j in 0..null_dim {
            basis
                .column_mut(j)
                .copy_from(&v_t.row(obs_rank + j).transpose());
        }
        let restricted = basis.transpose() * &plant.a * &basis;
        restricted
            .complex_eigenvalues()
            .iter()
            .all(|&l| crate::complex_modulus(l) < 1.0)
    };

    LqAssumptionReport {
        q_psd,
        r_pd,
        controllable: controllability == n,
        detectable,
        controllability_rank: controllability,
        observability_rank: obs_rank,
    }
}

/// LQ lifting of plant and reference-shift dynamics: the extended state
/// `y = (x, p_1, …, p_n)` evolves as `y⁺ = Ã y + B̃ u` and the tracking
/// error is `e = M y`.
#[derive(Debug, Clone)]
pub struct ExtendedSystem {
    pub a_tilde: DMatrix<f64>,
    pub b_tilde: DMatrix<f64>,
    pub q_tilde: DMatrix<f64>,
    /// Error selector `M` with `e = x − P ρ(0) = M y`.
    pub error_map: DMatrix<f64>,
    pub n: usize,
    pub m: usize,
    pub basis_dim: usize,
}

impl ExtendedSystem {
    pub fn build(plant: &PlantModel, cost: &CostSpec, family: &BasisFamily) -> Result<Self> {
        let n = plant.n();
        let m = plant.m();
        if cost.n() != n {
            return Err(Error::DimensionMismatch {
                what: "Q rows",
                expected: n,
                got: cost.n(),
            });
        }
        if cost.m() != m {
            return Err(Error::DimensionMismatch {
                what: "R rows",
                expected: m,
                got: cost.m(),
            });
        }
        let p = family.dim();
        let dim = n * (p + 1);

        let shift_t = family.shift(1).transpose();
        let mut a_tilde = DMatrix::zeros(dim, dim);
        a_tilde.view_mut((0, 0), (n, n)).copy_from(&plant.a);
        for row in 0..n {
            let off = n + row * p;
            a_tilde.view_mut((off, off), (p, p)).copy_from(&shift_t);
        }

        let mut b_tilde = DMatrix::zeros(dim, m);
        b_tilde.view_mut((0, 0), (n, m)).copy_from(&plant.b);

        let rho0 = family.eval(0);
        let mut error_map = DMatrix::zeros(n, dim);
        for row in 0..n {
            error_map[(row, row)] = 1.0;
            for col in 0..p {
                error_map[(row, n + row * p + col)] = -rho0[col];
            }
        }
        let q_tilde = error_map.transpose() * &cost.q * &error_map;

        Ok(ExtendedSystem {
            a_tilde,
            b_tilde,
            q_tilde,
            error_map,
            n,
            m,
            basis_dim: p,
        })
    }

    /// Extended state dimension `n(p+1)`.
    pub fn dim(&self) -> usize {
        self.n * (self.basis_dim + 1)
    }
}

/// Converged solution of the discounted Riccati fixed point.
#[derive(Debug, Clone)]
pub struct RiccatiSolution {
    pub s_tilde: DMatrix<f64>,
    pub residual: f64,
    pub iterations: usize,
}

/// Solve the discounted discrete-time algebraic Riccati equation of the
/// extended system by fixed-point iteration from `S₀ = Q̃`.
///
/// The discounted problem is handled through the equivalent undiscounted
/// one with `√γ·Ã` and `√γ·B̃`:
/// `S ← Q̃ + γÃᵀSÃ − γ²ÃᵀSB̃ (R + γB̃ᵀSB̃)⁻¹ B̃ᵀSÃ`.
/// Iteration stops once the Frobenius norm of successive iterates drops
/// below `tol`. `gamma = 1` is admitted here so the plain undiscounted
/// equation can be solved as well.
pub fn solve_dare(
    sys: &ExtendedSystem,
    cost: &CostSpec,
    tol: f64,
    max_iter: usize,
) -> Result<RiccatiSolution> {
    if !tol.is_finite() || tol <= 0.0 {
        return Err(Error::InvalidParameter {
            what: "tol must be positive",
        });
    }
    if !(0.0..=1.0).contains(&cost.gamma) {
        return Err(Error::InvalidParameter {
            what: "gamma must lie in [0, 1]",
        });
    }
    let sqrt_gamma = libm::sqrt(cost.gamma);
    let a = &sys.a_tilde * sqrt_gamma;
    let b = &sys.b_tilde * sqrt_gamma;

    let mut s = sys.q_tilde.clone();
    let mut last_delta = f64::INFINITY;
    for iteration in 1..=max_iter {
        let next = dare_map(&a, &b, &sys.q_tilde, &cost.r, &s)?;
        last_delta = (&next - &s).norm();
        s = next;
        if last_delta < tol {
            let mapped = dare_map(&a, &b, &sys.q_tilde, &cost.r, &s)?;
            let residual = (&mapped - &s).norm();
            return Ok(RiccatiSolution {
                s_tilde: s,
                residual,
                iterations: iteration,
            });
        }
    }
    Err(Error::RiccatiNoConvergence {
        iterations: max_iter,
        last_delta,
    })
}

/// One application of the (scaled) Riccati map, symmetrized.
fn dare_map(
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    q: &DMatrix<f64>,
    r: &DMatrix<f64>,
    s: &DMatrix<f64>,
) -> Result<DMatrix<f64>> {
    let sa = s * a;
    let sb = s * b;
    let bracket = r + b.transpose() * &sb;
    let chol = Cholesky::new(bracket).ok_or(Error::IllConditioned {
        what: "R + BᵀSB in the Riccati map",
    })?;
    let gain = chol.solve(&(b.transpose() * &sa));
    let next = q + a.transpose() * (&sa - &sb * gain);
    Ok((&next + next.transpose()) * 0.5)
}

/// Optimal tracking gain `L = (γB̃ᵀS̃B̃ + R)⁻¹ γB̃ᵀS̃Ã`; the optimal
/// control is `u = −L·y`.
pub fn optimal_gain(
    sol: &RiccatiSolution,
    sys: &ExtendedSystem,
    cost: &CostSpec,
) -> Result<DMatrix<f64>> {
    let s = &sol.s_tilde;
    let bracket = &cost.r + (sys.b_tilde.transpose() * s * &sys.b_tilde) * cost.gamma;
    let chol = Cholesky::new(bracket).ok_or(Error::IllConditioned {
        what: "γB̃ᵀS̃B̃ + R",
    })?;
    Ok(chol.solve(&((sys.b_tilde.transpose() * s * &sys.a_tilde) * cost.gamma)))
}

/// Eigenvalues of the scaled closed loop `√γ·(Ã − B̃L)`; all moduli below
/// one certify the gain as stabilizing for the discounted problem.
pub fn closed_loop_eigenvalues(
    sys: &ExtendedSystem,
    cost: &CostSpec,
    gain: &DMatrix<f64>,
) -> Vec<Complex<f64>> {
    let closed = (&sys.a_tilde - &sys.b_tilde * gain) * libm::sqrt(cost.gamma);
    closed.complex_eigenvalues().iter().copied().collect()
}

/// The quadratic-form matrix of the true optimal tracking Q-function in
/// `z = (x, u, p)` ordering, assembled from the Riccati solution:
/// the `(y, u)` blocks are `γÃᵀS̃Ã + Q̃`, `γÃᵀS̃B̃` and `γB̃ᵀS̃B̃ + R`.
pub fn ground_truth_h(
    sol: &RiccatiSolution,
    sys: &ExtendedSystem,
    cost: &CostSpec,
) -> Result<HMatrix> {
    let s = &sol.s_tilde;
    let g = cost.gamma;
    let dim = sys.dim();
    let n = sys.n;
    let m = sys.m;

    let h_yy = (sys.a_tilde.transpose() * s * &sys.a_tilde) * g + &sys.q_tilde;
    let h_yu = (sys.a_tilde.transpose() * s * &sys.b_tilde) * g;
    let h_uu = (sys.b_tilde.transpose() * s * &sys.b_tilde) * g + &cost.r;

    // z index -> index in the stacked (y, u) ordering
    let map = |i: usize| -> usize {
        if i < n {
            i
        } else if i < n + m {
            dim + (i - n)
        } else {
            i - m
        }
    };
    let s_total = dim + m;
    let mut full = DMatrix::zeros(s_total, s_total);
    full.view_mut((0, 0), (dim, dim)).copy_from(&h_yy);
    full.view_mut((0, dim), (dim, m)).copy_from(&h_yu);
    full.view_mut((dim, 0), (m, dim)).copy_from(&h_yu.transpose());
    full.view_mut((dim, dim), (m, m)).copy_from(&h_uu);

    let h = DMatrix::from_fn(s_total, s_total, |i, j| full[(map(i), map(j))]);
    HMatrix::from_matrix(
        h,
        ZDims {
            n,
            m,
            tail: n * sys.basis_dim,
        },
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::reference::BasisFamily;
    use approx::assert_abs_diff_eq;

    fn paper_plant() -> PlantModel {
        tustin_discretize(0.5, 0.1, 0.1, 0.1).unwrap()
    }

    fn paper_cost() -> CostSpec {
        CostSpec::new(
            DMatrix::from_row_slice(2, 2, &[100.0, 0.0, 0.0, 0.0]),
            DMatrix::from_element(1, 1, 1.0),
            0.9,
        )
        .unwrap()
    }

    #[test]
    fn tustin_matches_reported_matrices_to_four_decimals() {
        let plant = paper_plant();
        let a_expected = [[0.9990, 0.0990], [-0.0198, 0.9792]];
        for i in 0..2 {
            for j in 0..2 {
                assert!(
                    (plant.a[(i, j)] - a_expected[i][j]).abs() <= 5e-5,
                    "A[{i}{j}] = {}",
                    plant.a[(i, j)]
                );
            }
        }
        assert!((plant.b[(0, 0)] - 0.0099).abs() <= 5e-5);
        assert!((plant.b[(1, 0)] - 0.1979).abs() <= 5e-5);
    }

    #[test]
    fn tustin_agrees_with_matrix_exponential_for_small_steps() {
        // Double integrator, T = 1e-3: compare against the exact
        // series-evaluated matrix exponential of [[0,1],[0,0]]·T.
        let t = 1e-3;
        let plant = tustin_discretize(1.0, 0.0, 0.0, t).unwrap();
        let a_exact = DMatrix::from_row_slice(2, 2, &[1.0, t, 0.0, 1.0]);
        let b_exact = DMatrix::from_row_slice(2, 1, &[t * t / 2.0, t]);
        assert!((plant.a - a_exact).amax() <= 1e-6);
        assert!((plant.b - b_exact).amax() <= 1e-6);
    }

    #[test]
    fn tustin_rejects_zero_mass() {
        assert!(tustin_discretize(0.0, 0.1, 0.1, 0.1).is_err());
    }

    #[test]
    fn extended_system_has_lifted_dimensions() {
        let family = BasisFamily::cubic(0.1).unwrap();
        let sys = ExtendedSystem::build(&paper_plant(), &paper_cost(), &family).unwrap();
        assert_eq!(sys.a_tilde.shape(), (10, 10));
        assert_eq!(sys.b_tilde.shape(), (10, 1));
        assert_eq!(sys.q_tilde.shape(), (10, 10));
        assert_eq!(sys.error_map.shape(), (2, 10));
    }

    #[test]
    fn extended_system_zero_q_gives_zero_q_tilde() {
        let family = BasisFamily::cubic(0.1).unwrap();
        let cost = CostSpec::new(DMatrix::zeros(2, 2), DMatrix::from_element(1, 1, 1.0), 0.9)
            .unwrap();
        let sys = ExtendedSystem::build(&paper_plant(), &cost, &family).unwrap();
        assert_eq!(sys.q_tilde.norm(), 0.0);
    }

    #[test]
    fn error_map_reproduces_tracking_error() {
        use crate::reference::ParamMatrix;
        let family = BasisFamily::cubic(0.1).unwrap();
        let sys = ExtendedSystem::build(&paper_plant(), &paper_cost(), &family).unwrap();
        let x = DVector::from_column_slice(&[0.3, -1.7]);
        let p = ParamMatrix::new(
            DMatrix::from_row_slice(2, 4, &[0.2, -0.4, 1.1, 0.6, -0.3, 0.8, 0.0, -1.2]),
            family,
        )
        .unwrap();
        let mut y = DVector::zeros(10);
        y.rows_mut(0, 2).copy_from(&x);
        y.rows_mut(2, 8).copy_from(&p.rows_stacked());
        let e = &sys.error_map * y;
        let expected = &x - p.point(0);
        assert_abs_diff_eq!((e - expected).norm(), 0.0, epsilon = 1e-14);
    }

    #[test]
    fn dare_zero_cost_fixed_point_is_zero() {
        let family = BasisFamily::cubic(0.1).unwrap();
        let cost = CostSpec::new(DMatrix::zeros(2, 2), DMatrix::from_element(1, 1, 1.0), 0.9)
            .unwrap();
        let sys = ExtendedSystem::build(&paper_plant(), &cost, &family).unwrap();
        let sol = solve_dare(&sys, &cost, 1e-12, 1000).unwrap();
        assert_eq!(sol.s_tilde.norm(), 0.0);
        let gain = optimal_gain(&sol, &sys, &cost).unwrap();
        assert_eq!(gain.norm(), 0.0);
    }

    #[test]
    fn scalar_dare_matches_value_iteration_oracle() {
        // a = 0.5, b = 1, q = r = 1, γ = 1: compare against 200 steps of
        // plain value iteration.
        let sys = ExtendedSystem {
            a_tilde: DMatrix::from_element(1, 1, 0.5),
            b_tilde: DMatrix::from_element(1, 1, 1.0),
            q_tilde: DMatrix::from_element(1, 1, 1.0),
            error_map: DMatrix::identity(1, 1),
            n: 1,
            m: 1,
            basis_dim: 0,
        };
        let cost = CostSpec {
            q: DMatrix::from_element(1, 1, 1.0),
            r: DMatrix::from_element(1, 1, 1.0),
            gamma: 1.0,
        };
        let sol = solve_dare(&sys, &cost, 1e-14, 10_000).unwrap();

        let (a, b, q, r) = (0.5f64, 1.0f64, 1.0f64, 1.0f64);
        let mut s = q;
        for _ in 0..200 {
            s = q + s * a * a * r / (r + s * b * b);
        }
        assert_abs_diff_eq!(sol.s_tilde[(0, 0)], s, epsilon = 1e-10);
    }

    #[test]
    fn paper_system_gain_matches_reported_values() {
        let family = BasisFamily::cubic(0.1).unwrap();
        let plant = paper_plant();
        let cost = paper_cost();
        let sys = ExtendedSystem::build(&plant, &cost, &family).unwrap();
        let sol = solve_dare(&sys, &cost, DEFAULT_DARE_TOL, DEFAULT_DARE_MAX_ITER).unwrap();
        assert!(sol.residual <= 10.0 * DEFAULT_DARE_TOL);

        let gain = optimal_gain(&sol, &sys, &cost).unwrap();
        let expected = [6.30, 2.26, -0.31, -0.97, -2.37, -6.40, 0.0, 0.0, 0.0, 0.0];
        for (j, e) in expected.iter().enumerate() {
            assert!(
                (gain[(0, j)] - e).abs() <= 5e-3,
                "L[{j}] = {} vs {e}",
                gain[(0, j)]
            );
        }
        for j in 6..10 {
            assert!(gain[(0, j)].abs() <= 1e-9, "L[{j}] = {}", gain[(0, j)]);
        }

        // S̃ symmetric PSD, closed loop stable in the scaled sense.
        assert_eq!(sol.s_tilde, sol.s_tilde.transpose());
        let min_eig = sol
            .s_tilde
            .clone()
            .symmetric_eigen()
            .eigenvalues
            .min();
        assert!(min_eig >= -1e-10);
        let max_mod = closed_loop_eigenvalues(&sys, &cost, &gain)
            .iter()
            .map(|&l| crate::complex_modulus(l))
            .fold(0.0f64, f64::max);
        assert!(max_mod < 1.0, "closed-loop spectral radius {max_mod}");
    }

    #[test]
    fn discounted_solution_equals_scaled_undiscounted_one() {
        let family = BasisFamily::cubic(0.1).unwrap();
        let plant = paper_plant();
        let cost = paper_cost();
        let sys = ExtendedSystem::build(&plant, &cost, &family).unwrap();
        let sol = solve_dare(&sys, &cost, 1e-13, DEFAULT_DARE_MAX_ITER).unwrap();

        let scaled_sys = ExtendedSystem {
            a_tilde: &sys.a_tilde * cost.gamma.sqrt(),
            b_tilde: &sys.b_tilde * cost.gamma.sqrt(),
            q_tilde: sys.q_tilde.clone(),
            error_map: sys.error_map.clone(),
            n: sys.n,
            m: sys.m,
            basis_dim: sys.basis_dim,
        };
        let undiscounted = CostSpec {
            q: cost.q.clone(),
            r: cost.r.clone(),
            gamma: 1.0,
        };
        let scaled_sol = solve_dare(&scaled_sys, &undiscounted, 1e-13, DEFAULT_DARE_MAX_ITER)
            .unwrap();
        assert!((&sol.s_tilde - &scaled_sol.s_tilde).amax() <= 1e-10);
    }

    #[test]
    fn assumptions_hold_for_paper_setup() {
        let report = check_lq_assumptions(&paper_plant(), &paper_cost());
        assert!(report.pass(), "{report:?}");
        assert_eq!(report.controllability_rank, 2);
    }

    #[test]
    fn detectability_rejects_unstable_unobserved_mode() {
        // Diagonal plant with an unstable second mode that Q ignores.
        let a = DMatrix::from_row_slice(2, 2, &[0.5, 0.0, 0.0, 1.2]);
        let b = DMatrix::from_row_slice(2, 1, &[1.0, 1.0]);
        let plant = PlantModel::new(a, b).unwrap();
        let cost = CostSpec::new(
            DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.0]),
            DMatrix::from_element(1, 1, 1.0),
            0.9,
        )
        .unwrap();
        let report = check_lq_assumptions(&plant, &cost);
        assert!(!report.detectable);
        assert!(report.q_psd && report.r_pd && report.controllable);
    }

    #[test]
    fn plant_constructor_rejects_uncontrollable_pair() {
        let a = DMatrix::identity(2, 2);
        let b = DMatrix::from_row_slice(2, 1, &[1.0, 0.0]);
        assert!(matches!(
            PlantModel::new(a, b),
            Err(Error::Uncontrollable { rank: 1, n: 2 })
        ));
    }

    #[test]
    fn cost_spec_rejects_invalid_inputs() {
        let q = DMatrix::from_row_slice(2, 2, &[100.0, 0.0, 0.0, 0.0]);
        let r = DMatrix::from_element(1, 1, 1.0);
        assert!(CostSpec::new(q.clone(), r.clone(), 1.0).is_err());
        assert!(CostSpec::new(q.clone(), DMatrix::from_element(1, 1, 0.0), 0.9).is_err());
        let not_psd = DMatrix::from_row_slice(2, 2, &[-1.0, 0.0, 0.0, 1.0]);
        assert!(CostSpec::new(not_psd, r, 0.9).is_err());
    }
}
