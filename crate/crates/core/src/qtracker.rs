//! The learner: quadratic Q-function over `(x, u, P)`, closed-form
//! greedy policy, batch temporal-difference regression and the
//! least-squares policy-iteration loop.
//!
//! All machinery is written against a generic input layout
//! `z = (x, u, tail)` where `tail` is whatever reference information the
//! Q-function conditions on — the stacked rows of `P` for the tracking
//! learner, the current reference point for the exo-system baseline, or
//! nothing at all for plain regulation.

use alloc::vec::Vec;

use nalgebra::{Cholesky, DMatrix, DVector};

use crate::error::{Error, Result};
use crate::lq::{CostSpec, RANK_REL_CUTOFF};
use crate::reference::ParamMatrix;

/// Ridge added to `h_uu` once if an intermediate policy-iteration
/// iterate is not positive definite; a second occurrence aborts.
pub const H_UU_RIDGE: f64 = 1e-8;

/// Input layout of the quadratic Q-function.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ZDims {
    pub n: usize,
    pub m: usize,
    /// Length of the reference tail (`n·p` for parametrized tracking,
    /// `n` for the exo-system baseline, `0` for regulation).
    pub tail: usize,
}

impl ZDims {
    /// Total input length `s = n + m + tail`.
    pub fn s(&self) -> usize {
        self.n + self.m + self.tail
    }

    /// Weight count `q = s(s+1)/2`.
    pub fn q(&self) -> usize {
        let s = self.s();
        s * (s + 1) / 2
    }
}

/// The stacked Q-function input `z = (x, u, p_1, …, p_n)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExtendedInput {
    pub z: DVector<f64>,
    pub dims: ZDims,
}

impl ExtendedInput {
    /// Concatenate state, control and the rows of the parameter matrix.
    pub fn new(x: &DVector<f64>, u: &DVector<f64>, params: &ParamMatrix) -> Self {
        Self::with_tail(x, u, &params.rows_stacked())
    }

    pub fn with_tail(x: &DVector<f64>, u: &DVector<f64>, tail: &DVector<f64>) -> Self {
        let dims = ZDims {
            n: x.len(),
            m: u.len(),
            tail: tail.len(),
        };
        let mut z = DVector::zeros(dims.s());
        z.rows_mut(0, dims.n).copy_from(x);
        z.rows_mut(dims.n, dims.m).copy_from(u);
        z.rows_mut(dims.n + dims.m, dims.tail).copy_from(tail);
        ExtendedInput { z, dims }
    }

    pub fn x(&self) -> DVector<f64> {
        self.z.rows(0, self.dims.n).into()
    }

    pub fn u(&self) -> DVector<f64> {
        self.z.rows(self.dims.n, self.dims.m).into()
    }

    pub fn tail(&self) -> DVector<f64> {
        self.z.rows(self.dims.n + self.dims.m, self.dims.tail).into()
    }
}

/// Quadratic feature map: the `s(s+1)/2` monomials `z_a z_b`, `a ≤ b`,
/// with off-diagonal entries doubled so that `ŵᵀφ(z) = zᵀHz` when `ŵ`
/// packs the upper triangle of the symmetric `H`.
#[derive(Debug, Clone, Copy)]
pub struct FeatureMap {
    pub dims: ZDims,
}

impl FeatureMap {
    pub fn new(dims: ZDims) -> Self {
        FeatureMap { dims }
    }

    pub fn q(&self) -> usize {
        self.dims.q()
    }

    /// Packed slot of the monomial `z_a z_b` for `a ≤ b`.
    pub fn index_of(&self, a: usize, b: usize) -> usize {
        debug_assert!(a <= b && b < self.dims.s());
        let s = self.dims.s();
        a * s - a * (a + 1) / 2 + b
    }

    pub fn eval(&self, z: &DVector<f64>) -> DVector<f64> {
        let s = self.dims.s();
        debug_assert_eq!(z.len(), s);
        let mut phi = DVector::zeros(self.q());
        let mut slot = 0;
        for a in 0..s {
            phi[slot] = z[a] * z[a];
            slot += 1;
            for b in a + 1..s {
                phi[slot] = 2.0 * z[a] * z[b];
                slot += 1;
            }
        }
        phi
    }
}

/// Symmetric quadratic-form matrix of the Q-function with named blocks.
#[derive(Debug, Clone, PartialEq)]
pub struct HMatrix {
    h: DMatrix<f64>,
    pub dims: ZDims,
}

impl HMatrix {
    /// Unpack `q = s(s+1)/2` weights into the symmetric `s×s` matrix.
    pub fn from_weights(weights: &DVector<f64>, dims: ZDims) -> Result<Self> {
        if weights.len() != dims.q() {
            return Err(Error::DimensionMismatch {
                what: "weight vector",
                expected: dims.q(),
                got: weights.len(),
            });
        }
        let s = dims.s();
        let mut h = DMatrix::zeros(s, s);
        let mut slot = 0;
        for a in 0..s {
            for b in a..s {
                h[(a, b)] = weights[slot];
                h[(b, a)] = weights[slot];
                slot += 1;
            }
        }
        Ok(HMatrix { h, dims })
    }

    /// Wrap an explicit matrix, symmetrizing it.
    pub fn from_matrix(h: DMatrix<f64>, dims: ZDims) -> Result<Self> {
        if h.nrows() != dims.s() || h.ncols() != dims.s() {
            return Err(Error::DimensionMismatch {
                what: "H matrix",
                expected: dims.s(),
                got: h.nrows().max(h.ncols()),
            });
        }
        let sym = (&h + h.transpose()) * 0.5;
        Ok(HMatrix { h: sym, dims })
    }

    pub fn zeros(dims: ZDims) -> Self {
        HMatrix {
            h: DMatrix::zeros(dims.s(), dims.s()),
            dims,
        }
    }

    /// Pack the upper triangle back into the weight vector.
    pub fn to_weights(&self) -> DVector<f64> {
        let s = self.dims.s();
        let mut w = DVector::zeros(self.dims.q());
        let mut slot = 0;
        for a in 0..s {
            for b in a..s {
                w[slot] = self.h[(a, b)];
                slot += 1;
            }
        }
        w
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.h
    }

    pub fn h_xx(&self) -> DMatrix<f64> {
        self.h.view((0, 0), (self.dims.n, self.dims.n)).into()
    }

    pub fn h_xu(&self) -> DMatrix<f64> {
        self.h.view((0, self.dims.n), (self.dims.n, self.dims.m)).into()
    }

    pub fn h_xp(&self) -> DMatrix<f64> {
        self.h
            .view((0, self.dims.n + self.dims.m), (self.dims.n, self.dims.tail))
            .into()
    }

    pub fn h_ux(&self) -> DMatrix<f64> {
        self.h.view((self.dims.n, 0), (self.dims.m, self.dims.n)).into()
    }

    pub fn h_uu(&self) -> DMatrix<f64> {
        self.h
            .view((self.dims.n, self.dims.n), (self.dims.m, self.dims.m))
            .into()
    }

    pub fn h_up(&self) -> DMatrix<f64> {
        self.h
            .view(
                (self.dims.n, self.dims.n + self.dims.m),
                (self.dims.m, self.dims.tail),
            )
            .into()
    }

    pub fn h_pp(&self) -> DMatrix<f64> {
        let off = self.dims.n + self.dims.m;
        self.h.view((off, off), (self.dims.tail, self.dims.tail)).into()
    }
}

/// The quadratic form `zᵀHz`.
pub fn q_value(h: &HMatrix, x: &DVector<f64>, u: &DVector<f64>, params: &ParamMatrix) -> f64 {
    q_value_z(h, &ExtendedInput::new(x, u, params).z)
}

pub fn q_value_z(h: &HMatrix, z: &DVector<f64>) -> f64 {
    (z.transpose() * h.matrix() * z)[(0, 0)]
}

/// Stage cost `(x − r)ᵀQ(x − r) + uᵀRu`.
pub fn one_step_cost(
    cost: &CostSpec,
    x: &DVector<f64>,
    u: &DVector<f64>,
    r_target: &DVector<f64>,
) -> f64 {
    let e = x - r_target;
    ((e.transpose() * &cost.q * &e) + (u.transpose() * &cost.r * u))[(0, 0)]
}

/// The unique minimizer of the quadratic Q-function in `u`:
/// `u = −h_uu⁻¹ (h_ux x + h_up p)`. Fails with [`Error::PolicyUndefined`]
/// when `h_uu` is not positive definite.
pub fn greedy_policy(h: &HMatrix, x: &DVector<f64>, params: &ParamMatrix) -> Result<DVector<f64>> {
    greedy_policy_tail(h, x, &params.rows_stacked())
}

pub fn greedy_policy_tail(
    h: &HMatrix,
    x: &DVector<f64>,
    tail: &DVector<f64>,
) -> Result<DVector<f64>> {
    let chol = Cholesky::new(h.h_uu()).ok_or(Error::PolicyUndefined)?;
    Ok(-chol.solve(&(h.h_ux() * x + h.h_up() * tail)))
}

/// The learned feedback gain `L̂ = h_uu⁻¹ [h_ux h_up]`, so that
/// `u = −L̂·(x, tail)`.
pub fn gain_from_h(h: &HMatrix) -> Result<DMatrix<f64>> {
    let chol = Cholesky::new(h.h_uu()).ok_or(Error::PolicyUndefined)?;
    let mut stacked = DMatrix::zeros(h.dims.m, h.dims.n + h.dims.tail);
    stacked.view_mut((0, 0), (h.dims.m, h.dims.n)).copy_from(&h.h_ux());
    stacked
        .view_mut((0, h.dims.n), (h.dims.m, h.dims.tail))
        .copy_from(&h.h_up());
    Ok(chol.solve(&stacked))
}

/// One recorded interaction with the plant under the parametrized
/// reference.
#[derive(Debug, Clone)]
pub struct Transition {
    pub x: DVector<f64>,
    pub u: DVector<f64>,
    pub x_next: DVector<f64>,
    pub params: ParamMatrix,
}

/// A batch of transitions for off-policy learning.
#[derive(Debug, Clone, Default)]
pub struct Dataset {
    pub transitions: Vec<Transition>,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.transitions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.transitions.is_empty()
    }

    /// Layout of the Q-function inputs implied by the first transition.
    pub fn dims(&self) -> Option<ZDims> {
        self.transitions.first().map(|t| ZDims {
            n: t.x.len(),
            m: t.u.len(),
            tail: t.params.n() * t.params.p(),
        })
    }

    /// Lower the tracking transitions into generic TD samples: the tail
    /// is the stacked parameter rows, its successor is the one-step
    /// shift `P T(1)` (which keeps the extended process Markovian), and
    /// the stage cost is measured against `r(P, 0)`.
    pub fn to_td_samples(&self, cost: &CostSpec) -> Vec<TdSample> {
        self.transitions
            .iter()
            .map(|t| TdSample {
                cost: one_step_cost(cost, &t.x, &t.u, &t.params.point(0)),
                x: t.x.clone(),
                u: t.u.clone(),
                x_next: t.x_next.clone(),
                tail: t.params.rows_stacked(),
                tail_next: t.params.shift(1).rows_stacked(),
            })
            .collect()
    }
}

/// Generic TD sample: `(x, u, x⁺, tail, tail⁺)` plus the stage cost.
#[derive(Debug, Clone)]
pub struct TdSample {
    pub x: DVector<f64>,
    pub u: DVector<f64>,
    pub x_next: DVector<f64>,
    pub tail: DVector<f64>,
    pub tail_next: DVector<f64>,
    pub cost: f64,
}

impl TdSample {
    pub fn dims(&self) -> ZDims {
        ZDims {
            n: self.x.len(),
            m: self.u.len(),
            tail: self.tail.len(),
        }
    }
}

/// Target policy used for the successor features.
enum TargetPolicy {
    /// `u⁺ = 0`; bootstrap when the zero-weight greedy policy is
    /// undefined.
    Zero,
    Greedy {
        chol: Cholesky<f64, nalgebra::Dyn>,
        h_ux: DMatrix<f64>,
        h_up: DMatrix<f64>,
    },
}

impl TargetPolicy {
    fn greedy(h: &HMatrix) -> Option<Self> {
        Cholesky::new(h.h_uu()).map(|chol| TargetPolicy::Greedy {
            chol,
            h_ux: h.h_ux(),
            h_up: h.h_up(),
        })
    }

    fn apply(&self, m: usize, x: &DVector<f64>, tail: &DVector<f64>) -> DVector<f64> {
        match self {
            TargetPolicy::Zero => DVector::zeros(m),
            TargetPolicy::Greedy { chol, h_ux, h_up } => -chol.solve(&(h_ux * x + h_up * tail)),
        }
    }
}

fn assemble_rows(
    samples: &[TdSample],
    policy: &TargetPolicy,
    gamma: f64,
    fm: &FeatureMap,
) -> (DMatrix<f64>, DVector<f64>) {
    let q = fm.q();
    let m = fm.dims.m;
    let mut phi = DMatrix::zeros(samples.len(), q);
    let mut c = DVector::zeros(samples.len());
    for (row, sample) in samples.iter().enumerate() {
        let features = fm.eval(&ExtendedInput::with_tail(&sample.x, &sample.u, &sample.tail).z);
        let u_next = policy.apply(m, &sample.x_next, &sample.tail_next);
        let features_next =
            fm.eval(&ExtendedInput::with_tail(&sample.x_next, &u_next, &sample.tail_next).z);
        for col in 0..q {
            phi[(row, col)] = gamma * features_next[col] - features[col];
        }
        c[row] = sample.cost;
    }
    (phi, c)
}

/// Stack the TD regression system: row `k` of `Φ` is
/// `γ·φ(x⁺, π(x⁺, P⁽¹⁾), P⁽¹⁾)ᵀ − φ(x, u, P)ᵀ` and `c_k` the stage cost,
/// with the greedy target policy taken from `h_policy`.
pub fn assemble_ls(
    dataset: &Dataset,
    h_policy: &HMatrix,
    cost: &CostSpec,
) -> Result<(DMatrix<f64>, DVector<f64>)> {
    let samples = dataset.to_td_samples(cost);
    let fm = FeatureMap::new(h_policy.dims);
    let policy = TargetPolicy::greedy(h_policy).ok_or(Error::PolicyUndefined)?;
    Ok(assemble_rows(&samples, &policy, cost.gamma, &fm))
}

/// Rank and conditioning facts of the last least-squares solve.
#[derive(Debug, Clone, Copy)]
pub struct LsDiagnostics {
    /// Numerical rank at the excitation cutoff ([`RANK_REL_CUTOFF`]).
    pub rank: usize,
    /// Rank at machine-precision level; directions below it are exact
    /// null space of the regressor.
    pub effective_rank: usize,
    pub sigma_max: f64,
    pub sigma_min: f64,
}

/// Weights minimizing `‖Φŵ + c‖₂` (the stacked TD errors are
/// `δ = c + Φŵ`), solved through the SVD of `Φ`.
///
/// Fails with [`Error::ExcitationInsufficient`] when the numerical rank
/// at the excitation cutoff is below the weight count.
pub fn lstd_solve(phi: &DMatrix<f64>, c: &DVector<f64>) -> Result<DVector<f64>> {
    let q = phi.ncols();
    let (w, diag) = min_norm_solve(phi, c)?;
    if diag.rank < q {
        return Err(Error::ExcitationInsufficient {
            rank: diag.rank,
            needed: q,
        });
    }
    Ok(w)
}

/// Minimum-norm least-squares solve of `min ‖Φw + c‖₂` with singular
/// values truncated at machine-precision level.
///
/// Only `N < q` is rejected outright; rank deficiency at the excitation
/// cutoff is reported through the diagnostics instead of failing, since
/// exactly parametrized tracking data carries structural null directions
/// in the reference-tail features that do not affect the TD fit or the
/// policy.
pub fn min_norm_solve(
    phi: &DMatrix<f64>,
    c: &DVector<f64>,
) -> Result<(DVector<f64>, LsDiagnostics)> {
    let (rows, q) = phi.shape();
    if rows < q {
        return Err(Error::ExcitationInsufficient {
            rank: rows,
            needed: q,
        });
    }
    let svd = phi.clone().svd(true, true);
    let u = svd.u.as_ref().expect("svd with u");
    let v_t = svd.v_t.as_ref().expect("svd with v_t");
    let sv = &svd.singular_values;
    let sigma_max = sv.max();
    let machine_cutoff = rows.max(q) as f64 * f64::EPSILON * sigma_max;

    let rank = sv.iter().filter(|&&s| s >= RANK_REL_CUTOFF * sigma_max).count();
    let effective_rank = sv.iter().filter(|&&s| s > machine_cutoff).count();

    let target = -(u.transpose() * c);
    let mut w = DVector::zeros(q);
    for i in 0..effective_rank {
        let coeff = target[i] / sv[i];
        w += v_t.row(i).transpose() * coeff;
    }
    Ok((
        w,
        LsDiagnostics {
            rank,
            effective_rank,
            sigma_max,
            sigma_min: sv.min(),
        },
    ))
}

/// Outcome of the policy-iteration loop.
#[derive(Debug, Clone)]
pub struct LspiResult {
    pub weights: DVector<f64>,
    pub h: HMatrix,
    /// `L̂ = h_uu⁻¹ [h_ux h_up]`, shape `m × (n + tail)`.
    pub gain: DMatrix<f64>,
    /// Per-iteration `‖ŵ⁽ⁱ⁾ − ŵ⁽ⁱ⁻¹⁾‖₂`.
    pub trace: Vec<f64>,
    pub iterations: usize,
    /// How often `h_uu` had to be ridge-regularized mid-iteration.
    pub regularizations: usize,
    pub diagnostics: LsDiagnostics,
}

/// Least-squares policy iteration over tracking transitions; see
/// [`lspi_td`] for the loop itself.
pub fn lspi(
    dataset: &Dataset,
    cost: &CostSpec,
    e_w: f64,
    max_iter: usize,
    w0: Option<&DVector<f64>>,
) -> Result<LspiResult> {
    let dims = dataset.dims().ok_or(Error::InvalidParameter {
        what: "dataset must not be empty",
    })?;
    let samples = dataset.to_td_samples(cost);
    lspi_td(&samples, dims, cost.gamma, e_w, max_iter, w0)
}

/// Alternate least-squares policy evaluation and greedy improvement
/// until the weight change drops to `e_w` or `max_iter` is exhausted.
///
/// Starting from `w⁽⁰⁾ = 0` the greedy policy is undefined; the first
/// evaluation then bootstraps with the zero target action. If a later
/// iterate loses positive definiteness of `h_uu`, a ridge of
/// [`H_UU_RIDGE`] is added once (recorded in the result); a second
/// occurrence aborts with [`Error::PolicyUndefined`].
pub fn lspi_td(
    samples: &[TdSample],
    dims: ZDims,
    gamma: f64,
    e_w: f64,
    max_iter: usize,
    w0: Option<&DVector<f64>>,
) -> Result<LspiResult> {
    if !e_w.is_finite() || e_w <= 0.0 {
        return Err(Error::InvalidParameter {
            what: "e_w must be positive",
        });
    }
    if samples.is_empty() {
        return Err(Error::InvalidParameter {
            what: "samples must not be empty",
        });
    }
    let fm = FeatureMap::new(dims);
    let mut w = match w0 {
        Some(w0) => {
            if w0.len() != fm.q() {
                return Err(Error::DimensionMismatch {
                    what: "initial weights",
                    expected: fm.q(),
                    got: w0.len(),
                });
            }
            w0.clone()
        }
        None => DVector::zeros(fm.q()),
    };

    let mut trace = Vec::new();
    let mut regularizations = 0usize;
    let mut last_delta = f64::INFINITY;

    for iteration in 1..=max_iter {
        let h = HMatrix::from_weights(&w, dims)?;
        let policy = match TargetPolicy::greedy(&h) {
            Some(p) => p,
            None if w.iter().all(|&v| v == 0.0) => TargetPolicy::Zero,
            None => {
                regularizations += 1;
                if regularizations > 1 {
                    return Err(Error::PolicyUndefined);
                }
                let mut ridged = h.matrix().clone();
                for i in dims.n..dims.n + dims.m {
                    ridged[(i, i)] += H_UU_RIDGE;
                }
                let ridged = HMatrix::from_matrix(ridged, dims)?;
                TargetPolicy::greedy(&ridged).ok_or(Error::PolicyUndefined)?
            }
        };

        let (phi, c) = assemble_rows(samples, &policy, gamma, &fm);
        let (w_new, diag) = min_norm_solve(&phi, &c)?;
        last_delta = (&w_new - &w).norm();
        trace.push(last_delta);
        w = w_new;

        if last_delta <= e_w {
            let h = HMatrix::from_weights(&w, dims)?;
            let gain = gain_from_h(&h)?;
            return Ok(LspiResult {
                weights: w,
                h,
                gain,
                trace,
                iterations: iteration,
                regularizations,
                diagnostics: diag,
            });
        }
    }

    Err(Error::LspiNoConvergence {
        iterations: max_iter,
        last_delta,
    })
}
