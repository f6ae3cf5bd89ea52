//! Comparison controller: ADP tracking under the assumption that the
//! reference follows a time-invariant exo-system `r⁺ = F·r`.
//!
//! The learner is the same least-squares policy iteration as the
//! parametrized tracker, run over the augmented input `(x, u, r)`; only
//! the successor rule differs — the reference advances through `F`
//! instead of the parameter shift.

use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::lq::{CostSpec, PlantModel};
use crate::qtracker::{lspi_td, one_step_cost, LspiResult, TdSample, Transition, ZDims};
use crate::sim::{ExoSystem, Trajectory, TrajectoryStep};

/// One recorded interaction together with the reference point the
/// comparison method conditions on.
#[derive(Debug, Clone)]
pub struct BaselineTransition {
    pub x: DVector<f64>,
    pub u: DVector<f64>,
    pub x_next: DVector<f64>,
    pub r: DVector<f64>,
}

/// Pair the shared excitation transitions with per-step reference
/// points, giving both learners identical `(x, u, x⁺)` data.
pub fn baseline_dataset(
    transitions: &[Transition],
    refs: &[DVector<f64>],
) -> Result<Vec<BaselineTransition>> {
    if refs.len() < transitions.len() {
        return Err(Error::DimensionMismatch {
            what: "baseline reference series",
            expected: transitions.len(),
            got: refs.len(),
        });
    }
    Ok(transitions
        .iter()
        .zip(refs)
        .map(|(t, r)| BaselineTransition {
            x: t.x.clone(),
            u: t.u.clone(),
            x_next: t.x_next.clone(),
            r: r.clone(),
        })
        .collect())
}

/// Policy iteration for the exo-system tracker: successor references
/// follow `r⁺ = F·r` and the learned gain `L_b` acts as
/// `u = −L_b·(x, r)`.
pub fn baseline_lspi(
    data: &[BaselineTransition],
    exo: &ExoSystem,
    cost: &CostSpec,
    e_w: f64,
    max_iter: usize,
) -> Result<LspiResult> {
    let first = data.first().ok_or(Error::InvalidParameter {
        what: "baseline dataset must not be empty",
    })?;
    let dims = ZDims {
        n: first.x.len(),
        m: first.u.len(),
        tail: first.r.len(),
    };
    let samples: Vec<TdSample> = data
        .iter()
        .map(|t| TdSample {
            cost: one_step_cost(cost, &t.x, &t.u, &t.r),
            x: t.x.clone(),
            u: t.u.clone(),
            x_next: t.x_next.clone(),
            tail: t.r.clone(),
            tail_next: &exo.f_ref * &t.r,
        })
        .collect();
    lspi_td(&samples, dims, cost.gamma, e_w, max_iter, None)
}

/// Roll the plant under `u = −L_b·(x, r_k)` where `r_k` is the supplied
/// (possibly off-model) reference series; costs are measured against the
/// same series.
pub fn baseline_rollout(
    plant: &PlantModel,
    gain: &DMatrix<f64>,
    refs: &[DVector<f64>],
    steps: usize,
    x0: &DVector<f64>,
    cost: &CostSpec,
) -> Result<Trajectory> {
    let n = plant.n();
    if gain.ncols() != 2 * n || gain.nrows() != plant.m() {
        return Err(Error::DimensionMismatch {
            what: "baseline gain columns",
            expected: 2 * n,
            got: gain.ncols(),
        });
    }
    if refs.len() < steps {
        return Err(Error::DimensionMismatch {
            what: "baseline reference series",
            expected: steps,
            got: refs.len(),
        });
    }
    let mut x = x0.clone();
    let mut out = Trajectory::default();
    for (k, r) in refs.iter().take(steps).enumerate() {
        let mut y = DVector::zeros(2 * n);
        y.rows_mut(0, n).copy_from(&x);
        y.rows_mut(n, n).copy_from(r);
        let u = -(gain * y);
        let step_cost = one_step_cost(cost, &x, &u, r);
        let x_next = plant.step(&x, &u);
        out.steps.push(TrajectoryStep {
            step: k,
            x: x.clone(),
            u,
            r: r.clone(),
            cost: step_cost,
        });
        x = x_next;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lq::tustin_discretize;

    #[test]
    fn zero_reference_zero_start_gives_zero_cost() {
        let plant = tustin_discretize(0.5, 0.1, 0.1, 0.1).unwrap();
        let cost = CostSpec::new(
            DMatrix::from_row_slice(2, 2, &[100.0, 0.0, 0.0, 0.0]),
            DMatrix::from_element(1, 1, 1.0),
            0.9,
        )
        .unwrap();
        let refs = alloc::vec![DVector::zeros(2); 50];
        let gain = DMatrix::from_element(1, 4, 0.3);
        let traj = baseline_rollout(&plant, &gain, &refs, 50, &DVector::zeros(2), &cost).unwrap();
        assert_eq!(traj.max_cost(), 0.0);
    }

    #[test]
    fn dataset_pairing_checks_lengths() {
        let t = Transition {
            x: DVector::zeros(2),
            u: DVector::zeros(1),
            x_next: DVector::zeros(2),
            params: crate::reference::ParamMatrix::zeros(
                2,
                crate::reference::BasisFamily::cubic(0.1).unwrap(),
            ),
        };
        let refs: Vec<DVector<f64>> = alloc::vec![];
        assert!(baseline_dataset(&[t], &refs).is_err());
    }
}
