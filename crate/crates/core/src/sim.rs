//! Experiment harness: excitation-data collection, reference
//! generation and closed-loop rollouts with cost bookkeeping.

use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::lq::{CostSpec, PlantModel};
use crate::qtracker::{one_step_cost, Dataset, Transition};
use crate::reference::KnotSeries;

/// Name of the generator behind every stochastic draw, recorded in run
/// metadata for reproducibility.
pub const RNG_NAME: &str = "chacha8";

/// Exploration setup: i.i.d. Gaussian input noise applied for `samples`
/// steps under a fixed seed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExcitationSpec {
    pub noise_std: f64,
    pub seed: u64,
    pub samples: usize,
}

impl ExcitationSpec {
    pub fn new(noise_std: f64, seed: u64, samples: usize) -> Result<Self> {
        if !noise_std.is_finite() || noise_std <= 0.0 {
            return Err(Error::InvalidParameter {
                what: "noise_std must be positive and finite",
            });
        }
        if samples == 0 {
            return Err(Error::InvalidParameter {
                what: "excitation length must be at least 1",
            });
        }
        Ok(ExcitationSpec {
            noise_std,
            seed,
            samples,
        })
    }
}

/// Autonomous reference generator `r⁺ = F·r` used by the comparison
/// method and for producing training-reference samples.
#[derive(Debug, Clone, PartialEq)]
pub struct ExoSystem {
    pub f_ref: DMatrix<f64>,
    pub r0: DVector<f64>,
}

impl ExoSystem {
    pub fn new(f_ref: DMatrix<f64>, r0: DVector<f64>) -> Result<Self> {
        if !f_ref.is_square() {
            return Err(Error::DimensionMismatch {
                what: "exo-system matrix columns",
                expected: f_ref.nrows(),
                got: f_ref.ncols(),
            });
        }
        if r0.len() != f_ref.nrows() {
            return Err(Error::DimensionMismatch {
                what: "exo-system initial reference",
                expected: f_ref.nrows(),
                got: r0.len(),
            });
        }
        Ok(ExoSystem { f_ref, r0 })
    }

    /// The first `steps` reference points `r_0, F r_0, F² r_0, …`.
    pub fn rollout(&self, steps: usize) -> Vec<DVector<f64>> {
        let mut out = Vec::with_capacity(steps);
        let mut r = self.r0.clone();
        for _ in 0..steps {
            out.push(r.clone());
            r = &self.f_ref * r;
        }
        out
    }
}

/// One recorded step of a closed-loop run.
#[derive(Debug, Clone)]
pub struct TrajectoryStep {
    pub step: usize,
    pub x: DVector<f64>,
    pub u: DVector<f64>,
    pub r: DVector<f64>,
    pub cost: f64,
}

#[derive(Debug, Clone, Default)]
pub struct Trajectory {
    pub steps: Vec<TrajectoryStep>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn max_cost(&self) -> f64 {
        self.steps.iter().map(|s| s.cost).fold(0.0, f64::max)
    }

    /// Largest one-step cost over steps in `range`.
    pub fn max_cost_from(&self, first_step: usize) -> f64 {
        self.steps
            .iter()
            .filter(|s| s.step >= first_step)
            .map(|s| s.cost)
            .fold(0.0, f64::max)
    }

    /// `Σ γ^k c_k` over the first `len` steps.
    pub fn discounted_cost_prefix(&self, gamma: f64, len: usize) -> f64 {
        let mut weight = 1.0;
        let mut total = 0.0;
        for s in self.steps.iter().take(len) {
            total += weight * s.cost;
            weight *= gamma;
        }
        total
    }
}

/// Summary of a trajectory: largest one-step cost, discounted total from
/// the first step, and the RMS tracking error of the first state.
#[derive(Debug, Clone, Copy)]
pub struct Metrics {
    pub max_cost: f64,
    pub discounted_cost: f64,
    pub rms_tracking_error: f64,
}

pub fn metrics(traj: &Trajectory, gamma: f64) -> Metrics {
    let n = traj.len().max(1);
    let sq_sum: f64 = traj
        .steps
        .iter()
        .map(|s| {
            let e = s.x[0] - s.r[0];
            e * e
        })
        .sum();
    Metrics {
        max_cost: traj.max_cost(),
        discounted_cost: traj.discounted_cost_prefix(gamma, traj.len()),
        rms_tracking_error: libm::sqrt(sq_sum / n as f64),
    }
}

/// Roll the plant under pure exploration noise and record transitions
/// together with the active reference parameters. Deterministic for a
/// fixed seed; the state starts at the origin.
pub fn collect_training_data(
    plant: &PlantModel,
    knots: &KnotSeries,
    excitation: &ExcitationSpec,
) -> Result<Dataset> {
    if knots.horizon + 1 < excitation.samples {
        return Err(Error::OutOfHorizon {
            step: excitation.samples - 1,
            horizon: knots.horizon,
        });
    }
    let normal = Normal::new(0.0, excitation.noise_std).map_err(|_| Error::InvalidParameter {
        what: "noise_std must be positive and finite",
    })?;
    let mut rng = ChaCha8Rng::seed_from_u64(excitation.seed);

    let m = plant.m();
    let mut x = DVector::zeros(plant.n());
    let mut transitions = Vec::with_capacity(excitation.samples);
    for k in 0..excitation.samples {
        let u = DVector::from_fn(m, |_, _| normal.sample(&mut rng));
        let x_next = plant.step(&x, &u);
        transitions.push(Transition {
            x: x.clone(),
            u,
            x_next: x_next.clone(),
            params: knots.params_at(k)?,
        });
        x = x_next;
    }
    Ok(Dataset { transitions })
}

/// Closed-loop rollout of `u = −L·(x, p_rows)` against a parametrized
/// reference; costs are measured against `r(P_k, 0)`.
pub fn rollout_tracking(
    plant: &PlantModel,
    gain: &DMatrix<f64>,
    knots: &KnotSeries,
    steps: usize,
    x0: &DVector<f64>,
    cost: &CostSpec,
) -> Result<Trajectory> {
    let n = plant.n();
    let tail = knots.n() * knots.family.dim();
    if gain.ncols() != n + tail || gain.nrows() != plant.m() {
        return Err(Error::DimensionMismatch {
            what: "tracking gain columns",
            expected: n + tail,
            got: gain.ncols(),
        });
    }
    if x0.len() != n {
        return Err(Error::DimensionMismatch {
            what: "initial state",
            expected: n,
            got: x0.len(),
        });
    }
    let mut x = x0.clone();
    let mut out = Trajectory::default();
    for k in 0..steps {
        let params = knots.params_at(k)?;
        let mut y = DVector::zeros(n + tail);
        y.rows_mut(0, n).copy_from(&x);
        y.rows_mut(n, tail).copy_from(&params.rows_stacked());
        let u = -(gain * y);
        let r = params.point(0);
        let step_cost = one_step_cost(cost, &x, &u, &r);
        let x_next = plant.step(&x, &u);
        out.steps.push(TrajectoryStep {
            step: k,
            x: x.clone(),
            u,
            r,
            cost: step_cost,
        });
        x = x_next;
    }
    Ok(out)
}

/// Number of steps the reference holds still after the on-model segment.
pub const DEVIATION_HOLD_STEPS: usize = 75;
/// Length of the linear ramp that follows the hold.
pub const DEVIATION_RAMP_STEPS: usize = 75;
/// Value the ramp ends at.
pub const DEVIATION_RAMP_TARGET: f64 = 1.5;
/// Angular step per time step of the closing fast sine.
pub const DEVIATION_FAST_ANGULAR_STEP: f64 = 0.1;
/// Amplitude of the closing fast sine.
pub const DEVIATION_FAST_AMPLITUDE: f64 = 1.0;

/// A test reference: the dense per-step curve plus the sparse samples
/// (every `spacing` steps) that feed the spline fit.
#[derive(Debug, Clone)]
pub struct TestReference {
    /// `r_k` for `k = 0..=k_total`.
    pub dense: Vec<DVector<f64>>,
    pub samples: Vec<(usize, DVector<f64>)>,
}

/// Build the evaluation reference: the exo-system trajectory for the
/// first `k_sine` steps, then a reproducible deviation — hold the last
/// on-model value for [`DEVIATION_HOLD_STEPS`], ramp linearly to
/// [`DEVIATION_RAMP_TARGET`], then a faster sine of angular step
/// [`DEVIATION_FAST_ANGULAR_STEP`] and amplitude
/// [`DEVIATION_FAST_AMPLITUDE`] for the remainder.
///
/// The second reference channel carries the exo values on the on-model
/// segment and the time derivative of the first channel afterwards.
pub fn make_test_reference(
    exo: &ExoSystem,
    k_sine: usize,
    k_total: usize,
    spacing: usize,
    sample_time: f64,
) -> Result<TestReference> {
    if exo.r0.len() != 2 {
        return Err(Error::DimensionMismatch {
            what: "test reference exo-system dimension",
            expected: 2,
            got: exo.r0.len(),
        });
    }
    if k_total <= k_sine {
        return Err(Error::InvalidParameter {
            what: "k_total must exceed k_sine",
        });
    }
    if spacing == 0 || !k_total.is_multiple_of(spacing) {
        return Err(Error::InvalidParameter {
            what: "k_total must be a positive multiple of the knot spacing",
        });
    }

    let exo_points = exo.rollout(k_sine + 1);
    let hold_value = exo_points[k_sine][0];
    let ramp_end = k_sine + DEVIATION_HOLD_STEPS + DEVIATION_RAMP_STEPS;
    let ramp_slope =
        (DEVIATION_RAMP_TARGET - hold_value) / (DEVIATION_RAMP_STEPS as f64 * sample_time);

    let mut dense = exo_points;
    dense.reserve(k_total - k_sine);
    for k in k_sine + 1..=k_total {
        let r = if k <= k_sine + DEVIATION_HOLD_STEPS {
            DVector::from_column_slice(&[hold_value, 0.0])
        } else if k <= ramp_end {
            let frac =
                (k - k_sine - DEVIATION_HOLD_STEPS) as f64 / DEVIATION_RAMP_STEPS as f64;
            DVector::from_column_slice(&[
                hold_value + (DEVIATION_RAMP_TARGET - hold_value) * frac,
                ramp_slope,
            ])
        } else {
            let phase = DEVIATION_FAST_ANGULAR_STEP * (k - ramp_end) as f64;
            DVector::from_column_slice(&[
                DEVIATION_FAST_AMPLITUDE * libm::sin(phase),
                DEVIATION_FAST_AMPLITUDE * DEVIATION_FAST_ANGULAR_STEP * libm::cos(phase)
                    / sample_time,
            ])
        };
        dense.push(r);
    }

    let samples = (0..=k_total / spacing)
        .map(|j| (j * spacing, dense[j * spacing].clone()))
        .collect();
    Ok(TestReference { dense, samples })
}
