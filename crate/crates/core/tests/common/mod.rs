//! Shared fixtures: the mass-spring-damper experiment setup.

use pradp_core::lq::{tustin_discretize, CostSpec, ExtendedSystem, PlantModel};
use pradp_core::nalgebra::{DMatrix, DVector};
use pradp_core::qtracker::Dataset;
use pradp_core::reference::{BasisFamily, KnotSeries};
use pradp_core::sim::{collect_training_data, ExcitationSpec, ExoSystem};

pub const SAMPLE_TIME: f64 = 0.1;
pub const KNOT_SPACING: usize = 25;
pub const GAMMA: f64 = 0.9;

pub fn plant() -> PlantModel {
    tustin_discretize(0.5, 0.1, 0.1, SAMPLE_TIME).unwrap()
}

pub fn cost() -> CostSpec {
    CostSpec::new(
        DMatrix::from_row_slice(2, 2, &[100.0, 0.0, 0.0, 0.0]),
        DMatrix::from_element(1, 1, 1.0),
        GAMMA,
    )
    .unwrap()
}

pub fn family() -> BasisFamily {
    BasisFamily::cubic(SAMPLE_TIME).unwrap()
}

pub fn exo() -> ExoSystem {
    ExoSystem::new(
        DMatrix::from_row_slice(2, 2, &[0.9988, 0.05, -0.05, 0.9988]),
        DVector::from_column_slice(&[0.0, 1.0]),
    )
    .unwrap()
}

/// Spline of the exo trajectory covering `steps` training steps.
pub fn training_knots(steps: usize) -> KnotSeries {
    let refs = exo().rollout(steps + 1);
    let samples: Vec<(usize, DVector<f64>)> = (0..=steps / KNOT_SPACING)
        .map(|j| (j * KNOT_SPACING, refs[j * KNOT_SPACING].clone()))
        .collect();
    KnotSeries::fit_cubic_spline(&samples, KNOT_SPACING, family()).unwrap()
}

pub fn training_data(seed: u64, steps: usize) -> Dataset {
    let knots = training_knots(steps);
    let spec = ExcitationSpec::new(1.0, seed, steps).unwrap();
    collect_training_data(&plant(), &knots, &spec).unwrap()
}

/// Extended system of the paper setup.
pub fn extended() -> ExtendedSystem {
    ExtendedSystem::build(&plant(), &cost(), &family()).unwrap()
}

/// Regulation "extended" system: the plant itself, no reference tail.
pub fn regulation_extended() -> ExtendedSystem {
    let p = plant();
    let c = cost();
    ExtendedSystem {
        q_tilde: c.q.clone(),
        error_map: DMatrix::identity(2, 2),
        a_tilde: p.a.clone(),
        b_tilde: p.b.clone(),
        n: 2,
        m: 1,
        basis_dim: 0,
    }
}
