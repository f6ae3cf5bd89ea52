//! Property tests for the reference parametrization and the quadratic
//! feature map.

mod common;

use pradp_core::nalgebra::{DMatrix, DVector};
use pradp_core::qtracker::{q_value_z, FeatureMap, HMatrix, ZDims};
use pradp_core::reference::{BasisFamily, BasisKind, KnotSeries, ParamMatrix};
use proptest::prelude::*;

fn any_family() -> impl Strategy<Value = BasisFamily> {
    (
        prop_oneof![
            Just(BasisKind::CubicPoly),
            Just(BasisKind::Linear),
            Just(BasisKind::ZeroOrderHold)
        ],
        0.01f64..1.0,
    )
        .prop_map(|(kind, t)| BasisFamily::new(kind, t).unwrap())
}

proptest! {
    /// T(i)·T(j) = T(i+j) for every built-in family.
    #[test]
    fn shift_semigroup(family in any_family(), i in 0usize..=10, j in 0usize..=10) {
        let lhs = family.shift(i) * family.shift(j);
        let rhs = family.shift(i + j);
        let scale = 1.0 + rhs.amax();
        prop_assert!((lhs - rhs).amax() <= 1e-12 * scale);
    }

    /// r(P·T(i), j) = r(P, i+j).
    #[test]
    fn shift_reference_identity(
        entries in proptest::collection::vec(-2.0f64..2.0, 8),
        i in 0usize..=8,
        j in 0usize..=8,
    ) {
        let family = BasisFamily::cubic(0.1).unwrap();
        let p = ParamMatrix::new(DMatrix::from_row_slice(2, 4, &entries), family).unwrap();
        let lhs = p.shift(i).point(j);
        let rhs = p.point(i + j);
        prop_assert!((lhs - rhs).amax() <= 1e-12);
    }

    /// Fitted knots reproduce every sample exactly.
    #[test]
    fn spline_interpolates_samples(
        values in proptest::collection::vec(-1.0f64..1.0, 5..=12),
    ) {
        let family = BasisFamily::cubic(0.1).unwrap();
        let samples: Vec<(usize, DVector<f64>)> = values
            .iter()
            .enumerate()
            .map(|(j, &v)| (25 * j, DVector::from_column_slice(&[v])))
            .collect();
        let knots = KnotSeries::fit_cubic_spline(&samples, 25, family).unwrap();
        for (j, (_, expected)) in samples.iter().enumerate() {
            let fitted = knots.knot(j).point(0);
            prop_assert!((fitted - expected).amax() <= 1e-9);
        }
        // Piece ends also hit the following sample.
        for j in 0..samples.len() - 1 {
            let end = knots.knot(j).point(25);
            prop_assert!((end - &samples[j + 1].1).amax() <= 1e-9);
        }
    }

    /// ŵ(H)ᵀφ(z) = zᵀHz.
    #[test]
    fn features_match_quadratic_form(
        z_entries in proptest::collection::vec(-3.0f64..3.0, 7),
        w_entries in proptest::collection::vec(-2.0f64..2.0, 28),
    ) {
        let dims = ZDims { n: 2, m: 1, tail: 4 };
        let fm = FeatureMap::new(dims);
        let z = DVector::from_column_slice(&z_entries);
        let w = DVector::from_column_slice(&w_entries);
        let h = HMatrix::from_weights(&w, dims).unwrap();
        let lhs = w.dot(&fm.eval(&z));
        let rhs = q_value_z(&h, &z);
        prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + rhs.abs()));
    }

    /// Weight packing and unpacking are mutually inverse.
    #[test]
    fn weights_round_trip(w_entries in proptest::collection::vec(-5.0f64..5.0, 66)) {
        let dims = ZDims { n: 2, m: 1, tail: 8 };
        let w = DVector::from_column_slice(&w_entries);
        let h = HMatrix::from_weights(&w, dims).unwrap();
        prop_assert_eq!(h.to_weights(), w);
    }
}

/// The stability check on the shift matrix passes for all built-in
/// families at the experiment's discount.
#[test]
fn shift_stability_passes_for_all_families() {
    for kind in [BasisKind::CubicPoly, BasisKind::Linear, BasisKind::ZeroOrderHold] {
        let family = BasisFamily::new(kind, 0.1).unwrap();
        let report = pradp_core::reference::check_shift_stability(&family, 0.9).unwrap();
        assert!(report.pass, "{kind:?}");
    }
}
