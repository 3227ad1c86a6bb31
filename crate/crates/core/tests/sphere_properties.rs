use proptest::prelude::*;
use sphembed::sphere::{
    exp_map, geodesic_distance, project_to_tangent, retract, update_point, SampleRole,
    TangentVector, UnitVector,
};

fn dims() -> impl Strategy<Value = usize> {
    prop_oneof![Just(2usize), Just(3), Just(50), Just(100)]
}

fn unit(p: usize) -> impl Strategy<Value = UnitVector> {
    prop::collection::vec(-1.0f64..1.0, p)
        .prop_filter("nonzero", |v| v.iter().map(|x| x * x).sum::<f64>() > 1e-6)
        .prop_map(|v| UnitVector::normalize(v).unwrap())
}

/// A point, an ambient vector scaled up to `scale`, and the dimension.
fn point_and_vector(scale: f64) -> impl Strategy<Value = (UnitVector, Vec<f64>)> {
    dims().prop_flat_map(move |p| {
        (
            unit(p),
            prop::collection::vec(-1.0f64..1.0, p),
            0.0f64..scale,
        )
            .prop_map(|(x, g, s)| (x, g.into_iter().map(|c| c * s).collect()))
    })
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(10_000))]

    #[test]
    fn projection_is_tangent((x, g) in point_and_vector(100.0)) {
        let z = project_to_tangent(&x, &g);
        prop_assert!(dot(x.as_slice(), z.delta()).abs() <= 1e-9 * (1.0 + norm(&g)));
    }

    #[test]
    fn projection_is_idempotent((x, g) in point_and_vector(100.0)) {
        let z = project_to_tangent(&x, &g);
        let again = project_to_tangent(&x, z.delta());
        for (a, b) in z.delta().iter().zip(again.delta()) {
            prop_assert!((a - b).abs() <= 1e-12 * (1.0 + norm(&g)));
        }
    }

    #[test]
    fn retraction_and_exp_map_stay_on_sphere((x, g) in point_and_vector(10.0)) {
        let z = project_to_tangent(&x, &g);
        prop_assert!((norm(retract(&z).as_slice()) - 1.0).abs() <= 1e-12);
        prop_assert!((norm(exp_map(&z).as_slice()) - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn exp_map_is_an_isometry((x, g) in point_and_vector(1.0), len in 0.0f64..=std::f64::consts::PI) {
        let z = project_to_tangent(&x, &g);
        prop_assume!(z.norm() > 1e-6);
        let z = z.clone().scale(len / z.norm());
        prop_assert!((geodesic_distance(&x, &exp_map(&z)) - z.norm()).abs() <= 1e-9);
    }

    #[test]
    fn update_stays_on_sphere((x, g) in point_and_vector(4.0), eta in 0.0f64..1.0, negative in any::<bool>()) {
        let role = if negative { SampleRole::Negative } else { SampleRole::Positive };
        let y = update_point(&x, &g, eta, role);
        prop_assert!((norm(y.as_slice()) - 1.0).abs() <= 1e-12);
    }

    /// The retraction agrees with the exponential map to second order: their gap
    /// shrinks like ‖z‖³, so gap / h³ stays within a factor of 4 as h shrinks.
    #[test]
    fn retraction_is_second_order((x, g) in point_and_vector(1.0)) {
        let z = project_to_tangent(&x, &g);
        prop_assume!(z.norm() > 1e-3);
        let a = z.clone().scale(1.0 / z.norm());
        let ratios: Vec<f64> = [1e-1, 1e-2, 1e-3]
            .iter()
            .map(|&h| {
                let step = a.clone().scale(h);
                geodesic_distance(&retract(&step), &exp_map(&step)) / (h * h * h)
            })
            .collect();
        let (lo, hi) = ratios.iter().fold((f64::MAX, 0.0f64), |(lo, hi), &r| (lo.min(r), hi.max(r)));
        prop_assert!(lo > 0.0 && hi / lo <= 4.0, "ratios {:?}", ratios);
        // The gap is also within h² of zero for every step.
        prop_assert!(ratios.iter().zip([1e-1, 1e-2, 1e-3]).all(|(r, h)| r * h <= 1.0));
    }
}

#[test]
fn retraction_gap_is_not_quadratic() {
    // Along a unit tangent direction the retraction lands at angle atan(h) while the
    // exponential map lands at angle h, so the gap is h − atan(h) ≈ h³/3.
    let x = UnitVector::new(vec![1.0, 0.0, 0.0]).unwrap();
    for h in [1e-1, 1e-2, 1e-3] {
        let z = TangentVector::new(x.clone(), vec![0.0, h, 0.0]).unwrap();
        let gap = geodesic_distance(&retract(&z), &exp_map(&z));
        assert!((gap - (h - h.atan())).abs() <= 1e-15, "h = {h}: {gap}");
    }
}

#[test]
fn negative_update_moves_toward_orthogonal() {
    // g points along x + e₂; a positive step moves x toward −g, a negative step
    // moves a vector aligned with g away from it and stops rotating at x ⊥ g.
    let x = UnitVector::normalize(vec![1.0, 1.0]).unwrap();
    let g = [0.0, 1.0];
    let y = update_point(&x, &g, 0.1, SampleRole::Negative);
    assert!(y.as_slice()[1] < x.as_slice()[1]);
    let perp = UnitVector::new(vec![1.0, 0.0]).unwrap();
    assert_eq!(update_point(&perp, &g, 0.1, SampleRole::Negative), perp);
}
