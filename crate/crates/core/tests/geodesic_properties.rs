use nilxray::algebra::{build_nq, AlgebraVector, GroupPoint, StepTwoAlgebra};
use nilxray::geodesics::{escape_bound_check, ode_oracle, random_unit_velocity, GeodesicN, ESCAPE_SLACK};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn geodesic(a: &StepTwoAlgebra, seed: u64) -> GeodesicN<'_> {
    let v = random_unit_velocity(a, &mut ChaCha8Rng::seed_from_u64(seed));
    GeodesicN::from_identity(a, v.z, v.h).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn speed_is_conserved(seed in any::<u64>(), q in 2usize..=4, t in 0.0f64..20.0) {
        let a = build_nq(q).unwrap();
        let g = geodesic(&a, seed);
        let v = g.velocity_at(t).unwrap();
        let m = a.metric_at(&g.evaluate(t).unwrap(), &v, &v).unwrap();
        prop_assert!((m - 1.0).abs() <= 1e-8);
    }

    #[test]
    fn escape_bound_holds(seed in any::<u64>(), q in 2usize..=4, t in 0.01f64..50.0) {
        let a = build_nq(q).unwrap();
        let g = geodesic(&a, seed);
        let rep = escape_bound_check(&g, &[t]).unwrap();
        prop_assert_eq!(rep.violations, 0);
        prop_assert!(rep.min_margin() >= -ESCAPE_SLACK);
        prop_assert!(rep.min_case_margin() >= -ESCAPE_SLACK);
    }

    #[test]
    fn geodesics_commute_with_left_translation(seed in any::<u64>(), base in prop::collection::vec(-1.0f64..1.0, 8), t in 0.0f64..6.0) {
        let a = build_nq(3).unwrap();
        let g = geodesic(&a, seed);
        let p = GroupPoint::exp(AlgebraVector::from_flat(2, &base));
        let moved = GeodesicN::new(&a, p.clone(), g.z0().clone(), g.h0().clone()).unwrap();
        let expected = a.bch_multiply(&p, &g.evaluate(t).unwrap()).unwrap();
        prop_assert!(moved.evaluate(t).unwrap().coord_distance(&expected) <= 1e-12 * (1.0 + t * t));
    }
}

#[test]
fn closed_form_matches_rk4() {
    for q in [2, 3, 4] {
        let a = build_nq(q).unwrap();
        for seed in 0..10 {
            let g = geodesic(&a, 1000 + seed);
            let ode = ode_oracle(&g, 5.0, 4000).unwrap();
            for k in (0..ode.len()).step_by(400) {
                let d = g.evaluate(ode.times[k]).unwrap().coord_distance(&ode.points[k]);
                assert!(d <= 1e-8, "q={q} seed={seed} t={}: {d:e}", ode.times[k]);
            }
        }
    }
}

#[test]
fn horizontal_direction_is_a_straight_line() {
    // far from the bound
    let a = build_nq(3).unwrap();
    let mut h = nalgebra::DVector::zeros(6);
    h[0] = 1.0;
    let g = GeodesicN::from_identity(&a, nalgebra::DVector::zeros(2), h).unwrap();
    assert!(g.is_straight());
    let rep = escape_bound_check(&g, &[1.0, 10.0, 50.0]).unwrap();
    assert_eq!(rep.violations, 0);
}
