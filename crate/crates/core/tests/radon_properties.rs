use std::f64::consts::PI;

use nilxray::radon::{
    convex_hull, radon_invert_with, xray_line_integral, FieldOracle, InversionOptions, LineR2, Phantom2D, PhantomBump,
    ScalarField2D,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Hull vertices by the O(n³) edge test: `(i, j)` is an edge when every
/// other point lies strictly to its left.
fn brute_force_hull(pts: &[[f64; 2]]) -> Vec<[f64; 2]> {
    let cross = |o: [f64; 2], a: [f64; 2], b: [f64; 2]| (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0]);
    let mut out = Vec::new();
    for (i, &a) in pts.iter().enumerate() {
        for (j, &b) in pts.iter().enumerate() {
            if i != j && pts.iter().enumerate().all(|(k, &c)| k == i || k == j || cross(a, b, c) > 0.0) {
                out.push(a);
            }
        }
    }
    out.sort_by(|x, y| x.partial_cmp(y).unwrap());
    out.dedup();
    out
}

#[test]
fn hull_matches_brute_force() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..20 {
        let pts: Vec<[f64; 2]> = (0..100).map(|_| [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)]).collect();
        let mut hull = convex_hull(&pts).unwrap().vertices;
        hull.sort_by(|x, y| x.partial_cmp(y).unwrap());
        assert_eq!(hull, brute_force_hull(&pts));
    }
}

fn bump() -> impl Strategy<Value = PhantomBump> {
    (-0.5f64..0.5, -0.5f64..0.5, -1.0f64..1.0, 0.2f64..0.5).prop_map(|(x, y, a, r)| PhantomBump::bump([x, y], a, r))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn hull_contains_its_points(pts in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 1..40)) {
        let pts: Vec<[f64; 2]> = pts.into_iter().map(|(x, y)| [x, y]).collect();
        let hull = convex_hull(&pts).unwrap();
        for &p in &pts {
            prop_assert!(hull.contains(p));
        }
    }

    #[test]
    fn transform_is_linear(a in bump(), b in bump(), s in -2.0f64..2.0, theta in 0.0f64..PI, p in -1.0f64..1.0) {
        let line = LineR2::new(theta, p).unwrap();
        let fa = Phantom2D::single(a).unwrap();
        let fb = Phantom2D::single(b).unwrap();
        let scaled = PhantomBump { amplitude: s * a.amplitude, ..a };
        let sum = Phantom2D::new(vec![scaled, b]).unwrap();
        let lhs = xray_line_integral(&sum, &line).unwrap();
        let rhs = s * xray_line_integral(&fa, &line).unwrap() + xray_line_integral(&fb, &line).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-8);
    }

    #[test]
    fn orientation_quotient(a in bump(), alpha in -10.0f64..10.0, p in -1.0f64..1.0) {
        let f = Phantom2D::single(a).unwrap();
        let l1 = LineR2::from_normal_angle(alpha, p);
        let l2 = LineR2::from_normal_angle(alpha + PI, -p);
        prop_assert!((l1.theta - l2.theta).abs() <= 1e-12 && (l1.p - l2.p).abs() <= 1e-12);
        let diff = xray_line_integral(&f, &l1).unwrap() - xray_line_integral(&f, &l2).unwrap();
        prop_assert!(diff.abs() <= 1e-9);
    }

    #[test]
    fn lines_missing_the_support_vanish(a in bump(), theta in 0.0f64..PI, extra in 0.0f64..2.0) {
        let f = Phantom2D::single(a).unwrap();
        let s = f.support();
        let p = s.center[0].hypot(s.center[1]) + s.radius + extra + 1e-9;
        for p in [p, -p] {
            prop_assert_eq!(xray_line_integral(&f, &LineR2::new(theta, p).unwrap()).unwrap(), 0.0);
        }
    }
}

#[test]
fn inversion_recovers_bumps_at_random_points() {
    let f = Phantom2D::new(vec![PhantomBump::bump([0.2, -0.1], 1.0, 0.6), PhantomBump::bump([-0.3, 0.3], -0.5, 0.4)])
        .unwrap();
    let oracle = FieldOracle::new(&f);
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for _ in 0..6 {
        let x = [rng.random_range(-0.8..0.8), rng.random_range(-0.8..0.8)];
        let r = radon_invert_with(&oracle, x, &InversionOptions::new(2.0, 200).with_dirs(256)).unwrap();
        assert!((r.value - f.value(x)).abs() <= 1e-4, "{x:?}: {} vs {}", r.value, f.value(x));
    }
}
