use nilxray::algebra::{build_nq, AlgebraVector, GroupPoint, StepTwoAlgebra};
use nilxray::flats::{
    conv_p_region, flat_preimage, reduce_points, restrict_to_flat, verify_flat, BumpN, CompactRegion, ConvGrid,
    CosetAtlas, FieldOracleN, FlatAtlas, FlatImmersion, PhantomN, ReductionOptions, ScalarFieldN,
};
use nilxray::geodesics::{nilpotent_escape, sigma_from_escape, MonotoneFunction};
use nilxray::radon::{LineOracle, LineR2};
use proptest::prelude::*;

fn axis(a: &StepTwoAlgebra, i: usize) -> AlgebraVector {
    let mut x = vec![0.0; a.dim()];
    x[i] = 1.0;
    AlgebraVector::from_flat(a.dim_z(), &x)
}

fn point(a: &StepTwoAlgebra, c: &[f64]) -> GroupPoint {
    GroupPoint::exp(AlgebraVector::from_flat(a.dim_z(), c))
}

/// The kernel-structured flat `span{t₁, Re e₃}` of `N₃` through `base`.
fn mixed_flat<'a>(a: &'a StepTwoAlgebra, base: &GroupPoint) -> FlatImmersion<'a> {
    let mut f = FlatImmersion::from_body(a, base.clone(), &axis(a, 0), &axis(a, a.dim_z() + 4)).unwrap();
    assert!(verify_flat(&mut f, 1e-7).unwrap().passed);
    f
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn flats_are_isometric_immersions(c in prop::collection::vec(-1.0f64..1.0, 8), s in -1.0f64..1.0, u in -1.0f64..1.0) {
        let a = build_nq(3).unwrap();
        let x = point(&a, &c);
        let atlas = CosetAtlas::central(&a).unwrap();
        for f in [atlas.flat_through(&x).unwrap(), mixed_flat(&a, &x)] {
            let y = f.eval(s, u).unwrap();
            let d1 = f.differential(s, u, 1.0, 0.0).unwrap();
            let d2 = f.differential(s, u, 0.0, 1.0).unwrap();
            let g = |p: &AlgebraVector, q: &AlgebraVector| a.metric_at(&y, p, q).unwrap();
            prop_assert!((g(&d1, &d1) - 1.0).abs() <= 1e-8);
            prop_assert!((g(&d2, &d2) - 1.0).abs() <= 1e-8);
            prop_assert!(g(&d1, &d2).abs() <= 1e-8);
        }
    }

    #[test]
    fn coset_atlas_covers_every_point(c in prop::collection::vec(-1.5f64..1.5, 8)) {
        let a = build_nq(3).unwrap();
        let x = point(&a, &c);
        let f = CosetAtlas::central(&a).unwrap().flat_through(&x).unwrap();
        let (q, r) = flat_preimage(&f, &x, 1e-12).unwrap();
        prop_assert!(r <= 1e-10);
        prop_assert!(f.eval(q[0], q[1]).unwrap().coord_distance(&x) <= 1e-10);
    }
}

#[test]
fn conv_p_of_a_segment_with_two_flats() {
    // ℝ³ with the flats z = 0 and y = 0 through the origin; K is a segment
    // in the first flat that misses the second.
    let a = StepTwoAlgebra::abelian(3).unwrap();
    let e = a.identity();
    let mut y1 = FlatImmersion::from_body(&a, e.clone(), &axis(&a, 0), &axis(&a, 1)).unwrap();
    let mut y2 = FlatImmersion::from_body(&a, e.clone(), &axis(&a, 0), &axis(&a, 2)).unwrap();
    verify_flat(&mut y1, 1e-7).unwrap();
    verify_flat(&mut y2, 1e-7).unwrap();
    let k = CompactRegion::from_points((0..=8).map(|i| point(&a, &[-0.4 + 0.1 * i as f64, 0.2, 0.0])).collect()).unwrap();
    let grid = ConvGrid::new(1.0, 21);
    let region = conv_p_region(&k, &e, &[y1, y2], &grid).unwrap();

    // brute force over both grids: on z = 0 keep the segment, on y = 0 nothing
    let mut expected = Vec::new();
    for i in 0..21 {
        for j in 0..21 {
            let (s, u) = (-1.0 + 0.1 * i as f64, -1.0 + 0.1 * j as f64);
            if (u - 0.2).abs() < 1e-9 && s.abs() <= 0.4 + 1e-9 {
                expected.push([s, u, 0.0]);
            }
        }
    }
    assert_eq!(region.len(), expected.len());
    for x in &expected {
        assert!(region.contains(&point(&a, x), 1e-9), "{x:?} missing");
    }
}

#[test]
fn conv_p_of_a_ball_stays_in_the_ball() {
    let a = build_nq(3).unwrap();
    let p = point(&a, &[0.2, -0.1, 0.3, 0.0, -0.2, 0.1, 0.0, 0.4]);
    let flats = [CosetAtlas::central(&a).unwrap().flat_through(&p).unwrap(), mixed_flat(&a, &p)];
    let s = 0.5;
    let mut samples = Vec::new();
    for f in &flats {
        let (q, _) = flat_preimage(f, &p, 1e-12).unwrap();
        for i in 0..41 {
            for j in 0..41 {
                let x = f.eval(q[0] - 0.6 + 0.03 * i as f64, q[1] - 0.6 + 0.03 * j as f64).unwrap();
                if x.coord_distance(&p) <= s {
                    samples.push(x);
                }
            }
        }
    }
    let k = CompactRegion::from_points(samples).unwrap();
    let region = conv_p_region(&k, &p, &flats, &ConvGrid::new(0.8, 17)).unwrap();
    assert!(!region.is_empty());
    assert!(region.points.iter().all(|x| x.coord_distance(&p) <= s + 1e-9));
}

#[test]
fn conv_p_is_idempotent() {
    let a = StepTwoAlgebra::abelian(2).unwrap();
    let mut f = FlatImmersion::from_body(&a, a.identity(), &axis(&a, 0), &axis(&a, 1)).unwrap();
    verify_flat(&mut f, 1e-7).unwrap();
    let k = CompactRegion::from_points(
        [[0.3, -0.6], [0.7, 0.1], [-0.2, 0.8], [-0.7, -0.3], [0.0, 0.0]]
            .iter()
            .map(|c| point(&a, c))
            .collect(),
    )
    .unwrap();
    let grid = ConvGrid::new(1.0, 25);
    let once = conv_p_region(&k, &a.identity(), std::slice::from_ref(&f), &grid).unwrap();
    let twice = conv_p_region(&once, &a.identity(), std::slice::from_ref(&f), &grid).unwrap();
    assert!(once.len() > 20);
    assert_eq!(once.len(), twice.len());
    assert!(once.points.iter().all(|x| twice.contains(x, 1e-12)));
}

#[test]
fn restricted_sinograms_vanish_beyond_sigma() {
    // A phantom in the coordinate ball of radius σ(r) about p must be
    // invisible to every flat line at flat distance > r from p.
    let a = build_nq(3).unwrap();
    let id = MonotoneFunction::Identity;
    let r = 0.8;
    let sigma = sigma_from_escape(&nilpotent_escape(&a, &id).unwrap(), &id, r).unwrap();
    let c = [0.3, 0.1, -0.2, 0.4, 0.0, 0.1, -0.3, 0.2];
    let p = point(&a, &c);
    let phantom = PhantomN::new(&a, vec![BumpN::bump(c.to_vec(), 1.0, sigma)]).unwrap();
    let oracle = FieldOracleN::new(&phantom);
    for f in [CosetAtlas::central(&a).unwrap().flat_through(&p).unwrap(), mixed_flat(&a, &p)] {
        let (q, _) = flat_preimage(&f, &p, 1e-12).unwrap();
        let restricted = restrict_to_flat(&oracle, &f, 1e-7).unwrap();
        let mut seen: f64 = 0.0;
        for k in 0..24 {
            let alpha = std::f64::consts::PI * k as f64 / 12.0;
            let foot = q[0] * alpha.cos() + q[1] * alpha.sin();
            seen = seen.max(restricted.line_value(&LineR2::from_normal_angle(alpha, foot)).unwrap().abs());
            for d in [1.01 * r, 1.5 * r, 3.0 * r] {
                let v = restricted.line_value(&LineR2::from_normal_angle(alpha, foot + d)).unwrap();
                assert!(v.abs() <= 1e-9, "line at distance {d}: {v:e}");
            }
        }
        assert!(seen > 0.1, "lines through p should see the phantom");
    }
}

#[test]
fn central_reduction_on_n3() {
    let a = build_nq(3).unwrap();
    let phantom = PhantomN::new(&a, vec![BumpN::bump(vec![0.0; 8], 1.0, 1.0)]).unwrap();
    let atlas = CosetAtlas::central(&a).unwrap();
    let xs: Vec<GroupPoint> = [[0.1, -0.2, 0.3, 0.0, 0.1, -0.1, 0.2, 0.0], [0.0; 8], [-0.3, 0.2, 0.0, 0.2, -0.2, 0.0, 0.1, 0.3]]
        .iter()
        .map(|c| point(&a, c))
        .collect();
    let out = reduce_points(&FieldOracleN::new(&phantom), &atlas, &xs, &ReductionOptions::new(1.8, 120, 90)).unwrap();
    for (x, r) in xs.iter().zip(&out) {
        assert!((r.value - phantom.value(x)).abs() <= 0.02, "{:?}: {} vs {}", x.coords, r.value, phantom.value(x));
    }
}
