use crate::algebra::{AlgebraVector, GroupPoint, StepTwoAlgebra};
use crate::error::{Error, Result};
use crate::flats::{find_flat_through, verify_flat, FlatImmersion, FlatSearchOptions, GeodesicOracle, TangentVector};
use crate::geodesics::GeodesicN;
use crate::radon::{LineOracle, LineR2};

/// Line values on a flat, read off geodesics of `N`: the line
/// `{⟨y, ω⟩ = p}` of the parameter plane goes to the geodesic through
/// `Φ(pω)` with direction `dΦ(ω^⊥)`.
pub struct RestrictedOracle<'f, 'a, O: ?Sized> {
    oracle: &'f O,
    flat: &'f FlatImmersion<'a>,
}

/// Pull a geodesic oracle back to a verified flat.
pub fn restrict_to_flat<'f, 'a, O: GeodesicOracle + ?Sized>(
    oracle: &'f O,
    flat: &'f FlatImmersion<'a>,
    tol: f64,
) -> Result<RestrictedOracle<'f, 'a, O>> {
    if !flat.is_verified(tol) {
        return Err(Error::Precondition(format!(
            "flat is not verified at tolerance {tol:e} (residual {:?})",
            flat.residual
        )));
    }
    Ok(RestrictedOracle { oracle, flat })
}

impl<O: GeodesicOracle + ?Sized> RestrictedOracle<'_, '_, O> {
    /// The geodesic of `N` that `line` maps to.
    pub fn geodesic(&self, line: &LineR2) -> Result<GeodesicN<'_>> {
        let n = line.normal();
        let tau = line.direction();
        let (s, u) = (line.p * n[0], line.p * n[1]);
        let x = self.flat.eval(s, u)?;
        let dir = self.flat.differential(s, u, tau[0], tau[1])?;
        GeodesicN::from_coordinate_tangent(self.flat.algebra(), x, &dir, true)
    }
}

impl<O: GeodesicOracle + ?Sized> LineOracle for RestrictedOracle<'_, '_, O> {
    fn line_value(&self, line: &LineR2) -> Result<f64> {
        self.oracle.geodesic_value(&self.geodesic(line)?)
    }
}

/// Supplies a verified flat through any point of `N`.
pub trait FlatAtlas<'a>: Sync {
    fn algebra(&self) -> &'a StepTwoAlgebra;

    fn flat_through(&self, x: &GroupPoint) -> Result<FlatImmersion<'a>>;
}

/// Left cosets `x·S` of a flat abelian subgroup `S = exp span{v, w}`.
///
/// The base of the coset through `x` is `x·exp(−(αv + βw))`, where `α`, `β`
/// are the components of `Log x` along `v`, `w`; points differing only in
/// those components then share a flat, and `Φ(α, β) = x`.
#[derive(Debug, Clone)]
pub struct CosetAtlas<'a> {
    algebra: &'a StepTwoAlgebra,
    v: AlgebraVector,
    w: AlgebraVector,
    tol: f64,
}

impl<'a> CosetAtlas<'a> {
    /// Fails unless `span{v, w}` (body directions) passes verification at the
    /// identity.
    pub fn new(algebra: &'a StepTwoAlgebra, v: AlgebraVector, w: AlgebraVector, tol: f64) -> Result<Self> {
        let mut f = FlatImmersion::from_body(algebra, algebra.identity(), &v, &w)?;
        let verdict = verify_flat(&mut f, tol)?;
        if !verdict.passed {
            return Err(Error::Precondition(format!(
                "coset atlas plane is not a totally geodesic flat: residual {:.3e}",
                verdict.residual
            )));
        }
        Ok(Self { algebra, v, w, tol })
    }

    /// `ℝ²` with its identity flat.
    pub fn plane(algebra: &'a StepTwoAlgebra) -> Result<Self> {
        if algebra.dim() != 2 || algebra.dim_z() != 0 {
            return Err(Error::Argument("the plane atlas needs the abelian algebra ℝ²".into()));
        }
        let e = |i| AlgebraVector::from_flat(0, &[(i == 0) as u8 as f64, (i == 1) as u8 as f64]);
        Self::new(algebra, e(0), e(1), 1e-7)
    }

    /// Affine planes of `ℝ^{n₁} × ℝ^{n₂}` spanned by the first axis of each factor.
    pub fn product(algebra: &'a StepTwoAlgebra, n1: usize) -> Result<Self> {
        let n = algebra.dim();
        if algebra.dim_z() != 0 || n1 == 0 || n1 >= n {
            return Err(Error::Argument(format!(
                "product atlas needs an abelian algebra split as {n1} + {}",
                n.saturating_sub(n1)
            )));
        }
        let axis = |i: usize| {
            let mut x = vec![0.0; n];
            x[i] = 1.0;
            AlgebraVector::from_flat(0, &x)
        };
        Self::new(algebra, axis(0), axis(n1), 1e-7)
    }

    /// Cosets of the plane of the first two central directions.
    pub fn central(algebra: &'a StepTwoAlgebra) -> Result<Self> {
        let (dz, dh) = (algebra.dim_z(), algebra.dim_h());
        if dz < 2 {
            return Err(Error::Argument(format!("central atlas needs dim z >= 2, got {dz}")));
        }
        let axis = |i: usize| {
            let mut x = vec![0.0; dz + dh];
            x[i] = 1.0;
            AlgebraVector::from_flat(dz, &x)
        };
        Self::new(algebra, axis(0), axis(1), 1e-7)
    }

    pub fn directions(&self) -> (&AlgebraVector, &AlgebraVector) {
        (&self.v, &self.w)
    }
}

impl<'a> FlatAtlas<'a> for CosetAtlas<'a> {
    fn algebra(&self) -> &'a StepTwoAlgebra {
        self.algebra
    }

    fn flat_through(&self, x: &GroupPoint) -> Result<FlatImmersion<'a>> {
        let alg = self.algebra;
        alg.check_point(x)?;
        let (a, b) = (x.coords.dot(&self.v), x.coords.dot(&self.w));
        let back = GroupPoint::exp(self.v.scale(-a).axpy(-b, &self.w));
        let base = alg.bch_multiply(x, &back)?;
        let mut f = FlatImmersion::from_body(alg, base, &self.v, &self.w)?;
        let verdict = verify_flat(&mut f, self.tol)?;
        if !verdict.passed {
            return Err(Error::Numeric(format!(
                "coset flat through {:?} failed verification: residual {:.3e}",
                x.coords.to_flat(),
                verdict.residual
            )));
        }
        Ok(f)
    }
}

/// Flats found by [`find_flat_through`] for the geodesic through `x` with a
/// fixed left-invariant direction.
#[derive(Debug, Clone)]
pub struct SearchAtlas<'a> {
    algebra: &'a StepTwoAlgebra,
    pub direction: AlgebraVector,
    pub opts: FlatSearchOptions,
}

impl<'a> SearchAtlas<'a> {
    pub fn new(algebra: &'a StepTwoAlgebra, direction: AlgebraVector, opts: FlatSearchOptions) -> Result<Self> {
        algebra.check_vector(&direction)?;
        Ok(Self {
            algebra,
            direction,
            opts,
        })
    }
}

impl<'a> FlatAtlas<'a> for SearchAtlas<'a> {
    fn algebra(&self) -> &'a StepTwoAlgebra {
        self.algebra
    }

    fn flat_through(&self, x: &GroupPoint) -> Result<FlatImmersion<'a>> {
        let vtx = TangentVector {
            base: x.clone(),
            velocity: self.direction.clone(),
        };
        find_flat_through(self.algebra, &vtx, &self.opts)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::build_nq;
    use crate::flats::{xray_forward_n, BumpN, PhantomN};
    use crate::radon::{FieldOracle, Phantom2D, PhantomBump};

    #[test]
    fn plane_restriction_is_the_identity() {
        let a = StepTwoAlgebra::abelian(2).unwrap();
        let atlas = CosetAtlas::plane(&a).unwrap();
        let f = atlas.flat_through(&a.identity()).unwrap();
        let phantom = Phantom2D::new(vec![
            PhantomBump::bump([0.2, 0.1], 1.0, 0.7),
            PhantomBump::trunc_gauss([-0.3, 0.0], 0.5, 0.3, 0.8),
        ])
        .unwrap();
        let pn = PhantomN::new(
            &a,
            phantom
                .bumps
                .iter()
                .map(|b| BumpN {
                    center: b.center.to_vec(),
                    amplitude: b.amplitude,
                    radius: b.radius,
                    profile: b.profile,
                    width: b.width,
                })
                .collect(),
        )
        .unwrap();
        let oracle = |g: &GeodesicN<'_>| xray_forward_n(&pn, g);
        let restricted = restrict_to_flat(&oracle, &f, 1e-7).unwrap();
        let direct = FieldOracle::new(&phantom);
        for (theta, p) in [(0.0, 0.1), (0.7, -0.3), (2.2, 0.45), (3.0, 0.0)] {
            let l = LineR2::new(theta, p).unwrap();
            let r = restricted.line_value(&l).unwrap();
            let d = direct.line_value(&l).unwrap();
            assert!((r - d).abs() < 1e-9, "{r} vs {d}");
        }
    }

    #[test]
    fn central_restriction_of_radial_field_is_radial() {
        let a = build_nq(3).unwrap();
        let atlas = CosetAtlas::central(&a).unwrap();
        let pn = PhantomN::new(&a, vec![BumpN::bump(vec![0.0; 8], 1.0, 1.0)]).unwrap();
        let oracle = |g: &GeodesicN<'_>| xray_forward_n(&pn, g);
        let f = atlas.flat_through(&a.identity()).unwrap();
        let r = restrict_to_flat(&oracle, &f, 1e-7).unwrap();
        for p in [0.0, 0.3, 0.7] {
            let vals: Vec<f64> =
                [0.0, 0.9, 2.0, 2.8].iter().map(|&t| r.line_value(&LineR2::new(t, p).unwrap()).unwrap()).collect();
            for v in &vals {
                assert!((v - vals[0]).abs() < 1e-9, "{vals:?}");
            }
        }
    }

    #[test]
    fn rotated_parametrisations_agree() {
        let a = build_nq(3).unwrap();
        let base = GroupPoint::from_slices(&[0.0, 0.0], &[0.3, 0.0, 0.0, -0.2, 0.1, 0.0]);
        let z = |x: f64, y: f64| AlgebraVector::from_slices(&[x, y], &[0.0; 6]);
        let mut f1 = FlatImmersion::from_body(&a, base.clone(), &z(1.0, 0.0), &z(0.0, 1.0)).unwrap();
        let (c, s) = (0.8f64, 0.6f64);
        let mut f2 = FlatImmersion::from_body(&a, base, &z(c, s), &z(-s, c)).unwrap();
        verify_flat(&mut f1, 1e-7).unwrap();
        verify_flat(&mut f2, 1e-7).unwrap();
        let pn = PhantomN::new(&a, vec![BumpN::bump(vec![0.2, -0.1, 0.3, 0.0, 0.0, -0.2, 0.1, 0.0], 1.0, 0.9)]).unwrap();
        let oracle = |g: &GeodesicN<'_>| xray_forward_n(&pn, g);
        let r1 = restrict_to_flat(&oracle, &f1, 1e-7).unwrap();
        let r2 = restrict_to_flat(&oracle, &f2, 1e-7).unwrap();
        let rot = s.atan2(c);
        for (theta, p) in [(0.4, 0.1), (1.9, -0.2), (2.6, 0.05)] {
            // the same line in f2's parameters has its normal rotated back
            let v1 = r1.line_value(&LineR2::new(theta, p).unwrap()).unwrap();
            let v2 = r2.line_value(&LineR2::from_normal_angle(theta - rot, p)).unwrap();
            assert!((v1 - v2).abs() < 1e-7, "{v1} vs {v2}");
        }
    }

    #[test]
    fn unverified_flat_is_rejected() {
        let a = build_nq(3).unwrap();
        let z = |x: f64, y: f64| AlgebraVector::from_slices(&[x, y], &[0.0; 6]);
        let f = FlatImmersion::from_body(&a, a.identity(), &z(1.0, 0.0), &z(0.0, 1.0)).unwrap();
        let oracle = |_: &GeodesicN<'_>| Ok(0.0);
        assert!(matches!(restrict_to_flat(&oracle, &f, 1e-7), Err(Error::Precondition(_))));
    }

    #[test]
    fn coset_flat_contains_the_point() {
        let a = build_nq(3).unwrap();
        let atlas = CosetAtlas::central(&a).unwrap();
        let x = GroupPoint::from_slices(&[0.4, -0.7], &[0.1, 0.2, 0.0, 0.3, -0.1, 0.0]);
        let f = atlas.flat_through(&x).unwrap();
        let y = f.eval(0.4, -0.7).unwrap();
        assert!(y.coord_distance(&x) < 1e-14);
        let r4 = StepTwoAlgebra::abelian(4).unwrap();
        let p = CosetAtlas::product(&r4, 2).unwrap();
        let x = GroupPoint::from_slices(&[], &[0.5, 0.1, -0.3, 0.2]);
        let f = p.flat_through(&x).unwrap();
        assert!(f.eval(0.5, -0.3).unwrap().coord_distance(&x) < 1e-15);
        assert!(CosetAtlas::central(&r4).is_err());
    }
}
