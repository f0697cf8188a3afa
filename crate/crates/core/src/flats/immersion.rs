use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::algebra::{AlgebraVector, GroupPoint, StepTwoAlgebra};
use crate::error::{Error, Result};
use crate::geodesics::GeodesicN;

/// Step of every finite-difference derivative in this module.
pub const FD_STEP: f64 = 1e-5;

const ORTHONORMAL_TOL: f64 = 1e-10;

/// `Φ(s, u) = exp_base(s·v + u·w)`: the geodesic exponential at `base`
/// restricted to the plane spanned by the coordinate tangents `v`, `w`.
///
/// For a totally geodesic flat this is an isometric immersion of `ℝ²`;
/// [`is_totally_geodesic_flat`] checks that numerically and records the
/// outcome in `residual`.
#[derive(Debug, Clone)]
pub struct FlatImmersion<'a> {
    algebra: &'a StepTwoAlgebra,
    base: GroupPoint,
    v: AlgebraVector,
    w: AlgebraVector,
    pub residual: Option<f64>,
}

/// Serializable form of a [`FlatImmersion`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlatRecord {
    pub base: GroupPoint,
    pub v: AlgebraVector,
    pub w: AlgebraVector,
    pub residual: Option<f64>,
}

impl<'a> FlatImmersion<'a> {
    /// Fails unless `v`, `w` are orthonormal under the metric at `base`.
    pub fn new(algebra: &'a StepTwoAlgebra, base: GroupPoint, v: AlgebraVector, w: AlgebraVector) -> Result<Self> {
        let g = [
            algebra.metric_at(&base, &v, &v)?,
            algebra.metric_at(&base, &w, &w)?,
            algebra.metric_at(&base, &v, &w)?,
        ];
        if (g[0] - 1.0).abs() > ORTHONORMAL_TOL || (g[1] - 1.0).abs() > ORTHONORMAL_TOL || g[2].abs() > ORTHONORMAL_TOL {
            return Err(Error::Argument(format!(
                "flat directions are not orthonormal at the base: ⟨v,v⟩ = {}, ⟨w,w⟩ = {}, ⟨v,w⟩ = {}",
                g[0], g[1], g[2]
            )));
        }
        Ok(Self {
            algebra,
            base,
            v,
            w,
            residual: None,
        })
    }

    /// Flat at `base` from orthonormal body (left-invariant) directions.
    pub fn from_body(algebra: &'a StepTwoAlgebra, base: GroupPoint, v: &AlgebraVector, w: &AlgebraVector) -> Result<Self> {
        let v = algebra.left_translate_tangent(&base, v);
        let w = algebra.left_translate_tangent(&base, w);
        Self::new(algebra, base, v, w)
    }

    pub fn from_record(algebra: &'a StepTwoAlgebra, r: &FlatRecord) -> Result<Self> {
        let mut f = Self::new(algebra, r.base.clone(), r.v.clone(), r.w.clone())?;
        f.residual = r.residual;
        Ok(f)
    }

    pub fn to_record(&self) -> FlatRecord {
        FlatRecord {
            base: self.base.clone(),
            v: self.v.clone(),
            w: self.w.clone(),
            residual: self.residual,
        }
    }

    pub fn algebra(&self) -> &'a StepTwoAlgebra {
        self.algebra
    }

    pub fn base(&self) -> &GroupPoint {
        &self.base
    }

    pub fn v(&self) -> &AlgebraVector {
        &self.v
    }

    pub fn w(&self) -> &AlgebraVector {
        &self.w
    }

    pub fn is_verified(&self, tol: f64) -> bool {
        self.residual.is_some_and(|r| r <= tol)
    }

    pub fn eval(&self, s: f64, u: f64) -> Result<GroupPoint> {
        if s == 0.0 && u == 0.0 {
            return Ok(self.base.clone());
        }
        let dir = self.v.scale(s).axpy(u, &self.w);
        GeodesicN::from_coordinate_tangent(self.algebra, self.base.clone(), &dir, false)?.evaluate(1.0)
    }

    /// `dΦ(a, b)` at `(s, u)` by central differences.
    pub fn differential(&self, s: f64, u: f64, a: f64, b: f64) -> Result<AlgebraVector> {
        let e = FD_STEP;
        let plus = self.eval(s + e * a, u + e * b)?;
        let minus = self.eval(s - e * a, u - e * b)?;
        Ok(plus.coords.sub(&minus.coords).scale(0.5 / e))
    }
}

/// Largest coordinate deviation of `curve` from the geodesic that shares its
/// position and (finite-difference) velocity at `t0`, over `t_grid`.
pub fn geodesy_residual(
    alg: &StepTwoAlgebra,
    curve: impl Fn(f64) -> Result<GroupPoint>,
    t0: f64,
    t_grid: &[f64],
) -> Result<f64> {
    let p0 = curve(t0)?;
    let vel = curve(t0 + FD_STEP)?.coords.sub(&curve(t0 - FD_STEP)?.coords).scale(0.5 / FD_STEP);
    if alg.to_body(&p0, &vel).norm() < 1e-12 {
        return Err(Error::Argument("geodesy_residual: curve has zero velocity".into()));
    }
    let g = GeodesicN::from_coordinate_tangent(alg, p0, &vel, false)?;
    let mut worst = 0.0f64;
    for &t in t_grid {
        let d = curve(t)?.coord_distance(&g.evaluate(t - t0)?);
        worst = worst.max(d);
    }
    Ok(worst)
}

/// Where and how a flat is probed by [`is_totally_geodesic_flat`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlatSamples {
    /// Base parameters `(s₀, u₀)`.
    pub params: Vec<[f64; 2]>,
    /// Angles of the probe directions in the parameter plane.
    pub angles: Vec<f64>,
    /// Times along each probe line.
    pub t_grid: Vec<f64>,
}

impl Default for FlatSamples {
    fn default() -> Self {
        Self {
            params: vec![[0.0, 0.0], [0.7, -0.4], [-0.5, 0.9]],
            angles: vec![0.0, PI / 3.0, 2.0 * PI / 3.0],
            t_grid: vec![-1.0, -0.5, 0.5, 1.0],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlatVerdict {
    pub passed: bool,
    /// `max(geodesy, metric)`.
    pub residual: f64,
    /// Worst [`geodesy_residual`] of a probe line.
    pub geodesy: f64,
    /// Worst entry of `Φ*g − δ`.
    pub metric: f64,
}

/// Two numeric tests: every probe line `t ↦ Φ(s₀ + t cos α, u₀ + t sin α)`
/// must be a geodesic of `N`, and the pulled-back metric must be the
/// Euclidean one at every base parameter.
pub fn is_totally_geodesic_flat(f: &FlatImmersion<'_>, samples: &FlatSamples, tol: f64) -> Result<FlatVerdict> {
    let alg = f.algebra();
    let mut geodesy = 0.0f64;
    let mut metric = 0.0f64;
    for &[s0, u0] in &samples.params {
        for &alpha in &samples.angles {
            let (sa, ca) = alpha.sin_cos();
            let r = geodesy_residual(alg, |t| f.eval(s0 + t * ca, u0 + t * sa), 0.0, &samples.t_grid)?;
            geodesy = geodesy.max(r);
        }
        let p = f.eval(s0, u0)?;
        let ds = f.differential(s0, u0, 1.0, 0.0)?;
        let du = f.differential(s0, u0, 0.0, 1.0)?;
        let g = [
            alg.metric_at(&p, &ds, &ds)? - 1.0,
            alg.metric_at(&p, &du, &du)? - 1.0,
            alg.metric_at(&p, &ds, &du)?,
        ];
        metric = g.iter().fold(metric, |m, x| m.max(x.abs()));
    }
    let residual = geodesy.max(metric);
    Ok(FlatVerdict {
        passed: residual <= tol,
        residual: if residual.is_nan() { f64::INFINITY } else { residual },
        geodesy,
        metric,
    })
}

/// Run the verifier and store the residual in the flat.
pub fn verify_flat(f: &mut FlatImmersion<'_>, tol: f64) -> Result<FlatVerdict> {
    let v = is_totally_geodesic_flat(f, &FlatSamples::default(), tol)?;
    f.residual = Some(v.residual);
    Ok(v)
}
