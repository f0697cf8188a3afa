use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::algebra::GroupPoint;
use crate::error::{Error, Result};
use crate::flats::{restrict_to_flat, FlatAtlas, FlatImmersion, FlatRecord, GeodesicOracle, FD_STEP};
use crate::radon::{radon_invert_with, Inversion, InversionOptions};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReductionOptions {
    /// Radius in the flat beyond which the restricted line values vanish.
    pub t_max: f64,
    pub grid: usize,
    pub n_dirs: usize,
    /// Coordinate residual at which the preimage search stops.
    pub newton_tol: f64,
    /// Largest verification residual of an acceptable flat.
    pub flat_tol: f64,
}

impl ReductionOptions {
    pub fn new(t_max: f64, grid: usize, n_dirs: usize) -> Self {
        Self {
            t_max,
            grid,
            n_dirs,
            newton_tol: 1e-12,
            flat_tol: 1e-7,
        }
    }

    fn inversion(&self) -> InversionOptions {
        InversionOptions::new(self.t_max, self.grid).with_dirs(self.n_dirs)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Reduction {
    pub value: f64,
    pub preimage: [f64; 2],
    /// `‖Φ(preimage) − x‖` in coordinates.
    pub preimage_residual: f64,
    pub flat: FlatRecord,
    pub inversion: Inversion,
}

/// Parameters minimising `‖Φ(s, u) − x‖` over the flat and the residual
/// there, by damped Gauss–Newton with a finite-difference Jacobian. A large
/// residual means `x` is not on the flat.
pub fn flat_project(f: &FlatImmersion<'_>, x: &GroupPoint, tol: f64) -> Result<([f64; 2], f64)> {
    f.algebra().check_point(x)?;
    let target = x.coords.to_flat();
    let resid = |q: [f64; 2]| -> Result<Vec<f64>> {
        let y = f.eval(q[0], q[1])?.coords.to_flat();
        Ok(y.iter().zip(&target).map(|(a, b)| a - b).collect())
    };
    let norm = |r: &[f64]| r.iter().map(|v| v * v).sum::<f64>().sqrt();
    // Start from the coordinate projection onto span{v, w} about the base.
    let d: Vec<f64> = target.iter().zip(f.base().coords.to_flat()).map(|(a, b)| a - b).collect();
    let (v, w) = (f.v().to_flat(), f.w().to_flat());
    let mut q = solve_normal(&v, &w, &d).unwrap_or([0.0, 0.0]);
    let mut r = resid(q)?;
    let mut rn = norm(&r);
    for _ in 0..60 {
        if rn <= tol {
            break;
        }
        let js = f.differential(q[0], q[1], 1.0, 0.0)?.to_flat();
        let ju = f.differential(q[0], q[1], 0.0, 1.0)?.to_flat();
        let Some(step) = solve_normal(&js, &ju, &r) else {
            return Err(Error::Numeric(format!("flat Jacobian is singular at {q:?}")));
        };
        let mut lambda = 1.0;
        let mut improved = false;
        while lambda > 1e-6 {
            let trial = [q[0] - lambda * step[0], q[1] - lambda * step[1]];
            let rt = resid(trial)?;
            let rtn = norm(&rt);
            if rtn < rn {
                (q, r, rn, improved) = (trial, rt, rtn, true);
                break;
            }
            lambda *= 0.5;
        }
        if !improved || lambda * step[0].hypot(step[1]) < 1e-16 {
            break;
        }
    }
    Ok((q, rn))
}

/// Least-squares `(a, b)` with `a·x + b·y ≈ r`.
fn solve_normal(x: &[f64], y: &[f64], r: &[f64]) -> Option<[f64; 2]> {
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(p, q)| p * q).sum::<f64>();
    let (xx, xy, yy) = (dot(x, x), dot(x, y), dot(y, y));
    let det = xx * yy - xy * xy;
    if det.abs() <= 1e-14 * (xx * yy).max(f64::MIN_POSITIVE) {
        return None;
    }
    let (xr, yr) = (dot(x, r), dot(y, r));
    Some([(yy * xr - xy * yr) / det, (xx * yr - xy * xr) / det])
}

/// Preimage of a point that must lie on the flat.
pub fn flat_preimage(f: &FlatImmersion<'_>, x: &GroupPoint, tol: f64) -> Result<([f64; 2], f64)> {
    let (q, r) = flat_project(f, x, tol)?;
    // The finite-difference Jacobian limits attainable accuracy to about
    // FD_STEP² times the curvature of Φ, so allow a margin above `tol`.
    let accept = tol.max(FD_STEP * FD_STEP) * (1.0 + x.coords.norm());
    if r > accept {
        return Err(Error::Numeric(format!(
            "preimage search did not converge: point {:?} stays {r:.3e} from the flat (best parameters {q:?})",
            x.coords.to_flat()
        )));
    }
    Ok((q, r))
}

/// Reconstruct `f(x)` from geodesic line values: take a verified flat
/// through `x`, pull the oracle back to it, and invert the planar transform
/// at the preimage of `x`.
pub fn reduce_and_invert<'a, O, A>(oracle: &O, atlas: &A, x: &GroupPoint, opts: &ReductionOptions) -> Result<Reduction>
where
    O: GeodesicOracle + ?Sized,
    A: FlatAtlas<'a> + ?Sized,
{
    let flat = atlas.flat_through(x)?;
    let (preimage, preimage_residual) = flat_preimage(&flat, x, opts.newton_tol)?;
    let restricted = restrict_to_flat(oracle, &flat, opts.flat_tol)?;
    let inversion = radon_invert_with(&restricted, preimage, &opts.inversion())?;
    Ok(Reduction {
        value: inversion.value,
        preimage,
        preimage_residual,
        flat: flat.to_record(),
        inversion,
    })
}

/// [`reduce_and_invert`] at many points, in parallel; results keep the input order.
pub fn reduce_points<'a, O, A>(oracle: &O, atlas: &A, xs: &[GroupPoint], opts: &ReductionOptions) -> Result<Vec<Reduction>>
where
    O: GeodesicOracle + ?Sized,
    A: FlatAtlas<'a> + ?Sized,
{
    xs.par_iter().map(|x| reduce_and_invert(oracle, atlas, x, opts)).collect()
}
