//! X-ray transform and its inversion on the hyperbolic plane, in the
//! Poincaré disk model (curvature −1).
//!
//! The inversion formula is the planar one with `t` replaced by `sinh t`:
//! `f(x) = −(1/π)∫₀^∞ F_x′(t)/sinh t dt`, `F_x(t)` being the mean of the
//! transform over geodesics at distance `t` from `x`.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::quad::{integrate, QuadOptions};
use crate::radon::invert::{check_options, invert_profile};
use crate::radon::{InversionOptions, PhantomBump, RadialProfile, LINE_TOL};

/// `T_a(z) = (z + a)/(1 + āz)`, the disk isometry taking 0 to `a`.
pub fn mobius(a: Complex64, z: Complex64) -> Complex64 {
    (z + a) / (Complex64::new(1.0, 0.0) + a.conj() * z)
}

fn mobius_derivative(a: Complex64, z: Complex64) -> Complex64 {
    let d = Complex64::new(1.0, 0.0) + a.conj() * z;
    Complex64::new(1.0 - a.norm_sqr(), 0.0) / (d * d)
}

pub fn h2_distance(x: Complex64, y: Complex64) -> f64 {
    let r = (x - y).norm() / (Complex64::new(1.0, 0.0) - x.conj() * y).norm();
    2.0 * r.min(1.0).atanh()
}

/// Unit-speed geodesic `γ(s) = T_a(e^{iψ} tanh(s/2))` through `a` with
/// Euclidean direction angle `ψ` at `a`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct H2Geodesic {
    pub base: [f64; 2],
    pub angle: f64,
}

impl H2Geodesic {
    pub fn new(base: [f64; 2], angle: f64) -> Result<Self> {
        if !(base[0].hypot(base[1]) < 1.0) || !angle.is_finite() {
            return Err(Error::Argument(format!("geodesic base {base:?} must lie in the open unit disk")));
        }
        Ok(Self { base, angle })
    }

    fn a(&self) -> Complex64 {
        Complex64::new(self.base[0], self.base[1])
    }

    pub fn point_at(&self, s: f64) -> Complex64 {
        mobius(self.a(), Complex64::from_polar((0.5 * s).tanh(), self.angle))
    }

    /// The same geodesic seen after the isometry `T_{−c}` (which moves `c`
    /// to 0): new base point and direction.
    fn recentred(&self, c: Complex64) -> (Complex64, f64) {
        let b = mobius(-c, self.a());
        let rot = mobius_derivative(-c, self.a()).arg();
        (b, self.angle + rot)
    }

    /// Parameter interval on which the geodesic is within distance `r` of `c`.
    pub fn chord(&self, c: [f64; 2], r: f64) -> Option<(f64, f64)> {
        let (b, psi) = self.recentred(Complex64::new(c[0], c[1]));
        let d0 = 2.0 * b.norm().min(1.0).atanh();
        let phi = if b.norm() > 0.0 { psi - b.arg() } else { 0.5 * PI };
        let dist = (d0.sinh() * phi.sin().abs()).asinh();
        if dist >= r {
            return None;
        }
        let s_foot = -(d0.tanh() * phi.cos()).atanh();
        let half = (r.cosh() / dist.cosh()).acosh();
        Some((s_foot - half, s_foot + half))
    }
}

/// Compactly supported function on the disk, as a sum of bumps radial in
/// hyperbolic distance (centre in disk coordinates, radius hyperbolic).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct H2Phantom {
    pub bumps: Vec<PhantomBump>,
}

impl H2Phantom {
    pub fn new(bumps: Vec<PhantomBump>) -> Result<Self> {
        for b in &bumps {
            b.validate()?;
            if !(b.center[0].hypot(b.center[1]) < 1.0) {
                return Err(Error::Argument(format!("bump centre {:?} outside the disk", b.center)));
            }
        }
        Ok(Self { bumps })
    }

    pub fn value(&self, z: Complex64) -> f64 {
        self.bumps
            .iter()
            .map(|b| b.radial(h2_distance(Complex64::new(b.center[0], b.center[1]), z)))
            .sum()
    }
}

/// Anything that assigns a value to geodesics of `ℍ²`.
pub trait H2LineOracle: Sync {
    fn geodesic_value(&self, g: &H2Geodesic) -> Result<f64>;
}

impl<F: Fn(&H2Geodesic) -> Result<f64> + Sync> H2LineOracle for F {
    fn geodesic_value(&self, g: &H2Geodesic) -> Result<f64> {
        self(g)
    }
}

impl H2LineOracle for H2Phantom {
    fn geodesic_value(&self, g: &H2Geodesic) -> Result<f64> {
        h2_xray_forward(self, g)
    }
}

/// `∫ f(γ(s)) ds` along the geodesic, by quadrature over each bump's chord.
pub fn h2_xray_forward(f: &H2Phantom, g: &H2Geodesic) -> Result<f64> {
    let tol = LINE_TOL / f.bumps.len().max(1) as f64;
    let mut total = 0.0;
    for b in &f.bumps {
        if b.amplitude == 0.0 {
            continue;
        }
        let Some((s0, s1)) = g.chord(b.center, b.radius) else {
            continue;
        };
        let c = Complex64::new(b.center[0], b.center[1]);
        let r = integrate(|s| b.radial(h2_distance(c, g.point_at(s))), s0, s1, &QuadOptions::abs(tol).with_panels(4))?;
        total += r.value;
    }
    Ok(total)
}

/// Mean of the transform over geodesics at hyperbolic distance `t` from `x`.
pub fn h2_mean_value<O: H2LineOracle + ?Sized>(oracle: &O, x: [f64; 2], t: f64, n_dirs: usize) -> Result<f64> {
    if n_dirs < 4 {
        return Err(Error::Argument(format!("h2_mean_value needs n_dirs >= 4, got {n_dirs}")));
    }
    let xc = Complex64::new(x[0], x[1]);
    let rho = (0.5 * t).tanh();
    let mut sum = 0.0;
    for k in 0..n_dirs {
        let beta = 2.0 * PI * k as f64 / n_dirs as f64;
        // Foot point at distance t from 0 in direction β, geodesic orthogonal
        // to the ray; then move 0 to x.
        let q = Complex64::from_polar(rho, beta);
        let a = mobius(xc, q);
        let angle = beta + 0.5 * PI + mobius_derivative(xc, q).arg();
        sum += oracle.geodesic_value(&H2Geodesic::new([a.re, a.im], angle)?)?;
    }
    Ok(sum / n_dirs as f64)
}

#[derive(Debug, Clone, Serialize)]
pub struct H2Inversion {
    pub value: f64,
    pub profile: RadialProfile,
    pub tail: f64,
    pub tail_warning: bool,
}

pub fn h2_invert_with<O: H2LineOracle + ?Sized>(oracle: &O, x: [f64; 2], opts: &InversionOptions) -> Result<H2Inversion> {
    check_options(opts)?;
    let h = opts.t_max / opts.grid as f64;
    let ts: Vec<f64> = (0..opts.grid + 3).map(|k| h * k as f64).collect();
    let values = ts
        .iter()
        .map(|&t| h2_mean_value(oracle, x, t, opts.n_dirs))
        .collect::<Result<Vec<f64>>>()?;
    let value = invert_profile(&values, h, f64::sinh);
    if !value.is_finite() {
        return Err(Error::Numeric(format!("hyperbolic inversion at {x:?} produced {value}")));
    }
    let tail = values[opts.grid];
    Ok(H2Inversion {
        value,
        tail,
        tail_warning: tail.abs() > opts.tail_tol,
        profile: RadialProfile { center: x, ts, values },
    })
}

pub fn h2_invert<O: H2LineOracle + ?Sized>(oracle: &O, x: [f64; 2], t_max: f64, grid: usize) -> Result<f64> {
    Ok(h2_invert_with(oracle, x, &InversionOptions::new(t_max, grid))?.value)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn geodesics_have_unit_speed() {
        let g = H2Geodesic::new([0.3, -0.2], 1.1).unwrap();
        for s in [-2.0, 0.0, 0.7, 3.0] {
            let d = h2_distance(g.point_at(s), g.point_at(s + 0.5));
            assert!((d - 0.5).abs() < 1e-12);
        }
        assert!((g.point_at(0.0) - Complex64::new(0.3, -0.2)).norm() < 1e-15);
        assert!(H2Geodesic::new([1.0, 0.0], 0.0).is_err());
    }

    #[test]
    fn chord_endpoints_lie_on_the_circle() {
        let g = H2Geodesic::new([0.4, 0.1], 2.0).unwrap();
        let c = [-0.1, 0.2];
        let (s0, s1) = g.chord(c, 1.5).unwrap();
        let cc = Complex64::new(c[0], c[1]);
        assert!((h2_distance(cc, g.point_at(s0)) - 1.5).abs() < 1e-10);
        assert!((h2_distance(cc, g.point_at(s1)) - 1.5).abs() < 1e-10);
        assert!(h2_distance(cc, g.point_at(0.5 * (s0 + s1))) < 1.5);
        assert!(g.chord(c, 1e-3).is_none());
    }

    #[test]
    fn mean_value_geodesics_are_at_distance_t() {
        let x = [0.2, 0.3];
        let probe = |g: &H2Geodesic| -> Result<f64> {
            // distance from x to the geodesic, by sampling
            let xc = Complex64::new(0.2, 0.3);
            Ok((-400..=400)
                .map(|k| h2_distance(xc, g.point_at(k as f64 * 0.005)))
                .fold(f64::INFINITY, f64::min))
        };
        let m = h2_mean_value(&probe, x, 0.8, 8).unwrap();
        assert!((m - 0.8).abs() < 1e-4, "{m}");
    }

    #[test]
    fn zero_field() {
        let f = H2Phantom::new(vec![]).unwrap();
        assert_eq!(h2_invert(&f, [0.0, 0.0], 2.0, 40).unwrap(), 0.0);
    }
}
