use std::f64::consts::SQRT_2;

use serde::{Deserialize, Serialize};

use crate::algebra::{GroupPoint, StepTwoAlgebra};
use crate::error::{Error, Result};
use crate::geodesics::{nilpotent_slope, GeodesicN};
use crate::quad::{integrate, QuadOptions};
use crate::radon::{radial_chord_integral, Profile};

/// Absolute tolerance of geodesic integrals on `N`.
pub const GEODESIC_TOL: f64 = 1e-9;

/// Coordinate ball `{x : ‖Log x − center‖ < radius}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SupportBall {
    /// Flattened `(z..., h...)` coordinates.
    pub center: Vec<f64>,
    pub radius: f64,
}

impl SupportBall {
    pub fn contains(&self, flat: &[f64]) -> bool {
        dist(flat, &self.center) < self.radius
    }
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// A compactly supported function on `N`, in exponential coordinates.
pub trait ScalarFieldN: Sync {
    fn value(&self, p: &GroupPoint) -> f64;

    /// One coordinate ball containing the support.
    fn support(&self) -> SupportBall;

    /// Balls whose union contains the support; used to skip empty stretches
    /// of a geodesic.
    fn support_balls(&self) -> Vec<SupportBall> {
        vec![self.support()]
    }

    /// `∫ f(a + t b) dt` over the coordinate line `a + ℝb`.
    fn line_integral(&self, dim_z: usize, a: &[f64], b: &[f64], tol: f64) -> Result<f64> {
        let ball = self.support();
        let Some((t0, t1)) = line_ball_interval(a, b, &ball) else {
            return Ok(0.0);
        };
        let point = |t: f64| {
            let flat: Vec<f64> = a.iter().zip(b).map(|(x, y)| x + t * y).collect();
            GroupPoint::exp(crate::algebra::AlgebraVector::from_flat(dim_z, &flat))
        };
        Ok(integrate(|t| self.value(&point(t)), t0, t1, &QuadOptions::abs(tol).with_panels(4))?.value)
    }
}

/// Parameter interval on which `a + t b` lies inside `ball`.
fn line_ball_interval(a: &[f64], b: &[f64], ball: &SupportBall) -> Option<(f64, f64)> {
    let w: Vec<f64> = a.iter().zip(&ball.center).map(|(x, c)| x - c).collect();
    let bb = dot(b, b);
    if bb == 0.0 {
        return None;
    }
    let t_star = -dot(&w, b) / bb;
    let d2 = (dot(&w, &w) - dot(&w, b) * dot(&w, b) / bb).max(0.0);
    let r2 = ball.radius * ball.radius;
    if d2 >= r2 {
        return None;
    }
    let half = ((r2 - d2) / bb).sqrt();
    Some((t_star - half, t_star + half))
}

fn default_width() -> f64 {
    1.0
}

/// Radial bump in exponential coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BumpN {
    /// Flattened `(z..., h...)` coordinates.
    pub center: Vec<f64>,
    pub amplitude: f64,
    pub radius: f64,
    pub profile: Profile,
    #[serde(default = "default_width")]
    pub width: f64,
}

impl BumpN {
    pub fn bump(center: Vec<f64>, amplitude: f64, radius: f64) -> Self {
        Self {
            center,
            amplitude,
            radius,
            profile: Profile::Bump,
            width: 1.0,
        }
    }

    pub fn trunc_gauss(center: Vec<f64>, amplitude: f64, width: f64, radius: f64) -> Self {
        Self {
            center,
            amplitude,
            radius,
            profile: Profile::TruncGauss,
            width,
        }
    }

    pub fn radial(&self, d: f64) -> f64 {
        self.amplitude * self.profile.eval(d, self.radius, self.width)
    }
}

/// Sum of radial bumps on an `N` with the given dimensions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhantomN {
    pub dim_z: usize,
    pub dim_h: usize,
    pub bumps: Vec<BumpN>,
}

impl PhantomN {
    pub fn new(alg: &StepTwoAlgebra, bumps: Vec<BumpN>) -> Result<Self> {
        let f = Self {
            dim_z: alg.dim_z(),
            dim_h: alg.dim_h(),
            bumps,
        };
        f.validate()?;
        Ok(f)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.dim_z + self.dim_h;
        for b in &self.bumps {
            crate::error::check_len("bump centre", n, b.center.len())?;
            let finite = b.center.iter().chain([&b.amplitude, &b.radius, &b.width]).all(|v| v.is_finite());
            if !finite || b.radius <= 0.0 || b.width <= 0.0 {
                return Err(Error::Argument(format!(
                    "bump needs finite entries and positive radius/width: {b:?}"
                )));
            }
        }
        Ok(())
    }

    pub fn max_abs_bound(&self) -> f64 {
        self.bumps.iter().map(|b| b.amplitude.abs()).sum()
    }
}

impl ScalarFieldN for PhantomN {
    fn value(&self, p: &GroupPoint) -> f64 {
        let flat = p.coords.to_flat();
        self.bumps.iter().map(|b| b.radial(dist(&flat, &b.center))).sum()
    }

    /// Ball about the origin containing every bump.
    fn support(&self) -> SupportBall {
        let radius = self
            .bumps
            .iter()
            .map(|b| dist(&b.center, &vec![0.0; b.center.len()]) + b.radius)
            .fold(0.0, f64::max);
        SupportBall {
            center: vec![0.0; self.dim_z + self.dim_h],
            radius,
        }
    }

    fn support_balls(&self) -> Vec<SupportBall> {
        self.bumps
            .iter()
            .map(|b| SupportBall {
                center: b.center.clone(),
                radius: b.radius,
            })
            .collect()
    }

    fn line_integral(&self, _dim_z: usize, a: &[f64], b: &[f64], tol: f64) -> Result<f64> {
        let speed = dot(b, b).sqrt();
        if speed == 0.0 {
            return Err(Error::Argument("line with zero direction".into()));
        }
        let tol = tol / self.bumps.len().max(1) as f64;
        let mut total = 0.0;
        for bump in &self.bumps {
            if bump.amplitude == 0.0 {
                continue;
            }
            // distance to the centre along the line: √(d² + speed²(t − t*)²)
            let w: Vec<f64> = a.iter().zip(&bump.center).map(|(x, c)| x - c).collect();
            let wb = dot(&w, b);
            let d = (dot(&w, &w) - wb * wb / (speed * speed)).max(0.0).sqrt();
            total += radial_chord_integral(|r| bump.radial(r), bump.radius, d, tol * speed)? / speed;
        }
        Ok(total)
    }
}

/// Anything that assigns a value to geodesics of `N`.
pub trait GeodesicOracle: Sync {
    fn geodesic_value(&self, g: &GeodesicN<'_>) -> Result<f64>;
}

impl<F: Fn(&GeodesicN<'_>) -> Result<f64> + Sync> GeodesicOracle for F {
    fn geodesic_value(&self, g: &GeodesicN<'_>) -> Result<f64> {
        self(g)
    }
}

/// The exact X-ray transform of a field, by quadrature.
pub struct FieldOracleN<'a, F: ?Sized> {
    pub field: &'a F,
}

impl<'a, F: ScalarFieldN + ?Sized> FieldOracleN<'a, F> {
    pub fn new(field: &'a F) -> Self {
        Self { field }
    }
}

impl<F: ScalarFieldN + ?Sized> GeodesicOracle for FieldOracleN<'_, F> {
    fn geodesic_value(&self, g: &GeodesicN<'_>) -> Result<f64> {
        xray_forward_n(self.field, g)
    }
}

/// Time after which a unit geodesic from `base` has left every ball in
/// `balls`: `R′·√(4 dim h/(π − 2))` with
/// `R′ = ‖Log p‖ + R + ½C‖Log p‖(‖Log p‖ + R)`, where `R` bounds the
/// coordinate radius of the support about the origin and `C = √Σ‖J_a‖²`
/// bounds the bracket.
pub fn truncation_time(alg: &StepTwoAlgebra, base: &GroupPoint, support: &SupportBall) -> f64 {
    let np = base.coords.norm();
    let r = dist(&support.center, &vec![0.0; support.center.len()]) + support.radius;
    let rp = np + r + 0.5 * alg.bracket_bound() * np * (np + r);
    rp * nilpotent_slope(alg.dim_h())
}

/// `∫ f(γ(t)) dt` along a unit-speed geodesic of `N`.
///
/// Straight geodesics are coordinate lines and are integrated per support
/// ball in closed-form chords. Otherwise the integral is truncated to
/// `[−T, T]` (see [`truncation_time`]), the stretches of the geodesic that
/// come near a support ball are located on a coarse grid, and only those are
/// integrated adaptively.
pub fn xray_forward_n<F: ScalarFieldN + ?Sized>(f: &F, g: &GeodesicN<'_>) -> Result<f64> {
    if !g.is_unit_speed() {
        return Err(Error::Argument("xray_forward_n needs a unit-speed geodesic".into()));
    }
    let alg = g.algebra();
    if let Some((a, b)) = g.as_line() {
        return f.line_integral(alg.dim_z(), &a, &b, GEODESIC_TOL);
    }
    let balls = f.support_balls();
    if balls.is_empty() {
        return Ok(0.0);
    }
    let t_max = truncation_time(alg, g.base(), &f.support());
    let v_max = SQRT_2 + 0.5 * alg.bracket_bound() * (t_max + g.base().h().norm());
    let r_min = balls.iter().map(|b| b.radius).fold(f64::INFINITY, f64::min);
    let cells = ((2.0 * t_max * v_max / r_min).ceil() as usize).clamp(16, 200_000);
    let dt = 2.0 * t_max / cells as f64;
    let mids: Vec<f64> = (0..cells).map(|k| -t_max + (k as f64 + 0.5) * dt).collect();
    let pts = g.trajectory(&mids)?;
    let ends = g.trajectory(&[-t_max, t_max])?;
    for (t, p) in [-t_max, t_max].iter().zip(&ends) {
        let v = f.value(p);
        if v != 0.0 {
            return Err(Error::Numeric(format!(
                "truncation bound violated: f(γ({t})) = {v} is not zero"
            )));
        }
    }
    let slack = 0.5 * v_max * dt;
    let active: Vec<bool> = pts
        .iter()
        .map(|p| {
            let flat = p.coords.to_flat();
            balls.iter().any(|b| dist(&flat, &b.center) < b.radius + slack)
        })
        .collect();

    let mut total = 0.0;
    let mut k = 0;
    while k < cells {
        if !active[k] {
            k += 1;
            continue;
        }
        let start = k;
        while k < cells && active[k] {
            k += 1;
        }
        let (t0, t1) = (-t_max + start as f64 * dt, -t_max + k as f64 * dt);
        // Restart the geodesic at t0 so each evaluation integrates z only
        // over the short stretch [t0, t].
        let p0 = g.evaluate(t0)?;
        let local = GeodesicN::new(alg, p0, g.z0().clone(), g.h_dot_at(t0))?;
        let mut failure = None;
        let r = integrate(
            |t| match local.evaluate(t - t0) {
                Ok(p) => f.value(&p),
                Err(e) => {
                    failure.get_or_insert(e);
                    0.0
                }
            },
            t0,
            t1,
            &QuadOptions::abs(GEODESIC_TOL).with_panels(k - start),
        )?;
        if let Some(e) = failure {
            return Err(e);
        }
        total += r.value;
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::build_nq;
    use nalgebra::DVector;

    fn gauss_n3(a: &StepTwoAlgebra) -> PhantomN {
        PhantomN::new(a, vec![BumpN::trunc_gauss(vec![0.0; 8], 1.0, 0.5, 3.0)]).unwrap()
    }

    #[test]
    fn central_geodesic_through_centre() {
        let a = build_nq(3).unwrap();
        let f = gauss_n3(&a);
        let g = GeodesicN::from_identity(&a, DVector::from_vec(vec![0.6, 0.8]), DVector::zeros(6)).unwrap();
        let v = xray_forward_n(&f, &g).unwrap();
        // ∫ exp(−t²/0.25) over |t| < 3
        let want = integrate(|t| (-t * t / 0.25).exp(), -3.0, 3.0, &QuadOptions::abs(1e-13)).unwrap().value;
        assert!((v - want).abs() < 1e-9);
    }

    #[test]
    fn miss_gives_zero() {
        let a = build_nq(3).unwrap();
        let f = gauss_n3(&a);
        let base = GroupPoint::from_slices(&[0.0, 0.0], &[0.0, 0.0, 0.0, 0.0, 5.0, 0.0]);
        let g = GeodesicN::new(&a, base, DVector::from_vec(vec![1.0, 0.0]), DVector::zeros(6)).unwrap();
        assert_eq!(xray_forward_n(&f, &g).unwrap(), 0.0);
    }

    #[test]
    fn curved_geodesic_matches_brute_force() {
        let a = build_nq(3).unwrap();
        let f = PhantomN::new(&a, vec![BumpN::bump(vec![0.1, 0.0, 0.2, 0.0, 0.0, 0.1, 0.0, 0.0], 1.0, 1.2)]).unwrap();
        let z0: DVector<f64> = DVector::from_vec(vec![0.5, 0.1]);
        let mut h0 = DVector::from_vec(vec![0.6, 0.2, 0.1, -0.3, 0.2, 0.1]);
        h0 *= (1.0 - z0.norm_squared()).sqrt() / h0.norm();
        let g = GeodesicN::from_identity(&a, z0, h0).unwrap();
        assert!(!g.is_straight());
        let v = xray_forward_n(&f, &g).unwrap();
        // brute force: trapezoid on a fine grid over a generous window
        let n = 8000;
        let ts: Vec<f64> = (0..=n).map(|k| -4.0 + 8.0 * k as f64 / n as f64).collect();
        let pts = g.trajectory(&ts).unwrap();
        let brute: f64 = pts.iter().map(|p| f.value(p)).sum::<f64>() * (8.0 / n as f64);
        assert!(v > 0.1);
        assert!((v - brute).abs() < 1e-6, "{v} vs {brute}");
    }

    #[test]
    fn linear_in_the_field() {
        let a = build_nq(3).unwrap();
        let b1 = BumpN::bump(vec![0.2, 0.0, 0.1, 0.0, 0.0, 0.0, 0.0, 0.0], 1.0, 0.8);
        let b2 = BumpN::trunc_gauss(vec![0.0, -0.2, 0.0, 0.3, 0.0, 0.0, 0.0, 0.0], 1.0, 0.4, 1.0);
        let f1 = PhantomN::new(&a, vec![b1.clone()]).unwrap();
        let f2 = PhantomN::new(&a, vec![b2.clone()]).unwrap();
        let mut b2s = b2.clone();
        b2s.amplitude = -2.5;
        let mut b1s = b1.clone();
        b1s.amplitude = 0.7;
        let f12 = PhantomN::new(&a, vec![b1s, b2s]).unwrap();
        let z0: DVector<f64> = DVector::from_vec(vec![0.3, 0.0]);
        let mut h0 = DVector::from_vec(vec![0.1, 0.5, 0.0, 0.2, 0.3, 0.0]);
        h0 *= (1.0 - 0.09f64).sqrt() / h0.norm();
        let g = GeodesicN::from_identity(&a, z0, h0).unwrap();
        let lhs = xray_forward_n(&f12, &g).unwrap();
        let rhs = 0.7 * xray_forward_n(&f1, &g).unwrap() - 2.5 * xray_forward_n(&f2, &g).unwrap();
        assert!((lhs - rhs).abs() < 1e-8);
    }
}
