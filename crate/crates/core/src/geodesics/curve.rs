use std::sync::OnceLock;

use nalgebra::DVector;

use crate::algebra::{spectral_decompose, AlgebraVector, GroupPoint, SpectralData, StepTwoAlgebra};
use crate::error::{Error, Result};
use crate::quad::{integrate_vec, QuadOptions};

/// Unit-speed tolerance on `‖z₀‖² + ‖h₀‖²`.
pub const UNIT_SPEED_TOL: f64 = 1e-12;

/// Default absolute tolerance for the z-component quadrature.
pub const Z_QUAD_TOL: f64 = 1e-10;

/// `‖J_{z₀} h₀‖` at or below which the geodesic is a straight coordinate line.
pub const STRAIGHT_TOL: f64 = 1e-14;

#[derive(Debug, Clone)]
struct Block {
    lambda: f64,
    u: Vec<f64>,
    w: Option<Vec<f64>>,
    a: f64,
    b: f64,
}

/// `(sin θ / θ, (1 − cos θ) / θ)` with the `θ → 0` limits.
fn phi_factors(theta: f64) -> (f64, f64) {
    if theta.abs() < 1e-4 {
        let t2 = theta * theta;
        (1.0 - t2 / 6.0 + t2 * t2 / 120.0, theta / 2.0 - theta * t2 / 24.0)
    } else {
        let (s, c) = theta.sin_cos();
        (s / theta, (1.0 - c) / theta)
    }
}

/// A geodesic of `N` with `γ(0) = base` and left-invariant initial velocity
/// `(z₀, h₀)`.
///
/// With base at the identity, `γ(t) = (z(t), h(t))` where
/// `h(t) = φ(tZ)·t·h₀`, `φ(M) = (e^M − 1)M⁻¹`, `Z = j_action(z₀)`, and
/// `z(t) = t z₀ + ½∫₀ᵗ [h(s), h′(s)] ds`. `φ` is applied on the invariant
/// planes of `Z`, where it is the complex factor `(e^{itλ} − 1)/(iλ)`; the
/// z-integral is done by adaptive Gauss–Kronrod quadrature. A general base
/// point is handled by left translation.
#[derive(Debug, Clone)]
pub struct GeodesicN<'a> {
    algebra: &'a StepTwoAlgebra,
    base: GroupPoint,
    z0: DVector<f64>,
    h0: DVector<f64>,
    unit_speed: bool,
    straight: bool,
    quad_tol: f64,
    spectral: OnceLock<SpectralData>,
    blocks: OnceLock<Vec<Block>>,
}

impl<'a> GeodesicN<'a> {
    /// Unit-speed geodesic; fails unless `‖z₀‖² + ‖h₀‖² = 1`.
    pub fn new(algebra: &'a StepTwoAlgebra, base: GroupPoint, z0: DVector<f64>, h0: DVector<f64>) -> Result<Self> {
        let g = Self::with_velocity(algebra, base, z0, h0)?;
        let s2 = g.z0.norm_squared() + g.h0.norm_squared();
        if (s2 - 1.0).abs() > UNIT_SPEED_TOL {
            return Err(Error::Argument(format!(
                "initial velocity is not unit: ‖z0‖² + ‖h0‖² = {s2}"
            )));
        }
        Ok(Self { unit_speed: true, ..g })
    }

    pub fn from_identity(algebra: &'a StepTwoAlgebra, z0: DVector<f64>, h0: DVector<f64>) -> Result<Self> {
        Self::new(algebra, algebra.identity(), z0, h0)
    }

    /// Geodesic with arbitrary constant speed `‖(z₀, h₀)‖`.
    pub fn with_velocity(
        algebra: &'a StepTwoAlgebra,
        base: GroupPoint,
        z0: DVector<f64>,
        h0: DVector<f64>,
    ) -> Result<Self> {
        algebra.check_point(&base)?;
        algebra.check_vector(&AlgebraVector::new(z0.clone(), h0.clone()))?;
        let straight = if algebra.dim_z() == 0 || h0.iter().all(|x| *x == 0.0) {
            true
        } else {
            (algebra.j_action(&z0)? * &h0).norm() <= STRAIGHT_TOL
        };
        Ok(Self {
            algebra,
            base,
            z0,
            h0,
            unit_speed: false,
            straight,
            quad_tol: Z_QUAD_TOL,
            spectral: OnceLock::new(),
            blocks: OnceLock::new(),
        })
    }

    /// Geodesic through `base` with the given coordinate tangent vector,
    /// optionally rescaled to unit speed under the left-invariant metric.
    pub fn from_coordinate_tangent(
        algebra: &'a StepTwoAlgebra,
        base: GroupPoint,
        v: &AlgebraVector,
        normalize: bool,
    ) -> Result<Self> {
        algebra.check_point(&base)?;
        algebra.check_vector(v)?;
        let mut body = algebra.to_body(&base, v);
        if normalize {
            let n = body.norm();
            if n == 0.0 {
                return Err(Error::Argument("zero tangent vector".into()));
            }
            body = body.scale(1.0 / n);
        }
        let mut g = Self::with_velocity(algebra, base, body.z, body.h)?;
        g.unit_speed = normalize;
        Ok(g)
    }

    pub fn with_quad_tol(mut self, tol: f64) -> Self {
        self.quad_tol = tol;
        self
    }

    pub fn algebra(&self) -> &'a StepTwoAlgebra {
        self.algebra
    }

    pub fn base(&self) -> &GroupPoint {
        &self.base
    }

    pub fn z0(&self) -> &DVector<f64> {
        &self.z0
    }

    pub fn h0(&self) -> &DVector<f64> {
        &self.h0
    }

    pub fn is_unit_speed(&self) -> bool {
        self.unit_speed
    }

    pub fn speed(&self) -> f64 {
        (self.z0.norm_squared() + self.h0.norm_squared()).sqrt()
    }

    /// `J_{z₀} h₀ = 0`: the geodesic is the straight coordinate line
    /// `base · (t z₀, t h₀)`.
    pub fn is_straight(&self) -> bool {
        self.straight
    }

    pub fn based_at_identity(&self) -> bool {
        self.base.is_identity()
    }

    pub fn spectral(&self) -> &SpectralData {
        self.spectral.get_or_init(|| {
            spectral_decompose(self.algebra, &self.z0, &self.h0).expect("dimensions checked at construction")
        })
    }

    fn blocks(&self) -> &[Block] {
        self.blocks.get_or_init(|| {
            self.spectral()
                .blocks
                .iter()
                .map(|b| Block {
                    lambda: b.lambda,
                    u: b.u.as_slice().to_vec(),
                    w: b.w.as_ref().map(|w| w.as_slice().to_vec()),
                    a: b.a,
                    b: b.b,
                })
                .collect()
        })
    }

    fn h_into(&self, t: f64, out: &mut [f64]) {
        if self.straight {
            for (o, h) in out.iter_mut().zip(self.h0.iter()) {
                *o = t * h;
            }
            return;
        }
        out.iter_mut().for_each(|x| *x = 0.0);
        for b in self.blocks() {
            match &b.w {
                Some(w) => {
                    let (p, q) = phi_factors(b.lambda * t);
                    let (p, q) = (p * t, q * t);
                    let x = b.a * p - b.b * q;
                    let y = b.a * q + b.b * p;
                    for i in 0..out.len() {
                        out[i] += x * b.u[i] + y * w[i];
                    }
                }
                None => {
                    for i in 0..out.len() {
                        out[i] += t * b.a * b.u[i];
                    }
                }
            }
        }
    }

    fn h_dot_into(&self, t: f64, out: &mut [f64]) {
        if self.straight {
            out.copy_from_slice(self.h0.as_slice());
            return;
        }
        out.iter_mut().for_each(|x| *x = 0.0);
        for b in self.blocks() {
            match &b.w {
                Some(w) => {
                    let (s, c) = (b.lambda * t).sin_cos();
                    let x = b.a * c - b.b * s;
                    let y = b.a * s + b.b * c;
                    for i in 0..out.len() {
                        out[i] += x * b.u[i] + y * w[i];
                    }
                }
                None => {
                    for i in 0..out.len() {
                        out[i] += b.a * b.u[i];
                    }
                }
            }
        }
    }

    /// `h(t)` of the identity-based geodesic.
    pub fn h_at(&self, t: f64) -> DVector<f64> {
        let mut out = DVector::zeros(self.h0.len());
        self.h_into(t, out.as_mut_slice());
        out
    }

    /// `h′(t) = e^{tZ} h₀`.
    pub fn h_dot_at(&self, t: f64) -> DVector<f64> {
        let mut out = DVector::zeros(self.h0.len());
        self.h_dot_into(t, out.as_mut_slice());
        out
    }

    /// `z(t₁) − z(t₀)` of the identity-based geodesic.
    pub fn z_increment(&self, t0: f64, t1: f64) -> Result<DVector<f64>> {
        let dz = self.algebra.dim_z();
        let mut out = &self.z0 * (t1 - t0);
        if self.straight || t0 == t1 || dz == 0 {
            return Ok(out);
        }
        let lmax = self.blocks().iter().fold(0.0f64, |m, b| m.max(b.lambda.abs()));
        let panel = (1.0f64).min(1.0 / lmax.max(1e-300));
        let panels = (((t1 - t0).abs() / panel).ceil() as usize).clamp(1, 10_000);
        let opts = QuadOptions::abs(self.quad_tol).with_panels(panels);
        let n = self.h0.len();
        let mut h = vec![0.0; n];
        let mut hd = vec![0.0; n];
        let (integral, _) = integrate_vec(
            |s, dst| {
                self.h_into(s, &mut h);
                self.h_dot_into(s, &mut hd);
                self.algebra.bracket_into(&h, &hd, dst);
            },
            dz,
            t0,
            t1,
            &opts,
        )
        .map_err(|e| Error::Numeric(format!("z(t) quadrature on [{t0}, {t1}]: {e}")))?;
        for (o, v) in out.iter_mut().zip(integral) {
            *o += 0.5 * v;
        }
        Ok(out)
    }

    /// `z(t)` of the identity-based geodesic.
    pub fn z_at(&self, t: f64) -> Result<DVector<f64>> {
        self.z_increment(0.0, t)
    }

    /// `⟨z(t), z₀⟩` from the closed form
    /// `t‖z₀‖² + (t/2)‖h₀‖² + ½⟨h₀, (1 − e^{tZ})Z⁻¹h₀⟩`, evaluated per block.
    pub fn z0_component_closed_form(&self, t: f64) -> f64 {
        let mut s = t * self.z0.norm_squared() + 0.5 * t * self.h0.norm_squared();
        if self.straight {
            // (1 − e^{tZ})Z⁻¹h₀ = −t h₀ when Z h₀ = 0.
            return s - 0.5 * t * self.h0.norm_squared();
        }
        for b in self.blocks() {
            let sinc = phi_factors(b.lambda * t).0;
            s -= 0.5 * (b.a * b.a + b.b * b.b) * t * sinc;
        }
        s
    }

    /// Identity-based point `(z(t), h(t))`.
    pub fn local_at(&self, t: f64) -> Result<GroupPoint> {
        Ok(GroupPoint::new(self.z_at(t)?, self.h_at(t)))
    }

    pub fn evaluate(&self, t: f64) -> Result<GroupPoint> {
        let local = self.local_at(t)?;
        Ok(self.translate(&local))
    }

    fn translate(&self, local: &GroupPoint) -> GroupPoint {
        if self.base.is_identity() {
            local.clone()
        } else {
            self.algebra.multiply_unchecked(&self.base, local)
        }
    }

    /// Identity-based points at the given times. The z-integral is
    /// accumulated outward from `t = 0`, so nearby times share all but a short
    /// stretch of quadrature.
    pub fn local_trajectory(&self, ts: &[f64]) -> Result<Vec<GroupPoint>> {
        let mut order: Vec<usize> = (0..ts.len()).collect();
        order.sort_by(|&i, &j| ts[i].total_cmp(&ts[j]));
        let mut zs: Vec<Option<DVector<f64>>> = vec![None; ts.len()];
        let split = order.partition_point(|&i| ts[i] < 0.0);
        let mut cur_t = 0.0;
        let mut cur_z = DVector::zeros(self.algebra.dim_z());
        for &i in &order[split..] {
            cur_z += self.z_increment(cur_t, ts[i])?;
            cur_t = ts[i];
            zs[i] = Some(cur_z.clone());
        }
        cur_t = 0.0;
        cur_z = DVector::zeros(self.algebra.dim_z());
        for &i in order[..split].iter().rev() {
            cur_z += self.z_increment(cur_t, ts[i])?;
            cur_t = ts[i];
            zs[i] = Some(cur_z.clone());
        }
        Ok(ts
            .iter()
            .zip(zs)
            .map(|(&t, z)| GroupPoint::new(z.expect("every time visited"), self.h_at(t)))
            .collect())
    }

    pub fn trajectory(&self, ts: &[f64]) -> Result<Vec<GroupPoint>> {
        Ok(self
            .local_trajectory(ts)?
            .iter()
            .map(|p| self.translate(p))
            .collect())
    }

    /// Exact coordinate velocity `γ′(t)`.
    pub fn velocity_at(&self, t: f64) -> Result<AlgebraVector> {
        let h = self.h_at(t);
        let hd = self.h_dot_at(t);
        let br = self.algebra.bracket(&h, &hd)?;
        let local = AlgebraVector::new(&self.z0 + br * 0.5, hd);
        if self.base.is_identity() {
            return Ok(local);
        }
        // d/dt (p · q(t)) = (q′_z + ½[h_p, q′_h], q′_h)
        Ok(self.algebra.left_translate_tangent(&self.base, &local))
    }

    /// Straight-line form `γ(t) = a + t·b` in flattened coordinates, when
    /// [`GeodesicN::is_straight`] holds.
    pub fn as_line(&self) -> Option<(Vec<f64>, Vec<f64>)> {
        if !self.straight {
            return None;
        }
        let dir = self
            .algebra
            .left_translate_tangent(&self.base, &AlgebraVector::new(self.z0.clone(), self.h0.clone()));
        Some((self.base.coords.to_flat(), dir.to_flat()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::build_nq;
    use std::f64::consts::PI;

    fn worked_example(a: &StepTwoAlgebra) -> GeodesicN<'_> {
        let r = 1.0 / 2f64.sqrt();
        let z0: DVector<f64> = DVector::from_vec(vec![r, 0.0]);
        let mut h0 = DVector::zeros(6);
        h0[0] = r;
        GeodesicN::from_identity(a, z0, h0).unwrap()
    }

    #[test]
    fn rejects_non_unit_speed() {
        let a = build_nq(3).unwrap();
        let r = GeodesicN::from_identity(&a, DVector::from_vec(vec![1.0, 1.0]), DVector::zeros(6));
        assert!(matches!(r, Err(Error::Argument(_))));
    }

    #[test]
    fn central_and_horizontal_lines() {
        let a = build_nq(3).unwrap();
        let z0: DVector<f64> = DVector::from_vec(vec![0.6, 0.8]);
        let g = GeodesicN::from_identity(&a, z0.clone(), DVector::zeros(6)).unwrap();
        assert!(g.is_straight());
        assert_eq!(g.h_at(3.0), DVector::zeros(6));
        assert_eq!(g.z_at(3.0).unwrap(), &z0 * 3.0);

        let h0: DVector<f64> = DVector::from_vec(vec![0.5, 0.5, 0.5, 0.5, 0.0, 0.0]);
        let g = GeodesicN::from_identity(&a, DVector::zeros(2), h0.clone()).unwrap();
        assert_eq!(g.h_at(2.5), &h0 * 2.5);
        assert!(g.z_at(2.5).unwrap().amax() < 1e-15);
    }

    #[test]
    fn worked_n3_example() {
        let a = build_nq(3).unwrap();
        let g = worked_example(&a);
        assert!(!g.is_straight());
        let h = g.h_at(2.0 * PI);
        assert!(h[0].abs() < 1e-12);
        assert!((h[1] - 2.0 * 2f64.sqrt()).abs() < 1e-12);
        assert!(h.rows(2, 4).amax() < 1e-15);
        let zc = g.z0_component_closed_form(2.0 * PI);
        assert!((zc - 1.5 * PI).abs() < 1e-12);
        let zq = g.z_at(2.0 * PI).unwrap().dot(g.z0());
        assert!((zq - 1.5 * PI).abs() < 1e-9);
        // closed form 3t/4 − sin(t/2)/2 over a range of t
        for k in 0..20 {
            let t = 0.37 * k as f64;
            let expect = 0.75 * t - 0.5 * (t / 2.0).sin();
            assert!((g.z0_component_closed_form(t) - expect).abs() < 1e-13);
        }
    }

    #[test]
    fn h_dot_is_rotation_of_h0() {
        let a = build_nq(4).unwrap();
        let z0: DVector<f64> = DVector::from_vec(vec![0.3, -0.2, 0.4]);
        let h0: DVector<f64> = DVector::from_vec(vec![0.1, 0.2, -0.3, 0.4, 0.5, -0.1, 0.2, 0.3]);
        let n: f64 = (z0.norm_squared() + h0.norm_squared()).sqrt();
        let g = GeodesicN::from_identity(&a, z0 / n, h0 / n).unwrap();
        for k in 0..50 {
            let t = 0.2 * k as f64;
            assert!((g.h_dot_at(t).norm() - g.h0().norm()).abs() < 1e-12);
            // derivative of h matches h′ (central difference)
            let d = (g.h_at(t + 1e-5) - g.h_at(t - 1e-5)) / 2e-5;
            assert!((d - g.h_dot_at(t)).amax() < 1e-8);
        }
    }

    #[test]
    fn trajectory_matches_pointwise_evaluation() {
        let a = build_nq(3).unwrap();
        let g = worked_example(&a);
        let ts = [3.0, -1.0, 0.5, 0.0, -4.0, 7.5];
        let traj = g.trajectory(&ts).unwrap();
        for (t, p) in ts.iter().zip(&traj) {
            assert!(p.coord_distance(&g.evaluate(*t).unwrap()) < 1e-9);
        }
    }

    #[test]
    fn base_point_translation() {
        let a = build_nq(3).unwrap();
        let base = GroupPoint::from_slices(&[0.3, -0.1], &[0.2, 0.0, -0.5, 0.1, 0.0, 0.4]);
        let h0: DVector<f64> = DVector::from_vec(vec![0.0, 0.6, 0.0, 0.0, 0.8, 0.0]);
        let g = GeodesicN::new(&a, base.clone(), DVector::zeros(2), h0.clone()).unwrap();
        assert_eq!(g.evaluate(0.0).unwrap(), base);
        let p = g.evaluate(1.7).unwrap();
        let expect = a
            .bch_multiply(&base, &GroupPoint::new(DVector::zeros(2), &h0 * 1.7))
            .unwrap();
        assert!(p.coord_distance(&expect) < 1e-15);
    }

    #[test]
    fn velocity_matches_finite_differences() {
        let a = build_nq(3).unwrap();
        let base = GroupPoint::from_slices(&[0.3, -0.1], &[0.2, 0.0, -0.5, 0.1, 0.0, 0.4]);
        let z0: DVector<f64> = DVector::from_vec(vec![0.4, -0.3]);
        let h0: DVector<f64> = DVector::from_vec(vec![0.5, 0.1, -0.4, 0.3, 0.2, -0.1]);
        let n: f64 = (z0.norm_squared() + h0.norm_squared()).sqrt();
        let g = GeodesicN::new(&a, base, z0 / n, h0 / n).unwrap();
        for t in [0.0, 0.8, 2.3, -1.1] {
            let pts = g.trajectory(&[t - 1e-5, t + 1e-5]).unwrap();
            let fd = pts[1].coords.sub(&pts[0].coords).scale(1.0 / 2e-5);
            let v = g.velocity_at(t).unwrap();
            assert!(fd.sub(&v).norm() < 1e-7, "t = {t}");
            let at = g.evaluate(t).unwrap();
            assert!((a.metric_at(&at, &v, &v).unwrap() - 1.0).abs() < 1e-12);
        }
    }
}
