use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::radon::ScalarField2D;

/// Absolute tolerance of planar line integrals.
pub const LINE_TOL: f64 = 1e-9;

/// An unoriented line `{x : ⟨x, (cos θ, sin θ)⟩ = p}` with `θ ∈ [0, π)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LineR2 {
    pub theta: f64,
    pub p: f64,
}

impl LineR2 {
    pub fn new(theta: f64, p: f64) -> Result<Self> {
        if !(theta.is_finite() && p.is_finite()) || !(0.0..PI).contains(&theta) {
            return Err(Error::Argument(format!("line needs theta in [0, pi) and finite p, got ({theta}, {p})")));
        }
        Ok(Self { theta, p })
    }

    /// Canonical form of the line with unit normal at angle `alpha` (any real)
    /// and offset `p` along that normal.
    pub fn from_normal_angle(alpha: f64, p: f64) -> Self {
        let k = (alpha / PI).floor();
        let mut theta = alpha - k * PI;
        if theta >= PI {
            theta -= PI;
        }
        if theta < 0.0 {
            theta = 0.0;
        }
        let p = if (k as i64).rem_euclid(2) == 1 { -p } else { p };
        Self { theta, p }
    }

    /// Line through `x` with direction `u` (`u ≠ 0`).
    pub fn through(x: [f64; 2], u: [f64; 2]) -> Result<Self> {
        let len = u[0].hypot(u[1]);
        if !(len > 0.0 && len.is_finite()) {
            return Err(Error::Argument("line direction must be non-zero".into()));
        }
        let n = [u[1] / len, -u[0] / len];
        Ok(Self::from_normal_angle(n[1].atan2(n[0]), x[0] * n[0] + x[1] * n[1]))
    }

    pub fn normal(&self) -> [f64; 2] {
        [self.theta.cos(), self.theta.sin()]
    }

    /// Unit direction `(−sin θ, cos θ)`.
    pub fn direction(&self) -> [f64; 2] {
        [-self.theta.sin(), self.theta.cos()]
    }

    /// `p − ⟨x, ω⟩`: `x + d·ω` is the foot of the perpendicular from `x`.
    pub fn signed_distance(&self, x: [f64; 2]) -> f64 {
        let n = self.normal();
        self.p - (x[0] * n[0] + x[1] * n[1])
    }

    pub fn distance_to_origin(&self) -> f64 {
        self.p.abs()
    }

    /// `p·ω + s·τ`.
    pub fn point_at(&self, s: f64) -> [f64; 2] {
        let (n, t) = (self.normal(), self.direction());
        [self.p * n[0] + s * t[0], self.p * n[1] + s * t[1]]
    }
}

/// Anything that assigns a value to planar lines.
pub trait LineOracle: Sync {
    fn line_value(&self, line: &LineR2) -> Result<f64>;
}

impl<F: Fn(&LineR2) -> Result<f64> + Sync> LineOracle for F {
    fn line_value(&self, line: &LineR2) -> Result<f64> {
        self(line)
    }
}

/// Exact X-ray transform of a field, by quadrature.
pub struct FieldOracle<'a, F: ?Sized> {
    pub field: &'a F,
    pub tol: f64,
}

impl<'a, F: ScalarField2D + ?Sized> FieldOracle<'a, F> {
    pub fn new(field: &'a F) -> Self {
        Self { field, tol: LINE_TOL }
    }
}

impl<F: ScalarField2D + ?Sized> LineOracle for FieldOracle<'_, F> {
    fn line_value(&self, line: &LineR2) -> Result<f64> {
        self.field.line_integral(line, self.tol)
    }
}

pub fn xray_line_integral<F: ScalarField2D + ?Sized>(f: &F, line: &LineR2) -> Result<f64> {
    f.line_integral(line, LINE_TOL)
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SinogramMeta {
    pub field_id: String,
    pub quad_tol: f64,
}

/// Line integrals on an `(θ, p)` grid, stored θ-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Sinogram {
    pub thetas: Vec<f64>,
    pub offsets: Vec<f64>,
    pub values: Vec<f64>,
    pub meta: SinogramMeta,
}

/// `n` angles `kπ/n`.
pub fn theta_grid(n: usize) -> Vec<f64> {
    (0..n).map(|k| PI * k as f64 / n as f64).collect()
}

/// `n ≥ 2` equispaced offsets on `[−p_max, p_max]`.
pub fn offset_grid(n: usize, p_max: f64) -> Vec<f64> {
    let step = 2.0 * p_max / (n - 1) as f64;
    (0..n)
        .map(|k| if k + 1 == n { p_max } else { -p_max + step * k as f64 })
        .collect()
}

fn catmull_rom(f0: f64, f1: f64, f2: f64, f3: f64, u: f64) -> f64 {
    0.5 * (2.0 * f1
        + u * ((f2 - f0) + u * ((2.0 * f0 - 5.0 * f1 + 4.0 * f2 - f3) + u * (3.0 * (f1 - f2) + f3 - f0))))
}

impl Sinogram {
    pub fn new(thetas: Vec<f64>, offsets: Vec<f64>, values: Vec<f64>, meta: SinogramMeta) -> Result<Self> {
        if thetas.is_empty() || offsets.len() < 2 {
            return Err(Error::Argument("sinogram needs at least one angle and two offsets".into()));
        }
        if values.len() != thetas.len() * offsets.len() {
            return Err(Error::Dimension {
                what: "sinogram values",
                expected: thetas.len() * offsets.len(),
                got: values.len(),
            });
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::Numeric(format!("sinogram contains non-finite value {v}")));
        }
        Ok(Self {
            thetas,
            offsets,
            values,
            meta,
        })
    }

    pub fn n_theta(&self) -> usize {
        self.thetas.len()
    }

    pub fn n_offsets(&self) -> usize {
        self.offsets.len()
    }

    pub fn get(&self, i_theta: usize, i_p: usize) -> f64 {
        self.values[i_theta * self.offsets.len() + i_p]
    }

    pub fn row(&self, i_theta: usize) -> &[f64] {
        let n = self.offsets.len();
        &self.values[i_theta * n..(i_theta + 1) * n]
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// True when the grids are those of [`theta_grid`] and [`offset_grid`],
    /// which [`LineOracle`] interpolation requires.
    pub fn is_uniform(&self) -> bool {
        let n = self.thetas.len();
        let dt = PI / n as f64;
        let thetas_ok = self
            .thetas
            .iter()
            .enumerate()
            .all(|(k, t)| (t - dt * k as f64).abs() <= 1e-12);
        let np = self.offsets.len();
        let dp = (self.offsets[np - 1] - self.offsets[0]) / (np - 1) as f64;
        let offsets_ok = dp > 0.0
            && self
                .offsets
                .iter()
                .enumerate()
                .all(|(k, p)| (p - (self.offsets[0] + dp * k as f64)).abs() <= 1e-12 * (1.0 + p.abs()));
        thetas_ok && offsets_ok
    }

    fn row_value(&self, j: usize, p: f64) -> f64 {
        let np = self.offsets.len();
        let p0 = self.offsets[0];
        let dp = (self.offsets[np - 1] - p0) / (np - 1) as f64;
        let x = (p - p0) / dp;
        let i = x.floor();
        if i < -1.0 || i > np as f64 - 1.0 {
            return 0.0;
        }
        let i = i as isize;
        let u = x - i as f64;
        let row = self.row(j);
        let at = |k: isize| if k >= 0 && (k as usize) < np { row[k as usize] } else { 0.0 };
        catmull_rom(at(i - 1), at(i), at(i + 1), at(i + 2), u)
    }

    /// Linear interpolation in θ (wrapping `θ + π ≡ (θ, −p)`), cubic
    /// Catmull–Rom in `p`, zero outside the offset range.
    pub fn interpolate(&self, line: &LineR2) -> f64 {
        let n = self.thetas.len();
        let x = line.theta / (PI / n as f64);
        let j = (x.floor() as usize).min(n - 1);
        let u = x - j as f64;
        let v0 = self.row_value(j, line.p);
        if u == 0.0 {
            return v0;
        }
        let v1 = if j + 1 == n {
            self.row_value(0, -line.p)
        } else {
            self.row_value(j + 1, line.p)
        };
        (1.0 - u) * v0 + u * v1
    }

    /// Interpolating line oracle; fails if the grids are not uniform.
    pub fn oracle(&self) -> Result<SinogramOracle<'_>> {
        if !self.is_uniform() {
            return Err(Error::Argument(
                "interpolation needs theta = k*pi/n and equispaced offsets".into(),
            ));
        }
        Ok(SinogramOracle { sinogram: self })
    }
}

pub struct SinogramOracle<'a> {
    sinogram: &'a Sinogram,
}

impl LineOracle for SinogramOracle<'_> {
    fn line_value(&self, line: &LineR2) -> Result<f64> {
        Ok(self.sinogram.interpolate(line))
    }
}

/// Sample `oracle` on every `(θ, p)` of the grid.
pub fn sample_sinogram<O: LineOracle + ?Sized>(oracle: &O, thetas: &[f64], offsets: &[f64]) -> Result<Sinogram> {
    let rows: Vec<Vec<f64>> = thetas
        .par_iter()
        .map(|&theta| {
            offsets
                .iter()
                .map(|&p| {
                    oracle.line_value(&LineR2::new(theta, p)?).map_err(|e| match e {
                        Error::Numeric(m) => Error::Numeric(format!("cell (theta {theta}, p {p}): {m}")),
                        other => other,
                    })
                })
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<_>>()?;
    Sinogram::new(thetas.to_vec(), offsets.to_vec(), rows.concat(), SinogramMeta::default())
}

pub fn radon_forward<F: ScalarField2D + ?Sized>(f: &F, thetas: &[f64], offsets: &[f64]) -> Result<Sinogram> {
    let mut s = sample_sinogram(&FieldOracle::new(f), thetas, offsets)?;
    s.meta.quad_tol = LINE_TOL;
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::radon::{FnField, Phantom2D, PhantomBump};

    #[test]
    fn canonical_form() {
        let l = LineR2::from_normal_angle(PI + 0.3, 0.7);
        assert!((l.theta - 0.3).abs() < 1e-15 && l.p == -0.7);
        let l = LineR2::from_normal_angle(-0.3, 0.7);
        assert!((l.theta - (PI - 0.3)).abs() < 1e-15 && l.p == -0.7);
        let l = LineR2::from_normal_angle(2.0 * PI + 0.3, 0.7);
        assert!(l.p == 0.7);
        assert!(LineR2::new(PI, 0.0).is_err());
        let l = LineR2::through([1.0, 2.0], [1.0, 1.0]).unwrap();
        assert!(l.signed_distance([1.0, 2.0]).abs() < 1e-15);
        assert!(l.signed_distance([3.0, 4.0]).abs() < 1e-15);
        assert!((l.distance_to_origin() - 0.5f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn gaussian_line_integrals() {
        let g = Phantom2D::gaussian();
        for (d, want) in [(0.0, PI.sqrt()), (1.0, PI.sqrt() * (-1f64).exp())] {
            let v = xray_line_integral(&g, &LineR2::new(0.4, d).unwrap()).unwrap();
            assert!((v - want).abs() < 1e-9);
        }
    }

    #[test]
    fn disk_indicator_chords() {
        let disk = FnField::new([0.0, 0.0], 1.0, |_| 1.0);
        for p in [0.0, 0.3, -0.8] {
            let v = xray_line_integral(&disk, &LineR2::new(1.0, p).unwrap()).unwrap();
            assert!((v - 2.0 * (1.0 - p * p).sqrt()).abs() < 1e-9);
        }
        assert_eq!(xray_line_integral(&disk, &LineR2::new(1.0, 1.0).unwrap()).unwrap(), 0.0);
    }

    #[test]
    fn both_normal_forms_agree() {
        let f = Phantom2D::new(vec![
            PhantomBump::bump([0.2, 0.3], 1.0, 0.5),
            PhantomBump::bump([-0.3, 0.0], -0.5, 0.4),
        ])
        .unwrap();
        for (t, p) in [(0.3, 0.2), (1.2, -0.1), (2.5, 0.4)] {
            let a = xray_line_integral(&f, &LineR2::new(t, p).unwrap()).unwrap();
            let b = xray_line_integral(&f, &LineR2::from_normal_angle(t + PI, -p)).unwrap();
            assert!((a - b).abs() < 1e-15);
            let generic = FnField::new([0.0, 0.0], 1.0, |x| f.value(x));
            let l = LineR2::new(t, p).unwrap();
            let c = generic.line_integral(&l, 1e-11).unwrap();
            assert!((a - c).abs() < 1e-9);
        }
    }

    #[test]
    fn sinogram_interpolation_reproduces_nodes_and_smooth_data() {
        let f = Phantom2D::new(vec![PhantomBump::bump([0.3, -0.2], 1.0, 0.6)]).unwrap();
        let s = radon_forward(&f, &theta_grid(90), &offset_grid(201, 1.0)).unwrap();
        let o = s.oracle().unwrap();
        let node = LineR2::new(s.thetas[7], s.offsets[50]).unwrap();
        assert_eq!(o.line_value(&node).unwrap(), s.get(7, 50));
        let mut worst: f64 = 0.0;
        for k in 0..50 {
            let l = LineR2::new(PI * (k as f64 + 0.37) / 50.0, -0.9 + 0.036 * k as f64).unwrap();
            worst = worst.max((o.line_value(&l).unwrap() - xray_line_integral(&f, &l).unwrap()).abs());
        }
        assert!(worst < 2e-3, "{worst}");
        assert_eq!(o.line_value(&LineR2::new(0.1, 3.0).unwrap()).unwrap(), 0.0);
    }

    #[test]
    fn radial_field_has_identical_rows() {
        let f = Phantom2D::single(PhantomBump::bump([0.0, 0.0], 1.0, 0.8)).unwrap();
        let s = radon_forward(&f, &theta_grid(8), &offset_grid(33, 1.0)).unwrap();
        for j in 1..8 {
            for i in 0..33 {
                assert!((s.get(j, i) - s.get(0, i)).abs() < 1e-9);
            }
        }
    }
}
