//! Radon's inversion `f(x) = −(1/π)∫₀^∞ F_x′(t)/t dt`, where `F_x(t)` is the
//! mean of the X-ray transform over lines at distance `t` from `x`.
//!
//! `F_x` is even in `t`, so it is sampled on a uniform grid, extended evenly
//! across 0 and differentiated with fourth-order central differences. The
//! integrand `F_x′(t)/t` is then smooth, even and compactly supported, and the
//! trapezoid rule on it converges faster than any power of the step.

use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::radon::{LineOracle, LineR2};

#[derive(Debug, Clone, Serialize)]
pub struct RadialProfile {
    pub center: [f64; 2],
    pub ts: Vec<f64>,
    pub values: Vec<f64>,
}

/// `F_x(t) = (1/2π)∫ Xf(x + tθ^⊥, θ) dθ` with `(a, b)^⊥ = (b, −a)`, by the
/// trapezoid rule on `n_dirs` equally spaced directions.
pub fn mean_line_value<O: LineOracle + ?Sized>(oracle: &O, x: [f64; 2], t: f64, n_dirs: usize) -> Result<f64> {
    if n_dirs < 4 {
        return Err(Error::Argument(format!("mean_line_value needs n_dirs >= 4, got {n_dirs}")));
    }
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::Argument(format!("mean_line_value needs finite t >= 0, got {t}")));
    }
    let mut sum = 0.0;
    for k in 0..n_dirs {
        let phi = 2.0 * PI * k as f64 / n_dirs as f64;
        // Line x + tθ^⊥ + ℝθ: its normal θ^⊥ sits at angle φ − π/2.
        let (s, c) = phi.sin_cos();
        let offset = x[0] * s - x[1] * c + t;
        sum += oracle.line_value(&LineR2::from_normal_angle(phi - 0.5 * PI, offset))?;
    }
    Ok(sum / n_dirs as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct InversionOptions {
    /// The oracle must vanish on lines farther than this from `x`.
    pub t_max: f64,
    /// Number of `t`-steps on `[0, t_max]`.
    pub grid: usize,
    pub n_dirs: usize,
    /// `|F_x(t_max)|` above this sets [`Inversion::tail_warning`].
    pub tail_tol: f64,
}

impl InversionOptions {
    pub fn new(t_max: f64, grid: usize) -> Self {
        Self {
            t_max,
            grid,
            n_dirs: 360,
            tail_tol: 1e-8,
        }
    }

    pub fn with_dirs(mut self, n_dirs: usize) -> Self {
        self.n_dirs = n_dirs;
        self
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Inversion {
    pub value: f64,
    pub profile: RadialProfile,
    /// `F_x(t_max)`; should be zero if `t_max` covers the support.
    pub tail: f64,
    pub tail_warning: bool,
}

/// Evaluate the inversion formula given samples `F(kh)`, `k = 0..=n+2`, of an
/// even profile; `weight(t)` is `t` in the plane and `sinh t` in `ℍ²`.
pub(crate) fn invert_profile(values: &[f64], h: f64, weight: impl Fn(f64) -> f64) -> f64 {
    let n = values.len() - 3;
    let at = |k: isize| values[k.unsigned_abs()];
    // F''(0) from the even extension.
    let g0 = (-2.0 * at(2) + 32.0 * at(1) - 30.0 * at(0)) / (12.0 * h * h);
    let mut sum = 0.5 * g0;
    for k in 1..=n as isize {
        let d = (-at(k + 2) + 8.0 * at(k + 1) - 8.0 * at(k - 1) + at(k - 2)) / (12.0 * h);
        let g = d / weight(h * k as f64);
        sum += if k as usize == n { 0.5 * g } else { g };
    }
    -sum * h / PI
}

pub(crate) fn check_options(opts: &InversionOptions) -> Result<()> {
    if !(opts.t_max > 0.0 && opts.t_max.is_finite()) {
        return Err(Error::Argument(format!("t_max must be positive, got {}", opts.t_max)));
    }
    if opts.grid < 4 {
        return Err(Error::Argument(format!("inversion grid must be >= 4, got {}", opts.grid)));
    }
    Ok(())
}

pub fn radon_invert_with<O: LineOracle + ?Sized>(oracle: &O, x: [f64; 2], opts: &InversionOptions) -> Result<Inversion> {
    check_options(opts)?;
    let h = opts.t_max / opts.grid as f64;
    let ts: Vec<f64> = (0..opts.grid + 3).map(|k| h * k as f64).collect();
    let values = ts
        .iter()
        .map(|&t| mean_line_value(oracle, x, t, opts.n_dirs))
        .collect::<Result<Vec<f64>>>()?;
    let value = invert_profile(&values, h, |t| t);
    if !value.is_finite() {
        return Err(Error::Numeric(format!("inversion at {x:?} produced {value}")));
    }
    let tail = values[opts.grid];
    Ok(Inversion {
        value,
        tail,
        tail_warning: tail.abs() > opts.tail_tol,
        profile: RadialProfile { center: x, ts, values },
    })
}

/// Reconstruct `f(x)` from line values; see [`radon_invert_with`].
pub fn radon_invert<O: LineOracle + ?Sized>(oracle: &O, x: [f64; 2], t_max: f64, grid: usize) -> Result<f64> {
    Ok(radon_invert_with(oracle, x, &InversionOptions::new(t_max, grid))?.value)
}
