//! Numerical check of the planar support theorem: a field supported in `B_R`
//! has vanishing transform on lines with `|p| > R`, and the inversion formula
//! applied to that transform returns zero outside `B_R`.

use std::f64::consts::PI;

use serde::Serialize;

use crate::error::Result;
use crate::radon::{radon_invert_with, FieldOracle, InversionOptions, LineR2, ScalarField2D, LINE_TOL};

#[derive(Debug, Clone, Copy, Serialize)]
pub struct SupportOptions {
    pub n_line_angles: usize,
    pub n_line_offsets: usize,
    /// Largest sampled `|p|`, as a multiple of `R`.
    pub line_extent: f64,
    pub n_points: usize,
    pub grid: usize,
    pub n_dirs: usize,
    pub line_tol: f64,
    pub point_tol: f64,
}

impl Default for SupportOptions {
    fn default() -> Self {
        Self {
            n_line_angles: 36,
            n_line_offsets: 20,
            line_extent: 3.0,
            n_points: 50,
            grid: 200,
            n_dirs: 1440,
            line_tol: 1e-12,
            point_tol: 1e-6,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SupportReport {
    pub radius: f64,
    pub lines_checked: usize,
    pub max_abs_line: f64,
    /// `(θ, p, value)` of lines above `line_tol`.
    pub line_violations: Vec<(f64, f64, f64)>,
    pub points_checked: usize,
    pub max_abs_reconstruction: f64,
    pub point_violations: Vec<([f64; 2], f64)>,
}

impl SupportReport {
    pub fn passed(&self) -> bool {
        self.line_violations.is_empty() && self.point_violations.is_empty()
    }
}

/// Lines at `|p| ∈ (R, line_extent·R]` and points at `|x| ∈ (R, 2R]`.
pub fn support_harness<F: ScalarField2D + ?Sized>(f: &F, radius: f64, opts: &SupportOptions) -> Result<SupportReport> {
    let mut report = SupportReport {
        radius,
        lines_checked: 0,
        max_abs_line: 0.0,
        line_violations: Vec::new(),
        points_checked: 0,
        max_abs_reconstruction: 0.0,
        point_violations: Vec::new(),
    };
    for j in 0..opts.n_line_angles {
        let theta = PI * j as f64 / opts.n_line_angles as f64;
        for k in 0..opts.n_line_offsets {
            let frac = (k + 1) as f64 / opts.n_line_offsets as f64;
            let p = radius * (1.0 + (opts.line_extent - 1.0) * frac);
            for p in [p, -p] {
                let v = f.line_integral(&LineR2::new(theta, p)?, LINE_TOL)?;
                report.lines_checked += 1;
                report.max_abs_line = report.max_abs_line.max(v.abs());
                if v.abs() > opts.line_tol {
                    report.line_violations.push((theta, p, v));
                }
            }
        }
    }

    // The full transform: it vanishes for |p| > R, but the mean values at x
    // still see the lines through the support, so zero is not automatic.
    let oracle = FieldOracle::new(f);
    let golden = PI * (3.0 - 5f64.sqrt());
    for k in 0..opts.n_points {
        let r = radius * (1.0 + (k + 1) as f64 / opts.n_points as f64);
        let a = golden * k as f64;
        let x = [r * a.cos(), r * a.sin()];
        let inv_opts = InversionOptions {
            t_max: r + radius,
            grid: opts.grid,
            n_dirs: opts.n_dirs,
            tail_tol: 1e-8,
        };
        let v = radon_invert_with(&oracle, x, &inv_opts)?.value;
        report.points_checked += 1;
        report.max_abs_reconstruction = report.max_abs_reconstruction.max(v.abs());
        if v.abs() > opts.point_tol {
            report.point_violations.push((x, v));
        }
    }
    Ok(report)
}
