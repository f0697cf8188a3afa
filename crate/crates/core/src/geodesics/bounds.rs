use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::geodesics::GeodesicN;

/// Violations are counted only below `bound − ESCAPE_SLACK`.
pub const ESCAPE_SLACK: f64 = 1e-9;

/// `(π − 2) / (4 dim h)`: every unit geodesic from `e` satisfies
/// `‖Log γ(t)‖² ≥ t² · master_constant`.
pub fn master_constant(dim_h: usize) -> f64 {
    (PI - 2.0) / (4.0 * dim_h as f64)
}

/// Which branch of the lower-bound argument applies to a `(geodesic, t)` sample.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum EscapeCase {
    /// `‖z₀‖² ≥ ½`: bound `t²/2`.
    CentralHeavy,
    /// Dominant block of `h₀` in the kernel of `Z`: bound `t²/(2 dim h)`.
    KernelDominant,
    /// `0 ≤ t ≤ π/(2|λ|)`: bound `t²/(2 dim h)`.
    Early,
    /// `t > π/(2|λ|)`: bound `(π − 2)t²/(4 dim h)`.
    Late,
}

impl EscapeCase {
    pub fn tag(self) -> &'static str {
        match self {
            EscapeCase::CentralHeavy => "a",
            EscapeCase::KernelDominant => "b",
            EscapeCase::Early => "c",
            EscapeCase::Late => "d",
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct EscapeRow {
    pub t: f64,
    pub lhs_norm_sq: f64,
    /// Master bound `t²(π − 2)/(4 dim h)`.
    pub bound: f64,
    pub margin: f64,
    pub case: EscapeCase,
    pub case_bound: f64,
    pub case_margin: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct EscapeReport {
    pub rows: Vec<EscapeRow>,
    pub violations: usize,
}

impl EscapeReport {
    pub fn min_margin(&self) -> f64 {
        self.rows.iter().map(|r| r.margin).fold(f64::INFINITY, f64::min)
    }

    pub fn min_case_margin(&self) -> f64 {
        self.rows.iter().map(|r| r.case_margin).fold(f64::INFINITY, f64::min)
    }
}

/// Branch and its `t²` coefficient for a unit geodesic at time `t ≥ 0`.
pub fn classify(g: &GeodesicN<'_>, t: f64) -> (EscapeCase, f64) {
    let dim_h = g.algebra().dim_h() as f64;
    if g.z0().norm_squared() >= 0.5 {
        return (EscapeCase::CentralHeavy, 0.5);
    }
    let lambda = g.spectral().dominant_block().lambda.abs();
    if lambda <= 1e-12 {
        (EscapeCase::KernelDominant, 1.0 / (2.0 * dim_h))
    } else if t <= PI / (2.0 * lambda) {
        (EscapeCase::Early, 1.0 / (2.0 * dim_h))
    } else {
        (EscapeCase::Late, (PI - 2.0) / (4.0 * dim_h))
    }
}

/// Check `‖z(t) + h(t)‖² ≥ t²(π − 2)/(4 dim h)` and the applicable case bound
/// on each time of `t_grid`.
pub fn escape_bound_check(g: &GeodesicN<'_>, t_grid: &[f64]) -> Result<EscapeReport> {
    if !g.is_unit_speed() {
        return Err(Error::Argument("escape_bound_check needs a unit-speed geodesic".into()));
    }
    if !g.based_at_identity() {
        return Err(Error::Argument("escape_bound_check needs a geodesic based at the identity".into()));
    }
    if let Some(t) = t_grid.iter().find(|t| **t < 0.0 || !t.is_finite()) {
        return Err(Error::Argument(format!("escape times must be finite and non-negative, got {t}")));
    }
    let master = master_constant(g.algebra().dim_h());
    let points = g.local_trajectory(t_grid)?;
    let mut violations = 0;
    let rows = t_grid
        .iter()
        .zip(points)
        .map(|(&t, p)| {
            let lhs = p.coords.norm_squared();
            let bound = master * t * t;
            let (case, c) = classify(g, t);
            let case_bound = c * t * t;
            let row = EscapeRow {
                t,
                lhs_norm_sq: lhs,
                bound,
                margin: lhs - bound,
                case,
                case_bound,
                case_margin: lhs - case_bound,
            };
            if row.margin < -ESCAPE_SLACK || row.case_margin < -ESCAPE_SLACK {
                violations += 1;
            }
            row
        })
        .collect();
    Ok(EscapeReport { rows, violations })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::build_nq;
    use nalgebra::DVector;

    #[test]
    fn master_constants() {
        assert!((master_constant(6) - 0.047_566_360_566_241_38).abs() < 1e-15);
        assert!((master_constant(8) - 0.035_674_770_424_681_035).abs() < 1e-15);
    }

    #[test]
    fn central_geodesic_has_norm_t() {
        let a = build_nq(3).unwrap();
        let g = GeodesicN::from_identity(&a, DVector::from_vec(vec![0.0, 1.0]), DVector::zeros(6)).unwrap();
        let ts: Vec<f64> = (1..=10).map(|k| k as f64).collect();
        let rep = escape_bound_check(&g, &ts).unwrap();
        assert_eq!(rep.violations, 0);
        for r in &rep.rows {
            assert_eq!(r.case, EscapeCase::CentralHeavy);
            assert!((r.lhs_norm_sq - r.t * r.t).abs() < 1e-12);
        }
    }

    #[test]
    fn cases_are_classified() {
        let a = build_nq(3).unwrap();
        // z0 along the first torus vector kills the third complex coordinate.
        let s = 0.5f64.sqrt() * 0.6;
        let mut h0 = DVector::zeros(6);
        h0[4] = (1.0 - s * s).sqrt();
        let g = GeodesicN::from_identity(&a, DVector::from_vec(vec![s, 0.0]), h0).unwrap();
        assert_eq!(classify(&g, 3.0).0, EscapeCase::KernelDominant);

        let mut h0 = DVector::zeros(6);
        h0[0] = (1.0 - s * s).sqrt();
        let g = GeodesicN::from_identity(&a, DVector::from_vec(vec![s, 0.0]), h0).unwrap();
        let lambda = g.spectral().dominant_block().lambda.abs();
        let edge = PI / (2.0 * lambda);
        assert_eq!(classify(&g, 0.5 * edge).0, EscapeCase::Early);
        assert_eq!(classify(&g, 1.5 * edge).0, EscapeCase::Late);
        let rep = escape_bound_check(&g, &[0.5 * edge, edge, 1.5 * edge, 40.0]).unwrap();
        assert_eq!(rep.violations, 0);
    }

    #[test]
    fn rejects_bad_input() {
        let a = build_nq(3).unwrap();
        let g = GeodesicN::with_velocity(&a, a.identity(), DVector::from_vec(vec![2.0, 0.0]), DVector::zeros(6))
            .unwrap();
        assert!(escape_bound_check(&g, &[1.0]).is_err());
        let g = GeodesicN::from_identity(&a, DVector::from_vec(vec![1.0, 0.0]), DVector::zeros(6)).unwrap();
        assert!(escape_bound_check(&g, &[-1.0]).is_err());
    }
}
