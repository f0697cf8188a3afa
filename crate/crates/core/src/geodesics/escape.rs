//! Scalar radius functions: escape functions, the product escape formula and
//! the σ-radius `σ(r) = sup{s ≥ 0 | P(s) ≤ μ(r)}`.

use std::f64::consts::{FRAC_PI_2, PI};

use serde::{Deserialize, Serialize};

use crate::algebra::StepTwoAlgebra;
use crate::error::{Error, Result};

/// Bisection tolerance for [`sigma_from_escape`].
pub const SIGMA_TOL: f64 = 1e-10;

/// A non-decreasing function on `[0, ∞)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MonotoneFunction {
    Identity,
    Linear { slope: f64 },
    /// Linear interpolation through `(xs, ys)`, constant below `xs[0]` and
    /// continued with the last slope beyond `xs[n-1]`.
    PiecewiseLinear { xs: Vec<f64>, ys: Vec<f64> },
    /// Left-continuous step function: `values[k]` where `k` counts the jumps
    /// strictly below `x`. `values.len() == jumps.len() + 1`.
    Staircase { jumps: Vec<f64>, values: Vec<f64> },
    Scaled { inner: Box<MonotoneFunction>, factor: f64 },
}

fn non_decreasing(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[0] <= w[1])
}

fn strictly_increasing(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[0] < w[1])
}

impl MonotoneFunction {
    pub fn linear(slope: f64) -> Result<Self> {
        let f = MonotoneFunction::Linear { slope };
        f.validate()?;
        Ok(f)
    }

    pub fn piecewise_linear(xs: Vec<f64>, ys: Vec<f64>) -> Result<Self> {
        let f = MonotoneFunction::PiecewiseLinear { xs, ys };
        f.validate()?;
        Ok(f)
    }

    pub fn staircase(jumps: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        let f = MonotoneFunction::Staircase { jumps, values };
        f.validate()?;
        Ok(f)
    }

    pub fn scaled(inner: MonotoneFunction, factor: f64) -> Result<Self> {
        let f = MonotoneFunction::Scaled {
            inner: Box::new(inner),
            factor,
        };
        f.validate()?;
        Ok(f)
    }

    /// Check finiteness and monotonicity (needed after deserialization).
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::Argument(format!("monotone function: {msg}")));
        match self {
            MonotoneFunction::Identity => Ok(()),
            MonotoneFunction::Linear { slope } => {
                if slope.is_finite() && *slope >= 0.0 {
                    Ok(())
                } else {
                    bad(&format!("slope must be finite and non-negative, got {slope}"))
                }
            }
            MonotoneFunction::PiecewiseLinear { xs, ys } => {
                if xs.is_empty() || xs.len() != ys.len() {
                    return bad("xs and ys must be non-empty and of equal length");
                }
                if xs.iter().chain(ys).any(|v| !v.is_finite()) {
                    return bad("samples must be finite");
                }
                if !strictly_increasing(xs) {
                    return bad("xs must be strictly increasing");
                }
                if !non_decreasing(ys) {
                    return bad("ys must be non-decreasing");
                }
                Ok(())
            }
            MonotoneFunction::Staircase { jumps, values } => {
                if values.len() != jumps.len() + 1 {
                    return bad("values must have one more entry than jumps");
                }
                if jumps.iter().chain(values).any(|v| !v.is_finite()) {
                    return bad("samples must be finite");
                }
                if !strictly_increasing(jumps) {
                    return bad("jumps must be strictly increasing");
                }
                if !non_decreasing(values) {
                    return bad("values must be non-decreasing");
                }
                Ok(())
            }
            MonotoneFunction::Scaled { inner, factor } => {
                if !(factor.is_finite() && *factor >= 0.0) {
                    return bad(&format!("scale factor must be finite and non-negative, got {factor}"));
                }
                inner.validate()
            }
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        match self {
            MonotoneFunction::Identity => x,
            MonotoneFunction::Linear { slope } => slope * x,
            MonotoneFunction::PiecewiseLinear { xs, ys } => {
                let n = xs.len();
                if n == 1 || x <= xs[0] {
                    return ys[0];
                }
                let k = xs.partition_point(|&v| v <= x).clamp(1, n - 1);
                let (x0, x1, y0, y1) = (xs[k - 1], xs[k], ys[k - 1], ys[k]);
                y0 + (y1 - y0) * (x - x0) / (x1 - x0)
            }
            MonotoneFunction::Staircase { jumps, values } => values[jumps.partition_point(|&j| j < x)],
            MonotoneFunction::Scaled { inner, factor } => factor * inner.eval(x),
        }
    }

    pub fn is_continuous(&self) -> bool {
        match self {
            MonotoneFunction::Staircase { values, .. } => values.windows(2).all(|w| w[0] == w[1]),
            MonotoneFunction::Scaled { inner, .. } => inner.is_continuous(),
            _ => true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum EscapeKind {
    Linear { slope: f64 },
    Tabulated,
    Composite,
}

/// Maps a coordinate-ball radius `r` to a time after which unit geodesics
/// from the centre stay outside the ball.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EscapeFunction {
    pub kind: EscapeKind,
    pub function: MonotoneFunction,
    /// Set when `function` is continuous or left-continuous, which
    /// makes `{s | P(s) ≤ m}` a closed interval.
    pub left_continuous: bool,
}

impl EscapeFunction {
    pub fn linear(slope: f64) -> Result<Self> {
        Ok(Self {
            kind: EscapeKind::Linear { slope },
            function: MonotoneFunction::linear(slope)?,
            left_continuous: true,
        })
    }

    pub fn tabulated(function: MonotoneFunction) -> Result<Self> {
        function.validate()?;
        Ok(Self {
            kind: EscapeKind::Tabulated,
            function,
            left_continuous: true,
        })
    }

    pub fn eval(&self, r: f64) -> f64 {
        self.function.eval(r)
    }

    pub fn slope(&self) -> Option<f64> {
        match self.kind {
            EscapeKind::Linear { slope } => Some(slope),
            _ => None,
        }
    }
}

/// `√(4 dim h / (π − 2))`.
pub fn nilpotent_slope(dim_h: usize) -> f64 {
    (4.0 * dim_h as f64 / (PI - 2.0)).sqrt()
}

/// `P(r) = ρ(r)·√(4 dim h/(π − 2))`, where `ρ` converts a metric radius into
/// a coordinate radius (identity for coordinate balls).
pub fn nilpotent_escape(alg: &StepTwoAlgebra, rho: &MonotoneFunction) -> Result<EscapeFunction> {
    rho.validate()?;
    let r0 = rho.eval(0.0);
    if r0 != 0.0 {
        return Err(Error::Argument(format!("rho(0) must be 0, got {r0}")));
    }
    let c = nilpotent_slope(alg.dim_h());
    match rho {
        MonotoneFunction::Identity => EscapeFunction::linear(c),
        MonotoneFunction::Linear { slope } => EscapeFunction::linear(slope * c),
        other => Ok(EscapeFunction {
            kind: EscapeKind::Composite,
            left_continuous: true,
            function: MonotoneFunction::scaled(other.clone(), c)?,
        }),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProductEscape {
    pub value: f64,
    /// `max{P₁(r), P₂(r)}`.
    pub lower: f64,
    /// `P₁(r) + P₂(r)`.
    pub upper: f64,
    /// Maximizing angle, `r₁ = r cos θ`.
    pub theta: f64,
}

/// `sup{√(P₁(r₁)² + P₂(r₂)²) | r₁² + r₂² = r²}` on a `grid`-point θ-grid over
/// `[0, π/2]`, refined by golden-section search around the best node.
pub fn product_escape(p1: &MonotoneFunction, p2: &MonotoneFunction, r: f64, grid: usize) -> Result<ProductEscape> {
    if grid < 2 {
        return Err(Error::Argument(format!("product_escape needs grid >= 2, got {grid}")));
    }
    if !(r.is_finite() && r >= 0.0) {
        return Err(Error::Argument(format!("radius must be finite and non-negative, got {r}")));
    }
    // Endpoints are exact so that the lower sandwich bound is attained.
    let radii = |theta: f64| {
        if theta <= 0.0 {
            (r, 0.0)
        } else if theta >= FRAC_PI_2 {
            (0.0, r)
        } else {
            (r * theta.cos(), r * theta.sin())
        }
    };
    let objective = |theta: f64| {
        let (r1, r2) = radii(theta);
        p1.eval(r1).hypot(p2.eval(r2))
    };
    let step = FRAC_PI_2 / (grid - 1) as f64;
    let (mut best_theta, mut best) = (0.0, objective(0.0));
    for k in 1..grid {
        let theta = if k + 1 == grid { FRAC_PI_2 } else { step * k as f64 };
        let v = objective(theta);
        if v > best {
            best = v;
            best_theta = theta;
        }
    }

    let (mut a, mut b) = ((best_theta - step).max(0.0), (best_theta + step).min(FRAC_PI_2));
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (objective(c), objective(d));
    for _ in 0..80 {
        if b - a < 1e-13 {
            break;
        }
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = objective(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = objective(d);
        }
    }
    for (theta, v) in [(c, fc), (d, fd)] {
        if v > best {
            best = v;
            best_theta = theta;
        }
    }
    let (q1, q2) = (p1.eval(r), p2.eval(r));
    Ok(ProductEscape {
        value: best,
        lower: q1.max(q2),
        upper: q1 + q2,
        theta: best_theta,
    })
}

/// `σ(r) = sup{s ≥ 0 | P(s) ≤ μ(r)}` by bisection; the returned value always
/// satisfies `P(σ) ≤ μ(r)`.
pub fn sigma_from_escape(p: &EscapeFunction, mu: &MonotoneFunction, r: f64) -> Result<f64> {
    if !p.left_continuous {
        return Err(Error::Argument(
            "sigma_from_escape needs a continuous or left-continuous escape function".into(),
        ));
    }
    let m = mu.eval(r);
    let p0 = p.eval(0.0);
    if !(m >= p0) {
        return Err(Error::Domain(format!("mu(r) = {m} is below P(0) = {p0}")));
    }
    let mut lo = 0.0f64;
    let mut hi = 1.0f64;
    while p.eval(hi) <= m {
        lo = hi;
        hi *= 2.0;
        if !hi.is_finite() || hi > 1e300 {
            return Err(Error::Domain(format!("P never exceeds mu(r) = {m}; sigma is unbounded")));
        }
    }
    while hi - lo > SIGMA_TOL {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if p.eval(mid) <= m {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::build_nq;
    use proptest::prelude::*;

    #[test]
    fn slope_values() {
        assert!((nilpotent_slope(6) - 4.585_112_945_894_497).abs() < 1e-14);
        assert!((nilpotent_slope(8) - 5.294_432_387_154_051).abs() < 1e-14);
        let a = build_nq(3).unwrap();
        let p = nilpotent_escape(&a, &MonotoneFunction::Identity).unwrap();
        assert_eq!(p.slope(), Some(nilpotent_slope(6)));
        assert_eq!(p.eval(0.0), 0.0);
        assert!(p.eval(2.0) >= 2.0);
    }

    #[test]
    fn nilpotent_escape_rejects_bad_rho() {
        let a = build_nq(3).unwrap();
        let shifted = MonotoneFunction::PiecewiseLinear {
            xs: vec![0.0, 1.0],
            ys: vec![0.5, 1.0],
        };
        assert!(nilpotent_escape(&a, &shifted).is_err());
        let dec = MonotoneFunction::PiecewiseLinear {
            xs: vec![0.0, 1.0],
            ys: vec![0.0, -1.0],
        };
        assert!(nilpotent_escape(&a, &dec).is_err());
        let pl = MonotoneFunction::piecewise_linear(vec![0.0, 1.0], vec![0.0, 2.0]).unwrap();
        let p = nilpotent_escape(&a, &pl).unwrap();
        assert_eq!(p.kind, EscapeKind::Composite);
        assert!((p.eval(3.0) - 6.0 * nilpotent_slope(6)).abs() < 1e-12);
    }

    #[test]
    fn evaluation_rules() {
        let pl = MonotoneFunction::piecewise_linear(vec![1.0, 2.0, 4.0], vec![1.0, 3.0, 4.0]).unwrap();
        assert_eq!(pl.eval(0.0), 1.0);
        assert_eq!(pl.eval(1.5), 2.0);
        assert_eq!(pl.eval(3.0), 3.5);
        assert_eq!(pl.eval(6.0), 5.0);
        let st = MonotoneFunction::staircase(vec![1.0, 2.0], vec![0.0, 1.0, 5.0]).unwrap();
        assert_eq!(st.eval(1.0), 0.0);
        assert_eq!(st.eval(1.0 + 1e-12), 1.0);
        assert_eq!(st.eval(2.0), 1.0);
        assert_eq!(st.eval(9.0), 5.0);
        assert!(!st.is_continuous());
        assert!(MonotoneFunction::staircase(vec![1.0], vec![0.0]).is_err());
    }

    #[test]
    fn product_escape_examples() {
        let id = MonotoneFunction::Identity;
        let pe = product_escape(&id, &id, 3.0, 33).unwrap();
        assert!((pe.value - 3.0).abs() < 1e-10);
        let two = MonotoneFunction::linear(2.0).unwrap();
        let pe = product_escape(&two, &id, 1.5, 17).unwrap();
        assert!((pe.value - 3.0).abs() < 1e-12);
        assert_eq!(pe.theta, 0.0);
        assert!(product_escape(&id, &id, 1.0, 1).is_err());
    }

    #[test]
    fn sigma_examples() {
        let id = MonotoneFunction::Identity;
        let p = EscapeFunction::linear(1.0).unwrap();
        assert!((sigma_from_escape(&p, &id, 2.5).unwrap() - 2.5).abs() < 1e-10);

        let p = EscapeFunction::linear(nilpotent_slope(6)).unwrap();
        for r in [0.1, 1.0, 7.0] {
            let s = sigma_from_escape(&p, &id, r).unwrap();
            assert!(p.eval(s) <= r);
            assert!((s - r / nilpotent_slope(6)).abs() < 1e-9);
        }
    }

    #[test]
    fn sigma_domain_error() {
        let p = EscapeFunction::tabulated(MonotoneFunction::piecewise_linear(vec![0.0, 1.0], vec![1.0, 2.0]).unwrap())
            .unwrap();
        let err = sigma_from_escape(&p, &MonotoneFunction::Identity, 0.5).unwrap_err();
        assert!(matches!(err, Error::Domain(_)));
    }

    #[test]
    fn sigma_staircase_matches_scan() {
        let st = MonotoneFunction::staircase(vec![0.3, 0.7, 1.1], vec![0.0, 0.5, 0.9, 2.0]).unwrap();
        let p = EscapeFunction::tabulated(st).unwrap();
        for r in [0.0, 0.4, 0.5, 0.8, 1.5] {
            let s = sigma_from_escape(&p, &MonotoneFunction::Identity, r).unwrap();
            let scan = (0..=200_000)
                .map(|k| k as f64 * 1e-5)
                .filter(|&x| p.eval(x) <= r)
                .fold(0.0, f64::max);
            assert!(p.eval(s) <= r);
            assert!((s - scan).abs() <= 1e-5 + 1e-10, "r={r}: {s} vs {scan}");
        }
    }

    fn tabulated() -> impl Strategy<Value = MonotoneFunction> {
        prop::collection::vec((0.01f64..1.0, 0.0f64..2.0), 1..8).prop_map(|steps| {
            let (mut x, mut y) = (0.0, 0.0);
            let (mut xs, mut ys) = (vec![0.0], vec![0.0]);
            for (dx, dy) in steps {
                x += dx;
                y += dy;
                xs.push(x);
                ys.push(y);
            }
            MonotoneFunction::piecewise_linear(xs, ys).unwrap()
        })
    }

    proptest! {
        #[test]
        fn sandwich_holds(p1 in tabulated(), p2 in tabulated(), r in 0.0f64..5.0) {
            let pe = product_escape(&p1, &p2, r, 65).unwrap();
            prop_assert!(pe.value >= pe.lower);
            prop_assert!(pe.value <= pe.upper * (1.0 + 1e-15));
        }

        #[test]
        fn sigma_postcondition(p in tabulated(), r in 0.0f64..5.0) {
            let p = EscapeFunction::tabulated(p).unwrap();
            let s = sigma_from_escape(&p, &MonotoneFunction::Identity, r);
            if let Ok(s) = s {
                prop_assert!(p.eval(s) <= r);
            }
        }
    }
}
