use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quad::{integrate, QuadOptions};
use crate::radon::LineR2;

/// Disk outside of which a field vanishes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SupportDisk {
    pub center: [f64; 2],
    pub radius: f64,
}

impl SupportDisk {
    /// Half-length of the chord cut from `line`, and the signed distance from
    /// the centre to the line; `None` if they do not meet.
    pub fn chord(&self, line: &LineR2) -> Option<(f64, f64)> {
        let d = line.signed_distance(self.center);
        (d.abs() < self.radius).then(|| ((self.radius * self.radius - d * d).sqrt(), d))
    }
}

/// A compactly supported function on the plane.
pub trait ScalarField2D: Sync {
    fn value(&self, x: [f64; 2]) -> f64;

    fn support(&self) -> SupportDisk;

    /// `∫ f` along `line`, to absolute tolerance `tol`.
    fn line_integral(&self, line: &LineR2, tol: f64) -> Result<f64> {
        let disk = self.support();
        let Some((half, d)) = disk.chord(line) else {
            return Ok(0.0);
        };
        let (n, tau) = (line.normal(), line.direction());
        let foot = [disk.center[0] + d * n[0], disk.center[1] + d * n[1]];
        let r = integrate(
            |s| self.value([foot[0] + s * tau[0], foot[1] + s * tau[1]]),
            -half,
            half,
            &QuadOptions::abs(tol).with_panels(4),
        )?;
        Ok(r.value)
    }
}

/// Radial profile of a phantom bump as a function of the distance to its centre.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Profile {
    /// `exp(1 − 1/(1 − s²))` with `s = dist/radius`; peak 1, C^∞.
    Bump,
    /// `exp(−dist²/width²)`, cut off at the radius.
    TruncGauss,
}

impl Profile {
    /// Unit-amplitude value at distance `dist` (zero from `radius` on).
    pub fn eval(self, dist: f64, radius: f64, width: f64) -> f64 {
        if dist >= radius {
            return 0.0;
        }
        match self {
            Profile::Bump => {
                let s = dist / radius;
                (1.0 - 1.0 / (1.0 - s * s)).exp()
            }
            Profile::TruncGauss => {
                let s = dist / width;
                (-s * s).exp()
            }
        }
    }
}

fn default_width() -> f64 {
    1.0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhantomBump {
    pub center: [f64; 2],
    pub amplitude: f64,
    pub radius: f64,
    pub profile: Profile,
    /// Only used by [`Profile::TruncGauss`].
    #[serde(default = "default_width")]
    pub width: f64,
}

impl PhantomBump {
    pub fn bump(center: [f64; 2], amplitude: f64, radius: f64) -> Self {
        Self {
            center,
            amplitude,
            radius,
            profile: Profile::Bump,
            width: 1.0,
        }
    }

    pub fn trunc_gauss(center: [f64; 2], amplitude: f64, width: f64, radius: f64) -> Self {
        Self {
            center,
            amplitude,
            radius,
            profile: Profile::TruncGauss,
            width,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let finite = self.center.iter().chain([&self.amplitude, &self.radius, &self.width]).all(|v| v.is_finite());
        if !finite || self.radius <= 0.0 || self.width <= 0.0 {
            return Err(Error::Argument(format!(
                "phantom bump needs finite entries and positive radius/width: {self:?}"
            )));
        }
        Ok(())
    }

    /// Value at distance `dist` from the centre.
    pub fn radial(&self, dist: f64) -> f64 {
        self.amplitude * self.profile.eval(dist, self.radius, self.width)
    }

    /// `∫ radial(√(d² + s²)) ds` over the chord at distance `d` from the centre.
    pub fn chord_integral(&self, d: f64, tol: f64) -> Result<f64> {
        if self.amplitude == 0.0 {
            return Ok(0.0);
        }
        radial_chord_integral(|r| self.radial(r), self.radius, d, tol)
    }
}

/// `∫ f(√(d² + s²)) ds` over the chord of the disk of radius `radius` at
/// distance `d` from its centre, for `f` vanishing beyond `radius`.
pub(crate) fn radial_chord_integral(f: impl Fn(f64) -> f64, radius: f64, d: f64, tol: f64) -> Result<f64> {
    if d.abs() >= radius {
        return Ok(0.0);
    }
    let half = (radius * radius - d * d).sqrt();
    let r = integrate(|s| f(d.hypot(s)), 0.0, half, &QuadOptions::abs(0.5 * tol).with_panels(2))?;
    Ok(2.0 * r.value)
}

/// A finite sum of radial bumps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Phantom2D {
    pub bumps: Vec<PhantomBump>,
}

impl Phantom2D {
    pub fn new(bumps: Vec<PhantomBump>) -> Result<Self> {
        for b in &bumps {
            b.validate()?;
        }
        Ok(Self { bumps })
    }

    pub fn single(bump: PhantomBump) -> Result<Self> {
        Self::new(vec![bump])
    }

    /// `exp(−|x|²)`, treated as supported in the disk of radius 9.
    pub fn gaussian() -> Self {
        Self {
            bumps: vec![PhantomBump::trunc_gauss([0.0, 0.0], 1.0, 1.0, 9.0)],
        }
    }

    pub fn max_abs_bound(&self) -> f64 {
        self.bumps.iter().map(|b| b.amplitude.abs()).sum()
    }
}

impl ScalarField2D for Phantom2D {
    fn value(&self, x: [f64; 2]) -> f64 {
        self.bumps
            .iter()
            .map(|b| b.radial((x[0] - b.center[0]).hypot(x[1] - b.center[1])))
            .sum()
    }

    /// Disk about the origin containing every bump.
    fn support(&self) -> SupportDisk {
        let radius = self
            .bumps
            .iter()
            .map(|b| b.center[0].hypot(b.center[1]) + b.radius)
            .fold(0.0, f64::max);
        SupportDisk {
            center: [0.0, 0.0],
            radius,
        }
    }

    fn line_integral(&self, line: &LineR2, tol: f64) -> Result<f64> {
        let tol = tol / self.bumps.len().max(1) as f64;
        self.bumps
            .iter()
            .map(|b| b.chord_integral(line.signed_distance(b.center), tol))
            .sum()
    }
}

/// A field given by a closure and a declared support disk.
pub struct FnField<F> {
    f: F,
    support: SupportDisk,
}

impl<F: Fn([f64; 2]) -> f64 + Sync> FnField<F> {
    pub fn new(center: [f64; 2], radius: f64, f: F) -> Self {
        Self {
            f,
            support: SupportDisk { center, radius },
        }
    }
}

impl<F: Fn([f64; 2]) -> f64 + Sync> ScalarField2D for FnField<F> {
    fn value(&self, x: [f64; 2]) -> f64 {
        let c = self.support.center;
        if (x[0] - c[0]).hypot(x[1] - c[1]) >= self.support.radius {
            0.0
        } else {
            (self.f)(x)
        }
    }

    fn support(&self) -> SupportDisk {
        self.support
    }
}
