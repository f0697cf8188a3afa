//! Phantom presets and descriptors.

use nilxray::algebra::{build_nq, StepTwoAlgebra};
use nilxray::flats::{BumpN, PhantomN, ScalarFieldN};
use nilxray::radon::{Phantom2D, PhantomBump, Profile, ScalarField2D};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use crate::config::{BumpSpec, PhantomSection, Preset, Space};
use crate::error::{CliError, CliResult};

/// The space a phantom lives on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpaceSpec {
    Plane,
    Euclidean(usize),
    Nq(usize),
}

impl SpaceSpec {
    pub fn from_section(s: &PhantomSection) -> CliResult<Self> {
        match s.space {
            Space::Plane => Ok(SpaceSpec::Plane),
            Space::Euclidean => match s.dim {
                Some(d) if d >= 2 => Ok(SpaceSpec::Euclidean(d)),
                _ => Err(CliError::Config("space = \"euclidean\" needs dim >= 2".into())),
            },
            Space::Nq => match s.q {
                Some(q) if q >= 2 => Ok(SpaceSpec::Nq(q)),
                _ => Err(CliError::Config("space = \"nq\" needs q >= 2".into())),
            },
        }
    }

    pub fn algebra(self) -> CliResult<StepTwoAlgebra> {
        Ok(match self {
            SpaceSpec::Plane => StepTwoAlgebra::abelian(2)?,
            SpaceSpec::Euclidean(d) => StepTwoAlgebra::abelian(d)?,
            SpaceSpec::Nq(q) => build_nq(q)?,
        })
    }

    pub fn dim(self) -> usize {
        match self {
            SpaceSpec::Plane => 2,
            SpaceSpec::Euclidean(d) => d,
            SpaceSpec::Nq(q) => q - 1 + 2 * q,
        }
    }

    pub fn to_json(self) -> Value {
        match self {
            SpaceSpec::Plane => json!({"space": "plane"}),
            SpaceSpec::Euclidean(d) => json!({"space": "euclidean", "dim": d}),
            SpaceSpec::Nq(q) => json!({"space": "nq", "q": q}),
        }
    }

    pub fn from_json(v: &Value) -> Option<Self> {
        let n = |k: &str| v.get(k).and_then(Value::as_u64).map(|x| x as usize);
        match v.get("space")?.as_str()? {
            "plane" => Some(SpaceSpec::Plane),
            "euclidean" => Some(SpaceSpec::Euclidean(n("dim")?)),
            "nq" => Some(SpaceSpec::Nq(n("q")?)),
            _ => None,
        }
    }
}

/// A bump in a space of dimension `dim`, as `(center, amplitude, radius, profile, width)`.
struct Raw {
    center: Vec<f64>,
    amplitude: f64,
    radius: f64,
    profile: Profile,
    width: f64,
}

fn raw_bump(center: Vec<f64>, amplitude: f64, radius: f64) -> Raw {
    Raw {
        center,
        amplitude,
        radius,
        profile: Profile::Bump,
        width: 1.0,
    }
}

fn at(dim: usize, head: &[f64]) -> Vec<f64> {
    let mut c = vec![0.0; dim];
    c[..head.len().min(dim)].copy_from_slice(&head[..head.len().min(dim)]);
    c
}

fn preset_bumps(preset: Preset, dim: usize, n_bumps: usize, seed: u64) -> Vec<Raw> {
    match preset {
        Preset::Single => vec![raw_bump(at(dim, &[]), 1.0, 1.0)],
        Preset::Zero => vec![raw_bump(at(dim, &[]), 0.0, 1.0)],
        Preset::Gaussian => {
            // exp(−|x|²) on the plane; narrower on groups so it fits the ball of radius 2
            let (width, radius) = if dim == 2 { (1.0, 9.0) } else { (0.5, 2.0) };
            vec![Raw {
                center: at(dim, &[]),
                amplitude: 1.0,
                radius,
                profile: Profile::TruncGauss,
                width,
            }]
        }
        Preset::TwoBumps => vec![
            raw_bump(at(dim, &[-0.35, 0.1]), 1.0, 0.45),
            raw_bump(at(dim, &[0.4, -0.2]), 0.7, 0.35),
        ],
        // A ring: a wide bump minus a narrow one with the same peak.
        Preset::Annular => vec![raw_bump(at(dim, &[]), 1.0, 0.9), raw_bump(at(dim, &[]), -1.0, 0.5)],
        Preset::OffCentre => vec![raw_bump(at(dim, &[0.45, -0.3]), 1.0, 0.5)],
        // smooth: C∞ bumps only
        Preset::Random => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..n_bumps)
                .map(|_| {
                    let radius = rng.random_range(0.25..0.45);
                    // uniform in the ball that keeps the support inside radius 0.9
                    let mut dir: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
                    let n = dir.iter().map(|x| x * x).sum::<f64>().sqrt().max(1e-12);
                    let r = (0.9 - radius) * rng.random::<f64>().powf(1.0 / dim as f64);
                    dir.iter_mut().for_each(|x| *x *= r / n);
                    raw_bump(dir, rng.random_range(0.3..1.0), radius)
                })
                .collect()
        }
    }
}

fn from_specs(specs: &[BumpSpec]) -> CliResult<Vec<Raw>> {
    specs
        .iter()
        .map(|b| {
            let profile = match b.profile.as_str() {
                "bump" => Profile::Bump,
                "trunc_gauss" => Profile::TruncGauss,
                other => return Err(CliError::Config(format!("unknown profile {other:?}"))),
            };
            Ok(Raw {
                center: b.center.clone(),
                amplitude: b.amplitude,
                radius: b.radius,
                profile,
                width: b.width,
            })
        })
        .collect()
}

/// A phantom built from a config section, with a short identifier.
pub enum Built {
    Plane(Phantom2D),
    Group(SpaceSpec, PhantomN),
}

impl Built {
    pub fn payload(&self) -> Value {
        match self {
            Built::Plane(p) => serde_json::to_value(p).expect("phantom serialises"),
            Built::Group(_, p) => serde_json::to_value(p).expect("phantom serialises"),
        }
    }

    pub fn space(&self) -> SpaceSpec {
        match self {
            Built::Plane(_) => SpaceSpec::Plane,
            Built::Group(s, _) => *s,
        }
    }
}

pub fn build(section: &PhantomSection, seed: u64) -> CliResult<(Built, String)> {
    let space = SpaceSpec::from_section(section)?;
    let dim = space.dim();
    let (raw, id) = match (&section.bumps, section.preset) {
        (Some(specs), _) => (from_specs(specs)?, "explicit".to_string()),
        (None, Some(p)) => {
            let n = section.n_bumps.unwrap_or(5);
            let id = serde_json::to_value(p).ok().and_then(|v| v.as_str().map(str::to_string)).unwrap_or_default();
            (preset_bumps(p, dim, n, seed), id)
        }
        (None, None) => return Err(CliError::Config("phantom needs a preset or explicit bumps".into())),
    };
    if let Some(b) = raw.iter().find(|b| b.center.len() != dim) {
        return Err(CliError::Config(format!(
            "bump centre {:?} has length {}, the space has dimension {dim}",
            b.center,
            b.center.len()
        )));
    }
    let built = match space {
        SpaceSpec::Plane => Built::Plane(Phantom2D::new(
            raw.into_iter()
                .map(|b| PhantomBump {
                    center: [b.center[0], b.center[1]],
                    amplitude: b.amplitude,
                    radius: b.radius,
                    profile: b.profile,
                    width: b.width,
                })
                .collect(),
        )?),
        _ => {
            let alg = space.algebra()?;
            Built::Group(
                space,
                PhantomN::new(
                    &alg,
                    raw.into_iter()
                        .map(|b| BumpN {
                            center: b.center,
                            amplitude: b.amplitude,
                            radius: b.radius,
                            profile: b.profile,
                            width: b.width,
                        })
                        .collect(),
                )?,
            )
        }
    };
    Ok((built, id))
}

/// A lower bound on `max |f|`: the largest `|f|` at bump centres and extra points.
pub fn sampled_max_2d(p: &Phantom2D, extra: &[[f64; 2]]) -> f64 {
    p.bumps
        .iter()
        .map(|b| b.center)
        .chain(extra.iter().copied())
        .map(|x| p.value(x).abs())
        .fold(0.0, f64::max)
}

pub fn sampled_max_n(p: &PhantomN, extra: &[nilxray::algebra::GroupPoint]) -> f64 {
    let dz = p.dim_z;
    p.bumps
        .iter()
        .map(|b| nilxray::algebra::GroupPoint::exp(nilxray::algebra::AlgebraVector::from_flat(dz, &b.center)))
        .chain(extra.iter().cloned())
        .map(|x| p.value(&x).abs())
        .fold(0.0, f64::max)
}
