use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::algebra::{AlgebraVector, StepTwoAlgebra};
use crate::error::{Error, Result};
use crate::geodesics::{classify, EscapeCase, GeodesicN};

fn gaussian(n: usize, rng: &mut impl Rng) -> DVector<f64> {
    DVector::from_fn(n, |_, _| rng.sample(StandardNormal))
}

/// Uniformly distributed unit left-invariant velocity.
pub fn random_unit_velocity(alg: &StepTwoAlgebra, rng: &mut impl Rng) -> AlgebraVector {
    loop {
        let v = AlgebraVector::new(gaussian(alg.dim_z(), rng), gaussian(alg.dim_h(), rng));
        let n = v.norm();
        if n > 1e-8 {
            return v.scale(1.0 / n);
        }
    }
}

/// A unit velocity and a time at which [`classify`] reports `case`.
#[derive(Debug, Clone)]
pub struct CaseSample {
    pub velocity: AlgebraVector,
    pub t: f64,
}

/// Random vector of `z` with `J_z u = 0`, if that subspace is non-trivial.
fn annihilator(alg: &StepTwoAlgebra, u: &DVector<f64>, rng: &mut impl Rng) -> Option<DVector<f64>> {
    let dz = alg.dim_z();
    if dz == 0 {
        return None;
    }
    let cols: Vec<DVector<f64>> = alg.j_maps().iter().map(|j| j * u).collect();
    let m = DMatrix::from_columns(&cols);
    let eig = (m.transpose() * &m).symmetric_eigen();
    let scale = eig.eigenvalues.amax().max(1.0);
    let mut z = DVector::zeros(dz);
    let mut any = false;
    for i in 0..dz {
        if eig.eigenvalues[i].abs() <= 1e-12 * scale {
            z += eig.eigenvectors.column(i) * rng.sample::<f64, _>(StandardNormal);
            any = true;
        }
    }
    (any && z.norm() > 1e-8).then(|| z.normalize())
}

fn draw(alg: &StepTwoAlgebra, case: EscapeCase, t_max: f64, rng: &mut impl Rng) -> Option<CaseSample> {
    let (dz, dh) = (alg.dim_z(), alg.dim_h());
    let velocity = match case {
        EscapeCase::CentralHeavy => {
            if dz == 0 {
                return None;
            }
            let zn2 = rng.random_range(0.5..=1.0f64);
            let z = gaussian(dz, rng).normalize() * zn2.sqrt();
            let h = gaussian(dh, rng).normalize() * (1.0 - zn2).sqrt();
            AlgebraVector::new(z, h)
        }
        EscapeCase::KernelDominant => {
            // h₀ mostly along a basis direction u, z₀ annihilating u.
            let mut u = DVector::zeros(dh);
            u[rng.random_range(0..dh)] = 1.0;
            let z_dir = annihilator(alg, &u, rng).unwrap_or_else(|| DVector::zeros(dz));
            let zn2 = rng.random_range(0.0..0.5f64);
            let mut rest = gaussian(dh, rng);
            rest -= &u * rest.dot(&u);
            let rest = if rest.norm() > 1e-8 { rest.normalize() } else { rest };
            let h = u + rest * rng.random_range(0.0..0.6);
            let h = h.normalize() * (1.0 - zn2).sqrt();
            AlgebraVector::new(z_dir * zn2.sqrt(), h)
        }
        EscapeCase::Early | EscapeCase::Late => {
            let zn2 = rng.random_range(0.0..0.5f64);
            let z = if dz == 0 { DVector::zeros(0) } else { gaussian(dz, rng).normalize() * zn2.sqrt() };
            let h = gaussian(dh, rng).normalize() * (1.0 - z.norm_squared()).sqrt();
            AlgebraVector::new(z, h)
        }
    };
    let g = GeodesicN::from_identity(alg, velocity.z.clone(), velocity.h.clone()).ok()?;
    let lambda = g.spectral().dominant_block().lambda.abs();
    let t = match case {
        EscapeCase::Early => {
            if lambda <= 1e-12 {
                return None;
            }
            rng.random_range(0.0..=(PI / (2.0 * lambda)).min(t_max))
        }
        EscapeCase::Late => {
            let edge = if lambda > 1e-12 { PI / (2.0 * lambda) } else { return None };
            if edge >= t_max {
                return None;
            }
            rng.random_range(edge..=t_max)
        }
        _ => rng.random_range(0.0..=t_max),
    };
    (t > 0.0 && classify(&g, t).0 == case).then_some(CaseSample { velocity, t })
}

/// `n` samples constructed to land in `case`, with times in `(0, t_max]`.
pub fn case_samples(
    alg: &StepTwoAlgebra,
    case: EscapeCase,
    n: usize,
    t_max: f64,
    rng: &mut impl Rng,
) -> Result<Vec<CaseSample>> {
    if !(t_max > 0.0 && t_max.is_finite()) {
        return Err(Error::Argument(format!("case_samples needs t_max > 0, got {t_max}")));
    }
    let mut out = Vec::with_capacity(n);
    let mut attempts = 0usize;
    while out.len() < n {
        attempts += 1;
        if attempts > 100 * n + 1000 {
            return Err(Error::Domain(format!(
                "could not construct samples for case {} on this algebra",
                case.tag()
            )));
        }
        if let Some(s) = draw(alg, case, t_max, rng) {
            out.push(s);
        }
    }
    Ok(out)
}
