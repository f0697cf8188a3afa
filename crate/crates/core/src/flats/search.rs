//! Finding a totally geodesic 2-flat through a given geodesic.
//!
//! At the identity a plane `span{v, w}` of left-invariant vectors is a flat
//! subalgebra that is totally geodesic when `[h_v, h_w] = 0` and
//! `J_{z_x} h_y + J_{z_y} h_x = 0` for all `x, y` in the plane. With `v`
//! fixed these conditions are linear in `w` except for `J_{z_w} h_w = 0`, so
//! a catalog of candidates comes from a null space. When the catalog has
//! nothing, the verifier's residual is minimised over `w` by Nelder–Mead.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::algebra::{AlgebraVector, GroupPoint, StepTwoAlgebra};
use crate::error::{Error, NotFoundReport, Result};
use crate::flats::{is_totally_geodesic_flat, FlatImmersion, FlatSamples};

const NULL_TOL: f64 = 1e-10;

/// A point of `N` and a unit left-invariant velocity `(z₀, h₀)` there.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TangentVector {
    pub base: GroupPoint,
    pub velocity: AlgebraVector,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlatSearchOptions {
    pub tol: f64,
    /// Total residual evaluations over all restarts.
    pub budget: usize,
    pub restarts: usize,
    pub seed: u64,
}

impl Default for FlatSearchOptions {
    fn default() -> Self {
        Self {
            tol: 1e-7,
            budget: 1200,
            restarts: 4,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FlatSource {
    Central,
    Horizontal,
    Mixed,
    Search { restart: usize },
}

#[derive(Debug, Clone)]
pub struct FlatSearchOutcome<'a> {
    pub flat: FlatImmersion<'a>,
    pub source: FlatSource,
    pub evaluations: usize,
}

/// Orthonormal basis of the null space of `m`.
fn null_space(m: &DMatrix<f64>) -> Vec<DVector<f64>> {
    let gram = m.transpose() * m;
    let scale = gram.diagonal().amax().max(1.0);
    let eig = SymmetricEigen::new(gram);
    let mut idx: Vec<usize> = (0..eig.eigenvalues.len())
        .filter(|&i| eig.eigenvalues[i].abs() <= NULL_TOL * scale)
        .collect();
    idx.sort_unstable();
    idx.iter().map(|&i| eig.eigenvectors.column(i).into_owned()).collect()
}

#[derive(Clone, Copy, PartialEq)]
enum Restrict {
    None,
    Central,
    Horizontal,
}

/// Rows of the linear flat conditions on `w` given `v`, as a matrix acting
/// on flattened `(z, h)`.
fn linear_conditions(alg: &StepTwoAlgebra, v: &AlgebraVector, extra: Restrict) -> Result<DMatrix<f64>> {
    let (dz, dh) = (alg.dim_z(), alg.dim_h());
    let n = dz + dh;
    let extra_rows = match extra {
        Restrict::None => 0,
        Restrict::Central => dh,
        Restrict::Horizontal => dz,
    };
    let mut m = DMatrix::zeros(dz + dh + 1 + extra_rows, n);
    let jh: Vec<DVector<f64>> = alg.j_maps().iter().map(|j| j * &v.h).collect();
    // [h_v, h_w]_a = ⟨J_a h_v, h_w⟩
    for a in 0..dz {
        for k in 0..dh {
            m[(a, dz + k)] = jh[a][k];
        }
    }
    // J_{z_v} h_w + Σ_a z_w[a] J_a h_v
    let jz = if dz > 0 { alg.j_action(&v.z)? } else { DMatrix::zeros(dh, dh) };
    for r in 0..dh {
        for a in 0..dz {
            m[(dz + r, a)] = jh[a][r];
        }
        for k in 0..dh {
            m[(dz + r, dz + k)] = jz[(r, k)];
        }
    }
    for (k, x) in v.to_flat().into_iter().enumerate() {
        m[(dz + dh, k)] = x;
    }
    let row0 = dz + dh + 1;
    match extra {
        Restrict::None => {}
        Restrict::Central => (0..dh).for_each(|k| m[(row0 + k, dz + k)] = 1.0),
        Restrict::Horizontal => (0..dz).for_each(|a| m[(row0 + a, a)] = 1.0),
    }
    Ok(m)
}

/// Candidate second directions, most structured first.
fn catalog(alg: &StepTwoAlgebra, v: &AlgebraVector) -> Result<Vec<(FlatSource, AlgebraVector)>> {
    let dz = alg.dim_z();
    let mut out = Vec::new();
    let mut push = |src: FlatSource, flat: &DVector<f64>| {
        let n = flat.norm();
        if n < 1e-8 {
            return;
        }
        let w = AlgebraVector::from_flat(dz, (flat / n).as_slice());
        let bend = if dz > 0 { (alg.j_action(&w.z).map(|j| (j * &w.h).norm())).unwrap_or(f64::INFINITY) } else { 0.0 };
        if bend <= NULL_TOL {
            out.push((src, w));
        }
    };
    for (r, src) in [(Restrict::Central, FlatSource::Central), (Restrict::Horizontal, FlatSource::Horizontal)] {
        for b in null_space(&linear_conditions(alg, v, r)?) {
            push(src.clone(), &b);
        }
    }
    let general = null_space(&linear_conditions(alg, v, Restrict::None)?);
    for b in &general {
        push(FlatSource::Mixed, b);
    }
    for i in 0..general.len() {
        for j in i + 1..general.len() {
            push(FlatSource::Mixed, &(&general[i] + &general[j]));
            push(FlatSource::Mixed, &(&general[i] - &general[j]));
        }
    }
    Ok(out)
}

#[derive(Debug, Clone)]
pub(crate) struct Minimum {
    pub x: Vec<f64>,
    pub fx: f64,
    pub evaluations: usize,
}

/// Nelder–Mead with the standard coefficients, stopped after `max_evals`
/// evaluations or once the best value is at most `target`.
pub(crate) fn nelder_mead(f: impl Fn(&[f64]) -> f64, x0: &[f64], step: f64, max_evals: usize, target: f64) -> Minimum {
    let n = x0.len();
    let evals = std::cell::Cell::new(0usize);
    let eval = |x: &[f64]| {
        evals.set(evals.get() + 1);
        let v = f(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
    simplex.push((x0.to_vec(), eval(x0)));
    for i in 0..n {
        let mut x = x0.to_vec();
        x[i] += step;
        let fx = eval(&x);
        simplex.push((x, fx));
    }
    loop {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let spread = simplex[n].1 - simplex[0].1;
        if simplex[0].1 <= target || evals.get() >= max_evals || (spread.abs() < 1e-16 && simplex[0].1.is_finite()) {
            break;
        }
        let centroid: Vec<f64> = (0..n).map(|k| simplex[..n].iter().map(|p| p.0[k]).sum::<f64>() / n as f64).collect();
        let along = |t: f64| -> Vec<f64> { (0..n).map(|k| centroid[k] + t * (simplex[n].0[k] - centroid[k])).collect() };
        let xr = along(-1.0);
        let fr = eval(&xr);
        if fr < simplex[0].1 {
            let xe = along(-2.0);
            let fe = eval(&xe);
            simplex[n] = if fe < fr { (xe, fe) } else { (xr, fr) };
        } else if fr < simplex[n - 1].1 {
            simplex[n] = (xr, fr);
        } else {
            let (xc, fc) = if fr < simplex[n].1 {
                let xc = along(-0.5);
                let fc = eval(&xc);
                (xc, fc)
            } else {
                let xc = along(0.5);
                let fc = eval(&xc);
                (xc, fc)
            };
            if fc < simplex[n].1.min(fr) {
                simplex[n] = (xc, fc);
            } else {
                let best = simplex[0].0.clone();
                for p in simplex.iter_mut().skip(1) {
                    for k in 0..n {
                        p.0[k] = best[k] + 0.5 * (p.0[k] - best[k]);
                    }
                    p.1 = eval(&p.0);
                }
            }
        }
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    let (x, fx) = simplex.swap_remove(0);
    Minimum {
        x,
        fx,
        evaluations: evals.get(),
    }
}

/// Unit vector of `y` with its `v`-component removed, or `None` if that
/// vanishes.
fn orthogonal_unit(y: &[f64], v: &[f64]) -> Option<Vec<f64>> {
    let d: f64 = y.iter().zip(v).map(|(a, b)| a * b).sum();
    let w: Vec<f64> = y.iter().zip(v).map(|(a, b)| a - d * b).collect();
    let n = w.iter().map(|x| x * x).sum::<f64>().sqrt();
    (n > 1e-8).then(|| w.iter().map(|x| x / n).collect())
}

/// A verified flat through the geodesic with initial data `vtx`.
pub fn find_flat_through<'a>(
    alg: &'a StepTwoAlgebra,
    vtx: &TangentVector,
    opts: &FlatSearchOptions,
) -> Result<FlatImmersion<'a>> {
    Ok(find_flat_detailed(alg, vtx, opts)?.flat)
}

/// [`find_flat_through`], also reporting where the flat came from.
pub fn find_flat_detailed<'a>(
    alg: &'a StepTwoAlgebra,
    vtx: &TangentVector,
    opts: &FlatSearchOptions,
) -> Result<FlatSearchOutcome<'a>> {
    alg.check_point(&vtx.base)?;
    alg.check_vector(&vtx.velocity)?;
    if (vtx.velocity.norm() - 1.0).abs() > 1e-10 {
        return Err(Error::Argument(format!(
            "find_flat_through needs a unit velocity, got norm {}",
            vtx.velocity.norm()
        )));
    }
    if !(opts.tol > 0.0) || opts.restarts == 0 {
        return Err(Error::Argument("flat search needs tol > 0 and restarts >= 1".into()));
    }
    let v = &vtx.velocity;
    let samples = FlatSamples::default();
    let e = alg.identity();
    let residual_at_e = |w: &AlgebraVector| -> f64 {
        FlatImmersion::from_body(alg, e.clone(), v, w)
            .and_then(|f| is_totally_geodesic_flat(&f, &samples, opts.tol))
            .map_or(f64::INFINITY, |r| r.residual)
    };
    let finish = |w: &AlgebraVector, source: FlatSource, evaluations: usize| -> Result<Option<FlatSearchOutcome<'a>>> {
        let mut flat = FlatImmersion::from_body(alg, vtx.base.clone(), v, w)?;
        let verdict = is_totally_geodesic_flat(&flat, &samples, opts.tol)?;
        flat.residual = Some(verdict.residual);
        Ok(verdict.passed.then_some(FlatSearchOutcome {
            flat,
            source,
            evaluations: evaluations + 1,
        }))
    };

    let mut evaluations = 0;
    let mut best = (f64::INFINITY, v.to_flat());
    for (source, w) in catalog(alg, v)? {
        if evaluations >= opts.budget {
            break;
        }
        let r = residual_at_e(&w);
        evaluations += 1;
        if r < best.0 {
            best = (r, w.to_flat());
        }
        if r <= opts.tol {
            if let Some(found) = finish(&w, source, evaluations)? {
                return Ok(found);
            }
        }
    }

    let dz = alg.dim_z();
    let vflat = v.to_flat();
    let per_restart = (opts.budget.saturating_sub(evaluations) / opts.restarts).max(1);
    let runs: Vec<(usize, Minimum)> = (0..opts.restarts)
        .into_par_iter()
        .map(|k| {
            let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
            rng.set_stream(k as u64);
            let y0: Vec<f64> = (0..vflat.len()).map(|_| rng.random_range(-1.0..1.0)).collect();
            let objective = |y: &[f64]| match orthogonal_unit(y, &vflat) {
                Some(w) => residual_at_e(&AlgebraVector::from_flat(dz, &w)),
                None => f64::INFINITY,
            };
            (k, nelder_mead(objective, &y0, 0.5, per_restart, 0.5 * opts.tol))
        })
        .collect();
    let mut order: Vec<&(usize, Minimum)> = runs.iter().collect();
    order.sort_by(|a, b| a.1.fx.total_cmp(&b.1.fx).then(a.0.cmp(&b.0)));
    evaluations += runs.iter().map(|r| r.1.evaluations).sum::<usize>();
    for (k, m) in order {
        if let Some(w) = orthogonal_unit(&m.x, &vflat) {
            if m.fx < best.0 {
                best = (m.fx, w.clone());
            }
            if m.fx <= opts.tol {
                let w = AlgebraVector::from_flat(dz, &w);
                if let Some(found) = finish(&w, FlatSource::Search { restart: *k }, evaluations)? {
                    return Ok(found);
                }
            }
        }
    }
    Err(Error::NotFound(Box::new(NotFoundReport {
        best_residual: best.0,
        best_direction: best.1,
        evaluations,
        tolerance: opts.tol,
    })))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::build_nq;

    fn tangent(base: GroupPoint, z: &[f64], h: &[f64]) -> TangentVector {
        let v = AlgebraVector::from_slices(z, h);
        TangentVector {
            base,
            velocity: v.scale(1.0 / v.norm()),
        }
    }

    #[test]
    fn nelder_mead_on_rosenbrock() {
        let f = |x: &[f64]| (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2);
        let m = nelder_mead(f, &[-1.2, 1.0], 0.5, 5000, 1e-20);
        assert!((m.x[0] - 1.0).abs() < 1e-4 && (m.x[1] - 1.0).abs() < 1e-4, "{:?}", m.x);
    }

    #[test]
    fn central_direction_gives_central_plane() {
        let a = build_nq(3).unwrap();
        let vtx = tangent(a.identity(), &[1.0, 0.0], &[0.0; 6]);
        let out = find_flat_detailed(&a, &vtx, &FlatSearchOptions::default()).unwrap();
        assert_eq!(out.source, FlatSource::Central);
        assert!(out.flat.is_verified(1e-7));
        assert!(out.flat.w().h.norm() == 0.0);
    }

    #[test]
    fn kernel_mixed_direction_from_catalog() {
        let a = build_nq(3).unwrap();
        let base = GroupPoint::from_slices(&[0.3, -0.1], &[0.2, 0.0, -0.4, 0.1, 0.0, 0.5]);
        let vtx = tangent(base, &[0.6, 0.0], &[0.0, 0.0, 0.0, 0.0, 0.8, 0.0]);
        let out = find_flat_detailed(&a, &vtx, &FlatSearchOptions::default()).unwrap();
        assert_eq!(out.source, FlatSource::Mixed);
        assert!(out.flat.is_verified(1e-7), "{:?}", out.flat.residual);
    }

    #[test]
    fn horizontal_direction_in_n3() {
        // e₁ commutes with e₂ and the third torus-free combination is absent,
        // so the horizontal plane span{e₁, e₂} is flat.
        let a = build_nq(3).unwrap();
        let vtx = tangent(a.identity(), &[0.0, 0.0], &[1.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
        let out = find_flat_detailed(&a, &vtx, &FlatSearchOptions::default()).unwrap();
        assert!(out.flat.is_verified(1e-7));
    }

    #[test]
    fn n2_generic_direction_is_not_found() {
        let a = build_nq(2).unwrap();
        let vtx = tangent(a.identity(), &[0.5], &[0.4, 0.3, -0.2, 0.6]);
        let opts = FlatSearchOptions {
            budget: 300,
            restarts: 2,
            ..Default::default()
        };
        match find_flat_through(&a, &vtx, &opts) {
            Err(Error::NotFound(r)) => {
                assert!(r.best_residual >= 1e-3, "{r:?}");
                assert_eq!(r.best_direction.len(), 5);
            }
            other => panic!("expected NotFound, got {other:?}"),
        }
    }

    #[test]
    fn search_is_deterministic() {
        let a = build_nq(2).unwrap();
        let vtx = tangent(a.identity(), &[0.5], &[0.4, 0.3, -0.2, 0.6]);
        let opts = FlatSearchOptions {
            budget: 120,
            restarts: 3,
            seed: 9,
            ..Default::default()
        };
        let r1 = find_flat_through(&a, &vtx, &opts).unwrap_err();
        let r2 = find_flat_through(&a, &vtx, &opts).unwrap_err();
        assert_eq!(format!("{r1:?}"), format!("{r2:?}"));
    }
}
