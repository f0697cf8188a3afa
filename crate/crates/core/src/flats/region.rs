use serde::{Deserialize, Serialize};

use crate::algebra::GroupPoint;
use crate::error::{Error, Result};
use crate::flats::{flat_project, FlatImmersion};
use crate::radon::convex_hull;

/// A compact set known through samples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompactRegion {
    pub points: Vec<GroupPoint>,
    /// Every sample lies within `radius` of `center` in coordinates.
    pub center: GroupPoint,
    pub radius: f64,
}

impl CompactRegion {
    /// Bounding ball about the coordinate centroid.
    pub fn from_points(points: Vec<GroupPoint>) -> Result<Self> {
        let Some(first) = points.first() else {
            return Err(Error::Argument("a compact region needs at least one sample".into()));
        };
        let (dz, _) = first.coords.dims();
        let n = first.coords.to_flat().len();
        let mut c = vec![0.0; n];
        for p in &points {
            if p.coords.to_flat().len() != n {
                return Err(Error::Argument("region samples have mixed dimensions".into()));
            }
            for (ci, x) in c.iter_mut().zip(p.coords.to_flat()) {
                *ci += x / points.len() as f64;
            }
        }
        let center = GroupPoint::exp(crate::algebra::AlgebraVector::from_flat(dz, &c));
        let radius = points.iter().map(|p| p.coord_distance(&center)).fold(0.0, f64::max);
        Ok(Self { points, center, radius })
    }

    /// Whether `x` is within `tol` of a sample.
    pub fn contains(&self, x: &GroupPoint, tol: f64) -> bool {
        self.points.iter().any(|p| p.coord_distance(x) <= tol)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Parameter grid laid on each flat around the preimage of `p`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConvGrid {
    pub half_width: f64,
    /// Points per side.
    pub n: usize,
    /// Coordinate distance within which a point counts as lying on a flat.
    pub member_tol: f64,
}

impl ConvGrid {
    pub fn new(half_width: f64, n: usize) -> Self {
        Self {
            half_width,
            n,
            member_tol: 1e-8,
        }
    }
}

/// Sampled `conv_p(K)`: the grid points `x` on the given flats through `p`
/// such that, for every one of those flats containing `x`, the preimage of
/// `x` lies in the convex hull of the preimages of the samples of `K` on
/// that flat. Points shared by several flats are reported once.
pub fn conv_p_region(k: &CompactRegion, p: &GroupPoint, flats: &[FlatImmersion<'_>], grid: &ConvGrid) -> Result<CompactRegion> {
    if flats.is_empty() {
        return Err(Error::Argument("conv_p_region needs at least one flat".into()));
    }
    if grid.n < 2 || !(grid.half_width > 0.0) || !(grid.member_tol > 0.0) {
        return Err(Error::Argument(format!("invalid conv_p grid {grid:?}")));
    }
    let tol = grid.member_tol;
    let on_flat = |f: &FlatImmersion<'_>, x: &GroupPoint| -> Result<Option<[f64; 2]>> {
        let (q, r) = flat_project(f, x, 0.1 * tol)?;
        Ok((r <= tol).then_some(q))
    };

    let mut centers = Vec::with_capacity(flats.len());
    let mut hulls = Vec::with_capacity(flats.len());
    for (i, f) in flats.iter().enumerate() {
        let Some(q) = on_flat(f, p)? else {
            return Err(Error::Argument(format!("flat {i} does not pass through p")));
        };
        centers.push(q);
        let mut pulled = Vec::new();
        for x in &k.points {
            if let Some(q) = on_flat(f, x)? {
                pulled.push(q);
            }
        }
        hulls.push(if pulled.is_empty() { None } else { Some(convex_hull(&pulled)?) });
    }
    // Hull membership is tested at a tolerance matched to the grid spacing.
    let hull_tol = 1e-9 * grid.half_width.max(1.0);

    let mut kept: Vec<GroupPoint> = Vec::new();
    for (i, f) in flats.iter().enumerate() {
        let step = 2.0 * grid.half_width / (grid.n - 1) as f64;
        for a in 0..grid.n {
            for b in 0..grid.n {
                let q = [
                    centers[i][0] - grid.half_width + step * a as f64,
                    centers[i][1] - grid.half_width + step * b as f64,
                ];
                let x = f.eval(q[0], q[1])?;
                if kept.iter().any(|y| y.coord_distance(&x) <= tol) {
                    continue;
                }
                let mut inside = true;
                for (j, g) in flats.iter().enumerate() {
                    let qj = if j == i { Some(q) } else { on_flat(g, &x)? };
                    if let Some(qj) = qj {
                        if !hulls[j].as_ref().is_some_and(|h| h.contains_tol(qj, hull_tol)) {
                            inside = false;
                            break;
                        }
                    }
                }
                if inside {
                    kept.push(x);
                }
            }
        }
    }
    if kept.is_empty() {
        return Ok(CompactRegion {
            points: kept,
            center: p.clone(),
            radius: 0.0,
        });
    }
    CompactRegion::from_points(kept)
}
