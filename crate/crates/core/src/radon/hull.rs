use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default tolerance of [`Polygon::contains`].
pub const HULL_TOL: f64 = 1e-12;

/// Convex polygon with counterclockwise vertices; may degenerate to a
/// segment (2 vertices) or a point (1 vertex).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Polygon {
    pub vertices: Vec<[f64; 2]>,
}

fn cross(o: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}

fn dist_to_segment(p: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    let (dx, dy) = (b[0] - a[0], b[1] - a[1]);
    let len2 = dx * dx + dy * dy;
    let s = if len2 > 0.0 {
        (((p[0] - a[0]) * dx + (p[1] - a[1]) * dy) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    (p[0] - a[0] - s * dx).hypot(p[1] - a[1] - s * dy)
}

/// Andrew's monotone chain; collinear points are dropped.
pub fn convex_hull(points: &[[f64; 2]]) -> Result<Polygon> {
    if points.is_empty() {
        return Err(Error::Argument("convex_hull needs at least one point".into()));
    }
    if points.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::Argument("convex_hull needs finite points".into()));
    }
    let mut pts = points.to_vec();
    pts.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
    pts.dedup();
    if pts.len() < 3 {
        return Ok(Polygon { vertices: pts });
    }
    let mut hull: Vec<[f64; 2]> = Vec::with_capacity(2 * pts.len());
    for pass in 0..2 {
        let start = hull.len();
        let iter: Box<dyn Iterator<Item = &[f64; 2]>> = if pass == 0 {
            Box::new(pts.iter())
        } else {
            Box::new(pts.iter().rev())
        };
        for &p in iter {
            while hull.len() >= start + 2 && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0.0 {
                hull.pop();
            }
            hull.push(p);
        }
        hull.pop();
    }
    Ok(Polygon { vertices: hull })
}

impl Polygon {
    pub fn contains(&self, p: [f64; 2]) -> bool {
        self.contains_tol(p, HULL_TOL)
    }

    /// Membership up to distance `tol` (relative to the polygon's scale for
    /// the edge tests).
    pub fn contains_tol(&self, p: [f64; 2], tol: f64) -> bool {
        let v = &self.vertices;
        match v.len() {
            0 => false,
            1 => (p[0] - v[0][0]).hypot(p[1] - v[0][1]) <= tol,
            2 => dist_to_segment(p, v[0], v[1]) <= tol,
            n => (0..n).all(|i| {
                let (a, b) = (v[i], v[(i + 1) % n]);
                let len = (b[0] - a[0]).hypot(b[1] - a[1]);
                cross(a, b, p) >= -tol * len
            }),
        }
    }

    pub fn area(&self) -> f64 {
        let v = &self.vertices;
        let n = v.len();
        if n < 3 {
            return 0.0;
        }
        0.5 * (0..n).map(|i| cross([0.0, 0.0], v[i], v[(i + 1) % n])).sum::<f64>()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn square() {
        let sq = [[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]];
        let h = convex_hull(&sq).unwrap();
        assert_eq!(h.vertices, vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]]);
        let mut more = sq.to_vec();
        more.extend([[0.5, 0.5], [0.2, 0.9], [0.5, 0.0], [1.0, 0.3]]);
        assert_eq!(convex_hull(&more).unwrap().vertices.len(), 4);
        assert!(h.contains([0.5, 0.5]) && h.contains([1.0, 0.5]) && !h.contains([1.0 + 1e-9, 0.5]));
        assert!((h.area() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn degenerate_inputs() {
        assert!(convex_hull(&[]).is_err());
        let p = convex_hull(&[[1.0, 2.0], [1.0, 2.0]]).unwrap();
        assert_eq!(p.vertices.len(), 1);
        let seg = convex_hull(&[[0.0, 0.0], [1.0, 1.0], [2.0, 2.0]]).unwrap();
        assert_eq!(seg.vertices, vec![[0.0, 0.0], [2.0, 2.0]]);
        assert!(seg.contains([0.5, 0.5]) && !seg.contains([0.5, 0.6]));
    }

    /// Brute force: a point is a hull vertex iff it is not in the closed
    /// triangle of any three other points or strictly inside a segment.
    fn brute_vertices(pts: &[[f64; 2]]) -> Vec<[f64; 2]> {
        let n = pts.len();
        let mut out = Vec::new();
        'outer: for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    for l in 0..n {
                        if [j, k, l].contains(&i) || j == k || k == l || j == l {
                            continue;
                        }
                        let (a, b, c, p) = (pts[j], pts[k], pts[l], pts[i]);
                        let s = cross(a, b, c).signum();
                        if s != 0.0
                            && cross(a, b, p) * s >= 0.0
                            && cross(b, c, p) * s >= 0.0
                            && cross(c, a, p) * s >= 0.0
                        {
                            continue 'outer;
                        }
                    }
                }
            }
            out.push(pts[i]);
        }
        out.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
        out
    }

    #[test]
    fn matches_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..5 {
            let pts: Vec<[f64; 2]> = (0..40).map(|_| [rng.random::<f64>(), rng.random::<f64>()]).collect();
            let mut h = convex_hull(&pts).unwrap().vertices;
            h.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
            assert_eq!(h, brute_vertices(&pts));
        }
    }
}
