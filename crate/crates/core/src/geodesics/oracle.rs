//! Fixed-step RK4 integration of the geodesic system, used as an
//! independent check on the closed form.

use nalgebra::DVector;

use crate::algebra::GroupPoint;
use crate::error::{Error, Result};
use crate::geodesics::GeodesicN;

#[derive(Debug, Clone)]
pub struct OdeTrajectory {
    pub times: Vec<f64>,
    /// Points `γ(t)` (base point applied).
    pub points: Vec<GroupPoint>,
    /// `‖h′(t)‖` along the flow.
    pub h_speed: Vec<f64>,
}

impl OdeTrajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

/// Integrate `h′ = v, v′ = Z v, z′ = z₀ + ½[h, v]` from `h = 0, v = h₀, z = 0`
/// with `steps` RK4 steps up to `t_end`.
pub fn ode_oracle(g: &GeodesicN<'_>, t_end: f64, steps: usize) -> Result<OdeTrajectory> {
    if steps < 2 {
        return Err(Error::Argument(format!("ode_oracle needs at least 2 steps, got {steps}")));
    }
    let alg = g.algebra();
    let zmat = alg.j_action(g.z0())?;
    let (nh, nz) = (alg.dim_h(), alg.dim_z());
    let dt = t_end / steps as f64;

    // state = (h, v, z)
    let rhs = |s: &DVector<f64>| -> DVector<f64> {
        let h = s.rows(0, nh);
        let v = s.rows(nh, nh);
        let mut out = DVector::zeros(2 * nh + nz);
        out.rows_mut(0, nh).copy_from(&v);
        out.rows_mut(nh, nh).copy_from(&(&zmat * v));
        let mut br = vec![0.0; nz];
        alg.bracket_into(h.clone_owned().as_slice(), v.clone_owned().as_slice(), &mut br);
        for a in 0..nz {
            out[2 * nh + a] = g.z0()[a] + 0.5 * br[a];
        }
        out
    };

    let mut s = DVector::zeros(2 * nh + nz);
    s.rows_mut(nh, nh).copy_from(g.h0());
    let mut times = Vec::with_capacity(steps + 1);
    let mut points = Vec::with_capacity(steps + 1);
    let mut h_speed = Vec::with_capacity(steps + 1);
    let record = |s: &DVector<f64>, t: f64, times: &mut Vec<f64>, points: &mut Vec<GroupPoint>, hs: &mut Vec<f64>| {
        let local = GroupPoint::new(s.rows(2 * nh, nz).clone_owned(), s.rows(0, nh).clone_owned());
        let p = if g.based_at_identity() {
            local
        } else {
            alg.bch_multiply(g.base(), &local).expect("dimensions checked")
        };
        times.push(t);
        points.push(p);
        hs.push(s.rows(nh, nh).norm());
    };
    record(&s, 0.0, &mut times, &mut points, &mut h_speed);
    for k in 0..steps {
        let k1 = rhs(&s);
        let k2 = rhs(&(&s + &k1 * (0.5 * dt)));
        let k3 = rhs(&(&s + &k2 * (0.5 * dt)));
        let k4 = rhs(&(&s + &k3 * dt));
        s += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (dt / 6.0);
        let t = if k + 1 == steps { t_end } else { dt * (k + 1) as f64 };
        record(&s, t, &mut times, &mut points, &mut h_speed);
    }
    Ok(OdeTrajectory { times, points, h_speed })
}
