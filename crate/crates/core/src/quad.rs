//! Globally adaptive Gauss–Kronrod (G10/K21) quadrature, scalar and
//! vector-valued.
//!
//! The interval with the largest local error estimate is bisected until the
//! summed estimate drops below `max(abs_tol, rel_tol·|I|)`. Local errors are
//! the raw `|K21 − G10|` difference, which overestimates the error of the
//! Kronrod value by several orders of magnitude on smooth integrands.

use crate::error::{Error, Result};

const XGK: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689,
    0.973_906_528_517_171_720_077_964_012_084,
    0.930_157_491_355_708_226_001_207_180_060,
    0.865_063_366_688_984_510_732_096_688_423,
    0.780_817_726_586_416_897_063_717_578_345,
    0.679_409_568_299_024_406_234_327_365_115,
    0.562_757_134_668_604_683_339_000_099_273,
    0.433_395_394_129_247_190_799_265_943_166,
    0.294_392_862_701_460_198_131_126_603_104,
    0.148_874_338_981_631_210_884_826_001_130,
    0.0,
];

const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062,
    0.032_558_162_307_964_727_478_818_972_459,
    0.054_755_896_574_351_996_031_381_300_245,
    0.075_039_674_810_919_952_767_043_140_916,
    0.093_125_454_583_697_605_535_065_465_083,
    0.109_387_158_802_297_641_899_210_590_326,
    0.123_491_976_262_065_851_077_208_932_300,
    0.134_709_217_311_473_325_928_054_001_772,
    0.142_775_938_577_060_080_797_094_273_139,
    0.147_739_104_901_338_491_374_841_515_972,
    0.149_445_554_002_916_905_664_936_468_390,
];

/// Weights of the embedded 10-point Gauss rule, attached to `XGK[1], XGK[3], ..., XGK[9]`.
const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893,
    0.149_451_349_150_580_593_145_776_339_658,
    0.219_086_362_515_982_043_995_534_934_228,
    0.269_266_719_309_996_355_091_226_921_569,
    0.295_524_224_714_752_870_173_892_994_651,
];

#[derive(Debug, Clone, Copy)]
pub struct QuadOptions {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_intervals: usize,
    /// Number of equal panels the interval is split into before adapting.
    pub initial_panels: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        Self {
            abs_tol: 1e-10,
            rel_tol: 0.0,
            max_intervals: 4000,
            initial_panels: 1,
        }
    }
}

impl QuadOptions {
    pub fn abs(abs_tol: f64) -> Self {
        Self {
            abs_tol,
            ..Self::default()
        }
    }

    pub fn with_panels(mut self, panels: usize) -> Self {
        self.initial_panels = panels.max(1);
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadResult {
    pub value: f64,
    pub error: f64,
    pub evaluations: usize,
}

fn gk21<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = WGK[10] * fc;
    let mut g = 0.0;
    for j in 0..10 {
        let dx = h * XGK[j];
        let s = f(c - dx) + f(c + dx);
        k += WGK[j] * s;
        if j % 2 == 1 {
            g += WG[j / 2] * s;
        }
    }
    (k * h, ((k - g) * h).abs())
}

/// Integrate a scalar function over `[a, b]`.
pub fn integrate<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, opts: &QuadOptions) -> Result<QuadResult> {
    if a == b {
        return Ok(QuadResult {
            value: 0.0,
            error: 0.0,
            evaluations: 0,
        });
    }
    let n0 = opts.initial_panels.max(1);
    let mut segs: Vec<(f64, f64, f64, f64)> = Vec::with_capacity(n0 + 16);
    let step = (b - a) / n0 as f64;
    for i in 0..n0 {
        let lo = a + step * i as f64;
        let hi = if i + 1 == n0 { b } else { a + step * (i + 1) as f64 };
        let (v, e) = gk21(&mut f, lo, hi);
        segs.push((lo, hi, v, e));
    }
    let mut evals = 21 * n0;
    loop {
        let (value, error) = segs
            .iter()
            .fold((0.0, 0.0), |(v, e), s| (v + s.2, e + s.3));
        let target = opts.abs_tol.max(opts.rel_tol * value.abs());
        if error <= target {
            return Ok(QuadResult {
                value,
                error,
                evaluations: evals,
            });
        }
        if segs.len() >= opts.max_intervals {
            return Err(Error::Numeric(format!(
                "quadrature on [{a}, {b}] did not converge: achieved error {error:.3e}, requested {target:.3e}"
            )));
        }
        let (worst, _) = segs
            .iter()
            .enumerate()
            .fold((0, -1.0), |acc, (i, s)| if s.3 > acc.1 { (i, s.3) } else { acc });
        let (lo, hi, _, _) = segs[worst];
        let mid = 0.5 * (lo + hi);
        if !(mid > lo.min(hi) && mid < lo.max(hi)) {
            return Err(Error::Numeric(format!(
                "quadrature interval collapsed near {mid}: achieved error {error:.3e}"
            )));
        }
        let (v1, e1) = gk21(&mut f, lo, mid);
        let (v2, e2) = gk21(&mut f, mid, hi);
        evals += 42;
        segs[worst] = (lo, mid, v1, e1);
        segs.push((mid, hi, v2, e2));
    }
}

struct VecSeg {
    lo: f64,
    hi: f64,
    value: Vec<f64>,
    error: f64,
}

fn gk21_vec<F: FnMut(f64, &mut [f64])>(f: &mut F, dim: usize, a: f64, b: f64, buf: &mut [f64]) -> VecSeg {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let mut k = vec![0.0; dim];
    let mut g = vec![0.0; dim];
    f(c, buf);
    for i in 0..dim {
        k[i] = WGK[10] * buf[i];
    }
    for j in 0..10 {
        let dx = h * XGK[j];
        f(c - dx, buf);
        for i in 0..dim {
            k[i] += WGK[j] * buf[i];
            if j % 2 == 1 {
                g[i] += WG[j / 2] * buf[i];
            }
        }
        f(c + dx, buf);
        for i in 0..dim {
            k[i] += WGK[j] * buf[i];
            if j % 2 == 1 {
                g[i] += WG[j / 2] * buf[i];
            }
        }
    }
    let mut err: f64 = 0.0;
    for i in 0..dim {
        err = err.max(((k[i] - g[i]) * h).abs());
        k[i] *= h;
    }
    VecSeg {
        lo: a,
        hi: b,
        value: k,
        error: err,
    }
}

/// Integrate a vector-valued function over `[a, b]`; errors are measured in the max norm.
///
/// `f(t, out)` writes the integrand value at `t` into `out` (length `dim`).
pub fn integrate_vec<F: FnMut(f64, &mut [f64])>(
    mut f: F,
    dim: usize,
    a: f64,
    b: f64,
    opts: &QuadOptions,
) -> Result<(Vec<f64>, f64)> {
    if a == b || dim == 0 {
        return Ok((vec![0.0; dim], 0.0));
    }
    let mut buf = vec![0.0; dim];
    let n0 = opts.initial_panels.max(1);
    let step = (b - a) / n0 as f64;
    let mut segs: Vec<VecSeg> = (0..n0)
        .map(|i| {
            let lo = a + step * i as f64;
            let hi = if i + 1 == n0 { b } else { a + step * (i + 1) as f64 };
            gk21_vec(&mut f, dim, lo, hi, &mut buf)
        })
        .collect();
    loop {
        let error: f64 = segs.iter().map(|s| s.error).sum();
        let mut value = vec![0.0; dim];
        for s in &segs {
            for (v, x) in value.iter_mut().zip(&s.value) {
                *v += x;
            }
        }
        let scale = value.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let target = opts.abs_tol.max(opts.rel_tol * scale);
        if error <= target {
            return Ok((value, error));
        }
        if segs.len() >= opts.max_intervals {
            return Err(Error::Numeric(format!(
                "vector quadrature on [{a}, {b}] did not converge: achieved error {error:.3e}, requested {target:.3e}"
            )));
        }
        let worst = segs
            .iter()
            .enumerate()
            .fold((0, -1.0), |acc, (i, s)| if s.error > acc.1 { (i, s.error) } else { acc })
            .0;
        let (lo, hi) = (segs[worst].lo, segs[worst].hi);
        let mid = 0.5 * (lo + hi);
        if !(mid > lo.min(hi) && mid < lo.max(hi)) {
            return Err(Error::Numeric(format!(
                "vector quadrature interval collapsed near {mid}: achieved error {error:.3e}"
            )));
        }
        let left = gk21_vec(&mut f, dim, lo, mid, &mut buf);
        let right = gk21_vec(&mut f, dim, mid, hi, &mut buf);
        segs[worst] = left;
        segs.push(right);
    }
}
