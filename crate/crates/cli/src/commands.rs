use std::path::{Path, PathBuf};

use nilxray::algebra::{build_nq, AlgebraVector, GroupPoint, StepTwoAlgebra};
use nilxray::flats::{
    find_flat_detailed, reduce_and_invert, CosetAtlas, FieldOracleN, FlatAtlas, FlatSearchOptions, PhantomN, ScalarFieldN,
    TangentVector, GEODESIC_TOL,
};
use nilxray::geodesics::{
    case_samples, escape_bound_check, random_unit_velocity, EscapeCase, GeodesicN, ESCAPE_SLACK, Z_QUAD_TOL,
};
use nilxray::radon::{
    offset_grid, radon_invert_with, sample_sinogram, theta_grid, FieldOracle, InversionOptions, Phantom2D,
    ScalarField2D, LINE_TOL,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{AtlasKind, ExperimentConfig, PhantomSection};
use crate::error::{CliError, CliResult};
use crate::io::{self, f64_str, json_document, Meta};
use crate::phantoms::{self, Built, SpaceSpec};

/// Effective settings of one run.
pub struct Context {
    pub config: ExperimentConfig,
    pub seed: u64,
    pub out: PathBuf,
}

impl Context {
    fn meta(&self, command: &str) -> Meta {
        Meta::new(command, &self.config, self.seed)
    }

    fn tol_or(&self, default: f64) -> f64 {
        self.config.tol.unwrap_or(default)
    }
}

fn section<'a, T>(s: &'a Option<T>, name: &str) -> CliResult<&'a T> {
    s.as_ref().ok_or_else(|| CliError::Config(format!("missing [{name}] section")))
}

fn to_value(x: &impl Serialize) -> Value {
    serde_json::to_value(x).expect("serialisable")
}

pub fn cmd_phantom(ctx: &Context) -> CliResult<()> {
    let sec = section(&ctx.config.phantom, "phantom")?;
    let (built, id) = phantoms::build(sec, ctx.seed)?;
    let meta = ctx.meta("phantom").normalization(normalization_of(built.space())?.as_deref());
    let doc = json_document(
        &meta,
        vec![("id", json!(id)), ("space", built.space().to_json()), ("phantom", built.payload())],
    );
    io::write_text(&ctx.out, &doc)
}

fn normalization_of(space: SpaceSpec) -> CliResult<Option<String>> {
    Ok(match space {
        SpaceSpec::Nq(_) => space.algebra()?.normalization().map(str::to_string),
        _ => None,
    })
}

/// Planar phantom from a file or, failing that, the `[phantom]` section.
fn load_plane_phantom(ctx: &Context, path: Option<&Path>) -> CliResult<(Phantom2D, String)> {
    match path {
        Some(p) => Ok((io::read_phantom2d(p)?, p.display().to_string())),
        None => match phantoms::build(section(&ctx.config.phantom, "phantom")?, ctx.seed)? {
            (Built::Plane(p), id) => Ok((p, id)),
            _ => Err(CliError::Config("this command needs a planar phantom".into())),
        },
    }
}

pub fn cmd_forward(ctx: &Context) -> CliResult<()> {
    let sec = section(&ctx.config.forward, "forward")?;
    let (phantom, id) = load_plane_phantom(ctx, sec.phantom.as_deref())?;
    let p_max = sec.p_max.unwrap_or_else(|| phantom.support().radius);
    if !(p_max > 0.0) {
        return Err(CliError::Config("p_max must be positive (empty phantom support?)".into()));
    }
    let tol = ctx.tol_or(LINE_TOL);
    let oracle = FieldOracle { field: &phantom, tol };
    let mut sino = sample_sinogram(&oracle, &theta_grid(sec.n_theta), &offset_grid(sec.n_offsets, p_max))?;
    sino.meta.field_id = id;
    sino.meta.quad_tol = tol;
    let meta = ctx.meta("forward").tol("line_quad_tol", tol);
    io::write_text(&ctx.out, &io::sinogram_csv(&sino, &meta))
}

#[derive(Debug, Clone, Serialize)]
pub struct PointResult {
    pub x: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub f_true: Option<f64>,
    pub f_rec: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub abs_err: Option<f64>,
    #[serde(flatten)]
    pub extra: serde_json::Map<String, Value>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ErrorSummary {
    pub n_points: usize,
    pub max_abs_err: Option<f64>,
    pub mean_abs_err: Option<f64>,
    /// Largest `|f|` seen at bump centres and at the points (a lower bound on `max |f|`).
    pub max_abs_f: Option<f64>,
    /// `max_abs_err / max_abs_f`.
    pub rel_max_err: Option<f64>,
}

pub fn summarize(points: &[PointResult], max_abs_f: Option<f64>) -> ErrorSummary {
    let errs: Vec<f64> = points.iter().filter_map(|p| p.abs_err).collect();
    let (max, mean) = if errs.is_empty() {
        (None, None)
    } else {
        (
            Some(errs.iter().copied().fold(0.0, f64::max)),
            Some(errs.iter().sum::<f64>() / errs.len() as f64),
        )
    };
    ErrorSummary {
        n_points: points.len(),
        max_abs_err: max,
        mean_abs_err: mean,
        max_abs_f,
        rel_max_err: match (max, max_abs_f) {
            (Some(e), Some(m)) if m > 0.0 => Some(e / m),
            _ => None,
        },
    }
}

pub fn cmd_invert(ctx: &Context) -> CliResult<()> {
    let sec = section(&ctx.config.invert, "invert")?;
    let sino = io::read_sinogram(&sec.sinogram)?;
    let oracle = sino.oracle()?;
    let phantom = sec.phantom.as_deref().map(io::read_phantom2d).transpose()?;
    let points: Vec<[f64; 2]> = match &sec.points {
        Some(p) => p.clone(),
        None => {
            let n = sec.grid_n;
            let step = 2.0 * sec.extent / (n - 1) as f64;
            let c = |k: usize| if k + 1 == n { sec.extent } else { -sec.extent + step * k as f64 };
            (0..n).flat_map(|i| (0..n).map(move |j| [c(j), c(i)])).collect()
        }
    };
    let dp = sino.offsets[1] - sino.offsets[0];
    let p_max = *sino.offsets.last().expect("validated sinogram");
    let reach = points.iter().map(|x| x[0].hypot(x[1])).fold(0.0, f64::max);
    // every line within t_max of a point must cover the offsets that carry data
    let t_max = sec.t_max.unwrap_or(p_max + reach);
    let grid = ((t_max / (sec.t_step_factor * dp)).ceil() as usize).max(4);
    let opts = InversionOptions::new(t_max, grid).with_dirs(sec.n_dirs);
    let recs = points
        .par_iter()
        .map(|&x| radon_invert_with(&oracle, x, &opts).map_err(CliError::at(format!("point {x:?}"))))
        .collect::<CliResult<Vec<_>>>()?;
    let results: Vec<PointResult> = points
        .iter()
        .zip(&recs)
        .map(|(&x, r)| {
            let f_true = phantom.as_ref().map(|p| p.value(x));
            let mut extra = serde_json::Map::new();
            if r.tail_warning {
                extra.insert("tail_warning".into(), json!(true));
            }
            PointResult {
                x: x.to_vec(),
                f_true,
                f_rec: r.value,
                abs_err: f_true.map(|f| (f - r.value).abs()),
                extra,
            }
        })
        .collect();
    let max_f = phantom.as_ref().map(|p| phantoms::sampled_max_2d(p, &points));
    let meta = ctx
        .meta("invert")
        .tol("sinogram_line_quad_tol", sino.meta.quad_tol)
        .tol("tail_tol", opts.tail_tol);
    let doc = json_document(
        &meta,
        vec![
            ("settings", json!({"t_max": t_max, "grid": grid, "n_dirs": sec.n_dirs, "sinogram": sec.sinogram})),
            ("summary", to_value(&summarize(&results, max_f))),
            ("points", to_value(&results)),
        ],
    );
    io::write_text(&ctx.out, &doc)
}

pub const ESCAPE_HEADER: &str = "seed,t,lhs_norm_sq,bound,margin,case_tag,case_margin";

pub fn cmd_escape(ctx: &Context) -> CliResult<()> {
    let sec = section(&ctx.config.escape, "escape")?;
    let alg = build_nq(sec.q)?;
    let ts: Vec<f64> = (1..=sec.n_t).map(|k| sec.t_max * k as f64 / sec.n_t as f64).collect();
    let row = |seed: u64, r: &nilxray::geodesics::EscapeRow| {
        format!(
            "{seed},{},{},{},{},{},{}\n",
            f64_str(r.t),
            f64_str(r.lhs_norm_sq),
            f64_str(r.bound),
            f64_str(r.margin),
            r.case.tag(),
            f64_str(r.case_margin)
        )
    };
    let sweep: Vec<String> = (0..sec.n_geodesics as u64)
        .into_par_iter()
        .map(|k| -> CliResult<String> {
            let seed = ctx.seed.wrapping_add(k);
            let v = random_unit_velocity(&alg, &mut ChaCha8Rng::seed_from_u64(seed));
            let what = || format!("geodesic with seed {seed}");
            let g = GeodesicN::from_identity(&alg, v.z, v.h).map_err(CliError::at(what()))?;
            let rep = escape_bound_check(&g, &ts).map_err(CliError::at(what()))?;
            Ok(rep.rows.iter().map(|r| row(seed, r)).collect())
        })
        .collect::<CliResult<_>>()?;
    let cases = [EscapeCase::CentralHeavy, EscapeCase::KernelDominant, EscapeCase::Early, EscapeCase::Late];
    let per = sec.cases_per_kind as u64;
    let constructed: Vec<String> = (0..4 * per)
        .into_par_iter()
        .map(|i| -> CliResult<String> {
            let seed = ctx.seed.wrapping_add(sec.n_geodesics as u64 + i);
            let case = cases[(i / per) as usize];
            let what = || format!("case ({}) sample with seed {seed}", case.tag());
            let s = case_samples(&alg, case, 1, sec.t_max, &mut ChaCha8Rng::seed_from_u64(seed))
                .map_err(CliError::at(what()))?
                .remove(0);
            let g = GeodesicN::from_identity(&alg, s.velocity.z, s.velocity.h).map_err(CliError::at(what()))?;
            let rep = escape_bound_check(&g, &[s.t]).map_err(CliError::at(what()))?;
            Ok(rep.rows.iter().map(|r| row(seed, r)).collect())
        })
        .collect::<CliResult<_>>()?;
    let meta = ctx
        .meta("escape")
        .tol("escape_slack", ESCAPE_SLACK)
        .tol("z_quad_tol", Z_QUAD_TOL)
        .normalization(alg.normalization());
    let mut out = String::new();
    out.push_str(&format!("# meta: {}\n", serde_json::to_string(&meta).expect("meta serialises")));
    out.push_str(&format!("# algebra: N_{} (dim h = {})\n", sec.q, alg.dim_h()));
    out.push_str(ESCAPE_HEADER);
    out.push('\n');
    for s in sweep.iter().chain(&constructed) {
        out.push_str(s);
    }
    io::write_text(&ctx.out, &out)
}

fn unit(alg: &StepTwoAlgebra, flat: &[f64]) -> CliResult<AlgebraVector> {
    if flat.len() != alg.dim() {
        return Err(CliError::Config(format!(
            "direction {flat:?} has length {}, expected {}",
            flat.len(),
            alg.dim()
        )));
    }
    let v = AlgebraVector::from_flat(alg.dim_z(), flat);
    let n = v.norm();
    if !(n > 0.0 && n.is_finite()) {
        return Err(CliError::Config(format!("direction {flat:?} cannot be normalised")));
    }
    Ok(v.scale(1.0 / n))
}

/// Central, horizontal and (for `q ≥ 3`) kernel-mixed directions of `N_q`.
fn structured_directions(alg: &StepTwoAlgebra, q: usize) -> Vec<Vec<f64>> {
    let (dz, n) = (alg.dim_z(), alg.dim());
    let e = |i: usize| {
        let mut v = vec![0.0; n];
        v[i] = 1.0;
        v
    };
    let mut out = vec![e(0), e(dz)];
    if q >= 3 {
        // the first torus direction fixes the third complex coordinate
        let mut v = vec![0.0; n];
        v[0] = 0.6;
        v[dz + 4] = 0.8;
        out.push(v);
    }
    out
}

pub fn cmd_flats(ctx: &Context) -> CliResult<()> {
    let sec = section(&ctx.config.flats, "flats")?;
    let alg = build_nq(sec.q)?;
    let base = match &sec.base {
        Some(b) => {
            if b.len() != alg.dim() {
                return Err(CliError::Config(format!("flats.base needs length {}", alg.dim())));
            }
            GroupPoint::exp(AlgebraVector::from_flat(alg.dim_z(), b))
        }
        None => alg.identity(),
    };
    let mut dirs = match &sec.tangents {
        Some(t) => t.clone(),
        None => structured_directions(&alg, sec.q),
    };
    let mut rng = ChaCha8Rng::seed_from_u64(ctx.seed);
    for _ in 0..sec.n_random {
        dirs.push(random_unit_velocity(&alg, &mut rng).to_flat());
    }
    let opts = FlatSearchOptions {
        tol: ctx.tol_or(1e-7),
        budget: sec.budget,
        restarts: sec.restarts,
        seed: ctx.seed,
    };
    let mut atlas = Vec::new();
    let mut diagnostics = Vec::new();
    let mut missing = 0;
    for (i, d) in dirs.iter().enumerate() {
        let velocity = unit(&alg, d)?;
        let vtx = TangentVector {
            base: base.clone(),
            velocity: velocity.clone(),
        };
        match find_flat_detailed(&alg, &vtx, &opts) {
            Ok(found) => {
                diagnostics.push(json!({
                    "index": i, "tangent": velocity.to_flat(), "status": "found",
                    "source": found.source, "residual": found.flat.residual, "evaluations": found.evaluations,
                }));
                atlas.push(found.flat.to_record());
            }
            Err(nilxray::Error::NotFound(r)) => {
                missing += 1;
                diagnostics.push(json!({
                    "index": i, "tangent": velocity.to_flat(), "status": "not_found",
                    "best_residual": r.best_residual, "best_direction": r.best_direction,
                    "evaluations": r.evaluations, "tolerance": r.tolerance,
                }));
            }
            Err(e) => return Err(CliError::at(format!("direction {i}"))(e)),
        }
    }
    let meta = ctx
        .meta("flats")
        .tol("flat_tol", opts.tol)
        .normalization(alg.normalization());
    let doc = json_document(
        &meta,
        vec![
            ("space", SpaceSpec::Nq(sec.q).to_json()),
            ("atlas", to_value(&atlas)),
            ("diagnostics", Value::Array(diagnostics)),
        ],
    );
    io::write_text(&ctx.out, &doc)?;
    if missing > 0 {
        return Err(CliError::FlatsNotFound {
            missing,
            total: dirs.len(),
        });
    }
    Ok(())
}

/// Group phantom and its space, from a file or the `[phantom]` section.
fn load_group_phantom(ctx: &Context, path: Option<&Path>) -> CliResult<(SpaceSpec, PhantomN)> {
    match path {
        Some(p) => {
            let doc = io::read_json(p)?;
            let space = doc
                .get("space")
                .and_then(SpaceSpec::from_json)
                .ok_or_else(|| CliError::parse(p, "phantom document lacks a \"space\" record"))?;
            let phantom = if space == SpaceSpec::Plane {
                to_group(&io::read_phantom2d(p)?)
            } else {
                io::read_phantom_n(p)?
            };
            Ok((space, phantom))
        }
        None => {
            let sec: &PhantomSection = section(&ctx.config.phantom, "phantom")?;
            match phantoms::build(sec, ctx.seed)? {
                (Built::Plane(p), _) => Ok((SpaceSpec::Plane, to_group(&p))),
                (Built::Group(s, p), _) => Ok((s, p)),
            }
        }
    }
}

fn to_group(p: &Phantom2D) -> PhantomN {
    PhantomN {
        dim_z: 0,
        dim_h: 2,
        bumps: p
            .bumps
            .iter()
            .map(|b| nilxray::flats::BumpN {
                center: b.center.to_vec(),
                amplitude: b.amplitude,
                radius: b.radius,
                profile: b.profile,
                width: b.width,
            })
            .collect(),
    }
}

fn random_points(dim: usize, n: usize, radius: f64, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| loop {
            let x: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..=1.0)).collect();
            if x.iter().map(|v| v * v).sum::<f64>() <= 1.0 {
                break x.iter().map(|v| v * radius).collect();
            }
        })
        .collect()
}

pub fn cmd_reduce(ctx: &Context) -> CliResult<()> {
    let sec = section(&ctx.config.reduce, "reduce")?;
    let (space, phantom) = load_group_phantom(ctx, sec.phantom.as_deref())?;
    let alg = space.algebra()?;
    let kind = sec.atlas.unwrap_or(match space {
        SpaceSpec::Plane => AtlasKind::Plane,
        SpaceSpec::Euclidean(_) => AtlasKind::Product,
        SpaceSpec::Nq(_) => AtlasKind::Central,
    });
    let atlas = match kind {
        AtlasKind::Plane => CosetAtlas::plane(&alg)?,
        AtlasKind::Product => CosetAtlas::product(&alg, sec.split.unwrap_or(alg.dim() / 2))?,
        AtlasKind::Central => CosetAtlas::central(&alg)?,
    };
    let flat_points = match &sec.points {
        Some(p) => p.clone(),
        None => random_points(alg.dim(), sec.n_points, sec.point_radius, ctx.seed),
    };
    let xs = flat_points
        .iter()
        .map(|p| {
            if p.len() != alg.dim() {
                return Err(CliError::Config(format!("point {p:?} needs length {}", alg.dim())));
            }
            Ok(GroupPoint::exp(AlgebraVector::from_flat(alg.dim_z(), p)))
        })
        .collect::<CliResult<Vec<_>>>()?;
    // Preimages lie within |x| of the flat origin and the restricted field
    // within the support's outer radius of it.
    let reach = xs.iter().map(|x| x.coords.norm()).fold(0.0, f64::max);
    let ball = phantom.support();
    let t_max = sec
        .t_max
        .unwrap_or(reach + ball.center.iter().map(|c| c * c).sum::<f64>().sqrt() + ball.radius);
    let mut opts = nilxray::flats::ReductionOptions::new(t_max, sec.grid, sec.n_dirs);
    opts.flat_tol = ctx.tol_or(opts.flat_tol);
    let oracle = FieldOracleN::new(&phantom);
    let recs = xs
        .par_iter()
        .map(|x| {
            reduce_and_invert(&oracle, &atlas as &dyn FlatAtlas<'_>, x, &opts)
                .map_err(CliError::at(format!("point {:?}", x.coords.to_flat())))
        })
        .collect::<CliResult<Vec<_>>>()?;
    let results: Vec<PointResult> = xs
        .iter()
        .zip(&recs)
        .map(|(x, r)| {
            let f = phantom.value(x);
            let mut extra = serde_json::Map::new();
            extra.insert("preimage".into(), json!(r.preimage));
            extra.insert("flat_residual".into(), json!(r.flat.residual));
            if r.inversion.tail_warning {
                extra.insert("tail_warning".into(), json!(true));
            }
            PointResult {
                x: x.coords.to_flat(),
                f_true: Some(f),
                f_rec: r.value,
                abs_err: Some((f - r.value).abs()),
                extra,
            }
        })
        .collect();
    let max_f = phantoms::sampled_max_n(&phantom, &xs);
    let meta = ctx
        .meta("reduce")
        .tol("flat_tol", opts.flat_tol)
        .tol("newton_tol", opts.newton_tol)
        .tol("geodesic_quad_tol", GEODESIC_TOL)
        .normalization(alg.normalization());
    let doc = json_document(
        &meta,
        vec![
            ("space", space.to_json()),
            (
                "settings",
                json!({"atlas": kind, "t_max": t_max, "grid": sec.grid, "n_dirs": sec.n_dirs}),
            ),
            ("summary", to_value(&summarize(&results, Some(max_f)))),
            ("points", to_value(&results)),
        ],
    );
    io::write_text(&ctx.out, &doc)
}

#[derive(Debug, Clone, Default, Serialize)]
struct EscapeSummary {
    rows: usize,
    min_margin: f64,
    min_case_margin: f64,
    violations: usize,
    case_counts: std::collections::BTreeMap<String, usize>,
}

fn escape_summary(path: &Path, text: &str) -> CliResult<EscapeSummary> {
    let mut rdr = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(text.as_bytes());
    let mut s = EscapeSummary {
        min_margin: f64::INFINITY,
        min_case_margin: f64::INFINITY,
        ..Default::default()
    };
    for rec in rdr.deserialize::<(u64, f64, f64, f64, f64, String, f64)>() {
        let (_, _, _, _, margin, tag, case_margin) = rec.map_err(|e| CliError::parse(path, e))?;
        s.rows += 1;
        s.min_margin = s.min_margin.min(margin);
        s.min_case_margin = s.min_case_margin.min(case_margin);
        if margin < -ESCAPE_SLACK || case_margin < -ESCAPE_SLACK {
            s.violations += 1;
        }
        *s.case_counts.entry(tag).or_default() += 1;
    }
    Ok(s)
}

pub fn cmd_report(ctx: &Context) -> CliResult<()> {
    let sec = section(&ctx.config.report, "report")?;
    let mut tables = Vec::new();
    for path in &sec.inputs {
        let text = io::read_text(path)?;
        let body = text.lines().find(|l| !l.starts_with('#')).unwrap_or("");
        if body.starts_with("seed,") {
            let s = escape_summary(path, &text)?;
            tables.push(json!({"input": path, "kind": "escape", "summary": s}));
            continue;
        }
        let doc: Value = serde_json::from_str(&text).map_err(|e| CliError::parse(path, e))?;
        let points = doc
            .get("points")
            .and_then(Value::as_array)
            .ok_or_else(|| CliError::parse(path, "not a reconstruction report or escape sweep"))?;
        let errs: Vec<f64> = points.iter().filter_map(|p| p.get("abs_err").and_then(Value::as_f64)).collect();
        let max_f = doc.pointer("/summary/max_abs_f").and_then(Value::as_f64);
        let max_err = errs.iter().copied().fold(0.0, f64::max);
        tables.push(json!({
            "input": path,
            "kind": doc.pointer("/meta/command").cloned().unwrap_or(Value::Null),
            "summary": {
                "n_points": points.len(),
                "max_abs_err": max_err,
                "mean_abs_err": if errs.is_empty() { 0.0 } else { errs.iter().sum::<f64>() / errs.len() as f64 },
                "max_abs_f": max_f,
                "rel_max_err": max_f.filter(|m| *m > 0.0).map(|m| max_err / m),
            }
        }));
    }
    let doc = json_document(&ctx.meta("report"), vec![("tables", Value::Array(tables))]);
    io::write_text(&ctx.out, &doc)
}
