//! TOML experiment configuration. Every section is optional; a command reads
//! only its own section (plus `[phantom]` where a phantom is built in place).
//! Relative paths are resolved against the working directory.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: Option<u64>,
    /// Overrides the principal tolerance of the command.
    pub tol: Option<f64>,
    pub workers: Option<usize>,
    pub out: Option<PathBuf>,
    pub phantom: Option<PhantomSection>,
    pub forward: Option<ForwardSection>,
    pub invert: Option<InvertSection>,
    pub escape: Option<EscapeSection>,
    pub flats: Option<FlatsSection>,
    pub reduce: Option<ReduceSection>,
    pub report: Option<ReportSection>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Space {
    /// `ℝ²`.
    #[default]
    Plane,
    /// `ℝ^dim`, abelian.
    Euclidean,
    /// `N_q`.
    Nq,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Preset {
    Single,
    TwoBumps,
    Annular,
    OffCentre,
    Random,
    Gaussian,
    Zero,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BumpSpec {
    pub center: Vec<f64>,
    pub amplitude: f64,
    pub radius: f64,
    #[serde(default = "default_profile")]
    pub profile: String,
    #[serde(default = "one")]
    pub width: f64,
}

fn default_profile() -> String {
    "bump".into()
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhantomSection {
    #[serde(default)]
    pub space: Space,
    /// `q` of `N_q`.
    pub q: Option<usize>,
    /// Dimension of the Euclidean space.
    pub dim: Option<usize>,
    pub preset: Option<Preset>,
    /// Number of bumps of the random preset (1..=8).
    pub n_bumps: Option<usize>,
    /// Explicit bumps; exclusive with `preset`.
    pub bumps: Option<Vec<BumpSpec>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ForwardSection {
    /// Phantom JSON; when absent the `[phantom]` section is used.
    pub phantom: Option<PathBuf>,
    #[serde(default = "d_n_theta")]
    pub n_theta: usize,
    #[serde(default = "d_n_offsets")]
    pub n_offsets: usize,
    /// Largest offset; defaults to the support radius.
    pub p_max: Option<f64>,
}

fn d_n_theta() -> usize {
    360
}
fn d_n_offsets() -> usize {
    512
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InvertSection {
    pub sinogram: PathBuf,
    /// Phantom used for `f_true`.
    pub phantom: Option<PathBuf>,
    /// Explicit points; otherwise a `grid_n × grid_n` grid on `[−extent, extent]²`.
    pub points: Option<Vec<[f64; 2]>>,
    #[serde(default = "d_grid_n")]
    pub grid_n: usize,
    #[serde(default = "one")]
    pub extent: f64,
    /// Defaults to `p_max + max |x|`.
    pub t_max: Option<f64>,
    /// Radial step as a multiple of the sinogram offset step.
    #[serde(default = "two")]
    pub t_step_factor: f64,
    #[serde(default = "d_n_theta")]
    pub n_dirs: usize,
}

fn d_grid_n() -> usize {
    41
}
fn two() -> f64 {
    2.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EscapeSection {
    #[serde(default = "three")]
    pub q: usize,
    #[serde(default = "d_n_geodesics")]
    pub n_geodesics: usize,
    #[serde(default = "d_t_max")]
    pub t_max: f64,
    /// Times `t_max·k/n_t`, `k = 1..=n_t`.
    #[serde(default = "d_n_t")]
    pub n_t: usize,
    /// Constructed samples per case (a)–(d).
    #[serde(default = "d_cases")]
    pub cases_per_kind: usize,
}

fn three() -> usize {
    3
}
fn d_n_geodesics() -> usize {
    10_000
}
fn d_t_max() -> f64 {
    50.0
}
fn d_n_t() -> usize {
    10
}
fn d_cases() -> usize {
    1000
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlatsSection {
    #[serde(default = "three")]
    pub q: usize,
    /// Left-invariant directions `(z..., h...)`, normalised on input. When
    /// absent, a structured set plus `n_random` random directions is used.
    pub tangents: Option<Vec<Vec<f64>>>,
    #[serde(default)]
    pub n_random: usize,
    /// Base point `(z..., h...)`; the identity by default.
    pub base: Option<Vec<f64>>,
    #[serde(default = "d_budget")]
    pub budget: usize,
    #[serde(default = "d_restarts")]
    pub restarts: usize,
}

fn d_budget() -> usize {
    1200
}
fn d_restarts() -> usize {
    4
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AtlasKind {
    Plane,
    Product,
    Central,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReduceSection {
    /// Phantom JSON on the group; when absent the `[phantom]` section is used.
    pub phantom: Option<PathBuf>,
    /// Defaults to `product` on Euclidean spaces, `central` on `N_q`, `plane` on `ℝ²`.
    pub atlas: Option<AtlasKind>,
    /// Dimension of the first factor of a product.
    pub split: Option<usize>,
    pub points: Option<Vec<Vec<f64>>>,
    #[serde(default = "d_n_points")]
    pub n_points: usize,
    /// Random points are drawn from the coordinate ball of this radius.
    #[serde(default = "d_point_radius")]
    pub point_radius: f64,
    /// Defaults to `max |x|` plus the outer radius of the support.
    pub t_max: Option<f64>,
    #[serde(default = "d_reduce_grid")]
    pub grid: usize,
    #[serde(default = "d_reduce_dirs")]
    pub n_dirs: usize,
}

fn d_n_points() -> usize {
    20
}
fn d_point_radius() -> f64 {
    0.6
}
fn d_reduce_grid() -> usize {
    200
}
fn d_reduce_dirs() -> usize {
    180
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReportSection {
    /// Reconstruction reports (JSON) and escape sweeps (CSV).
    pub inputs: Vec<PathBuf>,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        toml::from_str(&text).map_err(|e| CliError::parse(path, e))
    }

    pub fn validate(&self) -> CliResult<()> {
        let bad = |m: String| Err(CliError::Config(m));
        if let Some(t) = self.tol {
            if !(t > 0.0 && t.is_finite()) {
                return bad(format!("tol must be positive, got {t}"));
            }
        }
        if self.workers == Some(0) {
            return bad("workers must be >= 1".into());
        }
        if let Some(f) = &self.forward {
            if f.n_theta < 2 || f.n_offsets < 2 {
                return bad("forward grids need at least 2 angles and 2 offsets".into());
            }
            if f.p_max.is_some_and(|p| !(p > 0.0)) {
                return bad("forward.p_max must be positive".into());
            }
        }
        if let Some(i) = &self.invert {
            if i.grid_n < 2 || i.n_dirs < 4 || !(i.extent > 0.0) || !(i.t_step_factor > 0.0) {
                return bad("invert needs grid_n >= 2, n_dirs >= 4, extent > 0 and t_step_factor > 0".into());
            }
        }
        if let Some(e) = &self.escape {
            if e.q < 2 || e.n_t < 1 || !(e.t_max > 0.0) {
                return bad("escape needs q >= 2, n_t >= 1 and t_max > 0".into());
            }
        }
        if let Some(f) = &self.flats {
            if f.q < 2 || f.budget < 2 || f.restarts < 1 {
                return bad("flats needs q >= 2, budget >= 2 and restarts >= 1".into());
            }
        }
        if let Some(r) = &self.reduce {
            if r.grid < 4 || r.n_dirs < 4 || !(r.point_radius >= 0.0) {
                return bad("reduce needs grid >= 4, n_dirs >= 4 and point_radius >= 0".into());
            }
        }
        if let Some(p) = &self.phantom {
            if p.preset.is_some() && p.bumps.is_some() {
                return bad("phantom: give either preset or bumps, not both".into());
            }
            if p.n_bumps.is_some_and(|n| n == 0 || n > 8) {
                return bad("phantom.n_bumps must be in 1..=8".into());
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_sections_with_defaults() {
        let c: ExperimentConfig = toml::from_str(
            r#"
            seed = 7
            [phantom]
            preset = "random"
            n_bumps = 5
            [forward]
            n_theta = 90
            [escape]
            q = 4
            "#,
        )
        .unwrap();
        c.validate().unwrap();
        assert_eq!(c.forward.as_ref().unwrap().n_offsets, 512);
        assert_eq!(c.escape.as_ref().unwrap().n_geodesics, 10_000);
        assert_eq!(c.phantom.unwrap().space, Space::Plane);
    }

    #[test]
    fn rejects_unknown_keys_and_bad_values() {
        assert!(toml::from_str::<ExperimentConfig>("sed = 1").is_err());
        let c: ExperimentConfig = toml::from_str("tol = -1.0").unwrap();
        assert!(c.validate().is_err());
        let c: ExperimentConfig = toml::from_str("[forward]\nn_theta = 1").unwrap();
        assert!(c.validate().is_err());
    }
}
