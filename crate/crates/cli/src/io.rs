//! File formats. JSON outputs are objects `{"meta": …, <payload>}`; CSV
//! outputs start with `#` lines carrying the same metadata. Floats are
//! written in shortest round-trip form, so reading a file back recovers the
//! exact values.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use nilxray::flats::PhantomN;
use nilxray::radon::{Phantom2D, Sinogram, SinogramMeta};
use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};

pub const CONVENTIONS: [&str; 3] = [
    "orientation quotient: the line (theta, p) is {x : x1 cos(theta) + x2 sin(theta) = p} with theta in [0, pi); (theta + pi, -p) names the same line",
    "coordinate-ball semantics: supports, radii and distances are Euclidean in exponential coordinates (z..., h...)",
    "escape checks use the coordinate norm ||Log gamma(t)||",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Meta {
    pub tool: String,
    pub version: String,
    pub command: String,
    /// SHA-256 of the effective configuration (after command-line overrides).
    pub config_hash: String,
    pub seed: u64,
    pub tolerances: BTreeMap<String, f64>,
    pub conventions: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub normalization: Option<String>,
}

impl Meta {
    pub fn new(command: &str, config: &impl Serialize, seed: u64) -> Self {
        let canonical = serde_json::to_string(config).expect("config serialises");
        let hash = Sha256::digest(canonical.as_bytes());
        Self {
            tool: "nilxray".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command: command.into(),
            config_hash: format!("{hash:x}"),
            seed,
            tolerances: BTreeMap::new(),
            conventions: CONVENTIONS.iter().map(|s| s.to_string()).collect(),
            normalization: None,
        }
    }

    pub fn tol(mut self, name: &str, value: f64) -> Self {
        self.tolerances.insert(name.into(), value);
        self
    }

    pub fn normalization(mut self, note: Option<&str>) -> Self {
        self.normalization = note.map(str::to_string);
        self
    }

    fn csv_header(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# meta: {}", serde_json::to_string(self).expect("meta serialises"));
        s
    }
}

pub fn write_text(path: &Path, text: &str) -> CliResult<()> {
    let io = |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    };
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(io)?;
    }
    std::fs::write(path, text).map_err(io)
}

pub fn read_text(path: &Path) -> CliResult<String> {
    std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// `{"meta": meta, key: payload, …extra}` as pretty JSON with a final newline.
pub fn json_document(meta: &Meta, fields: Vec<(&str, Value)>) -> String {
    let mut map = serde_json::Map::new();
    map.insert("meta".into(), serde_json::to_value(meta).expect("meta serialises"));
    for (k, v) in fields {
        map.insert(k.into(), v);
    }
    let mut s = serde_json::to_string_pretty(&Value::Object(map)).expect("json serialises");
    s.push('\n');
    s
}

pub fn read_json(path: &Path) -> CliResult<Value> {
    serde_json::from_str(&read_text(path)?).map_err(|e| CliError::parse(path, e))
}

/// The `key` member of an output document, or the whole document if it is
/// not an object carrying `meta`.
fn payload(doc: Value, key: &str) -> Value {
    match doc {
        Value::Object(mut m) if m.contains_key("meta") => m.remove(key).unwrap_or(Value::Null),
        other => other,
    }
}

/// Planar phantom: a bare list of bumps or a `phantom` output document.
pub fn read_phantom2d(path: &Path) -> CliResult<Phantom2D> {
    let v = payload(read_json(path)?, "phantom");
    let p: Phantom2D = serde_json::from_value(v).map_err(|e| CliError::parse(path, e))?;
    Ok(Phantom2D::new(p.bumps)?)
}

/// Group phantom: `{dim_z, dim_h, bumps}` or a `phantom` output document.
pub fn read_phantom_n(path: &Path) -> CliResult<PhantomN> {
    let v = payload(read_json(path)?, "phantom");
    let p: PhantomN = serde_json::from_value(v).map_err(|e| CliError::parse(path, e))?;
    p.validate()?;
    Ok(p)
}

pub fn f64_str(x: f64) -> String {
    format!("{x:?}")
}

/// Header `theta,p,value`, θ-outer rows.
pub fn sinogram_csv(s: &Sinogram, meta: &Meta) -> String {
    let mut out = meta.csv_header();
    let _ = writeln!(out, "# field_id: {}", s.meta.field_id);
    out.push_str("theta,p,value\n");
    for (i, &t) in s.thetas.iter().enumerate() {
        for (j, &p) in s.offsets.iter().enumerate() {
            let _ = writeln!(out, "{},{},{}", f64_str(t), f64_str(p), f64_str(s.get(i, j)));
        }
    }
    out
}

/// Metadata lines (`# key: value`) of a CSV file.
pub fn csv_comments(text: &str) -> BTreeMap<String, String> {
    text.lines()
        .filter_map(|l| l.strip_prefix('#'))
        .filter_map(|l| l.split_once(':'))
        .map(|(k, v)| (k.trim().to_string(), v.trim().to_string()))
        .collect()
}

pub fn read_sinogram(path: &Path) -> CliResult<Sinogram> {
    let text = read_text(path)?;
    let comments = csv_comments(&text);
    let mut rdr = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(text.as_bytes());
    let headers = rdr.headers().map_err(|e| CliError::parse(path, e))?.clone();
    if headers.iter().collect::<Vec<_>>() != ["theta", "p", "value"] {
        return Err(CliError::parse(path, format!("expected header theta,p,value, got {headers:?}")));
    }
    let mut thetas: Vec<f64> = Vec::new();
    let mut offsets: Vec<f64> = Vec::new();
    let mut values = Vec::new();
    for rec in rdr.deserialize::<(f64, f64, f64)>() {
        let (t, p, v) = rec.map_err(|e| CliError::parse(path, e))?;
        if thetas.last() != Some(&t) {
            thetas.push(t);
        }
        if thetas.len() == 1 {
            offsets.push(p);
        }
        values.push(v);
    }
    if values.len() != thetas.len() * offsets.len() {
        return Err(CliError::parse(path, "rows do not form a full theta-outer grid"));
    }
    let meta_json = comments.get("meta").and_then(|m| serde_json::from_str::<Meta>(m).ok());
    let meta = SinogramMeta {
        field_id: comments.get("field_id").cloned().unwrap_or_default(),
        quad_tol: meta_json.and_then(|m| m.tolerances.get("line_quad_tol").copied()).unwrap_or(0.0),
    };
    Ok(Sinogram::new(thetas, offsets, values, meta)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nilxray::radon::{offset_grid, radon_forward, theta_grid, PhantomBump};

    #[test]
    fn sinogram_round_trip_is_exact() {
        let p = Phantom2D::single(PhantomBump::bump([0.1, 0.2], 1.0, 0.5)).unwrap();
        let mut s = radon_forward(&p, &theta_grid(7), &offset_grid(9, 0.8)).unwrap();
        s.meta.field_id = "test".into();
        let meta = Meta::new("forward", &"cfg", 3).tol("line_quad_tol", 1e-9);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.csv");
        write_text(&path, &sinogram_csv(&s, &meta)).unwrap();
        let back = read_sinogram(&path).unwrap();
        assert_eq!(back.thetas, s.thetas);
        assert_eq!(back.offsets, s.offsets);
        assert_eq!(back.values, s.values);
        assert_eq!(back.meta.field_id, "test");
        assert_eq!(back.meta.quad_tol, 1e-9);
    }

    #[test]
    fn phantom_reader_accepts_both_shapes() {
        let dir = tempfile::tempdir().unwrap();
        let bare = dir.path().join("bare.json");
        write_text(&bare, r#"[{"center":[0,0],"amplitude":1,"radius":1,"profile":"bump"}]"#).unwrap();
        let wrapped = dir.path().join("wrapped.json");
        let meta = Meta::new("phantom", &"cfg", 0);
        let p = read_phantom2d(&bare).unwrap();
        write_text(&wrapped, &json_document(&meta, vec![("phantom", serde_json::to_value(&p).unwrap())])).unwrap();
        assert_eq!(read_phantom2d(&wrapped).unwrap(), p);
    }

    #[test]
    fn hash_tracks_the_config() {
        assert_eq!(Meta::new("x", &(1, 2), 0).config_hash, Meta::new("x", &(1, 2), 0).config_hash);
        assert_ne!(Meta::new("x", &(1, 2), 0).config_hash, Meta::new("x", &(1, 3), 0).config_hash);
    }
}
