//! Artifact rendering: every file carries the same metadata block, and the
//! manifest pins each file's sha256 digest.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::{Constants, ExperimentConfig, SCHEMA_VERSION};
use crate::error::CliError;

pub const TOOL: &str = "sparse-spectra";
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");
pub const MANIFEST: &str = "manifest.json";

pub fn module_versions() -> BTreeMap<String, String> {
    let core = sparse_spectra::VERSION;
    ["model", "graph", "sv", "spectral", "walk", "anticonc"]
        .iter()
        .map(|m| (m.to_string(), core.to_string()))
        .chain([("cli".to_string(), TOOL_VERSION.to_string())])
        .collect()
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Clone, Debug, Serialize)]
pub struct Metadata {
    pub tool: &'static str,
    pub tool_version: &'static str,
    pub schema_version: u32,
    pub subcommand: String,
    pub config_hash: String,
    pub seed: u64,
    pub constants: Constants,
    /// Constants the config moved off their defaults.
    pub overrides: BTreeMap<String, serde_json::Value>,
    pub module_versions: BTreeMap<String, String>,
}

impl Metadata {
    pub fn new(subcommand: &str, cfg: &ExperimentConfig) -> Self {
        let mut overrides = BTreeMap::new();
        for (k, v) in &cfg.constants {
            overrides.insert(format!("constants.{k}"), serde_json::json!(v));
        }
        Self {
            tool: TOOL,
            tool_version: TOOL_VERSION,
            schema_version: SCHEMA_VERSION,
            subcommand: subcommand.to_string(),
            config_hash: sha256_hex(cfg.canonical().to_string().as_bytes()),
            seed: cfg.seed,
            constants: cfg.constants(),
            overrides,
            module_versions: module_versions(),
        }
    }

    fn compact(&self) -> String {
        serde_json::to_string(self).expect("metadata serializes")
    }
}

/// Rows of strings; numbers go through [`num`].
#[derive(Clone, Debug, Default)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Self { header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }
}

/// Shortest round-trip text for a float, in exponent form outside
/// `[1e-4, 1e15)`.
pub fn num(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else if x == 0.0 || (1e-4..1e15).contains(&x.abs()) {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

pub fn opt_bool(b: Option<bool>) -> String {
    b.map_or(String::new(), |v| u8::from(v).to_string())
}

pub enum Body {
    Csv(Table),
    Json(serde_json::Value),
    Svg(String),
}

pub struct Artifact {
    /// Relative path inside the output directory.
    pub name: String,
    pub body: Body,
}

impl Artifact {
    pub fn csv(name: impl Into<String>, t: Table) -> Self {
        Self { name: name.into(), body: Body::Csv(t) }
    }

    pub fn json(name: impl Into<String>, v: impl Serialize) -> Self {
        Self { name: name.into(), body: Body::Json(serde_json::to_value(v).expect("result serializes")) }
    }

    pub fn render(&self, meta: &Metadata) -> Vec<u8> {
        match &self.body {
            Body::Csv(t) => {
                let mut head = String::new();
                writeln!(head, "# {}", meta.compact()).unwrap();
                let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(head.into_bytes());
                w.write_record(&t.header).expect("in-memory write");
                for r in &t.rows {
                    w.write_record(r).expect("in-memory write");
                }
                w.into_inner().expect("in-memory flush")
            }
            Body::Json(v) => {
                let doc = serde_json::json!({ "metadata": meta, "result": v });
                let mut s = serde_json::to_string_pretty(&doc).expect("json serializes");
                s.push('\n');
                s.into_bytes()
            }
            Body::Svg(s) => {
                let esc = meta.compact().replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;");
                s.replacen("<!--metadata-->", &format!("<metadata>{esc}</metadata>"), 1).into_bytes()
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FileDigest {
    pub path: String,
    pub sha256: String,
    pub bytes: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub tool_version: String,
    pub schema_version: u32,
    pub subcommand: String,
    pub config_hash: String,
    pub seed: u64,
    pub module_versions: BTreeMap<String, String>,
    /// Resolved config without `jobs` and `out`.
    pub config: serde_json::Value,
    pub files: Vec<FileDigest>,
}

impl Manifest {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let de = &mut serde_json::Deserializer::from_str(&text);
        serde_path_to_error::deserialize(de).map_err(|e| {
            let inner = e.inner();
            CliError::Config(format!("{}:{}:{}: {}: {inner}", path.display(), inner.line(), inner.column(), e.path()))
        })
    }

    /// Version checks come before anything else is trusted.
    pub fn check_versions(&self) -> Result<(), CliError> {
        if self.tool != TOOL {
            return Err(CliError::Version(format!("manifest written by {:?}, not {TOOL}", self.tool)));
        }
        if self.tool_version != TOOL_VERSION || self.schema_version != SCHEMA_VERSION {
            return Err(CliError::Version(format!(
                "manifest has {} {} (schema {}), this is {TOOL_VERSION} (schema {SCHEMA_VERSION})",
                self.tool, self.tool_version, self.schema_version
            )));
        }
        let here = module_versions();
        for (m, v) in &self.module_versions {
            if here.get(m) != Some(v) {
                return Err(CliError::Version(format!("module {m} is {:?} here, manifest has {v}", here.get(m))));
            }
        }
        Ok(())
    }
}

/// Writes the artifacts and the manifest; returns the manifest path.
pub fn write_all(out: &Path, meta: &Metadata, cfg: &ExperimentConfig, artifacts: &[Artifact]) -> Result<PathBuf, CliError> {
    std::fs::create_dir_all(out)?;
    let mut files = Vec::with_capacity(artifacts.len());
    for a in artifacts {
        let bytes = a.render(meta);
        let path = out.join(&a.name);
        if let Some(dir) = path.parent() {
            std::fs::create_dir_all(dir)?;
        }
        std::fs::write(&path, &bytes)?;
        files.push(FileDigest { path: a.name.clone(), sha256: sha256_hex(&bytes), bytes: bytes.len() });
    }
    files.sort_by(|a, b| a.path.cmp(&b.path));
    let manifest = Manifest {
        tool: TOOL.into(),
        tool_version: TOOL_VERSION.into(),
        schema_version: SCHEMA_VERSION,
        subcommand: meta.subcommand.clone(),
        config_hash: meta.config_hash.clone(),
        seed: meta.seed,
        module_versions: meta.module_versions.clone(),
        config: cfg.canonical(),
        files,
    };
    let path = out.join(MANIFEST);
    let mut text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    text.push('\n');
    std::fs::write(&path, text)?;
    Ok(path)
}

/// Static eigenvalue scatter with the circle of radius `ring`.
pub fn scatter_svg(points: &[(f64, f64)], ring: f64, title: &str) -> String {
    let extent = points
        .iter()
        .map(|&(x, y)| x.abs().max(y.abs()))
        .fold(ring, f64::max)
        .max(1e-9)
        * 1.05;
    let size = 600.0;
    let scale = size / (2.0 * extent);
    let px = |x: f64| (x + extent) * scale;
    let py = |y: f64| (extent - y) * scale;
    let mut s = String::new();
    writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" viewBox="0 0 {size} {size}">"#).unwrap();
    s.push_str("<!--metadata-->\n");
    writeln!(s, "<title>{title}</title>").unwrap();
    writeln!(s, r##"<rect width="{size}" height="{size}" fill="#ffffff"/>"##).unwrap();
    writeln!(s, r##"<line x1="0" y1="{0:.2}" x2="{size}" y2="{0:.2}" stroke="#bbbbbb"/>"##, py(0.0)).unwrap();
    writeln!(s, r##"<line x1="{0:.2}" y1="0" x2="{0:.2}" y2="{size}" stroke="#bbbbbb"/>"##, px(0.0)).unwrap();
    writeln!(
        s,
        r##"<circle cx="{:.2}" cy="{:.2}" r="{:.2}" fill="none" stroke="#d62728" stroke-dasharray="4 3"/>"##,
        px(0.0),
        py(0.0),
        ring * scale
    )
    .unwrap();
    s.push_str(r##"<g fill="#1f77b4" fill-opacity="0.6">"##);
    s.push('\n');
    for &(x, y) in points {
        writeln!(s, r#"<circle cx="{:.2}" cy="{:.2}" r="1.5"/>"#, px(x), py(y)).unwrap();
    }
    s.push_str("</g>\n</svg>\n");
    s
}
