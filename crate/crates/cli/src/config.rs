//! Experiment configuration: a versioned JSON document in which every field
//! has a default.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use sparse_spectra::constants;
use sparse_spectra::walk::WalkParams;
use sparse_spectra::ModelParams;

use crate::error::CliError;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Iid,
    Modified,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelSection {
    pub kind: ModelKind,
    pub n: usize,
    pub d: f64,
    pub delta: u32,
    /// Defaults to `floor((ln n)^2)`.
    pub ell: Option<usize>,
    /// Defaults to `sqrt(ln n) / n`.
    pub tau_boost: Option<f64>,
}

impl Default for ModelSection {
    fn default() -> Self {
        Self { kind: ModelKind::Iid, n: 1000, d: 4.0, delta: 6, ell: None, tau_boost: None }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct WalkSection {
    /// Estimated from a pilot when absent.
    pub tau_z: Option<f64>,
    /// Defaults to 1 for `n <= 600` and 4 above.
    pub stride: Option<usize>,
    pub flag_budget: Option<usize>,
    pub pilot_runs: usize,
    /// Also write one CSV per walk.
    pub traces: bool,
}

impl Default for WalkSection {
    fn default() -> Self {
        Self { tau_z: None, stride: None, flag_budget: None, pilot_runs: 20, traces: true }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    Exact,
    Brute,
    All,
}

/// Knobs of the individual experiments.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ProbeSection {
    /// Shift `z` as `[re, im]`.
    pub z: [f64; 2],
    /// Shifts for `logpot`.
    pub z_list: Vec<[f64; 2]>,
    pub r_max: usize,
    pub taus: Vec<f64>,
    pub grid: usize,
    /// Sublevel window radius; defaults to `2 sqrt(d) + 1`.
    pub radius: Option<f64>,
    pub suite: Suite,
    pub scale: f64,
    pub r_min: Option<usize>,
    pub k_max: Option<usize>,
    pub budget: usize,
    pub tail_p: f64,
    pub tail_k: usize,
    pub tail_ts: Vec<usize>,
    pub tail_trials: usize,
    pub anticonc_trials: usize,
}

impl Default for ProbeSection {
    fn default() -> Self {
        Self {
            z: [1.0, 1.0],
            z_list: vec![[1.0, 1.0], [0.5, 0.0], [3.0, 0.0]],
            r_max: 4,
            taus: vec![0.5, 1.0, 2.0],
            grid: 512,
            radius: None,
            suite: Suite::Exact,
            scale: 1.0,
            r_min: None,
            k_max: None,
            budget: 1000,
            tail_p: 0.01,
            tail_k: 200,
            tail_ts: vec![2, 4, 6],
            tail_trials: 1_000_000,
            anticonc_trials: 1000,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    /// Optional; when present it must name the subcommand being run.
    pub experiment: Option<String>,
    pub seed: u64,
    pub trials: usize,
    /// Parallelism width; never affects any output.
    pub jobs: usize,
    pub out: PathBuf,
    pub model: ModelSection,
    pub walk: WalkSection,
    pub probe: ProbeSection,
    /// Overrides of the tunable constants, see [`Constants`].
    pub constants: BTreeMap<String, f64>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            experiment: None,
            seed: 1,
            trials: 1,
            jobs: 1,
            out: PathBuf::from("out"),
            model: ModelSection::default(),
            walk: WalkSection::default(),
            probe: ProbeSection::default(),
            constants: BTreeMap::new(),
        }
    }
}

/// Desk constants that a config may override.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Constants {
    pub desk_k: f64,
    pub final_window_c: f64,
    pub final_window_eps: f64,
    pub zero_tol: f64,
    pub lkr_c_fit: f64,
    pub slice_c_fit: f64,
    pub drift_c_fit: f64,
    pub proj_desk_threshold: f64,
    pub subcritical_trivial_fraction: f64,
}

impl Default for Constants {
    fn default() -> Self {
        Self {
            desk_k: constants::DESK_K,
            final_window_c: constants::FINAL_WINDOW_C,
            final_window_eps: 0.1,
            zero_tol: 1e-8,
            lkr_c_fit: constants::LKR_C_FIT,
            slice_c_fit: constants::SLICE_C_FIT,
            drift_c_fit: constants::DRIFT_C_FIT,
            proj_desk_threshold: constants::PROJ_DESK_THRESHOLD,
            subcritical_trivial_fraction: constants::SUBCRITICAL_TRIVIAL_FRACTION,
        }
    }
}

/// Fitted constants are pinned in the library; only these can move.
const OVERRIDABLE: [&str; 4] = ["desk_k", "final_window_c", "final_window_eps", "zero_tol"];

impl Constants {
    pub fn with_overrides(table: &BTreeMap<String, f64>) -> Result<Self, CliError> {
        let mut c = Self::default();
        for (key, &v) in table {
            let slot = match key.as_str() {
                "desk_k" => &mut c.desk_k,
                "final_window_c" => &mut c.final_window_c,
                "final_window_eps" => &mut c.final_window_eps,
                "zero_tol" => &mut c.zero_tol,
                _ => {
                    return Err(CliError::Config(format!(
                        "constants.{key}: not an overridable constant (expected one of {})",
                        OVERRIDABLE.join(", ")
                    )))
                }
            };
            if !(v.is_finite() && v > 0.0) {
                return Err(CliError::Config(format!("constants.{key}: must be positive and finite, got {v}")));
            }
            *slot = v;
        }
        Ok(c)
    }
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        Self::parse(&text, &path.display().to_string())
    }

    /// Parses and validates; diagnostics carry the line, column and field path.
    pub fn parse(text: &str, origin: &str) -> Result<Self, CliError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let cfg: Self = serde_path_to_error::deserialize(de).map_err(|e| {
            let inner = e.inner();
            CliError::Config(format!("{origin}:{}:{}: {}: {inner}", inner.line(), inner.column(), e.path()))
        })?;
        cfg.validate().map_err(|m| CliError::Config(format!("{origin}: {m}")))?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<(), String> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(format!("schema_version: expected {SCHEMA_VERSION}, got {}", self.schema_version));
        }
        let m = &self.model;
        if m.n < 2 {
            return Err(format!("model.n: must be at least 2, got {}", m.n));
        }
        if !(m.d.is_finite() && m.d > 0.0) {
            return Err(format!("model.d: must be positive, got {}", m.d));
        }
        if m.delta == 0 {
            return Err("model.delta: must be at least 1".into());
        }
        if let Some(ell) = m.ell {
            if ell >= m.n {
                return Err(format!("model.ell: must be below n, got {ell}"));
            }
        }
        if let Some(t) = m.tau_boost {
            if !(0.0..=1.0).contains(&t) {
                return Err(format!("model.tau_boost: must lie in [0, 1], got {t}"));
            }
        }
        if self.trials == 0 {
            return Err("trials: must be at least 1".into());
        }
        if self.jobs == 0 {
            return Err("jobs: must be at least 1".into());
        }
        if self.walk.stride == Some(0) {
            return Err("walk.stride: must be at least 1".into());
        }
        let p = &self.probe;
        if p.z.iter().chain(p.z_list.iter().flatten()).any(|x| !x.is_finite()) {
            return Err("probe.z: entries must be finite".into());
        }
        if p.grid < 64 {
            return Err(format!("probe.grid: must be at least 64, got {}", p.grid));
        }
        if !(0.0..1.0).contains(&p.tail_p) {
            return Err(format!("probe.tail_p: must lie in [0, 1), got {}", p.tail_p));
        }
        if p.tail_k == 0 || p.tail_trials == 0 || p.anticonc_trials == 0 {
            return Err("probe: tail_k, tail_trials and anticonc_trials must be positive".into());
        }
        if !(p.scale > 0.0) {
            return Err(format!("probe.scale: must be positive, got {}", p.scale));
        }
        Constants::with_overrides(&self.constants).map_err(|e| e.to_string())?;
        Ok(())
    }

    pub fn constants(&self) -> Constants {
        Constants::with_overrides(&self.constants).expect("validated at load")
    }

    pub fn model_params(&self) -> ModelParams {
        let m = &self.model;
        let mut p = ModelParams::new(m.n, m.d, m.delta, self.seed);
        if let Some(ell) = m.ell {
            p.ell = ell;
        }
        if let Some(t) = m.tau_boost {
            p.tau_boost = t;
        }
        p
    }

    pub fn z(&self) -> Complex64 {
        Complex64::new(self.probe.z[0], self.probe.z[1])
    }

    pub fn walk_params(&self) -> WalkParams {
        let mut w = WalkParams::new(self.model_params(), self.z());
        w.k = self.constants().desk_k;
        w.tau_z = self.walk.tau_z;
        if let Some(s) = self.walk.stride {
            w.stride = s;
        }
        w.flag_budget = self.walk.flag_budget;
        w.pilot_runs = self.walk.pilot_runs;
        w
    }

    /// The part of the config that determines outputs: `jobs` and `out` are
    /// dropped so that neither leaks into artifacts.
    pub fn canonical(&self) -> serde_json::Value {
        let mut v = serde_json::to_value(self).expect("config serializes");
        let obj = v.as_object_mut().expect("object");
        obj.remove("jobs");
        obj.remove("out");
        v
    }
}
