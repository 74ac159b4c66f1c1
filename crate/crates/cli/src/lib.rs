//! Command-line harness: config loading, seeded batch runs of every
//! experiment, artifact emission and manifest replay.

pub mod config;
pub mod error;
pub mod experiments;
pub mod output;

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Parser, ValueEnum};
use serde::Serialize;

use config::ExperimentConfig;
use error::CliError;
use experiments::Experiment;
use output::{write_all, Manifest, Metadata};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Command {
    Spectrum,
    Logpot,
    Moments,
    Walk,
    Expansion,
    Anticonc,
    Subcritical,
    VerifyLinearAlgebra,
    /// Re-run a manifest and compare digests.
    Replay,
}

impl Command {
    fn experiment(self) -> Option<Experiment> {
        Some(match self {
            Self::Spectrum => Experiment::Spectrum,
            Self::Logpot => Experiment::Logpot,
            Self::Moments => Experiment::Moments,
            Self::Walk => Experiment::Walk,
            Self::Expansion => Experiment::Expansion,
            Self::Anticonc => Experiment::Anticonc,
            Self::Subcritical => Experiment::Subcritical,
            Self::VerifyLinearAlgebra => Experiment::VerifyLinearAlgebra,
            Self::Replay => return None,
        })
    }
}

#[derive(Debug, Parser)]
#[command(name = "sparse-spectra", version, about = "Seeded experiments on sparse iid random matrices")]
pub struct Cli {
    pub command: Command,
    /// JSON config (schema_version 1); for `replay`, the manifest.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Master seed, overriding the config.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory, overriding the config.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Worker threads; outputs do not depend on it.
    #[arg(long)]
    pub jobs: Option<usize>,
}

/// Parses `args` (program name first), runs, and returns the exit code.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("sparse-spectra: {e}");
            e.exit_code()
        }
    }
}

pub fn execute(cli: &Cli) -> Result<(), CliError> {
    if cli.jobs == Some(0) {
        return Err(CliError::Config("--jobs: must be at least 1".into()));
    }
    match cli.command.experiment() {
        Some(exp) => {
            let mut cfg = match &cli.config {
                Some(p) => ExperimentConfig::load(p)?,
                None => ExperimentConfig::default(),
            };
            if let Some(name) = &cfg.experiment {
                if name != exp.name() {
                    return Err(CliError::Config(format!("experiment: config is for {name:?}, not {:?}", exp.name())));
                }
            }
            if let Some(s) = cli.seed {
                cfg.seed = s;
            }
            let out = cli.out.clone().unwrap_or_else(|| cfg.out.clone());
            let jobs = cli.jobs.unwrap_or(cfg.jobs);
            let failures = run_into(exp, &cfg, jobs, &out)?;
            report_failures(&failures)
        }
        None => replay(cli),
    }
}

/// Runs one experiment and writes its artifacts and manifest into `out`.
/// Returns the failed assertions.
pub fn run_into(exp: Experiment, cfg: &ExperimentConfig, jobs: usize, out: &Path) -> Result<Vec<String>, CliError> {
    let outcome = experiments::run(exp, cfg, jobs)?;
    let meta = Metadata::new(exp.name(), cfg);
    let manifest = write_all(out, &meta, cfg, &outcome.artifacts)?;
    println!("{}: {} files, manifest {}", exp.name(), outcome.artifacts.len(), manifest.display());
    Ok(outcome.failures)
}

fn report_failures(failures: &[String]) -> Result<(), CliError> {
    if failures.is_empty() {
        return Ok(());
    }
    for f in failures {
        eprintln!("FAILED {f}");
    }
    Err(CliError::Assertion(format!("{} check(s) failed", failures.len())))
}

#[derive(Debug, Serialize)]
pub struct ReplayEntry {
    pub path: String,
    pub status: &'static str,
}

fn replay(cli: &Cli) -> Result<(), CliError> {
    let path = cli.config.as_ref().ok_or_else(|| CliError::Config("replay needs --config <manifest>".into()))?;
    let manifest = Manifest::load(path)?;
    manifest.check_versions()?;
    let exp = Experiment::from_name(&manifest.subcommand)
        .ok_or_else(|| CliError::Config(format!("subcommand: unknown experiment {:?}", manifest.subcommand)))?;
    let mut cfg = ExperimentConfig::parse(&manifest.config.to_string(), &format!("{}#config", path.display()))?;
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    let src_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
    let out = cli.out.clone().unwrap_or_else(|| src_dir.join("replay"));
    if same_dir(&out, &src_dir) {
        return Err(CliError::Config("--out: replay must not overwrite the original run".into()));
    }
    let failures = run_into(exp, &cfg, cli.jobs.unwrap_or(1), &out)?;
    for f in &failures {
        eprintln!("note: replayed run reports {f}");
    }
    let fresh = Manifest::load(&out.join(output::MANIFEST))?;
    let diff = diff_manifests(&manifest, &fresh);
    let report = serde_json::to_string_pretty(&diff).expect("report serializes");
    std::fs::write(out.join("replay_report.json"), format!("{report}\n"))?;
    if diff.is_empty() {
        println!("replay: {} files byte-identical", manifest.files.len());
        Ok(())
    } else {
        for d in &diff {
            println!("{} {}", d.status, d.path);
        }
        Err(CliError::Assertion(format!("replay differs in {} file(s)", diff.len())))
    }
}

fn same_dir(a: &Path, b: &Path) -> bool {
    let canon = |p: &Path| std::fs::canonicalize(if p.as_os_str().is_empty() { Path::new(".") } else { p }).ok();
    matches!((canon(a), canon(b)), (Some(x), Some(y)) if x == y)
}

/// Entries that are not byte-identical; empty when the runs agree.
pub fn diff_manifests(old: &Manifest, new: &Manifest) -> Vec<ReplayEntry> {
    let mut out = Vec::new();
    for f in &old.files {
        match new.files.iter().find(|g| g.path == f.path) {
            None => out.push(ReplayEntry { path: f.path.clone(), status: "missing" }),
            Some(g) if g.sha256 != f.sha256 => out.push(ReplayEntry { path: f.path.clone(), status: "differs" }),
            Some(_) => {}
        }
    }
    for g in &new.files {
        if !old.files.iter().any(|f| f.path == g.path) {
            out.push(ReplayEntry { path: g.path.clone(), status: "extra" });
        }
    }
    out
}
