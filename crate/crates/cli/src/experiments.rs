//! The subcommands. Each returns its artifacts plus the list of failed
//! assertions; trials run on a rayon pool and are merged in trial order.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;
use sparse_spectra::anticonc::{self, ConcentrationEstimate, LkrCheck, Sampler, SliceCheck, SliceOracle};
use sparse_spectra::graph::{self, scc_structure, trivial_image_census, CensusConfig, Digraph};
use sparse_spectra::model::{degseq_regular, sample_iid, sample_modified};
use sparse_spectra::rng::{derive_seed, stream, trial_seed};
use sparse_spectra::spectral::{self, EmpiricalMeasure};
use sparse_spectra::walk::{self, BinComparison};
use sparse_spectra::{verify, BinaryMatrix, Error as CoreError, ModelParams};

use crate::config::{ExperimentConfig, ModelKind, Suite};
use crate::error::CliError;
use crate::output::{num, opt_bool, scatter_svg, Artifact, Body, Table};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Experiment {
    Spectrum,
    Logpot,
    Moments,
    Walk,
    Expansion,
    Anticonc,
    Subcritical,
    VerifyLinearAlgebra,
}

impl Experiment {
    pub const ALL: [Experiment; 8] = [
        Self::Spectrum,
        Self::Logpot,
        Self::Moments,
        Self::Walk,
        Self::Expansion,
        Self::Anticonc,
        Self::Subcritical,
        Self::VerifyLinearAlgebra,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::Spectrum => "spectrum",
            Self::Logpot => "logpot",
            Self::Moments => "moments",
            Self::Walk => "walk",
            Self::Expansion => "expansion",
            Self::Anticonc => "anticonc",
            Self::Subcritical => "subcritical",
            Self::VerifyLinearAlgebra => "verify-linear-algebra",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|e| e.name() == s)
    }
}

pub struct Outcome {
    pub artifacts: Vec<Artifact>,
    pub failures: Vec<String>,
}

pub fn run(exp: Experiment, cfg: &ExperimentConfig, jobs: usize) -> Result<Outcome, CliError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| CliError::Resource(e.to_string()))?;
    pool.install(|| match exp {
        Experiment::Spectrum => spectrum(cfg),
        Experiment::Logpot => logpot(cfg),
        Experiment::Moments => moments(cfg),
        Experiment::Walk => walk_runs(cfg),
        Experiment::Expansion => expansion(cfg),
        Experiment::Anticonc => anticonc_run(cfg),
        Experiment::Subcritical => subcritical(cfg),
        Experiment::VerifyLinearAlgebra => verify_la(cfg),
    })
}

/// Runs `f` on every trial index; results come back in trial order.
fn per_trial<T: Send>(trials: usize, f: impl Fn(u64) -> sparse_spectra::Result<T> + Sync + Send) -> Result<Vec<T>, CliError> {
    (0..trials as u64).into_par_iter().map(f).collect::<sparse_spectra::Result<Vec<T>>>().map_err(CliError::from)
}

fn trial_params(cfg: &ExperimentConfig, t: u64) -> ModelParams {
    cfg.model_params().with_seed(trial_seed(cfg.seed, t))
}

fn sample(cfg: &ExperimentConfig, p: &ModelParams) -> sparse_spectra::Result<BinaryMatrix> {
    match cfg.model.kind {
        ModelKind::Iid => sample_iid(p),
        ModelKind::Modified => sample_modified(p),
    }
}

fn mean(xs: impl IntoIterator<Item = f64>) -> f64 {
    let (s, k) = xs.into_iter().fold((0.0, 0usize), |(s, k), x| (s + x, k + 1));
    if k == 0 { f64::NAN } else { s / k as f64 }
}

#[derive(Serialize)]
struct SpectrumTrial {
    trial: u64,
    spectral_radius: f64,
    mean_abs_sq: f64,
    inside_sqrt_d: f64,
    zero_count: usize,
}

fn spectrum(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let zero_tol = cfg.constants().zero_tol;
    let ring = cfg.model.d.sqrt();
    let spectra = per_trial(cfg.trials, |t| Ok(spectral::eigen_spectrum(&sample(cfg, &trial_params(cfg, t))?)?.points()))?;
    let mut table = Table::new(&["trial", "index", "re", "im"]);
    let mut pts = Vec::new();
    let mut stats = Vec::new();
    for (t, eigs) in spectra.iter().enumerate() {
        for (i, l) in eigs.iter().enumerate() {
            table.push(vec![t.to_string(), i.to_string(), num(l.re), num(l.im)]);
            pts.push((l.re, l.im));
        }
        let nf = eigs.len() as f64;
        stats.push(SpectrumTrial {
            trial: t as u64,
            spectral_radius: eigs.iter().map(|l| l.norm()).fold(0.0, f64::max),
            mean_abs_sq: eigs.iter().map(|l| l.norm_sqr()).sum::<f64>() / nf,
            inside_sqrt_d: eigs.iter().filter(|l| l.norm() <= ring).count() as f64 / nf,
            zero_count: eigs.iter().filter(|l| l.norm() <= zero_tol).count(),
        });
    }
    let title = format!("eigenvalues, n = {}, d = {}, {} trial(s)", cfg.model.n, cfg.model.d, cfg.trials);
    let summary = json!({
        "points": pts.len(),
        "mean_spectral_radius": mean(stats.iter().map(|s| s.spectral_radius)),
        "mean_inside_sqrt_d": mean(stats.iter().map(|s| s.inside_sqrt_d)),
        "trials": stats,
    });
    Ok(Outcome {
        artifacts: vec![
            Artifact::csv("eigenvalues.csv", table),
            Artifact { name: "spectrum.svg".into(), body: Body::Svg(scatter_svg(&pts, ring, &title)) },
            Artifact::json("spectrum.json", summary),
        ],
        failures: Vec::new(),
    })
}

fn sublevel_radius(cfg: &ExperimentConfig) -> f64 {
    cfg.probe.radius.unwrap_or(2.0 * cfg.model.d.sqrt() + 1.0)
}

fn logpot(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let zs: Vec<Complex64> = cfg.probe.z_list.iter().map(|z| Complex64::new(z[0], z[1])).collect();
    let radius = sublevel_radius(cfg);
    let rows = per_trial(cfg.trials, |t| {
        let m = sample(cfg, &trial_params(cfg, t))?;
        let eigs = spectral::eigen_spectrum(&m)?;
        let pts = eigs.points();
        let pots = zs
            .iter()
            .map(|&z| Ok((spectral::log_potential(&m, z)?, spectral::log_potential_from_eigs(&pts, z))))
            .collect::<sparse_spectra::Result<Vec<_>>>()?;
        let fit = spectral::sublevel_decay(&eigs, &cfg.probe.taus, cfg.probe.grid, radius)?;
        Ok((pots, fit))
    })?;
    let mut pot = Table::new(&["trial", "z_re", "z_im", "value", "det_value", "eig_value", "infinite"]);
    let mut area = Table::new(&["trial", "tau", "log_area", "log_area_lower", "log_area_upper", "closed_form", "gridded"]);
    let mut fits = Vec::new();
    for (t, (pots, fit)) in rows.iter().enumerate() {
        for (z, (lp, ev)) in zs.iter().zip(pots) {
            pot.push(vec![
                t.to_string(),
                num(z.re),
                num(z.im),
                num(lp.value),
                num(lp.det_value),
                num(*ev),
                u8::from(lp.infinite).to_string(),
            ]);
        }
        for a in &fit.areas {
            area.push(vec![
                t.to_string(),
                num(a.tau),
                num(a.log_area),
                num(a.log_area_lower),
                num(a.log_area_upper),
                a.closed_form.to_string(),
                a.gridded.to_string(),
            ]);
        }
        fits.push(json!({ "trial": t, "slope": fit.slope, "monotone": fit.monotone }));
    }
    let summary = json!({
        "radius": radius,
        "taus": cfg.probe.taus,
        "mean_slope": mean(rows.iter().map(|(_, f)| f.slope)),
        "all_monotone": rows.iter().all(|(_, f)| f.monotone),
        "trials": fits,
    });
    Ok(Outcome {
        artifacts: vec![
            Artifact::csv("logpot.csv", pot),
            Artifact::csv("sublevel.csv", area),
            Artifact::json("logpot.json", summary),
        ],
        failures: Vec::new(),
    })
}

fn moments(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let z = cfg.z();
    let p = cfg.model_params();
    let diffs = per_trial(cfg.trials, |t| spectral::rotational_trial(&p, z, cfg.probe.r_max, t))?;
    let mut table = Table::new(&["trial", "r", "diff"]);
    for (t, d) in diffs.iter().enumerate() {
        for (j, x) in d.iter().enumerate() {
            table.push(vec![t.to_string(), (j + 1).to_string(), num(*x)]);
        }
    }
    let report = spectral::rotational_summary(p.n, z, &diffs);
    Ok(Outcome {
        artifacts: vec![Artifact::csv("moments.csv", table), Artifact::json("moments.json", report)],
        failures: Vec::new(),
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct WalkRun {
    pub trial: u64,
    pub m: usize,
    pub delta_m: usize,
    pub x_m: usize,
    pub x_final: usize,
    pub iterate_checks: usize,
    pub iterate_violations: usize,
    pub final_window: walk::FinalWindow,
    pub aborted: Option<String>,
}

fn walk_runs(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let c = cfg.constants();
    let mut wp = cfg.walk_params();
    wp.validate()?;
    if wp.tau_z.is_none() {
        wp.tau_z = Some(walk::estimate_tau(&wp, derive_seed(cfg.seed, &[0x7a75]))?);
    }
    let runs = per_trial(cfg.trials, |t| {
        let s = trial_seed(cfg.seed, t);
        let b = sample_modified(&wp.model.with_seed(s))?;
        let trace = walk::run_walk(&b, &wp, s)?;
        let fw = walk::final_window_check(&trace, &b, &wp, c.final_window_c, c.final_window_eps)?;
        Ok((trace, fw))
    })?;
    let mut table = Table::new(&[
        "trial",
        "m",
        "delta_m",
        "x_m",
        "x_final",
        "iterate_checks",
        "iterate_violations",
        "log_product",
        "log_threshold",
        "pass",
        "sigma_min",
        "sigma_pass",
        "aborted",
    ]);
    let mut artifacts = Vec::new();
    let mut summary = Vec::new();
    for (t, (trace, fw)) in runs.iter().enumerate() {
        let r = WalkRun {
            trial: t as u64,
            m: trace.m,
            delta_m: trace.delta_m,
            x_m: trace.x_m,
            x_final: trace.x_final,
            iterate_checks: trace.iterate_checks,
            iterate_violations: trace.iterate_violations,
            final_window: fw.clone(),
            aborted: trace.aborted.clone(),
        };
        table.push(vec![
            t.to_string(),
            r.m.to_string(),
            r.delta_m.to_string(),
            r.x_m.to_string(),
            r.x_final.to_string(),
            r.iterate_checks.to_string(),
            r.iterate_violations.to_string(),
            num(fw.log_product),
            num(fw.log_threshold),
            opt_bool(Some(fw.pass)),
            num(fw.sigma_min),
            opt_bool(Some(fw.sigma_pass)),
            r.aborted.clone().unwrap_or_default(),
        ]);
        if cfg.walk.traces {
            let csv = trace.to_csv();
            let mut lines = csv.lines();
            let header: Vec<&str> = lines.next().unwrap_or_default().split(',').collect();
            let mut tt = Table::new(&header);
            for l in lines {
                tt.push(l.split(',').map(str::to_string).collect());
            }
            artifacts.push(Artifact::csv(format!("walks/walk_{t:04}.csv"), tt));
        }
        summary.push(r);
    }
    let k = summary.len() as f64;
    let violations: usize = summary.iter().map(|r| r.iterate_violations).sum();
    let aborted = summary.iter().filter(|r| r.aborted.is_some()).count();
    let result = json!({
        "n": wp.model.n,
        "z": [wp.z.re, wp.z.im],
        "tau_z": wp.tau_z,
        "k": wp.k,
        "stride": wp.stride,
        "c_cfg": c.final_window_c,
        "walks": summary.len(),
        "iterate_checks": summary.iter().map(|r| r.iterate_checks).sum::<usize>(),
        "iterate_violations": violations,
        "aborted": aborted,
        "x_final_zero_fraction": summary.iter().filter(|r| r.x_final == 0).count() as f64 / k,
        "final_window_pass_fraction": summary.iter().filter(|r| r.final_window.pass).count() as f64 / k,
        "sigma_pass_fraction": summary.iter().filter(|r| r.final_window.sigma_pass).count() as f64 / k,
        "runs": summary,
    });
    artifacts.insert(0, Artifact::json("walk.json", result));
    artifacts.insert(0, Artifact::csv("walk_summary.csv", table));
    let mut failures = Vec::new();
    if violations > 0 {
        failures.push(format!("{violations} product-iterate violations"));
    }
    if aborted > 0 {
        failures.push(format!("{aborted} walks aborted"));
    }
    Ok(Outcome { artifacts, failures })
}

fn expansion(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let n = cfg.model.n;
    let nf = n as f64;
    let r_min = cfg.probe.r_min.unwrap_or(nf.ln().powf(1.5).ceil() as usize).max(1);
    let k_max = cfg.probe.k_max.unwrap_or((sparse_spectra::constants::DESK_KAPPA * nf).floor() as usize);
    let s_max = (nf.ln().sqrt().floor() as usize).max(1);
    let budget = cfg.probe.budget;
    let reports = per_trial(cfg.trials, |t| {
        let p = trial_params(cfg, t);
        let b = sample(cfg, &p)?;
        let census = graph::expansion_census(&b, &CensusConfig::sampled(n, r_min, k_max, budget, p.seed))?;
        let density = graph::local_density_check(&b, s_max, budget.saturating_mul(1000))?;
        let (regular, witness) = degseq_regular(&b.degree_sequence(), cfg.model.d, p.eps().sqrt(), 16.0, n);
        Ok((census, density, regular, witness))
    })?;
    let mut table = Table::new(&[
        "trial",
        "size",
        "alpha",
        "draws",
        "violations",
        "filtered_draws",
        "filtered_violations",
        "min_unique",
    ]);
    let mut per = Vec::new();
    for (t, (census, density, regular, witness)) in reports.iter().enumerate() {
        for s in &census.sizes {
            table.push(vec![
                t.to_string(),
                s.size.to_string(),
                num(s.alpha),
                s.draws.to_string(),
                s.violations.to_string(),
                s.filtered_draws.to_string(),
                s.filtered_violations.to_string(),
                s.min_unique.map_or(String::new(), |u| u.to_string()),
            ]);
        }
        per.push(json!({
            "trial": t,
            "expansion_holds": census.holds(),
            "partial": census.partial,
            "worst": census.worst,
            "density": density,
            "degrees_regular": regular,
            "regularity_witness": witness,
        }));
    }
    let k = reports.len() as f64;
    let result = json!({
        "r_min": r_min,
        "k_max": k_max,
        "s_max": s_max,
        "budget": budget,
        "expansion_fraction": reports.iter().filter(|r| r.0.holds()).count() as f64 / k,
        "density_pass_fraction": reports.iter().filter(|r| r.1 == graph::DensityVerdict::Pass).count() as f64 / k,
        "regular_fraction": reports.iter().filter(|r| r.2).count() as f64 / k,
        "trials": per,
    });
    Ok(Outcome {
        artifacts: vec![Artifact::csv("expansion.csv", table), Artifact::json("expansion.json", result)],
        failures: Vec::new(),
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct SuiteCheck {
    pub name: String,
    pub pass: bool,
    pub detail: serde_json::Value,
}

#[derive(Clone, Debug, Serialize)]
pub struct TailRow {
    pub t: usize,
    pub frequency: f64,
    pub exact: f64,
    pub bound: f64,
    pub holds: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct AnticoncReport {
    pub checks: Vec<SuiteCheck>,
    pub tail: Vec<TailRow>,
    pub bins: BinComparison,
}

impl AnticoncReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }
}

fn check(name: &str, pass: bool, detail: impl Serialize) -> SuiteCheck {
    SuiteCheck { name: name.into(), pass, detail: serde_json::to_value(detail).expect("serializes") }
}

fn ln_choose(n: u64, k: u64) -> f64 {
    (1..=k).map(|i| ((n - k + i) as f64 / i as f64).ln()).sum()
}

fn real(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

/// The drift-lemma tail, then the Lévy, LKR and slice instance families
/// with their exact oracles.
pub fn anticonc_suite(seed: u64, trials: usize, p: f64, k: usize, ts: &[usize], tail_trials: usize) -> sparse_spectra::Result<AnticoncReport> {
    let sd = |label: u64| derive_seed(seed, &[label]);
    let mut checks = Vec::new();

    let hist = walk::walk_tail_histogram(p, k, tail_trials, sd(1))?;
    let exact = walk::walk_tail_exact(p, k);
    let tail: Vec<TailRow> = ts
        .iter()
        .map(|&t| {
            let frequency = hist.iter().skip(t).sum::<u64>() as f64 / tail_trials as f64;
            let bound = (sparse_spectra::constants::DRIFT_C_FIT * p).powf(t as f64 / 2.0);
            TailRow { t, frequency, exact: exact.iter().skip(t).sum(), bound, holds: frequency <= bound }
        })
        .collect();
    let bins = walk::compare_bins(&hist, &exact);
    checks.push(check("drift_tail_bound", tail.iter().all(|r| r.holds), &tail));
    checks.push(check("drift_dp_bins", bins.holds, json!({ "worst_z": bins.worst_z })));

    // Lévy concentration
    let zero = |_: &mut rand_chacha::ChaCha8Rng| real(0.0);
    let e = anticonc::levy_estimate(&zero, 0.1, trials, sd(2))?;
    checks.push(check("levy_constant", e.value == 1.0, &e));
    let ber = anticonc::scaled_bernoulli(real(1.0), 0.5);
    let e = anticonc::levy_estimate(&ber, 0.1, trials, sd(3))?;
    checks.push(check("levy_bernoulli", (e.value - 0.5).abs() <= e.half_width && e.value_2t >= e.value, &e));
    let binom = |rng: &mut rand_chacha::ChaCha8Rng| {
        use rand::Rng;
        real((0..100).filter(|_| rng.gen::<bool>()).count() as f64)
    };
    let central = (ln_choose(100, 50) - 100.0 * 2f64.ln()).exp();
    // the sup over atoms is biased upwards, so this oracle gets more trials
    let e: ConcentrationEstimate = anticonc::levy_estimate(&binom, 0.0, trials.max(20_000), sd(4))?;
    checks.push(check(
        "levy_central_binomial",
        (e.value - central).abs() <= e.half_width,
        json!({ "estimate": e, "exact": central }),
    ));

    // LKR
    let consts: Vec<_> = (0..10).map(|i| move |_: &mut rand_chacha::ChaCha8Rng| real(i as f64)).collect();
    let refs: Vec<Sampler<'_>> = consts.iter().map(|s| s as Sampler<'_>).collect();
    let r: LkrCheck = anticonc::lkr_check(&refs, 0.1, trials, sd(5))?;
    checks.push(check("lkr_constants_skipped", r.pass.is_none(), &r));
    let mut rng = stream(sd(6), 0, 0);
    let phased: Vec<_> = (0..100)
        .map(|_| {
            use rand::Rng;
            anticonc::scaled_bernoulli(Complex64::from_polar(1.0, rng.gen_range(0.0..std::f64::consts::TAU)), 0.5)
        })
        .collect();
    let refs: Vec<Sampler<'_>> = phased.iter().map(|s| s as Sampler<'_>).collect();
    let r = anticonc::lkr_check(&refs, 0.4, trials, sd(7))?;
    checks.push(check("lkr_unit_phases", r.pass == Some(true) && r.lhs <= 4.0 / 50f64.sqrt(), &r));
    let single: Vec<Sampler<'_>> = vec![&ber];
    let r = anticonc::lkr_check(&single, 0.1, trials, sd(8))?;
    checks.push(check("lkr_single_bernoulli", r.pass == Some(true), &r));

    // slice
    let ones = vec![real(1.0); 40];
    let fully = matches!(anticonc::slice_mc(&ones, 10, 0.1, trials, sd(9)), Err(CoreError::PreconditionViolated(_)));
    checks.push(check("slice_concentrated_rejected", fully, json!(null)));
    let half: Vec<Complex64> = (0..100).map(|i| real(if i < 50 { 1.0 } else { 0.0 })).collect();
    let s: SliceCheck = anticonc::slice_mc(&half, 20, 0.1, trials, sd(10))?;
    let hyper = (2.0 * ln_choose(50, 10) - ln_choose(100, 20)).exp();
    checks.push(check(
        "slice_hypergeometric",
        (s.estimate.value - hyper).abs() <= s.estimate.half_width,
        json!({ "check": s, "exact": hyper }),
    ));
    let mut rng = stream(sd(11), 0, 0);
    let mut v: Vec<Complex64> = (0..200)
        .map(|_| {
            use rand::Rng;
            use rand_distr::StandardNormal;
            Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
        })
        .collect();
    let nv = v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
    v.iter_mut().for_each(|x| *x /= nv);
    let s = anticonc::slice_mc(&v, 50, 0.01, trials, sd(12))?;
    checks.push(check("slice_random_unit", s.gamma >= 0.3 && s.pass, &s));
    let mut oracles: Vec<SliceOracle> = Vec::new();
    let mut rng = stream(sd(13), 0, 0);
    for case in 0..20u64 {
        use rand::Rng;
        let n = rng.gen_range(4..=20);
        let m = rng.gen_range(1..=n / 2);
        let v: Vec<Complex64> = (0..n).map(|_| real(rng.gen_range(-2..=2) as f64)).collect();
        oracles.push(anticonc::slice_oracle_agreement(&v, m, 0.1, trials.max(4000), derive_seed(sd(14), &[case]))?);
    }
    checks.push(check("slice_enumeration", oracles.iter().all(|o| o.agrees), &oracles));
    Ok(AnticoncReport { checks, tail, bins })
}

fn anticonc_run(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let p = &cfg.probe;
    let report = anticonc_suite(cfg.seed, p.anticonc_trials, p.tail_p, p.tail_k, &p.tail_ts, p.tail_trials)?;
    let mut bins = Table::new(&["bin_start", "observed", "expected_mass"]);
    for &(i, o, e) in &report.bins.bins {
        bins.push(vec![i.to_string(), o.to_string(), num(e)]);
    }
    let mut checks = Table::new(&["check", "pass"]);
    for c in &report.checks {
        checks.push(vec![c.name.clone(), opt_bool(Some(c.pass))]);
    }
    let failures = report.checks.iter().filter(|c| !c.pass).map(|c| c.name.clone()).collect();
    Ok(Outcome {
        artifacts: vec![
            Artifact::csv("tail_bins.csv", bins),
            Artifact::csv("anticonc_checks.csv", checks),
            Artifact::json("anticonc.json", report),
        ],
        failures,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct SubcriticalTrial {
    pub trial: u64,
    pub zero_fraction: f64,
    pub trivial_fraction: f64,
    pub largest_component: usize,
    pub cycles: usize,
}

fn subcritical(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let c = cfg.constants();
    let n = cfg.model.n as f64;
    let rows = per_trial(cfg.trials, |t| {
        let b = sample(cfg, &trial_params(cfg, t))?;
        let g = Digraph::from_matrix(&b);
        let zeros = spectral::eigen_spectrum(&b)?.points().iter().filter(|l| l.norm() <= c.zero_tol).count();
        let trivial = trivial_image_census(&g).count;
        let scc = scc_structure(&g);
        Ok(SubcriticalTrial {
            trial: t,
            zero_fraction: zeros as f64 / n,
            trivial_fraction: trivial as f64 / n,
            largest_component: scc.components.iter().map(Vec::len).max().unwrap_or(0),
            cycles: scc.kinds.iter().filter(|k| **k == graph::ComponentKind::Cycle).count(),
        })
    })?;
    let mut table = Table::new(&["trial", "zero_fraction", "trivial_fraction", "largest_component", "cycles"]);
    for r in &rows {
        table.push(vec![
            r.trial.to_string(),
            num(r.zero_fraction),
            num(r.trivial_fraction),
            r.largest_component.to_string(),
            r.cycles.to_string(),
        ]);
    }
    let ordered = rows.iter().filter(|r| r.zero_fraction >= r.trivial_fraction).count();
    let mean_trivial = mean(rows.iter().map(|r| r.trivial_fraction));
    let result = json!({
        "n": cfg.model.n,
        "d": cfg.model.d,
        "zero_tol": c.zero_tol,
        "mean_zero_fraction": mean(rows.iter().map(|r| r.zero_fraction)),
        "mean_trivial_fraction": mean_trivial,
        "zero_at_least_trivial_in_all": ordered == rows.len(),
        "pilot_trivial_fraction": c.subcritical_trivial_fraction,
        "trials": rows,
    });
    let mut failures = Vec::new();
    if ordered < rows.len() {
        // trivial-image vertices are killed by a power of M, so this is a defect
        failures.push(format!("zero fraction below trivial-image fraction in {} trials", rows.len() - ordered));
    }
    Ok(Outcome {
        artifacts: vec![Artifact::csv("subcritical.csv", table), Artifact::json("subcritical.json", result)],
        failures,
    })
}

fn verify_la(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let (seed, scale) = (cfg.seed, cfg.probe.scale);
    let mut suites = Vec::new();
    if matches!(cfg.probe.suite, Suite::Exact | Suite::All) {
        suites.push(("exact", verify::exact_identity_suite(seed, scale)?));
    }
    if matches!(cfg.probe.suite, Suite::Brute | Suite::All) {
        suites.push(("brute", verify::brute_force_suite(seed, scale)?));
    }
    let mut table = Table::new(&["suite", "check", "instances", "failures", "worst"]);
    let mut failures = Vec::new();
    for (name, rep) in &suites {
        for c in &rep.checks {
            table.push(vec![name.to_string(), c.name.clone(), c.instances.to_string(), c.failures.to_string(), num(c.worst)]);
            if c.failures > 0 {
                failures.push(format!("{name}/{}: {} of {} failed", c.name, c.failures, c.instances));
            }
        }
    }
    let result: serde_json::Map<String, serde_json::Value> = suites
        .iter()
        .map(|(n, r)| (n.to_string(), json!({ "passed": r.passed(), "checks": r.checks })))
        .collect();
    Ok(Outcome {
        artifacts: vec![Artifact::csv("verify.csv", table), Artifact::json("verify.json", result)],
        failures,
    })
}

/// Mean singular-value measure of `B - zI` over `trials` boosted draws.
pub fn mean_singular_measure(params: &ModelParams, z: Complex64, trials: usize) -> Result<EmpiricalMeasure, CliError> {
    let parts = per_trial(trials, |t| spectral::singular_measure(&sample_modified(&params.with_seed(trial_seed(params.seed, t)))?, z))?;
    Ok(EmpiricalMeasure::pooled(&parts)?)
}
