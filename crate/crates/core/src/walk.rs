//! The revelation process: index partition, extraction of high-value
//! vertices, the reveal order, and the window-height walk `X_t`.

use std::fmt::Write as _;

use num_complex::Complex64;
use rand::seq::SliceRandom;
use rand::Rng;
use serde::Serialize;

use crate::constants;
use crate::error::{invalid, Error, Result};
use crate::graph::{expansion_census, local_density_check, CensusConfig, DensityVerdict};
use crate::linalg::{self, CMat};
use crate::matrix::BinaryMatrix;
use crate::model::{degseq_regular, sample_modified, ModelParams};
use crate::rng::{derive_seed, domain, stream};
use crate::sv::{project_onto_columns, smallest_right_singular};

#[derive(Clone, Debug, Serialize)]
pub struct WalkParams {
    pub model: ModelParams,
    pub z: Complex64,
    /// `K` in `eps_r = exp(-K (ln(n/r))^9)`.
    pub k: f64,
    /// `tau(z)`; estimated by [`estimate_tau`] when absent.
    pub tau_z: Option<f64>,
    /// Spectra are recomputed every `stride` steps.
    pub stride: usize,
    /// Budget for the expansion and density events; `None` skips them.
    pub flag_budget: Option<usize>,
    pub pilot_runs: usize,
}

impl WalkParams {
    pub fn new(model: ModelParams, z: Complex64) -> Self {
        let stride = if model.n <= 600 { 1 } else { 4 };
        Self { model, z, k: constants::DESK_K, tau_z: None, stride, flag_budget: None, pilot_runs: 20 }
    }

    pub fn validate(&self) -> Result<()> {
        self.model.validate_process()?;
        if !(self.k > 0.0) {
            return invalid("K must be positive");
        }
        if self.stride == 0 {
            return invalid("stride must be at least 1");
        }
        Ok(())
    }
}

/// `ln eps_r`; `-inf` for `r = 0`.
pub fn ln_epsilon_r(n: usize, r: usize, k: f64) -> f64 {
    if r == 0 {
        return f64::NEG_INFINITY;
    }
    -k * (n as f64 / r as f64).ln().powi(9)
}

/// `eps_r` and whether it was clamped to the smallest positive normal.
pub fn epsilon_r(n: usize, r: usize, k: f64) -> Result<(f64, bool)> {
    if r < 1 || r > n {
        return invalid(format!("need 1 <= r <= n, got r = {r}, n = {n}"));
    }
    let v = ln_epsilon_r(n, r, k).exp();
    if v < f64::MIN_POSITIVE {
        Ok((f64::MIN_POSITIVE, true))
    } else {
        Ok((v, false))
    }
}

/// The index partition and reveal order.
#[derive(Clone, Debug, Serialize)]
pub struct Process {
    pub n: usize,
    pub ell: usize,
    pub m: usize,
    /// `T1 = [0, t1_end)`, `T2 = [t1_end, n - ell)`, `T3 = [n - ell, n)`.
    pub t1_end: usize,
    pub h: Vec<usize>,
    /// `S_m` ascending, then `v_{m+1}, ..., v_n`.
    pub order: Vec<usize>,
    /// `val(j)` for `j` in `T2`.
    pub val: Vec<usize>,
    /// Degrees within `B_{n-ell}`.
    pub out_core: Vec<usize>,
    pub in_core: Vec<usize>,
    /// Degrees into and from `T1`.
    pub out_t1: Vec<usize>,
    pub in_t1: Vec<usize>,
    pub degree_bad: Vec<bool>,
}

impl Process {
    /// `S_t` as a slice of the order (`t >= m`).
    pub fn s(&self, t: usize) -> &[usize] {
        &self.order[..t]
    }

    /// `v_t` for `m < t <= n`.
    pub fn v(&self, t: usize) -> usize {
        self.order[t - 1]
    }
}

pub fn build_process(b: &BinaryMatrix, params: &ModelParams, seed: u64) -> Result<Process> {
    let n = params.n;
    if !b.is_square() || b.rows() != n {
        return invalid("B must be n x n");
    }
    let ell = params.ell;
    if ell >= n {
        return invalid("ell must be below n");
    }
    let eps = params.eps();
    let core = n - ell;
    let t1_end = ((n as f64 * (1.0 - eps)).floor() as usize).min(core);
    let extracted = params.extracted();
    if extracted > core - t1_end {
        return invalid(format!("floor(eps^3 n) = {extracted} exceeds |T2| = {}", core - t1_end));
    }
    let count = |l: &[usize], hi: usize| l.iter().filter(|&&i| i < hi).count();
    let out_core: Vec<usize> = (0..n).map(|j| count(b.col(j), core)).collect();
    let in_core: Vec<usize> = (0..n).map(|j| count(b.row(j), core)).collect();
    let out_t1: Vec<usize> = (0..n).map(|j| count(b.col(j), t1_end)).collect();
    let in_t1: Vec<usize> = (0..n).map(|j| count(b.row(j), t1_end)).collect();
    let val: Vec<usize> = (t1_end..core).map(|j| out_core[j].min(in_core[j])).collect();
    let mut t2: Vec<usize> = (t1_end..core).collect();
    t2.sort_by(|&a, &b| val[b - t1_end].cmp(&val[a - t1_end]).then(a.cmp(&b)));
    let mut h: Vec<usize> = t2[..extracted].to_vec();
    h.sort_unstable();
    let mut in_h = vec![false; n];
    for &j in &h {
        in_h[j] = true;
    }
    let mut order: Vec<usize> = (0..core).filter(|&j| !in_h[j]).collect();
    let mut rest = h.clone();
    rest.shuffle(&mut stream(seed, domain::PROCESS, 0));
    order.extend(rest);
    order.extend(core..n);
    let l1 = (1.0 / eps).ln();
    let degree_bad = (0..n)
        .map(|v| out_t1[v].min(in_t1[v]) as f64 <= l1.sqrt() || out_core[v].max(in_core[v]) as f64 >= l1 * l1)
        .collect();
    Ok(Process { n, ell, m: core - extracted, t1_end, h, order, val, out_core, in_core, out_t1, in_t1, degree_bad })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Rule {
    /// First epoch, in listed order.
    ForcedUp,
    SigmaDown,
    DegreeUp,
    ProjectionDown,
    ElseUp,
    /// Second epoch.
    SecondDown,
    SecondZero,
    SecondProjectionDown,
    SecondUp,
}

impl Rule {
    pub fn label(&self) -> &'static str {
        match self {
            Rule::ForcedUp => "e1_forced_up",
            Rule::SigmaDown => "e1_sigma_down",
            Rule::DegreeUp => "e1_degree_up",
            Rule::ProjectionDown => "e1_projection_down",
            Rule::ElseUp => "e1_else_up",
            Rule::SecondDown => "e2_sigma_down",
            Rule::SecondZero => "e2_zero",
            Rule::SecondProjectionDown => "e2_projection_down",
            Rule::SecondUp => "e2_else_up",
        }
    }
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct Flags {
    pub g: Option<bool>,
    pub h: Option<bool>,
    pub j: Option<bool>,
    pub g_prime: Option<bool>,
}

#[derive(Clone, Debug, Serialize)]
pub struct WalkStep {
    /// The step goes from `t` to `t + 1`.
    pub t: usize,
    pub x: usize,
    pub x_next: usize,
    pub rule: Rule,
    pub vertex: usize,
    pub deg_out: usize,
    pub deg_in: usize,
    /// Window log-product at `t + 1` when recomputed there.
    pub log_window: Option<f64>,
    /// Threshold rules used a stale spectrum.
    pub approximate: bool,
    /// The product inequality over the block ending here, when checked.
    pub iterate_ok: Option<bool>,
    pub flags: Flags,
}

#[derive(Clone, Debug, Serialize)]
pub struct WalkTrace {
    pub n: usize,
    pub m: usize,
    pub ell: usize,
    pub delta_m: usize,
    pub tau_z: f64,
    pub k: f64,
    pub stride: usize,
    pub x_m: usize,
    pub log_window_m: f64,
    pub steps: Vec<WalkStep>,
    pub x_final: usize,
    pub iterate_checks: usize,
    pub iterate_violations: usize,
    /// The run stopped early on a decomposition failure.
    pub aborted: Option<String>,
}

impl WalkTrace {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("t,x,rule,deg_out,deg_in,log_w,g,h,j,g_prime\n");
        let f = |b: Option<bool>| b.map_or(String::new(), |v| (v as u8).to_string());
        for st in &self.steps {
            writeln!(
                s,
                "{},{},{},{},{},{},{},{},{},{}",
                st.t + 1,
                st.x_next,
                st.rule.label(),
                st.deg_out,
                st.deg_in,
                st.log_window.map_or(String::new(), |v| format!("{v:.12e}")),
                f(st.flags.g),
                f(st.flags.h),
                f(st.flags.j),
                f(st.flags.g_prime),
            )
            .unwrap();
        }
        s
    }
}

/// `delta m = floor(eps^4 min(1/ln(1/tau), 1/25) m)`.
pub fn delta_m(eps: f64, tau: f64, m: usize) -> usize {
    let l = (1.0 / tau).ln();
    let f = if l > 0.0 { (1.0 / l).min(1.0 / 25.0) } else { 1.0 / 25.0 };
    (eps.powi(4) * f * m as f64).floor() as usize
}

/// `X_m = m - ceil((1 - eps^4) m)`.
pub fn x_start(eps: f64, m: usize) -> usize {
    m - ((1.0 - eps.powi(4)) * m as f64).ceil() as usize
}

/// Fifth percentile (nearest rank) of `sigma_{ceil((1-eps^4)m)}(B_m - zI)`
/// over `runs` pilot draws.
pub fn estimate_tau(params: &WalkParams, seed: u64) -> Result<f64> {
    let mp = &params.model;
    let eps = mp.eps();
    let mut vals = Vec::new();
    for r in 0..params.pilot_runs.max(1) as u64 {
        let s = derive_seed(seed, &[domain::PILOT, r]);
        let b = sample_modified(&mp.with_seed(s))?;
        let p = build_process(&b, mp, s)?;
        let bm = b.submatrix(p.s(p.m), p.s(p.m));
        let sv = linalg::singular_values(bm.shifted_dense(params.z).as_ref())?;
        let idx = ((1.0 - eps.powi(4)) * p.m as f64).ceil() as usize;
        vals.push(sv[idx.clamp(1, p.m) - 1]);
    }
    vals.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let rank = ((0.05 * vals.len() as f64).ceil() as usize).max(1);
    Ok(vals[rank - 1])
}

/// `sum_{j=x}^{x+dm} ln sigma_{t-j}` from non-increasing values of a
/// `t x t` matrix.
fn log_window(vals: &[f64], t: usize, x: usize, dm: usize) -> f64 {
    (x..=x + dm)
        .map(|j| if j < t { vals[t - j - 1].ln() } else { f64::NEG_INFINITY })
        .sum()
}

fn block(w: &CMat, rows: usize, cols: usize) -> CMat {
    CMat::from_fn(rows, cols, |i, j| w[(i, j)])
}

/// Norm of the incoming column of `W_{t+1}` projected onto the bottom `r`
/// left singular vectors of `W_t`.
fn column_projection(w: &CMat, t: usize, r: usize) -> Result<f64> {
    let wt = block(w, t, t);
    let c: Vec<Complex64> = (0..t).map(|i| w[(i, t)]).collect();
    if r == 1 {
        let wh = CMat::from_fn(t, t, |i, j| wt[(j, i)].conj());
        let (_, u) = smallest_right_singular(wh.as_ref())?;
        return Ok(linalg::dot(&u, &c).norm());
    }
    let f = linalg::full_svd(wt.as_ref())?;
    let r = r.min(t);
    Ok(project_onto_columns(f.u.as_ref(), t - r, t, &c)?.0)
}

/// Norm of the conjugated incoming row projected onto the bottom `r` right
/// singular vectors of `W*_{t+1} = W[0..t, 0..t+1]`. For `r = 1` this is the
/// kernel direction `(-W_t^{-1} c, 1)` whenever `W_t` is invertible.
fn row_projection(w: &CMat, t: usize, r: usize) -> Result<f64> {
    let ws = block(w, t, t + 1);
    let x: Vec<Complex64> = (0..=t).map(|j| w[(t, j)].conj()).collect();
    if r == 1 {
        let wt = block(w, t, t);
        let c: Vec<Complex64> = (0..t).map(|i| w[(i, t)]).collect();
        let mut k: Vec<Complex64> = linalg::solve(wt.as_ref(), &c).into_iter().map(|v| -v).collect();
        k.push(Complex64::new(1.0, 0.0));
        let nk = linalg::norm(&k);
        if nk.is_finite() {
            let k: Vec<Complex64> = k.iter().map(|v| v / nk).collect();
            let resid = linalg::norm(&linalg::matvec(ws.as_ref(), &k));
            if resid <= 1e-10 * (1.0 + linalg::norm(&c)) {
                return Ok(linalg::dot(&k, &x).norm());
            }
        }
    }
    let g = linalg::full_svd(ws.as_ref())?;
    let r = r.min(t + 1);
    Ok(project_onto_columns(g.v.as_ref(), t + 1 - r, t + 1, &x)?.0)
}

fn structure_flags(b: &BinaryMatrix, params: &ModelParams, second: bool, budget: usize, seed: u64) -> Option<bool> {
    let n = params.n;
    let nf = n as f64;
    let eps = params.eps();
    let d_ok = |m: &BinaryMatrix| -> Option<bool> {
        let (reg, _) = degseq_regular(&m.degree_sequence(), params.d, eps.sqrt(), 16.0, n);
        let s_max = (nf.ln().sqrt().floor() as usize).clamp(1, m.rows());
        match local_density_check(m, s_max, budget).ok()? {
            DensityVerdict::Pass => Some(reg),
            DensityVerdict::Fail { .. } => Some(false),
            DensityVerdict::Undecided { .. } => None,
        }
    };
    let r = if second { nf.ln().ln().powi(2) } else { nf.ln().powf(1.5) };
    let k_max = (constants::DESK_KAPPA * nf).floor() as usize;
    let u_ok = |m: &BinaryMatrix| -> Option<bool> {
        let r_min = r.ceil() as usize;
        if r_min > k_max {
            return Some(true);
        }
        let cfg = CensusConfig::sampled(n, r_min, k_max, budget, seed);
        Some(expansion_census(m, &cfg).ok()?.holds())
    };
    let bt = b.transpose();
    let parts = if second { vec![u_ok(&bt), d_ok(&bt)] } else { vec![u_ok(b), u_ok(&bt), d_ok(b), d_ok(&bt)] };
    parts.into_iter().try_fold(true, |acc, p| p.map(|v| acc && v))
}

fn star_flags(bs: &BinaryMatrix, params: &ModelParams, budget: usize, seed: u64) -> Option<bool> {
    let n = params.n;
    let nf = n as f64;
    let t = bs.rows();
    let eps = params.eps();
    let r = nf.ln().ln().powi(2).ceil() as usize;
    let k_max = ((constants::DESK_KAPPA * nf).floor() as usize).max(1);
    let mut cfg = CensusConfig::sampled(n, r.min(k_max), k_max, budget, seed);
    cfg.distinguished = Some(t);
    cfg.distinguished_k_max = 3;
    let rep = expansion_census(bs, &cfg).ok()?;
    let mut padded: Vec<(usize, usize)> = bs.entries().collect();
    padded.sort_unstable();
    let sq = BinaryMatrix::from_entries(t + 1, t + 1, &padded).ok()?;
    let (reg, _) = degseq_regular(&bs.degree_sequence(), params.d, eps.sqrt(), 16.0, n);
    let s_max = (nf.ln().sqrt().floor() as usize).clamp(1, t + 1);
    let dens = match local_density_check(&sq, s_max, budget).ok()? {
        DensityVerdict::Pass => true,
        DensityVerdict::Fail { .. } => false,
        DensityVerdict::Undecided { .. } => return None,
    };
    Some(rep.holds() && rep.distinguished_violations == 0 && reg && dens)
}

/// Runs both epochs on `B`. The `tau_z` of `params` must be set or is
/// estimated first.
pub fn run_walk(b: &BinaryMatrix, params: &WalkParams, seed: u64) -> Result<WalkTrace> {
    params.validate()?;
    let mp = &params.model;
    let (n, ell) = (mp.n, mp.ell);
    let eps = mp.eps();
    let tau_z = match params.tau_z {
        Some(t) => t,
        None => estimate_tau(params, seed)?,
    };
    let proc_ = build_process(b, mp, seed)?;
    let m = proc_.m;
    let dm = delta_m(eps, tau_z, m);
    let x_m = x_start(eps, m);
    let z = params.z;
    let perm = b.permuted(&proc_.order);
    linalg::check_cap(n, n)?;
    let w = perm.shifted_dense(z);
    let nf = n as f64;
    let l_eps = (1.0 / eps).ln();
    let ln_tau1 = (8.0 * (mp.d * (2.0 / eps).ln().powi(4) + z.norm_sqr())).ln();
    let ln_tau2 = (8.0 * nf.powi(4) * (1.0 + z.norm_sqr())).ln();
    let ln_eps1 = ln_epsilon_r(n, 1, params.k);
    let svals = |t: usize| linalg::singular_values(block(&w, t, t).as_ref());
    let mut vals = svals(m)?;
    let mut vals_at = m;
    let log_window_m = log_window(&vals, m, x_m, dm);
    let mut nnz: usize = (0..m).map(|i| perm.row(i).iter().filter(|&&j| j < m).count()).sum();
    let mut x = x_m;
    let mut steps = Vec::with_capacity(n - m);
    let (mut checks, mut violations) = (0, 0);
    // window at the last recompute point and the accumulated allowance since
    let mut anchor = (log_window_m, 0.0f64);
    let mut aborted = None;
    let extra_j = |t: usize| -> usize {
        // degree-bad vertices among v_{t+1}, ..., v_{n-ell}
        (t + 1..=n - ell).filter(|&s| proc_.degree_bad[proc_.v(s)]).count()
    };
    for t in m..n {
        let v = proc_.v(t + 1);
        let pv = t; // position of v in the permuted order
        nnz += perm.row(pv).iter().filter(|&&j| j <= pv).count() + perm.col(pv).iter().filter(|&&i| i < pv).count();
        let approximate = vals_at != t;
        let sigma_ln = |idx: usize| -> f64 {
            // 1-based index into the spectrum of W_t
            if idx >= 1 && idx <= vals.len() {
                vals[idx - 1].ln()
            } else {
                f64::NEG_INFINITY
            }
        };
        let mut flags = Flags::default();
        let outcome: Result<(Rule, usize, f64)> = (|| {
            if t < n - ell {
                let ln_e = ln_epsilon_r(n, x, params.k);
                flags.h = Some(proc_.degree_bad[v]);
                flags.j = Some(extra_j(t) as f64 / ((n - ell) - t) as f64 >= eps);
                if x as f64 <= (n - ell - t) as f64 / 16.0
                    || nnz as f64 >= 2.0 * mp.d * nf
                    || t as f64 >= (n - ell) as f64 - nf.ln().powf(1.75)
                {
                    return Ok((Rule::ForcedUp, x + 1, ln_e));
                }
                if sigma_ln(t - x / 2) >= ln_e {
                    return Ok((Rule::SigmaDown, x - 1, ln_e));
                }
                if proc_.out_t1[v].min(proc_.in_t1[v]) as f64 <= l_eps.sqrt()
                    || proc_.out_core[v].max(proc_.in_core[v]) as f64 >= l_eps * l_eps
                {
                    return Ok((Rule::DegreeUp, x + 1, ln_e));
                }
                if column_projection(&w, t, x)?.ln() >= ln_e && row_projection(&w, t, x)?.ln() >= ln_e {
                    return Ok((Rule::ProjectionDown, x - 1, ln_e));
                }
                Ok((Rule::ElseUp, x + 1, ln_e))
            } else {
                let s_ok = sigma_ln(t) >= ln_eps1;
                if x > 1 && s_ok {
                    return Ok((Rule::SecondDown, x - 1, ln_eps1));
                }
                if x == 1 && s_ok {
                    return Ok((Rule::SecondZero, 0, ln_eps1));
                }
                if x == 0 {
                    if row_projection(&w, t, 1)?.ln() >= ln_eps1 {
                        return Ok((Rule::SecondZero, 0, ln_eps1));
                    }
                } else if !s_ok {
                    if column_projection(&w, t, 1)?.ln() >= ln_eps1 && row_projection(&w, t, 1)?.ln() >= ln_eps1 {
                        return Ok((Rule::SecondProjectionDown, x - 1, ln_eps1));
                    }
                }
                Ok((Rule::SecondUp, x + 1, ln_eps1))
            }
        })();
        let (rule, x_next, ln_e) = match outcome {
            Ok(o) => o,
            Err(e) => {
                aborted = Some(e.to_string());
                break;
            }
        };
        if let Some(budget) = params.flag_budget {
            let bt = perm.leading(t);
            let second = t >= n - ell;
            flags.g = structure_flags(&bt, mp, second, budget, derive_seed(seed, &[domain::CENSUS, t as u64]));
            if second {
                let rows: Vec<usize> = (0..t).collect();
                let cols: Vec<usize> = (0..=t).collect();
                let bs = perm.submatrix(&rows, &cols);
                flags.g_prime = star_flags(&bs, mp, budget, derive_seed(seed, &[domain::CENSUS, t as u64, 1]));
            }
        }
        let ln_tau = if t < n - ell { ln_tau1 } else { ln_tau2 };
        anchor.1 += 2.0 * ln_e - 2.0 * ln_tau;
        let recompute = (t + 1 - m) % params.stride == 0 || t + 1 == n || t + 1 == n - ell;
        let mut log_w = None;
        let mut iterate_ok = None;
        if recompute {
            match svals(t + 1) {
                Ok(v) => {
                    vals = v;
                    vals_at = t + 1;
                }
                Err(e) => {
                    aborted = Some(e.to_string());
                    break;
                }
            }
            let lw = log_window(&vals, t + 1, x_next, dm);
            let need = anchor.0 + anchor.1;
            let slack = 1e-8 * (1.0 + need.abs());
            let ok = need == f64::NEG_INFINITY || lw >= need - slack;
            checks += 1;
            if !ok {
                violations += 1;
            }
            log_w = Some(lw);
            iterate_ok = Some(ok);
            anchor = (lw, 0.0);
        }
        steps.push(WalkStep {
            t,
            x,
            x_next,
            rule,
            vertex: v,
            deg_out: perm.col(pv).len(),
            deg_in: perm.row(pv).len(),
            log_window: log_w,
            approximate,
            iterate_ok,
            flags,
        });
        x = x_next;
    }
    Ok(WalkTrace {
        n,
        m,
        ell,
        delta_m: dm,
        tau_z,
        k: params.k,
        stride: params.stride,
        x_m,
        log_window_m,
        steps,
        x_final: x,
        iterate_checks: checks,
        iterate_violations: violations,
        aborted,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct FinalWindow {
    pub log_product: f64,
    pub log_threshold: f64,
    pub pass: bool,
    pub sigma_min: f64,
    pub log_sigma_threshold: f64,
    pub sigma_pass: bool,
}

/// `prod_{j=0}^{delta m} sigma_{n-j}(B - zI)` against `exp(-c eps n)`, and
/// `sigma_n` alone against `exp(-eps_cfg n)`.
pub fn final_window_check(trace: &WalkTrace, b: &BinaryMatrix, params: &WalkParams, c_cfg: f64, eps_cfg: f64) -> Result<FinalWindow> {
    let n = b.rows();
    let s = linalg::singular_values(b.shifted_dense(params.z).as_ref())?;
    let log_product = log_window(&s, n, 0, trace.delta_m);
    let log_threshold = -c_cfg * params.model.eps() * n as f64;
    let sigma_min = s[n - 1];
    let log_sigma_threshold = -eps_cfg * n as f64;
    Ok(FinalWindow {
        log_product,
        log_threshold,
        pass: log_product > log_threshold,
        sigma_min,
        log_sigma_threshold,
        sigma_pass: sigma_min.ln() > log_sigma_threshold,
    })
}

/// Simulates `X_1 = 0`, then `k - 1` steps that go down (reflecting at 0)
/// with probability `1 - p` and up otherwise. Returns the histogram of
/// `X_k`.
pub fn walk_tail_histogram(p: f64, k: usize, trials: usize, seed: u64) -> Result<Vec<u64>> {
    if !(0.0..1.0).contains(&p) || k == 0 {
        return invalid("need p in [0, 1) and k >= 1");
    }
    let mut hist = vec![0u64; k];
    let mut rng = stream(seed, domain::WALK_MC, 0);
    for _ in 0..trials {
        let mut x = 0usize;
        for _ in 1..k {
            if rng.gen::<f64>() < p {
                x += 1;
            } else {
                x = x.saturating_sub(1);
            }
        }
        hist[x] += 1;
    }
    Ok(hist)
}

/// Exact law of `X_k` for the same chain.
pub fn walk_tail_exact(p: f64, k: usize) -> Vec<f64> {
    let mut dist = vec![0.0; k.max(1)];
    dist[0] = 1.0;
    for _ in 1..k {
        let mut next = vec![0.0; dist.len()];
        for (x, &q) in dist.iter().enumerate() {
            if q == 0.0 {
                continue;
            }
            if x + 1 < next.len() {
                next[x + 1] += q * p;
            }
            next[x.saturating_sub(1)] += q * (1.0 - p);
        }
        dist = next;
    }
    dist
}

#[derive(Clone, Debug, Serialize)]
pub struct TailCheck {
    pub t: usize,
    pub frequency: f64,
    pub exact: f64,
    pub bound: f64,
    pub holds: bool,
}

/// `P(X_k >= t)` against `(c_fit p)^{t/2}`.
pub fn walk_tail_mc(p: f64, k: usize, t: usize, trials: usize, seed: u64) -> Result<TailCheck> {
    let hist = walk_tail_histogram(p, k, trials, seed)?;
    let hits: u64 = hist.iter().skip(t).sum();
    let frequency = hits as f64 / trials.max(1) as f64;
    let exact: f64 = walk_tail_exact(p, k).iter().skip(t).sum();
    let bound = (constants::DRIFT_C_FIT * p).powf(t as f64 / 2.0);
    Ok(TailCheck { t, frequency, exact, bound, holds: frequency <= bound })
}

#[derive(Clone, Debug, Serialize)]
pub struct BinComparison {
    pub bins: Vec<(usize, u64, f64)>,
    pub worst_z: f64,
    pub holds: bool,
}

/// Per-bin agreement of a histogram with the exact law; tail bins with
/// expected count below 5 are merged.
pub fn compare_bins(hist: &[u64], exact: &[f64]) -> BinComparison {
    let total: u64 = hist.iter().sum();
    let tf = total as f64;
    let mut bins = Vec::new();
    let mut i = 0;
    while i < exact.len() {
        let tail_e: f64 = exact[i..].iter().sum();
        if tail_e * tf < 10.0 || i + 1 == exact.len() {
            bins.push((i, hist[i..].iter().sum(), tail_e));
            break;
        }
        if exact[i] * tf < 5.0 {
            // merge forward until the bin is large enough
            let mut j = i;
            let (mut o, mut e) = (0u64, 0.0);
            while j < exact.len() && e * tf < 5.0 {
                o += hist[j];
                e += exact[j];
                j += 1;
            }
            bins.push((i, o, e));
            i = j;
        } else {
            bins.push((i, hist[i], exact[i]));
            i += 1;
        }
    }
    let mut worst = 0.0f64;
    for &(_, o, e) in &bins {
        let sd = (tf * e * (1.0 - e)).sqrt().max(1e-12);
        worst = worst.max((o as f64 - tf * e).abs() / sd);
    }
    BinComparison { bins, worst_z: worst, holds: worst <= 3.0 }
}

/// Error helper for callers that need a hard failure on violations.
pub fn require_iterates(trace: &WalkTrace) -> Result<()> {
    if trace.iterate_violations > 0 {
        return Err(Error::ToleranceNotMet(format!("{} product-iterate violations", trace.iterate_violations)));
    }
    Ok(())
}
