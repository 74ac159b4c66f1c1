//! Eigenvalue and singular-value measures, hermitized log-potentials, trace
//! moments and sublevel-set areas.

use std::fmt::Write as _;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{invalid, Result};
use crate::graph::{scc_structure, ComponentKind, Digraph};
use crate::linalg;
use crate::matrix::BinaryMatrix;
use crate::model::{log_sum_exp, sample_modified, ModelParams};
use crate::rng::trial_seed;

/// Equal-weight point masses on the line or the plane.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum EmpiricalMeasure {
    Real(Vec<f64>),
    Complex(Vec<Complex64>),
}

impl EmpiricalMeasure {
    pub fn len(&self) -> usize {
        match self {
            Self::Real(v) => v.len(),
            Self::Complex(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn weight(&self) -> f64 {
        1.0 / self.len() as f64
    }

    pub fn points(&self) -> Vec<Complex64> {
        match self {
            Self::Real(v) => v.iter().map(|&x| Complex64::new(x, 0.0)).collect(),
            Self::Complex(v) => v.clone(),
        }
    }

    /// Pools several measures into their average.
    pub fn pooled(parts: &[EmpiricalMeasure]) -> Result<Self> {
        if parts.iter().any(|p| p.len() != parts[0].len()) {
            return invalid("pooled measures must have equal sizes");
        }
        match parts.first() {
            None => invalid("nothing to pool"),
            Some(Self::Real(_)) => {
                let mut all = Vec::new();
                for p in parts {
                    match p {
                        Self::Real(v) => all.extend_from_slice(v),
                        _ => return invalid("dimension mismatch"),
                    }
                }
                Ok(Self::Real(all))
            }
            Some(Self::Complex(_)) => {
                let mut all = Vec::new();
                for p in parts {
                    match p {
                        Self::Complex(v) => all.extend_from_slice(v),
                        _ => return invalid("dimension mismatch"),
                    }
                }
                Ok(Self::Complex(all))
            }
        }
    }

    pub fn to_csv(&self) -> String {
        let w = self.weight();
        let mut s = String::new();
        match self {
            Self::Real(v) => {
                s.push_str("value,weight\n");
                for x in v {
                    writeln!(s, "{x:.17e},{w:.17e}").unwrap();
                }
            }
            Self::Complex(v) => {
                s.push_str("re,im,weight\n");
                for x in v {
                    writeln!(s, "{:.17e},{:.17e},{w:.17e}", x.re, x.im).unwrap();
                }
            }
        }
        s
    }
}

/// All eigenvalues. The matrix is split along its strongly connected
/// components; loop-free singletons contribute exact zeros and looped
/// singletons exact ones, so only non-trivial blocks are decomposed.
pub fn eigen_spectrum(m: &BinaryMatrix) -> Result<EmpiricalMeasure> {
    if !m.is_square() {
        return invalid("eigenvalues need a square matrix");
    }
    linalg::check_cap(m.rows(), m.cols())?;
    let scc = scc_structure(&Digraph::from_matrix(m));
    let mut out = Vec::with_capacity(m.rows());
    for (c, kind) in scc.components.iter().zip(&scc.kinds) {
        match kind {
            ComponentKind::Singleton { self_loop } => {
                out.push(Complex64::new(if *self_loop { 1.0 } else { 0.0 }, 0.0));
            }
            _ => {
                let block = m.submatrix(c, c).to_dense_real();
                out.extend(linalg::eigenvalues_real(block.as_ref())?);
            }
        }
    }
    Ok(EmpiricalMeasure::Complex(out))
}

/// Eigenvalues of the whole dense matrix, without the block split.
pub fn eigen_spectrum_dense(m: &BinaryMatrix) -> Result<EmpiricalMeasure> {
    if !m.is_square() {
        return invalid("eigenvalues need a square matrix");
    }
    Ok(EmpiricalMeasure::Complex(linalg::eigenvalues_real(m.to_dense_real().as_ref())?))
}

/// Singular values of `M - zI` as a measure.
pub fn singular_measure(m: &BinaryMatrix, z: Complex64) -> Result<EmpiricalMeasure> {
    linalg::check_cap(m.rows(), m.cols())?;
    Ok(EmpiricalMeasure::Real(linalg::singular_values(m.shifted_dense(z).as_ref())?))
}

#[derive(Clone, Debug, Serialize)]
pub struct LogPotential {
    /// `-(1/n) sum ln sigma_j(M - zI)`, `+inf` when flagged.
    pub value: f64,
    /// `-(1/n) ln |det(M - zI)|`.
    pub det_value: f64,
    pub infinite: bool,
}

pub fn log_potential(m: &BinaryMatrix, z: Complex64) -> Result<LogPotential> {
    if !m.is_square() {
        return invalid("log-potential needs a square matrix");
    }
    let n = m.rows();
    if n == 0 {
        return invalid("empty matrix");
    }
    let a = m.shifted_dense(z);
    let s = linalg::singular_values(a.as_ref())?;
    let nf = n as f64;
    let det_value = -linalg::log_abs_det(a.as_ref())? / nf;
    if s[n - 1] <= 1e-12 * s[0].max(1.0) {
        return Ok(LogPotential { value: f64::INFINITY, det_value, infinite: true });
    }
    let value = -s.iter().map(|x| x.ln()).sum::<f64>() / nf;
    Ok(LogPotential { value, det_value, infinite: false })
}

/// `-(1/n) sum ln |lambda_i - z|`.
pub fn log_potential_from_eigs(eigs: &[Complex64], z: Complex64) -> f64 {
    -eigs.iter().map(|l| (l - z).norm().ln()).sum::<f64>() / eigs.len() as f64
}

fn apply(m: &BinaryMatrix, adjoint: bool, x: &[f64], y: &mut [f64]) {
    y.iter_mut().for_each(|v| *v = 0.0);
    for (j, &xj) in x.iter().enumerate() {
        if xj == 0.0 {
            continue;
        }
        // M e_j is column j; M^T e_j is row j
        let targets = if adjoint { m.row(j) } else { m.col(j) };
        for &i in targets {
            y[i] += xj;
        }
    }
}

/// `(1/n) Tr prod_i M^{(s_i)}` with `M^{(1)} = M`, `M^{(-1)} = M^H`.
pub fn trace_moment(m: &BinaryMatrix, signs: &[i8]) -> Result<Complex64> {
    if !m.is_square() {
        return invalid("trace moment needs a square matrix");
    }
    if signs.len() > 20 || signs.iter().any(|&s| s != 1 && s != -1) {
        return invalid("signs must be +-1 and at most 20 of them");
    }
    let n = m.rows();
    if signs.is_empty() {
        return Ok(Complex64::new(1.0, 0.0));
    }
    let mut x = vec![0.0; n];
    let mut y = vec![0.0; n];
    let mut total = 0.0;
    for k in 0..n {
        x.iter_mut().for_each(|v| *v = 0.0);
        x[k] = 1.0;
        for &s in signs.iter().rev() {
            apply(m, s == -1, &x, &mut y);
            std::mem::swap(&mut x, &mut y);
        }
        total += x[k];
    }
    Ok(Complex64::new(total / n as f64, 0.0))
}

/// `(1/n) Tr ((A^H A)^r)` for `r = 1..=r_max` with `A = M - zI`, by the
/// chain `w_{j+1} = A w_j` or `A^H w_j` from each `e_k`.
pub fn shifted_moments(m: &BinaryMatrix, z: Complex64, r_max: usize) -> Result<Vec<f64>> {
    if !m.is_square() {
        return invalid("moments need a square matrix");
    }
    let n = m.rows();
    let mut acc = vec![0.0; r_max];
    let mut x = vec![Complex64::new(0.0, 0.0); n];
    let mut y = vec![Complex64::new(0.0, 0.0); n];
    for k in 0..n {
        x.iter_mut().for_each(|v| *v = Complex64::new(0.0, 0.0));
        x[k] = Complex64::new(1.0, 0.0);
        for j in 0..r_max {
            let adjoint = j % 2 == 1;
            let shift = if adjoint { z.conj() } else { z };
            for (i, yi) in y.iter_mut().enumerate() {
                *yi = -shift * x[i];
            }
            for (c, &xc) in x.iter().enumerate() {
                if xc.re == 0.0 && xc.im == 0.0 {
                    continue;
                }
                let targets = if adjoint { m.row(c) } else { m.col(c) };
                for &i in targets {
                    y[i] += xc;
                }
            }
            std::mem::swap(&mut x, &mut y);
            acc[j] += x.iter().map(|v| v.norm_sqr()).sum::<f64>();
        }
    }
    Ok(acc.into_iter().map(|a| a / n as f64).collect())
}

#[derive(Clone, Debug, Serialize)]
pub struct RotationalMoment {
    pub r: usize,
    pub mean_diff: f64,
    pub mc_sigma: f64,
    pub band: f64,
    pub within: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct RotationalReport {
    pub z: Complex64,
    pub trials: usize,
    pub moments: Vec<RotationalMoment>,
    pub holds: bool,
}

/// Per-trial moment differences between `B - zI` and `B - |z| I`.
pub fn rotational_trial(params: &ModelParams, z: Complex64, r_max: usize, trial: u64) -> Result<Vec<f64>> {
    let b = sample_modified(&params.with_seed(trial_seed(params.seed, trial)))?;
    let a = shifted_moments(&b, z, r_max)?;
    let c = shifted_moments(&b, Complex64::new(z.norm(), 0.0), r_max)?;
    Ok(a.iter().zip(&c).map(|(x, y)| x - y).collect())
}

/// Summarizes per-trial differences against the band `10 n^{-1/3}`
/// widened by three Monte Carlo standard errors.
pub fn rotational_summary(n: usize, z: Complex64, diffs: &[Vec<f64>]) -> RotationalReport {
    let t = diffs.len();
    let r_max = diffs.first().map_or(0, Vec::len);
    let band = crate::constants::rotational_band(n);
    let moments: Vec<RotationalMoment> = (0..r_max)
        .map(|j| {
            let xs: Vec<f64> = diffs.iter().map(|d| d[j]).collect();
            let (mean, sd) = mean_sd(&xs);
            let mc_sigma = sd / (t as f64).sqrt();
            RotationalMoment { r: j + 1, mean_diff: mean, mc_sigma, band, within: mean.abs() <= band + 3.0 * mc_sigma }
        })
        .collect();
    let holds = moments.iter().all(|m| m.within);
    RotationalReport { z, trials: t, moments, holds }
}

pub fn rotational_probe(params: &ModelParams, z: Complex64, r_max: usize, trials: usize) -> Result<RotationalReport> {
    let diffs = (0..trials as u64)
        .map(|t| rotational_trial(params, z, r_max, t))
        .collect::<Result<Vec<_>>>()?;
    Ok(rotational_summary(params.n, z, &diffs))
}

pub(crate) fn mean_sd(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    if xs.is_empty() {
        return (0.0, 0.0);
    }
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

#[derive(Clone, Debug, Serialize)]
pub struct SublevelArea {
    pub tau: f64,
    pub log_area: f64,
    pub log_area_lower: f64,
    pub log_area_upper: f64,
    /// Centres whose component was bracketed in closed form.
    pub closed_form: usize,
    /// Centres resolved on a polar grid.
    pub gridded: usize,
}

impl SublevelArea {
    pub fn area(&self) -> f64 {
        self.log_area.exp()
    }
}

/// Root in `ln r` of `mult ln r + sum_i ln(d_i + sign r) = target`,
/// increasing in `r` for `sign = +1`. Returns `None` when no root lies
/// below `r_cap`.
fn solve_radius(mult: f64, dists: &[f64], sign: f64, target: f64, r_cap: f64) -> Option<f64> {
    let g = |lr: f64| {
        let r = lr.exp();
        let mut v = mult * lr;
        for &d in dists {
            let t = d + sign * r;
            if t <= 0.0 {
                return f64::INFINITY;
            }
            v += t.ln();
        }
        v
    };
    let (mut lo, mut hi) = (-1.0e6 / mult.max(1.0), r_cap.ln());
    if g(hi) <= target {
        return None;
    }
    if g(lo) > target {
        return Some(f64::NEG_INFINITY);
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if g(mid) > target || g(mid).is_nan() {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Some(lo)
}

/// Lebesgue measure of `{z : |z| <= radius, prod |lambda_i - z| <= e^{-tau n}}`.
///
/// Each distinct eigenvalue `c` of multiplicity `k` owns the component
/// around it. With `D = |z - c|` the log-product lies between
/// `k ln D + sum ln(d_i - D)` and `k ln D + sum ln(d_i + D)`, which gives a
/// disc inside and a disc outside the component. When the outer disc is not
/// well separated from other centres, the component is measured on a polar
/// grid restricted to the centre's Voronoi cell.
pub fn sublevel_area(eigs: &EmpiricalMeasure, tau: f64, grid: usize, radius: f64) -> Result<SublevelArea> {
    if grid < 64 {
        return invalid("grid resolution must be at least 64");
    }
    let pts = eigs.points();
    let n = pts.len();
    if n == 0 {
        return invalid("empty measure");
    }
    let target = -tau * n as f64;
    let centres = cluster_eigenvalues(&pts, CLUSTER_TOL);
    let (mut lows, mut highs) = (Vec::new(), Vec::new());
    let (mut closed_form, mut gridded) = (0, 0);
    for (ci, &(c, k)) in centres.iter().enumerate() {
        if c.norm() > radius {
            continue;
        }
        let dists: Vec<f64> = centres
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != ci)
            .flat_map(|(_, &(p, kp))| std::iter::repeat((p - c).norm()).take(kp))
            .collect();
        let sep = dists.iter().copied().fold(f64::INFINITY, f64::min);
        let room = (radius - c.norm()).max(0.0);
        let r_in = solve_radius(k as f64, &dists, 1.0, target, f64::MAX.sqrt());
        let cap = (sep / 2.0).min(room);
        let r_out = if cap > 0.0 { solve_radius(k as f64, &dists, -1.0, target, cap * (1.0 - 1e-12)) } else { None };
        match (r_in, r_out) {
            (Some(li), Some(lo)) if lo < cap.ln() => {
                closed_form += 1;
                lows.push(std::f64::consts::PI.ln() + 2.0 * li);
                highs.push(std::f64::consts::PI.ln() + 2.0 * lo);
            }
            _ => {
                gridded += 1;
                let a = grid_component(&pts, &centres, ci, target, grid, radius, r_in);
                let la = a.ln();
                lows.push(la);
                highs.push(la);
            }
        }
    }
    let lo = log_sum_exp(&lows);
    let hi = log_sum_exp(&highs);
    let log_area = if lo.is_finite() && hi.is_finite() { 0.5 * (lo + hi) } else { lo.max(hi) };
    Ok(SublevelArea { tau, log_area, log_area_lower: lo, log_area_upper: hi, closed_form, gridded })
}

/// Eigenvalues closer than this (relative to `max(1, |lambda|)`) are one
/// repeated eigenvalue; defective eigenvalues come back from the backend
/// split at roughly this scale.
pub const CLUSTER_TOL: f64 = 1e-6;

/// Single-linkage clusters as `(centroid, size)`, ordered by centroid.
pub fn cluster_eigenvalues(pts: &[Complex64], tol: f64) -> Vec<(Complex64, usize)> {
    let mut idx: Vec<usize> = (0..pts.len()).collect();
    idx.sort_by(|&a, &b| pts[a].re.partial_cmp(&pts[b].re).unwrap());
    let mut parent: Vec<usize> = (0..pts.len()).collect();
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    for a in 0..idx.len() {
        let pa = pts[idx[a]];
        for &j in &idx[a + 1..] {
            let pb = pts[j];
            let t = tol * pa.norm().max(pb.norm()).max(1.0);
            if pb.re - pa.re > tol * (pa.norm() + 2.0 * tol + 1.0) + t {
                break;
            }
            if (pa - pb).norm() <= t {
                let (ra, rb) = (find(&mut parent, idx[a]), find(&mut parent, j));
                parent[ra.max(rb)] = ra.min(rb);
            }
        }
    }
    let mut sums: std::collections::BTreeMap<usize, (Complex64, usize)> = Default::default();
    for i in 0..pts.len() {
        let r = find(&mut parent, i);
        let e = sums.entry(r).or_insert((Complex64::new(0.0, 0.0), 0));
        e.0 += pts[i];
        e.1 += 1;
    }
    let mut out: Vec<(Complex64, usize)> = sums.into_values().map(|(s, k)| (s / k as f64, k)).collect();
    out.sort_by(|a, b| a.0.re.partial_cmp(&b.0.re).unwrap().then(a.0.im.partial_cmp(&b.0.im).unwrap()));
    out
}

fn grid_component(
    pts: &[Complex64],
    centres: &[(Complex64, usize)],
    ci: usize,
    target: f64,
    grid: usize,
    radius: f64,
    r_in: Option<f64>,
) -> f64 {
    let c = centres[ci].0;
    let r0 = r_in.map_or(0.0, f64::exp).min(2.0 * radius);
    let r_lo = r0.max(radius * 1e-12);
    let r_hi = 2.0 * radius;
    // the inner disc is inside the sublevel set but may leave the Voronoi
    // cell or the outer circle; clip it on a linear polar grid when it does
    let in_cell = |z: Complex64| {
        let d0 = (z - c).norm();
        z.norm() <= radius && !centres.iter().enumerate().any(|(j, &(p, _))| j != ci && (z - p).norm() < d0)
    };
    let sep = centres
        .iter()
        .enumerate()
        .filter(|&(j, _)| j != ci)
        .map(|(_, &(p, _))| (p - c).norm())
        .fold(f64::INFINITY, f64::min);
    let dphi = std::f64::consts::TAU / grid as f64;
    let base = if r0 <= (sep / 2.0).min(radius - c.norm()) {
        std::f64::consts::PI * r0 * r0
    } else {
        let dr = r0 / grid as f64;
        let mut a = 0.0;
        for i in 0..grid {
            let (ra, rb) = (i as f64 * dr, (i + 1) as f64 * dr);
            let rm = 0.5 * (ra + rb);
            let cell = 0.5 * (rb * rb - ra * ra) * dphi;
            a += cell * (0..grid).filter(|&b| in_cell(c + Complex64::from_polar(rm, (b as f64 + 0.5) * dphi))).count() as f64;
        }
        a
    };
    let steps = grid;
    let (l0, l1) = (r_lo.ln(), r_hi.ln());
    let dl = (l1 - l0) / steps as f64;
    let mut area = base;
    for a in 0..steps {
        let (ra, rb) = ((l0 + a as f64 * dl).exp(), (l0 + (a + 1) as f64 * dl).exp());
        let rm = 0.5 * (ra + rb);
        let cell = 0.5 * (rb * rb - ra * ra) * dphi;
        for b in 0..grid {
            let phi = (b as f64 + 0.5) * dphi;
            let z = c + Complex64::from_polar(rm, phi);
            if !in_cell(z) {
                continue;
            }
            let v: f64 = pts.iter().map(|p| (z - p).norm().ln()).sum();
            if v <= target {
                area += cell;
            }
        }
    }
    area
}

#[derive(Clone, Debug, Serialize)]
pub struct DecayFit {
    pub areas: Vec<SublevelArea>,
    /// Least-squares slope of `ln area` against `tau`.
    pub slope: f64,
    pub monotone: bool,
}

pub fn sublevel_decay(eigs: &EmpiricalMeasure, taus: &[f64], grid: usize, radius: f64) -> Result<DecayFit> {
    let areas = taus
        .iter()
        .map(|&t| sublevel_area(eigs, t, grid, radius))
        .collect::<Result<Vec<_>>>()?;
    let ys: Vec<f64> = areas.iter().map(|a| a.log_area).collect();
    let slope = ls_slope(taus, &ys);
    let mut order: Vec<usize> = (0..taus.len()).collect();
    order.sort_by(|&a, &b| taus[a].partial_cmp(&taus[b]).unwrap());
    let monotone = order.windows(2).all(|w| ys[w[1]] <= ys[w[0]]);
    Ok(DecayFit { areas, slope, monotone })
}

pub(crate) fn ls_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}

/// Bounded-Lipschitz test function: Gaussian of width `h` times a tent of
/// half-width `2h` in the sup norm, centred at `c`.
fn bump(x: Complex64, c: Complex64, h: f64) -> f64 {
    let d = x - c;
    let tent = (1.0 - d.re.abs().max(d.im.abs()) / (2.0 * h)).max(0.0);
    (-d.norm_sqr() / (2.0 * h * h)).exp() * tent
}

/// Kolmogorov distance on the line; on the plane the largest gap over the
/// 64 bumps centred on an 8x8 grid covering `[-R, R]^2`.
pub fn measure_distance_with_radius(a: &EmpiricalMeasure, b: &EmpiricalMeasure, radius: f64) -> Result<f64> {
    match (a, b) {
        (EmpiricalMeasure::Real(x), EmpiricalMeasure::Real(y)) => Ok(kolmogorov(x, y)),
        (EmpiricalMeasure::Complex(x), EmpiricalMeasure::Complex(y)) => {
            let h = radius / 4.0;
            let mut best = 0.0f64;
            for i in 0..8 {
                for j in 0..8 {
                    let c = Complex64::new(-radius + (2 * i + 1) as f64 * h, -radius + (2 * j + 1) as f64 * h);
                    let ia = x.iter().map(|&p| bump(p, c, h)).sum::<f64>() / x.len() as f64;
                    let ib = y.iter().map(|&p| bump(p, c, h)).sum::<f64>() / y.len() as f64;
                    best = best.max((ia - ib).abs());
                }
            }
            Ok(best)
        }
        _ => invalid("dimension mismatch"),
    }
}

/// As [`measure_distance_with_radius`] with `R` the largest modulus present
/// (at least 1).
pub fn measure_distance(a: &EmpiricalMeasure, b: &EmpiricalMeasure) -> Result<f64> {
    let r = a.points().iter().chain(b.points().iter()).map(|p| p.norm()).fold(1.0, f64::max);
    measure_distance_with_radius(a, b, r)
}

fn kolmogorov(x: &[f64], y: &[f64]) -> f64 {
    let mut a = x.to_vec();
    let mut b = y.to_vec();
    a.sort_by(|p, q| p.partial_cmp(q).unwrap());
    b.sort_by(|p, q| p.partial_cmp(q).unwrap());
    let (mut i, mut j, mut best) = (0, 0, 0.0f64);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    while i < a.len() || j < b.len() {
        let v = match (a.get(i), b.get(j)) {
            (Some(&p), Some(&q)) => p.min(q),
            (Some(&p), None) => p,
            (None, Some(&q)) => q,
            _ => unreachable!(),
        };
        while i < a.len() && a[i] <= v {
            i += 1;
        }
        while j < b.len() && b[j] <= v {
            j += 1;
        }
        best = best.max((i as f64 / na - j as f64 / nb).abs());
    }
    best
}

#[derive(Clone, Debug, Serialize)]
pub struct NonatomicIndicator {
    pub index: usize,
    pub sigma: f64,
    pub event: bool,
    /// `int_{|ln u| >= T} |ln u| dnu`, zero singular values counted as `+inf`.
    pub tail: f64,
}

/// The event `sigma_{ceil((1-gamma)m)}(B_m - zI) <= tau` and the log tail
/// beyond `T` (default `ln(1/tau)`).
pub fn nonatomic_indicator(bm: &BinaryMatrix, z: Complex64, gamma: f64, tau: f64, t: Option<f64>) -> Result<NonatomicIndicator> {
    if !(gamma > 0.0 && gamma < 0.5) || !(tau > 0.0 && tau < 0.5) {
        return invalid("need gamma, tau in (0, 1/2)");
    }
    linalg::check_cap(bm.rows(), bm.cols())?;
    let s = linalg::singular_values(bm.shifted_dense(z).as_ref())?;
    let m = bm.rows().min(bm.cols());
    let index = (((1.0 - gamma) * m as f64).ceil() as usize).clamp(1, m);
    let sigma = s[index - 1];
    let t = t.unwrap_or((1.0 / tau).ln());
    let tail = s.iter().map(|&u| u.ln().abs()).filter(|&l| l >= t).sum::<f64>() / m as f64;
    Ok(NonatomicIndicator { index, sigma, event: sigma <= tau, tail })
}

/// Number of singular values of the square `M - zI` strictly below `tau`,
/// from the inertia of `(M - zI)^H (M - zI) - tau^2 I`. The Gram matrix is
/// assembled from the sparse pattern.
pub fn singular_count_below(m: &BinaryMatrix, z: Complex64, tau: f64) -> Result<usize> {
    if !m.is_square() {
        return invalid("need a square matrix");
    }
    let n = m.rows();
    linalg::check_cap(n, n)?;
    let mut g = linalg::CMat::zeros(n, n);
    for i in 0..n {
        let row = m.row(i);
        for &j in row {
            for &k in row {
                g[(j, k)] += 1.0;
            }
        }
    }
    // - conj(z) M - z M^T
    for (i, j) in m.entries() {
        g[(i, j)] -= z.conj();
        g[(j, i)] -= z;
    }
    for i in 0..n {
        g[(i, i)] += z.norm_sqr() - tau * tau;
    }
    linalg::negative_inertia(g.as_ref())
}

/// The nonatomic event alone, without the full spectrum.
pub fn nonatomic_event(bm: &BinaryMatrix, z: Complex64, gamma: f64, tau: f64) -> Result<bool> {
    if !(gamma > 0.0 && gamma < 0.5) || !(tau > 0.0 && tau < 0.5) {
        return invalid("need gamma, tau in (0, 1/2)");
    }
    let m = bm.rows();
    let index = (((1.0 - gamma) * m as f64).ceil() as usize).clamp(1, m);
    // sigma_index <= tau iff at least m - index + 1 values are <= tau
    Ok(singular_count_below(bm, z, tau * (1.0 + 1e-12))? > m - index)
}

#[derive(Clone, Debug, Serialize)]
pub struct NonatomicProbe {
    pub trials: usize,
    pub frequency: f64,
    pub mean_tail: f64,
    pub indicators: Vec<NonatomicIndicator>,
}

/// `B_m` is the leading `m x m` block of the boosted model.
pub fn nonatomic_probe(params: &ModelParams, z: Complex64, gamma: f64, tau: f64, trials: usize) -> Result<NonatomicProbe> {
    let m = params.m();
    let indicators = (0..trials as u64)
        .map(|t| {
            let b = sample_modified(&params.with_seed(trial_seed(params.seed, t)))?;
            nonatomic_indicator(&b.leading(m), z, gamma, tau, None)
        })
        .collect::<Result<Vec<_>>>()?;
    let k = indicators.len().max(1) as f64;
    let frequency = indicators.iter().filter(|i| i.event).count() as f64 / k;
    let mean_tail = indicators.iter().map(|i| i.tail).sum::<f64>() / k;
    Ok(NonatomicProbe { trials, frequency, mean_tail, indicators })
}
