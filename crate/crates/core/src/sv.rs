//! Singular values: decompositions, the secular row-append update, window
//! products, bottom-subspace projections and spreadness probes.

use std::fmt::Write as _;

use faer::MatRef;
use num_complex::Complex64;
use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::graph::alpha;
use crate::linalg::{self, col, dot, haar_unitary, matvec, norm, CMat};
use crate::matrix::BinaryMatrix;
use crate::rng::{domain, stream};

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

/// `M - z I_{rows x cols}` for a 0-1 matrix `M`.
#[derive(Clone, Debug)]
pub struct ShiftedMatrix {
    pub base: BinaryMatrix,
    pub z: Complex64,
}

impl ShiftedMatrix {
    pub fn new(base: BinaryMatrix, z: Complex64) -> Self {
        Self { base, z }
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.base.rows(), self.base.cols())
    }

    pub fn dense(&self) -> CMat {
        self.base.shifted_dense(self.z)
    }
}

/// Non-increasing singular values, optionally with singular vectors.
#[derive(Clone, Debug)]
pub struct SingularSpectrum {
    pub rows: usize,
    pub cols: usize,
    pub values: Vec<f64>,
    /// `cols x cols`, column `i` is the right vector of `values[i]`.
    pub right: Option<CMat>,
    /// `rows x rows`.
    pub left: Option<CMat>,
    /// Absolute accuracy bound on each value.
    pub residual: f64,
}

impl SingularSpectrum {
    pub fn of_dense(a: MatRef<'_, Complex64>, want_vectors: bool) -> Result<Self> {
        let (rows, cols) = (a.nrows(), a.ncols());
        let (values, right, left) = if want_vectors {
            let f = linalg::full_svd(a)?;
            (f.s, Some(f.v), Some(f.u))
        } else {
            (linalg::singular_values(a)?, None, None)
        };
        let top = values.first().copied().unwrap_or(0.0);
        let residual = 8.0 * f64::EPSILON * rows.max(cols).max(1) as f64 * top;
        Ok(Self { rows, cols, values, right, left, residual })
    }

    /// `sigma_i` with 1-based `i`; zero past `min(rows, cols)`.
    pub fn sigma(&self, i: usize) -> f64 {
        assert!(i >= 1, "singular values are 1-indexed");
        self.values.get(i - 1).copied().unwrap_or(0.0)
    }

    /// `sum_{i=lo}^{hi} ln sigma_i`, 1-based inclusive.
    pub fn log_window(&self, lo: usize, hi: usize) -> f64 {
        (lo..=hi).map(|i| self.sigma(i).ln()).sum()
    }

    pub fn right_vector(&self, i: usize) -> Option<Vec<Complex64>> {
        self.right.as_ref().map(|v| col(v.as_ref(), i - 1))
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("index,sigma\n");
        for (i, v) in self.values.iter().enumerate() {
            writeln!(s, "{},{:.17e}", i + 1, v).unwrap();
        }
        s
    }
}

pub fn singular_spectrum(m: &ShiftedMatrix, want_vectors: bool) -> Result<SingularSpectrum> {
    let (r, c) = m.shape();
    linalg::check_cap(r, c)?;
    SingularSpectrum::of_dense(m.dense().as_ref(), want_vectors)
}

/// Roots of `1 + sum_i w_i / (s_i - x) = 0` together with the deflated
/// poles, i.e. the eigenvalues of `diag(s) + a a^H` with `|a_i|^2 = w_i`.
/// `s` must be non-increasing. Returns roots (non-increasing) and the worst
/// relative residual.
pub fn secular_roots(s: &[f64], w: &[f64]) -> (Vec<f64>, f64) {
    let total_w: f64 = w.iter().sum();
    // merge exactly repeated poles
    let mut poles: Vec<(f64, f64, usize)> = Vec::new();
    for (&p, &wi) in s.iter().zip(w) {
        match poles.last_mut() {
            Some((q, wq, c)) if *q == p => {
                *wq += wi;
                *c += 1;
            }
            _ => poles.push((p, wi, 1)),
        }
    }
    let mut roots = Vec::with_capacity(s.len());
    let mut active: Vec<(f64, f64)> = Vec::new();
    for &(p, wp, c) in &poles {
        if wp > 0.0 {
            roots.extend(std::iter::repeat(p).take(c - 1));
            active.push((p, wp));
        } else {
            roots.extend(std::iter::repeat(p).take(c));
        }
    }
    let mut worst = 0.0f64;
    let solve = |origin: f64, lo: f64, hi: f64| -> (f64, f64) {
        // F in coordinates mu = x - origin
        let delta: Vec<f64> = active.iter().map(|&(p, _)| p - origin).collect();
        let f = |mu: f64| -> (f64, f64) {
            let mut v = 1.0;
            let mut scale = 1.0;
            for (d, &(_, wk)) in delta.iter().zip(&active) {
                let den = d - mu;
                v += wk / den;
                scale += wk / den.abs();
            }
            (v, scale)
        };
        let (mut lo, mut hi) = (lo, hi);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if f(mid).0 < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let (flo, slo) = f(lo);
        let (fhi, shi) = f(hi);
        let (mu, r) = if flo.abs() / slo <= fhi.abs() / shi { (lo, flo.abs() / slo) } else { (hi, fhi.abs() / shi) };
        (origin + mu, r)
    };
    if let Some(&(p1, _)) = active.first() {
        let (x, r) = solve(p1, 0.0, total_w.max(f64::MIN_POSITIVE));
        roots.push(x);
        worst = worst.max(r);
    }
    for pair in active.windows(2) {
        let (b, a) = (pair[0].0, pair[1].0);
        let mid = a + 0.5 * (b - a);
        let fm: f64 = 1.0 + active.iter().map(|&(p, wk)| wk / (p - mid)).sum::<f64>();
        let (x, r) = if fm >= 0.0 { solve(a, 0.0, mid - a) } else { solve(b, mid - b, 0.0) };
        roots.push(x);
        worst = worst.max(r);
    }
    roots.sort_unstable_by(|x, y| y.partial_cmp(x).unwrap());
    (roots, worst)
}

/// Spectrum of `M` with row `x` appended, from the spectrum of `M`.
pub fn secular_append_row(spec: &SingularSpectrum, x: &[Complex64]) -> Result<SingularSpectrum> {
    let v = spec
        .right
        .as_ref()
        .ok_or_else(|| Error::InvalidParameter("secular update needs right singular vectors".into()))?;
    let m = spec.cols;
    if x.len() != m || v.ncols() != m {
        return invalid("row length must match the column count");
    }
    let s: Vec<f64> = (1..=m).map(|i| spec.sigma(i).powi(2)).collect();
    // w_i = |X v_i|^2
    let w: Vec<f64> = (0..m)
        .map(|i| {
            let mut acc = ZERO;
            for k in 0..m {
                acc += x[k] * v[(k, i)];
            }
            acc.norm_sqr()
        })
        .collect();
    let (roots, resid) = secular_roots(&s, &w);
    if resid > 1e-9 {
        return Err(Error::ToleranceNotMet(format!("secular residual {resid:e}")));
    }
    let rows = spec.rows + 1;
    let values: Vec<f64> = roots.iter().take(rows.min(m)).map(|r| r.max(0.0).sqrt()).collect();
    let top = values.first().copied().unwrap_or(0.0);
    Ok(SingularSpectrum {
        rows,
        cols: m,
        values,
        right: None,
        left: None,
        residual: spec.residual + 8.0 * f64::EPSILON * m as f64 * top,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct WindowProduct {
    pub log_lhs: f64,
    pub log_rhs: f64,
    pub lhs: f64,
    pub rhs: f64,
    /// `(lhs - rhs) / rhs`, or `inf` when `rhs = 0`.
    pub margin: f64,
    pub holds: bool,
}

/// Compares `prod_{i=k}^{l+1} sigma_i(M')` with
/// `|P X^H| (|X|^2 + sigma_{k-1}(M)^2)^{-1/2} prod_{i=k-1}^{l} sigma_i(M)`,
/// `P` projecting onto the `m - l` smallest right singular vectors of `M`.
pub fn window_product_inequality(m: MatRef<'_, Complex64>, x: &[Complex64], k: usize, l: usize) -> Result<WindowProduct> {
    let (n, mc) = (m.nrows(), m.ncols());
    if !(k >= 2 && k - 1 <= l && l < mc) {
        return invalid(format!("need 1 <= k-1 <= l < m, got k={k}, l={l}, m={mc}"));
    }
    if n > mc || x.len() != mc {
        return invalid("need an n x m matrix with n <= m and a row of length m");
    }
    let spec = SingularSpectrum::of_dense(m, true)?;
    let mut mp = CMat::zeros(n + 1, mc);
    for i in 0..n {
        for j in 0..mc {
            mp[(i, j)] = m[(i, j)];
        }
    }
    for j in 0..mc {
        mp[(n, j)] = x[j];
    }
    let spec_p = SingularSpectrum::of_dense(mp.as_ref(), false)?;
    let xh: Vec<Complex64> = x.iter().map(|c| c.conj()).collect();
    let (pn, _) = bottom_projection(&spec, mc - l, &xh)?;
    let log_lhs = spec_p.log_window(k, l + 1);
    let xn2: f64 = x.iter().map(|c| c.norm_sqr()).sum();
    let log_rhs = pn.ln() - 0.5 * (xn2 + spec.sigma(k - 1).powi(2)).ln() + spec.log_window(k - 1, l);
    let holds = log_rhs == f64::NEG_INFINITY || log_lhs >= log_rhs + (-1e-9f64).ln_1p();
    let margin = if log_rhs == f64::NEG_INFINITY { f64::INFINITY } else { (log_lhs - log_rhs).exp_m1() };
    Ok(WindowProduct { log_lhs, log_rhs, lhs: log_lhs.exp(), rhs: log_rhs.exp(), margin, holds })
}

/// Projection of `x` onto the span of the `r` smallest right singular
/// vectors. Returns the norm and the projected vector.
pub fn bottom_projection(spec: &SingularSpectrum, r: usize, x: &[Complex64]) -> Result<(f64, Vec<Complex64>)> {
    let v = spec
        .right
        .as_ref()
        .ok_or_else(|| Error::InvalidParameter("projection needs right singular vectors".into()))?;
    let dim = v.ncols();
    if r > dim || x.len() != v.nrows() {
        return invalid(format!("r = {r} out of range for dimension {dim}"));
    }
    project_onto_columns(v.as_ref(), dim - r, dim, x)
}

/// Projection onto columns `lo..hi` of an orthonormal matrix.
pub fn project_onto_columns(v: MatRef<'_, Complex64>, lo: usize, hi: usize, x: &[Complex64]) -> Result<(f64, Vec<Complex64>)> {
    let mut p = vec![ZERO; v.nrows()];
    let mut n2 = 0.0;
    for c in lo..hi {
        let mut coef = ZERO;
        for k in 0..v.nrows() {
            coef += v[(k, c)].conj() * x[k];
        }
        n2 += coef.norm_sqr();
        for k in 0..v.nrows() {
            p[k] += v[(k, c)] * coef;
        }
    }
    Ok((n2.sqrt(), p))
}

#[derive(Clone, Debug, Serialize)]
pub struct CirculantCheck {
    pub bound: f64,
    pub exact: f64,
    pub det: f64,
    pub det_target: f64,
    pub bound_ok: bool,
    pub det_ok: bool,
}

/// Cyclic shift `Y` of order `s` (`Y[i][j] = 1` iff `i = j + 1 mod s`).
pub fn cyclic_shift(s: usize) -> BinaryMatrix {
    let e: Vec<(usize, usize)> = (0..s).map(|j| ((j + 1) % s, j)).collect();
    BinaryMatrix::from_entries(s, s, &e).expect("cyclic shift is well formed")
}

pub fn circulant_lsv(s: usize, z: Complex64) -> Result<CirculantCheck> {
    if s == 0 {
        return invalid("s must be at least 1");
    }
    let zs1 = (z.powu(s as u32) - 1.0).norm();
    let bound = zs1 / (z.norm() + 1.0).powi(s as i32 - 1);
    let a = cyclic_shift(s).shifted_dense(z);
    let sv = linalg::singular_values(a.as_ref())?;
    let exact = sv[s - 1];
    let det = (2.0 * linalg::log_abs_det(a.as_ref())?).exp();
    let det_target = zs1 * zs1;
    let scale = (1.0 + z.norm()).powi(2 * s as i32);
    let det_ok = (det - det_target).abs() <= 1e-8 * det_target.max(1e-8 * scale);
    Ok(CirculantCheck { bound, exact, det, det_target, bound_ok: exact >= bound - 1e-10, det_ok })
}

#[derive(Clone, Debug, Serialize)]
pub struct NormInequalities {
    pub interlacing_slack: f64,
    pub weyl_slack: f64,
    pub schur_slack: f64,
    pub holds: bool,
}

/// Interlacing between `M` and `M` plus a row, Weyl between `M` and `B`,
/// and the Schur bound for `M`. Slacks are scaled by `max(1, |M|_op)`.
pub fn norm_inequality_suite(m: MatRef<'_, Complex64>, mp: MatRef<'_, Complex64>, b: MatRef<'_, Complex64>) -> Result<NormInequalities> {
    let (n, c) = (m.nrows(), m.ncols());
    if mp.nrows() != n + 1 || mp.ncols() != c || b.nrows() != n || b.ncols() != c {
        return invalid("incompatible shapes");
    }
    let sm = SingularSpectrum::of_dense(m, false)?;
    let sp = SingularSpectrum::of_dense(mp, false)?;
    let sb = SingularSpectrum::of_dense(b, false)?;
    let scale = sm.sigma(1).max(sp.sigma(1)).max(sb.sigma(1)).max(1.0);
    let mut inter = f64::INFINITY;
    for i in 1..=c {
        inter = inter.min(sp.sigma(i) - sm.sigma(i));
        inter = inter.min(sm.sigma(i) - sp.sigma(i + 1));
    }
    let diff = CMat::from_fn(n, c, |i, j| m[(i, j)] - b[(i, j)]);
    let dn = linalg::op_norm(diff.as_ref())?;
    let mut weyl = f64::INFINITY;
    for i in 1..=c.min(n) {
        weyl = weyl.min(dn - (sm.sigma(i) - sb.sigma(i)).abs());
    }
    let col_max = (0..c).map(|j| (0..n).map(|i| m[(i, j)].norm()).sum::<f64>()).fold(0.0, f64::max);
    let row_max = (0..n).map(|i| (0..c).map(|j| m[(i, j)].norm()).sum::<f64>()).fold(0.0, f64::max);
    let schur = (col_max * row_max).sqrt() - sm.sigma(1);
    let (inter, weyl, schur) = (inter / scale, weyl / scale, schur / scale);
    let holds = inter >= -1e-9 && weyl >= -1e-9 && schur >= -1e-9;
    Ok(NormInequalities { interlacing_slack: inter, weyl_slack: weyl, schur_slack: schur, holds })
}

/// Moduli sorted non-increasing, with the index each came from.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Rearrangement {
    pub values: Vec<f64>,
    pub perm: Vec<usize>,
}

impl Rearrangement {
    pub fn new(v: &[Complex64]) -> Self {
        let mut perm: Vec<usize> = (0..v.len()).collect();
        perm.sort_by(|&a, &b| v[b].norm().partial_cmp(&v[a].norm()).unwrap().then(a.cmp(&b)));
        let values = perm.iter().map(|&i| v[i].norm()).collect();
        Self { values, perm }
    }

    /// `v*_k`, 1-based; zero past the end.
    pub fn star(&self, k: usize) -> f64 {
        self.values.get(k.max(1) - 1).copied().unwrap_or(0.0)
    }
}

/// Largest number of points within `radius` of a centre drawn from the
/// points themselves and 0. Returns `(count, centre)`.
pub fn max_ball_count(v: &[Complex64], radius: f64) -> (usize, Complex64) {
    let mut pts: Vec<Complex64> = v.to_vec();
    pts.sort_by(|a, b| a.re.partial_cmp(&b.re).unwrap());
    let res: Vec<f64> = pts.iter().map(|p| p.re).collect();
    let mut best = (0usize, ZERO);
    let centres = pts.iter().copied().chain(std::iter::once(ZERO));
    for c in centres {
        let lo = res.partition_point(|&x| x < c.re - radius);
        let hi = res.partition_point(|&x| x <= c.re + radius);
        let cnt = pts[lo..hi].iter().filter(|p| (**p - c).norm() <= radius).count();
        if cnt > best.0 {
            best = (cnt, c);
        }
    }
    best
}

#[derive(Clone, Debug, Serialize)]
pub struct LevelSetCheck {
    pub zero_rows: usize,
    pub hypothesis: bool,
    pub theta: f64,
    pub small_coords: usize,
    pub conclusion: bool,
    pub holds: bool,
}

/// The zero-row level-set bound: if at least `e^{-d} n / 2` rows of `M`
/// are zero then at least `e^{-d} n / 4` coordinates satisfy
/// `|v_j| <= 2 e^{d/2} theta / sqrt(n)`, with `theta = |(M - zI)v| / |z|`.
pub fn zero_level_check(m: &BinaryMatrix, z: Complex64, v: &[Complex64], d: f64, n: usize) -> Option<LevelSetCheck> {
    if z.norm() == 0.0 || v.len() != m.cols() {
        return None;
    }
    let lim = m.rows().min(m.cols());
    let zero_rows = (0..lim).filter(|&i| m.row_sum(i) == 0).count();
    let nf = n as f64;
    let hypothesis = zero_rows as f64 >= (-d).exp() * nf / 2.0;
    let mut r = vec![ZERO; m.rows()];
    for (i, ri) in r.iter_mut().enumerate() {
        for &j in m.row(i) {
            *ri += v[j];
        }
        if i < m.cols() {
            *ri -= z * v[i];
        }
    }
    let theta = norm(&r) / z.norm();
    let cut = 2.0 * (d / 2.0).exp() * theta / nf.sqrt();
    let small_coords = v.iter().filter(|x| x.norm() <= cut).count();
    let conclusion = small_coords as f64 >= (-d).exp() * nf / 4.0;
    Some(LevelSetCheck { zero_rows, hypothesis, theta, small_coords, conclusion, holds: !hypothesis || conclusion })
}

#[derive(Clone, Debug, Serialize)]
pub struct SpreadnessConfig {
    pub d: f64,
    /// Global dimension used in the thresholds.
    pub n: usize,
    pub near_kernel_tol: f64,
    pub delta: f64,
    /// `c` in `v*_{floor(cn)}`; desk default `e^{-d}/8`.
    pub c: f64,
    /// `C'` in `exp(-C' (ln n)^7)`.
    pub c_prime: f64,
}

impl SpreadnessConfig {
    pub fn desk(d: f64, n: usize) -> Self {
        Self {
            d,
            n,
            near_kernel_tol: f64::INFINITY,
            delta: 1.0 / (n as f64).sqrt() / 10.0,
            c: crate::constants::desk_c(d),
            c_prime: crate::constants::DESK_C_PRIME,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct VectorProfile {
    pub sigma: f64,
    /// `(k, v*_k)` at `k = 1, 2, 4, ...` and at `floor(cn)`.
    pub profile: Vec<(usize, f64)>,
    pub k_c: usize,
    pub v_at_kc: f64,
    /// `ln` of the spreadness threshold `exp(-C'(ln n)^7)/sqrt(n)`.
    pub log_threshold: f64,
    pub spread_ok: bool,
    pub level_delta: usize,
    pub level_2delta: usize,
    pub zero_level: Option<LevelSetCheck>,
}

#[derive(Clone, Debug, Serialize)]
pub struct SpreadnessReport {
    pub config: SpreadnessConfig,
    pub vectors: Vec<VectorProfile>,
}

/// Smallest singular value and right vector of a square matrix by inverse
/// iteration on `(A^H A)^{-1}`; falls back to a full SVD when the iteration
/// stalls or `A` is numerically singular.
pub fn smallest_right_singular(a: MatRef<'_, Complex64>) -> Result<(f64, Vec<Complex64>)> {
    let n = a.ncols();
    if a.nrows() != n || n == 0 {
        let f = linalg::full_svd(a)?;
        let k = n;
        let s = if k <= f.s.len() { f.s[k - 1] } else { 0.0 };
        return Ok((s, col(f.v.as_ref(), k - 1)));
    }
    use faer::linalg::solvers::Solve;
    let lu = a.partial_piv_lu();
    let mut x = CMat::from_fn(n, 1, |i, _| Complex64::new(1.0 + (i % 7) as f64 * 0.1, (i % 3) as f64 * 0.1));
    let mut ok = false;
    for _ in 0..500 {
        let nrm = (0..n).map(|i| x[(i, 0)].norm_sqr()).sum::<f64>().sqrt();
        if !nrm.is_finite() || nrm == 0.0 {
            break;
        }
        for i in 0..n {
            x[(i, 0)] /= nrm;
        }
        let mut y = x.clone();
        lu.solve_adjoint_in_place(y.as_mut());
        lu.solve_in_place(y.as_mut());
        let g = (0..n).map(|i| y[(i, 0)].norm_sqr()).sum::<f64>().sqrt();
        if !g.is_finite() {
            break;
        }
        // the value converges twice as fast as the vector, so test the
        // vector after removing the phase
        let ip: Complex64 = (0..n).map(|i| x[(i, 0)].conj() * y[(i, 0)]).sum();
        let ph = if ip.norm() > 0.0 { ip / ip.norm() } else { Complex64::new(1.0, 0.0) };
        let step = (0..n).map(|i| (y[(i, 0)] / g - x[(i, 0)] * ph).norm_sqr()).sum::<f64>().sqrt();
        x = y;
        if step <= 1e-12 {
            ok = true;
            break;
        }
    }
    if ok {
        let nrm = (0..n).map(|i| x[(i, 0)].norm_sqr()).sum::<f64>().sqrt();
        let v: Vec<Complex64> = (0..n).map(|i| x[(i, 0)] / nrm).collect();
        let s = norm(&matvec(a, &v));
        return Ok((s, v));
    }
    let f = linalg::full_svd(a)?;
    Ok((f.s[n - 1], col(f.v.as_ref(), n - 1)))
}

/// Spreadness of near-kernel right singular vectors of `M - zI`.
/// Matrices above `full_limit` only examine the single smallest vector.
pub fn spreadness_probe(m: &ShiftedMatrix, cfg: &SpreadnessConfig, full_limit: usize) -> Result<SpreadnessReport> {
    let (r, c) = m.shape();
    linalg::check_cap(r, c)?;
    let a = m.dense();
    let mut cands: Vec<(f64, Vec<Complex64>)> = Vec::new();
    if r == c && r > full_limit {
        let (s, v) = smallest_right_singular(a.as_ref())?;
        if s <= cfg.near_kernel_tol {
            cands.push((s, v));
        }
    } else {
        let spec = SingularSpectrum::of_dense(a.as_ref(), true)?;
        for i in (1..=c).rev() {
            let s = spec.sigma(i);
            if s > cfg.near_kernel_tol {
                break;
            }
            cands.push((s, spec.right_vector(i).unwrap()));
        }
    }
    let nf = cfg.n as f64;
    let k_c = ((cfg.c * nf).floor() as usize).max(1);
    let log_threshold = -cfg.c_prime * nf.ln().powi(7) - 0.5 * nf.ln();
    let vectors = cands
        .into_iter()
        .map(|(sigma, v)| {
            let re = Rearrangement::new(&v);
            let mut profile = Vec::new();
            let mut k = 1;
            while k <= v.len() {
                profile.push((k, re.star(k)));
                k *= 2;
            }
            profile.push((k_c, re.star(k_c)));
            let v_at_kc = re.star(k_c);
            VectorProfile {
                sigma,
                profile,
                k_c,
                v_at_kc,
                log_threshold,
                spread_ok: v_at_kc > 0.0 && v_at_kc.ln() >= log_threshold,
                level_delta: max_ball_count(&v, cfg.delta).0,
                level_2delta: max_ball_count(&v, 2.0 * cfg.delta).0,
                zero_level: zero_level_check(&m.base, m.z, &v, cfg.d, cfg.n),
            }
        })
        .collect();
    Ok(SpreadnessReport { config: cfg.clone(), vectors })
}

/// `min_j v_j*_{ceil(k/10)} * n / sqrt(k)` over the columns of `b`.
pub fn basis_diagnostic(b: MatRef<'_, Complex64>) -> f64 {
    let (n, k) = (b.nrows(), b.ncols());
    let idx = k.div_ceil(10).max(1);
    (0..k)
        .map(|j| Rearrangement::new(&col(b, j)).star(idx) * n as f64 / (k as f64).sqrt())
        .fold(f64::INFINITY, f64::min)
}

/// Re-mixes an orthonormal basis by Haar-random `k x k` unitaries and keeps
/// the best of `tries` by the diagnostic.
pub fn balanced_basis(vectors: MatRef<'_, Complex64>, tries: usize, seed: u64) -> Result<(CMat, f64)> {
    let k = vectors.ncols();
    for a in 0..k {
        for b in a..k {
            let d = dot(&col(vectors, a), &col(vectors, b));
            let e = if a == b { 1.0 } else { 0.0 };
            if (d - Complex64::new(e, 0.0)).norm() > 1e-10 {
                return invalid("input vectors are not orthonormal");
            }
        }
    }
    let mut rng = stream(seed, domain::BASIS, 0);
    let mut best: Option<(CMat, f64)> = None;
    for _ in 0..tries.max(1) {
        let q = haar_unitary(k, &mut rng);
        let b = vectors * &q;
        let diag = basis_diagnostic(b.as_ref());
        if best.as_ref().map_or(true, |(_, d)| diag > *d) {
            best = Some((b, diag));
        }
    }
    Ok(best.unwrap())
}

/// `g(x) = ceil(alpha(x) x / (2^15 (d + ln(n/x))))`.
pub fn g_step(n: usize, x: usize, d: f64) -> usize {
    let l = (n as f64 / x as f64).ln();
    (alpha(n, x) * x as f64 / (32768.0 * (d + l))).ceil() as usize
}

#[derive(Clone, Debug, Serialize)]
pub struct IterationBound {
    pub steps: usize,
    pub bound: f64,
    pub holds: bool,
}

/// Iterates `k <- k + g(k)` until `k >= n/2`.
pub fn iteration_bound(n: usize, k: usize, d: f64) -> Result<IterationBound> {
    if k < 1 || k > n {
        return invalid("need 1 <= k <= n");
    }
    let bound = 131072.0 * d * (n as f64 / k as f64).ln().powi(4);
    let mut x = k;
    let mut steps = 0;
    while 2 * x < n {
        x += g_step(n, x, d).max(1);
        steps += 1;
    }
    Ok(IterationBound { steps, bound, holds: steps as f64 <= bound })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn spectrum_examples() {
        let i = singular_spectrum(&ShiftedMatrix::new(BinaryMatrix::zeros(4, 4), c(-1.0)), false).unwrap();
        assert!(i.values.iter().all(|&s| (s - 1.0).abs() < 1e-14));
        let d = CMat::from_fn(3, 3, |a, b| if a == b { c([3.0, 1.0, 2.0][a]) } else { ZERO });
        let s = SingularSpectrum::of_dense(d.as_ref(), false).unwrap();
        assert!((s.values[0] - 3.0).abs() < 1e-14 && (s.values[2] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn secular_identity_case() {
        let m = CMat::from_fn(1, 2, |_, j| if j == 0 { c(1.0) } else { ZERO });
        let spec = SingularSpectrum::of_dense(m.as_ref(), true).unwrap();
        let out = secular_append_row(&spec, &[ZERO, c(1.0)]).unwrap();
        assert_eq!(out.values.len(), 2);
        assert!(out.values.iter().all(|&s| (s - 1.0).abs() < 1e-14));
        let same = secular_append_row(&spec, &[ZERO, ZERO]).unwrap();
        assert!((same.values[0] - 1.0).abs() < 1e-15 && same.values[1] == 0.0);
        let bare = SingularSpectrum::of_dense(m.as_ref(), false).unwrap();
        assert!(secular_append_row(&bare, &[ZERO, ZERO]).is_err());
    }

    #[test]
    fn circulant_examples() {
        let a = circulant_lsv(2, ZERO).unwrap();
        assert!((a.bound - 1.0).abs() < 1e-15 && (a.exact - 1.0).abs() < 1e-12);
        let b = circulant_lsv(3, c(1.0)).unwrap();
        assert_eq!(b.bound, 0.0);
        assert!(b.exact < 1e-12 && b.bound_ok && b.det_ok);
        let t = circulant_lsv(3, c(2.0)).unwrap();
        assert!((t.bound - 7.0 / 9.0).abs() < 1e-15 && t.exact >= 7.0 / 27.0 && t.bound_ok && t.det_ok);
    }

    #[test]
    fn schur_tight_on_ones() {
        let m = CMat::from_fn(3, 3, |_, _| c(1.0));
        let mp = CMat::from_fn(4, 3, |i, _| if i < 3 { c(1.0) } else { ZERO });
        let r = norm_inequality_suite(m.as_ref(), mp.as_ref(), m.as_ref()).unwrap();
        assert!(r.schur_slack.abs() < 1e-12 && r.interlacing_slack.abs() < 1e-12 && r.holds);
    }

    #[test]
    fn iteration_examples() {
        assert_eq!(iteration_bound(100, 60, 2.0).unwrap().steps, 0);
        assert_eq!(g_step(1 << 20, 1 << 10, 2.0), 1);
        let r = iteration_bound(1_000_000, 1000, 4.0).unwrap();
        assert!(r.holds && r.steps > 0);
    }

    #[test]
    fn ball_count() {
        let v = [c(0.0), c(0.05), c(1.0), c(1.01), c(1.02)];
        assert_eq!(max_ball_count(&v, 0.03).0, 3);
        assert_eq!(max_ball_count(&v, 0.1).0, 3);
    }
}
