//! Dense complex linear algebra on top of faer, with sorted outputs and a
//! size cap.

use std::sync::Once;

use faer::linalg::solvers::Solve;
use faer::{Mat, MatRef, Par};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type CMat = Mat<Complex64>;

pub const DEFAULT_DENSE_CAP: usize = 4096;
pub const DENSE_CAP_ENV: &str = "SPARSE_SPECTRA_DENSE_CAP";

static SEQ: Once = Once::new();

/// Decompositions always run single-threaded so that outputs cannot depend
/// on thread counts.
fn init() {
    SEQ.call_once(|| faer::set_global_parallelism(Par::Seq));
}

pub fn dense_cap() -> usize {
    std::env::var(DENSE_CAP_ENV)
        .ok()
        .and_then(|v| v.trim().parse().ok())
        .unwrap_or(DEFAULT_DENSE_CAP)
}

pub fn check_cap(rows: usize, cols: usize) -> Result<()> {
    let cap = dense_cap();
    if rows.max(cols) > cap {
        return Err(Error::ResourceLimit(format!(
            "{rows}x{cols} exceeds the dense cap {cap} (set {DENSE_CAP_ENV} to raise it)"
        )));
    }
    Ok(())
}

fn sort_desc(v: &mut [f64]) {
    v.sort_unstable_by(|a, b| b.partial_cmp(a).unwrap_or(std::cmp::Ordering::Equal));
}

/// Singular values, non-increasing, `min(rows, cols)` of them.
pub fn singular_values(a: MatRef<'_, Complex64>) -> Result<Vec<f64>> {
    init();
    check_cap(a.nrows(), a.ncols())?;
    if a.nrows() == 0 || a.ncols() == 0 {
        return Ok(Vec::new());
    }
    let mut s = a.singular_values().map_err(|e| Error::Decomposition(format!("{e:?}")))?;
    for x in s.iter_mut() {
        *x = x.abs();
    }
    sort_desc(&mut s);
    Ok(s)
}

/// Full SVD `A = U diag(s) V^H` with `U` square of order `rows`, `V`
/// square of order `cols`, columns ordered by non-increasing `s`.
#[derive(Clone, Debug)]
pub struct FullSvd {
    pub s: Vec<f64>,
    pub u: CMat,
    pub v: CMat,
}

pub fn full_svd(a: MatRef<'_, Complex64>) -> Result<FullSvd> {
    init();
    check_cap(a.nrows(), a.ncols())?;
    let (m, n) = (a.nrows(), a.ncols());
    if m == 0 || n == 0 {
        return Ok(FullSvd { s: Vec::new(), u: CMat::identity(m, m), v: CMat::identity(n, n) });
    }
    let svd = a.svd().map_err(|e| Error::Decomposition(format!("{e:?}")))?;
    let sd = svd.S().column_vector();
    let k = m.min(n);
    let raw: Vec<f64> = (0..k).map(|i| sd[i].re.abs()).collect();
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&i, &j| raw[j].partial_cmp(&raw[i]).unwrap_or(std::cmp::Ordering::Equal));
    let sorted = order.windows(2).all(|w| w[0] < w[1]);
    let s: Vec<f64> = order.iter().map(|&i| raw[i]).collect();
    let (u0, v0) = (svd.U(), svd.V());
    if sorted {
        return Ok(FullSvd { s, u: u0.to_owned(), v: v0.to_owned() });
    }
    let colmap = |c: usize, total: usize| if c < k { order[c] } else { c.min(total - 1) };
    let u = CMat::from_fn(m, m, |i, c| u0[(i, colmap(c, m))]);
    let v = CMat::from_fn(n, n, |i, c| v0[(i, colmap(c, n))]);
    Ok(FullSvd { s, u, v })
}

/// `ln |det A|`, `-inf` when a pivot is exactly zero.
pub fn log_abs_det(a: MatRef<'_, Complex64>) -> Result<f64> {
    init();
    check_cap(a.nrows(), a.ncols())?;
    if a.nrows() != a.ncols() {
        return Err(Error::InvalidParameter("determinant of a non-square matrix".into()));
    }
    if a.nrows() == 0 {
        return Ok(0.0);
    }
    let lu = a.partial_piv_lu();
    let u = lu.U();
    Ok((0..a.nrows()).map(|i| u[(i, i)].norm().ln()).sum())
}

/// Solves `A x = b` for square `A`.
pub fn solve(a: MatRef<'_, Complex64>, b: &[Complex64]) -> Vec<Complex64> {
    init();
    let lu = a.partial_piv_lu();
    let mut rhs = CMat::from_fn(b.len(), 1, |i, _| b[i]);
    lu.solve_in_place(rhs.as_mut());
    (0..b.len()).map(|i| rhs[(i, 0)]).collect()
}

/// Eigenvalues of a real matrix.
pub fn eigenvalues_real(a: MatRef<'_, f64>) -> Result<Vec<Complex64>> {
    init();
    check_cap(a.nrows(), a.ncols())?;
    if a.nrows() == 0 {
        return Ok(Vec::new());
    }
    a.eigenvalues().map_err(|e| Error::Decomposition(format!("{e:?}")))
}

/// Eigenvalues of a complex matrix.
pub fn eigenvalues_complex(a: MatRef<'_, Complex64>) -> Result<Vec<Complex64>> {
    init();
    check_cap(a.nrows(), a.ncols())?;
    if a.nrows() == 0 {
        return Ok(Vec::new());
    }
    a.eigenvalues().map_err(|e| Error::Decomposition(format!("{e:?}")))
}

pub fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

pub fn norm(a: &[Complex64]) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

pub fn col(m: MatRef<'_, Complex64>, j: usize) -> Vec<Complex64> {
    (0..m.nrows()).map(|i| m[(i, j)]).collect()
}

pub fn matvec(m: MatRef<'_, Complex64>, x: &[Complex64]) -> Vec<Complex64> {
    let mut y = vec![Complex64::new(0.0, 0.0); m.nrows()];
    for j in 0..m.ncols() {
        let xj = x[j];
        if xj == Complex64::new(0.0, 0.0) {
            continue;
        }
        for (i, yi) in y.iter_mut().enumerate() {
            *yi += m[(i, j)] * xj;
        }
    }
    y
}

/// Operator norm through the largest singular value.
pub fn op_norm(m: MatRef<'_, Complex64>) -> Result<f64> {
    Ok(singular_values(m)?.first().copied().unwrap_or(0.0))
}

/// Number of eigenvalues of the Hermitian `h` below zero, by Sylvester
/// inertia of a Bunch-Kaufman factorization.
pub fn negative_inertia(h: MatRef<'_, Complex64>) -> Result<usize> {
    init();
    check_cap(h.nrows(), h.ncols())?;
    let n = h.nrows();
    if n == 0 {
        return Ok(0);
    }
    let f = h.lblt(faer::Side::Lower);
    let (d, s) = (f.B_diag(), f.B_subdiag());
    let mut neg = 0;
    let mut i = 0;
    while i < n {
        if i + 1 < n && s[i] != Complex64::new(0.0, 0.0) {
            let (a, b) = (d[i].re, d[i + 1].re);
            let det = a * b - s[i].norm_sqr();
            neg += if det < 0.0 { 1 } else if a + b < 0.0 { 2 } else { 0 };
            i += 2;
        } else {
            neg += usize::from(d[i].re < 0.0);
            i += 1;
        }
    }
    Ok(neg)
}

/// Haar-distributed unitary of order `k` (QR of a Ginibre matrix with the
/// phases of `R`'s diagonal removed).
pub fn haar_unitary(k: usize, rng: &mut impl rand::Rng) -> CMat {
    init();
    use rand_distr::{Distribution, StandardNormal};
    let g = CMat::from_fn(k, k, |_, _| {
        Complex64::new(StandardNormal.sample(rng), StandardNormal.sample(rng))
    });
    let qr = g.qr();
    let q = qr.compute_Q();
    let r = qr.R();
    let mut out = q;
    for c in 0..k {
        let d = r[(c, c)];
        let ph = if d.norm() > 0.0 { d / d.norm() } else { Complex64::new(1.0, 0.0) };
        for i in 0..k {
            out[(i, c)] *= ph;
        }
    }
    out
}
