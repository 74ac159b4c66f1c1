//! Deterministic verification suites: exact linear-algebra identities and
//! brute-force oracles for the combinatorial routines.

use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::anticonc::{max_ball_mass, slice_law};
use crate::graph::{local_density_check, scc_structure, unique_neighbors, Digraph, DensityVerdict};
use crate::linalg::{self, CMat};
use crate::matrix::BinaryMatrix;
use crate::rng::{derive_seed, stream};
use crate::sv::{circulant_lsv, norm_inequality_suite, secular_append_row, window_product_inequality, SingularSpectrum};
use crate::error::Result;

const SUITE_DOMAIN: u64 = 11;

#[derive(Clone, Debug, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub instances: usize,
    pub failures: usize,
    /// Largest error (or smallest slack, for inequalities) seen.
    pub worst: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct SuiteReport {
    pub checks: Vec<CheckResult>,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.failures == 0 && c.instances > 0)
    }
}

fn rng_for(seed: u64, check: u64, i: u64) -> ChaCha8Rng {
    stream(derive_seed(seed, &[check]), SUITE_DOMAIN, i)
}

fn gaussian(rng: &mut ChaCha8Rng, r: usize, c: usize) -> CMat {
    CMat::from_fn(r, c, |_, _| {
        let a: f64 = rng.sample(StandardNormal);
        let b: f64 = rng.sample(StandardNormal);
        Complex64::new(a, b)
    })
}

fn sparse_shifted(rng: &mut ChaCha8Rng, r: usize, c: usize) -> CMat {
    let p = rng.gen_range(1.0..4.0) / c as f64;
    let z = Complex64::from_polar(rng.gen_range(0.3..2.5), rng.gen_range(0.0..std::f64::consts::TAU));
    CMat::from_fn(r, c, |i, j| {
        let e = if rng.gen::<f64>() < p { 1.0 } else { 0.0 };
        Complex64::new(e, 0.0) - if i == j { z } else { Complex64::new(0.0, 0.0) }
    })
}

fn random_matrix(rng: &mut ChaCha8Rng, r: usize, c: usize) -> CMat {
    if rng.gen::<bool>() {
        gaussian(rng, r, c)
    } else {
        sparse_shifted(rng, r, c)
    }
}

fn count(n: f64, scale: f64) -> usize {
    ((n * scale).round() as usize).max(1)
}

/// The exact-identity suite. `scale` multiplies every instance count.
pub fn exact_identity_suite(seed: u64, scale: f64) -> Result<SuiteReport> {
    let mut checks = Vec::new();

    // secular update against a full re-decomposition, both shape classes
    for (tag, square) in [(1u64, true), (2, false)] {
        let mut c = CheckResult {
            name: format!("secular_append_row_{}", if square { "square" } else { "wide" }),
            instances: 0,
            failures: 0,
            worst: 0.0,
        };
        for i in 0..count(1000.0, scale) as u64 {
            let mut rng = rng_for(seed, tag, i);
            let m = rng.gen_range(2..=12);
            let rows = if square { m } else { m - 1 };
            let a = random_matrix(&mut rng, rows, m);
            let x: Vec<Complex64> = (0..m).map(|_| Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))).collect();
            let spec = SingularSpectrum::of_dense(a.as_ref(), true)?;
            let mut stacked = CMat::zeros(rows + 1, m);
            for r in 0..rows {
                for j in 0..m {
                    stacked[(r, j)] = a[(r, j)];
                }
            }
            for j in 0..m {
                stacked[(rows, j)] = x[j];
            }
            let want = linalg::singular_values(stacked.as_ref())?;
            let err = match secular_append_row(&spec, &x) {
                Ok(got) => {
                    let scale = want[0].max(1.0);
                    want.iter().zip(&got.values).map(|(w, g)| (w - g).abs() / scale).fold(0.0, f64::max)
                        + if got.values.len() == want.len() { 0.0 } else { f64::INFINITY }
                }
                Err(_) => f64::INFINITY,
            };
            c.instances += 1;
            c.worst = c.worst.max(err);
            if !(err <= 1e-8) {
                c.failures += 1;
            }
        }
        checks.push(c);
    }

    // product of singular values against |det|
    let mut c = CheckResult { name: "girko_determinant".into(), instances: 0, failures: 0, worst: 0.0 };
    for i in 0..count(500.0, scale) as u64 {
        let mut rng = rng_for(seed, 3, i);
        let n = rng.gen_range(1..=64);
        let a = random_matrix(&mut rng, n, n);
        let s = linalg::singular_values(a.as_ref())?;
        if s[n - 1] <= 1e-6 * s[0] {
            continue;
        }
        let lhs: f64 = s.iter().map(|v| v.ln()).sum();
        let err = (lhs - linalg::log_abs_det(a.as_ref())?).exp_m1().abs();
        c.instances += 1;
        c.worst = c.worst.max(err);
        if !(err <= 1e-8) {
            c.failures += 1;
        }
    }
    checks.push(c);

    // circulant determinant
    let mut c = CheckResult { name: "circulant_determinant".into(), instances: 0, failures: 0, worst: 0.0 };
    for s in 1..=12usize {
        for i in 0..count(100.0, scale) as u64 {
            let mut rng = rng_for(seed, 4, (s as u64) << 32 | i);
            let z = Complex64::from_polar(rng.gen_range(0.0..2.5), rng.gen_range(0.0..std::f64::consts::TAU));
            let r = circulant_lsv(s, z)?;
            let err = (r.det - r.det_target).abs() / r.det_target.max(1e-300);
            c.instances += 1;
            c.worst = c.worst.max(if r.det_ok { 0.0 } else { err });
            if !(r.det_ok && r.bound_ok) {
                c.failures += 1;
            }
        }
    }
    checks.push(c);

    // interlacing, Weyl and Schur
    let mut c = CheckResult { name: "interlacing_weyl_schur".into(), instances: 0, failures: 0, worst: f64::INFINITY };
    for i in 0..count(10_000.0, scale) as u64 {
        let mut rng = rng_for(seed, 5, i);
        let n = if rng.gen_range(0..20) == 0 { rng.gen_range(2..=64) } else { rng.gen_range(2..=16) };
        let cols = n + rng.gen_range(0..=1);
        let m = sparse_shifted(&mut rng, n, cols);
        let mut mp = CMat::zeros(n + 1, cols);
        for r in 0..n {
            for j in 0..cols {
                mp[(r, j)] = m[(r, j)];
            }
        }
        for j in 0..cols {
            mp[(n, j)] = if rng.gen::<f64>() < 0.3 { Complex64::new(1.0, 0.0) } else { Complex64::new(0.0, 0.0) };
        }
        let b = CMat::from_fn(n, cols, |r, j| {
            if rng.gen::<f64>() < 2.0 / cols as f64 {
                m[(r, j)] + Complex64::new(if m[(r, j)].re >= 0.5 { -1.0 } else { 1.0 }, 0.0)
            } else {
                m[(r, j)]
            }
        });
        let r = norm_inequality_suite(m.as_ref(), mp.as_ref(), b.as_ref())?;
        c.instances += 1;
        c.worst = c.worst.min(r.interlacing_slack.min(r.weyl_slack).min(r.schur_slack));
        if !r.holds {
            c.failures += 1;
        }
    }
    checks.push(c);

    // the window product inequality for a row append
    let mut c = CheckResult { name: "walk_row_modified".into(), instances: 0, failures: 0, worst: f64::INFINITY };
    let target = count(10_000.0, scale);
    let mut i = 0u64;
    while c.instances < target {
        let mut rng = rng_for(seed, 6, i);
        i += 1;
        let m = rng.gen_range(3..=8);
        let rows = match rng.gen_range(0..3) {
            0 => m,
            1 => m - 1,
            _ => rng.gen_range(1..=m),
        };
        let a = random_matrix(&mut rng, rows, m);
        let x: Vec<Complex64> = (0..m).map(|_| Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))).collect();
        for k in 2..=m {
            for l in (k - 1)..m {
                let r = window_product_inequality(a.as_ref(), &x, k, l)?;
                c.instances += 1;
                c.worst = c.worst.min(r.margin);
                if !r.holds {
                    c.failures += 1;
                }
            }
        }
    }
    checks.push(c);
    Ok(SuiteReport { checks })
}

fn bits_matrix(n: usize, bits: u64) -> BinaryMatrix {
    let e: Vec<(usize, usize)> = (0..n * n).filter(|&b| bits >> b & 1 == 1).map(|b| (b / n, b % n)).collect();
    BinaryMatrix::from_entries(n, n, &e).expect("in range")
}

fn naive_unique(m: &BinaryMatrix, s: &[usize]) -> Vec<usize> {
    (0..m.rows())
        .filter(|&i| {
            let hits = s.iter().filter(|&&j| m.get(i, j)).count();
            if s.contains(&i) {
                hits == 0
            } else {
                hits == 1
            }
        })
        .collect()
}

fn naive_density(m: &BinaryMatrix, s_max: usize) -> bool {
    let n = m.rows();
    (1u32..(1 << n)).all(|mask| {
        let s: Vec<usize> = (0..n).filter(|&i| mask >> i & 1 == 1).collect();
        s.len() > s_max || s.iter().map(|&i| s.iter().filter(|&&j| m.get(i, j)).count()).sum::<usize>() <= s.len()
    })
}

fn naive_scc_labels(m: &BinaryMatrix) -> Vec<usize> {
    let n = m.rows();
    let mut r = vec![vec![false; n]; n];
    for (i, row) in r.iter_mut().enumerate() {
        row[i] = true;
    }
    // column j lists out-neighbours of j
    for (i, j) in m.entries() {
        r[j][i] = true;
    }
    for k in 0..n {
        for i in 0..n {
            if r[i][k] {
                for j in 0..n {
                    if r[k][j] {
                        r[i][j] = true;
                    }
                }
            }
        }
    }
    (0..n).map(|i| (0..n).find(|&j| r[i][j] && r[j][i]).unwrap()).collect()
}

/// Per-matrix comparison; returns the number of disagreements.
fn graph_disagreements(m: &BinaryMatrix, s_max: usize) -> Result<(usize, usize, usize)> {
    let n = m.rows();
    let mut un = 0;
    for mask in 0u32..(1 << n) {
        let s: Vec<usize> = (0..n).filter(|&i| mask >> i & 1 == 1).collect();
        if unique_neighbors(m, &s)? != naive_unique(m, &s) {
            un += 1;
        }
    }
    let want = naive_density(m, s_max);
    let got = match local_density_check(m, s_max, usize::MAX)? {
        DensityVerdict::Pass => Some(true),
        DensityVerdict::Fail { .. } => Some(false),
        DensityVerdict::Undecided { .. } => None,
    };
    let dens = usize::from(got != Some(want));
    let scc = scc_structure(&Digraph::from_matrix(m));
    let labels = naive_scc_labels(m);
    let same = (0..n).all(|i| (0..n).all(|j| (scc.component_of[i] == scc.component_of[j]) == (labels[i] == labels[j])));
    Ok((un, dens, usize::from(!same)))
}

/// Exact slice concentration for integer-valued `v` and `delta < 1/2`:
/// the largest count of `m`-subsets sharing a sum, by dynamic programming.
fn slice_dp(v: &[i64], m: usize) -> f64 {
    let off: i64 = v.iter().map(|x| x.abs()).sum();
    let width = (2 * off + 1) as usize;
    let mut ways = vec![vec![0f64; width]; m + 1];
    ways[0][off as usize] = 1.0;
    for &x in v {
        for j in (1..=m).rev() {
            for s in 0..width {
                let from = s as i64 - x;
                if from >= 0 && (from as usize) < width && ways[j - 1][from as usize] > 0.0 {
                    ways[j][s] += ways[j - 1][from as usize];
                }
            }
        }
    }
    let total: f64 = ways[m].iter().sum();
    ways[m].iter().cloned().fold(0.0, f64::max) / total
}

fn slice_disagrees(v: &[i64], m: usize) -> Result<bool> {
    let vc: Vec<Complex64> = v.iter().map(|&x| Complex64::new(x as f64, 0.0)).collect();
    let (pts, w) = slice_law(&vc, m)?;
    let (lib, _) = max_ball_mass(&pts, &w, 0.1);
    Ok((lib - slice_dp(v, m)).abs() > 1e-12)
}

/// Brute-force oracle suite. Every matrix is covered for `n <= 4`; for
/// `n` in 5..=6 and 7..=14 random instances are drawn.
pub fn brute_force_suite(seed: u64, scale: f64) -> Result<SuiteReport> {
    let mut un = CheckResult { name: "unique_neighbors".into(), instances: 0, failures: 0, worst: 0.0 };
    let mut de = CheckResult { name: "local_density_check".into(), instances: 0, failures: 0, worst: 0.0 };
    let mut sc = CheckResult { name: "scc_structure".into(), instances: 0, failures: 0, worst: 0.0 };
    let mut tally = |m: &BinaryMatrix, s_max: usize| -> Result<()> {
        let (a, b, c) = graph_disagreements(m, s_max)?;
        un.instances += 1 << m.rows();
        un.failures += a;
        de.instances += 1;
        de.failures += b;
        sc.instances += 1;
        sc.failures += c;
        Ok(())
    };
    for n in 1..=4usize {
        for bits in 0..(1u64 << (n * n)) {
            tally(&bits_matrix(n, bits), n)?;
        }
    }
    for (tag, lo, hi) in [(7u64, 5usize, 6usize), (8, 7, 14)] {
        for i in 0..count(1000.0, scale) as u64 {
            let mut rng = rng_for(seed, tag, i);
            let n = rng.gen_range(lo..=hi);
            let p = rng.gen_range(0.5..2.5) / n as f64;
            let e: Vec<(usize, usize)> =
                (0..n * n).filter(|_| rng.gen::<f64>() < p).map(|b| (b / n, b % n)).collect();
            let m = BinaryMatrix::from_entries(n, n, &e)?;
            tally(&m, rng.gen_range(1..=n.min(6)))?;
        }
    }
    let mut sl = CheckResult { name: "slice_concentration".into(), instances: 0, failures: 0, worst: 0.0 };
    for n in 1..=6usize {
        for code in 0..3u64.pow(n as u32) {
            let v: Vec<i64> = (0..n).map(|i| (code / 3u64.pow(i as u32) % 3) as i64).collect();
            for m in 1..=n / 2 {
                sl.instances += 1;
                sl.failures += usize::from(slice_disagrees(&v, m)?);
            }
        }
    }
    for i in 0..count(1000.0, scale) as u64 {
        let mut rng = rng_for(seed, 9, i);
        let n = rng.gen_range(7..=14);
        let v: Vec<i64> = (0..n).map(|_| rng.gen_range(-3..=3)).collect();
        let m = rng.gen_range(1..=n / 2);
        sl.instances += 1;
        sl.failures += usize::from(slice_disagrees(&v, m)?);
    }
    Ok(SuiteReport { checks: vec![un, de, sc, sl] })
}
