use nalgebra::DMatrix;
use num_complex::Complex64;
use proptest::prelude::*;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use sparse_spectra::constants::BASIS_DIAGNOSTIC_FLOOR;
use sparse_spectra::linalg::{self, col, dot, norm, CMat};
use sparse_spectra::matrix::BinaryMatrix;
use sparse_spectra::model::{sample_modified, ModelParams};
use sparse_spectra::rng::trial_seed;
use sparse_spectra::sv::*;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

fn gauss(rng: &mut ChaCha8Rng, r: usize, k: usize) -> CMat {
    CMat::from_fn(r, k, |_, _| Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
}

fn gvec(rng: &mut ChaCha8Rng, k: usize) -> Vec<Complex64> {
    (0..k).map(|_| Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))).collect()
}

/// sqrt of the eigenvalues of M^H M from nalgebra's Hermitian solver.
fn oracle_singular_values(a: &CMat) -> Vec<f64> {
    let (r, k) = (a.nrows(), a.ncols());
    let m = DMatrix::from_fn(r, k, |i, j| nalgebra::Complex::new(a[(i, j)].re, a[(i, j)].im));
    let g = m.adjoint() * &m;
    let mut ev: Vec<f64> = g.symmetric_eigen().eigenvalues.iter().map(|&x| x.max(0.0).sqrt()).collect();
    ev.sort_by(|x, y| y.partial_cmp(x).unwrap());
    ev.truncate(r.min(k));
    ev
}

fn stack(a: &CMat, x: &[Complex64]) -> CMat {
    CMat::from_fn(a.nrows() + 1, a.ncols(), |i, j| if i < a.nrows() { a[(i, j)] } else { x[j] })
}

#[test]
fn spectrum_matches_independent_eigensolver() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..200 {
        let a = gauss(&mut rng, 6, 6);
        let s = SingularSpectrum::of_dense(a.as_ref(), true).unwrap();
        let want = oracle_singular_values(&a);
        for (g, w) in s.values.iter().zip(&want) {
            assert!((g - w).abs() <= 1e-8 * want[0]);
        }
        // vector invariants
        for i in 1..=6 {
            let v = s.right_vector(i).unwrap();
            assert!((norm(&linalg::matvec(a.as_ref(), &v)) - s.sigma(i)).abs() <= 1e-10 * s.sigma(1));
            for j in 1..i {
                assert!(dot(&s.right_vector(j).unwrap(), &v).norm() <= 1e-10);
            }
        }
    }
}

#[test]
fn spectrum_examples_and_cap() {
    let sh = ShiftedMatrix::new(BinaryMatrix::identity(5), c(0.0));
    assert!(singular_spectrum(&sh, false).unwrap().values.iter().all(|&v| (v - 1.0).abs() < 1e-14));
    let csv = singular_spectrum(&sh, false).unwrap().to_csv();
    assert!(csv.starts_with("index,sigma\n") && csv.lines().count() == 6);
    // rectangular shift: ones at (i, i) only
    let r = ShiftedMatrix::new(BinaryMatrix::zeros(3, 4), c(2.0)).dense();
    assert_eq!(r[(2, 2)], c(-2.0));
    assert_eq!(r[(2, 3)], ZERO);
}

#[test]
fn secular_against_redecomposition() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for square in [true, false] {
        for _ in 0..1000 {
            let m = rng.gen_range(2..=8);
            let rows = if square { m } else { m - 1 };
            let a = gauss(&mut rng, rows, m);
            let x = gvec(&mut rng, m);
            let spec = SingularSpectrum::of_dense(a.as_ref(), true).unwrap();
            let got = secular_append_row(&spec, &x).unwrap();
            let want = oracle_singular_values(&stack(&a, &x));
            assert_eq!(got.values.len(), want.len());
            for (g, w) in got.values.iter().zip(&want) {
                assert!((g - w).abs() <= 1e-8 * want[0], "{g} vs {w}");
            }
        }
    }
    // 5 x 6 case from the examples
    for _ in 0..1000 {
        let a = gauss(&mut rng, 5, 6);
        let x = gvec(&mut rng, 6);
        let got = secular_append_row(&SingularSpectrum::of_dense(a.as_ref(), true).unwrap(), &x).unwrap();
        let want = oracle_singular_values(&stack(&a, &x));
        assert!(got.values.iter().zip(&want).all(|(g, w)| (g - w).abs() <= 1e-8 * want[0]));
    }
}

#[test]
fn secular_residual_and_degenerate_poles() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..500 {
        let k = rng.gen_range(1..8);
        let mut s: Vec<f64> = (0..k).map(|_| rng.gen_range(0.0..3.0f64)).collect();
        s.sort_by(|a, b| b.partial_cmp(a).unwrap());
        let w: Vec<f64> = (0..k).map(|_| if rng.gen_bool(0.2) { 0.0 } else { rng.gen_range(0.0..2.0) }).collect();
        let (roots, resid) = secular_roots(&s, &w);
        assert_eq!(roots.len(), k);
        let scale = s.iter().map(|v| v * v).fold(1.0, f64::max) + w.iter().sum::<f64>();
        assert!(resid <= 1e-9 * scale.powi(k as i32), "{resid}");
    }
    // repeated singular values: ones 3 x 3 has sigma = (3, 0, 0)
    let ones = CMat::from_fn(2, 3, |_, _| c(1.0));
    let x = [c(1.0), c(-1.0), c(0.5)];
    let got = secular_append_row(&SingularSpectrum::of_dense(ones.as_ref(), true).unwrap(), &x).unwrap();
    let want = oracle_singular_values(&stack(&ones, &x));
    assert!(got.values.iter().zip(&want).all(|(g, w)| (g - w).abs() <= 1e-8 * want[0]));
}

#[test]
fn window_product_sweeps() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut tuples = 0;
    while tuples < 10_000 {
        let a = gauss(&mut rng, 6, 8);
        let x = gvec(&mut rng, 8);
        for k in 2..=8 {
            for l in (k - 1)..8 {
                let r = window_product_inequality(a.as_ref(), &x, k, l).unwrap();
                assert!(r.holds && r.margin >= -1e-9, "k={k} l={l} margin={}", r.margin);
                tuples += 1;
            }
        }
    }
    for _ in 0..500 {
        let a = gauss(&mut rng, 5, 5);
        let x = gvec(&mut rng, 5);
        for k in 2..=5 {
            assert!(window_product_inequality(a.as_ref(), &x, k, k - 1).unwrap().holds);
        }
    }
    let a = gauss(&mut rng, 4, 5);
    let r = window_product_inequality(a.as_ref(), &[ZERO; 5], 2, 3).unwrap();
    assert!(r.rhs == 0.0 && r.holds);
    assert!(window_product_inequality(a.as_ref(), &[ZERO; 5], 1, 3).is_err());
    assert!(window_product_inequality(a.as_ref(), &[ZERO; 5], 3, 5).is_err());
}

#[test]
fn projection_properties() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..200 {
        let n = rng.gen_range(2..10);
        let a = gauss(&mut rng, n, n);
        let spec = SingularSpectrum::of_dense(a.as_ref(), true).unwrap();
        let x = gvec(&mut rng, n);
        let y = gvec(&mut rng, n);
        let r = rng.gen_range(1..=n);
        let (pn, px) = bottom_projection(&spec, r, &x).unwrap();
        let (_, py) = bottom_projection(&spec, r, &y).unwrap();
        // Pythagoras
        let rest: Vec<Complex64> = x.iter().zip(&px).map(|(a, b)| a - b).collect();
        let xn = norm(&x);
        assert!((pn * pn + norm(&rest).powi(2) - xn * xn).abs() <= 1e-10 * xn * xn);
        // idempotent
        let (_, ppx) = bottom_projection(&spec, r, &px).unwrap();
        assert!(ppx.iter().zip(&px).all(|(a, b)| (a - b).norm() <= 1e-10 * xn));
        // self-adjoint: <Px, y> = <x, Py>
        assert!((dot(&px, &y) - dot(&x, &py)).norm() <= 1e-10 * xn * norm(&y));
        // full dimension
        assert!((bottom_projection(&spec, n, &x).unwrap().0 - xn).abs() <= 1e-10 * xn);
        // top vector is orthogonal to the bottom space
        if n > 1 {
            let top = spec.right_vector(1).unwrap();
            assert!(bottom_projection(&spec, n - 1, &top).unwrap().0 <= 1e-9);
        }
        assert!(bottom_projection(&spec, n + 1, &x).is_err());
    }
}

#[test]
fn circulant_all_small_sizes() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for s in 1..=12 {
        for _ in 0..100 {
            let z = Complex64::from_polar(rng.gen_range(0.0..3.0), rng.gen_range(0.0..std::f64::consts::TAU));
            let r = circulant_lsv(s, z).unwrap();
            assert!(r.bound_ok && r.det_ok, "s={s} z={z}");
        }
    }
    assert!(circulant_lsv(0, ZERO).is_err());
}

#[test]
fn norm_suite_examples() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let m = gauss(&mut rng, 4, 5);
    let mp = CMat::from_fn(5, 5, |i, j| if i < 4 { m[(i, j)] } else { ZERO });
    let r = norm_inequality_suite(m.as_ref(), mp.as_ref(), m.as_ref()).unwrap();
    assert!(r.holds && r.interlacing_slack.abs() < 1e-10);
    for _ in 0..2000 {
        let n = rng.gen_range(2..=64);
        let m = CMat::from_fn(n, n, |i, j| c(f64::from(rng.gen_bool((3.0 / n as f64).min(1.0)))) - if i == j { c(1.5) } else { ZERO });
        let mp = CMat::from_fn(n + 1, n, |i, j| if i < n { m[(i, j)] } else { c(f64::from(rng.gen_bool(0.2))) });
        let b = CMat::from_fn(n, n, |i, j| if rng.gen_bool(0.05) { m[(i, j)] + 1.0 } else { m[(i, j)] });
        let r = norm_inequality_suite(m.as_ref(), mp.as_ref(), b.as_ref()).unwrap();
        assert!(r.holds, "{r:?}");
    }
    assert!(norm_inequality_suite(m.as_ref(), m.as_ref(), m.as_ref()).is_err());
}

#[test]
fn spreadness_examples() {
    // zero column j: kernel vector e_j, level set at 0 of size n - 1
    let n = 8;
    let e: Vec<(usize, usize)> = (0..n).filter(|&j| j != 3).map(|j| (j, j)).collect();
    let m = ShiftedMatrix::new(BinaryMatrix::from_entries(n, n, &e).unwrap(), ZERO);
    let mut cfg = SpreadnessConfig::desk(2.0, n);
    cfg.near_kernel_tol = 1e-9;
    let rep = spreadness_probe(&m, &cfg, 1000).unwrap();
    assert_eq!(rep.vectors.len(), 1);
    let v = &rep.vectors[0];
    assert!((v.profile[0].1 - 1.0).abs() < 1e-12);
    assert_eq!(v.level_delta, n - 1);
    // nothing below a tiny tolerance on the identity
    let id = ShiftedMatrix::new(BinaryMatrix::identity(n), ZERO);
    assert!(spreadness_probe(&id, &cfg, 1000).unwrap().vectors.is_empty());
}

#[test]
fn zero_level_set_construction() {
    // M with many zero rows; v built so that (M - zI)v is small
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let d = 1.0f64;
    for _ in 0..200 {
        let n = rng.gen_range(20..80);
        let nonzero = rng.gen_range(1..n / 2);
        let mut e = Vec::new();
        for i in 0..nonzero {
            for j in 0..n {
                if rng.gen_bool(1.0 / n as f64) {
                    e.push((i, j));
                }
            }
        }
        let m = BinaryMatrix::from_entries(n, n, &e).unwrap();
        let z = Complex64::from_polar(rng.gen_range(0.5..2.0), rng.gen_range(0.0..6.0));
        let mut v = gvec(&mut rng, n);
        for vi in v.iter_mut().skip(nonzero) {
            *vi *= rng.gen_range(0.0..0.1);
        }
        let nv = norm(&v);
        v.iter_mut().for_each(|x| *x /= nv);
        let r = zero_level_check(&m, z, &v, d, n).unwrap();
        assert!(r.zero_rows >= n - nonzero);
        assert!(r.hypothesis && r.holds, "{r:?}");
    }
}

#[test]
fn spreadness_on_modified_blocks() {
    use rayon::prelude::*;
    let trials = 100u64;
    let ok: usize = (0..trials)
        .into_par_iter()
        .map(|t| {
            let p = ModelParams::new(2000, 4.0, 6, trial_seed(31, t));
            let b = sample_modified(&p).unwrap();
            let m = ShiftedMatrix::new(b, Complex64::new(1.0, 1.0));
            let rep = spreadness_probe(&m, &SpreadnessConfig::desk(4.0, 2000), 0).unwrap();
            usize::from(!rep.vectors.is_empty() && rep.vectors.iter().all(|v| v.spread_ok))
        })
        .sum();
    assert!(ok * 100 >= 95 * trials as usize, "{ok}");
}

#[test]
fn balanced_basis_examples() {
    let n = 200;
    let e1 = CMat::from_fn(n, 1, |i, _| if i == 0 { c(1.0) } else { ZERO });
    let (b, diag) = balanced_basis(e1.as_ref(), 5, 1).unwrap();
    assert!((norm(&col(b.as_ref(), 0)) - 1.0).abs() < 1e-12);
    assert!((diag - n as f64).abs() < 1e-9);
    // coordinate pair: a Haar 2 x 2 rotation spreads both vectors over both coordinates
    let pair = CMat::from_fn(n, 2, |i, j| if i == j { c(1.0) } else { ZERO });
    let (b, diag) = balanced_basis(pair.as_ref(), 50, 2).unwrap();
    for j in 0..2 {
        assert!(b[(0, j)].norm() > 0.0 && b[(1, j)].norm() > 0.0);
        assert!((b[(0, j)].norm_sqr() + b[(1, j)].norm_sqr() - 1.0).abs() < 1e-12);
    }
    // best of 50 is close to the balanced value 1/sqrt 2
    assert!(diag >= 0.6 * n as f64 / 2f64.sqrt() / 2f64.sqrt());
    let bad = CMat::from_fn(n, 2, |i, _| if i == 0 { c(1.0) } else { ZERO });
    assert!(balanced_basis(bad.as_ref(), 5, 1).is_err());
}

#[test]
fn balanced_basis_random_subspaces() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let trials = 100;
    let mut above = 0;
    for t in 0..trials {
        let g = gauss(&mut rng, 200, 10);
        let q = linalg::full_svd(g.as_ref()).unwrap().u;
        let basis = CMat::from_fn(200, 10, |i, j| q[(i, j)]);
        let (b, diag) = balanced_basis(basis.as_ref(), 20, t).unwrap();
        for a in 0..10 {
            for k in 0..10 {
                let want = if a == k { 1.0 } else { 0.0 };
                assert!((dot(&col(b.as_ref(), a), &col(b.as_ref(), k)) - c(want)).norm() < 1e-10);
            }
        }
        above += usize::from(diag >= BASIS_DIAGNOSTIC_FLOOR);
        assert!(diag >= 0.1);
    }
    assert!(above * 10 >= 9 * trials as usize);
}

#[test]
fn iteration_bound_examples() {
    assert_eq!(iteration_bound(1000, 500, 3.0).unwrap().steps, 0);
    assert_eq!(g_step(1 << 20, 1 << 10, 2.0), 1);
    let r = iteration_bound(1_000_000, 1000, 4.0).unwrap();
    assert!(r.holds);
    assert!((r.bound - 131072.0 * 4.0 * 1000f64.ln().powi(4)).abs() < 1e-6 * r.bound);
    assert!(iteration_bound(10, 0, 1.0).is_err());
}

proptest! {
    #[test]
    fn rearrangement_invariants(v in prop::collection::vec((-5.0f64..5.0, -5.0f64..5.0), 1..40)) {
        let v: Vec<Complex64> = v.into_iter().map(|(a, b)| Complex64::new(a, b)).collect();
        let r = Rearrangement::new(&v);
        prop_assert!(r.values.windows(2).all(|w| w[0] >= w[1]));
        let mut got = r.values.clone();
        let mut want: Vec<f64> = v.iter().map(|x| x.norm()).collect();
        got.sort_by(|a, b| a.partial_cmp(b).unwrap());
        want.sort_by(|a, b| a.partial_cmp(b).unwrap());
        prop_assert_eq!(got, want);
        let nv = norm(&v);
        if nv > 0.0 {
            prop_assert!(r.star(1) >= nv / (v.len() as f64).sqrt() - 1e-12);
        }
        prop_assert_eq!(r.star(v.len() + 1), 0.0);
    }

    #[test]
    fn girko_identity(seed in 0u64..1_000_000, n in 1usize..=64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = gauss(&mut rng, n, n);
        let s = linalg::singular_values(a.as_ref()).unwrap();
        let lhs: f64 = s.iter().map(|v| v.ln()).sum();
        prop_assert!((lhs - linalg::log_abs_det(a.as_ref()).unwrap()).exp_m1().abs() <= 1e-8);
    }

    #[test]
    fn zero_row_append_keeps_spectrum(seed in 0u64..1_000_000, n in 1usize..12) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = gauss(&mut rng, n, n);
        let spec = SingularSpectrum::of_dense(a.as_ref(), true).unwrap();
        let out = secular_append_row(&spec, &vec![ZERO; n]).unwrap();
        prop_assert!(out.values.iter().zip(&spec.values).all(|(x, y)| (x - y).abs() <= 1e-12 * spec.values[0]));
    }
}
