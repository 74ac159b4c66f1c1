use num_complex::Complex64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sparse_spectra::graph::*;
use sparse_spectra::matrix::BinaryMatrix;
use sparse_spectra::model::{sample_iid, sample_modified, ModelParams};
use sparse_spectra::rng::trial_seed;
use sparse_spectra::spectral::eigen_spectrum;

fn random_matrix(rng: &mut ChaCha8Rng, n: usize, p: f64) -> BinaryMatrix {
    let e: Vec<(usize, usize)> =
        (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).filter(|_| rng.gen::<f64>() < p).collect::<Vec<_>>();
    BinaryMatrix::from_entries(n, n, &e).unwrap()
}

fn dense(m: &BinaryMatrix) -> Vec<Vec<bool>> {
    (0..m.rows()).map(|i| (0..m.cols()).map(|j| m.get(i, j)).collect()).collect()
}

/// U(S) straight from the definition.
fn naive_unique(a: &[Vec<bool>], s: &[usize]) -> Vec<usize> {
    (0..a.len())
        .filter(|&i| {
            let hits = s.iter().filter(|&&j| a[i][j]).count();
            if s.contains(&i) {
                hits == 0
            } else {
                hits == 1
            }
        })
        .collect()
}

fn subsets(n: usize) -> impl Iterator<Item = Vec<usize>> {
    (0u32..(1 << n)).map(move |mask| (0..n).filter(|&i| mask >> i & 1 == 1).collect())
}

#[test]
fn unique_neighbor_examples() {
    let m = BinaryMatrix::from_dense(&[vec![1, 0, 0], vec![1, 1, 0], vec![0, 0, 1]]).unwrap();
    assert_eq!(unique_neighbors(&m, &[0]).unwrap(), vec![1]);
    let z = BinaryMatrix::zeros(4, 4);
    assert_eq!(unique_neighbors(&z, &[1, 3]).unwrap(), vec![1, 3]);
    assert!(unique_neighbors(&BinaryMatrix::identity(4), &[0, 1]).unwrap().is_empty());
    assert!(unique_neighbors(&z, &[4]).is_err());
}

#[test]
fn unique_neighbors_match_definition() {
    // every matrix up to n = 3, random ones up to 6, all sets
    for n in 1..=3usize {
        for bits in 0u32..(1 << (n * n)) {
            let e: Vec<_> = (0..n * n).filter(|&b| bits >> b & 1 == 1).map(|b| (b / n, b % n)).collect();
            let m = BinaryMatrix::from_entries(n, n, &e).unwrap();
            let a = dense(&m);
            for s in subsets(n) {
                assert_eq!(unique_neighbors(&m, &s).unwrap(), naive_unique(&a, &s));
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..300 {
        let n = rng.gen_range(4..=6);
        let q = rng.gen_range(0.1..0.6);
        let m = random_matrix(&mut rng, n, q);
        let a = dense(&m);
        for s in subsets(n) {
            assert_eq!(unique_neighbors(&m, &s).unwrap(), naive_unique(&a, &s));
        }
    }
}

#[test]
fn unique_neighbor_observation() {
    // |((M - zI) v_S)_i| >= v*_l min(|z|, 1) for i in U(S)
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for _ in 0..2000 {
        let n = rng.gen_range(2..=8);
        let q = rng.gen_range(0.1..0.5);
        let m = random_matrix(&mut rng, n, q);
        let z = Complex64::new(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
        let mut v: Vec<Complex64> = (0..n).map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
        let nv = v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
        v.iter_mut().for_each(|x| *x /= nv);
        let mut idx: Vec<usize> = (0..n).collect();
        idx.sort_by(|&a, &b| v[b].norm().total_cmp(&v[a].norm()));
        for l in 1..=n {
            let s: Vec<usize> = idx[..l].to_vec();
            let vstar = v[idx[l - 1]].norm();
            for i in unique_neighbors(&m, &s).unwrap() {
                let mut acc = Complex64::new(0.0, 0.0);
                for &j in &s {
                    let mij = if m.get(i, j) { 1.0 } else { 0.0 };
                    let sh = if i == j { z } else { Complex64::new(0.0, 0.0) };
                    acc += (Complex64::new(mij, 0.0) - sh) * v[j];
                }
                assert!(acc.norm() >= vstar * z.norm().min(1.0) - 1e-12);
            }
        }
    }
}

fn naive_census(m: &BinaryMatrix, k: usize, n_alpha: usize) -> usize {
    let a = dense(m);
    subsets(m.cols())
        .filter(|s| s.len() == k)
        .filter(|s| (naive_unique(&a, s).len() as f64) < alpha(n_alpha, k) * k as f64)
        .count()
}

#[test]
fn exact_census_matches_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for _ in 0..200 {
        let n = rng.gen_range(4..=8);
        let q = rng.gen_range(0.1..0.5);
        let m = random_matrix(&mut rng, n, q);
        let n_alpha = 50;
        let rep = expansion_census(&m, &CensusConfig::exact(n_alpha, 1, 3)).unwrap();
        for sc in &rep.sizes {
            assert_eq!(sc.violations, naive_census(&m, sc.size, n_alpha), "size {}", sc.size);
        }
    }
}

#[test]
fn census_examples() {
    let id = expansion_census(&BinaryMatrix::identity(6), &CensusConfig::exact(6, 1, 1)).unwrap();
    assert_eq!(id.total_violations(), 6);
    let z = expansion_census(&BinaryMatrix::zeros(20, 20), &CensusConfig::exact(20, 1, 3)).unwrap();
    assert!(z.holds());
}

#[test]
fn sampled_census_on_extracted_blocks() {
    let n = 4000;
    let p = ModelParams::new(n, 4.0, 8, 0);
    let r = (n as f64).ln().powf(1.5).ceil() as usize;
    let k_max = (0.01 * n as f64) as usize;
    let trials = 20usize;
    let good = (0..trials)
        .filter(|&t| {
            let b = sample_modified(&p.with_seed(trial_seed(20, t as u64))).unwrap();
            let core = n - p.ell;
            let bt = b.leading(core);
            let cfg = CensusConfig::sampled(n, r, k_max, 1000, t as u64);
            expansion_census(&bt, &cfg).unwrap().holds()
        })
        .count();
    assert!(good >= trials - 1, "{good}/{trials}");
}

/// Exhaustive density: every S with |S| <= s_max spans at most |S| ones.
fn naive_density(a: &[Vec<bool>], s_max: usize) -> bool {
    let n = a.len();
    subsets(n).filter(|s| !s.is_empty() && s.len() <= s_max).all(|s| {
        let sum: usize = s.iter().map(|&i| s.iter().filter(|&&j| a[i][j]).count()).sum();
        sum <= s.len()
    })
}

#[test]
fn density_matches_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    let (mut fails, mut passes) = (0, 0);
    for _ in 0..400 {
        let n = rng.gen_range(3..=14);
        let q = rng.gen_range(0.5..2.5) / n as f64;
        let m = random_matrix(&mut rng, n, q);
        let s_max = rng.gen_range(1..=6usize.min(n));
        let want = naive_density(&dense(&m), s_max);
        match local_density_check(&m, s_max, 1_000_000).unwrap() {
            DensityVerdict::Pass => {
                assert!(want);
                passes += 1;
            }
            DensityVerdict::Fail { witness, sum } => {
                assert!(!want);
                let w: usize = witness.iter().map(|&i| witness.iter().filter(|&&j| m.get(i, j)).count()).sum();
                assert_eq!(w, sum);
                assert!(sum > witness.len() && witness.len() <= s_max);
                fails += 1;
            }
            DensityVerdict::Undecided { .. } => panic!("budget too small"),
        }
    }
    assert!(fails > 20 && passes > 20, "{fails} {passes}");
}

#[test]
fn density_examples() {
    assert_eq!(local_density_check(&BinaryMatrix::identity(7), 7, 10_000).unwrap(), DensityVerdict::Pass);
    let m = BinaryMatrix::from_entries(5, 5, &[(1, 1), (1, 2), (2, 1), (2, 2)]).unwrap();
    match local_density_check(&m, 3, 10_000).unwrap() {
        DensityVerdict::Fail { witness, sum } => {
            assert_eq!(witness, vec![1, 2]);
            assert_eq!(sum, 4);
        }
        v => panic!("{v:?}"),
    }
}

#[test]
fn density_on_sampled_matrices() {
    // With s_max = 2 a violation is a pair with at least 3 of its 4 entries
    // set, so the failure rate is 1 - exp(-C(n,2)(4p^3(1-p) + p^4)),
    // about 3% at n = 4000.
    let n = 4000;
    let s_max = ((n as f64).ln().sqrt()).floor() as usize;
    assert_eq!(s_max, 2);
    let p = 4.0 / n as f64;
    let pairs = (n * (n - 1) / 2) as f64;
    let rate = 1.0 - (-pairs * (4.0 * p.powi(3) * (1.0 - p) + p.powi(4))).exp();
    let trials = 300;
    let mut fails = 0;
    for t in 0..trials {
        let b = sample_iid(&ModelParams::new(n, 4.0, 8, trial_seed(21, t))).unwrap();
        match local_density_check(&b, s_max, 1_000_000).unwrap() {
            DensityVerdict::Pass => {}
            DensityVerdict::Fail { witness, sum } => {
                assert_eq!(witness.len(), 2);
                assert!(sum >= 3);
                fails += 1;
            }
            v => panic!("{v:?}"),
        }
    }
    let tf = trials as f64;
    let sd = (tf * rate * (1.0 - rate)).sqrt();
    println!("density failures {fails}/{trials}, predicted {:.1}", tf * rate);
    assert!((fails as f64 - tf * rate).abs() <= 3.0 * sd, "{fails}");
}

/// Components from the mutual-reachability relation.
fn naive_scc(n: usize, edges: &[(usize, usize)]) -> Vec<Vec<usize>> {
    let mut r = vec![vec![false; n]; n];
    for (i, row) in r.iter_mut().enumerate() {
        row[i] = true;
    }
    for &(u, v) in edges {
        r[u][v] = true;
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                if r[i][k] && r[k][j] {
                    r[i][j] = true;
                }
            }
        }
    }
    let mut comps: Vec<Vec<usize>> = Vec::new();
    let mut seen = vec![false; n];
    for i in 0..n {
        if !seen[i] {
            let c: Vec<usize> = (0..n).filter(|&j| r[i][j] && r[j][i]).collect();
            c.iter().for_each(|&j| seen[j] = true);
            comps.push(c);
        }
    }
    comps.sort();
    comps
}

#[test]
fn scc_matches_closure() {
    let mut rng = ChaCha8Rng::seed_from_u64(15);
    for _ in 0..1000 {
        let n = rng.gen_range(1..=7);
        let p = rng.gen_range(0.05..0.5);
        let edges: Vec<(usize, usize)> =
            (0..n).flat_map(|u| (0..n).map(move |v| (u, v))).filter(|_| rng.gen::<f64>() < p).collect::<Vec<_>>();
        let s = scc_structure(&Digraph::from_edges(n, &edges));
        let mut got: Vec<Vec<usize>> = s
            .components
            .iter()
            .map(|c| {
                let mut c = c.clone();
                c.sort_unstable();
                c
            })
            .collect();
        got.sort();
        assert_eq!(got, naive_scc(n, &edges));
    }
}

#[test]
fn scc_examples() {
    let n = 9;
    let cyc: Vec<_> = (0..n).map(|i| (i, (i + 1) % n)).collect();
    let s = scc_structure(&Digraph::from_edges(n, &cyc));
    assert_eq!(s.components.len(), 1);
    assert_eq!(s.kinds[0], ComponentKind::Cycle);
    assert_eq!(s.giant_size, n);
    let e = scc_structure(&Digraph::from_edges(5, &[]));
    assert_eq!(e.components.len(), 5);
}

#[test]
fn supercritical_giant_component() {
    let n = 20_000;
    let small_cycle = (n as f64).ln().ln();
    let trials = 100;
    let (mut structured, mut literal) = (0, 0);
    for t in 0..trials {
        let b = sample_iid(&ModelParams::new(n, 1.5, 8, trial_seed(22, t))).unwrap();
        let s = scc_structure(&Digraph::from_matrix(&b));
        let is_big = |c: &Vec<usize>| c.len() as f64 > 0.01 * n as f64;
        let big = s.components.iter().filter(|c| is_big(c)).count();
        let small: Vec<_> = s.components.iter().zip(&s.kinds).filter(|(c, _)| !is_big(c)).collect();
        if big == 1 && small.iter().all(|(_, k)| matches!(k, ComponentKind::Singleton { .. } | ComponentKind::Cycle)) {
            structured += 1;
            if small.iter().all(|(c, _)| c.len() == 1 || c.len() as f64 <= small_cycle) {
                literal += 1;
            }
        }
    }
    println!("one giant, rest cycles/singletons: {structured}/{trials}; cycles within ln ln n: {literal}/{trials}");
    assert!(structured >= 95, "{structured}");
}

#[test]
fn reach_sizes_are_bimodal() {
    let n = 2000;
    let b = sample_iid(&ModelParams::new(n, 1.5, 8, 23)).unwrap();
    let g = Digraph::from_matrix(&b);
    let mut sizes: Vec<usize> = (0..n).map(|v| g.forward_reach(v).len()).collect();
    sizes.sort_unstable();
    sizes.dedup();
    let gap = sizes.windows(2).map(|w| w[1] as f64 / w[0] as f64).fold(0.0, f64::max);
    assert!(gap >= 10.0, "{sizes:?}");
}

#[test]
fn theta_root_values() {
    let t1 = theta_root(1.0).unwrap();
    assert!((t1 - 0.7968).abs() < 1e-4);
    for e in [0.1, 0.5, 1.0] {
        let t = theta_root(e).unwrap();
        assert!((1.0 - t - (-(1.0 + e) * t).exp()).abs() < 1e-12);
    }
    assert!(theta_root(1e-4).unwrap() < theta_root(1.0).unwrap());
    assert!(theta_root(0.0).is_err());
}

/// Algebraic multiplicity of 0 as `n - rank(A^n)`, rank over Q taken as the
/// largest rank modulo a few large primes.
fn zero_multiplicity(m: &BinaryMatrix) -> usize {
    let n = m.rows();
    let primes = [2_305_843_009_213_693_951u64, 1_000_000_007, 998_244_353];
    let mut best = 0;
    for &p in &primes {
        let mul = |a: &Vec<Vec<u64>>, b: &Vec<Vec<u64>>| -> Vec<Vec<u64>> {
            (0..n)
                .map(|i| {
                    (0..n)
                        .map(|j| (0..n).fold(0u128, |acc, k| (acc + a[i][k] as u128 * b[k][j] as u128) % p as u128) as u64)
                        .collect()
                })
                .collect()
        };
        let a: Vec<Vec<u64>> = (0..n).map(|i| (0..n).map(|j| m.get(i, j) as u64).collect()).collect();
        let mut pw = a.clone();
        for _ in 1..n {
            pw = mul(&pw, &a);
        }
        best = best.max(rank_mod(pw, p));
    }
    n - best
}

fn rank_mod(mut a: Vec<Vec<u64>>, p: u64) -> usize {
    let n = a.len();
    let pw = |mut b: u64, mut e: u64| {
        let mut r = 1u128;
        let mut bb = b as u128;
        while e > 0 {
            if e & 1 == 1 {
                r = r * bb % p as u128;
            }
            bb = bb * bb % p as u128;
            e >>= 1;
        }
        b = r as u64;
        b
    };
    let mut rank = 0;
    for c in 0..n {
        let Some(piv) = (rank..n).find(|&r| a[r][c] != 0) else { continue };
        a.swap(rank, piv);
        let inv = pw(a[rank][c], p - 2) as u128;
        for r in 0..n {
            if r != rank && a[r][c] != 0 {
                let f = a[r][c] as u128 * inv % p as u128;
                for k in 0..n {
                    let sub = f * a[rank][k] as u128 % p as u128;
                    a[r][k] = ((a[r][k] as u128 + p as u128 - sub) % p as u128) as u64;
                }
            }
        }
        rank += 1;
    }
    rank
}

#[test]
fn trivial_image_bounds_zero_multiplicity_exactly() {
    let mut rng = ChaCha8Rng::seed_from_u64(16);
    for _ in 0..300 {
        let n = rng.gen_range(1..=9);
        let q = rng.gen_range(0.3..1.5) / n as f64;
        let m = random_matrix(&mut rng, n, q);
        let c = trivial_image_census(&Digraph::from_matrix(&m)).count;
        assert!(c <= zero_multiplicity(&m));
    }
}

#[test]
fn trivial_image_examples() {
    let e = trivial_image_census(&Digraph::from_edges(6, &[]));
    assert_eq!(e.count, 6);
    // loop at 2, edges 0 -> 2 and 3 -> 4
    let g = Digraph::from_edges(5, &[(2, 2), (0, 2), (3, 4)]);
    let t = trivial_image_census(&g);
    assert_eq!(t.vertices, vec![false, true, false, true, true]);
}

#[test]
fn subcritical_trivial_image_against_spectrum() {
    let n = 600;
    for t in 0..50 {
        let b = sample_iid(&ModelParams::new(n, 0.5, 8, trial_seed(24, t))).unwrap();
        let c = trivial_image_census(&Digraph::from_matrix(&b)).count;
        let zeros = eigen_spectrum(&b).unwrap().points().iter().filter(|z| z.norm() < 1e-8).count();
        assert!(c <= zeros, "{c} > {zeros}");
        assert!(c as f64 >= 0.9 * n as f64);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn digraph_lists_are_transposes(n in 1usize..12, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = random_matrix(&mut rng, n, 0.3);
        let g = Digraph::from_matrix(&m);
        for u in 0..n {
            for &v in g.out_neighbors(u) {
                prop_assert!(g.in_neighbors(v).contains(&u));
                prop_assert!(m.get(v, u));
            }
        }
        let total: usize = (0..n).map(|u| g.out_neighbors(u).len()).sum();
        prop_assert_eq!(total, m.nnz());
    }

    #[test]
    fn unique_neighbors_are_rows(n in 1usize..10, seed in any::<u64>(), mask in any::<u16>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = random_matrix(&mut rng, n, 0.3);
        let s: Vec<usize> = (0..n).filter(|&i| mask >> i & 1 == 1).collect();
        let u = unique_neighbors(&m, &s).unwrap();
        prop_assert!(u.windows(2).all(|w| w[0] < w[1]));
        prop_assert_eq!(u, naive_unique(&dense(&m), &s));
    }
}
