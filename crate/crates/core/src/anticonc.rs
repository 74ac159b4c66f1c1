//! Lévy concentration estimates and checks of the anticoncentration bounds.

use num_complex::Complex64;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::constants;
use crate::error::{invalid, Error, Result};
use crate::linalg::{self, CMat};
use crate::matrix::BinaryMatrix;
use crate::rng::{derive_seed, domain, stream};
use crate::walk::{ln_epsilon_r, Process};

/// Two-sided 99% normal quantile.
const Z99: f64 = 2.5758;

pub type Sampler<'a> = &'a (dyn Fn(&mut ChaCha8Rng) -> Complex64 + Sync);

#[derive(Clone, Debug, Serialize)]
pub struct ConcentrationEstimate {
    pub radius: f64,
    /// Best sample-centred ball of radius `t`: a lower bracket of `L`.
    pub value: f64,
    /// Same at radius `2t`: an upper bracket.
    pub value_2t: f64,
    pub trials: usize,
    /// Wilson 99% half-width of `value`.
    pub half_width: f64,
}

/// Wilson interval centre and half-width.
pub fn wilson(hits: usize, n: usize) -> (f64, f64) {
    let nf = n as f64;
    let p = hits as f64 / nf;
    let z2 = Z99 * Z99;
    let den = 1.0 + z2 / nf;
    let centre = (p + z2 / (2.0 * nf)) / den;
    let half = Z99 / den * (p * (1.0 - p) / nf + z2 / (4.0 * nf * nf)).sqrt();
    (centre, half)
}

/// Largest total weight in a closed ball of radius `r` centred on a point.
pub fn max_ball_mass(points: &[Complex64], weights: &[f64], r: f64) -> (f64, Complex64) {
    let mut idx: Vec<usize> = (0..points.len()).collect();
    idx.sort_by(|&a, &b| points[a].re.total_cmp(&points[b].re));
    let res: Vec<f64> = idx.iter().map(|&i| points[i].re).collect();
    let mut best = (0.0, Complex64::new(0.0, 0.0));
    for &c in &idx {
        let cp = points[c];
        let lo = res.partition_point(|&x| x < cp.re - r);
        let hi = res.partition_point(|&x| x <= cp.re + r);
        let w: f64 = idx[lo..hi].iter().filter(|&&i| (points[i] - cp).norm() <= r).map(|&i| weights[i]).sum();
        if w > best.0 {
            best = (w, cp);
        }
    }
    best
}

/// Estimate from a fixed sample.
pub fn levy_from_samples(samples: &[Complex64], t: f64) -> Result<ConcentrationEstimate> {
    if samples.is_empty() || !(t >= 0.0) {
        return invalid("need samples and t >= 0");
    }
    let n = samples.len();
    let w = vec![1.0; n];
    let (a, _) = max_ball_mass(samples, &w, t);
    let (b, _) = max_ball_mass(samples, &w, 2.0 * t);
    let (_, half) = wilson(a as usize, n);
    Ok(ConcentrationEstimate { radius: t, value: a / n as f64, value_2t: b / n as f64, trials: n, half_width: half })
}

/// Draws `trials` samples (trial `i` on its own stream) and estimates
/// `L(Gamma, t)`.
pub fn levy_estimate(sampler: Sampler<'_>, t: f64, trials: usize, seed: u64) -> Result<ConcentrationEstimate> {
    if trials < 1000 {
        return invalid("levy_estimate needs at least 1000 trials");
    }
    levy_from_samples(&draw(sampler, trials, seed), t)
}

fn draw(sampler: Sampler<'_>, trials: usize, seed: u64) -> Vec<Complex64> {
    (0..trials as u64).map(|i| sampler(&mut stream(seed, domain::ANTICONC, i))).collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct LkrCheck {
    pub lhs: f64,
    pub lhs_2r: f64,
    pub denominator: f64,
    pub rhs: Option<f64>,
    /// `None` when the denominator vanishes and the check is skipped.
    pub pass: Option<bool>,
}

/// `L(sum xi_i, r) <= C / sqrt(sum (1 - L(xi_i, r)))`. Single-variable
/// concentrations use their `2r` upper bracket, the sum uses its `2r`
/// bracket too, so the comparison can only err towards failing.
pub fn lkr_check(samplers: &[Sampler<'_>], r: f64, trials: usize, seed: u64) -> Result<LkrCheck> {
    if samplers.is_empty() {
        return invalid("need at least one variable");
    }
    let mut denom = 0.0;
    let mut sums = vec![Complex64::new(0.0, 0.0); trials];
    for (i, s) in samplers.iter().enumerate() {
        let xs = draw(*s, trials, derive_seed(seed, &[i as u64]));
        let e = levy_from_samples(&xs, r)?;
        denom += 1.0 - e.value;
        for (acc, x) in sums.iter_mut().zip(&xs) {
            *acc += x;
        }
    }
    let tot = levy_from_samples(&sums, r)?;
    if denom <= 1e-12 {
        return Ok(LkrCheck { lhs: tot.value, lhs_2r: tot.value_2t, denominator: denom, rhs: None, pass: None });
    }
    let rhs = constants::LKR_C_FIT / denom.sqrt();
    Ok(LkrCheck { lhs: tot.value, lhs_2r: tot.value_2t, denominator: denom, rhs: Some(rhs), pass: Some(tot.value_2t <= rhs) })
}

/// `gamma` with `sup_theta #{i : |v_i - theta| <= delta} = (1 - gamma) n`,
/// using sample-centred balls of radius `2 delta` (an over-count, so
/// `gamma` is never overstated).
pub fn level_set_gamma(v: &[Complex64], delta: f64) -> f64 {
    let w = vec![1.0; v.len()];
    let (c, _) = max_ball_mass(v, &w, 2.0 * delta);
    1.0 - c / v.len() as f64
}

fn slice_sample(v: &[Complex64], m: usize, rng: &mut ChaCha8Rng) -> Complex64 {
    rand::seq::index::sample(rng, v.len(), m).iter().map(|i| v[i]).sum()
}

#[derive(Clone, Debug, Serialize)]
pub struct SliceCheck {
    pub gamma: f64,
    pub estimate: ConcentrationEstimate,
    pub bound: f64,
    pub pass: bool,
}

/// Slice anticoncentration for `sum xi_i v_i` with `xi` uniform among
/// 0/1 vectors with `m` ones.
pub fn slice_mc(v: &[Complex64], m: usize, delta: f64, trials: usize, seed: u64) -> Result<SliceCheck> {
    let n = v.len();
    if m < 1 || 2 * m > n {
        return invalid(format!("need 1 <= m <= n/2, got m = {m}, n = {n}"));
    }
    let gamma = level_set_gamma(v, delta);
    if gamma <= 0.0 {
        return Err(Error::PreconditionViolated("v is fully concentrated (gamma = 0)".into()));
    }
    let xs: Vec<Complex64> =
        (0..trials as u64).map(|i| slice_sample(v, m, &mut stream(seed, domain::ANTICONC, i))).collect();
    let estimate = levy_from_samples(&xs, delta)?;
    let gm = gamma * m as f64;
    let c = constants::SLICE_C_FIT;
    let bound = c * (gm.powf(-0.5) + (-gamma * gamma * m as f64 / c).exp());
    Ok(SliceCheck { gamma, pass: estimate.value_2t <= bound, estimate, bound })
}

/// Exact law of `sum xi_i v_i` by enumerating all `m`-subsets, as atoms
/// with probabilities. Limited to `n <= 24`.
pub fn slice_law(v: &[Complex64], m: usize) -> Result<(Vec<Complex64>, Vec<f64>)> {
    let n = v.len();
    if n > 24 || m > n {
        return invalid("exact slice law needs n <= 24 and m <= n");
    }
    let mut pts = Vec::new();
    for mask in 0u32..(1u32 << n) {
        if mask.count_ones() as usize == m {
            pts.push((0..n).filter(|&i| mask >> i & 1 == 1).map(|i| v[i]).sum());
        }
    }
    let p = 1.0 / pts.len() as f64;
    let w = vec![p; pts.len()];
    Ok((pts, w))
}

#[derive(Clone, Debug, Serialize)]
pub struct SliceOracle {
    pub centre: Complex64,
    pub exact: f64,
    pub frequency: f64,
    pub z_score: f64,
    pub agrees: bool,
}

/// Monte Carlo probability of the exact law's heaviest `delta`-ball, against
/// its exact mass.
pub fn slice_oracle_agreement(v: &[Complex64], m: usize, delta: f64, trials: usize, seed: u64) -> Result<SliceOracle> {
    let (pts, w) = slice_law(v, m)?;
    let (exact, centre) = max_ball_mass(&pts, &w, delta);
    let hits = (0..trials as u64)
        .filter(|&i| (slice_sample(v, m, &mut stream(seed, domain::ANTICONC, i)) - centre).norm() <= delta)
        .count();
    let frequency = hits as f64 / trials as f64;
    let sd = (exact * (1.0 - exact) / trials as f64).sqrt();
    let z_score = if sd > 0.0 { (frequency - exact).abs() / sd } else if frequency == exact { 0.0 } else { f64::INFINITY };
    Ok(SliceOracle { centre, exact, frequency, z_score, agrees: z_score <= 3.0 })
}

/// Which smallness threshold the projection probe uses.
#[derive(Clone, Copy, Debug, Serialize)]
pub enum Threshold {
    /// `eps_r` with the given `K`.
    Formula { k: f64 },
    Value(f64),
    /// The trigger singular value itself, so the trigger holds.
    Calibrated,
}

#[derive(Clone, Debug, Serialize)]
pub enum ProjectionStatus {
    NotApplicable { sigma: f64, threshold: f64 },
    Applicable { column_frequency: f64, row_frequency: f64, bound: f64, pass: bool },
}

#[derive(Clone, Debug, Serialize)]
pub struct ProjectionAnticonc {
    pub t: usize,
    pub r: usize,
    pub threshold: f64,
    pub column_sum: usize,
    pub row_sum: usize,
    pub trials: usize,
    pub status: ProjectionStatus,
}

/// Redraws the part of `x` on `mask` uniformly with the same number of ones.
fn resample_fixed_sum(x: &mut [f64], mask: &[bool], ones: usize, rng: &mut ChaCha8Rng) {
    let mut slots: Vec<usize> = (0..x.len()).filter(|&i| mask[i]).collect();
    slots.shuffle(rng);
    for &i in &slots {
        x[i] = 0.0;
    }
    for &i in slots.iter().take(ones) {
        x[i] = 1.0;
    }
}

/// Projection anticoncentration at reveal step `t` of `process` on `b`:
/// the incoming column of `B*_t` against the bottom `r` left singular
/// vectors of `B_{t-1} - zI`, and the conjugated incoming row of
/// `B_t - zI` against the bottom `r` right singular vectors of
/// `B*_t - zI`. Entries indexed by `T1` are resampled with their sum
/// fixed (or set to `force_sum`); the rest stay as revealed.
#[allow(clippy::too_many_arguments)]
pub fn projection_anticonc(
    b: &BinaryMatrix,
    process: &Process,
    t: usize,
    z: Complex64,
    r: usize,
    threshold: Threshold,
    force_sum: Option<usize>,
    eps: f64,
    trials: usize,
    seed: u64,
) -> Result<ProjectionAnticonc> {
    let n = process.n;
    if t <= process.m || t > n || r == 0 || r > t - 1 {
        return invalid(format!("need m < t <= n and 1 <= r < t, got t = {t}, r = {r}"));
    }
    let perm = b.permuted(&process.order);
    linalg::check_cap(t, t)?;
    let w = perm.leading(t).shifted_dense(z);
    let k = t - 1;
    let prev = CMat::from_fn(k, k, |i, j| w[(i, j)]);
    let fp = linalg::full_svd(prev.as_ref())?;
    let idx = k - r / 2;
    let sigma = if idx >= 1 { fp.s[idx - 1] } else { f64::INFINITY };
    let thr = match threshold {
        Threshold::Formula { k: kk } => ln_epsilon_r(n, r, kk).exp(),
        Threshold::Value(v) => v,
        Threshold::Calibrated => sigma,
    };
    let mask: Vec<bool> = (0..t).map(|p| p < k && process.order[p] < process.t1_end).collect();
    let col0: Vec<f64> = (0..t).map(|i| if i < k { w[(i, k)].re } else { 0.0 }).collect();
    let row0: Vec<f64> = (0..t).map(|j| if j < k { w[(k, j)].re } else { 0.0 }).collect();
    let on = |x: &[f64]| (0..t).filter(|&i| mask[i] && x[i] != 0.0).count();
    let (cs, rs) = (force_sum.unwrap_or(on(&col0)), force_sum.unwrap_or(on(&row0)));
    let slots = mask.iter().filter(|&&m| m).count();
    if cs > slots || rs > slots {
        return invalid("forced sum exceeds the number of T1 slots");
    }
    let mk = |status| ProjectionAnticonc { t, r, threshold: thr, column_sum: cs, row_sum: rs, trials, status };
    if !(sigma <= thr) {
        return Ok(mk(ProjectionStatus::NotApplicable { sigma, threshold: thr }));
    }
    // bottom r left singular vectors of B_{t-1} - zI
    let ubot = CMat::from_fn(k, r, |i, j| fp.u[(i, k - r + j)]);
    let star = CMat::from_fn(k, t, |i, j| w[(i, j)]);
    let fs = linalg::full_svd(star.as_ref())?;
    let vbot = CMat::from_fn(t, r.min(t), |i, j| fs.v[(i, t - r.min(t) + j)]);
    let diag = w[(k, k)];
    let proj = |basis: &CMat, x: &[Complex64]| -> f64 {
        (0..basis.ncols())
            .map(|j| {
                let c: Complex64 = (0..x.len()).map(|i| basis[(i, j)].conj() * x[i]).sum();
                c.norm_sqr()
            })
            .sum::<f64>()
            .sqrt()
    };
    let (mut col_hits, mut row_hits) = (0usize, 0usize);
    for i in 0..trials as u64 {
        let mut rng = stream(seed, domain::ANTICONC, i);
        let mut c = col0.clone();
        resample_fixed_sum(&mut c, &mask, cs, &mut rng);
        let cv: Vec<Complex64> = c[..k].iter().map(|&v| Complex64::new(v, 0.0)).collect();
        if proj(&ubot, &cv) < thr {
            col_hits += 1;
        }
        let mut x = row0.clone();
        resample_fixed_sum(&mut x, &mask, rs, &mut rng);
        let mut xv: Vec<Complex64> = x.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        xv[k] = diag.conj();
        if proj(&vbot, &xv) < thr {
            row_hits += 1;
        }
    }
    let tf = trials.max(1) as f64;
    let (cf, rf) = (col_hits as f64 / tf, row_hits as f64 / tf);
    let bound = constants::PROJ_C_FIT * (1.0 / eps).ln().powf(-0.25);
    Ok(mk(ProjectionStatus::Applicable { column_frequency: cf, row_frequency: rf, bound, pass: cf <= bound && rf <= bound }))
}

/// A sampler for `v * Ber(p)`.
pub fn scaled_bernoulli(v: Complex64, p: f64) -> impl Fn(&mut ChaCha8Rng) -> Complex64 + Sync {
    move |rng: &mut ChaCha8Rng| if rng.gen::<f64>() < p { v } else { Complex64::new(0.0, 0.0) }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trivial_levy_values() {
        let zero = |_: &mut ChaCha8Rng| Complex64::new(0.0, 0.0);
        let e = levy_estimate(&zero, 0.3, 1000, 1).unwrap();
        assert_eq!(e.value, 1.0);
        assert!(e.half_width > 0.0);
        let ber = scaled_bernoulli(Complex64::new(1.0, 0.0), 0.5);
        let e = levy_estimate(&ber, 0.1, 4000, 2).unwrap();
        assert!((e.value - 0.5).abs() < 4.0 * e.half_width, "{e:?}");
        assert!(levy_estimate(&ber, 0.1, 999, 2).is_err());
    }

    #[test]
    fn fully_concentrated_slice_is_rejected() {
        let v = vec![Complex64::new(1.0, 0.0); 10];
        assert!(matches!(slice_mc(&v, 3, 0.1, 100, 0), Err(Error::PreconditionViolated(_))));
    }

    #[test]
    fn constant_summands_skip() {
        let one = |_: &mut ChaCha8Rng| Complex64::new(1.0, 0.0);
        let s: Vec<Sampler<'_>> = vec![&one, &one];
        let c = lkr_check(&s, 0.1, 1000, 0).unwrap();
        assert!(c.pass.is_none());
        assert_eq!(c.lhs, 1.0);
    }
}
