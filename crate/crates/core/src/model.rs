//! Random matrix models and the degree statistics that relate them.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::matrix::{BinaryMatrix, DegreeSequence};
use crate::rng::{domain, stream};

/// Parameters of the iid model `A` and the boosted model `B`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub n: usize,
    pub d: f64,
    pub delta: u32,
    pub ell: usize,
    pub tau_boost: f64,
    pub seed: u64,
}

impl ModelParams {
    /// Standard parameters: `ell = floor((ln n)^2)`, boost `sqrt(ln n)/n`.
    pub fn new(n: usize, d: f64, delta: u32, seed: u64) -> Self {
        let ln = (n.max(1) as f64).ln();
        Self {
            n,
            d,
            delta,
            ell: (ln * ln).floor() as usize,
            tau_boost: ln.sqrt() / n.max(1) as f64,
            seed,
        }
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        Self { seed, ..self.clone() }
    }

    pub fn eps(&self) -> f64 {
        poisson_tail_eps(self.d, self.delta)
    }

    /// `floor(eps^3 n)`, the number of extracted indices.
    pub fn extracted(&self) -> usize {
        let e = self.eps();
        (e * e * e * self.n as f64).floor() as usize
    }

    /// `m = n - ell - floor(eps^3 n)`.
    pub fn m(&self) -> usize {
        self.n.saturating_sub(self.ell + self.extracted())
    }

    /// Checks the invariants needed by the revelation process.
    pub fn validate_process(&self) -> Result<()> {
        let e = self.eps();
        if !(e > 0.0 && e < 1.0) {
            return invalid(format!("eps = {e} not in (0,1)"));
        }
        if self.ell < 1 || self.ell >= self.n {
            return invalid(format!("ell = {} must be in [1, n)", self.ell));
        }
        if self.ell + self.extracted() >= self.n {
            return invalid("m = n - ell - floor(eps^3 n) must be positive");
        }
        Ok(())
    }

    fn check_density(&self) -> Result<()> {
        if self.n == 0 {
            return invalid("n must be at least 1");
        }
        if !(self.d > 0.0) || self.d > self.n as f64 {
            return invalid(format!("need 0 < d <= n, got d = {}", self.d));
        }
        Ok(())
    }
}

/// Appends to `out` the positions in `[lo, hi)` of a Bernoulli(p) sequence,
/// by geometric skipping.
fn bernoulli_run(rng: &mut ChaCha8Rng, p: f64, lo: usize, hi: usize, out: &mut Vec<usize>) {
    if p <= 0.0 || lo >= hi {
        return;
    }
    if p >= 1.0 {
        out.extend(lo..hi);
        return;
    }
    let log_q = (-p).ln_1p();
    let mut pos = lo as f64;
    loop {
        let u: f64 = 1.0 - rng.gen::<f64>();
        pos += (u.ln() / log_q).floor();
        if pos >= hi as f64 {
            break;
        }
        out.push(pos as usize);
        pos += 1.0;
    }
}

/// Iid Bernoulli(d/n) matrix. Row `i` is drawn from its own stream.
pub fn sample_iid(params: &ModelParams) -> Result<BinaryMatrix> {
    params.check_density()?;
    let n = params.n;
    let p = params.d / n as f64;
    let rows = (0..n)
        .map(|i| {
            let mut rng = stream(params.seed, domain::SAMPLE_ROW, i as u64);
            let mut r = Vec::new();
            bernoulli_run(&mut rng, p, 0, n, &mut r);
            r
        })
        .collect();
    Ok(BinaryMatrix::from_rows(n, rows))
}

/// The boosted model: entries with both indices in the first `n - ell`
/// positions are Bernoulli(d/n), the rest Bernoulli(tau_boost).
pub fn sample_modified(params: &ModelParams) -> Result<BinaryMatrix> {
    params.check_density()?;
    let n = params.n;
    if params.ell >= n {
        return invalid(format!("ell = {} must be below n = {n}", params.ell));
    }
    if !(0.0..=1.0).contains(&params.tau_boost) {
        return invalid("tau_boost must be a probability");
    }
    let core = n - params.ell;
    let p = params.d / n as f64;
    let rows = (0..n)
        .map(|i| {
            let mut rng = stream(params.seed, domain::SAMPLE_ROW, i as u64);
            let mut r = Vec::new();
            if i < core {
                bernoulli_run(&mut rng, p, 0, core, &mut r);
                bernoulli_run(&mut rng, params.tau_boost, core, n, &mut r);
            } else {
                bernoulli_run(&mut rng, params.tau_boost, 0, n, &mut r);
            }
            r
        })
        .collect();
    Ok(BinaryMatrix::from_rows(n, rows))
}

/// `ln P(Pois(d) = k)`.
pub fn ln_poisson_pmf(d: f64, k: u64) -> f64 {
    let mut lf = 0.0;
    for j in 2..=k {
        lf += (j as f64).ln();
    }
    k as f64 * d.ln() - d - lf
}

/// `P(Pois(d) >= delta)`. The upper tail is summed directly when it is the
/// small side, which keeps full relative precision.
pub fn poisson_tail_eps(d: f64, delta: u32) -> f64 {
    if delta == 0 {
        return 1.0;
    }
    if (delta as f64) > d {
        let mut p = ln_poisson_pmf(d, delta as u64).exp();
        let mut sum = 0.0;
        let mut k = delta as f64;
        while p > 0.0 && p > sum * 1e-18 {
            sum += p;
            k += 1.0;
            p *= d / k;
        }
        sum
    } else {
        let mut p = (-d).exp();
        let mut sum = 0.0;
        for k in 0..delta {
            sum += p;
            p *= d / (k + 1) as f64;
        }
        1.0 - sum
    }
}

/// Joint law of (out, in) degrees of the extracted matrix `B_m`, in the
/// binomial thinning form.
#[derive(Clone, Debug)]
pub struct DegreeLaw {
    pub d: f64,
    pub delta: u32,
    pub eps: f64,
    pub gamma: f64,
    pub a_max: usize,
    u: Vec<f64>,
    h: Vec<f64>,
}

impl DegreeLaw {
    pub fn new(d: f64, delta: u32) -> Result<Self> {
        if !(d > 0.0) {
            return invalid("d must be positive");
        }
        let eps = poisson_tail_eps(d, delta);
        let a_max = delta as usize + 12 * d.ceil() as usize;
        let tail = poisson_tail_eps(d, a_max as u32 + 1);
        if tail >= 1e-12 {
            return Err(Error::ToleranceNotMet(format!(
                "Poisson tail beyond a_max = {a_max} is {tail:e}"
            )));
        }
        let gamma = if delta == 0 { eps * eps } else { eps * eps * poisson_tail_eps(d, delta - 1) };
        let pmf: Vec<f64> = (0..=a_max).map(|a| ln_poisson_pmf(d, a as u64).exp()).collect();
        let mut u = vec![0.0; a_max + 1];
        let mut h = vec![0.0; a_max + 1];
        for a in 0..=a_max {
            // binomial(a, gamma-thinned) law of the retained count j
            let mut c = 1.0f64;
            for j in 0..=a {
                if j > 0 {
                    c *= (a - j + 1) as f64 / j as f64;
                }
                let t = c * gamma.powi((a - j) as i32) * (1.0 - gamma).powi(j as i32) * pmf[a];
                u[j] += t;
                if a >= delta as usize {
                    h[j] += t;
                }
            }
        }
        Ok(Self { d, delta, eps, gamma, a_max, u, h })
    }

    /// `rho_{j,k}`. Since `1[min(a,a') < delta] = 1 - 1[a >= delta] 1[a' >= delta]`
    /// the double series factors into two single sums.
    pub fn rho(&self, j: usize, k: usize) -> f64 {
        if j > self.a_max || k > self.a_max {
            return 0.0;
        }
        let e3 = self.eps.powi(3);
        (self.u[j] * self.u[k] - self.eps * self.h[j] * self.h[k]) / (1.0 - e3)
    }

    pub fn total_mass(&self) -> f64 {
        let mut s = 0.0;
        for j in 0..=self.a_max {
            for k in 0..=self.a_max {
                s += self.rho(j, k);
            }
        }
        s
    }
}

pub fn rho_degree_law(j: usize, k: usize, params: &ModelParams) -> Result<f64> {
    Ok(DegreeLaw::new(params.d, params.delta)?.rho(j, k))
}

/// `S_l` profile and the log likelihood ratio between the uniform-row
/// boosted model and the iid model.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CouplingStats {
    pub profile: Vec<usize>,
    pub log_ratio: f64,
}

pub fn coupling_stats(m: &BinaryMatrix, d: f64, tau: f64) -> Result<CouplingStats> {
    if !m.is_square() {
        return invalid("coupling statistics need a square matrix");
    }
    let n = m.rows();
    let mut profile = vec![0usize; 2 * n];
    for k in 0..n {
        let l = m.row_sum(k) + m.col_sum(k) - usize::from(m.get(k, k));
        profile[l] += 1;
    }
    while profile.len() > 1 && *profile.last().unwrap() == 0 {
        profile.pop();
    }
    let p = d / n as f64;
    let a = (tau / p).ln();
    let b = (-tau).ln_1p() - (-p).ln_1p();
    let terms: Vec<f64> = profile
        .iter()
        .enumerate()
        .filter(|(_, &c)| c > 0)
        .map(|(l, &c)| (c as f64).ln() + l as f64 * a + (2 * n - 1 - l) as f64 * b)
        .collect();
    let log_ratio = log_sum_exp(&terms) - (n as f64).ln();
    Ok(CouplingStats { profile, log_ratio })
}

pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let mx = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if mx == f64::NEG_INFINITY {
        return mx;
    }
    mx + xs.iter().map(|x| (x - mx).exp()).sum::<f64>().ln()
}

/// A bipartite multigraph from stub matching: `edges[(row, col)]` holds the
/// multiplicity. Columns carry the out-stubs, rows the in-stubs.
#[derive(Clone, Debug, PartialEq)]
pub struct Multigraph {
    pub rows: usize,
    pub cols: usize,
    pub edges: Vec<((usize, usize), usize)>,
}

impl Multigraph {
    pub fn is_simple(&self) -> bool {
        self.edges.iter().all(|&(_, c)| c == 1)
    }

    /// The underlying 0-1 matrix (multiplicities dropped).
    pub fn support(&self) -> BinaryMatrix {
        let e: Vec<_> = self.edges.iter().map(|&(p, _)| p).collect();
        BinaryMatrix::from_sorted_unchecked(self.rows, self.cols, &e)
    }
}

/// Out- and in-degrees iid Pois(d), conditioned on equal totals by
/// rejection.
pub fn poisson_degrees(n: usize, d: f64, seed: u64) -> Result<DegreeSequence> {
    let pois = rand_distr::Poisson::new(d).map_err(|e| Error::InvalidParameter(e.to_string()))?;
    for attempt in 0..1_000_000u64 {
        let mut rng = stream(seed, domain::CONFIG_MODEL, attempt + 1);
        let mut draw = || -> Vec<usize> { (0..n).map(|_| rng.sample(pois) as usize).collect() };
        let out = draw();
        let inn = draw();
        if out.iter().sum::<usize>() == inn.iter().sum::<usize>() {
            return Ok(DegreeSequence::new(out, inn));
        }
    }
    Err(Error::ResourceLimit("no balanced Poisson degree draw".into()))
}

pub fn sample_configuration(degs: &DegreeSequence, seed: u64) -> Result<(Multigraph, bool)> {
    if !degs.is_balanced() {
        return invalid("out and in stub totals differ");
    }
    let mut rng = stream(seed, domain::CONFIG_MODEL, 0);
    let left: Vec<usize> = degs
        .out
        .iter()
        .enumerate()
        .flat_map(|(j, &k)| std::iter::repeat(j).take(k))
        .collect();
    let mut right: Vec<usize> = degs
        .inn
        .iter()
        .enumerate()
        .flat_map(|(i, &k)| std::iter::repeat(i).take(k))
        .collect();
    right.shuffle(&mut rng);
    let mut pairs: Vec<(usize, usize)> = right.into_iter().zip(left).collect();
    pairs.sort_unstable();
    let mut edges: Vec<((usize, usize), usize)> = Vec::new();
    for p in pairs {
        match edges.last_mut() {
            Some((q, c)) if *q == p => *c += 1,
            _ => edges.push((p, 1)),
        }
    }
    let g = Multigraph { rows: degs.inn.len(), cols: degs.out.len(), edges };
    let simple = g.is_simple();
    Ok((g, simple))
}

/// Which condition of `(d, mu, C)`-regularity failed.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum RegularityWitness {
    LengthMismatch,
    Size { ratio: f64 },
    DenseSet { size: usize },
    EdgeCount { out_sum: usize, in_sum: usize },
    WeightedSum { value: f64, target: f64 },
}

impl RegularityWitness {
    /// Index of the failed bullet (0 for a shape problem).
    pub fn bullet(&self) -> u8 {
        match self {
            Self::LengthMismatch => 0,
            Self::Size { .. } => 1,
            Self::DenseSet { .. } => 2,
            Self::EdgeCount { .. } => 3,
            Self::WeightedSum { .. } => 4,
        }
    }
}

pub fn degseq_regular(
    degs: &DegreeSequence,
    d: f64,
    mu: f64,
    c: f64,
    n: usize,
) -> (bool, Option<RegularityWitness>) {
    let m = degs.out.len();
    if degs.inn.len() != m {
        return (false, Some(RegularityWitness::LengthMismatch));
    }
    let ratio = m as f64 / n as f64;
    if !(1.0 - mu..=1.0 + mu).contains(&ratio) {
        return (false, Some(RegularityWitness::Size { ratio }));
    }
    let mut tot: Vec<usize> = degs.out.iter().zip(&degs.inn).map(|(a, b)| a + b).collect();
    tot.sort_unstable_by(|a, b| b.cmp(a));
    let mut prefix = 0usize;
    for (k0, t) in tot.iter().enumerate() {
        prefix += t;
        let k = (k0 + 1) as f64;
        if prefix as f64 > c * (d + (m as f64 / k).ln()) * k {
            return (false, Some(RegularityWitness::DenseSet { size: k0 + 1 }));
        }
    }
    let out_sum: usize = degs.out.iter().sum();
    let in_sum: usize = degs.inn.iter().sum();
    let dm = d * m as f64;
    if (out_sum as f64 - dm).abs() > mu * dm || (in_sum as f64 - dm).abs() > mu * dm {
        return (false, Some(RegularityWitness::EdgeCount { out_sum, in_sum }));
    }
    let value: f64 = degs
        .out
        .iter()
        .zip(&degs.inn)
        .map(|(&a, &b)| d.powf(-(a as f64)) * b as f64)
        .sum();
    let target = std::f64::consts::E * d * (-d).exp() * m as f64;
    if (value - target).abs() > mu * target {
        return (false, Some(RegularityWitness::WeightedSum { value, target }));
    }
    (true, None)
}
