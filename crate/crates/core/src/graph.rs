//! Digraph structure: unique neighbours, expansion censuses, local density,
//! strongly connected components and the trivial-image count.
//!
//! Matrix `M` is read as a digraph with an edge `j -> i` whenever
//! `M[i][j] = 1`, so column `j` lists the out-neighbours of `j` and row `i`
//! the in-neighbours of `i`.

use std::collections::{HashMap, VecDeque};

use rand::seq::index::sample as sample_indices;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{invalid, Result};
use crate::matrix::BinaryMatrix;
use crate::rng::{domain, stream};

#[derive(Clone, Debug)]
pub struct Digraph {
    out: Vec<Vec<usize>>,
    inn: Vec<Vec<usize>>,
}

impl Digraph {
    /// Vertex set is `max(rows, cols)`; a short side gets empty vertices.
    pub fn from_matrix(m: &BinaryMatrix) -> Self {
        let n = m.rows().max(m.cols());
        let mut out = vec![Vec::new(); n];
        let mut inn = vec![Vec::new(); n];
        for j in 0..m.cols() {
            out[j] = m.col(j).to_vec();
        }
        for i in 0..m.rows() {
            inn[i] = m.row(i).to_vec();
        }
        Self { out, inn }
    }

    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Self {
        let mut out = vec![Vec::new(); n];
        let mut inn = vec![Vec::new(); n];
        for &(u, v) in edges {
            out[u].push(v);
            inn[v].push(u);
        }
        for l in out.iter_mut().chain(inn.iter_mut()) {
            l.sort_unstable();
            l.dedup();
        }
        Self { out, inn }
    }

    pub fn len(&self) -> usize {
        self.out.len()
    }

    pub fn is_empty(&self) -> bool {
        self.out.is_empty()
    }

    pub fn out_neighbors(&self, v: usize) -> &[usize] {
        &self.out[v]
    }

    pub fn in_neighbors(&self, v: usize) -> &[usize] {
        &self.inn[v]
    }

    pub fn has_loop(&self, v: usize) -> bool {
        self.out[v].binary_search(&v).is_ok()
    }

    fn bfs(&self, start: usize, forward: bool) -> Vec<usize> {
        let adj = if forward { &self.out } else { &self.inn };
        let mut seen = vec![false; self.len()];
        let mut q = VecDeque::from([start]);
        seen[start] = true;
        let mut order = Vec::new();
        while let Some(u) = q.pop_front() {
            order.push(u);
            for &w in &adj[u] {
                if !seen[w] {
                    seen[w] = true;
                    q.push_back(w);
                }
            }
        }
        order.sort_unstable();
        order
    }

    /// `X_G(v)`: vertices reachable from `v`, including `v`.
    pub fn forward_reach(&self, v: usize) -> Vec<usize> {
        self.bfs(v, true)
    }

    /// `Y_G(v)`: vertices that reach `v`, including `v`.
    pub fn backward_reach(&self, v: usize) -> Vec<usize> {
        self.bfs(v, false)
    }
}

/// Caches reachability sets per vertex.
#[derive(Debug)]
pub struct Reachability<'a> {
    g: &'a Digraph,
    fwd: HashMap<usize, Vec<usize>>,
    bwd: HashMap<usize, Vec<usize>>,
}

impl<'a> Reachability<'a> {
    pub fn new(g: &'a Digraph) -> Self {
        Self { g, fwd: HashMap::new(), bwd: HashMap::new() }
    }

    pub fn forward(&mut self, v: usize) -> &[usize] {
        let g = self.g;
        self.fwd.entry(v).or_insert_with(|| g.forward_reach(v))
    }

    pub fn backward(&mut self, v: usize) -> &[usize] {
        let g = self.g;
        self.bwd.entry(v).or_insert_with(|| g.backward_reach(v))
    }
}

/// Reusable per-row hit counter.
struct HitCounter {
    count: Vec<u32>,
    touched: Vec<usize>,
}

impl HitCounter {
    fn new(rows: usize) -> Self {
        Self { count: vec![0; rows], touched: Vec::new() }
    }

    /// `|U(S)|` for columns `s`, given membership flags for rows in `S`.
    fn unique_count(&mut self, m: &BinaryMatrix, s: &[usize], in_s: &[bool]) -> usize {
        for &j in s {
            for &i in m.col(j) {
                if self.count[i] == 0 {
                    self.touched.push(i);
                }
                self.count[i] += 1;
            }
        }
        let mut u = 0;
        for &i in &self.touched {
            if self.count[i] == 1 && !in_s.get(i).copied().unwrap_or(false) {
                u += 1;
            }
        }
        for &j in s {
            if j < m.rows() && self.count[j] == 0 {
                u += 1;
            }
        }
        for &i in &self.touched {
            self.count[i] = 0;
        }
        self.touched.clear();
        u
    }
}

/// `U(S)`: rows outside `S` hit exactly once by the columns of `S`, plus rows
/// of `S` hit by none of them.
pub fn unique_neighbors(m: &BinaryMatrix, s: &[usize]) -> Result<Vec<usize>> {
    if let Some(&j) = s.iter().find(|&&j| j >= m.cols()) {
        return invalid(format!("column {j} out of range"));
    }
    let mut in_s = vec![false; m.rows().max(m.cols())];
    for &j in s {
        in_s[j] = true;
    }
    let mut count = vec![0u32; m.rows()];
    for &j in s {
        for &i in m.col(j) {
            count[i] += 1;
        }
    }
    Ok((0..m.rows())
        .filter(|&i| if in_s[i] { count[i] == 0 } else { count[i] == 1 })
        .collect())
}

/// `alpha(x) = (ln(n/x))^{-2}`.
pub fn alpha(n: usize, x: usize) -> f64 {
    (n as f64 / x as f64).ln().powi(-2)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum CensusMode {
    /// Every set of each size up to `k_exact` (at most 3).
    Exact { k_exact: usize },
    /// `budget` random sets per size and stratum.
    Sampled { budget: usize },
}

#[derive(Clone, Debug, Serialize)]
pub struct CensusConfig {
    /// The `n` in `alpha(x) = (ln(n/x))^{-2}`.
    pub n: usize,
    pub r_min: usize,
    pub k_max: usize,
    pub mode: CensusMode,
    /// Also draw sets under the degree-sum filter.
    pub filtered_stratum: bool,
    /// Check sets containing this column for `U(S) = 0`.
    pub distinguished: Option<usize>,
    /// Largest size for distinguished sets.
    pub distinguished_k_max: usize,
    pub seed: u64,
}

impl CensusConfig {
    pub fn sampled(n: usize, r_min: usize, k_max: usize, budget: usize, seed: u64) -> Self {
        Self {
            n,
            r_min,
            k_max,
            mode: CensusMode::Sampled { budget },
            filtered_stratum: true,
            distinguished: None,
            distinguished_k_max: 0,
            seed,
        }
    }

    pub fn exact(n: usize, r_min: usize, k_max: usize) -> Self {
        Self {
            n,
            r_min,
            k_max,
            mode: CensusMode::Exact { k_exact: k_max.min(3) },
            filtered_stratum: false,
            distinguished: None,
            distinguished_k_max: 0,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SizeCensus {
    pub size: usize,
    pub alpha: f64,
    pub draws: usize,
    pub violations: usize,
    pub filtered_draws: usize,
    pub filtered_violations: usize,
    pub min_unique: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WorstSet {
    pub set: Vec<usize>,
    pub unique: usize,
    pub ratio: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExpansionReport {
    pub sizes: Vec<SizeCensus>,
    pub worst: Option<WorstSet>,
    pub distinguished_checked: usize,
    pub distinguished_violations: usize,
    pub distinguished_witness: Option<Vec<usize>>,
    /// Set when some stratum could not be filled.
    pub partial: bool,
}

impl ExpansionReport {
    pub fn total_violations(&self) -> usize {
        self.sizes.iter().map(|s| s.violations + s.filtered_violations).sum()
    }

    /// The `U(r)` event on the checked sets.
    pub fn holds(&self) -> bool {
        self.total_violations() == 0
    }
}

struct CensusState<'a> {
    m: &'a BinaryMatrix,
    counter: HitCounter,
    in_s: Vec<bool>,
    worst: Option<WorstSet>,
}

impl<'a> CensusState<'a> {
    fn new(m: &'a BinaryMatrix) -> Self {
        Self {
            m,
            counter: HitCounter::new(m.rows()),
            in_s: vec![false; m.rows().max(m.cols())],
            worst: None,
        }
    }

    fn unique(&mut self, s: &[usize]) -> usize {
        for &j in s {
            self.in_s[j] = true;
        }
        let u = self.counter.unique_count(self.m, s, &self.in_s);
        for &j in s {
            self.in_s[j] = false;
        }
        u
    }

    fn record(&mut self, s: &[usize], u: usize) {
        let ratio = u as f64 / s.len() as f64;
        if self.worst.as_ref().map_or(true, |w| ratio < w.ratio) {
            let mut set = s.to_vec();
            set.sort_unstable();
            self.worst = Some(WorstSet { set, unique: u, ratio });
        }
    }
}

fn for_each_subset(n: usize, k: usize, f: &mut impl FnMut(&[usize])) {
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, f: &mut impl FnMut(&[usize])) {
        if cur.len() == k {
            f(cur);
            return;
        }
        for v in start..n {
            if n - v < k - cur.len() {
                break;
            }
            cur.push(v);
            rec(v + 1, n, k, cur, f);
            cur.pop();
        }
    }
    rec(0, n, k, &mut Vec::with_capacity(k), f);
}

/// Uniform sampler over `k`-subsets whose weight sum lies in `[lo, hi]`.
/// Counts by weight class are combined with a log-space dynamic program.
pub struct FilteredSetSampler {
    classes: Vec<Vec<usize>>,
    values: Vec<usize>,
    k: usize,
    lo: usize,
    hi: usize,
    // table[c][j][s]: log-count of ways to pick j items with sum s from classes c..
    table: Vec<Vec<Vec<f64>>>,
}

fn ln_binom(n: usize, k: usize) -> f64 {
    if k > n {
        return f64::NEG_INFINITY;
    }
    let mut s = 0.0;
    for i in 0..k {
        s += ((n - i) as f64).ln() - ((i + 1) as f64).ln();
    }
    s
}

fn log_add(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let m = a.max(b);
    m + ((a - m).exp() + (b - m).exp()).ln()
}

impl FilteredSetSampler {
    pub fn new(weights: &[usize], k: usize, lo: usize, hi: usize) -> Self {
        let mut by: std::collections::BTreeMap<usize, Vec<usize>> = Default::default();
        for (i, &w) in weights.iter().enumerate() {
            by.entry(w).or_default().push(i);
        }
        let values: Vec<usize> = by.keys().copied().collect();
        let classes: Vec<Vec<usize>> = by.into_values().collect();
        let nc = classes.len();
        let mut table = vec![vec![vec![f64::NEG_INFINITY; hi + 1]; k + 1]; nc + 1];
        for s in lo..=hi {
            table[nc][0][s] = 0.0;
        }
        // table[c][j][s] counts completions given sum s already used
        for c in (0..nc).rev() {
            let v = values[c];
            let size = classes[c].len();
            for j in 0..=k {
                for s in 0..=hi {
                    let mut acc = f64::NEG_INFINITY;
                    for t in 0..=j.min(size) {
                        let ns = s + t * v;
                        if ns > hi {
                            break;
                        }
                        let rest = table[c + 1][j - t][ns];
                        if rest > f64::NEG_INFINITY {
                            acc = log_add(acc, ln_binom(size, t) + rest);
                        }
                    }
                    table[c][j][s] = acc;
                }
            }
        }
        Self { classes, values, k, lo, hi, table }
    }

    /// Log of the number of admissible sets.
    pub fn ln_count(&self) -> f64 {
        self.table[0][self.k][0]
    }

    pub fn sample(&self, rng: &mut ChaCha8Rng) -> Option<Vec<usize>> {
        if self.ln_count() == f64::NEG_INFINITY {
            return None;
        }
        let mut out = Vec::with_capacity(self.k);
        let (mut j, mut s) = (self.k, 0usize);
        for c in 0..self.classes.len() {
            let v = self.values[c];
            let size = self.classes[c].len();
            let total = self.table[c][j][s];
            let mut u = rng.gen::<f64>();
            let mut pick = 0;
            for t in 0..=j.min(size) {
                let ns = s + t * v;
                if ns > self.hi {
                    break;
                }
                let rest = self.table[c + 1][j - t][ns];
                if rest == f64::NEG_INFINITY {
                    continue;
                }
                let p = (ln_binom(size, t) + rest - total).exp();
                pick = t;
                if u < p {
                    break;
                }
                u -= p;
            }
            for idx in sample_indices(rng, size, pick).into_iter() {
                out.push(self.classes[c][idx]);
            }
            j -= pick;
            s += pick * v;
        }
        debug_assert!(j == 0 && s >= self.lo && s <= self.hi);
        Some(out)
    }
}

/// Checks `|U(S)| >= alpha(|S|)|S|` over sets of sizes `r_min..=k_max`.
pub fn expansion_census(m: &BinaryMatrix, cfg: &CensusConfig) -> Result<ExpansionReport> {
    let cols = m.cols();
    if cfg.k_max > cols {
        return invalid(format!("k_max = {} exceeds {cols} columns", cfg.k_max));
    }
    if cfg.r_min == 0 {
        return invalid("r_min must be at least 1");
    }
    let mut st = CensusState::new(m);
    let mut sizes = Vec::new();
    let mut partial = false;
    let mut rng = stream(cfg.seed, domain::CENSUS, 0);
    let degrees: Vec<usize> = (0..cols).map(|j| m.col_sum(j)).collect();
    match cfg.mode {
        CensusMode::Exact { k_exact } => {
            if k_exact > 3 {
                return invalid("exact census is limited to sets of size 3");
            }
            for k in cfg.r_min..=cfg.k_max.min(k_exact) {
                let a = alpha(cfg.n, k);
                let thr = a * k as f64;
                let mut rec = SizeCensus {
                    size: k,
                    alpha: a,
                    draws: 0,
                    violations: 0,
                    filtered_draws: 0,
                    filtered_violations: 0,
                    min_unique: None,
                };
                for_each_subset(cols, k, &mut |s| {
                    let u = st.unique(s);
                    rec.draws += 1;
                    rec.min_unique = Some(rec.min_unique.map_or(u, |x: usize| x.min(u)));
                    if (u as f64) < thr {
                        rec.violations += 1;
                    }
                    st.record(s, u);
                });
                sizes.push(rec);
            }
            partial |= cfg.k_max > k_exact;
        }
        CensusMode::Sampled { budget } => {
            for k in cfg.r_min..=cfg.k_max {
                let a = alpha(cfg.n, k);
                let thr = a * k as f64;
                let mut rec = SizeCensus {
                    size: k,
                    alpha: a,
                    draws: 0,
                    violations: 0,
                    filtered_draws: 0,
                    filtered_violations: 0,
                    min_unique: None,
                };
                for _ in 0..budget {
                    let s = sample_indices(&mut rng, cols, k).into_vec();
                    let u = st.unique(&s);
                    rec.draws += 1;
                    rec.min_unique = Some(rec.min_unique.map_or(u, |x: usize| x.min(u)));
                    if (u as f64) < thr {
                        rec.violations += 1;
                    }
                    st.record(&s, u);
                }
                if cfg.filtered_stratum {
                    let l = (cols as f64 / k as f64).ln();
                    let w = if l > 0.0 { k as f64 / l.sqrt() } else { f64::INFINITY };
                    let lo = (k as f64 - w).ceil().max(0.0) as usize;
                    let hi = (k as f64 + w).floor().min((k * degrees.iter().max().copied().unwrap_or(0)) as f64) as usize;
                    let sampler = FilteredSetSampler::new(&degrees, k, lo, hi.max(lo));
                    for _ in 0..budget {
                        match sampler.sample(&mut rng) {
                            Some(s) => {
                                let u = st.unique(&s);
                                rec.filtered_draws += 1;
                                rec.min_unique = Some(rec.min_unique.map_or(u, |x: usize| x.min(u)));
                                if (u as f64) < thr {
                                    rec.filtered_violations += 1;
                                }
                                st.record(&s, u);
                            }
                            None => {
                                partial = true;
                                break;
                            }
                        }
                    }
                }
                sizes.push(rec);
            }
        }
    }
    let mut checked = 0;
    let mut dviol = 0;
    let mut dwit = None;
    if let Some(t) = cfg.distinguished {
        if t >= cols {
            return invalid("distinguished column out of range");
        }
        let others: Vec<usize> = (0..cols).filter(|&j| j != t).collect();
        let mut check = |s: &[usize], st: &mut CensusState| {
            let u = st.unique(s);
            checked += 1;
            if u == 0 {
                dviol += 1;
                if dwit.is_none() {
                    let mut v = s.to_vec();
                    v.sort_unstable();
                    dwit = Some(v);
                }
            }
        };
        match cfg.mode {
            CensusMode::Exact { k_exact } => {
                for k in 0..cfg.distinguished_k_max.min(k_exact) {
                    for_each_subset(others.len(), k, &mut |s| {
                        let mut v: Vec<usize> = s.iter().map(|&i| others[i]).collect();
                        v.push(t);
                        check(&v, &mut st);
                    });
                }
            }
            CensusMode::Sampled { budget } => {
                for k in 0..cfg.distinguished_k_max.min(cols) {
                    for _ in 0..budget {
                        let mut v: Vec<usize> =
                            sample_indices(&mut rng, others.len(), k).into_iter().map(|i| others[i]).collect();
                        v.push(t);
                        check(&v, &mut st);
                    }
                }
            }
        }
    }
    Ok(ExpansionReport {
        sizes,
        worst: st.worst,
        distinguished_checked: checked,
        distinguished_violations: dviol,
        distinguished_witness: dwit,
        partial,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum DensityVerdict {
    Pass,
    Fail { witness: Vec<usize>, sum: usize },
    Undecided { explored: usize },
}

/// Decides whether every vertex set of size at most `s_max` spans at most
/// `|S|` ones. A minimal violator is connected in the underlying undirected
/// graph, so only connected sets are grown (each exactly once).
pub fn local_density_check(m: &BinaryMatrix, s_max: usize, budget: usize) -> Result<DensityVerdict> {
    if !m.is_square() {
        return invalid("local density needs a square matrix");
    }
    let n = m.rows();
    if s_max > n {
        return invalid(format!("s_max = {s_max} exceeds n = {n}"));
    }
    let nbrs: Vec<Vec<usize>> = (0..n)
        .map(|v| {
            let mut l: Vec<usize> = m.row(v).iter().chain(m.col(v)).copied().filter(|&w| w != v).collect();
            l.sort_unstable();
            l.dedup();
            l
        })
        .collect();
    let mut explored = 0usize;
    let mut set: Vec<usize> = Vec::with_capacity(s_max);
    // Enumeration of connected sets with smallest vertex `root` (ESU scheme).
    struct Ctx<'a> {
        m: &'a BinaryMatrix,
        nbrs: &'a [Vec<usize>],
        s_max: usize,
        budget: usize,
        explored: &'a mut usize,
        found: Option<(Vec<usize>, usize)>,
        mark: Vec<u32>,
    }
    fn extend(ctx: &mut Ctx, set: &mut Vec<usize>, ext: Vec<usize>, root: usize, sum: usize) -> bool {
        *ctx.explored += 1;
        if sum > set.len() {
            ctx.found = Some((set.clone(), sum));
            return true;
        }
        if *ctx.explored > ctx.budget {
            return true;
        }
        if set.len() == ctx.s_max {
            return false;
        }
        let mut ext = ext;
        while let Some(w) = ext.pop() {
            let mut add = usize::from(ctx.m.get(w, w));
            for &u in set.iter() {
                add += usize::from(ctx.m.get(u, w)) + usize::from(ctx.m.get(w, u));
            }
            // exclusive neighbours of w: not in set, not adjacent to set
            let mut next = ext.clone();
            for &u in set.iter() {
                ctx.mark[u] += 1;
                for &x in &ctx.nbrs[u] {
                    ctx.mark[x] += 1;
                }
            }
            for &x in &ctx.nbrs[w] {
                if x > root && ctx.mark[x] == 0 && !next.contains(&x) {
                    next.push(x);
                }
            }
            for &u in set.iter() {
                ctx.mark[u] -= 1;
                for &x in &ctx.nbrs[u] {
                    ctx.mark[x] -= 1;
                }
            }
            set.push(w);
            let stop = extend(ctx, set, next, root, sum + add);
            set.pop();
            if stop {
                return true;
            }
        }
        false
    }
    let mut ctx = Ctx {
        m,
        nbrs: &nbrs,
        s_max,
        budget,
        explored: &mut explored,
        found: None,
        mark: vec![0; n],
    };
    for root in 0..n {
        if s_max == 0 {
            break;
        }
        set.clear();
        set.push(root);
        let ext: Vec<usize> = nbrs[root].iter().copied().filter(|&x| x > root).collect();
        let sum = usize::from(m.get(root, root));
        if extend(&mut ctx, &mut set, ext, root, sum) {
            break;
        }
    }
    let over = *ctx.explored > budget;
    Ok(match ctx.found {
        Some((mut w, sum)) => {
            w.sort_unstable();
            DensityVerdict::Fail { witness: w, sum }
        }
        None if over => DensityVerdict::Undecided { explored },
        None => DensityVerdict::Pass,
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub enum ComponentKind {
    Singleton { self_loop: bool },
    Cycle,
    Other,
}

#[derive(Clone, Debug, Serialize)]
pub struct SccSummary {
    /// Vertex lists, in reverse topological order of the condensation.
    pub components: Vec<Vec<usize>>,
    pub kinds: Vec<ComponentKind>,
    /// Component index of each vertex.
    pub component_of: Vec<usize>,
    pub giant_size: usize,
    pub cycle_lengths: Vec<usize>,
}

/// Tarjan's algorithm, iterative.
pub fn scc_structure(g: &Digraph) -> SccSummary {
    let n = g.len();
    let mut index = vec![usize::MAX; n];
    let mut low = vec![0usize; n];
    let mut on_stack = vec![false; n];
    let mut stack = Vec::new();
    let mut comps: Vec<Vec<usize>> = Vec::new();
    let mut comp_of = vec![usize::MAX; n];
    let mut next = 0usize;
    let mut call: Vec<(usize, usize)> = Vec::new();
    for s in 0..n {
        if index[s] != usize::MAX {
            continue;
        }
        call.push((s, 0));
        while let Some(&mut (v, ref mut pos)) = call.last_mut() {
            if *pos == 0 {
                index[v] = next;
                low[v] = next;
                next += 1;
                stack.push(v);
                on_stack[v] = true;
            }
            let adj = g.out_neighbors(v);
            if *pos < adj.len() {
                let w = adj[*pos];
                *pos += 1;
                if index[w] == usize::MAX {
                    call.push((w, 0));
                } else if on_stack[w] {
                    low[v] = low[v].min(index[w]);
                }
                continue;
            }
            call.pop();
            if let Some(&(p, _)) = call.last() {
                low[p] = low[p].min(low[v]);
            }
            if low[v] == index[v] {
                let mut c = Vec::new();
                loop {
                    let w = stack.pop().unwrap();
                    on_stack[w] = false;
                    comp_of[w] = comps.len();
                    c.push(w);
                    if w == v {
                        break;
                    }
                }
                c.sort_unstable();
                comps.push(c);
            }
        }
    }
    let mut kinds = Vec::with_capacity(comps.len());
    let mut cycle_lengths = Vec::new();
    for (ci, c) in comps.iter().enumerate() {
        let kind = if c.len() == 1 {
            ComponentKind::Singleton { self_loop: g.has_loop(c[0]) }
        } else {
            let inside = |l: &[usize]| l.iter().filter(|&&w| comp_of[w] == ci).count();
            if c.iter().all(|&v| inside(g.out_neighbors(v)) == 1 && inside(g.in_neighbors(v)) == 1) {
                cycle_lengths.push(c.len());
                ComponentKind::Cycle
            } else {
                ComponentKind::Other
            }
        };
        kinds.push(kind);
    }
    let giant_size = comps.iter().map(Vec::len).max().unwrap_or(0);
    SccSummary { components: comps, kinds, component_of: comp_of, giant_size, cycle_lengths }
}

/// Nonzero root of `1 - x - exp(-(1+eps) x) = 0`.
pub fn theta_root(eps: f64) -> Result<f64> {
    if !(eps > 0.0) {
        return invalid("eps must be positive");
    }
    let f = |x: f64| 1.0 - x - (-(1.0 + eps) * x).exp();
    let (mut lo, mut hi) = (1e-12f64, 1.0f64);
    if f(lo) <= 0.0 {
        // root below the bracket floor; eps is tiny
        return Ok(lo);
    }
    while hi - lo > 1e-15 {
        let mid = 0.5 * (lo + hi);
        if f(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TrivialImage {
    pub count: usize,
    pub vertices: Vec<bool>,
}

/// Vertices whose forward-reachable set holds only loop-free singleton
/// components. Each such vertex is killed by a power of the adjacency
/// matrix, so the count bounds the multiplicity of eigenvalue 0.
pub fn trivial_image_census(g: &Digraph) -> TrivialImage {
    let scc = scc_structure(g);
    let n = g.len();
    let mut bad = vec![false; n];
    let mut q = VecDeque::new();
    for (c, kind) in scc.components.iter().zip(&scc.kinds) {
        if *kind != (ComponentKind::Singleton { self_loop: false }) {
            for &v in c {
                bad[v] = true;
                q.push_back(v);
            }
        }
    }
    while let Some(u) = q.pop_front() {
        for &w in g.in_neighbors(u) {
            if !bad[w] {
                bad[w] = true;
                q.push_back(w);
            }
        }
    }
    let vertices: Vec<bool> = bad.iter().map(|&b| !b).collect();
    TrivialImage { count: vertices.iter().filter(|&&t| t).count(), vertices }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(rows: &[&[u8]]) -> BinaryMatrix {
        BinaryMatrix::from_dense(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn unique_neighbor_examples() {
        let a = m(&[&[1, 0, 0], &[1, 1, 0], &[0, 0, 1]]);
        assert_eq!(unique_neighbors(&a, &[0]).unwrap(), vec![1]);
        let z = BinaryMatrix::zeros(4, 4);
        assert_eq!(unique_neighbors(&z, &[1, 3]).unwrap(), vec![1, 3]);
        assert!(unique_neighbors(&BinaryMatrix::identity(4), &[0, 1]).unwrap().is_empty());
        assert!(unique_neighbors(&z, &[4]).is_err());
    }

    #[test]
    fn census_identity_and_zero() {
        let rep = expansion_census(&BinaryMatrix::identity(5), &CensusConfig::exact(5, 1, 1)).unwrap();
        // U({j}) is empty for the identity: row j is hit once but lies in S
        assert_eq!(rep.sizes[0].violations, 5);
        let rep = expansion_census(&BinaryMatrix::zeros(20, 20), &CensusConfig::exact(20, 1, 3)).unwrap();
        assert!(rep.holds());
    }

    #[test]
    fn density_examples() {
        assert_eq!(local_density_check(&BinaryMatrix::identity(6), 6, 1 << 20).unwrap(), DensityVerdict::Pass);
        let b = m(&[&[1, 1, 0], &[1, 1, 0], &[0, 0, 0]]);
        match local_density_check(&b, 3, 1 << 20).unwrap() {
            DensityVerdict::Fail { witness, sum } => {
                assert_eq!(witness, vec![0, 1]);
                assert_eq!(sum, 4);
            }
            v => panic!("{v:?}"),
        }
    }

    #[test]
    fn scc_examples() {
        let cyc = Digraph::from_edges(5, &[(0, 1), (1, 2), (2, 3), (3, 4), (4, 0)]);
        let s = scc_structure(&cyc);
        assert_eq!(s.components.len(), 1);
        assert_eq!(s.kinds[0], ComponentKind::Cycle);
        let e = scc_structure(&Digraph::from_edges(4, &[]));
        assert_eq!(e.components.len(), 4);
    }

    #[test]
    fn theta_values() {
        let t = theta_root(1.0).unwrap();
        assert!((t - 0.7968).abs() < 1e-4);
        for eps in [0.1, 0.5, 1.0] {
            let t = theta_root(eps).unwrap();
            assert!((1.0 - t - (-(1.0 + eps) * t).exp()).abs() < 1e-12);
        }
        assert!(theta_root(1e-4).unwrap() < theta_root(1.0).unwrap());
        assert!(theta_root(0.0).is_err());
    }

    #[test]
    fn trivial_image_examples() {
        assert_eq!(trivial_image_census(&Digraph::from_edges(4, &[])).count, 4);
        let g = Digraph::from_edges(4, &[(2, 2), (0, 2)]);
        let t = trivial_image_census(&g);
        assert_eq!(t.vertices, vec![false, true, false, true]);
    }

    #[test]
    fn filtered_sampler_respects_window() {
        let w = vec![0, 1, 1, 2, 3, 5, 1, 0, 4, 1];
        let s = FilteredSetSampler::new(&w, 3, 2, 3);
        let mut rng = stream(1, 0, 0);
        for _ in 0..200 {
            let set = s.sample(&mut rng).unwrap();
            let sum: usize = set.iter().map(|&i| w[i]).sum();
            assert!((2..=3).contains(&sum) && set.len() == 3);
        }
        assert!(FilteredSetSampler::new(&w, 3, 100, 100).sample(&mut rng).is_none());
    }
}
