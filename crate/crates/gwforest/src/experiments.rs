//! Monte Carlo campaigns over conditioned trees: Poisson-approximation
//! checks for pattern counts, size-class counts, non-fringe concentration,
//! extremal complete r-ary heights, and the all-trees threshold.
//!
//! Every campaign is bit-reproducible from `(config, seed)`: replicates are
//! seeded by index, run in parallel, and merged in index order, so results do
//! not depend on the worker count.

use std::collections::BTreeMap;
use std::time::Instant;

use rand::rngs::SmallRng;
use rand::SeedableRng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::census::{self, CountMode};
use crate::exact;
use crate::expr;
use crate::offspring::OffspringDistribution;
use crate::sampler::{self, SampleConfig};
use crate::tree::{self, PlaneTree};

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error(transparent)]
    Sample(#[from] sampler::SampleError),
    #[error(transparent)]
    Tree(#[from] tree::TreeError),
    #[error(transparent)]
    Exact(#[from] exact::ExactError),
    #[error(transparent)]
    Census(#[from] census::CensusError),
    #[error(transparent)]
    Expr(#[from] expr::ExprError),
    #[error("bad pattern rule {0:?}: {1}")]
    BadRule(String, String),
}

/// A pattern family indexed by the tree size `n`, given in config as
/// `chain:<size expr>`, `star:<size expr>`, `complete:<r>:<height expr>`,
/// or a literal degree sequence such as `2,0,0`.
#[derive(Debug, Clone)]
pub enum PatternRule {
    Chain(String),
    Star(String),
    Complete { r: u32, height: String },
    Literal(PlaneTree),
}

impl PatternRule {
    pub fn parse(s: &str) -> Result<Self, ExperimentError> {
        let bad = |m: &str| ExperimentError::BadRule(s.to_string(), m.to_string());
        if let Some(e) = s.strip_prefix("chain:") {
            return Ok(PatternRule::Chain(e.to_string()));
        }
        if let Some(e) = s.strip_prefix("star:") {
            return Ok(PatternRule::Star(e.to_string()));
        }
        if let Some(rest) = s.strip_prefix("complete:") {
            let (r, h) = rest
                .split_once(':')
                .ok_or_else(|| bad("expected complete:<r>:<height expr>"))?;
            let r: u32 = r.parse().map_err(|_| bad("branching factor must be an integer"))?;
            return Ok(PatternRule::Complete { r, height: h.to_string() });
        }
        let t: PlaneTree = s
            .parse()
            .map_err(|e: tree::TreeError| bad(&e.to_string()))?;
        Ok(PatternRule::Literal(t))
    }

    /// Materializes the pattern for a host of size `n`.  Chain and star
    /// expressions give the pattern's node count.
    pub fn pattern_for(&self, n: usize) -> Result<PlaneTree, ExperimentError> {
        match self {
            PatternRule::Chain(e) => {
                let k = expr::eval_usize(e, n as f64)?;
                if k == 0 {
                    return Err(ExperimentError::BadRule(
                        format!("chain:{e}"),
                        "chain size must be >= 1".to_string(),
                    ));
                }
                Ok(PlaneTree::chain((k - 1) as u32))
            }
            PatternRule::Star(e) => {
                let k = expr::eval_usize(e, n as f64)?;
                Ok(PlaneTree::star(k)?)
            }
            PatternRule::Complete { r, height } => {
                let h = expr::eval_usize(height, n as f64)?;
                Ok(PlaneTree::complete_r_ary(*r, h as u32)?)
            }
            PatternRule::Literal(t) => Ok(t.clone()),
        }
    }

    pub fn key(&self) -> String {
        match self {
            PatternRule::Chain(e) => format!("chain:{e}"),
            PatternRule::Star(e) => format!("star:{e}"),
            PatternRule::Complete { r, height } => format!("complete:{r}:{height}"),
            PatternRule::Literal(t) => t.to_string(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Quantiles {
    pub q25: u64,
    pub median: u64,
    pub q75: u64,
}

/// Per-`n` results of one campaign.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentRow {
    pub n: usize,
    /// Concrete pattern (or statistic label) this row measured.
    pub pattern: Option<String>,
    pub replicates: u64,
    pub mean: f64,
    /// Unbiased sample variance.
    pub variance: f64,
    pub histogram: BTreeMap<u64, u64>,
    /// Poisson reference mean, when the campaign has one.
    pub reference_mean: Option<f64>,
    /// Empirical TV distance to the reference Poisson law.
    pub tv_to_poisson: Option<f64>,
    /// Plug-in upper bound on the upward bias of the TV estimate,
    /// `Σ_k √(p_k(1-p_k)/R) / 2`.
    pub tv_bias_bound: Option<f64>,
    pub quantiles: Quantiles,
    pub diagnostics: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentSummary {
    pub kind: String,
    pub dist: String,
    pub n_list: Vec<usize>,
    pub pattern_rule: Option<String>,
    pub replicates: u64,
    pub seed: u64,
    pub rows: Vec<ExperimentRow>,
    pub runtime_secs: f64,
}

impl ExperimentSummary {
    /// One CSV row per `(n, statistic)` pair.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("kind,dist,n,pattern,replicates,seed,statistic,value\n");
        for row in &self.rows {
            let pattern = row.pattern.as_deref().unwrap_or("");
            let mut push = |stat: &str, value: f64| {
                out.push_str(&format!(
                    "{},{},{},\"{}\",{},{},{},{}\n",
                    self.kind, self.dist, row.n, pattern, row.replicates, self.seed, stat, value
                ));
            };
            push("mean", row.mean);
            push("variance", row.variance);
            if let Some(v) = row.reference_mean {
                push("reference_mean", v);
            }
            if let Some(v) = row.tv_to_poisson {
                push("tv_to_poisson", v);
            }
            if let Some(v) = row.tv_bias_bound {
                push("tv_bias_bound", v);
            }
            push("q25", row.quantiles.q25 as f64);
            push("median", row.quantiles.median as f64);
            push("q75", row.quantiles.q75 as f64);
            for (name, value) in &row.diagnostics {
                push(name, *value);
            }
        }
        out
    }
}

/// Draws `replicates` conditioned trees of size `n` and maps each through
/// `stat`, in parallel, with per-replicate seeds derived from
/// `(seed, n_index, replicate)` so the output is scheduling-independent.
fn replicate_stats<F>(
    dist: &OffspringDistribution,
    n: usize,
    replicates: u64,
    seed: u64,
    n_index: usize,
    stat: F,
) -> Result<Vec<u64>, ExperimentError>
where
    F: Fn(&PlaneTree) -> Result<u64, ExperimentError> + Sync,
{
    let cfg = SampleConfig::new(n, seed);
    (0..replicates)
        .into_par_iter()
        .map(|rep| {
            let s = sampler::derive_seed(seed, ((n_index as u64) << 40) | rep);
            let mut rng = SmallRng::seed_from_u64(s);
            let t = sampler::sample_conditional(dist, &cfg, &mut rng)?;
            stat(&t)
        })
        .collect()
}

fn histogram(stats: &[u64]) -> BTreeMap<u64, u64> {
    let mut h = BTreeMap::new();
    for &s in stats {
        *h.entry(s).or_insert(0u64) += 1;
    }
    h
}

fn mean_variance(stats: &[u64]) -> (f64, f64) {
    let r = stats.len() as f64;
    let mean = stats.iter().map(|&s| s as f64).sum::<f64>() / r;
    if stats.len() < 2 {
        return (mean, 0.0);
    }
    let ss = stats
        .iter()
        .map(|&s| {
            let d = s as f64 - mean;
            d * d
        })
        .sum::<f64>();
    (mean, ss / (r - 1.0))
}

fn quantiles(stats: &[u64]) -> Quantiles {
    let mut sorted = stats.to_vec();
    sorted.sort_unstable();
    let at = |q: f64| sorted[((sorted.len() - 1) as f64 * q).round() as usize];
    Quantiles { q25: at(0.25), median: at(0.5), q75: at(0.75) }
}

fn skewness(stats: &[u64], mean: f64, variance: f64) -> f64 {
    if variance <= 0.0 {
        return 0.0;
    }
    let r = stats.len() as f64;
    let m3 = stats
        .iter()
        .map(|&s| {
            let d = s as f64 - mean;
            d * d * d
        })
        .sum::<f64>()
        / r;
    m3 / variance.powf(1.5)
}

/// Empirical TV to `Po(lambda)` plus the plug-in bias bound of the estimator.
fn tv_to_poisson(hist: &BTreeMap<u64, u64>, total: u64, lambda: f64) -> (f64, f64) {
    let po = exact::poisson_pmf(lambda);
    let r = total as f64;
    let max_k = hist
        .keys()
        .next_back()
        .copied()
        .unwrap_or(0)
        .max(po.len().saturating_sub(1) as u64);
    let mut tv = 0.0;
    let mut bias = 0.0;
    for k in 0..=max_k {
        let emp = hist.get(&k).copied().unwrap_or(0) as f64 / r;
        let p = po.get(k as usize).copied().unwrap_or(0.0);
        tv += (emp - p).abs();
        bias += (p * (1.0 - p) / r).sqrt();
    }
    (tv / 2.0, bias / 2.0)
}

fn base_row(n: usize, pattern: Option<String>, stats: &[u64]) -> ExperimentRow {
    let (mean, variance) = mean_variance(stats);
    ExperimentRow {
        n,
        pattern,
        replicates: stats.len() as u64,
        mean,
        variance,
        histogram: histogram(stats),
        reference_mean: None,
        tv_to_poisson: None,
        tv_bias_bound: None,
        quantiles: quantiles(stats),
        diagnostics: BTreeMap::new(),
    }
}

fn zero_fraction(hist: &BTreeMap<u64, u64>, total: u64) -> f64 {
    hist.get(&0).copied().unwrap_or(0) as f64 / total as f64
}

fn finish(
    kind: &str,
    dist: &OffspringDistribution,
    n_list: &[usize],
    pattern_rule: Option<String>,
    replicates: u64,
    seed: u64,
    rows: Vec<ExperimentRow>,
    start: Instant,
) -> ExperimentSummary {
    ExperimentSummary {
        kind: kind.to_string(),
        dist: dist.name().to_string(),
        n_list: n_list.to_vec(),
        pattern_rule,
        replicates,
        seed,
        rows,
        runtime_secs: start.elapsed().as_secs_f64(),
    }
}

/// Fringe counts of a pattern family versus the Poisson law `Po(n π(T_n))`.
pub fn run_poisson_regimes(
    dist: &OffspringDistribution,
    n_list: &[usize],
    rule: &PatternRule,
    replicates: u64,
    seed: u64,
) -> Result<ExperimentSummary, ExperimentError> {
    let start = Instant::now();
    let mut rows = Vec::new();
    for (idx, &n) in n_list.iter().enumerate() {
        let pattern = rule.pattern_for(n)?;
        let stats = replicate_stats(dist, n, replicates, seed, idx, |t| {
            Ok(census::count_fringe(t, &pattern))
        })?;
        let mut row = base_row(n, Some(pattern.to_string()), &stats);
        let lambda = n as f64 * exact::prob_tree(dist, &pattern);
        let (tv, bias) = tv_to_poisson(&row.histogram, replicates, lambda);
        row.reference_mean = Some(lambda);
        row.tv_to_poisson = Some(tv);
        row.tv_bias_bound = Some(bias);
        row.diagnostics.insert("pattern_size_over_n".into(), pattern.size() as f64 / n as f64);
        row.diagnostics.insert("zero_fraction".into(), zero_fraction(&row.histogram, replicates));
        if row.mean > 0.0 {
            row.diagnostics.insert("var_over_mean".into(), row.variance / row.mean);
        }
        row.diagnostics.insert("skewness".into(), skewness(&stats, row.mean, row.variance));
        rows.push(row);
    }
    Ok(finish("poisson", dist, n_list, Some(rule.key()), replicates, seed, rows, start))
}

/// Size-class fringe counts `N_{S_k}` versus `Po(n P(|𝒯| = k))`, with the
/// class size `k` given as an expression in `n`.
pub fn run_size_class(
    dist: &OffspringDistribution,
    n_list: &[usize],
    k_rule: &str,
    replicates: u64,
    seed: u64,
) -> Result<ExperimentSummary, ExperimentError> {
    let start = Instant::now();
    let mut rows = Vec::new();
    for (idx, &n) in n_list.iter().enumerate() {
        let k = expr::eval_usize(k_rule, n as f64)?.max(1);
        let stats = replicate_stats(dist, n, replicates, seed, idx, |t| {
            Ok(census::count_fringe_size(t, k)?)
        })?;
        let mut row = base_row(n, Some(format!("size:{k}")), &stats);
        let pi_class = exact::prob_total_size(dist, k as u64)?;
        let lambda = n as f64 * pi_class;
        let (tv, bias) = tv_to_poisson(&row.histogram, replicates, lambda);
        row.reference_mean = Some(lambda);
        row.tv_to_poisson = Some(tv);
        row.tv_bias_bound = Some(bias);
        row.diagnostics.insert("class_mass".into(), pi_class);
        row.diagnostics.insert("mean_over_n".into(), row.mean / n as f64);
        // Exact finite-n mean: the per-tree size-correction ratio is shared
        // by every tree in the class, so one representative determines it.
        if let Some(rep) = tree::enumerate_possible_exact(dist, k)?.first() {
            let ratio = exact::expected_fringe_count(dist, n as u64, rep)?
                / (n as f64 * exact::prob_tree(dist, rep));
            row.diagnostics.insert("exact_mean".into(), lambda * ratio);
        }
        rows.push(row);
    }
    Ok(finish("sizeclass", dist, n_list, Some(k_rule.to_string()), replicates, seed, rows, start))
}

/// Non-fringe counts of a pattern family: concentration of
/// `N^nf/(n π^nf)` and the chain variance-inflation diagnostic.
pub fn run_nonfringe_concentration(
    dist: &OffspringDistribution,
    n_list: &[usize],
    rule: &PatternRule,
    replicates: u64,
    seed: u64,
) -> Result<ExperimentSummary, ExperimentError> {
    let start = Instant::now();
    let mut rows = Vec::new();
    for (idx, &n) in n_list.iter().enumerate() {
        let pattern = rule.pattern_for(n)?;
        let stats = replicate_stats(dist, n, replicates, seed, idx, |t| {
            Ok(census::count_nonfringe(t, &pattern))
        })?;
        let mut row = base_row(n, Some(pattern.to_string()), &stats);
        let lambda = n as f64 * exact::prob_nonfringe_root(dist, &pattern);
        let (tv, bias) = tv_to_poisson(&row.histogram, replicates, lambda);
        row.reference_mean = Some(lambda);
        row.tv_to_poisson = Some(tv);
        row.tv_bias_bound = Some(bias);
        if lambda > 0.0 {
            row.diagnostics.insert("ratio_mean".into(), row.mean / lambda);
            let within = stats
                .iter()
                .filter(|&&s| {
                    let r = s as f64 / lambda;
                    (0.9..=1.1).contains(&r)
                })
                .count() as f64
                / replicates as f64;
            row.diagnostics.insert("ratio_within_10pct".into(), within);
        }
        row.diagnostics.insert("zero_fraction".into(), zero_fraction(&row.histogram, replicates));
        if row.mean > 0.0 {
            row.diagnostics.insert("var_over_mean".into(), row.variance / row.mean);
        }
        // Chain counts converge to a compound law with
        // variance/mean -> (1+p_1)/(1-p_1); record the limit for comparison.
        let p1 = dist.p(1);
        if p1 > 0.0 && p1 < 1.0 {
            row.diagnostics.insert("chain_var_over_mean_limit".into(), (1.0 + p1) / (1.0 - p1));
        }
        rows.push(row);
    }
    Ok(finish("nonfringe", dist, n_list, Some(rule.key()), replicates, seed, rows, start))
}

/// Maximal complete r-ary fringe or non-fringe height, with the asymptotic
/// centerline recorded as a diagnostic.
pub fn run_heights(
    dist: &OffspringDistribution,
    n_list: &[usize],
    r: u32,
    mode: CountMode,
    replicates: u64,
    seed: u64,
) -> Result<ExperimentSummary, ExperimentError> {
    let start = Instant::now();
    let mut rows = Vec::new();
    for (idx, &n) in n_list.iter().enumerate() {
        let stats = replicate_stats(dist, n, replicates, seed, idx, |t| {
            Ok(match mode {
                CountMode::Fringe => census::max_r_ary_fringe_height(t, r),
                CountMode::Nonfringe => census::max_r_ary_nonfringe_height(t, r),
            } as u64)
        })?;
        let label = match mode {
            CountMode::Fringe => format!("height:fringe:r={r}"),
            CountMode::Nonfringe => format!("height:nonfringe:r={r}"),
        };
        let mut row = base_row(n, Some(label), &stats);
        let ln_n = (n as f64).ln();
        let centerline = match (mode, r) {
            // Fringe chains and non-fringe chains both grow like
            // log_{1/p_1} n; r-ary fringe heights like log_r ln n - α_r;
            // r-ary non-fringe heights like log_r ln n.
            (_, 1) => {
                let p1 = dist.p(1);
                if p1 > 0.0 {
                    Some(ln_n / (1.0 / p1).ln())
                } else {
                    None
                }
            }
            (CountMode::Fringe, _) => exact::alpha_r(dist, r)
                .ok()
                .map(|a| ln_n.ln() / (r as f64).ln() - a),
            (CountMode::Nonfringe, _) => Some(ln_n.ln() / (r as f64).ln()),
        };
        if let Some(c) = centerline {
            row.diagnostics.insert("centerline".into(), c);
        }
        rows.push(row);
    }
    let rule = format!("r={r}");
    Ok(finish("heights", dist, n_list, Some(rule), replicates, seed, rows, start))
}

/// The all-trees threshold `K` per replicate, versus the predicted
/// centerline.
pub fn run_kn(
    dist: &OffspringDistribution,
    n_list: &[usize],
    replicates: u64,
    seed: u64,
    k_cap: u32,
) -> Result<ExperimentSummary, ExperimentError> {
    let start = Instant::now();
    let mut rows = Vec::new();
    for (idx, &n) in n_list.iter().enumerate() {
        let mut saturated_count = 0u64;
        let reports: Vec<census::KReport> =
            replicate_stats_map(dist, n, replicates, seed, idx, |t| {
                Ok(census::compute_k(t, dist, k_cap)?)
            })?;
        let stats: Vec<u64> = reports.iter().map(|r| r.k as u64).collect();
        for r in &reports {
            if r.saturated {
                saturated_count += 1;
            }
        }
        let mut row = base_row(n, Some(format!("K:cap={k_cap}")), &stats);
        row.diagnostics
            .insert("saturated_fraction".into(), saturated_count as f64 / replicates as f64);
        if let Ok(pred) = exact::predict_k(dist, n as u64, None) {
            row.diagnostics.insert("centerline".into(), pred.estimate);
        }
        rows.push(row);
    }
    Ok(finish("kn", dist, n_list, None, replicates, seed, rows, start))
}

/// Like [`replicate_stats`] but for statistics that are not plain integers.
fn replicate_stats_map<T, F>(
    dist: &OffspringDistribution,
    n: usize,
    replicates: u64,
    seed: u64,
    n_index: usize,
    stat: F,
) -> Result<Vec<T>, ExperimentError>
where
    T: Send,
    F: Fn(&PlaneTree) -> Result<T, ExperimentError> + Sync,
{
    let cfg = SampleConfig::new(n, seed);
    (0..replicates)
        .into_par_iter()
        .map(|rep| {
            let s = sampler::derive_seed(seed, ((n_index as u64) << 40) | rep);
            let mut rng = SmallRng::seed_from_u64(s);
            let t = sampler::sample_conditional(dist, &cfg, &mut rng)?;
            stat(&t)
        })
        .collect()
}
