//! Exact computation of the closed-form quantities: convolution tables for
//! i.i.d. degree sums, occurrence probabilities, conditional count moments
//! (including the second factorial moment with its overlap-tree correction),
//! minimal tree probabilities, Poisson total-variation distances,
//! coupon-collector bounds, and all-trees threshold predictions.
//!
//! Logarithms in threshold formulas are natural unless a base is explicit in
//! the quantity's definition (`alpha_r` and the r-ary height centerlines use
//! base `r` outside, natural logs inside).

use std::collections::HashMap;
use std::sync::{Arc, OnceLock, RwLock};

use serde::Serialize;
use thiserror::Error;

use crate::census;
use crate::offspring::OffspringDistribution;
use crate::tree::{self, PlaneTree};

/// Per-entry trim threshold for convolution tables.
const CONV_TRIM: f64 = 1e-300;
/// Memory cap for a single convolution table (entries).
const CONV_MAX_WIDTH: usize = 50_000_000;
/// Cap on the pmin dynamic program.
pub const PMIN_CAP: usize = 10_000;
/// Tail cut for exact Poisson pmf evaluations.
const POISSON_TAIL: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum ExactError {
    #[error("conditional tree undefined: P(S_n = n-1) = 0 at n = {0}")]
    ConditionalUndefined(u64),
    #[error("convolution table for m = {0} would exceed the memory cap")]
    TableTooLarge(u64),
    #[error("k = {0} exceeds the pmin cap {PMIN_CAP}")]
    PminCap(usize),
    #[error("no possible tree of size <= {0} under this distribution")]
    NoPossibleTree(usize),
    #[error("p_{0} = 0: degree {0} unsupported")]
    UnsupportedDegree(u32),
    #[error("trinomial count conditions violated: need n0+ni+nj = k and i*ni + j*nj = k-1")]
    TrinomialConditions,
    #[error("integer overflow in tree count")]
    Overflow,
    #[error(transparent)]
    Tree(#[from] tree::TreeError),
}

/// Exact distribution of `S_m`, the sum of `m` i.i.d. degrees, trimmed below
/// `1e-300`.
#[derive(Debug, Clone)]
pub struct ConvolutionTable {
    m: u64,
    offset: u64,
    probs: Vec<f64>,
}

impl ConvolutionTable {
    pub fn m(&self) -> u64 {
        self.m
    }

    /// `P(S_m = s)`; zero outside the stored (trimmed) support and for
    /// negative `s`.
    pub fn prob(&self, s: i64) -> f64 {
        if s < self.offset as i64 {
            return 0.0;
        }
        let idx = (s - self.offset as i64) as usize;
        self.probs.get(idx).copied().unwrap_or(0.0)
    }

    /// Total stored mass (at least `1 - m * tail_epsilon - trim losses`).
    pub fn total_mass(&self) -> f64 {
        self.probs.iter().sum()
    }

    fn point(m: u64, s: u64) -> Self {
        Self { m, offset: s, probs: vec![1.0] }
    }

    fn from_dist(dist: &OffspringDistribution) -> Self {
        let max = dist.max_degree();
        let probs = (0..=max).map(|d| dist.p(d)).collect();
        Self { m: 1, offset: 0, probs }
    }

    fn combine(&self, other: &Self) -> Result<Self, ExactError> {
        let width = self.probs.len() + other.probs.len() - 1;
        if width > CONV_MAX_WIDTH {
            return Err(ExactError::TableTooLarge(self.m + other.m));
        }
        let mut probs = vec![0.0f64; width];
        // Convolve with the shorter operand outermost for cache-friendliness.
        let (a, b) = if self.probs.len() <= other.probs.len() {
            (&self.probs, &other.probs)
        } else {
            (&other.probs, &self.probs)
        };
        for (i, &pa) in a.iter().enumerate() {
            if pa == 0.0 {
                continue;
            }
            for (j, &pb) in b.iter().enumerate() {
                probs[i + j] += pa * pb;
            }
        }
        let mut table = Self { m: self.m + other.m, offset: self.offset + other.offset, probs };
        table.trim();
        Ok(table)
    }

    fn trim(&mut self) {
        let last = match self.probs.iter().rposition(|&p| p >= CONV_TRIM) {
            Some(i) => i,
            None => {
                self.probs.clear();
                return;
            }
        };
        self.probs.truncate(last + 1);
        let first = self.probs.iter().position(|&p| p >= CONV_TRIM).unwrap();
        if first > 0 {
            self.probs.drain(..first);
            self.offset += first as u64;
        }
    }
}

type ConvCache = RwLock<HashMap<(u64, u64), Arc<ConvolutionTable>>>;

fn conv_cache() -> &'static ConvCache {
    static CACHE: OnceLock<ConvCache> = OnceLock::new();
    CACHE.get_or_init(Default::default)
}

/// Exact distribution of `S_m` by iterated convolution with doubling.
/// Results are memoized globally by `(distribution fingerprint, m)`;
/// consecutive `m` values reuse the nearest cached table and step forward by
/// single convolutions, which makes ratio sweeps over `m` cheap.
pub fn convolve(dist: &OffspringDistribution, m: u64) -> Result<Arc<ConvolutionTable>, ExactError> {
    let fp = dist.fingerprint();
    if let Some(t) = conv_cache().read().unwrap().get(&(fp, m)) {
        return Ok(Arc::clone(t));
    }
    let table = if m == 0 {
        Arc::new(ConvolutionTable::point(0, 0))
    } else if m == 1 {
        Arc::new(ConvolutionTable::from_dist(dist))
    } else {
        // Step forward from a close cached table when possible.
        let mut stepped = None;
        {
            let cache = conv_cache().read().unwrap();
            for back in 1..=64.min(m) {
                if let Some(t) = cache.get(&(fp, m - back)) {
                    stepped = Some((Arc::clone(t), back));
                    break;
                }
            }
        }
        match stepped {
            Some((mut t, back)) => {
                let base = ConvolutionTable::from_dist(dist);
                for i in 0..back {
                    let next = Arc::new(t.combine(&base)?);
                    conv_cache()
                        .write()
                        .unwrap()
                        .insert((fp, m - back + i + 1), Arc::clone(&next));
                    t = next;
                }
                t
            }
            None => {
                let half = convolve(dist, m / 2)?;
                let mut t = half.combine(&half)?;
                if m % 2 == 1 {
                    t = t.combine(&ConvolutionTable::from_dist(dist))?;
                }
                Arc::new(t)
            }
        }
    };
    conv_cache().write().unwrap().insert((fp, m), Arc::clone(&table));
    Ok(table)
}

/// `π(T) = P(𝒯 = T)`: product of degree probabilities over all nodes.
pub fn prob_tree(dist: &OffspringDistribution, t: &PlaneTree) -> f64 {
    t.degrees().iter().map(|&d| dist.p(d)).product()
}

/// Natural log of `π(T)`, `-inf` when some degree is unsupported.
pub fn log_prob_tree(dist: &OffspringDistribution, t: &PlaneTree) -> f64 {
    t.degrees().iter().map(|&d| dist.p(d).ln()).sum()
}

/// `π^nf(T) = P(T ⪯ 𝒯)`: product over internal nodes only (pattern leaves
/// are unconstrained).
pub fn prob_nonfringe_root(dist: &OffspringDistribution, t: &PlaneTree) -> f64 {
    t.degrees().iter().filter(|&&d| d > 0).map(|&d| dist.p(d)).product()
}

/// Exact `P(|𝒯| = n) = P(S_n = n - 1) / n` (rotation correspondence).
pub fn prob_total_size(dist: &OffspringDistribution, n: u64) -> Result<f64, ExactError> {
    assert!(n >= 1);
    Ok(convolve(dist, n)?.prob(n as i64 - 1) / n as f64)
}

fn denominator(dist: &OffspringDistribution, n: u64) -> Result<f64, ExactError> {
    let d = convolve(dist, n)?.prob(n as i64 - 1);
    if d <= 0.0 {
        return Err(ExactError::ConditionalUndefined(n));
    }
    Ok(d)
}

/// `E N_T(𝒯_n) = n π(T) P(S_{n-k} = n-k) / P(S_n = n-1)` with `k = |T|`.
pub fn expected_fringe_count(
    dist: &OffspringDistribution,
    n: u64,
    t: &PlaneTree,
) -> Result<f64, ExactError> {
    let k = t.size() as u64;
    assert!(k <= n, "pattern larger than host size");
    let denom = denominator(dist, n)?;
    let num = convolve(dist, n - k)?.prob((n - k) as i64);
    Ok(n as f64 * prob_tree(dist, t) * num / denom)
}

/// `E N^nf_T(𝒯_n) = n π^nf(T) P(S_{n-v} = n-v-ℓ) / P(S_n = n-1)` with
/// `v` internal nodes and `ℓ` leaves in the pattern.
pub fn expected_nonfringe_count(
    dist: &OffspringDistribution,
    n: u64,
    t: &PlaneTree,
) -> Result<f64, ExactError> {
    let v = t.internal_count() as u64;
    let l = t.leaf_count() as u64;
    assert!(t.size() as u64 <= n, "pattern larger than host size");
    let denom = denominator(dist, n)?;
    let num = convolve(dist, n - v)?.prob((n - v) as i64 - l as i64);
    Ok(n as f64 * prob_nonfringe_root(dist, t) * num / denom)
}

/// The overlap set `{T⊞T}`: all distinct trees obtained by replacing the
/// fringe subtree at an internal node `v` of `T` (with `T_v ⪯ T` at the
/// root) by a full copy of `T`, excluding `T` itself.  Sorted by
/// (size, degree sequence) for determinism.
pub fn t_boxplus_t(t: &PlaneTree) -> Vec<PlaneTree> {
    let sizes = t.subtree_sizes();
    let t_sizes = &sizes;
    let mut out: Vec<PlaneTree> = Vec::new();
    for i in 0..t.size() {
        if t.degrees()[i] == 0 {
            continue; // only internal nodes
        }
        let sub_len = sizes[i] as usize;
        let sub = PlaneTree::from_valid(t.degrees()[i..i + sub_len].to_vec());
        // Require T_v ⪯ T at the root of T.
        if !census::nonfringe_match_at(t, t_sizes, &sub, 0) {
            continue;
        }
        let mut degrees = Vec::with_capacity(t.size() - sub_len + t.size());
        degrees.extend_from_slice(&t.degrees()[..i]);
        degrees.extend_from_slice(t.degrees());
        degrees.extend_from_slice(&t.degrees()[i + sub_len..]);
        let splayed = PlaneTree::from_valid(degrees);
        if &splayed != t && !out.contains(&splayed) {
            out.push(splayed);
        }
    }
    out.sort_by(|a, b| (a.size(), a.degrees()).cmp(&(b.size(), b.degrees())));
    out
}

/// Mean, second factorial moment, and variance of a non-fringe count, with
/// the per-overlap-tree contributions listed.
#[derive(Debug, Clone, Serialize)]
pub struct MomentReport {
    pub mean: f64,
    pub second_factorial: f64,
    pub variance: f64,
    /// `(overlap tree key, contribution to E (N)_2)` pairs.
    pub overlap_terms: Vec<(String, f64)>,
}

/// `E (N^nf_T(𝒯_n))_2` and derived variance:
///
/// ```text
/// n (n - 2v + 1) π^nf(T)^2 P(S_{n-2v} = n+1-2(v+ℓ)) / P(S_n = n-1)
///   + 2n Σ_{T' ∈ {T⊞T}} π^nf(T') P(S_{n-v'} = n-v'-ℓ') / P(S_n = n-1).
/// ```
///
/// The single-leaf pattern (`v = 0`) is special-cased to the combinatorially
/// forced `N ≡ n`, `E (N)_2 = n (n - 1)`, variance 0, since the formula's
/// derivation assumes at least one internal node.
pub fn second_factorial_nonfringe(
    dist: &OffspringDistribution,
    n: u64,
    t: &PlaneTree,
) -> Result<MomentReport, ExactError> {
    let v = t.internal_count() as u64;
    let l = t.leaf_count() as u64;
    if v == 0 {
        return Ok(MomentReport {
            mean: n as f64,
            second_factorial: (n * (n - 1)) as f64,
            variance: 0.0,
            overlap_terms: Vec::new(),
        });
    }
    let denom = denominator(dist, n)?;
    let pnf = prob_nonfringe_root(dist, t);
    // Disjoint-pair term: zero when there is no room for two non-nested
    // copies (n <= 2v), where only the overlap terms can contribute.
    let term1 = if n > 2 * v {
        let disjoint = convolve(dist, n - 2 * v)?.prob(n as i64 + 1 - 2 * (v + l) as i64);
        n as f64 * (n - 2 * v + 1) as f64 * pnf * pnf * disjoint / denom
    } else {
        0.0
    };

    let mut overlap_terms = Vec::new();
    let mut overlap_sum = 0.0;
    for tp in t_boxplus_t(t) {
        let vp = tp.internal_count() as u64;
        let lp = tp.leaf_count() as u64;
        let contribution = if vp >= n {
            0.0
        } else {
            let num = convolve(dist, n - vp)?.prob((n - vp) as i64 - lp as i64);
            2.0 * n as f64 * prob_nonfringe_root(dist, &tp) * num / denom
        };
        overlap_sum += contribution;
        overlap_terms.push((tp.key(), contribution));
    }
    let mean = expected_nonfringe_count(dist, n, t)?;
    let second_factorial = term1 + overlap_sum;
    let variance = second_factorial + mean - mean * mean;
    Ok(MomentReport { mean, second_factorial, variance, overlap_terms })
}

/// Outcome of the minimal-probability-tree search.
#[derive(Debug, Clone, Serialize)]
pub struct PminResult {
    /// A witness: a least likely possible tree of size at most `k`.
    pub tree: PlaneTree,
    /// Its probability (may underflow to zero for large `k`).
    pub prob: f64,
    /// Natural log of the probability (always finite).
    pub log_prob: f64,
    /// Size of the witness.
    pub size: usize,
}

/// Per-size scores: `scores[s - 1]` is the maximal `-log π(T)` over possible
/// trees of size exactly `s`, `-inf` when no such tree exists, together with
/// the DP choice table for witness reconstruction.
fn pmin_scores(dist: &OffspringDistribution, k: usize) -> (Vec<f64>, Vec<f64>, Vec<u32>) {
    // A degree multiset {n_d} with Σ n_d = s and Σ d n_d = s - 1 always
    // arranges into a valid preorder sequence (cycle lemma), so minimizing
    // over trees = optimizing over multisets.  Writing n_0 out, a tree of
    // size s is a knapsack filling of weight w = s - 1 with positive-degree
    // items, and
    //     -log π = s c_0 + Σ_{d >= 1} n_d (c_d - c_0),   c_d = -log p_d.
    // The least likely tree maximizes the gain sum.
    let c0 = -dist.p(0).ln();
    let gains: Vec<(u32, f64)> = dist
        .entries()
        .iter()
        .skip(1)
        .map(|&(d, p)| (d, -p.ln() - c0))
        .collect();
    let mut h = vec![f64::NEG_INFINITY; k];
    let mut choice = vec![0u32; k];
    h[0] = 0.0;
    for w in 1..k {
        for &(d, g) in &gains {
            let d = d as usize;
            if d > w || h[w - d] == f64::NEG_INFINITY {
                continue;
            }
            let cand = h[w - d] + g;
            if cand > h[w] {
                h[w] = cand;
                choice[w] = d as u32;
            }
        }
    }
    let scores: Vec<f64> = (1..=k).map(|s| s as f64 * c0 + h[s - 1]).collect();
    (scores, h, choice)
}

/// `p^min_k`: the minimal probability over possible trees of size at most
/// `k`, with a canonical witness (positive degrees laid out in descending
/// order followed by the leaves).
pub fn pmin(dist: &OffspringDistribution, k: usize) -> Result<PminResult, ExactError> {
    if k == 0 || k > PMIN_CAP {
        return Err(ExactError::PminCap(k));
    }
    let (scores, h, choice) = pmin_scores(dist, k);
    let mut best: Option<(usize, f64)> = None;
    for (idx, &sc) in scores.iter().enumerate() {
        if sc == f64::NEG_INFINITY {
            continue;
        }
        match best {
            Some((_, b)) if sc <= b => {}
            _ => best = Some((idx + 1, sc)),
        }
    }
    let (size, score) = best.ok_or(ExactError::NoPossibleTree(k))?;
    // Reconstruct the degree multiset from the knapsack choices.
    let mut positives = Vec::new();
    let mut w = size - 1;
    while w > 0 {
        let d = choice[w];
        debug_assert!(d >= 1 && h[w] > f64::NEG_INFINITY);
        positives.push(d);
        w -= d as usize;
    }
    positives.sort_unstable_by(|a, b| b.cmp(a));
    let mut degrees = positives;
    degrees.resize(size, 0);
    let tree = PlaneTree::new(degrees).expect("descending multiset layout is ballot-valid");
    Ok(PminResult { tree, prob: (-score).exp(), log_prob: -score, size })
}

/// Exact Poisson pmf over `0..` with total tail below `1e-12`.
pub fn poisson_pmf(lambda: f64) -> Vec<f64> {
    assert!(lambda >= 0.0 && lambda.is_finite());
    if lambda == 0.0 {
        return vec![1.0];
    }
    let kmax = (lambda + 40.0 * lambda.sqrt() + 30.0).ceil() as usize;
    let ln_lambda = lambda.ln();
    let mut pmf = Vec::with_capacity(kmax + 1);
    let mut ln_fact = 0.0f64;
    for k in 0..=kmax {
        if k > 0 {
            ln_fact += (k as f64).ln();
        }
        pmf.push((-lambda + k as f64 * ln_lambda - ln_fact).exp());
    }
    // Drop the negligible high tail below the cut.
    let mut tail = 0.0;
    let mut cut = pmf.len();
    for (i, &p) in pmf.iter().enumerate().rev() {
        tail += p;
        if tail > POISSON_TAIL {
            cut = i + 1;
            break;
        }
    }
    pmf.truncate(cut.max(1));
    pmf
}

/// Exact total-variation distance between `Po(mu)` and `Po(nu)` (tail cut
/// `1e-12`) together with the bound `|√mu - √nu|`.
pub fn poisson_tv(mu: f64, nu: f64) -> (f64, f64) {
    let p = poisson_pmf(mu);
    let q = poisson_pmf(nu);
    let len = p.len().max(q.len());
    let mut tv = 0.0;
    for k in 0..len {
        let a = p.get(k).copied().unwrap_or(0.0);
        let b = q.get(k).copied().unwrap_or(0.0);
        tv += (a - b).abs();
    }
    (tv / 2.0, (mu.sqrt() - nu.sqrt()).abs())
}

/// Coupon-collector sandwich: with `m` draws over types of probabilities
/// `probs`, `P(all types seen)` lies between `1 - Σ (1-p_i)^m` and
/// `1 / Σ (1-p_i)^m` (upper clamped to 1).
pub fn coupon_bounds(probs: &[f64], m: f64) -> (f64, f64) {
    assert!(probs.iter().all(|&p| p > 0.0));
    let s: f64 = probs.iter().map(|&p| (1.0 - p).powf(m)).sum();
    let lower = 1.0 - s;
    let upper = if s > 0.0 { (1.0 / s).min(1.0) } else { 1.0 };
    (lower, upper)
}

/// `α_r = log_r(ln(1/p_0) + ln(1/p_r)/(r - 1))`, the fringe r-ary height
/// centerline shift.
pub fn alpha_r(dist: &OffspringDistribution, r: u32) -> Result<f64, ExactError> {
    assert!(r >= 2);
    let pr = dist.p(r);
    if pr == 0.0 {
        return Err(ExactError::UnsupportedDegree(r));
    }
    let inner = (1.0 / dist.p(0)).ln() + (1.0 / pr).ln() / (r as f64 - 1.0);
    Ok(inner.ln() / (r as f64).ln())
}

/// Tail regime used by [`predict_k`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum KRegime {
    /// `kappa < ∞`: second-order centerline `(ln n - ln ln n)/ln(1/L)`.
    WellBehaved,
    /// `-log p^min_i = γ (log i)(i + O(1))`: refined Cayley-style centerline.
    CayleyLike,
    /// Super-exponential tail: solve `-log p^min_k = log n` numerically.
    SuperExponential,
    /// No regime detected; same numerical first-order solve, flagged.
    FirstOrderOnly,
}

/// A threshold prediction: the centerline estimate and the regime (theorem)
/// that produced it.
#[derive(Debug, Clone, Serialize)]
pub struct KPrediction {
    pub estimate: f64,
    pub regime: KRegime,
    /// Fitted exponent for the Cayley-like regime.
    pub gamma: Option<f64>,
    pub note: String,
}

/// Predicts the all-trees threshold centerline for trees of size `n`.
///
/// Regime selection is explicit via `hint` or a best-effort heuristic: a
/// finite `kappa` is well-behaved; otherwise a `γ k log k` fit on the
/// minimal-tree costs inside the stored support decides between the
/// Cayley-like refinement and a direct numerical solve of
/// `-log p^min_k = log n`.  The classification is a finite-data heuristic
/// and is labeled as such in the note.
pub fn predict_k(
    dist: &OffspringDistribution,
    n: u64,
    hint: Option<KRegime>,
) -> Result<KPrediction, ExactError> {
    assert!(n >= 3);
    let ln_n = (n as f64).ln();
    let consts = dist.constants(2);
    let regime_guess = match hint {
        Some(r) => r,
        None => {
            if consts.kappa.is_some() {
                KRegime::WellBehaved
            } else {
                classify_tail(dist)
            }
        }
    };
    match regime_guess {
        KRegime::WellBehaved => Ok(KPrediction {
            estimate: (ln_n - ln_n.ln()) / (1.0 / consts.l).ln(),
            regime: KRegime::WellBehaved,
            gamma: None,
            note: format!("kappa finite, L = {:.6}", consts.l),
        }),
        KRegime::CayleyLike => {
            let gamma = fit_gamma(dist)?.0;
            let m = ln_n;
            let m1 = (m / gamma).ln();
            let m2 = m1.ln();
            let estimate = if m1 - m2 > 0.1 && m2 > 0.0 {
                m / (gamma * (m1 - m2)) * (1.0 - m2 / (m1 * (m1 - m2)))
            } else {
                // Too small for the refinement; first-order centerline.
                m / (gamma * m1.max(0.1))
            };
            Ok(KPrediction {
                estimate,
                regime: KRegime::CayleyLike,
                gamma: Some(gamma),
                note: format!("fitted gamma = {gamma:.4} (heuristic)"),
            })
        }
        reg @ (KRegime::SuperExponential | KRegime::FirstOrderOnly) => {
            let estimate = solve_cost_equals(dist, ln_n)? as f64;
            Ok(KPrediction {
                estimate,
                regime: reg,
                gamma: None,
                note: "numerical solve of -log pmin_k = log n (heuristic tail class)".into(),
            })
        }
    }
}

/// Fits `γ` in `-log p^min_k ≈ γ k ln k` on the star-feasible range of the
/// stored support; returns `(γ, relative midpoint residual)`.
fn fit_gamma(dist: &OffspringDistribution) -> Result<(f64, f64), ExactError> {
    let k2 = (dist.max_degree() as usize + 1).min(PMIN_CAP);
    let k1 = (k2 / 2).max(4);
    let k3 = (k1 + k2) / 2;
    if k2 < 8 || k1 >= k3 || k3 >= k2 {
        return Err(ExactError::NoPossibleTree(k2));
    }
    let (scores, _, _) = pmin_scores(dist, k2);
    let u = |k: usize| -> f64 {
        scores[..k].iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    };
    let (u1, u2, u3) = (u(k1), u(k2), u(k3));
    let gamma = (u2 - u1) / (k2 as f64 * (k2 as f64).ln() - k1 as f64 * (k1 as f64).ln());
    let predicted = gamma * k3 as f64 * (k3 as f64).ln();
    let residual = ((predicted - u3) / u3).abs();
    Ok((gamma, residual))
}

fn classify_tail(dist: &OffspringDistribution) -> KRegime {
    match fit_gamma(dist) {
        Ok((gamma, residual)) if gamma > 0.0 && residual <= 0.1 => KRegime::CayleyLike,
        Ok(_) => KRegime::SuperExponential,
        Err(_) => KRegime::FirstOrderOnly,
    }
}

/// Largest `k` (up to the pmin cap) with `-log p^min_k <= target`.
fn solve_cost_equals(dist: &OffspringDistribution, target: f64) -> Result<usize, ExactError> {
    let (scores, _, _) = pmin_scores(dist, PMIN_CAP);
    let mut best = 1usize;
    let mut running = f64::NEG_INFINITY;
    for (idx, &sc) in scores.iter().enumerate() {
        if sc > running {
            running = sc;
        }
        if running <= target {
            best = idx + 1;
        }
    }
    Ok(best)
}

/// `|S_k(n_0, n_i, n_j)| = (1/k) multinomial(k; n_0, n_i, n_j)`: the number
/// of trees with `n_0` leaves, `n_i` nodes of degree `i`, and `n_j` of
/// degree `j`.  Exact integer arithmetic; requires `n_0 + n_i + n_j = k` and
/// `i n_i + j n_j = k - 1`.
pub fn trinomial_tree_count(
    k: u64,
    n0: u64,
    i: u64,
    ni: u64,
    j: u64,
    nj: u64,
) -> Result<u128, ExactError> {
    if n0 + ni + nj != k || i * ni + j * nj != k - 1 {
        return Err(ExactError::TrinomialConditions);
    }
    let multinomial = binomial_u128(k, n0)?
        .checked_mul(binomial_u128(k - n0, ni)?)
        .ok_or(ExactError::Overflow)?;
    if multinomial % k as u128 != 0 {
        return Err(ExactError::TrinomialConditions);
    }
    Ok(multinomial / k as u128)
}

fn binomial_u128(n: u64, k: u64) -> Result<u128, ExactError> {
    if k > n {
        return Ok(0);
    }
    let k = k.min(n - k);
    let mut res: u128 = 1;
    for r in 1..=k {
        res = res
            .checked_mul((n - k + r) as u128)
            .ok_or(ExactError::Overflow)?;
        res /= r as u128; // exact: res is C(n-k+r, r) after this step
    }
    Ok(res)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tree::enumerate_possible;

    const EPS: f64 = 1e-15;

    fn dist(name: &str) -> OffspringDistribution {
        OffspringDistribution::builtin(name, EPS).unwrap()
    }

    fn t(s: &str) -> PlaneTree {
        s.parse().unwrap()
    }

    #[test]
    fn convolution_examples() {
        let fb = dist("full-binary");
        assert!((convolve(&fb, 3).unwrap().prob(2) - 3.0 / 8.0).abs() < 1e-14);
        let any = dist("motzkin");
        let zero = convolve(&any, 0).unwrap();
        assert_eq!(zero.prob(0), 1.0);
        assert_eq!(zero.prob(1), 0.0);
        let pl = dist("plane");
        assert!((convolve(&pl, 3).unwrap().prob(2) - 3.0 / 16.0).abs() < 1e-13);
    }

    #[test]
    fn convolution_doubling_matches_stepping() {
        // Same m reached via different cache paths must agree.
        let mz = dist("motzkin");
        let a = convolve(&mz, 37).unwrap();
        let mut direct = ConvolutionTable::from_dist(&mz);
        for _ in 1..37 {
            direct = direct.combine(&ConvolutionTable::from_dist(&mz)).unwrap();
        }
        for s in 0..=74 {
            assert!((a.prob(s) - direct.prob(s)).abs() < 1e-12, "s = {s}");
        }
        assert!((a.total_mass() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn prob_tree_examples() {
        let fb = dist("full-binary");
        assert!((prob_tree(&fb, &t("2,0,0")) - 0.125).abs() < 1e-15);
        let pl = dist("plane");
        for tree in crate::tree::enumerate_trees(5).unwrap() {
            let p = prob_tree(&pl, &tree);
            assert!((p - 0.5f64.powi(9)).abs() < 1e-15, "π varies at size 5");
        }
        let c = PlaneTree::complete_r_ary(3, 2).unwrap();
        let da = dist("d-ary(3)");
        let expect = da.p(3).powi(4) * da.p(0).powi(9);
        assert!((prob_tree(&da, &c) - expect).abs() < 1e-18);
    }

    #[test]
    fn prob_nonfringe_root_examples() {
        let mz = dist("motzkin");
        let chain4 = PlaneTree::chain(4);
        assert!((prob_nonfringe_root(&mz, &chain4) - mz.p(1).powi(4)).abs() < 1e-15);
        assert_eq!(prob_nonfringe_root(&mz, &PlaneTree::leaf()), 1.0);
        for tree in crate::tree::enumerate_trees(4).unwrap() {
            assert!(prob_nonfringe_root(&mz, &tree) >= prob_tree(&mz, &tree));
        }
    }

    #[test]
    fn prob_total_size_examples() {
        let fb = dist("full-binary");
        assert!((prob_total_size(&fb, 3).unwrap() - 0.125).abs() < 1e-15);
        assert_eq!(prob_total_size(&fb, 4).unwrap(), 0.0);
        let pl = dist("plane");
        assert!((prob_total_size(&pl, 3).unwrap() - 1.0 / 16.0).abs() < 1e-13);
        // Mass bound: sizes are mutually exclusive events.
        for name in ["plane", "motzkin", "full-binary", "labeled"] {
            let d = dist(name);
            let total: f64 = (1..=30).map(|n| prob_total_size(&d, n).unwrap()).sum();
            assert!(total <= 1.0 + 1e-12, "{name}: {total}");
        }
    }

    #[test]
    fn expected_fringe_degenerate_whole_tree() {
        let fb = dist("full-binary");
        let only = t("2,0,0");
        let e = expected_fringe_count(&fb, 3, &only).unwrap();
        assert!((e - 1.0).abs() < 1e-12, "unique size-3 tree must have E N = 1");
    }

    #[test]
    fn expected_nonfringe_leaf_is_n() {
        for name in ["plane", "motzkin", "full-binary"] {
            let d = dist(name);
            let n = if name == "full-binary" { 9 } else { 8 };
            let e = expected_nonfringe_count(&d, n, &PlaneTree::leaf()).unwrap();
            assert!((e - n as f64).abs() < 1e-10, "{name}: {e}");
        }
    }

    #[test]
    fn boxplus_examples() {
        // Chains splice into longer chains: {L_h ⊞ L_h} = {L_{h+1}, ..., L_{2h-1}}.
        let c2 = PlaneTree::chain(2);
        assert_eq!(t_boxplus_t(&c2), vec![PlaneTree::chain(3)]);
        for h in 2..6u32 {
            let ch = PlaneTree::chain(h);
            let expect: Vec<PlaneTree> = (1..h).map(|i| PlaneTree::chain(h + i)).collect();
            assert_eq!(t_boxplus_t(&ch), expect, "h = {h}");
        }
        assert!(t_boxplus_t(&t("2,0,0")).is_empty());
    }

    #[test]
    fn second_factorial_leaf_special_case() {
        let mz = dist("motzkin");
        for n in [5u64, 7] {
            let r = second_factorial_nonfringe(&mz, n, &PlaneTree::leaf()).unwrap();
            assert_eq!(r.mean, n as f64);
            assert_eq!(r.second_factorial, (n * (n - 1)) as f64);
            assert_eq!(r.variance, 0.0);
        }
    }

    #[test]
    fn second_factorial_with_only_nested_copies() {
        // A 4-node chain pattern in a 5-node host: two copies can never be
        // node-disjoint (2v = 6 > 5), yet nested matches exist (the 5-node
        // chain holds two), so the overlap terms alone must carry E (N)_2.
        let mz = dist("motzkin");
        let pat = t("1,1,1,0");
        let r = second_factorial_nonfringe(&mz, 5, &pat).unwrap();
        assert!(r.second_factorial > 0.0);
        let o = crate::oracle::exact_count_pmf(&mz, 5, &pat, crate::census::CountMode::Nonfringe)
            .unwrap();
        assert!(
            (r.second_factorial - o.second_factorial).abs() <= 1e-12 * o.second_factorial,
            "{} vs {}",
            r.second_factorial,
            o.second_factorial
        );
    }

    #[test]
    fn pmin_brute_force_small_k() {
        for name in ["motzkin", "full-binary"] {
            let d = dist(name);
            for k in 1..=9usize {
                let dp = pmin(&d, k).unwrap();
                let brute = enumerate_possible(&d, k)
                    .unwrap()
                    .iter()
                    .map(|t| prob_tree(&d, t))
                    .fold(f64::INFINITY, f64::min);
                assert!(
                    (dp.prob - brute).abs() <= 1e-14 * brute,
                    "{name} k={k}: dp {} vs brute {brute}",
                    dp.prob
                );
                assert!(crate::tree::validate(dp.tree.degrees()));
            }
        }
    }

    #[test]
    fn pmin_plane_constant() {
        let pl = dist("plane");
        for k in [3usize, 10, 100] {
            let r = pmin(&pl, k).unwrap();
            let expect = (1 - 2 * k as i64) as f64 * 2.0f64.ln();
            assert!((r.log_prob - expect).abs() < 1e-9 * expect.abs(), "k = {k}");
        }
    }

    #[test]
    fn pmin_convergence_to_l() {
        let pl = dist("plane");
        let r = pmin(&pl, 100).unwrap();
        assert!(((r.log_prob / 100.0).exp() - 0.25).abs() < 0.02);
        let fb = dist("full-binary");
        let r = pmin(&fb, 101).unwrap();
        assert!(((r.log_prob / 101.0).exp() - 0.5).abs() < 0.05);
    }

    #[test]
    fn poisson_tv_examples() {
        let (tv, bound) = poisson_tv(1.0, 1.0);
        assert!(tv.abs() < 1e-12 && bound.abs() < 1e-12);
        for mu in [0.2f64, 1.0, 3.7] {
            let (tv, bound) = poisson_tv(0.0, mu);
            assert!((tv - (1.0 - (-mu).exp())).abs() < 1e-10);
            assert!((bound - mu.sqrt()).abs() < 1e-12);
            assert!(tv <= bound);
        }
    }

    #[test]
    fn coupon_examples() {
        let (lo, hi) = coupon_bounds(&[0.5, 0.5], 2.0);
        assert!((lo - 0.5).abs() < 1e-12);
        assert!((hi - 1.0).abs() < 1e-12);
        let (lo, _) = coupon_bounds(&[0.3, 0.7], 1e6);
        assert!(lo > 1.0 - 1e-9);
        let (lo, _) = coupon_bounds(&[1.0], 1.0);
        assert!((lo - 1.0).abs() < 1e-12);
    }

    #[test]
    fn alpha_r_examples() {
        let fb = dist("full-binary");
        let a2 = alpha_r(&fb, 2).unwrap();
        assert!((a2 - (2.0 * 2.0f64.ln()).log2()).abs() < 1e-12);
        assert!((a2 - 0.4712).abs() < 5e-4);
        let mz = dist("motzkin");
        let a2 = alpha_r(&mz, 2).unwrap();
        assert!((a2 - (2.0 * 3.0f64.ln()).log2()).abs() < 1e-12);
        assert!(alpha_r(&fb, 3).is_err());
    }

    #[test]
    fn predict_k_plane_well_behaved() {
        let pl = dist("plane");
        let p = predict_k(&pl, 1_000_000, None).unwrap();
        assert_eq!(p.regime, KRegime::WellBehaved);
        let ln_n = 1e6f64.ln();
        let expect = (ln_n - ln_n.ln()) / 4.0f64.ln();
        assert!((p.estimate - expect).abs() < 1e-9);
    }

    #[test]
    fn predict_k_labeled_cayley() {
        let lb = dist("labeled");
        let p = predict_k(&lb, 1_000_000, None).unwrap();
        assert_eq!(p.regime, KRegime::CayleyLike);
        let gamma = p.gamma.unwrap();
        assert!((gamma - 1.0).abs() < 0.1, "gamma = {gamma}");
        assert!(p.estimate > 1.0 && p.estimate.is_finite());
    }

    #[test]
    fn trinomial_examples() {
        assert_eq!(trinomial_tree_count(3, 2, 2, 1, 1, 0).unwrap(), 1);
        assert_eq!(trinomial_tree_count(5, 3, 2, 2, 1, 0).unwrap(), 2);
        assert_eq!(trinomial_tree_count(1, 1, 2, 0, 1, 0).unwrap(), 1);
        assert!(trinomial_tree_count(5, 3, 2, 1, 1, 1).is_err());
        // Cross-check against enumeration: size-7 full binary trees.
        let count = trinomial_tree_count(7, 4, 2, 3, 1, 0).unwrap();
        let fb = dist("full-binary");
        let enumerated = crate::tree::enumerate_possible_exact(&fb, 7).unwrap().len();
        assert_eq!(count as usize, enumerated);
    }

    #[test]
    fn poisson_tv_bound_sweep_grid() {
        for i in 1..=10 {
            for j in 1..=10 {
                let mu = i as f64;
                let nu = j as f64;
                let (tv, bound) = poisson_tv(mu, nu);
                assert!(tv <= bound + 1e-12, "violation at ({mu}, {nu})");
                assert!((0.0..=1.0).contains(&tv));
            }
        }
    }
}
