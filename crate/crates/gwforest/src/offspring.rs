//! Critical offspring distributions and the scalar constants derived from them.
//!
//! An [`OffspringDistribution`] stores the pmf `{p_i}` of a critical
//! (mean one, positive finite variance) offspring law.  Unbounded laws
//! (geometric, Poisson) are truncated at a configurable tail mass
//! `tail_epsilon` and renormalized; truncation is equivalent to conditioning
//! the degree on staying at or below the cutoff, so downstream rejection
//! samplers and exact computations remain mutually consistent.
//!
//! [`OffspringDistribution::constants`] computes the quantities that govern
//! the all-trees threshold: the table `L_k`, its limit `L`, and the first
//! index `kappa` attaining the limit.

use std::collections::hash_map::DefaultHasher;
use std::fmt;
use std::hash::{Hash, Hasher};

use rand::Rng;
use rand_distr::weighted::WeightedAliasIndex;
use rand_distr::Distribution;
use thiserror::Error;

/// Relative tolerance for the pmf normalization check.
const SUM_TOL: f64 = 1e-12;
/// Tolerance for the criticality (mean one) check.
const MEAN_TOL: f64 = 1e-9;
/// Relative tolerance used when deciding that some `L_k` attains `L`.
const KAPPA_TOL: f64 = 1e-12;

/// Errors from constructing or parsing an offspring distribution.
#[derive(Debug, Error)]
pub enum OffspringError {
    #[error("unknown builtin distribution `{0}`")]
    UnknownBuiltin(String),
    #[error("d-ary distribution requires d >= 2, got {0}")]
    BadArity(u32),
    #[error("pmf must contain at least one positive-degree entry and a leaf entry")]
    DegeneratePmf,
    #[error("pmf entries must be strictly positive, unique, and sorted; offending degree {0}")]
    BadEntry(u32),
    #[error("probabilities sum to {0}, expected 1 within {SUM_TOL:e}")]
    NotNormalized(f64),
    #[error("mean is {0}, expected 1 within {MEAN_TOL:e} (critical law required)")]
    NotCritical(f64),
    #[error("variance must be positive and finite, got {0}")]
    BadVariance(f64),
    #[error("tail_epsilon must be in (0, 1), got {0}")]
    BadTailEpsilon(f64),
    #[error("cannot parse distribution spec `{0}`")]
    BadSpec(String),
}

/// Whether the stored support is the law's true support or a truncation of an
/// unbounded one.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SupportKind {
    Finite,
    Truncated,
}

/// Internal tag choosing the degree sampling strategy.  The first three are
/// exact bit-level fast paths used both here and by the bulk conditional
/// sampler; they are selected structurally from the pmf, so an explicit pmf
/// equal to a builtin gets the same treatment.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum SamplerKind {
    /// p_0 = p_d = 1/2 for one positive degree d.
    TwoPointHalf { d: u32 },
    /// Geometric(1/2) truncated at `cutoff`: p_i proportional to 2^-(i+1).
    GeometricHalf { cutoff: u32 },
    /// Uniform on {0, 1, 2}.
    UniformTriple,
    /// General alias-table sampling.
    Alias,
}

/// A critical offspring pmf together with cached derived scalars.
///
/// Immutable after construction and safe to share across threads.
#[derive(Debug, Clone)]
pub struct OffspringDistribution {
    /// Sorted `(degree, probability)` pairs, probabilities strictly positive.
    entries: Vec<(u32, f64)>,
    /// Dense probabilities indexed by degree (zeros for absent degrees).
    dense: Vec<f64>,
    support_kind: SupportKind,
    tail_epsilon: f64,
    sigma2: f64,
    span: u32,
    p_max: f64,
    fingerprint: u64,
    kind: SamplerKind,
    alias: WeightedAliasIndex<f64>,
    name: String,
}

/// Constants derived from a distribution: variance, span, `p_max`, the table
/// `L_k` for `k = 1..=k_max`, its limit `L`, and `kappa`.
#[derive(Debug, Clone)]
pub struct DistributionConstants {
    pub sigma2: f64,
    pub span: u32,
    pub p_max: f64,
    /// `l_table[k - 1]` is `L_k`; `L_1 = p_0` and
    /// `L_k = min{p_0} ∪ {p_0 (p_i/p_0)^{1/i} : 1 <= i < k, p_i > 0}`.
    pub l_table: Vec<f64>,
    /// Limit of `L_k` over the full stored support.
    pub l: f64,
    /// Smallest `i` with `L_{i+1} = L` (within `1e-12` relative), or `None`
    /// when no index attains the limit.
    pub kappa: Option<u32>,
    /// True when the minimizing index is the truncation cutoff of an
    /// unbounded support, i.e. the reported `L` is an upper bound on the true
    /// infimum and `kappa` is reported as `None`.
    pub truncated_min: bool,
}

impl OffspringDistribution {
    /// Builds a distribution from `(degree, probability)` pairs.
    ///
    /// The pairs must be sorted by degree, strictly positive, sum to one
    /// within `1e-12`, have mean one within `1e-9`, and positive variance.
    pub fn from_pmf(entries: Vec<(u32, f64)>) -> Result<Self, OffspringError> {
        Self::build(entries, SupportKind::Finite, 0.0, None)
    }

    /// Constructs one of the named critical laws.
    ///
    /// * `plane`: Geometric(1/2), `p_i = 2^-(i+1)` (unbounded, truncated);
    /// * `full-binary`: `p_0 = p_2 = 1/2`;
    /// * `motzkin`: uniform on `{0, 1, 2}`;
    /// * `d-ary(d)`: Binomial(d, 1/d);
    /// * `labeled`: Poisson(1) (unbounded, truncated).
    pub fn builtin(name: &str, tail_epsilon: f64) -> Result<Self, OffspringError> {
        if !(tail_epsilon > 0.0 && tail_epsilon < 1.0) {
            return Err(OffspringError::BadTailEpsilon(tail_epsilon));
        }
        match name {
            "plane" => {
                // Smallest cutoff c with tail mass 2^-(c+1) <= tail_epsilon.
                let cutoff = (-tail_epsilon.log2() - 1.0).ceil().max(1.0) as u32;
                let entries: Vec<(u32, f64)> =
                    (0..=cutoff).map(|i| (i, 0.5f64.powi(i as i32 + 1))).collect();
                Self::build(
                    entries,
                    SupportKind::Truncated,
                    tail_epsilon,
                    Some("plane".into()),
                )
            }
            "full-binary" => {
                let entries = vec![(0, 0.5), (2, 0.5)];
                Self::build(entries, SupportKind::Finite, tail_epsilon, Some("full-binary".into()))
            }
            "motzkin" => {
                let third = 1.0 / 3.0;
                let entries = vec![(0, third), (1, third), (2, third)];
                Self::build(entries, SupportKind::Finite, tail_epsilon, Some("motzkin".into()))
            }
            "labeled" => {
                // Poisson(1): p_i = e^-1 / i!.  The tail after c is at most
                // twice the next term, so extend while 2 p_{c+1} > epsilon.
                let mut entries = Vec::new();
                let mut p = (-1.0f64).exp();
                let mut i = 0u32;
                loop {
                    entries.push((i, p));
                    let next = p / (i as f64 + 1.0);
                    if 2.0 * next <= tail_epsilon || next == 0.0 {
                        break;
                    }
                    p = next;
                    i += 1;
                }
                Self::build(entries, SupportKind::Truncated, tail_epsilon, Some("labeled".into()))
            }
            other => {
                if let Some(d) = parse_dary(other) {
                    if d < 2 {
                        return Err(OffspringError::BadArity(d));
                    }
                    // Binomial(d, 1/d): mean 1, variance 1 - 1/d.
                    let q = 1.0 / d as f64;
                    let mut p = (1.0 - q).powi(d as i32);
                    let mut entries = Vec::new();
                    for i in 0..=d {
                        entries.push((i, p));
                        if i < d {
                            p *= (d - i) as f64 / (i as f64 + 1.0) * (q / (1.0 - q));
                        }
                    }
                    Self::build(
                        entries,
                        SupportKind::Finite,
                        tail_epsilon,
                        Some(format!("d-ary({d})")),
                    )
                } else {
                    Err(OffspringError::UnknownBuiltin(other.to_string()))
                }
            }
        }
    }

    /// Parses a distribution spec: a builtin name (`plane`, `full-binary`,
    /// `motzkin`, `labeled`, `d-ary(3)` or `d-ary:3`) or an explicit pmf
    /// `"0:0.5,2:0.5"` (validated for criticality).
    pub fn parse_spec(spec: &str, tail_epsilon: f64) -> Result<Self, OffspringError> {
        let spec = spec.trim();
        if spec.contains(':') && !spec.starts_with("d-ary") {
            let mut entries = Vec::new();
            for part in spec.split(',') {
                let (deg, prob) = part
                    .split_once(':')
                    .ok_or_else(|| OffspringError::BadSpec(spec.to_string()))?;
                let d: u32 = deg
                    .trim()
                    .parse()
                    .map_err(|_| OffspringError::BadSpec(spec.to_string()))?;
                let p: f64 = prob
                    .trim()
                    .parse()
                    .map_err(|_| OffspringError::BadSpec(spec.to_string()))?;
                entries.push((d, p));
            }
            entries.sort_by_key(|&(d, _)| d);
            Self::from_pmf(entries)
        } else {
            Self::builtin(spec, tail_epsilon)
        }
    }

    fn build(
        entries: Vec<(u32, f64)>,
        support_kind: SupportKind,
        tail_epsilon: f64,
        name: Option<String>,
    ) -> Result<Self, OffspringError> {
        if entries.len() < 2 {
            return Err(OffspringError::DegeneratePmf);
        }
        for w in entries.windows(2) {
            if w[0].0 >= w[1].0 {
                return Err(OffspringError::BadEntry(w[1].0));
            }
        }
        for &(d, p) in &entries {
            if !(p > 0.0 && p.is_finite()) {
                return Err(OffspringError::BadEntry(d));
            }
        }
        // Renormalize exactly once (compensated sum) so that truncated laws
        // and user pmfs with benign rounding both pass the strict sum check.
        let total = kahan_sum(entries.iter().map(|&(_, p)| p));
        if (total - 1.0).abs() > 1e-6 {
            return Err(OffspringError::NotNormalized(total));
        }
        let entries: Vec<(u32, f64)> = entries.into_iter().map(|(d, p)| (d, p / total)).collect();

        let sum = kahan_sum(entries.iter().map(|&(_, p)| p));
        if (sum - 1.0).abs() > SUM_TOL {
            return Err(OffspringError::NotNormalized(sum));
        }
        let mean = kahan_sum(entries.iter().map(|&(d, p)| d as f64 * p));
        if (mean - 1.0).abs() > MEAN_TOL {
            return Err(OffspringError::NotCritical(mean));
        }
        let second = kahan_sum(entries.iter().map(|&(d, p)| (d as f64) * (d as f64) * p));
        let sigma2 = second - 1.0;
        if !(sigma2 > 0.0 && sigma2.is_finite()) {
            return Err(OffspringError::BadVariance(sigma2));
        }
        if entries[0].0 != 0 {
            // Criticality with p_0 = 0 is impossible, but guard anyway.
            return Err(OffspringError::DegeneratePmf);
        }

        let max_degree = entries.last().unwrap().0;
        let mut dense = vec![0.0; max_degree as usize + 1];
        for &(d, p) in &entries {
            dense[d as usize] = p;
        }
        let span = entries
            .iter()
            .skip(1)
            .fold(0u32, |g, &(d, _)| gcd(g, d));
        let p_max = entries.iter().map(|&(_, p)| p).fold(0.0f64, f64::max);

        let mut hasher = DefaultHasher::new();
        for &(d, p) in &entries {
            d.hash(&mut hasher);
            p.to_bits().hash(&mut hasher);
        }
        (support_kind == SupportKind::Truncated).hash(&mut hasher);
        let fingerprint = hasher.finish();

        let kind = detect_sampler_kind(&entries, support_kind);
        let alias = WeightedAliasIndex::new(entries.iter().map(|&(_, p)| p).collect())
            .map_err(|_| OffspringError::DegeneratePmf)?;

        let name = name.unwrap_or_else(|| {
            entries
                .iter()
                .map(|(d, p)| format!("{d}:{p}"))
                .collect::<Vec<_>>()
                .join(",")
        });

        Ok(Self {
            entries,
            dense,
            support_kind,
            tail_epsilon,
            sigma2,
            span,
            p_max,
            fingerprint,
            kind,
            alias,
            name,
        })
    }

    /// Probability of degree `d` (zero off the stored support).
    #[inline]
    pub fn p(&self, d: u32) -> f64 {
        self.dense.get(d as usize).copied().unwrap_or(0.0)
    }

    /// Sorted `(degree, probability)` pairs of the stored support.
    pub fn entries(&self) -> &[(u32, f64)] {
        &self.entries
    }

    /// Largest stored degree (the truncation cutoff for unbounded laws).
    pub fn max_degree(&self) -> u32 {
        self.entries.last().unwrap().0
    }

    pub fn support_kind(&self) -> SupportKind {
        self.support_kind
    }

    pub fn tail_epsilon(&self) -> f64 {
        self.tail_epsilon
    }

    /// Variance of the offspring law.
    pub fn sigma2(&self) -> f64 {
        self.sigma2
    }

    /// Span: gcd of the supported positive degrees.  Conditioned trees exist
    /// only along sizes `n ≡ 1 (mod span)`.
    pub fn span(&self) -> u32 {
        self.span
    }

    /// Largest single-degree probability.
    pub fn p_max(&self) -> f64 {
        self.p_max
    }

    /// Hash of the stored pmf, used as a cache key.
    pub fn fingerprint(&self) -> u64 {
        self.fingerprint
    }

    /// Human-readable name (builtin name or explicit pmf spec).
    pub fn name(&self) -> &str {
        &self.name
    }

    pub(crate) fn sampler_kind(&self) -> SamplerKind {
        self.kind
    }

    /// Draws one degree.  O(1) amortized: bit tricks for the structural fast
    /// paths, an alias table otherwise.
    #[inline]
    pub fn sample_degree<R: Rng + ?Sized>(&self, rng: &mut R) -> u32 {
        match self.kind {
            SamplerKind::TwoPointHalf { d } => {
                if rng.random::<u64>() & 1 == 1 {
                    d
                } else {
                    0
                }
            }
            SamplerKind::GeometricHalf { cutoff } => 'redraw: loop {
                // Degree = number of failures before the first success in a
                // fair-bit stream; a draw past the cutoff is rejected whole
                // (truncation = conditioning on degree <= cutoff).
                let mut run = 0u32;
                loop {
                    let word = rng.random::<u64>();
                    if word != 0 {
                        run += word.trailing_zeros();
                        break;
                    }
                    run += 64;
                    if run > cutoff {
                        continue 'redraw;
                    }
                }
                if run <= cutoff {
                    return run;
                }
            },
            SamplerKind::UniformTriple => loop {
                let bits = rng.random::<u64>() & 3;
                if bits != 3 {
                    return bits as u32;
                }
            },
            SamplerKind::Alias => {
                let idx = self.alias.sample(rng);
                self.entries[idx].0
            }
        }
    }

    /// Computes the derived constants with the `L_k` table up to `k_max`.
    pub fn constants(&self, k_max: u32) -> DistributionConstants {
        let p0 = self.p(0);
        // w(i) = p_0 (p_i / p_0)^{1/i} for supported i >= 1.
        let w = |i: u32, p: f64| -> f64 { p0 * (p / p0).powf(1.0 / i as f64) };

        let mut l_table = Vec::with_capacity(k_max as usize);
        let mut running = p0;
        l_table.push(running);
        for k in 2..=k_max {
            let i = k - 1;
            let p = self.p(i);
            if p > 0.0 {
                running = running.min(w(i, p));
            }
            l_table.push(running);
        }

        // The limit over the full stored support, and the first attaining
        // index (0 encodes "attained by p_0 itself", i.e. kappa = 1).
        let mut l = p0;
        for &(i, p) in self.entries.iter().skip(1) {
            l = l.min(w(i, p));
        }
        let attains = |x: f64| -> bool { (x - l).abs() <= KAPPA_TOL * (1.0 + l.abs()) };
        let first_attain = if attains(p0) {
            0
        } else {
            self.entries
                .iter()
                .skip(1)
                .find(|&&(i, p)| attains(w(i, p)))
                .map(|&(i, _)| i)
                .unwrap_or(self.max_degree())
        };

        let truncated_min = self.support_kind == SupportKind::Truncated
            && first_attain == self.max_degree()
            && first_attain > 0;
        let kappa = if truncated_min {
            None
        } else if first_attain == 0 {
            Some(1)
        } else {
            Some(first_attain)
        };

        DistributionConstants {
            sigma2: self.sigma2,
            span: self.span,
            p_max: self.p_max,
            l_table,
            l,
            kappa,
            truncated_min,
        }
    }
}

impl fmt::Display for OffspringDistribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.name)
    }
}

fn parse_dary(s: &str) -> Option<u32> {
    let rest = s.strip_prefix("d-ary")?;
    let inner = rest
        .strip_prefix('(')
        .and_then(|r| r.strip_suffix(')'))
        .or_else(|| rest.strip_prefix(':'))?;
    inner.trim().parse().ok()
}

fn detect_sampler_kind(entries: &[(u32, f64)], support: SupportKind) -> SamplerKind {
    let close = |a: f64, b: f64| (a - b).abs() <= 1e-13;
    if entries.len() == 2 && close(entries[0].1, 0.5) && close(entries[1].1, 0.5) {
        return SamplerKind::TwoPointHalf { d: entries[1].0 };
    }
    if entries.len() == 3
        && entries[0].0 == 0
        && entries[1].0 == 1
        && entries[2].0 == 2
        && entries.iter().all(|&(_, p)| close(p, 1.0 / 3.0))
    {
        return SamplerKind::UniformTriple;
    }
    if support == SupportKind::Truncated {
        let cutoff = entries.last().unwrap().0;
        let contiguous = entries.len() as u32 == cutoff + 1;
        let renorm = 1.0 - 0.5f64.powi(cutoff as i32 + 1);
        let geometric = contiguous
            && entries
                .iter()
                .all(|&(i, p)| (p - 0.5f64.powi(i as i32 + 1) / renorm).abs() <= 1e-13);
        if geometric {
            return SamplerKind::GeometricHalf { cutoff };
        }
    }
    SamplerKind::Alias
}

fn kahan_sum(values: impl Iterator<Item = f64>) -> f64 {
    let mut sum = 0.0;
    let mut c = 0.0;
    for v in values {
        let y = v - c;
        let t = sum + y;
        c = (t - sum) - y;
        sum = t;
    }
    sum
}

fn gcd(a: u32, b: u32) -> u32 {
    if a == 0 {
        b
    } else {
        gcd(b % a, a)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::rngs::SmallRng;
    use rand::SeedableRng;

    const EPS: f64 = 1e-15;

    fn builtins() -> Vec<OffspringDistribution> {
        ["plane", "full-binary", "motzkin", "d-ary(3)", "labeled"]
            .iter()
            .map(|n| OffspringDistribution::builtin(n, EPS).unwrap())
            .collect()
    }

    #[test]
    fn builtin_pmfs_match_definitions() {
        let fb = OffspringDistribution::builtin("full-binary", EPS).unwrap();
        assert_eq!(fb.entries(), &[(0, 0.5), (2, 0.5)]);

        let mz = OffspringDistribution::builtin("motzkin", EPS).unwrap();
        for d in 0..=2 {
            assert!((mz.p(d) - 1.0 / 3.0).abs() < 1e-15);
        }

        let pl = OffspringDistribution::builtin("plane", EPS).unwrap();
        // Geometric(1/2) up to the cutoff, lightly renormalized.
        for i in 0..=5u32 {
            assert!((pl.p(i) - 0.5f64.powi(i as i32 + 1)).abs() < 1e-13);
        }
        assert_eq!(pl.support_kind(), SupportKind::Truncated);
    }

    #[test]
    fn builtins_are_normalized_and_critical() {
        for d in builtins() {
            let sum = kahan_sum(d.entries().iter().map(|&(_, p)| p));
            assert!((sum - 1.0).abs() <= 1e-12, "{}: sum {sum}", d.name());
            let mean = kahan_sum(d.entries().iter().map(|&(i, p)| i as f64 * p));
            assert!((mean - 1.0).abs() <= 1e-9, "{}: mean {mean}", d.name());
            assert!(d.sigma2() > 0.0);
        }
    }

    #[test]
    fn spans() {
        let by_name = |n: &str| OffspringDistribution::builtin(n, EPS).unwrap().span();
        assert_eq!(by_name("full-binary"), 2);
        assert_eq!(by_name("motzkin"), 1);
        assert_eq!(by_name("labeled"), 1);
        assert_eq!(by_name("plane"), 1);
        assert_eq!(by_name("d-ary(3)"), 1);
    }

    #[test]
    fn l_closed_forms() {
        let l_of = |n: &str| OffspringDistribution::builtin(n, EPS).unwrap().constants(200).l;
        assert!((l_of("full-binary") - 0.5).abs() <= 1e-12);
        assert!((l_of("motzkin") - 1.0 / 3.0).abs() <= 1e-12);
        assert!((l_of("d-ary(3)") - 4.0 / 27.0).abs() <= 1e-12);
        assert!((l_of("plane") - 0.25).abs() <= 1e-12);
    }

    #[test]
    fn plane_l_table_is_constant_quarter() {
        let c = OffspringDistribution::builtin("plane", EPS)
            .unwrap()
            .constants(50);
        for (k, &lk) in c.l_table.iter().enumerate() {
            if k == 0 {
                assert!((lk - 0.5).abs() <= 1e-12); // L_1 = p_0
            } else {
                assert!((lk - 0.25).abs() <= 1e-12, "L_{} = {lk}", k + 1);
            }
        }
        assert_eq!(c.kappa, Some(1));
        assert!(!c.truncated_min);
    }

    #[test]
    fn l_table_monotone_for_all_builtins() {
        for d in builtins() {
            let c = d.constants(200);
            for w in c.l_table.windows(2) {
                assert!(w[1] <= w[0] + 1e-15, "{}: L_k increased", d.name());
            }
            assert!(c.l <= c.p_max && c.l >= 0.0 && c.p_max < 1.0);
        }
    }

    #[test]
    fn kappa_and_truncation_flags() {
        let fb = OffspringDistribution::builtin("full-binary", EPS).unwrap();
        assert_eq!(fb.constants(10).kappa, Some(1)); // L = p_0 = 1/2

        let da = OffspringDistribution::builtin("d-ary(3)", EPS).unwrap();
        assert_eq!(da.constants(10).kappa, Some(3)); // L = w(3) = 4/27

        // Poisson(1): w(i) strictly decreasing, so the minimum sits at the
        // truncation cutoff and kappa is infinite with a caveat.
        let lb = OffspringDistribution::builtin("labeled", EPS).unwrap();
        let c = lb.constants(10);
        assert_eq!(c.kappa, None);
        assert!(c.truncated_min);
    }

    #[test]
    fn sample_degree_frequencies() {
        let mut rng = SmallRng::seed_from_u64(7);
        let fb = OffspringDistribution::builtin("full-binary", EPS).unwrap();
        let zeros = (0..1_000_000)
            .filter(|_| fb.sample_degree(&mut rng) == 0)
            .count();
        let frac = zeros as f64 / 1e6;
        assert!((frac - 0.5).abs() < 0.002, "leaf fraction {frac}");

        let mz = OffspringDistribution::builtin("motzkin", EPS).unwrap();
        for _ in 0..100_000 {
            assert!(mz.sample_degree(&mut rng) <= 2);
        }

        let lb = OffspringDistribution::builtin("labeled", EPS).unwrap();
        let mean: f64 =
            (0..1_000_000).map(|_| lb.sample_degree(&mut rng) as f64).sum::<f64>() / 1e6;
        assert!((mean - 1.0).abs() < 0.005, "labeled mean {mean}");

        let pl = OffspringDistribution::builtin("plane", EPS).unwrap();
        let ones = (0..1_000_000)
            .filter(|_| pl.sample_degree(&mut rng) == 1)
            .count();
        let frac = ones as f64 / 1e6;
        assert!((frac - 0.25).abs() < 0.002, "plane degree-1 fraction {frac}");
    }

    #[test]
    fn explicit_spec_roundtrip_and_validation() {
        let d = OffspringDistribution::parse_spec("0:0.5,2:0.5", EPS).unwrap();
        assert_eq!(d.entries(), &[(0, 0.5), (2, 0.5)]);
        assert_eq!(d.sampler_kind(), SamplerKind::TwoPointHalf { d: 2 });

        // Subcritical pmf rejected.
        assert!(matches!(
            OffspringDistribution::parse_spec("0:0.6,2:0.4", EPS),
            Err(OffspringError::NotCritical(_))
        ));
        // Unknown name rejected; bad arity rejected.
        assert!(OffspringDistribution::builtin("cayley", EPS).is_err());
        assert!(matches!(
            OffspringDistribution::builtin("d-ary(1)", EPS),
            Err(OffspringError::BadArity(1))
        ));
    }

    #[test]
    fn dary_spec_forms() {
        let a = OffspringDistribution::parse_spec("d-ary(4)", EPS).unwrap();
        let b = OffspringDistribution::parse_spec("d-ary:4", EPS).unwrap();
        assert_eq!(a.fingerprint(), b.fingerprint());
        assert_eq!(a.max_degree(), 4);
    }
}
