//! Brute-force ground truth at small sizes: the exact law of the conditioned
//! tree by full enumeration, and exact distributions/moments of count
//! statistics under that law.
//!
//! The oracle deliberately does not reuse the census module's sequence-scan
//! matchers: it parses trees into a pointer structure and matches
//! recursively, so a shared bug cannot hide in cross-validation tests.

use std::collections::BTreeMap;
use std::collections::HashMap;

use thiserror::Error;

use crate::census::CountMode;
use crate::exact;
use crate::offspring::OffspringDistribution;
use crate::tree::{self, PlaneTree};

/// Enumeration cap: Catalan(11) = 58786 trees at n = 12.
pub const ORACLE_CAP: usize = 12;

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("oracle is capped at n <= {ORACLE_CAP}, got {0}")]
    TooLarge(usize),
    #[error("no tree of size {0} has positive probability")]
    ZeroMass(usize),
    #[error(transparent)]
    Tree(#[from] tree::TreeError),
}

/// The exact law of the conditioned tree at size `n`.
#[derive(Debug, Clone)]
pub struct ExactLaw {
    pub n: usize,
    /// `(tree, conditional probability)` pairs, probabilities summing to 1.
    pub entries: Vec<(PlaneTree, f64)>,
    /// Unnormalized mass `P(|𝒯| = n)` before conditioning.
    pub total_mass: f64,
}

impl ExactLaw {
    pub fn prob_of(&self, t: &PlaneTree) -> f64 {
        self.entries
            .iter()
            .find(|(e, _)| e == t)
            .map(|&(_, p)| p)
            .unwrap_or(0.0)
    }

    /// Total-variation distance to an empirical histogram of `total` draws.
    pub fn tv_to_empirical(&self, counts: &HashMap<PlaneTree, u64>, total: u64) -> f64 {
        let mut tv = 0.0;
        for (t, p) in &self.entries {
            let emp = counts.get(t).copied().unwrap_or(0) as f64 / total as f64;
            tv += (p - emp).abs();
        }
        // Mass the empirical law puts outside the support (impossible for a
        // correct sampler, counted defensively).
        let stray: u64 = counts
            .iter()
            .filter(|(t, _)| self.prob_of(t) == 0.0)
            .map(|(_, &c)| c)
            .sum();
        tv += stray as f64 / total as f64;
        tv / 2.0
    }
}

/// Enumerates all trees of size `n`, weights them by their unconditional
/// probability, and normalizes.
pub fn exact_conditional_distribution(
    dist: &OffspringDistribution,
    n: usize,
) -> Result<ExactLaw, OracleError> {
    if n > ORACLE_CAP {
        return Err(OracleError::TooLarge(n));
    }
    let mut entries: Vec<(PlaneTree, f64)> = Vec::new();
    let mut total_mass = 0.0;
    for t in tree::enumerate_possible_exact(dist, n)? {
        let p = exact::prob_tree(dist, &t);
        if p > 0.0 {
            total_mass += p;
            entries.push((t, p));
        }
    }
    if total_mass <= 0.0 {
        return Err(OracleError::ZeroMass(n));
    }
    for (_, p) in &mut entries {
        *p /= total_mass;
    }
    Ok(ExactLaw { n, entries, total_mass })
}

/// Exact pushforward of the conditional law under a count statistic.
#[derive(Debug, Clone)]
pub struct CountPmf {
    pub pmf: BTreeMap<u64, f64>,
    pub mean: f64,
    pub variance: f64,
    pub second_factorial: f64,
    /// `n π(pattern)` or `n π^nf(pattern)`, the Poisson reference mean.
    pub reference_mean: f64,
    /// Exact TV distance to `Po(reference_mean)`.
    pub tv_to_poisson: f64,
}

/// Computes the exact pmf and moments of the fringe or non-fringe count of
/// `pattern` under the conditioned tree of size `n`.
pub fn exact_count_pmf(
    dist: &OffspringDistribution,
    n: usize,
    pattern: &PlaneTree,
    mode: CountMode,
) -> Result<CountPmf, OracleError> {
    let law = exact_conditional_distribution(dist, n)?;
    let pattern_node = Node::parse(pattern);
    let mut pmf: BTreeMap<u64, f64> = BTreeMap::new();
    let mut mean = 0.0;
    let mut second = 0.0;
    let mut second_factorial = 0.0;
    for (t, p) in &law.entries {
        let host = Node::parse(t);
        let c = host.count_matches(&pattern_node, mode);
        *pmf.entry(c).or_insert(0.0) += p;
        let cf = c as f64;
        mean += cf * p;
        second += cf * cf * p;
        second_factorial += cf * (cf - 1.0) * p;
    }
    let variance = second - mean * mean;

    // Poisson reference: n times the root occurrence probability, computed
    // locally from the pmf (kept independent of the exact module).
    let pi: f64 = pattern
        .degrees()
        .iter()
        .filter(|&&d| mode == CountMode::Fringe || d > 0)
        .map(|&d| dist.p(d))
        .product();
    let reference_mean = n as f64 * pi;
    let poisson = exact::poisson_pmf(reference_mean);
    let max_count = pmf.keys().next_back().copied().unwrap_or(0) as usize;
    let mut tv = 0.0;
    for k in 0..=max_count.max(poisson.len().saturating_sub(1)) {
        let a = pmf.get(&(k as u64)).copied().unwrap_or(0.0);
        let b = poisson.get(k).copied().unwrap_or(0.0);
        tv += (a - b).abs();
    }
    let tv_to_poisson = tv / 2.0;

    Ok(CountPmf { pmf, mean, variance, second_factorial, reference_mean, tv_to_poisson })
}

/// Pointer-structure tree used by the oracle's independent matchers.
struct Node {
    children: Vec<Node>,
}

impl Node {
    fn parse(t: &PlaneTree) -> Node {
        fn go(degrees: &[u32], idx: &mut usize) -> Node {
            let d = degrees[*idx];
            *idx += 1;
            let children = (0..d).map(|_| go(degrees, idx)).collect();
            Node { children }
        }
        let mut idx = 0;
        let node = go(t.degrees(), &mut idx);
        debug_assert_eq!(idx, t.size());
        node
    }

    fn shape_eq(&self, other: &Node) -> bool {
        self.children.len() == other.children.len()
            && self
                .children
                .iter()
                .zip(&other.children)
                .all(|(a, b)| a.shape_eq(b))
    }

    fn nonfringe_at(&self, pattern: &Node) -> bool {
        if pattern.children.is_empty() {
            return true; // pattern leaf matches any subtree
        }
        self.children.len() == pattern.children.len()
            && self
                .children
                .iter()
                .zip(&pattern.children)
                .all(|(h, p)| h.nonfringe_at(p))
    }

    fn count_matches(&self, pattern: &Node, mode: CountMode) -> u64 {
        let here = match mode {
            CountMode::Fringe => self.shape_eq(pattern),
            CountMode::Nonfringe => self.nonfringe_at(pattern),
        };
        here as u64
            + self
                .children
                .iter()
                .map(|c| c.count_matches(pattern, mode))
                .sum::<u64>()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::census;

    const EPS: f64 = 1e-15;

    fn dist(name: &str) -> OffspringDistribution {
        OffspringDistribution::builtin(name, EPS).unwrap()
    }

    fn t(s: &str) -> PlaneTree {
        s.parse().unwrap()
    }

    #[test]
    fn law_examples() {
        let fb = dist("full-binary");
        let law = exact_conditional_distribution(&fb, 3).unwrap();
        assert_eq!(law.entries.len(), 1);
        assert_eq!(law.entries[0].0, t("2,0,0"));
        assert!((law.entries[0].1 - 1.0).abs() < 1e-15);

        let pl = dist("plane");
        let law = exact_conditional_distribution(&pl, 4).unwrap();
        assert_eq!(law.entries.len(), 5);
        for (_, p) in &law.entries {
            assert!((p - 0.2).abs() < 1e-12);
        }

        let mz = dist("motzkin");
        let law = exact_conditional_distribution(&mz, 3).unwrap();
        assert_eq!(law.entries.len(), 2);
        for (tree, p) in &law.entries {
            assert!((p - 0.5).abs() < 1e-12, "{tree}");
        }
    }

    #[test]
    fn law_mass_matches_convolution() {
        for name in ["plane", "motzkin", "full-binary", "labeled"] {
            let d = dist(name);
            for n in 1..=9usize {
                let mass = exact::prob_total_size(&d, n as u64).unwrap();
                match exact_conditional_distribution(&d, n) {
                    Ok(law) => {
                        assert!(
                            (law.total_mass - mass).abs() <= 1e-12 * mass,
                            "{name} n={n}: {} vs {mass}",
                            law.total_mass
                        );
                        let sum: f64 = law.entries.iter().map(|&(_, p)| p).sum();
                        assert!((sum - 1.0).abs() < 1e-12);
                    }
                    Err(OracleError::ZeroMass(_)) => assert_eq!(mass, 0.0, "{name} n={n}"),
                    Err(e) => panic!("{e}"),
                }
            }
        }
    }

    #[test]
    fn count_pmf_examples() {
        let mz = dist("motzkin");
        // A leaf pattern in nonfringe mode matches every node.
        let r = exact_count_pmf(&mz, 7, &PlaneTree::leaf(), CountMode::Nonfringe).unwrap();
        assert_eq!(r.pmf.len(), 1);
        assert!((r.pmf[&7] - 1.0).abs() < 1e-12);
        assert!((r.mean - 7.0).abs() < 1e-12);
        assert!(r.variance.abs() < 1e-12);

        // Both size-5 full binary trees hold exactly one cherry.
        let fb = dist("full-binary");
        let r = exact_count_pmf(&fb, 5, &t("2,0,0"), CountMode::Fringe).unwrap();
        assert_eq!(r.pmf.len(), 1);
        assert!((r.pmf[&1] - 1.0).abs() < 1e-12);
        assert!((r.mean - 1.0).abs() < 1e-12);
    }

    #[test]
    fn oracle_matchers_agree_with_census() {
        // The independent recursive matcher and the sequence scans must
        // agree on every (host, pattern) pair at small sizes.
        let hosts = tree::enumerate_trees(6).unwrap();
        let patterns: Vec<PlaneTree> = (1..=4usize)
            .flat_map(|k| tree::enumerate_trees(k).unwrap())
            .collect();
        for host in &hosts {
            let node = Node::parse(host);
            for pat in &patterns {
                let pnode = Node::parse(pat);
                assert_eq!(
                    node.count_matches(&pnode, CountMode::Fringe),
                    census::count_fringe(host, pat),
                    "fringe host={host} pat={pat}"
                );
                assert_eq!(
                    node.count_matches(&pnode, CountMode::Nonfringe),
                    census::count_nonfringe(host, pat),
                    "nonfringe host={host} pat={pat}"
                );
            }
        }
    }

    #[test]
    fn cap_enforced() {
        let mz = dist("motzkin");
        assert!(matches!(
            exact_conditional_distribution(&mz, 13),
            Err(OracleError::TooLarge(13))
        ));
        let fb = dist("full-binary");
        assert!(matches!(
            exact_conditional_distribution(&fb, 4),
            Err(OracleError::ZeroMass(4))
        ));
    }
}
