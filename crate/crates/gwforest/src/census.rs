//! Subtree censuses of a plane tree.
//!
//! Fringe occurrences of a pattern are exact factor matches of the pattern's
//! degree sequence inside the host's (prefix-freeness of valid sequences
//! guarantees a factor match is a fringe subtree).  Non-fringe occurrences
//! allow pattern leaves to stand for arbitrary host subtrees while internal
//! pattern nodes must match degrees exactly.  The module also computes
//! maximal complete r-ary fringe/non-fringe heights and the all-trees
//! threshold `K`.

use std::collections::{BTreeMap, HashSet};

use serde::Serialize;
use thiserror::Error;

use crate::offspring::OffspringDistribution;
use crate::tree::{self, PlaneTree};

/// Default cap for the all-trees threshold scan.
pub const K_CAP_DEFAULT: u32 = 16;
/// Hard cap for the all-trees threshold scan.
pub const K_CAP_MAX: u32 = 16;

#[derive(Debug, Error)]
pub enum CensusError {
    #[error("k must be between 1 and the host size")]
    BadSizeClass,
    #[error("k_cap {0} exceeds the hard cap {K_CAP_MAX}")]
    KCapTooLarge(u32),
    #[error(transparent)]
    Tree(#[from] tree::TreeError),
}

/// Counting mode shared by census, oracle, and the CLI.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CountMode {
    Fringe,
    Nonfringe,
}

impl std::str::FromStr for CountMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "fringe" => Ok(CountMode::Fringe),
            "nonfringe" => Ok(CountMode::Nonfringe),
            other => Err(format!("unknown mode `{other}` (expected fringe|nonfringe)")),
        }
    }
}

/// Number of fringe occurrences of `pattern` in `host`: positions where the
/// host's degree sequence contains the pattern's as a factor.  Linear-time
/// string matching.
pub fn count_fringe(host: &PlaneTree, pattern: &PlaneTree) -> u64 {
    let h = host.degrees();
    let p = pattern.degrees();
    let k = p.len();
    if k > h.len() {
        return 0;
    }
    // Knuth-Morris-Pratt failure function.
    let mut fail = vec![0usize; k];
    let mut j = 0;
    for i in 1..k {
        while j > 0 && p[i] != p[j] {
            j = fail[j - 1];
        }
        if p[i] == p[j] {
            j += 1;
        }
        fail[i] = j;
    }
    let mut count = 0u64;
    let mut j = 0;
    for &c in h {
        while j > 0 && c != p[j] {
            j = fail[j - 1];
        }
        if c == p[j] {
            j += 1;
        }
        if j == k {
            count += 1;
            j = fail[k - 1];
        }
    }
    count
}

/// Quadratic reference implementation of [`count_fringe`].
pub fn count_fringe_naive(host: &PlaneTree, pattern: &PlaneTree) -> u64 {
    let p = pattern.degrees();
    host.degrees()
        .windows(p.len())
        .filter(|w| *w == p)
        .count() as u64
}

/// Number of fringe subtrees of `host` with exactly `k` nodes.
pub fn count_fringe_size(host: &PlaneTree, k: usize) -> Result<u64, CensusError> {
    if k < 1 || k > host.size() {
        return Err(CensusError::BadSizeClass);
    }
    Ok(host
        .subtree_sizes()
        .iter()
        .filter(|&&s| s as usize == k)
        .count() as u64)
}

/// Number of nodes `v` of `host` whose subtree contains `pattern` as a
/// non-fringe subtree rooted at `v`: internal pattern nodes require equal
/// host degree, pattern leaves match any host subtree.  O(n * |pattern|).
pub fn count_nonfringe(host: &PlaneTree, pattern: &PlaneTree) -> u64 {
    let sizes = host.subtree_sizes();
    (0..host.size())
        .filter(|&i| nonfringe_match_at(host, &sizes, pattern, i))
        .count() as u64
}

/// Does `pattern` match non-fringe at 0-based preorder position `i` of
/// `host`?  `sizes` must be `host.subtree_sizes()`.
pub(crate) fn nonfringe_match_at(
    host: &PlaneTree,
    sizes: &[u32],
    pattern: &PlaneTree,
    i: usize,
) -> bool {
    let h = host.degrees();
    let p = pattern.degrees();
    let mut hi = i;
    for &pd in p {
        if hi >= h.len() {
            return false;
        }
        if pd == 0 {
            // Pattern leaf: swallow the whole host subtree here.
            hi += sizes[hi] as usize;
        } else {
            if h[hi] != pd {
                return false;
            }
            hi += 1;
        }
    }
    true
}

/// Maximal height of a complete r-ary tree occurring as a fringe subtree.
/// A leaf counts as height 0; a node of degree `r` whose children are all
/// complete r-ary of one common height `h` roots a complete tree of height
/// `h + 1`.  Single right-to-left scan.
pub fn max_r_ary_fringe_height(host: &PlaneTree, r: u32) -> u32 {
    assert!(r >= 1);
    let degrees = host.degrees();
    // stack entries: Some(h) if the subtree is exactly complete r-ary of
    // height h, None otherwise.
    let mut stack: Vec<Option<u32>> = Vec::new();
    let mut best = 0u32;
    for i in (0..degrees.len()).rev() {
        let d = degrees[i];
        let node = if d == 0 {
            Some(0)
        } else if d == r {
            let mut common: Option<u32> = None;
            let mut ok = true;
            for _ in 0..d {
                let child = stack.pop().expect("valid sequence");
                match (child, common) {
                    (Some(h), None) => common = Some(h),
                    (Some(h), Some(c)) if h == c => {}
                    _ => ok = false,
                }
            }
            if ok {
                common.map(|h| h + 1)
            } else {
                None
            }
        } else {
            for _ in 0..d {
                stack.pop();
            }
            None
        };
        if let Some(h) = node {
            best = best.max(h);
        }
        stack.push(node);
    }
    best
}

/// Maximal height of a complete r-ary tree occurring as a non-fringe subtree:
/// `nf(v) = 0` when `deg(v) != r`, else `1 + min` over children.
pub fn max_r_ary_nonfringe_height(host: &PlaneTree, r: u32) -> u32 {
    assert!(r >= 1);
    let degrees = host.degrees();
    let mut stack: Vec<u32> = Vec::new();
    let mut best = 0u32;
    for i in (0..degrees.len()).rev() {
        let d = degrees[i];
        let nf = if d == r {
            let mut min_child = u32::MAX;
            for _ in 0..d {
                min_child = min_child.min(stack.pop().expect("valid sequence"));
            }
            1 + min_child
        } else {
            for _ in 0..d {
                stack.pop();
            }
            0
        };
        best = best.max(nf);
        stack.push(nf);
    }
    best
}

/// Result of the all-trees threshold scan.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct KReport {
    /// Largest reachable size `k <= k_cap` such that every possible tree of
    /// size at most `k` occurs as a fringe subtree.  Sizes at which no
    /// possible tree exists (span gaps) do not extend `k`.
    pub k: u32,
    /// True when the scan hit `k_cap` without a missing tree, i.e. the true
    /// threshold may exceed the cap.
    pub saturated: bool,
}

/// Computes the all-trees threshold of `host` under `dist`, scanning sizes
/// `1..=k_cap`.
pub fn compute_k(
    host: &PlaneTree,
    dist: &OffspringDistribution,
    k_cap: u32,
) -> Result<KReport, CensusError> {
    if k_cap > K_CAP_MAX {
        return Err(CensusError::KCapTooLarge(k_cap));
    }
    // One pass collecting the keys of all fringe subtrees of size <= k_cap.
    let sizes = host.subtree_sizes();
    let degrees = host.degrees();
    let mut present: HashSet<&[u32]> = HashSet::new();
    for i in 0..host.size() {
        let s = sizes[i] as usize;
        if s <= k_cap as usize {
            present.insert(&degrees[i..i + s]);
        }
    }
    let mut best = 0u32;
    let mut saturated = true;
    for k in 1..=k_cap {
        let possible = tree::enumerate_possible_exact(dist, k as usize)?;
        if possible
            .iter()
            .any(|t| !present.contains(t.degrees()))
        {
            saturated = false;
            break;
        }
        if !possible.is_empty() {
            best = k;
        }
    }
    Ok(KReport { k: best, saturated })
}

/// A full census of one host tree.
#[derive(Debug, Clone, Serialize)]
pub struct CensusReport {
    pub n: usize,
    /// Fringe occurrence counts per queried pattern key.
    pub fringe_counts: BTreeMap<String, u64>,
    /// Fringe subtree counts per queried size class.
    pub size_counts: BTreeMap<u32, u64>,
    /// Non-fringe occurrence counts per queried pattern key.
    pub nonfringe_counts: BTreeMap<String, u64>,
    /// Maximal complete r-ary fringe heights per queried r.
    pub h_r: BTreeMap<u32, u32>,
    /// Maximal complete r-ary non-fringe heights per queried r.
    pub h_r_nf: BTreeMap<u32, u32>,
    /// Queried r values with `p_r = 0` (their height families are trivial).
    pub r_impossible: Vec<u32>,
    pub k: u32,
    pub k_saturated: bool,
}

/// Runs every census the CLI exposes over one host.
pub fn census_report(
    host: &PlaneTree,
    dist: &OffspringDistribution,
    patterns: &[PlaneTree],
    size_ks: &[u32],
    rs: &[u32],
    k_cap: u32,
) -> Result<CensusReport, CensusError> {
    let mut fringe_counts = BTreeMap::new();
    let mut nonfringe_counts = BTreeMap::new();
    for p in patterns {
        fringe_counts.insert(p.key(), count_fringe(host, p));
        nonfringe_counts.insert(p.key(), count_nonfringe(host, p));
    }
    let mut size_counts = BTreeMap::new();
    for &k in size_ks {
        size_counts.insert(k, count_fringe_size(host, k as usize)?);
    }
    let mut h_r = BTreeMap::new();
    let mut h_r_nf = BTreeMap::new();
    let mut r_impossible = Vec::new();
    for &r in rs {
        h_r.insert(r, max_r_ary_fringe_height(host, r));
        h_r_nf.insert(r, max_r_ary_nonfringe_height(host, r));
        if dist.p(r) == 0.0 {
            r_impossible.push(r);
        }
    }
    let kr = compute_k(host, dist, k_cap)?;
    Ok(CensusReport {
        n: host.size(),
        fringe_counts,
        size_counts,
        nonfringe_counts,
        h_r,
        h_r_nf,
        r_impossible,
        k: kr.k,
        k_saturated: kr.saturated,
    })
}
