//! Plane trees as preorder degree sequences.
//!
//! A sequence `(d_1, ..., d_k)` of out-degrees in depth-first preorder
//! encodes a plane tree exactly when it satisfies the ballot condition
//!
//! ```text
//! d_1 + ... + d_j >= j  for 1 <= j < k,    d_1 + ... + d_k = k - 1.
//! ```
//!
//! Every algorithm in the crate works directly on these sequences; the
//! sequence itself is the canonical key for a tree (two plane trees are equal
//! iff their degree sequences are).

use std::fmt;
use std::str::FromStr;

use crate::offspring::OffspringDistribution;
use thiserror::Error;

/// Default cap for exhaustive enumeration (Catalan growth).
pub const ENUMERATION_CAP: usize = 20;
/// Cap on constructed tree sizes (guards `complete_r_ary` blow-up).
pub const SIZE_CAP: usize = 100_000_000;

#[derive(Debug, Error)]
pub enum TreeError {
    #[error("degree sequence violates the ballot condition")]
    Invalid,
    #[error("degree sequence must be non-empty")]
    Empty,
    #[error("no rotation of the sequence is a valid preorder degree sequence")]
    NoRotation,
    #[error("size {0} exceeds the configured cap {1}")]
    TooLarge(usize, usize),
    #[error("cannot parse tree `{0}`: expected comma-separated degrees")]
    Parse(String),
}

/// A plane tree stored as its preorder degree sequence.
///
/// Construction validates the ballot condition, so every `PlaneTree` in
/// circulation encodes a tree.  Equality/hashing are by the sequence, which
/// is a canonical form for plane trees.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PlaneTree {
    degrees: Vec<u32>,
}

impl serde::Serialize for PlaneTree {
    /// Serializes as the canonical text form, e.g. `"2,1,0"`.
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl PlaneTree {
    /// Validates and wraps a degree sequence.
    pub fn new(degrees: Vec<u32>) -> Result<Self, TreeError> {
        if degrees.is_empty() {
            return Err(TreeError::Empty);
        }
        if !validate(&degrees) {
            return Err(TreeError::Invalid);
        }
        Ok(Self { degrees })
    }

    /// Wraps a sequence already known to be valid (checked in debug builds).
    pub(crate) fn from_valid(degrees: Vec<u32>) -> Self {
        debug_assert!(validate(&degrees));
        Self { degrees }
    }

    /// The single-leaf tree.
    pub fn leaf() -> Self {
        Self { degrees: vec![0] }
    }

    pub fn degrees(&self) -> &[u32] {
        &self.degrees
    }

    /// Number of nodes.
    pub fn size(&self) -> usize {
        self.degrees.len()
    }

    /// Number of leaves.
    pub fn leaf_count(&self) -> usize {
        self.degrees.iter().filter(|&&d| d == 0).count()
    }

    /// Number of internal (positive-degree) nodes.
    pub fn internal_count(&self) -> usize {
        self.size() - self.leaf_count()
    }

    /// Canonical text key, e.g. `"2,1,0,3,0,0,0"`.
    pub fn key(&self) -> String {
        self.to_string()
    }

    /// Contiguous index range (1-based, inclusive) of the fringe subtree
    /// rooted at the `i`-th preorder node.  Prefix-freeness of valid degree
    /// sequences makes the span unambiguous.
    ///
    /// Panics if `i` is out of range.
    pub fn subtree_span(&self, i: usize) -> (usize, usize) {
        assert!(i >= 1 && i <= self.size(), "node index out of range");
        let mut balance: i64 = 0;
        for (off, &d) in self.degrees[i - 1..].iter().enumerate() {
            balance += d as i64 - 1;
            if balance == -1 {
                return (i, i + off);
            }
        }
        unreachable!("valid sequences close every subtree");
    }

    /// The fringe subtree rooted at the `i`-th preorder node (1-based).
    pub fn subtree(&self, i: usize) -> PlaneTree {
        let (a, b) = self.subtree_span(i);
        PlaneTree::from_valid(self.degrees[a - 1..b].to_vec())
    }

    /// Sizes of all fringe subtrees: `sizes[i]` is the size of the subtree
    /// rooted at preorder node `i + 1`.  One right-to-left stack scan.
    pub fn subtree_sizes(&self) -> Vec<u32> {
        let k = self.size();
        let mut sizes = vec![0u32; k];
        let mut stack: Vec<u32> = Vec::with_capacity(k);
        for i in (0..k).rev() {
            let mut s = 1u32;
            for _ in 0..self.degrees[i] {
                s += stack.pop().expect("valid sequence");
            }
            sizes[i] = s;
            stack.push(s);
        }
        sizes
    }

    /// Complete r-ary tree of height `h`: every internal node has degree `r`
    /// and every leaf sits at depth `h`.  For `r = 1` this is a chain of
    /// `h + 1` nodes.
    pub fn complete_r_ary(r: u32, h: u32) -> Result<Self, TreeError> {
        // size = (r^(h+1) - 1)/(r - 1) for r >= 2, h + 1 for r = 1.
        let mut size: usize = 1;
        for _ in 0..h {
            size = size
                .checked_mul(r as usize)
                .and_then(|s| s.checked_add(1))
                .ok_or(TreeError::TooLarge(usize::MAX, SIZE_CAP))?;
            if size > SIZE_CAP {
                return Err(TreeError::TooLarge(size, SIZE_CAP));
            }
        }
        let mut degrees = Vec::with_capacity(size);
        // Preorder: emit degree r at depths < h, 0 at depth h.
        fn emit(degrees: &mut Vec<u32>, r: u32, depth_left: u32) {
            if depth_left == 0 {
                degrees.push(0);
            } else {
                degrees.push(r);
                for _ in 0..r {
                    emit(degrees, r, depth_left - 1);
                }
            }
        }
        emit(&mut degrees, r, h);
        Ok(Self::from_valid(degrees))
    }

    /// Chain with `h` edges (`h + 1` nodes).
    pub fn chain(h: u32) -> Self {
        let mut degrees = vec![1u32; h as usize];
        degrees.push(0);
        Self::from_valid(degrees)
    }

    /// Star on `k` nodes: root of degree `k - 1`, all children leaves.
    pub fn star(k: usize) -> Result<Self, TreeError> {
        if k < 2 {
            return Err(TreeError::TooLarge(k, SIZE_CAP));
        }
        let mut degrees = vec![0u32; k];
        degrees[0] = (k - 1) as u32;
        Ok(Self::from_valid(degrees))
    }
}

impl fmt::Display for PlaneTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for d in &self.degrees {
            if !first {
                write!(f, ",")?;
            }
            write!(f, "{d}")?;
            first = false;
        }
        Ok(())
    }
}

impl FromStr for PlaneTree {
    type Err = TreeError;

    fn from_str(s: &str) -> Result<Self, TreeError> {
        let degrees: Result<Vec<u32>, _> =
            s.split(',').map(|p| p.trim().parse::<u32>()).collect();
        let degrees = degrees.map_err(|_| TreeError::Parse(s.to_string()))?;
        PlaneTree::new(degrees)
    }
}

/// Checks the ballot condition: partial degree sums stay at or above the
/// position for every proper prefix, and the total is `k - 1`.
pub fn validate(degrees: &[u32]) -> bool {
    if degrees.is_empty() {
        return false;
    }
    let k = degrees.len() as i64;
    let mut sum: i64 = 0;
    for (j, &d) in degrees.iter().enumerate() {
        sum += d as i64;
        let j = j as i64 + 1;
        if j < k && sum < j {
            return false;
        }
    }
    sum == k - 1
}

/// Finds the unique cyclic offset `r` such that
/// `degrees[r..] ++ degrees[..r]` satisfies the ballot condition.
///
/// Requires `sum(degrees) == len - 1`; by the cycle lemma exactly one offset
/// works, namely the position right after the first minimum of the walk
/// `w_j = sum_{i<=j} (d_i - 1)`.  O(k), single scan.
pub fn unique_rotation(degrees: &[u32]) -> Result<usize, TreeError> {
    if degrees.is_empty() {
        return Err(TreeError::Empty);
    }
    let k = degrees.len();
    let total: i64 = degrees.iter().map(|&d| d as i64).sum();
    if total != k as i64 - 1 {
        return Err(TreeError::NoRotation);
    }
    let mut walk: i64 = 0;
    let mut min = i64::MAX;
    let mut argmin = 0usize;
    for (j, &d) in degrees.iter().enumerate() {
        walk += d as i64 - 1;
        if walk < min {
            min = walk;
            argmin = j;
        }
    }
    Ok((argmin + 1) % k)
}

/// Applies `unique_rotation` and returns the rotated tree.
pub fn rotate_to_tree(degrees: &[u32]) -> Result<PlaneTree, TreeError> {
    let r = unique_rotation(degrees)?;
    let mut rotated = Vec::with_capacity(degrees.len());
    rotated.extend_from_slice(&degrees[r..]);
    rotated.extend_from_slice(&degrees[..r]);
    Ok(PlaneTree::from_valid(rotated))
}

/// All plane trees of size exactly `k`, in lexicographic degree-sequence
/// order.  There are Catalan(k - 1) of them; `k` is capped at
/// [`ENUMERATION_CAP`].
pub fn enumerate_trees(k: usize) -> Result<Vec<PlaneTree>, TreeError> {
    enumerate_filtered(k, &|_| true)
}

/// All trees of size at most `k_max` whose every degree is supported by
/// `dist` (the set of possible trees).
pub fn enumerate_possible(
    dist: &OffspringDistribution,
    k_max: usize,
) -> Result<Vec<PlaneTree>, TreeError> {
    let mut out = Vec::new();
    for k in 1..=k_max {
        out.extend(enumerate_possible_exact(dist, k)?);
    }
    Ok(out)
}

/// All trees of size exactly `k` with every degree supported by `dist`.
pub fn enumerate_possible_exact(
    dist: &OffspringDistribution,
    k: usize,
) -> Result<Vec<PlaneTree>, TreeError> {
    enumerate_filtered(k, &|d| dist.p(d) > 0.0)
}

fn enumerate_filtered(
    k: usize,
    allowed: &dyn Fn(u32) -> bool,
) -> Result<Vec<PlaneTree>, TreeError> {
    if k == 0 {
        return Err(TreeError::Empty);
    }
    if k > ENUMERATION_CAP {
        return Err(TreeError::TooLarge(k, ENUMERATION_CAP));
    }
    let mut out = Vec::new();
    let mut prefix = Vec::with_capacity(k);
    backtrack(k, 0, &mut prefix, allowed, &mut out);
    Ok(out)
}

// Depth-first generation of ballot sequences: at position j (0-based, j + 1
// nodes placed after pushing), the partial sum must reach at least j + 1
// until the last position, where it must equal k - 1.
fn backtrack(
    k: usize,
    sum: usize,
    prefix: &mut Vec<u32>,
    allowed: &dyn Fn(u32) -> bool,
    out: &mut Vec<PlaneTree>,
) {
    let j = prefix.len();
    if j == k {
        if sum == k - 1 {
            out.push(PlaneTree::from_valid(prefix.clone()));
        }
        return;
    }
    // Remaining degree budget; also enforce the prefix condition for j+1 < k.
    let max_d = (k - 1).saturating_sub(sum);
    let min_d = if j + 1 < k { (j + 1).saturating_sub(sum) } else { 0 };
    for d in min_d..=max_d {
        if j + 1 == k && sum + d != k - 1 {
            continue;
        }
        if !allowed(d as u32) {
            continue;
        }
        prefix.push(d as u32);
        backtrack(k, sum + d, prefix, allowed, out);
        prefix.pop();
    }
}
