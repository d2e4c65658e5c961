//! A laboratory for conditional Galton-Watson trees.
//!
//! The crate provides:
//!
//! * critical offspring distributions and their derived constants
//!   ([`offspring`]),
//! * plane trees as preorder degree sequences ([`tree`]),
//! * exact rejection samplers for the conditioned tree and the
//!   subtree-switching coupling ([`sampler`]),
//! * fringe/non-fringe subtree censuses, maximal complete r-ary subtree
//!   heights, and the all-trees threshold K ([`census`]),
//! * exact formulas for occurrence probabilities, conditional count moments,
//!   minimal tree probabilities, and threshold predictions ([`exact`]),
//! * a brute-force enumeration oracle for small sizes ([`oracle`]),
//! * reproducible Monte Carlo experiment drivers ([`experiments`]).
//!
//! Trees are always stored as preorder degree sequences; every algorithm is a
//! sequence scan.  Unbounded offspring laws are truncated at a configurable
//! tail mass and renormalized, which is the same as conditioning the degree
//! to stay below the cutoff; all exact computations inherit that truncation.

pub mod census;
pub mod exact;
pub mod experiments;
pub mod expr;
pub mod offspring;
pub mod oracle;
pub mod sampler;
pub mod tree;

pub use offspring::{DistributionConstants, OffspringDistribution};
pub use tree::PlaneTree;
