//! Clock compression for successive-approximation ADCs.
//!
//! A conventional SAR converter always spends `bits` comparison cycles per
//! sample because it halves the candidate code interval blindly. When the
//! input's code distribution is known (or can be learned), each comparator
//! threshold can instead be placed so that the comparison removes as much
//! entropy as possible: split the current interval where the probability
//! mass balances. The average cycle count then approaches the entropy of the
//! output code, which for peaky distributions is well below `bits`.
//!
//! The crate is organized around that idea:
//!
//! - [`pmf`]: probability models over the `2^bits` output codes.
//! - [`tree`]: comparison-schedule trees (conventional, entropy-scheduled,
//!   and an exact-optimal reference built by dynamic programming).
//! - [`sim`]: the behavioral conversion loop itself (quantizer, DAC levels,
//!   comparator, tree-driven and online engines).
//! - [`adapt`]: streaming estimation that learns the code distribution and
//!   rebuilds the schedule when the statistics move.
//! - [`siggen`]: deterministic test-signal generation with matching
//!   analytic code distributions.

pub mod adapt;
pub mod pmf;
pub mod siggen;
pub mod sim;
pub mod tree;

pub use adapt::{AdaptiveConfig, AdaptiveRun, AdaptiveState, RebuildEvent};
pub use pmf::{Interval, Pmf};
pub use siggen::{Component, SignalKind, SignalSpec};
pub use sim::{AdcConfig, Batch, ConversionResult};
pub use tree::{
    build_binary_tree, build_mer_tree, build_optimal_tree, DecisionTree, SubNode, TreeNode,
};
