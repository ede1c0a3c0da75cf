//! Comparison-schedule trees.
//!
//! A SAR conversion is a walk down a binary tree: every node names the DAC
//! threshold to compare against, and each comparator verdict picks one of
//! two sub-nodes until a single code remains. A [`DecisionTree`] stores that
//! schedule the way a small lookup memory would: `2^bits - 1` nodes, each
//! holding a threshold plus two [`SubNode`] slots that either stop with an
//! output code or continue at another node address.
//!
//! Three builders are provided:
//!
//! - [`build_binary_tree`]: the conventional schedule, always splitting the
//!   candidate interval at its midpoint (`bits` cycles for every sample).
//! - [`build_mer_tree`]: the entropy-scheduled tree; each node's threshold
//!   minimizes `|mass[lb, t) - mass[t, ub)|`, so each comparison removes
//!   close to one bit of uncertainty.
//! - [`build_optimal_tree`]: the exact minimum-average-depth tree over all
//!   threshold schedules, by interval dynamic programming. It serves as the
//!   reference the greedy schedule is measured against.
//!
//! Throughout, the true branch is the one taken when the comparator reports
//! the input BELOW the threshold's DAC level, i.e. it narrows `[lb, ub)` to
//! `[lb, threshold)`; the false branch narrows to `[threshold, ub)`.

use std::fmt;

use thiserror::Error;

use crate::pmf::Pmf;

/// Upper resolution limit for [`build_optimal_tree`]; the DP table grows
/// quadratically with the code count, so this keeps runtimes and memory at
/// desk scale.
pub const MAX_OPTIMAL_BITS: u32 = 12;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TreeError {
    #[error("optimal scheduling supports at most {max} bits, got {got}")]
    TooManyBits { got: u32, max: u32 },
    #[error("tree is for {tree_bits}-bit codes but the pmf covers {pmf_bits} bits")]
    BitsMismatch { tree_bits: u32, pmf_bits: u32 },
}

/// Structural faults reported by [`DecisionTree::validate`].
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TreeDefect {
    #[error("expected {expected} nodes for {bits} bits, found {found}")]
    NodeCount {
        bits: u32,
        expected: usize,
        found: usize,
    },
    #[error("stop payload {0} is outside the code range")]
    LeafOutOfRange(u32),
    #[error("code {0} appears as a stop payload more than once")]
    DuplicateLeaf(u32),
    #[error("code {0} never appears as a stop payload")]
    MissingLeaf(u32),
    #[error("sub-node address {0} is out of bounds")]
    AddressOutOfBounds(u32),
    #[error("node {0} participates in an address cycle")]
    Cycle(u32),
    #[error("node {0} is reachable through two different paths")]
    SharedNode(u32),
    #[error("node {0} is unreachable from the root")]
    UnreachableNode(u32),
    #[error("node {addr}: threshold {threshold} is not strictly inside its interval [{lb}, {ub})")]
    ThresholdOutsideInterval {
        addr: u32,
        threshold: u32,
        lb: u32,
        ub: u32,
    },
    #[error("node {addr}: conversion stops with [{lb}, {ub}) unresolved")]
    StopAtWideInterval { addr: u32, lb: u32, ub: u32 },
    #[error("node {addr}: stop payload {found} does not match the remaining code {expected}")]
    LeafCodeMismatch {
        addr: u32,
        expected: u32,
        found: u32,
    },
}

/// One branch slot of a tree node: stop with a code, or continue elsewhere.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SubNode {
    Stop(u32),
    Node(u32),
}

impl fmt::Display for SubNode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SubNode::Stop(code) => write!(f, "stop:{code}"),
            SubNode::Node(addr) => write!(f, "node:{addr}"),
        }
    }
}

/// One interior decision point: the threshold to compare against and the
/// two continuations. `on_true` is followed when the comparator reports the
/// input below the threshold's DAC level.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct TreeNode {
    pub threshold: u32,
    pub on_true: SubNode,
    pub on_false: SubNode,
}

/// A complete comparison schedule: `2^bits - 1` nodes, root at address 0.
///
/// Nodes are allocated in preorder (root first, then the true-branch
/// subtree, then the false-branch subtree), so two structurally equal trees
/// are representationally equal and serialization is deterministic.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DecisionTree {
    bits: u32,
    nodes: Vec<TreeNode>,
}

impl DecisionTree {
    /// Wraps a raw node table without checking it; pair with [`validate`]
    /// when the table comes from outside the builders.
    ///
    /// [`validate`]: DecisionTree::validate
    pub fn from_nodes(bits: u32, nodes: Vec<TreeNode>) -> Self {
        DecisionTree { bits, nodes }
    }

    pub fn bits(&self) -> u32 {
        self.bits
    }

    pub fn nodes(&self) -> &[TreeNode] {
        &self.nodes
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    /// Checks every structural invariant, reporting the first violation:
    /// node count, stop payloads covering each code exactly once, addresses
    /// in bounds and forming a tree (no cycles, no sharing, no dead nodes),
    /// thresholds strictly inside the interval each node governs, and every
    /// stop carrying exactly the one code its interval has narrowed to.
    pub fn validate(&self) -> Result<(), TreeDefect> {
        let code_count = 1u64 << self.bits;
        let expected_nodes = (code_count - 1) as usize;
        if self.nodes.len() != expected_nodes {
            return Err(TreeDefect::NodeCount {
                bits: self.bits,
                expected: expected_nodes,
                found: self.nodes.len(),
            });
        }

        let mut leaf_seen = vec![false; code_count as usize];
        for node in &self.nodes {
            for sub in [node.on_true, node.on_false] {
                if let SubNode::Stop(code) = sub {
                    if u64::from(code) >= code_count {
                        return Err(TreeDefect::LeafOutOfRange(code));
                    }
                    if leaf_seen[code as usize] {
                        return Err(TreeDefect::DuplicateLeaf(code));
                    }
                    leaf_seen[code as usize] = true;
                }
            }
        }
        if let Some(code) = leaf_seen.iter().position(|&seen| !seen) {
            return Err(TreeDefect::MissingLeaf(code as u32));
        }

        // Walk from the root carrying the governed interval; tri-state marks
        // tell a cycle (an ancestor revisited) apart from a shared sub-node.
        const UNSEEN: u8 = 0;
        const OPEN: u8 = 1;
        const DONE: u8 = 2;
        let mut mark = vec![UNSEEN; self.nodes.len()];
        // (address, lb, ub, entered) with an explicit stack; `entered`
        // distinguishes the first visit from the post-order completion.
        let mut stack = vec![(0u32, 0u32, code_count as u32, false)];
        while let Some((addr, lb, ub, entered)) = stack.pop() {
            if entered {
                mark[addr as usize] = DONE;
                continue;
            }
            match mark[addr as usize] {
                OPEN => return Err(TreeDefect::Cycle(addr)),
                DONE => return Err(TreeDefect::SharedNode(addr)),
                _ => {}
            }
            mark[addr as usize] = OPEN;
            stack.push((addr, lb, ub, true));
            let node = self.nodes[addr as usize];
            if node.threshold <= lb || node.threshold >= ub {
                return Err(TreeDefect::ThresholdOutsideInterval {
                    addr,
                    threshold: node.threshold,
                    lb,
                    ub,
                });
            }
            for (sub, sub_lb, sub_ub) in [
                (node.on_true, lb, node.threshold),
                (node.on_false, node.threshold, ub),
            ] {
                match sub {
                    SubNode::Stop(code) => {
                        if sub_ub - sub_lb != 1 {
                            return Err(TreeDefect::StopAtWideInterval {
                                addr,
                                lb: sub_lb,
                                ub: sub_ub,
                            });
                        }
                        if code != sub_lb {
                            return Err(TreeDefect::LeafCodeMismatch {
                                addr,
                                expected: sub_lb,
                                found: code,
                            });
                        }
                    }
                    SubNode::Node(next) => {
                        if next as usize >= self.nodes.len() {
                            return Err(TreeDefect::AddressOutOfBounds(next));
                        }
                        match mark[next as usize] {
                            OPEN => return Err(TreeDefect::Cycle(next)),
                            DONE => return Err(TreeDefect::SharedNode(next)),
                            _ => stack.push((next, sub_lb, sub_ub, false)),
                        }
                    }
                }
            }
        }
        if let Some(addr) = mark.iter().position(|&m| m != DONE) {
            return Err(TreeDefect::UnreachableNode(addr as u32));
        }
        Ok(())
    }

    /// Comparison count per code: entry `n` is how many cycles a sample
    /// quantizing to code `n` takes. Expects a valid tree.
    pub fn depths(&self) -> Vec<u32> {
        let mut depths = vec![0u32; 1usize << self.bits];
        let mut stack = vec![(SubNode::Node(0), 0u32)];
        let mut visited = 0usize;
        while let Some((sub, depth)) = stack.pop() {
            match sub {
                SubNode::Stop(code) => depths[code as usize] = depth,
                SubNode::Node(addr) => {
                    visited += 1;
                    assert!(
                        visited <= self.nodes.len(),
                        "tree walk does not terminate; validate() first"
                    );
                    let node = self.nodes[addr as usize];
                    stack.push((node.on_true, depth + 1));
                    stack.push((node.on_false, depth + 1));
                }
            }
        }
        depths
    }

    /// Average comparison count under `pmf`: `sum(p_n * depth_n)`.
    pub fn expected_length(&self, pmf: &Pmf) -> Result<f64, TreeError> {
        if pmf.bits() != self.bits {
            return Err(TreeError::BitsMismatch {
                tree_bits: self.bits,
                pmf_bits: pmf.bits(),
            });
        }
        let depths = self.depths();
        let mut acc = 0.0;
        for (code, &d) in depths.iter().enumerate() {
            acc += pmf.prob(code as u32) * d as f64;
        }
        Ok(acc)
    }

    /// Serializes the schedule as text: a header with the resolution and the
    /// builder label, then one record per node in address order.
    ///
    /// ```text
    /// bits=2 builder=mer
    /// 0 threshold=3 true=node:1 false=stop:3
    /// ```
    pub fn dump(&self, builder: &str) -> String {
        use fmt::Write;
        let mut out = String::new();
        writeln!(out, "bits={} builder={}", self.bits, builder).unwrap();
        for (addr, node) in self.nodes.iter().enumerate() {
            writeln!(
                out,
                "{addr} threshold={} true={} false={}",
                node.threshold, node.on_true, node.on_false
            )
            .unwrap();
        }
        out
    }
}

/// Builds the conventional schedule: every node splits its interval at the
/// midpoint, so every code costs exactly `bits` comparisons.
pub fn build_binary_tree(bits: u32) -> DecisionTree {
    assert!(
        (1..=30).contains(&bits),
        "unsupported resolution: {bits} bits"
    );
    let mut nodes = Vec::with_capacity((1usize << bits) - 1);
    build_recursive(0, 1u32 << bits, &mut nodes, &mut |lb, ub| {
        lb + (ub - lb) / 2
    });
    DecisionTree::from_nodes(bits, nodes)
}

/// Builds the entropy-scheduled tree for `pmf`.
///
/// Each node's threshold minimizes the absolute mass imbalance
/// `|mass[lb, t) - mass[t, ub)|` over `lb < t < ub` (sums unnormalized, so
/// zero-mass intervals still schedule cleanly). Ties go to the threshold
/// closest to the interval midpoint, then to the smaller one; on the uniform
/// pmf this reproduces [`build_binary_tree`] node for node.
pub fn build_mer_tree(pmf: &Pmf) -> DecisionTree {
    let prefix = pmf.prefix_masses();
    let mut nodes = Vec::with_capacity((1usize << pmf.bits()) - 1);
    build_recursive(0, pmf.len(), &mut nodes, &mut |lb, ub| {
        balanced_threshold(&prefix, lb, ub)
    });
    DecisionTree::from_nodes(pmf.bits(), nodes)
}

fn build_recursive(
    lb: u32,
    ub: u32,
    nodes: &mut Vec<TreeNode>,
    pick: &mut impl FnMut(u32, u32) -> u32,
) -> SubNode {
    if ub - lb == 1 {
        return SubNode::Stop(lb);
    }
    let threshold = pick(lb, ub);
    let addr = nodes.len() as u32;
    nodes.push(TreeNode {
        threshold,
        on_true: SubNode::Stop(0),
        on_false: SubNode::Stop(0),
    });
    let on_true = build_recursive(lb, threshold, nodes, pick);
    let on_false = build_recursive(threshold, ub, nodes, pick);
    let node = &mut nodes[addr as usize];
    node.on_true = on_true;
    node.on_false = on_false;
    SubNode::Node(addr)
}

/// The mass-balancing threshold for `[lb, ub)` given cumulative masses.
///
/// Shared by the tree builder and the online conversion engine so the two
/// always agree, comparison for comparison.
pub(crate) fn balanced_threshold(prefix: &[f64], lb: u32, ub: u32) -> u32 {
    debug_assert!(ub - lb >= 2);
    let ends = prefix[lb as usize] + prefix[ub as usize];
    let mut best_t = lb + 1;
    let mut best_obj = f64::INFINITY;
    let mut best_mid_dist = u64::MAX;
    for t in (lb + 1)..ub {
        let obj = (2.0 * prefix[t as usize] - ends).abs();
        // Distance to the interval midpoint, doubled to stay integral.
        let mid_dist = (2 * i64::from(t) - i64::from(lb) - i64::from(ub)).unsigned_abs();
        if obj < best_obj || (obj == best_obj && mid_dist < best_mid_dist) {
            best_obj = obj;
            best_mid_dist = mid_dist;
            best_t = t;
        }
    }
    best_t
}

/// Builds the exact minimum-average-depth schedule for `pmf` by interval
/// dynamic programming, for resolutions up to [`MAX_OPTIMAL_BITS`].
///
/// `cost[i, j) = mass[i, j) + min_k (cost[i, k) + cost[k, j))`; the split
/// search uses the standard monotonicity window (the optimal split of an
/// interval lies between the optimal splits of its two length-minus-one
/// neighbors), which brings the table fill to quadratic time. Ties pick the
/// lowest threshold, so the result is deterministic.
pub fn build_optimal_tree(pmf: &Pmf) -> Result<DecisionTree, TreeError> {
    if pmf.bits() > MAX_OPTIMAL_BITS {
        return Err(TreeError::TooManyBits {
            got: pmf.bits(),
            max: MAX_OPTIMAL_BITS,
        });
    }
    let n = pmf.len() as usize;
    let prefix = pmf.prefix_masses();

    // cost[len][i] and split[len][i] describe the interval [i, i + len).
    let mut cost: Vec<Vec<f64>> = Vec::with_capacity(n + 1);
    let mut split: Vec<Vec<u32>> = Vec::with_capacity(n + 1);
    cost.push(Vec::new());
    split.push(Vec::new());
    cost.push(vec![0.0; n]);
    split.push(vec![0; n]);

    for len in 2..=n {
        let mut cost_row = vec![0.0; n - len + 1];
        let mut split_row = vec![0u32; n - len + 1];
        for i in 0..=(n - len) {
            let j = i + len;
            let (lo, hi) = if len == 2 {
                (i + 1, i + 1)
            } else {
                (split[len - 1][i] as usize, split[len - 1][i + 1] as usize)
            };
            let mut best_cost = f64::INFINITY;
            let mut best_k = lo;
            for k in lo..=hi {
                let c = cost[k - i][i] + cost[j - k][k];
                if c < best_cost {
                    best_cost = c;
                    best_k = k;
                }
            }
            cost_row[i] = (prefix[j] - prefix[i]) + best_cost;
            split_row[i] = best_k as u32;
        }
        cost.push(cost_row);
        split.push(split_row);
    }

    let mut nodes = Vec::with_capacity(n - 1);
    rebuild_from_splits(0, n as u32, &split, &mut nodes);
    Ok(DecisionTree::from_nodes(pmf.bits(), nodes))
}

fn rebuild_from_splits(lb: u32, ub: u32, split: &[Vec<u32>], nodes: &mut Vec<TreeNode>) -> SubNode {
    if ub - lb == 1 {
        return SubNode::Stop(lb);
    }
    let threshold = split[(ub - lb) as usize][lb as usize];
    let addr = nodes.len() as u32;
    nodes.push(TreeNode {
        threshold,
        on_true: SubNode::Stop(0),
        on_false: SubNode::Stop(0),
    });
    let on_true = rebuild_from_splits(lb, threshold, split, nodes);
    let on_false = rebuild_from_splits(threshold, ub, split, nodes);
    let node = &mut nodes[addr as usize];
    node.on_true = on_true;
    node.on_false = on_false;
    SubNode::Node(addr)
}
