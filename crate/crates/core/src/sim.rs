//! Behavioral model of the successive-approximation conversion loop.
//!
//! The converter under study quantizes `x` to the code `y` whose cell
//! satisfies `delta * (y - 0.5) <= x < delta * (y + 0.5)`, by repeatedly
//! comparing `x` against DAC levels `x_hat(t) = delta * (t - 0.5)` and
//! narrowing the candidate interval: a comparator verdict of "below" keeps
//! `[lb, t)`, otherwise `[t, ub)`. Exact equality at a level reads as "not
//! below", matching the half-open cells.
//!
//! Two engines drive that loop: [`AdcConfig::convert_tree`] walks a
//! prebuilt [`DecisionTree`], and [`AdcConfig::convert_online`] re-derives
//! each threshold from a pmf on the fly. Both use the same threshold rule
//! and the same comparator, so for the same pmf they agree comparison for
//! comparison; tests pin that down.

use thiserror::Error;

use crate::pmf::Pmf;
use crate::tree::{self, DecisionTree, SubNode, TreeDefect};

/// One comparator exchange: the threshold asked about, and `true` when the
/// input was below its DAC level.
pub type Trace = Vec<(u32, bool)>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("input {x} is outside the converter range [{lo}, {hi})")]
    OutOfRange { x: f64, lo: f64, hi: f64 },
    #[error("decision tree is unusable: {0}")]
    InvalidTree(TreeDefect),
    #[error("tree covers {tree_bits}-bit codes but the converter has {cfg_bits} bits")]
    BitsMismatch { tree_bits: u32, cfg_bits: u32 },
    #[error("sample {index}: {source}")]
    AtSample { index: usize, source: Box<SimError> },
}

/// Static description of the converter: resolution and step size.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdcConfig {
    bits: u32,
    delta: f64,
}

impl AdcConfig {
    /// `bits` in `1..=30`, `delta` finite and positive.
    pub fn new(bits: u32, delta: f64) -> Self {
        assert!(
            (1..=30).contains(&bits),
            "unsupported resolution: {bits} bits"
        );
        assert!(
            delta.is_finite() && delta > 0.0,
            "step size must be finite and positive, got {delta}"
        );
        AdcConfig { bits, delta }
    }

    pub fn bits(&self) -> u32 {
        self.bits
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn code_count(&self) -> u32 {
        1u32 << self.bits
    }

    /// DAC level for threshold `t`: `delta * (t - 0.5)`, defined for
    /// `0 <= t <= 2^bits` so the range edges are expressible.
    pub fn dac_reference(&self, threshold: u32) -> f64 {
        debug_assert!(threshold <= self.code_count());
        self.delta * (f64::from(threshold) - 0.5)
    }

    /// Lowest representable input, `-0.5 * delta` (inclusive).
    pub fn min_input(&self) -> f64 {
        self.dac_reference(0)
    }

    /// Upper input limit, `(2^bits - 0.5) * delta` (exclusive).
    pub fn input_limit(&self) -> f64 {
        self.dac_reference(self.code_count())
    }

    /// Half of the full-scale span, `2^(bits-1) * delta`.
    pub fn full_scale_half_range(&self) -> f64 {
        self.delta * f64::from(1u32 << (self.bits - 1))
    }

    /// Center of the input range, `(2^(bits-1) - 0.5) * delta`.
    pub fn mid_scale(&self) -> f64 {
        self.dac_reference(1u32 << (self.bits - 1))
    }

    /// Comparator: `true` (a 1) when `x` is below the DAC level of
    /// `threshold`; exact equality reads as `false`.
    pub fn compare(&self, x: f64, threshold: u32) -> bool {
        x < self.dac_reference(threshold)
    }

    /// The code whose cell holds `x`: `delta * (y - 0.5) <= x < delta * (y + 0.5)`.
    ///
    /// The cell walls are the DAC levels as the comparator computes them, so
    /// `quantize` and the conversion engines agree even when `x` sits
    /// exactly on a rounded wall.
    pub fn quantize(&self, x: f64) -> Result<u32, SimError> {
        self.check_range(x)?;
        let count = i64::from(self.code_count());
        let mut y = ((x / self.delta) + 0.5).floor() as i64;
        y = y.clamp(0, count - 1);
        // Round-off in the estimate can land one cell away from the cell the
        // comparator walls define; step back inside.
        while y > 0 && x < self.dac_reference(y as u32) {
            y -= 1;
        }
        while y + 1 < count && x >= self.dac_reference(y as u32 + 1) {
            y += 1;
        }
        Ok(y as u32)
    }

    /// Converts by walking a prebuilt schedule.
    ///
    /// The walk is guarded rather than pre-validated: malformed tables
    /// (dangling addresses, loops, stray stop codes) surface as
    /// [`SimError::InvalidTree`] when hit.
    pub fn convert_tree(&self, x: f64, tree: &DecisionTree) -> Result<ConversionResult, SimError> {
        if tree.bits() != self.bits {
            return Err(SimError::BitsMismatch {
                tree_bits: tree.bits(),
                cfg_bits: self.bits,
            });
        }
        self.check_range(x)?;
        let mut trace = Trace::new();
        let mut sub = SubNode::Node(0);
        loop {
            match sub {
                SubNode::Stop(code) => {
                    if code >= self.code_count() {
                        return Err(SimError::InvalidTree(TreeDefect::LeafOutOfRange(code)));
                    }
                    return Ok(ConversionResult {
                        code,
                        cycles: trace.len() as u32,
                        trace,
                    });
                }
                SubNode::Node(addr) => {
                    let Some(node) = tree.nodes().get(addr as usize) else {
                        return Err(SimError::InvalidTree(TreeDefect::AddressOutOfBounds(addr)));
                    };
                    if trace.len() >= tree.node_count() {
                        return Err(SimError::InvalidTree(TreeDefect::Cycle(addr)));
                    }
                    let below = self.compare(x, node.threshold);
                    trace.push((node.threshold, below));
                    sub = if below { node.on_true } else { node.on_false };
                }
            }
        }
    }

    /// Converts without a prebuilt tree: each cycle balances the remaining
    /// interval's mass with the same threshold rule the tree builder uses.
    pub fn convert_online(&self, x: f64, pmf: &Pmf) -> Result<ConversionResult, SimError> {
        if pmf.bits() != self.bits {
            return Err(SimError::BitsMismatch {
                tree_bits: pmf.bits(),
                cfg_bits: self.bits,
            });
        }
        self.check_range(x)?;
        let prefix = pmf.prefix_masses();
        let mut lb = 0u32;
        let mut ub = self.code_count();
        let mut trace = Trace::new();
        while ub - lb > 1 {
            let threshold = tree::balanced_threshold(&prefix, lb, ub);
            let below = self.compare(x, threshold);
            trace.push((threshold, below));
            if below {
                ub = threshold;
            } else {
                lb = threshold;
            }
        }
        Ok(ConversionResult {
            code: lb,
            cycles: trace.len() as u32,
            trace,
        })
    }

    /// Converts a whole block through one schedule. The tree is validated
    /// once up front; per-sample failures carry the sample index. Traces are
    /// kept only when asked for.
    pub fn convert_batch(
        &self,
        xs: &[f64],
        tree: &DecisionTree,
        keep_traces: bool,
    ) -> Result<Batch, SimError> {
        tree.validate().map_err(SimError::InvalidTree)?;
        let mut batch = Batch {
            codes: Vec::with_capacity(xs.len()),
            cycles: Vec::with_capacity(xs.len()),
            traces: keep_traces.then(|| Vec::with_capacity(xs.len())),
        };
        for (index, &x) in xs.iter().enumerate() {
            let result = self.convert_tree(x, tree).map_err(|e| SimError::AtSample {
                index,
                source: Box::new(e),
            })?;
            batch.codes.push(result.code);
            batch.cycles.push(result.cycles);
            if let Some(traces) = &mut batch.traces {
                traces.push(result.trace);
            }
        }
        Ok(batch)
    }

    fn check_range(&self, x: f64) -> Result<(), SimError> {
        let lo = self.min_input();
        let hi = self.input_limit();
        // NaN fails both comparisons and lands here too.
        if x >= lo && x < hi {
            Ok(())
        } else {
            Err(SimError::OutOfRange { x, lo, hi })
        }
    }
}

/// Outcome of one conversion: the code, how many comparator cycles it took,
/// and the full (threshold, verdict) exchange in order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConversionResult {
    pub code: u32,
    pub cycles: u32,
    pub trace: Trace,
}

impl ConversionResult {
    /// Replays the trace through the interval-update rule from the full code
    /// range; a well-formed conversion ends on exactly `self.code`.
    pub fn replay_narrows_to_code(&self, bits: u32) -> bool {
        let mut lb = 0u32;
        let mut ub = 1u32 << bits;
        for &(threshold, below) in &self.trace {
            if threshold <= lb || threshold >= ub {
                return false;
            }
            if below {
                ub = threshold;
            } else {
                lb = threshold;
            }
        }
        ub - lb == 1 && lb == self.code
    }
}

/// Results of a block conversion, cycles tallied per sample.
#[derive(Debug, Clone, PartialEq)]
pub struct Batch {
    pub codes: Vec<u32>,
    pub cycles: Vec<u32>,
    pub traces: Option<Vec<Trace>>,
}

impl Batch {
    pub fn len(&self) -> usize {
        self.codes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.codes.is_empty()
    }

    pub fn total_cycles(&self) -> u64 {
        self.cycles.iter().map(|&c| u64::from(c)).sum()
    }

    /// Mean cycles per sample; `None` for an empty batch.
    pub fn average_cycles(&self) -> Option<f64> {
        if self.codes.is_empty() {
            None
        } else {
            Some(self.total_cycles() as f64 / self.codes.len() as f64)
        }
    }
}
