//! Streaming adaptation of the comparison schedule.
//!
//! When the input statistics are unknown up front, the converter starts on
//! the conventional binary schedule and learns as it goes: every output
//! code feeds a histogram, and at window boundaries the schedule is rebuilt
//! from a smoothed estimate of the code distribution.
//!
//! Rebuild policy: the first full window always triggers a rebuild (the
//! uniform startup assumption is almost certainly wrong); after that a
//! rebuild happens only when the L1 distance between the last two window
//! histograms (as frequencies) exceeds a threshold, so stable statistics
//! cause no churn. The estimate itself comes from a cumulative histogram
//! with add-one (Laplace) smoothing, `p_n = (counts_n + 1) / (total + 2^bits)`,
//! which keeps every interval schedulable even before all codes have been
//! seen. On a distance-triggered rebuild the cumulative histogram is reset
//! to the window that tripped the detector, forgetting the stale regime.

use thiserror::Error;

use crate::pmf::Pmf;
use crate::sim::{AdcConfig, SimError};
use crate::tree::{build_binary_tree, build_mer_tree, DecisionTree};

/// Default rebuild window floor, in samples.
pub const MIN_WINDOW: u64 = 4096;

/// Default L1 trigger for post-startup rebuilds, in probability mass.
pub const DEFAULT_L1_THRESHOLD: f64 = 0.02;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AdaptError {
    #[error("code {code} is outside the {bits}-bit range")]
    CodeOutOfRange { code: u32, bits: u32 },
    #[error("no samples observed yet")]
    NoSamples,
}

/// Knobs for the rebuild policy. `window` is how many samples make one
/// observation window; `l1_threshold` is the frequency distance between
/// consecutive windows past which the schedule is rebuilt.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdaptiveConfig {
    pub window: u64,
    pub l1_threshold: f64,
}

impl AdaptiveConfig {
    /// Defaults for a given resolution: `window = max(4096, 16 * 2^bits)`
    /// (enough samples per code for a stable histogram), threshold 0.02.
    pub fn for_bits(bits: u32) -> Self {
        AdaptiveConfig {
            window: MIN_WINDOW.max(16 << bits),
            l1_threshold: DEFAULT_L1_THRESHOLD,
        }
    }
}

/// One schedule rebuild, as recorded in the run log.
#[derive(Debug, Clone, PartialEq)]
pub struct RebuildEvent {
    /// Samples observed when the rebuild fired.
    pub sample_index: u64,
    /// Schedule generation after the rebuild (startup tree is generation 0).
    pub generation: u64,
    /// L1 distance that triggered it. The first rebuild has no previous
    /// window, so its distance is measured against the uniform frequencies
    /// the startup schedule assumes.
    pub window_l1: f64,
    /// Average cycle count of the new schedule under the estimated pmf.
    pub expected_length: f64,
}

/// Adaptive converter state: the active schedule plus the histograms that
/// decide when to replace it.
#[derive(Debug, Clone)]
pub struct AdaptiveState {
    cfg: AdcConfig,
    opts: AdaptiveConfig,
    tree: DecisionTree,
    generation: u64,
    samples_seen: u64,
    /// Feeds the estimate; reset to the latest window on a distance-triggered rebuild.
    cumulative: Vec<u64>,
    cumulative_total: u64,
    /// Histogram of the window in progress.
    window: Vec<u64>,
    in_window: u64,
    /// Frequencies of the last completed window.
    prev_window: Option<Vec<f64>>,
}

impl AdaptiveState {
    /// Starts on the conventional binary schedule (generation 0).
    pub fn new(cfg: AdcConfig, opts: AdaptiveConfig) -> Self {
        assert!(opts.window >= 1, "window must hold at least one sample");
        assert!(
            opts.l1_threshold.is_finite() && opts.l1_threshold >= 0.0,
            "l1 threshold must be finite and non-negative"
        );
        let n = cfg.code_count() as usize;
        AdaptiveState {
            cfg,
            opts,
            tree: build_binary_tree(cfg.bits()),
            generation: 0,
            samples_seen: 0,
            cumulative: vec![0; n],
            cumulative_total: 0,
            window: vec![0; n],
            in_window: 0,
            prev_window: None,
        }
    }

    pub fn adc_config(&self) -> &AdcConfig {
        &self.cfg
    }

    /// The schedule conversions currently run against.
    pub fn tree(&self) -> &DecisionTree {
        &self.tree
    }

    pub fn generation(&self) -> u64 {
        self.generation
    }

    pub fn samples_seen(&self) -> u64 {
        self.samples_seen
    }

    /// Records one output code. Never touches the active schedule; pair
    /// with [`maybe_rebuild`](Self::maybe_rebuild).
    pub fn observe(&mut self, code: u32) -> Result<(), AdaptError> {
        if code >= self.cfg.code_count() {
            return Err(AdaptError::CodeOutOfRange {
                code,
                bits: self.cfg.bits(),
            });
        }
        self.cumulative[code as usize] += 1;
        self.cumulative_total += 1;
        self.window[code as usize] += 1;
        self.in_window += 1;
        self.samples_seen += 1;
        Ok(())
    }

    /// Add-one smoothed estimate of the code distribution from the
    /// cumulative histogram.
    pub fn estimate_pmf(&self) -> Result<Pmf, AdaptError> {
        if self.samples_seen == 0 {
            return Err(AdaptError::NoSamples);
        }
        let denom = (self.cumulative_total + u64::from(self.cfg.code_count())) as f64;
        let probs = self
            .cumulative
            .iter()
            .map(|&c| (c + 1) as f64 / denom)
            .collect();
        Ok(Pmf::normalized(probs).expect("smoothed counts are positive"))
    }

    /// Applies the rebuild policy if a window boundary has been reached.
    /// Returns the rebuild record when the schedule was replaced.
    pub fn maybe_rebuild(&mut self) -> Option<RebuildEvent> {
        if self.in_window < self.opts.window {
            return None;
        }
        let freqs: Vec<f64> = self
            .window
            .iter()
            .map(|&c| c as f64 / self.in_window as f64)
            .collect();
        let (first_boundary, l1) = match &self.prev_window {
            None => {
                let uniform = 1.0 / self.cfg.code_count() as f64;
                (true, freqs.iter().map(|f| (f - uniform).abs()).sum())
            }
            Some(prev) => (
                false,
                freqs.iter().zip(prev).map(|(f, p)| (f - p).abs()).sum(),
            ),
        };
        let rebuild = first_boundary || l1 > self.opts.l1_threshold;
        let event = if rebuild {
            if !first_boundary {
                // Regime change: forget everything before the window that
                // tripped the detector.
                self.cumulative.copy_from_slice(&self.window);
                self.cumulative_total = self.in_window;
            }
            let estimate = self.estimate_pmf().expect("a full window was observed");
            self.tree = build_mer_tree(&estimate);
            self.generation += 1;
            Some(RebuildEvent {
                sample_index: self.samples_seen,
                generation: self.generation,
                window_l1: l1,
                expected_length: self
                    .tree
                    .expected_length(&estimate)
                    .expect("estimate and schedule share the resolution"),
            })
        } else {
            None
        };
        self.prev_window = Some(freqs);
        self.window.fill(0);
        self.in_window = 0;
        event
    }
}

/// Everything a streaming adaptive run produces.
#[derive(Debug, Clone, PartialEq)]
pub struct AdaptiveRun {
    pub codes: Vec<u32>,
    pub cycles: Vec<u32>,
    pub rebuilds: Vec<RebuildEvent>,
}

impl AdaptiveRun {
    pub fn average_cycles(&self) -> Option<f64> {
        if self.cycles.is_empty() {
            None
        } else {
            Some(
                self.cycles.iter().map(|&c| u64::from(c)).sum::<u64>() as f64
                    / self.cycles.len() as f64,
            )
        }
    }
}

/// Streams `xs` through an adaptive converter: convert with the active
/// schedule, record the code, rebuild at window boundaries per the policy.
pub fn run_adaptive(
    xs: &[f64],
    cfg: AdcConfig,
    opts: AdaptiveConfig,
) -> Result<AdaptiveRun, SimError> {
    let mut state = AdaptiveState::new(cfg, opts);
    let mut run = AdaptiveRun {
        codes: Vec::with_capacity(xs.len()),
        cycles: Vec::with_capacity(xs.len()),
        rebuilds: Vec::new(),
    };
    for (index, &x) in xs.iter().enumerate() {
        let result = cfg
            .convert_tree(x, state.tree())
            .map_err(|e| SimError::AtSample {
                index,
                source: Box::new(e),
            })?;
        run.codes.push(result.code);
        run.cycles.push(result.cycles);
        state
            .observe(result.code)
            .expect("converted codes are in range");
        if let Some(event) = state.maybe_rebuild() {
            run.rebuilds.push(event);
        }
    }
    Ok(run)
}
