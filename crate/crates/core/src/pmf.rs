//! Probability models over the output codes of an N-bit quantizer.
//!
//! A [`Pmf`] assigns a probability to each of the `2^bits` codes. Everything
//! downstream consumes it: threshold scheduling balances interval masses,
//! the adaptive loop re-estimates it from observed codes, and the reports
//! compare average cycle counts against its entropy.
//!
//! Entropy is measured in bits, `H = -sum(p_n * log2(p_n))`, with the usual
//! convention `0 * log2(0) = 0`.

use std::io::BufRead;

use thiserror::Error;

/// How far the sum of caller-supplied probabilities may drift from 1.
pub const NORMALIZATION_TOLERANCE: f64 = 1e-9;

/// Raw-sum drift beyond which a pmf text file deserves a user-visible note.
pub const RAW_SUM_REPORT_THRESHOLD: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PmfError {
    #[error(
        "{0} probabilities cannot cover a whole number of bits (need a power of two, at least 2)"
    )]
    BadLength(usize),
    #[error("probability for code {code} is {value}; entries must be finite and non-negative")]
    BadEntry { code: u32, value: f64 },
    #[error("probabilities sum to {0}; expected 1 within 1e-9")]
    NotNormalized(f64),
    #[error("weights sum to zero; nothing to normalize")]
    ZeroTotalMass,
    #[error("interval [{lb}, {ub}) carries zero probability mass")]
    ZeroMassInterval { lb: u32, ub: u32 },
    #[error("threshold {threshold} is not strictly inside [{lb}, {ub})")]
    ThresholdOutOfRange { threshold: u32, lb: u32, ub: u32 },
}

/// Errors reading the pmf text format (one probability per line).
#[derive(Debug, Error)]
pub enum PmfReadError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("line {line}: {text:?} is not a number")]
    Parse { line: usize, text: String },
    #[error("line {line}: {value} must be a finite non-negative number")]
    BadValue { line: usize, value: f64 },
    #[error("file holds {0} values; expected a power of two, at least 2")]
    BadCount(usize),
    #[error("all values are zero; nothing to normalize")]
    ZeroTotalMass,
}

/// Half-open code interval `[lb, ub)`.
///
/// The conversion loop narrows one of these per comparison; `lb` is
/// inclusive, `ub` exclusive. Construction requires `lb < ub` (the loop
/// never produces an empty interval); staying inside the code range of a
/// particular pmf is checked by the operations that take an interval.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Interval {
    lb: u32,
    ub: u32,
}

impl Interval {
    /// Panics if `lb >= ub`.
    pub fn new(lb: u32, ub: u32) -> Self {
        assert!(lb < ub, "empty interval [{lb}, {ub})");
        Interval { lb, ub }
    }

    pub fn lb(&self) -> u32 {
        self.lb
    }

    pub fn ub(&self) -> u32 {
        self.ub
    }

    pub fn size(&self) -> u32 {
        self.ub - self.lb
    }
}

/// Probability mass function over the `2^bits` codes of a converter.
#[derive(Debug, Clone, PartialEq)]
pub struct Pmf {
    bits: u32,
    probs: Vec<f64>,
}

impl Pmf {
    /// Wraps probabilities that already sum to 1 (within 1e-9).
    ///
    /// The length fixes the resolution: `2^bits` entries for `bits >= 1`.
    /// Entries must be finite and non-negative; zeros are allowed.
    pub fn new(probs: Vec<f64>) -> Result<Self, PmfError> {
        let bits = infer_bits(probs.len())?;
        check_entries(&probs)?;
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > NORMALIZATION_TOLERANCE {
            return Err(PmfError::NotNormalized(sum));
        }
        Ok(Pmf { bits, probs })
    }

    /// Builds a pmf from non-negative weights, rescaling them to sum to 1.
    pub fn normalized(weights: Vec<f64>) -> Result<Self, PmfError> {
        let bits = infer_bits(weights.len())?;
        check_entries(&weights)?;
        let sum: f64 = weights.iter().sum();
        if sum <= 0.0 {
            return Err(PmfError::ZeroTotalMass);
        }
        let probs = weights.into_iter().map(|w| w / sum).collect();
        Ok(Pmf { bits, probs })
    }

    pub fn uniform(bits: u32) -> Self {
        assert!(
            (1..=30).contains(&bits),
            "unsupported resolution: {bits} bits"
        );
        let n = 1usize << bits;
        Pmf {
            bits,
            probs: vec![1.0 / n as f64; n],
        }
    }

    /// Reads the pmf text format: one probability per line, `2^bits` lines.
    ///
    /// Values are renormalized unconditionally; `raw_sum` in the result lets
    /// the caller report files whose raw sum drifts from 1 by more than
    /// [`RAW_SUM_REPORT_THRESHOLD`].
    pub fn from_text<R: BufRead>(reader: R) -> Result<PmfLoad, PmfReadError> {
        let mut weights = Vec::new();
        for (idx, line) in reader.lines().enumerate() {
            let line = line?;
            let text = line.trim();
            let value: f64 = text.parse().map_err(|_| PmfReadError::Parse {
                line: idx + 1,
                text: text.to_string(),
            })?;
            if !value.is_finite() || value < 0.0 {
                return Err(PmfReadError::BadValue {
                    line: idx + 1,
                    value,
                });
            }
            weights.push(value);
        }
        if infer_bits(weights.len()).is_err() {
            return Err(PmfReadError::BadCount(weights.len()));
        }
        let raw_sum: f64 = weights.iter().sum();
        let pmf = Pmf::normalized(weights).map_err(|_| PmfReadError::ZeroTotalMass)?;
        Ok(PmfLoad { pmf, raw_sum })
    }

    pub fn bits(&self) -> u32 {
        self.bits
    }

    /// Number of codes, `2^bits`.
    pub fn len(&self) -> u32 {
        1u32 << self.bits
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn prob(&self, code: u32) -> f64 {
        self.probs[code as usize]
    }

    /// Total probability carried by the codes in `iv`.
    ///
    /// Panics if the interval reaches past the code range.
    pub fn mass(&self, iv: Interval) -> f64 {
        self.check_range(iv);
        self.probs[iv.lb as usize..iv.ub as usize].iter().sum()
    }

    /// Cumulative masses: entry `k` is the mass of `[0, k)`, length `2^bits + 1`.
    pub fn prefix_masses(&self) -> Vec<f64> {
        let mut prefix = Vec::with_capacity(self.probs.len() + 1);
        let mut acc = 0.0;
        prefix.push(0.0);
        for &p in &self.probs {
            acc += p;
            prefix.push(acc);
        }
        prefix
    }

    /// Entropy of the code in bits.
    pub fn entropy(&self) -> f64 {
        entropy_of(&self.probs)
    }

    /// Entropy of the code given that it lies in `iv`, i.e. the entropy of
    /// the renormalized restriction of the pmf to `iv`.
    pub fn conditional_entropy(&self, iv: Interval) -> Result<f64, PmfError> {
        self.check_range(iv);
        let m = self.mass(iv);
        if m <= 0.0 {
            return Err(PmfError::ZeroMassInterval {
                lb: iv.lb,
                ub: iv.ub,
            });
        }
        let window = &self.probs[iv.lb as usize..iv.ub as usize];
        let mut h = 0.0;
        for &p in window {
            if p > 0.0 {
                let q = p / m;
                h -= q * q.log2();
            }
        }
        Ok(h)
    }

    /// Outcome probabilities for a comparison against `threshold` inside `iv`.
    ///
    /// The comparator reports 1 when the input is below the threshold's DAC
    /// level, which sends the conversion into the lower sub-interval
    /// `[lb, threshold)`. The returned pair is `(p_z0, p_z1)`: `.0` is the
    /// probability of landing in `[threshold, ub)`, `.1` of landing in
    /// `[lb, threshold)`, both renormalized by the interval mass.
    pub fn branch_probabilities(
        &self,
        iv: Interval,
        threshold: u32,
    ) -> Result<(f64, f64), PmfError> {
        self.check_range(iv);
        if threshold <= iv.lb || threshold >= iv.ub {
            return Err(PmfError::ThresholdOutOfRange {
                threshold,
                lb: iv.lb,
                ub: iv.ub,
            });
        }
        let lower: f64 = self.probs[iv.lb as usize..threshold as usize].iter().sum();
        let upper: f64 = self.probs[threshold as usize..iv.ub as usize].iter().sum();
        let m = lower + upper;
        if m <= 0.0 {
            return Err(PmfError::ZeroMassInterval {
                lb: iv.lb,
                ub: iv.ub,
            });
        }
        Ok((upper / m, lower / m))
    }

    fn check_range(&self, iv: Interval) {
        assert!(
            iv.ub <= self.len(),
            "interval [{}, {}) reaches past the {}-bit code range",
            iv.lb,
            iv.ub,
            self.bits
        );
    }
}

/// A pmf loaded from text, along with the raw (pre-normalization) sum.
#[derive(Debug, Clone)]
pub struct PmfLoad {
    pub pmf: Pmf,
    pub raw_sum: f64,
}

pub(crate) fn entropy_of(probs: &[f64]) -> f64 {
    let mut h = 0.0;
    for &p in probs {
        if p > 0.0 {
            h -= p * p.log2();
        }
    }
    h
}

fn infer_bits(len: usize) -> Result<u32, PmfError> {
    if len >= 2 && len.is_power_of_two() {
        Ok(len.trailing_zeros())
    } else {
        Err(PmfError::BadLength(len))
    }
}

fn check_entries(probs: &[f64]) -> Result<(), PmfError> {
    for (code, &p) in probs.iter().enumerate() {
        if !p.is_finite() || p < 0.0 {
            return Err(PmfError::BadEntry {
                code: code as u32,
                value: p,
            });
        }
    }
    Ok(())
}
