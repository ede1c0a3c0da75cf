//! Flag definitions and the small parsers behind them.

use std::path::PathBuf;

use clap::{Parser, ValueEnum};

/// Largest supported resolution: the report needs 2^bits-sized tables per
/// row, so this caps memory at about a million codes.
pub const MAX_BITS: u32 = 20;

/// Inclusive resolution range from `--bits`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BitsRange {
    pub lo: u32,
    pub hi: u32,
}

impl BitsRange {
    pub fn is_single(self) -> bool {
        self.lo == self.hi
    }
}

fn parse_bits(text: &str) -> Result<BitsRange, String> {
    let parse_one = |s: &str| {
        s.trim()
            .parse::<u32>()
            .map_err(|_| format!("bad bits value: {s}"))
    };
    let (lo, hi) = match text.split_once("..") {
        Some((a, b)) => (parse_one(a)?, parse_one(b)?),
        None => {
            let n = parse_one(text)?;
            (n, n)
        }
    };
    if lo < 1 || hi > MAX_BITS || lo > hi {
        return Err(format!(
            "bits must satisfy 1 <= lo <= hi <= {MAX_BITS}, got {lo}..{hi}"
        ));
    }
    Ok(BitsRange { lo, hi })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Dist {
    Uniform,
    Gaussian,
    Mixture,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Binary,
    Mer,
    Adaptive,
    All,
}

/// SAR ADC clock-compression experiment runner.
///
/// Simulates successive-approximation conversion under conventional,
/// entropy-scheduled (MER), and adaptive comparison schedules, and prints a
/// plot-ready CSV report to stdout. Warnings and auxiliary figures go to
/// stderr so stdout stays byte-deterministic for a given flag set and seed.
#[derive(Debug, Parser)]
#[command(name = "mer-adc", version)]
pub struct Args {
    /// Resolution in bits: a single value or an inclusive range like 4..12.
    #[arg(long, value_parser = parse_bits, required_unless_present = "demo")]
    pub bits: Option<BitsRange>,

    /// Analytic input distribution (defaults to uniform when no
    /// --pmf-file/--pmf-inline is given).
    #[arg(long, value_enum, conflicts_with_all = ["pmf_file", "pmf_inline"])]
    pub dist: Option<Dist>,

    /// Peak-to-average ratio in dB: one value for gaussian, a comma list for
    /// mixture components.
    #[arg(long, value_delimiter = ',')]
    pub par_db: Vec<f64>,

    /// Mixture component weights, a comma list matching --par-db.
    #[arg(long, value_delimiter = ',')]
    pub weights: Vec<f64>,

    /// Code distribution from a file: one probability per line, 2^bits
    /// lines. Values are renormalized; a drifting raw sum is reported.
    #[arg(long, conflicts_with = "pmf_inline")]
    pub pmf_file: Option<PathBuf>,

    /// Code distribution inline: comma-separated probabilities.
    #[arg(long)]
    pub pmf_inline: Option<String>,

    /// Conversion step size (volts per code).
    #[arg(long, default_value_t = 1.0)]
    pub delta: f64,

    /// Samples to draw per row.
    #[arg(long, default_value_t = 100_000)]
    pub samples: usize,

    /// Generator seed; equal flags and seed reproduce the report byte for
    /// byte.
    #[arg(long, default_value_t = 1)]
    pub seed: u64,

    /// Which engines fill the sampled-average columns.
    #[arg(long, value_enum, default_value_t = Mode::All)]
    pub mode: Mode,

    /// Force the optimal-schedule column (errors above 12 bits, where the
    /// quadratic table is no longer reasonable).
    #[arg(long)]
    pub oracle: bool,

    /// Per-sample CSV file (sample_index,x,code,cycles); single-bits runs
    /// only. Under --mode all the rows carry the MER engine's cycles.
    #[arg(long)]
    pub csv_out: Option<PathBuf>,

    /// Write the comparison schedule dump to a file.
    #[arg(long)]
    pub tree_out: Option<PathBuf>,

    /// Write the adaptive rebuild log to a file; single-bits runs with the
    /// adaptive engine only.
    #[arg(long)]
    pub log_out: Option<PathBuf>,

    /// Print the comparison schedule before the report.
    #[arg(long)]
    pub dump_tree: bool,

    /// Adaptive rebuild window in samples (default max(4096, 16 * 2^bits)).
    #[arg(long)]
    pub window: Option<u64>,

    /// Histogram L1 distance between consecutive windows past which the
    /// adaptive engine rebuilds its schedule.
    #[arg(long, default_value_t = 0.02)]
    pub l1_threshold: f64,

    /// Print the worked 2-bit schedule walkthrough and exit.
    #[arg(long)]
    pub demo: bool,
}
