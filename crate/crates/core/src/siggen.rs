//! Deterministic test-signal generation with matching code distributions.
//!
//! Experiments need two views of the same stimulus: a stream of input
//! voltages for the behavioral converter, and the analytic probability of
//! each output code so schedules and entropies can be computed exactly.
//! [`generate`] produces the former, [`exact_pmf`] the latter, from one
//! [`SignalSpec`].
//!
//! Stimulus levels are expressed through the converter geometry: the
//! half-range is `A = 2^(bits-1) * delta` and signals center on
//! `c = (2^(bits-1) - 0.5) * delta`, the midpoint of the input range, so
//! code histograms come out symmetric. A Gaussian's spread is given as a
//! peak-to-average ratio in dB: `sigma = A / 10^(par_db / 20)`. Samples
//! falling outside the representable range are clipped to its edges, and
//! the analytic pmf assigns the same tail mass to the edge codes.
//!
//! Generation is reproducible: the stream is drawn from a ChaCha8 generator
//! seeded with `SignalSpec::seed`, so equal specs give equal streams on
//! every platform.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use statrs::function::erf::erfc;
use thiserror::Error;

use crate::pmf::Pmf;
use crate::sim::AdcConfig;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SignalError {
    #[error("peak-to-average ratio must be positive and finite, got {0} dB")]
    BadParDb(f64),
    #[error("mixture needs at least one component")]
    EmptyMixture,
    #[error("component weights must be finite and non-negative and sum to 1; they sum to {0}")]
    BadWeights(f64),
    #[error("code pmf covers {pmf_bits} bits but the converter has {cfg_bits}")]
    BitsMismatch { pmf_bits: u32, cfg_bits: u32 },
    #[error("a code-pmf stimulus has no analytic distribution of its own")]
    UnsupportedKind,
}

/// One Gaussian member of a mixture stimulus.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Component {
    pub par_db: f64,
    pub weight: f64,
}

/// The stimulus family.
#[derive(Debug, Clone, PartialEq)]
pub enum SignalKind {
    /// Uniform over the whole input range; every code equally likely.
    Uniform,
    /// Centered Gaussian with the given peak-to-average ratio.
    Gaussian { par_db: f64 },
    /// Weighted blend of centered Gaussians; the component is drawn first,
    /// then the value.
    Mixture { components: Vec<Component> },
    /// Codes drawn from a given pmf, emitted as the matching cell centers.
    /// This is how file-supplied distributions are replayed.
    FromPmf(Pmf),
}

/// A complete stimulus description: what to draw and from which seed.
#[derive(Debug, Clone, PartialEq)]
pub struct SignalSpec {
    pub kind: SignalKind,
    pub seed: u64,
}

impl SignalKind {
    pub fn gaussian(par_db: f64) -> Self {
        SignalKind::Gaussian { par_db }
    }

    pub fn mixture(pairs: &[(f64, f64)]) -> Self {
        SignalKind::Mixture {
            components: pairs
                .iter()
                .map(|&(par_db, weight)| Component { par_db, weight })
                .collect(),
        }
    }

    fn validate(&self, cfg: &AdcConfig) -> Result<(), SignalError> {
        match self {
            SignalKind::Uniform => Ok(()),
            SignalKind::Gaussian { par_db } => check_par_db(*par_db),
            SignalKind::Mixture { components } => {
                if components.is_empty() {
                    return Err(SignalError::EmptyMixture);
                }
                let mut sum = 0.0;
                for c in components {
                    check_par_db(c.par_db)?;
                    if !c.weight.is_finite() || c.weight < 0.0 {
                        return Err(SignalError::BadWeights(c.weight));
                    }
                    sum += c.weight;
                }
                if (sum - 1.0).abs() > 1e-9 {
                    return Err(SignalError::BadWeights(sum));
                }
                Ok(())
            }
            SignalKind::FromPmf(pmf) => {
                if pmf.bits() != cfg.bits() {
                    return Err(SignalError::BitsMismatch {
                        pmf_bits: pmf.bits(),
                        cfg_bits: cfg.bits(),
                    });
                }
                Ok(())
            }
        }
    }
}

fn check_par_db(par_db: f64) -> Result<(), SignalError> {
    if par_db.is_finite() && par_db > 0.0 {
        Ok(())
    } else {
        Err(SignalError::BadParDb(par_db))
    }
}

fn sigma_for(par_db: f64, cfg: &AdcConfig) -> f64 {
    cfg.full_scale_half_range() / 10f64.powf(par_db / 20.0)
}

/// Draws `count` input samples, clipped into the representable range.
pub fn generate(spec: &SignalSpec, count: usize, cfg: &AdcConfig) -> Result<Vec<f64>, SignalError> {
    spec.kind.validate(cfg)?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let lo = cfg.min_input();
    let hi = cfg.input_limit();
    let top = hi.next_down();
    let center = cfg.mid_scale();
    let mut xs = Vec::with_capacity(count);
    match &spec.kind {
        SignalKind::Uniform => {
            let span = hi - lo;
            for _ in 0..count {
                let x = lo + rng.random::<f64>() * span;
                xs.push(x.clamp(lo, top));
            }
        }
        SignalKind::Gaussian { par_db } => {
            let normal = Normal::new(0.0, sigma_for(*par_db, cfg)).expect("validated sigma");
            for _ in 0..count {
                let x = center + normal.sample(&mut rng);
                xs.push(x.clamp(lo, top));
            }
        }
        SignalKind::Mixture { components } => {
            let normals: Vec<Normal<f64>> = components
                .iter()
                .map(|c| Normal::new(0.0, sigma_for(c.par_db, cfg)).expect("validated sigma"))
                .collect();
            for _ in 0..count {
                let pick = rng.random::<f64>();
                let mut acc = 0.0;
                let mut chosen = components.len() - 1;
                for (i, c) in components.iter().enumerate() {
                    acc += c.weight;
                    if pick < acc {
                        chosen = i;
                        break;
                    }
                }
                let x = center + normals[chosen].sample(&mut rng);
                xs.push(x.clamp(lo, top));
            }
        }
        SignalKind::FromPmf(pmf) => {
            let cdf = pmf.prefix_masses();
            let last = cfg.code_count() - 1;
            for _ in 0..count {
                let u = rng.random::<f64>();
                // First code whose cumulative mass exceeds u.
                let code = cdf[1..].partition_point(|&c| c <= u) as u32;
                let code = code.min(last);
                xs.push(cfg.delta() * f64::from(code));
            }
        }
    }
    Ok(xs)
}

/// The analytic code distribution of a stimulus.
///
/// For Gaussian kinds each code's probability is the normal CDF difference
/// across its cell, with everything beyond the first and last cell walls
/// (the clipped tails) assigned to the edge codes.
pub fn exact_pmf(spec: &SignalSpec, cfg: &AdcConfig) -> Result<Pmf, SignalError> {
    spec.kind.validate(cfg)?;
    match &spec.kind {
        SignalKind::Uniform => Ok(Pmf::uniform(cfg.bits())),
        SignalKind::Gaussian { par_db } => {
            let weights = gaussian_cell_masses(sigma_for(*par_db, cfg), cfg);
            Ok(Pmf::normalized(weights).expect("cdf differences are non-negative"))
        }
        SignalKind::Mixture { components } => {
            let n = cfg.code_count() as usize;
            let mut weights = vec![0.0; n];
            for c in components {
                let part = gaussian_cell_masses(sigma_for(c.par_db, cfg), cfg);
                for (w, p) in weights.iter_mut().zip(part) {
                    *w += c.weight * p;
                }
            }
            Ok(Pmf::normalized(weights).expect("mixture masses are non-negative"))
        }
        SignalKind::FromPmf(_) => Err(SignalError::UnsupportedKind),
    }
}

/// Standard normal CDF.
fn phi(z: f64) -> f64 {
    0.5 * erfc(-z / std::f64::consts::SQRT_2)
}

fn gaussian_cell_masses(sigma: f64, cfg: &AdcConfig) -> Vec<f64> {
    let count = cfg.code_count();
    let center = cfg.mid_scale();
    let z = |wall: u32| (cfg.dac_reference(wall) - center) / sigma;
    let mut masses = Vec::with_capacity(count as usize);
    for code in 0..count {
        let m = if code == 0 {
            phi(z(1))
        } else if code == count - 1 {
            1.0 - phi(z(count - 1))
        } else {
            (phi(z(code + 1)) - phi(z(code))).max(0.0)
        };
        masses.push(m);
    }
    masses
}
