//! Shared helpers for the integration suites: exact Kraft checking,
//! deterministic pmf generators, a brute-force tree enumerator, and the
//! input collections the acceptance criteria share.

#![allow(dead_code)]

use mer_adc::siggen::{self, SignalSpec};
use mer_adc::{build_mer_tree, build_optimal_tree, AdcConfig, DecisionTree, Pmf, SignalKind};
use num_bigint::BigUint;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ChiSquared, ContinuousCDF};

pub fn worked_pmf() -> Pmf {
    Pmf::new(vec![0.125, 0.125, 0.25, 0.5]).unwrap()
}

/// Exact check of the complete-tree depth identity: sum of 2^-depth over all
/// codes equals 1. Rearranged to integers as sum of 2^(maxd - d) == 2^maxd so
/// deep schedules cannot lose precision.
pub fn kraft_holds_exactly(tree: &DecisionTree) -> bool {
    let depths = tree.depths();
    let maxd = *depths.iter().max().expect("trees have at least one leaf");
    let mut sum = BigUint::from(0u32);
    for &d in &depths {
        sum += BigUint::from(1u32) << (maxd - d);
    }
    sum == BigUint::from(1u32) << maxd
}

/// Random strictly positive pmf, renormalized.
pub fn random_pmf(bits: u32, rng: &mut ChaCha8Rng) -> Pmf {
    let n = 1usize << bits;
    let weights: Vec<f64> = (0..n).map(|_| rng.random::<f64>() + 1e-3).collect();
    Pmf::normalized(weights).unwrap()
}

/// Random pmf whose entries are exact multiples of 2^-30, built by cutting
/// 2^30 grains at distinct points. Every probability is then a dyadic
/// rational, and expected lengths (sums of probability times small integer
/// depths) evaluate exactly in f64, so schedule-quality comparisons need no
/// tolerance at all.
pub fn random_dyadic_pmf(bits: u32, rng: &mut ChaCha8Rng) -> Pmf {
    const GRAINS: u64 = 1 << 30;
    let n = 1usize << bits;
    let mut cuts: Vec<u64>;
    loop {
        cuts = (0..n - 1).map(|_| rng.random_range(1..GRAINS)).collect();
        cuts.sort_unstable();
        cuts.dedup();
        if cuts.len() == n - 1 {
            break;
        }
    }
    cuts.insert(0, 0);
    cuts.push(GRAINS);
    let probs: Vec<f64> = cuts
        .windows(2)
        .map(|w| (w[1] - w[0]) as f64 / GRAINS as f64)
        .collect();
    Pmf::new(probs).unwrap()
}

/// Depth vectors of every order-preserving full binary tree over `leaves`
/// codes, by recursive split enumeration. Feasible for small trees only
/// (Catalan growth); the optimality tests stay at 8 leaves or fewer.
pub fn all_depth_vectors(leaves: usize) -> Vec<Vec<u32>> {
    if leaves == 1 {
        return vec![vec![0]];
    }
    let mut out = Vec::new();
    for k in 1..leaves {
        for left in all_depth_vectors(k) {
            for right in all_depth_vectors(leaves - k) {
                let mut v: Vec<u32> = left.iter().map(|d| d + 1).collect();
                v.extend(right.iter().map(|d| d + 1));
                out.push(v);
            }
        }
    }
    out
}

pub fn best_length_by_enumeration(pmf: &Pmf) -> f64 {
    all_depth_vectors(pmf.len() as usize)
        .iter()
        .map(|v| {
            v.iter()
                .zip(pmf.probs())
                .map(|(&d, &p)| f64::from(d) * p)
                .sum::<f64>()
        })
        .fold(f64::INFINITY, f64::min)
}

/// Pearson goodness-of-fit statistic against the 0.999 critical value.
/// Adjacent codes are pooled left to right until each pooled bin expects at
/// least 5 counts; a light trailing bin is merged into its neighbor.
pub fn chi_square_gof(counts: &[u64], expected: &Pmf) -> (f64, f64) {
    assert_eq!(counts.len(), expected.len() as usize);
    let n = counts.iter().sum::<u64>() as f64;
    let mut pooled: Vec<(f64, f64)> = Vec::new();
    let mut acc = (0.0, 0.0);
    for (code, &c) in counts.iter().enumerate() {
        acc.0 += c as f64;
        acc.1 += expected.prob(code as u32) * n;
        if acc.1 >= 5.0 {
            pooled.push(acc);
            acc = (0.0, 0.0);
        }
    }
    if acc.1 > 0.0 {
        let last = pooled.last_mut().expect("at least one pooled bin");
        last.0 += acc.0;
        last.1 += acc.1;
    }
    assert!(pooled.len() >= 2, "too few bins for a goodness-of-fit test");
    let stat: f64 = pooled.iter().map(|(o, e)| (o - e) * (o - e) / e).sum();
    let df = (pooled.len() - 1) as f64;
    let crit = ChiSquared::new(df).unwrap().inverse_cdf(0.999);
    (stat, crit)
}

/// Probe inputs for one code's cell: the lower wall, points spread through
/// the interior, and the last representable value below the upper wall.
pub fn cell_probes(cfg: &AdcConfig, code: u32, per_cell: u32) -> Vec<f64> {
    let lo = cfg.dac_reference(code);
    let hi = cfg.dac_reference(code + 1);
    let width = hi - lo;
    let mut probes = vec![lo, hi.next_down()];
    for k in 1..per_cell.saturating_sub(1) {
        probes.push(lo + width * f64::from(k) / f64::from(per_cell - 1));
    }
    probes.retain(|&x| x >= cfg.min_input() && x < cfg.input_limit());
    probes
}

// The generators below are shared between the criterion that uses the trees
// and the depth-identity sweep, so both see byte-identical structures.

/// One random pmf per resolution for the conversion-correctness sweep.
pub fn sweep_pmf(bits: u32) -> Pmf {
    let mut rng = ChaCha8Rng::seed_from_u64(2000 + u64::from(bits));
    random_pmf(bits, &mut rng)
}

/// Ten random pmfs per resolution for the engine-equivalence sweep.
pub fn engine_pmfs(bits: u32) -> Vec<Pmf> {
    let mut rng = ChaCha8Rng::seed_from_u64(3000 + u64::from(bits));
    (0..10).map(|_| random_pmf(bits, &mut rng)).collect()
}

/// The dyadic pmf population for the quality-ordering criterion.
pub fn ordering_pmfs() -> Vec<Pmf> {
    let mut out = Vec::new();
    for bits in 2..=6 {
        let mut rng = ChaCha8Rng::seed_from_u64(4000 + u64::from(bits));
        for _ in 0..200 {
            out.push(random_dyadic_pmf(bits, &mut rng));
        }
    }
    out
}

pub const SAMPLED_BITS: [u32; 5] = [4, 6, 8, 10, 12];
pub const SAMPLED_SEED: u64 = 7;

/// The stimulus kinds for the sampled-average criterion.
pub fn sampled_kinds() -> Vec<(&'static str, SignalKind)> {
    vec![
        ("gaussian 10 dB", SignalKind::gaussian(10.0)),
        (
            "mixture 0.1 at 10 dB / 0.9 at 30 dB",
            SignalKind::mixture(&[(10.0, 0.1), (30.0, 0.9)]),
        ),
    ]
}

/// Every schedule the first five acceptance criteria construct, rebuilt from
/// the same generators, labeled for failure messages.
pub fn acceptance_trees() -> Vec<(String, DecisionTree)> {
    let mut trees = Vec::new();
    let worked = worked_pmf();
    trees.push(("worked example mer".to_string(), build_mer_tree(&worked)));
    trees.push((
        "worked example optimal".to_string(),
        build_optimal_tree(&worked).unwrap(),
    ));
    for bits in 1..=8 {
        trees.push((
            format!("binary {bits} bits"),
            mer_adc::build_binary_tree(bits),
        ));
        let pmf = sweep_pmf(bits);
        trees.push((format!("sweep mer {bits} bits"), build_mer_tree(&pmf)));
        trees.push((
            format!("sweep optimal {bits} bits"),
            build_optimal_tree(&pmf).unwrap(),
        ));
    }
    for bits in 2..=8 {
        for (i, pmf) in engine_pmfs(bits).iter().enumerate() {
            trees.push((format!("engine mer {bits} bits #{i}"), build_mer_tree(pmf)));
        }
    }
    for (i, pmf) in ordering_pmfs().iter().enumerate() {
        trees.push((format!("ordering mer #{i}"), build_mer_tree(pmf)));
        trees.push((
            format!("ordering optimal #{i}"),
            build_optimal_tree(pmf).unwrap(),
        ));
    }
    for (name, kind) in sampled_kinds() {
        for bits in SAMPLED_BITS {
            let cfg = AdcConfig::new(bits, 1.0);
            let spec = SignalSpec {
                kind: kind.clone(),
                seed: SAMPLED_SEED,
            };
            let pmf = siggen::exact_pmf(&spec, &cfg).unwrap();
            trees.push((
                format!("sampled mer {name} {bits} bits"),
                build_mer_tree(&pmf),
            ));
        }
    }
    trees
}
