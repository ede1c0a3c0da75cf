//! Experiment orchestration: resolve the stimulus, simulate each requested
//! resolution through the selected engines, and assemble the CSV report.

use std::fmt::Write as _;
use std::fs::{self, File};
use std::io::BufReader;

use anyhow::{bail, ensure, Context, Result};
use mer_adc::adapt::{self, AdaptiveConfig};
use mer_adc::siggen::{self, SignalSpec};
use mer_adc::tree::MAX_OPTIMAL_BITS;
use mer_adc::{build_binary_tree, build_mer_tree, build_optimal_tree, AdcConfig, Pmf, SignalKind};

use crate::args::{Args, BitsRange, Dist, Mode};

const REPORT_HEADER: &str = "bits,entropy_bits,avg_cycles_binary,avg_cycles_mer,\
avg_cycles_adaptive,expected_len_mer,expected_len_optimal,samples,seed\n";

/// Where the input distribution comes from: an analytic family evaluated per
/// resolution, or one fixed code pmf supplied by the user.
enum Stimulus {
    Analytic(SignalKind),
    Provided(Pmf),
}

pub fn run(args: &Args) -> Result<()> {
    let bits_range = args.bits.expect("clap requires --bits without --demo");
    let stimulus = resolve_stimulus(args)?;
    check_flag_combinations(args, bits_range, &stimulus)?;

    let mut report = String::from(REPORT_HEADER);
    let mut dumps = String::new();
    for bits in bits_range.lo..=bits_range.hi {
        let row = run_row(args, bits, &stimulus)
            .with_context(|| format!("row for {bits} bits failed"))?;
        report.push_str(&row.csv_line);
        dumps.push_str(&row.dump);
    }

    if args.dump_tree {
        println!("{dumps}");
    }
    print!("{report}");
    if let Some(path) = &args.tree_out {
        fs::write(path, &dumps).with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(())
}

fn resolve_stimulus(args: &Args) -> Result<Stimulus> {
    if let Some(path) = &args.pmf_file {
        let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
        let load = Pmf::from_text(BufReader::new(file))
            .with_context(|| format!("reading {}", path.display()))?;
        report_raw_sum(load.raw_sum);
        return Ok(Stimulus::Provided(load.pmf));
    }
    if let Some(text) = &args.pmf_inline {
        let weights: Vec<f64> = text
            .split(',')
            .map(|s| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|_| anyhow::anyhow!("bad probability in --pmf-inline: {s}"))
            })
            .collect::<Result<_>>()?;
        let raw_sum: f64 = weights.iter().sum();
        let pmf = Pmf::normalized(weights).context("--pmf-inline")?;
        report_raw_sum(raw_sum);
        return Ok(Stimulus::Provided(pmf));
    }

    let dist = args.dist.unwrap_or(Dist::Uniform);
    let kind = match dist {
        Dist::Uniform => {
            ensure!(
                args.par_db.is_empty() && args.weights.is_empty(),
                "--par-db/--weights apply to gaussian and mixture distributions only"
            );
            SignalKind::Uniform
        }
        Dist::Gaussian => {
            ensure!(
                args.par_db.len() == 1,
                "--dist gaussian needs exactly one --par-db value"
            );
            ensure!(
                args.weights.is_empty(),
                "--weights applies to mixtures only"
            );
            SignalKind::gaussian(args.par_db[0])
        }
        Dist::Mixture => {
            ensure!(
                !args.par_db.is_empty() && args.par_db.len() == args.weights.len(),
                "--dist mixture needs matching --par-db and --weights lists"
            );
            let pairs: Vec<(f64, f64)> = args
                .par_db
                .iter()
                .copied()
                .zip(args.weights.iter().copied())
                .collect();
            SignalKind::mixture(&pairs)
        }
    };
    Ok(Stimulus::Analytic(kind))
}

fn report_raw_sum(raw_sum: f64) {
    if (raw_sum - 1.0).abs() > mer_adc::pmf::RAW_SUM_REPORT_THRESHOLD {
        eprintln!("note: supplied probabilities sum to {raw_sum}; renormalized");
    }
}

fn check_flag_combinations(args: &Args, bits: BitsRange, stimulus: &Stimulus) -> Result<()> {
    if args.oracle {
        ensure!(
            bits.hi <= MAX_OPTIMAL_BITS,
            "--oracle supports up to {MAX_OPTIMAL_BITS} bits (the table grows as 2^bits squared); requested {}",
            bits.hi
        );
    }
    if args.csv_out.is_some() || args.log_out.is_some() {
        ensure!(
            bits.is_single(),
            "--csv-out and --log-out need a single --bits value"
        );
    }
    if args.log_out.is_some() {
        ensure!(
            matches!(args.mode, Mode::Adaptive | Mode::All),
            "--log-out needs the adaptive engine (--mode adaptive or all)"
        );
    }
    if let Stimulus::Provided(pmf) = stimulus {
        ensure!(
            bits.is_single() && pmf.bits() == bits.lo,
            "a supplied pmf with {} entries is a {}-bit distribution; pass --bits {}",
            pmf.len(),
            pmf.bits(),
            pmf.bits()
        );
    }
    Ok(())
}

struct Row {
    csv_line: String,
    dump: String,
}

struct EngineOut {
    label: &'static str,
    codes: Vec<u32>,
    cycles: Vec<u32>,
    average: Option<f64>,
}

fn run_row(args: &Args, bits: u32, stimulus: &Stimulus) -> Result<Row> {
    let cfg = AdcConfig::new(bits, args.delta);
    let (kind, pmf) = match stimulus {
        Stimulus::Analytic(kind) => {
            let spec = SignalSpec {
                kind: kind.clone(),
                seed: args.seed,
            };
            (kind.clone(), siggen::exact_pmf(&spec, &cfg)?)
        }
        Stimulus::Provided(pmf) => (SignalKind::FromPmf(pmf.clone()), pmf.clone()),
    };

    let mer_tree = build_mer_tree(&pmf);
    let expected_mer = mer_tree.expected_length(&pmf)?;
    let expected_optimal = if bits <= MAX_OPTIMAL_BITS {
        Some(build_optimal_tree(&pmf)?.expected_length(&pmf)?)
    } else {
        eprintln!(
            "note: optimal-schedule column skipped at {bits} bits; \
the exact table is kept to {MAX_OPTIMAL_BITS} bits"
        );
        None
    };

    let spec = SignalSpec {
        kind,
        seed: args.seed,
    };
    let xs = siggen::generate(&spec, args.samples, &cfg)?;
    let wants = |m: Mode| args.mode == m || args.mode == Mode::All;
    let mut engines: Vec<EngineOut> = Vec::new();

    if wants(Mode::Binary) {
        let batch = cfg.convert_batch(&xs, &build_binary_tree(bits), false)?;
        engines.push(EngineOut {
            label: "binary",
            average: batch.average_cycles(),
            codes: batch.codes,
            cycles: batch.cycles,
        });
    }
    if wants(Mode::Mer) {
        let batch = cfg.convert_batch(&xs, &mer_tree, false)?;
        engines.push(EngineOut {
            label: "mer",
            average: batch.average_cycles(),
            codes: batch.codes,
            cycles: batch.cycles,
        });
    }
    if wants(Mode::Adaptive) {
        let opts = AdaptiveConfig {
            window: args
                .window
                .unwrap_or_else(|| AdaptiveConfig::for_bits(bits).window),
            l1_threshold: args.l1_threshold,
        };
        let run = adapt::run_adaptive(&xs, cfg, opts)?;
        report_post_settle(bits, &run, opts.window);
        if let Some(path) = &args.log_out {
            let mut log = String::new();
            for ev in &run.rebuilds {
                writeln!(
                    log,
                    "rebuild at sample {}, generation {}, window L1 {:.6}, expected length {:.6}",
                    ev.sample_index, ev.generation, ev.window_l1, ev.expected_length
                )
                .unwrap();
            }
            fs::write(path, log).with_context(|| format!("writing {}", path.display()))?;
        }
        engines.push(EngineOut {
            label: "adaptive",
            average: run.average_cycles(),
            codes: run.codes,
            cycles: run.cycles,
        });
    }

    // Schedules only reorder comparisons; every engine must decode every
    // sample to the same code.
    for pair in engines.windows(2) {
        if let Some(i) = (0..xs.len()).find(|&i| pair[0].codes[i] != pair[1].codes[i]) {
            bail!(
                "internal check failed: {} and {} engines disagree at sample {i}",
                pair[0].label,
                pair[1].label
            );
        }
    }

    if let Some(path) = &args.csv_out {
        let source = match args.mode {
            Mode::Binary => "binary",
            Mode::Adaptive => "adaptive",
            Mode::Mer | Mode::All => "mer",
        };
        let engine = engines
            .iter()
            .find(|e| e.label == source)
            .expect("selected engine ran");
        let mut out = String::from("sample_index,x,code,cycles\n");
        for (i, &x) in xs.iter().enumerate() {
            writeln!(out, "{i},{x},{},{}", engine.codes[i], engine.cycles[i]).unwrap();
        }
        fs::write(path, out).with_context(|| format!("writing {}", path.display()))?;
    }

    let average_of = |label: &str| {
        engines
            .iter()
            .find(|e| e.label == label)
            .and_then(|e| e.average)
    };
    let cell = |v: Option<f64>| v.map(|x| format!("{x:.6}")).unwrap_or_default();
    let csv_line = format!(
        "{bits},{:.6},{},{},{},{:.6},{},{},{}\n",
        pmf.entropy(),
        cell(average_of("binary")),
        cell(average_of("mer")),
        cell(average_of("adaptive")),
        expected_mer,
        cell(expected_optimal),
        args.samples,
        args.seed
    );

    let dump = if args.mode == Mode::Binary {
        build_binary_tree(bits).dump("binary")
    } else {
        mer_tree.dump("mer")
    };
    Ok(Row { csv_line, dump })
}

/// The whole-run adaptive average includes the conventional warm-up, so the
/// settled figure goes to stderr alongside it.
fn report_post_settle(bits: u32, run: &adapt::AdaptiveRun, window: u64) {
    let Some(first) = run.rebuilds.first() else {
        return;
    };
    let start = first.sample_index as usize;
    let window = window as usize;
    let complete = run.cycles.len().saturating_sub(start) / window;
    if complete == 0 {
        return;
    }
    let slice = &run.cycles[start..start + complete * window];
    let avg = slice.iter().map(|&c| f64::from(c)).sum::<f64>() / slice.len() as f64;
    eprintln!(
        "bits {bits}: adaptive post-settle windowed average {avg:.6} \
over {complete} complete windows (whole-run {:.6})",
        run.average_cycles().expect("run has samples"),
    );
}
