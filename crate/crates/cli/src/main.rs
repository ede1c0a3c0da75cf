//! Experiment runner for entropy-scheduled SAR ADC simulation.

mod args;
mod demo;
mod experiment;

use clap::Parser;

fn main() -> anyhow::Result<()> {
    let args = args::Args::parse();
    if args.demo {
        demo::print_demo();
        return Ok(());
    }
    experiment::run(&args)
}
