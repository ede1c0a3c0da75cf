//! The built-in walkthrough: a skewed 2-bit code distribution, the schedule
//! balanced mass-by-mass on it, and the cycle counts that fall out.

use mer_adc::{build_mer_tree, Pmf};

pub fn print_demo() {
    let pmf = Pmf::new(vec![0.125, 0.125, 0.25, 0.5]).unwrap();
    let tree = build_mer_tree(&pmf);
    tree.validate().expect("built schedules are well formed");

    let probs: Vec<String> = pmf.probs().iter().map(|p| p.to_string()).collect();
    println!("input pmf over {} codes: {}", pmf.len(), probs.join(" "));
    println!("entropy: {} bits", pmf.entropy());
    println!();
    print!("{}", tree.dump("mer"));
    println!();
    let depths: Vec<String> = tree.depths().iter().map(|d| d.to_string()).collect();
    println!("code depths: {}", depths.join(" "));
    println!(
        "expected cycles per conversion: {} (conventional schedule: {})",
        tree.expected_length(&pmf).unwrap(),
        pmf.bits()
    );
}
