//! Fluid convergence and tail events at desk scale: simulates replicas at
//! several population sizes, compares them with the limit path and writes
//! the summaries to `out/convergence/`.
//!
//! ```text
//! cargo run --release --example convergence
//! ```

use std::path::Path;

use supermarket::config::ExperimentConfig;
use supermarket::harness::{emit, run_convergence, RunOptions};

fn main() -> supermarket::Result<()> {
    let mut cfg = ExperimentConfig::new(0.7, 2, vec![100, 1000, 10_000])?;
    cfg.t0 = 5.0;
    cfg.replicas = 20;
    let result = run_convergence(&cfg, RunOptions::default())?;

    println!(
        "{:>7} {:>2} {:>12} {:>10} {:>8} {:>8} {:>10}",
        "N", "d", "median D*", "eps", "exceed", "MRC", "A_d ratio"
    );
    for s in &result.per_n {
        println!(
            "{:>7} {:>2} {:>12.4e} {:>10.4e} {:>8.2} {:>8.2} {:>10.3e}",
            s.queues, s.d, s.median_d_star, s.eps, s.exceed_freq, s.mrc_freq, s.a_d_ratio
        );
        let mrb: Vec<String> = cfg.r_list.iter().zip(&s.mrb_freq).map(|(r, f)| format!("R={r}: {f:.2}")).collect();
        println!("        tail event on level d+1: {}", mrb.join(", "));
    }
    if let Some(slope) = result.slope {
        println!("slope of ln median D* against ln N: {slope:.3}");
    }
    for p in emit(&result, Path::new("out/convergence"))? {
        println!("wrote {}", p.display());
    }
    Ok(())
}
