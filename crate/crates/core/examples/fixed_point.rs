//! Fixed point of the limit dynamics and the cutoff depth d(N).
//!
//! ```text
//! cargo run --example fixed_point -- [lambda] [n]
//! ```

use supermarket::fluid::{cutoff_d, fixed_point, tilde_a};
use supermarket::LimitParams;

fn main() -> supermarket::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let lambda = args.first().map_or(0.5, |s| s.parse().expect("lambda"));
    let n = args.get(1).map_or(2, |s| s.parse().expect("n"));
    let p = LimitParams::new(lambda, n)?;

    let mut table = fixed_point(p, 8);
    println!(
        "lambda = {lambda}, n = {n}: alpha = {:.6}, kappa = {:.6}, rho = {:.4}",
        table.alpha, table.kappa, table.rho
    );
    println!("{:>3} {:>24} {:>14}", "k", "log10 a_k", "a_k");
    for k in 0..=table.k_max() {
        let l = table.log_a(k);
        println!("{k:>3} {:>24.6} {:>14.6e}", l / std::f64::consts::LN_10, l.exp());
    }
    // successive log ratios approach alpha
    for k in 2..table.k_max() {
        println!("ln a_{} / ln a_{k} = {:.6}", k + 1, table.log_a(k + 1) / table.log_a(k));
    }

    println!("\n{:>10} {:>3} {:>14}", "N", "d", "tilde a_{d+1}");
    for e in 2..=9 {
        let ln_queues = (10f64).powi(e).ln();
        let d = cutoff_d(&mut table, ln_queues)?;
        println!("{:>10} {d:>3} {:>14.4e}", format!("1e{e}"), tilde_a(&mut table, ln_queues, d).value());
    }
    Ok(())
}
