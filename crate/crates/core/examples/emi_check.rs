//! Tests the exponential martingale inequality on an M/M/1 queue with
//! `phi = queue length`.
//!
//! ```text
//! cargo run --release --example emi_check
//! ```

use supermarket::bounds::{emi_empirical, BirthDeath};

fn main() -> supermarket::Result<()> {
    let chain = BirthDeath { birth: 0.5, death: 1.0, cap: 100, start: 0, horizon: 1e3 };
    let phi: Vec<f64> = (0..=chain.cap).map(|x| x as f64).collect();
    println!("{:>6} {:>6} {:>10} {:>10} {:>10}", "delta", "eps", "empirical", "wilson_lo", "bound");
    for &(delta, eps) in &[(2.0, 4.0), (4.0, 4.0), (4.0, 10.0), (8.0, 10.0), (8.0, 25.0)] {
        let r = emi_empirical(chain, &phi, delta, eps, 100_000, 17)?;
        println!("{delta:>6} {eps:>6} {:>10.5} {:>10.5} {:>10.5}", r.empirical, r.wilson_low, r.bound);
    }
    Ok(())
}
