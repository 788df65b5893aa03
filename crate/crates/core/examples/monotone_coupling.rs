//! Runs two copies of the chain on shared randomness from ordered initial
//! states and confirms that the order survives every event.
//!
//! ```text
//! cargo run --release --example monotone_coupling
//! ```

use rand::Rng;
use supermarket::rng::rng_from_seed;
use supermarket::sim::coupled_simulate;
use supermarket::SortedLengths;

fn main() -> supermarket::Result<()> {
    let queues = 50;
    let mut rng = rng_from_seed(2024);
    let mut events = 0;
    for run in 0..100u64 {
        let lo: Vec<usize> = (0..queues).map(|_| rng.random_range(0..4)).collect();
        let hi: Vec<usize> = lo.iter().map(|&v| v + rng.random_range(0..3)).collect();
        let (lo, hi) = (sorted(lo), sorted(hi));
        // sorting both keeps the componentwise order of the non-memory part
        let a = SortedLengths::new(lo)?;
        let b = SortedLengths::new(hi)?;
        let n = 1 + (run % 2) as usize;
        let out = coupled_simulate(&a, &b, 0.8, n, 5.0, run, false)?;
        events += out.events;
    }
    println!("100 coupled runs, {events} events, no ordering violation");
    Ok(())
}

fn sorted(mut y: Vec<usize>) -> Vec<usize> {
    y[1..].sort_unstable();
    y
}
