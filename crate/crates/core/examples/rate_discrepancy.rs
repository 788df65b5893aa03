//! Compares the exact jump rates of the memory length in a ten-queue system
//! with the idealized fast-chain rates, over states visited by the chain.
//!
//! ```text
//! cargo run --release --example rate_discrepancy
//! ```

use rand::Rng;
use supermarket::fluid::{cutoff_d, fixed_point};
use supermarket::sim::{apply_arrival, apply_departure, draw_arrival_sample, event_rng, in_region_u, rate_discrepancy};
use supermarket::{MicroState, ModelParams};

fn main() -> supermarket::Result<()> {
    let queues = 10;
    for n in [1, 2] {
        let params = ModelParams::new(0.5, n, queues)?;
        let mut table = fixed_point(params.limit(), 8);
        let d = cutoff_d(&mut table, (queues as f64).ln())?;
        let a = table.prefix(d);
        let mut s = MicroState::one_in_memory(queues);
        let mut rng = event_rng(9 + n as u64);
        let (mut kept, mut worst, mut violations) = (0, f64::NEG_INFINITY, 0);
        while kept < 1000 {
            // embedded jump chain: arrivals at rate N lambda, departures at rate busy
            let up = params.arrival_rate();
            if rng.random::<f64>() * (up + s.busy() as f64) < up {
                let slots = draw_arrival_sample(&s, n, &mut rng);
                apply_arrival(&mut s, &slots, &mut rng);
            } else {
                apply_departure(&mut s, &mut rng)?;
            }
            if !in_region_u(&s.tail().prefix(d), params.lambda, &a) {
                continue;
            }
            let r = rate_discrepancy(&s, params, d)?;
            worst = worst.max(r.total - r.bound);
            violations += usize::from(r.total > r.bound + 1e-9);
            kept += 1;
        }
        println!("n = {n}, d = {d}: {kept} states, {violations} violations, max(total - bound) = {worst:.4}");
    }
    Ok(())
}
