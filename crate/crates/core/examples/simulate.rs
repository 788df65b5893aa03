//! Simulates one trajectory of the supermarket model with memory and writes
//! its sampled tail proportions to `out/trajectory.csv`.
//!
//! ```text
//! cargo run --release --example simulate -- [N] [seed]
//! ```

use std::path::Path;

use supermarket::sim::{simulate, SimOptions};
use supermarket::{MicroState, ModelParams};

fn main() -> supermarket::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let queues = args.first().map_or(1000, |s| s.parse().expect("N"));
    let seed = args.get(1).map_or(7, |s| s.parse().expect("seed"));
    let params = ModelParams::new(0.9, 2, queues)?;
    let opts = SimOptions { d_record: 5, grid_per_unit: 20.0, keep_events: true };
    let tr = simulate(params, &MicroState::one_in_memory(queues), 20.0, &opts, seed)?;

    println!("{} arrivals, {} departures", tr.n_arrivals, tr.n_departures);
    for g in tr.grid.iter().step_by(50) {
        let z: Vec<String> = g.z.iter().map(|v| format!("{v:.4}")).collect();
        println!("t = {:>5.1}: z = [{}], memory length {}", g.t, z.join(", "), g.mem_len);
    }
    let mut busy = 0.0;
    tr.visit_intervals(|a, b, s| busy += (b - a) * s.tail().z(1));
    println!("time-average fraction of busy queues: {:.4}", busy / tr.horizon);
    tr.save_csv(Path::new("out/trajectory.csv"))?;
    println!("wrote out/trajectory.csv");
    Ok(())
}
