//! Scans N = 2^j for the population size beyond which every hypothesis of the
//! explicit error bounds holds, and prints the constants and bounds there.
//!
//! ```text
//! cargo run --release --example bounds_scan -- [lambda] [n] [C_cfg]
//! ```

use supermarket::bounds::{check_hypotheses, constants_for, error_probability, ln_initial_deviation, scan_dyadic, Phi};
use supermarket::fluid::FixedPointTable;
use supermarket::LimitParams;

fn main() -> supermarket::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let lambda = args.first().map_or(0.5, |s| s.parse().expect("lambda"));
    let n = args.get(1).map_or(1, |s| s.parse().expect("n"));
    let c_cfg = args.get(2).map_or(4.0, |s| s.parse().expect("C_cfg"));
    let p = LimitParams::new(lambda, n)?;
    let t0 = 1.0;
    let phi = Phi::default();

    let scan = scan_dyadic(p, t0, c_cfg, phi, 4..=8192)?;
    match scan.a_bar_le_a_log2 {
        Some(j) => println!("A_bar <= A from N = 2^{j}"),
        None => println!("A_bar <= A does not settle on the grid"),
    }
    let Some(j0) = scan.n0_log2 else {
        println!("no N0 on the grid up to 2^8192");
        return Ok(());
    };
    println!("N0 = 2^{j0}");

    let ln_queues = j0 as f64 * std::f64::consts::LN_2;
    let mut table = FixedPointTable::new(p, 8);
    let c = constants_for(p, ln_queues, &mut table, c_cfg)?;
    println!("d = {}", c.d);
    for (name, ln) in c.entries() {
        println!("  ln {name:<7} = {ln:>14.4}");
    }
    let r = check_hypotheses(&c, phi.ln_eps(ln_queues), t0, ln_initial_deviation(&c));
    for (_, ch) in &r.checks {
        println!("  [{}] {}", if ch.holds { "ok" } else { "--" }, ch.name);
    }
    let b = error_probability(&c, &r)?;
    println!("bound (first form): {:e}, ln exponents {:?}", b.flea.value, b.flea.ln_exponents);
    if let Some(fb) = b.fleab {
        println!(
            "bound (sharper form): {:e}, ln exponents {:?}, ln ln N = {:.3}",
            fb.value,
            fb.ln_exponents,
            ln_queues.ln()
        );
    }
    Ok(())
}
