//! The fast chain of the memory length at a frozen tail vector: equilibrium,
//! averaged drift, correctors (exact and Monte Carlo) and coupling times.
//!
//! ```text
//! cargo run --release --example fast_chain
//! ```

use supermarket::fast::{
    corrector_exact, corrector_mc, coupling_time_mc, drift_b, drift_bar_b, generator, mu_product, stationary, tau_bound,
};
use supermarket::fluid::u_field;
use supermarket::{FluidVector, ModelParams};

fn main() -> supermarket::Result<()> {
    let params = ModelParams::new(0.5, 2, 1000)?;
    let x = FluidVector::new(vec![0.55, 0.12, 0.01])?;
    let g = generator(&x, params);
    let pi = stationary(&g)?;
    println!("pi = {:?} (residual {:.1e})", pi.pi, pi.residual);
    for k in 0..=3 {
        println!("P(Y >= {k}) = {:.12}, mu(x, {k}) = {:.12}", pi.tail(k), mu_product(&x, 2, k));
    }

    let bb = drift_bar_b(&x, &pi, params.lambda, params.n);
    println!("averaged drift {bb:?}\nlimit field    {:?}", u_field(&x, params.limit()));

    let tau = tau_bound(params);
    let f: Vec<f64> = (0..=3).map(|y| drift_b(&x, y, params.lambda, params.n)[0]).collect();
    let exact = corrector_exact(&f, &g, &pi)?;
    println!(
        "corrector of b_1 (bound 2 tau ||f|| = {:.3e}):",
        2.0 * tau * f.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    );
    for y in 0..=3 {
        let mc = corrector_mc(&f, &x, y, params, 10_000, 11)?.estimate;
        println!("  y = {y}: exact {:+.4e}, MC {:+.4e} +- {:.1e}", exact.chi[y], mc.value, mc.std_err);
    }

    println!("coupling times (tau = {tau:.3e}):");
    for y in 1..=3 {
        let m = coupling_time_mc(&x, y, 0, params, 10_000, 5)?;
        println!("  m(x, {y}, 0) = {:.3e} +- {:.1e}", m.value, m.std_err);
    }
    Ok(())
}
