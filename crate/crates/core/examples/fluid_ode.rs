//! Integrates the truncated limit ODE from the empty state and shows the
//! approach to the fixed point, the mass balance and the effect of depth.
//!
//! ```text
//! cargo run --example fluid_ode
//! ```

use supermarket::fluid::{fixed_point, integrate, u_field};
use supermarket::{FluidVector, LimitParams};

fn main() -> supermarket::Result<()> {
    let p = LimitParams::new(0.7, 2)?;
    let table = fixed_point(p, 8);
    let d = 4;
    let path = integrate(&FluidVector::zeros(d), p, 10.0, 1e-10)?;
    println!("step {:.3e}, largest projection {:.1e}", path.step, path.max_clamp);
    for t in [0.0, 0.5, 1.0, 2.0, 5.0, 10.0] {
        let x = path.eval(t);
        let shown: Vec<String> = x.x.iter().map(|v| format!("{v:.6}")).collect();
        println!("t = {t:>4}: z = [{}]", shown.join(", "));
    }
    let a = table.prefix(d);
    let shown: Vec<String> = a.x.iter().map(|v| format!("{v:.6}")).collect();
    println!("fixed point a = [{}]", shown.join(", "));

    // the mass changes only through the field, so this compares two quadratures
    let balance = path.integral(|x| u_field(x, p).iter().sum());
    println!("mass at t0 = {:.10}, integrated field = {balance:.10}", path.last().mass());

    let shallow = integrate(&FluidVector::zeros(d - 1), p, 10.0, 1e-10)?;
    let gap = (1..d).map(|k| path.last().get(k) - shallow.last().get(k)).fold(0.0f64, f64::max);
    println!("depth {} vs {d}: largest gap at t0 = {gap:.3e} (never negative)", d - 1);
    Ok(())
}
