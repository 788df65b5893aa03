//! Command-line front end used by the `supermarket` binary.
//!
//! Every subcommand reads the experiment configuration, writes its results
//! under the output directory and, with `--check`, verifies the properties
//! its output is expected to have. Exit codes: 0 success, 1 invalid input,
//! 2 runtime failure, 3 failed check.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::bounds::{check_hypotheses, constants_for, error_probability, ln_initial_deviation, scan_dyadic};
use crate::config::{load_config, ExperimentConfig};
use crate::error::{Error, Result};
use crate::fast::{corrector_exact, corrector_mc, drift_b, generator, index_lo, stationary, tau_bound};
use crate::fluid::{cutoff_d, fixed_point, integrate, tilde_a, FixedPointTable};
use crate::harness::{emit, run_convergence, RunOptions};
use crate::io::{fmt_real, write_file, CsvTable};
use crate::model::{FluidVector, LimitParams, MicroState};
use crate::rng::replica_seed;
use crate::sim::{simulate, SimOptions};

#[derive(Debug, Parser)]
#[command(
    name = "supermarket",
    version,
    about = "Supermarket model with memory: simulation, fluid limit and error bounds"
)]
pub struct Cli {
    /// Experiment configuration file (`key = value` lines).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Overrides `base_seed`.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Overrides `out`.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Worker threads for replica fan-out.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Verify the expected properties of the output; exit 3 if any fails.
    #[arg(long, global = true)]
    pub check: bool,
    /// Record wall-clock time per replica (makes output non-reproducible).
    #[arg(long, global = true)]
    pub timing: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fixed point a_k and cutoff depth d(N) for every N.
    FixedPoint,
    /// Limit path from the zero state at depth d(N).
    Ode,
    /// One simulated trajectory per N.
    Simulate {
        #[arg(long, default_value_t = 0)]
        replica: usize,
    },
    /// Exact and Monte Carlo correctors of the drift at the fixed point.
    Corrector,
    /// Regularity constants, hypothesis verdicts and error bounds.
    Bounds {
        /// Largest j of the dyadic scan N = 2^j.
        #[arg(long, default_value_t = 8192)]
        max_log2: u32,
    },
    /// Fluid convergence statistics over replicas.
    Converge,
    /// Tail-event frequencies over replicas.
    Tails,
}

/// Outcome of a subcommand: the files written and the failed checks.
#[derive(Debug, Default)]
pub struct Outcome {
    pub files: Vec<PathBuf>,
    pub failures: Vec<String>,
}

impl Outcome {
    fn save(&mut self, path: PathBuf, table: &CsvTable) -> Result<()> {
        table.save(&path)?;
        self.files.push(path);
        Ok(())
    }

    fn write(&mut self, path: PathBuf, text: &str) -> Result<()> {
        write_file(&path, text.as_bytes())?;
        self.files.push(path);
        Ok(())
    }

    fn expect(&mut self, ok: bool, what: impl Into<String>) {
        if !ok {
            self.failures.push(what.into());
        }
    }
}

pub fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(t) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(t).build_global() {
            eprintln!("error: cannot configure {t} threads: {e}");
            return ExitCode::from(1);
        }
    }
    match run(&cli) {
        Ok(outcome) => {
            for f in &outcome.files {
                println!("wrote {}", f.display());
            }
            if cli.check && !outcome.failures.is_empty() {
                for f in &outcome.failures {
                    eprintln!("check failed: {f}");
                }
                return ExitCode::from(3);
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_validation() { 1 } else { 2 })
        }
    }
}

/// Runs the parsed command line.
pub fn run(cli: &Cli) -> Result<Outcome> {
    let path = cli.config.as_ref().ok_or_else(|| Error::ConfigInvalid {
        field: "--config".into(),
        msg: "a configuration file is required".into(),
    })?;
    let mut cfg = load_config(path)?;
    if let Some(s) = cli.seed {
        cfg.base_seed = s;
    }
    if let Some(o) = &cli.out {
        cfg.out = o.clone();
    }
    let opts = RunOptions { timing: cli.timing };
    match &cli.command {
        Command::FixedPoint => cmd_fixed_point(&cfg),
        Command::Ode => cmd_ode(&cfg),
        Command::Simulate { replica } => cmd_simulate(&cfg, *replica),
        Command::Corrector => cmd_corrector(&cfg),
        Command::Bounds { max_log2 } => cmd_bounds(&cfg, *max_log2),
        Command::Converge => cmd_converge(&cfg, opts),
        Command::Tails => cmd_tails(&cfg, opts),
    }
}

fn limit(cfg: &ExperimentConfig) -> Result<LimitParams> {
    LimitParams::new(cfg.lambda, cfg.n)
}

fn depth(cfg: &ExperimentConfig, table: &mut FixedPointTable, queues: usize) -> Result<usize> {
    match cfg.d_override {
        Some(d) => Ok(d),
        None => cutoff_d(table, (queues as f64).ln()),
    }
}

fn cmd_fixed_point(cfg: &ExperimentConfig) -> Result<Outcome> {
    let p = limit(cfg)?;
    let mut table = fixed_point(p, 8);
    let mut out = Outcome::default();
    let mut cut = CsvTable::new(["N", "d", "log10_a_d", "log10_a_d1", "tilde_a", "rho"]);
    for &queues in &cfg.n_list {
        let ln_queues = (queues as f64).ln();
        let d = depth(cfg, &mut table, queues)?;
        let ta = tilde_a(&mut table, ln_queues, d);
        let l10 = std::f64::consts::LN_10;
        cut.push(vec![
            queues.to_string(),
            d.to_string(),
            fmt_real(table.log_a(d) / l10),
            fmt_real(table.log_a(d + 1) / l10),
            fmt_real(ta.value()),
            fmt_real(table.rho),
        ]);
        out.expect(
            table.a(d) * queues as f64 > (queues as f64).powf(table.kappa) || cfg.d_override.is_some(),
            format!("N a_d > N^kappa at N = {queues}"),
        );
    }
    out.expect((1..table.k_max()).all(|k| table.log_a(k + 1) < table.log_a(k)), "a_k strictly decreasing");
    out.save(cfg.out.join("fixed_point.csv"), &table.to_csv())?;
    out.save(cfg.out.join("cutoff.csv"), &cut)?;
    Ok(out)
}

fn cmd_ode(cfg: &ExperimentConfig) -> Result<Outcome> {
    let p = limit(cfg)?;
    let mut table = fixed_point(p, 8);
    let mut out = Outcome::default();
    for &queues in &cfg.n_list {
        let d = depth(cfg, &mut table, queues)?;
        let path = integrate(&FluidVector::zeros(d), p, cfg.t0, cfg.tol)?;
        out.expect(path.max_clamp < cfg.tol, format!("projection onto D(d) below tol at N = {queues}"));
        let a = table.prefix(d);
        out.expect(path.states.iter().all(|x| x.le(&a, 1e-12)), format!("z(t) <= a at N = {queues}"));
        out.save(cfg.out.join(format!("ode_N{queues}.csv")), &path.to_csv())?;
    }
    Ok(out)
}

fn cmd_simulate(cfg: &ExperimentConfig, replica: usize) -> Result<Outcome> {
    let p = limit(cfg)?;
    let mut table = fixed_point(p, 8);
    let mut out = Outcome::default();
    for &queues in &cfg.n_list {
        let d = depth(cfg, &mut table, queues)?;
        let params = p.with_queues(queues)?;
        let seed = replica_seed(cfg.base_seed, queues as u64, replica as u64);
        let opts = SimOptions { d_record: d + 2, grid_per_unit: cfg.grid_per_unit, keep_events: false };
        let tr = simulate(params, &MicroState::one_in_memory(queues), cfg.t0, &opts, seed)?;
        let balance = 1 + tr.n_arrivals as i64 - tr.n_departures as i64;
        out.expect(tr.final_state.total_customers() as i64 == balance, format!("conservation at N = {queues}"));
        out.expect(tr.final_state.validate().is_ok(), format!("final state valid at N = {queues}"));
        out.save(cfg.out.join(format!("traj_N{queues}_r{replica}.csv")), &tr.to_csv())?;
    }
    Ok(out)
}

fn cmd_corrector(cfg: &ExperimentConfig) -> Result<Outcome> {
    let p = limit(cfg)?;
    let mut table = fixed_point(p, 8);
    let mut out = Outcome::default();
    for &queues in &cfg.n_list {
        let d = depth(cfg, &mut table, queues)?;
        let params = p.with_queues(queues)?;
        let x = table.prefix(d);
        let gen = generator(&x, params);
        let pi = stationary(&gen)?;
        let tau = tau_bound(params);
        let mut t = CsvTable::new(["k", "y", "chi_exact", "chi_mc", "std_err", "ctb_bound"]);
        for k in 1..=d {
            let f: Vec<f64> = (0..=d).map(|y| drift_b(&x, y, p.lambda, p.n)[k - 1]).collect();
            let sup = f.iter().skip(index_lo(p.n)).fold(0.0f64, |m, v| m.max(v.abs()));
            let exact = corrector_exact(&f, &gen, &pi)?;
            for y in index_lo(p.n)..=d {
                let seed = replica_seed(cfg.base_seed, (k * 1000 + y) as u64, queues as u64);
                let mc = corrector_mc(&f, &x, y, params, cfg.mc_reps, seed)?.estimate;
                let bound = 2.0 * tau * sup;
                out.expect(
                    (mc.value - exact.chi[y]).abs() <= 3.0 * mc.std_err + 1e-12 * bound,
                    format!("MC within 3 standard errors of the exact corrector (N = {queues}, k = {k}, y = {y})"),
                );
                out.expect(
                    exact.chi[y].abs() <= bound * (1.0 + 1e-12),
                    format!("|chi| <= 2 tau ||f|| (N = {queues}, k = {k}, y = {y})"),
                );
                t.push(vec![
                    k.to_string(),
                    y.to_string(),
                    fmt_real(exact.chi[y]),
                    fmt_real(mc.value),
                    fmt_real(mc.std_err),
                    fmt_real(bound),
                ]);
            }
        }
        out.save(cfg.out.join(format!("corrector_N{queues}.csv")), &t)?;
    }
    Ok(out)
}

fn cmd_bounds(cfg: &ExperimentConfig, max_log2: u32) -> Result<Outcome> {
    let p = limit(cfg)?;
    let mut out = Outcome::default();
    let scan = scan_dyadic(p, cfg.t0, cfg.c_cfg, cfg.phi, 4..=max_log2.max(4))?;
    let mut t =
        CsvTable::new(["log2_N", "d", "fle", "flea", "fleab", "ln_exponent_1", "ln_exponent_2", "exceeds_log_N"]);
    for r in &scan.rows {
        let e = |i: usize| r.ln_exponents.get(i).map_or(String::new(), |&v| fmt_real(v));
        t.push(vec![
            r.log2_queues.to_string(),
            r.d.map_or("".into(), |d| d.to_string()),
            u8::from(r.fle).to_string(),
            u8::from(r.flea).to_string(),
            u8::from(r.fleab).to_string(),
            e(0),
            e(1),
            u8::from(r.exceeds_log_n).to_string(),
        ]);
    }
    out.save(cfg.out.join("bounds_scan.csv"), &t)?;
    out.expect(scan.n0_log2.is_some(), "a finite N0 on the dyadic grid");

    let mut text = String::new();
    let mut json = Vec::new();
    let mut table = fixed_point(p, 8);
    let mut points: Vec<(String, f64)> = cfg.n_list.iter().map(|&q| (q.to_string(), (q as f64).ln())).collect();
    if let Some(j) = scan.n0_log2 {
        points.push((format!("2^{j}"), j as f64 * std::f64::consts::LN_2));
    }
    text.push_str(&format!("n0_log2 = {}\n", scan.n0_log2.map_or("none".into(), |j| j.to_string())));
    text.push_str(&format!("a_bar_le_a_log2 = {}\n", scan.a_bar_le_a_log2.map_or("none".into(), |j| j.to_string())));
    for (label, ln_queues) in points {
        let c = match constants_for(p, ln_queues, &mut table, cfg.c_cfg) {
            Ok(c) => c,
            Err(Error::QueuesTooFew { .. }) => {
                text.push_str(&format!("[N = {label}]\nd = none\n"));
                continue;
            }
            Err(e) => return Err(e),
        };
        let r = check_hypotheses(&c, cfg.phi.ln_eps(ln_queues), cfg.t0, ln_initial_deviation(&c));
        text.push_str(&format!("[N = {label}]\nd = {}\n", c.d));
        for (name, ln) in c.entries() {
            text.push_str(&format!("ln_{name} = {}\n", fmt_real(ln)));
        }
        text.push_str(&format!("ln_eps = {}\nln_delta = {}\n", fmt_real(r.ln_eps), fmt_real(r.ln_delta)));
        for (_, ch) in &r.checks {
            text.push_str(&format!("check[{}] = {}\n", ch.name, ch.holds));
        }
        text.push_str(&format!("heuristic = J1_b, K scaled by C_cfg = {}\n", cfg.c_cfg));
        let bounds = error_probability(&c, &r).ok();
        match &bounds {
            Some(b) => {
                text.push_str(&format!(
                    "bound_first = {}\nbound_first_vacuous = {}\n",
                    fmt_real(b.flea.value),
                    b.flea.vacuous
                ));
                match &b.fleab {
                    Some(s) => text.push_str(&format!(
                        "bound_sharp = {}\nbound_sharp_vacuous = {}\n",
                        fmt_real(s.value),
                        s.vacuous
                    )),
                    None => text.push_str("bound_sharp = refused\n"),
                }
            }
            None => text.push_str("bound_first = refused\nbound_sharp = refused\n"),
        }
        json.push(serde_json::json!({ "N": label, "constants": c, "report": r, "bounds": bounds }));
    }
    out.write(cfg.out.join("bounds_report.txt"), &text)?;
    let mut js = serde_json::to_string_pretty(&json).expect("report serializes");
    js.push('\n');
    out.write(cfg.out.join("bounds_report.json"), &js)?;
    Ok(out)
}

fn cmd_converge(cfg: &ExperimentConfig, opts: RunOptions) -> Result<Outcome> {
    let result = run_convergence(cfg, opts)?;
    let mut out = Outcome { files: emit(&result, &cfg.out)?, failures: Vec::new() };
    if let Some(s) = result.slope {
        out.expect((-0.65..=-0.35).contains(&s), format!("slope {s:.3} in [-0.65, -0.35]"));
    }
    out.expect(
        result.per_n.windows(2).all(|w| w[1].exceed_freq <= w[0].exceed_freq),
        "exceedance frequency non-increasing in N",
    );
    Ok(out)
}

fn cmd_tails(cfg: &ExperimentConfig, opts: RunOptions) -> Result<Outcome> {
    let result = run_convergence(cfg, opts)?;
    let mut out = Outcome::default();
    out.save(cfg.out.join("tails.csv"), &result.tails_csv())?;
    for s in &result.per_n {
        out.expect(
            s.mrb_freq.windows(2).all(|w| w[1] <= w[0]),
            format!("tail frequency non-increasing in R at N = {}", s.queues),
        );
    }
    if let Some(last) = result.per_n.last() {
        out.expect(last.mrc_freq >= 0.95, format!("level d+2 empty in >= 95% of replicas at N = {}", last.queues));
    }
    Ok(out)
}

/// Writes a configuration file, for examples and tests.
pub fn write_config(path: &Path, cfg: &ExperimentConfig) -> Result<()> {
    write_file(path, cfg.to_text().as_bytes())
}
