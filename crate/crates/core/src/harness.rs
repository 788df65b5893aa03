//! Replica fan-out and the convergence and tail-event statistics.
//!
//! For each population size `N` the limit path is solved once at depth
//! `d = d(N)` from the zero state, and each replica is simulated from the
//! state with a single customer, in the memory queue. Per replica we record
//!
//! * `D* = sup_{t <= t0} max_{k <= d} |Z_t^k - z_k(t)| / sqrt(a_k)`,
//! * whether `sup_t Z_t^{d+1} >= R * at_{d+1}` for each `R`, where
//!   `at_{d+1} = a_d^n / N + rho^d a_{d+1}`,
//! * whether `Z^{d+2}` stays zero on `[0, t0]`,
//! * `A_d(t0)`, the number of arrivals to queues of length at least `d`.
//!
//! Replica `i` at population `N` uses seed `replica_seed(base_seed, N, i)`,
//! so results do not depend on the thread count.

use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use crate::config::ExperimentConfig;
use crate::error::Result;
use crate::fluid::{cutoff_d, fixed_point, integrate, tilde_a, OdePath};
use crate::io::{fmt_real, write_file, CsvTable};
use crate::model::{FluidVector, LimitParams, MicroState, ModelParams};
use crate::rng::replica_seed;
use crate::sim::{simulate, SimOptions};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct RunOptions {
    /// Record per-replica wall-clock time. Off by default so that output
    /// files are reproducible byte for byte.
    pub timing: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReplicaSummary {
    pub replica: usize,
    pub seed: u64,
    pub d_star: f64,
    pub sup_z_next: f64,
    /// One flag per entry of `R_list`.
    pub mrb: Vec<bool>,
    pub mrc: bool,
    pub a_d: u64,
    pub wall_ms: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NSummary {
    pub queues: usize,
    pub d: usize,
    pub eps: f64,
    pub tilde_a_next: f64,
    /// `t0 a_{d+1} / sqrt(a_d)`, the truncation error of the depth-`d` path.
    pub truncation: f64,
    pub ode_max_clamp: f64,
    pub replicas: Vec<ReplicaSummary>,
    pub median_d_star: f64,
    pub exceed_freq: f64,
    pub mrb_freq: Vec<f64>,
    pub mrc_freq: f64,
    pub mean_a_d: f64,
    /// `mean A_d(t0) / (N at_{d+1})`.
    pub a_d_ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceResult {
    pub config: ExperimentConfig,
    pub per_n: Vec<NSummary>,
    /// Least-squares slope of `ln median D*` against `ln N`.
    pub slope: Option<f64>,
}

fn median(v: &mut [f64]) -> f64 {
    v.sort_by(f64::total_cmp);
    let m = v.len();
    if m % 2 == 1 {
        v[m / 2]
    } else {
        0.5 * (v[m / 2 - 1] + v[m / 2])
    }
}

/// Least-squares slope of `y` against `x`.
pub fn fit_slope(x: &[f64], y: &[f64]) -> Option<f64> {
    if x.len() < 2 {
        return None;
    }
    let m = x.len() as f64;
    let (mx, my) = (x.iter().sum::<f64>() / m, y.iter().sum::<f64>() / m);
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

struct Reference<'a> {
    path: &'a OdePath,
    inv_sigma: Vec<f64>,
}

impl Reference<'_> {
    fn deviation(&self, z: &[f64], x: &FluidVector) -> f64 {
        z.iter().zip(&x.x).zip(&self.inv_sigma).map(|((a, b), s)| (a - b).abs() * s).fold(0.0, f64::max)
    }
}

#[allow(clippy::too_many_arguments)]
fn run_replica(
    params: ModelParams,
    cfg: &ExperimentConfig,
    reference: &Reference,
    d: usize,
    tilde: f64,
    replica: usize,
    opts: RunOptions,
) -> Result<ReplicaSummary> {
    let start = opts.timing.then(Instant::now);
    let seed = replica_seed(cfg.base_seed, params.queues as u64, replica as u64);
    let sim_opts = SimOptions { d_record: d + 2, grid_per_unit: 0.0, keep_events: true };
    let tr = simulate(params, &MicroState::one_in_memory(params.queues), cfg.t0, &sim_opts, seed)?;

    let mut d_star: f64 = 0.0;
    let mut sup_next: f64 = 0.0;
    let mut sup_beyond: f64 = 0.0;
    let mut x_prev = reference.path.eval(0.0);
    tr.visit_intervals(|_, b, s| {
        let tail = s.tail();
        let z: Vec<f64> = (1..=d).map(|k| tail.z(k)).collect();
        // z(t) is non-decreasing from the zero start, so |Z - z(t)| on an
        // interval of constant Z peaks at one of its ends
        let x_next = reference.path.eval(b);
        d_star = d_star.max(reference.deviation(&z, &x_prev)).max(reference.deviation(&z, &x_next));
        sup_next = sup_next.max(tail.z(d + 1));
        sup_beyond = sup_beyond.max(tail.z(d + 2));
        x_prev = x_next;
    });
    let mrb = cfg.r_list.iter().map(|&r| sup_next >= r * tilde).collect();
    Ok(ReplicaSummary {
        replica,
        seed,
        d_star,
        sup_z_next: sup_next,
        mrb,
        mrc: sup_beyond == 0.0,
        a_d: if d == 0 { tr.n_arrivals } else { tr.arrivals_at_least[d - 1] },
        wall_ms: start.map_or(0, |s| s.elapsed().as_millis() as u64),
    })
}

/// Runs every replica at every population size of the configuration.
pub fn run_convergence(cfg: &ExperimentConfig, opts: RunOptions) -> Result<ConvergenceResult> {
    cfg.validate()?;
    let lp = LimitParams::new(cfg.lambda, cfg.n)?;
    let mut table = fixed_point(lp, 8);
    let mut per_n = Vec::with_capacity(cfg.n_list.len());
    for &queues in &cfg.n_list {
        let params = lp.with_queues(queues)?;
        let ln_queues = (queues as f64).ln();
        let d = match cfg.d_override {
            Some(d) => d,
            None => cutoff_d(&mut table, ln_queues)?,
        };
        table.extend(d + 2);
        let path = integrate(&FluidVector::zeros(d), lp, cfg.t0, cfg.tol)?;
        let reference = Reference { path: &path, inv_sigma: (1..=d).map(|k| 1.0 / table.a(k).sqrt()).collect() };
        let tilde = tilde_a(&mut table, ln_queues, d).value();
        let replicas: Vec<ReplicaSummary> = (0..cfg.replicas)
            .into_par_iter()
            .map(|i| run_replica(params, cfg, &reference, d, tilde, i, opts))
            .collect::<Result<_>>()?;

        let eps = cfg.phi.ln_eps(ln_queues).exp();
        let reps = replicas.len() as f64;
        let frac = |f: &dyn Fn(&ReplicaSummary) -> bool| replicas.iter().filter(|r| f(r)).count() as f64 / reps;
        let mut ds: Vec<f64> = replicas.iter().map(|r| r.d_star).collect();
        let mean_a_d = replicas.iter().map(|r| r.a_d as f64).sum::<f64>() / reps;
        per_n.push(NSummary {
            queues,
            d,
            eps,
            tilde_a_next: tilde,
            truncation: if d > 0 { cfg.t0 * table.a(d + 1) / table.a(d).sqrt() } else { 0.0 },
            ode_max_clamp: path.max_clamp,
            median_d_star: median(&mut ds),
            exceed_freq: frac(&|r| r.d_star >= eps),
            mrb_freq: (0..cfg.r_list.len()).map(|j| frac(&|r| r.mrb[j])).collect(),
            mrc_freq: frac(&|r| r.mrc),
            mean_a_d,
            a_d_ratio: mean_a_d / (queues as f64 * tilde),
            replicas,
        });
    }
    let xs: Vec<f64> = per_n.iter().map(|s| (s.queues as f64).ln()).collect();
    let ys: Vec<f64> = per_n.iter().map(|s| s.median_d_star.ln()).collect();
    let slope = if ys.iter().all(|y| y.is_finite()) { fit_slope(&xs, &ys) } else { None };
    Ok(ConvergenceResult { config: cfg.clone(), per_n, slope })
}

impl NSummary {
    /// `replica, seed, D_star, mrb_flag, mrc_flag, A_d, wall_ms`; `mrb_flag`
    /// is for the first `R`.
    pub fn replica_csv(&self) -> CsvTable {
        let mut t = CsvTable::new(["replica", "seed", "D_star", "mrb_flag", "mrc_flag", "A_d", "wall_ms"]);
        for r in &self.replicas {
            t.push(vec![
                r.replica.to_string(),
                r.seed.to_string(),
                fmt_real(r.d_star),
                u8::from(r.mrb.first().copied().unwrap_or(false)).to_string(),
                u8::from(r.mrc).to_string(),
                r.a_d.to_string(),
                r.wall_ms.to_string(),
            ]);
        }
        t
    }
}

impl ConvergenceResult {
    /// `N, d, median_D, exceed_freq, eps`, one row per population size.
    pub fn plot_csv(&self) -> CsvTable {
        let mut t = CsvTable::new(["N", "d", "median_D", "exceed_freq", "eps"]);
        for s in &self.per_n {
            t.push(vec![
                s.queues.to_string(),
                s.d.to_string(),
                fmt_real(s.median_d_star),
                fmt_real(s.exceed_freq),
                fmt_real(s.eps),
            ]);
        }
        t
    }

    /// Tail-event frequencies, one row per `(N, R)`.
    pub fn tails_csv(&self) -> CsvTable {
        let mut t = CsvTable::new(["N", "d", "R", "mrb_freq", "mrc_freq", "mean_A_d", "tilde_a", "A_d_ratio"]);
        for s in &self.per_n {
            for (j, r) in self.config.r_list.iter().enumerate() {
                t.push(vec![
                    s.queues.to_string(),
                    s.d.to_string(),
                    fmt_real(*r),
                    fmt_real(s.mrb_freq[j]),
                    fmt_real(s.mrc_freq),
                    fmt_real(s.mean_a_d),
                    fmt_real(s.tilde_a_next),
                    fmt_real(s.a_d_ratio),
                ]);
            }
        }
        t
    }
}

#[derive(Debug, Serialize)]
struct Manifest<'a> {
    package: &'static str,
    version: &'static str,
    config: &'a ExperimentConfig,
    seeds: Vec<(usize, Vec<u64>)>,
    slope: Option<f64>,
    files: Vec<String>,
}

/// Writes `manifest.json`, and for non-empty results `summary_N<N>.csv`
/// per population size, `plotdata.csv` and `tails.csv`. Returns the paths
/// written, manifest last.
pub fn emit(result: &ConvergenceResult, dir: &Path) -> Result<Vec<PathBuf>> {
    let mut written = Vec::new();
    let mut files = Vec::new();
    let mut save = |name: String, table: CsvTable| -> Result<()> {
        let p = dir.join(&name);
        table.save(&p)?;
        written.push(p);
        files.push(name);
        Ok(())
    };
    if !result.per_n.is_empty() {
        for s in &result.per_n {
            save(format!("summary_N{}.csv", s.queues), s.replica_csv())?;
        }
        save("plotdata.csv".into(), result.plot_csv())?;
        save("tails.csv".into(), result.tails_csv())?;
    }
    let manifest = Manifest {
        package: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        config: &result.config,
        seeds: result.per_n.iter().map(|s| (s.queues, s.replicas.iter().map(|r| r.seed).collect())).collect(),
        slope: result.slope,
        files,
    };
    let mut json = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    json.push('\n');
    let p = dir.join("manifest.json");
    write_file(&p, json.as_bytes())?;
    written.push(p);
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slope_of_a_line() {
        let x = [1.0, 2.0, 3.0];
        let y = [1.0, 0.5, 0.0];
        assert!((fit_slope(&x, &y).unwrap() + 0.5).abs() < 1e-15);
        assert!(fit_slope(&[1.0], &[1.0]).is_none());
    }

    #[test]
    fn tiny_horizon_sees_initial_deviation() {
        let mut cfg = ExperimentConfig::new(0.5, 2, vec![10]).unwrap();
        cfg.replicas = 1;
        cfg.t0 = 1e-9;
        let r = run_convergence(&cfg, RunOptions::default()).unwrap();
        let s = &r.per_n[0];
        let want = 0.1 / 0.5f64.sqrt();
        assert!((s.replicas[0].d_star - want).abs() < 1e-6, "{}", s.replicas[0].d_star);
        assert!(s.replicas[0].mrc);
    }

    #[test]
    fn deterministic_and_thread_independent() {
        let mut cfg = ExperimentConfig::new(0.7, 2, vec![50, 100]).unwrap();
        cfg.replicas = 4;
        cfg.t0 = 1.0;
        let a = run_convergence(&cfg, RunOptions::default()).unwrap();
        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let b = pool.install(|| run_convergence(&cfg, RunOptions::default())).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn mrb_nested_in_r() {
        let mut cfg = ExperimentConfig::new(0.9, 2, vec![100]).unwrap();
        cfg.replicas = 10;
        cfg.t0 = 2.0;
        let r = run_convergence(&cfg, RunOptions::default()).unwrap();
        let f = &r.per_n[0].mrb_freq;
        assert!(f.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn emit_empty_writes_manifest_only() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = ExperimentConfig::new(0.5, 2, vec![10]).unwrap();
        let r = ConvergenceResult { config: cfg, per_n: Vec::new(), slope: None };
        let files = emit(&r, dir.path()).unwrap();
        assert_eq!(files, vec![dir.path().join("manifest.json")]);
    }
}
