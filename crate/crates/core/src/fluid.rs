//! Limit dynamics of the tail proportions.
//!
//! Covers the equilibrium tail products `mu(x, k)`, the truncated vector field
//! `u^(d)` on `D(d)`, an RK4 integrator that keeps paths inside `D(d)`, and the
//! fixed point `a` (kept in log domain because it decays doubly
//! exponentially) with the derived exponent, cutoff depth and tail scale.

use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::io::{fmt_real, CsvTable};
use crate::model::{FluidVector, LimitParams};

/// `p_{k-1}(x) = n (x_{k-1} - x_k) x_k^{n-1}`: the probability that exactly
/// one of the `n` sampled values equals `k-1` and the rest are at least `k`.
pub fn lone_min_prob(x: &FluidVector, n: usize, k: usize) -> f64 {
    debug_assert!(k >= 1);
    let (prev, cur) = (x.get(k - 1), x.get(k));
    n as f64 * (prev - cur) * powi(cur, n - 1)
}

fn powi(v: f64, e: usize) -> f64 {
    v.powi(e as i32)
}

/// One factor `x_k^n / (1 - p_{k-1}(x))` of the tail product, with `0/0 = 1`.
fn mu_factor(x: &FluidVector, n: usize, k: usize) -> f64 {
    let num = powi(x.get(k), n);
    let den = 1.0 - lone_min_prob(x, n, k);
    if num == 0.0 && den == 0.0 {
        1.0
    } else {
        num / den
    }
}

/// `mu(x, k) = prod_{j<=k} x_j^n / (1 - p_{j-1}(x))`, `mu(x, 0) = 1`.
pub fn mu_of(x: &FluidVector, n: usize, k: usize) -> f64 {
    (1..=k).map(|j| mu_factor(x, n, j)).product()
}

/// `mu(x, k)` for `k = 0..=d`.
pub fn mu_table(x: &FluidVector, n: usize) -> Vec<f64> {
    let d = x.depth();
    let mut out = Vec::with_capacity(d + 1);
    let mut acc = 1.0;
    out.push(acc);
    for k in 1..=d {
        acc *= mu_factor(x, n, k);
        out.push(acc);
    }
    out
}

/// The truncated field `u^(d)(x)`. For `k < d` it is the infinite-system
/// field `v_k`; the last component drops the inflow from level `d+1`.
pub fn u_field(x: &FluidVector, p: LimitParams) -> Vec<f64> {
    let d = x.depth();
    let mu = mu_table(x, p.n);
    (1..=d)
        .map(|k| {
            p.lambda * powi(x.get(k - 1), p.n) * mu[k - 1]
                - p.lambda * powi(x.get(k), p.n) * mu[k]
                - (x.get(k) - x.get(k + 1))
        })
        .collect()
}

/// Solution of `x' = u^(d)(x)` on a uniform grid.
#[derive(Debug, Clone)]
pub struct OdePath {
    pub params: LimitParams,
    pub times: Vec<f64>,
    pub states: Vec<FluidVector>,
    derivs: Vec<Vec<f64>>,
    /// Step size of the accepted refinement level.
    pub step: f64,
    /// Step counts tried, coarsest first.
    pub refinements: Vec<usize>,
    /// Sup-norm difference between the last two refinement levels.
    pub refinement_diff: f64,
    /// Largest correction applied by the projection onto `D(d)`.
    pub max_clamp: f64,
}

impl OdePath {
    pub fn depth(&self) -> usize {
        self.states[0].depth()
    }

    pub fn horizon(&self) -> f64 {
        *self.times.last().unwrap()
    }

    pub fn last(&self) -> &FluidVector {
        self.states.last().unwrap()
    }

    /// Cubic Hermite interpolation of the path at time `t`, using the field
    /// values at the grid nodes.
    pub fn eval(&self, t: f64) -> FluidVector {
        if self.times.len() == 1 || t <= 0.0 {
            return self.states[0].clone();
        }
        if t >= self.horizon() {
            return self.last().clone();
        }
        let i = ((t / self.step) as usize).min(self.times.len() - 2);
        let (t0, h) = (self.times[i], self.times[i + 1] - self.times[i]);
        let s = (t - t0) / h;
        let (h00, h10) = (2.0 * s.powi(3) - 3.0 * s * s + 1.0, s.powi(3) - 2.0 * s * s + s);
        let (h01, h11) = (-2.0 * s.powi(3) + 3.0 * s * s, s.powi(3) - s * s);
        let (a, b) = (&self.states[i].x, &self.states[i + 1].x);
        let (da, db) = (&self.derivs[i], &self.derivs[i + 1]);
        let x = (0..a.len()).map(|k| h00 * a[k] + h10 * h * da[k] + h01 * b[k] + h11 * h * db[k]).collect();
        FluidVector { x }
    }

    /// Composite Simpson integral of `f(x(t))` over `[0, horizon]`.
    pub fn integral(&self, f: impl Fn(&FluidVector) -> f64) -> f64 {
        let m = self.times.len() - 1;
        if m == 0 {
            return 0.0;
        }
        let vals: Vec<f64> = self.states.iter().map(&f).collect();
        let h = self.step;
        let even = m - m % 2;
        let mut acc = 0.0;
        for i in (0..even).step_by(2) {
            acc += h / 3.0 * (vals[i] + 4.0 * vals[i + 1] + vals[i + 2]);
        }
        if even < m {
            acc += 0.5 * h * (vals[m - 1] + vals[m]);
        }
        acc
    }

    pub fn to_csv(&self) -> CsvTable {
        let d = self.depth();
        let mut t = CsvTable::new(std::iter::once("t".to_string()).chain((1..=d).map(|k| format!("x_{k}"))));
        for (time, s) in self.times.iter().zip(&self.states) {
            t.push(std::iter::once(fmt_real(*time)).chain(s.x.iter().map(|&v| fmt_real(v))).collect());
        }
        t
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        self.to_csv().save(path)
    }
}

const INITIAL_STEP: f64 = 0.05;
const MAX_STEPS: usize = 1 << 24;

struct FixedRun {
    states: Vec<FluidVector>,
    max_clamp: f64,
}

fn axpy(x: &FluidVector, h: f64, k: &[f64]) -> FluidVector {
    FluidVector { x: x.x.iter().zip(k).map(|(a, b)| a + h * b).collect() }
}

fn rk4_fixed(x0: &FluidVector, p: LimitParams, t0: f64, steps: usize) -> FixedRun {
    let h = t0 / steps as f64;
    let mut states = Vec::with_capacity(steps + 1);
    let mut x = x0.clone();
    let mut max_clamp: f64 = 0.0;
    states.push(x.clone());
    for _ in 0..steps {
        let k1 = u_field(&x, p);
        let k2 = u_field(&axpy(&x, 0.5 * h, &k1), p);
        let k3 = u_field(&axpy(&x, 0.5 * h, &k2), p);
        let k4 = u_field(&axpy(&x, h, &k3), p);
        for (i, v) in x.x.iter_mut().enumerate() {
            *v += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        max_clamp = max_clamp.max(x.project());
        states.push(x.clone());
    }
    FixedRun { states, max_clamp }
}

/// Integrates `x' = u^(d)(x)` from `x0` over `[0, t0]` with fixed-step RK4,
/// halving the step until two successive levels agree to `tol` (sup norm on
/// the coarse grid). Each step is followed by projection onto `D(d)`.
pub fn integrate(x0: &FluidVector, p: LimitParams, t0: f64, tol: f64) -> Result<OdePath> {
    if !x0.in_domain(0.0) {
        return Err(Error::InvalidParams("initial condition is not in D(d)".into()));
    }
    if !(t0 >= 0.0) || !(tol > 0.0) {
        return Err(Error::InvalidParams("need t0 >= 0 and tol > 0".into()));
    }
    if t0 == 0.0 || x0.depth() == 0 {
        let derivs = vec![u_field(x0, p)];
        return Ok(OdePath {
            params: p,
            times: vec![0.0],
            states: vec![x0.clone()],
            derivs,
            step: 0.0,
            refinements: vec![],
            refinement_diff: 0.0,
            max_clamp: 0.0,
        });
    }
    let mut steps = ((t0 / INITIAL_STEP).ceil() as usize).max(1);
    let mut coarse = rk4_fixed(x0, p, t0, steps);
    let mut refinements = vec![steps];
    loop {
        let fine = rk4_fixed(x0, p, t0, 2 * steps);
        refinements.push(2 * steps);
        let diff = coarse
            .states
            .iter()
            .enumerate()
            .flat_map(|(i, c)| c.x.iter().zip(&fine.states[2 * i].x).map(|(a, b)| (a - b).abs()))
            .fold(0.0_f64, f64::max);
        if diff < tol {
            let steps = 2 * steps;
            let h = t0 / steps as f64;
            let times = (0..=steps).map(|i| i as f64 * h).collect();
            let derivs = fine.states.iter().map(|s| u_field(s, p)).collect();
            return Ok(OdePath {
                params: p,
                times,
                states: fine.states,
                derivs,
                step: h,
                refinements,
                refinement_diff: diff,
                max_clamp: fine.max_clamp.max(coarse.max_clamp),
            });
        }
        steps *= 2;
        if steps > MAX_STEPS {
            return Err(Error::NonConvergence { steps, diff, tol });
        }
        coarse = fine;
    }
}

/// `alpha = n + 1/2 + sqrt(n^2 + 1/4)`, the larger root of
/// `alpha^2 - (2n+1) alpha + n = 0`.
pub fn alpha_of(n: usize) -> f64 {
    let n = n as f64;
    n + 0.5 + (n * n + 0.25).sqrt()
}

/// `rho`: `4/(1-lambda)` for `n = 1`, `2^n/(1-e^{-1/2})` for `n >= 2`.
pub fn rho_of(p: LimitParams) -> f64 {
    if p.n == 1 {
        4.0 / (1.0 - p.lambda)
    } else {
        2f64.powi(p.n as i32) / (1.0 - (-0.5f64).exp())
    }
}

fn ln_one_minus_exp(x: f64) -> f64 {
    // ln(1 - e^x) for x <= 0
    if x > -std::f64::consts::LN_2 {
        (-x.exp_m1()).ln()
    } else {
        (-x.exp()).ln_1p()
    }
}

/// Fixed point `a_0 = 1`, `a_{k+1} = lambda a_k^n mu(a, k)` in log domain.
#[derive(Debug, Clone, Serialize)]
pub struct FixedPointTable {
    pub params: LimitParams,
    /// `log_a[k] = ln a_k`.
    pub log_a: Vec<f64>,
    /// `log_mu[k] = ln mu(a, k)`.
    pub log_mu: Vec<f64>,
    pub alpha: f64,
    pub kappa: f64,
    pub rho: f64,
}

impl FixedPointTable {
    /// Table covering `k = 0..=k_max`.
    pub fn new(p: LimitParams, k_max: usize) -> Self {
        let alpha = alpha_of(p.n);
        let mut t = Self {
            params: p,
            log_a: vec![0.0, p.lambda.ln()],
            log_mu: vec![0.0],
            alpha,
            kappa: 1.0 / (2.0 * alpha),
            rho: rho_of(p),
        };
        t.extend(k_max.max(1));
        t
    }

    pub fn k_max(&self) -> usize {
        self.log_a.len() - 1
    }

    /// `ln p_{k-1}(a)`.
    fn ln_lone_min(&self, k: usize) -> f64 {
        let n = self.params.n as f64;
        let (prev, cur) = (self.log_a[k - 1], self.log_a[k]);
        n.ln() + prev + ln_one_minus_exp(cur - prev) + (n - 1.0) * cur
    }

    pub fn extend(&mut self, k_max: usize) {
        let n = self.params.n as f64;
        let ln_lambda = self.params.lambda.ln();
        while self.log_a.len() <= k_max {
            let k = self.log_a.len() - 1;
            // ln mu(a,k) = ln mu(a,k-1) + n ln a_k - ln(1 - p_{k-1}(a))
            let ln_factor = n * self.log_a[k] - ln_one_minus_exp(self.ln_lone_min(k));
            let lmu = self.log_mu[k - 1] + ln_factor;
            self.log_mu.push(lmu);
            self.log_a.push(ln_lambda + n * self.log_a[k] + lmu);
        }
    }

    pub fn log_a(&mut self, k: usize) -> f64 {
        self.extend(k);
        self.log_a[k]
    }

    /// Linear value of `a_k` (0 once it drops below the f64 range).
    pub fn a(&self, k: usize) -> f64 {
        self.log_a[k].exp()
    }

    /// `(a_1, ..., a_d)` as a fluid vector.
    pub fn prefix(&self, d: usize) -> FluidVector {
        FluidVector { x: (1..=d).map(|k| self.a(k)).collect() }
    }

    /// Extends the table until `ln a_k < threshold`.
    pub fn extend_below(&mut self, threshold: f64) {
        while *self.log_a.last().unwrap() >= threshold {
            let k = self.k_max();
            self.extend(k + 1);
        }
    }

    pub fn to_csv(&self) -> CsvTable {
        let mut t = CsvTable::new(["k", "log10_a", "a"]);
        for (k, &la) in self.log_a.iter().enumerate() {
            let a = la.exp();
            let lin = if a > 0.0 && a.is_normal() || k == 0 { fmt_real(a) } else { "underflow".into() };
            t.push(vec![k.to_string(), fmt_real(la / std::f64::consts::LN_10), lin]);
        }
        t
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        self.to_csv().save(path)
    }
}

pub fn fixed_point(p: LimitParams, k_max: usize) -> FixedPointTable {
    FixedPointTable::new(p, k_max)
}

/// `d(N) = sup{k : N a_k > N^kappa}`, with `N` given as `ln N` so that
/// astronomically large systems can be evaluated.
pub fn cutoff_d(table: &mut FixedPointTable, ln_queues: f64) -> Result<usize> {
    let threshold = (table.kappa - 1.0) * ln_queues;
    table.extend_below(threshold);
    let d = table.log_a.iter().skip(1).take_while(|&&la| la > threshold).count();
    if d == 0 {
        return Err(Error::QueuesTooFew { ln_queues });
    }
    Ok(d)
}

/// `tilde a_{d+1} = N^{-1} a_d^n + rho^d a_{d+1}`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct TildeA {
    pub d: usize,
    pub rho: f64,
    pub ln_value: f64,
}

impl TildeA {
    pub fn value(&self) -> f64 {
        self.ln_value.exp()
    }
}

pub fn tilde_a(table: &mut FixedPointTable, ln_queues: f64, d: usize) -> TildeA {
    table.extend(d + 1);
    let n = table.params.n as f64;
    let first = n * table.log_a[d] - ln_queues;
    let second = d as f64 * table.rho.ln() + table.log_a[d + 1];
    TildeA { d, rho: table.rho, ln_value: ln_add(first, second) }
}

/// `ln(e^a + e^b)`.
pub fn ln_add(a: f64, b: f64) -> f64 {
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    if hi == f64::NEG_INFINITY {
        return hi;
    }
    hi + (lo - hi).exp().ln_1p()
}
