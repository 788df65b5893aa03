//! Explicit error-probability bounds for the fluid approximation.
//!
//! The constants involved span hundreds of orders of magnitude (the
//! hypotheses only start to hold for `N` around `2^1800` with the default
//! settings), so every constant is carried as a natural logarithm and all
//! comparisons are made between logs.
//!
//! The second half of the module is an empirical check of the exponential
//! martingale inequality on a birth-death chain.

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fluid::{cutoff_d, ln_add, FixedPointTable};
use crate::model::LimitParams;
use crate::rng::{exp_sample, replica_seed, rng_from_seed};

/// `phi(N) = exp((ln ln N)^power)`; the default power is 2.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Phi {
    pub power: f64,
}

impl Default for Phi {
    fn default() -> Self {
        Self { power: 2.0 }
    }
}

impl Phi {
    pub fn ln_value(&self, ln_queues: f64) -> f64 {
        if ln_queues <= 1.0 {
            0.0
        } else {
            ln_queues.ln().powf(self.power)
        }
    }

    /// `ln eps` for `eps = sqrt(phi(N) / N)`.
    pub fn ln_eps(&self, ln_queues: f64) -> f64 {
        0.5 * (self.ln_value(ln_queues) - ln_queues)
    }
}

/// Regularity constants at population `N = exp(ln_queues)`, all as natural
/// logs except `k` and `c_cfg`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegularityConstants {
    pub lambda: f64,
    pub n: usize,
    pub ln_queues: f64,
    pub d: usize,
    pub alpha: f64,
    pub c_cfg: f64,
    pub ln_a_1: f64,
    pub ln_a_d: f64,
    pub ln_lambda_cap: f64,
    pub ln_b: f64,
    pub ln_tau: f64,
    pub ln_j: f64,
    pub ln_j1_b: f64,
    pub ln_j_mu: f64,
    pub k: f64,
    pub ln_j_bar: f64,
    pub ln_a: f64,
    pub ln_a_bar: f64,
    pub ln_nu: f64,
    /// `ln sigma_k = ln a_k / 2`, `k = 1..=d`.
    pub ln_sigma: Vec<f64>,
}

pub fn constants_for(
    p: LimitParams,
    ln_queues: f64,
    table: &mut FixedPointTable,
    c_cfg: f64,
) -> Result<RegularityConstants> {
    if !(c_cfg > 0.0) {
        return Err(Error::InvalidParams("C_cfg must be > 0".into()));
    }
    let d = cutoff_d(table, ln_queues)?;
    let alpha = table.alpha;
    let nf = p.n as f64;
    let l = ln_queues;
    let ln_c = c_cfg.ln();
    let ln_a_d = table.log_a(d);
    let ln_lambda_cap = l + (1.0 + p.lambda).ln();
    let ln_b = nf * std::f64::consts::LN_2 + (-0.5 + nf / alpha) * ln_a_d;
    let ln_tau = 4f64.ln() - l - p.lambda.ln() - 2.0 * (1.0 - p.lambda).ln();
    let ln_j = -l - 0.5 * ln_a_d;
    let ln_j1_b = ln_c - l + (-0.5 + (nf - 1.0) / alpha) * ln_a_d;
    let ln_j_mu = (2.0 * nf).ln() - l;
    let ln_j_bar = ln_add(ln_j, 4f64.ln() + ln_tau + ln_b);
    let ln_a = ln_c - l - (1.0 - nf / alpha) * ln_a_d;
    let ln_a_bar = ln_c + c_cfg * l.ln() - l;
    let ln_sigma = (1..=d).map(|k| 0.5 * table.log_a(k)).collect();
    Ok(RegularityConstants {
        lambda: p.lambda,
        n: p.n,
        ln_queues,
        d,
        alpha,
        c_cfg,
        ln_a_1: table.log_a(1),
        ln_a_d,
        ln_lambda_cap,
        ln_b,
        ln_tau,
        ln_j,
        ln_j1_b,
        ln_j_mu,
        k: c_cfg,
        ln_j_bar,
        ln_a,
        ln_a_bar,
        ln_nu: l + p.lambda.ln(),
        ln_sigma,
    })
}

impl RegularityConstants {
    /// `(name, ln value)` pairs in report order.
    pub fn entries(&self) -> Vec<(&'static str, f64)> {
        vec![
            ("Lambda", self.ln_lambda_cap),
            ("B", self.ln_b),
            ("tau", self.ln_tau),
            ("J", self.ln_j),
            ("J1_b", self.ln_j1_b),
            ("J_mu", self.ln_j_mu),
            ("K", self.k.ln()),
            ("J_bar", self.ln_j_bar),
            ("A", self.ln_a),
            ("A_bar", self.ln_a_bar),
            ("nu", self.ln_nu),
        ]
    }
}

/// `lhs <= rhs` between logs, with slack for relations that hold with
/// equality by construction.
fn ln_le(lhs: f64, rhs: f64) -> bool {
    lhs <= rhs + 1e-9 * rhs.abs().max(1.0)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub ln_lhs: f64,
    pub ln_rhs: f64,
    pub holds: bool,
}

fn check(name: &'static str, ln_lhs: f64, ln_rhs: f64) -> Check {
    Check { name, ln_lhs, ln_rhs, holds: ln_le(ln_lhs, ln_rhs) }
}

/// Which theorem a check belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Group {
    Fle,
    Flea,
    Fleab,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HypothesisReport {
    pub t0: f64,
    pub ln_eps: f64,
    pub ln_delta: f64,
    pub ln_delta_beta_b: f64,
    pub ln_delta_gamma_g: f64,
    pub ln_x0_dev: f64,
    pub checks: Vec<(Group, Check)>,
    pub fle: bool,
    pub flea: bool,
    pub fleab: bool,
}

impl HypothesisReport {
    pub fn failed(&self) -> Vec<&'static str> {
        self.checks.iter().filter(|(_, c)| !c.holds).map(|(_, c)| c.name).collect()
    }
}

/// `ln ||X_0 - x_0||` for `X_0 = (1/N, 0, ..., 0)` and `x_0 = 0`.
pub fn ln_initial_deviation(c: &RegularityConstants) -> f64 {
    -c.ln_queues - 0.5 * c.ln_a_1
}

/// Evaluates every hypothesis with `delta = eps e^{-K t0} / 7`,
/// `delta(beta, b) = delta` and `delta(gamma, g) = delta / (2 tau B)`.
///
/// The tube condition is checked through the domination `x(t) <= a`, under
/// which it reduces to `2 eps sqrt(a_k) <= a_k` for all `k` and
/// `a_1 + 2 eps sqrt(a_1) <= (1 + lambda) / 2`.
pub fn check_hypotheses(c: &RegularityConstants, ln_eps: f64, t0: f64, ln_x0_dev: f64) -> HypothesisReport {
    let ln2 = std::f64::consts::LN_2;
    let ln4 = 2.0 * ln2;
    let ln_t0 = t0.ln();
    let ln_delta = ln_eps - c.k * t0 - 7f64.ln();
    let ln_dbb = ln_delta;
    let ln_dgg = ln_delta - ln2 - c.ln_tau - c.ln_b;
    let regularity =
        ln2 + c.ln_lambda_cap + ln_t0 + ln_add(c.ln_tau + c.ln_j1_b, c.ln_nu + 2.0 * c.ln_tau + c.ln_b + c.ln_j_mu);
    let tube_inner = c.ln_sigma.iter().map(|&s| ln2 + ln_eps - s).fold(f64::NEG_INFINITY, f64::max);
    let ln_half_gap = ((1.0 - c.lambda) / 2.0).ln();

    let mut checks = vec![
        (Group::Fle, check("J <= eps", c.ln_j, ln_eps)),
        (Group::Fle, check("||X0 - x0|| <= delta", ln_x0_dev, ln_delta)),
        (Group::Fle, check("delta(beta,b) <= delta", ln_dbb, ln_delta)),
        (Group::Fle, check("2 tau B delta(gamma,g) <= delta", ln2 + c.ln_tau + c.ln_b + ln_dgg, ln_delta)),
        (Group::Fle, check("2 tau B <= delta", ln2 + c.ln_tau + c.ln_b, ln_delta)),
        (Group::Fle, check("2 Lambda t0 (tau J1 + nu tau^2 B J_mu) <= delta", regularity, ln_delta)),
        (Group::Fle, check("delta <= Lambda J_bar t0 / 4", ln_delta, c.ln_lambda_cap + c.ln_j_bar + ln_t0 - ln4)),
        (Group::Fle, check("tube: 2 eps sqrt(a_k) <= a_k", tube_inner, 0.0)),
        (Group::Fle, check("tube: 2 eps sqrt(a_1) <= (1 - lambda) / 2", ln2 + ln_eps + 0.5 * c.ln_a_1, ln_half_gap)),
        (Group::Flea, check("delta J_bar <= A t0 / 4", ln_delta + c.ln_j_bar, c.ln_a + ln_t0 - ln4)),
        (Group::Flea, check("A_bar <= A", c.ln_a_bar, c.ln_a)),
        (Group::Flea, check("A <= Lambda J_bar^2", c.ln_a, c.ln_lambda_cap + 2.0 * c.ln_j_bar)),
        (Group::Fleab, check("delta J_bar <= A_bar t0 / 4", ln_delta + c.ln_j_bar, c.ln_a_bar + ln_t0 - ln4)),
    ];
    let ratio = c.ln_a_bar - 20f64.ln() - c.ln_a;
    let abab_left = [c.ln_tau, c.ln_tau + ln_dgg, c.ln_lambda_cap + ln_t0 + c.ln_nu + 2.0 * c.ln_tau + c.ln_j_mu]
        .into_iter()
        .fold(f64::NEG_INFINITY, f64::max)
        - ln_t0;
    checks.push((
        Group::Fleab,
        check("max{tau, tau delta(gamma,g), Lambda t0 nu tau^2 J_mu} / t0 <= A_bar / (20 A)", abab_left, ratio),
    ));
    checks.push((Group::Fleab, check("A_bar / (20 A) <= Lambda tau", ratio, c.ln_lambda_cap + c.ln_tau)));

    let all = |g: &[Group]| checks.iter().filter(|(gr, _)| g.contains(gr)).all(|(_, ch)| ch.holds);
    let fle = all(&[Group::Fle]);
    let flea = all(&[Group::Fle, Group::Flea]);
    let fleab = all(&[Group::Fle, Group::Flea, Group::Fleab]);
    HypothesisReport {
        t0,
        ln_eps,
        ln_delta,
        ln_delta_beta_b: ln_dbb,
        ln_delta_gamma_g: ln_dgg,
        ln_x0_dev,
        checks,
        fle,
        flea,
        fleab,
    }
}

/// A probability bound `sum_i 2d exp(-e_i)`, clipped to 1.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProbBound {
    /// `ln e_i`, finite even when `e_i` itself overflows.
    pub ln_exponents: Vec<f64>,
    pub exponents: Vec<f64>,
    /// Unclipped sum.
    pub raw: f64,
    pub value: f64,
    pub vacuous: bool,
}

impl ProbBound {
    fn new(d: usize, ln_exponents: Vec<f64>) -> Self {
        let exponents: Vec<f64> = ln_exponents.iter().map(|l| l.exp()).collect();
        let raw: f64 = exponents.iter().map(|&e| 2.0 * d as f64 * (-e).exp()).sum();
        Self { ln_exponents, exponents, raw, value: raw.min(1.0), vacuous: raw >= 1.0 }
    }
}

/// `2d exp(-delta^2 / (4 A t0))`.
pub fn flea_bound(d: usize, ln_delta: f64, ln_a: f64, t0: f64) -> ProbBound {
    ProbBound::new(d, vec![2.0 * ln_delta - 4f64.ln() - ln_a - t0.ln()])
}

/// `2d exp(-delta^2 / (4 A_bar t0)) + 2d exp(-(A_bar/A)^2 t0 / (6400 Lambda tau^2))`.
pub fn fleab_bound(
    d: usize,
    ln_delta: f64,
    ln_a_bar: f64,
    ln_a: f64,
    ln_lambda_cap: f64,
    ln_tau: f64,
    t0: f64,
) -> ProbBound {
    let e1 = 2.0 * ln_delta - 4f64.ln() - ln_a_bar - t0.ln();
    let e2 = 2.0 * (ln_a_bar - ln_a) + t0.ln() - 6400f64.ln() - ln_lambda_cap - 2.0 * ln_tau;
    ProbBound::new(d, vec![e1, e2])
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ErrorBounds {
    pub flea: ProbBound,
    /// Present only when the extra hypotheses for the sharper bound hold.
    pub fleab: Option<ProbBound>,
}

/// Evaluates the bounds whose hypotheses hold; errors when none does.
pub fn error_probability(c: &RegularityConstants, r: &HypothesisReport) -> Result<ErrorBounds> {
    if !r.flea {
        return Err(Error::HypothesesUnsatisfied(r.failed().join("; ")));
    }
    let flea = flea_bound(c.d, r.ln_delta, c.ln_a, r.t0);
    let fleab = r.fleab.then(|| fleab_bound(c.d, r.ln_delta, c.ln_a_bar, c.ln_a, c.ln_lambda_cap, c.ln_tau, r.t0));
    Ok(ErrorBounds { flea, fleab })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScanRow {
    pub log2_queues: u32,
    pub d: Option<usize>,
    pub fle: bool,
    pub flea: bool,
    pub fleab: bool,
    /// Logs of the exponents of the sharper bound (when `d` exists).
    pub ln_exponents: Vec<f64>,
    /// Both exponents exceed `ln N`.
    pub exceeds_log_n: bool,
    pub a_bar_le_a: bool,
}

impl ScanRow {
    pub fn good(&self) -> bool {
        self.fleab && self.exceeds_log_n
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScanResult {
    pub rows: Vec<ScanRow>,
    /// Least `j` such that every row from `N = 2^j` to the end of the grid
    /// is good.
    pub n0_log2: Option<u32>,
    /// Least `j` from which `A_bar <= A` holds to the end of the grid.
    pub a_bar_le_a_log2: Option<u32>,
}

/// Scans `N = 2^j` for `j` in `log2_range`.
pub fn scan_dyadic(
    p: LimitParams,
    t0: f64,
    c_cfg: f64,
    phi: Phi,
    log2_range: std::ops::RangeInclusive<u32>,
) -> Result<ScanResult> {
    let mut table = FixedPointTable::new(p, 8);
    let mut rows = Vec::new();
    for j in log2_range {
        let ln_queues = j as f64 * std::f64::consts::LN_2;
        let row = match constants_for(p, ln_queues, &mut table, c_cfg) {
            Ok(c) => {
                let r = check_hypotheses(&c, phi.ln_eps(ln_queues), t0, ln_initial_deviation(&c));
                let b = fleab_bound(c.d, r.ln_delta, c.ln_a_bar, c.ln_a, c.ln_lambda_cap, c.ln_tau, t0);
                ScanRow {
                    log2_queues: j,
                    d: Some(c.d),
                    fle: r.fle,
                    flea: r.flea,
                    fleab: r.fleab,
                    exceeds_log_n: b.ln_exponents.iter().all(|&e| e > ln_queues.ln()),
                    ln_exponents: b.ln_exponents,
                    a_bar_le_a: ln_le(c.ln_a_bar, c.ln_a),
                }
            }
            Err(Error::QueuesTooFew { .. }) => ScanRow {
                log2_queues: j,
                d: None,
                fle: false,
                flea: false,
                fleab: false,
                ln_exponents: Vec::new(),
                exceeds_log_n: false,
                a_bar_le_a: false,
            },
            Err(e) => return Err(e),
        };
        rows.push(row);
    }
    let tail_from = |pred: &dyn Fn(&ScanRow) -> bool| -> Option<u32> {
        let mut first = None;
        for r in rows.iter().rev() {
            if pred(r) {
                first = Some(r.log2_queues);
            } else {
                break;
            }
        }
        first
    };
    let n0_log2 = tail_from(&|r| r.good());
    let a_bar_le_a_log2 = tail_from(&|r| r.a_bar_le_a);
    Ok(ScanResult { rows, n0_log2, a_bar_le_a_log2 })
}

/// Root of `theta e^{theta J} = delta / eps`.
pub fn solve_theta(delta: f64, eps: f64, j: f64) -> f64 {
    let target = delta / eps;
    if j == 0.0 {
        return target;
    }
    let (mut lo, mut hi) = (0.0f64, target);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid * (mid * j).exp() < target {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-16 * hi {
            break;
        }
    }
    0.5 * (lo + hi)
}

/// `exp(-delta^2 / (2 eps e^{theta J}))`.
pub fn emi_bound(delta: f64, eps: f64, j: f64) -> f64 {
    let theta = solve_theta(delta, eps, j);
    (-delta * delta / (2.0 * eps * (theta * j).exp())).exp()
}

/// Birth-death chain on `{0, ..., cap}` with birth rate `birth` (below the
/// cap) and death rate `death` (above zero).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BirthDeath {
    pub birth: f64,
    pub death: f64,
    pub cap: usize,
    pub start: usize,
    /// Hard time limit; the stopping time is the earlier of this and the
    /// moment the quadratic characteristic reaches `eps`.
    pub horizon: f64,
}

impl BirthDeath {
    fn rates(&self, x: usize) -> (f64, f64) {
        (if x < self.cap { self.birth } else { 0.0 }, if x > 0 { self.death } else { 0.0 })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EmiCheck {
    pub delta: f64,
    pub eps: f64,
    pub jump: f64,
    pub hits: usize,
    pub reps: usize,
    pub empirical: f64,
    pub wilson_low: f64,
    pub wilson_high: f64,
    pub bound: f64,
    pub consistent: bool,
}

/// Wilson score interval at `z` standard deviations.
pub fn wilson_interval(hits: usize, reps: usize, z: f64) -> (f64, f64) {
    let n = reps as f64;
    let p = hits as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = z / denom * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
    ((center - half).max(0.0), (center + half).min(1.0))
}

/// Frequency of `{sup_{t <= T} M_t >= delta}` where `T` is the first time the
/// quadratic characteristic `int alpha` reaches `eps`, or the chain's horizon
/// if that comes first. `int_0^T alpha <= eps` then always holds, and the
/// frequency is compared with the exponential martingale bound. `phi` is
/// indexed by state.
pub fn emi_empirical(chain: BirthDeath, phi: &[f64], delta: f64, eps: f64, reps: usize, seed: u64) -> Result<EmiCheck> {
    if chain.cap == 0
        || chain.cap > 100
        || !(chain.horizon > 0.0)
        || phi.len() != chain.cap + 1
        || chain.start > chain.cap
    {
        return Err(Error::InvalidParams(
            "birth-death chain needs 1 <= cap <= 100, a positive horizon and phi on 0..=cap".into(),
        ));
    }
    if !(delta > 0.0 && eps > 0.0) || reps == 0 {
        return Err(Error::InvalidParams("delta, eps and reps must be positive".into()));
    }
    if !(chain.birth > 0.0 && chain.death > 0.0) {
        return Err(Error::InvalidParams("birth and death rates must be positive".into()));
    }
    let jump = (0..chain.cap).map(|x| (phi[x + 1] - phi[x]).abs()).fold(0.0, f64::max);
    let hits = (0..reps as u64)
        .into_par_iter()
        .filter(|&i| emi_path(&chain, phi, delta, eps, replica_seed(seed, 0xE41, i)))
        .count();
    let (wilson_low, wilson_high) = wilson_interval(hits, reps, 3.0);
    let bound = emi_bound(delta, eps, jump);
    Ok(EmiCheck {
        delta,
        eps,
        jump,
        hits,
        reps,
        empirical: hits as f64 / reps as f64,
        wilson_low,
        wilson_high,
        bound,
        consistent: wilson_low <= bound,
    })
}

fn emi_path(chain: &BirthDeath, phi: &[f64], delta: f64, eps: f64, seed: u64) -> bool {
    let mut rng = rng_from_seed(seed);
    let mut x = chain.start;
    let (mut m, mut budget, mut t) = (0.0, eps, 0.0);
    loop {
        let (up, down) = chain.rates(x);
        let total = up + down;
        let up_d = if x < chain.cap { phi[x + 1] - phi[x] } else { 0.0 };
        let down_d = if x > 0 { phi[x - 1] - phi[x] } else { 0.0 };
        let q_phi = up * up_d + down * down_d;
        let alpha = up * up_d * up_d + down * down_d * down_d;
        let dt = exp_sample(&mut rng, total);
        let mut seg = dt.min(chain.horizon - t);
        let out_of_budget = alpha > 0.0 && alpha * seg >= budget;
        if out_of_budget {
            seg = budget / alpha;
        }
        // M is linear between jumps, so its supremum is attained at segment ends
        let m_end = m - q_phi * seg;
        if m_end >= delta {
            return true;
        }
        if out_of_budget || t + dt >= chain.horizon {
            return false;
        }
        budget -= alpha * dt;
        t += dt;
        let next = if rng.random::<f64>() * total < up { x + 1 } else { x - 1 };
        m = m_end + phi[next] - phi[x];
        x = next;
        if m >= delta {
            return true;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fluid::fixed_point;

    fn lp(lambda: f64, n: usize) -> LimitParams {
        LimitParams::new(lambda, n).unwrap()
    }

    #[test]
    fn constants_at_one_million() {
        let p = lp(0.5, 1);
        let mut t = fixed_point(p, 8);
        let c = constants_for(p, 1e6f64.ln(), &mut t, 4.0).unwrap();
        assert!((c.ln_lambda_cap.exp() - 1.5e6).abs() < 1e-6);
        assert!((c.ln_tau.exp() - 3.2e-5).abs() < 1e-18);
        assert_eq!(c.d, 4);
    }

    #[test]
    fn theta_cases() {
        assert_eq!(solve_theta(2.0, 1.0, 0.0), 2.0);
        let th = solve_theta(1.0, 1.0, 1.0);
        assert!((th - 0.567_143_290_409_783_8).abs() < 1e-12);
        assert!((th * th.exp() - 1.0).abs() < 1e-12);
        let mut prev = f64::INFINITY;
        for j in [0.0, 0.1, 0.5, 1.0, 3.0] {
            let th = solve_theta(1.0, 0.5, j);
            assert!(th <= prev);
            prev = th;
        }
    }

    #[test]
    fn emi_bound_cases() {
        assert!((emi_bound(1.0, 1.0, 0.0) - (-0.5f64).exp()).abs() < 1e-15);
        assert!(emi_bound(1e-9, 1.0, 1.0) > 1.0 - 1e-15);
        let mut prev = 0.0;
        for j in [0.0, 0.1, 0.5, 1.0, 3.0, 10.0] {
            let b = emi_bound(2.0, 1.5, j);
            assert!(b >= prev);
            prev = b;
        }
        assert!((emi_bound(0.7, 0.3, 0.0) - (-0.7f64 * 0.7 / 0.6).exp()).abs() < 1e-15);
    }

    #[test]
    fn zero_delta_bounds_are_vacuous() {
        let b = flea_bound(3, f64::NEG_INFINITY, -10.0, 1.0);
        assert_eq!(b.raw, 6.0);
        assert_eq!(b.value, 1.0);
        assert!(b.vacuous);
        let b = fleab_bound(3, f64::NEG_INFINITY, -10.0, -5.0, 10.0, -10.0, 1.0);
        assert_eq!(b.value, 1.0);
    }

    #[test]
    fn fleab_first_term_below_flea_when_abar_le_a() {
        let a = flea_bound(4, -3.0, -5.0, 1.0);
        let b = fleab_bound(4, -3.0, -6.0, -5.0, 10.0, -10.0, 1.0);
        assert!(b.exponents[0] >= a.exponents[0]);
    }

    #[test]
    fn refuses_at_one_million() {
        let p = lp(0.5, 1);
        let mut t = fixed_point(p, 8);
        let l = 1e6f64.ln();
        let c = constants_for(p, l, &mut t, 4.0).unwrap();
        let r = check_hypotheses(&c, Phi::default().ln_eps(l), 1.0, ln_initial_deviation(&c));
        assert!(!r.flea);
        assert!(matches!(error_probability(&c, &r), Err(Error::HypothesesUnsatisfied(_))));
    }

    #[test]
    fn eps_above_one_makes_jump_check_trivial() {
        let p = lp(0.5, 1);
        let mut t = fixed_point(p, 8);
        let c = constants_for(p, 1e6f64.ln(), &mut t, 4.0).unwrap();
        let r = check_hypotheses(&c, 0.5, 1.0, ln_initial_deviation(&c));
        assert!(r.checks.iter().any(|(_, ch)| ch.name == "J <= eps" && ch.holds));
    }

    #[test]
    fn tube_verdict_flips_once_as_eps_grows() {
        let p = lp(0.5, 2);
        let mut t = fixed_point(p, 8);
        let c = constants_for(p, 1e4f64.ln(), &mut t, 4.0).unwrap();
        let verdicts: Vec<bool> = (0..80)
            .map(|i| {
                let ln_eps = -12.0 + 0.15 * i as f64;
                let r = check_hypotheses(&c, ln_eps, 1.0, ln_initial_deviation(&c));
                r.checks.iter().filter(|(_, ch)| ch.name.starts_with("tube")).all(|(_, ch)| ch.holds)
            })
            .collect();
        assert!(verdicts[0]);
        assert!(!verdicts[79]);
        let flips = verdicts.windows(2).filter(|w| w[0] != w[1]).count();
        assert_eq!(flips, 1);
    }

    #[test]
    fn wilson_contains_estimate() {
        let (lo, hi) = wilson_interval(30, 1000, 3.0);
        assert!(lo < 0.03 && 0.03 < hi);
        assert_eq!(wilson_interval(0, 1000, 3.0).0, 0.0);
    }

    #[test]
    fn emi_constant_phi_never_hits() {
        let chain = BirthDeath { birth: 0.5, death: 1.0, cap: 20, start: 0, horizon: 50.0 };
        let r = emi_empirical(chain, &[1.0; 21], 0.5, 5.0, 2000, 1).unwrap();
        assert_eq!(r.hits, 0);
        assert_eq!(r.jump, 0.0);
    }
}
