//! The idealized fast chain for the memory length.
//!
//! With the tail vector frozen at `x`, each arrival (rate `nu = N lambda`)
//! draws `V = (V_1, ..., V_n)` i.i.d. with `P(V_i >= k) = x_k` and moves the
//! memory length from `y` to [`memory_map`]`(y, V)`. This module builds the
//! generator of that chain on its closed class, solves for the equilibrium
//! and for correctors, and estimates coupling times and correctors by Monte
//! Carlo under the monotone coupling that shares the `V` draws.
//!
//! The index set is `{lo, ..., d}` with `lo = 0` for `n >= 2` and `lo = 1`
//! for `n = 1`; the reference state is `lo`.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fluid;
use crate::model::{FluidVector, ModelParams};
use crate::rng::{exp_sample, replica_seed, rng_from_seed};

/// Memory length after an arrival that sees sample `v` while the memory
/// queue has length `y`.
pub fn memory_map(y: usize, v: &[usize]) -> usize {
    let (m, p) = min_and_p(v);
    if y < m {
        y + 1
    } else if y <= p {
        y
    } else {
        p
    }
}

fn min_and_p(v: &[usize]) -> (usize, usize) {
    let mut first = usize::MAX;
    let mut second = usize::MAX;
    for &vi in v {
        if vi < first {
            second = first;
            first = vi;
        } else if vi < second {
            second = vi;
        }
    }
    let p = if v.len() == 1 { first + 1 } else { (first + 1).min(second) };
    (first, p)
}

/// Lowest state of the index set.
pub fn index_lo(n: usize) -> usize {
    if n == 1 {
        1
    } else {
        0
    }
}

/// Mean coupling-time bound `tau = 4 / (N lambda (1 - lambda)^2)`.
pub fn tau_bound(p: ModelParams) -> f64 {
    4.0 / (p.arrival_rate() * (1.0 - p.lambda).powi(2))
}

/// `V_i = max{k : U_i < x_k}` by inverse transform.
pub fn sample_v<R: Rng + ?Sized>(x: &FluidVector, n: usize, rng: &mut R) -> Vec<usize> {
    (0..n)
        .map(|_| {
            let u: f64 = rng.random();
            x.x.iter().take_while(|&&xk| u < xk).count()
        })
        .collect()
}

/// Coordinate marginal `P(V_i = v)`, `v = 0..=d`.
pub fn coordinate_pmf(x: &FluidVector) -> Vec<f64> {
    (0..=x.depth()).map(|v| x.get(v) - x.get(v + 1)).collect()
}

/// Joint pmf of `(M, V^(2))` for `n >= 2` as `pmf[m][v]`, `m <= v <= d`.
fn order_stat_pmf(x: &FluidVector, n: usize) -> Vec<Vec<f64>> {
    let d = x.depth();
    let nf = n as f64;
    // S(j,k) = P(M >= j, V2 >= k)
    let s = |j: usize, k: usize| -> f64 {
        let (xj, xk) = (x.get(j), x.get(k));
        if j <= k {
            xk.powi(n as i32) + nf * (xj - xk) * xk.powi(n as i32 - 1)
        } else {
            xj.powi(n as i32)
        }
    };
    let mut pmf = vec![vec![0.0; d + 1]; d + 1];
    for m in 0..=d {
        for v in m..=d {
            let q = s(m, v) - s(m + 1, v) - s(m, v + 1) + s(m + 1, v + 1);
            pmf[m][v] = q.max(0.0);
        }
    }
    pmf
}

/// One-step law of `F(y, V)` from any `y >= 0`, as `row[y']` for
/// `y' = 0..=max(y, d) + 1`.
pub fn transition_row(x: &FluidVector, n: usize, y: usize) -> Vec<f64> {
    let d = x.depth();
    let mut row = vec![0.0; y.max(d) + 2];
    let apply = |m: usize, p: usize| {
        if y < m {
            y + 1
        } else if y <= p {
            y
        } else {
            p
        }
    };
    if n == 1 {
        for (m, &q) in coordinate_pmf(x).iter().enumerate() {
            row[apply(m, m + 1)] += q;
        }
    } else {
        let pmf = order_stat_pmf(x, n);
        for m in 0..=d {
            for v in m..=d {
                let q = pmf[m][v];
                if q > 0.0 {
                    row[apply(m, (m + 1).min(v))] += q;
                }
            }
        }
    }
    row
}

/// One-step law of `F(y, V)` as `probs[y - lo][y' - lo]`. The index set is
/// closed under `F`, so each row is a probability vector.
fn transition_probs(x: &FluidVector, n: usize) -> Vec<Vec<f64>> {
    let (lo, d) = (index_lo(n), x.depth());
    (lo..=d).map(|y| transition_row(x, n, y)[lo..=d].to_vec()).collect()
}

/// Same table as the generator, by brute-force enumeration of
/// `V in {0..=d}^n` with product weights. Meant as a cross-check for small
/// `n`.
pub fn enumerated_transition_probs(x: &FluidVector, n: usize) -> Vec<Vec<f64>> {
    let d = x.depth();
    let lo = index_lo(n);
    let size = d + 1 - lo;
    let pmf = coordinate_pmf(x);
    let mut probs = vec![vec![0.0; size]; size];
    let mut v = vec![0usize; n];
    loop {
        let w: f64 = v.iter().map(|&vi| pmf[vi]).product();
        if w > 0.0 {
            for y in lo..=d {
                probs[y - lo][memory_map(y, &v) - lo] += w;
            }
        }
        let mut i = 0;
        loop {
            if i == n {
                return probs;
            }
            v[i] += 1;
            if v[i] <= d {
                break;
            }
            v[i] = 0;
            i += 1;
        }
    }
}

/// Rate table `g(x, y, y') = N lambda P(F(y, V) = y')` on `{lo..=d}`.
#[derive(Debug, Clone, Serialize)]
pub struct FastGenerator {
    pub x: FluidVector,
    pub params: ModelParams,
    pub lo: usize,
    pub nu: f64,
    /// `probs[y - lo][y' - lo] = P(F(y, V) = y')`, self-loops included.
    pub probs: Vec<Vec<f64>>,
}

pub fn generator(x: &FluidVector, params: ModelParams) -> FastGenerator {
    FastGenerator {
        x: x.clone(),
        params,
        lo: index_lo(params.n),
        nu: params.arrival_rate(),
        probs: transition_probs(x, params.n),
    }
}

impl FastGenerator {
    pub fn depth(&self) -> usize {
        self.x.depth()
    }

    pub fn size(&self) -> usize {
        self.probs.len()
    }

    /// Off-diagonal rate `g(x, y, y')`; zero outside the index set.
    pub fn rate(&self, y: usize, y2: usize) -> f64 {
        let (lo, d) = (self.lo, self.depth());
        if y == y2 || y < lo || y2 < lo || y > d || y2 > d {
            return 0.0;
        }
        self.nu * self.probs[y - lo][y2 - lo]
    }

    /// `g(x, y, y')` for every `y' = 0..=max(y, d) + 1` from any `y >= 0`,
    /// including states outside the index set; the entry at `y` is zero.
    pub fn rates_from(&self, y: usize) -> Vec<f64> {
        let mut row = transition_row(&self.x, self.params.n, y);
        row[y] = 0.0;
        row.iter_mut().for_each(|r| *r *= self.nu);
        row
    }

    /// Full generator matrix on the index set (rows sum to zero).
    pub fn matrix(&self) -> DMatrix<f64> {
        let m = self.size();
        let mut q = DMatrix::zeros(m, m);
        for i in 0..m {
            let mut out = 0.0;
            for j in 0..m {
                if i != j {
                    q[(i, j)] = self.nu * self.probs[i][j];
                    out += q[(i, j)];
                }
            }
            q[(i, i)] = -out;
        }
        q
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Stationary {
    /// `pi_x(y)` for `y = 0..=d` (zero below the index set).
    pub pi: Vec<f64>,
    /// `max_j |(pi G)_j| / nu`.
    pub residual: f64,
}

impl Stationary {
    /// `sum_{j >= k} pi(j)`.
    pub fn tail(&self, k: usize) -> f64 {
        self.pi.iter().skip(k).sum()
    }
}

pub fn stationary(gen: &FastGenerator) -> Result<Stationary> {
    let m = gen.size();
    let q = gen.matrix();
    let mut a = q.transpose();
    for j in 0..m {
        a[(m - 1, j)] = 1.0;
    }
    let mut rhs = DVector::zeros(m);
    rhs[m - 1] = 1.0;
    let sol = a.lu().solve(&rhs).ok_or_else(|| Error::Singular("stationary system of the fast chain".into()))?;
    let res = q.transpose() * &sol;
    let residual = res.iter().fold(0.0f64, |acc, r| acc.max(r.abs())) / gen.nu;
    let mut pi = vec![0.0; gen.lo];
    pi.extend(sol.iter().map(|&p| p.max(0.0)));
    Ok(Stationary { pi, residual })
}

/// Equilibrium tail `mu(x, k)`.
pub fn mu_product(x: &FluidVector, n: usize, k: usize) -> f64 {
    fluid::mu_of(x, n, k)
}

/// Monte Carlo summary over independent replicas.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct McEstimate {
    pub value: f64,
    pub std_err: f64,
    pub reps: usize,
}

impl McEstimate {
    fn from_samples(xs: &[f64]) -> Self {
        let reps = xs.len();
        let mean = xs.iter().sum::<f64>() / reps as f64;
        let var = if reps > 1 { xs.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (reps - 1) as f64 } else { 0.0 };
        Self { value: mean, std_err: (var / reps as f64).sqrt(), reps }
    }
}

/// Per-replica event cap of the Monte Carlo routines.
pub const EVENT_CAP: u64 = 10_000_000;

/// Runs `Y` from `y` and `Ybar` from `ybar` on shared draws until they meet and
/// returns `(T_c, int_0^{T_c} (f(Ybar) - f(Y)) dt)`, or `None` if censored.
fn couple_once(
    x: &FluidVector,
    n: usize,
    nu: f64,
    y: usize,
    ybar: usize,
    f: Option<&[f64]>,
    seed: u64,
) -> Option<(f64, f64)> {
    let mut rng = rng_from_seed(seed);
    let (mut a, mut b) = (y, ybar);
    let (mut t, mut integral) = (0.0, 0.0);
    let mut events = 0u64;
    while a != b {
        if events == EVENT_CAP {
            return None;
        }
        let dt = exp_sample(&mut rng, nu);
        t += dt;
        if let Some(f) = f {
            integral += dt * (f[b] - f[a]);
        }
        let v = sample_v(x, n, &mut rng);
        a = memory_map(a, &v);
        b = memory_map(b, &v);
        events += 1;
    }
    Some((t, integral))
}

fn check_state(y: usize, n: usize, d: usize) -> Result<()> {
    let lo = index_lo(n);
    if y < lo || y > d {
        return Err(Error::InvalidParams(format!("state {y} outside the index set {lo}..={d}")));
    }
    Ok(())
}

fn run_reps(
    x: &FluidVector,
    p: ModelParams,
    y: usize,
    ybar: usize,
    f: Option<&[f64]>,
    reps: usize,
    seed: u64,
) -> Result<Vec<(f64, f64)>> {
    if reps == 0 {
        return Err(Error::InvalidParams("reps must be >= 1".into()));
    }
    check_state(y, p.n, x.depth())?;
    check_state(ybar, p.n, x.depth())?;
    let nu = p.arrival_rate();
    let out: Vec<Option<(f64, f64)>> = (0..reps as u64)
        .into_par_iter()
        .map(|i| couple_once(x, p.n, nu, y, ybar, f, replica_seed(seed, y as u64, i)))
        .collect();
    let censored = out.iter().filter(|o| o.is_none()).count();
    if censored > 0 {
        return Err(Error::Censored { censored, reps, cap: EVENT_CAP });
    }
    Ok(out.into_iter().flatten().collect())
}

/// Estimates `m(x, y, ybar) = E T_c` under the shared-draw coupling.
pub fn coupling_time_mc(
    x: &FluidVector,
    y: usize,
    ybar: usize,
    p: ModelParams,
    reps: usize,
    seed: u64,
) -> Result<McEstimate> {
    let samples = run_reps(x, p, y, ybar, None, reps, seed)?;
    let ts: Vec<f64> = samples.iter().map(|s| s.0).collect();
    Ok(McEstimate::from_samples(&ts))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CorrectorEstimate {
    pub estimate: McEstimate,
    pub reference: usize,
}

/// Estimates `chi(x, y) = E int_0^{T_c} (f(Ybar_t) - f(Y_t)) dt` with
/// `Ybar_0 = lo`. `f` is indexed by `0..=d`.
pub fn corrector_mc(
    f: &[f64],
    x: &FluidVector,
    y: usize,
    p: ModelParams,
    reps: usize,
    seed: u64,
) -> Result<CorrectorEstimate> {
    check_len(f, x)?;
    let reference = index_lo(p.n);
    let samples = run_reps(x, p, y, reference, Some(f), reps, seed)?;
    let vals: Vec<f64> = samples.iter().map(|s| s.1).collect();
    Ok(CorrectorEstimate { estimate: McEstimate::from_samples(&vals), reference })
}

fn check_len(f: &[f64], x: &FluidVector) -> Result<()> {
    if f.len() != x.depth() + 1 {
        return Err(Error::InvalidParams(format!("function has {} values, expected {}", f.len(), x.depth() + 1)));
    }
    Ok(())
}

#[derive(Debug, Clone, Serialize)]
pub struct CorrectorSolution {
    /// `chi(x, y)` for `y = 0..=d` (zero below the index set).
    pub chi: Vec<f64>,
    /// `fbar = sum_y pi(y) f(y)`.
    pub fbar: f64,
    /// `max_y |G chi(y) - f(y) + fbar| / nu` over the index set.
    pub residual: f64,
    pub reference: usize,
}

/// Solves `G chi = f - fbar` with `chi(lo) = 0`.
pub fn corrector_exact(f: &[f64], gen: &FastGenerator, pi: &Stationary) -> Result<CorrectorSolution> {
    check_len(f, &gen.x)?;
    let (lo, m) = (gen.lo, gen.size());
    let fbar: f64 = (lo..lo + m).map(|y| pi.pi[y] * f[y]).sum();
    let q = gen.matrix();
    let rhs_full = DVector::from_iterator(m, (lo..lo + m).map(|y| f[y] - fbar));
    // the row of the heaviest state carries the only linear dependency
    let heavy = (0..m).max_by(|&i, &j| pi.pi[lo + i].total_cmp(&pi.pi[lo + j])).unwrap();
    let mut a = q.clone();
    let mut rhs = rhs_full.clone();
    for j in 0..m {
        a[(heavy, j)] = 0.0;
    }
    a[(heavy, 0)] = 1.0;
    rhs[heavy] = 0.0;
    let sol = a.lu().solve(&rhs).ok_or_else(|| Error::Singular("corrector system of the fast chain".into()))?;
    let res = &q * &sol - &rhs_full;
    let residual = res.iter().fold(0.0f64, |acc, r| acc.max(r.abs())) / gen.nu;
    let scale = rhs_full.iter().fold(1.0f64, |acc, r| acc.max(r.abs() / gen.nu));
    if residual > 1e-8 * scale {
        return Err(Error::Singular(format!("corrector system inconsistent, residual {residual:e}")));
    }
    let mut chi = vec![0.0; lo];
    chi.extend(sol.iter().copied());
    chi[lo] = 0.0;
    Ok(CorrectorSolution { chi, fbar, residual, reference: lo })
}

/// The drift `b(x, y)` of the slow variables given memory length `y`.
pub fn drift_b(x: &FluidVector, y: usize, lambda: f64, n: usize) -> Vec<f64> {
    let d = x.depth();
    let pw = |v: f64| v.powi(n as i32);
    (1..=d)
        .map(|k| {
            let inflow = if y + 1 >= k { lambda * pw(x.get(k - 1)) } else { 0.0 };
            let outflow = if y >= k { lambda * pw(x.get(k)) } else { 0.0 };
            inflow - outflow - (x.get(k) - x.get(k + 1))
        })
        .collect()
}

/// `bbar(x) = sum_y pi_x(y) b(x, y)`.
pub fn drift_bar_b(x: &FluidVector, pi: &Stationary, lambda: f64, n: usize) -> Vec<f64> {
    let mut out = vec![0.0; x.depth()];
    for (y, &w) in pi.pi.iter().enumerate() {
        if w == 0.0 {
            continue;
        }
        for (o, b) in out.iter_mut().zip(drift_b(x, y, lambda, n)) {
            *o += w * b;
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TvDistance {
    /// `sup_A |mu_x(A) - mu_x'(A)|`.
    pub tv: f64,
    /// `sum_v |mu_x(v) - mu_x'(v)| = 2 tv`.
    pub l1: f64,
    /// `2 n sum_k |x_k - x'_k|`, an upper bound on `l1`.
    pub bound: f64,
}

/// Enumeration budget of [`tv_distance`].
pub const TV_ENUMERATION_LIMIT: f64 = 1e7;

/// Exact distance between the product sample laws `mu_x` and `mu_x'`.
pub fn tv_distance(x: &FluidVector, x2: &FluidVector, n: usize) -> Result<TvDistance> {
    let d = x.depth().max(x2.depth());
    let cost = ((d + 1) as f64).powi(n as i32);
    if cost > TV_ENUMERATION_LIMIT {
        return Err(Error::GuardExceeded { cost, limit: TV_ENUMERATION_LIMIT });
    }
    let marg = |z: &FluidVector| -> Vec<f64> { (0..=d).map(|v| z.get(v) - z.get(v + 1)).collect() };
    let (p, q) = (marg(x), marg(x2));
    let mut v = vec![0usize; n];
    let mut l1 = 0.0;
    'outer: loop {
        let a: f64 = v.iter().map(|&i| p[i]).product();
        let b: f64 = v.iter().map(|&i| q[i]).product();
        l1 += (a - b).abs();
        let mut i = 0;
        loop {
            if i == n {
                break 'outer;
            }
            v[i] += 1;
            if v[i] <= d {
                break;
            }
            v[i] = 0;
            i += 1;
        }
    }
    let bound = 2.0 * n as f64 * (1..=d).map(|k| (x.get(k) - x2.get(k)).abs()).sum::<f64>();
    Ok(TvDistance { tv: l1 / 2.0, l1, bound })
}

/// Path `(t, Y_t, Y'_t)` of two fast chains on shared draws, for `events`
/// arrivals.
pub fn fast_coupled_path(
    x: &FluidVector,
    y: usize,
    y2: usize,
    p: ModelParams,
    events: usize,
    seed: u64,
) -> Vec<(f64, usize, usize)> {
    let mut rng = rng_from_seed(seed);
    let nu = p.arrival_rate();
    let (mut a, mut b, mut t) = (y, y2, 0.0);
    let mut out = Vec::with_capacity(events + 1);
    out.push((t, a, b));
    for _ in 0..events {
        t += exp_sample(&mut rng, nu);
        let v = sample_v(x, p.n, &mut rng);
        a = memory_map(a, &v);
        b = memory_map(b, &v);
        out.push((t, a, b));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn fv(x: &[f64]) -> FluidVector {
        FluidVector::new(x.to_vec()).unwrap()
    }

    fn mp(lambda: f64, n: usize, queues: usize) -> ModelParams {
        ModelParams::new(lambda, n, queues).unwrap()
    }

    #[test]
    fn memory_map_examples() {
        assert_eq!(memory_map(2, &[5, 3]), 3);
        assert_eq!(memory_map(9, &[5, 3]), 4);
        assert_eq!(memory_map(7, &[2]), 3);
    }

    #[test]
    fn memory_map_monotone() {
        for a in 0..8 {
            for b in 0..8 {
                for y in 0..50 {
                    let f = memory_map(y, &[a, b]);
                    assert!(memory_map(y + 1, &[a, b]) >= f);
                    assert!(memory_map(y, &[a + 1, b]) >= f);
                    assert!(memory_map(y, &[a, b + 1]) >= f);
                }
            }
        }
    }

    #[test]
    fn sample_v_cases() {
        let mut rng = rng_from_seed(1);
        let z = FluidVector::zeros(3);
        assert!((0..100).all(|_| sample_v(&z, 2, &mut rng) == vec![0, 0]));
        let one = fv(&[1.0, 0.0]);
        assert!((0..100).all(|_| sample_v(&one, 3, &mut rng).iter().all(|&v| v >= 1)));
        let half = fv(&[0.5]);
        let reps = 100_000;
        let ones = (0..reps).filter(|_| sample_v(&half, 1, &mut rng)[0] == 1).count();
        let f = ones as f64 / reps as f64;
        assert!((f - 0.5).abs() < 3.0 * (0.25 / reps as f64).sqrt());
    }

    #[test]
    fn generator_zero_vector() {
        let g = generator(&FluidVector::zeros(3), mp(0.5, 2, 10));
        for y in 1..=3 {
            assert_abs_diff_eq!(g.rate(y, 0), 5.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn generator_matches_enumeration() {
        for n in 1..=3 {
            let x = fv(&[0.8, 0.5, 0.2, 0.05]);
            let closed = transition_probs(&x, n);
            let brute = enumerated_transition_probs(&x, n);
            for (r1, r2) in closed.iter().zip(&brute) {
                for (a, b) in r1.iter().zip(r2) {
                    assert_abs_diff_eq!(a, b, epsilon = 1e-14);
                }
                assert_abs_diff_eq!(r1.iter().sum::<f64>(), 1.0, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn n1_half_has_no_moves_from_one() {
        let g = generator(&fv(&[0.5]), mp(0.5, 1, 10));
        assert_eq!(g.size(), 1);
        assert_eq!(g.rate(1, 0), 0.0);
        let pi = stationary(&g).unwrap();
        assert_eq!(pi.pi, vec![0.0, 1.0]);
    }

    #[test]
    fn stationary_tails_match_mu() {
        let x = fv(&[0.5]);
        let pi = stationary(&generator(&x, mp(0.5, 2, 10))).unwrap();
        assert_abs_diff_eq!(pi.tail(1), 0.5, epsilon = 1e-12);
        let x = fv(&[0.9, 0.6, 0.3, 0.1]);
        for n in 1..=3 {
            let pi = stationary(&generator(&x, mp(0.7, n, 50))).unwrap();
            assert!(pi.residual < 1e-12);
            for k in 0..=4 {
                assert_abs_diff_eq!(pi.tail(k), mu_product(&x, n, k), epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn mu_n1_is_one() {
        assert_eq!(mu_product(&fv(&[0.3, 0.1]), 1, 0), 1.0);
        assert_abs_diff_eq!(mu_product(&fv(&[0.3, 0.1]), 1, 1), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn drift_examples() {
        let x = fv(&[0.6, 0.3, 0.1]);
        let b = drift_b(&x, 100, 0.5, 2);
        for k in 1..=3 {
            let want = 0.5 * x.get(k - 1).powi(2) - 0.5 * x.get(k).powi(2) - (x.get(k) - x.get(k + 1));
            assert_abs_diff_eq!(b[k - 1], want, epsilon = 1e-15);
        }
        let b0 = drift_b(&x, 0, 0.5, 2);
        assert_abs_diff_eq!(b0[0], 0.5 - 0.6 + 0.3, epsilon = 1e-15);
        assert_eq!(drift_b(&FluidVector::zeros(3), 4, 0.5, 2), vec![0.5, 0.0, 0.0]);
    }

    #[test]
    fn bar_b_equals_u_field() {
        let x = fv(&[0.7, 0.4, 0.15, 0.02]);
        for n in 1..=3 {
            let p = mp(0.6, n, 100);
            let pi = stationary(&generator(&x, p)).unwrap();
            let bb = drift_bar_b(&x, &pi, 0.6, n);
            let u = fluid::u_field(&x, p.limit());
            for (a, b) in bb.iter().zip(&u) {
                assert_abs_diff_eq!(a, b, epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn corrector_exact_basics() {
        let x = fv(&[0.7, 0.4, 0.15]);
        let p = mp(0.6, 2, 20);
        let g = generator(&x, p);
        let pi = stationary(&g).unwrap();
        let c = corrector_exact(&[2.0; 4], &g, &pi).unwrap();
        assert!(c.chi.iter().all(|v| v.abs() < 1e-12));
        let f = [0.0, 1.0, -2.0, 0.5];
        let c = corrector_exact(&f, &g, &pi).unwrap();
        assert_eq!(c.chi[0], 0.0);
        assert!(c.residual < 1e-10);
        let avg: f64 = (0..4).map(|y| pi.pi[y] * (f[y] - c.fbar)).sum();
        assert!(avg.abs() < 1e-12);
    }

    #[test]
    fn coupling_and_corrector_trivial_cases() {
        let x = fv(&[0.7, 0.4, 0.15]);
        let p = mp(0.5, 2, 1000);
        assert_eq!(coupling_time_mc(&x, 2, 2, p, 10, 1).unwrap().value, 0.0);
        let c = corrector_mc(&[1.0, 2.0, 3.0, 4.0], &x, 0, p, 10, 1).unwrap();
        assert_eq!(c.estimate.value, 0.0);
        let c = corrector_mc(&[3.0; 4], &x, 3, p, 100, 1).unwrap();
        assert_eq!(c.estimate.value, 0.0);
    }

    #[test]
    fn corrector_mc_matches_exact() {
        let x = fv(&[0.7, 0.4, 0.15]);
        let p = mp(0.5, 2, 100);
        let g = generator(&x, p);
        let pi = stationary(&g).unwrap();
        let f = [0.0, 1.0, -2.0, 0.5];
        let exact = corrector_exact(&f, &g, &pi).unwrap();
        for y in 0..=3 {
            let mc = corrector_mc(&f, &x, y, p, 10_000, 7).unwrap().estimate;
            assert!((mc.value - exact.chi[y]).abs() <= 3.0 * mc.std_err + 1e-12, "y={y}");
        }
    }

    #[test]
    fn rates_from_extends_the_index_set() {
        let x = FluidVector::new(vec![0.6, 0.2, 0.05]).unwrap();
        for n in [1, 2] {
            let params = ModelParams::new(0.5, n, 10).unwrap();
            let g = generator(&x, params);
            for y in index_lo(n)..=3 {
                let row = g.rates_from(y);
                for y2 in index_lo(n)..=3 {
                    assert!((row[y2] - g.rate(y, y2)).abs() < 1e-12);
                }
            }
        }
        // n = 1 from an empty memory queue: step up iff the sampled queue is busy
        let g = generator(&x, ModelParams::new(0.5, 1, 10).unwrap());
        let row = g.rates_from(0);
        assert!((row[1] - 5.0 * 0.6).abs() < 1e-12);
        assert_eq!(row.iter().sum::<f64>(), row[1]);
    }

    #[test]
    fn tv_examples() {
        let a = fv(&[0.5]);
        let b = fv(&[0.6]);
        let t = tv_distance(&a, &a, 2).unwrap();
        assert_eq!(t.l1, 0.0);
        let t = tv_distance(&a, &b, 1).unwrap();
        assert_abs_diff_eq!(t.tv, 0.1, epsilon = 1e-15);
        assert!(t.l1 <= t.bound + 1e-15);
        let t = tv_distance(&a, &b, 2).unwrap();
        // P(V=(0,0)) 0.25 vs 0.16, mixed 0.5 vs 0.48, (1,1) 0.25 vs 0.36
        assert_abs_diff_eq!(t.l1, 0.09 + 0.02 + 0.11, epsilon = 1e-15);
        assert!(t.l1 <= 0.4);
    }
}
