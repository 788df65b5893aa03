//! Event-driven simulation of the supermarket model with memory.
//!
//! Events are scheduled by competing exponentials: arrivals at rate
//! `N lambda`, departures at rate equal to the number of busy queues. Each
//! arrival samples `n` queues uniformly with replacement over queue
//! identities (the memory queue included), joins a uniformly chosen shortest
//! slot among the memory slot and the `n` sampled slots, and then moves the
//! memory to a shortest queue among those just inspected, keeping the old
//! memory on ties.
//!
//! The module also implements the shared-randomness construction on
//! identity-resolved states, under which the chain is monotone, and exact
//! enumeration of the jump rates of the memory length.

use std::collections::BTreeMap;
use std::path::Path;

use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fast::generator;
use crate::io::{fmt_real, CsvTable};
use crate::model::{FluidVector, MicroState, ModelParams, SortedLengths};
use crate::rng::{exp_sample, rng_from_seed, SimRng};

/// One sampled slot of an arrival.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Slot {
    Memory,
    /// A non-memory queue, identified by its rank among the non-memory queues
    /// listed in non-decreasing length order.
    Other {
        rank: usize,
        len: usize,
    },
}

impl Slot {
    fn len(&self, mem_len: usize) -> usize {
        match *self {
            Slot::Memory => mem_len,
            Slot::Other { len, .. } => len,
        }
    }
}

/// Length of the non-memory queue of the given rank.
fn other_len(s: &MicroState, rank: usize) -> usize {
    let mut seen = 0;
    for (len, &c) in s.hist.iter().enumerate() {
        seen += c - usize::from(len == s.mem_len);
        if rank < seen {
            return len;
        }
    }
    unreachable!("rank {rank} out of range for {} non-memory queues", s.queues - 1)
}

/// Draws `n` slots, each independently the memory queue with probability
/// `1/N` and otherwise a uniform non-memory queue.
pub fn draw_arrival_sample<R: Rng + ?Sized>(s: &MicroState, n: usize, rng: &mut R) -> Vec<Slot> {
    (0..n)
        .map(|_| {
            let id = rng.random_range(0..s.queues);
            if id == 0 {
                Slot::Memory
            } else {
                Slot::Other { rank: id - 1, len: other_len(s, id - 1) }
            }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ArrivalEffect {
    /// Pre-arrival length of the joined queue.
    pub joined_len: usize,
    pub joined_memory: bool,
}

/// Applies an arrival with the given sample.
pub fn apply_arrival<R: Rng + ?Sized>(s: &mut MicroState, slots: &[Slot], rng: &mut R) -> ArrivalEffect {
    let mem = s.mem_len;
    let shortest = slots.iter().map(|sl| sl.len(mem)).fold(mem, usize::min);
    // instance 0 is the memory slot itself, instances 1..=n the draws
    let ties: Vec<usize> = std::iter::once(mem)
        .chain(slots.iter().map(|sl| sl.len(mem)))
        .enumerate()
        .filter(|&(_, l)| l == shortest)
        .map(|(i, _)| i)
        .collect();
    let pick = if ties.len() == 1 { ties[0] } else { ties[rng.random_range(0..ties.len())] };
    let joined = if pick == 0 { Slot::Memory } else { slots[pick - 1] };
    let joined_memory = joined == Slot::Memory;

    let mut new_mem = mem + usize::from(joined_memory);
    for sl in slots {
        let post = match *sl {
            Slot::Memory => mem + usize::from(joined_memory),
            Slot::Other { rank, len } => len + usize::from(matches!(joined, Slot::Other { rank: r, .. } if r == rank)),
        };
        new_mem = new_mem.min(post);
    }
    s.move_queue(shortest, shortest + 1);
    s.mem_len = new_mem;
    ArrivalEffect { joined_len: shortest, joined_memory }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DepartureEffect {
    pub len_before: usize,
    pub from_memory: bool,
}

/// Removes one customer from a uniformly chosen busy queue.
pub fn apply_departure<R: Rng + ?Sized>(s: &mut MicroState, rng: &mut R) -> Result<DepartureEffect> {
    let busy = s.busy();
    if busy == 0 {
        return Err(Error::NoBusyQueue);
    }
    let mut r = rng.random_range(0..busy);
    if s.mem_len >= 1 {
        if r == 0 {
            let len = s.mem_len;
            s.move_queue(len, len - 1);
            s.mem_len -= 1;
            return Ok(DepartureEffect { len_before: len, from_memory: true });
        }
        r -= 1;
    }
    let mut seen = 0;
    for len in 1..s.hist.len() {
        seen += s.hist[len] - usize::from(len == s.mem_len);
        if r < seen {
            s.move_queue(len, len - 1);
            return Ok(DepartureEffect { len_before: len, from_memory: false });
        }
    }
    unreachable!("busy count inconsistent with histogram")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum EventKind {
    Arrival,
    Departure,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EventRecord {
    pub time: f64,
    pub kind: EventKind,
    /// Pre-event length of the queue that gained or lost a customer.
    pub queue_len: usize,
    pub mem_len_after: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridSample {
    pub t: f64,
    /// `z_1, ..., z_{d_record}`.
    pub z: Vec<f64>,
    pub mem_len: usize,
    /// `A_1(t), ..., A_{d_record}(t)`.
    pub arrivals: Vec<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SimOptions {
    pub d_record: usize,
    pub grid_per_unit: f64,
    pub keep_events: bool,
}

impl Default for SimOptions {
    fn default() -> Self {
        Self { d_record: 4, grid_per_unit: 200.0, keep_events: true }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Trajectory {
    pub params: ModelParams,
    pub seed: u64,
    pub horizon: f64,
    pub initial: MicroState,
    pub events: Vec<EventRecord>,
    pub grid: Vec<GridSample>,
    pub final_state: MicroState,
    pub n_arrivals: u64,
    pub n_departures: u64,
    /// `A_k(horizon)` for `k = 1..=d_record`.
    pub arrivals_at_least: Vec<u64>,
}

fn grid_sample(t: f64, s: &MicroState, d: usize, a: &[u64]) -> GridSample {
    let tail = s.tail();
    GridSample { t, z: (1..=d).map(|k| tail.z(k)).collect(), mem_len: s.mem_len, arrivals: a.to_vec() }
}

/// Simulates the chain from `init` over `[0, horizon]`.
pub fn simulate(
    params: ModelParams,
    init: &MicroState,
    horizon: f64,
    opts: &SimOptions,
    seed: u64,
) -> Result<Trajectory> {
    if init.queues != params.queues {
        return Err(Error::InvalidParams("initial state has the wrong number of queues".into()));
    }
    init.validate().map_err(Error::InvalidState)?;
    if !(horizon >= 0.0) {
        return Err(Error::InvalidParams("horizon must be >= 0".into()));
    }
    let mut rng = rng_from_seed(seed);
    let mut s = init.clone();
    let d = opts.d_record;
    let mut a = vec![0u64; d];
    let arrival_rate = params.arrival_rate();
    let n_grid = if opts.grid_per_unit > 0.0 { (horizon * opts.grid_per_unit).floor() as usize + 1 } else { 0 };
    let grid_t = |j: usize| j as f64 / opts.grid_per_unit;
    let mut next_grid = 0;
    let mut grid = Vec::with_capacity(n_grid);
    let mut events = Vec::new();
    let (mut n_arr, mut n_dep) = (0u64, 0u64);
    let mut t = 0.0;
    loop {
        let total = arrival_rate + s.busy() as f64;
        t += exp_sample(&mut rng, total);
        if t > horizon {
            break;
        }
        while next_grid < n_grid && grid_t(next_grid) < t {
            grid.push(grid_sample(grid_t(next_grid), &s, d, &a));
            next_grid += 1;
        }
        let (kind, queue_len) = if rng.random::<f64>() * total < arrival_rate {
            let slots = draw_arrival_sample(&s, params.n, &mut rng);
            let eff = apply_arrival(&mut s, &slots, &mut rng);
            for c in a.iter_mut().take(eff.joined_len.min(d)) {
                *c += 1;
            }
            n_arr += 1;
            (EventKind::Arrival, eff.joined_len)
        } else {
            let eff = apply_departure(&mut s, &mut rng)?;
            n_dep += 1;
            (EventKind::Departure, eff.len_before)
        };
        if opts.keep_events {
            events.push(EventRecord { time: t, kind, queue_len, mem_len_after: s.mem_len });
        }
    }
    while next_grid < n_grid {
        grid.push(grid_sample(grid_t(next_grid), &s, d, &a));
        next_grid += 1;
    }
    Ok(Trajectory {
        params,
        seed,
        horizon,
        initial: init.clone(),
        events,
        grid,
        final_state: s,
        n_arrivals: n_arr,
        n_departures: n_dep,
        arrivals_at_least: a,
    })
}

impl Trajectory {
    /// Calls `f(start, end, state)` for each maximal interval on which the
    /// state is constant. Requires the event list.
    pub fn visit_intervals(&self, mut f: impl FnMut(f64, f64, &MicroState)) {
        let mut s = self.initial.clone();
        let mut t_prev = 0.0;
        for ev in &self.events {
            f(t_prev, ev.time, &s);
            let to = match ev.kind {
                EventKind::Arrival => ev.queue_len + 1,
                EventKind::Departure => ev.queue_len - 1,
            };
            s.move_queue(ev.queue_len, to);
            s.mem_len = ev.mem_len_after;
            t_prev = ev.time;
        }
        f(t_prev, self.horizon, &s);
    }

    /// Grid samples as CSV: `t, z_1..z_D, y, A_1..A_D`.
    pub fn to_csv(&self) -> CsvTable {
        let d = self.grid.first().map_or(0, |g| g.z.len());
        let header = std::iter::once("t".to_string())
            .chain((1..=d).map(|k| format!("z_{k}")))
            .chain(std::iter::once("y".to_string()))
            .chain((1..=d).map(|k| format!("A_{k}")));
        let mut t = CsvTable::new(header);
        for g in &self.grid {
            let row = std::iter::once(fmt_real(g.t))
                .chain(g.z.iter().map(|&v| fmt_real(v)))
                .chain(std::iter::once(g.mem_len.to_string()))
                .chain(g.arrivals.iter().map(|a| a.to_string()))
                .collect();
            t.push(row);
        }
        t
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        self.to_csv().save(path)
    }
}

/// A mark of the Poisson process of rate `N(1+lambda)` driving the coupled
/// construction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Mark {
    /// Potential departure from queue `J` (0-based; 0 is the memory queue).
    Departure(usize),
    /// Arrival with sampled indices `J_1..J_n`.
    Arrival(Vec<usize>),
}

pub fn draw_mark<R: Rng + ?Sized>(queues: usize, n: usize, lambda: f64, rng: &mut R) -> Mark {
    if rng.random::<f64>() * (1.0 + lambda) < 1.0 {
        Mark::Departure(rng.random_range(0..queues))
    } else {
        Mark::Arrival((0..n).map(|_| rng.random_range(0..queues)).collect())
    }
}

impl SortedLengths {
    /// Applies one mark of the shared-randomness construction.
    pub fn apply_mark(&mut self, mark: &Mark) {
        match mark {
            Mark::Departure(j) => {
                self.y[*j] = self.y[*j].saturating_sub(1);
                self.y[1..].sort_unstable();
            }
            Mark::Arrival(picks) => {
                let mut selected = vec![false; self.y.len()];
                selected[0] = true;
                for &j in picks {
                    selected[j] = true;
                }
                let mut w: Vec<usize> = self.y.iter().zip(&selected).filter(|(_, &s)| s).map(|(&v, _)| v).collect();
                w.sort_unstable();
                w[0] += 1;
                w.sort_unstable();
                let mut rest: Vec<usize> = w[1..].to_vec();
                rest.extend(self.y.iter().zip(&selected).filter(|(_, &s)| !s).map(|(&v, _)| v));
                rest.sort_unstable();
                self.y[0] = w[0];
                self.y[1..].copy_from_slice(&rest);
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct CoupledRun {
    pub events: u64,
    pub lo: SortedLengths,
    pub hi: SortedLengths,
    /// `(t, lo, hi)` after each event, when recording was requested.
    pub path: Vec<(f64, SortedLengths, SortedLengths)>,
}

/// Runs two copies of the chain from `lo <= hi` on the same marks and checks
/// `lo_i <= hi_i` after every event.
pub fn coupled_simulate(
    lo: &SortedLengths,
    hi: &SortedLengths,
    lambda: f64,
    n: usize,
    horizon: f64,
    seed: u64,
    record: bool,
) -> Result<CoupledRun> {
    if !lo.le(hi) {
        return Err(Error::InvalidParams("coupled runs need lo <= hi componentwise".into()));
    }
    let queues = lo.queues();
    let mut rng = rng_from_seed(seed);
    let (mut a, mut b) = (lo.clone(), hi.clone());
    let rate = queues as f64 * (1.0 + lambda);
    let mut t = 0.0;
    let mut events = 0u64;
    let mut path = Vec::new();
    loop {
        t += exp_sample(&mut rng, rate);
        if t > horizon {
            break;
        }
        let mark = draw_mark(queues, n, lambda, &mut rng);
        a.apply_mark(&mark);
        b.apply_mark(&mark);
        events += 1;
        if let Some(i) = (0..queues).find(|&i| a.y[i] > b.y[i]) {
            return Err(Error::OrderingViolation { event: events, time: t, component: i, lo: a.y[i], hi: b.y[i] });
        }
        if record {
            path.push((t, a.clone(), b.clone()));
        }
    }
    Ok(CoupledRun { events, lo: a, hi: b, path })
}

/// Enumeration budget of [`exact_fast_rates`].
pub const ENUMERATION_LIMIT: f64 = 1e7;

/// Exact jump rates `gamma(xi, y')` of the memory length at state `s`,
/// `y' != y`, by enumerating all `N^n` identity tuples of the sample.
pub fn exact_fast_rates(s: &MicroState, params: ModelParams) -> Result<BTreeMap<usize, f64>> {
    let queues = s.queues;
    let cost = (queues as f64).powi(params.n as i32);
    if cost > ENUMERATION_LIMIT {
        return Err(Error::GuardExceeded { cost, limit: ENUMERATION_LIMIT });
    }
    s.validate().map_err(Error::InvalidState)?;
    // identity 0 is the memory queue, identity i >= 1 the non-memory queue of rank i-1
    let lens: Vec<usize> = std::iter::once(s.mem_len).chain((0..queues - 1).map(|r| other_len(s, r))).collect();
    let weight = params.arrival_rate() / cost;
    let mut rates: BTreeMap<usize, f64> = BTreeMap::new();
    let mut picks = vec![0usize; params.n];
    let mut selected = Vec::with_capacity(params.n + 1);
    loop {
        selected.clear();
        selected.push(0);
        for &p in &picks {
            if !selected.contains(&p) {
                selected.push(p);
            }
        }
        let shortest = selected.iter().map(|&i| lens[i]).min().unwrap();
        let at_min = selected.iter().filter(|&&i| lens[i] == shortest).count();
        let new_mem = if at_min >= 2 {
            shortest
        } else {
            let second = selected.iter().map(|&i| lens[i]).filter(|&l| l > shortest).min();
            second.map_or(shortest + 1, |v| v.min(shortest + 1))
        };
        if new_mem != s.mem_len {
            *rates.entry(new_mem).or_default() += weight;
        }
        // odometer over [0, N)^n
        let mut i = 0;
        loop {
            if i == picks.len() {
                if s.mem_len >= 1 {
                    *rates.entry(s.mem_len - 1).or_default() += 1.0;
                }
                return Ok(rates);
            }
            picks[i] += 1;
            if picks[i] < queues {
                break;
            }
            picks[i] = 0;
            i += 1;
        }
    }
}

/// `sum_{y' != y} |gamma(xi, y') - g(x, y, y')|` together with the bound
/// `1 + lambda n + N lambda n z_{d+1}` it is meant to respect.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RateDiscrepancy {
    pub total: f64,
    pub bound: f64,
}

/// Compares the exact memory-length rates at `s` with the fast-chain rates at
/// the depth-`d` truncation of its tails.
pub fn rate_discrepancy(s: &MicroState, params: ModelParams, d: usize) -> Result<RateDiscrepancy> {
    let exact = exact_fast_rates(s, params)?;
    let tail = s.tail();
    let y = s.mem_len;
    let g = generator(&tail.prefix(d), params).rates_from(y);
    let top = exact.keys().next_back().copied().unwrap_or(0).max(g.len() - 1);
    let total = (0..=top)
        .filter(|&y2| y2 != y)
        .map(|y2| (exact.get(&y2).copied().unwrap_or(0.0) - g.get(y2).copied().unwrap_or(0.0)).abs())
        .sum();
    let ln = params.lambda * params.n as f64;
    Ok(RateDiscrepancy { total, bound: 1.0 + ln + params.queues as f64 * ln * tail.z(d + 1) })
}

/// Whether `x` lies in `U = {x_1 <= (lambda + 1)/2, x_k <= 2 a_k}`.
pub fn in_region_u(x: &FluidVector, lambda: f64, a: &FluidVector) -> bool {
    x.get(1) <= (lambda + 1.0) / 2.0 && (1..=x.depth()).all(|k| x.get(k) <= 2.0 * a.get(k))
}

/// Convenience: a fresh RNG for callers that want to drive the single-event
/// functions directly.
pub fn event_rng(seed: u64) -> SimRng {
    rng_from_seed(seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;

    fn mp(lambda: f64, n: usize, queues: usize) -> ModelParams {
        ModelParams::new(lambda, n, queues).unwrap()
    }

    #[test]
    fn single_queue_samples_are_memory() {
        let s = MicroState { queues: 1, hist: vec![0, 0, 1], mem_len: 2 };
        let mut rng = rng_from_seed(3);
        for _ in 0..50 {
            assert!(draw_arrival_sample(&s, 3, &mut rng).iter().all(|&sl| sl == Slot::Memory));
        }
    }

    #[test]
    fn two_queue_sample_law() {
        let s = MicroState { queues: 2, hist: vec![1, 0, 0, 1], mem_len: 3 };
        let mut rng = rng_from_seed(5);
        let reps = 100_000;
        let mut mem = 0;
        for _ in 0..reps {
            match draw_arrival_sample(&s, 1, &mut rng)[0] {
                Slot::Memory => mem += 1,
                Slot::Other { len, .. } => assert_eq!(len, 0),
            }
        }
        let f = mem as f64 / reps as f64;
        assert!((f - 0.5).abs() < 3.0 * (0.25 / reps as f64).sqrt());
    }

    #[test]
    fn four_queue_sample_law() {
        let s = MicroState { queues: 4, hist: vec![0, 4], mem_len: 1 };
        let mut rng = rng_from_seed(6);
        let reps = 100_000;
        let mut mem = 0;
        for _ in 0..reps {
            match draw_arrival_sample(&s, 1, &mut rng)[0] {
                Slot::Memory => mem += 1,
                Slot::Other { len, .. } => assert_eq!(len, 1),
            }
        }
        let f = mem as f64 / reps as f64;
        assert!((f - 0.25).abs() < 3.0 * (0.1875 / reps as f64).sqrt());
    }

    #[test]
    fn arrival_to_strictly_shortest_memory() {
        let mut s = MicroState { queues: 4, hist: vec![1, 0, 3], mem_len: 0 };
        let slots = vec![Slot::Other { rank: 0, len: 2 }, Slot::Other { rank: 2, len: 2 }];
        let eff = apply_arrival(&mut s, &slots, &mut rng_from_seed(1));
        assert!(eff.joined_memory);
        assert_eq!(s.mem_len, 1);
        assert_eq!(s.hist, vec![0, 1, 3]);
    }

    #[test]
    fn arrival_switches_memory_third_branch() {
        // memory 9, sample lengths 3 and 5: the 3 becomes 4, new memory length min(9,4,5)
        let mut s = MicroState { queues: 4, hist: vec![0, 0, 0, 1, 0, 1, 0, 0, 0, 2], mem_len: 9 };
        let slots = vec![Slot::Other { rank: 0, len: 3 }, Slot::Other { rank: 1, len: 5 }];
        let eff = apply_arrival(&mut s, &slots, &mut rng_from_seed(1));
        assert_eq!(eff.joined_len, 3);
        assert_eq!(s.mem_len, 4);
        assert_eq!(s.count(3), 0);
        assert_eq!(s.count(4), 1);
    }

    #[test]
    fn tie_with_memory_both_branches() {
        let base = MicroState { queues: 3, hist: vec![1, 0, 2], mem_len: 2 };
        let slots = vec![Slot::Other { rank: 1, len: 2 }];
        let mut joined = [0; 2];
        for seed in 0..200 {
            let mut s = base.clone();
            let eff = apply_arrival(&mut s, &slots, &mut rng_from_seed(seed));
            joined[usize::from(eff.joined_memory)] += 1;
            assert_eq!(s.count(2), 1);
            assert_eq!(s.count(3), 1);
            assert!(s.mem_len == 2 || s.mem_len == 3);
        }
        assert!(joined[0] > 0 && joined[1] > 0);
    }

    #[test]
    fn repeated_draw_of_one_queue_shares_its_fate() {
        // both slots name the same length-1 queue; it becomes 2 and so does the new memory
        let mut s = MicroState { queues: 3, hist: vec![0, 1, 0, 0, 0, 1, 1], mem_len: 6 };
        let slots = vec![Slot::Other { rank: 0, len: 1 }, Slot::Other { rank: 0, len: 1 }];
        apply_arrival(&mut s, &slots, &mut rng_from_seed(1));
        assert_eq!(s.mem_len, 2);
    }

    #[test]
    fn departure_cases() {
        let mut s = MicroState { queues: 5, hist: vec![4, 1], mem_len: 1 };
        let eff = apply_departure(&mut s, &mut rng_from_seed(0)).unwrap();
        assert!(eff.from_memory);
        assert_eq!(s.mem_len, 0);
        assert_eq!(s.hist, vec![5]);

        let mut e = MicroState::empty(3);
        assert!(matches!(apply_departure(&mut e, &mut rng_from_seed(0)), Err(Error::NoBusyQueue)));

        let base = MicroState { queues: 4, hist: vec![0, 0, 4], mem_len: 2 };
        let reps = 40_000;
        let mut mem = 0;
        let mut rng = rng_from_seed(9);
        for _ in 0..reps {
            let mut s = base.clone();
            let eff = apply_departure(&mut s, &mut rng).unwrap();
            assert_eq!(eff.len_before, 2);
            assert_eq!(s.count(1), 1);
            if eff.from_memory {
                assert_eq!(s.mem_len, 1);
                mem += 1;
            } else {
                assert_eq!(s.mem_len, 2);
            }
        }
        let f = mem as f64 / reps as f64;
        assert!((f - 0.25).abs() < 3.0 * (0.1875 / reps as f64).sqrt());
    }

    #[test]
    fn zero_horizon_has_no_events() {
        let p = mp(0.5, 2, 10);
        let tr = simulate(p, &MicroState::empty(10), 0.0, &SimOptions::default(), 1).unwrap();
        assert!(tr.events.is_empty());
        assert_eq!(tr.grid.len(), 1);
        assert!(tr.grid[0].z.iter().all(|&z| z == 0.0));
    }

    #[test]
    fn conservation_and_memory_presence() {
        let p = mp(0.8, 2, 30);
        let init = MicroState::one_in_memory(30);
        let tr = simulate(p, &init, 20.0, &SimOptions::default(), 11).unwrap();
        assert_eq!(tr.final_state.total_customers() as i64, 1 + tr.n_arrivals as i64 - tr.n_departures as i64);
        tr.visit_intervals(|_, _, s| {
            assert!(s.validate().is_ok());
        });
        assert_eq!(tr.final_state.validate(), Ok(()));
    }

    #[test]
    fn mm1_busy_fraction() {
        // N = 1, n = 1: a single M/M/1 queue, busy probability lambda
        let p = mp(0.5, 1, 1);
        let horizon = 40_000.0;
        let tr =
            simulate(p, &MicroState::empty(1), horizon, &SimOptions { grid_per_unit: 0.0, ..Default::default() }, 2)
                .unwrap();
        let mut busy = 0.0;
        tr.visit_intervals(|a, b, s| busy += (b - a) * s.tail().z(1));
        let frac = busy / horizon;
        // relaxation time of M/M/1 at load 1/2 is O(10); 5 sigma with a generous variance proxy
        assert!((frac - 0.5).abs() < 0.02, "busy fraction {frac}");
    }

    #[test]
    fn simulate_is_deterministic() {
        let p = mp(0.7, 2, 50);
        let init = MicroState::one_in_memory(50);
        let a = simulate(p, &init, 3.0, &SimOptions::default(), 42).unwrap();
        let b = simulate(p, &init, 3.0, &SimOptions::default(), 42).unwrap();
        assert_eq!(a.events, b.events);
        assert_eq!(a.to_csv().render(), b.to_csv().render());
    }

    #[test]
    fn arrival_counters_shape() {
        let p = mp(0.9, 1, 20);
        let tr =
            simulate(p, &MicroState::empty(20), 10.0, &SimOptions { d_record: 4, ..Default::default() }, 8).unwrap();
        for w in tr.grid.windows(2) {
            for k in 0..4 {
                assert!(w[1].arrivals[k] >= w[0].arrivals[k]);
            }
        }
        for g in &tr.grid {
            for k in 1..4 {
                assert!(g.arrivals[k] <= g.arrivals[k - 1]);
                // N Z^{k+1} <= A_k from an empty start
                assert!((g.z[k] * 20.0).round() as u64 <= g.arrivals[k - 1]);
            }
        }
    }

    #[test]
    fn identical_coupled_states_stay_identical() {
        let y = SortedLengths::new(vec![2, 0, 1, 1, 3]).unwrap();
        let run = coupled_simulate(&y, &y, 0.6, 2, 5.0, 4, true).unwrap();
        assert!(run.path.iter().all(|(_, a, b)| a == b));
    }

    #[test]
    fn one_step_departure_keeps_order() {
        let mut a = SortedLengths::new(vec![0, 0, 2]).unwrap();
        let mut b = SortedLengths::new(vec![1, 0, 2]).unwrap();
        a.apply_mark(&Mark::Departure(0));
        b.apply_mark(&Mark::Departure(0));
        assert_eq!(a.y[0], 0);
        assert_eq!(b.y[0], 0);
        assert!(a.le(&b));
    }

    #[test]
    fn exact_rates_single_queue() {
        let s = MicroState { queues: 1, hist: vec![0, 1], mem_len: 1 };
        let r = exact_fast_rates(&s, mp(0.4, 1, 1)).unwrap();
        assert_eq!(r.len(), 2);
        assert!((r[&2] - 0.4).abs() < 1e-15);
        assert!((r[&0] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn exact_rates_empty_system_has_no_departure() {
        let s = MicroState::empty(4);
        let p = mp(0.5, 2, 4);
        let r = exact_fast_rates(&s, p).unwrap();
        // every arrival finds a length-0 tie or joins memory; y jumps to 1 only when
        // the memory is the unique selected queue
        assert!(!r.contains_key(&0));
        let total: f64 = r.values().sum();
        assert!(total <= p.arrival_rate() + 1e-12);
        // memory unique shortest selected queue <=> every pick is the memory
        assert!((r[&1] - p.arrival_rate() / 16.0).abs() < 1e-12);
    }

    #[test]
    fn exact_rates_guard() {
        let s = MicroState::empty(4000);
        assert!(matches!(exact_fast_rates(&s, mp(0.5, 2, 4000)), Err(Error::GuardExceeded { .. })));
    }

    #[test]
    fn rate_discrepancy_at_a_hand_state() {
        // hist [7, 3], memory empty, n = 1: the exact up-rate counts the
        // memory queue itself as a possible draw
        let s = MicroState { queues: 10, hist: vec![7, 3], mem_len: 0 };
        let params = ModelParams::new(0.5, 1, 10).unwrap();
        let r = rate_discrepancy(&s, params, 2).unwrap();
        assert!((r.total - 0.5).abs() < 1e-12);
        assert!((r.bound - 1.5).abs() < 1e-12);
    }
}
