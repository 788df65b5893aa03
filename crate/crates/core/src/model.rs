//! Domain types shared by the simulator and the fluid-limit toolkit.
//!
//! The exact chain is stored as a histogram of queue lengths plus the length
//! of the memory queue. Non-memory queues are exchangeable, so this is all the
//! transition law needs.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Arrival intensity and sample size: the parameters of the limit dynamics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LimitParams {
    pub lambda: f64,
    pub n: usize,
}

impl LimitParams {
    pub fn new(lambda: f64, n: usize) -> Result<Self> {
        if !(lambda > 0.0 && lambda < 1.0) {
            return Err(Error::InvalidParams(format!("lambda must be in (0,1), got {lambda}")));
        }
        if n == 0 {
            return Err(Error::InvalidParams("sample size n must be >= 1".into()));
        }
        Ok(Self { lambda, n })
    }

    pub fn with_queues(self, queues: usize) -> Result<ModelParams> {
        ModelParams::new(self.lambda, self.n, queues)
    }
}

/// `(lambda, n, N)`: per-queue arrival intensity, sample size, number of queues.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub lambda: f64,
    pub n: usize,
    pub queues: usize,
}

impl ModelParams {
    pub fn new(lambda: f64, n: usize, queues: usize) -> Result<Self> {
        LimitParams::new(lambda, n)?;
        if queues == 0 {
            return Err(Error::InvalidParams("number of queues N must be >= 1".into()));
        }
        Ok(Self { lambda, n, queues })
    }

    pub fn limit(&self) -> LimitParams {
        LimitParams { lambda: self.lambda, n: self.n }
    }

    /// Total arrival rate `N lambda`, also the driving rate of the fast chain.
    pub fn arrival_rate(&self) -> f64 {
        self.queues as f64 * self.lambda
    }
}

/// One invariant broken by a [`MicroState`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Violation {
    /// Histogram counts do not add up to the number of queues.
    CountMismatch {
        expected: usize,
        found: usize,
    },
    /// No queue has the recorded memory length.
    MemoryAbsent {
        mem_len: usize,
    },
    NoQueues,
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Violation::CountMismatch { expected, found } => {
                write!(f, "count != N (expected {expected}, found {found})")
            }
            Violation::MemoryAbsent { mem_len } => {
                write!(f, "memory queue absent (no queue of length {mem_len})")
            }
            Violation::NoQueues => write!(f, "N must be >= 1"),
        }
    }
}

/// Exact state of the chain: `hist[l]` queues have length exactly `l`, and
/// the memory queue has length `mem_len`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MicroState {
    pub queues: usize,
    pub hist: Vec<usize>,
    pub mem_len: usize,
}

impl MicroState {
    /// All queues empty; the memory queue is one of them.
    pub fn empty(queues: usize) -> Self {
        Self { queues, hist: vec![queues], mem_len: 0 }
    }

    /// All queues empty except the memory queue, which holds one customer.
    pub fn one_in_memory(queues: usize) -> Self {
        Self { queues, hist: vec![queues - 1, 1], mem_len: 1 }
    }

    pub fn count(&self, len: usize) -> usize {
        self.hist.get(len).copied().unwrap_or(0)
    }

    /// Largest nonempty length (0 when every queue is empty).
    pub fn max_len(&self) -> usize {
        self.hist.iter().rposition(|&c| c > 0).unwrap_or(0)
    }

    pub fn busy(&self) -> usize {
        self.queues - self.count(0)
    }

    pub fn total_customers(&self) -> usize {
        self.hist.iter().enumerate().map(|(l, &c)| l * c).sum()
    }

    /// Number of queues with length at least `k`.
    pub fn at_least(&self, k: usize) -> usize {
        self.hist.iter().skip(k).sum()
    }

    pub fn validate(&self) -> std::result::Result<(), Vec<Violation>> {
        let mut out = Vec::new();
        if self.queues == 0 {
            out.push(Violation::NoQueues);
        }
        let found: usize = self.hist.iter().sum();
        if found != self.queues {
            out.push(Violation::CountMismatch { expected: self.queues, found });
        }
        if self.count(self.mem_len) == 0 {
            out.push(Violation::MemoryAbsent { mem_len: self.mem_len });
        }
        if out.is_empty() {
            Ok(())
        } else {
            Err(out)
        }
    }

    pub fn tail(&self) -> TailVector {
        let max = self.max_len();
        let mut at_least = vec![0; max];
        let mut acc = 0;
        for k in (1..=max).rev() {
            acc += self.count(k);
            at_least[k - 1] = acc;
        }
        TailVector { queues: self.queues, at_least }
    }

    pub(crate) fn move_queue(&mut self, from: usize, to: usize) {
        debug_assert!(self.count(from) > 0);
        self.hist[from] -= 1;
        if to >= self.hist.len() {
            self.hist.resize(to + 1, 0);
        }
        self.hist[to] += 1;
        while self.hist.len() > 1 && *self.hist.last().unwrap() == 0 {
            self.hist.pop();
        }
    }
}

/// Tail proportions `z_k = #{queues with length >= k} / N`, kept as integer
/// counts so that `N z_k` is exact. Entries past the stored range read as 0.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TailVector {
    pub queues: usize,
    /// `at_least[k-1]` = number of queues with length >= k.
    pub at_least: Vec<usize>,
}

impl TailVector {
    /// `z_k`; `z_0 = 1`.
    pub fn z(&self, k: usize) -> f64 {
        if k == 0 {
            return 1.0;
        }
        self.count(k) as f64 / self.queues as f64
    }

    pub fn count(&self, k: usize) -> usize {
        if k == 0 {
            self.queues
        } else {
            self.at_least.get(k - 1).copied().unwrap_or(0)
        }
    }

    pub fn len(&self) -> usize {
        self.at_least.len()
    }

    pub fn is_empty(&self) -> bool {
        self.at_least.is_empty()
    }

    /// `(z_1, ..., z_d)` as a fluid vector.
    pub fn prefix(&self, d: usize) -> FluidVector {
        FluidVector { x: (1..=d).map(|k| self.z(k)).collect() }
    }
}

/// A point `(x_1, ..., x_d)` of the truncated simplex `D(d)`, with the
/// conventions `x_0 = 1` and `x_k = 0` for `k > d`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FluidVector {
    pub x: Vec<f64>,
}

impl FluidVector {
    pub fn new(x: Vec<f64>) -> Result<Self> {
        let v = Self { x };
        if !v.in_domain(0.0) {
            return Err(Error::InvalidParams(format!(
                "fluid vector must satisfy 0 <= x_d <= ... <= x_1 <= 1, got {:?}",
                v.x
            )));
        }
        Ok(v)
    }

    pub fn zeros(d: usize) -> Self {
        Self { x: vec![0.0; d] }
    }

    pub fn depth(&self) -> usize {
        self.x.len()
    }

    pub fn get(&self, k: usize) -> f64 {
        match k {
            0 => 1.0,
            k if k <= self.x.len() => self.x[k - 1],
            _ => 0.0,
        }
    }

    pub fn in_domain(&self, tol: f64) -> bool {
        let mut prev = 1.0;
        for &v in &self.x {
            if !(v >= -tol && v <= prev + tol) {
                return false;
            }
            prev = v;
        }
        true
    }

    /// Clamp to `[0,1]` and restore monotonicity; returns the largest change.
    pub fn project(&mut self) -> f64 {
        let mut moved: f64 = 0.0;
        let mut prev = 1.0_f64;
        for v in &mut self.x {
            let p = v.clamp(0.0, prev);
            moved = moved.max((p - *v).abs());
            *v = p;
            prev = p;
        }
        moved
    }

    /// Componentwise `self <= other + tol`.
    pub fn le(&self, other: &FluidVector, tol: f64) -> bool {
        let d = self.depth().max(other.depth());
        (1..=d).all(|k| self.get(k) <= other.get(k) + tol)
    }

    /// `m(x) = sum_k x_k`.
    pub fn mass(&self) -> f64 {
        self.x.iter().sum()
    }
}

/// Identity-resolved state: `y[0]` is the memory queue, `y[1..]` the other
/// queues in non-decreasing order.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SortedLengths {
    pub y: Vec<usize>,
}

impl SortedLengths {
    pub fn new(y: Vec<usize>) -> Result<Self> {
        if y.is_empty() {
            return Err(Error::InvalidParams("need at least one queue".into()));
        }
        if y[1..].windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::InvalidParams("non-memory lengths must be non-decreasing".into()));
        }
        Ok(Self { y })
    }

    /// Canonical identity-resolved version of a histogram state.
    pub fn from_micro(s: &MicroState) -> Self {
        let mut y = Vec::with_capacity(s.queues);
        y.push(s.mem_len);
        let mut skipped = false;
        for (len, &c) in s.hist.iter().enumerate() {
            let c = if !skipped && len == s.mem_len {
                skipped = true;
                c - 1
            } else {
                c
            };
            y.extend(std::iter::repeat_n(len, c));
        }
        Self { y }
    }

    pub fn queues(&self) -> usize {
        self.y.len()
    }

    pub fn memory(&self) -> usize {
        self.y[0]
    }

    pub fn to_micro(&self) -> MicroState {
        let max = self.y.iter().copied().max().unwrap_or(0);
        let mut hist = vec![0; max + 1];
        for &l in &self.y {
            hist[l] += 1;
        }
        MicroState { queues: self.y.len(), hist, mem_len: self.y[0] }
    }

    /// Componentwise order `y_i <= y'_i` for all `i`.
    pub fn le(&self, other: &SortedLengths) -> bool {
        self.y.len() == other.y.len() && self.y.iter().zip(&other.y).all(|(a, b)| a <= b)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tail_counts_by_hand() {
        let s = MicroState { queues: 3, hist: vec![1, 0, 2], mem_len: 2 };
        let z = s.tail();
        assert_eq!(z.at_least, vec![2, 2]);
        assert!((z.z(1) - 2.0 / 3.0).abs() < 1e-15);
        assert!((z.z(2) - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(z.z(3), 0.0);
    }

    #[test]
    fn tail_of_empty_system_is_empty() {
        let z = MicroState::empty(5).tail();
        assert!(z.is_empty());
        assert_eq!(z.z(1), 0.0);
        assert_eq!(z.z(0), 1.0);
    }

    #[test]
    fn tail_all_length_one() {
        let s = MicroState { queues: 2, hist: vec![0, 2], mem_len: 1 };
        assert_eq!(s.tail().at_least, vec![2]);
        assert_eq!(s.tail().z(1), 1.0);
    }

    #[test]
    fn validate_reports_each_violation() {
        assert!(MicroState::one_in_memory(4).validate().is_ok());
        let bad = MicroState { queues: 4, hist: vec![3], mem_len: 0 };
        assert_eq!(bad.validate().unwrap_err(), vec![Violation::CountMismatch { expected: 4, found: 3 }]);
        let bad = MicroState { queues: 2, hist: vec![2], mem_len: 3 };
        assert_eq!(bad.validate().unwrap_err(), vec![Violation::MemoryAbsent { mem_len: 3 }]);
        let bad = MicroState { queues: 3, hist: vec![2], mem_len: 3 };
        assert_eq!(bad.validate().unwrap_err().len(), 2);
    }

    #[test]
    fn params_validation() {
        assert!(ModelParams::new(1.2, 1, 10).is_err());
        assert!(ModelParams::new(0.5, 0, 10).is_err());
        assert!(ModelParams::new(0.5, 1, 0).is_err());
        assert!(ModelParams::new(0.5, 2, 10).is_ok());
    }

    #[test]
    fn projection_restores_domain() {
        let mut v = FluidVector { x: vec![1.2, 0.3, 0.5, -0.1] };
        let moved = v.project();
        assert!(v.in_domain(0.0));
        assert_eq!(v.x, vec![1.0, 0.3, 0.3, 0.0]);
        assert!((moved - 0.2).abs() < 1e-12);
    }

    #[test]
    fn sorted_lengths_round_trip() {
        let s = MicroState { queues: 5, hist: vec![2, 1, 2], mem_len: 2 };
        let y = SortedLengths::from_micro(&s);
        assert_eq!(y.y, vec![2, 0, 0, 1, 2]);
        assert_eq!(y.to_micro(), s);
    }
}
