//! Exact simulation and fluid-limit toolkit for the supermarket model with
//! memory: `N` single-server queues, Poisson arrivals of rate `N lambda`, and
//! each arrival joining the shortest of `n` sampled queues and a remembered
//! "memory" queue.
//!
//! * [`model`]: state types (histogram state, tail proportions, fluid vectors).
//! * [`sim`]: event-driven simulation, the monotone coupling, and exact
//!   enumeration of the memory-length jump rates.
//! * [`fluid`]: limit ODE, fixed point, cutoff depth.
//! * [`fast`]: the idealized fast chain for the memory length, its
//!   equilibrium, coupling times and correctors.
//! * [`bounds`]: regularity constants, hypothesis checks and explicit
//!   error-probability bounds, plus an empirical check of the exponential
//!   martingale inequality.
//! * [`cli`]: the command-line front end behind the `supermarket` binary.
//! * [`config`] and [`harness`]: experiment configuration, replica fan-out,
//!   convergence and tail-event statistics, and file output.

// `!(x > 0.0)` deliberately rejects NaN along with non-positive values
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod bounds;
pub mod cli;
pub mod config;
pub mod error;
pub mod fast;
pub mod fluid;
pub mod harness;
pub mod io;
pub mod model;
pub mod rng;
pub mod sim;

pub use error::{Error, Result};
pub use model::{FluidVector, LimitParams, MicroState, ModelParams, SortedLengths, TailVector};
