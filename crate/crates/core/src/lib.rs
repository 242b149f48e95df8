//! Monte Carlo pricing and Leland-style hedging of arithmetic-average Asian
//! options under driftless Black–Scholes dynamics.
//!
//! * [`stochastic`] paths, the running integral and the payoff.
//! * [`density`] the density of the exponential functional via Brownian bridges.
//! * [`pricing`] the price function `G(t, x, y)` and its `y`-derivatives.
//! * [`hedging`] discrete hedging with proportional transaction costs.

pub mod density;
pub mod error;
pub mod exec;
pub mod hedging;
pub mod pricing;
pub mod rng;
pub mod stats;
pub mod stochastic;

pub use error::{Error, Result};
pub use exec::Exec;
pub use rng::RngSeed;
pub use stats::Estimate;
pub use stochastic::{
    abs_increment_moment, asian_payoff, gbm_path, make_grid, sample_wiener, AssetPath,
    MarketParams, Quadrature, TimeGrid, WienerPath,
};
