//! Discrete Leland hedging with proportional transaction costs.
//!
//! Holdings are `gamma_j = G'_y(t_{j-1}, xi_{t_{j-1}}, S_{t_{j-1}})` under the
//! modified volatility, all evaluated on one frozen sample pool so that
//! Monte Carlo noise does not show up as trading volume.

mod schedule;
mod strategy;
mod study;

pub use schedule::{modified_volatility, CostSchedule, ModifiedVol};
pub use strategy::{
    build_leland_strategy, exact_hedge_no_cost, simulate_hedge, strategy_from_pool, DeltaPool,
    HedgeConfig, HedgeOutcome, HedgeStrategy, LedgerRow, PoolSlice,
};
pub use study::{
    compensator_check, convergence_study, hedge_batch, leland_pool, lemma3_statistic,
    lemma3_study, study_paths, BatchResult, Compensator, ConvergenceReport, ConvergenceRow,
    PathRecord,
};
