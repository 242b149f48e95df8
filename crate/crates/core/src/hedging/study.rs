use std::f64::consts::PI;
use std::io::Write;

use crate::error::{Error, Result};
use crate::exec::map_indexed;
use crate::rng::RngSeed;
use crate::stats::RunningStats;
use crate::stochastic::{sample_paths, AssetPath, MarketParams, TimeGrid};

use super::schedule::CostSchedule;
use super::strategy::{deltas_along, simulate_hedge, DeltaPool, HedgeConfig, HedgeOutcome, HedgeStrategy};

const PATH_TAG: u64 = 0x7A7B;

/// Both sides of the cost compensation on one path.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Compensator {
    /// `kappa_n J_n`.
    pub lhs: f64,
    /// `(sigma_hat^2 - sigma^2) / 2 * sum_j G''_yy(t_j, xi_j, S_j) S_j^2 dt`.
    pub rhs: f64,
}

impl Compensator {
    pub fn ratio(&self) -> f64 {
        self.lhs / self.rhs
    }
}

/// Leland hedge of many paths sharing one frozen pool.
#[derive(Debug, Clone)]
pub struct BatchResult {
    pub outcomes: Vec<HedgeOutcome>,
    pub compensators: Vec<Compensator>,
}

pub fn hedge_batch(
    paths: &[AssetPath],
    params: &MarketParams,
    schedule: &CostSchedule,
    pool: &DeltaPool,
) -> Result<BatchResult> {
    let n = schedule.n();
    let mv = schedule.modified_volatility(params.sigma());
    let (gammas, curvature) = deltas_along(paths, n, pool, true)?;
    let v0 = pool
        .slice(0.0)?
        .expect("t = 0")
        .value(0.0, params.s0());
    let kappa_n = schedule.kappa_n();
    let mut outcomes = Vec::with_capacity(paths.len());
    let mut compensators = Vec::with_capacity(paths.len());
    for ((path, g), c) in paths.iter().zip(gammas).zip(curvature) {
        let out = simulate_hedge(path, &HedgeStrategy::new(g)?, kappa_n, v0, params.strike())?;
        compensators.push(Compensator {
            lhs: out.cost,
            rhs: mv.half_excess_variance() * c,
        });
        outcomes.push(out);
    }
    Ok(BatchResult {
        outcomes,
        compensators,
    })
}

/// Pool priced under the Leland volatility of `schedule`.
pub fn leland_pool(params: &MarketParams, schedule: &CostSchedule, cfg: &HedgeConfig) -> Result<DeltaPool> {
    let sigma_hat = schedule.modified_volatility(params.sigma()).sigma_hat();
    DeltaPool::new(cfg, sigma_hat, params.strike())
}

/// Paths for a study at `n` revisions, drawn from streams keyed by `n`.
pub fn study_paths(params: &MarketParams, n: usize, count: usize, cfg: &HedgeConfig) -> Result<Vec<AssetPath>> {
    let grid = TimeGrid::new(n * cfg.refine.max(1))?;
    Ok(sample_paths(params, grid, count, path_seed(cfg.seed, n), cfg.exec))
}

fn path_seed(seed: RngSeed, n: usize) -> RngSeed {
    seed.derive(PATH_TAG ^ ((n as u64) << 20))
}

/// Compensator on a single path.
pub fn compensator_check(
    path: &AssetPath,
    params: &MarketParams,
    schedule: &CostSchedule,
    cfg: &HedgeConfig,
) -> Result<Compensator> {
    let pool = leland_pool(params, schedule, cfg)?;
    let r = hedge_batch(std::slice::from_ref(path), params, schedule, &pool)?;
    Ok(r.compensators[0])
}

/// `(n^(-1/2) sum beta_{j-1} |S_j - S_{j-1}|, sqrt(2/pi) sigma sum beta_j S_j dt)`
/// with `beta` indexed by path nodes.
pub fn lemma3_statistic(path: &AssetPath, sigma: f64, beta: &[f64]) -> Result<(f64, f64)> {
    let n = path.grid().steps();
    if beta.len() != n + 1 {
        return Err(Error::GridMismatch(format!(
            "{} weights for a path with {} nodes",
            beta.len(),
            n + 1
        )));
    }
    let s = path.prices();
    let lhs = (1..=n).map(|j| beta[j - 1] * (s[j] - s[j - 1]).abs()).sum::<f64>() / (n as f64).sqrt();
    let rhs = (2.0 / PI).sqrt() * sigma * (0..n).map(|j| beta[j] * s[j]).sum::<f64>() / n as f64;
    Ok((lhs, rhs))
}

/// Lemma statistic with unit weights over `count` fresh paths.
pub fn lemma3_study(
    params: &MarketParams,
    n: usize,
    count: usize,
    seed: RngSeed,
    exec: crate::exec::Exec,
) -> Result<(RunningStats, RunningStats)> {
    let grid = TimeGrid::new(n)?;
    let beta = vec![1.0; n + 1];
    let pairs = map_indexed(exec, count, |p| {
        let path = crate::stochastic::gbm_path(params, &crate::stochastic::sample_wiener(grid, seed.sample(p as u64)));
        lemma3_statistic(&path, params.sigma(), &beta)
    });
    let mut lhs = RunningStats::new();
    let mut rhs = RunningStats::new();
    for pair in pairs {
        let (l, r) = pair?;
        lhs.push(l);
        rhs.push(r);
    }
    Ok((lhs, rhs))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergenceRow {
    pub n: usize,
    pub mean_err: f64,
    pub se: f64,
    pub mean_abs_err: f64,
    pub mean_cost: f64,
    /// Ratio of means of the two compensator sides; NaN when both vanish.
    pub compensator_ratio: f64,
    pub rms_err: f64,
    pub err_var: f64,
    pub paths: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PathRecord {
    pub n: usize,
    pub path: usize,
    pub outcome: HedgeOutcome,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceReport {
    pub rows: Vec<ConvergenceRow>,
    pub paths: usize,
    pub sigma_hat: Vec<f64>,
    /// `(n, message)` for revision counts that failed.
    pub failures: Vec<(usize, String)>,
    pub records: Vec<PathRecord>,
}

impl ConvergenceReport {
    pub fn row(&self, n: usize) -> Option<&ConvergenceRow> {
        self.rows.iter().find(|r| r.n == n)
    }

    /// CSV with columns `n,mean_err,se,mean_abs_err,mean_cost,compensator_ratio`
    /// followed by `rms_err,err_var,paths`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(out);
        wtr.write_record([
            "n",
            "mean_err",
            "se",
            "mean_abs_err",
            "mean_cost",
            "compensator_ratio",
            "rms_err",
            "err_var",
            "paths",
        ])?;
        for r in &self.rows {
            wtr.write_record(&[
                r.n.to_string(),
                r.mean_err.to_string(),
                r.se.to_string(),
                r.mean_abs_err.to_string(),
                r.mean_cost.to_string(),
                r.compensator_ratio.to_string(),
                r.rms_err.to_string(),
                r.err_var.to_string(),
                r.paths.to_string(),
            ])?;
        }
        wtr.flush()?;
        Ok(())
    }

    /// Per-path CSV with columns `seed,v1,f1,err,cost`; `seed` is the path's
    /// stream index within its revision count, preceded by `n`.
    pub fn write_paths_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(out);
        wtr.write_record(["n", "seed", "v1", "f1", "err", "cost"])?;
        for r in &self.records {
            wtr.write_record(&[
                r.n.to_string(),
                r.path.to_string(),
                r.outcome.v1.to_string(),
                r.outcome.payoff.to_string(),
                r.outcome.error.to_string(),
                r.outcome.cost.to_string(),
            ])?;
        }
        wtr.flush()?;
        Ok(())
    }
}

/// Hedging error statistics across revision counts. `base` fixes `kappa0`
/// and `alpha`; its own `n` is ignored.
pub fn convergence_study(
    params: &MarketParams,
    base: &CostSchedule,
    n_list: &[usize],
    paths: usize,
    cfg: &HedgeConfig,
    keep_records: bool,
) -> Result<ConvergenceReport> {
    if paths < 2 {
        return Err(Error::invalid("paths", "need at least two paths"));
    }
    if n_list.is_empty() || n_list.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::invalid("n_list", "must be non-empty and strictly increasing"));
    }
    let pool = cfg.pool()?;
    let mut report = ConvergenceReport {
        rows: Vec::new(),
        paths,
        sigma_hat: Vec::new(),
        failures: Vec::new(),
        records: Vec::new(),
    };
    for &n in n_list {
        let run = || -> Result<(ConvergenceRow, f64, Vec<HedgeOutcome>)> {
            let schedule = base.with_n(n)?;
            let sigma_hat = schedule.modified_volatility(params.sigma()).sigma_hat();
            let dp = DeltaPool::from_pool(pool.clone(), cfg, sigma_hat, params.strike());
            let ps = study_paths(params, n, paths, cfg)?;
            let batch = hedge_batch(&ps, params, &schedule, &dp)?;
            Ok((summarise(n, &batch), sigma_hat, batch.outcomes))
        };
        match run() {
            Ok((row, sigma_hat, outcomes)) => {
                report.rows.push(row);
                report.sigma_hat.push(sigma_hat);
                if keep_records {
                    report.records.extend(outcomes.into_iter().enumerate().map(|(path, outcome)| PathRecord {
                        n,
                        path,
                        outcome,
                    }));
                }
            }
            Err(e) => report.failures.push((n, e.to_string())),
        }
    }
    Ok(report)
}

fn summarise(n: usize, batch: &BatchResult) -> ConvergenceRow {
    let err: RunningStats = batch.outcomes.iter().map(|o| o.error).collect();
    let abs: RunningStats = batch.outcomes.iter().map(|o| o.error.abs()).collect();
    let cost: RunningStats = batch.outcomes.iter().map(|o| o.cost).collect();
    let sq: RunningStats = batch.outcomes.iter().map(|o| o.error * o.error).collect();
    let lhs: f64 = batch.compensators.iter().map(|c| c.lhs).sum();
    let rhs: f64 = batch.compensators.iter().map(|c| c.rhs).sum();
    ConvergenceRow {
        n,
        mean_err: err.mean(),
        se: err.std_error(),
        mean_abs_err: abs.mean(),
        mean_cost: cost.mean(),
        compensator_ratio: if rhs == 0.0 { f64::NAN } else { lhs / rhs },
        rms_err: sq.mean().sqrt(),
        err_var: err.variance(),
        paths: batch.outcomes.len(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stochastic::{gbm_path, make_grid, sample_wiener};

    #[test]
    fn lemma3_trivial_cases() {
        let params = MarketParams::new(0.1, 100.0, 100.0).unwrap();
        let path = gbm_path(&params, &sample_wiener(make_grid(100).unwrap(), RngSeed::new(1)));
        assert_eq!(lemma3_statistic(&path, 0.1, &vec![0.0; 101]).unwrap(), (0.0, 0.0));
        let flat = gbm_path(
            &MarketParams::degenerate(100.0, 100.0),
            &sample_wiener(make_grid(100).unwrap(), RngSeed::new(1)),
        );
        assert_eq!(lemma3_statistic(&flat, 0.0, &vec![1.0; 101]).unwrap(), (0.0, 0.0));
        assert!(lemma3_statistic(&path, 0.1, &[1.0; 3]).is_err());
    }

    #[test]
    fn no_cost_compensator_vanishes() {
        let params = MarketParams::new(0.2, 100.0, 100.0).unwrap();
        let s = CostSchedule::no_cost(20).unwrap();
        let path = gbm_path(&params, &sample_wiener(make_grid(20).unwrap(), RngSeed::new(3)));
        let c = compensator_check(&path, &params, &s, &HedgeConfig::default().with_pool_samples(1000)).unwrap();
        assert_eq!((c.lhs, c.rhs), (0.0, 0.0));
    }

    #[test]
    fn saturated_path_has_no_curvature() {
        // strike reached almost at once: gamma = 1 - t and G''_yy = 0 thereafter
        let params = MarketParams::new(0.1, 100.0, 1.0).unwrap();
        let s = CostSchedule::new(0.05, 0.5, 50).unwrap();
        let path = gbm_path(&params, &sample_wiener(make_grid(50).unwrap(), RngSeed::new(4)));
        let c = compensator_check(&path, &params, &s, &HedgeConfig::default().with_pool_samples(1000)).unwrap();
        assert!(c.rhs.abs() < 1e-9, "{c:?}");
        // holdings fall by 1/n at every revision and are liquidated at the end
        let prices = path.prices();
        let volume: f64 = (1..=50).map(|j| prices[j] / 50.0).sum();
        assert!((c.lhs - s.kappa_n() * volume).abs() < 1e-9 * c.lhs, "{c:?}");
    }

    #[test]
    fn study_validates_inputs() {
        let params = MarketParams::new(0.1, 100.0, 100.0).unwrap();
        let s = CostSchedule::new(0.05, 0.5, 1).unwrap();
        let cfg = HedgeConfig::default().with_pool_samples(100);
        assert!(convergence_study(&params, &s, &[10, 5], 10, &cfg, false).is_err());
        assert!(convergence_study(&params, &s, &[10], 1, &cfg, false).is_err());
    }
}
