use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::pricing::{dy_on, dyy_on, value_on, EtaSet, GPoint, PayoffForm, WienerPool};
use crate::rng::RngSeed;
use crate::stochastic::{asian_payoff, AssetPath, MarketParams, TimeGrid};

/// Controls for the frozen pricing pool used to evaluate `G'_y` along paths.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HedgeConfig {
    /// Size of the frozen `eta` pool.
    pub pool_samples: usize,
    /// Inner nodes `N` of each pooled `eta` sample.
    pub n_inner: usize,
    /// Path steps per rebalance interval.
    pub refine: usize,
    pub seed: RngSeed,
    pub exec: Exec,
    pub form: PayoffForm,
}

impl Default for HedgeConfig {
    fn default() -> Self {
        Self {
            pool_samples: 10_000,
            n_inner: 100,
            refine: 1,
            seed: RngSeed::new(0),
            exec: Exec::default(),
            form: PayoffForm::default(),
        }
    }
}

impl HedgeConfig {
    pub fn with_seed(mut self, seed: impl Into<RngSeed>) -> Self {
        self.seed = seed.into();
        self
    }

    pub fn with_pool_samples(mut self, n: usize) -> Self {
        self.pool_samples = n;
        self
    }

    pub fn with_refine(mut self, refine: usize) -> Self {
        self.refine = refine;
        self
    }

    pub fn with_exec(mut self, exec: Exec) -> Self {
        self.exec = exec;
        self
    }

    pub(crate) fn pool(&self) -> Result<WienerPool> {
        WienerPool::generate(
            self.pool_samples,
            self.n_inner,
            self.seed.derive(POOL_TAG),
            self.exec,
        )
    }
}

const POOL_TAG: u64 = 0x9001;

/// One frozen sample pool, priced under a fixed volatility.
#[derive(Debug, Clone)]
pub struct DeltaPool {
    pool: WienerPool,
    sigma: f64,
    strike: f64,
    form: PayoffForm,
    exec: Exec,
}

impl DeltaPool {
    pub fn new(cfg: &HedgeConfig, sigma: f64, strike: f64) -> Result<Self> {
        Ok(Self::from_pool(cfg.pool()?, cfg, sigma, strike))
    }

    pub fn from_pool(pool: WienerPool, cfg: &HedgeConfig, sigma: f64, strike: f64) -> Self {
        Self {
            pool,
            sigma,
            strike,
            form: cfg.form,
            exec: cfg.exec,
        }
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    /// Sample set for `eta~_{1-t}`; `None` at maturity.
    pub fn slice(&self, t: f64) -> Result<Option<PoolSlice<'_>>> {
        if t >= 1.0 {
            return Ok(None);
        }
        let set = EtaSet::from_pool(&self.pool, self.sigma, 1.0 - t, self.exec)?;
        Ok(Some(PoolSlice { pool: self, t, set }))
    }
}

/// Pool samples at one rebalance time.
pub struct PoolSlice<'a> {
    pool: &'a DeltaPool,
    t: f64,
    set: EtaSet,
}

impl PoolSlice<'_> {
    fn point(&self, x: f64, y: f64) -> GPoint {
        GPoint::new(self.t, x, y, self.pool.strike, self.pool.sigma)
    }

    pub fn value(&self, x: f64, y: f64) -> f64 {
        value_on(&self.set, &self.point(x, y), self.pool.form).value
    }

    /// `G'_y` clamped to `[0, 1 - t]`; exactly `1 - t` once `x >= K`.
    pub fn delta(&self, x: f64, y: f64) -> f64 {
        let p = self.point(x, y);
        if x >= p.strike {
            return p.v();
        }
        dy_on(&self.set, &p, self.pool.form).value
    }

    pub fn gamma(&self, x: f64, y: f64) -> f64 {
        dyy_on(&self.set, &self.point(x, y)).value
    }
}

/// Piecewise-constant holdings: `gamma[j - 1]` is held on `(t_{j-1}, t_j]`.
#[derive(Debug, Clone, PartialEq)]
pub struct HedgeStrategy {
    grid: TimeGrid,
    gamma: Vec<f64>,
}

impl HedgeStrategy {
    pub fn new(gamma: Vec<f64>) -> Result<Self> {
        let grid = TimeGrid::new(gamma.len())?;
        Ok(Self { grid, gamma })
    }

    pub fn constant(n: usize, gamma: f64) -> Result<Self> {
        Self::new(vec![gamma; n])
    }

    pub fn grid(&self) -> TimeGrid {
        self.grid
    }

    pub fn gamma(&self) -> &[f64] {
        &self.gamma
    }

    /// Node-by-node self-financing ledger. The initial position is bought
    /// free of charge; every later change, including liquidation at `t = 1`,
    /// costs `kappa_n S |delta gamma|`.
    pub fn ledger(&self, path: &AssetPath, kappa_n: f64, v0: f64) -> Result<Vec<LedgerRow>> {
        let step = path.grid().refinement_of(&self.grid).ok_or_else(|| {
            Error::GridMismatch(format!(
                "path grid with {} steps does not refine {} rebalances",
                path.grid().steps(),
                self.grid.steps()
            ))
        })?;
        let s = path.prices();
        let n = self.grid.steps();
        let mut rows = Vec::with_capacity(n + 1);
        let mut beta = v0 - self.gamma[0] * s[0];
        rows.push(LedgerRow {
            t: 0.0,
            price: s[0],
            gamma: self.gamma[0],
            beta,
            value: v0,
            cost: 0.0,
        });
        for j in 1..=n {
            let price = s[j * step];
            let held = self.gamma[j - 1];
            let next = if j < n { self.gamma[j] } else { 0.0 };
            let value = beta + held * price;
            let cost = kappa_n * price * (next - held).abs();
            beta = value - cost - next * price;
            rows.push(LedgerRow {
                t: self.grid.time(j),
                price,
                gamma: next,
                beta,
                value,
                cost,
            });
        }
        Ok(rows)
    }
}

/// State at a rebalance node. `value` is before trading; `gamma` and `beta`
/// after.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LedgerRow {
    pub t: f64,
    pub price: f64,
    pub gamma: f64,
    pub beta: f64,
    pub value: f64,
    pub cost: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HedgeOutcome {
    pub v0: f64,
    pub v1: f64,
    pub payoff: f64,
    /// `v1 - payoff`.
    pub error: f64,
    /// `kappa_n J_n`.
    pub cost: f64,
    /// `J_n`.
    pub volume: f64,
}

pub fn simulate_hedge(
    path: &AssetPath,
    strategy: &HedgeStrategy,
    kappa_n: f64,
    v0: f64,
    strike: f64,
) -> Result<HedgeOutcome> {
    let rows = strategy.ledger(path, kappa_n, v0)?;
    let s = path.prices();
    let step = path.grid().steps() / strategy.grid.steps();
    let volume: f64 = (1..rows.len())
        .map(|j| {
            let prev = rows[j - 1].gamma;
            let next = rows[j].gamma;
            s[j * step] * (next - prev).abs()
        })
        .sum();
    let last = rows.last().expect("ledger has n + 1 rows");
    let v1 = last.beta;
    let payoff = asian_payoff(path, strike);
    Ok(HedgeOutcome {
        v0,
        v1,
        payoff,
        error: v1 - payoff,
        cost: kappa_n * volume,
        volume,
    })
}

/// `gamma_j = G'_y(t_{j-1}, xi_{t_{j-1}}, S_{t_{j-1}})` for several paths at
/// once, one pool slice per rebalance time. Also returns
/// `sum_j G''_yy(t_j, xi_j, S_j) S_j^2 dt` per path when `with_gamma`.
pub(crate) fn deltas_along(
    paths: &[AssetPath],
    n: usize,
    pool: &DeltaPool,
    with_gamma: bool,
) -> Result<(Vec<Vec<f64>>, Vec<f64>)> {
    let grid = TimeGrid::new(n)?;
    let mut gammas = vec![Vec::with_capacity(n); paths.len()];
    let mut curvature = vec![0.0; paths.len()];
    let mut steps = Vec::with_capacity(paths.len());
    for p in paths {
        steps.push(p.grid().refinement_of(&grid).ok_or_else(|| {
            Error::GridMismatch(format!(
                "path grid with {} steps does not refine {n} rebalances",
                p.grid().steps()
            ))
        })?);
    }
    let dt = grid.dt();
    for j in 0..n {
        let t = grid.time(j);
        let slice = pool
            .slice(t)
            .map_err(|e| Error::Rebalance {
                index: j,
                source: Box::new(e),
            })?
            .expect("t < 1 before the last rebalance");
        for (i, path) in paths.iter().enumerate() {
            let k = j * steps[i];
            let (x, y) = (path.running_integral()[k], path.prices()[k]);
            gammas[i].push(slice.delta(x, y));
            if with_gamma {
                curvature[i] += slice.gamma(x, y) * y * y * dt;
            }
        }
    }
    Ok((gammas, curvature))
}

/// Leland strategy under `sigma_hat` along one path.
pub fn build_leland_strategy(
    path: &AssetPath,
    params: &MarketParams,
    sigma_hat: f64,
    n: usize,
    cfg: &HedgeConfig,
) -> Result<HedgeStrategy> {
    let pool = DeltaPool::new(cfg, sigma_hat, params.strike())?;
    strategy_from_pool(path, n, &pool)
}

pub fn strategy_from_pool(path: &AssetPath, n: usize, pool: &DeltaPool) -> Result<HedgeStrategy> {
    let (mut g, _) = deltas_along(std::slice::from_ref(path), n, pool, false)?;
    HedgeStrategy::new(g.pop().expect("one path"))
}

/// Frictionless hedge with `gamma_t = G'_y(t, xi_t, S_t)` and `v0 = C0`.
pub fn exact_hedge_no_cost(
    path: &AssetPath,
    params: &MarketParams,
    n: usize,
    cfg: &HedgeConfig,
) -> Result<HedgeOutcome> {
    let pool = DeltaPool::new(cfg, params.sigma(), params.strike())?;
    let v0 = pool
        .slice(0.0)?
        .expect("t = 0")
        .value(0.0, params.s0());
    let strategy = strategy_from_pool(path, n, &pool)?;
    simulate_hedge(path, &strategy, 0.0, v0, params.strike())
}
