//! Driftless Black–Scholes paths on uniform grids of `[0, 1]`.
//!
//! The asset follows `S_t = S0 exp(sigma W_t - sigma^2 t / 2)` with zero
//! interest rate, and `xi_t` is the running integral of `S` used by the
//! arithmetic-average payoff `(xi_1 - K)+`.

use std::io::Write;

use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::exec::{map_blocks, map_indexed, Exec};
use crate::rng::RngSeed;
use crate::stats::{Estimate, RunningStats};

/// Volatility, spot and strike on the unit horizon.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MarketParams {
    sigma: f64,
    s0: f64,
    strike: f64,
}

impl MarketParams {
    pub fn new(sigma: f64, s0: f64, strike: f64) -> Result<Self> {
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::invalid("sigma", format!("must be positive, got {sigma}")));
        }
        if !(s0 > 0.0 && s0.is_finite()) {
            return Err(Error::invalid("s0", format!("must be positive, got {s0}")));
        }
        if !(strike >= 0.0 && strike.is_finite()) {
            return Err(Error::invalid("strike", format!("must be non-negative, got {strike}")));
        }
        Ok(Self { sigma, s0, strike })
    }

    /// Zero-volatility market. Only meant for degenerate test oracles.
    #[doc(hidden)]
    pub fn degenerate(s0: f64, strike: f64) -> Self {
        Self {
            sigma: 0.0,
            s0,
            strike,
        }
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn s0(&self) -> f64 {
        self.s0
    }

    pub fn strike(&self) -> f64 {
        self.strike
    }

    pub fn with_sigma(&self, sigma: f64) -> Result<Self> {
        Self::new(sigma, self.s0, self.strike)
    }

    pub fn with_strike(&self, strike: f64) -> Result<Self> {
        Self::new(self.sigma, self.s0, strike)
    }
}

/// Uniform grid `t_j = j / n`, `j = 0..=n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct TimeGrid {
    n: usize,
}

pub fn make_grid(n: usize) -> Result<TimeGrid> {
    TimeGrid::new(n)
}

impl TimeGrid {
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::invalid("n", "grid needs at least one step"));
        }
        Ok(Self { n })
    }

    /// Number of steps.
    pub fn steps(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.n + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn dt(&self) -> f64 {
        1.0 / self.n as f64
    }

    pub fn time(&self, j: usize) -> f64 {
        j as f64 / self.n as f64
    }

    pub fn times(&self) -> Vec<f64> {
        (0..=self.n).map(|j| self.time(j)).collect()
    }

    /// Factor `m` such that `self` is `coarse` refined `m` times.
    pub fn refinement_of(&self, coarse: &TimeGrid) -> Option<usize> {
        self.n.is_multiple_of(coarse.n).then_some(self.n / coarse.n)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WienerPath {
    grid: TimeGrid,
    values: Vec<f64>,
}

impl WienerPath {
    /// Path from explicit node values; the first value must be zero.
    pub fn from_values(values: Vec<f64>) -> Result<Self> {
        if values.len() < 2 {
            return Err(Error::invalid("values", "need at least two nodes"));
        }
        if values[0] != 0.0 {
            return Err(Error::invalid("values", "path must start at zero"));
        }
        let grid = TimeGrid::new(values.len() - 1)?;
        Ok(Self { grid, values })
    }

    pub fn zero(grid: TimeGrid) -> Self {
        Self {
            grid,
            values: vec![0.0; grid.len()],
        }
    }

    pub fn grid(&self) -> TimeGrid {
        self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn terminal(&self) -> f64 {
        self.values[self.grid.n]
    }

    /// Doubles the resolution by Brownian-bridge midpoint insertion. The
    /// existing nodes are kept, so the coarse path is an exact subsample.
    pub fn refine(&self, seed: RngSeed) -> WienerPath {
        let mut rng = seed.rng();
        let half_sd = (0.25 * self.grid.dt()).sqrt();
        let mut values = Vec::with_capacity(2 * self.grid.n + 1);
        values.push(self.values[0]);
        for w in self.values.windows(2) {
            let z: f64 = StandardNormal.sample(&mut rng);
            values.push(0.5 * (w[0] + w[1]) + half_sd * z);
            values.push(w[1]);
        }
        WienerPath {
            grid: TimeGrid { n: 2 * self.grid.n },
            values,
        }
    }
}

/// Wiener path sampled by independent `N(0, 1/n)` increments.
pub fn sample_wiener(grid: TimeGrid, seed: RngSeed) -> WienerPath {
    let mut rng = seed.rng();
    let sd = grid.dt().sqrt();
    let mut values = Vec::with_capacity(grid.len());
    let mut w = 0.0;
    values.push(w);
    for _ in 0..grid.n {
        let z: f64 = StandardNormal.sample(&mut rng);
        w += sd * z;
        values.push(w);
    }
    WienerPath { grid, values }
}

/// Quadrature used for the running integral `xi`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum Quadrature {
    #[default]
    Left,
    Trapezoid,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AssetPath {
    grid: TimeGrid,
    w: Vec<f64>,
    s: Vec<f64>,
    xi: Vec<f64>,
}

impl AssetPath {
    pub fn grid(&self) -> TimeGrid {
        self.grid
    }

    pub fn wiener(&self) -> &[f64] {
        &self.w
    }

    pub fn prices(&self) -> &[f64] {
        &self.s
    }

    pub fn running_integral(&self) -> &[f64] {
        &self.xi
    }

    pub fn average(&self) -> f64 {
        self.xi[self.grid.n]
    }

    /// CSV with columns `t,W,S,xi`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(out);
        wtr.write_record(["t", "W", "S", "xi"])?;
        for j in 0..self.grid.len() {
            wtr.write_record(&[
                self.grid.time(j).to_string(),
                self.w[j].to_string(),
                self.s[j].to_string(),
                self.xi[j].to_string(),
            ])?;
        }
        wtr.flush()?;
        Ok(())
    }
}

pub fn gbm_path(params: &MarketParams, w: &WienerPath) -> AssetPath {
    gbm_path_with(params, w, Quadrature::Left)
}

pub fn gbm_path_with(params: &MarketParams, w: &WienerPath, quadrature: Quadrature) -> AssetPath {
    let grid = w.grid;
    let sigma = params.sigma;
    let s: Vec<f64> = w
        .values
        .iter()
        .enumerate()
        .map(|(j, &wj)| params.s0 * (sigma * wj - 0.5 * sigma * sigma * grid.time(j)).exp())
        .collect();
    let h = grid.dt();
    let mut xi = Vec::with_capacity(grid.len());
    let mut acc = 0.0;
    xi.push(acc);
    for k in 0..grid.n {
        acc += match quadrature {
            Quadrature::Left => h * s[k],
            Quadrature::Trapezoid => 0.5 * h * (s[k] + s[k + 1]),
        };
        xi.push(acc);
    }
    AssetPath {
        grid,
        w: w.values.clone(),
        s,
        xi,
    }
}

/// `(xi_1 - K)+`.
pub fn asian_payoff(path: &AssetPath, strike: f64) -> f64 {
    (path.average() - strike).max(0.0)
}

/// Monte Carlo estimate of `E|Z|` for standard normal `Z`.
pub fn abs_increment_moment(samples: usize, seed: RngSeed) -> Result<Estimate> {
    abs_increment_moment_with(samples, seed, Exec::default())
}

pub fn abs_increment_moment_with(samples: usize, seed: RngSeed, exec: Exec) -> Result<Estimate> {
    if samples == 0 {
        return Err(Error::invalid("samples", "need at least one sample"));
    }
    // one stream per block keeps the draw sequence independent of threads
    let block = 1 << 14;
    let parts = map_blocks(exec, samples, block, |r| {
        let mut rng = seed.sample(r.start as u64 / block as u64).rng();
        r.map(|_| {
            let z: f64 = StandardNormal.sample(&mut rng);
            z.abs()
        })
        .collect::<RunningStats>()
    });
    let mut total = RunningStats::new();
    for p in &parts {
        total.merge(p);
    }
    Ok(total.estimate())
}

/// Generates `count` asset paths on `grid`, path `p` drawn from stream `p`.
pub fn sample_paths(
    params: &MarketParams,
    grid: TimeGrid,
    count: usize,
    seed: RngSeed,
    exec: Exec,
) -> Vec<AssetPath> {
    map_indexed(exec, count, |p| {
        gbm_path(params, &sample_wiener(grid, seed.sample(p as u64)))
    })
}
