//! Density `q(v, z)` of `eta~_v = int_0^v exp(sigma W_u - sigma^2 u / 2) du`.
//!
//! Writing `W_u = W~_u + u W_1` with an independent bridge `W~`, the
//! functional is `F(v, W_1)` for a map `F(v, .)` that is increasing on the
//! bridge, so conditionally on `W~` the density is `phi(a) / K(v, a)` at
//! the root `a` of `F(v, a) = z`. Averaging over bridges gives `q`.

mod bridge;
mod kernel;

use std::io::Write;

use rand_distr::{Distribution, StandardNormal};

pub use bridge::{bridge_from_wiener, sample_bridge, BridgePath};
pub use kernel::{
    functional_f, functional_k, functional_p, solve_a, BridgeKernel, FkPair, ImplicitRoot,
    EXP_GUARD,
};

use crate::error::{Error, Result};
use crate::exec::{map_blocks, map_indexed, Exec, BLOCK};
use crate::rng::RngSeed;
use crate::stats::{linear_fit, normal_pdf, Estimate, RunningStats};
use crate::stochastic::TimeGrid;

/// Sampling controls shared by the density estimators.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityConfig {
    /// Bridge count `L`.
    pub samples: usize,
    /// Quadrature nodes of the bridge grid on `[0, 1]`.
    pub nodes: usize,
    /// Residual tolerance of the root search, relative to `max(1, z)`.
    pub tol: f64,
    /// Largest tolerated fraction of discarded bridges.
    pub max_discard: f64,
    pub seed: RngSeed,
    pub exec: Exec,
}

impl Default for DensityConfig {
    fn default() -> Self {
        Self {
            samples: 100_000,
            nodes: 512,
            tol: 1e-10,
            max_discard: 1e-3,
            seed: RngSeed::new(0),
            exec: Exec::default(),
        }
    }
}

impl DensityConfig {
    pub fn with_samples(mut self, samples: usize) -> Self {
        self.samples = samples;
        self
    }

    pub fn with_seed(mut self, seed: impl Into<RngSeed>) -> Self {
        self.seed = seed.into();
        self
    }

    pub fn with_nodes(mut self, nodes: usize) -> Self {
        self.nodes = nodes;
        self
    }

    pub fn with_exec(mut self, exec: Exec) -> Self {
        self.exec = exec;
        self
    }

    fn validate(&self) -> Result<TimeGrid> {
        if self.samples == 0 {
            return Err(Error::invalid("samples", "need at least one bridge"));
        }
        if !(self.tol > 0.0) {
            return Err(Error::invalid("tol", "must be positive"));
        }
        TimeGrid::new(self.nodes)
    }

    fn discard_limit(&self) -> usize {
        (self.max_discard * self.samples as f64).floor() as usize
    }
}

/// Pointwise density estimate on an ascending `z` grid.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityEstimate {
    pub v: f64,
    pub sigma: f64,
    pub z: Vec<f64>,
    pub q: Vec<f64>,
    pub se: Vec<f64>,
    pub q_z: Option<Vec<f64>>,
    pub q_z_se: Option<Vec<f64>>,
    pub q_v: Option<Vec<f64>>,
    pub q_v_se: Option<Vec<f64>>,
    pub samples: usize,
    pub discarded: usize,
}

impl DensityEstimate {
    /// `int q dz` by the trapezoid rule over the grid.
    pub fn mass(&self) -> f64 {
        crate::stats::trapezoid(&self.z, &self.q)
    }

    /// `int z q dz` by the trapezoid rule over the grid.
    pub fn mean(&self) -> f64 {
        let zq: Vec<f64> = self.z.iter().zip(&self.q).map(|(z, q)| z * q).collect();
        crate::stats::trapezoid(&self.z, &zq)
    }

    /// CDF on the grid, integrating `q` from the first grid point.
    pub fn cdf(&self) -> Vec<f64> {
        crate::stats::cumulative_trapezoid(&self.z, &self.q)
    }

    /// CSV with columns `v,z,q,se` and, when present, `q_z,q_v`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(out);
        let derivs = self.q_z.as_ref().zip(self.q_v.as_ref());
        let mut header = vec!["v", "z", "q", "se"];
        if derivs.is_some() {
            header.extend(["q_z", "q_v"]);
        }
        wtr.write_record(&header)?;
        for i in 0..self.z.len() {
            let mut row = vec![
                self.v.to_string(),
                self.z[i].to_string(),
                self.q[i].to_string(),
                self.se[i].to_string(),
            ];
            if let Some((qz, qv)) = derivs {
                row.push(qz[i].to_string());
                row.push(qv[i].to_string());
            }
            wtr.write_record(&row)?;
        }
        wtr.flush()?;
        Ok(())
    }
}

/// Log-spaced grid wide enough to hold practically all the mass of `eta~_v`.
pub fn default_z_grid(v: f64, sigma: f64, points: usize) -> Vec<f64> {
    let spread = 7.0 * sigma * (v / 3.0).sqrt();
    let (lo, hi) = ((v.ln() - spread).exp(), (v.ln() + spread).exp());
    log_grid(lo, hi, points)
}

pub fn log_grid(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    let points = points.max(2);
    let (a, b) = (lo.ln(), hi.ln());
    (0..points)
        .map(|i| (a + (b - a) * i as f64 / (points - 1) as f64).exp())
        .collect()
}

fn check_inputs(v: f64, z_grid: &[f64], sigma: f64) -> Result<()> {
    if !(v > 0.0 && v <= 1.0) {
        return Err(Error::invalid("v", format!("must lie in (0, 1], got {v}")));
    }
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::invalid("sigma", format!("must be positive, got {sigma}")));
    }
    if z_grid.is_empty() {
        return Err(Error::invalid("z_grid", "empty"));
    }
    if z_grid.iter().any(|&z| !(z > 0.0 && z.is_finite())) {
        return Err(Error::invalid("z_grid", "values must be positive"));
    }
    if z_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::invalid("z_grid", "must be strictly increasing"));
    }
    Ok(())
}

/// Per-bridge contribution at each grid point.
#[derive(Clone, Copy, Default)]
struct Contribution {
    q: f64,
    q_z: f64,
    q_v: f64,
}

fn bridge_contributions(
    kern: &BridgeKernel,
    z_grid: &[f64],
    tol: f64,
    derivatives: bool,
    out: &mut [Contribution],
) -> Result<()> {
    let mut warm: Option<(f64, f64, f64)> = None;
    for (slot, &z) in out.iter_mut().zip(z_grid) {
        let guess = warm.map(|(z0, a0, k0)| a0 + (z - z0) / k0);
        let root = match kern.solve(z, tol, guess) {
            Ok(r) => r,
            Err(Error::NoRoot { .. }) => {
                *slot = Contribution::default();
                continue;
            }
            Err(e) => return Err(e),
        };
        warm = Some((z, root.a, root.k));
        let (a, k) = (root.a, root.k);
        let phi = normal_pdf(a);
        let mut c = Contribution {
            q: phi / k,
            ..Default::default()
        };
        if derivatives {
            let dphi = -a * phi;
            let l_a = (dphi * k - phi * kern.k_da(a)) / (k * k);
            c.q_z = l_a / k;
            let l_v = -phi * kern.k_dv(a) / (k * k);
            c.q_v = l_v - l_a * kern.p(a) / k;
        }
        *slot = c;
    }
    Ok(())
}

#[derive(Clone)]
struct Accum {
    q: Vec<RunningStats>,
    q_z: Vec<RunningStats>,
    q_v: Vec<RunningStats>,
    discarded: usize,
}

impl Accum {
    fn new(n: usize, derivatives: bool) -> Self {
        let d = if derivatives { n } else { 0 };
        Self {
            q: vec![RunningStats::new(); n],
            q_z: vec![RunningStats::new(); d],
            q_v: vec![RunningStats::new(); d],
            discarded: 0,
        }
    }

    fn merge(&mut self, other: &Accum) {
        for (a, b) in self.q.iter_mut().zip(&other.q) {
            a.merge(b);
        }
        for (a, b) in self.q_z.iter_mut().zip(&other.q_z) {
            a.merge(b);
        }
        for (a, b) in self.q_v.iter_mut().zip(&other.q_v) {
            a.merge(b);
        }
        self.discarded += other.discarded;
    }
}

fn estimate(v: f64, z_grid: &[f64], sigma: f64, cfg: &DensityConfig, derivatives: bool) -> Result<DensityEstimate> {
    check_inputs(v, z_grid, sigma)?;
    let grid = cfg.validate()?;
    let nz = z_grid.len();
    let parts = map_blocks(cfg.exec, cfg.samples, BLOCK, |range| {
        let mut acc = Accum::new(nz, derivatives);
        let mut buf = vec![Contribution::default(); nz];
        for b in range {
            let bridge = sample_bridge(grid, cfg.seed.sample(b as u64));
            let ok = BridgeKernel::new(&bridge, v, sigma)
                .and_then(|kern| bridge_contributions(&kern, z_grid, cfg.tol, derivatives, &mut buf));
            if ok.is_err() {
                acc.discarded += 1;
                continue;
            }
            for (i, c) in buf.iter().enumerate() {
                acc.q[i].push(c.q);
                if derivatives {
                    acc.q_z[i].push(c.q_z);
                    acc.q_v[i].push(c.q_v);
                }
            }
        }
        acc
    });
    let mut total = Accum::new(nz, derivatives);
    for p in &parts {
        total.merge(p);
    }
    let limit = cfg.discard_limit();
    if total.discarded > limit {
        return Err(Error::TooManyDiscarded {
            discarded: total.discarded,
            total: cfg.samples,
            limit,
        });
    }
    let split = |s: &[RunningStats]| -> (Vec<f64>, Vec<f64>) {
        (s.iter().map(|r| r.mean()).collect(), s.iter().map(|r| r.std_error()).collect())
    };
    let (q, se) = split(&total.q);
    let (q_z, q_z_se, q_v, q_v_se) = if derivatives {
        let (a, b) = split(&total.q_z);
        let (c, d) = split(&total.q_v);
        (Some(a), Some(b), Some(c), Some(d))
    } else {
        (None, None, None, None)
    };
    Ok(DensityEstimate {
        v,
        sigma,
        z: z_grid.to_vec(),
        q,
        se,
        q_z,
        q_z_se,
        q_v,
        q_v_se,
        samples: cfg.samples - total.discarded,
        discarded: total.discarded,
    })
}

/// `q(v, z) = E[phi(a) / K(v, a)]` on `z_grid`.
pub fn density_q(v: f64, z_grid: &[f64], sigma: f64, cfg: &DensityConfig) -> Result<DensityEstimate> {
    estimate(v, z_grid, sigma, cfg, false)
}

/// As [`density_q`], also filling `q_z` and `q_v` from the same bridges.
pub fn density_derivatives(
    v: f64,
    z_grid: &[f64],
    sigma: f64,
    cfg: &DensityConfig,
) -> Result<DensityEstimate> {
    estimate(v, z_grid, sigma, cfg, true)
}

/// `int_b^inf z q(v, z) dz = E[eta~_v 1{eta~_v > b}]`, integrated in closed
/// form over `W_1` on each bridge.
pub fn tail_moment(v: f64, b: f64, sigma: f64, cfg: &DensityConfig) -> Result<Estimate> {
    check_inputs(v, &[1.0], sigma)?;
    let grid = cfg.validate()?;
    let parts = map_blocks(cfg.exec, cfg.samples, BLOCK, |range| {
        let mut stats = RunningStats::new();
        let mut discarded = 0usize;
        for i in range {
            let bridge = sample_bridge(grid, cfg.seed.sample(i as u64));
            let value = BridgeKernel::new(&bridge, v, sigma).and_then(|mut kern| {
                if b <= 0.0 {
                    return Ok(kern.tail_moment(None));
                }
                match kern.solve(b, cfg.tol, None) {
                    Ok(r) => Ok(kern.tail_moment(Some(r.a))),
                    Err(Error::NoRoot { .. }) => Ok(kern.tail_moment(None)),
                    Err(e) => Err(e),
                }
            });
            match value {
                Ok(x) => stats.push(x),
                Err(_) => discarded += 1,
            }
        }
        (stats, discarded)
    });
    let mut stats = RunningStats::new();
    let mut discarded = 0;
    for (s, d) in &parts {
        stats.merge(s);
        discarded += d;
    }
    let limit = cfg.discard_limit();
    if discarded > limit {
        return Err(Error::TooManyDiscarded {
            discarded,
            total: cfg.samples,
            limit,
        });
    }
    Ok(stats.estimate())
}

/// Direct left-Riemann samples of `eta~_v` on an `n_inner`-step grid of
/// `[0, 1]`, the last cell cut at `v`. Streams are derived from `seed` so
/// they never coincide with the bridge streams of the same seed.
pub fn direct_eta_samples(
    v: f64,
    sigma: f64,
    samples: usize,
    n_inner: usize,
    seed: RngSeed,
    exec: Exec,
) -> Result<Vec<f64>> {
    check_inputs(v, &[1.0], sigma)?;
    if samples == 0 {
        return Err(Error::invalid("samples", "need at least one sample"));
    }
    let grid = TimeGrid::new(n_inner)?;
    let h = grid.dt();
    let m = ((v * n_inner as f64 + 1e-9).floor() as usize).min(n_inner);
    let last = (v - m as f64 * h).max(0.0);
    let sd = h.sqrt();
    let drift = 0.5 * sigma * sigma * h;
    let stream = seed.derive(0xE7A);
    Ok(map_indexed(exec, samples, |i| {
        let mut rng = stream.sample(i as u64).rng();
        let mut log_s: f64 = 0.0;
        let mut acc = 0.0;
        for _ in 0..m {
            acc += h * log_s.exp();
            let z: f64 = StandardNormal.sample(&mut rng);
            log_s += sigma * sd * z - drift;
        }
        acc + last * log_s.exp()
    }))
}

/// Sup-distance between a model CDF on `grid` and the empirical CDF of
/// `samples`, taken over grid points.
pub fn two_route_distance(est: &DensityEstimate, samples: &[f64]) -> f64 {
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    crate::stats::kolmogorov_distance(&est.z, &est.cdf(), &sorted)
}

/// Least-squares fit of `ln q` against `(ln(z / v))^2 / (sigma^2 v)` on the
/// right tail `z > v`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundReport {
    /// Minus the fitted slope.
    pub kappa_hat: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub points: usize,
}

impl BoundReport {
    pub fn passes(&self) -> bool {
        self.kappa_hat > 0.0 && self.r_squared >= 0.9
    }
}

pub const MIN_TAIL_POINTS: usize = 3;

pub fn bound_diagnostic(est: &DensityEstimate) -> Result<BoundReport> {
    let (v, sigma) = (est.v, est.sigma);
    let mut x = Vec::new();
    let mut y = Vec::new();
    for i in 0..est.z.len() {
        let (z, q, se) = (est.z[i], est.q[i], est.se[i]);
        if z > v && q > 0.0 && q > 2.0 * se {
            let l = (z / v).ln();
            x.push(l * l / (sigma * sigma * v));
            y.push(q.ln());
        }
    }
    if x.len() < MIN_TAIL_POINTS {
        return Err(Error::InsufficientTail {
            found: x.len(),
            needed: MIN_TAIL_POINTS,
        });
    }
    let fit = linear_fit(&x, &y).ok_or(Error::InsufficientTail {
        found: x.len(),
        needed: MIN_TAIL_POINTS,
    })?;
    Ok(BoundReport {
        kappa_hat: -fit.slope,
        intercept: fit.intercept,
        r_squared: fit.r_squared,
        points: x.len(),
    })
}
