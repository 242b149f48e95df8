//! `G(t, x, y) = E(x + y eta~_{1-t} - K)+`, its `y`-derivatives and the
//! option cost `C0 = G(0, 0, S0)`.

mod eta;

use std::io::Write;

pub use eta::{eta_sample, EtaSet, PayoffForm, WienerPool};

use crate::density::{density_q, tail_moment, DensityConfig};
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::hedging::CostSchedule;
use crate::rng::RngSeed;
use crate::stats::Estimate;
use crate::stochastic::MarketParams;

/// Monte Carlo controls for the price function.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McConfig {
    /// Sample count `L`.
    pub samples: usize,
    /// Nodes `N` of the inner quadrature for `eta`.
    pub n_inner: usize,
    pub seed: RngSeed,
    pub exec: Exec,
    pub form: PayoffForm,
}

impl Default for McConfig {
    fn default() -> Self {
        Self {
            samples: 100_000,
            n_inner: 100,
            seed: RngSeed::new(0),
            exec: Exec::default(),
            form: PayoffForm::default(),
        }
    }
}

impl McConfig {
    pub fn with_samples(mut self, samples: usize) -> Self {
        self.samples = samples;
        self
    }

    pub fn with_n_inner(mut self, n_inner: usize) -> Self {
        self.n_inner = n_inner;
        self
    }

    pub fn with_seed(mut self, seed: impl Into<RngSeed>) -> Self {
        self.seed = seed.into();
        self
    }

    pub fn with_exec(mut self, exec: Exec) -> Self {
        self.exec = exec;
        self
    }

    pub fn with_form(mut self, form: PayoffForm) -> Self {
        self.form = form;
        self
    }

    /// Sorted `eta~_v` samples for this configuration.
    pub fn eta_set(&self, sigma: f64, v: f64) -> Result<EtaSet> {
        EtaSet::generate(sigma, v, self.samples, self.n_inner, self.seed, self.exec)
    }
}

/// Argument of the price function.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GPoint {
    pub t: f64,
    pub x: f64,
    pub y: f64,
    pub strike: f64,
    pub sigma: f64,
}

impl GPoint {
    pub fn new(t: f64, x: f64, y: f64, strike: f64, sigma: f64) -> Self {
        Self {
            t,
            x,
            y,
            strike,
            sigma,
        }
    }

    pub fn v(&self) -> f64 {
        1.0 - self.t
    }

    /// `(K - x) / y`, the level `eta` must exceed for a positive payoff.
    pub fn threshold(&self) -> f64 {
        (self.strike - self.x) / self.y
    }

    fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.t) {
            return Err(Error::invalid("t", format!("must lie in [0, 1], got {}", self.t)));
        }
        if !(self.y >= 0.0 && self.y.is_finite()) {
            return Err(Error::invalid("y", format!("must be non-negative, got {}", self.y)));
        }
        if !self.x.is_finite() || !(self.strike >= 0.0) {
            return Err(Error::invalid("x", "x and strike must be finite, strike non-negative"));
        }
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return Err(Error::invalid("sigma", format!("must be positive, got {}", self.sigma)));
        }
        Ok(())
    }

    fn require_positive_y(&self) -> Result<()> {
        self.validate()?;
        if self.y > 0.0 {
            Ok(())
        } else {
            Err(Error::invalid("y", "derivatives need y > 0"))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GEstimate {
    pub value: f64,
    pub se: f64,
    /// Samples used; zero for closed-form values.
    pub samples: usize,
    pub point: GPoint,
}

impl GEstimate {
    fn from(point: GPoint, est: Estimate) -> Self {
        Self {
            value: est.value,
            se: est.se,
            samples: est.count,
            point,
        }
    }

    pub fn estimate(&self) -> Estimate {
        Estimate {
            value: self.value,
            se: self.se,
            count: self.samples,
        }
    }
}

/// Bump size of the first derivative: `max(1e-4, 1e-4 y)`.
pub fn dy_bump(y: f64) -> f64 {
    (1e-4 * y).max(1e-4)
}

/// Bump size of the second-difference fallback.
pub fn dyy_bump(y: f64) -> f64 {
    1e-2 * y
}

/// Value at a point from a prepared sample set. `t = 1` and `y = 0` are
/// closed form.
pub fn value_on(set: &EtaSet, p: &GPoint, form: PayoffForm) -> Estimate {
    if p.t >= 1.0 || p.y == 0.0 {
        return Estimate::exact((p.x - p.strike).max(0.0));
    }
    let e = set.value(p.x, p.y, p.strike, form);
    Estimate {
        value: e.value.max(0.0),
        ..e
    }
}

/// `G'_y` from a prepared sample set, clamped to `[0, 1 - t]`.
pub fn dy_on(set: &EtaSet, p: &GPoint, form: PayoffForm) -> Estimate {
    let v = p.v();
    if p.t >= 1.0 {
        return Estimate::exact(0.0);
    }
    let e = set.dy(p.x, p.y, p.strike, dy_bump(p.y), form);
    Estimate {
        value: e.value.clamp(0.0, v),
        ..e
    }
}

/// `G''_yy` by central second difference from a prepared sample set.
pub fn dyy_on(set: &EtaSet, p: &GPoint) -> Estimate {
    if p.t >= 1.0 || p.x >= p.strike {
        return Estimate::exact(0.0);
    }
    set.dyy(p.x, p.y, p.strike, dyy_bump(p.y))
}

pub fn g_value(p: &GPoint, cfg: &McConfig) -> Result<GEstimate> {
    p.validate()?;
    if p.t >= 1.0 || p.y == 0.0 {
        return Ok(GEstimate::from(*p, Estimate::exact((p.x - p.strike).max(0.0))));
    }
    let set = cfg.eta_set(p.sigma, p.v())?;
    Ok(GEstimate::from(*p, value_on(&set, p, cfg.form)))
}

/// Forward difference in `y` with common random numbers.
pub fn g_dy(p: &GPoint, cfg: &McConfig) -> Result<GEstimate> {
    p.require_positive_y()?;
    if p.t >= 1.0 {
        return Ok(GEstimate::from(*p, Estimate::exact(0.0)));
    }
    if p.x >= p.strike {
        return Ok(GEstimate::from(*p, Estimate::exact(p.v())));
    }
    let set = cfg.eta_set(p.sigma, p.v())?;
    Ok(GEstimate::from(*p, dy_on(&set, p, cfg.form)))
}

/// `G'_y = int_b^inf z q(v, z) dz` through the bridge representation.
pub fn g_dy_density(p: &GPoint, cfg: &DensityConfig) -> Result<GEstimate> {
    p.require_positive_y()?;
    if p.t >= 1.0 {
        return Ok(GEstimate::from(*p, Estimate::exact(0.0)));
    }
    let e = tail_moment(p.v(), p.threshold(), p.sigma, cfg)?;
    Ok(GEstimate::from(*p, e))
}

/// How `G''_yy` is estimated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SecondDerivative {
    /// `b^2 q(v, b) / y` with `b = (K - x) / y`.
    Density(DensityConfig),
    /// Central second difference with bump `1e-2 y`.
    FiniteDifference,
}

pub fn g_dyy(p: &GPoint, cfg: &McConfig, route: SecondDerivative) -> Result<GEstimate> {
    p.require_positive_y()?;
    if p.t >= 1.0 || p.x >= p.strike {
        return Ok(GEstimate::from(*p, Estimate::exact(0.0)));
    }
    match route {
        SecondDerivative::FiniteDifference => {
            let set = cfg.eta_set(p.sigma, p.v())?;
            Ok(GEstimate::from(*p, dyy_on(&set, p)))
        }
        SecondDerivative::Density(dcfg) => {
            let b = p.threshold();
            let est = density_q(p.v(), &[b], p.sigma, &dcfg)?;
            let scale = b * b / p.y;
            Ok(GEstimate {
                value: scale * est.q[0],
                se: scale * est.se[0],
                samples: est.samples,
                point: *p,
            })
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptionCost {
    pub c0: f64,
    pub se: f64,
    pub sigma: f64,
    pub s0: f64,
    pub strike: f64,
    pub samples: usize,
    pub n_inner: usize,
}

impl OptionCost {
    pub fn estimate(&self) -> Estimate {
        Estimate {
            value: self.c0,
            se: self.se,
            count: self.samples,
        }
    }
}

pub fn option_cost(params: &MarketParams, cfg: &McConfig) -> Result<OptionCost> {
    let p = GPoint::new(0.0, 0.0, params.s0(), params.strike(), params.sigma());
    let g = g_value(&p, cfg)?;
    Ok(OptionCost {
        c0: g.value,
        se: g.se,
        sigma: params.sigma(),
        s0: params.s0(),
        strike: params.strike(),
        samples: cfg.samples,
        n_inner: cfg.n_inner,
    })
}

/// Option cost under the Leland volatility of `schedule`.
pub fn modified_option_cost(
    params: &MarketParams,
    schedule: &CostSchedule,
    cfg: &McConfig,
) -> Result<OptionCost> {
    let sigma_hat = schedule.modified_volatility(params.sigma()).sigma_hat();
    option_cost(&params.with_sigma(sigma_hat)?, cfg)
}

/// CSV with columns `sigma,K,L,N,c0,se`.
pub fn write_price_csv<W: Write>(rows: &[OptionCost], out: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(out);
    wtr.write_record(["sigma", "K", "L", "N", "c0", "se"])?;
    for r in rows {
        wtr.write_record(&[
            r.sigma.to_string(),
            r.strike.to_string(),
            r.samples.to_string(),
            r.n_inner.to_string(),
            r.c0.to_string(),
            r.se.to_string(),
        ])?;
    }
    wtr.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> McConfig {
        McConfig::default().with_samples(5000).with_seed(2)
    }

    #[test]
    fn boundary_is_exact() {
        let p = GPoint::new(1.0, 120.0, 100.0, 100.0, 0.3);
        let g = g_value(&p, &cfg()).unwrap();
        assert_eq!(g.value, 20.0);
        assert_eq!((g.se, g.samples), (0.0, 0));
        let p = GPoint::new(0.2, 30.0, 0.0, 100.0, 0.3);
        assert_eq!(g_value(&p, &cfg()).unwrap().value, 0.0);
    }

    #[test]
    fn rejects_negative_y() {
        let p = GPoint::new(0.2, 30.0, -1.0, 100.0, 0.3);
        assert!(g_value(&p, &cfg()).is_err());
        let p = GPoint::new(0.2, 30.0, 0.0, 100.0, 0.3);
        assert!(g_dy(&p, &cfg()).is_err());
        assert!(g_dyy(&p, &cfg(), SecondDerivative::FiniteDifference).is_err());
    }

    #[test]
    fn saturated_derivatives() {
        let p = GPoint::new(0.25, 110.0, 90.0, 100.0, 0.4);
        assert_eq!(g_dy(&p, &cfg()).unwrap().value, 0.75);
        assert_eq!(g_dyy(&p, &cfg(), SecondDerivative::FiniteDifference).unwrap().value, 0.0);
        let p = GPoint::new(1.0, 10.0, 90.0, 100.0, 0.4);
        assert_eq!(g_dy(&p, &cfg()).unwrap().value, 0.0);
    }

    #[test]
    fn jensen_floor_and_clamp() {
        for (t, x, y) in [(0.0, 0.0, 100.0), (0.5, 40.0, 110.0), (0.8, 70.0, 95.0)] {
            let p = GPoint::new(t, x, y, 100.0, 0.5);
            let g = g_value(&p, &cfg()).unwrap();
            let floor = (x + y * (1.0 - t) - 100.0f64).max(0.0);
            assert!(g.value >= floor - 3.0 * g.se);
            let d = g_dy(&p, &cfg()).unwrap();
            assert!((0.0..=1.0 - t).contains(&d.value));
        }
    }

    #[test]
    fn pde_holds_on_saturated_branch() {
        // G = x + y (1 - t) - K: G_t = -y, G_x = 1, G_yy = 0
        let (x, y, t, k) = (130.0, 90.0, 0.4, 100.0);
        let p = GPoint::new(t, x, y, k, 0.7);
        let g = g_value(&p, &cfg().with_form(PayoffForm::Parity)).unwrap();
        assert!((g.value - (x + y * (1.0 - t) - k)).abs() < 1e-9);
        let gyy = g_dyy(&p, &cfg(), SecondDerivative::FiniteDifference).unwrap().value;
        let residual = -y + y * 1.0 + 0.5 * 0.49 * y * y * gyy;
        assert_eq!(residual, 0.0);
    }

    #[test]
    fn strike_monotone_under_common_samples() {
        let params = MarketParams::new(0.5, 100.0, 80.0).unwrap();
        let mut prev = f64::INFINITY;
        for k in [0.0, 50.0, 80.0, 100.0, 120.0, 200.0] {
            let c = option_cost(&params.with_strike(k).unwrap(), &cfg()).unwrap().c0;
            assert!(c <= prev);
            prev = c;
        }
    }
}
