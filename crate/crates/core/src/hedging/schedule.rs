use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Proportional cost `kappa_n = kappa0 n^(-alpha)` charged on trading volume.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CostSchedule {
    kappa0: f64,
    alpha: f64,
    n: usize,
    /// Replaces `sqrt(8 / pi)` in the volatility adjustment. Mutation
    /// testing only.
    leland_factor: f64,
}

impl CostSchedule {
    pub fn new(kappa0: f64, alpha: f64, n: usize) -> Result<Self> {
        if !(kappa0 >= 0.0 && kappa0.is_finite()) {
            return Err(Error::invalid("kappa0", format!("must be non-negative, got {kappa0}")));
        }
        if !(0.0..=1.0).contains(&alpha) {
            return Err(Error::invalid("alpha", format!("must lie in [0, 1], got {alpha}")));
        }
        if n == 0 {
            return Err(Error::invalid("n", "need at least one revision"));
        }
        Ok(Self {
            kappa0,
            alpha,
            n,
            leland_factor: (8.0 / PI).sqrt(),
        })
    }

    pub fn no_cost(n: usize) -> Result<Self> {
        Self::new(0.0, 0.5, n)
    }

    pub fn kappa0(&self) -> f64 {
        self.kappa0
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn kappa_n(&self) -> f64 {
        self.kappa0 * (self.n as f64).powf(-self.alpha)
    }

    /// Same costs at another revision count.
    pub fn with_n(&self, n: usize) -> Result<Self> {
        Ok(Self {
            leland_factor: self.leland_factor,
            ..Self::new(self.kappa0, self.alpha, n)?
        })
    }

    /// Uses `sqrt(2 / pi)` instead of `sqrt(8 / pi)` in the adjustment.
    #[doc(hidden)]
    pub fn sabotaged(mut self) -> Self {
        self.leland_factor = (2.0 / PI).sqrt();
        self
    }

    /// `sigma_hat^2 = sigma^2 + sigma sqrt(n) kappa_n sqrt(8 / pi)`.
    pub fn modified_volatility(&self, sigma: f64) -> ModifiedVol {
        let extra = sigma * (self.n as f64).sqrt() * self.kappa_n() * self.leland_factor;
        ModifiedVol {
            sigma,
            sigma_hat: if extra == 0.0 {
                sigma
            } else {
                (sigma * sigma + extra).sqrt()
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModifiedVol {
    sigma: f64,
    sigma_hat: f64,
}

impl ModifiedVol {
    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn sigma_hat(&self) -> f64 {
        self.sigma_hat
    }

    /// `(sigma_hat^2 - sigma^2) / 2`.
    pub fn half_excess_variance(&self) -> f64 {
        0.5 * (self.sigma_hat * self.sigma_hat - self.sigma * self.sigma)
    }
}

pub fn modified_volatility(sigma: f64, schedule: &CostSchedule) -> ModifiedVol {
    schedule.modified_volatility(sigma)
}
