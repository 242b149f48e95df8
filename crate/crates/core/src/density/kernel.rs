//! Bridge functionals `F`, `K`, `K'_a` and `P`, and the implicit root
//! `a(v, z)` of `F(v, a) = z`.
//!
//! For a fixed bridge and horizon `v` the left-Riemann form of
//! `F(v, a) = int_0^v exp(sigma W~_u - sigma^2 u / 2 + sigma u a) du`
//! is `sum_k c_k r^k` with `c_k = w_k exp(sigma W~_k - sigma^2 u_k / 2)`
//! and `r = exp(sigma h a)`, so every evaluation is a power chain rather
//! than a fresh exponential per node. The last cell is cut at `v`.

use crate::error::{Error, Result};

use super::bridge::BridgePath;

/// Exponents beyond this are treated as overflow.
pub const EXP_GUARD: f64 = 700.0;

const MAX_EXPANSIONS: usize = 80;
const MAX_ITERATIONS: usize = 200;

/// Precomputed coefficients of one bridge on `[0, v]`.
#[derive(Debug, Clone)]
pub struct BridgeKernel {
    sigma: f64,
    v: f64,
    h: f64,
    c: Vec<f64>,
    cu: Vec<f64>,
    cuu: Vec<f64>,
    /// `exp(sigma W~_m - sigma^2 u_m / 2)` at the cell containing `v`.
    base_m: f64,
    u_m: f64,
    moment: Vec<f64>,
}

/// `F` and `K` at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FkPair {
    pub f: f64,
    pub k: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImplicitRoot {
    pub v: f64,
    pub z: f64,
    pub a: f64,
    /// `|F(v, a) - z|`.
    pub residual: f64,
    /// `K(v, a)` at the returned root.
    pub k: f64,
    /// `F(lo) <= z <= F(hi)`.
    pub bracket: (f64, f64),
}

fn check_v(v: f64) -> Result<()> {
    if v > 0.0 && v <= 1.0 {
        Ok(())
    } else {
        Err(Error::invalid("v", format!("must lie in (0, 1], got {v}")))
    }
}

impl BridgeKernel {
    pub fn new(bridge: &BridgePath, v: f64, sigma: f64) -> Result<Self> {
        check_v(v)?;
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::invalid("sigma", format!("must be positive, got {sigma}")));
        }
        let grid = bridge.grid();
        let nodes = grid.steps();
        let h = grid.dt();
        let m = ((v * nodes as f64 + 1e-9).floor() as usize).min(nodes);
        let last = (v - m as f64 * h).max(0.0);
        let w = bridge.values();
        let half_var = 0.5 * sigma * sigma;
        let mut c = Vec::with_capacity(m + 1);
        let mut cu = Vec::with_capacity(m + 1);
        let mut cuu = Vec::with_capacity(m + 1);
        let mut base_m = 0.0;
        for (k, &wk) in w.iter().enumerate().take(m + 1) {
            let u = grid.time(k);
            let e = sigma * wk - half_var * u;
            if e.abs() > EXP_GUARD {
                return Err(Error::Overflow);
            }
            let base = e.exp();
            if k == m {
                base_m = base;
            }
            let wt = if k < m { h } else { last };
            c.push(wt * base);
            cu.push(wt * base * u);
            cuu.push(wt * base * u * u);
        }
        Ok(Self {
            sigma,
            v,
            h,
            c,
            cu,
            cuu,
            base_m,
            u_m: m as f64 * h,
            moment: Vec::new(),
        })
    }

    pub fn v(&self) -> f64 {
        self.v
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    /// `lim_{a -> -inf} F(v, a)`: only the node at `u = 0` survives.
    pub fn floor(&self) -> f64 {
        self.c[0]
    }

    fn ratio(&self, a: f64) -> f64 {
        (self.sigma * self.h * a).exp()
    }

    /// `F(v, a)` and `K(v, a)` in one pass.
    pub fn fk(&self, a: f64) -> FkPair {
        let (s0, s1) = chain2(&self.c, &self.cu, self.ratio(a));
        FkPair {
            f: s0,
            k: self.sigma * s1,
        }
    }

    pub fn f(&self, a: f64) -> f64 {
        self.fk(a).f
    }

    pub fn k(&self, a: f64) -> f64 {
        self.fk(a).k
    }

    /// `K'_a = sigma^2 int u^2 exp(...) du`.
    pub fn k_da(&self, a: f64) -> f64 {
        let (s2, _) = chain2(&self.cuu, &self.cuu[..0], self.ratio(a));
        self.sigma * self.sigma * s2
    }

    /// `P(v, a) = dF/dv`, the integrand at the cell holding `v`.
    pub fn p(&self, a: f64) -> f64 {
        self.base_m * (self.sigma * self.u_m * a).exp()
    }

    /// `K'_v = sigma u_m P(v, a)`, consistent with the cut last cell.
    pub fn k_dv(&self, a: f64) -> f64 {
        self.sigma * self.u_m * self.p(a)
    }

    /// `E[eta 1{eta > b} | bridge]` where `a_b` solves `F(v, a_b) = b`;
    /// `None` means the whole support lies above `b`.
    pub fn tail_moment(&mut self, a_b: Option<f64>) -> f64 {
        if self.moment.is_empty() {
            let (s, h) = (self.sigma, self.h);
            self.moment = self
                .c
                .iter()
                .enumerate()
                .map(|(k, &ck)| {
                    let su = s * k as f64 * h;
                    ck * (0.5 * su * su).exp()
                })
                .collect();
        }
        match a_b {
            None => self.moment.iter().sum(),
            Some(a) => self
                .moment
                .iter()
                .enumerate()
                .map(|(k, &mk)| mk * crate::stats::normal_sf(a - self.sigma * k as f64 * self.h))
                .sum(),
        }
    }

    /// Solves `F(v, a) = z` to `|F - z| <= tol * max(1, z)`.
    ///
    /// `guess` seeds the search; without it the zero-bridge root
    /// `ln(z / v) / (sigma v) + sigma / 2` is used. A guessed point is
    /// bracketed by expansion, then refined by Newton steps that fall back
    /// to bisection whenever they leave the bracket.
    pub fn solve(&self, z: f64, tol: f64, guess: Option<f64>) -> Result<ImplicitRoot> {
        if !(z > 0.0 && z.is_finite()) {
            return Err(Error::invalid("z", format!("must be positive, got {z}")));
        }
        if !(tol > 0.0) {
            return Err(Error::invalid("tol", "must be positive"));
        }
        if z <= self.floor() {
            return Err(Error::NoRoot { z });
        }
        let target = tol * z.max(1.0);
        let (sigma, v) = (self.sigma, self.v);
        let mut a = guess
            .filter(|g| g.is_finite())
            .unwrap_or_else(|| (z / v).ln() / (sigma * v) + 0.5 * sigma);
        let mut fk = self.fk(a);
        let mut lo = f64::NEG_INFINITY;
        let mut hi = f64::INFINITY;

        // bracket
        let mut step = 1.0;
        let mut down = 0.0f64;
        for _ in 0..MAX_EXPANSIONS {
            if (fk.f - z).abs() <= target {
                break;
            }
            if fk.f < z {
                lo = a;
                if hi.is_finite() {
                    break;
                }
                // a convex F lies above its tangent, so the Newton point overshoots
                let newton = a + (z - fk.f) / fk.k;
                a = if newton.is_finite() && newton - a < 64.0 * step {
                    newton
                } else {
                    a + step
                };
            } else {
                hi = a;
                if lo.is_finite() {
                    break;
                }
                let d = (fk.f - z) / fk.k;
                let d = if d.is_finite() && d > 0.0 { d } else { step };
                // successive moves down at least double so a wild guess far
                // right of the root is recovered in a few steps
                down = (2.0 * d).max(2.0 * down).max(1e-12);
                a -= down;
            }
            step *= 2.0;
            fk = self.fk(a);
            if !fk.f.is_finite() {
                fk.f = f64::INFINITY;
            }
        }
        if (fk.f - z).abs() <= target {
            return self.finish(z, a, fk, lo, hi);
        }
        if !(lo.is_finite() && hi.is_finite()) {
            return Err(Error::RootNotConverged {
                z,
                iterations: MAX_EXPANSIONS,
            });
        }

        // Newton from far right on a steep exponential creeps; bisect
        // whenever the bracket failed to halve on the previous step.
        let mut width = f64::INFINITY;
        for _ in 0..MAX_ITERATIONS {
            let slow = hi - lo > 0.5 * width;
            width = hi - lo;
            let newton = if fk.f.is_finite() && fk.k > 0.0 && !slow {
                a - (fk.f - z) / fk.k
            } else {
                f64::NAN
            };
            a = if newton > lo && newton < hi {
                newton
            } else {
                0.5 * (lo + hi)
            };
            fk = self.fk(a);
            if !fk.f.is_finite() {
                fk.f = f64::INFINITY;
            }
            if (fk.f - z).abs() <= target {
                return self.finish(z, a, fk, lo, hi);
            }
            if fk.f < z {
                lo = a;
            } else {
                hi = a;
            }
            if hi - lo <= 4.0 * f64::EPSILON * a.abs().max(1.0) {
                return self.finish(z, a, fk, lo, hi);
            }
        }
        Err(Error::RootNotConverged {
            z,
            iterations: MAX_ITERATIONS,
        })
    }

    fn finish(&self, z: f64, a: f64, fk: FkPair, lo: f64, hi: f64) -> Result<ImplicitRoot> {
        // only a large positive exponent overflows; very negative roots underflow harmlessly
        if self.sigma * self.v * a > EXP_GUARD || !fk.f.is_finite() || !(fk.k > 0.0) {
            return Err(Error::Overflow);
        }
        let (lo, hi) = if fk.f <= z {
            (a, if hi.is_finite() { hi } else { a })
        } else {
            (if lo.is_finite() { lo } else { a }, a)
        };
        Ok(ImplicitRoot {
            v: self.v,
            z,
            a,
            residual: (fk.f - z).abs(),
            k: fk.k,
            bracket: (lo, hi),
        })
    }
}

/// `(sum x_k r^k, sum y_k r^k)` with four interleaved power chains.
/// `y` may be empty.
#[inline]
fn chain2(x: &[f64], y: &[f64], r: f64) -> (f64, f64) {
    let n = x.len();
    let both = y.len() == n;
    let r2 = r * r;
    let r4 = r2 * r2;
    let mut p = [1.0, r, r2, r2 * r];
    let mut sx = [0.0; 4];
    let mut sy = [0.0; 4];
    let chunks = n / 4;
    for q in 0..chunks {
        let base = 4 * q;
        for l in 0..4 {
            sx[l] += x[base + l] * p[l];
            if both {
                sy[l] += y[base + l] * p[l];
            }
            p[l] *= r4;
        }
    }
    let mut tx = sx[0] + sx[1] + sx[2] + sx[3];
    let mut ty = sy[0] + sy[1] + sy[2] + sy[3];
    for l in 0..n - 4 * chunks {
        tx += x[4 * chunks + l] * p[l];
        if both {
            ty += y[4 * chunks + l] * p[l];
        }
    }
    (tx, ty)
}

/// `F(v, a)` on one bridge.
pub fn functional_f(bridge: &BridgePath, v: f64, a: f64, sigma: f64) -> Result<f64> {
    Ok(BridgeKernel::new(bridge, v, sigma)?.f(a))
}

/// `K(v, a) = dF/da` on one bridge.
pub fn functional_k(bridge: &BridgePath, v: f64, a: f64, sigma: f64) -> Result<f64> {
    Ok(BridgeKernel::new(bridge, v, sigma)?.k(a))
}

/// `P(v, a) = dF/dv` on one bridge.
pub fn functional_p(bridge: &BridgePath, v: f64, a: f64, sigma: f64) -> Result<f64> {
    Ok(BridgeKernel::new(bridge, v, sigma)?.p(a))
}

pub fn solve_a(bridge: &BridgePath, v: f64, z: f64, sigma: f64, tol: f64) -> Result<ImplicitRoot> {
    BridgeKernel::new(bridge, v, sigma)?.solve(z, tol, None)
}
