//! Samples of `eta~_v` and closed-form region sums over them.
//!
//! Every estimator of `G` and its `y`-derivatives is, sample by sample, an
//! affine function `alpha + beta * eta` on a few intervals of `eta`. Keeping
//! the samples sorted with prefix sums of `eta` and `eta^2` turns each
//! estimate, standard error included, into a handful of binary searches.

use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::exec::{map_blocks, Exec, BLOCK};
use crate::rng::RngSeed;
use crate::stats::Estimate;

/// Unit-time Wiener nodes `W_0..W_{N-1}` for a fixed batch of streams.
#[derive(Debug, Clone)]
pub struct WienerPool {
    n_inner: usize,
    samples: usize,
    nodes: Vec<f64>,
}

fn fill_nodes(seed: RngSeed, n_inner: usize, out: &mut [f64]) {
    let mut rng = seed.rng();
    let sd = (1.0 / n_inner as f64).sqrt();
    let mut w = 0.0;
    for slot in out.iter_mut() {
        *slot = w;
        let z: f64 = StandardNormal.sample(&mut rng);
        w += sd * z;
    }
}

fn check_counts(samples: usize, n_inner: usize) -> Result<()> {
    if samples == 0 {
        return Err(Error::invalid("samples", "need at least one sample"));
    }
    if n_inner == 0 {
        return Err(Error::invalid("n_inner", "need at least one node"));
    }
    Ok(())
}

impl WienerPool {
    /// Sample `i` is drawn from stream `seed.sample(i)`, exactly as in
    /// [`EtaSet::generate`].
    pub fn generate(samples: usize, n_inner: usize, seed: RngSeed, exec: Exec) -> Result<Self> {
        check_counts(samples, n_inner)?;
        let blocks = map_blocks(exec, samples, BLOCK, |range| {
            let mut buf = vec![0.0; range.len() * n_inner];
            for (row, i) in buf.chunks_mut(n_inner).zip(range) {
                fill_nodes(seed.sample(i as u64), n_inner, row);
            }
            buf
        });
        Ok(Self {
            n_inner,
            samples,
            nodes: blocks.concat(),
        })
    }

    pub fn samples(&self) -> usize {
        self.samples
    }

    pub fn n_inner(&self) -> usize {
        self.n_inner
    }

    fn row(&self, i: usize) -> &[f64] {
        &self.nodes[i * self.n_inner..(i + 1) * self.n_inner]
    }
}

/// Left-Riemann `eta~_v` from unit-time nodes, rescaled to `[0, v]`.
fn eta_from_nodes(nodes: &[f64], sigma: f64, v: f64, decay: &[f64]) -> f64 {
    let n = nodes.len();
    let scale = sigma * v.sqrt();
    let acc: f64 = nodes.iter().zip(decay).map(|(&w, &d)| (scale * w).exp() * d).sum();
    v / n as f64 * acc
}

fn decay_factors(sigma: f64, v: f64, n: usize) -> Vec<f64> {
    let c = 0.5 * sigma * sigma * v / n as f64;
    (0..n).map(|k| (-c * k as f64).exp()).collect()
}

/// One sample of `eta~_{1-t}` on `n_inner` nodes.
pub fn eta_sample(t: f64, sigma: f64, n_inner: usize, seed: RngSeed) -> Result<f64> {
    if !(0.0..1.0).contains(&t) {
        return Err(Error::invalid("t", format!("must lie in [0, 1), got {t}")));
    }
    check_counts(1, n_inner)?;
    let v = 1.0 - t;
    let mut nodes = vec![0.0; n_inner];
    fill_nodes(seed, n_inner, &mut nodes);
    Ok(eta_from_nodes(&nodes, sigma, v, &decay_factors(sigma, v, n_inner)))
}

/// Which affine representation of the payoff is averaged.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum PayoffForm {
    /// `x + y v - K + (K - x - y eta)+`, using `E eta = v` exactly.
    #[default]
    Parity,
    /// `(x + y eta - K)+` as written.
    Direct,
}

/// Sorted samples of `eta~_v` with prefix sums.
#[derive(Debug, Clone)]
pub struct EtaSet {
    v: f64,
    sigma: f64,
    sorted: Vec<f64>,
    p1: Vec<f64>,
    p2: Vec<f64>,
}

/// A region `[lo, hi)` of sorted indices where a sample contributes
/// `alpha + beta * eta`.
#[derive(Debug, Clone, Copy)]
struct Piece {
    lo: usize,
    hi: usize,
    alpha: f64,
    beta: f64,
}

impl EtaSet {
    /// `samples` draws on `n_inner` nodes, sample `i` from `seed.sample(i)`.
    pub fn generate(
        sigma: f64,
        v: f64,
        samples: usize,
        n_inner: usize,
        seed: RngSeed,
        exec: Exec,
    ) -> Result<Self> {
        check_counts(samples, n_inner)?;
        check_v(v)?;
        let decay = decay_factors(sigma, v, n_inner);
        let blocks = map_blocks(exec, samples, BLOCK, |range| {
            let mut nodes = vec![0.0; n_inner];
            range
                .map(|i| {
                    fill_nodes(seed.sample(i as u64), n_inner, &mut nodes);
                    eta_from_nodes(&nodes, sigma, v, &decay)
                })
                .collect::<Vec<_>>()
        });
        Ok(Self::from_samples(sigma, v, blocks.concat()))
    }

    pub fn from_pool(pool: &WienerPool, sigma: f64, v: f64, exec: Exec) -> Result<Self> {
        check_v(v)?;
        let decay = decay_factors(sigma, v, pool.n_inner);
        let blocks = map_blocks(exec, pool.samples, BLOCK, |range| {
            range
                .map(|i| eta_from_nodes(pool.row(i), sigma, v, &decay))
                .collect::<Vec<_>>()
        });
        Ok(Self::from_samples(sigma, v, blocks.concat()))
    }

    pub fn from_samples(sigma: f64, v: f64, mut samples: Vec<f64>) -> Self {
        samples.sort_by(f64::total_cmp);
        let mut p1 = Vec::with_capacity(samples.len() + 1);
        let mut p2 = Vec::with_capacity(samples.len() + 1);
        let (mut s1, mut s2) = (0.0, 0.0);
        p1.push(0.0);
        p2.push(0.0);
        for &e in &samples {
            s1 += e;
            s2 += e * e;
            p1.push(s1);
            p2.push(s2);
        }
        Self {
            v,
            sigma,
            sorted: samples,
            p1,
            p2,
        }
    }

    pub fn v(&self) -> f64 {
        self.v
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn len(&self) -> usize {
        self.sorted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sorted.is_empty()
    }

    pub fn samples(&self) -> &[f64] {
        &self.sorted
    }

    /// Sample mean of `eta` with its standard error.
    pub fn mean(&self) -> Estimate {
        let n = self.len();
        self.combine(&[Piece {
            lo: 0,
            hi: n,
            alpha: 0.0,
            beta: 1.0,
        }])
    }

    /// Number of samples strictly below `th`.
    fn below(&self, th: f64) -> usize {
        self.sorted.partition_point(|&e| e < th)
    }

    /// Number of samples at or below `th`.
    fn at_or_below(&self, th: f64) -> usize {
        self.sorted.partition_point(|&e| e <= th)
    }

    /// Mean and standard error of a piecewise-affine per-sample value.
    /// Samples outside every piece contribute zero.
    fn combine(&self, pieces: &[Piece]) -> Estimate {
        let n = self.len();
        let nf = n as f64;
        let mut mean = 0.0;
        for p in pieces.iter().filter(|p| p.hi > p.lo) {
            let cnt = (p.hi - p.lo) as f64;
            let s1 = self.p1[p.hi] - self.p1[p.lo];
            mean += p.alpha * (cnt / nf) + p.beta * (s1 / nf);
        }
        // centred second moment, region by region
        let mut ss = 0.0;
        let mut covered = 0usize;
        for p in pieces.iter().filter(|p| p.hi > p.lo) {
            let cnt = (p.hi - p.lo) as f64;
            let s1 = self.p1[p.hi] - self.p1[p.lo];
            let s2 = self.p2[p.hi] - self.p2[p.lo];
            let a = p.alpha - mean;
            if p.beta == 0.0 {
                ss += a * a * cnt;
            } else {
                ss += a * a * cnt + 2.0 * a * p.beta * s1 + p.beta * p.beta * s2;
            }
            covered += p.hi - p.lo;
        }
        ss += mean * mean * (n - covered) as f64;
        let se = if n > 1 {
            (ss.max(0.0) / (nf - 1.0) / nf).sqrt()
        } else {
            0.0
        };
        Estimate {
            value: mean,
            se,
            count: n,
        }
    }

    /// `G = E(x + y eta - K)+`.
    pub fn value(&self, x: f64, y: f64, strike: f64, form: PayoffForm) -> Estimate {
        let n = self.len();
        let c = strike - x;
        if y == 0.0 {
            return Estimate::exact((-c).max(0.0));
        }
        match form {
            PayoffForm::Direct => {
                if c <= 0.0 {
                    return self.combine(&[Piece { lo: 0, hi: n, alpha: -c, beta: y }]);
                }
                let i = self.at_or_below(c / y);
                self.combine(&[Piece { lo: i, hi: n, alpha: -c, beta: y }])
            }
            PayoffForm::Parity => {
                let lin = y * self.v - c;
                if c <= 0.0 {
                    return self.combine(&[Piece { lo: 0, hi: n, alpha: lin, beta: 0.0 }]);
                }
                let i = self.below(c / y);
                self.combine(&[
                    Piece { lo: 0, hi: i, alpha: y * self.v, beta: -y },
                    Piece { lo: i, hi: n, alpha: lin, beta: 0.0 },
                ])
            }
        }
    }

    /// Forward difference `(G(y + d) - G(y)) / d` on common samples.
    pub fn dy(&self, x: f64, y: f64, strike: f64, d: f64, form: PayoffForm) -> Estimate {
        let n = self.len();
        let v = self.v;
        let c = strike - x;
        match form {
            PayoffForm::Direct => {
                if c <= 0.0 {
                    return self.combine(&[Piece { lo: 0, hi: n, alpha: 0.0, beta: 1.0 }]);
                }
                let i1 = self.at_or_below(c / (y + d));
                let i2 = if y > 0.0 { self.at_or_below(c / y) } else { n };
                self.combine(&[
                    Piece { lo: i1, hi: i2, alpha: -c / d, beta: (y + d) / d },
                    Piece { lo: i2, hi: n, alpha: 0.0, beta: 1.0 },
                ])
            }
            PayoffForm::Parity => {
                if c <= 0.0 {
                    return Estimate::exact(v);
                }
                let i1 = self.below(c / (y + d));
                let i2 = if y > 0.0 { self.below(c / y) } else { n };
                self.combine(&[
                    Piece { lo: 0, hi: i1, alpha: v, beta: -1.0 },
                    Piece { lo: i1, hi: i2, alpha: v - c / d, beta: y / d },
                    Piece { lo: i2, hi: n, alpha: v, beta: 0.0 },
                ])
            }
        }
    }

    /// Central second difference `(G(y + h) - 2 G(y) + G(y - h)) / h^2`,
    /// `0 < h < y`. Linear terms cancel, so both forms coincide.
    pub fn dyy(&self, x: f64, y: f64, strike: f64, h: f64) -> Estimate {
        let c = strike - x;
        if c <= 0.0 {
            return Estimate::exact(0.0);
        }
        let h2 = h * h;
        let i1 = self.at_or_below(c / (y + h));
        let i2 = self.at_or_below(c / y);
        let i3 = self.at_or_below(c / (y - h));
        self.combine(&[
            Piece { lo: i1, hi: i2, alpha: -c / h2, beta: (y + h) / h2 },
            Piece { lo: i2, hi: i3, alpha: c / h2, beta: (h - y) / h2 },
        ])
    }
}

fn check_v(v: f64) -> Result<()> {
    if v > 0.0 && v <= 1.0 {
        Ok(())
    } else {
        Err(Error::invalid("v", format!("must lie in (0, 1], got {v}")))
    }
}
