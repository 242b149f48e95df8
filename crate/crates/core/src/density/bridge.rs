use crate::rng::RngSeed;
use crate::stochastic::{sample_wiener, TimeGrid, WienerPath};

/// Pinned Brownian motion `W_u - u W_1` on a uniform grid of `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct BridgePath {
    grid: TimeGrid,
    values: Vec<f64>,
}

impl BridgePath {
    pub fn grid(&self) -> TimeGrid {
        self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn zero(grid: TimeGrid) -> Self {
        Self {
            grid,
            values: vec![0.0; grid.len()],
        }
    }
}

/// Removes the terminal value linearly. Both endpoints come out exactly zero.
pub fn bridge_from_wiener(w: &WienerPath) -> BridgePath {
    let grid = w.grid();
    let w1 = w.terminal();
    let mut values: Vec<f64> = w
        .values()
        .iter()
        .enumerate()
        .map(|(j, &x)| x - grid.time(j) * w1)
        .collect();
    values[0] = 0.0;
    values[grid.steps()] = 0.0;
    BridgePath { grid, values }
}

pub fn sample_bridge(grid: TimeGrid, seed: RngSeed) -> BridgePath {
    bridge_from_wiener(&sample_wiener(grid, seed))
}
