use crate::error::Result;
use crate::geometry::{default_resolution, GridDomain, MetricChart};
use crate::modulus::SolverOptions;

/// How a curve family is sampled and discretized for one modulus estimate.
#[derive(Clone, Debug)]
pub struct Sampling {
    pub count: usize,
    pub seed: u64,
    /// Cells per axis of automatically built grids; `None` uses the
    /// dimension default.
    pub resolution: Option<usize>,
    pub solver: SolverOptions,
}

impl Default for Sampling {
    fn default() -> Self {
        Sampling {
            count: 4096,
            seed: 1,
            resolution: None,
            solver: SolverOptions {
                history_every: 0,
                ..SolverOptions::default()
            },
        }
    }
}

impl Sampling {
    pub fn new(count: usize, seed: u64) -> Self {
        Sampling {
            count,
            seed,
            ..Self::default()
        }
    }

    pub fn with_resolution(mut self, res: usize) -> Self {
        self.resolution = Some(res);
        self
    }

    pub fn resolution_for(&self, dim: usize) -> usize {
        self.resolution.unwrap_or_else(|| default_resolution(dim))
    }

    /// Cubic grid of equal spacing around the box `lo..hi`, padded by 2%.
    pub fn grid_around_box(&self, chart: &MetricChart, lo: &[f64], hi: &[f64]) -> Result<GridDomain> {
        let half = lo
            .iter()
            .zip(hi)
            .map(|(a, b)| 0.5 * (b - a))
            .fold(0.0, f64::max)
            * 1.02;
        let center: Vec<f64> = lo.iter().zip(hi).map(|(a, b)| 0.5 * (a + b)).collect();
        GridDomain::around(chart, &center, half, self.resolution_for(chart.dim()))
    }
}
