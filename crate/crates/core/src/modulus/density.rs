use std::sync::Arc;

use crate::error::{ensure, Result};
use crate::geometry::GridDomain;
use crate::numeric::{pairwise_sum, Power};

/// Nonnegative piecewise-constant density on a grid.
#[derive(Clone, Debug)]
pub struct DensityField {
    grid: Arc<GridDomain>,
    values: Vec<f64>,
}

impl DensityField {
    pub fn new(grid: Arc<GridDomain>, values: Vec<f64>) -> Result<Self> {
        ensure!(
            values.len() == grid.num_cells(),
            Precondition,
            "density has {} values for {} cells",
            values.len(),
            grid.num_cells()
        );
        ensure!(
            values.iter().all(|v| *v >= 0.0 && !v.is_nan()),
            Precondition,
            "density values must be nonnegative"
        );
        Ok(DensityField { grid, values })
    }

    pub fn zero(grid: Arc<GridDomain>) -> Self {
        let n = grid.num_cells();
        DensityField {
            grid,
            values: vec![0.0; n],
        }
    }

    pub fn constant(grid: Arc<GridDomain>, value: f64) -> Result<Self> {
        let n = grid.num_cells();
        Self::new(grid, vec![value; n])
    }

    /// Samples `f` at cell centers.
    pub fn from_fn<F: Fn(&[f64]) -> f64>(grid: Arc<GridDomain>, f: F) -> Result<Self> {
        let l = grid.lattice();
        let mut c = vec![0.0; l.dim()];
        let values = (0..l.num_cells())
            .map(|i| {
                l.center(i, &mut c);
                f(&c)
            })
            .collect();
        Self::new(grid, values)
    }

    pub fn grid(&self) -> &GridDomain {
        &self.grid
    }
    pub fn grid_arc(&self) -> &Arc<GridDomain> {
        &self.grid
    }
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Value at the cell containing `x`, 0 off the grid.
    pub fn at(&self, x: &[f64]) -> f64 {
        self.grid.locate(x).map_or(0.0, |c| self.values[c])
    }

    /// `Σ v_c ρ_c^p` with the grid's cell volumes.
    pub fn energy(&self, p: f64) -> f64 {
        self.energy_with(p, self.grid.volumes())
    }

    /// `Σ v_c ρ_c^p` with explicit cell volumes.
    pub fn energy_with(&self, p: f64, volumes: &[f64]) -> f64 {
        let pw = Power::new(p);
        let parts: Vec<f64> = self
            .values
            .iter()
            .zip(volumes)
            .map(|(r, v)| if *r > 0.0 { v * pw.apply(*r) } else { 0.0 })
            .collect();
        pairwise_sum(&parts)
    }

    pub fn scaled(&self, s: f64) -> Self {
        DensityField {
            grid: self.grid.clone(),
            values: self.values.iter().map(|v| v * s).collect(),
        }
    }

    pub fn max(&self) -> f64 {
        self.values.iter().cloned().fold(0.0, f64::max)
    }
}
