use crate::error::{ensure, Result};
use crate::geometry::MetricChart;
use crate::numeric::pairwise_sum;

/// Axis-aligned cell lattice over a box; row-major with the last axis fastest.
#[derive(Clone, Debug, PartialEq)]
pub struct Lattice {
    lo: Vec<f64>,
    hi: Vec<f64>,
    res: Vec<usize>,
    h: Vec<f64>,
    strides: Vec<usize>,
}

impl Lattice {
    pub fn new(lo: &[f64], hi: &[f64], res: &[usize]) -> Result<Self> {
        let dim = lo.len();
        ensure!(dim >= 1, Precondition, "lattice needs at least one axis");
        ensure!(
            hi.len() == dim && res.len() == dim,
            Precondition,
            "lattice bounds and resolution disagree in dimension"
        );
        for k in 0..dim {
            ensure!(
                hi[k] > lo[k] && lo[k].is_finite() && hi[k].is_finite(),
                Precondition,
                "degenerate lattice extent on axis {k}: [{}, {}]",
                lo[k],
                hi[k]
            );
            ensure!(res[k] >= 1, Precondition, "zero resolution on axis {k}");
        }
        let h = (0..dim).map(|k| (hi[k] - lo[k]) / res[k] as f64).collect();
        let mut strides = vec![1; dim];
        for k in (0..dim.saturating_sub(1)).rev() {
            strides[k] = strides[k + 1] * res[k + 1];
        }
        Ok(Lattice {
            lo: lo.to_vec(),
            hi: hi.to_vec(),
            res: res.to_vec(),
            h,
            strides,
        })
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }
    pub fn lo(&self) -> &[f64] {
        &self.lo
    }
    pub fn hi(&self) -> &[f64] {
        &self.hi
    }
    pub fn resolution(&self) -> &[usize] {
        &self.res
    }
    pub fn strides(&self) -> &[usize] {
        &self.strides
    }
    /// Cell edge lengths (chart units).
    pub fn spacing(&self) -> &[f64] {
        &self.h
    }
    pub fn num_cells(&self) -> usize {
        self.res.iter().product()
    }
    pub fn min_spacing(&self) -> f64 {
        self.h.iter().cloned().fold(f64::INFINITY, f64::min)
    }
    /// Euclidean diagonal of one cell in chart coordinates.
    pub fn cell_diameter(&self) -> f64 {
        self.h.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
    pub fn cell_measure(&self) -> f64 {
        self.h.iter().product()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.iter()
            .zip(self.lo.iter().zip(&self.hi))
            .all(|(v, (l, h))| *v >= *l && *v <= *h)
    }

    /// Cell containing `x`; points on the upper face belong to the last cell.
    pub fn locate(&self, x: &[f64]) -> Option<usize> {
        let mut idx = 0;
        for k in 0..self.dim() {
            let t = (x[k] - self.lo[k]) / self.h[k];
            if !(t >= 0.0) || t > self.res[k] as f64 {
                return None;
            }
            let i = (t as usize).min(self.res[k] - 1);
            idx += i * self.strides[k];
        }
        Some(idx)
    }

    pub fn multi_index(&self, mut idx: usize, out: &mut [usize]) {
        for k in 0..self.dim() {
            out[k] = idx / self.strides[k];
            idx %= self.strides[k];
        }
    }

    pub fn flat_index(&self, multi: &[usize]) -> usize {
        multi.iter().zip(&self.strides).map(|(i, s)| i * s).sum()
    }

    pub fn center(&self, idx: usize, out: &mut [f64]) {
        let mut rem = idx;
        for k in 0..self.dim() {
            let i = rem / self.strides[k];
            rem %= self.strides[k];
            out[k] = self.lo[k] + (i as f64 + 0.5) * self.h[k];
        }
    }

    pub fn center_vec(&self, idx: usize) -> Vec<f64> {
        let mut c = vec![0.0; self.dim()];
        self.center(idx, &mut c);
        c
    }

    /// Continuous index coordinates of `x` relative to cell centers.
    pub(crate) fn center_coords(&self, x: &[f64], out: &mut [f64]) {
        for k in 0..self.dim() {
            out[k] = (x[k] - self.lo[k]) / self.h[k] - 0.5;
        }
    }
}

/// A chart sampled on a lattice, carrying the metric volume of every cell.
///
/// Cells whose center falls outside the chart's valid domain are blocked and
/// carry zero volume; every active cell has `v_c > 0`.
#[derive(Clone, Debug)]
pub struct GridDomain {
    chart: MetricChart,
    lattice: Lattice,
    volumes: Vec<f64>,
}

impl GridDomain {
    /// Grid over the chart's whole domain box.
    pub fn new(chart: &MetricChart, res: &[usize]) -> Result<Self> {
        let b = chart.domain();
        Self::over_box(chart, &b.lo, &b.hi, res)
    }

    /// Same resolution on every axis.
    pub fn uniform(chart: &MetricChart, res: usize) -> Result<Self> {
        Self::new(chart, &vec![res; chart.dim()])
    }

    /// Grid at the default resolution for the chart's dimension.
    pub fn with_default_resolution(chart: &MetricChart) -> Result<Self> {
        Self::uniform(chart, default_resolution(chart.dim()))
    }

    /// Grid over a sub-box of the chart domain (the box is clipped to it).
    pub fn over_box(chart: &MetricChart, lo: &[f64], hi: &[f64], res: &[usize]) -> Result<Self> {
        let dim = chart.dim();
        ensure!(
            lo.len() == dim && hi.len() == dim,
            Precondition,
            "grid box has dimension {} but chart has {dim}",
            lo.len()
        );
        let dom = chart.domain();
        let lo: Vec<f64> = (0..dim).map(|k| lo[k].max(dom.lo[k])).collect();
        let hi: Vec<f64> = (0..dim).map(|k| hi[k].min(dom.hi[k])).collect();
        let lattice = Lattice::new(&lo, &hi, res)?;
        let cell = lattice.cell_measure();
        let mut c = vec![0.0; dim];
        let volumes = (0..lattice.num_cells())
            .map(|idx| {
                lattice.center(idx, &mut c);
                let dens = chart.volume_density(&c);
                if dens.is_finite() && dens > 0.0 {
                    dens * cell
                } else {
                    0.0
                }
            })
            .collect();
        Ok(GridDomain {
            chart: chart.clone(),
            lattice,
            volumes,
        })
    }

    /// Grid centred on `center` covering the Euclidean chart cube of half-width `half`.
    pub fn around(chart: &MetricChart, center: &[f64], half: f64, res: usize) -> Result<Self> {
        let lo: Vec<f64> = center.iter().map(|c| c - half).collect();
        let hi: Vec<f64> = center.iter().map(|c| c + half).collect();
        Self::over_box(chart, &lo, &hi, &vec![res; chart.dim()])
    }

    /// Same lattice with replacement cell volumes.
    pub fn with_volumes(&self, volumes: Vec<f64>) -> Result<Self> {
        ensure!(
            volumes.len() == self.num_cells(),
            Precondition,
            "expected {} cell volumes, got {}",
            self.num_cells(),
            volumes.len()
        );
        ensure!(
            volumes.iter().all(|v| *v >= 0.0 && v.is_finite()),
            Precondition,
            "cell volumes must be finite and nonnegative"
        );
        Ok(GridDomain {
            chart: self.chart.clone(),
            lattice: self.lattice.clone(),
            volumes,
        })
    }

    pub fn chart(&self) -> &MetricChart {
        &self.chart
    }
    pub fn lattice(&self) -> &Lattice {
        &self.lattice
    }
    pub fn dim(&self) -> usize {
        self.lattice.dim()
    }
    pub fn num_cells(&self) -> usize {
        self.lattice.num_cells()
    }
    pub fn cell_volume(&self, idx: usize) -> f64 {
        self.volumes[idx]
    }
    pub fn volumes(&self) -> &[f64] {
        &self.volumes
    }
    pub fn is_active(&self, idx: usize) -> bool {
        self.volumes[idx] > 0.0
    }
    pub fn locate(&self, x: &[f64]) -> Option<usize> {
        self.lattice.locate(x)
    }
    pub fn total_volume(&self) -> f64 {
        pairwise_sum(&self.volumes)
    }

    /// Metric volume of the cells whose center satisfies `region`.
    pub fn volume<F: Fn(&[f64]) -> bool>(&self, region: F) -> f64 {
        let mut c = vec![0.0; self.dim()];
        let parts: Vec<f64> = (0..self.num_cells())
            .map(|idx| {
                self.lattice.center(idx, &mut c);
                if self.volumes[idx] > 0.0 && region(&c) {
                    self.volumes[idx]
                } else {
                    0.0
                }
            })
            .collect();
        pairwise_sum(&parts)
    }

    /// Midpoint-rule integral of `f` over the cells whose center satisfies `region`.
    pub fn integrate<R, F>(&self, region: R, f: F) -> f64
    where
        R: Fn(&[f64]) -> bool,
        F: Fn(&[f64]) -> f64,
    {
        let mut c = vec![0.0; self.dim()];
        let parts: Vec<f64> = (0..self.num_cells())
            .map(|idx| {
                self.lattice.center(idx, &mut c);
                if self.volumes[idx] > 0.0 && region(&c) {
                    f(&c) * self.volumes[idx]
                } else {
                    0.0
                }
            })
            .collect();
        pairwise_sum(&parts)
    }
}

/// 256 per axis in the plane, 48 in space (a sampled family of a few
/// thousand curves cannot saturate a finer 3D grid), 16 above.
pub fn default_resolution(dim: usize) -> usize {
    match dim {
        0..=2 => 256,
        3 => 48,
        _ => 16,
    }
}
