//! Key-value chart configuration and the binary grid file format.
//!
//! A grid file is a 16-byte little-endian header followed by row-major
//! doubles (last axis fastest):
//!
//! | bytes | content                                      |
//! |-------|----------------------------------------------|
//! | 0..4  | magic: `RMTG` (metric tensor) or `RSCG` (scalar) |
//! | 4..8  | `u32` dimension n                            |
//! | 8..16 | `u64` resolution per axis                    |
//!
//! Tensor files carry n·n values per cell, scalar files one.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::geometry::{BoxDomain, ConformalFactor, Lattice, MetricChart, MetricKind, TensorGrid};

pub const TENSOR_MAGIC: [u8; 4] = *b"RMTG";
pub const SCALAR_MAGIC: [u8; 4] = *b"RSCG";

/// Parsed chart/Q configuration file.
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChartConfig {
    /// `euclidean`, `poincare`, `stereographic`, `conformal` or `grid`.
    pub kind: String,
    pub dim: usize,
    /// Half-width of a centered cube; ignored when `lo`/`hi` are given.
    pub half: Option<f64>,
    pub lo: Option<Vec<f64>>,
    pub hi: Option<Vec<f64>>,
    /// Conformal factor `λ(x)` for `kind = "conformal"`.
    pub lambda: Option<String>,
    /// Tensor grid file for `kind = "grid"`, relative to the config file.
    pub metric_grid: Option<PathBuf>,
    pub r_max: Option<f64>,
    /// Quasiconformality weight Q as an expression.
    pub q: Option<String>,
    /// Scalar grid file for Q, sampled over the chart box.
    pub q_grid: Option<PathBuf>,
    /// `zero` (default) or `one`.
    pub q_floor: Option<String>,
    #[serde(skip)]
    pub base_dir: Option<PathBuf>,
}

impl ChartConfig {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        let mut cfg = Self::parse(&text)?;
        cfg.base_dir = path.parent().map(Path::to_path_buf);
        Ok(cfg)
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        match &self.base_dir {
            Some(b) if p.is_relative() => b.join(p),
            _ => p.to_path_buf(),
        }
    }

    pub fn domain(&self) -> Result<BoxDomain> {
        match (&self.lo, &self.hi) {
            (Some(lo), Some(hi)) => BoxDomain::new(lo.clone(), hi.clone()),
            (None, None) => {
                let default = if matches!(self.kind.as_str(), "poincare") { 1.0 } else { 2.0 };
                Ok(BoxDomain::cube(self.dim, self.half.unwrap_or(default)))
            }
            _ => Err(Error::Config("`lo` and `hi` must be given together".into())),
        }
    }

    pub fn build_chart(&self) -> Result<MetricChart> {
        let dim = self.dim;
        let domain = self.domain()?;
        let chart = match self.kind.as_str() {
            "euclidean" => MetricChart::new(dim, domain, MetricKind::Euclidean, f64::INFINITY)?,
            "poincare" => {
                let c = MetricChart::poincare(dim);
                MetricChart::new(dim, domain, c.metric().clone(), c.patch_radius())?
            }
            "stereographic" => {
                let c = MetricChart::stereographic(dim, 1.0);
                MetricChart::new(dim, domain, c.metric().clone(), c.patch_radius())?
            }
            "conformal" => {
                let src = self
                    .lambda
                    .as_deref()
                    .ok_or_else(|| Error::Config("conformal chart needs `lambda`".into()))?;
                let f = ConformalFactor::Expression(Expr::parse(src, dim)?);
                MetricChart::new(dim, domain, MetricKind::Conformal(f), f64::INFINITY)?
            }
            "grid" => {
                let file = self
                    .metric_grid
                    .as_ref()
                    .ok_or_else(|| Error::Config("grid chart needs `metric_grid`".into()))?;
                let g = read_tensor_grid(&self.resolve(file), &domain)?;
                MetricChart::new(dim, domain, MetricKind::GeneralGrid(Arc::new(g)), f64::INFINITY)?
            }
            other => return Err(Error::Config(format!("unknown chart kind `{other}`"))),
        };
        Ok(match self.r_max {
            Some(r) if r > 0.0 => chart.with_patch_radius(r),
            Some(r) => return Err(Error::Config(format!("r_max must be positive, got {r}"))),
            None => chart,
        })
    }
}

fn read_grid(path: &Path, magic: [u8; 4]) -> Result<(usize, usize, Vec<f64>)> {
    let bad = |msg: String| Error::GridFile {
        path: path.to_path_buf(),
        msg,
    };
    let bytes = fs::read(path)?;
    if bytes.len() < 16 {
        return Err(bad("file shorter than the 16-byte header".into()));
    }
    if bytes[0..4] != magic {
        return Err(bad(format!(
            "bad magic {:?}, expected {:?}",
            String::from_utf8_lossy(&bytes[0..4]),
            String::from_utf8_lossy(&magic)
        )));
    }
    let dim = u32::from_le_bytes(bytes[4..8].try_into().expect("4 bytes")) as usize;
    let res = u64::from_le_bytes(bytes[8..16].try_into().expect("8 bytes")) as usize;
    if dim == 0 || res == 0 {
        return Err(bad("zero dimension or resolution".into()));
    }
    let body = &bytes[16..];
    if body.len() % 8 != 0 {
        return Err(bad("payload is not a whole number of doubles".into()));
    }
    let values: Vec<f64> = body
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
        .collect();
    Ok((dim, res, values))
}

fn write_grid(path: &Path, magic: [u8; 4], dim: usize, res: usize, values: &[f64]) -> Result<()> {
    let mut f = fs::File::create(path)?;
    f.write_all(&magic)?;
    f.write_all(&(dim as u32).to_le_bytes())?;
    f.write_all(&(res as u64).to_le_bytes())?;
    let mut buf = Vec::with_capacity(values.len() * 8);
    for v in values {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    f.write_all(&buf)?;
    Ok(())
}

/// Reads a tensor grid whose cells tile `domain`.
pub fn read_tensor_grid(path: &Path, domain: &BoxDomain) -> Result<TensorGrid> {
    let (dim, res, values) = read_grid(path, TENSOR_MAGIC)?;
    if dim != domain.lo.len() {
        return Err(Error::GridFile {
            path: path.to_path_buf(),
            msg: format!("grid dimension {dim} does not match chart dimension {}", domain.lo.len()),
        });
    }
    let expected = res.pow(dim as u32) * dim * dim;
    if values.len() != expected {
        return Err(Error::GridFile {
            path: path.to_path_buf(),
            msg: format!("expected {expected} doubles, found {}", values.len()),
        });
    }
    let lattice = Lattice::new(&domain.lo, &domain.hi, &vec![res; dim])?;
    TensorGrid::new(lattice, values)
}

pub fn write_tensor_grid(path: &Path, grid: &TensorGrid) -> Result<()> {
    let l = grid.lattice();
    let res = l.resolution()[0];
    if l.resolution().iter().any(|&r| r != res) {
        return Err(Error::Precondition("grid files need equal resolution on every axis".into()));
    }
    write_grid(path, TENSOR_MAGIC, l.dim(), res, grid.values())
}

/// Scalar grid: returns the lattice over `domain` and one value per cell.
pub fn read_scalar_grid(path: &Path, domain: &BoxDomain) -> Result<(Lattice, Vec<f64>)> {
    let (dim, res, values) = read_grid(path, SCALAR_MAGIC)?;
    if dim != domain.lo.len() || values.len() != res.pow(dim as u32) {
        return Err(Error::GridFile {
            path: path.to_path_buf(),
            msg: format!("header (dim {dim}, res {res}) does not match payload or chart"),
        });
    }
    Ok((Lattice::new(&domain.lo, &domain.hi, &vec![res; dim])?, values))
}

pub fn write_scalar_grid(path: &Path, lattice: &Lattice, values: &[f64]) -> Result<()> {
    let res = lattice.resolution()[0];
    if lattice.resolution().iter().any(|&r| r != res) || values.len() != lattice.num_cells() {
        return Err(Error::Precondition("scalar grid must be cubic and match the lattice".into()));
    }
    write_grid(path, SCALAR_MAGIC, lattice.dim(), res, values)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_conformal_chart() {
        let cfg = ChartConfig::parse(
            r#"
kind = "conformal"
dim = 2
half = 0.9
lambda = "2/(1-x^2-y^2)"
r_max = 2.0
"#,
        )
        .unwrap();
        let c = cfg.build_chart().unwrap();
        assert_eq!(c.patch_radius(), 2.0);
        assert!((c.conformal_factor(&[0.0, 0.0]).unwrap() - 2.0).abs() < 1e-15);
    }

    #[test]
    fn rejects_unknown_keys_and_kinds() {
        assert!(ChartConfig::parse("kind = \"euclidean\"\ndim = 2\ncolour = 1").is_err());
        let cfg = ChartConfig::parse("kind = \"hexagonal\"\ndim = 2").unwrap();
        assert!(cfg.build_chart().is_err());
    }

    #[test]
    fn tensor_grid_roundtrip_and_bad_magic() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("g.bin");
        let dom = BoxDomain::cube(2, 1.0);
        let l = Lattice::new(&dom.lo, &dom.hi, &[4, 4]).unwrap();
        let g = TensorGrid::from_fn(l, |x, g| g.copy_from_slice(&[1.0 + x[0] * x[0], 0.0, 0.0, 1.0])).unwrap();
        write_tensor_grid(&path, &g).unwrap();
        let back = read_tensor_grid(&path, &dom).unwrap();
        assert_eq!(back.values(), g.values());

        let toml = format!("kind = \"grid\"\ndim = 2\nhalf = 1.0\nmetric_grid = {:?}\n", path);
        let chart = ChartConfig::parse(&toml).unwrap().build_chart().unwrap();
        assert_eq!(chart.kind_name(), "grid");

        let mut bytes = fs::read(&path).unwrap();
        bytes[0] = b'X';
        fs::write(&path, &bytes).unwrap();
        assert!(matches!(read_tensor_grid(&path, &dom), Err(Error::GridFile { .. })));
        fs::write(&path, &bytes[..10]).unwrap();
        assert!(read_tensor_grid(&path, &dom).is_err());
    }

    #[test]
    fn scalar_grid_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("q.bin");
        let dom = BoxDomain::cube(2, 1.0);
        let l = Lattice::new(&dom.lo, &dom.hi, &[3, 3]).unwrap();
        let vals: Vec<f64> = (0..9).map(|k| k as f64).collect();
        write_scalar_grid(&path, &l, &vals).unwrap();
        let (l2, v2) = read_scalar_grid(&path, &dom).unwrap();
        assert_eq!(l2, l);
        assert_eq!(v2, vals);
    }
}
