use std::fmt;
use std::sync::Arc;

use crate::error::{ensure, Result};
use crate::expr::Expr;
use crate::geometry::config::{read_scalar_grid, ChartConfig};
use crate::geometry::Lattice;

/// Lower bound applied to Q on evaluation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum QFloor {
    /// `Q: D -> [0, ∞]`; negative samples read as 0.
    #[default]
    Zero,
    /// `Q: D -> [1, ∞]`.
    One,
}

impl QFloor {
    pub fn value(self) -> f64 {
        match self {
            QFloor::Zero => 0.0,
            QFloor::One => 1.0,
        }
    }
}

type QFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

#[derive(Clone)]
enum QSource {
    Constant(f64),
    Expr(Expr),
    Grid { lattice: Lattice, values: Arc<Vec<f64>> },
    Func(QFn),
}

/// Pointwise weight `Q(x)` on the source chart.
#[derive(Clone)]
pub struct QField {
    source: QSource,
    floor: QFloor,
    label: String,
}

impl fmt::Debug for QField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("QField")
            .field("label", &self.label)
            .field("floor", &self.floor)
            .finish()
    }
}

impl QField {
    pub fn constant(q: f64) -> Result<Self> {
        ensure!(q >= 0.0, Precondition, "Q must be nonnegative, got {q}");
        Ok(QField {
            source: QSource::Constant(q),
            floor: QFloor::Zero,
            label: format!("{q}"),
        })
    }

    pub fn from_expr(src: &str, dim: usize) -> Result<Self> {
        let e = Expr::parse(src, dim)?;
        Ok(QField {
            label: src.to_string(),
            source: QSource::Expr(e),
            floor: QFloor::Zero,
        })
    }

    /// Piecewise-constant samples, one per lattice cell; NaN outside the lattice.
    pub fn from_grid(lattice: Lattice, values: Vec<f64>) -> Result<Self> {
        ensure!(
            values.len() == lattice.num_cells(),
            Precondition,
            "Q grid has {} values for {} cells",
            values.len(),
            lattice.num_cells()
        );
        ensure!(values.iter().all(|v| *v >= 0.0), Precondition, "Q grid values must be nonnegative");
        Ok(QField {
            source: QSource::Grid {
                lattice,
                values: Arc::new(values),
            },
            floor: QFloor::Zero,
            label: "grid".into(),
        })
    }

    pub fn from_fn<F>(label: &str, f: F) -> Self
    where
        F: Fn(&[f64]) -> f64 + Send + Sync + 'static,
    {
        QField {
            source: QSource::Func(Arc::new(f)),
            floor: QFloor::Zero,
            label: label.to_string(),
        }
    }

    /// Q from a chart config's `q` / `q_grid` / `q_floor` keys; `Q ≡ 1` when absent.
    pub fn from_config(cfg: &ChartConfig) -> Result<Self> {
        let q = match (&cfg.q, &cfg.q_grid) {
            (Some(_), Some(_)) => {
                return Err(crate::Error::Config("give either `q` or `q_grid`, not both".into()));
            }
            (Some(src), None) => Self::from_expr(src, cfg.dim)?,
            (None, Some(path)) => {
                let (lattice, values) = read_scalar_grid(&cfg.resolve(path), &cfg.domain()?)?;
                Self::from_grid(lattice, values)?
            }
            (None, None) => Self::constant(1.0)?,
        };
        let floor = match cfg.q_floor.as_deref() {
            None | Some("zero") => QFloor::Zero,
            Some("one") => QFloor::One,
            Some(other) => return Err(crate::Error::Config(format!("unknown q_floor `{other}`"))),
        };
        Ok(q.with_floor(floor))
    }

    pub fn with_floor(mut self, floor: QFloor) -> Self {
        self.floor = floor;
        self
    }

    pub fn floor(&self) -> QFloor {
        self.floor
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// Constant value, if Q is constant.
    pub fn as_constant(&self) -> Option<f64> {
        match self.source {
            QSource::Constant(c) => Some(c.max(self.floor.value())),
            _ => None,
        }
    }

    /// Stored value before the floor: may be negative, infinite or NaN.
    pub fn raw(&self, x: &[f64]) -> f64 {
        match &self.source {
            QSource::Constant(c) => *c,
            QSource::Expr(e) => e.eval(x),
            QSource::Grid { lattice, values } => lattice.locate(x).map_or(f64::NAN, |c| values[c]),
            QSource::Func(f) => f(x),
        }
    }

    /// `max(Q(x), floor)`; NaN stays NaN.
    pub fn eval(&self, x: &[f64]) -> f64 {
        let v = self.raw(x);
        if v.is_nan() {
            v
        } else {
            v.max(self.floor.value())
        }
    }
}
