//! Scalar expressions of a chart point, used for conformal factors, Q fields
//! and user mappings. Variables: `x`, `y`, `z` (first three coordinates),
//! `x1`..`x9` (any coordinate), and `r` (Euclidean chart norm `|x|`).

use std::fmt;

use exmex::prelude::*;
use exmex::FlatEx;
use smallvec::SmallVec;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug)]
enum Var {
    Coord(usize),
    Norm,
}

#[derive(Clone)]
pub struct Expr {
    source: String,
    flat: FlatEx<f64>,
    vars: Vec<Var>,
}

impl Expr {
    /// Parses `source` for points of dimension `dim`.
    pub fn parse(source: &str, dim: usize) -> Result<Self> {
        let err = |msg: String| Error::Expression {
            expr: source.to_string(),
            msg,
        };
        let flat = exmex::parse::<f64>(source).map_err(|e| err(e.to_string()))?;
        let mut vars = Vec::new();
        for name in flat.var_names() {
            let var = match name.as_str() {
                "x" => Var::Coord(0),
                "y" => Var::Coord(1),
                "z" => Var::Coord(2),
                "r" => Var::Norm,
                other => {
                    let idx = other
                        .strip_prefix('x')
                        .and_then(|k| k.parse::<usize>().ok())
                        .filter(|&k| k >= 1)
                        .ok_or_else(|| err(format!("unknown variable `{other}`")))?;
                    Var::Coord(idx - 1)
                }
            };
            if let Var::Coord(k) = var {
                if k >= dim {
                    return Err(err(format!("variable `{name}` exceeds dimension {dim}")));
                }
            }
            vars.push(var);
        }
        Ok(Expr {
            source: source.to_string(),
            flat,
            vars,
        })
    }

    /// Evaluates at a chart point. Evaluation failures surface as NaN.
    pub fn eval(&self, x: &[f64]) -> f64 {
        let mut vals: SmallVec<[f64; 4]> = SmallVec::with_capacity(self.vars.len());
        for v in &self.vars {
            vals.push(match *v {
                Var::Coord(k) => x[k],
                Var::Norm => crate::numeric::norm(x),
            });
        }
        self.flat.eval(&vals).unwrap_or(f64::NAN)
    }

    pub fn source(&self) -> &str {
        &self.source
    }
}

impl fmt::Debug for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Expr({:?})", self.source)
    }
}
