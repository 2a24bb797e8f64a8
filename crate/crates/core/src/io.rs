//! The set-definition file format shared by the CLI and the bindings.
//!
//! ```json
//! { "dim": 2, "q": 2,
//!   "primitives": [ {"box": {"lo": ["0/1","0/1"], "hi": ["1/1","1/2"]}},
//!                   {"cells": [[4, 0]]},
//!                   {"point": ["8/1","8/1"]} ] }
//! ```

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::ToPrimitive;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::GridSet;
use crate::intervals::IntervalSet;
use crate::rational::{common_denominator, serde_vec, to_i64, Rational};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", deny_unknown_fields)]
pub enum Primitive {
    Box(BoxSpec),
    Cells(Vec<Vec<i64>>),
    Point(#[serde(with = "serde_vec")] Vec<Rational>),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoxSpec {
    #[serde(with = "serde_vec")]
    pub lo: Vec<Rational>,
    #[serde(with = "serde_vec")]
    pub hi: Vec<Rational>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SetDefinition {
    pub dim: usize,
    pub q: u64,
    pub primitives: Vec<Primitive>,
}

impl SetDefinition {
    pub fn from_json(text: &str) -> Result<Self> {
        let def: SetDefinition = serde_json::from_str(text).map_err(|e| {
            Error::Parse(format!("line {} column {}: {e}", e.line(), e.column()))
        })?;
        def.validate()?;
        Ok(def)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("definition serializes")
    }

    pub fn from_grid(s: &GridSet) -> Self {
        SetDefinition {
            dim: s.dim(),
            q: s.q(),
            primitives: vec![Primitive::Cells(s.cells().map(<[i64]>::to_vec).collect())],
        }
    }

    fn validate(&self) -> Result<()> {
        if self.dim == 0 {
            return Err(Error::Parse("field `dim`: must be at least 1".into()));
        }
        if self.q == 0 {
            return Err(Error::Parse("field `q`: must be at least 1".into()));
        }
        for (i, p) in self.primitives.iter().enumerate() {
            let lens: Vec<usize> = match p {
                Primitive::Box(b) => vec![b.lo.len(), b.hi.len()],
                Primitive::Cells(cells) => cells.iter().map(Vec::len).collect(),
                Primitive::Point(x) => vec![x.len()],
            };
            if lens.iter().any(|&n| n != self.dim) {
                return Err(Error::Parse(format!(
                    "primitives[{i}]: coordinate count differs from dim = {}",
                    self.dim
                )));
            }
            if let Primitive::Box(b) = p {
                if b.lo.iter().zip(&b.hi).any(|(l, h)| l >= h) {
                    return Err(Error::Parse(format!(
                        "primitives[{i}]: box needs lo < hi on every axis"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn points(&self) -> Vec<Vec<Rational>> {
        self.primitives
            .iter()
            .filter_map(|p| match p {
                Primitive::Point(x) => Some(x.clone()),
                _ => None,
            })
            .collect()
    }

    /// Grid resolution that fits every box corner: `lcm(q, denominators)`.
    fn resolution(&self) -> Result<u64> {
        let den = common_denominator(self.primitives.iter().flat_map(|p| match p {
            Primitive::Box(b) => b.lo.iter().chain(&b.hi).collect::<Vec<_>>(),
            _ => Vec::new(),
        }));
        BigInt::from(self.q)
            .lcm(&den)
            .to_u64()
            .ok_or(Error::CoordinateOverflow)
    }

    /// The cell union, ignoring point primitives.
    pub fn grid_part(&self) -> Result<GridSet> {
        let q = self.resolution()?;
        let m = (q / self.q) as i64;
        let mut out = GridSet::empty(self.dim, q)?;
        let mut loose = Vec::new();
        for p in &self.primitives {
            match p {
                Primitive::Box(b) => {
                    let scale = Rational::from_integer(BigInt::from(q));
                    let lo = b
                        .lo
                        .iter()
                        .map(|c| to_i64(&(c * &scale).to_integer()))
                        .collect::<Result<Vec<_>>>()?;
                    let hi = b
                        .hi
                        .iter()
                        .map(|c| to_i64(&(c * &scale).to_integer()))
                        .collect::<Result<Vec<_>>>()?;
                    out = out.union(&GridSet::from_box(self.dim, q, &lo, &hi)?)?;
                }
                Primitive::Cells(cells) => loose.extend(cells.iter().cloned()),
                Primitive::Point(_) => {}
            }
        }
        if !loose.is_empty() {
            let cells = GridSet::new(self.dim, self.q, loose)?.refine(m as u64)?;
            out = out.union(&cells)?;
        }
        Ok(out)
    }

    /// The set as a grid; point primitives are rejected.
    pub fn to_grid(&self) -> Result<GridSet> {
        if self.primitives.iter().any(|p| matches!(p, Primitive::Point(_))) {
            return Err(Error::Unsupported(
                "point primitives are only accepted by hull and theorem operations".into(),
            ));
        }
        self.grid_part()
    }

    /// The set as an exact one-dimensional interval union, points included.
    pub fn to_intervals(&self) -> Result<IntervalSet> {
        if self.dim != 1 {
            return Err(Error::DimensionMismatch {
                left: 1,
                right: self.dim,
            });
        }
        let mut out = IntervalSet::empty();
        let q = Rational::from_integer(BigInt::from(self.q));
        for p in &self.primitives {
            let piece = match p {
                Primitive::Box(b) => IntervalSet::interval(b.lo[0].clone(), b.hi[0].clone())?,
                Primitive::Cells(cells) => IntervalSet::new(cells.iter().map(|c| {
                    let lo = Rational::from_integer(BigInt::from(c[0])) / &q;
                    let hi = Rational::from_integer(BigInt::from(c[0] + 1)) / &q;
                    (lo, hi)
                }))?,
                Primitive::Point(x) => IntervalSet::point(x[0].clone()),
            };
            out = out.union(&piece);
        }
        Ok(out)
    }
}
