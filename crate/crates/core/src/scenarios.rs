//! Boundary-data library. Every scenario is given by a closed-form function
//! defined on all of ℝ², which serves both as the Dirichlet data `g` on ∂Ω and
//! as its extension `G` used by the flow-based inner variation.

use std::fmt;

use crate::error::{Error, Result};
use crate::grid::{Domain, Grid, ScalarField};

/// Default mollification width of the crack data.
pub const DEFAULT_CRACK_WIDTH: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Scenario {
    /// `g ≡ c`.
    Const { c: f64 },
    /// `g = a + b x + c y`.
    Affine { a: f64, b: f64, c: f64 },
    /// `g = tanh(y / delta)`: a mollified step forcing a horizontal crack.
    Crack { delta: f64 },
}

/// Horizontal segment `(a, b) × {y}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub a: f64,
    pub b: f64,
    pub y: f64,
}

impl Segment {
    pub fn length(&self) -> f64 {
        self.b - self.a
    }
}

/// Expected limit objects of a scenario.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Reference {
    /// Reference jump segment, if the limit has one.
    pub segment: Option<Segment>,
    /// ℋ¹ of the limit jump set.
    pub jump_length: f64,
}

impl Scenario {
    pub fn crack() -> Self {
        Scenario::Crack {
            delta: DEFAULT_CRACK_WIDTH,
        }
    }

    /// Parses `const(c)`, `affine(a,b,c)`, `crack(delta)` or bare `crack`.
    pub fn parse(id: &str) -> Result<Self> {
        let id = id.trim();
        let (name, args) = match id.find('(') {
            Some(open) => {
                let close = id
                    .strip_suffix(')')
                    .ok_or_else(|| Error::UnknownScenario(id.to_string()))?;
                let args = close[open + 1..]
                    .split(',')
                    .map(|s| {
                        s.trim()
                            .parse::<f64>()
                            .map_err(|_| Error::InvalidScenario(format!("`{}` in `{id}`", s.trim())))
                    })
                    .collect::<Result<Vec<_>>>()?;
                (&id[..open], args)
            }
            None => (id, Vec::new()),
        };
        let arity = |n: usize| -> Result<()> {
            if args.len() == n {
                Ok(())
            } else {
                Err(Error::InvalidScenario(format!(
                    "`{name}` takes {n} argument(s), got {}",
                    args.len()
                )))
            }
        };
        let scenario = match name.trim() {
            "const" => {
                arity(1)?;
                Scenario::Const { c: args[0] }
            }
            "affine" => {
                arity(3)?;
                Scenario::Affine {
                    a: args[0],
                    b: args[1],
                    c: args[2],
                }
            }
            "crack" if args.is_empty() => Scenario::crack(),
            "crack" => {
                arity(1)?;
                Scenario::Crack { delta: args[0] }
            }
            _ => return Err(Error::UnknownScenario(id.to_string())),
        };
        scenario.validate()?;
        Ok(scenario)
    }

    pub fn validate(&self) -> Result<()> {
        let finite = match *self {
            Scenario::Const { c } => c.is_finite(),
            Scenario::Affine { a, b, c } => a.is_finite() && b.is_finite() && c.is_finite(),
            Scenario::Crack { delta } => {
                if delta.is_nan() || delta <= 0.0 {
                    return Err(Error::InvalidScenario(format!(
                        "crack width must be positive, got {delta}"
                    )));
                }
                delta.is_finite()
            }
        };
        if finite {
            Ok(())
        } else {
            Err(Error::InvalidScenario(format!("non-finite parameter in {self}")))
        }
    }

    /// Closed-form extension `G` (also the boundary data on ∂Ω).
    #[inline]
    pub fn extension(&self, x: f64, y: f64) -> f64 {
        match *self {
            Scenario::Const { c } => c,
            Scenario::Affine { a, b, c } => a + b * x + c * y,
            Scenario::Crack { delta } => (y / delta).tanh(),
        }
    }

    #[inline]
    pub fn extension_gradient(&self, _x: f64, y: f64) -> [f64; 2] {
        match *self {
            Scenario::Const { .. } => [0.0, 0.0],
            Scenario::Affine { b, c, .. } => [b, c],
            Scenario::Crack { delta } => {
                let s = 1.0 / (y / delta).cosh();
                [0.0, s * s / delta]
            }
        }
    }

    /// Boundary data at `(x, y)`; identical to [`Scenario::extension`].
    #[inline]
    pub fn boundary_value(&self, x: f64, y: f64) -> f64 {
        self.extension(x, y)
    }

    pub fn default_domain(&self) -> Domain {
        Domain::symmetric_square()
    }

    /// `G` sampled at every node.
    pub fn extension_field(&self, grid: Grid) -> ScalarField {
        let s = *self;
        ScalarField::from_fn(grid, move |x, y| s.extension(x, y))
    }

    /// Expected limit `u` at a point.
    pub fn limit_u(&self, x: f64, y: f64) -> f64 {
        match *self {
            Scenario::Crack { .. } => {
                if y > 0.0 {
                    1.0
                } else if y < 0.0 {
                    -1.0
                } else {
                    0.0
                }
            }
            _ => self.extension(x, y),
        }
    }

    pub fn reference(&self, domain: &Domain) -> Reference {
        match *self {
            Scenario::Crack { .. } if domain.y0 < 0.0 && domain.y1 > 0.0 => Reference {
                segment: Some(Segment {
                    a: domain.x0,
                    b: domain.x1,
                    y: 0.0,
                }),
                jump_length: domain.width(),
            },
            _ => Reference {
                segment: None,
                jump_length: 0.0,
            },
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Scenario::Const { c } => write!(f, "const({c})"),
            Scenario::Affine { a, b, c } => write!(f, "affine({a},{b},{c})"),
            Scenario::Crack { delta } => write!(f, "crack({delta})"),
        }
    }
}
