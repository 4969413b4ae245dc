//! The rate modulation function `beta: [0, 1] -> (0, 1]`.

use std::f64::consts::PI;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Number of uniform points used to validate a loaded function.
pub const LOAD_GRID: usize = 10_000;

/// Config-block description of `beta`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum BetaSpec {
    Constant {
        value: f64,
    },
    /// `clamp(intercept + slope * u, 0, 1)`.
    Affine {
        intercept: f64,
        slope: f64,
    },
    /// `mean + amplitude * cos(2 pi frequency u + phase)`.
    Trigonometric {
        mean: f64,
        amplitude: f64,
        #[serde(default = "one")]
        frequency: f64,
        #[serde(default)]
        phase: f64,
    },
    /// Linear interpolation through sorted `(u, beta(u))` knots.
    Table {
        points: Vec<(f64, f64)>,
    },
}

fn one() -> f64 {
    1.0
}

/// A validated `beta`. Construction checks `0 < beta <= 1` on a dense grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "BetaSpec", into = "BetaSpec")]
pub struct BetaFunction {
    spec: BetaSpec,
}

impl TryFrom<BetaSpec> for BetaFunction {
    type Error = Error;
    fn try_from(spec: BetaSpec) -> Result<Self> {
        BetaFunction::new(spec)
    }
}

impl From<BetaFunction> for BetaSpec {
    fn from(b: BetaFunction) -> BetaSpec {
        b.spec
    }
}

impl BetaFunction {
    pub fn new(spec: BetaSpec) -> Result<Self> {
        if let BetaSpec::Table { points } = &spec {
            if points.len() < 2 {
                return Err(Error::Config("beta table needs at least two knots".into()));
            }
            if points.first().unwrap().0 != 0.0 || points.last().unwrap().0 != 1.0 {
                return Err(Error::Config("beta table must span [0, 1]".into()));
            }
            if points.windows(2).any(|w| w[1].0 <= w[0].0) {
                return Err(Error::Config("beta table knots must be strictly increasing".into()));
            }
        }
        let beta = Self { spec };
        beta.validate_on_grid(LOAD_GRID)?;
        Ok(beta)
    }

    /// `beta = 1`, the symmetric simple exclusion case.
    pub fn constant_one() -> Self {
        Self::new(BetaSpec::Constant { value: 1.0 }).unwrap()
    }

    /// `beta(u) = (1 + u) / 2`.
    pub fn affine_half() -> Self {
        Self::new(BetaSpec::Affine {
            intercept: 0.5,
            slope: 0.5,
        })
        .unwrap()
    }

    /// `beta(u) = (3 + cos 2 pi u) / 4`.
    pub fn cosine() -> Self {
        Self::new(BetaSpec::Trigonometric {
            mean: 0.75,
            amplitude: 0.25,
            frequency: 1.0,
            phase: 0.0,
        })
        .unwrap()
    }

    /// The three reference functions used across the test matrices.
    pub fn presets() -> [BetaFunction; 3] {
        [Self::constant_one(), Self::affine_half(), Self::cosine()]
    }

    pub fn spec(&self) -> &BetaSpec {
        &self.spec
    }

    pub fn eval(&self, u: f64) -> f64 {
        match &self.spec {
            BetaSpec::Constant { value } => *value,
            BetaSpec::Affine { intercept, slope } => (intercept + slope * u).clamp(0.0, 1.0),
            BetaSpec::Trigonometric {
                mean,
                amplitude,
                frequency,
                phase,
            } => mean + amplitude * (2.0 * PI * frequency * u + phase).cos(),
            BetaSpec::Table { points } => interpolate(points, u),
        }
    }

    pub fn is_constant_one(&self) -> bool {
        matches!(self.spec, BetaSpec::Constant { value } if value == 1.0)
    }

    /// Check `0 < beta(u) <= 1` on `{i / (points - 1)}`.
    pub fn validate_on_grid(&self, points: usize) -> Result<()> {
        let points = points.max(2);
        for i in 0..points {
            let u = i as f64 / (points - 1) as f64;
            let v = self.eval(u);
            if !(v > 0.0 && v <= 1.0) {
                return Err(Error::Parameter(format!(
                    "beta({u}) = {v} is outside (0, 1]"
                )));
            }
        }
        Ok(())
    }

    /// Check `0 < beta(n / ell) <= 1` for `n = 0..=ell`.
    pub fn validate_window_grid(&self, ell: usize) -> Result<()> {
        for n in 0..=ell {
            let v = self.eval(n as f64 / ell as f64);
            if !(v > 0.0 && v <= 1.0) {
                return Err(Error::Parameter(format!(
                    "beta({n}/{ell}) = {v} is outside (0, 1]"
                )));
            }
        }
        Ok(())
    }

    /// Optional lint: `|beta(1) - beta(0)|`, zero when `beta` closes up on the circle.
    pub fn periodicity_gap(&self) -> f64 {
        (self.eval(1.0) - self.eval(0.0)).abs()
    }

    pub fn sup_on_grid(&self, points: usize) -> f64 {
        (0..points)
            .map(|i| self.eval(i as f64 / (points - 1) as f64))
            .fold(0.0, f64::max)
    }
}

fn interpolate(points: &[(f64, f64)], u: f64) -> f64 {
    let u = u.clamp(0.0, 1.0);
    let k = points.partition_point(|p| p.0 <= u);
    if k == 0 {
        return points[0].1;
    }
    if k == points.len() {
        return points[k - 1].1;
    }
    let (u0, v0) = points[k - 1];
    let (u1, v1) = points[k];
    v0 + (v1 - v0) * (u - u0) / (u1 - u0)
}

impl fmt::Display for BetaFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.spec {
            BetaSpec::Constant { value } => write!(f, "constant({value})"),
            BetaSpec::Affine { intercept, slope } => write!(f, "affine({intercept}+{slope}u)"),
            BetaSpec::Trigonometric {
                mean,
                amplitude,
                frequency,
                phase,
            } => write!(f, "trig({mean}+{amplitude}cos(2pi*{frequency}u+{phase}))"),
            BetaSpec::Table { points } => write!(f, "table({} knots)", points.len()),
        }
    }
}
