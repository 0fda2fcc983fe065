//! Continuous piecewise-linear functions on the line.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Continuous piecewise-linear function with finitely many breakpoints,
/// extended constantly to the left of the first and right of the last one.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PlJson", into = "PlJson")]
pub struct PLFunction {
    breaks: Vec<f64>,
    values: Vec<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct PlJson {
    breaks: Vec<f64>,
    values: Vec<f64>,
}

impl TryFrom<PlJson> for PLFunction {
    type Error = Error;
    fn try_from(j: PlJson) -> Result<Self> {
        PLFunction::new(j.breaks, j.values)
    }
}

impl From<PLFunction> for PlJson {
    fn from(f: PLFunction) -> Self {
        PlJson {
            breaks: f.breaks,
            values: f.values,
        }
    }
}

impl PLFunction {
    pub fn new(breaks: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if breaks.is_empty() || breaks.len() != values.len() {
            return Err(Error::InvalidFunction(format!(
                "{} breakpoints but {} values",
                breaks.len(),
                values.len()
            )));
        }
        if breaks.iter().chain(values.iter()).any(|v| !v.is_finite()) {
            return Err(Error::InvalidFunction(
                "breakpoints and values must be finite".into(),
            ));
        }
        if breaks.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::InvalidFunction(
                "breakpoints must be strictly increasing".into(),
            ));
        }
        Ok(PLFunction { breaks, values })
    }

    /// `x ↦ x` on `[a, b]`.
    pub fn identity(a: f64, b: f64) -> Self {
        PLFunction {
            breaks: vec![a, b],
            values: vec![a, b],
        }
    }

    pub fn constant(c: f64, a: f64, b: f64) -> Self {
        PLFunction {
            breaks: vec![a, b],
            values: vec![c, c],
        }
    }

    /// Interpolant of `f` at the given nodes.
    pub fn interpolate(nodes: &[f64], f: impl Fn(f64) -> f64) -> Result<Self> {
        PLFunction::new(nodes.to_vec(), nodes.iter().map(|&x| f(x)).collect())
    }

    pub fn breaks(&self) -> &[f64] {
        &self.breaks
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn eval(&self, x: f64) -> f64 {
        let n = self.breaks.len();
        if x <= self.breaks[0] {
            return self.values[0];
        }
        if x >= self.breaks[n - 1] {
            return self.values[n - 1];
        }
        let i = self.breaks.partition_point(|&b| b <= x) - 1;
        let (x0, x1) = (self.breaks[i], self.breaks[i + 1]);
        let (v0, v1) = (self.values[i], self.values[i + 1]);
        let t = (x - x0) / (x1 - x0);
        v0 + t * (v1 - v0)
    }

    /// Slope on the open piece containing `x` (zero outside the breakpoints).
    pub fn slope_at(&self, x: f64) -> f64 {
        let n = self.breaks.len();
        if n < 2 || x < self.breaks[0] || x >= self.breaks[n - 1] {
            return 0.0;
        }
        let i = self.breaks.partition_point(|&b| b <= x) - 1;
        (self.values[i + 1] - self.values[i]) / (self.breaks[i + 1] - self.breaks[i])
    }

    /// Affine pieces `(x0, x1, v0, v1)` between consecutive breakpoints.
    pub fn pieces(&self) -> impl Iterator<Item = (f64, f64, f64, f64)> + '_ {
        self.breaks
            .windows(2)
            .zip(self.values.windows(2))
            .map(|(b, v)| (b[0], b[1], v[0], v[1]))
    }

    /// Breakpoints strictly inside `(lo, hi)`.
    pub fn breaks_inside(&self, lo: f64, hi: f64) -> &[f64] {
        let i = self.breaks.partition_point(|&b| b <= lo);
        let j = self.breaks.partition_point(|&b| b < hi);
        if i >= j {
            &[]
        } else {
            &self.breaks[i..j]
        }
    }

    pub fn lipschitz(&self) -> f64 {
        self.pieces()
            .map(|(x0, x1, v0, v1)| ((v1 - v0) / (x1 - x0)).abs())
            .fold(0.0, f64::max)
    }

    /// Largest `|slope|` over pieces meeting `[lo, hi]`.
    pub fn lipschitz_on(&self, lo: f64, hi: f64) -> f64 {
        self.pieces()
            .filter(|&(x0, x1, _, _)| x1 > lo && x0 < hi)
            .map(|(x0, x1, v0, v1)| ((v1 - v0) / (x1 - x0)).abs())
            .fold(0.0, f64::max)
    }

    /// `a f + b g`.
    pub fn lin_comb(a: f64, f: &PLFunction, b: f64, g: &PLFunction) -> PLFunction {
        let mut xs: Vec<f64> = f.breaks.iter().chain(g.breaks.iter()).copied().collect();
        xs.sort_by(f64::total_cmp);
        xs.dedup();
        let values = xs.iter().map(|&x| a * f.eval(x) + b * g.eval(x)).collect();
        PLFunction { breaks: xs, values }
    }

    /// `min(max(f, lo), hi)`, still piecewise linear.
    pub fn clamp(&self, lo: f64, hi: f64) -> PLFunction {
        let mut xs = self.breaks.clone();
        for (x0, x1, v0, v1) in self.pieces() {
            for level in [lo, hi] {
                if (v0 - level) * (v1 - level) < 0.0 {
                    xs.push(x0 + (level - v0) / (v1 - v0) * (x1 - x0));
                }
            }
        }
        xs.sort_by(f64::total_cmp);
        xs.dedup();
        let values = xs.iter().map(|&x| self.eval(x).clamp(lo, hi)).collect();
        PLFunction { breaks: xs, values }
    }

    /// `f ∘ φ` for an increasing piecewise-linear `φ`, given as the
    /// preimages of `f`'s breakpoints under `φ` together with `φ`'s own
    /// breakpoints.
    pub fn compose_increasing(&self, inner: &PLFunction) -> PLFunction {
        let mut xs = inner.breaks.clone();
        for (x0, x1, v0, v1) in inner.pieces() {
            if v1 <= v0 {
                continue;
            }
            for &y in self.breaks_inside(v0, v1) {
                xs.push(x0 + (y - v0) / (v1 - v0) * (x1 - x0));
            }
        }
        xs.sort_by(f64::total_cmp);
        xs.dedup();
        let values = xs.iter().map(|&x| self.eval(inner.eval(x))).collect();
        PLFunction { breaks: xs, values }
    }
}
