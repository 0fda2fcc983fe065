//! Closed real intervals used as certified enclosures of quantities that are
//! only known up to a truncation or measure-query tolerance.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

/// An enclosure `[lo, hi]` of a real number.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Bracket {
    pub lo: f64,
    pub hi: f64,
}

impl Bracket {
    pub const ZERO: Bracket = Bracket { lo: 0.0, hi: 0.0 };

    pub fn new(lo: f64, hi: f64) -> Self {
        debug_assert!(!(lo > hi), "inverted bracket [{lo}, {hi}]");
        Bracket { lo, hi }
    }

    /// Degenerate bracket holding an exactly known value.
    pub fn exact(x: f64) -> Self {
        Bracket { lo: x, hi: x }
    }

    /// `[center - radius, center + radius]`.
    pub fn around(center: f64, radius: f64) -> Self {
        let r = radius.abs();
        Bracket {
            lo: center - r,
            hi: center + r,
        }
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn mid(&self) -> f64 {
        if self.lo == self.hi {
            self.lo
        } else {
            0.5 * (self.lo + self.hi)
        }
    }

    pub fn radius(&self) -> f64 {
        0.5 * self.width()
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    /// True when `x` lies in the bracket widened by `slack` on both sides.
    pub fn contains_within(&self, x: f64, slack: f64) -> bool {
        self.lo - slack <= x && x <= self.hi + slack
    }

    pub fn is_exact(&self) -> bool {
        self.lo == self.hi
    }

    pub fn overlaps(&self, other: &Bracket) -> bool {
        self.lo <= other.hi && other.lo <= self.hi
    }

    pub fn hull(&self, other: &Bracket) -> Bracket {
        Bracket {
            lo: self.lo.min(other.lo),
            hi: self.hi.max(other.hi),
        }
    }

    pub fn widen(&self, eps: f64) -> Bracket {
        Bracket {
            lo: self.lo - eps,
            hi: self.hi + eps,
        }
    }

    pub fn scale(&self, k: f64) -> Bracket {
        if k >= 0.0 {
            Bracket {
                lo: self.lo * k,
                hi: self.hi * k,
            }
        } else {
            Bracket {
                lo: self.hi * k,
                hi: self.lo * k,
            }
        }
    }

    /// Clamp both ends into `[lo, hi]`; used for quantities with known a
    /// priori bounds such as a measure inside a cell.
    pub fn clamp(&self, lo: f64, hi: f64) -> Bracket {
        let a = self.lo.max(lo).min(hi);
        let b = self.hi.min(hi).max(lo);
        Bracket {
            lo: a.min(b),
            hi: b.max(a),
        }
    }

    pub fn abs_upper(&self) -> f64 {
        self.lo.abs().max(self.hi.abs())
    }

    /// Quotient by a bracket bounded away from zero.
    pub fn div(&self, d: &Bracket) -> Option<Bracket> {
        if d.lo <= 0.0 && d.hi >= 0.0 {
            return None;
        }
        let inv = Bracket::new(1.0 / d.hi, 1.0 / d.lo);
        Some(*self * inv)
    }

    pub fn sum<I: IntoIterator<Item = Bracket>>(items: I) -> Bracket {
        items.into_iter().fold(Bracket::ZERO, |a, b| a + b)
    }
}

impl From<f64> for Bracket {
    fn from(x: f64) -> Self {
        Bracket::exact(x)
    }
}

impl Add for Bracket {
    type Output = Bracket;
    fn add(self, rhs: Bracket) -> Bracket {
        Bracket {
            lo: self.lo + rhs.lo,
            hi: self.hi + rhs.hi,
        }
    }
}

impl Sub for Bracket {
    type Output = Bracket;
    fn sub(self, rhs: Bracket) -> Bracket {
        Bracket {
            lo: self.lo - rhs.hi,
            hi: self.hi - rhs.lo,
        }
    }
}

impl Neg for Bracket {
    type Output = Bracket;
    fn neg(self) -> Bracket {
        Bracket {
            lo: -self.hi,
            hi: -self.lo,
        }
    }
}

impl Mul for Bracket {
    type Output = Bracket;
    fn mul(self, rhs: Bracket) -> Bracket {
        if self.is_exact() && rhs.is_exact() {
            return Bracket::exact(self.lo * rhs.lo);
        }
        let c = [
            self.lo * rhs.lo,
            self.lo * rhs.hi,
            self.hi * rhs.lo,
            self.hi * rhs.hi,
        ];
        let lo = c.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = c.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Bracket { lo, hi }
    }
}

impl Mul<f64> for Bracket {
    type Output = Bracket;
    fn mul(self, k: f64) -> Bracket {
        self.scale(k)
    }
}

impl fmt::Display for Bracket {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_exact() {
            write!(f, "{}", self.lo)
        } else {
            write!(f, "{} ± {:.3e}", self.mid(), self.radius())
        }
    }
}
