//! Smith–Volterra–Cantor generators.
//!
//! Stage `n ≥ 1` removes, from the middle of each of the `2^(n-1)` intervals
//! left by stage `n - 1`, an open interval of length `ρ_n · (b - a)`, where
//! `ρ_n = C · K^(-n)`. With `C = 1, K = 3` this is the middle-thirds Cantor
//! set; `C = 1, K = 4` is the classical fat Cantor set of measure one half.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::{moment_bounds, Mass, Membership};
use crate::bracket::Bracket;
use crate::error::{Error, Result};

/// Deepest stage the recursive queries will ever open.
pub(crate) const MAX_STAGE: u32 = 96;

/// Removal fractions `ρ_n = scale · base^(-n)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RemovalSchedule {
    pub scale: f64,
    pub base: f64,
}

impl RemovalSchedule {
    pub fn geometric(base: f64) -> Self {
        RemovalSchedule { scale: 1.0, base }
    }

    /// Schedule on base `4` whose generator keeps the fraction `kept` of its
    /// base interval.
    pub fn with_kept_fraction(kept: f64) -> Self {
        RemovalSchedule {
            scale: 2.0 * (1.0 - kept),
            base: 4.0,
        }
    }

    pub fn rho(&self, n: u32) -> f64 {
        self.scale * self.base.powi(-(n as i32))
    }

    /// Total removed length as a fraction of the base, `Σ 2^(n-1) ρ_n`.
    pub fn removed_fraction(&self) -> f64 {
        self.scale / (self.base - 2.0)
    }
}

impl fmt::Display for RemovalSchedule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.scale == 1.0 {
            write!(f, "{}^-n", self.base)
        } else {
            write!(f, "{}*{}^-n", self.scale, self.base)
        }
    }
}

impl FromStr for RemovalSchedule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || {
            Error::InvalidSet(format!(
                "bad removal schedule {s:?}, expected \"K^-n\" or \"C*K^-n\""
            ))
        };
        let s = s.trim();
        let (scale, rest) = match s.split_once('*') {
            Some((c, rest)) => (c.trim().parse::<f64>().map_err(|_| bad())?, rest.trim()),
            None => (1.0, s),
        };
        let base = rest.strip_suffix("^-n").ok_or_else(bad)?;
        let base = base.trim().parse::<f64>().map_err(|_| bad())?;
        Ok(RemovalSchedule { scale, base })
    }
}

impl Serialize for RemovalSchedule {
    fn serialize<S: Serializer>(&self, ser: S) -> std::result::Result<S::Ok, S::Error> {
        ser.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for RemovalSchedule {
    fn deserialize<D: Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(de)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// A Cantor-like closed set built on `[a, b]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SvcSet {
    a: f64,
    b: f64,
    schedule: RemovalSchedule,
}

impl SvcSet {
    pub fn new(a: f64, b: f64, schedule: RemovalSchedule) -> Result<Self> {
        if !(a.is_finite() && b.is_finite() && a < b) {
            return Err(Error::InvalidSet(format!(
                "generator base [{a}, {b}] must be a finite nondegenerate interval"
            )));
        }
        let RemovalSchedule { scale, base } = schedule;
        if !(scale > 0.0 && scale.is_finite() && base > 2.0 && base.is_finite()) {
            return Err(Error::InvalidSet(format!(
                "removal schedule {schedule} needs C > 0 and K > 2"
            )));
        }
        // Every stage interval keeps positive length iff the removal series
        // does not exceed the base length.
        if schedule.removed_fraction() > 1.0 + 1e-12 {
            return Err(Error::InvalidSet(format!(
                "removal schedule {schedule} removes more than the base interval"
            )));
        }
        Ok(SvcSet { a, b, schedule })
    }

    /// Middle-thirds Cantor set on `[a, b]`.
    pub fn middle_thirds(a: f64, b: f64) -> Result<Self> {
        SvcSet::new(a, b, RemovalSchedule::geometric(3.0))
    }

    /// Middle-fourths fat Cantor set on `[a, b]` (measure `(b - a) / 2`).
    pub fn middle_fourths(a: f64, b: f64) -> Result<Self> {
        SvcSet::new(a, b, RemovalSchedule::geometric(4.0))
    }

    /// Fat Cantor set keeping the fraction `kept ∈ [0, 1)` of its base.
    pub fn with_kept_fraction(a: f64, b: f64, kept: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&kept) {
            return Err(Error::InvalidSet(format!(
                "kept fraction {kept} outside [0, 1)"
            )));
        }
        SvcSet::new(a, b, RemovalSchedule::with_kept_fraction(kept))
    }

    pub fn base(&self) -> (f64, f64) {
        (self.a, self.b)
    }

    pub fn schedule(&self) -> RemovalSchedule {
        self.schedule
    }

    pub fn len(&self) -> f64 {
        self.b - self.a
    }

    fn removed_fraction(&self) -> f64 {
        self.schedule.removed_fraction().min(1.0)
    }

    /// Fraction of the base interval kept in the limit set.
    pub fn kept_fraction(&self) -> f64 {
        (1.0 - self.removed_fraction()).max(0.0)
    }

    /// Lebesgue measure of the limit set.
    pub fn measure(&self) -> f64 {
        self.len() * self.kept_fraction()
    }

    pub fn is_fat(&self) -> bool {
        self.kept_fraction() > 0.0
    }

    /// Length of each of the `2^n` closed intervals left after stage `n`.
    pub fn block_len(&self, n: u32) -> f64 {
        let r = self.removed_fraction();
        let q2 = 2.0 / self.schedule.base;
        let scaled = (1.0 - r) + r * q2.powi(n as i32);
        self.len() * scaled * 0.5f64.powi(n as i32)
    }

    /// Measure of the limit set inside one stage-`n` interval.
    pub fn block_measure(&self, n: u32) -> f64 {
        self.measure() * 0.5f64.powi(n as i32)
    }

    /// Length of each interval removed at stage `n ≥ 1`.
    pub fn gap_len(&self, n: u32) -> f64 {
        self.block_len(n - 1) - 2.0 * self.block_len(n)
    }

    /// Total length of all intervals removed after stage `n`.
    pub fn tail_after_stage(&self, n: u32) -> f64 {
        let q2 = 2.0 / self.schedule.base;
        self.len() * self.removed_fraction() * q2.powi(n as i32)
    }

    /// Left endpoint of the `j`-th stage-`n` interval (left to right).
    pub fn block_left(&self, n: u32, j: u64) -> f64 {
        let mut x = self.a;
        for k in 1..=n {
            if (j >> (n - k)) & 1 == 1 {
                x += self.block_len(k - 1) - self.block_len(k);
            }
        }
        x
    }

    /// The `2^n` closed intervals left after stage `n`.
    pub fn stage_blocks(&self, n: u32) -> Vec<(f64, f64)> {
        let mut blocks = vec![(self.a, self.b)];
        for k in 1..=n {
            let len = self.block_len(k);
            let mut next = Vec::with_capacity(blocks.len() * 2);
            for &(x0, x1) in &blocks {
                next.push((x0, x0 + len));
                next.push((x1 - len, x1));
            }
            blocks = next;
        }
        blocks
    }

    /// The `2^(n-1)` open intervals removed at stage `n ≥ 1`, left to right.
    pub fn stage_gaps(&self, n: u32) -> Vec<(f64, f64)> {
        assert!(n >= 1);
        let len = self.block_len(n);
        self.stage_blocks(n - 1)
            .into_iter()
            .map(|(x0, x1)| (x0 + len, x1 - len))
            .collect()
    }

    /// The `j`-th open interval removed at stage `n ≥ 1`.
    pub fn stage_gap(&self, n: u32, j: u64) -> (f64, f64) {
        let x0 = self.block_left(n - 1, j);
        let x1 = x0 + self.block_len(n - 1);
        let len = self.block_len(n);
        (x0 + len, x1 - len)
    }

    /// Membership of `x`, opening at most `depth` stages.
    pub fn contains(&self, x: f64, depth: u32) -> Membership {
        if x < self.a || x > self.b {
            return Membership::Out;
        }
        let (mut x0, mut x1) = (self.a, self.b);
        for n in 1..=depth.min(MAX_STAGE) {
            if x == x0 || x == x1 {
                return Membership::In;
            }
            let len = self.block_len(n);
            if x <= x0 + len {
                x1 = x0 + len;
            } else if x >= x1 - len {
                x0 = x1 - len;
            } else {
                return Membership::Out;
            }
        }
        if x == x0 || x == x1 {
            Membership::In
        } else {
            Membership::Unknown
        }
    }

    /// Where `x` sits relative to the removed intervals, opening at most
    /// `depth` stages: inside a removed interval (with its stage), or inside a
    /// stage-`depth` interval that was not resolved further.
    pub fn locate(&self, x: f64, depth: u32) -> SvcLocation {
        if x < self.a || x > self.b {
            return SvcLocation::Outside;
        }
        let (mut x0, mut x1) = (self.a, self.b);
        for n in 1..=depth.min(MAX_STAGE) {
            if x == x0 || x == x1 {
                return SvcLocation::Endpoint;
            }
            let len = self.block_len(n);
            if x <= x0 + len {
                x1 = x0 + len;
            } else if x >= x1 - len {
                x0 = x1 - len;
            } else {
                return SvcLocation::Gap {
                    stage: n,
                    gap: (x0 + len, x1 - len),
                };
            }
        }
        if x == x0 || x == x1 {
            SvcLocation::Endpoint
        } else {
            SvcLocation::Block {
                stage: depth.min(MAX_STAGE),
                block: (x0, x1),
            }
        }
    }

    /// Measure and first moment of `self ∩ [lo, hi]`, each enclosed to
    /// roughly `tol`.
    pub fn mass_in(&self, lo: f64, hi: f64, tol: f64) -> Mass {
        if hi <= self.a || lo >= self.b || hi <= lo {
            return Mass::ZERO;
        }
        let mut acc = Mass::ZERO;
        self.mass_rec(self.a, self.b, 0, lo, hi, 0.5 * tol, &mut acc);
        acc
    }

    #[allow(clippy::too_many_arguments)]
    fn mass_rec(&self, x0: f64, x1: f64, n: u32, lo: f64, hi: f64, tol: f64, acc: &mut Mass) {
        if x1 <= lo || x0 >= hi {
            return;
        }
        let m = self.block_measure(n);
        if lo <= x0 && x1 <= hi {
            *acc = *acc + Mass::exact(m, 0.5 * (x0 + x1) * m);
            return;
        }
        let (o0, o1) = (x0.max(lo), x1.min(hi));
        let blen = x1 - x0;
        let overlap = o1 - o0;
        let mhi = m.min(overlap);
        let mlo = (m - (blen - overlap)).max(0.0).min(mhi);
        let moment = moment_bounds(o0, o1, mlo, mhi);
        let scale = 1.0f64.max(o0.abs()).max(o1.abs());
        if n >= MAX_STAGE || ((mhi - mlo) <= tol && moment.width() <= tol * scale) {
            *acc = *acc
                + Mass {
                    measure: Bracket::new(mlo, mhi),
                    moment,
                };
            return;
        }
        let len = self.block_len(n + 1);
        self.mass_rec(x0, x0 + len, n + 1, lo, hi, tol, acc);
        self.mass_rec(x1 - len, x1, n + 1, lo, hi, tol, acc);
    }
}

/// Result of [`SvcSet::locate`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SvcLocation {
    Outside,
    Endpoint,
    Gap { stage: u32, gap: (f64, f64) },
    Block { stage: u32, block: (f64, f64) },
}
