//! Sets that meet every subinterval of their base in positive but not full
//! measure.
//!
//! `U(c, d; b)` is a fat Cantor set `K` on `[c, d]` keeping the fraction
//! `φ = 1 - sqrt(1 - b)` of the base, together with a copy `U(g; φ)` inside
//! every interval `g` removed from `K`. Then `|U| = (d - c) · b`, and the
//! complement inside every removed interval keeps positive measure because
//! the budgets shrink fast enough for `Π (1 - φ_k)` to stay positive.

use super::svc::{SvcSet, MAX_STAGE};
use super::{moment_bounds, Mass, Membership};
use crate::bracket::Bracket;
use crate::error::{Error, Result};

/// Nesting depth at which recursion into removed intervals stops.
const MAX_NESTING: u32 = 48;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct UbiquitousSet {
    c: f64,
    d: f64,
    budget: f64,
}

impl UbiquitousSet {
    pub fn new(c: f64, d: f64, budget: f64) -> Result<Self> {
        if !(c.is_finite() && d.is_finite() && c < d) {
            return Err(Error::InvalidSet(format!(
                "ubiquitous base ({c}, {d}) must be finite and nondegenerate"
            )));
        }
        if !(budget > 0.0 && budget < 1.0) {
            return Err(Error::InvalidSet(format!(
                "ubiquitous budget {budget} outside (0, 1)"
            )));
        }
        Ok(UbiquitousSet { c, d, budget })
    }

    pub fn base(&self) -> (f64, f64) {
        (self.c, self.d)
    }

    pub fn budget(&self) -> f64 {
        self.budget
    }

    pub fn len(&self) -> f64 {
        self.d - self.c
    }

    pub fn measure(&self) -> f64 {
        self.len() * self.budget
    }

    /// Budget of the copies placed in the removed intervals; also the kept
    /// fraction of the top-level Cantor kernel.
    fn sub_budget(&self) -> f64 {
        1.0 - (1.0 - self.budget).sqrt()
    }

    fn kernel(&self) -> SvcSet {
        SvcSet::with_kept_fraction(self.c, self.d, self.sub_budget())
            .expect("kernel parameters are valid")
    }

    fn child(&self, gap: (f64, f64)) -> UbiquitousSet {
        UbiquitousSet {
            c: gap.0,
            d: gap.1,
            budget: self.sub_budget(),
        }
    }

    /// Measure of `U` inside a stage-`n` interval of the kernel.
    fn block_measure(&self, kernel: &SvcSet, n: u32) -> f64 {
        let blen = kernel.block_len(n);
        let m = kernel.block_measure(n);
        m + (blen - m) * self.sub_budget()
    }

    pub fn contains(&self, x: f64, depth: u32) -> Membership {
        self.contains_rec(x, depth, 0)
    }

    fn contains_rec(&self, x: f64, depth: u32, nesting: u32) -> Membership {
        if x <= self.c || x >= self.d {
            return if x == self.c || x == self.d {
                Membership::In
            } else {
                Membership::Out
            };
        }
        if nesting >= MAX_NESTING {
            return Membership::Unknown;
        }
        let kernel = self.kernel();
        match kernel.locate(x, depth) {
            super::svc::SvcLocation::Outside => Membership::Out,
            super::svc::SvcLocation::Endpoint => Membership::In,
            super::svc::SvcLocation::Gap { stage, gap } => {
                if stage >= depth {
                    Membership::Unknown
                } else {
                    self.child(gap).contains_rec(x, depth - stage, nesting + 1)
                }
            }
            super::svc::SvcLocation::Block { .. } => Membership::Unknown,
        }
    }

    /// Measure and first moment of `U ∩ [lo, hi]`.
    pub fn mass_in(&self, lo: f64, hi: f64, tol: f64) -> Mass {
        if hi <= self.c || lo >= self.d || hi <= lo {
            return Mass::ZERO;
        }
        if lo <= self.c && self.d <= hi {
            let m = self.measure();
            return Mass::exact(m, 0.5 * (self.c + self.d) * m);
        }
        let mut acc = Mass::ZERO;
        self.mass_rec(lo, hi, 0.25 * tol, 0, &mut acc);
        acc
    }

    fn mass_rec(&self, lo: f64, hi: f64, tol: f64, nesting: u32, acc: &mut Mass) {
        let kernel = self.kernel();
        self.block_rec(&kernel, self.c, self.d, 0, lo, hi, tol, nesting, acc);
    }

    #[allow(clippy::too_many_arguments)]
    fn block_rec(
        &self,
        kernel: &SvcSet,
        x0: f64,
        x1: f64,
        n: u32,
        lo: f64,
        hi: f64,
        tol: f64,
        nesting: u32,
        acc: &mut Mass,
    ) {
        if x1 <= lo || x0 >= hi {
            return;
        }
        let m = self.block_measure(kernel, n);
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
        if n >= MAX_STAGE
            || nesting >= MAX_NESTING
            || ((mhi - mlo) <= tol && moment.width() <= tol * scale)
        {
            *acc = *acc
                + Mass {
                    measure: Bracket::new(mlo, mhi),
                    moment,
                };
            return;
        }
        let len = kernel.block_len(n + 1);
        let gap = (x0 + len, x1 - len);
        self.block_rec(kernel, x0, x0 + len, n + 1, lo, hi, tol, nesting, acc);
        if gap.1 > lo && gap.0 < hi {
            let child = self.child(gap);
            if lo <= gap.0 && gap.1 <= hi {
                let cm = child.measure();
                *acc = *acc + Mass::exact(cm, 0.5 * (gap.0 + gap.1) * cm);
            } else {
                child.mass_rec(lo, hi, tol, nesting + 1, acc);
            }
        }
        self.block_rec(kernel, x1 - len, x1, n + 1, lo, hi, tol, nesting, acc);
    }
}
