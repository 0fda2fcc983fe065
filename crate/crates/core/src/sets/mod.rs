//! Nearly closed subsets of ℝ and the measurable sets used as characteristic
//! sets.

mod intervals;
mod json;
mod nearly_closed;
mod subset;
mod svc;
mod ubiquitous;

use std::ops::Add;

use serde::{Deserialize, Serialize};

use crate::bracket::Bracket;

pub use intervals::IntervalUnion;
pub use json::{ExtReal, PieceJson, SetJson, SetOrPiece};
pub use nearly_closed::{GapList, NearlyClosedSet, Piece};
pub use subset::{Leaf, MeasurableSubset};
pub use svc::{RemovalSchedule, SvcLocation, SvcSet};
pub use ubiquitous::UbiquitousSet;

/// Three-valued membership answer.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Membership {
    In,
    Out,
    Unknown,
}

impl Membership {
    pub fn from_bool(b: bool) -> Self {
        if b {
            Membership::In
        } else {
            Membership::Out
        }
    }

    pub fn or(self, other: Membership) -> Membership {
        use Membership::*;
        match (self, other) {
            (In, _) | (_, In) => In,
            (Out, Out) => Out,
            _ => Unknown,
        }
    }

    pub fn and(self, other: Membership) -> Membership {
        use Membership::*;
        match (self, other) {
            (Out, _) | (_, Out) => Out,
            (In, In) => In,
            _ => Unknown,
        }
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(self) -> Membership {
        match self {
            Membership::In => Membership::Out,
            Membership::Out => Membership::In,
            Membership::Unknown => Membership::Unknown,
        }
    }
}

/// Bracketed Lebesgue measure `|S|` and first moment `∫_S x dx`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Mass {
    pub measure: Bracket,
    pub moment: Bracket,
}

impl Mass {
    pub const ZERO: Mass = Mass {
        measure: Bracket::ZERO,
        moment: Bracket::ZERO,
    };

    pub fn exact(measure: f64, moment: f64) -> Self {
        Mass {
            measure: Bracket::exact(measure),
            moment: Bracket::exact(moment),
        }
    }
}

impl Add for Mass {
    type Output = Mass;

    fn add(self, o: Mass) -> Mass {
        Mass {
            measure: self.measure + o.measure,
            moment: self.moment + o.moment,
        }
    }
}

/// Range of `∫_S x dx` over measurable `S ⊆ [o0, o1]` with `|S| ∈ [mlo, mhi]`.
///
/// For fixed `|S| = m` the moment lies between `m (o0 + m/2)` (mass packed on
/// the left) and `m (o1 - m/2)` (packed on the right).
pub(crate) fn moment_bounds(o0: f64, o1: f64, mlo: f64, mhi: f64) -> Bracket {
    let left = |m: f64| m * (o0 + 0.5 * m);
    let right = |m: f64| m * (o1 - 0.5 * m);
    // rounding can leave the mass bounds a few ulps out of order
    let mhi = mhi.max(mlo);
    let m_min = (-o0).clamp(mlo, mhi);
    let m_max = o1.clamp(mlo, mhi);
    Bracket::new(left(m_min), right(m_max))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn moment_bounds_contain_extremes() {
        let b = moment_bounds(0.0, 1.0, 0.5, 0.5);
        assert!((b.lo - 0.125).abs() < 1e-15 && (b.hi - 0.375).abs() < 1e-15);
        let c = moment_bounds(-2.0, -1.0, 0.0, 1.0);
        assert!(c.contains(-1.5) && c.contains(0.0));
    }

    #[test]
    fn kleene_logic() {
        use Membership::*;
        assert_eq!(Unknown.or(In), In);
        assert_eq!(Unknown.and(Out), Out);
        assert_eq!(Unknown.and(In), Unknown);
        assert_eq!(Unknown.not(), Unknown);
    }
}
