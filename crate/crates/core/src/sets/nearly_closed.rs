//! State spaces: sets `E ⊆ ℝ` such that `E ∪ {l, r}` is closed, where
//! `l = inf E` and `r = sup E`.

use serde::{Deserialize, Serialize};

use super::json::SetJson;
use super::subset::MeasurableSubset;
use super::svc::{SvcLocation, SvcSet, MAX_STAGE};
use super::{Mass, Membership};
use crate::bracket::Bracket;
use crate::error::{Error, Result};

/// One connected building block of a state space (or a Cantor-like block).
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Piece {
    /// Closed interval `[c, d]`, `c < d`; endpoints may be infinite.
    Interval(f64, f64),
    Point(f64),
    Svc(SvcSet),
}

impl Piece {
    pub fn left(&self) -> f64 {
        match *self {
            Piece::Interval(c, _) => c,
            Piece::Point(c) => c,
            Piece::Svc(s) => s.base().0,
        }
    }

    pub fn right(&self) -> f64 {
        match *self {
            Piece::Interval(_, d) => d,
            Piece::Point(c) => c,
            Piece::Svc(s) => s.base().1,
        }
    }

    pub fn measure(&self) -> f64 {
        match *self {
            Piece::Interval(c, d) => d - c,
            Piece::Point(_) => 0.0,
            Piece::Svc(s) => s.measure(),
        }
    }
}

/// Gaps of `I ∖ E` in decreasing length order, with a bound on the total
/// length of the gaps not listed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GapList {
    pub gaps: Vec<(f64, f64)>,
    pub tail: f64,
}

impl GapList {
    pub fn listed_length(&self) -> f64 {
        self.gaps.iter().map(|(a, b)| b - a).sum()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(into = "SetJson", try_from = "SetJson")]
pub struct NearlyClosedSet {
    pieces: Vec<Piece>,
    l_in_e: bool,
    r_in_e: bool,
}

impl NearlyClosedSet {
    pub fn new(pieces: Vec<Piece>, l_in_e: bool, r_in_e: bool) -> Result<Self> {
        if pieces.is_empty() {
            return Err(Error::InvalidSet(
                "state space needs at least one piece".into(),
            ));
        }
        for p in &pieces {
            match *p {
                Piece::Interval(c, d) => {
                    if c.is_nan()
                        || d.is_nan()
                        || !(c < d)
                        || c == f64::INFINITY
                        || d == f64::NEG_INFINITY
                    {
                        return Err(Error::InvalidSet(format!(
                            "interval piece [{c}, {d}] is not a proper interval"
                        )));
                    }
                }
                Piece::Point(c) => {
                    if !c.is_finite() {
                        return Err(Error::InvalidSet(format!("point piece {c} must be finite")));
                    }
                }
                Piece::Svc(_) => {}
            }
        }
        for w in pieces.windows(2) {
            if !(w[0].right() < w[1].left()) {
                return Err(Error::InvalidSet(format!(
                    "pieces ending at {} and starting at {} are not separated by a gap",
                    w[0].right(),
                    w[1].left()
                )));
            }
        }
        let l = pieces[0].left();
        let r = pieces[pieces.len() - 1].right();
        let l_in_e = l_in_e && l.is_finite();
        let r_in_e = r_in_e && r.is_finite();
        if l.is_finite() && !l_in_e && matches!(pieces[0], Piece::Point(_)) {
            return Err(Error::InvalidSet(format!(
                "excluding the isolated point {l} would change inf E"
            )));
        }
        if r.is_finite() && !r_in_e && matches!(pieces[pieces.len() - 1], Piece::Point(_)) {
            return Err(Error::InvalidSet(format!(
                "excluding the isolated point {r} would change sup E"
            )));
        }
        if pieces.len() == 1 && matches!(pieces[0], Piece::Point(_)) {
            return Err(Error::InvalidSet("a single point has l = r".into()));
        }
        Ok(NearlyClosedSet {
            pieces,
            l_in_e,
            r_in_e,
        })
    }

    /// Closed interval `[a, b]`.
    pub fn interval(a: f64, b: f64) -> Result<Self> {
        NearlyClosedSet::new(vec![Piece::Interval(a, b)], true, true)
    }

    /// Finite union of disjoint closed intervals given in increasing order.
    pub fn intervals(spans: &[(f64, f64)]) -> Result<Self> {
        NearlyClosedSet::new(
            spans.iter().map(|&(a, b)| Piece::Interval(a, b)).collect(),
            true,
            true,
        )
    }

    /// Finite set of points given in increasing order.
    pub fn points(xs: &[f64]) -> Result<Self> {
        NearlyClosedSet::new(xs.iter().map(|&x| Piece::Point(x)).collect(), true, true)
    }

    pub fn svc(s: SvcSet) -> Result<Self> {
        NearlyClosedSet::new(vec![Piece::Svc(s)], true, true)
    }

    /// Same pieces with the endpoint flags replaced.
    pub fn with_endpoints(&self, l_in_e: bool, r_in_e: bool) -> Result<Self> {
        NearlyClosedSet::new(self.pieces.clone(), l_in_e, r_in_e)
    }

    pub fn pieces(&self) -> &[Piece] {
        &self.pieces
    }

    pub fn l(&self) -> f64 {
        self.pieces[0].left()
    }

    pub fn r(&self) -> f64 {
        self.pieces[self.pieces.len() - 1].right()
    }

    pub fn l_in_e(&self) -> bool {
        self.l_in_e
    }

    pub fn r_in_e(&self) -> bool {
        self.r_in_e
    }

    pub fn is_bounded(&self) -> bool {
        self.l().is_finite() && self.r().is_finite()
    }

    /// `r - l`, or an error for unbounded `E`.
    pub fn hull_len(&self) -> Result<f64> {
        if !self.is_bounded() {
            return Err(Error::Unbounded);
        }
        Ok(self.r() - self.l())
    }

    pub fn is_nowhere_dense(&self) -> bool {
        !self.pieces.iter().any(|p| matches!(p, Piece::Interval(..)))
    }

    pub fn is_finite_union(&self) -> bool {
        !self.pieces.iter().any(|p| matches!(p, Piece::Svc(_)))
    }

    /// Nondegenerate interval pieces.
    pub fn interval_pieces(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.pieces.iter().filter_map(|p| match *p {
            Piece::Interval(c, d) => Some((c, d)),
            _ => None,
        })
    }

    /// Lebesgue measure of `E`; exact for every supported piece kind.
    pub fn lebesgue_measure(&self) -> Result<Bracket> {
        if !self.is_bounded() {
            return Err(Error::Unbounded);
        }
        Ok(Bracket::exact(
            self.pieces.iter().map(|p| p.measure()).sum(),
        ))
    }

    /// `E` as a measurable set (points are null and dropped).
    pub fn to_subset(&self) -> MeasurableSubset {
        let spans: Vec<(f64, f64)> = self.interval_pieces().collect();
        let mut parts = Vec::new();
        if !spans.is_empty() {
            parts.push(MeasurableSubset::intervals(spans));
        }
        for p in &self.pieces {
            if let Piece::Svc(s) = p {
                if s.is_fat() {
                    parts.push(MeasurableSubset::svc(*s));
                }
            }
        }
        match parts.len() {
            0 => MeasurableSubset::Empty,
            1 => parts.pop().unwrap(),
            _ => MeasurableSubset::union(parts),
        }
    }

    /// Measure and first moment of `E ∩ [lo, hi]`.
    pub fn mass_in(&self, lo: f64, hi: f64, tol: f64) -> Mass {
        let mut acc = Mass::ZERO;
        let n = self.pieces.len().max(1) as f64;
        for p in &self.pieces {
            match *p {
                Piece::Interval(c, d) => {
                    let (x0, x1) = (c.max(lo), d.min(hi));
                    if x1 > x0 {
                        let m = x1 - x0;
                        acc = acc + Mass::exact(m, 0.5 * (x0 + x1) * m);
                    }
                }
                Piece::Point(_) => {}
                Piece::Svc(s) => acc = acc + s.mass_in(lo, hi, tol / n),
            }
        }
        acc
    }

    pub fn contains(&self, x: f64, depth: u32) -> Membership {
        if x.is_nan() {
            return Membership::Out;
        }
        if x == self.l() && self.l().is_finite() {
            return Membership::from_bool(self.l_in_e);
        }
        if x == self.r() && self.r().is_finite() {
            return Membership::from_bool(self.r_in_e);
        }
        for p in &self.pieces {
            if x < p.left() {
                return Membership::Out;
            }
            if x <= p.right() {
                return match *p {
                    Piece::Interval(..) | Piece::Point(_) => Membership::In,
                    Piece::Svc(s) => s.contains(x, depth),
                };
            }
        }
        Membership::Out
    }

    /// The gap of `I ∖ E` containing `x`, if any. `x` in a generator block
    /// that stays unresolved after the deepest stage counts as a point of `E`.
    pub fn gap_containing(&self, x: f64) -> Option<(f64, f64)> {
        for (i, p) in self.pieces.iter().enumerate() {
            if x < p.left() {
                return if i == 0 {
                    None
                } else {
                    Some((self.pieces[i - 1].right(), p.left()))
                };
            }
            if x <= p.right() {
                return match *p {
                    Piece::Svc(s) => match s.locate(x, MAX_STAGE) {
                        SvcLocation::Gap { gap, .. } => Some(gap),
                        _ => None,
                    },
                    _ => None,
                };
            }
        }
        None
    }

    /// Point of `E` nearest to `x` on the left (inclusive), within generator
    /// resolution.
    pub fn floor_point(&self, x: f64) -> Option<f64> {
        if x < self.l() {
            return None;
        }
        match self.gap_containing(x) {
            Some((a, _)) => Some(a),
            None => {
                for (i, p) in self.pieces.iter().enumerate() {
                    if x < p.left() {
                        return Some(self.pieces[i - 1].right());
                    }
                    if x <= p.right() {
                        return Some(x);
                    }
                }
                Some(self.r())
            }
        }
    }

    /// Point of `E` nearest to `x` on the right (inclusive).
    pub fn ceil_point(&self, x: f64) -> Option<f64> {
        if x > self.r() {
            return None;
        }
        match self.gap_containing(x) {
            Some((_, b)) => Some(b),
            None => {
                if x < self.l() {
                    return Some(self.l());
                }
                Some(x)
            }
        }
    }

    /// Gaps of `I ∖ E`, longest first, up to `max_count` of them. The
    /// returned `tail` bounds the total length of the gaps left out; it must
    /// not exceed `tol`.
    pub fn gaps(&self, max_count: usize, tol: f64) -> Result<GapList> {
        let mut between: Vec<(f64, f64)> = self
            .pieces
            .windows(2)
            .map(|w| (w[0].right(), w[1].left()))
            .collect();
        between.sort_by(|x, y| {
            (y.1 - y.0)
                .total_cmp(&(x.1 - x.0))
                .then(x.0.total_cmp(&y.0))
        });
        // per generator: (set, stage, index within stage)
        let mut streams: Vec<(SvcSet, u32, u64)> = self
            .pieces
            .iter()
            .filter_map(|p| match p {
                Piece::Svc(s) => Some((*s, 1u32, 0u64)),
                _ => None,
            })
            .collect();
        let mut next_between = 0usize;
        let mut out = Vec::new();
        while out.len() < max_count {
            let mut best: Option<(f64, f64, Option<usize>)> = None;
            if let Some(&(a, b)) = between.get(next_between) {
                best = Some((b - a, a, None));
            }
            for (k, &(s, n, j)) in streams.iter().enumerate() {
                if n > MAX_STAGE {
                    continue;
                }
                let len = s.gap_len(n);
                let left = s.stage_gap(n, j).0;
                let better = match best {
                    None => true,
                    Some((bl, ba, _)) => len > bl || (len == bl && left < ba),
                };
                if better {
                    best = Some((len, left, Some(k)));
                }
            }
            match best {
                None => break,
                Some((_, _, None)) => {
                    out.push(between[next_between]);
                    next_between += 1;
                }
                Some((_, _, Some(k))) => {
                    let (s, n, j) = streams[k];
                    out.push(s.stage_gap(n, j));
                    streams[k] = if j + 1 < (1u64 << (n - 1).min(63)) {
                        (s, n, j + 1)
                    } else {
                        (s, n + 1, 0)
                    };
                }
            }
        }
        let mut tail: f64 = between[next_between..].iter().map(|(a, b)| b - a).sum();
        for &(s, n, j) in &streams {
            if n > MAX_STAGE {
                tail += s.tail_after_stage(MAX_STAGE);
                continue;
            }
            let remaining_in_stage = (2f64.powi(n as i32 - 1) - j as f64).max(0.0);
            tail += remaining_in_stage * s.gap_len(n) + s.tail_after_stage(n);
        }
        if tail > tol {
            return Err(Error::TolNotAchievable {
                tol,
                achieved: tail,
            });
        }
        Ok(GapList { gaps: out, tail })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gaps_of_finite_unions() {
        let e = NearlyClosedSet::intervals(&[(0.0, 1.0 / 3.0), (2.0 / 3.0, 1.0)]).unwrap();
        let g = e.gaps(10, 0.0).unwrap();
        assert_eq!(g.gaps, vec![(1.0 / 3.0, 2.0 / 3.0)]);
        assert_eq!(g.tail, 0.0);
        assert!(NearlyClosedSet::interval(0.0, 1.0)
            .unwrap()
            .gaps(5, 0.0)
            .unwrap()
            .gaps
            .is_empty());
    }

    #[test]
    fn generator_gaps_come_longest_first() {
        let e = NearlyClosedSet::svc(SvcSet::middle_fourths(0.0, 1.0).unwrap()).unwrap();
        let g = e.gaps(3, 1.0).unwrap();
        assert_eq!(g.gaps.len(), 3);
        assert!((g.gaps[0].0 - 0.375).abs() < 1e-15 && (g.gaps[0].1 - 0.625).abs() < 1e-15);
        assert!((g.gaps[1].0 - 5.0 / 32.0).abs() < 1e-15);
        assert!((g.gaps[2].1 - 27.0 / 32.0).abs() < 1e-15);
        // removed total is one half; listed 1/4 + 2/16
        assert!((g.tail - 0.125).abs() < 1e-14);
        assert!(matches!(
            e.gaps(3, 1e-3),
            Err(Error::TolNotAchievable { .. })
        ));
    }

    #[test]
    fn mixed_pieces_and_flags() {
        let k = SvcSet::middle_fourths(1.0, 2.0).unwrap();
        let e = NearlyClosedSet::new(vec![Piece::Point(0.0), Piece::Svc(k)], true, true).unwrap();
        assert!(e.is_nowhere_dense());
        assert_eq!(e.gaps(1, 1.0).unwrap().gaps, vec![(0.0, 1.0)]);
        let open = NearlyClosedSet::interval(0.0, 1.0)
            .unwrap()
            .with_endpoints(false, true)
            .unwrap();
        assert_eq!(open.contains(0.0, 0), Membership::Out);
        assert_eq!(open.contains(1.0, 0), Membership::In);
        assert!(NearlyClosedSet::points(&[0.0, 1.0])
            .unwrap()
            .with_endpoints(false, true)
            .is_err());
        assert!(NearlyClosedSet::intervals(&[(0.0, 1.0), (1.0, 2.0)]).is_err());
    }

    #[test]
    fn nearest_points() {
        let e = NearlyClosedSet::intervals(&[(0.0, 1.0), (2.0, 3.0)]).unwrap();
        assert_eq!(e.floor_point(1.5), Some(1.0));
        assert_eq!(e.ceil_point(1.5), Some(2.0));
        assert_eq!(e.floor_point(0.5), Some(0.5));
        assert_eq!(e.gap_containing(1.2), Some((1.0, 2.0)));
    }
}
