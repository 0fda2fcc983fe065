//! Finite unions of closed intervals, treated up to finitely many points.

use serde::{Deserialize, Serialize};

/// Sorted, merged list of closed intervals `[a, b]` with `a <= b`.
/// Degenerate intervals (points) are kept so membership stays exact.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct IntervalUnion {
    spans: Vec<(f64, f64)>,
}

impl IntervalUnion {
    pub fn empty() -> Self {
        IntervalUnion { spans: Vec::new() }
    }

    pub fn from_spans<I: IntoIterator<Item = (f64, f64)>>(spans: I) -> Self {
        let mut v: Vec<(f64, f64)> = spans.into_iter().filter(|(a, b)| a <= b).collect();
        v.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.total_cmp(&y.1)));
        let mut out: Vec<(f64, f64)> = Vec::with_capacity(v.len());
        for (a, b) in v {
            match out.last_mut() {
                Some(last) if a <= last.1 => last.1 = last.1.max(b),
                _ => out.push((a, b)),
            }
        }
        IntervalUnion { spans: out }
    }

    pub fn single(a: f64, b: f64) -> Self {
        IntervalUnion::from_spans([(a, b)])
    }

    pub fn spans(&self) -> &[(f64, f64)] {
        &self.spans
    }

    pub fn is_empty(&self) -> bool {
        self.spans.is_empty()
    }

    /// Nondegenerate spans only.
    pub fn proper_spans(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.spans.iter().copied().filter(|(a, b)| a < b)
    }

    pub fn total_length(&self) -> f64 {
        self.spans.iter().map(|(a, b)| b - a).sum()
    }

    pub fn contains(&self, x: f64) -> bool {
        self.spans.iter().any(|&(a, b)| a <= x && x <= b)
    }

    pub fn hull(&self) -> Option<(f64, f64)> {
        Some((self.spans.first()?.0, self.spans.last()?.1))
    }

    pub fn length_in(&self, lo: f64, hi: f64) -> f64 {
        self.spans
            .iter()
            .map(|&(a, b)| (b.min(hi) - a.max(lo)).max(0.0))
            .sum()
    }

    pub fn union(&self, other: &IntervalUnion) -> IntervalUnion {
        IntervalUnion::from_spans(self.spans.iter().chain(other.spans.iter()).copied())
    }

    pub fn intersection(&self, other: &IntervalUnion) -> IntervalUnion {
        let mut out = Vec::new();
        for &(a, b) in &self.spans {
            for &(c, d) in &other.spans {
                let (lo, hi) = (a.max(c), b.min(d));
                if lo <= hi {
                    out.push((lo, hi));
                }
            }
        }
        IntervalUnion::from_spans(out)
    }

    /// Set difference up to endpoints: the closure of `self ∖ other`, with
    /// degenerate leftovers dropped.
    pub fn difference(&self, other: &IntervalUnion) -> IntervalUnion {
        let mut cur: Vec<(f64, f64)> = self.spans.clone();
        for &(c, d) in other.proper_spans().collect::<Vec<_>>().iter() {
            let mut next = Vec::with_capacity(cur.len() + 1);
            for (a, b) in cur {
                if d <= a || c >= b {
                    next.push((a, b));
                    continue;
                }
                if a < c {
                    next.push((a, c));
                }
                if d < b {
                    next.push((d, b));
                }
            }
            cur = next;
        }
        IntervalUnion::from_spans(cur.into_iter().filter(|(a, b)| a < b))
    }

    /// True when `(lo, hi)` is covered by the union, up to finitely many points.
    pub fn covers(&self, lo: f64, hi: f64) -> bool {
        IntervalUnion::single(lo, hi).difference(self).is_empty()
    }

    pub fn endpoints(&self) -> impl Iterator<Item = f64> + '_ {
        self.spans.iter().flat_map(|&(a, b)| [a, b])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normalizes_and_merges() {
        let u = IntervalUnion::from_spans([(2.0, 3.0), (0.0, 1.0), (0.5, 2.0)]);
        assert_eq!(u.spans(), &[(0.0, 3.0)]);
    }

    #[test]
    fn difference_and_cover() {
        let u = IntervalUnion::single(0.0, 1.0);
        let d = u.difference(&IntervalUnion::from_spans([(0.25, 0.5)]));
        assert_eq!(d.spans(), &[(0.0, 0.25), (0.5, 1.0)]);
        assert!(d.union(&IntervalUnion::single(0.25, 0.5)).covers(0.0, 1.0));
        assert!(!d.covers(0.0, 1.0));
        assert_eq!(
            u.intersection(&IntervalUnion::single(0.5, 2.0)).spans(),
            &[(0.5, 1.0)]
        );
    }
}
