//! Boolean expressions over interval unions and Cantor-type generators, with
//! bracketed Lebesgue measure queries.
//!
//! A query on `[lo, hi]` is cut into cells at every interval endpoint and
//! generator base endpoint, so that inside each cell an interval leaf is
//! either full or empty. Generator leaves are "partial". When the expression
//! restricted to a cell depends on a single partial leaf, its measure follows
//! exactly from that leaf's own query. Otherwise Fréchet bounds are
//! propagated through the tree and the cell is bisected until the bracket is
//! narrow enough or the bisection budget runs out.

use super::intervals::IntervalUnion;
use super::svc::SvcSet;
use super::ubiquitous::UbiquitousSet;
use super::{moment_bounds, Mass, Membership};
use crate::bracket::Bracket;
use crate::error::{Error, Result};

const MAX_BISECT: u32 = 14;
const MAX_TRUTH_TABLE_VARS: usize = 12;

/// Leaves of the set algebra.
#[derive(Clone, Debug, PartialEq)]
pub enum Leaf {
    Intervals(IntervalUnion),
    Svc(SvcSet),
    Ubiquitous(UbiquitousSet),
}

impl Leaf {
    pub fn mass_in(&self, lo: f64, hi: f64, tol: f64) -> Mass {
        match self {
            Leaf::Intervals(u) => {
                let mut acc = Mass::ZERO;
                for &(a, b) in u.spans() {
                    let (x0, x1) = (a.max(lo), b.min(hi));
                    if x1 > x0 {
                        let m = x1 - x0;
                        acc = acc + Mass::exact(m, 0.5 * (x0 + x1) * m);
                    }
                }
                acc
            }
            Leaf::Svc(s) => s.mass_in(lo, hi, tol),
            Leaf::Ubiquitous(u) => u.mass_in(lo, hi, tol),
        }
    }

    pub fn contains(&self, x: f64, depth: u32) -> Membership {
        match self {
            Leaf::Intervals(u) => Membership::from_bool(u.contains(x)),
            Leaf::Svc(s) => s.contains(x, depth),
            Leaf::Ubiquitous(u) => u.contains(x, depth),
        }
    }

    fn outer(&self) -> IntervalUnion {
        match self {
            Leaf::Intervals(u) => u.clone(),
            Leaf::Svc(s) => IntervalUnion::single(s.base().0, s.base().1),
            Leaf::Ubiquitous(u) => IntervalUnion::single(u.base().0, u.base().1),
        }
    }

    fn full(&self) -> IntervalUnion {
        match self {
            Leaf::Intervals(u) => u.clone(),
            _ => IntervalUnion::empty(),
        }
    }

    fn dense(&self) -> IntervalUnion {
        match self {
            Leaf::Intervals(u) => u.clone(),
            Leaf::Svc(_) => IntervalUnion::empty(),
            Leaf::Ubiquitous(u) => IntervalUnion::single(u.base().0, u.base().1),
        }
    }

    fn cuts(&self) -> Vec<f64> {
        match self {
            Leaf::Intervals(u) => u.endpoints().collect(),
            Leaf::Svc(s) => vec![s.base().0, s.base().1],
            Leaf::Ubiquitous(u) => vec![u.base().0, u.base().1],
        }
    }

    /// Status inside an open cell that contains no cut point.
    fn status(&self, c0: f64, c1: f64) -> Status {
        let mid = 0.5 * (c0 + c1);
        match self {
            Leaf::Intervals(u) => {
                if u.contains(mid) {
                    Status::Full
                } else {
                    Status::Empty
                }
            }
            Leaf::Svc(s) => {
                let (a, b) = s.base();
                if mid > a && mid < b && s.measure() > 0.0 {
                    Status::Partial
                } else {
                    Status::Empty
                }
            }
            Leaf::Ubiquitous(u) => {
                let (a, b) = u.base();
                if mid > a && mid < b {
                    Status::Partial
                } else {
                    Status::Empty
                }
            }
        }
    }
}

/// A Borel subset of ℝ as an expression tree, understood up to null sets.
#[derive(Clone, Debug, PartialEq)]
pub enum MeasurableSubset {
    Empty,
    Leaf(Leaf),
    Union(Vec<MeasurableSubset>),
    Intersection(Vec<MeasurableSubset>),
    Difference(Box<MeasurableSubset>, Box<MeasurableSubset>),
}

impl MeasurableSubset {
    pub fn interval(a: f64, b: f64) -> Self {
        MeasurableSubset::Leaf(Leaf::Intervals(IntervalUnion::single(a, b)))
    }

    pub fn intervals<I: IntoIterator<Item = (f64, f64)>>(spans: I) -> Self {
        MeasurableSubset::Leaf(Leaf::Intervals(IntervalUnion::from_spans(spans)))
    }

    pub fn svc(s: SvcSet) -> Self {
        MeasurableSubset::Leaf(Leaf::Svc(s))
    }

    pub fn ubiquitous(u: UbiquitousSet) -> Self {
        MeasurableSubset::Leaf(Leaf::Ubiquitous(u))
    }

    pub fn union(parts: Vec<MeasurableSubset>) -> Self {
        MeasurableSubset::Union(parts)
    }

    pub fn intersection(parts: Vec<MeasurableSubset>) -> Self {
        MeasurableSubset::Intersection(parts)
    }

    pub fn difference(a: MeasurableSubset, b: MeasurableSubset) -> Self {
        MeasurableSubset::Difference(Box::new(a), Box::new(b))
    }

    pub fn is_syntactically_empty(&self) -> bool {
        match self {
            MeasurableSubset::Empty => true,
            MeasurableSubset::Leaf(Leaf::Intervals(u)) => u.is_empty(),
            MeasurableSubset::Union(v) => v.iter().all(|p| p.is_syntactically_empty()),
            MeasurableSubset::Intersection(v) => {
                v.is_empty() || v.iter().any(|p| p.is_syntactically_empty())
            }
            MeasurableSubset::Difference(a, _) => a.is_syntactically_empty(),
            _ => false,
        }
    }

    /// Region outside of which the set is certainly empty.
    pub fn outer_region(&self) -> IntervalUnion {
        match self {
            MeasurableSubset::Empty => IntervalUnion::empty(),
            MeasurableSubset::Leaf(l) => l.outer(),
            MeasurableSubset::Union(v) => v.iter().fold(IntervalUnion::empty(), |acc, p| {
                acc.union(&p.outer_region())
            }),
            MeasurableSubset::Intersection(v) => match v.split_first() {
                None => IntervalUnion::empty(),
                Some((first, rest)) => rest.iter().fold(first.outer_region(), |acc, p| {
                    acc.intersection(&p.outer_region())
                }),
            },
            MeasurableSubset::Difference(a, b) => a.outer_region().difference(&b.full_region()),
        }
    }

    /// Region on which the set is certainly of full measure.
    pub fn full_region(&self) -> IntervalUnion {
        match self {
            MeasurableSubset::Empty => IntervalUnion::empty(),
            MeasurableSubset::Leaf(l) => l.full(),
            MeasurableSubset::Union(v) => v
                .iter()
                .fold(IntervalUnion::empty(), |acc, p| acc.union(&p.full_region())),
            MeasurableSubset::Intersection(v) => match v.split_first() {
                None => IntervalUnion::empty(),
                Some((first, rest)) => rest.iter().fold(first.full_region(), |acc, p| {
                    acc.intersection(&p.full_region())
                }),
            },
            MeasurableSubset::Difference(a, b) => a.full_region().difference(&b.outer_region()),
        }
    }

    /// Open region on which the set is certified measure-dense: every
    /// subinterval of the region meets the set in positive measure.
    pub fn dense_region(&self) -> IntervalUnion {
        match self {
            MeasurableSubset::Empty => IntervalUnion::empty(),
            MeasurableSubset::Leaf(l) => l.dense(),
            MeasurableSubset::Union(v) => v.iter().fold(IntervalUnion::empty(), |acc, p| {
                acc.union(&p.dense_region())
            }),
            MeasurableSubset::Intersection(v) => match v.split_first() {
                None => IntervalUnion::empty(),
                Some((first, rest)) => {
                    let mut dense = first.dense_region();
                    let mut full = first.full_region();
                    for p in rest {
                        let (pd, pf) = (p.dense_region(), p.full_region());
                        dense = dense.intersection(&pf).union(&full.intersection(&pd));
                        full = full.intersection(&pf);
                    }
                    dense
                }
            },
            MeasurableSubset::Difference(a, b) => a.dense_region().difference(&b.outer_region()),
        }
    }

    /// Three-valued membership, opening generators to at most `depth` stages.
    pub fn contains(&self, x: f64, depth: u32) -> Membership {
        match self {
            MeasurableSubset::Empty => Membership::Out,
            MeasurableSubset::Leaf(l) => l.contains(x, depth),
            MeasurableSubset::Union(v) => v
                .iter()
                .fold(Membership::Out, |acc, p| acc.or(p.contains(x, depth))),
            MeasurableSubset::Intersection(v) => {
                if v.is_empty() {
                    return Membership::Out;
                }
                v.iter()
                    .fold(Membership::In, |acc, p| acc.and(p.contains(x, depth)))
            }
            MeasurableSubset::Difference(a, b) => {
                a.contains(x, depth).and(b.contains(x, depth).not())
            }
        }
    }

    /// Bracket of `|A ∩ [lo, hi]|`.
    pub fn measure_in(&self, lo: f64, hi: f64, tol: f64) -> Bracket {
        self.mass_in(lo, hi, tol).measure
    }

    /// Brackets of `|A ∩ [lo, hi]|` and `∫_{A ∩ [lo, hi]} x dx`.
    pub fn mass_in(&self, lo: f64, hi: f64, tol: f64) -> Mass {
        if !(hi > lo) {
            return Mass::ZERO;
        }
        let compiled = Compiled::new(self);
        compiled.mass_in(lo, hi, tol.max(1e-300))
    }

    /// Bracket of the total Lebesgue measure.
    pub fn lebesgue_measure(&self, tol: f64) -> Result<Bracket> {
        let Some((a, b)) = self.outer_region().hull() else {
            return Ok(Bracket::ZERO);
        };
        if !(a.is_finite() && b.is_finite()) {
            return Err(Error::Unbounded);
        }
        Ok(self.measure_in(a, b, tol))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Status {
    Empty,
    Full,
    Partial,
}

enum Node {
    Leaf(usize),
    Union(Vec<Node>),
    Inter(Vec<Node>),
    Diff(Box<Node>, Box<Node>),
}

struct Compiled<'a> {
    leaves: Vec<&'a Leaf>,
    root: Node,
}

impl<'a> Compiled<'a> {
    fn new(expr: &'a MeasurableSubset) -> Self {
        let mut leaves: Vec<&'a Leaf> = Vec::new();
        let root = Self::compile(expr, &mut leaves);
        Compiled { leaves, root }
    }

    fn compile(expr: &'a MeasurableSubset, leaves: &mut Vec<&'a Leaf>) -> Node {
        match expr {
            MeasurableSubset::Empty => Node::Union(Vec::new()),
            MeasurableSubset::Leaf(l) => {
                // structurally equal leaves share one variable
                let id = match leaves.iter().position(|x| *x == l) {
                    Some(i) => i,
                    None => {
                        leaves.push(l);
                        leaves.len() - 1
                    }
                };
                Node::Leaf(id)
            }
            MeasurableSubset::Union(v) => {
                Node::Union(v.iter().map(|p| Self::compile(p, leaves)).collect())
            }
            MeasurableSubset::Intersection(v) => {
                if v.is_empty() {
                    Node::Union(Vec::new())
                } else {
                    Node::Inter(v.iter().map(|p| Self::compile(p, leaves)).collect())
                }
            }
            MeasurableSubset::Difference(a, b) => Node::Diff(
                Box::new(Self::compile(a, leaves)),
                Box::new(Self::compile(b, leaves)),
            ),
        }
    }

    fn eval(node: &Node, value: &dyn Fn(usize) -> bool) -> bool {
        match node {
            Node::Leaf(i) => value(*i),
            Node::Union(v) => v.iter().any(|n| Self::eval(n, value)),
            Node::Inter(v) => v.iter().all(|n| Self::eval(n, value)),
            Node::Diff(a, b) => Self::eval(a, value) && !Self::eval(b, value),
        }
    }

    fn frechet(node: &Node, len: f64, leaf: &dyn Fn(usize) -> Bracket) -> Bracket {
        // rounding may push a bound an ulp past its partner
        let ordered = |lo: f64, hi: f64| Bracket::new(lo.min(hi), hi);
        match node {
            Node::Leaf(i) => {
                let b = leaf(*i);
                ordered(b.lo.clamp(0.0, len), b.hi.clamp(0.0, len))
            }
            Node::Union(v) => v.iter().fold(Bracket::ZERO, |acc, n| {
                let b = Self::frechet(n, len, leaf);
                ordered(acc.lo.max(b.lo), (acc.hi + b.hi).min(len))
            }),
            Node::Inter(v) => v.iter().fold(Bracket::exact(len), |acc, n| {
                let b = Self::frechet(n, len, leaf);
                ordered((acc.lo + b.lo - len).max(0.0), acc.hi.min(b.hi))
            }),
            Node::Diff(a, b) => {
                let a = Self::frechet(a, len, leaf);
                let b = Self::frechet(b, len, leaf);
                let bc = Bracket::new(len - b.hi, len - b.lo);
                ordered((a.lo + bc.lo - len).max(0.0), a.hi.min(bc.hi))
            }
        }
    }

    fn mass_in(&self, lo: f64, hi: f64, tol: f64) -> Mass {
        let mut cuts: Vec<f64> = vec![lo, hi];
        for l in &self.leaves {
            cuts.extend(l.cuts().into_iter().filter(|&x| x > lo && x < hi));
        }
        cuts.sort_by(f64::total_cmp);
        cuts.dedup();
        let ncells = (cuts.len() - 1).max(1) as f64;
        let tol_cell = tol / ncells;
        let mut acc = Mass::ZERO;
        for w in cuts.windows(2) {
            let (c0, c1) = (w[0], w[1]);
            if c1 <= c0 {
                continue;
            }
            let statuses: Vec<Status> = self.leaves.iter().map(|l| l.status(c0, c1)).collect();
            acc = acc + self.cell_mass(c0, c1, &statuses, tol_cell, 0);
        }
        acc
    }

    fn cell_mass(&self, c0: f64, c1: f64, statuses: &[Status], tol: f64, depth: u32) -> Mass {
        let len = c1 - c0;
        let full = Mass::exact(len, 0.5 * (c0 + c1) * len);
        let partial: Vec<usize> = (0..statuses.len())
            .filter(|&i| statuses[i] == Status::Partial)
            .collect();
        let eval_at = |assign: u64| {
            let values: Vec<bool> = statuses
                .iter()
                .enumerate()
                .map(|(i, st)| match st {
                    Status::Full => true,
                    Status::Empty => false,
                    Status::Partial => {
                        let k = partial.iter().position(|&p| p == i).unwrap();
                        (assign >> k) & 1 == 1
                    }
                })
                .collect();
            Self::eval(&self.root, &|i| values[i])
        };
        if partial.len() <= MAX_TRUTH_TABLE_VARS {
            let k = partial.len();
            let table: Vec<bool> = (0..(1u64 << k)).map(eval_at).collect();
            let depends: Vec<usize> = (0..k)
                .filter(|&v| (0..table.len()).any(|a| table[a] != table[a ^ (1 << v)]))
                .collect();
            match depends.as_slice() {
                [] => return if table[0] { full } else { Mass::ZERO },
                [v] => {
                    let leaf = self.leaves[partial[*v]].mass_in(c0, c1, 0.25 * tol);
                    let on = table[1 << v];
                    return if on {
                        leaf
                    } else {
                        Mass {
                            measure: (Bracket::exact(len) - leaf.measure).clamp(0.0, len),
                            moment: full.moment - leaf.moment,
                        }
                    };
                }
                _ => {}
            }
        }
        let per_leaf = 0.25 * tol / (partial.len().max(1) as f64);
        let leaf_brackets: Vec<Bracket> = (0..statuses.len())
            .map(|i| match statuses[i] {
                Status::Full => Bracket::exact(len),
                Status::Empty => Bracket::ZERO,
                Status::Partial => self.leaves[i]
                    .mass_in(c0, c1, per_leaf)
                    .measure
                    .clamp(0.0, len),
            })
            .collect();
        let m = Self::frechet(&self.root, len, &|i| leaf_brackets[i]);
        if m.width() <= tol || depth >= MAX_BISECT {
            return Mass {
                measure: m,
                moment: moment_bounds(c0, c1, m.lo, m.hi),
            };
        }
        let mid = 0.5 * (c0 + c1);
        self.cell_mass(c0, mid, statuses, 0.5 * tol, depth + 1)
            + self.cell_mass(mid, c1, statuses, 0.5 * tol, depth + 1)
    }
}
