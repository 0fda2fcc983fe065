//! Scale functions on a state space, their extension across gaps, the
//! admissible family with slopes in `{0, 1}`, and the defect measure
//! `(s̄'² - s̄') dx`.

use serde::{Deserialize, Serialize};

use crate::bracket::Bracket;
use crate::error::{Error, Result};
use crate::pl::PLFunction;
use crate::sets::{IntervalUnion, MeasurableSubset, Membership, NearlyClosedSet};

/// `f` with every gap of `E` that contains one of its breakpoints replaced
/// by the chord between the gap's endpoints.
pub fn affine_across_gaps(e: &NearlyClosedSet, f: &PLFunction) -> PLFunction {
    let mut gaps: Vec<(f64, f64)> = f
        .breaks()
        .iter()
        .filter_map(|&b| e.gap_containing(b))
        .collect();
    gaps.sort_by(|x, y| x.0.total_cmp(&y.0));
    gaps.dedup();
    if gaps.is_empty() {
        return f.clone();
    }
    let inside = |x: f64| gaps.iter().any(|&(a, b)| a < x && x < b);
    let mut xs: Vec<f64> = f.breaks().iter().copied().filter(|&x| !inside(x)).collect();
    for &(a, b) in &gaps {
        xs.push(a);
        xs.push(b);
    }
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    let values = xs.iter().map(|&x| f.eval(x)).collect();
    PLFunction::new(xs, values).expect("sorted finite breakpoints")
}

/// Checks that `G ∪ (I ∖ E)` meets every open subinterval of `I` in
/// positive measure.
pub fn certify_measure_dense(e: &NearlyClosedSet, g: &MeasurableSubset) -> Result<()> {
    let dense = g.dense_region();
    let outer = g.outer_region();
    for (c, d) in e.interval_pieces() {
        if !(c.is_finite() && d.is_finite()) {
            if dense.covers(c.max(-1e300), d.min(1e300)) {
                continue;
            }
            return Err(Error::Undecided);
        }
        let uncovered = IntervalUnion::single(c, d).difference(&dense);
        for (u0, u1) in uncovered.proper_spans() {
            let empty = IntervalUnion::single(u0, u1).difference(&outer);
            if let Some((w0, w1)) = empty.proper_spans().next() {
                return Err(Error::NotMeasureDense(w0, w1));
            }
            // generator-backed parts: look for a dyadic subinterval of zero measure
            let mut parts = 1usize;
            let mut found = None;
            'search: for _ in 0..12 {
                parts *= 2;
                let h = (u1 - u0) / parts as f64;
                for i in 0..parts {
                    let (a, b) = (u0 + i as f64 * h, u0 + (i + 1) as f64 * h);
                    if g.measure_in(a, b, 1e-3 * h).hi <= 0.0 {
                        found = Some((a, b));
                        break 'search;
                    }
                }
            }
            if let Some((a, b)) = found {
                return Err(Error::NotMeasureDense(a, b));
            }
            return Err(Error::Undecided);
        }
    }
    Ok(())
}

/// The three representable kinds of scale function.
#[derive(Clone, Debug, PartialEq)]
pub enum ScaleKind {
    /// `s(x) = x`.
    Natural,
    /// `s(x) = value + ∫_anchor^x 1_{G ∪ (I∖E)}`.
    Charset {
        g: MeasurableSubset,
        anchor: f64,
        value: f64,
    },
    /// Nondecreasing piecewise-linear `s`; the stored function is already
    /// affine across every gap of `E`.
    Pl(PLFunction),
}

/// JSON form of a scale; the state space is supplied separately.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "lowercase")]
pub enum ScaleSpec {
    Natural,
    Charset {
        #[serde(rename = "G")]
        g: MeasurableSubset,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        anchor: Option<(f64, f64)>,
    },
    Pl {
        breaks: Vec<f64>,
        values: Vec<f64>,
    },
}

/// Answer of the admissibility test.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verdict", content = "witness", rename_all = "lowercase")]
pub enum Admissible {
    Yes,
    No(String),
    Unknown(String),
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScaleFunction {
    e: NearlyClosedSet,
    kind: ScaleKind,
}

/// The scale extended affinely across the gaps of its state space.
#[derive(Clone, Debug, PartialEq)]
pub struct ExtendedScale {
    scale: ScaleFunction,
}

impl ExtendedScale {
    pub fn eval(&self, x: f64, tol: f64) -> Bracket {
        self.scale.eval(x, tol)
    }

    /// Slope on the gap `(a, b)`.
    pub fn gap_slope(&self, a: f64, b: f64, tol: f64) -> Bracket {
        let ds = self.scale.eval(b, tol) - self.scale.eval(a, tol);
        ds.scale(1.0 / (b - a))
    }

    /// `s̄` as a piecewise-linear function, when it is one.
    pub fn as_pl(&self) -> Option<PLFunction> {
        self.scale.as_pl()
    }
}

/// Default anchor: `l` when it is finite and in `E`, else the leftmost
/// point available.
fn default_anchor(e: &NearlyClosedSet) -> f64 {
    if e.l().is_finite() && e.l_in_e() {
        return e.l();
    }
    match e.pieces()[0] {
        crate::sets::Piece::Interval(c, d) => {
            if c.is_finite() {
                // inside the first piece, away from the excluded endpoint
                if d.is_finite() {
                    0.5 * (c + d)
                } else {
                    c + 1.0
                }
            } else if d.is_finite() {
                d
            } else {
                0.0
            }
        }
        p => p.left(),
    }
}

impl ScaleFunction {
    pub fn natural(e: &NearlyClosedSet) -> Self {
        ScaleFunction {
            e: e.clone(),
            kind: ScaleKind::Natural,
        }
    }

    /// Scale with characteristic set `G`, anchored so that `s(anchor) = 0`.
    /// Fails unless `G ⊆ E` a.e. and `G ∪ (I∖E)` is measure-dense.
    pub fn from_charset(
        e: &NearlyClosedSet,
        g: MeasurableSubset,
        anchor: Option<f64>,
        tol: f64,
    ) -> Result<Self> {
        let anchor = anchor.unwrap_or_else(|| default_anchor(e));
        if e.contains(anchor, 64) == Membership::Out {
            return Err(Error::InvalidScale(format!(
                "anchor {anchor} is not a point of E"
            )));
        }
        if e.is_bounded() {
            let outside = MeasurableSubset::difference(g.clone(), e.to_subset());
            let (l, r) = match g.outer_region().hull() {
                Some(h) => h,
                None => (e.l(), e.r()),
            };
            if outside.measure_in(l.max(-1e300), r.min(1e300), tol).lo > 0.0 {
                return Err(Error::InvalidScale(
                    "characteristic set is not contained in E".into(),
                ));
            }
        }
        certify_measure_dense(e, &g)?;
        Ok(ScaleFunction {
            e: e.clone(),
            kind: ScaleKind::Charset {
                g,
                anchor,
                value: 0.0,
            },
        })
    }

    /// Piecewise-linear scale; must be nondecreasing on the hull of `E`.
    pub fn general_pl(e: &NearlyClosedSet, s: PLFunction) -> Result<Self> {
        let ext = affine_across_gaps(e, &s);
        for (x0, x1, v0, v1) in ext.pieces() {
            if x1 > e.l() && x0 < e.r() && v1 < v0 {
                return Err(Error::InvalidScale(format!(
                    "scale decreases on ({x0}, {x1})"
                )));
            }
        }
        Ok(ScaleFunction {
            e: e.clone(),
            kind: ScaleKind::Pl(ext),
        })
    }

    pub fn from_spec(e: &NearlyClosedSet, spec: &ScaleSpec, tol: f64) -> Result<Self> {
        match spec {
            ScaleSpec::Natural => Ok(ScaleFunction::natural(e)),
            ScaleSpec::Charset { g, anchor } => {
                let mut s = ScaleFunction::from_charset(e, g.clone(), anchor.map(|a| a.0), tol)?;
                if let (Some((_, v)), ScaleKind::Charset { value, .. }) = (anchor, &mut s.kind) {
                    *value = *v;
                }
                Ok(s)
            }
            ScaleSpec::Pl { breaks, values } => {
                ScaleFunction::general_pl(e, PLFunction::new(breaks.clone(), values.clone())?)
            }
        }
    }

    pub fn to_spec(&self) -> ScaleSpec {
        match &self.kind {
            ScaleKind::Natural => ScaleSpec::Natural,
            ScaleKind::Charset { g, anchor, value } => ScaleSpec::Charset {
                g: g.clone(),
                anchor: Some((*anchor, *value)),
            },
            ScaleKind::Pl(p) => ScaleSpec::Pl {
                breaks: p.breaks().to_vec(),
                values: p.values().to_vec(),
            },
        }
    }

    pub fn state_space(&self) -> &NearlyClosedSet {
        &self.e
    }

    pub fn kind(&self) -> &ScaleKind {
        &self.kind
    }

    pub fn is_natural(&self) -> bool {
        matches!(self.kind, ScaleKind::Natural)
    }

    pub fn extend(&self) -> ExtendedScale {
        ExtendedScale {
            scale: self.clone(),
        }
    }

    /// `s̄` as a piecewise-linear function (natural and PL kinds).
    pub fn as_pl(&self) -> Option<PLFunction> {
        match &self.kind {
            ScaleKind::Natural => {
                let (l, r) = (self.e.l(), self.e.r());
                if l.is_finite() && r.is_finite() {
                    Some(PLFunction::identity(l, r))
                } else {
                    Some(PLFunction::identity(l.max(-1e300), r.min(1e300)))
                }
            }
            ScaleKind::Pl(p) => Some(p.clone()),
            ScaleKind::Charset { .. } => None,
        }
    }

    /// `s̄(x)`, with `x` clamped to `[l, r]`.
    pub fn eval(&self, x: f64, tol: f64) -> Bracket {
        let x = x.clamp(self.e.l(), self.e.r());
        match &self.kind {
            ScaleKind::Natural => Bracket::exact(x),
            ScaleKind::Pl(p) => Bracket::exact(p.eval(x)),
            ScaleKind::Charset { g, anchor, value } => {
                let (lo, hi, sign) = if x >= *anchor {
                    (*anchor, x, 1.0)
                } else {
                    (x, *anchor, -1.0)
                };
                if hi == lo {
                    return Bracket::exact(*value);
                }
                let in_g = g.measure_in(lo, hi, 0.5 * tol);
                let in_e = self.e.mass_in(lo, hi, 0.5 * tol).measure;
                let len = (in_g + Bracket::exact(hi - lo) - in_e).clamp(0.0, hi - lo);
                Bracket::exact(*value) + len.scale(sign)
            }
        }
    }

    /// The characteristic set as stored or read off the slopes. Natural
    /// scale gives `E` itself.
    pub fn characteristic_set(&self, tol: f64) -> Result<MeasurableSubset> {
        match &self.kind {
            ScaleKind::Natural => Ok(self.e.to_subset()),
            ScaleKind::Charset { g, .. } => Ok(g.clone()),
            ScaleKind::Pl(p) => {
                match self.is_in_s(tol) {
                    Admissible::Yes => {}
                    Admissible::No(w) | Admissible::Unknown(w) => return Err(Error::NotInS(w)),
                }
                let ones: Vec<(f64, f64)> = p
                    .pieces()
                    .filter(|&(x0, x1, v0, v1)| ((v1 - v0) / (x1 - x0) - 1.0).abs() <= 1e-12)
                    .map(|(x0, x1, _, _)| (x0, x1))
                    .collect();
                let e = self.e.to_subset();
                if self.e.is_finite_union() {
                    let spans: Vec<(f64, f64)> = self.e.interval_pieces().collect();
                    let inter = IntervalUnion::from_spans(spans)
                        .intersection(&IntervalUnion::from_spans(ones));
                    return Ok(MeasurableSubset::intervals(inter.spans().iter().copied()));
                }
                Ok(MeasurableSubset::intersection(vec![
                    e,
                    MeasurableSubset::intervals(ones),
                ]))
            }
        }
    }

    /// Whether `s̄` is strictly increasing with slope in `{0, 1}` a.e. and
    /// slope `1` on every gap.
    pub fn is_in_s(&self, tol: f64) -> Admissible {
        match &self.kind {
            ScaleKind::Natural | ScaleKind::Charset { .. } => Admissible::Yes,
            ScaleKind::Pl(p) => {
                let (l, r) = (self.e.l(), self.e.r());
                let mut cuts: Vec<f64> = p
                    .breaks()
                    .iter()
                    .copied()
                    .filter(|&x| x > l && x < r)
                    .collect();
                cuts.extend(
                    self.e
                        .pieces()
                        .iter()
                        .flat_map(|q| [q.left(), q.right()])
                        .filter(|&x| x > l && x < r),
                );
                cuts.push(l);
                cuts.push(r);
                cuts.sort_by(f64::total_cmp);
                cuts.dedup();
                for w in cuts.windows(2) {
                    let (x0, x1) = (w[0], w[1]);
                    if !(x1 > x0) || !x0.is_finite() || !x1.is_finite() {
                        continue;
                    }
                    let slope = p.slope_at(0.5 * (x0 + x1));
                    let in_e = self.e.mass_in(x0, x1, tol).measure;
                    let len = x1 - x0;
                    let is0 = slope.abs() <= 1e-12;
                    let is1 = (slope - 1.0).abs() <= 1e-12;
                    if !is1 && in_e.hi < len {
                        return Admissible::No(format!(
                            "slope {slope} on gap part of ({x0}, {x1}), expected 1"
                        ));
                    }
                    if !is0 && !is1 && in_e.lo > 0.0 {
                        return Admissible::No(format!(
                            "slope {slope} on ({x0}, {x1}), expected 0 or 1"
                        ));
                    }
                    if is0 && in_e.lo >= len {
                        return Admissible::No(format!(
                            "flat on ({x0}, {x1}): not strictly increasing"
                        ));
                    }
                }
                Admissible::Yes
            }
        }
    }

    /// `F(y) = ∫_(l, y] (s̄'² - s̄') dx`.
    pub fn defect_cumulative(&self, y: f64, _tol: f64) -> Bracket {
        match &self.kind {
            ScaleKind::Natural | ScaleKind::Charset { .. } => Bracket::ZERO,
            ScaleKind::Pl(p) => {
                let l = self.e.l();
                let y = y.min(self.e.r());
                let mut acc = 0.0;
                let mut prev = l;
                let mut knots: Vec<f64> = p
                    .breaks()
                    .iter()
                    .copied()
                    .filter(|&b| b > l && b < y)
                    .collect();
                knots.push(y);
                for x in knots {
                    if x > prev {
                        let s = p.slope_at(0.5 * (prev + x));
                        acc += (s * s - s) * (x - prev);
                        prev = x;
                    }
                }
                Bracket::exact(acc)
            }
        }
    }
}
