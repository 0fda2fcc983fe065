//! Lebesgue–Stieltjes measures on the line, used both as speed functions
//! `m` and as the symmetrizing measures `μ` of forms.

use serde::{Deserialize, Serialize};

use crate::bracket::Bracket;
use crate::error::{Error, Result};
use crate::pl::PLFunction;
use crate::scale::{ScaleFunction, ScaleKind};
use crate::sets::{ExtReal, Leaf, MeasurableSubset, NearlyClosedSet, Piece, SetJson, SvcSet};

/// Density `c0 + c1 x` on the closed interval `[a, b]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DensityPiece {
    pub a: f64,
    pub b: f64,
    pub c0: f64,
    pub c1: f64,
}

impl DensityPiece {
    pub fn at(&self, x: f64) -> f64 {
        self.c0 + self.c1 * x
    }

    /// `∫_lo^hi (c0 + c1 x) dx` over `[lo, hi] ∩ [a, b]`.
    fn mass(&self, lo: f64, hi: f64) -> f64 {
        let (x0, x1) = (lo.max(self.a), hi.min(self.b));
        if !(x1 > x0) {
            return 0.0;
        }
        self.c0 * (x1 - x0) + 0.5 * self.c1 * (x1 * x1 - x0 * x0)
    }
}

/// `coef · 1_A(x) dx`.
#[derive(Clone, Debug, PartialEq)]
pub struct IndicatorPiece {
    pub set: MeasurableSubset,
    pub coef: f64,
}

/// Radon measure made of atoms, affine densities and indicator densities,
/// together with the plateaus of its distribution function: `m = -∞` left
/// of `l0` and `m = +∞` from `r0` on.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MeasureJson", into = "MeasureJson")]
pub struct StieltjesMeasure {
    atoms: Vec<(f64, f64)>,
    densities: Vec<DensityPiece>,
    indicators: Vec<IndicatorPiece>,
    l0: f64,
    r0: f64,
    /// `m(anchor.0) = anchor.1`.
    anchor: (f64, f64),
}

/// Endpoints and support of a speed function, as in the construction of a
/// quasidiffusion from `m`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StateSpaceDerivation {
    pub l0: ExtReal,
    pub r0: ExtReal,
    pub l: ExtReal,
    pub r: ExtReal,
    pub e_m: NearlyClosedSet,
    pub qk_satisfied: bool,
}

/// The symmetrizing measure of the quasidiffusion with speed function `m`:
/// `μ = ½ m|_E`. This is the only place the factor one half is applied.
pub fn symmetrizing_from_speed(m: &StieltjesMeasure) -> Result<StieltjesMeasure> {
    let d = m.derive_state_space()?;
    Ok(m.restricted_to_open(d.l0.0, d.r0.0).scaled(0.5))
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct DensityJson {
    interval: [ExtReal; 2],
    affine: [f64; 2],
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct IndicatorJson {
    set: SetJson,
    coef: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct MeasureJson {
    #[serde(default)]
    atoms: Vec<[f64; 2]>,
    #[serde(default)]
    densities: Vec<DensityJson>,
    #[serde(default)]
    indicators: Vec<IndicatorJson>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    minus_inf_left_of: Option<ExtReal>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    plus_inf_right_of: Option<ExtReal>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    anchor: Option<[f64; 2]>,
}

impl TryFrom<MeasureJson> for StieltjesMeasure {
    type Error = Error;
    fn try_from(j: MeasureJson) -> Result<Self> {
        let mut indicators = Vec::new();
        for i in j.indicators {
            indicators.push(IndicatorPiece {
                set: MeasurableSubset::try_from(i.set)?,
                coef: i.coef,
            });
        }
        let m = StieltjesMeasure::new(
            j.atoms.iter().map(|a| (a[0], a[1])).collect(),
            j.densities
                .iter()
                .map(|d| DensityPiece {
                    a: d.interval[0].0,
                    b: d.interval[1].0,
                    c0: d.affine[0],
                    c1: d.affine[1],
                })
                .collect(),
            indicators,
        )?;
        let m = m.with_plateaus(
            j.minus_inf_left_of.map_or(f64::NEG_INFINITY, |x| x.0),
            j.plus_inf_right_of.map_or(f64::INFINITY, |x| x.0),
        )?;
        Ok(match j.anchor {
            Some([e, v]) => m.with_anchor(e, v),
            None => m,
        })
    }
}

impl From<StieltjesMeasure> for MeasureJson {
    fn from(m: StieltjesMeasure) -> Self {
        MeasureJson {
            atoms: m.atoms.iter().map(|&(x, w)| [x, w]).collect(),
            densities: m
                .densities
                .iter()
                .map(|d| DensityJson {
                    interval: [ExtReal(d.a), ExtReal(d.b)],
                    affine: [d.c0, d.c1],
                })
                .collect(),
            indicators: m
                .indicators
                .iter()
                .map(|i| IndicatorJson {
                    set: SetJson::from(i.set.clone()),
                    coef: i.coef,
                })
                .collect(),
            minus_inf_left_of: m.l0.is_finite().then_some(ExtReal(m.l0)),
            plus_inf_right_of: m.r0.is_finite().then_some(ExtReal(m.r0)),
            anchor: Some([m.anchor.0, m.anchor.1]),
        }
    }
}

impl StieltjesMeasure {
    pub fn new(
        mut atoms: Vec<(f64, f64)>,
        densities: Vec<DensityPiece>,
        indicators: Vec<IndicatorPiece>,
    ) -> Result<Self> {
        for &(x, w) in &atoms {
            if !x.is_finite() || !(w > 0.0) || !w.is_finite() {
                return Err(Error::InvalidMeasure(format!(
                    "atom ({x}, {w}) needs finite location and positive mass"
                )));
            }
        }
        atoms.sort_by(|p, q| p.0.total_cmp(&q.0));
        let mut merged: Vec<(f64, f64)> = Vec::with_capacity(atoms.len());
        for (x, w) in atoms {
            match merged.last_mut() {
                Some(last) if last.0 == x => last.1 += w,
                _ => merged.push((x, w)),
            }
        }
        for d in &densities {
            if d.a.is_nan()
                || d.b.is_nan()
                || !(d.a < d.b)
                || !d.c0.is_finite()
                || !d.c1.is_finite()
            {
                return Err(Error::InvalidMeasure(format!(
                    "density piece on [{}, {}] is malformed",
                    d.a, d.b
                )));
            }
            let left_ok = if d.a.is_finite() {
                d.at(d.a) >= 0.0
            } else {
                d.c1 <= 0.0 && (d.c1 < 0.0 || d.c0 >= 0.0)
            };
            let right_ok = if d.b.is_finite() {
                d.at(d.b) >= 0.0
            } else {
                d.c1 >= 0.0 && (d.c1 > 0.0 || d.c0 >= 0.0)
            };
            if !(left_ok && right_ok) {
                return Err(Error::InvalidMeasure(format!(
                    "density on [{}, {}] takes negative values",
                    d.a, d.b
                )));
            }
        }
        for i in &indicators {
            if !(i.coef > 0.0 && i.coef.is_finite()) {
                return Err(Error::InvalidMeasure(format!(
                    "indicator coefficient {} must be positive",
                    i.coef
                )));
            }
        }
        Ok(StieltjesMeasure {
            atoms: merged,
            densities,
            indicators,
            l0: f64::NEG_INFINITY,
            r0: f64::INFINITY,
            anchor: (0.0, 0.0),
        })
    }

    pub fn atomic(atoms: &[(f64, f64)]) -> Result<Self> {
        StieltjesMeasure::new(atoms.to_vec(), Vec::new(), Vec::new())
    }

    /// Constant density `c` on `[a, b]`.
    pub fn uniform(a: f64, b: f64, c: f64) -> Result<Self> {
        StieltjesMeasure::new(
            Vec::new(),
            vec![DensityPiece {
                a,
                b,
                c0: c,
                c1: 0.0,
            }],
            Vec::new(),
        )
    }

    pub fn indicator(set: MeasurableSubset, coef: f64) -> Result<Self> {
        StieltjesMeasure::new(Vec::new(), Vec::new(), vec![IndicatorPiece { set, coef }])
    }

    /// A fully supported measure on `E`: Lebesgue on interval pieces and
    /// fat generators, unit atoms on isolated points. Null generators have
    /// no such representation.
    pub fn reference_on(e: &NearlyClosedSet) -> Result<Self> {
        let mut atoms = Vec::new();
        let mut densities = Vec::new();
        let mut indicators = Vec::new();
        for p in e.pieces() {
            match *p {
                Piece::Interval(c, d) => densities.push(DensityPiece {
                    a: c,
                    b: d,
                    c0: 1.0,
                    c1: 0.0,
                }),
                Piece::Point(x) => atoms.push((x, 1.0)),
                Piece::Svc(s) => {
                    if !s.is_fat() {
                        return Err(Error::Unsupported(
                            "no exact reference measure on a null Cantor set; use an atomic approximation".into(),
                        ));
                    }
                    indicators.push(IndicatorPiece {
                        set: MeasurableSubset::svc(s),
                        coef: 1.0,
                    });
                }
            }
        }
        StieltjesMeasure::new(atoms, densities, indicators)
    }

    /// Equal atoms on the endpoints of the stage-`depth` intervals of a
    /// Cantor generator: a grid approximation of its Cantor-function measure.
    pub fn cantor_grid(s: &SvcSet, depth: u32, total: f64) -> Result<Self> {
        let blocks = s.stage_blocks(depth);
        let w = total / (2 * blocks.len()) as f64;
        let atoms: Vec<(f64, f64)> = blocks.iter().flat_map(|&(a, b)| [(a, w), (b, w)]).collect();
        StieltjesMeasure::new(atoms, Vec::new(), Vec::new())
    }

    /// Set the plateaus: `m = -∞` on `(-∞, l0)` and `m = +∞` on `[r0, ∞)`.
    pub fn with_plateaus(mut self, l0: f64, r0: f64) -> Result<Self> {
        if l0.is_nan() || r0.is_nan() || !(l0 < r0) {
            return Err(Error::InvalidMeasure(format!(
                "plateaus l0 = {l0}, r0 = {r0} must satisfy l0 < r0"
            )));
        }
        let (lo, hi) = self.component_hull();
        if lo < l0 || hi > r0 {
            return Err(Error::InvalidMeasure(
                "measure components must lie in [l0, r0]".into(),
            ));
        }
        self.l0 = l0;
        self.r0 = r0;
        if self.anchor.0 < l0 || self.anchor.0 >= r0 {
            self.anchor = (
                if l0.is_finite() {
                    l0
                } else {
                    0.0f64.min(r0 - 1.0)
                },
                0.0,
            );
        }
        Ok(self)
    }

    pub fn with_anchor(mut self, e: f64, value: f64) -> Self {
        self.anchor = (e, value);
        self
    }

    pub fn atoms(&self) -> &[(f64, f64)] {
        &self.atoms
    }

    pub fn densities(&self) -> &[DensityPiece] {
        &self.densities
    }

    pub fn indicators(&self) -> &[IndicatorPiece] {
        &self.indicators
    }

    pub fn l0(&self) -> f64 {
        self.l0
    }

    pub fn r0(&self) -> f64 {
        self.r0
    }

    pub fn is_purely_atomic(&self) -> bool {
        self.densities.is_empty() && self.indicators.is_empty()
    }

    pub fn scaled(&self, k: f64) -> StieltjesMeasure {
        let mut m = self.clone();
        for a in &mut m.atoms {
            a.1 *= k;
        }
        for d in &mut m.densities {
            d.c0 *= k;
            d.c1 *= k;
        }
        for i in &mut m.indicators {
            i.coef *= k;
        }
        m.anchor.1 *= k;
        m
    }

    /// Drop atoms sitting on `l0` or `r0` (their mass is invisible to `m`)
    /// and clear the plateaus.
    fn restricted_to_open(&self, l0: f64, r0: f64) -> StieltjesMeasure {
        let mut m = self.clone();
        m.atoms.retain(|&(x, _)| x > l0 && x < r0);
        m.l0 = f64::NEG_INFINITY;
        m.r0 = f64::INFINITY;
        m
    }

    fn component_hull(&self) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for &(x, _) in &self.atoms {
            lo = lo.min(x);
            hi = hi.max(x);
        }
        for d in &self.densities {
            lo = lo.min(d.a);
            hi = hi.max(d.b);
        }
        for i in &self.indicators {
            if let Some((a, b)) = i.set.outer_region().hull() {
                lo = lo.min(a);
                hi = hi.max(b);
            }
        }
        (lo, hi)
    }

    /// `m([lo, hi])`, `m((lo, hi])`, ... depending on the closedness flags.
    pub fn mass_between(
        &self,
        lo: f64,
        hi: f64,
        lo_closed: bool,
        hi_closed: bool,
        tol: f64,
    ) -> Bracket {
        if hi < lo {
            return Bracket::ZERO;
        }
        let mut acc = 0.0;
        for &(x, w) in &self.atoms {
            let left = if lo_closed { x >= lo } else { x > lo };
            let right = if hi_closed { x <= hi } else { x < hi };
            if left && right {
                acc += w;
            }
        }
        for d in &self.densities {
            acc += d.mass(lo, hi);
        }
        let mut total = Bracket::exact(acc);
        let n = self.indicators.len().max(1) as f64;
        for i in &self.indicators {
            let (a, b) = match i.set.outer_region().hull() {
                Some(h) => h,
                None => continue,
            };
            let (x0, x1) = (lo.max(a), hi.min(b));
            if x1 > x0 {
                total = total + i.set.measure_in(x0, x1, tol / (n * i.coef)).scale(i.coef);
            }
        }
        total
    }

    /// `m(x) = m(e) + m((e, x])` with the right-continuous convention.
    pub fn cumulative(&self, x: f64, tol: f64) -> Result<Bracket> {
        if x < self.l0 || x >= self.r0 {
            return Err(Error::InfiniteValue(x));
        }
        let (e, v) = self.anchor;
        Ok(if x >= e {
            Bracket::exact(v) + self.mass_between(e, x, false, true, tol)
        } else {
            Bracket::exact(v) - self.mass_between(x, e, false, true, tol)
        })
    }

    pub fn total_mass(&self, tol: f64) -> Bracket {
        self.mass_between(f64::NEG_INFINITY, f64::INFINITY, true, true, tol)
    }

    /// Closed support as a state space, with both endpoint flags set.
    pub fn support(&self) -> Result<NearlyClosedSet> {
        #[derive(Clone, Copy)]
        enum Part {
            Span(f64, f64),
            Pt(f64),
            Gen(SvcSet),
        }
        let mut parts: Vec<Part> = self.atoms.iter().map(|&(x, _)| Part::Pt(x)).collect();
        for d in &self.densities {
            let zero_everywhere = d.c1 == 0.0 && d.c0 == 0.0;
            if !zero_everywhere {
                parts.push(Part::Span(d.a, d.b));
            }
        }
        for i in &self.indicators {
            match &i.set {
                MeasurableSubset::Leaf(Leaf::Intervals(u)) => {
                    parts.extend(u.proper_spans().map(|(a, b)| Part::Span(a, b)));
                }
                MeasurableSubset::Leaf(Leaf::Svc(s)) => {
                    if s.is_fat() {
                        parts.push(Part::Gen(*s));
                    }
                }
                MeasurableSubset::Leaf(Leaf::Ubiquitous(u)) => {
                    parts.push(Part::Span(u.base().0, u.base().1));
                }
                MeasurableSubset::Empty => {}
                other => {
                    let dense = other.dense_region();
                    let outer = other.outer_region();
                    if dense != outer {
                        return Err(Error::Unsupported(
                            "support of a compound indicator set".into(),
                        ));
                    }
                    parts.extend(dense.proper_spans().map(|(a, b)| Part::Span(a, b)));
                }
            }
        }
        if parts.is_empty() {
            return Err(Error::TrivialMeasure);
        }
        let left = |p: &Part| match *p {
            Part::Span(a, _) => a,
            Part::Pt(x) => x,
            Part::Gen(s) => s.base().0,
        };
        let right = |p: &Part| match *p {
            Part::Span(_, b) => b,
            Part::Pt(x) => x,
            Part::Gen(s) => s.base().1,
        };
        parts.sort_by(|p, q| {
            left(p)
                .total_cmp(&left(q))
                .then(right(p).total_cmp(&right(q)))
        });
        let mut pieces: Vec<Piece> = Vec::new();
        for p in parts {
            let merged = match (pieces.last_mut(), p) {
                (Some(Piece::Interval(_, d)), Part::Span(a, b)) if a <= *d => {
                    *d = d.max(b);
                    true
                }
                (Some(Piece::Interval(_, d)), Part::Pt(x)) if x <= *d => true,
                (Some(Piece::Interval(_, d)), Part::Gen(s)) if s.base().0 <= *d => {
                    if s.base().1 > *d {
                        return Err(Error::Unsupported(
                            "generator partly covered by an interval".into(),
                        ));
                    }
                    true
                }
                (Some(Piece::Point(y)), Part::Pt(x)) if x == *y => true,
                (Some(Piece::Point(y)), Part::Span(a, b)) if a == *y => {
                    *pieces.last_mut().unwrap() = Piece::Interval(a, b);
                    true
                }
                (Some(Piece::Svc(s)), Part::Pt(x)) if x <= s.base().1 => {
                    if s.contains(x, 64) == crate::sets::Membership::Out {
                        return Err(Error::Unsupported(
                            "atom inside a gap of a generator".into(),
                        ));
                    }
                    true
                }
                (Some(Piece::Svc(s)), Part::Gen(t)) if t == *s => true,
                (Some(Piece::Svc(s)), _) if left(&p) <= s.base().1 => {
                    return Err(Error::Unsupported(
                        "overlapping generator in support".into(),
                    ));
                }
                _ => false,
            };
            if !merged {
                pieces.push(match p {
                    Part::Span(a, b) => Piece::Interval(a, b),
                    Part::Pt(x) => Piece::Point(x),
                    Part::Gen(s) => Piece::Svc(s),
                });
            }
        }
        // a point that coincides with the start of the next piece
        let mut cleaned: Vec<Piece> = Vec::with_capacity(pieces.len());
        for p in pieces {
            match (cleaned.last(), p) {
                (Some(Piece::Point(y)), q) if q.left() == *y => {
                    cleaned.pop();
                    cleaned.push(q);
                }
                (Some(prev), q) if q.left() <= prev.right() => {
                    return Err(Error::Unsupported(format!(
                        "touching support pieces at {}",
                        q.left()
                    )));
                }
                _ => cleaned.push(p),
            }
        }
        if cleaned.len() == 1 && matches!(cleaned[0], Piece::Point(_)) {
            return Err(Error::TrivialMeasure);
        }
        NearlyClosedSet::new(cleaned, true, true)
    }

    /// Endpoints `l0, r0, l, r`, the state space `E_m` and the no-killing
    /// condition.
    pub fn derive_state_space(&self) -> Result<StateSpaceDerivation> {
        let (l0, r0) = (self.l0, self.r0);
        let inner = StieltjesMeasure {
            atoms: self
                .atoms
                .iter()
                .copied()
                .filter(|&(x, _)| x > l0 && x < r0)
                .collect(),
            ..self.clone()
        };
        let supp = inner.support()?;
        let (l, r) = (supp.l(), supp.r());
        if !(l < r) {
            return Err(Error::TrivialMeasure);
        }
        let e_m = supp.with_endpoints(l > l0, r < r0)?;
        let qk = (!l0.is_finite() || l == l0) && (!r0.is_finite() || r == r0);
        Ok(StateSpaceDerivation {
            l0: ExtReal(l0),
            r0: ExtReal(r0),
            l: ExtReal(l),
            r: ExtReal(r),
            e_m,
            qk_satisfied: qk,
        })
    }

    /// `∫ f dm` for a piecewise-linear `f` (constant outside its
    /// breakpoints).
    pub fn integrate(&self, f: &PLFunction, tol: f64) -> Result<Bracket> {
        let (lo, hi) = self.component_hull();
        let (b0, b1) = (f.breaks()[0], f.breaks()[f.breaks().len() - 1]);
        if (lo == f64::NEG_INFINITY && f.eval(b0) != 0.0)
            || (hi == f64::INFINITY && f.eval(b1) != 0.0)
        {
            return Err(Error::UnboundedDomain);
        }
        let mut acc = Bracket::exact(self.atoms.iter().map(|&(x, w)| w * f.eval(x)).sum());
        // windows on which f is affine
        let mut knots = vec![f64::NEG_INFINITY];
        knots.extend_from_slice(f.breaks());
        knots.push(f64::INFINITY);
        let mut dens = 0.0;
        for d in &self.densities {
            for w in knots.windows(2) {
                let (x0, x1) = (w[0].max(d.a), w[1].min(d.b));
                if !(x1 > x0) {
                    continue;
                }
                if !(x0.is_finite() && x1.is_finite()) {
                    // f vanishes identically on unbounded windows here
                    continue;
                }
                let g = |x: f64| f.eval(x) * d.at(x);
                let mid = 0.5 * (x0 + x1);
                dens += (x1 - x0) / 6.0 * (g(x0) + 4.0 * g(mid) + g(x1));
            }
        }
        acc = acc + Bracket::exact(dens);
        let nwin = (self.indicators.len() * knots.len()).max(1) as f64;
        for i in &self.indicators {
            let (a, b) = match i.set.outer_region().hull() {
                Some(h) => h,
                None => continue,
            };
            for w in knots.windows(2) {
                let (x0, x1) = (w[0].max(a), w[1].min(b));
                if !(x1 > x0) {
                    continue;
                }
                let v0 = f.eval(x0);
                let slope = if x1 - x0 > 0.0 {
                    (f.eval(x1) - v0) / (x1 - x0)
                } else {
                    0.0
                };
                let alpha = v0 - slope * x0;
                let scale = alpha.abs() + slope.abs() + 1.0;
                let mass = i.set.mass_in(x0, x1, tol / (nwin * i.coef * scale));
                acc = acc + (mass.measure.scale(alpha) + mass.moment.scale(slope)).scale(i.coef);
            }
        }
        Ok(acc)
    }

    /// Image measure under a scale function. Atoms move to `s(x)`; density
    /// and indicator components move through affine pieces of `s̄`.
    pub fn pushforward(&self, s: &ScaleFunction, tol: f64) -> Result<StieltjesMeasure> {
        let eval = |x: f64| -> Result<f64> {
            let v = s.eval(x, tol);
            if v.width() > tol.max(1e-15) {
                return Err(Error::TolNotAchievable {
                    tol,
                    achieved: v.width(),
                });
            }
            Ok(v.mid())
        };
        let mut atoms = Vec::with_capacity(self.atoms.len());
        let mut last: Option<(f64, f64)> = None;
        for &(x, w) in &self.atoms {
            let y = eval(x)?;
            if let Some((_, py)) = last {
                if y <= py {
                    return Err(Error::NotInjective(x));
                }
            }
            last = Some((x, y));
            atoms.push((y, w));
        }
        let affine_pieces = |a: f64, b: f64| -> Result<Vec<(f64, f64, f64, f64)>> {
            // (x0, x1, y0, slope) for s̄ on [a, b]
            match s.kind() {
                ScaleKind::Natural => Ok(vec![(a, b, a, 1.0)]),
                ScaleKind::Pl(p) => {
                    let mut xs = vec![a];
                    xs.extend_from_slice(p.breaks_inside(a, b));
                    xs.push(b);
                    Ok(xs
                        .windows(2)
                        .map(|w| (w[0], w[1], p.eval(w[0]), p.slope_at(0.5 * (w[0] + w[1]))))
                        .collect())
                }
                ScaleKind::Charset { .. } => {
                    let (y0, y1) = (eval(a)?, eval(b)?);
                    if ((y1 - y0) - (b - a)).abs() <= tol {
                        Ok(vec![(a, b, y0, 1.0)])
                    } else {
                        Err(Error::Unsupported(
                            "pushforward of a density through a non-affine scale".into(),
                        ))
                    }
                }
            }
        };
        let mut densities = Vec::new();
        for d in &self.densities {
            if !(d.a.is_finite() && d.b.is_finite()) {
                return Err(Error::Unsupported(
                    "pushforward of an unbounded density".into(),
                ));
            }
            for (x0, x1, y0, k) in affine_pieces(d.a, d.b)? {
                if !(k > 0.0) {
                    return Err(Error::NotInjective(x0));
                }
                // y = y0 + k (x - x0); new density ρ(x(y)) / k
                let c1 = d.c1 / (k * k);
                let c0 = (d.c0 + d.c1 * (x0 - y0 / k)) / k;
                densities.push(DensityPiece {
                    a: y0,
                    b: y0 + k * (x1 - x0),
                    c0,
                    c1,
                });
            }
        }
        let mut indicators = Vec::new();
        for i in &self.indicators {
            let (a, b) = match i.set.outer_region().hull() {
                Some(h) => h,
                None => continue,
            };
            let pieces = affine_pieces(a, b)?;
            if pieces.len() != 1 {
                return Err(Error::Unsupported(
                    "indicator set spans several affine pieces of the scale".into(),
                ));
            }
            let (x0, _, y0, k) = pieces[0];
            if !(k > 0.0) {
                return Err(Error::NotInjective(x0));
            }
            let set = map_affine(&i.set, k, y0 - k * x0)?;
            indicators.push(IndicatorPiece {
                set,
                coef: i.coef / k,
            });
        }
        let mut out = StieltjesMeasure::new(atoms, densities, indicators)?;
        let map_ext = |x: f64| -> Result<f64> {
            if x.is_finite() {
                eval(x)
            } else {
                Ok(x)
            }
        };
        out.l0 = map_ext(self.l0)?;
        out.r0 = map_ext(self.r0)?;
        out.anchor = (map_ext(self.anchor.0)?, self.anchor.1);
        Ok(out)
    }
}

/// Image of a measurable set under `x ↦ k x + c` with `k > 0`.
pub fn map_affine(a: &MeasurableSubset, k: f64, c: f64) -> Result<MeasurableSubset> {
    use crate::sets::UbiquitousSet;
    Ok(match a {
        MeasurableSubset::Empty => MeasurableSubset::Empty,
        MeasurableSubset::Leaf(Leaf::Intervals(u)) => {
            MeasurableSubset::intervals(u.spans().iter().map(|&(x, y)| (k * x + c, k * y + c)))
        }
        MeasurableSubset::Leaf(Leaf::Svc(s)) => {
            let (x, y) = s.base();
            MeasurableSubset::svc(SvcSet::new(k * x + c, k * y + c, s.schedule())?)
        }
        MeasurableSubset::Leaf(Leaf::Ubiquitous(u)) => {
            let (x, y) = u.base();
            MeasurableSubset::ubiquitous(UbiquitousSet::new(k * x + c, k * y + c, u.budget())?)
        }
        MeasurableSubset::Union(v) => MeasurableSubset::Union(
            v.iter()
                .map(|p| map_affine(p, k, c))
                .collect::<Result<_>>()?,
        ),
        MeasurableSubset::Intersection(v) => MeasurableSubset::Intersection(
            v.iter()
                .map(|p| map_affine(p, k, c))
                .collect::<Result<_>>()?,
        ),
        MeasurableSubset::Difference(x, y) => {
            MeasurableSubset::difference(map_affine(x, k, c)?, map_affine(y, k, c)?)
        }
    })
}
