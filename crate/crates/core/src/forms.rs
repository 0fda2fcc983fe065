//! Dirichlet forms `(E, s, μ)` of skip-free Hunt processes: domain
//! membership, energy
//!
//! ```text
//! ℰ(f, g) = ½ ∫_E (df/ds̄)(dg/ds̄) ds̄ + ½ Σ_k Δ_k f Δ_k g / (s(b_k) - s(a_k)),
//! ```
//!
//! subspace verification, jump weights and the trace identity.

use serde::{Deserialize, Serialize};

use crate::bracket::Bracket;
use crate::error::{Error, Result};
use crate::measures::StieltjesMeasure;
use crate::pl::PLFunction;
use crate::scale::{affine_across_gaps, Admissible, ScaleFunction, ScaleKind, ScaleSpec};
use crate::sets::{MeasurableSubset, NearlyClosedSet, Piece, SetJson, SvcSet};

/// Deepest generator stage opened by the energy recursion.
const MAX_DEPTH: u32 = 80;
/// Bisection steps used to locate preimages of breakpoints under a scale.
const PREIMAGE_STEPS: u32 = 64;
/// Query tolerance relative to the requested energy tolerance, and the
/// factor it shrinks by on each retry.
const QUERY_FRACTION: f64 = 1e-3;
const RETRIES: usize = 3;

/// A test function: piecewise linear in `x`, or `φ ∘ s̄` for a piecewise
/// linear `φ` and a scale `s`.
#[derive(Clone, Debug, PartialEq)]
pub enum TestFunction {
    Pl(PLFunction),
    ScaleComposite {
        outer: PLFunction,
        scale: ScaleFunction,
    },
}

/// JSON form of a test function; composites name their scale by a `ScaleSpec` and
/// take the state space from the form they are used with.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TestFunctionSpec {
    Pl(PLFunction),
    Composite { outer: PLFunction, scale: ScaleSpec },
}

impl TestFunctionSpec {
    pub fn resolve(&self, e: &NearlyClosedSet, tol: f64) -> Result<TestFunction> {
        match self {
            TestFunctionSpec::Pl(f) => Ok(TestFunction::Pl(f.clone())),
            TestFunctionSpec::Composite { outer, scale } => Ok(TestFunction::composite(
                outer.clone(),
                ScaleFunction::from_spec(e, scale, tol)?,
            )),
        }
    }
}

impl From<&TestFunction> for TestFunctionSpec {
    fn from(f: &TestFunction) -> Self {
        match f {
            TestFunction::Pl(p) => TestFunctionSpec::Pl(p.clone()),
            TestFunction::ScaleComposite { outer, scale } => TestFunctionSpec::Composite {
                outer: outer.clone(),
                scale: scale.to_spec(),
            },
        }
    }
}

fn pl_range(f: &PLFunction, y: Bracket) -> Bracket {
    let mut lo = f.eval(y.lo).min(f.eval(y.hi));
    let mut hi = f.eval(y.lo).max(f.eval(y.hi));
    for &b in f.breaks_inside(y.lo, y.hi) {
        lo = lo.min(f.eval(b));
        hi = hi.max(f.eval(b));
    }
    Bracket::new(lo, hi)
}

impl TestFunction {
    /// `φ ∘ s̄`; collapses to a plain piecewise-linear function when `s̄` is
    /// itself piecewise linear.
    pub fn composite(outer: PLFunction, scale: ScaleFunction) -> Self {
        match scale.kind() {
            ScaleKind::Natural => TestFunction::Pl(outer),
            ScaleKind::Pl(p) => TestFunction::Pl(outer.compose_increasing(p)),
            ScaleKind::Charset { .. } => TestFunction::ScaleComposite { outer, scale },
        }
    }

    pub fn eval(&self, x: f64, tol: f64) -> Bracket {
        match self {
            TestFunction::Pl(f) => Bracket::exact(f.eval(x)),
            TestFunction::ScaleComposite { outer, scale } => pl_range(outer, scale.eval(x, tol)),
        }
    }

    fn inner_charset(&self) -> Option<&MeasurableSubset> {
        match self {
            TestFunction::ScaleComposite { scale, .. } => match scale.kind() {
                ScaleKind::Charset { g, .. } => Some(g),
                _ => None,
            },
            TestFunction::Pl(_) => None,
        }
    }
}

/// Three-valued domain answer.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verdict", content = "reason", rename_all = "lowercase")]
pub enum DomainVerdict {
    Yes,
    No(String),
    Unknown(String),
}

/// Whether `energy` refuses functions outside the form domain.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EnergyMode {
    Strict,
    Functional,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergyReport {
    pub total: Bracket,
    /// Strongly local part `½ ∫_E (df/ds̄)(dg/ds̄) ds̄`.
    pub local: Bracket,
    /// Gap sum.
    pub jump: Bracket,
    /// Regions visited by the recursion.
    pub regions: usize,
    /// Tolerance used for the set queries in the final pass.
    pub query_tol: f64,
}

/// The form `(E, s, μ)`.
#[derive(Clone, Debug, PartialEq)]
pub struct FormDescriptor {
    e: NearlyClosedSet,
    scale: ScaleFunction,
    mu: StieltjesMeasure,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct FormJson {
    #[serde(rename = "E")]
    e: SetJson,
    scale: ScaleSpec,
    mu: StieltjesMeasure,
}

impl Serialize for FormDescriptor {
    fn serialize<S: serde::Serializer>(&self, ser: S) -> std::result::Result<S::Ok, S::Error> {
        FormJson {
            e: SetJson::from(self.e.clone()),
            scale: self.scale.to_spec(),
            mu: self.mu.clone(),
        }
        .serialize(ser)
    }
}

impl<'de> Deserialize<'de> for FormDescriptor {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        let j = FormJson::deserialize(de)?;
        let e = NearlyClosedSet::try_from(j.e).map_err(serde::de::Error::custom)?;
        let scale =
            ScaleFunction::from_spec(&e, &j.scale, 1e-12).map_err(serde::de::Error::custom)?;
        FormDescriptor::new(e, scale, j.mu).map_err(serde::de::Error::custom)
    }
}

fn same_pieces(a: &NearlyClosedSet, b: &NearlyClosedSet) -> bool {
    a.pieces() == b.pieces()
}

impl FormDescriptor {
    /// Checks that `s` lives on `E` and that `μ` is supported exactly by
    /// the pieces of `E`.
    pub fn new(e: NearlyClosedSet, scale: ScaleFunction, mu: StieltjesMeasure) -> Result<Self> {
        if scale.state_space() != &e {
            return Err(Error::InvalidScale(
                "scale function is defined on a different state space".into(),
            ));
        }
        match mu.support() {
            Ok(supp) if !same_pieces(&supp, &e) => {
                return Err(Error::InvalidMeasure(
                    "symmetrizing measure is not fully supported on E".into(),
                ))
            }
            Ok(_) | Err(Error::Unsupported(_)) => {}
            Err(other) => return Err(other),
        }
        Ok(FormDescriptor { e, scale, mu })
    }

    /// Natural-scale form with a fully supported reference measure on `E`.
    pub fn natural(e: &NearlyClosedSet) -> Result<Self> {
        FormDescriptor::new(
            e.clone(),
            ScaleFunction::natural(e),
            StieltjesMeasure::reference_on(e)?,
        )
    }

    /// Form of the quasidiffusion with speed function `m`.
    pub fn from_speed(m: &StieltjesMeasure) -> Result<Self> {
        let d = m.derive_state_space()?;
        if !d.qk_satisfied {
            return Err(Error::QkViolated);
        }
        let mu = crate::measures::symmetrizing_from_speed(m)?;
        FormDescriptor::new(d.e_m.clone(), ScaleFunction::natural(&d.e_m), mu)
    }

    /// Same state space and measure with another scale.
    pub fn with_scale(&self, scale: ScaleFunction) -> Result<Self> {
        FormDescriptor::new(self.e.clone(), scale, self.mu.clone())
    }

    pub fn state_space(&self) -> &NearlyClosedSet {
        &self.e
    }

    pub fn scale(&self) -> &ScaleFunction {
        &self.scale
    }

    pub fn mu(&self) -> &StieltjesMeasure {
        &self.mu
    }

    /// Finite endpoints outside `E` where the form imposes `f(j) = 0`.
    pub fn dirichlet_points(&self) -> Vec<f64> {
        let mut out = Vec::new();
        if self.e.l().is_finite() && !self.e.l_in_e() {
            out.push(self.e.l());
        }
        if self.e.r().is_finite() && !self.e.r_in_e() {
            out.push(self.e.r());
        }
        out
    }
}

/// How the form's scale weighs the integrand.
enum FormScale<'a> {
    Unit,
    Charset(&'a MeasurableSubset),
    Pl(&'a PLFunction),
}

impl<'a> FormScale<'a> {
    fn of(s: &'a ScaleFunction) -> Self {
        match s.kind() {
            ScaleKind::Natural => FormScale::Unit,
            ScaleKind::Charset { g, .. } => FormScale::Charset(g),
            ScaleKind::Pl(p) => FormScale::Pl(p),
        }
    }

    fn sigma(&self, u: f64, v: f64) -> f64 {
        match self {
            FormScale::Pl(p) => p.slope_at(0.5 * (u + v)),
            _ => 1.0,
        }
    }

    fn sigma_min(&self) -> f64 {
        match self {
            FormScale::Pl(p) => p
                .pieces()
                .map(|(x0, x1, v0, v1)| (v1 - v0) / (x1 - x0))
                .filter(|&k| k > 0.0)
                .fold(f64::INFINITY, f64::min)
                .min(1.0e300),
            _ => 1.0,
        }
    }

    fn delta(&self, a: f64, b: f64) -> f64 {
        match self {
            FormScale::Pl(p) => p.eval(b) - p.eval(a),
            _ => b - a,
        }
    }

    fn cuts(&self) -> Vec<(f64, f64)> {
        match self {
            FormScale::Pl(p) => p.breaks().iter().map(|&x| (x, x)).collect(),
            _ => Vec::new(),
        }
    }
}

/// A test function prepared for one pass of the energy recursion.
enum Prepared<'a> {
    Pl(PLFunction),
    Composite {
        outer: &'a PLFunction,
        scale: &'a ScaleFunction,
        windows: Vec<(f64, f64)>,
    },
}

/// Interval of `x` containing every preimage of `y` under `s̄`.
fn preimage_window(scale: &ScaleFunction, y: f64, q: f64) -> (f64, f64) {
    let (l, r) = (scale.state_space().l(), scale.state_space().r());
    let sl = scale.eval(l, q);
    let sr = scale.eval(r, q);
    if y <= sl.lo {
        return (l, l);
    }
    if y >= sr.hi {
        return (r, r);
    }
    let left = if sl.hi >= y {
        l
    } else {
        let (mut a, mut b) = (l, r);
        for _ in 0..PREIMAGE_STEPS {
            let m = 0.5 * (a + b);
            if !(m > a && m < b) {
                break;
            }
            if scale.eval(m, q).hi < y {
                a = m;
            } else {
                b = m;
            }
        }
        a
    };
    let right = if sr.lo <= y {
        r
    } else {
        let (mut a, mut b) = (left, r);
        for _ in 0..PREIMAGE_STEPS {
            let m = 0.5 * (a + b);
            if !(m > a && m < b) {
                break;
            }
            if scale.eval(m, q).lo > y {
                b = m;
            } else {
                a = m;
            }
        }
        b
    };
    (left, right)
}

impl<'a> Prepared<'a> {
    fn new(e: &NearlyClosedSet, h: &'a TestFunction, q: f64) -> Self {
        match h {
            TestFunction::Pl(f) => Prepared::Pl(affine_across_gaps(e, f)),
            TestFunction::ScaleComposite { outer, scale } => {
                let windows = outer
                    .breaks()
                    .iter()
                    .map(|&y| preimage_window(scale, y, q))
                    .collect();
                Prepared::Composite {
                    outer,
                    scale,
                    windows,
                }
            }
        }
    }

    fn cuts(&self) -> Vec<(f64, f64)> {
        match self {
            Prepared::Pl(f) => f.breaks().iter().map(|&x| (x, x)).collect(),
            Prepared::Composite { windows, .. } => windows.clone(),
        }
    }

    fn value(&self, x: f64, q: f64) -> Bracket {
        match self {
            Prepared::Pl(f) => Bracket::exact(f.eval(x)),
            Prepared::Composite { outer, scale, .. } => pl_range(outer, scale.eval(x, q)),
        }
    }

    /// Slope `dh/ds̄` of the outer function (or `h'` for plain functions) on
    /// a region free of cuts.
    fn slope(&self, u: f64, v: f64) -> f64 {
        match self {
            Prepared::Pl(f) => f.slope_at(0.5 * (u + v)),
            Prepared::Composite { outer, windows, .. } => {
                let k = windows.iter().filter(|w| w.1 <= u).count();
                let (b, vals) = (outer.breaks(), outer.values());
                if k == 0 || k >= b.len() {
                    0.0
                } else {
                    (vals[k] - vals[k - 1]) / (b[k] - b[k - 1])
                }
            }
        }
    }

    fn lipschitz(&self, u: f64, v: f64) -> f64 {
        match self {
            Prepared::Pl(f) => f.lipschitz_on(u, v),
            Prepared::Composite { outer, .. } => outer.lipschitz(),
        }
    }
}

fn merge_windows(mut ws: Vec<(f64, f64)>) -> Vec<(f64, f64)> {
    ws.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut out: Vec<(f64, f64)> = Vec::with_capacity(ws.len());
    for w in ws {
        match out.last_mut() {
            Some(last) if w.0 <= last.1 && (w.0 < last.1 || w.0 > last.0 || w.1 > last.1) => {
                last.1 = last.1.max(w.1)
            }
            Some(last) if *last == w => {}
            _ => out.push(w),
        }
    }
    out
}

struct Engine<'a> {
    scale: FormScale<'a>,
    f: &'a Prepared<'a>,
    g: &'a Prepared<'a>,
    /// `None` when the weighted set is `E` itself.
    w: Option<MeasurableSubset>,
    w_empty: bool,
    windows: Vec<(f64, f64)>,
    q: f64,
    sigma_min: f64,
    local: Bracket,
    jump: Bracket,
    regions: usize,
}

impl<'a> Engine<'a> {
    fn w_measure(&self, u: f64, v: f64, fast: Bracket) -> Bracket {
        if self.w_empty {
            Bracket::ZERO
        } else {
            match &self.w {
                None => fast,
                Some(w) => w.measure_in(u, v, self.q),
            }
        }
    }

    fn hits(&self, u: f64, v: f64) -> bool {
        self.windows.iter().any(|&(a, b)| b > u && a < v)
    }

    fn inside_window(&self, u: f64, v: f64) -> bool {
        self.windows.iter().any(|&(a, b)| a <= u && v <= b)
    }

    fn coefficient(&self, u: f64, v: f64) -> Result<Option<f64>> {
        let a = self.f.slope(u, v);
        let b = self.g.slope(u, v);
        if a == 0.0 || b == 0.0 {
            return Ok(None);
        }
        let sigma = self.scale.sigma(u, v);
        if !(sigma > 0.0) {
            return Err(Error::DomainViolation(format!(
                "function varies on ({u}, {v}) where the scale is flat"
            )));
        }
        Ok(Some(0.5 * a * b / sigma))
    }

    fn bound(&self, u: f64, v: f64) -> f64 {
        0.5 * self.f.lipschitz(u, v) * self.g.lipschitz(u, v) / self.sigma_min
    }

    /// Measure of `E` and of the gaps of `E` inside `(u, v)`, for a span
    /// of an interval piece (`svc = None`) or of a generator block.
    fn span_parts(&self, svc: Option<&SvcSet>, u: f64, v: f64) -> (Bracket, Bracket) {
        match svc {
            None => (Bracket::exact(v - u), Bracket::ZERO),
            Some(s) => {
                let m = s.mass_in(u, v, self.q).measure.clamp(0.0, v - u);
                (m, (Bracket::exact(v - u) - m).clamp(0.0, v - u))
            }
        }
    }

    /// Span with no cut inside.
    fn smooth_span(&mut self, svc: Option<&SvcSet>, u: f64, v: f64) -> Result<()> {
        self.regions += 1;
        if let Some(k) = self.coefficient(u, v)? {
            let (m_e, gaps) = self.span_parts(svc, u, v);
            let m = self.w_measure(u, v, m_e);
            self.local = self.local + m.scale(k);
            self.jump = self.jump + gaps.scale(k);
        }
        Ok(())
    }

    fn rough_span(&mut self, svc: Option<&SvcSet>, u: f64, v: f64) {
        self.regions += 1;
        let (m_e, gaps) = self.span_parts(svc, u, v);
        let m = self.w_measure(u, v, m_e);
        let k = self.bound(u, v);
        self.local = self.local + Bracket::around(0.0, k * m.hi);
        self.jump = self.jump + Bracket::around(0.0, k * gaps.hi);
    }

    /// Walks `[c, d]` window by window.
    fn spans(&mut self, svc: Option<&SvcSet>, c: f64, d: f64) -> Result<()> {
        let ws: Vec<(f64, f64)> = self
            .windows
            .iter()
            .copied()
            .filter(|&(a, b)| b > c && a < d)
            .collect();
        let mut pos = c;
        for (a, b) in ws {
            let a0 = a.max(pos);
            if a0 > pos {
                self.smooth_span(svc, pos, a0)?;
            }
            let b0 = b.min(d);
            if b0 > a0 {
                self.rough_span(svc, a0, b0);
            }
            pos = pos.max(b0);
        }
        if d > pos {
            self.smooth_span(svc, pos, d)?;
        }
        Ok(())
    }

    fn gap(&mut self, a: f64, b: f64) {
        self.regions += 1;
        let ds = self.scale.delta(a, b);
        let (fa, fb, ga, gb) = (
            self.f.value(a, self.q),
            self.f.value(b, self.q),
            self.g.value(a, self.q),
            self.g.value(b, self.q),
        );
        let term = (fb - fa) * (gb - ga);
        self.jump = self.jump + term.scale(0.5 / ds);
    }

    fn svc_block(&mut self, s: &SvcSet, n: u32, u: f64, v: f64) -> Result<()> {
        self.regions += 1;
        let blen = v - u;
        let m_e = s.block_measure(n);
        let gaps = (blen - m_e).max(0.0);
        if !self.hits(u, v) {
            if let Some(k) = self.coefficient(u, v)? {
                let m = self.w_measure(u, v, Bracket::exact(m_e));
                self.local = self.local + m.scale(k);
                self.jump = self.jump + Bracket::exact(k * gaps);
            }
            return Ok(());
        }
        if self.inside_window(u, v) {
            let k = self.bound(u, v);
            let m = self.w_measure(u, v, Bracket::exact(m_e));
            self.local = self.local + Bracket::around(0.0, k * m.hi);
            self.jump = self.jump + Bracket::around(0.0, k * gaps);
            return Ok(());
        }
        let child = s.block_len(n + 1);
        if n >= MAX_DEPTH || !(v - child > u + child) {
            // Below floating-point resolution of the gaps: split at the
            // windows and let the set queries resolve the rest.
            return self.spans(Some(s), u, v);
        }
        self.svc_block(s, n + 1, u, u + child)?;
        self.gap(u + child, v - child);
        self.svc_block(s, n + 1, v - child, v)
    }

    fn run(&mut self, e: &NearlyClosedSet) -> Result<()> {
        let pieces = e.pieces();
        for (i, p) in pieces.iter().enumerate() {
            if i > 0 {
                self.gap(pieces[i - 1].right(), p.left());
            }
            match *p {
                Piece::Interval(c, d) => self.spans(None, c, d)?,
                Piece::Point(_) => {}
                Piece::Svc(s) => {
                    let (a, b) = s.base();
                    self.svc_block(&s, 0, a, b)?;
                }
            }
        }
        Ok(())
    }
}

/// Weighted set `E ∩ G_F ∩ G_f ∩ G_g` with repeated sets removed; `None`
/// when it is `E` itself.
fn weighted_set(e: &NearlyClosedSet, sets: &[&MeasurableSubset]) -> Option<MeasurableSubset> {
    let mut parts: Vec<MeasurableSubset> = Vec::new();
    for s in sets {
        if !parts.iter().any(|p| p == *s) {
            parts.push((*s).clone());
        }
    }
    if parts.is_empty() {
        return None;
    }
    parts.insert(0, e.to_subset());
    Some(MeasurableSubset::intersection(parts))
}

fn energy_pass(
    e: &NearlyClosedSet,
    scale: &ScaleFunction,
    f: &TestFunction,
    g: &TestFunction,
    q: f64,
) -> Result<EnergyReport> {
    let pf = Prepared::new(e, f, q);
    let pg = Prepared::new(e, g, q);
    let fs = FormScale::of(scale);
    let mut sets: Vec<&MeasurableSubset> = Vec::new();
    if let FormScale::Charset(gf) = fs {
        sets.push(gf);
    }
    sets.extend(f.inner_charset());
    sets.extend(g.inner_charset());
    let w = weighted_set(e, &sets);
    let w_empty = w.as_ref().is_some_and(|w| w.is_syntactically_empty());
    let mut windows = pf.cuts();
    windows.extend(pg.cuts());
    windows.extend(fs.cuts());
    let sigma_min = fs.sigma_min();
    let mut engine = Engine {
        scale: fs,
        f: &pf,
        g: &pg,
        w,
        w_empty,
        windows: merge_windows(windows),
        q,
        sigma_min,
        local: Bracket::ZERO,
        jump: Bracket::ZERO,
        regions: 0,
    };
    engine.run(e)?;
    Ok(EnergyReport {
        total: engine.local + engine.jump,
        local: engine.local,
        jump: engine.jump,
        regions: engine.regions,
        query_tol: q,
    })
}

/// Energy on `(E, s)`; the measure plays no role in the value.
pub fn energy_on(
    e: &NearlyClosedSet,
    scale: &ScaleFunction,
    f: &TestFunction,
    g: &TestFunction,
    tol: f64,
) -> Result<EnergyReport> {
    if !e.is_bounded() {
        return Err(Error::Unbounded);
    }
    for h in [f, g] {
        if let TestFunction::ScaleComposite { scale: inner, .. } = h {
            if inner.state_space() != e {
                return Err(Error::MismatchedBase);
            }
        }
    }
    let mut q = tol * QUERY_FRACTION;
    let mut best = f64::INFINITY;
    for _ in 0..RETRIES {
        let rep = energy_pass(e, scale, f, g, q)?;
        if rep.total.width() <= tol {
            return Ok(rep);
        }
        best = best.min(rep.total.width());
        q *= QUERY_FRACTION;
    }
    Err(Error::TolNotAchievable {
        tol,
        achieved: best,
    })
}

pub fn energy(
    form: &FormDescriptor,
    f: &TestFunction,
    g: &TestFunction,
    tol: f64,
    mode: EnergyMode,
) -> Result<EnergyReport> {
    if mode == EnergyMode::Strict {
        for h in [f, g] {
            if let DomainVerdict::No(reason) = in_domain(form, h, tol)? {
                return Err(Error::DomainViolation(reason));
            }
        }
    }
    energy_on(&form.e, &form.scale, f, g, tol)
}

/// Where the form's scale is flat inside `E`.
fn flat_part(form: &FormDescriptor) -> Option<MeasurableSubset> {
    let e = form.e.to_subset();
    match form.scale.kind() {
        ScaleKind::Natural => None,
        ScaleKind::Charset { g, .. } => Some(MeasurableSubset::difference(e, g.clone())),
        ScaleKind::Pl(p) => {
            let (b0, b1) = (p.breaks()[0], p.breaks()[p.breaks().len() - 1]);
            let mut flats: Vec<(f64, f64)> = p
                .pieces()
                .filter(|&(_, _, v0, v1)| v0 == v1)
                .map(|(x0, x1, _, _)| (x0, x1))
                .collect();
            flats.push((form.e.l().max(-1e300).min(b0), b0));
            flats.push((b1, form.e.r().min(1e300).max(b1)));
            Some(MeasurableSubset::intersection(vec![
                e,
                MeasurableSubset::intervals(flats),
            ]))
        }
    }
}

/// Where `h' ≠ 0`, in an outer and an inner version that differ only by
/// the uncertainty in locating breakpoints.
fn moving_part(h: &TestFunction, q: f64) -> (MeasurableSubset, MeasurableSubset) {
    match h {
        TestFunction::Pl(f) => {
            let spans: Vec<(f64, f64)> = f
                .pieces()
                .filter(|&(_, _, v0, v1)| v0 != v1)
                .map(|(x0, x1, _, _)| (x0, x1))
                .collect();
            let s = MeasurableSubset::intervals(spans);
            (s.clone(), s)
        }
        TestFunction::ScaleComposite { outer, scale } => {
            let ws: Vec<(f64, f64)> = outer
                .breaks()
                .iter()
                .map(|&y| preimage_window(scale, y, q))
                .collect();
            let mut outer_spans = Vec::new();
            let mut inner_spans = Vec::new();
            for (k, (_, _, v0, v1)) in outer.pieces().enumerate() {
                if v0 != v1 {
                    outer_spans.push((ws[k].0, ws[k + 1].1));
                    if ws[k].1 < ws[k + 1].0 {
                        inner_spans.push((ws[k].1, ws[k + 1].0));
                    }
                }
            }
            let base = match scale.kind() {
                ScaleKind::Charset { g, .. } => g.clone(),
                _ => scale.state_space().to_subset(),
            };
            (
                MeasurableSubset::intersection(vec![
                    base.clone(),
                    MeasurableSubset::intervals(outer_spans),
                ]),
                MeasurableSubset::intersection(vec![
                    base,
                    MeasurableSubset::intervals(inner_spans),
                ]),
            )
        }
    }
}

/// Domain membership: absolute continuity with respect to `s̄` and the
/// boundary condition at finite endpoints outside `E`. Functions in the
/// test class are bounded and square integrable by construction.
pub fn in_domain(form: &FormDescriptor, h: &TestFunction, tol: f64) -> Result<DomainVerdict> {
    if !form.e.is_bounded() {
        return Err(Error::Unbounded);
    }
    if let TestFunction::ScaleComposite { scale, .. } = h {
        if scale.state_space() != &form.e {
            return Err(Error::MismatchedBase);
        }
    }
    let q = tol * QUERY_FRACTION;
    let mut unknown: Option<String> = None;
    for j in form.dirichlet_points() {
        let v = h.eval(j, q);
        if v.lo > tol || v.hi < -tol {
            return Ok(DomainVerdict::No(format!(
                "boundary value f({j}) = {} is not 0",
                v.mid()
            )));
        }
        if v.abs_upper() > tol {
            unknown = Some(format!("boundary value at {j} not resolved"));
        }
    }
    if let Some(flat) = flat_part(form) {
        let (outer, inner) = moving_part(h, q);
        let (l, r) = (form.e.l(), form.e.r());
        let hit_inner =
            MeasurableSubset::intersection(vec![flat.clone(), inner]).measure_in(l, r, q);
        if hit_inner.lo > 0.0 {
            return Ok(DomainVerdict::No(format!(
                "not absolutely continuous with respect to the scale: varies on a set of measure ≥ {:e} where the scale is flat",
                hit_inner.lo
            )));
        }
        let hit_outer = MeasurableSubset::intersection(vec![flat, outer]).measure_in(l, r, q);
        if hit_outer.hi > tol {
            unknown = Some(format!(
                "overlap with the flat part of the scale bracketed in [{:e}, {:e}]",
                hit_outer.lo, hit_outer.hi
            ));
        }
    }
    Ok(match unknown {
        Some(w) => DomainVerdict::Unknown(w),
        None => DomainVerdict::Yes,
    })
}

/// Jump intensity `1/(4 |b - a|)` of each ordered pair of gap endpoints.
pub fn jump_weights(e: &NearlyClosedSet, max_count: usize) -> Result<Vec<((f64, f64), f64)>> {
    if !e.is_bounded() {
        return Err(Error::Unbounded);
    }
    let gaps = e.gaps(max_count, f64::INFINITY)?;
    Ok(gaps
        .gaps
        .iter()
        .map(|&(a, b)| ((a, b), 1.0 / (4.0 * (b - a))))
        .collect())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceIdentity {
    pub lhs: Bracket,
    pub rhs: Bracket,
    pub gap: f64,
}

/// `ℰ(f|_E, f|_E)` under the natural scale against `½ ∫_I (Hf)'²`, where
/// `Hf` is affine across every gap.
pub fn trace_energy_identity(
    e: &NearlyClosedSet,
    f: &PLFunction,
    tol: f64,
) -> Result<TraceIdentity> {
    let h = TestFunction::Pl(f.clone());
    let lhs = energy_on(e, &ScaleFunction::natural(e), &h, &h, tol)?.total;
    let hf = affine_across_gaps(e, f);
    let (l, r) = (e.l(), e.r());
    let mut rhs = 0.0;
    for (x0, x1, v0, v1) in hf.pieces() {
        let (a, b) = (x0.max(l), x1.min(r));
        if b > a {
            let k = (v1 - v0) / (x1 - x0);
            rhs += 0.5 * k * k * (b - a);
        }
    }
    let rhs = Bracket::exact(rhs);
    Ok(TraceIdentity {
        lhs,
        rhs,
        gap: (lhs.mid() - rhs.mid()).abs(),
    })
}

/// `|s̄(E) ∩ (-∞, y)|`, computed from scale values at points of `E` and
/// the images of the gaps.
pub(crate) fn image_measure_below(scale: &ScaleFunction, y: f64, q: f64) -> Bracket {
    fn clip(y: f64, su: Bracket, sv: Bracket) -> Bracket {
        Bracket::new(
            (y.min(sv.lo) - su.hi).max(0.0),
            (y.min(sv.hi) - su.lo).max(0.0),
        )
    }
    fn block(scale: &ScaleFunction, s: &SvcSet, n: u32, u: f64, v: f64, y: f64, q: f64) -> Bracket {
        let su = scale.eval(u, q);
        let sv = scale.eval(v, q);
        if su.lo >= y {
            return Bracket::ZERO;
        }
        let gap_image = match scale.kind() {
            ScaleKind::Pl(p) if p.breaks_inside(u, v).is_empty() => {
                Some(p.slope_at(0.5 * (u + v)) * ((v - u) - s.block_measure(n)))
            }
            ScaleKind::Pl(_) => None,
            _ => Some((v - u) - s.block_measure(n)),
        };
        if let Some(gi) = gap_image {
            if sv.hi <= y {
                return (sv - su - Bracket::exact(gi)).clamp(0.0, f64::INFINITY);
            }
        }
        let c = s.block_len(n + 1);
        if n >= MAX_DEPTH || sv.hi - su.lo <= q || !(v - c > u + c) {
            // gaps inside the block fill part of its image
            let b = clip(y, su, sv);
            let lo = gap_image.map_or(0.0, |gi| (b.lo - gi).max(0.0));
            return Bracket::new(lo, b.hi);
        }
        block(scale, s, n + 1, u, u + c, y, q) + block(scale, s, n + 1, v - c, v, y, q)
    }
    let mut acc = Bracket::ZERO;
    for p in scale.state_space().pieces() {
        match *p {
            Piece::Interval(c, d) => acc = acc + clip(y, scale.eval(c, q), scale.eval(d, q)),
            Piece::Point(_) => {}
            Piece::Svc(s) => {
                let (a, b) = s.base();
                acc = acc + block(scale, &s, 0, a, b, y, q);
            }
        }
    }
    acc
}

/// `∫_E (dh/ds̄)² ds̄` computed in scale coordinates as `∫_{s̄(E)} φ'(y)² dy`.
pub fn scale_side_integral(scale: &ScaleFunction, h: &TestFunction, tol: f64) -> Result<Bracket> {
    let mut q = tol * QUERY_FRACTION;
    let e = scale.state_space();
    let mut segments: Vec<(Bracket, Bracket, f64)> = Vec::new();
    match (h, scale.as_pl()) {
        (
            TestFunction::ScaleComposite {
                outer,
                scale: inner,
            },
            _,
        ) if inner == scale => {
            let lo = scale.eval(e.l(), q);
            let hi = scale.eval(e.r(), q);
            for (y0, y1, v0, v1) in outer.pieces() {
                if y1 <= lo.lo || y0 >= hi.hi {
                    continue;
                }
                segments.push((
                    Bracket::exact(y0),
                    Bracket::exact(y1),
                    (v1 - v0) / (y1 - y0),
                ));
            }
        }
        (TestFunction::Pl(f), Some(s)) => {
            let hf = affine_across_gaps(e, f);
            let (l, r) = (e.l(), e.r());
            let mut xs: Vec<f64> = hf
                .breaks()
                .iter()
                .chain(s.breaks().iter())
                .copied()
                .filter(|&x| x > l && x < r)
                .collect();
            xs.push(l);
            xs.push(r);
            xs.sort_by(f64::total_cmp);
            xs.dedup();
            for w in xs.windows(2) {
                let (x0, x1) = (w[0], w[1]);
                let mid = 0.5 * (x0 + x1);
                let sigma = s.slope_at(mid);
                let a = hf.slope_at(mid);
                if sigma > 0.0 {
                    segments.push((
                        Bracket::exact(s.eval(x0)),
                        Bracket::exact(s.eval(x1)),
                        a / sigma,
                    ));
                } else if a != 0.0 && e.mass_in(x0, x1, q).measure.hi > 0.0 {
                    return Err(Error::DomainViolation(format!(
                        "function varies on ({x0}, {x1}) where the scale is flat"
                    )));
                }
            }
        }
        _ if scale.is_natural() => return Ok(energy_on(e, scale, h, h, tol)?.local.scale(2.0)),
        _ => {
            return Err(Error::Unsupported(
                "probe must be piecewise linear or composed with this scale".into(),
            ))
        }
    }
    // each query error is weighted by the squared slope
    let steepest = segments.iter().fold(1.0f64, |m, s| m.max(s.2 * s.2));
    q /= steepest;
    let mut acc = Bracket::ZERO;
    for (y0, y1, c) in segments {
        if c == 0.0 {
            continue;
        }
        let at = |y: Bracket| {
            let a = image_measure_below(scale, y.lo, q);
            if y.is_exact() {
                a
            } else {
                Bracket::new(a.lo, image_measure_below(scale, y.hi, q).hi)
            }
        };
        let m = (at(y1) - at(y0)).clamp(0.0, f64::INFINITY);
        acc = acc + m.scale(c * c);
    }
    Ok(acc)
}

/// Predicted `ℰ_parent(h, h) - ℰ_child(h, h)` from the defect measure
/// `(s̄'² - s̄') dx` of the child scale.
pub fn predicted_discrepancy(child: &ScaleFunction, h: &TestFunction, tol: f64) -> Result<Bracket> {
    let (s, f) = match (child.as_pl(), h) {
        (Some(s), TestFunction::Pl(f)) => (s, f),
        _ => return Ok(Bracket::ZERO),
    };
    let e = child.state_space();
    let hf = affine_across_gaps(e, f);
    let (l, r) = (e.l(), e.r());
    let mut xs: Vec<f64> = hf
        .breaks()
        .iter()
        .chain(s.breaks().iter())
        .copied()
        .filter(|&x| x > l && x < r)
        .collect();
    xs.push(l);
    xs.push(r);
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    let mut acc = Bracket::ZERO;
    for w in xs.windows(2) {
        let mid = 0.5 * (w[0] + w[1]);
        let sigma = s.slope_at(mid);
        if sigma > 0.0 {
            let c = hf.slope_at(mid) / sigma;
            let df = child.defect_cumulative(w[1], tol) - child.defect_cumulative(w[0], tol);
            acc = acc + df.scale(0.5 * c * c);
        }
    }
    Ok(acc)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Verdict {
    Pass,
    Fail,
    Skip,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbeRow {
    pub probe: usize,
    pub in_child: DomainVerdict,
    pub in_parent: DomainVerdict,
    pub child_energy: Option<Bracket>,
    pub parent_energy: Option<Bracket>,
    /// `parent - child`.
    pub discrepancy: Option<f64>,
    /// `∫_E (dh/ds̄)² ds̄` in scale coordinates.
    pub identity_lhs: Option<Bracket>,
    /// `∫_E h'² dx`.
    pub identity_rhs: Option<Bracket>,
    pub identity_gap: Option<f64>,
    pub predicted: Option<Bracket>,
    pub verdict: Verdict,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SubspaceReport {
    pub admissible: Admissible,
    pub rows: Vec<ProbeRow>,
    /// For scales outside the admissible family: whether every measured
    /// discrepancy matches the defect prediction.
    pub defect_matched: Option<bool>,
    pub verdict: Verdict,
    pub tol: f64,
}

impl SubspaceReport {
    pub fn to_csv(&self) -> String {
        let fmt = |b: &Option<Bracket>| b.map_or(String::new(), |b| format!("{:.17e}", b.mid()));
        let fmt1 = |x: &Option<f64>| x.map_or(String::new(), |x| format!("{x:.17e}"));
        let mut out = String::from("probe,child_energy,parent_energy,discrepancy,identity_lhs,identity_rhs,identity_gap,predicted,verdict\n");
        for r in &self.rows {
            let v = serde_json::to_value(r.verdict).expect("verdict serializes");
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{}\n",
                r.probe,
                fmt(&r.child_energy),
                fmt(&r.parent_energy),
                fmt1(&r.discrepancy),
                fmt(&r.identity_lhs),
                fmt(&r.identity_rhs),
                fmt1(&r.identity_gap),
                fmt(&r.predicted),
                v.as_str().unwrap_or_default()
            ));
        }
        out
    }
}

/// Checks that `child` is a Fukushima subspace of the natural-scale
/// `parent` on the given probes.
pub fn verify_subspace(
    child: &FormDescriptor,
    parent: &FormDescriptor,
    probes: &[TestFunction],
    tol: f64,
) -> Result<SubspaceReport> {
    if child.e != parent.e || child.mu != parent.mu {
        return Err(Error::MismatchedBase);
    }
    if !parent.scale.is_natural() {
        return Err(Error::NotNaturalScale);
    }
    let admissible = child.scale.is_in_s(tol);
    let in_s = admissible == Admissible::Yes;
    let mut rows = Vec::with_capacity(probes.len());
    let mut matched = true;
    for (i, h) in probes.iter().enumerate() {
        let in_child = in_domain(child, h, tol)?;
        let in_parent = in_domain(parent, h, tol)?;
        let mut row = ProbeRow {
            probe: i,
            in_child: in_child.clone(),
            in_parent: in_parent.clone(),
            child_energy: None,
            parent_energy: None,
            discrepancy: None,
            identity_lhs: None,
            identity_rhs: None,
            identity_gap: None,
            predicted: None,
            verdict: Verdict::Skip,
        };
        if in_child != DomainVerdict::Yes {
            rows.push(row);
            continue;
        }
        if in_parent != DomainVerdict::Yes {
            row.verdict = Verdict::Fail;
            rows.push(row);
            continue;
        }
        let ce = energy_on(&child.e, &child.scale, h, h, tol)?;
        let pe = energy_on(&parent.e, &parent.scale, h, h, tol)?;
        let disc = pe.total.mid() - ce.total.mid();
        // the identity is checked at the finest tolerance the probe allows
        let mut id_tol = tol * QUERY_FRACTION;
        let local = loop {
            match energy_on(&parent.e, &parent.scale, h, h, id_tol) {
                Err(Error::TolNotAchievable { .. }) if id_tol < tol => {
                    id_tol = (id_tol * 10.0).min(tol)
                }
                other => break other?.local,
            }
        };
        let lhs = scale_side_integral(&child.scale, h, id_tol)?;
        let rhs = local.scale(2.0);
        let igap = (lhs.mid() - rhs.mid()).abs();
        let predicted = predicted_discrepancy(&child.scale, h, tol)?;
        if !in_s && (disc - predicted.mid()).abs() > tol {
            matched = false;
        }
        row.verdict = if disc.abs() <= tol && igap <= tol {
            Verdict::Pass
        } else {
            Verdict::Fail
        };
        row.child_energy = Some(ce.total);
        row.parent_energy = Some(pe.total);
        row.discrepancy = Some(disc);
        row.identity_lhs = Some(lhs);
        row.identity_rhs = Some(rhs);
        row.identity_gap = Some(igap);
        row.predicted = Some(predicted);
        rows.push(row);
    }
    let all_pass = rows.iter().all(|r| r.verdict != Verdict::Fail);
    let verdict = if in_s && all_pass {
        Verdict::Pass
    } else {
        Verdict::Fail
    };
    Ok(SubspaceReport {
        admissible,
        rows,
        defect_matched: if in_s { None } else { Some(matched) },
        verdict,
        tol,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn id() -> TestFunction {
        TestFunction::Pl(PLFunction::identity(0.0, 1.0))
    }

    fn thirds() -> NearlyClosedSet {
        NearlyClosedSet::intervals(&[(0.0, 1.0 / 3.0), (2.0 / 3.0, 1.0)]).unwrap()
    }

    #[test]
    fn identity_energy_on_simple_sets() {
        let unit = NearlyClosedSet::interval(0.0, 1.0).unwrap();
        let r = energy_on(&unit, &ScaleFunction::natural(&unit), &id(), &id(), 1e-12).unwrap();
        assert_eq!(r.total, Bracket::exact(0.5));
        let e = thirds();
        let r = energy_on(&e, &ScaleFunction::natural(&e), &id(), &id(), 1e-12).unwrap();
        assert!((r.total.mid() - 0.5).abs() < 1e-15);
        assert!((r.jump.mid() - 1.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn jump_weights_of_one_gap() {
        let w = jump_weights(&thirds(), 10).unwrap();
        assert_eq!(w.len(), 1);
        assert!((w[0].1 - 0.75).abs() < 1e-15);
        let two = NearlyClosedSet::points(&[0.0, 1.0]).unwrap();
        assert_eq!(jump_weights(&two, 10).unwrap(), vec![((0.0, 1.0), 0.25)]);
    }

    #[test]
    fn boundary_clause() {
        let e = NearlyClosedSet::interval(0.0, 1.0)
            .unwrap()
            .with_endpoints(false, true)
            .unwrap();
        let mu = StieltjesMeasure::uniform(0.0, 1.0, 1.0).unwrap();
        let form = FormDescriptor::new(e.clone(), ScaleFunction::natural(&e), mu).unwrap();
        let one = TestFunction::Pl(PLFunction::constant(1.0, 0.0, 1.0));
        assert!(
            matches!(in_domain(&form, &one, 1e-12).unwrap(), DomainVerdict::No(w) if w.contains("boundary"))
        );
        assert_eq!(in_domain(&form, &id(), 1e-12).unwrap(), DomainVerdict::Yes);
        assert!(matches!(
            energy(&form, &one, &one, 1e-9, EnergyMode::Strict),
            Err(Error::DomainViolation(_))
        ));
    }

    #[test]
    fn trace_identity_examples() {
        let e = thirds();
        let step = PLFunction::new(vec![1.0 / 3.0, 2.0 / 3.0], vec![0.0, 1.0]).unwrap();
        let t = trace_energy_identity(&e, &step, 1e-12).unwrap();
        assert!((t.lhs.mid() - 1.5).abs() < 1e-12 && (t.rhs.mid() - 1.5).abs() < 1e-12);
        let two = NearlyClosedSet::points(&[0.0, 1.0]).unwrap();
        let t = trace_energy_identity(&two, &PLFunction::identity(0.0, 1.0), 1e-12).unwrap();
        assert_eq!((t.lhs.mid(), t.rhs.mid()), (0.5, 0.5));
    }

    #[test]
    fn slope_half_child_discrepancy() {
        let unit = NearlyClosedSet::interval(0.0, 1.0).unwrap();
        let parent = FormDescriptor::natural(&unit).unwrap();
        let half = ScaleFunction::general_pl(
            &unit,
            PLFunction::new(vec![0.0, 1.0], vec![0.0, 0.5]).unwrap(),
        )
        .unwrap();
        let child = parent.with_scale(half).unwrap();
        let rep = verify_subspace(&child, &parent, &[id()], 1e-10).unwrap();
        assert_eq!(rep.verdict, Verdict::Fail);
        let row = &rep.rows[0];
        assert!((row.child_energy.unwrap().mid() - 1.0).abs() < 1e-15);
        assert!((row.discrepancy.unwrap() + 0.5).abs() < 1e-15);
        assert!((row.predicted.unwrap().mid() + 0.5).abs() < 1e-15);
        assert_eq!(rep.defect_matched, Some(true));
    }

    fn fat_minimal() -> (FormDescriptor, TestFunction) {
        let e = NearlyClosedSet::svc(SvcSet::middle_fourths(0.0, 1.0).unwrap()).unwrap();
        let s = ScaleFunction::from_charset(
            &e,
            MeasurableSubset::intervals(Vec::new()),
            Some(0.0),
            1e-12,
        )
        .unwrap();
        let form = FormDescriptor::new(
            e.clone(),
            s.clone(),
            StieltjesMeasure::reference_on(&e).unwrap(),
        )
        .unwrap();
        (
            form,
            TestFunction::composite(PLFunction::identity(0.0, 0.5), s),
        )
    }

    #[test]
    fn fat_cantor_minimal_form_is_pure_jump() {
        let (form, s) = fat_minimal();
        let r = energy(&form, &s, &s, 1e-9, EnergyMode::Strict).unwrap();
        assert_eq!(r.local, Bracket::ZERO);
        assert!(r.total.contains(0.25) && r.total.width() <= 1e-9);
        assert!(matches!(
            in_domain(&form, &id(), 1e-9).unwrap(),
            DomainVerdict::No(_)
        ));
    }

    #[test]
    fn charset_child_agrees_with_natural_parent() {
        let e = NearlyClosedSet::svc(SvcSet::middle_fourths(0.0, 1.0).unwrap()).unwrap();
        let parent = FormDescriptor::natural(&e).unwrap();
        let g = MeasurableSubset::intersection(vec![
            e.to_subset(),
            MeasurableSubset::interval(0.0, 0.5),
        ]);
        let s = ScaleFunction::from_charset(&e, g, None, 1e-12).unwrap();
        let child = parent.with_scale(s.clone()).unwrap();
        let outer = PLFunction::new(vec![0.0, 0.2, 0.35, 0.6], vec![0.0, 1.0, -0.5, 0.25]).unwrap();
        let h = TestFunction::composite(outer, s);
        let rep = verify_subspace(&child, &parent, &[h], 1e-8).unwrap();
        assert_eq!(rep.verdict, Verdict::Pass, "{rep:?}");
    }

    #[test]
    fn windows_merge() {
        assert_eq!(
            merge_windows(vec![(0.5, 0.5), (0.1, 0.2), (0.15, 0.3), (0.5, 0.5)]),
            vec![(0.1, 0.3), (0.5, 0.5)]
        );
    }
}
