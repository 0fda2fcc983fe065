//! The ordered family of Fukushima subspaces of a natural-scale form,
//! indexed by characteristic sets `G ⊆ E`.

use serde::{Deserialize, Serialize};

use crate::bracket::Bracket;
use crate::error::{Error, Result};
use crate::forms::{image_measure_below, FormDescriptor};
use crate::measures::{map_affine, StieltjesMeasure};
use crate::pl::PLFunction;
use crate::scale::{Admissible, ScaleFunction, ScaleKind};
use crate::sets::{MeasurableSubset, NearlyClosedSet, Piece, SetJson, SvcSet, UbiquitousSet};

/// Measure budget of the ubiquitous set used to build proper subspaces.
const UBIQUITOUS_BUDGET: f64 = 0.5;

/// A subspace `(E, s_G, μ)`: the characteristic set `G`, its scale and form.
#[derive(Clone, Debug, PartialEq)]
pub struct SubspaceDescriptor {
    g: MeasurableSubset,
    form: FormDescriptor,
}

#[derive(Serialize)]
struct DescriptorJson<'a> {
    #[serde(rename = "G")]
    g: SetJson,
    form: &'a FormDescriptor,
}

impl Serialize for SubspaceDescriptor {
    fn serialize<S: serde::Serializer>(&self, ser: S) -> std::result::Result<S::Ok, S::Error> {
        DescriptorJson {
            g: SetJson::from(self.g.clone()),
            form: &self.form,
        }
        .serialize(ser)
    }
}

impl SubspaceDescriptor {
    /// Checks `G ⊆ E` a.e. and that `G ∪ (I ∖ E)` is measure-dense.
    pub fn new(
        e: &NearlyClosedSet,
        mu: &StieltjesMeasure,
        g: MeasurableSubset,
        tol: f64,
    ) -> Result<Self> {
        let scale = if g == e.to_subset() {
            ScaleFunction::natural(e)
        } else {
            ScaleFunction::from_charset(e, g.clone(), None, tol)?
        };
        Ok(SubspaceDescriptor {
            g,
            form: FormDescriptor::new(e.clone(), scale, mu.clone())?,
        })
    }

    /// The full form, `G = E`.
    pub fn full(e: &NearlyClosedSet, mu: &StieltjesMeasure) -> Result<Self> {
        SubspaceDescriptor::new(e, mu, e.to_subset(), 0.0)
    }

    pub fn characteristic_set(&self) -> &MeasurableSubset {
        &self.g
    }

    pub fn form(&self) -> &FormDescriptor {
        &self.form
    }

    pub fn state_space(&self) -> &NearlyClosedSet {
        self.form.state_space()
    }

    pub fn scale(&self) -> &ScaleFunction {
        self.form.scale()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Decision {
    Equal,
    Subset,
    Superset,
    Incomparable,
    Unknown,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub decision: Decision,
    /// Which difference certified the decision, when one is positive.
    pub witness: Option<String>,
    /// `|G_A ∖ G_B|` and `|G_B ∖ G_A|`.
    pub brackets: ComparisonBrackets,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComparisonBrackets {
    pub a_minus_b: Bracket,
    pub b_minus_a: Bracket,
}

/// Three-valued answer.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Tri {
    Yes,
    No,
    Unknown,
}

fn positive(b: Bracket, tol: f64) -> Tri {
    if b.lo > 0.0 {
        Tri::Yes
    } else if b.hi < tol {
        Tri::No
    } else {
        Tri::Unknown
    }
}

fn hull(e: &NearlyClosedSet) -> Result<(f64, f64)> {
    if !e.is_bounded() {
        return Err(Error::Unbounded);
    }
    Ok((e.l(), e.r()))
}

/// Order of the domains, read off a.e. inclusion of characteristic sets.
pub fn compare(a: &SubspaceDescriptor, b: &SubspaceDescriptor, tol: f64) -> Result<Comparison> {
    if a.state_space() != b.state_space() || a.form.mu() != b.form.mu() {
        return Err(Error::MismatchedBase);
    }
    let (l, r) = hull(a.state_space())?;
    let a_minus_b = MeasurableSubset::difference(a.g.clone(), b.g.clone()).measure_in(l, r, tol);
    let b_minus_a = MeasurableSubset::difference(b.g.clone(), a.g.clone()).measure_in(l, r, tol);
    let decision = match (positive(a_minus_b, tol), positive(b_minus_a, tol)) {
        (Tri::No, Tri::No) => Decision::Equal,
        (Tri::No, Tri::Yes) => Decision::Subset,
        (Tri::Yes, Tri::No) => Decision::Superset,
        (Tri::Yes, Tri::Yes) => Decision::Incomparable,
        _ => Decision::Unknown,
    };
    let witness = match decision {
        Decision::Subset => Some(format!("|G_B \\ G_A| >= {:e}", b_minus_a.lo)),
        Decision::Superset => Some(format!("|G_A \\ G_B| >= {:e}", a_minus_b.lo)),
        Decision::Incomparable => Some(format!(
            "|G_A \\ G_B| >= {:e} and |G_B \\ G_A| >= {:e}",
            a_minus_b.lo, b_minus_a.lo
        )),
        Decision::Equal | Decision::Unknown => None,
    };
    Ok(Comparison {
        decision,
        witness,
        brackets: ComparisonBrackets {
            a_minus_b,
            b_minus_a,
        },
    })
}

/// Whether the subspace differs from the full form: `|E ∖ G| > 0`.
pub fn is_proper(d: &SubspaceDescriptor, tol: f64) -> Result<(Tri, Bracket)> {
    let e = d.state_space();
    let (l, r) = hull(e)?;
    let rest = MeasurableSubset::difference(e.to_subset(), d.g.clone()).measure_in(l, r, tol);
    Ok((positive(rest, tol), rest))
}

/// Proper subspaces exist exactly when `|E| > 0`.
pub fn has_proper_subspaces(e: &NearlyClosedSet, tol: f64) -> Result<(bool, Bracket)> {
    let m = e.lebesgue_measure()?;
    match positive(m, tol) {
        Tri::Yes => Ok((true, m)),
        Tri::No if m.hi == 0.0 => Ok((false, m)),
        _ => Err(Error::Undecided),
    }
}

/// The `G = ∅` subspace, pure jump, when `E` is nowhere dense.
pub fn minimal_subspace(
    e: &NearlyClosedSet,
    mu: &StieltjesMeasure,
) -> Result<Option<SubspaceDescriptor>> {
    if !e.is_nowhere_dense() {
        return Ok(None);
    }
    SubspaceDescriptor::new(e, mu, MeasurableSubset::Empty, 0.0).map(Some)
}

/// A proper subspace, when one exists: `G = ∅` for nowhere dense `E` of
/// positive measure, otherwise a ubiquitous set on the first interval
/// piece `(c, d)` together with `E ∖ (c, d)`.
pub fn construct_proper(
    e: &NearlyClosedSet,
    mu: &StieltjesMeasure,
    tol: f64,
) -> Result<Option<SubspaceDescriptor>> {
    if !has_proper_subspaces(e, tol)?.0 {
        return Ok(None);
    }
    if e.is_nowhere_dense() {
        return minimal_subspace(e, mu);
    }
    let (c, d) = e
        .pieces()
        .iter()
        .find_map(|p| match *p {
            Piece::Interval(c, d) => Some((c, d)),
            _ => None,
        })
        .expect("a set with interior has an interval piece");
    let g = MeasurableSubset::union(vec![
        MeasurableSubset::ubiquitous(UbiquitousSet::new(c, d, UBIQUITOUS_BUDGET)?),
        MeasurableSubset::difference(e.to_subset(), MeasurableSubset::interval(c, d)),
    ]);
    SubspaceDescriptor::new(e, mu, g, tol).map(Some)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MinimalKind {
    No,
    Yes,
    /// `|E| = 0`: the full form is the only element.
    TriviallyUnique,
}

fn yes_no<S: serde::Serializer>(b: &bool, ser: S) -> std::result::Result<S::Ok, S::Error> {
    ser.serialize_str(if *b { "yes" } else { "no" })
}

#[derive(Clone, Debug, Serialize)]
pub struct Classification {
    #[serde(serialize_with = "yes_no")]
    pub proper_subspaces: bool,
    pub minimal_exists: MinimalKind,
    pub measure: Bracket,
    pub nowhere_dense: bool,
    pub witness: Option<SubspaceDescriptor>,
}

/// Decides both questions for `E`. The witness is built over `mu`, or over
/// the reference measure on `E` when `mu` is `None`.
pub fn classify(
    e: &NearlyClosedSet,
    mu: Option<&StieltjesMeasure>,
    tol: f64,
) -> Result<Classification> {
    let (proper, measure) = has_proper_subspaces(e, tol)?;
    let nowhere_dense = e.is_nowhere_dense();
    let minimal_exists = match (nowhere_dense, proper) {
        (false, _) => MinimalKind::No,
        (true, true) => MinimalKind::Yes,
        (true, false) => MinimalKind::TriviallyUnique,
    };
    Ok(Classification {
        proper_subspaces: proper,
        minimal_exists,
        measure,
        nowhere_dense,
        witness: if proper {
            let mu = match mu {
                Some(m) => m.clone(),
                None => StieltjesMeasure::reference_on(e)?,
            };
            construct_proper(e, &mu, tol)?
        } else {
            None
        },
    })
}

fn strictly_increasing_on(s: &PLFunction, l: f64, r: f64) -> bool {
    s.pieces()
        .filter(|&(x0, x1, _, _)| x1 > l && x0 < r)
        .all(|(_, _, v0, v1)| v1 > v0)
        && (s.breaks()[0] <= l && s.breaks()[s.breaks().len() - 1] >= r)
}

/// Image of `E` under an increasing piecewise-linear map; generator pieces
/// must sit inside one affine piece.
fn transport_set(e: &NearlyClosedSet, s: &PLFunction) -> Result<NearlyClosedSet> {
    let mut pieces = Vec::with_capacity(e.pieces().len());
    for p in e.pieces() {
        pieces.push(match *p {
            Piece::Interval(c, d) => Piece::Interval(s.eval(c), s.eval(d)),
            Piece::Point(x) => Piece::Point(s.eval(x)),
            Piece::Svc(g) => {
                let (a, b) = g.base();
                if !s.breaks_inside(a, b).is_empty() {
                    return Err(Error::Unsupported(
                        "base scale bends inside a generator piece".into(),
                    ));
                }
                Piece::Svc(SvcSet::new(s.eval(a), s.eval(b), g.schedule())?)
            }
        });
    }
    NearlyClosedSet::new(pieces, e.l_in_e(), e.r_in_e())
}

/// Image of a measurable set under an increasing piecewise-linear map.
fn transport_subset(g: &MeasurableSubset, s: &PLFunction) -> Result<MeasurableSubset> {
    let mut parts = Vec::new();
    for (x0, x1, v0, v1) in s.pieces() {
        let k = (v1 - v0) / (x1 - x0);
        let piece =
            MeasurableSubset::intersection(vec![g.clone(), MeasurableSubset::interval(x0, x1)]);
        parts.push(map_affine(&piece, k, v0 - k * x0)?);
    }
    Ok(MeasurableSubset::union(parts))
}

/// A subspace relative to a general base scale `𝐬`, given by the candidate
/// scale `𝔰̄ = ψ ∘ 𝐬̄`, carried to natural coordinates: `E ↦ 𝐬(E)`,
/// `μ ↦ μ ∘ 𝐬⁻¹`, and `ψ` becomes a scale on `𝐬(E)` whose characteristic
/// set is read off where `ψ' = 1`.
pub fn to_natural(
    base: &ScaleFunction,
    mu: &StieltjesMeasure,
    psi: &PLFunction,
    tol: f64,
) -> Result<SubspaceDescriptor> {
    let e = base.state_space();
    let (l, r) = hull(e)?;
    let q = tol * 1e-3;
    let (y_lo, y_hi) = (base.eval(l, q), base.eval(r, q));
    for (y0, y1, v0, v1) in psi.pieces() {
        let (a, b) = (y0.max(y_lo.lo), y1.min(y_hi.hi));
        if !(b > a) {
            continue;
        }
        let k = (v1 - v0) / (y1 - y0);
        let on_e =
            (image_measure_below(base, b, q) - image_measure_below(base, a, q)).clamp(0.0, b - a);
        let on_gaps = (Bracket::exact(b - a) - on_e).clamp(0.0, b - a);
        let zero_or_one = k.abs() <= 1e-12 || (k - 1.0).abs() <= 1e-12;
        if !zero_or_one && on_e.lo > 0.0 {
            return Err(Error::NotInSs(format!(
                "density {k} on ({a}, {b}), which carries λ_s-mass ≥ {:e} of E",
                on_e.lo
            )));
        }
        if (k - 1.0).abs() > 1e-12 && on_gaps.lo > 0.0 {
            return Err(Error::NotInSs(format!(
                "density {k} on gap image in ({a}, {b}), expected 1"
            )));
        }
    }
    let s = match base.kind() {
        ScaleKind::Natural => PLFunction::identity(l, r),
        ScaleKind::Pl(p) => p.clone(),
        ScaleKind::Charset { .. } => {
            return Err(Error::Unsupported(
                "transport under a characteristic-set base scale".into(),
            ))
        }
    };
    if !strictly_increasing_on(&s, l, r) {
        return Err(Error::InvalidScale(
            "base scale must be strictly increasing on the hull of E".into(),
        ));
    }
    let e2 = transport_set(e, &s)?;
    let mu2 = mu.pushforward(base, tol)?;
    let candidate = ScaleFunction::general_pl(&e2, psi.clone())?;
    let g = match candidate.is_in_s(tol) {
        Admissible::Yes => candidate.characteristic_set(tol)?,
        Admissible::No(w) | Admissible::Unknown(w) => return Err(Error::NotInSs(w)),
    };
    let g = if g == e2.to_subset() {
        g
    } else {
        simplify_full(&e2, g, tol)
    };
    SubspaceDescriptor::new(&e2, &mu2, g, tol)
}

/// Replaces `G` by `E` itself when they agree a.e.
fn simplify_full(e: &NearlyClosedSet, g: MeasurableSubset, tol: f64) -> MeasurableSubset {
    let (l, r) = (e.l(), e.r());
    let gap = MeasurableSubset::difference(e.to_subset(), g.clone()).measure_in(l, r, tol);
    if gap.hi == 0.0 {
        e.to_subset()
    } else {
        g
    }
}

/// Carries a subspace under an increasing piecewise-linear change of
/// variable `x ↦ s(x)`.
pub fn transport(d: &SubspaceDescriptor, s: &PLFunction, tol: f64) -> Result<SubspaceDescriptor> {
    let e = d.state_space();
    let (l, r) = hull(e)?;
    if !strictly_increasing_on(s, l, r) {
        return Err(Error::InvalidScale(
            "map must be strictly increasing on the hull of E".into(),
        ));
    }
    let scale = ScaleFunction::general_pl(e, s.clone())?;
    let e2 = transport_set(e, s)?;
    let mu2 = d.form.mu().pushforward(&scale, tol)?;
    let g2 = if d.g == e.to_subset() {
        e2.to_subset()
    } else {
        transport_subset(&d.g, s)?
    };
    SubspaceDescriptor::new(&e2, &mu2, g2, tol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forms::{energy, EnergyMode, TestFunction};

    fn unit() -> (NearlyClosedSet, StieltjesMeasure) {
        let e = NearlyClosedSet::interval(0.0, 1.0).unwrap();
        let mu = StieltjesMeasure::reference_on(&e).unwrap();
        (e, mu)
    }

    fn fat() -> (NearlyClosedSet, StieltjesMeasure) {
        let e = NearlyClosedSet::svc(SvcSet::middle_fourths(0.0, 1.0).unwrap()).unwrap();
        let mu = StieltjesMeasure::reference_on(&e).unwrap();
        (e, mu)
    }

    #[test]
    fn classification_matrix() {
        let mid = SvcSet::middle_thirds(0.0, 1.0).unwrap();
        let cases = [
            (
                NearlyClosedSet::interval(0.0, 1.0).unwrap(),
                true,
                MinimalKind::No,
            ),
            (
                NearlyClosedSet::intervals(&[(0.0, 1.0 / 3.0), (2.0 / 3.0, 1.0)]).unwrap(),
                true,
                MinimalKind::No,
            ),
            (
                NearlyClosedSet::svc(mid.clone()).unwrap(),
                false,
                MinimalKind::TriviallyUnique,
            ),
            (
                NearlyClosedSet::svc(SvcSet::middle_fourths(0.0, 1.0).unwrap()).unwrap(),
                true,
                MinimalKind::Yes,
            ),
            (
                NearlyClosedSet::points(&[0.0, 1.0]).unwrap(),
                false,
                MinimalKind::TriviallyUnique,
            ),
        ];
        for (e, proper, minimal) in cases {
            let mu = if e.lebesgue_measure().unwrap().hi > 0.0 {
                StieltjesMeasure::reference_on(&e).unwrap()
            } else if e.pieces().iter().any(|p| matches!(p, Piece::Svc(_))) {
                StieltjesMeasure::cantor_grid(&mid, 4, 1.0).unwrap()
            } else {
                StieltjesMeasure::atomic(&[(0.0, 1.0), (1.0, 1.0)]).unwrap()
            };
            let c = classify(&e, Some(&mu), 1e-9).unwrap();
            assert_eq!(classify(&e, None, 1e-9).unwrap().minimal_exists, minimal);
            assert_eq!(
                (c.proper_subspaces, c.minimal_exists),
                (proper, minimal),
                "{e:?}"
            );
            assert_eq!(c.witness.is_some(), proper);
        }
    }

    #[test]
    fn empty_below_everything_on_nowhere_dense_sets() {
        let (e, mu) = fat();
        let lo = minimal_subspace(&e, &mu).unwrap().unwrap();
        let hi = SubspaceDescriptor::full(&e, &mu).unwrap();
        assert_eq!(compare(&lo, &hi, 1e-9).unwrap().decision, Decision::Subset);
        assert_eq!(compare(&hi, &hi, 1e-9).unwrap().decision, Decision::Equal);
        assert_eq!(is_proper(&lo, 1e-9).unwrap().0, Tri::Yes);
        assert_eq!(is_proper(&hi, 1e-9).unwrap().0, Tri::No);
    }

    #[test]
    fn crossed_ubiquitous_sets_are_incomparable() {
        let (e, mu) = unit();
        let u =
            |c: f64, d: f64| MeasurableSubset::ubiquitous(UbiquitousSet::new(c, d, 0.5).unwrap());
        let a = SubspaceDescriptor::new(
            &e,
            &mu,
            MeasurableSubset::union(vec![u(0.0, 0.5), MeasurableSubset::interval(0.5, 1.0)]),
            1e-9,
        )
        .unwrap();
        let b = SubspaceDescriptor::new(
            &e,
            &mu,
            MeasurableSubset::union(vec![MeasurableSubset::interval(0.0, 0.5), u(0.5, 1.0)]),
            1e-9,
        )
        .unwrap();
        let c = compare(&a, &b, 1e-9).unwrap();
        assert_eq!(c.decision, Decision::Incomparable, "{c:?}");
    }

    #[test]
    fn proper_constructions() {
        let (e, mu) = unit();
        let d = construct_proper(&e, &mu, 1e-9).unwrap().unwrap();
        let (p, rest) = is_proper(&d, 1e-9).unwrap();
        assert_eq!(p, Tri::Yes);
        assert!(rest.lo >= 0.5 - 1e-6);
        assert!(minimal_subspace(&e, &mu).unwrap().is_none());
        let cantor = NearlyClosedSet::svc(SvcSet::middle_thirds(0.0, 1.0).unwrap()).unwrap();
        let grid = StieltjesMeasure::cantor_grid(&SvcSet::middle_thirds(0.0, 1.0).unwrap(), 4, 1.0)
            .unwrap();
        assert!(!has_proper_subspaces(&cantor, 1e-9).unwrap().0);
        assert!(construct_proper(&cantor, &grid, 1e-9).unwrap().is_none());
    }

    #[test]
    fn minimal_form_energy() {
        let (e, mu) = fat();
        let d = minimal_subspace(&e, &mu).unwrap().unwrap();
        let s = TestFunction::composite(PLFunction::identity(0.0, 0.5), d.scale().clone());
        let rep = energy(d.form(), &s, &s, 1e-9, EnergyMode::Strict).unwrap();
        assert!(rep.total.contains(0.25) && rep.local == Bracket::ZERO);
    }

    #[test]
    fn general_base_scale() {
        let (e, mu) = unit();
        let id = to_natural(
            &ScaleFunction::natural(&e),
            &mu,
            &PLFunction::identity(0.0, 1.0),
            1e-9,
        )
        .unwrap();
        assert_eq!(id.state_space(), &e);
        assert!(id.scale().is_natural());
        let doubled =
            ScaleFunction::general_pl(&e, PLFunction::new(vec![0.0, 1.0], vec![0.0, 2.0]).unwrap())
                .unwrap();
        let d = to_natural(&doubled, &mu, &PLFunction::identity(0.0, 2.0), 1e-9).unwrap();
        assert_eq!((d.state_space().l(), d.state_space().r()), (0.0, 2.0));
        let g0 = MeasurableSubset::ubiquitous(UbiquitousSet::new(0.0, 1.0, 0.5).unwrap());
        let base = ScaleFunction::from_charset(&e, g0, Some(0.0), 1e-9).unwrap();
        let half = PLFunction::new(vec![0.0, 1.0], vec![0.0, 0.5]).unwrap();
        assert!(matches!(
            to_natural(&base, &mu, &half, 1e-6),
            Err(Error::NotInSs(_))
        ));
    }
}
