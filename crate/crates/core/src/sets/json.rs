//! JSON shape shared by state spaces and measurable sets:
//! `{"kind":"union","pieces":[...],"l_in_E":true,"r_in_E":true}` where a
//! piece is `{"interval":[c,d]}`, `{"point":c}`, `{"svc":{...}}`,
//! `{"ubiquitous":{...}}`, or a nested set object.

use std::fmt;

use serde::de::{self, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::intervals::IntervalUnion;
use super::nearly_closed::{NearlyClosedSet, Piece};
use super::subset::{Leaf, MeasurableSubset};
use super::svc::{RemovalSchedule, SvcSet};
use super::ubiquitous::UbiquitousSet;
use crate::error::Error;

/// A real number that may be `±∞`, written as `"inf"` / `"-inf"` in JSON.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ExtReal(pub f64);

impl Serialize for ExtReal {
    fn serialize<S: Serializer>(&self, ser: S) -> Result<S::Ok, S::Error> {
        if self.0 == f64::INFINITY {
            ser.serialize_str("inf")
        } else if self.0 == f64::NEG_INFINITY {
            ser.serialize_str("-inf")
        } else {
            ser.serialize_f64(self.0)
        }
    }
}

impl<'de> Deserialize<'de> for ExtReal {
    fn deserialize<D: Deserializer<'de>>(de: D) -> Result<Self, D::Error> {
        struct V;
        impl<'de> Visitor<'de> for V {
            type Value = ExtReal;
            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a number, \"inf\" or \"-inf\"")
            }
            fn visit_f64<E: de::Error>(self, v: f64) -> Result<ExtReal, E> {
                Ok(ExtReal(v))
            }
            fn visit_i64<E: de::Error>(self, v: i64) -> Result<ExtReal, E> {
                Ok(ExtReal(v as f64))
            }
            fn visit_u64<E: de::Error>(self, v: u64) -> Result<ExtReal, E> {
                Ok(ExtReal(v as f64))
            }
            fn visit_str<E: de::Error>(self, v: &str) -> Result<ExtReal, E> {
                match v {
                    "inf" | "+inf" => Ok(ExtReal(f64::INFINITY)),
                    "-inf" => Ok(ExtReal(f64::NEG_INFINITY)),
                    _ => Err(E::custom(format!("unexpected {v:?}"))),
                }
            }
        }
        de.deserialize_any(V)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SvcJson {
    pub base: [f64; 2],
    pub rho: RemovalSchedule,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UbiquitousJson {
    pub base: [f64; 2],
    pub budget: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PieceJson {
    Interval([ExtReal; 2]),
    Point(f64),
    Svc(SvcJson),
    Ubiquitous(UbiquitousJson),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SetOrPiece {
    Set(SetJson),
    Piece(PieceJson),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SetJson {
    pub kind: String,
    pub pieces: Vec<SetOrPiece>,
    #[serde(rename = "l_in_E", default, skip_serializing_if = "Option::is_none")]
    pub l_in_e: Option<bool>,
    #[serde(rename = "r_in_E", default, skip_serializing_if = "Option::is_none")]
    pub r_in_e: Option<bool>,
}

fn svc_from(j: &SvcJson) -> Result<SvcSet, Error> {
    SvcSet::new(j.base[0], j.base[1], j.rho)
}

fn svc_to(s: &SvcSet) -> PieceJson {
    let (a, b) = s.base();
    PieceJson::Svc(SvcJson {
        base: [a, b],
        rho: s.schedule(),
    })
}

fn ubiquitous_to(u: &UbiquitousSet) -> PieceJson {
    let (c, d) = u.base();
    PieceJson::Ubiquitous(UbiquitousJson {
        base: [c, d],
        budget: u.budget(),
    })
}

fn span_to(a: f64, b: f64) -> PieceJson {
    if a == b {
        PieceJson::Point(a)
    } else {
        PieceJson::Interval([ExtReal(a), ExtReal(b)])
    }
}

impl From<NearlyClosedSet> for SetJson {
    fn from(e: NearlyClosedSet) -> Self {
        let pieces = e
            .pieces()
            .iter()
            .map(|p| {
                SetOrPiece::Piece(match *p {
                    Piece::Interval(c, d) => PieceJson::Interval([ExtReal(c), ExtReal(d)]),
                    Piece::Point(c) => PieceJson::Point(c),
                    Piece::Svc(s) => svc_to(&s),
                })
            })
            .collect();
        SetJson {
            kind: "union".into(),
            pieces,
            l_in_e: Some(e.l_in_e()),
            r_in_e: Some(e.r_in_e()),
        }
    }
}

impl TryFrom<SetJson> for NearlyClosedSet {
    type Error = Error;

    fn try_from(j: SetJson) -> Result<Self, Error> {
        if j.kind != "union" {
            return Err(Error::InvalidSet(format!(
                "state space must be a union of pieces, got kind {:?}",
                j.kind
            )));
        }
        let mut pieces = Vec::with_capacity(j.pieces.len());
        for p in &j.pieces {
            pieces.push(match p {
                SetOrPiece::Piece(PieceJson::Interval([c, d])) => Piece::Interval(c.0, d.0),
                SetOrPiece::Piece(PieceJson::Point(c)) => Piece::Point(*c),
                SetOrPiece::Piece(PieceJson::Svc(s)) => Piece::Svc(svc_from(s)?),
                _ => {
                    return Err(Error::InvalidSet(
                        "state space pieces are intervals, points or svc".into(),
                    ))
                }
            });
        }
        NearlyClosedSet::new(pieces, j.l_in_e.unwrap_or(true), j.r_in_e.unwrap_or(true))
    }
}

fn piece_of(a: &MeasurableSubset) -> Vec<SetOrPiece> {
    match a {
        MeasurableSubset::Leaf(Leaf::Intervals(u)) => u
            .spans()
            .iter()
            .map(|&(x, y)| SetOrPiece::Piece(span_to(x, y)))
            .collect(),
        MeasurableSubset::Leaf(Leaf::Svc(s)) => vec![SetOrPiece::Piece(svc_to(s))],
        MeasurableSubset::Leaf(Leaf::Ubiquitous(u)) => vec![SetOrPiece::Piece(ubiquitous_to(u))],
        other => vec![SetOrPiece::Set(SetJson::from(other.clone()))],
    }
}

fn nested(a: &MeasurableSubset) -> SetOrPiece {
    match a {
        MeasurableSubset::Leaf(Leaf::Svc(_)) | MeasurableSubset::Leaf(Leaf::Ubiquitous(_)) => {
            piece_of(a).pop().unwrap()
        }
        other => SetOrPiece::Set(SetJson::from(other.clone())),
    }
}

impl From<MeasurableSubset> for SetJson {
    fn from(a: MeasurableSubset) -> Self {
        let (kind, pieces) = match &a {
            MeasurableSubset::Empty => ("union", Vec::new()),
            MeasurableSubset::Leaf(_) => ("union", piece_of(&a)),
            MeasurableSubset::Union(v) => ("union", v.iter().flat_map(piece_of).collect()),
            MeasurableSubset::Intersection(v) => ("intersection", v.iter().map(nested).collect()),
            MeasurableSubset::Difference(x, y) => ("difference", vec![nested(x), nested(y)]),
        };
        SetJson {
            kind: kind.into(),
            pieces,
            l_in_e: None,
            r_in_e: None,
        }
    }
}

impl TryFrom<SetJson> for MeasurableSubset {
    type Error = Error;

    fn try_from(j: SetJson) -> Result<Self, Error> {
        let mut spans = Vec::new();
        let mut parts = Vec::new();
        let union = j.kind == "union";
        for p in j.pieces {
            let part = match p {
                SetOrPiece::Set(s) => MeasurableSubset::try_from(s)?,
                SetOrPiece::Piece(PieceJson::Interval([c, d])) if union => {
                    spans.push((c.0, d.0));
                    continue;
                }
                SetOrPiece::Piece(PieceJson::Point(c)) if union => {
                    spans.push((c, c));
                    continue;
                }
                SetOrPiece::Piece(PieceJson::Interval([c, d])) => {
                    MeasurableSubset::interval(c.0, d.0)
                }
                SetOrPiece::Piece(PieceJson::Point(c)) => MeasurableSubset::interval(c, c),
                SetOrPiece::Piece(PieceJson::Svc(s)) => MeasurableSubset::svc(svc_from(&s)?),
                SetOrPiece::Piece(PieceJson::Ubiquitous(u)) => MeasurableSubset::ubiquitous(
                    UbiquitousSet::new(u.base[0], u.base[1], u.budget)?,
                ),
            };
            parts.push(part);
        }
        if !spans.is_empty() {
            parts.insert(
                0,
                MeasurableSubset::Leaf(Leaf::Intervals(IntervalUnion::from_spans(spans))),
            );
        }
        match j.kind.as_str() {
            "union" => Ok(match parts.len() {
                0 => MeasurableSubset::Empty,
                1 => parts.pop().unwrap(),
                _ => MeasurableSubset::Union(parts),
            }),
            "intersection" => {
                if parts.is_empty() {
                    return Err(Error::InvalidSet("empty intersection".into()));
                }
                Ok(if parts.len() == 1 {
                    parts.pop().unwrap()
                } else {
                    MeasurableSubset::Intersection(parts)
                })
            }
            "difference" => {
                if parts.len() != 2 {
                    return Err(Error::InvalidSet(
                        "difference needs exactly two pieces".into(),
                    ));
                }
                let b = parts.pop().unwrap();
                let a = parts.pop().unwrap();
                Ok(MeasurableSubset::difference(a, b))
            }
            other => Err(Error::InvalidSet(format!("unknown set kind {other:?}"))),
        }
    }
}

impl Serialize for MeasurableSubset {
    fn serialize<S: Serializer>(&self, ser: S) -> Result<S::Ok, S::Error> {
        SetJson::from(self.clone()).serialize(ser)
    }
}

impl<'de> Deserialize<'de> for MeasurableSubset {
    fn deserialize<D: Deserializer<'de>>(de: D) -> Result<Self, D::Error> {
        let j = SetJson::deserialize(de)?;
        MeasurableSubset::try_from(j).map_err(de::Error::custom)
    }
}
