//! Named example processes, each given by its speed function.

use serde::{Deserialize, Serialize};

use crate::bracket::Bracket;
use crate::error::{Error, Result};
use crate::forms::FormDescriptor;
use crate::measures::{IndicatorPiece, StateSpaceDerivation, StieltjesMeasure};
use crate::sets::{MeasurableSubset, NearlyClosedSet, SvcSet};

/// Stage of the grid approximating the Cantor-function measure.
pub const CANTOR_GRID_DEPTH: u32 = 6;
/// Periods kept of the integer-periodic union.
pub const PERIODS: i32 = 3;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CatalogEntry {
    pub name: String,
    pub description: String,
    pub literature: String,
    pub boundary: String,
    /// Set when the speed measure stands in for one with no exact
    /// representation.
    pub approximated_speed_measure: bool,
    pub state_space: NearlyClosedSet,
    pub speed: StieltjesMeasure,
}

/// Summary printed by the catalog listing.
#[derive(Clone, Debug, Serialize)]
pub struct CatalogRow {
    #[serde(flatten)]
    pub entry: CatalogEntry,
    pub l: f64,
    pub r: f64,
    pub lebesgue_measure: Bracket,
    pub nowhere_dense: bool,
    pub qk_satisfied: bool,
}

impl CatalogEntry {
    fn build(
        name: &str,
        description: &str,
        literature: &str,
        boundary: &str,
        approximated: bool,
        speed: StieltjesMeasure,
    ) -> Result<Self> {
        let d = speed.derive_state_space()?;
        if !d.qk_satisfied {
            return Err(Error::QkViolated);
        }
        Ok(CatalogEntry {
            name: name.into(),
            description: description.into(),
            literature: literature.into(),
            boundary: boundary.into(),
            approximated_speed_measure: approximated,
            state_space: d.e_m,
            speed,
        })
    }

    pub fn derivation(&self) -> Result<StateSpaceDerivation> {
        self.speed.derive_state_space()
    }

    /// The form of the entry's process on its natural scale.
    pub fn form(&self) -> Result<FormDescriptor> {
        FormDescriptor::from_speed(&self.speed)
    }

    pub fn row(&self) -> Result<CatalogRow> {
        let d = self.derivation()?;
        Ok(CatalogRow {
            entry: self.clone(),
            l: d.l.0,
            r: d.r.0,
            lebesgue_measure: self.state_space.lebesgue_measure()?,
            nowhere_dense: self.state_space.is_nowhere_dense(),
            qk_satisfied: d.qk_satisfied,
        })
    }
}

fn fat_speed(k: SvcSet) -> Result<StieltjesMeasure> {
    // μ = ½ m, so m = 2·1_K gives μ(dx) = 1_K(x) dx
    StieltjesMeasure::indicator(MeasurableSubset::svc(k), 2.0)
}

pub fn catalog() -> Result<Vec<CatalogEntry>> {
    let fat = SvcSet::middle_fourths(0.0, 1.0)?;
    let null = SvcSet::middle_thirds(0.0, 1.0)?;
    let periodic: Vec<IndicatorPiece> = (0..PERIODS)
        .map(|n| {
            SvcSet::middle_fourths(n as f64 + 0.25, n as f64 + 0.75).map(|k| IndicatorPiece {
                set: MeasurableSubset::svc(k),
                coef: 2.0,
            })
        })
        .collect::<Result<_>>()?;
    Ok(vec![
        CatalogEntry::build(
            "fat-cantor",
            "Smith-Volterra-Cantor set of measure 1/2 on [0, 1], mu = Lebesgue measure on K",
            "fat Cantor Brownian motion",
            "reflecting",
            false,
            fat_speed(fat)?,
        )?,
        CatalogEntry::build(
            "null-cantor",
            "middle-thirds Cantor set, Cantor-function measure replaced by equal atoms on the stage-6 interval endpoints",
            "Cantor-function speed measure",
            "reflecting",
            true,
            StieltjesMeasure::cantor_grid(&null, CANTOR_GRID_DEPTH, 2.0)?,
        )?,
        CatalogEntry::build(
            "periodic-cantor",
            "translates K + n, n = 0, 1, 2, of a fat Cantor set K on [1/4, 3/4], mu = Lebesgue measure on the union",
            "Brownian motion on a Cantor set",
            "reflecting",
            false,
            StieltjesMeasure::new(Vec::new(), Vec::new(), periodic)?,
        )?,
        CatalogEntry::build(
            "fat-cantor-killed-at-0",
            "fat-cantor with the point 0 removed",
            "censored fat Cantor Brownian motion",
            "Dirichlet at 0",
            false,
            fat_speed(fat)?.with_plateaus(0.0, f64::INFINITY)?,
        )?,
        CatalogEntry::build(
            "fat-cantor-killed-at-1",
            "fat-cantor with the point 1 removed",
            "censored fat Cantor Brownian motion",
            "Dirichlet at 1",
            false,
            fat_speed(fat)?.with_plateaus(f64::NEG_INFINITY, 1.0)?,
        )?,
        CatalogEntry::build(
            "five-atoms",
            "birth-death chain on 0, 0.2, 0.5, 0.7, 1 with speed masses 1, 2, 1, 3, 1",
            "skip-free random walk",
            "reflecting",
            false,
            StieltjesMeasure::atomic(&[(0.0, 1.0), (0.2, 2.0), (0.5, 1.0), (0.7, 3.0), (1.0, 1.0)])?,
        )?,
    ])
}

pub fn entry(name: &str) -> Result<CatalogEntry> {
    catalog()?
        .into_iter()
        .find(|e| e.name == name)
        .ok_or_else(|| Error::Unsupported(format!("no catalog entry named {name:?}")))
}
