//! Cells of the scenario x feature-set x model matrix and the `--cells`
//! selection syntax.

use std::fmt;
use std::str::FromStr;

use lvse_core::dataset::FeatureSetId;
use lvse_core::synth::ScenarioId;
use serde::{Deserialize, Serialize};

use crate::Error;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ModelKind {
    #[serde(rename = "BNN")]
    Bnn,
    #[serde(rename = "QR")]
    Qr,
}

impl ModelKind {
    pub const ALL: [ModelKind; 2] = [ModelKind::Bnn, ModelKind::Qr];

    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::Bnn => "BNN",
            ModelKind::Qr => "QR",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|m| m.as_str().eq_ignore_ascii_case(s))
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Cell {
    pub scenario: ScenarioId,
    pub feature_set: FeatureSetId,
    pub model: ModelKind,
}

impl Cell {
    /// Directory name, e.g. `S3_FS2_BNN`.
    pub fn id(&self) -> String {
        format!("{}_{}_{}", self.scenario, self.feature_set, self.model)
    }
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}", self.scenario, self.feature_set, self.model)
    }
}

/// Every combination in scenario, feature-set, model order.
pub fn all_cells(scenarios: &[ScenarioId], feature_sets: &[FeatureSetId], models: &[ModelKind]) -> Vec<Cell> {
    let mut cells = Vec::new();
    for &scenario in scenarios {
        for &feature_set in feature_sets {
            for &model in models {
                cells.push(Cell { scenario, feature_set, model });
            }
        }
    }
    cells
}

#[derive(Clone, Debug, PartialEq, Eq)]
struct Pattern {
    scenario: Option<ScenarioId>,
    feature_set: Option<FeatureSetId>,
    model: Option<ModelKind>,
}

/// Comma-separated `SCENARIO[:FS[:MODEL]]` patterns; `*` or a missing
/// part matches anything. `S3:*:BNN,S1:FS2` selects five cells.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct CellFilter {
    patterns: Vec<Pattern>,
}

impl CellFilter {
    pub fn all() -> Self {
        CellFilter::default()
    }

    pub fn matches(&self, cell: &Cell) -> bool {
        self.patterns.is_empty()
            || self.patterns.iter().any(|p| {
                p.scenario.is_none_or(|s| s == cell.scenario)
                    && p.feature_set.is_none_or(|f| f == cell.feature_set)
                    && p.model.is_none_or(|m| m == cell.model)
            })
    }
}

fn part<T>(s: Option<&str>, parse: impl Fn(&str) -> Option<T>, what: &str) -> Result<Option<T>, Error> {
    match s.map(str::trim) {
        None | Some("*") | Some("") => Ok(None),
        Some(v) => parse(v).map(Some).ok_or_else(|| Error::InvalidConfig(format!("unknown {what} `{v}` in --cells"))),
    }
}

impl FromStr for CellFilter {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        let mut patterns = Vec::new();
        for raw in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let mut it = raw.split(':');
            let pattern = Pattern {
                scenario: part(it.next(), ScenarioId::parse, "scenario")?,
                feature_set: part(it.next(), FeatureSetId::parse, "feature set")?,
                model: part(it.next(), ModelKind::parse, "model")?,
            };
            if it.next().is_some() {
                return Err(Error::InvalidConfig(format!("too many fields in cell pattern `{raw}`")));
            }
            patterns.push(pattern);
        }
        Ok(CellFilter { patterns })
    }
}
