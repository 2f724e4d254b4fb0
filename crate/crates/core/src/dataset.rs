//! Observed input and output series.

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::error::{BgaError, Result};

/// Identifiers that cannot be used as input ids because they name other
/// columns in the CSV formats or the TFP contribution source.
pub const RESERVED_IDS: [&str; 3] = ["period", "output", "TFP"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputDefinition {
    pub id: String,
    pub name: String,
    pub unit: String,
    /// Counted in whole units (persons, trucks). Only affects display rounding.
    #[serde(default)]
    pub discrete: bool,
}

impl InputDefinition {
    pub fn new(id: impl Into<String>, unit: impl Into<String>) -> Self {
        let id = id.into();
        InputDefinition {
            name: id.clone(),
            id,
            unit: unit.into(),
            discrete: false,
        }
    }

    pub fn discrete(mut self, discrete: bool) -> Self {
        self.discrete = discrete;
        self
    }
}

/// One period of observed input levels and output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservationRow {
    pub period: String,
    pub input_levels: IndexMap<String, f64>,
    pub output_level: f64,
}

impl ObservationRow {
    pub fn new<I, K>(period: impl Into<String>, inputs: I, output_level: f64) -> Self
    where
        I: IntoIterator<Item = (K, f64)>,
        K: Into<String>,
    {
        ObservationRow {
            period: period.into(),
            input_levels: inputs.into_iter().map(|(k, v)| (k.into(), v)).collect(),
            output_level,
        }
    }

    /// Fails with `NonPositiveLevel` on the first level that is not a finite
    /// positive number.
    pub fn check_positive(&self) -> Result<()> {
        if !(self.output_level.is_finite() && self.output_level > 0.0) {
            return Err(BgaError::NonPositiveLevel {
                location: format!("period {}, output", self.period),
                value: self.output_level,
            });
        }
        for (id, &v) in &self.input_levels {
            if !(v.is_finite() && v > 0.0) {
                return Err(BgaError::NonPositiveLevel {
                    location: format!("period {}, input {}", self.period, id),
                    value: v,
                });
            }
        }
        Ok(())
    }

    /// Fails unless `other` carries exactly the same input ids.
    pub fn check_same_inputs(&self, other: &ObservationRow) -> Result<()> {
        let same = self.input_levels.len() == other.input_levels.len()
            && self
                .input_levels
                .keys()
                .all(|k| other.input_levels.contains_key(k));
        if same {
            Ok(())
        } else {
            Err(BgaError::MismatchedInputs(format!(
                "period {} has inputs [{}], period {} has [{}]",
                self.period,
                join_keys(self.input_levels.keys()),
                other.period,
                join_keys(other.input_levels.keys()),
            )))
        }
    }
}

pub(crate) fn join_keys<'a>(keys: impl Iterator<Item = &'a String>) -> String {
    keys.map(String::as_str).collect::<Vec<_>>().join(", ")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeSeriesDataset {
    pub inputs: Vec<InputDefinition>,
    pub observations: Vec<ObservationRow>,
    #[serde(default = "default_unit")]
    pub output_unit: String,
}

fn default_unit() -> String {
    "units".to_string()
}

impl TimeSeriesDataset {
    /// Builds a dataset and checks its invariants. Rows are reordered so that
    /// their input levels follow the order of `inputs`.
    pub fn new(
        inputs: Vec<InputDefinition>,
        observations: Vec<ObservationRow>,
        output_unit: impl Into<String>,
    ) -> Result<Self> {
        let mut ds = TimeSeriesDataset {
            inputs,
            observations,
            output_unit: output_unit.into(),
        };
        ds.normalize()?;
        Ok(ds)
    }

    fn normalize(&mut self) -> Result<()> {
        if self.inputs.is_empty() {
            return Err(BgaError::InvalidArgument("dataset has no inputs".into()));
        }
        let mut seen = std::collections::HashSet::new();
        for def in &self.inputs {
            if def.id.trim().is_empty() {
                return Err(BgaError::InvalidArgument("empty input id".into()));
            }
            if RESERVED_IDS.contains(&def.id.as_str()) {
                return Err(BgaError::InvalidArgument(format!(
                    "input id `{}` is reserved",
                    def.id
                )));
            }
            if def.unit.trim().is_empty() {
                return Err(BgaError::InvalidArgument(format!(
                    "input `{}` has an empty unit",
                    def.id
                )));
            }
            if !seen.insert(def.id.as_str()) {
                return Err(BgaError::InvalidArgument(format!(
                    "duplicate input id `{}`",
                    def.id
                )));
            }
        }
        if self.observations.is_empty() {
            return Err(BgaError::InsufficientObservations { needed: 1, got: 0 });
        }
        for row in &mut self.observations {
            if row.input_levels.len() != self.inputs.len()
                || !self
                    .inputs
                    .iter()
                    .all(|d| row.input_levels.contains_key(&d.id))
            {
                return Err(BgaError::MismatchedInputs(format!(
                    "period {} has inputs [{}], dataset declares [{}]",
                    row.period,
                    join_keys(row.input_levels.keys()),
                    self.inputs
                        .iter()
                        .map(|d| d.id.as_str())
                        .collect::<Vec<_>>()
                        .join(", "),
                )));
            }
            row.input_levels = self
                .inputs
                .iter()
                .map(|d| (d.id.clone(), row.input_levels[&d.id]))
                .collect();
            row.check_positive()?;
        }
        Ok(())
    }

    pub fn input_ids(&self) -> impl Iterator<Item = &str> {
        self.inputs.iter().map(|d| d.id.as_str())
    }

    pub fn discrete_ids(&self) -> Vec<String> {
        self.inputs
            .iter()
            .filter(|d| d.discrete)
            .map(|d| d.id.clone())
            .collect()
    }

    /// Marks the listed inputs as discrete; unknown ids are an error.
    pub fn set_discrete(&mut self, ids: &[String]) -> Result<()> {
        for id in ids {
            let def = self
                .inputs
                .iter_mut()
                .find(|d| &d.id == id)
                .ok_or_else(|| BgaError::InvalidArgument(format!("unknown input `{id}`")))?;
            def.discrete = true;
        }
        Ok(())
    }

    /// The most recent observation, used as the planning base.
    pub fn last(&self) -> &ObservationRow {
        self.observations
            .last()
            .expect("dataset invariant: at least one observation")
    }

    pub fn len(&self) -> usize {
        self.observations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.observations.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn defs() -> Vec<InputDefinition> {
        vec![
            InputDefinition::new("L", "persons"),
            InputDefinition::new("K", "units"),
        ]
    }

    #[test]
    fn rows_are_reordered_to_declared_inputs() {
        let row = ObservationRow::new("0", [("K", 2.0), ("L", 1.0)], 3.0);
        let ds = TimeSeriesDataset::new(defs(), vec![row], "units").unwrap();
        let keys: Vec<_> = ds.observations[0].input_levels.keys().cloned().collect();
        assert_eq!(keys, vec!["L", "K"]);
    }

    #[test]
    fn rejects_zero_output() {
        let row = ObservationRow::new("7", [("L", 1.0), ("K", 2.0)], 0.0);
        let err = TimeSeriesDataset::new(defs(), vec![row], "units").unwrap_err();
        assert_eq!(err.code(), "NonPositiveLevel");
    }

    #[test]
    fn rejects_duplicate_and_reserved_ids() {
        let dup = vec![
            InputDefinition::new("L", "persons"),
            InputDefinition::new("L", "persons"),
        ];
        let row = ObservationRow::new("0", [("L", 1.0)], 1.0);
        assert!(TimeSeriesDataset::new(dup, vec![row.clone()], "u").is_err());
        let reserved = vec![InputDefinition::new("TFP", "x")];
        let row = ObservationRow::new("0", [("TFP", 1.0)], 1.0);
        assert!(TimeSeriesDataset::new(reserved, vec![row], "u").is_err());
    }

    #[test]
    fn rejects_missing_input() {
        let row = ObservationRow::new("0", [("L", 1.0)], 1.0);
        let err = TimeSeriesDataset::new(defs(), vec![row], "units").unwrap_err();
        assert_eq!(err.code(), "MismatchedInputs");
    }
}
