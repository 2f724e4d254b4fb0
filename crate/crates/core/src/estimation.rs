//! Cobb-Douglas specification, estimation and returns-to-scale classification.
//!
//! The model is `Y = TFP * prod(X_i ^ e_i)`. Taking logs gives a linear
//! regression of `ln Y` on `ln X_i` with intercept `ln TFP`, which is fitted by
//! ordinary least squares. Constant returns to scale are imposed by
//! substituting `e_last = 1 - sum(others)` and regressing `ln(Y / X_last)` on
//! `ln(X_i / X_last)`.

use std::fmt;

use indexmap::IndexMap;
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::dataset::{ObservationRow, TimeSeriesDataset};
use crate::error::{BgaError, Result};
use crate::Elasticities;

/// Tolerance on the elasticity sum when classifying returns to scale.
pub const RTS_TOLERANCE: f64 = 1e-6;

/// Tolerance on the elasticity sum of a model flagged `crts_imposed`.
pub const CRTS_SUM_TOLERANCE: f64 = 1e-9;

/// Ratio of smallest to largest singular value below which the log design
/// is treated as rank deficient.
const SINGULAR_RATIO: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelWarning {
    /// Fitted elasticity outside (0, 1): production is not in its second stage.
    ElasticityOutOfRange { input: String, value: f64 },
}

impl fmt::Display for ModelWarning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModelWarning::ElasticityOutOfRange { input, value } => {
                write!(f, "elasticity of `{input}` is {value}, outside (0, 1)")
            }
        }
    }
}

/// A fitted (or supplied) Cobb-Douglas production function.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProductionModel {
    pub tfp: f64,
    pub elasticities: Elasticities,
    #[serde(default)]
    pub crts_imposed: bool,
    #[serde(default)]
    pub residual_variance: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<ModelWarning>,
}

impl ProductionModel {
    /// A model with given parameters, as when they come from an outside
    /// estimate rather than a fit.
    pub fn new<I, K>(tfp: f64, elasticities: I) -> Result<Self>
    where
        I: IntoIterator<Item = (K, f64)>,
        K: Into<String>,
    {
        let mut model = ProductionModel {
            tfp,
            elasticities: elasticities.into_iter().map(|(k, v)| (k.into(), v)).collect(),
            crts_imposed: false,
            residual_variance: 0.0,
            warnings: Vec::new(),
        };
        model.validate()?;
        Ok(model)
    }

    /// Checks the parameter invariants and refreshes `warnings`.
    pub fn validate(&mut self) -> Result<()> {
        if !(self.tfp.is_finite() && self.tfp > 0.0) {
            return Err(BgaError::InvalidArgument(format!(
                "TFP level must be positive, got {}",
                self.tfp
            )));
        }
        if self.elasticities.is_empty() {
            return Err(BgaError::InvalidArgument("model has no elasticities".into()));
        }
        if let Some((id, v)) = self.elasticities.iter().find(|(_, v)| !v.is_finite()) {
            return Err(BgaError::InvalidArgument(format!(
                "elasticity of `{id}` is not finite: {v}"
            )));
        }
        if self.elasticity_sum() <= 0.0 {
            return Err(BgaError::InvalidArgument(
                "elasticities must have a positive sum".into(),
            ));
        }
        if !(self.residual_variance.is_finite() && self.residual_variance >= 0.0) {
            return Err(BgaError::InvalidArgument(
                "residual variance must be nonnegative".into(),
            ));
        }
        if self.crts_imposed && (self.elasticity_sum() - 1.0).abs() > CRTS_SUM_TOLERANCE {
            return Err(BgaError::InvalidArgument(format!(
                "crts_imposed but elasticities sum to {}",
                self.elasticity_sum()
            )));
        }
        self.warnings = self
            .elasticities
            .iter()
            .filter(|(_, &v)| !(v > 0.0 && v < 1.0))
            .map(|(id, &value)| ModelWarning::ElasticityOutOfRange {
                input: id.clone(),
                value,
            })
            .collect();
        Ok(())
    }

    pub fn elasticity_sum(&self) -> f64 {
        self.elasticities.values().sum()
    }

    pub fn input_ids(&self) -> impl Iterator<Item = &str> {
        self.elasticities.keys().map(String::as_str)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RtsLabel {
    #[serde(rename = "CRTS")]
    Constant,
    #[serde(rename = "DRTS")]
    Decreasing,
    #[serde(rename = "IRTS")]
    Increasing,
}

impl fmt::Display for RtsLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RtsLabel::Constant => "CRTS",
            RtsLabel::Decreasing => "DRTS",
            RtsLabel::Increasing => "IRTS",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RtsClass {
    pub label: RtsLabel,
    pub elasticity_sum: f64,
}

pub fn classify_rts(model: &ProductionModel) -> RtsClass {
    let sum = model.elasticity_sum();
    let label = if sum < 1.0 - RTS_TOLERANCE {
        RtsLabel::Decreasing
    } else if (sum - 1.0).abs() <= RTS_TOLERANCE {
        RtsLabel::Constant
    } else {
        RtsLabel::Increasing
    };
    RtsClass {
        label,
        elasticity_sum: sum,
    }
}

/// Fits `ln Y = ln TFP + sum(e_i ln X_i)` by least squares.
///
/// With `impose_crts` the last input's elasticity is pinned to
/// `1 - sum(others)`, which needs one fewer observation.
pub fn fit_cobb_douglas(data: &TimeSeriesDataset, impose_crts: bool) -> Result<ProductionModel> {
    let ids: Vec<&str> = data.input_ids().collect();
    let k = ids.len();
    let n = data.observations.len();
    let needed = if impose_crts { k + 1 } else { k + 2 };
    if n < needed {
        return Err(BgaError::InsufficientObservations { needed, got: n });
    }
    for row in &data.observations {
        row.check_positive()?;
    }

    let log_level = |row: &ObservationRow, id: &str| row.input_levels[id].ln();
    // Free regressors: all inputs, or all but the last under CRTS.
    let free = if impose_crts { k - 1 } else { k };
    let cols = free + 1;
    let mut design = DMatrix::<f64>::zeros(n, cols);
    let mut target = DVector::<f64>::zeros(n);
    for (r, row) in data.observations.iter().enumerate() {
        let base = if impose_crts {
            log_level(row, ids[k - 1])
        } else {
            0.0
        };
        design[(r, 0)] = 1.0;
        for (c, id) in ids.iter().take(free).enumerate() {
            design[(r, c + 1)] = log_level(row, id) - base;
        }
        target[r] = row.output_level.ln() - base;
    }

    let coef = solve_least_squares(&design, &target)?;
    let fitted = &design * &coef;
    let ssr: f64 = (&target - fitted).iter().map(|e| e * e).sum();
    let dof = n - cols;
    let residual_variance = if dof > 0 { ssr / dof as f64 } else { 0.0 };

    let mut elasticities: Elasticities = ids
        .iter()
        .take(free)
        .enumerate()
        .map(|(i, id)| (id.to_string(), coef[i + 1]))
        .collect();
    if impose_crts {
        let rest: f64 = elasticities.values().sum();
        elasticities.insert(ids[k - 1].to_string(), 1.0 - rest);
    }

    let mut model = ProductionModel {
        tfp: coef[0].exp(),
        elasticities,
        crts_imposed: impose_crts,
        residual_variance,
        warnings: Vec::new(),
    };
    model.validate()?;
    Ok(model)
}

fn solve_least_squares(design: &DMatrix<f64>, target: &DVector<f64>) -> Result<DVector<f64>> {
    let svd = design.clone().svd(true, true);
    let max = svd.singular_values.max();
    let min = svd.singular_values.min();
    if !(max > 0.0) || min / max < SINGULAR_RATIO {
        return Err(BgaError::SingularDesign);
    }
    svd.solve(target, 0.0)
        .map_err(|_| BgaError::SingularDesign)
}

/// `TFP * prod(X_i ^ e_i)` for the given input levels.
pub fn predict(model: &ProductionModel, input_levels: &IndexMap<String, f64>) -> Result<f64> {
    let mut log_out = model.tfp.ln();
    for (id, e) in &model.elasticities {
        let x = *input_levels
            .get(id)
            .ok_or_else(|| BgaError::MismatchedInputs(format!("no level for input `{id}`")))?;
        if !(x > 0.0) {
            return Err(BgaError::NonPositiveLevel {
                location: format!("input {id}"),
                value: x,
            });
        }
        log_out += e * x.ln();
    }
    Ok(log_out.exp())
}

/// The TFP level implied by one observation: `Y / prod(X_i ^ e_i)`.
pub fn back_out_tfp(levels: &ObservationRow, elasticities: &Elasticities) -> Result<f64> {
    levels.check_positive()?;
    let mut log_tfp = levels.output_level.ln();
    for (id, e) in elasticities {
        let x = levels.input_levels.get(id).ok_or_else(|| {
            BgaError::MismatchedInputs(format!(
                "period {} has no level for input `{id}`",
                levels.period
            ))
        })?;
        log_tfp -= e * x.ln();
    }
    Ok(log_tfp.exp())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::InputDefinition;

    fn two_input_dataset(rows: &[(f64, f64, f64)]) -> TimeSeriesDataset {
        let obs = rows
            .iter()
            .enumerate()
            .map(|(i, &(l, k, y))| ObservationRow::new(i.to_string(), [("L", l), ("K", k)], y))
            .collect();
        TimeSeriesDataset::new(
            vec![InputDefinition::new("L", "persons"), InputDefinition::new("K", "units")],
            obs,
            "units",
        )
        .unwrap()
    }

    fn generated(tfp: f64, a: f64, b: f64, inputs: &[(f64, f64)]) -> TimeSeriesDataset {
        let rows: Vec<_> = inputs
            .iter()
            .map(|&(l, k)| (l, k, tfp * l.powf(a) * k.powf(b)))
            .collect();
        two_input_dataset(&rows)
    }

    const GRID: [(f64, f64); 8] = [
        (1.0, 2.0),
        (3.0, 1.5),
        (2.0, 7.0),
        (5.0, 4.0),
        (8.0, 3.0),
        (4.5, 9.0),
        (6.0, 6.5),
        (10.0, 1.2),
    ];

    #[test]
    fn recovers_noiseless_generator() {
        let ds = generated(2.0, 0.5, 0.5, &GRID);
        let m = fit_cobb_douglas(&ds, false).unwrap();
        assert!((m.tfp / 2.0 - 1.0).abs() < 1e-8);
        assert!((m.elasticities["L"] - 0.5).abs() < 1e-8);
        assert!((m.elasticities["K"] - 0.5).abs() < 1e-8);
        assert!(m.residual_variance < 1e-20);
        assert!(!m.crts_imposed);
    }

    #[test]
    fn crts_restriction_inactive_when_true() {
        let ds = generated(1.7, 0.3, 0.7, &GRID);
        let free = fit_cobb_douglas(&ds, false).unwrap();
        let crts = fit_cobb_douglas(&ds, true).unwrap();
        assert!(crts.crts_imposed);
        assert!((crts.elasticity_sum() - 1.0).abs() < 1e-12);
        for id in ["L", "K"] {
            assert!((free.elasticities[id] - crts.elasticities[id]).abs() < 1e-9);
        }
        assert!((free.tfp - crts.tfp).abs() < 1e-9);
    }

    #[test]
    fn insufficient_observations() {
        let ds = generated(2.0, 0.5, 0.5, &GRID[..3]);
        assert_eq!(
            fit_cobb_douglas(&ds, false).unwrap_err(),
            BgaError::InsufficientObservations { needed: 4, got: 3 }
        );
        // CRTS needs one fewer.
        assert!(fit_cobb_douglas(&ds, true).is_ok());
    }

    #[test]
    fn collinear_inputs_are_singular() {
        // K = 3 L on every row.
        let inputs: Vec<_> = (1..=6).map(|i| (i as f64, 3.0 * i as f64)).collect();
        let ds = generated(1.0, 0.4, 0.4, &inputs);
        assert_eq!(fit_cobb_douglas(&ds, false).unwrap_err(), BgaError::SingularDesign);
    }

    #[test]
    fn out_of_range_elasticity_is_a_warning() {
        let ds = generated(1.0, 1.2, 0.3, &GRID);
        let m = fit_cobb_douglas(&ds, false).unwrap();
        assert_eq!(m.warnings.len(), 1);
        assert!(matches!(
            &m.warnings[0],
            ModelWarning::ElasticityOutOfRange { input, .. } if input == "L"
        ));
    }

    #[test]
    fn classify_examples() {
        let m = ProductionModel::new(9811.0, [("PI", 0.2), ("EM", 0.3), ("PT", 0.4), ("BD", 0.1)])
            .unwrap();
        assert_eq!(classify_rts(&m).label, RtsLabel::Constant);
        let m = ProductionModel::new(1.0, [("K", 1.0 / 3.0), ("L", 2.0 / 3.0)]).unwrap();
        assert_eq!(classify_rts(&m).label, RtsLabel::Constant);
        let m = ProductionModel::new(1.0, [("K", 0.3), ("L", 0.3)]).unwrap();
        let c = classify_rts(&m);
        assert_eq!(c.label, RtsLabel::Decreasing);
        assert!((c.elasticity_sum - 0.6).abs() < 1e-15);
        let m = ProductionModel::new(1.0, [("K", 0.6), ("L", 0.6)]).unwrap();
        assert_eq!(classify_rts(&m).label, RtsLabel::Increasing);
    }

    #[test]
    fn back_out_identity_on_unit_levels() {
        let row = ObservationRow::new("0", [("L", 1.0), ("K", 1.0)], 42.0);
        let e: Elasticities = [("L".to_string(), 0.37), ("K".to_string(), 0.81)].into_iter().collect();
        assert!((back_out_tfp(&row, &e).unwrap() - 42.0).abs() < 1e-12);
    }

    #[test]
    fn back_out_rejects_non_positive() {
        let row = ObservationRow::new("3", [("L", 0.0), ("K", 1.0)], 42.0);
        let e: Elasticities = [("L".to_string(), 0.5), ("K".to_string(), 0.5)].into_iter().collect();
        assert_eq!(back_out_tfp(&row, &e).unwrap_err().code(), "NonPositiveLevel");
    }

    #[test]
    fn crts_flag_requires_unit_sum() {
        let mut m = ProductionModel::new(1.0, [("K", 0.3), ("L", 0.3)]).unwrap();
        m.crts_imposed = true;
        assert!(m.validate().is_err());
    }

    #[test]
    fn model_json_shape() {
        let m = ProductionModel::new(2.0, [("L", 0.5), ("K", 0.5)]).unwrap();
        let v: serde_json::Value = serde_json::to_value(&m).unwrap();
        assert_eq!(v["tfp"], 2.0);
        assert_eq!(v["elasticities"]["L"], 0.5);
        assert_eq!(v["crts_imposed"], false);
        assert_eq!(v["residual_variance"], 0.0);
        assert!(v.get("warnings").is_none());
    }
}
