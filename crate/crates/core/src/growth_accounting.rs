//! Forward growth accounting.
//!
//! Output growth is attributed to weighted input growth plus a TFP term:
//! `g_Y = g_TFP + sum(e_i * g_i)`. TFP growth is never measured directly; it
//! is the remainder (the Solow residual), so a decomposition always closes.

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::dataset::ObservationRow;
use crate::error::{BgaError, Result};
use crate::Elasticities;

/// Source id under which the TFP term appears in contribution maps.
pub const TFP_SOURCE: &str = "TFP";

/// Growth rates between two periods, as fractions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrowthRates {
    pub output_growth: f64,
    pub input_growth: IndexMap<String, f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tfp_growth: Option<f64>,
}

impl GrowthRates {
    pub fn zero<'a>(ids: impl IntoIterator<Item = &'a str>) -> Self {
        GrowthRates {
            output_growth: 0.0,
            input_growth: ids.into_iter().map(|id| (id.to_string(), 0.0)).collect(),
            tfp_growth: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RateMode {
    /// `(next - prev) / prev`
    #[default]
    Discrete,
    /// `ln(next / prev)`; makes the additive identity exact.
    Log,
}

impl RateMode {
    fn rate(self, prev: f64, next: f64) -> f64 {
        match self {
            RateMode::Discrete => (next - prev) / prev,
            RateMode::Log => (next / prev).ln(),
        }
    }
}

/// Attribution of output growth to its sources.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Decomposition {
    pub g_y: f64,
    /// `e_i * g_i` per input, followed by the TFP residual under [`TFP_SOURCE`].
    pub contributions: IndexMap<String, f64>,
    /// Contributions as fractions of `g_y`; absent when `g_y` is zero.
    pub shares: Option<IndexMap<String, f64>>,
    pub residual: f64,
}

impl Decomposition {
    /// Contributions in output units: each contribution times the base-period
    /// output.
    pub fn absolute_contributions(&self, base_output: f64) -> IndexMap<String, f64> {
        self.contributions
            .iter()
            .map(|(k, v)| (k.clone(), v * base_output))
            .collect()
    }
}

pub fn growth_between(prev: &ObservationRow, next: &ObservationRow) -> Result<GrowthRates> {
    growth_between_with(prev, next, RateMode::Discrete)
}

pub fn growth_between_with(
    prev: &ObservationRow,
    next: &ObservationRow,
    mode: RateMode,
) -> Result<GrowthRates> {
    prev.check_same_inputs(next)?;
    prev.check_positive()?;
    next.check_positive()?;
    let input_growth = prev
        .input_levels
        .iter()
        .map(|(id, &p)| (id.clone(), mode.rate(p, next.input_levels[id])))
        .collect();
    Ok(GrowthRates {
        output_growth: mode.rate(prev.output_level, next.output_level),
        input_growth,
        tfp_growth: None,
    })
}

fn weighted_input_terms(rates: &GrowthRates, elasticities: &Elasticities) -> Result<Vec<(String, f64)>> {
    elasticities
        .iter()
        .map(|(id, e)| {
            rates
                .input_growth
                .get(id)
                .map(|g| (id.clone(), e * g))
                .ok_or_else(|| BgaError::MissingInputRate(id.clone()))
        })
        .collect()
}

/// `g_Y - sum(e_i * g_i)`.
pub fn solow_residual(rates: &GrowthRates, elasticities: &Elasticities) -> Result<f64> {
    let terms = weighted_input_terms(rates, elasticities)?;
    Ok(rates.output_growth - terms.iter().map(|(_, c)| c).sum::<f64>())
}

pub fn decompose(rates: &GrowthRates, elasticities: &Elasticities) -> Result<Decomposition> {
    let terms = weighted_input_terms(rates, elasticities)?;
    let g_y = rates.output_growth;
    let residual = g_y - terms.iter().map(|(_, c)| c).sum::<f64>();
    let mut contributions: IndexMap<String, f64> = terms.into_iter().collect();
    contributions.insert(TFP_SOURCE.to_string(), residual);
    let shares = (g_y != 0.0).then(|| {
        contributions
            .iter()
            .map(|(k, c)| (k.clone(), c / g_y))
            .collect()
    });
    Ok(Decomposition {
        g_y,
        contributions,
        shares,
        residual,
    })
}

/// Exact output growth when TFP grows at `tfp_growth` and every input grows at
/// `common_input_growth`: `(1 + g_TFP) (1 + g)^sum(e) - 1`.
pub fn exact_compose(tfp_growth: f64, common_input_growth: f64, elasticity_sum: f64) -> f64 {
    (1.0 + tfp_growth) * (1.0 + common_input_growth).powf(elasticity_sum) - 1.0
}

/// Error of the additive identity under constant returns: the exact composite
/// rate minus `g_TFP + g`. Mathematically equal to `g_TFP * g`.
pub fn approximation_gap(tfp_growth: f64, common_input_growth: f64) -> f64 {
    exact_compose(tfp_growth, common_input_growth, 1.0) - (tfp_growth + common_input_growth)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(l: f64, k: f64, y: f64) -> ObservationRow {
        ObservationRow::new("t", [("L", l), ("K", k)], y)
    }

    fn weights() -> Elasticities {
        [("L".to_string(), 0.67), ("K".to_string(), 0.33)]
            .into_iter()
            .collect()
    }

    #[test]
    fn growth_between_simple_givens() {
        let g = growth_between(&row(100.0, 100.0, 100.0), &row(101.0, 106.0, 105.0)).unwrap();
        assert!((g.input_growth["L"] - 0.01).abs() < 1e-12);
        assert!((g.input_growth["K"] - 0.06).abs() < 1e-12);
        assert!((g.output_growth - 0.05).abs() < 1e-12);
        assert!(g.tfp_growth.is_none());
    }

    #[test]
    fn identical_rows_have_zero_growth() {
        let r = row(3.0, 4.0, 5.0);
        let g = growth_between(&r, &r).unwrap();
        assert_eq!(g.output_growth, 0.0);
        assert!(g.input_growth.values().all(|&v| v == 0.0));
    }

    #[test]
    fn mismatched_inputs_rejected() {
        let a = row(1.0, 1.0, 1.0);
        let b = ObservationRow::new("t", [("L", 1.0), ("H", 1.0)], 1.0);
        assert_eq!(growth_between(&a, &b).unwrap_err().code(), "MismatchedInputs");
    }

    #[test]
    fn solow_residual_worked_example() {
        let g = growth_between(&row(100.0, 100.0, 100.0), &row(101.0, 106.0, 105.0)).unwrap();
        let r = solow_residual(&g, &weights()).unwrap();
        assert!((r - 0.0235).abs() < 1e-12);
    }

    #[test]
    fn residual_free_growth() {
        let mut g = GrowthRates::zero(["L", "K"]);
        g.input_growth["L"] = 0.02;
        g.input_growth["K"] = 0.04;
        g.output_growth = 0.67 * 0.02 + 0.33 * 0.04;
        assert!(solow_residual(&g, &weights()).unwrap().abs() < 1e-15);
        assert_eq!(solow_residual(&GrowthRates::zero(["L", "K"]), &weights()).unwrap(), 0.0);
    }

    #[test]
    fn missing_rate_is_an_error() {
        let g = GrowthRates::zero(["L"]);
        assert_eq!(
            solow_residual(&g, &weights()).unwrap_err(),
            BgaError::MissingInputRate("K".into())
        );
    }

    #[test]
    fn zero_growth_has_no_shares() {
        let d = decompose(&GrowthRates::zero(["L", "K"]), &weights()).unwrap();
        assert!(d.contributions.values().all(|&c| c == 0.0));
        assert!(d.shares.is_none());
    }

    #[test]
    fn absolute_contributions_scale_by_base_output() {
        let g = growth_between(&row(100.0, 100.0, 100.0), &row(101.0, 106.0, 105.0)).unwrap();
        let d = decompose(&g, &weights()).unwrap();
        let abs = d.absolute_contributions(200.0);
        assert!((abs["K"] - 0.0198 * 200.0).abs() < 1e-10);
    }

    #[test]
    fn composition_examples() {
        assert!((exact_compose(0.05, 0.095238, 1.0) - 0.15).abs() < 1e-4);
        assert!((exact_compose(0.0, 0.07, 1.0) - 0.07).abs() < 1e-15);
        assert!((approximation_gap(0.05, 0.095238) - 0.05 * 0.095238).abs() < 1e-15);
        assert!(approximation_gap(0.0, 0.3).abs() < 1e-15);
        assert!((approximation_gap(0.01, 0.01) - 0.0001).abs() < 1e-16);
    }
}
