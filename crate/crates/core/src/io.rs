//! Dataset, config and report formats.
//!
//! Dataset CSV: header `period,<input_id>...,output`, one row per period,
//! decimal point, no thousands separators. Numbers are written with at most
//! 15 significant digits; plan-table percentages with 2 decimals.

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::dataset::{InputDefinition, ObservationRow, TimeSeriesDataset};
use crate::error::{BgaError, Result};
use crate::estimation::{fit_cobb_douglas, ProductionModel};
use crate::growth_accounting::{Decomposition, TFP_SOURCE};
use crate::planner::{build_plan, decompose_plan, GrowthPlan, StrategyMix};
use crate::target_solver::GrowthTarget;

/// Unit recorded for inputs read from CSV, which carries no unit metadata.
pub const DEFAULT_UNIT: &str = "units";

/// Formats a number with at most 15 significant digits and no exponent.
pub fn fmt_num(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{}", if x == 0.0 { 0.0 } else { x });
    }
    let rounded: f64 = format!("{x:.14e}").parse().expect("valid float literal");
    format!("{rounded}")
}

pub fn fmt_pct(rate: f64) -> String {
    let s = format!("{:.2}", rate * 100.0);
    if s == "-0.00" {
        "0.00".to_string()
    } else {
        s
    }
}

pub fn read_dataset(csv_text: &str) -> Result<TimeSeriesDataset> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_reader(csv_text.as_bytes());
    let mut records = reader.records();

    let parse_err = |row: usize, column: usize, message: String| BgaError::Parse {
        row,
        column,
        message,
    };
    let header = match records.next() {
        Some(Ok(h)) => h,
        Some(Err(e)) => return Err(parse_err(1, 1, e.to_string())),
        None => return Err(parse_err(1, 1, "missing header row".into())),
    };
    let cols: Vec<&str> = header.iter().collect();
    if cols.len() < 3 || cols[0] != "period" || cols[cols.len() - 1] != "output" {
        return Err(parse_err(
            1,
            1,
            "header must be `period,<input_id>...,output`".into(),
        ));
    }
    let ids = &cols[1..cols.len() - 1];
    let inputs: Vec<InputDefinition> = ids
        .iter()
        .map(|id| InputDefinition::new(*id, DEFAULT_UNIT))
        .collect();

    let mut observations = Vec::new();
    for (i, rec) in records.enumerate() {
        let row_no = i + 2;
        let rec = rec.map_err(|e| parse_err(row_no, 1, e.to_string()))?;
        if rec.len() != cols.len() {
            return Err(parse_err(
                row_no,
                rec.len().min(cols.len()) + 1,
                format!("expected {} fields, found {}", cols.len(), rec.len()),
            ));
        }
        let mut levels = IndexMap::new();
        let mut values = Vec::with_capacity(cols.len() - 1);
        for c in 1..cols.len() {
            let raw = &rec[c];
            let v: f64 = raw
                .parse()
                .map_err(|_| parse_err(row_no, c + 1, format!("`{raw}` is not a number")))?;
            if !(v.is_finite() && v > 0.0) {
                return Err(BgaError::NonPositiveLevel {
                    location: format!("row {row_no}, column {} ({})", c + 1, cols[c]),
                    value: v,
                });
            }
            values.push(v);
        }
        for (id, v) in ids.iter().zip(&values) {
            levels.insert(id.to_string(), *v);
        }
        observations.push(ObservationRow {
            period: rec[0].to_string(),
            input_levels: levels,
            output_level: *values.last().expect("at least output"),
        });
    }
    if observations.is_empty() {
        return Err(parse_err(2, 1, "dataset has no rows".into()));
    }
    TimeSeriesDataset::new(inputs, observations, DEFAULT_UNIT).map_err(|e| match e {
        BgaError::InvalidArgument(msg) => parse_err(1, 1, msg),
        other => other,
    })
}

pub fn write_dataset(data: &TimeSeriesDataset) -> String {
    let mut out = String::from("period");
    for id in data.input_ids() {
        out.push(',');
        out.push_str(id);
    }
    out.push_str(",output\n");
    for row in &data.observations {
        out.push_str(&row.period);
        for id in data.input_ids() {
            out.push(',');
            out.push_str(&fmt_num(row.input_levels[id]));
        }
        out.push(',');
        out.push_str(&fmt_num(row.output_level));
        out.push('\n');
    }
    out
}

/// Decomposition report as JSON: `{g_y, contributions, shares, residual}`.
pub fn decomposition_json(d: &Decomposition) -> String {
    serde_json::to_string_pretty(d).expect("decomposition serializes")
}

/// One row per source with contribution in percentage points and share of
/// total growth in percent, closed by a `total` row.
pub fn decomposition_csv(d: &Decomposition) -> String {
    let mut out = String::from("source,contribution_pp,share_pct\n");
    for (source, c) in &d.contributions {
        let share = d
            .shares
            .as_ref()
            .map(|s| fmt_num(s[source] * 100.0))
            .unwrap_or_default();
        out.push_str(&format!("{source},{},{share}\n", fmt_num(c * 100.0)));
    }
    let total_share = if d.shares.is_some() { "100" } else { "" };
    out.push_str(&format!("total,{},{total_share}\n", fmt_num(d.g_y * 100.0)));
    out
}

/// A labelled `(year, value)` series for charting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChartSeries {
    pub label: String,
    pub points: Vec<(u32, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlanReports {
    pub csv: String,
    pub json: String,
    pub charts: Vec<ChartSeries>,
}

/// Plan table: `year,Y,gY%,TFP,gTFP%,<input>,g<input>%...`. Discrete inputs
/// show their rounded display level.
pub fn plan_csv(plan: &GrowthPlan) -> String {
    let ids: Vec<&str> = plan.input_ids().collect();
    let mut out = String::from("year,Y,gY%,TFP,gTFP%");
    for id in &ids {
        out.push_str(&format!(",{id},g{id}%"));
    }
    out.push('\n');
    for row in &plan.rows {
        let g = row.growth_applied.as_ref();
        let pct = |v: Option<f64>| v.map(fmt_pct).unwrap_or_default();
        out.push_str(&format!(
            "{},{},{},{},{}",
            row.year,
            fmt_num(row.output),
            pct(g.map(|g| g.output_growth)),
            fmt_num(row.tfp),
            pct(g.and_then(|g| g.tfp_growth)),
        ));
        for id in &ids {
            out.push_str(&format!(
                ",{},{}",
                fmt_num(row.input_levels_display[*id]),
                pct(g.map(|g| g.input_growth[*id])),
            ));
        }
        out.push('\n');
    }
    out
}

pub fn plan_json(plan: &GrowthPlan) -> String {
    serde_json::to_string_pretty(plan).expect("plan serializes")
}

pub fn read_plan_json(text: &str) -> Result<GrowthPlan> {
    let mut plan: GrowthPlan = serde_json::from_str(text)?;
    plan.model.validate()?;
    if plan.rows.is_empty() {
        return Err(BgaError::InvalidArgument("plan has no rows".into()));
    }
    Ok(plan)
}

/// Output path, TFP path, one level path per input and one contribution
/// series per growth source.
pub fn plan_charts(plan: &GrowthPlan) -> Vec<ChartSeries> {
    let series = |label: String, f: &dyn Fn(&crate::planner::PlanRow) -> f64| ChartSeries {
        label,
        points: plan.rows.iter().map(|r| (r.year, f(r))).collect(),
    };
    let mut charts = vec![
        series("output".into(), &|r| r.output),
        series(TFP_SOURCE.into(), &|r| r.tfp),
    ];
    for id in plan.input_ids() {
        charts.push(series(format!("input:{id}"), &|r| r.input_levels[id]));
    }
    let decomposition = decompose_plan(plan);
    for (source, c) in &decomposition.contributions {
        charts.push(ChartSeries {
            label: format!("contribution:{source}"),
            points: plan.rows.iter().skip(1).map(|r| (r.year, *c)).collect(),
        });
    }
    charts
}

pub fn charts_json(charts: &[ChartSeries]) -> String {
    serde_json::to_string_pretty(charts).expect("charts serialize")
}

pub fn write_plan_reports(plan: &GrowthPlan) -> PlanReports {
    PlanReports {
        csv: plan_csv(plan),
        json: plan_json(plan),
        charts: plan_charts(plan),
    }
}

/// Where a plan's production model comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ModelSource {
    Estimate { estimate: EstimateDirective },
    Inline(ProductionModel),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimateDirective {
    #[serde(default)]
    pub crts: bool,
}

/// A planning run: dataset, model, objective, strategy and horizon.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlanConfig {
    pub dataset_path: String,
    pub model: ModelSource,
    pub target: GrowthTarget,
    pub strategy: StrategyMix,
    pub horizon_years: u32,
    #[serde(default)]
    pub discrete_inputs: Vec<String>,
}

impl PlanConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let config: PlanConfig = serde_json::from_str(text)?;
        if config.horizon_years < 1 {
            return Err(BgaError::NonPositiveHorizon(0.0));
        }
        config.target.validate()?;
        Ok(config)
    }

    pub fn resolve_model(&self, data: &TimeSeriesDataset) -> Result<ProductionModel> {
        match &self.model {
            ModelSource::Estimate { estimate } => fit_cobb_douglas(data, estimate.crts),
            ModelSource::Inline(model) => {
                let mut model = model.clone();
                model.validate()?;
                Ok(model)
            }
        }
    }

    /// Runs the config against its dataset, planning from the last
    /// observation.
    pub fn plan(&self, data: &TimeSeriesDataset) -> Result<GrowthPlan> {
        let model = self.resolve_model(data)?;
        build_plan(
            &model,
            data.last(),
            &self.target,
            &self.strategy,
            self.horizon_years,
            &self.discrete_inputs,
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const A2_ROW0: &str = "period,PI,EM,PT,BD,output\n0,695262700,4000,2400,1200000,632057000\n";

    #[test]
    fn reads_propane_base_row() {
        let ds = read_dataset(A2_ROW0).unwrap();
        assert_eq!(ds.inputs.len(), 4);
        assert_eq!(ds.len(), 1);
        assert_eq!(ds.observations[0].input_levels["EM"], 4000.0);
        assert_eq!(ds.observations[0].output_level, 632_057_000.0);
        assert_eq!(write_dataset(&ds), A2_ROW0);
    }

    #[test]
    fn zero_output_reports_row() {
        let text = "period,L,K,output\n1,1,2,3\n2,1,2,0\n";
        match read_dataset(text).unwrap_err() {
            BgaError::NonPositiveLevel { location, value } => {
                assert!(location.starts_with("row 3"), "{location}");
                assert_eq!(value, 0.0);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn parse_errors_carry_location() {
        let err = read_dataset("period,L,output\n1,abc,2\n").unwrap_err();
        assert_eq!(
            err,
            BgaError::Parse {
                row: 2,
                column: 2,
                message: "`abc` is not a number".into()
            }
        );
        assert_eq!(read_dataset("").unwrap_err().code(), "ParseError");
        assert_eq!(read_dataset("year,L,output\n1,1,1\n").unwrap_err().code(), "ParseError");
        assert_eq!(read_dataset("period,L,output\n1,1\n").unwrap_err().code(), "ParseError");
        assert_eq!(read_dataset("period,L,L,output\n1,1,1,1\n").unwrap_err().code(), "ParseError");
    }

    #[test]
    fn thousands_separators_rejected() {
        assert!(read_dataset("period,L,output\n1,\"1,000\",2\n").is_err());
    }

    #[test]
    fn number_formatting() {
        assert_eq!(fmt_num(632057000.0), "632057000");
        assert_eq!(fmt_num(0.1 + 0.2), "0.3");
        assert_eq!(fmt_num(6083.5), "6083.5");
        assert_eq!(fmt_num(-0.0), "0");
        assert_eq!(fmt_pct(0.15), "15.00");
        assert_eq!(fmt_pct(-0.0), "0.00");
    }

    #[test]
    fn config_model_sources() {
        let estimate = r#"{"dataset_path":"d.csv","model":{"estimate":{"crts":true}},
            "target":{"kind":"ExplicitRate","rate":0.15},
            "strategy":{"mode":"InputsOnly"},"horizon_years":5}"#;
        let c = PlanConfig::from_json(estimate).unwrap();
        assert_eq!(c.model, ModelSource::Estimate { estimate: EstimateDirective { crts: true } });
        let inline = r#"{"dataset_path":"d.csv","model":{"tfp":9811,"elasticities":{"PI":0.2,"EM":0.3,"PT":0.4,"BD":0.1}},
            "target":{"kind":"ExplicitRate","rate":0.15},
            "strategy":{"mode":"Mixed","tfp_growth":0.05},"horizon_years":5,"discrete_inputs":["EM"]}"#;
        let c = PlanConfig::from_json(inline).unwrap();
        assert!(matches!(c.model, ModelSource::Inline(_)));
        let zero = inline.replace("\"horizon_years\":5", "\"horizon_years\":0");
        assert!(PlanConfig::from_json(&zero).is_err());
        let extra = inline.replace("\"horizon_years\":5", "\"horizon_years\":5,\"bogus\":1");
        assert!(PlanConfig::from_json(&extra).is_err());
    }
}
