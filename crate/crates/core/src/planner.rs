//! Backward planning: from a target output growth rate to year-by-year input
//! and TFP schedules, plus evaluation of realized results and re-planning.
//!
//! The split between TFP growth and input accumulation always uses the exact
//! multiplicative identity `(1 + g_Y) = (1 + g_TFP) * prod((1 + g_i)^e_i)`.
//! Levels compound in closed form from the base row, so year `N` never drifts
//! from `base * (1 + g)^N`.

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::dataset::{join_keys, ObservationRow, TimeSeriesDataset};
use crate::error::{BgaError, Result};
use crate::estimation::{back_out_tfp, ProductionModel};
use crate::growth_accounting::{GrowthRates, TFP_SOURCE};
use crate::target_solver::{solve_rate_numeric, GrowthTarget};

/// Relative tolerance for constant input ratios along the expansion path.
pub const EXPANSION_PATH_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StrategyMode {
    /// All growth from input accumulation; TFP flat.
    InputsOnly,
    /// All growth from TFP; inputs flat.
    TfpOnly,
    /// A fixed annual TFP growth, remainder from inputs.
    Mixed,
}

/// How target output growth is split between TFP and inputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrategyMix {
    pub mode: StrategyMode,
    /// Annual TFP growth. Ignored for `TfpOnly`, where it is set to the
    /// target rate when a plan is generated.
    #[serde(default)]
    pub tfp_growth: f64,
    /// Permit negative input growth (downsizing). Off by default.
    #[serde(default)]
    pub allow_negative_inputs: bool,
    /// Fixed growth rates for a subset of inputs; the remaining inputs share a
    /// common rate solved to hit the target.
    #[serde(default, skip_serializing_if = "IndexMap::is_empty")]
    pub input_overrides: IndexMap<String, f64>,
}

impl StrategyMix {
    pub fn inputs_only() -> Self {
        StrategyMix {
            mode: StrategyMode::InputsOnly,
            tfp_growth: 0.0,
            allow_negative_inputs: false,
            input_overrides: IndexMap::new(),
        }
    }

    pub fn tfp_only() -> Self {
        StrategyMix {
            mode: StrategyMode::TfpOnly,
            ..StrategyMix::inputs_only()
        }
    }

    pub fn mixed(tfp_growth: f64) -> Self {
        StrategyMix {
            mode: StrategyMode::Mixed,
            tfp_growth,
            ..StrategyMix::inputs_only()
        }
    }

    /// The TFP growth this strategy implies for a given target rate.
    pub fn effective_tfp_growth(&self, target_gy: f64) -> Result<f64> {
        match self.mode {
            StrategyMode::InputsOnly => {
                if self.tfp_growth != 0.0 {
                    return Err(BgaError::InvalidArgument(format!(
                        "InputsOnly strategy with nonzero tfp_growth {}",
                        self.tfp_growth
                    )));
                }
                Ok(0.0)
            }
            StrategyMode::TfpOnly => {
                if !self.input_overrides.is_empty() {
                    return Err(BgaError::InvalidArgument(
                        "TfpOnly strategy cannot override input growth".into(),
                    ));
                }
                Ok(target_gy)
            }
            StrategyMode::Mixed => {
                if !(self.tfp_growth.is_finite() && self.tfp_growth >= 0.0) {
                    return Err(BgaError::InvalidArgument(format!(
                        "tfp_growth must be a nonnegative fraction, got {}",
                        self.tfp_growth
                    )));
                }
                Ok(self.tfp_growth)
            }
        }
    }
}

/// The common annual input growth `g` solving
/// `(1 + g_TFP)(1 + g)^sum(e) = 1 + target_gy`.
pub fn split_growth(target_gy: f64, strategy: &StrategyMix, elasticity_sum: f64) -> Result<f64> {
    if !(target_gy.is_finite() && target_gy > -1.0) {
        return Err(BgaError::InvalidArgument(format!(
            "target growth must exceed -1, got {target_gy}"
        )));
    }
    if !(elasticity_sum.is_finite() && elasticity_sum > 0.0) {
        return Err(BgaError::InvalidArgument(format!(
            "elasticity sum must be positive, got {elasticity_sum}"
        )));
    }
    let tfp = strategy.effective_tfp_growth(target_gy)?;
    if strategy.mode == StrategyMode::TfpOnly {
        return Ok(0.0);
    }
    let ratio = (1.0 + target_gy) / (1.0 + tfp);
    if ratio < 1.0 && !strategy.allow_negative_inputs {
        return Err(BgaError::InfeasibleMix(format!(
            "TFP growth {tfp} alone exceeds target {target_gy}; inputs would have to shrink"
        )));
    }
    Ok(ratio.powf(1.0 / elasticity_sum) - 1.0)
}

/// Per-input growth rates for a target, honoring overrides. Returns the
/// common rate shared by the non-overridden inputs and the full per-input map.
fn input_growth_rates(
    target_gy: f64,
    strategy: &StrategyMix,
    model: &ProductionModel,
) -> Result<(f64, IndexMap<String, f64>)> {
    let elasticities = &model.elasticities;
    if strategy.input_overrides.is_empty() {
        let common = split_growth(target_gy, strategy, model.elasticity_sum())?;
        let rates = elasticities.keys().map(|k| (k.clone(), common)).collect();
        return Ok((common, rates));
    }

    if !(target_gy.is_finite() && target_gy > -1.0) {
        return Err(BgaError::InvalidArgument(format!(
            "target growth must exceed -1, got {target_gy}"
        )));
    }
    let tfp = strategy.effective_tfp_growth(target_gy)?;

    let mut fixed_log = 0.0;
    let mut free_sum = 0.0;
    for (id, &g) in &strategy.input_overrides {
        let e = elasticities
            .get(id)
            .ok_or_else(|| BgaError::InvalidArgument(format!("override for unknown input `{id}`")))?;
        if !(g.is_finite() && g > -1.0) {
            return Err(BgaError::InvalidArgument(format!(
                "override for `{id}` must exceed -1, got {g}"
            )));
        }
        if g < 0.0 && !strategy.allow_negative_inputs {
            return Err(BgaError::InfeasibleMix(format!(
                "override shrinks `{id}` but negative input growth is disallowed"
            )));
        }
        fixed_log += e * g.ln_1p();
    }
    for (id, e) in elasticities {
        if !strategy.input_overrides.contains_key(id) {
            free_sum += e;
        }
    }

    // Log of the output multiple still owed to the free inputs.
    let owed = target_gy.ln_1p() - tfp.ln_1p() - fixed_log;
    let common = if free_sum == 0.0 {
        if owed.abs() > 1e-12 {
            return Err(BgaError::InfeasibleMix(
                "every input is fixed and the fixed rates miss the target".into(),
            ));
        }
        0.0
    } else {
        let f = |c: f64| free_sum * c.ln_1p() - owed;
        let lo = if strategy.allow_negative_inputs {
            -1.0 + 1e-12
        } else {
            0.0
        };
        if f(lo) > 0.0 {
            return Err(BgaError::InfeasibleMix(
                "fixed inputs and TFP already exceed the target".into(),
            ));
        }
        let mut hi = 1.0;
        while f(hi) < 0.0 {
            hi *= 2.0;
            if !hi.is_finite() {
                return Err(BgaError::InfeasibleMix("target growth is unbounded".into()));
            }
        }
        solve_rate_numeric(f, lo, hi)?
    };
    let rates = elasticities
        .keys()
        .map(|k| {
            let g = strategy.input_overrides.get(k).copied().unwrap_or(common);
            (k.clone(), g)
        })
        .collect();
    Ok((common, rates))
}

/// One year of a plan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanRow {
    pub year: u32,
    pub period: String,
    pub output: f64,
    pub tfp: f64,
    /// Authoritative continuous levels.
    pub input_levels: IndexMap<String, f64>,
    /// Display levels: discrete inputs rounded half-up, others unchanged.
    pub input_levels_display: IndexMap<String, f64>,
    /// Growth from the previous year; absent on the base row.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub growth_applied: Option<GrowthRates>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrowthPlan {
    pub model: ProductionModel,
    pub target: GrowthTarget,
    pub strategy: StrategyMix,
    pub annual_output_growth: f64,
    pub tfp_growth: f64,
    pub common_input_growth: f64,
    pub input_growth: IndexMap<String, f64>,
    #[serde(default)]
    pub discrete_inputs: Vec<String>,
    pub rows: Vec<PlanRow>,
}

impl GrowthPlan {
    pub fn base(&self) -> &PlanRow {
        &self.rows[0]
    }

    pub fn terminal(&self) -> &PlanRow {
        self.rows.last().expect("plan has at least the base row")
    }

    pub fn start_year(&self) -> u32 {
        self.base().year
    }

    pub fn horizon_year(&self) -> u32 {
        self.terminal().year
    }

    pub fn row_for_year(&self, year: u32) -> Option<&PlanRow> {
        year.checked_sub(self.start_year())
            .and_then(|i| self.rows.get(i as usize))
    }

    pub fn input_ids(&self) -> impl Iterator<Item = &str> {
        self.model.input_ids()
    }

    /// Planned output per year, the plan's KPI series.
    pub fn kpi_series(&self) -> Vec<(u32, f64)> {
        self.rows.iter().map(|r| (r.year, r.output)).collect()
    }

    /// Marks inputs as discrete and refreshes the display columns. Continuous
    /// levels are untouched.
    pub fn set_discrete(&mut self, ids: &[String]) -> Result<()> {
        for id in ids {
            if !self.model.elasticities.contains_key(id) {
                return Err(BgaError::InvalidArgument(format!(
                    "unknown discrete input `{id}`"
                )));
            }
        }
        self.discrete_inputs = ids.to_vec();
        for row in &mut self.rows {
            row.input_levels_display = display_levels(&row.input_levels, ids);
        }
        Ok(())
    }
}

fn display_levels(levels: &IndexMap<String, f64>, discrete: &[String]) -> IndexMap<String, f64> {
    levels
        .iter()
        .map(|(id, &v)| {
            let shown = if discrete.iter().any(|d| d == id) {
                round_half_up(v)
            } else {
                v
            };
            (id.clone(), shown)
        })
        .collect()
}

/// Rounds to the nearest integer, ties upward. Values within a relative 1e-9
/// of a tie count as ties, so `4000 * 1.15^3` shows as 6084.
pub fn round_half_up(x: f64) -> f64 {
    let floor = x.floor();
    let frac = x - floor;
    if (frac - 0.5).abs() <= 1e-9 * x.abs().max(1.0) {
        floor + 1.0
    } else {
        x.round()
    }
}

fn period_label(base: &str, offset: u32) -> String {
    if offset == 0 {
        return base.to_string();
    }
    match base.trim().parse::<i64>() {
        Ok(p) => (p + i64::from(offset)).to_string(),
        Err(_) => format!("{base}+{offset}"),
    }
}

fn check_model_inputs(model: &ProductionModel, row: &ObservationRow) -> Result<()> {
    let same = model.elasticities.len() == row.input_levels.len()
        && model.elasticities.keys().all(|k| row.input_levels.contains_key(k));
    if same {
        Ok(())
    } else {
        Err(BgaError::MismatchedInputs(format!(
            "model inputs [{}] vs period {} inputs [{}]",
            join_keys(model.elasticities.keys()),
            row.period,
            join_keys(row.input_levels.keys()),
        )))
    }
}

/// Builds a schedule of `years` years from `base` growing output at
/// `annual_gy` under `strategy`.
///
/// The base TFP level is backed out of the base row so every row satisfies
/// the production function exactly. The plan's target is recorded as an
/// explicit rate; use [`build_plan`] to attach another target.
pub fn generate_schedule(
    model: &ProductionModel,
    base: &ObservationRow,
    annual_gy: f64,
    strategy: &StrategyMix,
    years: u32,
) -> Result<GrowthPlan> {
    check_model_inputs(model, base)?;
    base.check_positive()?;
    let (common, rates) = input_growth_rates(annual_gy, strategy, model)?;
    let tfp_growth = strategy.effective_tfp_growth(annual_gy)?;
    let base_tfp = back_out_tfp(base, &model.elasticities)?;

    // Rows and the stored model follow the base row's column order.
    let base_levels = base.input_levels.clone();
    let mut model = model.clone();
    model.elasticities = base_levels
        .keys()
        .map(|k| (k.clone(), model.elasticities[k]))
        .collect();

    let growth = GrowthRates {
        output_growth: annual_gy,
        input_growth: rates.clone(),
        tfp_growth: Some(tfp_growth),
    };
    let rows = (0..=years)
        .map(|y| {
            let input_levels: IndexMap<String, f64> = if y == 0 {
                base_levels.clone()
            } else {
                base_levels
                    .iter()
                    .map(|(k, &x)| (k.clone(), x * compound(rates[k], y)))
                    .collect()
            };
            PlanRow {
                year: y,
                period: period_label(&base.period, y),
                output: if y == 0 {
                    base.output_level
                } else {
                    base.output_level * compound(annual_gy, y)
                },
                tfp: base_tfp * compound(tfp_growth, y),
                input_levels_display: input_levels.clone(),
                input_levels,
                growth_applied: (y > 0).then(|| growth.clone()),
            }
        })
        .collect();

    let mut strategy = strategy.clone();
    if strategy.mode == StrategyMode::TfpOnly {
        strategy.tfp_growth = tfp_growth;
    }
    Ok(GrowthPlan {
        model,
        target: GrowthTarget::explicit_rate(annual_gy),
        strategy,
        annual_output_growth: annual_gy,
        tfp_growth,
        common_input_growth: common,
        input_growth: rates,
        discrete_inputs: Vec::new(),
        rows,
    })
}

fn compound(rate: f64, years: u32) -> f64 {
    (1.0 + rate).powi(years as i32)
}

/// Resolves `target` to an annual rate over `years` and generates the plan.
pub fn build_plan(
    model: &ProductionModel,
    base: &ObservationRow,
    target: &GrowthTarget,
    strategy: &StrategyMix,
    years: u32,
    discrete_inputs: &[String],
) -> Result<GrowthPlan> {
    if years == 0 {
        return Err(BgaError::NonPositiveHorizon(0.0));
    }
    let annual = target.annual_rate(f64::from(years))?;
    let mut plan = generate_schedule(model, base, annual, strategy, years)?;
    plan.target = target.clone();
    plan.set_discrete(discrete_inputs)?;
    Ok(plan)
}

/// Per-year attribution of a plan's output growth.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanDecomposition {
    /// `e_i * g_i` per input, then `g_TFP` under [`TFP_SOURCE`].
    pub contributions: IndexMap<String, f64>,
    /// Sum of the contributions (the additive identity).
    pub approximate_output_growth: f64,
    /// `(1 + g_TFP) * prod((1 + g_i)^e_i) - 1`.
    pub exact_output_growth: f64,
    /// `exact - approximate`.
    pub approximation_gap: f64,
}

pub fn decompose_plan(plan: &GrowthPlan) -> PlanDecomposition {
    let mut contributions: IndexMap<String, f64> = plan
        .model
        .elasticities
        .iter()
        .map(|(id, e)| (id.clone(), e * plan.input_growth[id]))
        .collect();
    contributions.insert(TFP_SOURCE.to_string(), plan.tfp_growth);
    let approx: f64 = contributions.values().sum();
    let log_exact = plan.tfp_growth.ln_1p()
        + plan
            .model
            .elasticities
            .iter()
            .map(|(id, e)| e * plan.input_growth[id].ln_1p())
            .sum::<f64>();
    let exact = log_exact.exp_m1();
    PlanDecomposition {
        contributions,
        approximate_output_growth: approx,
        exact_output_growth: exact,
        approximation_gap: exact - approx,
    }
}

/// True when every input ratio stays constant across the plan (a straight
/// output expansion path).
pub fn expansion_path_check(plan: &GrowthPlan) -> bool {
    let ids: Vec<&str> = plan.input_ids().collect();
    let Some((&anchor, others)) = ids.split_first() else {
        return true;
    };
    let base = &plan.base().input_levels;
    plan.rows.iter().all(|row| {
        others.iter().all(|&id| {
            let ratio0 = base[id] / base[anchor];
            let ratio = row.input_levels[id] / row.input_levels[anchor];
            ((ratio - ratio0) / ratio0).abs() <= EXPANSION_PATH_TOLERANCE
        })
    })
}

/// Comparison of one realized period against the plan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanEvaluation {
    pub year: u32,
    pub planned: PlanRow,
    pub realized: ObservationRow,
    pub output_gap: f64,
    pub input_gaps: IndexMap<String, f64>,
    /// Annual growth needed from the realized output to reach the plan's
    /// terminal output in the remaining years. `None` once no years remain.
    pub remaining_required_rate: Option<f64>,
}

/// Compares a realized row against the plan row for `year`.
pub fn evaluate_year(plan: &GrowthPlan, year: u32, realized: &ObservationRow) -> Result<PlanEvaluation> {
    let planned = plan.row_for_year(year).ok_or_else(|| {
        BgaError::PeriodMismatch(format!(
            "year {year} is outside the plan ({}..={})",
            plan.start_year(),
            plan.horizon_year()
        ))
    })?;
    check_model_inputs(&plan.model, realized)?;
    realized.check_positive()?;
    let gap = |r: f64, p: f64| (r - p) / p;
    let input_gaps = planned
        .input_levels
        .iter()
        .map(|(id, &p)| (id.clone(), gap(realized.input_levels[id], p)))
        .collect();
    let remaining = plan.horizon_year() - year;
    let remaining_required_rate = (remaining > 0).then(|| {
        (plan.terminal().output / realized.output_level).powf(1.0 / f64::from(remaining)) - 1.0
    });
    Ok(PlanEvaluation {
        year,
        planned: planned.clone(),
        realized: realized.clone(),
        output_gap: gap(realized.output_level, planned.output),
        input_gaps,
        remaining_required_rate,
    })
}

/// Evaluates every realized row. Rows are matched to plan years by period
/// label.
pub fn evaluate_plan(plan: &GrowthPlan, realized: &TimeSeriesDataset) -> Result<Vec<PlanEvaluation>> {
    realized
        .observations
        .iter()
        .map(|row| {
            let planned = plan
                .rows
                .iter()
                .find(|p| p.period == row.period)
                .ok_or_else(|| {
                    BgaError::PeriodMismatch(format!(
                        "realized period `{}` matches no plan year",
                        row.period
                    ))
                })?;
            evaluate_year(plan, planned.year, row)
        })
        .collect()
}

/// Rebuilds the remainder of a plan from a realized row so that it still
/// reaches the original terminal output, keeping the same strategy.
pub fn replan(plan: &GrowthPlan, from_year: u32, realized_row: &ObservationRow) -> Result<GrowthPlan> {
    let horizon = plan.horizon_year();
    let planned = plan.row_for_year(from_year).ok_or_else(|| {
        BgaError::HorizonExhausted(format!(
            "year {from_year} is outside the plan ({}..={horizon})",
            plan.start_year()
        ))
    })?;
    check_model_inputs(&plan.model, realized_row)?;
    realized_row.check_positive()?;

    let mut base = realized_row.clone();
    base.period = planned.period.clone();
    let terminal = plan.terminal().output;
    let remaining = horizon - from_year;
    let annual = if remaining == 0 {
        if realized_row.output_level < terminal * (1.0 - 1e-12) {
            return Err(BgaError::HorizonExhausted(format!(
                "terminal output {terminal} missed at the final year"
            )));
        }
        0.0
    } else {
        (terminal / realized_row.output_level).powf(1.0 / f64::from(remaining)) - 1.0
    };

    let mut next = if remaining == 0 {
        // Only the terminal row remains; no growth to split.
        generate_schedule(&plan.model, &base, 0.0, &StrategyMix::inputs_only(), 0)?
    } else {
        generate_schedule(&plan.model, &base, annual, &plan.strategy, remaining)?
    };
    if remaining == 0 {
        next.strategy = plan.strategy.clone();
    }
    for row in &mut next.rows {
        row.year += from_year;
    }
    next.target = plan.target.clone();
    next.set_discrete(&plan.discrete_inputs)?;
    Ok(next)
}
