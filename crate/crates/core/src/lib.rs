//! Backward growth accounting.
//!
//! Forward growth accounting takes realized output and input growth and
//! attributes it to input accumulation and total factor productivity (TFP).
//! This crate also runs the procedure in reverse: starting from an output
//! objective it derives the annual output growth required, splits it between
//! TFP growth and proportional input accumulation using exact compounding,
//! and emits a year-by-year schedule of the inputs and TFP needed.
//!
//! Module map:
//!
//! * [`estimation`] fits a Cobb-Douglas production function by (restricted)
//!   least squares in logs and classifies returns to scale.
//! * [`growth_accounting`] computes growth rates, the Solow residual and
//!   contribution breakdowns.
//! * [`target_solver`] turns objectives (multiples, catching a rival) into a
//!   required growth rate or horizon.
//! * [`planner`] builds, decomposes, evaluates and re-plans growth schedules.
//! * [`io`] reads datasets and configs and writes plan reports.
//!
//! All rates are fractions (`0.15` is 15%). Percentages only appear in
//! rendered reports.

// Guards like `!(x > 0.0)` are written that way so NaN fails them too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dataset;
pub mod error;
pub mod estimation;
pub mod growth_accounting;
pub mod io;
pub mod planner;
pub mod target_solver;

pub use dataset::{InputDefinition, ObservationRow, TimeSeriesDataset};
pub use error::{BgaError, Result};
pub use estimation::{
    back_out_tfp, classify_rts, fit_cobb_douglas, predict, ModelWarning, ProductionModel,
    RtsClass, RtsLabel,
};
pub use growth_accounting::{
    approximation_gap, decompose, exact_compose, growth_between, growth_between_with,
    solow_residual, Decomposition, GrowthRates, RateMode, TFP_SOURCE,
};
pub use planner::{
    build_plan, decompose_plan, evaluate_plan, evaluate_year, expansion_path_check,
    generate_schedule, replan, round_half_up, split_growth, GrowthPlan, PlanDecomposition, PlanEvaluation, PlanRow, StrategyMix,
    StrategyMode,
};
pub use target_solver::{
    catchup_horizon, future_value, required_rate, required_rate_numeric, solve_rate_numeric,
    years_to_multiple_exact,
    years_to_multiple_rule70, CatchupProblem, GrowthTarget, TargetKind,
};

/// Elasticity map keyed by input id, in input order.
pub type Elasticities = indexmap::IndexMap<String, f64>;
