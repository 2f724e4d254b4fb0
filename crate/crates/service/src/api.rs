//! Request handling, independent of the HTTP transport.
//!
//! [`Service::handle`] maps a method, path, optional `If-Match` version and
//! JSON body to a status code and body. Scenario mutations take the
//! scenario's lock, compare versions and write the new record atomically.

use std::path::Path;

use bga_core::io::{
    charts_json, plan_charts, plan_csv, read_dataset, EstimateDirective, ModelSource,
};
use bga_core::planner::{build_plan, decompose_plan, evaluate_year, GrowthPlan, PlanEvaluation};
use bga_core::{
    classify_rts, fit_cobb_douglas, BgaError, GrowthTarget, ObservationRow, ProductionModel,
    StrategyMix, TimeSeriesDataset,
};
use indexmap::IndexMap;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::store::{FileStore, RecordKind, StoreError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub id: String,
    pub dataset_ref: String,
    pub model: ProductionModel,
    pub target: GrowthTarget,
    pub strategy: StrategyMix,
    pub horizon_years: u32,
    #[serde(default)]
    pub discrete_inputs: Vec<String>,
    pub latest_plan: Option<GrowthPlan>,
    #[serde(default)]
    pub evaluations: Vec<PlanEvaluation>,
    pub version: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ApiError {
    pub status: u16,
    pub code: String,
    pub message: String,
    pub detail: Value,
}

impl ApiError {
    pub fn new(status: u16, code: &str, message: impl Into<String>) -> Self {
        ApiError {
            status,
            code: code.to_string(),
            message: message.into(),
            detail: Value::Null,
        }
    }

    fn with_detail(mut self, detail: Value) -> Self {
        self.detail = detail;
        self
    }

    fn not_found(what: &str, id: &str) -> Self {
        ApiError::new(404, "NotFound", format!("{what} `{id}` not found"))
    }

    fn bad_request(message: impl Into<String>) -> Self {
        ApiError::new(400, "BadRequest", message)
    }

    pub fn body(&self) -> Value {
        json!({"error": {"code": self.code, "message": self.message, "detail": self.detail}})
    }
}

impl From<BgaError> for ApiError {
    fn from(err: BgaError) -> Self {
        let status = match &err {
            BgaError::Parse { .. } | BgaError::NonPositiveLevel { .. } | BgaError::Json(_) => 400,
            BgaError::PeriodMismatch(_) => 409,
            _ => 422,
        };
        let detail = match &err {
            BgaError::Parse { row, column, .. } => json!({"row": row, "column": column}),
            BgaError::NonPositiveLevel { location, value } => {
                json!({"location": location, "value": value})
            }
            _ => Value::Null,
        };
        ApiError::new(status, err.code(), err.to_string()).with_detail(detail)
    }
}

impl From<StoreError> for ApiError {
    fn from(err: StoreError) -> Self {
        ApiError::new(500, "StoreError", err.to_string())
    }
}

type ApiResult<T> = Result<T, ApiError>;

#[derive(Debug, Clone, Default)]
pub struct ApiRequest {
    pub method: String,
    pub path: String,
    pub query: Option<String>,
    pub if_match: Option<String>,
    pub body: Vec<u8>,
}

impl ApiRequest {
    pub fn new(method: &str, path: &str) -> Self {
        let (path, query) = match path.split_once('?') {
            Some((p, q)) => (p.to_string(), Some(q.to_string())),
            None => (path.to_string(), None),
        };
        ApiRequest {
            method: method.to_string(),
            path,
            query,
            ..Default::default()
        }
    }

    pub fn json(mut self, body: &Value) -> Self {
        self.body = serde_json::to_vec(body).expect("value serializes");
        self
    }

    pub fn if_match(mut self, version: u64) -> Self {
        self.if_match = Some(version.to_string());
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ApiResponse {
    pub status: u16,
    pub content_type: &'static str,
    pub body: String,
    /// Scenario version after the request, sent as the `ETag` header.
    pub version: Option<u64>,
}

impl ApiResponse {
    fn json(status: u16, value: &Value, version: Option<u64>) -> Self {
        ApiResponse {
            status,
            content_type: "application/json",
            body: serde_json::to_string(value).expect("value serializes"),
            version,
        }
    }

    fn error(err: &ApiError) -> Self {
        ApiResponse::json(err.status, &err.body(), None)
    }

    pub fn json_body(&self) -> Value {
        serde_json::from_str(&self.body).unwrap_or(Value::Null)
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NewDataset {
    pub csv: String,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimateRequest {
    pub dataset_id: String,
    #[serde(default)]
    pub crts: bool,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NewScenario {
    pub dataset_id: String,
    pub model: ModelSource,
    pub target: GrowthTarget,
    pub strategy: StrategyMix,
    pub horizon_years: u32,
    #[serde(default)]
    pub discrete_inputs: Vec<String>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioPatch {
    pub model: Option<ModelSource>,
    pub target: Option<GrowthTarget>,
    pub strategy: Option<StrategyMix>,
    pub horizon_years: Option<u32>,
    pub discrete_inputs: Option<Vec<String>>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WhatIf {
    pub target: Option<GrowthTarget>,
    pub strategy: Option<StrategyMix>,
    pub horizon_years: Option<u32>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RealizedSubmission {
    pub year: u32,
    #[serde(default)]
    pub period: Option<String>,
    pub input_levels: IndexMap<String, f64>,
    pub output_level: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct StoredDataset {
    csv: String,
}

pub struct Service {
    store: FileStore,
}

impl Service {
    pub fn open(store_dir: impl AsRef<Path>) -> Result<Self, StoreError> {
        Ok(Service {
            store: FileStore::open(store_dir)?,
        })
    }

    pub fn store(&self) -> &FileStore {
        &self.store
    }

    pub fn handle(&self, req: &ApiRequest) -> ApiResponse {
        match self.route(req) {
            Ok(resp) => resp,
            Err(err) => ApiResponse::error(&err),
        }
    }

    fn route(&self, req: &ApiRequest) -> ApiResult<ApiResponse> {
        let segments: Vec<&str> = req
            .path
            .trim_matches('/')
            .split('/')
            .filter(|s| !s.is_empty())
            .collect();
        let expected = parse_if_match(req.if_match.as_deref())?;
        match (req.method.as_str(), segments.as_slice()) {
            ("POST", ["datasets"]) => {
                let body: NewDataset = parse_body(&req.body)?;
                let id = self.create_dataset(&body.csv)?;
                Ok(ApiResponse::json(201, &json!({"id": id}), None))
            }
            ("GET", ["datasets", id]) => {
                let (csv, dataset) = self.get_dataset(id)?;
                Ok(ApiResponse::json(
                    200,
                    &json!({"id": id, "csv": csv, "dataset": dataset}),
                    None,
                ))
            }
            ("POST", ["models", "estimate"]) => {
                let body: EstimateRequest = parse_body(&req.body)?;
                let model = self.estimate_model(&body.dataset_id, body.crts)?;
                let rts = classify_rts(&model);
                Ok(ApiResponse::json(200, &json!({"model": model, "rts": rts}), None))
            }
            ("POST", ["scenarios"]) => {
                let body: NewScenario = parse_body(&req.body)?;
                let s = self.create_scenario(body)?;
                Ok(ApiResponse::json(201, &to_value(&s), Some(s.version)))
            }
            ("GET", ["scenarios", id]) => {
                let s = self.get_scenario(id)?;
                Ok(ApiResponse::json(200, &to_value(&s), Some(s.version)))
            }
            ("PATCH", ["scenarios", id]) => {
                let expected = expected.ok_or_else(|| {
                    ApiError::new(428, "PreconditionRequired", "PATCH requires If-Match: <version>")
                })?;
                let patch: ScenarioPatch = parse_body(&req.body)?;
                let s = self.patch_scenario(id, expected, patch)?;
                Ok(ApiResponse::json(200, &to_value(&s), Some(s.version)))
            }
            ("POST", ["scenarios", id, "plan"]) => {
                let (plan, version) = self.compute_plan(id, expected)?;
                Ok(ApiResponse::json(200, &to_value(&plan), Some(version)))
            }
            ("POST", ["scenarios", id, "what-if"]) => {
                let overrides: WhatIf = if req.body.is_empty() {
                    WhatIf::default()
                } else {
                    parse_body(&req.body)?
                };
                let plan = self.what_if(id, overrides)?;
                Ok(ApiResponse::json(200, &to_value(&plan), None))
            }
            ("POST", ["scenarios", id, "realized"]) => {
                let body: RealizedSubmission = parse_body(&req.body)?;
                let (eval, version) = self.submit_realized(id, body, expected)?;
                Ok(ApiResponse::json(200, &to_value(&eval), Some(version)))
            }
            ("GET", ["scenarios", id, "report"]) => {
                let format = query_param(req.query.as_deref(), "format").unwrap_or("json");
                self.report(id, format)
            }
            (_, ["datasets"] | ["datasets", _] | ["models", "estimate"] | ["scenarios"])
            | (_, ["scenarios", _] | ["scenarios", _, _]) => Err(ApiError::new(
                405,
                "MethodNotAllowed",
                format!("{} not allowed on {}", req.method, req.path),
            )),
            _ => Err(ApiError::new(404, "NotFound", format!("no route for {}", req.path))),
        }
    }

    pub fn create_dataset(&self, csv: &str) -> ApiResult<String> {
        read_dataset(csv)?;
        let id = new_id();
        let payload = serde_json::to_string(&StoredDataset {
            csv: csv.to_string(),
        })
        .expect("dataset serializes");
        self.store.put(RecordKind::Dataset, &id, payload)?;
        Ok(id)
    }

    /// The stored CSV exactly as uploaded, and its parsed form.
    pub fn get_dataset(&self, id: &str) -> ApiResult<(String, TimeSeriesDataset)> {
        let record = self
            .store
            .get(RecordKind::Dataset, id)?
            .ok_or_else(|| ApiError::not_found("dataset", id))?;
        let stored: StoredDataset = serde_json::from_str(&record.payload)
            .map_err(|e| ApiError::new(500, "StoreError", e.to_string()))?;
        let dataset = read_dataset(&stored.csv)?;
        Ok((stored.csv, dataset))
    }

    pub fn estimate_model(&self, dataset_id: &str, crts: bool) -> ApiResult<ProductionModel> {
        let (_, data) = self.get_dataset(dataset_id)?;
        Ok(fit_cobb_douglas(&data, crts)?)
    }

    fn resolve_model(&self, dataset_id: &str, source: ModelSource) -> ApiResult<ProductionModel> {
        match source {
            ModelSource::Estimate {
                estimate: EstimateDirective { crts },
            } => self.estimate_model(dataset_id, crts),
            ModelSource::Inline(mut model) => {
                model.validate()?;
                Ok(model)
            }
        }
    }

    pub fn create_scenario(&self, req: NewScenario) -> ApiResult<Scenario> {
        self.get_dataset(&req.dataset_id)?;
        req.target.validate()?;
        check_horizon(req.horizon_years)?;
        let model = self.resolve_model(&req.dataset_id, req.model)?;
        let scenario = Scenario {
            id: new_id(),
            dataset_ref: req.dataset_id,
            model,
            target: req.target,
            strategy: req.strategy,
            horizon_years: req.horizon_years,
            discrete_inputs: req.discrete_inputs,
            latest_plan: None,
            evaluations: Vec::new(),
            version: 1,
        };
        self.save(&scenario)?;
        Ok(scenario)
    }

    pub fn get_scenario(&self, id: &str) -> ApiResult<Scenario> {
        let record = self
            .store
            .get(RecordKind::Scenario, id)?
            .ok_or_else(|| ApiError::not_found("scenario", id))?;
        serde_json::from_str(&record.payload)
            .map_err(|e| ApiError::new(500, "StoreError", e.to_string()))
    }

    fn save(&self, scenario: &Scenario) -> ApiResult<()> {
        let payload = serde_json::to_string(scenario).expect("scenario serializes");
        self.store.put(RecordKind::Scenario, &scenario.id, payload)?;
        Ok(())
    }

    /// Runs `mutate` on the current scenario under its lock, bumps the
    /// version and persists. Fails with 409 if `expected` is stale.
    fn mutate<T>(
        &self,
        id: &str,
        expected: Option<u64>,
        mutate: impl FnOnce(&mut Scenario) -> ApiResult<T>,
    ) -> ApiResult<(T, Scenario)> {
        let lock = self.store.lock(id);
        let _guard = lock.lock().unwrap_or_else(|e| e.into_inner());
        let mut scenario = self.get_scenario(id)?;
        if let Some(v) = expected {
            if v != scenario.version {
                return Err(ApiError::new(
                    409,
                    "VersionConflict",
                    format!("scenario is at version {}, not {v}", scenario.version),
                )
                .with_detail(json!({"current_version": scenario.version})));
            }
        }
        let out = mutate(&mut scenario)?;
        scenario.version += 1;
        self.save(&scenario)?;
        Ok((out, scenario))
    }

    pub fn patch_scenario(&self, id: &str, expected: u64, patch: ScenarioPatch) -> ApiResult<Scenario> {
        let (_, scenario) = self.mutate(id, Some(expected), |s| {
            if let Some(source) = patch.model {
                s.model = self.resolve_model(&s.dataset_ref, source)?;
            }
            if let Some(target) = patch.target {
                target.validate()?;
                s.target = target;
            }
            if let Some(strategy) = patch.strategy {
                s.strategy = strategy;
            }
            if let Some(h) = patch.horizon_years {
                check_horizon(h)?;
                s.horizon_years = h;
            }
            if let Some(d) = patch.discrete_inputs {
                s.discrete_inputs = d;
            }
            s.latest_plan = None;
            Ok(())
        })?;
        Ok(scenario)
    }

    fn plan_for(
        &self,
        scenario: &Scenario,
        target: &GrowthTarget,
        strategy: &StrategyMix,
        horizon: u32,
    ) -> ApiResult<GrowthPlan> {
        let (_, data) = self.get_dataset(&scenario.dataset_ref)?;
        Ok(build_plan(
            &scenario.model,
            data.last(),
            target,
            strategy,
            horizon,
            &scenario.discrete_inputs,
        )?)
    }

    pub fn compute_plan(&self, id: &str, expected: Option<u64>) -> ApiResult<(GrowthPlan, u64)> {
        let (plan, scenario) = self.mutate(id, expected, |s| {
            let plan = self.plan_for(s, &s.target, &s.strategy, s.horizon_years)?;
            s.latest_plan = Some(plan.clone());
            Ok(plan)
        })?;
        Ok((plan, scenario.version))
    }

    /// Plan for the scenario with `overrides` applied. Nothing is persisted.
    pub fn what_if(&self, id: &str, overrides: WhatIf) -> ApiResult<GrowthPlan> {
        let scenario = self.get_scenario(id)?;
        let target = overrides.target.unwrap_or_else(|| scenario.target.clone());
        target.validate()?;
        let strategy = overrides.strategy.unwrap_or_else(|| scenario.strategy.clone());
        let horizon = overrides.horizon_years.unwrap_or(scenario.horizon_years);
        check_horizon(horizon)?;
        self.plan_for(&scenario, &target, &strategy, horizon)
    }

    pub fn submit_realized(
        &self,
        id: &str,
        body: RealizedSubmission,
        expected: Option<u64>,
    ) -> ApiResult<(PlanEvaluation, u64)> {
        let (eval, scenario) = self.mutate(id, expected, |s| {
            let plan = s.latest_plan.as_ref().ok_or_else(|| {
                ApiError::new(409, "NoPlan", "compute a plan before submitting realized data")
            })?;
            let period = body.period.clone().unwrap_or_else(|| {
                plan.row_for_year(body.year)
                    .map(|r| r.period.clone())
                    .unwrap_or_else(|| body.year.to_string())
            });
            let row = ObservationRow {
                period,
                input_levels: body.input_levels.clone(),
                output_level: body.output_level,
            };
            let eval = evaluate_year(plan, body.year, &row)?;
            s.evaluations.push(eval.clone());
            Ok(eval)
        })?;
        Ok((eval, scenario.version))
    }

    pub fn report(&self, id: &str, format: &str) -> ApiResult<ApiResponse> {
        let scenario = self.get_scenario(id)?;
        let plan = scenario
            .latest_plan
            .as_ref()
            .ok_or_else(|| ApiError::new(409, "NoPlan", "scenario has no computed plan"))?;
        match format {
            "csv" => Ok(ApiResponse {
                status: 200,
                content_type: "text/csv",
                body: plan_csv(plan),
                version: Some(scenario.version),
            }),
            "json" => {
                let charts: Value =
                    serde_json::from_str(&charts_json(&plan_charts(plan))).expect("charts json");
                let body = json!({
                    "plan": plan,
                    "decomposition": decompose_plan(plan),
                    "charts": charts,
                });
                Ok(ApiResponse::json(200, &body, Some(scenario.version)))
            }
            other => Err(ApiError::bad_request(format!(
                "unknown report format `{other}` (expected csv or json)"
            ))),
        }
    }
}

fn new_id() -> String {
    uuid::Uuid::new_v4().simple().to_string()
}

fn check_horizon(h: u32) -> ApiResult<()> {
    if h == 0 {
        return Err(BgaError::NonPositiveHorizon(0.0).into());
    }
    Ok(())
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("serializes")
}

fn parse_body<T: for<'de> Deserialize<'de>>(body: &[u8]) -> ApiResult<T> {
    serde_json::from_slice(body).map_err(|e| {
        ApiError::bad_request(format!("invalid JSON body: {e}"))
            .with_detail(json!({"line": e.line(), "column": e.column()}))
    })
}

fn parse_if_match(raw: Option<&str>) -> ApiResult<Option<u64>> {
    let Some(raw) = raw else { return Ok(None) };
    let trimmed = raw.trim().trim_start_matches("W/").trim_matches('"');
    trimmed
        .parse()
        .map(Some)
        .map_err(|_| ApiError::bad_request(format!("If-Match must be a version number, got `{raw}`")))
}

fn query_param<'a>(query: Option<&'a str>, key: &str) -> Option<&'a str> {
    query?
        .split('&')
        .filter_map(|kv| kv.split_once('='))
        .find(|(k, _)| *k == key)
        .map(|(_, v)| v)
}
