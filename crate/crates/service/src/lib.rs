//! Scenario service for growth plans.
//!
//! Datasets and scenarios are kept as JSON files under a store directory.
//! [`api::Service`] implements the endpoints independently of HTTP;
//! [`server`] exposes them over HTTP with axum.

pub mod api;
pub mod server;
pub mod store;

pub use api::{ApiError, ApiRequest, ApiResponse, Scenario, Service};
pub use store::{FileStore, RecordKind, StoreError};
