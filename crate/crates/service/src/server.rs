//! Axum adapter: every request is forwarded to [`Service::handle`] on the
//! blocking pool, since the store does synchronous file I/O.

use std::net::SocketAddr;
use std::path::Path;
use std::sync::Arc;

use axum::body::{to_bytes, Body};
use axum::extract::State;
use axum::http::{header, HeaderValue, Request, Response, StatusCode};
use axum::Router;

use crate::api::{ApiError, ApiRequest, ApiResponse, Service};

const MAX_BODY_BYTES: usize = 16 * 1024 * 1024;

pub fn router(service: Arc<Service>) -> Router {
    Router::new().fallback(dispatch).with_state(service)
}

async fn dispatch(State(service): State<Arc<Service>>, req: Request<Body>) -> Response<Body> {
    let (parts, body) = req.into_parts();
    let body = match to_bytes(body, MAX_BODY_BYTES).await {
        Ok(b) => b.to_vec(),
        Err(e) => {
            let err = ApiError::new(413, "PayloadTooLarge", e.to_string());
            return into_response(ApiResponse {
                status: err.status,
                content_type: "application/json",
                body: err.body().to_string(),
                version: None,
            });
        }
    };
    let api_req = ApiRequest {
        method: parts.method.as_str().to_string(),
        path: parts.uri.path().to_string(),
        query: parts.uri.query().map(str::to_string),
        if_match: parts
            .headers
            .get(header::IF_MATCH)
            .and_then(|v| v.to_str().ok())
            .map(str::to_string),
        body,
    };
    let resp = tokio::task::spawn_blocking(move || service.handle(&api_req))
        .await
        .unwrap_or_else(|e| ApiResponse {
            status: 500,
            content_type: "application/json",
            body: ApiError::new(500, "Internal", e.to_string()).body().to_string(),
            version: None,
        });
    into_response(resp)
}

fn into_response(resp: ApiResponse) -> Response<Body> {
    let mut out = Response::new(Body::from(resp.body));
    *out.status_mut() = StatusCode::from_u16(resp.status).unwrap_or(StatusCode::INTERNAL_SERVER_ERROR);
    out.headers_mut()
        .insert(header::CONTENT_TYPE, HeaderValue::from_static(resp.content_type));
    if let Some(v) = resp.version {
        if let Ok(etag) = HeaderValue::from_str(&format!("\"{v}\"")) {
            out.headers_mut().insert(header::ETAG, etag);
        }
    }
    out
}

/// Serves on `127.0.0.1:port` until the process is stopped.
pub fn serve(port: u16, store_dir: &Path) -> std::io::Result<()> {
    let service = Service::open(store_dir).map_err(std::io::Error::other)?;
    let app = router(Arc::new(service));
    let rt = tokio::runtime::Builder::new_multi_thread().enable_all().build()?;
    rt.block_on(async move {
        let addr = SocketAddr::from(([127, 0, 0, 1], port));
        let listener = tokio::net::TcpListener::bind(addr).await?;
        eprintln!("listening on http://{}", listener.local_addr()?);
        axum::serve(listener, app).await
    })
}
