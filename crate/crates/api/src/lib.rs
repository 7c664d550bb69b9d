//! Read-only HTTP/JSON API over the metrics, tables and PR network.
//!
//! Every route lives under `/v1`. Metric bodies are the pretty-printed JSON
//! of [`tapestry_core::report::run`], byte-for-byte what `tapestry export`
//! writes. Errors are `{"code", "message"}` with a 4xx/5xx status.
//!
//! | route | report | extra params |
//! |---|---|---|
//! | `GET /v1/metrics/turnover` | turnover | `as_of` |
//! | `GET /v1/metrics/drill-down` | drill-down | `as_of` |
//! | `GET /v1/metrics/newcomers` | newcomers | |
//! | `GET /v1/metrics/retention` | retention | |
//! | `GET /v1/metrics/contributions` | contributions | `kind`, `measure` |
//! | `GET /v1/metrics/time-to-merge` | time-to-merge | |
//! | `GET /v1/metrics/first-attention` | first-attention | |
//! | `GET /v1/metrics/pr-overview` | pr-overview | |
//! | `GET /v1/metrics/contributors` | contributors | |
//! | `GET /v1/attention/prs` | attention | |
//! | `GET /v1/network/pr` | network | |
//! | `GET /v1/identities/{id}` | contributor profile | `from`, `to`, `as_of` |
//! | `GET /v1/health` | status, never needs a token | |
//! | `POST /v1/refresh` | reload the store now | |
//!
//! All filtered routes take `from`, `to`, `lens` and `group`.

mod error;
pub mod query;
mod source;

use std::future::Future;
use std::net::SocketAddr;
use std::sync::{Arc, RwLock};
use std::time::Duration;

use axum::extract::rejection::QueryRejection;
use axum::extract::{Path, Query, Request, State};
use axum::http::{header, HeaderValue, Method, StatusCode};
use axum::middleware::{self, Next};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::Router;
use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use tapestry_core::metrics::contributor_profile;
use tapestry_core::report::{self, Report};
use tapestry_core::{Dataset, IdentityId};
use tower_http::cors::{AllowOrigin, CorsLayer};

pub use error::{ApiError, ErrorBody};
pub use query::{parse_filter, parse_request};
pub use source::{DatasetSource, Enricher, LoadError, StoreSource, REGISTRY_FILE};

/// Route serving `report`.
pub fn route_of(report: Report) -> &'static str {
    match report {
        Report::Turnover => "/v1/metrics/turnover",
        Report::DrillDown => "/v1/metrics/drill-down",
        Report::Newcomers => "/v1/metrics/newcomers",
        Report::Retention => "/v1/metrics/retention",
        Report::Contributions => "/v1/metrics/contributions",
        Report::TimeToMerge => "/v1/metrics/time-to-merge",
        Report::FirstAttention => "/v1/metrics/first-attention",
        Report::PrOverview => "/v1/metrics/pr-overview",
        Report::Contributors => "/v1/metrics/contributors",
        Report::Attention => "/v1/attention/prs",
        Report::Network => "/v1/network/pr",
    }
}

#[derive(Debug, Clone)]
pub struct ApiConfig {
    pub bind: SocketAddr,
    /// When set, every route but `/v1/health` needs `Authorization: Bearer <token>`.
    pub auth_token: Option<String>,
    /// Allowed browser origins; `*` allows any. Empty disables CORS headers.
    pub cors_origins: Vec<String>,
    /// How often to check the source for changes; `None` disables polling.
    pub poll_interval: Option<Duration>,
}

impl Default for ApiConfig {
    fn default() -> Self {
        Self {
            bind: SocketAddr::from(([127, 0, 0, 1], 8080)),
            auth_token: None,
            cors_origins: Vec::new(),
            poll_interval: Some(Duration::from_secs(60)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Health {
    pub status: String,
    pub as_of: DateTime<Utc>,
    pub events: usize,
    pub identities: usize,
    /// Last reload failure; the previous dataset keeps being served.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reload_error: Option<String>,
}

struct Loaded {
    dataset: Arc<Dataset>,
    version: String,
    error: Option<String>,
}

#[derive(Clone)]
pub struct AppState {
    source: Arc<dyn DatasetSource>,
    loaded: Arc<RwLock<Loaded>>,
    reload_lock: Arc<tokio::sync::Mutex<()>>,
    token: Option<Arc<str>>,
}

impl AppState {
    /// Loads the source once; fails if that first load fails.
    pub fn new(source: Arc<dyn DatasetSource>, auth_token: Option<String>) -> Result<Self, LoadError> {
        let version = source.version()?;
        let dataset = Arc::new(source.load()?);
        Ok(Self {
            source,
            loaded: Arc::new(RwLock::new(Loaded {
                dataset,
                version,
                error: None,
            })),
            reload_lock: Arc::new(tokio::sync::Mutex::new(())),
            token: auth_token.filter(|t| !t.is_empty()).map(Arc::from),
        })
    }

    pub fn dataset(&self) -> Arc<Dataset> {
        Arc::clone(&self.loaded.read().expect("state lock poisoned").dataset)
    }

    pub fn health(&self) -> Health {
        let loaded = self.loaded.read().expect("state lock poisoned");
        Health {
            status: "ok".to_string(),
            as_of: loaded.dataset.as_of(),
            events: loaded.dataset.snapshot().len(),
            identities: loaded.dataset.registry().len(),
            reload_error: loaded.error.clone(),
        }
    }

    /// Reloads when the source version changed, or always with `force`.
    /// A failed reload keeps the current dataset and is reported by
    /// [`AppState::health`].
    pub async fn reload(&self, force: bool) -> Result<bool, LoadError> {
        let _guard = self.reload_lock.lock().await;
        let source = Arc::clone(&self.source);
        let current = self.loaded.read().expect("state lock poisoned").version.clone();
        let result = tokio::task::spawn_blocking(move || -> Result<Option<(String, Dataset)>, LoadError> {
            let version = source.version()?;
            if !force && version == current {
                return Ok(None);
            }
            Ok(Some((version, source.load()?)))
        })
        .await
        .map_err(|e| LoadError(format!("reload task failed: {e}")))?;
        let mut loaded = self.loaded.write().expect("state lock poisoned");
        match result {
            Ok(None) => Ok(false),
            Ok(Some((version, dataset))) => {
                *loaded = Loaded {
                    dataset: Arc::new(dataset),
                    version,
                    error: None,
                };
                Ok(true)
            }
            Err(e) => {
                loaded.error = Some(e.0.clone());
                Err(e)
            }
        }
    }
}

type Params = Result<Query<Vec<(String, String)>>, QueryRejection>;

fn params(raw: Params) -> Result<Vec<(String, String)>, ApiError> {
    raw.map(|Query(p)| p)
        .map_err(|e| ApiError::bad_request("invalid_query", e.body_text()))
}

fn json(bytes: Vec<u8>) -> Response {
    ([(header::CONTENT_TYPE, "application/json")], bytes).into_response()
}

async fn report_handler(state: AppState, report: Report, raw: Params) -> Result<Response, ApiError> {
    let req = parse_request(&params(raw)?, report.extra_params())?;
    let ds = state.dataset();
    let body = tokio::task::spawn_blocking(move || report::run(&ds, report, &req).to_json())
        .await
        .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", e.to_string()))?;
    Ok(json(body))
}

async fn identity(State(state): State<AppState>, Path(id): Path<String>, raw: Params) -> Result<Response, ApiError> {
    let req = parse_request(&params(raw)?, &["as_of"])?;
    if req.filter.lens != tapestry_core::Lens::None {
        return Err(ApiError::bad_request("unknown_parameter", "lens and group do not apply to identities"));
    }
    let ds = state.dataset();
    let profile = contributor_profile(&ds, &IdentityId::from(id.as_str()), req.as_of, &req.filter)
        .ok_or_else(|| ApiError::not_found(format!("no identity {id:?}")))?;
    Ok(json(report::json_bytes(&profile)))
}

async fn health(State(state): State<AppState>) -> Response {
    json(report::json_bytes(&state.health()))
}

async fn refresh(State(state): State<AppState>) -> Result<Response, ApiError> {
    state
        .reload(true)
        .await
        .map_err(|e| ApiError::new(StatusCode::SERVICE_UNAVAILABLE, "reload_failed", e.0))?;
    Ok(json(report::json_bytes(&state.health())))
}

async fn not_found() -> ApiError {
    ApiError::not_found("no such route")
}

async fn require_token(State(state): State<AppState>, request: Request, next: Next) -> Response {
    let Some(token) = &state.token else {
        return next.run(request).await;
    };
    if request.method() == Method::OPTIONS || request.uri().path() == "/v1/health" {
        return next.run(request).await;
    }
    let presented = request
        .headers()
        .get(header::AUTHORIZATION)
        .and_then(|v| v.to_str().ok())
        .and_then(|v| v.strip_prefix("Bearer "));
    if presented.is_some_and(|p| p.as_bytes() == token.as_bytes()) {
        next.run(request).await
    } else {
        ApiError::unauthorized().into_response()
    }
}

fn cors(origins: &[String]) -> Option<CorsLayer> {
    if origins.is_empty() {
        return None;
    }
    let allow = if origins.iter().any(|o| o == "*") {
        AllowOrigin::any()
    } else {
        AllowOrigin::list(origins.iter().filter_map(|o| HeaderValue::from_str(o).ok()))
    };
    Some(
        CorsLayer::new()
            .allow_origin(allow)
            .allow_methods([Method::GET, Method::POST])
            .allow_headers([header::AUTHORIZATION, header::CONTENT_TYPE]),
    )
}

/// The complete `/v1` router.
pub fn router(state: AppState, cors_origins: &[String]) -> Router {
    let mut app = Router::new();
    for report in Report::ALL {
        app = app.route(
            route_of(report),
            get(move |State(state): State<AppState>, raw: Params| report_handler(state, report, raw)),
        );
    }
    let mut app = app
        .route("/v1/identities/{id}", get(identity))
        .route("/v1/health", get(health))
        .route("/v1/refresh", post(refresh))
        .fallback(not_found)
        .layer(middleware::from_fn_with_state(state.clone(), require_token))
        .with_state(state);
    if let Some(layer) = cors(cors_origins) {
        app = app.layer(layer);
    }
    app
}

#[derive(Debug, thiserror::Error)]
pub enum ServeError {
    #[error("cannot bind {addr}: {source}")]
    Bind { addr: SocketAddr, source: std::io::Error },
    #[error("cannot load dataset: {0}")]
    Load(#[from] LoadError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// A bound, loaded server that has not started accepting yet.
pub struct Server {
    listener: tokio::net::TcpListener,
    state: AppState,
    config: ApiConfig,
}

impl Server {
    /// Loads the dataset, then binds. Port 0 picks a free port.
    pub async fn bind(config: ApiConfig, source: Arc<dyn DatasetSource>) -> Result<Self, ServeError> {
        let token = config.auth_token.clone();
        let state = tokio::task::spawn_blocking(move || AppState::new(source, token))
            .await
            .map_err(|e| LoadError(e.to_string()))??;
        let listener = tokio::net::TcpListener::bind(config.bind)
            .await
            .map_err(|source| ServeError::Bind {
                addr: config.bind,
                source,
            })?;
        Ok(Self {
            listener,
            state,
            config,
        })
    }

    pub fn local_addr(&self) -> std::io::Result<SocketAddr> {
        self.listener.local_addr()
    }

    pub fn state(&self) -> &AppState {
        &self.state
    }

    /// Serves until `shutdown` resolves, then drains in-flight requests.
    pub async fn run(self, shutdown: impl Future<Output = ()> + Send + 'static) -> Result<(), ServeError> {
        let poller = self.config.poll_interval.map(|every| {
            let state = self.state.clone();
            tokio::spawn(async move {
                let mut ticks = tokio::time::interval(every);
                ticks.set_missed_tick_behavior(tokio::time::MissedTickBehavior::Delay);
                ticks.tick().await;
                loop {
                    ticks.tick().await;
                    // Failures are kept in the state and shown by /v1/health.
                    let _ = state.reload(false).await;
                }
            })
        });
        let app = router(self.state, &self.config.cors_origins);
        let result = axum::serve(self.listener, app).with_graceful_shutdown(shutdown).await;
        if let Some(task) = poller {
            task.abort();
        }
        result.map_err(ServeError::from)
    }
}
