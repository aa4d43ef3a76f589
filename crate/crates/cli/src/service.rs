//! Read-only HTTP API over a registry of trained models.
//!
//! Handlers take a snapshot of the registry per request; a reload builds a
//! whole new registry and swaps it in, so in-flight requests finish on the
//! models they started with.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::sync::{Arc, RwLock};

use axum::body::Bytes;
use axum::extract::{DefaultBodyLimit, Path, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use ebm_aml::ebm::EbmModel;
use ebm_aml::explain::term_curve;
use ebm_aml::recommend::recommend;
use log::{info, warn};
use serde::Serialize;
use serde_json::json;
use thiserror::Error;

use crate::config::ServiceConfig;
use crate::patient::{build_record, FieldError, RawValue, Warning};
use crate::payload::{self, RecommendationPayload, TermPayload};

#[derive(Debug)]
pub struct LoadedModel {
    pub id: String,
    pub version_hash: String,
    pub model: EbmModel,
    pub path: Option<PathBuf>,
}

#[derive(Debug)]
pub struct Registry {
    pub default_model: String,
    models: BTreeMap<String, Arc<LoadedModel>>,
}

impl Registry {
    pub fn load(config: &ServiceConfig) -> ebm_aml::Result<Self> {
        let mut models = BTreeMap::new();
        for (id, path) in &config.models {
            let model = EbmModel::load(path)?;
            let version_hash = model.version_hash();
            info!("loaded model `{id}` from {} ({})", path.display(), &version_hash[..12]);
            models.insert(id.clone(), Arc::new(LoadedModel { id: id.clone(), version_hash, model, path: Some(path.clone()) }));
        }
        Ok(Self { default_model: config.default_model.clone(), models })
    }

    /// Registry over in-memory models; the first id is the default.
    pub fn from_models(models: Vec<(String, EbmModel)>) -> Self {
        let default_model = models.first().map(|(id, _)| id.clone()).unwrap_or_default();
        let models = models
            .into_iter()
            .map(|(id, model)| {
                let version_hash = model.version_hash();
                (id.clone(), Arc::new(LoadedModel { id, version_hash, model, path: None }))
            })
            .collect();
        Self { default_model, models }
    }

    pub fn get(&self, id: &str) -> Option<Arc<LoadedModel>> {
        self.models.get(id).cloned()
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.models.keys().map(String::as_str)
    }
}

pub struct AppState {
    registry: RwLock<Arc<Registry>>,
}

impl AppState {
    pub fn new(registry: Registry) -> Arc<Self> {
        Arc::new(Self { registry: RwLock::new(Arc::new(registry)) })
    }

    pub fn registry(&self) -> Arc<Registry> {
        self.registry.read().unwrap_or_else(|e| e.into_inner()).clone()
    }

    pub fn swap(&self, registry: Registry) {
        *self.registry.write().unwrap_or_else(|e| e.into_inner()) = Arc::new(registry);
    }
}

#[derive(Debug, Error)]
pub enum ApiError {
    #[error("unknown model `{0}`")]
    UnknownModel(String),
    #[error("model `{model_id}` has no feature `{feature}`")]
    UnknownFeature { model_id: String, version_hash: String, feature: String },
    #[error("invalid payload")]
    InvalidPayload { model_id: String, version_hash: String, fields: Vec<FieldError> },
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let error = self.to_string();
        let (status, body) = match self {
            ApiError::UnknownModel(model_id) => (StatusCode::NOT_FOUND, json!({ "error": error, "model_id": model_id })),
            ApiError::UnknownFeature { model_id, version_hash, feature } => (
                StatusCode::NOT_FOUND,
                json!({ "error": error, "model_id": model_id, "version_hash": version_hash, "feature": feature }),
            ),
            ApiError::InvalidPayload { model_id, version_hash, fields } => (
                StatusCode::UNPROCESSABLE_ENTITY,
                json!({ "error": error, "model_id": model_id, "version_hash": version_hash, "fields": fields }),
            ),
        };
        (status, Json(body)).into_response()
    }
}

type Shared = State<Arc<AppState>>;

pub fn router(state: Arc<AppState>, max_body_bytes: usize) -> Router {
    Router::new()
        .route("/health", get(health))
        .route("/models", get(models))
        .route("/models/{id}/importance", get(importance))
        .route("/models/{id}/term/{feature}", get(term))
        .route("/models/{id}/predict", post(predict))
        .route("/models/{id}/recommend", post(recommend_therapy))
        .layer(DefaultBodyLimit::max(max_body_bytes))
        .with_state(state)
}

fn lookup(state: &AppState, id: &str) -> Result<Arc<LoadedModel>, ApiError> {
    state.registry().get(id).ok_or_else(|| ApiError::UnknownModel(id.to_string()))
}

#[derive(Serialize)]
struct ModelSummary<'a> {
    model_id: &'a str,
    version_hash: &'a str,
    features: Vec<FeatureSummary<'a>>,
    training_rows: usize,
}

#[derive(Serialize)]
struct FeatureSummary<'a> {
    name: &'a str,
    kind: &'a str,
}

async fn health(State(state): Shared) -> Json<serde_json::Value> {
    let reg = state.registry();
    let models: Vec<_> = reg
        .models
        .values()
        .map(|m| json!({ "model_id": m.id, "version_hash": m.version_hash }))
        .collect();
    Json(json!({ "status": "ok", "default_model": reg.default_model, "models": models }))
}

async fn models(State(state): Shared) -> Json<serde_json::Value> {
    let reg = state.registry();
    let models: Vec<ModelSummary> = reg
        .models
        .values()
        .map(|m| ModelSummary {
            model_id: &m.id,
            version_hash: &m.version_hash,
            features: m.model.schema.iter().map(|s| FeatureSummary { name: &s.name, kind: s.kind.as_str() }).collect(),
            training_rows: m.model.meta.training_rows,
        })
        .collect();
    Json(json!({ "default_model": reg.default_model, "models": models }))
}

async fn importance(State(state): Shared, Path(id): Path<String>) -> Result<Json<payload::ImportancePayload>, ApiError> {
    let m = lookup(&state, &id)?;
    Ok(Json(payload::importance(&m.id, &m.version_hash, &m.model)))
}

async fn term(State(state): Shared, Path((id, feature)): Path<(String, String)>) -> Result<Json<TermPayload>, ApiError> {
    let m = lookup(&state, &id)?;
    let points = term_curve(&m.model, &feature).map_err(|_| ApiError::UnknownFeature {
        model_id: m.id.clone(),
        version_hash: m.version_hash.clone(),
        feature: feature.clone(),
    })?;
    let kind = m.model.schema[m.model.feature_index(&feature).unwrap_or_default()].kind.as_str().to_string();
    Ok(Json(TermPayload { model_id: m.id.clone(), version_hash: m.version_hash.clone(), feature, kind, points }))
}

/// Parsed request: `{"sample_id": "...", "features": {"name": value, ...}}`.
struct PatientRequest {
    sample_id: Option<String>,
    record: ebm_aml::data::Record,
    warnings: Vec<Warning>,
}

fn parse_request(m: &LoadedModel, body: &[u8]) -> Result<PatientRequest, ApiError> {
    let invalid = |fields: Vec<FieldError>| ApiError::InvalidPayload {
        model_id: m.id.clone(),
        version_hash: m.version_hash.clone(),
        fields,
    };
    let field = |field: &str, message: String| vec![FieldError { field: field.into(), message }];
    let value: serde_json::Value =
        serde_json::from_slice(body).map_err(|e| invalid(field("body", format!("not valid JSON: {e}"))))?;
    let serde_json::Value::Object(obj) = value else {
        return Err(invalid(field("body", "expected a JSON object".into())));
    };
    let mut sample_id = None;
    let mut features = None;
    for (k, v) in obj {
        match (k.as_str(), v) {
            ("sample_id", serde_json::Value::String(s)) => sample_id = Some(s),
            ("sample_id", serde_json::Value::Null) => {}
            ("sample_id", _) => return Err(invalid(field("sample_id", "expected a string".into()))),
            ("features", serde_json::Value::Object(f)) => features = Some(f),
            ("features", _) => return Err(invalid(field("features", "expected an object of feature values".into()))),
            (other, _) => return Err(invalid(field(other, "unknown field; expected `features` and optional `sample_id`".into()))),
        }
    }
    let features = features.ok_or_else(|| invalid(field("features", "required".into())))?;
    let mut values = Vec::with_capacity(features.len());
    let mut errors = Vec::new();
    for (name, v) in features {
        match RawValue::from_json(&v) {
            Some(raw) => values.push((name, raw)),
            None => errors.push(FieldError { field: name, message: "expected a number, string, boolean or null".into() }),
        }
    }
    let (record, warnings) = match build_record(&m.model, values) {
        Ok(ok) if errors.is_empty() => ok,
        Ok(_) => return Err(invalid(errors)),
        Err(mut e) => {
            errors.append(&mut e);
            return Err(invalid(errors));
        }
    };
    Ok(PatientRequest { sample_id, record, warnings })
}

async fn predict(State(state): Shared, Path(id): Path<String>, body: Bytes) -> Result<Json<payload::PredictionPayload>, ApiError> {
    let m = lookup(&state, &id)?;
    let req = parse_request(&m, &body)?;
    Ok(Json(payload::prediction(&m.id, &m.version_hash, &m.model, req.sample_id, &req.record, req.warnings)))
}

async fn recommend_therapy(State(state): Shared, Path(id): Path<String>, body: Bytes) -> Result<Json<RecommendationPayload>, ApiError> {
    let m = lookup(&state, &id)?;
    let req = parse_request(&m, &body)?;
    let recommendation = recommend(&m.model, &req.record).map_err(|e| ApiError::InvalidPayload {
        model_id: m.id.clone(),
        version_hash: m.version_hash.clone(),
        fields: vec![FieldError { field: "model".into(), message: e.to_string() }],
    })?;
    // the incoming treatment is overwritten, so its warning does not apply
    let warnings = req.warnings.into_iter().filter(|w| w.field != ebm_aml::data::TREATMENT_COLUMN).collect();
    Ok(Json(RecommendationPayload {
        model_id: m.id.clone(),
        version_hash: m.version_hash.clone(),
        sample_id: req.sample_id,
        recommendation,
        warnings,
    }))
}

/// Re-reads the config file and swaps the registry; the old one stays in
/// place if anything fails to load.
pub fn reload(state: &AppState, config: &ServiceConfig) {
    let Some(path) = &config.source else {
        warn!("reload requested but the service has no config file");
        return;
    };
    match ServiceConfig::read(path).map_err(|e| e.to_string()).and_then(|c| Registry::load(&c).map_err(|e| e.to_string())) {
        Ok(reg) => {
            let ids: Vec<&str> = reg.ids().collect();
            info!("reloaded registry: {}", ids.join(", "));
            state.swap(reg);
        }
        Err(e) => warn!("reload failed, keeping current models: {e}"),
    }
}

pub async fn serve(config: ServiceConfig) -> anyhow::Result<()> {
    let state = AppState::new(Registry::load(&config)?);
    let app = router(state.clone(), config.max_body_bytes);
    let listener = tokio::net::TcpListener::bind(&config.bind)
        .await
        .map_err(|e| anyhow::anyhow!("cannot bind {}: {e}", config.bind))?;
    info!("listening on {}", listener.local_addr()?);

    #[cfg(unix)]
    {
        let state = state.clone();
        let config = config.clone();
        let mut hup = tokio::signal::unix::signal(tokio::signal::unix::SignalKind::hangup())?;
        tokio::spawn(async move {
            while hup.recv().await.is_some() {
                let (state, config) = (state.clone(), config.clone());
                let _ = tokio::task::spawn_blocking(move || reload(&state, &config)).await;
            }
        });
    }

    axum::serve(listener, app).with_graceful_shutdown(shutdown_signal()).await?;
    info!("shut down");
    Ok(())
}

async fn shutdown_signal() {
    let ctrl_c = async {
        let _ = tokio::signal::ctrl_c().await;
    };
    #[cfg(unix)]
    let term = async {
        match tokio::signal::unix::signal(tokio::signal::unix::SignalKind::terminate()) {
            Ok(mut s) => {
                s.recv().await;
            }
            Err(_) => std::future::pending::<()>().await,
        }
    };
    #[cfg(not(unix))]
    let term = std::future::pending::<()>();
    tokio::select! {
        _ = ctrl_c => {}
        _ = term => {}
    }
}
