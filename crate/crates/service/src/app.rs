use std::io::Cursor;
use std::path::PathBuf;
use std::sync::Arc;
use std::time::{Duration, Instant, UNIX_EPOCH};

use axum::extract::multipart::MultipartError;
use axum::extract::rejection::JsonRejection;
use axum::extract::{DefaultBodyLimit, Multipart, Path, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use clore_core::clicks::Polarity;
use clore_core::pipeline::{Phase, PipelineError, Session, SessionConfig, StepOutput};
use clore_core::predictor::{Predictor, SharedPredictor};
use clore_core::raster::{BinaryMask, Dims, Rect, RgbImage};
use serde::{Deserialize, Serialize};
use serde_json::Value;
use tower_http::services::ServeDir;

use crate::rle::{rle_encode, MaskRle};
use crate::store::SessionStore;

#[derive(Debug, Clone)]
pub struct ServiceConfig {
    pub session_ttl: Duration,
    /// Largest accepted image side.
    pub max_side: usize,
    pub max_upload_bytes: usize,
    /// Directory served under `/ui/`.
    pub ui_dir: Option<PathBuf>,
    /// Base config that per-session overrides are applied to.
    pub defaults: SessionConfig,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        Self {
            session_ttl: Duration::from_secs(30 * 60),
            max_side: 4096,
            max_upload_bytes: 128 << 20,
            ui_dir: None,
            defaults: SessionConfig::default(),
        }
    }
}

#[derive(Clone)]
pub struct AppState {
    pub store: Arc<SessionStore>,
    pub predictor: SharedPredictor,
    pub config: Arc<ServiceConfig>,
}

impl AppState {
    pub fn new(predictor: SharedPredictor, config: ServiceConfig) -> Self {
        Self {
            store: Arc::new(SessionStore::new(config.session_ttl)),
            predictor,
            config: Arc::new(config),
        }
    }
}

#[derive(Debug)]
pub enum ApiError {
    BadRequest(String),
    NotFound(String),
    Conflict(String),
    PayloadTooLarge(String),
    BadGateway(String),
    Internal(String),
}

impl ApiError {
    fn parts(&self) -> (StatusCode, &str) {
        match self {
            ApiError::BadRequest(m) => (StatusCode::BAD_REQUEST, m),
            ApiError::NotFound(m) => (StatusCode::NOT_FOUND, m),
            ApiError::Conflict(m) => (StatusCode::CONFLICT, m),
            ApiError::PayloadTooLarge(m) => (StatusCode::PAYLOAD_TOO_LARGE, m),
            ApiError::BadGateway(m) => (StatusCode::BAD_GATEWAY, m),
            ApiError::Internal(m) => (StatusCode::INTERNAL_SERVER_ERROR, m),
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let (status, message) = self.parts();
        if status.is_server_error() {
            log::error!("{status}: {message}");
        }
        (status, Json(serde_json::json!({ "error": message }))).into_response()
    }
}

impl From<PipelineError> for ApiError {
    fn from(e: PipelineError) -> Self {
        let msg = e.to_string();
        match e {
            PipelineError::Predictor(_) => ApiError::BadGateway(msg),
            PipelineError::ClickOutOfBounds { .. } | PipelineError::InvalidConfig(_) => ApiError::BadRequest(msg),
            PipelineError::NothingToUndo | PipelineError::ClickCap(_) => ApiError::Conflict(msg),
            PipelineError::Raster(_) => ApiError::Internal(msg),
        }
    }
}

impl From<MultipartError> for ApiError {
    fn from(e: MultipartError) -> Self {
        if e.status() == StatusCode::PAYLOAD_TOO_LARGE {
            ApiError::PayloadTooLarge(e.body_text())
        } else {
            ApiError::BadRequest(e.body_text())
        }
    }
}

impl From<JsonRejection> for ApiError {
    fn from(e: JsonRejection) -> Self {
        ApiError::BadRequest(e.body_text())
    }
}

fn unknown(id: &str) -> ApiError {
    ApiError::NotFound(format!("no session {id}"))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CreateResponse {
    pub id: String,
    pub config: SessionConfig,
    pub height: usize,
    pub width: usize,
    /// Seconds since the Unix epoch.
    pub created_at: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClickRequest {
    pub y: i64,
    pub x: i64,
    pub positive: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StepResponse {
    pub mask: MaskRle,
    pub phase: Phase,
    pub local_patch: Option<Rect>,
    pub elapsed_ms: u64,
    pub click_count: usize,
}

impl From<&StepOutput> for StepResponse {
    fn from(out: &StepOutput) -> Self {
        Self {
            mask: rle_encode(&out.mask),
            phase: out.phase,
            local_patch: out.local_patch,
            elapsed_ms: (out.elapsed.as_secs_f64() * 1000.0).round() as u64,
            click_count: out.click_count,
        }
    }
}

pub fn router(state: AppState) -> Router {
    let ui = match &state.config.ui_dir {
        Some(dir) => Router::new().nest_service("/ui", ServeDir::new(dir).append_index_html_on_directories(true)),
        None => Router::new().route("/ui", get(no_ui)).route("/ui/{*path}", get(no_ui)),
    };
    let limit = state.config.max_upload_bytes;
    Router::new()
        .route("/healthz", get(healthz))
        .route("/sessions", post(create_session))
        .route("/sessions/{id}", axum::routing::delete(delete_session))
        .route("/sessions/{id}/clicks", post(post_click))
        .route("/sessions/{id}/undo", post(post_undo))
        .route("/sessions/{id}/mask.png", get(get_mask))
        .merge(ui)
        .layer(DefaultBodyLimit::max(limit))
        .with_state(state)
}

/// Periodically drop idle sessions.
pub fn spawn_sweeper(store: Arc<SessionStore>) -> tokio::task::JoinHandle<()> {
    let period = (store.ttl() / 4).clamp(Duration::from_secs(1), Duration::from_secs(60));
    tokio::spawn(async move {
        let mut tick = tokio::time::interval(period);
        loop {
            tick.tick().await;
            let n = store.evict_expired(Instant::now());
            if n > 0 {
                log::info!("evicted {n} idle sessions");
            }
        }
    })
}

async fn no_ui() -> ApiError {
    ApiError::NotFound("ui assets are not configured on this server".into())
}

async fn healthz(State(state): State<AppState>) -> Json<Value> {
    Json(serde_json::json!({
        "status": "ok",
        "sessions": state.store.len(),
        "predictor": state.predictor.name(),
    }))
}

/// Apply JSON overrides on top of `base`, rejecting unknown keys.
pub fn merge_config(base: &SessionConfig, overrides: &str) -> Result<SessionConfig, ApiError> {
    let bad = |e: serde_json::Error| ApiError::BadRequest(format!("invalid config: {e}"));
    let patch: Value = serde_json::from_str(overrides).map_err(bad)?;
    let Value::Object(patch) = patch else {
        return Err(ApiError::BadRequest("config must be a JSON object".into()));
    };
    let mut merged = serde_json::to_value(base).expect("config serializes");
    merged
        .as_object_mut()
        .expect("config is an object")
        .extend(patch);
    serde_json::from_value(merged).map_err(bad)
}

fn decode_image(bytes: &[u8], max_side: usize) -> Result<RgbImage, ApiError> {
    let reader = image::ImageReader::new(Cursor::new(bytes))
        .with_guessed_format()
        .map_err(|e| ApiError::BadRequest(format!("unreadable image: {e}")))?;
    let (w, h) = reader
        .into_dimensions()
        .map_err(|e| ApiError::BadRequest(format!("undecodable image: {e}")))?;
    if w as usize > max_side || h as usize > max_side {
        return Err(ApiError::PayloadTooLarge(format!(
            "image is {w}x{h}, limit is {max_side}x{max_side}"
        )));
    }
    let decoded = image::load_from_memory(bytes)
        .map_err(|e| ApiError::BadRequest(format!("undecodable image: {e}")))?
        .to_rgb8();
    let dims = Dims::new(h as usize, w as usize);
    if dims.is_empty() {
        return Err(ApiError::BadRequest("empty image".into()));
    }
    RgbImage::from_rgb8(dims, decoded.as_raw()).map_err(|e| ApiError::Internal(e.to_string()))
}

async fn create_session(
    State(state): State<AppState>,
    mut multipart: Multipart,
) -> Result<(StatusCode, Json<CreateResponse>), ApiError> {
    let mut image_bytes = None;
    let mut overrides = None;
    while let Some(field) = multipart.next_field().await? {
        match field.name() {
            Some("image") => image_bytes = Some(field.bytes().await?),
            Some("config") => overrides = Some(field.text().await?),
            Some(other) => return Err(ApiError::BadRequest(format!("unexpected field {other:?}"))),
            None => return Err(ApiError::BadRequest("unnamed multipart field".into())),
        }
    }
    let bytes = image_bytes.ok_or_else(|| ApiError::BadRequest("missing image field".into()))?;
    let config = match overrides.as_deref().map(str::trim) {
        Some(text) if !text.is_empty() => merge_config(&state.config.defaults, text)?,
        _ => state.config.defaults.clone(),
    };
    config.validate()?;

    let max_side = state.config.max_side;
    let image = tokio::task::spawn_blocking(move || decode_image(&bytes, max_side))
        .await
        .map_err(|e| ApiError::Internal(e.to_string()))??;
    let dims = image.dims();
    let session = Session::new(image, state.predictor.clone(), config)?;
    let entry = state.store.insert(session);
    log::info!("session {} created for a {dims} image", entry.id);
    let created_at = entry
        .created_at
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    Ok((
        StatusCode::CREATED,
        Json(CreateResponse {
            id: entry.id.clone(),
            config: entry.config.clone(),
            height: dims.height,
            width: dims.width,
            created_at,
        }),
    ))
}

async fn post_click(
    State(state): State<AppState>,
    Path(id): Path<String>,
    body: Result<Json<ClickRequest>, JsonRejection>,
) -> Result<Json<StepResponse>, ApiError> {
    let Json(req) = body?;
    let entry = state.store.get(&id).ok_or_else(|| unknown(&id))?;
    let guard = entry.session.clone().lock_owned().await;
    let polarity = Polarity::from_foreground(req.positive);
    let out = tokio::task::spawn_blocking(move || {
        let mut session = guard;
        session.add_click_checked(req.y, req.x, polarity)
    })
    .await
    .map_err(|e| ApiError::Internal(e.to_string()))?;
    let out = match out {
        Ok(out) => out,
        Err(e) => {
            log::warn!("session {id}: click ({}, {}) rejected: {e}", req.y, req.x);
            return Err(e.into());
        }
    };
    let resp = StepResponse::from(&out);
    log::info!(
        "session {id}: click {} at ({}, {}) {:?} -> {:?} in {} ms",
        out.click_count,
        req.y,
        req.x,
        polarity,
        out.phase,
        resp.elapsed_ms
    );
    Ok(Json(resp))
}

async fn post_undo(State(state): State<AppState>, Path(id): Path<String>) -> Result<Json<StepResponse>, ApiError> {
    let entry = state.store.get(&id).ok_or_else(|| unknown(&id))?;
    let mut session = entry.session.lock().await;
    let out = session.undo()?;
    log::info!("session {id}: undo to {} clicks", out.click_count);
    Ok(Json(StepResponse::from(&out)))
}

/// 1-bit grayscale PNG, foreground white.
pub fn mask_png(mask: &BinaryMask) -> Result<Vec<u8>, png::EncodingError> {
    let (h, w) = (mask.height(), mask.width());
    let stride = w.div_ceil(8);
    let mut packed = vec![0u8; stride * h];
    for (y, row) in mask.as_slice().chunks(w).enumerate() {
        for (x, &v) in row.iter().enumerate() {
            if v {
                packed[y * stride + x / 8] |= 0x80 >> (x % 8);
            }
        }
    }
    let mut out = Vec::new();
    let mut enc = png::Encoder::new(&mut out, w as u32, h as u32);
    enc.set_color(png::ColorType::Grayscale);
    enc.set_depth(png::BitDepth::One);
    let mut writer = enc.write_header()?;
    writer.write_image_data(&packed)?;
    writer.finish()?;
    Ok(out)
}

async fn get_mask(State(state): State<AppState>, Path(id): Path<String>) -> Result<Response, ApiError> {
    let entry = state.store.get(&id).ok_or_else(|| unknown(&id))?;
    let mask = entry.session.lock().await.mask().clone();
    let bytes = mask_png(&mask).map_err(|e| ApiError::Internal(e.to_string()))?;
    Ok(([(header::CONTENT_TYPE, "image/png")], bytes).into_response())
}

async fn delete_session(State(state): State<AppState>, Path(id): Path<String>) -> Result<StatusCode, ApiError> {
    if state.store.remove(&id) {
        log::info!("session {id} deleted");
        Ok(StatusCode::NO_CONTENT)
    } else {
        Err(unknown(&id))
    }
}
