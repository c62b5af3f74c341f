use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;

use axum::body::{to_bytes, Body};
use axum::http::{Request, StatusCode};
use axum::Router;
use clore_core::predictor::{Predictor, PredictorError, PredictorInput, ReferenceClickPredictor, SharedPredictor};
use clore_core::raster::{BinaryMask, Dims, ProbMask};
use clore_service::app::{mask_png, router, AppState, ServiceConfig, StepResponse};
use clore_service::rle::rle_decode;
use serde_json::Value;
use tower::ServiceExt;

const BOUNDARY: &str = "clore-test-boundary";

fn png_bytes(h: u32, w: u32) -> Vec<u8> {
    let img = image::RgbImage::from_fn(w, h, |x, y| {
        let inside = (x as i64 - 20).pow(2) + (y as i64 - 24).pow(2) < 100;
        if inside {
            image::Rgb([120, 60, 150])
        } else {
            image::Rgb([235, 200, 215])
        }
    });
    let mut out = Vec::new();
    img.write_to(&mut std::io::Cursor::new(&mut out), image::ImageFormat::Png)
        .unwrap();
    out
}

fn multipart(image: Option<&[u8]>, config: Option<&str>) -> Request<Body> {
    let mut body = Vec::new();
    if let Some(bytes) = image {
        body.extend_from_slice(
            format!(
                "--{BOUNDARY}\r\nContent-Disposition: form-data; name=\"image\"; filename=\"a.png\"\r\nContent-Type: image/png\r\n\r\n"
            )
            .as_bytes(),
        );
        body.extend_from_slice(bytes);
        body.extend_from_slice(b"\r\n");
    }
    if let Some(cfg) = config {
        body.extend_from_slice(
            format!("--{BOUNDARY}\r\nContent-Disposition: form-data; name=\"config\"\r\n\r\n{cfg}\r\n").as_bytes(),
        );
    }
    body.extend_from_slice(format!("--{BOUNDARY}--\r\n").as_bytes());
    Request::post("/sessions")
        .header("content-type", format!("multipart/form-data; boundary={BOUNDARY}"))
        .body(Body::from(body))
        .unwrap()
}

fn json_post(uri: &str, body: Value) -> Request<Body> {
    Request::post(uri)
        .header("content-type", "application/json")
        .body(Body::from(body.to_string()))
        .unwrap()
}

async fn send(app: &Router, req: Request<Body>) -> (StatusCode, Vec<u8>) {
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    let bytes = to_bytes(resp.into_body(), usize::MAX).await.unwrap();
    (status, bytes.to_vec())
}

async fn send_json(app: &Router, req: Request<Body>) -> (StatusCode, Value) {
    let (status, bytes) = send(app, req).await;
    let v = if bytes.is_empty() {
        Value::Null
    } else {
        serde_json::from_slice(&bytes).unwrap()
    };
    (status, v)
}

fn reference_app(config: ServiceConfig) -> (Router, AppState) {
    let state = AppState::new(SharedPredictor::new(ReferenceClickPredictor::default()), config);
    (router(state.clone()), state)
}

fn small_defaults() -> ServiceConfig {
    let mut cfg = ServiceConfig::default();
    cfg.defaults.working_dims = Dims::new(64, 64);
    cfg
}

async fn create(app: &Router, config: Option<&str>) -> String {
    let (status, v) = send_json(app, multipart(Some(&png_bytes(48, 40)), config)).await;
    assert_eq!(status, StatusCode::CREATED, "{v}");
    v["id"].as_str().unwrap().to_string()
}

async fn click(app: &Router, id: &str, y: i64, x: i64, positive: bool) -> (StatusCode, Value) {
    send_json(
        app,
        json_post(&format!("/sessions/{id}/clicks"), serde_json::json!({"y": y, "x": x, "positive": positive})),
    )
    .await
}

fn step(v: &Value) -> StepResponse {
    serde_json::from_value(v.clone()).unwrap()
}

#[tokio::test]
async fn health_reports_predictor() {
    let (app, _) = reference_app(small_defaults());
    let (status, v) = send_json(&app, Request::get("/healthz").body(Body::empty()).unwrap()).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(v["status"], "ok");
    assert_eq!(v["predictor"], "reference");
}

#[tokio::test]
async fn create_echoes_config() {
    let (app, state) = reference_app(small_defaults());
    let (status, v) = send_json(&app, multipart(Some(&png_bytes(48, 40)), None)).await;
    assert_eq!(status, StatusCode::CREATED);
    assert_eq!(v["config"]["n_trigger"], 5);
    assert_eq!((v["height"].as_u64(), v["width"].as_u64()), (Some(48), Some(40)));
    let (_, v) = send_json(&app, multipart(Some(&png_bytes(8, 8)), Some(r#"{"n_trigger": 7}"#))).await;
    assert_eq!(v["config"]["n_trigger"], 7);
    assert_eq!(v["config"]["working_dims"]["height"], 64);
    assert_ne!(v["id"], Value::Null);
    assert_eq!(state.store.len(), 2);
}

#[tokio::test]
async fn bad_uploads_create_nothing() {
    let mut cfg = small_defaults();
    cfg.max_side = 32;
    let (app, state) = reference_app(cfg);
    let cases: Vec<(Request<Body>, StatusCode)> = vec![
        (multipart(Some(b"definitely not a png"), None), StatusCode::BAD_REQUEST),
        (multipart(Some(&png_bytes(48, 40)), None), StatusCode::PAYLOAD_TOO_LARGE),
        (multipart(None, Some("{}")), StatusCode::BAD_REQUEST),
        (multipart(Some(&png_bytes(8, 8)), Some(r#"{"bogus": 1}"#)), StatusCode::BAD_REQUEST),
        (multipart(Some(&png_bytes(8, 8)), Some(r#"{"n_trigger": 0}"#)), StatusCode::BAD_REQUEST),
        (multipart(Some(&png_bytes(8, 8)), Some("[1]")), StatusCode::BAD_REQUEST),
    ];
    for (req, expected) in cases {
        let (status, v) = send_json(&app, req).await;
        assert_eq!(status, expected, "{v}");
        assert!(v["error"].is_string());
    }
    assert!(state.store.is_empty());
}

#[tokio::test]
async fn phases_follow_the_trigger() {
    let (app, _) = reference_app(small_defaults());
    let id = create(&app, Some(r#"{"n_trigger": 2}"#)).await;
    let script = [(24, 20, true), (30, 22, true), (5, 5, false), (20, 25, true)];
    for (k, &(y, x, pos)) in script.iter().enumerate() {
        let (status, v) = click(&app, &id, y, x, pos).await;
        assert_eq!(status, StatusCode::OK, "{v}");
        let s = step(&v);
        assert_eq!(s.click_count, k + 1);
        if k < 2 {
            assert_eq!(v["phase"], "coarse");
            assert!(v["local_patch"].is_null());
        } else {
            assert_eq!(v["phase"], "refined");
            for key in ["y1", "y2", "x1", "x2"] {
                assert!(v["local_patch"][key].is_u64());
            }
        }
        let mask = rle_decode(&s.mask).unwrap();
        assert_eq!(mask.dims(), Dims::new(48, 40));
        assert_eq!(mask.get(y as usize, x as usize), pos);
    }
}

#[tokio::test]
async fn out_of_bounds_clicks_are_rejected() {
    let (app, _) = reference_app(small_defaults());
    let id = create(&app, None).await;
    assert_eq!(click(&app, &id, -1, 0, true).await.0, StatusCode::BAD_REQUEST);
    assert_eq!(click(&app, &id, 48, 0, true).await.0, StatusCode::BAD_REQUEST);
    let (status, _) = send_json(&app, json_post(&format!("/sessions/{id}/clicks"), serde_json::json!({"y": 1}))).await;
    assert!(status.is_client_error());
    let (_, v) = click(&app, &id, 24, 20, true).await;
    assert_eq!(v["click_count"], 1);
}

#[tokio::test]
async fn undo_and_mask_png() {
    let (app, _) = reference_app(small_defaults());
    let id = create(&app, None).await;
    let (status, _) = send_json(&app, Request::post(format!("/sessions/{id}/undo")).body(Body::empty()).unwrap()).await;
    assert_eq!(status, StatusCode::CONFLICT);

    let (_, first) = click(&app, &id, 24, 20, true).await;
    let first_mask = rle_decode(&step(&first).mask).unwrap();
    assert!(!first_mask.is_blank());
    let (status, bytes) = send(&app, Request::get(format!("/sessions/{id}/mask.png")).body(Body::empty()).unwrap()).await;
    assert_eq!(status, StatusCode::OK);
    let png = image::load_from_memory(&bytes).unwrap().to_luma8();
    assert_eq!((png.height(), png.width()), (48, 40));
    let decoded = BinaryMask::from_vec(Dims::new(48, 40), png.as_raw().iter().map(|&v| v != 0).collect()).unwrap();
    assert_eq!(decoded, first_mask);

    let (status, v) = send_json(&app, Request::post(format!("/sessions/{id}/undo")).body(Body::empty()).unwrap()).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(v["click_count"], 0);
    assert!(rle_decode(&step(&v).mask).unwrap().is_blank());
    let (_, bytes) = send(&app, Request::get(format!("/sessions/{id}/mask.png")).body(Body::empty()).unwrap()).await;
    let png = image::load_from_memory(&bytes).unwrap().to_luma8();
    assert_eq!((png.height(), png.width()), (48, 40));
    assert!(png.as_raw().iter().all(|&v| v == 0));
}

#[tokio::test]
async fn deleted_and_unknown_sessions_are_missing() {
    let (app, state) = reference_app(small_defaults());
    let id = create(&app, None).await;
    let del = || Request::delete(format!("/sessions/{id}")).body(Body::empty()).unwrap();
    assert_eq!(send(&app, del()).await.0, StatusCode::NO_CONTENT);
    assert!(state.store.is_empty());
    assert_eq!(send(&app, del()).await.0, StatusCode::NOT_FOUND);
    assert_eq!(click(&app, &id, 1, 1, true).await.0, StatusCode::NOT_FOUND);
    let undo = Request::post(format!("/sessions/{id}/undo")).body(Body::empty()).unwrap();
    assert_eq!(send(&app, undo).await.0, StatusCode::NOT_FOUND);
    let mask = Request::get(format!("/sessions/{id}/mask.png")).body(Body::empty()).unwrap();
    assert_eq!(send(&app, mask).await.0, StatusCode::NOT_FOUND);
}

#[tokio::test]
async fn expired_sessions_are_missing() {
    let mut cfg = small_defaults();
    cfg.session_ttl = std::time::Duration::ZERO;
    let (app, _) = reference_app(cfg);
    let id = create(&app, None).await;
    tokio::time::sleep(std::time::Duration::from_millis(5)).await;
    assert_eq!(click(&app, &id, 1, 1, true).await.0, StatusCode::NOT_FOUND);
}

struct Flaky {
    fail: Arc<AtomicBool>,
    inner: ReferenceClickPredictor,
}

impl Predictor for Flaky {
    fn predict(&self, input: &PredictorInput) -> Result<ProbMask, PredictorError> {
        if self.fail.load(Ordering::SeqCst) {
            return Err(PredictorError::Backend("model offline".into()));
        }
        self.inner.predict(input)
    }
}

#[tokio::test]
async fn predictor_failure_is_bad_gateway_and_harmless() {
    let fail = Arc::new(AtomicBool::new(false));
    let predictor = SharedPredictor::new(Flaky {
        fail: fail.clone(),
        inner: ReferenceClickPredictor::default(),
    });
    let app = router(AppState::new(predictor, small_defaults()));
    let id = create(&app, None).await;
    let (_, before) = click(&app, &id, 24, 20, true).await;
    fail.store(true, Ordering::SeqCst);
    let (status, v) = click(&app, &id, 5, 5, false).await;
    assert_eq!(status, StatusCode::BAD_GATEWAY);
    assert!(v["error"].as_str().unwrap().contains("model offline"));
    fail.store(false, Ordering::SeqCst);
    let (_, undone) = send_json(&app, Request::post(format!("/sessions/{id}/undo")).body(Body::empty()).unwrap()).await;
    assert_eq!(undone["click_count"], 0);
    let (_, again) = click(&app, &id, 24, 20, true).await;
    assert_eq!(again["mask"], before["mask"]);
}

#[tokio::test(flavor = "multi_thread", worker_threads = 4)]
async fn concurrent_clicks_are_serialized() {
    let (app, _) = reference_app(small_defaults());
    let id = create(&app, None).await;
    for round in 0..4 {
        let (a, b) = tokio::join!(click(&app, &id, 24, 20, true), click(&app, &id, 10 + round, 30, false));
        assert_eq!((a.0, b.0), (StatusCode::OK, StatusCode::OK));
        let mut counts = [a.1["click_count"].as_u64().unwrap(), b.1["click_count"].as_u64().unwrap()];
        counts.sort_unstable();
        let base = 2 * round as u64;
        assert_eq!(counts, [base + 1, base + 2]);
    }
}

#[tokio::test]
async fn ui_assets_are_served() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("index.html"), "<!doctype html><title>clore</title>").unwrap();
    std::fs::write(dir.path().join("app.js"), "console.log(1)").unwrap();
    let mut cfg = small_defaults();
    cfg.ui_dir = Some(dir.path().to_path_buf());
    let (app, _) = reference_app(cfg);
    let (status, body) = send(&app, Request::get("/ui/").body(Body::empty()).unwrap()).await;
    assert_eq!(status, StatusCode::OK);
    assert!(String::from_utf8(body).unwrap().contains("<title>clore</title>"));
    let (status, body) = send(&app, Request::get("/ui/app.js").body(Body::empty()).unwrap()).await;
    assert_eq!((status, body.as_slice()), (StatusCode::OK, b"console.log(1)".as_slice()));
    assert_eq!(send(&app, Request::get("/ui/missing.js").body(Body::empty()).unwrap()).await.0, StatusCode::NOT_FOUND);

    let (bare, _) = reference_app(small_defaults());
    assert_eq!(send(&bare, Request::get("/ui/").body(Body::empty()).unwrap()).await.0, StatusCode::NOT_FOUND);
}

#[test]
fn png_is_one_bit() {
    let m = BinaryMask::from_fn(Dims::new(5, 11), |y, x| (x + y) % 3 == 0);
    let bytes = mask_png(&m).unwrap();
    let decoder = png::Decoder::new(std::io::Cursor::new(&bytes));
    let reader = decoder.read_info().unwrap();
    assert_eq!(reader.info().bit_depth, png::BitDepth::One);
    assert_eq!(reader.info().color_type, png::ColorType::Grayscale);
    let back = image::load_from_memory(&bytes).unwrap().to_luma8();
    let back = BinaryMask::from_vec(m.dims(), back.as_raw().iter().map(|&v| v != 0).collect()).unwrap();
    assert_eq!(back, m);
}
