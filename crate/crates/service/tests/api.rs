use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::Router;
use serde_json::{json, Value};
use tower::ServiceExt;
use tsprobe_core::{synthesize, write_jsonl, Dataset, SynthConfig};
use tsprobe_service::{router, AppState, Session};

fn fixture() -> Dataset {
    let mut cfg = SynthConfig::new(30, 192, 24, 3);
    cfg.n_test = 12;
    cfg.jump_test = 4;
    cfg.context_length = 72;
    synthesize(&cfg).unwrap()
}

fn loaded() -> Router {
    router(AppState::new(Some(Session::new(fixture(), None, None).unwrap())))
}

async fn call(app: &Router, method: &str, uri: &str, body: Option<Value>) -> (StatusCode, Value) {
    let req = Request::builder().method(method).uri(uri);
    let req = match body {
        Some(b) => req
            .header("content-type", "application/json")
            .body(Body::from(b.to_string()))
            .unwrap(),
        None => req.body(Body::empty()).unwrap(),
    };
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    let bytes = axum::body::to_bytes(resp.into_body(), usize::MAX).await.unwrap();
    let value = if bytes.is_empty() {
        Value::Null
    } else {
        serde_json::from_slice(&bytes).unwrap()
    };
    (status, value)
}

fn floats(v: &Value) -> Vec<f64> {
    v.as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect()
}

#[tokio::test]
async fn fresh_session_answers_conflict() {
    let app = router(AppState::default());
    for uri in ["/instance-space", "/dataset/meta", "/errors/summary", "/series/s0000", "/features/s0000"] {
        let (status, body) = call(&app, "GET", uri, None).await;
        assert_eq!(status, StatusCode::CONFLICT, "{uri}");
        assert!(body["error"].as_str().unwrap().contains("no dataset"));
    }
    let (status, _) = call(&app, "POST", "/transform", Some(json!([]))).await;
    assert_eq!(status, StatusCode::CONFLICT);
}

#[tokio::test]
async fn instance_space_lists_every_series_and_is_stable() {
    let app = loaded();
    let (status, a) = call(&app, "GET", "/instance-space", None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(a["points"].as_array().unwrap().len(), 30 + 12);
    let bins = a["histogram"]["bins"].as_array().unwrap();
    assert_eq!(bins.len(), 20);
    let total: u64 = bins.iter().map(|b| b["train"].as_u64().unwrap() + b["test"].as_u64().unwrap()).sum();
    assert_eq!(total, 42);
    let (_, b) = call(&app, "GET", "/instance-space", None).await;
    assert_eq!(a, b);

    let (status, h) = call(&app, "GET", "/instance-space?axis=F2&bins=5", None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(h["histogram"]["bins"].as_array().unwrap().len(), 5);
    let (status, _) = call(&app, "GET", "/instance-space?axis=zz", None).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
}

#[tokio::test]
async fn meta_reports_dataset_shape() {
    let app = loaded();
    let (status, meta) = call(&app, "GET", "/dataset/meta", None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(meta["train"], 30);
    assert_eq!(meta["test"], 12);
    assert_eq!(meta["forecast_horizon"], 24);
    assert_eq!(meta["context_length"], 72);
    assert_eq!(meta["model"], "seasonal_naive");
    assert_eq!(meta["session"], "default");
}

#[tokio::test]
async fn transform_needs_a_selection() {
    let app = loaded();
    let (status, body) = call(&app, "POST", "/transform", Some(json!([]))).await;
    assert_eq!(status, StatusCode::CONFLICT);
    assert!(body["error"].as_str().unwrap().contains("no series selected"));
}

#[tokio::test]
async fn select_returns_panel_payload_matching_features_endpoint() {
    let app = loaded();
    let (status, sel) = call(&app, "POST", "/select", Some(json!({ "id": "t0002", "split": "test" }))).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(sel["id"], "t0002");
    assert_eq!(floats(&sel["values"]).len(), 192);
    assert_eq!(floats(&sel["forecast"]["values"]).len(), 24);
    assert_eq!(floats(&sel["forecast"]["errors"]["per_horizon"]).len(), 24);
    let (_, f) = call(&app, "GET", "/features/t0002?split=test", None).await;
    assert_eq!(f["features"], sel["features"]);
    assert_eq!(f["point"], sel["point"]);

    let (status, _) = call(&app, "POST", "/select", Some(json!({ "id": "nope" }))).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    let (_, meta) = call(&app, "GET", "/dataset/meta", None).await;
    assert_eq!(meta["selected"]["id"], "t0002");
}

#[tokio::test]
async fn reads_do_not_change_state() {
    let app = loaded();
    call(&app, "POST", "/select", Some(json!({ "id": "s0001" }))).await;
    let (_, before) = call(&app, "GET", "/dataset/meta", None).await;
    call(&app, "GET", "/series/t0003", None).await;
    call(&app, "GET", "/errors/summary", None).await;
    let (_, after) = call(&app, "GET", "/dataset/meta", None).await;
    assert_eq!(before, after);
}

#[tokio::test]
async fn identity_pipelines_return_the_original() {
    let app = loaded();
    call(&app, "POST", "/select", Some(json!({ "id": "t0001", "split": "test" }))).await;
    let identity = json!([
        { "kind": "trend", "params": { "f": 1.0, "h": 1.0, "m": 0.0 } },
        { "kind": "seasonal", "params": { "k": 1.0 } },
        { "kind": "translate", "params": { "c": 0.0 } },
        { "kind": "noise", "params": { "p": 0.0, "sigma_rel": 0.5 }, "seed": 4 }
    ]);
    for pipeline in [json!([]), json!({ "steps": [] }), identity] {
        let (status, out) = call(&app, "POST", "/transform", Some(pipeline)).await;
        assert_eq!(status, StatusCode::OK, "{out}");
        assert_eq!(out["transformed"], out["original"]);
        for c in ["c0", "c1"] {
            let (a, b) = (out["point"][c].as_f64().unwrap(), out["original_point"][c].as_f64().unwrap());
            assert!((a - b).abs() <= 1e-9, "{c}: {a} vs {b}");
        }
    }
}

#[tokio::test]
async fn posting_the_same_pipeline_twice_is_idempotent() {
    let app = loaded();
    call(&app, "POST", "/select", Some(json!({ "id": "t0000", "split": "test" }))).await;
    let p = json!([
        { "kind": "noise", "params": { "p": 0.4, "sigma_rel": 0.3 }, "seed": 11 },
        { "kind": "seasonal", "params": { "k": 1.5 }, "interval": [10, 100] }
    ]);
    let (_, a) = call(&app, "POST", "/transform", Some(p.clone())).await;
    let (_, b) = call(&app, "POST", "/transform", Some(p.clone())).await;
    call(&app, "POST", "/transform", Some(json!([]))).await;
    let (_, c) = call(&app, "POST", "/transform", Some(p)).await;
    assert_eq!(a, b);
    assert_eq!(a, c);
    assert_ne!(a["transformed"], a["original"]);
}

#[tokio::test]
async fn level_jump_moves_point_right_along_component_zero() {
    let app = loaded();
    // pick the clean test series closest to the centre of the space
    let (_, space) = call(&app, "GET", "/instance-space", None).await;
    let centred = space["points"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|p| p["split"] == "test" && p["id"].as_str().unwrap().starts_with('t'))
        .min_by(|a, b| {
            let d = |p: &Value| p["component0"].as_f64().unwrap().abs() + p["component1"].as_f64().unwrap().abs();
            d(a).total_cmp(&d(b))
        })
        .unwrap()
        .clone();
    let id = centred["id"].as_str().unwrap();
    call(&app, "POST", "/select", Some(json!({ "id": id, "split": "test" }))).await;
    let (status, out) = call(
        &app,
        "POST",
        "/transform",
        Some(json!([{ "kind": "translate", "params": { "c": 60.0 }, "interval": [100, 192] }])),
    )
    .await;
    assert_eq!(status, StatusCode::OK, "{out}");
    let before = out["original_point"]["c0"].as_f64().unwrap();
    let after = out["point"]["c0"].as_f64().unwrap();
    assert!(after > before, "{id}: c0 {before} -> {after}");
}

#[tokio::test]
async fn malformed_interval_is_a_bad_request_naming_the_step() {
    let app = loaded();
    call(&app, "POST", "/select", Some(json!({ "id": "t0001", "split": "test" }))).await;
    let bad = [
        json!([{ "kind": "seasonal", "params": { "k": 2.0 } }, { "kind": "translate", "params": { "c": 1.0 }, "interval": [50, 10] }]),
        json!([{ "kind": "seasonal", "params": { "k": 2.0 } }, { "kind": "translate", "params": { "c": 1.0 }, "interval": [50, 500] }]),
    ];
    for pipeline in bad {
        let (status, body) = call(&app, "POST", "/transform", Some(pipeline)).await;
        assert_eq!(status, StatusCode::BAD_REQUEST);
        assert!(body["error"].as_str().unwrap().contains("step 1"), "{body}");
    }
    let (status, _) = call(&app, "POST", "/transform", Some(json!({ "kind": "seasonal" }))).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
}

#[tokio::test]
async fn error_summary_has_band_and_curve() {
    let app = loaded();
    let (status, s) = call(&app, "GET", "/errors/summary", None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(s["metric"], "mase");
    assert_eq!(s["summary"]["count"], 12);
    for key in ["band_low", "band_high", "mean_curve"] {
        assert_eq!(floats(&s["summary"][key]).len(), 24);
    }
    let (_, smape) = call(&app, "GET", "/errors/summary?metric=smape", None).await;
    assert_eq!(smape["metric"], "smape");
    let (status, _) = call(&app, "GET", "/errors/summary?metric=rmse", None).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
}

#[tokio::test]
async fn load_endpoint_builds_a_session_from_files() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("ds.jsonl");
    write_jsonl(&fixture(), &path).unwrap();
    let app = router(AppState::default());
    let (status, meta) = call(
        &app,
        "POST",
        "/load",
        Some(json!({ "dataset": path, "horizon": 24, "context_length": 72, "seasonal_period": 24 })),
    )
    .await;
    assert_eq!(status, StatusCode::OK, "{meta}");
    assert_eq!(meta["train"], 30);
    let (status, _) = call(&app, "GET", "/instance-space", None).await;
    assert_eq!(status, StatusCode::OK);

    let (status, body) = call(&app, "POST", "/load", Some(json!({ "dataset": dir.path().join("missing.jsonl") }))).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    assert!(body["error"].as_str().unwrap().contains("missing.jsonl"));
}
