mod common;

use std::sync::Arc;

use axum::body::Body;
use axum::http::{header, Request, StatusCode};
use axum::Router;
use common::*;
use fieldvoice_listen::{router, ListenService};
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;

async fn call(app: &Router, req: Request<Body>) -> (StatusCode, Value) {
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes();
    (status, serde_json::from_slice(&bytes).unwrap_or(Value::Null))
}

fn post(uri: &str, body: Value) -> Request<Body> {
    Request::post(uri)
        .header(header::CONTENT_TYPE, "application/json")
        .body(Body::from(body.to_string()))
        .unwrap()
}

fn get(uri: &str) -> Request<Body> {
    Request::get(uri).body(Body::empty()).unwrap()
}

fn app() -> (tempfile::TempDir, Router) {
    let dir = tempfile::tempdir().unwrap();
    audio_fixture(&dir.path().join("audio"), 20);
    let svc = ListenService::open(dir.path().join("data"), dir.path().join("audio")).unwrap();
    (dir, router(Arc::new(svc)))
}

#[tokio::test]
async fn preference_campaign_over_http() {
    let (_d, app) = app();
    let (status, body) = call(&app, post("/campaigns", serde_json::to_value(preference(20, 9)).unwrap())).await;
    assert_eq!(status, StatusCode::CREATED);
    assert_eq!(body["items"].as_array().unwrap().len(), 20);
    assert_eq!(body["type"], "preference");
    let id = body["id"].as_str().unwrap().to_string();

    let (status, task) = call(&app, get(&format!("/campaigns/{id}/next?session=ev1"))).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(task["status"], "task");
    let audio = task["audio"].as_array().unwrap();
    assert_eq!(audio.len(), 2);
    // labels never leak into the task view
    assert!(!task.to_string().contains("Found") && !task.to_string().contains("Created"));
    let tid = task["task_id"].as_str().unwrap();

    let (status, _) = call(&app, post("/responses", json!({"task_id": tid, "session": "ev1", "transcription": "x"}))).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    let (status, stored) = call(&app, post("/responses", json!({"task_id": tid, "session": "ev1", "choice": "No difference"}))).await;
    assert_eq!(status, StatusCode::CREATED);
    assert_eq!(stored["answer"]["choice"], "same");
    let (status, err) = call(&app, post("/responses", json!({"task_id": tid, "session": "ev1", "choice": "A"}))).await;
    assert_eq!(status, StatusCode::CONFLICT);
    assert_eq!(err["error"], "duplicate");

    let (status, res) = call(&app, get(&format!("/campaigns/{id}/results"))).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(res["tally"]["same"], 1);
    assert_eq!(res["responses"], 1);

    let (status, audit) = call(&app, get("/audit")).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(audit["orphans"], json!([]));
}

#[tokio::test]
async fn errors_carry_status_and_field_details() {
    let (_d, app) = app();
    let mut def = serde_json::to_value(preference(2, 1)).unwrap();
    def["items"][0]["b"]["system"] = json!("Found");
    def["items"][1]["id"] = json!("p0");
    let (status, body) = call(&app, post("/campaigns", def)).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(body["error"], "invalid_definition");
    assert_eq!(body["fields"].as_array().unwrap().len(), 2);

    let (status, body) = call(&app, post("/campaigns", serde_json::to_value(preference(21, 1)).unwrap())).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(body["missing"], json!(["found/p20.wav", "created/p20.wav"]));

    let (status, _) = call(&app, get("/campaigns/none/next?session=a")).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    let (status, _) = call(&app, get("/campaigns/none/results")).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    let (status, _) = call(&app, post("/responses", json!({"task_id": "nope", "session": "a", "choice": "A"}))).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
}

#[tokio::test]
async fn transcription_campaign_over_http() {
    let (_d, app) = app();
    let (status, body) = call(&app, post("/campaigns", serde_json::to_value(transcription(&["kawuono ni", "dwe"])).unwrap())).await;
    assert_eq!(status, StatusCode::CREATED);
    let id = body["id"].as_str().unwrap().to_string();
    assert!(!body.to_string().contains("kawuono"));
    for _ in 0..2 {
        let (_, task) = call(&app, get(&format!("/campaigns/{id}/next?session=ev"))).await;
        assert!(!task.to_string().contains("kawuono") && !task.to_string().contains("dwe"));
        let text = if task["item"] == "p0" { "kawuono ni" } else { "dwé" };
        let (status, stored) =
            call(&app, post("/responses", json!({"task_id": task["task_id"], "session": "ev", "transcription": text}))).await;
        assert_eq!(status, StatusCode::CREATED);
        assert_eq!(stored["answer"]["transcription"], text, "text stored verbatim");
    }
    let (_, done) = call(&app, get(&format!("/campaigns/{id}/next?session=ev"))).await;
    assert_eq!(done["status"], "done");
    assert_eq!(done["progress"], json!({"done": 2, "total": 2}));
    let (_, res) = call(&app, get(&format!("/campaigns/{id}/results"))).await;
    assert_eq!(res["type"], "transcription");
    assert!((res["mean_cer"].as_f64().unwrap() - 1.0 / 6.0).abs() < 1e-12);
}

#[tokio::test]
async fn audio_supports_range_requests() {
    let (d, app) = app();
    let full = std::fs::read(d.path().join("audio/found/p3.wav")).unwrap();
    let req = Request::get("/audio/found/p3.wav").header(header::RANGE, "bytes=4-13").body(Body::empty()).unwrap();
    let resp = app.clone().oneshot(req).await.unwrap();
    assert_eq!(resp.status(), StatusCode::PARTIAL_CONTENT);
    let range = resp.headers()[header::CONTENT_RANGE].to_str().unwrap().to_string();
    assert_eq!(range, format!("bytes 4-13/{}", full.len()));
    let bytes = resp.into_body().collect().await.unwrap().to_bytes();
    assert_eq!(&bytes[..], &full[4..14]);
    let resp = app.clone().oneshot(get("/audio/found/p99.wav")).await.unwrap();
    assert_eq!(resp.status(), StatusCode::NOT_FOUND);
}
