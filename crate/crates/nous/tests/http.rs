mod common;

use std::sync::Arc;

use axum::body::{Body, Bytes};
use axum::http::{header, Request, StatusCode};
use axum::Router;
use common::{nous, prepared, stdout};
use http_body_util::BodyExt;
use nous::cli::load_config;
use nous::server::{router, AppState, JSON_CONTENT_TYPE};
use nous_core::{Engine, EngineConfig};
use serde_json::Value;
use tower::ServiceExt;

struct Served {
    _ws: tempfile::TempDir,
    state: Arc<AppState>,
    app: Router,
}

fn serve_prepared() -> Served {
    let ws = prepared();
    let config = load_config(Some(&ws.path().join("nous.toml"))).unwrap();
    let state = AppState::new(Engine::open(config).unwrap());
    Served {
        _ws: ws,
        app: router(state.clone()),
        state,
    }
}

async fn call(app: &Router, req: Request<Body>) -> (StatusCode, String) {
    let res = app.clone().oneshot(req).await.unwrap();
    let status = res.status();
    assert_eq!(res.headers()[header::CONTENT_TYPE], JSON_CONTENT_TYPE);
    let body = res.into_body().collect().await.unwrap().to_bytes();
    (status, String::from_utf8(body.to_vec()).unwrap())
}

async fn get(app: &Router, uri: &str) -> (StatusCode, String) {
    call(app, Request::get(uri).body(Body::empty()).unwrap()).await
}

fn post_ingest(body: impl Into<Body>) -> Request<Body> {
    Request::post("/api/ingest").body(body.into()).unwrap()
}

fn parse(s: &str) -> Value {
    serde_json::from_str(s).unwrap()
}

#[tokio::test]
async fn entity_card_lists_manufactures_drone() {
    let s = serve_prepared();
    let (status, body) = get(&s.app, "/api/entity?name=dji").await;
    assert_eq!(status, StatusCode::OK);
    let card = parse(&body);
    assert_eq!(card["entity"], "dji");
    assert_eq!(card["typeLabels"][0], "company");
    let group = card["groups"].as_array().unwrap().iter().find(|g| g["predicate"] == "manufactures").unwrap();
    assert!(group["facts"]
        .as_array()
        .unwrap()
        .iter()
        .any(|f| f["object"] == "drone" && f["provenance"] == "curated"));
}

#[tokio::test]
async fn unknown_entity_is_404_with_suggestions() {
    let s = serve_prepared();
    let (status, body) = get(&s.app, "/api/entity?name=Parot%20Drones%20Inc").await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    let v = parse(&body);
    assert_eq!(v["error"], "UnknownEntity");
    assert!(v["detail"].as_str().unwrap().contains("Parot"));
    assert!(v["suggestions"].is_array());
    let (status, body) = get(&s.app, "/api/entity").await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert_eq!(parse(&body)["error"], "InvalidArgument");
}

#[tokio::test]
async fn paths_between_windermere_and_dji() {
    let s = serve_prepared();
    let (status, body) = get(&s.app, "/api/paths?from=Windermere&to=DJI&k=3&maxHops=2").await;
    assert_eq!(status, StatusCode::OK);
    let paths = parse(&body);
    let paths = paths.as_array().unwrap();
    assert!(!paths.is_empty() && paths.len() <= 3);
    for p in paths {
        assert!(p["edges"].as_array().unwrap().len() <= 2);
        for key in ["coherence", "meanConfidence"] {
            assert!(p[key].is_number());
        }
    }
    let coherences: Vec<f64> = paths.iter().map(|p| p["coherence"].as_f64().unwrap()).collect();
    assert!(coherences.windows(2).all(|w| w[0] <= w[1]));
}

#[tokio::test]
async fn path_parameter_errors() {
    let s = serve_prepared();
    let cases = [
        ("/api/paths?from=dji&to=dji", StatusCode::BAD_REQUEST, "InvalidArgument"),
        ("/api/paths?from=dji", StatusCode::BAD_REQUEST, "InvalidArgument"),
        ("/api/paths?from=dji&to=parrot&k=0", StatusCode::BAD_REQUEST, "InvalidArgument"),
        ("/api/paths?from=dji&to=parrot&maxHops=two", StatusCode::BAD_REQUEST, "InvalidArgument"),
        ("/api/paths?from=dji&to=nobody%20at%20all", StatusCode::NOT_FOUND, "UnknownEntity"),
        ("/api/paths?from=dji&to=parrot&rel=flies", StatusCode::NOT_FOUND, "UnknownPredicate"),
        ("/api/nothing", StatusCode::NOT_FOUND, "NotFound"),
    ];
    for (uri, status, name) in cases {
        let (got, body) = get(&s.app, uri).await;
        assert_eq!(got, status, "{uri}");
        assert_eq!(parse(&body)["error"], name, "{uri}");
    }
}

#[tokio::test]
async fn cli_and_http_render_identical_bytes() {
    let s = serve_prepared();
    let dir = s._ws.path();
    let pairs: [(&[&str], &str); 4] = [
        (&["stats"], "/api/stats"),
        (&["trending"], "/api/trending"),
        (&["ask", "Windermere", "DJI", "--k", "4"], "/api/paths?from=Windermere&to=DJI&k=4"),
        (&["ask", "windermere", "gopro", "--max-hops", "2"], "/api/paths?from=windermere&to=gopro&maxHops=2"),
    ];
    for (args, uri) in pairs {
        let cli = stdout(&nous(dir, args));
        let (_, http) = get(&s.app, uri).await;
        assert_eq!(cli.trim_end(), http, "{args:?}");
    }
}

#[tokio::test]
async fn ingest_publishes_a_new_snapshot() {
    let s = serve_prepared();
    let before = parse(&get(&s.app, "/api/stats").await.1);
    let lines = concat!(
        r#"{"ts":"2015-03-20","source":"ap","subj":"Skydio","pred":"makes","obj":"drones"}"#,
        "\n",
        r#"{"ts":"2015-03-20","source":"ap","subj":"Skydio","pred":"is based in","obj":"Redwood City"}"#,
        "\n"
    );
    let (status, body) = call(&s.app, post_ingest(lines)).await;
    assert_eq!(status, StatusCode::OK, "{body}");
    let report = parse(&body);
    assert_eq!(report["admitted"], 2);
    let after = parse(&get(&s.app, "/api/stats").await.1);
    assert_eq!(after["facts"].as_u64().unwrap(), before["facts"].as_u64().unwrap() + 2);
    assert_eq!(after["lastBatch"].as_u64().unwrap(), before["lastBatch"].as_u64().unwrap() + 1);
    let (status, _) = get(&s.app, "/api/entity?name=skydio").await;
    assert_eq!(status, StatusCode::OK);
}

#[tokio::test]
async fn malformed_ingest_is_400() {
    let s = serve_prepared();
    let (status, body) = call(&s.app, post_ingest("{\"ts\":1}\n")).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert_eq!(parse(&body)["error"], "ParseError");
}

#[tokio::test]
async fn ingest_while_writer_busy_is_409() {
    let s = serve_prepared();
    let guard = s.state.writer.try_lock().unwrap();
    let (status, body) = call(&s.app, post_ingest("")).await;
    assert_eq!(status, StatusCode::CONFLICT);
    assert_eq!(parse(&body)["error"], "WriteInProgress");
    drop(guard);
    let (status, _) = call(&s.app, post_ingest("")).await;
    assert_eq!(status, StatusCode::OK);
}

#[tokio::test]
async fn concurrent_ingests_one_succeeds_one_conflicts() {
    let s = serve_prepared();
    let (release, gate) = tokio::sync::oneshot::channel::<()>();
    let slow = futures_util::stream::once(async move {
        gate.await.ok();
        Ok::<_, std::io::Error>(Bytes::from_static(
            br#"{"ts":"2015-03-21","source":"ap","subj":"Skydio","pred":"makes","obj":"drones"}"#,
        ))
    });
    let app = s.app.clone();
    let first = tokio::spawn(async move { call(&app, post_ingest(Body::from_stream(slow))).await });
    // wait until the first upload holds the writer
    while s.state.writer.try_lock().is_ok() {
        tokio::task::yield_now().await;
    }
    let (second, _) = call(&s.app, post_ingest("")).await;
    release.send(()).unwrap();
    let (first, body) = first.await.unwrap();
    assert_eq!((first, second), (StatusCode::OK, StatusCode::CONFLICT), "{body}");
}

#[tokio::test]
async fn readers_see_whole_snapshots_during_ingest() {
    let s = serve_prepared();
    let app = s.app.clone();
    let writer = tokio::spawn(async move {
        for i in 0..20 {
            let line = format!(r#"{{"ts":{},"source":"ap","subj":"Maker {i}","pred":"makes","obj":"drones"}}"#, 1_500_000_000 + i);
            let (status, _) = call(&app, post_ingest(line)).await;
            assert_eq!(status, StatusCode::OK);
        }
    });
    for _ in 0..50 {
        let (_, body) = get(&s.app, "/api/entity?name=drone").await;
        let card = parse(&body);
        let listed: usize = card["groups"].as_array().unwrap().iter().map(|g| g["facts"].as_array().unwrap().len()).sum();
        let total = card["factCount"].as_u64().unwrap() as usize;
        assert_eq!(listed, total.min(20));
        tokio::task::yield_now().await;
    }
    writer.await.unwrap();
}

#[tokio::test]
async fn empty_engine_answers_stats() {
    let app = router(AppState::new(Engine::new(EngineConfig::in_memory()).unwrap()));
    let (status, body) = get(&app, "/api/stats").await;
    assert_eq!(status, StatusCode::OK);
    let v = parse(&body);
    assert_eq!((v["entities"].as_u64(), v["facts"].as_u64(), v["patterns"].as_u64()), (Some(0), Some(0), Some(0)));
    assert_eq!(get(&app, "/api/trending").await.1, "[]");
}
