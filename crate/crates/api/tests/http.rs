use std::collections::BTreeMap;
use std::path::Path;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use kinvis_api::server::{router, AppState, ServeOptions};
use kinvis_core::aggregation::ScatterSeries;
use kinvis_core::session_store::{parse_sessions, DocumentKind, Registry};
use kinvis_core::{Direction, DirectionBucket, Emotion, EmotionBucket, EmotionEvent, MovementEvent, Session, SessionDate};
use serde::Deserialize;
use tower::ServiceExt;

#[derive(Debug, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
#[allow(dead_code)]
struct EntrySchema {
    user_label: String,
    date: String,
    kind: DocumentKind,
    event_count: usize,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ErrorSchema {
    error: String,
}

fn fixture_registry(dir: &Path) -> Registry {
    let registry = Registry::create(dir).unwrap();
    let mut right_turn = Session::new(SessionDate::new(2016, 3, 2).unwrap(), "user1");
    right_turn.movements.push(MovementEvent { t: 2.23, direction: Direction::Right, intensity: 6.78485 });
    registry.save_session(&right_turn, DocumentKind::Movement, false).unwrap();

    let mut angry_onset = Session::new(SessionDate::new(2016, 3, 10).unwrap(), "user1");
    angry_onset.emotions.push(EmotionEvent { t: 7.98, emotion: Emotion::Angry });
    registry.save_session(&angry_onset, DocumentKind::Emotion, false).unwrap();

    let mut other = Session::new(SessionDate::new(2016, 3, 10).unwrap(), "user2");
    other.movements = vec![
        MovementEvent { t: 0.5, direction: Direction::Up, intensity: 5.0 },
        MovementEvent { t: 3.1, direction: Direction::Right, intensity: 10.0 },
    ];
    other.emotions = vec![
        EmotionEvent { t: 1.0, emotion: Emotion::Happy },
        EmotionEvent { t: 6.5, emotion: Emotion::Angry },
    ];
    registry.save_session(&other, DocumentKind::Movement, false).unwrap();
    registry.save_session(&other, DocumentKind::Emotion, false).unwrap();
    registry
}

fn app(registry: Registry) -> Router {
    router(AppState::load(registry).unwrap(), &ServeOptions::default())
}

async fn get(app: &Router, uri: &str) -> (StatusCode, String) {
    let response = app.clone().oneshot(Request::get(uri).body(Body::empty()).unwrap()).await.unwrap();
    let status = response.status();
    let bytes = response.into_body().collect().await.unwrap().to_bytes();
    (status, String::from_utf8(bytes.to_vec()).unwrap())
}

#[tokio::test]
async fn empty_registry_lists_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let app = app(Registry::create(dir.path()).unwrap());
    assert_eq!(get(&app, "/api/sessions").await, (StatusCode::OK, "[]".to_string()));
    assert_eq!(get(&app, "/api/aggregates/direction").await, (StatusCode::OK, "[]".to_string()));
    assert_eq!(get(&app, "/api/scatter").await, (StatusCode::OK, "[]".to_string()));
}

#[tokio::test]
async fn direction_aggregate_over_right_turn_fixture() {
    let dir = tempfile::tempdir().unwrap();
    let registry = Registry::create(dir.path()).unwrap();
    let mut right_turn = Session::new(SessionDate::new(2016, 3, 2).unwrap(), "user1");
    right_turn.movements.push(MovementEvent { t: 2.23, direction: Direction::Right, intensity: 6.78485 });
    registry.save_session(&right_turn, DocumentKind::Movement, false).unwrap();

    let (status, body) = get(&app(registry), "/api/aggregates/direction?width=2").await;
    assert_eq!(status, StatusCode::OK);
    let buckets: Vec<DirectionBucket> = serde_json::from_str(&body).unwrap();
    assert_eq!(buckets.len(), 2);
    assert_eq!(buckets[1].start_t, 2.0);
    assert_eq!(buckets[1].count(Direction::Right), 1);
    assert_eq!(buckets[1].total(), 1);
    assert_eq!(buckets[0].total(), 0);
}

#[tokio::test]
async fn invalid_filter_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let app = app(fixture_registry(dir.path()));
    let (status, body) = get(&app, "/api/aggregates/emotion?filter=BORED").await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    let err: ErrorSchema = serde_json::from_str(&body).unwrap();
    assert!(err.error.contains("BORED"), "{}", err.error);
}

#[tokio::test]
async fn malformed_queries_are_bad_requests() {
    let dir = tempfile::tempdir().unwrap();
    let app = app(fixture_registry(dir.path()));
    for uri in [
        "/api/aggregates/direction?width=0",
        "/api/aggregates/direction?width=abc",
        "/api/aggregates/direction?width=-2",
        "/api/aggregates/direction?bucket=2",
        "/api/aggregates/emotion?width=NaN",
        "/api/sessions/user1/2016-3-2/movement",
        "/api/sessions/user1/2016-03-02/pose",
        "/api/sessions/bad%20user/2016-03-02/movement",
    ] {
        let (status, body) = get(&app, uri).await;
        assert_eq!(status, StatusCode::BAD_REQUEST, "{uri}: {body}");
        serde_json::from_str::<ErrorSchema>(&body).unwrap();
    }
}

#[tokio::test]
async fn unknown_session_and_route_are_not_found() {
    let dir = tempfile::tempdir().unwrap();
    let app = app(fixture_registry(dir.path()));
    for uri in ["/api/sessions/nobody/2016-03-02/movement", "/api/sessions/user1/2016-03-02/emotion", "/api/nothing", "/index.html"] {
        let (status, body) = get(&app, uri).await;
        assert_eq!(status, StatusCode::NOT_FOUND, "{uri}");
        serde_json::from_str::<ErrorSchema>(&body).unwrap();
    }
}

#[tokio::test]
async fn every_endpoint_matches_its_schema() {
    let dir = tempfile::tempdir().unwrap();
    let app = app(fixture_registry(dir.path()));

    let (status, body) = get(&app, "/api/sessions").await;
    assert_eq!(status, StatusCode::OK);
    let entries: Vec<EntrySchema> = serde_json::from_str(&body).unwrap();
    assert_eq!(entries.len(), 4);

    for entry in &entries {
        let uri = format!("/api/sessions/{}/{}/{}", entry.user_label, entry.date, entry.kind);
        let (status, body) = get(&app, &uri).await;
        assert_eq!(status, StatusCode::OK, "{uri}");
        let sessions = parse_sessions::<f64>(&body, entry.kind).unwrap();
        assert_eq!(sessions.len(), 1);
        let count = sessions[0].movements.len() + sessions[0].emotions.len();
        assert_eq!(count, entry.event_count);
    }

    let (_, body) = get(&app, "/api/sessions/user1/2016-03-02/movement").await;
    let golden = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/../core/tests/golden/right_turn_movement.json")).unwrap();
    assert_eq!(body, golden);

    let (_, body) = get(&app, "/api/aggregates/direction").await;
    let buckets: Vec<DirectionBucket> = serde_json::from_str(&body).unwrap();
    assert_eq!(buckets.iter().map(|b| b.total()).sum::<u64>(), 3);

    let (_, body) = get(&app, "/api/aggregates/emotion?width=2&filter=HAPPY,ANGRY").await;
    let buckets: Vec<EmotionBucket> = serde_json::from_str(&body).unwrap();
    assert!(buckets.iter().all(|b| b.counts.keys().copied().collect::<Vec<_>>() == vec![Emotion::Angry, Emotion::Happy]));
    assert_eq!(buckets[3].count(Emotion::Angry), 2);
    assert_eq!(buckets[0].count(Emotion::Happy), 1);

    let (_, body) = get(&app, "/api/aggregates/emotion?width=1").await;
    let buckets: Vec<EmotionBucket> = serde_json::from_str(&body).unwrap();
    assert_eq!(buckets.len(), 8);
    assert!(buckets.iter().all(|b| b.counts.len() == 4));

    let (_, body) = get(&app, "/api/scatter").await;
    let series: Vec<ScatterSeries<f64>> = serde_json::from_str(&body).unwrap();
    assert_eq!(series.iter().map(|s| s.user_label.as_str()).collect::<Vec<_>>(), vec!["user1", "user2"]);
    assert_eq!(series[0].points[0].color_rank, 0.678485);
    assert_eq!(series[1].points.iter().map(|p| p.color_rank).collect::<Vec<_>>(), vec![0.5, 1.0]);
}

fn dir_state(dir: &Path) -> BTreeMap<String, (Vec<u8>, std::time::SystemTime)> {
    std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), (std::fs::read(e.path()).unwrap(), e.metadata().unwrap().modified().unwrap()))
        })
        .collect()
}

#[tokio::test]
async fn service_never_mutates_the_registry() {
    let dir = tempfile::tempdir().unwrap();
    let app = app(fixture_registry(dir.path()));
    let before = dir_state(dir.path());
    for uri in ["/api/sessions", "/api/sessions/user1/2016-03-02/movement", "/api/aggregates/direction", "/api/aggregates/emotion", "/api/scatter"] {
        get(&app, uri).await;
        for method in ["POST", "PUT", "DELETE", "PATCH"] {
            let response = app.clone().oneshot(Request::builder().method(method).uri(uri).body(Body::empty()).unwrap()).await.unwrap();
            assert_eq!(response.status(), StatusCode::METHOD_NOT_ALLOWED, "{method} {uri}");
        }
    }
    assert_eq!(dir_state(dir.path()), before);
}

#[tokio::test]
async fn reload_picks_up_new_sessions() {
    let dir = tempfile::tempdir().unwrap();
    let registry = fixture_registry(dir.path());
    let state = AppState::load(registry.clone()).unwrap();
    let app = router(state.clone(), &ServeOptions::default());
    let mut s = Session::new(SessionDate::new(2016, 4, 1).unwrap(), "user3");
    s.movements.push(MovementEvent { t: 1.0, direction: Direction::Down, intensity: 4.5 });
    registry.save_session(&s, DocumentKind::Movement, false).unwrap();

    let (_, body) = get(&app, "/api/sessions").await;
    assert_eq!(serde_json::from_str::<Vec<EntrySchema>>(&body).unwrap().len(), 4);
    state.reload().unwrap();
    let (_, body) = get(&app, "/api/sessions").await;
    assert_eq!(serde_json::from_str::<Vec<EntrySchema>>(&body).unwrap().len(), 5);
}

#[tokio::test]
async fn watcher_reloads_on_change() {
    let dir = tempfile::tempdir().unwrap();
    let registry = fixture_registry(dir.path());
    let state = AppState::load(registry.clone()).unwrap();
    let app = router(state.clone(), &ServeOptions::default());
    let watcher = tokio::spawn(state.clone().watch(std::time::Duration::from_millis(20)));
    tokio::time::sleep(std::time::Duration::from_millis(50)).await;

    let mut s = Session::new(SessionDate::new(2016, 4, 1).unwrap(), "user3");
    s.emotions.push(EmotionEvent { t: 1.0, emotion: Emotion::Sad });
    registry.save_session(&s, DocumentKind::Emotion, false).unwrap();

    let mut found = false;
    for _ in 0..100 {
        tokio::time::sleep(std::time::Duration::from_millis(20)).await;
        let (_, body) = get(&app, "/api/sessions").await;
        if serde_json::from_str::<Vec<EntrySchema>>(&body).unwrap().len() == 5 {
            found = true;
            break;
        }
    }
    watcher.abort();
    assert!(found, "watcher never reloaded");
}

#[tokio::test]
async fn serves_assets_and_cors() {
    let dir = tempfile::tempdir().unwrap();
    let assets = tempfile::tempdir().unwrap();
    std::fs::write(assets.path().join("index.html"), "<html>dashboard</html>").unwrap();
    let state = AppState::load(fixture_registry(dir.path())).unwrap();
    let options = ServeOptions { assets: Some(assets.path().to_path_buf()), cors_origins: Some(vec!["http://localhost:5173".into()]) };
    let app = router(state, &options);

    let (status, body) = get(&app, "/index.html").await;
    assert_eq!((status, body.as_str()), (StatusCode::OK, "<html>dashboard</html>"));
    let (status, _) = get(&app, "/api/unknown").await;
    assert_eq!(status, StatusCode::NOT_FOUND);

    let request = Request::get("/api/sessions").header("origin", "http://localhost:5173").body(Body::empty()).unwrap();
    let response = app.clone().oneshot(request).await.unwrap();
    assert_eq!(response.headers().get("access-control-allow-origin").unwrap(), "http://localhost:5173");
    let request = Request::get("/api/sessions").header("origin", "http://evil.example").body(Body::empty()).unwrap();
    let response = app.oneshot(request).await.unwrap();
    assert!(response.headers().get("access-control-allow-origin").is_none());
}
