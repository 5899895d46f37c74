use std::time::Duration;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use pattern_core::mesh::{shapes, write_obj, SurfacePoint, TriMesh};
use pattern_core::pattern::{run_pipeline, Config, PipelineInput};
use pattern_studio::{router, AppState};
use serde_json::{json, Value};
use tower::ServiceExt;

async fn call(app: &Router, method: &str, uri: &str, body: Option<Value>) -> (StatusCode, String) {
    let builder = Request::builder().method(method).uri(uri);
    let req = match body {
        Some(b) => builder
            .header("content-type", "application/json")
            .body(Body::from(b.to_string()))
            .unwrap(),
        None => builder.body(Body::empty()).unwrap(),
    };
    let res = app.clone().oneshot(req).await.unwrap();
    let status = res.status();
    let bytes = res.into_body().collect().await.unwrap().to_bytes();
    (status, String::from_utf8(bytes.to_vec()).unwrap())
}

fn parse(s: &str) -> Value {
    serde_json::from_str(s).unwrap()
}

fn obj(mesh: &TriMesh) -> String {
    write_obj(mesh.vertices(), mesh.faces())
}

fn cylinder() -> TriMesh {
    shapes::tube(32, 8, 2.0, |_| 1.0)
}

async fn session(app: &Router, mesh: &TriMesh) -> String {
    let (st, body) = call(app, "POST", "/sessions", Some(json!({ "obj": obj(mesh) }))).await;
    assert_eq!(st, StatusCode::CREATED, "{body}");
    parse(&body)["id"].as_str().unwrap().to_string()
}

/// Polls until the session leaves the computing state.
async fn wait(app: &Router, id: &str) -> Value {
    for _ in 0..1200 {
        let (_, body) = call(app, "GET", &format!("/sessions/{id}/status"), None).await;
        let v = parse(&body);
        if v["state"] != "computing" {
            return v;
        }
        tokio::time::sleep(Duration::from_millis(50)).await;
    }
    panic!("compute did not finish");
}

#[tokio::test]
async fn create_sessions() {
    let app = router(AppState::default());
    let a = session(&app, &shapes::cube()).await;
    let b = session(&app, &shapes::cube()).await;
    assert_ne!(a, b);
    let quad = "v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nf 1 2 3 4\n";
    let (st, body) = call(&app, "POST", "/sessions", Some(json!({ "obj": quad }))).await;
    assert_eq!(st, StatusCode::BAD_REQUEST);
    let v = parse(&body);
    assert!(v["error"].as_str().unwrap().contains("non-triangle face"), "{body}");
    assert_eq!(v["report"]["valid"], false);
    let (st, _) = call(&app, "GET", "/sessions/nope/status", None).await;
    assert_eq!(st, StatusCode::NOT_FOUND);
}

#[tokio::test]
async fn strokes_are_stored_and_removed() {
    let app = router(AppState::default());
    let mesh = cylinder();
    let id = session(&app, &mesh).await;
    let points: Vec<SurfacePoint> = (0..5).map(|f| SurfacePoint::new(f, [0.2, 0.3, 0.5])).collect();
    let (st, body) = call(&app, "POST", &format!("/sessions/{id}/strokes"), Some(json!({ "points": points }))).await;
    assert_eq!(st, StatusCode::CREATED, "{body}");
    let echoed = parse(&body);
    let sid = echoed["id"].as_u64().unwrap();
    assert_eq!(echoed["points"].as_array().unwrap().len(), 5);

    let bad = json!({ "points": [{"face": 0, "bary": [0.4, 0.4, 0.4]}, {"face": 1, "bary": [1, 0, 0]}] });
    let (st, _) = call(&app, "POST", &format!("/sessions/{id}/strokes"), Some(bad)).await;
    assert_eq!(st, StatusCode::BAD_REQUEST);
    let off = json!({ "points": [{"face": 999999, "bary": [1, 0, 0]}, {"face": 1, "bary": [1, 0, 0]}] });
    let (st, _) = call(&app, "POST", &format!("/sessions/{id}/strokes"), Some(off)).await;
    assert_eq!(st, StatusCode::BAD_REQUEST);

    let (st, _) = call(&app, "DELETE", &format!("/sessions/{id}/strokes/{}", sid + 10), None).await;
    assert_eq!(st, StatusCode::NOT_FOUND);
    let (st, body) = call(&app, "DELETE", &format!("/sessions/{id}/strokes/{sid}"), None).await;
    assert_eq!(st, StatusCode::OK);
    assert!(parse(&body)["strokes"].as_array().unwrap().is_empty());
    let (_, body) = call(&app, "GET", &format!("/sessions/{id}"), None).await;
    assert!(parse(&body)["strokes"].as_array().unwrap().is_empty());
}

#[tokio::test(flavor = "multi_thread")]
async fn compute_revisions_match_library_output() {
    let app = router(AppState::default());
    let mesh = cylinder();
    let id = session(&app, &mesh).await;
    let (st, body) = call(&app, "POST", &format!("/sessions/{id}/compute"), None).await;
    assert_eq!(st, StatusCode::ACCEPTED, "{body}");
    assert_eq!(parse(&body)["revision"], 1);
    let s = wait(&app, &id).await;
    assert_eq!(s["state"], "idle", "{s}");
    assert_eq!(s["revision"], 1);

    let (st, layout) = call(&app, "GET", &format!("/sessions/{id}/revisions/1/layout"), None).await;
    assert_eq!(st, StatusCode::OK);
    assert!(!parse(&layout)["patches"].as_array().unwrap().is_empty());
    let (st, svg) = call(&app, "GET", &format!("/sessions/{id}/revisions/1/pattern.svg"), None).await;
    assert_eq!(st, StatusCode::OK);

    // the same bytes the CLI writes for these inputs
    let reloaded = TriMesh::new(pattern_core::mesh::parse_obj(&obj(&mesh)).unwrap().0, mesh.faces().to_vec()).unwrap();
    let direct = run_pipeline(&Config::default(), &PipelineInput::new(reloaded)).unwrap();
    assert_eq!(layout, direct.document.to_json());
    assert_eq!(svg, direct.svg);

    // a second compute with overrides; revision 1 stays served
    let (st, _) = call(&app, "POST", &format!("/sessions/{id}/compute"), Some(json!({ "max_corners": 6 }))).await;
    assert_eq!(st, StatusCode::ACCEPTED);
    let (st, _) = call(&app, "POST", &format!("/sessions/{id}/compute"), None).await;
    assert_eq!(st, StatusCode::CONFLICT);
    assert_eq!(wait(&app, &id).await["revision"], 2);
    let (st, again) = call(&app, "GET", &format!("/sessions/{id}/revisions/1/layout"), None).await;
    assert_eq!(st, StatusCode::OK);
    assert_eq!(again, layout);
    let (st, _) = call(&app, "GET", &format!("/sessions/{id}/revisions/7/layout"), None).await;
    assert_eq!(st, StatusCode::NOT_FOUND);
    let (_, body) = call(&app, "GET", &format!("/sessions/{id}"), None).await;
    assert_eq!(parse(&body)["config"]["max_corners"], 6);
}

#[tokio::test(flavor = "multi_thread")]
async fn failed_compute_is_reported() {
    let app = router(AppState::default());
    let id = session(&app, &shapes::octasphere(2, 1.0)).await;
    let (st, _) = call(
        &app,
        "POST",
        &format!("/sessions/{id}/compute"),
        Some(json!({ "max_stretch": 0.0001, "max_depth": 0 })),
    )
    .await;
    assert_eq!(st, StatusCode::ACCEPTED);
    let s = wait(&app, &id).await;
    assert_eq!(s["state"], "failed");
    assert!(s["reason"].as_str().unwrap().contains("unsatisfiable"), "{s}");
    let (st, _) = call(&app, "POST", &format!("/sessions/{id}/compute"), Some(json!({ "max_corners": 2 }))).await;
    assert_eq!(st, StatusCode::BAD_REQUEST);
}

#[tokio::test(flavor = "multi_thread")]
async fn delete_cancels_session() {
    let app = router(AppState::default());
    let id = session(&app, &cylinder()).await;
    let (st, _) = call(&app, "POST", &format!("/sessions/{id}/compute"), None).await;
    assert_eq!(st, StatusCode::ACCEPTED);
    let (st, _) = call(&app, "DELETE", &format!("/sessions/{id}"), None).await;
    assert_eq!(st, StatusCode::NO_CONTENT);
    let (st, _) = call(&app, "GET", &format!("/sessions/{id}/status"), None).await;
    assert_eq!(st, StatusCode::NOT_FOUND);
}

/// Mesh vertices touched by cut edges in a layout document.
fn cut_vertices(layout: &Value) -> Vec<usize> {
    layout["cuts"]
        .as_array()
        .unwrap()
        .iter()
        .flat_map(|c| [c["a"].as_u64().unwrap() as usize, c["b"].as_u64().unwrap() as usize])
        .collect()
}

#[tokio::test(flavor = "multi_thread")]
async fn sketched_stroke_becomes_a_seam() {
    // odd row count so the mid height crosses face interiors
    let app = router(AppState::default());
    let mesh = shapes::tube(32, 11, 2.0, |_| 1.0);
    let id = session(&app, &mesh).await;
    // circumferential ring at mid height, through face interiors
    let mid = mesh.vertices().iter().map(|p| p.y).fold(f64::NEG_INFINITY, f64::max) * 0.5
        + mesh.vertices().iter().map(|p| p.y).fold(f64::INFINITY, f64::min) * 0.5;
    let confirm: Vec<usize> = (0..mesh.num_faces())
        .filter(|&f| {
            let ys: Vec<f64> = mesh.faces()[f].iter().map(|&v| mesh.vertices()[v].y).collect();
            ys.iter().cloned().fold(f64::INFINITY, f64::min) < mid && ys.iter().cloned().fold(f64::NEG_INFINITY, f64::max) > mid
        })
        .collect();
    let mut faces = confirm;
    let angle = |f: usize| {
        let c = mesh.centroid(f);
        c.z.atan2(c.x)
    };
    faces.sort_by(|a, b| angle(*a).total_cmp(&angle(*b)));
    let points: Vec<SurfacePoint> = faces.iter().map(|&f| SurfacePoint::new(f, [1.0 / 3.0; 3])).collect();
    let (st, _) = call(&app, "POST", &format!("/sessions/{id}/strokes"), Some(json!({ "points": points }))).await;
    assert_eq!(st, StatusCode::CREATED);
    let (st, _) = call(&app, "POST", &format!("/sessions/{id}/compute"), None).await;
    assert_eq!(st, StatusCode::ACCEPTED);
    assert_eq!(wait(&app, &id).await["state"], "idle");
    let (_, layout) = call(&app, "GET", &format!("/sessions/{id}/revisions/1/layout"), None).await;
    let cuts = cut_vertices(&parse(&layout));
    let h = mesh.mean_edge_length();
    for p in &points {
        let x = p.position(&mesh);
        let d = cuts.iter().map(|&v| (mesh.vertices()[v] - x).norm()).fold(f64::INFINITY, f64::min);
        assert!(d <= 2.0 * h, "stroke point {:?} is {d} from the nearest seam (h = {h})", p);
    }
}
