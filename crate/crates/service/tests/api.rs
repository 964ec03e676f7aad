use std::path::Path;
use std::time::Duration;

use amq_core::fixture::{concept_text, PlantedFixture, PlantedSpec};
use amq_core::report::ExportDocument;
use amq_service::{router, AppState, Corpus};
use axum::body::Body;
use axum::http::{Method, Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tempfile::TempDir;
use tower::ServiceExt;

fn fixture() -> PlantedFixture {
    PlantedSpec {
        queries: 4,
        narrow_per_query: 5,
        broad_per_query: 3,
        fillers: 30,
        dim: 32,
        ..Default::default()
    }
    .build()
}

fn open(f: &PlantedFixture, dir: &Path) -> AppState {
    let corpus = Corpus {
        dictionary: f.dictionary.clone(),
        store: f.store.clone(),
        probes: f.probes.clone(),
    };
    AppState::open(corpus, dir).unwrap()
}

struct Harness {
    fixture: PlantedFixture,
    dir: TempDir,
    state: AppState,
    app: Router,
}

impl Harness {
    fn new() -> Self {
        let fixture = fixture();
        let dir = TempDir::new().unwrap();
        let state = open(&fixture, dir.path());
        let app = router(state.clone(), None);
        Harness {
            fixture,
            dir,
            state,
            app,
        }
    }

    fn restart(&mut self) {
        self.state = open(&self.fixture, self.dir.path());
        self.app = router(self.state.clone(), None);
    }

    async fn raw(&self, method: Method, uri: &str, body: Option<String>) -> (StatusCode, Vec<u8>) {
        let req = Request::builder()
            .method(method)
            .uri(uri)
            .header("content-type", "application/json")
            .body(body.map(Body::from).unwrap_or_else(Body::empty))
            .unwrap();
        let resp = self.app.clone().oneshot(req).await.unwrap();
        let status = resp.status();
        let bytes = resp.into_body().collect().await.unwrap().to_bytes();
        (status, bytes.to_vec())
    }

    async fn call(&self, method: Method, uri: &str, body: Option<Value>) -> (StatusCode, Value) {
        let (status, bytes) = self.raw(method, uri, body.map(|b| b.to_string())).await;
        let v = if bytes.is_empty() {
            Value::Null
        } else {
            serde_json::from_slice(&bytes).unwrap_or(Value::Null)
        };
        (status, v)
    }

    async fn create(&self, terms: &[&str]) -> Value {
        let (s, v) = self
            .call(
                Method::POST,
                "/api/queries",
                Some(json!({ "terms": terms })),
            )
            .await;
        assert_eq!(s, StatusCode::CREATED, "{v}");
        v["session"].clone()
    }

    fn exact_name(&self) -> String {
        self.fixture
            .dictionary
            .get(self.fixture.members[1][0].0)
            .unwrap()
            .name
            .clone()
    }
}

fn retained_codes(session: &Value) -> Vec<u64> {
    session["result"]["all_scored"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|t| t["retained"].as_bool().unwrap())
        .map(|t| t["code"].as_u64().unwrap())
        .collect()
}

fn scores(session: &Value) -> Vec<f64> {
    session["result"]["all_scored"]
        .as_array()
        .unwrap()
        .iter()
        .map(|t| t["sim_best_pt"].as_f64().unwrap())
        .collect()
}

fn error_code(v: &Value) -> &str {
    v["error"]["code"].as_str().unwrap()
}

#[tokio::test]
async fn exact_term_query_ranks_itself_first() {
    let h = Harness::new();
    let s = h.create(&[&h.exact_name()]).await;
    let top = &s["result"]["all_scored"][0];
    assert_eq!(top["code"].as_u64().unwrap(), h.fixture.members[1][0].0 .0);
    assert!((top["sim_best_pt"].as_f64().unwrap() - 1.0).abs() < 1e-12);
    assert_eq!(top["rank"], 1);
    assert_eq!(s["status"], "open");
    assert_eq!(s["active_threshold"], s["result"]["decision"]["threshold"]);
    assert_eq!(
        s["result"]["all_scored"].as_array().unwrap().len(),
        h.fixture.dictionary.len()
    );
    let id = s["session_id"].as_str().unwrap();
    assert_eq!(id.len(), 22);
    assert!(id
        .bytes()
        .all(|b| b.is_ascii_alphanumeric() || b == b'-' || b == b'_'));
}

#[tokio::test]
async fn identical_queries_get_distinct_sessions() {
    let h = Harness::new();
    let a = h.create(&[&h.exact_name()]).await;
    let b = h.create(&[&h.exact_name()]).await;
    assert_ne!(a["session_id"], b["session_id"]);
    assert_eq!(a["result"], b["result"]);
}

#[tokio::test]
async fn free_text_query_uses_probe_table() {
    let h = Harness::new();
    let s = h.create(&[&concept_text(2)]).await;
    assert_eq!(s["result"]["matched_seeds"][0]["kind"], "semantic");
}

#[tokio::test]
async fn bad_query_bodies_are_rejected() {
    let h = Harness::new();
    let (s, v) = h
        .call(Method::POST, "/api/queries", Some(json!({ "terms": [] })))
        .await;
    assert_eq!(s, StatusCode::BAD_REQUEST);
    assert_eq!(error_code(&v), "bad_request");

    let (s, v) = h
        .call(
            Method::POST,
            "/api/queries",
            Some(json!({ "terms": ["x"], "config": { "lexical_cutof": 0.8 } })),
        )
        .await;
    assert_eq!(s, StatusCode::BAD_REQUEST);
    assert!(v["error"]["message"]
        .as_str()
        .unwrap()
        .contains("lexical_cutof"));

    let (s, _) = h
        .call(
            Method::POST,
            "/api/queries",
            Some(json!({ "terms": ["x"], "extra": 1 })),
        )
        .await;
    assert_eq!(s, StatusCode::BAD_REQUEST);

    let (s, _) = h
        .raw(Method::POST, "/api/queries", Some("{not json".into()))
        .await;
    assert_eq!(s, StatusCode::BAD_REQUEST);

    let (s, _) = h
        .call(
            Method::POST,
            "/api/queries",
            Some(json!({ "terms": ["  ?? "] })),
        )
        .await;
    assert_eq!(s, StatusCode::BAD_REQUEST);

    let (s, _) = h
        .call(
            Method::POST,
            "/api/queries",
            Some(json!({ "terms": ["x"], "config": { "semantic_top_k": 9 } })),
        )
        .await;
    assert_eq!(s, StatusCode::BAD_REQUEST);
}

#[tokio::test]
async fn unembeddable_term_is_422_with_stage() {
    let h = Harness::new();
    let (s, v) = h
        .call(
            Method::POST,
            "/api/queries",
            Some(json!({ "terms": ["qwzzkx"] })),
        )
        .await;
    assert_eq!(s, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(error_code(&v), "pipeline_error");
    assert_eq!(v["error"]["stage"], "match");
    assert!(v["error"]["message"].as_str().unwrap().contains("match"));
}

#[tokio::test]
async fn threshold_patch_rethresholds_without_rescoring() {
    let h = Harness::new();
    let s = h.create(&[&concept_text(0)]).await;
    let id = s["session_id"].as_str().unwrap();
    let uri = format!("/api/sessions/{id}/threshold");
    let original = retained_codes(&s);
    let original_t = s["active_threshold"].as_f64().unwrap();

    let seeds: Vec<u64> = s["result"]["matched_seeds"][0]["codes"]
        .as_array()
        .unwrap()
        .iter()
        .map(|c| c.as_u64().unwrap())
        .collect();
    assert_eq!(s["result"]["seeds_forced"], true);

    // above every score only the force-retained seeds remain
    let (st, high) = h
        .call(Method::PATCH, &uri, Some(json!({ "threshold": 1.0 })))
        .await;
    assert_eq!(st, StatusCode::OK);
    let high = &high["session"];
    assert!(scores(&s)[0] < 1.0);
    let mut kept = retained_codes(high);
    kept.sort();
    let mut expect = seeds.clone();
    expect.sort();
    assert_eq!(kept, expect);
    assert_eq!(high["result"]["decision"]["source"], "manual");
    assert_eq!(scores(high), scores(&s));

    let (_, low) = h
        .call(Method::PATCH, &uri, Some(json!({ "threshold": -1.0 })))
        .await;
    assert_eq!(
        retained_codes(&low["session"]).len(),
        h.fixture.dictionary.len()
    );
    let (_, back) = h
        .call(
            Method::PATCH,
            &uri,
            Some(json!({ "threshold": original_t })),
        )
        .await;
    assert_eq!(retained_codes(&back["session"]), original);
    assert_eq!(scores(&back["session"]), scores(&s));
}

#[tokio::test]
async fn threshold_patch_errors() {
    let h = Harness::new();
    let s = h.create(&[&h.exact_name()]).await;
    let id = s["session_id"].as_str().unwrap();
    let uri = format!("/api/sessions/{id}/threshold");
    for bad in [
        json!({ "threshold": 1.5 }),
        json!({ "threshold": -2 }),
        json!({ "t": 0.5 }),
        json!({}),
    ] {
        let (st, v) = h.call(Method::PATCH, &uri, Some(bad)).await;
        assert_eq!(st, StatusCode::BAD_REQUEST, "{v}");
    }
    let (st, v) = h
        .call(
            Method::PATCH,
            "/api/sessions/nope/threshold",
            Some(json!({ "threshold": 0.5 })),
        )
        .await;
    assert_eq!(st, StatusCode::NOT_FOUND);
    assert_eq!(error_code(&v), "not_found");
}

#[tokio::test]
async fn sequential_patches_last_write_wins() {
    let h = Harness::new();
    let s = h.create(&[&h.exact_name()]).await;
    let id = s["session_id"].as_str().unwrap();
    let uri = format!("/api/sessions/{id}/threshold");
    let (_, a) = h
        .call(Method::PATCH, &uri, Some(json!({ "threshold": 0.6 })))
        .await;
    let (_, b) = h
        .call(Method::PATCH, &uri, Some(json!({ "threshold": 0.7 })))
        .await;
    let ta: chrono::DateTime<chrono::Utc> =
        a["session"]["updated"].as_str().unwrap().parse().unwrap();
    let tb: chrono::DateTime<chrono::Utc> =
        b["session"]["updated"].as_str().unwrap().parse().unwrap();
    assert!(tb > ta);
    let (_, now) = h
        .call(Method::GET, &format!("/api/sessions/{id}"), None)
        .await;
    assert_eq!(now["session"]["active_threshold"], 0.7);
}

#[tokio::test]
async fn concurrent_mutations_are_serialized_per_session() {
    let h = Harness::new();
    let s = h.create(&[&h.exact_name()]).await;
    let id = s["session_id"].as_str().unwrap().to_string();
    let codes: Vec<u64> = s["result"]["all_scored"]
        .as_array()
        .unwrap()
        .iter()
        .take(20)
        .map(|t| t["code"].as_u64().unwrap())
        .collect();
    let mut tasks = Vec::new();
    for (i, code) in codes.iter().enumerate() {
        let app = h.app.clone();
        let state = if i % 2 == 0 { "excluded" } else { "included" };
        let req = Request::builder()
            .method(Method::PUT)
            .uri(format!("/api/sessions/{id}/decisions/{code}"))
            .body(Body::from(json!({ "state": state }).to_string()))
            .unwrap();
        tasks.push(tokio::spawn(async move {
            app.oneshot(req).await.unwrap().status()
        }));
    }
    for t in tasks {
        assert_eq!(t.await.unwrap(), StatusCode::OK);
    }
    let (_, v) = h
        .call(Method::GET, &format!("/api/sessions/{id}"), None)
        .await;
    assert_eq!(v["session"]["decisions"].as_object().unwrap().len(), 20);
    assert_eq!(v["session"]["counts"]["excluded"], 10);
    let stored: Value = serde_json::from_slice(&h.state.session_bytes(&id).unwrap()).unwrap();
    assert_eq!(stored["decisions"], v["session"]["decisions"]);
}

#[tokio::test]
async fn review_flow_and_finalize() {
    let h = Harness::new();
    let s = h.create(&[&concept_text(1)]).await;
    let id = s["session_id"].as_str().unwrap();
    let retained = retained_codes(&s);
    assert!(retained.len() >= 2);
    let excluded = retained[1];
    let below = s["result"]["all_scored"]
        .as_array()
        .unwrap()
        .iter()
        .find(|t| !t["retained"].as_bool().unwrap())
        .unwrap()["code"]
        .as_u64()
        .unwrap();

    let put = |code: u64, state: &str| {
        (
            format!("/api/sessions/{id}/decisions/{code}"),
            json!({ "state": state }),
        )
    };
    for (code, st) in [
        (excluded, "excluded"),
        (below, "included"),
        (retained[0], "excluded"),
        (retained[0], "undecided"),
    ] {
        let (uri, body) = put(code, st);
        let (status, _) = h.call(Method::PUT, &uri, Some(body)).await;
        assert_eq!(status, StatusCode::OK);
    }
    let (uri, _) = put(below, "");
    let (st, _) = h
        .call(Method::PUT, &uri, Some(json!({ "state": "maybe" })))
        .await;
    assert_eq!(st, StatusCode::BAD_REQUEST);
    let (st, _) = h
        .call(
            Method::PUT,
            &format!("/api/sessions/{id}/decisions/1"),
            Some(json!({ "state": "included" })),
        )
        .await;
    assert_eq!(st, StatusCode::NOT_FOUND);
    let (st, _) = h
        .call(
            Method::PUT,
            &format!("/api/sessions/{id}/decisions/abc"),
            Some(json!({ "state": "included" })),
        )
        .await;
    assert_eq!(st, StatusCode::NOT_FOUND);

    let (st, fin) = h
        .call(Method::POST, &format!("/api/sessions/{id}/finalize"), None)
        .await;
    assert_eq!(st, StatusCode::OK);
    let fin = &fin["session"];
    assert_eq!(fin["status"], "finalized");
    let final_codes: Vec<u64> = fin["final_codes"]
        .as_array()
        .unwrap()
        .iter()
        .map(|c| c.as_u64().unwrap())
        .collect();
    let mut expected: Vec<u64> = retained
        .iter()
        .copied()
        .filter(|&c| c != excluded)
        .collect();
    expected.push(below);
    let rank_of = |c: u64| {
        fin["result"]["all_scored"]
            .as_array()
            .unwrap()
            .iter()
            .position(|t| t["code"] == c)
            .unwrap()
    };
    expected.sort_by_key(|&c| rank_of(c));
    assert_eq!(final_codes, expected);

    // finalized sessions are immutable, byte for byte
    let before = h.state.session_bytes(id).unwrap();
    let attempts = [
        (
            Method::PATCH,
            format!("/api/sessions/{id}/threshold"),
            Some(json!({ "threshold": 0.1 })),
        ),
        (
            Method::PUT,
            put(below, "excluded").0,
            Some(json!({ "state": "excluded" })),
        ),
        (Method::POST, format!("/api/sessions/{id}/finalize"), None),
    ];
    for (m, uri, body) in attempts {
        let (st, v) = h.call(m, &uri, body).await;
        assert_eq!(st, StatusCode::CONFLICT);
        assert_eq!(error_code(&v), "session_finalized");
    }
    assert_eq!(h.state.session_bytes(id).unwrap(), before);

    // export holds exactly the final list, in rank order
    let (st, bytes) = h
        .raw(
            Method::GET,
            &format!("/api/sessions/{id}/export?format=json"),
            None,
        )
        .await;
    assert_eq!(st, StatusCode::OK);
    let doc: ExportDocument = serde_json::from_slice(&bytes).unwrap();
    let exported: Vec<u64> = doc.terms.iter().map(|t| t.code.0).collect();
    assert_eq!(exported, final_codes);
    assert_eq!(doc.to_json().into_bytes(), bytes);
    let (_, again) = h
        .raw(
            Method::GET,
            &format!("/api/sessions/{id}/export?format=json"),
            None,
        )
        .await;
    assert_eq!(again, bytes);
}

#[tokio::test]
async fn csv_export_is_rank_ordered_and_stable() {
    let h = Harness::new();
    let s = h.create(&[&concept_text(3)]).await;
    let id = s["session_id"].as_str().unwrap();
    h.call(
        Method::PATCH,
        &format!("/api/sessions/{id}/threshold"),
        Some(json!({ "threshold": 0.0 })),
    )
    .await;
    let uri = format!("/api/sessions/{id}/export?format=csv");
    let (st, body) = h.raw(Method::GET, &uri, None).await;
    assert_eq!(st, StatusCode::OK);
    let text = String::from_utf8(body.clone()).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "rank,code,name,score,retained");
    let mut prev = f64::INFINITY;
    for (i, line) in lines.enumerate() {
        let cells: Vec<&str> = line.split(',').collect();
        assert_eq!(cells[0], (i + 1).to_string());
        let score: f64 = cells[3].parse().unwrap();
        assert!((0.0..=1.0).contains(&score));
        assert!(score <= prev);
        prev = score;
    }
    assert_eq!(h.raw(Method::GET, &uri, None).await.1, body);

    let (st, _) = h
        .call(
            Method::GET,
            &format!("/api/sessions/{id}/export?format=xml"),
            None,
        )
        .await;
    assert_eq!(st, StatusCode::BAD_REQUEST);
    let (st, _) = h
        .call(Method::GET, "/api/sessions/missing/export?format=csv", None)
        .await;
    assert_eq!(st, StatusCode::NOT_FOUND);
}

#[tokio::test]
async fn sessions_survive_restart() {
    let mut h = Harness::new();
    let s = h.create(&[&concept_text(0)]).await;
    let id = s["session_id"].as_str().unwrap().to_string();
    let code = retained_codes(&s)[0];
    h.call(
        Method::PATCH,
        &format!("/api/sessions/{id}/threshold"),
        Some(json!({ "threshold": 0.42 })),
    )
    .await;
    h.call(
        Method::PUT,
        &format!("/api/sessions/{id}/decisions/{code}"),
        Some(json!({ "state": "excluded" })),
    )
    .await;
    let (_, before) = h
        .call(Method::GET, &format!("/api/sessions/{id}"), None)
        .await;
    let export_before = h
        .raw(
            Method::GET,
            &format!("/api/sessions/{id}/export?format=csv"),
            None,
        )
        .await;
    h.restart();
    let (st, after) = h
        .call(Method::GET, &format!("/api/sessions/{id}"), None)
        .await;
    assert_eq!(st, StatusCode::OK);
    assert_eq!(after, before);
    let export_after = h
        .raw(
            Method::GET,
            &format!("/api/sessions/{id}/export?format=csv"),
            None,
        )
        .await;
    assert_eq!(export_after, export_before);
}

#[tokio::test]
async fn dictionary_search() {
    let h = Harness::new();
    let name = h.exact_name();
    let (st, v) = h
        .call(
            Method::GET,
            &format!(
                "/api/dictionary/terms?q={}&limit=5",
                name.replace(' ', "%20")
            ),
            None,
        )
        .await;
    assert_eq!(st, StatusCode::OK);
    let terms = v["terms"].as_array().unwrap();
    assert_eq!(terms.len(), 5);
    assert_eq!(terms[0]["name"], name.as_str());
    assert_eq!(terms[0]["score"], 1.0);
    let s: Vec<f64> = terms.iter().map(|t| t["score"].as_f64().unwrap()).collect();
    assert!(s.windows(2).all(|w| w[0] >= w[1]));

    for uri in [
        "/api/dictionary/terms",
        "/api/dictionary/terms?q=",
        "/api/dictionary/terms?q=abc&limit=0",
        "/api/dictionary/terms?q=abc&limit=x",
        "/api/dictionary/terms?q=abc&sort=up",
    ] {
        let (st, _) = h.call(Method::GET, uri, None).await;
        assert_eq!(st, StatusCode::BAD_REQUEST, "{uri}");
    }
}

async fn wait_for_run(h: &Harness, id: &str) -> Value {
    for _ in 0..500 {
        let (st, v) = h
            .call(Method::GET, &format!("/api/eval/runs/{id}"), None)
            .await;
        assert_eq!(st, StatusCode::OK);
        if v["status"] != "running" {
            return v;
        }
        tokio::time::sleep(Duration::from_millis(20)).await;
    }
    panic!("eval run {id} did not finish");
}

#[tokio::test(flavor = "multi_thread", worker_threads = 2)]
async fn eval_runs_execute_in_background() {
    let mut h = Harness::new();
    let gold = h.dir.path().join("gold.json");
    std::fs::write(&gold, h.fixture.gold_json()).unwrap();

    let (st, v) = h
        .call(
            Method::POST,
            "/api/eval/runs",
            Some(json!({ "gold_path": gold })),
        )
        .await;
    assert_eq!(st, StatusCode::ACCEPTED, "{v}");
    assert_eq!(v["run"]["status"], "running");
    assert_eq!(v["run"]["artifacts"].as_array().unwrap().len(), 0);
    let id = v["run"]["run_id"].as_str().unwrap().to_string();
    let done = wait_for_run(&h, &id).await;
    assert_eq!(done["status"], "done", "{done}");
    let artifacts = done["artifacts"].as_array().unwrap();
    assert_eq!(artifacts.len(), 4);
    for a in artifacts {
        assert!(Path::new(a.as_str().unwrap()).is_file());
    }

    let (_, v) = h
        .call(
            Method::POST,
            "/api/eval/runs",
            Some(json!({ "gold_path": gold, "narrow_only": true, "grid": "0.5:0.9:0.05" })),
        )
        .await;
    let narrow_id = v["run"]["run_id"].as_str().unwrap().to_string();
    let done = wait_for_run(&h, &narrow_id).await;
    assert_eq!(done["artifacts"].as_array().unwrap().len(), 8);

    // identical inputs give identical report bytes
    let read = |v: &Value| -> Vec<Vec<u8>> {
        v["artifacts"]
            .as_array()
            .unwrap()
            .iter()
            .map(|a| std::fs::read(a.as_str().unwrap()).unwrap())
            .collect()
    };
    let first = read(&wait_for_run(&h, &id).await);
    assert_eq!(read(&done)[..4], first[..]);

    h.restart();
    let (st, v) = h
        .call(Method::GET, &format!("/api/eval/runs/{id}"), None)
        .await;
    assert_eq!((st, v["status"].as_str()), (StatusCode::OK, Some("done")));
}

#[tokio::test(flavor = "multi_thread", worker_threads = 2)]
async fn eval_run_failures() {
    let h = Harness::new();
    let (st, _) = h.call(Method::GET, "/api/eval/runs/unknown", None).await;
    assert_eq!(st, StatusCode::NOT_FOUND);

    let gold = h.dir.path().join("gold.json");
    std::fs::write(&gold, h.fixture.gold_json()).unwrap();
    for body in [
        json!({ "gold_path": h.dir.path().join("missing.json") }),
        json!({ "gold_path": gold, "grid": "0.5:0.9:0.07" }),
        json!({ "gold_path": gold, "bogus": true }),
        json!({ "gold_path": gold, "probes": h.dir.path().join("none.tsv") }),
    ] {
        let (st, v) = h.call(Method::POST, "/api/eval/runs", Some(body)).await;
        assert_eq!(st, StatusCode::BAD_REQUEST, "{v}");
    }

    // an empty probe table leaves free-text inputs unembeddable
    let probes = h.dir.path().join("empty.tsv");
    std::fs::write(&probes, "# nothing\n").unwrap();
    let (st, v) = h
        .call(
            Method::POST,
            "/api/eval/runs",
            Some(json!({ "gold_path": gold, "probes": probes })),
        )
        .await;
    assert_eq!(st, StatusCode::ACCEPTED);
    let done = wait_for_run(&h, v["run"]["run_id"].as_str().unwrap()).await;
    assert_eq!(done["status"], "failed");
    assert!(done["error"].as_str().unwrap().contains("match"));
    assert_eq!(done["artifacts"].as_array().unwrap().len(), 0);

    let bad_gold = h.dir.path().join("bad.json");
    std::fs::write(&bad_gold, "[{\"query_id\": 1}]").unwrap();
    let (_, v) = h
        .call(
            Method::POST,
            "/api/eval/runs",
            Some(json!({ "gold_path": bad_gold })),
        )
        .await;
    let done = wait_for_run(&h, v["run"]["run_id"].as_str().unwrap()).await;
    assert_eq!(done["status"], "failed");
}

#[tokio::test]
async fn unknown_routes_are_404() {
    let h = Harness::new();
    let (st, _) = h.call(Method::GET, "/api/sessions/nope", None).await;
    assert_eq!(st, StatusCode::NOT_FOUND);
    let (st, _) = h
        .call(Method::POST, "/api/sessions/nope/finalize", None)
        .await;
    assert_eq!(st, StatusCode::NOT_FOUND);
}
