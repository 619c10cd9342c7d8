mod common;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use common::{codes, get, send, Fixture};

const TABLE: &str = "adapter_table = table.jsonl\n";

#[tokio::test]
async fn street_multimodal() {
    let fx = Fixture::new();
    let router = fx.router(TABLE);
    let (status, body) = get(&router, "/api/search?q=street&k=10&n=3").await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(codes(&body), ["25I141", "31D14", "34B11"]);
    let first = &body["notations"][0];
    assert_eq!((first["label"].as_str(), first["count"].as_u64()), (Some("street"), Some(8)));
    assert!(first["best_score"].as_f64().unwrap() > 0.9);
    assert!(first.get("score_sum").is_none());
    let hits = body["hits"].as_array().unwrap();
    assert_eq!(hits.len(), 10);
    assert!(hits[0]["uri"].as_str().unwrap().contains("street-"));
    for pair in hits.windows(2) {
        assert!(pair[0]["score"].as_f64() >= pair[1]["score"].as_f64());
    }
}

#[tokio::test]
async fn config_defaults_apply() {
    let fx = Fixture::new();
    let router = fx.router("adapter_table = table.jsonl\ndefault_k = 10\ndefault_n = 2\n");
    let (_, body) = get(&router, "/api/search?q=street").await;
    assert_eq!(body["hits"].as_array().unwrap().len(), 10);
    assert_eq!(codes(&body), ["25I141", "31D14"]);
}

#[tokio::test]
async fn tfidf_street() {
    let fx = Fixture::new();
    let router = fx.router("");
    let (status, body) = get(&router, "/api/search?q=street&mode=tfidf").await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(codes(&body)[0], "25I141");
    assert_eq!(body["notations"][0]["label"], "street");
    assert_eq!(body["notations"][0]["score"], 1.0);
    assert!(body.get("hits").is_none());
}

#[tokio::test]
async fn bad_parameters_are_400() {
    let fx = Fixture::new();
    let router = fx.router(TABLE);
    for uri in [
        "/api/search?q=",
        "/api/search",
        "/api/search?q=%20&mode=tfidf",
        "/api/search?q=street&mode=fuzzy",
        "/api/search?q=street&k=0",
        "/api/search?q=street&n=-1",
        "/api/search?q=street&k=ten",
        "/api/search?q=street&ranking=best",
    ] {
        let (status, body) = get(&router, uri).await;
        assert_eq!(status, StatusCode::BAD_REQUEST, "{uri}");
        assert!(body["error"].is_string(), "{uri}");
    }
}

#[tokio::test]
async fn unknown_table_key_is_422() {
    let fx = Fixture::new();
    let (status, body) = get(&fx.router(TABLE), "/api/search?q=cathedral").await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    assert!(body["error"].as_str().unwrap().contains("cathedral"));
}

#[tokio::test]
async fn no_encoder_is_503() {
    let fx = Fixture::new();
    let router = fx.router("");
    let (status, _) = get(&router, "/api/search?q=street").await;
    assert_eq!(status, StatusCode::SERVICE_UNAVAILABLE);
    let request = Request::post("/api/search/image").body(Body::from(vec![1u8; 64])).unwrap();
    assert_eq!(send(&router, request).await.0, StatusCode::SERVICE_UNAVAILABLE);
}

#[tokio::test]
async fn table_cannot_search_images() {
    let fx = Fixture::new();
    let request = Request::post("/api/search/image").body(Body::from(vec![1u8; 64])).unwrap();
    assert_eq!(send(&fx.router(TABLE), request).await.0, StatusCode::SERVICE_UNAVAILABLE);
}

#[tokio::test]
async fn oversize_image_is_413() {
    let fx = Fixture::new();
    let router = fx.router("encoder_endpoint = http://127.0.0.1:9/encode\n");
    let body = vec![0u8; 20 * 1024 * 1024];
    let request = Request::post("/api/search/image")
        .header("content-length", body.len())
        .body(Body::from(body))
        .unwrap();
    assert_eq!(send(&router, request).await.0, StatusCode::PAYLOAD_TOO_LARGE);
}

#[tokio::test]
async fn notation_lookup() {
    let fx = Fixture::new();
    let router = fx.router("");
    let (status, body) = get(&router, "/api/notations/25I141").await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body["label"], "street");
    assert_eq!(body["parent"], "25I14");
    assert_eq!(body["image_count"], 8);

    let (_, root) = get(&router, "/api/notations/2").await;
    assert!(root["parent"].is_null());
    assert_eq!(root["children"], serde_json::json!(["25"]));

    let (_, named) = get(&router, "/api/notations/11H(PAUL)").await;
    assert_eq!((named["label"].as_str(), named["parent"].as_str()), (Some("the apostle Paul"), Some("11H")));

    let (status, _) = get(&router, "/api/notations/99Z9").await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    let (status, _) = get(&router, "/api/notations/not%20a%20code").await;
    assert_eq!(status, StatusCode::NOT_FOUND);
}

#[tokio::test]
async fn notation_children() {
    let fx = Fixture::new();
    let router = fx.router("");
    let (status, body) = get(&router, "/api/notations/34B1/children").await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body["children"][0]["code"], "34B11");
    assert_eq!(body["children"][0]["label"], "dog");
    assert_eq!(body["children"][0]["image_count"], 9);
    assert_eq!(get(&router, "/api/notations/777/children").await.0, StatusCode::NOT_FOUND);
}

#[tokio::test]
async fn images_and_status() {
    let fx = Fixture::new();
    let router = fx.router(TABLE);
    let (status, body) = get(&router, "/api/images/street-01").await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body["id"], "street-01");
    assert_eq!(get(&router, "/api/images/nope").await.0, StatusCode::NOT_FOUND);

    let (_, status_body) = get(&router, "/api/status").await;
    assert_eq!(status_body["corpus"]["n_images"], 16);
    assert_eq!(status_body["encoder"], "precomputed-table");
    assert_eq!(status_body["image_search"], false);
    assert_eq!(get(&router, "/api/nothing").await.0, StatusCode::NOT_FOUND);
}

#[tokio::test]
async fn static_assets_at_root() {
    let fx = Fixture::new();
    let (status, body) = send(&fx.router(""), Request::get("/index.html").body(Body::empty()).unwrap()).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body, b"<h1>iconsearch</h1>");
}

#[tokio::test]
async fn ivf_full_probe_matches_flat() {
    let fx = Fixture::new();
    let flat = fx.router(TABLE);
    let ivf = fx.router("adapter_table = table.jsonl\nivf_partitions = 4\nseed = 7\n");
    let (_, a) = get(&flat, "/api/search?q=street&k=12").await;
    let (_, b) = get(&ivf, "/api/search?q=street&k=12&probe=4").await;
    assert_eq!(a, b);
    // Probe counts past the partition count clamp to a full scan.
    let (_, c) = get(&ivf, "/api/search?q=street&k=12&probe=50").await;
    assert_eq!(a, c);
}
