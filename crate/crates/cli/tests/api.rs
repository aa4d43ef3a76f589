mod common;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::Router;
use ebm_aml::data::{Record, Value};
use ebm_aml_cli::config::ServiceConfig;
use ebm_aml_cli::payload::{ImportancePayload, PredictionPayload, RecommendationPayload, TermPayload};
use ebm_aml_cli::service::{reload, router, AppState, Registry};
use http_body_util::BodyExt;
use serde_json::{json, Value as Json};
use tower::ServiceExt;

fn app(f: &common::Fixture, limit: usize) -> (Router, std::sync::Arc<AppState>) {
    let reg = Registry::from_models(vec![("clin_mut".into(), f.clin_mut.clone()), ("exp".into(), f.exp.clone())]);
    let state = AppState::new(reg);
    (router(state.clone(), limit), state)
}

async fn call(app: &Router, method: &str, uri: &str, body: Option<String>) -> (StatusCode, Json) {
    let req = Request::builder().method(method).uri(uri).header("content-type", "application/json");
    let req = req.body(body.map_or_else(Body::empty, Body::from)).unwrap();
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes();
    (status, serde_json::from_slice(&bytes).unwrap_or(Json::Null))
}

fn patient() -> Json {
    json!({
        "sample_id": "pt1",
        "features": {
            "diagnosis_age": 45, "bm_blast_pct": 60, "mutation_count": 2, "pb_blast_pct": 30, "wbc": 12.5,
            "gender": "female", "race_white": 1, "cytogenetic_info": "normal", "eln_risk": "favorable",
            "treatment_intensity": "regular", "TP53": 0, "PHF6": 0, "FLT3": 1, "NPM1": 1
        }
    })
}

#[tokio::test]
async fn health_and_models_list_registry() {
    let f = common::fixture();
    let (app, _) = app(&f, 4096);
    let (s, body) = call(&app, "GET", "/health", None).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(body["status"], "ok");
    let ids: Vec<&str> = body["models"].as_array().unwrap().iter().map(|m| m["model_id"].as_str().unwrap()).collect();
    assert_eq!(ids, ["clin_mut", "exp"]);
    assert_eq!(body["models"][0]["version_hash"], f.clin_mut.version_hash());

    let (s, body) = call(&app, "GET", "/models", None).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(body["default_model"], "clin_mut");
    assert_eq!(body["models"][1]["features"].as_array().unwrap().len(), f.exp.schema.len());
}

#[tokio::test]
async fn importance_and_terms() {
    let f = common::fixture();
    let (app, _) = app(&f, 4096);
    let (s, body) = call(&app, "GET", "/models/clin_mut/importance", None).await;
    assert_eq!(s, StatusCode::OK);
    let p: ImportancePayload = serde_json::from_value(body).unwrap();
    assert_eq!(p.version_hash, f.clin_mut.version_hash());
    assert_eq!(p.ranking.len(), f.clin_mut.schema.len());
    assert!(p.ranking.windows(2).all(|w| w[0].importance >= w[1].importance));

    let (s, body) = call(&app, "GET", "/models/clin_mut/term/TP53", None).await;
    assert_eq!(s, StatusCode::OK);
    let t: TermPayload = serde_json::from_value(body).unwrap();
    assert_eq!((t.kind.as_str(), t.points.len()), ("binary", 3));

    let (s, body) = call(&app, "GET", "/models/clin_mut/term/EXPG001", None).await;
    assert_eq!(s, StatusCode::NOT_FOUND);
    assert_eq!(body["model_id"], "clin_mut");
    let (s, body) = call(&app, "GET", "/models/nope/importance", None).await;
    assert_eq!(s, StatusCode::NOT_FOUND);
    assert_eq!(body["model_id"], "nope");
}

#[tokio::test]
async fn predict_matches_model_and_explains() {
    let f = common::fixture();
    let (app, _) = app(&f, 4096);
    let (s, body) = call(&app, "POST", "/models/clin_mut/predict", Some(patient().to_string())).await;
    assert_eq!(s, StatusCode::OK, "{body}");
    let p: PredictionPayload = serde_json::from_value(body).unwrap();
    let mut rec = Record::new();
    for (k, v) in patient()["features"].as_object().unwrap() {
        let v = match v {
            Json::String(s) => Value::Text(s.clone()),
            n => Value::Num(n.as_f64().unwrap()),
        };
        rec.insert(k.clone(), v);
    }
    assert_eq!(p.probability.to_bits(), f.clin_mut.predict_proba(&rec).to_bits());
    assert_eq!(p.explanation.reconstructed_logit().to_bits(), f.clin_mut.predict_logit(&rec).to_bits());
    assert_eq!(p.top_contributions.len(), 15.min(f.clin_mut.schema.len()));
    assert_eq!(p.explanation.contributions.len(), f.clin_mut.schema.len());
    assert_eq!(p.sample_id.as_deref(), Some("pt1"));
    assert!(p.warnings.is_empty());
}

#[tokio::test]
async fn first_visit_payload_warns_about_missing_features() {
    let f = common::fixture();
    let (app, _) = app(&f, 4096);
    let body = json!({ "features": { "diagnosis_age": 70, "treatment_intensity": "target", "cytogenetic_info": "t(6;9)" } });
    let (s, body) = call(&app, "POST", "/models/clin_mut/predict", Some(body.to_string())).await;
    assert_eq!(s, StatusCode::OK);
    let p: PredictionPayload = serde_json::from_value(body).unwrap();
    assert_eq!(p.warnings.len(), f.clin_mut.schema.len() - 2);
    assert!(p.warnings.iter().any(|w| w.field == "cytogenetic_info" && w.message.contains("not seen")));
    let exp_missing = serde_json::to_string(&p.warnings).unwrap();
    assert!(!exp_missing.contains("diagnosis_age"));
}

#[tokio::test]
async fn invalid_payloads_get_field_level_422() {
    let f = common::fixture();
    let (app, _) = app(&f, 4096);
    let mut bad = patient();
    bad["features"]["diagnosis_age"] = json!(17);
    bad["features"]["XIST"] = json!(2.0);
    bad["features"]["TP53"] = json!("yes");
    let (s, body) = call(&app, "POST", "/models/clin_mut/predict", Some(bad.to_string())).await;
    assert_eq!(s, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(body["version_hash"], f.clin_mut.version_hash());
    let mut fields: Vec<&str> = body["fields"].as_array().unwrap().iter().map(|e| e["field"].as_str().unwrap()).collect();
    fields.sort();
    assert_eq!(fields, ["TP53", "XIST", "diagnosis_age"]);

    for raw in ["{not json", "[1,2]", r#"{"features": 3}"#, r#"{"feature": {}}"#, r#"{"features": {"wbc": [1]}}"#] {
        let (s, body) = call(&app, "POST", "/models/clin_mut/predict", Some(raw.to_string())).await;
        assert_eq!(s, StatusCode::UNPROCESSABLE_ENTITY, "{raw}");
        assert!(!body["fields"].as_array().unwrap().is_empty());
    }
    let (s, _) = call(&app, "POST", "/models/nope/predict", Some(patient().to_string())).await;
    assert_eq!(s, StatusCode::NOT_FOUND);
}

#[tokio::test]
async fn oversized_body_is_413() {
    let f = common::fixture();
    let (app, _) = app(&f, 256);
    let mut big = patient();
    big["sample_id"] = json!("x".repeat(1000));
    let (s, _) = call(&app, "POST", "/models/clin_mut/predict", Some(big.to_string())).await;
    assert_eq!(s, StatusCode::PAYLOAD_TOO_LARGE);
}

#[tokio::test]
async fn recommend_returns_four_options() {
    let f = common::fixture();
    let (app, _) = app(&f, 4096);
    let (s, body) = call(&app, "POST", "/models/clin_mut/recommend", Some(patient().to_string())).await;
    assert_eq!(s, StatusCode::OK, "{body}");
    let r: RecommendationPayload = serde_json::from_value(body).unwrap();
    assert_eq!(r.recommendation.counterfactuals.len(), 4);
    assert_eq!(r.model_id, "clin_mut");
    let best = r.recommendation.counterfactuals.iter().map(|c| c.probability).fold(f64::MIN, f64::max);
    let chosen = r.recommendation.counterfactuals.iter().find(|c| c.treatment == r.recommendation.recommended).unwrap();
    assert_eq!(chosen.probability, best);

    // the EXP model carries the treatment column too
    let body = json!({ "features": { "EXPG001": 1.5 } });
    let (s, body) = call(&app, "POST", "/models/exp/recommend", Some(body.to_string())).await;
    assert_eq!(s, StatusCode::OK, "{body}");
}

#[tokio::test]
async fn reload_swaps_registry_atomically() {
    let f = common::fixture();
    let (app, state) = app(&f, 4096);
    let before = state.registry();
    let config = ServiceConfig::read(&f.path("service.kv")).unwrap();
    std::fs::write(f.path("service.kv"), "default_model = exp\nmodel.exp = models/exp.json\n").unwrap();
    reload(&state, &config);
    let (_, body) = call(&app, "GET", "/health", None).await;
    assert_eq!(body["models"].as_array().unwrap().len(), 1);
    assert_eq!(body["default_model"], "exp");
    // a snapshot taken before the swap still serves the old models
    assert!(before.get("clin_mut").is_some());

    // a broken config keeps the current registry
    std::fs::write(f.path("service.kv"), "model.exp = models/missing.json\ndefault_model = exp\n").unwrap();
    reload(&state, &config);
    let (s, _) = call(&app, "GET", "/models/exp/importance", None).await;
    assert_eq!(s, StatusCode::OK);
}
