#![allow(dead_code)]

use std::path::Path;

use axum::body::Body;
use axum::http::{Method, Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use serde_json::Value;
use tower::ServiceExt;

use vaxledger_core::engine::SharedEngine;
use vaxledger_core::registry::{IdentityDirectoryEntry, PinRegion};
use vaxledger_core::sim::{write_fixtures, ScenarioConfig, DIRECTORY_FILE, REGIONS_FILE};
use vaxledger_service::api::{router, AppState};
use vaxledger_service::config::{FixturePaths, ServiceConfig};

pub struct Fixture {
    pub config: ServiceConfig,
    pub population: Vec<IdentityDirectoryEntry>,
    pub regions: Vec<PinRegion>,
}

/// Seeded fixtures on disk plus a deterministic config that creates every agency.
pub fn fixture(dir: &Path, citizens: usize, agencies: usize, seed: u64) -> Fixture {
    let sc = ScenarioConfig { citizens, agencies, seed, ..ScenarioConfig::default() };
    let regions = sc.regions();
    let population = sc.population(&regions);
    write_fixtures(dir, &population, &regions).unwrap();
    let mut config = ServiceConfig::new(FixturePaths { directory: dir.join(DIRECTORY_FILE), regions: dir.join(REGIONS_FILE) });
    config.difficulty = 4;
    config.batch_size = 16;
    config.min_age = 12;
    config.deterministic_seed = Some(seed);
    let mut agencies: Vec<String> = regions.iter().map(|r| r.agency_id.clone()).collect();
    agencies.dedup();
    config.agencies = agencies;
    Fixture { config, population, regions }
}

pub fn app(config: &ServiceConfig) -> (Router, SharedEngine) {
    let engine = config.build_engine().unwrap().into_shared();
    (router(AppState { engine: engine.clone(), test_routes: config.deterministic_seed.is_some() }), engine)
}

pub async fn call(app: &Router, method: Method, path: &str, body: Option<Value>) -> (StatusCode, Value) {
    let req = Request::builder().method(method).uri(path);
    let req = match body {
        Some(b) => req.header("content-type", "application/json").body(Body::from(b.to_string())),
        None => req.body(Body::empty()),
    }
    .unwrap();
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes();
    let v = if bytes.is_empty() { Value::Null } else { serde_json::from_slice(&bytes).unwrap() };
    (status, v)
}

pub async fn get(app: &Router, path: &str) -> (StatusCode, Value) {
    call(app, Method::GET, path, None).await
}

pub async fn post(app: &Router, path: &str, body: Value) -> (StatusCode, Value) {
    call(app, Method::POST, path, Some(body)).await
}
