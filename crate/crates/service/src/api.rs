//! JSON routes over the shared engine.

use axum::body::Bytes;
use axum::extract::rejection::{JsonRejection, QueryRejection};
use axum::extract::{FromRequest, Path, Query, Request, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use vaxledger_core::audit::AuditScope;
use vaxledger_core::clock::Timestamp;
use vaxledger_core::engine::{Engine, EngineError, ErrorClass, SharedEngine, VerificationPurpose};

#[derive(Clone)]
pub struct AppState {
    pub engine: SharedEngine,
    /// Enables `/test/outbox`.
    pub test_routes: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ApiError {
    pub status: StatusCode,
    pub code: String,
    pub detail: Option<String>,
}

impl ApiError {
    fn bad_request(detail: impl ToString) -> Self {
        ApiError { status: StatusCode::BAD_REQUEST, code: "invalid-request".into(), detail: Some(detail.to_string()) }
    }

    fn not_found() -> Self {
        ApiError { status: StatusCode::NOT_FOUND, code: "not-found".into(), detail: None }
    }

    fn internal(detail: impl ToString) -> Self {
        ApiError { status: StatusCode::INTERNAL_SERVER_ERROR, code: "internal".into(), detail: Some(detail.to_string()) }
    }
}

pub fn status_of(class: ErrorClass) -> StatusCode {
    match class {
        ErrorClass::BadRequest => StatusCode::BAD_REQUEST,
        ErrorClass::NotFound => StatusCode::NOT_FOUND,
        ErrorClass::Unauthorized => StatusCode::UNAUTHORIZED,
        ErrorClass::Conflict => StatusCode::CONFLICT,
        ErrorClass::Internal => StatusCode::INTERNAL_SERVER_ERROR,
    }
}

impl From<EngineError> for ApiError {
    fn from(e: EngineError) -> Self {
        let detail = matches!(e.class(), ErrorClass::BadRequest | ErrorClass::Internal).then(|| e.to_string());
        ApiError { status: status_of(e.class()), code: e.code().to_owned(), detail }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = match self.detail {
            Some(d) => json!({ "error": self.code, "detail": d }),
            None => json!({ "error": self.code }),
        };
        (self.status, Json(body)).into_response()
    }
}

/// JSON body whose parse failures answer 400 in the API error shape.
pub struct Body<T>(pub T);

impl<S, T> FromRequest<S> for Body<T>
where
    Json<T>: FromRequest<S, Rejection = JsonRejection>,
    S: Send + Sync,
{
    type Rejection = ApiError;

    async fn from_request(req: Request, state: &S) -> Result<Self, ApiError> {
        Json::<T>::from_request(req, state).await.map(|Json(v)| Body(v)).map_err(|e| ApiError::bad_request(e.body_text()))
    }
}

fn query<T: DeserializeOwned>(q: Result<Query<T>, QueryRejection>) -> Result<T, ApiError> {
    q.map(|Query(v)| v).map_err(|e| ApiError::bad_request(e.body_text()))
}

type ApiResult<T> = Result<Json<T>, ApiError>;

async fn write<T, F>(state: &AppState, f: F) -> Result<T, ApiError>
where
    T: Send + 'static,
    F: FnOnce(&mut Engine) -> Result<T, EngineError> + Send + 'static,
{
    let engine = state.engine.clone();
    tokio::task::spawn_blocking(move || f(&mut engine.write())).await.map_err(ApiError::internal)?.map_err(ApiError::from)
}

async fn read<T, F>(state: &AppState, f: F) -> Result<T, ApiError>
where
    T: Send + 'static,
    F: FnOnce(&Engine) -> Result<T, ApiError> + Send + 'static,
{
    let engine = state.engine.clone();
    tokio::task::spawn_blocking(move || f(&engine.read())).await.map_err(ApiError::internal)?
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/health", get(health))
        .route("/admin/agencies", post(create_agency))
        .route("/admin/centers/{id}/stock", post(supply_stock))
        .route("/centers/register", post(register_center))
        .route("/centers/{id}", get(center))
        .route("/citizens/register/start", post(start_registration))
        .route("/citizens/register/verify", post(verify_otp))
        .route("/citizens/register/complete", post(complete_registration))
        .route("/citizens/history", get(history))
        .route("/verify/pages", post(create_page))
        .route("/verify/pages/{suffix}", get(page))
        .route("/verify/pages/{suffix}/solve", post(solve_page))
        .route("/vaccinations/drafts/{id}/details", post(record_details))
        .route("/certificates/{id}", get(certificate))
        .route("/ledger/blocks", get(blocks))
        .route("/ledger/tx/{id}", get(transaction))
        .route("/audit/run", post(run_audit))
        .route("/test/outbox", get(outbox))
        .with_state(state)
}

async fn health() -> Json<Value> {
    Json(json!({ "status": "ok" }))
}

#[derive(Deserialize)]
struct CreateAgency {
    #[serde(rename = "agencyID")]
    agency_id: String,
}

async fn create_agency(State(s): State<AppState>, Body(b): Body<CreateAgency>) -> Result<Response, ApiError> {
    let view = write(&s, move |e| e.create_agency(&b.agency_id)).await?;
    Ok((StatusCode::CREATED, Json(view)).into_response())
}

#[derive(Deserialize)]
struct Stock {
    doses: u64,
}

async fn supply_stock(State(s): State<AppState>, Path(id): Path<String>, Body(b): Body<Stock>) -> ApiResult<impl Serialize> {
    if b.doses == 0 || b.doses > i64::MAX as u64 {
        return Err(ApiError::bad_request("doses must be positive"));
    }
    write(&s, move |e| e.supply_stock(&id, b.doses)).await.map(Json)
}

#[derive(Deserialize)]
struct RegisterCenter {
    #[serde(rename = "centerName")]
    center_name: String,
    address: String,
    #[serde(rename = "pinCode")]
    pin_code: String,
}

async fn register_center(State(s): State<AppState>, Body(b): Body<RegisterCenter>) -> Result<Response, ApiError> {
    let c = write(&s, move |e| e.register_center(&b.center_name, &b.address, &b.pin_code)).await?;
    Ok((StatusCode::CREATED, Json(c)).into_response())
}

async fn center(State(s): State<AppState>, Path(id): Path<String>) -> ApiResult<impl Serialize> {
    read(&s, move |e| e.center_view(&id).ok_or_else(|| EngineError::CenterNotRegistered(id).into())).await.map(Json)
}

#[derive(Deserialize)]
struct Start {
    uuid: String,
    phone: String,
}

async fn start_registration(State(s): State<AppState>, Body(b): Body<Start>) -> ApiResult<impl Serialize> {
    write(&s, move |e| e.start_citizen_registration(&b.uuid, &b.phone)).await.map(Json)
}

#[derive(Deserialize)]
struct VerifyOtp {
    #[serde(rename = "sessionID")]
    session_id: String,
    otp: String,
}

async fn verify_otp(State(s): State<AppState>, Body(b): Body<VerifyOtp>) -> ApiResult<impl Serialize> {
    write(&s, move |e| e.verify_otp(&b.session_id, &b.otp)).await.map(Json)
}

#[derive(Deserialize)]
struct Complete {
    token: String,
    pin: String,
    gender: String,
}

async fn complete_registration(State(s): State<AppState>, Body(b): Body<Complete>) -> ApiResult<impl Serialize> {
    write(&s, move |e| e.complete_citizen_registration(&b.token, &b.pin, &b.gender)).await.map(Json)
}

#[derive(Deserialize)]
struct Credential {
    #[serde(rename = "secretCode")]
    secret_code: u32,
    pin: String,
}

async fn history(State(s): State<AppState>, q: Result<Query<Credential>, QueryRejection>) -> ApiResult<Value> {
    let c = query(q)?;
    read(&s, move |e| Ok(json!({ "vaccinations": e.get_history(c.secret_code, &c.pin)? }))).await.map(Json)
}

#[derive(Deserialize)]
struct CreatePage {
    #[serde(rename = "secretCode")]
    secret_code: u32,
    pin: String,
    #[serde(rename = "centerID")]
    center_id: Option<String>,
    #[serde(default = "identity")]
    purpose: VerificationPurpose,
}

fn identity() -> VerificationPurpose {
    VerificationPurpose::Identity
}

async fn create_page(State(s): State<AppState>, Body(b): Body<CreatePage>) -> Result<Response, ApiError> {
    let view = write(&s, move |e| {
        let suffix = e.create_verification_page(b.secret_code, &b.pin, b.center_id.as_deref(), b.purpose)?;
        Ok(e.page_view(&suffix).expect("just created"))
    })
    .await?;
    Ok((StatusCode::CREATED, Json(view)).into_response())
}

async fn page(State(s): State<AppState>, Path(suffix): Path<String>) -> ApiResult<impl Serialize> {
    read(&s, move |e| e.page_view(&suffix).ok_or_else(|| EngineError::PageNotFound(suffix).into())).await.map(Json)
}

#[derive(Deserialize)]
struct Solve {
    #[serde(rename = "staticKey")]
    static_key: String,
    #[serde(rename = "secretCode")]
    secret_code: u32,
}

async fn solve_page(State(s): State<AppState>, Path(suffix): Path<String>, Body(b): Body<Solve>) -> ApiResult<impl Serialize> {
    write(&s, move |e| e.solve_verification_page(&suffix, &b.static_key, b.secret_code)).await.map(Json)
}

#[derive(Deserialize)]
struct Details {
    #[serde(rename = "vaccineName")]
    vaccine_name: String,
    vaccinator: String,
    #[serde(rename = "healthConditions")]
    health_conditions: String,
    #[serde(rename = "centerStaticKey")]
    center_static_key: String,
}

async fn record_details(State(s): State<AppState>, Path(id): Path<String>, Body(b): Body<Details>) -> Result<Response, ApiError> {
    let view = write(&s, move |e| {
        let suffix = e.record_vaccination_details(&id, &b.vaccine_name, &b.vaccinator, &b.health_conditions, &b.center_static_key)?;
        Ok(e.page_view(&suffix).expect("just created"))
    })
    .await?;
    Ok((StatusCode::CREATED, Json(view)).into_response())
}

async fn certificate(State(s): State<AppState>, Path(id): Path<String>) -> ApiResult<Value> {
    read(&s, move |e| {
        let (cert, agency_public_key) = e.issue_certificate(&id)?;
        Ok(json!({ "certificate": cert, "agencyPublicKey": agency_public_key }))
    })
    .await
    .map(Json)
}

pub const MAX_BLOCKS_PER_PAGE: u64 = 256;

#[derive(Deserialize)]
struct BlockRange {
    from: Option<u64>,
    to: Option<u64>,
}

/// Blocks `from..=to`, clipped to the tip and to a page of 256.
async fn blocks(State(s): State<AppState>, q: Result<Query<BlockRange>, QueryRejection>) -> ApiResult<Value> {
    let r = query(q)?;
    read(&s, move |e| {
        let chain = e.chain();
        let tip = chain.tip().header.height;
        let from = r.from.unwrap_or(0);
        let to = r.to.unwrap_or(tip).min(tip).min(from.saturating_add(MAX_BLOCKS_PER_PAGE - 1));
        if from > tip || from > to {
            return Ok(json!({ "height": tip, "blocks": [] }));
        }
        Ok(json!({ "height": tip, "blocks": &chain.blocks()[from as usize..=to as usize] }))
    })
    .await
    .map(Json)
}

async fn transaction(State(s): State<AppState>, Path(id): Path<String>) -> ApiResult<Value> {
    read(&s, move |e| {
        let (height, tx) = e.chain().get_transaction(&id).ok_or_else(ApiError::not_found)?;
        Ok(json!({ "blockHeight": height, "transaction": tx }))
    })
    .await
    .map(Json)
}

async fn run_audit(State(s): State<AppState>, body: Bytes) -> ApiResult<impl Serialize> {
    let scope: AuditScope = if body.iter().all(u8::is_ascii_whitespace) {
        AuditScope::All
    } else {
        serde_json::from_slice(&body).map_err(ApiError::bad_request)?
    };
    write(&s, move |e| e.run_audit(&scope)).await.map(Json)
}

/// Outbox entry as exposed to tests: the phone number stays server-side.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutboxView {
    #[serde(rename = "sessionID")]
    pub session_id: String,
    pub message: String,
    pub timestamp: Timestamp,
}

#[derive(Deserialize)]
struct OutboxQuery {
    #[serde(rename = "sessionID")]
    session_id: Option<String>,
}

async fn outbox(State(s): State<AppState>, q: Result<Query<OutboxQuery>, QueryRejection>) -> ApiResult<Value> {
    if !s.test_routes {
        return Err(ApiError::not_found());
    }
    let q = query(q)?;
    read(&s, move |e| {
        let messages: Vec<OutboxView> = e
            .outbox()
            .iter()
            .filter(|m| q.session_id.as_ref().is_none_or(|id| &m.session_id == id))
            .map(|m| OutboxView { session_id: m.session_id.clone(), message: m.message.clone(), timestamp: m.timestamp })
            .collect();
        Ok(json!({ "messages": messages }))
    })
    .await
    .map(Json)
}
