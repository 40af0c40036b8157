//! Scenario driver that talks to a running service.

use reqwest::blocking::{Client, Response};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use vaxledger_core::audit::AuditReport;
use vaxledger_core::engine::{
    otp_from_message, AgencyView, CenterRegistered, CenterView, OtpSessionStarted, PageView, RegistrationDraftIssued,
    SolveOutcome,
};
use vaxledger_core::ledger::Block;
use vaxledger_core::registry::CitizenProfile;
use vaxledger_core::sim::{Driver, DriverError, TamperEntry, TamperSpec};

use crate::api::MAX_BLOCKS_PER_PAGE;

/// One recorded exchange: method, path and the response body text.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Exchange {
    pub method: String,
    pub path: String,
    pub status: u16,
    pub body: String,
}

pub struct HttpDriver {
    base: String,
    client: Client,
    record: bool,
    exchanges: Vec<Exchange>,
}

impl HttpDriver {
    pub fn new(base: &str) -> Self {
        HttpDriver { base: base.trim_end_matches('/').to_owned(), client: Client::new(), record: false, exchanges: Vec::new() }
    }

    /// Keep every response body for later inspection.
    pub fn recording(mut self) -> Self {
        self.record = true;
        self
    }

    pub fn exchanges(&self) -> &[Exchange] {
        &self.exchanges
    }

    fn finish<T: DeserializeOwned>(&mut self, method: &str, path: &str, resp: Result<Response, reqwest::Error>) -> Result<T, DriverError> {
        let resp = resp.map_err(|e| DriverError::Transport(e.to_string()))?;
        let status = resp.status().as_u16();
        let text = resp.text().map_err(|e| DriverError::Transport(e.to_string()))?;
        if self.record {
            self.exchanges.push(Exchange { method: method.into(), path: path.into(), status, body: text.clone() });
        }
        if !(200..300).contains(&status) {
            let code = serde_json::from_str::<Value>(&text)
                .ok()
                .and_then(|v| v.get("error").and_then(Value::as_str).map(str::to_owned))
                .unwrap_or(text);
            return Err(DriverError::Remote { status, code });
        }
        serde_json::from_str(&text).map_err(|e| DriverError::Transport(format!("{path}: {e}")))
    }

    fn get<T: DeserializeOwned>(&mut self, path: &str) -> Result<T, DriverError> {
        let resp = self.client.get(format!("{}{path}", self.base)).send();
        self.finish("GET", path, resp)
    }

    fn post<T: DeserializeOwned>(&mut self, path: &str, body: Value) -> Result<T, DriverError> {
        let resp = self.client.post(format!("{}{path}", self.base)).json(&body).send();
        self.finish("POST", path, resp)
    }
}

#[derive(Deserialize)]
struct Outbox {
    messages: Vec<OutboxEntry>,
}

#[derive(Deserialize)]
struct OutboxEntry {
    message: String,
}

#[derive(Deserialize)]
struct BlockPage {
    height: u64,
    blocks: Vec<Block>,
}

impl Driver for HttpDriver {
    fn create_agency(&mut self, agency_id: &str) -> Result<AgencyView, DriverError> {
        self.post("/admin/agencies", json!({ "agencyID": agency_id }))
    }

    fn register_center(&mut self, name: &str, address: &str, pin: &str) -> Result<CenterRegistered, DriverError> {
        self.post("/centers/register", json!({ "centerName": name, "address": address, "pinCode": pin }))
    }

    fn supply_stock(&mut self, center_id: &str, doses: u64) -> Result<CenterView, DriverError> {
        self.post(&format!("/admin/centers/{center_id}/stock"), json!({ "doses": doses }))
    }

    fn center(&mut self, center_id: &str) -> Result<CenterView, DriverError> {
        self.get(&format!("/centers/{center_id}"))
    }

    fn start_registration(&mut self, uuid: &str, phone: &str) -> Result<OtpSessionStarted, DriverError> {
        self.post("/citizens/register/start", json!({ "uuid": uuid, "phone": phone }))
    }

    fn read_otp(&mut self, session_id: &str) -> Result<String, DriverError> {
        let outbox: Outbox = self.get(&format!("/test/outbox?sessionID={session_id}"))?;
        outbox
            .messages
            .last()
            .and_then(|m| otp_from_message(&m.message))
            .map(str::to_owned)
            .ok_or_else(|| DriverError::Remote { status: 404, code: "unknown-session".into() })
    }

    fn verify_otp(&mut self, session_id: &str, otp: &str) -> Result<RegistrationDraftIssued, DriverError> {
        self.post("/citizens/register/verify", json!({ "sessionID": session_id, "otp": otp }))
    }

    fn complete_registration(&mut self, token: &str, pin: &str, gender: &str) -> Result<CitizenProfile, DriverError> {
        self.post("/citizens/register/complete", json!({ "token": token, "pin": pin, "gender": gender }))
    }

    fn create_identity_page(&mut self, secret_code: u32, pin: &str, center_id: &str) -> Result<String, DriverError> {
        let page: PageView = self.post(
            "/verify/pages",
            json!({ "secretCode": secret_code, "pin": pin, "centerID": center_id, "purpose": "identity" }),
        )?;
        Ok(page.suffix)
    }

    fn solve_page(&mut self, suffix: &str, static_key: &str, secret_code: u32) -> Result<SolveOutcome, DriverError> {
        self.post(&format!("/verify/pages/{suffix}/solve"), json!({ "staticKey": static_key, "secretCode": secret_code }))
    }

    fn record_details(
        &mut self,
        draft_id: &str,
        vaccine_name: &str,
        vaccinator: &str,
        health_conditions: &str,
        center_static_key: &str,
    ) -> Result<String, DriverError> {
        let page: PageView = self.post(
            &format!("/vaccinations/drafts/{draft_id}/details"),
            json!({
                "vaccineName": vaccine_name,
                "vaccinator": vaccinator,
                "healthConditions": health_conditions,
                "centerStaticKey": center_static_key,
            }),
        )?;
        Ok(page.suffix)
    }

    /// The service commits its pending pool as part of `POST /audit/run`.
    fn flush(&mut self) -> Result<(), DriverError> {
        Ok(())
    }

    fn tamper(&mut self, spec: TamperSpec, _seed: u64) -> Result<Vec<TamperEntry>, DriverError> {
        match spec {
            TamperSpec::None => Ok(Vec::new()),
            other => Err(DriverError::Unsupported(format!("tamper {other} needs direct store access"))),
        }
    }

    fn audit(&mut self) -> Result<AuditReport, DriverError> {
        self.post("/audit/run", json!({ "scope": "all" }))
    }

    fn blocks(&mut self) -> Result<Vec<Block>, DriverError> {
        let mut out = Vec::new();
        loop {
            let from = out.len() as u64;
            let page: BlockPage = self.get(&format!("/ledger/blocks?from={from}&to={}", from + MAX_BLOCKS_PER_PAGE - 1))?;
            let done = page.blocks.is_empty() || from + page.blocks.len() as u64 > page.height;
            out.extend(page.blocks);
            if done {
                return Ok(out);
            }
        }
    }
}
