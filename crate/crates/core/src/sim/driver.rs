use crate::audit::{AuditReport, AuditScope};
use crate::clock::ManualClock;
use crate::engine::{
    otp_from_message, AgencyView, CenterRegistered, CenterView, Engine, EngineError, OtpSessionStarted,
    RegistrationDraftIssued, SolveOutcome, VerificationPurpose,
};
use crate::ledger::Block;
use crate::registry::CitizenProfile;

use super::tamper::{inject_tamper, TamperEntry, TamperError, TamperSpec};

#[derive(Debug, thiserror::Error)]
pub enum DriverError {
    #[error("engine: {0}")]
    Engine(#[from] EngineError),
    #[error("remote returned {status}: {code}")]
    Remote { status: u16, code: String },
    #[error("transport: {0}")]
    Transport(String),
    #[error("tamper: {0}")]
    Tamper(#[from] TamperError),
    #[error("unsupported by this driver: {0}")]
    Unsupported(String),
}

impl DriverError {
    /// The API error code, when the failure came from the protocol itself.
    pub fn code(&self) -> Option<&str> {
        match self {
            DriverError::Engine(e) => Some(e.code()),
            DriverError::Remote { code, .. } => Some(code),
            _ => None,
        }
    }
}

/// The protocol surface a scenario needs. Implemented in-process over an
/// `Engine`, and over HTTP by the service crate.
pub trait Driver {
    fn create_agency(&mut self, agency_id: &str) -> Result<AgencyView, DriverError>;
    fn register_center(&mut self, name: &str, address: &str, pin: &str) -> Result<CenterRegistered, DriverError>;
    fn supply_stock(&mut self, center_id: &str, doses: u64) -> Result<CenterView, DriverError>;
    fn center(&mut self, center_id: &str) -> Result<CenterView, DriverError>;
    fn start_registration(&mut self, uuid: &str, phone: &str) -> Result<OtpSessionStarted, DriverError>;
    /// Read the OTP delivered for `session_id` from the simulated SMS outbox.
    fn read_otp(&mut self, session_id: &str) -> Result<String, DriverError>;
    fn verify_otp(&mut self, session_id: &str, otp: &str) -> Result<RegistrationDraftIssued, DriverError>;
    fn complete_registration(&mut self, token: &str, pin: &str, gender: &str) -> Result<CitizenProfile, DriverError>;
    fn create_identity_page(&mut self, secret_code: u32, pin: &str, center_id: &str) -> Result<String, DriverError>;
    fn solve_page(&mut self, suffix: &str, static_key: &str, secret_code: u32) -> Result<SolveOutcome, DriverError>;
    fn record_details(
        &mut self,
        draft_id: &str,
        vaccine_name: &str,
        vaccinator: &str,
        health_conditions: &str,
        center_static_key: &str,
    ) -> Result<String, DriverError>;
    /// Let simulated time pass, where the driver controls the clock.
    fn tick(&mut self, _secs: u64) {}
    fn flush(&mut self) -> Result<(), DriverError>;
    fn tamper(&mut self, spec: TamperSpec, seed: u64) -> Result<Vec<TamperEntry>, DriverError>;
    fn audit(&mut self) -> Result<AuditReport, DriverError>;
    fn blocks(&mut self) -> Result<Vec<Block>, DriverError>;
}

/// Drives an in-process engine on a manual clock.
pub struct LocalDriver {
    pub engine: Engine,
    pub clock: ManualClock,
}

impl Driver for LocalDriver {
    fn create_agency(&mut self, agency_id: &str) -> Result<AgencyView, DriverError> {
        Ok(self.engine.create_agency(agency_id)?)
    }

    fn register_center(&mut self, name: &str, address: &str, pin: &str) -> Result<CenterRegistered, DriverError> {
        Ok(self.engine.register_center(name, address, pin)?)
    }

    fn supply_stock(&mut self, center_id: &str, doses: u64) -> Result<CenterView, DriverError> {
        Ok(self.engine.supply_stock(center_id, doses)?)
    }

    fn center(&mut self, center_id: &str) -> Result<CenterView, DriverError> {
        self.engine.center_view(center_id).ok_or_else(|| EngineError::CenterNotRegistered(center_id.to_owned()).into())
    }

    fn start_registration(&mut self, uuid: &str, phone: &str) -> Result<OtpSessionStarted, DriverError> {
        Ok(self.engine.start_citizen_registration(uuid, phone)?)
    }

    fn read_otp(&mut self, session_id: &str) -> Result<String, DriverError> {
        self.engine
            .outbox_for_session(session_id)
            .and_then(|m| otp_from_message(&m.message))
            .map(str::to_owned)
            .ok_or_else(|| EngineError::UnknownSession.into())
    }

    fn verify_otp(&mut self, session_id: &str, otp: &str) -> Result<RegistrationDraftIssued, DriverError> {
        Ok(self.engine.verify_otp(session_id, otp)?)
    }

    fn complete_registration(&mut self, token: &str, pin: &str, gender: &str) -> Result<CitizenProfile, DriverError> {
        Ok(self.engine.complete_citizen_registration(token, pin, gender)?)
    }

    fn create_identity_page(&mut self, secret_code: u32, pin: &str, center_id: &str) -> Result<String, DriverError> {
        Ok(self.engine.create_verification_page(secret_code, pin, Some(center_id), VerificationPurpose::Identity)?)
    }

    fn solve_page(&mut self, suffix: &str, static_key: &str, secret_code: u32) -> Result<SolveOutcome, DriverError> {
        Ok(self.engine.solve_verification_page(suffix, static_key, secret_code)?)
    }

    fn record_details(
        &mut self,
        draft_id: &str,
        vaccine_name: &str,
        vaccinator: &str,
        health_conditions: &str,
        center_static_key: &str,
    ) -> Result<String, DriverError> {
        Ok(self.engine.record_vaccination_details(draft_id, vaccine_name, vaccinator, health_conditions, center_static_key)?)
    }

    fn tick(&mut self, secs: u64) {
        self.clock.advance(secs);
    }

    fn flush(&mut self) -> Result<(), DriverError> {
        self.engine.flush()?;
        Ok(())
    }

    fn tamper(&mut self, spec: TamperSpec, seed: u64) -> Result<Vec<TamperEntry>, DriverError> {
        Ok(inject_tamper(&mut self.engine, spec, seed)?)
    }

    fn audit(&mut self) -> Result<AuditReport, DriverError> {
        Ok(self.engine.run_audit(&AuditScope::All)?)
    }

    fn blocks(&mut self) -> Result<Vec<Block>, DriverError> {
        Ok(self.engine.chain().blocks().to_vec())
    }
}
