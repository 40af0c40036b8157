use serde::{Deserialize, Serialize};

use super::{Engine, EngineError};
use crate::clock::{age_in_years, Timestamp};
use crate::crypto::{
    generate_pseudo_uuid, generate_secret_code, generate_static_key, sha256_hex, Canonical, SecretCodeMode,
};
use crate::ledger::{new_transaction, EntityData, TxType};
use crate::registry::CitizenProfile;

const UNIQUE_CODE_RETRIES: u32 = 100_000;

/// Live OTP challenge. Holds the raw uuid and phone only until it is
/// consumed, expires or runs out of attempts.
#[derive(Debug, Clone)]
pub(crate) struct OtpSession {
    uuid: String,
    otp: String,
    expires_at: Timestamp,
    attempts_left: u32,
}

#[derive(Debug, Clone)]
pub(crate) struct RegistrationDraft {
    uuid: String,
    created_at: Timestamp,
}

/// Simulated SMS delivery.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutboxMessage {
    #[serde(rename = "sessionID")]
    pub session_id: String,
    pub phone: String,
    pub message: String,
    pub timestamp: Timestamp,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OtpSessionStarted {
    #[serde(rename = "sessionID")]
    pub session_id: String,
    #[serde(rename = "expiresAt")]
    pub expires_at: Timestamp,
    #[serde(rename = "attemptsLeft")]
    pub attempts_left: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RegistrationDraftIssued {
    pub token: String,
    #[serde(rename = "createdAt")]
    pub created_at: Timestamp,
}

pub(crate) fn otp_message(otp: &str) -> String {
    format!("Your vaccination portal OTP is {otp}")
}

impl Engine {
    fn identity_tag(uuid: &str) -> crate::crypto::HexDigest {
        sha256_hex(uuid.as_bytes())
    }

    pub fn start_citizen_registration(&mut self, uuid: &str, phone: &str) -> Result<OtpSessionStarted, EngineError> {
        let now = self.clock.now();
        self.sessions.retain(|_, s| s.expires_at > now);
        if self.directory.lookup(uuid).is_none() {
            return Err(EngineError::UnknownUuid);
        }
        if self.registered_identities.contains(&Self::identity_tag(uuid)) {
            return Err(EngineError::AlreadyRegistered);
        }
        let session_id = self.entropy.token_hex(16);
        let otp = self.entropy.digits(6);
        let session = OtpSession {
            uuid: uuid.to_owned(),
            otp: otp.clone(),
            expires_at: now.plus_secs(self.config.otp_ttl_secs),
            attempts_left: self.config.otp_attempts,
        };
        let started = OtpSessionStarted {
            session_id: session_id.clone(),
            expires_at: session.expires_at,
            attempts_left: session.attempts_left,
        };
        self.outbox.push(OutboxMessage {
            session_id: session_id.clone(),
            phone: phone.to_owned(),
            message: otp_message(&otp),
            timestamp: now,
        });
        self.sessions.insert(session_id, session);
        Ok(started)
    }

    pub fn verify_otp(&mut self, session_id: &str, otp: &str) -> Result<RegistrationDraftIssued, EngineError> {
        let now = self.clock.now();
        let session = self.sessions.get_mut(session_id).ok_or(EngineError::UnknownSession)?;
        if now >= session.expires_at {
            self.sessions.remove(session_id);
            return Err(EngineError::Expired);
        }
        if session.otp != otp {
            session.attempts_left -= 1;
            if session.attempts_left == 0 {
                self.sessions.remove(session_id);
                return Err(EngineError::AttemptsExhausted);
            }
            return Err(EngineError::WrongOtp);
        }
        let session = self.sessions.remove(session_id).expect("checked above");
        let token = self.entropy.token_hex(16);
        self.registration_drafts.insert(token.clone(), RegistrationDraft { uuid: session.uuid, created_at: now });
        Ok(RegistrationDraftIssued { token, created_at: now })
    }

    /// Derive the pseudonymous profile, persist it and emit the
    /// registration transaction. The raw uuid is dropped here.
    pub fn complete_citizen_registration(&mut self, token: &str, pin: &str, gender: &str) -> Result<CitizenProfile, EngineError> {
        let now = self.clock.now();
        let ttl = self.config.otp_ttl_secs;
        self.registration_drafts.retain(|_, d| d.created_at.plus_secs(ttl) > now);
        let draft = self.registration_drafts.get(token).ok_or(EngineError::InvalidToken)?;
        let region = self.regions.lookup(pin).ok_or_else(|| EngineError::UnmappedPin(pin.to_owned()))?.clone();
        let agency = self
            .registry
            .agency(&region.agency_id)
            .ok_or_else(|| EngineError::AgencyNotRegistered(region.agency_id.clone()))?;
        let (master_key, agency_keys) = (agency.master_key.clone(), agency.signing_keys.clone());
        let entry = self.directory.lookup(&draft.uuid).ok_or(EngineError::UnknownUuid)?;
        let age = age_in_years(entry.dob, now.date());
        let uuid = draft.uuid.clone();
        if self.registered_identities.contains(&Self::identity_tag(&uuid)) {
            self.registration_drafts.remove(token);
            return Err(EngineError::AlreadyRegistered);
        }

        let pseudo_uuid = loop {
            let p = generate_pseudo_uuid(&uuid, self.entropy.random_factor());
            if self.registry.citizen(&p).is_none() {
                break p;
            }
        };
        let static_key = generate_static_key(pseudo_uuid.as_str(), &master_key, self.entropy.random_factor());
        let secret_code = match self.config.secret_code_mode {
            SecretCodeMode::Faithful => generate_secret_code(&pseudo_uuid, pin, SecretCodeMode::Faithful, 0),
            SecretCodeMode::Unique => (0..UNIQUE_CODE_RETRIES)
                .map(|retry| generate_secret_code(&pseudo_uuid, pin, SecretCodeMode::Unique, retry))
                .find(|&code| !self.registry.secret_code_taken(code, pin))
                .ok_or_else(|| EngineError::SecretCodeSpaceExhausted(pin.to_owned()))?,
        };

        let profile = CitizenProfile {
            pseudo_uuid: pseudo_uuid.clone(),
            gender: gender.to_owned(),
            age,
            pin_code: pin.to_owned(),
            district: region.district,
            state: region.state,
            static_key,
            secret_code,
            doses_completed: 0,
            agency_id: region.agency_id,
            registration_tx_id: pseudo_uuid.to_string(),
        };
        let entity = EntityData::unit(
            agency_keys.address(),
            format!("pseudoUUID: {}, PINCode: {}", pseudo_uuid, pin),
            pseudo_uuid.to_string(),
            profile.canonical_digest(),
        );
        let tx = new_transaction(TxType::Registration, &agency_keys, entity, pseudo_uuid.to_string(), now)?;

        self.registry.insert_citizen(profile.clone())?;
        self.registration_drafts.remove(token);
        self.registered_identities.insert(Self::identity_tag(&uuid));
        self.emit(tx)?;
        Ok(profile)
    }

    /// Convenience for drivers that read the OTP from the simulated outbox.
    pub fn outbox_for_session(&self, session_id: &str) -> Option<&OutboxMessage> {
        self.outbox.iter().rev().find(|m| m.session_id == session_id)
    }
}

pub fn otp_from_message(message: &str) -> Option<&str> {
    message.rsplit(' ').next().filter(|s| s.len() == 6 && s.bytes().all(|b| b.is_ascii_digit()))
}
