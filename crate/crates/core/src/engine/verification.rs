use serde::{Deserialize, Serialize};

use super::{Engine, EngineError};
use crate::clock::Timestamp;
use crate::crypto::{
    decrypt_challenge, encrypt_challenge, generate_vaccination_id, sha256_hex, Canonical, CanonicalRecord,
    ChallengeNumber, HexDigest, Signature, SigningKeypair, StaticKey,
};
use crate::ledger::{new_transaction, EntityData, TxType};
use crate::registry::{CitizenProfile, VaccinationRecord};

const SUFFIX_LEN: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VerificationPurpose {
    Identity,
    Confirmation,
}

/// Dose details entered by the official, shown to the citizen on the
/// confirmation page before they sign off.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PendingVaccination {
    #[serde(rename = "draftID")]
    pub draft_id: String,
    #[serde(rename = "vaccinationID")]
    pub vaccination_id: String,
    #[serde(rename = "pseudoUUID")]
    pub pseudo_uuid: HexDigest,
    #[serde(rename = "centerID")]
    pub center_id: String,
    #[serde(rename = "doseNumber")]
    pub dose_number: u32,
    #[serde(rename = "vaccineName")]
    pub vaccine_name: String,
    pub vaccinator: String,
    #[serde(rename = "healthConditions")]
    pub health_conditions: String,
    pub timestamp: Timestamp,
    /// Keyed hash of the details under the center's static key.
    pub endorsement: HexDigest,
}

impl PendingVaccination {
    fn details_record(&self) -> CanonicalRecord {
        CanonicalRecord::new()
            .field("vaccinationID", &self.vaccination_id)
            .field("pseudoUUID", &self.pseudo_uuid)
            .field("centerID", &self.center_id)
            .field("doseNumber", self.dose_number)
            .field("vaccineName", &self.vaccine_name)
            .field("vaccinator", &self.vaccinator)
            .field("healthConditions", &self.health_conditions)
            .field("timestamp", self.timestamp)
    }
}

/// One-time, expiring challenge page addressed by a five-character suffix.
#[derive(Debug, Clone)]
pub struct VerificationPage {
    pub suffix: String,
    pub challenge_ciphertext: String,
    expected: ChallengeNumber,
    pub pseudo_uuid: HexDigest,
    pub center_id: Option<String>,
    pub purpose: VerificationPurpose,
    pub extra_data: Option<PendingVaccination>,
    pub expires_at: Timestamp,
    pub used: bool,
}

/// What the citizen's device (and the official) may see of a page.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PageView {
    pub suffix: String,
    pub purpose: VerificationPurpose,
    pub challenge: String,
    #[serde(rename = "centerID")]
    pub center_id: Option<String>,
    #[serde(rename = "expiresAt")]
    pub expires_at: Timestamp,
    pub used: bool,
    #[serde(rename = "extraData")]
    pub extra_data: Option<PendingVaccination>,
}

impl From<&VerificationPage> for PageView {
    fn from(p: &VerificationPage) -> Self {
        PageView {
            suffix: p.suffix.clone(),
            purpose: p.purpose,
            challenge: p.challenge_ciphertext.clone(),
            center_id: p.center_id.clone(),
            expires_at: p.expires_at,
            used: p.used,
            extra_data: p.extra_data.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VaccinationDraft {
    #[serde(rename = "draftID")]
    pub draft_id: String,
    #[serde(rename = "pseudoUUID")]
    pub pseudo_uuid: HexDigest,
    #[serde(rename = "centerID")]
    pub center_id: String,
    #[serde(rename = "doseNumber")]
    pub dose_number: u32,
    #[serde(rename = "createdAt")]
    pub created_at: Timestamp,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "kebab-case")]
pub enum SolveOutcome {
    IdentityVerified { draft: VaccinationDraft },
    ConfirmationAccepted { vaccination: VaccinationRecord },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Certificate {
    #[serde(rename = "vaccinationID")]
    pub vaccination_id: String,
    #[serde(rename = "pseudoUUID")]
    pub pseudo_uuid: HexDigest,
    #[serde(rename = "centerID")]
    pub center_id: String,
    #[serde(rename = "vaccineName")]
    pub vaccine_name: String,
    #[serde(rename = "doseNumber")]
    pub dose_number: u32,
    pub timestamp: Timestamp,
    #[serde(rename = "agencyID")]
    pub agency_id: String,
    pub signature: Signature,
}

impl Certificate {
    fn signing_record(&self) -> CanonicalRecord {
        CanonicalRecord::new()
            .field("vaccinationID", &self.vaccination_id)
            .field("pseudoUUID", &self.pseudo_uuid)
            .field("centerID", &self.center_id)
            .field("vaccineName", &self.vaccine_name)
            .field("doseNumber", self.dose_number)
            .field("timestamp", self.timestamp)
            .field("agencyID", &self.agency_id)
    }

    pub fn verify(&self, agency_public_key: &[u8; 32]) -> bool {
        SigningKeypair::verify(agency_public_key, &self.signing_record().to_bytes(), &self.signature)
    }
}

impl Engine {
    fn citizen_for(&self, secret_code: u32, pin: &str) -> Result<CitizenProfile, EngineError> {
        Ok(self.registry.lookup_citizen(secret_code, pin)?.clone())
    }

    fn open_page(
        &mut self,
        citizen: &CitizenProfile,
        center_id: Option<String>,
        purpose: VerificationPurpose,
        extra_data: Option<PendingVaccination>,
    ) -> String {
        let now = self.clock.now();
        let grace = self.config.page_ttl_secs;
        self.pages.retain(|_, p| p.expires_at.plus_secs(grace) > now);
        let suffix = loop {
            let s = self.entropy.alphanumeric_lower(SUFFIX_LEN);
            let live = self.pages.get(&s).is_some_and(|p| !p.used && p.expires_at > now);
            if !live {
                break s;
            }
        };
        let expected = ChallengeNumber::random(self.entropy.rng());
        let page = VerificationPage {
            suffix: suffix.clone(),
            challenge_ciphertext: encrypt_challenge(expected, &citizen.static_key),
            expected,
            pseudo_uuid: citizen.pseudo_uuid.clone(),
            center_id,
            purpose,
            extra_data,
            expires_at: now.plus_secs(self.config.page_ttl_secs),
            used: false,
        };
        self.pages.insert(suffix.clone(), page);
        suffix
    }

    /// Open an identity-verification page for the citizen holding
    /// (`secret_code`, `pin`) at `center_id`. Returns the page suffix.
    pub fn create_verification_page(
        &mut self,
        secret_code: u32,
        pin: &str,
        center_id: Option<&str>,
        purpose: VerificationPurpose,
    ) -> Result<String, EngineError> {
        let citizen = self.citizen_for(secret_code, pin)?;
        if purpose == VerificationPurpose::Confirmation {
            return Err(EngineError::InvalidInput(
                "confirmation pages are opened by recording vaccination details".into(),
            ));
        }
        let center_id = center_id.ok_or_else(|| EngineError::InvalidInput("centerID is required".into()))?;
        if self.registry.center(center_id).is_none() {
            return Err(EngineError::CenterNotRegistered(center_id.to_owned()));
        }
        Ok(self.open_page(&citizen, Some(center_id.to_owned()), purpose, None))
    }

    pub fn page_view(&self, suffix: &str) -> Option<PageView> {
        self.pages.get(suffix).map(PageView::from)
    }

    /// Check the submitted static key against the page challenge. A page
    /// takes exactly one attempt, successful or not.
    pub fn solve_verification_page(&mut self, suffix: &str, static_key: &str, secret_code: u32) -> Result<SolveOutcome, EngineError> {
        let now = self.clock.now();
        let page = self.pages.get_mut(suffix).ok_or_else(|| EngineError::PageNotFound(suffix.to_owned()))?;
        if page.used {
            return Err(EngineError::PageUsed);
        }
        page.used = true;
        if now >= page.expires_at {
            return Err(EngineError::PageExpired);
        }
        let page = page.clone();
        let citizen = self.registry.citizen(&page.pseudo_uuid).cloned().ok_or(EngineError::CitizenNotFound)?;
        let key = StaticKey::parse(static_key).map_err(|_| EngineError::VerificationFailed)?;
        let solved = decrypt_challenge(&page.challenge_ciphertext, &key).ok() == Some(page.expected);
        if !solved || secret_code != citizen.secret_code {
            return Err(EngineError::VerificationFailed);
        }
        match page.purpose {
            VerificationPurpose::Identity => {
                let center_id = page.center_id.expect("identity pages name a center");
                self.open_vaccination_draft(&citizen, &center_id).map(|draft| SolveOutcome::IdentityVerified { draft })
            }
            VerificationPurpose::Confirmation => {
                let pending = page.extra_data.expect("confirmation pages carry details");
                self.confirm_vaccination(&pending).map(|vaccination| SolveOutcome::ConfirmationAccepted { vaccination })
            }
        }
    }

    fn open_vaccination_draft(&mut self, citizen: &CitizenProfile, center_id: &str) -> Result<VaccinationDraft, EngineError> {
        let doses = self.registry.count_doses(&citizen.pseudo_uuid);
        if doses >= self.config.max_doses {
            return Err(EngineError::CompletelyVaccinated);
        }
        if citizen.age < self.config.min_age {
            return Err(EngineError::Ineligible(self.config.min_age));
        }
        let center = self.registry.center(center_id).ok_or_else(|| EngineError::CenterNotRegistered(center_id.to_owned()))?;
        if center.doses_remaining == 0 {
            return Err(EngineError::InsufficientStock(center_id.to_owned()));
        }
        let draft = VaccinationDraft {
            draft_id: self.entropy.token_hex(12),
            pseudo_uuid: citizen.pseudo_uuid.clone(),
            center_id: center_id.to_owned(),
            dose_number: doses + 1,
            created_at: self.clock.now(),
        };
        self.vaccination_drafts.insert(draft.draft_id.clone(), draft.clone());
        Ok(draft)
    }

    /// Attach the official's dose details to a draft and open the citizen's
    /// confirmation page. Returns the confirmation suffix.
    pub fn record_vaccination_details(
        &mut self,
        draft_id: &str,
        vaccine_name: &str,
        vaccinator: &str,
        health_conditions: &str,
        center_static_key: &str,
    ) -> Result<String, EngineError> {
        let draft = self.vaccination_drafts.get(draft_id).cloned().ok_or(EngineError::UnknownDraft)?;
        let center = self
            .registry
            .center(&draft.center_id)
            .ok_or_else(|| EngineError::CenterNotRegistered(draft.center_id.clone()))?;
        if center.static_key.as_str() != center_static_key {
            return Err(EngineError::CenterKeyMismatch);
        }
        let center_key = center.static_key.clone();
        let citizen = self.registry.citizen(&draft.pseudo_uuid).cloned().ok_or(EngineError::CitizenNotFound)?;
        let mut pending = PendingVaccination {
            draft_id: draft.draft_id.clone(),
            vaccination_id: generate_vaccination_id(&draft.pseudo_uuid, draft.dose_number, &draft.center_id),
            pseudo_uuid: draft.pseudo_uuid.clone(),
            center_id: draft.center_id.clone(),
            dose_number: draft.dose_number,
            vaccine_name: vaccine_name.to_owned(),
            vaccinator: vaccinator.to_owned(),
            health_conditions: health_conditions.to_owned(),
            timestamp: self.clock.now(),
            endorsement: HexDigest::zero(),
        };
        let mut keyed = pending.details_record().to_bytes();
        keyed.extend_from_slice(center_key.as_str().as_bytes());
        pending.endorsement = sha256_hex(&keyed);
        Ok(self.open_page(&citizen, None, VerificationPurpose::Confirmation, Some(pending)))
    }

    fn confirm_vaccination(&mut self, pending: &PendingVaccination) -> Result<VaccinationRecord, EngineError> {
        if !self.vaccination_drafts.contains_key(&pending.draft_id) {
            return Err(EngineError::UnknownDraft);
        }
        let doses = self.registry.count_doses(&pending.pseudo_uuid);
        if doses >= self.config.max_doses {
            return Err(EngineError::CompletelyVaccinated);
        }
        if pending.dose_number != doses + 1 {
            self.vaccination_drafts.remove(&pending.draft_id);
            return Err(EngineError::StaleDraft);
        }
        let center_keys = self
            .registry
            .center(&pending.center_id)
            .map(|c| c.signing_keys.clone())
            .ok_or_else(|| EngineError::CenterNotRegistered(pending.center_id.clone()))?;

        self.adjust_stock(&pending.center_id, -1)?;
        let record = VaccinationRecord {
            vaccination_id: pending.vaccination_id.clone(),
            pseudo_uuid: pending.pseudo_uuid.clone(),
            center_id: pending.center_id.clone(),
            dose_number: pending.dose_number,
            vaccine_name: pending.vaccine_name.clone(),
            vaccinator: pending.vaccinator.clone(),
            timestamp: pending.timestamp,
            health_conditions: pending.health_conditions.clone(),
            tx_id: pending.vaccination_id.clone(),
        };
        let entity = EntityData::unit(
            center_keys.address(),
            format!("citizenPseudoUUID: {}, centerID: {}", record.pseudo_uuid, record.center_id),
            record.vaccination_id.clone(),
            record.canonical_digest(),
        );
        let tx = new_transaction(TxType::Vaccination, &center_keys, entity, record.vaccination_id.clone(), self.clock.now())?;
        self.registry.insert_vaccination(record.clone())?;
        self.registry.set_doses_completed(&record.pseudo_uuid, record.dose_number)?;
        self.vaccination_drafts.remove(&pending.draft_id);
        self.emit(tx)?;
        Ok(record)
    }

    /// Agency-signed certificate for a recorded dose. Deterministic, so
    /// repeated fetches return identical bytes.
    pub fn issue_certificate(&self, vaccination_id: &str) -> Result<(Certificate, String), EngineError> {
        let record = self
            .registry
            .vaccination(vaccination_id)
            .ok_or_else(|| EngineError::VaccinationNotFound(vaccination_id.to_owned()))?;
        let citizen = self.registry.citizen(&record.pseudo_uuid).ok_or(EngineError::CitizenNotFound)?;
        let agency = self
            .registry
            .agency(&citizen.agency_id)
            .ok_or_else(|| EngineError::AgencyNotRegistered(citizen.agency_id.clone()))?;
        let mut cert = Certificate {
            vaccination_id: record.vaccination_id.clone(),
            pseudo_uuid: record.pseudo_uuid.clone(),
            center_id: record.center_id.clone(),
            vaccine_name: record.vaccine_name.clone(),
            dose_number: record.dose_number,
            timestamp: record.timestamp,
            agency_id: agency.agency_id.clone(),
            signature: Signature([0; 64]),
        };
        cert.signature = agency.signing_keys.sign(&cert.signing_record().to_bytes());
        Ok((cert, hex::encode(agency.signing_keys.public_key())))
    }

    pub fn get_history(&self, secret_code: u32, pin: &str) -> Result<Vec<VaccinationRecord>, EngineError> {
        let citizen = self.registry.lookup_citizen(secret_code, pin)?;
        Ok(self.registry.vaccinations_of(&citizen.pseudo_uuid).into_iter().cloned().collect())
    }
}
