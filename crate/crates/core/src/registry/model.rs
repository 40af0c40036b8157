use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::clock::Timestamp;
use crate::crypto::{Canonical, CanonicalRecord, HexDigest, MasterKey, SigningKeypair, StaticKey};

/// Entry of the mock government identity directory. Lives only in the
/// fixture; nothing from it beyond gender and derived age/region is copied
/// into portal storage.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IdentityDirectoryEntry {
    pub uuid: String,
    pub name: String,
    pub dob: NaiveDate,
    pub phone: String,
    pub gender: String,
    pub pin: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PinRegion {
    pub pin: String,
    pub district: String,
    pub state: String,
    #[serde(rename = "stateCode")]
    pub state_code: String,
    #[serde(rename = "agencyID")]
    pub agency_id: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GovernmentAgency {
    #[serde(rename = "agencyID")]
    pub agency_id: String,
    pub region: Vec<String>,
    #[serde(rename = "masterKey")]
    pub master_key: MasterKey,
    #[serde(rename = "signingKeys")]
    pub signing_keys: SigningKeypair,
    #[serde(rename = "ledgerAddress")]
    pub ledger_address: HexDigest,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VaccinationCenter {
    #[serde(rename = "centerID")]
    pub center_id: String,
    #[serde(rename = "centerName")]
    pub center_name: String,
    pub address: String,
    #[serde(rename = "pinCode")]
    pub pin_code: String,
    pub district: String,
    pub state: String,
    #[serde(rename = "staticKey")]
    pub static_key: StaticKey,
    #[serde(rename = "agencyID")]
    pub agency_id: String,
    #[serde(rename = "signingKeys")]
    pub signing_keys: SigningKeypair,
    #[serde(rename = "dosesSupplied")]
    pub doses_supplied: u64,
    #[serde(rename = "dosesRemaining")]
    pub doses_remaining: u64,
}

impl VaccinationCenter {
    pub fn address_digest(&self) -> HexDigest {
        self.signing_keys.address()
    }
}

/// Pseudonymous citizen record. Holds no raw UUID, name, phone or date of
/// birth.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CitizenProfile {
    #[serde(rename = "pseudoUUID")]
    pub pseudo_uuid: HexDigest,
    pub gender: String,
    pub age: u32,
    #[serde(rename = "pinCode")]
    pub pin_code: String,
    pub district: String,
    pub state: String,
    #[serde(rename = "staticKey")]
    pub static_key: StaticKey,
    #[serde(rename = "secretCode")]
    pub secret_code: u32,
    #[serde(rename = "dosesCompleted")]
    pub doses_completed: u32,
    #[serde(rename = "agencyID")]
    pub agency_id: String,
    #[serde(rename = "registrationTxID")]
    pub registration_tx_id: String,
}

/// The memo hash covers the registration-time fields only; `dosesCompleted`
/// is reconciled against vaccination records instead.
impl Canonical for CitizenProfile {
    fn canonical_record(&self) -> CanonicalRecord {
        CanonicalRecord::new()
            .field("pseudoUUID", &self.pseudo_uuid)
            .field("gender", &self.gender)
            .field("age", self.age)
            .field("pinCode", &self.pin_code)
            .field("district", &self.district)
            .field("state", &self.state)
            .field("staticKey", &self.static_key)
            .field("secretCode", self.secret_code)
            .field("agencyID", &self.agency_id)
            .field("registrationTxID", &self.registration_tx_id)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VaccinationRecord {
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
    pub timestamp: Timestamp,
    #[serde(rename = "healthConditions")]
    pub health_conditions: String,
    #[serde(rename = "txID")]
    pub tx_id: String,
}

impl Canonical for VaccinationRecord {
    fn canonical_record(&self) -> CanonicalRecord {
        CanonicalRecord::new()
            .field("vaccinationID", &self.vaccination_id)
            .field("pseudoUUID", &self.pseudo_uuid)
            .field("centerID", &self.center_id)
            .field("doseNumber", self.dose_number)
            .field("vaccineName", &self.vaccine_name)
            .field("vaccinator", &self.vaccinator)
            .field("timestamp", self.timestamp)
            .field("healthConditions", &self.health_conditions)
            .field("txID", &self.tx_id)
    }
}

/// Which collection a tamper or lookup addresses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EntityKind {
    Agency,
    Center,
    Citizen,
    Vaccination,
}

impl EntityKind {
    pub fn key_field(self) -> &'static str {
        match self {
            EntityKind::Agency => "agencyID",
            EntityKind::Center => "centerID",
            EntityKind::Citizen => "pseudoUUID",
            EntityKind::Vaccination => "vaccinationID",
        }
    }
}

/// Filter for `query_citizens`; `None` fields match everything.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct CitizenFilter {
    pub district: Option<String>,
    pub state: Option<String>,
    pub min_age: Option<u32>,
    pub max_age: Option<u32>,
    #[serde(rename = "agencyID")]
    pub agency_id: Option<String>,
}

impl CitizenFilter {
    pub fn matches(&self, c: &CitizenProfile) -> bool {
        self.district.as_ref().is_none_or(|d| *d == c.district)
            && self.state.as_ref().is_none_or(|s| *s == c.state)
            && self.min_age.is_none_or(|a| c.age >= a)
            && self.max_age.is_none_or(|a| c.age <= a)
            && self.agency_id.as_ref().is_none_or(|a| *a == c.agency_id)
    }

    pub fn is_empty(&self) -> bool {
        *self == CitizenFilter::default()
    }
}
