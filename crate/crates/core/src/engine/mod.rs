//! The registration, identity-verification and vaccination-confirmation
//! protocol. Every committed state change emits exactly one ledger
//! transaction: one per completed registration, one per confirmed dose.

mod error;
mod registration;
mod verification;

pub use error::{EngineError, ErrorClass};
pub use registration::{otp_from_message, OutboxMessage, OtpSessionStarted, RegistrationDraftIssued};
pub use verification::{
    Certificate, PageView, PendingVaccination, SolveOutcome, VaccinationDraft, VerificationPage,
    VerificationPurpose,
};

use std::collections::{HashMap, HashSet};
use std::path::Path;
use std::sync::Arc;

use parking_lot::RwLock;
use serde::{Deserialize, Serialize};

use crate::clock::{Clock, SystemClock, Timestamp};
use crate::crypto::{HexDigest, MasterKey, SecretCodeMode, SigningKeypair};
use crate::entropy::Entropy;
use crate::ledger::{AccountData, AccountType, Chain, LedgerTransaction, DOSE_ASSET};
use crate::registry::{
    GovernmentAgency, IdentityDirectory, RegionTable, Registry, RegistryError, VaccinationCenter,
};

/// Engine handle shared between request handlers: many readers, one writer.
pub type SharedEngine = Arc<RwLock<Engine>>;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", default)]
pub struct EngineConfig {
    pub difficulty: u32,
    pub batch_size: usize,
    pub max_doses: u32,
    pub min_age: u32,
    pub secret_code_mode: SecretCodeMode,
    pub page_ttl_secs: u64,
    pub otp_ttl_secs: u64,
    pub otp_attempts: u32,
}

impl Default for EngineConfig {
    fn default() -> Self {
        EngineConfig {
            difficulty: 8,
            batch_size: 16,
            max_doses: 2,
            min_age: 18,
            secret_code_mode: SecretCodeMode::Unique,
            page_ttl_secs: 300,
            otp_ttl_secs: 300,
            otp_attempts: 3,
        }
    }
}

impl EngineConfig {
    pub const MAX_DIFFICULTY: u32 = 24;

    pub fn validate(&self) -> Result<(), EngineError> {
        let bad = |m: &str| Err(EngineError::InvalidInput(m.to_owned()));
        if self.difficulty > Self::MAX_DIFFICULTY {
            return bad("difficulty must be at most 24");
        }
        if self.page_ttl_secs == 0 || self.otp_ttl_secs == 0 {
            return bad("TTLs must be positive");
        }
        if self.batch_size == 0 || self.max_doses == 0 || self.otp_attempts == 0 {
            return bad("batch size, dose cap and OTP attempts must be positive");
        }
        Ok(())
    }
}

/// Public view of an agency; never carries the master key.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AgencyView {
    #[serde(rename = "agencyID")]
    pub agency_id: String,
    pub region: Vec<String>,
    #[serde(rename = "ledgerAddress")]
    pub ledger_address: HexDigest,
    #[serde(rename = "publicKey")]
    pub public_key: String,
}

impl From<&GovernmentAgency> for AgencyView {
    fn from(a: &GovernmentAgency) -> Self {
        AgencyView {
            agency_id: a.agency_id.clone(),
            region: a.region.clone(),
            ledger_address: a.ledger_address.clone(),
            public_key: hex::encode(a.signing_keys.public_key()),
        }
    }
}

/// Public view of a center: no static key, no signing seed.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CenterView {
    #[serde(rename = "centerID")]
    pub center_id: String,
    #[serde(rename = "centerName")]
    pub center_name: String,
    pub address: String,
    #[serde(rename = "pinCode")]
    pub pin_code: String,
    pub district: String,
    pub state: String,
    #[serde(rename = "agencyID")]
    pub agency_id: String,
    #[serde(rename = "ledgerAddress")]
    pub ledger_address: HexDigest,
    #[serde(rename = "dosesSupplied")]
    pub doses_supplied: u64,
    #[serde(rename = "dosesRemaining")]
    pub doses_remaining: u64,
}

impl From<&VaccinationCenter> for CenterView {
    fn from(c: &VaccinationCenter) -> Self {
        CenterView {
            center_id: c.center_id.clone(),
            center_name: c.center_name.clone(),
            address: c.address.clone(),
            pin_code: c.pin_code.clone(),
            district: c.district.clone(),
            state: c.state.clone(),
            agency_id: c.agency_id.clone(),
            ledger_address: c.address_digest(),
            doses_supplied: c.doses_supplied,
            doses_remaining: c.doses_remaining,
        }
    }
}

/// Returned once, at center registration: the only time the center's
/// static key leaves the engine.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CenterRegistered {
    #[serde(flatten)]
    pub center: CenterView,
    #[serde(rename = "staticKey")]
    pub static_key: String,
}

#[derive(Debug)]
pub struct Engine {
    config: EngineConfig,
    registry: Registry,
    directory: IdentityDirectory,
    regions: RegionTable,
    chain: Chain,
    pending: Vec<LedgerTransaction>,
    sessions: HashMap<String, registration::OtpSession>,
    registration_drafts: HashMap<String, registration::RegistrationDraft>,
    pages: HashMap<String, VerificationPage>,
    vaccination_drafts: HashMap<String, VaccinationDraft>,
    outbox: Vec<OutboxMessage>,
    /// SHA-256 of every uuid that completed registration; consulted only
    /// to refuse a second registration.
    registered_identities: HashSet<HexDigest>,
    entropy: Entropy,
    clock: Arc<dyn Clock>,
}

impl Engine {
    pub fn new(
        config: EngineConfig,
        directory: IdentityDirectory,
        regions: RegionTable,
        entropy: Entropy,
        clock: Arc<dyn Clock>,
    ) -> Result<Self, EngineError> {
        config.validate()?;
        let chain = Chain::genesis(config.difficulty, clock.now());
        Ok(Engine {
            config,
            registry: Registry::new(),
            directory,
            regions,
            chain,
            pending: Vec::new(),
            sessions: HashMap::new(),
            registration_drafts: HashMap::new(),
            pages: HashMap::new(),
            vaccination_drafts: HashMap::new(),
            outbox: Vec::new(),
            registered_identities: HashSet::new(),
            entropy,
            clock,
        })
    }

    /// Secure randomness and the system clock.
    pub fn with_defaults(config: EngineConfig, directory: IdentityDirectory, regions: RegionTable) -> Result<Self, EngineError> {
        Self::new(config, directory, regions, Entropy::secure(), Arc::new(SystemClock))
    }

    pub fn into_shared(self) -> SharedEngine {
        Arc::new(RwLock::new(self))
    }

    pub fn config(&self) -> &EngineConfig {
        &self.config
    }

    pub fn registry(&self) -> &Registry {
        &self.registry
    }

    pub fn chain(&self) -> &Chain {
        &self.chain
    }

    pub fn regions(&self) -> &RegionTable {
        &self.regions
    }

    pub fn directory(&self) -> &IdentityDirectory {
        &self.directory
    }

    pub fn pending(&self) -> &[LedgerTransaction] {
        &self.pending
    }

    pub fn outbox(&self) -> &[OutboxMessage] {
        &self.outbox
    }

    pub fn is_deterministic(&self) -> bool {
        self.entropy.is_deterministic()
    }

    pub fn now(&self) -> Timestamp {
        self.clock.now()
    }

    // --- agencies and centers ---

    /// Create the agency owning every region-table PIN mapped to `agency_id`.
    pub fn create_agency(&mut self, agency_id: &str) -> Result<AgencyView, EngineError> {
        if self.registry.agency(agency_id).is_some() {
            return Err(EngineError::AgencyExists(agency_id.to_owned()));
        }
        let region = self.regions.pins_of_agency(agency_id);
        if region.is_empty() {
            return Err(EngineError::EmptyRegion(agency_id.to_owned()));
        }
        let master_key = MasterKey::generate(self.entropy.rng());
        let signing_keys = SigningKeypair::from_seed(&self.entropy.bytes32());
        let agency = GovernmentAgency {
            agency_id: agency_id.to_owned(),
            region,
            master_key,
            ledger_address: signing_keys.address(),
            signing_keys,
        };
        self.chain.register_account(AccountData::new(&agency.signing_keys, AccountType::Agency));
        let view = AgencyView::from(&agency);
        self.registry.insert_agency(agency)?;
        Ok(view)
    }

    pub fn register_center(&mut self, name: &str, address: &str, pin: &str) -> Result<CenterRegistered, EngineError> {
        let region = self.regions.lookup(pin).ok_or_else(|| EngineError::UnmappedPin(pin.to_owned()))?.clone();
        let agency = self
            .registry
            .agency(&region.agency_id)
            .ok_or_else(|| EngineError::AgencyNotRegistered(region.agency_id.clone()))?;
        let master_key = agency.master_key.clone();
        let center_id = loop {
            let r = self.entropy.random_factor();
            let id = crate::crypto::generate_center_id(&region.state_code, &master_key, address, r);
            if self.registry.center(&id).is_none() {
                break id;
            }
        };
        let r = self.entropy.random_factor();
        let static_key = crate::crypto::generate_static_key(&center_id, &master_key, r);
        let signing_keys = SigningKeypair::from_seed(&self.entropy.bytes32());
        let center = VaccinationCenter {
            center_id,
            center_name: name.to_owned(),
            address: address.to_owned(),
            pin_code: pin.to_owned(),
            district: region.district,
            state: region.state,
            static_key,
            agency_id: region.agency_id,
            signing_keys,
            doses_supplied: 0,
            doses_remaining: 0,
        };
        self.chain.register_account(AccountData::new(&center.signing_keys, AccountType::Center));
        let out = CenterRegistered { center: CenterView::from(&center), static_key: center.static_key.to_string() };
        self.registry.insert_center(center)?;
        Ok(out)
    }

    pub fn supply_stock(&mut self, center_id: &str, doses: u64) -> Result<CenterView, EngineError> {
        if self.registry.center(center_id).is_none() {
            return Err(EngineError::CenterNotRegistered(center_id.to_owned()));
        }
        self.adjust_stock(center_id, doses as i64)
    }

    fn adjust_stock(&mut self, center_id: &str, delta: i64) -> Result<CenterView, EngineError> {
        let center = self.registry.adjust_stock(center_id, delta)?;
        let (address, remaining) = (center.address_digest(), center.doses_remaining);
        let view = CenterView::from(center);
        self.chain.set_asset(&address, DOSE_ASSET, remaining);
        Ok(view)
    }

    pub fn center_view(&self, center_id: &str) -> Option<CenterView> {
        self.registry.center(center_id).map(CenterView::from)
    }

    pub fn agency_view(&self, agency_id: &str) -> Option<AgencyView> {
        self.registry.agency(agency_id).map(AgencyView::from)
    }

    // --- ledger plumbing ---

    fn emit(&mut self, tx: LedgerTransaction) -> Result<(), EngineError> {
        self.pending.push(tx);
        while self.pending.len() >= self.config.batch_size {
            let batch: Vec<_> = self.pending.drain(..self.config.batch_size).collect();
            self.commit(batch)?;
        }
        Ok(())
    }

    fn commit(&mut self, batch: Vec<LedgerTransaction>) -> Result<(), EngineError> {
        let block = self.chain.mine_block(batch, self.config.difficulty, self.clock.now())?;
        self.chain.append_block(block)?;
        Ok(())
    }

    /// Mine everything still pending. Returns the number of blocks added.
    pub fn flush(&mut self) -> Result<usize, EngineError> {
        let mut blocks = 0;
        while !self.pending.is_empty() {
            let n = self.pending.len().min(self.config.batch_size);
            let batch: Vec<_> = self.pending.drain(..n).collect();
            self.commit(batch)?;
            blocks += 1;
        }
        Ok(blocks)
    }

    // --- persistence and fault injection ---

    pub fn snapshot(&self, dir: &Path) -> Result<(), EngineError> {
        Ok(self.registry.snapshot(dir)?)
    }

    pub fn export_chain(&self) -> String {
        self.chain.export_jsonl()
    }

    /// Mutate one stored field without touching the ledger.
    pub fn tamper_store(
        &mut self,
        kind: crate::registry::EntityKind,
        key: &str,
        field: &str,
        new_value: serde_json::Value,
    ) -> Result<serde_json::Value, RegistryError> {
        self.registry.tamper(kind, key, field, new_value)
    }

    /// Direct store access for fault injection.
    pub fn registry_mut_for_tamper(&mut self) -> &mut Registry {
        &mut self.registry
    }

    /// Swap in a chain whose blocks were modified outside the append path.
    pub fn replace_chain_for_tamper(&mut self, blocks: Vec<crate::ledger::Block>) {
        let accounts: Vec<AccountData> = self.chain.accounts().cloned().collect();
        let mut chain = Chain::from_blocks_unchecked(blocks, self.config.difficulty);
        for a in accounts {
            chain.register_account(a);
        }
        self.chain = chain;
    }
}
