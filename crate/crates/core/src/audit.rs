//! Agency-side integrity checks of the database against the ledger.

use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::clock::{Clock, Timestamp};
use crate::crypto::{Canonical, HexDigest};
use crate::engine::{Engine, EngineError};
use crate::ledger::{AccountData, AccountType, Chain, LedgerTransaction, TxType, DOSE_ASSET};
use crate::par;
use crate::registry::{CitizenFilter, CitizenProfile, Registry, VaccinationRecord};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FindingKind {
    HashMismatch,
    MissingTransaction,
    OrphanTransaction,
    DoseSequenceError,
    StockMismatch,
    ChainInvalid,
}

impl FindingKind {
    pub fn as_str(self) -> &'static str {
        match self {
            FindingKind::HashMismatch => "hash-mismatch",
            FindingKind::MissingTransaction => "missing-transaction",
            FindingKind::OrphanTransaction => "orphan-transaction",
            FindingKind::DoseSequenceError => "dose-sequence-error",
            FindingKind::StockMismatch => "stock-mismatch",
            FindingKind::ChainInvalid => "chain-invalid",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct AuditFinding {
    pub kind: FindingKind,
    /// pseudoUUID, vaccinationID, centerID or block height.
    #[serde(rename = "subjectKey")]
    pub subject_key: String,
    pub detail: String,
}

impl AuditFinding {
    fn new(kind: FindingKind, subject: impl Into<String>, detail: impl Into<String>) -> Self {
        AuditFinding { kind, subject_key: subject.into(), detail: detail.into() }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuditReport {
    #[serde(rename = "checkedCitizens")]
    pub checked_citizens: usize,
    #[serde(rename = "checkedVaccinations")]
    pub checked_vaccinations: usize,
    #[serde(rename = "checkedCenters")]
    pub checked_centers: usize,
    pub findings: Vec<AuditFinding>,
    #[serde(rename = "chainOk")]
    pub chain_ok: bool,
    #[serde(rename = "startedAt")]
    pub started_at: Timestamp,
    #[serde(rename = "finishedAt")]
    pub finished_at: Timestamp,
}

impl AuditReport {
    pub fn is_clean(&self) -> bool {
        self.findings.is_empty() && self.chain_ok
    }

    pub fn subjects(&self, kind: FindingKind) -> BTreeSet<&str> {
        self.findings.iter().filter(|f| f.kind == kind).map(|f| f.subject_key.as_str()).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(tag = "scope", rename_all = "lowercase")]
pub enum AuditScope {
    #[default]
    All,
    Agency {
        #[serde(rename = "agencyID")]
        agency_id: String,
    },
}

/// Read-only view pairing a registry with a committed chain.
pub struct Auditor<'a> {
    registry: &'a Registry,
    chain: &'a Chain,
    max_doses: u32,
    txs: HashMap<&'a str, &'a LedgerTransaction>,
    by_memo_key: HashMap<(TxType, &'a str), &'a LedgerTransaction>,
    doses_by_signer: HashMap<&'a HexDigest, usize>,
}

impl<'a> Auditor<'a> {
    pub fn new(registry: &'a Registry, chain: &'a Chain, max_doses: u32) -> Self {
        let mut txs = HashMap::new();
        let mut by_memo_key = HashMap::new();
        let mut doses_by_signer: HashMap<&HexDigest, usize> = HashMap::new();
        for (_, tx) in chain.transactions() {
            txs.insert(tx.tx_id.as_str(), tx);
            by_memo_key.insert((tx.tx_type, tx.entity.memo_primary_key.as_str()), tx);
            if tx.tx_type == TxType::Vaccination {
                *doses_by_signer.entry(&tx.signer_address).or_default() += 1;
            }
        }
        Auditor { registry, chain, max_doses, txs, by_memo_key, doses_by_signer }
    }

    /// Compare a record's canonical digest with the memo hash of the
    /// transaction it names.
    pub fn verify_entity_hash<R: Canonical>(
        &self,
        record: &R,
        subject: &str,
        tx_id: &str,
        tx_type: TxType,
        signer: Option<&HexDigest>,
    ) -> Option<AuditFinding> {
        let Some(tx) = self.txs.get(tx_id) else {
            if self.by_memo_key.contains_key(&(tx_type, subject)) {
                return Some(AuditFinding::new(FindingKind::HashMismatch, subject, format!("record names transaction {tx_id}, ledger disagrees")));
            }
            return Some(AuditFinding::new(FindingKind::MissingTransaction, subject, format!("no transaction {tx_id} on chain")));
        };
        if tx.tx_type != tx_type || tx.entity.memo_primary_key != subject {
            return Some(AuditFinding::new(FindingKind::HashMismatch, subject, "transaction does not reference this record"));
        }
        if signer != Some(&tx.signer_address) {
            return Some(AuditFinding::new(FindingKind::HashMismatch, subject, "transaction signer is not the owning account"));
        }
        let digest = record.canonical_digest();
        (digest != tx.entity.memo_hash).then(|| {
            AuditFinding::new(
                FindingKind::HashMismatch,
                subject,
                format!("record hash {digest} differs from memo hash {}", tx.entity.memo_hash),
            )
        })
    }

    pub fn verify_vaccination(&self, v: &VaccinationRecord) -> Option<AuditFinding> {
        let signer = self.registry.center(&v.center_id).map(|c| c.address_digest());
        self.verify_entity_hash(v, &v.vaccination_id, &v.tx_id, TxType::Vaccination, signer.as_ref())
    }

    pub fn audit_citizen(&self, citizen: &CitizenProfile) -> Vec<AuditFinding> {
        let subject = citizen.pseudo_uuid.as_str();
        let mut out = Vec::new();
        let signer = self.registry.agency(&citizen.agency_id).map(|a| a.ledger_address.clone());
        out.extend(self.verify_entity_hash(citizen, subject, &citizen.registration_tx_id, TxType::Registration, signer.as_ref()));

        let records = self.registry.vaccinations_of(&citizen.pseudo_uuid);
        let doses: Vec<u32> = records.iter().map(|r| r.dose_number).collect();
        let k = doses.len() as u32;
        let sequential = doses.iter().zip(1..).all(|(&d, i)| d == i);
        if !sequential || k > self.max_doses || k != citizen.doses_completed {
            out.push(AuditFinding::new(
                FindingKind::DoseSequenceError,
                subject,
                format!("doses {doses:?}, dosesCompleted {}, cap {}", citizen.doses_completed, self.max_doses),
            ));
        }
        out.extend(records.into_iter().filter_map(|v| self.verify_vaccination(v)));
        out
    }

    /// A = on-chain doses signed by the center, D = supplied - remaining,
    /// R = database records at the center. Anything but A = D = R is a
    /// finding, as is a ledger asset balance that disagrees with the store.
    pub fn audit_center_stock(&self, center_id: &str) -> Vec<AuditFinding> {
        let Some(center) = self.registry.center(center_id) else {
            return vec![AuditFinding::new(FindingKind::StockMismatch, center_id, "center not in database")];
        };
        let a = self.doses_by_signer.get(&center.address_digest()).copied().unwrap_or(0) as i128;
        let d = center.doses_supplied as i128 - center.doses_remaining as i128;
        let r = self.registry.vaccinations_at_center(center_id) as i128;
        let asset = self.chain.account(&center.address_digest()).and_then(|acc| acc.asset(DOSE_ASSET));
        let asset_ok = asset.is_none_or(|q| q == center.doses_remaining);
        if a == d && d == r && asset_ok {
            return Vec::new();
        }
        vec![AuditFinding::new(
            FindingKind::StockMismatch,
            center_id,
            format!(
                "ledger doses {a}, supplied-remaining {d}, database records {r}, ledger balance {}",
                asset.map_or("none".to_owned(), |q| q.to_string())
            ),
        )]
    }

    pub fn full_audit(&self, scope: &AuditScope, now: impl Fn() -> Timestamp) -> AuditReport {
        let started_at = now();
        let mut findings = Vec::new();

        let chain_report = self.chain.verify_chain();
        if let Some(h) = chain_report.first_bad_height {
            let reason = chain_report.reason.map(|r| format!("{r:?}")).unwrap_or_default();
            findings.push(AuditFinding::new(FindingKind::ChainInvalid, h.to_string(), reason));
        }

        let agency_filter = match scope {
            AuditScope::All => None,
            AuditScope::Agency { agency_id } => Some(agency_id.as_str()),
        };
        let citizens: Vec<&CitizenProfile> = match agency_filter {
            None => self.registry.citizens().collect(),
            Some(id) => self.registry.query_citizens(&CitizenFilter { agency_id: Some(id.to_owned()), ..Default::default() }),
        };
        findings.extend(par::flat_map(&citizens, |c| self.audit_citizen(c)));

        let in_scope_vaccinations = citizens.iter().map(|c| self.registry.count_doses(&c.pseudo_uuid) as usize).sum::<usize>();
        // Vaccination rows whose citizen row is gone still get their hash
        // checked; the missing profile shows up as an orphan registration.
        let unowned: Vec<&VaccinationRecord> = if agency_filter.is_none() {
            self.registry.vaccinations().filter(|v| self.registry.citizen(&v.pseudo_uuid).is_none()).collect()
        } else {
            Vec::new()
        };
        findings.extend(par::flat_map(&unowned, |v| self.verify_vaccination(v).into_iter().collect()));

        let centers: Vec<&str> = self
            .registry
            .centers()
            .filter(|c| agency_filter.is_none_or(|id| c.agency_id == id))
            .map(|c| c.center_id.as_str())
            .collect();
        findings.extend(par::flat_map(&centers, |c| self.audit_center_stock(c)));

        findings.extend(self.orphans(agency_filter));
        findings.sort();

        AuditReport {
            checked_citizens: citizens.len(),
            checked_vaccinations: in_scope_vaccinations + unowned.len(),
            checked_centers: centers.len(),
            chain_ok: chain_report.ok,
            findings,
            started_at,
            finished_at: now(),
        }
    }

    fn orphans(&self, agency_filter: Option<&str>) -> Vec<AuditFinding> {
        let scope_signers: Option<BTreeSet<HexDigest>> = agency_filter.map(|id| {
            let agencies = self.registry.agency(id).map(|a| a.ledger_address.clone());
            let centers = self.registry.centers().filter(|c| c.agency_id == id).map(|c| c.address_digest());
            agencies.into_iter().chain(centers).collect()
        });
        let txs: Vec<&LedgerTransaction> = self.chain.transactions().map(|(_, tx)| tx).collect();
        par::flat_map(&txs, |tx| {
            if scope_signers.as_ref().is_some_and(|s| !s.contains(&tx.signer_address)) {
                return Vec::new();
            }
            let key = tx.entity.memo_primary_key.as_str();
            let present = match tx.tx_type {
                TxType::Registration => HexDigest::parse(key).ok().is_some_and(|p| self.registry.citizen(&p).is_some()),
                TxType::Vaccination => self.registry.vaccination(key).is_some(),
            };
            if present {
                Vec::new()
            } else {
                vec![AuditFinding::new(FindingKind::OrphanTransaction, key, format!("{} transaction {} has no database row", tx.tx_type, tx.tx_id))]
            }
        })
    }
}

/// Rebuild the signer directory for a chain loaded from an export.
pub fn accounts_from_registry(registry: &Registry, chain: &mut Chain) {
    for a in registry.agencies() {
        chain.register_account(AccountData::new(&a.signing_keys, AccountType::Agency));
    }
    for c in registry.centers() {
        chain.register_account(AccountData::new(&c.signing_keys, AccountType::Center));
        chain.set_asset(&c.address_digest(), DOSE_ASSET, c.doses_remaining);
    }
}

/// Audit a persisted snapshot against an exported chain.
pub fn audit_offline(registry: &Registry, mut chain: Chain, max_doses: u32, scope: &AuditScope, clock: &dyn Clock) -> AuditReport {
    accounts_from_registry(registry, &mut chain);
    Auditor::new(registry, &chain, max_doses).full_audit(scope, || clock.now())
}

impl Engine {
    /// Commit the pending pool, then audit the live store against the chain.
    pub fn run_audit(&mut self, scope: &AuditScope) -> Result<AuditReport, EngineError> {
        self.flush()?;
        Ok(self.audit_committed(scope))
    }

    /// Audit without flushing; pending transactions count as absent.
    pub fn audit_committed(&self, scope: &AuditScope) -> AuditReport {
        Auditor::new(self.registry(), self.chain(), self.config().max_doses).full_audit(scope, || self.now())
    }
}
