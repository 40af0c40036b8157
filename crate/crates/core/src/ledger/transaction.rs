use std::fmt;

use serde::{Deserialize, Serialize};

use super::LedgerError;
use crate::clock::Timestamp;
use crate::crypto::{sha256, Canonical, CanonicalRecord, HexDigest, Signature, SigningKeypair};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum TxType {
    Registration,
    Vaccination,
}

impl TxType {
    pub fn contract_ref(self) -> &'static str {
        match self {
            TxType::Registration => "registration-v1",
            TxType::Vaccination => "vaccination-v1",
        }
    }
}

impl fmt::Display for TxType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TxType::Registration => "Registration",
            TxType::Vaccination => "Vaccination",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EntityData {
    #[serde(rename = "senderAddress")]
    pub sender_address: HexDigest,
    pub amount: u64,
    pub fees: u64,
    #[serde(rename = "additionalData")]
    pub additional_data: String,
    #[serde(rename = "memoPrimaryKey")]
    pub memo_primary_key: String,
    #[serde(rename = "memoHash")]
    pub memo_hash: HexDigest,
}

impl EntityData {
    /// Amount 1, fees 0: one registration or one dose per transaction.
    pub fn unit(sender: HexDigest, additional_data: String, memo_primary_key: String, memo_hash: HexDigest) -> Self {
        EntityData { sender_address: sender, amount: 1, fees: 0, additional_data, memo_primary_key, memo_hash }
    }

    fn check(&self) -> Result<(), LedgerError> {
        if self.amount != 1 || self.fees != 0 {
            return Err(LedgerError::BadEntity { amount: self.amount, fees: self.fees });
        }
        Ok(())
    }
}

/// Static contract metadata, stored once per transaction type at genesis.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContractData {
    #[serde(rename = "codeID")]
    pub code_id: String,
    pub version: String,
    #[serde(rename = "storageRef")]
    pub storage_ref: String,
}

impl Canonical for ContractData {
    fn canonical_record(&self) -> CanonicalRecord {
        CanonicalRecord::new()
            .field("codeID", &self.code_id)
            .field("version", &self.version)
            .field("storageRef", &self.storage_ref)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LedgerTransaction {
    #[serde(rename = "txID")]
    pub tx_id: String,
    #[serde(rename = "txType")]
    pub tx_type: TxType,
    #[serde(rename = "signerAddress")]
    pub signer_address: HexDigest,
    pub timestamp: Timestamp,
    pub entity: EntityData,
    #[serde(rename = "contractRef")]
    pub contract_ref: String,
    pub signature: Signature,
}

impl LedgerTransaction {
    /// Canonical bytes of every field except the signature.
    pub fn signing_bytes(&self) -> Vec<u8> {
        self.unsigned_record().to_bytes()
    }

    fn unsigned_record(&self) -> CanonicalRecord {
        let e = &self.entity;
        CanonicalRecord::new()
            .field("txID", &self.tx_id)
            .field("txType", self.tx_type)
            .field("signerAddress", &self.signer_address)
            .field("timestamp", self.timestamp)
            .field("senderAddress", &e.sender_address)
            .field("amount", e.amount)
            .field("fees", e.fees)
            .field("additionalData", &e.additional_data)
            .field("memoPrimaryKey", &e.memo_primary_key)
            .field("memoHash", &e.memo_hash)
            .field("contractRef", &self.contract_ref)
    }

    /// Merkle leaf: SHA-256 of the full canonical bytes, signature included.
    pub fn leaf_hash(&self) -> [u8; 32] {
        sha256(&self.canonical_record().to_bytes())
    }
}

impl Canonical for LedgerTransaction {
    fn canonical_record(&self) -> CanonicalRecord {
        self.unsigned_record().field("signature", self.signature.to_hex())
    }
}

pub fn new_transaction(
    tx_type: TxType,
    signer: &SigningKeypair,
    entity: EntityData,
    tx_id: String,
    timestamp: Timestamp,
) -> Result<LedgerTransaction, LedgerError> {
    entity.check()?;
    let mut tx = LedgerTransaction {
        tx_id,
        tx_type,
        signer_address: signer.address(),
        timestamp,
        entity,
        contract_ref: tx_type.contract_ref().to_owned(),
        signature: Signature([0; 64]),
    };
    tx.signature = signer.sign(&tx.signing_bytes());
    Ok(tx)
}

pub fn verify_transaction(tx: &LedgerTransaction, public_key: &[u8; 32]) -> bool {
    SigningKeypair::verify(public_key, &tx.signing_bytes(), &tx.signature)
}

/// Amount/fees constraint as seen by chain verification.
pub(crate) fn entity_ok(tx: &LedgerTransaction) -> bool {
    tx.entity.check().is_ok()
}
