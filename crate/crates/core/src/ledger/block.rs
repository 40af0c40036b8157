use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::merkle::{leaf_hashes, root_of_leaves};
use super::{ContractData, LedgerTransaction};
use crate::clock::Timestamp;
use crate::crypto::{canonical_record_bytes, sha256, Canonical, HexDigest};
use crate::par;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockHeader {
    pub height: u64,
    #[serde(rename = "previousHash")]
    pub previous_hash: HexDigest,
    #[serde(rename = "merkleRoot")]
    pub merkle_root: HexDigest,
    pub timestamp: Timestamp,
    #[serde(rename = "blockSize")]
    pub block_size: u64,
    #[serde(rename = "blockAddress")]
    pub block_address: HexDigest,
    pub nonce: u64,
    pub difficulty: u32,
}

impl BlockHeader {
    /// Canonical bytes of every header field except `blockAddress`, split
    /// around the nonce line so mining can splice candidate nonces in.
    fn hashing_parts(&self) -> (Vec<u8>, Vec<u8>) {
        let mut before = BTreeMap::new();
        let mut after = BTreeMap::new();
        let fields = [
            ("blockSize", self.block_size.to_string()),
            ("difficulty", self.difficulty.to_string()),
            ("height", self.height.to_string()),
            ("merkleRoot", self.merkle_root.to_string()),
            ("previousHash", self.previous_hash.to_string()),
            ("timestamp", self.timestamp.to_string()),
        ];
        for (k, v) in fields {
            if k.as_bytes() < b"nonce".as_slice() {
                before.insert(k.to_owned(), v);
            } else {
                after.insert(k.to_owned(), v);
            }
        }
        (canonical_record_bytes(&before), canonical_record_bytes(&after))
    }

    pub fn hashing_bytes(&self) -> Vec<u8> {
        let (mut before, after) = self.hashing_parts();
        before.extend_from_slice(format!("nonce={}\n", self.nonce).as_bytes());
        before.extend_from_slice(&after);
        before
    }

    pub fn compute_address(&self) -> HexDigest {
        HexDigest::from_bytes(&sha256(&self.hashing_bytes()))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Block {
    pub header: BlockHeader,
    pub transactions: Vec<LedgerTransaction>,
    /// Contract metadata; only the genesis block carries any.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub contracts: Vec<ContractData>,
}

impl Block {
    pub fn leaves(&self) -> Vec<[u8; 32]> {
        if self.header.height == 0 && self.transactions.is_empty() {
            self.contracts.iter().map(|c| sha256(&c.canonical_record().to_bytes())).collect()
        } else {
            leaf_hashes(&self.transactions)
        }
    }

    pub fn compute_merkle_root(&self) -> Option<HexDigest> {
        root_of_leaves(&self.leaves()).ok().map(|r| HexDigest::from_bytes(&r))
    }

    /// Byte count of the serialized transactions (contracts for genesis).
    pub fn compute_size(&self) -> u64 {
        let tx: usize = self.transactions.iter().map(|t| t.canonical_record().to_bytes().len()).sum();
        let contracts: usize = self.contracts.iter().map(|c| c.canonical_record().to_bytes().len()).sum();
        (tx + contracts) as u64
    }
}

const MINING_BATCH: u64 = 1 << 14;

/// Smallest nonce whose header digest has at least `difficulty` leading zero
/// bits. Sets `nonce` and `block_address` on the header.
pub fn solve(header: &mut BlockHeader) {
    let (before, after) = header.hashing_parts();
    let difficulty = header.difficulty;
    let digest = |nonce: u64| {
        let mut buf = Vec::with_capacity(before.len() + after.len() + 32);
        buf.extend_from_slice(&before);
        buf.extend_from_slice(format!("nonce={nonce}\n").as_bytes());
        buf.extend_from_slice(&after);
        HexDigest::from_bytes(&sha256(&buf))
    };
    let mut start = 0u64;
    let nonce = loop {
        let end = start.saturating_add(MINING_BATCH);
        // small difficulties finish in the first few hashes
        let found = if difficulty <= 6 {
            (start..end).find(|&n| digest(n).leading_zero_bits() >= difficulty)
        } else {
            par::find_first_in(start..end, |n| digest(n).leading_zero_bits() >= difficulty)
        };
        if let Some(n) = found {
            break n;
        }
        start = end;
    };
    header.nonce = nonce;
    header.block_address = digest(nonce);
}
