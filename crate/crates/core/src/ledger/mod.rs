//! Embedded append-only chain: signed transactions, Merkle roots,
//! proof-of-work headers and full-chain verification.

mod block;
pub mod merkle;
mod transaction;

pub use block::{solve, Block, BlockHeader};
pub use merkle::{
    leaf_hashes, merkle_proof, merkle_root, proof_from_leaves, root_of_leaves, verify_merkle_proof, MerkleProof, ProofStep, Side,
};
pub use transaction::{new_transaction, verify_transaction, ContractData, EntityData, LedgerTransaction, TxType};

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::clock::Timestamp;
use crate::crypto::{sha256_hex, HexDigest, SigningKeypair};
use crate::{json, par};

pub const DOSE_ASSET: &str = "vaccine-doses";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LedgerError {
    #[error("entity data must carry amount 1 and fees 0 (got {amount}/{fees})")]
    BadEntity { amount: u64, fees: u64 },
    #[error("cannot build a Merkle tree from an empty list")]
    EmptyList,
    #[error("leaf index {index} out of range for {len} leaves")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("no pending transactions to mine")]
    EmptyPending,
    #[error("invalid block: {0}")]
    InvalidBlock(FailureReason),
    #[error("chain import: {0}")]
    Import(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FailureReason {
    HeightMismatch,
    PreviousHashMismatch,
    MerkleRootMismatch,
    BlockSizeMismatch,
    BlockAddressMismatch,
    InsufficientDifficulty,
    EmptyBlock,
    BadEntity,
    UnknownSigner,
    BadSignature,
}

impl fmt::Display for FailureReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = serde_json::to_value(self).ok().and_then(|v| v.as_str().map(str::to_owned)).unwrap_or_default();
        f.write_str(&s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AccountType {
    Agency,
    Center,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Asset {
    #[serde(rename = "assetName")]
    pub asset_name: String,
    pub quantity: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AccountData {
    pub address: HexDigest,
    #[serde(rename = "publicKey")]
    pub public_key: String,
    #[serde(rename = "accountType")]
    pub account_type: AccountType,
    pub assets: Vec<Asset>,
}

impl AccountData {
    pub fn new(keys: &SigningKeypair, account_type: AccountType) -> Self {
        let assets = match account_type {
            AccountType::Center => vec![Asset { asset_name: DOSE_ASSET.into(), quantity: 0 }],
            AccountType::Agency => Vec::new(),
        };
        AccountData { address: keys.address(), public_key: hex::encode(keys.public_key()), account_type, assets }
    }

    pub fn public_key_bytes(&self) -> Option<[u8; 32]> {
        let mut out = [0u8; 32];
        hex::decode_to_slice(&self.public_key, &mut out).ok()?;
        Some(out)
    }

    pub fn asset(&self, name: &str) -> Option<u64> {
        self.assets.iter().find(|a| a.asset_name == name).map(|a| a.quantity)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChainReport {
    pub ok: bool,
    #[serde(rename = "firstBadHeight")]
    pub first_bad_height: Option<u64>,
    pub reason: Option<FailureReason>,
}

pub fn default_contracts() -> Vec<ContractData> {
    [TxType::Registration, TxType::Vaccination]
        .into_iter()
        .map(|t| ContractData {
            code_id: t.contract_ref().to_owned(),
            version: "1".into(),
            storage_ref: format!("contracts/{}", t.contract_ref()),
        })
        .collect()
}

/// The committed chain plus the account directory used to check signers.
/// Committed blocks are never mutated; the only write is `append_block`.
#[derive(Debug, Clone)]
pub struct Chain {
    blocks: Vec<Block>,
    index: HashMap<String, (u64, usize)>,
    accounts: BTreeMap<HexDigest, AccountData>,
    difficulty: u32,
}

impl Chain {
    pub fn genesis(difficulty: u32, timestamp: Timestamp) -> Self {
        let contracts = default_contracts();
        let mut block = Block {
            header: BlockHeader {
                height: 0,
                previous_hash: HexDigest::zero(),
                merkle_root: HexDigest::zero(),
                timestamp,
                block_size: 0,
                block_address: HexDigest::zero(),
                nonce: 0,
                difficulty,
            },
            transactions: Vec::new(),
            contracts,
        };
        block.header.merkle_root = block.compute_merkle_root().expect("contracts present");
        block.header.block_size = block.compute_size();
        solve(&mut block.header);
        Chain { blocks: vec![block], index: HashMap::new(), accounts: BTreeMap::new(), difficulty }
    }

    /// Adopt blocks as-is (e.g. from an export); call `verify_chain` to
    /// check them.
    pub fn from_blocks_unchecked(blocks: Vec<Block>, difficulty: u32) -> Self {
        let mut chain = Chain { blocks, index: HashMap::new(), accounts: BTreeMap::new(), difficulty };
        chain.reindex();
        chain
    }

    fn reindex(&mut self) {
        self.index.clear();
        for b in &self.blocks {
            for (i, tx) in b.transactions.iter().enumerate() {
                self.index.insert(tx.tx_id.clone(), (b.header.height, i));
            }
        }
    }

    pub fn difficulty(&self) -> u32 {
        self.difficulty
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    pub fn tip(&self) -> &Block {
        self.blocks.last().expect("chain has genesis")
    }

    pub fn register_account(&mut self, account: AccountData) {
        self.accounts.insert(account.address.clone(), account);
    }

    pub fn account(&self, address: &HexDigest) -> Option<&AccountData> {
        self.accounts.get(address)
    }

    pub fn accounts(&self) -> impl Iterator<Item = &AccountData> {
        self.accounts.values()
    }

    pub fn set_asset(&mut self, address: &HexDigest, name: &str, quantity: u64) {
        if let Some(acc) = self.accounts.get_mut(address) {
            match acc.assets.iter_mut().find(|a| a.asset_name == name) {
                Some(a) => a.quantity = quantity,
                None => acc.assets.push(Asset { asset_name: name.to_owned(), quantity }),
            }
        }
    }

    pub fn transactions(&self) -> impl Iterator<Item = (u64, &LedgerTransaction)> {
        self.blocks.iter().flat_map(|b| b.transactions.iter().map(move |t| (b.header.height, t)))
    }

    pub fn transaction_count(&self) -> usize {
        self.index.len()
    }

    pub fn get_transaction(&self, tx_id: &str) -> Option<(u64, &LedgerTransaction)> {
        let &(h, i) = self.index.get(tx_id)?;
        self.blocks.get(h as usize)?.transactions.get(i).map(|t| (h, t))
    }

    /// Assemble and solve a block on top of the current tip.
    pub fn mine_block(&self, pending: Vec<LedgerTransaction>, difficulty: u32, timestamp: Timestamp) -> Result<Block, LedgerError> {
        if pending.is_empty() {
            return Err(LedgerError::EmptyPending);
        }
        let tip = &self.tip().header;
        let mut block = Block {
            header: BlockHeader {
                height: tip.height + 1,
                previous_hash: tip.block_address.clone(),
                merkle_root: merkle_root(&pending)?,
                timestamp,
                block_size: 0,
                block_address: HexDigest::zero(),
                nonce: 0,
                difficulty,
            },
            transactions: pending,
            contracts: Vec::new(),
        };
        block.header.block_size = block.compute_size();
        solve(&mut block.header);
        Ok(block)
    }

    pub fn append_block(&mut self, block: Block) -> Result<(), LedgerError> {
        let prev = self.blocks.last().map(|b| &b.header);
        if let Some(reason) = self.check_block(&block, self.blocks.len() as u64, prev) {
            return Err(LedgerError::InvalidBlock(reason));
        }
        for (i, tx) in block.transactions.iter().enumerate() {
            self.index.insert(tx.tx_id.clone(), (block.header.height, i));
        }
        self.blocks.push(block);
        Ok(())
    }

    fn check_block(&self, block: &Block, expected_height: u64, prev: Option<&BlockHeader>) -> Option<FailureReason> {
        let h = &block.header;
        if h.height != expected_height {
            return Some(FailureReason::HeightMismatch);
        }
        let expected_prev = prev.map_or_else(HexDigest::zero, |p| p.block_address.clone());
        if h.previous_hash != expected_prev {
            return Some(FailureReason::PreviousHashMismatch);
        }
        if expected_height > 0 && block.transactions.is_empty() {
            return Some(FailureReason::EmptyBlock);
        }
        if block.compute_merkle_root().as_ref() != Some(&h.merkle_root) {
            return Some(FailureReason::MerkleRootMismatch);
        }
        if block.compute_size() != h.block_size {
            return Some(FailureReason::BlockSizeMismatch);
        }
        if h.compute_address() != h.block_address {
            return Some(FailureReason::BlockAddressMismatch);
        }
        if h.difficulty < self.difficulty || h.block_address.leading_zero_bits() < h.difficulty {
            return Some(FailureReason::InsufficientDifficulty);
        }
        for tx in &block.transactions {
            if !transaction::entity_ok(tx) {
                return Some(FailureReason::BadEntity);
            }
            let Some(pk) = self.accounts.get(&tx.signer_address).and_then(AccountData::public_key_bytes) else {
                return Some(FailureReason::UnknownSigner);
            };
            if sha256_hex(&pk) != tx.signer_address || !verify_transaction(tx, &pk) {
                return Some(FailureReason::BadSignature);
            }
        }
        None
    }

    /// Check every block; report the lowest failing height.
    pub fn verify_chain(&self) -> ChainReport {
        let heights: Vec<usize> = (0..self.blocks.len()).collect();
        let failures = par::map(&heights, |&i| {
            let prev = i.checked_sub(1).map(|p| &self.blocks[p].header);
            self.check_block(&self.blocks[i], i as u64, prev)
        });
        match failures.iter().enumerate().find_map(|(i, f)| f.map(|r| (i as u64, r))) {
            Some((height, reason)) => ChainReport { ok: false, first_bad_height: Some(height), reason: Some(reason) },
            None => ChainReport { ok: true, first_bad_height: None, reason: None },
        }
    }

    /// One block object per line, keys in canonical order.
    pub fn export_jsonl(&self) -> String {
        let mut out = String::new();
        for b in &self.blocks {
            out.push_str(&json::canonical_line(b).expect("blocks serialize"));
            out.push('\n');
        }
        out
    }

    pub fn import_jsonl(text: &str, difficulty: u32) -> Result<Self, LedgerError> {
        let blocks = text
            .lines()
            .filter(|l| !l.trim().is_empty())
            .map(|l| serde_json::from_str::<Block>(l).map_err(|e| LedgerError::Import(e.to_string())))
            .collect::<Result<Vec<_>, _>>()?;
        if blocks.is_empty() {
            return Err(LedgerError::Import("no blocks".into()));
        }
        Ok(Chain::from_blocks_unchecked(blocks, difficulty))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::crypto::sha256_hex;

    fn chain_with_signer() -> (Chain, SigningKeypair) {
        let kp = SigningKeypair::from_seed(&[9; 32]);
        let mut chain = Chain::genesis(4, Timestamp::from_unix(0));
        chain.register_account(AccountData::new(&kp, AccountType::Agency));
        (chain, kp)
    }

    fn tx(kp: &SigningKeypair, id: &str) -> LedgerTransaction {
        let e = EntityData::unit(kp.address(), String::new(), id.into(), sha256_hex(id.as_bytes()));
        new_transaction(TxType::Registration, kp, e, id.into(), Timestamp::from_unix(1)).unwrap()
    }

    #[test]
    fn genesis_shape() {
        let (chain, _) = chain_with_signer();
        let g = &chain.blocks()[0].header;
        assert_eq!(g.height, 0);
        assert_eq!(g.previous_hash, HexDigest::zero());
        assert!(chain.verify_chain().ok);
    }

    #[test]
    fn mine_append_lookup() {
        let (mut chain, kp) = chain_with_signer();
        let b = chain.mine_block(vec![tx(&kp, "a"), tx(&kp, "b")], 4, Timestamp::from_unix(2)).unwrap();
        chain.append_block(b).unwrap();
        assert_eq!(chain.len(), 2);
        assert_eq!(chain.get_transaction("b").unwrap().0, 1);
        assert!(chain.get_transaction("zz").is_none());
        assert!(chain.verify_chain().ok);
        assert_eq!(chain.mine_block(vec![], 4, Timestamp::from_unix(2)), Err(LedgerError::EmptyPending));
    }

    #[test]
    fn stale_previous_hash_rejected() {
        let (mut chain, kp) = chain_with_signer();
        let b1 = chain.mine_block(vec![tx(&kp, "a")], 4, Timestamp::from_unix(2)).unwrap();
        let stale = chain.mine_block(vec![tx(&kp, "b")], 4, Timestamp::from_unix(2)).unwrap();
        chain.append_block(b1).unwrap();
        assert!(matches!(chain.append_block(stale), Err(LedgerError::InvalidBlock(FailureReason::HeightMismatch))));
    }

    #[test]
    fn unknown_signer_rejected() {
        let (mut chain, _) = chain_with_signer();
        let stranger = SigningKeypair::from_seed(&[1; 32]);
        let b = chain.mine_block(vec![tx(&stranger, "a")], 4, Timestamp::from_unix(2)).unwrap();
        assert_eq!(chain.append_block(b), Err(LedgerError::InvalidBlock(FailureReason::UnknownSigner)));
    }

    #[test]
    fn nonzero_genesis_previous_hash_fails_at_zero() {
        let (chain, _) = chain_with_signer();
        let mut blocks = chain.blocks().to_vec();
        blocks[0].header.previous_hash = sha256_hex(b"x");
        let bad = Chain::from_blocks_unchecked(blocks, 4);
        let r = bad.verify_chain();
        assert_eq!(r.first_bad_height, Some(0));
        assert_eq!(r.reason, Some(FailureReason::PreviousHashMismatch));
    }

    #[test]
    fn export_import_round_trip() {
        let (mut chain, kp) = chain_with_signer();
        let b = chain.mine_block(vec![tx(&kp, "a")], 4, Timestamp::from_unix(2)).unwrap();
        chain.append_block(b).unwrap();
        let text = chain.export_jsonl();
        assert_eq!(text.lines().count(), 2);
        let mut back = Chain::import_jsonl(&text, 4).unwrap();
        back.register_account(AccountData::new(&kp, AccountType::Agency));
        assert_eq!(back.blocks(), chain.blocks());
        assert!(back.verify_chain().ok);
        assert_eq!(back.export_jsonl(), text);
    }
}
