//! Binary Merkle tree over transaction leaf hashes. An odd node at any
//! level is paired with a copy of itself; a single leaf is its own root.

use serde::{Deserialize, Serialize};

use super::{LedgerError, LedgerTransaction};
use crate::crypto::{sha256, HexDigest};
use crate::par;

fn parent(left: &[u8; 32], right: &[u8; 32]) -> [u8; 32] {
    let mut buf = [0u8; 64];
    buf[..32].copy_from_slice(left);
    buf[32..].copy_from_slice(right);
    sha256(&buf)
}

fn next_level(level: &[[u8; 32]]) -> Vec<[u8; 32]> {
    level
        .chunks(2)
        .map(|pair| match pair {
            [l, r] => parent(l, r),
            [only] => parent(only, only),
            _ => unreachable!(),
        })
        .collect()
}

pub fn root_of_leaves(leaves: &[[u8; 32]]) -> Result<[u8; 32], LedgerError> {
    if leaves.is_empty() {
        return Err(LedgerError::EmptyList);
    }
    let mut level = leaves.to_vec();
    while level.len() > 1 {
        level = next_level(&level);
    }
    Ok(level[0])
}

pub fn leaf_hashes(transactions: &[LedgerTransaction]) -> Vec<[u8; 32]> {
    par::map(transactions, LedgerTransaction::leaf_hash)
}

pub fn merkle_root(transactions: &[LedgerTransaction]) -> Result<HexDigest, LedgerError> {
    root_of_leaves(&leaf_hashes(transactions)).map(|r| HexDigest::from_bytes(&r))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    /// The sibling sits to the left of the running hash.
    Left,
    Right,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProofStep {
    pub sibling: HexDigest,
    pub side: Side,
}

pub type MerkleProof = Vec<ProofStep>;

pub fn proof_from_leaves(leaves: &[[u8; 32]], index: usize) -> Result<MerkleProof, LedgerError> {
    if index >= leaves.len() {
        return Err(LedgerError::IndexOutOfRange { index, len: leaves.len() });
    }
    let mut proof = Vec::new();
    let mut level = leaves.to_vec();
    let mut i = index;
    while level.len() > 1 {
        let (sibling, side) = if i.is_multiple_of(2) {
            (level.get(i + 1).unwrap_or(&level[i]), Side::Right)
        } else {
            (&level[i - 1], Side::Left)
        };
        proof.push(ProofStep { sibling: HexDigest::from_bytes(sibling), side });
        level = next_level(&level);
        i /= 2;
    }
    Ok(proof)
}

pub fn merkle_proof(transactions: &[LedgerTransaction], index: usize) -> Result<MerkleProof, LedgerError> {
    proof_from_leaves(&leaf_hashes(transactions), index)
}

pub fn verify_merkle_proof(leaf: &[u8; 32], proof: &[ProofStep], root: &HexDigest) -> bool {
    let acc = proof.iter().fold(*leaf, |acc, step| {
        let sib = step.sibling.to_bytes();
        match step.side {
            Side::Left => parent(&sib, &acc),
            Side::Right => parent(&acc, &sib),
        }
    });
    acc == root.to_bytes()
}
