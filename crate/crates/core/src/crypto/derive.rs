use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{HexDigest, MasterKey, StaticKey};

/// Randomizing factor mixed into identifier derivations. Rendered as its
/// decimal text wherever it enters a hash.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RandomFactor(pub u64);

impl RandomFactor {
    fn decimal(self) -> String {
        self.0.to_string()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SecretCodeMode {
    /// `ceil(log2(H)) * 5`; collides for roughly half of all inputs.
    Faithful,
    /// Four digits, re-derived with an incremented retry counter on collision.
    #[default]
    Unique,
}

pub fn sha256(data: &[u8]) -> [u8; 32] {
    Sha256::digest(data).into()
}

pub fn sha256_hex(data: &[u8]) -> HexDigest {
    HexDigest::from_bytes(&sha256(data))
}

/// XOR of the SHA-256 digests of the three operands. Equal operands cancel.
pub fn xor3_digest(a: &str, b: &str, c: &str) -> [u8; 32] {
    let (da, db, dc) = (sha256(a.as_bytes()), sha256(b.as_bytes()), sha256(c.as_bytes()));
    let mut out = [0u8; 32];
    for i in 0..32 {
        out[i] = da[i] ^ db[i] ^ dc[i];
    }
    out
}

/// Double SHA-256 over `uuid || decimal(r)`; the outer hash takes the raw
/// inner digest.
pub fn generate_pseudo_uuid(uuid: &str, r: RandomFactor) -> HexDigest {
    let mut inner = Sha256::new();
    inner.update(uuid.as_bytes());
    inner.update(r.decimal().as_bytes());
    let inner: [u8; 32] = inner.finalize().into();
    sha256_hex(&inner)
}

pub fn generate_static_key(identity: &str, master_key: &MasterKey, r: RandomFactor) -> StaticKey {
    let mixed = xor3_digest(identity, master_key.expose(), &r.decimal());
    StaticKey(sha256_hex(&mixed))
}

/// Faithful mode ignores `retry`.
pub fn generate_secret_code(
    pseudo_uuid: &HexDigest,
    pin_code: &str,
    mode: SecretCodeMode,
    retry: u32,
) -> u32 {
    match mode {
        SecretCodeMode::Faithful => {
            let h = sha256(format!("{}{}", pseudo_uuid, pin_code).as_bytes());
            ceil_log2(&h) * 5
        }
        SecretCodeMode::Unique => {
            let h = sha256(format!("{}{}{}", pseudo_uuid, pin_code, retry).as_bytes());
            1000 + mod_be(&h, 9000) as u32
        }
    }
}

/// `stateCode` followed by eight digits drawn from the master key, address
/// and random factor.
pub fn generate_center_id(
    state_code: &str,
    master_key: &MasterKey,
    address: &str,
    r: RandomFactor,
) -> String {
    let h = sha256(format!("{}{}{}", master_key.expose(), address, r.decimal()).as_bytes());
    format!("{}{:08}", state_code, mod_be(&h, 100_000_000))
}

pub fn generate_vaccination_id(pseudo_uuid: &HexDigest, dose_number: u32, center_id: &str) -> String {
    format!("{pseudo_uuid}{dose_number}{center_id}")
}

/// ceil(log2(h)) for a 256-bit big-endian integer, i.e. the bit length of
/// h - 1. Zero and one both map to 0.
fn ceil_log2(h: &[u8; 32]) -> u32 {
    if h.iter().all(|&b| b == 0) {
        return 0;
    }
    let mut minus_one = *h;
    for byte in minus_one.iter_mut().rev() {
        if *byte == 0 {
            *byte = 0xff;
        } else {
            *byte -= 1;
            break;
        }
    }
    let mut leading = 0;
    for byte in minus_one {
        if byte == 0 {
            leading += 8;
        } else {
            leading += byte.leading_zeros();
            break;
        }
    }
    256 - leading
}

fn mod_be(bytes: &[u8], m: u64) -> u64 {
    bytes
        .iter()
        .fold(0u64, |acc, &b| ((acc as u128 * 256 + b as u128) % m as u128) as u64)
}
