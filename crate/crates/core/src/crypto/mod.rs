//! Deterministic derivations, the challenge cipher, signatures and the
//! canonical record encoding shared by every other module.
//!
//! Everything here is a pure function of its inputs.

mod canonical;
mod challenge;
mod derive;
mod hexdigest;
mod signing;

pub use canonical::{canonical_record_bytes, Canonical, CanonicalRecord};
pub use challenge::{aes256_decrypt_block, aes256_encrypt_block, decrypt_challenge, encrypt_challenge, ChallengeNumber};
pub use derive::{
    generate_center_id, generate_pseudo_uuid, generate_secret_code, generate_static_key,
    generate_vaccination_id, sha256, sha256_hex, xor3_digest, RandomFactor, SecretCodeMode,
};
pub use hexdigest::{HexDigest, MasterKey, StaticKey};
pub use signing::{Signature, SigningKeypair};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CryptoError {
    #[error("malformed hex digest: {0}")]
    MalformedDigest(String),
    #[error("malformed ciphertext")]
    MalformedCiphertext,
    #[error("decrypted block failed the format check")]
    FormatFailure,
    #[error("challenge number out of range: {0}")]
    ChallengeOutOfRange(u64),
    #[error("malformed signature")]
    MalformedSignature,
    #[error("malformed public key")]
    MalformedPublicKey,
}
