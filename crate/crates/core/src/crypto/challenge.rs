use aes::cipher::{generic_array::GenericArray, BlockDecrypt, BlockEncrypt, KeyInit};
use aes::Aes256;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{CryptoError, StaticKey};

const LOW: u64 = 1_000_000_000;
const HIGH: u64 = 10_000_000_000;

/// A ten-digit number in `[10^9, 10^10)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "u64", into = "u64")]
pub struct ChallengeNumber(u64);

impl ChallengeNumber {
    pub fn new(n: u64) -> Result<Self, CryptoError> {
        if (LOW..HIGH).contains(&n) {
            Ok(ChallengeNumber(n))
        } else {
            Err(CryptoError::ChallengeOutOfRange(n))
        }
    }

    pub fn random<R: Rng + ?Sized>(rng: &mut R) -> Self {
        ChallengeNumber(rng.gen_range(LOW..HIGH))
    }

    pub fn value(self) -> u64 {
        self.0
    }
}

impl TryFrom<u64> for ChallengeNumber {
    type Error = CryptoError;
    fn try_from(n: u64) -> Result<Self, Self::Error> {
        ChallengeNumber::new(n)
    }
}

impl From<ChallengeNumber> for u64 {
    fn from(n: ChallengeNumber) -> u64 {
        n.0
    }
}

/// Raw AES-256 encryption of a single block.
pub fn aes256_encrypt_block(key: &[u8; 32], block: [u8; 16]) -> [u8; 16] {
    let mut b = GenericArray::from(block);
    Aes256::new(GenericArray::from_slice(key)).encrypt_block(&mut b);
    b.into()
}

pub fn aes256_decrypt_block(key: &[u8; 32], block: [u8; 16]) -> [u8; 16] {
    let mut b = GenericArray::from(block);
    Aes256::new(GenericArray::from_slice(key)).decrypt_block(&mut b);
    b.into()
}

/// One AES-256 block: the ten ASCII digits followed by six zero bytes.
pub fn encrypt_challenge(n: ChallengeNumber, key: &StaticKey) -> String {
    let mut block = [0u8; 16];
    block[..10].copy_from_slice(format!("{:010}", n.0).as_bytes());
    hex::encode(aes256_encrypt_block(&key.key_bytes(), block))
}

pub fn decrypt_challenge(ciphertext: &str, key: &StaticKey) -> Result<ChallengeNumber, CryptoError> {
    if ciphertext.len() != 32 {
        return Err(CryptoError::MalformedCiphertext);
    }
    let mut block = [0u8; 16];
    hex::decode_to_slice(ciphertext, &mut block).map_err(|_| CryptoError::MalformedCiphertext)?;
    let block = aes256_decrypt_block(&key.key_bytes(), block);

    let (digits, pad) = block.split_at(10);
    if pad.iter().any(|&b| b != 0) || !digits.iter().all(u8::is_ascii_digit) {
        return Err(CryptoError::FormatFailure);
    }
    let n: u64 = std::str::from_utf8(digits)
        .ok()
        .and_then(|s| s.parse().ok())
        .ok_or(CryptoError::FormatFailure)?;
    ChallengeNumber::new(n).map_err(|_| CryptoError::FormatFailure)
}
