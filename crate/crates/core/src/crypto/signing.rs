use std::fmt;

use ed25519_dalek::{Signer, SigningKey, Verifier, VerifyingKey};
use serde::{Deserialize, Serialize};

use super::{sha256_hex, CryptoError, HexDigest};

/// Ed25519 signature, hex encoded on the wire.
#[derive(Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Signature(pub [u8; 64]);

impl Signature {
    pub fn to_hex(&self) -> String {
        hex::encode(self.0)
    }

    pub fn from_hex(s: &str) -> Result<Self, CryptoError> {
        let mut out = [0u8; 64];
        hex::decode_to_slice(s, &mut out).map_err(|_| CryptoError::MalformedSignature)?;
        Ok(Signature(out))
    }
}

impl fmt::Debug for Signature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Signature({})", self.to_hex())
    }
}

impl TryFrom<String> for Signature {
    type Error = CryptoError;
    fn try_from(s: String) -> Result<Self, Self::Error> {
        Signature::from_hex(&s)
    }
}

impl From<Signature> for String {
    fn from(s: Signature) -> String {
        s.to_hex()
    }
}

/// Ed25519 keypair. Serialized as its 32-byte seed.
#[derive(Clone, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct SigningKeypair {
    key: SigningKey,
}

impl SigningKeypair {
    pub fn from_seed(seed: &[u8; 32]) -> Self {
        SigningKeypair { key: SigningKey::from_bytes(seed) }
    }

    pub fn public_key(&self) -> [u8; 32] {
        self.key.verifying_key().to_bytes()
    }

    /// SHA-256 of the public key.
    pub fn address(&self) -> HexDigest {
        sha256_hex(&self.public_key())
    }

    pub fn sign(&self, message: &[u8]) -> Signature {
        Signature(self.key.sign(message).to_bytes())
    }

    pub fn verify(public_key: &[u8; 32], message: &[u8], signature: &Signature) -> bool {
        let Ok(vk) = VerifyingKey::from_bytes(public_key) else {
            return false;
        };
        let sig = ed25519_dalek::Signature::from_bytes(&signature.0);
        vk.verify(message, &sig).is_ok()
    }
}

impl fmt::Debug for SigningKeypair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "SigningKeypair(pub={})", hex::encode(self.public_key()))
    }
}

impl TryFrom<String> for SigningKeypair {
    type Error = CryptoError;
    fn try_from(s: String) -> Result<Self, Self::Error> {
        let mut seed = [0u8; 32];
        hex::decode_to_slice(&s, &mut seed).map_err(|_| CryptoError::MalformedDigest(s.clone()))?;
        Ok(SigningKeypair::from_seed(&seed))
    }
}

impl From<SigningKeypair> for String {
    fn from(k: SigningKeypair) -> String {
        hex::encode(k.key.to_bytes())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sign_verify_and_flip() {
        let kp = SigningKeypair::from_seed(&[3; 32]);
        let sig = kp.sign(b"hello");
        assert!(SigningKeypair::verify(&kp.public_key(), b"hello", &sig));
        assert!(!SigningKeypair::verify(&kp.public_key(), b"hellp", &sig));
        let other = SigningKeypair::from_seed(&[4; 32]);
        assert!(!SigningKeypair::verify(&other.public_key(), b"hello", &sig));
    }
}
