use std::fmt;
use std::str::FromStr;

use rand::RngCore;
use serde::{Deserialize, Serialize};

use super::CryptoError;

/// 64 lowercase hex characters encoding 32 bytes.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct HexDigest(String);

impl HexDigest {
    pub const LEN: usize = 64;

    pub fn from_bytes(bytes: &[u8; 32]) -> Self {
        HexDigest(hex::encode(bytes))
    }

    /// The all-zero digest used as the genesis back-pointer.
    pub fn zero() -> Self {
        HexDigest("0".repeat(Self::LEN))
    }

    pub fn parse(s: &str) -> Result<Self, CryptoError> {
        let ok = s.len() == Self::LEN && s.bytes().all(|b| matches!(b, b'0'..=b'9' | b'a'..=b'f'));
        if ok {
            Ok(HexDigest(s.to_owned()))
        } else {
            Err(CryptoError::MalformedDigest(s.to_owned()))
        }
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    pub fn to_bytes(&self) -> [u8; 32] {
        let mut out = [0u8; 32];
        // validated at construction
        hex::decode_to_slice(&self.0, &mut out).expect("hex digest invariant");
        out
    }

    /// Number of leading zero bits of the decoded value.
    pub fn leading_zero_bits(&self) -> u32 {
        let mut bits = 0;
        for byte in self.to_bytes() {
            if byte == 0 {
                bits += 8;
            } else {
                bits += byte.leading_zeros();
                break;
            }
        }
        bits
    }
}

impl fmt::Display for HexDigest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl FromStr for HexDigest {
    type Err = CryptoError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        HexDigest::parse(s)
    }
}

impl TryFrom<String> for HexDigest {
    type Error = CryptoError;
    fn try_from(s: String) -> Result<Self, Self::Error> {
        HexDigest::parse(&s)
    }
}

impl From<HexDigest> for String {
    fn from(d: HexDigest) -> String {
        d.0
    }
}

/// Symmetric key of a center or citizen. The decoded 32 bytes key the
/// challenge cipher.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct StaticKey(pub HexDigest);

impl StaticKey {
    pub fn parse(s: &str) -> Result<Self, CryptoError> {
        HexDigest::parse(s).map(StaticKey)
    }

    pub fn as_str(&self) -> &str {
        self.0.as_str()
    }

    pub fn key_bytes(&self) -> [u8; 32] {
        self.0.to_bytes()
    }
}

impl fmt::Display for StaticKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// An agency's root derivation secret. Deliberately has no `Display`.
#[derive(Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MasterKey(HexDigest);

impl MasterKey {
    pub fn generate<R: RngCore + ?Sized>(rng: &mut R) -> Self {
        let mut bytes = [0u8; 32];
        rng.fill_bytes(&mut bytes);
        MasterKey(HexDigest::from_bytes(&bytes))
    }

    pub fn from_hex(s: &str) -> Result<Self, CryptoError> {
        HexDigest::parse(s).map(MasterKey)
    }

    /// The hex text form, which is what the derivations consume.
    pub fn expose(&self) -> &str {
        self.0.as_str()
    }
}

impl fmt::Debug for MasterKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("MasterKey(..)")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_uppercase_and_short() {
        assert!(HexDigest::parse(&"A".repeat(64)).is_err());
        assert!(HexDigest::parse(&"a".repeat(63)).is_err());
        assert!(HexDigest::parse(&"a".repeat(64)).is_ok());
    }

    #[test]
    fn leading_zero_bits_counts_across_bytes() {
        let mut b = [0u8; 32];
        b[1] = 0x10;
        assert_eq!(HexDigest::from_bytes(&b).leading_zero_bits(), 11);
        assert_eq!(HexDigest::zero().leading_zero_bits(), 256);
    }

    #[test]
    fn master_key_debug_is_redacted() {
        let key = MasterKey::from_hex(&"ab".repeat(32)).unwrap();
        assert!(!format!("{key:?}").contains("abab"));
    }
}
