use std::collections::BTreeMap;

use super::{sha256_hex, HexDigest};

/// Field-name to text map with the byte-exact `name=value\n` encoding used
/// for memo hashes, signatures and Merkle leaves.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CanonicalRecord(BTreeMap<String, String>);

impl CanonicalRecord {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn field(mut self, name: &str, value: impl ToString) -> Self {
        self.0.insert(name.to_owned(), value.to_string());
        self
    }

    pub fn list<I, T>(self, name: &str, items: I) -> Self
    where
        I: IntoIterator<Item = T>,
        T: ToString,
    {
        let joined = items.into_iter().map(|t| t.to_string()).collect::<Vec<_>>().join(",");
        self.field(name, joined)
    }

    pub fn fields(&self) -> &BTreeMap<String, String> {
        &self.0
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        canonical_record_bytes(&self.0)
    }

    pub fn digest(&self) -> HexDigest {
        sha256_hex(&self.to_bytes())
    }
}

/// Ascending byte order of field names; one `name=value` line per field.
pub fn canonical_record_bytes(record: &BTreeMap<String, String>) -> Vec<u8> {
    let mut out = Vec::new();
    // BTreeMap<String, _> iterates in byte order of the keys
    for (name, value) in record {
        out.extend_from_slice(name.as_bytes());
        out.push(b'=');
        out.extend_from_slice(value.as_bytes());
        out.push(b'\n');
    }
    out
}

pub trait Canonical {
    fn canonical_record(&self) -> CanonicalRecord;

    fn canonical_digest(&self) -> HexDigest {
        self.canonical_record().digest()
    }
}
