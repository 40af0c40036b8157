use std::fmt;
use std::str::FromStr;

use rand::seq::{IteratorRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::crypto::{sha256_hex, HexDigest};
use crate::engine::Engine;
use crate::registry::{CitizenProfile, EntityKind, RegistryError, VaccinationRecord};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TamperSpec {
    #[default]
    None,
    Db(usize),
    Ledger(usize),
}

impl FromStr for TamperSpec {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        if s == "none" {
            return Ok(TamperSpec::None);
        }
        let (kind, k) = s.split_once(':').ok_or_else(|| format!("expected none, db:k or ledger:k, got {s:?}"))?;
        let k: usize = k.parse().map_err(|_| format!("bad tamper count {k:?}"))?;
        match kind {
            "db" => Ok(TamperSpec::Db(k)),
            "ledger" => Ok(TamperSpec::Ledger(k)),
            _ => Err(format!("unknown tamper target {kind:?}")),
        }
    }
}

impl fmt::Display for TamperSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TamperSpec::None => f.write_str("none"),
            TamperSpec::Db(k) => write!(f, "db:{k}"),
            TamperSpec::Ledger(k) => write!(f, "ledger:{k}"),
        }
    }
}

impl Serialize for TamperSpec {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for TamperSpec {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        String::deserialize(d)?.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TamperTarget {
    Citizen,
    Vaccination,
    Block,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TamperEntry {
    pub target: TamperTarget,
    /// pseudoUUID, vaccinationID or block height.
    pub subject: String,
    pub field: String,
    pub old: Value,
    pub new: Value,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TamperError {
    #[error("asked for {requested} tampers but only {available} targets exist")]
    TooMany { requested: usize, available: usize },
    #[error(transparent)]
    Registry(#[from] RegistryError),
}

const CITIZEN_FIELDS: &[&str] = &["age", "gender", "district", "state", "pinCode", "staticKey", "secretCode"];
const VACCINATION_FIELDS: &[&str] = &["vaccineName", "vaccinator", "healthConditions", "timestamp"];

fn flip_hex(d: &HexDigest, at: usize) -> HexDigest {
    let mut s = d.as_str().to_owned().into_bytes();
    s[at] = if s[at] == b'0' { b'1' } else { b'0' };
    HexDigest::parse(std::str::from_utf8(&s).expect("ascii")).expect("still hex")
}

fn citizen_value(c: &CitizenProfile, field: &str) -> Value {
    match field {
        "age" => json!(c.age + 1),
        "gender" => json!(if c.gender == "Female" { "Male" } else { "Female" }),
        "district" => json!(format!("{} Rural", c.district)),
        "state" => json!(format!("{} Union", c.state)),
        "pinCode" => json!(if c.pin_code == "999999" { "999998" } else { "999999" }),
        "staticKey" => json!(sha256_hex(c.static_key.as_str().as_bytes()).to_string()),
        "secretCode" => json!(if c.secret_code == 9999 { 1000 } else { c.secret_code + 1 }),
        _ => unreachable!("unlisted field {field}"),
    }
}

fn vaccination_value(v: &VaccinationRecord, field: &str) -> Value {
    match field {
        "vaccineName" => json!(format!("{} (relabelled)", v.vaccine_name)),
        "vaccinator" => json!(format!("{} Jr.", v.vaccinator)),
        "healthConditions" => json!("Not recorded"),
        "timestamp" => serde_json::to_value(v.timestamp.plus_secs(3600)).expect("timestamp serializes"),
        _ => unreachable!("unlisted field {field}"),
    }
}

/// Mutate `k` distinct database records in place, one field each, without
/// touching the ledger.
pub fn tamper_database(engine: &mut Engine, k: usize, seed: u64) -> Result<Vec<TamperEntry>, TamperError> {
    let registry = engine.registry();
    let mut targets: Vec<(TamperTarget, String)> = registry
        .citizens()
        .map(|c| (TamperTarget::Citizen, c.pseudo_uuid.to_string()))
        .chain(registry.vaccinations().map(|v| (TamperTarget::Vaccination, v.vaccination_id.clone())))
        .collect();
    if k > targets.len() {
        return Err(TamperError::TooMany { requested: k, available: targets.len() });
    }
    let mut rng = ChaCha20Rng::seed_from_u64(seed ^ 0x7461_6d70_6572_6462);
    let (picked, _) = targets.partial_shuffle(&mut rng, k);
    let mut picked = picked.to_vec();
    picked.sort();

    let mut manifest = Vec::with_capacity(k);
    for (target, subject) in picked {
        let (kind, field, new) = match target {
            TamperTarget::Citizen => {
                let c = engine.registry().citizen(&HexDigest::parse(&subject).expect("key is hex")).expect("listed");
                let field = *CITIZEN_FIELDS.choose(&mut rng).unwrap();
                (EntityKind::Citizen, field, citizen_value(c, field))
            }
            TamperTarget::Vaccination => {
                let v = engine.registry().vaccination(&subject).expect("listed");
                let field = *VACCINATION_FIELDS.choose(&mut rng).unwrap();
                (EntityKind::Vaccination, field, vaccination_value(v, field))
            }
            TamperTarget::Block => unreachable!(),
        };
        let old = engine.tamper_store(kind, &subject, field, new.clone())?;
        manifest.push(TamperEntry { target, subject, field: field.to_owned(), old, new });
    }
    Ok(manifest)
}

/// Flip one byte in each of `k` distinct committed blocks.
pub fn tamper_ledger(engine: &mut Engine, k: usize, seed: u64) -> Result<Vec<TamperEntry>, TamperError> {
    let mut blocks = engine.chain().blocks().to_vec();
    if k > blocks.len() {
        return Err(TamperError::TooMany { requested: k, available: blocks.len() });
    }
    let mut rng = ChaCha20Rng::seed_from_u64(seed ^ 0x7461_6d70_6572_6c67);
    let mut heights = (0..blocks.len()).choose_multiple(&mut rng, k);
    heights.sort();

    let mut manifest = Vec::with_capacity(k);
    for h in heights {
        let block = &mut blocks[h];
        let choices = if block.transactions.is_empty() { 3 } else { 5 };
        let at = rng.gen_range(0..64);
        let (field, old, new) = match rng.gen_range(0..choices) {
            0 => {
                let old = block.header.nonce;
                block.header.nonce ^= 1;
                ("header.nonce", json!(old), json!(block.header.nonce))
            }
            1 => {
                let old = block.header.timestamp;
                block.header.timestamp = old.plus_secs(1);
                ("header.timestamp", json!(old), json!(block.header.timestamp))
            }
            2 => {
                let old = block.header.merkle_root.clone();
                block.header.merkle_root = flip_hex(&old, at);
                ("header.merkleRoot", json!(old), json!(block.header.merkle_root))
            }
            3 => {
                let tx = block.transactions.choose_mut(&mut rng).unwrap();
                let old = tx.entity.memo_hash.clone();
                tx.entity.memo_hash = flip_hex(&old, at);
                ("transaction.memoHash", json!(old), json!(tx.entity.memo_hash))
            }
            _ => {
                let tx = block.transactions.choose_mut(&mut rng).unwrap();
                let old = tx.entity.additional_data.clone();
                let mut bytes = old.clone().into_bytes();
                let i = rng.gen_range(0..bytes.len());
                bytes[i] = if bytes[i] == b'x' { b'y' } else { b'x' };
                tx.entity.additional_data = String::from_utf8(bytes).expect("ascii payload");
                ("transaction.additionalData", json!(old), json!(tx.entity.additional_data))
            }
        };
        manifest.push(TamperEntry { target: TamperTarget::Block, subject: h.to_string(), field: field.to_owned(), old, new });
    }
    engine.replace_chain_for_tamper(blocks);
    Ok(manifest)
}

pub fn inject_tamper(engine: &mut Engine, spec: TamperSpec, seed: u64) -> Result<Vec<TamperEntry>, TamperError> {
    match spec {
        TamperSpec::None => Ok(Vec::new()),
        TamperSpec::Db(k) => tamper_database(engine, k, seed),
        TamperSpec::Ledger(k) => tamper_ledger(engine, k, seed),
    }
}
