//! In-memory store for agencies, centers, citizens and vaccinations, with
//! secondary indexes and JSON-lines snapshots.

mod directory;
mod model;

pub use directory::{load_fixtures, IdentityDirectory, RegionTable};
pub use model::{
    CitizenFilter, CitizenProfile, EntityKind, GovernmentAgency, IdentityDirectoryEntry, PinRegion,
    VaccinationCenter, VaccinationRecord,
};

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::Value;
use thiserror::Error;

use crate::crypto::HexDigest;
use crate::json;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RegistryError {
    #[error("duplicate uuid in directory: {0}")]
    DuplicateUuid(String),
    #[error("pin {0} is not mapped to any agency")]
    UnmappedPin(String),
    #[error("pin {0} mapped to two agencies")]
    ConflictingRegion(String),
    #[error("duplicate {kind:?} key {key}")]
    DuplicateKey { kind: EntityKind, key: String },
    #[error("{kind:?} {key} not found")]
    NotFound { kind: EntityKind, key: String },
    #[error("no citizen for that secret code and pin")]
    CitizenNotFound,
    #[error("more than one citizen matches that secret code and pin")]
    Ambiguous,
    #[error("center {0} has insufficient stock")]
    InsufficientStock(String),
    #[error("field {0} is a primary key and cannot be tampered")]
    ImmutableField(String),
    #[error("{kind:?} has no field {field}")]
    UnknownField { kind: EntityKind, field: String },
    #[error("value does not fit field: {0}")]
    BadValue(String),
    #[error("io: {0}")]
    Io(String),
    #[error("parse: {0}")]
    Parse(String),
}

#[derive(Debug, Clone, Default)]
struct Indexes {
    by_credential: HashMap<(u32, String), BTreeSet<HexDigest>>,
    by_district: HashMap<String, BTreeSet<HexDigest>>,
    by_state: HashMap<String, BTreeSet<HexDigest>>,
    by_agency: HashMap<String, BTreeSet<HexDigest>>,
    by_age: BTreeMap<u32, BTreeSet<HexDigest>>,
    doses_by_citizen: HashMap<HexDigest, BTreeSet<(u32, String)>>,
    vaccinations_by_center: HashMap<String, BTreeSet<String>>,
}

fn unindex<K: std::hash::Hash + Eq, V: Ord>(map: &mut HashMap<K, BTreeSet<V>>, key: &K, value: &V) {
    if let Some(set) = map.get_mut(key) {
        set.remove(value);
        if set.is_empty() {
            map.remove(key);
        }
    }
}

impl Indexes {
    fn add_citizen(&mut self, c: &CitizenProfile) {
        let k = &c.pseudo_uuid;
        self.by_credential.entry((c.secret_code, c.pin_code.clone())).or_default().insert(k.clone());
        self.by_district.entry(c.district.clone()).or_default().insert(k.clone());
        self.by_state.entry(c.state.clone()).or_default().insert(k.clone());
        self.by_agency.entry(c.agency_id.clone()).or_default().insert(k.clone());
        self.by_age.entry(c.age).or_default().insert(k.clone());
    }

    fn remove_citizen(&mut self, c: &CitizenProfile) {
        let k = &c.pseudo_uuid;
        unindex(&mut self.by_credential, &(c.secret_code, c.pin_code.clone()), k);
        unindex(&mut self.by_district, &c.district, k);
        unindex(&mut self.by_state, &c.state, k);
        unindex(&mut self.by_agency, &c.agency_id, k);
        if let Some(set) = self.by_age.get_mut(&c.age) {
            set.remove(k);
            if set.is_empty() {
                self.by_age.remove(&c.age);
            }
        }
    }

    fn add_vaccination(&mut self, v: &VaccinationRecord) {
        self.doses_by_citizen
            .entry(v.pseudo_uuid.clone())
            .or_default()
            .insert((v.dose_number, v.vaccination_id.clone()));
        self.vaccinations_by_center.entry(v.center_id.clone()).or_default().insert(v.vaccination_id.clone());
    }

    fn remove_vaccination(&mut self, v: &VaccinationRecord) {
        unindex(&mut self.doses_by_citizen, &v.pseudo_uuid, &(v.dose_number, v.vaccination_id.clone()));
        unindex(&mut self.vaccinations_by_center, &v.center_id, &v.vaccination_id);
    }
}

/// The portal database. Mutations take `&mut self`; callers share it behind
/// a single-writer lock.
#[derive(Debug, Clone, Default)]
pub struct Registry {
    agencies: BTreeMap<String, GovernmentAgency>,
    centers: BTreeMap<String, VaccinationCenter>,
    citizens: BTreeMap<HexDigest, CitizenProfile>,
    vaccinations: BTreeMap<String, VaccinationRecord>,
    idx: Indexes,
}

const SNAPSHOT_FILES: [(EntityKind, &str); 4] = [
    (EntityKind::Agency, "agencies.jsonl"),
    (EntityKind::Center, "centers.jsonl"),
    (EntityKind::Citizen, "citizens.jsonl"),
    (EntityKind::Vaccination, "vaccinations.jsonl"),
];

impl Registry {
    pub fn new() -> Self {
        Self::default()
    }

    // --- agencies ---

    pub fn insert_agency(&mut self, a: GovernmentAgency) -> Result<(), RegistryError> {
        if self.agencies.contains_key(&a.agency_id) {
            return Err(RegistryError::DuplicateKey { kind: EntityKind::Agency, key: a.agency_id });
        }
        self.agencies.insert(a.agency_id.clone(), a);
        Ok(())
    }

    pub fn agency(&self, id: &str) -> Option<&GovernmentAgency> {
        self.agencies.get(id)
    }

    pub fn agencies(&self) -> impl Iterator<Item = &GovernmentAgency> {
        self.agencies.values()
    }

    // --- centers ---

    pub fn insert_center(&mut self, c: VaccinationCenter) -> Result<(), RegistryError> {
        if self.centers.contains_key(&c.center_id) {
            return Err(RegistryError::DuplicateKey { kind: EntityKind::Center, key: c.center_id });
        }
        self.centers.insert(c.center_id.clone(), c);
        Ok(())
    }

    pub fn center(&self, id: &str) -> Option<&VaccinationCenter> {
        self.centers.get(id)
    }

    pub fn centers(&self) -> impl Iterator<Item = &VaccinationCenter> {
        self.centers.values()
    }

    /// Positive `delta` is a supply event (raises supplied and remaining);
    /// negative `delta` administers doses.
    pub fn adjust_stock(&mut self, center_id: &str, delta: i64) -> Result<&VaccinationCenter, RegistryError> {
        let c = self
            .centers
            .get_mut(center_id)
            .ok_or_else(|| RegistryError::NotFound { kind: EntityKind::Center, key: center_id.to_owned() })?;
        if delta >= 0 {
            c.doses_supplied += delta as u64;
            c.doses_remaining += delta as u64;
        } else {
            let take = delta.unsigned_abs();
            if c.doses_remaining < take {
                return Err(RegistryError::InsufficientStock(center_id.to_owned()));
            }
            c.doses_remaining -= take;
        }
        Ok(c)
    }

    // --- citizens ---

    pub fn insert_citizen(&mut self, c: CitizenProfile) -> Result<(), RegistryError> {
        if self.citizens.contains_key(&c.pseudo_uuid) {
            return Err(RegistryError::DuplicateKey { kind: EntityKind::Citizen, key: c.pseudo_uuid.to_string() });
        }
        self.idx.add_citizen(&c);
        self.citizens.insert(c.pseudo_uuid.clone(), c);
        Ok(())
    }

    pub fn citizen(&self, pseudo_uuid: &HexDigest) -> Option<&CitizenProfile> {
        self.citizens.get(pseudo_uuid)
    }

    pub fn citizens(&self) -> impl Iterator<Item = &CitizenProfile> {
        self.citizens.values()
    }

    pub fn citizen_count(&self) -> usize {
        self.citizens.len()
    }

    pub fn set_doses_completed(&mut self, pseudo_uuid: &HexDigest, doses: u32) -> Result<(), RegistryError> {
        let c = self.citizens.get_mut(pseudo_uuid).ok_or_else(|| RegistryError::NotFound {
            kind: EntityKind::Citizen,
            key: pseudo_uuid.to_string(),
        })?;
        c.doses_completed = doses;
        Ok(())
    }

    pub fn secret_code_taken(&self, secret_code: u32, pin: &str) -> bool {
        self.idx.by_credential.contains_key(&(secret_code, pin.to_owned()))
    }

    pub fn lookup_citizen(&self, secret_code: u32, pin: &str) -> Result<&CitizenProfile, RegistryError> {
        let set = self
            .idx
            .by_credential
            .get(&(secret_code, pin.to_owned()))
            .ok_or(RegistryError::CitizenNotFound)?;
        if set.len() > 1 {
            return Err(RegistryError::Ambiguous);
        }
        let key = set.iter().next().ok_or(RegistryError::CitizenNotFound)?;
        self.citizens.get(key).ok_or(RegistryError::CitizenNotFound)
    }

    /// Index-backed filter; an empty filter returns everyone.
    pub fn query_citizens(&self, filter: &CitizenFilter) -> Vec<&CitizenProfile> {
        let mut sets: Vec<BTreeSet<&HexDigest>> = Vec::new();
        if let Some(d) = &filter.district {
            sets.push(borrowed(self.idx.by_district.get(d)));
        }
        if let Some(s) = &filter.state {
            sets.push(borrowed(self.idx.by_state.get(s)));
        }
        if let Some(a) = &filter.agency_id {
            sets.push(borrowed(self.idx.by_agency.get(a)));
        }
        if filter.min_age.is_some() || filter.max_age.is_some() {
            let lo = filter.min_age.unwrap_or(0);
            let hi = filter.max_age.unwrap_or(u32::MAX);
            let set = if lo > hi {
                BTreeSet::new()
            } else {
                self.idx.by_age.range(lo..=hi).flat_map(|(_, s)| s.iter()).collect()
            };
            sets.push(set);
        }
        sets.sort_by_key(BTreeSet::len);
        let mut sets = sets.into_iter();
        let Some(first) = sets.next() else {
            return self.citizens.values().collect();
        };
        let keys = sets.fold(first, |acc, s| acc.intersection(&s).copied().collect());
        keys.into_iter().filter_map(|k| self.citizens.get(k)).collect()
    }

    // --- vaccinations ---

    pub fn insert_vaccination(&mut self, v: VaccinationRecord) -> Result<(), RegistryError> {
        if self.vaccinations.contains_key(&v.vaccination_id) {
            return Err(RegistryError::DuplicateKey { kind: EntityKind::Vaccination, key: v.vaccination_id });
        }
        let dup_dose = self
            .idx
            .doses_by_citizen
            .get(&v.pseudo_uuid)
            .is_some_and(|s| s.iter().any(|(d, _)| *d == v.dose_number));
        if dup_dose {
            return Err(RegistryError::DuplicateKey {
                kind: EntityKind::Vaccination,
                key: format!("{}#{}", v.pseudo_uuid, v.dose_number),
            });
        }
        self.insert_vaccination_unchecked(v);
        Ok(())
    }

    /// Inserts without the per-citizen dose uniqueness check. Used only to
    /// simulate database corruption.
    pub fn insert_vaccination_unchecked(&mut self, v: VaccinationRecord) {
        if let Some(old) = self.vaccinations.remove(&v.vaccination_id) {
            self.idx.remove_vaccination(&old);
        }
        self.idx.add_vaccination(&v);
        self.vaccinations.insert(v.vaccination_id.clone(), v);
    }

    pub fn vaccination(&self, id: &str) -> Option<&VaccinationRecord> {
        self.vaccinations.get(id)
    }

    pub fn vaccinations(&self) -> impl Iterator<Item = &VaccinationRecord> {
        self.vaccinations.values()
    }

    pub fn vaccination_count(&self) -> usize {
        self.vaccinations.len()
    }

    /// Records of one citizen ordered by dose number.
    pub fn vaccinations_of(&self, pseudo_uuid: &HexDigest) -> Vec<&VaccinationRecord> {
        self.idx
            .doses_by_citizen
            .get(pseudo_uuid)
            .map(|s| s.iter().filter_map(|(_, id)| self.vaccinations.get(id)).collect())
            .unwrap_or_default()
    }

    pub fn vaccinations_at_center(&self, center_id: &str) -> usize {
        self.idx.vaccinations_by_center.get(center_id).map_or(0, |s| s.len())
    }

    /// Highest recorded dose number, 0 when none.
    pub fn count_doses(&self, pseudo_uuid: &HexDigest) -> u32 {
        self.idx
            .doses_by_citizen
            .get(pseudo_uuid)
            .and_then(|s| s.iter().map(|(d, _)| *d).max())
            .unwrap_or(0)
    }

    // --- tampering ---

    /// Overwrite one field of a stored entity, bypassing every invariant.
    /// Returns the previous value. Primary keys are immutable.
    pub fn tamper(&mut self, kind: EntityKind, key: &str, field: &str, new_value: Value) -> Result<Value, RegistryError> {
        if field == kind.key_field() {
            return Err(RegistryError::ImmutableField(field.to_owned()));
        }
        let not_found = || RegistryError::NotFound { kind, key: key.to_owned() };
        match kind {
            EntityKind::Agency => {
                let slot = self.agencies.get_mut(key).ok_or_else(not_found)?;
                patch(slot, kind, field, new_value)
            }
            EntityKind::Center => {
                let slot = self.centers.get_mut(key).ok_or_else(not_found)?;
                patch(slot, kind, field, new_value)
            }
            EntityKind::Citizen => {
                let k = HexDigest::parse(key).map_err(|_| not_found())?;
                let mut rec = self.citizens.get(&k).ok_or_else(not_found)?.clone();
                let old = patch(&mut rec, kind, field, new_value)?;
                let prev = self.citizens.insert(k, rec.clone()).expect("present");
                self.idx.remove_citizen(&prev);
                self.idx.add_citizen(&rec);
                Ok(old)
            }
            EntityKind::Vaccination => {
                let mut rec = self.vaccinations.get(key).ok_or_else(not_found)?.clone();
                let old = patch(&mut rec, kind, field, new_value)?;
                self.insert_vaccination_unchecked(rec);
                Ok(old)
            }
        }
    }

    /// Delete an entity outright (simulated data loss).
    pub fn remove(&mut self, kind: EntityKind, key: &str) -> Result<(), RegistryError> {
        let not_found = || RegistryError::NotFound { kind, key: key.to_owned() };
        match kind {
            EntityKind::Agency => self.agencies.remove(key).map(drop).ok_or_else(not_found),
            EntityKind::Center => self.centers.remove(key).map(drop).ok_or_else(not_found),
            EntityKind::Citizen => {
                let k = HexDigest::parse(key).map_err(|_| not_found())?;
                let c = self.citizens.remove(&k).ok_or_else(not_found)?;
                self.idx.remove_citizen(&c);
                Ok(())
            }
            EntityKind::Vaccination => {
                let v = self.vaccinations.remove(key).ok_or_else(not_found)?;
                self.idx.remove_vaccination(&v);
                Ok(())
            }
        }
    }

    // --- snapshots ---

    pub fn snapshot(&self, dir: &Path) -> Result<(), RegistryError> {
        fs::create_dir_all(dir).map_err(|e| RegistryError::Io(e.to_string()))?;
        for (kind, file) in SNAPSHOT_FILES {
            let body = match kind {
                EntityKind::Agency => lines(self.agencies.values())?,
                EntityKind::Center => lines(self.centers.values())?,
                EntityKind::Citizen => lines(self.citizens.values())?,
                EntityKind::Vaccination => lines(self.vaccinations.values())?,
            };
            fs::write(dir.join(file), body).map_err(|e| RegistryError::Io(e.to_string()))?;
        }
        Ok(())
    }

    /// Rebuild a store from a snapshot directory. Records are loaded as-is,
    /// including any corruption they carry.
    pub fn restore(dir: &Path) -> Result<Self, RegistryError> {
        let mut reg = Registry::new();
        for a in read_lines::<GovernmentAgency>(&dir.join("agencies.jsonl"))? {
            reg.agencies.insert(a.agency_id.clone(), a);
        }
        for c in read_lines::<VaccinationCenter>(&dir.join("centers.jsonl"))? {
            reg.centers.insert(c.center_id.clone(), c);
        }
        for c in read_lines::<CitizenProfile>(&dir.join("citizens.jsonl"))? {
            reg.idx.add_citizen(&c);
            reg.citizens.insert(c.pseudo_uuid.clone(), c);
        }
        for v in read_lines::<VaccinationRecord>(&dir.join("vaccinations.jsonl"))? {
            reg.insert_vaccination_unchecked(v);
        }
        Ok(reg)
    }
}

fn borrowed(set: Option<&BTreeSet<HexDigest>>) -> BTreeSet<&HexDigest> {
    set.map(|s| s.iter().collect()).unwrap_or_default()
}

fn patch<T: Serialize + DeserializeOwned>(slot: &mut T, kind: EntityKind, field: &str, new_value: Value) -> Result<Value, RegistryError> {
    let mut v = serde_json::to_value(&*slot).map_err(|e| RegistryError::BadValue(e.to_string()))?;
    let obj = v.as_object_mut().expect("records serialize as objects");
    let old = obj
        .get_mut(field)
        .map(|f| std::mem::replace(f, new_value))
        .ok_or_else(|| RegistryError::UnknownField { kind, field: field.to_owned() })?;
    *slot = serde_json::from_value(v).map_err(|e| RegistryError::BadValue(e.to_string()))?;
    Ok(old)
}

fn lines<'a, T: Serialize + 'a>(items: impl Iterator<Item = &'a T>) -> Result<String, RegistryError> {
    let mut out = String::new();
    for item in items {
        out.push_str(&json::canonical_line(item).map_err(|e| RegistryError::Parse(e.to_string()))?);
        out.push('\n');
    }
    Ok(out)
}

fn read_lines<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>, RegistryError> {
    let text = fs::read_to_string(path).map_err(|e| RegistryError::Io(format!("{}: {e}", path.display())))?;
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| serde_json::from_str(l).map_err(|e| RegistryError::Parse(e.to_string())))
        .collect()
}
