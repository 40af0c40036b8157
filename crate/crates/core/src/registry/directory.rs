//! Mock government identity directory and PIN-region table.

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::path::Path;

use serde::de::DeserializeOwned;

use super::{IdentityDirectoryEntry, PinRegion, RegistryError};

#[derive(Debug, Clone, Default)]
pub struct IdentityDirectory {
    entries: HashMap<String, IdentityDirectoryEntry>,
}

impl IdentityDirectory {
    pub fn from_entries(entries: impl IntoIterator<Item = IdentityDirectoryEntry>) -> Result<Self, RegistryError> {
        let mut map = HashMap::new();
        for e in entries {
            if map.contains_key(&e.uuid) {
                return Err(RegistryError::DuplicateUuid(e.uuid));
            }
            map.insert(e.uuid.clone(), e);
        }
        Ok(IdentityDirectory { entries: map })
    }

    pub fn lookup(&self, uuid: &str) -> Option<&IdentityDirectoryEntry> {
        self.entries.get(uuid)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> impl Iterator<Item = &IdentityDirectoryEntry> {
        self.entries.values()
    }
}

#[derive(Debug, Clone, Default)]
pub struct RegionTable {
    regions: BTreeMap<String, PinRegion>,
}

impl RegionTable {
    pub fn from_regions(regions: impl IntoIterator<Item = PinRegion>) -> Result<Self, RegistryError> {
        let mut map = BTreeMap::new();
        for r in regions {
            if let Some(prev) = map.get(&r.pin) {
                let prev: &PinRegion = prev;
                if prev.agency_id != r.agency_id {
                    return Err(RegistryError::ConflictingRegion(r.pin));
                }
            }
            map.insert(r.pin.clone(), r);
        }
        Ok(RegionTable { regions: map })
    }

    pub fn lookup(&self, pin: &str) -> Option<&PinRegion> {
        self.regions.get(pin)
    }

    pub fn pins_of_agency(&self, agency_id: &str) -> Vec<String> {
        self.regions.values().filter(|r| r.agency_id == agency_id).map(|r| r.pin.clone()).collect()
    }

    pub fn regions(&self) -> impl Iterator<Item = &PinRegion> {
        self.regions.values()
    }

    pub fn len(&self) -> usize {
        self.regions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.regions.is_empty()
    }
}

fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>, RegistryError> {
    let text = fs::read_to_string(path).map_err(|e| RegistryError::Io(format!("{}: {e}", path.display())))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| RegistryError::Parse(format!("{}:{}: {e}", path.display(), i + 1)))
        })
        .collect()
}

/// Load the directory and region fixtures. Every directory PIN must be
/// mapped by the region table.
pub fn load_fixtures(directory_file: &Path, region_file: &Path) -> Result<(IdentityDirectory, RegionTable), RegistryError> {
    let regions = RegionTable::from_regions(read_jsonl::<PinRegion>(region_file)?)?;
    let directory = IdentityDirectory::from_entries(read_jsonl::<IdentityDirectoryEntry>(directory_file)?)?;
    for e in directory.entries() {
        if regions.lookup(&e.pin).is_none() {
            return Err(RegistryError::UnmappedPin(e.pin.clone()));
        }
    }
    Ok((directory, regions))
}
