use std::fs;
use std::path::Path;

use chrono::{Days, Months, NaiveDate};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use crate::json;
use crate::registry::{IdentityDirectoryEntry, PinRegion, RegistryError};

pub const MIN_AGE: u32 = 12;
pub const MAX_AGE: u32 = 90;

pub const DIRECTORY_FILE: &str = "directory.jsonl";
pub const REGIONS_FILE: &str = "regions.jsonl";

struct StateRow {
    state: &'static str,
    code: &'static str,
    districts: [(&'static str, u32); 2],
}

const STATES: &[StateRow] = &[
    StateRow { state: "Gujarat", code: "GJ", districts: [("Ahmedabad", 380001), ("Surat", 395003)] },
    StateRow { state: "Maharashtra", code: "MH", districts: [("Mumbai", 400001), ("Pune", 411001)] },
    StateRow { state: "Karnataka", code: "KA", districts: [("Bengaluru", 560001), ("Mysuru", 570001)] },
    StateRow { state: "Tamil Nadu", code: "TN", districts: [("Chennai", 600001), ("Madurai", 625001)] },
    StateRow { state: "Rajasthan", code: "RJ", districts: [("Jaipur", 302001), ("Jodhpur", 342001)] },
    StateRow { state: "West Bengal", code: "WB", districts: [("Kolkata", 700001), ("Howrah", 711101)] },
    StateRow { state: "Kerala", code: "KL", districts: [("Kochi", 682001), ("Kozhikode", 673001)] },
    StateRow { state: "Punjab", code: "PB", districts: [("Ludhiana", 141001), ("Amritsar", 143001)] },
    StateRow { state: "Telangana", code: "TS", districts: [("Hyderabad", 500001), ("Warangal", 506001)] },
    StateRow { state: "Bihar", code: "BR", districts: [("Patna", 800001), ("Gaya", 823001)] },
];

const PINS_PER_DISTRICT: u32 = 3;

pub fn max_agencies() -> usize {
    STATES.len()
}

pub fn agency_id_for(state_code: &str) -> String {
    format!("AG-{state_code}")
}

/// One agency per state, two districts per state, a few PINs per district.
pub fn generate_regions(agencies: usize) -> Vec<PinRegion> {
    assert!(agencies >= 1 && agencies <= STATES.len(), "1..={} agencies supported", STATES.len());
    STATES[..agencies]
        .iter()
        .flat_map(|s| {
            s.districts.iter().flat_map(move |&(district, base)| {
                (0..PINS_PER_DISTRICT).map(move |i| PinRegion {
                    pin: (base + i * 2).to_string(),
                    district: district.to_owned(),
                    state: s.state.to_owned(),
                    state_code: s.code.to_owned(),
                    agency_id: agency_id_for(s.code),
                })
            })
        })
        .collect()
}

const FIRST: &[&str] = &[
    "Aarav", "Vivaan", "Aditya", "Vihaan", "Arjun", "Sai", "Reyansh", "Ayaan", "Krishna", "Ishaan", "Ananya", "Diya",
    "Aadhya", "Saanvi", "Pari", "Anika", "Navya", "Myra", "Meera", "Kavya", "Rohan", "Nisha", "Farhan", "Zoya",
];
const LAST: &[&str] = &[
    "Sharma", "Patel", "Iyer", "Reddy", "Singh", "Khan", "Gupta", "Nair", "Menon", "Das", "Joshi", "Mehta", "Bose",
    "Kulkarni", "Chopra", "Pillai", "Verma", "Shah",
];
const GENDERS: &[&str] = &["Female", "Male", "Other"];

/// Date of birth for someone exactly `age` on `reference`, offset by up
/// to 364 days so birthdays spread over the year.
fn dob_for(age: u32, reference: NaiveDate, offset_days: u64) -> NaiveDate {
    let birthday = reference.checked_sub_months(Months::new(12 * age)).expect("date in range");
    birthday.checked_sub_days(Days::new(offset_days)).expect("date in range")
}

/// `n` synthetic directory entries. Ages are uniform over 12..=90 on
/// `reference`; PINs are drawn uniformly from `regions`.
pub fn generate_population(n: usize, regions: &[PinRegion], seed: u64, reference: NaiveDate) -> Vec<IdentityDirectoryEntry> {
    let mut rng = ChaCha20Rng::seed_from_u64(seed ^ 0x706f_7075_6c61_7465);
    (0..n)
        .map(|_| {
            let uuid = uuid::Builder::from_random_bytes(rng.gen()).into_uuid().to_string();
            let name = format!("{} {}", FIRST.choose(&mut rng).unwrap(), LAST.choose(&mut rng).unwrap());
            let age = rng.gen_range(MIN_AGE..=MAX_AGE);
            let dob = dob_for(age, reference, rng.gen_range(0..365));
            let phone = format!("+91 9{:04} {:05}", rng.gen_range(0..10_000), rng.gen_range(0..100_000));
            let gender = GENDERS.choose(&mut rng).unwrap().to_string();
            let pin = regions.choose(&mut rng).expect("regions non-empty").pin.clone();
            IdentityDirectoryEntry { uuid, name, dob, phone, gender, pin }
        })
        .collect()
}

/// Write `directory.jsonl` and `regions.jsonl` into `dir`.
pub fn write_fixtures(dir: &Path, entries: &[IdentityDirectoryEntry], regions: &[PinRegion]) -> Result<(), RegistryError> {
    fs::create_dir_all(dir).map_err(|e| RegistryError::Io(e.to_string()))?;
    let lines = |items: Vec<String>| items.into_iter().map(|l| l + "\n").collect::<String>();
    let dir_text = lines(entries.iter().map(|e| json::canonical_line(e).expect("entries serialize")).collect());
    let reg_text = lines(regions.iter().map(|r| json::canonical_line(r).expect("regions serialize")).collect());
    fs::write(dir.join(DIRECTORY_FILE), dir_text).map_err(|e| RegistryError::Io(e.to_string()))?;
    fs::write(dir.join(REGIONS_FILE), reg_text).map_err(|e| RegistryError::Io(e.to_string()))?;
    Ok(())
}
