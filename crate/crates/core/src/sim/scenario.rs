use std::collections::BTreeMap;
use std::sync::Arc;
use std::time::Instant;

use chrono::NaiveDate;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::audit::AuditReport;
use crate::clock::{ManualClock, Timestamp};
use crate::engine::{Engine, EngineConfig, SolveOutcome};
use crate::entropy::Entropy;
use crate::ledger::{Block, TxType};
use crate::registry::{IdentityDirectory, IdentityDirectoryEntry, PinRegion, RegionTable};

use super::driver::{Driver, DriverError, LocalDriver};
use super::population::{generate_population, generate_regions, max_agencies};
use super::tamper::{TamperEntry, TamperSpec};

/// 2021-06-01T00:00:00Z, the simulated start of the campaign.
pub const SCENARIO_START: i64 = 1_622_505_600;

pub fn scenario_reference_date() -> NaiveDate {
    Timestamp::from_unix(SCENARIO_START).date()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ScenarioConfig {
    pub citizens: usize,
    pub centers: usize,
    pub agencies: usize,
    pub doses_per_citizen: u32,
    pub seed: u64,
    pub tamper: TamperSpec,
    pub difficulty: u32,
    pub batch_size: usize,
    pub max_doses: u32,
    /// Defaults to the youngest generated age so every citizen is eligible.
    pub min_age: u32,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            citizens: 100,
            centers: 5,
            agencies: 2,
            doses_per_citizen: 2,
            seed: 1,
            tamper: TamperSpec::None,
            difficulty: 8,
            batch_size: 16,
            max_doses: 2,
            min_age: super::population::MIN_AGE,
        }
    }
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<(), String> {
        if self.citizens == 0 || self.centers == 0 || self.agencies == 0 {
            return Err("citizens, centers and agencies must be at least 1".into());
        }
        if self.agencies > max_agencies() {
            return Err(format!("at most {} agencies are supported", max_agencies()));
        }
        if self.doses_per_citizen > self.max_doses {
            return Err(format!("dosesPerCitizen {} exceeds maxDoses {}", self.doses_per_citizen, self.max_doses));
        }
        self.engine_config().validate().map_err(|e| e.to_string())
    }

    pub fn engine_config(&self) -> EngineConfig {
        EngineConfig {
            difficulty: self.difficulty,
            batch_size: self.batch_size,
            max_doses: self.max_doses,
            min_age: self.min_age,
            ..Default::default()
        }
    }

    pub fn regions(&self) -> Vec<PinRegion> {
        generate_regions(self.agencies)
    }

    pub fn population(&self, regions: &[PinRegion]) -> Vec<IdentityDirectoryEntry> {
        generate_population(self.citizens, regions, self.seed, scenario_reference_date())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ScenarioCounts {
    pub citizens_registered: usize,
    pub vaccinations: usize,
    pub registration_txs: usize,
    pub vaccination_txs: usize,
    pub blocks: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct NonceStats {
    pub mined_blocks: usize,
    pub total: u64,
    pub mean: f64,
    pub max: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CenterStock {
    #[serde(rename = "centerID")]
    pub center_id: String,
    #[serde(rename = "dosesSupplied")]
    pub doses_supplied: u64,
    #[serde(rename = "dosesRemaining")]
    pub doses_remaining: u64,
    #[serde(rename = "onChainDoses")]
    pub on_chain_doses: u64,
}

impl CenterStock {
    pub fn balanced(&self) -> bool {
        self.doses_supplied == self.doses_remaining + self.on_chain_doses
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ScenarioReport {
    pub config: ScenarioConfig,
    pub counts: ScenarioCounts,
    pub nonces: NonceStats,
    pub centers: Vec<CenterStock>,
    pub tamper_manifest: Vec<TamperEntry>,
    pub audit: AuditReport,
    pub wall_time_ms: u64,
}

impl ScenarioReport {
    /// Report JSON with wall-clock fields removed.
    pub fn deterministic_json(&self) -> Value {
        let mut v = serde_json::to_value(self).expect("report serializes");
        v.as_object_mut().expect("object").remove("wallTimeMs");
        crate::json::sorted(v)
    }

    pub fn stock_balanced(&self) -> bool {
        self.centers.iter().all(CenterStock::balanced)
    }
}

const VACCINES: &[&str] = &["Covishield", "Covaxin", "Sputnik V"];
const VACCINATORS: &[&str] = &["Dr. A. Rao", "Dr. S. Kulkarni", "Nurse K. Thomas", "Nurse P. Fernandes"];
const CONDITIONS: &[&str] = &["Normal, no COVID symptoms reported", "Mild fever after dose", "Hypertension, stable"];

struct Enrolled {
    pin: String,
    secret_code: u32,
    static_key: String,
    vaccine: &'static str,
}

/// Drive the whole protocol for `population` through `driver`: agencies,
/// centers and stock, OTP registration, identity pages and confirmed
/// doses, then tampering and a full audit.
pub fn run_scenario(
    config: &ScenarioConfig,
    population: &[IdentityDirectoryEntry],
    regions: &[PinRegion],
    driver: &mut dyn Driver,
) -> Result<ScenarioReport, DriverError> {
    let started = Instant::now();
    let mut rng = ChaCha20Rng::seed_from_u64(config.seed ^ 0x7363_656e_6172_696f);

    let mut by_agency: BTreeMap<String, Vec<&PinRegion>> = BTreeMap::new();
    for r in regions {
        by_agency.entry(r.agency_id.clone()).or_default().push(r);
    }
    let agency_pins: Vec<(String, Vec<&PinRegion>)> = by_agency.into_iter().collect();
    for (agency_id, _) in &agency_pins {
        driver.create_agency(agency_id)?;
    }

    let mut centers = Vec::with_capacity(config.centers);
    for i in 0..config.centers {
        let (_, pins) = &agency_pins[i % agency_pins.len()];
        let region = pins[(i / agency_pins.len()) % pins.len()];
        let c = driver.register_center(
            &format!("Vaccination Center {}", i + 1),
            &format!("{} Hospital Road, {}", i + 1, region.district),
            &region.pin,
        )?;
        centers.push(c);
    }
    let center_for = |citizen: usize, dose: u32| (citizen + dose as usize - 1) % config.centers;
    let mut need = vec![0u64; config.centers];
    for i in 0..population.len() {
        for dose in 1..=config.doses_per_citizen {
            need[center_for(i, dose)] += 1;
        }
    }
    for (c, n) in centers.iter().zip(&need) {
        driver.supply_stock(&c.center.center_id, n + 5)?;
    }

    let mut enrolled = Vec::with_capacity(population.len());
    for person in population {
        driver.tick(1);
        let session = driver.start_registration(&person.uuid, &person.phone)?;
        let otp = driver.read_otp(&session.session_id)?;
        let draft = driver.verify_otp(&session.session_id, &otp)?;
        let profile = driver.complete_registration(&draft.token, &person.pin, &person.gender)?;
        enrolled.push(Enrolled {
            pin: profile.pin_code,
            secret_code: profile.secret_code,
            static_key: profile.static_key.to_string(),
            vaccine: VACCINES.choose(&mut rng).unwrap(),
        });
    }

    let mut vaccinations = 0;
    for dose in 1..=config.doses_per_citizen {
        for (i, citizen) in enrolled.iter().enumerate() {
            driver.tick(1);
            let center = &centers[center_for(i, dose)];
            let suffix = driver.create_identity_page(citizen.secret_code, &citizen.pin, &center.center.center_id)?;
            let SolveOutcome::IdentityVerified { draft } = driver.solve_page(&suffix, &citizen.static_key, citizen.secret_code)? else {
                return Err(DriverError::Transport("identity page answered as confirmation".into()));
            };
            let confirm = driver.record_details(
                &draft.draft_id,
                citizen.vaccine,
                VACCINATORS.choose(&mut rng).unwrap(),
                CONDITIONS.choose(&mut rng).unwrap(),
                &center.static_key,
            )?;
            match driver.solve_page(&confirm, &citizen.static_key, citizen.secret_code)? {
                SolveOutcome::ConfirmationAccepted { .. } => vaccinations += 1,
                SolveOutcome::IdentityVerified { .. } => {
                    return Err(DriverError::Transport("confirmation page answered as identity".into()))
                }
            }
        }
    }

    driver.flush()?;
    let tamper_manifest = driver.tamper(config.tamper, config.seed)?;
    let audit = driver.audit()?;
    let blocks = driver.blocks()?;

    let mut center_stock = Vec::with_capacity(centers.len());
    for c in &centers {
        let view = driver.center(&c.center.center_id)?;
        let on_chain = blocks
            .iter()
            .flat_map(|b| &b.transactions)
            .filter(|tx| tx.tx_type == TxType::Vaccination && tx.signer_address == view.ledger_address)
            .count() as u64;
        center_stock.push(CenterStock {
            center_id: view.center_id,
            doses_supplied: view.doses_supplied,
            doses_remaining: view.doses_remaining,
            on_chain_doses: on_chain,
        });
    }

    Ok(ScenarioReport {
        config: config.clone(),
        counts: counts(&blocks, enrolled.len(), vaccinations),
        nonces: nonce_stats(&blocks),
        centers: center_stock,
        tamper_manifest,
        audit,
        wall_time_ms: started.elapsed().as_millis() as u64,
    })
}

fn counts(blocks: &[Block], citizens: usize, vaccinations: usize) -> ScenarioCounts {
    let of = |t: TxType| blocks.iter().flat_map(|b| &b.transactions).filter(|tx| tx.tx_type == t).count();
    ScenarioCounts {
        citizens_registered: citizens,
        vaccinations,
        registration_txs: of(TxType::Registration),
        vaccination_txs: of(TxType::Vaccination),
        blocks: blocks.len(),
    }
}

fn nonce_stats(blocks: &[Block]) -> NonceStats {
    let mined: Vec<u64> = blocks.iter().skip(1).map(|b| b.header.nonce).collect();
    let total: u64 = mined.iter().sum();
    NonceStats {
        mined_blocks: mined.len(),
        total,
        mean: if mined.is_empty() { 0.0 } else { total as f64 / mined.len() as f64 },
        max: mined.iter().copied().max().unwrap_or(0),
    }
}

/// An in-process engine for `config`, seeded and on a manual clock.
pub fn local_driver(config: &ScenarioConfig, population: &[IdentityDirectoryEntry], regions: &[PinRegion]) -> Result<LocalDriver, DriverError> {
    let directory = IdentityDirectory::from_entries(population.iter().cloned()).map_err(crate::engine::EngineError::from)?;
    let table = RegionTable::from_regions(regions.iter().cloned()).map_err(crate::engine::EngineError::from)?;
    let clock = ManualClock::new(Timestamp::from_unix(SCENARIO_START));
    let engine = Engine::new(config.engine_config(), directory, table, Entropy::seeded(config.seed), Arc::new(clock.clone()))?;
    Ok(LocalDriver { engine, clock })
}

/// Generate fixtures and run `config` in-process. The driver is returned
/// so callers can snapshot the store or export the chain afterwards.
pub fn simulate(config: &ScenarioConfig) -> Result<(ScenarioReport, LocalDriver), DriverError> {
    config.validate().map_err(DriverError::Unsupported)?;
    let regions = config.regions();
    let population = config.population(&regions);
    let mut driver = local_driver(config, &population, &regions)?;
    let report = run_scenario(config, &population, &regions, &mut driver)?;
    Ok((report, driver))
}
