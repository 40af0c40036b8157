//! Population-scale scenario runner: synthetic fixtures, the full protocol
//! end to end, fault injection and an audit at the end.

mod driver;
mod population;
mod scenario;
mod tamper;

pub use driver::{Driver, DriverError, LocalDriver};
pub use population::{
    agency_id_for, generate_population, generate_regions, max_agencies, write_fixtures, DIRECTORY_FILE, MAX_AGE, MIN_AGE,
    REGIONS_FILE,
};
pub use scenario::{
    local_driver, run_scenario, scenario_reference_date, simulate, CenterStock, NonceStats, ScenarioConfig, ScenarioCounts,
    ScenarioReport, SCENARIO_START,
};
pub use tamper::{inject_tamper, tamper_database, tamper_ledger, TamperEntry, TamperError, TamperSpec, TamperTarget};
