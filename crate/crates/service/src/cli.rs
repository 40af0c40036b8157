use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use vaxledger_core::audit::{audit_offline, AuditReport, AuditScope};
use vaxledger_core::clock::SystemClock;
use vaxledger_core::ledger::Chain;
use vaxledger_core::registry::Registry;
use vaxledger_core::sim::{run_scenario, simulate, write_fixtures, ScenarioConfig, ScenarioReport, TamperSpec};

use crate::config::ServiceConfig;
use crate::http_driver::HttpDriver;

/// Exit status when an audit reports findings.
pub const FINDINGS_EXIT: u8 = 2;

#[derive(Debug, Parser)]
#[command(name = "vaxledger", version, about = "Pseudonymous vaccination registry backed by a proof-of-work ledger")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the HTTP service.
    Serve {
        #[arg(long)]
        config: PathBuf,
        /// Overrides listenAddress from the config file.
        #[arg(long)]
        listen: Option<std::net::SocketAddr>,
    },
    /// Drive a full scenario and print or write the report.
    Simulate(SimulateArgs),
    /// Audit a snapshot directory against an exported ledger.
    Audit(AuditArgs),
    /// Write identity directory and region fixtures for a seed.
    Fixtures {
        #[arg(long, default_value_t = 100)]
        citizens: usize,
        #[arg(long, default_value_t = 2)]
        agencies: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long, default_value_t = 100)]
    pub citizens: usize,
    #[arg(long, default_value_t = 5)]
    pub centers: usize,
    #[arg(long, default_value_t = 2)]
    pub agencies: usize,
    #[arg(long, default_value_t = 2)]
    pub doses: u32,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, default_value = "none")]
    pub tamper: TamperSpec,
    #[arg(long)]
    pub report: Option<PathBuf>,
    #[arg(long, default_value_t = 8)]
    pub difficulty: u32,
    #[arg(long, default_value_t = 16)]
    pub batch_size: usize,
    #[arg(long, default_value_t = 2)]
    pub max_doses: u32,
    #[arg(long, default_value_t = vaxledger_core::sim::MIN_AGE)]
    pub min_age: u32,
    /// Write the registry snapshot here after the run.
    #[arg(long)]
    pub snapshot_dir: Option<PathBuf>,
    /// Write the chain as JSON lines here after the run.
    #[arg(long)]
    pub ledger_export: Option<PathBuf>,
    /// Drive a running service instead of an in-process engine.
    #[arg(long)]
    pub http: Option<String>,
}

impl SimulateArgs {
    pub fn scenario(&self) -> ScenarioConfig {
        ScenarioConfig {
            citizens: self.citizens,
            centers: self.centers,
            agencies: self.agencies,
            doses_per_citizen: self.doses,
            seed: self.seed,
            tamper: self.tamper,
            difficulty: self.difficulty,
            batch_size: self.batch_size,
            max_doses: self.max_doses,
            min_age: self.min_age,
        }
    }
}

#[derive(Debug, Args)]
pub struct AuditArgs {
    #[arg(long)]
    pub snapshot_dir: PathBuf,
    #[arg(long)]
    pub ledger: PathBuf,
    /// Restrict the audit to one agency.
    #[arg(long)]
    pub agency: Option<String>,
    #[arg(long, default_value_t = 2)]
    pub max_doses: u32,
    /// Minimum block difficulty; defaults to the genesis block's.
    #[arg(long)]
    pub difficulty: Option<u32>,
    #[arg(long)]
    pub report: Option<PathBuf>,
}

pub fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Serve { config, listen } => {
            let mut cfg = ServiceConfig::load(&config)?;
            if let Some(addr) = listen {
                cfg.listen_address = addr;
            }
            let rt = tokio::runtime::Runtime::new()?;
            rt.block_on(crate::server::serve(cfg))?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Simulate(args) => {
            let report = run_simulate(&args)?;
            emit(&serde_json::to_string_pretty(&report)?, args.report.as_deref())?;
            Ok(exit_for(&report.audit))
        }
        Command::Audit(args) => {
            let report = run_audit(&args)?;
            emit(&serde_json::to_string_pretty(&report)?, args.report.as_deref())?;
            Ok(exit_for(&report))
        }
        Command::Fixtures { citizens, agencies, seed, out } => {
            let cfg = ScenarioConfig { citizens, agencies, seed, ..ScenarioConfig::default() };
            cfg.validate().map_err(anyhow::Error::msg)?;
            let regions = cfg.regions();
            write_fixtures(&out, &cfg.population(&regions), &regions)?;
            Ok(ExitCode::SUCCESS)
        }
    }
}

pub fn run_simulate(args: &SimulateArgs) -> Result<ScenarioReport> {
    let config = args.scenario();
    if let Some(base) = &args.http {
        if args.snapshot_dir.is_some() || args.ledger_export.is_some() {
            bail!("--snapshot-dir and --ledger-export need an in-process run");
        }
        config.validate().map_err(anyhow::Error::msg)?;
        let regions = config.regions();
        let population = config.population(&regions);
        let mut driver = HttpDriver::new(base);
        return Ok(run_scenario(&config, &population, &regions, &mut driver)?);
    }
    let (report, driver) = simulate(&config)?;
    if let Some(dir) = &args.snapshot_dir {
        driver.engine.snapshot(dir)?;
    }
    if let Some(path) = &args.ledger_export {
        fs::write(path, driver.engine.export_chain()).with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(report)
}

pub fn run_audit(args: &AuditArgs) -> Result<AuditReport> {
    let registry = Registry::restore(&args.snapshot_dir)?;
    let text = fs::read_to_string(&args.ledger).with_context(|| format!("reading {}", args.ledger.display()))?;
    let imported = Chain::import_jsonl(&text, 0)?;
    let difficulty = args.difficulty.unwrap_or(imported.blocks()[0].header.difficulty);
    let chain = Chain::from_blocks_unchecked(imported.blocks().to_vec(), difficulty);
    let scope = match &args.agency {
        Some(id) => AuditScope::Agency { agency_id: id.clone() },
        None => AuditScope::All,
    };
    Ok(audit_offline(&registry, chain, args.max_doses, &scope, &SystemClock))
}

fn emit(json: &str, path: Option<&Path>) -> Result<()> {
    match path {
        Some(p) => fs::write(p, format!("{json}\n")).with_context(|| format!("writing {}", p.display())),
        None => {
            println!("{json}");
            Ok(())
        }
    }
}

fn exit_for(report: &AuditReport) -> ExitCode {
    if report.is_clean() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(FINDINGS_EXIT)
    }
}
