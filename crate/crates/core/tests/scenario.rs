use std::collections::BTreeSet;

use vaxledger_core::audit::FindingKind;
use vaxledger_core::sim::{simulate, ScenarioConfig, TamperSpec, TamperTarget};

fn small(tamper: TamperSpec) -> ScenarioConfig {
    ScenarioConfig { citizens: 100, centers: 4, agencies: 2, seed: 11, tamper, difficulty: 6, ..Default::default() }
}

#[test]
fn honest_run_counts_and_clean_audit() {
    let (report, _) = simulate(&small(TamperSpec::None)).unwrap();
    assert_eq!(report.counts.registration_txs, 100);
    assert_eq!(report.counts.vaccination_txs, 200);
    assert_eq!(report.counts.vaccinations, 200);
    assert!(report.audit.findings.is_empty(), "{:#?}", report.audit.findings);
    assert!(report.audit.chain_ok);
    assert_eq!(report.audit.checked_citizens, 100);
    assert_eq!(report.audit.checked_vaccinations, 200);
    assert!(report.stock_balanced());
    assert!(report.tamper_manifest.is_empty());
}

#[test]
fn db_tamper_findings_match_manifest() {
    let (report, _) = simulate(&small(TamperSpec::Db(10))).unwrap();
    assert_eq!(report.tamper_manifest.len(), 10);
    let manifest: BTreeSet<&str> = report.tamper_manifest.iter().map(|t| t.subject.as_str()).collect();
    let found: BTreeSet<&str> = report.audit.findings.iter().map(|f| f.subject_key.as_str()).collect();
    assert_eq!(manifest, found);
    assert_eq!(report.audit.findings.len(), 10);
    assert!(report.audit.findings.iter().all(|f| f.kind == FindingKind::HashMismatch));
    assert!(report.audit.chain_ok);
}

#[test]
fn ledger_tamper_breaks_chain() {
    let (report, _) = simulate(&small(TamperSpec::Ledger(1))).unwrap();
    assert!(!report.audit.chain_ok);
    let entry = &report.tamper_manifest[0];
    assert_eq!(entry.target, TamperTarget::Block);
    let bad = report.audit.subjects(FindingKind::ChainInvalid);
    assert_eq!(bad.into_iter().collect::<Vec<_>>(), vec![entry.subject.as_str()]);
}

#[test]
fn too_many_tampers_rejected() {
    let cfg = ScenarioConfig { citizens: 3, centers: 1, agencies: 1, doses_per_citizen: 0, tamper: TamperSpec::Db(4), difficulty: 4, ..Default::default() };
    let err = simulate(&cfg).err().expect("should fail");
    assert!(err.to_string().contains("only 3 targets"), "{err}");
}

#[test]
fn same_seed_same_report() {
    let cfg = ScenarioConfig { citizens: 40, centers: 3, agencies: 2, seed: 5, tamper: TamperSpec::Db(3), difficulty: 6, ..Default::default() };
    let (a, _) = simulate(&cfg).unwrap();
    let (b, _) = simulate(&cfg).unwrap();
    assert_eq!(a.deterministic_json(), b.deterministic_json());
    let (c, _) = simulate(&ScenarioConfig { seed: 6, ..cfg }).unwrap();
    assert_ne!(a.deterministic_json(), c.deterministic_json());
}

#[test]
fn invalid_configs() {
    for cfg in [
        ScenarioConfig { citizens: 0, ..Default::default() },
        ScenarioConfig { centers: 0, ..Default::default() },
        ScenarioConfig { agencies: 11, ..Default::default() },
        ScenarioConfig { doses_per_citizen: 3, ..Default::default() },
        ScenarioConfig { difficulty: 25, ..Default::default() },
    ] {
        assert!(cfg.validate().is_err(), "{cfg:?}");
    }
}
