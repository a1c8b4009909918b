//! Audits the provider-visible files of both deployments, then plants one
//! leaked number and audits again.
//!
//! cargo run --example privacy_audit

use zonalsim::audit::audit_dumps;
use zonalsim::sim::{run_scenario, Mode, ScenarioConfig};

fn main() {
    let base = ScenarioConfig {
        user_count: 60,
        auth_count: 90,
        ..ScenarioConfig::default()
    };
    for (label, cfg) in [
        ("zonal", base.clone()),
        (
            "baseline",
            ScenarioConfig {
                mode: Mode::Baseline,
                ..base.clone()
            },
        ),
        (
            "zonal + planted leak",
            ScenarioConfig {
                plant_leak: true,
                ..base
            },
        ),
    ] {
        let out = run_scenario(&cfg, 5).unwrap();
        let report = audit_dumps(&out.dumps).unwrap();
        println!("== {label}: {}", if report.passed() { "clean" } else { "FAILED" });
        for line in report.violations_text().lines().take(4) {
            println!("  {line}");
        }
        for line in report.linkage_text().lines().take(4) {
            println!("  {line}");
        }
    }
}
