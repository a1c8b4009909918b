//! Runs the same workload through the centralized and zonal deployments and
//! compares registry load.
//!
//! cargo run --release --example compare_modes [seed]

use zonalsim::sim::{run_scenario, Mode, ScenarioConfig};

fn main() {
    let seed = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(2024);
    let cfg = ScenarioConfig {
        cache_ttl_secs: 0,
        ..ScenarioConfig::default()
    };
    println!(
        "{:<10} {:>8} {:>12} {:>12} {:>10}",
        "mode", "auths", "registry", "out-of-zone", "messages"
    );
    for mode in [Mode::Baseline, Mode::Zonal] {
        let m = run_scenario(&ScenarioConfig { mode, ..cfg.clone() }, seed)
            .unwrap()
            .metrics;
        println!(
            "{:<10} {:>8} {:>12} {:>12} {:>10}",
            mode.to_string(),
            m.auth_attempts,
            m.cidr_auth_requests + m.cidr_fetch_requests,
            m.out_of_zone_attempts,
            m.messages_total
        );
    }
    println!(
        "expected zonal registry load ~ (1 - {}) x auths",
        cfg.in_zone_probability
    );
}
