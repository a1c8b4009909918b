//! Latency, loss and a registry partition. Remote attempts that cannot reach
//! the registry time out and are answered unsuccessful.
//!
//! cargo run --example fault_injection

use zonalsim::domain::AuthStatus;
use zonalsim::sim::{run_scenario, LinkFault, Partition, ScenarioConfig};

fn main() {
    let mut cfg = ScenarioConfig {
        user_count: 100,
        auth_count: 200,
        in_zone_probability: 0.7,
        ..ScenarioConfig::default()
    };
    cfg.faults.base_ms = 5;
    cfg.faults.jitter_ms = 25;
    cfg.faults.links.push(LinkFault {
        from: "asa".into(),
        to: "sp-2".into(),
        base_ms: None,
        jitter_ms: None,
        drop_probability: Some(0.2),
    });
    cfg.faults.partitions.push(Partition {
        from: "*".into(),
        to: "cidr".into(),
        start_ms: 60_000,
        end_ms: 120_000,
    });
    println!("{}", cfg.to_json());

    let out = run_scenario(&cfg, 11).unwrap();
    let m = &out.metrics;
    println!(
        "messages {} delivered {} dropped {}",
        m.messages_total, m.messages_delivered, m.messages_dropped
    );
    println!(
        "successful {} unsuccessful {} timeouts {} unanswered {}",
        m.responses(AuthStatus::Successful),
        m.responses(AuthStatus::Unsuccessful),
        m.zonal_timeouts,
        m.unanswered_attempts
    );
    let drops = String::from_utf8_lossy(&out.dumps["drops.log"]);
    println!("first drops:");
    for l in drops.lines().take(5) {
        println!("  {l}");
    }
}
