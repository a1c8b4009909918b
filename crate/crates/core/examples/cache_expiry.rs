//! One remote resident authenticating repeatedly around the cache TTL. The
//! registry is contacted again only once the entry is strictly older than
//! the TTL.
//!
//! cargo run --example cache_expiry

use zonalsim::sim::{AttemptSpec, ScenarioConfig, Simulation};

fn main() {
    let cfg = ScenarioConfig {
        zone_count: 2,
        user_count: 10,
        sp_count: 1,
        auth_count: 0,
        cache_ttl_secs: 5,
        ..ScenarioConfig::default()
    };
    let sim = Simulation::new(&cfg, 1).unwrap();
    let r = sim.residents().iter().find(|r| r.home_zone.0 == 1).unwrap().clone();
    let offsets = [1_000, 3_000, 6_000, 6_001, 9_000, 12_000];
    let workload: Vec<_> = offsets
        .iter()
        .map(|&t| AttemptSpec::genuine(t, r.index, 0, 0))
        .collect();
    let out = sim.run(&workload).unwrap();

    println!("TTL {} ms, attempts at {offsets:?}", cfg.cache_ttl_ms());
    for line in out.trace.lines().filter(|l| l.contains(" cidr FetchRequest ")) {
        let at: u64 = line.split(' ').next().unwrap().parse().unwrap();
        println!("registry fetch at +{} ms", at - cfg.start_time_ms);
    }
    println!(
        "cache hits {}, fetches {}, sweeps fired {}",
        out.metrics.zonal_cache_hits,
        out.metrics.cidr_fetch_requests,
        out.trace.lines().filter(|l| l.contains(" CacheSweep ")).count()
    );
}
