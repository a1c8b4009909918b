#![allow(dead_code)]

use std::collections::BTreeSet;

use zonalsim::sim::ScenarioConfig;

/// Counts delivered trace events of `kind` addressed to `dst`.
pub fn count_trace(trace: &str, dst: &str, kind: &str) -> usize {
    trace
        .lines()
        .filter(|l| {
            let cols: Vec<&str> = l.split(' ').collect();
            cols.len() == 6 && cols[3] == dst && cols[4] == kind
        })
        .count()
}

/// Attempts whose target zone differs from the user's home zone, read from
/// the workload log.
pub fn out_of_zone_from_workload(log: &str) -> usize {
    log.lines()
        .filter(|l| {
            let cols: Vec<&str> = l.split(' ').collect();
            cols[5] != cols[6]
        })
        .count()
}

pub fn lines(bytes: &[u8]) -> BTreeSet<String> {
    String::from_utf8_lossy(bytes).lines().map(str::to_owned).collect()
}

pub fn small_config(seed: u64) -> ScenarioConfig {
    ScenarioConfig {
        zone_count: 4,
        user_count: 60,
        sp_count: 3,
        auth_count: 60,
        in_zone_probability: 0.7,
        seed,
        ..ScenarioConfig::default()
    }
}
