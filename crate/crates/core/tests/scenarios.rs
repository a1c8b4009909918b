mod common;

use zonalsim::audit::audit_dumps;
use zonalsim::domain::AuthStatus;
use zonalsim::sim::{run_scenario, LinkFault, Mode, Partition, ScenarioConfig};

use common::{count_trace, out_of_zone_from_workload, small_config};

#[test]
fn every_message_is_delivered_or_dropped() {
    let mut cfg = small_config(1);
    cfg.faults.drop_probability = 0.05;
    cfg.faults.jitter_ms = 15;
    for mode in [Mode::Zonal, Mode::Baseline] {
        cfg.mode = mode;
        let m = run_scenario(&cfg, 1).unwrap().metrics;
        assert_eq!(m.messages_total, m.messages_delivered + m.messages_dropped, "{mode}");
        assert!(m.messages_dropped > 0, "{mode}");
        let answered: u64 = m.responses_by_status.values().sum();
        assert_eq!(answered + m.unanswered_attempts, m.auth_attempts, "{mode}");
    }
}

#[test]
fn fault_free_runs_answer_everything() {
    let out = run_scenario(&small_config(2), 2).unwrap();
    let m = &out.metrics;
    assert_eq!(m.messages_dropped, 0);
    assert_eq!(m.unanswered_attempts, 0);
    assert_eq!(m.delivery_failures, 0);
    assert_eq!(m.responses(AuthStatus::Successful), m.auth_attempts);
    assert_eq!(
        m.zonal_local_hits + m.zonal_cache_hits + m.cidr_fetch_requests,
        m.auth_attempts
    );
    assert_eq!(
        m.out_of_zone_attempts as usize,
        out_of_zone_from_workload(&out.workload_log)
    );
    assert_eq!(m.dual_writes_pending, 0);
}

#[test]
fn baseline_leaks_and_links() {
    let mut cfg = small_config(3);
    cfg.mode = Mode::Baseline;
    let out = run_scenario(&cfg, 3).unwrap();
    let report = audit_dumps(&out.dumps).unwrap();
    assert!(!report.violations.is_empty());
    assert!(report
        .violations
        .iter()
        .all(|v| v.file.ends_with(".inbox") || v.file.ends_with(".transcript")));
    assert!(report.linkage.entries.iter().any(|e| e.field == "customer_number"));
    assert_eq!(out.metrics.cidr_auth_requests, u64::from(cfg.auth_count));
    assert_eq!(count_trace(&out.trace, "cidr", "FetchRequest"), 0);
}

#[test]
fn registry_partition_times_out_remote_attempts() {
    let mut cfg = small_config(4);
    cfg.cache_ttl_secs = 0;
    cfg.faults.partitions.push(Partition {
        from: "*".into(),
        to: "cidr".into(),
        start_ms: 0,
        end_ms: 10_000_000,
    });
    let out = run_scenario(&cfg, 4).unwrap();
    let m = &out.metrics;
    assert!(m.out_of_zone_attempts > 0);
    assert_eq!(m.zonal_timeouts, m.out_of_zone_attempts);
    assert_eq!(m.cidr_fetch_requests, 0);
    assert_eq!(
        m.responses(AuthStatus::Successful),
        m.auth_attempts - m.out_of_zone_attempts
    );
    assert_eq!(m.responses(AuthStatus::Unsuccessful), m.out_of_zone_attempts);
    // Acks never arrive, so every dual write stays pending after its retries.
    assert_eq!(m.dual_writes_pending, u64::from(cfg.user_count));
    let timeouts = count_trace(&out.trace, "zone-0", "FetchTimeout")
        + count_trace(&out.trace, "zone-1", "FetchTimeout")
        + count_trace(&out.trace, "zone-2", "FetchTimeout")
        + count_trace(&out.trace, "zone-3", "FetchTimeout");
    assert_eq!(timeouts as u64, m.zonal_timeouts);
}

#[test]
fn timed_out_fetch_costs_the_full_timeout() {
    let mut cfg = small_config(5);
    cfg.auth_count = 1;
    cfg.in_zone_probability = 0.0;
    cfg.faults.links.push(LinkFault {
        from: "*".into(),
        to: "cidr".into(),
        base_ms: None,
        jitter_ms: None,
        drop_probability: Some(1.0),
    });
    let out = run_scenario(&cfg, 5).unwrap();
    let fired: Vec<u64> = out
        .trace
        .lines()
        .filter(|l| l.contains(" FetchTimeout "))
        .map(|l| l.split(' ').next().unwrap().parse().unwrap())
        .collect();
    assert_eq!(fired.len(), 1);
    let begin: u64 = out
        .trace
        .lines()
        .find(|l| l.contains(" Begin "))
        .and_then(|l| l.split(' ').next())
        .unwrap()
        .parse()
        .unwrap();
    assert_eq!(fired[0] - begin, cfg.fetch_timeout_ms());
    assert_eq!(out.metrics.responses(AuthStatus::Unsuccessful), 1);
}

#[test]
fn failure_kinds_map_to_statuses() {
    let base = ScenarioConfig {
        user_count: 50,
        auth_count: 80,
        in_zone_probability: 0.5,
        ..ScenarioConfig::default()
    };
    let cases = [
        ("impostor", AuthStatus::Unsuccessful),
        ("unknown", AuthStatus::InvalidNumber),
        ("wrong_otp", AuthStatus::Unsuccessful),
    ];
    for mode in [Mode::Zonal, Mode::Baseline] {
        for (kind, status) in cases {
            let mut cfg = base.clone();
            cfg.mode = mode;
            match kind {
                "impostor" => cfg.impostor_probability = 1.0,
                "unknown" => cfg.unknown_number_probability = 1.0,
                _ => cfg.wrong_otp_probability = 1.0,
            }
            let m = run_scenario(&cfg, 9).unwrap().metrics;
            assert_eq!(m.responses(status), 80, "{mode} {kind}:\n{m}");
        }
    }
}

#[test]
fn otp_attempts_succeed_in_both_modes() {
    for mode in [Mode::Zonal, Mode::Baseline] {
        let cfg = ScenarioConfig {
            mode,
            user_count: 40,
            auth_count: 60,
            in_zone_probability: 0.5,
            otp_probability: 1.0,
            ..ScenarioConfig::default()
        };
        let m = run_scenario(&cfg, 10).unwrap().metrics;
        assert_eq!(m.responses(AuthStatus::Successful), 60, "{mode}:\n{m}");
    }
}

#[test]
fn dropped_provider_link_leaves_attempts_unanswered() {
    let mut cfg = small_config(6);
    cfg.faults.links.push(LinkFault {
        from: "asa".into(),
        to: "sp-1".into(),
        base_ms: None,
        jitter_ms: None,
        drop_probability: Some(1.0),
    });
    let out = run_scenario(&cfg, 6).unwrap();
    let to_sp1 = out
        .workload_log
        .lines()
        .filter(|l| l.split(' ').nth(4) == Some("sp-1"))
        .count();
    assert!(to_sp1 > 0);
    assert_eq!(out.metrics.unanswered_attempts as usize, to_sp1);
    assert!(!out.dumps["drops.log"].is_empty());
}

#[test]
fn thousand_enrollments_fill_the_zones_exactly() {
    let cfg = ScenarioConfig {
        user_count: 1_000,
        auth_count: 0,
        ..ScenarioConfig::default()
    };
    let out = run_scenario(&cfg, 20).unwrap();
    let lines = |name: &str| String::from_utf8_lossy(&out.dumps[name]).lines().count();
    let stored: usize = (0..4).map(|z| lines(&format!("zone-{z}.store"))).sum();
    assert_eq!(lines("cidr.dump"), 1_000);
    assert_eq!(stored, 1_000);
    assert!((0..4).all(|z| lines(&format!("zone-{z}.store")) > 150));
}
