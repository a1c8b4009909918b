//! Enrolls residents, then authenticates them at their home office and at a
//! remote one, printing each decision.
//!
//! cargo run --example enroll_and_authenticate

use zonalsim::cidr::FetchOutcome;
use zonalsim::domain::ZoneId;
use zonalsim::fixture::Fixture;
use zonalsim::zonal::ZonalAction;

fn main() {
    let mut f = Fixture::new(3, 300_000, 7);
    let residents: Vec<_> = (0..4).map(|_| f.enroll(true)).collect();
    for r in &residents {
        println!("enrolled {} in zone {}", r.aadhaar, r.home_zone.0);
    }
    for z in 0..3 {
        println!("zone {z} stores {} records", f.zones[z].store().len());
    }

    let mut now = 10_000;
    for r in &residents {
        for zone in [r.home_zone, ZoneId((r.home_zone.0 + 1) % 3)] {
            now += 1_000;
            let pid = f.genuine_pid(r, now);
            let env = f.relay(zone, &pid);
            let verdict = match f.zone(zone).handle_auth_package(&env, now) {
                ZonalAction::Respond(v) => v,
                ZonalAction::Fetch(req) => {
                    println!("  zone {} fetches {} from the registry", zone.0, r.aadhaar);
                    let resp = match f.cidr.handle_pid_fetch(&req, now) {
                        FetchOutcome::Found(x) | FetchOutcome::NotFound(x) => x,
                        FetchOutcome::Rejected => unreachable!(),
                    };
                    f.zone(zone).handle_fetch_response(&resp, now).unwrap()
                }
            };
            println!("{} at zone {}: {}", r.aadhaar, zone.0, verdict.response.status.as_str());
        }
    }
    println!("\nzone logs:");
    for z in 0..3 {
        print!("{}", f.zones[z].log_dump());
    }
}
