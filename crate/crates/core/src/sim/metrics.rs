use std::collections::BTreeMap;
use std::fmt;

use crate::domain::AuthStatus;

/// Counters collected over one run, printed as `key = value` lines.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RunMetrics {
    pub auth_attempts: u64,
    pub out_of_zone_attempts: u64,
    pub cidr_auth_requests: u64,
    pub cidr_fetch_requests: u64,
    pub cidr_fetch_rejections: u64,
    pub zonal_packages: u64,
    pub zonal_local_hits: u64,
    pub zonal_cache_hits: u64,
    pub zonal_timeouts: u64,
    pub responses_by_status: BTreeMap<AuthStatus, u64>,
    pub delivery_failures: u64,
    pub unanswered_attempts: u64,
    pub asa_forwards: u64,
    pub dual_writes_pending: u64,
    pub messages_total: u64,
    pub messages_delivered: u64,
    pub messages_dropped: u64,
    pub timers_fired: u64,
    pub end_time_ms: u64,
}

impl RunMetrics {
    pub fn responses(&self, status: AuthStatus) -> u64 {
        self.responses_by_status.get(&status).copied().unwrap_or(0)
    }

    /// Parses the `key = value` form back into pairs.
    pub fn parse_pairs(text: &str) -> BTreeMap<String, u64> {
        text.lines()
            .filter_map(|l| {
                let (k, v) = l.split_once(" = ")?;
                Some((k.trim().to_owned(), v.trim().parse().ok()?))
            })
            .collect()
    }
}

impl fmt::Display for RunMetrics {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let rows: [(&str, u64); 21] = [
            ("auth_attempts", self.auth_attempts),
            ("out_of_zone_attempts", self.out_of_zone_attempts),
            ("cidr_auth_requests", self.cidr_auth_requests),
            ("cidr_fetch_requests", self.cidr_fetch_requests),
            ("cidr_fetch_rejections", self.cidr_fetch_rejections),
            ("zonal_packages", self.zonal_packages),
            ("zonal_local_hits", self.zonal_local_hits),
            ("zonal_cache_hits", self.zonal_cache_hits),
            ("zonal_timeouts", self.zonal_timeouts),
            ("responses_successful", self.responses(AuthStatus::Successful)),
            ("responses_unsuccessful", self.responses(AuthStatus::Unsuccessful)),
            ("responses_invalid_number", self.responses(AuthStatus::InvalidNumber)),
            ("delivery_failures", self.delivery_failures),
            ("unanswered_attempts", self.unanswered_attempts),
            ("asa_forwards", self.asa_forwards),
            ("dual_writes_pending", self.dual_writes_pending),
            ("messages_total", self.messages_total),
            ("messages_delivered", self.messages_delivered),
            ("messages_dropped", self.messages_dropped),
            ("timers_fired", self.timers_fired),
            ("end_time_ms", self.end_time_ms),
        ];
        for (k, v) in rows {
            writeln!(f, "{k} = {v}")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn display_parses_back() {
        let mut m = RunMetrics {
            cidr_fetch_requests: 97,
            messages_total: 10,
            messages_delivered: 9,
            messages_dropped: 1,
            ..Default::default()
        };
        m.responses_by_status.insert(AuthStatus::Successful, 5);
        let pairs = RunMetrics::parse_pairs(&m.to_string());
        assert_eq!(pairs["cidr_fetch_requests"], 97);
        assert_eq!(pairs["responses_successful"], 5);
        assert_eq!(pairs["responses_invalid_number"], 0);
        assert_eq!(pairs.len(), 21);
    }
}
