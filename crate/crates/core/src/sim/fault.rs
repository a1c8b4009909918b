use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::SimEvent;
use crate::domain::NodeId;

/// Overrides for links matching `from` -> `to`. `"*"` matches any node.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinkFault {
    pub from: String,
    pub to: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub base_ms: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub jitter_ms: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub drop_probability: Option<f64>,
}

/// Messages sent on a matching link during `[start_ms, end_ms)` (offsets
/// from the run start) are lost.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Partition {
    pub from: String,
    pub to: String,
    pub start_ms: u64,
    pub end_ms: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FaultPlan {
    pub base_ms: u64,
    pub jitter_ms: u64,
    pub drop_probability: f64,
    pub links: Vec<LinkFault>,
    pub partitions: Vec<Partition>,
}

impl Default for FaultPlan {
    fn default() -> Self {
        Self {
            base_ms: 0,
            jitter_ms: 0,
            drop_probability: 0.0,
            links: Vec::new(),
            partitions: Vec::new(),
        }
    }
}

fn pattern_matches(pattern: &str, node: NodeId) -> bool {
    pattern == "*" || pattern == node.to_string()
}

fn valid_pattern(p: &str) -> bool {
    p == "*" || p.parse::<NodeId>().is_ok()
}

impl FaultPlan {
    pub fn validate(&self) -> Result<(), String> {
        let prob = |p: f64, what: &str| {
            if (0.0..=1.0).contains(&p) {
                Ok(())
            } else {
                Err(format!("{what} must be in [0, 1], got {p}"))
            }
        };
        prob(self.drop_probability, "drop_probability")?;
        for l in &self.links {
            if !valid_pattern(&l.from) || !valid_pattern(&l.to) {
                return Err(format!("bad link pattern {} -> {}", l.from, l.to));
            }
            if let Some(p) = l.drop_probability {
                prob(p, "link drop_probability")?;
            }
        }
        for p in &self.partitions {
            if !valid_pattern(&p.from) || !valid_pattern(&p.to) {
                return Err(format!("bad partition pattern {} -> {}", p.from, p.to));
            }
            if p.start_ms >= p.end_ms {
                return Err(format!("partition window [{}, {}) is empty", p.start_ms, p.end_ms));
            }
        }
        Ok(())
    }

    /// Latency and drop parameters for one link; the last matching override wins.
    fn link_params(&self, from: NodeId, to: NodeId) -> (u64, u64, f64) {
        let mut params = (self.base_ms, self.jitter_ms, self.drop_probability);
        for l in self
            .links
            .iter()
            .filter(|l| pattern_matches(&l.from, from) && pattern_matches(&l.to, to))
        {
            params.0 = l.base_ms.unwrap_or(params.0);
            params.1 = l.jitter_ms.unwrap_or(params.1);
            params.2 = l.drop_probability.unwrap_or(params.2);
        }
        params
    }

    fn partitioned(&self, from: NodeId, to: NodeId, offset: u64) -> bool {
        self.partitions.iter().any(|p| {
            pattern_matches(&p.from, from) && pattern_matches(&p.to, to) && (p.start_ms..p.end_ms).contains(&offset)
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FaultDecision {
    Deliver,
    Drop,
    Delay(u64),
}

/// Decides the fate of an event whose `deliver_at` is its send time.
/// `run_start` anchors partition windows. Always consumes exactly two draws
/// from `rng`, so the decision depends only on the plan, the event and the
/// stream position.
pub fn inject_fault(plan: &FaultPlan, event: &SimEvent, run_start: u64, rng: &mut ChaCha8Rng) -> FaultDecision {
    let drop_draw: f64 = rng.gen();
    let jitter_draw: u64 = rng.gen();
    let (base, jitter, drop_p) = plan.link_params(event.source, event.destination);
    if plan.partitioned(
        event.source,
        event.destination,
        event.deliver_at.saturating_sub(run_start),
    ) {
        return FaultDecision::Drop;
    }
    if drop_draw < drop_p {
        return FaultDecision::Drop;
    }
    let delay = base + if jitter == 0 { 0 } else { jitter_draw % (jitter + 1) };
    if delay == 0 {
        FaultDecision::Deliver
    } else {
        FaultDecision::Delay(event.deliver_at + delay)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::stream;

    fn event(from: NodeId, to: NodeId, at: u64) -> SimEvent {
        SimEvent {
            deliver_at: at,
            seq: 0,
            source: from,
            destination: to,
            payload: vec![],
        }
    }

    #[test]
    fn zero_drop_always_delivers() {
        let plan = FaultPlan::default();
        let mut rng = stream(1, "link");
        for i in 0..1000 {
            assert_eq!(
                inject_fault(&plan, &event(NodeId::Asa, NodeId::Cidr, i), 0, &mut rng),
                FaultDecision::Deliver
            );
        }
    }

    #[test]
    fn full_drop_on_one_link_only() {
        let plan = FaultPlan {
            links: vec![LinkFault {
                from: "zone-1".into(),
                to: "cidr".into(),
                base_ms: None,
                jitter_ms: None,
                drop_probability: Some(1.0),
            }],
            ..FaultPlan::default()
        };
        plan.validate().unwrap();
        let mut rng = stream(1, "link");
        for i in 0..200 {
            assert_eq!(
                inject_fault(&plan, &event(NodeId::Zone(1), NodeId::Cidr, i), 0, &mut rng),
                FaultDecision::Drop
            );
            assert_eq!(
                inject_fault(&plan, &event(NodeId::Zone(0), NodeId::Cidr, i), 0, &mut rng),
                FaultDecision::Deliver
            );
        }
    }

    #[test]
    fn partition_window_is_half_open() {
        let plan = FaultPlan {
            partitions: vec![Partition {
                from: "*".into(),
                to: "cidr".into(),
                start_ms: 10,
                end_ms: 20,
            }],
            ..FaultPlan::default()
        };
        let mut rng = stream(1, "link");
        let mut at = |t: u64| inject_fault(&plan, &event(NodeId::Zone(2), NodeId::Cidr, 1000 + t), 1000, &mut rng);
        assert_eq!(at(9), FaultDecision::Deliver);
        assert_eq!(at(10), FaultDecision::Drop);
        assert_eq!(at(19), FaultDecision::Drop);
        assert_eq!(at(20), FaultDecision::Deliver);
    }

    #[test]
    fn jitter_stays_in_bounds_and_is_repeatable() {
        let plan = FaultPlan {
            base_ms: 5,
            jitter_ms: 3,
            ..FaultPlan::default()
        };
        let draw = |seed| {
            let mut rng = stream(seed, "link");
            (0..100)
                .map(|_| inject_fault(&plan, &event(NodeId::Asa, NodeId::Zone(0), 0), 0, &mut rng))
                .collect::<Vec<_>>()
        };
        let a = draw(3);
        assert_eq!(a, draw(3));
        assert!(a
            .iter()
            .all(|d| matches!(d, FaultDecision::Delay(t) if (5..=8).contains(t))));
    }

    #[test]
    fn validation_rejects_bad_plans() {
        let mut p = FaultPlan {
            drop_probability: 1.5,
            ..FaultPlan::default()
        };
        assert!(p.validate().is_err());
        p.drop_probability = 0.0;
        p.partitions.push(Partition {
            from: "*".into(),
            to: "*".into(),
            start_ms: 5,
            end_ms: 5,
        });
        assert!(p.validate().is_err());
        p.partitions[0].end_ms = 6;
        p.partitions[0].to = "mars".into();
        assert!(p.validate().is_err());
    }
}
