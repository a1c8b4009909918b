//! Hand-wired parties for driving the protocol without the event loop.
//! Used by tests and the runnable examples.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use chrono::NaiveDate;
use rand::RngCore;

use crate::agents::{AsaState, PortalState, ServiceProviderState};
use crate::cidr::CidrState;
use crate::crypto::{CryptoScheme, KeyDirectory, KeyPair, ReferenceScheme, SecureEnvelope};
use crate::domain::{
    BiometricSubset, DemographicSubset, EnrollmentRecord, NodeId, Nonce, PidBlock, TemplateSample, ZoneId,
};
use crate::sim::{derive_seed, stream, synthetic_resident, Mode};
use crate::zonal::ZonalState;

pub const TODAY: (i32, u32, u32) = (2025, 1, 1);
pub const SP: NodeId = NodeId::Sp(0);

pub fn today() -> NaiveDate {
    NaiveDate::from_ymd_opt(TODAY.0, TODAY.1, TODAY.2).expect("valid date")
}

/// A registry, relay, one provider, and a zonal office plus portal per zone.
pub struct Fixture {
    pub scheme: Arc<dyn CryptoScheme>,
    pub keys: KeyDirectory,
    pub pairs: BTreeMap<NodeId, KeyPair>,
    pub cidr: CidrState,
    pub asa: AsaState,
    pub zones: Vec<ZonalState>,
    pub portals: Vec<PortalState>,
    seed: u64,
    residents: u32,
    nonces: u64,
}

impl Fixture {
    pub fn new(zone_count: u16, cache_ttl_ms: u64, seed: u64) -> Self {
        let scheme: Arc<dyn CryptoScheme> = Arc::new(ReferenceScheme);
        let mut nodes = vec![NodeId::Cidr, NodeId::Asa, SP];
        for z in 0..zone_count {
            nodes.push(NodeId::Zone(z));
            nodes.push(NodeId::Portal(z));
        }
        let pairs: BTreeMap<NodeId, KeyPair> = nodes
            .iter()
            .map(|&n| {
                (
                    n,
                    scheme.generate_keypair(&derive_seed(seed, &format!("key/{n}")), &n.to_string()),
                )
            })
            .collect();
        let mut keys = KeyDirectory::default();
        for kp in pairs.values() {
            keys.insert(kp.public());
        }
        let cidr = CidrState::new(
            pairs[&NodeId::Cidr].clone(),
            keys.clone(),
            scheme.clone(),
            stream(seed, "cidr/issue").next_u64(),
            stream(seed, "cidr/nonce"),
        );
        let asa = AsaState::new(pairs[&NodeId::Asa].clone(), keys.clone(), scheme.clone());
        let zones = (0..zone_count)
            .map(|z| {
                ZonalState::new(
                    ZoneId(z),
                    pairs[&NodeId::Zone(z)].clone(),
                    keys.clone(),
                    scheme.clone(),
                    cache_ttl_ms,
                    30_000,
                )
            })
            .collect();
        let portals = (0..zone_count)
            .map(|z| {
                PortalState::new(
                    ZoneId(z),
                    pairs[&NodeId::Portal(z)].clone(),
                    pairs[&NodeId::Zone(z)].public(),
                    scheme.clone(),
                    BTreeSet::from([SP]),
                    stream(seed, &format!("portal-{z}/session")),
                )
            })
            .collect();
        Self {
            scheme,
            keys,
            pairs,
            cidr,
            asa,
            zones,
            portals,
            seed,
            residents: 0,
            nonces: 0,
        }
    }

    /// Enrolls a synthetic resident. With `dual_write` the home zone also
    /// stores the copy.
    pub fn enroll(&mut self, dual_write: bool) -> EnrollmentRecord {
        let mut rng = stream(self.seed, &format!("fixture/resident/{}", self.residents));
        let (demo, bio) = synthetic_resident(&mut rng, self.residents);
        self.residents += 1;
        let e = self
            .cidr
            .enroll(demo, bio, self.zones.len() as u16, today())
            .expect("synthetic resident enrolls");
        if dual_write {
            self.zones[e.record.home_zone.0 as usize]
                .accept_dual_write(&e.dual_write)
                .expect("signed by the registry");
        }
        e.record
    }

    /// Enrolls residents until one lands in `zone`.
    pub fn enroll_in(&mut self, zone: ZoneId, dual_write: bool) -> EnrollmentRecord {
        loop {
            let r = self.enroll(dual_write);
            if r.home_zone == zone {
                return r;
            }
        }
    }

    pub fn fresh_nonce(&mut self) -> Nonce {
        self.nonces += 1;
        let mut n = [0u8; 16];
        n[8..].copy_from_slice(&self.nonces.to_be_bytes());
        Nonce(n)
    }

    /// A correct PID block for `record` presenting two fingerprints and the name.
    pub fn genuine_pid(&mut self, record: &EnrollmentRecord, now: u64) -> PidBlock {
        let fingers = [2u8, 7]
            .iter()
            .map(|&p| TemplateSample {
                position: p,
                template: record.biometrics.fingerprint_templates[p as usize].clone(),
            })
            .collect();
        PidBlock {
            aadhaar: record.aadhaar.clone(),
            submitted_demographics: Some(DemographicSubset {
                name: Some(record.demographics.name.clone()),
                ..Default::default()
            }),
            submitted_biometrics: Some(BiometricSubset {
                fingerprints: fingers,
                irises: Vec::new(),
                photo_digest: None,
            }),
            otp: None,
            liveness_attested: true,
            nonce: self.fresh_nonce(),
            timestamp: now,
        }
    }

    /// Takes `pid` through the portal of `zone` and the relay, returning the
    /// doubly-signed envelope as the zonal office would receive it.
    pub fn relay(&mut self, zone: ZoneId, pid: &PidBlock) -> SecureEnvelope {
        let portal = &mut self.portals[zone.0 as usize];
        let session = portal.open_portal_session(SP).expect("provider registered");
        let envelope = portal
            .submit_to_portal(session.session_id, pid)
            .expect("well-formed PID");
        self.asa
            .asa_forward(envelope, NodeId::Zone(zone.0))
            .expect("portal signature verifies")
    }

    /// A fresh provider node for `SP` in the given mode.
    pub fn provider(&self, mode: Mode) -> ServiceProviderState {
        ServiceProviderState::new(
            SP,
            mode,
            self.pairs[&SP].clone(),
            self.keys.clone(),
            self.scheme.clone(),
            stream(self.seed, "fixture/sp"),
        )
    }

    pub fn zone(&mut self, zone: ZoneId) -> &mut ZonalState {
        &mut self.zones[zone.0 as usize]
    }
}
