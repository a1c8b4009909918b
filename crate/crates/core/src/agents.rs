//! Remaining protocol parties: service providers, zonal portals, the relay
//! agency (ASA) and user agents.
//!
//! In the zonal flow the service provider only redirects the user to a portal
//! run by the zonal office and later receives a signed verdict; it never sees
//! the identity number or any submitted attribute. In the centralized flow the
//! provider's client application receives the PID block directly and keys its
//! customer record by the identity number.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use rand::RngCore;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::aadhaar::AadhaarNumber;
use crate::codec::canonical_serialize;
use crate::crypto::{CryptoScheme, KeyDirectory, KeyPair, NonceLedger, PublicKey, SecureEnvelope};
use crate::domain::{
    AuthResponse, AuthStatus, BiometricSubset, DemographicSubset, EnrollmentRecord, NodeId, Nonce, Otp, PidBlock,
    SessionId, TemplateSample, TransactionId, ZoneId,
};
use crate::message::{Handle, Message};
use crate::sim::{Effect, Mode};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AgentError {
    #[error("service provider {0} is not registered")]
    UnknownServiceProvider(NodeId),
    #[error("unknown or already used session {0}")]
    UnknownSession(SessionId),
    #[error("malformed PID block: {0}")]
    MalformedPid(String),
    #[error("envelope signature chain does not verify")]
    BadSignature,
    #[error("no route for origin {0}")]
    NoRoute(NodeId),
}

fn random16(rng: &mut ChaCha8Rng) -> [u8; 16] {
    let mut b = [0u8; 16];
    rng.fill_bytes(&mut b);
    b
}

/// Binds one authentication attempt to a service provider and a zone.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PortalSession {
    pub session_id: SessionId,
    pub zone: ZoneId,
    pub service_provider: NodeId,
    pub transaction_id: TransactionId,
}

/// Secure gateway operated by a zonal office.
pub struct PortalState {
    zone: ZoneId,
    keypair: KeyPair,
    scheme: Arc<dyn CryptoScheme>,
    zone_key: PublicKey,
    rng: ChaCha8Rng,
    ledger: NonceLedger,
    registered: BTreeSet<NodeId>,
    open: BTreeMap<SessionId, PortalSession>,
}

impl PortalState {
    pub fn new(
        zone: ZoneId,
        keypair: KeyPair,
        zone_key: PublicKey,
        scheme: Arc<dyn CryptoScheme>,
        registered: BTreeSet<NodeId>,
        rng: ChaCha8Rng,
    ) -> Self {
        Self {
            zone,
            keypair,
            scheme,
            zone_key,
            rng,
            ledger: NonceLedger::default(),
            registered,
            open: BTreeMap::new(),
        }
    }

    pub fn node_id(&self) -> NodeId {
        NodeId::Portal(self.zone.0)
    }

    /// Opens a fresh session for a registered service provider.
    pub fn open_portal_session(&mut self, service_provider: NodeId) -> Result<PortalSession, AgentError> {
        if !self.registered.contains(&service_provider) {
            return Err(AgentError::UnknownServiceProvider(service_provider));
        }
        let session = loop {
            let candidate = PortalSession {
                session_id: SessionId(random16(&mut self.rng)),
                zone: self.zone,
                service_provider,
                transaction_id: TransactionId(random16(&mut self.rng)),
            };
            if !self.open.contains_key(&candidate.session_id) {
                break candidate;
            }
        };
        self.open.insert(session.session_id, session);
        Ok(session)
    }

    /// Packages, encrypts and signs a PID block. Consumes the session.
    pub fn submit_to_portal(&mut self, session_id: SessionId, pid: &PidBlock) -> Result<SecureEnvelope, AgentError> {
        let session = *self
            .open
            .get(&session_id)
            .ok_or(AgentError::UnknownSession(session_id))?;
        let plain = canonical_serialize(pid).map_err(|e| AgentError::MalformedPid(e.to_string()))?;
        self.open.remove(&session_id);
        let ciphertext = loop {
            let nonce = Nonce(random16(&mut self.rng));
            if let Ok(ct) = self.ledger.encrypt(&*self.scheme, &self.zone_key, &plain, nonce) {
                break ct;
            }
        };
        let mut envelope = SecureEnvelope {
            transaction_id: session.transaction_id,
            session_id,
            service_provider: session.service_provider,
            origin_portal: self.node_id(),
            ciphertext,
            signatures: Vec::new(),
        };
        envelope
            .countersign(&*self.scheme, &self.keypair)
            .expect("envelope header is never empty");
        Ok(envelope)
    }

    pub fn on_message(&mut self, _now: u64, from: NodeId, msg: Message) -> Vec<Effect> {
        match msg {
            Message::OpenSession {
                handle,
                service_provider,
                user,
            } if from == service_provider => match self.open_portal_session(service_provider) {
                Ok(s) => vec![
                    Effect::send(
                        service_provider,
                        Message::SessionOpened {
                            handle,
                            session_id: s.session_id,
                        },
                    ),
                    Effect::send(
                        user,
                        Message::SessionGrant {
                            handle,
                            session_id: s.session_id,
                            transaction_id: s.transaction_id,
                        },
                    ),
                ],
                Err(e) => {
                    log::warn!("{}: {e}", self.node_id());
                    vec![]
                }
            },
            Message::PidSubmission { session_id, pid } => match self.submit_to_portal(session_id, &pid) {
                Ok(envelope) => vec![Effect::send(NodeId::Asa, Message::AuthRequest { envelope })],
                Err(e) => {
                    log::warn!("{}: {e}", self.node_id());
                    vec![]
                }
            },
            other => {
                log::debug!("{}: ignoring {} from {from}", self.node_id(), other.kind_name());
                vec![]
            }
        }
    }
}

/// Authentication service agency: verifies the first signature, countersigns
/// and forwards envelopes; relays verdicts back unchanged.
pub struct AsaState {
    keypair: KeyPair,
    keys: KeyDirectory,
    scheme: Arc<dyn CryptoScheme>,
    forward_log: Vec<(TransactionId, NodeId)>,
    drop_log: Vec<(TransactionId, String)>,
    verdicts_relayed: u64,
}

impl AsaState {
    pub fn new(keypair: KeyPair, keys: KeyDirectory, scheme: Arc<dyn CryptoScheme>) -> Self {
        Self {
            keypair,
            keys,
            scheme,
            forward_log: Vec::new(),
            drop_log: Vec::new(),
            verdicts_relayed: 0,
        }
    }

    pub fn forward_log(&self) -> &[(TransactionId, NodeId)] {
        &self.forward_log
    }

    pub fn drop_log(&self) -> &[(TransactionId, String)] {
        &self.drop_log
    }

    pub fn verdicts_relayed(&self) -> u64 {
        self.verdicts_relayed
    }

    /// Where an envelope from `origin` goes: a zonal portal's envelopes go to
    /// its own zonal office, a service provider's to the registry.
    pub fn route(origin: NodeId) -> Result<NodeId, AgentError> {
        match origin {
            NodeId::Portal(z) => Ok(NodeId::Zone(z)),
            NodeId::Sp(_) => Ok(NodeId::Cidr),
            other => Err(AgentError::NoRoute(other)),
        }
    }

    /// Countersigns a singly-signed envelope and records the hop.
    pub fn asa_forward(
        &mut self,
        mut envelope: SecureEnvelope,
        destination: NodeId,
    ) -> Result<SecureEnvelope, AgentError> {
        let txn = envelope.transaction_id;
        if !envelope.verify_chain(&*self.scheme, &self.keys, &[envelope.origin_portal]) {
            self.drop_log.push((txn, "bad origin signature".into()));
            return Err(AgentError::BadSignature);
        }
        envelope
            .countersign(&*self.scheme, &self.keypair)
            .expect("envelope header is never empty");
        self.forward_log.push((txn, destination));
        Ok(envelope)
    }

    pub fn on_message(&mut self, _now: u64, from: NodeId, msg: Message) -> Vec<Effect> {
        match msg {
            Message::AuthRequest { envelope } if from == envelope.origin_portal => {
                let dest = match Self::route(envelope.origin_portal) {
                    Ok(d) => d,
                    Err(e) => {
                        self.drop_log.push((envelope.transaction_id, e.to_string()));
                        return vec![];
                    }
                };
                match self.asa_forward(envelope, dest) {
                    Ok(envelope) => vec![Effect::send(dest, Message::AuthRequest { envelope })],
                    Err(_) => vec![],
                }
            }
            Message::AuthVerdict {
                session_id,
                service_provider,
                response,
            } if matches!(from, NodeId::Zone(_) | NodeId::Cidr) => {
                self.verdicts_relayed += 1;
                vec![Effect::send(
                    service_provider,
                    Message::AuthVerdict {
                        session_id,
                        service_provider,
                        response,
                    },
                )]
            }
            other => {
                log::debug!("asa: ignoring {} from {from}", other.kind_name());
                vec![]
            }
        }
    }

    pub fn forward_log_dump(&self) -> String {
        self.forward_log.iter().map(|(t, d)| format!("{t} {d}\n")).collect()
    }
}

/// Something a service provider can observe.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TranscriptEvent {
    SessionOpened {
        session_id: SessionId,
        timestamp: u64,
    },
    Verdict {
        transaction_id: TransactionId,
        session_id: SessionId,
        timestamp: u64,
        status: AuthStatus,
        /// Only in the centralized flow, where the provider keys its customer
        /// record by the identity number.
        customer_number: Option<AadhaarNumber>,
    },
    DeliveryFailure {
        transaction_id: TransactionId,
        session_id: SessionId,
        timestamp: u64,
    },
}

pub const SESSION_OPENED: &str = "Session Opened";
pub const DELIVERY_FAILURE: &str = "Delivery Failure";

impl fmt::Display for TranscriptEvent {
    /// Tab separated: transaction id, session id, timestamp, status, and in
    /// the centralized flow the customer's identity number.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TranscriptEvent::SessionOpened { session_id, timestamp } => {
                write!(f, "-\t{session_id}\t{timestamp}\t{SESSION_OPENED}")
            }
            TranscriptEvent::Verdict {
                transaction_id,
                session_id,
                timestamp,
                status,
                customer_number,
            } => {
                write!(f, "{transaction_id}\t{session_id}\t{timestamp}\t{status}")?;
                if let Some(n) = customer_number {
                    write!(f, "\t{n}")?;
                }
                Ok(())
            }
            TranscriptEvent::DeliveryFailure {
                transaction_id,
                session_id,
                timestamp,
            } => write!(f, "{transaction_id}\t{session_id}\t{timestamp}\t{DELIVERY_FAILURE}"),
        }
    }
}

#[derive(Debug, Clone)]
struct SpSession {
    transaction_id: Option<TransactionId>,
    customer_number: Option<AadhaarNumber>,
    resolved: bool,
}

pub struct ServiceProviderState {
    id: NodeId,
    mode: Mode,
    keys: KeyDirectory,
    scheme: Arc<dyn CryptoScheme>,
    keypair: KeyPair,
    registry_key: Option<PublicKey>,
    rng: ChaCha8Rng,
    ledger: NonceLedger,
    awaiting: BTreeMap<Handle, ()>,
    sessions: BTreeMap<SessionId, SpSession>,
    transcript: Vec<TranscriptEvent>,
}

impl ServiceProviderState {
    pub fn new(
        id: NodeId,
        mode: Mode,
        keypair: KeyPair,
        keys: KeyDirectory,
        scheme: Arc<dyn CryptoScheme>,
        rng: ChaCha8Rng,
    ) -> Self {
        let registry_key = keys.get(&NodeId::Cidr.to_string());
        Self {
            id,
            mode,
            keys,
            scheme,
            keypair,
            registry_key,
            rng,
            ledger: NonceLedger::default(),
            awaiting: BTreeMap::new(),
            sessions: BTreeMap::new(),
            transcript: Vec::new(),
        }
    }

    pub fn id(&self) -> NodeId {
        self.id
    }

    pub fn transcript(&self) -> &[TranscriptEvent] {
        &self.transcript
    }

    /// Records the opened session; the provider learns only its id.
    pub fn note_session(&mut self, session_id: SessionId, now: u64) {
        self.sessions.insert(
            session_id,
            SpSession {
                transaction_id: None,
                customer_number: None,
                resolved: false,
            },
        );
        self.transcript.push(TranscriptEvent::SessionOpened {
            session_id,
            timestamp: now,
        });
    }

    fn expected_responder(&self, responder: NodeId) -> bool {
        match self.mode {
            Mode::Zonal => matches!(responder, NodeId::Zone(_)),
            Mode::Baseline => responder == NodeId::Cidr,
        }
    }

    /// Verifies a verdict and appends it to the transcript. Returns `false`
    /// when the verdict was recorded as a delivery failure or ignored.
    pub fn deliver_response(&mut self, response: &AuthResponse, session_id: SessionId, now: u64) -> bool {
        let responder_ok = self.expected_responder(response.responder);
        let Some(session) = self.sessions.get_mut(&session_id) else {
            log::debug!("{}: verdict for unknown session {session_id}", self.id);
            return false;
        };
        if session.resolved {
            log::debug!("{}: duplicate verdict for {session_id}", self.id);
            return false;
        }
        let authentic = responder_ok
            && session.transaction_id.is_none_or(|t| t == response.transaction_id)
            && self.keys.verify_from(
                &*self.scheme,
                response.responder,
                &response.body_bytes(),
                &response.signature,
            );
        if !authentic {
            self.transcript.push(TranscriptEvent::DeliveryFailure {
                transaction_id: response.transaction_id,
                session_id,
                timestamp: now,
            });
            return false;
        }
        session.resolved = true;
        self.transcript.push(TranscriptEvent::Verdict {
            transaction_id: response.transaction_id,
            session_id,
            timestamp: now,
            status: response.status,
            customer_number: session.customer_number.clone(),
        });
        true
    }

    /// Centralized flow: the provider's client application wraps the PID block
    /// itself and sends it to the registry through the relay.
    pub fn legacy_package(&mut self, pid: &PidBlock, now: u64) -> Result<SecureEnvelope, AgentError> {
        let registry = self.registry_key.clone().ok_or(AgentError::NoRoute(NodeId::Cidr))?;
        let plain = canonical_serialize(pid).map_err(|e| AgentError::MalformedPid(e.to_string()))?;
        let session_id = SessionId(random16(&mut self.rng));
        let transaction_id = TransactionId(random16(&mut self.rng));
        self.note_session(session_id, now);
        if let Some(s) = self.sessions.get_mut(&session_id) {
            s.transaction_id = Some(transaction_id);
            s.customer_number = Some(pid.aadhaar.clone());
        }
        let ciphertext = loop {
            let nonce = Nonce(random16(&mut self.rng));
            if let Ok(ct) = self.ledger.encrypt(&*self.scheme, &registry, &plain, nonce) {
                break ct;
            }
        };
        let mut envelope = SecureEnvelope {
            transaction_id,
            session_id,
            service_provider: self.id,
            origin_portal: self.id,
            ciphertext,
            signatures: Vec::new(),
        };
        envelope
            .countersign(&*self.scheme, &self.keypair)
            .expect("envelope header is never empty");
        Ok(envelope)
    }

    pub fn on_message(&mut self, now: u64, from: NodeId, msg: Message) -> Vec<Effect> {
        match (self.mode, msg) {
            (Mode::Zonal, Message::AccessRequest { handle, zone_hint }) => {
                self.awaiting.insert(handle, ());
                vec![Effect::send(
                    NodeId::Portal(zone_hint.0),
                    Message::OpenSession {
                        handle,
                        service_provider: self.id,
                        user: from,
                    },
                )]
            }
            (Mode::Zonal, Message::SessionOpened { handle, session_id }) if matches!(from, NodeId::Portal(_)) => {
                if self.awaiting.remove(&handle).is_some() {
                    self.note_session(session_id, now);
                }
                vec![]
            }
            (Mode::Baseline, Message::LegacySubmission { pid }) => match self.legacy_package(&pid, now) {
                Ok(envelope) => vec![Effect::send(NodeId::Asa, Message::AuthRequest { envelope })],
                Err(e) => {
                    log::warn!("{}: {e}", self.id);
                    vec![]
                }
            },
            (
                _,
                Message::AuthVerdict {
                    session_id, response, ..
                },
            ) if from == NodeId::Asa => {
                self.deliver_response(&response, session_id, now);
                vec![]
            }
            (_, other) => {
                log::debug!("{}: ignoring {} from {from}", self.id, other.kind_name());
                vec![]
            }
        }
    }

    /// Transcript dump, one event per line.
    pub fn transcript_dump(&self) -> String {
        self.transcript.iter().map(|e| format!("{e}\n")).collect()
    }
}

/// What a workload attempt submits.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AttemptKind {
    /// Correct data for the user's own number.
    Genuine,
    /// One fingerprint template differs.
    Impostor,
    /// Correct biometrics, wrong one-time password.
    WrongOtp,
    /// Correct data but the capture device did not attest liveness.
    NoLiveness,
    /// A well-formed number that was never issued.
    UnknownNumber(AadhaarNumber),
}

impl AttemptKind {
    pub fn label(&self) -> &'static str {
        match self {
            AttemptKind::Genuine => "genuine",
            AttemptKind::Impostor => "impostor",
            AttemptKind::WrongOtp => "wrong_otp",
            AttemptKind::NoLiveness => "no_liveness",
            AttemptKind::UnknownNumber(_) => "unknown_number",
        }
    }
}

/// One scheduled authentication attempt.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AttemptPlan {
    pub attempt: u64,
    pub at_ms: u64,
    pub user: u32,
    pub service_provider: u16,
    pub target_zone: ZoneId,
    pub kind: AttemptKind,
    pub nonce: Nonce,
    pub handle: Handle,
    /// OTP issued out of band for this attempt, if the user chose OTP.
    pub issued_otp: Option<Otp>,
    /// Two distinct finger positions to present.
    pub fingers: [u8; 2],
}

/// Builds the PID block a user submits for `plan`.
pub fn build_pid(record: &EnrollmentRecord, plan: &AttemptPlan, now: u64) -> PidBlock {
    let bio = &record.biometrics;
    let mut fingers: Vec<TemplateSample> = {
        let mut pos = plan.fingers;
        pos.sort_unstable();
        pos.iter()
            .map(|&p| TemplateSample {
                position: p,
                template: bio.fingerprint_templates[p as usize].clone(),
            })
            .collect()
    };
    if plan.kind == AttemptKind::Impostor {
        fingers[0].template[0] ^= 0x01;
    }
    let otp = match (&plan.kind, &plan.issued_otp) {
        (AttemptKind::WrongOtp, Some(o)) => Some(Otp::from_number(o.as_str().parse::<u32>().unwrap_or(0) + 1)),
        (AttemptKind::WrongOtp, None) => Some(Otp::from_number(0)),
        (_, o) => o.clone(),
    };
    let aadhaar = match &plan.kind {
        AttemptKind::UnknownNumber(n) => n.clone(),
        _ => record.aadhaar.clone(),
    };
    PidBlock {
        aadhaar,
        submitted_demographics: Some(DemographicSubset {
            name: Some(record.demographics.name.clone()),
            date_of_birth: Some(record.demographics.date_of_birth),
            ..Default::default()
        }),
        submitted_biometrics: Some(BiometricSubset {
            fingerprints: fingers,
            irises: Vec::new(),
            photo_digest: None,
        }),
        otp,
        liveness_attested: plan.kind != AttemptKind::NoLiveness,
        nonce: plan.nonce,
        timestamp: now,
    }
}

/// A resident with their own enrollment data and scheduled attempts.
pub struct UserAgent {
    id: NodeId,
    mode: Mode,
    record: EnrollmentRecord,
    attempts: BTreeMap<u64, AttemptPlan>,
    by_handle: BTreeMap<Handle, u64>,
}

impl UserAgent {
    pub fn new(index: u32, mode: Mode, record: EnrollmentRecord) -> Self {
        Self {
            id: NodeId::User(index),
            mode,
            record,
            attempts: BTreeMap::new(),
            by_handle: BTreeMap::new(),
        }
    }

    pub fn schedule(&mut self, plan: AttemptPlan) {
        self.by_handle.insert(plan.handle, plan.attempt);
        self.attempts.insert(plan.attempt, plan);
    }

    pub fn on_message(&mut self, now: u64, from: NodeId, msg: Message) -> Vec<Effect> {
        match msg {
            Message::Begin { attempt } if from == NodeId::Driver => {
                let Some(plan) = self.attempts.get(&attempt) else {
                    return vec![];
                };
                let sp = NodeId::Sp(plan.service_provider);
                match self.mode {
                    Mode::Zonal => vec![Effect::send(
                        sp,
                        Message::AccessRequest {
                            handle: plan.handle,
                            zone_hint: plan.target_zone,
                        },
                    )],
                    Mode::Baseline => vec![Effect::send(
                        sp,
                        Message::LegacySubmission {
                            pid: build_pid(&self.record, plan, now),
                        },
                    )],
                }
            }
            Message::SessionGrant { handle, session_id, .. } if matches!(from, NodeId::Portal(_)) => {
                let Some(plan) = self.by_handle.get(&handle).and_then(|a| self.attempts.get(a)) else {
                    return vec![];
                };
                if from != NodeId::Portal(plan.target_zone.0) {
                    return vec![];
                }
                vec![Effect::send(
                    from,
                    Message::PidSubmission {
                        session_id,
                        pid: build_pid(&self.record, plan, now),
                    },
                )]
            }
            other => {
                log::debug!("{}: ignoring {} from {from}", self.id, other.kind_name());
                vec![]
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codec::canonical_parse;
    use crate::fixture::{Fixture, SP};
    use crate::zonal::{signed_response, ZonalAction};

    const T0: u64 = 9_000;

    #[test]
    fn sessions_are_fresh_and_need_registration() {
        let mut f = Fixture::new(1, 0, 1);
        let p = &mut f.portals[0];
        let a = p.open_portal_session(SP).unwrap();
        let b = p.open_portal_session(SP).unwrap();
        assert_ne!(a.session_id, b.session_id);
        assert_ne!(a.transaction_id, b.transaction_id);
        assert_eq!(
            p.open_portal_session(NodeId::Sp(9)),
            Err(AgentError::UnknownServiceProvider(NodeId::Sp(9)))
        );
    }

    #[test]
    fn provider_learns_only_session_id() {
        let f = Fixture::new(1, 0, 2);
        let mut sp = f.provider(Mode::Zonal);
        let handle = [7u8; 16];
        let out = sp.on_message(
            T0,
            NodeId::User(3),
            Message::AccessRequest {
                handle,
                zone_hint: ZoneId(0),
            },
        );
        assert_eq!(
            out,
            vec![Effect::send(
                NodeId::Portal(0),
                Message::OpenSession {
                    handle,
                    service_provider: SP,
                    user: NodeId::User(3)
                }
            )]
        );
        let sid = SessionId([4; 16]);
        sp.on_message(
            T0,
            NodeId::Portal(0),
            Message::SessionOpened {
                handle,
                session_id: sid,
            },
        );
        assert_eq!(
            sp.transcript(),
            &[TranscriptEvent::SessionOpened {
                session_id: sid,
                timestamp: T0
            }]
        );
        assert_eq!(sp.transcript_dump(), format!("-\t{sid}\t{T0}\tSession Opened\n"));
    }

    #[test]
    fn portal_envelope_opens_only_at_target_zone() {
        let mut f = Fixture::new(2, 0, 3);
        let r = f.enroll_in(ZoneId(1), true);
        let pid = f.genuine_pid(&r, T0);
        let s = f.portals[1].open_portal_session(SP).unwrap();
        let env = f.portals[1].submit_to_portal(s.session_id, &pid).unwrap();
        assert_eq!(env.signatures.len(), 1);
        assert_eq!(env.transaction_id, s.transaction_id);
        let plain = f.scheme.decrypt(&f.pairs[&NodeId::Zone(1)], &env.ciphertext).unwrap();
        assert_eq!(canonical_parse::<PidBlock>(&plain).unwrap(), pid);
        assert!(f.scheme.decrypt(&f.pairs[&NodeId::Zone(0)], &env.ciphertext).is_err());
        assert_eq!(
            f.portals[1].submit_to_portal(s.session_id, &pid),
            Err(AgentError::UnknownSession(s.session_id))
        );
    }

    #[test]
    fn portal_rejects_empty_pid_and_keeps_session() {
        let mut f = Fixture::new(1, 0, 4);
        let r = f.enroll(true);
        let mut pid = f.genuine_pid(&r, T0);
        pid.submitted_biometrics = None;
        pid.submitted_demographics = None;
        let s = f.portals[0].open_portal_session(SP).unwrap();
        assert!(matches!(
            f.portals[0].submit_to_portal(s.session_id, &pid),
            Err(AgentError::MalformedPid(_))
        ));
        let good = f.genuine_pid(&r, T0);
        assert!(f.portals[0].submit_to_portal(s.session_id, &good).is_ok());
    }

    #[test]
    fn ciphertext_never_shows_the_number() {
        let mut f = Fixture::new(1, 0, 5);
        for _ in 0..100 {
            let r = f.enroll(true);
            let pid = f.genuine_pid(&r, T0);
            let env = f.relay(ZoneId(0), &pid);
            let bytes = crate::codec::canonical_serialize(&env).unwrap();
            let digits = r.aadhaar.as_str().as_bytes();
            assert!(!bytes.windows(digits.len()).any(|w| w == digits));
        }
    }

    #[test]
    fn asa_countersigns_or_drops() {
        let mut f = Fixture::new(1, 0, 6);
        let r = f.enroll(true);
        let pid = f.genuine_pid(&r, T0);
        let s = f.portals[0].open_portal_session(SP).unwrap();
        let env = f.portals[0].submit_to_portal(s.session_id, &pid).unwrap();
        let mut tampered = env.clone();
        tampered.ciphertext[0] ^= 1;
        let fwd = f.asa.asa_forward(env.clone(), NodeId::Zone(0)).unwrap();
        assert_eq!(fwd.signatures.len(), 2);
        assert_eq!(fwd.ciphertext, env.ciphertext);
        assert!(fwd.verify_chain(&*f.scheme, &f.keys, &[NodeId::Portal(0), NodeId::Asa]));
        assert_eq!(f.asa.forward_log().len(), 1);

        let effects = f
            .asa
            .on_message(T0, NodeId::Portal(0), Message::AuthRequest { envelope: tampered });
        assert!(effects.is_empty());
        assert_eq!(f.asa.forward_log().len(), 1);
        assert_eq!(f.asa.drop_log().len(), 1);
    }

    #[test]
    fn asa_routes_by_origin() {
        assert_eq!(AsaState::route(NodeId::Portal(3)), Ok(NodeId::Zone(3)));
        assert_eq!(AsaState::route(NodeId::Sp(1)), Ok(NodeId::Cidr));
        assert!(AsaState::route(NodeId::User(1)).is_err());
    }

    #[test]
    fn verdict_delivery_rules() {
        let mut f = Fixture::new(1, 0, 7);
        let r = f.enroll(true);
        let mut sp = f.provider(Mode::Zonal);
        let sid = SessionId([1; 16]);
        sp.note_session(sid, T0);
        let pid = f.genuine_pid(&r, T0);
        let env = f.relay(ZoneId(0), &pid);
        let ZonalAction::Respond(v) = f.zones[0].handle_auth_package(&env, T0) else {
            panic!()
        };
        let mut forged = v.response.clone();
        forged.status = AuthStatus::Unsuccessful;
        assert!(!sp.deliver_response(&forged, sid, T0 + 1));
        let by_registry = signed_response(
            &*f.scheme,
            &f.pairs[&NodeId::Cidr],
            NodeId::Cidr,
            AuthStatus::Successful,
            v.response.transaction_id,
        );
        assert!(!sp.deliver_response(&by_registry, sid, T0 + 1));
        assert!(sp.deliver_response(&v.response, sid, T0 + 2));
        assert!(!sp.deliver_response(&v.response, sid, T0 + 3));
        let statuses: Vec<String> = sp.transcript().iter().map(|e| e.to_string()).collect();
        assert_eq!(statuses.len(), 4);
        assert!(statuses[1].ends_with(DELIVERY_FAILURE));
        assert!(statuses[2].ends_with(DELIVERY_FAILURE));
        assert!(statuses[3].ends_with("Authentication Successful"));
    }

    #[test]
    fn baseline_transcript_keeps_customer_number() {
        let mut f = Fixture::new(1, 0, 8);
        let r = f.enroll(false);
        let mut sp = f.provider(Mode::Baseline);
        let pid = f.genuine_pid(&r, T0);
        let env = sp.legacy_package(&pid, T0).unwrap();
        let env = f.asa.asa_forward(env, NodeId::Cidr).unwrap();
        let resp = f.cidr.baseline_authenticate(&env, T0);
        assert!(sp.deliver_response(&resp, env.session_id, T0));
        assert!(sp.transcript_dump().contains(&format!("\t{}\n", r.aadhaar)));
    }

    fn plan(kind: AttemptKind, otp: Option<Otp>) -> AttemptPlan {
        AttemptPlan {
            attempt: 0,
            at_ms: 0,
            user: 0,
            service_provider: 0,
            target_zone: ZoneId(0),
            kind,
            nonce: Nonce([3; 16]),
            handle: [9; 16],
            issued_otp: otp,
            fingers: [8, 1],
        }
    }

    #[test]
    fn attempt_kinds_shape_the_pid() {
        let mut f = Fixture::new(1, 0, 9);
        let r = f.enroll(true);
        let issued = Otp::from_number(42);
        let genuine = build_pid(&r, &plan(AttemptKind::Genuine, Some(issued.clone())), T0);
        assert!(crate::zonal::compare_pid(&r, &genuine, Some(&issued)));
        let positions: Vec<u8> = genuine
            .submitted_biometrics
            .as_ref()
            .unwrap()
            .fingerprints
            .iter()
            .map(|s| s.position)
            .collect();
        assert_eq!(positions, vec![1, 8]);
        for kind in [AttemptKind::Impostor, AttemptKind::NoLiveness, AttemptKind::WrongOtp] {
            let pid = build_pid(&r, &plan(kind.clone(), Some(issued.clone())), T0);
            assert!(!crate::zonal::compare_pid(&r, &pid, Some(&issued)), "{kind:?}");
        }
        let other = AadhaarNumber::from_body(90_000_000_000).unwrap();
        let pid = build_pid(&r, &plan(AttemptKind::UnknownNumber(other.clone()), None), T0);
        assert_eq!(pid.aadhaar, other);
    }

    #[test]
    fn user_follows_mode_and_grant_origin() {
        let mut f = Fixture::new(2, 0, 10);
        let r = f.enroll(true);
        let mut zonal = UserAgent::new(0, Mode::Zonal, r.clone());
        zonal.schedule(plan(AttemptKind::Genuine, None));
        let out = zonal.on_message(T0, NodeId::Driver, Message::Begin { attempt: 0 });
        assert!(matches!(
            &out[..],
            [Effect::Send {
                to: NodeId::Sp(0),
                msg: Message::AccessRequest { .. }
            }]
        ));
        let grant = |z| {
            (
                NodeId::Portal(z),
                Message::SessionGrant {
                    handle: [9; 16],
                    session_id: SessionId([1; 16]),
                    transaction_id: TransactionId([2; 16]),
                },
            )
        };
        let (from, msg) = grant(1);
        assert!(zonal.on_message(T0, from, msg).is_empty());
        let (from, msg) = grant(0);
        assert!(matches!(
            &zonal.on_message(T0, from, msg)[..],
            [Effect::Send {
                to: NodeId::Portal(0),
                msg: Message::PidSubmission { .. }
            }]
        ));

        let mut legacy = UserAgent::new(0, Mode::Baseline, r);
        legacy.schedule(plan(AttemptKind::Genuine, None));
        let out = legacy.on_message(T0, NodeId::Driver, Message::Begin { attempt: 0 });
        assert!(matches!(
            &out[..],
            [Effect::Send {
                to: NodeId::Sp(0),
                msg: Message::LegacySubmission { .. }
            }]
        ));
    }
}
