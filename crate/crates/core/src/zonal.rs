//! Zonal office: persistent store for resident users, a volatile cache for
//! records fetched from the registry, and the authentication algorithm.
//!
//! The branch structure follows the published algorithm:
//!
//! ```text
//! receive package, validate signatures, extract number
//! if PID found (store, then fresh cache):  compare -> Successful | Unsuccessful
//! else fetch from registry:
//!     record received:   cache only, compare -> Successful | Unsuccessful
//!     not found:         Invalid Aadhaar Number. Please try Again...
//! ```
//!
//! Every failure the service provider could observe collapses to
//! "Authentication Unsuccessful"; the precise reason only goes to the node log.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::aadhaar::AadhaarNumber;
use crate::codec::{canonical_parse, canonical_serialize};
use crate::crypto::{CryptoScheme, KeyDirectory, KeyPair, SecureEnvelope};
use crate::domain::{
    AuthResponse, AuthStatus, EnrollmentRecord, NodeId, Nonce, Otp, PidBlock, SessionId, TransactionId, ZoneId,
};
use crate::message::{DualWrite, FetchRequest, FetchResponse, Message};
use crate::sim::Effect;

/// Internal reason code attached to every decision in a node log.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum AuthCode {
    Ok,
    Mismatch,
    NotFound,
    Pending,
    BadSignature,
    DecryptFailed,
    Malformed,
    Replay,
    NoLiveness,
    Timeout,
}

impl AuthCode {
    pub fn as_str(self) -> &'static str {
        match self {
            AuthCode::Ok => "OK",
            AuthCode::Mismatch => "MISMATCH",
            AuthCode::NotFound => "NOT_FOUND",
            AuthCode::Pending => "PENDING",
            AuthCode::BadSignature => "BAD_SIGNATURE",
            AuthCode::DecryptFailed => "DECRYPT_FAILED",
            AuthCode::Malformed => "MALFORMED",
            AuthCode::Replay => "REPLAY",
            AuthCode::NoLiveness => "NO_LIVENESS",
            AuthCode::Timeout => "TIMEOUT",
        }
    }
}

impl fmt::Display for AuthCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Which path through the algorithm a transaction took.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Branch {
    Rejected,
    LocalHit,
    CacheHit,
    FetchIssued,
    FetchHit,
    FetchNotFound,
    TimedOut,
}

impl Branch {
    pub fn as_str(self) -> &'static str {
        match self {
            Branch::Rejected => "rejected",
            Branch::LocalHit => "local_hit",
            Branch::CacheHit => "cache_hit",
            Branch::FetchIssued => "fetch_issued",
            Branch::FetchHit => "fetch_hit",
            Branch::FetchNotFound => "fetch_not_found",
            Branch::TimedOut => "timed_out",
        }
    }
}

/// One node-log line: `timestamp transaction_id branch code`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LogLine {
    pub timestamp: u64,
    pub transaction_id: TransactionId,
    pub branch: Branch,
    pub code: AuthCode,
}

impl fmt::Display for LogLine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {} {} {}",
            self.timestamp,
            self.transaction_id,
            self.branch.as_str(),
            self.code
        )
    }
}

/// True iff every submitted attribute byte-equals the stored one, a submitted
/// OTP equals the one issued for this attempt, and liveness was attested.
pub fn compare_pid(record: &EnrollmentRecord, pid: &PidBlock, issued_otp: Option<&Otp>) -> bool {
    if record.aadhaar != pid.aadhaar || !pid.liveness_attested {
        return false;
    }
    let demographics_ok = pid
        .submitted_demographics
        .as_ref()
        .is_none_or(|d| d.matches(&record.demographics));
    let biometrics_ok = pid
        .submitted_biometrics
        .as_ref()
        .is_none_or(|b| b.matches(&record.biometrics));
    let otp_ok = match (&pid.otp, issued_otp) {
        (None, _) => true,
        (Some(sent), Some(issued)) => sent == issued,
        (Some(_), None) => false,
    };
    demographics_ok && biometrics_ok && otp_ok
}

/// Checks the relay signature chain, decrypts and parses the PID block.
pub(crate) fn open_envelope(
    scheme: &dyn CryptoScheme,
    keys: &KeyDirectory,
    recipient: &KeyPair,
    envelope: &SecureEnvelope,
    expected_signers: &[NodeId],
) -> Result<PidBlock, AuthCode> {
    if envelope.origin_portal != expected_signers[0] || !envelope.verify_chain(scheme, keys, expected_signers) {
        return Err(AuthCode::BadSignature);
    }
    let plain = scheme
        .decrypt(recipient, &envelope.ciphertext)
        .map_err(|_| AuthCode::DecryptFailed)?;
    canonical_parse::<PidBlock>(&plain).map_err(|_| AuthCode::Malformed)
}

pub(crate) fn signed_response(
    scheme: &dyn CryptoScheme,
    key: &KeyPair,
    responder: NodeId,
    status: AuthStatus,
    transaction_id: TransactionId,
) -> AuthResponse {
    let body = AuthResponse::signed_bytes(status, transaction_id, responder);
    AuthResponse {
        status,
        transaction_id,
        responder,
        signature: scheme.sign(key, &body).expect("response body is never empty"),
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CacheEntry {
    pub record: EnrollmentRecord,
    pub inserted_at: u64,
}

#[derive(Debug, Clone)]
struct PendingAuth {
    pid: PidBlock,
    session_id: SessionId,
    service_provider: NodeId,
}

/// A verdict plus the routing needed to get it back to the service provider.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Verdict {
    pub response: AuthResponse,
    pub session_id: SessionId,
    pub service_provider: NodeId,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ZonalAction {
    Respond(Verdict),
    Fetch(FetchRequest),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ZonalError {
    #[error("dual write for zone {record_zone} delivered to zone {this_zone}")]
    WrongZone { record_zone: ZoneId, this_zone: ZoneId },
    #[error("dual write not signed by the registry")]
    BadSignature,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ZonalCounters {
    pub packages: u64,
    pub local_hits: u64,
    pub cache_hits: u64,
    pub fetches: u64,
    pub timeouts: u64,
}

pub struct ZonalState {
    zone: ZoneId,
    keypair: KeyPair,
    keys: KeyDirectory,
    scheme: Arc<dyn CryptoScheme>,
    cache_ttl_ms: u64,
    fetch_timeout_ms: u64,
    store: BTreeMap<AadhaarNumber, EnrollmentRecord>,
    cache: BTreeMap<AadhaarNumber, CacheEntry>,
    seen_nonces: BTreeSet<Nonce>,
    pending: BTreeMap<TransactionId, PendingAuth>,
    issued_otps: BTreeMap<Nonce, Otp>,
    log: Vec<LogLine>,
    counters: ZonalCounters,
}

impl ZonalState {
    pub fn new(
        zone: ZoneId,
        keypair: KeyPair,
        keys: KeyDirectory,
        scheme: Arc<dyn CryptoScheme>,
        cache_ttl_ms: u64,
        fetch_timeout_ms: u64,
    ) -> Self {
        Self {
            zone,
            keypair,
            keys,
            scheme,
            cache_ttl_ms,
            fetch_timeout_ms,
            store: BTreeMap::new(),
            cache: BTreeMap::new(),
            seen_nonces: BTreeSet::new(),
            pending: BTreeMap::new(),
            issued_otps: BTreeMap::new(),
            log: Vec::new(),
            counters: ZonalCounters::default(),
        }
    }

    pub fn zone(&self) -> ZoneId {
        self.zone
    }

    pub fn node_id(&self) -> NodeId {
        NodeId::Zone(self.zone.0)
    }

    pub fn store(&self) -> &BTreeMap<AadhaarNumber, EnrollmentRecord> {
        &self.store
    }

    pub fn cache(&self) -> &BTreeMap<AadhaarNumber, CacheEntry> {
        &self.cache
    }

    pub fn log(&self) -> &[LogLine] {
        &self.log
    }

    pub fn counters(&self) -> ZonalCounters {
        self.counters
    }

    pub fn pending_count(&self) -> usize {
        self.pending.len()
    }

    /// Out-of-band OTP issuance for the attempt identified by `nonce`.
    pub fn issue_otp(&mut self, nonce: Nonce, otp: Otp) {
        self.issued_otps.insert(nonce, otp);
    }

    fn record(&mut self, now: u64, txn: TransactionId, branch: Branch, code: AuthCode) {
        self.log.push(LogLine {
            timestamp: now,
            transaction_id: txn,
            branch,
            code,
        });
    }

    fn verdict(&self, status: AuthStatus, txn: TransactionId, session_id: SessionId, sp: NodeId) -> Verdict {
        Verdict {
            response: signed_response(&*self.scheme, &self.keypair, self.node_id(), status, txn),
            session_id,
            service_provider: sp,
        }
    }

    fn fresh(&self, entry: &CacheEntry, now: u64) -> bool {
        now.saturating_sub(entry.inserted_at) <= self.cache_ttl_ms
    }

    /// Removes cache entries older than the TTL. The store is never touched.
    pub fn evict_cache(&mut self, now: u64) -> usize {
        let ttl = self.cache_ttl_ms;
        let before = self.cache.len();
        self.cache.retain(|_, e| now.saturating_sub(e.inserted_at) <= ttl);
        before - self.cache.len()
    }

    /// Runs the authentication algorithm on a relayed package.
    pub fn handle_auth_package(&mut self, envelope: &SecureEnvelope, now: u64) -> ZonalAction {
        self.evict_cache(now);
        self.counters.packages += 1;
        let txn = envelope.transaction_id;
        let session = envelope.session_id;
        let sp = envelope.service_provider;
        let signers = [NodeId::Portal(self.zone.0), NodeId::Asa];

        let reject = |this: &mut Self, code: AuthCode| {
            this.record(now, txn, Branch::Rejected, code);
            ZonalAction::Respond(this.verdict(AuthStatus::Unsuccessful, txn, session, sp))
        };

        let pid = match open_envelope(&*self.scheme, &self.keys, &self.keypair, envelope, &signers) {
            Ok(pid) => pid,
            Err(code) => return reject(self, code),
        };
        if !self.seen_nonces.insert(pid.nonce) {
            return reject(self, AuthCode::Replay);
        }
        if !pid.liveness_attested {
            return reject(self, AuthCode::NoLiveness);
        }

        let local = self.store.get(&pid.aadhaar).map(|r| (r.clone(), Branch::LocalHit));
        let found = local.or_else(|| {
            self.cache
                .get(&pid.aadhaar)
                .filter(|e| self.fresh(e, now))
                .map(|e| (e.record.clone(), Branch::CacheHit))
        });

        match found {
            Some((record, branch)) => {
                match branch {
                    Branch::LocalHit => self.counters.local_hits += 1,
                    _ => self.counters.cache_hits += 1,
                }
                ZonalAction::Respond(self.conclude(&record, &pid, branch, txn, session, sp, now))
            }
            None => {
                self.counters.fetches += 1;
                let body = FetchRequest::signed_bytes(txn, self.zone, &pid.aadhaar);
                let request = FetchRequest {
                    transaction_id: txn,
                    requester: self.zone,
                    aadhaar: pid.aadhaar.clone(),
                    signature: self.scheme.sign(&self.keypair, &body).expect("non-empty"),
                };
                self.pending.insert(
                    txn,
                    PendingAuth {
                        pid,
                        session_id: session,
                        service_provider: sp,
                    },
                );
                self.record(now, txn, Branch::FetchIssued, AuthCode::Pending);
                ZonalAction::Fetch(request)
            }
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn conclude(
        &mut self,
        record: &EnrollmentRecord,
        pid: &PidBlock,
        branch: Branch,
        txn: TransactionId,
        session: SessionId,
        sp: NodeId,
        now: u64,
    ) -> Verdict {
        let issued = self.issued_otps.get(&pid.nonce).cloned();
        let (status, code) = if compare_pid(record, pid, issued.as_ref()) {
            (AuthStatus::Successful, AuthCode::Ok)
        } else {
            (AuthStatus::Unsuccessful, AuthCode::Mismatch)
        };
        self.record(now, txn, branch, code);
        self.verdict(status, txn, session, sp)
    }

    /// Resumes a suspended transaction with the registry's answer. Returns
    /// `None` for answers that match no pending transaction or fail the
    /// registry signature check.
    pub fn handle_fetch_response(&mut self, response: &FetchResponse, now: u64) -> Option<Verdict> {
        self.evict_cache(now);
        let txn = response.transaction_id;
        if !self.pending.contains_key(&txn) {
            return None;
        }
        if response.requester != self.zone
            || !self
                .keys
                .verify_from(&*self.scheme, NodeId::Cidr, &response.body_bytes(), &response.signature)
        {
            self.record(now, txn, Branch::FetchIssued, AuthCode::BadSignature);
            return None;
        }
        let pending = self.pending.remove(&txn)?;
        let (session, sp) = (pending.session_id, pending.service_provider);

        let Some(ciphertext) = &response.encrypted_record else {
            self.record(now, txn, Branch::FetchNotFound, AuthCode::NotFound);
            return Some(self.verdict(AuthStatus::InvalidNumber, txn, session, sp));
        };
        let record = self
            .scheme
            .decrypt(&self.keypair, ciphertext)
            .ok()
            .and_then(|plain| canonical_parse::<EnrollmentRecord>(&plain).ok())
            .filter(|r| r.aadhaar == pending.pid.aadhaar);
        let Some(record) = record else {
            self.record(now, txn, Branch::FetchHit, AuthCode::DecryptFailed);
            return Some(self.verdict(AuthStatus::Unsuccessful, txn, session, sp));
        };
        if !self.store.contains_key(&record.aadhaar) {
            self.cache.insert(
                record.aadhaar.clone(),
                CacheEntry {
                    record: record.clone(),
                    inserted_at: now,
                },
            );
        }
        Some(self.conclude(&record, &pending.pid, Branch::FetchHit, txn, session, sp, now))
    }

    /// Expires a pending fetch. `None` if the transaction already completed.
    pub fn handle_fetch_timeout(&mut self, txn: TransactionId, now: u64) -> Option<Verdict> {
        let pending = self.pending.remove(&txn)?;
        self.counters.timeouts += 1;
        self.record(now, txn, Branch::TimedOut, AuthCode::Timeout);
        Some(self.verdict(
            AuthStatus::Unsuccessful,
            txn,
            pending.session_id,
            pending.service_provider,
        ))
    }

    /// Stores an enrollment copy from the registry. Idempotent.
    pub fn accept_dual_write(&mut self, write: &DualWrite) -> Result<Message, ZonalError> {
        let body = DualWrite::signed_bytes(&write.record);
        if !self
            .keys
            .verify_from(&*self.scheme, NodeId::Cidr, &body, &write.signature)
        {
            return Err(ZonalError::BadSignature);
        }
        if write.record.home_zone != self.zone {
            return Err(ZonalError::WrongZone {
                record_zone: write.record.home_zone,
                this_zone: self.zone,
            });
        }
        let aadhaar = write.record.aadhaar.clone();
        self.cache.remove(&aadhaar);
        self.store.insert(aadhaar.clone(), write.record.clone());
        Ok(Message::DualWriteAck {
            aadhaar,
            zone: self.zone,
        })
    }

    /// Message-driven entry point used by the simulator.
    pub fn on_message(&mut self, now: u64, from: NodeId, msg: Message) -> Vec<Effect> {
        let reply = |v: Verdict| Effect::send(NodeId::Asa, verdict_message(v));
        match msg {
            Message::AuthRequest { envelope } if from == NodeId::Asa => {
                match self.handle_auth_package(&envelope, now) {
                    ZonalAction::Respond(v) => vec![reply(v)],
                    ZonalAction::Fetch(req) => {
                        let txn = req.transaction_id;
                        vec![
                            Effect::send(NodeId::Cidr, Message::FetchRequest(req)),
                            Effect::timer(self.fetch_timeout_ms, Message::FetchTimeout { transaction_id: txn }),
                        ]
                    }
                }
            }
            Message::FetchResponse(resp) if from == NodeId::Cidr => {
                let cached_before = self.cache.len();
                let mut out: Vec<Effect> = self.handle_fetch_response(&resp, now).map(reply).into_iter().collect();
                if self.cache.len() > cached_before {
                    out.push(Effect::timer(self.cache_ttl_ms + 1, Message::CacheSweep));
                }
                out
            }
            Message::FetchTimeout { transaction_id } => self
                .handle_fetch_timeout(transaction_id, now)
                .map(reply)
                .into_iter()
                .collect(),
            Message::CacheSweep => {
                self.evict_cache(now);
                vec![]
            }
            Message::DualWrite(write) if from == NodeId::Cidr => match self.accept_dual_write(&write) {
                Ok(ack) => vec![Effect::send(NodeId::Cidr, ack)],
                Err(e) => {
                    log::warn!("{}: rejected dual write: {e}", self.node_id());
                    vec![]
                }
            },
            other => {
                log::debug!("{}: ignoring {} from {from}", self.node_id(), other.kind_name());
                vec![]
            }
        }
    }

    /// Store dump: one hex-encoded canonical record per line, ordered by number.
    pub fn store_dump(&self) -> String {
        self.store
            .values()
            .map(|r| format!("{}\n", hex::encode(canonical_serialize(r).expect("valid record"))))
            .collect()
    }

    /// Cache dump: hex-encoded canonical record and insertion time per line.
    pub fn cache_dump(&self) -> String {
        self.cache
            .values()
            .map(|e| {
                format!(
                    "{} {}\n",
                    hex::encode(canonical_serialize(&e.record).expect("valid record")),
                    e.inserted_at
                )
            })
            .collect()
    }

    pub fn log_dump(&self) -> String {
        self.log.iter().map(|l| format!("{l}\n")).collect()
    }
}

pub(crate) fn verdict_message(v: Verdict) -> Message {
    Message::AuthVerdict {
        session_id: v.session_id,
        service_provider: v.service_provider,
        response: v.response,
    }
}
