//! Central registry: system of record for every enrollment, fallback source
//! for zonal offices, and the only authenticator in the centralized baseline.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use chrono::NaiveDate;
use rand::RngCore;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::aadhaar::AadhaarNumber;
use crate::codec::canonical_serialize;
use crate::crypto::{CryptoScheme, KeyDirectory, KeyPair, NonceLedger, SecureEnvelope};
use crate::domain::{
    derive_home_zone, AuthResponse, AuthStatus, BiometricData, DemographicData, DomainError, EnrollmentRecord, NodeId,
    Nonce, Otp, ZoneId,
};
use crate::message::{DualWrite, FetchRequest, FetchResponse, Message};
use crate::sim::Effect;
use crate::zonal::{compare_pid, open_envelope, signed_response, AuthCode};

/// Issued bodies stay below 2^36, well inside the 11-digit range.
pub const ISSUE_MASK_BITS: u32 = 36;
const ISSUE_MASK: u64 = (1 << ISSUE_MASK_BITS) - 1;

/// Delay between dual-write retransmissions and the attempt cap.
pub const DUAL_WRITE_RETRY_MS: u64 = 1_000;
pub const DUAL_WRITE_MAX_ATTEMPTS: u32 = 5;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CidrError {
    #[error("biometrics already enrolled under {0}")]
    DuplicateEnrollment(AadhaarNumber),
    #[error("invalid enrollment data: {0}")]
    InvalidRecord(String),
    #[error(transparent)]
    Config(#[from] DomainError),
    #[error("issuance counter exhausted")]
    Exhausted,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FetchLogEntry {
    pub zone: ZoneId,
    pub aadhaar: AadhaarNumber,
    pub timestamp: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FetchOutcome {
    Found(FetchResponse),
    NotFound(FetchResponse),
    /// Signature did not verify; nothing is disclosed.
    Rejected,
}

/// Result of a successful enrollment: the new number, the stored record and
/// the signed copy to deliver to the home zone.
#[derive(Debug, Clone)]
pub struct Enrollment {
    pub aadhaar: AadhaarNumber,
    pub record: EnrollmentRecord,
    pub dual_write: DualWrite,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct CidrCounters {
    pub auth_requests: u64,
    pub fetch_requests: u64,
    pub fetch_rejections: u64,
}

pub struct CidrState {
    records: BTreeMap<AadhaarNumber, EnrollmentRecord>,
    by_photo: BTreeMap<[u8; 32], AadhaarNumber>,
    issued_count: u64,
    issue_mask: u64,
    fetch_log: Vec<FetchLogEntry>,
    audit_log: Vec<String>,
    keypair: KeyPair,
    keys: KeyDirectory,
    scheme: Arc<dyn CryptoScheme>,
    rng: ChaCha8Rng,
    ledger: NonceLedger,
    seen_nonces: BTreeSet<Nonce>,
    issued_otps: BTreeMap<Nonce, Otp>,
    unacked: BTreeMap<AadhaarNumber, (DualWrite, u32)>,
    counters: CidrCounters,
}

impl CidrState {
    /// `issue_seed` is folded into every issued number body; only its low 36
    /// bits are used.
    pub fn new(
        keypair: KeyPair,
        keys: KeyDirectory,
        scheme: Arc<dyn CryptoScheme>,
        issue_seed: u64,
        rng: ChaCha8Rng,
    ) -> Self {
        Self {
            records: BTreeMap::new(),
            by_photo: BTreeMap::new(),
            issued_count: 0,
            issue_mask: issue_seed & ISSUE_MASK,
            fetch_log: Vec::new(),
            audit_log: Vec::new(),
            keypair,
            keys,
            scheme,
            rng,
            ledger: NonceLedger::default(),
            seen_nonces: BTreeSet::new(),
            issued_otps: BTreeMap::new(),
            unacked: BTreeMap::new(),
            counters: CidrCounters::default(),
        }
    }

    pub fn records(&self) -> &BTreeMap<AadhaarNumber, EnrollmentRecord> {
        &self.records
    }

    pub fn issued_count(&self) -> u64 {
        self.issued_count
    }

    pub fn fetch_log(&self) -> &[FetchLogEntry] {
        &self.fetch_log
    }

    pub fn audit_log(&self) -> &[String] {
        &self.audit_log
    }

    pub fn counters(&self) -> CidrCounters {
        self.counters
    }

    pub fn issue_otp(&mut self, nonce: Nonce, otp: Otp) {
        self.issued_otps.insert(nonce, otp);
    }

    /// Registers a new resident and prepares the copy for their home zone.
    pub fn enroll(
        &mut self,
        demographics: DemographicData,
        biometrics: BiometricData,
        zone_count: u16,
        today: NaiveDate,
    ) -> Result<Enrollment, CidrError> {
        let home_zone = derive_home_zone(&demographics, zone_count)?;
        demographics.validate_as_of(today).map_err(CidrError::InvalidRecord)?;
        if let Some(existing) = self.by_photo.get(&biometrics.photo_digest) {
            return Err(CidrError::DuplicateEnrollment(existing.clone()));
        }
        let counter = self.issued_count + 1;
        if counter > ISSUE_MASK {
            return Err(CidrError::Exhausted);
        }
        let aadhaar = AadhaarNumber::from_body(counter ^ self.issue_mask).map_err(DomainError::from)?;
        let record = EnrollmentRecord {
            aadhaar: aadhaar.clone(),
            demographics,
            biometrics,
            home_zone,
        };
        let body = canonical_serialize(&record).map_err(|e| CidrError::InvalidRecord(e.to_string()))?;
        let dual_write = DualWrite {
            record: record.clone(),
            signature: self.scheme.sign(&self.keypair, &body).expect("non-empty"),
        };
        self.by_photo.insert(record.biometrics.photo_digest, aadhaar.clone());
        self.records.insert(aadhaar.clone(), record.clone());
        self.issued_count = counter;
        self.unacked.insert(aadhaar.clone(), (dual_write.clone(), 1));
        Ok(Enrollment {
            aadhaar,
            record,
            dual_write,
        })
    }

    /// Answers a zonal office's request for a record it does not hold.
    pub fn handle_pid_fetch(&mut self, request: &FetchRequest, now: u64) -> FetchOutcome {
        self.counters.fetch_requests += 1;
        let zone_node = NodeId::Zone(request.requester.0);
        let zone_key = self.keys.get(&zone_node.to_string());
        let authentic = zone_key.is_some()
            && self
                .keys
                .verify_from(&*self.scheme, zone_node, &request.body_bytes(), &request.signature);
        let Some(zone_key) = zone_key.filter(|_| authentic) else {
            self.counters.fetch_rejections += 1;
            self.audit_log.push(format!(
                "{now} {} fetch_rejected {}",
                request.transaction_id,
                AuthCode::BadSignature
            ));
            return FetchOutcome::Rejected;
        };

        let txn = request.transaction_id;
        let requester = request.requester;
        match self.records.get(&request.aadhaar) {
            Some(record) => {
                let plain = canonical_serialize(record).expect("stored record is valid");
                let ciphertext = loop {
                    let nonce = self.fresh_nonce();
                    if let Ok(ct) = self.ledger.encrypt(&*self.scheme, &zone_key, &plain, nonce) {
                        break ct;
                    }
                };
                self.fetch_log.push(FetchLogEntry {
                    zone: requester,
                    aadhaar: request.aadhaar.clone(),
                    timestamp: now,
                });
                let body = FetchResponse::signed_bytes(txn, requester, Some(&ciphertext));
                FetchOutcome::Found(FetchResponse {
                    transaction_id: txn,
                    requester,
                    encrypted_record: Some(ciphertext),
                    signature: self.scheme.sign(&self.keypair, &body).expect("non-empty"),
                })
            }
            None => {
                let body = FetchResponse::signed_bytes(txn, requester, None);
                FetchOutcome::NotFound(FetchResponse {
                    transaction_id: txn,
                    requester,
                    encrypted_record: None,
                    signature: self.scheme.sign(&self.keypair, &body).expect("non-empty"),
                })
            }
        }
    }

    fn fresh_nonce(&mut self) -> Nonce {
        let mut n = [0u8; 16];
        self.rng.fill_bytes(&mut n);
        Nonce(n)
    }

    /// Centralized authentication: the same match rule, applied at the registry.
    pub fn baseline_authenticate(&mut self, envelope: &SecureEnvelope, now: u64) -> AuthResponse {
        self.counters.auth_requests += 1;
        let txn = envelope.transaction_id;
        let respond = |this: &Self, status| signed_response(&*this.scheme, &this.keypair, NodeId::Cidr, status, txn);
        let signers = [envelope.origin_portal, NodeId::Asa];

        let outcome = if !matches!(envelope.origin_portal, NodeId::Sp(_)) {
            Err(AuthCode::BadSignature)
        } else {
            open_envelope(&*self.scheme, &self.keys, &self.keypair, envelope, &signers)
        };
        let pid = match outcome {
            Ok(pid) => pid,
            Err(code) => {
                self.audit_log.push(format!("{now} {txn} auth_rejected {code}"));
                return respond(self, AuthStatus::Unsuccessful);
            }
        };
        let rejection = if !self.seen_nonces.insert(pid.nonce) {
            Some(AuthCode::Replay)
        } else if !pid.liveness_attested {
            Some(AuthCode::NoLiveness)
        } else {
            None
        };
        if let Some(code) = rejection {
            self.audit_log.push(format!("{now} {txn} auth_rejected {code}"));
            return respond(self, AuthStatus::Unsuccessful);
        }
        let status = match self.records.get(&pid.aadhaar) {
            None => AuthStatus::InvalidNumber,
            Some(record) if compare_pid(record, &pid, self.issued_otps.get(&pid.nonce)) => AuthStatus::Successful,
            Some(_) => AuthStatus::Unsuccessful,
        };
        respond(self, status)
    }

    /// Signed copies that still need an acknowledgement, oldest number first.
    pub fn pending_dual_writes(&self) -> impl Iterator<Item = &DualWrite> {
        self.unacked.values().map(|(d, _)| d)
    }

    pub fn on_message(&mut self, now: u64, from: NodeId, msg: Message) -> Vec<Effect> {
        match msg {
            Message::FetchRequest(req) => match self.handle_pid_fetch(&req, now) {
                FetchOutcome::Found(resp) | FetchOutcome::NotFound(resp) => {
                    vec![Effect::send(
                        NodeId::Zone(resp.requester.0),
                        Message::FetchResponse(resp),
                    )]
                }
                FetchOutcome::Rejected => vec![],
            },
            Message::AuthRequest { envelope } if from == NodeId::Asa => {
                let response = self.baseline_authenticate(&envelope, now);
                vec![Effect::send(
                    NodeId::Asa,
                    Message::AuthVerdict {
                        session_id: envelope.session_id,
                        service_provider: envelope.service_provider,
                        response,
                    },
                )]
            }
            Message::DualWriteAck { aadhaar, zone } => {
                if self.records.get(&aadhaar).is_some_and(|r| r.home_zone == zone) && from == NodeId::Zone(zone.0) {
                    self.unacked.remove(&aadhaar);
                }
                vec![]
            }
            Message::DualWriteRetry { aadhaar } => match self.unacked.get_mut(&aadhaar) {
                Some((write, attempts)) if *attempts < DUAL_WRITE_MAX_ATTEMPTS => {
                    *attempts += 1;
                    let zone = NodeId::Zone(write.record.home_zone.0);
                    vec![
                        Effect::send(zone, Message::DualWrite(write.clone())),
                        Effect::timer(DUAL_WRITE_RETRY_MS, Message::DualWriteRetry { aadhaar }),
                    ]
                }
                Some(_) => {
                    self.audit_log.push(format!("{now} - dual_write_abandoned {aadhaar}"));
                    vec![]
                }
                None => vec![],
            },
            other => {
                log::debug!("cidr: ignoring {} from {from}", other.kind_name());
                vec![]
            }
        }
    }

    /// Registry dump: one hex-encoded canonical record per line.
    pub fn dump(&self) -> String {
        self.records
            .values()
            .map(|r| format!("{}\n", hex::encode(canonical_serialize(r).expect("valid record"))))
            .collect()
    }

    pub fn fetch_log_dump(&self) -> String {
        self.fetch_log
            .iter()
            .map(|e| format!("{} {} {}\n", e.timestamp, e.zone, e.aadhaar))
            .collect()
    }

    pub fn audit_log_dump(&self) -> String {
        self.audit_log.iter().map(|l| format!("{l}\n")).collect()
    }
}
