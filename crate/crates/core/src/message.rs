//! Wire messages exchanged between simulated parties.
//!
//! A message is a single TLV field whose tag is the message kind and whose
//! value is the canonical encoding of the body.

use crate::aadhaar::AadhaarNumber;
use crate::codec::{canonical_serialize, Canonical, CodecError, Field, Reader, Writer};
use crate::crypto::{SecureEnvelope, Signature};
use crate::domain::{AuthResponse, DomainError, EnrollmentRecord, NodeId, PidBlock, SessionId, TransactionId, ZoneId};

/// Zonal office asks the registry for a record it does not hold.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FetchRequest {
    pub transaction_id: TransactionId,
    pub requester: ZoneId,
    pub aadhaar: AadhaarNumber,
    pub signature: Signature,
}

impl FetchRequest {
    pub fn signed_bytes(transaction_id: TransactionId, requester: ZoneId, aadhaar: &AadhaarNumber) -> Vec<u8> {
        let mut w = Writer::new();
        w.bytes(0x01, &transaction_id.0)
            .nested(0x02, &requester)
            .nested(0x03, aadhaar);
        w.finish()
    }

    pub fn body_bytes(&self) -> Vec<u8> {
        Self::signed_bytes(self.transaction_id, self.requester, &self.aadhaar)
    }
}

impl Canonical for FetchRequest {
    fn encode(&self, w: &mut Writer) {
        w.bytes(0x01, &self.transaction_id.0)
            .nested(0x02, &self.requester)
            .nested(0x03, &self.aadhaar)
            .nested(0x04, &self.signature);
    }

    fn decode(r: &mut Reader<'_>) -> Result<Self, CodecError> {
        Ok(Self {
            transaction_id: TransactionId(r.field(0x01)?.array()?),
            requester: r.field(0x02)?.nested()?,
            aadhaar: r.field(0x03)?.nested()?,
            signature: r.field(0x04)?.nested()?,
        })
    }
}

/// Registry answer to a [`FetchRequest`]. A found record travels encrypted to
/// the requesting zone's key.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FetchResponse {
    pub transaction_id: TransactionId,
    pub requester: ZoneId,
    pub encrypted_record: Option<Vec<u8>>,
    pub signature: Signature,
}

impl FetchResponse {
    pub fn signed_bytes(transaction_id: TransactionId, requester: ZoneId, encrypted_record: Option<&[u8]>) -> Vec<u8> {
        let mut w = Writer::new();
        w.bytes(0x01, &transaction_id.0)
            .nested(0x02, &requester)
            .bool(0x03, encrypted_record.is_some());
        if let Some(ct) = encrypted_record {
            w.bytes(0x04, ct);
        }
        w.finish()
    }

    pub fn body_bytes(&self) -> Vec<u8> {
        Self::signed_bytes(self.transaction_id, self.requester, self.encrypted_record.as_deref())
    }
}

impl Canonical for FetchResponse {
    fn encode(&self, w: &mut Writer) {
        w.bytes(0x01, &self.transaction_id.0)
            .nested(0x02, &self.requester)
            .bool(0x03, self.encrypted_record.is_some());
        if let Some(ct) = &self.encrypted_record {
            w.bytes(0x04, ct);
        }
        w.nested(0x05, &self.signature);
    }

    fn decode(r: &mut Reader<'_>) -> Result<Self, CodecError> {
        let transaction_id = TransactionId(r.field(0x01)?.array()?);
        let requester = r.field(0x02)?.nested()?;
        let found = r.field(0x03)?;
        let encrypted_record = if found.bool()? {
            Some(r.field(0x04)?.value.to_vec())
        } else {
            None
        };
        Ok(Self {
            transaction_id,
            requester,
            encrypted_record,
            signature: r.field(0x05)?.nested()?,
        })
    }
}

/// Enrollment copy sent from the registry to the record's home zone.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DualWrite {
    pub record: EnrollmentRecord,
    pub signature: Signature,
}

impl DualWrite {
    pub fn signed_bytes(record: &EnrollmentRecord) -> Vec<u8> {
        canonical_serialize(record).expect("stored records satisfy their invariants")
    }
}

impl Canonical for DualWrite {
    fn encode(&self, w: &mut Writer) {
        w.nested(0x01, &self.record).nested(0x02, &self.signature);
    }

    fn decode(r: &mut Reader<'_>) -> Result<Self, CodecError> {
        Ok(Self {
            record: r.field(0x01)?.nested()?,
            signature: r.field(0x02)?.nested()?,
        })
    }
}

/// Sixteen bytes a user agent picks to correlate its own session grant.
pub type Handle = [u8; 16];

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Message {
    /// Driver tells a user agent to start the given workload attempt.
    Begin {
        attempt: u64,
    },
    /// User asks a service provider for access, naming the zone portal to use.
    AccessRequest {
        handle: Handle,
        zone_hint: ZoneId,
    },
    /// Service provider asks a zonal portal to open a session.
    OpenSession {
        handle: Handle,
        service_provider: NodeId,
        user: NodeId,
    },
    /// Portal hands the user the session to submit against.
    SessionGrant {
        handle: Handle,
        session_id: SessionId,
        transaction_id: TransactionId,
    },
    /// Portal tells the service provider which session it opened.
    SessionOpened {
        handle: Handle,
        session_id: SessionId,
    },
    /// User submits its PID block to the portal.
    PidSubmission {
        session_id: SessionId,
        pid: PidBlock,
    },
    /// Centralized flow: the user hands the PID block to the provider's client app.
    LegacySubmission {
        pid: PidBlock,
    },
    AuthRequest {
        envelope: SecureEnvelope,
    },
    AuthVerdict {
        session_id: SessionId,
        service_provider: NodeId,
        response: AuthResponse,
    },
    FetchRequest(FetchRequest),
    FetchResponse(FetchResponse),
    DualWrite(DualWrite),
    DualWriteAck {
        aadhaar: AadhaarNumber,
        zone: ZoneId,
    },
    FetchTimeout {
        transaction_id: TransactionId,
    },
    CacheSweep,
    DualWriteRetry {
        aadhaar: AadhaarNumber,
    },
}

mod kind {
    pub const BEGIN: u8 = 0x10;
    pub const ACCESS_REQUEST: u8 = 0x11;
    pub const OPEN_SESSION: u8 = 0x12;
    pub const SESSION_GRANT: u8 = 0x13;
    pub const SESSION_OPENED: u8 = 0x14;
    pub const PID_SUBMISSION: u8 = 0x15;
    pub const LEGACY_SUBMISSION: u8 = 0x16;
    pub const AUTH_REQUEST: u8 = 0x17;
    pub const AUTH_VERDICT: u8 = 0x18;
    pub const FETCH_REQUEST: u8 = 0x19;
    pub const FETCH_RESPONSE: u8 = 0x1A;
    pub const DUAL_WRITE: u8 = 0x1B;
    pub const DUAL_WRITE_ACK: u8 = 0x1C;
    pub const FETCH_TIMEOUT: u8 = 0x20;
    pub const CACHE_SWEEP: u8 = 0x21;
    pub const DUAL_WRITE_RETRY: u8 = 0x22;
}

impl Message {
    pub fn kind_name(&self) -> &'static str {
        match self {
            Message::Begin { .. } => "Begin",
            Message::AccessRequest { .. } => "AccessRequest",
            Message::OpenSession { .. } => "OpenSession",
            Message::SessionGrant { .. } => "SessionGrant",
            Message::SessionOpened { .. } => "SessionOpened",
            Message::PidSubmission { .. } => "PidSubmission",
            Message::LegacySubmission { .. } => "LegacySubmission",
            Message::AuthRequest { .. } => "AuthRequest",
            Message::AuthVerdict { .. } => "AuthVerdict",
            Message::FetchRequest(_) => "FetchRequest",
            Message::FetchResponse(_) => "FetchResponse",
            Message::DualWrite(_) => "DualWrite",
            Message::DualWriteAck { .. } => "DualWriteAck",
            Message::FetchTimeout { .. } => "FetchTimeout",
            Message::CacheSweep => "CacheSweep",
            Message::DualWriteRetry { .. } => "DualWriteRetry",
        }
    }

    /// Local timers never cross a link.
    pub fn is_timer(&self) -> bool {
        matches!(
            self,
            Message::FetchTimeout { .. } | Message::CacheSweep | Message::DualWriteRetry { .. }
        )
    }

    /// Transaction the message belongs to, when it is visible in clear.
    pub fn transaction_id(&self) -> Option<TransactionId> {
        match self {
            Message::SessionGrant { transaction_id, .. } | Message::FetchTimeout { transaction_id } => {
                Some(*transaction_id)
            }
            Message::AuthRequest { envelope } => Some(envelope.transaction_id),
            Message::AuthVerdict { response, .. } => Some(response.transaction_id),
            Message::FetchRequest(f) => Some(f.transaction_id),
            Message::FetchResponse(f) => Some(f.transaction_id),
            _ => None,
        }
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        canonical_serialize(self).expect("protocol messages are built from valid parts")
    }
}

fn node(f: &Field<'_>) -> Result<NodeId, CodecError> {
    f.str()?.parse().map_err(|e: DomainError| f.invalid(e.to_string()))
}

impl Canonical for Message {
    fn encode(&self, w: &mut Writer) {
        let mut b = Writer::new();
        let tag = match self {
            Message::Begin { attempt } => {
                b.u64(0x01, *attempt);
                kind::BEGIN
            }
            Message::AccessRequest { handle, zone_hint } => {
                b.bytes(0x01, handle).nested(0x02, zone_hint);
                kind::ACCESS_REQUEST
            }
            Message::OpenSession {
                handle,
                service_provider,
                user,
            } => {
                b.bytes(0x01, handle)
                    .str(0x02, &service_provider.to_string())
                    .str(0x03, &user.to_string());
                kind::OPEN_SESSION
            }
            Message::SessionGrant {
                handle,
                session_id,
                transaction_id,
            } => {
                b.bytes(0x01, handle)
                    .bytes(0x02, &session_id.0)
                    .bytes(0x03, &transaction_id.0);
                kind::SESSION_GRANT
            }
            Message::SessionOpened { handle, session_id } => {
                b.bytes(0x01, handle).bytes(0x02, &session_id.0);
                kind::SESSION_OPENED
            }
            Message::PidSubmission { session_id, pid } => {
                b.bytes(0x01, &session_id.0).nested(0x02, pid);
                kind::PID_SUBMISSION
            }
            Message::LegacySubmission { pid } => {
                b.nested(0x01, pid);
                kind::LEGACY_SUBMISSION
            }
            Message::AuthRequest { envelope } => {
                b.nested(0x01, envelope);
                kind::AUTH_REQUEST
            }
            Message::AuthVerdict {
                session_id,
                service_provider,
                response,
            } => {
                b.bytes(0x01, &session_id.0)
                    .str(0x02, &service_provider.to_string())
                    .nested(0x03, response);
                kind::AUTH_VERDICT
            }
            Message::FetchRequest(f) => {
                f.encode(&mut b);
                kind::FETCH_REQUEST
            }
            Message::FetchResponse(f) => {
                f.encode(&mut b);
                kind::FETCH_RESPONSE
            }
            Message::DualWrite(d) => {
                d.encode(&mut b);
                kind::DUAL_WRITE
            }
            Message::DualWriteAck { aadhaar, zone } => {
                b.nested(0x01, aadhaar).nested(0x02, zone);
                kind::DUAL_WRITE_ACK
            }
            Message::FetchTimeout { transaction_id } => {
                b.bytes(0x01, &transaction_id.0);
                kind::FETCH_TIMEOUT
            }
            Message::CacheSweep => kind::CACHE_SWEEP,
            Message::DualWriteRetry { aadhaar } => {
                b.nested(0x01, aadhaar);
                kind::DUAL_WRITE_RETRY
            }
        };
        w.bytes(tag, &b.finish());
    }

    fn decode(r: &mut Reader<'_>) -> Result<Self, CodecError> {
        let start = r.position();
        let (tag, body) = r.next_any()?;
        let mut inner = Reader::at(body.value, body.offset);
        let msg = decode_body(tag, &mut inner)?.ok_or(CodecError::UnknownTag { offset: start, tag })?;
        inner.finish()?;
        Ok(msg)
    }
}

fn decode_body(tag: u8, r: &mut Reader<'_>) -> Result<Option<Message>, CodecError> {
    Ok(Some(match tag {
        kind::BEGIN => Message::Begin {
            attempt: r.field(0x01)?.u64()?,
        },
        kind::ACCESS_REQUEST => Message::AccessRequest {
            handle: r.field(0x01)?.array()?,
            zone_hint: r.field(0x02)?.nested()?,
        },
        kind::OPEN_SESSION => Message::OpenSession {
            handle: r.field(0x01)?.array()?,
            service_provider: node(&r.field(0x02)?)?,
            user: node(&r.field(0x03)?)?,
        },
        kind::SESSION_GRANT => Message::SessionGrant {
            handle: r.field(0x01)?.array()?,
            session_id: SessionId(r.field(0x02)?.array()?),
            transaction_id: TransactionId(r.field(0x03)?.array()?),
        },
        kind::SESSION_OPENED => Message::SessionOpened {
            handle: r.field(0x01)?.array()?,
            session_id: SessionId(r.field(0x02)?.array()?),
        },
        kind::PID_SUBMISSION => Message::PidSubmission {
            session_id: SessionId(r.field(0x01)?.array()?),
            pid: r.field(0x02)?.nested()?,
        },
        kind::LEGACY_SUBMISSION => Message::LegacySubmission {
            pid: r.field(0x01)?.nested()?,
        },
        kind::AUTH_REQUEST => Message::AuthRequest {
            envelope: r.field(0x01)?.nested()?,
        },
        kind::AUTH_VERDICT => Message::AuthVerdict {
            session_id: SessionId(r.field(0x01)?.array()?),
            service_provider: node(&r.field(0x02)?)?,
            response: r.field(0x03)?.nested()?,
        },
        kind::FETCH_REQUEST => Message::FetchRequest(FetchRequest::decode(r)?),
        kind::FETCH_RESPONSE => Message::FetchResponse(FetchResponse::decode(r)?),
        kind::DUAL_WRITE => Message::DualWrite(DualWrite::decode(r)?),
        kind::DUAL_WRITE_ACK => Message::DualWriteAck {
            aadhaar: r.field(0x01)?.nested()?,
            zone: r.field(0x02)?.nested()?,
        },
        kind::FETCH_TIMEOUT => Message::FetchTimeout {
            transaction_id: TransactionId(r.field(0x01)?.array()?),
        },
        kind::CACHE_SWEEP => Message::CacheSweep,
        kind::DUAL_WRITE_RETRY => Message::DualWriteRetry {
            aadhaar: r.field(0x01)?.nested()?,
        },
        _ => return Ok(None),
    }))
}
