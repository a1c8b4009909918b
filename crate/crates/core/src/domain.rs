//! Domain types shared by every node, with their canonical encodings.
//!
//! Tag tables (all fields in ascending tag order, see [`crate::codec`]):
//!
//! | type | tags |
//! |---|---|
//! | `AadhaarNumber` | `01` 12 ASCII digits |
//! | `ZoneId` | `01` u16 |
//! | `DemographicData` | `01` name, `02` address, `03` date of birth `YYYY-MM-DD`, `04` phone, `05` email |
//! | `DemographicSubset` | same tags as `DemographicData`, each optional |
//! | `BiometricData` | `01` fingerprint ×10, `02` iris ×2, `03` photo digest (32 bytes) |
//! | `TemplateSample` | `01` position (u8), `02` template bytes |
//! | `BiometricSubset` | `01` fingerprint sample*, `02` iris sample*, `03` photo digest? |
//! | `EnrollmentRecord` | `01` aadhaar, `02` demographics, `03` biometrics, `04` home zone |
//! | `PidBlock` | `01` aadhaar, `02` demographics?, `03` biometrics?, `04` otp?, `05` liveness, `06` nonce, `07` timestamp (u64 ms) |
//! | `AuthStatus` | `01` status string |
//! | `AuthResponse` | `01` status, `02` transaction id, `03` responder, `04` signature |

use std::fmt;
use std::str::FromStr;

use chrono::NaiveDate;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::aadhaar::{AadhaarError, AadhaarNumber};
use crate::codec::{Canonical, CodecError, Field, Reader, Writer};
use crate::crypto::Signature;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DomainError {
    #[error(transparent)]
    Aadhaar(#[from] AadhaarError),
    #[error("zone count must be at least 1")]
    NoZones,
    #[error("invalid node identity {0:?}")]
    NodeId(String),
    #[error("invalid date {0:?}")]
    Date(String),
    #[error("invalid one-time password {0:?}")]
    Otp(String),
    #[error("invalid status string {0:?}")]
    Status(String),
}

macro_rules! id16 {
    ($(#[$meta:meta])* $name:ident) => {
        $(#[$meta])*
        #[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
        pub struct $name(pub [u8; 16]);

        impl $name {
            pub fn to_hex(&self) -> String {
                hex::encode(self.0)
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(&self.to_hex())
            }
        }

        impl fmt::Debug for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                write!(f, "{}({})", stringify!($name), self.to_hex())
            }
        }

        impl FromStr for $name {
            type Err = hex::FromHexError;

            fn from_str(s: &str) -> Result<Self, Self::Err> {
                let mut out = [0u8; 16];
                hex::decode_to_slice(s, &mut out)?;
                Ok(Self(out))
            }
        }
    };
}

id16!(
    /// Identifies one authentication transaction end to end.
    TransactionId
);
id16!(
    /// Portal session handle; the only identifier a service provider learns.
    SessionId
);
id16!(
    /// Per-attempt freshness value carried inside a PID block.
    Nonce
);

/// Index into the configured zone list.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ZoneId(pub u16);

impl fmt::Display for ZoneId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Network identity of a simulated party.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum NodeId {
    Driver,
    Cidr,
    Asa,
    Zone(u16),
    Portal(u16),
    Sp(u16),
    User(u32),
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NodeId::Driver => f.write_str("driver"),
            NodeId::Cidr => f.write_str("cidr"),
            NodeId::Asa => f.write_str("asa"),
            NodeId::Zone(z) => write!(f, "zone-{z}"),
            NodeId::Portal(z) => write!(f, "portal-{z}"),
            NodeId::Sp(s) => write!(f, "sp-{s}"),
            NodeId::User(u) => write!(f, "user-{u}"),
        }
    }
}

impl FromStr for NodeId {
    type Err = DomainError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || DomainError::NodeId(s.to_owned());
        match s {
            "driver" => return Ok(NodeId::Driver),
            "cidr" => return Ok(NodeId::Cidr),
            "asa" => return Ok(NodeId::Asa),
            _ => {}
        }
        let (kind, index) = s.split_once('-').ok_or_else(bad)?;
        if index.is_empty() || !index.bytes().all(|b| b.is_ascii_digit()) {
            return Err(bad());
        }
        match kind {
            "zone" => index.parse().map(NodeId::Zone).map_err(|_| bad()),
            "portal" => index.parse().map(NodeId::Portal).map_err(|_| bad()),
            "sp" => index.parse().map(NodeId::Sp).map_err(|_| bad()),
            "user" => index.parse().map(NodeId::User).map_err(|_| bad()),
            _ => Err(bad()),
        }
    }
}

/// Home zone for an address: the first eight bytes of SHA-256 over the
/// address's UTF-8 bytes, read big-endian, modulo the zone count.
pub fn derive_home_zone(demographics: &DemographicData, zone_count: u16) -> Result<ZoneId, DomainError> {
    zone_for_address(&demographics.address, zone_count)
}

pub fn zone_for_address(address: &str, zone_count: u16) -> Result<ZoneId, DomainError> {
    if zone_count == 0 {
        return Err(DomainError::NoZones);
    }
    let digest = Sha256::digest(address.as_bytes());
    let head = u64::from_be_bytes(digest[..8].try_into().expect("8 bytes"));
    Ok(ZoneId((head % u64::from(zone_count)) as u16))
}

const DATE_FORMAT: &str = "%Y-%m-%d";

fn parse_date(f: &Field<'_>) -> Result<NaiveDate, CodecError> {
    parse_iso_date(f.str()?).map_err(|_| f.invalid("bad date"))
}

/// Strict `YYYY-MM-DD`. chrono alone tolerates padding such as `1990-\t1-01`,
/// which would give one date two encodings.
pub fn parse_iso_date(s: &str) -> Result<NaiveDate, DomainError> {
    NaiveDate::parse_from_str(s, DATE_FORMAT)
        .ok()
        .filter(|d| d.format(DATE_FORMAT).to_string() == s)
        .ok_or_else(|| DomainError::Date(s.to_owned()))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DemographicData {
    pub name: String,
    pub address: String,
    pub date_of_birth: NaiveDate,
    pub phone: String,
    pub email: String,
}

impl DemographicData {
    /// Structural checks plus "date of birth is not after `today`".
    pub fn validate_as_of(&self, today: NaiveDate) -> Result<(), String> {
        self.check()?;
        if self.date_of_birth > today {
            return Err(format!("date of birth {} is in the future", self.date_of_birth));
        }
        Ok(())
    }
}

impl Canonical for DemographicData {
    fn encode(&self, w: &mut Writer) {
        w.str(0x01, &self.name)
            .str(0x02, &self.address)
            .str(0x03, &self.date_of_birth.format(DATE_FORMAT).to_string())
            .str(0x04, &self.phone)
            .str(0x05, &self.email);
    }

    fn decode(r: &mut Reader<'_>) -> Result<Self, CodecError> {
        Ok(Self {
            name: r.field(0x01)?.string()?,
            address: r.field(0x02)?.string()?,
            date_of_birth: parse_date(&r.field(0x03)?)?,
            phone: r.field(0x04)?.string()?,
            email: r.field(0x05)?.string()?,
        })
    }

    fn check(&self) -> Result<(), String> {
        if self.name.is_empty() {
            return Err("name is empty".into());
        }
        if self.address.is_empty() {
            return Err("address is empty".into());
        }
        Ok(())
    }
}

/// Demographic attributes a user chose to submit. Any non-empty subset is accepted.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct DemographicSubset {
    pub name: Option<String>,
    pub address: Option<String>,
    pub date_of_birth: Option<NaiveDate>,
    pub phone: Option<String>,
    pub email: Option<String>,
}

impl DemographicSubset {
    pub fn is_empty(&self) -> bool {
        self.name.is_none()
            && self.address.is_none()
            && self.date_of_birth.is_none()
            && self.phone.is_none()
            && self.email.is_none()
    }

    /// True iff every submitted attribute equals the stored one.
    pub fn matches(&self, stored: &DemographicData) -> bool {
        fn eq<T: PartialEq>(sub: &Option<T>, stored: &T) -> bool {
            sub.as_ref().is_none_or(|v| v == stored)
        }
        eq(&self.name, &stored.name)
            && eq(&self.address, &stored.address)
            && eq(&self.date_of_birth, &stored.date_of_birth)
            && eq(&self.phone, &stored.phone)
            && eq(&self.email, &stored.email)
    }
}

impl Canonical for DemographicSubset {
    fn encode(&self, w: &mut Writer) {
        if let Some(v) = &self.name {
            w.str(0x01, v);
        }
        if let Some(v) = &self.address {
            w.str(0x02, v);
        }
        if let Some(v) = &self.date_of_birth {
            w.str(0x03, &v.format(DATE_FORMAT).to_string());
        }
        if let Some(v) = &self.phone {
            w.str(0x04, v);
        }
        if let Some(v) = &self.email {
            w.str(0x05, v);
        }
    }

    fn decode(r: &mut Reader<'_>) -> Result<Self, CodecError> {
        Ok(Self {
            name: r.opt_field(0x01)?.map(|f| f.string()).transpose()?,
            address: r.opt_field(0x02)?.map(|f| f.string()).transpose()?,
            date_of_birth: r.opt_field(0x03)?.map(|f| parse_date(&f)).transpose()?,
            phone: r.opt_field(0x04)?.map(|f| f.string()).transpose()?,
            email: r.opt_field(0x05)?.map(|f| f.string()).transpose()?,
        })
    }

    fn check(&self) -> Result<(), String> {
        if self.is_empty() {
            return Err("demographic subset is empty".into());
        }
        Ok(())
    }
}

pub const FINGERPRINT_COUNT: usize = 10;
pub const IRIS_COUNT: usize = 2;

/// Enrollment biometrics: ten fingerprint templates, two iris templates and a
/// photograph digest. Templates are opaque; matching is byte equality.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BiometricData {
    pub fingerprint_templates: Vec<Vec<u8>>,
    pub iris_templates: Vec<Vec<u8>>,
    pub photo_digest: [u8; 32],
}

impl Canonical for BiometricData {
    fn encode(&self, w: &mut Writer) {
        for t in &self.fingerprint_templates {
            w.bytes(0x01, t);
        }
        for t in &self.iris_templates {
            w.bytes(0x02, t);
        }
        w.bytes(0x03, &self.photo_digest);
    }

    fn decode(r: &mut Reader<'_>) -> Result<Self, CodecError> {
        let fingerprint_templates = r.repeated(0x01)?.iter().map(|f| f.value.to_vec()).collect();
        let iris_templates = r.repeated(0x02)?.iter().map(|f| f.value.to_vec()).collect();
        Ok(Self {
            fingerprint_templates,
            iris_templates,
            photo_digest: r.field(0x03)?.array()?,
        })
    }

    fn check(&self) -> Result<(), String> {
        if self.fingerprint_templates.len() != FINGERPRINT_COUNT {
            return Err(format!(
                "expected {FINGERPRINT_COUNT} fingerprint templates, got {}",
                self.fingerprint_templates.len()
            ));
        }
        if self.iris_templates.len() != IRIS_COUNT {
            return Err(format!(
                "expected {IRIS_COUNT} iris templates, got {}",
                self.iris_templates.len()
            ));
        }
        if self
            .fingerprint_templates
            .iter()
            .chain(&self.iris_templates)
            .any(Vec::is_empty)
        {
            return Err("empty biometric template".into());
        }
        Ok(())
    }
}

/// One template at a given finger or eye position.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TemplateSample {
    pub position: u8,
    pub template: Vec<u8>,
}

impl Canonical for TemplateSample {
    fn encode(&self, w: &mut Writer) {
        w.u8(0x01, self.position).bytes(0x02, &self.template);
    }

    fn decode(r: &mut Reader<'_>) -> Result<Self, CodecError> {
        Ok(Self {
            position: r.field(0x01)?.u8()?,
            template: r.field(0x02)?.value.to_vec(),
        })
    }
}

/// Biometric samples submitted for one authentication attempt.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct BiometricSubset {
    pub fingerprints: Vec<TemplateSample>,
    pub irises: Vec<TemplateSample>,
    pub photo_digest: Option<[u8; 32]>,
}

impl BiometricSubset {
    pub fn is_empty(&self) -> bool {
        self.fingerprints.is_empty() && self.irises.is_empty() && self.photo_digest.is_none()
    }

    pub fn matches(&self, stored: &BiometricData) -> bool {
        fn all_match(samples: &[TemplateSample], stored: &[Vec<u8>]) -> bool {
            samples
                .iter()
                .all(|s| stored.get(s.position as usize).is_some_and(|t| *t == s.template))
        }
        all_match(&self.fingerprints, &stored.fingerprint_templates)
            && all_match(&self.irises, &stored.iris_templates)
            && self.photo_digest.is_none_or(|d| d == stored.photo_digest)
    }
}

impl Canonical for BiometricSubset {
    fn encode(&self, w: &mut Writer) {
        for s in &self.fingerprints {
            w.nested(0x01, s);
        }
        for s in &self.irises {
            w.nested(0x02, s);
        }
        if let Some(d) = &self.photo_digest {
            w.bytes(0x03, d);
        }
    }

    fn decode(r: &mut Reader<'_>) -> Result<Self, CodecError> {
        Ok(Self {
            fingerprints: r.repeated(0x01)?.iter().map(Field::nested).collect::<Result<_, _>>()?,
            irises: r.repeated(0x02)?.iter().map(Field::nested).collect::<Result<_, _>>()?,
            photo_digest: r.opt_field(0x03)?.map(|f| f.array()).transpose()?,
        })
    }

    fn check(&self) -> Result<(), String> {
        fn positions_ok(samples: &[TemplateSample], limit: usize) -> bool {
            samples.windows(2).all(|w| w[0].position < w[1].position)
                && samples
                    .iter()
                    .all(|s| (s.position as usize) < limit && !s.template.is_empty())
        }
        if self.is_empty() {
            return Err("biometric subset is empty".into());
        }
        if !positions_ok(&self.fingerprints, FINGERPRINT_COUNT) || !positions_ok(&self.irises, IRIS_COUNT) {
            return Err("sample positions must be strictly ascending and in range".into());
        }
        Ok(())
    }
}

impl Canonical for AadhaarNumber {
    fn encode(&self, w: &mut Writer) {
        w.str(0x01, self.as_str());
    }

    fn decode(r: &mut Reader<'_>) -> Result<Self, CodecError> {
        let f = r.field(0x01)?;
        AadhaarNumber::parse(f.str()?).map_err(|e| f.invalid(e.to_string()))
    }
}

impl Canonical for ZoneId {
    fn encode(&self, w: &mut Writer) {
        w.u16(0x01, self.0);
    }

    fn decode(r: &mut Reader<'_>) -> Result<Self, CodecError> {
        Ok(ZoneId(r.field(0x01)?.u16()?))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EnrollmentRecord {
    pub aadhaar: AadhaarNumber,
    pub demographics: DemographicData,
    pub biometrics: BiometricData,
    pub home_zone: ZoneId,
}

impl Canonical for EnrollmentRecord {
    fn encode(&self, w: &mut Writer) {
        w.nested(0x01, &self.aadhaar)
            .nested(0x02, &self.demographics)
            .nested(0x03, &self.biometrics)
            .nested(0x04, &self.home_zone);
    }

    fn decode(r: &mut Reader<'_>) -> Result<Self, CodecError> {
        Ok(Self {
            aadhaar: r.field(0x01)?.nested()?,
            demographics: r.field(0x02)?.nested()?,
            biometrics: r.field(0x03)?.nested()?,
            home_zone: r.field(0x04)?.nested()?,
        })
    }

    fn check(&self) -> Result<(), String> {
        self.demographics.check()?;
        self.biometrics.check()
    }
}

/// Six-digit one-time password.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Otp(String);

impl Otp {
    pub fn parse(s: &str) -> Result<Self, DomainError> {
        if s.len() == 6 && s.bytes().all(|b| b.is_ascii_digit()) {
            Ok(Self(s.to_owned()))
        } else {
            Err(DomainError::Otp(s.to_owned()))
        }
    }

    pub fn from_number(n: u32) -> Self {
        Self(format!("{:06}", n % 1_000_000))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Debug for Otp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("Otp(******)")
    }
}

/// User-submitted authentication payload.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PidBlock {
    pub aadhaar: AadhaarNumber,
    pub submitted_demographics: Option<DemographicSubset>,
    pub submitted_biometrics: Option<BiometricSubset>,
    pub otp: Option<Otp>,
    pub liveness_attested: bool,
    pub nonce: Nonce,
    pub timestamp: u64,
}

impl Canonical for PidBlock {
    fn encode(&self, w: &mut Writer) {
        w.nested(0x01, &self.aadhaar);
        if let Some(d) = &self.submitted_demographics {
            w.nested(0x02, d);
        }
        if let Some(b) = &self.submitted_biometrics {
            w.nested(0x03, b);
        }
        if let Some(o) = &self.otp {
            w.str(0x04, o.as_str());
        }
        w.bool(0x05, self.liveness_attested)
            .bytes(0x06, &self.nonce.0)
            .u64(0x07, self.timestamp);
    }

    fn decode(r: &mut Reader<'_>) -> Result<Self, CodecError> {
        Ok(Self {
            aadhaar: r.field(0x01)?.nested()?,
            submitted_demographics: r.opt_field(0x02)?.map(|f| f.nested()).transpose()?,
            submitted_biometrics: r.opt_field(0x03)?.map(|f| f.nested()).transpose()?,
            otp: r
                .opt_field(0x04)?
                .map(|f| Otp::parse(f.str()?).map_err(|e| f.invalid(e.to_string())))
                .transpose()?,
            liveness_attested: r.field(0x05)?.bool()?,
            nonce: Nonce(r.field(0x06)?.array()?),
            timestamp: r.field(0x07)?.u64()?,
        })
    }

    fn check(&self) -> Result<(), String> {
        if self.submitted_demographics.is_none() && self.submitted_biometrics.is_none() && self.otp.is_none() {
            return Err("PID block carries no demographics, biometrics or OTP".into());
        }
        if let Some(d) = &self.submitted_demographics {
            d.check()?;
        }
        if let Some(b) = &self.submitted_biometrics {
            b.check()?;
        }
        Ok(())
    }
}

/// Verdict of an authentication. These are the only three outcomes, and the
/// strings are reproduced byte for byte.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum AuthStatus {
    Successful,
    Unsuccessful,
    InvalidNumber,
}

impl AuthStatus {
    pub const ALL: [AuthStatus; 3] = [
        AuthStatus::Successful,
        AuthStatus::Unsuccessful,
        AuthStatus::InvalidNumber,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            AuthStatus::Successful => "Authentication Successful",
            AuthStatus::Unsuccessful => "Authentication Unsuccessful",
            AuthStatus::InvalidNumber => "Invalid Aadhaar Number. Please try Again...",
        }
    }
}

impl fmt::Display for AuthStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for AuthStatus {
    type Err = DomainError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|st| st.as_str() == s)
            .ok_or_else(|| DomainError::Status(s.to_owned()))
    }
}

impl Canonical for AuthStatus {
    fn encode(&self, w: &mut Writer) {
        w.str(0x01, self.as_str());
    }

    fn decode(r: &mut Reader<'_>) -> Result<Self, CodecError> {
        let f = r.field(0x01)?;
        f.str()?.parse().map_err(|e: DomainError| f.invalid(e.to_string()))
    }
}

/// Signed verdict returned to the service provider.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AuthResponse {
    pub status: AuthStatus,
    pub transaction_id: TransactionId,
    pub responder: NodeId,
    pub signature: Signature,
}

impl AuthResponse {
    /// Bytes covered by the signature: the canonical encoding of status,
    /// transaction id and responder.
    pub fn signed_bytes(status: AuthStatus, transaction_id: TransactionId, responder: NodeId) -> Vec<u8> {
        let mut w = Writer::new();
        w.nested(0x01, &status)
            .bytes(0x02, &transaction_id.0)
            .str(0x03, &responder.to_string());
        w.finish()
    }

    pub fn body_bytes(&self) -> Vec<u8> {
        Self::signed_bytes(self.status, self.transaction_id, self.responder)
    }
}

impl Canonical for AuthResponse {
    fn encode(&self, w: &mut Writer) {
        w.nested(0x01, &self.status)
            .bytes(0x02, &self.transaction_id.0)
            .str(0x03, &self.responder.to_string())
            .nested(0x04, &self.signature);
    }

    fn decode(r: &mut Reader<'_>) -> Result<Self, CodecError> {
        Ok(Self {
            status: r.field(0x01)?.nested()?,
            transaction_id: TransactionId(r.field(0x02)?.array()?),
            responder: {
                let f = r.field(0x03)?;
                f.str()?.parse().map_err(|e: DomainError| f.invalid(e.to_string()))?
            },
            signature: r.field(0x04)?.nested()?,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codec::{canonical_parse, canonical_serialize};

    #[test]
    fn dates_parse_strictly() {
        assert!(parse_iso_date("1990-04-02").is_ok());
        for bad in ["1990-4-02", "1990-\t4-02", " 1990-04-02", "1990-04-31", "90-04-02"] {
            assert!(parse_iso_date(bad).is_err(), "{bad:?}");
        }
    }

    fn demo(address: &str) -> DemographicData {
        DemographicData {
            name: "Asha Patel".into(),
            address: address.into(),
            date_of_birth: NaiveDate::from_ymd_opt(1990, 4, 2).unwrap(),
            phone: "9876543210".into(),
            email: "asha@example.in".into(),
        }
    }

    #[test]
    fn status_strings_are_exact() {
        assert_eq!(AuthStatus::Successful.as_str(), "Authentication Successful");
        assert_eq!(AuthStatus::Unsuccessful.as_str(), "Authentication Unsuccessful");
        assert_eq!(
            AuthStatus::InvalidNumber.as_str(),
            "Invalid Aadhaar Number. Please try Again..."
        );
    }

    #[test]
    fn status_encoding_vector() {
        let bytes = canonical_serialize(&AuthStatus::Successful).unwrap();
        // The string is 25 bytes long.
        let mut expected = vec![0x01, 0x00, 0x00, 0x00, 0x19];
        expected.extend_from_slice(b"Authentication Successful");
        assert_eq!(bytes, expected);
    }

    #[test]
    fn single_zone_and_determinism() {
        assert_eq!(derive_home_zone(&demo("anything"), 1).unwrap(), ZoneId(0));
        let a = derive_home_zone(&demo("12 MG Road, Surat"), 4).unwrap();
        let b = derive_home_zone(&demo("12 MG Road, Surat"), 4).unwrap();
        assert_eq!(a, b);
        assert_eq!(derive_home_zone(&demo("x"), 0), Err(DomainError::NoZones));
    }

    #[test]
    fn pinned_gandhinagar_zone() {
        // SHA-256 prefix of the address mod 4, computed by the standalone generator.
        assert_eq!(zone_for_address("A-1, Gandhinagar", 4).unwrap(), ZoneId(1));
    }

    #[test]
    fn zone_mass_is_roughly_balanced() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let mut counts = [0usize; 4];
        for _ in 0..10_000 {
            let addr = format!(
                "{} Street {}, Ward {}",
                rng.gen_range(1..5000),
                rng.gen::<u32>(),
                rng.gen_range(1..90)
            );
            counts[zone_for_address(&addr, 4).unwrap().0 as usize] += 1;
        }
        for c in counts {
            assert!((1500..=3500).contains(&c), "{counts:?}");
        }
    }

    #[test]
    fn node_ids_round_trip_through_text() {
        for id in [
            NodeId::Driver,
            NodeId::Cidr,
            NodeId::Asa,
            NodeId::Zone(3),
            NodeId::Portal(0),
            NodeId::Sp(12),
            NodeId::User(4041),
        ] {
            assert_eq!(id.to_string().parse::<NodeId>().unwrap(), id);
        }
        assert!("zone-".parse::<NodeId>().is_err());
        assert!("zone-+1".parse::<NodeId>().is_err());
        assert!("router".parse::<NodeId>().is_err());
    }

    #[test]
    fn empty_pid_is_rejected() {
        let pid = PidBlock {
            aadhaar: AadhaarNumber::from_body(1).unwrap(),
            submitted_demographics: None,
            submitted_biometrics: None,
            otp: None,
            liveness_attested: true,
            nonce: Nonce([1; 16]),
            timestamp: 0,
        };
        assert!(matches!(canonical_serialize(&pid), Err(CodecError::Invariant(_))));
    }

    #[test]
    fn biometric_counts_are_enforced() {
        let bio = BiometricData {
            fingerprint_templates: vec![vec![1]; 9],
            iris_templates: vec![vec![2]; 2],
            photo_digest: [0; 32],
        };
        assert!(canonical_serialize(&bio).is_err());
        let mut w = Writer::new();
        bio.encode(&mut w);
        assert!(canonical_parse::<BiometricData>(&w.finish()).is_err());
    }

    #[test]
    fn future_birth_date_fails_validation() {
        let today = NaiveDate::from_ymd_opt(2025, 1, 1).unwrap();
        let mut d = demo("x");
        assert!(d.validate_as_of(today).is_ok());
        d.date_of_birth = NaiveDate::from_ymd_opt(2030, 1, 1).unwrap();
        assert!(d.validate_as_of(today).is_err());
    }
}
