//! Signing, encryption and the signed envelope carried through the relay path.
//!
//! Protocol code talks to a [`CryptoScheme`]. The bundled [`ReferenceScheme`]
//! is deterministic and dependency-light:
//!
//! * `signing_key = SHA-256("zonalsim/sk/v1" || seed || key_id)`
//! * `verification_key = SHA-256("zonalsim/vk/v1" || signing_key)`
//! * signature = HMAC-SHA-256 keyed by the verification key
//! * ciphertext = `nonce || (plaintext XOR keystream) || tag`, where keystream
//!   block `i` is `SHA-256(enc_key || nonce || i as u64 BE)` and the tag is
//!   HMAC-SHA-256 over `nonce || body`, with `enc_key`/`mac_key` derived from
//!   the recipient's verification key.
//!
//! The reference construct is symmetric: anyone holding a verification key can
//! produce signatures under it. Inside the simulator verification keys are only
//! handed to registered parties, which is what the protocol checks rely on.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use hmac::{Hmac, Mac};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::codec::{Canonical, CodecError, Field, Reader, Writer};
use crate::domain::{DomainError, NodeId, Nonce, SessionId, TransactionId};

type HmacSha256 = Hmac<Sha256>;

/// Bytes added by [`ReferenceScheme::encrypt`]: 16-byte nonce plus 32-byte tag.
pub const CIPHERTEXT_OVERHEAD: usize = 16 + 32;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CryptoError {
    #[error("refusing to sign an empty message")]
    EmptyMessage,
    #[error("nonce {0} already used with key {1}")]
    NonceReuse(Nonce, String),
    #[error("ciphertext failed authentication")]
    Authentication,
}

#[derive(Clone, PartialEq, Eq)]
pub struct KeyPair {
    pub key_id: String,
    pub signing_key: [u8; 32],
    pub verification_key: [u8; 32],
}

impl fmt::Debug for KeyPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("KeyPair")
            .field("key_id", &self.key_id)
            .field("verification_key", &hex::encode(self.verification_key))
            .finish_non_exhaustive()
    }
}

impl KeyPair {
    pub fn public(&self) -> PublicKey {
        PublicKey {
            key_id: self.key_id.clone(),
            verification_key: self.verification_key,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PublicKey {
    pub key_id: String,
    pub verification_key: [u8; 32],
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Signature {
    pub signer_key_id: String,
    pub bytes: Vec<u8>,
}

impl Canonical for Signature {
    fn encode(&self, w: &mut Writer) {
        w.str(0x01, &self.signer_key_id).bytes(0x02, &self.bytes);
    }

    fn decode(r: &mut Reader<'_>) -> Result<Self, CodecError> {
        Ok(Self {
            signer_key_id: r.field(0x01)?.string()?,
            bytes: r.field(0x02)?.value.to_vec(),
        })
    }
}

/// Capability interface the protocol nodes are written against.
pub trait CryptoScheme: Send + Sync {
    fn generate_keypair(&self, seed: &[u8; 32], key_id: &str) -> KeyPair;
    fn sign(&self, key: &KeyPair, message: &[u8]) -> Result<Signature, CryptoError>;
    fn verify(&self, verification_key: &[u8; 32], message: &[u8], sig: &Signature) -> bool;
    fn encrypt(&self, recipient: &PublicKey, plaintext: &[u8], nonce: &Nonce) -> Vec<u8>;
    fn decrypt(&self, recipient: &KeyPair, ciphertext: &[u8]) -> Result<Vec<u8>, CryptoError>;
}

#[derive(Debug, Clone, Copy, Default)]
pub struct ReferenceScheme;

fn sha256(parts: &[&[u8]]) -> [u8; 32] {
    let mut h = Sha256::new();
    for p in parts {
        h.update(p);
    }
    h.finalize().into()
}

fn mac(key: &[u8; 32]) -> HmacSha256 {
    HmacSha256::new_from_slice(key).expect("HMAC accepts any key length")
}

impl ReferenceScheme {
    fn stream_keys(vk: &[u8; 32]) -> ([u8; 32], [u8; 32]) {
        (sha256(&[b"zonalsim/enc/v1", vk]), sha256(&[b"zonalsim/mac/v1", vk]))
    }

    fn apply_keystream(enc_key: &[u8; 32], nonce: &[u8], data: &mut [u8]) {
        for (i, chunk) in data.chunks_mut(32).enumerate() {
            let block = sha256(&[enc_key, nonce, &(i as u64).to_be_bytes()]);
            for (b, k) in chunk.iter_mut().zip(block) {
                *b ^= k;
            }
        }
    }
}

impl CryptoScheme for ReferenceScheme {
    fn generate_keypair(&self, seed: &[u8; 32], key_id: &str) -> KeyPair {
        let signing_key = sha256(&[b"zonalsim/sk/v1", seed, key_id.as_bytes()]);
        let verification_key = sha256(&[b"zonalsim/vk/v1", &signing_key]);
        KeyPair {
            key_id: key_id.to_owned(),
            signing_key,
            verification_key,
        }
    }

    fn sign(&self, key: &KeyPair, message: &[u8]) -> Result<Signature, CryptoError> {
        if message.is_empty() {
            return Err(CryptoError::EmptyMessage);
        }
        let mut m = mac(&key.verification_key);
        m.update(message);
        Ok(Signature {
            signer_key_id: key.key_id.clone(),
            bytes: m.finalize().into_bytes().to_vec(),
        })
    }

    fn verify(&self, verification_key: &[u8; 32], message: &[u8], sig: &Signature) -> bool {
        let mut m = mac(verification_key);
        m.update(message);
        m.verify_slice(&sig.bytes).is_ok()
    }

    fn encrypt(&self, recipient: &PublicKey, plaintext: &[u8], nonce: &Nonce) -> Vec<u8> {
        let (enc_key, mac_key) = Self::stream_keys(&recipient.verification_key);
        let mut out = Vec::with_capacity(plaintext.len() + CIPHERTEXT_OVERHEAD);
        out.extend_from_slice(&nonce.0);
        out.extend_from_slice(plaintext);
        Self::apply_keystream(&enc_key, &nonce.0, &mut out[16..]);
        let mut m = mac(&mac_key);
        m.update(&out);
        out.extend_from_slice(&m.finalize().into_bytes());
        out
    }

    fn decrypt(&self, recipient: &KeyPair, ciphertext: &[u8]) -> Result<Vec<u8>, CryptoError> {
        if ciphertext.len() < CIPHERTEXT_OVERHEAD {
            return Err(CryptoError::Authentication);
        }
        let (enc_key, mac_key) = Self::stream_keys(&recipient.verification_key);
        let (sealed, tag) = ciphertext.split_at(ciphertext.len() - 32);
        let mut m = mac(&mac_key);
        m.update(sealed);
        m.verify_slice(tag).map_err(|_| CryptoError::Authentication)?;
        let (nonce, body) = sealed.split_at(16);
        let mut plain = body.to_vec();
        Self::apply_keystream(&enc_key, nonce, &mut plain);
        Ok(plain)
    }
}

pub fn generate_keypair(seed: &[u8; 32], key_id: &str) -> KeyPair {
    ReferenceScheme.generate_keypair(seed, key_id)
}

pub fn sign(key: &KeyPair, message: &[u8]) -> Result<Signature, CryptoError> {
    ReferenceScheme.sign(key, message)
}

pub fn verify(verification_key: &[u8; 32], message: &[u8], sig: &Signature) -> bool {
    ReferenceScheme.verify(verification_key, message, sig)
}

pub fn encrypt(recipient: &PublicKey, plaintext: &[u8], nonce: &Nonce) -> Vec<u8> {
    ReferenceScheme.encrypt(recipient, plaintext, nonce)
}

pub fn decrypt(recipient: &KeyPair, ciphertext: &[u8]) -> Result<Vec<u8>, CryptoError> {
    ReferenceScheme.decrypt(recipient, ciphertext)
}

/// Tracks which encryption nonces a sender has used per recipient key.
#[derive(Debug, Clone, Default)]
pub struct NonceLedger {
    used: BTreeSet<(String, Nonce)>,
}

impl NonceLedger {
    pub fn encrypt(
        &mut self,
        scheme: &dyn CryptoScheme,
        recipient: &PublicKey,
        plaintext: &[u8],
        nonce: Nonce,
    ) -> Result<Vec<u8>, CryptoError> {
        if !self.used.insert((recipient.key_id.clone(), nonce)) {
            return Err(CryptoError::NonceReuse(nonce, recipient.key_id.clone()));
        }
        Ok(scheme.encrypt(recipient, plaintext, &nonce))
    }
}

/// Public verification keys of every registered party, by key id.
#[derive(Debug, Clone, Default)]
pub struct KeyDirectory {
    keys: BTreeMap<String, [u8; 32]>,
}

impl KeyDirectory {
    pub fn insert(&mut self, key: PublicKey) {
        self.keys.insert(key.key_id, key.verification_key);
    }

    pub fn get(&self, key_id: &str) -> Option<PublicKey> {
        self.keys.get(key_id).map(|vk| PublicKey {
            key_id: key_id.to_owned(),
            verification_key: *vk,
        })
    }

    /// Verifies `sig` over `message`, requiring the signer to be `expected`.
    pub fn verify_from(&self, scheme: &dyn CryptoScheme, expected: NodeId, message: &[u8], sig: &Signature) -> bool {
        let id = expected.to_string();
        sig.signer_key_id == id && self.keys.get(&id).is_some_and(|vk| scheme.verify(vk, message, sig))
    }
}

/// Encrypted PID block plus routing header and the relay signature chain.
///
/// Tags: `01` transaction id, `02` session id, `03` service provider,
/// `04` origin, `05` ciphertext, `06` signature (repeated, relay order).
/// Signature `i` covers the encoding of the header fields followed by
/// signatures `0..i`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SecureEnvelope {
    pub transaction_id: TransactionId,
    pub session_id: SessionId,
    pub service_provider: NodeId,
    pub origin_portal: NodeId,
    pub ciphertext: Vec<u8>,
    pub signatures: Vec<Signature>,
}

impl SecureEnvelope {
    fn encode_header(&self, w: &mut Writer) {
        w.bytes(0x01, &self.transaction_id.0)
            .bytes(0x02, &self.session_id.0)
            .str(0x03, &self.service_provider.to_string())
            .str(0x04, &self.origin_portal.to_string())
            .bytes(0x05, &self.ciphertext);
    }

    /// Message that the `index`-th signature in the chain covers.
    pub fn chain_bytes(&self, index: usize) -> Vec<u8> {
        let mut w = Writer::new();
        self.encode_header(&mut w);
        for s in &self.signatures[..index.min(self.signatures.len())] {
            w.nested(0x06, s);
        }
        w.finish()
    }

    /// Appends a signature by `key` over the current chain.
    pub fn countersign(&mut self, scheme: &dyn CryptoScheme, key: &KeyPair) -> Result<(), CryptoError> {
        let msg = self.chain_bytes(self.signatures.len());
        self.signatures.push(scheme.sign(key, &msg)?);
        Ok(())
    }

    /// Checks that the chain is exactly `signers`, in order, and every link verifies.
    pub fn verify_chain(&self, scheme: &dyn CryptoScheme, keys: &KeyDirectory, signers: &[NodeId]) -> bool {
        self.signatures.len() == signers.len()
            && signers
                .iter()
                .enumerate()
                .all(|(i, signer)| keys.verify_from(scheme, *signer, &self.chain_bytes(i), &self.signatures[i]))
    }
}

fn node_field(f: &Field<'_>) -> Result<NodeId, CodecError> {
    f.str()?.parse().map_err(|e: DomainError| f.invalid(e.to_string()))
}

impl Canonical for SecureEnvelope {
    fn encode(&self, w: &mut Writer) {
        self.encode_header(w);
        for s in &self.signatures {
            w.nested(0x06, s);
        }
    }

    fn decode(r: &mut Reader<'_>) -> Result<Self, CodecError> {
        Ok(Self {
            transaction_id: TransactionId(r.field(0x01)?.array()?),
            session_id: SessionId(r.field(0x02)?.array()?),
            service_provider: node_field(&r.field(0x03)?)?,
            origin_portal: node_field(&r.field(0x04)?)?,
            ciphertext: r.field(0x05)?.value.to_vec(),
            signatures: r.repeated(0x06)?.iter().map(Field::nested).collect::<Result<_, _>>()?,
        })
    }

    fn check(&self) -> Result<(), String> {
        if self.signatures.is_empty() {
            return Err("envelope carries no signatures".into());
        }
        Ok(())
    }
}

/// One line of a signature test-vector file: `key_id seed message signature`,
/// every field hex encoded and separated by single spaces.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TestVector {
    pub key_id: String,
    pub seed: [u8; 32],
    pub message: Vec<u8>,
    pub signature: Vec<u8>,
}

#[derive(Debug, Error)]
#[error("test vector line {line}: {reason}")]
pub struct TestVectorError {
    pub line: usize,
    pub reason: String,
}

impl TestVector {
    pub fn generate(seed: [u8; 32], key_id: &str, message: &[u8]) -> Result<Self, CryptoError> {
        let key = generate_keypair(&seed, key_id);
        Ok(Self {
            key_id: key_id.to_owned(),
            seed,
            message: message.to_vec(),
            signature: sign(&key, message)?.bytes,
        })
    }

    pub fn to_line(&self) -> String {
        format!(
            "{} {} {} {}",
            hex::encode(self.key_id.as_bytes()),
            hex::encode(self.seed),
            hex::encode(&self.message),
            hex::encode(&self.signature)
        )
    }

    pub fn parse_file(text: &str) -> Result<Vec<Self>, TestVectorError> {
        text.lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty() && !l.starts_with('#'))
            .map(|(i, l)| {
                let err = |reason: &str| TestVectorError {
                    line: i + 1,
                    reason: reason.to_owned(),
                };
                let fields: Vec<&str> = l.split(' ').collect();
                if fields.len() != 4 {
                    return Err(err("expected 4 space-separated fields"));
                }
                let decode = |s: &str| hex::decode(s).map_err(|_| err("bad hex"));
                let key_id = String::from_utf8(decode(fields[0])?).map_err(|_| err("key id not UTF-8"))?;
                let seed = decode(fields[1])?
                    .try_into()
                    .map_err(|_| err("seed must be 32 bytes"))?;
                Ok(Self {
                    key_id,
                    seed,
                    message: decode(fields[2])?,
                    signature: decode(fields[3])?,
                })
            })
            .collect()
    }

    /// True iff the reference scheme reproduces this vector byte for byte.
    pub fn reproduces(&self) -> bool {
        let key = generate_keypair(&self.seed, &self.key_id);
        sign(&key, &self.message).is_ok_and(|s| s.bytes == self.signature)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const VECTORS: &str = include_str!("../testdata/reference_vectors.txt");

    #[test]
    fn pinned_zero_seed_keypair() {
        let k = generate_keypair(&[0; 32], "cidr");
        assert_eq!(
            hex::encode(k.signing_key),
            "d4f22015e614d435f0c34ae95c3ad86b9bf49bc3652f5c269957c525d75b6253"
        );
        assert_eq!(
            hex::encode(k.verification_key),
            "9d6f7e214fef8ff853344bee55a861a1d8fcba64293741a7db8c2ef8874ad048"
        );
    }

    #[test]
    fn pinned_vectors_reproduce() {
        let vectors = TestVector::parse_file(VECTORS).unwrap();
        assert_eq!(vectors.len(), 4);
        for v in &vectors {
            assert!(v.reproduces(), "{}", v.key_id);
            assert_eq!(TestVector::generate(v.seed, &v.key_id, &v.message).unwrap(), *v);
        }
        let rendered: Vec<String> = vectors.iter().map(TestVector::to_line).collect();
        assert_eq!(rendered.join("\n"), VECTORS.trim_end());
    }

    #[test]
    fn pinned_ciphertext() {
        let k = generate_keypair(&[0; 32], "cidr");
        let nonce = Nonce(core::array::from_fn(|i| i as u8));
        let ct = encrypt(&k.public(), b"pid", &nonce);
        assert_eq!(
            hex::encode(&ct),
            "000102030405060708090a0b0c0d0e0fdcf7f6fd7950d4312a433cb8e8dbcfe6\
             ac9da4a6c001a880ad8455ad50f2723062ea00"
        );
        assert_eq!(ct.len(), 3 + CIPHERTEXT_OVERHEAD);
        assert_eq!(decrypt(&k, &ct).unwrap(), b"pid");
    }

    #[test]
    fn keypairs_are_deterministic_and_seed_sensitive() {
        let a = generate_keypair(&[3; 32], "zone-1");
        assert_eq!(a, generate_keypair(&[3; 32], "zone-1"));
        let mut seed = [3u8; 32];
        seed[31] ^= 1;
        assert_ne!(a.verification_key, generate_keypair(&seed, "zone-1").verification_key);
        assert_ne!(
            a.verification_key,
            generate_keypair(&[3; 32], "zone-2").verification_key
        );
    }

    #[test]
    fn sign_and_verify_contract() {
        let k = generate_keypair(&[9; 32], "asa");
        let other = generate_keypair(&[8; 32], "asa");
        assert_eq!(sign(&k, b""), Err(CryptoError::EmptyMessage));
        let sig = sign(&k, b"hello").unwrap();
        assert!(verify(&k.verification_key, b"hello", &sig));
        assert!(!verify(&k.verification_key, b"hellp", &sig));
        assert!(!verify(&other.verification_key, b"hello", &sig));
    }

    #[test]
    fn nonce_reuse_and_tampering() {
        let k = generate_keypair(&[1; 32], "zone-0");
        let mut ledger = NonceLedger::default();
        let ct = ledger
            .encrypt(&ReferenceScheme, &k.public(), b"payload", Nonce([5; 16]))
            .unwrap();
        assert!(matches!(
            ledger.encrypt(&ReferenceScheme, &k.public(), b"other", Nonce([5; 16])),
            Err(CryptoError::NonceReuse(..))
        ));
        let ct2 = ledger
            .encrypt(&ReferenceScheme, &k.public(), b"payload", Nonce([6; 16]))
            .unwrap();
        assert_ne!(ct, ct2);
        let mut bad = ct.clone();
        bad[20] ^= 0x40;
        assert_eq!(decrypt(&k, &bad), Err(CryptoError::Authentication));
        let wrong = generate_keypair(&[2; 32], "zone-0");
        assert_eq!(decrypt(&wrong, &ct), Err(CryptoError::Authentication));
        assert_eq!(decrypt(&k, &ct[..10]), Err(CryptoError::Authentication));
    }

    #[test]
    fn envelope_chain_order_matters() {
        let portal = generate_keypair(&[1; 32], "portal-0");
        let asa = generate_keypair(&[2; 32], "asa");
        let mut dir = KeyDirectory::default();
        dir.insert(portal.public());
        dir.insert(asa.public());
        let mut env = SecureEnvelope {
            transaction_id: TransactionId([1; 16]),
            session_id: SessionId([2; 16]),
            service_provider: NodeId::Sp(0),
            origin_portal: NodeId::Portal(0),
            ciphertext: vec![7; 40],
            signatures: vec![],
        };
        env.countersign(&ReferenceScheme, &portal).unwrap();
        env.countersign(&ReferenceScheme, &asa).unwrap();
        let path = [NodeId::Portal(0), NodeId::Asa];
        assert!(env.verify_chain(&ReferenceScheme, &dir, &path));
        assert!(!env.verify_chain(&ReferenceScheme, &dir, &[NodeId::Asa, NodeId::Portal(0)]));
        assert!(!env.verify_chain(&ReferenceScheme, &dir, &path[..1]));
        env.signatures.swap(0, 1);
        assert!(!env.verify_chain(&ReferenceScheme, &dir, &path));
    }
}
