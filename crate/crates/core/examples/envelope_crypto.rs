//! Seals a PID block for a zonal office, signs it at the portal, countersigns
//! at the relay, and shows what a single flipped bit does.
//!
//! cargo run --example envelope_crypto

use zonalsim::codec::{canonical_parse, canonical_serialize};
use zonalsim::crypto::{SecureEnvelope, CIPHERTEXT_OVERHEAD};
use zonalsim::domain::{NodeId, ZoneId};
use zonalsim::fixture::Fixture;

fn main() {
    let mut f = Fixture::new(2, 300_000, 42);
    let zone = ZoneId(1);
    let resident = f.enroll_in(zone, true);
    let pid = f.genuine_pid(&resident, 1_000);
    let plain = canonical_serialize(&pid).unwrap();

    let envelope = f.relay(zone, &pid);
    println!("transaction {}", envelope.transaction_id.to_hex());
    println!(
        "plaintext {} bytes, ciphertext {} bytes (overhead {CIPHERTEXT_OVERHEAD})",
        plain.len(),
        envelope.ciphertext.len()
    );
    for s in &envelope.signatures {
        println!("  signed by {:<8} {}", s.signer_key_id, &hex::encode(&s.bytes)[..16]);
    }
    let chain = [NodeId::Portal(zone.0), NodeId::Asa];
    println!(
        "chain verifies: {}",
        envelope.verify_chain(f.scheme.as_ref(), &f.keys, &chain)
    );

    let office = &f.pairs[&NodeId::Zone(zone.0)];
    let opened = f.scheme.decrypt(office, &envelope.ciphertext).unwrap();
    println!("zone {} decrypts: {}", zone.0, opened == plain);
    let other = &f.pairs[&NodeId::Zone(0)];
    println!(
        "zone 0 decrypts: {}",
        f.scheme.decrypt(other, &envelope.ciphertext).is_ok()
    );

    let mut wire = canonical_serialize(&envelope).unwrap();
    let bit = wire.len() * 4;
    wire[bit / 8] ^= 1 << (bit % 8);
    match canonical_parse::<SecureEnvelope>(&wire) {
        Err(e) => println!("flipped bit {bit}: parse error {e}"),
        Ok(t) => println!(
            "flipped bit {bit}: chain verifies {}",
            t.verify_chain(f.scheme.as_ref(), &f.keys, &chain)
        ),
    }
}
