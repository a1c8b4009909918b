//! Encodes a response and a PID block in the canonical TLV form and walks
//! the fields back out.
//!
//! cargo run --example canonical_encoding

use zonalsim::aadhaar::AadhaarNumber;
use zonalsim::codec::{canonical_parse, canonical_serialize, Reader};
use zonalsim::domain::{AuthStatus, DemographicSubset, Nonce, Otp, PidBlock};

fn dump(label: &str, bytes: &[u8]) {
    println!("{label} ({} bytes)", bytes.len());
    let mut r = Reader::new(bytes);
    while !r.is_empty() {
        let (tag, field) = r.next_any().expect("well-formed");
        let shown = match std::str::from_utf8(field.value) {
            Ok(s) if s.chars().all(|c| !c.is_control()) => format!("{s:?}"),
            _ => hex::encode(field.value),
        };
        println!("  tag {tag:02x} len {:>3}  {shown}", field.value.len());
    }
}

fn main() {
    let status = AuthStatus::Successful;
    println!(
        "status string: {:?} = {}",
        status.as_str(),
        hex::encode(status.as_str())
    );

    let aadhaar = AadhaarNumber::from_body(23_412_341_234).unwrap();
    let pid = PidBlock {
        aadhaar,
        submitted_demographics: Some(DemographicSubset {
            name: Some("Meera Iyer".into()),
            ..Default::default()
        }),
        submitted_biometrics: None,
        otp: Some(Otp::from_number(482_913)),
        liveness_attested: true,
        nonce: Nonce([7; 16]),
        timestamp: 1_735_689_600_000,
    };
    let bytes = canonical_serialize(&pid).unwrap();
    dump("PID block", &bytes);
    let back: PidBlock = canonical_parse(&bytes).unwrap();
    assert_eq!(back, pid);
    println!("round trip ok");

    let mut truncated = bytes.clone();
    truncated.pop();
    println!("truncated: {}", canonical_parse::<PidBlock>(&truncated).unwrap_err());
}
