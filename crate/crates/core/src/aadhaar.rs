//! Twelve-digit identity numbers with a Verhoeff check digit.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

// Dihedral group D5 multiplication table.
const D: [[u8; 10]; 10] = [
    [0, 1, 2, 3, 4, 5, 6, 7, 8, 9],
    [1, 2, 3, 4, 0, 6, 7, 8, 9, 5],
    [2, 3, 4, 0, 1, 7, 8, 9, 5, 6],
    [3, 4, 0, 1, 2, 8, 9, 5, 6, 7],
    [4, 0, 1, 2, 3, 9, 5, 6, 7, 8],
    [5, 9, 8, 7, 6, 0, 4, 3, 2, 1],
    [6, 5, 9, 8, 7, 1, 0, 4, 3, 2],
    [7, 6, 5, 9, 8, 2, 1, 0, 4, 3],
    [8, 7, 6, 5, 9, 3, 2, 1, 0, 4],
    [9, 8, 7, 6, 5, 4, 3, 2, 1, 0],
];

// Position-dependent permutation, row i = p^i.
const P: [[u8; 10]; 8] = [
    [0, 1, 2, 3, 4, 5, 6, 7, 8, 9],
    [1, 5, 7, 6, 2, 8, 3, 0, 9, 4],
    [5, 8, 0, 3, 7, 9, 6, 1, 4, 2],
    [8, 9, 1, 6, 0, 4, 3, 5, 2, 7],
    [9, 4, 5, 3, 1, 2, 6, 8, 7, 0],
    [4, 2, 8, 6, 5, 7, 3, 9, 0, 1],
    [2, 7, 9, 3, 8, 0, 6, 4, 1, 5],
    [7, 0, 4, 6, 9, 1, 3, 2, 5, 8],
];

const INV: [u8; 10] = [0, 4, 3, 2, 1, 5, 6, 7, 8, 9];

/// Number of digits in an identity number, check digit included.
pub const AADHAAR_LEN: usize = 12;

/// Computes the Verhoeff check digit for a string of decimal digits.
///
/// Returns `None` if `body` contains anything other than ASCII digits.
pub fn verhoeff_check_digit(body: &str) -> Option<u8> {
    let mut c = 0u8;
    for (i, ch) in body.bytes().rev().enumerate() {
        if !ch.is_ascii_digit() {
            return None;
        }
        c = D[c as usize][P[(i + 1) % 8][(ch - b'0') as usize] as usize];
    }
    Some(INV[c as usize])
}

/// True iff `digits` (check digit last) passes the Verhoeff check.
pub fn verhoeff_valid(digits: &str) -> bool {
    let mut c = 0u8;
    for (i, ch) in digits.bytes().rev().enumerate() {
        if !ch.is_ascii_digit() {
            return false;
        }
        c = D[c as usize][P[i % 8][(ch - b'0') as usize] as usize];
    }
    !digits.is_empty() && c == 0
}

/// True iff `candidate` is twelve ASCII digits ending in a valid Verhoeff check digit.
pub fn validate_aadhaar(candidate: &str) -> bool {
    candidate.len() == AADHAAR_LEN && candidate.bytes().all(|b| b.is_ascii_digit()) && verhoeff_valid(candidate)
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AadhaarError {
    #[error("identity number must be exactly 12 characters, got {0}")]
    Length(usize),
    #[error("identity number contains a non-digit character")]
    NonDigit,
    #[error("identity number check digit is invalid")]
    CheckDigit,
    #[error("identity number body {0} does not fit in 11 digits")]
    BodyOverflow(u64),
}

/// A validated identity number. The only global user key in the system.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct AadhaarNumber(String);

impl AadhaarNumber {
    pub fn parse(candidate: &str) -> Result<Self, AadhaarError> {
        if candidate.len() != AADHAAR_LEN {
            return Err(AadhaarError::Length(candidate.len()));
        }
        if !candidate.bytes().all(|b| b.is_ascii_digit()) {
            return Err(AadhaarError::NonDigit);
        }
        if !verhoeff_valid(candidate) {
            return Err(AadhaarError::CheckDigit);
        }
        Ok(Self(candidate.to_owned()))
    }

    /// Builds a number from an 11-digit numeric body by appending its check digit.
    pub fn from_body(body: u64) -> Result<Self, AadhaarError> {
        if body >= 100_000_000_000 {
            return Err(AadhaarError::BodyOverflow(body));
        }
        let mut digits = format!("{body:011}");
        let check = verhoeff_check_digit(&digits).expect("formatted body is all digits");
        digits.push((b'0' + check) as char);
        Ok(Self(digits))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl FromStr for AadhaarNumber {
    type Err = AadhaarError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::parse(s)
    }
}

impl fmt::Display for AadhaarNumber {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Debug for AadhaarNumber {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "AadhaarNumber({})", self.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Check digit computed from dihedral-group arithmetic and the cycle form of
    /// the Verhoeff permutation, without the lookup tables above.
    mod group_oracle {
        fn d5(j: u8, k: u8) -> u8 {
            match (j < 5, k < 5) {
                (true, true) => (j + k) % 5,
                (true, false) => 5 + (j + k) % 5,
                (false, true) => 5 + (j + 10 - k) % 5,
                (false, false) => (j + 10 - k) % 5,
            }
        }

        fn perm(mut x: u8, times: usize) -> u8 {
            const CYCLE: [u8; 8] = [0, 1, 5, 8, 9, 4, 2, 7];
            for _ in 0..times % 8 {
                x = match x {
                    3 => 6,
                    6 => 3,
                    _ => {
                        let at = CYCLE.iter().position(|&c| c == x).unwrap();
                        CYCLE[(at + 1) % 8]
                    }
                };
            }
            x
        }

        pub fn valid(s: &str) -> bool {
            s.bytes()
                .rev()
                .enumerate()
                .fold(0, |acc, (i, ch)| d5(acc, perm(ch - b'0', i)))
                == 0
        }

        pub fn check_digit(body: &str) -> u8 {
            (0..10u8).find(|d| valid(&format!("{body}{d}"))).unwrap()
        }
    }

    #[test]
    fn rejects_wrong_length_and_non_digits() {
        assert!(!validate_aadhaar("12345"));
        assert!(!validate_aadhaar("12345678901X"));
        assert!(!validate_aadhaar(""));
        assert_eq!(AadhaarNumber::parse("12345"), Err(AadhaarError::Length(5)));
        assert_eq!(AadhaarNumber::parse("12345678901X"), Err(AadhaarError::NonDigit));
    }

    #[test]
    fn pinned_nines_vector() {
        // Frozen from the group oracle (and the standalone generator): digit 9.
        assert_eq!(group_oracle::check_digit("99999999999"), 9);
        assert_eq!(verhoeff_check_digit("99999999999"), Some(9));
        assert!(validate_aadhaar("999999999999"));
        assert!(!validate_aadhaar("999999999998"));
    }

    #[test]
    fn known_textbook_vectors() {
        assert_eq!(verhoeff_check_digit("236"), Some(3));
        assert_eq!(verhoeff_check_digit("12345"), Some(1));
        assert!(verhoeff_valid("2363"));
    }

    #[test]
    fn agrees_with_group_oracle_on_ten_thousand_suffixes() {
        let prefix = "48213907";
        for suffix in 0..10_000u32 {
            let candidate = format!("{prefix}{suffix:04}");
            assert_eq!(
                validate_aadhaar(&candidate),
                group_oracle::valid(&candidate),
                "{candidate}"
            );
        }
    }

    #[test]
    fn from_body_appends_check_digit() {
        let n = AadhaarNumber::from_body(42).unwrap();
        assert_eq!(&n.as_str()[..11], "00000000042");
        assert_eq!(
            n.as_str().as_bytes()[11] - b'0',
            group_oracle::check_digit("00000000042")
        );
        assert!(AadhaarNumber::from_body(100_000_000_000).is_err());
    }

    #[test]
    fn single_digit_errors_are_detected() {
        let n = AadhaarNumber::from_body(73_019_284_551).unwrap();
        let digits: Vec<u8> = n.as_str().bytes().collect();
        for pos in 0..12 {
            for d in b'0'..=b'9' {
                if d == digits[pos] {
                    continue;
                }
                let mut m = digits.clone();
                m[pos] = d;
                assert!(!validate_aadhaar(std::str::from_utf8(&m).unwrap()));
            }
        }
    }
}
