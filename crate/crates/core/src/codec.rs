//! Canonical tag-length-value encoding.
//!
//! Every field is written as a one-byte tag, a four-byte big-endian length and
//! the raw value. Fields appear in ascending tag order; repeated fields (lists)
//! repeat their tag in list order. Strings are UTF-8, integers are fixed-width
//! big-endian, booleans are one byte (`0x00`/`0x01`), and nested types carry
//! their own canonical encoding as the value. These bytes are what gets signed,
//! stored and put on the wire.

use thiserror::Error;

/// Size of the tag plus length prefix.
pub const HEADER_LEN: usize = 5;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CodecError {
    #[error("input is empty")]
    Empty,
    #[error("truncated input at offset {offset}")]
    Truncated { offset: usize },
    #[error("unexpected tag 0x{found:02x} at offset {offset}, expected 0x{expected:02x}")]
    UnexpectedTag { offset: usize, found: u8, expected: u8 },
    #[error("unknown tag 0x{tag:02x} at offset {offset}")]
    UnknownTag { offset: usize, tag: u8 },
    #[error("missing field 0x{tag:02x} at offset {offset}")]
    Missing { offset: usize, tag: u8 },
    #[error("trailing bytes at offset {offset}")]
    Trailing { offset: usize },
    #[error("invalid value at offset {offset}: {reason}")]
    Invalid { offset: usize, reason: String },
    #[error("value violates its invariants: {0}")]
    Invariant(String),
}

impl CodecError {
    /// Byte offset the error refers to, when there is one.
    pub fn offset(&self) -> Option<usize> {
        match self {
            CodecError::Empty => Some(0),
            CodecError::Truncated { offset }
            | CodecError::UnexpectedTag { offset, .. }
            | CodecError::UnknownTag { offset, .. }
            | CodecError::Missing { offset, .. }
            | CodecError::Trailing { offset }
            | CodecError::Invalid { offset, .. } => Some(*offset),
            CodecError::Invariant(_) => None,
        }
    }
}

#[derive(Debug, Default)]
pub struct Writer {
    buf: Vec<u8>,
}

impl Writer {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn bytes(&mut self, tag: u8, value: &[u8]) -> &mut Self {
        let len = u32::try_from(value.len()).expect("field longer than 4 GiB");
        self.buf.push(tag);
        self.buf.extend_from_slice(&len.to_be_bytes());
        self.buf.extend_from_slice(value);
        self
    }

    pub fn str(&mut self, tag: u8, value: &str) -> &mut Self {
        self.bytes(tag, value.as_bytes())
    }

    pub fn u8(&mut self, tag: u8, value: u8) -> &mut Self {
        self.bytes(tag, &[value])
    }

    pub fn u16(&mut self, tag: u8, value: u16) -> &mut Self {
        self.bytes(tag, &value.to_be_bytes())
    }

    pub fn u64(&mut self, tag: u8, value: u64) -> &mut Self {
        self.bytes(tag, &value.to_be_bytes())
    }

    pub fn bool(&mut self, tag: u8, value: bool) -> &mut Self {
        self.u8(tag, value as u8)
    }

    pub fn nested<T: Canonical>(&mut self, tag: u8, value: &T) -> &mut Self {
        let mut inner = Writer::new();
        value.encode(&mut inner);
        self.bytes(tag, &inner.buf)
    }

    pub fn finish(self) -> Vec<u8> {
        self.buf
    }
}

/// Cursor over an encoded value. Offsets reported in errors are absolute
/// within the outermost buffer.
#[derive(Debug, Clone)]
pub struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
    base: usize,
}

/// One decoded field: its value and the absolute offset of the value bytes.
#[derive(Debug, Clone, Copy)]
pub struct Field<'a> {
    pub value: &'a [u8],
    pub offset: usize,
}

impl<'a> Field<'a> {
    pub fn invalid(&self, reason: impl Into<String>) -> CodecError {
        CodecError::Invalid {
            offset: self.offset,
            reason: reason.into(),
        }
    }

    pub fn str(&self) -> Result<&'a str, CodecError> {
        std::str::from_utf8(self.value).map_err(|_| self.invalid("not UTF-8"))
    }

    pub fn string(&self) -> Result<String, CodecError> {
        self.str().map(str::to_owned)
    }

    pub fn array<const N: usize>(&self) -> Result<[u8; N], CodecError> {
        self.value
            .try_into()
            .map_err(|_| self.invalid(format!("expected {N} bytes, got {}", self.value.len())))
    }

    pub fn u8(&self) -> Result<u8, CodecError> {
        self.array::<1>().map(|[b]| b)
    }

    pub fn u16(&self) -> Result<u16, CodecError> {
        self.array().map(u16::from_be_bytes)
    }

    pub fn u64(&self) -> Result<u64, CodecError> {
        self.array().map(u64::from_be_bytes)
    }

    pub fn bool(&self) -> Result<bool, CodecError> {
        match self.u8()? {
            0 => Ok(false),
            1 => Ok(true),
            _ => Err(self.invalid("boolean must be 0 or 1")),
        }
    }

    pub fn nested<T: Canonical>(&self) -> Result<T, CodecError> {
        let mut r = Reader::at(self.value, self.offset);
        let value = T::decode(&mut r)?;
        r.finish()?;
        value.check().map_err(|reason| self.invalid(reason))?;
        Ok(value)
    }
}

impl<'a> Reader<'a> {
    pub fn new(buf: &'a [u8]) -> Self {
        Self { buf, pos: 0, base: 0 }
    }

    /// Reader over `buf` whose offsets are reported relative to `base`.
    pub fn at(buf: &'a [u8], base: usize) -> Self {
        Self { buf, pos: 0, base }
    }

    /// Absolute offset of the next unread byte.
    pub fn position(&self) -> usize {
        self.base + self.pos
    }

    fn offset(&self) -> usize {
        self.position()
    }

    pub fn is_empty(&self) -> bool {
        self.pos >= self.buf.len()
    }

    /// Tag of the next field without consuming it.
    pub fn peek_tag(&self) -> Option<u8> {
        self.buf.get(self.pos).copied()
    }

    /// Consumes the next field whatever its tag.
    pub fn next_any(&mut self) -> Result<(u8, Field<'a>), CodecError> {
        let start = self.offset();
        let rest = &self.buf[self.pos..];
        if rest.len() < HEADER_LEN {
            return Err(CodecError::Truncated { offset: start });
        }
        let tag = rest[0];
        let len = u32::from_be_bytes([rest[1], rest[2], rest[3], rest[4]]) as usize;
        if rest.len() - HEADER_LEN < len {
            return Err(CodecError::Truncated { offset: start + 1 });
        }
        let value = &rest[HEADER_LEN..HEADER_LEN + len];
        self.pos += HEADER_LEN + len;
        Ok((
            tag,
            Field {
                value,
                offset: start + HEADER_LEN,
            },
        ))
    }

    /// Consumes a required field with the given tag.
    pub fn field(&mut self, tag: u8) -> Result<Field<'a>, CodecError> {
        match self.peek_tag() {
            None => Err(CodecError::Missing {
                offset: self.offset(),
                tag,
            }),
            Some(found) if found != tag => Err(CodecError::UnexpectedTag {
                offset: self.offset(),
                found,
                expected: tag,
            }),
            Some(_) => self.next_any().map(|(_, f)| f),
        }
    }

    /// Consumes the field if the next tag matches.
    pub fn opt_field(&mut self, tag: u8) -> Result<Option<Field<'a>>, CodecError> {
        if self.peek_tag() == Some(tag) {
            self.next_any().map(|(_, f)| Some(f))
        } else {
            Ok(None)
        }
    }

    /// Consumes every consecutive field carrying `tag`.
    pub fn repeated(&mut self, tag: u8) -> Result<Vec<Field<'a>>, CodecError> {
        let mut out = Vec::new();
        while let Some(f) = self.opt_field(tag)? {
            out.push(f);
        }
        Ok(out)
    }

    pub fn finish(&self) -> Result<(), CodecError> {
        match self.peek_tag() {
            None => Ok(()),
            Some(_) => Err(CodecError::Trailing { offset: self.offset() }),
        }
    }
}

/// Types with a canonical byte encoding.
pub trait Canonical: Sized {
    /// Appends this value's fields. Callers validate with [`Canonical::check`] first.
    fn encode(&self, w: &mut Writer);

    /// Reads this value's fields from `r`. Trailing-byte and invariant checks are
    /// done by the caller.
    fn decode(r: &mut Reader<'_>) -> Result<Self, CodecError>;

    /// Type invariants beyond what the decoder enforces structurally.
    fn check(&self) -> Result<(), String> {
        Ok(())
    }
}

/// Encodes a value after checking its invariants.
pub fn canonical_serialize<T: Canonical>(value: &T) -> Result<Vec<u8>, CodecError> {
    value.check().map_err(CodecError::Invariant)?;
    let mut w = Writer::new();
    value.encode(&mut w);
    Ok(w.finish())
}

/// Decodes a complete buffer as `T`, rejecting trailing bytes and invariant violations.
pub fn canonical_parse<T: Canonical>(bytes: &[u8]) -> Result<T, CodecError> {
    if bytes.is_empty() {
        return Err(CodecError::Empty);
    }
    let mut r = Reader::new(bytes);
    let value = T::decode(&mut r)?;
    r.finish()?;
    value
        .check()
        .map_err(|reason| CodecError::Invalid { offset: 0, reason })?;
    Ok(value)
}
