//! Canonical binary encoding.
//!
//! Every encodable item starts with a one-byte type tag. Integers are
//! big-endian and fixed width. Variable-size byte strings carry a 4-byte
//! big-endian length prefix and lists a 4-byte big-endian element count.
//!
//! ```text
//! TimeKey    01 | u64
//! Digest     02 | 32 bytes
//! ContentId  03 | 32 bytes
//! DataEntry  04 | u64 entry_id | u128 amount | u32 n | n × 20-byte address
//!               | u64 timestamp | opt image cid | opt video cid
//!            (opt = 00 for none, or a full ContentId item)
//! List       05 | u32 count | count × item
//! ```
//!
//! Verification objects, blocks and query ASTs build on these items; their
//! layouts are documented next to their `Encode` impls. Decoding is strict:
//! any byte string that is not the exact encoding of some value is rejected,
//! so a decoded value re-encodes to the same bytes.

use alloc::vec::Vec;

use thiserror::Error;

use crate::types::{Address, ContentId, DataEntry, Digest, TimeKey};

/// Type tags.
pub mod tag {
    pub const NONE: u8 = 0x00;
    pub const TIME_KEY: u8 = 0x01;
    pub const DIGEST: u8 = 0x02;
    pub const CONTENT_ID: u8 = 0x03;
    pub const DATA_ENTRY: u8 = 0x04;
    pub const LIST: u8 = 0x05;
    pub const RANGE_VO: u8 = 0x10;
    pub const PREFIX_VO: u8 = 0x11;
    pub const BLOCK: u8 = 0x12;
    pub const SUPERSESSION: u8 = 0x13;
    pub const QUERY: u8 = 0x20;
    pub const RESULT_SET: u8 = 0x21;
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CodecError {
    #[error("unexpected end of input at offset {0}")]
    UnexpectedEnd(usize),
    #[error("expected tag {expected:#04x}, found {found:#04x} at offset {offset}")]
    BadTag { expected: u8, found: u8, offset: usize },
    #[error("invalid {what} at offset {offset}")]
    Invalid { what: &'static str, offset: usize },
    #[error("{0} trailing bytes after value")]
    TrailingBytes(usize),
    #[error("nesting deeper than {0}")]
    TooDeep(usize),
}

/// Append-only byte sink.
#[derive(Default, Debug)]
pub struct Encoder {
    buf: Vec<u8>,
}

impl Encoder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn into_bytes(self) -> Vec<u8> {
        self.buf
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.buf
    }

    pub fn u8(&mut self, v: u8) -> &mut Self {
        self.buf.push(v);
        self
    }

    pub fn u16(&mut self, v: u16) -> &mut Self {
        self.buf.extend_from_slice(&v.to_be_bytes());
        self
    }

    pub fn u32(&mut self, v: u32) -> &mut Self {
        self.buf.extend_from_slice(&v.to_be_bytes());
        self
    }

    pub fn u64(&mut self, v: u64) -> &mut Self {
        self.buf.extend_from_slice(&v.to_be_bytes());
        self
    }

    pub fn u128(&mut self, v: u128) -> &mut Self {
        self.buf.extend_from_slice(&v.to_be_bytes());
        self
    }

    pub fn bool(&mut self, v: bool) -> &mut Self {
        self.u8(u8::from(v))
    }

    pub fn raw(&mut self, bytes: &[u8]) -> &mut Self {
        self.buf.extend_from_slice(bytes);
        self
    }

    /// Length-prefixed byte string.
    pub fn bytes(&mut self, bytes: &[u8]) -> &mut Self {
        self.u32(len_u32(bytes.len()));
        self.raw(bytes)
    }

    /// Element count of a list; the caller writes the elements.
    pub fn count(&mut self, n: usize) -> &mut Self {
        self.u32(len_u32(n))
    }

    /// List header: list tag plus element count.
    pub fn list_header(&mut self, n: usize) -> &mut Self {
        self.u8(tag::LIST).count(n)
    }

    pub fn item<T: Encode + ?Sized>(&mut self, v: &T) -> &mut Self {
        v.encode(self);
        self
    }
}

fn len_u32(n: usize) -> u32 {
    u32::try_from(n).expect("length exceeds u32::MAX")
}

/// Cursor over a canonical byte string.
#[derive(Debug)]
pub struct Decoder<'a> {
    input: &'a [u8],
    pos: usize,
}

impl<'a> Decoder<'a> {
    pub fn new(input: &'a [u8]) -> Self {
        Self { input, pos: 0 }
    }

    pub fn offset(&self) -> usize {
        self.pos
    }

    pub fn remaining(&self) -> usize {
        self.input.len() - self.pos
    }

    pub fn finish(&self) -> Result<(), CodecError> {
        match self.remaining() {
            0 => Ok(()),
            n => Err(CodecError::TrailingBytes(n)),
        }
    }

    pub fn invalid(&self, what: &'static str) -> CodecError {
        CodecError::Invalid { what, offset: self.pos }
    }

    pub fn take(&mut self, n: usize) -> Result<&'a [u8], CodecError> {
        if self.remaining() < n {
            return Err(CodecError::UnexpectedEnd(self.pos));
        }
        let s = &self.input[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    pub fn array<const N: usize>(&mut self) -> Result<[u8; N], CodecError> {
        let mut out = [0u8; N];
        out.copy_from_slice(self.take(N)?);
        Ok(out)
    }

    pub fn peek(&self) -> Result<u8, CodecError> {
        self.input
            .get(self.pos)
            .copied()
            .ok_or(CodecError::UnexpectedEnd(self.pos))
    }

    pub fn u8(&mut self) -> Result<u8, CodecError> {
        Ok(self.take(1)?[0])
    }

    pub fn u16(&mut self) -> Result<u16, CodecError> {
        Ok(u16::from_be_bytes(self.array()?))
    }

    pub fn u32(&mut self) -> Result<u32, CodecError> {
        Ok(u32::from_be_bytes(self.array()?))
    }

    pub fn u64(&mut self) -> Result<u64, CodecError> {
        Ok(u64::from_be_bytes(self.array()?))
    }

    pub fn u128(&mut self) -> Result<u128, CodecError> {
        Ok(u128::from_be_bytes(self.array()?))
    }

    pub fn bool(&mut self) -> Result<bool, CodecError> {
        match self.u8()? {
            0 => Ok(false),
            1 => Ok(true),
            _ => Err(CodecError::Invalid { what: "bool", offset: self.pos - 1 }),
        }
    }

    pub fn bytes(&mut self) -> Result<&'a [u8], CodecError> {
        let n = self.u32()? as usize;
        self.take(n)
    }

    /// Reads a list element count and checks it against the bytes left,
    /// given the minimum encoded size of one element.
    pub fn count(&mut self, min_elem_size: usize) -> Result<usize, CodecError> {
        let at = self.pos;
        let n = self.u32()? as usize;
        if n.saturating_mul(min_elem_size.max(1)) > self.remaining() {
            return Err(CodecError::UnexpectedEnd(at));
        }
        Ok(n)
    }

    pub fn expect_tag(&mut self, expected: u8) -> Result<(), CodecError> {
        let offset = self.pos;
        let found = self.u8()?;
        if found != expected {
            return Err(CodecError::BadTag { expected, found, offset });
        }
        Ok(())
    }

    pub fn list_header(&mut self, min_elem_size: usize) -> Result<usize, CodecError> {
        self.expect_tag(tag::LIST)?;
        self.count(min_elem_size)
    }

    pub fn item<T: Decode>(&mut self) -> Result<T, CodecError> {
        T::decode(self)
    }
}

pub trait Encode {
    fn encode(&self, out: &mut Encoder);

    fn to_canonical_bytes(&self) -> Vec<u8> {
        let mut e = Encoder::new();
        self.encode(&mut e);
        e.into_bytes()
    }
}

pub trait Decode: Sized {
    fn decode(input: &mut Decoder<'_>) -> Result<Self, CodecError>;

    /// Decodes a value that must span the whole input.
    fn from_canonical_bytes(bytes: &[u8]) -> Result<Self, CodecError> {
        let mut d = Decoder::new(bytes);
        let v = Self::decode(&mut d)?;
        d.finish()?;
        Ok(v)
    }
}

/// Canonical bytes of any encodable value.
pub fn canonical_encode<T: Encode + ?Sized>(item: &T) -> Vec<u8> {
    item.to_canonical_bytes()
}

impl Encode for TimeKey {
    fn encode(&self, out: &mut Encoder) {
        out.u8(tag::TIME_KEY).u64(self.0);
    }
}

impl Decode for TimeKey {
    fn decode(d: &mut Decoder<'_>) -> Result<Self, CodecError> {
        d.expect_tag(tag::TIME_KEY)?;
        Ok(TimeKey(d.u64()?))
    }
}

impl Encode for Digest {
    fn encode(&self, out: &mut Encoder) {
        out.u8(tag::DIGEST).raw(&self.0);
    }
}

impl Decode for Digest {
    fn decode(d: &mut Decoder<'_>) -> Result<Self, CodecError> {
        d.expect_tag(tag::DIGEST)?;
        Ok(Digest(d.array()?))
    }
}

impl Encode for ContentId {
    fn encode(&self, out: &mut Encoder) {
        out.u8(tag::CONTENT_ID).raw(&self.0);
    }
}

impl Decode for ContentId {
    fn decode(d: &mut Decoder<'_>) -> Result<Self, CodecError> {
        d.expect_tag(tag::CONTENT_ID)?;
        Ok(ContentId(d.array()?))
    }
}

fn encode_opt_cid(out: &mut Encoder, cid: &Option<ContentId>) {
    match cid {
        None => {
            out.u8(tag::NONE);
        }
        Some(c) => {
            out.item(c);
        }
    }
}

fn decode_opt_cid(d: &mut Decoder<'_>) -> Result<Option<ContentId>, CodecError> {
    if d.peek()? == tag::NONE {
        d.u8()?;
        Ok(None)
    } else {
        d.item().map(Some)
    }
}

impl Encode for DataEntry {
    fn encode(&self, out: &mut Encoder) {
        out.u8(tag::DATA_ENTRY).u64(self.entry_id).u128(self.amount);
        out.count(self.addresses.len());
        for a in &self.addresses {
            out.raw(&a.0);
        }
        out.u64(self.timestamp);
        encode_opt_cid(out, &self.image_cid);
        encode_opt_cid(out, &self.video_cid);
    }
}

impl Decode for DataEntry {
    fn decode(d: &mut Decoder<'_>) -> Result<Self, CodecError> {
        d.expect_tag(tag::DATA_ENTRY)?;
        let entry_id = d.u64()?;
        let amount = d.u128()?;
        let n = d.count(20)?;
        let mut addresses = Vec::with_capacity(n);
        for _ in 0..n {
            addresses.push(Address(d.array()?));
        }
        let timestamp = d.u64()?;
        let image_cid = decode_opt_cid(d)?;
        let video_cid = decode_opt_cid(d)?;
        Ok(DataEntry { entry_id, amount, addresses, timestamp, image_cid, video_cid })
    }
}

impl<T: Encode> Encode for [T] {
    fn encode(&self, out: &mut Encoder) {
        out.list_header(self.len());
        for v in self {
            v.encode(out);
        }
    }
}

impl<T: Encode> Encode for Vec<T> {
    fn encode(&self, out: &mut Encoder) {
        self.as_slice().encode(out);
    }
}

impl<T: Decode> Decode for Vec<T> {
    fn decode(d: &mut Decoder<'_>) -> Result<Self, CodecError> {
        // Every item has at least a tag byte.
        let n = d.list_header(1)?;
        let mut v = Vec::with_capacity(n);
        for _ in 0..n {
            v.push(T::decode(d)?);
        }
        Ok(v)
    }
}

/// Encodes a list of bare `u64` ids (no per-element tag).
pub fn encode_id_list(out: &mut Encoder, ids: &[u64]) {
    out.list_header(ids.len());
    for id in ids {
        out.u64(*id);
    }
}

pub fn decode_id_list(d: &mut Decoder<'_>) -> Result<Vec<u64>, CodecError> {
    let n = d.list_header(8)?;
    (0..n).map(|_| d.u64()).collect()
}
