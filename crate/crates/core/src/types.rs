//! Domain values shared by every index and by the ledger.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use thiserror::Error;

/// Dense, insertion-ordered identifier of a ledger entry.
pub type EntryId = u64;

/// Largest timestamp an entry may carry (the value must fit in 63 bits).
pub const MAX_TIMESTAMP: u64 = (1 << 63) - 1;

fn write_hex(f: &mut fmt::Formatter<'_>, bytes: &[u8]) -> fmt::Result {
    for b in bytes {
        write!(f, "{b:02x}")?;
    }
    Ok(())
}

fn parse_hex<const N: usize>(s: &str) -> Option<[u8; N]> {
    let s = s.as_bytes();
    if s.len() != 2 * N {
        return None;
    }
    let nibble = |c: u8| match c {
        b'0'..=b'9' => Some(c - b'0'),
        b'a'..=b'f' => Some(c - b'a' + 10),
        b'A'..=b'F' => Some(c - b'A' + 10),
        _ => None,
    };
    let mut out = [0u8; N];
    for (i, pair) in s.chunks_exact(2).enumerate() {
        out[i] = (nibble(pair[0])? << 4) | nibble(pair[1])?;
    }
    Some(out)
}

/// A 32-byte SHA-256 output.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Digest(pub [u8; 32]);

impl Digest {
    pub const ZERO: Digest = Digest([0u8; 32]);

    pub fn as_bytes(&self) -> &[u8; 32] {
        &self.0
    }

    pub fn from_hex(s: &str) -> Option<Self> {
        parse_hex::<32>(s).map(Digest)
    }
}

impl fmt::Debug for Digest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("Digest(")?;
        write_hex(f, &self.0[..6])?;
        f.write_str("..)")
    }
}

impl fmt::Display for Digest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_hex(f, &self.0)
    }
}

/// Address of an off-chain object: the plain SHA-256 of its bytes.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ContentId(pub [u8; 32]);

impl ContentId {
    /// Content id of `bytes` (no domain tag).
    pub fn of(bytes: &[u8]) -> Self {
        ContentId(crate::digest::sha256(bytes).0)
    }

    pub fn from_hex(s: &str) -> Option<Self> {
        parse_hex::<32>(s).map(ContentId)
    }
}

impl fmt::Debug for ContentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("ContentId(")?;
        write_hex(f, &self.0[..6])?;
        f.write_str("..)")
    }
}

impl fmt::Display for ContentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_hex(f, &self.0)
    }
}

/// Order-preserving key derived from a timestamp.
///
/// The key function is the identity on unix seconds, so big-endian byte
/// order and numeric order coincide.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Default)]
pub struct TimeKey(pub u64);

impl TimeKey {
    pub const MIN: TimeKey = TimeKey(0);
    pub const MAX: TimeKey = TimeKey(u64::MAX);

    pub fn from_timestamp(ts: u64) -> Self {
        TimeKey(ts)
    }

    pub fn to_be_bytes(self) -> [u8; 8] {
        self.0.to_be_bytes()
    }
}

/// Counter bumped on every mutation of the indexed dataset.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Default)]
pub struct Epoch(pub u64);

impl Epoch {
    #[must_use]
    pub fn next(self) -> Epoch {
        Epoch(self.0 + 1)
    }
}

/// A 20-byte account address, written as `0x` plus 40 lowercase hex digits.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Address(pub [u8; 20]);

impl Address {
    /// The 40 hex digits without the `0x` prefix.
    pub fn hex_digits(&self) -> String {
        use core::fmt::Write;
        let mut s = String::with_capacity(40);
        for b in self.0 {
            let _ = write!(s, "{b:02x}");
        }
        s
    }
}

impl fmt::Debug for Address {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl fmt::Display for Address {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("0x")?;
        write_hex(f, &self.0)
    }
}

impl FromStr for Address {
    type Err = EntryError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || EntryError::BadAddress(String::from(s));
        let digits = s.strip_prefix("0x").ok_or_else(bad)?;
        if digits.bytes().any(|c| c.is_ascii_uppercase()) {
            return Err(bad());
        }
        parse_hex::<20>(digits).map(Address).ok_or_else(bad)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EntryError {
    #[error("address {0:?} is not 0x followed by 40 lowercase hex digits")]
    BadAddress(String),
    #[error("entry has no addresses")]
    NoAddresses,
    #[error("timestamp {0} does not fit in 63 bits")]
    TimestampOutOfRange(u64),
}

/// The on-chain record: amount, involved addresses, timestamp and the
/// content ids of an optional image and video held off-chain.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct DataEntry {
    pub entry_id: EntryId,
    /// Amount in the smallest currency unit.
    pub amount: u128,
    pub addresses: Vec<Address>,
    /// Unix seconds.
    pub timestamp: u64,
    pub image_cid: Option<ContentId>,
    pub video_cid: Option<ContentId>,
}

impl DataEntry {
    pub fn validate(&self) -> Result<(), EntryError> {
        if self.addresses.is_empty() {
            return Err(EntryError::NoAddresses);
        }
        if self.timestamp > MAX_TIMESTAMP {
            return Err(EntryError::TimestampOutOfRange(self.timestamp));
        }
        Ok(())
    }

    pub fn time_key(&self) -> TimeKey {
        TimeKey::from_timestamp(self.timestamp)
    }
}

/// Formats unix seconds as `YYYY-MM-DD-HH:MM:SS` (UTC).
///
/// Only digits, `-` and `:` are produced so the result is a valid prefix
/// index key. Years past 9999 simply get more digits.
pub fn timestamp_string(ts: u64) -> String {
    let days = ts / 86_400;
    let secs = ts % 86_400;
    let (year, month, day) = civil_from_days(days);
    alloc::format!(
        "{year:04}-{month:02}-{day:02}-{:02}:{:02}:{:02}",
        secs / 3600,
        (secs / 60) % 60,
        secs % 60
    )
}

/// Days since 1970-01-01 to a proleptic Gregorian (year, month, day).
fn civil_from_days(days: u64) -> (u64, u64, u64) {
    // Shift the epoch to 0000-03-01 so leap days fall at the end of the year.
    let z = days + 719_468;
    let era = z / 146_097;
    let doe = z - era * 146_097;
    let yoe = (doe - doe / 1460 + doe / 36_524 - doe / 146_096) / 365;
    let doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    let mp = (5 * doy + 2) / 153;
    let day = doy - (153 * mp + 2) / 5 + 1;
    let month = if mp < 10 { mp + 3 } else { mp - 9 };
    let year = yoe + era * 400 + u64::from(month <= 2);
    (year, month, day)
}
