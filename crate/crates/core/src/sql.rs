//! Parser for the single-table SQL subset served by the middleware.
//!
//! ```text
//! INSERT INTO entries (col, ...) VALUES (value, ...)
//! UPDATE entries SET col = value, ... WHERE entry_id = N
//! DELETE FROM entries WHERE entry_id = N
//! SELECT * FROM entries [WHERE pred]
//!
//! col    amount | addresses | timestamp | imagecid | videocid | image | video
//! value  integer | 'string' | X'hex' | NULL
//! pred   entry_id = N | timestamp = N | timestamp BETWEEN A AND B
//!        | ts_str LIKE 'prefix%' | address LIKE 'prefix%'
//! ```
//!
//! `addresses` is one string of comma-separated addresses; cids are hex
//! strings; `image` and `video` are raw payload blobs. Keywords are
//! case-insensitive and a trailing `;` is allowed. A `SELECT` without a
//! predicate covers every timestamp.

use alloc::borrow::ToOwned;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use thiserror::Error;

use crate::codec::{tag, Encode, Encoder};
use crate::types::{Address, ContentId, EntryId, MAX_TIMESTAMP};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SqlError {
    #[error("syntax error at {position}: {message}")]
    SyntaxError { position: usize, message: String },
    #[error("unsupported feature at {position}: {feature}")]
    UnsupportedFeature { position: usize, feature: String },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum FuzzyField {
    TimestampString,
    Address,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SimplePredicate {
    EntryId(EntryId),
    TimestampEq(u64),
}

/// Field values of an inserted entry, before the ledger assigns its id.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct NewEntry {
    pub amount: u128,
    pub addresses: Vec<Address>,
    pub timestamp: u64,
    pub image_cid: Option<ContentId>,
    pub video_cid: Option<ContentId>,
    pub image: Option<Vec<u8>>,
    pub video: Option<Vec<u8>>,
}

/// Fields set by an UPDATE; `None` keeps the old value. For cids the
/// inner `None` clears the field.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct EntryChanges {
    pub amount: Option<u128>,
    pub addresses: Option<Vec<Address>>,
    pub timestamp: Option<u64>,
    pub image_cid: Option<Option<ContentId>>,
    pub video_cid: Option<Option<ContentId>>,
    pub image: Option<Vec<u8>>,
    pub video: Option<Vec<u8>>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum QueryAst {
    Insert(NewEntry),
    Delete { entry_id: EntryId },
    Update { entry_id: EntryId, changes: EntryChanges },
    SelectSimple(SimplePredicate),
    SelectTimeRange { start: u64, end: u64 },
    SelectFuzzy { field: FuzzyField, prefix: String },
}

impl QueryAst {
    pub fn is_select(&self) -> bool {
        matches!(self, QueryAst::SelectSimple(_) | QueryAst::SelectTimeRange { .. } | QueryAst::SelectFuzzy { .. })
    }
}

fn encode_opt_bytes(out: &mut Encoder, b: &Option<Vec<u8>>) {
    match b {
        None => out.u8(0),
        Some(b) => out.u8(1).bytes(b),
    };
}

fn encode_opt_cid(out: &mut Encoder, c: &Option<ContentId>) {
    match c {
        None => out.u8(tag::NONE),
        Some(c) => out.item(c),
    };
}

fn encode_addresses(out: &mut Encoder, a: &[Address]) {
    out.count(a.len());
    for x in a {
        out.raw(&x.0);
    }
}

/// `20 | u8 variant | fields`. Used to fingerprint queries for the cache.
impl Encode for QueryAst {
    fn encode(&self, out: &mut Encoder) {
        out.u8(tag::QUERY);
        match self {
            QueryAst::Insert(e) => {
                out.u8(0).u128(e.amount);
                encode_addresses(out, &e.addresses);
                out.u64(e.timestamp);
                encode_opt_cid(out, &e.image_cid);
                encode_opt_cid(out, &e.video_cid);
                encode_opt_bytes(out, &e.image);
                encode_opt_bytes(out, &e.video);
            }
            QueryAst::Delete { entry_id } => {
                out.u8(1).u64(*entry_id);
            }
            QueryAst::Update { entry_id, changes: c } => {
                out.u8(2).u64(*entry_id);
                match c.amount {
                    None => out.u8(0),
                    Some(a) => out.u8(1).u128(a),
                };
                match &c.addresses {
                    None => {
                        out.u8(0);
                    }
                    Some(a) => {
                        out.u8(1);
                        encode_addresses(out, a);
                    }
                }
                match c.timestamp {
                    None => out.u8(0),
                    Some(t) => out.u8(1).u64(t),
                };
                for cid in [&c.image_cid, &c.video_cid] {
                    match cid {
                        None => {
                            out.u8(0);
                        }
                        Some(v) => {
                            out.u8(1);
                            encode_opt_cid(out, v);
                        }
                    }
                }
                encode_opt_bytes(out, &c.image);
                encode_opt_bytes(out, &c.video);
            }
            QueryAst::SelectSimple(SimplePredicate::EntryId(id)) => {
                out.u8(3).u8(0).u64(*id);
            }
            QueryAst::SelectSimple(SimplePredicate::TimestampEq(t)) => {
                out.u8(3).u8(1).u64(*t);
            }
            QueryAst::SelectTimeRange { start, end } => {
                out.u8(4).u64(*start).u64(*end);
            }
            QueryAst::SelectFuzzy { field, prefix } => {
                let f = match field {
                    FuzzyField::TimestampString => 0,
                    FuzzyField::Address => 1,
                };
                out.u8(5).u8(f).bytes(prefix.as_bytes());
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
enum Tok {
    Word(String),
    Number(u128),
    Str(String),
    Blob(Vec<u8>),
    Sym(u8),
}

#[derive(Clone, Debug)]
struct Token {
    tok: Tok,
    pos: usize,
}

fn syntax(position: usize, message: impl Into<String>) -> SqlError {
    SqlError::SyntaxError { position, message: message.into() }
}

fn unsupported(position: usize, feature: impl Into<String>) -> SqlError {
    SqlError::UnsupportedFeature { position, feature: feature.into() }
}

fn hex_val(c: u8) -> Option<u8> {
    match c {
        b'0'..=b'9' => Some(c - b'0'),
        b'a'..=b'f' => Some(c - b'a' + 10),
        b'A'..=b'F' => Some(c - b'A' + 10),
        _ => None,
    }
}

fn lex(sql: &str) -> Result<Vec<Token>, SqlError> {
    let b = sql.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < b.len() {
        let c = b[i];
        let start = i;
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        if (c == b'x' || c == b'X') && b.get(i + 1) == Some(&b'\'') {
            i += 2;
            let body = i;
            while i < b.len() && b[i] != b'\'' {
                i += 1;
            }
            if i >= b.len() {
                return Err(syntax(start, "unterminated blob literal"));
            }
            let hex = &b[body..i];
            i += 1;
            if !hex.len().is_multiple_of(2) {
                return Err(syntax(start, "blob literal has odd length"));
            }
            let mut bytes = Vec::with_capacity(hex.len() / 2);
            for (k, pair) in hex.chunks(2).enumerate() {
                match (hex_val(pair[0]), hex_val(pair[1])) {
                    (Some(h), Some(l)) => bytes.push(h << 4 | l),
                    _ => return Err(syntax(body + 2 * k, "invalid hex digit in blob")),
                }
            }
            out.push(Token { tok: Tok::Blob(bytes), pos: start });
        } else if c.is_ascii_alphabetic() || c == b'_' {
            while i < b.len() && (b[i].is_ascii_alphanumeric() || b[i] == b'_') {
                i += 1;
            }
            out.push(Token { tok: Tok::Word(sql[start..i].to_ascii_lowercase()), pos: start });
        } else if c.is_ascii_digit() {
            while i < b.len() && b[i].is_ascii_digit() {
                i += 1;
            }
            let n = sql[start..i].parse().map_err(|_| syntax(start, "integer literal too large"))?;
            out.push(Token { tok: Tok::Number(n), pos: start });
        } else if c == b'\'' {
            i += 1;
            let mut s = String::new();
            loop {
                let Some(rest) = sql.get(i..) else { return Err(syntax(start, "unterminated string")) };
                let Some(q) = rest.find('\'') else { return Err(syntax(start, "unterminated string")) };
                s.push_str(&rest[..q]);
                i += q + 1;
                if b.get(i) == Some(&b'\'') {
                    s.push('\'');
                    i += 1;
                } else {
                    break;
                }
            }
            out.push(Token { tok: Tok::Str(s), pos: start });
        } else if b"(),=*;".contains(&c) {
            out.push(Token { tok: Tok::Sym(c), pos: start });
            i += 1;
        } else if b"<>!+-/.".contains(&c) {
            return Err(unsupported(start, "operators other than ="));
        } else {
            let ch = sql[start..].chars().next().unwrap_or('?');
            return Err(syntax(start, alloc::format!("unexpected character {ch:?}")));
        }
    }
    Ok(out)
}

/// Words that name SQL features outside the grammar.
const UNSUPPORTED_WORDS: &[&str] = &[
    "join", "inner", "left", "right", "outer", "cross", "count", "sum", "avg", "min", "max", "group",
    "order", "having", "limit", "offset", "union", "distinct", "or", "not", "in", "like_regex",
    "exists", "create", "drop", "alter", "as",
];

struct Parser {
    toks: Vec<Token>,
    at: usize,
    end: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Column {
    Amount,
    Addresses,
    Timestamp,
    ImageCid,
    VideoCid,
    Image,
    Video,
}

enum Value {
    Int(u128),
    Str(String),
    Blob(Vec<u8>),
    Null,
}

impl Parser {
    fn pos(&self) -> usize {
        self.toks.get(self.at).map_or(self.end, |t| t.pos)
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.at).map(|t| &t.tok)
    }

    fn next(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.at).map(|t| t.tok.clone());
        self.at += 1;
        t
    }

    fn check_unsupported(&self) -> Result<(), SqlError> {
        if let Some(Tok::Word(w)) = self.peek() {
            if UNSUPPORTED_WORDS.contains(&w.as_str()) {
                return Err(unsupported(self.pos(), w.to_ascii_uppercase()));
            }
        }
        Ok(())
    }

    fn keyword(&mut self, kw: &str) -> Result<(), SqlError> {
        self.check_unsupported()?;
        let pos = self.pos();
        match self.next() {
            Some(Tok::Word(w)) if w == kw => Ok(()),
            _ => Err(syntax(pos, alloc::format!("expected {}", kw.to_ascii_uppercase()))),
        }
    }

    fn eat_keyword(&mut self, kw: &str) -> bool {
        if matches!(self.peek(), Some(Tok::Word(w)) if w == kw) {
            self.at += 1;
            true
        } else {
            false
        }
    }

    fn sym(&mut self, s: u8) -> Result<(), SqlError> {
        self.check_unsupported()?;
        let pos = self.pos();
        match self.next() {
            Some(Tok::Sym(c)) if c == s => Ok(()),
            _ => Err(syntax(pos, alloc::format!("expected '{}'", s as char))),
        }
    }

    fn eat_sym(&mut self, s: u8) -> bool {
        if self.peek() == Some(&Tok::Sym(s)) {
            self.at += 1;
            true
        } else {
            false
        }
    }

    fn word(&mut self, what: &str) -> Result<(usize, String), SqlError> {
        self.check_unsupported()?;
        let pos = self.pos();
        match self.next() {
            Some(Tok::Word(w)) => Ok((pos, w)),
            _ => Err(syntax(pos, alloc::format!("expected {what}"))),
        }
    }

    fn number(&mut self) -> Result<(usize, u128), SqlError> {
        let pos = self.pos();
        match self.next() {
            Some(Tok::Number(n)) => Ok((pos, n)),
            _ => Err(syntax(pos, "expected integer")),
        }
    }

    fn u64_number(&mut self) -> Result<u64, SqlError> {
        let (pos, n) = self.number()?;
        u64::try_from(n).map_err(|_| syntax(pos, "integer out of range"))
    }

    fn timestamp(&mut self) -> Result<u64, SqlError> {
        let (pos, n) = self.number()?;
        u64::try_from(n)
            .ok()
            .filter(|t| *t <= MAX_TIMESTAMP)
            .ok_or_else(|| syntax(pos, "timestamp out of range"))
    }

    fn table(&mut self) -> Result<(), SqlError> {
        let (pos, t) = self.word("table name")?;
        if t != "entries" {
            return Err(unsupported(pos, alloc::format!("table {t}")));
        }
        self.check_unsupported()?;
        if matches!(self.peek(), Some(Tok::Sym(b','))) {
            return Err(unsupported(self.pos(), "JOIN"));
        }
        Ok(())
    }

    fn finish(&mut self) -> Result<(), SqlError> {
        self.eat_sym(b';');
        self.check_unsupported()?;
        if self.at < self.toks.len() {
            return Err(syntax(self.pos(), "unexpected trailing input"));
        }
        Ok(())
    }

    fn column(&mut self) -> Result<(usize, Column), SqlError> {
        let (pos, w) = self.word("column name")?;
        let c = match w.as_str() {
            "amount" => Column::Amount,
            "addresses" | "address" => Column::Addresses,
            "timestamp" => Column::Timestamp,
            "imagecid" | "image_cid" => Column::ImageCid,
            "videocid" | "video_cid" => Column::VideoCid,
            "image" => Column::Image,
            "video" => Column::Video,
            "entry_id" => return Err(syntax(pos, "entry_id is assigned by the ledger")),
            _ => return Err(syntax(pos, alloc::format!("unknown column {w}"))),
        };
        Ok((pos, c))
    }

    fn value(&mut self) -> Result<(usize, Value), SqlError> {
        let pos = self.pos();
        let v = match self.next() {
            Some(Tok::Number(n)) => Value::Int(n),
            Some(Tok::Str(s)) => Value::Str(s),
            Some(Tok::Blob(b)) => Value::Blob(b),
            Some(Tok::Word(w)) if w == "null" => Value::Null,
            _ => return Err(syntax(pos, "expected a value")),
        };
        Ok((pos, v))
    }

    fn statement(&mut self) -> Result<QueryAst, SqlError> {
        self.check_unsupported()?;
        let (pos, w) = self.word("statement")?;
        let ast = match w.as_str() {
            "select" => self.select()?,
            "insert" => self.insert()?,
            "update" => self.update()?,
            "delete" => self.delete()?,
            _ => return Err(syntax(pos, alloc::format!("unknown statement {w}"))),
        };
        self.finish()?;
        Ok(ast)
    }

    fn select(&mut self) -> Result<QueryAst, SqlError> {
        self.check_unsupported()?;
        if !self.eat_sym(b'*') {
            return Err(unsupported(self.pos(), "column projections (only SELECT * is supported)"));
        }
        self.keyword("from")?;
        self.table()?;
        if !self.eat_keyword("where") {
            return Ok(QueryAst::SelectTimeRange { start: 0, end: MAX_TIMESTAMP });
        }
        let (pos, field) = self.word("column name")?;
        let ast = match field.as_str() {
            "entry_id" => {
                self.sym(b'=')?;
                QueryAst::SelectSimple(SimplePredicate::EntryId(self.u64_number()?))
            }
            "timestamp" => {
                self.check_unsupported()?;
                if self.eat_keyword("between") {
                    let start = self.timestamp()?;
                    self.keyword("and")?;
                    let end = self.timestamp()?;
                    QueryAst::SelectTimeRange { start, end }
                } else {
                    self.sym(b'=')?;
                    QueryAst::SelectSimple(SimplePredicate::TimestampEq(self.timestamp()?))
                }
            }
            "ts_str" | "timestamp_string" => {
                let prefix = self.like_pattern()?;
                QueryAst::SelectFuzzy { field: FuzzyField::TimestampString, prefix }
            }
            "address" | "addresses" => {
                let p = self.like_pattern()?;
                let prefix = p.strip_prefix("0x").map_or(p.clone(), ToOwned::to_owned);
                QueryAst::SelectFuzzy { field: FuzzyField::Address, prefix }
            }
            _ => return Err(syntax(pos, alloc::format!("cannot filter on {field}"))),
        };
        if matches!(self.peek(), Some(Tok::Word(w)) if w == "and") {
            return Err(unsupported(self.pos(), "compound predicates"));
        }
        Ok(ast)
    }

    fn like_pattern(&mut self) -> Result<String, SqlError> {
        self.keyword("like")?;
        let pos = self.pos();
        let Some(Tok::Str(p)) = self.next() else { return Err(syntax(pos, "expected pattern string")) };
        let Some(prefix) = p.strip_suffix('%') else {
            return Err(unsupported(pos, "LIKE patterns other than 'prefix%'"));
        };
        if prefix.contains(['%', '_']) {
            return Err(unsupported(pos, "LIKE patterns other than 'prefix%'"));
        }
        Ok(prefix.to_string())
    }

    fn entry_id_predicate(&mut self) -> Result<EntryId, SqlError> {
        self.keyword("where")?;
        let (pos, w) = self.word("entry_id")?;
        if w != "entry_id" {
            return Err(unsupported(pos, "mutations are addressed by entry_id only"));
        }
        self.sym(b'=')?;
        self.u64_number()
    }

    fn insert(&mut self) -> Result<QueryAst, SqlError> {
        self.keyword("into")?;
        self.table()?;
        self.sym(b'(')?;
        let mut cols = Vec::new();
        loop {
            let c = self.column()?;
            if cols.iter().any(|(_, x)| *x == c.1) {
                return Err(syntax(c.0, "duplicate column"));
            }
            cols.push(c);
            if !self.eat_sym(b',') {
                break;
            }
        }
        self.sym(b')')?;
        self.keyword("values")?;
        self.sym(b'(')?;
        let mut vals = Vec::new();
        loop {
            vals.push(self.value()?);
            if !self.eat_sym(b',') {
                break;
            }
        }
        let close = self.pos();
        self.sym(b')')?;
        if vals.len() != cols.len() {
            return Err(syntax(close, "column and value counts differ"));
        }
        let mut e = NewEntry::default();
        let mut seen = [false; 3];
        for ((_, c), (vpos, v)) in cols.into_iter().zip(vals) {
            match c {
                Column::Amount => {
                    e.amount = int(vpos, v)?;
                    seen[0] = true;
                }
                Column::Addresses => {
                    e.addresses = addresses(vpos, v)?;
                    seen[1] = true;
                }
                Column::Timestamp => {
                    e.timestamp = ts(vpos, v)?;
                    seen[2] = true;
                }
                Column::ImageCid => e.image_cid = cid(vpos, v)?,
                Column::VideoCid => e.video_cid = cid(vpos, v)?,
                Column::Image => e.image = blob(vpos, v)?,
                Column::Video => e.video = blob(vpos, v)?,
            }
        }
        for (ok, name) in seen.iter().zip(["amount", "addresses", "timestamp"]) {
            if !ok {
                return Err(syntax(close, alloc::format!("missing column {name}")));
            }
        }
        Ok(QueryAst::Insert(e))
    }

    fn update(&mut self) -> Result<QueryAst, SqlError> {
        self.table()?;
        self.keyword("set")?;
        let mut ch = EntryChanges::default();
        let mut seen = Vec::new();
        loop {
            let (cpos, c) = self.column()?;
            if seen.contains(&c) {
                return Err(syntax(cpos, "duplicate column"));
            }
            seen.push(c);
            self.sym(b'=')?;
            let (vpos, v) = self.value()?;
            match c {
                Column::Amount => ch.amount = Some(int(vpos, v)?),
                Column::Addresses => ch.addresses = Some(addresses(vpos, v)?),
                Column::Timestamp => ch.timestamp = Some(ts(vpos, v)?),
                Column::ImageCid => ch.image_cid = Some(cid(vpos, v)?),
                Column::VideoCid => ch.video_cid = Some(cid(vpos, v)?),
                Column::Image => ch.image = blob(vpos, v)?,
                Column::Video => ch.video = blob(vpos, v)?,
            }
            if !self.eat_sym(b',') {
                break;
            }
        }
        let entry_id = self.entry_id_predicate()?;
        Ok(QueryAst::Update { entry_id, changes: ch })
    }

    fn delete(&mut self) -> Result<QueryAst, SqlError> {
        self.keyword("from")?;
        self.table()?;
        let entry_id = self.entry_id_predicate()?;
        Ok(QueryAst::Delete { entry_id })
    }
}

fn int(pos: usize, v: Value) -> Result<u128, SqlError> {
    match v {
        Value::Int(n) => Ok(n),
        _ => Err(syntax(pos, "expected integer")),
    }
}

fn ts(pos: usize, v: Value) -> Result<u64, SqlError> {
    let n = int(pos, v)?;
    u64::try_from(n)
        .ok()
        .filter(|t| *t <= MAX_TIMESTAMP)
        .ok_or_else(|| syntax(pos, "timestamp out of range"))
}

fn addresses(pos: usize, v: Value) -> Result<Vec<Address>, SqlError> {
    let Value::Str(s) = v else { return Err(syntax(pos, "expected address list string")) };
    let list: Result<Vec<Address>, _> = s.split(',').map(|a| a.trim().parse::<Address>()).collect();
    match list {
        Ok(l) if !l.is_empty() => Ok(l),
        _ => Err(syntax(pos, "addresses must be 0x-prefixed lowercase 40-hex strings")),
    }
}

fn cid(pos: usize, v: Value) -> Result<Option<ContentId>, SqlError> {
    match v {
        Value::Null => Ok(None),
        Value::Str(s) => ContentId::from_hex(&s).map(Some).ok_or_else(|| syntax(pos, "cid must be 64 hex characters")),
        _ => Err(syntax(pos, "expected cid string or NULL")),
    }
}

fn blob(pos: usize, v: Value) -> Result<Option<Vec<u8>>, SqlError> {
    match v {
        Value::Null => Ok(None),
        Value::Blob(b) => Ok(Some(b)),
        _ => Err(syntax(pos, "expected X'..' blob or NULL")),
    }
}

/// Parses one statement.
pub fn parse(sql: &str) -> Result<QueryAst, SqlError> {
    let toks = lex(sql)?;
    if toks.is_empty() {
        return Err(syntax(0, "empty query"));
    }
    Parser { toks, at: 0, end: sql.len() }.statement()
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use proptest::prelude::*;

    const A: &str = "0x00112233445566778899aabbccddeeff00112233";

    #[test]
    fn selects() {
        assert_eq!(
            parse("SELECT * FROM entries WHERE timestamp BETWEEN 100 AND 200").unwrap(),
            QueryAst::SelectTimeRange { start: 100, end: 200 }
        );
        assert_eq!(
            parse("SELECT * FROM entries WHERE ts_str LIKE '2023-01%'").unwrap(),
            QueryAst::SelectFuzzy { field: FuzzyField::TimestampString, prefix: "2023-01".into() }
        );
        assert_eq!(
            parse("select * from entries where address like '0xab%';").unwrap(),
            QueryAst::SelectFuzzy { field: FuzzyField::Address, prefix: "ab".into() }
        );
        assert_eq!(
            parse("SELECT * FROM entries WHERE entry_id = 42").unwrap(),
            QueryAst::SelectSimple(SimplePredicate::EntryId(42))
        );
        assert_eq!(
            parse("SELECT * FROM entries WHERE timestamp = 7").unwrap(),
            QueryAst::SelectSimple(SimplePredicate::TimestampEq(7))
        );
    }

    #[test]
    fn mutations() {
        let sql = alloc::format!(
            "INSERT INTO entries (amount, addresses, timestamp, imagecid, image) VALUES (5, '{A},{A}', 9, NULL, X'00ff')"
        );
        let QueryAst::Insert(e) = parse(&sql).unwrap() else { panic!() };
        assert_eq!(e.amount, 5);
        assert_eq!(e.addresses.len(), 2);
        assert_eq!(e.image, Some(vec![0, 255]));
        assert_eq!(e.image_cid, None);
        assert_eq!(parse("DELETE FROM entries WHERE entry_id = 3").unwrap(), QueryAst::Delete { entry_id: 3 });
        let QueryAst::Update { entry_id, changes } =
            parse("UPDATE entries SET amount = 1, videocid = NULL WHERE entry_id = 4").unwrap()
        else {
            panic!()
        };
        assert_eq!(entry_id, 4);
        assert_eq!(changes.amount, Some(1));
        assert_eq!(changes.video_cid, Some(None));
        assert_eq!(changes.timestamp, None);
    }

    #[test]
    fn unsupported_features() {
        for sql in [
            "SELECT COUNT(*) FROM entries",
            "SELECT * FROM entries JOIN other",
            "SELECT * FROM entries, other",
            "SELECT amount FROM entries",
            "SELECT * FROM entries WHERE timestamp > 5",
            "SELECT * FROM entries WHERE ts_str LIKE '%20'",
            "SELECT * FROM entries ORDER BY timestamp",
            "SELECT * FROM other",
        ] {
            assert!(matches!(parse(sql), Err(SqlError::UnsupportedFeature { .. })), "{sql}");
        }
    }

    #[test]
    fn syntax_errors_are_positioned() {
        assert_eq!(
            parse("SELECT * FROM entries WHERE entry_id = x"),
            Err(SqlError::SyntaxError { position: 39, message: "expected integer".into() })
        );
        assert!(matches!(parse("SELECT * FROM"), Err(SqlError::SyntaxError { position: 13, .. })));
        assert!(matches!(parse("INSERT INTO entries (amount) VALUES ('x"), Err(SqlError::SyntaxError { position: 37, .. })));
        assert!(matches!(parse(""), Err(SqlError::SyntaxError { position: 0, .. })));
        assert!(parse("INSERT INTO entries (amount) VALUES (1)").is_err());
    }

    #[test]
    fn ast_encoding_distinguishes_queries() {
        let a = parse("SELECT * FROM entries WHERE entry_id = 1").unwrap().to_canonical_bytes();
        let b = parse("SELECT * FROM entries WHERE timestamp = 1").unwrap().to_canonical_bytes();
        let c = parse("select * from ENTRIES where entry_id=1").unwrap().to_canonical_bytes();
        assert_ne!(a, b);
        assert_eq!(a, c);
        assert_eq!(a[0], tag::QUERY);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(10_000))]
        #[test]
        fn parser_is_total(bytes in proptest::collection::vec(any::<u8>(), 0..64)) {
            let s = String::from_utf8_lossy(&bytes);
            match parse(&s) {
                Ok(_) => {}
                Err(SqlError::SyntaxError { position, .. } | SqlError::UnsupportedFeature { position, .. }) => {
                    prop_assert!(position <= s.len());
                }
            }
        }

        #[test]
        fn parser_is_total_on_token_soup(words in proptest::collection::vec(
            prop::sample::select(vec!["SELECT", "*", "FROM", "entries", "WHERE", "entry_id", "=", "1",
                "timestamp", "BETWEEN", "AND", "LIKE", "'ab%'", "(", ")", ",", "INSERT", "INTO",
                "VALUES", "UPDATE", "SET", "DELETE", "NULL", "X'0f'", ";", "amount"]), 0..16)) {
            let s = words.join(" ");
            let _ = parse(&s);
        }
    }
}
