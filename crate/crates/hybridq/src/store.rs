//! Content-addressed payload store.
//!
//! Objects are addressed by the plain SHA-256 of their bytes. Every `get`
//! rehashes what it read, so a corrupted backing store surfaces as
//! [`StoreError::IntegrityFailure`] instead of wrong bytes.

use std::collections::HashMap;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::sync::RwLock;

use hybridq_core::ContentId;
use thiserror::Error;

pub const MAX_PAYLOAD: usize = 64 * 1024 * 1024;

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("payload of {0} bytes exceeds the 64 MiB limit")]
    PayloadTooLarge(usize),
    #[error("object {0} not found")]
    NotFound(ContentId),
    #[error("object {0} failed its integrity check")]
    IntegrityFailure(ContentId),
    #[error("store io: {0}")]
    Io(#[from] io::Error),
}

pub trait ContentStore: Send + Sync {
    /// Stores `bytes` and returns their content id. Idempotent.
    fn put(&self, bytes: &[u8]) -> Result<ContentId, StoreError>;

    /// Returns the stored bytes, checked against `cid`.
    fn get(&self, cid: &ContentId) -> Result<Vec<u8>, StoreError>;

    fn contains(&self, cid: &ContentId) -> bool;

    /// Number of distinct objects.
    fn len(&self) -> usize;

    fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

fn check_size(bytes: &[u8]) -> Result<(), StoreError> {
    if bytes.len() > MAX_PAYLOAD {
        return Err(StoreError::PayloadTooLarge(bytes.len()));
    }
    Ok(())
}

fn checked(cid: &ContentId, bytes: Vec<u8>) -> Result<Vec<u8>, StoreError> {
    if ContentId::of(&bytes) != *cid {
        return Err(StoreError::IntegrityFailure(*cid));
    }
    Ok(bytes)
}

#[derive(Debug, Default)]
pub struct MemStore {
    objects: RwLock<HashMap<ContentId, Vec<u8>>>,
}

impl MemStore {
    pub fn new() -> Self {
        Self::default()
    }

    /// Overwrites an object's bytes without rehashing. Test hook for
    /// simulating a corrupted store.
    pub fn corrupt(&self, cid: &ContentId, bytes: Vec<u8>) {
        self.objects.write().expect("store lock").insert(*cid, bytes);
    }
}

impl ContentStore for MemStore {
    fn put(&self, bytes: &[u8]) -> Result<ContentId, StoreError> {
        check_size(bytes)?;
        let cid = ContentId::of(bytes);
        self.objects.write().expect("store lock").entry(cid).or_insert_with(|| bytes.to_vec());
        Ok(cid)
    }

    fn get(&self, cid: &ContentId) -> Result<Vec<u8>, StoreError> {
        let bytes = self.objects.read().expect("store lock").get(cid).cloned();
        checked(cid, bytes.ok_or(StoreError::NotFound(*cid))?)
    }

    fn contains(&self, cid: &ContentId) -> bool {
        self.objects.read().expect("store lock").contains_key(cid)
    }

    fn len(&self) -> usize {
        self.objects.read().expect("store lock").len()
    }
}

/// Objects under `root/objects/<first two hex>/<full hex>`.
#[derive(Debug)]
pub struct DirStore {
    root: PathBuf,
}

impl DirStore {
    pub fn open(root: impl Into<PathBuf>) -> Result<Self, StoreError> {
        let root = root.into();
        fs::create_dir_all(root.join("objects"))?;
        Ok(DirStore { root })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn object_path(&self, cid: &ContentId) -> PathBuf {
        let hex = cid.to_string();
        self.root.join("objects").join(&hex[..2]).join(hex)
    }
}

impl ContentStore for DirStore {
    fn put(&self, bytes: &[u8]) -> Result<ContentId, StoreError> {
        check_size(bytes)?;
        let cid = ContentId::of(bytes);
        let path = self.object_path(&cid);
        if path.exists() {
            return Ok(cid);
        }
        let dir = path.parent().expect("object path has a parent");
        fs::create_dir_all(dir)?;
        // Write then rename so concurrent readers never see a partial file
        // and racing writers of the same content both succeed.
        let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
        tmp.write_all(bytes)?;
        tmp.as_file().sync_all()?;
        tmp.persist(&path).map_err(|e| e.error)?;
        Ok(cid)
    }

    fn get(&self, cid: &ContentId) -> Result<Vec<u8>, StoreError> {
        match fs::read(self.object_path(cid)) {
            Ok(bytes) => checked(cid, bytes),
            Err(e) if e.kind() == io::ErrorKind::NotFound => Err(StoreError::NotFound(*cid)),
            Err(e) => Err(e.into()),
        }
    }

    fn contains(&self, cid: &ContentId) -> bool {
        self.object_path(cid).exists()
    }

    fn len(&self) -> usize {
        let Ok(dirs) = fs::read_dir(self.root.join("objects")) else { return 0 };
        dirs.flatten()
            .filter_map(|d| fs::read_dir(d.path()).ok())
            .map(|files| {
                files
                    .flatten()
                    .filter(|f| f.file_name().to_str().is_some_and(|n| n.len() == 64))
                    .count()
            })
            .sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use hybridq_core::sha256;

    #[test]
    fn empty_payload_cid_is_sha256_of_nothing() {
        let s = MemStore::new();
        let cid = s.put(b"").unwrap();
        assert_eq!(cid.0, sha256(b"").0);
        assert_eq!(s.get(&cid).unwrap(), b"");
    }

    #[test]
    fn put_is_idempotent() {
        let dir = tempfile::tempdir().unwrap();
        let stores: [Box<dyn ContentStore>; 2] =
            [Box::new(MemStore::new()), Box::new(DirStore::open(dir.path()).unwrap())];
        for s in stores {
            let a = s.put(b"payload").unwrap();
            let b = s.put(b"payload").unwrap();
            assert_eq!(a, b);
            assert_eq!(s.len(), 1);
            assert!(matches!(s.get(&ContentId([0; 32])), Err(StoreError::NotFound(_))));
        }
    }

    #[test]
    fn corruption_is_detected() {
        let dir = tempfile::tempdir().unwrap();
        let s = DirStore::open(dir.path()).unwrap();
        let cid = s.put(&[7u8; 100]).unwrap();
        let path = s.object_path(&cid);
        let mut bytes = fs::read(&path).unwrap();
        bytes[13] ^= 0xff;
        fs::write(&path, bytes).unwrap();
        assert!(matches!(s.get(&cid), Err(StoreError::IntegrityFailure(c)) if c == cid));

        let m = MemStore::new();
        let cid = m.put(b"abc").unwrap();
        m.corrupt(&cid, b"abd".to_vec());
        assert!(matches!(m.get(&cid), Err(StoreError::IntegrityFailure(_))));
    }

    #[test]
    fn oversize_payload_rejected() {
        let s = MemStore::new();
        let big = vec![0u8; MAX_PAYLOAD + 1];
        assert!(matches!(s.put(&big), Err(StoreError::PayloadTooLarge(_))));
    }
}
