use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use sha2::{Digest, Sha256};
use thiserror::Error;

/// SHA-256 digest of a canonical blob, rendered as lowercase hex.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ContentAddress([u8; 32]);

impl ContentAddress {
    /// Address of `bytes` after canonicalization.
    pub fn of(bytes: &[u8]) -> Self {
        Self::of_canonical(&canonical_encoding(bytes))
    }

    fn of_canonical(canonical: &[u8]) -> Self {
        let digest = Sha256::digest(canonical);
        let mut out = [0u8; 32];
        out.copy_from_slice(&digest);
        ContentAddress(out)
    }

    pub fn to_hex(&self) -> String {
        hex::encode(self.0)
    }

    /// First eight hex digits, for compact display.
    pub fn short(&self) -> String {
        self.to_hex()[..8].to_string()
    }
}

impl fmt::Display for ContentAddress {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_hex())
    }
}

impl fmt::Debug for ContentAddress {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ContentAddress({})", self.short())
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("invalid content address `{0}`: expected 64 lowercase hex digits")]
pub struct BadAddress(pub String);

impl FromStr for ContentAddress {
    type Err = BadAddress;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        let s = s.strip_prefix("0x").unwrap_or(s);
        if s.len() != 64 || s.bytes().any(|b| b.is_ascii_uppercase()) {
            return Err(BadAddress(s.to_string()));
        }
        let bytes = hex::decode(s).map_err(|_| BadAddress(s.to_string()))?;
        let mut out = [0u8; 32];
        out.copy_from_slice(&bytes);
        Ok(ContentAddress(out))
    }
}

/// Line endings normalized to LF. This is the byte string that is hashed and
/// stored.
pub fn canonical_encoding(bytes: &[u8]) -> Vec<u8> {
    let mut out = Vec::with_capacity(bytes.len());
    let mut i = 0;
    while i < bytes.len() {
        if bytes[i] == b'\r' && bytes.get(i + 1) == Some(&b'\n') {
            i += 1;
            continue;
        }
        out.push(bytes[i]);
        i += 1;
    }
    out
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum StoreError {
    #[error("content {0} not found")]
    NotFound(ContentAddress),
}

#[derive(Clone, Debug, PartialEq, Eq)]
struct Entry {
    bytes: Vec<u8>,
    hosted: bool,
}

/// Content-addressed blob store.
///
/// Availability is modeled by a per-address hosted flag: an unpinned blob is
/// still known by address but cannot be fetched.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ContentStore {
    blobs: BTreeMap<ContentAddress, Entry>,
}

impl ContentStore {
    pub fn new() -> Self {
        Self::default()
    }

    /// Stores the blob and returns its address. Idempotent; re-putting an
    /// unhosted blob makes it available again.
    pub fn put(&mut self, blob: &[u8]) -> ContentAddress {
        let canonical = canonical_encoding(blob);
        let addr = ContentAddress::of_canonical(&canonical);
        let entry = self.blobs.entry(addr).or_insert(Entry {
            bytes: canonical,
            hosted: true,
        });
        entry.hosted = true;
        addr
    }

    pub fn get(&self, addr: &ContentAddress) -> Result<&[u8], StoreError> {
        match self.blobs.get(addr) {
            Some(e) if e.hosted => Ok(&e.bytes),
            _ => Err(StoreError::NotFound(*addr)),
        }
    }

    pub fn is_available(&self, addr: &ContentAddress) -> bool {
        self.get(addr).is_ok()
    }

    /// Toggles availability of a known blob. Returns false if the address was
    /// never stored.
    pub fn set_hosted(&mut self, addr: &ContentAddress, hosted: bool) -> bool {
        match self.blobs.get_mut(addr) {
            Some(e) => {
                e.hosted = hosted;
                true
            }
            None => false,
        }
    }

    pub fn len(&self) -> usize {
        self.blobs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blobs.is_empty()
    }
}
