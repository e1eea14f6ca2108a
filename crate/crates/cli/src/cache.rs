//! On-disk cache for reachable sets.
//!
//! Reachable sets depend only on the action specification and the row, never
//! on the model, so one cache serves any number of classifiers. Entries live
//! under a directory named by the action-spec digest and are keyed by the row
//! digest, the feature, and the sampling mode. Writes go through a temporary
//! file in the same directory and a rename, so a crashed or concurrent run
//! never leaves a half-written entry behind.

use std::io::Write;
use std::path::{Path, PathBuf};

use recourse_core::reachable::ReachableSet;
use recourse_core::{Error, Result};
use sha2::{Digest, Sha256};

/// Hex SHA-256 of a file's bytes.
pub fn file_digest(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path)?;
    let mut hasher = Sha256::new();
    hasher.update(&bytes);
    Ok(hex(&hasher.finalize()))
}

/// Hex SHA-256 of a row's feature values. Values are rendered with the
/// shortest representation that round-trips, so equal values always digest
/// equally and nearly-equal values never collide.
pub fn row_digest(x: &[f64]) -> String {
    let mut hasher = Sha256::new();
    for (i, v) in x.iter().enumerate() {
        if i > 0 {
            hasher.update([0x1f]);
        }
        hasher.update(format!("{v:?}").as_bytes());
    }
    hex(&hasher.finalize())
}

/// Deterministic per-stream seed: mixes the base seed, the row digest, and a
/// stream tag so each (row, feature) pair and each randomized method draws
/// from its own reproducible stream.
pub fn derived_seed(base: u64, row_digest: &str, stream: &str) -> u64 {
    let mut hasher = Sha256::new();
    hasher.update(base.to_le_bytes());
    hasher.update(row_digest.as_bytes());
    hasher.update(stream.as_bytes());
    let digest = hasher.finalize();
    u64::from_le_bytes(digest[..8].try_into().expect("digest is long enough"))
}

fn hex(bytes: &[u8]) -> String {
    let mut out = String::with_capacity(bytes.len() * 2);
    for b in bytes {
        out.push_str(&format!("{b:02x}"));
    }
    out
}

/// Cache handle scoped to one action specification.
pub struct Cache {
    dir: PathBuf,
}

impl Cache {
    /// Open (creating if needed) the cache directory for an action spec.
    pub fn open(root: &Path, actions_digest: &str) -> Result<Cache> {
        let prefix = &actions_digest[..actions_digest.len().min(16)];
        let dir = root.join(format!("spec-{prefix}"));
        std::fs::create_dir_all(&dir)?;
        Ok(Cache { dir })
    }

    /// Entry file name for one reachable set.
    pub fn key(row_digest: &str, feature: usize, mode_tag: &str) -> String {
        format!("{row_digest}-f{feature}-{mode_tag}.tsv")
    }

    /// Load an entry if present and consistent with the query. A missing,
    /// unreadable, or stale entry is a miss: the caller recomputes and the
    /// store below overwrites it.
    pub fn load(&self, key: &str, x: &[f64], feature: usize) -> Option<ReachableSet> {
        let text = std::fs::read_to_string(self.dir.join(key)).ok()?;
        match ReachableSet::from_table(&text) {
            Ok(set) if set.feature == feature && set.anchor == x => Some(set),
            _ => None,
        }
    }

    pub fn store(&self, key: &str, set: &ReachableSet) -> Result<()> {
        let mut tmp = tempfile::NamedTempFile::new_in(&self.dir)?;
        tmp.write_all(set.to_table().as_bytes())?;
        tmp.persist(self.dir.join(key)).map_err(|e| Error::Io(e.error))?;
        Ok(())
    }
}
