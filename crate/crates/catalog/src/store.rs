//! File-backed experience store.
//!
//! ```text
//! <root>/experiences/<story_id>/<version>/bundle.zip
//! <root>/experiences/<story_id>/latest        # decimal version number
//! ```
//!
//! Bundles and the marker are written to a temporary file, synced and
//! renamed into place, so readers only ever see complete files and the
//! marker never names a version that is not fully written.

use std::collections::HashMap;
use std::fs::{self, File};
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};

use narralive_core::bundle::{self, BundleManifest, Violation};
use narralive_core::is_valid_id;
use serde::{Deserialize, Serialize};

pub const BUNDLE_FILE: &str = "bundle.zip";
pub const LATEST_FILE: &str = "latest";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CatalogEntry {
    pub story_id: String,
    pub title: String,
    pub description: String,
    pub version: u64,
    /// Size of the bundle archive in bytes.
    pub bytes: u64,
    pub published_at: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VersionInfo {
    pub version: u64,
    pub content_hash: String,
}

#[derive(Debug, thiserror::Error)]
pub enum StoreError {
    #[error("`{story_id}` is already at version {latest}; version {attempted} is not newer")]
    VersionConflict {
        story_id: String,
        latest: u64,
        attempted: u64,
    },
    #[error("invalid bundle: {0}")]
    InvalidBundle(String),
    #[error("not found: {0}")]
    NotFound(String),
    #[error("store i/o: {0}")]
    Io(#[from] io::Error),
}

impl StoreError {
    fn invalid(violations: &[Violation]) -> Self {
        let parts: Vec<String> = violations
            .iter()
            .map(|v| format!("{} ({:?}: {})", v.path, v.problem, v.detail))
            .collect();
        StoreError::InvalidBundle(parts.join("; "))
    }
}

#[derive(Debug)]
pub struct Store {
    root: PathBuf,
    locks: Mutex<HashMap<String, Arc<Mutex<()>>>>,
    tmp_counter: AtomicU64,
}

fn not_found(what: impl Into<String>) -> StoreError {
    StoreError::NotFound(what.into())
}

fn sync_dir(dir: &Path) -> io::Result<()> {
    // directories cannot be opened for syncing on every platform
    match File::open(dir) {
        Ok(d) => d.sync_all().or(Ok(())),
        Err(_) => Ok(()),
    }
}

impl Store {
    /// Opens (creating if needed) a store rooted at `root`.
    pub fn open(root: impl Into<PathBuf>) -> Result<Store, StoreError> {
        let root = root.into();
        fs::create_dir_all(root.join("experiences"))?;
        Ok(Store {
            root,
            locks: Mutex::new(HashMap::new()),
            tmp_counter: AtomicU64::new(0),
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    fn story_dir(&self, story_id: &str) -> PathBuf {
        self.root.join("experiences").join(story_id)
    }

    pub fn bundle_path(&self, story_id: &str, version: u64) -> PathBuf {
        self.story_dir(story_id).join(version.to_string()).join(BUNDLE_FILE)
    }

    fn lock_for(&self, story_id: &str) -> Arc<Mutex<()>> {
        let mut map = self.locks.lock().unwrap_or_else(|e| e.into_inner());
        Arc::clone(map.entry(story_id.to_string()).or_default())
    }

    /// Writes `data` to `dest` through a synced temporary file in the same
    /// directory.
    fn write_atomic(&self, dest: &Path, data: &[u8]) -> io::Result<()> {
        let dir = dest.parent().expect("destination has a parent");
        let n = self.tmp_counter.fetch_add(1, Ordering::Relaxed);
        let name = dest.file_name().and_then(|f| f.to_str()).unwrap_or("file");
        let tmp = dir.join(format!(".{name}.tmp-{}-{n}", std::process::id()));
        let result = (|| {
            let mut f = File::create(&tmp)?;
            f.write_all(data)?;
            f.sync_all()?;
            drop(f);
            fs::rename(&tmp, dest)?;
            sync_dir(dir)
        })();
        if result.is_err() {
            let _ = fs::remove_file(&tmp);
        }
        result
    }

    /// Version named by the `latest` marker, if the story exists.
    pub fn latest_version(&self, story_id: &str) -> Result<Option<u64>, StoreError> {
        if !is_valid_id(story_id) {
            return Ok(None);
        }
        match fs::read_to_string(self.story_dir(story_id).join(LATEST_FILE)) {
            Ok(s) => s.trim().parse().map(Some).map_err(|_| {
                StoreError::Io(io::Error::new(
                    io::ErrorKind::InvalidData,
                    format!("bad marker for `{story_id}`"),
                ))
            }),
            Err(e) if e.kind() == io::ErrorKind::NotFound => Ok(None),
            Err(e) => Err(e.into()),
        }
    }

    /// Verifies and stores a bundle as the new latest version of its story.
    pub fn publish(&self, bytes: &[u8]) -> Result<CatalogEntry, StoreError> {
        let violations = bundle::verify(bytes);
        if !violations.is_empty() {
            return Err(StoreError::invalid(&violations));
        }
        let (manifest, _) = bundle::load(bytes).map_err(|e| StoreError::InvalidBundle(e.to_string()))?;
        if !is_valid_id(&manifest.story_id) {
            return Err(StoreError::InvalidBundle(format!(
                "story id `{}` is not valid",
                manifest.story_id
            )));
        }
        let id = manifest.story_id.clone();

        let lock = self.lock_for(&id);
        let _guard = lock.lock().unwrap_or_else(|e| e.into_inner());

        if let Some(latest) = self.latest_version(&id)? {
            if manifest.version <= latest {
                return Err(StoreError::VersionConflict {
                    story_id: id,
                    latest,
                    attempted: manifest.version,
                });
            }
        }
        let path = self.bundle_path(&id, manifest.version);
        fs::create_dir_all(path.parent().expect("bundle path has a parent"))?;
        self.write_atomic(&path, bytes)?;
        self.write_atomic(
            &self.story_dir(&id).join(LATEST_FILE),
            manifest.version.to_string().as_bytes(),
        )?;
        tracing::info!(story_id = %id, version = manifest.version, "published");
        Ok(entry(&manifest, bytes.len() as u64))
    }

    /// Bundle bytes of the named version, or of the latest one.
    pub fn bundle(&self, story_id: &str, version: Option<u64>) -> Result<Vec<u8>, StoreError> {
        let version = match version {
            Some(v) => v,
            None => self
                .latest_version(story_id)?
                .ok_or_else(|| not_found(format!("experience `{story_id}`")))?,
        };
        if !is_valid_id(story_id) {
            return Err(not_found(format!("experience `{story_id}`")));
        }
        match fs::read(self.bundle_path(story_id, version)) {
            Ok(b) => Ok(b),
            Err(e) if e.kind() == io::ErrorKind::NotFound => {
                Err(not_found(format!("version {version} of `{story_id}`")))
            }
            Err(e) => Err(e.into()),
        }
    }

    pub fn manifest(&self, story_id: &str) -> Result<BundleManifest, StoreError> {
        let b = self.bundle(story_id, None)?;
        bundle::read_manifest(&b).map_err(|e| StoreError::InvalidBundle(e.to_string()))
    }

    pub fn version(&self, story_id: &str) -> Result<VersionInfo, StoreError> {
        let m = self.manifest(story_id)?;
        Ok(VersionInfo {
            version: m.version,
            content_hash: m.content_hash,
        })
    }

    /// One asset of the latest version.
    pub fn asset(&self, story_id: &str, path: &str) -> Result<Vec<u8>, StoreError> {
        let b = self.bundle(story_id, None)?;
        bundle::get_asset(&b, path)
            .map_err(|e| StoreError::InvalidBundle(e.to_string()))?
            .ok_or_else(|| not_found(format!("asset `{path}` of `{story_id}`")))
    }

    /// Every stored version of a story, ascending.
    pub fn versions(&self, story_id: &str) -> Result<Vec<u64>, StoreError> {
        if !is_valid_id(story_id) {
            return Ok(Vec::new());
        }
        let mut out = Vec::new();
        let dir = match fs::read_dir(self.story_dir(story_id)) {
            Ok(d) => d,
            Err(e) if e.kind() == io::ErrorKind::NotFound => return Ok(out),
            Err(e) => return Err(e.into()),
        };
        for e in dir {
            let e = e?;
            if let Some(v) = e.file_name().to_str().and_then(|n| n.parse::<u64>().ok()) {
                if e.path().join(BUNDLE_FILE).is_file() {
                    out.push(v);
                }
            }
        }
        out.sort_unstable();
        Ok(out)
    }

    /// One entry per published story, sorted by title (then id).
    pub fn list(&self) -> Result<Vec<CatalogEntry>, StoreError> {
        let mut out = Vec::new();
        for e in fs::read_dir(self.root.join("experiences"))? {
            let e = e?;
            let Some(id) = e.file_name().to_str().map(str::to_owned) else {
                continue;
            };
            let Some(version) = self.latest_version(&id)? else {
                continue;
            };
            let b = self.bundle(&id, Some(version))?;
            let m = bundle::read_manifest(&b).map_err(|e| StoreError::InvalidBundle(e.to_string()))?;
            out.push(entry(&m, b.len() as u64));
        }
        out.sort_by(|a, b| a.title.cmp(&b.title).then_with(|| a.story_id.cmp(&b.story_id)));
        Ok(out)
    }
}

fn entry(m: &BundleManifest, bytes: u64) -> CatalogEntry {
    CatalogEntry {
        story_id: m.story_id.clone(),
        title: m.title.clone(),
        description: m.description.clone(),
        version: m.version,
        bytes,
        published_at: m.published_at.clone(),
    }
}
