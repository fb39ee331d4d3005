//! Published bundle archives.
//!
//! A bundle is a stored (uncompressed) ZIP archive holding `manifest.json`,
//! `story.json` and `assets/<path>` for every referenced asset, in that
//! order, with zeroed timestamps so identical inputs produce identical
//! bytes.

use std::collections::BTreeMap;
use std::io::{Cursor, Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use zip::write::SimpleFileOptions;
use zip::{CompressionMethod, DateTime, ZipArchive, ZipWriter};

use crate::analyzer::{estimate_erl, validate};
use crate::diagnostic::{has_errors, Diagnostic};
use crate::model::*;

pub const SCHEMA_VERSION: u32 = 1;
pub const MANIFEST_ENTRY: &str = "manifest.json";
pub const STORY_ENTRY: &str = "story.json";
pub const ASSET_PREFIX: &str = "assets/";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestAsset {
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
    pub kind: AssetKind,
    pub draft: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BundleManifest {
    pub schema_version: u32,
    pub story_id: String,
    pub title: String,
    pub description: String,
    pub version: u64,
    pub content_hash: String,
    pub assets: Vec<ManifestAsset>,
    pub published_at: String,
    pub erl_estimate: u8,
}

#[derive(Debug, thiserror::Error)]
pub enum BundleError {
    #[error("story has {} validation error(s)", .0.iter().filter(|d| d.is_error()).count())]
    InvalidStory(Vec<Diagnostic>),
    #[error("asset `{path}` not found")]
    MissingAsset { path: String },
    #[error("version must be at least 1")]
    InvalidVersion,
    #[error("readiness level {0} is outside 1..=7")]
    InvalidErl(u8),
    #[error("corrupt archive: {0}")]
    CorruptArchive(String),
    #[error("unsupported schema version {found} (expected {SCHEMA_VERSION})")]
    SchemaMismatch { found: u64 },
    #[error("manifests belong to different stories (`{local}` and `{remote}`)")]
    StoryIdMismatch { local: String, remote: String },
}

/// Where compile reads asset bytes from.
pub trait AssetSource {
    fn read_asset(&self, path: &str) -> Option<Vec<u8>>;
}

impl AssetSource for Path {
    fn read_asset(&self, path: &str) -> Option<Vec<u8>> {
        std::fs::read(self.join(path)).ok()
    }
}

impl AssetSource for PathBuf {
    fn read_asset(&self, path: &str) -> Option<Vec<u8>> {
        self.as_path().read_asset(path)
    }
}

impl AssetSource for BTreeMap<String, Vec<u8>> {
    fn read_asset(&self, path: &str) -> Option<Vec<u8>> {
        self.get(path).cloned()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CompileOptions {
    pub version: u64,
    /// Defaults to the analyzer's estimate.
    pub erl: Option<u8>,
    /// ISO-8601 UTC timestamp recorded in the manifest.
    pub published_at: String,
}

impl CompileOptions {
    pub fn new(version: u64) -> Self {
        CompileOptions {
            version,
            erl: None,
            published_at: "1970-01-01T00:00:00Z".to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Bundle {
    pub manifest: BundleManifest,
    pub bytes: Vec<u8>,
}

pub fn sha256_hex(data: &[u8]) -> String {
    hex::encode(Sha256::digest(data))
}

/// Canonical JSON: sorted keys, no whitespace.
pub fn canonical_json<T: Serialize>(value: &T) -> Vec<u8> {
    let v = serde_json::to_value(value).expect("model types serialize");
    serde_json::to_vec(&v).expect("json values serialize")
}

/// The canonical story document stored in bundles.
pub fn story_document(story: &Story) -> Vec<u8> {
    canonical_json(story)
}

pub fn content_hash(story: &Story) -> String {
    sha256_hex(&story_document(story))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QrCode {
    pub menu_id: String,
    pub option_id: String,
    pub payload: String,
}

/// Every QR payload a visitor may scan in this story.
pub fn qr_codes(story: &Story) -> Vec<QrCode> {
    let mut out = Vec::new();
    for m in story.menus() {
        for o in &m.options {
            if let Some(payload) = o.qr_payload(&story.id, &m.id) {
                out.push(QrCode {
                    menu_id: m.id.clone(),
                    option_id: o.id.clone(),
                    payload,
                });
            }
        }
    }
    out
}

fn entry_options() -> SimpleFileOptions {
    SimpleFileOptions::default()
        .compression_method(CompressionMethod::Stored)
        .last_modified_time(DateTime::default())
        .unix_permissions(0o644)
}

fn write_archive(entries: &[(String, &[u8])]) -> Vec<u8> {
    let mut w = ZipWriter::new(Cursor::new(Vec::new()));
    for (name, data) in entries {
        w.start_file(name.as_str(), entry_options())
            .expect("in-memory zip write");
        w.write_all(data).expect("in-memory zip write");
    }
    w.finish().expect("in-memory zip write").into_inner()
}

pub fn compile(
    story: &Story,
    assets: &(impl AssetSource + ?Sized),
    opts: &CompileOptions,
) -> Result<Bundle, BundleError> {
    let diags = validate(story);
    if has_errors(&diags) {
        return Err(BundleError::InvalidStory(diags));
    }
    if opts.version == 0 {
        return Err(BundleError::InvalidVersion);
    }
    let erl = opts.erl.unwrap_or_else(|| estimate_erl(story));
    if !(1..=7).contains(&erl) {
        return Err(BundleError::InvalidErl(erl));
    }

    let mut refs: BTreeMap<&str, (AssetKind, bool)> = BTreeMap::new();
    for a in story.assets() {
        refs.entry(a.path.as_str())
            .and_modify(|(_, d)| *d |= a.draft)
            .or_insert((a.kind, a.draft));
    }
    let mut listed = Vec::with_capacity(refs.len());
    let mut payloads = Vec::with_capacity(refs.len());
    for (path, (kind, draft)) in refs {
        let data = assets
            .read_asset(path)
            .ok_or_else(|| BundleError::MissingAsset { path: path.to_string() })?;
        listed.push(ManifestAsset {
            path: path.to_string(),
            sha256: sha256_hex(&data),
            bytes: data.len() as u64,
            kind,
            draft,
        });
        payloads.push((format!("{ASSET_PREFIX}{path}"), data));
    }

    let doc = story_document(story);
    let manifest = BundleManifest {
        schema_version: SCHEMA_VERSION,
        story_id: story.id.clone(),
        title: story.title.clone(),
        description: story.description.clone(),
        version: opts.version,
        content_hash: sha256_hex(&doc),
        assets: listed,
        published_at: opts.published_at.clone(),
        erl_estimate: erl,
    };
    let manifest_doc = canonical_json(&manifest);

    let mut entries: Vec<(String, &[u8])> = vec![
        (MANIFEST_ENTRY.to_string(), &manifest_doc),
        (STORY_ENTRY.to_string(), &doc),
    ];
    entries.extend(payloads.iter().map(|(n, d)| (n.clone(), d.as_slice())));
    Ok(Bundle {
        bytes: write_archive(&entries),
        manifest,
    })
}

fn open(bytes: &[u8]) -> Result<ZipArchive<Cursor<&[u8]>>, BundleError> {
    ZipArchive::new(Cursor::new(bytes)).map_err(|e| BundleError::CorruptArchive(e.to_string()))
}

/// Raw stored bytes of an entry, without decompression or CRC checks.
fn raw_entry(zip: &mut ZipArchive<Cursor<&[u8]>>, name: &str) -> Result<Option<Vec<u8>>, BundleError> {
    let Some(index) = zip.index_for_name(name) else {
        return Ok(None);
    };
    let mut f = zip
        .by_index_raw(index)
        .map_err(|e| BundleError::CorruptArchive(e.to_string()))?;
    let mut out = Vec::with_capacity(f.size() as usize);
    f.read_to_end(&mut out)
        .map_err(|e| BundleError::CorruptArchive(format!("{name}: {e}")))?;
    Ok(Some(out))
}

fn parse_manifest(data: &[u8]) -> Result<BundleManifest, BundleError> {
    let v: serde_json::Value =
        serde_json::from_slice(data).map_err(|e| BundleError::CorruptArchive(format!("{MANIFEST_ENTRY}: {e}")))?;
    let found = v.get("schema_version").and_then(|s| s.as_u64()).unwrap_or(0);
    if found != u64::from(SCHEMA_VERSION) {
        return Err(BundleError::SchemaMismatch { found });
    }
    serde_json::from_value(v).map_err(|e| BundleError::CorruptArchive(format!("{MANIFEST_ENTRY}: {e}")))
}

/// Entry names in archive order. Undecodable names are skipped.
pub(crate) fn entry_names<R: Read + std::io::Seek>(zip: &ZipArchive<R>) -> Vec<String> {
    (0..zip.len())
        .filter_map(|i| zip.name_for_index(i)?.ok().map(|n| n.into_owned()))
        .collect()
}

/// Reads only the manifest of a bundle.
pub fn read_manifest(bytes: &[u8]) -> Result<BundleManifest, BundleError> {
    let mut zip = open(bytes)?;
    let data = raw_entry(&mut zip, MANIFEST_ENTRY)?
        .ok_or_else(|| BundleError::CorruptArchive(format!("missing {MANIFEST_ENTRY}")))?;
    parse_manifest(&data)
}

pub fn load(bytes: &[u8]) -> Result<(BundleManifest, Story), BundleError> {
    let mut zip = open(bytes)?;
    let read = |zip: &mut ZipArchive<Cursor<&[u8]>>, name: &str| -> Result<Vec<u8>, BundleError> {
        let mut f = zip
            .by_name(name)
            .map_err(|e| BundleError::CorruptArchive(format!("{name}: {e}")))?;
        let mut out = Vec::new();
        f.read_to_end(&mut out)
            .map_err(|e| BundleError::CorruptArchive(format!("{name}: {e}")))?;
        Ok(out)
    };
    let manifest = parse_manifest(&read(&mut zip, MANIFEST_ENTRY)?)?;
    let story: Story = serde_json::from_slice(&read(&mut zip, STORY_ENTRY)?)
        .map_err(|e| BundleError::CorruptArchive(format!("{STORY_ENTRY}: {e}")))?;
    Ok((manifest, story))
}

/// Bytes of one asset as stored in the bundle.
pub fn get_asset(bytes: &[u8], path: &str) -> Result<Option<Vec<u8>>, BundleError> {
    let mut zip = open(bytes)?;
    raw_entry(&mut zip, &format!("{ASSET_PREFIX}{path}"))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Problem {
    /// The archive or its manifest cannot be read.
    Unreadable,
    MissingEntry,
    /// Archived entry that the manifest does not list.
    Unlisted,
    SizeMismatch,
    /// The manifest does not match the checksum recorded by the archive.
    ChecksumMismatch,
    Sha256Mismatch,
    ContentHashMismatch,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub path: String,
    pub problem: Problem,
    pub detail: String,
}

/// Recomputes every hash in the bundle. An empty list means the bundle is
/// intact.
pub fn verify(bytes: &[u8]) -> Vec<Violation> {
    let v = |path: &str, problem, detail: String| Violation {
        path: path.to_string(),
        problem,
        detail,
    };
    let mut zip = match open(bytes) {
        Ok(z) => z,
        Err(e) => return vec![v("", Problem::Unreadable, e.to_string())],
    };
    let manifest_data = match raw_entry(&mut zip, MANIFEST_ENTRY) {
        Ok(Some(d)) => d,
        Ok(None) => return vec![v(MANIFEST_ENTRY, Problem::MissingEntry, "not in archive".into())],
        Err(e) => return vec![v(MANIFEST_ENTRY, Problem::Unreadable, e.to_string())],
    };
    // nothing else covers the manifest, so its CRC is checked here
    let recorded = zip
        .index_for_name(MANIFEST_ENTRY)
        .and_then(|i| zip.by_index_raw(i).ok().map(|f| f.crc32()));
    let actual = crc32fast::hash(&manifest_data);
    if recorded != Some(actual) {
        return vec![v(
            MANIFEST_ENTRY,
            Problem::ChecksumMismatch,
            format!("recorded crc32 {:08x}, found {actual:08x}", recorded.unwrap_or(0)),
        )];
    }
    let manifest = match parse_manifest(&manifest_data) {
        Ok(m) => m,
        Err(e) => return vec![v(MANIFEST_ENTRY, Problem::Unreadable, e.to_string())],
    };

    let mut out = Vec::new();
    match raw_entry(&mut zip, STORY_ENTRY) {
        Ok(Some(doc)) => {
            let h = sha256_hex(&doc);
            if h != manifest.content_hash {
                out.push(v(
                    STORY_ENTRY,
                    Problem::ContentHashMismatch,
                    format!("expected {}, found {h}", manifest.content_hash),
                ));
            }
        }
        Ok(None) => out.push(v(STORY_ENTRY, Problem::MissingEntry, "not in archive".into())),
        Err(e) => out.push(v(STORY_ENTRY, Problem::Unreadable, e.to_string())),
    }

    for a in &manifest.assets {
        let name = format!("{ASSET_PREFIX}{}", a.path);
        match raw_entry(&mut zip, &name) {
            Ok(Some(data)) => {
                if data.len() as u64 != a.bytes {
                    out.push(v(
                        &a.path,
                        Problem::SizeMismatch,
                        format!("expected {} bytes, found {}", a.bytes, data.len()),
                    ));
                }
                let h = sha256_hex(&data);
                if h != a.sha256 {
                    out.push(v(
                        &a.path,
                        Problem::Sha256Mismatch,
                        format!("expected {}, found {h}", a.sha256),
                    ));
                }
            }
            Ok(None) => out.push(v(&a.path, Problem::MissingEntry, "not in archive".into())),
            Err(e) => out.push(v(&a.path, Problem::Unreadable, e.to_string())),
        }
    }

    let listed: std::collections::BTreeSet<&str> = manifest.assets.iter().map(|a| a.path.as_str()).collect();
    for name in entry_names(&zip) {
        let name = name.as_str();
        let known = name == MANIFEST_ENTRY
            || name == STORY_ENTRY
            || name.strip_prefix(ASSET_PREFIX).is_some_and(|p| listed.contains(p));
        if !known {
            out.push(v(name, Problem::Unlisted, "not listed in the manifest".into()));
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UpdateCheck {
    pub needed: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub warning: Option<String>,
}

/// A newer version always wins. Equal versions with different content mean
/// someone republished without bumping the version: the update is still
/// offered, with a warning.
pub fn needs_update(local: &BundleManifest, remote: &BundleManifest) -> Result<UpdateCheck, BundleError> {
    if local.story_id != remote.story_id {
        return Err(BundleError::StoryIdMismatch {
            local: local.story_id.clone(),
            remote: remote.story_id.clone(),
        });
    }
    if remote.version > local.version {
        return Ok(UpdateCheck {
            needed: true,
            warning: None,
        });
    }
    if remote.version == local.version && remote.content_hash != local.content_hash {
        return Ok(UpdateCheck {
            needed: true,
            warning: Some(format!(
                "version {} was published with different content ({} vs {})",
                remote.version, local.content_hash, remote.content_hash
            )),
        });
    }
    Ok(UpdateCheck {
        needed: false,
        warning: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::script::parse;

    const SRC: &str = r#"story "Museum" id=museum lang=en description="Two rooms"
  chapter "Hall" id=hall preview="img/hall.png"
    scene "Entrance" id=entrance
      page simple id=welcome
        text "Welcome"
        image "img/hall.png"
        audio ~"audio/welcome.mp3"
      menu more id=extras style=qr
        option "Stele" id=stele qr=auto
          page video id=clip
            video "video/stele.mp4"
"#;

    fn assets() -> BTreeMap<String, Vec<u8>> {
        [
            ("img/hall.png", b"PNG hall".to_vec()),
            ("audio/welcome.mp3", b"ID3 welcome".to_vec()),
            ("video/stele.mp4", b"ftyp stele video".to_vec()),
        ]
        .into_iter()
        .map(|(k, v)| (k.to_string(), v))
        .collect()
    }

    fn bundle() -> (Story, Bundle) {
        let s = parse(SRC).unwrap();
        let b = compile(&s, &assets(), &CompileOptions::new(1)).unwrap();
        (s, b)
    }

    #[test]
    fn manifest_lists_referenced_assets_once() {
        let (_, b) = bundle();
        let m = &b.manifest;
        let paths: Vec<_> = m.assets.iter().map(|a| a.path.as_str()).collect();
        assert_eq!(paths, ["audio/welcome.mp3", "img/hall.png", "video/stele.mp4"]);
        assert_eq!(m.assets[1].sha256, sha256_hex(b"PNG hall"));
        assert_eq!(m.assets[1].bytes, 8);
        assert!(m.assets[0].draft);
        assert_eq!(m.erl_estimate, 1);
        assert_eq!(m.description, "Two rooms");
        // sha256("") as a known vector
        assert_eq!(
            sha256_hex(b""),
            "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855"
        );
    }

    #[test]
    fn entry_order_and_determinism() {
        let (s, b) = bundle();
        let again = compile(&s, &assets(), &CompileOptions::new(1)).unwrap();
        assert_eq!(b.bytes, again.bytes);
        let zip = ZipArchive::new(Cursor::new(&b.bytes[..])).unwrap();
        let names = entry_names(&zip);
        assert_eq!(
            names,
            [
                "manifest.json",
                "story.json",
                "assets/audio/welcome.mp3",
                "assets/img/hall.png",
                "assets/video/stele.mp4"
            ]
        );
    }

    #[test]
    fn load_round_trip() {
        let (s, b) = bundle();
        let (m, loaded) = load(&b.bytes).unwrap();
        assert_eq!(loaded, s);
        assert_eq!(m, b.manifest);
        assert_eq!(m.content_hash, content_hash(&loaded));
        assert_eq!(get_asset(&b.bytes, "img/hall.png").unwrap().unwrap(), b"PNG hall");
        assert_eq!(get_asset(&b.bytes, "nope.png").unwrap(), None);
    }

    #[test]
    fn story_document_is_canonical() {
        let (s, _) = bundle();
        let doc = String::from_utf8(story_document(&s)).unwrap();
        assert!(!doc.contains('\n') && !doc.contains(": "));
        assert!(doc.starts_with(r#"{"author_tags":[],"chapters":"#));
    }

    #[test]
    fn qr_payloads() {
        let (s, _) = bundle();
        assert_eq!(qr_codes(&s)[0].payload, "NARRALIVE:museum:extras:stele");
    }

    #[test]
    fn compile_errors() {
        let s = parse(SRC).unwrap();
        let mut missing = assets();
        missing.remove("video/stele.mp4");
        assert!(matches!(
            compile(&s, &missing, &CompileOptions::new(1)),
            Err(BundleError::MissingAsset { path }) if path == "video/stele.mp4"
        ));
        assert!(matches!(
            compile(&s, &assets(), &CompileOptions::new(0)),
            Err(BundleError::InvalidVersion)
        ));
        let mut bad = s.clone();
        bad.chapters.clear();
        assert!(matches!(
            compile(&bad, &assets(), &CompileOptions::new(1)),
            Err(BundleError::InvalidStory(_))
        ));
    }

    #[test]
    fn compile_from_directory() {
        let dir = tempfile::tempdir().unwrap();
        for (p, d) in assets() {
            let f = dir.path().join(&p);
            std::fs::create_dir_all(f.parent().unwrap()).unwrap();
            std::fs::write(f, d).unwrap();
        }
        let s = parse(SRC).unwrap();
        let from_dir = compile(&s, dir.path(), &CompileOptions::new(1)).unwrap();
        assert_eq!(from_dir.bytes, bundle().1.bytes);
    }

    #[test]
    fn corrupt_and_schema() {
        let (_, b) = bundle();
        assert!(matches!(
            load(&b.bytes[..b.bytes.len() / 2]),
            Err(BundleError::CorruptArchive(_))
        ));
        assert!(matches!(load(b"not a zip"), Err(BundleError::CorruptArchive(_))));

        let mut m = b.manifest.clone();
        m.schema_version = 99;
        let doc = canonical_json(&m);
        let (_, s) = load(&b.bytes).unwrap();
        let story = story_document(&s);
        let bytes = write_archive(&[(MANIFEST_ENTRY.into(), &doc), (STORY_ENTRY.into(), &story)]);
        assert!(matches!(load(&bytes), Err(BundleError::SchemaMismatch { found: 99 })));
    }

    fn flip_in_entry(bytes: &[u8], name: &str, offset: usize) -> Vec<u8> {
        let zip = ZipArchive::new(Cursor::new(bytes)).unwrap();
        let start = zip
            .clone()
            .by_name(name)
            .map(|f| f.data_start().unwrap() as usize)
            .unwrap();
        let mut out = bytes.to_vec();
        out[start + offset] ^= 0x01;
        out
    }

    #[test]
    fn verify_detects_flips() {
        let (_, b) = bundle();
        assert!(verify(&b.bytes).is_empty());

        let bad = flip_in_entry(&b.bytes, "assets/img/hall.png", 3);
        let v = verify(&bad);
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].path, "img/hall.png");
        assert_eq!(v[0].problem, Problem::Sha256Mismatch);

        let bad = flip_in_entry(&b.bytes, "story.json", 10);
        let v = verify(&bad);
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].problem, Problem::ContentHashMismatch);

        let bad = flip_in_entry(&b.bytes, "manifest.json", 20);
        let v = verify(&bad);
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].problem, Problem::ChecksumMismatch);

        assert_eq!(verify(b"junk")[0].problem, Problem::Unreadable);
    }

    #[test]
    fn update_rules() {
        let (_, b) = bundle();
        let v1 = b.manifest.clone();
        let mut v2 = v1.clone();
        v2.version = 2;
        assert_eq!(
            needs_update(&v1, &v2).unwrap(),
            UpdateCheck {
                needed: true,
                warning: None
            }
        );
        assert!(!needs_update(&v1, &v1).unwrap().needed);
        assert!(!needs_update(&v2, &v1).unwrap().needed);
        let mut same_version = v1.clone();
        same_version.content_hash = "0".repeat(64);
        let c = needs_update(&v1, &same_version).unwrap();
        assert!(c.needed && c.warning.is_some());
        let mut other = v1.clone();
        other.story_id = "other".into();
        assert!(matches!(
            needs_update(&v1, &other),
            Err(BundleError::StoryIdMismatch { .. })
        ));
    }
}
