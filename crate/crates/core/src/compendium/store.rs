//! Content-addressed store of canonical oriented Bell expressions.
//!
//! Layout under the root directory:
//!
//! ```text
//! manifest.yaml              format version and digest algorithm
//! index.yaml                 key -> scenario and names, rebuildable
//! records/<ab>/<key>.yaml    one interchange document per record
//! .lock                      present while a writer holds the store
//! ```

use std::collections::BTreeMap;
use std::fs::{self, OpenOptions};
use std::io::{ErrorKind, Write};
use std::path::{Path, PathBuf};
use std::thread;
use std::time::Duration;

use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::format::{InterchangeDocument, Metadata, Notation};
use crate::canonical::{Canonicalizer, Node};
use crate::error::{Error, Result};
use crate::expr::{BellExpression, OrientedExpression};

pub const DIGEST_ALGORITHM: &str = "sha256";
const FORMAT_VERSION: u32 = 1;
const KEY_DOMAIN: &[u8] = b"bellcanon-key-v1";

fn io_err(path: &Path, e: std::io::Error) -> Error {
    Error::Store(format!("{}: {e}", path.display()))
}

fn put_bytes(h: &mut Sha256, bytes: &[u8]) {
    h.update((bytes.len() as u64).to_be_bytes());
    h.update(bytes);
}

fn put_u64(h: &mut Sha256, v: usize) {
    h.update((v as u64).to_be_bytes());
}

/// Digest of the scenario and integer coefficients of `e`, in hex.
pub fn canonical_key(e: &BellExpression) -> Result<String> {
    let ints = e
        .integer_coefficients()
        .ok_or_else(|| Error::NotCanonical("coefficients are not integers".into()))?;
    let mut h = Sha256::new();
    put_bytes(&mut h, KEY_DOMAIN);
    let s = e.scenario();
    put_u64(&mut h, s.num_parties());
    for p in s.parties() {
        put_u64(&mut h, p.len());
        for &k in p {
            put_u64(&mut h, k);
        }
    }
    put_u64(&mut h, ints.len());
    for c in &ints {
        put_bytes(&mut h, c.to_string().as_bytes());
    }
    Ok(hex::encode(h.finalize()))
}

/// Whether `e` is its own canonical form: a single non-composite factor
/// with nothing removed, scale one and no shift, already lex-minimal.
pub fn is_canonical(c: &Canonicalizer, e: &BellExpression) -> Result<bool> {
    let tree = match c.decompose(&OrientedExpression::new(e.clone())) {
        Ok(t) => t,
        Err(Error::Trivial) => return Ok(false),
        Err(other) => return Err(other),
    };
    let Node::Leaf(leaf) = &tree.node else {
        return Ok(false);
    };
    Ok(tree.removed.is_empty()
        && tree.scale.is_one()
        && tree.shift.is_zero()
        && &leaf.canonical.expression == e)
}

/// A stored canonical oriented expression with its metadata.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Record {
    pub key: String,
    pub expression: OrientedExpression,
    /// Where each bound comes from, by bound-set name.
    pub provenance: BTreeMap<String, String>,
    pub metadata: Metadata,
}

impl Record {
    /// Record for an expression that is already canonical.
    pub fn new(
        c: &Canonicalizer,
        expression: OrientedExpression,
        provenance: BTreeMap<String, String>,
        metadata: Metadata,
    ) -> Result<Self> {
        if !is_canonical(c, &expression.expression)? {
            return Err(Error::NotCanonical(
                "expression is not its own canonical form".into(),
            ));
        }
        Ok(Record {
            key: canonical_key(&expression.expression)?,
            expression,
            provenance,
            metadata,
        })
    }

    /// Canonicalizes an arbitrary non-composite expression, carrying its
    /// bounds over to the canonical form.
    pub fn canonicalize(
        c: &Canonicalizer,
        oe: &OrientedExpression,
        provenance: BTreeMap<String, String>,
        metadata: Metadata,
    ) -> Result<Self> {
        let tree = c.decompose(oe)?;
        let Node::Leaf(leaf) = tree.node else {
            return Err(Error::NotCanonical(
                "composite expressions are stored through their factors".into(),
            ));
        };
        Record::new(c, leaf.canonical, provenance, metadata)
    }

    pub fn from_document(c: &Canonicalizer, doc: &InterchangeDocument) -> Result<Self> {
        let provenance = doc
            .bounds
            .iter()
            .filter_map(|(k, b)| b.provenance.clone().map(|p| (k.clone(), p)))
            .collect();
        Record::new(c, doc.oriented()?, provenance, doc.metadata.clone())
    }

    pub fn to_document(&self, notation: Notation) -> InterchangeDocument {
        InterchangeDocument::from_oriented(
            &self.expression,
            notation,
            &self.provenance,
            self.metadata.clone(),
        )
    }

    /// Union of names, references, bounds and notes. Differing values for
    /// the same bound set are a conflict.
    fn merged(&self, other: &Record) -> Result<Record> {
        let mut out = self.clone();
        for (set, b) in &other.expression.bounds {
            match out.expression.bounds.get(set) {
                Some(mine) if mine.value != b.value => {
                    return Err(Error::Conflict(format!(
                        "{}: bound '{set}' differs",
                        self.key
                    )))
                }
                Some(_) => {}
                None => {
                    out.expression.bounds.insert(set.clone(), b.clone());
                }
            }
        }
        for (set, p) in &other.provenance {
            out.provenance
                .entry(set.clone())
                .or_insert_with(|| p.clone());
        }
        let union = |a: &mut Vec<String>, b: &[String]| {
            for x in b {
                if !a.contains(x) {
                    a.push(x.clone());
                }
            }
        };
        union(&mut out.metadata.names, &other.metadata.names);
        union(&mut out.metadata.references, &other.metadata.references);
        out.metadata.notes = match (&self.metadata.notes, &other.metadata.notes) {
            (Some(a), Some(b)) if a != b => Some(format!("{a}\n{b}")),
            (a, b) => a.clone().or_else(|| b.clone()),
        };
        Ok(out)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct IndexEntry {
    pub scenario: String,
    #[serde(default)]
    pub names: Vec<String>,
}

#[derive(Debug, Serialize, Deserialize)]
struct Manifest {
    format: u32,
    digest: String,
}

/// Outcome of [`Store::store`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StoreOutcome {
    Inserted,
    Unchanged,
    Merged,
}

/// Exclusive writer lock, released on drop.
struct WriteLock(PathBuf);

impl WriteLock {
    fn acquire(root: &Path) -> Result<Self> {
        let path = root.join(".lock");
        for _ in 0..50 {
            match OpenOptions::new().write(true).create_new(true).open(&path) {
                Ok(mut f) => {
                    let _ = writeln!(f, "{}", std::process::id());
                    return Ok(WriteLock(path));
                }
                Err(e) if e.kind() == ErrorKind::AlreadyExists => {
                    thread::sleep(Duration::from_millis(100))
                }
                Err(e) => return Err(io_err(&path, e)),
            }
        }
        Err(Error::Store(format!(
            "{} is held by another writer",
            path.display()
        )))
    }
}

impl Drop for WriteLock {
    fn drop(&mut self) {
        let _ = fs::remove_file(&self.0);
    }
}

fn write_atomic(path: &Path, text: &str) -> Result<()> {
    let tmp = path.with_extension("yaml.tmp");
    fs::write(&tmp, text).map_err(|e| io_err(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| io_err(path, e))
}

#[derive(Debug)]
pub struct Store {
    root: PathBuf,
    index: BTreeMap<String, IndexEntry>,
}

impl Store {
    /// Opens the store at `root`, creating it if needed.
    pub fn open(root: impl AsRef<Path>) -> Result<Self> {
        let root = root.as_ref().to_path_buf();
        fs::create_dir_all(root.join("records")).map_err(|e| io_err(&root, e))?;
        let manifest_path = root.join("manifest.yaml");
        if manifest_path.exists() {
            let text = fs::read_to_string(&manifest_path).map_err(|e| io_err(&manifest_path, e))?;
            let m: Manifest =
                serde_yaml::from_str(&text).map_err(|e| Error::Store(format!("manifest: {e}")))?;
            if m.digest != DIGEST_ALGORITHM || m.format != FORMAT_VERSION {
                return Err(Error::Store(format!(
                    "unsupported store (format {}, digest {})",
                    m.format, m.digest
                )));
            }
        } else {
            let m = Manifest {
                format: FORMAT_VERSION,
                digest: DIGEST_ALGORITHM.into(),
            };
            write_atomic(
                &manifest_path,
                &serde_yaml::to_string(&m).expect("manifest"),
            )?;
        }
        let mut store = Store {
            root,
            index: BTreeMap::new(),
        };
        let index_path = store.index_path();
        if index_path.exists() {
            let text = fs::read_to_string(&index_path).map_err(|e| io_err(&index_path, e))?;
            store.index = serde_yaml::from_str::<Option<BTreeMap<String, IndexEntry>>>(&text)
                .map_err(|e| Error::Store(format!("index: {e}")))?
                .unwrap_or_default();
        } else {
            store.index = store.scan()?;
        }
        Ok(store)
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn index(&self) -> &BTreeMap<String, IndexEntry> {
        &self.index
    }

    fn index_path(&self) -> PathBuf {
        self.root.join("index.yaml")
    }

    fn record_path(&self, key: &str) -> PathBuf {
        let prefix = key.get(..2).unwrap_or("00");
        self.root
            .join("records")
            .join(prefix)
            .join(format!("{key}.yaml"))
    }

    fn read_record(&self, path: &Path) -> Result<Record> {
        let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
        let doc = InterchangeDocument::parse(&text)?;
        let provenance = doc
            .bounds
            .iter()
            .filter_map(|(k, b)| b.provenance.clone().map(|p| (k.clone(), p)))
            .collect();
        let expression = doc.oriented()?;
        let key = canonical_key(&expression.expression)?;
        let stem = path
            .file_stem()
            .and_then(|s| s.to_str())
            .unwrap_or_default();
        if stem != key {
            return Err(Error::Store(format!(
                "{}: content hashes to {key}",
                path.display()
            )));
        }
        Ok(Record {
            key,
            expression,
            provenance,
            metadata: doc.metadata,
        })
    }

    fn entry(r: &Record) -> IndexEntry {
        IndexEntry {
            scenario: r.expression.expression.scenario().to_string(),
            names: r.metadata.names.clone(),
        }
    }

    /// Index built from the record files alone.
    fn scan(&self) -> Result<BTreeMap<String, IndexEntry>> {
        let mut out = BTreeMap::new();
        let records = self.root.join("records");
        let mut dirs: Vec<PathBuf> = fs::read_dir(&records)
            .map_err(|e| io_err(&records, e))?
            .filter_map(|d| d.ok().map(|d| d.path()))
            .filter(|p| p.is_dir())
            .collect();
        dirs.sort();
        for dir in dirs {
            let mut files: Vec<PathBuf> = fs::read_dir(&dir)
                .map_err(|e| io_err(&dir, e))?
                .filter_map(|d| d.ok().map(|d| d.path()))
                .filter(|p| p.extension().is_some_and(|x| x == "yaml"))
                .collect();
            files.sort();
            for f in files {
                let r = self.read_record(&f)?;
                out.insert(r.key.clone(), Self::entry(&r));
            }
        }
        Ok(out)
    }

    fn write_index(&self) -> Result<()> {
        let text = serde_yaml::to_string(&self.index).expect("index serializes");
        write_atomic(&self.index_path(), &text)
    }

    /// Rescans the record files and rewrites the index.
    pub fn rebuild_index(&mut self) -> Result<usize> {
        let _lock = WriteLock::acquire(&self.root)?;
        self.index = self.scan()?;
        self.write_index()?;
        Ok(self.index.len())
    }

    /// Adds `r`, checking that it is canonical. An existing record with the
    /// same key and different content is a conflict unless `merge` is set.
    pub fn store(&mut self, c: &Canonicalizer, r: &Record, merge: bool) -> Result<StoreOutcome> {
        if !is_canonical(c, &r.expression.expression)? {
            return Err(Error::NotCanonical(
                "expression is not its own canonical form".into(),
            ));
        }
        let key = canonical_key(&r.expression.expression)?;
        if key != r.key {
            return Err(Error::NotCanonical(format!(
                "record key {} does not match content key {key}",
                r.key
            )));
        }
        let _lock = WriteLock::acquire(&self.root)?;
        let path = self.record_path(&key);
        let (record, outcome) = if path.exists() {
            let existing = self.read_record(&path)?;
            if existing == *r {
                return Ok(StoreOutcome::Unchanged);
            }
            if !merge {
                return Err(Error::Conflict(key));
            }
            let merged = existing.merged(r)?;
            if merged == existing {
                return Ok(StoreOutcome::Unchanged);
            }
            (merged, StoreOutcome::Merged)
        } else {
            (r.clone(), StoreOutcome::Inserted)
        };
        let dir = path.parent().expect("record path has a parent");
        fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
        write_atomic(
            &path,
            &record.to_document(Notation::Probabilities).to_text(),
        )?;
        self.index.insert(key, Self::entry(&record));
        self.write_index()?;
        Ok(outcome)
    }

    pub fn lookup(&self, key: &str) -> Result<Option<Record>> {
        let path = self.record_path(key);
        if !path.exists() {
            return Ok(None);
        }
        self.read_record(&path).map(Some)
    }

    /// Record of the canonical form of `oe`; `None` when it is absent or
    /// composite.
    pub fn find_by_expression(
        &self,
        c: &Canonicalizer,
        oe: &OrientedExpression,
    ) -> Result<Option<Record>> {
        let tree = c.decompose(oe)?;
        match &tree.node {
            Node::Leaf(leaf) => self.lookup(&canonical_key(&leaf.canonical.expression)?),
            Node::Product(_) => Ok(None),
        }
    }
}
