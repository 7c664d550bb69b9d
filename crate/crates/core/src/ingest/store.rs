//! Append-only event log.
//!
//! A store is a directory holding `events.ndjson` (one [`ActivityEvent`] per
//! line) and `event_ids.idx` (the ids already in the log, one per line). The
//! index is rebuilt from the log whenever the two disagree. Appends take an
//! exclusive lock on `writer.lock`; readers never lock and only see complete
//! lines.

use std::collections::HashSet;
use std::fs::{self, File, OpenOptions};
use std::io::{self, BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::time::SystemTime;

use chrono::{DateTime, Utc};

use super::event::{sort_events, ActivityEvent, EventSnapshot};

const LOG_FILE: &str = "events.ndjson";
const INDEX_FILE: &str = "event_ids.idx";
const LOCK_FILE: &str = "writer.lock";

#[derive(Debug, thiserror::Error)]
pub enum StorageError {
    #[error("store not found at {0}")]
    Missing(PathBuf),
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("corrupt event log {path} line {line}: {message}")]
    Corrupt {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("another writer holds {0}")]
    Locked(PathBuf),
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> StorageError + '_ {
    move |source| StorageError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Changes whenever the log is appended to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StoreFingerprint {
    pub len: u64,
    pub modified: Option<SystemTime>,
}

#[derive(Debug, Clone)]
pub struct EventStore {
    dir: PathBuf,
}

impl EventStore {
    /// Opens the store at `dir`, creating an empty one if needed.
    pub fn init(dir: impl AsRef<Path>) -> Result<Self, StorageError> {
        let dir = dir.as_ref().to_path_buf();
        fs::create_dir_all(&dir).map_err(io_err(&dir))?;
        for name in [LOG_FILE, INDEX_FILE] {
            let path = dir.join(name);
            OpenOptions::new()
                .create(true)
                .append(true)
                .open(&path)
                .map_err(io_err(&path))?;
        }
        Ok(Self { dir })
    }

    /// Opens an existing store.
    pub fn open(dir: impl AsRef<Path>) -> Result<Self, StorageError> {
        let dir = dir.as_ref().to_path_buf();
        if !dir.join(LOG_FILE).is_file() {
            return Err(StorageError::Missing(dir));
        }
        Ok(Self { dir })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn log_path(&self) -> PathBuf {
        self.dir.join(LOG_FILE)
    }

    pub fn fingerprint(&self) -> Result<StoreFingerprint, StorageError> {
        let path = self.log_path();
        let meta = fs::metadata(&path).map_err(io_err(&path))?;
        Ok(StoreFingerprint {
            len: meta.len(),
            modified: meta.modified().ok(),
        })
    }

    /// Appends the events whose ids are not stored yet and returns how many
    /// were written. The batch is written sorted; on failure both files are
    /// truncated back to their previous length.
    pub fn append_events(&self, events: &[ActivityEvent]) -> Result<usize, StorageError> {
        let _lock = self.lock()?;
        let log_path = self.log_path();
        let index_path = self.dir.join(INDEX_FILE);
        self.drop_partial_tail()?;

        let known = self.known_ids()?;
        let mut seen = HashSet::new();
        let mut fresh: Vec<ActivityEvent> = events
            .iter()
            .filter(|e| !known.contains(&e.event_id) && seen.insert(e.event_id.clone()))
            .cloned()
            .collect();
        if fresh.is_empty() {
            return Ok(0);
        }
        sort_events(&mut fresh);

        let mut log_bytes = Vec::new();
        let mut index_bytes = Vec::new();
        for event in &fresh {
            serde_json::to_writer(&mut log_bytes, event).expect("events always serialize");
            log_bytes.push(b'\n');
            index_bytes.extend_from_slice(event.event_id.as_bytes());
            index_bytes.push(b'\n');
        }

        let log_len = fs::metadata(&log_path).map_err(io_err(&log_path))?.len();
        let index_len = fs::metadata(&index_path).map_err(io_err(&index_path))?.len();
        let written = append_synced(&log_path, &log_bytes)
            .and_then(|_| append_synced(&index_path, &index_bytes));
        if let Err(err) = written {
            let _ = truncate(&log_path, log_len);
            let _ = truncate(&index_path, index_len);
            return Err(err);
        }
        Ok(fresh.len())
    }

    /// All events with `timestamp <= as_of`, or every event when `as_of` is
    /// `None`.
    pub fn load_snapshot(&self, as_of: Option<DateTime<Utc>>) -> Result<EventSnapshot, StorageError> {
        Ok(EventSnapshot::new(self.read_all()?, as_of))
    }

    /// Latest stored timestamp among events matching `pred`.
    pub fn latest_timestamp(
        &self,
        pred: impl Fn(&ActivityEvent) -> bool,
    ) -> Result<Option<DateTime<Utc>>, StorageError> {
        Ok(self
            .read_all()?
            .into_iter()
            .filter(|e| pred(e))
            .map(|e| e.timestamp)
            .max())
    }

    fn read_all(&self) -> Result<Vec<ActivityEvent>, StorageError> {
        let path = self.log_path();
        let file = File::open(&path).map_err(|source| {
            if source.kind() == io::ErrorKind::NotFound {
                StorageError::Missing(self.dir.clone())
            } else {
                StorageError::Io {
                    path: path.clone(),
                    source,
                }
            }
        })?;
        let mut events = Vec::new();
        let mut reader = BufReader::new(file);
        let mut line = String::new();
        let mut number = 0;
        loop {
            line.clear();
            let n = reader.read_line(&mut line).map_err(io_err(&path))?;
            if n == 0 {
                break;
            }
            number += 1;
            // A line without its newline is an append still in flight.
            if !line.ends_with('\n') {
                break;
            }
            let text = line.trim();
            if text.is_empty() {
                continue;
            }
            let event = serde_json::from_str(text).map_err(|e| StorageError::Corrupt {
                path: path.clone(),
                line: number,
                message: e.to_string(),
            })?;
            events.push(event);
        }
        Ok(events)
    }

    /// Cuts an unterminated last line left behind by an interrupted writer.
    fn drop_partial_tail(&self) -> Result<(), StorageError> {
        let path = self.log_path();
        let bytes = fs::read(&path).map_err(io_err(&path))?;
        let complete = bytes
            .iter()
            .rposition(|b| *b == b'\n')
            .map_or(0, |i| i + 1);
        if complete < bytes.len() {
            truncate(&path, complete as u64)?;
        }
        Ok(())
    }

    fn known_ids(&self) -> Result<HashSet<String>, StorageError> {
        let index_path = self.dir.join(INDEX_FILE);
        let text = match fs::read_to_string(&index_path) {
            Ok(text) => text,
            Err(e) if e.kind() == io::ErrorKind::NotFound => String::new(),
            Err(e) => return Err(io_err(&index_path)(e)),
        };
        let ids: Vec<&str> = text.lines().filter(|l| !l.is_empty()).collect();
        let log = self.read_all()?;
        if ids.len() == log.len() {
            return Ok(ids.into_iter().map(str::to_string).collect());
        }
        // Out of sync (interrupted append or hand-edited log): rebuild.
        let mut rebuilt = Vec::new();
        for event in &log {
            rebuilt.extend_from_slice(event.event_id.as_bytes());
            rebuilt.push(b'\n');
        }
        fs::write(&index_path, rebuilt).map_err(io_err(&index_path))?;
        Ok(log.into_iter().map(|e| e.event_id).collect())
    }

    fn lock(&self) -> Result<File, StorageError> {
        let path = self.dir.join(LOCK_FILE);
        let file = OpenOptions::new()
            .create(true)
            .truncate(false)
            .write(true)
            .open(&path)
            .map_err(io_err(&path))?;
        match file.try_lock() {
            Ok(()) => Ok(file),
            Err(fs::TryLockError::WouldBlock) => Err(StorageError::Locked(path)),
            Err(fs::TryLockError::Error(e)) => Err(io_err(&path)(e)),
        }
    }
}

fn append_synced(path: &Path, bytes: &[u8]) -> Result<(), StorageError> {
    let mut file = OpenOptions::new()
        .append(true)
        .open(path)
        .map_err(io_err(path))?;
    file.write_all(bytes).map_err(io_err(path))?;
    file.sync_data().map_err(io_err(path))
}

fn truncate(path: &Path, len: u64) -> Result<(), StorageError> {
    let file = OpenOptions::new().write(true).open(path).map_err(io_err(path))?;
    file.set_len(len).map_err(io_err(path))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::{EventKind, RawProfile, SourceKind};
    use chrono::TimeZone;

    fn event(n: u32, day: u32) -> ActivityEvent {
        ActivityEvent {
            event_id: format!("fixture:demo:commit:{n}"),
            source_kind: SourceKind::Fixture,
            kind: EventKind::Commit,
            actor: RawProfile::new(SourceKind::Fixture).with_username("alice"),
            timestamp: Utc.with_ymd_and_hms(2023, 1, day, 0, 0, 0).unwrap(),
            repo_id: "demo".into(),
            artifact_id: n.to_string(),
            artifact_url: None,
            reactions: None,
        }
    }

    fn batch(range: std::ops::Range<u32>) -> Vec<ActivityEvent> {
        range.map(|n| event(n, 1 + n % 28)).collect()
    }

    #[test]
    fn append_is_idempotent() {
        let dir = tempfile::tempdir().unwrap();
        let store = EventStore::init(dir.path()).unwrap();
        assert_eq!(store.append_events(&batch(0..10)).unwrap(), 10);
        let before = fs::read(store.log_path()).unwrap();
        assert_eq!(store.append_events(&batch(0..10)).unwrap(), 0);
        assert_eq!(fs::read(store.log_path()).unwrap(), before);
    }

    #[test]
    fn append_counts_set_difference() {
        let dir = tempfile::tempdir().unwrap();
        let store = EventStore::init(dir.path()).unwrap();
        store.append_events(&batch(0..4)).unwrap();
        assert_eq!(store.append_events(&batch(0..10)).unwrap(), 6);
        assert_eq!(store.load_snapshot(None).unwrap().len(), 10);
    }

    #[test]
    fn duplicates_within_batch_are_stored_once() {
        let dir = tempfile::tempdir().unwrap();
        let store = EventStore::init(dir.path()).unwrap();
        let mut events = batch(0..3);
        events.extend(batch(0..3));
        assert_eq!(store.append_events(&events).unwrap(), 3);
    }

    #[test]
    fn snapshot_as_of_filters() {
        let dir = tempfile::tempdir().unwrap();
        let store = EventStore::init(dir.path()).unwrap();
        store
            .append_events(&[event(1, 1), event(2, 5), event(3, 9)])
            .unwrap();
        let cutoff = Utc.with_ymd_and_hms(2023, 1, 6, 0, 0, 0).unwrap();
        let snap = store.load_snapshot(Some(cutoff)).unwrap();
        assert_eq!(snap.len(), 2);
        assert_eq!(snap.as_of(), cutoff);

        let all = store.load_snapshot(None).unwrap();
        assert_eq!(all.as_of(), Utc.with_ymd_and_hms(2023, 1, 9, 0, 0, 0).unwrap());
    }

    #[test]
    fn empty_store_snapshot() {
        let dir = tempfile::tempdir().unwrap();
        let store = EventStore::init(dir.path()).unwrap();
        assert!(store.load_snapshot(None).unwrap().is_empty());
    }

    #[test]
    fn open_missing_store_fails() {
        let dir = tempfile::tempdir().unwrap();
        let err = EventStore::open(dir.path().join("nope")).unwrap_err();
        assert!(matches!(err, StorageError::Missing(_)));
    }

    #[test]
    fn partial_trailing_line_is_ignored_and_index_rebuilt() {
        let dir = tempfile::tempdir().unwrap();
        let store = EventStore::init(dir.path()).unwrap();
        store.append_events(&batch(0..2)).unwrap();
        let mut log = OpenOptions::new().append(true).open(store.log_path()).unwrap();
        log.write_all(b"{\"event_id\":").unwrap();
        assert_eq!(store.load_snapshot(None).unwrap().len(), 2);

        fs::write(dir.path().join(INDEX_FILE), "").unwrap();
        assert_eq!(store.append_events(&batch(0..2)).unwrap(), 0);
        assert_eq!(store.append_events(&batch(0..3)).unwrap(), 1);
        assert_eq!(store.load_snapshot(None).unwrap().len(), 3);
    }

    #[test]
    fn second_writer_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let store = EventStore::init(dir.path()).unwrap();
        let _held = store.lock().unwrap();
        let err = store.append_events(&batch(0..1)).unwrap_err();
        assert!(matches!(err, StorageError::Locked(_)));
    }
}
