//! Where the served dataset comes from.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::SystemTime;

use tapestry_core::{Dataset, EventSnapshot, EventStore, IdentityRegistry};

/// Enriched registry written beside the event log.
pub const REGISTRY_FILE: &str = "registry.json";

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{0}")]
pub struct LoadError(pub String);

/// A reloadable dataset. `version` must be cheap; the server reloads when it
/// changes.
pub trait DatasetSource: Send + Sync + 'static {
    fn version(&self) -> Result<String, LoadError>;
    fn load(&self) -> Result<Dataset, LoadError>;
}

/// Registry builder used when the store has no usable `registry.json`.
pub type Enricher = dyn Fn(&EventSnapshot) -> Result<IdentityRegistry, String> + Send + Sync;

/// An event store plus its enriched registry. When the registry file is
/// missing or does not cover every event (new events since the last
/// enrichment), the optional enricher rebuilds it in memory.
pub struct StoreSource {
    store: EventStore,
    enricher: Option<Box<Enricher>>,
}

impl StoreSource {
    pub fn open(dir: impl AsRef<Path>) -> Result<Self, LoadError> {
        let store = EventStore::open(dir).map_err(|e| LoadError(e.to_string()))?;
        Ok(Self { store, enricher: None })
    }

    pub fn with_enricher(
        mut self,
        enricher: impl Fn(&EventSnapshot) -> Result<IdentityRegistry, String> + Send + Sync + 'static,
    ) -> Self {
        self.enricher = Some(Box::new(enricher));
        self
    }

    pub fn registry_path(&self) -> PathBuf {
        self.store.dir().join(REGISTRY_FILE)
    }

    fn read_registry(&self) -> Result<Option<IdentityRegistry>, LoadError> {
        let path = self.registry_path();
        match fs::read(&path) {
            Ok(bytes) => serde_json::from_slice(&bytes)
                .map(Some)
                .map_err(|e| LoadError(format!("{}: {e}", path.display()))),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(None),
            Err(e) => Err(LoadError(format!("{}: {e}", path.display()))),
        }
    }
}

fn stamp(meta: Option<fs::Metadata>) -> String {
    match meta {
        Some(m) => {
            let modified = m
                .modified()
                .ok()
                .and_then(|t| t.duration_since(SystemTime::UNIX_EPOCH).ok())
                .map_or(0, |d| d.as_nanos());
            format!("{}@{modified}", m.len())
        }
        None => "-".to_string(),
    }
}

impl DatasetSource for StoreSource {
    fn version(&self) -> Result<String, LoadError> {
        let log = fs::metadata(self.store.log_path()).map_err(|e| LoadError(e.to_string()))?;
        let registry = fs::metadata(self.registry_path()).ok();
        Ok(format!("{}/{}", stamp(Some(log)), stamp(registry)))
    }

    fn load(&self) -> Result<Dataset, LoadError> {
        let snapshot = self.store.load_snapshot(None).map_err(|e| LoadError(e.to_string()))?;
        let stored = match self.read_registry()? {
            Some(registry) => match Dataset::new(snapshot.clone(), registry) {
                Ok(ds) => return Ok(ds),
                Err(e) => e.to_string(),
            },
            None => format!("{} not found; run enrich", self.registry_path().display()),
        };
        let Some(enrich) = &self.enricher else {
            return Err(LoadError(stored));
        };
        let registry = enrich(&snapshot).map_err(LoadError)?;
        Dataset::new(snapshot, registry).map_err(|e| LoadError(e.to_string()))
    }
}
