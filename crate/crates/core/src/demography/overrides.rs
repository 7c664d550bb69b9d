use std::collections::BTreeMap;
use std::io::Read;
use std::path::Path;

use serde::Deserialize;

use super::dictionary::normalize_name;
use super::Gender;
use crate::identity::Identity;

/// Manually verified genders, keyed by identity id, profile key, username,
/// email or full name (all case-insensitive). CSV columns:
/// `identity_key,gender`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct OverrideTable {
    entries: BTreeMap<String, Gender>,
}

#[derive(Deserialize)]
struct CsvRow {
    identity_key: String,
    gender: String,
}

#[derive(Debug, thiserror::Error)]
pub enum OverrideError {
    #[error("cannot read overrides {path}: {message}")]
    Read { path: String, message: String },
    #[error("override row {row}: {message}")]
    Row { row: usize, message: String },
}

impl OverrideTable {
    pub fn load(path: &Path) -> Result<Self, OverrideError> {
        let file = std::fs::File::open(path).map_err(|e| OverrideError::Read {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        Self::from_reader(file)
    }

    pub fn from_reader(reader: impl Read) -> Result<Self, OverrideError> {
        let mut csv = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let mut pairs = Vec::new();
        for (i, row) in csv.deserialize::<CsvRow>().enumerate() {
            let row = row.map_err(|e| OverrideError::Row {
                row: i + 1,
                message: e.to_string(),
            })?;
            pairs.push((row.identity_key, row.gender));
        }
        Self::from_pairs(pairs)
    }

    pub fn from_pairs<K: AsRef<str>, G: AsRef<str>>(
        pairs: impl IntoIterator<Item = (K, G)>,
    ) -> Result<Self, OverrideError> {
        let mut entries = BTreeMap::new();
        for (i, (key, gender)) in pairs.into_iter().enumerate() {
            let key = normalize_name(key.as_ref());
            if key.is_empty() {
                return Err(OverrideError::Row {
                    row: i + 1,
                    message: "empty identity_key".into(),
                });
            }
            if entries.insert(key.clone(), Gender::parse(gender.as_ref())).is_some() {
                return Err(OverrideError::Row {
                    row: i + 1,
                    message: format!("duplicate identity_key {key:?}"),
                });
            }
        }
        Ok(Self { entries })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// The first entry matching the identity id, then a profile key, a
    /// username, an email, and finally the full name.
    pub fn lookup(&self, identity: &Identity) -> Option<&Gender> {
        if self.entries.is_empty() {
            return None;
        }
        let get = |k: &str| self.entries.get(&normalize_name(k));
        get(identity.identity_id.as_str())
            .or_else(|| identity.profile_keys().find_map(|k| get(k.as_str())))
            .or_else(|| identity.usernames().find_map(get))
            .or_else(|| identity.emails().find_map(get))
            .or_else(|| identity.profiles.iter().filter_map(|p| p.full_name.as_deref()).find_map(get))
    }
}
