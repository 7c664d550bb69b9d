use std::collections::HashMap;
use std::io::Read;
use std::path::Path;

use serde::Deserialize;

use super::{ClassifierError, Gender, GenderGuess, NameClassifier, OriginGuess};

/// Offline classifier backed by a CSV of `full_name,origin,gender,probability`
/// rows. A name may appear once per origin.
#[derive(Debug, Clone, Default)]
pub struct DictionaryClassifier {
    rows: HashMap<String, Vec<Row>>,
}

#[derive(Debug, Clone)]
struct Row {
    origin: String,
    gender: Gender,
    probability: f64,
}

#[derive(Deserialize)]
struct CsvRow {
    full_name: String,
    origin: String,
    gender: String,
    probability: f64,
}

#[derive(Debug, thiserror::Error)]
pub enum DictionaryError {
    #[error("cannot read name dictionary {path}: {message}")]
    Read { path: String, message: String },
    #[error("name dictionary row {row}: {message}")]
    Row { row: usize, message: String },
}

/// Case-folded with internal whitespace collapsed.
pub(crate) fn normalize_name(name: &str) -> String {
    name.split_whitespace()
        .map(str::to_lowercase)
        .collect::<Vec<_>>()
        .join(" ")
}

impl DictionaryClassifier {
    pub fn load(path: &Path) -> Result<Self, DictionaryError> {
        let file = std::fs::File::open(path).map_err(|e| DictionaryError::Read {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        Self::from_reader(file)
    }

    pub fn from_reader(reader: impl Read) -> Result<Self, DictionaryError> {
        let mut csv = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let mut dict = Self::default();
        for (i, record) in csv.deserialize::<CsvRow>().enumerate() {
            let row = i + 1;
            let record = record.map_err(|e| DictionaryError::Row {
                row,
                message: e.to_string(),
            })?;
            if !(0.0..=1.0).contains(&record.probability) {
                return Err(DictionaryError::Row {
                    row,
                    message: format!("probability {} outside [0, 1]", record.probability),
                });
            }
            let key = normalize_name(&record.full_name);
            if key.is_empty() {
                return Err(DictionaryError::Row {
                    row,
                    message: "empty full_name".into(),
                });
            }
            let origin = record.origin.trim().to_uppercase();
            let entries = dict.rows.entry(key).or_default();
            if entries.iter().any(|r| r.origin == origin) {
                return Err(DictionaryError::Row {
                    row,
                    message: format!("duplicate entry for {:?} with origin {origin:?}", record.full_name),
                });
            }
            entries.push(Row {
                origin,
                gender: Gender::parse(&record.gender),
                probability: record.probability,
            });
        }
        Ok(dict)
    }

    pub fn len(&self) -> usize {
        self.rows.values().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    fn lookup(&self, full_name: &str) -> Result<Option<&[Row]>, ClassifierError> {
        let key = normalize_name(full_name);
        if key.is_empty() {
            return Err(ClassifierError::EmptyName);
        }
        Ok(self.rows.get(&key).map(Vec::as_slice))
    }
}

/// Highest probability first, then smallest origin code.
fn best<'a>(rows: impl Iterator<Item = &'a Row>) -> Option<&'a Row> {
    rows.min_by(|a, b| {
        b.probability
            .total_cmp(&a.probability)
            .then_with(|| a.origin.cmp(&b.origin))
    })
}

impl NameClassifier for DictionaryClassifier {
    fn classify_origin(&self, full_name: &str) -> Result<OriginGuess, ClassifierError> {
        let guess = self
            .lookup(full_name)?
            .and_then(|rows| best(rows.iter()))
            .map(|row| OriginGuess {
                origin: row.origin.clone(),
                probability: row.probability,
            });
        Ok(guess.unwrap_or(OriginGuess {
            origin: String::new(),
            probability: 0.0,
        }))
    }

    fn classify_gender(&self, full_name: &str, origin: &str) -> Result<GenderGuess, ClassifierError> {
        let origin = origin.trim().to_uppercase();
        let guess = self.lookup(full_name)?.and_then(|rows| {
            best(rows.iter().filter(|r| r.origin == origin)).or_else(|| best(rows.iter()))
        });
        Ok(match guess {
            Some(row) => GenderGuess {
                gender: row.gender.clone(),
                probability: row.probability,
            },
            None => GenderGuess {
                gender: Gender::Unknown,
                probability: 0.0,
            },
        })
    }
}
