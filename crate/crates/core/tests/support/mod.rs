//! Shared test support: the standard fixture loader and brute-force oracles.
//!
//! The oracles re-derive every metric straight from the raw event list with
//! naive scans. They deliberately share no code with the metrics module
//! beyond the identity lookup.

#![allow(dead_code)]

pub mod checks;
pub mod oracle;

use std::path::{Path, PathBuf};

use tapestry_core::demography::{DictionaryClassifier, OverrideTable};
use tapestry_core::identity::{DomainRegistry, IdentityRules};
use tapestry_core::ingest::{fetch_source, SourceConfig};
use tapestry_core::{Dataset, Enrichment, EventSnapshot, GenderSettings, SourceKind};

pub fn standard_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures/standard")
}

pub struct Standard {
    pub snapshot: EventSnapshot,
    pub enrichment: Enrichment,
    pub dictionary: DictionaryClassifier,
}

pub fn load_standard() -> Standard {
    let dir = standard_dir();
    let config = SourceConfig::new(SourceKind::Fixture, dir.join("events.ndjson").to_string_lossy());
    let outcome = fetch_source(&config, None).unwrap();
    assert!(outcome.schema_errors.is_empty(), "{:?}", outcome.schema_errors);
    Standard {
        snapshot: EventSnapshot::new(outcome.events, None),
        enrichment: Enrichment {
            rules: IdentityRules::load(&dir.join("identity_rules.json")).unwrap(),
            domains: DomainRegistry::load(&dir.join("domains.json")).unwrap(),
            overrides: OverrideTable::load(&dir.join("overrides.csv")).unwrap(),
            settings: GenderSettings::default(),
        },
        dictionary: DictionaryClassifier::load(&dir.join("names.csv")).unwrap(),
    }
}

pub fn standard_dataset() -> Dataset {
    let s = load_standard();
    let registry = s.enrichment.run(&s.snapshot, &s.dictionary).unwrap();
    Dataset::new(s.snapshot, registry).unwrap()
}
