//! The project file, `tapestry.toml` by default.
//!
//! ```toml
//! project = "demo"
//! store = "store"                      # event store directory
//! domains = "domains.json"             # corporate and freemail domains
//! identity_rules = "identity_rules.json"
//! gender_dictionary = "names.csv"      # or a [remote_classifier] table
//! overrides = "overrides.csv"
//! threshold = 0.9
//!
//! [[sources]]
//! kind = "github"                      # github | git | qa_forum | fixture
//! locator = "owner/name"
//! credentials_ref = "GITHUB_TOKEN"     # environment variable, never the token
//! poll_interval = "24h"
//!
//! [serve]
//! bind = "127.0.0.1"
//! port = 8080
//! cors_origins = ["http://localhost:5173"]
//! poll_interval = "1m"
//! ```
//!
//! Relative paths, including file-based source locators, are resolved
//! against the directory holding the config file.

use std::net::IpAddr;
use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::Deserialize;
use tapestry_core::demography::{DictionaryClassifier, OverrideTable, RemoteClassifier, RemoteConfig};
use tapestry_core::identity::DomainRegistry;
use tapestry_core::ingest::SourceConfig;
use tapestry_core::{Enrichment, GenderSettings, IdentityRules, NameClassifier, SourceKind};

use crate::CliError;

fn default_threshold() -> f64 {
    0.9
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ServeSection {
    pub bind: Option<IpAddr>,
    pub port: Option<u16>,
    #[serde(default)]
    pub cors_origins: Vec<String>,
    #[serde(default, with = "humantime_serde")]
    pub poll_interval: Option<Duration>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CliConfig {
    pub project: String,
    pub store: PathBuf,
    pub domains: Option<PathBuf>,
    pub identity_rules: Option<PathBuf>,
    pub gender_dictionary: Option<PathBuf>,
    pub remote_classifier: Option<RemoteConfig>,
    pub overrides: Option<PathBuf>,
    #[serde(default = "default_threshold")]
    pub threshold: f64,
    #[serde(default)]
    pub origin_threshold: f64,
    #[serde(default)]
    pub sources: Vec<SourceConfig>,
    #[serde(default)]
    pub serve: ServeSection,
}

/// Classifier shared with the server's background reloads.
pub type Classifier = Box<dyn NameClassifier + Send + Sync>;

impl CliConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::usage(format!("cannot read config {}: {e}", path.display())))?;
        let mut config: CliConfig = toml::from_str(&text)
            .map_err(|e| CliError::usage(format!("invalid config {}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        config.resolve(base);
        config.validate()?;
        Ok(config)
    }

    fn resolve(&mut self, base: &Path) {
        let join = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        join(&mut self.store);
        for p in [
            &mut self.domains,
            &mut self.identity_rules,
            &mut self.gender_dictionary,
            &mut self.overrides,
        ]
        .into_iter()
        .flatten()
        {
            join(p);
        }
        for source in &mut self.sources {
            if source.source_kind != SourceKind::Github && Path::new(&source.locator).is_relative() {
                source.locator = base.join(&source.locator).to_string_lossy().into_owned();
            }
        }
    }

    fn validate(&self) -> Result<(), CliError> {
        self.settings()?;
        if self.gender_dictionary.is_some() && self.remote_classifier.is_some() {
            return Err(CliError::usage(
                "set either gender_dictionary or remote_classifier, not both",
            ));
        }
        for source in &self.sources {
            source.validate().map_err(|e| CliError::usage(e.to_string()))?;
        }
        Ok(())
    }

    pub fn settings(&self) -> Result<GenderSettings, CliError> {
        GenderSettings::new(self.threshold, self.origin_threshold).map_err(CliError::usage)
    }

    /// Rules, domains, overrides and thresholds. Referenced files must exist.
    pub fn enrichment(&self) -> Result<Enrichment, CliError> {
        let usage = |e: &dyn std::fmt::Display| CliError::usage(e.to_string());
        Ok(Enrichment {
            rules: match &self.identity_rules {
                Some(p) => IdentityRules::load(p).map_err(|e| usage(&e))?,
                None => IdentityRules::default(),
            },
            domains: match &self.domains {
                Some(p) => DomainRegistry::load(p).map_err(|e| usage(&e))?,
                None => DomainRegistry::default(),
            },
            overrides: match &self.overrides {
                Some(p) => OverrideTable::load(p).map_err(|e| usage(&e))?,
                None => OverrideTable::default(),
            },
            settings: self.settings()?,
        })
    }

    /// Without a dictionary or remote service every gender stays unknown
    /// unless overridden.
    pub fn classifier(&self) -> Result<Classifier, CliError> {
        if let Some(path) = &self.gender_dictionary {
            let dict = DictionaryClassifier::load(path).map_err(|e| CliError::usage(e.to_string()))?;
            return Ok(Box::new(dict));
        }
        if let Some(remote) = &self.remote_classifier {
            let client = RemoteClassifier::new(remote).map_err(|e| CliError::usage(e.to_string()))?;
            return Ok(Box::new(client));
        }
        Ok(Box::new(DictionaryClassifier::default()))
    }
}
