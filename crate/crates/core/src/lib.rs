//! Community analytics for open source projects.
//!
//! The pipeline runs in four stages:
//!
//! 1. [`ingest`] pulls activity from GitHub, local git history, Q&A exports or
//!    recorded fixtures and appends it to an idempotent event log.
//! 2. [`identity`] merges per-platform profiles into contributors, flags bots
//!    and assigns organizational affiliation from email domains.
//! 3. [`demography`] infers gender from full names (origin first, then an
//!    origin-conditioned gender guess) behind a confidence threshold, with a
//!    manual override table.
//! 4. [`metrics`] and [`network`] compute turnover, retention, contribution
//!    series, attention tables and the PR communication graph, each of which
//!    can be disaggregated by gender or affiliation.
//!
//! [`report`] names every output so that the HTTP API and the CLI exporter
//! render byte-identical payloads.

pub mod demography;
pub mod enrich;
mod http;
pub mod identity;
pub mod ingest;
pub mod metrics;
pub mod month;
pub mod network;
pub mod report;

pub use demography::{Gender, GenderRecord, GenderSettings, NameClassifier, Provenance};
pub use enrich::Enrichment;
pub use identity::{Identity, IdentityId, IdentityRegistry, IdentityRules, ProfileKey};
pub use ingest::{ActivityEvent, EventKind, EventSnapshot, EventStore, RawProfile, SourceKind};
pub use metrics::{Dataset, FilterSpec, Lens, MetricSeries};
pub use month::Month;

