//! Source connectors. Each returns unfiltered, possibly invalid events;
//! [`super::fetch_source`] validates, applies `since` and sorts.

pub mod fixture;
pub mod git;
pub mod github;
pub mod qa;

use std::path::Path;

use super::IngestError;

fn read_file(path: &Path) -> Result<String, IngestError> {
    std::fs::read_to_string(path)
        .map_err(|e| IngestError::SourceUnavailable(format!("{}: {e}", path.display())))
}
