use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::{Identity, IdentityError, ProfileKey};

const UNKNOWN_LABEL: &str = "Unknown";

/// Organization a contributor is attributed to.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub enum Affiliation {
    #[default]
    Unknown,
    Org(String),
}

impl Affiliation {
    pub fn label(&self) -> &str {
        match self {
            Affiliation::Unknown => UNKNOWN_LABEL,
            Affiliation::Org(name) => name,
        }
    }

    pub fn is_unknown(&self) -> bool {
        matches!(self, Affiliation::Unknown)
    }
}

impl fmt::Display for Affiliation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl Serialize for Affiliation {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.label())
    }
}

impl<'de> Deserialize<'de> for Affiliation {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let raw = String::deserialize(d)?;
        Ok(if raw == UNKNOWN_LABEL {
            Affiliation::Unknown
        } else {
            Affiliation::Org(raw)
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AffiliationEvidence {
    pub domain: String,
    pub email: String,
    pub profile: ProfileKey,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct AffiliationRecord {
    pub org_name: Affiliation,
    pub evidence: Option<AffiliationEvidence>,
}

/// Email domains that identify an employer, and those that do not.
///
/// ```json
/// {"corporate": {"google.com": "Google", "apple.com": "Apple"},
///  "freemail": ["gmail.com", "outlook.com"]}
/// ```
///
/// Subdomains inherit their parent's entry (`eng.google.com` is Google).
/// Domains in neither list are not corporate unless
/// `unlisted_domains_are_orgs` is set, in which case the domain itself names
/// the organization.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DomainRegistry {
    #[serde(default)]
    pub corporate: BTreeMap<String, String>,
    #[serde(default)]
    pub freemail: BTreeSet<String>,
    #[serde(default)]
    pub unlisted_domains_are_orgs: bool,
}

impl DomainRegistry {
    pub fn load(path: &Path) -> Result<Self, IdentityError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| IdentityError::Config(format!("{}: {e}", path.display())))?;
        let registry: Self = serde_json::from_str(&text)
            .map_err(|e| IdentityError::Config(format!("{}: {e}", path.display())))?;
        registry.validate()?;
        Ok(registry)
    }

    pub fn validate(&self) -> Result<(), IdentityError> {
        for (domain, org) in &self.corporate {
            if self.freemail.contains(domain) {
                return Err(IdentityError::Config(format!(
                    "{domain} is listed as both corporate and freemail"
                )));
            }
            if org == UNKNOWN_LABEL || org.trim().is_empty() {
                return Err(IdentityError::Config(format!(
                    "{domain}: organization name {org:?} is reserved"
                )));
            }
        }
        Ok(())
    }

    /// Organization for an email domain, if it is corporate.
    pub fn organization(&self, domain: &str) -> Option<String> {
        let domain = domain.trim().trim_end_matches('.').to_lowercase();
        let mut candidate = domain.as_str();
        loop {
            if let Some(org) = self.corporate.get(candidate) {
                return Some(org.clone());
            }
            if self.freemail.contains(candidate) {
                return None;
            }
            match candidate.split_once('.') {
                Some((_, parent)) if parent.contains('.') => candidate = parent,
                _ => break,
            }
        }
        (self.unlisted_domains_are_orgs && domain.contains('.')).then_some(domain)
    }
}

pub fn email_domain(email: &str) -> Option<&str> {
    email.rsplit_once('@').map(|(_, d)| d).filter(|d| !d.is_empty())
}

/// The organization of the corporate email seen most recently across the
/// identity's profiles; ties go to the lexicographically smallest
/// organization. Unknown when no email is corporate.
pub fn assign_affiliation(identity: &Identity, registry: &DomainRegistry) -> AffiliationRecord {
    let mut best: Option<(DateTime<Utc>, String, String, String, ProfileKey)> = None;
    for profile in &identity.profiles {
        for (email, last_seen) in &profile.emails {
            let Some(domain) = email_domain(email) else { continue };
            let Some(org) = registry.organization(domain) else { continue };
            let candidate = (*last_seen, org, email.clone(), domain.to_lowercase(), profile.key.clone());
            let better = match &best {
                None => true,
                Some(current) => {
                    candidate.0 > current.0
                        || (candidate.0 == current.0
                            && (&candidate.1, &candidate.2) < (&current.1, &current.2))
                }
            };
            if better {
                best = Some(candidate);
            }
        }
    }
    match best {
        None => AffiliationRecord::default(),
        Some((_, org, email, domain, profile)) => AffiliationRecord {
            org_name: Affiliation::Org(org),
            evidence: Some(AffiliationEvidence {
                domain,
                email,
                profile,
            }),
        },
    }
}
