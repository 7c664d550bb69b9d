//! Contributor identities: profile merging, bot flags and affiliation.
//!
//! Every distinct account seen in the event log becomes a profile, keyed by
//! [`ProfileKey`]. Profiles that share an email address or a username, or
//! that a manual merge rule names together, form one [`Identity`]. Manual
//! splits keep two profiles in different identities even when shared
//! attributes would otherwise link them.

mod affiliation;
mod rules;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::demography::GenderRecord;
use crate::ingest::{EventSnapshot, RawProfile, SourceKind};

pub use affiliation::{
    assign_affiliation, email_domain, Affiliation, AffiliationEvidence, AffiliationRecord,
    DomainRegistry,
};
pub use rules::{default_bot_patterns, wildcard_match, IdentityRules, MergeRule, SplitRule};

#[derive(Debug, thiserror::Error)]
pub enum IdentityError {
    #[error("conflicting identity rules {}: {message}", rule_ids.join(", "))]
    RuleConflict {
        rule_ids: Vec<String>,
        message: String,
    },
    #[error("invalid identity configuration: {0}")]
    Config(String),
}

/// Identifies one account on one platform: `source:username`, or
/// `source:<email>` for accounts known only by email. Always lowercase.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(from = "String", into = "String")]
pub struct ProfileKey(String);

impl ProfileKey {
    pub fn of(profile: &RawProfile) -> Self {
        let source = profile.source_kind;
        match (&profile.username, &profile.email) {
            (Some(user), _) => Self(format!("{source}:{}", user.trim().to_lowercase())),
            (None, Some(email)) => Self(format!("{source}:<{}>", email.trim().to_lowercase())),
            (None, None) => Self(format!("{source}:")),
        }
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl From<String> for ProfileKey {
    fn from(raw: String) -> Self {
        Self(raw.trim().to_lowercase())
    }
}

impl From<&str> for ProfileKey {
    fn from(raw: &str) -> Self {
        Self::from(raw.to_string())
    }
}

impl From<ProfileKey> for String {
    fn from(key: ProfileKey) -> Self {
        key.0
    }
}

impl fmt::Display for ProfileKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct IdentityId(String);

impl IdentityId {
    /// Hash of the sorted member profile keys.
    pub fn for_profiles<'a>(keys: impl IntoIterator<Item = &'a ProfileKey>) -> Self {
        let sorted: BTreeSet<&str> = keys.into_iter().map(ProfileKey::as_str).collect();
        let mut hasher = Sha256::new();
        for key in sorted {
            hasher.update(key.as_bytes());
            hasher.update(b"\n");
        }
        let digest = hasher.finalize();
        let hex: String = digest[..8].iter().map(|b| format!("{b:02x}")).collect();
        Self(format!("id-{hex}"))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl From<&str> for IdentityId {
    fn from(raw: &str) -> Self {
        Self(raw.to_string())
    }
}

impl fmt::Display for IdentityId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Everything observed about one profile across the event log.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProfileSummary {
    pub key: ProfileKey,
    pub source_kind: SourceKind,
    pub username: Option<String>,
    /// Lowercased email address → last time it appeared on an event.
    pub emails: BTreeMap<String, DateTime<Utc>>,
    pub full_name: Option<String>,
    pub profile_url: Option<String>,
    pub first_active: DateTime<Utc>,
    pub last_active: DateTime<Utc>,
    pub event_count: u64,
}

impl ProfileSummary {
    fn new(key: ProfileKey, profile: &RawProfile, at: DateTime<Utc>) -> Self {
        Self {
            key,
            source_kind: profile.source_kind,
            username: None,
            emails: BTreeMap::new(),
            full_name: None,
            profile_url: None,
            first_active: at,
            last_active: at,
            event_count: 0,
        }
    }

    /// Folds in one event. The result does not depend on event order.
    fn observe(&mut self, profile: &RawProfile, at: DateTime<Utc>) {
        self.event_count += 1;
        self.first_active = self.first_active.min(at);
        self.last_active = self.last_active.max(at);
        if let Some(email) = &profile.email {
            let seen = self.emails.entry(email.to_lowercase()).or_insert(at);
            *seen = (*seen).max(at);
        }
        keep_min(&mut self.username, profile.username.as_deref());
        keep_min(&mut self.profile_url, profile.profile_url.as_deref());
        if let Some(name) = profile.full_name.as_deref() {
            let better = match &self.full_name {
                None => true,
                Some(current) => prefer_name(name, current),
            };
            if better {
                self.full_name = Some(name.to_string());
            }
        }
    }
}

fn keep_min(slot: &mut Option<String>, candidate: Option<&str>) {
    if let Some(c) = candidate {
        if slot.as_deref().is_none_or(|cur| c < cur) {
            *slot = Some(c.to_string());
        }
    }
}

/// Longer names win; equal lengths fall back to lexicographic order.
fn prefer_name(candidate: &str, current: &str) -> bool {
    let (a, b) = (candidate.chars().count(), current.chars().count());
    a > b || (a == b && candidate < current)
}

/// A merged human (or bot) contributor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Identity {
    pub identity_id: IdentityId,
    /// Member profiles sorted by key.
    pub profiles: Vec<ProfileSummary>,
    pub display_name: String,
    pub is_bot: bool,
    pub affiliation: AffiliationRecord,
    pub gender: GenderRecord,
}

impl Identity {
    fn from_profiles(mut profiles: Vec<ProfileSummary>) -> Self {
        profiles.sort_by(|a, b| a.key.cmp(&b.key));
        let identity_id = IdentityId::for_profiles(profiles.iter().map(|p| &p.key));
        let display_name = profiles
            .iter()
            .filter_map(|p| p.full_name.as_deref())
            .fold(None::<&str>, |best, name| match best {
                Some(b) if !prefer_name(name, b) => Some(b),
                _ => Some(name),
            })
            .or_else(|| profiles.iter().filter_map(|p| p.username.as_deref()).min())
            .map(str::to_string)
            .unwrap_or_else(|| {
                profiles
                    .iter()
                    .flat_map(|p| p.emails.keys())
                    .next()
                    .cloned()
                    .unwrap_or_else(|| profiles[0].key.to_string())
            });
        Self {
            identity_id,
            profiles,
            display_name,
            is_bot: false,
            affiliation: AffiliationRecord::default(),
            gender: GenderRecord::default(),
        }
    }

    pub fn profile_keys(&self) -> impl Iterator<Item = &ProfileKey> {
        self.profiles.iter().map(|p| &p.key)
    }

    /// Longest full name on any profile.
    pub fn full_name(&self) -> Option<&str> {
        self.profiles
            .iter()
            .filter_map(|p| p.full_name.as_deref())
            .fold(None, |best, name| match best {
                Some(b) if !prefer_name(name, b) => Some(b),
                _ => Some(name),
            })
    }

    pub fn usernames(&self) -> impl Iterator<Item = &str> {
        self.profiles.iter().filter_map(|p| p.username.as_deref())
    }

    pub fn emails(&self) -> impl Iterator<Item = &str> {
        self.profiles.iter().flat_map(|p| p.emails.keys().map(String::as_str))
    }

    pub fn first_active(&self) -> DateTime<Utc> {
        self.profiles.iter().map(|p| p.first_active).min().expect("identities have profiles")
    }

    pub fn last_active(&self) -> DateTime<Utc> {
        self.profiles.iter().map(|p| p.last_active).max().expect("identities have profiles")
    }
}

/// All identities, indexed by id and by member profile key.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct IdentityRegistry {
    identities: BTreeMap<IdentityId, Identity>,
    by_profile: BTreeMap<ProfileKey, IdentityId>,
}

#[derive(Serialize, Deserialize)]
struct RegistryFile {
    identities: Vec<Identity>,
}

impl Serialize for IdentityRegistry {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        RegistryFile {
            identities: self.identities.values().cloned().collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for IdentityRegistry {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let file = RegistryFile::deserialize(d)?;
        Self::from_identities(file.identities).map_err(serde::de::Error::custom)
    }
}

impl IdentityRegistry {
    pub fn from_identities(identities: Vec<Identity>) -> Result<Self, String> {
        let mut registry = Self::default();
        for identity in identities {
            if identity.profiles.is_empty() {
                return Err(format!("identity {} has no profiles", identity.identity_id));
            }
            for key in identity.profile_keys() {
                if registry
                    .by_profile
                    .insert(key.clone(), identity.identity_id.clone())
                    .is_some()
                {
                    return Err(format!("profile {key} belongs to two identities"));
                }
            }
            registry
                .identities
                .insert(identity.identity_id.clone(), identity);
        }
        Ok(registry)
    }

    pub fn len(&self) -> usize {
        self.identities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.identities.is_empty()
    }

    pub fn get(&self, id: &IdentityId) -> Option<&Identity> {
        self.identities.get(id)
    }

    pub fn iter(&self) -> impl Iterator<Item = &Identity> {
        self.identities.values()
    }

    pub fn iter_mut(&mut self) -> impl Iterator<Item = &mut Identity> {
        self.identities.values_mut()
    }

    pub fn id_for_key(&self, key: &ProfileKey) -> Option<&IdentityId> {
        self.by_profile.get(key)
    }

    pub fn identity_of(&self, profile: &RawProfile) -> Option<&Identity> {
        self.id_for_key(&ProfileKey::of(profile))
            .and_then(|id| self.identities.get(id))
    }

    /// Profile key → identity id for every observed profile.
    pub fn profile_index(&self) -> &BTreeMap<ProfileKey, IdentityId> {
        &self.by_profile
    }
}

struct DisjointSets {
    parent: Vec<usize>,
}

impl DisjointSets {
    fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, x: usize) -> usize {
        let mut root = x;
        while self.parent[root] != root {
            root = self.parent[root];
        }
        let mut cur = x;
        while self.parent[cur] != root {
            let next = self.parent[cur];
            self.parent[cur] = root;
            cur = next;
        }
        root
    }

    /// Smaller root index wins so results do not depend on call order.
    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            let (keep, drop) = if ra < rb { (ra, rb) } else { (rb, ra) };
            self.parent[drop] = keep;
        }
    }
}

/// Collects every profile in the snapshot, keyed and sorted.
pub fn collect_profiles(snapshot: &EventSnapshot) -> BTreeMap<ProfileKey, ProfileSummary> {
    let mut profiles: BTreeMap<ProfileKey, ProfileSummary> = BTreeMap::new();
    for event in snapshot.events() {
        let key = ProfileKey::of(&event.actor);
        profiles
            .entry(key.clone())
            .or_insert_with(|| ProfileSummary::new(key, &event.actor, event.timestamp))
            .observe(&event.actor, event.timestamp);
    }
    profiles
}

/// Merges the snapshot's profiles into identities.
///
/// Merge rules apply first. Shared-email and shared-username links are then
/// applied in sorted order, skipping any link that would put both profiles
/// of a split rule into one identity.
pub fn resolve_identities(
    snapshot: &EventSnapshot,
    rules: &IdentityRules,
) -> Result<IdentityRegistry, IdentityError> {
    rules.validate()?;
    let profiles = collect_profiles(snapshot);
    let keys: Vec<&ProfileKey> = profiles.keys().collect();
    let index: BTreeMap<&ProfileKey, usize> = keys.iter().enumerate().map(|(i, k)| (*k, i)).collect();
    let mut sets = DisjointSets::new(keys.len());

    let splits: Vec<(usize, usize, String)> = rules
        .manual_splits
        .iter()
        .enumerate()
        .filter_map(|(i, rule)| {
            let (a, b) = rule.pair();
            Some((*index.get(a)?, *index.get(b)?, rule.id(i)))
        })
        .collect();

    for (mi, merge) in rules.manual_merges.iter().enumerate() {
        let members: Vec<usize> = merge.profiles().iter().filter_map(|k| index.get(k).copied()).collect();
        for pair in members.windows(2) {
            sets.union(pair[0], pair[1]);
        }
        for (a, b, split_id) in &splits {
            if sets.find(*a) == sets.find(*b) {
                return Err(IdentityError::RuleConflict {
                    rule_ids: vec![merge.id(mi), split_id.clone()],
                    message: format!("merges join {} and {}", keys[*a], keys[*b]),
                });
            }
        }
    }

    let mut by_attribute: BTreeMap<String, BTreeSet<usize>> = BTreeMap::new();
    for (i, profile) in profiles.values().enumerate() {
        for email in profile.emails.keys() {
            by_attribute.entry(format!("email:{email}")).or_default().insert(i);
        }
        if let Some(user) = &profile.username {
            by_attribute
                .entry(format!("user:{}", user.to_lowercase()))
                .or_default()
                .insert(i);
        }
    }
    let mut links: BTreeSet<(usize, usize)> = BTreeSet::new();
    for members in by_attribute.values() {
        let members: Vec<usize> = members.iter().copied().collect();
        for (x, &a) in members.iter().enumerate() {
            for &b in &members[x + 1..] {
                links.insert((a, b));
            }
        }
    }
    for (a, b) in links {
        let (ra, rb) = (sets.find(a), sets.find(b));
        if ra == rb {
            continue;
        }
        let blocked = splits.iter().any(|(x, y, _)| {
            let (rx, ry) = (sets.find(*x), sets.find(*y));
            (rx == ra && ry == rb) || (rx == rb && ry == ra)
        });
        if !blocked {
            sets.union(a, b);
        }
    }

    let mut components: BTreeMap<usize, Vec<ProfileSummary>> = BTreeMap::new();
    for (i, profile) in profiles.into_values().enumerate() {
        components.entry(sets.find(i)).or_default().push(profile);
    }
    let identities = components.into_values().map(Identity::from_profiles).collect();
    Ok(IdentityRegistry::from_identities(identities).expect("components partition the profiles"))
}

/// Flags identities whose usernames or names match the bot rules.
pub fn detect_bots(registry: &mut IdentityRegistry, rules: &IdentityRules) {
    for identity in registry.iter_mut() {
        identity.is_bot = identity.profiles.iter().any(|p| {
            p.username.as_deref().is_some_and(|u| rules.is_bot_name(u))
                || p.full_name.as_deref().is_some_and(|n| rules.is_bot_name(n))
        });
    }
}

pub fn apply_affiliations(registry: &mut IdentityRegistry, domains: &DomainRegistry) {
    for identity in registry.iter_mut() {
        identity.affiliation = assign_affiliation(identity, domains);
    }
}
