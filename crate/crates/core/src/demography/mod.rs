//! Name-based gender inference.
//!
//! Classification runs in two steps: guess the origin of a full name, then
//! guess gender from the name and that origin. Guesses below the confidence
//! threshold are reported as unknown. A manual override table takes
//! precedence over any classifier output.
//!
//! All probabilities are on a `[0, 1]` scale. Backends that report a signed
//! `[-1, +1]` score map it to a class by sign and a confidence by magnitude.

mod dictionary;
mod overrides;
mod remote;

use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::identity::{Identity, IdentityRegistry};

pub use dictionary::DictionaryClassifier;
pub use overrides::OverrideTable;
pub use remote::{RemoteClassifier, RemoteConfig};

pub const DEFAULT_THRESHOLD: f64 = 0.90;

/// Gender label. Labels beyond the three built-in ones can come from the
/// override table and are kept verbatim.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub enum Gender {
    Woman,
    Man,
    #[default]
    Unknown,
    Other(String),
}

impl Gender {
    pub fn as_str(&self) -> &str {
        match self {
            Gender::Woman => "woman",
            Gender::Man => "man",
            Gender::Unknown => "unknown",
            Gender::Other(label) => label,
        }
    }

    /// Accepts the usual spellings (`female`/`f`, `male`/`m`); anything
    /// else that is not empty becomes [`Gender::Other`].
    pub fn parse(raw: &str) -> Self {
        let label = raw.trim().to_lowercase();
        match label.as_str() {
            "woman" | "female" | "f" | "w" => Gender::Woman,
            "man" | "male" | "m" => Gender::Man,
            "" | "unknown" | "u" | "none" => Gender::Unknown,
            _ => Gender::Other(label),
        }
    }

    pub fn is_unknown(&self) -> bool {
        matches!(self, Gender::Unknown)
    }
}

impl fmt::Display for Gender {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl Serialize for Gender {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.as_str())
    }
}

impl<'de> Deserialize<'de> for Gender {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        Ok(Gender::parse(&String::deserialize(d)?))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Classifier,
    Override,
    #[default]
    None,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct GenderRecord {
    pub gender: Gender,
    pub probability: f64,
    pub origin: Option<String>,
    pub provenance: Provenance,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OriginGuess {
    pub origin: String,
    pub probability: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenderGuess {
    pub gender: Gender,
    pub probability: f64,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ClassifierError {
    #[error("name is empty")]
    EmptyName,
    #[error("classifier unavailable: {0}")]
    Unavailable(String),
}

/// A two-step name classifier. Implementations must be deterministic for a
/// given name.
pub trait NameClassifier {
    /// Most likely origin of `full_name`. Unknown names give `("", 0.0)`.
    fn classify_origin(&self, full_name: &str) -> Result<OriginGuess, ClassifierError>;

    /// Gender of `full_name` given an origin code (possibly empty). Unknown
    /// names give `(unknown, 0.0)`.
    fn classify_gender(&self, full_name: &str, origin: &str) -> Result<GenderGuess, ClassifierError>;
}

impl<T: NameClassifier + ?Sized> NameClassifier for &T {
    fn classify_origin(&self, full_name: &str) -> Result<OriginGuess, ClassifierError> {
        (**self).classify_origin(full_name)
    }

    fn classify_gender(&self, full_name: &str, origin: &str) -> Result<GenderGuess, ClassifierError> {
        (**self).classify_gender(full_name, origin)
    }
}

impl<T: NameClassifier + ?Sized> NameClassifier for Box<T> {
    fn classify_origin(&self, full_name: &str) -> Result<OriginGuess, ClassifierError> {
        (**self).classify_origin(full_name)
    }

    fn classify_gender(&self, full_name: &str, origin: &str) -> Result<GenderGuess, ClassifierError> {
        (**self).classify_gender(full_name, origin)
    }
}

/// Confidence cutoffs. Gender guesses below `threshold` become unknown;
/// origin guesses below `origin_threshold` are discarded before the gender
/// step (0 disables the origin cutoff).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GenderSettings {
    threshold: f64,
    origin_threshold: f64,
}

impl Default for GenderSettings {
    fn default() -> Self {
        Self {
            threshold: DEFAULT_THRESHOLD,
            origin_threshold: 0.0,
        }
    }
}

impl GenderSettings {
    pub fn new(threshold: f64, origin_threshold: f64) -> Result<Self, String> {
        if !(threshold > 0.0 && threshold <= 1.0) {
            return Err(format!("threshold must be in (0, 1], got {threshold}"));
        }
        if !(0.0..=1.0).contains(&origin_threshold) {
            return Err(format!("origin threshold must be in [0, 1], got {origin_threshold}"));
        }
        Ok(Self {
            threshold,
            origin_threshold,
        })
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    pub fn origin_threshold(&self) -> f64 {
        self.origin_threshold
    }
}

/// Gender record for one identity. Never fails: a missing name or an
/// unavailable classifier yields unknown.
pub fn resolve_gender(
    identity: &Identity,
    classifier: &dyn NameClassifier,
    settings: GenderSettings,
    overrides: &OverrideTable,
) -> GenderRecord {
    if let Some(gender) = overrides.lookup(identity) {
        return GenderRecord {
            gender: gender.clone(),
            probability: 1.0,
            origin: None,
            provenance: Provenance::Override,
        };
    }
    let Some(name) = identity.full_name().filter(|n| !n.trim().is_empty()) else {
        return GenderRecord::default();
    };
    classify_name(name, classifier, settings)
}

/// The two-step classification of a single name.
pub fn classify_name(name: &str, classifier: &dyn NameClassifier, settings: GenderSettings) -> GenderRecord {
    let origin = match classifier.classify_origin(name) {
        Ok(guess) if guess.probability >= settings.origin_threshold => guess.origin,
        Ok(_) => String::new(),
        Err(_) => return GenderRecord::default(),
    };
    let guess = match classifier.classify_gender(name, &origin) {
        Ok(guess) => guess,
        Err(_) => return GenderRecord::default(),
    };
    let confident = guess.probability >= settings.threshold;
    GenderRecord {
        gender: if confident { guess.gender } else { Gender::Unknown },
        probability: guess.probability,
        origin: (!origin.is_empty()).then_some(origin),
        provenance: Provenance::Classifier,
    }
}

/// Fills in the gender record of every identity. Bots stay unknown.
pub fn apply_genders(
    registry: &mut IdentityRegistry,
    classifier: &dyn NameClassifier,
    settings: GenderSettings,
    overrides: &OverrideTable,
) {
    for identity in registry.iter_mut() {
        identity.gender = if identity.is_bot {
            GenderRecord::default()
        } else {
            resolve_gender(identity, classifier, settings, overrides)
        };
    }
}
