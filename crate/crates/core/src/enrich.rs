//! The enrichment pass: identities, bots, affiliation and gender in one go.

use crate::demography::{apply_genders, GenderSettings, NameClassifier, OverrideTable};
use crate::identity::{
    apply_affiliations, detect_bots, resolve_identities, DomainRegistry, IdentityError, IdentityRegistry,
    IdentityRules,
};
use crate::ingest::EventSnapshot;

/// Everything enrichment needs besides the classifier.
#[derive(Debug, Clone, Default)]
pub struct Enrichment {
    pub rules: IdentityRules,
    pub domains: DomainRegistry,
    pub overrides: OverrideTable,
    pub settings: GenderSettings,
}

impl Enrichment {
    /// Resolves identities, flags bots, then assigns affiliation and gender.
    /// Bots are not sent to the classifier.
    pub fn run(
        &self,
        snapshot: &EventSnapshot,
        classifier: &dyn NameClassifier,
    ) -> Result<IdentityRegistry, IdentityError> {
        self.domains.validate()?;
        let mut registry = resolve_identities(snapshot, &self.rules)?;
        detect_bots(&mut registry, &self.rules);
        apply_affiliations(&mut registry, &self.domains);
        apply_genders(&mut registry, classifier, self.settings, &self.overrides);
        Ok(registry)
    }
}
