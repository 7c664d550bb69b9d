use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{IdentityError, ProfileKey};

/// Manual identity curation plus bot detection settings.
///
/// ```json
/// {
///   "manual_merges": [["github:alice", "git:<alice@corp.com>"],
///                     {"id": "jdoe", "profiles": ["github:jd", "qa_forum:john doe"]}],
///   "manual_splits": [["github:sam", "git:<sam@example.com>"]],
///   "bot_patterns": ["*[bot]", "*-bot"],
///   "bot_list": ["project-ci"]
/// }
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentityRules {
    #[serde(default)]
    pub manual_merges: Vec<MergeRule>,
    #[serde(default)]
    pub manual_splits: Vec<SplitRule>,
    #[serde(default = "default_bot_patterns")]
    pub bot_patterns: Vec<String>,
    #[serde(default)]
    pub bot_list: Vec<String>,
}

pub fn default_bot_patterns() -> Vec<String> {
    vec!["*[bot]".to_string(), "*-bot".to_string()]
}

impl Default for IdentityRules {
    fn default() -> Self {
        Self {
            manual_merges: Vec::new(),
            manual_splits: Vec::new(),
            bot_patterns: default_bot_patterns(),
            bot_list: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MergeRule {
    Plain(Vec<ProfileKey>),
    Named { id: String, profiles: Vec<ProfileKey> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SplitRule {
    Plain([ProfileKey; 2]),
    Named { id: String, profiles: [ProfileKey; 2] },
}

impl MergeRule {
    pub fn profiles(&self) -> &[ProfileKey] {
        match self {
            MergeRule::Plain(p) | MergeRule::Named { profiles: p, .. } => p,
        }
    }

    pub fn id(&self, position: usize) -> String {
        match self {
            MergeRule::Plain(_) => format!("merge#{position}"),
            MergeRule::Named { id, .. } => id.clone(),
        }
    }
}

impl SplitRule {
    pub fn pair(&self) -> (&ProfileKey, &ProfileKey) {
        match self {
            SplitRule::Plain([a, b]) | SplitRule::Named { profiles: [a, b], .. } => (a, b),
        }
    }

    pub fn id(&self, position: usize) -> String {
        match self {
            SplitRule::Plain(_) => format!("split#{position}"),
            SplitRule::Named { id, .. } => id.clone(),
        }
    }
}

impl IdentityRules {
    pub fn load(path: &Path) -> Result<Self, IdentityError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| IdentityError::Config(format!("{}: {e}", path.display())))?;
        let rules: Self = serde_json::from_str(&text)
            .map_err(|e| IdentityError::Config(format!("{}: {e}", path.display())))?;
        rules.validate()?;
        Ok(rules)
    }

    /// Rejects a split whose two profiles some merge rule puts together, and
    /// a split of a profile from itself.
    pub fn validate(&self) -> Result<(), IdentityError> {
        for (si, split) in self.manual_splits.iter().enumerate() {
            let (a, b) = split.pair();
            if a == b {
                return Err(IdentityError::RuleConflict {
                    rule_ids: vec![split.id(si)],
                    message: format!("{a} cannot be split from itself"),
                });
            }
            for (mi, merge) in self.manual_merges.iter().enumerate() {
                let members: BTreeSet<&ProfileKey> = merge.profiles().iter().collect();
                if members.contains(a) && members.contains(b) {
                    return Err(IdentityError::RuleConflict {
                        rule_ids: vec![merge.id(mi), split.id(si)],
                        message: format!("{a} and {b} are both merged and split"),
                    });
                }
            }
        }
        Ok(())
    }

    /// Whether a username or display name looks like a bot.
    pub fn is_bot_name(&self, name: &str) -> bool {
        let lower = name.to_lowercase();
        self.bot_list.iter().any(|b| b.to_lowercase() == lower)
            || self
                .bot_patterns
                .iter()
                .any(|p| wildcard_match(&p.to_lowercase(), &lower))
    }
}

/// Matches `text` against `pattern`, where `*` stands for any run of
/// characters and every other character is literal (so `[bot]` matches the
/// literal suffix).
pub fn wildcard_match(pattern: &str, text: &str) -> bool {
    let pattern: Vec<char> = pattern.chars().collect();
    let text: Vec<char> = text.chars().collect();
    let (mut p, mut t) = (0, 0);
    let mut backtrack: Option<(usize, usize)> = None;
    while t < text.len() {
        if p < pattern.len() && pattern[p] == '*' {
            backtrack = Some((p, t));
            p += 1;
        } else if p < pattern.len() && pattern[p] == text[t] {
            p += 1;
            t += 1;
        } else if let Some((star, matched)) = backtrack {
            p = star + 1;
            t = matched + 1;
            backtrack = Some((star, matched + 1));
        } else {
            return false;
        }
    }
    pattern[p..].iter().all(|c| *c == '*')
}
