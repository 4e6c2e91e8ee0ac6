use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::instance::Phase;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Role {
    #[serde(rename = "CEO")]
    Ceo,
    #[serde(rename = "CPO")]
    Cpo,
    #[serde(rename = "CTO")]
    Cto,
    Programmer,
    Reviewer,
    Designer,
    Tester,
}

impl Role {
    pub const ALL: [Role; 7] = [
        Role::Ceo,
        Role::Cpo,
        Role::Cto,
        Role::Programmer,
        Role::Reviewer,
        Role::Designer,
        Role::Tester,
    ];

    pub fn title(self) -> &'static str {
        match self {
            Role::Ceo => "CEO",
            Role::Cpo => "CPO",
            Role::Cto => "CTO",
            Role::Programmer => "Programmer",
            Role::Reviewer => "Reviewer",
            Role::Designer => "Designer",
            Role::Tester => "Tester",
        }
    }

    pub fn duty(self) -> &'static str {
        match self {
            Role::Ceo => "decide on product direction and confirm requirements",
            Role::Cpo => "own the user-facing documentation and product quality",
            Role::Cto => "make technical decisions and guide the implementation",
            Role::Programmer => "write and fix code",
            Role::Reviewer => "review code and point out defects",
            Role::Designer => "design the user interface",
            Role::Tester => "run the software and report errors",
        }
    }
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.title())
    }
}

/// Instructor and assistant for a phase.
pub type RolePair = (Role, Role);

pub const FALLBACK_ROLES: RolePair = (Role::Ceo, Role::Programmer);

/// Which two roles hold the dialogue of each phase.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoleMap {
    pairs: BTreeMap<Phase, RolePair>,
}

impl RoleMap {
    pub fn new(pairs: BTreeMap<Phase, RolePair>) -> Self {
        RoleMap { pairs }
    }

    /// Unknown phases get the CEO/Programmer pair.
    pub fn roles_for(&self, phase: &Phase) -> RolePair {
        self.pairs.get(phase).copied().unwrap_or(FALLBACK_ROLES)
    }

    pub fn set(&mut self, phase: Phase, pair: RolePair) {
        self.pairs.insert(phase, pair);
    }
}

impl Default for RoleMap {
    fn default() -> Self {
        use Role::*;
        let groups: [(&[&str], RolePair); 5] = [
            (
                &["DemandAnalysis", "LanguageChoose", "DesignReview"],
                (Ceo, Cto),
            ),
            (
                &["Coding", "CodeComplete", "Annotation", "CodeConclusion"],
                (Cto, Programmer),
            ),
            (
                &[
                    "CodeReviewComment",
                    "CommentJudgement",
                    "CodeReviewModification",
                ],
                (Programmer, Reviewer),
            ),
            (
                &["TestErrorSummary", "TestModification"],
                (Programmer, Tester),
            ),
            (&["EnvironmentDoc", "Manual"], (Ceo, Cpo)),
        ];
        let mut pairs = BTreeMap::new();
        for (names, pair) in groups {
            for name in names {
                pairs.insert(Phase::new(name).expect("valid name"), pair);
            }
        }
        RoleMap { pairs }
    }
}
