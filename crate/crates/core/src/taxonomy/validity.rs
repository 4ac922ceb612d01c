//! Validity rules V1–V8 over label combinations.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::categories::*;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Rule {
    V1,
    V2,
    V3,
    V4,
    V5,
    V6,
    V7,
    V8,
}

impl Rule {
    pub const ALL: [Rule; 8] = [Rule::V1, Rule::V2, Rule::V3, Rule::V4, Rule::V5, Rule::V6, Rule::V7, Rule::V8];

    pub fn description(self) -> &'static str {
        match self {
            Rule::V1 => "Data change intent iff statement is Insert, Update or Delete",
            Rule::V2 => "Structure change intent iff statement is Alter",
            Rule::V3 => "other intents require a Select statement",
            Rule::V4 => "Having requires Group by",
            Rule::V5 => "Set operation intent requires Union, Intersect or Except",
            Rule::V6 => "Sorting and Pagination requires Order by or Limit offset",
            Rule::V7 => "Time operation and Trend analysis require Specific time or Time function",
            Rule::V8 => "Alter carries no syntax structures and no key actions other than Cast",
        }
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Violation {
    pub rule: Rule,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.rule, self.message)
    }
}

/// Rules switched off in configuration are skipped entirely.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RuleToggles(pub BTreeSet<Rule>);

impl Default for RuleToggles {
    fn default() -> Self {
        Self(Rule::ALL.into_iter().collect())
    }
}

impl RuleToggles {
    pub fn enabled(&self, rule: Rule) -> bool {
        self.0.contains(&rule)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidityReport {
    pub violations: Vec<Violation>,
    /// Soft findings that never reject a combination.
    pub warnings: Vec<String>,
}

impl ValidityReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn rules(&self) -> Vec<Rule> {
        self.violations.iter().map(|v| v.rule).collect()
    }
}

/// All violated rules, in rule order, with every rule enabled.
pub fn validate_combination(labels: &TaxonomyLabels) -> ValidityReport {
    validate_with(labels, &RuleToggles::default())
}

pub fn validate_with(labels: &TaxonomyLabels, toggles: &RuleToggles) -> ValidityReport {
    use CoreIntent as I;
    use StatementType as T;
    let intent = labels.core_intent;
    let stmt = labels.statement_type;
    let structures = &labels.syntax_structures;
    let actions = &labels.key_actions;
    let mut report = ValidityReport::default();
    let mut fail = |rule: Rule, message: String| {
        if toggles.enabled(rule) {
            report.violations.push(Violation { rule, message });
        }
    };

    let dml = matches!(stmt, T::Insert | T::Update | T::Delete);
    if (intent == I::DataChange) != dml {
        fail(Rule::V1, format!("intent '{intent}' with statement '{stmt}'"));
    }
    if (intent == I::StructureChange) != (stmt == T::Alter) {
        fail(Rule::V2, format!("intent '{intent}' with statement '{stmt}'"));
    }
    if !matches!(intent, I::DataChange | I::StructureChange) && stmt != T::Select {
        fail(Rule::V3, format!("intent '{intent}' needs a Select statement, got '{stmt}'"));
    }
    if structures.contains(&SyntaxStructure::Having) && !structures.contains(&SyntaxStructure::GroupBy) {
        fail(Rule::V4, "Having without Group by".into());
    }
    let has_set_op = structures.iter().any(|s| s.is_set_operation());
    if intent == I::SetOperation && !has_set_op {
        fail(Rule::V5, "Set operation intent without Union, Intersect or Except".into());
    }
    if intent == I::SortingAndPagination
        && !structures.contains(&SyntaxStructure::OrderBy)
        && !structures.contains(&SyntaxStructure::LimitOffset)
    {
        fail(Rule::V6, "Sorting and Pagination without Order by or Limit offset".into());
    }
    if matches!(intent, I::TimeOperation | I::TrendAnalysis)
        && !actions.contains(&KeyAction::SpecificTime)
        && !actions.contains(&KeyAction::TimeFunction)
    {
        fail(Rule::V7, format!("'{intent}' without Specific time or Time function"));
    }
    if stmt == T::Alter && (!structures.is_empty() || actions.iter().any(|a| *a != KeyAction::Cast)) {
        fail(Rule::V8, "Alter with syntax structures or non-Cast key actions".into());
    }

    if toggles.enabled(Rule::V5) && has_set_op && intent != I::SetOperation {
        report
            .warnings
            .push(format!("V5 (soft): set-operation structure under intent '{intent}'"));
    }
    report
}
