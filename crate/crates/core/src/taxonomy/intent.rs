//! Core-intent classification and whole-pair labelling.

use serde::{Deserialize, Serialize};

use super::categories::*;
use super::validity::{validate_with, RuleToggles, ValidityReport};
use super::TaxonomyError;
use crate::gateway::{bindings, FieldType, Gateway, GatewayError, Shape, TemplateName};
use crate::sql::{parse_sql, summarize_tree, AnalysisConfig, Dialect, SqlFeatureSummary};

#[derive(Clone, Copy)]
pub enum IntentMode<'a> {
    Heuristic,
    Llm(&'a Gateway),
}

impl std::fmt::Debug for IntentMode<'_> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            IntentMode::Heuristic => f.write_str("Heuristic"),
            IntentMode::Llm(_) => f.write_str("Llm"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Guard {
    None,
    Time,
    SetOp,
    OrderOrLimit,
}

impl Guard {
    fn holds(self, s: &SqlFeatureSummary) -> bool {
        match self {
            Guard::None => true,
            Guard::Time => {
                s.key_actions.contains(&KeyAction::SpecificTime) || s.key_actions.contains(&KeyAction::TimeFunction)
            }
            Guard::SetOp => s.syntax_structures.iter().any(|x| x.is_set_operation()),
            Guard::OrderOrLimit => {
                s.syntax_structures.contains(&SyntaxStructure::OrderBy)
                    || s.syntax_structures.contains(&SyntaxStructure::LimitOffset)
            }
        }
    }
}

/// Ordered keyword groups; the first group whose guard holds and whose
/// phrase occurs in the question decides the intent.
const KEYWORD_GROUPS: &[(CoreIntent, Guard, &[&str])] = &[
    (
        CoreIntent::TrendAnalysis,
        Guard::Time,
        &[
            "trend", "trends", "trending", "over time", "growth", "grow", "grew", "growing", "evolution", "evolve",
            "evolved", "month over month", "year over year", "progression", "momentum", "trajectory",
        ],
    ),
    (
        CoreIntent::DistributionAnalysis,
        Guard::None,
        &[
            "distribution", "distributed", "spread", "frequency", "frequencies", "histogram", "proportion",
            "proportions", "share of", "breakdown", "bucket", "buckets", "dispersion",
        ],
    ),
    (
        CoreIntent::AdvancedStatistics,
        Guard::None,
        &[
            "standard deviation", "variance", "median", "percentile", "percentiles", "quartile", "correlation",
            "rank", "ranking", "ranked", "cumulative", "running total", "moving average", "z score", "outlier",
            "outliers",
        ],
    ),
    (
        CoreIntent::BusinessCalculation,
        Guard::None,
        &[
            "revenue", "revenues", "profit", "profits", "margin", "margins", "kpi", "kpis", "roi",
            "return on investment", "turnover", "gross", "net income", "commission", "lifetime value", "earnings",
            "payout", "payouts",
        ],
    ),
    (
        CoreIntent::BusinessRule,
        Guard::None,
        &[
            "policy", "policies", "rule", "rules", "eligible", "eligibility", "qualify", "qualifies", "compliance",
            "compliant", "violate", "violates", "violation", "violations", "must", "flag", "flagged", "classify",
            "categorize", "tier", "tiers",
        ],
    ),
    (
        CoreIntent::TimeOperation,
        Guard::Time,
        &[
            "date", "dates", "day", "days", "month", "months", "monthly", "year", "years", "yearly", "week", "weeks",
            "weekly", "hour", "hours", "duration", "since", "ago", "today", "elapsed", "timestamp", "recorded on",
            "calendar", "dated",
        ],
    ),
    (
        CoreIntent::FormatTransformation,
        Guard::None,
        &[
            "format", "formatted", "formatting", "convert", "converted", "conversion", "as text", "as integer",
            "uppercase", "lowercase", "upper case", "lower case", "concatenate", "concatenated", "rounded", "json",
            "string", "strings", "cast", "reformat", "reformatted",
        ],
    ),
    (
        CoreIntent::SetOperation,
        Guard::SetOp,
        &[
            "combined", "combine", "either", "both", "together with", "as well as", "union", "intersection",
            "overlap", "except", "excluding", "merged", "in common",
        ],
    ),
    (
        CoreIntent::SortingAndPagination,
        Guard::OrderOrLimit,
        &[
            "sorted", "sort", "order by", "ordered", "ascending", "descending", "alphabetical", "alphabetically",
            "page", "paginate", "paginated", "skip", "skipping", "arranged",
        ],
    ),
    (
        CoreIntent::BasicAggregation,
        Guard::None,
        &[
            "how many", "count", "counts", "number of", "total", "totals", "average", "avg", "sum", "mean",
            "tally", "aggregate",
        ],
    ),
    (
        CoreIntent::ConditionFiltering,
        Guard::None,
        &[
            "whose", "filter", "filtered", "only", "that have", "which have", "that are", "which are", "matching",
            "containing", "contains", "starting with", "where",
        ],
    ),
];

/// Lowercased words with `[a-z0-9_]` kept, padded with single spaces so
/// phrase search can match on word boundaries.
pub fn normalize_question(question: &str) -> String {
    let mut out = String::from(" ");
    let mut gap = true;
    for ch in question.chars() {
        if ch.is_alphanumeric() || ch == '_' {
            out.extend(ch.to_lowercase());
            gap = false;
        } else if !gap {
            out.push(' ');
            gap = true;
        }
    }
    if !gap {
        out.push(' ');
    }
    out
}

fn contains_phrase(normalized: &str, phrase: &str) -> bool {
    normalized.contains(&format!(" {phrase} "))
}

/// Intent forced by the statement type, if any.
pub fn forced_intent(statement: StatementType) -> Option<CoreIntent> {
    match statement {
        StatementType::Insert | StatementType::Update | StatementType::Delete => Some(CoreIntent::DataChange),
        StatementType::Alter => Some(CoreIntent::StructureChange),
        StatementType::Select => None,
    }
}

/// Keyword phrases that steer the heuristic towards `intent`.
pub fn intent_keywords(intent: CoreIntent) -> &'static [&'static str] {
    KEYWORD_GROUPS
        .iter()
        .find(|(i, _, _)| *i == intent)
        .map(|(_, _, k)| *k)
        .unwrap_or(&[])
}

/// Every keyword group, in rule order, whose guard holds for `summary`
/// and which occurs in `question`.
pub fn triggered_groups(question: &str, summary: &SqlFeatureSummary) -> Vec<CoreIntent> {
    let q = normalize_question(question);
    KEYWORD_GROUPS
        .iter()
        .filter(|(_, g, words)| g.holds(summary) && words.iter().any(|w| contains_phrase(&q, w)))
        .map(|(i, _, _)| *i)
        .collect()
}

/// Deterministic rule table: statement type first, then question keyword
/// groups, then the SQL shape.
pub fn heuristic_intent(question: &str, summary: &SqlFeatureSummary) -> CoreIntent {
    if let Some(i) = forced_intent(summary.statement_type) {
        return i;
    }
    let q = normalize_question(question);
    for (intent, guard, words) in KEYWORD_GROUPS {
        if guard.holds(summary) && words.iter().any(|w| contains_phrase(&q, w)) {
            return *intent;
        }
    }
    let ss = &summary.syntax_structures;
    if ss.iter().any(|s| s.is_set_operation()) {
        CoreIntent::SetOperation
    } else if summary.key_actions.contains(&KeyAction::AggregateFunction) || ss.contains(&SyntaxStructure::GroupBy) {
        CoreIntent::BasicAggregation
    } else if ss.contains(&SyntaxStructure::Where) {
        CoreIntent::ConditionFiltering
    } else if Guard::OrderOrLimit.holds(summary) {
        CoreIntent::SortingAndPagination
    } else {
        CoreIntent::BasicQuery
    }
}

pub fn classify_core_intent(
    question: &str,
    summary: &SqlFeatureSummary,
    mode: IntentMode<'_>,
) -> Result<CoreIntent, TaxonomyError> {
    if question.trim().is_empty() {
        return Err(TaxonomyError::EmptyQuestion);
    }
    if let Some(i) = forced_intent(summary.statement_type) {
        return Ok(i);
    }
    match mode {
        IntentMode::Heuristic => Ok(heuristic_intent(question, summary)),
        IntentMode::Llm(gateway) => {
            let names: Vec<&str> = CoreIntent::ALL.iter().map(|i| i.name()).collect();
            let b = bindings([
                ("question", question.to_string()),
                ("sql_features", serde_json::to_string(summary).expect("summary serializes")),
                ("intents", names.join(", ")),
            ]);
            let shape = Shape::object(&[("intent", FieldType::String)]);
            match gateway.complete_structured(TemplateName::IntentClassification, &b, "intent", &shape) {
                Ok((v, _)) => match v["intent"].as_str().and_then(|s| s.parse::<CoreIntent>().ok()) {
                    Some(i) => Ok(i),
                    None => {
                        log::warn!("intent classifier returned {}; using heuristic", v["intent"]);
                        Ok(heuristic_intent(question, summary))
                    }
                },
                Err(GatewayError::Extraction { source, .. }) => {
                    log::warn!("malformed intent response ({source}); using heuristic");
                    Ok(heuristic_intent(question, summary))
                }
                Err(e) => Err(e.into()),
            }
        }
    }
}

/// Labels for one pair, with any validity violations attached rather
/// than corrected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifiedPair {
    pub labels: TaxonomyLabels,
    #[serde(default, skip_serializing_if = "ValidityReport::is_clean")]
    pub validity: ValidityReport,
    pub summary: SqlFeatureSummary,
}

impl ValidityReport {
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty() && self.warnings.is_empty()
    }
}

pub fn classify_pair(
    question: &str,
    sql: &str,
    dialect: Dialect,
    mode: IntentMode<'_>,
    analysis: &AnalysisConfig,
    rules: &RuleToggles,
) -> Result<ClassifiedPair, TaxonomyError> {
    let tree = parse_sql(sql, dialect)?;
    let summary = summarize_tree(&tree, analysis)?;
    let core_intent = classify_core_intent(question, &summary, mode)?;
    let labels = TaxonomyLabels {
        core_intent,
        statement_type: summary.statement_type,
        syntax_structures: summary.syntax_structures.clone(),
        key_actions: summary.key_actions.clone(),
    };
    let validity = validate_with(&labels, rules);
    Ok(ClassifiedPair {
        labels,
        validity,
        summary,
    })
}

/// Heuristic classification with default analysis settings and rules.
pub fn classify_pair_default(question: &str, sql: &str) -> Result<ClassifiedPair, TaxonomyError> {
    classify_pair(
        question,
        sql,
        Dialect::Sqlite,
        IntentMode::Heuristic,
        &AnalysisConfig::default(),
        &RuleToggles::default(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sql::summarize;

    fn summary(sql: &str) -> SqlFeatureSummary {
        summarize(sql, &AnalysisConfig::default()).unwrap()
    }

    #[test]
    fn spec_examples() {
        let s = summary("SELECT COUNT(*) FROM orders");
        assert_eq!(heuristic_intent("How many orders were placed?", &s), CoreIntent::BasicAggregation);
        let s = summary("DELETE FROM users WHERE active = 0");
        assert_eq!(heuristic_intent("Delete all inactive users", &s), CoreIntent::DataChange);
        let s = summary("SELECT strftime('%m', d), SUM(x) FROM sales WHERE strftime('%Y', d) = '2023' GROUP BY 1");
        assert_eq!(heuristic_intent("Show the monthly revenue trend for 2023", &s), CoreIntent::TrendAnalysis);
    }

    #[test]
    fn pair_examples() {
        let p = classify_pair_default("List all employees", "SELECT * FROM employees").unwrap();
        assert_eq!(p.labels, TaxonomyLabels::new(CoreIntent::BasicQuery, StatementType::Select, [], []));
        let p = classify_pair_default("Add a phone column to customers", "ALTER TABLE customers ADD COLUMN phone TEXT")
            .unwrap();
        assert_eq!(p.labels, TaxonomyLabels::new(CoreIntent::StructureChange, StatementType::Alter, [], []));
        let p = classify_pair_default(
            "Top 5 products by sales",
            "SELECT p, SUM(s) FROM t GROUP BY p ORDER BY 2 DESC LIMIT 5",
        )
        .unwrap();
        assert_eq!(
            p.labels,
            TaxonomyLabels::new(
                CoreIntent::BasicAggregation,
                StatementType::Select,
                [SyntaxStructure::GroupBy, SyntaxStructure::OrderBy, SyntaxStructure::LimitOffset],
                [KeyAction::AggregateFunction]
            )
        );
        assert!(p.validity.is_valid());
    }

    #[test]
    fn guards_block_keywords() {
        // "sorted" needs Order by or Limit offset in the SQL.
        let s = summary("SELECT a FROM t WHERE a > 1");
        assert_eq!(heuristic_intent("Show the sorted values", &s), CoreIntent::ConditionFiltering);
        // Underscored identifiers are single words.
        let s = summary("SELECT event_date FROM t WHERE event_date > '2023-01-01'");
        assert_eq!(heuristic_intent("Show event_date values", &s), CoreIntent::ConditionFiltering);
        assert_eq!(heuristic_intent("Show the date values", &s), CoreIntent::TimeOperation);
    }

    #[test]
    fn empty_question_rejected() {
        let s = summary("SELECT 1");
        assert_eq!(
            classify_core_intent("  ", &s, IntentMode::Heuristic),
            Err(TaxonomyError::EmptyQuestion)
        );
    }
}
