//! Question wording for mock responses. Plain wording reuses a few fixed
//! frames with raw identifiers; rich wording draws on schema descriptions,
//! sample values and a wide phrase bank.

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::forge::{DatabaseSchema, TableSchema};
use crate::sql::{summarize, AnalysisConfig, SqlFeatureSummary};
use crate::taxonomy::{forced_intent, heuristic_intent, CoreIntent, StatementType};

fn frames(intent: CoreIntent, stmt: StatementType, sql: &str) -> &'static [&'static str] {
    use CoreIntent::*;
    match intent {
        BasicQuery => &[
            "List the {c} of every {e} record.",
            "Show each {e} entry with its {c}.",
            "What {c} values are stored for {e}?",
        ],
        ConditionFiltering => &[
            "Show the {e} records whose {c} meets the condition.",
            "Find the {e} entries matching on {c}.",
            "Which {e} records have a qualifying {c}? Return only those.",
        ],
        SortingAndPagination => &[
            "List the {e} records sorted by {c}.",
            "Show {e} ordered by {c}, one page at a time.",
            "Give the {e} entries arranged by {c}.",
        ],
        BasicAggregation => &[
            "How many {e} records are there per {c}?",
            "What is the total {c} across {e}?",
            "Count the {e} entries by {c}.",
        ],
        TimeOperation => &[
            "For each {e} record, show the month of its {c}.",
            "Which dates are tied to {e} by {c}?",
            "Show the {e} entries by year along with {c}.",
        ],
        FormatTransformation => &[
            "Show the {c} of each {e} record converted to a readable format.",
            "Return the {c} of {e} formatted as text.",
            "Convert the {c} of {e} entries for display.",
        ],
        SetOperation => &[
            "List the {e} entries that appear in both result sets for {c}.",
            "Show the combined {e} results by {c}.",
            "Which {e} records are in common across the {c} lists?",
        ],
        DataChange => match stmt {
            StatementType::Insert => &[
                "Add a new {e} record with its {c}.",
                "Insert another {e} entry including {c}.",
                "Register a new {e} entry and fill in {c}.",
            ],
            StatementType::Delete => &[
                "Remove the {e} records identified by {c}.",
                "Delete the obsolete {e} entries.",
                "Purge the {e} entries selected through {c}.",
            ],
            _ => &[
                "Update the {c} of the {e} records.",
                "Change {c} for the affected {e} entries.",
                "Revise the stored {c} on {e}.",
            ],
        },
        StructureChange => {
            if sql.to_ascii_uppercase().contains("RENAME") {
                &[
                    "Rename part of the {e} table.",
                    "Give a clearer name to the {e} structure.",
                ]
            } else {
                &[
                    "Add a new column to the {e} table.",
                    "Extend the {e} table with an extra attribute.",
                ]
            }
        }
        DistributionAnalysis => &[
            "What is the distribution of {c} across {e}?",
            "Show the breakdown of {e} by {c}.",
            "How is {c} spread among {e} records?",
        ],
        AdvancedStatistics => &[
            "Rank the {e} records by {c}.",
            "What is the median {c} among {e}?",
            "Identify outliers in {c} for {e}.",
        ],
        TrendAnalysis => &[
            "What is the trend of {c} over time for {e}?",
            "How has {c} evolved over time across {e}?",
            "Show the growth in {c} for {e}.",
        ],
        BusinessCalculation => &[
            "What revenue does each {e} entry generate based on {c}?",
            "Compute the profit margin of {e} using {c}.",
            "What are the earnings per {e} by {c}?",
        ],
        BusinessRule => &[
            "Which {e} records are eligible under the {c} policy?",
            "Flag the {e} entries that violate the {c} rule.",
            "Which {e} entries qualify for the {c} tier?",
        ],
    }
}

const OPENERS: &[&str] = &[
    "For the upcoming board meeting,",
    "Quick request from the operations desk:",
    "Ahead of the audit,",
    "While preparing the regional briefing,",
    "Our analysts would like to know:",
    "Could you help with this?",
    "As part of the onboarding material,",
    "For a customer presentation,",
    "Before the planning workshop,",
    "Someone from finance asked:",
    "To settle a debate in the team,",
    "For the internal newsletter,",
    "When reviewing the archive,",
    "Looking at the current snapshot,",
    "Following up on yesterday's call,",
    "For a dashboard prototype,",
    "During the quality review,",
    "As a sanity check,",
    "For the stakeholder update,",
    "Just curious:",
];

const CLOSERS: &[&str] = &[
    "Please keep the answer concise.",
    "Thanks in advance.",
    "This feeds into the operations review.",
    "We need it before Friday's meeting.",
    "A short answer is fine.",
    "It helps us prioritize upcoming work.",
    "The leadership group asked for it.",
    "This supports a pilot with a partner.",
    "We are cross-checking a spreadsheet.",
    "It should match what the portal shows.",
    "The answer goes into a slide deck.",
    "Our field staff rely on this.",
    "This is part of a data cleanup effort.",
    "Accuracy matters more than speed here.",
    "Let me know if anything looks odd.",
];

/// Table named first in the statement text, falling back to the first table.
pub(crate) fn main_table<'a>(sql: &str, schema: &'a DatabaseSchema) -> Option<&'a TableSchema> {
    let lower = sql.to_ascii_lowercase();
    schema
        .tables
        .iter()
        .filter_map(|t| word_position(&lower, &t.name.to_ascii_lowercase()).map(|p| (p, t)))
        .min_by_key(|(p, _)| *p)
        .map(|(_, t)| t)
        .or(schema.tables.first())
}

fn word_position(hay: &str, word: &str) -> Option<usize> {
    let is_word = |c: char| c.is_ascii_alphanumeric() || c == '_';
    let mut from = 0;
    while let Some(i) = hay[from..].find(word) {
        let at = from + i;
        let before = hay[..at].chars().next_back().is_none_or(|c| !is_word(c));
        let after = hay[at + word.len()..].chars().next().is_none_or(|c| !is_word(c));
        if before && after {
            return Some(at);
        }
        from = at + word.len();
    }
    None
}

/// Non-key column of `t` mentioned earliest in the statement.
fn focus_column<'a>(sql: &str, t: &'a TableSchema) -> &'a str {
    let lower = sql.to_ascii_lowercase();
    t.columns
        .iter()
        .filter(|c| !t.primary_key.contains(&c.name))
        .filter_map(|c| word_position(&lower, &c.name.to_ascii_lowercase()).map(|p| (p, c.name.as_str())))
        .min_by_key(|(p, _)| *p)
        .map(|(_, n)| n)
        .unwrap_or_else(|| t.columns[0].name.as_str())
}

fn described(text: &str, fallback: &str) -> String {
    let t = text.trim().trim_end_matches('.').trim();
    if t.is_empty() || t.len() > 60 || t.contains('=') || t.contains(';') {
        fallback.replace('_', " ")
    } else {
        let mut c = t.chars();
        match c.next() {
            Some(f) => f.to_lowercase().chain(c).collect(),
            None => fallback.replace('_', " "),
        }
    }
}

fn sample_words(t: &TableSchema, rng: &mut ChaCha8Rng) -> Vec<String> {
    let mut values: Vec<String> = t
        .sample_rows
        .iter()
        .flatten()
        .filter_map(|v| v.as_str())
        .filter(|s| s.len() <= 30 && s.chars().any(|c| c.is_alphabetic()) && !s.contains('{'))
        .map(str::to_string)
        .collect();
    values.sort();
    values.dedup();
    let mut out = Vec::new();
    for _ in 0..2 {
        if values.is_empty() {
            break;
        }
        let i = rng.random_range(0..values.len());
        out.push(values.swap_remove(i));
    }
    out
}

fn fill(frame: &str, e: &str, c: &str) -> String {
    frame.replace("{e}", e).replace("{c}", c)
}

fn lower_first(s: &str) -> String {
    let mut c = s.chars();
    match c.next() {
        Some(f) => f.to_lowercase().chain(c).collect(),
        None => String::new(),
    }
}

fn accepts(q: &str, intent: CoreIntent, summary: &SqlFeatureSummary) -> bool {
    forced_intent(summary.statement_type).is_some() || heuristic_intent(q, summary) == intent
}

/// A question for `sql` on `schema` that the heuristic classifier maps
/// to `intent`, when any candidate wording achieves that.
pub fn phrase_question(intent: CoreIntent, sql: &str, schema: &DatabaseSchema, rich: bool, seed: u64) -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let summary = match summarize(sql, &AnalysisConfig::default()) {
        Ok(s) => s,
        Err(_) => return "Describe the stored records.".into(),
    };
    let Some(t) = main_table(sql, schema) else {
        return "Describe the stored records.".into();
    };
    let column = focus_column(sql, t);
    let all = frames(intent, summary.statement_type, sql);
    let first = rng.random_range(0..all.len());
    let order: Vec<&str> = (0..all.len()).map(|i| all[(first + i) % all.len()]).collect();

    let mut candidates = Vec::new();
    if rich {
        let e = described(&t.description, &t.name);
        let c = described(t.column(column).map(|x| x.description.as_str()).unwrap_or(""), column);
        let opener = *OPENERS.choose(&mut rng).unwrap();
        let closer = *CLOSERS.choose(&mut rng).unwrap();
        let samples = sample_words(t, &mut rng);
        let context = match samples.as_slice() {
            [a, b] => format!(" Entries like {a} and {b} are of particular interest."),
            [a] => format!(" Entries like {a} are of particular interest."),
            _ => String::new(),
        };
        for f in &order {
            let body = fill(f, &e, &c);
            candidates.push(format!("{opener} {}{context} {closer}", lower_first(&body)));
            candidates.push(format!("{opener} {} {closer}", lower_first(&body)));
            candidates.push(body);
        }
        for f in &order {
            let body = fill(f, &e, column);
            candidates.push(format!("{opener} {} {closer}", lower_first(&body)));
        }
    }
    for f in &order {
        candidates.push(fill(f, &t.name, column));
    }
    candidates
        .iter()
        .find(|q| accepts(q, intent, &summary))
        .or(candidates.last())
        .cloned()
        .unwrap_or_default()
}
