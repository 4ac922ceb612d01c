//! The four taxonomy dimensions. Display names double as serialization
//! keys and configuration keys, so they must stay stable.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

macro_rules! category {
    ($(#[$meta:meta])* $name:ident, $dim:literal { $($variant:ident => $label:literal),+ $(,)? }) => {
        $(#[$meta])*
        #[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
        pub enum $name {
            $($variant),+
        }

        impl $name {
            pub const ALL: &'static [$name] = &[$($name::$variant),+];
            pub const DIMENSION: &'static str = $dim;

            pub fn name(self) -> &'static str {
                match self {
                    $($name::$variant => $label),+
                }
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.name())
            }
        }

        impl FromStr for $name {
            type Err = UnknownCategory;

            fn from_str(s: &str) -> Result<Self, Self::Err> {
                let s = s.trim();
                $name::ALL
                    .iter()
                    .copied()
                    .find(|c| c.name().eq_ignore_ascii_case(s))
                    .ok_or_else(|| UnknownCategory {
                        dimension: $dim,
                        name: s.to_string(),
                    })
            }
        }

        impl Serialize for $name {
            fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
                s.serialize_str(self.name())
            }
        }

        impl<'de> Deserialize<'de> for $name {
            fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
                let s = String::deserialize(d)?;
                s.parse().map_err(serde::de::Error::custom)
            }
        }
    };
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown {dimension} category '{name}'")]
pub struct UnknownCategory {
    pub dimension: &'static str,
    pub name: String,
}

category!(
    CoreIntent, "core intent" {
        BasicQuery => "Basic query",
        ConditionFiltering => "Condition filtering",
        SortingAndPagination => "Sorting and Pagination",
        BasicAggregation => "Basic aggregation",
        TimeOperation => "Time operation",
        FormatTransformation => "Format transformation",
        SetOperation => "Set operation",
        DataChange => "Data change",
        StructureChange => "Structure change",
        DistributionAnalysis => "Distribution analysis",
        AdvancedStatistics => "Advanced statistics",
        TrendAnalysis => "Trend analysis",
        BusinessCalculation => "Business calculation",
        BusinessRule => "Business rule",
    }
);

category!(
    StatementType, "statement type" {
        Select => "Select",
        Update => "Update",
        Alter => "Alter",
        Delete => "Delete",
        Insert => "Insert",
    }
);

category!(
    SyntaxStructure, "syntax structure" {
        Where => "Where",
        OrderBy => "Order by",
        LimitOffset => "Limit offset",
        InnerJoin => "Inner join",
        CrossJoin => "Cross join",
        OuterJoin => "Outer join",
        GroupBy => "Group by",
        Having => "Having",
        Union => "Union",
        Intersect => "Intersect",
        Except => "Except",
        ScalarSubquery => "Scalar subquery",
        CorrelatedSubquery => "Correlated subquery",
        CommonTableExpression => "Common Table Expression",
    }
);

category!(
    KeyAction, "key action" {
        SpecificTime => "Specific time",
        WildcardFiltering => "Wildcard filtering",
        TimeFunction => "Time function",
        JsonFunction => "Json function",
        AggregateFunction => "Aggregate function",
        WindowFunction => "Window function",
        StringFunction => "String function",
        Cast => "Cast",
        ConditionJudgement => "Condition judgement",
    }
);

category!(
    ComplexityLevel, "complexity level" {
        Simple => "simple",
        Medium => "medium",
        Hard => "hard",
    }
);

impl SyntaxStructure {
    pub fn is_set_operation(self) -> bool {
        matches!(self, SyntaxStructure::Union | SyntaxStructure::Intersect | SyntaxStructure::Except)
    }
}

/// One text-SQL pair's position in all four dimensions.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct TaxonomyLabels {
    pub core_intent: CoreIntent,
    pub statement_type: StatementType,
    pub syntax_structures: BTreeSet<SyntaxStructure>,
    pub key_actions: BTreeSet<KeyAction>,
}

impl TaxonomyLabels {
    pub fn new(
        core_intent: CoreIntent,
        statement_type: StatementType,
        syntax_structures: impl IntoIterator<Item = SyntaxStructure>,
        key_actions: impl IntoIterator<Item = KeyAction>,
    ) -> Self {
        Self {
            core_intent,
            statement_type,
            syntax_structures: syntax_structures.into_iter().collect(),
            key_actions: key_actions.into_iter().collect(),
        }
    }

    /// Category names across all four dimensions.
    pub fn label_set(&self) -> BTreeSet<&'static str> {
        let mut out = BTreeSet::new();
        out.insert(self.core_intent.name());
        out.insert(self.statement_type.name());
        out.extend(self.syntax_structures.iter().map(|s| s.name()));
        out.extend(self.key_actions.iter().map(|a| a.name()));
        out
    }
}

impl fmt::Display for TaxonomyLabels {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let ss: Vec<&str> = self.syntax_structures.iter().map(|s| s.name()).collect();
        let ka: Vec<&str> = self.key_actions.iter().map(|a| a.name()).collect();
        write!(
            f,
            "{} | {} | {{{}}} | {{{}}}",
            self.core_intent,
            self.statement_type,
            ss.join(", "),
            ka.join(", ")
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cardinalities() {
        assert_eq!(CoreIntent::ALL.len(), 14);
        assert_eq!(StatementType::ALL.len(), 5);
        assert_eq!(SyntaxStructure::ALL.len(), 14);
        assert_eq!(KeyAction::ALL.len(), 9);
    }

    #[test]
    fn names_round_trip() {
        for s in SyntaxStructure::ALL {
            assert_eq!(s.name().parse::<SyntaxStructure>().unwrap(), *s);
        }
        for a in KeyAction::ALL {
            let json = serde_json::to_string(a).unwrap();
            assert_eq!(serde_json::from_str::<KeyAction>(&json).unwrap(), *a);
        }
        assert!("Nope".parse::<CoreIntent>().is_err());
    }

    #[test]
    fn label_set_has_all_dimensions() {
        let l = TaxonomyLabels::new(
            CoreIntent::BasicQuery,
            StatementType::Select,
            [SyntaxStructure::Where],
            [KeyAction::Cast],
        );
        assert_eq!(l.label_set().len(), 4);
    }
}
