//! JSON shapes printed by the CLI. Atoms and stores are rendered in source
//! syntax so reports stay readable and diffable.

use chrcp_core::harness::{Classification, SoundnessReport};
use chrcp_core::monotonicity::{body_report, predicate_report, Verdict};
use chrcp_core::{Program, Store};
use serde::Serialize;

pub fn atoms(st: &Store) -> Vec<String> {
    st.iter().map(ToString::to_string).collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct VerdictJson {
    pub monotone: bool,
    /// The comprehension head that may absorb the pattern, when not monotone.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub absorbed_by: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rule: Option<String>,
}

impl VerdictJson {
    /// Names the absorbing head as written in `source`, falling back to its
    /// normalized form.
    fn new(v: &Verdict, source: &Program) -> Self {
        match v {
            Verdict::Monotone => VerdictJson {
                monotone: true,
                absorbed_by: None,
                rule: None,
            },
            Verdict::NonMonotone {
                rule,
                head,
                comprehension,
            } => {
                let written = source
                    .rule(rule)
                    .filter(|r| *head < r.head_count())
                    .map(|r| r.head(*head).1.to_string());
                VerdictJson {
                    monotone: false,
                    absorbed_by: Some(written.unwrap_or_else(|| comprehension.clone())),
                    rule: Some(rule.clone()),
                }
            }
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct PredicateJson {
    pub predicate: String,
    pub arity: usize,
    #[serde(flatten)]
    pub verdict: VerdictJson,
}

#[derive(Debug, Clone, Serialize)]
pub struct BodyPatternJson {
    /// `rule#k`, the k-th body pattern of `rule`.
    pub origin: String,
    pub pattern: String,
    #[serde(flatten)]
    pub verdict: VerdictJson,
}

#[derive(Debug, Clone, Serialize)]
pub struct AnalysisJson {
    pub predicates: Vec<PredicateJson>,
    pub body_patterns: Vec<BodyPatternJson>,
}

/// Monotonicity of every predicate and every body pattern of `source`,
/// analysed on its normalized form `normalized`.
pub fn analysis(source: &Program, normalized: &Program) -> AnalysisJson {
    AnalysisJson {
        predicates: predicate_report(normalized)
            .iter()
            .map(|(pred, arity, v)| PredicateJson {
                predicate: pred.clone(),
                arity: *arity,
                verdict: VerdictJson::new(v, source),
            })
            .collect(),
        body_patterns: body_report(normalized)
            .iter()
            .map(|(origin, pat, v)| BodyPatternJson {
                origin: origin.clone(),
                pattern: pat.to_string(),
                verdict: VerdictJson::new(v, source),
            })
            .collect(),
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ViolationJson {
    pub index: usize,
    pub kind: String,
    pub goal: String,
    pub before: Vec<String>,
    pub after: Vec<String>,
    pub reason: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct SoundnessJson {
    pub ok: bool,
    pub steps: usize,
    pub silent: usize,
    #[serde(rename = "abstract")]
    pub abstract_steps: usize,
    pub violations: Vec<ViolationJson>,
    pub step_limit_exceeded: bool,
    pub final_store: Vec<String>,
}

impl From<&SoundnessReport> for SoundnessJson {
    fn from(r: &SoundnessReport) -> Self {
        let violations = r
            .steps
            .iter()
            .filter_map(|s| match &s.classification {
                Classification::Violation {
                    before,
                    after,
                    reason,
                } => Some(ViolationJson {
                    index: s.index,
                    kind: s.kind.name().to_string(),
                    goal: s.goal.clone(),
                    before: atoms(before),
                    after: atoms(after),
                    reason: reason.clone(),
                }),
                _ => None,
            })
            .collect();
        SoundnessJson {
            ok: r.ok(),
            steps: r.steps.len(),
            silent: r.count("silent"),
            abstract_steps: r.count("abstract"),
            violations,
            step_limit_exceeded: r.step_limit_exceeded,
            final_store: atoms(&r.final_store),
        }
    }
}
