//! Claim labeling against reference answers, answer-level metrics and the
//! selector comparison harness.

mod comparison;
mod ranking;
pub mod synthetic;

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::domain::{Claim, QaItem};
use crate::gateway::structured::parse_entailment_label;
use crate::gateway::{ChatRequest, EntailmentLabel, Gateway, GatewayError, Role, Shape, TemplateId};

pub use comparison::{
    run_comparison, write_comparison, CellReport, ComparisonReport, ComparisonSpec, ModeReport, QuestionFailure,
    ReferenceTarget,
};
pub use ranking::{aupr, auroc, pr_curve, ranking_metrics, PrPoint, RankedMetricReport};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("override line {line}: {message}")]
    Override { line: usize, message: String },
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Gateway(#[from] GatewayError),
}

/// One scored, labeled claim.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredClaim {
    pub claim_id: String,
    pub text: String,
    pub score: f64,
    pub label: bool,
}

/// Per-question outcome of one method at one budget.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalRecord {
    pub question_id: String,
    /// Selection strategy or generation mode.
    pub method: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub budget: Option<f64>,
    pub claims: Vec<ScoredClaim>,
    pub selected: usize,
    pub informativeness: usize,
    pub factuality: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Labeling {
    pub labels: BTreeMap<String, bool>,
    pub warnings: Vec<String>,
}

/// Manual labels, one `{"claim_id": ..., "label": ...}` object per line.
pub fn parse_overrides(jsonl: &str) -> Result<BTreeMap<String, bool>, EvalError> {
    #[derive(Deserialize)]
    struct Line {
        claim_id: String,
        label: bool,
    }
    let mut out = BTreeMap::new();
    for (i, line) in jsonl.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let l: Line = serde_json::from_str(line).map_err(|e| EvalError::Override {
            line: i + 1,
            message: e.to_string(),
        })?;
        out.insert(l.claim_id, l.label);
    }
    Ok(out)
}

fn normalized(text: &str) -> String {
    text.split_whitespace().collect::<Vec<_>>().join(" ").trim_end_matches('.').to_lowercase()
}

/// Label each claim true when the reference entails it. A claim equal to a
/// reference claim skips the judge; overrides win over both. Relevance is
/// taken as implied by entailment from a reference written for the question.
pub fn label_claims(
    gateway: &Gateway,
    claims: &[Claim],
    reference: &QaItem,
    overrides: &BTreeMap<String, bool>,
) -> Result<Labeling, GatewayError> {
    let reference_set: BTreeSet<String> = reference.reference_claims.iter().map(|c| normalized(c)).collect();
    let premise = std::iter::once(reference.reference_answer.as_str())
        .chain(reference.reference_claims.iter().map(String::as_str))
        .collect::<Vec<_>>()
        .join("\n");
    let judged = gateway.map_concurrent(claims, |c| {
        if overrides.contains_key(&c.id) || reference_set.contains(&normalized(&c.text)) {
            return Ok(None);
        }
        let req = ChatRequest::new(TemplateId::EntailmentJudge)
            .bind("premise", premise.as_str())
            .bind("hypothesis", c.text.as_str());
        match gateway.complete_parsed(Role::Judge, &req, Shape::EntailmentLabel, parse_entailment_label) {
            Ok(l) => Ok(Some((l == EntailmentLabel::Entails, None))),
            Err(GatewayError::MalformedStructuredOutput { message, .. }) => {
                Ok(Some((false, Some(format!("label for {} unparseable, treated as false: {message}", c.id)))))
            }
            Err(e) => Err(e),
        }
    });
    let mut out = Labeling::default();
    for (c, j) in claims.iter().zip(judged) {
        let label = match (overrides.get(&c.id), j?) {
            (Some(&l), _) => l,
            (None, None) => true,
            (None, Some((l, warning))) => {
                if let Some(w) = warning {
                    log::warn!("{w}");
                    out.warnings.push(w);
                }
                l
            }
        };
        out.labels.insert(c.id.clone(), label);
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnswerMetrics {
    /// True claims after collapsing duplicates.
    pub informativeness: usize,
    /// True share of all claims; 0 when there are none.
    pub factuality: f64,
    pub empty: bool,
}

/// Informativeness and factuality. Claims whose text repeats an earlier
/// claim's are counted once by informativeness.
pub fn answer_metrics(claims: &[Claim], labels: &BTreeMap<String, bool>) -> AnswerMetrics {
    if claims.is_empty() {
        return AnswerMetrics {
            informativeness: 0,
            factuality: 0.0,
            empty: true,
        };
    }
    let is_true = |c: &Claim| labels.get(&c.id).copied().unwrap_or(false);
    let mut seen = BTreeSet::new();
    let informativeness = claims.iter().filter(|c| seen.insert(normalized(&c.text)) && is_true(c)).count();
    let trues = claims.iter().filter(|c| is_true(c)).count();
    AnswerMetrics {
        informativeness,
        factuality: trues as f64 / claims.len() as f64,
        empty: false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{Domain, ParamSettings, Provenance, Question};
    use crate::gateway::{Fixture, ScriptedBackend};
    use std::sync::Arc;

    fn claim(id: &str, text: &str) -> Claim {
        Claim::new(id, text, "q/a0").unwrap()
    }

    fn reference() -> QaItem {
        QaItem {
            question: Question::new("q", Domain::Climate, "How warm will Paris be?").unwrap(),
            reference_answer: "Paris would see an increase of 1.08°C.".into(),
            reference_claims: vec!["Paris would see an increase of 1.08°C.".into()],
            params: vec![ParamSettings::new("climate", Provenance::Manual)],
            template_id: "climate_ghg".into(),
        }
    }

    fn judge_request(hypothesis: &str) -> ChatRequest {
        let r = reference();
        let premise = format!("{}\n{}", r.reference_answer, r.reference_claims[0]);
        ChatRequest::new(TemplateId::EntailmentJudge)
            .bind("premise", premise)
            .bind("hypothesis", hypothesis)
    }

    fn fixture(req: &ChatRequest, output: &str) -> Fixture {
        Fixture {
            key: req.fixture_key(),
            response: output.into(),
        }
    }

    #[test]
    fn exact_match_needs_no_judge() {
        let gw = Gateway::new(Arc::new(ScriptedBackend::from_fixtures(vec![])), "m");
        let c = claim("c0", "Paris would see an increase of 1.08°C.");
        let l = label_claims(&gw, &[c], &reference(), &BTreeMap::new()).unwrap();
        assert_eq!(l.labels["c0"], true);
    }

    #[test]
    fn contradiction_is_false_and_override_wins() {
        let text = "Paris would see a decrease of 1.08°C.";
        let gw = Gateway::new(
            Arc::new(ScriptedBackend::from_fixtures(vec![fixture(&judge_request(text), r#"{"label": "contradicts"}"#)])),
            "m",
        );
        let c = claim("c0", text);
        let l = label_claims(&gw, std::slice::from_ref(&c), &reference(), &BTreeMap::new()).unwrap();
        assert_eq!(l.labels["c0"], false);
        let o = parse_overrides("{\"claim_id\": \"c0\", \"label\": true}\n").unwrap();
        let l = label_claims(&gw, &[c], &reference(), &o).unwrap();
        assert_eq!(l.labels["c0"], true);
    }

    #[test]
    fn malformed_judge_output_is_false() {
        let text = "Paris is pleasant.";
        let req = judge_request(text);
        let mut repair = req.clone();
        repair.repair = 1;
        repair.bindings.insert("__repair_shape".into(), Shape::EntailmentLabel.repair_instruction().into());
        let fixtures = vec![fixture(&req, "no idea"), fixture(&repair, "still unsure")];
        let gw = Gateway::new(Arc::new(ScriptedBackend::from_fixtures(fixtures)), "m");
        let l = label_claims(&gw, &[claim("c0", text)], &reference(), &BTreeMap::new()).unwrap();
        assert_eq!(l.labels["c0"], false);
        assert_eq!(l.warnings.len(), 1);
    }

    #[test]
    fn counts() {
        let claims: Vec<Claim> = (0..4).map(|i| claim(&format!("c{i}"), &format!("fact {i}"))).collect();
        let labels: BTreeMap<String, bool> = (0..4).map(|i| (format!("c{i}"), i != 2)).collect();
        let m = answer_metrics(&claims, &labels);
        assert_eq!((m.informativeness, m.factuality), (3, 0.75));
        let mut dup = claims.clone();
        dup.push(claim("c9", "fact 0"));
        let mut labels = labels;
        labels.insert("c9".into(), true);
        assert_eq!(answer_metrics(&dup, &labels).informativeness, 3);
        assert!(answer_metrics(&[], &labels).empty);
    }
}
