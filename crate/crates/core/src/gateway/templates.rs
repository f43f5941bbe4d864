//! Prompt templates and rendering.
//!
//! Bodies use single-brace placeholders (`{name}`); `{{` and `}}` render as
//! literal braces. A `{` not followed by an identifier and a closing brace is
//! literal text, so JSON examples inside prompts need no escaping.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::GatewayError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TemplateId {
    ClaimDecompose,
    ClaimMerge,
    BoundaryAssess,
    VerifyUpdate,
    FinalAnswer,
    ParamExtract,
    EntailmentJudge,
    VerbalizedConf,
    QaGenerate,
    AnswerSample,
    AnswerRefine,
    TemplateDerive,
}

impl TemplateId {
    pub const ALL: [TemplateId; 12] = [
        TemplateId::ClaimDecompose,
        TemplateId::ClaimMerge,
        TemplateId::BoundaryAssess,
        TemplateId::VerifyUpdate,
        TemplateId::FinalAnswer,
        TemplateId::ParamExtract,
        TemplateId::EntailmentJudge,
        TemplateId::VerbalizedConf,
        TemplateId::QaGenerate,
        TemplateId::AnswerSample,
        TemplateId::AnswerRefine,
        TemplateId::TemplateDerive,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            TemplateId::ClaimDecompose => "claim_decompose",
            TemplateId::ClaimMerge => "claim_merge",
            TemplateId::BoundaryAssess => "boundary_assess",
            TemplateId::VerifyUpdate => "verify_update",
            TemplateId::FinalAnswer => "final_answer",
            TemplateId::ParamExtract => "param_extract",
            TemplateId::EntailmentJudge => "entailment_judge",
            TemplateId::VerbalizedConf => "verbalized_conf",
            TemplateId::QaGenerate => "qa_generate",
            TemplateId::AnswerSample => "answer_sample",
            TemplateId::AnswerRefine => "answer_refine",
            TemplateId::TemplateDerive => "template_derive",
        }
    }

    fn body(self) -> &'static str {
        match self {
            TemplateId::ClaimDecompose => include_str!("../../assets/prompts/claim_decompose.txt"),
            TemplateId::ClaimMerge => include_str!("../../assets/prompts/claim_merge.txt"),
            TemplateId::BoundaryAssess => include_str!("../../assets/prompts/boundary_assess.txt"),
            TemplateId::VerifyUpdate => include_str!("../../assets/prompts/verify_update.txt"),
            TemplateId::FinalAnswer => include_str!("../../assets/prompts/final_answer.txt"),
            TemplateId::ParamExtract => include_str!("../../assets/prompts/param_extract.txt"),
            TemplateId::EntailmentJudge => include_str!("../../assets/prompts/entailment_judge.txt"),
            TemplateId::VerbalizedConf => include_str!("../../assets/prompts/verbalized_conf.txt"),
            TemplateId::QaGenerate => include_str!("../../assets/prompts/qa_generate.txt"),
            TemplateId::AnswerSample => include_str!("../../assets/prompts/answer_sample.txt"),
            TemplateId::AnswerRefine => include_str!("../../assets/prompts/answer_refine.txt"),
            TemplateId::TemplateDerive => include_str!("../../assets/prompts/template_derive.txt"),
        }
    }
}

impl fmt::Display for TemplateId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TemplateId {
    type Err = GatewayError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        TemplateId::ALL
            .into_iter()
            .find(|t| t.as_str() == s)
            .ok_or_else(|| GatewayError::UnknownTemplate(s.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Segment {
    Literal(String),
    Slot(String),
}

fn is_ident_start(c: char) -> bool {
    c.is_ascii_alphabetic() || c == '_'
}

fn is_ident(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_'
}

fn scan(body: &str) -> Vec<Segment> {
    let mut out = Vec::new();
    let mut lit = String::new();
    let chars: Vec<char> = body.chars().collect();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if (c == '{' || c == '}') && chars.get(i + 1) == Some(&c) {
            lit.push(c);
            i += 2;
            continue;
        }
        if c == '{' && chars.get(i + 1).copied().is_some_and(is_ident_start) {
            let mut j = i + 1;
            while j < chars.len() && is_ident(chars[j]) {
                j += 1;
            }
            if chars.get(j) == Some(&'}') {
                if !lit.is_empty() {
                    out.push(Segment::Literal(std::mem::take(&mut lit)));
                }
                out.push(Segment::Slot(chars[i + 1..j].iter().collect()));
                i = j + 1;
                continue;
            }
        }
        lit.push(c);
        i += 1;
    }
    if !lit.is_empty() {
        out.push(Segment::Literal(lit));
    }
    out
}

/// A prompt body with named placeholders.
#[derive(Debug, Clone)]
pub struct PromptTemplate {
    pub template_id: TemplateId,
    pub body: String,
    segments: Vec<Segment>,
}

impl PromptTemplate {
    pub fn builtin(template_id: TemplateId) -> Self {
        let body = template_id.body().trim_end_matches('\n').to_string();
        let segments = scan(&body);
        PromptTemplate {
            template_id,
            body,
            segments,
        }
    }

    /// Placeholder names in order of first appearance.
    pub fn placeholders(&self) -> Vec<&str> {
        let mut seen = BTreeSet::new();
        self.segments
            .iter()
            .filter_map(|s| match s {
                Segment::Slot(n) if seen.insert(n.as_str()) => Some(n.as_str()),
                _ => None,
            })
            .collect()
    }

    /// Short content digest of the body, recorded in run manifests.
    pub fn version(&self) -> String {
        let digest = Sha256::digest(self.body.as_bytes());
        format!("sha256:{}", &hex::encode(digest)[..12])
    }

    pub fn render(&self, bindings: &BTreeMap<String, String>) -> Result<String, GatewayError> {
        let mut out = String::with_capacity(self.body.len());
        for seg in &self.segments {
            match seg {
                Segment::Literal(s) => out.push_str(s),
                Segment::Slot(name) => {
                    let value = bindings.get(name).ok_or_else(|| GatewayError::MissingBinding {
                        template: self.template_id,
                        name: name.clone(),
                    })?;
                    out.push_str(value);
                }
            }
        }
        Ok(out)
    }
}

/// Render a built-in template by id.
pub fn render_prompt(
    template_id: TemplateId,
    bindings: &BTreeMap<String, String>,
) -> Result<String, GatewayError> {
    PromptTemplate::builtin(template_id).render(bindings)
}

/// Render a template given its textual id.
pub fn render_prompt_named(
    template_id: &str,
    bindings: &BTreeMap<String, String>,
) -> Result<String, GatewayError> {
    render_prompt(template_id.parse()?, bindings)
}

/// `template_id -> version` for every built-in template.
pub fn template_versions() -> BTreeMap<String, String> {
    TemplateId::ALL
        .into_iter()
        .map(|t| (t.as_str().to_string(), PromptTemplate::builtin(t).version()))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bind(pairs: &[(&str, &str)]) -> BTreeMap<String, String> {
        pairs.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect()
    }

    #[test]
    fn decompose_prompt_contains_input() {
        let p = render_prompt(TemplateId::ClaimDecompose, &bind(&[("original_text", "The sky is blue.")])).unwrap();
        assert!(p.contains("deconstruct the following paragraph"));
        assert!(p.contains("The input is: The sky is blue."));
        assert!(p.contains("{claim:[CLAIM]}"));
    }

    #[test]
    fn final_answer_with_empty_claims() {
        let p = render_prompt(TemplateId::FinalAnswer, &bind(&[("question", "Q"), ("claims_text", "")])).unwrap();
        assert!(p.contains("AVAILABLE CLAIMS"));
        assert!(p.contains("QUESTION: Q"));
    }

    #[test]
    fn missing_binding_is_reported() {
        let err = render_prompt(TemplateId::FinalAnswer, &bind(&[("question", "Q")])).unwrap_err();
        assert!(matches!(err, GatewayError::MissingBinding { ref name, .. } if name == "claims_text"));
    }

    #[test]
    fn unknown_template_name() {
        assert!(matches!(
            render_prompt_named("nope", &BTreeMap::new()),
            Err(GatewayError::UnknownTemplate(_))
        ));
    }

    #[test]
    fn escaped_braces_render_single() {
        let p = render_prompt(TemplateId::VerifyUpdate, &bind(&[("claim", "c"), ("textual_context", "ctx")])).unwrap();
        assert!(p.contains("Respond in JSON format:\n{\n    \"is_included\""));
        assert!(!p.contains("{{"));
    }

    #[test]
    fn json_examples_are_literal() {
        let t = PromptTemplate::builtin(TemplateId::BoundaryAssess);
        assert_eq!(t.placeholders(), vec!["tools_handbook", "question", "claim"]);
        assert!(t.body.contains(r#"Example: {"tool_confidence": 1}"#));
    }

    #[test]
    fn declared_placeholders() {
        let expect: &[(TemplateId, &[&str])] = &[
            (TemplateId::ClaimDecompose, &["original_text"]),
            (TemplateId::ClaimMerge, &["existing_claim_set", "new_claim_set"]),
            (TemplateId::VerifyUpdate, &["claim", "textual_context"]),
            (TemplateId::FinalAnswer, &["question", "claims_text"]),
            (TemplateId::AnswerSample, &["context", "question"]),
            (TemplateId::ParamExtract, &["handbook", "question"]),
            (TemplateId::EntailmentJudge, &["premise", "hypothesis"]),
            (TemplateId::VerbalizedConf, &["question", "claim"]),
            (TemplateId::QaGenerate, &["query", "result"]),
            (TemplateId::AnswerRefine, &["question", "answer", "textual_context"]),
            (TemplateId::TemplateDerive, &["handbook", "placeholders"]),
        ];
        for (id, names) in expect {
            assert_eq!(PromptTemplate::builtin(*id).placeholders(), *names, "{id}");
        }
    }

    #[test]
    fn derive_prompt_shows_double_braces() {
        let p = render_prompt(TemplateId::TemplateDerive, &bind(&[("handbook", "{}"), ("placeholders", "year")])).unwrap();
        assert!(p.contains("like {{year}}"));
    }
}
