use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::domain::{Claim, ClaimStatus, Handbook, Question, SelectionMode, SelectionStrategy, TextualContext};
use crate::gateway::structured::{parse_free_text, parse_probability, parse_tool_confidence, parse_verify_verdict};
use crate::gateway::{ChatRequest, Gateway, GatewayError, Role, Shape, TemplateId, VerifyVerdict};

/// Final answer when no claim survives the confidence filter.
pub const REFUSAL: &str = "I cannot give a reliable answer to this question: none of the candidate statements reached the required confidence.";

/// Note attached to the synthesis stage for an empty claim set.
pub const NO_CLAIMS_NOTE: &str = "no claims above kappa";

fn handbook_text(handbook: &Handbook) -> String {
    serde_json::to_string_pretty(handbook).expect("handbook serializes")
}

/// Whether the simulator can check `claim`: 1 or 0. Unparseable judgments
/// count as 0 and come back with a warning.
pub fn assess_boundary(
    gateway: &Gateway,
    claim: &Claim,
    question: &Question,
    handbook: &Handbook,
) -> Result<(u8, Option<String>), GatewayError> {
    let req = ChatRequest::new(TemplateId::BoundaryAssess)
        .bind("tools_handbook", handbook_text(handbook))
        .bind("question", question.text.as_str())
        .bind("claim", claim.text.as_str());
    match gateway.complete_parsed(Role::Judge, &req, Shape::ToolConfidence, parse_tool_confidence) {
        Ok(b) => Ok((b, None)),
        Err(GatewayError::MalformedStructuredOutput { message, .. }) => {
            let warning = format!("boundary for {} unparseable, treated as 0: {message}", claim.id);
            log::warn!("{warning}");
            Ok((0, Some(warning)))
        }
        Err(e) => Err(e),
    }
}

/// Self-reported probability that `claim` is correct.
pub fn verbalized_confidence(gateway: &Gateway, question: &Question, claim: &Claim) -> Result<f64, GatewayError> {
    let req = ChatRequest::new(TemplateId::VerbalizedConf)
        .bind("question", question.text.as_str())
        .bind("claim", claim.text.as_str());
    gateway.complete_parsed(Role::Main, &req, Shape::Probability, parse_probability)
}

/// Uniform scores in claim order from the selector seed.
pub fn random_scores(claims: &[Claim], seed: u64) -> BTreeMap<String, f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut ids: Vec<&str> = claims.iter().map(|c| c.id.as_str()).collect();
    ids.sort_unstable();
    ids.into_iter().map(|id| (id.to_string(), rng.random::<f64>())).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Selection {
    pub candidates: Vec<String>,
    /// Lowest confidence first.
    pub selected: Vec<String>,
    pub shortfall: usize,
}

/// Number of claims a budget `b` asks for out of `k`.
pub fn budget_count(b: f64, k: usize) -> usize {
    // Guard against 0.3 * 10 = 3.0000000000000004.
    ((b * k as f64) - 1e-9).ceil().max(0.0) as usize
}

/// Pick the claims to verify. Only `ue_sba` filters by bound; a missing
/// bound counts as 0.
pub fn select_claims(
    claims: &[Claim],
    scores: &BTreeMap<String, f64>,
    bounds: &BTreeMap<String, u8>,
    strategy: SelectionStrategy,
    mode: SelectionMode,
) -> Selection {
    let mut candidates: Vec<(f64, &str)> = claims
        .iter()
        .filter(|c| strategy != SelectionStrategy::UeSba || bounds.get(&c.id).copied() == Some(1))
        .map(|c| (scores.get(&c.id).copied().unwrap_or(0.0), c.id.as_str()))
        .collect();
    candidates.sort_by(|a, b| a.0.total_cmp(&b.0).then_with(|| a.1.cmp(b.1)));
    let (selected, shortfall): (Vec<String>, usize) = match mode {
        SelectionMode::Threshold(tau) => (
            candidates.iter().filter(|(s, _)| *s < tau).map(|(_, id)| id.to_string()).collect(),
            0,
        ),
        SelectionMode::Budget(b) => {
            let want = budget_count(b, claims.len());
            let take = want.min(candidates.len());
            (candidates[..take].iter().map(|(_, id)| id.to_string()).collect(), want - take)
        }
    };
    let mut ids: Vec<String> = candidates.iter().map(|(_, id)| id.to_string()).collect();
    ids.sort();
    Selection {
        candidates: ids,
        selected,
        shortfall,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Verification {
    pub claim: Claim,
    pub verdict: Option<VerifyVerdict>,
    pub warning: Option<String>,
}

/// Check one claim against the context and apply the verdict.
pub fn verify_and_update(
    gateway: &Gateway,
    claim: &Claim,
    context: &TextualContext,
) -> Result<Verification, GatewayError> {
    let req = ChatRequest::new(TemplateId::VerifyUpdate)
        .bind("claim", claim.text.as_str())
        .bind("textual_context", context.text.as_str());
    let mut out = claim.clone();
    match gateway.complete_parsed(Role::Main, &req, Shape::VerifyVerdict, parse_verify_verdict) {
        Ok(verdict) => {
            apply_verdict(&mut out, &verdict);
            Ok(Verification {
                claim: out,
                verdict: Some(verdict),
                warning: None,
            })
        }
        Err(GatewayError::MalformedStructuredOutput { message, .. }) => {
            let warning = format!("verdict for {} unparseable: {message}", claim.id);
            log::warn!("{warning}");
            out.status = ClaimStatus::Indeterminate;
            Ok(Verification {
                claim: out,
                verdict: None,
                warning: Some(warning),
            })
        }
        Err(e) => Err(e),
    }
}

pub fn apply_verdict(claim: &mut Claim, verdict: &VerifyVerdict) {
    match (verdict.is_included, verdict.should_update, &verdict.updated_claim) {
        (false, _, _) => claim.status = ClaimStatus::Indeterminate,
        (true, true, Some(text)) => {
            claim.text = text.clone();
            claim.status = ClaimStatus::Updated;
            claim.confidence = Some(1.0);
        }
        (true, _, _) => {
            claim.status = ClaimStatus::VerifiedAligned;
            claim.confidence = Some(1.0);
        }
    }
}

/// Claim texts as a one-based list.
pub fn enumerate_claims(claims: &[Claim]) -> String {
    claims
        .iter()
        .enumerate()
        .map(|(i, c)| format!("{}. {}", i + 1, c.text))
        .collect::<Vec<_>>()
        .join("\n")
}

/// Final answer from the surviving claims, with a note when there were none.
pub fn synthesize_answer(
    gateway: &Gateway,
    question: &Question,
    claims: &[Claim],
) -> Result<(String, Option<String>), GatewayError> {
    if claims.is_empty() {
        log::info!("{}: {NO_CLAIMS_NOTE}", question.id);
        return Ok((REFUSAL.to_string(), Some(NO_CLAIMS_NOTE.to_string())));
    }
    let req = ChatRequest::new(TemplateId::FinalAnswer)
        .bind("question", question.text.as_str())
        .bind("claims_text", enumerate_claims(claims));
    Ok((gateway.complete_parsed(Role::Main, &req, Shape::FreeText, parse_free_text)?, None))
}

/// Whole-answer rewrite against the context.
pub fn refine_answer(
    gateway: &Gateway,
    question: &Question,
    answer: &str,
    context: &TextualContext,
) -> Result<String, GatewayError> {
    let req = ChatRequest::new(TemplateId::AnswerRefine)
        .bind("question", question.text.as_str())
        .bind("answer", answer)
        .bind("textual_context", context.text.as_str());
    gateway.complete_parsed(Role::Main, &req, Shape::FreeText, parse_free_text)
}
