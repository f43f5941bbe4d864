//! Answer sampling, claim decomposition and merging, entailment graphs and
//! graph-based confidence.

pub mod centrality;
mod graph;

use std::collections::BTreeSet;

use thiserror::Error;

use crate::domain::{Answer, Claim, ClaimStatus, GenerationParams, Question};
use crate::gateway::structured::{parse_entailment_label, parse_jsonl_claims, parse_pair_array};
use crate::gateway::{ChatRequest, EntailmentLabel, Gateway, GatewayError, Role, Shape, TemplateId};

pub use centrality::{score_confidence, CentralityError};
pub use graph::{EntailmentGraph, MergeMap};

/// Sampling temperature for answer diversity.
pub const SAMPLE_TEMPERATURE: f64 = 1.0;

#[derive(Debug, Clone, Error)]
pub enum ClaimsError {
    #[error(transparent)]
    Gateway(#[from] GatewayError),
    #[error("answer {0} is empty")]
    EmptyAnswer(String),
    #[error("m must be at least 1")]
    NoSamples,
}

/// Draw `m` answers at temperature 1. A supplied context is placed ahead of
/// the question in the prompt.
pub fn sample_answers(
    gateway: &Gateway,
    question: &Question,
    m: usize,
    context: Option<&str>,
) -> Result<Vec<Answer>, ClaimsError> {
    if m == 0 {
        return Err(ClaimsError::NoSamples);
    }
    let prefix = match context {
        Some(c) if !c.trim().is_empty() => format!("Use the following simulation evidence.\n\n{}\n\n", c.trim()),
        _ => String::new(),
    };
    let indices: Vec<u32> = (0..m as u32).collect();
    let results = gateway.map_concurrent(&indices, |&i| {
        let req = ChatRequest::new(TemplateId::AnswerSample)
            .bind("question", question.text.as_str())
            .bind("context", prefix.as_str())
            .temperature(SAMPLE_TEMPERATURE)
            .sample(i);
        gateway.complete(&req).map(|c| Answer {
            id: format!("{}/a{i}", question.id),
            text: c.text.trim().to_string(),
            sample_index: i,
            generation_params: GenerationParams {
                model: gateway.model().to_string(),
                temperature: SAMPLE_TEMPERATURE,
            },
        })
    });
    results.into_iter().map(|r| r.map_err(ClaimsError::from)).collect()
}

/// Split an answer into atomic claims with ids `<answer id>-cNN`.
pub fn decompose(gateway: &Gateway, answer: &Answer) -> Result<Vec<Claim>, ClaimsError> {
    if answer.text.trim().is_empty() {
        return Err(ClaimsError::EmptyAnswer(answer.id.clone()));
    }
    let req = ChatRequest::new(TemplateId::ClaimDecompose).bind("original_text", answer.text.as_str());
    let texts = gateway.complete_parsed(Role::Main, &req, Shape::JsonlClaims, parse_jsonl_claims)?;
    Ok(texts
        .into_iter()
        .enumerate()
        .map(|(j, text)| claim_with_origin(format!("{}-c{j:02}", answer.id), text, &answer.id))
        .collect())
}

fn claim_with_origin(id: String, text: String, origin: &str) -> Claim {
    Claim {
        id,
        text,
        origin_answer_ids: BTreeSet::from([origin.to_string()]),
        confidence: None,
        bound: None,
        status: ClaimStatus::Original,
        label: None,
    }
}

/// Claims as a zero-based numbered list, the layout the merge prompt expects.
pub fn numbered(claims: &[Claim]) -> String {
    claims
        .iter()
        .enumerate()
        .map(|(i, c)| format!("{i}. {}", c.text))
        .collect::<Vec<_>>()
        .join("\n")
}

/// Fold `incoming` into `existing`. Covered incoming claims are absorbed
/// into their first covering claim; the rest are appended.
pub fn merge_claims(
    gateway: &Gateway,
    existing: Vec<Claim>,
    incoming: Vec<Claim>,
) -> Result<(Vec<Claim>, MergeMap), ClaimsError> {
    let pairs = if existing.is_empty() || incoming.is_empty() {
        Vec::new()
    } else {
        let (a, b) = (existing.len(), incoming.len());
        let req = ChatRequest::new(TemplateId::ClaimMerge)
            .bind("existing_claim_set", numbered(&existing))
            .bind("new_claim_set", numbered(&incoming));
        gateway.complete_parsed(Role::Main, &req, Shape::PairArray, |text| {
            let pairs = parse_pair_array(text)?;
            match pairs.iter().find(|(i, j)| *i >= a || *j >= b) {
                Some((i, j)) => Err(format!("pair [{i}, {j}] out of range for sets of {a} and {b}")),
                None => Ok(pairs),
            }
        })?
    };
    Ok(apply_merge(existing, incoming, &pairs))
}

/// Apply coverage pairs `(existing_index, new_index)` without consulting a model.
pub fn apply_merge(mut existing: Vec<Claim>, incoming: Vec<Claim>, pairs: &[(usize, usize)]) -> (Vec<Claim>, MergeMap) {
    let mut map = MergeMap::default();
    for (j, claim) in incoming.into_iter().enumerate() {
        match pairs.iter().find(|(_, nj)| *nj == j) {
            Some(&(i, _)) => {
                let keeper = &mut existing[i];
                keeper.origin_answer_ids.extend(claim.origin_answer_ids);
                map.aliases.insert(claim.id, keeper.id.clone());
            }
            None => existing.push(claim),
        }
    }
    map.kept = existing.iter().map(|c| c.id.clone()).collect();
    (existing, map)
}

/// Left fold of [`merge_claims`] over per-answer claim lists in sample order.
pub fn merge_all(gateway: &Gateway, per_answer: Vec<Vec<Claim>>) -> Result<(Vec<Claim>, MergeMap), ClaimsError> {
    let mut merged = Vec::new();
    let mut map = MergeMap::default();
    for claims in per_answer {
        let (next, step) = merge_claims(gateway, merged, claims)?;
        merged = next;
        map.aliases.extend(step.aliases);
    }
    map.kept = merged.iter().map(|c| c.id.clone()).collect();
    Ok((merged, map))
}

/// Edges come free from provenance; every other answer/claim pair is judged.
pub fn build_entailment_graph(
    gateway: &Gateway,
    answers: &[Answer],
    claims: &[Claim],
) -> Result<EntailmentGraph, ClaimsError> {
    let mut graph = EntailmentGraph::new(
        answers.iter().map(|a| a.id.clone()).collect(),
        claims.iter().map(|c| c.id.clone()).collect(),
    );
    let mut pending = Vec::new();
    for a in answers {
        for c in claims {
            if c.origin_answer_ids.contains(&a.id) {
                graph.add_edge(&a.id, &c.id);
            } else {
                pending.push((a, c));
            }
        }
    }
    let verdicts = gateway.map_concurrent(&pending, |(a, c)| {
        let req = ChatRequest::new(TemplateId::EntailmentJudge)
            .bind("premise", a.text.as_str())
            .bind("hypothesis", c.text.as_str());
        gateway.complete_parsed(Role::Main, &req, Shape::EntailmentLabel, parse_entailment_label)
    });
    for ((a, c), verdict) in pending.iter().zip(verdicts) {
        if verdict? == EntailmentLabel::Entails {
            graph.add_edge(&a.id, &c.id);
        }
    }
    Ok(graph)
}
