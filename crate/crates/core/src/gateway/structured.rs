//! Extraction of structured payloads from free-form model output.
//!
//! Models wrap JSON in code fences or surround it with prose. Every parser
//! here scans candidate payloads in order of appearance and accepts the first
//! one that has the expected shape.

use serde::{Deserialize, Serialize};
use serde_json::Value;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Shape {
    JsonlClaims,
    PairArray,
    ToolConfidence,
    VerifyVerdict,
    FreeText,
    EntailmentLabel,
    Probability,
    JsonObjects,
    QaDraft,
    TemplateSet,
}

impl Shape {
    pub fn as_str(self) -> &'static str {
        match self {
            Shape::JsonlClaims => "jsonl_claims",
            Shape::PairArray => "pair_array",
            Shape::ToolConfidence => "tool_confidence",
            Shape::VerifyVerdict => "verify_verdict",
            Shape::FreeText => "free_text",
            Shape::EntailmentLabel => "entailment_label",
            Shape::Probability => "probability",
            Shape::JsonObjects => "json_objects",
            Shape::QaDraft => "qa_draft",
            Shape::TemplateSet => "template_set",
        }
    }

    /// Instruction appended to the prompt when a repair attempt is made.
    pub fn repair_instruction(self) -> &'static str {
        match self {
            Shape::JsonlClaims => "one JSON object per line, each of the form {\"claim\": \"...\"}",
            Shape::PairArray => "a JSON array of [existing_index, new_index] pairs, or []",
            Shape::ToolConfidence => "a JSON object {\"tool_confidence\": 0} or {\"tool_confidence\": 1}",
            Shape::VerifyVerdict => {
                "a JSON object with boolean \"is_included\", boolean \"should_update\" and, when updating, a non-empty \"updated_claim\""
            }
            Shape::FreeText => "plain text",
            Shape::EntailmentLabel => "a JSON object {\"label\": \"entails\" | \"neutral\" | \"contradicts\"}",
            Shape::Probability => "a JSON object {\"confidence\": <number between 0 and 1>}",
            Shape::JsonObjects => "a JSON array of objects",
            Shape::QaDraft => "a JSON object {\"question\": \"...\", \"answer\": \"...\"}",
            Shape::TemplateSet => "a JSON object {\"templates\": [{\"template_id\": \"...\", \"query\": \"...\", \"result\": \"...\"}]}",
        }
    }
}

/// Outcome of fact-checking one claim against simulation context.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerifyVerdict {
    pub is_included: bool,
    pub should_update: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub updated_claim: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EntailmentLabel {
    Entails,
    Neutral,
    Contradicts,
}

/// A question and reference answer drafted from a simulation record.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QaDraft {
    pub question: String,
    pub answer: String,
}

/// A query/result template pair as produced by template derivation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TemplateDraft {
    pub template_id: String,
    pub query: String,
    pub result: String,
}

/// A parsed structured payload.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", content = "value", rename_all = "snake_case")]
pub enum Structured {
    JsonlClaims(Vec<String>),
    PairArray(Vec<(usize, usize)>),
    ToolConfidence(u8),
    VerifyVerdict(VerifyVerdict),
    FreeText(String),
    EntailmentLabel(EntailmentLabel),
    Probability(f64),
    JsonObjects(Vec<serde_json::Map<String, Value>>),
    QaDraft(QaDraft),
    TemplateSet(Vec<TemplateDraft>),
}

/// Parse `text` into the expected shape.
pub fn parse_structured(text: &str, shape: Shape) -> Result<Structured, String> {
    Ok(match shape {
        Shape::JsonlClaims => Structured::JsonlClaims(parse_jsonl_claims(text)?),
        Shape::PairArray => Structured::PairArray(parse_pair_array(text)?),
        Shape::ToolConfidence => Structured::ToolConfidence(parse_tool_confidence(text)?),
        Shape::VerifyVerdict => Structured::VerifyVerdict(parse_verify_verdict(text)?),
        Shape::FreeText => Structured::FreeText(parse_free_text(text)?),
        Shape::EntailmentLabel => Structured::EntailmentLabel(parse_entailment_label(text)?),
        Shape::Probability => Structured::Probability(parse_probability(text)?),
        Shape::JsonObjects => Structured::JsonObjects(parse_json_objects(text)?),
        Shape::QaDraft => Structured::QaDraft(parse_qa_draft(text)?),
        Shape::TemplateSet => Structured::TemplateSet(parse_template_set(text)?),
    })
}

/// Contents of the first fenced code block, or the whole text.
fn strip_fences(text: &str) -> &str {
    let Some(start) = text.find("```") else {
        return text;
    };
    let after = &text[start + 3..];
    // skip an info string such as `json`
    let body_start = after.find('\n').map(|i| i + 1).unwrap_or(0);
    let body = &after[body_start..];
    match body.find("```") {
        Some(end) => &body[..end],
        None => body,
    }
}

/// Every well-formed JSON value that starts at a `{` or `[`, in order.
pub fn json_candidates(text: &str) -> Vec<Value> {
    let mut out = Vec::new();
    for source in [strip_fences(text), text] {
        for (i, c) in source.char_indices() {
            if c != '{' && c != '[' {
                continue;
            }
            let mut stream = serde_json::Deserializer::from_str(&source[i..]).into_iter::<Value>();
            if let Some(Ok(v)) = stream.next() {
                out.push(v);
            }
        }
        if !out.is_empty() {
            break;
        }
    }
    out
}

/// First JSON payload in the text, if any.
pub fn extract_json(text: &str) -> Option<Value> {
    json_candidates(text).into_iter().next()
}

fn first_matching<T>(text: &str, f: impl Fn(&Value) -> Option<T>) -> Option<T> {
    json_candidates(text).iter().find_map(f)
}

fn as_index(v: &Value) -> Option<usize> {
    match v {
        Value::Number(n) => n
            .as_u64()
            .or_else(|| n.as_f64().filter(|f| f.fract() == 0.0 && *f >= 0.0).map(|f| f as u64))
            .map(|n| n as usize),
        _ => None,
    }
}

pub fn parse_pair_array(text: &str) -> Result<Vec<(usize, usize)>, String> {
    first_matching(text, |v| {
        let arr = v.as_array()?;
        arr.iter()
            .map(|p| {
                let p = p.as_array()?;
                if p.len() != 2 {
                    return None;
                }
                Some((as_index(&p[0])?, as_index(&p[1])?))
            })
            .collect::<Option<Vec<_>>>()
    })
    .ok_or_else(|| "no JSON array of index pairs found".to_string())
}

fn bit(v: &Value) -> Option<u8> {
    match v {
        Value::Number(n) => match n.as_f64() {
            Some(x) if x == 0.0 => Some(0),
            Some(x) if x == 1.0 => Some(1),
            _ => None,
        },
        Value::String(s) => match s.trim() {
            "0" => Some(0),
            "1" => Some(1),
            _ => None,
        },
        _ => None,
    }
}

pub fn parse_tool_confidence(text: &str) -> Result<u8, String> {
    first_matching(text, |v| bit(v.as_object()?.get("tool_confidence")?))
        .ok_or_else(|| "no {\"tool_confidence\": 0|1} object found".to_string())
}

fn boolish(v: &Value) -> Option<bool> {
    match v {
        Value::Bool(b) => Some(*b),
        Value::String(s) => match s.trim().to_ascii_lowercase().as_str() {
            "true" => Some(true),
            "false" => Some(false),
            _ => None,
        },
        _ => None,
    }
}

pub fn parse_verify_verdict(text: &str) -> Result<VerifyVerdict, String> {
    let obj = first_matching(text, |v| {
        let o = v.as_object()?;
        o.contains_key("is_included").then(|| o.clone())
    })
    .ok_or_else(|| "no object with \"is_included\" found".to_string())?;
    let is_included = boolish(&obj["is_included"]).ok_or("\"is_included\" is not a boolean")?;
    let should_update = match obj.get("should_update") {
        Some(v) => boolish(v).ok_or("\"should_update\" is not a boolean")?,
        None if !is_included => false,
        None => return Err("\"should_update\" missing".into()),
    };
    let updated_claim = obj
        .get("updated_claim")
        .and_then(Value::as_str)
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(str::to_string);
    if is_included && should_update && updated_claim.is_none() {
        return Err("should_update is true but updated_claim is missing".into());
    }
    Ok(VerifyVerdict {
        is_included,
        should_update: is_included && should_update,
        updated_claim: if is_included && should_update { updated_claim } else { None },
    })
}

fn label_from_word(s: &str) -> Option<EntailmentLabel> {
    match s.trim().trim_matches(|c: char| !c.is_ascii_alphabetic()).to_ascii_lowercase().as_str() {
        "entails" | "entailment" | "entailed" => Some(EntailmentLabel::Entails),
        "neutral" => Some(EntailmentLabel::Neutral),
        "contradicts" | "contradiction" | "contradicted" => Some(EntailmentLabel::Contradicts),
        _ => None,
    }
}

pub fn parse_entailment_label(text: &str) -> Result<EntailmentLabel, String> {
    if let Some(l) = first_matching(text, |v| label_from_word(v.as_object()?.get("label")?.as_str()?)) {
        return Ok(l);
    }
    label_from_word(text).ok_or_else(|| format!("entailment label not in {{entails, neutral, contradicts}}: {text:?}"))
}

pub fn parse_probability(text: &str) -> Result<f64, String> {
    let p = first_matching(text, |v| v.as_object()?.get("confidence")?.as_f64())
        .or_else(|| text.trim().parse::<f64>().ok())
        .ok_or_else(|| "no {\"confidence\": p} object found".to_string())?;
    if (0.0..=1.0).contains(&p) {
        Ok(p)
    } else {
        Err(format!("confidence {p} outside [0, 1]"))
    }
}

pub fn parse_json_objects(text: &str) -> Result<Vec<serde_json::Map<String, Value>>, String> {
    first_matching(text, |v| match v {
        Value::Array(items) => items.iter().map(|i| i.as_object().cloned()).collect(),
        Value::Object(o) => Some(vec![o.clone()]),
        _ => None,
    })
    .ok_or_else(|| "no JSON object or array of objects found".to_string())
}

pub fn parse_qa_draft(text: &str) -> Result<QaDraft, String> {
    first_matching(text, |v| {
        let d: QaDraft = serde_json::from_value(v.clone()).ok()?;
        (!d.question.trim().is_empty() && !d.answer.trim().is_empty()).then_some(d)
    })
    .ok_or_else(|| "no {\"question\", \"answer\"} object found".to_string())
}

pub fn parse_template_set(text: &str) -> Result<Vec<TemplateDraft>, String> {
    first_matching(text, |v| {
        let arr = v.as_object()?.get("templates")?;
        serde_json::from_value::<Vec<TemplateDraft>>(arr.clone()).ok()
    })
    .ok_or_else(|| "no {\"templates\": [...]} object found".to_string())
}

pub fn parse_free_text(text: &str) -> Result<String, String> {
    Ok(text.trim().to_string())
}

fn claim_from_value(v: &Value) -> Option<String> {
    let o = v.as_object()?;
    let c = o.get("claim")?;
    match c {
        Value::String(s) => Some(s.clone()),
        Value::Array(a) if a.len() == 1 => a[0].as_str().map(str::to_string),
        _ => None,
    }
}

/// Lenient reading of `{claim: text}` lines that are not valid JSON.
fn claim_from_loose_line(line: &str) -> Option<String> {
    let inner = line.strip_prefix('{')?.strip_suffix('}')?.trim();
    let rest = inner
        .strip_prefix("\"claim\"")
        .or_else(|| inner.strip_prefix("claim"))?
        .trim_start()
        .strip_prefix(':')?
        .trim();
    let rest = rest.strip_prefix('[').and_then(|r| r.strip_suffix(']')).unwrap_or(rest).trim();
    let rest = rest
        .strip_prefix('"')
        .and_then(|r| r.strip_suffix('"'))
        .unwrap_or(rest)
        .trim();
    (!rest.is_empty()).then(|| rest.to_string())
}

/// Claims from JSONL output. Blank lines are skipped; an exact repeat of an
/// earlier claim is dropped.
pub fn parse_jsonl_claims(text: &str) -> Result<Vec<String>, String> {
    let body = strip_fences(text);
    let mut claims: Vec<String> = Vec::new();
    let mut bad_lines = 0usize;
    for raw in body.lines() {
        let line = raw.trim().trim_end_matches(',');
        if line.is_empty() || line.starts_with("```") {
            continue;
        }
        let claim = serde_json::from_str::<Value>(line)
            .ok()
            .and_then(|v| claim_from_value(&v))
            .or_else(|| claim_from_loose_line(line));
        match claim {
            Some(c) => {
                let c = c.trim().to_string();
                if !c.is_empty() && !claims.contains(&c) {
                    claims.push(c);
                }
            }
            None => bad_lines += 1,
        }
    }
    if claims.is_empty() && bad_lines > 0 {
        return Err(format!("{bad_lines} line(s) without a claim object"));
    }
    Ok(claims)
}
