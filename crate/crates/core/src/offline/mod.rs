//! A deterministic, rule-based stand-in for a chat model.
//!
//! It reads questions with fixed patterns, consults the bundled simulators
//! for what a well-informed model would know, and answers every prompt
//! template in the format the parsers expect. Sampled answers are noisy in a
//! seeded way: most samples state the simulator's values, the rest drift, and
//! some add statements the simulators cannot check. Used to record fixture
//! packs and to run the CLI without network access.

pub mod extract;
pub mod facts;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;
use sha2::{Digest, Sha256};

use crate::domain::{Domain, ParamValue};
use crate::gateway::{Backend, BackendTag, ChatRequest, Completion, GatewayError, TemplateId};
use crate::numbers;
use crate::retrieval::{context::english_list, templates_for};
use crate::simulators::simulator_for;

use facts::{context_facts, parse, render, sentences, value_span, Fact, Subject};

/// Probability that a sampled statement carries the simulator's value.
pub const P_CORRECT: f64 = 0.6;
/// Probability that a sample adds a statement outside the simulators' scope.
pub const P_GENERIC: f64 = 0.5;

const CLIMATE_GENERIC: [&str; 4] = [
    "Urban heat islands can make city centres warmer than the surrounding region.",
    "Temperatures in any single year can differ from the long-term average.",
    "Higher temperatures usually increase demand for cooling energy.",
    "Coastal locations tend to have milder seasonal swings than inland ones.",
];

const EPI_GENERIC: [&str; 4] = [
    "Vaccination campaigns can reduce the hospital burden of influenza.",
    "School calendars often shape how influenza spreads in a community.",
    "Older adults account for a large share of influenza hospitalizations.",
    "Hospitals may postpone elective procedures during a severe season.",
];

/// Rule-based backend. See the module documentation.
#[derive(Debug, Clone, Default)]
pub struct OfflineBackend {
    /// Judge every claim as checkable by the simulators.
    pub all_in_bounds: bool,
}

impl OfflineBackend {
    pub fn new() -> Self {
        Self::default()
    }
}

fn rng_for(request: &ChatRequest) -> ChaCha8Rng {
    let digest = Sha256::digest(request.fixture_key().as_bytes());
    let mut seed = [0u8; 32];
    seed.copy_from_slice(&digest);
    ChaCha8Rng::from_seed(seed)
}

fn binding<'a>(request: &'a ChatRequest, name: &str) -> &'a str {
    request.bindings.get(name).map(String::as_str).unwrap_or("")
}

/// What the responder knows about a question: its subject and true values.
struct Knowledge {
    domain: Domain,
    subject: Subject,
    truth: Vec<(Fact, String)>,
}

fn know(question: &str) -> Option<Knowledge> {
    let (domain, settings) = extract::read_question(question)?;
    let out = simulator_for(domain).run(&settings, 0, 20).ok()?;
    let fields = crate::retrieval::context_fields(&out).ok()?;
    let scalar = |n: &str| out.scalars.get(n).map(|s| s.value).unwrap_or(f64::NAN);
    let field = |n: &str| fields.get(n).cloned().unwrap_or_default();
    let (subject, truth) = match domain {
        Domain::Climate => {
            let t = scalar("temperature_c");
            let b = scalar("baseline_temperature_c");
            (
                Subject {
                    place: field("city_name"),
                    year: field("year"),
                    states: String::new(),
                },
                vec![
                    (Fact::Temperature(t), numbers::temperature(t)),
                    (Fact::Baseline(b), numbers::temperature(b)),
                    (Fact::Surface(field("land_or_sea")), field("land_or_sea")),
                ],
            )
        }
        Domain::Epidemiology => {
            let p = scalar("peak_hospital_prevalence_median");
            let w = scalar("peak_week");
            let states = settings.get("states").and_then(ParamValue::as_list).unwrap_or(&[]).to_vec();
            (
                Subject {
                    place: String::new(),
                    year: String::new(),
                    states: english_list(&states),
                },
                vec![
                    (Fact::Peak(p), numbers::count(p)),
                    (Fact::PeakWeek(w), numbers::weeks(w)),
                    (Fact::Phase(field("growth_phase")), field("growth_phase")),
                ],
            )
        }
    };
    Some(Knowledge { domain, subject, truth })
}

/// How a model without evidence would phrase a value.
fn rounded(fact: &Fact) -> String {
    match fact {
        Fact::Temperature(t) | Fact::Baseline(t) => format!("{t:.1}"),
        Fact::Peak(p) => {
            let step = if *p >= 1000.0 { 100.0 } else { 10.0 };
            numbers::count((p / step).round() * step)
        }
        Fact::PeakWeek(w) => numbers::count(*w),
        Fact::Surface(s) | Fact::Phase(s) | Fact::Generic(s) => s.clone(),
    }
}

/// A plausible wrong value.
fn drift(fact: &Fact, rng: &mut ChaCha8Rng) -> String {
    let sign = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
    match fact {
        Fact::Temperature(t) | Fact::Baseline(t) => format!("{:.1}", t + sign * rng.random_range(0.4..2.5)),
        Fact::Peak(p) => {
            let f = rng.random_range(1.3..2.5);
            rounded(&Fact::Peak(if sign > 0.0 { p * f } else { p / f }))
        }
        Fact::PeakWeek(w) => numbers::count((w + sign * rng.random_range(2.0..5.0)).max(1.0)),
        Fact::Surface(s) => if s == "land" { "sea" } else { "land" }.to_string(),
        Fact::Phase(s) => {
            let others: Vec<&str> = ["explosive", "rapid", "gradual"].into_iter().filter(|p| p != s).collect();
            others[rng.random_range(0..others.len())].to_string()
        }
        Fact::Generic(s) => s.clone(),
    }
}

fn generic_pool(domain: Domain) -> &'static [&'static str] {
    match domain {
        Domain::Climate => &CLIMATE_GENERIC,
        Domain::Epidemiology => &EPI_GENERIC,
    }
}

fn sample_answer(request: &ChatRequest) -> String {
    let question = binding(request, "question");
    let context = binding(request, "context");
    let mut rng = rng_for(request);
    let Some(k) = know(question) else {
        return format!("{} {}", CLIMATE_GENERIC[1], EPI_GENERIC[0]);
    };
    let evidence = context_facts(context);
    let mut out = Vec::new();
    for (fact, exact) in &k.truth {
        let value = if let Some((_, v)) = evidence.iter().find(|(f, _)| f.same_kind(fact)) {
            v.clone()
        } else if evidence.is_empty() && !exact.is_empty() {
            if rng.random_bool(P_CORRECT) {
                rounded(fact)
            } else {
                drift(fact, &mut rng)
            }
        } else {
            continue;
        };
        out.push(render(fact.kind(), &value, &k.subject));
    }
    if rng.random_bool(P_GENERIC) {
        let pool = generic_pool(k.domain);
        out.push(pool[rng.random_range(0..pool.len())].to_string());
    }
    out.join(" ")
}

fn numbered_items(list: &str) -> Vec<String> {
    list.lines()
        .filter_map(|l| {
            let l = l.trim();
            let (head, rest) = l.split_once(". ")?;
            head.parse::<usize>().ok().map(|_| rest.to_string())
        })
        .collect()
}

fn decompose(text: &str) -> String {
    sentences(text)
        .into_iter()
        .map(|s| json!({ "claim": s }).to_string())
        .collect::<Vec<_>>()
        .join("\n")
}

fn merge(existing: &str, incoming: &str) -> String {
    let a: Vec<Fact> = numbered_items(existing).iter().map(|s| parse(s)).collect();
    let b: Vec<Fact> = numbered_items(incoming).iter().map(|s| parse(s)).collect();
    let pairs: Vec<[usize; 2]> = b
        .iter()
        .enumerate()
        .filter_map(|(j, fb)| a.iter().position(|fa| fa.agrees(fb)).map(|i| [i, j]))
        .collect();
    serde_json::to_string(&pairs).expect("pairs serialize")
}

/// Entailment of one statement by a passage.
pub fn judge(premise: &str, hypothesis: &str) -> &'static str {
    let h = parse(hypothesis);
    let stated: Vec<Fact> = sentences(premise).iter().map(|s| parse(s)).collect();
    if stated.iter().any(|f| f.agrees(&h)) {
        "entails"
    } else if stated.iter().any(|f| f.same_kind(&h)) {
        "contradicts"
    } else {
        "neutral"
    }
}

/// Verdict for a claim against a rendered context.
fn verify(claim: &str, context: &str) -> serde_json::Value {
    let evidence = context_facts(context);
    let Some((fact, span)) = value_span(claim) else {
        return json!({ "is_included": false, "should_update": false, "updated_claim": "" });
    };
    match evidence.iter().find(|(f, _)| f.same_kind(&fact)) {
        None => json!({ "is_included": false, "should_update": false, "updated_claim": "" }),
        Some((f, _)) if f.agrees(&fact) => json!({ "is_included": true, "should_update": false, "updated_claim": "" }),
        Some((_, v)) => {
            let updated = if matches!(fact, Fact::Phase(_)) {
                render("phase", v, &Subject::default())
            } else {
                format!("{}{}{}", &claim[..span.start], v, &claim[span.end..])
            };
            json!({ "is_included": true, "should_update": true, "updated_claim": updated })
        }
    }
}

fn refine(answer: &str, context: &str) -> String {
    sentences(answer)
        .into_iter()
        .map(|s| {
            let v = verify(&s, context);
            match v["updated_claim"].as_str() {
                Some(u) if !u.is_empty() => u.to_string(),
                _ => s,
            }
        })
        .collect::<Vec<_>>()
        .join(" ")
}

/// Decimal places of the value a statement carries.
fn precision(sentence: &str) -> usize {
    value_span(sentence)
        .and_then(|(_, r)| sentence[r].split_once('.').map(|(_, d)| d.len()))
        .unwrap_or(0)
}

/// One statement per kind, preferring the most precise, plus every distinct
/// out-of-scope statement, in first-seen order.
fn final_answer(claims_text: &str) -> String {
    let items: Vec<String> = claims_text
        .lines()
        .filter_map(|l| l.trim().split_once(". ").map(|(_, rest)| rest.trim().to_string()))
        .collect();
    let mut chosen: Vec<(Fact, String)> = Vec::new();
    for s in items {
        let f = parse(&s);
        match chosen.iter_mut().find(|(c, _)| c.same_kind(&f) || (c.agrees(&f) && matches!(f, Fact::Generic(_)))) {
            Some(slot) => {
                if precision(&s) > precision(&slot.1) {
                    *slot = (f, s);
                }
            }
            None => chosen.push((f, s)),
        }
    }
    chosen.into_iter().map(|(_, s)| s).collect::<Vec<_>>().join(" ")
}

fn extract_params(handbook: &str, question: &str) -> String {
    let simulator = serde_json::from_str::<serde_json::Value>(handbook)
        .ok()
        .and_then(|v| v.get("simulator_id")?.as_str().map(str::to_string))
        .unwrap_or_default();
    let settings = match simulator.as_str() {
        "climate" => extract::climate_settings(question),
        "epidemic" => extract::epidemic_settings(question),
        _ => None,
    };
    match settings {
        Some(s) => serde_json::to_string(&vec![s.values]).expect("settings serialize"),
        None => "[]".to_string(),
    }
}

/// Reference answer built only from the numbers in a rendered record.
fn qa_draft(query: &str, result: &str) -> String {
    let subject = match extract::read_question(query) {
        Some((Domain::Climate, s)) => {
            let place = match s.get("location") {
                Some(ParamValue::Text(n)) => n.clone(),
                Some(ParamValue::Point(p)) => {
                    format!("({}, {})", numbers::trimmed(p.lon, 4), numbers::trimmed(p.lat, 4))
                }
                _ => String::new(),
            };
            let year = s.get("year").and_then(ParamValue::as_i64).map(|y| y.to_string()).unwrap_or_default();
            Subject {
                place,
                year,
                states: String::new(),
            }
        }
        Some((Domain::Epidemiology, s)) => Subject {
            states: english_list(s.get("states").and_then(ParamValue::as_list).unwrap_or(&[])),
            ..Subject::default()
        },
        None => Subject::default(),
    };
    let answer = context_facts(result)
        .into_iter()
        .map(|(f, v)| render(f.kind(), &v, &subject))
        .collect::<Vec<_>>()
        .join(" ");
    json!({ "question": query, "answer": answer }).to_string()
}

fn derive_templates(handbook: &str) -> String {
    let simulator = serde_json::from_str::<serde_json::Value>(handbook)
        .ok()
        .and_then(|v| v.get("simulator_id")?.as_str().map(str::to_string))
        .unwrap_or_default();
    let templates: Vec<serde_json::Value> = templates_for(&simulator)
        .into_iter()
        .map(|t| json!({ "template_id": t.template_id, "query": t.query, "result": t.result }))
        .collect();
    json!({ "templates": templates }).to_string()
}

impl Backend for OfflineBackend {
    fn tag(&self) -> BackendTag {
        BackendTag::Offline
    }

    fn complete(&self, _prompt: &str, _model: &str, request: &ChatRequest) -> Result<Completion, GatewayError> {
        let b = |name| binding(request, name);
        let text = match request.template_id {
            TemplateId::AnswerSample => sample_answer(request),
            TemplateId::ClaimDecompose => decompose(b("original_text")),
            TemplateId::ClaimMerge => merge(b("existing_claim_set"), b("new_claim_set")),
            TemplateId::EntailmentJudge => json!({ "label": judge(b("premise"), b("hypothesis")) }).to_string(),
            TemplateId::BoundaryAssess => {
                let inside = self.all_in_bounds || !matches!(parse(b("claim")), Fact::Generic(_));
                json!({ "tool_confidence": u8::from(inside) }).to_string()
            }
            TemplateId::VerifyUpdate => verify(b("claim"), b("textual_context")).to_string(),
            TemplateId::FinalAnswer => final_answer(b("claims_text")),
            TemplateId::ParamExtract => extract_params(b("handbook"), b("question")),
            TemplateId::VerbalizedConf => {
                let p: f64 = rng_for(request).random_range(0.7..0.95);
                json!({ "confidence": (p * 100.0).round() / 100.0 }).to_string()
            }
            TemplateId::QaGenerate => qa_draft(b("query"), b("result")),
            TemplateId::AnswerRefine => refine(b("answer"), b("textual_context")),
            TemplateId::TemplateDerive => derive_templates(b("handbook")),
        };
        Ok(Completion {
            text,
            backend_tag: BackendTag::Offline,
            usage: None,
        })
    }
}
