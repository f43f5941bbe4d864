//! Benchmark generation: context templates from handbooks, seeded simulator
//! draws rendered through them, and grounded question/answer items.

mod sampling;

use std::collections::BTreeMap;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::claims::{self, ClaimsError};
use crate::domain::{
    decode, encode, Answer, Domain, DomainError, GenerationParams, Handbook, ParamSettings, QaItem, Question, Record,
    SimulationOutput,
};
use crate::gateway::structured::{parse_qa_draft, parse_template_set};
use crate::gateway::{map_concurrent, ChatRequest, Gateway, GatewayError, Role, Shape, TemplateId};
use crate::numbers;
use crate::retrieval::{field_vocabulary, grounding_values, render, templates_for, ContextTemplate, RetrievalError};
use crate::simulators::{handbook_for, simulator_by_id};

pub use sampling::{draw, placeholder_param, Range, SamplingRanges};

/// Items per domain in a full-scale benchmark.
pub const FULL_SCALE_ITEMS_PER_DOMAIN: usize = 200;

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("template {template_id} uses unknown placeholders: {}", names.join(", "))]
    UnknownPlaceholder { template_id: String, names: Vec<String> },
    #[error("range for {param}: {reason}")]
    RangeOutOfBounds { param: String, reason: String },
    #[error("only {got} of {wanted} draws succeeded after {attempts} attempts")]
    InsufficientDraws { wanted: usize, got: usize, attempts: usize },
    #[error("item {item}: reference answer contains ungrounded number {number}")]
    GroundingViolation { item: String, number: String },
    #[error("no simulator for {0}")]
    UnknownSimulator(String),
    #[error("dataset line {line}: {source}")]
    Dataset { line: usize, source: DomainError },
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Retrieval(#[from] RetrievalError),
    #[error(transparent)]
    Gateway(#[from] GatewayError),
    #[error(transparent)]
    Claims(#[from] ClaimsError),
    #[error(transparent)]
    Domain(#[from] DomainError),
}

fn handbook_of(simulator_id: &str) -> Result<(Domain, &'static Handbook), BenchError> {
    Domain::ALL
        .into_iter()
        .map(|d| (d, handbook_for(d)))
        .find(|(_, h)| h.simulator_id == simulator_id)
        .ok_or_else(|| BenchError::UnknownSimulator(simulator_id.to_string()))
}

/// Ask the model for query/result template pairs and keep them only if every
/// placeholder is a field the simulator's outputs can fill.
pub fn derive_templates(gateway: &Gateway, handbook: &Handbook) -> Result<Vec<ContextTemplate>, BenchError> {
    let vocabulary = field_vocabulary(&handbook.simulator_id);
    let req = ChatRequest::new(TemplateId::TemplateDerive)
        .bind("handbook", serde_json::to_string_pretty(handbook).expect("handbook serializes"))
        .bind("placeholders", vocabulary.join(", "));
    let drafts = gateway.complete_parsed(Role::Main, &req, Shape::TemplateSet, parse_template_set)?;
    let mut out = Vec::with_capacity(drafts.len());
    for d in drafts {
        let t = ContextTemplate {
            template_id: d.template_id,
            simulator_id: handbook.simulator_id.clone(),
            query: d.query,
            result: d.result,
        };
        let unknown: Vec<String> = t.placeholders().into_iter().filter(|p| !vocabulary.contains(&p.as_str())).collect();
        if !unknown.is_empty() {
            return Err(BenchError::UnknownPlaceholder {
                template_id: t.template_id,
                names: unknown,
            });
        }
        out.push(t);
    }
    Ok(out)
}

/// One JSON file per template, named after its id.
pub fn write_templates(dir: &Path, templates: &[ContextTemplate]) -> Result<(), BenchError> {
    std::fs::create_dir_all(dir)?;
    for t in templates {
        let json = serde_json::to_string_pretty(t).expect("template serializes");
        std::fs::write(dir.join(format!("{}.json", t.template_id)), json + "\n")?;
    }
    Ok(())
}

/// Templates under `dir`, ordered by id.
pub fn read_templates(dir: &Path) -> Result<Vec<ContextTemplate>, BenchError> {
    let mut out = Vec::new();
    for entry in std::fs::read_dir(dir)? {
        let path = entry?.path();
        if path.extension().is_some_and(|e| e == "json") {
            let text = std::fs::read_to_string(&path)?;
            let t: ContextTemplate = serde_json::from_str(&text).map_err(|e| BenchError::Dataset {
                line: 0,
                source: DomainError::Json {
                    record: "ContextTemplate",
                    message: format!("{}: {e}", path.display()),
                },
            })?;
            out.push(t);
        }
    }
    out.sort_by(|a, b| a.template_id.cmp(&b.template_id));
    Ok(out)
}

/// Simulator settings shared by every draw.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FillOptions {
    pub simulator_seed: u64,
    pub ensemble_size: usize,
    pub workers: usize,
}

impl Default for FillOptions {
    fn default() -> Self {
        FillOptions {
            simulator_seed: 0,
            ensemble_size: 20,
            workers: 4,
        }
    }
}

/// A draw that ran and rendered.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundedRecord {
    pub draw_index: usize,
    pub template_id: String,
    pub settings: ParamSettings,
    pub output: SimulationOutput,
    pub query: String,
    pub result: String,
}

/// `n` successful draws, each rendered through one of `templates` picked
/// uniformly. Failed runs are logged and replaced by further draws.
pub fn fill_draws(
    templates: &[&ContextTemplate],
    ranges: &SamplingRanges,
    seed: u64,
    n: usize,
    options: &FillOptions,
) -> Result<Vec<GroundedRecord>, BenchError> {
    let Some(first) = templates.first() else {
        return Err(BenchError::UnknownSimulator(ranges.simulator_id.clone()));
    };
    let (_, handbook) = handbook_of(&first.simulator_id)?;
    ranges.check(handbook)?;
    let simulator = simulator_by_id(&handbook.simulator_id).map_err(|_| BenchError::UnknownSimulator(handbook.simulator_id.clone()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let max_attempts = 10 * n + 10;
    let mut records = Vec::with_capacity(n);
    let mut attempts = 0;
    while records.len() < n && attempts < max_attempts {
        let batch: Vec<(usize, &ContextTemplate, ParamSettings)> = (0..(n - records.len()).min(max_attempts - attempts))
            .map(|i| {
                let t = templates[rng.random_range(0..templates.len())];
                (attempts + i, t, draw(&mut rng, ranges, t, handbook))
            })
            .collect();
        attempts += batch.len();
        let results = map_concurrent(options.workers, &batch, |(idx, t, s)| {
            let out = simulator.run(s, options.simulator_seed, options.ensemble_size).map_err(|e| e.to_string())?;
            let (query, result) = render(t, std::slice::from_ref(&out)).map_err(|e| e.to_string())?;
            Ok::<_, String>(GroundedRecord {
                draw_index: *idx,
                template_id: t.template_id.clone(),
                settings: s.clone(),
                output: out,
                query,
                result,
            })
        });
        for r in results {
            match r {
                Ok(rec) => records.push(rec),
                Err(reason) => log::warn!("draw skipped: {reason}"),
            }
        }
    }
    if records.len() < n {
        return Err(BenchError::InsufficientDraws {
            wanted: n,
            got: records.len(),
            attempts,
        });
    }
    Ok(records)
}

/// `n` rendered draws of a single template.
pub fn sample_and_fill(
    template: &ContextTemplate,
    ranges: &SamplingRanges,
    seed: u64,
    n: usize,
    options: &FillOptions,
) -> Result<Vec<GroundedRecord>, BenchError> {
    fill_draws(&[template], ranges, seed, n, options)
}

/// Numerals in `text` that no field of `output` accounts for.
pub fn ungrounded_numbers(text: &str, output: &SimulationOutput) -> Vec<String> {
    numbers::ungrounded(text, &grounding_values(std::slice::from_ref(output)))
}

/// Question, reference answer and reference claims for one record.
pub fn generate_item(gateway: &Gateway, record: &GroundedRecord, id: &str) -> Result<QaItem, BenchError> {
    let (domain, _) = handbook_of(&record.settings.simulator_id)?;
    let req = ChatRequest::new(TemplateId::QaGenerate)
        .bind("query", record.query.as_str())
        .bind("result", record.result.as_str());
    let draft = gateway.complete_parsed(Role::Main, &req, Shape::QaDraft, parse_qa_draft)?;
    if let Some(number) = ungrounded_numbers(&draft.answer, &record.output).into_iter().next() {
        return Err(BenchError::GroundingViolation {
            item: id.to_string(),
            number,
        });
    }
    let answer = Answer {
        id: format!("{id}/reference"),
        text: draft.answer.clone(),
        sample_index: 0,
        generation_params: GenerationParams {
            model: gateway.model().to_string(),
            temperature: 0.0,
        },
    };
    let reference_claims = claims::decompose(gateway, &answer)?.into_iter().map(|c| c.text).collect();
    let item = QaItem {
        question: Question::new(id, domain, draft.question)?,
        reference_answer: draft.answer,
        reference_claims,
        params: vec![record.settings.clone()],
        template_id: record.template_id.clone(),
    };
    item.validate()?;
    Ok(item)
}

/// Items that passed validation, plus the ids and reasons of those that did not.
#[derive(Debug, Default)]
pub struct Generation {
    pub items: Vec<QaItem>,
    pub rejected: Vec<(String, String)>,
}

/// Generate `n` items for a domain across all of its bundled templates.
pub fn generate_dataset(
    gateway: &Gateway,
    domain: Domain,
    n: usize,
    seed: u64,
    ranges: Option<&SamplingRanges>,
    options: &FillOptions,
) -> Result<Generation, BenchError> {
    let simulator_id = handbook_for(domain).simulator_id.as_str();
    let default;
    let ranges = match ranges {
        Some(r) => r,
        None => {
            default = SamplingRanges::default_for(simulator_id)
                .ok_or_else(|| BenchError::UnknownSimulator(simulator_id.to_string()))?;
            &default
        }
    };
    let templates = templates_for(simulator_id);
    let records = fill_draws(&templates, ranges, seed, n, options)?;
    let ids: Vec<String> = (1..=records.len()).map(|i| format!("{}-{i:04}", domain.as_str())).collect();
    let pairs: Vec<(&GroundedRecord, &String)> = records.iter().zip(&ids).collect();
    let results = gateway.map_concurrent(&pairs, |(r, id)| generate_item(gateway, r, id));
    let mut out = Generation::default();
    for (r, id) in results.into_iter().zip(ids) {
        match r {
            Ok(item) => out.items.push(item),
            Err(e @ (BenchError::GroundingViolation { .. } | BenchError::Gateway(GatewayError::MalformedStructuredOutput { .. }))) => {
                log::warn!("item {id} rejected: {e}");
                out.rejected.push((id, e.to_string()));
            }
            Err(e) => return Err(e),
        }
    }
    Ok(out)
}

/// One canonical JSON line per item.
pub fn write_dataset(items: &[QaItem], path: &Path) -> Result<usize, BenchError> {
    let mut text = String::new();
    for item in items {
        text.push_str(&encode(item));
        text.push('\n');
    }
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    std::fs::write(path, text)?;
    Ok(items.len())
}

pub fn parse_dataset(text: &str) -> Result<Vec<QaItem>, BenchError> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| decode(l).map_err(|source| BenchError::Dataset { line: i + 1, source }))
        .collect()
}

pub fn read_dataset(path: &Path) -> Result<Vec<QaItem>, BenchError> {
    parse_dataset(&std::fs::read_to_string(path)?)
}

/// The appendix examples as a ten-item dataset.
pub fn appendix_examples() -> Vec<QaItem> {
    parse_dataset(include_str!("../../assets/datasets/appendix_examples.jsonl")).expect("bundled dataset parses")
}

/// Per-domain averages. A claim is quantitative when it contains a numeral.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetStats {
    pub domain: Domain,
    pub questions: usize,
    pub avg_answer_words: f64,
    pub avg_claims: f64,
    pub avg_quantitative_claims: f64,
    pub avg_qualitative_claims: f64,
    pub avg_param_count: f64,
}

pub fn dataset_stats(items: &[QaItem]) -> Vec<DatasetStats> {
    let mut by_domain: BTreeMap<Domain, Vec<&QaItem>> = BTreeMap::new();
    for item in items {
        by_domain.entry(item.question.domain).or_default().push(item);
    }
    by_domain
        .into_iter()
        .map(|(domain, items)| {
            let n = items.len() as f64;
            let avg = |f: &dyn Fn(&QaItem) -> usize| items.iter().map(|i| f(i) as f64).sum::<f64>() / n;
            let quant = |i: &QaItem| i.reference_claims.iter().filter(|c| !numbers::numerals(c).is_empty()).count();
            DatasetStats {
                domain,
                questions: items.len(),
                avg_answer_words: avg(&|i| i.reference_answer.split_whitespace().count()),
                avg_claims: avg(&|i| i.reference_claims.len()),
                avg_quantitative_claims: avg(&quant),
                avg_qualitative_claims: avg(&|i| i.reference_claims.len() - quant(i)),
                avg_param_count: avg(&|i| i.params.iter().map(|p| p.values.len()).sum()),
            }
        })
        .collect()
}

/// Fixed-width table of [`dataset_stats`].
pub fn stats_table(stats: &[DatasetStats]) -> String {
    let mut out = format!(
        "{:<14}{:>11}{:>14}{:>12}{:>14}{:>13}{:>13}\n",
        "benchmark", "questions", "answer_words", "claims", "quant_claims", "qual_claims", "param_count"
    );
    for s in stats {
        out.push_str(&format!(
            "{:<14}{:>11}{:>14.1}{:>12.1}{:>14.1}{:>13.1}{:>13.1}\n",
            s.domain.as_str(),
            s.questions,
            s.avg_answer_words,
            s.avg_claims,
            s.avg_quantitative_claims,
            s.avg_qualitative_claims,
            s.avg_param_count
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::offline::OfflineBackend;
    use std::sync::Arc;

    fn offline() -> Gateway {
        Gateway::new(Arc::new(OfflineBackend::default()), "offline")
    }

    #[test]
    fn appendix_climate_claims_average_four() {
        let stats = dataset_stats(&appendix_examples());
        assert_eq!(stats[0].domain, Domain::Climate);
        assert_eq!(stats[0].questions, 5);
        assert_eq!(stats[0].avg_claims, 4.0);
        assert_eq!(stats[1].questions, 5);
    }

    #[test]
    fn default_ranges_fit_handbooks() {
        for d in Domain::ALL {
            let h = handbook_for(d);
            SamplingRanges::default_for(&h.simulator_id).unwrap().check(h).unwrap();
        }
    }

    #[test]
    fn range_outside_handbook_rejected() {
        let mut r = SamplingRanges::default_for("epidemic").unwrap();
        r.ranges.insert("R0".into(), Range::Real { min: 0.5, max: 2.0 });
        assert!(matches!(r.check(handbook_for(Domain::Epidemiology)), Err(BenchError::RangeOutOfBounds { .. })));
    }

    #[test]
    fn seeded_draws_repeat() {
        let t = crate::retrieval::context_template("epi_outlook").unwrap();
        let r = SamplingRanges::default_for("epidemic").unwrap();
        let a = sample_and_fill(t, &r, 7, 5, &FillOptions::default()).unwrap();
        let b = sample_and_fill(t, &r, 7, 5, &FillOptions::default()).unwrap();
        assert_eq!(a, b);
        assert!(a.iter().all(|r| !r.result.contains("{{")));
    }

    #[test]
    fn ghg_template_leaves_aerosols_at_default() {
        let t = crate::retrieval::context_template("climate_ghg").unwrap();
        let r = SamplingRanges::default_for("climate").unwrap();
        for rec in sample_and_fill(t, &r, 3, 4, &FillOptions::default()).unwrap() {
            assert!(rec.settings.get("delta_SO2").is_none());
            assert!(rec.settings.get("delta_CO2").is_some());
        }
    }

    #[test]
    fn offline_items_are_grounded() {
        let gw = offline();
        let g = generate_dataset(&gw, Domain::Epidemiology, 3, 1, None, &FillOptions::default()).unwrap();
        assert!(g.rejected.is_empty(), "{:?}", g.rejected);
        assert_eq!(g.items.len(), 3);
        for item in &g.items {
            assert!(!item.reference_answer.contains("{{"));
        }
    }

    #[test]
    fn dataset_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.jsonl");
        assert_eq!(write_dataset(&[], &path).unwrap(), 0);
        assert_eq!(std::fs::read_to_string(&path).unwrap(), "");
        let items = appendix_examples();
        assert_eq!(write_dataset(&items, &path).unwrap(), 10);
        assert_eq!(read_dataset(&path).unwrap(), items);
    }
}
