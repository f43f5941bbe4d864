//! Selector and generation-mode comparison over a dataset.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{answer_metrics, label_claims, ranking_metrics, EvalRecord, RankedMetricReport, ScoredClaim};
use crate::claims;
use crate::domain::{
    Answer, Claim, GenerationMode, GenerationParams, PipelineConfig, QaItem, SelectionConfig, SelectionStrategy,
};
use crate::gateway::Gateway;
use crate::pipeline::{self, AuditEntry};

/// Which methods, budgets and generation modes to run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonSpec {
    pub base: PipelineConfig,
    pub methods: Vec<SelectionStrategy>,
    pub budgets: Vec<f64>,
    pub modes: Vec<GenerationMode>,
}

impl Default for ComparisonSpec {
    fn default() -> Self {
        ComparisonSpec {
            base: PipelineConfig::default(),
            methods: SelectionStrategy::ALL.to_vec(),
            budgets: vec![0.15, 0.25, 0.45],
            modes: GenerationMode::ALL.to_vec(),
        }
    }
}

/// A published figure kept next to the results for orientation only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceTarget {
    pub method: String,
    pub domain: String,
    pub model: String,
    pub budget: f64,
    pub f1: f64,
    pub binding: bool,
}

impl ReferenceTarget {
    pub fn published() -> Self {
        ReferenceTarget {
            method: "ue_sba".into(),
            domain: "climate".into(),
            model: "gpt-4o".into(),
            budget: 0.15,
            f1: 0.702,
            binding: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuestionFailure {
    pub question_id: String,
    pub stage: String,
    pub message: String,
}

/// One (method, budget) cell pooled over questions. `metrics` is absent when
/// no question produced a claim.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellReport {
    pub method: String,
    pub budget: f64,
    pub questions: usize,
    pub claims: usize,
    pub selected: usize,
    pub failures: Vec<QuestionFailure>,
    pub metrics: Option<RankedMetricReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeReport {
    pub mode: GenerationMode,
    pub questions: usize,
    pub mean_informativeness: f64,
    pub mean_factuality: f64,
    pub failures: Vec<QuestionFailure>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub reference: ReferenceTarget,
    pub questions: usize,
    pub cells: Vec<CellReport>,
    pub modes: Vec<ModeReport>,
}

fn failure(item: &QaItem, stage: &str, message: impl ToString) -> QuestionFailure {
    QuestionFailure {
        question_id: item.question.id.clone(),
        stage: stage.to_string(),
        message: message.to_string(),
    }
}

/// Claims an answer-only mode is judged on: its final answer, decomposed.
fn answer_claims(gateway: &Gateway, item: &QaItem, answer: &str) -> Result<Vec<Claim>, QuestionFailure> {
    if answer.trim().is_empty() {
        return Ok(Vec::new());
    }
    let a = Answer {
        id: format!("{}/final", item.question.id),
        text: answer.to_string(),
        sample_index: 0,
        generation_params: GenerationParams {
            model: gateway.model().to_string(),
            temperature: 0.0,
        },
    };
    claims::decompose(gateway, &a).map_err(|e| failure(item, "decomposition", e))
}

fn evaluate(
    gateway: &Gateway,
    item: &QaItem,
    config: &PipelineConfig,
    method: &str,
    overrides: &BTreeMap<String, bool>,
) -> Result<EvalRecord, QuestionFailure> {
    let result = pipeline::run(gateway, &item.question, config).map_err(|e| failure(item, e.stage, &e.message))?;
    let claims = match config.generation_mode {
        GenerationMode::Simulrag | GenerationMode::NoRag => result.final_claims.clone(),
        GenerationMode::InputLayer | GenerationMode::OutputLayer => answer_claims(gateway, item, &result.final_answer)?,
    };
    let labeling = label_claims(gateway, &claims, item, overrides).map_err(|e| failure(item, "labeling", e))?;
    let metrics = answer_metrics(&claims, &labeling.labels);
    let selected = result
        .audit
        .iter()
        .find_map(|e| match e {
            AuditEntry::Selection { selected, .. } => Some(selected.len()),
            _ => None,
        })
        .unwrap_or(0);
    Ok(EvalRecord {
        question_id: item.question.id.clone(),
        method: method.to_string(),
        budget: config.selection.budget,
        claims: claims
            .iter()
            .map(|c| ScoredClaim {
                claim_id: c.id.clone(),
                text: c.text.clone(),
                score: c.confidence.unwrap_or(0.0),
                label: labeling.labels[&c.id],
            })
            .collect(),
        selected,
        informativeness: metrics.informativeness,
        factuality: metrics.factuality,
        warnings: labeling.warnings,
    })
}

fn split(results: Vec<Result<EvalRecord, QuestionFailure>>) -> (Vec<EvalRecord>, Vec<QuestionFailure>) {
    let mut ok = Vec::new();
    let mut failed = Vec::new();
    for r in results {
        match r {
            Ok(rec) => ok.push(rec),
            Err(f) => failed.push(f),
        }
    }
    (ok, failed)
}

/// Run every (method, budget) cell and every generation mode over the
/// dataset. Ranking cells use kappa 0 so every scored claim is evaluated.
/// Returns the report and all per-question records in run order.
pub fn run_comparison(
    gateway: &Gateway,
    dataset: &[QaItem],
    spec: &ComparisonSpec,
    overrides: &BTreeMap<String, bool>,
) -> (ComparisonReport, Vec<EvalRecord>) {
    let mut records = Vec::new();
    let mut cells = Vec::new();
    for &method in &spec.methods {
        for &budget in &spec.budgets {
            let config = PipelineConfig {
                generation_mode: GenerationMode::Simulrag,
                selection: SelectionConfig::budget(method, budget),
                kappa: 0.0,
                ..spec.base.clone()
            };
            let results = gateway.map_concurrent(dataset, |item| evaluate(gateway, item, &config, method.as_str(), overrides));
            let (ok, failures) = split(results);
            let scores: Vec<f64> = ok.iter().flat_map(|r| r.claims.iter().map(|c| c.score)).collect();
            let labels: Vec<bool> = ok.iter().flat_map(|r| r.claims.iter().map(|c| c.label)).collect();
            cells.push(CellReport {
                method: method.as_str().to_string(),
                budget,
                questions: ok.len(),
                claims: scores.len(),
                selected: ok.iter().map(|r| r.selected).sum(),
                failures,
                metrics: (!scores.is_empty()).then(|| ranking_metrics(&scores, &labels)),
            });
            records.extend(ok);
        }
    }
    let mut modes = Vec::new();
    for &mode in &spec.modes {
        let config = PipelineConfig {
            generation_mode: mode,
            ..spec.base.clone()
        };
        let results = gateway.map_concurrent(dataset, |item| evaluate(gateway, item, &config, mode.as_str(), overrides));
        let (ok, failures) = split(results);
        let n = ok.len().max(1) as f64;
        modes.push(ModeReport {
            mode,
            questions: ok.len(),
            mean_informativeness: ok.iter().map(|r| r.informativeness as f64).sum::<f64>() / n,
            mean_factuality: ok.iter().map(|r| r.factuality).sum::<f64>() / n,
            failures,
        });
        records.extend(ok);
    }
    let report = ComparisonReport {
        reference: ReferenceTarget::published(),
        questions: dataset.len(),
        cells,
        modes,
    };
    (report, records)
}

/// Write report.json, records.jsonl and one pr_curve CSV per cell.
pub fn write_comparison(dir: &Path, report: &ComparisonReport, records: &[EvalRecord]) -> std::io::Result<()> {
    std::fs::create_dir_all(dir)?;
    let json = serde_json::to_string_pretty(report).map_err(std::io::Error::other)?;
    std::fs::write(dir.join("report.json"), json + "\n")?;
    let mut lines = String::new();
    for r in records {
        lines.push_str(&serde_json::to_string(r).map_err(std::io::Error::other)?);
        lines.push('\n');
    }
    std::fs::write(dir.join("records.jsonl"), lines)?;
    for cell in &report.cells {
        let Some(m) = &cell.metrics else { continue };
        let mut csv = String::from("threshold,precision,recall\n");
        for p in &m.pr_curve {
            let _ = writeln!(csv, "{},{},{}", p.threshold, p.precision, p.recall);
        }
        std::fs::write(dir.join(format!("pr_curve_{}_{:.2}.csv", cell.method, cell.budget)), csv)?;
    }
    Ok(())
}
