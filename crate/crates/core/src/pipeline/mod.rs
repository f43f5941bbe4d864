//! Claim-level verification pipeline and the baseline generation modes.

mod audit;
mod ops;

use std::collections::BTreeMap;

use thiserror::Error;

use crate::claims::{self, score_confidence, ClaimsError};
use crate::domain::{
    Claim, Domain, GenerationMode, PipelineConfig, PipelineResult, Question, Record, SelectionStrategy,
    TextualContext,
};
use crate::gateway::Gateway;
use crate::retrieval::{self, default_template_id};
use crate::simulators::{handbook_for, simulator_for};

pub use audit::AuditEntry;
pub use ops::{
    apply_verdict, assess_boundary, budget_count, enumerate_claims, random_scores, refine_answer, select_claims,
    synthesize_answer, verbalized_confidence, verify_and_update, Selection, Verification, NO_CLAIMS_NOTE, REFUSAL,
};

/// A failed run: the stage that failed and everything logged before it.
#[derive(Debug, Error)]
#[error("{stage} stage failed: {message}")]
pub struct PipelineError {
    pub stage: &'static str,
    pub message: String,
    pub audit: Vec<AuditEntry>,
}

struct Run<'a> {
    gateway: &'a Gateway,
    question: &'a Question,
    domain: Domain,
    config: &'a PipelineConfig,
    audit: Vec<AuditEntry>,
}

impl Run<'_> {
    fn fail(&mut self, stage: &'static str, err: impl std::fmt::Display) -> PipelineError {
        PipelineError {
            stage,
            message: err.to_string(),
            audit: std::mem::take(&mut self.audit),
        }
    }

    fn retrieve(&mut self) -> Result<TextualContext, PipelineError> {
        let handbook = handbook_for(self.domain);
        let settings = retrieval::extract_parameters(self.gateway, self.question, handbook)
            .map_err(|e| self.fail("retrieval", e))?;
        let template = default_template_id(&handbook.simulator_id).expect("bundled simulators have templates");
        let context = retrieval::run_and_contextualize(
            simulator_for(self.domain),
            &settings,
            template,
            self.config.seeds.simulator,
            self.config.ensemble_size,
        )
        .map_err(|e| self.fail("retrieval", e))?;
        self.audit.push(AuditEntry::Retrieval {
            settings,
            context: context.clone(),
        });
        Ok(context)
    }

    fn finish(&mut self, final_answer: String, final_claims: Vec<Claim>) -> Result<PipelineResult, PipelineError> {
        let result = PipelineResult {
            question: self.question.clone(),
            final_answer,
            final_claims,
            audit: std::mem::take(&mut self.audit),
        };
        result.validate().map_err(|e| PipelineError {
            stage: "synthesis",
            message: e.to_string(),
            audit: result.audit.clone(),
        })?;
        Ok(result)
    }

    fn single_answer(&mut self, context: Option<&TextualContext>) -> Result<String, PipelineError> {
        let answers = claims::sample_answers(self.gateway, self.question, 1, context.map(|c| c.text.as_str()))
            .map_err(|e| self.fail("sampling", e))?;
        let text = answers[0].text.clone();
        self.audit.push(AuditEntry::Sampling {
            mode: self.config.generation_mode,
            answers,
        });
        Ok(text)
    }

    /// Score claims with the source the strategy calls for.
    fn score(&mut self, merged: &[Claim], graph: &claims::EntailmentGraph) -> Result<BTreeMap<String, f64>, PipelineError> {
        let strategy = self.config.selection.strategy;
        let (source, scores) = match strategy {
            SelectionStrategy::Verbalized => {
                let results = self
                    .gateway
                    .map_concurrent(merged, |c| verbalized_confidence(self.gateway, self.question, c));
                let mut scores = BTreeMap::new();
                for (c, r) in merged.iter().zip(results) {
                    scores.insert(c.id.clone(), r.map_err(|e| self.fail("scoring", e))?);
                }
                ("verbalized".to_string(), scores)
            }
            SelectionStrategy::Random => ("random".to_string(), random_scores(merged, self.config.seeds.random_selector)),
            SelectionStrategy::UeSba | SelectionStrategy::Uncertainty => {
                let scores = score_confidence(graph, self.config.centrality_metric, self.config.closeness_variant)
                    .map_err(|e| self.fail("scoring", e))?;
                (self.config.centrality_metric.as_str().to_string(), scores)
            }
        };
        self.audit.push(AuditEntry::Scoring {
            source,
            scores: scores.clone(),
        });
        Ok(scores)
    }

    fn claim_stage(&mut self, context: Option<&TextualContext>) -> Result<PipelineResult, PipelineError> {
        let config = self.config;
        let gw = self.gateway;
        let answers =
            claims::sample_answers(gw, self.question, config.m, None).map_err(|e| self.fail("sampling", e))?;
        self.audit.push(AuditEntry::Sampling {
            mode: config.generation_mode,
            answers: answers.clone(),
        });

        let decomposed = gw.map_concurrent(&answers, |a| claims::decompose(gw, a));
        let mut per_answer = Vec::with_capacity(answers.len());
        for (a, r) in answers.iter().zip(decomposed) {
            let cs = r.map_err(|e: ClaimsError| self.fail("decomposition", e))?;
            self.audit.push(AuditEntry::Decomposition {
                answer_id: a.id.clone(),
                claims: cs.clone(),
            });
            per_answer.push(cs);
        }

        let (mut merged, merge_map) = claims::merge_all(gw, per_answer).map_err(|e| self.fail("merge", e))?;
        self.audit.push(AuditEntry::Merge {
            claims: merged.clone(),
            merge_map,
        });

        let graph = claims::build_entailment_graph(gw, &answers, &merged).map_err(|e| self.fail("graph", e))?;
        self.audit.push(AuditEntry::Graph { graph: graph.clone() });

        let scores = self.score(&merged, &graph)?;
        for c in &mut merged {
            c.confidence = scores.get(&c.id).copied();
        }

        if let Some(context) = context {
            self.verify_stage(&mut merged, &scores, context)?;
        }

        let (kept, dropped): (Vec<Claim>, Vec<Claim>) =
            merged.into_iter().partition(|c| c.confidence.unwrap_or(0.0) >= config.kappa);
        self.audit.push(AuditEntry::Filter {
            kappa: config.kappa,
            kept: kept.iter().map(|c| c.id.clone()).collect(),
            dropped: dropped.iter().map(|c| c.id.clone()).collect(),
        });
        let (answer, note) = synthesize_answer(gw, self.question, &kept).map_err(|e| self.fail("synthesis", e))?;
        self.audit.push(AuditEntry::Synthesis {
            answer: answer.clone(),
            note,
        });
        self.finish(answer, kept)
    }

    fn verify_stage(
        &mut self,
        merged: &mut [Claim],
        scores: &BTreeMap<String, f64>,
        context: &TextualContext,
    ) -> Result<(), PipelineError> {
        let config = self.config;
        let gw = self.gateway;
        let strategy = config.selection.strategy;
        let mut bounds = BTreeMap::new();
        if strategy == SelectionStrategy::UeSba {
            let handbook = handbook_for(self.domain);
            let results = gw.map_concurrent(merged, |c| assess_boundary(gw, c, self.question, handbook));
            let mut warnings = Vec::new();
            for (c, r) in merged.iter_mut().zip(results) {
                let (b, w) = r.map_err(|e| self.fail("boundary", e))?;
                c.bound = Some(b);
                bounds.insert(c.id.clone(), b);
                warnings.extend(w);
            }
            self.audit.push(AuditEntry::Boundary { bounds: bounds.clone(), warnings });
        }

        let mode = config.selection.mode().expect("validated config has a selection mode");
        let selection = select_claims(merged, scores, &bounds, strategy, mode);
        self.audit.push(AuditEntry::Selection {
            strategy,
            budget: config.selection.budget,
            threshold: config.selection.threshold,
            candidates: selection.candidates.clone(),
            selected: selection.selected.clone(),
            shortfall: selection.shortfall,
        });

        let mut chosen: Vec<usize> = merged
            .iter()
            .enumerate()
            .filter(|(_, c)| selection.selected.contains(&c.id))
            .map(|(i, _)| i)
            .collect();
        chosen.sort_by(|&a, &b| merged[a].id.cmp(&merged[b].id));
        let targets: Vec<Claim> = chosen.iter().map(|&i| merged[i].clone()).collect();
        let results = gw.map_concurrent(&targets, |c| verify_and_update(gw, c, context));
        for (&i, r) in chosen.iter().zip(results) {
            let v = r.map_err(|e| self.fail("verification", e))?;
            self.audit.push(AuditEntry::Verification {
                claim_id: v.claim.id.clone(),
                verdict: v.verdict,
                status: v.claim.status,
                warning: v.warning,
            });
            merged[i] = v.claim;
        }
        Ok(())
    }
}

/// Answer one question end to end.
pub fn run(gateway: &Gateway, question: &Question, config: &PipelineConfig) -> Result<PipelineResult, PipelineError> {
    let mut run = Run {
        gateway,
        question,
        domain: question.domain,
        config,
        audit: Vec::new(),
    };
    config.validate().map_err(|e| run.fail("config", e))?;
    match config.generation_mode {
        GenerationMode::NoRag => run.claim_stage(None),
        GenerationMode::Simulrag => {
            let context = run.retrieve()?;
            run.claim_stage(Some(&context))
        }
        GenerationMode::InputLayer => {
            let context = run.retrieve()?;
            let answer = run.single_answer(Some(&context))?;
            run.audit.push(AuditEntry::Synthesis {
                answer: answer.clone(),
                note: None,
            });
            run.finish(answer, Vec::new())
        }
        GenerationMode::OutputLayer => {
            let context = run.retrieve()?;
            let answer = run.single_answer(None)?;
            let refined =
                refine_answer(gateway, question, &answer, &context).map_err(|e| run.fail("refinement", e))?;
            run.audit.push(AuditEntry::Refinement {
                original: answer,
                refined: refined.clone(),
            });
            run.audit.push(AuditEntry::Synthesis {
                answer: refined.clone(),
                note: None,
            });
            run.finish(refined, Vec::new())
        }
    }
}
