//! Synthetic-label selector study.
//!
//! Each question gets a random answer/claim entailment graph. A claim backed
//! by more answers is less likely to be false, and each claim is checkable by
//! the simulator with a fixed probability. Verifying a checkable claim makes
//! it true with confidence 1; verifying an uncheckable one changes nothing.
//! Scoring and selection use the same code as the pipeline.

use std::collections::BTreeMap;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::ranking_metrics;
use crate::claims::{score_confidence, EntailmentGraph};
use crate::domain::{CentralityMetric, Claim, ClosenessVariant, SelectionMode, SelectionStrategy};
use crate::pipeline::{random_scores, select_claims};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticConfig {
    pub questions: usize,
    /// Answers per question.
    pub answers: usize,
    pub min_claims: usize,
    pub max_claims: usize,
    /// P(false) for a claim backed by one answer.
    pub p_false_low_support: f64,
    /// P(false) for a claim backed by every answer.
    pub p_false_full_support: f64,
    /// P(bound = 1).
    pub checkable: f64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        SyntheticConfig {
            questions: 100,
            answers: 5,
            min_claims: 4,
            max_claims: 12,
            p_false_low_support: 0.8,
            p_false_full_support: 0.1,
            checkable: 0.6,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticQuestion {
    pub graph: EntailmentGraph,
    pub claims: Vec<Claim>,
    pub labels: Vec<bool>,
    pub bounds: BTreeMap<String, u8>,
}

pub fn synthetic_question(rng: &mut ChaCha8Rng, cfg: &SyntheticConfig, qid: usize) -> SyntheticQuestion {
    let answers: Vec<String> = (0..cfg.answers).map(|i| format!("s{qid}/a{i}")).collect();
    let k = rng.random_range(cfg.min_claims..=cfg.max_claims);
    let mut claims = Vec::with_capacity(k);
    let mut labels = Vec::with_capacity(k);
    let mut bounds = BTreeMap::new();
    let mut edges = Vec::new();
    for j in 0..k {
        let id = format!("s{qid}/c{j:02}");
        let support = rng.random_range(1..=cfg.answers);
        let origins: Vec<String> = sample(rng, cfg.answers, support).into_iter().map(|i| answers[i].clone()).collect();
        let frac = if cfg.answers > 1 {
            (support - 1) as f64 / (cfg.answers - 1) as f64
        } else {
            1.0
        };
        let p_false = cfg.p_false_low_support + (cfg.p_false_full_support - cfg.p_false_low_support) * frac;
        labels.push(!rng.random_bool(p_false));
        bounds.insert(id.clone(), u8::from(rng.random_bool(cfg.checkable)));
        let mut c = Claim::new(id.clone(), format!("synthetic claim {j}"), origins[0].clone()).expect("claim");
        c.origin_answer_ids.extend(origins.iter().cloned());
        for a in origins {
            edges.push((a, id.clone()));
        }
        claims.push(c);
    }
    let mut graph = EntailmentGraph::new(answers, claims.iter().map(|c| c.id.clone()).collect());
    for (a, c) in edges {
        graph.add_edge(&a, &c);
    }
    SyntheticQuestion {
        graph,
        claims,
        labels,
        bounds,
    }
}

/// Scores and labels after one method verifies its selection.
pub fn verified(q: &SyntheticQuestion, strategy: SelectionStrategy, budget: f64, seed: u64) -> (Vec<f64>, Vec<bool>) {
    let scores = match strategy {
        SelectionStrategy::Random | SelectionStrategy::Verbalized => random_scores(&q.claims, seed),
        SelectionStrategy::UeSba | SelectionStrategy::Uncertainty => {
            score_confidence(&q.graph, CentralityMetric::Closeness, ClosenessVariant::AsWritten).expect("nonempty graph")
        }
    };
    let sel = select_claims(&q.claims, &scores, &q.bounds, strategy, SelectionMode::Budget(budget));
    let mut out_scores = Vec::with_capacity(q.claims.len());
    let mut out_labels = Vec::with_capacity(q.claims.len());
    for (c, &label) in q.claims.iter().zip(&q.labels) {
        if sel.selected.contains(&c.id) && q.bounds[&c.id] == 1 {
            out_scores.push(1.0);
            out_labels.push(true);
        } else {
            out_scores.push(scores[&c.id]);
            out_labels.push(label);
        }
    }
    (out_scores, out_labels)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyRow {
    pub strategy: SelectionStrategy,
    pub budget: f64,
    /// Mean over seeds of the pooled balanced F1.
    pub f1: f64,
    pub aupr: f64,
    pub auroc: f64,
}

/// Pooled metrics per (strategy, budget), averaged over seeds.
pub fn run_study(cfg: &SyntheticConfig, seeds: &[u64], strategies: &[SelectionStrategy], budgets: &[f64]) -> Vec<StudyRow> {
    let per_seed: Vec<Vec<SyntheticQuestion>> = seeds
        .iter()
        .map(|&seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..cfg.questions).map(|q| synthetic_question(&mut rng, cfg, q)).collect()
        })
        .collect();
    let mut rows = Vec::new();
    for &strategy in strategies {
        for &budget in budgets {
            let (mut f1, mut aupr, mut auroc) = (0.0, 0.0, 0.0);
            for (&seed, questions) in seeds.iter().zip(&per_seed) {
                let mut scores = Vec::new();
                let mut labels = Vec::new();
                for (i, q) in questions.iter().enumerate() {
                    let (s, l) = verified(q, strategy, budget, seed.wrapping_mul(1_000_003).wrapping_add(i as u64));
                    scores.extend(s);
                    labels.extend(l);
                }
                let m = ranking_metrics(&scores, &labels);
                f1 += m.f1;
                aupr += m.aupr;
                auroc += m.auroc;
            }
            let n = seeds.len().max(1) as f64;
            rows.push(StudyRow {
                strategy,
                budget,
                f1: f1 / n,
                aupr: aupr / n,
                auroc: auroc / n,
            });
        }
    }
    rows
}
