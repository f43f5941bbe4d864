use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::claims::{EntailmentGraph, MergeMap};
use crate::domain::{Answer, Claim, ClaimStatus, GenerationMode, ParamSettings, SelectionStrategy, TextualContext};
use crate::gateway::VerifyVerdict;

/// One stage artifact in a run's log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "stage", rename_all = "snake_case")]
pub enum AuditEntry {
    Retrieval {
        settings: Vec<ParamSettings>,
        context: TextualContext,
    },
    Sampling {
        mode: GenerationMode,
        answers: Vec<Answer>,
    },
    Decomposition {
        answer_id: String,
        claims: Vec<Claim>,
    },
    Merge {
        claims: Vec<Claim>,
        merge_map: MergeMap,
    },
    Graph {
        graph: EntailmentGraph,
    },
    Scoring {
        /// Centrality name, or "verbalized" / "random" for those strategies.
        source: String,
        scores: BTreeMap<String, f64>,
    },
    Boundary {
        bounds: BTreeMap<String, u8>,
        #[serde(default, skip_serializing_if = "Vec::is_empty")]
        warnings: Vec<String>,
    },
    Selection {
        strategy: SelectionStrategy,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        budget: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        threshold: Option<f64>,
        candidates: Vec<String>,
        selected: Vec<String>,
        /// Claims the budget asked for but no candidate could fill.
        shortfall: usize,
    },
    Verification {
        claim_id: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        verdict: Option<VerifyVerdict>,
        status: ClaimStatus,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        warning: Option<String>,
    },
    Refinement {
        original: String,
        refined: String,
    },
    Filter {
        kappa: f64,
        kept: Vec<String>,
        dropped: Vec<String>,
    },
    Synthesis {
        answer: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        note: Option<String>,
    },
}

impl AuditEntry {
    /// Position of the entry's stage in the run order.
    pub fn stage_rank(&self) -> usize {
        match self {
            AuditEntry::Retrieval { .. } => 0,
            AuditEntry::Sampling { .. } => 1,
            AuditEntry::Decomposition { .. } => 2,
            AuditEntry::Merge { .. } => 3,
            AuditEntry::Graph { .. } => 4,
            AuditEntry::Scoring { .. } => 5,
            AuditEntry::Boundary { .. } => 6,
            AuditEntry::Selection { .. } => 7,
            AuditEntry::Verification { .. } | AuditEntry::Refinement { .. } => 8,
            AuditEntry::Filter { .. } => 9,
            AuditEntry::Synthesis { .. } => 10,
        }
    }

    pub fn stage(&self) -> &'static str {
        match self {
            AuditEntry::Retrieval { .. } => "retrieval",
            AuditEntry::Sampling { .. } => "sampling",
            AuditEntry::Decomposition { .. } => "decomposition",
            AuditEntry::Merge { .. } => "merge",
            AuditEntry::Graph { .. } => "graph",
            AuditEntry::Scoring { .. } => "scoring",
            AuditEntry::Boundary { .. } => "boundary",
            AuditEntry::Selection { .. } => "selection",
            AuditEntry::Verification { .. } => "verification",
            AuditEntry::Refinement { .. } => "refinement",
            AuditEntry::Filter { .. } => "filter",
            AuditEntry::Synthesis { .. } => "synthesis",
        }
    }
}
