//! Shared domain records and their canonical JSON encoding.
//!
//! Every record implements [`Record`], which pairs a serde representation with
//! an invariant check. [`encode`] produces the canonical form (struct field
//! order, sorted maps) and [`decode`] rejects payloads that parse but violate
//! the record's invariants.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use chrono::NaiveDate;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::claims::{EntailmentGraph, MergeMap};
use crate::pipeline::AuditEntry;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DomainError {
    #[error("schema violation in {record}: {reason}")]
    SchemaViolation { record: &'static str, reason: String },
    #[error("malformed {record} JSON: {message}")]
    Json {
        record: &'static str,
        message: String,
    },
}

fn violation(record: &'static str, reason: impl Into<String>) -> DomainError {
    DomainError::SchemaViolation {
        record,
        reason: reason.into(),
    }
}

/// A serializable record with invariants checked on construction and parse.
pub trait Record: Serialize + DeserializeOwned {
    const NAME: &'static str;

    fn validate(&self) -> Result<(), DomainError>;
}

/// Canonical UTF-8 JSON encoding of a record.
pub fn encode<T: Record>(record: &T) -> String {
    serde_json::to_string(record).expect("domain records always serialize")
}

/// Parse a record and enforce its invariants.
pub fn decode<T: Record>(text: &str) -> Result<T, DomainError> {
    let record: T = serde_json::from_str(text).map_err(|e| DomainError::Json {
        record: T::NAME,
        message: e.to_string(),
    })?;
    record.validate()?;
    Ok(record)
}

/// Scientific domain a question belongs to; each maps to one simulator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Domain {
    Climate,
    Epidemiology,
}

impl Domain {
    pub const ALL: [Domain; 2] = [Domain::Climate, Domain::Epidemiology];

    pub fn as_str(self) -> &'static str {
        match self {
            Domain::Climate => "climate",
            Domain::Epidemiology => "epidemiology",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "climate" => Some(Domain::Climate),
            "epidemiology" | "epi" => Some(Domain::Epidemiology),
            _ => None,
        }
    }
}

impl fmt::Display for Domain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Question {
    pub id: String,
    pub domain: Domain,
    pub text: String,
}

impl Question {
    pub fn new(
        id: impl Into<String>,
        domain: Domain,
        text: impl Into<String>,
    ) -> Result<Self, DomainError> {
        let q = Question {
            id: id.into(),
            domain,
            text: text.into(),
        };
        q.validate()?;
        Ok(q)
    }
}

impl Record for Question {
    const NAME: &'static str = "Question";

    fn validate(&self) -> Result<(), DomainError> {
        if self.id.trim().is_empty() {
            return Err(violation(Self::NAME, "id is empty"));
        }
        if self.text.trim().is_empty() {
            return Err(violation(Self::NAME, "text is empty"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationParams {
    pub model: String,
    pub temperature: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Answer {
    pub id: String,
    pub text: String,
    pub sample_index: u32,
    pub generation_params: GenerationParams,
}

impl Record for Answer {
    const NAME: &'static str = "Answer";

    fn validate(&self) -> Result<(), DomainError> {
        if self.id.trim().is_empty() {
            return Err(violation(Self::NAME, "id is empty"));
        }
        if self.text.trim().is_empty() {
            return Err(violation(Self::NAME, "text is empty"));
        }
        let t = self.generation_params.temperature;
        if !(t.is_finite() && t >= 0.0) {
            return Err(violation(Self::NAME, format!("temperature {t} is not >= 0")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClaimStatus {
    Original,
    Updated,
    VerifiedAligned,
    Indeterminate,
    Filtered,
}

impl ClaimStatus {
    /// Statuses that pin confidence to exactly 1.
    pub fn is_verified(self) -> bool {
        matches!(self, ClaimStatus::Updated | ClaimStatus::VerifiedAligned)
    }
}

/// An atomic factual statement with provenance and scoring state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Claim {
    pub id: String,
    pub text: String,
    /// Answers this claim was decomposed from (unioned on merge).
    pub origin_answer_ids: BTreeSet<String>,
    /// Unset is distinct from zero and serializes as an absent field.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub confidence: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bound: Option<u8>,
    pub status: ClaimStatus,
    /// Truth label; only the evaluation module sets it.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<bool>,
}

impl Claim {
    pub fn new(
        id: impl Into<String>,
        text: impl Into<String>,
        origin: impl Into<String>,
    ) -> Result<Self, DomainError> {
        let c = Claim {
            id: id.into(),
            text: text.into(),
            origin_answer_ids: BTreeSet::from([origin.into()]),
            confidence: None,
            bound: None,
            status: ClaimStatus::Original,
            label: None,
        };
        c.validate()?;
        Ok(c)
    }
}

impl Record for Claim {
    const NAME: &'static str = "Claim";

    fn validate(&self) -> Result<(), DomainError> {
        if self.id.trim().is_empty() {
            return Err(violation(Self::NAME, "id is empty"));
        }
        if self.text.trim().is_empty() {
            return Err(violation(Self::NAME, "text is empty"));
        }
        if self.origin_answer_ids.is_empty() {
            return Err(violation(Self::NAME, "origin_answer_ids is empty"));
        }
        if let Some(c) = self.confidence {
            if !(0.0..=1.0).contains(&c) {
                return Err(violation(Self::NAME, format!("confidence {c} outside [0, 1]")));
            }
        }
        if let Some(b) = self.bound {
            if b > 1 {
                return Err(violation(Self::NAME, format!("bound {b} not in {{0, 1}}")));
            }
        }
        if self.status.is_verified() && self.confidence != Some(1.0) {
            return Err(violation(
                Self::NAME,
                format!("status {:?} requires confidence 1", self.status),
            ));
        }
        Ok(())
    }
}

/// A longitude/latitude pair in degrees.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeoPoint {
    pub lon: f64,
    pub lat: f64,
}

impl GeoPoint {
    pub fn is_valid(&self) -> bool {
        (-180.0..=180.0).contains(&self.lon) && (-90.0..=90.0).contains(&self.lat)
    }
}

/// Kind-specific constraint of a simulator parameter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ParamKind {
    Real { min: f64, max: f64 },
    Integer { min: i64, max: i64 },
    Date { min: NaiveDate, max: NaiveDate },
    Enum { allowed: Vec<String> },
    /// Either a coordinate pair or one of the named places.
    GeoPoint {
        #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
        places: BTreeMap<String, GeoPoint>,
    },
    StringList {
        allowed: Vec<String>,
        min_len: usize,
        max_len: usize,
    },
}

impl ParamKind {
    pub fn tag(&self) -> &'static str {
        match self {
            ParamKind::Real { .. } => "real",
            ParamKind::Integer { .. } => "integer",
            ParamKind::Date { .. } => "date",
            ParamKind::Enum { .. } => "enum",
            ParamKind::GeoPoint { .. } => "geo_point",
            ParamKind::StringList { .. } => "string_list",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamSpec {
    pub name: String,
    #[serde(flatten)]
    pub kind: ParamKind,
    pub units: String,
    pub description: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub default: Option<ParamValue>,
}

impl ParamSpec {
    fn check_shape(&self) -> Result<(), String> {
        match &self.kind {
            ParamKind::Real { min, max } => {
                if !(min.is_finite() && max.is_finite() && min <= max) {
                    return Err(format!("{}: invalid range [{min}, {max}]", self.name));
                }
            }
            ParamKind::Integer { min, max } if min > max => {
                return Err(format!("{}: invalid range [{min}, {max}]", self.name));
            }
            ParamKind::Date { min, max } if min > max => {
                return Err(format!("{}: invalid date range [{min}, {max}]", self.name));
            }
            ParamKind::Enum { allowed } if allowed.is_empty() => {
                return Err(format!("{}: enum has no allowed values", self.name));
            }
            ParamKind::StringList {
                allowed,
                min_len,
                max_len,
            } => {
                if allowed.is_empty() || min_len > max_len {
                    return Err(format!("{}: invalid string list constraint", self.name));
                }
            }
            _ => {}
        }
        if let Some(d) = &self.default {
            self.check_value(d)?;
        }
        Ok(())
    }

    /// Check one value against this spec; the error names the violated bound.
    pub fn check_value(&self, value: &ParamValue) -> Result<(), String> {
        match (&self.kind, value) {
            (ParamKind::Real { min, max }, v) => match v.as_f64() {
                Some(x) if x >= *min && x <= *max => Ok(()),
                Some(x) => Err(format!("{x} outside [{min}, {max}]")),
                None => Err("expected a number".into()),
            },
            (ParamKind::Integer { min, max }, ParamValue::Integer(x)) => {
                if x >= min && x <= max {
                    Ok(())
                } else {
                    Err(format!("{x} outside [{min}, {max}]"))
                }
            }
            (ParamKind::Integer { .. }, _) => Err("expected an integer".into()),
            (ParamKind::Date { min, max }, ParamValue::Text(s)) => {
                let d = NaiveDate::parse_from_str(s, "%Y-%m-%d")
                    .map_err(|_| format!("{s:?} is not an ISO-8601 date"))?;
                if d >= *min && d <= *max {
                    Ok(())
                } else {
                    Err(format!("{d} outside [{min}, {max}]"))
                }
            }
            (ParamKind::Date { .. }, _) => Err("expected an ISO-8601 date string".into()),
            (ParamKind::Enum { allowed }, ParamValue::Text(s)) => {
                if allowed.iter().any(|a| a == s) {
                    Ok(())
                } else {
                    Err(format!("{s:?} not one of {allowed:?}"))
                }
            }
            (ParamKind::Enum { .. }, _) => Err("expected a string".into()),
            (ParamKind::GeoPoint { .. }, ParamValue::Point(p)) => {
                if p.is_valid() {
                    Ok(())
                } else {
                    Err(format!("({}, {}) outside lon [-180, 180] / lat [-90, 90]", p.lon, p.lat))
                }
            }
            (ParamKind::GeoPoint { places }, ParamValue::Text(name)) => {
                if places.contains_key(name) {
                    Ok(())
                } else {
                    Err(format!("unknown place {name:?}"))
                }
            }
            (ParamKind::GeoPoint { .. }, _) => Err("expected a {lon, lat} object or place name".into()),
            (
                ParamKind::StringList {
                    allowed,
                    min_len,
                    max_len,
                },
                ParamValue::List(items),
            ) => {
                if items.len() < *min_len || items.len() > *max_len {
                    return Err(format!(
                        "list length {} outside [{min_len}, {max_len}]",
                        items.len()
                    ));
                }
                let mut seen = BTreeSet::new();
                for item in items {
                    if !allowed.iter().any(|a| a == item) {
                        return Err(format!("{item:?} is not an allowed value"));
                    }
                    if !seen.insert(item) {
                        return Err(format!("{item:?} listed twice"));
                    }
                }
                Ok(())
            }
            (ParamKind::StringList { .. }, _) => Err("expected a list of strings".into()),
        }
    }
}

/// A parameter value. Dates and enum members are carried as text and
/// interpreted through the owning [`ParamSpec`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ParamValue {
    Integer(i64),
    Real(f64),
    Text(String),
    Point(GeoPoint),
    List(Vec<String>),
}

impl ParamValue {
    pub fn as_f64(&self) -> Option<f64> {
        match self {
            ParamValue::Integer(i) => Some(*i as f64),
            ParamValue::Real(x) => Some(*x),
            _ => None,
        }
    }

    pub fn as_i64(&self) -> Option<i64> {
        match self {
            ParamValue::Integer(i) => Some(*i),
            ParamValue::Real(x) if x.fract() == 0.0 => Some(*x as i64),
            _ => None,
        }
    }

    pub fn as_str(&self) -> Option<&str> {
        match self {
            ParamValue::Text(s) => Some(s),
            _ => None,
        }
    }

    pub fn as_list(&self) -> Option<&[String]> {
        match self {
            ParamValue::List(v) => Some(v),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputKind {
    Scalar,
    Label,
    Series,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputSpec {
    pub name: String,
    pub kind: OutputKind,
    pub units: String,
    pub description: String,
}

/// Machine-readable simulator documentation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Handbook {
    pub simulator_id: String,
    pub version: String,
    pub description: String,
    pub params: Vec<ParamSpec>,
    pub outputs: Vec<OutputSpec>,
    pub boundary_notes: String,
}

/// One offending parameter in a validation failure.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FieldError {
    pub name: String,
    pub reason: String,
}

impl fmt::Display for FieldError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.name, self.reason)
    }
}

impl Handbook {
    pub fn param(&self, name: &str) -> Option<&ParamSpec> {
        self.params.iter().find(|p| p.name == name)
    }

    pub fn output(&self, name: &str) -> Option<&OutputSpec> {
        self.outputs.iter().find(|o| o.name == name)
    }

    /// Check settings against the parameter schema: no unknown names, every
    /// parameter without a default present, every value in range.
    pub fn check_settings(&self, settings: &ParamSettings) -> Result<(), Vec<FieldError>> {
        let mut errors = Vec::new();
        if settings.simulator_id != self.simulator_id {
            errors.push(FieldError {
                name: "simulator_id".into(),
                reason: format!(
                    "settings target {:?}, handbook is {:?}",
                    settings.simulator_id, self.simulator_id
                ),
            });
        }
        for (name, value) in &settings.values {
            match self.param(name) {
                None => errors.push(FieldError {
                    name: name.clone(),
                    reason: "unknown parameter".into(),
                }),
                Some(spec) => {
                    if let Err(reason) = spec.check_value(value) {
                        errors.push(FieldError {
                            name: name.clone(),
                            reason,
                        });
                    }
                }
            }
        }
        for spec in &self.params {
            if spec.default.is_none() && !settings.values.contains_key(&spec.name) {
                errors.push(FieldError {
                    name: spec.name.clone(),
                    reason: "required parameter missing".into(),
                });
            }
        }
        if errors.is_empty() {
            Ok(())
        } else {
            Err(errors)
        }
    }

    /// Settings with every absent parameter replaced by its default.
    pub fn with_defaults(&self, settings: &ParamSettings) -> ParamSettings {
        let mut out = settings.clone();
        for spec in &self.params {
            if let Some(d) = &spec.default {
                out.values.entry(spec.name.clone()).or_insert_with(|| d.clone());
            }
        }
        out
    }

    /// Check that every output name in a simulation result is documented.
    pub fn check_output(&self, output: &SimulationOutput) -> Result<(), DomainError> {
        let names = output
            .scalars
            .keys()
            .chain(output.labels.keys())
            .chain(output.series.keys());
        for name in names {
            if self.output(name).is_none() {
                return Err(violation(
                    SimulationOutput::NAME,
                    format!("output {name:?} not declared by handbook {}", self.simulator_id),
                ));
            }
        }
        Ok(())
    }
}

impl Record for Handbook {
    const NAME: &'static str = "Handbook";

    fn validate(&self) -> Result<(), DomainError> {
        let mut names = BTreeSet::new();
        for p in &self.params {
            if !names.insert(p.name.as_str()) {
                return Err(violation(Self::NAME, format!("duplicate parameter {:?}", p.name)));
            }
            p.check_shape().map_err(|r| violation(Self::NAME, r))?;
        }
        let mut outs = BTreeSet::new();
        for o in &self.outputs {
            if !outs.insert(o.name.as_str()) {
                return Err(violation(Self::NAME, format!("duplicate output {:?}", o.name)));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Extracted,
    Sampled,
    Manual,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamSettings {
    pub simulator_id: String,
    pub values: BTreeMap<String, ParamValue>,
    pub provenance: Provenance,
}

impl ParamSettings {
    pub fn new(simulator_id: impl Into<String>, provenance: Provenance) -> Self {
        ParamSettings {
            simulator_id: simulator_id.into(),
            values: BTreeMap::new(),
            provenance,
        }
    }

    pub fn with(mut self, name: &str, value: ParamValue) -> Self {
        self.values.insert(name.to_string(), value);
        self
    }

    pub fn get(&self, name: &str) -> Option<&ParamValue> {
        self.values.get(name)
    }
}

impl Record for ParamSettings {
    const NAME: &'static str = "ParamSettings";

    fn validate(&self) -> Result<(), DomainError> {
        if self.simulator_id.trim().is_empty() {
            return Err(violation(Self::NAME, "simulator_id is empty"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalarValue {
    pub value: f64,
    pub units: String,
}

/// Numerical result of one simulator execution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationOutput {
    pub params: ParamSettings,
    pub scalars: BTreeMap<String, ScalarValue>,
    /// Categorical outputs such as land/sea classification or growth phase.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub labels: BTreeMap<String, String>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub series: BTreeMap<String, Vec<f64>>,
    /// Declared series length in days; unset for scalar-only simulators.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub horizon: Option<usize>,
    /// Per-member trajectories of the primary series output.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub trajectories: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub ensemble_size: usize,
}

impl Record for SimulationOutput {
    const NAME: &'static str = "SimulationOutput";

    fn validate(&self) -> Result<(), DomainError> {
        self.params.validate()?;
        if self.ensemble_size == 0 {
            return Err(violation(Self::NAME, "ensemble_size must be >= 1"));
        }
        match self.horizon {
            Some(h) => {
                for (name, s) in &self.series {
                    if s.len() != h {
                        return Err(violation(
                            Self::NAME,
                            format!("series {name:?} has length {} != horizon {h}", s.len()),
                        ));
                    }
                }
                if self.trajectories.iter().any(|t| t.len() != h) {
                    return Err(violation(Self::NAME, "trajectory length differs from horizon"));
                }
            }
            None if !self.series.is_empty() => {
                return Err(violation(Self::NAME, "series present without a horizon"));
            }
            None => {}
        }
        Ok(())
    }
}

/// Simulator output rendered into natural-language evidence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TextualContext {
    pub text: String,
    pub template_id: String,
    /// Outputs in extraction order; one per rendered setting.
    pub sources: Vec<SimulationOutput>,
}

impl Record for TextualContext {
    const NAME: &'static str = "TextualContext";

    fn validate(&self) -> Result<(), DomainError> {
        if self.text.contains("{{") {
            return Err(violation(Self::NAME, "text contains an unfilled placeholder"));
        }
        if self.sources.is_empty() {
            return Err(violation(Self::NAME, "no source outputs"));
        }
        for s in &self.sources {
            s.validate()?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CentralityMetric {
    Closeness,
    Degree,
    Betweenness,
    Eigenvector,
    Pagerank,
}

impl CentralityMetric {
    pub const ALL: [CentralityMetric; 5] = [
        CentralityMetric::Closeness,
        CentralityMetric::Degree,
        CentralityMetric::Betweenness,
        CentralityMetric::Eigenvector,
        CentralityMetric::Pagerank,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            CentralityMetric::Closeness => "closeness",
            CentralityMetric::Degree => "degree",
            CentralityMetric::Betweenness => "betweenness",
            CentralityMetric::Eigenvector => "eigenvector",
            CentralityMetric::Pagerank => "pagerank",
        }
    }
}

/// Component factor used by closeness scoring.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClosenessVariant {
    /// `(|V|-1)/sum(d) * |V|/|V_c|` over the claim's component.
    #[default]
    AsWritten,
    /// `(|V_c|-1)/sum(d) * (|V_c|-1)/(|V|-1)`.
    WassermanFaust,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SelectionStrategy {
    UeSba,
    Uncertainty,
    Verbalized,
    Random,
}

impl SelectionStrategy {
    pub const ALL: [SelectionStrategy; 4] = [
        SelectionStrategy::Random,
        SelectionStrategy::Verbalized,
        SelectionStrategy::Uncertainty,
        SelectionStrategy::UeSba,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            SelectionStrategy::UeSba => "ue_sba",
            SelectionStrategy::Uncertainty => "uncertainty",
            SelectionStrategy::Verbalized => "verbalized",
            SelectionStrategy::Random => "random",
        }
    }
}

/// Budget fraction or confidence threshold.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SelectionMode {
    Budget(f64),
    Threshold(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionConfig {
    pub strategy: SelectionStrategy,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub budget: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threshold: Option<f64>,
}

impl SelectionConfig {
    pub fn budget(strategy: SelectionStrategy, b: f64) -> Self {
        SelectionConfig {
            strategy,
            budget: Some(b),
            threshold: None,
        }
    }

    pub fn threshold(strategy: SelectionStrategy, tau: f64) -> Self {
        SelectionConfig {
            strategy,
            budget: None,
            threshold: Some(tau),
        }
    }

    pub fn mode(&self) -> Option<SelectionMode> {
        match (self.budget, self.threshold) {
            (Some(b), None) => Some(SelectionMode::Budget(b)),
            (None, Some(t)) => Some(SelectionMode::Threshold(t)),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GenerationMode {
    Simulrag,
    InputLayer,
    OutputLayer,
    NoRag,
}

impl GenerationMode {
    pub const ALL: [GenerationMode; 4] = [
        GenerationMode::Simulrag,
        GenerationMode::InputLayer,
        GenerationMode::OutputLayer,
        GenerationMode::NoRag,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            GenerationMode::Simulrag => "simulrag",
            GenerationMode::InputLayer => "input_layer",
            GenerationMode::OutputLayer => "output_layer",
            GenerationMode::NoRag => "no_rag",
        }
    }

    fn uses_claim_graph(self) -> bool {
        matches!(self, GenerationMode::Simulrag | GenerationMode::NoRag)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Seeds {
    pub answer_sampling: u64,
    pub simulator: u64,
    pub random_selector: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BackendKind {
    Scripted,
    Http,
    /// Built-in rule-based responder; needs no network or fixtures.
    Offline,
}

/// Language-model backend selection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BackendConfig {
    pub kind: BackendKind,
    pub model: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub base_url: Option<String>,
    /// Fixture file for the scripted backend.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fixtures: Option<String>,
    /// Model used for boundary and labeling judgments; defaults to `model`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub judge_model: Option<String>,
    pub max_tokens: u32,
}

impl Default for BackendConfig {
    fn default() -> Self {
        BackendConfig {
            kind: BackendKind::Scripted,
            model: "scripted".into(),
            base_url: None,
            fixtures: None,
            judge_model: None,
            max_tokens: 1024,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub m: usize,
    pub centrality_metric: CentralityMetric,
    #[serde(default)]
    pub closeness_variant: ClosenessVariant,
    pub selection: SelectionConfig,
    pub kappa: f64,
    pub generation_mode: GenerationMode,
    pub seeds: Seeds,
    pub backend: BackendConfig,
    pub concurrency_limit: usize,
    /// Ensemble members per stochastic simulator run.
    #[serde(default = "default_ensemble_size")]
    pub ensemble_size: usize,
}

fn default_ensemble_size() -> usize {
    20
}

/// Default verification threshold when threshold mode is used.
pub const DEFAULT_TAU: f64 = 0.5;
/// Default final-answer confidence filter.
pub const DEFAULT_KAPPA: f64 = 0.3;

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            m: 5,
            centrality_metric: CentralityMetric::Closeness,
            closeness_variant: ClosenessVariant::AsWritten,
            selection: SelectionConfig::budget(SelectionStrategy::UeSba, 0.25),
            kappa: DEFAULT_KAPPA,
            generation_mode: GenerationMode::Simulrag,
            seeds: Seeds {
                answer_sampling: 0,
                simulator: 0,
                random_selector: 0,
            },
            backend: BackendConfig::default(),
            concurrency_limit: 4,
            ensemble_size: default_ensemble_size(),
        }
    }
}

impl Record for PipelineConfig {
    const NAME: &'static str = "PipelineConfig";

    fn validate(&self) -> Result<(), DomainError> {
        if self.m == 0 {
            return Err(violation(Self::NAME, "m must be >= 1"));
        }
        if self.generation_mode.uses_claim_graph() && self.m < 2 {
            return Err(violation(Self::NAME, "graph-based scoring needs m >= 2"));
        }
        if !(0.0..=1.0).contains(&self.kappa) {
            return Err(violation(Self::NAME, "kappa outside [0, 1]"));
        }
        if let Some(b) = self.selection.budget {
            if !(0.0..=1.0).contains(&b) {
                return Err(violation(Self::NAME, "budget outside [0, 1]"));
            }
        }
        if let Some(t) = self.selection.threshold {
            if !(0.0..=1.0).contains(&t) {
                return Err(violation(Self::NAME, "threshold outside [0, 1]"));
            }
        }
        let both = self.selection.budget.is_some() && self.selection.threshold.is_some();
        if both || (self.generation_mode == GenerationMode::Simulrag && self.selection.mode().is_none()) {
            return Err(violation(Self::NAME, "set exactly one of selection.budget or selection.threshold"));
        }
        if self.concurrency_limit == 0 {
            return Err(violation(Self::NAME, "concurrency_limit must be >= 1"));
        }
        if self.ensemble_size == 0 {
            return Err(violation(Self::NAME, "ensemble_size must be >= 1"));
        }
        if self.backend.kind == BackendKind::Http && self.backend.base_url.is_none() {
            return Err(violation(Self::NAME, "http backend needs base_url"));
        }
        Ok(())
    }
}

/// Final output of one question run with its full stage log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineResult {
    pub question: Question,
    pub final_answer: String,
    pub final_claims: Vec<Claim>,
    pub audit: Vec<AuditEntry>,
}

impl PipelineResult {
    /// Kappa recorded by the filter stage, if the run reached it.
    pub fn kappa(&self) -> Option<f64> {
        self.audit.iter().find_map(|e| match e {
            AuditEntry::Filter { kappa, .. } => Some(*kappa),
            _ => None,
        })
    }
}

impl Record for PipelineResult {
    const NAME: &'static str = "PipelineResult";

    fn validate(&self) -> Result<(), DomainError> {
        self.question.validate()?;
        for c in &self.final_claims {
            c.validate()?;
        }
        if let Some(kappa) = self.kappa() {
            if self.final_claims.iter().any(|c| c.confidence.unwrap_or(0.0) < kappa) {
                return Err(violation(Self::NAME, "final claim below kappa"));
            }
        }
        let order: Vec<usize> = self.audit.iter().map(AuditEntry::stage_rank).collect();
        if order.windows(2).any(|w| w[0] > w[1]) {
            return Err(violation(Self::NAME, "audit stages out of order"));
        }
        Ok(())
    }
}

/// Benchmark record: question, grounded reference answer and its claims.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QaItem {
    #[serde(flatten)]
    pub question: Question,
    pub reference_answer: String,
    pub reference_claims: Vec<String>,
    /// Generating settings; comparison questions carry more than one.
    pub params: Vec<ParamSettings>,
    pub template_id: String,
}

impl Record for QaItem {
    const NAME: &'static str = "QAItem";

    fn validate(&self) -> Result<(), DomainError> {
        self.question.validate()?;
        if self.reference_answer.trim().is_empty() {
            return Err(violation(Self::NAME, "reference_answer is empty"));
        }
        if self.reference_claims.is_empty() || self.reference_claims.iter().any(|c| c.trim().is_empty()) {
            return Err(violation(Self::NAME, "reference_claims empty or blank"));
        }
        if self.params.is_empty() {
            return Err(violation(Self::NAME, "params is empty"));
        }
        for p in &self.params {
            p.validate()?;
        }
        Ok(())
    }
}

impl Record for MergeMap {
    const NAME: &'static str = "MergeMap";

    fn validate(&self) -> Result<(), DomainError> {
        self.check().map_err(|r| violation(Self::NAME, r))
    }
}

impl Record for EntailmentGraph {
    const NAME: &'static str = "EntailmentGraph";

    fn validate(&self) -> Result<(), DomainError> {
        self.check().map_err(|r| violation(Self::NAME, r))
    }
}
