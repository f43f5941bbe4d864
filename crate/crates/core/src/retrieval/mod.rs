//! Simulator retrieval: question -> parameter settings -> simulator runs ->
//! textual context.

pub mod context;

use serde_json::Value;
use thiserror::Error;

use crate::domain::{FieldError, Handbook, ParamKind, ParamSettings, ParamValue, Provenance, Question, TextualContext};
use crate::gateway::structured::parse_json_objects;
use crate::gateway::{ChatRequest, Gateway, GatewayError, Role, Shape, TemplateId};
use crate::simulators::{Simulator, SimulatorError};

pub use context::{
    builtin_templates, context_fields, context_template, default_template_id, field_vocabulary, fill, grounding_values,
    render, templates_for, ContextTemplate,
};

#[derive(Debug, Error)]
pub enum RetrievalError {
    #[error("parameter extraction failed: {0}")]
    ExtractionFailed(String),
    #[error("extracted parameters invalid: {}", .0.iter().map(ToString::to_string).collect::<Vec<_>>().join("; "))]
    ValidationFailed(Vec<FieldError>),
    #[error("simulator failed for {params:?}: {source}")]
    Simulator {
        params: Box<ParamSettings>,
        #[source]
        source: SimulatorError,
    },
    #[error("template field missing: {0}")]
    TemplateFieldMissing(String),
    #[error("unknown context template {0:?}")]
    UnknownTemplate(String),
    #[error("template {template} renders {expected} outputs, not {got}")]
    TemplateMismatch {
        template: String,
        expected: String,
        got: String,
    },
    #[error(transparent)]
    Gateway(GatewayError),
}

/// Coerce numeric values to the kind the handbook declares, so that `10`
/// and `10.0` compare equal for real-valued parameters.
pub fn normalize_settings(settings: &mut ParamSettings, handbook: &Handbook) {
    for (name, value) in settings.values.iter_mut() {
        let Some(spec) = handbook.param(name) else { continue };
        match (&spec.kind, &*value) {
            (ParamKind::Real { .. }, ParamValue::Integer(i)) => *value = ParamValue::Real(*i as f64),
            (ParamKind::Integer { .. }, ParamValue::Real(x)) if x.fract() == 0.0 => {
                *value = ParamValue::Integer(*x as i64)
            }
            _ => {}
        }
    }
}

fn object_to_settings(
    object: serde_json::Map<String, Value>,
    handbook: &Handbook,
) -> Result<ParamSettings, Vec<FieldError>> {
    let mut settings = ParamSettings::new(handbook.simulator_id.clone(), Provenance::Extracted);
    let mut errors = Vec::new();
    for (name, raw) in object {
        match serde_json::from_value::<ParamValue>(raw.clone()) {
            Ok(v) => {
                settings.values.insert(name, v);
            }
            Err(_) => errors.push(FieldError {
                name,
                reason: format!("unsupported value {raw}"),
            }),
        }
    }
    if !errors.is_empty() {
        return Err(errors);
    }
    normalize_settings(&mut settings, handbook);
    handbook.check_settings(&settings)?;
    Ok(settings)
}

/// Ask the model for one parameter object per scenario the question needs.
pub fn extract_parameters(
    gateway: &Gateway,
    question: &Question,
    handbook: &Handbook,
) -> Result<Vec<ParamSettings>, RetrievalError> {
    let handbook_json = serde_json::to_string_pretty(handbook).expect("handbook serializes");
    let req = ChatRequest::new(TemplateId::ParamExtract)
        .bind("handbook", handbook_json)
        .bind("question", question.text.as_str());
    let objects = match gateway.complete_parsed(Role::Main, &req, Shape::JsonObjects, parse_json_objects) {
        Ok(o) => o,
        Err(GatewayError::MalformedStructuredOutput { message, .. }) => {
            return Err(RetrievalError::ExtractionFailed(message))
        }
        Err(e) => return Err(RetrievalError::Gateway(e)),
    };
    if objects.is_empty() {
        return Err(RetrievalError::ExtractionFailed("no parameter objects".into()));
    }
    let mut out = Vec::with_capacity(objects.len());
    let mut errors = Vec::new();
    for (i, object) in objects.into_iter().enumerate() {
        match object_to_settings(object, handbook) {
            Ok(s) => out.push(s),
            Err(errs) => errors.extend(errs.into_iter().map(|e| FieldError {
                name: if i == 0 { e.name } else { format!("{}[{i}]", e.name) },
                reason: e.reason,
            })),
        }
    }
    if errors.is_empty() {
        Ok(out)
    } else {
        Err(RetrievalError::ValidationFailed(errors))
    }
}

/// Run every setting in order and render one combined context.
pub fn run_and_contextualize(
    simulator: &dyn Simulator,
    settings: &[ParamSettings],
    template_id: &str,
    seed: u64,
    ensemble_size: usize,
) -> Result<TextualContext, RetrievalError> {
    let template = context_template(template_id)?;
    if template.simulator_id != simulator.id() {
        return Err(RetrievalError::TemplateMismatch {
            template: template.template_id.clone(),
            expected: template.simulator_id.clone(),
            got: simulator.id().to_string(),
        });
    }
    if settings.is_empty() {
        return Err(RetrievalError::TemplateFieldMissing("no parameter settings to render".into()));
    }
    let mut sources = Vec::with_capacity(settings.len());
    for s in settings {
        let out = simulator
            .run(s, seed, ensemble_size)
            .map_err(|source| RetrievalError::Simulator {
                params: Box::new(s.clone()),
                source,
            })?;
        sources.push(out);
    }
    let (_, text) = render(template, &sources)?;
    Ok(TextualContext {
        text,
        template_id: template.template_id.clone(),
        sources,
    })
}
