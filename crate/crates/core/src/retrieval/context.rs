//! Textual-context templates and the field vocabulary used to fill them.

use std::collections::BTreeMap;
use std::sync::OnceLock;

use chrono::NaiveDate;
use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::domain::{ParamValue, SimulationOutput};
use crate::numbers;
use crate::simulators::simulator_by_id;

use super::RetrievalError;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContextTemplate {
    pub template_id: String,
    pub simulator_id: String,
    pub query: String,
    pub result: String,
}

impl ContextTemplate {
    pub fn placeholders(&self) -> Vec<String> {
        let mut names: Vec<String> = placeholder_re()
            .captures_iter(&self.query)
            .chain(placeholder_re().captures_iter(&self.result))
            .map(|c| c[1].to_string())
            .collect();
        names.sort();
        names.dedup();
        names
    }
}

const BUILTIN: [&str; 4] = [
    include_str!("../../assets/contexts/climate_ghg.json"),
    include_str!("../../assets/contexts/climate_aerosol.json"),
    include_str!("../../assets/contexts/climate_full.json"),
    include_str!("../../assets/contexts/epi_outlook.json"),
];

pub fn builtin_templates() -> &'static [ContextTemplate] {
    static ALL: OnceLock<Vec<ContextTemplate>> = OnceLock::new();
    ALL.get_or_init(|| {
        BUILTIN
            .iter()
            .map(|s| serde_json::from_str(s).expect("bundled context template"))
            .collect()
    })
}

pub fn context_template(id: &str) -> Result<&'static ContextTemplate, RetrievalError> {
    builtin_templates()
        .iter()
        .find(|t| t.template_id == id)
        .ok_or_else(|| RetrievalError::UnknownTemplate(id.to_string()))
}

/// Template the pipeline renders for a simulator; it covers every parameter.
pub fn default_template_id(simulator_id: &str) -> Option<&'static str> {
    match simulator_id {
        "climate" => Some("climate_full"),
        "epidemic" => Some("epi_outlook"),
        _ => None,
    }
}

pub fn templates_for(simulator_id: &str) -> Vec<&'static ContextTemplate> {
    builtin_templates()
        .iter()
        .filter(|t| t.simulator_id == simulator_id)
        .collect()
}

/// Every placeholder name a simulator's outputs can fill.
pub fn field_vocabulary(simulator_id: &str) -> &'static [&'static str] {
    match simulator_id {
        "climate" => &[
            "aerosol_temp",
            "baseline_temperature_c",
            "city_name",
            "delta_BC",
            "delta_CH4",
            "delta_CO2",
            "delta_SO2",
            "greenhouse_temp",
            "land_or_sea",
            "land_sea_result",
            "location",
            "scenario",
            "setting",
            "temperature_c",
            "year",
        ],
        "epidemic" => &[
            "R0",
            "growth_phase",
            "horizon_days",
            "peak_hospital_prevalence_median",
            "peak_week",
            "prior_immunity",
            "prior_immunity_level",
            "r0_value",
            "seasonality",
            "seasonality_level",
            "simulation_outlook",
            "start_date",
            "starting_date",
            "states",
            "target_metric",
            "target_states",
        ],
        _ => &[],
    }
}

fn placeholder_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"\{\{\s*([A-Za-z0-9_]+)\s*\}\}").expect("placeholder pattern"))
}

/// Substitute `{{name}}` placeholders; the first unknown name is an error.
pub fn fill(text: &str, fields: &BTreeMap<String, String>) -> Result<String, RetrievalError> {
    let mut out = String::with_capacity(text.len());
    let mut last = 0;
    for caps in placeholder_re().captures_iter(text) {
        let whole = caps.get(0).expect("match");
        let name = &caps[1];
        let value = fields
            .get(name)
            .ok_or_else(|| RetrievalError::TemplateFieldMissing(name.to_string()))?;
        out.push_str(&text[last..whole.start()]);
        out.push_str(value);
        last = whole.end();
    }
    out.push_str(&text[last..]);
    Ok(out)
}

/// English list: "A", "A and B", "A, B, and C".
pub fn english_list(items: &[String]) -> String {
    match items {
        [] => String::new(),
        [a] => a.clone(),
        [a, b] => format!("{a} and {b}"),
        [rest @ .., last] => format!("{}, and {last}", rest.join(", ")),
    }
}

fn article(word: &str) -> &'static str {
    match word.chars().next() {
        Some('a' | 'e' | 'i' | 'o' | 'u') => "an",
        _ => "a",
    }
}

/// Placeholder values for one simulator output, formatted by the fixed rules.
pub fn context_fields(output: &SimulationOutput) -> Result<BTreeMap<String, String>, RetrievalError> {
    let sim = simulator_by_id(&output.params.simulator_id).map_err(|e| RetrievalError::Simulator {
        params: Box::new(output.params.clone()),
        source: e,
    })?;
    let handbook = sim.handbook();
    let settings = handbook.with_defaults(&output.params);
    let mut f: BTreeMap<String, String> = BTreeMap::new();
    let missing = |name: &str| RetrievalError::TemplateFieldMissing(name.to_string());
    let scalar = |name: &str| output.scalars.get(name).map(|s| s.value).ok_or_else(|| missing(name));
    let label = |name: &str| output.labels.get(name).cloned().ok_or_else(|| missing(name));
    let num = |name: &str| settings.get(name).and_then(ParamValue::as_f64).ok_or_else(|| missing(name));

    match handbook.simulator_id.as_str() {
        "climate" => {
            let place = match settings.get("location") {
                Some(ParamValue::Text(name)) => name.clone(),
                Some(ParamValue::Point(p)) => {
                    format!("({}, {})", numbers::trimmed(p.lon, 4), numbers::trimmed(p.lat, 4))
                }
                _ => return Err(missing("location")),
            };
            let scenario = settings
                .get("scenario")
                .and_then(ParamValue::as_str)
                .ok_or_else(|| missing("scenario"))?
                .to_string();
            let year = settings.get("year").and_then(ParamValue::as_i64).ok_or_else(|| missing("year"))?;
            let temp = numbers::temperature(scalar("temperature_c")?);
            let land = label("land_or_sea")?;
            f.insert("city_name".into(), place.clone());
            f.insert("location".into(), place);
            f.insert("setting".into(), scenario.to_uppercase());
            f.insert("scenario".into(), scenario);
            f.insert("year".into(), year.to_string());
            for name in ["delta_CO2", "delta_CH4", "delta_SO2", "delta_BC"] {
                f.insert(name.into(), numbers::param(num(name)?));
            }
            f.insert("greenhouse_temp".into(), temp.clone());
            f.insert("aerosol_temp".into(), temp.clone());
            f.insert("temperature_c".into(), temp);
            f.insert(
                "baseline_temperature_c".into(),
                numbers::temperature(scalar("baseline_temperature_c")?),
            );
            f.insert("land_sea_result".into(), land.clone());
            f.insert("land_or_sea".into(), land);
        }
        "epidemic" => {
            let r0 = numbers::param(num("R0")?);
            let seasonality = settings
                .get("seasonality")
                .and_then(ParamValue::as_str)
                .ok_or_else(|| missing("seasonality"))?
                .to_string();
            let immunity = num("prior_immunity")?;
            let start = settings
                .get("start_date")
                .and_then(ParamValue::as_str)
                .ok_or_else(|| missing("start_date"))?
                .to_string();
            let date = NaiveDate::parse_from_str(&start, "%Y-%m-%d").map_err(|_| missing("start_date"))?;
            let states: Vec<String> = settings
                .get("states")
                .and_then(ParamValue::as_list)
                .ok_or_else(|| missing("states"))?
                .to_vec();
            let horizon = settings
                .get("horizon_days")
                .and_then(ParamValue::as_i64)
                .ok_or_else(|| missing("horizon_days"))?;
            let peak = numbers::count(scalar("peak_hospital_prevalence_median")?);
            let week = scalar("peak_week")?;
            let phase = label("growth_phase")?;
            let outlook = if week == 0.0 {
                format!(
                    " Hospital prevalence declines from the start of the season, so the median peak of {peak} concurrent patients falls in week {}.",
                    numbers::weeks(week)
                )
            } else {
                format!(
                    " The outbreak enters {} {phase} growth phase, and hospital prevalence peaks at a median of {peak} concurrent patients around week {} after the season's onset.",
                    article(&phase),
                    numbers::weeks(week)
                )
            };
            f.insert("r0_value".into(), r0.clone());
            f.insert("R0".into(), r0);
            f.insert(
                "seasonality_level".into(),
                match seasonality.as_str() {
                    "none" => "negligible seasonal".to_string(),
                    s => format!("{s} seasonal"),
                },
            );
            f.insert("seasonality".into(), seasonality);
            f.insert("prior_immunity".into(), numbers::param(immunity));
            f.insert("prior_immunity_level".into(), numbers::percent(immunity));
            f.insert("start_date".into(), start);
            f.insert("starting_date".into(), date.format("%B %-d, %Y").to_string());
            f.insert("target_states".into(), english_list(&states));
            f.insert("states".into(), states.join(", "));
            f.insert("target_metric".into(), "hospital prevalence".into());
            f.insert("horizon_days".into(), horizon.to_string());
            f.insert("peak_hospital_prevalence_median".into(), peak);
            f.insert("peak_week".into(), numbers::weeks(week));
            f.insert("growth_phase".into(), phase);
            f.insert("simulation_outlook".into(), outlook);
        }
        other => {
            return Err(RetrievalError::Simulator {
                params: Box::new(output.params.clone()),
                source: crate::simulators::SimulatorError::UnknownSimulator(other.to_string()),
            })
        }
    }
    debug_assert!(f.keys().all(|k| field_vocabulary(&handbook.simulator_id).contains(&k.as_str())));
    Ok(f)
}

/// Rendered query and result for one or more outputs, in order. Several
/// outputs are labelled "Scenario A:", "Scenario B:" and so on.
pub fn render(template: &ContextTemplate, outputs: &[SimulationOutput]) -> Result<(String, String), RetrievalError> {
    if outputs.is_empty() {
        return Err(RetrievalError::TemplateFieldMissing("no simulation output to render".into()));
    }
    let mut queries = Vec::new();
    let mut results = Vec::new();
    for (i, out) in outputs.iter().enumerate() {
        let fields = context_fields(out)?;
        let q = fill(&template.query, &fields)?;
        let r = fill(&template.result, &fields)?;
        if outputs.len() == 1 {
            queries.push(q);
            results.push(r);
        } else {
            let tag = scenario_tag(i);
            queries.push(format!("Scenario {tag}: {q}"));
            results.push(format!("Scenario {tag}: {r}"));
        }
    }
    Ok((queries.join("\n"), results.join("\n")))
}

fn scenario_tag(i: usize) -> String {
    let mut n = i;
    let mut s = String::new();
    loop {
        s.insert(0, (b'A' + (n % 26) as u8) as char);
        if n < 26 {
            break;
        }
        n = n / 26 - 1;
    }
    s
}

/// Absolute numeric values a rendered context may contain for these outputs.
pub fn grounding_values(outputs: &[SimulationOutput]) -> Vec<f64> {
    let mut values = Vec::new();
    for out in outputs {
        if let Ok(fields) = context_fields(out) {
            for v in fields.values() {
                values.extend(numbers::numerals(v).into_iter().map(|(_, x)| x));
            }
        }
    }
    values.sort_by(f64::total_cmp);
    values.dedup();
    values
}
