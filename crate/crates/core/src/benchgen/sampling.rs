//! Parameter ranges and seeded draws.

use std::collections::BTreeMap;

use chrono::NaiveDate;
use rand::seq::index::sample;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::BenchError;
use crate::domain::{Handbook, ParamKind, ParamSettings, ParamValue, Provenance};
use crate::retrieval::ContextTemplate;

/// How one parameter is drawn.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Range {
    /// Uniform, rounded to two decimals.
    Real { min: f64, max: f64 },
    Integer { min: i64, max: i64 },
    Choice { values: Vec<ParamValue> },
    /// Uniform over days, inclusive.
    Dates { start: String, end: String },
    /// Between `min` and `max` distinct members of the handbook's list.
    Subset { min: usize, max: usize },
    /// A named place from the handbook gazetteer.
    Place,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplingRanges {
    pub simulator_id: String,
    pub ranges: BTreeMap<String, Range>,
}

impl SamplingRanges {
    pub fn default_for(simulator_id: &str) -> Option<Self> {
        let real = |min, max| Range::Real { min, max };
        let text = |v: &[&str]| Range::Choice {
            values: v.iter().map(|s| ParamValue::Text(s.to_string())).collect(),
        };
        let ranges: BTreeMap<String, Range> = match simulator_id {
            "climate" => [
                ("location", Range::Place),
                ("year", Range::Integer { min: 2040, max: 2090 }),
                ("scenario", text(&["ssp245", "ssp585"])),
                ("delta_CO2", real(0.0, 50.0)),
                ("delta_CH4", real(0.0, 50.0)),
                ("delta_SO2", real(-20.0, 20.0)),
                ("delta_BC", real(-20.0, 20.0)),
            ]
            .into_iter()
            .map(|(k, v)| (k.to_string(), v))
            .collect(),
            "epidemic" => [
                ("R0", real(1.2, 3.0)),
                ("seasonality", text(&["none", "moderate", "strong"])),
                (
                    "prior_immunity",
                    Range::Choice {
                        values: [0.1, 0.2, 0.3, 0.4].into_iter().map(ParamValue::Real).collect(),
                    },
                ),
                (
                    "start_date",
                    Range::Dates {
                        start: "2022-09-15".into(),
                        end: "2022-11-01".into(),
                    },
                ),
                ("states", Range::Subset { min: 1, max: 4 }),
            ]
            .into_iter()
            .map(|(k, v)| (k.to_string(), v))
            .collect(),
            _ => return None,
        };
        Some(SamplingRanges {
            simulator_id: simulator_id.to_string(),
            ranges,
        })
    }

    /// Every range must sit inside the handbook's bounds.
    pub fn check(&self, handbook: &Handbook) -> Result<(), BenchError> {
        let bad = |param: &str, reason: String| BenchError::RangeOutOfBounds {
            param: param.to_string(),
            reason,
        };
        for (name, range) in &self.ranges {
            let spec = handbook
                .param(name)
                .ok_or_else(|| bad(name, format!("not a {} parameter", handbook.simulator_id)))?;
            let ends: Vec<ParamValue> = match range {
                Range::Real { min, max } if min <= max => vec![ParamValue::Real(*min), ParamValue::Real(*max)],
                Range::Integer { min, max } if min <= max => {
                    vec![ParamValue::Integer(*min), ParamValue::Integer(*max)]
                }
                Range::Choice { values } if !values.is_empty() => values.clone(),
                Range::Dates { start, end } => {
                    let (s, e) = (parse_date(name, start)?, parse_date(name, end)?);
                    if s > e {
                        return Err(bad(name, "start after end".into()));
                    }
                    vec![ParamValue::Text(start.clone()), ParamValue::Text(end.clone())]
                }
                Range::Subset { min, max } => match &spec.kind {
                    ParamKind::StringList { allowed, min_len, max_len }
                        if min_len.max(&1) <= min && min <= max && max <= max_len && *max <= allowed.len() =>
                    {
                        vec![]
                    }
                    _ => return Err(bad(name, "subset size outside the allowed list".into())),
                },
                Range::Place => match &spec.kind {
                    ParamKind::GeoPoint { places } if !places.is_empty() => vec![],
                    _ => return Err(bad(name, "no gazetteer to draw from".into())),
                },
                _ => return Err(bad(name, "empty range".into())),
            };
            for v in ends {
                spec.check_value(&v).map_err(|r| bad(name, r))?;
            }
        }
        Ok(())
    }
}

fn parse_date(param: &str, s: &str) -> Result<NaiveDate, BenchError> {
    NaiveDate::parse_from_str(s, "%Y-%m-%d").map_err(|e| BenchError::RangeOutOfBounds {
        param: param.to_string(),
        reason: format!("bad date {s:?}: {e}"),
    })
}

/// Parameter a context placeholder is rendered from.
pub fn placeholder_param(placeholder: &str) -> Option<&'static str> {
    Some(match placeholder {
        "city_name" => "location",
        "year" => "year",
        "setting" => "scenario",
        "delta_CO2" => "delta_CO2",
        "delta_CH4" => "delta_CH4",
        "delta_SO2" => "delta_SO2",
        "delta_BC" => "delta_BC",
        "r0_value" => "R0",
        "seasonality_level" => "seasonality",
        "prior_immunity_level" => "prior_immunity",
        "starting_date" => "start_date",
        "target_states" => "states",
        _ => return None,
    })
}

/// One draw. A parameter is drawn when it has no default or the template
/// shows it; the others keep their defaults so the question states every
/// input that shapes the result.
pub fn draw(rng: &mut ChaCha8Rng, ranges: &SamplingRanges, template: &ContextTemplate, handbook: &Handbook) -> ParamSettings {
    let shown: Vec<&str> = template.placeholders().iter().filter_map(|p| placeholder_param(p)).collect();
    let mut s = ParamSettings::new(handbook.simulator_id.clone(), Provenance::Sampled);
    for (name, range) in &ranges.ranges {
        let Some(spec) = handbook.param(name) else { continue };
        if spec.default.is_some() && !shown.contains(&name.as_str()) {
            continue;
        }
        let value = match range {
            Range::Real { min, max } => ParamValue::Real((rng.random_range(*min..=*max) * 100.0).round() / 100.0),
            Range::Integer { min, max } => ParamValue::Integer(rng.random_range(*min..=*max)),
            Range::Choice { values } => values[rng.random_range(0..values.len())].clone(),
            Range::Dates { start, end } => {
                let (a, b) = (parse_date(name, start).expect("checked"), parse_date(name, end).expect("checked"));
                let d = a + chrono::Duration::days(rng.random_range(0..=(b - a).num_days()));
                ParamValue::Text(d.format("%Y-%m-%d").to_string())
            }
            Range::Subset { min, max } => {
                let ParamKind::StringList { allowed, .. } = &spec.kind else { continue };
                let k = rng.random_range(*min..=*max);
                ParamValue::List(sample(rng, allowed.len(), k).into_iter().map(|i| allowed[i].clone()).collect())
            }
            Range::Place => {
                let ParamKind::GeoPoint { places } = &spec.kind else { continue };
                let names: Vec<&String> = places.keys().collect();
                ParamValue::Text(names[rng.random_range(0..names.len())].clone())
            }
        };
        s = s.with(name, value);
    }
    s
}
