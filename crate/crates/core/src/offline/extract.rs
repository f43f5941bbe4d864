//! Pattern-based parameter reading for the offline responder.

use std::sync::OnceLock;

use chrono::NaiveDate;
use regex::Regex;

use crate::domain::{Domain, ParamKind, ParamSettings, ParamValue, Provenance};
use crate::numbers;
use crate::simulators::{climate_handbook, epidemic_handbook, epi::state_populations};

fn re(cell: &'static OnceLock<Regex>, pattern: &str) -> &'static Regex {
    cell.get_or_init(|| Regex::new(pattern).expect("extraction pattern"))
}

fn place_names() -> Vec<&'static String> {
    climate_handbook()
        .params
        .iter()
        .find_map(|p| match &p.kind {
            ParamKind::GeoPoint { places } => Some(places.keys().collect()),
            _ => None,
        })
        .unwrap_or_default()
}

/// Longest-first, non-overlapping whole-word matches, in order of appearance.
fn find_names<'a>(text: &str, names: impl IntoIterator<Item = &'a String>) -> Vec<(usize, String)> {
    let mut names: Vec<&String> = names.into_iter().collect();
    names.sort_by_key(|n| std::cmp::Reverse(n.len()));
    let mut taken: Vec<(usize, usize)> = Vec::new();
    let mut found = Vec::new();
    for name in names {
        let pat = Regex::new(&format!(r"\b{}\b", regex::escape(name))).expect("name pattern");
        for m in pat.find_iter(text) {
            if taken.iter().any(|&(s, e)| m.start() < e && s < m.end()) {
                continue;
            }
            taken.push((m.start(), m.end()));
            found.push((m.start(), name.clone()));
        }
    }
    found.sort();
    found
}

fn parse_num(s: &str) -> Option<f64> {
    s.replace(',', "").parse().ok()
}

pub fn climate_settings(text: &str) -> Option<ParamSettings> {
    static COORD: OnceLock<Regex> = OnceLock::new();
    static SCEN: OnceLock<Regex> = OnceLock::new();
    let mut s = ParamSettings::new("climate", Provenance::Extracted);
    let location = match find_names(text, place_names()).first() {
        Some((_, name)) => ParamValue::Text(name.clone()),
        None => {
            let c = re(&COORD, r"\((-?\d+(?:\.\d+)?),\s*(-?\d+(?:\.\d+)?)\)").captures(text)?;
            ParamValue::Point(crate::domain::GeoPoint {
                lon: parse_num(&c[1])?,
                lat: parse_num(&c[2])?,
            })
        }
    };
    s = s.with("location", location);
    let year = numbers::numerals(text)
        .into_iter()
        .find(|(w, v)| !w.contains('.') && (1990.0..=2100.0).contains(v))?;
    s = s.with("year", ParamValue::Integer(year.1 as i64));
    if let Some(c) = re(&SCEN, r"(?i)\bssp\s?-?(245|585)\b").captures(text) {
        s = s.with("scenario", ParamValue::Text(format!("ssp{}", &c[1])));
    }
    static GAS: OnceLock<Vec<(&'static str, Regex)>> = OnceLock::new();
    let gases = GAS.get_or_init(|| {
        [
            ("delta_CO2", "CO2"),
            ("delta_CH4", "CH4"),
            ("delta_SO2", "SO2"),
            ("delta_BC", r"(?:black carbon|BC\b)"),
        ]
        .into_iter()
        .map(|(name, gas)| {
            let p = format!(
                r"(?i){gas}(?:\s+emissions)?\s+(?:(increase|decrease|rise|fall|drop|change|reduction|cut)s?\s+)?(?:by\s+)?(-?\d+(?:\.\d+)?)%"
            );
            (name, Regex::new(&p).expect("gas pattern"))
        })
        .collect()
    });
    for (name, pat) in gases {
        if let Some(c) = pat.captures(text) {
            let mut v = parse_num(&c[2])?;
            let down = c.get(1).is_some_and(|m| {
                matches!(m.as_str().to_lowercase().as_str(), "decrease" | "fall" | "drop" | "reduction" | "cut")
            });
            if down && v > 0.0 {
                v = -v;
            }
            s = s.with(name, ParamValue::Real(v));
        }
    }
    Some(s)
}

const MONTHS: [&str; 12] = [
    "January",
    "February",
    "March",
    "April",
    "May",
    "June",
    "July",
    "August",
    "September",
    "October",
    "November",
    "December",
];

pub fn epidemic_settings(text: &str) -> Option<ParamSettings> {
    static R0: OnceLock<Regex> = OnceLock::new();
    static SEAS: OnceLock<Regex> = OnceLock::new();
    static IMM: OnceLock<Regex> = OnceLock::new();
    static IMM2: OnceLock<Regex> = OnceLock::new();
    static ISO: OnceLock<Regex> = OnceLock::new();
    static LONG: OnceLock<Regex> = OnceLock::new();
    let mut s = ParamSettings::new("epidemic", Provenance::Extracted);
    let r0 = re(&R0, r"(?i)(?:reproduction number(?:\s*\(R0\))?|\bR0)\s*(?:of|=|is|at|:)?\s*(\d+(?:\.\d+)?)")
        .captures(text)?;
    s = s.with("R0", ParamValue::Real(parse_num(&r0[1])?));
    if let Some(c) = re(&SEAS, r"(?i)\b(no|negligible|none|moderate|strong)\s+seasonal").captures(text) {
        let level = match c[1].to_lowercase().as_str() {
            "moderate" => "moderate",
            "strong" => "strong",
            _ => "none",
        };
        s = s.with("seasonality", ParamValue::Text(level.into()));
    }
    let imm = re(&IMM, r"(?i)immunity(?: level)?(?: of)?\s*(\d+(?:\.\d+)?)%")
        .captures(text)
        .or_else(|| {
            re(&IMM2, r"(?i)(\d+(?:\.\d+)?)%\s+(?:prior |initial |pre-existing )?(?:population )?immunity").captures(text)
        });
    if let Some(c) = imm {
        s = s.with("prior_immunity", ParamValue::Real(parse_num(&c[1])? / 100.0));
    }
    let date = if let Some(m) = re(&ISO, r"\b\d{4}-\d{2}-\d{2}\b").find(text) {
        NaiveDate::parse_from_str(m.as_str(), "%Y-%m-%d").ok()
    } else {
        let pat = format!(r"\b({})\s+(\d{{1,2}}),?\s+(\d{{4}})\b", MONTHS.join("|"));
        re(&LONG, &pat).captures(text).and_then(|c| {
            let month = MONTHS.iter().position(|m| *m == &c[1])? as u32 + 1;
            NaiveDate::from_ymd_opt(c[3].parse().ok()?, month, c[2].parse().ok()?)
        })
    };
    s = s.with("start_date", ParamValue::Text(date?.format("%Y-%m-%d").to_string()));
    let states: Vec<String> = find_names(text, state_populations().keys()).into_iter().map(|(_, n)| n).collect();
    if states.is_empty() {
        return None;
    }
    s = s.with("states", ParamValue::List(states));
    Some(s)
}

/// Settings for whichever simulator the question reads as.
pub fn read_question(text: &str) -> Option<(Domain, ParamSettings)> {
    if let Some(s) = epidemic_settings(text) {
        if epidemic_handbook().check_settings(&s).is_ok() {
            return Some((Domain::Epidemiology, s));
        }
    }
    let s = climate_settings(text)?;
    climate_handbook().check_settings(&s).is_ok().then_some((Domain::Climate, s))
}
