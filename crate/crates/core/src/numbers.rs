//! Fixed number formatting and numeral extraction.
//!
//! Rendered contexts and grounding checks both go through these helpers so
//! that a number written into a context can be matched back to its source.

use std::sync::OnceLock;

use regex::Regex;

/// Temperatures: two decimals.
pub fn temperature(x: f64) -> String {
    format!("{x:.2}")
}

/// Counts: nearest integer, no separators.
pub fn count(x: f64) -> String {
    format!("{}", x.round() as i64)
}

/// Weeks: one decimal.
pub fn weeks(x: f64) -> String {
    format!("{x:.1}")
}

/// Parameters: at most `decimals` places with trailing zeros trimmed.
pub fn trimmed(x: f64, decimals: usize) -> String {
    let s = format!("{x:.decimals$}");
    let s = if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    };
    if s == "-0" {
        "0".into()
    } else {
        s
    }
}

pub fn param(x: f64) -> String {
    trimmed(x, 2)
}

/// A fraction as a percentage, e.g. 0.1 -> "10%".
pub fn percent(fraction: f64) -> String {
    format!("{}%", trimmed(fraction * 100.0, 2))
}

fn numeral_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"\d+(?:,\d{3})*(?:\.\d+)?").expect("numeral pattern"))
}

/// Numerals in running text, as written and as absolute values. Digits glued
/// to a preceding letter, digit, underscore or dot (CO2, ssp585, R0) are not
/// numerals; thousands separators are dropped.
pub fn numerals(text: &str) -> Vec<(String, f64)> {
    let mut out = Vec::new();
    for m in numeral_re().find_iter(text) {
        let glued = text[..m.start()]
            .chars()
            .next_back()
            .is_some_and(|c| c.is_alphanumeric() || c == '_' || c == '.');
        if glued {
            continue;
        }
        let raw = m.as_str().trim_end_matches(['.', ',']);
        if let Ok(v) = raw.replace(',', "").parse::<f64>() {
            out.push((raw.to_string(), v));
        }
    }
    out
}

/// Whether `value` matches one of `allowed` up to the precision it was written with.
pub fn is_grounded(written: &str, value: f64, allowed: &[f64]) -> bool {
    let decimals = written.split_once('.').map_or(0, |(_, d)| d.len());
    let tol = 0.5 * 10f64.powi(-(decimals as i32)) * 1e-6 + 1e-9;
    allowed.iter().any(|a| (a.abs() - value).abs() <= tol)
}

/// Numerals in `text` that match nothing in `allowed`.
pub fn ungrounded(text: &str, allowed: &[f64]) -> Vec<String> {
    numerals(text)
        .into_iter()
        .filter(|(w, v)| !is_grounded(w, *v, allowed))
        .map(|(w, _)| w)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn formatting_rules() {
        assert_eq!(temperature(7.9), "7.90");
        assert_eq!(count(11940.6), "11941");
        assert_eq!(weeks(5.4), "5.4");
        assert_eq!(param(10.0), "10");
        assert_eq!(param(47.31), "47.31");
        assert_eq!(param(-13.2800001), "-13.28");
        assert_eq!(percent(0.1), "10%");
        assert_eq!(param(-0.001), "0");
    }

    #[test]
    fn numerals_skip_identifiers() {
        let got: Vec<f64> = numerals("CO2 up 47.31% in 2041 under ssp585, R0 of 2.6, peak 11,941.")
            .into_iter()
            .map(|(_, v)| v)
            .collect();
        assert_eq!(got, vec![47.31, 2041.0, 2.6, 11941.0]);
    }

    #[test]
    fn dates_split_into_components() {
        let got: Vec<f64> = numerals("2022-10-04").into_iter().map(|(_, v)| v).collect();
        assert_eq!(got, vec![2022.0, 10.0, 4.0]);
    }

    #[test]
    fn grounding_is_sign_blind() {
        assert!(ungrounded("SO2 decreases by 13.28%", &[-13.28]).is_empty());
        assert_eq!(ungrounded("about 37% more", &[13.28]), vec!["37"]);
        assert!(ungrounded("about 11 weeks", &[11.0]).is_empty());
    }
}
