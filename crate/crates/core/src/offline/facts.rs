//! Typed statements the offline responder reads and writes.

use std::sync::OnceLock;

use regex::Regex;

#[derive(Debug, Clone, PartialEq)]
pub enum Fact {
    Temperature(f64),
    Baseline(f64),
    Surface(String),
    Peak(f64),
    PeakWeek(f64),
    Phase(String),
    Generic(String),
}

impl Fact {
    pub fn kind(&self) -> &'static str {
        match self {
            Fact::Temperature(_) => "temperature",
            Fact::Baseline(_) => "baseline",
            Fact::Surface(_) => "surface",
            Fact::Peak(_) => "peak",
            Fact::PeakWeek(_) => "peak_week",
            Fact::Phase(_) => "phase",
            Fact::Generic(_) => "generic",
        }
    }

    /// Whether the two statements say the same thing, up to rounding.
    pub fn agrees(&self, other: &Fact) -> bool {
        match (self, other) {
            (Fact::Temperature(a), Fact::Temperature(b)) | (Fact::Baseline(a), Fact::Baseline(b)) => {
                (a - b).abs() <= 0.1 + 1e-9
            }
            (Fact::Peak(a), Fact::Peak(b)) => (a - b).abs() <= 0.05 * a.abs().max(b.abs()) + 1e-9,
            (Fact::PeakWeek(a), Fact::PeakWeek(b)) => (a - b).abs() <= 0.5 + 1e-9,
            (Fact::Surface(a), Fact::Surface(b)) | (Fact::Phase(a), Fact::Phase(b)) => a == b,
            (Fact::Generic(a), Fact::Generic(b)) => normalize(a) == normalize(b),
            _ => false,
        }
    }

    pub fn same_kind(&self, other: &Fact) -> bool {
        self.kind() == other.kind() && !matches!(self, Fact::Generic(_))
    }
}

fn normalize(s: &str) -> String {
    s.trim()
        .trim_end_matches('.')
        .split_whitespace()
        .collect::<Vec<_>>()
        .join(" ")
        .to_lowercase()
}

/// What a sentence is about, for rendering.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Subject {
    pub place: String,
    pub year: String,
    pub states: String,
}

/// One sentence per fact. Values are written as given.
pub fn render(kind: &str, value: &str, subject: &Subject) -> String {
    let Subject { place, year, states } = subject;
    match kind {
        "temperature" => format!("The average temperature for {place} in {year} would be about {value}°C."),
        "baseline" => format!("With unchanged emissions, {place} would average about {value}°C in {year}."),
        "surface" => format!("{place} is located on {value}."),
        "peak" => format!("Hospital prevalence in {states} peaks at approximately {value} concurrent patients."),
        "peak_week" => format!("The peak arrives about {value} weeks after the season's onset."),
        "phase" => {
            let a = if value.starts_with(['a', 'e', 'i', 'o', 'u']) { "an" } else { "a" };
            format!("The outbreak enters {a} {value} growth phase.")
        }
        _ => value.to_string(),
    }
}

struct Patterns {
    baseline: Regex,
    temperature: Regex,
    surface: Regex,
    peak: Regex,
    week: Regex,
    phase: Regex,
}

fn patterns() -> &'static Patterns {
    static P: OnceLock<Patterns> = OnceLock::new();
    P.get_or_init(|| {
        let re = |s: &str| Regex::new(s).expect("fact pattern");
        Patterns {
            baseline: re(r"(?i)unchanged emissions.*?(-?\d+(?:\.\d+)?)\s*°C"),
            temperature: re(r"(?i)temperature.*?(-?\d+(?:\.\d+)?)\s*°C"),
            surface: re(r"(?i)\bon (land|sea)\b"),
            peak: re(r"(?i)peaks? at (?:a median of )?(?:about |approximately |around )?(\d[\d,]*(?:\.\d+)?)"),
            week: re(r"(?i)(\d+(?:\.\d+)?) weeks? after|week (\d+(?:\.\d+)?)"),
            phase: re(r"(?i)\b(explosive|rapid|gradual) growth"),
        }
    })
}

/// The capture that carries a claim's value, as a byte range.
pub fn value_span(sentence: &str) -> Option<(Fact, std::ops::Range<usize>)> {
    let p = patterns();
    let num = |m: regex::Match| m.as_str().replace(',', "").parse::<f64>().ok();
    if let Some(c) = p.baseline.captures(sentence) {
        let m = c.get(1)?;
        return Some((Fact::Baseline(num(m)?), m.range()));
    }
    if let Some(c) = p.temperature.captures(sentence) {
        let m = c.get(1)?;
        return Some((Fact::Temperature(num(m)?), m.range()));
    }
    if let Some(c) = p.surface.captures(sentence) {
        let m = c.get(1)?;
        return Some((Fact::Surface(m.as_str().to_lowercase()), m.range()));
    }
    if let Some(c) = p.peak.captures(sentence) {
        let m = c.get(1)?;
        return Some((Fact::Peak(num(m)?), m.range()));
    }
    if let Some(c) = p.week.captures(sentence) {
        let m = c.get(1).or_else(|| c.get(2))?;
        return Some((Fact::PeakWeek(num(m)?), m.range()));
    }
    if let Some(c) = p.phase.captures(sentence) {
        let m = c.get(1)?;
        return Some((Fact::Phase(m.as_str().to_lowercase()), m.range()));
    }
    None
}

pub fn parse(sentence: &str) -> Fact {
    value_span(sentence)
        .map(|(f, _)| f)
        .unwrap_or_else(|| Fact::Generic(sentence.trim().to_string()))
}

/// Split prose into sentences at ". " followed by a capital letter.
pub fn sentences(text: &str) -> Vec<String> {
    static RE: OnceLock<Regex> = OnceLock::new();
    let re = RE.get_or_init(|| Regex::new(r"[.!?]\s+").expect("sentence pattern"));
    let mut out = Vec::new();
    let mut start = 0;
    for m in re.find_iter(text) {
        let next = text[m.end()..].chars().next();
        if next.is_some_and(|c| c.is_uppercase()) {
            out.push(text[start..m.start() + 1].trim().to_string());
            start = m.end();
        }
    }
    let tail = text[start..].trim();
    if !tail.is_empty() {
        out.push(tail.to_string());
    }
    out.retain(|s| !s.is_empty());
    out
}

/// Facts stated by a rendered simulation context, with their value strings.
/// Only the first scenario of a multi-scenario context is read.
pub fn context_facts(context: &str) -> Vec<(Fact, String)> {
    static RE: OnceLock<Vec<(&'static str, Regex)>> = OnceLock::new();
    let res = RE.get_or_init(|| {
        [
            ("temperature", r"would be (-?\d+(?:\.\d+)?)°C"),
            ("baseline", r"against (-?\d+(?:\.\d+)?)°C with unchanged"),
            ("surface", r"location is on (land|sea)"),
            ("peak", r"median (?:peak )?of (\d+) concurrent"),
            ("peak_week", r"(?:around|in) week (\d+(?:\.\d+)?)"),
            ("phase", r"enters an? (\w+) growth phase"),
        ]
        .into_iter()
        .map(|(k, p)| (k, Regex::new(p).expect("context pattern")))
        .collect()
    });
    let first = context.lines().next().unwrap_or("");
    let first = first.split_once(": ").filter(|(tag, _)| tag.starts_with("Scenario ")).map_or(first, |(_, rest)| rest);
    let mut out = Vec::new();
    for (kind, re) in res {
        if let Some(c) = re.captures(first) {
            let v = c[1].to_string();
            let fact = match *kind {
                "temperature" => Fact::Temperature(v.parse().unwrap_or(f64::NAN)),
                "baseline" => Fact::Baseline(v.parse().unwrap_or(f64::NAN)),
                "surface" => Fact::Surface(v.clone()),
                "peak" => Fact::Peak(v.parse().unwrap_or(f64::NAN)),
                "peak_week" => Fact::PeakWeek(v.parse().unwrap_or(f64::NAN)),
                _ => Fact::Phase(v.clone()),
            };
            out.push((fact, v));
        }
    }
    out
}
