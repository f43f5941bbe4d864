use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::domain::{ScalarValue, SimulationOutput};

use super::SimulatorError;

/// Days of early growth used for the doubling-time fit.
pub const EARLY_WINDOW_DAYS: usize = 28;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GrowthPhase {
    Explosive,
    Rapid,
    Gradual,
}

impl GrowthPhase {
    pub fn from_doubling_weeks(weeks: f64) -> Self {
        if weeks < 1.5 {
            GrowthPhase::Explosive
        } else if weeks < 3.0 {
            GrowthPhase::Rapid
        } else {
            GrowthPhase::Gradual
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            GrowthPhase::Explosive => "explosive",
            GrowthPhase::Rapid => "rapid",
            GrowthPhase::Gradual => "gradual",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Quantiles {
    pub q25: f64,
    pub q50: f64,
    pub q75: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutbreakSummary {
    pub peak_hospital_prevalence_median: f64,
    pub peak_week: f64,
    pub growth_phase: GrowthPhase,
    /// Median early doubling time in weeks; infinite when there is no growth.
    #[serde(skip)]
    pub doubling_weeks: f64,
    pub trajectory_quantiles: Vec<Quantiles>,
}

/// Linear-interpolation quantile of an ascending slice.
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    match sorted.len() {
        0 => f64::NAN,
        1 => sorted[0],
        n => {
            let pos = q.clamp(0.0, 1.0) * (n - 1) as f64;
            let lo = pos.floor() as usize;
            let hi = pos.ceil() as usize;
            if lo == hi || sorted[lo] == sorted[hi] {
                return sorted[lo];
            }
            sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
        }
    }
}

pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    quantile_sorted(&v, 0.5)
}

/// First index of the maximum value.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate() {
        if *v > values[best] {
            best = i;
        }
    }
    best
}

/// Doubling time in days from a least-squares fit of log prevalence over
/// days `0..=min(peak, EARLY_WINDOW_DAYS)`; infinite without growth.
pub fn early_doubling_days(trajectory: &[f64], peak_day: usize) -> f64 {
    let end = peak_day.min(EARLY_WINDOW_DAYS).min(trajectory.len().saturating_sub(1));
    let pts: Vec<(f64, f64)> = (0..=end)
        .filter(|&t| trajectory.get(t).is_some_and(|v| *v > 0.0))
        .map(|t| (t as f64, trajectory[t].ln()))
        .collect();
    if pts.len() < 2 {
        return f64::INFINITY;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    if slope > 0.0 {
        std::f64::consts::LN_2 / slope
    } else {
        f64::INFINITY
    }
}

pub fn round1(x: f64) -> f64 {
    (x * 10.0).round() / 10.0
}

pub fn summarize_ensemble(output: &SimulationOutput) -> Result<OutbreakSummary, SimulatorError> {
    summarize_trajectories(&output.trajectories)
}

pub fn summarize_trajectories(trajectories: &[Vec<f64>]) -> Result<OutbreakSummary, SimulatorError> {
    if trajectories.is_empty() || trajectories.iter().any(Vec::is_empty) {
        return Err(SimulatorError::EmptyEnsemble);
    }
    let peaks_at: Vec<usize> = trajectories.iter().map(|t| argmax(t)).collect();
    let peaks: Vec<f64> = trajectories.iter().zip(&peaks_at).map(|(t, &d)| t[d]).collect();
    let days: Vec<f64> = peaks_at.iter().map(|&d| d as f64).collect();
    let doubling: Vec<f64> = trajectories
        .iter()
        .zip(&peaks_at)
        .map(|(t, &d)| early_doubling_days(t, d))
        .collect();
    let doubling_weeks = median(&doubling) / 7.0;
    let horizon = trajectories.iter().map(Vec::len).min().unwrap_or(0);
    let trajectory_quantiles = (0..horizon)
        .map(|t| {
            let mut col: Vec<f64> = trajectories.iter().map(|tr| tr[t]).collect();
            col.sort_by(f64::total_cmp);
            Quantiles {
                q25: quantile_sorted(&col, 0.25),
                q50: quantile_sorted(&col, 0.5),
                q75: quantile_sorted(&col, 0.75),
            }
        })
        .collect();
    Ok(OutbreakSummary {
        peak_hospital_prevalence_median: median(&peaks),
        peak_week: round1(median(&days) / 7.0),
        growth_phase: GrowthPhase::from_doubling_weeks(doubling_weeks),
        doubling_weeks,
        trajectory_quantiles,
    })
}

/// Record the summary's headline values as outputs.
pub fn attach_summary(output: &mut SimulationOutput, summary: &OutbreakSummary) {
    let mut scalar = |name: &str, value: f64, units: &str| {
        output.scalars.insert(
            name.to_string(),
            ScalarValue {
                value,
                units: units.to_string(),
            },
        );
    };
    scalar("peak_hospital_prevalence_median", summary.peak_hospital_prevalence_median, "persons");
    scalar("peak_week", summary.peak_week, "weeks");
    output
        .labels
        .extend(BTreeMap::from([("growth_phase".to_string(), summary.growth_phase.as_str().to_string())]));
}
