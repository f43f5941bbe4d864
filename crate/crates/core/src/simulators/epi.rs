//! Discrete-time stochastic SLIR influenza model, one population per state.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::sync::OnceLock;

use chrono::{Datelike, Duration, NaiveDate};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};

use crate::domain::{FieldError, Handbook, ParamSettings, ParamValue, SimulationOutput};

use super::summary::quantile_sorted;
use super::SimulatorError;

static POPULATIONS: OnceLock<BTreeMap<String, u64>> = OnceLock::new();

/// 2022 resident population by state name, including the District of Columbia.
pub fn state_populations() -> &'static BTreeMap<String, u64> {
    POPULATIONS.get_or_init(|| {
        serde_json::from_str(include_str!("../../assets/simulators/state_populations.json"))
            .expect("bundled population table parses")
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Seasonality {
    None,
    Moderate,
    Strong,
}

impl Seasonality {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "none" => Some(Seasonality::None),
            "moderate" => Some(Seasonality::Moderate),
            "strong" => Some(Seasonality::Strong),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Seasonality::None => "none",
            Seasonality::Moderate => "moderate",
            Seasonality::Strong => "strong",
        }
    }

    pub fn amplitude(self) -> f64 {
        match self {
            Seasonality::None => 0.0,
            Seasonality::Moderate => 0.15,
            Seasonality::Strong => 0.30,
        }
    }
}

/// Fixed epidemiological constants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpiConstants {
    pub latent_days: f64,
    pub infectious_days: f64,
    pub hospitalization: f64,
    pub initial_infected: u64,
}

impl Default for EpiConstants {
    fn default() -> Self {
        EpiConstants {
            latent_days: 1.5,
            infectious_days: 2.5,
            hospitalization: 0.01,
            initial_infected: 10,
        }
    }
}

pub const DEFAULT_HORIZON: usize = 210;

#[derive(Debug, Clone, PartialEq)]
pub struct EpiParams {
    pub r0: f64,
    pub seasonality: Seasonality,
    pub prior_immunity: f64,
    pub start_date: NaiveDate,
    pub states: Vec<String>,
    pub horizon_days: usize,
    /// One entry per state, same order.
    pub populations: Vec<u64>,
}

impl EpiParams {
    /// Parameters with populations looked up from the bundled table.
    pub fn new(
        r0: f64,
        seasonality: Seasonality,
        prior_immunity: f64,
        start_date: NaiveDate,
        states: &[&str],
    ) -> Result<Self, SimulatorError> {
        let table = state_populations();
        let populations = states
            .iter()
            .map(|s| {
                table
                    .get(*s)
                    .copied()
                    .ok_or_else(|| SimulatorError::Invalid(format!("unknown state {s:?}")))
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(EpiParams {
            r0,
            seasonality,
            prior_immunity,
            start_date,
            states: states.iter().map(|s| s.to_string()).collect(),
            horizon_days: DEFAULT_HORIZON,
            populations,
        })
    }

    pub fn from_settings(settings: &ParamSettings, handbook: &Handbook) -> Result<Self, SimulatorError> {
        handbook.check_settings(settings).map_err(SimulatorError::OutOfRangeParam)?;
        let s = handbook.with_defaults(settings);
        let missing = |name: &str| SimulatorError::Invalid(format!("{name} missing"));
        let r0 = s.get("R0").and_then(ParamValue::as_f64).ok_or_else(|| missing("R0"))?;
        let seasonality = s
            .get("seasonality")
            .and_then(ParamValue::as_str)
            .and_then(Seasonality::parse)
            .ok_or_else(|| missing("seasonality"))?;
        let prior_immunity = s
            .get("prior_immunity")
            .and_then(ParamValue::as_f64)
            .ok_or_else(|| missing("prior_immunity"))?;
        let start_date = s
            .get("start_date")
            .and_then(ParamValue::as_str)
            .and_then(|d| NaiveDate::parse_from_str(d, "%Y-%m-%d").ok())
            .ok_or_else(|| missing("start_date"))?;
        let states: Vec<&str> = s
            .get("states")
            .and_then(ParamValue::as_list)
            .ok_or_else(|| missing("states"))?
            .iter()
            .map(String::as_str)
            .collect();
        let horizon = s
            .get("horizon_days")
            .and_then(ParamValue::as_i64)
            .unwrap_or(DEFAULT_HORIZON as i64);
        let mut p = EpiParams::new(r0, seasonality, prior_immunity, start_date, &states)?;
        p.horizon_days = horizon.max(0) as usize;
        Ok(p)
    }

    /// Range checks; `relaxed` admits R0 = 0 and full immunity for testing.
    pub fn check(&self, relaxed: bool) -> Result<(), SimulatorError> {
        let mut errors = Vec::new();
        let mut err = |name: &str, reason: String| {
            errors.push(FieldError {
                name: name.into(),
                reason,
            })
        };
        let (r0_lo, r0_hi, imm_hi, min_horizon) = if relaxed { (0.0, 10.0, 1.0, 1) } else { (1.0, 3.5, 0.6, 60) };
        if !(self.r0 >= r0_lo && self.r0 <= r0_hi) {
            err("R0", format!("{} outside [{r0_lo}, {r0_hi}]", self.r0));
        }
        if !(self.prior_immunity >= 0.0 && self.prior_immunity <= imm_hi) {
            err("prior_immunity", format!("{} outside [0, {imm_hi}]", self.prior_immunity));
        }
        if self.states.is_empty() {
            err("states", "no states".into());
        }
        if self.states.len() != self.populations.len() {
            err("states", "population count differs from state count".into());
        }
        if self.horizon_days < min_horizon {
            err("horizon_days", format!("{} below {min_horizon}", self.horizon_days));
        }
        if errors.is_empty() {
            Ok(())
        } else {
            Err(SimulatorError::OutOfRangeParam(errors))
        }
    }

    /// Transmission rate on day `t` after the start.
    pub fn beta(&self, consts: &EpiConstants, t: usize) -> f64 {
        let doy = (self.start_date + Duration::days(t as i64)).ordinal() as f64;
        let forcing = 1.0 + self.seasonality.amplitude() * (2.0 * PI * (doy - 15.0) / 365.0).cos();
        self.r0 / consts.infectious_days * forcing
    }
}

/// Compartment counts on one day.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Compartments {
    pub s: u64,
    pub l: u64,
    pub i: u64,
    pub r: u64,
}

impl Compartments {
    pub fn initial(population: u64, prior_immunity: f64, consts: &EpiConstants) -> Self {
        let r = ((prior_immunity * population as f64).round() as u64).min(population);
        let i = consts.initial_infected.min(population - r);
        Compartments {
            s: population - r - i,
            l: 0,
            i,
            r,
        }
    }

    pub fn total(&self) -> u64 {
        self.s + self.l + self.i + self.r
    }
}

/// Daily compartments of one state in one ensemble member.
#[derive(Debug, Clone, PartialEq)]
pub struct StateRun {
    pub state: String,
    pub population: u64,
    pub days: Vec<Compartments>,
}

fn binomial(rng: &mut ChaCha8Rng, n: u64, p: f64) -> u64 {
    if n == 0 || p <= 0.0 {
        return 0;
    }
    if p >= 1.0 {
        return n;
    }
    Binomial::new(n, p).expect("probability in (0, 1)").sample(rng)
}

/// RNG for ensemble member `member`: one ChaCha stream per member.
pub fn member_rng(seed: u64, member: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(member);
    rng
}

/// One stochastic realization for every state.
pub fn simulate_member(params: &EpiParams, consts: &EpiConstants, rng: &mut ChaCha8Rng) -> Vec<StateRun> {
    let p_onset = 1.0 / consts.latent_days;
    let p_removal = 1.0 / consts.infectious_days;
    let betas: Vec<f64> = (0..params.horizon_days).map(|t| params.beta(consts, t)).collect();
    params
        .states
        .iter()
        .zip(&params.populations)
        .map(|(state, &n)| {
            let mut c = Compartments::initial(n, params.prior_immunity, consts);
            let mut days = Vec::with_capacity(params.horizon_days);
            for t in 0..params.horizon_days {
                days.push(c);
                if t + 1 == params.horizon_days {
                    break;
                }
                let p_inf = 1.0 - (-betas[t] * c.i as f64 / n as f64).exp();
                let new_l = binomial(rng, c.s, p_inf);
                let new_i = binomial(rng, c.l, p_onset);
                let new_r = binomial(rng, c.i, p_removal);
                c = Compartments {
                    s: c.s - new_l,
                    l: c.l + new_l - new_i,
                    i: c.i + new_i - new_r,
                    r: c.r + new_r,
                };
            }
            StateRun {
                state: state.clone(),
                population: n,
                days,
            }
        })
        .collect()
}

/// Hospital prevalence per day summed over states.
pub fn hospital_series(runs: &[StateRun], consts: &EpiConstants) -> Vec<f64> {
    let horizon = runs.first().map_or(0, |r| r.days.len());
    (0..horizon)
        .map(|t| consts.hospitalization * runs.iter().map(|r| r.days[t].i as f64).sum::<f64>())
        .collect()
}

/// Ensemble run with explicit constants and relaxed-range switch.
pub fn epi_simulate_with(
    params: &EpiParams,
    seed: u64,
    ensemble_size: usize,
    consts: &EpiConstants,
    relaxed: bool,
    settings: ParamSettings,
) -> Result<SimulationOutput, SimulatorError> {
    params.check(relaxed)?;
    if ensemble_size == 0 {
        return Err(SimulatorError::EmptyEnsemble);
    }
    let trajectories: Vec<Vec<f64>> = (0..ensemble_size as u64)
        .map(|m| hospital_series(&simulate_member(params, consts, &mut member_rng(seed, m)), consts))
        .collect();
    let median: Vec<f64> = (0..params.horizon_days)
        .map(|t| {
            let mut col: Vec<f64> = trajectories.iter().map(|tr| tr[t]).collect();
            col.sort_by(f64::total_cmp);
            quantile_sorted(&col, 0.5)
        })
        .collect();
    Ok(SimulationOutput {
        params: settings,
        scalars: BTreeMap::new(),
        labels: BTreeMap::new(),
        series: BTreeMap::from([("hospital_prevalence".to_string(), median)]),
        horizon: Some(params.horizon_days),
        trajectories,
        seed: Some(seed),
        ensemble_size,
    })
}

/// Stochastic ensemble with default constants and handbook ranges.
pub fn epi_simulate(
    params: &EpiParams,
    seed: u64,
    ensemble_size: usize,
    settings: ParamSettings,
) -> Result<SimulationOutput, SimulatorError> {
    epi_simulate_with(params, seed, ensemble_size, &EpiConstants::default(), false, settings)
}

/// Expected-value dynamics: the stochastic transitions replaced by their means.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeanFieldDay {
    pub s: f64,
    pub l: f64,
    pub i: f64,
    pub r: f64,
}

/// Deterministic run summed over states.
pub fn mean_field(params: &EpiParams, consts: &EpiConstants) -> Vec<MeanFieldDay> {
    let mut totals = vec![
        MeanFieldDay {
            s: 0.0,
            l: 0.0,
            i: 0.0,
            r: 0.0
        };
        params.horizon_days
    ];
    for &n in &params.populations {
        let init = Compartments::initial(n, params.prior_immunity, consts);
        let nf = n as f64;
        let (mut s, mut l, mut i, mut r) = (init.s as f64, init.l as f64, init.i as f64, init.r as f64);
        for (t, day) in totals.iter_mut().enumerate() {
            day.s += s;
            day.l += l;
            day.i += i;
            day.r += r;
            let new_l = s * (1.0 - (-params.beta(consts, t) * i / nf).exp());
            let new_i = l / consts.latent_days;
            let new_r = i / consts.infectious_days;
            s -= new_l;
            l += new_l - new_i;
            i += new_i - new_r;
            r += new_r;
        }
    }
    totals
}

/// Fraction of the initially susceptible population infected by the end
/// of a mean-field run.
pub fn mean_field_attack_rate(params: &EpiParams, consts: &EpiConstants) -> f64 {
    let days = mean_field(params, consts);
    let (first, last) = (days.first().expect("horizon >= 1"), days.last().expect("horizon >= 1"));
    if first.s == 0.0 {
        return 0.0;
    }
    (first.s - last.s) / first.s
}
