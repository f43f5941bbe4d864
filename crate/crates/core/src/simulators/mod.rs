//! Built-in simulators: a closed-form climate response model and a
//! stochastic SLIR influenza model, each described by a bundled handbook.

pub mod climate;
pub mod epi;
pub mod landmask;
pub mod summary;

use std::sync::OnceLock;

use thiserror::Error;

use crate::domain::{decode, Domain, FieldError, Handbook, ParamSettings, SimulationOutput};

pub use climate::{climate_project, ClimateParams, Scenario};
pub use epi::{epi_simulate, EpiParams, Seasonality};
pub use summary::{summarize_ensemble, GrowthPhase, OutbreakSummary};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimulatorError {
    #[error("parameters out of range: {}", join_fields(.0))]
    OutOfRangeParam(Vec<FieldError>),
    #[error("invalid parameters: {0}")]
    Invalid(String),
    #[error("ensemble has no trajectories")]
    EmptyEnsemble,
    #[error("no simulator named {0:?}")]
    UnknownSimulator(String),
}

fn join_fields(errors: &[FieldError]) -> String {
    errors.iter().map(ToString::to_string).collect::<Vec<_>>().join("; ")
}

/// A runnable simulator with its documentation.
pub trait Simulator: Send + Sync {
    fn handbook(&self) -> &Handbook;

    fn id(&self) -> &str {
        &self.handbook().simulator_id
    }

    fn run(&self, settings: &ParamSettings, seed: u64, ensemble_size: usize) -> Result<SimulationOutput, SimulatorError>;
}

static CLIMATE_HANDBOOK: OnceLock<Handbook> = OnceLock::new();
static EPIDEMIC_HANDBOOK: OnceLock<Handbook> = OnceLock::new();

pub fn climate_handbook() -> &'static Handbook {
    CLIMATE_HANDBOOK.get_or_init(|| {
        decode(include_str!("../../assets/simulators/climate_handbook.json")).expect("bundled climate handbook")
    })
}

pub fn epidemic_handbook() -> &'static Handbook {
    EPIDEMIC_HANDBOOK.get_or_init(|| {
        decode(include_str!("../../assets/simulators/epidemic_handbook.json")).expect("bundled epidemic handbook")
    })
}

pub fn handbook_for(domain: Domain) -> &'static Handbook {
    match domain {
        Domain::Climate => climate_handbook(),
        Domain::Epidemiology => epidemic_handbook(),
    }
}

pub struct ClimateSimulator;

impl Simulator for ClimateSimulator {
    fn handbook(&self) -> &Handbook {
        climate_handbook()
    }

    fn run(&self, settings: &ParamSettings, _seed: u64, _ensemble_size: usize) -> Result<SimulationOutput, SimulatorError> {
        let params = ClimateParams::from_settings(settings, self.handbook())?;
        climate_project(&params, settings.clone())
    }
}

pub struct EpidemicSimulator;

impl Simulator for EpidemicSimulator {
    fn handbook(&self) -> &Handbook {
        epidemic_handbook()
    }

    fn run(&self, settings: &ParamSettings, seed: u64, ensemble_size: usize) -> Result<SimulationOutput, SimulatorError> {
        let params = EpiParams::from_settings(settings, self.handbook())?;
        let mut out = epi_simulate(&params, seed, ensemble_size, settings.clone())?;
        let summary = summarize_ensemble(&out)?;
        summary::attach_summary(&mut out, &summary);
        Ok(out)
    }
}

pub fn simulator_for(domain: Domain) -> &'static dyn Simulator {
    match domain {
        Domain::Climate => &ClimateSimulator,
        Domain::Epidemiology => &EpidemicSimulator,
    }
}

pub fn simulator_by_id(id: &str) -> Result<&'static dyn Simulator, SimulatorError> {
    Domain::ALL
        .into_iter()
        .map(simulator_for)
        .find(|s| s.id() == id)
        .ok_or_else(|| SimulatorError::UnknownSimulator(id.to_string()))
}

/// `simulator_id -> version` for the bundled handbooks.
pub fn handbook_versions() -> std::collections::BTreeMap<String, String> {
    Domain::ALL
        .into_iter()
        .map(|d| {
            let h = handbook_for(d);
            (h.simulator_id.clone(), h.version.clone())
        })
        .collect()
}
