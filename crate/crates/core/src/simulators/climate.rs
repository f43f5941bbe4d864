use std::collections::BTreeMap;

use crate::domain::{GeoPoint, Handbook, ParamKind, ParamSettings, ParamValue, ScalarValue, SimulationOutput};

use super::{landmask, SimulatorError};

pub const BASE_YEAR: i64 = 2015;
pub const CO2_COEF: f64 = 2.0;
pub const CH4_COEF: f64 = 0.6;
pub const SO2_COEF: f64 = 1.0;
pub const BC_COEF: f64 = 0.8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scenario {
    Ssp245,
    Ssp585,
}

impl Scenario {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "ssp245" => Some(Scenario::Ssp245),
            "ssp585" => Some(Scenario::Ssp585),
            _ => None,
        }
    }

    /// Warming over 2015-2100 without emission changes, in degC.
    pub fn trend(self) -> f64 {
        match self {
            Scenario::Ssp245 => 1.6,
            Scenario::Ssp585 => 3.4,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClimateParams {
    pub location: GeoPoint,
    pub year: i64,
    pub scenario: Scenario,
    pub delta_co2: f64,
    pub delta_ch4: f64,
    pub delta_so2: f64,
    pub delta_bc: f64,
}

impl ClimateParams {
    pub fn new(location: GeoPoint, year: i64, scenario: Scenario) -> Self {
        ClimateParams {
            location,
            year,
            scenario,
            delta_co2: 0.0,
            delta_ch4: 0.0,
            delta_so2: 0.0,
            delta_bc: 0.0,
        }
    }

    /// Read validated settings; place names resolve through the handbook gazetteer.
    pub fn from_settings(settings: &ParamSettings, handbook: &Handbook) -> Result<Self, SimulatorError> {
        handbook.check_settings(settings).map_err(SimulatorError::OutOfRangeParam)?;
        let s = handbook.with_defaults(settings);
        let location = match s.get("location") {
            Some(ParamValue::Point(p)) => *p,
            Some(ParamValue::Text(name)) => resolve_place(handbook, name)
                .ok_or_else(|| SimulatorError::Invalid(format!("unknown place {name:?}")))?,
            _ => return Err(SimulatorError::Invalid("location missing".into())),
        };
        let num = |name: &str| s.get(name).and_then(ParamValue::as_f64).unwrap_or(0.0);
        let scenario = s
            .get("scenario")
            .and_then(ParamValue::as_str)
            .and_then(Scenario::parse)
            .ok_or_else(|| SimulatorError::Invalid("scenario missing".into()))?;
        let year = s
            .get("year")
            .and_then(ParamValue::as_i64)
            .ok_or_else(|| SimulatorError::Invalid("year missing".into()))?;
        Ok(ClimateParams {
            location,
            year,
            scenario,
            delta_co2: num("delta_CO2"),
            delta_ch4: num("delta_CH4"),
            delta_so2: num("delta_SO2"),
            delta_bc: num("delta_BC"),
        })
    }

    fn check(&self) -> Result<(), SimulatorError> {
        let mut errors = Vec::new();
        let mut bound = |name: &str, v: f64, lo: f64, hi: f64| {
            if !(v >= lo && v <= hi) {
                errors.push(crate::domain::FieldError {
                    name: name.into(),
                    reason: format!("{v} outside [{lo}, {hi}]"),
                });
            }
        };
        bound("location.lon", self.location.lon, -180.0, 180.0);
        bound("location.lat", self.location.lat, -90.0, 90.0);
        bound("year", self.year as f64, 1990.0, 2100.0);
        bound("delta_CO2", self.delta_co2, -50.0, 100.0);
        bound("delta_CH4", self.delta_ch4, -50.0, 100.0);
        bound("delta_SO2", self.delta_so2, -50.0, 50.0);
        bound("delta_BC", self.delta_bc, -50.0, 50.0);
        if errors.is_empty() {
            Ok(())
        } else {
            Err(SimulatorError::OutOfRangeParam(errors))
        }
    }
}

pub fn resolve_place(handbook: &Handbook, name: &str) -> Option<GeoPoint> {
    handbook.params.iter().find_map(|p| match &p.kind {
        ParamKind::GeoPoint { places } => places.get(name).copied(),
        _ => None,
    })
}

/// Baseline temperature at a latitude in 2015 without emission changes.
pub fn base_temperature(lat: f64) -> f64 {
    28.0 - 0.45 * lat.abs()
}

/// Annual mean temperature in degC.
pub fn temperature(p: &ClimateParams) -> f64 {
    base_temperature(p.location.lat) + p.scenario.trend() * (p.year - BASE_YEAR) as f64 / 85.0
        + CO2_COEF * (1.0 + p.delta_co2 / 100.0).ln()
        + CH4_COEF * (1.0 + p.delta_ch4 / 100.0).ln()
        - SO2_COEF * (p.delta_so2 / 100.0)
        - BC_COEF * (p.delta_bc / 100.0)
}

/// Run the climate response model for one setting.
pub fn climate_project(params: &ClimateParams, settings: ParamSettings) -> Result<SimulationOutput, SimulatorError> {
    params.check()?;
    let baseline = ClimateParams {
        delta_co2: 0.0,
        delta_ch4: 0.0,
        delta_so2: 0.0,
        delta_bc: 0.0,
        ..params.clone()
    };
    let degc = |value| ScalarValue {
        value,
        units: "degC".into(),
    };
    Ok(SimulationOutput {
        params: settings,
        scalars: BTreeMap::from([
            ("temperature_c".to_string(), degc(temperature(params))),
            ("baseline_temperature_c".to_string(), degc(temperature(&baseline))),
        ]),
        labels: BTreeMap::from([(
            "land_or_sea".to_string(),
            landmask::classify(params.location.lon, params.location.lat).to_string(),
        )]),
        series: BTreeMap::new(),
        horizon: None,
        trajectories: Vec::new(),
        seed: None,
        ensemble_size: 1,
    })
}
