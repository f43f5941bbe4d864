use chrono::NaiveDate;

use simulrag::domain::{Domain, ParamSettings, ParamValue, Provenance};
use simulrag::simulators::epi::{epi_simulate_with, mean_field_attack_rate, EpiConstants};
use simulrag::simulators::landmask;
use simulrag::simulators::{simulator_for, summarize_ensemble, EpiParams, Seasonality, SimulatorError};

fn params(r0: f64, immunity: f64) -> EpiParams {
    EpiParams::new(r0, Seasonality::Moderate, immunity, NaiveDate::from_ymd_opt(2022, 10, 4).unwrap(), &["Ohio"]).unwrap()
}

#[test]
fn attack_rate_rises_with_r0_and_falls_with_immunity() {
    let c = EpiConstants::default();
    let by_r0: Vec<f64> = (0..=25).map(|i| mean_field_attack_rate(&params(1.0 + 0.1 * i as f64, 0.1), &c)).collect();
    assert!(by_r0.windows(2).all(|w| w[1] >= w[0]), "{by_r0:?}");
    let by_imm: Vec<f64> = (0..=12).map(|i| mean_field_attack_rate(&params(2.0, 0.05 * i as f64), &c)).collect();
    assert!(by_imm.windows(2).all(|w| w[1] <= w[0]), "{by_imm:?}");
}

#[test]
fn zero_transmission_only_drains() {
    let p = params(0.0, 0.2);
    let out = epi_simulate_with(&p, 1, 3, &EpiConstants::default(), true, ParamSettings::new("epidemic", Provenance::Manual))
        .unwrap();
    for t in &out.trajectories {
        assert!(t.windows(2).all(|w| w[1] <= w[0]));
    }
}

#[test]
fn ensemble_summary_is_consistent() {
    let sim = simulator_for(Domain::Epidemiology);
    let s = ParamSettings::new("epidemic", Provenance::Manual)
        .with("R0", ParamValue::Real(2.4))
        .with("states", ParamValue::List(vec!["Texas".into(), "Maine".into()]))
        .with("start_date", ParamValue::Text("2022-10-04".into()));
    let out = sim.run(&s, 5, 20).unwrap();
    assert_eq!(out.trajectories.len(), 20);
    let summary = summarize_ensemble(&out).unwrap();
    assert!(summary.peak_hospital_prevalence_median > 0.0);
    assert!(summary.peak_week > 0.0);
    assert!(summary.trajectory_quantiles.iter().all(|q| q.q25 <= q.q50 && q.q50 <= q.q75));
}

#[test]
fn out_of_range_settings_are_rejected() {
    let sim = simulator_for(Domain::Epidemiology);
    let s = ParamSettings::new("epidemic", Provenance::Manual).with("R0", ParamValue::Real(7.0));
    assert!(matches!(sim.run(&s, 0, 2), Err(SimulatorError::OutOfRangeParam(_))));
    let climate = simulator_for(Domain::Climate);
    let s = ParamSettings::new("climate", Provenance::Manual)
        .with("location", ParamValue::Text("Jakarta".into()))
        .with("year", ParamValue::Integer(2200));
    assert!(climate.run(&s, 0, 1).is_err());
}

#[test]
fn land_mask_basics() {
    assert_eq!(landmask::classify(0.0, 0.0), "sea");
    assert_eq!(landmask::classify(2.0, 47.0), "land");
    assert_eq!(landmask::classify(-100.0, 40.0), "land");
    assert_eq!(landmask::classify(-150.0, 0.0), "sea");
}

#[test]
fn climate_baseline_matches_zero_deltas() {
    let sim = simulator_for(Domain::Climate);
    let s = ParamSettings::new("climate", Provenance::Manual)
        .with("location", ParamValue::Text("Jakarta".into()))
        .with("year", ParamValue::Integer(2065));
    let out = sim.run(&s, 0, 1).unwrap();
    assert_eq!(out.scalars["temperature_c"].value, out.scalars["baseline_temperature_c"].value);
}
