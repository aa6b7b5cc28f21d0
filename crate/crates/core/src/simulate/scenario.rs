use std::f64::consts::TAU;

use chrono::{DateTime, TimeDelta, TimeZone, Utc};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::{GroundTruth, SimulateError};
use crate::field::{Field, VibrationMeasure};
use crate::ingest::{Dataset, OperatingState, Provenance, ScadaRecord};
use crate::turbine::{theoretical_power, PowerCurveParams};

const STREAM_ENV: u64 = 0;
const STREAM_WIND: u64 = 1;
const STREAM_DUTY: u64 = 2;
const STREAM_STATE: u64 = 3;
const STREAM_YAW: u64 = 4;
const STREAM_POWER: u64 = 5;
const STREAM_LINK_BASE: u64 = 100;

pub const VIBRATION_CHANNEL: &str = "gen_bearing_de";

/// Ambient temperature: seasonal and daily sinusoids plus white noise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EnvModel {
    pub mean: f64,
    pub seasonal_amplitude: f64,
    pub period_days: f64,
    /// Seasonal phase offset in days.
    pub phase_days: f64,
    pub daily_amplitude: f64,
    pub noise_sd: f64,
}

impl Default for EnvModel {
    fn default() -> Self {
        Self {
            mean: 10.0,
            seasonal_amplitude: 8.0,
            period_days: 365.0,
            phase_days: 0.0,
            daily_amplitude: 3.0,
            noise_sd: 0.5,
        }
    }
}

/// `ln u_t - ln mean = phi (ln u_{t-1} - ln mean) + noise_sd * e_t`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct WindModel {
    pub mean: f64,
    pub phi: f64,
    pub noise_sd: f64,
}

impl Default for WindModel {
    fn default() -> Self {
        Self {
            mean: 7.0,
            phi: 0.98,
            noise_sd: 0.05,
        }
    }
}

/// Rotor speed regimes and operating state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DutyModel {
    pub primary_prob: f64,
    pub primary_rpm: (f64, f64),
    pub secondary_prob: f64,
    pub secondary_rpm: (f64, f64),
    pub idle_rpm: (f64, f64),
    pub gear_ratio: f64,
    pub run_prob: f64,
    pub power_missing_prob: f64,
}

impl Default for DutyModel {
    fn default() -> Self {
        Self {
            primary_prob: 0.6,
            primary_rpm: (26.0, 27.5),
            secondary_prob: 0.25,
            secondary_rpm: (19.2, 20.8),
            idle_rpm: (0.0, 2.0),
            gear_ratio: 56.6,
            run_prob: 0.95,
            power_missing_prob: 0.05,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkTerm {
    pub variable: Field,
    #[serde(default = "one")]
    pub power: u32,
    pub coefficient: f64,
}

fn one() -> u32 {
    1
}

/// `target = intercept + sum(coefficient * variable^power) + noise_sd * e`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkSpec {
    pub target: Field,
    pub intercept: f64,
    pub terms: Vec<LinkTerm>,
    #[serde(default)]
    pub noise_sd: f64,
}

impl LinkSpec {
    /// The noise-free part, or `None` if an input is missing.
    pub fn mean_value(&self, r: &ScadaRecord) -> Option<f64> {
        self.terms.iter().try_fold(self.intercept, |acc, t| {
            Some(acc + t.coefficient * r.get(&t.variable)?.powi(t.power as i32))
        })
    }
}

fn link(target: Field, intercept: f64, terms: &[(Field, u32, f64)], noise_sd: f64) -> LinkSpec {
    LinkSpec {
        target,
        intercept,
        terms: terms
            .iter()
            .map(|(variable, power, coefficient)| LinkTerm {
                variable: variable.clone(),
                power: *power,
                coefficient: *coefficient,
            })
            .collect(),
        noise_sd,
    }
}

pub fn default_links() -> Vec<LinkSpec> {
    use Field::*;
    let vel = Field::vibration(VIBRATION_CHANNEL, VibrationMeasure::Velocity);
    let acc = Field::vibration(VIBRATION_CHANNEL, VibrationMeasure::Acceleration);
    vec![
        link(NacelleTemp, 7.5, &[(EnvTemp, 1, 0.95)], 0.5),
        link(
            BearingTemp,
            15.0,
            &[(EnvTemp, 1, 0.7), (WindSpeed, 1, 0.4)],
            0.8,
        ),
        link(
            GearboxTemp,
            20.0,
            &[(EnvTemp, 1, 0.6), (WindSpeed, 3, 0.002)],
            1.0,
        ),
        link(
            Gen1Temp,
            10.0,
            &[
                (EnvTemp, 1, 0.47),
                (GeneratorSpeed, 1, 0.012),
                (BearingTemp, 1, -0.3),
                (GearboxTemp, 1, 0.85),
            ],
            1.5,
        ),
        link(Gen2Temp, 12.0, &[(EnvTemp, 1, 0.8)], 1.0),
        link(OilTemp, 5.0, &[(GearboxTemp, 1, 0.9)], 0.8),
        link(
            vel.clone(),
            0.1,
            &[
                (GeneratorSpeed, 1, 2e-4),
                (WindSpeed, 3, 1.5e-4),
                (Gen1Temp, 1, 0.02),
                (Gen1Temp, 2, -4e-4),
                (Gen1Temp, 3, 3e-6),
            ],
            0.05,
        ),
        link(acc, 0.0, &[(vel, 1, 2.5)], 0.1),
    ]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScenarioConfig {
    pub start: DateTime<Utc>,
    pub duration_days: f64,
    pub cadence_secs: f64,
    pub seed: u64,
    pub env: EnvModel,
    pub wind: WindModel,
    pub duty: DutyModel,
    pub turbine: PowerCurveParams,
    /// Evaluated in order; a link may use targets of earlier links.
    pub links: Vec<LinkSpec>,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            start: Utc.with_ymd_and_hms(2013, 1, 1, 0, 0, 0).unwrap(),
            duration_days: 30.0,
            cadence_secs: 240.0,
            seed: 0,
            env: EnvModel::default(),
            wind: WindModel::default(),
            duty: DutyModel::default(),
            turbine: PowerCurveParams::default(),
            links: default_links(),
        }
    }
}

/// Fields produced directly by the simulator rather than by a linkage.
const DRIVERS: [Field; 7] = [
    Field::EnvTemp,
    Field::WindSpeed,
    Field::RotorSpeed,
    Field::GeneratorSpeed,
    Field::PowerOutput,
    Field::PitchAngle,
    Field::Yaw,
];

fn invalid(msg: impl Into<String>) -> SimulateError {
    SimulateError::InvalidConfig(msg.into())
}

fn check_range(name: &str, (lo, hi): (f64, f64)) -> Result<(), SimulateError> {
    if lo.is_finite() && hi.is_finite() && 0.0 <= lo && lo <= hi {
        Ok(())
    } else {
        Err(invalid(format!("{name} range must satisfy 0 <= lo <= hi")))
    }
}

fn check_prob(name: &str, p: f64) -> Result<(), SimulateError> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(invalid(format!("{name} must be in [0, 1]")))
    }
}

impl ScenarioConfig {
    pub fn record_count(&self) -> usize {
        (self.duration_days * 86_400.0 / self.cadence_secs).floor() as usize
    }

    pub fn validate(&self) -> Result<(), SimulateError> {
        if !(self.duration_days > 0.0 && self.duration_days.is_finite()) {
            return Err(invalid("duration_days must be positive"));
        }
        if !(self.cadence_secs >= 1e-3 && self.cadence_secs.is_finite()) {
            return Err(invalid("cadence_secs must be positive"));
        }
        if !(self.env.period_days > 0.0) {
            return Err(invalid("env.period_days must be positive"));
        }
        if !(self.wind.mean > 0.0) {
            return Err(invalid("wind.mean must be positive"));
        }
        if !(0.0..1.0).contains(&self.wind.phi) {
            return Err(invalid("wind.phi must be in [0, 1)"));
        }
        let sds = [
            ("env.noise_sd", self.env.noise_sd),
            ("wind.noise_sd", self.wind.noise_sd),
        ];
        for (name, sd) in sds {
            if !(sd >= 0.0 && sd.is_finite()) {
                return Err(invalid(format!("{name} must be non-negative")));
            }
        }
        let duty = &self.duty;
        check_prob("duty.primary_prob", duty.primary_prob)?;
        check_prob("duty.secondary_prob", duty.secondary_prob)?;
        check_prob("duty.run_prob", duty.run_prob)?;
        check_prob("duty.power_missing_prob", duty.power_missing_prob)?;
        if duty.primary_prob + duty.secondary_prob > 1.0 {
            return Err(invalid("duty.primary_prob + duty.secondary_prob exceeds 1"));
        }
        check_range("duty.primary_rpm", duty.primary_rpm)?;
        check_range("duty.secondary_rpm", duty.secondary_rpm)?;
        check_range("duty.idle_rpm", duty.idle_rpm)?;
        if !(duty.gear_ratio > 0.0) {
            return Err(invalid("duty.gear_ratio must be positive"));
        }
        self.turbine
            .validate()
            .map_err(|e| invalid(format!("turbine: {e}")))?;

        let mut known: Vec<Field> = DRIVERS.to_vec();
        for l in &self.links {
            if known.contains(&l.target) {
                return Err(invalid(format!("`{}` is set more than once", l.target)));
            }
            if !(l.noise_sd >= 0.0 && l.noise_sd.is_finite()) {
                return Err(invalid(format!(
                    "noise_sd of `{}` must be non-negative",
                    l.target
                )));
            }
            for t in &l.terms {
                if !known.contains(&t.variable) {
                    return Err(invalid(format!(
                        "`{}` depends on `{}`, which is not generated before it",
                        l.target, t.variable
                    )));
                }
                if t.power == 0 {
                    return Err(invalid(format!(
                        "zero power in the link for `{}`",
                        l.target
                    )));
                }
            }
            known.push(l.target.clone());
        }
        Ok(())
    }

    pub fn ground_truth(&self) -> GroundTruth {
        GroundTruth {
            seed: self.seed,
            links: self.links.clone(),
            faults: Vec::new(),
        }
    }
}

fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(rng)
}

fn uniform(rng: &mut ChaCha8Rng, (lo, hi): (f64, f64)) -> f64 {
    lo + (hi - lo) * rng.random::<f64>()
}

/// Simulate a scenario. The result is a pure function of `cfg`.
pub fn generate_scenario(cfg: &ScenarioConfig) -> Result<Dataset, SimulateError> {
    cfg.validate()?;
    let n = cfg.record_count();
    let mut env_rng = stream(cfg.seed, STREAM_ENV);
    let mut wind_rng = stream(cfg.seed, STREAM_WIND);
    let mut duty_rng = stream(cfg.seed, STREAM_DUTY);
    let mut state_rng = stream(cfg.seed, STREAM_STATE);
    let mut yaw_rng = stream(cfg.seed, STREAM_YAW);
    let mut power_rng = stream(cfg.seed, STREAM_POWER);
    let mut link_rngs: Vec<ChaCha8Rng> = (0..cfg.links.len() as u64)
        .map(|i| stream(cfg.seed, STREAM_LINK_BASE + i))
        .collect();

    let w = &cfg.wind;
    let stationary_sd = w.noise_sd / (1.0 - w.phi * w.phi).sqrt();
    let mut log_dev = stationary_sd * normal(&mut wind_rng);
    let mut yaw = 360.0 * yaw_rng.random::<f64>();
    let duty = &cfg.duty;
    let e = &cfg.env;

    let mut records = Vec::with_capacity(n);
    for i in 0..n {
        let offset_secs = i as f64 * cfg.cadence_secs;
        let timestamp = cfg.start + TimeDelta::milliseconds((offset_secs * 1000.0).round() as i64);
        let day = offset_secs / 86_400.0;
        let mut r = ScadaRecord::empty(timestamp);

        let env = e.mean
            + e.seasonal_amplitude * (TAU * (day + e.phase_days) / e.period_days).sin()
            + e.daily_amplitude * (TAU * day).sin()
            + e.noise_sd * normal(&mut env_rng);
        r.env_temp = Some(env);

        if i > 0 {
            log_dev = w.phi * log_dev + w.noise_sd * normal(&mut wind_rng);
        }
        let wind = w.mean * log_dev.exp();
        r.wind_speed = Some(wind);

        let u: f64 = duty_rng.random();
        let range = if wind < cfg.turbine.cut_in || u >= duty.primary_prob + duty.secondary_prob {
            duty.idle_rpm
        } else if u < duty.primary_prob {
            duty.primary_rpm
        } else {
            duty.secondary_rpm
        };
        let rotor = uniform(&mut duty_rng, range);
        r.rotor_speed = Some(rotor);
        r.generator_speed = Some(rotor * duty.gear_ratio);

        r.operating_state = Some(if state_rng.random::<f64>() < duty.run_prob {
            OperatingState::Run
        } else {
            OperatingState::from_code(state_rng.random_range(0..3)).expect("codes 0..3 are valid")
        });

        let missing = power_rng.random::<f64>() < duty.power_missing_prob;
        r.power_output = (!missing).then(|| theoretical_power(wind, &cfg.turbine) / 1000.0);
        r.pitch_angle = Some(2.0 * (wind - cfg.turbine.rated).max(0.0));
        yaw = (yaw + 2.0 * normal(&mut yaw_rng)).rem_euclid(360.0);
        r.yaw = Some(yaw);

        for (l, rng) in cfg.links.iter().zip(link_rngs.iter_mut()) {
            let noise = normal(rng);
            let v = l.mean_value(&r).map(|m| m + l.noise_sd * noise);
            r.set(&l.target, v);
        }
        records.push(r);
    }
    let provenance = Provenance::Simulated(Box::new(cfg.ground_truth()));
    Ok(Dataset::new(records, cfg.cadence_secs, provenance).expect("timestamps increase"))
}
