//! Turbine-specific domain rules: which generator is active and the
//! theoretical power curve.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum TurbineError {
    #[error("rotor speed must be a non-negative number, got {0}")]
    NegativeSpeed(f64),
    #[error("invalid power curve parameters: {0}")]
    InvalidParams(&'static str),
    #[error("invalid generator thresholds: {0}")]
    InvalidThresholds(&'static str),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum GeneratorUse {
    Primary,
    Secondary,
    NoneInUse,
}

/// Rotor-speed bands identifying the active generator. The primary band is
/// open at its lower edge, the secondary band closed at both ends.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GeneratorThresholds {
    pub primary_above_rpm: f64,
    pub secondary_min_rpm: f64,
    pub secondary_max_rpm: f64,
}

impl Default for GeneratorThresholds {
    fn default() -> Self {
        Self {
            primary_above_rpm: 25.8,
            secondary_min_rpm: 19.0,
            secondary_max_rpm: 21.0,
        }
    }
}

impl GeneratorThresholds {
    pub fn validate(&self) -> Result<(), TurbineError> {
        if !(self.secondary_min_rpm >= 0.0
            && self.secondary_min_rpm <= self.secondary_max_rpm
            && self.secondary_max_rpm < self.primary_above_rpm)
        {
            return Err(TurbineError::InvalidThresholds(
                "need 0 <= secondary_min <= secondary_max < primary_above",
            ));
        }
        Ok(())
    }

    pub fn classify(&self, rotor_rpm: f64) -> Result<GeneratorUse, TurbineError> {
        if !(rotor_rpm >= 0.0) {
            return Err(TurbineError::NegativeSpeed(rotor_rpm));
        }
        Ok(if rotor_rpm > self.primary_above_rpm {
            GeneratorUse::Primary
        } else if (self.secondary_min_rpm..=self.secondary_max_rpm).contains(&rotor_rpm) {
            GeneratorUse::Secondary
        } else {
            GeneratorUse::NoneInUse
        })
    }
}

/// Classify with the default rotor-speed bands.
pub fn classify_generator(rotor_rpm: f64) -> Result<GeneratorUse, TurbineError> {
    GeneratorThresholds::default().classify(rotor_rpm)
}

/// Parameters of the cubic power curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PowerCurveParams {
    /// kg/m³
    pub air_density: f64,
    /// m²
    pub rotor_area: f64,
    pub power_coefficient: f64,
    pub cut_in: f64,
    pub rated: f64,
    pub cut_out: f64,
    /// W
    pub rated_power: f64,
}

impl Default for PowerCurveParams {
    fn default() -> Self {
        // rotor area of a 47 m diameter rotor
        let radius: f64 = 23.5;
        Self {
            air_density: 1.225,
            rotor_area: std::f64::consts::PI * radius * radius,
            power_coefficient: 0.4,
            cut_in: 4.0,
            rated: 15.0,
            cut_out: 25.0,
            rated_power: 600_000.0,
        }
    }
}

impl PowerCurveParams {
    pub fn validate(&self) -> Result<(), TurbineError> {
        use TurbineError::InvalidParams;
        if !(self.air_density > 0.0) {
            return Err(InvalidParams("air density must be positive"));
        }
        if !(self.rotor_area > 0.0) {
            return Err(InvalidParams("rotor area must be positive"));
        }
        if !(self.power_coefficient > 0.0 && self.power_coefficient < 1.0) {
            return Err(InvalidParams("power coefficient must lie in (0, 1)"));
        }
        if !(self.cut_in > 0.0 && self.cut_in < self.rated && self.rated < self.cut_out) {
            return Err(InvalidParams("need 0 < cut_in < rated < cut_out"));
        }
        if !(self.rated_power > 0.0) {
            return Err(InvalidParams("rated power must be positive"));
        }
        Ok(())
    }

    /// `0.5 * rho * A * cp * u^3` with no cut-in/cut-out handling.
    pub fn aerodynamic_power(&self, wind_speed: f64) -> f64 {
        0.5 * self.air_density * self.rotor_area * self.power_coefficient * wind_speed.powi(3)
    }
}

/// Theoretical electrical output in watts.
///
/// Zero outside `[cut_in, cut_out]`. Inside, the cubic curve evaluated at
/// `min(u, rated)` and capped at `rated_power`, so the output is flat from
/// the rated speed up to cut-out.
pub fn theoretical_power(wind_speed: f64, p: &PowerCurveParams) -> f64 {
    if !(wind_speed >= p.cut_in && wind_speed <= p.cut_out) {
        return 0.0;
    }
    p.aerodynamic_power(wind_speed.min(p.rated))
        .min(p.rated_power)
}
