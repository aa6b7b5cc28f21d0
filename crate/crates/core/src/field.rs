//! Logical names for the numeric SCADA variables.
//!
//! Every numeric channel a model, chart or schema can refer to is a [`Field`].
//! Fields have a stable string form (`env_temp`, `vibration.gen_bearing_de.velocity`)
//! used in config files, CSV schemas and serialized models.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// Which quantity of a vibration channel is meant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum VibrationMeasure {
    /// Velocity in mm/s.
    Velocity,
    Acceleration,
}

impl VibrationMeasure {
    pub fn as_str(self) -> &'static str {
        match self {
            VibrationMeasure::Velocity => "velocity",
            VibrationMeasure::Acceleration => "acceleration",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Field {
    WindSpeed,
    EnvTemp,
    NacelleTemp,
    GearboxTemp,
    BearingTemp,
    Gen1Temp,
    Gen2Temp,
    OilTemp,
    RotorSpeed,
    GeneratorSpeed,
    PowerOutput,
    PitchAngle,
    Yaw,
    Vibration {
        channel: String,
        measure: VibrationMeasure,
    },
}

const SCALAR_FIELDS: [(Field, &str); 13] = [
    (Field::WindSpeed, "wind_speed"),
    (Field::EnvTemp, "env_temp"),
    (Field::NacelleTemp, "nacelle_temp"),
    (Field::GearboxTemp, "gearbox_temp"),
    (Field::BearingTemp, "bearing_temp"),
    (Field::Gen1Temp, "gen1_temp"),
    (Field::Gen2Temp, "gen2_temp"),
    (Field::OilTemp, "oil_temp"),
    (Field::RotorSpeed, "rotor_speed"),
    (Field::GeneratorSpeed, "generator_speed"),
    (Field::PowerOutput, "power_output"),
    (Field::PitchAngle, "pitch_angle"),
    (Field::Yaw, "yaw"),
];

impl Field {
    /// All non-vibration fields, in canonical schema order.
    pub fn scalars() -> impl Iterator<Item = Field> {
        SCALAR_FIELDS.iter().map(|(f, _)| f.clone())
    }

    pub fn vibration(channel: impl Into<String>, measure: VibrationMeasure) -> Field {
        Field::Vibration {
            channel: channel.into(),
            measure,
        }
    }

    pub fn is_vibration(&self) -> bool {
        matches!(self, Field::Vibration { .. })
    }

    /// Name usable in file names (`model_<name>.json`).
    pub fn file_stem(&self) -> String {
        self.to_string().replace('.', "_")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown field name `{0}`")]
pub struct UnknownFieldName(pub String);

impl FromStr for Field {
    type Err = UnknownFieldName;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if let Some((f, _)) = SCALAR_FIELDS.iter().find(|(_, name)| *name == s) {
            return Ok(f.clone());
        }
        if let Some(rest) = s.strip_prefix("vibration.") {
            if let Some((channel, measure)) = rest.rsplit_once('.') {
                let measure = match measure {
                    "velocity" => Some(VibrationMeasure::Velocity),
                    "acceleration" => Some(VibrationMeasure::Acceleration),
                    _ => None,
                };
                if let (Some(measure), false) = (measure, channel.is_empty()) {
                    return Ok(Field::vibration(channel, measure));
                }
            }
        }
        Err(UnknownFieldName(s.to_string()))
    }
}

impl fmt::Display for Field {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Field::Vibration { channel, measure } => {
                write!(f, "vibration.{}.{}", channel, measure.as_str())
            }
            scalar => {
                let name = SCALAR_FIELDS
                    .iter()
                    .find(|(g, _)| g == scalar)
                    .map(|(_, n)| *n)
                    .unwrap_or("?");
                f.write_str(name)
            }
        }
    }
}

impl TryFrom<String> for Field {
    type Error = UnknownFieldName;
    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

impl From<Field> for String {
    fn from(f: Field) -> String {
        f.to_string()
    }
}
