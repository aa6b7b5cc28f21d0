//! Synthetic SCADA data with known ground truth and injectable faults.
//!
//! Randomness comes from `ChaCha8Rng::seed_from_u64(seed)`. Each simulated
//! quantity draws from its own stream (`set_stream`), so adding or changing
//! one variable leaves the others untouched:
//!
//! | stream | quantity |
//! |---|---|
//! | 0 | env_temp noise |
//! | 1 | wind process |
//! | 2 | rotor speed regime and level |
//! | 3 | operating state |
//! | 4 | yaw |
//! | 5 | power missingness |
//! | 100 + i | noise of the i-th linkage |
//!
//! Fault injection uses its own seed from the [`FaultSpec`].

mod fault;
mod scenario;

use serde::{Deserialize, Serialize};

use crate::field::Field;

pub use fault::{inject_fault, FaultKind, FaultSpec};
pub use scenario::{
    generate_scenario, DutyModel, EnvModel, LinkSpec, LinkTerm, ScenarioConfig, WindModel,
};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SimulateError {
    #[error("invalid scenario: {0}")]
    InvalidConfig(String),
    #[error("field `{0}` has no values in the dataset")]
    UnknownField(Field),
    #[error("fault onset is outside the dataset time span")]
    OnsetOutOfRange,
    #[error("fault magnitude must be positive and finite, got {0}")]
    InvalidMagnitude(f64),
}

/// What the simulator knows that an analyst would not: the generating
/// linkages and any injected faults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub seed: u64,
    pub links: Vec<LinkSpec>,
    #[serde(default)]
    pub faults: Vec<FaultSpec>,
}

impl GroundTruth {
    pub fn link(&self, target: &Field) -> Option<&LinkSpec> {
        self.links.iter().find(|l| &l.target == target)
    }
}
