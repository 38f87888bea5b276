use serde::{Deserialize, Serialize};

use super::params::VecD;
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SwarmState {
    pub time: f64,
    pub positions: Vec<VecD>,
    pub velocities: Vec<VecD>,
}

impl SwarmState {
    pub fn new(time: f64, positions: Vec<VecD>, velocities: Vec<VecD>) -> Result<Self> {
        let s = Self { time, positions, velocities };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if self.positions.is_empty() {
            return Err(Error::MalformedState("no agents".into()));
        }
        if self.positions.len() != self.velocities.len() {
            return Err(Error::MalformedState(format!(
                "{} positions but {} velocities",
                self.positions.len(),
                self.velocities.len()
            )));
        }
        if !self.time.is_finite() {
            return Err(Error::MalformedState("non-finite time".into()));
        }
        let bad = self
            .positions
            .iter()
            .chain(&self.velocities)
            .position(|v| v.iter().any(|c| !c.is_finite()));
        if let Some(k) = bad {
            let n = self.positions.len();
            return Err(Error::MalformedState(format!("non-finite entry for agent {}", k % n)));
        }
        Ok(())
    }

    pub fn n_agents(&self) -> usize {
        self.positions.len()
    }
}
