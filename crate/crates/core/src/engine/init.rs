use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::RunConfig;
use crate::error::{invalid, Result};
use crate::model::{SwarmState, VecD};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InitSpec {
    /// Radius of the ball about the leader's start that positions are drawn from.
    pub r_init: f64,
    pub vel_std: f64,
    /// Velocities farther than this from the leader's are redrawn.
    pub vel_support: f64,
}

impl Default for InitSpec {
    fn default() -> Self {
        Self { r_init: 10.0, vel_std: 1.0, vel_support: 1.0 }
    }
}

impl InitSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.r_init > 0.0 && self.r_init.is_finite()) {
            return Err(invalid("r_init must be positive"));
        }
        if !(self.vel_support > 0.0 && self.vel_support.is_finite()) {
            return Err(invalid("vel_support must be positive"));
        }
        if !(self.vel_std >= 0.0 && self.vel_std.is_finite()) {
            return Err(invalid("vel_std must be non-negative"));
        }
        Ok(())
    }
}

/// ChaCha20 keyed by `seed`, on stream `stream`.
pub fn rng_for(seed: u64, stream: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn uniform_in_ball(rng: &mut impl Rng, dim: usize, radius: f64) -> VecD {
    loop {
        let mut p = VecD::zeros();
        for k in 0..dim {
            p[k] = radius * (2.0 * rng.random::<f64>() - 1.0);
        }
        if p.norm() <= radius {
            return p;
        }
    }
}

fn truncated_normal(rng: &mut impl Rng, dim: usize, std: f64, support: f64) -> VecD {
    loop {
        let mut p = VecD::zeros();
        for k in 0..dim {
            let z: f64 = rng.sample(StandardNormal);
            p[k] = std * z;
        }
        if p.norm() <= support {
            return p;
        }
    }
}

pub fn sample_initial(cfg: &RunConfig) -> Result<SwarmState> {
    cfg.init.validate()?;
    let leader = cfg.trajectory.state_at(0.0);
    let mut rng = rng_for(cfg.seed, cfg.stream);
    let (n, d) = (cfg.model.n_agents, cfg.model.dim);
    let positions = (0..n).map(|_| leader.q + uniform_in_ball(&mut rng, d, cfg.init.r_init)).collect();
    let velocities = (0..n)
        .map(|_| leader.v + truncated_normal(&mut rng, d, cfg.init.vel_std, cfg.init.vel_support))
        .collect();
    SwarmState::new(0.0, positions, velocities)
}
