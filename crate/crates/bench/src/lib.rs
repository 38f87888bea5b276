//! Fixtures shared by the benchmarks.

use flock_core::sweep::regime_preset;
use flock_core::{sample_initial, ControlParams, ModelParams, RunConfig, SwarmState};

/// Typical regime, unit-speed line leader, `n` agents, seed 42.
pub fn typical(n: usize, n_steps: u64) -> RunConfig {
    let preset = regime_preset(1).expect("regime 1 exists");
    let mut model = preset.model(&ModelParams::default());
    model.n_agents = n;
    RunConfig {
        model,
        control: preset.control(&ControlParams::default()),
        n_steps,
        seed: 42,
        ..Default::default()
    }
}

pub fn initial(cfg: &RunConfig) -> SwarmState {
    sample_initial(cfg).expect("fixture config is valid")
}
