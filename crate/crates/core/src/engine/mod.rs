mod init;
mod integrator;

pub use init::{rng_for, sample_initial, InitSpec};
pub use integrator::{verlet_step, Integrator};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::leader::{LeaderState, LeaderTrajectory};
use crate::model::{
    energy_rate_rhs, total_energy, ControlParams, ModelParams, SwarmState, VecD,
};

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub model: ModelParams,
    pub control: ControlParams,
    pub trajectory: LeaderTrajectory,
    pub dt: f64,
    pub n_steps: u64,
    pub seed: u64,
    /// RNG stream; lets related runs share a seed without sharing draws.
    pub stream: u64,
    pub record_every: u64,
    pub init: InitSpec,
    /// Keep a full copy of the swarm at every sample.
    pub store_states: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            model: ModelParams::default(),
            control: ControlParams::default(),
            trajectory: LeaderTrajectory::line(VecD::zeros(), VecD::x()),
            dt: 1e-2,
            n_steps: 100_000,
            seed: 0,
            stream: 0,
            record_every: 1,
            init: InitSpec::default(),
            store_states: false,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        self.model.validate()?;
        self.control.validate()?;
        self.trajectory.validate()?;
        self.init.validate()?;
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(invalid("dt must be positive"));
        }
        if self.record_every == 0 {
            return Err(invalid("record_every must be at least 1"));
        }
        Ok(())
    }

    pub fn horizon(&self) -> f64 {
        self.n_steps as f64 * self.dt
    }
}

/// Sampled diagnostics of one run. Every series has one entry per sample.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRecord {
    pub t: Vec<f64>,
    pub q_dev: Vec<f64>,
    pub v_dev: Vec<f64>,
    /// Running integral of the agent-mean control-force magnitude.
    pub u_cum: Vec<f64>,
    pub energy: Vec<f64>,
    pub energy_rate: Vec<f64>,
    /// Largest pairwise `|v_i - v_j|`.
    pub max_vel_spread: Vec<f64>,
    /// Largest `|x_i|`.
    pub max_pos_dev: Vec<f64>,
    /// Largest `|w_i|`.
    pub max_vel_dev: Vec<f64>,
    /// `|w̄|`, the centre-of-mass velocity in the leader frame.
    pub com_vel: Vec<f64>,
    /// `|Ŵ|`, velocities relative to the centre of mass, stacked.
    pub com_rel_vel: Vec<f64>,
    /// Some agent crossed `r0` or `v0` since the previous sample.
    pub activation_changed: Vec<bool>,
    pub states: Option<Vec<SwarmState>>,
}

impl TrajectoryRecord {
    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    pub fn horizon(&self) -> f64 {
        self.t.last().copied().unwrap_or(0.0)
    }

    /// Index of the first sample at or after `time`.
    pub fn index_at(&self, time: f64) -> usize {
        self.t.partition_point(|&s| s < time)
    }
}

/// A run stopped early. Carries what was recorded up to that point.
#[derive(Debug)]
pub struct RunAbort {
    pub time: f64,
    pub agent: Option<usize>,
    pub reason: String,
    pub partial: TrajectoryRecord,
}

pub fn max_pairwise_spread(v: &[VecD]) -> f64 {
    let mut m: f64 = 0.0;
    for i in 0..v.len() {
        for j in i + 1..v.len() {
            m = m.max((v[i] - v[j]).norm_squared());
        }
    }
    m.sqrt()
}

fn activation_pattern(state: &SwarmState, leader: &LeaderState, cp: &ControlParams, out: &mut Vec<bool>) {
    out.clear();
    for (q, v) in state.positions.iter().zip(&state.velocities) {
        out.push((q - leader.q).norm() > cp.r0);
        out.push((v - leader.v).norm() > cp.v0);
    }
}

fn push_sample(
    rec: &mut TrajectoryRecord,
    state: &SwarmState,
    leader: &LeaderState,
    cfg: &RunConfig,
    u_cum: f64,
    changed: bool,
) -> Result<()> {
    let n = state.n_agents() as f64;
    let x: Vec<VecD> = state.positions.iter().map(|q| q - leader.q).collect();
    let w: Vec<VecD> = state.velocities.iter().map(|v| v - leader.v).collect();
    let w_bar = w.iter().fold(VecD::zeros(), |a, b| a + b) / n;
    rec.t.push(state.time);
    rec.q_dev.push(x.iter().map(|v| v.norm()).sum::<f64>() / n);
    rec.v_dev.push(w.iter().map(|v| v.norm()).sum::<f64>() / n);
    rec.u_cum.push(u_cum);
    rec.energy.push(total_energy(state, leader, &cfg.model, &cfg.control)?);
    rec.energy_rate.push(energy_rate_rhs(state, leader, &cfg.model, &cfg.control));
    rec.max_vel_spread.push(max_pairwise_spread(&state.velocities));
    rec.max_pos_dev.push(x.iter().map(|v| v.norm()).fold(0.0, f64::max));
    rec.max_vel_dev.push(w.iter().map(|v| v.norm()).fold(0.0, f64::max));
    rec.com_vel.push(w_bar.norm());
    rec.com_rel_vel.push(w.iter().map(|v| (v - w_bar).norm_squared()).sum::<f64>().sqrt());
    rec.activation_changed.push(changed);
    if let Some(states) = rec.states.as_mut() {
        states.push(state.clone());
    }
    Ok(())
}

fn abort(err: Error, time: f64, partial: TrajectoryRecord) -> Error {
    let agent = match err {
        Error::Diverged { agent, .. } => Some(agent),
        Error::CoincidentAgents { i, .. } => Some(i),
        _ => None,
    };
    Error::Aborted(Box::new(RunAbort { time, agent, reason: err.to_string(), partial }))
}

/// Sample initial conditions from the seed and integrate.
pub fn run(cfg: &RunConfig) -> Result<TrajectoryRecord> {
    cfg.validate()?;
    let init = sample_initial(cfg)?;
    run_from(cfg, init)
}

/// Integrate `cfg.n_steps` steps from the given state. Samples are taken every
/// `record_every` steps and at the final step.
pub fn run_from(cfg: &RunConfig, initial: SwarmState) -> Result<TrajectoryRecord> {
    cfg.validate()?;
    if initial.n_agents() != cfg.model.n_agents {
        return Err(invalid(format!(
            "initial state has {} agents, model expects {}",
            initial.n_agents(),
            cfg.model.n_agents
        )));
    }
    let mut rec = TrajectoryRecord {
        states: cfg.store_states.then(Vec::new),
        ..Default::default()
    };
    let t_start = initial.time;
    let mut it = match Integrator::new(initial, &cfg.trajectory, &cfg.model, &cfg.control, cfg.dt) {
        Ok(it) => it,
        Err(e) => return Err(abort(e, t_start, rec)),
    };
    let mut pattern = Vec::new();
    let mut prev_pattern = Vec::new();
    activation_pattern(it.state(), it.leader(), &cfg.control, &mut prev_pattern);
    if let Err(e) = push_sample(&mut rec, it.state(), it.leader(), cfg, 0.0, false) {
        return Err(abort(e, t_start, rec));
    }

    let mut u_cum = 0.0;
    let mut u_prev = it.control_mean();
    let mut changed = false;
    for k in 1..=cfg.n_steps {
        if let Err(e) = it.step() {
            return Err(abort(e, it.state().time, rec));
        }
        let u = it.control_mean();
        u_cum += 0.5 * cfg.dt * (u_prev + u);
        u_prev = u;
        activation_pattern(it.state(), it.leader(), &cfg.control, &mut pattern);
        changed |= pattern != prev_pattern;
        std::mem::swap(&mut pattern, &mut prev_pattern);
        if k % cfg.record_every == 0 || k == cfg.n_steps {
            if let Err(e) = push_sample(&mut rec, it.state(), it.leader(), cfg, u_cum, changed) {
                return Err(abort(e, it.state().time, rec));
            }
            changed = false;
        }
    }
    Ok(rec)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(n_steps: u64) -> RunConfig {
        RunConfig {
            model: ModelParams { n_agents: 10, ..Default::default() },
            n_steps,
            seed: 3,
            ..Default::default()
        }
    }

    #[test]
    fn zero_steps_gives_single_sample() {
        let rec = run(&small(0)).unwrap();
        assert_eq!(rec.len(), 1);
        assert_eq!(rec.u_cum, vec![0.0]);
    }

    #[test]
    fn records_stride_and_terminal_sample() {
        let mut c = small(25);
        c.record_every = 10;
        let rec = run(&c).unwrap();
        assert_eq!(rec.len(), 4);
        assert!((rec.horizon() - 0.25).abs() < 1e-12);
        assert!(rec.t.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn battery_is_monotone() {
        let rec = run(&small(300)).unwrap();
        assert!(rec.u_cum.windows(2).all(|w| w[1] >= w[0]));
    }

    #[test]
    fn disabled_position_feedback_contributes_nothing() {
        let mut c = small(200);
        c.control = ControlParams::linear(0.0, 4.64, 0.0, 0.5);
        let rec = run(&c).unwrap();
        assert!(rec.u_cum.iter().all(|&u| u == 0.0));
    }

    #[test]
    fn repeatable() {
        let a = run(&small(200)).unwrap();
        let b = run(&small(200)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn abort_keeps_partial_record() {
        let mut c = small(5);
        c.model.n_agents = 2;
        c.control = ControlParams::linear(0.0, 0.0, 0.0, 0.0);
        let s = SwarmState::new(
            0.0,
            vec![VecD::new(1e9 - 10.0, 0.0, 0.0), VecD::zeros()],
            vec![VecD::new(1e4, 0.0, 0.0), VecD::zeros()],
        )
        .unwrap();
        match run_from(&c, s) {
            Err(Error::Aborted(a)) => {
                assert_eq!(a.agent, Some(0));
                assert_eq!(a.partial.len(), 1);
            }
            other => panic!("expected abort, got {other:?}"),
        }
    }
}
