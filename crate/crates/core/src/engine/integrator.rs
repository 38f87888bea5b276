use crate::error::{Error, Result};
use crate::leader::{LeaderState, LeaderTrajectory};
use crate::model::{ControlParams, ModelParams, PairList, SwarmState, VecD};

const DIVERGENCE_LIMIT: f64 = 1e9;

/// Velocity Verlet with a half-kick velocity predictor for the
/// velocity-dependent forces and one fixed-point refinement of the final kick.
/// Keeps the acceleration at the current state cached between steps.
pub struct Integrator<'a> {
    traj: &'a LeaderTrajectory,
    mp: &'a ModelParams,
    cp: &'a ControlParams,
    dt: f64,
    t0: f64,
    steps: u64,
    state: SwarmState,
    leader: LeaderState,
    acc: Vec<VecD>,
    v_half: Vec<VecD>,
    scratch: Vec<VecD>,
    u_mean: f64,
}

impl<'a> Integrator<'a> {
    pub fn new(
        state: SwarmState,
        traj: &'a LeaderTrajectory,
        mp: &'a ModelParams,
        cp: &'a ControlParams,
        dt: f64,
    ) -> Result<Self> {
        state.validate()?;
        let n = state.n_agents();
        let leader = traj.state_at(state.time);
        let pairs = PairList::build(&state.positions, mp)?;
        let mut acc = vec![VecD::zeros(); n];
        let u_mean = pairs.accelerations_into(&state.positions, &state.velocities, &leader, mp, cp, &mut acc);
        Ok(Self {
            traj,
            mp,
            cp,
            dt,
            t0: state.time,
            steps: 0,
            state,
            leader,
            acc,
            v_half: vec![VecD::zeros(); n],
            scratch: vec![VecD::zeros(); n],
            u_mean,
        })
    }

    pub fn state(&self) -> &SwarmState {
        &self.state
    }

    pub fn into_state(self) -> SwarmState {
        self.state
    }

    pub fn leader(&self) -> &LeaderState {
        &self.leader
    }

    /// Agent-mean control-force magnitude at the current state.
    pub fn control_mean(&self) -> f64 {
        self.u_mean
    }

    pub fn step(&mut self) -> Result<()> {
        let h = 0.5 * self.dt;
        let st = &mut self.state;
        for (((vh, q), v), a) in self.v_half.iter_mut().zip(&mut st.positions).zip(&st.velocities).zip(&self.acc) {
            *vh = v + h * a;
            *q += self.dt * *vh;
        }
        self.steps += 1;
        // multiply rather than accumulate so long runs do not drift in time
        let t = self.t0 + self.steps as f64 * self.dt;
        st.time = t;
        self.leader = self.traj.state_at(t);

        let pairs = PairList::build(&st.positions, self.mp)?;
        let (mp, cp, leader) = (self.mp, self.cp, &self.leader);
        pairs.accelerations_into(&st.positions, &self.v_half, leader, mp, cp, &mut self.scratch);
        for ((v, vh), a) in st.velocities.iter_mut().zip(&self.v_half).zip(&self.scratch) {
            *v = vh + h * a;
        }
        pairs.accelerations_into(&st.positions, &st.velocities, leader, mp, cp, &mut self.scratch);
        for ((v, vh), a) in st.velocities.iter_mut().zip(&self.v_half).zip(&self.scratch) {
            *v = vh + h * a;
        }
        self.u_mean = pairs.accelerations_into(&st.positions, &st.velocities, leader, mp, cp, &mut self.acc);

        let bad = st.positions.iter().zip(&st.velocities).position(|(q, v)| {
            q.iter().chain(v.iter()).any(|c| !c.is_finite() || c.abs() > DIVERGENCE_LIMIT)
        });
        match bad {
            Some(agent) => Err(Error::Diverged { time: t, agent }),
            None => Ok(()),
        }
    }
}

/// One integrator step from `state`.
pub fn verlet_step(
    state: &SwarmState,
    traj: &LeaderTrajectory,
    mp: &ModelParams,
    cp: &ControlParams,
    dt: f64,
) -> Result<SwarmState> {
    let mut it = Integrator::new(state.clone(), traj, mp, cp, dt)?;
    it.step()?;
    Ok(it.into_state())
}
