use super::params::{ControlParams, ModelParams, VecD, WeightKind};
use super::state::SwarmState;
use crate::error::{Error, Result};
use crate::leader::LeaderState;

/// Pair potential whose negative gradient is the conservative pair force.
pub fn pair_potential(r: f64, mp: &ModelParams) -> f64 {
    match mp.weight_kind {
        WeightKind::Quadratic => {
            let rc = mp.r_c;
            if r >= rc {
                return 0.0;
            }
            let r2 = r * r;
            mp.a_coef * (rc * rc / 12.0 - 0.5 * r2 + 2.0 * r2 * r / (3.0 * rc) - 0.25 * r2 * r2 / (rc * rc))
        }
    }
}

pub fn repulsive_potential(state: &SwarmState, mp: &ModelParams) -> Result<f64> {
    let q = &state.positions;
    let mut u = 0.0;
    for i in 0..q.len() {
        for j in i + 1..q.len() {
            let r = (q[i] - q[j]).norm();
            if r == 0.0 {
                return Err(Error::CoincidentAgents { i, j });
            }
            u += pair_potential(r, mp);
        }
    }
    Ok(u)
}

pub fn attractive_potential(state: &SwarmState, leader: &LeaderState, cp: &ControlParams) -> f64 {
    let gf = cp.position_gf();
    state.positions.iter().map(|q| gf.potential((q - leader.q).norm())).sum()
}

pub fn kinetic_energy(state: &SwarmState, leader: &LeaderState, mp: &ModelParams) -> f64 {
    let w2: f64 = state.velocities.iter().map(|v| (v - leader.v).norm_squared()).sum();
    0.5 * mp.mass * w2
}

/// `(M/2)|W|^2 + U + Φ` in the leader frame.
pub fn total_energy(
    state: &SwarmState,
    leader: &LeaderState,
    mp: &ModelParams,
    cp: &ControlParams,
) -> Result<f64> {
    Ok(kinetic_energy(state, leader, mp)
        + repulsive_potential(state, mp)?
        + attractive_potential(state, leader, cp))
}

/// `Wᵀ L(X) W` as a sum over proximity-graph edges.
pub fn laplacian_quadform(state: &SwarmState, w: &[VecD], mp: &ModelParams) -> f64 {
    let q = &state.positions;
    let mut acc = 0.0;
    for i in 0..q.len() {
        for j in i + 1..q.len() {
            let wd = mp.weight_d((q[i] - q[j]).norm());
            if wd > 0.0 {
                acc += wd * (w[i] - w[j]).norm_squared();
            }
        }
    }
    mp.b_coef * acc
}

fn leader_frame_velocities(state: &SwarmState, leader: &LeaderState) -> Vec<VecD> {
    state.velocities.iter().map(|v| v - leader.v).collect()
}

fn velocity_feedback_form(w: &[VecD], cp: &ControlParams) -> f64 {
    let g = cp.velocity_gf();
    w.iter().map(|wi| g.eval(wi.norm()) * wi.norm_squared()).sum()
}

/// `Wᵀ[L(X) + G(W)]W`; zero exactly on the attractor.
pub fn attractor_residual(
    state: &SwarmState,
    leader: &LeaderState,
    mp: &ModelParams,
    cp: &ControlParams,
) -> f64 {
    let w = leader_frame_velocities(state, leader);
    laplacian_quadform(state, &w, mp) + velocity_feedback_form(&w, cp)
}

/// Right-hand side of the energy balance `dE/dt`.
pub fn energy_rate_rhs(
    state: &SwarmState,
    leader: &LeaderState,
    mp: &ModelParams,
    cp: &ControlParams,
) -> f64 {
    let w = leader_frame_velocities(state, leader);
    let forcing: f64 = w.iter().map(|wi| leader.f.dot(wi)).sum();
    -(laplacian_quadform(state, &w, mp) + velocity_feedback_form(&w, cp)) - mp.mass * forcing
}
