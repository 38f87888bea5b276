use serde::{Deserialize, Serialize};

use crate::engine::TrajectoryRecord;
use crate::error::{invalid, Error, Result};
use crate::leader::LeaderState;
use crate::model::{ModelParams, SwarmState};

/// Dimensional ratio `A/B` that fixes the body speed scale.
pub const AMBIENT_RATIO: f64 = 10.0;

pub fn q_dev(state: &SwarmState, leader: &LeaderState) -> f64 {
    state.positions.iter().map(|q| (q - leader.q).norm()).sum::<f64>() / state.n_agents() as f64
}

pub fn v_dev(state: &SwarmState, leader: &LeaderState) -> f64 {
    state.velocities.iter().map(|v| (v - leader.v).norm()).sum::<f64>() / state.n_agents() as f64
}

/// `N (0.5 / r0)^d`: agent volume over activation-ball volume, times `N`.
pub fn group_density(n: usize, dim: usize, r0: f64) -> Result<f64> {
    if !(r0 > 0.0) {
        return Err(invalid(format!("density is infinite for r0 = {r0}")));
    }
    Ok(n as f64 * (0.5 / r0).powi(dim as i32))
}

pub fn body_speed(mp: &ModelParams) -> f64 {
    AMBIENT_RATIO * mp.b_coef / mp.a_coef
}

pub fn trapezoid(t: &[f64], y: &[f64]) -> f64 {
    t.windows(2).zip(y.windows(2)).map(|(t, y)| 0.5 * (t[1] - t[0]) * (y[0] + y[1])).sum()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TaskFunctionals {
    pub u_bar: f64,
    pub q_dev_bar: f64,
    pub v_dev_bar: f64,
    pub horizon: f64,
}

pub fn task_functionals(record: &TrajectoryRecord) -> Result<TaskFunctionals> {
    let (Some(&t0), Some(&t1)) = (record.t.first(), record.t.last()) else {
        return Err(Error::EmptyRecord);
    };
    let span = t1 - t0;
    if !(span > 0.0) {
        return Err(Error::EmptyRecord);
    }
    let u = record.u_cum.last().copied().unwrap_or(0.0) - record.u_cum.first().copied().unwrap_or(0.0);
    Ok(TaskFunctionals {
        u_bar: u / span,
        q_dev_bar: trapezoid(&record.t, &record.q_dev) / span,
        v_dev_bar: trapezoid(&record.t, &record.v_dev) / span,
        horizon: span,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FlockLevel {
    None,
    Approximate,
    Exact,
    ExactProper,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlockVerdict {
    pub level: FlockLevel,
    pub window_start: f64,
    pub r_bound: f64,
    pub v_bound: f64,
    pub eps: f64,
}

pub const DEFAULT_WINDOW: f64 = 0.1;
pub const DEFAULT_EPS: f64 = 1e-3;

/// Classify the tail of a run. `window` is the trailing fraction of the time
/// axis that must stay within `(r_bound, v_bound)`.
pub fn classify_flocking(record: &TrajectoryRecord, r_bound: f64, v_bound: f64, eps: f64, window: f64) -> FlockVerdict {
    let mut verdict = FlockVerdict { level: FlockLevel::None, window_start: 0.0, r_bound, v_bound, eps };
    let (Some(&t0), Some(&t1)) = (record.t.first(), record.t.last()) else {
        return verdict;
    };
    let start = t1 - window.clamp(0.0, 1.0) * (t1 - t0);
    let k0 = record.index_at(start).min(record.len() - 1);
    verdict.window_start = record.t[k0];
    let bounded = record.max_pos_dev[k0..].iter().all(|&x| x <= r_bound)
        && record.max_vel_dev[k0..].iter().all(|&w| w <= v_bound);
    if !bounded {
        return verdict;
    }
    verdict.level = FlockLevel::Approximate;
    let last = record.len() - 1;
    if record.max_vel_spread[last] > eps {
        return verdict;
    }
    verdict.level = FlockLevel::Exact;
    if record.max_vel_dev[last] <= eps {
        verdict.level = FlockLevel::ExactProper;
    }
    verdict
}
