use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::engine::TrajectoryRecord;
use crate::error::{Error, Result};
use crate::leader::LeaderTrajectory;
use crate::model::{ControlParams, GeneratingFunctionSpec, GeneratingKind, ModelParams};

/// Linear part and bounded remainder of the two feedback forces:
/// `|u^P(y) + K_p y| <= C_p`, `|u^V(y) + K_v y| <= C_v`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearEnvelope {
    pub k_p: f64,
    pub c_p: f64,
    pub k_v: f64,
    pub c_v: f64,
    /// Bound on the Jacobian of the velocity remainder.
    pub c_delta_v: f64,
}

fn not_linear(what: &str, gain: &str) -> Error {
    Error::NotApplicable(format!(
        "{what} feedback gain is zero ({gain} = 0); the bounds need a positive linear part"
    ))
}

struct RadialFit {
    k: f64,
    /// Sup of `|K s - h(s) s|`.
    sup: f64,
    /// Sup of the Jacobian norm of `u(y) + K y`.
    jac: f64,
}

/// Radial fit on `[0, s_max]`, with `K` from the slope of the force magnitude
/// near `s_max`.
fn radial_fit(gf: &GeneratingFunctionSpec, s_max: f64) -> RadialFit {
    let n = 20_000;
    let k = (gf.magnitude(s_max) - gf.magnitude(0.5 * s_max)) / (0.5 * s_max);
    let (mut sup, mut jac) = (0.0f64, 0.0f64);
    for i in 0..=n {
        let s = s_max * i as f64 / n as f64;
        sup = sup.max((k * s - gf.magnitude(s)).abs());
        let h = gf.eval(s);
        let radial = if s > gf.threshold { h + s * gf.derivative(s) } else { 0.0 };
        jac = jac.max((k - h).abs()).max((k - radial).abs());
    }
    RadialFit { k, sup, jac }
}

fn numeric_envelope(gf: &GeneratingFunctionSpec, name: &str) -> Result<RadialFit> {
    let s1 = 100.0 * gf.threshold.max(1.0);
    let near = radial_fit(gf, s1);
    let far = radial_fit(gf, 2.0 * s1);
    if !(near.k > 0.0) || far.sup > near.sup * (1.0 + 1e-6) + 1e-12 {
        return Err(Error::NotApplicable(format!(
            "{name} feedback is not a bounded perturbation of a linear force (deviation keeps growing)"
        )));
    }
    Ok(near)
}

pub fn envelope(cp: &ControlParams) -> Result<LinearEnvelope> {
    cp.validate()?;
    if cp.alpha == 0.0 {
        return Err(not_linear("position", "K_p"));
    }
    if cp.beta == 0.0 {
        return Err(not_linear("velocity", "K_v"));
    }
    let (k_p, c_p) = match cp.k_kind {
        GeneratingKind::Linear => (cp.alpha, cp.alpha * cp.r0),
        _ => {
            let fit = numeric_envelope(&cp.position_gf(), "position")?;
            (fit.k, fit.sup)
        }
    };
    // for linear feedback the velocity remainder is β y inside the v0 ball and zero outside
    let (k_v, c_v, c_delta_v) = match cp.p_kind {
        GeneratingKind::Linear => (cp.beta, cp.beta * cp.v0, if cp.v0 > 0.0 { cp.beta } else { 0.0 }),
        _ => {
            let fit = numeric_envelope(&cp.velocity_gf(), "velocity")?;
            (fit.k, fit.sup, fit.jac)
        }
    };
    Ok(LinearEnvelope { k_p, c_p, k_v, c_v, c_delta_v })
}

/// Roots of `λ² + K̃_v λ + K̃_p = 0`.
pub fn eigenvalues(k_p_tilde: f64, k_v_tilde: f64) -> (Complex64, Complex64) {
    let disc = Complex64::new(k_v_tilde * k_v_tilde - 4.0 * k_p_tilde, 0.0).sqrt();
    let b = Complex64::new(-k_v_tilde, 0.0);
    ((b + disc) / 2.0, (b - disc) / 2.0)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EigenRegime {
    DistinctReal,
    Complex,
    Repeated,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub envelope: LinearEnvelope,
    pub c_l: f64,
    pub k_p_tilde: f64,
    pub k_v_tilde: f64,
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub c4: f64,
    pub lambda1: Complex64,
    pub lambda2: Complex64,
    pub gamma: f64,
    pub k_hat: f64,
    pub x_bound: f64,
    pub w_bound: f64,
    /// Asymptotic bound on the centre-of-mass velocity in the leader frame.
    pub com_vel_bound: f64,
    pub regime: EigenRegime,
    /// Repeated eigenvalue: velocities converge to the leader's.
    pub velocities_converge: bool,
    /// `r0 > x_bound`, so position feedback eventually switches off.
    pub r0_exceeds_x_bound: bool,
}

pub fn bound_report(env: &LinearEnvelope, mp: &ModelParams, cp: &ControlParams, traj: &LeaderTrajectory) -> Result<BoundReport> {
    if !(env.k_v > 0.0 && env.k_p > 0.0) {
        return Err(Error::NotApplicable("linear gains must be positive".into()));
    }
    let n = mp.n_agents as f64;
    let m = mp.mass;
    let c_l = traj.accel_bound();
    let c1 = n.sqrt() * (env.c_p + env.c_v + m * c_l);
    let c2 = ((n - 1.0).sqrt() * mp.a_coef * mp.r_c
        + (n * n - n).sqrt() * mp.b_coef * c1 / env.k_v
        + c1 / n.sqrt())
        / m;
    let kp = env.k_p / m;
    let kv = env.k_v / m;
    let disc = kv * kv - 4.0 * kp;
    let (lambda1, lambda2) = eigenvalues(kp, kv);
    let repeated = disc.abs() <= 1e-12 * (kv * kv).max(4.0 * kp);
    let regime = if repeated {
        EigenRegime::Repeated
    } else if disc > 0.0 {
        EigenRegime::DistinctReal
    } else {
        EigenRegime::Complex
    };
    let (x_bound, w_bound) = if repeated {
        (4.0 * c2 / kv, 0.0)
    } else {
        let root = disc.abs().sqrt();
        (2.0 * kv * c2 / (kp * root), 2.0 * c2 / root)
    };
    let c3 = (2.0 * (n - 1.0)).sqrt() * env.c_delta_v;
    let c4 = n.sqrt() * env.c_delta_v + m * c_l;
    Ok(BoundReport {
        envelope: *env,
        c_l,
        k_p_tilde: kp,
        k_v_tilde: kv,
        c1,
        c2,
        c3,
        c4,
        lambda1,
        lambda2,
        gamma: 4.0 * kp / (kv * kv),
        k_hat: env.k_v - c3,
        x_bound,
        w_bound,
        com_vel_bound: 2.0 * c4 / env.k_v,
        regime,
        velocities_converge: repeated,
        r0_exceeds_x_bound: cp.r0 > x_bound,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundCheck {
    pub pass: bool,
    pub window_start: f64,
    pub x_observed: f64,
    pub w_observed: f64,
    /// `1 - observed / (bound (1 + η))`; negative on violation.
    pub x_margin: f64,
    pub w_margin: f64,
}

fn margin(observed: f64, bound: f64, eta: f64) -> f64 {
    let limit = bound * (1.0 + eta);
    if limit > 0.0 {
        1.0 - observed / limit
    } else if eta > 0.0 {
        // a zero bound is asymptotic; allow `eta` in absolute terms
        1.0 - observed / eta
    } else if observed == 0.0 {
        1.0
    } else {
        -observed
    }
}

/// Compare the post-transient maxima of `|x_i|` and `|w_i|` against the report.
pub fn check_bounds(record: &TrajectoryRecord, report: &BoundReport, transient_fraction: f64, eta: f64) -> BoundCheck {
    let t0 = record.t.first().copied().unwrap_or(0.0);
    let start = t0 + transient_fraction.clamp(0.0, 1.0) * (record.horizon() - t0);
    let k0 = record.index_at(start);
    let x_observed = record.max_pos_dev[k0..].iter().copied().fold(0.0, f64::max);
    let w_observed = record.max_vel_dev[k0..].iter().copied().fold(0.0, f64::max);
    let x_margin = margin(x_observed, report.x_bound, eta);
    let w_margin = margin(w_observed, report.w_bound, eta);
    BoundCheck {
        pass: x_margin >= 0.0 && w_margin >= 0.0,
        window_start: record.t.get(k0).copied().unwrap_or(start),
        x_observed,
        w_observed,
        x_margin,
        w_margin,
    }
}

pub const DECAY_FLOOR: f64 = 1e-10;
pub const DECAY_SLACK: f64 = 1.05;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayCheck {
    pub pass: bool,
    /// Least-squares slope of `ln |Ŵ|` above the floor; `None` with fewer than two points.
    pub fitted_rate: Option<f64>,
    pub predicted_rate: f64,
    pub w_hat_t1: f64,
    /// Largest `|Ŵ(t)| / (|Ŵ(t1)| e^{-K̂(t - t1)/M})` seen above the floor.
    pub worst_ratio: f64,
}

fn slope(xs: &[f64], ys: &[f64]) -> Option<f64> {
    if xs.len() < 2 {
        return None;
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

/// Exponential decay of the velocities relative to the centre of mass after
/// `t1`. Requires every agent to stay inside the `r0` ball from `t1` on.
pub fn decay_check(record: &TrajectoryRecord, k_hat: f64, mass: f64, t1: f64, r0: f64) -> Result<DecayCheck> {
    if !(k_hat > 0.0) {
        return Err(Error::NotApplicable(format!("decay rate K̂ = {k_hat} is not positive")));
    }
    let k1 = record.index_at(t1);
    if k1 >= record.len() {
        return Err(Error::NotApplicable(format!("record ends before t1 = {t1}")));
    }
    if let Some(k) = (k1..record.len()).find(|&k| record.max_pos_dev[k] > r0) {
        return Err(Error::NotApplicable(format!(
            "agent outside the r0 ball at t = {} (|x| = {} > {r0})",
            record.t[k], record.max_pos_dev[k]
        )));
    }
    let rate = k_hat / mass;
    let w1 = record.com_rel_vel[k1];
    let ta = record.t[k1];
    let mut check = DecayCheck { pass: true, fitted_rate: None, predicted_rate: -rate, w_hat_t1: w1, worst_ratio: 0.0 };
    if w1 == 0.0 {
        return Ok(check);
    }
    let (mut xs, mut ys) = (Vec::new(), Vec::new());
    for k in k1..record.len() {
        let w = record.com_rel_vel[k];
        if w < DECAY_FLOOR {
            break;
        }
        let dt = record.t[k] - ta;
        let ratio = w / (w1 * (-rate * dt).exp());
        check.worst_ratio = check.worst_ratio.max(ratio);
        xs.push(dt);
        ys.push(w.ln());
    }
    check.pass = check.worst_ratio <= DECAY_SLACK;
    check.fitted_rate = slope(&xs, &ys);
    Ok(check)
}
