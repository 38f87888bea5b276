use super::params::{ControlParams, ModelParams, VecD};
use super::state::SwarmState;
use crate::error::{Error, Result};
use crate::leader::LeaderState;

/// `A′ w_C(|q|) q`; force on agent `i` from agent `j` with `q = q_i - q_j`.
pub fn conservative_pair(q_ij: &VecD, mp: &ModelParams) -> Result<VecD> {
    let s = q_ij.norm();
    if s == 0.0 {
        return Err(Error::CoincidentAgents { i: 0, j: 1 });
    }
    let w = mp.weight_c(s);
    Ok(if w == 0.0 { VecD::zeros() } else { mp.a_coef * w * q_ij })
}

/// `-B′ w_D(|q|) v` with `v = v_i - v_j`.
pub fn dissipative_pair(q_ij: &VecD, v_ij: &VecD, mp: &ModelParams) -> Result<VecD> {
    let s = q_ij.norm();
    if s == 0.0 {
        return Err(Error::CoincidentAgents { i: 0, j: 1 });
    }
    let w = mp.weight_d(s);
    Ok(if w == 0.0 { VecD::zeros() } else { -mp.b_coef * w * v_ij })
}

pub fn position_alignment(q_il: &VecD, cp: &ControlParams) -> VecD {
    cp.position_gf().force(q_il)
}

pub fn velocity_alignment(v_il: &VecD, cp: &ControlParams) -> VecD {
    cp.velocity_gf().force(v_il)
}

/// `u^P + u^V` for one agent.
pub fn control_force(q_il: &VecD, v_il: &VecD, cp: &ControlParams) -> VecD {
    position_alignment(q_il, cp) + velocity_alignment(v_il, cp)
}

#[derive(Clone, Copy, Debug)]
struct Pair {
    i: u32,
    j: u32,
    f_c: VecD,
    /// `B′ w_D(|q_ij|)`
    b_w: f64,
}

/// Interacting pairs for a fixed set of positions. The position-dependent part
/// of every pair force is cached so velocity-dependent terms can be
/// re-evaluated cheaply.
#[derive(Clone, Debug, Default)]
pub struct PairList {
    pairs: Vec<Pair>,
}

impl PairList {
    pub fn build(positions: &[VecD], mp: &ModelParams) -> Result<Self> {
        let cut = mp.pair_cutoff();
        let cut2 = cut * cut;
        let mut pairs = Vec::new();
        for i in 0..positions.len() {
            let qi = positions[i];
            for (j, qj) in positions.iter().enumerate().skip(i + 1) {
                let q = qi - qj;
                let s2 = q.norm_squared();
                if s2 >= cut2 {
                    continue;
                }
                if s2 == 0.0 {
                    return Err(Error::CoincidentAgents { i, j });
                }
                let s = s2.sqrt();
                let wc = mp.weight_c(s);
                let wd = mp.weight_d(s);
                if wc == 0.0 && wd == 0.0 {
                    continue;
                }
                pairs.push(Pair {
                    i: i as u32,
                    j: j as u32,
                    f_c: mp.a_coef * wc * q,
                    b_w: mp.b_coef * wd,
                });
            }
        }
        Ok(Self { pairs })
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// Accelerations for the cached positions with the given velocities.
    /// Returns the agent-mean control-force magnitude as a by-product.
    pub fn accelerations_into(
        &self,
        positions: &[VecD],
        velocities: &[VecD],
        leader: &LeaderState,
        mp: &ModelParams,
        cp: &ControlParams,
        out: &mut [VecD],
    ) -> f64 {
        let pgf = cp.position_gf();
        let vgf = cp.velocity_gf();
        let mut u_sum = 0.0;
        for ((a, q), v) in out.iter_mut().zip(positions).zip(velocities) {
            let u = pgf.force(&(q - leader.q)) + vgf.force(&(v - leader.v));
            u_sum += u.norm();
            *a = u;
        }
        for p in &self.pairs {
            let (i, j) = (p.i as usize, p.j as usize);
            let f = p.f_c - p.b_w * (velocities[i] - velocities[j]);
            out[i] += f;
            out[j] -= f;
        }
        let inv_m = 1.0 / mp.mass;
        for a in out.iter_mut() {
            *a *= inv_m;
        }
        u_sum / positions.len() as f64
    }
}

pub fn accelerations(
    state: &SwarmState,
    leader: &LeaderState,
    mp: &ModelParams,
    cp: &ControlParams,
) -> Result<Vec<VecD>> {
    let pairs = PairList::build(&state.positions, mp)?;
    let mut out = vec![VecD::zeros(); state.n_agents()];
    pairs.accelerations_into(&state.positions, &state.velocities, leader, mp, cp, &mut out);
    Ok(out)
}

/// Agent-mean of `|u^P_i + u^V_i|`.
pub fn mean_control_magnitude(state: &SwarmState, leader: &LeaderState, cp: &ControlParams) -> f64 {
    let sum: f64 = state
        .positions
        .iter()
        .zip(&state.velocities)
        .map(|(q, v)| control_force(&(q - leader.q), &(v - leader.v), cp).norm())
        .sum();
    sum / state.n_agents() as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(x: f64, y: f64, z: f64) -> VecD {
        VecD::new(x, y, z)
    }

    fn still_leader() -> LeaderState {
        LeaderState { q: VecD::zeros(), v: VecD::zeros(), f: VecD::zeros() }
    }

    #[test]
    fn conservative_examples() {
        let mp = ModelParams::default();
        assert_eq!(conservative_pair(&v(2.0, 0.0, 0.0), &mp).unwrap(), VecD::zeros());
        let f = conservative_pair(&v(0.5, 0.0, 0.0), &mp).unwrap();
        assert!((f - v(1.25, 0.0, 0.0)).norm() < 1e-15);
        let g = conservative_pair(&v(-0.5, 0.0, 0.0), &mp).unwrap();
        assert_eq!(f, -g);
        assert!(matches!(conservative_pair(&VecD::zeros(), &mp), Err(Error::CoincidentAgents { .. })));
    }

    #[test]
    fn dissipative_examples() {
        let mp = ModelParams::default();
        let f = dissipative_pair(&v(2.5, 0.0, 0.0), &v(1.0, 0.0, 0.0), &mp).unwrap();
        assert!((f - v(-0.25, 0.0, 0.0)).norm() < 1e-15);
        assert_eq!(dissipative_pair(&v(6.0, 0.0, 0.0), &v(1.0, 0.0, 0.0), &mp).unwrap(), VecD::zeros());
        assert_eq!(dissipative_pair(&v(1.0, 0.0, 0.0), &VecD::zeros(), &mp).unwrap(), VecD::zeros());
    }

    #[test]
    fn alignment_examples() {
        let cp = ControlParams::default();
        assert_eq!(position_alignment(&v(3.0, 0.0, 0.0), &cp), VecD::zeros());
        assert_eq!(position_alignment(&v(5.0, 0.0, 0.0), &cp), v(-5.0, 0.0, 0.0));
        let off = ControlParams { alpha: 0.0, ..cp.clone() };
        assert_eq!(position_alignment(&v(50.0, 1.0, 0.0), &off), VecD::zeros());
        assert_eq!(velocity_alignment(&v(0.3, 0.0, 0.0), &cp), VecD::zeros());
        assert_eq!(velocity_alignment(&v(1.0, 0.0, 0.0), &cp), v(-1.0, 0.0, 0.0));
        let os = ControlParams { v0: 0.0, beta: 2.0, ..cp };
        assert_eq!(velocity_alignment(&v(0.01, -0.2, 0.0), &os), v(-0.02, 0.4, 0.0));
    }

    #[test]
    fn single_agent_at_leader_is_unforced() {
        let leader = LeaderState { q: v(1.0, 2.0, 3.0), v: v(1.0, 0.0, 0.0), f: VecD::zeros() };
        let s = SwarmState::new(0.0, vec![leader.q], vec![leader.v]).unwrap();
        let a = accelerations(&s, &leader, &ModelParams::default(), &ControlParams::default()).unwrap();
        assert_eq!(a[0], VecD::zeros());
    }

    #[test]
    fn separated_agents_in_dead_zone_are_unforced() {
        let s = SwarmState::new(
            0.0,
            vec![v(-3.0, 0.0, 0.0), v(3.0, 0.0, 0.0)],
            vec![v(0.1, 0.0, 0.0), v(0.0, -0.2, 0.0)],
        )
        .unwrap();
        let mp = ModelParams { r_d: 5.0, ..Default::default() };
        let a = accelerations(&s, &still_leader(), &mp, &ControlParams::default()).unwrap();
        // 6 apart: beyond both cutoffs
        assert_eq!(a, vec![VecD::zeros(); 2]);
    }

    #[test]
    fn only_conservative_term_between_close_agents() {
        let leader = LeaderState { q: v(1000.0, 0.0, 0.0), v: VecD::zeros(), f: VecD::zeros() };
        let cp = ControlParams { alpha: 0.0, ..Default::default() };
        let mp = ModelParams { mass: 2.0, ..Default::default() };
        let s = SwarmState::new(0.0, vec![VecD::zeros(), v(0.5, 0.0, 0.0)], vec![VecD::zeros(); 2]).unwrap();
        let a = accelerations(&s, &leader, &mp, &cp).unwrap();
        let f = conservative_pair(&v(-0.5, 0.0, 0.0), &mp).unwrap();
        assert_eq!(a[0], f / 2.0);
        assert_eq!(a[1], -f / 2.0);
    }

    #[test]
    fn coincident_agents_reported_with_indices() {
        let s = SwarmState::new(
            0.0,
            vec![VecD::zeros(), v(1.0, 0.0, 0.0), v(1.0, 0.0, 0.0)],
            vec![VecD::zeros(); 3],
        )
        .unwrap();
        let err = accelerations(&s, &still_leader(), &ModelParams::default(), &ControlParams::default());
        assert!(matches!(err, Err(Error::CoincidentAgents { i: 1, j: 2 })));
    }
}
