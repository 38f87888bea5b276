use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::model::VecD;

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct LeaderState {
    pub q: VecD,
    pub v: VecD,
    /// Acceleration `f^L`.
    pub f: VecD,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Segment {
    /// Constant acceleration.
    Accel { accel: VecD, duration: f64 },
    /// Uniform circular motion starting at `center + radius * e1` heading along `e2`.
    Arc { center: VecD, radius: f64, speed: f64, e1: VecD, e2: VecD, duration: f64 },
}

impl Segment {
    pub fn duration(&self) -> f64 {
        match *self {
            Segment::Accel { duration, .. } | Segment::Arc { duration, .. } => duration,
        }
    }

    pub fn accel_magnitude(&self) -> f64 {
        match *self {
            Segment::Accel { accel, .. } => accel.norm(),
            Segment::Arc { radius, speed, .. } => speed * speed / radius,
        }
    }

    /// State `tau` into the segment, given the state at its start.
    fn eval(&self, start: &LeaderState, tau: f64) -> LeaderState {
        match *self {
            Segment::Accel { accel, .. } => LeaderState {
                q: start.q + start.v * tau + 0.5 * tau * tau * accel,
                v: start.v + tau * accel,
                f: accel,
            },
            Segment::Arc { center, radius, speed, e1, e2, .. } => circle_state(&center, radius, speed, &e1, &e2, tau),
        }
    }
}

fn circle_state(center: &VecD, radius: f64, speed: f64, e1: &VecD, e2: &VecD, t: f64) -> LeaderState {
    let th = speed * t / radius;
    let (s, c) = th.sin_cos();
    let radial = c * e1 + s * e2;
    LeaderState {
        q: center + radius * radial,
        v: speed * (c * e2 - s * e1),
        f: -(speed * speed / radius) * radial,
    }
}

/// Piecewise trajectory made of [`Segment`]s. After the last segment the
/// leader continues with its terminal velocity and zero acceleration.
#[derive(Clone, Debug, PartialEq)]
pub struct MissionPath {
    segments: Vec<Segment>,
    starts: Vec<f64>,
    knots: Vec<LeaderState>,
    stage_durations: Option<[f64; 3]>,
}

impl MissionPath {
    pub fn new(start: VecD, start_velocity: VecD, segments: Vec<Segment>) -> Result<Self> {
        if segments.is_empty() {
            return Err(invalid("mission needs at least one segment"));
        }
        let mut starts = Vec::with_capacity(segments.len() + 1);
        let mut knots = Vec::with_capacity(segments.len() + 1);
        let mut t = 0.0;
        let mut st = LeaderState { q: start, v: start_velocity, f: VecD::zeros() };
        for seg in &segments {
            let d = seg.duration();
            if !(d >= 0.0 && d.is_finite()) {
                return Err(invalid(format!("segment duration must be finite and non-negative, got {d}")));
            }
            if let Segment::Arc { radius, speed, .. } = *seg {
                if !(radius > 0.0 && speed >= 0.0) {
                    return Err(invalid("arc segments need a positive radius"));
                }
            }
            starts.push(t);
            knots.push(st);
            st = seg.eval(&st, d);
            t += d;
        }
        starts.push(t);
        knots.push(LeaderState { f: VecD::zeros(), ..st });
        Ok(Self { segments, starts, knots, stage_durations: None })
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn duration(&self) -> f64 {
        *self.starts.last().expect("non-empty")
    }

    /// Durations of the outbound leg, the rotations and the return leg when
    /// built by [`build_mission`].
    pub fn stage_durations(&self) -> Option<[f64; 3]> {
        self.stage_durations
    }

    /// Start time of every segment plus the end time.
    pub fn junctions(&self) -> &[f64] {
        &self.starts
    }

    /// State at the end of segment `k`, evaluated from inside the segment.
    pub fn state_at_segment_end(&self, k: usize) -> LeaderState {
        self.segments[k].eval(&self.knots[k], self.segments[k].duration())
    }

    /// State at the start of segment `k`.
    pub fn state_at_segment_start(&self, k: usize) -> LeaderState {
        self.segments[k].eval(&self.knots[k], 0.0)
    }

    fn state(&self, t: f64) -> LeaderState {
        let end = self.duration();
        if t >= end {
            let last = self.knots.last().expect("non-empty");
            return LeaderState { q: last.q + (t - end) * last.v, v: last.v, f: VecD::zeros() };
        }
        let k = self.starts.partition_point(|&s| s <= t).saturating_sub(1);
        self.segments[k].eval(&self.knots[k], t - self.starts[k])
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum LeaderTrajectory {
    UniformLine { origin: VecD, velocity: VecD },
    Circle { center: VecD, radius: f64, speed: f64, e1: VecD, e2: VecD },
    Mission(MissionPath),
}

impl LeaderTrajectory {
    pub fn state_at(&self, t: f64) -> LeaderState {
        match self {
            LeaderTrajectory::UniformLine { origin, velocity } => LeaderState {
                q: origin + t * velocity,
                v: *velocity,
                f: VecD::zeros(),
            },
            LeaderTrajectory::Circle { center, radius, speed, e1, e2 } => {
                circle_state(center, *radius, *speed, e1, e2, t)
            }
            LeaderTrajectory::Mission(m) => m.state(t),
        }
    }

    /// Supremum of `|f^L|` over all time.
    pub fn accel_bound(&self) -> f64 {
        match self {
            LeaderTrajectory::UniformLine { .. } => 0.0,
            LeaderTrajectory::Circle { radius, speed, .. } => speed * speed / radius,
            LeaderTrajectory::Mission(m) => {
                m.segments.iter().map(Segment::accel_magnitude).fold(0.0, f64::max)
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        let finite = |v: &VecD| v.iter().all(|c| c.is_finite());
        match self {
            LeaderTrajectory::UniformLine { origin, velocity } => {
                if !(finite(origin) && finite(velocity)) {
                    return Err(invalid("line leader must be finite"));
                }
            }
            LeaderTrajectory::Circle { center, radius, speed, e1, e2 } => {
                if !(finite(center) && radius.is_finite() && *radius > 0.0 && speed.is_finite()) {
                    return Err(invalid("circle leader needs a finite center and positive radius"));
                }
                let ortho = (e1.norm() - 1.0).abs() < 1e-9 && (e2.norm() - 1.0).abs() < 1e-9 && e1.dot(e2).abs() < 1e-9;
                if !ortho {
                    return Err(invalid("circle plane vectors must be orthonormal"));
                }
            }
            LeaderTrajectory::Mission(_) => {}
        }
        Ok(())
    }

    pub fn line(origin: VecD, velocity: VecD) -> Self {
        LeaderTrajectory::UniformLine { origin, velocity }
    }

    /// Circle in the xy-plane passing through `start` with initial velocity `speed * ŷ`.
    pub fn circle_through(start: VecD, radius: f64, speed: f64) -> Self {
        let e1 = VecD::x();
        LeaderTrajectory::Circle { center: start - radius * e1, radius, speed, e1, e2: VecD::y() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MissionSpec {
    pub start: VecD,
    pub target: VecD,
    pub cruise_speed: f64,
    pub n_rotations: u32,
    pub rot_radius: f64,
    /// Magnitude used for every straight-line speed change.
    pub accel: f64,
}

impl Default for MissionSpec {
    fn default() -> Self {
        Self {
            start: VecD::zeros(),
            target: VecD::new(100.0, 0.0, 0.0),
            cruise_speed: 1.0,
            n_rotations: 3,
            rot_radius: 46.4,
            accel: 0.05,
        }
    }
}

fn straight_leg(from: VecD, to: VecD, speed: f64, accel: f64, out: &mut Vec<Segment>) {
    let delta = to - from;
    let dist = delta.norm();
    let dir = delta / dist;
    let (t_ramp, t_cruise) = if dist >= speed * speed / accel {
        (speed / accel, (dist - speed * speed / accel) / speed)
    } else {
        let vp = (accel * dist).sqrt();
        (vp / accel, 0.0)
    };
    out.push(Segment::Accel { accel: accel * dir, duration: t_ramp });
    if t_cruise > 0.0 {
        out.push(Segment::Accel { accel: VecD::zeros(), duration: t_cruise });
    }
    out.push(Segment::Accel { accel: -accel * dir, duration: t_ramp });
}

fn blend_accels(p0: &VecD, v0: &VecD, p1: &VecD, v1: &VecD, tau: f64) -> (VecD, VecD) {
    let dv = (v1 - v0) / tau;
    let dp = (p1 - p0 - 2.0 * tau * v0) / (tau * tau);
    (dp - 0.5 * dv, 1.5 * dv - dp)
}

/// Two equal-length constant-acceleration segments joining `(p0, v0)` to
/// `(p1, v1)`, as short as the acceleration cap allows.
fn blend(p0: VecD, v0: VecD, p1: VecD, v1: VecD, a_max: f64, out: &mut Vec<Segment>) {
    let peak = |tau: f64| {
        let (a1, a2) = blend_accels(&p0, &v0, &p1, &v1, tau);
        a1.norm().max(a2.norm())
    };
    let mut hi = 1.0;
    while peak(hi) > a_max {
        hi *= 2.0;
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if peak(mid) > a_max {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-12 * hi {
            break;
        }
    }
    let (a1, a2) = blend_accels(&p0, &v0, &p1, &v1, hi);
    out.push(Segment::Accel { accel: a1, duration: hi });
    out.push(Segment::Accel { accel: a2, duration: hi });
}

/// Out-and-back mission: travel from `start` to `target` and stop, swing onto
/// a circle about `target`, fly `n_rotations` full turns, swing back to rest
/// at `target`, then return to `start`. The leader starts and ends at rest.
pub fn build_mission(spec: &MissionSpec) -> Result<LeaderTrajectory> {
    let MissionSpec { start, target, cruise_speed: v, n_rotations, rot_radius: r, accel } = *spec;
    if !(r > 0.0 && r.is_finite()) {
        return Err(invalid(format!("rotation radius must be positive, got {r}")));
    }
    if !(v > 0.0 && v.is_finite()) {
        return Err(invalid("cruise speed must be positive"));
    }
    if !(accel > 0.0 && accel.is_finite()) {
        return Err(invalid("mission acceleration must be positive"));
    }
    let d = target - start;
    if d.norm() == 0.0 {
        return Err(invalid("mission start and target coincide"));
    }
    let e1 = d.normalize();
    let e2 = VecD::new(-e1.y, e1.x, 0.0);
    let e2 = if e2.norm() < 1e-12 { VecD::x() } else { e2.normalize() };

    let entry = target + r * e1;
    let mut segs = Vec::new();
    straight_leg(start, target, v, accel, &mut segs);
    blend(target, VecD::zeros(), entry, v * e2, accel, &mut segs);
    let n1 = segs.len();
    if n_rotations > 0 {
        segs.push(Segment::Arc {
            center: target,
            radius: r,
            speed: v,
            e1,
            e2,
            duration: f64::from(n_rotations) * TAU * r / v,
        });
    }
    let n2 = segs.len();
    blend(entry, v * e2, target, VecD::zeros(), accel, &mut segs);
    straight_leg(target, start, v, accel, &mut segs);

    let sum = |s: &[Segment]| s.iter().map(Segment::duration).sum::<f64>();
    let stages = [sum(&segs[..n1]), sum(&segs[n1..n2]), sum(&segs[n2..])];
    let mut path = MissionPath::new(start, VecD::zeros(), segs)?;
    path.stage_durations = Some(stages);
    Ok(LeaderTrajectory::Mission(path))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn default_circle() -> LeaderTrajectory {
        LeaderTrajectory::circle_through(VecD::zeros(), 46.4, 1.0)
    }

    fn fd_check(traj: &LeaderTrajectory, times: &[f64]) {
        let eps = 1e-5;
        for &t in times {
            let s = traj.state_at(t);
            let vp = (traj.state_at(t + eps).q - traj.state_at(t - eps).q) / (2.0 * eps);
            let fp = (traj.state_at(t + eps).v - traj.state_at(t - eps).v) / (2.0 * eps);
            assert!((vp - s.v).norm() < 1e-7, "velocity at {t}");
            assert!((fp - s.f).norm() < 1e-7, "acceleration at {t}");
        }
    }

    #[test]
    fn line_has_zero_acceleration() {
        let l = LeaderTrajectory::line(VecD::zeros(), VecD::new(1.0, 0.0, 0.0));
        assert_eq!(l.state_at(123.4).f, VecD::zeros());
        assert_eq!(l.state_at(2.0).q, VecD::new(2.0, 0.0, 0.0));
        assert_eq!(l.accel_bound(), 0.0);
    }

    #[test]
    fn circle_period_and_centripetal() {
        let c = default_circle();
        let a = c.state_at(0.0);
        let b = c.state_at(TAU * 46.4);
        assert!((a.q - b.q).norm() < 1e-9 && (a.v - b.v).norm() < 1e-12);
        assert_eq!(a.q, VecD::zeros());
        for t in [0.0, 10.0, 77.7] {
            let s = c.state_at(t);
            assert!((s.f.norm() - 1.0 / 46.4).abs() < 1e-15);
            assert!((s.v.norm() - 1.0).abs() < 1e-15);
        }
        assert!((c.accel_bound() - 0.021551724137931).abs() < 1e-12);
    }

    #[test]
    fn finite_differences_match_derivatives() {
        fd_check(&default_circle(), &[0.3, 5.0, 91.0]);
        let m = build_mission(&MissionSpec::default()).unwrap();
        let LeaderTrajectory::Mission(ref p) = m else { unreachable!() };
        // stay away from the junctions where f^L jumps
        let j = p.junctions().to_vec();
        let mids: Vec<f64> = j.windows(2).filter(|w| w[1] - w[0] > 1e-3).map(|w| 0.5 * (w[0] + w[1])).collect();
        fd_check(&m, &mids);
    }

    #[test]
    fn explicit_segment_bound() {
        let segs = [0.1, 0.0, 0.2]
            .iter()
            .map(|&a| Segment::Accel { accel: VecD::new(a, 0.0, 0.0), duration: 1.0 })
            .collect();
        let m = LeaderTrajectory::Mission(MissionPath::new(VecD::zeros(), VecD::zeros(), segs).unwrap());
        assert_eq!(m.accel_bound(), 0.2);
    }

    #[test]
    fn mission_stages() {
        let m = build_mission(&MissionSpec::default()).unwrap();
        let LeaderTrajectory::Mission(ref p) = m else { unreachable!() };
        let [s1, s2, s3] = p.stage_durations().unwrap();
        assert!(s1 >= 100.0);
        assert!((s2 - 3.0 * TAU * 46.4).abs() < 1e-9);
        assert!((s1 - s3).abs() < 1e-9);
        let end = m.state_at(p.duration());
        assert!(end.q.norm() < 1e-8 && end.v.norm() < 1e-12);
        let later = m.state_at(p.duration() + 50.0);
        assert_eq!(later.f, VecD::zeros());
    }

    #[test]
    fn mission_velocity_continuous_at_junctions() {
        let m = build_mission(&MissionSpec::default()).unwrap();
        let LeaderTrajectory::Mission(ref p) = m else { unreachable!() };
        for k in 0..p.segments().len() - 1 {
            let a = p.state_at_segment_end(k);
            let b = p.state_at_segment_start(k + 1);
            assert!((a.v - b.v).norm() <= 1e-12, "junction {k}: {:?} vs {:?}", a.v, b.v);
            assert!((a.q - b.q).norm() <= 1e-9, "junction {k}");
        }
    }

    #[test]
    fn mission_accel_bound_attained() {
        let m = build_mission(&MissionSpec::default()).unwrap();
        let LeaderTrajectory::Mission(ref p) = m else { unreachable!() };
        let bound = m.accel_bound();
        let n = 200_000;
        let mut seen: f64 = 0.0;
        for k in 0..=n {
            let t = p.duration() * k as f64 / n as f64;
            seen = seen.max(m.state_at(t).f.norm());
        }
        assert!(seen <= bound + 1e-15);
        assert!(seen >= bound - 1e-9);
        assert!(bound <= 0.05 + 1e-12);
    }

    #[test]
    fn short_leg_uses_triangular_profile() {
        let spec = MissionSpec { target: VecD::new(5.0, 0.0, 0.0), rot_radius: 2.0, ..Default::default() };
        let m = build_mission(&spec).unwrap();
        let LeaderTrajectory::Mission(ref p) = m else { unreachable!() };
        let t_peak = p.junctions()[1];
        assert!((m.state_at(t_peak).v.norm() - (0.05f64 * 5.0).sqrt()).abs() < 1e-12);
        assert!((m.state_at(p.junctions()[2]).q - spec.target).norm() < 1e-9);
    }

    #[test]
    fn rejects_bad_geometry() {
        assert!(build_mission(&MissionSpec { rot_radius: 0.0, ..Default::default() }).is_err());
        assert!(build_mission(&MissionSpec { target: VecD::zeros(), ..Default::default() }).is_err());
    }
}
