use flock_core::engine::Integrator;
use flock_core::sweep::regime_preset;
use flock_core::{
    build_mission, run, sample_initial, ControlParams, Error, InitSpec, LeaderTrajectory, MissionSpec, ModelParams,
    RunConfig, VecD,
};

fn regime(id: u8, n: usize) -> RunConfig {
    let p = regime_preset(id).unwrap();
    let mut model = p.model(&ModelParams::default());
    model.n_agents = n;
    RunConfig { model, control: p.control(&ControlParams::default()), seed: 42, ..Default::default() }
}

#[test]
fn conservative_dynamics_are_reversible() {
    let at_rest = LeaderTrajectory::line(VecD::zeros(), VecD::zeros());
    let cfg = RunConfig {
        model: ModelParams { n_agents: 20, b_coef: 0.0, ..Default::default() },
        control: ControlParams::linear(0.5, 0.0, 0.0, 0.0),
        trajectory: at_rest,
        init: InitSpec { r_init: 2.0, ..Default::default() },
        seed: 5,
        ..Default::default()
    };
    let start = sample_initial(&cfg).unwrap();
    let n = 2000;
    let mut it = Integrator::new(start.clone(), &cfg.trajectory, &cfg.model, &cfg.control, cfg.dt).unwrap();
    for _ in 0..n {
        it.step().unwrap();
    }
    let mut back = it.into_state();
    for v in &mut back.velocities {
        *v = -*v;
    }
    let mut it = Integrator::new(back, &cfg.trajectory, &cfg.model, &cfg.control, cfg.dt).unwrap();
    for _ in 0..n {
        it.step().unwrap();
    }
    let end = it.into_state();
    let scale = start.positions.iter().map(|q| q.norm()).fold(0.0, f64::max);
    for (a, b) in start.positions.iter().zip(&end.positions) {
        assert!((a - b).norm() / scale < 1e-6, "{a} vs {b}");
    }
    for (a, b) in start.velocities.iter().zip(&end.velocities) {
        assert!((a + b).norm() < 1e-6 * scale, "{a} vs {b}");
    }
}

#[test]
fn runs_are_deterministic() {
    let mut cfg = regime(1, 30);
    cfg.n_steps = 500;
    let a = run(&cfg).unwrap();
    assert_eq!(a, run(&cfg).unwrap());
    cfg.stream = 1;
    assert_ne!(a.q_dev, run(&cfg).unwrap().q_dev);
}

/// Largest `|ΔE/Δt - rate|` over stencils free of threshold crossings.
fn rate_mismatch(cfg: &RunConfig) -> f64 {
    let rec = run(cfg).unwrap();
    (1..rec.len() - 1)
        .filter(|&k| !rec.activation_changed[k] && !rec.activation_changed[k + 1])
        .map(|k| {
            let fd = (rec.energy[k + 1] - rec.energy[k - 1]) / (rec.t[k + 1] - rec.t[k - 1]);
            (fd - rec.energy_rate[k]).abs()
        })
        .fold(0.0, f64::max)
}

#[test]
fn energy_rate_mismatch_is_second_order() {
    // no position feedback and v0 = 0: nothing switches on or off
    let mut cfg = regime(4, 50);
    cfg.n_steps = 3000;
    let coarse = rate_mismatch(&cfg);
    cfg.dt /= 2.0;
    cfg.n_steps *= 2;
    let fine = rate_mismatch(&cfg);
    let ratio = coarse / fine;
    assert!((3.5..4.5).contains(&ratio), "coarse {coarse:e}, fine {fine:e}, ratio {ratio}");
}

#[test]
fn mission_run_tracks_the_leader() {
    let mut cfg = regime(1, 25);
    cfg.trajectory = build_mission(&MissionSpec { rot_radius: 46.4, ..Default::default() }).unwrap();
    cfg.init = InitSpec { vel_std: 0.5, vel_support: 0.5, ..Default::default() };
    cfg.n_steps = 20_000;
    cfg.record_every = 100;
    let rec = run(&cfg).unwrap();
    assert_eq!(rec.len(), 201);
    assert!(rec.q_dev.last().unwrap() < &10.0);
    assert!(rec.u_cum.windows(2).all(|w| w[1] >= w[0]));
}

#[test]
fn divergence_aborts_with_partial_record() {
    let mut cfg = regime(1, 10);
    cfg.control.alpha = 1e6;
    cfg.dt = 1.0;
    cfg.n_steps = 1000;
    match run(&cfg) {
        Err(Error::Aborted(abort)) => {
            assert!(abort.agent.is_some());
            assert!(!abort.partial.is_empty());
            assert!(abort.time > 0.0);
        }
        other => panic!("expected an abort, got {other:?}"),
    }
}
