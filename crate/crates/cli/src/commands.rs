use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::time::Instant;

use anyhow::{anyhow, bail, Context};
use flock_core::metrics::classify_flocking;
use flock_core::sweep::{
    constrained_argmin, make_grid, marginalize, read_table, run_sweep, write_table, Axis, GridSpec,
    SeedMode, SweepOptions, SweepStatus, AXIS_NAMES,
};
use flock_core::theory::{
    bound_report, check_bounds, decay_check, envelope, monotonicity_check, wobbler_admissible,
    wobbler_closed_form,
};
use flock_core::{
    run, task_functionals, Error, GeneratingFunctionSpec, GeneratingKind, TrajectoryRecord, VecD,
};
use serde_json::json;

use crate::config::ConfigFile;
use crate::output::{fmt_f64, write_json, write_series, write_states};
use crate::{exit, Command, KindArg, RunArgs, SeedModeArg, WobblerMode};

/// Map an error to the documented exit codes.
pub fn exit_code_for(err: &anyhow::Error) -> i32 {
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<Error>() {
            return match e {
                Error::NotApplicable(_) => exit::NOT_APPLICABLE,
                Error::Aborted(_) | Error::Diverged { .. } | Error::CoincidentAgents { .. } => exit::ABORTED,
                _ => exit::INPUT,
            };
        }
    }
    exit::INPUT
}

pub fn dispatch(cmd: Command) -> anyhow::Result<i32> {
    match cmd {
        Command::Simulate { run, out, dump_config, states } => simulate(&run, &out, dump_config, states),
        Command::Sweep { run, alpha, r0, beta, v0, parallel, seed_mode, resume, out } => {
            let spec = GridSpec { axes: [parse_axis(&alpha)?, parse_axis(&r0)?, parse_axis(&beta)?, parse_axis(&v0)?] };
            let mode = match seed_mode {
                SeedModeArg::Shared => SeedMode::Shared,
                SeedModeArg::PerPoint => SeedMode::PerPoint,
            };
            sweep(&run, spec, parallel, mode, resume, &out)
        }
        Command::Optimize { table, qmax, vmax } => optimize(&table, qmax, vmax),
        Command::VerifyBounds { run, run_dir, transient, eta } => verify_bounds(&run, run_dir.as_deref(), transient, eta),
        Command::Wobbler {
            mode,
            alpha,
            positions,
            w0,
            f0,
            t0,
            t_end,
            samples,
            out,
            kind,
            gamma,
            threshold,
            s_lo,
            s_hi,
            grid_n,
            v0,
            radius,
        } => {
            let x0 = parse_points(&positions)?;
            let w0 = parse_vec(&w0)?;
            match mode {
                WobblerMode::Construct => {
                    let f0 = parse_vec(&f0)?;
                    wobbler_construct(&x0, &w0, &f0, alpha, t0, t_end, samples, &out, v0.zip(radius))
                }
                WobblerMode::Check => {
                    let kind = match kind {
                        KindArg::Linear => GeneratingKind::Linear,
                        KindArg::Power => GeneratingKind::Power { gamma },
                        KindArg::Exponential => GeneratingKind::Exponential,
                        KindArg::Logarithmic => GeneratingKind::Logarithmic,
                    };
                    let gf = GeneratingFunctionSpec { kind, gain: alpha, threshold };
                    let lo = s_lo.unwrap_or(threshold + 0.01);
                    let hi = s_hi.unwrap_or(threshold + 100.0);
                    wobbler_check(&gf, lo, hi, grid_n, &x0, &w0, v0.zip(radius))
                }
            }
        }
    }
}

/// Resolve the configuration: file (or defaults), then regime, scenario and
/// the scalar overrides, in that order.
pub fn resolve_config(args: &RunArgs) -> anyhow::Result<ConfigFile> {
    let mut cfg = match &args.config {
        Some(path) => ConfigFile::load(path)?,
        None => ConfigFile::default(),
    };
    if let Some(id) = args.regime {
        cfg.apply_regime(id)?;
    }
    if let Some(s) = args.scenario {
        cfg.apply_scenario(s)?;
    }
    if let Some(seed) = args.seed {
        cfg.run.seed = seed;
    }
    if let Some(n) = args.n_agents {
        cfg.model.n_agents = n;
    }
    if let Some(n) = args.steps {
        cfg.run.n_steps = n;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn create_dir(dir: &Path) -> anyhow::Result<()> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}

fn simulate(args: &RunArgs, out: &Path, dump_config: bool, states: bool) -> anyhow::Result<i32> {
    let cfg = resolve_config(args)?;
    let text = cfg.to_toml()?;
    if dump_config {
        print!("{text}");
        return Ok(exit::OK);
    }
    let mut rc = cfg.to_run_config()?;
    rc.store_states = states;
    create_dir(out)?;
    std::fs::write(out.join("config.toml"), &text)?;

    let started = Instant::now();
    let result = run(&rc);
    let runtime = started.elapsed().as_secs_f64();
    let record = match result {
        Ok(r) => r,
        Err(Error::Aborted(abort)) => {
            // keep what was computed before the failure
            write_series(&out.join("series.csv"), &abort.partial)?;
            return Err(Error::Aborted(abort).into());
        }
        Err(e) => return Err(e.into()),
    };
    write_series(&out.join("series.csv"), &record)?;
    if states {
        write_states(&out.join("states.csv"), &record)?;
    }
    let functionals = task_functionals(&record)?;
    let verdict = classify_flocking(&record, cfg.run.verdict_r, cfg.run.verdict_v, cfg.run.verdict_eps, cfg.run.verdict_window);
    let summary = json!({
        "functionals": functionals,
        "verdict": verdict,
        "terminal": {
            "t": record.horizon(),
            "q_dev": record.q_dev.last(),
            "v_dev": record.v_dev.last(),
            "max_vel_spread": record.max_vel_spread.last(),
        },
        "samples": record.len(),
        "runtime_seconds": runtime,
    });
    write_json(&out.join("summary.json"), &summary)?;
    let mut files = vec![
        json!({"file": "series.csv", "plot": "deviation", "x": "t", "y": ["q_dev", "v_dev"]}),
        json!({"file": "series.csv", "plot": "energy", "x": "t", "y": ["energy", "u_bar"]}),
        json!({"file": "series.csv", "plot": "velocity_spread", "x": "t", "y": ["max_vel_spread"], "scale": "log"}),
    ];
    if states {
        files.push(json!({"file": "states.csv", "plot": "agent_paths", "x": "qx", "y": ["qy"], "group": "agent"}));
    }
    write_json(&out.join("manifest.json"), &json!({ "files": files }))?;
    println!("{}", serde_json::to_string(&summary["verdict"])?);
    Ok(exit::OK)
}

/// `lo:hi:n`, or a single value for a one-point axis.
pub fn parse_axis(text: &str) -> anyhow::Result<Axis> {
    let parts: Vec<&str> = text.split(':').collect();
    let num = |s: &str| s.trim().parse::<f64>().with_context(|| format!("bad axis value {s:?} in {text:?}"));
    let axis = match parts.as_slice() {
        [v] => Axis::new(num(v)?, num(v)?, 1),
        [lo, hi, n] => Axis::new(num(lo)?, num(hi)?, n.trim().parse().with_context(|| format!("bad point count in {text:?}"))?),
        _ => bail!(Error::InvalidParameter(format!("axis must be lo:hi:n, got {text:?}"))),
    };
    Ok(axis)
}

fn sweep(
    args: &RunArgs,
    spec: GridSpec,
    parallel: Option<usize>,
    seed_mode: SeedMode,
    resume: bool,
    out: &Path,
) -> anyhow::Result<i32> {
    let cfg = resolve_config(args)?;
    spec.validate()?;
    let scenario = cfg.to_run_config()?;
    let grid = make_grid(&spec, &cfg.control)?;
    create_dir(out)?;
    let checkpoint = out.join("checkpoint.csv");
    if !resume && checkpoint.exists() {
        std::fs::remove_file(&checkpoint)?;
    }
    let workers = parallel.unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    let last_pct = AtomicUsize::new(0);
    let progress = |done: usize, total: usize| {
        let pct = done * 100 / total.max(1);
        if last_pct.fetch_max(pct, Ordering::Relaxed) < pct {
            eprintln!("sweep: {pct}% ({done}/{total})");
        }
    };
    let opts = SweepOptions { workers, seed_mode, checkpoint: Some(checkpoint), progress: Some(&progress) };
    let records = run_sweep(&grid, &scenario, cfg.run.seed, &opts)?;
    write_table(&out.join("sweep.csv"), &records)?;

    let mut files = vec![json!({"file": "sweep.csv", "plot": "table"})];
    for (k, name) in AXIS_NAMES.iter().enumerate() {
        let surface = marginalize(&records, &spec, &[k])?;
        let file = format!("marginal_{name}.csv");
        let mut text = format!("{name},u_bar,q_dev_bar,v_dev_bar,count,aborted\n");
        for (i, v) in surface.axis_values[0].iter().enumerate() {
            let cell = [i];
            let cols = match surface.mean(&cell) {
                Some(m) => format!("{},{},{}", fmt_f64(m.u_bar), fmt_f64(m.q_dev_bar), fmt_f64(m.v_dev_bar)),
                None => ",,".into(),
            };
            text.push_str(&format!("{},{cols},{},{}\n", fmt_f64(*v), surface.count(&cell), surface.aborted(&cell)));
        }
        std::fs::write(out.join(&file), text)?;
        files.push(json!({"file": file, "plot": "marginal", "x": name, "y": ["u_bar", "q_dev_bar", "v_dev_bar"]}));
    }
    write_json(&out.join("manifest.json"), &json!({ "files": files }))?;
    let aborted = records.iter().filter(|r| r.status == SweepStatus::Aborted).count();
    eprintln!("sweep: {} points, {aborted} aborted", records.len());
    Ok(exit::OK)
}

fn optimize(table: &Path, q_max: f64, v_max: f64) -> anyhow::Result<i32> {
    if q_max.is_nan() || v_max.is_nan() {
        bail!(Error::InvalidParameter("qmax and vmax must be numbers".into()));
    }
    let records = read_table(table).with_context(|| format!("reading {}", table.display()))?;
    if records.is_empty() {
        bail!(Error::InvalidParameter(format!("{} has no rows", table.display())));
    }
    match constrained_argmin(&records, q_max, v_max) {
        Some(best) => {
            let f = best.functionals.expect("feasible rows are complete");
            let theta: serde_json::Map<String, serde_json::Value> =
                AXIS_NAMES.iter().zip(best.theta).map(|(k, v)| (k.to_string(), json!(v))).collect();
            let body = json!({
                "feasible": true,
                "idx": best.idx,
                "theta": theta,
                "u_bar": f.u_bar,
                "q_dev_bar": f.q_dev_bar,
                "v_dev_bar": f.v_dev_bar,
            });
            println!("{body}");
            Ok(exit::OK)
        }
        None => {
            let ok = records.iter().filter(|r| r.status == SweepStatus::Ok).count();
            let body = json!({
                "feasible": false,
                "q_max": q_max,
                "v_max": v_max,
                "rows": records.len(),
                "completed_rows": ok,
                "message": "no completed row satisfies both deviation caps",
            });
            println!("{body}");
            Ok(exit::INFEASIBLE)
        }
    }
}

/// First sample from which every agent stays within `r0` of the leader.
fn settled_time(record: &TrajectoryRecord, r0: f64) -> Option<f64> {
    let k = record.max_pos_dev.iter().rposition(|&x| x > r0).map_or(0, |k| k + 1);
    record.t.get(k).copied()
}

fn verify_bounds(args: &RunArgs, run_dir: Option<&Path>, transient: f64, eta: f64) -> anyhow::Result<i32> {
    if !(0.0..1.0).contains(&transient) {
        bail!(Error::InvalidParameter("transient must lie in [0, 1)".into()));
    }
    if !(eta >= 0.0) {
        bail!(Error::InvalidParameter("eta must be non-negative".into()));
    }
    let mut args = args.clone();
    if let Some(dir) = run_dir {
        args.config = Some(dir.join("config.toml"));
    }
    let cfg = resolve_config(&args)?;
    let rc = cfg.to_run_config()?;
    let env = envelope(&cfg.control)?;
    let report = bound_report(&env, &cfg.model, &cfg.control, &rc.trajectory)?;
    let record = run(&rc)?;
    let check = check_bounds(&record, &report, transient, eta);

    let (decay, decay_pass) = match settled_time(&record, cfg.control.r0) {
        Some(t1) if report.k_hat > 0.0 => match decay_check(&record, report.k_hat, cfg.model.mass, t1, cfg.control.r0) {
            Ok(d) => (json!({"applicable": true, "t1": t1, "result": d}), d.pass),
            Err(Error::NotApplicable(why)) => (json!({"applicable": false, "reason": why}), true),
            Err(e) => return Err(e.into()),
        },
        Some(_) => (json!({"applicable": false, "reason": format!("K_hat = {} is not positive", report.k_hat)}), true),
        None => (json!({"applicable": false, "reason": "the swarm never settles inside the r0 ball"}), true),
    };
    let pass = check.pass && decay_pass;
    let body = json!({
        "report": report,
        "absorbing": check,
        "decay": decay,
        "pass": pass,
    });
    println!("{}", serde_json::to_string_pretty(&body)?);
    Ok(if pass { exit::OK } else { exit::CHECK_FAILED })
}

pub fn parse_vec(text: &str) -> anyhow::Result<VecD> {
    let xs: Vec<f64> = text
        .split(',')
        .map(|s| s.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|e| anyhow!(Error::InvalidParameter(format!("bad vector {text:?}: {e}"))))?;
    match xs.as_slice() {
        [x, y] => Ok(VecD::new(*x, *y, 0.0)),
        [x, y, z] => Ok(VecD::new(*x, *y, *z)),
        _ => bail!(Error::InvalidParameter(format!("vector needs 2 or 3 components, got {text:?}"))),
    }
}

pub fn parse_points(text: &str) -> anyhow::Result<Vec<VecD>> {
    text.split(';').filter(|s| !s.trim().is_empty()).map(parse_vec).collect()
}

#[allow(clippy::too_many_arguments)]
fn wobbler_construct(
    x0: &[VecD],
    w0: &VecD,
    f0: &VecD,
    alpha: f64,
    t0: f64,
    t_end: f64,
    samples: usize,
    out: &PathBuf,
    admissible: Option<(f64, f64)>,
) -> anyhow::Result<i32> {
    if samples < 2 || !(t_end > t0) {
        bail!(Error::InvalidParameter("need at least two samples and t_end > t0".into()));
    }
    if x0.is_empty() {
        bail!(Error::InvalidParameter("no positions given".into()));
    }
    let mut text = String::from("t,agent,x,y,z,wx,wy,wz\n");
    for k in 0..samples {
        let t = t0 + (t_end - t0) * k as f64 / (samples - 1) as f64;
        let (pos, vel) = wobbler_closed_form(x0, w0, f0, alpha, t0, t)?;
        for (i, p) in pos.iter().enumerate() {
            let cols = [t, p.x, p.y, p.z, vel.x, vel.y, vel.z].map(fmt_f64);
            text.push_str(&format!("{},{i},{}\n", cols[0], cols[1..].join(",")));
        }
    }
    if let Some(parent) = out.parent().filter(|p| !p.as_os_str().is_empty()) {
        create_dir(parent)?;
    }
    std::fs::write(out, text).with_context(|| format!("writing {}", out.display()))?;
    let mut body = json!({"file": out.display().to_string(), "period": std::f64::consts::TAU / alpha.sqrt()});
    if let Some((v0, radius)) = admissible {
        body["admissible"] = json!(wobbler_admissible(x0, w0, alpha.sqrt(), v0, radius));
    }
    println!("{body}");
    Ok(exit::OK)
}

fn wobbler_check(
    gf: &GeneratingFunctionSpec,
    s_lo: f64,
    s_hi: f64,
    grid_n: usize,
    x0: &[VecD],
    w0: &VecD,
    admissible: Option<(f64, f64)>,
) -> anyhow::Result<i32> {
    let cert = monotonicity_check(gf, s_lo, s_hi, grid_n)?;
    let mut body = json!({"monotonicity": cert});
    if let Some((v0, radius)) = admissible {
        if !(gf.gain > 0.0) {
            bail!(Error::InvalidParameter("admissibility needs a positive gain".into()));
        }
        body["admissible"] = json!(wobbler_admissible(x0, w0, gf.gain.sqrt(), v0, radius));
    }
    println!("{}", serde_json::to_string_pretty(&body)?);
    Ok(if cert.pass { exit::OK } else { exit::CHECK_FAILED })
}
