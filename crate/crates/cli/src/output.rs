use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use flock_core::TrajectoryRecord;

pub const SERIES_HEADER: &str = "t,q_dev,v_dev,u_bar,energy,max_vel_spread";

/// Seventeen significant digits: enough to round-trip any `f64`.
pub fn fmt_f64(x: f64) -> String {
    // fold -0.0 into 0.0 so sign noise never reaches the files
    format!("{:.16e}", x + 0.0)
}

pub fn write_series(path: &Path, rec: &TrajectoryRecord) -> std::io::Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "{SERIES_HEADER}")?;
    for k in 0..rec.len() {
        let row = [rec.t[k], rec.q_dev[k], rec.v_dev[k], rec.u_cum[k], rec.energy[k], rec.max_vel_spread[k]];
        let cols: Vec<String> = row.iter().map(|&x| fmt_f64(x)).collect();
        writeln!(w, "{}", cols.join(","))?;
    }
    w.flush()
}

pub fn write_states(path: &Path, rec: &TrajectoryRecord) -> std::io::Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "t,agent,qx,qy,qz,vx,vy,vz")?;
    for s in rec.states.iter().flatten() {
        for (i, (q, v)) in s.positions.iter().zip(&s.velocities).enumerate() {
            writeln!(
                w,
                "{},{i},{},{},{},{},{},{}",
                fmt_f64(s.time),
                fmt_f64(q.x),
                fmt_f64(q.y),
                fmt_f64(q.z),
                fmt_f64(v.x),
                fmt_f64(v.y),
                fmt_f64(v.z)
            )?;
        }
    }
    w.flush()
}

pub fn write_json(path: &Path, value: &serde_json::Value) -> std::io::Result<()> {
    let mut text = serde_json::to_string_pretty(value).expect("JSON values always serialize");
    text.push('\n');
    std::fs::write(path, text)
}
