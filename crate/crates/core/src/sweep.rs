use std::collections::BTreeMap;
use std::fs::{File, OpenOptions};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::engine::{run, RunConfig};
use crate::error::{invalid, Error, Result};
use crate::metrics::task_functionals;
use crate::model::{ControlParams, ModelParams};

pub const AXIS_NAMES: [&str; 4] = ["alpha", "r0", "beta", "v0"];
pub const CSV_HEADER: &str = "idx,alpha,r0,beta,v0,u_bar,q_dev_bar,v_dev_bar,status";

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub lo: f64,
    pub hi: f64,
    pub n: usize,
}

impl Axis {
    pub fn new(lo: f64, hi: f64, n: usize) -> Self {
        Self { lo, hi, n }
    }

    pub fn value(&self, k: usize) -> f64 {
        if self.n == 1 {
            self.lo
        } else {
            self.lo + (self.hi - self.lo) * k as f64 / (self.n - 1) as f64
        }
    }

    pub fn values(&self) -> Vec<f64> {
        (0..self.n).map(|k| self.value(k)).collect()
    }
}

/// Axes in the order `(α′, r₀′, β′, v₀′)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub axes: [Axis; 4],
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            axes: [Axis::new(0.0, 5.0, 26), Axis::new(0.0, 20.0, 26), Axis::new(0.0, 5.0, 26), Axis::new(0.0, 2.0, 26)],
        }
    }
}

impl GridSpec {
    pub fn validate(&self) -> Result<()> {
        for (a, name) in self.axes.iter().zip(AXIS_NAMES) {
            if a.n == 0 || !(a.lo <= a.hi) || !a.lo.is_finite() || !a.hi.is_finite() {
                return Err(invalid(format!("bad {name} axis {}:{}:{}", a.lo, a.hi, a.n)));
            }
            if a.lo < 0.0 {
                return Err(invalid(format!("{name} axis must be non-negative")));
            }
        }
        Ok(())
    }

    pub fn shape(&self) -> [usize; 4] {
        self.axes.map(|a| a.n)
    }

    pub fn len(&self) -> usize {
        self.shape().iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Per-axis indices of flat grid index `idx`; the last axis varies fastest.
    pub fn unravel(&self, mut idx: usize) -> [usize; 4] {
        let mut out = [0; 4];
        for a in (0..4).rev() {
            out[a] = idx % self.axes[a].n;
            idx /= self.axes[a].n;
        }
        out
    }

    pub fn theta(&self, idx: usize) -> [f64; 4] {
        let k = self.unravel(idx);
        [0, 1, 2, 3].map(|a| self.axes[a].value(k[a]))
    }
}

/// Every grid point, in lexicographic order, with generating-function kinds
/// taken from `template`.
pub fn make_grid(spec: &GridSpec, template: &ControlParams) -> Result<Vec<ControlParams>> {
    spec.validate()?;
    Ok((0..spec.len()).map(|i| template.with_theta(spec.theta(i))).collect())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Objectives {
    pub u_bar: f64,
    pub q_dev_bar: f64,
    pub v_dev_bar: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepStatus {
    Ok,
    Aborted,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub idx: usize,
    pub theta: [f64; 4],
    /// Present iff `status` is `Ok`.
    pub functionals: Option<Objectives>,
    /// Seed and stream of the run; unknown for rows read back from a table.
    pub seed: Option<(u64, u64)>,
    pub status: SweepStatus,
}

impl SweepRecord {
    pub fn to_csv_row(&self) -> String {
        let [a, r, b, v] = self.theta;
        match (&self.functionals, self.status) {
            (Some(f), SweepStatus::Ok) => format!(
                "{},{a:.16e},{r:.16e},{b:.16e},{v:.16e},{:.16e},{:.16e},{:.16e},ok",
                self.idx, f.u_bar, f.q_dev_bar, f.v_dev_bar
            ),
            _ => format!("{},{a:.16e},{r:.16e},{b:.16e},{v:.16e},,,,aborted", self.idx),
        }
    }

    pub fn from_csv_row(line: &str) -> std::result::Result<Self, String> {
        let cols: Vec<&str> = line.trim_end().split(',').collect();
        if cols.len() != 9 {
            return Err(format!("expected 9 columns, found {}", cols.len()));
        }
        let num = |k: usize| cols[k].parse::<f64>().map_err(|e| format!("column {k}: {e}"));
        let idx = cols[0].parse::<usize>().map_err(|e| format!("idx: {e}"))?;
        let theta = [num(1)?, num(2)?, num(3)?, num(4)?];
        let (functionals, status) = match cols[8] {
            "ok" => (Some(Objectives { u_bar: num(5)?, q_dev_bar: num(6)?, v_dev_bar: num(7)? }), SweepStatus::Ok),
            "aborted" => (None, SweepStatus::Aborted),
            other => return Err(format!("unknown status {other:?}")),
        };
        Ok(Self { idx, theta, functionals, seed: None, status })
    }
}

pub fn write_table(path: &Path, records: &[SweepRecord]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "{CSV_HEADER}")?;
    for r in records {
        writeln!(w, "{}", r.to_csv_row())?;
    }
    w.flush()?;
    Ok(())
}

/// Rows of a sweep table or checkpoint. A torn final line (from an interrupted
/// write) is ignored.
pub fn read_table(path: &Path) -> Result<Vec<SweepRecord>> {
    let text = std::fs::read_to_string(path)?;
    let complete = text.ends_with('\n');
    let lines: Vec<&str> = text.lines().collect();
    let mut out = Vec::new();
    for (k, line) in lines.iter().enumerate() {
        if k == 0 {
            if line.trim() != CSV_HEADER {
                return Err(Error::Checkpoint { line: 1, msg: "unexpected header".into() });
            }
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        match SweepRecord::from_csv_row(line) {
            Ok(r) => out.push(r),
            Err(_) if k + 1 == lines.len() && !complete => break,
            Err(msg) => return Err(Error::Checkpoint { line: k + 1, msg }),
        }
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SeedMode {
    /// Every grid point starts from the same initial swarm.
    #[default]
    Shared,
    /// Each grid point draws its own initial swarm (stream = grid index).
    PerPoint,
}

pub struct SweepOptions<'a> {
    pub workers: usize,
    pub seed_mode: SeedMode,
    /// Append-only progress file; existing rows are reused.
    pub checkpoint: Option<PathBuf>,
    /// Called with `(done, total)` after each evaluated point.
    pub progress: Option<&'a (dyn Fn(usize, usize) + Sync)>,
}

impl Default for SweepOptions<'_> {
    fn default() -> Self {
        Self { workers: 1, seed_mode: SeedMode::Shared, checkpoint: None, progress: None }
    }
}

fn evaluate(idx: usize, theta: &ControlParams, scenario: &RunConfig, seed: u64, mode: SeedMode) -> SweepRecord {
    let mut cfg = scenario.clone();
    cfg.control = theta.clone();
    cfg.seed = seed;
    cfg.stream = match mode {
        SeedMode::Shared => scenario.stream,
        SeedMode::PerPoint => idx as u64,
    };
    cfg.store_states = false;
    let functionals = run(&cfg).and_then(|rec| task_functionals(&rec)).ok().map(|f| Objectives {
        u_bar: f.u_bar,
        q_dev_bar: f.q_dev_bar,
        v_dev_bar: f.v_dev_bar,
    });
    SweepRecord {
        idx,
        theta: theta.theta(),
        status: if functionals.is_some() { SweepStatus::Ok } else { SweepStatus::Aborted },
        functionals,
        seed: Some((seed, cfg.stream)),
    }
}

/// Evaluate every grid point. Results are ordered by grid index and do not
/// depend on the worker count.
pub fn run_sweep(grid: &[ControlParams], scenario: &RunConfig, base_seed: u64, opts: &SweepOptions) -> Result<Vec<SweepRecord>> {
    scenario.validate()?;
    let mut done: BTreeMap<usize, SweepRecord> = BTreeMap::new();
    if let Some(path) = opts.checkpoint.as_deref() {
        if path.exists() && std::fs::metadata(path)?.len() > 0 {
            for r in read_table(path)? {
                let expected = grid.get(r.idx).map(ControlParams::theta);
                if expected != Some(r.theta) {
                    return Err(Error::Checkpoint {
                        line: 0,
                        msg: format!("row {} does not match the current grid", r.idx),
                    });
                }
                done.insert(r.idx, r);
            }
        }
    }
    let writer = match opts.checkpoint.as_deref() {
        Some(path) => {
            let fresh = !path.exists() || std::fs::metadata(path)?.len() == 0;
            let mut f = OpenOptions::new().create(true).append(true).open(path)?;
            if fresh {
                writeln!(f, "{CSV_HEADER}")?;
            } else if !std::fs::read_to_string(path)?.ends_with('\n') {
                writeln!(f)?;
            }
            Some(Mutex::new(f))
        }
        None => None,
    };

    let todo: Vec<usize> = (0..grid.len()).filter(|i| !done.contains_key(i)).collect();
    let total = grid.len();
    let counter = AtomicUsize::new(done.len());
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.workers.max(1))
        .build()
        .map_err(|e| invalid(format!("worker pool: {e}")))?;
    let fresh: Vec<Result<SweepRecord>> = pool.install(|| {
        todo.par_iter()
            .map(|&idx| {
                let rec = evaluate(idx, &grid[idx], scenario, base_seed, opts.seed_mode);
                if let Some(w) = &writer {
                    let mut f = w.lock().expect("checkpoint lock poisoned");
                    writeln!(f, "{}", rec.to_csv_row())?;
                    f.flush()?;
                }
                let n = counter.fetch_add(1, Ordering::Relaxed) + 1;
                if let Some(cb) = opts.progress {
                    cb(n, total);
                }
                Ok(rec)
            })
            .collect()
    });
    for r in fresh {
        let r = r?;
        done.insert(r.idx, r);
    }
    Ok(done.into_values().collect())
}

/// Per-cell sums and counts of the functionals over the suppressed axes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Surface {
    pub keep_axes: Vec<usize>,
    pub axis_values: Vec<Vec<f64>>,
    sums: Vec<[f64; 3]>,
    counts: Vec<usize>,
    aborted: Vec<usize>,
}

impl Surface {
    pub fn shape(&self) -> Vec<usize> {
        self.axis_values.iter().map(Vec::len).collect()
    }

    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    fn flat(&self, cell: &[usize]) -> usize {
        cell.iter().zip(self.shape()).fold(0, |acc, (&k, n)| acc * n + k)
    }

    fn unflat(&self, mut i: usize) -> Vec<usize> {
        let shape = self.shape();
        let mut out = vec![0; shape.len()];
        for a in (0..shape.len()).rev() {
            out[a] = i % shape[a];
            i /= shape[a];
        }
        out
    }

    /// Mean `(Ū, Q̄, V̄)` over the completed points in a cell.
    pub fn mean(&self, cell: &[usize]) -> Option<Objectives> {
        let i = self.flat(cell);
        let c = self.counts[i];
        (c > 0).then(|| {
            let s = self.sums[i];
            Objectives { u_bar: s[0] / c as f64, q_dev_bar: s[1] / c as f64, v_dev_bar: s[2] / c as f64 }
        })
    }

    pub fn count(&self, cell: &[usize]) -> usize {
        self.counts[self.flat(cell)]
    }

    pub fn aborted(&self, cell: &[usize]) -> usize {
        self.aborted[self.flat(cell)]
    }

    pub fn total_aborted(&self) -> usize {
        self.aborted.iter().sum()
    }

    /// Average over further axes. `keep` lists original axis numbers and must
    /// be a subset of this surface's axes.
    pub fn marginalize(&self, keep: &[usize]) -> Result<Surface> {
        check_axes(keep)?;
        let pos: Vec<usize> = keep
            .iter()
            .map(|a| {
                self.keep_axes
                    .iter()
                    .position(|b| b == a)
                    .ok_or_else(|| invalid(format!("axis {a} already averaged out")))
            })
            .collect::<Result<_>>()?;
        let mut out = Surface {
            keep_axes: keep.to_vec(),
            axis_values: pos.iter().map(|&p| self.axis_values[p].clone()).collect(),
            sums: Vec::new(),
            counts: Vec::new(),
            aborted: Vec::new(),
        };
        let n: usize = out.shape().iter().product();
        out.sums = vec![[0.0; 3]; n];
        out.counts = vec![0; n];
        out.aborted = vec![0; n];
        for i in 0..self.len() {
            let cell = self.unflat(i);
            let sub: Vec<usize> = pos.iter().map(|&p| cell[p]).collect();
            let j = out.flat(&sub);
            for k in 0..3 {
                out.sums[j][k] += self.sums[i][k];
            }
            out.counts[j] += self.counts[i];
            out.aborted[j] += self.aborted[i];
        }
        Ok(out)
    }
}

fn check_axes(keep: &[usize]) -> Result<()> {
    if keep.windows(2).any(|w| w[0] >= w[1]) || keep.iter().any(|&a| a > 3) {
        return Err(invalid("kept axes must be increasing axis numbers in 0..4"));
    }
    Ok(())
}

/// Average the functionals over every axis not in `keep`. Aborted points are
/// left out of the averages and counted separately.
pub fn marginalize(records: &[SweepRecord], spec: &GridSpec, keep: &[usize]) -> Result<Surface> {
    spec.validate()?;
    check_axes(keep)?;
    if records.len() != spec.len() {
        return Err(Error::IncompleteGrid(format!("{} of {} points present", records.len(), spec.len())));
    }
    let mut seen = vec![false; spec.len()];
    let full = Surface {
        keep_axes: vec![0, 1, 2, 3],
        axis_values: spec.axes.iter().map(Axis::values).collect(),
        sums: vec![[0.0; 3]; spec.len()],
        counts: vec![0; spec.len()],
        aborted: vec![0; spec.len()],
    };
    let mut full = full;
    for r in records {
        if r.idx >= spec.len() || seen[r.idx] {
            return Err(Error::IncompleteGrid(format!("duplicate or out-of-range index {}", r.idx)));
        }
        seen[r.idx] = true;
        match (&r.functionals, r.status) {
            (Some(f), SweepStatus::Ok) => {
                full.sums[r.idx] = [f.u_bar, f.q_dev_bar, f.v_dev_bar];
                full.counts[r.idx] = 1;
            }
            _ => full.aborted[r.idx] = 1,
        }
    }
    full.marginalize(keep)
}

fn lex_cmp(a: &[f64; 4], b: &[f64; 4]) -> std::cmp::Ordering {
    a.iter().zip(b).map(|(x, y)| x.total_cmp(y)).find(|o| o.is_ne()).unwrap_or(std::cmp::Ordering::Equal)
}

/// Smallest `Ū` among completed points with `Q̄ <= q_max` and `V̄ <= v_max`;
/// ties go to the lexicographically smallest `θ`. `None` means infeasible.
pub fn constrained_argmin(records: &[SweepRecord], q_max: f64, v_max: f64) -> Option<&SweepRecord> {
    records
        .iter()
        .filter_map(|r| match (&r.functionals, r.status) {
            (Some(f), SweepStatus::Ok) if f.q_dev_bar <= q_max && f.v_dev_bar <= v_max => Some((r, f.u_bar)),
            _ => None,
        })
        .min_by(|(ra, ua), (rb, ub)| ua.total_cmp(ub).then_with(|| lex_cmp(&ra.theta, &rb.theta)))
        .map(|(r, _)| r)
}

/// A row of the published motion-regime table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegimePreset {
    pub id: u8,
    pub name: &'static str,
    pub b_coef: f64,
    pub alpha: f64,
    pub r0: f64,
    pub beta: f64,
    pub v0: f64,
    /// Density as published (not recomputed).
    pub published_density: f64,
    /// Body speed as published (not recomputed).
    pub published_body_speed: f64,
}

pub const REGIME_A_COEF: f64 = 10.0;
pub const REGIME_R_D: f64 = 5.0;

const REGIMES: [RegimePreset; 9] = [
    RegimePreset { id: 1, name: "typical", b_coef: 1.0, alpha: 1.0, r0: 4.64, beta: 1.0, v0: 0.5, published_density: 0.25, published_body_speed: 1.0 },
    RegimePreset { id: 2, name: "no velocity alignment", b_coef: 1.0, alpha: 1.0, r0: 4.64, beta: 0.0, v0: 0.0, published_density: 0.25, published_body_speed: 1.0 },
    RegimePreset { id: 3, name: "tight velocity alignment", b_coef: 1.0, alpha: 1.0, r0: 4.64, beta: 1.0, v0: 0.0, published_density: 0.25, published_body_speed: 1.0 },
    RegimePreset { id: 4, name: "no position alignment", b_coef: 1.0, alpha: 0.0, r0: 4.64, beta: 1.0, v0: 0.0, published_density: 0.25, published_body_speed: 1.0 },
    RegimePreset { id: 5, name: "low density", b_coef: 10.0, alpha: 1.0, r0: 7.93, beta: 1.0, v0: 0.5, published_density: 0.1, published_body_speed: 1.0 },
    RegimePreset { id: 6, name: "optimal density", b_coef: 10.0, alpha: 1.0, r0: 3.23, beta: 1.0, v0: 0.5, published_density: 0.74, published_body_speed: 1.0 },
    RegimePreset { id: 7, name: "high density", b_coef: 10.0, alpha: 1.0, r0: 2.32, beta: 1.0, v0: 0.5, published_density: 2.0, published_body_speed: 1.0 },
    RegimePreset { id: 8, name: "low speed", b_coef: 0.2, alpha: 1.0, r0: 4.64, beta: 0.2, v0: 0.5, published_density: 0.25, published_body_speed: 0.2 },
    RegimePreset { id: 9, name: "high speed", b_coef: 5.0, alpha: 1.0, r0: 4.64, beta: 5.0, v0: 0.5, published_density: 0.25, published_body_speed: 2.0 },
];

impl RegimePreset {
    /// Apply this regime's `A′`, `B′` and `r_D′` to `base`.
    pub fn model(&self, base: &ModelParams) -> ModelParams {
        ModelParams { a_coef: REGIME_A_COEF, b_coef: self.b_coef, r_d: REGIME_R_D, ..base.clone() }
    }

    /// This regime's gains and thresholds with the kinds of `base`.
    pub fn control(&self, base: &ControlParams) -> ControlParams {
        base.with_theta([self.alpha, self.r0, self.beta, self.v0])
    }
}

pub fn regime_preset(id: u8) -> Result<RegimePreset> {
    REGIMES
        .iter()
        .find(|r| r.id == id)
        .cloned()
        .ok_or_else(|| invalid(format!("unknown regime {id}; expected 1..=9")))
}
