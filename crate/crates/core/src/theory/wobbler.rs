use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::model::{GeneratingFunctionSpec, VecD};

/// Rigid periodic translation of a swarm under linear position feedback:
/// `x_i(t) = x_i⁰ + x*(t)` with `x*'' + α x* = f⁰`, `x*(t0) = 0`, `x*'(t0) = w0`.
/// Returns the positions and the shared velocity at `t`.
pub fn wobbler_closed_form(
    x0: &[VecD],
    w0: &VecD,
    f0: &VecD,
    alpha: f64,
    t0: f64,
    t: f64,
) -> Result<(Vec<VecD>, VecD)> {
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(invalid(format!("wobbler needs alpha > 0, got {alpha}")));
    }
    let mu = alpha.sqrt();
    let (s0, c0) = (mu * t0).sin_cos();
    let a = -c0 / alpha * f0 - s0 / mu * w0;
    let b = c0 / mu * w0 - s0 / alpha * f0;
    let (s, c) = (mu * t).sin_cos();
    let shift = c * a + s * b + f0 / alpha;
    let vel = mu * (c * b - s * a);
    Ok((x0.iter().map(|x| x + shift).collect(), vel))
}

/// Velocity stays under `v0` and every agent stays in the `R` ball at both
/// extreme phases of the oscillation.
pub fn wobbler_admissible(x0: &[VecD], w0: &VecD, mu: f64, v0: f64, radius: f64) -> bool {
    if w0.norm() > v0 {
        return false;
    }
    let amp = w0 / mu;
    x0.iter().all(|x| (x + amp).norm() <= radius && (x - amp).norm() <= radius)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MonotoneQuantity {
    /// `h(s)`
    H,
    /// `s h'(s)`
    SHPrime,
    /// `s h'(s)² / (2h'(s) + (s h'(s))')`
    Ratio,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MonotoneViolation {
    pub quantity: MonotoneQuantity,
    pub s_prev: f64,
    pub s: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MonotonicityCertificate {
    pub pass: bool,
    pub s_lo: f64,
    pub s_hi: f64,
    pub grid_n: usize,
    pub violation: Option<MonotoneViolation>,
}

type Sampler<'a> = dyn Fn(f64) -> Result<f64> + 'a;

fn first_non_increase(grid: &[f64], f: impl Fn(f64) -> Result<f64>) -> Result<Option<(f64, f64)>> {
    let mut prev = f(grid[0])?;
    for w in grid.windows(2) {
        let cur = f(w[1])?;
        if !(cur > prev) {
            return Ok(Some((w[0], w[1])));
        }
        prev = cur;
    }
    Ok(None)
}

/// Sample the three quantities whose strict growth rules out wobblers, on a
/// uniform grid over `[s_lo, s_hi]`.
pub fn monotonicity_check(
    gf: &GeneratingFunctionSpec,
    s_lo: f64,
    s_hi: f64,
    grid_n: usize,
) -> Result<MonotonicityCertificate> {
    if !(s_lo > gf.threshold) {
        return Err(invalid(format!("interval must start above the threshold {}", gf.threshold)));
    }
    if !(s_hi > s_lo && s_hi.is_finite()) {
        return Err(invalid("need s_lo < s_hi"));
    }
    if grid_n < 100 {
        return Err(invalid("grid needs at least 100 points"));
    }
    gf.kind.validate()?;
    let grid: Vec<f64> = (0..grid_n)
        .map(|k| s_lo + (s_hi - s_lo) * k as f64 / (grid_n - 1) as f64)
        .collect();
    let mut cert = MonotonicityCertificate { pass: true, s_lo, s_hi, grid_n, violation: None };

    let h = |s: f64| Ok(gf.eval(s));
    let s_hp = |s: f64| Ok(s * gf.derivative(s));
    let ratio = |s: f64| {
        let d1 = gf.derivative(s);
        let denom = 3.0 * d1 + s * gf.second_derivative(s);
        let r = s * d1 * d1 / denom;
        if denom == 0.0 || !r.is_finite() {
            Err(Error::UndefinedDerivative { s })
        } else {
            Ok(r)
        }
    };
    let checks: [(MonotoneQuantity, &Sampler); 3] =
        [(MonotoneQuantity::H, &h), (MonotoneQuantity::SHPrime, &s_hp), (MonotoneQuantity::Ratio, &ratio)];
    for (quantity, f) in checks {
        if let Some((s_prev, s)) = first_non_increase(&grid, f)? {
            cert.pass = false;
            cert.violation = Some(MonotoneViolation { quantity, s_prev, s });
            break;
        }
    }
    Ok(cert)
}
