use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Position or velocity in `d ∈ {2, 3}` dimensions. Planar runs keep the third
/// component at zero.
pub type VecD = nalgebra::Vector3<f64>;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightKind {
    /// `(1 - s/r)^2` inside the cutoff, zero outside. C¹ at the cutoff.
    #[default]
    Quadratic,
}

impl WeightKind {
    pub fn eval(self, s: f64, cutoff: f64) -> f64 {
        match self {
            WeightKind::Quadratic => {
                if s < cutoff {
                    let x = 1.0 - s / cutoff;
                    x * x
                } else {
                    0.0
                }
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelParams {
    pub n_agents: usize,
    pub dim: usize,
    pub mass: f64,
    pub a_coef: f64,
    pub b_coef: f64,
    pub r_c: f64,
    pub r_d: f64,
    pub weight_kind: WeightKind,
}

impl Default for ModelParams {
    fn default() -> Self {
        Self {
            n_agents: 100,
            dim: 3,
            mass: 1.0,
            a_coef: 10.0,
            b_coef: 1.0,
            r_c: 1.0,
            r_d: 5.0,
            weight_kind: WeightKind::Quadratic,
        }
    }
}

impl ModelParams {
    pub fn validate(&self) -> Result<()> {
        if self.n_agents == 0 {
            return Err(invalid("n_agents must be at least 1"));
        }
        if self.dim != 2 && self.dim != 3 {
            return Err(invalid(format!("dim must be 2 or 3, got {}", self.dim)));
        }
        if !(self.mass > 0.0 && self.mass.is_finite()) {
            return Err(invalid("mass must be positive"));
        }
        if !(self.a_coef >= 0.0 && self.b_coef >= 0.0) {
            return Err(invalid("a_coef and b_coef must be non-negative"));
        }
        if !(self.r_c > 0.0 && self.r_c <= self.r_d && self.r_d.is_finite()) {
            return Err(invalid("cutoffs must satisfy 0 < r_c <= r_d"));
        }
        Ok(())
    }

    pub fn weight_c(&self, s: f64) -> f64 {
        self.weight_kind.eval(s, self.r_c)
    }

    pub fn weight_d(&self, s: f64) -> f64 {
        self.weight_kind.eval(s, self.r_d)
    }

    /// Largest interaction range of the two ambient pair forces.
    pub fn pair_cutoff(&self) -> f64 {
        self.r_c.max(self.r_d)
    }
}

/// Shape of a generating function: `k(s)/s` for `s` above the threshold.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum GeneratingKind {
    /// `k(s) = s`, so the profile is the constant gain.
    #[default]
    Linear,
    /// `k(s) = s^(γ+1)`, profile `s^γ`.
    Power { gamma: f64 },
    /// `k(s) = s e^s`, profile `e^s`.
    Exponential,
    /// `k(s) = s ln(s + 1)`, profile `ln(s + 1)`.
    Logarithmic,
}

impl GeneratingKind {
    pub fn validate(&self) -> Result<()> {
        match *self {
            GeneratingKind::Power { gamma } if !(gamma > 0.0 && gamma.is_finite()) => {
                Err(invalid(format!("power exponent must be positive, got {gamma}")))
            }
            _ => Ok(()),
        }
    }

    fn profile(self, s: f64) -> f64 {
        match self {
            GeneratingKind::Linear => 1.0,
            GeneratingKind::Power { gamma } => s.powf(gamma),
            GeneratingKind::Exponential => s.exp(),
            GeneratingKind::Logarithmic => s.ln_1p(),
        }
    }

    fn profile_d1(self, s: f64) -> f64 {
        match self {
            GeneratingKind::Linear => 0.0,
            GeneratingKind::Power { gamma } => gamma * s.powf(gamma - 1.0),
            GeneratingKind::Exponential => s.exp(),
            GeneratingKind::Logarithmic => 1.0 / (1.0 + s),
        }
    }

    fn profile_d2(self, s: f64) -> f64 {
        match self {
            GeneratingKind::Linear => 0.0,
            GeneratingKind::Power { gamma } => gamma * (gamma - 1.0) * s.powf(gamma - 2.0),
            GeneratingKind::Exponential => s.exp(),
            GeneratingKind::Logarithmic => -1.0 / ((1.0 + s) * (1.0 + s)),
        }
    }

    /// Antiderivative of `profile(s) * s`.
    fn moment_antiderivative(self, s: f64) -> f64 {
        match self {
            GeneratingKind::Linear => 0.5 * s * s,
            GeneratingKind::Power { gamma } => s.powf(gamma + 2.0) / (gamma + 2.0),
            GeneratingKind::Exponential => (s - 1.0) * s.exp(),
            GeneratingKind::Logarithmic => {
                0.5 * (s * s - 1.0) * s.ln_1p() - 0.25 * s * s + 0.5 * s
            }
        }
    }
}

/// A generating function `h` (or `g`): zero on `[0, threshold]`, `gain * k(s)/s` beyond.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GeneratingFunctionSpec {
    pub kind: GeneratingKind,
    pub gain: f64,
    pub threshold: f64,
}

impl GeneratingFunctionSpec {
    pub fn new(kind: GeneratingKind, gain: f64, threshold: f64) -> Self {
        Self { kind, gain, threshold }
    }

    pub fn eval(&self, s: f64) -> f64 {
        if s <= self.threshold {
            0.0
        } else {
            self.gain * self.kind.profile(s)
        }
    }

    /// `h'(s)`, valid strictly above the threshold.
    pub fn derivative(&self, s: f64) -> f64 {
        self.gain * self.kind.profile_d1(s)
    }

    /// `h''(s)`, valid strictly above the threshold.
    pub fn second_derivative(&self, s: f64) -> f64 {
        self.gain * self.kind.profile_d2(s)
    }

    /// Force magnitude `h(s) s` at deviation `s`.
    pub fn magnitude(&self, s: f64) -> f64 {
        self.eval(s) * s
    }

    /// `∫_threshold^max(s, threshold) h(σ) σ dσ`.
    pub fn potential(&self, s: f64) -> f64 {
        if s <= self.threshold {
            0.0
        } else {
            self.gain
                * (self.kind.moment_antiderivative(s)
                    - self.kind.moment_antiderivative(self.threshold))
        }
    }

    /// `-h(|y|) y`.
    pub fn force(&self, y: &VecD) -> VecD {
        let s = y.norm();
        let h = self.eval(s);
        if h == 0.0 {
            VecD::zeros()
        } else {
            -h * y
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ControlParams {
    pub alpha: f64,
    pub r0: f64,
    pub beta: f64,
    pub v0: f64,
    pub k_kind: GeneratingKind,
    pub p_kind: GeneratingKind,
}

impl Default for ControlParams {
    /// The "typical" motion regime.
    fn default() -> Self {
        Self {
            alpha: 1.0,
            r0: 4.64,
            beta: 1.0,
            v0: 0.5,
            k_kind: GeneratingKind::Linear,
            p_kind: GeneratingKind::Linear,
        }
    }
}

impl ControlParams {
    pub fn linear(alpha: f64, r0: f64, beta: f64, v0: f64) -> Self {
        Self { alpha, r0, beta, v0, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("alpha", self.alpha), ("r0", self.r0), ("beta", self.beta), ("v0", self.v0)] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(invalid(format!("{name} must be finite and non-negative, got {v}")));
            }
        }
        self.k_kind.validate()?;
        self.p_kind.validate()
    }

    pub fn position_gf(&self) -> GeneratingFunctionSpec {
        GeneratingFunctionSpec::new(self.k_kind, self.alpha, self.r0)
    }

    pub fn velocity_gf(&self) -> GeneratingFunctionSpec {
        GeneratingFunctionSpec::new(self.p_kind, self.beta, self.v0)
    }

    /// `(α′, r₀′, β′, v₀′)`
    pub fn theta(&self) -> [f64; 4] {
        [self.alpha, self.r0, self.beta, self.v0]
    }

    pub fn with_theta(&self, theta: [f64; 4]) -> Self {
        Self {
            alpha: theta[0],
            r0: theta[1],
            beta: theta[2],
            v0: theta[3],
            ..self.clone()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_weight_values() {
        let mp = ModelParams::default();
        assert_eq!(mp.weight_c(0.0), 1.0);
        assert_eq!(mp.weight_c(1.0), 0.0);
        assert_eq!(mp.weight_c(0.5), 0.25);
        assert_eq!(mp.weight_c(3.0), 0.0);
        assert_eq!(mp.weight_d(2.5), 0.25);
    }

    #[test]
    fn weight_is_c1_at_cutoff() {
        let mp = ModelParams::default();
        let h = 1e-7;
        let slope = (mp.weight_c(1.0) - mp.weight_c(1.0 - h)) / h;
        assert!(slope.abs() < 1e-6);
    }

    #[test]
    fn generating_function_dead_zone() {
        let gf = GeneratingFunctionSpec::new(GeneratingKind::Linear, 1.0, 4.64);
        assert_eq!(gf.eval(3.0), 0.0);
        assert_eq!(gf.eval(4.64), 0.0);
        assert_eq!(gf.eval(5.0), 1.0);
        assert_eq!(gf.potential(4.0), 0.0);
    }

    #[test]
    fn linear_potential_closed_form() {
        let gf = GeneratingFunctionSpec::new(GeneratingKind::Linear, 1.0, 4.64);
        assert!((gf.potential(6.0) - 7.2352).abs() < 1e-12);
    }

    #[test]
    fn potential_derivative_matches_magnitude() {
        let kinds = [
            GeneratingKind::Linear,
            GeneratingKind::Power { gamma: 0.5 },
            GeneratingKind::Power { gamma: 2.0 },
            GeneratingKind::Exponential,
            GeneratingKind::Logarithmic,
        ];
        for kind in kinds {
            let gf = GeneratingFunctionSpec::new(kind, 0.7, 1.3);
            for s in [1.5, 2.0, 3.7, 6.1] {
                let eps = 1e-6;
                let fd = (gf.potential(s + eps) - gf.potential(s - eps)) / (2.0 * eps);
                let m = gf.magnitude(s);
                assert!((fd - m).abs() <= 1e-6 * m.abs().max(1.0), "{kind:?} at {s}: {fd} vs {m}");
            }
        }
    }

    #[test]
    fn rejects_bad_params() {
        assert!(ModelParams { dim: 4, ..Default::default() }.validate().is_err());
        assert!(ModelParams { r_d: 0.5, ..Default::default() }.validate().is_err());
        let cp = ControlParams { k_kind: GeneratingKind::Power { gamma: 0.0 }, ..Default::default() };
        assert!(cp.validate().is_err());
        let cp = ControlParams { beta: -1.0, ..Default::default() };
        assert!(cp.validate().is_err());
    }
}
