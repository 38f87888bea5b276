use std::path::Path;

use anyhow::{bail, Context};
use flock_core::leader::{build_mission, LeaderTrajectory, MissionSpec};
use flock_core::metrics::{DEFAULT_EPS, DEFAULT_WINDOW};
use flock_core::sweep::regime_preset;
use flock_core::{ControlParams, InitSpec, ModelParams, RunConfig, VecD};
use serde::{Deserialize, Serialize};

/// Leader motion as written in a config file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TrajectoryConfig {
    Line {
        #[serde(default)]
        origin: VecD,
        #[serde(default = "unit_x")]
        velocity: VecD,
    },
    Circle {
        center: VecD,
        radius: f64,
        #[serde(default = "one")]
        speed: f64,
        #[serde(default = "unit_x")]
        e1: VecD,
        #[serde(default = "unit_y")]
        e2: VecD,
    },
    Mission(MissionSpec),
}

fn unit_x() -> VecD {
    VecD::x()
}

fn unit_y() -> VecD {
    VecD::y()
}

fn one() -> f64 {
    1.0
}

impl Default for TrajectoryConfig {
    fn default() -> Self {
        TrajectoryConfig::Line { origin: VecD::zeros(), velocity: VecD::x() }
    }
}

impl TrajectoryConfig {
    pub fn build(&self) -> flock_core::Result<LeaderTrajectory> {
        let t = match self {
            TrajectoryConfig::Line { origin, velocity } => LeaderTrajectory::line(*origin, *velocity),
            TrajectoryConfig::Circle { center, radius, speed, e1, e2 } => {
                LeaderTrajectory::Circle { center: *center, radius: *radius, speed: *speed, e1: *e1, e2: *e2 }
            }
            TrajectoryConfig::Mission(spec) => build_mission(spec)?,
        };
        t.validate()?;
        Ok(t)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunSection {
    pub dt: f64,
    pub n_steps: u64,
    pub seed: u64,
    pub record_every: u64,
    /// Position bound for the flocking verdict.
    pub verdict_r: f64,
    /// Velocity bound for the flocking verdict.
    pub verdict_v: f64,
    pub verdict_eps: f64,
    /// Trailing fraction of the run the verdict looks at.
    pub verdict_window: f64,
}

impl Default for RunSection {
    fn default() -> Self {
        Self {
            dt: 1e-2,
            n_steps: 100_000,
            seed: 0,
            record_every: 1,
            verdict_r: 50.0,
            verdict_v: 5.0,
            verdict_eps: DEFAULT_EPS,
            verdict_window: DEFAULT_WINDOW,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ConfigFile {
    pub model: ModelParams,
    pub control: ControlParams,
    pub trajectory: TrajectoryConfig,
    pub init: InitSpec,
    pub run: RunSection,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    /// Straight line at unit speed.
    Line,
    /// Circle of radius 10 r0 through the origin.
    Circle,
    /// Out-and-back mission with rotations about the target.
    Mission,
}

/// Radius of the mission's rotation stage: ten times the typical regime's r0.
pub const MISSION_RADIUS: f64 = 46.4;

impl ConfigFile {
    pub fn parse(text: &str) -> anyhow::Result<Self> {
        let cfg: ConfigFile = toml::from_str(text).context("invalid configuration")?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::parse(&text).with_context(|| format!("in {}", path.display()))
    }

    pub fn to_toml(&self) -> anyhow::Result<String> {
        toml::to_string(self).context("serializing configuration")
    }

    pub fn validate(&self) -> anyhow::Result<()> {
        self.to_run_config()?.validate()?;
        if !(self.run.verdict_window > 0.0 && self.run.verdict_window <= 1.0) {
            bail!(flock_core::Error::InvalidParameter("verdict_window must lie in (0, 1]".into()));
        }
        Ok(())
    }

    pub fn to_run_config(&self) -> flock_core::Result<RunConfig> {
        Ok(RunConfig {
            model: self.model.clone(),
            control: self.control.clone(),
            trajectory: self.trajectory.build()?,
            dt: self.run.dt,
            n_steps: self.run.n_steps,
            seed: self.run.seed,
            stream: 0,
            record_every: self.run.record_every,
            init: self.init.clone(),
            store_states: false,
        })
    }

    /// Overlay a published motion regime onto the model and control sections.
    pub fn apply_regime(&mut self, id: u8) -> flock_core::Result<()> {
        let preset = regime_preset(id)?;
        self.model = preset.model(&self.model);
        self.control = preset.control(&self.control);
        Ok(())
    }

    /// Replace the leader motion and initial spread with a scenario preset.
    /// The circle radius follows the current `r0`.
    pub fn apply_scenario(&mut self, scenario: Scenario) -> flock_core::Result<()> {
        match scenario {
            Scenario::Line => {
                self.trajectory = TrajectoryConfig::Line { origin: VecD::zeros(), velocity: VecD::x() };
                self.init = InitSpec { vel_std: 1.0, vel_support: 1.0, ..self.init.clone() };
            }
            Scenario::Circle => {
                let radius = 10.0 * self.control.r0;
                if !(radius > 0.0) {
                    return Err(flock_core::Error::InvalidParameter(
                        "circle scenario needs r0 > 0 (radius is 10 r0)".into(),
                    ));
                }
                self.trajectory = TrajectoryConfig::Circle {
                    center: VecD::new(-radius, 0.0, 0.0),
                    radius,
                    speed: 1.0,
                    e1: VecD::x(),
                    e2: VecD::y(),
                };
                self.init = InitSpec { vel_std: 1.0, vel_support: 1.0, ..self.init.clone() };
            }
            Scenario::Mission => {
                self.trajectory = TrajectoryConfig::Mission(MissionSpec { rot_radius: MISSION_RADIUS, ..Default::default() });
                self.init = InitSpec { vel_std: 0.5, vel_support: 0.5, ..self.init.clone() };
            }
        }
        Ok(())
    }
}
