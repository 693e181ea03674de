//! JSON scenario schema. Every field is optional except where noted; missing
//! fields take the defaults below and the resolved file is echoed back in
//! `summary.json`.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::gait_plan::{build_plan, GaitParams, PhaseDurations, DEFAULT_HALF_EXTENTS};
use crate::lip_model::{RobotParams, GRAVITY};
use crate::mpc::{MpcConfig, Weights};
use crate::simulator::{first_ssp_midpoint, ControlMode, PushEvent, Scenario, DEFAULT_INNER_DT};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GaitSection {
    pub steps: usize,
    pub step_length: f64,
    pub step_width: f64,
    pub initial_dsp: f64,
    pub dsp: f64,
    pub ssp: f64,
    pub final_dsp: f64,
    pub period: f64,
    /// Foot rectangle half-extents `[sagittal, lateral]`.
    pub foot_half_extents: [f64; 2],
}

impl Default for GaitSection {
    fn default() -> Self {
        Self {
            steps: 3,
            step_length: 0.3,
            step_width: 0.2,
            initial_dsp: 1.0,
            dsp: 0.2,
            ssp: 0.6,
            final_dsp: 2.0,
            period: 0.05,
            foot_half_extents: DEFAULT_HALF_EXTENTS,
        }
    }
}

/// Either a constant `height` or `(t, z)` waypoints spanning the walk. With
/// neither, the height is [`DEFAULT_HEIGHT`].
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VerticalSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub height: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub waypoints: Option<Vec<[f64; 2]>>,
}

pub const DEFAULT_HEIGHT: f64 = 0.85;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MpcSection {
    pub mode: ControlMode,
    pub horizon: usize,
    pub previewed_steps: usize,
    pub reach: f64,
    pub max_step_deviation: [f64; 2],
    pub min_foot_clearance: f64,
    pub regularization: f64,
    pub weights: Weights,
}

impl Default for MpcSection {
    fn default() -> Self {
        let d = MpcConfig::default();
        Self {
            mode: ControlMode::CopStepCmp,
            horizon: 36,
            previewed_steps: d.previewed_steps,
            reach: d.reach,
            max_step_deviation: d.max_step_deviation,
            min_foot_clearance: d.min_foot_clearance,
            regularization: d.regularization,
            weights: d.weights,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PushSection {
    /// Required: `[F_x, F_y]` in newtons.
    pub force: [f64; 2],
    /// Onset in seconds; defaults to the middle of the first single support.
    #[serde(default)]
    pub start: Option<f64>,
    /// Required, seconds.
    pub duration: f64,
}

/// Usable contact patch around each foothold, narrower than the foot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ContactSection {
    pub half_extents: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimSection {
    pub dt: f64,
    pub seed: u64,
    pub mass: f64,
    pub gravity: f64,
}

impl Default for SimSection {
    fn default() -> Self {
        Self {
            dt: DEFAULT_INNER_DT,
            seed: 0,
            mass: RobotParams::default().mass,
            gravity: GRAVITY,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScenarioFile {
    pub name: String,
    pub gait: GaitSection,
    pub vertical: VerticalSection,
    pub mpc: MpcSection,
    pub pushes: Vec<PushSection>,
    pub contact: Option<ContactSection>,
    pub sim: SimSection,
}

impl Default for ScenarioFile {
    fn default() -> Self {
        Self {
            name: "scenario".into(),
            gait: GaitSection::default(),
            vertical: VerticalSection::default(),
            mpc: MpcSection::default(),
            pushes: Vec::new(),
            contact: None,
            sim: SimSection::default(),
        }
    }
}

/// Schema or semantic error with its location in the source file.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioError {
    pub origin: String,
    pub line: Option<usize>,
    pub column: Option<usize>,
    pub message: String,
}

impl fmt::Display for ScenarioError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.line, self.column) {
            (Some(l), Some(c)) => write!(f, "{}:{l}:{c}: {}", self.origin, self.message),
            _ => write!(f, "{}: {}", self.origin, self.message),
        }
    }
}

impl std::error::Error for ScenarioError {}

impl ScenarioFile {
    pub fn load(path: &Path) -> Result<Self, ScenarioError> {
        let origin = path.display().to_string();
        let text = std::fs::read_to_string(path).map_err(|e| ScenarioError {
            origin: origin.clone(),
            line: None,
            column: None,
            message: format!("cannot read scenario: {e}"),
        })?;
        Self::parse(&text, &origin)
    }

    pub fn parse(text: &str, origin: &str) -> Result<Self, ScenarioError> {
        serde_json::from_str(text).map_err(|e| ScenarioError {
            origin: origin.to_string(),
            line: Some(e.line()),
            column: Some(e.column()),
            message: e.to_string(),
        })
    }

    fn semantic(origin: &str, field: &str, message: impl fmt::Display) -> ScenarioError {
        ScenarioError {
            origin: origin.to_string(),
            line: None,
            column: None,
            message: format!("{field}: {message}"),
        }
    }

    fn gait_params(&self) -> GaitParams {
        let g = &self.gait;
        GaitParams {
            step_count: g.steps,
            step_length: g.step_length,
            step_width: g.step_width,
            durations: PhaseDurations {
                initial_dsp: g.initial_dsp,
                dsp: g.dsp,
                ssp: g.ssp,
                final_dsp: g.final_dsp,
            },
            period: g.period,
            half_extents: g.foot_half_extents,
        }
    }

    /// Validates the file and fills derived defaults (push onsets). Returns the
    /// simulation scenario and the fully resolved file.
    pub fn resolve(&self, origin: &str) -> Result<(Scenario, ScenarioFile), ScenarioError> {
        let gait = self.gait_params();
        let (_, timeline) = build_plan(&gait).map_err(|e| Self::semantic(origin, "gait", e))?;
        let duration = timeline.duration();
        let mut resolved = self.clone();
        let waypoints: Vec<(f64, f64)> = match (&self.vertical.height, &self.vertical.waypoints) {
            (None, None) => {
                resolved.vertical.height = Some(DEFAULT_HEIGHT);
                vec![(0.0, DEFAULT_HEIGHT)]
            }
            (Some(z), None) => vec![(0.0, *z)],
            (None, Some(w)) if !w.is_empty() => w.iter().map(|p| (p[0], p[1])).collect(),
            _ => {
                return Err(Self::semantic(
                    origin,
                    "vertical",
                    "give exactly one of `height` or a non-empty `waypoints` list",
                ))
            }
        };
        let mut mpc = MpcConfig {
            weights: self.mpc.weights,
            horizon: self.mpc.horizon,
            previewed_steps: self.mpc.previewed_steps,
            reach: self.mpc.reach,
            max_step_deviation: self.mpc.max_step_deviation,
            min_foot_clearance: self.mpc.min_foot_clearance,
            ..MpcConfig::default()
        };
        mpc.regularization = self.mpc.regularization;
        self.mpc.mode.apply(&mut mpc);
        let default_start = first_ssp_midpoint(&timeline);
        let mut pushes = Vec::with_capacity(self.pushes.len());
        for (i, p) in self.pushes.iter().enumerate() {
            let start = p.start.unwrap_or(default_start);
            if !(p.duration > 0.0) {
                return Err(Self::semantic(
                    origin,
                    &format!("pushes[{i}].duration"),
                    "must be positive",
                ));
            }
            if !(0.0..=duration).contains(&start) {
                return Err(Self::semantic(
                    origin,
                    &format!("pushes[{i}].start"),
                    format!("{start} s is outside the walk [0, {duration}] s"),
                ));
            }
            resolved.pushes[i].start = Some(start);
            pushes.push(PushEvent {
                force: p.force,
                start,
                duration: p.duration,
            });
        }
        if let Some(c) = &self.contact {
            if c.half_extents.iter().any(|h| !(*h > 0.0)) {
                return Err(Self::semantic(
                    origin,
                    "contact.half_extents",
                    "must be positive",
                ));
            }
        }
        let scenario = Scenario {
            name: self.name.clone(),
            gait,
            waypoints,
            robot: RobotParams {
                mass: self.sim.mass,
                g: self.sim.gravity,
            },
            mpc,
            pushes,
            contact: self.contact.as_ref().map(|c| c.half_extents),
            dt: self.sim.dt,
            seed: self.sim.seed,
        };
        scenario
            .validate()
            .map_err(|e| Self::semantic(origin, "scenario", e))?;
        Ok((scenario, resolved))
    }
}
