//! Per-axis condensed MPC. The decision vector interleaves the momentum
//! acceleration with the CoP rate, followed by any previewed footholds.

mod controller;
mod dynamics;
mod problem;
mod selection;

pub use controller::{solve_tick, AxisPlan, ControlOutput, WalkingContext};
pub use dynamics::{
    condense, discretize, CondensedSystem, StageMatrices, COM, COP, MOMENTUM, NU, NX, XI,
};
pub use problem::{
    build_constraints, build_cost, AxisHorizon, ConstraintSet, ConstraintTag, CostTerms,
};
pub use selection::{footstep_selection, FootSelection};

use nalgebra::Vector4;
use serde::{Deserialize, Serialize};

use crate::error::MpcError;

/// Cost weights, in the order the terms appear in the objective:
/// CoP rate, momentum rate, momentum acceleration, CoP tracking, DCM tracking.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Weights {
    pub cop_rate: f64,
    pub momentum: f64,
    pub momentum_rate: f64,
    pub cop_tracking: f64,
    pub dcm_tracking: f64,
}

impl Default for Weights {
    fn default() -> Self {
        Self {
            cop_rate: 1e-1,
            momentum: 1e-3,
            momentum_rate: 1e-5,
            cop_tracking: 1.0,
            dcm_tracking: 10.0,
        }
    }
}

impl Weights {
    pub fn as_array(&self) -> [f64; 5] {
        [
            self.cop_rate,
            self.momentum,
            self.momentum_rate,
            self.cop_tracking,
            self.dcm_tracking,
        ]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MpcConfig {
    pub weights: Weights,
    /// Horizon length in control ticks.
    pub horizon: usize,
    /// Number of previewed footholds optimized when step adjustment is on.
    pub previewed_steps: usize,
    /// Bound on each previewed foothold's distance from the CoM at its landing tick (per axis).
    pub reach: f64,
    /// Bound on each previewed foothold's deviation from its nominal position, `[sagittal, lateral]`.
    pub max_step_deviation: [f64; 2],
    /// Minimum lateral distance between consecutive feet.
    pub min_foot_clearance: f64,
    pub step_adjust: bool,
    pub cmp_modulation: bool,
    pub regularization: f64,
}

impl Default for MpcConfig {
    fn default() -> Self {
        Self {
            weights: Weights::default(),
            horizon: 30,
            previewed_steps: 3,
            reach: 0.3,
            max_step_deviation: [0.2, 0.15],
            min_foot_clearance: 0.16,
            step_adjust: true,
            cmp_modulation: true,
            regularization: 1e-9,
        }
    }
}

impl MpcConfig {
    pub fn validate(&self) -> Result<(), MpcError> {
        if self.weights.as_array().iter().any(|w| !(*w >= 0.0)) {
            return Err(MpcError::Config("weights must be non-negative".into()));
        }
        if self.horizon == 0 {
            return Err(MpcError::Config("horizon must be at least one tick".into()));
        }
        if !(self.reach > 0.0) {
            return Err(MpcError::Config("reach bound must be positive".into()));
        }
        if self.max_step_deviation.iter().any(|d| !(*d >= 0.0)) {
            return Err(MpcError::Config(
                "step deviation bounds must be non-negative".into(),
            ));
        }
        if !(self.regularization >= 0.0) {
            return Err(MpcError::Config(
                "regularization must be non-negative".into(),
            ));
        }
        Ok(())
    }
}

/// Per-axis controller state. `momentum` is the axis-mapped momentum rate
/// (`Hdot_y` for x, `-Hdot_x` for y).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct AxisState {
    pub xi: f64,
    pub x: f64,
    pub momentum: f64,
    pub cop: f64,
}

impl AxisState {
    pub fn to_vector(&self) -> Vector4<f64> {
        Vector4::new(self.xi, self.x, self.momentum, self.cop)
    }

    pub fn from_vector(v: &Vector4<f64>) -> Self {
        Self {
            xi: v[XI],
            x: v[COM],
            momentum: v[MOMENTUM],
            cop: v[COP],
        }
    }
}

pub(crate) const AXIS_NAMES: [&str; 2] = ["sagittal", "lateral"];
