use nalgebra::{DMatrix, DVector};

use crate::error::MpcError;
use crate::gait_plan::PhaseTimeline;

/// Which foothold each horizon tick's CoP belongs to.
///
/// `phi0[i]` is 1 when tick `i + 1` stays on the current foothold; column `j`
/// of `phi_u2` marks the ticks of previewed foothold `previewed[j]`. With step
/// adjustment off there are no columns and future feet are constants.
#[derive(Debug, Clone, PartialEq)]
pub struct FootSelection {
    pub phi0: DVector<f64>,
    pub phi_u2: DMatrix<f64>,
    /// Foothold index in contact now.
    pub current: usize,
    /// Foothold indices optimized as decision variables, in step order.
    pub previewed: Vec<usize>,
    /// Assigned foothold index for every horizon tick.
    pub assigned: Vec<usize>,
}

impl FootSelection {
    pub fn column_of(&self, foot: usize) -> Option<usize> {
        self.previewed.iter().position(|&f| f == foot)
    }
}

pub fn footstep_selection(
    timeline: &PhaseTimeline,
    tick: usize,
    horizon: usize,
    previewed_steps: usize,
    step_adjust: bool,
) -> Result<FootSelection, MpcError> {
    let current = timeline.assigned_foot(tick);
    let assigned: Vec<usize> = (1..=horizon)
        .map(|i| timeline.assigned_foot(tick + i))
        .collect();
    let furthest = assigned.iter().copied().max().unwrap_or(current);
    let ahead = furthest - current;
    let previewed: Vec<usize> = if step_adjust {
        if ahead > previewed_steps {
            return Err(MpcError::TooManySteps {
                needed: ahead,
                available: previewed_steps,
            });
        }
        (current + 1..=furthest).collect()
    } else {
        Vec::new()
    };

    let mut phi0 = DVector::zeros(horizon);
    let mut phi_u2 = DMatrix::zeros(horizon, previewed.len());
    for (i, &foot) in assigned.iter().enumerate() {
        if foot == current {
            phi0[i] = 1.0;
        } else if step_adjust {
            phi_u2[(i, foot - current - 1)] = 1.0;
        }
    }
    Ok(FootSelection {
        phi0,
        phi_u2,
        current,
        previewed,
        assigned,
    })
}
