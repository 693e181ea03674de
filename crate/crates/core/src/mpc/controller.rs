use nalgebra::{DMatrix, DVector};

use super::dynamics::{condense, discretize, NU};
use super::problem::{build_constraints, build_cost, AxisHorizon};
use super::selection::footstep_selection;
use super::{AxisState, MpcConfig, AXIS_NAMES};
use crate::error::MpcError;
use crate::gait_plan::{
    build_plan, build_references, build_vertical_profile, Foothold, FootstepPlan, GaitParams,
    PhaseTimeline, ReferenceTrajectories, VerticalProfile,
};
use crate::lip_model::RobotParams;
use crate::qp_solver::{Infeasibility, QpProblem, QpSolver, QpStatus};

/// Nominal plan and references shared by every control tick of one walk.
#[derive(Debug, Clone)]
pub struct WalkingContext {
    pub params: RobotParams,
    pub gait: GaitParams,
    pub plan: FootstepPlan,
    pub timeline: PhaseTimeline,
    pub profile: VerticalProfile,
    pub refs: ReferenceTrajectories,
    /// Half-extents of the usable contact surface around each foothold. Equal
    /// to the foot size unless a narrower contact is imposed.
    pub support_half_extents: [f64; 2],
}

impl WalkingContext {
    pub fn new(
        gait: GaitParams,
        waypoints: &[(f64, f64)],
        params: RobotParams,
        contact: Option<[f64; 2]>,
    ) -> Result<Self, MpcError> {
        if !(params.mass > 0.0) {
            return Err(crate::error::ModelError::NonPositiveMass(params.mass).into());
        }
        let (plan, timeline) = build_plan(&gait)?;
        let profile =
            build_vertical_profile(waypoints, gait.period, timeline.duration(), params.g)?;
        let refs = build_references(&plan, &timeline, &profile);
        let support_half_extents = contact.unwrap_or(gait.half_extents);
        if support_half_extents.iter().any(|h| !(*h > 0.0)) {
            return Err(MpcError::Config(
                "contact half-extents must be positive".into(),
            ));
        }
        Ok(Self {
            params,
            gait,
            plan,
            timeline,
            profile,
            refs,
            support_half_extents,
        })
    }

    pub fn period(&self) -> f64 {
        self.timeline.period
    }

    fn knot(&self, k: usize) -> usize {
        k.min(self.timeline.tick_count())
    }
}

/// Optimal open-loop plan for one axis.
#[derive(Debug, Clone, PartialEq)]
pub struct AxisPlan {
    /// Axis-mapped momentum acceleration per horizon tick.
    pub hddot: Vec<f64>,
    pub cop_rate: Vec<f64>,
    /// `(foothold index, position on this axis)` for every previewed foothold.
    pub footholds: Vec<(usize, f64)>,
    /// Stacked predicted states `psi_1..psi_N`.
    pub predicted: DVector<f64>,
    /// Cost at the optimum, without regularization.
    pub cost: f64,
    pub iterations: usize,
    pub decision: DVector<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ControlOutput {
    pub axes: [AxisPlan; 2],
}

impl ControlOutput {
    /// First-tick inputs: axis-mapped `[Hddot_x_axis, Hddot_y_axis]` and CoP rate.
    pub fn command(&self) -> ([f64; 2], [f64; 2]) {
        (
            [self.axes[0].hddot[0], self.axes[1].hddot[0]],
            [self.axes[0].cop_rate[0], self.axes[1].cop_rate[0]],
        )
    }

    /// Optimized position of foothold `j`, if it was previewed on both axes.
    pub fn foothold(&self, j: usize) -> Option<[f64; 2]> {
        let find = |a: &AxisPlan| a.footholds.iter().find(|(f, _)| *f == j).map(|(_, p)| *p);
        Some([find(&self.axes[0])?, find(&self.axes[1])?])
    }

    pub fn cost(&self) -> f64 {
        self.axes[0].cost + self.axes[1].cost
    }

    pub fn iterations(&self) -> usize {
        self.axes[0].iterations + self.axes[1].iterations
    }
}

/// Previous solution shifted by one tick, used to seed the active set.
fn shifted_guess(
    prev: &AxisPlan,
    horizon: usize,
    previewed: &[usize],
    feet: &[Foothold],
    axis: usize,
) -> DVector<f64> {
    let mut x = DVector::zeros(NU * horizon + previewed.len());
    for i in 0..horizon {
        let src = (i + 1).min(prev.hddot.len().saturating_sub(1));
        if src < prev.hddot.len() {
            x[NU * i] = prev.hddot[src];
            x[NU * i + 1] = prev.cop_rate[src];
        }
    }
    for (col, &j) in previewed.iter().enumerate() {
        x[NU * horizon + col] = prev
            .footholds
            .iter()
            .find(|(f, _)| *f == j)
            .map_or(feet[j].pos[axis], |(_, p)| *p);
    }
    x
}

/// Builds and solves both axis QPs at control tick `tick`.
///
/// `feet` holds the current estimate of every foothold: landed feet at their
/// touchdown positions, future feet at their latest optimized (or nominal)
/// positions.
pub fn solve_tick(
    ctx: &WalkingContext,
    cfg: &MpcConfig,
    tick: usize,
    states: &[AxisState; 2],
    feet: &[Foothold],
    warm: Option<&ControlOutput>,
) -> Result<ControlOutput, MpcError> {
    cfg.validate()?;
    let n = cfg.horizon;
    let period = ctx.period();
    let stages = (0..n)
        .map(|j| {
            let k = ctx.knot(tick + j);
            discretize(
                ctx.profile.omega_at(k),
                ctx.profile.zdd_at(k),
                ctx.params.mass,
                ctx.params.g,
                period,
            )
        })
        .collect::<Result<Vec<_>, _>>()?;
    let cs = condense(&stages);
    let sel = footstep_selection(&ctx.timeline, tick, n, cfg.previewed_steps, cfg.step_adjust)?;
    let solver = QpSolver::default();

    let solve_axis = |axis: usize| -> Result<AxisPlan, MpcError> {
        let h = AxisHorizon {
            axis,
            tick,
            psi0: states[axis].to_vector(),
            cs: &cs,
            sel: &sel,
            timeline: &ctx.timeline,
            cop_ref: (1..=n)
                .map(|i| ctx.refs.cop[ctx.knot(tick + i)][axis])
                .collect(),
            dcm_ref: (1..=n)
                .map(|i| ctx.refs.dcm[ctx.knot(tick + i)][axis])
                .collect(),
            nominal_feet: &ctx.plan.footholds,
            feet,
            half_extent: ctx.support_half_extents[axis],
        };
        let cost = build_cost(&h, &cfg.weights);
        let cons = build_constraints(&h, cfg);
        let dim = h.dim();
        let hessian = &cost.hessian + DMatrix::identity(dim, dim) * cfg.regularization;
        let qp = QpProblem::unconstrained(hessian, cost.gradient.clone())
            .with_equalities(cons.eq_matrix.clone(), cons.eq_offset.clone())
            .with_inequalities(cons.ineq_matrix.clone(), cons.ineq_offset.clone());
        let guess = warm.map(|w| shifted_guess(&w.axes[axis], n, &sel.previewed, feet, axis));
        let sol = solver
            .solve(&qp, guess.as_ref())
            .map_err(|e| MpcError::Config(format!("{} QP: {e}", AXIS_NAMES[axis])))?;
        match &sol.status {
            QpStatus::Optimal => {}
            QpStatus::MaxIterations => {
                return Err(MpcError::SolverStalled {
                    axis: AXIS_NAMES[axis],
                    iterations: sol.iterations,
                })
            }
            QpStatus::Infeasible(why) => {
                let conflict = match why {
                    Infeasibility::Equalities { residual } => {
                        vec![format!("equality constraints (residual {residual:.3e})")]
                    }
                    Infeasibility::Inequalities { violated, active } => std::iter::once(violated)
                        .chain(active.iter())
                        .map(|&i| cons.ineq_tags[i].to_string())
                        .collect(),
                };
                return Err(MpcError::FallPredicted {
                    axis: AXIS_NAMES[axis],
                    conflict,
                });
            }
        }
        let mut x = sol.x;
        if !cfg.cmp_modulation {
            // Pinned to zero by equality rows; clear the solver's round-off.
            for i in 0..n {
                x[NU * i] = 0.0;
            }
        }
        let inputs = x.rows(0, NU * n).into_owned();
        Ok(AxisPlan {
            hddot: (0..n).map(|i| x[NU * i]).collect(),
            cop_rate: (0..n).map(|i| x[NU * i + 1]).collect(),
            footholds: sel
                .previewed
                .iter()
                .enumerate()
                .map(|(col, &j)| (j, x[NU * n + col]))
                .collect(),
            predicted: cs.predict(&h.psi0, &inputs),
            cost: cost.value(&x),
            iterations: sol.iterations,
            decision: x,
        })
    };

    let (sx, sy) = rayon::join(|| solve_axis(0), || solve_axis(1));
    Ok(ControlOutput { axes: [sx?, sy?] })
}
