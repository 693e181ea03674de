//! Closed-loop harness. An RK4 pendulum plant runs at a fine step under the
//! MPC, which replans once per control period. Pushes, fall detection and the
//! push-envelope search live here too.

use std::collections::VecDeque;
use std::fmt;
use std::str::FromStr;

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::MpcError;
use crate::gait_plan::{Foothold, GaitParams, PhaseKind, PhaseTimeline};
use crate::lip_model::{
    cmp_from_cop, integrate_plant, momentum_from_axes, ComState, PlantInput, RobotParams,
    VerticalMotion,
};
use crate::mpc::{
    solve_tick, AxisState, ControlOutput, MpcConfig, WalkingContext, COM, COP, MOMENTUM, NX, XI,
};

pub const DEFAULT_INNER_DT: f64 = 1e-3;
/// Rule (c) threshold as a multiple of the reach bound.
pub const COM_COP_FACTOR: f64 = 1.5;

/// Which authorities the controller may use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ControlMode {
    #[serde(rename = "cop-only")]
    CopOnly,
    #[serde(rename = "cop+step")]
    CopStep,
    #[serde(rename = "cop+step+cmp")]
    CopStepCmp,
    #[serde(rename = "cop+cmp")]
    CopCmp,
}

impl ControlMode {
    pub const ALL: [ControlMode; 4] =
        [Self::CopOnly, Self::CopStep, Self::CopStepCmp, Self::CopCmp];

    pub fn flags(self) -> (bool, bool) {
        match self {
            Self::CopOnly => (false, false),
            Self::CopStep => (true, false),
            Self::CopStepCmp => (true, true),
            Self::CopCmp => (false, true),
        }
    }

    pub fn of(cfg: &MpcConfig) -> Self {
        match (cfg.step_adjust, cfg.cmp_modulation) {
            (false, false) => Self::CopOnly,
            (true, false) => Self::CopStep,
            (true, true) => Self::CopStepCmp,
            (false, true) => Self::CopCmp,
        }
    }

    pub fn apply(self, cfg: &mut MpcConfig) {
        (cfg.step_adjust, cfg.cmp_modulation) = self.flags();
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Self::CopOnly => "cop-only",
            Self::CopStep => "cop+step",
            Self::CopStepCmp => "cop+step+cmp",
            Self::CopCmp => "cop+cmp",
        }
    }
}

impl fmt::Display for ControlMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ControlMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|m| m.as_str() == s.trim())
            .ok_or_else(|| {
                format!(
                    "unknown mode {s:?}; expected one of cop-only, cop+step, cop+step+cmp, cop+cmp"
                )
            })
    }
}

/// Constant horizontal force on the CoM over `[start, start + duration)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PushEvent {
    pub force: [f64; 2],
    pub start: f64,
    pub duration: f64,
}

impl PushEvent {
    pub fn active_at(&self, t: f64) -> bool {
        t >= self.start && t < self.start + self.duration
    }
}

/// Midpoint of the first single-support phase, the default push onset.
pub fn first_ssp_midpoint(timeline: &PhaseTimeline) -> f64 {
    timeline
        .segments
        .iter()
        .find(|s| s.kind == PhaseKind::Ssp)
        .map_or(0.0, |s| {
            (s.start_tick as f64 + 0.5 * s.ticks as f64) * timeline.period
        })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub gait: GaitParams,
    /// `(t, z)` waypoints of the CoM height.
    pub waypoints: Vec<(f64, f64)>,
    pub robot: RobotParams,
    pub mpc: MpcConfig,
    pub pushes: Vec<PushEvent>,
    /// Narrowed CoP half-extents, if the usable contact is smaller than the foot.
    pub contact: Option<[f64; 2]>,
    pub dt: f64,
    pub seed: u64,
}

impl Scenario {
    pub fn context(&self) -> Result<WalkingContext, MpcError> {
        WalkingContext::new(self.gait, &self.waypoints, self.robot, self.contact)
    }

    pub fn with_mode(&self, mode: ControlMode) -> Self {
        let mut s = self.clone();
        mode.apply(&mut s.mpc);
        s
    }

    /// Fall thresholds derived from the reach bound and the step timing.
    pub fn fall_rules(&self) -> FallRules {
        let d = self.gait.durations;
        FallRules {
            reach: self.mpc.reach,
            step_duration: d.ssp + d.dsp,
            com_cop_factor: COM_COP_FACTOR,
        }
    }

    pub fn validate(&self) -> Result<WalkingContext, MpcError> {
        self.mpc.validate()?;
        if !(self.dt > 0.0) {
            return Err(MpcError::Config("plant step must be positive".into()));
        }
        let ctx = self.context()?;
        let ratio = ctx.period() / self.dt;
        if (ratio - ratio.round()).abs() > 1e-6 || ratio.round() < 1.0 {
            return Err(MpcError::Config(format!(
                "control period {} s is not a multiple of the plant step {} s",
                ctx.period(),
                self.dt
            )));
        }
        let end = ctx.timeline.duration();
        for p in &self.pushes {
            if !(p.duration >= 0.0) || !(p.start >= 0.0) || p.start > end {
                return Err(MpcError::Config(format!(
                    "push at {} s for {} s lies outside the timeline [0, {end}] s",
                    p.start, p.duration
                )));
            }
        }
        Ok(ctx)
    }
}

/// One plant sample, taken at the start of every inner step and once at the end.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sample {
    pub t: f64,
    pub com: ComState,
    pub xi: [f64; 2],
    pub cop: [f64; 2],
    pub cmp: [f64; 2],
    /// Physical `[Hdot_x, Hdot_y]`.
    pub hdot: [f64; 2],
    pub hddot: [f64; 2],
    /// Foothold the CoP reference follows.
    pub foothold: usize,
    /// Usable support interval `[[x_lo, x_hi], [y_lo, y_hi]]` in force.
    pub support: [[f64; 2]; 2],
    pub push_active: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TickRecord {
    pub tick: usize,
    pub t: f64,
    pub cost: f64,
    pub iterations: usize,
    /// Optimized previewed footholds `(index, position)`.
    pub footholds: Vec<(usize, [f64; 2])>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum FallReason {
    /// The tick's QP had no solution (or the solver stalled).
    Infeasible { detail: String },
    /// The DCM stayed further than the reach bound from the support for a full step.
    DcmDivergence { distance: f64 },
    /// The CoM left the CoP by more than the rule (c) threshold.
    ComCopSeparation { distance: f64 },
}

impl fmt::Display for FallReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Infeasible { detail } => write!(f, "controller infeasible: {detail}"),
            Self::DcmDivergence { distance } => {
                write!(f, "dcm {distance:.3} m from support for a full step")
            }
            Self::ComCopSeparation { distance } => write!(f, "com {distance:.3} m from cop"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Outcome {
    Completed,
    Fell { t: f64, reason: FallReason },
}

impl Outcome {
    pub fn completed(&self) -> bool {
        matches!(self, Outcome::Completed)
    }
}

/// Final-knot residuals of the rest conditions, per axis.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct TerminalResiduals {
    pub cop_dcm: [f64; 2],
    pub cop_com: [f64; 2],
    pub hdot: [f64; 2],
}

impl TerminalResiduals {
    pub fn max_position(&self) -> f64 {
        self.cop_dcm
            .iter()
            .chain(&self.cop_com)
            .fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn max_momentum(&self) -> f64 {
        self.hdot.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimLog {
    pub samples: Vec<Sample>,
    pub ticks: Vec<TickRecord>,
    pub nominal_footholds: Vec<Foothold>,
    pub footholds: Vec<Foothold>,
    pub outcome: Outcome,
    /// Measured plant residuals at the plan end, when the run completed.
    pub terminal: Option<TerminalResiduals>,
    /// Residuals of the last tick's predicted state at its horizon end.
    pub predicted_terminal: Option<TerminalResiduals>,
    pub dcm_reference: Vec<[f64; 2]>,
    pub period: f64,
}

impl SimLog {
    pub fn peak_hdot(&self) -> f64 {
        self.samples
            .iter()
            .map(|s| s.hdot[0].hypot(s.hdot[1]))
            .fold(0.0, f64::max)
    }

    pub fn max_foothold_deviation(&self) -> f64 {
        self.footholds
            .iter()
            .zip(&self.nominal_footholds)
            .map(|(a, b)| (a.pos[0] - b.pos[0]).hypot(a.pos[1] - b.pos[1]))
            .fold(0.0, f64::max)
    }

    /// Largest DCM tracking error sampled at control ticks.
    pub fn max_dcm_error(&self) -> f64 {
        let per_tick = (self.period / self.sample_dt()).round() as usize;
        self.samples
            .iter()
            .step_by(per_tick.max(1))
            .zip(&self.dcm_reference)
            .map(|(s, r)| (s.xi[0] - r[0]).hypot(s.xi[1] - r[1]))
            .fold(0.0, f64::max)
    }

    fn sample_dt(&self) -> f64 {
        match self.samples.as_slice() {
            [a, b, ..] => b.t - a.t,
            _ => self.period,
        }
    }
}

/// State recorded for the fall rules.
#[derive(Debug, Clone, PartialEq)]
pub struct FallSample {
    pub t: f64,
    pub xi: [f64; 2],
    pub com: [f64; 2],
    pub cop: [f64; 2],
    pub support: [[f64; 2]; 2],
    pub controller_error: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FallRules {
    pub reach: f64,
    pub step_duration: f64,
    pub com_cop_factor: f64,
}

fn distance_to_box(p: [f64; 2], b: &[[f64; 2]; 2]) -> f64 {
    let d = |v: f64, r: [f64; 2]| (r[0] - v).max(v - r[1]).max(0.0);
    d(p[0], b[0]).hypot(d(p[1], b[1]))
}

/// Applies the fall rules to the most recent samples (oldest first).
pub fn detect_fall(tail: &[FallSample], rules: &FallRules) -> Option<FallReason> {
    let last = tail.last()?;
    if let Some(detail) = &last.controller_error {
        return Some(FallReason::Infeasible {
            detail: detail.clone(),
        });
    }
    let sep = (last.com[0] - last.cop[0]).hypot(last.com[1] - last.cop[1]);
    if sep > rules.com_cop_factor * rules.reach {
        return Some(FallReason::ComCopSeparation { distance: sep });
    }
    let mut nearest = f64::INFINITY;
    for s in tail.iter().rev() {
        let d = distance_to_box(s.xi, &s.support);
        if !(d > rules.reach) {
            return None;
        }
        nearest = nearest.min(d);
        if last.t - s.t >= rules.step_duration - 1e-9 {
            return Some(FallReason::DcmDivergence { distance: nearest });
        }
    }
    None
}

fn support_of(ctx: &WalkingContext, feet: &[Foothold], tick: usize) -> [[f64; 2]; 2] {
    let seg = ctx.timeline.segment_at(tick);
    let h = ctx.support_half_extents;
    let mut b = [[f64::INFINITY, f64::NEG_INFINITY]; 2];
    for j in std::iter::once(seg.feet.0).chain(seg.feet.1) {
        for axis in 0..2 {
            b[axis][0] = b[axis][0].min(feet[j].pos[axis] - h[axis]);
            b[axis][1] = b[axis][1].max(feet[j].pos[axis] + h[axis]);
        }
    }
    b
}

/// Simulates the scenario from rest on the first DSP reference until the
/// plan ends or a fall is detected.
pub fn run(scenario: &Scenario) -> Result<SimLog, MpcError> {
    let ctx = scenario.validate()?;
    Ok(run_with(scenario, &ctx))
}

fn run_with(scenario: &Scenario, ctx: &WalkingContext) -> SimLog {
    let period = ctx.period();
    let params = ctx.params;
    let inner = (period / scenario.dt).round() as usize;
    let dt = period / inner as f64;
    let total = ctx.timeline.tick_count();
    let rules = scenario.fall_rules();

    let mut feet = ctx.plan.footholds.clone();
    let start = ctx.refs.cop[0];
    let (z0, zd0, zdd0) = ctx.profile.curve.sample(0.0);
    let mut com = ComState {
        x: start,
        v: [0.0; 2],
        z: z0,
        zd: zd0,
        zdd: zdd0,
    };
    let mut cop = start;
    let mut h_axis = [0.0; 2];
    let mut samples = Vec::with_capacity(total * inner + 1);
    let mut ticks = Vec::with_capacity(total);
    let mut tail: VecDeque<FallSample> = VecDeque::new();
    let mut previous: Option<ControlOutput> = None;
    let mut outcome = Outcome::Completed;

    // DCM with the quasi-static frequency of the current height.
    let measure = |com: &ComState| -> [f64; 2] {
        let w = (params.g / com.z).sqrt();
        [com.x[0] + com.v[0] / w, com.x[1] + com.v[1] / w]
    };
    let push_fall_sample = |tail: &mut VecDeque<FallSample>, s: FallSample| -> Option<FallReason> {
        tail.push_back(s);
        while let (Some(front), Some(back)) = (tail.front(), tail.back()) {
            if back.t - front.t > rules.step_duration + dt {
                tail.pop_front();
            } else {
                break;
            }
        }
        detect_fall(tail.make_contiguous(), &rules)
    };

    'outer: for tick in 0..total {
        let t0 = tick as f64 * period;
        let xi = measure(&com);
        let states = [0, 1].map(|a| AxisState {
            xi: xi[a],
            x: com.x[a],
            momentum: h_axis[a],
            cop: cop[a],
        });
        let support = support_of(ctx, &feet, tick);
        let out = match solve_tick(ctx, &scenario.mpc, tick, &states, &feet, previous.as_ref()) {
            Ok(out) => out,
            Err(e) => {
                let reason = push_fall_sample(
                    &mut tail,
                    FallSample {
                        t: t0,
                        xi,
                        com: com.x,
                        cop,
                        support,
                        controller_error: Some(e.to_string()),
                    },
                )
                .expect("a controller error is always a fall");
                outcome = Outcome::Fell { t: t0, reason };
                break;
            }
        };
        let mut adjusted = Vec::new();
        for a in &out.axes[0].footholds {
            let j = a.0;
            if ctx.timeline.landing_tick(j) > tick {
                if let Some(p) = out.foothold(j) {
                    feet[j].pos = p;
                    adjusted.push((j, p));
                }
            }
        }
        ticks.push(TickRecord {
            tick,
            t: t0,
            cost: out.cost(),
            iterations: out.iterations(),
            footholds: adjusted,
        });
        let (hddot_axis, cop_rate) = out.command();
        let hddot = momentum_from_axes(hddot_axis);
        let foothold = ctx.timeline.assigned_foot(tick);
        let support = support_of(ctx, &feet, tick);

        let cop_knot = cop;
        let h_knot = h_axis;
        for s in 0..inner {
            let tau = s as f64 * dt;
            let t = t0 + tau;
            let cop_now = [
                cop_knot[0] + cop_rate[0] * tau,
                cop_knot[1] + cop_rate[1] * tau,
            ];
            let h_now = [
                h_knot[0] + hddot_axis[0] * tau,
                h_knot[1] + hddot_axis[1] * tau,
            ];
            let hdot = momentum_from_axes(h_now);
            let mid = t + 0.5 * dt;
            let mut force = [0.0; 2];
            let mut push_active = false;
            for p in &scenario.pushes {
                if p.active_at(mid) {
                    push_active = true;
                    force[0] += p.force[0];
                    force[1] += p.force[1];
                }
            }
            let xi_now = measure(&com);
            let cmp =
                cmp_from_cop(cop_now, hdot, params.mass, com.zdd, params.g).unwrap_or(cop_now);
            samples.push(Sample {
                t,
                com,
                xi: xi_now,
                cop: cop_now,
                cmp,
                hdot,
                hddot,
                foothold,
                support,
                push_active,
            });
            if let Some(reason) = push_fall_sample(
                &mut tail,
                FallSample {
                    t,
                    xi: xi_now,
                    com: com.x,
                    cop: cop_now,
                    support,
                    controller_error: None,
                },
            ) {
                outcome = Outcome::Fell { t, reason };
                break 'outer;
            }
            let input = PlantInput {
                cop: cop_now,
                cop_rate,
                hdot,
                hddot,
                force,
            };
            com = integrate_plant(&com, &input, t, dt, &ctx.profile.curve, params);
        }
        let tau = period;
        cop = [
            cop_knot[0] + cop_rate[0] * tau,
            cop_knot[1] + cop_rate[1] * tau,
        ];
        h_axis = [
            h_knot[0] + hddot_axis[0] * tau,
            h_knot[1] + hddot_axis[1] * tau,
        ];
        previous = Some(out);
    }

    let t_end = samples.last().map_or(0.0, |s| s.t) + dt;
    let mut terminal = None;
    let predicted_terminal = previous.as_ref().map(|out| {
        let at_end = |axis: usize, c: usize| {
            let p = &out.axes[axis].predicted;
            p[p.len() - NX + c]
        };
        let r = |a: usize, b: usize| [0, 1].map(|axis| at_end(axis, a) - at_end(axis, b));
        TerminalResiduals {
            cop_dcm: r(COP, XI),
            cop_com: r(COP, COM),
            hdot: [0, 1].map(|axis| at_end(axis, MOMENTUM)),
        }
    });
    if outcome.completed() {
        let xi = measure(&com);
        let hdot = momentum_from_axes(h_axis);
        let cmp = cmp_from_cop(cop, hdot, params.mass, com.zdd, params.g).unwrap_or(cop);
        samples.push(Sample {
            t: t_end,
            com,
            xi,
            cop,
            cmp,
            hdot,
            hddot: [0.0; 2],
            foothold: ctx.timeline.assigned_foot(total),
            support: support_of(ctx, &feet, total),
            push_active: false,
        });
        terminal = Some(TerminalResiduals {
            cop_dcm: [cop[0] - xi[0], cop[1] - xi[1]],
            cop_com: [cop[0] - com.x[0], cop[1] - com.x[1]],
            hdot: h_axis,
        });
    }
    SimLog {
        samples,
        ticks,
        nominal_footholds: ctx.plan.footholds.clone(),
        footholds: feet,
        outcome,
        terminal,
        predicted_terminal,
        dcm_reference: ctx.refs.dcm.clone(),
        period,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TraceEntry {
    pub magnitude: f64,
    pub recoverable: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RecoveryEnvelope {
    pub direction: [f64; 2],
    pub duration: f64,
    pub start: f64,
    /// Largest magnitude found recoverable (N).
    pub magnitude: f64,
    /// Final bracket `[recoverable, not recoverable]`.
    pub bracket: [f64; 2],
    pub tolerance: f64,
    /// No failing magnitude was found up to the cap.
    pub unbounded: bool,
    pub cap: f64,
    /// Simulations run after the bracket was established.
    pub bisection_runs: usize,
    pub trace: Vec<TraceEntry>,
    /// Random magnitudes below the result that turned out not recoverable.
    pub monotonicity_violations: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnvelopeSearch {
    pub direction: [f64; 2],
    pub duration: f64,
    /// Push onset; defaults to the middle of the first single support.
    pub start: Option<f64>,
    pub bracket: [f64; 2],
    pub tolerance: f64,
    /// Upper limit for automatic bracket expansion.
    pub cap: f64,
    /// Random spot checks of monotonicity below the result.
    pub spot_checks: usize,
}

impl Default for EnvelopeSearch {
    fn default() -> Self {
        Self {
            direction: [1.0, 0.0],
            duration: 0.1,
            start: None,
            bracket: [0.0, 500.0],
            tolerance: 5.0,
            cap: 4000.0,
            spot_checks: 2,
        }
    }
}

/// Whether the scenario, with its pushes replaced by a single push, completes.
pub fn recoverable(scenario: &Scenario, ctx: &WalkingContext, push: PushEvent) -> bool {
    let mut s = scenario.clone();
    s.pushes = vec![push];
    run_with(&s, ctx).outcome.completed()
}

/// Bisection on push magnitude along a fixed direction.
pub fn max_recoverable_push(
    scenario: &Scenario,
    search: &EnvelopeSearch,
) -> Result<RecoveryEnvelope, MpcError> {
    let ctx = scenario.validate()?;
    let norm = search.direction[0].hypot(search.direction[1]);
    if !(norm > 0.0) || !(search.tolerance > 0.0) || !(search.bracket[1] > search.bracket[0]) {
        return Err(MpcError::Config(
            "envelope search needs a non-zero direction, a positive tolerance and an increasing bracket".into(),
        ));
    }
    let dir = [search.direction[0] / norm, search.direction[1] / norm];
    let start = search
        .start
        .unwrap_or_else(|| first_ssp_midpoint(&ctx.timeline));
    let cap = search.cap.max(search.bracket[1]);
    let mut trace = Vec::new();
    let probe = |f: f64, trace: &mut Vec<TraceEntry>| -> bool {
        let ok = recoverable(
            scenario,
            &ctx,
            PushEvent {
                force: [f * dir[0], f * dir[1]],
                start,
                duration: search.duration,
            },
        );
        trace.push(TraceEntry {
            magnitude: f,
            recoverable: ok,
        });
        ok
    };
    let mut envelope = RecoveryEnvelope {
        direction: dir,
        duration: search.duration,
        start,
        magnitude: cap,
        bracket: [cap, cap],
        tolerance: search.tolerance,
        unbounded: true,
        cap,
        bisection_runs: 0,
        trace: Vec::new(),
        monotonicity_violations: Vec::new(),
    };
    if search.duration <= 0.0 {
        return Ok(envelope);
    }

    let [mut lo, mut hi] = search.bracket;
    if !probe(lo, &mut trace) {
        envelope.magnitude = lo;
        envelope.bracket = [lo, lo];
        envelope.unbounded = false;
        envelope.trace = trace;
        return Ok(envelope);
    }
    while probe(hi, &mut trace) {
        if hi >= cap {
            envelope.trace = trace;
            return Ok(envelope);
        }
        lo = hi;
        hi = (2.0 * hi).min(cap);
    }
    let mut runs = 0;
    while hi - lo > search.tolerance {
        let mid = 0.5 * (lo + hi);
        runs += 1;
        if probe(mid, &mut trace) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mut rng = StdRng::seed_from_u64(scenario.seed);
    let mut violations = Vec::new();
    for _ in 0..search.spot_checks {
        if lo <= 0.0 {
            break;
        }
        let f = rng.gen_range(0.0..lo);
        if !probe(f, &mut trace) {
            violations.push(f);
        }
    }
    envelope.magnitude = lo;
    envelope.bracket = [lo, hi];
    envelope.unbounded = false;
    envelope.bisection_runs = runs;
    envelope.trace = trace;
    envelope.monotonicity_violations = violations;
    Ok(envelope)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonRow {
    pub mode: ControlMode,
    /// Outcome of the scenario's own pushes under this mode.
    pub outcome: Outcome,
    pub envelope_forward: RecoveryEnvelope,
    pub envelope_lateral: RecoveryEnvelope,
    pub peak_hdot: f64,
    pub max_foothold_deviation: f64,
}

/// Runs the scenario and both envelope searches for each mode. Work is spread
/// over the rayon pool; rows come back in the order of `modes`.
pub fn compare_controllers(
    scenario: &Scenario,
    modes: &[ControlMode],
    search: &EnvelopeSearch,
) -> Result<Vec<ComparisonRow>, MpcError> {
    scenario.validate()?;
    modes
        .par_iter()
        .map(|&mode| {
            let s = scenario.with_mode(mode);
            let ((log, fwd), lat) = rayon::join(
                || {
                    rayon::join(
                        || run(&s),
                        || {
                            max_recoverable_push(
                                &s,
                                &EnvelopeSearch {
                                    direction: [1.0, 0.0],
                                    ..*search
                                },
                            )
                        },
                    )
                },
                || {
                    max_recoverable_push(
                        &s,
                        &EnvelopeSearch {
                            direction: [0.0, 1.0],
                            ..*search
                        },
                    )
                },
            );
            let log = log?;
            Ok(ComparisonRow {
                mode,
                outcome: log.outcome.clone(),
                envelope_forward: fwd?,
                envelope_lateral: lat?,
                peak_hdot: log.peak_hdot(),
                max_foothold_deviation: log.max_foothold_deviation(),
            })
        })
        .collect()
}
