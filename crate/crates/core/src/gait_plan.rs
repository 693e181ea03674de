//! Nominal walking plan: footholds, DSP/SSP timeline, vertical CoM profile and
//! the CoP/DCM references the controller tracks.
//!
//! Footholds are listed in contact order. Index 0 is the initial position of
//! the first swing foot, index 1 the first stance foot, and index `i + 1` is
//! where step `i` lands. SSP `i` (1-based) stands on foothold `i`; the DSP that
//! follows it is supported by footholds `i` and `i + 1`.

use serde::{Deserialize, Serialize};

use crate::error::PlanError;
use crate::lip_model::{natural_frequency, Omega, VerticalMotion, OMEGA_MIN};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FootSide {
    Left,
    Right,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Foothold {
    pub pos: [f64; 2],
    pub side: FootSide,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FootstepPlan {
    pub footholds: Vec<Foothold>,
    pub step_length: f64,
    pub step_width: f64,
    /// Foot rectangle half-extents `[sagittal, lateral]` (m).
    pub half_extents: [f64; 2],
}

impl FootstepPlan {
    pub fn step_count(&self) -> usize {
        self.footholds.len() - 2
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PhaseKind {
    InitialDsp,
    Dsp,
    Ssp,
    FinalDsp,
}

/// One phase of the timeline. `feet` holds the indices of the footholds in
/// contact; for double support the second entry is the foot that carries the
/// following single support (or the last foot placed, for the final DSP).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub kind: PhaseKind,
    pub start_tick: usize,
    pub ticks: usize,
    pub feet: (usize, Option<usize>),
}

impl Segment {
    pub fn end_tick(&self) -> usize {
        self.start_tick + self.ticks
    }

    pub fn is_double_support(&self) -> bool {
        self.feet.1.is_some()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhaseTimeline {
    pub segments: Vec<Segment>,
    pub period: f64,
}

impl PhaseTimeline {
    /// Number of control intervals; references are sampled at `tick_count() + 1` knots.
    pub fn tick_count(&self) -> usize {
        self.segments.last().map_or(0, Segment::end_tick)
    }

    pub fn duration(&self) -> f64 {
        self.tick_count() as f64 * self.period
    }

    /// Segment owning knot `k`. Knots past the end belong to the final segment.
    pub fn segment_at(&self, k: usize) -> &Segment {
        let idx = self
            .segments
            .partition_point(|s| s.end_tick() <= k)
            .min(self.segments.len() - 1);
        &self.segments[idx]
    }

    /// Fraction of the owning segment elapsed at knot `k`, in `[0, 1]`.
    pub fn phase_fraction(&self, k: usize) -> f64 {
        let seg = self.segment_at(k);
        ((k.saturating_sub(seg.start_tick)) as f64 / seg.ticks as f64).min(1.0)
    }

    /// Foothold whose position the CoP reference follows at knot `k`: the
    /// stance foot in SSP, the upcoming stance foot in DSP.
    pub fn assigned_foot(&self, k: usize) -> usize {
        let seg = self.segment_at(k);
        seg.feet.1.unwrap_or(seg.feet.0)
    }

    /// Segment whose contacts bound the CoP at knot `k`. A knot on an SSP
    /// boundary belongs to the single support on either side, so the CoP
    /// ramp between consecutive knots never leaves the support in force.
    pub fn knot_support(&self, k: usize) -> &Segment {
        if k > 0 {
            let before = self.segment_at(k - 1);
            if before.kind == PhaseKind::Ssp {
                return before;
            }
        }
        self.segment_at(k)
    }

    /// First knot at which foothold `j` is in contact.
    pub fn landing_tick(&self, j: usize) -> usize {
        if j <= 1 {
            return 0;
        }
        self.segments
            .iter()
            .find(|s| s.is_double_support() && s.feet.1 == Some(j))
            .map_or(self.tick_count(), |s| s.start_tick)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseDurations {
    pub initial_dsp: f64,
    pub dsp: f64,
    pub ssp: f64,
    pub final_dsp: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaitParams {
    pub step_count: usize,
    pub step_length: f64,
    pub step_width: f64,
    pub durations: PhaseDurations,
    pub period: f64,
    pub half_extents: [f64; 2],
}

pub const DEFAULT_PERIOD: f64 = 0.06;
pub const DEFAULT_HALF_EXTENTS: [f64; 2] = [0.115, 0.065];

fn ticks_of(name: &'static str, duration: f64, period: f64) -> Result<usize, PlanError> {
    let ratio = duration / period;
    let ticks = ratio.round();
    if !(ticks >= 1.0) || (ratio - ticks).abs() > 1e-9 * ratio.max(1.0) {
        return Err(PlanError::NotMultipleOfPeriod {
            name,
            duration,
            period,
        });
    }
    Ok(ticks as usize)
}

pub fn build_plan(p: &GaitParams) -> Result<(FootstepPlan, PhaseTimeline), PlanError> {
    if !(p.period > 0.0) {
        return Err(PlanError::BadPeriod(p.period));
    }
    if p.step_count == 0 {
        return Err(PlanError::NoSteps);
    }
    let d = &p.durations;
    let init = ticks_of("initial DSP", d.initial_dsp, p.period)?;
    let dsp = if p.step_count > 1 {
        ticks_of("DSP", d.dsp, p.period)?
    } else {
        0
    };
    let ssp = ticks_of("SSP", d.ssp, p.period)?;
    let fin = ticks_of("final DSP", d.final_dsp, p.period)?;

    let half_w = 0.5 * p.step_width;
    let mut footholds = vec![
        Foothold {
            pos: [0.0, half_w],
            side: FootSide::Left,
        },
        Foothold {
            pos: [0.0, -half_w],
            side: FootSide::Right,
        },
    ];
    for i in 1..=p.step_count {
        let side = if i % 2 == 1 {
            FootSide::Left
        } else {
            FootSide::Right
        };
        let y = if side == FootSide::Left {
            half_w
        } else {
            -half_w
        };
        footholds.push(Foothold {
            pos: [i as f64 * p.step_length, y],
            side,
        });
    }

    let mut segments = Vec::with_capacity(2 * p.step_count + 1);
    let mut tick = 0;
    let mut push = |kind, ticks, feet| {
        segments.push(Segment {
            kind,
            start_tick: tick,
            ticks,
            feet,
        });
        tick += ticks;
    };
    push(PhaseKind::InitialDsp, init, (0, Some(1)));
    for i in 1..=p.step_count {
        push(PhaseKind::Ssp, ssp, (i, None));
        if i < p.step_count {
            push(PhaseKind::Dsp, dsp, (i, Some(i + 1)));
        }
    }
    push(
        PhaseKind::FinalDsp,
        fin,
        (p.step_count, Some(p.step_count + 1)),
    );

    Ok((
        FootstepPlan {
            footholds,
            step_length: p.step_length,
            step_width: p.step_width,
            half_extents: p.half_extents,
        },
        PhaseTimeline {
            segments,
            period: p.period,
        },
    ))
}

/// Height trajectory through `(time, height)` waypoints: one cubic per
/// interval with zero slope at every waypoint, held constant outside.
#[derive(Debug, Clone, PartialEq)]
pub struct HeightCurve {
    waypoints: Vec<(f64, f64)>,
}

impl HeightCurve {
    pub fn new(waypoints: Vec<(f64, f64)>) -> Result<Self, PlanError> {
        if waypoints.is_empty() {
            return Err(PlanError::Waypoints(
                "at least one waypoint is required".into(),
            ));
        }
        for w in waypoints.windows(2) {
            if !(w[1].0 > w[0].0) {
                return Err(PlanError::Waypoints(format!(
                    "times must increase strictly ({} then {})",
                    w[0].0, w[1].0
                )));
            }
        }
        if let Some(&(t, z)) = waypoints.iter().find(|(_, z)| !(*z > 0.0)) {
            return Err(PlanError::Waypoints(format!(
                "height {z} at t = {t} is not positive"
            )));
        }
        Ok(Self { waypoints })
    }

    pub fn constant(z: f64) -> Result<Self, PlanError> {
        Self::new(vec![(0.0, z)])
    }

    pub fn waypoints(&self) -> &[(f64, f64)] {
        &self.waypoints
    }
}

impl VerticalMotion for HeightCurve {
    fn sample(&self, t: f64) -> (f64, f64, f64) {
        let w = &self.waypoints;
        if t <= w[0].0 {
            return (w[0].1, 0.0, 0.0);
        }
        let last = w[w.len() - 1];
        if t >= last.0 {
            return (last.1, 0.0, 0.0);
        }
        let i = w.partition_point(|p| p.0 <= t) - 1;
        let (t0, z0) = w[i];
        let (t1, z1) = w[i + 1];
        let h = t1 - t0;
        let s = (t - t0) / h;
        let dz = z1 - z0;
        (
            z0 + dz * s * s * (3.0 - 2.0 * s),
            dz * 6.0 * s * (1.0 - s) / h,
            dz * (6.0 - 12.0 * s) / (h * h),
        )
    }
}

/// Height samples and the derived natural frequency at every knot.
#[derive(Debug, Clone, PartialEq)]
pub struct VerticalProfile {
    pub curve: HeightCurve,
    pub period: f64,
    pub g: f64,
    pub z: Vec<f64>,
    pub zd: Vec<f64>,
    pub zdd: Vec<f64>,
    pub omega: Vec<f64>,
    pub omega_dot: Vec<f64>,
}

impl VerticalProfile {
    fn clamp(&self, k: usize) -> usize {
        k.min(self.z.len() - 1)
    }

    /// Frequency at knot `k`; knots past the end repeat the last sample.
    pub fn omega_at(&self, k: usize) -> Omega {
        let k = self.clamp(k);
        Omega {
            omega: self.omega[k],
            omega_dot: self.omega_dot[k],
        }
    }

    pub fn zdd_at(&self, k: usize) -> f64 {
        self.zdd[self.clamp(k)]
    }

    pub fn max_omega(&self) -> f64 {
        self.omega.iter().cloned().fold(0.0, f64::max)
    }
}

/// Samples the height curve at `knots` points spaced by `period` and derives
/// `omega = sqrt(g / z)` with a centered-difference `omega_dot`.
pub fn build_vertical_profile(
    waypoints: &[(f64, f64)],
    period: f64,
    duration: f64,
    g: f64,
) -> Result<VerticalProfile, PlanError> {
    if !(period > 0.0) {
        return Err(PlanError::BadPeriod(period));
    }
    let curve = HeightCurve::new(waypoints.to_vec())?;
    if waypoints.len() > 1 {
        let (first, last) = (waypoints[0].0, waypoints[waypoints.len() - 1].0);
        if first > 1e-9 || last < duration - 1e-9 {
            return Err(PlanError::Waypoints(format!(
                "waypoints cover [{first}, {last}] s but the timeline spans [0, {duration}] s"
            )));
        }
    }
    let knots = (duration / period).round() as usize + 1;
    let omega_of = |t: f64| -> Result<f64, PlanError> {
        let (z, _, _) = curve.sample(t);
        natural_frequency(z, g)
            .map(|w| w.omega)
            .map_err(|source| PlanError::Profile { t, source })
    };

    let mut p = VerticalProfile {
        curve: curve.clone(),
        period,
        g,
        z: Vec::with_capacity(knots),
        zd: Vec::with_capacity(knots),
        zdd: Vec::with_capacity(knots),
        omega: Vec::with_capacity(knots),
        omega_dot: Vec::with_capacity(knots),
    };
    for k in 0..knots {
        let t = k as f64 * period;
        let (z, zd, zdd) = curve.sample(t);
        if !(g + zdd > 0.0) {
            return Err(PlanError::Profile {
                t,
                source: crate::error::ModelError::FreeFall(g + zdd),
            });
        }
        let omega = omega_of(t)?;
        if !(omega > OMEGA_MIN) {
            return Err(PlanError::Profile {
                t,
                source: crate::error::ModelError::FrequencyTooLow {
                    omega,
                    bound: OMEGA_MIN,
                },
            });
        }
        let omega_dot = (omega_of(t + period)? - omega_of(t - period)?) / (2.0 * period);
        if !(omega * omega - omega_dot > 0.0) {
            return Err(PlanError::Profile {
                t,
                source: crate::error::ModelError::SingularVrp(omega * omega - omega_dot),
            });
        }
        p.z.push(z);
        p.zd.push(zd);
        p.zdd.push(zdd);
        p.omega.push(omega);
        p.omega_dot.push(omega_dot);
    }
    Ok(p)
}

/// CoP and DCM references at every knot.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceTrajectories {
    pub cop: Vec<[f64; 2]>,
    pub dcm: Vec<[f64; 2]>,
}

fn lerp(a: [f64; 2], b: [f64; 2], s: f64) -> [f64; 2] {
    [a[0] + (b[0] - a[0]) * s, a[1] + (b[1] - a[1]) * s]
}

fn midpoint(a: [f64; 2], b: [f64; 2]) -> [f64; 2] {
    lerp(a, b, 0.5)
}

/// Piecewise-linear CoP reference: foot centre in SSP, a ramp between
/// consecutive stance feet in DSP. The initial DSP holds the midpoint of the
/// feet for its first half and then shifts onto the first stance foot; the
/// final DSP shifts back to the midpoint over its first half and holds it.
pub fn build_reference_cop_with(footholds: &[Foothold], timeline: &PhaseTimeline) -> Vec<[f64; 2]> {
    let c = |j: usize| footholds[j].pos;
    (0..=timeline.tick_count())
        .map(|k| {
            let seg = timeline.segment_at(k);
            let s = timeline.phase_fraction(k);
            match (seg.kind, seg.feet) {
                (PhaseKind::Ssp, (i, _)) => c(i),
                (PhaseKind::Dsp, (a, Some(b))) => lerp(c(a), c(b), s),
                (PhaseKind::InitialDsp, (a, Some(b))) => {
                    lerp(midpoint(c(a), c(b)), c(b), (2.0 * s - 1.0).max(0.0))
                }
                (PhaseKind::FinalDsp, (a, Some(b))) => {
                    lerp(c(a), midpoint(c(a), c(b)), (2.0 * s).min(1.0))
                }
                (_, (a, None)) => c(a),
            }
        })
        .collect()
}

pub fn build_reference_cop(plan: &FootstepPlan, timeline: &PhaseTimeline) -> Vec<[f64; 2]> {
    build_reference_cop_with(&plan.footholds, timeline)
}

/// DCM reference by backward recursion of the discrete momentum-free DCM
/// dynamics, ending on the final CoP reference.
pub fn build_reference_dcm(
    cop_ref: &[[f64; 2]],
    profile: &VerticalProfile,
    period: f64,
) -> Vec<[f64; 2]> {
    let n = cop_ref.len();
    let mut xi = vec![[0.0; 2]; n];
    xi[n - 1] = cop_ref[n - 1];
    for k in (0..n - 1).rev() {
        let a = period * profile.omega_at(k).divergence_rate();
        for axis in 0..2 {
            xi[k][axis] = (xi[k + 1][axis] + a * cop_ref[k][axis]) / (1.0 + a);
        }
    }
    xi
}

pub fn build_references(
    plan: &FootstepPlan,
    timeline: &PhaseTimeline,
    profile: &VerticalProfile,
) -> ReferenceTrajectories {
    let cop = build_reference_cop(plan, timeline);
    let dcm = build_reference_dcm(&cop, profile, timeline.period);
    ReferenceTrajectories { cop, dcm }
}

/// Interval hull `[lo, hi]` per axis of the given foot rectangles.
pub fn support_interval(centres: &[[f64; 2]], half_extents: [f64; 2]) -> [[f64; 2]; 2] {
    let mut out = [[f64::INFINITY, f64::NEG_INFINITY]; 2];
    for c in centres {
        for axis in 0..2 {
            out[axis][0] = out[axis][0].min(c[axis] - half_extents[axis]);
            out[axis][1] = out[axis][1].max(c[axis] + half_extents[axis]);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn fig2_params() -> GaitParams {
        GaitParams {
            step_count: 5,
            step_length: 0.4,
            step_width: 0.2,
            durations: PhaseDurations {
                initial_dsp: 2.16,
                dsp: 0.18,
                ssp: 0.84,
                final_dsp: 1.8,
            },
            period: DEFAULT_PERIOD,
            half_extents: DEFAULT_HALF_EXTENTS,
        }
    }

    #[test]
    fn fig2_timeline_total() {
        let (plan, tl) = build_plan(&fig2_params()).unwrap();
        assert_relative_eq!(tl.duration(), 8.88, epsilon = 1e-9);
        assert_eq!(tl.tick_count(), 148);
        assert_eq!(tl.segments.len(), 5 + 4 + 2);
        assert_eq!(plan.footholds.len(), 7);
        assert_eq!(tl.segments[0].kind, PhaseKind::InitialDsp);
        assert_eq!(tl.segments.last().unwrap().kind, PhaseKind::FinalDsp);
        for w in plan.footholds.windows(2) {
            assert_ne!(w[0].side, w[1].side);
        }
    }

    #[test]
    fn fig4_timeline_total() {
        let p = GaitParams {
            step_count: 3,
            durations: PhaseDurations {
                initial_dsp: 1.0,
                dsp: 0.2,
                ssp: 0.6,
                final_dsp: 2.0,
            },
            period: 0.05,
            ..fig2_params()
        };
        let (_, tl) = build_plan(&p).unwrap();
        assert_relative_eq!(tl.duration(), 5.2, epsilon = 1e-9);
        assert_eq!(tl.tick_count(), 104);
        // 0.06 s does not divide the 1 s initial DSP.
        assert!(build_plan(&GaitParams { period: 0.06, ..p }).is_err());
    }

    #[test]
    fn single_step_in_place() {
        let p = GaitParams {
            step_count: 1,
            step_length: 0.0,
            ..fig2_params()
        };
        let (plan, tl) = build_plan(&p).unwrap();
        let kinds: Vec<_> = tl.segments.iter().map(|s| s.kind).collect();
        assert_eq!(
            kinds,
            [PhaseKind::InitialDsp, PhaseKind::Ssp, PhaseKind::FinalDsp]
        );
        assert!(plan.footholds.iter().all(|f| f.pos[0] == 0.0));
    }

    #[test]
    fn rejects_non_multiple_duration() {
        let mut p = fig2_params();
        p.durations.ssp = 0.85;
        assert!(matches!(
            build_plan(&p),
            Err(PlanError::NotMultipleOfPeriod { name: "SSP", .. })
        ));
        p.durations.ssp = 0.84;
        p.step_count = 0;
        assert_eq!(build_plan(&p), Err(PlanError::NoSteps));
    }

    #[test]
    fn reference_cop_rules() {
        let (plan, tl) = build_plan(&fig2_params()).unwrap();
        let cop = build_reference_cop(&plan, &tl);
        // SSP 2 stands on foothold 2 at x = 0.4.
        let ssp2 = tl.segments[3];
        assert_eq!(ssp2.kind, PhaseKind::Ssp);
        assert_eq!(cop[ssp2.start_tick + 3][0], 0.4);
        // The DSP after it ramps from 0.4 to 0.8; 0.18 s is three ticks so
        // the ramp midpoint falls between knots: check the linear rule itself.
        let dsp = tl.segments[4];
        let k = dsp.start_tick + 1;
        let s = 1.0 / 3.0;
        assert_relative_eq!(cop[k][0], 0.4 + 0.4 * s, epsilon = 1e-12);
        let last = *cop.last().unwrap();
        assert_relative_eq!(last[0], 1.8, epsilon = 1e-12);
        assert_relative_eq!(last[1], 0.0, epsilon = 1e-12);
    }

    #[test]
    fn reference_cop_midpoint_of_even_dsp() {
        let p = GaitParams {
            durations: PhaseDurations {
                dsp: 0.24,
                ..fig2_params().durations
            },
            ..fig2_params()
        };
        let (plan, tl) = build_plan(&p).unwrap();
        let cop = build_reference_cop(&plan, &tl);
        let dsp = tl.segments[4];
        assert_eq!(dsp.feet, (2, Some(3)));
        assert_relative_eq!(cop[dsp.start_tick + 2][0], 0.6, epsilon = 1e-12);
    }

    #[test]
    fn reference_cop_inside_support() {
        let (plan, tl) = build_plan(&fig2_params()).unwrap();
        let cop = build_reference_cop(&plan, &tl);
        for (k, c) in cop.iter().enumerate() {
            let seg = tl.segment_at(k);
            let mut feet = vec![plan.footholds[seg.feet.0].pos];
            if let Some(b) = seg.feet.1 {
                feet.push(plan.footholds[b].pos);
            }
            let box_ = support_interval(&feet, plan.half_extents);
            for axis in 0..2 {
                assert!(c[axis] >= box_[axis][0] - 1e-12 && c[axis] <= box_[axis][1] + 1e-12);
            }
        }
    }

    #[test]
    fn constant_profile() {
        let p = build_vertical_profile(&[(0.0, 0.75)], 0.06, 1.2, 9.81).unwrap();
        assert_eq!(p.omega.len(), 21);
        for k in 0..p.omega.len() {
            assert_relative_eq!(p.omega[k], (9.81f64 / 0.75).sqrt(), epsilon = 1e-15);
            assert_eq!(p.omega_dot[k], 0.0);
        }
    }

    #[test]
    fn rising_profile() {
        let wp = [(0.0, 0.75), (1.2, 0.75), (2.4, 0.90), (3.6, 0.90)];
        let p = build_vertical_profile(&wp, 0.06, 3.6, 9.81).unwrap();
        // Plateaus: zero rate away from the ramp boundaries.
        assert_eq!(p.omega_dot[5], 0.0);
        assert_eq!(p.omega_dot[55], 0.0);
        for k in 20..40 {
            assert!(p.omega[k + 1] <= p.omega[k]);
        }
        assert!(p.omega_dot[30] < 0.0);
        assert_relative_eq!(p.z[60], 0.9, epsilon = 1e-12);
    }

    #[test]
    fn profile_errors() {
        assert!(build_vertical_profile(&[(0.0, 0.8), (0.0, 0.9)], 0.06, 1.0, 9.81).is_err());
        assert!(build_vertical_profile(&[(0.0, -0.8)], 0.06, 1.0, 9.81).is_err());
        assert!(build_vertical_profile(&[(0.5, 0.8), (2.0, 0.9)], 0.06, 1.8, 9.81).is_err());
        // 0.5 m drop in 0.1 s: the downward acceleration exceeds g.
        assert!(matches!(
            build_vertical_profile(&[(0.0, 0.9), (0.12, 0.4), (0.6, 0.4)], 0.01, 0.6, 9.81),
            Err(PlanError::Profile { .. })
        ));
    }

    #[test]
    fn reference_dcm_recursion() {
        let profile = build_vertical_profile(&[(0.0, 0.75)], 0.06, 0.06, 9.81).unwrap();
        let dcm = build_reference_dcm(&[[0.4, 0.0], [0.6, 0.0]], &profile, 0.06);
        assert_eq!(dcm[1], [0.6, 0.0]);
        let w = (9.81f64 / 0.75).sqrt();
        assert_relative_eq!(
            dcm[0][0],
            (0.6 + 0.06 * w * 0.4) / (1.0 + 0.06 * w),
            epsilon = 1e-14
        );
        assert!((dcm[0][0] - 0.5643).abs() < 1e-4);
    }

    #[test]
    fn reference_dcm_fixed_point_and_closed_form() {
        let (plan, tl) = build_plan(&fig2_params()).unwrap();
        let profile =
            build_vertical_profile(&[(0.0, 0.75)], tl.period, tl.duration(), 9.81).unwrap();
        let refs = build_references(&plan, &tl, &profile);
        let n = refs.cop.len();
        // The last 15 knots sit on the held midpoint.
        for k in n - 15..n {
            assert_relative_eq!(refs.dcm[k][0], refs.cop[k][0], epsilon = 1e-12);
        }
        // Constant omega: compare with the closed-form sum
        // xi_k = b^(N-k) cop_N + sum_j (1 - b) b^(j-k) cop_j, b = 1 / (1 + T w).
        let w = profile.omega[0];
        let b = 1.0 / (1.0 + tl.period * w);
        for k in (0..n).step_by(7) {
            let mut acc = b.powi((n - 1 - k) as i32) * refs.cop[n - 1][0];
            for j in k..n - 1 {
                acc += (1.0 - b) * b.powi((j - k) as i32) * refs.cop[j][0];
            }
            assert_relative_eq!(refs.dcm[k][0], acc, epsilon = 1e-12);
        }
    }
}
