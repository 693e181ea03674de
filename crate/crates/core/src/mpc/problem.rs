//! Cost and constraint assembly over the decision vector
//! `Gamma_U = [Hddot_0, copdot_0, ..., Hddot_{N-1}, copdot_{N-1}, p_1, ..., p_m]`.

use std::fmt;

use nalgebra::{DMatrix, DVector, Vector4};

use super::dynamics::{CondensedSystem, COM, COP, MOMENTUM, NU, XI};
use super::selection::FootSelection;
use super::{MpcConfig, Weights};
use crate::gait_plan::{FootSide, Foothold, PhaseTimeline};

/// Everything needed to build one axis' QP at one control tick.
#[derive(Debug, Clone)]
pub struct AxisHorizon<'a> {
    pub axis: usize,
    pub tick: usize,
    pub psi0: Vector4<f64>,
    pub cs: &'a CondensedSystem,
    pub sel: &'a FootSelection,
    pub timeline: &'a PhaseTimeline,
    /// Nominal CoP and DCM references for horizon ticks `1..=N`.
    pub cop_ref: Vec<f64>,
    pub dcm_ref: Vec<f64>,
    pub nominal_feet: &'a [Foothold],
    /// Current foothold estimates: landed feet are fixed at these values.
    pub feet: &'a [Foothold],
    /// CoP bound half-extent on this axis around each foothold.
    pub half_extent: f64,
}

/// Affine function `coeffs . Gamma_U + constant`.
#[derive(Debug, Clone)]
struct Affine {
    coeffs: DVector<f64>,
    constant: f64,
}

impl Affine {
    fn constant(n: usize, c: f64) -> Self {
        Self {
            coeffs: DVector::zeros(n),
            constant: c,
        }
    }

    fn sub(mut self, other: &Affine) -> Self {
        self.coeffs -= &other.coeffs;
        self.constant -= other.constant;
        self
    }

    fn shift(mut self, c: f64) -> Self {
        self.constant += c;
        self
    }
}

impl<'a> AxisHorizon<'a> {
    pub fn horizon(&self) -> usize {
        self.cs.horizon()
    }

    pub fn dim(&self) -> usize {
        NU * self.horizon() + self.sel.previewed.len()
    }

    fn foot_column(&self, col: usize) -> usize {
        NU * self.horizon() + col
    }

    /// State component at horizon tick `i` (1-based) as an affine function.
    fn state(&self, i: usize, component: usize, free: &DVector<f64>) -> Affine {
        let row = CondensedSystem::row(i, component);
        let mut coeffs = DVector::zeros(self.dim());
        let nu = NU * self.horizon();
        coeffs
            .rows_mut(0, nu)
            .tr_copy_from(&self.cs.phi_u1.row(row));
        Affine {
            coeffs,
            constant: free[row],
        }
    }

    fn input(&self, i: usize, which: usize) -> Affine {
        let mut a = Affine::constant(self.dim(), 0.0);
        a.coeffs[NU * i + which] = 1.0;
        a
    }

    /// Position of foothold `j` on this axis: a decision variable when
    /// previewed, otherwise its current estimate.
    fn foot(&self, j: usize) -> Affine {
        match self.sel.column_of(j) {
            Some(col) => {
                let mut a = Affine::constant(self.dim(), 0.0);
                a.coeffs[self.foot_column(col)] = 1.0;
                a
            }
            None => Affine::constant(self.dim(), self.feet[j].pos[self.axis]),
        }
    }

    /// CoP reference at tick `i`, shifted by the displacement of its assigned foot.
    fn cop_reference(&self, i: usize) -> Affine {
        let j = self.sel.assigned[i - 1];
        let nominal = self.nominal_feet[j].pos[self.axis];
        self.foot(j).shift(self.cop_ref[i - 1] - nominal)
    }
}

/// Quadratic cost `1/2 x'Hx + f'x + constant`.
#[derive(Debug, Clone, PartialEq)]
pub struct CostTerms {
    pub hessian: DMatrix<f64>,
    pub gradient: DVector<f64>,
    pub constant: f64,
}

impl CostTerms {
    pub fn value(&self, x: &DVector<f64>) -> f64 {
        0.5 * x.dot(&(&self.hessian * x)) + self.gradient.dot(x) + self.constant
    }
}

pub fn build_cost(h: &AxisHorizon, weights: &Weights) -> CostTerms {
    let n = h.dim();
    let big_n = h.horizon();
    let free = h.cs.free_response(&h.psi0);
    let mut residuals: Vec<(f64, Affine)> = Vec::with_capacity(5 * big_n);
    for i in 1..=big_n {
        residuals.push((weights.cop_rate, h.input(i - 1, 1)));
        residuals.push((weights.momentum, h.state(i, MOMENTUM, &free)));
        residuals.push((weights.momentum_rate, h.input(i - 1, 0)));
        residuals.push((
            weights.cop_tracking,
            h.state(i, COP, &free).sub(&h.cop_reference(i)),
        ));
        residuals.push((
            weights.dcm_tracking,
            h.state(i, XI, &free).shift(-h.dcm_ref[i - 1]),
        ));
    }
    let rows = residuals.iter().filter(|(w, _)| *w > 0.0).count();
    let mut r = DMatrix::zeros(rows, n);
    let mut wr = DMatrix::zeros(rows, n);
    let mut wb = DVector::zeros(rows);
    let mut constant = 0.0;
    for (row, (w, a)) in residuals.iter().filter(|(w, _)| *w > 0.0).enumerate() {
        r.row_mut(row).tr_copy_from(&a.coeffs);
        wr.row_mut(row).tr_copy_from(&(&a.coeffs * *w));
        wb[row] = *w * a.constant;
        constant += w * a.constant * a.constant;
    }
    CostTerms {
        hessian: 2.0 * r.tr_mul(&wr),
        gradient: 2.0 * r.tr_mul(&wb),
        constant,
    }
}

/// Identifies a constraint row for diagnostics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ConstraintTag {
    TerminalCopDcm,
    TerminalCopCom,
    TerminalMomentum,
    TerminalDcmTracking,
    PinnedMomentumRate { tick: usize },
    CopUpper { tick: usize },
    CopLower { tick: usize },
    ReachUpper { foot: usize },
    ReachLower { foot: usize },
    DeviationUpper { foot: usize },
    DeviationLower { foot: usize },
    Clearance { foot: usize },
}

impl fmt::Display for ConstraintTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::TerminalCopDcm => write!(f, "terminal cop = dcm"),
            Self::TerminalCopCom => write!(f, "terminal cop = com"),
            Self::TerminalMomentum => write!(f, "terminal momentum rate = 0"),
            Self::TerminalDcmTracking => write!(f, "terminal dcm = reference"),
            Self::PinnedMomentumRate { tick } => {
                write!(f, "momentum acceleration pinned at +{tick}")
            }
            Self::CopUpper { tick } => write!(f, "cop upper bound at +{tick}"),
            Self::CopLower { tick } => write!(f, "cop lower bound at +{tick}"),
            Self::ReachUpper { foot } => write!(f, "foothold {foot} reach (ahead of com)"),
            Self::ReachLower { foot } => write!(f, "foothold {foot} reach (behind com)"),
            Self::DeviationUpper { foot } => write!(f, "foothold {foot} max deviation (+)"),
            Self::DeviationLower { foot } => write!(f, "foothold {foot} max deviation (-)"),
            Self::Clearance { foot } => write!(f, "foothold {foot} lateral clearance"),
        }
    }
}

/// `C x + D = 0` and `E x + F <= 0` with one tag per row.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintSet {
    pub eq_matrix: DMatrix<f64>,
    pub eq_offset: DVector<f64>,
    pub eq_tags: Vec<ConstraintTag>,
    pub ineq_matrix: DMatrix<f64>,
    pub ineq_offset: DVector<f64>,
    pub ineq_tags: Vec<ConstraintTag>,
}

fn stack(
    n: usize,
    rows: Vec<(Affine, ConstraintTag)>,
) -> (DMatrix<f64>, DVector<f64>, Vec<ConstraintTag>) {
    let mut m = DMatrix::zeros(rows.len(), n);
    let mut v = DVector::zeros(rows.len());
    let mut tags = Vec::with_capacity(rows.len());
    for (i, (a, tag)) in rows.into_iter().enumerate() {
        m.row_mut(i).tr_copy_from(&a.coeffs);
        v[i] = a.constant;
        tags.push(tag);
    }
    (m, v, tags)
}

/// Equality rows at the horizon end plus the support and foothold inequalities.
///
/// When the plan ends inside the horizon, the last horizon knot must satisfy
/// the rest conditions (CoP on both DCM and CoM, zero momentum rate). The horizon keeps its
/// length past the plan end, with references held at their final values.
/// Otherwise the DCM must reach its reference at the end of the horizon.
pub fn build_constraints(h: &AxisHorizon, cfg: &MpcConfig) -> ConstraintSet {
    let n = h.dim();
    let big_n = h.horizon();
    let free = h.cs.free_response(&h.psi0);
    let mut eq = Vec::new();
    let mut ineq = Vec::new();

    if h.tick + big_n >= h.timeline.tick_count() {
        let i = big_n;
        let cop = h.state(i, COP, &free);
        eq.push((
            cop.clone().sub(&h.state(i, XI, &free)),
            ConstraintTag::TerminalCopDcm,
        ));
        eq.push((
            cop.sub(&h.state(i, COM, &free)),
            ConstraintTag::TerminalCopCom,
        ));
        eq.push((h.state(i, MOMENTUM, &free), ConstraintTag::TerminalMomentum));
    } else {
        eq.push((
            h.state(big_n, XI, &free).shift(-h.dcm_ref[big_n - 1]),
            ConstraintTag::TerminalDcmTracking,
        ));
    }
    if !cfg.cmp_modulation {
        for i in 0..big_n {
            eq.push((h.input(i, 0), ConstraintTag::PinnedMomentumRate { tick: i }));
        }
    }

    let half = h.half_extent;
    for i in 1..=big_n {
        let seg = h.timeline.knot_support(h.tick + i);
        let (lo, hi) = match seg.feet {
            (a, None) => (a, a),
            (a, Some(b)) => {
                if h.nominal_feet[b].pos[h.axis] < h.nominal_feet[a].pos[h.axis] {
                    (b, a)
                } else {
                    (a, b)
                }
            }
        };
        let cop = h.state(i, COP, &free);
        ineq.push((
            cop.clone().sub(&h.foot(hi)).shift(-half),
            ConstraintTag::CopUpper { tick: i },
        ));
        ineq.push((
            h.foot(lo).sub(&cop).shift(-half),
            ConstraintTag::CopLower { tick: i },
        ));
    }

    for &foot in &h.sel.previewed {
        let p = h.foot(foot);
        let landing = h
            .timeline
            .landing_tick(foot)
            .saturating_sub(h.tick)
            .clamp(1, big_n);
        let com = h.state(landing, COM, &free);
        ineq.push((
            p.clone().sub(&com).shift(-cfg.reach),
            ConstraintTag::ReachUpper { foot },
        ));
        ineq.push((
            com.sub(&p).shift(-cfg.reach),
            ConstraintTag::ReachLower { foot },
        ));

        let nominal = h.nominal_feet[foot].pos[h.axis];
        let dev = cfg.max_step_deviation[h.axis];
        ineq.push((
            p.clone().shift(-nominal - dev),
            ConstraintTag::DeviationUpper { foot },
        ));
        ineq.push((
            Affine::constant(n, nominal - dev).sub(&p),
            ConstraintTag::DeviationLower { foot },
        ));

        if h.axis == 1 && foot > 0 {
            let prev = h.foot(foot - 1);
            let gap = match h.nominal_feet[foot].side {
                FootSide::Left => prev.sub(&p),
                FootSide::Right => p.sub(&prev),
            };
            ineq.push((
                gap.shift(cfg.min_foot_clearance),
                ConstraintTag::Clearance { foot },
            ));
        }
    }

    let (eq_matrix, eq_offset, eq_tags) = stack(n, eq);
    let (ineq_matrix, ineq_offset, ineq_tags) = stack(n, ineq);
    ConstraintSet {
        eq_matrix,
        eq_offset,
        eq_tags,
        ineq_matrix,
        ineq_offset,
        ineq_tags,
    }
}
