//! Dense convex QP solver.
//!
//! Solves
//!
//! ```text
//!     minimize    1/2 x' H x + x' f
//!     subject to  C x + D  = 0
//!                 E x + F <= 0
//! ```
//!
//! Equalities are eliminated through an orthonormal nullspace basis taken
//! from the SVD of `C'`. The reduced problem is solved with the
//! Goldfarb-Idnani dual active-set method, keeping `J = L^-T Q` and the
//! triangular factor `R` up to date with Givens rotations as constraints enter
//! and leave the active set.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

pub const DEFAULT_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct QpProblem {
    pub hessian: DMatrix<f64>,
    pub gradient: DVector<f64>,
    pub eq_matrix: DMatrix<f64>,
    pub eq_offset: DVector<f64>,
    pub ineq_matrix: DMatrix<f64>,
    pub ineq_offset: DVector<f64>,
}

impl QpProblem {
    pub fn unconstrained(hessian: DMatrix<f64>, gradient: DVector<f64>) -> Self {
        let n = gradient.len();
        Self {
            hessian,
            gradient,
            eq_matrix: DMatrix::zeros(0, n),
            eq_offset: DVector::zeros(0),
            ineq_matrix: DMatrix::zeros(0, n),
            ineq_offset: DVector::zeros(0),
        }
    }

    pub fn with_equalities(mut self, c: DMatrix<f64>, d: DVector<f64>) -> Self {
        self.eq_matrix = c;
        self.eq_offset = d;
        self
    }

    pub fn with_inequalities(mut self, e: DMatrix<f64>, f: DVector<f64>) -> Self {
        self.ineq_matrix = e;
        self.ineq_offset = f;
        self
    }

    pub fn dim(&self) -> usize {
        self.gradient.len()
    }

    pub fn objective(&self, x: &DVector<f64>) -> f64 {
        0.5 * x.dot(&(&self.hessian * x)) + x.dot(&self.gradient)
    }

    fn check(&self) -> Result<(), QpError> {
        let n = self.dim();
        let ok = self.hessian.shape() == (n, n)
            && self.eq_matrix.ncols() == n
            && self.eq_matrix.nrows() == self.eq_offset.len()
            && self.ineq_matrix.ncols() == n
            && self.ineq_matrix.nrows() == self.ineq_offset.len();
        if ok {
            Ok(())
        } else {
            Err(QpError::Dimensions)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QpError {
    #[error("inconsistent problem dimensions")]
    Dimensions,
    #[error("reduced Hessian is not positive definite")]
    NotPositiveDefinite,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Infeasibility {
    /// `C x + D = 0` has no solution; `residual` is the least-squares residual.
    Equalities { residual: f64 },
    /// Inequality `violated` cannot be satisfied together with `active`
    /// (and the equalities).
    Inequalities { violated: usize, active: Vec<usize> },
}

#[derive(Debug, Clone, PartialEq)]
pub enum QpStatus {
    Optimal,
    Infeasible(Infeasibility),
    MaxIterations,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct KktResiduals {
    pub stationarity: f64,
    pub primal: f64,
    pub complementarity: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QpSolution {
    pub x: DVector<f64>,
    pub eq_multipliers: DVector<f64>,
    pub ineq_multipliers: DVector<f64>,
    pub status: QpStatus,
    pub iterations: usize,
    pub residuals: KktResiduals,
    /// Inequalities in the final active set.
    pub active: Vec<usize>,
}

impl QpSolution {
    pub fn is_optimal(&self) -> bool {
        self.status == QpStatus::Optimal
    }
}

/// Residual norms of the KKT conditions at `s`:
/// stationarity `|Hx + f + C'l_C + E'l_E|_inf`, primal violation of both
/// constraint blocks, and `max |l_E,i (Ex + F)_i|`.
pub fn kkt_residual(p: &QpProblem, s: &QpSolution) -> KktResiduals {
    let x = &s.x;
    let mut grad = &p.hessian * x + &p.gradient;
    if p.eq_matrix.nrows() > 0 {
        grad += p.eq_matrix.tr_mul(&s.eq_multipliers);
    }
    if p.ineq_matrix.nrows() > 0 {
        grad += p.ineq_matrix.tr_mul(&s.ineq_multipliers);
    }
    let eq = &p.eq_matrix * x + &p.eq_offset;
    let ineq = &p.ineq_matrix * x + &p.ineq_offset;
    let primal = eq
        .iter()
        .map(|v| v.abs())
        .chain(ineq.iter().map(|v| v.max(0.0)))
        .fold(0.0, f64::max);
    let complementarity = ineq
        .iter()
        .zip(s.ineq_multipliers.iter())
        .map(|(g, l)| (g * l).abs())
        .fold(0.0, f64::max);
    KktResiduals {
        stationarity: grad.amax(),
        primal,
        complementarity,
    }
}

struct Nullspace {
    /// Particular solution of the equalities.
    xp: DVector<f64>,
    /// Orthonormal basis of `ker C` (n x (n - rank)).
    z: DMatrix<f64>,
    /// Range basis and pseudo-inverse pieces for recovering equality multipliers.
    y: DMatrix<f64>,
    v: DMatrix<f64>,
    sigma: Vec<f64>,
}

fn eliminate_equalities(p: &QpProblem) -> Result<Nullspace, f64> {
    let n = p.dim();
    let m = p.eq_matrix.nrows();
    if m == 0 {
        return Ok(Nullspace {
            xp: DVector::zeros(n),
            z: DMatrix::identity(n, n),
            y: DMatrix::zeros(n, 0),
            v: DMatrix::zeros(0, 0),
            sigma: Vec::new(),
        });
    }
    // Pad C' with zero columns so the SVD returns a full n x n left basis.
    let cols = m.max(n);
    let mut ct = DMatrix::zeros(n, cols);
    ct.view_mut((0, 0), (n, m))
        .copy_from(&p.eq_matrix.transpose());
    let svd = ct.svd(true, true);
    let u = svd.u.expect("left singular vectors");
    let vt = svd.v_t.expect("right singular vectors");
    let smax = svd.singular_values.amax();
    let thresh = smax * 1e-10;
    let (mut range, mut null) = (Vec::new(), Vec::new());
    for i in 0..n {
        let sv = if i < svd.singular_values.len() {
            svd.singular_values[i]
        } else {
            0.0
        };
        if smax > 0.0 && sv > thresh {
            range.push(i);
        } else {
            null.push(i);
        }
    }
    let y = DMatrix::from_columns(&range.iter().map(|&i| u.column(i)).collect::<Vec<_>>());
    let z = if null.is_empty() {
        DMatrix::zeros(n, 0)
    } else {
        DMatrix::from_columns(&null.iter().map(|&i| u.column(i)).collect::<Vec<_>>())
    };
    // V restricted to the real constraint rows, one column per kept singular value.
    let v = DMatrix::from_fn(m, range.len(), |r, c| vt[(range[c], r)]);
    let sigma: Vec<f64> = range.iter().map(|&i| svd.singular_values[i]).collect();

    // C = V S U', so x_p = U_r S^-1 V_r' (-D).
    let mut coeff = v.tr_mul(&(-&p.eq_offset));
    for (c, s) in coeff.iter_mut().zip(&sigma) {
        *c /= s;
    }
    let xp = if range.is_empty() {
        DVector::zeros(n)
    } else {
        &y * coeff
    };
    let residual = (&p.eq_matrix * &xp + &p.eq_offset).amax();
    if residual > 1e-9 * (1.0 + p.eq_offset.amax()) {
        return Err(residual);
    }
    Ok(Nullspace { xp, z, y, v, sigma })
}

fn givens(a: f64, b: f64) -> (f64, f64, f64) {
    let r = a.hypot(b);
    if r == 0.0 {
        (1.0, 0.0, 0.0)
    } else {
        (a / r, b / r, r)
    }
}

fn rotate_cols(m: &mut DMatrix<f64>, i: usize, j: usize, c: f64, s: f64) {
    for row in 0..m.nrows() {
        let (a, b) = (m[(row, i)], m[(row, j)]);
        m[(row, i)] = c * a + s * b;
        m[(row, j)] = -s * a + c * b;
    }
}

/// Working state of the dual active-set iteration on the reduced problem
/// `min 1/2 z'Gz + a'z  s.t.  N' z >= b`.
struct DualActiveSet<'a> {
    normals: &'a DMatrix<f64>,
    rhs: &'a DVector<f64>,
    j: DMatrix<f64>,
    r: DMatrix<f64>,
    active: Vec<usize>,
    u: Vec<f64>,
    z: DVector<f64>,
}

enum Step {
    Added,
    Infeasible,
}

impl<'a> DualActiveSet<'a> {
    fn q(&self) -> usize {
        self.active.len()
    }

    fn slack(&self, i: usize) -> f64 {
        self.normals.column(i).dot(&self.z) - self.rhs[i]
    }

    fn add(&mut self, mut d: DVector<f64>) {
        let q = self.q();
        let nz = d.len();
        for i in (q + 1..nz).rev() {
            if d[i] == 0.0 {
                continue;
            }
            let (c, s, r) = givens(d[i - 1], d[i]);
            d[i - 1] = r;
            d[i] = 0.0;
            rotate_cols(&mut self.j, i - 1, i, c, s);
        }
        for row in 0..=q {
            self.r[(row, q)] = d[row];
        }
    }

    fn drop(&mut self, k: usize) {
        let q = self.q();
        for col in k..q - 1 {
            for row in 0..q {
                self.r[(row, col)] = self.r[(row, col + 1)];
            }
        }
        for row in 0..q {
            self.r[(row, q - 1)] = 0.0;
        }
        for col in k..q - 1 {
            let (c, s, rr) = givens(self.r[(col, col)], self.r[(col + 1, col)]);
            self.r[(col, col)] = rr;
            self.r[(col + 1, col)] = 0.0;
            for cc in col + 1..q - 1 {
                let (a, b) = (self.r[(col, cc)], self.r[(col + 1, cc)]);
                self.r[(col, cc)] = c * a + s * b;
                self.r[(col + 1, cc)] = -s * a + c * b;
            }
            rotate_cols(&mut self.j, col, col + 1, c, s);
        }
        self.active.remove(k);
        self.u.remove(k);
    }

    /// Brings constraint `p` into the active set, dropping constraints whose
    /// multipliers would turn negative on the way.
    fn activate(&mut self, p: usize, iterations: &mut usize, cap: usize) -> Option<Step> {
        let np = self.normals.column(p).into_owned();
        let mut u_p = 0.0;
        loop {
            *iterations += 1;
            if *iterations > cap {
                return None;
            }
            let q = self.q();
            let nz = self.z.len();
            let d = self.j.tr_mul(&np);
            let d2 = d.rows(q, nz - q);
            let step = self.j.columns(q, nz - q) * d2;
            let r = if q > 0 {
                self.r
                    .view((0, 0), (q, q))
                    .solve_upper_triangular(&d.rows(0, q).into_owned())
                    .unwrap_or_else(|| DVector::zeros(q))
            } else {
                DVector::zeros(0)
            };

            let mut t1 = f64::INFINITY;
            let mut k_drop = None;
            let rmax = r.amax();
            for i in 0..q {
                if r[i] > 1e-14 * rmax.max(1e-300) {
                    let ratio = self.u[i] / r[i];
                    if ratio < t1 {
                        t1 = ratio;
                        k_drop = Some(i);
                    }
                }
            }
            let dependent = d2.norm() <= 1e-12 * d.norm();
            let t2 = if dependent {
                f64::INFINITY
            } else {
                -self.slack(p) / step.dot(&np)
            };

            if t1.is_infinite() && t2.is_infinite() {
                return Some(Step::Infeasible);
            }
            let t = t1.min(t2);
            if !dependent {
                self.z.axpy(t, &step, 1.0);
            }
            for i in 0..q {
                self.u[i] -= t * r[i];
            }
            u_p += t;
            if !dependent && t2 <= t1 {
                self.add(d);
                self.active.push(p);
                self.u.push(u_p);
                return Some(Step::Added);
            }
            self.drop(k_drop.expect("partial step has a blocking constraint"));
        }
    }
}

/// Dense QP solver. Holds only its tolerance settings; each call allocates
/// its own workspace.
#[derive(Debug, Clone)]
pub struct QpSolver {
    pub tolerance: f64,
    /// Iteration cap is `iteration_factor * max(1, #inequalities)`.
    pub iteration_factor: usize,
}

impl Default for QpSolver {
    fn default() -> Self {
        Self {
            tolerance: DEFAULT_TOLERANCE,
            iteration_factor: 50,
        }
    }
}

impl QpSolver {
    pub fn solve(
        &self,
        p: &QpProblem,
        warm_start: Option<&DVector<f64>>,
    ) -> Result<QpSolution, QpError> {
        p.check()?;
        let n = p.dim();
        let n_eq = p.eq_matrix.nrows();
        let n_in = p.ineq_matrix.nrows();
        let mut h = p.hessian.clone();
        h = 0.5 * (&h + h.transpose());

        let ns = match eliminate_equalities(p) {
            Ok(ns) => ns,
            Err(residual) => {
                return Ok(self.finish(
                    p,
                    DVector::zeros(n),
                    DVector::zeros(n_eq),
                    DVector::zeros(n_in),
                    QpStatus::Infeasible(Infeasibility::Equalities { residual }),
                    0,
                    Vec::new(),
                ))
            }
        };
        let nz = ns.z.ncols();

        // Reduced problem in z, x = xp + Z z.
        let hz = &h * &ns.z;
        let g = ns.z.tr_mul(&hz);
        let a = ns.z.tr_mul(&(&h * &ns.xp + &p.gradient));
        let ez = &p.ineq_matrix * &ns.z;
        let normals = -ez.transpose();
        let rhs = &p.ineq_matrix * &ns.xp + &p.ineq_offset;

        let chol = if nz > 0 {
            Some(g.clone().cholesky().ok_or(QpError::NotPositiveDefinite)?)
        } else {
            None
        };
        let z0 = match &chol {
            Some(c) => -c.solve(&a),
            None => DVector::zeros(0),
        };
        let j = match &chol {
            Some(c) => c
                .l()
                .transpose()
                .solve_upper_triangular(&DMatrix::identity(nz, nz))
                .ok_or(QpError::NotPositiveDefinite)?,
            None => DMatrix::zeros(0, 0),
        };

        let preferred: Vec<bool> = match warm_start {
            Some(x) if x.len() == n => {
                let zw = ns.z.tr_mul(&(x - &ns.xp));
                (0..n_in)
                    .map(|i| {
                        let s = normals.column(i).dot(&zw) - rhs[i];
                        s.abs() <= 1e-6 * (1.0 + rhs[i].abs())
                    })
                    .collect()
            }
            _ => vec![false; n_in],
        };

        let mut state = DualActiveSet {
            normals: &normals,
            rhs: &rhs,
            j,
            r: DMatrix::zeros(nz, nz),
            active: Vec::new(),
            u: Vec::new(),
            z: z0,
        };
        let cap = self.iteration_factor * n_in.max(1);
        let viol_tol = 0.01 * self.tolerance;
        let mut iterations = 0;
        let status = loop {
            // Most violated inequality, preferring the warm-start active set.
            let mut pick: Option<(usize, f64, bool)> = None;
            for i in 0..n_in {
                if state.active.contains(&i) {
                    continue;
                }
                let s = state.slack(i);
                if s < -viol_tol * (1.0 + rhs[i].abs()) {
                    let better = match pick {
                        None => true,
                        Some((_, best, pref)) => {
                            (preferred[i] && !pref) || (preferred[i] == pref && s < best)
                        }
                    };
                    if better {
                        pick = Some((i, s, preferred[i]));
                    }
                }
            }
            let Some((pidx, _, _)) = pick else {
                break QpStatus::Optimal;
            };
            if nz == 0 {
                break QpStatus::Infeasible(Infeasibility::Inequalities {
                    violated: pidx,
                    active: Vec::new(),
                });
            }
            match state.activate(pidx, &mut iterations, cap) {
                None => break QpStatus::MaxIterations,
                Some(Step::Infeasible) => {
                    break QpStatus::Infeasible(Infeasibility::Inequalities {
                        violated: pidx,
                        active: state.active.clone(),
                    })
                }
                Some(Step::Added) => {}
            }
        };

        let x = &ns.xp + &ns.z * &state.z;
        let mut lam_in = DVector::zeros(n_in);
        for (&i, &u) in state.active.iter().zip(&state.u) {
            lam_in[i] = u.max(0.0);
        }
        // Equality multipliers: min-norm solution of C' l = -(Hx + f + E' l_E).
        let mut lam_eq = DVector::zeros(n_eq);
        if n_eq > 0 && !ns.sigma.is_empty() {
            let mut rest = &h * &x + &p.gradient;
            if n_in > 0 {
                rest += p.ineq_matrix.tr_mul(&lam_in);
            }
            let mut coeff = ns.y.tr_mul(&(-rest));
            for (c, s) in coeff.iter_mut().zip(&ns.sigma) {
                *c /= s;
            }
            lam_eq = &ns.v * coeff;
        }
        let active = state.active.clone();
        Ok(self.finish(p, x, lam_eq, lam_in, status, iterations, active))
    }

    #[allow(clippy::too_many_arguments)]
    fn finish(
        &self,
        p: &QpProblem,
        x: DVector<f64>,
        eq_multipliers: DVector<f64>,
        ineq_multipliers: DVector<f64>,
        status: QpStatus,
        iterations: usize,
        active: Vec<usize>,
    ) -> QpSolution {
        let mut sol = QpSolution {
            x,
            eq_multipliers,
            ineq_multipliers,
            status,
            iterations,
            residuals: KktResiduals::default(),
            active,
        };
        sol.residuals = kkt_residual(p, &sol);
        sol
    }
}

/// Convenience wrapper around [`QpSolver::solve`] with default settings.
pub fn solve(p: &QpProblem, warm_start: Option<&DVector<f64>>) -> Result<QpSolution, QpError> {
    QpSolver::default().solve(p, warm_start)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn unconstrained_quadratic() {
        let p = QpProblem::unconstrained(
            DMatrix::identity(2, 2) * 2.0,
            DVector::from_vec(vec![-2.0, -2.0]),
        );
        let s = solve(&p, None).unwrap();
        assert!(s.is_optimal());
        assert_relative_eq!(s.x[0], 1.0, epsilon = 1e-14);
        assert_relative_eq!(s.x[1], 1.0, epsilon = 1e-14);
    }

    #[test]
    fn active_lower_bound() {
        // min 1/2 x^2  s.t.  -x + 1 <= 0
        let p = QpProblem::unconstrained(DMatrix::identity(1, 1), DVector::zeros(1))
            .with_inequalities(
                DMatrix::from_element(1, 1, -1.0),
                DVector::from_element(1, 1.0),
            );
        let s = solve(&p, None).unwrap();
        assert!(s.is_optimal());
        assert_relative_eq!(s.x[0], 1.0, epsilon = 1e-14);
        assert_relative_eq!(s.ineq_multipliers[0], 1.0, epsilon = 1e-14);
        assert_eq!(s.active, vec![0]);
    }

    #[test]
    fn equality_and_inequality() {
        // min x^2 + y^2  s.t.  x + y = 1, x <= 0.2
        let p = QpProblem::unconstrained(DMatrix::identity(2, 2) * 2.0, DVector::zeros(2))
            .with_equalities(
                DMatrix::from_row_slice(1, 2, &[1.0, 1.0]),
                DVector::from_element(1, -1.0),
            )
            .with_inequalities(
                DMatrix::from_row_slice(1, 2, &[1.0, 0.0]),
                DVector::from_element(1, -0.2),
            );
        let s = solve(&p, None).unwrap();
        assert!(s.is_optimal());
        assert_relative_eq!(s.x[0], 0.2, epsilon = 1e-12);
        assert_relative_eq!(s.x[1], 0.8, epsilon = 1e-12);
        assert!(s.residuals.stationarity < 1e-10);
        // l_eq = -1.6, l_in = 1.2 from 2x + l_eq + l_in = 0, 2y + l_eq = 0.
        assert_relative_eq!(s.eq_multipliers[0], -1.6, epsilon = 1e-10);
        assert_relative_eq!(s.ineq_multipliers[0], 1.2, epsilon = 1e-10);
    }

    #[test]
    fn redundant_equalities() {
        let p = QpProblem::unconstrained(DMatrix::identity(2, 2), DVector::zeros(2))
            .with_equalities(
                DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 2.0, 0.0]),
                DVector::from_vec(vec![-1.0, -2.0]),
            );
        let s = solve(&p, None).unwrap();
        assert!(s.is_optimal());
        assert_relative_eq!(s.x[0], 1.0, epsilon = 1e-12);
        assert!(s.residuals.stationarity < 1e-12);
    }

    #[test]
    fn inconsistent_equalities() {
        let p = QpProblem::unconstrained(DMatrix::identity(2, 2), DVector::zeros(2))
            .with_equalities(
                DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 1.0, 0.0]),
                DVector::from_vec(vec![-1.0, -2.0]),
            );
        let s = solve(&p, None).unwrap();
        assert!(matches!(
            s.status,
            QpStatus::Infeasible(Infeasibility::Equalities { .. })
        ));
    }

    #[test]
    fn infeasible_inequalities() {
        // x >= 1 and x <= 0
        let p = QpProblem::unconstrained(DMatrix::identity(1, 1), DVector::zeros(1))
            .with_inequalities(
                DMatrix::from_column_slice(2, 1, &[-1.0, 1.0]),
                DVector::from_vec(vec![1.0, 0.0]),
            );
        let s = solve(&p, None).unwrap();
        match s.status {
            QpStatus::Infeasible(Infeasibility::Inequalities { violated, active }) => {
                let mut set = active.clone();
                set.push(violated);
                set.sort();
                assert_eq!(set, vec![0, 1]);
            }
            other => panic!("expected infeasible, got {other:?}"),
        }
    }

    #[test]
    fn fully_determined_by_equalities() {
        let p = QpProblem::unconstrained(DMatrix::identity(2, 2), DVector::zeros(2))
            .with_equalities(DMatrix::identity(2, 2), DVector::from_vec(vec![-1.0, 2.0]))
            .with_inequalities(
                DMatrix::from_row_slice(1, 2, &[1.0, 0.0]),
                DVector::from_element(1, -5.0),
            );
        let s = solve(&p, None).unwrap();
        assert!(s.is_optimal());
        assert_relative_eq!(s.x[1], -2.0, epsilon = 1e-12);
        assert!(s.residuals.stationarity < 1e-12);
    }

    #[test]
    fn kkt_residual_values() {
        let zero = QpProblem::unconstrained(DMatrix::zeros(2, 2), DVector::zeros(2));
        let sol = QpSolution {
            x: DVector::zeros(2),
            eq_multipliers: DVector::zeros(0),
            ineq_multipliers: DVector::zeros(0),
            status: QpStatus::Optimal,
            iterations: 0,
            residuals: KktResiduals::default(),
            active: vec![],
        };
        assert_eq!(kkt_residual(&zero, &sol), KktResiduals::default());

        let p = QpProblem::unconstrained(DMatrix::identity(1, 1), DVector::zeros(1))
            .with_inequalities(
                DMatrix::from_element(1, 1, -1.0),
                DVector::from_element(1, 1.0),
            );
        let mut s = solve(&p, None).unwrap();
        let r = kkt_residual(&p, &s);
        assert!(r.stationarity <= 1e-8 && r.primal <= 1e-8 && r.complementarity <= 1e-8);
        // Move 1e-3 into the infeasible side of the active bound.
        s.x[0] -= 1e-3;
        let r = kkt_residual(&p, &s);
        assert_relative_eq!(r.primal, 1e-3, epsilon = 1e-12);
    }

    #[test]
    fn rejects_bad_dimensions() {
        let p = QpProblem::unconstrained(DMatrix::identity(2, 2), DVector::zeros(3));
        assert_eq!(solve(&p, None), Err(QpError::Dimensions));
    }
}
