//! Independent oracles shared by the integration tests.

#![allow(dead_code)]

use std::path::PathBuf;

use dcmpc::cli::ScenarioFile;
use dcmpc::qp_solver::QpProblem;
use dcmpc::simulator::Scenario;
use nalgebra::{DMatrix, DVector};
use rand::rngs::StdRng;
use rand::Rng;

pub const BUNDLED: [&str; 4] = ["fig2", "fig4_baseline", "fig5_baseline", "fig6_full"];

pub fn scenario_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("scenarios")
        .join(format!("{name}.json"))
}

pub fn bundled(name: &str) -> Scenario {
    let path = scenario_path(name);
    let file = ScenarioFile::load(&path).expect("bundled scenario parses");
    file.resolve(name).expect("bundled scenario resolves").0
}

/// Random strictly convex QP with `n` variables, `m_eq` equalities and
/// `m_in` inequalities, feasible by construction around a random point.
pub fn random_qp(rng: &mut StdRng, n: usize, m_eq: usize, m_in: usize) -> QpProblem {
    let m = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
    let hessian = m.transpose() * &m + DMatrix::identity(n, n) * 0.1;
    let gradient = DVector::from_fn(n, |_, _| rng.gen_range(-2.0..2.0));
    let x0 = DVector::from_fn(n, |_, _| rng.gen_range(-1.0..1.0));
    let c = DMatrix::from_fn(m_eq, n, |_, _| rng.gen_range(-1.0..1.0));
    let d = -(&c * &x0);
    let e = DMatrix::from_fn(m_in, n, |_, _| rng.gen_range(-1.0..1.0));
    // Slack zero on roughly a third of the rows so some constraints bind.
    let slack = DVector::from_fn(m_in, |_, _| {
        if rng.gen_bool(0.33) {
            0.0
        } else {
            rng.gen_range(0.0..0.5)
        }
    });
    let f = -(&e * &x0) - slack;
    QpProblem::unconstrained(hessian, gradient)
        .with_equalities(c, d)
        .with_inequalities(e, f)
}

/// Global minimizer by enumerating every subset of inequalities treated as
/// equalities. The best primal-feasible subset solution is the optimum of a
/// strictly convex QP. Returns `None` if no subset yields a feasible point.
pub fn brute_force_qp(p: &QpProblem) -> Option<DVector<f64>> {
    let n = p.hessian.nrows();
    let m_eq = p.eq_matrix.nrows();
    let m_in = p.ineq_matrix.nrows();
    let mut best: Option<(f64, DVector<f64>)> = None;
    for mask in 0u32..(1 << m_in) {
        let rows: Vec<usize> = (0..m_in).filter(|i| mask & (1 << i) != 0).collect();
        let k = m_eq + rows.len();
        if k > n {
            continue;
        }
        let mut kkt = DMatrix::zeros(n + k, n + k);
        let mut rhs = DVector::zeros(n + k);
        kkt.view_mut((0, 0), (n, n)).copy_from(&p.hessian);
        rhs.rows_mut(0, n).copy_from(&(-&p.gradient));
        for (r, row) in (0..m_eq)
            .map(|i| (p.eq_matrix.row(i), p.eq_offset[i]))
            .chain(
                rows.iter()
                    .map(|&i| (p.ineq_matrix.row(i), p.ineq_offset[i])),
            )
            .enumerate()
        {
            kkt.view_mut((n + r, 0), (1, n)).copy_from(&row.0);
            kkt.view_mut((0, n + r), (n, 1))
                .copy_from(&row.0.transpose());
            rhs[n + r] = -row.1;
        }
        if kkt.rank(1e-10) < n + k {
            continue;
        }
        let Some(sol) = kkt.lu().solve(&rhs) else {
            continue;
        };
        let x = sol.rows(0, n).into_owned();
        let eq_ok = (&p.eq_matrix * &x + &p.eq_offset)
            .iter()
            .all(|v| v.abs() < 1e-9);
        let in_ok = (&p.ineq_matrix * &x + &p.ineq_offset)
            .iter()
            .all(|v| *v < 1e-9);
        if !(eq_ok && in_ok) {
            continue;
        }
        let obj = p.objective(&x);
        if best.as_ref().is_none_or(|(b, _)| obj < *b) {
            best = Some((obj, x));
        }
    }
    best.map(|(_, x)| x)
}

/// Central finite-difference gradient.
pub fn fd_gradient(f: impl Fn(&DVector<f64>) -> f64, x: &DVector<f64>, h: f64) -> DVector<f64> {
    DVector::from_fn(x.len(), |i, _| {
        let mut xp = x.clone();
        let mut xm = x.clone();
        xp[i] += h;
        xm[i] -= h;
        (f(&xp) - f(&xm)) / (2.0 * h)
    })
}

/// Prints one acceptance line and returns whether it passed.
pub fn report(criterion: &str, ok: bool, detail: impl std::fmt::Display) -> bool {
    println!(
        "[{}] {criterion}: {detail}",
        if ok { "PASS" } else { "FAIL" }
    );
    ok
}
