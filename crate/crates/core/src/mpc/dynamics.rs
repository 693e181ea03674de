use nalgebra::{DMatrix, DVector, Matrix4, Matrix4x2, Vector2, Vector4};

use crate::error::ModelError;
use crate::lip_model::Omega;

/// Number of states per axis: DCM, CoM, momentum rate, CoP.
pub const NX: usize = 4;
/// Number of inputs per axis: momentum acceleration, CoP rate.
pub const NU: usize = 2;

pub const XI: usize = 0;
pub const COM: usize = 1;
pub const MOMENTUM: usize = 2;
pub const COP: usize = 3;

/// One-tick transition `psi' = A psi + B u` for a single axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StageMatrices {
    pub a: Matrix4<f64>,
    pub b: Matrix4x2<f64>,
}

impl StageMatrices {
    pub fn step(&self, psi: &Vector4<f64>, u: &Vector2<f64>) -> Vector4<f64> {
        self.a * psi + self.b * u
    }
}

/// Forward-Euler discretization of the DCM/CoM pair with integrator states
/// for the momentum rate and the CoP.
pub fn discretize(
    w: Omega,
    zdd: f64,
    mass: f64,
    g: f64,
    period: f64,
) -> Result<StageMatrices, ModelError> {
    let support = mass * (g + zdd);
    if !(support > 0.0) {
        return Err(ModelError::FreeFall(g + zdd));
    }
    if !(w.omega > crate::lip_model::OMEGA_MIN) {
        return Err(ModelError::FrequencyTooLow {
            omega: w.omega,
            bound: crate::lip_model::OMEGA_MIN,
        });
    }
    let k = period * w.divergence_rate();
    #[rustfmt::skip]
    let a = Matrix4::new(
        k + 1.0,           0.0,                     -k / support, -k,
        w.omega * period,  1.0 - w.omega * period,  0.0,          0.0,
        0.0,               0.0,                     1.0,          0.0,
        0.0,               0.0,                     0.0,          1.0,
    );
    #[rustfmt::skip]
    let b = Matrix4x2::new(
        0.0,    0.0,
        0.0,    0.0,
        period, 0.0,
        0.0,    period,
    );
    Ok(StageMatrices { a, b })
}

/// Stacked prediction `Gamma_psi = Phi psi_0 + Phi_u1 Gamma_u1` over `N` ticks.
/// Block row `j` holds `psi_{j+1}`; input block `i` is `u_i = [Hddot_i, copdot_i]`.
#[derive(Debug, Clone, PartialEq)]
pub struct CondensedSystem {
    pub phi: DMatrix<f64>,
    pub phi_u1: DMatrix<f64>,
}

impl CondensedSystem {
    pub fn horizon(&self) -> usize {
        self.phi.nrows() / NX
    }

    pub fn predict(&self, psi0: &Vector4<f64>, inputs: &DVector<f64>) -> DVector<f64> {
        self.free_response(psi0) + &self.phi_u1 * inputs
    }

    pub fn free_response(&self, psi0: &Vector4<f64>) -> DVector<f64> {
        &self.phi * psi0
    }

    /// Row index of state `component` at horizon tick `i` (1-based).
    pub fn row(i: usize, component: usize) -> usize {
        NX * (i - 1) + component
    }
}

pub fn condense(stages: &[StageMatrices]) -> CondensedSystem {
    let n = stages.len();
    assert!(n >= 1, "horizon must cover at least one tick");
    let mut phi = DMatrix::zeros(NX * n, NX);
    let mut phi_u1 = DMatrix::zeros(NX * n, NU * n);

    let mut prod = Matrix4::identity();
    for (j, st) in stages.iter().enumerate() {
        prod = st.a * prod;
        phi.view_mut((NX * j, 0), (NX, NX)).copy_from(&prod);
        // Row j = A_j * row (j - 1) for earlier inputs, B_j on the diagonal.
        if j > 0 {
            let prev = phi_u1.view((NX * (j - 1), 0), (NX, NU * j)).into_owned();
            let next = st.a * prev;
            phi_u1.view_mut((NX * j, 0), (NX, NU * j)).copy_from(&next);
        }
        phi_u1.view_mut((NX * j, NU * j), (NX, NU)).copy_from(&st.b);
    }
    CondensedSystem { phi, phi_u1 }
}
