//! Linear inverted pendulum with a time-varying natural frequency.
//!
//! Horizontal quantities are stored per axis as `[x, y]`. Centroidal angular
//! momentum rates are physical (`[Hdot_x, Hdot_y]`) unless a function says it
//! takes the axis-mapped form used by the controller, where the sagittal (x)
//! state is `Hdot_y` and the lateral (y) state is `-Hdot_x`. In the mapped form
//! both axes share `cmp = cop + h / (m (g + z_ddot))`.

use crate::error::ModelError;

/// Lower bound on the natural frequency (1/s).
pub const OMEGA_MIN: f64 = 0.1;

/// Standard gravity (m/s^2).
pub const GRAVITY: f64 = 9.81;

/// CoM state. Vertical motion is prescribed, so `z`, `zd`, `zdd` are samples of
/// the height trajectory rather than integrated quantities.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComState {
    pub x: [f64; 2],
    pub v: [f64; 2],
    pub z: f64,
    pub zd: f64,
    pub zdd: f64,
}

impl ComState {
    pub fn at_rest(x: [f64; 2], z: f64) -> Self {
        Self {
            x,
            v: [0.0; 2],
            z,
            zd: 0.0,
            zdd: 0.0,
        }
    }
}

/// Natural frequency and its time derivative.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Omega {
    pub omega: f64,
    pub omega_dot: f64,
}

impl Omega {
    pub fn new(omega: f64, omega_dot: f64) -> Result<Self, ModelError> {
        if !(omega > OMEGA_MIN) || !omega_dot.is_finite() {
            return Err(ModelError::FrequencyTooLow {
                omega,
                bound: OMEGA_MIN,
            });
        }
        Ok(Self { omega, omega_dot })
    }

    /// `(omega^2 - omega_dot) / omega`, the DCM divergence rate.
    pub fn divergence_rate(&self) -> f64 {
        (self.omega * self.omega - self.omega_dot) / self.omega
    }
}

/// Divergent component of motion. `z` is filled only when the vertical
/// state is known.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dcm {
    pub xi: [f64; 2],
    pub z: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CentroidalMomentum {
    /// `[Hdot_x, Hdot_y]` (N m).
    pub hdot: [f64; 2],
    /// `[Hddot_x, Hddot_y]` (N m / s).
    pub hddot: [f64; 2],
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GroundPoints {
    pub cop: [f64; 2],
    pub cmp: [f64; 2],
    pub vrp: [f64; 3],
}

pub fn natural_frequency(z: f64, g: f64) -> Result<Omega, ModelError> {
    if !(z > 0.0) {
        return Err(ModelError::NonPositiveHeight(z));
    }
    if !(g > 0.0) {
        return Err(ModelError::NonPositiveGravity(g));
    }
    Ok(Omega {
        omega: (g / z).sqrt(),
        omega_dot: 0.0,
    })
}

pub fn dcm_from_state(s: &ComState, w: Omega) -> Dcm {
    let xi = [s.x[0] + s.v[0] / w.omega, s.x[1] + s.v[1] / w.omega];
    Dcm {
        xi,
        z: Some(s.z + s.zd / w.omega),
    }
}

pub fn com_velocity(xi: &Dcm, s: &ComState, w: Omega) -> [f64; 2] {
    [w.omega * (xi.xi[0] - s.x[0]), w.omega * (xi.xi[1] - s.x[1])]
}

/// Horizontal DCM velocity about a VRP whose ground projection is `vrp`.
pub fn dcm_rate(xi: &Dcm, vrp: &[f64; 2], w: Omega) -> [f64; 2] {
    let k = w.omega - w.omega_dot / w.omega;
    [k * (xi.xi[0] - vrp[0]), k * (xi.xi[1] - vrp[1])]
}

fn support_force_per_mass(mass: f64, zdd: f64, g: f64) -> Result<f64, ModelError> {
    if !(mass > 0.0) {
        return Err(ModelError::NonPositiveMass(mass));
    }
    let a = g + zdd;
    if !(a > 0.0) {
        return Err(ModelError::FreeFall(a));
    }
    Ok(mass * a)
}

/// CMP from the CoP and the physical momentum rate `[Hdot_x, Hdot_y]`.
pub fn cmp_from_cop(
    cop: [f64; 2],
    hdot: [f64; 2],
    mass: f64,
    zdd: f64,
    g: f64,
) -> Result<[f64; 2], ModelError> {
    let f = support_force_per_mass(mass, zdd, g)?;
    Ok([cop[0] + hdot[1] / f, cop[1] - hdot[0] / f])
}

/// CMP offset along one axis for the axis-mapped momentum state.
pub fn cmp_offset(h_axis: f64, mass: f64, zdd: f64, g: f64) -> Result<f64, ModelError> {
    Ok(h_axis / support_force_per_mass(mass, zdd, g)?)
}

/// Physical `[Hdot_x, Hdot_y]` from the per-axis controller states.
pub fn momentum_from_axes(h_axis: [f64; 2]) -> [f64; 2] {
    [-h_axis[1], h_axis[0]]
}

/// Per-axis controller states from physical `[Hdot_x, Hdot_y]`.
pub fn momentum_to_axes(hdot: [f64; 2]) -> [f64; 2] {
    [hdot[1], -hdot[0]]
}

/// VRP above the CMP: horizontal part unchanged, height `g / (omega^2 - omega_dot)`.
pub fn vrp_from_cmp(cmp: [f64; 2], w: Omega, g: f64) -> Result<[f64; 3], ModelError> {
    let den = w.omega * w.omega - w.omega_dot;
    if !(den > 0.0) {
        return Err(ModelError::SingularVrp(den));
    }
    Ok([cmp[0], cmp[1], g / den])
}

/// Prescribed vertical CoM motion: `(z, z_dot, z_ddot)` at time `t`.
pub trait VerticalMotion {
    fn sample(&self, t: f64) -> (f64, f64, f64);
}

#[derive(Debug, Clone, Copy)]
pub struct ConstantHeight(pub f64);

impl VerticalMotion for ConstantHeight {
    fn sample(&self, _t: f64) -> (f64, f64, f64) {
        (self.0, 0.0, 0.0)
    }
}

/// Plant inputs for one integration step. CoP and momentum rate ramp
/// linearly over the step (zero-order hold on their rates).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PlantInput {
    pub cop: [f64; 2],
    pub cop_rate: [f64; 2],
    /// Physical `[Hdot_x, Hdot_y]` at the start of the step.
    pub hdot: [f64; 2],
    pub hddot: [f64; 2],
    /// External force on the CoM (N).
    pub force: [f64; 2],
}

/// Physical parameters shared by the plant and the controller.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RobotParams {
    pub mass: f64,
    pub g: f64,
}

impl Default for RobotParams {
    fn default() -> Self {
        Self {
            mass: 90.0,
            g: GRAVITY,
        }
    }
}

/// One RK4 step of the pendulum about the CMP from time `t` to `t + dt`.
///
/// The horizontal acceleration is `(g + z_ddot) / z * (x - cmp) + F / m`; with
/// constant height this is `omega0^2 (x - cmp)`.
pub fn integrate_plant(
    s: &ComState,
    input: &PlantInput,
    t: f64,
    dt: f64,
    vertical: &dyn VerticalMotion,
    params: RobotParams,
) -> ComState {
    let RobotParams { mass, g } = params;
    let accel = |tau: f64, x: [f64; 2]| -> [f64; 2] {
        let (z, _, zdd) = vertical.sample(t + tau);
        let support = g + zdd;
        let k = support / z;
        let hx = input.hdot[0] + input.hddot[0] * tau;
        let hy = input.hdot[1] + input.hddot[1] * tau;
        let cop_x = input.cop[0] + input.cop_rate[0] * tau;
        let cop_y = input.cop[1] + input.cop_rate[1] * tau;
        let cmp = [cop_x + hy / (mass * support), cop_y - hx / (mass * support)];
        [
            k * (x[0] - cmp[0]) + input.force[0] / mass,
            k * (x[1] - cmp[1]) + input.force[1] / mass,
        ]
    };
    let add = |a: [f64; 2], b: [f64; 2], h: f64| [a[0] + h * b[0], a[1] + h * b[1]];

    let (x0, v0) = (s.x, s.v);
    let a1 = accel(0.0, x0);
    let (x2, v2) = (add(x0, v0, 0.5 * dt), add(v0, a1, 0.5 * dt));
    let a2 = accel(0.5 * dt, x2);
    let (x3, v3) = (add(x0, v2, 0.5 * dt), add(v0, a2, 0.5 * dt));
    let a3 = accel(0.5 * dt, x3);
    let (x4, v4) = (add(x0, v3, dt), add(v0, a3, dt));
    let a4 = accel(dt, x4);

    let mut x = [0.0; 2];
    let mut v = [0.0; 2];
    for i in 0..2 {
        x[i] = x0[i] + dt / 6.0 * (v0[i] + 2.0 * v2[i] + 2.0 * v3[i] + v4[i]);
        v[i] = v0[i] + dt / 6.0 * (a1[i] + 2.0 * a2[i] + 2.0 * a3[i] + a4[i]);
    }
    let (z, zd, zdd) = vertical.sample(t + dt);
    ComState { x, v, z, zd, zdd }
}
