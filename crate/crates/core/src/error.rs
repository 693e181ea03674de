use thiserror::Error;

/// Violations of the pendulum model's domain (non-positive height, free fall, singular VRP).
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("height must be positive, got {0} m")]
    NonPositiveHeight(f64),
    #[error("gravity must be positive, got {0} m/s^2")]
    NonPositiveGravity(f64),
    #[error("natural frequency {omega} is not above the lower bound {bound}")]
    FrequencyTooLow { omega: f64, bound: f64 },
    #[error("free fall: g + z_ddot = {0} is not positive")]
    FreeFall(f64),
    #[error("singular VRP offset: omega^2 - omega_dot = {0} is not positive")]
    SingularVrp(f64),
    #[error("mass must be positive, got {0} kg")]
    NonPositiveMass(f64),
}

/// Errors raised while building a gait plan or vertical profile.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum PlanError {
    #[error("{name} duration {duration} s is not a positive integer multiple of the control period {period} s")]
    NotMultipleOfPeriod {
        name: &'static str,
        duration: f64,
        period: f64,
    },
    #[error("control period must be positive, got {0}")]
    BadPeriod(f64),
    #[error("step count must be at least 1")]
    NoSteps,
    #[error("vertical waypoints: {0}")]
    Waypoints(String),
    #[error("vertical profile rejected at t = {t} s: {source}")]
    Profile { t: f64, source: ModelError },
}

/// Errors raised while building or solving the per-tick MPC problem.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum MpcError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Plan(#[from] PlanError),
    #[error("invalid controller configuration: {0}")]
    Config(String),
    #[error("horizon spans {needed} future steps but only {available} are previewed")]
    TooManySteps { needed: usize, available: usize },
    #[error("{axis} QP infeasible; conflicting constraints {conflict:?}")]
    FallPredicted {
        axis: &'static str,
        conflict: Vec<String>,
    },
    #[error("{axis} QP stopped after {iterations} iterations without converging")]
    SolverStalled {
        axis: &'static str,
        iterations: usize,
    },
}
