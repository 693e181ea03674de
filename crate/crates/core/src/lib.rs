//! Model predictive walking controller built on time-varying DCM dynamics.

// `!(x > 0.0)` is used on purpose so that NaN inputs are rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod error;
pub mod gait_plan;
pub mod lip_model;
pub mod mpc;
pub mod qp_solver;
pub mod simulator;
