//! Conditional median of a diffusion driven by Brownian motion, computed
//! through the time-reversed flow in flat coordinates.

mod cond_exp;
mod driver;
mod flow;
mod flow_map;
mod oracle;
mod transforms;

pub use cond_exp::{cond_exp_median, cond_exp_with_map, InnerEnsemble};
pub use driver::{reversed_driver, reversed_increments, DriverKind, DriverSequence, ForwardPath};
pub use flow::{
    derivative_f, euler_f, flow_step, median, FlowState, MedianMethod, MedianSample, OVERFLOW_GUARD,
};
pub use flow_map::{compose_forward, FlowMap};
pub use oracle::{d_terminal, direct_d_oracle, flow_inverse_check, interior_grid, CLAMP_EPS};
pub use transforms::{psi, psi_inv, s, s_inv, s_psi, s_psi_inv, sign0};
