//! Trivialized principal bundles `U × G`, local connection forms and
//! horizontal lifts.

mod chart;
mod connection;
mod lift;
mod path;

pub use chart::{BaseChart, ChartSummary};
pub use connection::{
    right_invariance_residual, theta_eval, vertical_tangent, ComponentsFn, ConnectionData, FormTerm, InvarianceProbe,
    PartialsFn,
};
pub use lift::{
    horizontal_lift, parallel_transport, transport_operator, LiftedPath, DEFAULT_STEPS, MIN_LIFT_STEPS,
};
pub use path::{smooth_step, CurveFn, CurveScalar, SmoothPath, DEFAULT_FD_STEP, JOIN_TOL};
