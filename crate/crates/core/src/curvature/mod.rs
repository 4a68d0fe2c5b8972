//! Local curvature, the small-loop holonomy oracle, the radial-gauge
//! evolution identity and reduction of the structure group.

mod local;
mod plaques;
mod reduction;
mod stokes;

pub use local::{
    curvature_at, default_fd_step, parallelogram_loop, relative_mismatch, small_loop_limit, small_loop_oracle,
    RichardsonEstimate, SignConvention, sign_oracle_check, SignOraclePoint, SignOracleReport, SIGN_ORACLE_TOL,
};
pub use plaques::{
    plaques_convergence, plaques_identity_residual, plaques_sides, PlaquesConvergence, PlaquesResult, PLAQUES_S,
};
pub use reduction::{
    ambrose_singer_verify, curvature_grid_samples, reduced_algebra, reduction_check, sample_curvature_along_horizontal,
    ConnectionResiduals, CurvatureSample, Embedding, LoopResidual, ReductionReport, VectorField,
    DEFAULT_FLAGGED_LIMIT,
};
pub use stokes::{abelian_stokes_check, enclosed_flux, StokesCheck, STOKES_BOUNDARY_SAMPLES};
