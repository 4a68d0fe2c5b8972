//! Plot-based smooth spaces.
//!
//! A diffeology on a model space `ℝ^d` is represented by how it was
//! built (generating plots, products, traces, push-forwards, projective
//! limits) and queried through [`is_plot`], a sample-based semi-decision:
//! acceptance comes with a witness, rejection with the failed test.

mod family;
mod forms;
mod froelicher;
mod json;
mod plot;
mod probe;
mod space;

pub use family::{candidate_family, check_family_properties, FamilyCandidate, PropertyOutcome, FAMILY_PROBE_BUDGET};
pub use forms::{form_compatibility_residual, form_order_probe, wedge_form, ChartForm, FormEval, PlotForm};
pub use froelicher::{froelicher_generate, froelicher_generate_in, Contour, FroelicherStructure, ScalarFn};
pub use json::diffeology_from_json;
pub(crate) use json::domain_from_value;
pub use plot::{sample_lines, MapFn, OpenBox, Plot, SampleLine};
pub use probe::{
    smoothness_probe, smoothness_probe_report, ProbeConfig, ProbeOutcome, CONTRACTION_MIN, DEFAULT_PROBE_ORDER,
    DEFAULT_PROBE_POINTS, DEFAULT_PROBE_TOL,
};
pub use space::{
    is_plot, is_plot_glued, is_plot_with_hints, product_diffeology, projective_limit_diffeology, pushforward,
    trace_diffeology, ClosurePolicy, Diffeology, Generator, MapFnDebug, Membership, Predicate, Rejection,
    TestMapSource, Witness,
};
