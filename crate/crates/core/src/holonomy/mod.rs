//! Loop algebra, holonomy records and the path-lifting axioms.
//!
//! Composition convention: `γ2 ∨ γ1` runs `γ1` first, and
//! `hol(γ2 ∨ γ1) = hol(γ2)·hol(γ1)` where the lift through `g₀` ends at
//! `g₀·hol`.

mod axioms;
mod flatness;
mod group;
mod loops;
mod record;

pub use axioms::{axiom_suite, fiber_sample, Axiom, AxiomCase, AxiomReport, AxiomSummary, CaseOutcome, REPARAM_TIMES};
pub use flatness::{flatness_check, FamilyFlatness, Flatness, FlatnessReport};
pub use group::{group_law_residuals, GroupLawResiduals, GROUP_LAW_REPARAM};
pub use loops::{concat, reverse, Loop, CLOSURE_TOL};
pub use record::{holonomy_element, holonomy_family, loops_equivalent, Equivalence, HolonomyRecord, IDENTITY_TOL};
