pub mod bundle;
pub mod curvature;
pub mod diffeology;
pub mod error;
pub mod expr;
pub mod holonomy;
pub mod liealg;
pub mod report;
pub mod run;
pub mod scenario;

pub use error::{HolabError, Result};
