//! Families of injections with independently drawn relations over their
//! images, the census of overlap components, and Monte Carlo checks of the
//! counting inequalities.

mod census;
mod split;
mod system;
mod verify;

pub use census::{
    canonical_type, draw_model, run_census, Census, CensusRun, CensusTrial, DrawnModel, TypeCount,
    DEFAULT_COMPONENT_CAP,
};
pub use split::{family_is_separative, separation_split, SplitCell, SplitReport};
pub use system::{separativity, separativity_level, PClass, Separativity, SeparativityReport, System};
pub use verify::{
    binomial_fit, lower_deviation, step_inequality, tail_bound, tail_check, wilson, CensusTarget, ChiSquareReport,
    Estimate, LowerReport, StepReport, TailReport, Verdict, WILSON_Z,
};
