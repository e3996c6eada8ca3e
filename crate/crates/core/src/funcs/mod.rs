//! Expression language for the summands and coefficient functions: parsing,
//! printing, evaluation at complex points, symbolic derivatives, singularity
//! enumeration and branch variations.

mod diff;
mod eval;
mod expr;
mod hypothesis;
mod parse;
mod print;
mod roots;
mod sing;

pub use diff::differentiate;
pub use eval::{eval, evaluate, Compiled};
pub use expr::{complex, cos, exp, int, log, powi, powr, rat, sin, x, Cut, Expr};
pub use hypothesis::{
    check_strip_hypothesis, check_strip_hypothesis_with, growth_rate, HypothesisReport,
    SampleWitness, SamplingOptions, StripHypothesis,
};
pub use parse::parse_expr;
pub use print::print;
pub use roots::{poly_roots, Root, MAX_DEGREE};
pub use sing::{
    ray_sign, singularities, strip_adapted, variation, variation_at, Region, SingularityKind,
    SingularityRecord,
};

pub(crate) use expr::{bigrational_f64, ratio_f64};

