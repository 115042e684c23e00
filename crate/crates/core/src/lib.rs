//! Fat Cantor sets whose maximal density function stays below a target,
//! with exact rational certificates, and Lipschitz functions on curves
//! that do not attain their Lipschitz constant.

pub mod cli;
pub mod construction;
pub mod curves;
pub mod density;
pub mod enclosure;
pub mod error;
pub mod figure;
pub mod io;
pub mod target;

pub use construction::{
    default_headroom, lemma1_quantities, level_intervals, synthesize_lambda, CantorApproximation,
    IntervalAddress, LambdaSequence, Lemma1Quantities, Synthesis,
};
pub use density::{
    check_lemma2, check_lemma4, phi, phi_bruteforce, prefix_measure_bounds, prefix_measure_level_n,
    verify_target, Certificate, DensityProfile, PrefixDecomposition, PrefixEvaluator,
};
pub use curves::{
    arclength_reparametrize, attainment_scan, build_f, build_h, chord_ratio_inf, find_rho, AttainmentScan,
    LipschitzFunction, LipschitzSample, ParametricCurve,
};
pub use enclosure::{ExactRational, Precision, RationalEnclosure};
pub use error::{Error, Result};
pub use target::{decreasing_envelope, Expr, TargetFunction, TargetKind};
