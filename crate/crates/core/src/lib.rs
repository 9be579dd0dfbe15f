//! Fair allocation of a fixed resource across groups whose demand is a
//! known random variable.
//!
//! The crate evaluates availability, utilization and fairness of an
//! allocation exactly and by Monte Carlo, computes the mean-weighted,
//! utilization-maximizing and α-fair-optimal allocations, certifies
//! lower-tail concentration of each group's demand, and measures the price
//! of fairness against the bounds those certificates imply.

// `!(x >= 0.0)` style guards are used on purpose: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod allocation;
pub mod certificates;
pub mod distributions;
pub mod error;
pub mod metrics;
pub mod montecarlo;
pub mod scenario_io;

pub use allocation::{
    alpha_fair_optimal, max_utilization, mean_weighted, pof, OptimizerSettings, PofResult,
};
pub use certificates::{
    chernoff_delta, exact_lower_deviation, min_parameter_threshold, scenario_certificate,
    theoretical_bounds, CertificateMethod, TailCertificate, TheoreticalBounds, ThresholdFamily,
};
pub use distributions::{seeded_rng, DemandDistribution, DemandLaw, Family, RandomState};
pub use error::{Error, Result};
pub use metrics::{
    availabilities, availability, evaluate, fairness, is_alpha_fair, utilization, Allocation,
    EvaluationReport, Group, Scenario,
};
pub use montecarlo::{estimate_expected_min, estimate_report, mc_check, McComparison, McEstimate};
pub use scenario_io::{emit_availability_curve, load_scenario, parse_scenario, CurvePoint};
