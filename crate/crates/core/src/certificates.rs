//! Lower-deviation certificates `Pr[C <= (1-ε)E[C]] <= δ` and the fairness,
//! utilization and price-of-fairness bounds that follow from them.
//!
//! Exact certificates read δ off the distribution function. Chernoff-style
//! certificates use the closed-form tails for the binomial, normal and
//! Poisson families:
//!
//! | family   | δ                                  | threshold                          |
//! |----------|------------------------------------|------------------------------------|
//! | binomial | `exp(-μ ε²/2)`                     | `n >= 2 ln(1/δ) / (ε² p)`          |
//! | normal   | `exp(-ε² μ² / (2σ²))`              | `μ >= sqrt(2σ² ln(1/δ) / ε²)`      |
//! | poisson  | `exp(-(ε² λ/2) h(-ε))`             | `λ >= 2 ln(1/δ) / (ε² h(-ε))`      |
//!
//! with `h(x) = 2((1+x) ln(1+x) - x) / x²`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::distributions::{DemandDistribution, DemandLaw, Family};
use crate::error::{Error, Result};
use crate::metrics::Scenario;

/// Distance below which `(1-ε)μ` is snapped to an integer on lattice laws.
const LATTICE_SNAP: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CertificateMethod {
    ExactCdf,
    ChernoffBinomial,
    ChernoffNormal,
    ChernoffPoisson,
}

impl CertificateMethod {
    pub fn name(self) -> &'static str {
        match self {
            CertificateMethod::ExactCdf => "exact_cdf",
            CertificateMethod::ChernoffBinomial => "chernoff_binomial",
            CertificateMethod::ChernoffNormal => "chernoff_normal",
            CertificateMethod::ChernoffPoisson => "chernoff_poisson",
        }
    }

    fn family(self) -> Option<Family> {
        match self {
            CertificateMethod::ExactCdf => None,
            CertificateMethod::ChernoffBinomial => Some(Family::Binomial),
            CertificateMethod::ChernoffNormal => Some(Family::Normal),
            CertificateMethod::ChernoffPoisson => Some(Family::Poisson),
        }
    }
}

impl fmt::Display for CertificateMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for CertificateMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.replace('-', "_").as_str() {
            "exact" | "exact_cdf" => Ok(CertificateMethod::ExactCdf),
            "chernoff_binomial" => Ok(CertificateMethod::ChernoffBinomial),
            "chernoff_normal" => Ok(CertificateMethod::ChernoffNormal),
            "chernoff_poisson" => Ok(CertificateMethod::ChernoffPoisson),
            _ => Err(Error::InvalidArgument(format!(
                "unknown certificate method {s:?}; expected exact, chernoff-binomial, chernoff-normal or chernoff-poisson"
            ))),
        }
    }
}

/// Every group satisfies `Pr[C_i <= (1-ε)μ_i] <= δ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailCertificate {
    pub epsilon: f64,
    pub delta: f64,
    pub method: CertificateMethod,
    pub per_group_deltas: Vec<f64>,
}

/// Bounds implied by a certificate for the mean-weighted allocation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TheoreticalBounds {
    pub epsilon: f64,
    pub delta: f64,
    /// ε + δ − εδ.
    pub fairness_bound: f64,
    /// R <= (1-ε)Z.
    pub low_resource: bool,
    /// (1-ε)δ, only in the low-resource regime.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fairness_bound_low_resource: Option<f64>,
    /// 1 − ε − δ, floored at zero.
    pub utilization_fraction: f64,
    /// utilization_fraction · min(R, Z).
    pub utilization_bound: f64,
    /// (1-δ)R, only in the low-resource regime.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub utilization_bound_low_resource: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    /// 1 / (1 − ε − δ), when α >= ε + δ.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pof_bound_certificate: Option<f64>,
    /// 1 / (1 − α), when ε + δ <= α < 1.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pof_bound: Option<f64>,
    /// 1 + 2α, when additionally ε + δ <= 1/2.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pof_bound_small: Option<f64>,
}

fn check_epsilon(epsilon: f64) -> Result<()> {
    if epsilon > 0.0 && epsilon < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "epsilon must lie in (0, 1), got {epsilon}"
        )))
    }
}

/// `h(x) = 2((1+x)ln(1+x) − x)/x²` for `x > -1`, with `h(0) = 1`.
pub fn poisson_h(x: f64) -> f64 {
    if x.abs() < 0.5 {
        // 2 Σ_{k>=2} (-x)^{k-2} / (k(k-1))
        let mut sum = 0.0;
        let mut power = 1.0;
        for k in 2..200u32 {
            let term = power / (k * (k - 1)) as f64;
            sum += term;
            if term.abs() < 1e-18 {
                break;
            }
            power *= -x;
        }
        2.0 * sum
    } else if x <= -1.0 {
        2.0
    } else {
        2.0 * ((1.0 + x) * x.ln_1p() - x) / (x * x)
    }
}

/// Exact δ* = Pr[C <= (1-ε)·mean].
pub fn exact_lower_deviation(dist: &DemandDistribution, epsilon: f64) -> Result<f64> {
    check_epsilon(epsilon)?;
    let mut threshold = (1.0 - epsilon) * dist.mean();
    if matches!(dist.family(), Family::Binomial | Family::Poisson) {
        let nearest = threshold.round();
        if (threshold - nearest).abs() <= LATTICE_SNAP * threshold.max(1.0) {
            threshold = nearest;
        }
    }
    Ok(dist.cdf(threshold))
}

/// Closed-form Chernoff-style upper bound on the lower deviation.
pub fn chernoff_delta(dist: &DemandDistribution, epsilon: f64) -> Result<f64> {
    check_epsilon(epsilon)?;
    let e2 = epsilon * epsilon;
    match *dist.law() {
        DemandLaw::Binomial { n, p } => Ok((-(n as f64 * p) * e2 / 2.0).exp()),
        DemandLaw::Normal { mu, sigma } => Ok((-e2 * mu * mu / (2.0 * sigma * sigma)).exp()),
        DemandLaw::Poisson { lambda } => Ok((-(e2 * lambda / 2.0) * poisson_h(-epsilon)).exp()),
        _ => Err(Error::UnsupportedFamily {
            method: "chernoff".into(),
            kind: dist.family().name().into(),
        }),
    }
}

/// Family and fixed parameters for [`min_parameter_threshold`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum ThresholdFamily {
    /// Threshold on the number of trials `n` for success probability `p`.
    Binomial { p: f64 },
    /// Threshold on the mean `μ` for standard deviation `sigma`.
    Normal { sigma: f64 },
    /// Threshold on the rate `λ`.
    Poisson,
}

/// Smallest `n` (binomial), `μ` (normal) or `λ` (Poisson) for which the
/// Chernoff bound certifies `(ε, δ)`.
pub fn min_parameter_threshold(family: ThresholdFamily, epsilon: f64, delta: f64) -> Result<f64> {
    check_epsilon(epsilon)?;
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "delta must lie in (0, 1), got {delta}"
        )));
    }
    let log_term = (1.0 / delta).ln();
    let e2 = epsilon * epsilon;
    match family {
        ThresholdFamily::Binomial { p } => {
            if !(p > 0.0 && p < 1.0) {
                return Err(Error::InvalidArgument(format!(
                    "binomial p must lie in (0, 1), got {p}"
                )));
            }
            Ok((2.0 / (e2 * p) * log_term).ceil())
        }
        ThresholdFamily::Normal { sigma } => {
            if !(sigma.is_finite() && sigma > 0.0) {
                return Err(Error::InvalidArgument(format!(
                    "normal sigma must be > 0, got {sigma}"
                )));
            }
            Ok((2.0 * sigma * sigma / e2 * log_term).sqrt())
        }
        ThresholdFamily::Poisson => Ok(2.0 / (e2 * poisson_h(-epsilon)) * log_term),
    }
}

/// The parameter of `dist` that [`min_parameter_threshold`] constrains, and
/// the matching threshold family.
pub fn threshold_for(dist: &DemandDistribution) -> Option<(ThresholdFamily, f64)> {
    match *dist.law() {
        DemandLaw::Binomial { n, p } => Some((ThresholdFamily::Binomial { p }, n as f64)),
        DemandLaw::Normal { mu, sigma } => Some((ThresholdFamily::Normal { sigma }, mu)),
        DemandLaw::Poisson { lambda } => Some((ThresholdFamily::Poisson, lambda)),
        _ => None,
    }
}

/// Per-group δ for every group of a scenario; δ is the largest of them.
pub fn scenario_certificate(
    scenario: &Scenario,
    epsilon: f64,
    method: CertificateMethod,
) -> Result<TailCertificate> {
    check_epsilon(epsilon)?;
    let per_group_deltas = scenario
        .distributions()
        .map(|d| match method.family() {
            None => exact_lower_deviation(d, epsilon),
            Some(family) if family == d.family() => chernoff_delta(d, epsilon),
            Some(_) => Err(Error::UnsupportedFamily {
                method: method.name().into(),
                kind: d.family().name().into(),
            }),
        })
        .collect::<Result<Vec<_>>>()?;
    let delta = per_group_deltas.iter().copied().fold(0.0, f64::max);
    Ok(TailCertificate {
        epsilon,
        delta,
        method,
        per_group_deltas,
    })
}

pub fn theoretical_bounds(
    cert: &TailCertificate,
    scenario: &Scenario,
    alpha: Option<f64>,
) -> TheoreticalBounds {
    let (eps, delta) = (cert.epsilon, cert.delta);
    let r = scenario.resource();
    let z = scenario.total_mean();
    let low_resource = r <= (1.0 - eps) * z;
    let total = eps + delta;
    let utilization_fraction = (1.0 - total).max(0.0);
    let pof_applicable = alpha.is_some_and(|a| a < 1.0 && total < 1.0 && a >= total);
    TheoreticalBounds {
        epsilon: eps,
        delta,
        fairness_bound: eps + delta - eps * delta,
        low_resource,
        fairness_bound_low_resource: low_resource.then_some((1.0 - eps) * delta),
        utilization_fraction,
        utilization_bound: utilization_fraction * r.min(z),
        utilization_bound_low_resource: low_resource.then_some((1.0 - delta) * r),
        alpha,
        pof_bound_certificate: pof_applicable.then(|| 1.0 / (1.0 - total)),
        pof_bound: pof_applicable.then(|| 1.0 / (1.0 - alpha.unwrap())),
        pof_bound_small: (pof_applicable && total <= 0.5).then(|| 1.0 + 2.0 * alpha.unwrap()),
    }
}
