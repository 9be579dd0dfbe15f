//! Availability, utilization and fairness of an allocation.

use serde::{Deserialize, Serialize};

use crate::certificates::TheoreticalBounds;
use crate::distributions::{DemandDistribution, NEGATIVE_MASS_WARNING};
use crate::error::{Error, Result};

/// Slack allowed on `Σ v_i = R`, relative to `max(R, 1)`.
pub const BUDGET_TOLERANCE: f64 = 1e-9;

/// Availabilities closer than this are treated as equal.
pub const FAIRNESS_TIE: f64 = 1e-12;

/// Numerical guard when clamping availability into [0, 1].
const AVAILABILITY_GUARD: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Group {
    pub name: String,
    pub distribution: DemandDistribution,
}

impl Group {
    pub fn new(name: impl Into<String>, distribution: DemandDistribution) -> Self {
        Group {
            name: name.into(),
            distribution,
        }
    }
}

/// A resource budget shared by a nonempty set of named groups.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    resource: f64,
    groups: Vec<Group>,
    total_mean: f64,
}

impl Scenario {
    pub fn new(resource: f64, groups: Vec<Group>) -> Result<Self> {
        if !(resource.is_finite() && resource >= 0.0) {
            return Err(Error::InvalidScenario(format!(
                "resource must be a finite value ≥ 0, got {resource}"
            )));
        }
        if groups.is_empty() {
            return Err(Error::InvalidScenario(
                "at least one group is required".into(),
            ));
        }
        for (i, g) in groups.iter().enumerate() {
            if groups[..i].iter().any(|h| h.name == g.name) {
                return Err(Error::InvalidScenario(format!(
                    "duplicate group name {:?}",
                    g.name
                )));
            }
        }
        let total_mean: f64 = groups.iter().map(|g| g.distribution.mean()).sum();
        if !(total_mean > 0.0) {
            return Err(Error::InvalidScenario(
                "total mean demand must be > 0".into(),
            ));
        }
        Ok(Scenario {
            resource,
            groups,
            total_mean,
        })
    }

    /// Groups with generated names `g0, g1, ...`.
    pub fn from_distributions(
        resource: f64,
        distributions: impl IntoIterator<Item = DemandDistribution>,
    ) -> Result<Self> {
        let groups = distributions
            .into_iter()
            .enumerate()
            .map(|(i, d)| Group::new(format!("g{i}"), d))
            .collect();
        Self::new(resource, groups)
    }

    pub fn resource(&self) -> f64 {
        self.resource
    }

    pub fn groups(&self) -> &[Group] {
        &self.groups
    }

    pub fn len(&self) -> usize {
        self.groups.len()
    }

    pub fn is_empty(&self) -> bool {
        self.groups.is_empty()
    }

    /// Z, the total expected demand.
    pub fn total_mean(&self) -> f64 {
        self.total_mean
    }

    pub fn means(&self) -> Vec<f64> {
        self.groups.iter().map(|g| g.distribution.mean()).collect()
    }

    pub fn distributions(&self) -> impl Iterator<Item = &DemandDistribution> {
        self.groups.iter().map(|g| &g.distribution)
    }

    /// Same groups with a different budget.
    pub fn with_resource(&self, resource: f64) -> Result<Self> {
        Self::new(resource, self.groups.clone())
    }

    /// Warnings for normal groups that put noticeable mass below zero.
    pub fn warnings(&self) -> Vec<String> {
        self.groups
            .iter()
            .filter_map(|g| {
                let mass = g.distribution.negative_mass();
                (mass > NEGATIVE_MASS_WARNING).then(|| {
                    format!(
                        "group {:?}: normal demand places {mass:.3e} probability below zero",
                        g.name
                    )
                })
            })
            .collect()
    }
}

/// Per-group resource amounts summing to the scenario budget.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Allocation(Vec<f64>);

impl Allocation {
    pub fn new(scenario: &Scenario, values: Vec<f64>) -> Result<Self> {
        if values.len() != scenario.len() {
            return Err(Error::DimensionMismatch {
                expected: scenario.len(),
                got: values.len(),
            });
        }
        if let Some(v) = values.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
            return Err(Error::InvalidArgument(format!(
                "allocations must be finite and ≥ 0, got {v}"
            )));
        }
        let total: f64 = values.iter().sum();
        let r = scenario.resource();
        if (total - r).abs() > BUDGET_TOLERANCE * r.max(1.0) {
            return Err(Error::InvalidArgument(format!(
                "allocation sums to {total} but the resource is {r}"
            )));
        }
        Ok(Allocation(values))
    }

    pub(crate) fn from_raw(values: Vec<f64>) -> Self {
        Allocation(values)
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn total(&self) -> f64 {
        self.0.iter().sum()
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

fn check_dims(scenario: &Scenario, alloc: &Allocation) -> Result<()> {
    if alloc.len() != scenario.len() {
        return Err(Error::DimensionMismatch {
            expected: scenario.len(),
            got: alloc.len(),
        });
    }
    Ok(())
}

/// q(v, C) = E[min(C, v)] / E[C].
pub fn availability(dist: &DemandDistribution, v: f64) -> Result<f64> {
    let mean = dist.mean();
    if !(mean > 0.0) {
        return Err(Error::InvalidDistribution(
            "availability needs a distribution with positive mean".into(),
        ));
    }
    Ok(clamp_availability(dist.expected_min(v)? / mean))
}

pub(crate) fn availability_unchecked(dist: &DemandDistribution, v: f64) -> f64 {
    clamp_availability(dist.expected_min_unchecked(v) / dist.mean())
}

fn clamp_availability(q: f64) -> f64 {
    if q > 1.0 && q <= 1.0 + AVAILABILITY_GUARD {
        1.0
    } else if (-AVAILABILITY_GUARD..0.0).contains(&q) {
        0.0
    } else {
        q
    }
}

/// U = Σ E[min(C_i, v_i)].
pub fn utilization(scenario: &Scenario, alloc: &Allocation) -> Result<f64> {
    check_dims(scenario, alloc)?;
    scenario
        .distributions()
        .zip(alloc.values())
        .map(|(d, &v)| d.expected_min(v))
        .sum()
}

pub(crate) fn utilization_unchecked(scenario: &Scenario, values: &[f64]) -> f64 {
    scenario
        .distributions()
        .zip(values)
        .map(|(d, &v)| d.expected_min_unchecked(v))
        .sum()
}

/// Per-group availabilities.
pub fn availabilities(scenario: &Scenario, alloc: &Allocation) -> Result<Vec<f64>> {
    check_dims(scenario, alloc)?;
    scenario
        .distributions()
        .zip(alloc.values())
        .map(|(d, &v)| availability(d, v))
        .collect()
}

/// Q = max_i q_i − min_i q_i.
pub fn fairness(scenario: &Scenario, alloc: &Allocation) -> Result<f64> {
    Ok(spread(&availabilities(scenario, alloc)?))
}

pub(crate) fn fairness_unchecked(scenario: &Scenario, values: &[f64]) -> f64 {
    let qs: Vec<f64> = scenario
        .distributions()
        .zip(values)
        .map(|(d, &v)| availability_unchecked(d, v))
        .collect();
    spread(&qs)
}

/// max − min of a set of availabilities, with near-ties collapsed to zero.
pub fn spread(qs: &[f64]) -> f64 {
    let max = qs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = qs.iter().copied().fold(f64::INFINITY, f64::min);
    let q = max - min;
    if q <= FAIRNESS_TIE {
        0.0
    } else {
        q
    }
}

pub fn is_alpha_fair(scenario: &Scenario, alloc: &Allocation, alpha: f64) -> Result<bool> {
    if !(alpha >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "alpha must be ≥ 0, got {alpha}"
        )));
    }
    Ok(fairness(scenario, alloc)? <= alpha + FAIRNESS_TIE)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupEvaluation {
    pub name: String,
    pub allocation: f64,
    pub mean: f64,
    pub expected_min: f64,
    pub availability: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expected_min_se: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub availability_se: Option<f64>,
}

/// Bound values compared against the measured metrics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundChecks {
    pub bounds: TheoreticalBounds,
    pub fairness_satisfied: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fairness_low_resource_satisfied: Option<bool>,
    pub utilization_satisfied: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub utilization_low_resource_satisfied: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub resource: f64,
    pub total_mean: f64,
    pub groups: Vec<GroupEvaluation>,
    pub utilization: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub utilization_se: Option<f64>,
    pub fairness: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bounds: Option<BoundChecks>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

impl EvaluationReport {
    /// Attaches a comparison against theoretical bounds.
    pub fn with_bounds(mut self, bounds: TheoreticalBounds) -> Self {
        const SLACK: f64 = 1e-12;
        let fairness_satisfied = self.fairness <= bounds.fairness_bound + SLACK;
        let fairness_low_resource_satisfied = bounds
            .fairness_bound_low_resource
            .map(|b| self.fairness <= b + SLACK);
        let utilization_satisfied = self.utilization >= bounds.utilization_bound - SLACK;
        let utilization_low_resource_satisfied = bounds
            .utilization_bound_low_resource
            .map(|b| self.utilization >= b - SLACK);
        self.bounds = Some(BoundChecks {
            bounds,
            fairness_satisfied,
            fairness_low_resource_satisfied,
            utilization_satisfied,
            utilization_low_resource_satisfied,
        });
        self
    }
}

/// Exact evaluation of an allocation.
pub fn evaluate(scenario: &Scenario, alloc: &Allocation) -> Result<EvaluationReport> {
    check_dims(scenario, alloc)?;
    let groups = scenario
        .groups()
        .iter()
        .zip(alloc.values())
        .map(|(g, &v)| {
            Ok(GroupEvaluation {
                name: g.name.clone(),
                allocation: v,
                mean: g.distribution.mean(),
                expected_min: g.distribution.expected_min(v)?,
                availability: availability(&g.distribution, v)?,
                expected_min_se: None,
                availability_se: None,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let utilization = groups.iter().map(|g| g.expected_min).sum();
    let qs: Vec<f64> = groups.iter().map(|g| g.availability).collect();
    Ok(EvaluationReport {
        resource: scenario.resource(),
        total_mean: scenario.total_mean(),
        groups,
        utilization,
        utilization_se: None,
        fairness: spread(&qs),
        bounds: None,
        warnings: scenario.warnings(),
    })
}
