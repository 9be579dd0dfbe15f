//! Sampling estimators used as an independent check on the closed forms.
//!
//! Samples are drawn in fixed-size chunks; chunk `c` uses seed `seed + c`
//! and group `g` uses ChaCha stream `g`. Chunks run in parallel and are
//! merged in chunk order, so estimates depend only on `(samples, seed)`.

use rand::distr::Distribution;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::distributions::{seeded_rng, DemandDistribution};
use crate::error::{Error, Result};
use crate::metrics::{self, spread, Allocation, EvaluationReport, GroupEvaluation, Scenario};

pub const MIN_SAMPLES: u64 = 100;
pub const DEFAULT_SAMPLES: u64 = 1_000_000;
pub const DEFAULT_SEED: u64 = 42;
const CHUNK_SIZE: u64 = 1 << 16;

/// Largest |z| accepted by [`mc_check`].
pub const Z_THRESHOLD: f64 = 4.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub value: f64,
    pub standard_error: f64,
    pub samples: u64,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, Default)]
struct Moments {
    n: u64,
    mean: f64,
    m2: f64,
}

impl Moments {
    fn push(&mut self, x: f64) {
        self.n += 1;
        let d = x - self.mean;
        self.mean += d / self.n as f64;
        self.m2 += d * (x - self.mean);
    }

    fn merge(self, other: Moments) -> Moments {
        if self.n == 0 {
            return other;
        }
        if other.n == 0 {
            return self;
        }
        let n = self.n + other.n;
        let d = other.mean - self.mean;
        Moments {
            n,
            mean: self.mean + d * other.n as f64 / n as f64,
            m2: self.m2 + other.m2 + d * d * self.n as f64 * other.n as f64 / n as f64,
        }
    }

    fn standard_error(&self) -> f64 {
        if self.n < 2 {
            return 0.0;
        }
        (self.m2.max(0.0) / (self.n - 1) as f64 / self.n as f64).sqrt()
    }
}

fn check_samples(samples: u64) -> Result<()> {
    if samples < MIN_SAMPLES {
        return Err(Error::InvalidArgument(format!(
            "at least {MIN_SAMPLES} samples are required, got {samples}"
        )));
    }
    Ok(())
}

fn sample_expected_min(
    dist: &DemandDistribution,
    v: f64,
    samples: u64,
    seed: u64,
    stream: u64,
) -> McEstimate {
    let sampler = dist.sampler();
    let chunks = samples.div_ceil(CHUNK_SIZE);
    let parts: Vec<Moments> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = seeded_rng(seed.wrapping_add(c));
            rng.set_stream(stream);
            let n = CHUNK_SIZE.min(samples - c * CHUNK_SIZE);
            let mut m = Moments::default();
            for _ in 0..n {
                m.push(sampler.sample(&mut rng).min(v));
            }
            m
        })
        .collect();
    let total = parts.into_iter().fold(Moments::default(), Moments::merge);
    McEstimate {
        value: total.mean,
        standard_error: total.standard_error(),
        samples,
        seed,
    }
}

/// Sample mean of `min(C, v)` with its standard error.
pub fn estimate_expected_min(
    dist: &DemandDistribution,
    v: f64,
    samples: u64,
    seed: u64,
) -> Result<McEstimate> {
    check_samples(samples)?;
    if !(v >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "allocation must be ≥ 0, got {v}"
        )));
    }
    Ok(sample_expected_min(dist, v, samples, seed, 0))
}

/// Monte Carlo version of [`metrics::evaluate`]; groups are sampled
/// independently.
pub fn estimate_report(
    scenario: &Scenario,
    alloc: &Allocation,
    samples: u64,
    seed: u64,
) -> Result<EvaluationReport> {
    check_samples(samples)?;
    if alloc.len() != scenario.len() {
        return Err(Error::DimensionMismatch {
            expected: scenario.len(),
            got: alloc.len(),
        });
    }
    let groups: Vec<GroupEvaluation> = scenario
        .groups()
        .iter()
        .zip(alloc.values())
        .enumerate()
        .map(|(g, (group, &v))| {
            let est = sample_expected_min(&group.distribution, v, samples, seed, g as u64);
            let mean = group.distribution.mean();
            GroupEvaluation {
                name: group.name.clone(),
                allocation: v,
                mean,
                expected_min: est.value,
                availability: est.value / mean,
                expected_min_se: Some(est.standard_error),
                availability_se: Some(est.standard_error / mean),
            }
        })
        .collect();
    let utilization = groups.iter().map(|g| g.expected_min).sum();
    let utilization_se = groups
        .iter()
        .map(|g| g.expected_min_se.unwrap().powi(2))
        .sum::<f64>()
        .sqrt();
    let qs: Vec<f64> = groups.iter().map(|g| g.availability).collect();
    Ok(EvaluationReport {
        resource: scenario.resource(),
        total_mean: scenario.total_mean(),
        groups,
        utilization,
        utilization_se: Some(utilization_se),
        fairness: spread(&qs),
        bounds: None,
        warnings: scenario.warnings(),
    })
}

/// One row of an exact-versus-sampled comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McComparison {
    pub quantity: String,
    pub exact: f64,
    pub mc_value: f64,
    pub se: f64,
    pub z_score: f64,
    pub pass: bool,
}

impl McComparison {
    pub fn new(quantity: impl Into<String>, exact: f64, mc_value: f64, se: f64) -> Self {
        let diff = mc_value - exact;
        let z_score = if se > 0.0 {
            diff / se
        } else if diff.abs() <= 1e-12 * exact.abs().max(1.0) {
            0.0
        } else {
            f64::INFINITY.copysign(diff)
        };
        McComparison {
            quantity: quantity.into(),
            exact,
            mc_value,
            se,
            z_score,
            pass: z_score.abs() <= Z_THRESHOLD,
        }
    }
}

/// Compares per-group expected minimum, availability, and total utilization
/// against their exact values.
///
/// A group whose samples all coincide (an unobserved tail) has a sample
/// standard error of zero; its z-score then uses the exact standard error
/// `sqrt(Var[min(C, v)] / samples)` instead.
pub fn mc_check(
    scenario: &Scenario,
    alloc: &Allocation,
    samples: u64,
    seed: u64,
) -> Result<Vec<McComparison>> {
    let exact = metrics::evaluate(scenario, alloc)?;
    let mc = estimate_report(scenario, alloc, samples, seed)?;
    let mut rows = Vec::with_capacity(2 * scenario.len() + 1);
    let mut total_var = 0.0;
    for ((e, m), (group, &v)) in exact
        .groups
        .iter()
        .zip(&mc.groups)
        .zip(scenario.groups().iter().zip(alloc.values()))
    {
        let mut se = m.expected_min_se.unwrap_or(0.0);
        if se == 0.0 {
            se = (group.distribution.variance_of_min(v)? / samples as f64).sqrt();
        }
        total_var += se * se;
        rows.push(McComparison::new(
            format!("expected_min[{}]", e.name),
            e.expected_min,
            m.expected_min,
            se,
        ));
        rows.push(McComparison::new(
            format!("availability[{}]", e.name),
            e.availability,
            m.availability,
            se / e.mean,
        ));
    }
    rows.push(McComparison::new(
        "utilization",
        exact.utilization,
        mc.utilization,
        total_var.sqrt(),
    ));
    Ok(rows)
}
