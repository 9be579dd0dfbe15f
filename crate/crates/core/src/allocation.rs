//! Allocation rules and optimizers.
//!
//! * [`mean_weighted`] splits the budget in proportion to expected demand.
//! * [`max_utilization`] maximizes `Σ E[min(C_i, v_i)]` by water-filling on a
//!   common marginal `Pr[C_i > v_i]`.
//! * [`alpha_fair_optimal`] maximizes utilization subject to `Q <= α` by
//!   sweeping a floor ℓ on availabilities: every α-fair allocation lies in a
//!   box `ℓ <= q_i(v_i) <= ℓ + α` for some ℓ, and within a box the problem is
//!   again a clamped water-filling.
//! * [`pof`] is the ratio of the two optima.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::certificates::TailCertificate;
use crate::distributions::DemandDistribution;
use crate::error::{Error, Result};
use crate::metrics::{
    availability_unchecked, fairness_unchecked, utilization_unchecked, Allocation, Scenario,
    FAIRNESS_TIE,
};

/// Slack on `Q <= α` accepted from the constrained optimizer.
pub const FAIRNESS_SLACK: f64 = 1e-6;

/// The marginal level is searched on a logistic scale `s`, with
/// `Pr[C <= v] = 1/(1+e^{-s})` and `Pr[C > v] = 1/(1+e^{s})` each computed
/// directly so both tails keep full relative precision.
const LEVEL_SPAN: f64 = 700.0;

/// Bisection steps used to locate the ends of the feasible floor interval.
const FLOOR_BISECTION_STEPS: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimizerSettings {
    /// Absolute tolerance on allocations, relative to `max(R, 1)`.
    pub v_tolerance: f64,
    /// Number of floor values swept by the α-fair optimizer.
    pub ell_grid: usize,
    /// Golden-section iterations around the best floor.
    pub refine_iterations: usize,
    pub max_bisection_steps: usize,
}

impl Default for OptimizerSettings {
    fn default() -> Self {
        OptimizerSettings {
            v_tolerance: 1e-9,
            ell_grid: 512,
            refine_iterations: 60,
            max_bisection_steps: 200,
        }
    }
}

impl OptimizerSettings {
    pub fn validate(&self) -> Result<()> {
        if !(self.v_tolerance > 0.0) {
            return Err(Error::InvalidArgument("v_tolerance must be > 0".into()));
        }
        if self.ell_grid == 0 || self.refine_iterations == 0 || self.max_bisection_steps == 0 {
            return Err(Error::InvalidArgument(
                "ell_grid, refine_iterations and max_bisection_steps must be > 0".into(),
            ));
        }
        Ok(())
    }
}

/// v_i = R·μ_i/Z.
pub fn mean_weighted(scenario: &Scenario) -> Allocation {
    let ratio = scenario.resource() / scenario.total_mean();
    Allocation::from_raw(scenario.distributions().map(|d| d.mean() * ratio).collect())
}

fn level_allocation(dist: &DemandDistribution, s: f64) -> f64 {
    let v = if s <= 0.0 {
        dist.quantile_unchecked(1.0 / (1.0 + (-s).exp()))
    } else {
        dist.survival_inverse(1.0 / (1.0 + s.exp()))
    };
    v.max(0.0)
}

/// Rescales `values` so they sum to `budget`.
fn fit_to_budget(mut values: Vec<f64>, budget: f64) -> Vec<f64> {
    let total: f64 = values.iter().sum();
    if total > 0.0 {
        let scale = budget / total;
        values.iter_mut().for_each(|v| *v *= scale);
    } else if let Some(first) = values.first_mut() {
        *first = budget;
    }
    values
}

/// Maximizes `Σ E[min(C_i, v_i)]` subject to `Σ v_i = budget` and
/// `lower_i <= v_i <= upper_i`, assuming `Σ lower <= budget <= Σ upper`.
///
/// Bisects the logistic marginal level until the clamped allocations sum to
/// the budget. At a discontinuity of the survival functions the leftover is
/// handed out in group order, up to the allocation just above the jump.
fn water_fill(
    dists: &[&DemandDistribution],
    lower: &[f64],
    upper: &[f64],
    budget: f64,
    settings: &OptimizerSettings,
) -> Result<Vec<f64>> {
    let tol = settings.v_tolerance * budget.max(1.0);
    let sum_lower: f64 = lower.iter().sum();
    let sum_upper: f64 = upper.iter().sum();
    if sum_lower >= budget - tol {
        return Ok(fit_to_budget(lower.to_vec(), budget));
    }
    if sum_upper <= budget + tol {
        return Ok(fit_to_budget(upper.to_vec(), budget));
    }

    let at = |s: f64| -> Vec<f64> {
        dists
            .iter()
            .zip(lower.iter().zip(upper))
            .map(|(d, (&lo, &hi))| level_allocation(d, s).clamp(lo, hi))
            .collect()
    };
    let total = |v: &[f64]| -> f64 { v.iter().sum() };

    let (mut s_lo, mut s_hi) = (-LEVEL_SPAN, LEVEL_SPAN);
    let mut base = at(s_lo);
    let mut cap = at(s_hi);
    if total(&base) > budget {
        // The jump sits below the searched range: start from the floor.
        cap = base;
        base = lower.to_vec();
    } else if total(&cap) <= budget {
        base = cap;
        cap = upper.to_vec();
    } else {
        let mut done = false;
        for _ in 0..settings.max_bisection_steps {
            if budget - total(&base) <= tol {
                done = true;
                break;
            }
            let mid = 0.5 * (s_lo + s_hi);
            if mid <= s_lo || mid >= s_hi {
                done = true;
                break;
            }
            let v = at(mid);
            if total(&v) <= budget {
                s_lo = mid;
                base = v;
            } else {
                s_hi = mid;
                cap = v;
            }
        }
        if !done {
            return Err(Error::NonConvergence {
                steps: settings.max_bisection_steps,
            });
        }
    }

    let mut residual = budget - total(&base);
    for (v, c) in base.iter_mut().zip(&cap) {
        if residual <= 0.0 {
            break;
        }
        let add = (c - *v).max(0.0).min(residual);
        *v += add;
        residual -= add;
    }
    if residual > 0.0 {
        // Rounding leftovers only.
        let (idx, _) = base
            .iter()
            .zip(upper)
            .enumerate()
            .map(|(i, (v, u))| (i, u - v))
            .fold(
                (0, f64::NEG_INFINITY),
                |acc, x| if x.1 > acc.1 { x } else { acc },
            );
        base[idx] += residual;
    }
    Ok(base)
}

/// When the budget covers every group's largest possible demand, saturate
/// each group and spread the excess in proportion to the means.
fn saturated(scenario: &Scenario) -> Option<Allocation> {
    let supports: Vec<f64> = scenario.distributions().map(|d| d.support_max()).collect();
    let needed: f64 = supports.iter().sum();
    let r = scenario.resource();
    if !(needed.is_finite() && needed <= r) {
        return None;
    }
    let extra = (r - needed) / scenario.total_mean();
    Some(Allocation::from_raw(
        scenario
            .distributions()
            .zip(&supports)
            .map(|(d, s)| s + extra * d.mean())
            .collect(),
    ))
}

/// The unconstrained utilization maximizer.
pub fn max_utilization(scenario: &Scenario, settings: &OptimizerSettings) -> Result<Allocation> {
    settings.validate()?;
    let r = scenario.resource();
    if r == 0.0 {
        return Ok(Allocation::from_raw(vec![0.0; scenario.len()]));
    }
    if let Some(a) = saturated(scenario) {
        return Ok(a);
    }
    let dists: Vec<&DemandDistribution> = scenario.distributions().collect();
    let lower = vec![0.0; dists.len()];
    let upper: Vec<f64> = dists.iter().map(|d| d.support_max()).collect();
    water_fill(&dists, &lower, &upper, r, settings).map(Allocation::from_raw)
}

/// Per-group allocation boxes induced by a floor on availability.
struct FloorBoxes<'a> {
    dists: Vec<&'a DemandDistribution>,
    budget: f64,
    alpha: f64,
    tol: f64,
    steps: usize,
}

impl FloorBoxes<'_> {
    /// Smallest `v` in `[0, R]` with `q(v) >= ell`.
    fn lower(&self, d: &DemandDistribution, ell: f64) -> Option<f64> {
        if ell <= 0.0 {
            return Some(0.0);
        }
        let r = self.budget;
        if availability_unchecked(d, r) < ell {
            return None;
        }
        let (mut a, mut b) = (0.0, r);
        for _ in 0..self.steps {
            if b - a <= self.tol {
                break;
            }
            let mid = 0.5 * (a + b);
            if availability_unchecked(d, mid) >= ell {
                b = mid;
            } else {
                a = mid;
            }
        }
        Some(b)
    }

    /// Largest `v` in `[0, R]` with `q(v) <= u`.
    fn upper(&self, d: &DemandDistribution, u: f64) -> f64 {
        let r = self.budget;
        if u >= 1.0 || availability_unchecked(d, r) <= u {
            return r;
        }
        let (mut a, mut b) = (0.0, r);
        for _ in 0..self.steps {
            if b - a <= self.tol {
                break;
            }
            let mid = 0.5 * (a + b);
            if availability_unchecked(d, mid) <= u {
                a = mid;
            } else {
                b = mid;
            }
        }
        a
    }

    fn bounds(&self, ell: f64) -> Option<(Vec<f64>, Vec<f64>)> {
        let lo = self
            .dists
            .iter()
            .map(|d| self.lower(d, ell))
            .collect::<Option<Vec<_>>>()?;
        let hi = self
            .dists
            .iter()
            .zip(&lo)
            .map(|(d, &l)| self.upper(d, ell + self.alpha).max(l))
            .collect();
        Some((lo, hi))
    }

    fn lower_sum(&self, ell: f64) -> Option<f64> {
        self.dists
            .iter()
            .map(|d| self.lower(d, ell))
            .sum::<Option<f64>>()
    }

    fn upper_sum(&self, ell: f64) -> f64 {
        self.dists
            .iter()
            .map(|d| self.upper(d, ell + self.alpha))
            .sum()
    }
}

/// Utilization maximizer subject to `Q <= alpha`.
pub fn alpha_fair_optimal(
    scenario: &Scenario,
    alpha: f64,
    settings: &OptimizerSettings,
) -> Result<Allocation> {
    settings.validate()?;
    if !(alpha >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "alpha must be ≥ 0, got {alpha}"
        )));
    }
    if alpha >= 1.0 {
        return max_utilization(scenario, settings);
    }
    let r = scenario.resource();
    if r == 0.0 {
        return Ok(Allocation::from_raw(vec![0.0; scenario.len()]));
    }
    if let Some(a) = saturated(scenario) {
        return Ok(a);
    }

    let k = scenario.len() as f64;
    let tol = settings.v_tolerance * r.max(1.0);
    let boxes = FloorBoxes {
        dists: scenario.distributions().collect(),
        budget: r,
        alpha,
        tol,
        steps: settings.max_bisection_steps,
    };
    let feasibility_slack = 4.0 * k * tol;

    // ℓ_max = sup{ℓ : Σ lo(ℓ) <= R}; Σ lo is nondecreasing in ℓ.
    let fits = |ell: f64| boxes.lower_sum(ell).is_some_and(|s| s <= r);
    let ell_max = if fits(1.0) {
        1.0
    } else {
        let (mut a, mut b) = (0.0, 1.0);
        for _ in 0..FLOOR_BISECTION_STEPS {
            let mid = 0.5 * (a + b);
            if mid <= a || mid >= b {
                break;
            }
            if fits(mid) {
                a = mid;
            } else {
                b = mid;
            }
        }
        a
    };
    // ℓ_min = inf{ℓ : Σ hi(ℓ) >= R}; Σ hi is nondecreasing in ℓ.
    if boxes.upper_sum(ell_max) < r - feasibility_slack {
        return Err(Error::Infeasible { alpha });
    }
    let ell_min = if boxes.upper_sum(0.0) >= r {
        0.0
    } else {
        let (mut a, mut b) = (0.0, ell_max);
        for _ in 0..FLOOR_BISECTION_STEPS {
            let mid = 0.5 * (a + b);
            if mid <= a || mid >= b {
                break;
            }
            if boxes.upper_sum(mid) >= r {
                b = mid;
            } else {
                a = mid;
            }
        }
        b.min(ell_max)
    };

    let dists = &boxes.dists;
    let solve = |ell: f64| -> Option<(f64, Vec<f64>)> {
        let (lo, hi) = boxes.bounds(ell)?;
        let (sum_lo, sum_hi): (f64, f64) = (lo.iter().sum(), hi.iter().sum());
        if sum_lo > r + feasibility_slack || sum_hi < r - feasibility_slack {
            return None;
        }
        let v = water_fill(dists, &lo, &hi, r, settings).ok()?;
        if fairness_unchecked(scenario, &v) > alpha + FAIRNESS_SLACK {
            return None;
        }
        Some((utilization_unchecked(scenario, &v), v))
    };
    let value = |ell: f64| solve(ell).map_or(f64::NEG_INFINITY, |(u, _)| u);

    let points = settings.ell_grid.max(1);
    let grid: Vec<f64> = (0..points)
        .map(|j| {
            if points == 1 {
                ell_max
            } else {
                ell_min + (ell_max - ell_min) * j as f64 / (points - 1) as f64
            }
        })
        .collect();
    let values: Vec<f64> = grid.par_iter().map(|&ell| value(ell)).collect();
    let mut best_idx = 0;
    for (j, &u) in values.iter().enumerate() {
        if u > values[best_idx] {
            best_idx = j;
        }
    }
    let (mut best_ell, mut best_u) = (grid[best_idx], values[best_idx]);

    if points > 1 && best_u.is_finite() {
        // Golden-section search on the neighbouring grid cells.
        let mut a = grid[best_idx.saturating_sub(1)];
        let mut b = grid[(best_idx + 1).min(points - 1)];
        let ratio = (5f64.sqrt() - 1.0) / 2.0;
        let mut c = b - ratio * (b - a);
        let mut d = a + ratio * (b - a);
        let (mut fc, mut fd) = (value(c), value(d));
        for _ in 0..settings.refine_iterations {
            for (ell, u) in [(c, fc), (d, fd)] {
                if u > best_u {
                    best_u = u;
                    best_ell = ell;
                }
            }
            if fc >= fd {
                b = d;
                d = c;
                fd = fc;
                c = b - ratio * (b - a);
                fc = value(c);
            } else {
                a = c;
                c = d;
                fc = fd;
                d = a + ratio * (b - a);
                fd = value(d);
            }
        }
        for (ell, u) in [(c, fc), (d, fd)] {
            if u > best_u {
                best_u = u;
                best_ell = ell;
            }
        }
    }

    let swept = solve(best_ell);
    let fallback = {
        let mw = mean_weighted(scenario);
        (fairness_unchecked(scenario, mw.values()) <= alpha + FAIRNESS_TIE).then(|| {
            (
                utilization_unchecked(scenario, mw.values()),
                mw.into_inner(),
            )
        })
    };
    let chosen = match (swept, fallback) {
        (Some(s), Some(f)) => Some(if f.0 > s.0 { f } else { s }),
        (s, f) => s.or(f),
    };
    chosen
        .map(|(_, v)| Allocation::from_raw(v))
        .ok_or(Error::Infeasible { alpha })
}

/// Price of fairness with the applicable theoretical bounds attached.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PofResult {
    pub alpha: f64,
    pub unconstrained_utilization: f64,
    pub constrained_utilization: f64,
    pub pof: f64,
    pub bound_1_over_1_minus_alpha: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bound_1_plus_2alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub certificate: Option<TailCertificate>,
    pub max_utilization_allocation: Allocation,
    pub alpha_fair_allocation: Allocation,
    pub alpha_fair_fairness: f64,
}

impl PofResult {
    /// Whether the measured PoF respects every attached bound, with `slack`.
    pub fn within_bounds(&self, slack: f64) -> bool {
        self.pof <= self.bound_1_over_1_minus_alpha + slack
            && self
                .bound_1_plus_2alpha
                .is_none_or(|b| self.pof <= b + slack)
    }
}

pub fn pof(
    scenario: &Scenario,
    alpha: f64,
    settings: &OptimizerSettings,
    certificate: Option<&TailCertificate>,
) -> Result<PofResult> {
    if !(0.0..1.0).contains(&alpha) {
        return Err(Error::InvalidArgument(format!(
            "alpha must lie in [0, 1) for the price of fairness, got {alpha}"
        )));
    }
    let best = max_utilization(scenario, settings)?;
    let fair = alpha_fair_optimal(scenario, alpha, settings)?;
    let unconstrained = utilization_unchecked(scenario, best.values());
    let constrained = utilization_unchecked(scenario, fair.values());
    let ratio = if constrained > 0.0 {
        unconstrained / constrained
    } else if unconstrained == 0.0 {
        1.0
    } else {
        f64::INFINITY
    };
    let small_bound = certificate.and_then(|c| {
        let total = c.epsilon + c.delta;
        (total <= 0.5 && alpha >= total).then_some(1.0 + 2.0 * alpha)
    });
    Ok(PofResult {
        alpha,
        unconstrained_utilization: unconstrained,
        constrained_utilization: constrained,
        pof: ratio,
        bound_1_over_1_minus_alpha: 1.0 / (1.0 - alpha),
        bound_1_plus_2alpha: small_bound,
        certificate: certificate.cloned(),
        alpha_fair_fairness: fairness_unchecked(scenario, fair.values()),
        max_utilization_allocation: best,
        alpha_fair_allocation: fair,
    })
}
