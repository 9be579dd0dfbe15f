//! Demand models for a single group.
//!
//! Every model exposes its exact mean, distribution and survival functions,
//! a quantile, sampling, and the truncated first moment `E[min(C, v)]`.
//! Discrete laws (constant, two-point, binomial, Poisson, empirical) are
//! tabulated once at construction into sorted atoms with prefix and suffix
//! sums, so the truncated moment and both tails are table lookups.

use std::f64::consts::{FRAC_1_SQRT_2, PI, SQRT_2};
use std::fmt;
use std::sync::Arc;

use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use statrs::function::erf::{erfc, erfc_inv};

use crate::error::{Error, Result};

/// Random state used by every sampler in the crate.
pub type RandomState = ChaCha8Rng;

/// Seeds a [`RandomState`] deterministically.
pub fn seeded_rng(seed: u64) -> RandomState {
    RandomState::seed_from_u64(seed)
}

/// Lattice terms lighter than this fraction of the modal term are dropped.
const LATTICE_CUTOFF: f64 = 1e-300;

/// Tolerance on the total mass of an empirical law.
pub const EMPIRICAL_MASS_TOLERANCE: f64 = 1e-12;

/// Mass below zero above which a normal model is flagged.
pub const NEGATIVE_MASS_WARNING: f64 = 1e-6;

/// Parameters of a demand law, as written in scenario files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DemandLaw {
    Constant {
        value: f64,
    },
    /// Mass `(k-1)/k` at zero and `1/k` at `k`.
    TwoPoint {
        k: f64,
    },
    Binomial {
        n: u64,
        p: f64,
    },
    Poisson {
        lambda: f64,
    },
    Normal {
        mu: f64,
        sigma: f64,
    },
    Exponential {
        mean: f64,
    },
    Empirical {
        values: Vec<f64>,
        probabilities: Vec<f64>,
    },
}

/// Family tag of a [`DemandLaw`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Constant,
    TwoPoint,
    Binomial,
    Poisson,
    Normal,
    Exponential,
    Empirical,
}

impl Family {
    pub fn name(self) -> &'static str {
        match self {
            Family::Constant => "constant",
            Family::TwoPoint => "two_point",
            Family::Binomial => "binomial",
            Family::Poisson => "poisson",
            Family::Normal => "normal",
            Family::Exponential => "exponential",
            Family::Empirical => "empirical",
        }
    }

    /// Whether the law is supported on a finite or countable set of atoms.
    pub fn is_discrete(self) -> bool {
        !matches!(self, Family::Normal | Family::Exponential)
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl DemandLaw {
    pub fn family(&self) -> Family {
        match self {
            DemandLaw::Constant { .. } => Family::Constant,
            DemandLaw::TwoPoint { .. } => Family::TwoPoint,
            DemandLaw::Binomial { .. } => Family::Binomial,
            DemandLaw::Poisson { .. } => Family::Poisson,
            DemandLaw::Normal { .. } => Family::Normal,
            DemandLaw::Exponential { .. } => Family::Exponential,
            DemandLaw::Empirical { .. } => Family::Empirical,
        }
    }

    fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidDistribution(msg));
        match *self {
            DemandLaw::Constant { value } => {
                if !(value.is_finite() && value > 0.0) {
                    return bad(format!("constant: value must be > 0, got {value}"));
                }
            }
            DemandLaw::TwoPoint { k } => {
                if !(k.is_finite() && k >= 1.0) {
                    return bad(format!("two_point: k must be ≥ 1, got {k}"));
                }
            }
            DemandLaw::Binomial { n, p } => {
                if n < 1 {
                    return bad("binomial: n must be ≥ 1".into());
                }
                if !(p > 0.0 && p < 1.0) {
                    return bad(format!("binomial: p must lie in (0, 1), got {p}"));
                }
            }
            DemandLaw::Poisson { lambda } => {
                if !(lambda.is_finite() && lambda > 0.0) {
                    return bad(format!("poisson: lambda must be > 0, got {lambda}"));
                }
            }
            DemandLaw::Normal { mu, sigma } => {
                if !(mu.is_finite() && mu > 0.0) {
                    return bad(format!("normal: mu must be > 0, got {mu}"));
                }
                if !(sigma.is_finite() && sigma > 0.0) {
                    return bad(format!("normal: sigma must be > 0, got {sigma}"));
                }
            }
            DemandLaw::Exponential { mean } => {
                if !(mean.is_finite() && mean > 0.0) {
                    return bad(format!("exponential: mean must be > 0, got {mean}"));
                }
            }
            DemandLaw::Empirical {
                ref values,
                ref probabilities,
            } => {
                if values.is_empty() {
                    return bad("empirical: values must be nonempty".into());
                }
                if values.len() != probabilities.len() {
                    return bad(format!(
                        "empirical: {} values but {} probabilities",
                        values.len(),
                        probabilities.len()
                    ));
                }
                if let Some(v) = values.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
                    return bad(format!("empirical: values must be ≥ 0, got {v}"));
                }
                if let Some(p) = probabilities
                    .iter()
                    .find(|p| !(p.is_finite() && **p >= 0.0))
                {
                    return bad(format!("empirical: probabilities must be ≥ 0, got {p}"));
                }
                let total: f64 = probabilities.iter().sum();
                if (total - 1.0).abs() > EMPIRICAL_MASS_TOLERANCE {
                    return bad(format!("empirical: probabilities sum to {total}, not 1"));
                }
                let mean: f64 = values.iter().zip(probabilities).map(|(v, p)| v * p).sum();
                if mean <= 0.0 {
                    return bad("empirical: mean must be > 0".into());
                }
            }
        }
        Ok(())
    }
}

/// Sorted atoms of a discrete law with cumulative tables.
///
/// `cdf[k] = Pr[C <= values[k]]`, `sf[k] = Pr[C > values[k]]` (suffix sums,
/// accurate in the upper tail), `partial_mean[k] = Σ_{j<=k} values[j]·pmf[j]`.
#[derive(Debug)]
struct Atoms {
    values: Vec<f64>,
    pmf: Vec<f64>,
    cdf: Vec<f64>,
    sf: Vec<f64>,
    partial_mean: Vec<f64>,
}

impl Atoms {
    fn from_points(mut points: Vec<(f64, f64)>) -> Self {
        points.retain(|&(_, p)| p > 0.0);
        points.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut values: Vec<f64> = Vec::with_capacity(points.len());
        let mut pmf: Vec<f64> = Vec::with_capacity(points.len());
        for (x, p) in points {
            match values.last() {
                Some(&last) if last == x => *pmf.last_mut().unwrap() += p,
                _ => {
                    values.push(x);
                    pmf.push(p);
                }
            }
        }
        Self::tabulate(values, pmf)
    }

    /// Integer lattice `start, start+1, ...` with weights proportional to `weights`.
    fn lattice(start: u64, weights: Vec<f64>) -> Self {
        let total: f64 = weights.iter().sum();
        let pmf: Vec<f64> = weights.into_iter().map(|w| w / total).collect();
        let values = (0..pmf.len()).map(|i| (start + i as u64) as f64).collect();
        Self::tabulate(values, pmf)
    }

    fn tabulate(values: Vec<f64>, pmf: Vec<f64>) -> Self {
        let len = values.len();
        let mut cdf = Vec::with_capacity(len);
        let mut partial_mean = Vec::with_capacity(len);
        let (mut acc, mut moment) = (0.0, 0.0);
        for (x, p) in values.iter().zip(&pmf) {
            acc += p;
            moment += x * p;
            cdf.push(acc);
            partial_mean.push(moment);
        }
        let mut sf = vec![0.0; len];
        let mut tail = 0.0;
        for k in (0..len).rev() {
            sf[k] = tail;
            tail += pmf[k];
        }
        Atoms {
            values,
            pmf,
            cdf,
            sf,
            partial_mean,
        }
    }

    /// Number of atoms `<= x`.
    fn rank(&self, x: f64) -> usize {
        self.values.partition_point(|&v| v <= x)
    }

    fn cdf(&self, x: f64) -> f64 {
        match self.rank(x) {
            0 => 0.0,
            k => self.cdf[k - 1],
        }
    }

    fn survival(&self, x: f64) -> f64 {
        match self.rank(x) {
            0 => 1.0,
            k => self.sf[k - 1],
        }
    }

    fn expected_min(&self, v: f64) -> f64 {
        match self.rank(v) {
            0 => v,
            k => self.partial_mean[k - 1] + v * self.sf[k - 1],
        }
    }

    fn quantile(&self, p: f64) -> f64 {
        let idx = self.cdf.partition_point(|&c| c < p);
        self.values[idx.min(self.values.len() - 1)]
    }

    fn survival_inverse(&self, tau: f64) -> f64 {
        if self.survival(0.0) <= tau {
            return 0.0;
        }
        let idx = self.sf.partition_point(|&s| s > tau);
        self.values[idx.min(self.values.len() - 1)]
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let u: f64 = rng.random();
        self.quantile(u)
    }
}

fn binomial_atoms(n: u64, p: f64) -> Atoms {
    let mode = (((n + 1) as f64 * p).floor() as u64).min(n);
    let up = p / (1.0 - p);
    let down = (1.0 - p) / p;
    let mut above = Vec::new();
    let mut w = 1.0;
    for x in mode + 1..=n {
        w *= (n - x + 1) as f64 / x as f64 * up;
        if w < LATTICE_CUTOFF {
            break;
        }
        above.push(w);
    }
    let mut below = Vec::new();
    w = 1.0;
    for x in (0..mode).rev() {
        w *= (x + 1) as f64 / (n - x) as f64 * down;
        if w < LATTICE_CUTOFF {
            break;
        }
        below.push(w);
    }
    let start = mode - below.len() as u64;
    below.reverse();
    below.push(1.0);
    below.extend(above);
    Atoms::lattice(start, below)
}

fn poisson_atoms(lambda: f64) -> Atoms {
    let mode = lambda.floor() as u64;
    let mut above = Vec::new();
    let mut w = 1.0;
    let mut x = mode + 1;
    loop {
        w *= lambda / x as f64;
        if w < LATTICE_CUTOFF {
            break;
        }
        above.push(w);
        x += 1;
    }
    let mut below = Vec::new();
    w = 1.0;
    for x in (0..mode).rev() {
        w *= (x + 1) as f64 / lambda;
        if w < LATTICE_CUTOFF {
            break;
        }
        below.push(w);
    }
    let start = mode - below.len() as u64;
    below.reverse();
    below.push(1.0);
    below.extend(above);
    Atoms::lattice(start, below)
}

pub(crate) fn std_normal_pdf(z: f64) -> f64 {
    (-0.5 * z * z).exp() / (2.0 * PI).sqrt()
}

/// Φ(z).
pub(crate) fn std_normal_cdf(z: f64) -> f64 {
    0.5 * erfc(-z * FRAC_1_SQRT_2)
}

/// 1 − Φ(z), accurate in the upper tail.
pub(crate) fn std_normal_sf(z: f64) -> f64 {
    0.5 * erfc(z * FRAC_1_SQRT_2)
}

/// E[(X − t)^+] for standard normal X and t >= 0.
fn std_normal_loss(t: f64) -> f64 {
    (std_normal_pdf(t) - t * std_normal_sf(t)).max(0.0)
}

/// A validated demand distribution for one group.
///
/// Serializes as its [`DemandLaw`]; equality and `Debug` use the parameters
/// only.
#[derive(Clone, Serialize, Deserialize)]
#[serde(try_from = "DemandLaw", into = "DemandLaw")]
pub struct DemandDistribution {
    law: DemandLaw,
    atoms: Option<Arc<Atoms>>,
}

impl fmt::Debug for DemandDistribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.law.fmt(f)
    }
}

impl PartialEq for DemandDistribution {
    fn eq(&self, other: &Self) -> bool {
        self.law == other.law
    }
}

impl TryFrom<DemandLaw> for DemandDistribution {
    type Error = Error;

    fn try_from(law: DemandLaw) -> Result<Self> {
        Self::new(law)
    }
}

impl From<DemandDistribution> for DemandLaw {
    fn from(d: DemandDistribution) -> Self {
        d.law
    }
}

impl DemandDistribution {
    pub fn new(law: DemandLaw) -> Result<Self> {
        law.validate()?;
        let atoms = match law {
            DemandLaw::Constant { value } => Some(Atoms::from_points(vec![(value, 1.0)])),
            DemandLaw::TwoPoint { k } => {
                Some(Atoms::from_points(vec![(0.0, (k - 1.0) / k), (k, 1.0 / k)]))
            }
            DemandLaw::Binomial { n, p } => Some(binomial_atoms(n, p)),
            DemandLaw::Poisson { lambda } => Some(poisson_atoms(lambda)),
            DemandLaw::Empirical {
                ref values,
                ref probabilities,
            } => Some(Atoms::from_points(
                values
                    .iter()
                    .copied()
                    .zip(probabilities.iter().copied())
                    .collect(),
            )),
            DemandLaw::Normal { .. } | DemandLaw::Exponential { .. } => None,
        };
        Ok(DemandDistribution {
            law,
            atoms: atoms.map(Arc::new),
        })
    }

    pub fn constant(value: f64) -> Result<Self> {
        Self::new(DemandLaw::Constant { value })
    }

    pub fn two_point(k: f64) -> Result<Self> {
        Self::new(DemandLaw::TwoPoint { k })
    }

    pub fn binomial(n: u64, p: f64) -> Result<Self> {
        Self::new(DemandLaw::Binomial { n, p })
    }

    pub fn poisson(lambda: f64) -> Result<Self> {
        Self::new(DemandLaw::Poisson { lambda })
    }

    pub fn normal(mu: f64, sigma: f64) -> Result<Self> {
        Self::new(DemandLaw::Normal { mu, sigma })
    }

    pub fn exponential(mean: f64) -> Result<Self> {
        Self::new(DemandLaw::Exponential { mean })
    }

    /// Empirical law from `(value, probability)` pairs.
    pub fn empirical(atoms: &[(f64, f64)]) -> Result<Self> {
        Self::new(DemandLaw::Empirical {
            values: atoms.iter().map(|a| a.0).collect(),
            probabilities: atoms.iter().map(|a| a.1).collect(),
        })
    }

    pub fn law(&self) -> &DemandLaw {
        &self.law
    }

    pub fn family(&self) -> Family {
        self.law.family()
    }

    pub fn mean(&self) -> f64 {
        match self.law {
            DemandLaw::Constant { value } => value,
            DemandLaw::TwoPoint { .. } => 1.0,
            DemandLaw::Binomial { n, p } => n as f64 * p,
            DemandLaw::Poisson { lambda } => lambda,
            DemandLaw::Normal { mu, .. } => mu,
            DemandLaw::Exponential { mean } => mean,
            DemandLaw::Empirical {
                ref values,
                ref probabilities,
            } => values.iter().zip(probabilities).map(|(v, p)| v * p).sum(),
        }
    }

    /// Pr[C <= x]; right-continuous steps for discrete laws.
    pub fn cdf(&self, x: f64) -> f64 {
        if let Some(atoms) = &self.atoms {
            return atoms.cdf(x);
        }
        match self.law {
            DemandLaw::Normal { mu, sigma } => std_normal_cdf((x - mu) / sigma),
            DemandLaw::Exponential { mean } => {
                if x <= 0.0 {
                    0.0
                } else {
                    -(-x / mean).exp_m1()
                }
            }
            _ => unreachable!("discrete laws are tabulated"),
        }
    }

    /// Pr[C > x].
    pub fn survival(&self, x: f64) -> f64 {
        if let Some(atoms) = &self.atoms {
            return atoms.survival(x);
        }
        match self.law {
            DemandLaw::Normal { mu, sigma } => std_normal_sf((x - mu) / sigma),
            DemandLaw::Exponential { mean } => {
                if x <= 0.0 {
                    1.0
                } else {
                    (-x / mean).exp()
                }
            }
            _ => unreachable!("discrete laws are tabulated"),
        }
    }

    /// Smallest `x` with `cdf(x) >= p`, for `p` in (0, 1).
    pub fn quantile(&self, p: f64) -> Result<f64> {
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "quantile level must lie in (0, 1), got {p}"
            )));
        }
        Ok(self.quantile_unchecked(p))
    }

    pub(crate) fn quantile_unchecked(&self, p: f64) -> f64 {
        if let Some(atoms) = &self.atoms {
            return atoms.quantile(p);
        }
        match self.law {
            DemandLaw::Normal { mu, sigma } => {
                let x = mu - sigma * SQRT_2 * erfc_inv(2.0 * p);
                // One Newton step against the lower tail.
                let z = (x - mu) / sigma;
                let density = std_normal_pdf(z) / sigma;
                if density > 0.0 && p <= 0.5 {
                    x - (std_normal_cdf(z) - p) / density
                } else if density > 0.0 {
                    x + (std_normal_sf(z) - (1.0 - p)) / density
                } else {
                    x
                }
            }
            DemandLaw::Exponential { mean } => -mean * (-p).ln_1p(),
            _ => unreachable!("discrete laws are tabulated"),
        }
    }

    /// Smallest `v >= 0` with `survival(v) <= tau`.
    ///
    /// Computed from the upper tail, so it stays accurate for tiny `tau`
    /// where `quantile(1 - tau)` would lose all precision.
    pub fn survival_inverse(&self, tau: f64) -> f64 {
        if tau >= 1.0 {
            return 0.0;
        }
        if let Some(atoms) = &self.atoms {
            return atoms.survival_inverse(tau);
        }
        if tau <= 0.0 {
            return f64::INFINITY;
        }
        match self.law {
            DemandLaw::Normal { mu, sigma } => {
                let x = mu + sigma * SQRT_2 * erfc_inv(2.0 * tau);
                let z = (x - mu) / sigma;
                let density = std_normal_pdf(z) / sigma;
                let x = if density > 0.0 {
                    x + (std_normal_sf(z) - tau) / density
                } else {
                    x
                };
                x.max(0.0)
            }
            DemandLaw::Exponential { mean } => (-mean * tau.ln()).max(0.0),
            _ => unreachable!("discrete laws are tabulated"),
        }
    }

    /// Largest point of the support (infinite for normal and exponential).
    pub fn support_max(&self) -> f64 {
        match &self.atoms {
            Some(atoms) => *atoms.values.last().unwrap(),
            None => f64::INFINITY,
        }
    }

    /// E[min(C, v)] for `v >= 0`.
    pub fn expected_min(&self, v: f64) -> Result<f64> {
        if !(v >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "allocation must be ≥ 0, got {v}"
            )));
        }
        Ok(self.expected_min_unchecked(v))
    }

    pub(crate) fn expected_min_unchecked(&self, v: f64) -> f64 {
        if let Some(atoms) = &self.atoms {
            // Suffix sums can exceed 1 by a few ulps.
            return atoms.expected_min(v).min(v).min(self.mean());
        }
        match self.law {
            DemandLaw::Normal { mu, sigma } => {
                if v == f64::INFINITY {
                    return mu;
                }
                // μ − σ·E[(X − t)^+] with t = (v − μ)/σ, folded so the
                // loss term is always evaluated at a nonnegative argument.
                let t = (v - mu) / sigma;
                if t >= 0.0 {
                    mu - sigma * std_normal_loss(t)
                } else {
                    v - sigma * std_normal_loss(-t)
                }
            }
            DemandLaw::Exponential { mean } => -mean * (-v / mean).exp_m1(),
            _ => unreachable!("discrete laws are tabulated"),
        }
    }

    /// Var[min(C, v)] for `v >= 0`, computed as the variance of the
    /// shortfall `(v − C)^+` so small tails do not cancel.
    pub fn variance_of_min(&self, v: f64) -> Result<f64> {
        if !(v >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "allocation must be ≥ 0, got {v}"
            )));
        }
        if let Some(atoms) = &self.atoms {
            let (mut m1, mut m2) = (0.0, 0.0);
            for (&x, &p) in atoms.values.iter().zip(&atoms.pmf) {
                if x >= v {
                    break;
                }
                m1 += (v - x) * p;
                m2 += (v - x) * (v - x) * p;
            }
            return Ok((m2 - m1 * m1).max(0.0));
        }
        let var = match self.law {
            DemandLaw::Normal { sigma, .. } if v == f64::INFINITY => sigma * sigma,
            DemandLaw::Normal { mu, sigma } => {
                // (v − C)^+ = σ(Z − a)^+ with a = (μ − v)/σ.
                let a = (mu - v) / sigma;
                let (pdf, sf) = (std_normal_pdf(a), std_normal_sf(a));
                let m1 = std_normal_loss(a);
                let m2 = (1.0 + a * a) * sf - a * pdf;
                sigma * sigma * (m2 - m1 * m1)
            }
            DemandLaw::Exponential { mean } if v == f64::INFINITY => mean * mean,
            DemandLaw::Exponential { mean } => {
                let u = v / mean;
                let m1 = -mean * (-u).exp_m1();
                let m2 = 2.0 * mean * mean * (-(-u).exp_m1() - u * (-u).exp());
                m2 - m1 * m1
            }
            _ => unreachable!("discrete laws are tabulated"),
        };
        Ok(var.max(0.0))
    }

    /// Probability mass function for discrete laws; `None` for continuous ones.
    pub fn pmf(&self, x: f64) -> Option<f64> {
        self.atoms.as_ref().map(|atoms| {
            let k = atoms.rank(x);
            if k > 0 && atoms.values[k - 1] == x {
                atoms.pmf[k - 1]
            } else {
                0.0
            }
        })
    }

    /// Support points and their probabilities for discrete laws.
    pub fn atoms(&self) -> Option<impl Iterator<Item = (f64, f64)> + '_> {
        self.atoms
            .as_ref()
            .map(|a| a.values.iter().copied().zip(a.pmf.iter().copied()))
    }

    /// Mass placed below zero (nonzero only for the normal model).
    pub fn negative_mass(&self) -> f64 {
        match self.law {
            DemandLaw::Normal { .. } => self.cdf(0.0),
            _ => 0.0,
        }
    }

    /// Builds a reusable sampler for this law.
    pub fn sampler(&self) -> Sampler {
        let inner = match self.law {
            DemandLaw::Constant { value } => SamplerKind::Constant(value),
            DemandLaw::TwoPoint { k } => SamplerKind::TwoPoint(k),
            DemandLaw::Binomial { n, p } => {
                SamplerKind::Binomial(rand_distr::Binomial::new(n, p).expect("validated"))
            }
            DemandLaw::Poisson { lambda } => {
                SamplerKind::Poisson(rand_distr::Poisson::new(lambda).expect("validated"))
            }
            DemandLaw::Normal { mu, sigma } => {
                SamplerKind::Normal(rand_distr::Normal::new(mu, sigma).expect("validated"))
            }
            DemandLaw::Exponential { mean } => {
                SamplerKind::Exponential(rand_distr::Exp::new(1.0 / mean).expect("validated"))
            }
            DemandLaw::Empirical { .. } => {
                SamplerKind::Atoms(Arc::clone(self.atoms.as_ref().unwrap()))
            }
        };
        Sampler(inner)
    }

    /// One draw from the law.
    pub fn sample(&self, rng: &mut RandomState) -> f64 {
        self.sampler().sample(rng)
    }
}

/// Prebuilt sampler for a [`DemandDistribution`].
#[derive(Debug, Clone)]
pub struct Sampler(SamplerKind);

#[derive(Debug, Clone)]
enum SamplerKind {
    Constant(f64),
    TwoPoint(f64),
    Binomial(rand_distr::Binomial),
    Poisson(rand_distr::Poisson<f64>),
    Normal(rand_distr::Normal<f64>),
    Exponential(rand_distr::Exp<f64>),
    Atoms(Arc<Atoms>),
}

impl Distribution<f64> for Sampler {
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match &self.0 {
            SamplerKind::Constant(c) => *c,
            SamplerKind::TwoPoint(k) => {
                if rng.random::<f64>() * k < 1.0 {
                    *k
                } else {
                    0.0
                }
            }
            SamplerKind::Binomial(d) => d.sample(rng) as f64,
            SamplerKind::Poisson(d) => d.sample(rng),
            SamplerKind::Normal(d) => d.sample(rng),
            SamplerKind::Exponential(d) => d.sample(rng),
            SamplerKind::Atoms(a) => a.sample(rng),
        }
    }
}
