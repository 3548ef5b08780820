//! Asymptotic bounds on the expected number of samples and the expected
//! total cost, as functions of the error target `delta`.
//!
//! All rates are in bits, so every bound is driven by `log2(1 / delta)`.
//!
//! - Full universal lower bound (samples), with free parameter `eta` and LLR
//!   second-moment bound `beta`:
//!   `(1/H) sum_i (1 - eta) log2(1/delta) / (max I_i + eta) * (1 - 2 (H-1) H delta^eta) - (H-1) beta / eta^2`
//! - Its dominating term (samples): `(1/H) sum_i log2(1/delta) / max I_i`.
//! - Cost form of the dominating term: `(1/H) sum_i log2(1/delta) / max_lambda [I_i / c.lambda]`.
//! - Chernoff upper bound (cost): `E[c_A] (1 + eps) (1/H) sum_i log2(1/delta) / I_i(lambda_i*)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fracprog::maximin_objective;
use crate::model::KldTensor;
use crate::policies::{solve_hypothesis, GuidingPolicy, Scheme};
use crate::scalar::{dot, Real};

/// How the free lower-bound parameter `eta` is chosen for each `delta`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum EtaRule {
    /// `eta = log2(1/delta)^(-1/3)`: vanishes while `eta^2 log2(1/delta)` diverges.
    #[default]
    CubeRoot,
    Fixed(f64),
}

/// Largest `eta` used; the cube-root rule exceeds 1 once `delta > 1/2`.
const ETA_MAX: f64 = 0.999;

impl EtaRule {
    pub fn eta<T: Real>(&self, delta: T) -> T {
        let raw = match self {
            EtaRule::CubeRoot => (T::one() / delta).log2().powf(-T::one() / T::lit(3.0)),
            EtaRule::Fixed(v) => T::lit(*v),
        };
        raw.min(T::lit(ETA_MAX))
    }

    pub fn describe(&self) -> String {
        match self {
            EtaRule::CubeRoot => format!("eta = min(log2(1/delta)^(-1/3), {ETA_MAX})"),
            EtaRule::Fixed(v) => format!("eta = {v}"),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            EtaRule::Fixed(v) if !(*v > 0.0 && *v < 1.0) => {
                Err(Error::Argument(format!("fixed eta {v} must lie in (0, 1)")))
            }
            _ => Ok(()),
        }
    }
}

/// `I_i(lambda) = min_{j != i} sum_a lambda[a] D(f_i^a || f_j^a)` in bits/sample.
pub fn information_rate<T: Real>(tensor: &KldTensor<T>, lambda: &[T], i: usize) -> T {
    (0..tensor.num_hypotheses()).filter(|&j| j != i).map(|j| dot(tensor.row(i, j), lambda)).fold(T::infinity(), T::min)
}

/// `max_lambda I_i(lambda)` for every hypothesis.
pub fn max_information_rates<T: Real>(tensor: &KldTensor<T>) -> Result<Vec<T>> {
    let ones = vec![T::one(); tensor.num_actions()];
    (0..tensor.num_hypotheses())
        .map(|i| solve_hypothesis(tensor, &ones, Scheme::ClassicChernoff, i).map(|s| s.value))
        .collect()
}

/// `max_lambda I_i(lambda) / (c . lambda)` for every hypothesis.
pub fn max_cost_ratios<T: Real>(tensor: &KldTensor<T>, costs: &[T]) -> Result<Vec<T>> {
    (0..tensor.num_hypotheses())
        .map(|i| solve_hypothesis(tensor, costs, Scheme::CostAwareChernoff, i).map(|s| s.value))
        .collect()
}

fn log2_inv<T: Real>(delta: T) -> T {
    -delta.log2()
}

fn mean<T: Real>(values: impl Iterator<Item = T>, count: usize) -> T {
    values.fold(T::zero(), |a, v| a + v) / T::from_usize_lossy(count)
}

/// The three factors of the full lower bound; `value()` recombines them.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FullBoundTerms<T> {
    /// `(1/H) sum_i (1 - eta) log2(1/delta) / (max I_i + eta)`.
    pub leading: T,
    /// `1 - 2 (H - 1) H delta^eta`.
    pub confidence_factor: T,
    /// `(H - 1) beta / eta^2`, subtracted.
    pub correction: T,
}

impl<T: Real> FullBoundTerms<T> {
    pub fn value(&self) -> T {
        self.leading * self.confidence_factor - self.correction
    }
}

pub fn lower_bound_full_terms<T: Real>(max_rates: &[T], delta: T, eta: T, beta: T) -> FullBoundTerms<T> {
    let h = max_rates.len();
    let hf = T::from_usize_lossy(h);
    let l = log2_inv(delta);
    let leading = mean(max_rates.iter().map(|&r| (T::one() - eta) * l / (r + eta)), h);
    let two = T::lit(2.0);
    let confidence_factor = T::one() - two * (hf - T::one()) * hf * delta.powf(eta);
    let correction = (hf - T::one()) * beta / (eta * eta);
    FullBoundTerms { leading, confidence_factor, correction }
}

/// Full universal lower bound on the expected number of samples.
pub fn lower_bound_full<T: Real>(tensor: &KldTensor<T>, delta: T, eta: T, beta: T) -> Result<T> {
    let rates = max_information_rates(tensor)?;
    Ok(lower_bound_full_terms(&rates, delta, eta, beta).value())
}

/// Dominating term of the lower bound, in samples.
pub fn lower_bound_dominating_from_rates<T: Real>(max_rates: &[T], delta: T) -> T {
    let l = log2_inv(delta);
    mean(max_rates.iter().map(|&r| l / r), max_rates.len())
}

/// Per-hypothesis cost lower bounds `log2(1/delta) / max ratio_i`.
pub fn cost_dominating_terms<T: Real>(max_ratios: &[T], delta: T) -> Vec<T> {
    let l = log2_inv(delta);
    max_ratios.iter().map(|&r| l / r).collect()
}

pub fn lower_bound_cost_dominating_from_ratios<T: Real>(max_ratios: &[T], delta: T) -> T {
    let terms = cost_dominating_terms(max_ratios, delta);
    mean(terms.iter().copied(), terms.len())
}

/// Dominating lower bound on the expected total cost.
pub fn lower_bound_cost_dominating<T: Real>(tensor: &KldTensor<T>, costs: &[T], delta: T) -> Result<T> {
    Ok(lower_bound_cost_dominating_from_ratios(&max_cost_ratios(tensor, costs)?, delta))
}

/// `(1/H) sum_i c . lambda_i*`.
pub fn mean_cost_per_action<T: Real>(policy: &GuidingPolicy<T>, costs: &[T]) -> T {
    mean(policy.lambdas.iter().map(|l| dot(costs, l)), policy.lambdas.len())
}

/// Chernoff upper bound on the expected total cost for `policy`.
pub fn upper_bound_chernoff<T: Real>(
    tensor: &KldTensor<T>,
    policy: &GuidingPolicy<T>,
    costs: &[T],
    delta: T,
    epsilon: T,
) -> T {
    let h = tensor.num_hypotheses();
    let l = log2_inv(delta);
    let samples = mean((0..h).map(|i| l / information_rate(tensor, &policy.lambdas[i], i)), h);
    mean_cost_per_action(policy, costs) * (T::one() + epsilon) * samples
}

/// All bound curves on a `delta` grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundsReport<T> {
    pub delta_grid: Vec<T>,
    pub eta_values: Vec<T>,
    /// Full lower bound (samples); may be negative for large `delta`.
    pub lower_full: Vec<T>,
    /// Dominating lower bound (samples).
    pub lower_dominating: Vec<T>,
    /// Dominating lower bound (cost).
    pub lower_dominating_cost: Vec<T>,
    /// Chernoff upper bound (cost) of the evaluated policy.
    pub upper: Vec<T>,
    /// `[i][k]`: per-hypothesis cost lower bound at `delta_grid[k]`.
    pub per_hypothesis_terms: Vec<Vec<T>>,
    pub max_information_rates: Vec<T>,
    pub max_cost_ratios: Vec<T>,
    pub eta_rule: String,
    pub epsilon: T,
    pub beta: T,
    pub policy_scheme: Scheme,
    pub mean_cost_per_action: T,
}

/// Evaluates every bound on `delta_grid`; the upper bound uses `policy`.
pub fn bounds_report<T: Real>(
    tensor: &KldTensor<T>,
    policy: &GuidingPolicy<T>,
    costs: &[T],
    delta_grid: &[T],
    epsilon: T,
    eta_rule: EtaRule,
    beta: T,
) -> Result<BoundsReport<T>> {
    eta_rule.validate()?;
    if let Some(d) = delta_grid.iter().find(|d| !(**d > T::zero() && **d < T::one())) {
        return Err(Error::Argument(format!("delta {d} must lie in (0, 1)")));
    }
    if !(epsilon > T::zero()) {
        return Err(Error::Argument(format!("epsilon {epsilon} must be positive")));
    }
    if !(beta > T::zero()) {
        return Err(Error::Argument(format!("beta {beta} must be positive")));
    }
    let rates = max_information_rates(tensor)?;
    let ratios = max_cost_ratios(tensor, costs)?;
    let eta_values: Vec<T> = delta_grid.iter().map(|&d| eta_rule.eta(d)).collect();

    let lower_full = delta_grid
        .iter()
        .zip(&eta_values)
        .map(|(&d, &eta)| lower_bound_full_terms(&rates, d, eta, beta).value())
        .collect();
    let lower_dominating = delta_grid.iter().map(|&d| lower_bound_dominating_from_rates(&rates, d)).collect();
    let lower_dominating_cost =
        delta_grid.iter().map(|&d| lower_bound_cost_dominating_from_ratios(&ratios, d)).collect();
    let upper = delta_grid.iter().map(|&d| upper_bound_chernoff(tensor, policy, costs, d, epsilon)).collect();
    let per_hypothesis_terms =
        (0..tensor.num_hypotheses()).map(|i| delta_grid.iter().map(|&d| log2_inv(d) / ratios[i]).collect()).collect();

    Ok(BoundsReport {
        delta_grid: delta_grid.to_vec(),
        eta_values,
        lower_full,
        lower_dominating,
        lower_dominating_cost,
        upper,
        per_hypothesis_terms,
        max_information_rates: rates,
        max_cost_ratios: ratios,
        eta_rule: eta_rule.describe(),
        epsilon,
        beta,
        policy_scheme: policy.scheme,
        mean_cost_per_action: mean_cost_per_action(policy, costs),
    })
}

/// `I_i(lambda_i*) / (c . lambda_i*)` for each hypothesis of `policy`.
pub fn policy_cost_ratios<T: Real>(tensor: &KldTensor<T>, policy: &GuidingPolicy<T>, costs: &[T]) -> Vec<T> {
    policy
        .lambdas
        .iter()
        .enumerate()
        .map(|(i, l)| maximin_objective(&tensor.competitor_rows(i), l) / dot(costs, l))
        .collect()
}
