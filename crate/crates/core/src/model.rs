//! Problem instances, observation models and the KL-divergence tensor.
//!
//! Information quantities are in bits. Closed forms are evaluated in nats and
//! converted once with `1 / ln 2`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Default threshold (bits) separating "exactly zero" divergences from
/// strictly positive ones.
pub const DEFAULT_SEPARATION_FLOOR: f64 = 1e-9;

const CATEGORICAL_SUM_TOL: f64 = 1e-12;

/// Conditional law of one scalar sample under a (hypothesis, action) pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase")]
pub enum ObservationModel<T> {
    Gaussian { mean: T, variance: T },
    Categorical { probabilities: Vec<T> },
}

/// A single realised sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Observation<T> {
    Real(T),
    Symbol(usize),
}

impl<T: Real> ObservationModel<T> {
    pub fn gaussian(mean: T, variance: T) -> Result<Self> {
        let model = ObservationModel::Gaussian { mean, variance };
        model.validate()?;
        Ok(model)
    }

    pub fn categorical(probabilities: Vec<T>) -> Result<Self> {
        let model = ObservationModel::Categorical { probabilities };
        model.validate()?;
        Ok(model)
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            ObservationModel::Gaussian { mean, variance } => {
                if !mean.is_finite() {
                    return Err(Error::Model(format!("gaussian mean {mean} is not finite")));
                }
                if !(variance.is_finite() && *variance > T::zero()) {
                    return Err(Error::Model(format!(
                        "gaussian variance {variance} must be finite and strictly positive"
                    )));
                }
            }
            ObservationModel::Categorical { probabilities } => {
                if probabilities.is_empty() {
                    return Err(Error::Model("categorical alphabet is empty".into()));
                }
                if let Some(p) = probabilities.iter().find(|p| !(p.is_finite() && **p >= T::zero())) {
                    return Err(Error::Model(format!("categorical probability {p} is negative or not finite")));
                }
                let total: T = probabilities.iter().copied().sum();
                // f32 cannot resolve 1e-12; fall back to a few ulps there.
                let tol = T::lit(CATEGORICAL_SUM_TOL).max(T::epsilon() * T::lit(16.0));
                if (total - T::one()).abs() > tol {
                    return Err(Error::Model(format!("categorical probabilities sum to {total}, not 1")));
                }
            }
        }
        Ok(())
    }

    /// Alphabet size for categoricals, `None` for continuous families.
    pub fn alphabet_size(&self) -> Option<usize> {
        match self {
            ObservationModel::Gaussian { .. } => None,
            ObservationModel::Categorical { probabilities } => Some(probabilities.len()),
        }
    }

    fn family_name(&self) -> &'static str {
        match self {
            ObservationModel::Gaussian { .. } => "gaussian",
            ObservationModel::Categorical { .. } => "categorical",
        }
    }

    /// `true` when samples of `self` and `other` live in the same space.
    pub fn is_comparable(&self, other: &Self) -> bool {
        match (self, other) {
            (ObservationModel::Gaussian { .. }, ObservationModel::Gaussian { .. }) => true,
            (
                ObservationModel::Categorical { probabilities: p },
                ObservationModel::Categorical { probabilities: q },
            ) => p.len() == q.len(),
            _ => false,
        }
    }

    /// Natural-log density (or mass) at `x`.
    ///
    /// Returns `-inf` for a symbol outside the support, and an argument error
    /// when the observation kind does not match the family.
    #[inline]
    pub fn ln_pdf(&self, x: &Observation<T>) -> Result<T> {
        match (self, x) {
            (ObservationModel::Gaussian { mean, variance }, Observation::Real(v)) => {
                let d = *v - *mean;
                let two = T::lit(2.0);
                Ok(-(d * d) / (two * *variance) - (two * T::PI() * *variance).ln() / two)
            }
            (ObservationModel::Categorical { probabilities }, Observation::Symbol(s)) => probabilities
                .get(*s)
                .map(|p| p.ln())
                .ok_or_else(|| Error::Argument(format!("symbol {s} outside alphabet of size {}", probabilities.len()))),
            _ => Err(Error::Argument(format!(
                "observation {:?} does not belong to a {} model",
                x.kind(),
                self.family_name()
            ))),
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Observation<T> {
        match self {
            ObservationModel::Gaussian { mean, variance } => {
                Observation::Real(*mean + variance.sqrt() * T::standard_normal(rng))
            }
            ObservationModel::Categorical { probabilities } => {
                Observation::Symbol(inverse_cdf(probabilities, T::unit_uniform(rng)))
            }
        }
    }
}

impl<T> Observation<T> {
    fn kind(&self) -> &'static str {
        match self {
            Observation::Real(_) => "real",
            Observation::Symbol(_) => "symbol",
        }
    }
}

/// Index of the first cumulative weight exceeding `u`; never returns a
/// zero-weight index.
pub(crate) fn inverse_cdf<T: Real>(weights: &[T], u: T) -> usize {
    let mut cumulative = T::zero();
    for (k, &w) in weights.iter().enumerate() {
        cumulative = cumulative + w;
        if w > T::zero() && u < cumulative {
            return k;
        }
    }
    // Rounding left `u` above the final cumulative sum.
    weights.iter().rposition(|&w| w > T::zero()).unwrap_or(0)
}

/// KL divergence `D(p || q)` in bits.
pub fn kld<T: Real>(p: &ObservationModel<T>, q: &ObservationModel<T>) -> Result<T> {
    match (p, q) {
        (
            ObservationModel::Gaussian { mean: mp, variance: vp },
            ObservationModel::Gaussian { mean: mq, variance: vq },
        ) => {
            let two = T::lit(2.0);
            let d = *mp - *mq;
            let nats = (d * d + *vp - *vq) / (two * *vq) + (*vq / *vp).ln() / two;
            // Equal variances give an exact square; only clamp rounding residue.
            Ok(nats.max(T::zero()) / T::LN_2())
        }
        (ObservationModel::Categorical { probabilities: pp }, ObservationModel::Categorical { probabilities: qq }) => {
            if pp.len() != qq.len() {
                return Err(Error::Argument(format!(
                    "categorical alphabets differ in size ({} vs {})",
                    pp.len(),
                    qq.len()
                )));
            }
            let mut bits = T::zero();
            for (&pk, &qk) in pp.iter().zip(qq) {
                if pk > T::zero() {
                    if qk <= T::zero() {
                        return Err(Error::InfiniteDivergence { location: None });
                    }
                    bits = bits + pk * (pk / qk).log2();
                }
            }
            Ok(bits.max(T::zero()))
        }
        _ => {
            Err(Error::Argument(format!("cannot compare a {} model with a {} model", p.family_name(), q.family_name())))
        }
    }
}

/// Second moment of the natural-log likelihood ratio `ln(f_i / f_j)` under `f_i`.
pub fn llr_second_moment<T: Real>(fi: &ObservationModel<T>, fj: &ObservationModel<T>) -> Result<T> {
    match (fi, fj) {
        (
            ObservationModel::Gaussian { mean: mi, variance: vi },
            ObservationModel::Gaussian { mean: mj, variance: vj },
        ) => {
            // With x = mi + si z: llr = a + b z + c z^2, E = a^2 + b^2 + 3c^2 + 2ac.
            let two = T::lit(2.0);
            let half = T::lit(0.5);
            let delta = *mi - *mj;
            let a = (*vj / *vi).ln() * half + delta * delta / (two * *vj);
            let b = vi.sqrt() * delta / *vj;
            let c = *vi / (two * *vj) - half;
            Ok(a * a + b * b + T::lit(3.0) * c * c + two * a * c)
        }
        (ObservationModel::Categorical { probabilities: pp }, ObservationModel::Categorical { probabilities: qq }) => {
            if pp.len() != qq.len() {
                return Err(Error::Argument("categorical alphabets differ in size".into()));
            }
            let mut moment = T::zero();
            for (&pk, &qk) in pp.iter().zip(qq) {
                if pk > T::zero() {
                    if qk <= T::zero() {
                        return Err(Error::InfiniteDivergence { location: None });
                    }
                    let llr = (pk / qk).ln();
                    moment = moment + pk * llr * llr;
                }
            }
            Ok(moment)
        }
        _ => Err(Error::Argument("family mismatch".into())),
    }
}

/// Hypotheses x actions observation models with per-action costs and a prior.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProblemInstance<T> {
    costs: Vec<T>,
    /// `models[h][a]`.
    models: Vec<Vec<ObservationModel<T>>>,
    prior: Vec<T>,
}

impl<T: Real> ProblemInstance<T> {
    /// Builds an instance with a uniform prior.
    pub fn new(costs: Vec<T>, models: Vec<Vec<ObservationModel<T>>>) -> Result<Self> {
        let h = models.len();
        let prior = vec![T::one() / T::from_usize_lossy(h.max(1)); h];
        Self::with_prior(costs, models, prior)
    }

    pub fn with_prior(costs: Vec<T>, models: Vec<Vec<ObservationModel<T>>>, prior: Vec<T>) -> Result<Self> {
        let h = models.len();
        let num_actions = costs.len();
        if h == 0 {
            return Err(Error::Model("at least one hypothesis is required".into()));
        }
        if num_actions == 0 {
            return Err(Error::Model("at least one action is required".into()));
        }
        for (a, c) in costs.iter().enumerate() {
            if !(c.is_finite() && *c > T::zero()) {
                return Err(Error::Model(format!("cost of action {a} is {c}; costs must lie in (0, inf)")));
            }
        }
        for (i, row) in models.iter().enumerate() {
            if row.len() != num_actions {
                return Err(Error::Model(format!(
                    "hypothesis {i} has {} models but there are {num_actions} actions",
                    row.len()
                )));
            }
            for (a, m) in row.iter().enumerate() {
                m.validate().map_err(|e| Error::Model(format!("model (h={i}, a={a}): {e}")))?;
                if !m.is_comparable(&models[0][a]) {
                    return Err(Error::Model(format!(
                        "action {a}: hypothesis {i} uses a different family or alphabet than hypothesis 0"
                    )));
                }
            }
        }
        if prior.len() != h {
            return Err(Error::Model(format!("prior has {} entries for {h} hypotheses", prior.len())));
        }
        if prior.iter().any(|p| !(p.is_finite() && *p >= T::zero())) {
            return Err(Error::Model("prior entries must be finite and nonnegative".into()));
        }
        let total: T = prior.iter().copied().sum();
        if (total - T::one()).abs() > T::lit(1e-9).max(T::epsilon() * T::lit(64.0)) {
            return Err(Error::Model(format!("prior sums to {total}, not 1")));
        }
        Ok(Self { costs, models, prior })
    }

    pub fn num_hypotheses(&self) -> usize {
        self.models.len()
    }

    pub fn num_actions(&self) -> usize {
        self.costs.len()
    }

    pub fn costs(&self) -> &[T] {
        &self.costs
    }

    pub fn prior(&self) -> &[T] {
        &self.prior
    }

    #[inline]
    pub fn model(&self, hypothesis: usize, action: usize) -> &ObservationModel<T> {
        &self.models[hypothesis][action]
    }

    pub fn models(&self) -> &[Vec<ObservationModel<T>>] {
        &self.models
    }
}

/// `D(f_i^a || f_j^a)` for every `(i, j, a)`, in bits.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KldTensor<T> {
    num_hypotheses: usize,
    num_actions: usize,
    values: Vec<T>,
}

impl<T: Real> KldTensor<T> {
    /// Builds a tensor from `values[i][j][a]`. Diagonals must be zero and all
    /// entries finite and nonnegative.
    pub fn from_nested(values: Vec<Vec<Vec<T>>>) -> Result<Self> {
        let h = values.len();
        let num_actions = values.first().and_then(|r| r.first()).map_or(0, Vec::len);
        if h == 0 || num_actions == 0 {
            return Err(Error::Argument("tensor needs at least one hypothesis and one action".into()));
        }
        let mut flat = Vec::with_capacity(h * h * num_actions);
        for (i, plane) in values.into_iter().enumerate() {
            if plane.len() != h {
                return Err(Error::Argument(format!("tensor plane {i} has {} rows, expected {h}", plane.len())));
            }
            for (j, row) in plane.into_iter().enumerate() {
                if row.len() != num_actions {
                    return Err(Error::Argument(format!("tensor row ({i}, {j}) has wrong length")));
                }
                for (a, v) in row.iter().enumerate() {
                    if !(v.is_finite() && *v >= T::zero()) {
                        return Err(Error::Argument(format!("tensor entry ({i}, {j}, {a}) = {v}")));
                    }
                    if i == j && *v != T::zero() {
                        return Err(Error::Argument(format!("tensor diagonal ({i}, {i}, {a}) is nonzero")));
                    }
                }
                flat.extend(row);
            }
        }
        Ok(Self { num_hypotheses: h, num_actions, values: flat })
    }

    pub fn num_hypotheses(&self) -> usize {
        self.num_hypotheses
    }

    pub fn num_actions(&self) -> usize {
        self.num_actions
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize, action: usize) -> T {
        self.values[(i * self.num_hypotheses + j) * self.num_actions + action]
    }

    /// The vector `d_ij` over actions.
    #[inline]
    pub fn row(&self, i: usize, j: usize) -> &[T] {
        let start = (i * self.num_hypotheses + j) * self.num_actions;
        &self.values[start..start + self.num_actions]
    }

    /// Rows `d_ij` for every competitor `j != i`, in increasing `j`.
    pub fn competitor_rows(&self, i: usize) -> Vec<Vec<T>> {
        (0..self.num_hypotheses).filter(|&j| j != i).map(|j| self.row(i, j).to_vec()).collect()
    }
}

pub fn build_kld_tensor<T: Real>(inst: &ProblemInstance<T>) -> Result<KldTensor<T>> {
    let h = inst.num_hypotheses();
    let num_actions = inst.num_actions();
    let mut values = Vec::with_capacity(h * h * num_actions);
    for i in 0..h {
        for j in 0..h {
            for a in 0..num_actions {
                let v = if i == j {
                    T::zero()
                } else {
                    kld(inst.model(i, a), inst.model(j, a)).map_err(|e| match e {
                        Error::InfiniteDivergence { .. } => Error::InfiniteDivergence { location: Some((i, j, a)) },
                        other => Error::Model(format!("(i={i}, j={j}, a={a}): {other}")),
                    })?
                };
                if !v.is_finite() {
                    return Err(Error::InfiniteDivergence { location: Some((i, j, a)) });
                }
                values.push(v);
            }
        }
    }
    Ok(KldTensor { num_hypotheses: h, num_actions, values })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ViolationReason {
    /// Divergence is positive but below the separation floor.
    BelowSeparationFloor,
    /// No action separates the pair.
    Indistinguishable,
    /// The action has zero divergence between every pair.
    UninformativeAction,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    pub i: Option<usize>,
    pub j: Option<usize>,
    pub action: Option<usize>,
    pub reason: ViolationReason,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AssumptionReport<T> {
    pub separation_ok: bool,
    pub validity_ok: bool,
    /// Maximum second moment of the natural-log LLR.
    pub llr_second_moment_nats: T,
    /// Same bound for base-2 LLRs (`nats / ln^2 2`).
    pub llr_second_moment_bits: T,
    pub separation_floor: T,
    pub violations: Vec<Violation>,
}

impl<T: Real> AssumptionReport<T> {
    pub fn is_ok(&self) -> bool {
        self.separation_ok && self.validity_ok
    }
}

pub fn check_assumptions<T: Real>(inst: &ProblemInstance<T>, tensor: &KldTensor<T>) -> AssumptionReport<T> {
    check_assumptions_with_floor(inst, tensor, T::lit(DEFAULT_SEPARATION_FLOOR))
}

pub fn check_assumptions_with_floor<T: Real>(
    inst: &ProblemInstance<T>,
    tensor: &KldTensor<T>,
    floor: T,
) -> AssumptionReport<T> {
    let h = tensor.num_hypotheses();
    let num_actions = tensor.num_actions();
    let mut violations = Vec::new();
    let positive = |v: T| v >= floor;

    for i in 0..h {
        for j in 0..h {
            if i == j {
                continue;
            }
            for a in 0..num_actions {
                let v = tensor.get(i, j, a);
                if v != T::zero() && !positive(v) {
                    violations.push(Violation {
                        i: Some(i),
                        j: Some(j),
                        action: Some(a),
                        reason: ViolationReason::BelowSeparationFloor,
                    });
                }
            }
        }
    }
    let separation_ok = violations.is_empty();

    let mut validity_ok = true;
    for i in 0..h {
        for j in 0..h {
            if i != j && !tensor.row(i, j).iter().any(|&v| positive(v)) {
                validity_ok = false;
                violations.push(Violation {
                    i: Some(i),
                    j: Some(j),
                    action: None,
                    reason: ViolationReason::Indistinguishable,
                });
            }
        }
    }
    for a in 0..num_actions {
        let informative = (0..h).any(|i| (0..h).any(|j| i != j && positive(tensor.get(i, j, a))));
        if !informative {
            validity_ok = false;
            violations.push(Violation {
                i: None,
                j: None,
                action: Some(a),
                reason: ViolationReason::UninformativeAction,
            });
        }
    }

    let mut beta = T::zero();
    for i in 0..h {
        for j in 0..h {
            for a in 0..num_actions {
                // Tensor construction already rejected infinite divergences.
                if let Ok(m) = llr_second_moment(inst.model(i, a), inst.model(j, a)) {
                    beta = beta.max(m);
                }
            }
        }
    }

    AssumptionReport {
        separation_ok,
        validity_ok,
        llr_second_moment_nats: beta,
        llr_second_moment_bits: beta / (T::LN_2() * T::LN_2()),
        separation_floor: floor,
        violations,
    }
}
