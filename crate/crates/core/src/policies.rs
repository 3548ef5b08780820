//! Guiding action distributions for the three Chernoff-type schemes.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fracprog::{self, FractionalProblem, MaximinProblem, SimplexSolution};
use crate::model::{inverse_cdf, KldTensor};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    /// `argmax min_j E[D_ij]`.
    #[serde(alias = "classic")]
    ClassicChernoff,
    /// `argmax min_j E[D_ij] / E[c_A]`.
    #[serde(alias = "cost-aware")]
    CostAwareChernoff,
    /// `argmax min_j E[D_ij / c_A]`.
    BitPerBuck,
}

impl Scheme {
    pub const ALL: [Scheme; 3] = [Scheme::CostAwareChernoff, Scheme::ClassicChernoff, Scheme::BitPerBuck];

    pub fn name(self) -> &'static str {
        match self {
            Scheme::ClassicChernoff => "classic-chernoff",
            Scheme::CostAwareChernoff => "cost-aware-chernoff",
            Scheme::BitPerBuck => "bit-per-buck",
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "classic" | "classic-chernoff" => Ok(Scheme::ClassicChernoff),
            "cost-aware" | "cost-aware-chernoff" => Ok(Scheme::CostAwareChernoff),
            "bit-per-buck" | "bpb" => Ok(Scheme::BitPerBuck),
            other => {
                Err(Error::Argument(format!("unknown scheme '{other}' (expected classic, cost-aware or bit-per-buck)")))
            }
        }
    }
}

/// Per-hypothesis guiding distributions `lambda_i*` for one scheme.
///
/// `objective_values[i]` is the optimum in the scheme's own metric: the
/// maximin rate (bits/sample) for the classic scheme, the ratio value
/// (bits/cost) for the cost-aware scheme and the maximin of `D / c` for
/// bit-per-buck.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GuidingPolicy<T> {
    pub scheme: Scheme,
    pub lambdas: Vec<Vec<T>>,
    pub objective_values: Vec<T>,
}

impl<T: Real> GuidingPolicy<T> {
    pub fn num_hypotheses(&self) -> usize {
        self.lambdas.len()
    }

    /// Draws an action from `lambda_{leading}` by inverse-CDF sampling.
    #[inline]
    pub fn sample_action<R: Rng + ?Sized>(&self, leading_hypothesis: usize, rng: &mut R) -> usize {
        inverse_cdf(&self.lambdas[leading_hypothesis], T::unit_uniform(rng))
    }
}

/// Solves the guiding distribution of hypothesis `i` under `scheme`.
pub fn solve_hypothesis<T: Real>(
    tensor: &KldTensor<T>,
    costs: &[T],
    scheme: Scheme,
    i: usize,
) -> Result<SimplexSolution<T>> {
    let rows = tensor.competitor_rows(i);
    if rows.is_empty() {
        // A single hypothesis never needs to sample; any distribution works.
        return Err(Error::Argument("at least two hypotheses are required".into()));
    }
    let invalid = |e: Error| match e {
        Error::Argument(_) => Error::InvalidInstance { hypothesis: i },
        other => other,
    };
    match scheme {
        Scheme::ClassicChernoff => fracprog::solve_maximin(&MaximinProblem::new(rows).map_err(invalid)?),
        Scheme::BitPerBuck => {
            let scaled = rows.into_iter().map(|r| r.iter().zip(costs).map(|(&d, &c)| d / c).collect()).collect();
            fracprog::solve_maximin(&MaximinProblem::new(scaled).map_err(invalid)?)
        }
        Scheme::CostAwareChernoff => {
            fracprog::solve_fractional(&FractionalProblem::new(rows, costs.to_vec()).map_err(invalid)?)
        }
    }
}

pub fn compute_policy<T: Real>(tensor: &KldTensor<T>, costs: &[T], scheme: Scheme) -> Result<GuidingPolicy<T>> {
    if costs.len() != tensor.num_actions() {
        return Err(Error::Argument(format!("{} costs for {} actions", costs.len(), tensor.num_actions())));
    }
    let h = tensor.num_hypotheses();
    let mut lambdas = Vec::with_capacity(h);
    let mut objective_values = Vec::with_capacity(h);
    for i in 0..h {
        let sol = solve_hypothesis(tensor, costs, scheme, i)?;
        if !(sol.value > T::zero()) {
            return Err(Error::InvalidInstance { hypothesis: i });
        }
        lambdas.push(sol.lambda);
        objective_values.push(sol.value);
    }
    Ok(GuidingPolicy { scheme, lambdas, objective_values })
}
