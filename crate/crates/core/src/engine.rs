//! One sequential test: posterior recursion, guiding-distribution sampling
//! and the `max posterior > 1 - delta` stopping rule.
//!
//! Posteriors are kept as natural logs. Each update adds the per-hypothesis
//! log-likelihood of the new sample and subtracts the log-sum-exp, so the
//! state stays normalized without ever leaving the log domain.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::ProblemInstance;
use crate::policies::GuidingPolicy;
use crate::scalar::Real;

pub use crate::model::Observation;

/// Default cap on the number of samples in one trial.
pub const DEFAULT_SAMPLE_CAP: u64 = 1_000_000;

#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorState<T> {
    log_posteriors: Vec<T>,
    step: u64,
}

impl<T: Real> PosteriorState<T> {
    pub fn from_prior(prior: &[T]) -> Self {
        Self { log_posteriors: prior.iter().map(|p| p.ln()).collect(), step: 0 }
    }

    pub fn uniform(num_hypotheses: usize) -> Self {
        let v = -T::from_usize_lossy(num_hypotheses).ln();
        Self { log_posteriors: vec![v; num_hypotheses], step: 0 }
    }

    pub fn log_posteriors(&self) -> &[T] {
        &self.log_posteriors
    }

    pub fn posteriors(&self) -> Vec<T> {
        self.log_posteriors.iter().map(|v| v.exp()).collect()
    }

    pub fn step(&self) -> u64 {
        self.step
    }

    /// Most probable hypothesis; ties go to the smallest index.
    #[inline]
    pub fn leader(&self) -> usize {
        let mut best = 0;
        for (h, &v) in self.log_posteriors.iter().enumerate().skip(1) {
            if v > self.log_posteriors[best] {
                best = h;
            }
        }
        best
    }

    #[inline]
    pub fn max_log_posterior(&self) -> T {
        self.log_posteriors[self.leader()]
    }

    /// In-place Bayes update with a sample drawn under `action`.
    ///
    /// On error the state is left unnormalized and should be discarded.
    pub fn update(&mut self, action: usize, sample: &Observation<T>, inst: &ProblemInstance<T>) -> Result<()> {
        for (h, lp) in self.log_posteriors.iter_mut().enumerate() {
            *lp = *lp + inst.model(h, action).ln_pdf(sample)?;
        }
        let lead = self.leader();
        let peak = self.log_posteriors[lead];
        if !peak.is_finite() {
            return Err(Error::Numeric(format!(
                "sample {sample:?} under action {action} has zero likelihood under every hypothesis"
            )));
        }
        let rest = self
            .log_posteriors
            .iter()
            .enumerate()
            .filter(|&(h, _)| h != lead)
            .fold(T::zero(), |acc, (_, &v)| acc + (v - peak).exp());
        // Shift by the peak first so the leader keeps `-ln_1p(rest)` exactly
        // even when `rest` is far below the peak's ulp.
        let log_tail = rest.ln_1p();
        for lp in self.log_posteriors.iter_mut() {
            *lp = (*lp - peak) - log_tail;
        }
        self.step += 1;
        debug_assert!(
            (self.log_posteriors.iter().map(|v| v.exp()).sum::<T>() - T::one()).abs()
                <= T::lit(1e-9).max(T::epsilon() * T::lit(64.0)),
            "posterior lost normalization"
        );
        Ok(())
    }
}

/// Functional form of [`PosteriorState::update`].
pub fn update_posterior<T: Real>(
    state: &PosteriorState<T>,
    action: usize,
    sample: &Observation<T>,
    inst: &ProblemInstance<T>,
) -> Result<PosteriorState<T>> {
    let mut next = state.clone();
    next.update(action, sample, inst)?;
    Ok(next)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    PosteriorThreshold,
    SampleCap,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialRecord<T> {
    pub true_theta: usize,
    pub decision: usize,
    pub num_samples: u64,
    /// `sum_a costs[a] * action_counts[a]`.
    pub total_cost: T,
    pub action_counts: Vec<u64>,
    pub terminated_by: Termination,
}

impl<T> TrialRecord<T> {
    pub fn is_error(&self) -> bool {
        self.decision != self.true_theta
    }
}

/// Runs one sequential test with hypothesis `true_theta` generating the data.
///
/// At least one sample is always taken. The test stops as soon as the
/// largest posterior strictly exceeds `1 - delta`, or after `sample_cap`
/// samples.
pub fn run_trial<T: Real, R: Rng + ?Sized>(
    inst: &ProblemInstance<T>,
    policy: &GuidingPolicy<T>,
    true_theta: usize,
    delta: T,
    sample_cap: u64,
    rng: &mut R,
) -> Result<TrialRecord<T>> {
    let h = inst.num_hypotheses();
    let num_actions = inst.num_actions();
    if !(delta > T::zero() && delta < T::one()) {
        return Err(Error::Argument(format!("delta {delta} must lie in (0, 1)")));
    }
    if sample_cap == 0 {
        return Err(Error::Argument("sample cap must be at least 1".into()));
    }
    if true_theta >= h {
        return Err(Error::Argument(format!("true hypothesis {true_theta} out of range 0..{h}")));
    }
    if policy.num_hypotheses() != h || policy.lambdas.iter().any(|l| l.len() != num_actions) {
        return Err(Error::Argument("policy shape does not match the instance".into()));
    }

    let threshold = (-delta).ln_1p();
    let mut state = PosteriorState::from_prior(inst.prior());
    let mut counts = vec![0u64; num_actions];
    let terminated_by = loop {
        let action = policy.sample_action(state.leader(), rng);
        let sample = inst.model(true_theta, action).sample(rng);
        state.update(action, &sample, inst)?;
        counts[action] += 1;
        if state.max_log_posterior() > threshold {
            break Termination::PosteriorThreshold;
        }
        if state.step() >= sample_cap {
            break Termination::SampleCap;
        }
    };

    let total_cost = counts
        .iter()
        .zip(inst.costs())
        .fold(T::zero(), |acc, (&n, &c)| acc + c * T::from_u64(n).expect("count representable"));
    Ok(TrialRecord {
        true_theta,
        decision: state.leader(),
        num_samples: state.step(),
        total_cost,
        action_counts: counts,
        terminated_by,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{build_kld_tensor, ObservationModel};
    use crate::policies::{compute_policy, Scheme};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn g(m: f64) -> ObservationModel<f64> {
        ObservationModel::gaussian(m, 1.0).unwrap()
    }

    fn two_gaussians(m0: f64, m1: f64) -> ProblemInstance<f64> {
        ProblemInstance::new(vec![1.0], vec![vec![g(m0)], vec![g(m1)]]).unwrap()
    }

    #[test]
    fn identical_models_leave_posterior_unchanged() {
        let inst = ProblemInstance::new(vec![1.0, 1.0], vec![vec![g(0.0), g(5.0)], vec![g(3.0), g(5.0)]]).unwrap();
        let s0 = PosteriorState::from_prior(inst.prior());
        let s1 = update_posterior(&s0, 1, &Observation::Real(4.2), &inst).unwrap();
        for (a, b) in s0.log_posteriors().iter().zip(s1.log_posteriors()) {
            assert!((a - b).abs() < 1e-15);
        }
        assert_eq!(s1.step(), 1);
    }

    #[test]
    fn midpoint_sample_keeps_uniform_posterior() {
        let inst = two_gaussians(0.0, 2.0);
        let s = update_posterior(&PosteriorState::uniform(2), 0, &Observation::Real(1.0), &inst).unwrap();
        for p in s.posteriors() {
            assert!((p - 0.5).abs() < 1e-15);
        }
    }

    #[test]
    fn single_update_matches_probability_domain() {
        let inst = two_gaussians(0.0, 2.0);
        let s = update_posterior(&PosteriorState::uniform(2), 0, &Observation::Real(0.0), &inst).unwrap();
        // Probability domain: 0.5 f0(0) / (0.5 f0(0) + 0.5 f1(0)) = 1 / (1 + e^-2).
        let f = |x: f64, m: f64| (-(x - m) * (x - m) / 2.0).exp() / (2.0 * std::f64::consts::PI).sqrt();
        let direct = 0.5 * f(0.0, 0.0) / (0.5 * f(0.0, 0.0) + 0.5 * f(0.0, 2.0));
        let p0 = s.posteriors()[0];
        assert!((p0 - direct).abs() < 1e-12);
        assert!((p0 - 0.880_797_077_977_882_3).abs() < 1e-12);
    }

    #[test]
    fn zero_likelihood_everywhere_is_numeric_error() {
        let p = ObservationModel::categorical(vec![0.5, 0.5, 0.0]).unwrap();
        let q = ObservationModel::categorical(vec![0.5, 0.5, 0.0]).unwrap();
        let inst = ProblemInstance::new(vec![1.0], vec![vec![p], vec![q]]).unwrap();
        let err = update_posterior(&PosteriorState::uniform(2), 0, &Observation::Symbol(2), &inst).unwrap_err();
        assert!(matches!(err, Error::Numeric(_)));
    }

    #[test]
    fn leader_mass_keeps_precision_far_below_ulp() {
        // N(0,1) vs N(1,1): each sample at x = -10 shifts the log odds by 10.5 nats.
        let inst = two_gaussians(0.0, 1.0);
        let mut s = PosteriorState::uniform(2);
        for _ in 0..8 {
            s.update(0, &Observation::Real(-10.0), &inst).unwrap();
        }
        let log_odds: f64 = 8.0 * 10.5;
        let expected = -(-log_odds).exp().ln_1p();
        assert!(expected < 0.0 && expected > -1e-30);
        assert!((s.max_log_posterior() - expected).abs() <= 1e-12 * expected.abs());
        assert!((s.log_posteriors()[1] - (-log_odds - (-log_odds).exp().ln_1p())).abs() < 1e-9);
        assert!(s.max_log_posterior() <= (-1e-40f64).ln_1p());
    }

    #[test]
    fn leader_ties_break_low() {
        let s = PosteriorState::<f64>::uniform(4);
        assert_eq!(s.leader(), 0);
    }

    fn policy_for(inst: &ProblemInstance<f64>) -> GuidingPolicy<f64> {
        compute_policy(&build_kld_tensor(inst).unwrap(), inst.costs(), Scheme::ClassicChernoff).unwrap()
    }

    #[test]
    fn strongly_separated_pair_stops_fast_and_correctly() {
        let inst = two_gaussians(2.0, 8.0);
        let policy = policy_for(&inst);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let trials = 10_000;
        let mut errors = 0;
        let mut samples = 0;
        for t in 0..trials {
            let rec = run_trial(&inst, &policy, t % 2, 0.01, DEFAULT_SAMPLE_CAP, &mut rng).unwrap();
            errors += rec.is_error() as usize;
            samples += rec.num_samples;
            assert_eq!(rec.terminated_by, Termination::PosteriorThreshold);
        }
        assert!((errors as f64) / (trials as f64) < 0.01);
        assert!((samples as f64) / (trials as f64) < 1.2);
    }

    #[test]
    fn large_delta_stops_after_one_sample() {
        let inst = two_gaussians(0.0, 0.1);
        let policy = policy_for(&inst);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..200 {
            let rec = run_trial(&inst, &policy, 0, 0.6, DEFAULT_SAMPLE_CAP, &mut rng).unwrap();
            assert_eq!(rec.num_samples, 1);
        }
    }

    #[test]
    fn sample_cap_is_reported() {
        let inst = two_gaussians(0.0, 0.01);
        let policy = policy_for(&inst);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let rec = run_trial(&inst, &policy, 1, 1e-6, 5, &mut rng).unwrap();
        assert_eq!(rec.num_samples, 5);
        assert_eq!(rec.terminated_by, Termination::SampleCap);
    }

    #[test]
    fn cost_accounting_identity() {
        let inst = ProblemInstance::new(
            vec![1.0, 7.5, 30.0],
            vec![vec![g(0.0), g(0.0), g(1.0)], vec![g(0.5), g(1.5), g(1.0)], vec![g(0.5), g(0.0), g(-1.0)]],
        )
        .unwrap();
        let tensor = build_kld_tensor(&inst).unwrap();
        let policy = compute_policy(&tensor, inst.costs(), Scheme::CostAwareChernoff).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        for t in 0..500 {
            let rec = run_trial(&inst, &policy, t % 3, 1e-3, DEFAULT_SAMPLE_CAP, &mut rng).unwrap();
            assert_eq!(rec.action_counts.iter().sum::<u64>(), rec.num_samples);
            let dot: f64 = rec.action_counts.iter().zip(inst.costs()).map(|(&n, &c)| n as f64 * c).sum();
            assert_eq!(rec.total_cost, dot);
        }
    }

    #[test]
    fn invalid_arguments() {
        let inst = two_gaussians(0.0, 2.0);
        let policy = policy_for(&inst);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert!(run_trial(&inst, &policy, 0, 0.0, 10, &mut rng).is_err());
        assert!(run_trial(&inst, &policy, 0, 1.0, 10, &mut rng).is_err());
        assert!(run_trial(&inst, &policy, 0, 0.1, 0, &mut rng).is_err());
        assert!(run_trial(&inst, &policy, 2, 0.1, 10, &mut rng).is_err());
    }
}
