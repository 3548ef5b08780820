//! Seeded, parallel Monte Carlo campaigns over schemes and error targets.
//!
//! Every trial owns a ChaCha8 stream keyed by the master seed and selected by
//! `(scheme, delta index, trial index)`, and per-cell aggregation walks the
//! trials in index order. Results are therefore identical for any number of
//! worker threads.

use nhsht_core::bounds::bounds_report;
use nhsht_core::engine::run_trial;
use nhsht_core::model::{build_kld_tensor, check_assumptions};
use nhsht_core::policies::compute_policy;
use nhsht_core::{
    AssumptionReportF64, BoundsReportF64, GuidingPolicyF64, KldTensorF64, ProblemInstanceF64, Scheme, Termination,
    TrialRecordF64,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::ExperimentConfig;
use crate::error::HarnessError;

/// Relative tolerance for the per-hypothesis cost decomposition check.
const ACCOUNTING_RTOL: f64 = 1e-9;

/// Stable per-scheme stream tag, independent of the order in the config.
fn scheme_tag(scheme: Scheme) -> u64 {
    match scheme {
        Scheme::ClassicChernoff => 0,
        Scheme::CostAwareChernoff => 1,
        Scheme::BitPerBuck => 2,
    }
}

/// Stream id `scheme (8 bits) | delta index (16 bits) | trial (40 bits)`.
pub fn stream_id(scheme: Scheme, delta_index: usize, trial: u64) -> u64 {
    debug_assert!(delta_index < 1 << 16 && trial < 1 << 40);
    (scheme_tag(scheme) << 56) | ((delta_index as u64) << 40) | trial
}

/// Independent random stream for one trial.
pub fn trial_rng(master_seed: u64, scheme: Scheme, delta_index: usize, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(stream_id(scheme, delta_index, trial));
    rng
}

/// Conditional statistics given the realised true hypothesis.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HypothesisStats {
    pub hypothesis: usize,
    pub trials: u64,
    pub mean_num_samples: f64,
    pub mean_total_cost: f64,
    pub mean_action_counts: Vec<f64>,
    /// `sum_a c_a mean(N_a) / mean(N)`: the empirical `E[c_A | theta]`.
    pub mean_cost_per_sample: f64,
    pub errors: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellResult {
    pub scheme: Scheme,
    pub delta_index: usize,
    pub delta: f64,
    pub trials: u64,
    pub mean_total_cost: f64,
    pub std_error: f64,
    pub mean_num_samples: f64,
    pub errors: u64,
    pub error_rate: f64,
    /// Average over observed hypotheses of the empirical `E[c_A | theta]`.
    pub mean_cost_per_sample: f64,
    /// `sum_i P^(theta = i) E^[N | i] E^[c_A | i]`, equal to `mean_total_cost`.
    pub decomposed_mean_cost: f64,
    pub capped_trials: u64,
    /// Set when any trial hit the sample cap.
    pub flagged: bool,
    pub per_hypothesis: Vec<HypothesisStats>,
}

#[derive(Debug, Clone, Serialize)]
pub struct CampaignResult {
    pub config: ExperimentConfig,
    #[serde(skip)]
    pub instance: ProblemInstanceF64,
    #[serde(skip)]
    pub tensor: KldTensorF64,
    pub assumptions: AssumptionReportF64,
    pub policies: Vec<GuidingPolicyF64>,
    pub cells: Vec<CellResult>,
    pub bounds: BoundsReportF64,
}

impl CampaignResult {
    pub fn cell(&self, scheme: Scheme, delta_index: usize) -> Option<&CellResult> {
        self.cells.iter().find(|c| c.scheme == scheme && c.delta_index == delta_index)
    }

    pub fn policy(&self, scheme: Scheme) -> Option<&GuidingPolicyF64> {
        self.policies.iter().find(|p| p.scheme == scheme)
    }
}

/// Instance, tensor, assumption report and every policy needed by a campaign.
pub struct Prepared {
    pub instance: ProblemInstanceF64,
    pub tensor: KldTensorF64,
    pub assumptions: AssumptionReportF64,
    pub policies: Vec<GuidingPolicyF64>,
    pub bounds: BoundsReportF64,
}

pub fn prepare(config: &ExperimentConfig) -> Result<Prepared, HarnessError> {
    let instance = config.instance.build()?;
    let tensor = build_kld_tensor(&instance)?;
    let assumptions = check_assumptions(&instance, &tensor);
    if !assumptions.is_ok() {
        return Err(HarnessError::Assumptions(Box::new(assumptions)));
    }
    let policies =
        config.schemes.iter().map(|&s| compute_policy(&tensor, instance.costs(), s)).collect::<Result<Vec<_>, _>>()?;
    let bound_policy = match policies.iter().find(|p| p.scheme == Scheme::CostAwareChernoff) {
        Some(p) => p.clone(),
        None => compute_policy(&tensor, instance.costs(), Scheme::CostAwareChernoff)?,
    };
    let bounds = bounds_report(
        &tensor,
        &bound_policy,
        instance.costs(),
        &config.delta_grid,
        config.epsilon,
        config.eta_rule,
        config.beta,
    )?;
    Ok(Prepared { instance, tensor, assumptions, policies, bounds })
}

/// Runs the trials of one `(scheme, delta)` cell, in trial order.
pub fn run_cell_trials(
    instance: &ProblemInstanceF64,
    policy: &GuidingPolicyF64,
    delta_index: usize,
    delta: f64,
    config: &ExperimentConfig,
) -> Result<Vec<TrialRecordF64>, HarnessError> {
    let h = instance.num_hypotheses();
    (0..config.trials_per_point)
        .into_par_iter()
        .map(|t| {
            let mut rng = trial_rng(config.master_seed, policy.scheme, delta_index, t);
            let theta = rng.random_range(0..h);
            run_trial(instance, policy, theta, delta, config.sample_cap, &mut rng).map_err(HarnessError::from)
        })
        .collect()
}

pub fn aggregate_cell(
    scheme: Scheme,
    delta_index: usize,
    delta: f64,
    costs: &[f64],
    num_hypotheses: usize,
    records: &[TrialRecordF64],
) -> Result<CellResult, HarnessError> {
    let num_actions = costs.len();
    let m = records.len() as u64;
    let mf = m as f64;

    let mut sum_cost = 0.0;
    let mut sum_n = 0u64;
    let mut errors = 0u64;
    let mut capped = 0u64;
    let mut hyp_trials = vec![0u64; num_hypotheses];
    let mut hyp_cost = vec![0.0; num_hypotheses];
    let mut hyp_n = vec![0u64; num_hypotheses];
    let mut hyp_errors = vec![0u64; num_hypotheses];
    let mut hyp_counts = vec![vec![0u64; num_actions]; num_hypotheses];
    for r in records {
        sum_cost += r.total_cost;
        sum_n += r.num_samples;
        errors += r.is_error() as u64;
        capped += (r.terminated_by == Termination::SampleCap) as u64;
        let i = r.true_theta;
        hyp_trials[i] += 1;
        hyp_cost[i] += r.total_cost;
        hyp_n[i] += r.num_samples;
        hyp_errors[i] += r.is_error() as u64;
        for (acc, &n) in hyp_counts[i].iter_mut().zip(&r.action_counts) {
            *acc += n;
        }
    }
    let mean_total_cost = sum_cost / mf;
    let std_error = if m > 1 {
        let var = records.iter().map(|r| (r.total_cost - mean_total_cost).powi(2)).sum::<f64>() / (mf - 1.0);
        (var / mf).sqrt()
    } else {
        0.0
    };

    let mut per_hypothesis = Vec::new();
    let mut decomposed = 0.0;
    for i in 0..num_hypotheses {
        let n_i = hyp_trials[i];
        if n_i == 0 {
            continue;
        }
        let nf = n_i as f64;
        let mean_counts: Vec<f64> = hyp_counts[i].iter().map(|&c| c as f64 / nf).collect();
        let mean_n = hyp_n[i] as f64 / nf;
        let mean_cost = hyp_cost[i] / nf;
        let via_counts: f64 = mean_counts.iter().zip(costs).map(|(n, c)| n * c).sum();
        if (via_counts - mean_cost).abs() > ACCOUNTING_RTOL * mean_cost.abs().max(1.0) {
            return Err(HarnessError::Accounting(format!(
                "{scheme} delta={delta} hypothesis {i}: sum_a c_a E[N_a] = {via_counts} but E[cost] = {mean_cost}"
            )));
        }
        let cost_per_sample = via_counts / mean_n;
        decomposed += (nf / mf) * mean_n * cost_per_sample;
        per_hypothesis.push(HypothesisStats {
            hypothesis: i,
            trials: n_i,
            mean_num_samples: mean_n,
            mean_total_cost: mean_cost,
            mean_action_counts: mean_counts,
            mean_cost_per_sample: cost_per_sample,
            errors: hyp_errors[i],
        });
    }
    if (decomposed - mean_total_cost).abs() > ACCOUNTING_RTOL * mean_total_cost.abs().max(1.0) {
        return Err(HarnessError::Accounting(format!(
            "{scheme} delta={delta}: decomposed mean {decomposed} differs from direct mean {mean_total_cost}"
        )));
    }
    let mean_cost_per_sample =
        per_hypothesis.iter().map(|s| s.mean_cost_per_sample).sum::<f64>() / per_hypothesis.len() as f64;

    Ok(CellResult {
        scheme,
        delta_index,
        delta,
        trials: m,
        mean_total_cost,
        std_error,
        mean_num_samples: sum_n as f64 / mf,
        errors,
        error_rate: errors as f64 / mf,
        mean_cost_per_sample,
        decomposed_mean_cost: decomposed,
        capped_trials: capped,
        flagged: capped > 0,
        per_hypothesis,
    })
}

/// Runs a validated campaign. `workers == 0` uses every available core.
pub fn run_campaign(config: &ExperimentConfig, workers: usize) -> Result<CampaignResult, HarnessError> {
    let config = config.clone().resolve()?;
    let Prepared { instance, tensor, assumptions, policies, bounds } = prepare(&config)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| HarnessError::Config(format!("cannot start worker pool: {e}")))?;

    let mut cells = Vec::with_capacity(policies.len() * config.delta_grid.len());
    for policy in &policies {
        for (k, &delta) in config.delta_grid.iter().enumerate() {
            let records = pool.install(|| run_cell_trials(&instance, policy, k, delta, &config))?;
            cells.push(aggregate_cell(policy.scheme, k, delta, instance.costs(), instance.num_hypotheses(), &records)?);
        }
    }
    Ok(CampaignResult { config, instance, tensor, assumptions, policies, cells, bounds })
}
