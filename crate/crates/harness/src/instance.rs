//! The Gaussian benchmark instance: 32 hypotheses, 16 actions.
//!
//! For every action a random half of the hypotheses gets nominal mean 2 and
//! the rest mean 8; each mean is then perturbed by uniform `[-0.1, 0.1]`
//! noise. Hypotheses 0 and 31 share every mean except on the last action,
//! where `mu_31 = 10 - mu_0`, so only the most expensive action tells them
//! apart. Costs are `(1, 10, 20, ..., 150)`.

use nhsht_core::model::{kld, DEFAULT_SEPARATION_FLOOR};
use nhsht_core::{ObservationModel, ProblemInstance};
use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const PAPER_HYPOTHESES: usize = 32;
pub const PAPER_ACTIONS: usize = 16;
pub const LOW_MEAN: f64 = 2.0;
pub const HIGH_MEAN: f64 = 8.0;
pub const DEFAULT_NOISE: f64 = 0.1;
const MIRROR_SUM: f64 = 10.0;

/// `(1, 10, 20, ..., 150)`.
pub fn paper_costs() -> Vec<f64> {
    (0..PAPER_ACTIONS).map(|a| if a == 0 { 1.0 } else { 10.0 * a as f64 }).collect()
}

/// Means `[h][a]` of the benchmark drawn from `seed` with the given noise
/// half-width.
///
/// A draw of one action's means is repeated when two distinct means land so
/// close that their divergence falls under the separation floor; exact ties
/// forced between hypotheses 0 and 31 are kept.
pub fn paper_means(seed: u64, noise: f64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let h = PAPER_HYPOTHESES;
    let last = h - 1;
    let mut means = vec![vec![0.0; PAPER_ACTIONS]; h];
    for a in 0..PAPER_ACTIONS {
        let column = loop {
            let mut column = vec![HIGH_MEAN; h];
            for k in index::sample(&mut rng, h, h / 2) {
                column[k] = LOW_MEAN;
            }
            if noise > 0.0 {
                for m in column.iter_mut() {
                    *m += rng.random_range(-noise..=noise);
                }
            }
            column[last] = if a + 1 < PAPER_ACTIONS { column[0] } else { MIRROR_SUM - column[0] };
            if well_separated(&column) {
                break column;
            }
        };
        for (row, m) in means.iter_mut().zip(column) {
            row[a] = m;
        }
    }
    means
}

fn well_separated(column: &[f64]) -> bool {
    for (i, &mi) in column.iter().enumerate() {
        for &mj in &column[i + 1..] {
            if mi == mj {
                continue;
            }
            let p = ObservationModel::Gaussian { mean: mi, variance: 1.0 };
            let q = ObservationModel::Gaussian { mean: mj, variance: 1.0 };
            if kld(&p, &q).map_or(true, |d| d < DEFAULT_SEPARATION_FLOOR) {
                return false;
            }
        }
    }
    true
}

pub fn instance_from_means(means: &[Vec<f64>], costs: Vec<f64>) -> nhsht_core::Result<ProblemInstance<f64>> {
    let models = means
        .iter()
        .map(|row| row.iter().map(|&m| ObservationModel::gaussian(m, 1.0)).collect())
        .collect::<nhsht_core::Result<Vec<Vec<_>>>>()?;
    ProblemInstance::new(costs, models)
}

pub fn generate_paper_instance_with_noise(seed: u64, noise: f64) -> ProblemInstance<f64> {
    instance_from_means(&paper_means(seed, noise), paper_costs()).expect("benchmark instance is valid by construction")
}

/// Benchmark instance with the default noise; the means are fixed by `seed`.
pub fn generate_paper_instance(seed: u64) -> ProblemInstance<f64> {
    generate_paper_instance_with_noise(seed, DEFAULT_NOISE)
}
