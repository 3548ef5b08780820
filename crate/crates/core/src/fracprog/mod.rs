//! Maximin programs over the probability simplex.
//!
//! [`solve_maximin`] maximizes `min_j row_j . lambda`; [`solve_fractional`]
//! maximizes `min_j row_j . lambda / (costs . lambda)` by the change of
//! variables `y = lambda / (c . lambda)`, `z = 1 / (c . lambda)`, which turns
//! the ratio into the linear program
//!
//! ```text
//! max  min_j row_j . y   s.t.  1.y - z = 0,  c.y = 1,  y >= 0,  z >= 0
//! ```
//!
//! and recovers `lambda = y / z`. Because `z = 1.y`, `z` is substituted away.
//!
//! Both solvers break ties between optimal distributions by returning the
//! lexicographically smallest optimal `lambda`: after the optimal value is
//! known, `lambda_0`, `lambda_1`, ... are minimized in turn over the optimal
//! face.

mod lp;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{dot, Real};
use lp::{Constraint, LinearProgram, LpOutcome, Relation};

#[derive(Debug, Clone, PartialEq)]
pub struct MaximinProblem<T> {
    rows: Vec<Vec<T>>,
    num_actions: usize,
}

impl<T: Real> MaximinProblem<T> {
    pub fn new(rows: Vec<Vec<T>>) -> Result<Self> {
        let num_actions = rows.first().map_or(0, Vec::len);
        validate_rows(&rows, num_actions)?;
        Ok(Self { rows, num_actions })
    }

    pub fn rows(&self) -> &[Vec<T>] {
        &self.rows
    }

    pub fn num_actions(&self) -> usize {
        self.num_actions
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FractionalProblem<T> {
    rows: Vec<Vec<T>>,
    costs: Vec<T>,
}

impl<T: Real> FractionalProblem<T> {
    pub fn new(rows: Vec<Vec<T>>, costs: Vec<T>) -> Result<Self> {
        validate_rows(&rows, costs.len())?;
        if let Some(c) = costs.iter().find(|c| !(c.is_finite() && **c > T::zero())) {
            return Err(Error::Argument(format!("cost {c} is not strictly positive")));
        }
        Ok(Self { rows, costs })
    }

    pub fn rows(&self) -> &[Vec<T>] {
        &self.rows
    }

    pub fn costs(&self) -> &[T] {
        &self.costs
    }
}

fn validate_rows<T: Real>(rows: &[Vec<T>], num_actions: usize) -> Result<()> {
    if rows.is_empty() {
        return Err(Error::Argument("at least one objective row is required".into()));
    }
    if num_actions == 0 {
        return Err(Error::Argument("at least one action is required".into()));
    }
    for (j, row) in rows.iter().enumerate() {
        if row.len() != num_actions {
            return Err(Error::Argument(format!("row {j} has {} entries, expected {num_actions}", row.len())));
        }
        if row.iter().any(|v| !v.is_finite()) {
            return Err(Error::Argument(format!("row {j} has a non-finite entry")));
        }
    }
    if !rows.iter().flatten().any(|&v| v > T::zero()) {
        return Err(Error::Argument("no row has a strictly positive entry".into()));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    Optimal,
    /// The optimal value is zero: no distribution separates every row.
    Degenerate,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimplexSolution<T> {
    pub lambda: Vec<T>,
    pub value: T,
    pub status: SolveStatus,
}

/// Optimum of the linear program obtained from the fractional one.
#[derive(Debug, Clone, PartialEq)]
pub struct TransformedSolution<T> {
    pub y: Vec<T>,
    pub z: T,
    /// `min_j row_j . y`, equal to the ratio objective at `y / z`.
    pub value: T,
}

impl<T: Real> TransformedSolution<T> {
    pub fn lambda(&self) -> Vec<T> {
        self.y.iter().map(|&v| v / self.z).collect()
    }
}

/// `min_j row_j . lambda`.
pub fn maximin_objective<T: Real>(rows: &[Vec<T>], lambda: &[T]) -> T {
    rows.iter().map(|r| dot(r, lambda)).fold(T::infinity(), T::min)
}

/// `min_j row_j . lambda / (costs . lambda)`.
pub fn fractional_objective<T: Real>(rows: &[Vec<T>], costs: &[T], lambda: &[T]) -> T {
    maximin_objective(rows, lambda) / dot(costs, lambda)
}

/// Tolerance used to describe the optimal face during lexicographic refinement.
fn face_tolerance<T: Real>(value: T) -> T {
    T::solver_eps() * T::one().max(value.abs())
}

/// Epigraph LP over `(x, t+, t-)`: `max t+ - t-` s.t. `t+ - t- <= row_j . x`.
fn epigraph_constraints<T: Real>(rows: &[Vec<T>]) -> Vec<Constraint<T>> {
    let n = rows[0].len();
    rows.iter()
        .map(|r| {
            let mut coeffs: Vec<T> = r.iter().map(|&v| -v).collect();
            coeffs.push(T::one());
            coeffs.push(-T::one());
            debug_assert_eq!(coeffs.len(), n + 2);
            Constraint::new(coeffs, Relation::Le, T::zero())
        })
        .collect()
}

fn epigraph_objective<T: Real>(n: usize) -> Vec<T> {
    let mut objective = vec![T::zero(); n + 2];
    objective[n] = T::one();
    objective[n + 1] = -T::one();
    objective
}

fn expect_optimal<T: Real>(outcome: LpOutcome<T>, what: &str) -> Result<(Vec<T>, T)> {
    match outcome {
        LpOutcome::Optimal { x, value, .. } => Ok((x, value)),
        LpOutcome::Infeasible => Err(Error::Solver(format!("{what}: linear program reported infeasible"))),
        LpOutcome::Unbounded => Err(Error::Solver(format!("{what}: linear program reported unbounded"))),
    }
}

/// Clips tiny negatives to zero and renormalizes onto the simplex.
fn project_to_simplex<T: Real>(mut lambda: Vec<T>) -> Result<Vec<T>> {
    let slack = T::lit(1e-9).max(T::solver_eps() * T::lit(100.0));
    for v in lambda.iter_mut() {
        if *v < -slack {
            return Err(Error::Numeric(format!("solver returned a negative weight {v}")));
        }
        if *v < T::zero() {
            *v = T::zero();
        }
    }
    let total: T = lambda.iter().copied().sum();
    if !(total > T::zero()) {
        return Err(Error::Numeric("solver returned an all-zero distribution".into()));
    }
    Ok(lambda.into_iter().map(|v| v / total).collect())
}

/// Lexicographically minimizes `lambda` over the optimal face `{lambda in
/// simplex : face rows >= 0}`.
///
/// Each face row `g` encodes the linear condition `g . lambda >= 0`. The
/// coordinates are fixed one at a time and eliminated from later programs;
/// every stage is relaxed slightly so rounding cannot make it infeasible.
/// The relaxation starts at `tol` and is widened on failure. If no attempt
/// stays within its own relaxation of the face, `fallback` is returned.
fn lexicographic_refine<T: Real>(face: &[Vec<T>], tol: T, fallback: Vec<T>) -> Vec<T> {
    let n = fallback.len();
    let scale = face.iter().flatten().fold(T::one(), |m, v| m.max(v.abs()));
    let worst = |l: &[T]| face.iter().map(|g| dot(g, l)).fold(T::infinity(), T::min);
    let baseline = worst(&fallback).min(T::zero());
    let mut step = tol.max(T::solver_eps() * T::lit(3.0));
    let max_step = T::lit(1e-7).max(step);
    while step <= max_step {
        if let Some(fixed) = refine_with_step(face, n, step) {
            let allowed = baseline - step * T::from_usize_lossy(10 * n) * scale;
            // Weights that should vanish survive at the size of the relaxation.
            let floor = step * T::from_usize_lossy(2 * n);
            let snapped: Vec<T> = fixed.iter().map(|&v| if v <= floor { T::zero() } else { v }).collect();
            for candidate in [snapped, fixed] {
                let total: T = candidate.iter().copied().sum();
                if !(total > T::zero()) {
                    continue;
                }
                let candidate: Vec<T> = candidate.into_iter().map(|v| v / total).collect();
                if worst(&candidate) >= allowed {
                    return candidate;
                }
            }
        }
        step = step * T::lit(10.0);
    }
    fallback
}

fn refine_with_step<T: Real>(face: &[Vec<T>], n: usize, step: T) -> Option<Vec<T>> {
    let mut fixed: Vec<T> = Vec::with_capacity(n);
    for k in 0..n.saturating_sub(1) {
        let relax = step * T::from_usize_lossy(k + 1);
        let used: T = fixed.iter().copied().sum();
        let mut constraints: Vec<Constraint<T>> = face
            .iter()
            .map(|g| {
                let pinned: T = g[..k].iter().zip(&fixed).map(|(&a, &b)| a * b).sum();
                Constraint::new(g[k..].to_vec(), Relation::Ge, -relax - pinned)
            })
            .collect();
        constraints.push(Constraint::new(vec![T::one(); n - k], Relation::Eq, (T::one() - used).max(T::zero())));
        let mut objective = vec![T::zero(); n - k];
        objective[0] = -T::one();
        match lp::solve(&LinearProgram { objective, constraints }) {
            Ok(LpOutcome::Optimal { x, .. }) => fixed.push(x[0].max(T::zero())),
            _ => return None,
        }
    }
    let used: T = fixed.iter().copied().sum();
    fixed.push((T::one() - used).max(T::zero()));
    Some(fixed)
}

fn status_for<T: Real>(value: T) -> SolveStatus {
    if value <= T::solver_eps() {
        SolveStatus::Degenerate
    } else {
        SolveStatus::Optimal
    }
}

/// Maximizes `min_j row_j . lambda` over the probability simplex.
pub fn solve_maximin<T: Real>(p: &MaximinProblem<T>) -> Result<SimplexSolution<T>> {
    let n = p.num_actions;
    let mut constraints = epigraph_constraints(&p.rows);
    let mut simplex_row = vec![T::one(); n];
    simplex_row.extend([T::zero(), T::zero()]);
    constraints.push(Constraint::new(simplex_row, Relation::Eq, T::one()));
    let lp = LinearProgram { objective: epigraph_objective(n), constraints };
    let (x, value) = expect_optimal(lp::solve(&lp)?, "maximin")?;

    let face: Vec<Vec<T>> = p.rows.iter().map(|r| r.iter().map(|&v| v - value).collect()).collect();
    let refined = lexicographic_refine(&face, face_tolerance(value), project_to_simplex(x[..n].to_vec())?);
    let lambda = project_to_simplex(refined)?;
    let value = maximin_objective(&p.rows, &lambda);
    Ok(SimplexSolution { lambda, value, status: status_for(value) })
}

/// Solves the transformed LP in `(y, t)`; `z = 1 . y` is recovered afterwards.
pub fn solve_transformed<T: Real>(p: &FractionalProblem<T>) -> Result<TransformedSolution<T>> {
    let n = p.costs.len();
    let mut constraints = epigraph_constraints(&p.rows);
    let mut cost_row = p.costs.clone();
    cost_row.extend([T::zero(), T::zero()]);
    constraints.push(Constraint::new(cost_row, Relation::Eq, T::one()));
    let lp = LinearProgram { objective: epigraph_objective(n), constraints };
    let (x, _) = expect_optimal(lp::solve(&lp)?, "fractional")?;

    let y: Vec<T> = x[..n].iter().map(|&v| v.max(T::zero())).collect();
    let z: T = y.iter().copied().sum();
    if z.abs() < T::lit(1e-12) {
        return Err(Error::Numeric("transformed solution has z = 0".into()));
    }
    let value = maximin_objective(&p.rows, &y);
    Ok(TransformedSolution { y, z, value })
}

/// Maximizes `min_j row_j . lambda / (costs . lambda)` over the simplex.
pub fn solve_fractional<T: Real>(p: &FractionalProblem<T>) -> Result<SimplexSolution<T>> {
    let transformed = solve_transformed(p)?;
    let value = transformed.value;
    // Optimal face: row_j . lambda - value * costs . lambda >= 0.
    let face: Vec<Vec<T>> =
        p.rows.iter().map(|r| r.iter().zip(&p.costs).map(|(&d, &c)| d - value * c).collect()).collect();
    let refined = lexicographic_refine(&face, face_tolerance(value), project_to_simplex(transformed.lambda())?);
    let lambda = project_to_simplex(refined)?;
    let value = fractional_objective(&p.rows, &p.costs, &lambda);
    Ok(SimplexSolution { lambda, value, status: status_for(value) })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
    }

    #[test]
    fn single_row_puts_mass_on_argmax() {
        let s = solve_maximin(&MaximinProblem::new(vec![vec![1.0, 0.0]]).unwrap()).unwrap();
        assert!(close(&s.lambda, &[1.0, 0.0], 1e-12));
        assert!((s.value - 1.0).abs() < 1e-12);
        assert_eq!(s.status, SolveStatus::Optimal);
    }

    #[test]
    fn two_orthogonal_rows_mix_evenly() {
        let s = solve_maximin(&MaximinProblem::new(vec![vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap()).unwrap();
        assert!(close(&s.lambda, &[0.5, 0.5], 1e-9));
        assert!((s.value - 0.5).abs() < 1e-9);
    }

    #[test]
    fn unequal_rows_equalize() {
        let s = solve_maximin(&MaximinProblem::new(vec![vec![2.0, 0.0], vec![0.0, 1.0]]).unwrap()).unwrap();
        assert!(close(&s.lambda, &[1.0 / 3.0, 2.0 / 3.0], 1e-9));
        assert!((s.value - 2.0 / 3.0).abs() < 1e-9);
    }

    #[test]
    fn fractional_single_row_picks_best_ratio_vertex() {
        let p = FractionalProblem::new(vec![vec![4.0, 1.0]], vec![2.0, 1.0]).unwrap();
        let s = solve_fractional(&p).unwrap();
        assert!(close(&s.lambda, &[1.0, 0.0], 1e-9));
        assert!((s.value - 2.0).abs() < 1e-9);
    }

    #[test]
    fn fractional_mixing_example() {
        let p = FractionalProblem::new(vec![vec![1.0, 0.0], vec![0.0, 1.0]], vec![1.0, 3.0]).unwrap();
        let s = solve_fractional(&p).unwrap();
        assert!(close(&s.lambda, &[0.5, 0.5], 1e-9));
        assert!((s.value - 0.25).abs() < 1e-9);

        let t = solve_transformed(&p).unwrap();
        let lambda = t.lambda();
        assert!((lambda.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        assert!((fractional_objective(p.rows(), p.costs(), &lambda) - t.value).abs() < 1e-8);
    }

    #[test]
    fn unit_costs_reduce_to_maximin() {
        let rows = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
        let f = solve_fractional(&FractionalProblem::new(rows.clone(), vec![1.0, 1.0]).unwrap()).unwrap();
        let m = solve_maximin(&MaximinProblem::new(rows).unwrap()).unwrap();
        assert!(close(&f.lambda, &m.lambda, 1e-9));
        assert!((f.value - m.value).abs() < 1e-9);
    }

    #[test]
    fn ties_resolve_lexicographically() {
        // Any lambda gives value 1; smallest lexicographic point is e_last.
        let s = solve_maximin(&MaximinProblem::new(vec![vec![1.0, 1.0, 1.0]]).unwrap()).unwrap();
        assert!(close(&s.lambda, &[0.0, 0.0, 1.0], 1e-9));
        // Actions 0 and 2 are interchangeable; mass goes to 2.
        let s = solve_maximin(&MaximinProblem::new(vec![vec![3.0, 1.0, 3.0]]).unwrap()).unwrap();
        assert!(close(&s.lambda, &[0.0, 0.0, 1.0], 1e-9));
    }

    #[test]
    fn zero_row_gives_degenerate_zero_value() {
        let s = solve_maximin(&MaximinProblem::new(vec![vec![1.0, 2.0], vec![0.0, 0.0]]).unwrap()).unwrap();
        assert_eq!(s.value, 0.0);
        assert_eq!(s.status, SolveStatus::Degenerate);
    }

    #[test]
    fn invalid_problems_rejected() {
        assert!(MaximinProblem::<f64>::new(vec![]).is_err());
        assert!(MaximinProblem::new(vec![vec![0.0, 0.0]]).is_err());
        assert!(MaximinProblem::new(vec![vec![1.0, 0.0], vec![1.0]]).is_err());
        assert!(MaximinProblem::new(vec![vec![f64::NAN, 1.0]]).is_err());
        assert!(FractionalProblem::new(vec![vec![1.0, 0.0]], vec![1.0, 0.0]).is_err());
        assert!(FractionalProblem::new(vec![vec![1.0, 0.0]], vec![1.0]).is_err());
    }

    #[test]
    fn objective_helpers() {
        let rows: Vec<Vec<f64>> = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
        assert!((fractional_objective(&rows, &[1.0, 3.0], &[0.5, 0.5]) - 0.25).abs() < 1e-15);
        assert_eq!(fractional_objective(&rows, &[2.0, 3.0], &[1.0, 0.0]), 0.0);
        assert_eq!(fractional_objective(&[vec![0.0, 0.0]], &[2.0, 3.0], &[0.3, 0.7]), 0.0);
        let rows = vec![vec![4.0, 6.0], vec![5.0, 9.0]];
        assert_eq!(fractional_objective(&rows, &[2.0, 3.0], &[0.0, 1.0]), 6.0 / 3.0);
    }

    #[test]
    fn negative_rows_supported() {
        // min(-1 + 2 l0, 1 - 2 l0): optimum at l0 = 0.5 with value 0.
        let rows = vec![vec![1.0, -1.0], vec![-1.0, 1.0]];
        let s = solve_maximin(&MaximinProblem::new(rows.clone()).unwrap()).unwrap();
        assert!(close(&s.lambda, &[0.5, 0.5], 1e-9));
        let f = solve_fractional(&FractionalProblem::new(rows, vec![1.0, 1.0]).unwrap()).unwrap();
        assert!(close(&f.lambda, &[0.5, 0.5], 1e-9));
    }

    #[test]
    fn f32_solvers() {
        let s = solve_maximin(&MaximinProblem::<f32>::new(vec![vec![2.0, 0.0], vec![0.0, 1.0]]).unwrap()).unwrap();
        assert!((s.value - 2.0 / 3.0).abs() < 1e-4);
        let f = solve_fractional(
            &FractionalProblem::<f32>::new(vec![vec![1.0, 0.0], vec![0.0, 1.0]], vec![1.0, 3.0]).unwrap(),
        )
        .unwrap();
        assert!((f.value - 0.25).abs() < 1e-4);
    }
}
