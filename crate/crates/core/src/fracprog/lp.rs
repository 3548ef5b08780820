//! Dense two-phase tableau simplex with Bland's anti-cycling rule.
//!
//! Sized for the guiding-distribution programs: a few dozen constraints and
//! fewer than twenty structural variables. All variables are nonnegative.

use crate::error::{Error, Result};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Relation {
    Le,
    Ge,
    Eq,
}

#[derive(Debug, Clone)]
pub(crate) struct Constraint<T> {
    pub coeffs: Vec<T>,
    pub relation: Relation,
    pub rhs: T,
}

impl<T> Constraint<T> {
    pub fn new(coeffs: Vec<T>, relation: Relation, rhs: T) -> Self {
        Self { coeffs, relation, rhs }
    }
}

/// `maximize objective . x` subject to the constraints and `x >= 0`.
#[derive(Debug, Clone)]
pub(crate) struct LinearProgram<T> {
    pub objective: Vec<T>,
    pub constraints: Vec<Constraint<T>>,
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum LpOutcome<T> {
    Optimal { x: Vec<T>, value: T, degenerate: bool },
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum ColumnKind {
    Structural,
    Slack,
    Artificial,
}

struct Tableau<T> {
    /// `rows x (cols + 1)`; last column is the right-hand side.
    rows: Vec<Vec<T>>,
    /// Reduced costs `z_j - c_j`; last entry is the objective value.
    objective: Vec<T>,
    basis: Vec<usize>,
    kinds: Vec<ColumnKind>,
    iterations: usize,
    max_iterations: usize,
    eps: T,
    /// Smallest admissible pivot element.
    pivot_tol: T,
    feas_tol: T,
}

impl<T: Real> Tableau<T> {
    fn cols(&self) -> usize {
        self.kinds.len()
    }

    fn pivot(&mut self, row: usize, col: usize) {
        let p = self.rows[row][col];
        for v in self.rows[row].iter_mut() {
            *v = *v / p;
        }
        self.rows[row][col] = T::one();
        let pivot_row = self.rows[row].clone();
        for (r, other) in self.rows.iter_mut().enumerate() {
            if r == row {
                continue;
            }
            let f = other[col];
            if f != T::zero() {
                for (v, &pv) in other.iter_mut().zip(&pivot_row) {
                    *v = *v - f * pv;
                }
                other[col] = T::zero();
            }
        }
        let f = self.objective[col];
        if f != T::zero() {
            for (v, &pv) in self.objective.iter_mut().zip(&pivot_row) {
                *v = *v - f * pv;
            }
            self.objective[col] = T::zero();
        }
        self.basis[row] = col;
        self.clean();
    }

    /// Flushes rounding residue: tiny entries become zero and tiny negative
    /// right-hand sides, which are infeasible only through rounding, are clamped.
    fn clean(&mut self) {
        let rhs = self.cols();
        let zero_tol = self.eps * T::lit(1e-2);
        for row in self.rows.iter_mut() {
            for v in row[..rhs].iter_mut() {
                if v.abs() < zero_tol {
                    *v = T::zero();
                }
            }
            if row[rhs] < T::zero() && row[rhs] > -self.feas_tol {
                row[rhs] = T::zero();
            }
        }
        for v in self.objective[..rhs].iter_mut() {
            if v.abs() < zero_tol {
                *v = T::zero();
            }
        }
    }

    /// Iterates to optimality with Bland's rule. Returns `false` if unbounded.
    fn optimize(&mut self, allow_artificial: bool) -> Result<bool> {
        loop {
            let entering = (0..self.cols()).find(|&j| {
                (allow_artificial || self.kinds[j] != ColumnKind::Artificial) && self.objective[j] < -self.eps
            });
            let Some(col) = entering else {
                return Ok(true);
            };
            let rhs = self.cols();
            // Minimum ratio; among near-ties prefer the largest pivot element
            // for stability, then the smallest basic index.
            let mut min_ratio: Option<T> = None;
            for row in &self.rows {
                let a = row[col];
                if a > self.pivot_tol {
                    let ratio = row[rhs] / a;
                    min_ratio = Some(min_ratio.map_or(ratio, |m: T| m.min(ratio)));
                }
            }
            let leaving = min_ratio.and_then(|m| {
                let tie = self.eps * (T::one() + m.abs());
                let mut best: Option<(usize, T)> = None;
                for (r, row) in self.rows.iter().enumerate() {
                    let a = row[col];
                    if a > self.pivot_tol && row[rhs] / a <= m + tie {
                        best = match best {
                            Some((b, ba)) if ba > a || (ba == a && self.basis[b] < self.basis[r]) => Some((b, ba)),
                            _ => Some((r, a)),
                        };
                    }
                }
                best
            });
            let Some((row, _)) = leaving else {
                return Ok(false);
            };
            self.iterations += 1;
            if self.iterations > self.max_iterations {
                return Err(Error::Solver(format!("simplex exceeded {} iterations", self.max_iterations)));
            }
            self.pivot(row, col);
        }
    }
}

pub(crate) fn solve<T: Real>(lp: &LinearProgram<T>) -> Result<LpOutcome<T>> {
    let n = lp.objective.len();
    let m = lp.constraints.len();
    let eps = T::solver_eps();

    // Flip rows with negative right-hand sides.
    let normalized: Vec<(Vec<T>, Relation, T)> = lp
        .constraints
        .iter()
        .map(|c| {
            debug_assert_eq!(c.coeffs.len(), n);
            if c.rhs < T::zero() {
                let rel = match c.relation {
                    Relation::Le => Relation::Ge,
                    Relation::Ge => Relation::Le,
                    Relation::Eq => Relation::Eq,
                };
                (c.coeffs.iter().map(|&v| -v).collect(), rel, -c.rhs)
            } else {
                (c.coeffs.clone(), c.relation, c.rhs)
            }
        })
        .collect();

    let num_slack = normalized.iter().filter(|c| c.1 != Relation::Eq).count();
    let num_artificial = normalized.iter().filter(|c| c.1 != Relation::Le).count();
    let cols = n + num_slack + num_artificial;

    let mut kinds = vec![ColumnKind::Structural; n];
    kinds.extend(std::iter::repeat_n(ColumnKind::Slack, num_slack));
    kinds.extend(std::iter::repeat_n(ColumnKind::Artificial, num_artificial));

    let mut rows = Vec::with_capacity(m);
    let mut basis = Vec::with_capacity(m);
    let (mut next_slack, mut next_art) = (n, n + num_slack);
    for (coeffs, rel, rhs) in &normalized {
        let mut row = vec![T::zero(); cols + 1];
        row[..n].copy_from_slice(coeffs);
        row[cols] = *rhs;
        match rel {
            Relation::Le => {
                row[next_slack] = T::one();
                basis.push(next_slack);
                next_slack += 1;
            }
            Relation::Ge => {
                row[next_slack] = -T::one();
                next_slack += 1;
                row[next_art] = T::one();
                basis.push(next_art);
                next_art += 1;
            }
            Relation::Eq => {
                row[next_art] = T::one();
                basis.push(next_art);
                next_art += 1;
            }
        }
        rows.push(row);
    }

    let size = n + m;
    let mut tab = Tableau {
        rows,
        objective: vec![T::zero(); cols + 1],
        basis,
        kinds,
        iterations: 0,
        max_iterations: 10 * size * size,
        eps,
        pivot_tol: eps.max(T::lit(1e-9)),
        feas_tol: (eps * T::lit(10.0)).max(T::lit(1e-8)),
    };

    if num_artificial > 0 {
        // Phase 1: maximize -sum(artificials).
        for j in n + num_slack..cols {
            tab.objective[j] = T::one();
        }
        for r in 0..m {
            if tab.kinds[tab.basis[r]] == ColumnKind::Artificial {
                for j in 0..=cols {
                    tab.objective[j] = tab.objective[j] - tab.rows[r][j];
                }
            }
        }
        tab.optimize(true)?;
        let scale = T::one() + normalized.iter().fold(T::zero(), |acc, c| acc.max(c.2));
        if tab.objective[cols] < -eps * scale {
            return Ok(LpOutcome::Infeasible);
        }
        // Drive artificial variables out of the basis; drop redundant rows.
        let mut r = 0;
        while r < tab.rows.len() {
            if tab.kinds[tab.basis[r]] == ColumnKind::Artificial {
                let col = (0..cols)
                    .filter(|&j| tab.kinds[j] != ColumnKind::Artificial)
                    .max_by(|&a, &b| {
                        tab.rows[r][a]
                            .abs()
                            .partial_cmp(&tab.rows[r][b].abs())
                            .unwrap_or(std::cmp::Ordering::Equal)
                            .then(b.cmp(&a))
                    })
                    .filter(|&j| tab.rows[r][j].abs() > tab.pivot_tol);
                match col {
                    Some(j) => {
                        // The artificial sits at zero up to rounding; make it exact
                        // so the pivot cannot push other rows negative.
                        tab.rows[r][cols] = T::zero();
                        tab.pivot(r, j)
                    }
                    None => {
                        tab.rows.remove(r);
                        tab.basis.remove(r);
                        continue;
                    }
                }
            }
            r += 1;
        }
    }

    // Phase 2.
    tab.objective = vec![T::zero(); cols + 1];
    for (j, &c) in lp.objective.iter().enumerate() {
        tab.objective[j] = -c;
    }
    for r in 0..tab.rows.len() {
        let b = tab.basis[r];
        let f = tab.objective[b];
        if f != T::zero() {
            for j in 0..=cols {
                tab.objective[j] = tab.objective[j] - f * tab.rows[r][j];
            }
        }
    }
    if !tab.optimize(false)? {
        return Ok(LpOutcome::Unbounded);
    }

    let mut x = vec![T::zero(); n];
    let mut degenerate = false;
    for (r, &b) in tab.basis.iter().enumerate() {
        let v = tab.rows[r][cols];
        if v.abs() <= eps {
            degenerate = true;
        }
        if b < n {
            x[b] = v;
        }
    }
    let value = lp.objective.iter().zip(&x).fold(T::zero(), |acc, (&c, &v)| acc + c * v);
    Ok(LpOutcome::Optimal { x, value, degenerate })
}
