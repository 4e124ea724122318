//! Small linear programming toolkit: a dense bounded-variable simplex and a
//! greedy solver for single-constraint continuous knapsacks.

mod knapsack;
mod simplex;

pub use knapsack::{cross_check, knapsack_lp, solve_greedy_knapsack};
pub use simplex::{solve_lp, solve_lp_with};

use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Maximize,
    Minimize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RowSense {
    Le,
    Ge,
    Eq,
}

/// One sparse constraint row `coefs · x (<=|>=|=) rhs`.
#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub coefs: Vec<(usize, f64)>,
    pub sense: RowSense,
    pub rhs: f64,
}

impl Constraint {
    pub fn new(coefs: Vec<(usize, f64)>, sense: RowSense, rhs: f64) -> Self {
        Constraint { coefs, sense, rhs }
    }
}

/// Bounded linear program. Lower bounds must be finite, upper bounds may be
/// `f64::INFINITY`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearProgram {
    pub sense: Sense,
    pub objective: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub rows: Vec<Constraint>,
}

impl LinearProgram {
    /// Program over `n` variables bounded in `[0, inf)`.
    pub fn new(sense: Sense, objective: Vec<f64>) -> Self {
        let n = objective.len();
        LinearProgram { sense, objective, lower: vec![0.0; n], upper: vec![f64::INFINITY; n], rows: Vec::new() }
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn add_row(&mut self, coefs: Vec<(usize, f64)>, sense: RowSense, rhs: f64) {
        self.rows.push(Constraint::new(coefs, sense, rhs));
    }

    pub fn set_bounds(&mut self, var: usize, lower: f64, upper: f64) {
        self.lower[var] = lower;
        self.upper[var] = upper;
    }

    /// Objective value of `x` under this program's cost vector.
    pub fn evaluate(&self, x: &[f64]) -> f64 {
        self.objective.iter().zip(x).map(|(c, v)| c * v).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VarStatus {
    Basic,
    AtLower,
    AtUpper,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub status: LpStatus,
    /// Primal values; meaningful only when `status == Optimal`.
    pub x: Vec<f64>,
    pub objective: f64,
    /// Reduced costs in the problem's own sense: at an optimum of a
    /// maximization they are `<= 0` at lower bounds and `>= 0` at upper bounds.
    pub reduced_costs: Vec<f64>,
    pub var_status: Vec<VarStatus>,
    pub iterations: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimplexOptions {
    pub pivot_tol: f64,
    pub feasibility_tol: f64,
    pub max_iterations: usize,
    /// Consecutive degenerate pivots tolerated before switching to Bland's rule.
    pub degenerate_limit: usize,
}

impl Default for SimplexOptions {
    fn default() -> Self {
        SimplexOptions { pivot_tol: 1e-9, feasibility_tol: 1e-8, max_iterations: 200_000, degenerate_limit: 50 }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LpError {
    #[error("malformed program: {0}")]
    Malformed(String),
    #[error("iteration limit {0} reached")]
    IterationLimit(usize),
    #[error("knapsack infeasible: total {total} outside [{min}, {max}]")]
    KnapsackInfeasible { total: f64, min: f64, max: f64 },
    #[error("greedy objective {greedy} disagrees with simplex objective {simplex}")]
    CrossCheckMismatch { greedy: f64, simplex: f64 },
    #[error("simplex returned status {0:?} for a feasible knapsack")]
    CrossCheckStatus(LpStatus),
}
