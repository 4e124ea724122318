//! Period-by-period decomposition heuristics: the knapsack variant with its
//! budget switch and backtracking, and the three-level Gini variant.

mod engine;
mod gini;
mod knapsack;
mod master;
mod routing;

pub(crate) use engine::Engine;
pub use engine::Termination;
pub use gini::run_gini_decomposition;
pub use knapsack::run_knapsack_decomposition;
pub use master::{solve_master_period, MasterContext, MasterDecision};
pub use routing::{
    cheapest_pharmacy, checked_priority_split, gini_split, priority_split, priority_split_lp, solve_flow_subproblem,
    FlowOutcome, PrioritySplit, SplitRule, GINI_LP_LIMIT,
};

use crate::epidemic::EpidemicError;
use crate::equity::EquityError;
use crate::lp::LpError;
use crate::scenario::{Formulation, Scenario, ShapeError, Topology};
use thiserror::Error;

/// Supply-chain level at which routing failed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Echelon {
    Supplier,
    SubRegional,
    Center,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OptimizerError {
    #[error(transparent)]
    Shape(#[from] ShapeError),
    #[error(transparent)]
    Lp(#[from] LpError),
    #[error(transparent)]
    Epidemic(#[from] EpidemicError),
    #[error(transparent)]
    Equity(#[from] EquityError),
    #[error("no supplier capacity available in period {0}")]
    ZeroSupply(usize),
    #[error("master problem infeasible in period {0}")]
    MasterInfeasible(usize),
    #[error("routing infeasible at {echelon:?} level in period {period}: short by {deficit}")]
    Routing { echelon: Echelon, period: usize, deficit: f64 },
    #[error("optimality gap undefined for a zero incumbent")]
    ZeroIncumbent,
}

/// One period of a decomposition run.
#[derive(Debug, Clone, PartialEq)]
pub struct PeriodRecord {
    pub period: usize,
    /// Budget switch value used for the accepted solve.
    pub alpha: u8,
    pub attempts: usize,
    /// Accepted cost increment.
    pub cost_increment: f64,
    /// Cumulative cost after this period.
    pub cumulative_cost: f64,
    /// Per-dose cost estimate per region.
    pub unit_costs: Vec<f64>,
    /// Whether the period was planned after the main loop ended.
    pub tail: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecompositionDiagnostics {
    pub periods: Vec<PeriodRecord>,
    pub alpha_history: Vec<u8>,
    pub backtracks: usize,
    pub termination: Termination,
    /// Period at which the main loop ended, if before the horizon.
    pub stopped_at: Option<usize>,
    pub final_cost: f64,
    pub budget: f64,
    /// Greedy/simplex cross-checks performed.
    pub cross_checks: usize,
    /// Gap to an oracle optimum on the scalarized objective, in percent.
    pub optimality_gap: Option<f64>,
    /// Gap on the infection objective alone, in percent.
    pub infection_gap: Option<f64>,
    /// Gini variant only: unspent budget in units of the cheapest average dose.
    pub optimality_residual: Option<f64>,
}

/// A fresh engine using the split rule of the given formulation.
pub(crate) fn engine_for(s: &Scenario, formulation: Formulation) -> Result<Engine<'_>, OptimizerError> {
    let rule = match formulation {
        Formulation::Knapsack => {
            let delta = crate::equity::scenario_priority_weights(s)?.delta;
            SplitRule::Priority { delta, lambda: s.weights.lambda_reg }
        }
        Formulation::Gini => SplitRule::Gini,
    };
    Ok(Engine::new(s, formulation, rule))
}

/// Per-dose cost estimate of region `j` at `t`: capacity-weighted dose
/// price of the previous period plus average downstream transport and the
/// regional holding cost.
pub fn unit_cost_estimate(s: &Scenario, topo: &Topology, j: usize, t: usize) -> Result<f64, OptimizerError> {
    let prev = t.saturating_sub(1);
    let cap: f64 = s.supply.supplier_capacity.iter().map(|c| c[prev]).sum();
    if cap <= 0.0 {
        return Err(OptimizerError::ZeroSupply(prev));
    }
    let price: f64 =
        (0..topo.n_suppliers).map(|i| s.costs.dose_cost[i][t] * s.supply.supplier_capacity[i][prev]).sum::<f64>() / cap;
    Ok(price + logistics_cost(s, topo, j))
}

/// Average downstream transport plus regional holding cost of region `j`.
pub(crate) fn logistics_cost(s: &Scenario, topo: &Topology, j: usize) -> f64 {
    let subs = topo.region_subregions[j].clone();
    let n = subs.len().max(1) as f64;
    let g2 = subs.clone().map(|k| s.costs.transport_2[k]).sum::<f64>() / n;
    let g3 = subs
        .map(|k| {
            let ph = topo.subregion_pharmacies[k].clone();
            let m = ph.len().max(1) as f64;
            ph.map(|l| s.costs.transport_3[l]).sum::<f64>() / m
        })
        .sum::<f64>()
        / n;
    g2 + g3 + s.costs.holding_1[j]
}

/// `0` when the budget covers the estimate (boundary included), else `1`.
pub fn budget_switch(budget: f64, estimate: f64) -> u8 {
    if budget - estimate >= 0.0 {
        0
    } else {
        1
    }
}

/// `|heuristic − incumbent| / |incumbent|` in percent.
pub fn optimality_gap(heuristic: f64, incumbent: f64) -> Result<f64, OptimizerError> {
    if incumbent == 0.0 {
        return Err(OptimizerError::ZeroIncumbent);
    }
    Ok((heuristic - incumbent).abs() / incumbent.abs() * 100.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gap_examples() {
        assert_eq!(optimality_gap(105.0, 100.0).unwrap(), 5.0);
        assert_eq!(optimality_gap(100.0, 100.0).unwrap(), 0.0);
        assert_eq!(optimality_gap(97.0, 100.0).unwrap(), 3.0);
        assert!(optimality_gap(1.0, 0.0).is_err());
    }

    #[test]
    fn switch_examples() {
        assert_eq!(budget_switch(100.0, 50.0), 0);
        assert_eq!(budget_switch(100.0, 150.0), 1);
        assert_eq!(budget_switch(100.0, 100.0), 0);
    }
}
