use super::{DecompositionDiagnostics, OptimizerError};
use crate::epidemic::Trajectory;
use crate::scenario::{AllocationPlan, Formulation, Scenario};

/// Plans period by period: a regional master LP, then a priority-weighted
/// sub-regional split and least-cost routing, with the budget switch and
/// one backtrack per period when the period's cost overshoots.
///
/// Once the main loop ends (budget band reached or a double overshoot)
/// the remaining periods are still planned and routed, under a hard cap
/// on what they may spend.
pub fn run_knapsack_decomposition(
    s: &Scenario,
) -> Result<(AllocationPlan, Trajectory, DecompositionDiagnostics), OptimizerError> {
    super::engine_for(s, Formulation::Knapsack)?.run()
}
