use super::{DecompositionDiagnostics, OptimizerError};
use crate::epidemic::Trajectory;
use crate::equity::{plan_equity_report, GiniReport};
use crate::scenario::{AllocationPlan, Formulation, Scenario};

/// Three-level variant: regional masters over time, a supplier routing
/// solve at fixed regional totals, and per-region splits minimizing the
/// pairwise per-capita gaps behind the Gini coefficient.
pub fn run_gini_decomposition(
    s: &Scenario,
) -> Result<(AllocationPlan, Trajectory, DecompositionDiagnostics, GiniReport), OptimizerError> {
    let (plan, traj, diag) = super::engine_for(s, Formulation::Gini)?.run()?;
    let report = plan_equity_report(s, &plan)?;
    Ok((plan, traj, diag, report))
}
